//! Minimum time-span schedules on time-invariant links.
//!
//! A schedule splits the transmission into forwarding time for each source
//! (`theta1`, `theta2`) and network-coded exchange time (`theta3`). Because
//! coding serves both directions at once, the span is minimised by coding the
//! whole common part `min(b1, b2)` and forwarding only the excess. Phase order
//! (sources first, then the relay) does not change the span.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rates::{forwarding_rates, Backlog, LinkCapacities};

/// Time allocations in slots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

impl Schedule {
    pub fn span(&self) -> f64 {
        time_span(self)
    }
}

pub fn time_span(schedule: &Schedule) -> f64 {
    schedule.theta1 + schedule.theta2 + schedule.theta3
}

/// Closed-form optimum: code for `min(b1,b2)/r_nc`, forward the remainder.
pub fn optimal_schedule(caps: LinkCapacities, backlog: Backlog) -> Schedule {
    let rates = forwarding_rates(caps);
    let common = backlog.min();
    Schedule {
        theta1: (backlog.b1() - common) / rates.r1,
        theta2: (backlog.b2() - common) / rates.r2,
        theta3: common / rates.r_nc,
    }
}

/// `max(b)/c1 + max(b)/c2 + min(b)/min(c1,c2)`.
pub fn closed_form_span(caps: LinkCapacities, backlog: Backlog) -> f64 {
    let hi = backlog.max();
    hi / caps.c1() + hi / caps.c2() + backlog.min() / caps.min()
}

/// Number of interior grid points scanned by [`lp_oracle`].
pub const ORACLE_GRID_POINTS: usize = 1001;

/// Feasible schedule with coded time `theta3`; forwarding times follow from
/// the delivery equalities and are clipped at zero.
pub fn schedule_at(caps: LinkCapacities, backlog: Backlog, theta3: f64) -> Schedule {
    let rates = forwarding_rates(caps);
    let coded = theta3 * rates.r_nc;
    Schedule {
        theta1: ((backlog.b1() - coded) / rates.r1).max(0.0),
        theta2: ((backlog.b2() - coded) / rates.r2).max(0.0),
        theta3,
    }
}

/// Objective of the time-span LP sampled at `points` evenly spaced values of
/// `theta3` over its feasible interval `[0, min(b1,b2)/r_nc]`, endpoints
/// included.
pub fn lp_objective_grid(
    caps: LinkCapacities,
    backlog: Backlog,
    points: usize,
) -> Vec<(f64, f64)> {
    let upper = backlog.min() / forwarding_rates(caps).r_nc;
    let steps = points.max(2) - 1;
    (0..=steps)
        .map(|i| {
            let theta3 = if i == steps {
                upper
            } else {
                upper * i as f64 / steps as f64
            };
            (theta3, time_span(&schedule_at(caps, backlog, theta3)))
        })
        .collect()
}

/// Solves the time-span LP without using the closed form.
///
/// After eliminating `theta1`, `theta2` through the equality constraints the
/// problem has a single free variable `theta3`, and the objective is affine
/// in it, so the optimum sits at an endpoint. The grid scan guards that
/// reasoning.
pub fn lp_oracle(caps: LinkCapacities, backlog: Backlog) -> Result<Schedule> {
    let best = lp_objective_grid(caps, backlog, ORACLE_GRID_POINTS)
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(theta3, _)| theta3)
        .unwrap_or(0.0);
    Ok(schedule_at(caps, backlog, best))
}
