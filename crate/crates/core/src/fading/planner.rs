//! Per-slot power planning by water filling over a virtual horizon.
//!
//! At each slot the relay water-fills its remaining budget over the current
//! slot plus `delta` future slots and grows `delta` until the plan covers the
//! remaining data. Only the current slot's power is committed. With causal
//! knowledge the future slots carry the mean effective gain; with noncausal
//! knowledge they carry the actual future gains.
//!
//! All quantities inside the planner are *stream bits*: one coded slot moves
//! `W T log2(1 + h p)` bits in each direction at once, one forwarding slot
//! moves that many bits in a single direction.

use serde::{Deserialize, Serialize};

use super::channel::{FadingConfig, PowerConfig};
use super::waterfill::{waterfill, waterfill_current_and_uniform, COVER_TOLERANCE};
use crate::error::{positive, Error, Result};

/// How far ahead the accepted plan looked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Horizon {
    /// Number of virtual future slots in the accepted plan.
    Finite(usize),
    /// Mean-valued future slots can never cover the data; the allocation is
    /// the limit of the procedure as the horizon grows without bound.
    Unbounded,
}

/// Committed decision for the current slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotPlan {
    pub power: f64,
    pub water_level: f64,
    pub horizon: Horizon,
    /// Stream bits this slot actually moves.
    pub stream_bits: f64,
}

/// Effective gains of the virtual future slots, indexed from 1.
pub trait FutureGains {
    fn effective_gain(&mut self, k: usize) -> f64;

    /// `Some(h)` when every future slot has gain `h`.
    fn uniform(&self) -> Option<f64> {
        None
    }
}

/// Every future slot at the same (mean) effective gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFuture(pub f64);

impl FutureGains for MeanFuture {
    fn effective_gain(&mut self, _k: usize) -> f64 {
        self.0
    }

    fn uniform(&self) -> Option<f64> {
        Some(self.0)
    }
}

impl<F: FnMut(usize) -> f64> FutureGains for F {
    fn effective_gain(&mut self, k: usize) -> f64 {
        self(k)
    }
}

/// What the current slot may deliver and what remains afterwards.
pub struct SlotDemand<'a> {
    /// Effective gain of the current slot in the chosen mode.
    pub current_gain: f64,
    /// Largest number of stream bits this slot can usefully move.
    pub cap: f64,
    /// Stream bits left for future slots after the current slot moves `y`.
    pub residual: &'a dyn Fn(f64) -> f64,
}

struct Evaluation {
    power: f64,
    level: f64,
    moved: f64,
    future_bits: f64,
}

/// Plans the current slot.
///
/// The first horizon whose future bits cover `residual(moved)` is accepted.
/// Coverage is monotone in the horizon (more slots at the same budget never
/// lower the optimum), so the search doubles the horizon and then bisects.
pub fn plan_slot(
    demand: &SlotDemand<'_>,
    future: &mut dyn FutureGains,
    budget: f64,
    cfg: &PowerConfig,
    max_horizon: usize,
) -> Result<SlotPlan> {
    positive("remaining budget", budget)?;
    positive("current effective gain", demand.current_gain)?;
    let uniform = future.uniform();
    let scale = (demand.residual)(0.0).max(demand.cap).max(f64::MIN_POSITIVE);
    let covers = |e: &Evaluation| {
        e.future_bits >= (demand.residual)(e.moved) - COVER_TOLERANCE * scale
    };
    let mut eval = |delta: usize| -> Result<Evaluation> {
        let (power, level, future_bits) = match uniform {
            Some(h) => {
                let (pc, pf, level) =
                    waterfill_current_and_uniform(demand.current_gain, h, delta, budget);
                (pc, level, delta as f64 * cfg.slot_bits(h, pf))
            }
            None => {
                let mut gains = Vec::with_capacity(delta + 1);
                gains.push(demand.current_gain);
                for k in 1..=delta {
                    gains.push(positive("future effective gain", future.effective_gain(k))?);
                }
                let alloc = waterfill(&gains, budget)?;
                let future_bits = gains[1..]
                    .iter()
                    .zip(&alloc.powers[1..])
                    .map(|(&h, &p)| cfg.slot_bits(h, p))
                    .sum();
                (alloc.powers[0], alloc.water_level, future_bits)
            }
        };
        let moved = cfg.slot_bits(demand.current_gain, power).min(demand.cap);
        Ok(Evaluation {
            power,
            level,
            moved,
            future_bits,
        })
    };

    let first = eval(0)?;
    if covers(&first) {
        return Ok(finish(demand, first, Horizon::Finite(0), cfg));
    }

    if let Some(h) = uniform {
        // Limit as delta -> infinity: the level sinks to 1/h, future slots
        // approach the linear regime and carry h * P_future / ln 2 per W T.
        let floor = 1.0 / h;
        let power = (floor - 1.0 / demand.current_gain).clamp(0.0, budget);
        let limit_bits = cfg.bandwidth_hz * cfg.slot_duration_s * h * (budget - power)
            / std::f64::consts::LN_2;
        let moved = cfg.slot_bits(demand.current_gain, power).min(demand.cap);
        if limit_bits <= (demand.residual)(moved) {
            // Never spend a larger share of the budget than the share of the
            // data the slot moves, so the budget cannot run dry first.
            let power = power.min(progress_power(demand, budget, cfg));
            let limit = Evaluation {
                power,
                level: floor.min(1.0 / demand.current_gain + budget),
                moved: cfg.slot_bits(demand.current_gain, power).min(demand.cap),
                future_bits: limit_bits,
            };
            return Ok(finish(demand, limit, Horizon::Unbounded, cfg));
        }
    }

    let mut lo = 0usize;
    let mut hi = 1usize;
    let mut hi_eval = loop {
        let e = eval(hi)?;
        if covers(&e) {
            break e;
        }
        lo = hi;
        hi = hi.saturating_mul(2);
        if hi > max_horizon {
            return Err(Error::SlotCapExceeded {
                what: "virtual horizon search",
                cap: max_horizon,
            });
        }
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let e = eval(mid)?;
        if covers(&e) {
            hi = mid;
            hi_eval = e;
        } else {
            lo = mid;
        }
    }
    Ok(finish(demand, hi_eval, Horizon::Finite(hi), cfg))
}

/// Largest `p <= budget` whose share of the budget does not exceed the share
/// of the workload it removes: `(w(0) - w(moved(p))) / w(0) >= p / budget`.
///
/// The removed workload is concave in `p` and zero at `p = 0`, so the test
/// holds on an interval starting at zero and bisection finds its right end.
fn progress_power(demand: &SlotDemand<'_>, budget: f64, cfg: &PowerConfig) -> f64 {
    let workload = (demand.residual)(0.0);
    if workload <= 0.0 {
        return budget;
    }
    let ahead = |p: f64| {
        let moved = cfg.slot_bits(demand.current_gain, p).min(demand.cap);
        (workload - (demand.residual)(moved)) * budget >= p * workload
    };
    if ahead(budget) {
        return budget;
    }
    let (mut lo, mut hi) = (0.0, budget);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ahead(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Trims the power to what the slot can actually use.
fn finish(demand: &SlotDemand<'_>, e: Evaluation, horizon: Horizon, cfg: &PowerConfig) -> SlotPlan {
    let needed = cfg.power_for_bits(demand.current_gain, demand.cap);
    let (power, stream_bits) = if e.power > needed {
        (needed, demand.cap)
    } else {
        (e.power, e.moved)
    };
    SlotPlan {
        power,
        water_level: e.level,
        horizon,
        stream_bits,
    }
}

/// Causal heuristic for a coded relay slot.
///
/// `remaining_data` counts both directions (the coded broadcast serves both
/// buffers), the current slot uses `min(g1, g2)` and each virtual future slot
/// uses `E[min(g1, g2)]`. Returns the plan for the current slot; its power
/// never exceeds `remaining_budget`.
pub fn causal_allocate_slot(
    current_gains: (f64, f64),
    remaining_data: f64,
    remaining_budget: f64,
    fading: &FadingConfig,
    cfg: &PowerConfig,
    max_horizon: usize,
) -> Result<SlotPlan> {
    positive("remaining data", remaining_data)?;
    let per_direction = remaining_data / 2.0;
    let residual = move |moved: f64| (per_direction - moved).max(0.0);
    let demand = SlotDemand {
        current_gain: cfg.effective_gain(current_gains.0.min(current_gains.1)),
        cap: per_direction,
        residual: &residual,
    };
    let mut future = MeanFuture(cfg.effective_gain(fading.mean_min_gain()));
    plan_slot(&demand, &mut future, remaining_budget, cfg, max_horizon)
}
