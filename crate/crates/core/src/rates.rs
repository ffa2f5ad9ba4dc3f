//! Link capacities, achievable rates and the per-slot rate region.
//!
//! The region of simultaneously achievable rates in one slot is the polygon
//! with vertices `(0,0)`, `a = (0, r2)`, `b = (r_nc, r_nc)` and `c = (r1, 0)`.
//! The two axis vertices are one-directional forwarding (source, then relay,
//! both at full slot occupancy); the corner `b` is the three-phase network
//! coded exchange. Everything here is unit agnostic: capacities are "data
//! units per slot" and backlogs must use the same data unit.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};

/// Rates of the two source-relay links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkCapacities {
    c1: f64,
    c2: f64,
}

impl LinkCapacities {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        Ok(Self {
            c1: positive("capacity c1", c1)?,
            c2: positive("capacity c2", c2)?,
        })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn min(&self) -> f64 {
        self.c1.min(self.c2)
    }

    /// Multiplies both capacities by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.c1 * factor, self.c2 * factor)
    }
}

/// Data still waiting at each source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Backlog {
    b1: f64,
    b2: f64,
}

impl Backlog {
    pub fn new(b1: f64, b2: f64) -> Result<Self> {
        Ok(Self {
            b1: non_negative("backlog b1", b1)?,
            b2: non_negative("backlog b2", b2)?,
        })
    }

    pub fn b1(&self) -> f64 {
        self.b1
    }

    pub fn b2(&self) -> f64 {
        self.b2
    }

    pub fn min(&self) -> f64 {
        self.b1.min(self.b2)
    }

    pub fn max(&self) -> f64 {
        self.b1.max(self.b2)
    }

    pub fn total(&self) -> f64 {
        self.b1 + self.b2
    }

    pub fn is_empty(&self) -> bool {
        self.b1 == 0.0 && self.b2 == 0.0
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.b1 * factor, self.b2 * factor)
    }
}

/// Maximum one-directional and network-coded exchange rates for a pair of
/// link capacities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTriple {
    pub r1: f64,
    pub r2: f64,
    pub r_nc: f64,
}

/// A rate pair: `x` is the rate of source 1's data (delivered to source 2),
/// `y` the rate of source 2's data (delivered to source 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub x: f64,
    pub y: f64,
}

impl RatePoint {
    pub fn sum(&self) -> f64 {
        self.x + self.y
    }
}

/// Forwarding rate `(1/c1 + 1/c2)^-1` (both directions) and network-coded rate
/// `(1/c1 + 1/c2 + 1/min(c1,c2))^-1`.
pub fn forwarding_rates(caps: LinkCapacities) -> RateTriple {
    let inv_sum = 1.0 / caps.c1 + 1.0 / caps.c2;
    // one division so that r1 == r2 holds bit for bit
    let forward = 1.0 / inv_sum;
    let r_nc = 1.0 / (inv_sum + 1.0 / caps.min());
    RateTriple {
        r1: forward,
        r2: forward,
        r_nc,
    }
}

/// The three non-origin vertices `(a, b, c)` of the rate region.
pub fn region_vertices(caps: LinkCapacities) -> (RatePoint, RatePoint, RatePoint) {
    let rates = forwarding_rates(caps);
    (
        RatePoint { x: 0.0, y: rates.r2 },
        RatePoint {
            x: rates.r_nc,
            y: rates.r_nc,
        },
        RatePoint { x: rates.r1, y: 0.0 },
    )
}

/// Intersection of the ray through `(b1, b2)` with the outer boundary of the
/// rate region.
///
/// For `b2 <= b1` the ray meets segment `b-c`, otherwise segment `a-b`; the
/// axis vertices and the coded corner fall out of the same formulas.
pub fn cross_point(caps: LinkCapacities, backlog: Backlog) -> Result<RatePoint> {
    if backlog.is_empty() {
        return Err(Error::EmptyBacklog);
    }
    let RateTriple { r1, r2, r_nc } = forwarding_rates(caps);
    let (b1, b2) = (backlog.b1, backlog.b2);
    let t = if b2 <= b1 {
        r_nc * r1 / (b2 * (r1 - r_nc) + r_nc * b1)
    } else {
        r_nc * r2 / (b1 * (r2 - r_nc) + r_nc * b2)
    };
    Ok(RatePoint {
        x: t * b1,
        y: t * b2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn caps(c1: f64, c2: f64) -> LinkCapacities {
        LinkCapacities::new(c1, c2).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn symmetric_unit_links() {
        let r = forwarding_rates(caps(1.0, 1.0));
        assert_eq!(r.r1, 0.5);
        assert_eq!(r.r2, 0.5);
        assert!(close(r.r_nc, 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn asymmetric_links() {
        let r = forwarding_rates(caps(2.0, 1.0));
        assert!(close(r.r1, 2.0 / 3.0, 1e-15));
        assert_eq!(r.r1, r.r2);
        assert!(close(r.r_nc, 0.4, 1e-15));
    }

    #[test]
    fn equal_links_give_a_third() {
        for c in [0.01, 0.7, 3.0, 1234.5] {
            let r = forwarding_rates(caps(c, c));
            assert!(close(r.r_nc, c / 3.0, 1e-14), "c = {c}");
        }
    }

    #[test]
    fn vertices_of_unit_region() {
        let (a, b, c) = region_vertices(caps(1.0, 1.0));
        assert_eq!(a, RatePoint { x: 0.0, y: 0.5 });
        assert!(close(b.x, 1.0 / 3.0, 1e-15) && b.x == b.y);
        assert_eq!(c, RatePoint { x: 0.5, y: 0.0 });
        let (_, b, _) = region_vertices(caps(2.0, 1.0));
        assert!(close(b.x, 0.4, 1e-15) && close(b.y, 0.4, 1e-15));
    }

    #[test]
    fn rejects_dead_links() {
        assert!(matches!(
            LinkCapacities::new(0.0, 1.0),
            Err(Error::Domain { .. })
        ));
        assert!(LinkCapacities::new(1.0, -2.0).is_err());
        assert!(LinkCapacities::new(f64::NAN, 1.0).is_err());
        assert!(Backlog::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn cross_point_cases() {
        let p = cross_point(caps(1.0, 1.0), Backlog::new(3.0, 3.0).unwrap()).unwrap();
        assert!(close(p.x, 1.0 / 3.0, 1e-15) && close(p.y, 1.0 / 3.0, 1e-15));

        let p = cross_point(caps(1.0, 1.0), Backlog::new(1.0, 0.0).unwrap()).unwrap();
        assert_eq!(p, RatePoint { x: 0.5, y: 0.0 });

        let p = cross_point(caps(1.0, 1.0), Backlog::new(0.0, 4.0).unwrap()).unwrap();
        assert_eq!(p, RatePoint { x: 0.0, y: 0.5 });

        // Solving the b-c line against the ray y = x/2 by hand gives (0.4, 0.2).
        let p = cross_point(caps(1.0, 1.0), Backlog::new(2.0, 1.0).unwrap()).unwrap();
        assert!(close(p.x, 0.4, 1e-14) && close(p.y, 0.2, 1e-14));
    }

    #[test]
    fn cross_point_rejects_empty_backlog() {
        assert_eq!(
            cross_point(caps(1.0, 1.0), Backlog::new(0.0, 0.0).unwrap()),
            Err(Error::EmptyBacklog)
        );
    }
}
