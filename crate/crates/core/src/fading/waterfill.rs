use serde::{Deserialize, Serialize};

use super::channel::{GainSource, PowerConfig};
use crate::error::{positive, Error, Result};

/// Relative slack used when deciding whether an allocation covers the data.
pub(crate) const COVER_TOLERANCE: f64 = 1e-12;

/// Per-slot powers with their common water level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
    pub water_level: f64,
    pub n_slots: usize,
}

impl PowerAllocation {
    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    /// Bits per stream summed over the slots.
    pub fn stream_bits(&self, gains: &[f64], cfg: &PowerConfig) -> f64 {
        gains
            .iter()
            .zip(&self.powers)
            .map(|(&h, &p)| cfg.slot_bits(h, p))
            .sum()
    }
}

/// Water filling `p_k = max(0, nu - 1/h_k)` with `sum p_k = budget`.
///
/// `gains` are effective gains (SNR per watt). The level is found by sorting
/// the inverse gains and growing the active set until the next floor lies
/// above the level.
pub fn waterfill(gains: &[f64], budget: f64) -> Result<PowerAllocation> {
    if gains.is_empty() {
        return Err(Error::NoChannels);
    }
    positive("power budget", budget)?;
    for &h in gains {
        positive("effective gain", h)?;
    }
    let mut floors: Vec<f64> = gains.iter().map(|h| 1.0 / h).collect();
    floors.sort_by(f64::total_cmp);

    let mut filled = 0.0;
    let mut level = 0.0;
    for (k, &floor) in floors.iter().enumerate() {
        filled += floor;
        level = (budget + filled) / (k + 1) as f64;
        match floors.get(k + 1) {
            Some(&next) if level > next => continue,
            _ => break,
        }
    }
    let powers = gains.iter().map(|h| (level - 1.0 / h).max(0.0)).collect();
    Ok(PowerAllocation {
        powers,
        water_level: level,
        n_slots: gains.len(),
    })
}

/// Water filling over one slot of gain `current` plus `extra` slots that all
/// share gain `uniform`. Returns `(p_current, p_each_uniform, level)`.
pub fn waterfill_current_and_uniform(
    current: f64,
    uniform: f64,
    extra: usize,
    budget: f64,
) -> (f64, f64, f64) {
    let a = 1.0 / current;
    if extra == 0 {
        return (budget, 0.0, a + budget);
    }
    let b = 1.0 / uniform;
    let m = extra as f64;
    if a <= b {
        let alone = a + budget;
        if alone <= b {
            return (budget, 0.0, alone);
        }
    } else {
        let level = (budget + m * b) / m;
        if level <= a {
            return (0.0, level - b, level);
        }
    }
    let level = (budget + a + m * b) / (m + 1.0);
    ((level - a).max(0.0), (level - b).max(0.0), level)
}

/// Smallest number of slots whose water-filled coded throughput covers
/// `data` bits (both directions counted), together with the allocation.
///
/// Slots are revealed one at a time from `gains`; the effective gain of a
/// coded slot is `min(g1, g2) / (I W)`.
pub fn noncausal_min_slots<G: GainSource + ?Sized>(
    gains: &mut G,
    data: f64,
    cfg: &PowerConfig,
    slot_cap: usize,
) -> Result<(usize, PowerAllocation)> {
    if data <= 0.0 {
        return Ok((
            0,
            PowerAllocation {
                powers: vec![],
                water_level: 0.0,
                n_slots: 0,
            },
        ));
    }
    let mut effective = Vec::new();
    while effective.len() < slot_cap {
        let (g1, g2) = gains.next_gains();
        effective.push(cfg.effective_gain(g1.min(g2)));
        let alloc = waterfill(&effective, cfg.budget_w)?;
        let bits = 2.0 * alloc.stream_bits(&effective, cfg);
        if bits >= data * (1.0 - COVER_TOLERANCE) {
            return Ok((effective.len(), alloc));
        }
    }
    Err(Error::SlotCapExceeded {
        what: "noncausal water filling",
        cap: slot_cap,
    })
}
