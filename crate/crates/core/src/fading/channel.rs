use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{positive, Result};

/// Power budget and link-budget constants of the relay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    /// Total power budget P spent over the whole transmission (W).
    pub budget_w: f64,
    /// Noise power spectral density I (W/Hz).
    pub noise_density: f64,
    /// Channel bandwidth W (Hz).
    pub bandwidth_hz: f64,
    /// Slot duration T (s).
    pub slot_duration_s: f64,
}

impl PowerConfig {
    pub fn new(
        budget_w: f64,
        noise_density: f64,
        bandwidth_hz: f64,
        slot_duration_s: f64,
    ) -> Result<Self> {
        Ok(Self {
            budget_w: positive("power budget", budget_w)?,
            noise_density: positive("noise density", noise_density)?,
            bandwidth_hz: positive("bandwidth", bandwidth_hz)?,
            slot_duration_s: positive("slot duration", slot_duration_s)?,
        })
    }

    pub fn with_budget(&self, budget_w: f64) -> Result<Self> {
        Self::new(
            budget_w,
            self.noise_density,
            self.bandwidth_hz,
            self.slot_duration_s,
        )
    }

    /// `I * W`, the in-band noise power.
    pub fn noise_power(&self) -> f64 {
        self.noise_density * self.bandwidth_hz
    }

    /// SNR per watt for a channel power gain `g`, in 1/W.
    pub fn effective_gain(&self, g: f64) -> f64 {
        g / self.noise_power()
    }

    /// Bits per slot on one stream: `W * T * log2(1 + h p)`.
    pub fn slot_bits(&self, effective_gain: f64, power: f64) -> f64 {
        self.bandwidth_hz * self.slot_duration_s * (effective_gain * power).ln_1p()
            / std::f64::consts::LN_2
    }

    /// Smallest power with `slot_bits(h, p) >= bits`.
    pub fn power_for_bits(&self, effective_gain: f64, bits: f64) -> f64 {
        let exponent = bits / (self.bandwidth_hz * self.slot_duration_s) * std::f64::consts::LN_2;
        exponent.exp_m1() / effective_gain
    }
}

/// Means of the exponentially distributed link power gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingConfig {
    pub mean_gain_1: f64,
    pub mean_gain_2: f64,
    pub seed: u64,
}

impl FadingConfig {
    pub fn new(mean_gain_1: f64, mean_gain_2: f64, seed: u64) -> Result<Self> {
        Ok(Self {
            mean_gain_1: positive("mean gain 1", mean_gain_1)?,
            mean_gain_2: positive("mean gain 2", mean_gain_2)?,
            seed,
        })
    }

    /// `E[min(g1, g2)]` for independent exponentials.
    pub fn mean_min_gain(&self) -> f64 {
        1.0 / (1.0 / self.mean_gain_1 + 1.0 / self.mean_gain_2)
    }

    /// `E[max(g1, g2)]` for independent exponentials.
    pub fn mean_max_gain(&self) -> f64 {
        self.mean_gain_1 + self.mean_gain_2 - self.mean_min_gain()
    }
}

/// One slot's pair of independent exponential gains `(g1, g2)`.
pub fn draw_slot_gains<R: Rng + ?Sized>(fading: &FadingConfig, rng: &mut R) -> (f64, f64) {
    let e1 = Exp::new(1.0 / fading.mean_gain_1).expect("mean validated positive");
    let e2 = Exp::new(1.0 / fading.mean_gain_2).expect("mean validated positive");
    (e1.sample(rng), e2.sample(rng))
}

/// Bits delivered by a coded broadcast, counted over both directions.
pub fn nc_slot_throughput(g1: f64, g2: f64, power: f64, cfg: &PowerConfig) -> f64 {
    2.0 * cfg.slot_bits(cfg.effective_gain(g1.min(g2)), power)
}

/// Bits delivered by forwarding over a link with gain `g`.
pub fn fwd_slot_throughput(g: f64, power: f64, cfg: &PowerConfig) -> f64 {
    cfg.slot_bits(cfg.effective_gain(g), power)
}

/// A per-slot sequence of link gain pairs.
pub trait GainSource {
    fn next_gains(&mut self) -> (f64, f64);
}

/// Independent Rayleigh (exponential power) fading per slot.
#[derive(Debug, Clone)]
pub struct RayleighGains<R> {
    e1: Exp<f64>,
    e2: Exp<f64>,
    rng: R,
}

impl<R: Rng> RayleighGains<R> {
    pub fn new(fading: &FadingConfig, rng: R) -> Self {
        Self {
            e1: Exp::new(1.0 / fading.mean_gain_1).expect("mean validated positive"),
            e2: Exp::new(1.0 / fading.mean_gain_2).expect("mean validated positive"),
            rng,
        }
    }
}

impl<R: Rng> GainSource for RayleighGains<R> {
    fn next_gains(&mut self) -> (f64, f64) {
        (self.e1.sample(&mut self.rng), self.e2.sample(&mut self.rng))
    }
}

/// The same gains every slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantGains(pub f64, pub f64);

impl GainSource for ConstantGains {
    fn next_gains(&mut self) -> (f64, f64) {
        (self.0, self.1)
    }
}

/// Replays a fixed list, then repeats its last entry.
#[derive(Debug, Clone)]
pub struct ScriptedGains {
    gains: Vec<(f64, f64)>,
    next: usize,
}

impl ScriptedGains {
    pub fn new(gains: Vec<(f64, f64)>) -> Self {
        assert!(!gains.is_empty(), "scripted gain list is empty");
        Self { gains, next: 0 }
    }
}

impl GainSource for ScriptedGains {
    fn next_gains(&mut self) -> (f64, f64) {
        let g = self.gains[self.next.min(self.gains.len() - 1)];
        self.next += 1;
        g
    }
}

/// Lookahead buffer over a gain source. Index 0 is the current slot.
#[derive(Debug)]
pub struct GainTape<'a, G: ?Sized> {
    source: &'a mut G,
    ahead: VecDeque<(f64, f64)>,
}

impl<'a, G: GainSource + ?Sized> GainTape<'a, G> {
    pub fn new(source: &'a mut G) -> Self {
        Self {
            source,
            ahead: VecDeque::new(),
        }
    }

    pub fn peek(&mut self, k: usize) -> (f64, f64) {
        while self.ahead.len() <= k {
            let g = self.source.next_gains();
            self.ahead.push_back(g);
        }
        self.ahead[k]
    }

    pub fn advance(&mut self) {
        if self.ahead.pop_front().is_none() {
            self.source.next_gains();
        }
    }
}
