//! Slot-by-slot relay simulation under fading.
//!
//! The relay already holds both sources' data and flushes it with a finite
//! total power budget. Per slot it picks a transmission mode according to its
//! strategy, plans the slot's power with the water-filling planner, commits
//! that power and updates its buffers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::channel::{FadingConfig, GainSource, GainTape, PowerConfig};
use super::planner::{plan_slot, FutureGains, MeanFuture, SlotDemand};
use crate::error::{non_negative, Error, Result};

/// Buffers below this fraction of the initial total count as empty.
const EMPTY_FRACTION: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Code whenever both buffers hold data, then flush the rest by
    /// forwarding. Behaves exactly like [`Strategy::NcFirst`]; kept as the
    /// name used for the equal-backlog power comparison.
    NcOnly,
    /// Per slot, take whichever available mode moves the most data.
    Opportunistic,
    /// Code whenever both buffers hold data, regardless of throughput.
    NcFirst,
    /// Never code; forward over the stronger link that has pending data.
    OneDirectional,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::NcOnly,
        Strategy::Opportunistic,
        Strategy::NcFirst,
        Strategy::OneDirectional,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::NcOnly => "nc-only",
            Strategy::Opportunistic => "opportunistic",
            Strategy::NcFirst => "nc-first",
            Strategy::OneDirectional => "one-directional",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

/// Channel knowledge available to the power planner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Knowledge {
    /// Current gains known, future slots planned at the mean gain.
    Causal,
    /// The whole future gain sequence is known.
    Noncausal,
}

impl Knowledge {
    pub const ALL: [Knowledge; 2] = [Knowledge::Causal, Knowledge::Noncausal];

    pub fn name(&self) -> &'static str {
        match self {
            Knowledge::Causal => "causal",
            Knowledge::Noncausal => "noncausal",
        }
    }
}

impl fmt::Display for Knowledge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Knowledge {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Knowledge::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown knowledge mode `{s}`")))
    }
}

/// Transmission mode of one relay slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    NetworkCoded,
    /// Forward source 2's data to source 1 over link 1.
    ForwardTo1,
    /// Forward source 1's data to source 2 over link 2.
    ForwardTo2,
}

impl Mode {
    fn effective_raw_gain(&self, (g1, g2): (f64, f64)) -> f64 {
        match self {
            Mode::NetworkCoded => g1.min(g2),
            Mode::ForwardTo1 => g1,
            Mode::ForwardTo2 => g2,
        }
    }
}

/// Data held at the relay, by destination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayBuffers {
    /// Received from source 2, waiting for delivery to source 1.
    pub toward_1: f64,
    /// Received from source 1, waiting for delivery to source 2.
    pub toward_2: f64,
}

impl RelayBuffers {
    pub fn new(toward_1: f64, toward_2: f64) -> Result<Self> {
        Ok(Self {
            toward_1: non_negative("relay buffer toward source 1", toward_1)?,
            toward_2: non_negative("relay buffer toward source 2", toward_2)?,
        })
    }

    /// Buffers right after the sources delivered `b1` and `b2` to the relay.
    pub fn from_sources(b1: f64, b2: f64) -> Result<Self> {
        Self::new(b2, b1)
    }

    pub fn total(&self) -> f64 {
        self.toward_1 + self.toward_2
    }

    pub fn is_empty(&self) -> bool {
        self.toward_1 <= 0.0 && self.toward_2 <= 0.0
    }

    fn both_pending(&self) -> bool {
        self.toward_1 > 0.0 && self.toward_2 > 0.0
    }

    /// Buffers after moving `bits` stream bits in `mode`.
    fn after(&self, mode: Mode, bits: f64) -> RelayBuffers {
        match mode {
            Mode::NetworkCoded => RelayBuffers {
                toward_1: (self.toward_1 - bits).max(0.0),
                toward_2: (self.toward_2 - bits).max(0.0),
            },
            Mode::ForwardTo1 => RelayBuffers {
                toward_1: (self.toward_1 - bits).max(0.0),
                toward_2: self.toward_2,
            },
            Mode::ForwardTo2 => RelayBuffers {
                toward_1: self.toward_1,
                toward_2: (self.toward_2 - bits).max(0.0),
            },
        }
    }

    /// Stream bits one slot in `mode` can usefully move. A coded slot XORs
    /// the two streams with zero padding, so it serves the longer buffer in
    /// full and empties the shorter one on the way.
    fn cap(&self, mode: Mode) -> f64 {
        match mode {
            Mode::NetworkCoded => self.toward_1.max(self.toward_2),
            Mode::ForwardTo1 => self.toward_1,
            Mode::ForwardTo2 => self.toward_2,
        }
    }
}

/// Slots of single-stream transmission a strategy still needs, in stream
/// bits: coding strategies serve both buffers at once, so the larger one
/// dominates; pure forwarding serves them one after the other.
fn workload(strategy: Strategy, b: &RelayBuffers) -> f64 {
    match strategy {
        Strategy::OneDirectional => b.toward_1 + b.toward_2,
        _ => b.toward_1.max(b.toward_2),
    }
}

fn candidate_modes(strategy: Strategy, b: &RelayBuffers, gains: (f64, f64)) -> Vec<Mode> {
    let mut fwd = Vec::with_capacity(2);
    if b.toward_1 > 0.0 {
        fwd.push(Mode::ForwardTo1);
    }
    if b.toward_2 > 0.0 {
        fwd.push(Mode::ForwardTo2);
    }
    match strategy {
        Strategy::NcOnly | Strategy::NcFirst => {
            if b.both_pending() {
                vec![Mode::NetworkCoded]
            } else {
                fwd
            }
        }
        Strategy::Opportunistic => {
            let mut all = Vec::with_capacity(3);
            if b.both_pending() {
                all.push(Mode::NetworkCoded);
            }
            all.extend(fwd);
            all
        }
        Strategy::OneDirectional => {
            if b.both_pending() {
                let pick = match gains.0.total_cmp(&gains.1) {
                    std::cmp::Ordering::Greater => Mode::ForwardTo1,
                    std::cmp::Ordering::Less => Mode::ForwardTo2,
                    std::cmp::Ordering::Equal if b.toward_2 > b.toward_1 => Mode::ForwardTo2,
                    std::cmp::Ordering::Equal => Mode::ForwardTo1,
                };
                vec![pick]
            } else {
                fwd
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Coded,
    BestLink,
    Link1,
    Link2,
}

impl Phase {
    fn raw_gain(&self, (g1, g2): (f64, f64)) -> f64 {
        match self {
            Phase::Coded => g1.min(g2),
            Phase::BestLink => g1.max(g2),
            Phase::Link1 => g1,
            Phase::Link2 => g2,
        }
    }

    fn mean_raw_gain(&self, fading: &FadingConfig) -> f64 {
        match self {
            Phase::Coded => fading.mean_min_gain(),
            Phase::BestLink => fading.mean_max_gain(),
            Phase::Link1 => fading.mean_gain_1,
            Phase::Link2 => fading.mean_gain_2,
        }
    }
}

/// The rest of the transmission as the strategy would run it: a shared phase
/// while both buffers hold data, then the excess of the larger buffer over a
/// single link. Future slots get the workload-weighted harmonic mean of the
/// two phases' gains, which matches the energy per bit of the two phases at
/// low SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Continuation {
    shared: (Phase, f64),
    excess: (Phase, f64),
}

impl Continuation {
    fn of(strategy: Strategy, b: &RelayBuffers) -> Self {
        let common = b.toward_1.min(b.toward_2);
        let excess_link = if b.toward_1 >= b.toward_2 {
            Phase::Link1
        } else {
            Phase::Link2
        };
        let excess = (excess_link, (b.toward_1 - b.toward_2).abs());
        let shared = match strategy {
            Strategy::OneDirectional => (Phase::BestLink, 2.0 * common),
            _ => (Phase::Coded, common),
        };
        Self { shared, excess }
    }

    fn blend(&self, gain: impl Fn(Phase) -> f64) -> f64 {
        let (pa, wa) = self.shared;
        let (pb, wb) = self.excess;
        let total = wa + wb;
        if total <= 0.0 {
            return gain(pb);
        }
        total / (wa / gain(pa) + wb / gain(pb))
    }

    fn raw_gain(&self, gains: (f64, f64)) -> f64 {
        self.blend(|p| p.raw_gain(gains))
    }

    fn mean_raw_gain(&self, fading: &FadingConfig) -> f64 {
        self.blend(|p| p.mean_raw_gain(fading))
    }
}

struct TapeFuture<'t, 'a, G: ?Sized> {
    tape: &'t mut GainTape<'a, G>,
    continuation: Continuation,
    cfg: PowerConfig,
}

impl<G: GainSource + ?Sized> FutureGains for TapeFuture<'_, '_, G> {
    fn effective_gain(&mut self, k: usize) -> f64 {
        self.cfg
            .effective_gain(self.continuation.raw_gain(self.tape.peek(k)))
    }
}

/// One row of a per-slot relay trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub slot: usize,
    pub g1: f64,
    pub g2: f64,
    pub mode: Mode,
    pub power_w: f64,
    pub water_level: f64,
    /// Bits delivered this slot, both directions counted.
    pub delivered: f64,
    pub toward_1: f64,
    pub toward_2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayOptions {
    pub slot_cap: usize,
    pub max_horizon: usize,
    pub record_trace: bool,
}

impl Default for RelayOptions {
    fn default() -> Self {
        Self {
            slot_cap: 1_000_000,
            max_horizon: 1 << 20,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelayOutcome {
    /// Slots used until both buffers were empty.
    pub slots: usize,
    /// Bits delivered, both directions counted.
    pub delivered: f64,
    pub power_spent: f64,
    pub trace: Vec<TraceRow>,
}

impl RelayOutcome {
    pub fn span(&self) -> f64 {
        self.slots as f64
    }
}

/// Simulates the relay flushing `buffers` and returns the slot count.
///
/// The final slot's power is trimmed to exactly what the remaining data
/// needs, so every counted slot is a full slot.
pub fn run_relay<G: GainSource + ?Sized>(
    strategy: Strategy,
    buffers: RelayBuffers,
    fading: &FadingConfig,
    cfg: &PowerConfig,
    knowledge: Knowledge,
    gains: &mut G,
    options: RelayOptions,
) -> Result<RelayOutcome> {
    let initial = buffers.total();
    let empty_below = EMPTY_FRACTION * initial;
    let mut buf = buffers;
    let mut budget = cfg.budget_w;
    let mut delivered = 0.0;
    let mut trace = Vec::new();
    let mut tape = GainTape::new(gains);

    let mut slot = 0;
    while !buf.is_empty() {
        if slot >= options.slot_cap {
            return Err(Error::SlotCapExceeded {
                what: "relay simulation",
                cap: options.slot_cap,
            });
        }
        if budget <= 0.0 {
            return Err(Error::Domain {
                what: "remaining power budget with data pending",
                constraint: "> 0",
                value: budget,
            });
        }
        let current = tape.peek(0);
        let continuation = Continuation::of(strategy, &buf);

        let mut best: Option<(Mode, f64, super::planner::SlotPlan)> = None;
        for mode in candidate_modes(strategy, &buf, current) {
            let residual = |moved: f64| workload(strategy, &buf.after(mode, moved));
            let demand = SlotDemand {
                current_gain: cfg.effective_gain(mode.effective_raw_gain(current)),
                cap: buf.cap(mode),
                residual: &residual,
            };
            let budget_now = budget;
            let plan = match knowledge {
                Knowledge::Causal => plan_slot(
                    &demand,
                    &mut MeanFuture(cfg.effective_gain(continuation.mean_raw_gain(fading))),
                    budget_now,
                    cfg,
                    options.max_horizon,
                )?,
                Knowledge::Noncausal => {
                    let mut future = TapeFuture {
                        tape: &mut tape,
                        continuation,
                        cfg: *cfg,
                    };
                    plan_slot(&demand, &mut future, budget_now, cfg, options.max_horizon)?
                }
            };
            let bits = buf.total() - buf.after(mode, plan.stream_bits).total();
            if best.as_ref().is_none_or(|(_, b, _)| bits > *b) {
                best = Some((mode, bits, plan));
            }
        }
        let (mode, _, plan) = best.expect("pending data always offers a mode");
        let (power, level, moved) = (plan.power, plan.water_level, plan.stream_bits);
        let before = buf.total();
        buf = buf.after(mode, moved);
        if buf.toward_1 <= empty_below {
            buf.toward_1 = 0.0;
        }
        if buf.toward_2 <= empty_below {
            buf.toward_2 = 0.0;
        }
        let slot_delivered = before - buf.total();
        delivered += slot_delivered;
        budget -= power;
        if options.record_trace {
            trace.push(TraceRow {
                slot,
                g1: current.0,
                g2: current.1,
                mode,
                power_w: power,
                water_level: level,
                delivered: slot_delivered,
                toward_1: buf.toward_1,
                toward_2: buf.toward_2,
            });
        }
        tape.advance();
        slot += 1;
    }

    Ok(RelayOutcome {
        slots: slot,
        delivered,
        power_spent: cfg.budget_w - budget.max(0.0),
        trace,
    })
}
