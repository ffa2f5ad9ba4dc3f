//! Monte-Carlo experiment driver.
//!
//! Every (sweep point, trial) pair gets its own ChaCha stream derived from
//! the master seed, and every strategy/knowledge combination at that pair
//! replays the same stream, so comparisons use common random numbers. Work
//! items run in parallel; results are reduced in index order, so output does
//! not depend on scheduling.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fading::{
    run_relay, FadingConfig, Knowledge, PowerConfig, RayleighGains, RelayBuffers, RelayOptions,
    Strategy, TraceRow,
};
use crate::finite_state::{simulate_finite_state, FiniteSimOptions, FiniteStateModel, StatePolicy};
use crate::rates::Backlog;

/// Bits in one megabyte (10^6 bytes).
pub const BITS_PER_MBYTE: f64 = 8.0e6;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn mbytes_to_bits(mbytes: f64) -> f64 {
    mbytes * BITS_PER_MBYTE
}

/// Independent random stream for one trial of one sweep point.
pub fn trial_rng(master_seed: u64, point: u64, trial: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&point.to_le_bytes());
    seed[16..24].copy_from_slice(&trial.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanStats {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl SpanStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: 0.0,
                stderr: 0.0,
                trials: 0,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            trials: n,
        }
    }

    /// Normal-approximation 95% confidence interval.
    pub fn ci95(&self) -> (f64, f64) {
        (self.mean - 1.96 * self.stderr, self.mean + 1.96 * self.stderr)
    }
}

/// What an experiment sweeps over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Sweep {
    /// Power budgets in dBm with fixed source data (bits).
    Power {
        budgets_dbm: Vec<f64>,
        b1_bits: f64,
        b2_bits: f64,
    },
    /// Data ratios `b1/b2` in `[0, 1]` with `b1 + b2 = total_bits`.
    Ratio {
        ratios: Vec<f64>,
        total_bits: f64,
        budget_dbm: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub strategies: Vec<Strategy>,
    pub knowledge: Vec<Knowledge>,
    pub sweep: Sweep,
    pub trials: usize,
    pub master_seed: u64,
    /// Budget field is overwritten per sweep point.
    pub power: PowerConfig,
    pub fading: FadingConfig,
    pub relay: RelayOptionsConfig,
}

/// Serializable subset of [`RelayOptions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayOptionsConfig {
    pub slot_cap: usize,
    pub max_horizon: usize,
}

impl Default for RelayOptionsConfig {
    fn default() -> Self {
        let d = RelayOptions::default();
        Self {
            slot_cap: d.slot_cap,
            max_horizon: d.max_horizon,
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.strategies.is_empty() || self.knowledge.is_empty() {
            return Err(Error::Config(
                "at least one strategy and one knowledge mode are required".into(),
            ));
        }
        match &self.sweep {
            Sweep::Power {
                budgets_dbm,
                b1_bits,
                b2_bits,
            } => {
                if budgets_dbm.is_empty() {
                    return Err(Error::Config("budget sweep is empty".into()));
                }
                if budgets_dbm.iter().any(|d| !d.is_finite()) {
                    return Err(Error::Config("budgets must be finite".into()));
                }
                RelayBuffers::from_sources(*b1_bits, *b2_bits)?;
            }
            Sweep::Ratio {
                ratios,
                total_bits,
                budget_dbm,
            } => {
                if ratios.is_empty() {
                    return Err(Error::Config("ratio sweep is empty".into()));
                }
                if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) {
                    return Err(Error::Config("ratios must lie in [0, 1]".into()));
                }
                if !(total_bits.is_finite() && *total_bits > 0.0) || !budget_dbm.is_finite() {
                    return Err(Error::Config(
                        "ratio sweep needs a positive total and a finite budget".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// One aggregated line of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sweep_value: f64,
    pub strategy: Strategy,
    pub knowledge: Knowledge,
    pub mean_span_slots: f64,
    pub stderr: f64,
    pub trials: usize,
}

struct Point {
    value: f64,
    budget_w: f64,
    buffers: RelayBuffers,
}

fn sweep_points(sweep: &Sweep) -> Result<Vec<Point>> {
    match sweep {
        Sweep::Power {
            budgets_dbm,
            b1_bits,
            b2_bits,
        } => budgets_dbm
            .iter()
            .map(|&dbm| {
                Ok(Point {
                    value: dbm,
                    budget_w: dbm_to_watts(dbm),
                    buffers: RelayBuffers::from_sources(*b1_bits, *b2_bits)?,
                })
            })
            .collect(),
        Sweep::Ratio {
            ratios,
            total_bits,
            budget_dbm,
        } => ratios
            .iter()
            .map(|&r| {
                let b1 = total_bits * r / (1.0 + r);
                let b2 = total_bits / (1.0 + r);
                Ok(Point {
                    value: r,
                    budget_w: dbm_to_watts(*budget_dbm),
                    buffers: RelayBuffers::from_sources(b1, b2)?,
                })
            })
            .collect(),
    }
}

fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    cfg.validate()?;
    let points = sweep_points(&cfg.sweep)?;
    let combos: Vec<(Strategy, Knowledge)> = cfg
        .strategies
        .iter()
        .flat_map(|&s| cfg.knowledge.iter().map(move |&k| (s, k)))
        .collect();
    let options = RelayOptions {
        slot_cap: cfg.relay.slot_cap,
        max_horizon: cfg.relay.max_horizon,
        record_trace: false,
    };

    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..cfg.trials).map(move |t| (p, t)))
        .collect();
    // spans[job][combo]
    let spans: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(p, t)| {
            let point = &points[p];
            let power = cfg.power.with_budget(point.budget_w)?;
            combos
                .iter()
                .map(|&(strategy, knowledge)| {
                    let rng = trial_rng(cfg.master_seed, p as u64, t as u64);
                    let mut gains = RayleighGains::new(&cfg.fading, rng);
                    run_relay(
                        strategy,
                        point.buffers,
                        &cfg.fading,
                        &power,
                        knowledge,
                        &mut gains,
                        options,
                    )
                    .map(|o| o.span())
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(points.len() * combos.len());
    for (p, point) in points.iter().enumerate() {
        let block = &spans[p * cfg.trials..(p + 1) * cfg.trials];
        for (c, &(strategy, knowledge)) in combos.iter().enumerate() {
            let samples: Vec<f64> = block.iter().map(|row| row[c]).collect();
            let stats = SpanStats::from_samples(&samples);
            rows.push(SummaryRow {
                sweep_value: point.value,
                strategy,
                knowledge,
                mean_span_slots: stats.mean,
                stderr: stats.stderr,
                trials: stats.trials,
            });
        }
    }
    Ok(rows)
}

/// Mean relay span against the power budget.
pub fn power_sweep(cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    match cfg.sweep {
        Sweep::Power { .. } => run_sweep(cfg),
        _ => Err(Error::Config("power_sweep needs a power sweep".into())),
    }
}

/// Mean relay span against the data ratio `b1/b2`.
pub fn ratio_sweep(cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    match cfg.sweep {
        Sweep::Ratio { .. } => run_sweep(cfg),
        _ => Err(Error::Config("ratio_sweep needs a ratio sweep".into())),
    }
}

/// Header of the summary CSV.
pub const SUMMARY_HEADER: [&str; 6] = [
    "sweep_value",
    "strategy",
    "knowledge",
    "mean_span_slots",
    "stderr",
    "trials",
];

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.sweep_value.to_string(),
            r.strategy.to_string(),
            r.knowledge.to_string(),
            r.mean_span_slots.to_string(),
            r.stderr.to_string(),
            r.trials.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Header of the per-slot trace CSV.
pub const TRACE_HEADER: [&str; 9] = [
    "slot",
    "g1",
    "g2",
    "mode",
    "power_w",
    "water_level",
    "delivered_bits",
    "remaining_toward_1",
    "remaining_toward_2",
];

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in rows {
        let mode = match r.mode {
            crate::fading::Mode::NetworkCoded => "nc",
            crate::fading::Mode::ForwardTo1 => "fwd-1",
            crate::fading::Mode::ForwardTo2 => "fwd-2",
        };
        w.write_record([
            r.slot.to_string(),
            r.g1.to_string(),
            r.g2.to_string(),
            mode.to_string(),
            r.power_w.to_string(),
            r.water_level.to_string(),
            r.delivered.to_string(),
            r.toward_1.to_string(),
            r.toward_2.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean simulated finite-state span of `policy` over `trials` seeded runs.
pub fn finite_state_span_stats(
    model: &FiniteStateModel,
    backlog: Backlog,
    policy: &StatePolicy,
    trials: usize,
    master_seed: u64,
    options: FiniteSimOptions,
) -> Result<SpanStats> {
    let spans: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(master_seed, 0, t as u64);
            simulate_finite_state(model, backlog, policy, &mut rng, options)
        })
        .collect::<Result<_>>()?;
    Ok(SpanStats::from_samples(&spans))
}
