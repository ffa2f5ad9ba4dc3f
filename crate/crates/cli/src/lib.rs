//! Command-line front end for the relay scheduler.
//!
//! All commands read an optional TOML file of flat, unit-suffixed keys (see
//! [`CliConfig`]); `--seed` and `--trials` override the file.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use relay_core::fading::{run_relay, ConstantGains, GainSource, RayleighGains, RelayOptions};
use relay_core::finite_state::{alpha_coefficients, argmax_alpha, FiniteSimOptions};
use relay_core::harness::{
    dbm_to_watts, finite_state_span_stats, mbytes_to_bits, power_sweep, ratio_sweep, trial_rng,
    write_summary_csv, write_trace_csv, RelayOptionsConfig,
};
use relay_core::span::optimal_schedule;
use relay_core::{
    Backlog, ExperimentConfig, FadingConfig, FiniteStateModel, Knowledge, LinkCapacities,
    PowerConfig, RateLevels, RelayBuffers, StatePolicy, Strategy, SummaryRow, Sweep,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },

    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: Box<toml::de::Error>,
    },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] relay_core::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Parser)]
#[command(name = "relay-sched", version, about = "Minimum time-span scheduling for two-way relays")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Master seed, overrides `seed` in the config.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Output file; standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Trials per point, overrides `trials` in the config.
    #[arg(long, global = true, value_name = "N")]
    pub trials: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal fixed-rate schedule for one pair of links.
    Schedule(ScheduleArgs),
    /// Success-weighted rates and the chosen state of a finite-state channel.
    FiniteState,
    /// Mean relay span against the power budget (CSV).
    PowerSweep,
    /// Mean relay span against the data ratio b1/b2 (CSV).
    RatioSweep,
    /// Per-slot trace of one seeded relay run (CSV).
    WaterfillTrace,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ScheduleArgs {
    /// Capacity of link 1 (node 1 to relay and back)
    #[arg(long)]
    pub c1: f64,
    /// Capacity of link 2
    #[arg(long)]
    pub c2: f64,
    /// Data node 1 sends to node 2
    #[arg(long)]
    pub b1: f64,
    /// Data node 2 sends to node 1
    #[arg(long)]
    pub b2: f64,
}

/// Settings file. Keys are flat and carry their unit in the name; data sizes
/// are megabytes (10^6 bytes) except the unitless finite-state backlogs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub seed: u64,
    pub trials: usize,

    pub noise_density_w_per_hz: f64,
    pub bandwidth_hz: f64,
    pub slot_duration_s: f64,
    pub mean_gain_1: f64,
    pub mean_gain_2: f64,

    /// Budgets of the power sweep.
    pub budgets_dbm: Vec<f64>,
    pub b1_mbytes: f64,
    pub b2_mbytes: f64,
    /// Strategies of the power sweep.
    pub power_strategies: Vec<Strategy>,
    pub power_knowledge: Vec<Knowledge>,

    pub ratios: Vec<f64>,
    pub total_mbytes: f64,
    pub ratio_budget_dbm: f64,
    pub ratio_strategies: Vec<Strategy>,
    pub ratio_knowledge: Vec<Knowledge>,

    pub trace_budget_dbm: f64,
    pub trace_strategy: Strategy,
    pub trace_knowledge: Knowledge,
    /// Trace on a fixed channel with both gains at `E[min(g1, g2)]`.
    pub trace_constant_gains: bool,

    pub slot_cap: usize,
    pub max_horizon: usize,

    /// Finite-state rate levels, strictly increasing.
    pub levels: Vec<f64>,
    /// Joint-state probabilities in lexicographic order; uniform when empty.
    pub probs: Vec<f64>,
    pub b1: f64,
    pub b2: f64,
    /// Simulated transmissions of the chosen policy; 0 skips the simulation.
    pub sim_trials: usize,
}

impl Default for CliConfig {
    fn default() -> Self {
        let relay = RelayOptionsConfig::default();
        Self {
            seed: 1,
            trials: 200,
            noise_density_w_per_hz: 1e-12,
            bandwidth_hz: 100e6,
            slot_duration_s: 1.0,
            mean_gain_1: 1.0,
            mean_gain_2: 1.0,
            budgets_dbm: vec![-10.0, -8.0, -6.0, -4.0, -2.0, 0.0],
            b1_mbytes: 8.5,
            b2_mbytes: 8.5,
            power_strategies: vec![
                Strategy::NcOnly,
                Strategy::Opportunistic,
                Strategy::OneDirectional,
            ],
            power_knowledge: vec![Knowledge::Causal, Knowledge::Noncausal],
            ratios: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            total_mbytes: 17.0,
            ratio_budget_dbm: 0.0,
            ratio_strategies: vec![
                Strategy::Opportunistic,
                Strategy::NcFirst,
                Strategy::OneDirectional,
            ],
            ratio_knowledge: vec![Knowledge::Causal],
            trace_budget_dbm: -6.0,
            trace_strategy: Strategy::NcOnly,
            trace_knowledge: Knowledge::Causal,
            trace_constant_gains: false,
            slot_cap: relay.slot_cap,
            max_horizon: relay.max_horizon,
            levels: vec![1.0, 2.0],
            probs: vec![],
            b1: 1.0,
            b2: 1.0,
            sim_trials: 0,
        }
    }
}

impl CliConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_path_buf(),
            source: Box::new(e),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are all representable in TOML")
    }

    fn with_overrides(mut self, common: &CommonArgs) -> Self {
        if let Some(seed) = common.seed {
            self.seed = seed;
        }
        if let Some(trials) = common.trials {
            self.trials = trials;
        }
        self
    }

    pub fn power(&self, budget_dbm: f64) -> Result<PowerConfig> {
        Ok(PowerConfig::new(
            dbm_to_watts(budget_dbm),
            self.noise_density_w_per_hz,
            self.bandwidth_hz,
            self.slot_duration_s,
        )?)
    }

    pub fn fading(&self) -> Result<FadingConfig> {
        Ok(FadingConfig::new(self.mean_gain_1, self.mean_gain_2, self.seed)?)
    }

    fn relay_options(&self) -> RelayOptionsConfig {
        RelayOptionsConfig {
            slot_cap: self.slot_cap,
            max_horizon: self.max_horizon,
        }
    }

    pub fn power_experiment(&self) -> Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            strategies: self.power_strategies.clone(),
            knowledge: self.power_knowledge.clone(),
            sweep: Sweep::Power {
                budgets_dbm: self.budgets_dbm.clone(),
                b1_bits: mbytes_to_bits(self.b1_mbytes),
                b2_bits: mbytes_to_bits(self.b2_mbytes),
            },
            trials: self.trials,
            master_seed: self.seed,
            power: self.power(0.0)?,
            fading: self.fading()?,
            relay: self.relay_options(),
        })
    }

    pub fn ratio_experiment(&self) -> Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            strategies: self.ratio_strategies.clone(),
            knowledge: self.ratio_knowledge.clone(),
            sweep: Sweep::Ratio {
                ratios: self.ratios.clone(),
                total_bits: mbytes_to_bits(self.total_mbytes),
                budget_dbm: self.ratio_budget_dbm,
            },
            trials: self.trials,
            master_seed: self.seed,
            power: self.power(self.ratio_budget_dbm)?,
            fading: self.fading()?,
            relay: self.relay_options(),
        })
    }

    pub fn finite_state_model(&self) -> Result<FiniteStateModel> {
        let levels = RateLevels::new(self.levels.clone())?;
        if self.probs.is_empty() {
            return Ok(FiniteStateModel::uniform(levels));
        }
        FiniteStateModel::new(levels, self.probs.clone())
            .map_err(|e| CliError::Invalid(format!("probs: {e}")))
    }
}

/// Loads the config named by `--config` (defaults otherwise) and applies the
/// command-line overrides.
pub fn effective_config(common: &CommonArgs) -> Result<CliConfig> {
    let base = match &common.config {
        Some(path) => CliConfig::load(path)?,
        None => CliConfig::default(),
    };
    Ok(base.with_overrides(common))
}

/// Runs one parsed command. Human-readable output goes to `console`; CSV goes
/// to `--out` when given and to `console` otherwise.
pub fn run(cli: &Cli, console: &mut dyn Write) -> Result<()> {
    if let Command::Schedule(args) = &cli.command {
        return schedule(*args, console);
    }
    let cfg = effective_config(&cli.common)?;
    match &cli.command {
        Command::Schedule(_) => unreachable!(),
        Command::FiniteState => finite_state(&cfg, console),
        Command::PowerSweep => {
            let rows = power_sweep(&cfg.power_experiment()?)?;
            emit_summary(&rows, cli.common.out.as_deref(), console)
        }
        Command::RatioSweep => {
            let rows = ratio_sweep(&cfg.ratio_experiment()?)?;
            emit_summary(&rows, cli.common.out.as_deref(), console)
        }
        Command::WaterfillTrace => {
            let mut csv = Vec::new();
            write_trace_csv(&trace(&cfg)?, &mut csv)?;
            emit(&csv, cli.common.out.as_deref(), console)
        }
    }
}

fn schedule(args: ScheduleArgs, console: &mut dyn Write) -> Result<()> {
    let caps = LinkCapacities::new(args.c1, args.c2)?;
    let backlog = Backlog::new(args.b1, args.b2)?;
    let s = optimal_schedule(caps, backlog);
    writeln!(console, "theta1 {}", s.theta1)?;
    writeln!(console, "theta2 {}", s.theta2)?;
    writeln!(console, "theta3 {}", s.theta3)?;
    writeln!(console, "span {}", s.span())?;
    Ok(())
}

fn finite_state(cfg: &CliConfig, console: &mut dyn Write) -> Result<()> {
    let model = cfg.finite_state_model()?;
    let backlog = Backlog::new(cfg.b1, cfg.b2)?;
    let alphas = alpha_coefficients(&model, backlog)?;
    let chosen = argmax_alpha(&alphas);
    writeln!(console, "state\tc1\tc2\tp\tsuccess\talpha")?;
    for (i, (s, a)) in model.states().iter().zip(&alphas.alphas).enumerate() {
        writeln!(
            console,
            "{}\t{}\t{}\t{}\t{}\t{}",
            i,
            s.caps.c1(),
            s.caps.c2(),
            model.probs()[i],
            model.success_probability(i),
            a
        )?;
    }
    let s = &model.states()[chosen];
    writeln!(console, "selected {} ({}, {})", chosen, s.caps.c1(), s.caps.c2())?;
    if cfg.sim_trials > 0 {
        let policy = StatePolicy::degenerate(chosen, model.len());
        let stats = finite_state_span_stats(
            &model,
            backlog,
            &policy,
            cfg.sim_trials,
            cfg.seed,
            FiniteSimOptions::default(),
        )?;
        let (lo, hi) = stats.ci95();
        writeln!(
            console,
            "mean span {} (stderr {}, 95% ci [{}, {}], {} trials)",
            stats.mean, stats.stderr, lo, hi, stats.trials
        )?;
    }
    Ok(())
}

/// One relay run with the trace settings, on trial stream `(seed, 0, 0)`.
pub fn trace(cfg: &CliConfig) -> Result<Vec<relay_core::fading::TraceRow>> {
    let buffers = RelayBuffers::from_sources(
        mbytes_to_bits(cfg.b1_mbytes),
        mbytes_to_bits(cfg.b2_mbytes),
    )?;
    let fading = cfg.fading()?;
    let mut gains: Box<dyn GainSource> = if cfg.trace_constant_gains {
        let g = fading.mean_min_gain();
        Box::new(ConstantGains(g, g))
    } else {
        Box::new(RayleighGains::new(&fading, trial_rng(cfg.seed, 0, 0)))
    };
    let out = run_relay(
        cfg.trace_strategy,
        buffers,
        &fading,
        &cfg.power(cfg.trace_budget_dbm)?,
        cfg.trace_knowledge,
        gains.as_mut(),
        RelayOptions {
            slot_cap: cfg.slot_cap,
            max_horizon: cfg.max_horizon,
            record_trace: true,
        },
    )?;
    Ok(out.trace)
}

fn emit_summary(rows: &[SummaryRow], out: Option<&Path>, console: &mut dyn Write) -> Result<()> {
    let mut csv = Vec::new();
    write_summary_csv(rows, &mut csv)?;
    emit(&csv, out, console)?;
    if out.is_some() {
        writeln!(console, "{:>8}  {:<16} {:<10} {:>9} {:>8}", "value", "strategy", "knowledge", "mean", "stderr")?;
        for r in rows {
            writeln!(
                console,
                "{:>8}  {:<16} {:<10} {:>9.3} {:>8.3}",
                r.sweep_value,
                r.strategy.to_string(),
                r.knowledge.to_string(),
                r.mean_span_slots,
                r.stderr
            )?;
        }
    }
    Ok(())
}

fn emit(bytes: &[u8], out: Option<&Path>, console: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        }),
        None => Ok(console.write_all(bytes)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = CliConfig::default();
        let back = CliConfig::from_toml(&cfg.to_toml(), Path::new("x")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = CliConfig::from_toml("trials = 3\nratios = [0.5]\n", Path::new("x")).unwrap();
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.ratios, vec![0.5]);
        assert_eq!(cfg.b1_mbytes, 8.5);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_reported_with_lines() {
        let err = CliConfig::from_toml("trials = 3\nbogus = 1\n", Path::new("cfg.toml")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cfg.toml") && msg.contains("line 2"), "{msg}");
        let err = CliConfig::from_toml("seed = 1\n\nstrategies_x = [\n", Path::new("c")).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = CliConfig::from_toml("power_strategies = [\"nc\"]\n", Path::new("c")).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn megabytes_become_bits() {
        let cfg = CliConfig::default();
        match cfg.power_experiment().unwrap().sweep {
            Sweep::Power { b1_bits, b2_bits, .. } => assert_eq!((b1_bits, b2_bits), (6.8e7, 6.8e7)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn pmf_must_sum_to_one() {
        let cfg = CliConfig {
            probs: vec![0.3, 0.3, 0.3, 0.3],
            ..Default::default()
        };
        assert!(matches!(cfg.finite_state_model(), Err(CliError::Invalid(_))));
    }

    #[test]
    fn overrides_win() {
        let common = CommonArgs {
            seed: Some(9),
            trials: Some(4),
            ..Default::default()
        };
        let cfg = effective_config(&common).unwrap();
        assert_eq!((cfg.seed, cfg.trials), (9, 4));
    }
}
