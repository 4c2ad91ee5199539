use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use risee_core::experiments::{ExperimentSpec, SweepKind};
use risee_core::{Architecture, SystemConfig};

#[derive(Debug, Parser)]
#[command(name = "risee", version, about = "SE/EE tradeoff simulator for RIS-aided URLLC downlinks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the SEE weight alpha and report (min-rate, min-EE) points.
    Pareto(RunArgs),
    /// Sweep the per-element / per-circuit RIS power (grid in mW).
    SweepStaticPower(RunArgs),
    /// Sweep the number of RIS elements.
    SweepNris(RunArgs),
    /// Sweep the transmit power (grid in dB), optionally for several stream counts.
    SweepPower(RunArgs),
    /// Optimise one channel draw and print the resulting metrics.
    SingleTrial(SingleArgs),
    /// Run quick internal consistency checks.
    Selftest,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Sweep values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Stream counts for sweep-power (sets n_bs = n_u = d_streams).
    #[arg(long, value_delimiter = ',')]
    pub streams: Option<Vec<usize>>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Run each architecture from scratch instead of chaining warm starts.
    #[arg(long)]
    pub no_warm_start: bool,
    /// Record wall-clock times in the wall_ms column.
    #[arg(long)]
    pub timing: bool,
    /// Also write trial averages as gnuplot blocks.
    #[arg(long)]
    pub dat: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SingleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Trial index used to derive the channel seed.
    #[arg(long, default_value_t = 0)]
    pub trial: u64,
    /// Write the generated channels to this file.
    #[arg(long)]
    pub dump_channels: Option<PathBuf>,
    /// Use channels from a dump file instead of generating them.
    #[arg(long)]
    pub load_channels: Option<PathBuf>,
    #[arg(long)]
    pub no_warm_start: bool,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML file with the experiment settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Architecture to run (repeatable): no-ris, rand-d, lnp-d, lnp-bd, gnp-d, gnp-bd.
    #[arg(long = "arch")]
    pub arch: Vec<Architecture>,
    /// Output CSV path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dump per-iteration optimiser traces (to <out>.trace.csv, or stdout).
    #[arg(long)]
    pub trace: bool,

    #[arg(long)]
    pub n_bs: Option<usize>,
    #[arg(long)]
    pub n_u: Option<usize>,
    #[arg(long)]
    pub k_users: Option<usize>,
    #[arg(long)]
    pub n_ris: Option<usize>,
    #[arg(long)]
    pub d_streams: Option<usize>,
    /// Blocklength; "inf" for the Shannon limit.
    #[arg(long)]
    pub n_block: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Transmit budget, linear.
    #[arg(long, conflicts_with = "p_db")]
    pub p_budget: Option<f64>,
    /// Transmit budget in dB over sigma2.
    #[arg(long)]
    pub p_db: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// SEE weights: one value for all users or one per user.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,

    #[arg(long)]
    pub p_t: Option<f64>,
    #[arg(long)]
    pub p_ris0_d: Option<f64>,
    #[arg(long)]
    pub p_ris_n_d: Option<f64>,
    #[arg(long)]
    pub p_ris0_bd: Option<f64>,
    #[arg(long)]
    pub p_ris_n_bd: Option<f64>,

    #[arg(long)]
    pub rician_k: Option<f64>,
    /// Receiver noise power used to normalise the channels.
    #[arg(long, allow_hyphen_values = true)]
    pub noise_dbm: Option<f64>,

    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub max_outer_iters: Option<usize>,
    #[arg(long)]
    pub inner_step0: Option<f64>,
    #[arg(long)]
    pub inner_iters: Option<usize>,
    /// Accept half-steps even when they lower the true objective.
    #[arg(long)]
    pub no_safeguard: bool,
}

/// Default sweep settings of each subcommand, before the config file and
/// flags are applied.
pub fn preset(kind: SweepKind) -> ExperimentSpec {
    let mut spec = ExperimentSpec { kind, ..ExperimentSpec::default() };
    match kind {
        SweepKind::Alpha => spec.grid = vec![0.0, 0.25, 0.5, 0.75, 1.0],
        SweepKind::RisStaticPower => {
            spec.grid = vec![5.0, 10.0, 20.0, 40.0];
            spec.system = SystemConfig::default().with_streams(5).with_alpha(0.0);
        }
        SweepKind::NRis => {
            spec.grid = vec![4.0, 8.0, 12.0, 16.0, 20.0];
            spec.system = SystemConfig::default().with_streams(2);
            spec.power.p_t = 5.0;
            spec.power = spec.power.with_element_power(0.01);
        }
        SweepKind::TxPower => {
            spec.grid = vec![0.0, 5.0, 10.0, 15.0, 20.0];
            spec.system = SystemConfig::default().with_alpha(1.0);
        }
    }
    spec
}

impl CommonArgs {
    pub fn apply(&self, spec: &mut ExperimentSpec) {
        let s = &mut spec.system;
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src {
                    $dst = v;
                }
            };
        }
        set!(s.n_bs, self.n_bs);
        set!(s.n_u, self.n_u);
        set!(s.k_users, self.k_users);
        set!(s.n_ris, self.n_ris);
        set!(s.d_streams, self.d_streams);
        set!(s.n_block, self.n_block);
        set!(s.epsilon, self.epsilon);
        set!(s.sigma2, self.sigma2);
        set!(s.p_budget, self.p_budget);
        if let Some(db) = self.p_db {
            s.p_budget = SystemConfig::p_from_db(db, s.sigma2);
        }
        set!(s.eta, self.eta);
        if self.d_streams.is_none() {
            s.d_streams = s.d_streams.min(s.n_bs.min(s.n_u));
        }
        match &self.alpha {
            Some(a) if a.len() == 1 => s.alpha = vec![a[0]; s.k_users],
            Some(a) => s.alpha = a.clone(),
            None => {}
        }
        if s.alpha.len() != s.k_users && !s.alpha.is_empty() && s.alpha.iter().all(|a| *a == s.alpha[0]) {
            s.alpha = vec![s.alpha[0]; s.k_users];
        }
        let p = &mut spec.power;
        set!(p.p_t, self.p_t);
        set!(p.p_ris0_d, self.p_ris0_d);
        set!(p.p_ris_n_d, self.p_ris_n_d);
        set!(p.p_ris0_bd, self.p_ris0_bd);
        set!(p.p_ris_n_bd, self.p_ris_n_bd);
        set!(spec.fading.rician_k, self.rician_k);
        set!(spec.fading.noise_power_dbm, self.noise_dbm);
        let a = &mut spec.algo;
        set!(a.delta, self.delta);
        set!(a.max_outer_iters, self.max_outer_iters);
        set!(a.inner_step0, self.inner_step0);
        set!(a.inner_iters, self.inner_iters);
        if self.no_safeguard {
            a.safeguard = false;
        }
        set!(spec.seed, self.seed);
        if !self.arch.is_empty() {
            spec.architectures = self.arch.clone();
        }
    }
}

impl RunArgs {
    pub fn apply(&self, spec: &mut ExperimentSpec) {
        self.common.apply(spec);
        if let Some(g) = &self.grid {
            spec.grid = g.clone();
        }
        if let Some(t) = self.trials {
            spec.trials = t;
        }
        if let Some(s) = &self.streams {
            spec.streams = s.clone();
        }
        if let Some(t) = self.threads {
            spec.threads = t;
        }
        if self.no_warm_start {
            spec.warm_start = false;
        }
        if self.timing {
            spec.timing = true;
        }
    }
}
