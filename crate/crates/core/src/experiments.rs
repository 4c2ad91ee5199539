//! Monte-Carlo sweeps over the SEE weight, the RIS static power, the RIS
//! size and the transmit power, with CSV output.
//!
//! Every trial draws its geometry and channels from a seed that depends only
//! on the master seed and the trial index, so all architectures (and all
//! non-dimensional sweep values) are compared on the same channels.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelSet, FadingParams};
use crate::error::{Error, Result};
use crate::feasibility;
use crate::model::{Architecture, MetricsRecord, PowerModel, SystemConfig};
use crate::optimizer::{self, AlgoParams, IterRecord, IterateState, OptFlag};
use crate::rng;

pub const CSV_HEADER: &str = "sweep_kind,sweep_value,architecture,seed,min_rate,min_ee,min_see,iters,wall_ms";
pub const TRACE_HEADER: &str =
    "sweep_kind,sweep_value,architecture,seed,iter,objective,min_rate,min_ee,min_see,power_residual,phi_violation,tangency_gap";

const TRIAL_TAG: u64 = 0x74_7269_616c;
const PHI_TAG: u64 = 0x7068_6930;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Common SEE weight of all users.
    Alpha,
    /// Per-element (D) and per-circuit (BD) power, in mW.
    RisStaticPower,
    /// Number of RIS elements.
    NRis,
    /// Transmit budget in dB over the noise power.
    TxPower,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Alpha => "alpha",
            SweepKind::RisStaticPower => "ris_static_power",
            SweepKind::NRis => "n_ris",
            SweepKind::TxPower => "tx_power",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub kind: SweepKind,
    pub grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub architectures: Vec<Architecture>,
    pub system: SystemConfig,
    pub power: PowerModel,
    pub fading: FadingParams,
    pub algo: AlgoParams,
    /// `tx_power` only: repeat the grid for each `I`, with
    /// `n_bs = n_u = d_streams = I`. Rows are labelled `tx_power_i{I}`.
    pub streams: Vec<usize>,
    /// Start each architecture from the solution of the next smaller set.
    pub warm_start: bool,
    /// Record wall-clock times; otherwise `wall_ms` is written as 0 and the
    /// output is fully reproducible.
    pub timing: bool,
    /// Worker threads; 0 picks the available parallelism.
    pub threads: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            kind: SweepKind::Alpha,
            grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            trials: 20,
            seed: 1,
            architectures: Architecture::ALL.to_vec(),
            system: SystemConfig::default(),
            power: PowerModel::default(),
            fading: FadingParams::default(),
            algo: AlgoParams::default(),
            streams: Vec::new(),
            warm_start: true,
            timing: false,
            threads: 0,
        }
    }
}

/// One grid point with its fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub label: String,
    pub value: f64,
    pub system: SystemConfig,
    pub power: PowerModel,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.grid.is_empty() {
            return bad("sweep grid is empty".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.architectures.is_empty() {
            return bad("no architecture selected".into());
        }
        let mut seen = self.architectures.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.architectures.len() {
            return bad("architecture list has duplicates".into());
        }
        if !self.streams.is_empty() && self.kind != SweepKind::TxPower {
            return bad("a streams list is only meaningful for tx_power sweeps".into());
        }
        if let Some(v) = self.grid.iter().find(|v| !v.is_finite()) {
            return bad(format!("grid value {v} is not finite"));
        }
        self.power.validate()?;
        self.fading.validate()?;
        self.algo.validate()?;
        for p in self.points()? {
            p.system.validate()?;
            p.power.validate()?;
        }
        Ok(())
    }

    /// Resolved grid points, in grid order (outer loop over `streams`).
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let mut base = self.system.clone();
        if base.alpha.len() != base.k_users && !base.alpha.is_empty() && base.alpha.iter().all(|a| *a == base.alpha[0]) {
            base.alpha = vec![base.alpha[0]; base.k_users];
        }
        let variants: Vec<(String, SystemConfig)> = if self.streams.is_empty() {
            vec![(self.kind.name().to_string(), base)]
        } else {
            self.streams
                .iter()
                .map(|&i| (format!("{}_i{i}", self.kind.name()), base.clone().with_streams(i)))
                .collect()
        };
        let mut out = Vec::new();
        for (label, sys) in variants {
            for &v in &self.grid {
                let mut system = sys.clone();
                let mut power = self.power.clone();
                match self.kind {
                    SweepKind::Alpha => {
                        if !(0.0..=1.0).contains(&v) {
                            return Err(Error::InvalidConfig(format!("alpha = {v} outside [0, 1]")));
                        }
                        system = system.with_alpha(v);
                    }
                    SweepKind::RisStaticPower => {
                        if !(v >= 0.0) {
                            return Err(Error::InvalidConfig(format!("static power {v} mW is negative")));
                        }
                        power = power.with_element_power(v * 1e-3);
                    }
                    SweepKind::NRis => {
                        if !(v >= 1.0 && v.fract() == 0.0) {
                            return Err(Error::InvalidConfig(format!("n_ris = {v} is not a positive integer")));
                        }
                        system.n_ris = v as usize;
                    }
                    SweepKind::TxPower => system.p_budget = SystemConfig::p_from_db(v, system.sigma2),
                }
                out.push(SweepPoint { label: label.clone(), value: v, system, power });
            }
        }
        Ok(out)
    }
}

/// Channel seed of trial `trial`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    rng::derive(master, &[TRIAL_TAG, trial])
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_kind: String,
    pub sweep_value: f64,
    pub architecture: Architecture,
    pub seed: u64,
    pub min_rate: f64,
    pub min_ee: f64,
    pub min_see: f64,
    pub iters: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub row: ResultRow,
    pub records: Vec<IterRecord>,
    pub flags: Vec<OptFlag>,
    pub state: IterateState,
}

fn trial_channels(point: &SweepPoint, fading: &FadingParams, seed: u64) -> ChannelSet {
    let geom = channel::generate_scenario(&point.system, seed);
    channel::generate_channels(&geom, fading, &point.system, seed)
}

fn finish(
    point: &SweepPoint,
    seed: u64,
    state: IterateState,
    ch: &ChannelSet,
    elapsed_ms: f64,
) -> Result<TrialOutcome> {
    let cfg = &point.system;
    let p_c = optimizer::static_power_for(cfg, &point.power, state.arch);
    let h = channel::effective_channels(ch, &state.phi)?;
    let m = MetricsRecord::evaluate(&h, &state.w, cfg, p_c)?;
    Ok(TrialOutcome {
        row: ResultRow {
            sweep_kind: point.label.clone(),
            sweep_value: point.value,
            architecture: state.arch,
            seed,
            min_rate: m.min_rate,
            min_ee: m.min_ee,
            min_see: m.min_see,
            iters: state.iterations(),
            wall_ms: elapsed_ms,
        },
        records: state.records.clone(),
        flags: state.flags.clone(),
        state,
    })
}

fn timed_run(
    start: IterateState,
    ch: &ChannelSet,
    point: &SweepPoint,
    algo: &AlgoParams,
    timing: bool,
) -> Result<(IterateState, f64)> {
    let t0 = Instant::now();
    let state = optimizer::run_from(start, ch, &point.system, &point.power, algo)?;
    let ms = if timing { t0.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    Ok((state, ms))
}

/// Runs one architecture from the default starting point.
pub fn run_trial(
    point: &SweepPoint,
    fading: &FadingParams,
    algo: &AlgoParams,
    arch: Architecture,
    seed: u64,
    timing: bool,
) -> Result<TrialOutcome> {
    let ch = trial_channels(point, fading, seed);
    run_trial_on(point, &ch, algo, arch, seed, timing)
}

/// Same as [`run_trial`] on given channels.
pub fn run_trial_on(
    point: &SweepPoint,
    ch: &ChannelSet,
    algo: &AlgoParams,
    arch: Architecture,
    seed: u64,
    timing: bool,
) -> Result<TrialOutcome> {
    let start = optimizer::init_state(ch, &point.system, arch, rng::derive(seed, &[PHI_TAG]));
    let (state, ms) = timed_run(start, ch, point, algo, timing)?;
    finish(point, seed, state, ch, ms)
}

fn chain_parents(arch: Architecture) -> &'static [Architecture] {
    use Architecture::*;
    match arch {
        NoRis => &[],
        RandD => &[NoRis],
        LnpD => &[RandD],
        LnpBd | GnpD => &[LnpD],
        GnpBd => &[LnpBd, GnpD],
    }
}

fn arch_index(arch: Architecture) -> usize {
    Architecture::ALL.iter().position(|a| *a == arch).expect("listed")
}

/// Runs `archs` on one channel draw with warm-start chaining
/// `NoRis -> RandD -> LnpD -> {LnpBd, GnpD} -> GnpBd`: each architecture
/// starts from the final point of its predecessor (for `GnpBd`, the better
/// of the two), which is feasible for the larger set. Predecessors that are
/// not requested are still run but not reported.
pub fn run_chain(
    point: &SweepPoint,
    fading: &FadingParams,
    algo: &AlgoParams,
    archs: &[Architecture],
    seed: u64,
    timing: bool,
) -> Result<Vec<TrialOutcome>> {
    let ch = trial_channels(point, fading, seed);
    run_chain_on(point, &ch, algo, archs, seed, timing)
}

pub fn run_chain_on(
    point: &SweepPoint,
    ch: &ChannelSet,
    algo: &AlgoParams,
    archs: &[Architecture],
    seed: u64,
    timing: bool,
) -> Result<Vec<TrialOutcome>> {
    let cfg = &point.system;
    let mut needed = [false; 6];
    let mut stack: Vec<Architecture> = archs.to_vec();
    while let Some(a) = stack.pop() {
        if !needed[arch_index(a)] {
            needed[arch_index(a)] = true;
            stack.extend_from_slice(chain_parents(a));
        }
    }
    let phi_seed = rng::derive(seed, &[PHI_TAG]);
    let mut done: [Option<TrialOutcome>; 6] = Default::default();
    for arch in Architecture::ALL {
        if !needed[arch_index(arch)] {
            continue;
        }
        let parents: Vec<&TrialOutcome> = chain_parents(arch)
            .iter()
            .map(|p| done[arch_index(*p)].as_ref().expect("parents run first"))
            .collect();
        let start = match arch {
            Architecture::NoRis => optimizer::init_state(ch, cfg, arch, phi_seed),
            Architecture::RandD => IterateState::from_point(
                parents[0].state.w.clone(),
                feasibility::random_feasible(arch, cfg, phi_seed),
            ),
            _ => {
                let p_c = optimizer::static_power_for(cfg, &point.power, arch);
                let mut best: Option<(f64, &TrialOutcome)> = None;
                for p in &parents {
                    let phi = p.state.phi.retag(arch);
                    let v = optimizer::objective_values(ch, &phi, &p.state.w, cfg, p_c)?
                        .into_iter()
                        .fold(f64::INFINITY, f64::min);
                    if best.is_none_or(|(b, _)| v > b) {
                        best = Some((v, p));
                    }
                }
                let p = best.expect("at least one parent").1;
                IterateState::from_point(p.state.w.clone(), p.state.phi.retag(arch))
            }
        };
        let (state, ms) = timed_run(start, ch, point, algo, timing)?;
        done[arch_index(arch)] = Some(finish(point, seed, state, ch, ms)?);
    }
    Ok(archs
        .iter()
        .map(|a| done[arch_index(*a)].clone().expect("requested architectures are run"))
        .collect())
}

/// Per-iteration record tagged with its trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub sweep_kind: String,
    pub sweep_value: f64,
    pub architecture: Architecture,
    pub seed: u64,
    pub record: IterRecord,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub traces: Vec<TraceRow>,
    /// Number of optimiser flag events over all runs.
    pub flag_count: usize,
}

/// Runs every (point, trial) job, possibly on several threads, and returns
/// rows ordered by (point, architecture, trial).
pub fn run_experiment(spec: &ExperimentSpec, keep_traces: bool) -> Result<ExperimentOutput> {
    spec.validate()?;
    let points = spec.points()?;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    let results: Mutex<Vec<Option<Result<Vec<TrialOutcome>>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let threads = if spec.threads == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        spec.threads
    }
    .min(jobs.len())
    .max(1);

    let work = || loop {
        let j = next.fetch_add(1, Ordering::Relaxed);
        if j >= jobs.len() {
            break;
        }
        let (p, t) = jobs[j];
        let seed = trial_seed(spec.seed, t as u64);
        let point = &points[p];
        let out = if spec.warm_start {
            run_chain(point, &spec.fading, &spec.algo, &spec.architectures, seed, spec.timing)
        } else {
            let ch = trial_channels(point, &spec.fading, seed);
            spec.architectures
                .iter()
                .map(|&a| run_trial_on(point, &ch, &spec.algo, a, seed, spec.timing))
                .collect()
        };
        results.lock().expect("no poisoned workers")[j] = Some(out);
    };
    std::thread::scope(|s| {
        for _ in 1..threads {
            s.spawn(work);
        }
        work();
    });

    let mut per_job = Vec::with_capacity(jobs.len());
    for r in results.into_inner().expect("no poisoned workers") {
        per_job.push(r.expect("every job ran")?);
    }
    let mut out = ExperimentOutput::default();
    for p in 0..points.len() {
        for a in 0..spec.architectures.len() {
            for t in 0..spec.trials {
                let o = &per_job[p * spec.trials + t][a];
                out.rows.push(o.row.clone());
                out.flag_count += o.flags.len();
                if keep_traces {
                    out.traces.extend(o.records.iter().map(|r| TraceRow {
                        sweep_kind: o.row.sweep_kind.clone(),
                        sweep_value: o.row.sweep_value,
                        architecture: o.row.architecture,
                        seed: o.row.seed,
                        record: r.clone(),
                    }));
                }
            }
        }
    }
    Ok(out)
}

/// Generic sweep driver.
pub fn sweep(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    Ok(run_experiment(spec, false)?.rows)
}

/// Alpha sweep with the grid sorted ascending.
pub fn pareto_sweep(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    if spec.kind != SweepKind::Alpha {
        return Err(Error::InvalidConfig("pareto sweep needs kind = alpha".into()));
    }
    let mut spec = spec.clone();
    spec.grid.sort_by(f64::total_cmp);
    spec.grid.dedup();
    sweep(&spec)
}

/// Trial average of one (point, architecture) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub sweep_kind: String,
    pub sweep_value: f64,
    pub architecture: Architecture,
    pub trials: usize,
    pub min_rate: f64,
    pub min_ee: f64,
    pub min_see: f64,
}

/// Averages rows per (sweep kind, value, architecture), in order of first
/// appearance.
pub fn summarize(rows: &[ResultRow]) -> Vec<Summary> {
    let mut out: Vec<Summary> = Vec::new();
    for r in rows {
        let hit = out.iter_mut().find(|s| {
            s.sweep_kind == r.sweep_kind && s.sweep_value == r.sweep_value && s.architecture == r.architecture
        });
        match hit {
            Some(s) => {
                s.trials += 1;
                s.min_rate += r.min_rate;
                s.min_ee += r.min_ee;
                s.min_see += r.min_see;
            }
            None => out.push(Summary {
                sweep_kind: r.sweep_kind.clone(),
                sweep_value: r.sweep_value,
                architecture: r.architecture,
                trials: 1,
                min_rate: r.min_rate,
                min_ee: r.min_ee,
                min_see: r.min_see,
            }),
        }
    }
    for s in &mut out {
        let n = s.trials as f64;
        s.min_rate /= n;
        s.min_ee /= n;
        s.min_see /= n;
    }
    out
}

/// Non-dominated (rate, EE) points of one architecture's curve, sorted by
/// increasing rate; EE is then non-increasing.
pub fn pareto_front(points: &[Summary]) -> Vec<Summary> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| b.min_rate.total_cmp(&a.min_rate).then(b.min_ee.total_cmp(&a.min_ee)));
    let mut front: Vec<Summary> = Vec::new();
    let mut best_ee = f64::NEG_INFINITY;
    for s in sorted {
        if s.min_ee > best_ee {
            best_ee = s.min_ee;
            front.push(s);
        }
    }
    front.reverse();
    front
}

/// 12 significant digits.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        x.to_string()
    }
}

/// Rounds to the CSV float grid.
pub fn round_sig(x: f64) -> f64 {
    fmt_float(x).parse().expect("formatted float parses")
}

pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.sweep_kind,
            fmt_float(r.sweep_value),
            r.architecture,
            r.seed,
            fmt_float(r.min_rate),
            fmt_float(r.min_ee),
            fmt_float(r.min_see),
            r.iters,
            fmt_float(r.wall_ms)
        );
    }
    s
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Parse("missing or unexpected CSV header".into()));
    }
    let num = |f: &str, line: usize| -> Result<f64> {
        f.parse().map_err(|_| Error::Parse(format!("line {line}: bad number {f:?}")))
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(Error::Parse(format!("line {n}: expected 9 fields, got {}", f.len())));
        }
        rows.push(ResultRow {
            sweep_kind: f[0].to_string(),
            sweep_value: num(f[1], n)?,
            architecture: f[2].parse()?,
            seed: f[3].parse().map_err(|_| Error::Parse(format!("line {n}: bad seed")))?,
            min_rate: num(f[4], n)?,
            min_ee: num(f[5], n)?,
            min_see: num(f[6], n)?,
            iters: f[7].parse().map_err(|_| Error::Parse(format!("line {n}: bad iteration count")))?,
            wall_ms: num(f[8], n)?,
        });
    }
    Ok(rows)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    write_file(path, &to_csv(rows))
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    parse_csv(&text)
}

pub fn trace_csv(traces: &[TraceRow]) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for t in traces {
        let r = &t.record;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            t.sweep_kind,
            fmt_float(t.sweep_value),
            t.architecture,
            t.seed,
            r.iter,
            fmt_float(r.objective),
            fmt_float(r.min_rate),
            fmt_float(r.min_ee),
            fmt_float(r.min_see),
            fmt_float(r.power_residual),
            fmt_float(r.phi_violation),
            fmt_float(r.tangency_gap)
        );
    }
    s
}

pub fn emit_trace_csv(traces: &[TraceRow], path: &Path) -> Result<()> {
    write_file(path, &trace_csv(traces))
}

/// Gnuplot data: one block per (sweep kind, architecture), columns
/// `value rate ee see`, blocks separated by two blank lines.
pub fn dat_text(summaries: &[Summary]) -> String {
    let mut keys: Vec<(String, Architecture)> = Vec::new();
    for s in summaries {
        let key = (s.sweep_kind.clone(), s.architecture);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut out = String::new();
    for (kind, arch) in keys {
        let _ = writeln!(out, "# {kind} {arch}");
        for s in summaries.iter().filter(|s| s.sweep_kind == kind && s.architecture == arch) {
            let _ = writeln!(
                out,
                "{} {} {} {}",
                fmt_float(s.sweep_value),
                fmt_float(s.min_rate),
                fmt_float(s.min_ee),
                fmt_float(s.min_see)
            );
        }
        out.push_str("\n\n");
    }
    out
}

pub fn emit_dat(summaries: &[Summary], path: &Path) -> Result<()> {
    write_file(path, &dat_text(summaries))
}
