mod args;
mod selftest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use risee_core::channel::{self, read_channel_dump, write_channel_dump};
use risee_core::experiments::{self, ExperimentSpec, ResultRow, SweepKind, SweepPoint, TraceRow};
use risee_core::Error;

use args::{Cli, Command, CommonArgs};

/// Exit status classes.
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_)
            | Error::Parse(_)
            | Error::Domain(_)
            | Error::Dimension(_)
            | Error::MissingWeight(_) => Failure::Config(e.to_string()),
            Error::Numeric(_) | Error::NoConvergence { .. } | Error::Io { .. } => Failure::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: invalid configuration: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (kind, run_args) = match cli.command {
        Command::Pareto(a) => (SweepKind::Alpha, a),
        Command::SweepStaticPower(a) => (SweepKind::RisStaticPower, a),
        Command::SweepNris(a) => (SweepKind::NRis, a),
        Command::SweepPower(a) => (SweepKind::TxPower, a),
        Command::SingleTrial(a) => return single_trial(a),
        Command::Selftest => return selftest::run(),
    };
    let mut spec = load_spec(kind, run_args.common.config.as_deref())?;
    run_args.apply(&mut spec);
    spec.validate()?;
    let out = experiments::run_experiment(&spec, run_args.common.trace)?;
    let rows = if kind == SweepKind::Alpha { sort_by_value(out.rows) } else { out.rows };
    let summaries = experiments::summarize(&rows);
    print_summary(&summaries);
    if out.flag_count > 0 {
        eprintln!("note: {} optimiser flag events (rejected half-steps or negative rates)", out.flag_count);
    }
    if let Some(path) = &run_args.dat {
        experiments::emit_dat(&summaries, path)?;
    }
    write_outputs(&run_args.common, &rows, &out.traces)
}

/// Stable sort on the sweep value within each label; keeps the
/// (architecture, trial) order of equal values.
fn sort_by_value(mut rows: Vec<ResultRow>) -> Vec<ResultRow> {
    rows.sort_by(|a, b| a.sweep_kind.cmp(&b.sweep_kind).then(a.sweep_value.total_cmp(&b.sweep_value)));
    rows
}

/// Subcommand preset, overlaid with the config file (if any).
fn load_spec(kind: SweepKind, config: Option<&Path>) -> Result<ExperimentSpec, Failure> {
    let preset = args::preset(kind);
    let Some(path) = config else {
        return Ok(preset);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: toml::Table =
        toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut base = toml::Table::try_from(&preset).map_err(|e| Failure::Runtime(e.to_string()))?;
    merge(&mut base, file);
    let mut spec: ExperimentSpec = toml::Value::Table(base)
        .try_into()
        .map_err(|e: toml::de::Error| Failure::Config(format!("{}: {e}", path.display())))?;
    spec.kind = kind;
    Ok(spec)
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn print_summary(summaries: &[experiments::Summary]) {
    eprintln!("{:<18} {:>10} {:<8} {:>12} {:>12} {:>12}", "sweep", "value", "arch", "min_rate", "min_ee", "min_see");
    for s in summaries {
        eprintln!(
            "{:<18} {:>10.4} {:<8} {:>12.6} {:>12.6} {:>12.6}",
            s.sweep_kind,
            s.sweep_value,
            s.architecture.name(),
            s.min_rate,
            s.min_ee,
            s.min_see
        );
    }
}

fn trace_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".trace.csv");
    PathBuf::from(s)
}

fn write_outputs(common: &CommonArgs, rows: &[ResultRow], traces: &[TraceRow]) -> Result<(), Failure> {
    match &common.out {
        Some(path) => {
            experiments::emit_csv(rows, path)?;
            if common.trace {
                experiments::emit_trace_csv(traces, &trace_path(path))?;
            }
        }
        None => {
            print!("{}", experiments::to_csv(rows));
            if common.trace {
                print!("{}", experiments::trace_csv(traces));
            }
        }
    }
    Ok(())
}

fn single_trial(a: args::SingleArgs) -> Result<(), Failure> {
    let mut spec = load_spec(SweepKind::Alpha, a.common.config.as_deref())?;
    a.common.apply(&mut spec);
    if a.no_warm_start {
        spec.warm_start = false;
    }
    spec.system.validate()?;
    spec.power.validate()?;
    spec.fading.validate()?;
    spec.algo.validate()?;
    let point = SweepPoint {
        label: "single".into(),
        value: spec.system.alpha.first().copied().unwrap_or(0.0),
        system: spec.system.clone(),
        power: spec.power.clone(),
    };
    let seed = experiments::trial_seed(spec.seed, a.trial);
    let ch = match &a.load_channels {
        Some(path) => {
            let ch = read_channel_dump(path)?;
            ch.check(&point.system)?;
            ch
        }
        None => {
            let geom = channel::generate_scenario(&point.system, seed);
            channel::generate_channels(&geom, &spec.fading, &point.system, seed)
        }
    };
    if let Some(path) = &a.dump_channels {
        write_channel_dump(&ch, path)?;
    }
    let outcomes = if spec.warm_start {
        experiments::run_chain_on(&point, &ch, &spec.algo, &spec.architectures, seed, true)?
    } else {
        spec.architectures
            .iter()
            .map(|&arch| experiments::run_trial_on(&point, &ch, &spec.algo, arch, seed, true))
            .collect::<risee_core::Result<Vec<_>>>()?
    };
    let rows: Vec<ResultRow> = outcomes.iter().map(|o| o.row.clone()).collect();
    let traces: Vec<TraceRow> = outcomes
        .iter()
        .flat_map(|o| {
            o.records.iter().map(|r| TraceRow {
                sweep_kind: o.row.sweep_kind.clone(),
                sweep_value: o.row.sweep_value,
                architecture: o.row.architecture,
                seed: o.row.seed,
                record: r.clone(),
            })
        })
        .collect();
    for o in &outcomes {
        eprintln!(
            "{:<8} min_rate {:.6} bit  min_ee {:.6} bit/J  min_see {:.6}  iters {}  flags {}",
            o.row.architecture.name(),
            o.row.min_rate,
            o.row.min_ee,
            o.row.min_see,
            o.row.iters,
            o.flags.len()
        );
    }
    write_outputs(&a.common, &rows, &traces)
}
