//! Fast end-to-end sanity checks, printed one per line.

use risee_core::channel::{self, FadingParams};
use risee_core::experiments::{self, ExperimentSpec, SweepKind};
use risee_core::feasibility::{self, GnpWeight};
use risee_core::linalg;
use risee_core::model::{self, fbl_rate, inv_q, q_func};
use risee_core::optimizer;
use risee_core::{AlgoParams, Architecture, BeamformerSet, PowerModel, SystemConfig};

use crate::Failure;

type Check = (&'static str, fn() -> Result<(), String>);

const CHECKS: &[Check] = &[
    ("inverse q-function", check_inv_q),
    ("scalar rate closed form", check_siso),
    ("projections land in their sets", check_projections),
    ("optimiser ascent and feasibility", check_optimizer),
    ("csv round trip", check_csv),
];

pub fn run() -> Result<(), Failure> {
    let mut failed = 0;
    for (name, check) in CHECKS {
        match check() {
            Ok(()) => println!("ok   {name}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} self-test(s) failed")));
    }
    Ok(())
}

fn check_inv_q() -> Result<(), String> {
    for eps in [1e-9, 1e-5, 1e-2, 0.3] {
        let x = inv_q(eps).map_err(|e| e.to_string())?;
        if ((q_func(x) - eps) / eps).abs() > 1e-9 {
            return Err(format!("Q(Q^-1({eps})) = {}", q_func(x)));
        }
    }
    Ok(())
}

fn check_siso() -> Result<(), String> {
    let cfg = SystemConfig { n_bs: 1, n_u: 1, k_users: 1, d_streams: 1, alpha: vec![0.5], ..SystemConfig::default() };
    let h = linalg::c(0.7, -1.1);
    let p: f64 = 3.0;
    let bf = BeamformerSet::new(vec![linalg::scaled_eye(1, p.sqrt())]);
    let got = fbl_rate(&[linalg::scaled_eye(1, 1.0) * h], &bf, &cfg, 0).map_err(|e| e.to_string())?;
    let z = h.norm_sqr() * p;
    let v = inv_q(cfg.epsilon).unwrap() / cfg.n_block.sqrt();
    let want = (1.0 + z / cfg.sigma2).ln() - v * (2.0 * z / (cfg.sigma2 + z)).sqrt();
    if (got - want).abs() > 1e-12 {
        return Err(format!("{got} vs {want}"));
    }
    Ok(())
}

fn check_projections() -> Result<(), String> {
    let cfg = SystemConfig { n_ris: 6, ..SystemConfig::default() };
    let raw = feasibility::random_feasible(Architecture::LnpD, &cfg, 3).phi;
    let outside = (raw.clone() + raw.transpose()).scale(1.7) + linalg::scaled_eye(6, 0.4);
    let d = {
        let a = outside.adjoint() * &outside;
        a + linalg::scaled_eye(6, 0.5)
    };
    let w = GnpWeight::new(d);
    for arch in Architecture::OPTIMIZED {
        let weight = arch.is_gnp().then_some(&w);
        let p = feasibility::project(arch, &outside, weight).map_err(|e| e.to_string())?;
        let m = feasibility::contains(arch, &p.phi, weight).map_err(|e| e.to_string())?;
        if !m.feasible {
            return Err(format!("{arch}: violation {}", m.violation));
        }
    }
    Ok(())
}

fn check_optimizer() -> Result<(), String> {
    let cfg = SystemConfig { n_bs: 2, n_u: 2, n_ris: 6, d_streams: 2, ..SystemConfig::default() };
    let geom = channel::generate_scenario(&cfg, 7);
    let ch = channel::generate_channels(&geom, &FadingParams::default(), &cfg, 7);
    let params = AlgoParams { max_outer_iters: 10, ..AlgoParams::default() };
    for arch in Architecture::ALL {
        let (state, records) = optimizer::run_algorithm_one(&ch, &cfg, &PowerModel::default(), arch, &params, 7)
            .map_err(|e| e.to_string())?;
        if state.half_steps.windows(2).any(|w| w[1] < w[0] - 1e-9) {
            return Err(format!("{arch}: objective decreased"));
        }
        if records.iter().any(|r| r.power_residual > 1e-9 || r.phi_violation > 0.0 && !phi_ok(r.phi_violation)) {
            return Err(format!("{arch}: infeasible iterate"));
        }
    }
    let _ = model::complexity_estimate(&cfg, Architecture::GnpBd);
    Ok(())
}

fn phi_ok(violation: f64) -> bool {
    violation <= feasibility::CONTAINS_TOL
}

fn check_csv() -> Result<(), String> {
    let spec = ExperimentSpec {
        kind: SweepKind::Alpha,
        grid: vec![0.5],
        trials: 1,
        system: SystemConfig { n_bs: 2, n_u: 2, n_ris: 4, d_streams: 1, ..SystemConfig::default() },
        algo: AlgoParams { max_outer_iters: 3, ..AlgoParams::default() },
        threads: 1,
        ..ExperimentSpec::default()
    };
    let rows = experiments::sweep(&spec).map_err(|e| e.to_string())?;
    let text = experiments::to_csv(&rows);
    let back = experiments::parse_csv(&text).map_err(|e| e.to_string())?;
    if experiments::to_csv(&back) != text {
        return Err("re-emitted CSV differs".into());
    }
    Ok(())
}
