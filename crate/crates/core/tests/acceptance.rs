//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Run with `cargo test -p risee-core --test acceptance`.

mod common;

use std::time::Instant;

use rand::Rng;
use risee_core::channel::{self, ChannelSet, FadingParams};
use risee_core::experiments::{self, ExperimentSpec, ResultRow, SweepKind};
use risee_core::feasibility::{self, ScatteringMatrix};
use risee_core::linalg::{self, CMat};
use risee_core::model::{self, fbl_rate, fbl_rates, inv_q};
use risee_core::optimizer::{self, PrecoderSet};
use risee_core::surrogate::{self, SurrogateCoeffs};
use risee_core::{AlgoParams, Architecture, BeamformerSet, IterateState, PowerModel, SystemConfig};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

const MASTER_SEED: u64 = 20_240_611;

// ---------------------------------------------------------------------------
// Criteria 1 and 2 share the same optimisation runs.

struct Run {
    ch: ChannelSet,
    cfg: SystemConfig,
    state: IterateState,
    secs: f64,
}

fn convergence_config() -> SystemConfig {
    SystemConfig { n_bs: 4, n_u: 4, k_users: 2, n_ris: 12, d_streams: 4, n_block: 256.0, epsilon: 1e-5, ..SystemConfig::default() }
        .with_alpha(0.5)
}

fn convergence_runs() -> Vec<Run> {
    let cfg = convergence_config();
    let params = AlgoParams { keep_history: true, ..AlgoParams::default() };
    let pm = PowerModel::default();
    let mut runs = Vec::new();
    for trial in 0..50 {
        let seed = experiments::trial_seed(MASTER_SEED, trial);
        let geom = channel::generate_scenario(&cfg, seed);
        let ch = channel::generate_channels(&geom, &FadingParams::default(), &cfg, seed);
        for arch in Architecture::OPTIMIZED {
            let t0 = Instant::now();
            let (state, _) = optimizer::run_algorithm_one(&ch, &cfg, &pm, arch, &params, seed).expect("run succeeds");
            runs.push(Run { ch: ch.clone(), cfg: cfg.clone(), state, secs: t0.elapsed().as_secs_f64() });
        }
    }
    runs
}

fn criterion_1(runs: &[Run]) -> Verdict {
    let params = AlgoParams::default();
    let mut worst_drop = 0.0f64;
    let mut max_iters = 0;
    let mut bad_stop = 0;
    let mut infeasible = 0;
    let mut max_secs = 0.0f64;
    for r in runs {
        for w in r.state.half_steps.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
        max_iters = max_iters.max(r.state.iterations());
        let t = &r.state.trace;
        let n = t.len();
        let rel = (t[n - 1] - t[n - 2]) / t[n - 2].abs().max(f64::MIN_POSITIVE);
        if !(rel < params.delta) || r.state.iterations() > params.max_outer_iters {
            bad_stop += 1;
        }
        for rec in &r.state.records {
            if rec.power_residual > 1e-9 || rec.phi_violation > feasibility::CONTAINS_TOL {
                infeasible += 1;
            }
        }
        max_secs = max_secs.max(r.secs);
    }
    let pass = worst_drop <= 1e-9 && bad_stop == 0 && infeasible == 0 && max_iters <= 200 && max_secs < 120.0;
    verdict(
        pass,
        format!(
            "{} runs, worst half-step drop {worst_drop:.2e}, max iters {max_iters}, non-delta stops {bad_stop}, infeasible iterates {infeasible}, slowest run {max_secs:.2}s",
            runs.len()
        ),
    )
}

/// Central difference of `f` along a direction, step `h`.
fn central(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

struct SurrogateStats {
    points: usize,
    tangency: f64,
    minorization: f64,
    gradient: f64,
}

impl SurrogateStats {
    fn absorb(&mut self, o: SurrogateStats) {
        self.points += o.points;
        self.tangency = self.tangency.max(o.tangency);
        self.minorization = self.minorization.max(o.minorization);
        self.gradient = self.gradient.max(o.gradient);
    }
}

/// Checks every user's surrogate at the expansion point `(w, phi)`.
fn check_point(
    run: &Run,
    w: &BeamformerSet,
    phi: &ScatteringMatrix,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> SurrogateStats {
    let cfg = &run.cfg;
    let ch = &run.ch;
    let h = channel::effective_channels(ch, phi).unwrap();
    let coeffs: Vec<SurrogateCoeffs> =
        (0..cfg.k_users).map(|k| surrogate::build_coeffs(ch, phi, w, cfg, k).unwrap()).collect();
    let mut stats = SurrogateStats { points: 1, tangency: 0.0, minorization: 0.0, gradient: 0.0 };

    let rates = fbl_rates(&h, w, cfg).unwrap();
    for c in &coeffs {
        stats.tangency = stats.tangency.max((surrogate::eval_surrogate_w(c, w, &h) - rates[c.k]).abs());
        let phi_val = surrogate::eval_surrogate_phi(c, phi, ch, w).unwrap();
        stats.tangency = stats.tangency.max((phi_val - rates[c.k]).abs());
    }

    // Precoder-side evaluator against the true rate on feasible precoders.
    let set = PrecoderSet::new(cfg, ch, phi);
    for _ in 0..200 {
        let probe = set.project(common::ball_precoders(rng, cfg.k_users, cfg.n_bs, cfg.d_streams, cfg.p_budget));
        let probe = BeamformerSet::new(probe);
        let truth = fbl_rates(&h, &probe, cfg).unwrap();
        for c in &coeffs {
            let gap = surrogate::eval_surrogate_w(c, &probe, &h) - truth[c.k];
            stats.minorization = stats.minorization.max(gap);
        }
    }

    // Scattering-side evaluator on feasible scattering matrices.
    let weight = phi.arch.is_gnp().then(|| feasibility::gnp_weight(&ch.g, w));
    for _ in 0..200 {
        let m = common::sample_member(rng, phi.arch, cfg.n_ris, weight.as_ref());
        let probe = ScatteringMatrix::new(m, phi.arch);
        let hp = channel::effective_channels(ch, &probe).unwrap();
        let truth = fbl_rates(&hp, w, cfg).unwrap();
        for c in &coeffs {
            let gap = surrogate::eval_surrogate_phi(c, &probe, ch, w).unwrap() - truth[c.k];
            stats.minorization = stats.minorization.max(gap);
        }
    }

    // Analytic surrogate gradients against central differences of the true
    // rate, along random directions.
    for c in &coeffs {
        let gw = c.grad_w(&h[c.k], &w.w);
        let gw_norm = gw.iter().map(linalg::fro2).sum::<f64>().sqrt();
        for _ in 0..3 {
            let dir: Vec<CMat> = (0..cfg.k_users).map(|_| common::gauss(rng, cfg.n_bs, cfg.d_streams, 1.0)).collect();
            let dn = dir.iter().map(linalg::fro2).sum::<f64>().sqrt();
            let analytic: f64 = gw.iter().zip(&dir).map(|(g, d)| linalg::inner_re(g, d)).sum();
            let hstep = 1e-5 * (cfg.p_budget.sqrt() / dn);
            let fd = central(
                |t| {
                    let moved: Vec<CMat> = w.w.iter().zip(&dir).map(|(a, d)| a + d.scale(t)).collect();
                    fbl_rate(&h, &BeamformerSet::new(moved), cfg, c.k).unwrap()
                },
                hstep,
            );
            stats.gradient = stats.gradient.max((fd - analytic).abs() / (gw_norm * dn).max(1e-300));
        }
        let gp = c.grad_phi(ch, &h[c.k], &w.w);
        for _ in 0..3 {
            let dir = common::structured(rng, phi.arch, cfg.n_ris);
            let gp_s = if phi.arch.is_diagonal() {
                linalg::diag(&linalg::diagonal_of(&gp))
            } else {
                linalg::symmetric_part(&gp)
            };
            let analytic = linalg::inner_re(&gp, &dir);
            let hstep = 1e-5 / linalg::fro(&dir);
            let fd = central(
                |t| {
                    let moved = ScatteringMatrix::new(&phi.phi + dir.scale(t), phi.arch);
                    let hk = channel::effective_channel(ch, &moved, c.k).unwrap();
                    let mut hs = h.clone();
                    hs[c.k] = hk;
                    fbl_rate(&hs, w, cfg, c.k).unwrap()
                },
                hstep,
            );
            let scale = (linalg::fro(&gp_s) * linalg::fro(&dir)).max(1e-300);
            stats.gradient = stats.gradient.max((fd - analytic).abs() / scale);
        }
    }
    stats
}

fn criterion_2(runs: &[Run]) -> Verdict {
    let mut rng = common::rng(7);
    let mut total = SurrogateStats { points: 0, tangency: 0.0, minorization: 0.0, gradient: 0.0 };
    for r in runs {
        let hist = &r.state.history;
        for l in 0..hist.len() - 1 {
            // Precoder step expands at (W^l, Phi^l), scattering step at (W^{l+1}, Phi^l).
            total.absorb(check_point(r, &hist[l].0, &hist[l].1, &mut rng));
            total.absorb(check_point(r, &hist[l + 1].0, &hist[l].1, &mut rng));
        }
    }
    let pass = total.tangency <= 1e-7 && total.minorization <= 1e-7 && total.gradient <= 1e-4;
    verdict(
        pass,
        format!(
            "{} expansion points, max |r~ - r| {:.2e}, max r~ - r over probes {:.2e}, max gradient error {:.2e}",
            total.points, total.tangency, total.minorization, total.gradient
        ),
    )
}

// ---------------------------------------------------------------------------

fn criterion_3() -> Verdict {
    let mut rng = common::rng(3);
    let n = 6;
    let mut disagreements = 0;
    let mut boundary = 0;
    for _ in 0..1000 {
        let m = common::gauss(&mut rng, n, n, 1.0);
        let target = if rng.random_bool(0.1) { 1.0 } else { rng.random_range(0.5..1.5) };
        let phi = m.scale(target / linalg::spectral_norm(&m));
        let norm = linalg::spectral_norm(&phi);
        if (norm - 1.0).abs() <= 1e-8 {
            boundary += 1;
            continue;
        }
        if feasibility::lmi_holds(&phi, 1e-12) != (norm <= 1.0) {
            disagreements += 1;
        }
    }

    use Architecture::*;
    let implications = [
        (LnpD, vec![LnpBd, GnpD, GnpBd]),
        (LnpBd, vec![GnpBd]),
        (GnpD, vec![GnpBd]),
    ];
    let mut nesting_failures = 0;
    for (from, supersets) in &implications {
        for _ in 0..1000 {
            let w = common::random_weight(&mut rng, n);
            let member = common::sample_member(&mut rng, *from, n, Some(&w));
            assert!(feasibility::contains(*from, &member, Some(&w)).unwrap().feasible);
            for to in supersets {
                if !feasibility::contains(*to, &member, Some(&w)).unwrap().feasible {
                    nesting_failures += 1;
                }
            }
        }
    }
    verdict(
        disagreements == 0 && nesting_failures == 0,
        format!("LMI/spectral disagreements {disagreements} ({boundary} boundary cases skipped), nesting failures {nesting_failures} over 3000 members"),
    )
}

fn criterion_4() -> Verdict {
    let mut rng = common::rng(4);
    let n = 6;
    let mut not_feasible = 0;
    let mut beaten = 0;
    let mut worst_idem = 0.0f64;
    for arch in Architecture::OPTIMIZED {
        for _ in 0..100 {
            let w = common::random_weight(&mut rng, n);
            let weight = arch.is_gnp().then_some(&w);
            let x = loop {
                let x = common::gauss(&mut rng, n, n, 4.0);
                if !feasibility::contains(arch, &x, weight).unwrap().feasible {
                    break x;
                }
            };
            let p = feasibility::project(arch, &x, weight).unwrap().phi;
            if !feasibility::contains(arch, &p, weight).unwrap().feasible {
                not_feasible += 1;
            }
            let dist = linalg::fro(&(&x - &p));
            for i in 0..1000 {
                // Half the comparators are feasible perturbations of the
                // projection, the rest are spread over the whole set.
                let c = if i % 2 == 0 {
                    let eps = 10f64.powf(rng.random_range(-6.0..-1.0));
                    let d = common::structured(&mut rng, arch, n);
                    common::pull_in(arch, &p + d.scale(eps / linalg::fro(&d)), weight)
                } else {
                    common::sample_member(&mut rng, arch, n, weight)
                };
                debug_assert!(feasibility::contains(arch, &c, weight).unwrap().feasible);
                if linalg::fro(&(&x - &c)) < dist - 1e-12 {
                    beaten += 1;
                }
            }
            let pp = feasibility::project(arch, &p, weight).unwrap().phi;
            worst_idem = worst_idem.max(linalg::fro(&(&pp - &p)));
        }
    }
    verdict(
        not_feasible == 0 && beaten == 0 && worst_idem <= 2e-9,
        format!("400 exterior points: infeasible projections {not_feasible}, closer comparators {beaten}, worst idempotence gap {worst_idem:.2e}"),
    )
}

// ---------------------------------------------------------------------------

fn criterion_5() -> (Verdict, Vec<ResultRow>) {
    let spec = ExperimentSpec {
        kind: SweepKind::TxPower,
        grid: vec![10.0],
        streams: vec![1, 2, 4],
        trials: 20,
        seed: MASTER_SEED,
        system: SystemConfig { k_users: 2, n_ris: 20, ..SystemConfig::default() }.with_alpha(1.0),
        ..ExperimentSpec::default()
    };
    let rows = experiments::sweep(&spec).expect("sweep runs");
    let summary = experiments::summarize(&rows);
    let mean = |label: &str, arch: Architecture| {
        summary.iter().find(|s| s.sweep_kind == label && s.architecture == arch).unwrap().min_rate
    };
    use Architecture::*;
    let chain = [GnpBd, LnpBd, LnpD, RandD, NoRis];
    let mut gains = Vec::new();
    let mut order_ok = true;
    let mut worst_gap = f64::INFINITY;
    for i in [1, 2, 4] {
        let label = format!("tx_power_i{i}");
        gains.push((mean(&label, GnpBd) - mean(&label, NoRis)) / mean(&label, NoRis));
        for pair in chain.windows(2) {
            let gap = mean(&label, pair[0]) - mean(&label, pair[1]);
            worst_gap = worst_gap.min(gap);
            order_ok &= gap >= -1e-6;
        }
    }
    let decreasing = gains.windows(2).all(|g| g[1] < g[0]);
    (
        verdict(
            decreasing && order_ok,
            format!(
                "relative gain of gnp-bd over no-ris at I=1,2,4: {:.4}, {:.4}, {:.4}; smallest ordered gap {worst_gap:.3e}",
                gains[0], gains[1], gains[2]
            ),
        ),
        rows,
    )
}

fn criterion_6() -> Verdict {
    let spec = ExperimentSpec {
        kind: SweepKind::RisStaticPower,
        grid: vec![5.0, 10.0, 20.0, 40.0],
        trials: 20,
        seed: MASTER_SEED,
        system: SystemConfig { k_users: 2, n_ris: 20, ..SystemConfig::default() }.with_streams(5).with_alpha(0.0),
        power: PowerModel { p_t: 2.5, ..PowerModel::default() },
        ..ExperimentSpec::default()
    };
    assert_eq!(model::bd_circuit_count(20), 190);
    let rows = experiments::sweep(&spec).expect("sweep runs");
    let summary = experiments::summarize(&rows);
    let curve = |arch: Architecture| -> Vec<f64> {
        spec.grid
            .iter()
            .map(|v| summary.iter().find(|s| s.sweep_value == *v && s.architecture == arch).unwrap().min_ee)
            .collect()
    };
    use Architecture::*;
    let bd: Vec<Vec<f64>> = [LnpBd, GnpBd].into_iter().map(curve).collect();
    let d: Vec<Vec<f64>> = [LnpD, GnpD].into_iter().map(curve).collect();
    let strictly_decreasing = bd.iter().all(|c| c.windows(2).all(|p| p[1] < p[0]));
    let slope = |c: &[f64], i: usize| (c[i + 1] - c[i]) / (spec.grid[i + 1] - spec.grid[i]);
    let steeper = (0..spec.grid.len() - 1).all(|i| {
        bd.iter().all(|b| d.iter().all(|dd| slope(b, i) < slope(dd, i)))
    });
    let diff: Vec<f64> = curve(GnpD).iter().zip(curve(GnpBd)).map(|(a, b)| a - b).collect();
    let crossover = (0..diff.len() - 1).any(|i| diff[i] <= 0.0 && diff[i + 1] > 0.0);
    let fmt = |c: &[f64]| c.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join("/");
    verdict(
        strictly_decreasing && steeper && crossover,
        format!(
            "min-EE gnp-bd {} gnp-d {} lnp-bd {} lnp-d {}; BD decreasing {strictly_decreasing}, steeper {steeper}, crossover {crossover}",
            fmt(&bd[1]),
            fmt(&d[1]),
            fmt(&bd[0]),
            fmt(&d[0])
        ),
    )
}

// ---------------------------------------------------------------------------

/// Adaptive Simpson integration of the standard normal density.
fn simpson(a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (pdf(a), pdf(b), pdf(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(&pdf, a, b, fa, fm, fb, whole, tol, depth)
}

/// Gaussian tail by quadrature over `[x, x + 12]`.
fn tail_by_quadrature(x: f64) -> f64 {
    let tol = 1e-22_f64.max(simpson(x, x + 12.0, 1e-12, 30) * 1e-13);
    simpson(x, x + 12.0, tol, 50)
}

fn criterion_7() -> Verdict {
    let mut rng = common::rng(77);
    let mut worst_rate = 0.0f64;
    for _ in 0..1000 {
        let cfg = SystemConfig {
            n_bs: 1,
            n_u: 1,
            k_users: 1,
            d_streams: 1,
            n_block: rng.random_range(50.0..2000.0),
            epsilon: 10f64.powf(rng.random_range(-9.0..-1.0)),
            sigma2: rng.random_range(0.1..3.0),
            alpha: vec![0.5],
            ..SystemConfig::default()
        };
        let h = common::cn(&mut rng, 1.0);
        let p: f64 = rng.random_range(0.01..20.0);
        let w = linalg::scaled_eye(1, p.sqrt());
        let got = fbl_rate(&[linalg::scaled_eye(1, 1.0) * h], &BeamformerSet::new(vec![w]), &cfg, 0).unwrap();
        let z = h.norm_sqr() * p;
        let v = inv_q(cfg.epsilon).unwrap() / cfg.n_block.sqrt();
        let want = (1.0 + z / cfg.sigma2).ln() - v * (2.0 * z / (cfg.sigma2 + z)).sqrt();
        worst_rate = worst_rate.max((got - want).abs());
    }

    let mut worst_q = 0.0f64;
    let mut eps_grid: Vec<f64> = (0..60).map(|i| 10f64.powf(-9.0 + i as f64 * (9.0 + 0.5f64.log10()) / 59.0)).collect();
    eps_grid.extend([1e-9, 0.5]);
    for eps in eps_grid {
        // Bisection on the quadrature tail, independent of erfc.
        let (mut lo, mut hi) = (-1.0, 7.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if tail_by_quadrature(mid) > eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        worst_q = worst_q.max((inv_q(eps).unwrap() - oracle).abs());
    }
    verdict(
        worst_rate <= 1e-12 && worst_q <= 1e-9,
        format!("worst scalar-rate error {worst_rate:.2e} over 1000 draws, worst inv_q error {worst_q:.2e} over 62 targets"),
    )
}

fn criterion_8(c5_rows: &[ResultRow]) -> Verdict {
    let base = ExperimentSpec {
        trials: 2,
        seed: 99,
        system: SystemConfig { n_bs: 2, n_u: 2, n_ris: 4, d_streams: 2, ..SystemConfig::default() },
        algo: AlgoParams { max_outer_iters: 8, ..AlgoParams::default() },
        ..ExperimentSpec::default()
    };
    let specs = [
        ExperimentSpec { kind: SweepKind::Alpha, grid: vec![0.0, 1.0], ..base.clone() },
        ExperimentSpec { kind: SweepKind::RisStaticPower, grid: vec![5.0, 40.0], threads: 1, ..base.clone() },
        ExperimentSpec { kind: SweepKind::NRis, grid: vec![2.0, 6.0], threads: 3, ..base.clone() },
        ExperimentSpec { kind: SweepKind::TxPower, grid: vec![0.0, 10.0], streams: vec![1, 2], ..base.clone() },
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut mismatches = 0;
    for (i, spec) in specs.iter().enumerate() {
        let a = dir.path().join(format!("a{i}.csv"));
        let b = dir.path().join(format!("b{i}.csv"));
        experiments::emit_csv(&experiments::sweep(spec).unwrap(), &a).unwrap();
        experiments::emit_csv(&experiments::sweep(spec).unwrap(), &b).unwrap();
        if std::fs::read(&a).unwrap() != std::fs::read(&b).unwrap() {
            mismatches += 1;
        }
    }
    // The large criterion-5 experiment once more, from scratch.
    let spec5 = ExperimentSpec {
        kind: SweepKind::TxPower,
        grid: vec![10.0],
        streams: vec![1, 2, 4],
        trials: 20,
        seed: MASTER_SEED,
        system: SystemConfig { k_users: 2, n_ris: 20, ..SystemConfig::default() }.with_alpha(1.0),
        threads: 2,
        ..ExperimentSpec::default()
    };
    let again = experiments::to_csv(&experiments::sweep(&spec5).unwrap());
    if again != experiments::to_csv(c5_rows) {
        mismatches += 1;
    }
    verdict(mismatches == 0, format!("{mismatches} of 5 re-runs differ byte-wise"))
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, t0: Instant, v: Verdict| {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        if !v.pass {
            failed += 1;
        }
        println!("{tag} criterion {n} ({name}): {} [{:.1}s]", v.detail, t0.elapsed().as_secs_f64());
    };

    let t0 = Instant::now();
    let runs = convergence_runs();
    report(1, "monotone convergence", t0, criterion_1(&runs));
    let t0 = Instant::now();
    report(2, "surrogate contract", t0, criterion_2(&runs));
    drop(runs);
    let t0 = Instant::now();
    report(3, "feasibility-set structure", t0, criterion_3());
    let t0 = Instant::now();
    report(4, "projection optimality", t0, criterion_4());
    let t0 = Instant::now();
    let (v5, rows5) = criterion_5();
    report(5, "stream-count trend", t0, v5);
    let t0 = Instant::now();
    report(6, "static-power trend", t0, criterion_6());
    let t0 = Instant::now();
    report(7, "scalar oracle", t0, criterion_7());
    let t0 = Instant::now();
    report(8, "determinism", t0, criterion_8(&rows5));

    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
