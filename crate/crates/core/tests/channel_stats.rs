mod common;

use risee_core::channel::{self, FadingParams, ScenarioGeometry};
use risee_core::linalg::{self, CMat};
use risee_core::{Architecture, ScatteringMatrix, SystemConfig};

fn small_cfg() -> SystemConfig {
    SystemConfig { n_bs: 2, n_u: 2, k_users: 2, n_ris: 2, d_streams: 1, ..SystemConfig::default() }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn fixed_geometry(cfg: &SystemConfig) -> ScenarioGeometry {
    channel::generate_scenario(cfg, 1)
}

#[test]
fn rician_power_split_matches_factor() {
    let cfg = small_cfg();
    let geom = fixed_geometry(&cfg);
    let fp = FadingParams::default();
    let draws = 10_000;
    let gs: Vec<CMat> = (0..draws).map(|s| channel::generate_channels(&geom, &fp, &cfg, s).g).collect();
    let mut mean = linalg::zeros(cfg.n_ris, cfg.n_bs);
    for g in &gs {
        mean += g;
    }
    mean.unscale_mut(draws as f64);
    let los_power = linalg::fro2(&mean) / mean.len() as f64;
    let scatter_power = gs.iter().map(|g| linalg::fro2(&(g - &mean))).sum::<f64>() / (draws as f64 * mean.len() as f64);
    let ratio = los_power / scatter_power;
    assert!((ratio / 3.0 - 1.0).abs() < 0.05, "LOS:scatter = {ratio}");
}

#[test]
fn direct_link_moments_match_path_gain() {
    let cfg = SystemConfig { n_bs: 4, n_u: 4, k_users: 2, n_ris: 2, d_streams: 1, ..SystemConfig::default() };
    let geom = fixed_geometry(&cfg);
    let fp = FadingParams::default();
    let rx = 10f64.powf(-(fp.noise_power_dbm - 30.0) / 20.0);
    let draws = 100_000 / (cfg.n_u * cfg.n_bs);
    for k in 0..cfg.k_users {
        let d = dist(&geom.bs_position, &geom.user_positions[k]);
        let gain = (10f64.powf(-(32.6 + 36.7 * d.log10()) / 20.0) * rx).powi(2);
        let mut sum = linalg::ZERO;
        let mut power = 0.0;
        for s in 0..draws {
            let f = &channel::generate_channels(&geom, &fp, &cfg, s as u64).f_k[k];
            sum += f.iter().sum::<num_complex::Complex64>();
            power += linalg::fro2(f);
        }
        let n = (draws * cfg.n_u * cfg.n_bs) as f64;
        let var = power / n;
        assert!((var / gain - 1.0).abs() < 0.03, "user {k}: variance {var} vs {gain}");
        assert!(sum.norm() / n < 0.03 * gain.sqrt(), "user {k}: mean {}", sum.norm() / n);
    }
}

#[test]
fn distinct_seeds_decorrelate() {
    let cfg = small_cfg();
    let geom = fixed_geometry(&cfg);
    let fp = FadingParams::default();
    let (mut cross, mut pa, mut pb) = (linalg::ZERO, 0.0, 0.0);
    for s in 0..1000u64 {
        let a = channel::generate_channels(&geom, &fp, &cfg, 2 * s);
        let b = channel::generate_channels(&geom, &fp, &cfg, 2 * s + 1);
        for (x, y) in a.f_k[0].iter().zip(b.f_k[0].iter()).chain(a.g_k[1].iter().zip(b.g_k[1].iter())) {
            cross += x * y.conj();
            pa += x.norm_sqr();
            pb += y.norm_sqr();
        }
    }
    let rho = cross.norm() / (pa * pb).sqrt();
    assert!(rho < 0.05, "cross-correlation {rho}");
}

#[test]
fn generation_is_bitwise_deterministic() {
    let cfg = SystemConfig::default();
    let fp = FadingParams::default();
    let a = channel::generate_channels(&channel::generate_scenario(&cfg, 42), &fp, &cfg, 42);
    let b = channel::generate_channels(&channel::generate_scenario(&cfg, 42), &fp, &cfg, 42);
    assert_eq!(a, b);
    let c = channel::generate_channels(&channel::generate_scenario(&cfg, 43), &fp, &cfg, 43);
    assert_ne!(a, c);
}

fn naive_effective(ch: &channel::ChannelSet, phi: &CMat, k: usize) -> CMat {
    let (nu, nris, nbs) = (ch.g_k[k].nrows(), phi.nrows(), ch.g.ncols());
    let mut h = ch.f_k[k].clone();
    for i in 0..nu {
        for j in 0..nbs {
            for a in 0..nris {
                for b in 0..nris {
                    h[(i, j)] += ch.g_k[k][(i, a)] * phi[(a, b)] * ch.g[(b, j)];
                }
            }
        }
    }
    h
}

#[test]
fn effective_channel_matches_triple_loop_and_is_affine() {
    let cfg = SystemConfig { n_ris: 7, ..SystemConfig::default() };
    let ch = channel::generate_channels(&channel::generate_scenario(&cfg, 5), &FadingParams::default(), &cfg, 5);
    let mut rng = common::rng(5);
    for arch in [Architecture::LnpD, Architecture::GnpBd] {
        let p1 = common::structured(&mut rng, arch, cfg.n_ris);
        let p2 = common::structured(&mut rng, arch, cfg.n_ris);
        let h = |p: &CMat, k| channel::effective_channel(&ch, &ScatteringMatrix::new(p.clone(), arch), k).unwrap();
        for k in 0..cfg.k_users {
            let scale = linalg::fro(&h(&p1, k)).max(linalg::fro(&ch.f_k[k]));
            let oracle = naive_effective(&ch, &p1, k);
            assert!(linalg::max_abs_diff(&h(&p1, k), &oracle) <= 1e-12 * scale);
            let lhs = h(&(&p1 + &p2), k) - h(&p2, k);
            let rhs = h(&p1, k) - &ch.f_k[k];
            assert!(linalg::max_abs_diff(&lhs, &rhs) <= 1e-12 * scale);
        }
    }
}
