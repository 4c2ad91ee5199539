//! Shared samplers for the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use risee_core::feasibility::GnpWeight;
use risee_core::linalg::{self, CMat};
use risee_core::Architecture;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cn(rng: &mut ChaCha8Rng, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn gauss(rng: &mut ChaCha8Rng, rows: usize, cols: usize, var: f64) -> CMat {
    CMat::from_fn(rows, cols, |_, _| cn(rng, var))
}

/// `A A^H` plus a small ridge, so the weight is PSD with a positive trace.
pub fn random_weight(rng: &mut ChaCha8Rng, n: usize) -> GnpWeight {
    let a = gauss(rng, n, n, 1.0);
    GnpWeight::new(&a * a.adjoint() + linalg::scaled_eye(n, 0.01))
}

/// Random matrix with the structure of `arch` (diagonal or symmetric).
pub fn structured(rng: &mut ChaCha8Rng, arch: Architecture, n: usize) -> CMat {
    let m = gauss(rng, n, n, 1.0);
    if arch.is_diagonal() {
        linalg::diag(&linalg::diagonal_of(&m))
    } else {
        linalg::symmetric_part(&m)
    }
}

/// Largest `t` with `t * phi` feasible, for a structured `phi`.
pub fn max_scale(arch: Architecture, phi: &CMat, weight: Option<&GnpWeight>) -> f64 {
    match arch {
        Architecture::LnpD | Architecture::RandD => {
            let m = phi.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max);
            1.0 / m
        }
        Architecture::LnpBd => 1.0 / linalg::spectral_norm(phi),
        Architecture::GnpD | Architecture::GnpBd => {
            let w = weight.expect("GNP sets need a weight");
            let q = w.excess(phi) + w.budget;
            (w.budget / q).sqrt()
        }
        Architecture::NoRis => 0.0,
    }
}

/// Radial pull-back into the set (identity for interior points).
pub fn pull_in(arch: Architecture, phi: CMat, weight: Option<&GnpWeight>) -> CMat {
    let t = max_scale(arch, &phi, weight);
    if t < 1.0 {
        phi.scale(t * (1.0 - 1e-12))
    } else {
        phi
    }
}

/// Feasible member of `arch`'s set; a quarter of the draws lie on the
/// boundary.
pub fn sample_member(rng: &mut ChaCha8Rng, arch: Architecture, n: usize, weight: Option<&GnpWeight>) -> CMat {
    let phi = structured(rng, arch, n);
    let t = max_scale(arch, &phi, weight);
    let frac = if rng.random_bool(0.25) { 1.0 - 1e-12 } else { rng.random::<f64>() };
    phi.scale(t * frac)
}

/// Random precoders inside the ball `sum_k ||W_k||^2 <= p`.
pub fn ball_precoders(rng: &mut ChaCha8Rng, k: usize, n_bs: usize, d: usize, p: f64) -> Vec<CMat> {
    let w: Vec<CMat> = (0..k).map(|_| gauss(rng, n_bs, d, 1.0)).collect();
    let norm = w.iter().map(linalg::fro2).sum::<f64>().sqrt();
    let r = p.sqrt() * rng.random::<f64>().sqrt();
    w.into_iter().map(|m| m.scale(r / norm)).collect()
}
