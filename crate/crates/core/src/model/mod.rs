//! System configuration, power model and performance metrics.
//!
//! Rates are natural-log internally (nats per channel use); [`MetricsRecord`]
//! reports bits.

mod config;

pub use config::{Architecture, PowerModel, SystemConfig};

use std::f64::consts::{LN_2, SQRT_2};

use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Gaussian tail probability `Q(x)`.
pub fn q_func(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Inverse Gaussian tail, `Q(inv_q(eps)) = eps`.
pub fn inv_q(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("inv_q needs 0 < eps < 1, got {epsilon}")));
    }
    if epsilon == 0.5 {
        return Ok(0.0);
    }
    let mut x = SQRT_2 * erfc_inv(2.0 * epsilon);
    // One Halley step on Q itself.
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if pdf > 0.0 {
        let f = q_func(x) - epsilon;
        let t = f / -pdf;
        x -= t / (1.0 + 0.5 * x * t);
    }
    Ok(x)
}

/// Per-user precoders and the transmit covariance they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub w: Vec<CMat>,
    pub c: CMat,
}

impl BeamformerSet {
    pub fn new(w: Vec<CMat>) -> Self {
        let n = w.first().map_or(0, |m| m.nrows());
        let mut c = linalg::zeros(n, n);
        for wk in &w {
            c += wk * wk.adjoint();
        }
        let c = linalg::hermitian_part(&c);
        Self { w, c }
    }

    pub fn zeros(cfg: &SystemConfig) -> Self {
        Self::new(vec![linalg::zeros(cfg.n_bs, cfg.d_streams); cfg.k_users])
    }

    pub fn k_users(&self) -> usize {
        self.w.len()
    }

    /// `Tr(W_k W_k^H)`.
    pub fn user_power(&self, k: usize) -> f64 {
        linalg::fro2(&self.w[k])
    }

    /// `Tr(C)`.
    pub fn total_power(&self) -> f64 {
        self.w.iter().map(linalg::fro2).sum()
    }
}

/// Interference-plus-noise and total covariance seen by user `k`.
pub(crate) struct UserCovariances {
    /// `sigma2 I + sum_{i != k} Z_ki`
    pub n: CMat,
    /// `n + Z_kk`
    pub s: CMat,
    /// `H_k W_k`
    pub hw: CMat,
}

pub(crate) fn user_covariances(h: &CMat, bf: &BeamformerSet, sigma2: f64, k: usize) -> UserCovariances {
    let nu = h.nrows();
    let mut n = linalg::scaled_eye(nu, sigma2);
    let mut hw_k = None;
    for (i, wi) in bf.w.iter().enumerate() {
        let hw = h * wi;
        if i == k {
            hw_k = Some(hw);
        } else {
            n += &hw * hw.adjoint();
        }
    }
    let hw = hw_k.expect("user index out of range");
    let s = linalg::hermitian_part(&(&n + &hw * hw.adjoint()));
    UserCovariances { n: linalg::hermitian_part(&n), s, hw }
}

/// Shannon term `log|S_k| - log|N_k|` and dispersion argument
/// `v_k = 2 Tr(Z_kk S_k^{-1})` of user `k`.
pub(crate) fn rate_parts(h: &CMat, bf: &BeamformerSet, sigma2: f64, k: usize) -> Result<(f64, f64)> {
    let cov = user_covariances(h, bf, sigma2, k);
    let shannon = linalg::hpd_logdet(&cov.s)? - linalg::hpd_logdet(&cov.n)?;
    let s_inv = linalg::hpd_inverse(&cov.s)?;
    let z = &cov.hw * cov.hw.adjoint();
    let v = 2.0 * linalg::tr_re(&(z * s_inv));
    Ok((shannon, v.max(0.0)))
}

/// Finite-blocklength (normal approximation) rate of user `k` in nats.
/// `channels[k]` is the effective channel `H_k`. The raw value may be
/// negative.
pub fn fbl_rate(channels: &[CMat], bf: &BeamformerSet, cfg: &SystemConfig, k: usize) -> Result<f64> {
    check_dims(channels, bf, k)?;
    if !(cfg.sigma2 > 0.0) {
        return Err(Error::Numeric("noise power must be positive".into()));
    }
    let (shannon, v) = rate_parts(&channels[k], bf, cfg.sigma2, k)?;
    Ok(shannon - cfg.dispersion_factor() * v.sqrt())
}

/// Raw rates of every user.
pub fn fbl_rates(channels: &[CMat], bf: &BeamformerSet, cfg: &SystemConfig) -> Result<Vec<f64>> {
    (0..bf.k_users()).map(|k| fbl_rate(channels, bf, cfg, k)).collect()
}

fn check_dims(channels: &[CMat], bf: &BeamformerSet, k: usize) -> Result<()> {
    if k >= bf.k_users() || channels.len() != bf.k_users() {
        return Err(Error::Dimension(format!(
            "user {k} with {} channels and {} precoders",
            channels.len(),
            bf.k_users()
        )));
    }
    let n_bs = bf.c.nrows();
    if let Some(h) = channels.iter().find(|h| h.ncols() != n_bs) {
        return Err(Error::Dimension(format!(
            "channel has {} columns, precoders have {n_bs} rows",
            h.ncols()
        )));
    }
    Ok(())
}

/// Per-user static power `P_c = P_t + P_RIS / K`.
pub fn static_power(pm: &PowerModel, arch: Architecture, n_ris: usize, k_users: usize) -> f64 {
    pm.p_t + ris_power(pm, arch, n_ris) / k_users as f64
}

/// Total RIS static power.
pub fn ris_power(pm: &PowerModel, arch: Architecture, n_ris: usize) -> f64 {
    match arch {
        Architecture::NoRis => 0.0,
        a if a.is_bd() => pm.p_ris0_bd + bd_circuit_count(n_ris) as f64 * pm.p_ris_n_bd,
        _ => pm.p_ris0_d + n_ris as f64 * pm.p_ris_n_d,
    }
}

/// Interconnect count of a fully-connected BD-RIS.
pub fn bd_circuit_count(n_ris: usize) -> usize {
    n_ris * n_ris.saturating_sub(1) / 2
}

/// `zeta_k = alpha_k r + (1 - alpha_k) r / (p_c + eta Tr(W_k W_k^H))`.
pub fn see_objective(r: f64, w_k: &CMat, p_c: f64, cfg: &SystemConfig, k: usize) -> f64 {
    see_from_power(r, linalg::fro2(w_k), p_c, cfg.eta, cfg.alpha_k(k))
}

pub(crate) fn see_from_power(r: f64, user_power: f64, p_c: f64, eta: f64, alpha: f64) -> f64 {
    alpha * r + (1.0 - alpha) * r / (p_c + eta * user_power)
}

/// Raw (unclamped, nats) SEE values of every user.
pub fn see_values(channels: &[CMat], bf: &BeamformerSet, cfg: &SystemConfig, p_c: f64) -> Result<Vec<f64>> {
    let rates = fbl_rates(channels, bf, cfg)?;
    Ok(rates
        .iter()
        .enumerate()
        .map(|(k, &r)| see_objective(r, &bf.w[k], p_c, cfg, k))
        .collect())
}

/// Approximate multiplication counts of one W-step and one Phi-step.
pub fn complexity_estimate(cfg: &SystemConfig, arch: Architecture) -> (f64, f64) {
    let nbs = cfg.n_bs as f64;
    let nu = cfg.n_u as f64;
    let k = cfg.k_users as f64;
    let nris = cfg.n_ris as f64;
    let w_step = nbs * nbs * k * k * (2.0 * k + 1.0).sqrt() * (2.0 * nbs + nu);
    let channel = if arch.is_bd() { nu * nbs * nris * nris } else { nu * nbs * nris };
    let phi_step = k * (k * nbs * nbs * (2.0 * nbs + nu) + channel);
    (w_step, phi_step)
}

/// Reported performance of one operating point. Rates in bits per channel
/// use, EE in bits per channel use per watt.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub rates: Vec<f64>,
    pub ee: Vec<f64>,
    pub see: Vec<f64>,
    pub min_rate: f64,
    pub min_ee: f64,
    pub min_see: f64,
    pub p_c: f64,
}

impl MetricsRecord {
    pub fn evaluate(channels: &[CMat], bf: &BeamformerSet, cfg: &SystemConfig, p_c: f64) -> Result<Self> {
        let raw = fbl_rates(channels, bf, cfg)?;
        let rates: Vec<f64> = raw.iter().map(|r| r.max(0.0) / LN_2).collect();
        let ee: Vec<f64> = rates
            .iter()
            .enumerate()
            .map(|(k, r)| r / (p_c + cfg.eta * bf.user_power(k)))
            .collect();
        let see: Vec<f64> = (0..rates.len())
            .map(|k| cfg.alpha_k(k) * rates[k] + (1.0 - cfg.alpha_k(k)) * ee[k])
            .collect();
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            min_rate: min(&rates),
            min_ee: min(&ee),
            min_see: min(&see),
            rates,
            ee,
            see,
            p_c,
        })
    }
}
