//! Concave minorants of the finite-blocklength rate.
//!
//! For user `k` with `X_i = H_k W_i`, `N = sigma2 I + sum_{i != k} X_i X_i^H`
//! and `S = N + X_k X_k^H`, the surrogate has the form
//!
//! ```text
//! r~_k = a_k + 2 sum_i Re Tr(A_ki^H H_k W_i) - Tr(B_k (sigma2 I + sum_i H_k W_i W_i^H H_k^H))
//! ```
//!
//! It is built from two global bounds at an expansion point (bars):
//!
//! * Shannon term: `log|I + N^{-1} X_k X_k^H|` is bounded below by
//!   `log|I + N̄^{-1} Z̄| - Tr(N̄^{-1} Z̄) + 2 Re Tr(X̄_k^H N̄^{-1} X_k)
//!   - Tr((N̄^{-1} - S̄^{-1}) S)`.
//! * Dispersion term: with `v = 2 (N_u - Tr(N S^{-1}))`,
//!   `sqrt(v) <= (v + v̄) / (2 sqrt(v̄))`, and the trace
//!   `Tr(N S^{-1}) = sigma2 Tr(S^{-1}) + sum_{i != k} Tr(X_i^H S^{-1} X_i)`
//!   is jointly convex in `(X_i, S)`, so its tangent plane at
//!   `(X̄_i, S̄)` is a global lower bound.
//!
//! Both bounds hold for any `(H_k, W)`, so one coefficient set serves the
//! precoder step (channel fixed) and the scattering-matrix step (precoders
//! fixed, `H_k(Phi)` affine in `Phi`). The result is tight in value and
//! gradient at the expansion point and `B_k` is PSD.

use crate::channel::{self, ChannelSet};
use crate::error::Result;
use crate::feasibility::ScatteringMatrix;
use crate::linalg::{self, CMat};
use crate::model::{self, BeamformerSet, SystemConfig};

/// Dispersion arguments below this value switch to the constant bound.
pub const SILENT_USER_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateCoeffs {
    pub k: usize,
    pub a: f64,
    /// `A_ki`, one `n_u x d` matrix per user `i`.
    pub a_mats: Vec<CMat>,
    /// `B_k`, `n_u x n_u` Hermitian PSD.
    pub b: CMat,
    pub sigma2: f64,
    /// True rate at the expansion point.
    pub expansion_rate: f64,
    pub dispersion_active: bool,
}

/// Builds the coefficients of user `k` around `(w_l, phi_l)`.
pub fn build_coeffs(
    ch: &ChannelSet,
    phi_l: &ScatteringMatrix,
    w_l: &BeamformerSet,
    cfg: &SystemConfig,
    k: usize,
) -> Result<SurrogateCoeffs> {
    let h = channel::effective_channel(ch, phi_l, k)?;
    build_from_channel(&h, w_l, cfg, k)
}

/// Same as [`build_coeffs`] with the effective channel `H_k` given.
pub fn build_from_channel(h: &CMat, w_l: &BeamformerSet, cfg: &SystemConfig, k: usize) -> Result<SurrogateCoeffs> {
    let nu = h.nrows();
    let sigma2 = cfg.sigma2;
    let x: Vec<CMat> = w_l.w.iter().map(|w| h * w).collect();
    let cov = model::user_covariances(h, w_l, sigma2, k);
    let n_inv = linalg::hpd_inverse(&cov.n)?;
    let s_inv = linalg::hpd_inverse(&cov.s)?;
    let z = &x[k] * x[k].adjoint();

    let shannon = linalg::hpd_logdet(&cov.s)? - linalg::hpd_logdet(&cov.n)?;
    let v_bar = (2.0 * linalg::tr_re(&(&z * &s_inv))).max(0.0);
    let disp = cfg.dispersion_factor();
    let expansion_rate = shannon - disp * v_bar.sqrt();

    let dispersion_active = disp > 0.0 && v_bar >= SILENT_USER_THRESHOLD;
    let gamma = if dispersion_active { disp / v_bar.sqrt() } else { 0.0 };

    let mut a = shannon - linalg::tr_re(&(&n_inv * &z));
    let mut b = &n_inv - &s_inv;
    if dispersion_active {
        a += -0.5 * disp * v_bar.sqrt() - gamma * nu as f64 + 2.0 * gamma * sigma2 * linalg::tr_re(&s_inv);
        b += (&s_inv * &cov.n * &s_inv).scale(gamma);
    } else {
        a -= disp * (2.0 * nu as f64).sqrt();
    }

    let a_mats = x
        .iter()
        .enumerate()
        .map(|(i, xi)| if i == k { &n_inv * xi } else { (&s_inv * xi).scale(gamma) })
        .collect();

    Ok(SurrogateCoeffs {
        k,
        a,
        a_mats,
        b: linalg::hermitian_part(&b),
        sigma2,
        expansion_rate,
        dispersion_active,
    })
}

impl SurrogateCoeffs {
    /// Surrogate value for channel `h` (of user `k`) and precoders `w`.
    pub fn value(&self, h: &CMat, w: &[CMat]) -> f64 {
        let mut val = self.a - self.sigma2 * linalg::tr_re(&self.b);
        for (ai, wi) in self.a_mats.iter().zip(w) {
            let xi = h * wi;
            val += 2.0 * linalg::inner_re(ai, &xi) - linalg::inner_re(&xi, &(&self.b * &xi));
        }
        val
    }

    /// `R_i = A_ki - B_k H W_i`; every gradient is linear in these.
    fn residuals(&self, h: &CMat, w: &[CMat]) -> Vec<CMat> {
        self.a_mats.iter().zip(w).map(|(ai, wi)| ai - &self.b * (h * wi)).collect()
    }

    /// Euclidean gradient with respect to each `W_i`: `2 H^H (A_ki - B H W_i)`.
    pub fn grad_w(&self, h: &CMat, w: &[CMat]) -> Vec<CMat> {
        let ht = h.adjoint();
        self.residuals(h, w).iter().map(|r| (&ht * r).scale(2.0)).collect()
    }

    /// Euclidean gradient with respect to `Phi` of the surrogate evaluated at
    /// `H_k(Phi)`: `2 G_k^H (sum_i R_i W_i^H) G^H`.
    pub fn grad_phi(&self, ch: &ChannelSet, h: &CMat, w: &[CMat]) -> CMat {
        let mut m = linalg::zeros(h.nrows(), h.ncols());
        for (r, wi) in self.residuals(h, w).iter().zip(w) {
            m += r * wi.adjoint();
        }
        (ch.g_k[self.k].adjoint() * m * ch.g.adjoint()).scale(2.0)
    }
}

/// Precoder-side evaluator: surrogate in the precoders with `H_k` frozen.
pub fn eval_surrogate_w(coeffs: &SurrogateCoeffs, w: &BeamformerSet, h_fixed: &[CMat]) -> f64 {
    coeffs.value(&h_fixed[coeffs.k], &w.w)
}

/// Scattering-side evaluator: surrogate in `Phi` with the precoders frozen.
pub fn eval_surrogate_phi(
    coeffs: &SurrogateCoeffs,
    phi: &ScatteringMatrix,
    ch: &ChannelSet,
    w_fixed: &BeamformerSet,
) -> Result<f64> {
    let h = channel::effective_channel(ch, phi, coeffs.k)?;
    Ok(coeffs.value(&h, &w_fixed.w))
}
