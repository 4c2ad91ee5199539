//! Feasible scattering matrices of the four nearly-passive architectures:
//! membership tests, Euclidean projections and random feasible draws.
//!
//! | architecture | constraints |
//! |---|---|
//! | `LnpD`  | diagonal, `|phi_mm| <= 1` |
//! | `LnpBd` | `Phi = Phi^T`, `Phi Phi^H <= I` |
//! | `GnpD`  | diagonal, `Tr(D (Phi^H Phi - I)) <= 0` |
//! | `GnpBd` | `Phi = Phi^T`, `Tr(D (Phi^H Phi - I)) <= 0` |
//!
//! with `D = G C G^H` the power incident on the surface.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::model::{Architecture, BeamformerSet, SystemConfig};
use crate::rng;

/// Tolerance of [`contains`].
pub const CONTAINS_TOL: f64 = 1e-8;
/// Default Dykstra tolerance on both constraint residuals.
pub const DYKSTRA_TOL: f64 = 1e-9;
pub const DYKSTRA_MAX_ITERS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    pub phi: CMat,
    pub arch: Architecture,
}

impl ScatteringMatrix {
    pub fn new(phi: CMat, arch: Architecture) -> Self {
        Self { phi, arch }
    }

    pub fn n_ris(&self) -> usize {
        self.phi.nrows()
    }

    /// Same matrix under a different architecture tag.
    pub fn retag(&self, arch: Architecture) -> Self {
        Self { phi: self.phi.clone(), arch }
    }
}

/// Incident-power weight `D = G C G^H` of the global passivity constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct GnpWeight {
    pub d: CMat,
    /// `Tr(D)`, the power entering the surface.
    pub budget: f64,
}

impl GnpWeight {
    pub fn new(d: CMat) -> Self {
        let d = linalg::hermitian_part(&d);
        let budget = linalg::tr_re(&d);
        Self { d, budget }
    }

    /// `p_out - p_in = Tr(D (Phi^H Phi - I))`.
    pub fn excess(&self, phi: &CMat) -> f64 {
        linalg::tr_re(&(phi * &self.d * phi.adjoint())) - self.budget
    }

    /// Excess normalised by the incident power.
    fn relative_excess(&self, phi: &CMat) -> f64 {
        let e = self.excess(phi);
        if self.budget > 0.0 {
            e / self.budget
        } else {
            e
        }
    }
}

pub fn gnp_weight(g: &CMat, bf: &BeamformerSet) -> GnpWeight {
    GnpWeight::new(g * &bf.c * g.adjoint())
}

/// Outcome of a membership test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub feasible: bool,
    /// Largest constraint violation (0 when every constraint holds).
    pub violation: f64,
}

fn asymmetry(phi: &CMat) -> f64 {
    linalg::max_abs_diff(phi, &phi.transpose())
}

fn require_weight(arch: Architecture, weight: Option<&GnpWeight>) -> Result<&GnpWeight> {
    weight.ok_or(Error::MissingWeight(arch.name()))
}

/// Tests membership of `phi` in the feasible set of `arch`. The global
/// passivity residual is measured relative to `Tr(D)`.
pub fn contains(arch: Architecture, phi: &CMat, weight: Option<&GnpWeight>) -> Result<Membership> {
    let violation = match arch {
        Architecture::NoRis => 0.0,
        Architecture::LnpD | Architecture::RandD => {
            let diag = phi.diagonal().iter().map(|z| z.norm() - 1.0).fold(0.0, f64::max);
            linalg::max_offdiag(phi).max(diag)
        }
        Architecture::LnpBd => asymmetry(phi).max(linalg::spectral_norm(phi) - 1.0),
        Architecture::GnpD => {
            let w = require_weight(arch, weight)?;
            linalg::max_offdiag(phi).max(w.relative_excess(phi))
        }
        Architecture::GnpBd => {
            let w = require_weight(arch, weight)?;
            asymmetry(phi).max(w.relative_excess(phi))
        }
    };
    let violation = violation.max(0.0);
    Ok(Membership { feasible: violation <= CONTAINS_TOL, violation })
}

/// Block-matrix form of `Phi Phi^H <= I`: `[[I, Phi], [Phi^H, I]] >= 0`.
pub fn lmi_holds(phi: &CMat, tol: f64) -> bool {
    let n = phi.nrows();
    let m = phi.ncols();
    let mut block = linalg::eye(n + m);
    block.view_mut((0, n), (n, m)).copy_from(phi);
    block.view_mut((n, 0), (m, n)).copy_from(&phi.adjoint());
    linalg::min_eigenvalue(&block) >= -tol
}

/// Nearest point of the unit spectral-norm ball (singular values clipped).
///
/// Computed as `Phi0 V diag(min(1, 1/s)) V^H` from the eigenpairs of
/// `Phi0^H Phi0`, which stay accurate when singular values cluster at 1.
pub fn project_spectral_ball(phi0: &CMat) -> CMat {
    let (lambda, v) = linalg::herm_eig(&(phi0.adjoint() * phi0));
    if lambda.iter().all(|&l| l <= 1.0) {
        return phi0.clone();
    }
    let shrink: Vec<Complex64> = lambda
        .iter()
        .map(|&l| linalg::c(if l > 1.0 { 1.0 / l.sqrt() } else { 1.0 }, 0.0))
        .collect();
    phi0 * (&v * linalg::diag(&shrink) * v.adjoint())
}

/// Nearest diagonal matrix with entries in the unit disc.
pub fn project_lnp_d(phi0: &CMat) -> CMat {
    let d: Vec<Complex64> = phi0
        .diagonal()
        .iter()
        .map(|&z| if z.norm() > 1.0 { z / z.norm() } else { z })
        .collect();
    linalg::diag(&d)
}

/// Smallest `mu >= 0` with `excess(mu) <= 0`, for a non-increasing excess.
fn bisect_multiplier(excess: impl Fn(f64) -> f64) -> f64 {
    if excess(0.0) <= 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while excess(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return hi;
        }
    }
    let mut lo = 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Diagonal projection onto `{sum_m d_mm (|phi_m|^2 - 1) <= 0}`.
pub fn project_gnp_d(phi0: &CMat, weight: &GnpWeight) -> CMat {
    let d: Vec<f64> = weight.d.diagonal().iter().map(|z| z.re.max(0.0)).collect();
    let x0 = linalg::diagonal_of(phi0);
    let budget: f64 = d.iter().sum();
    let excess = |mu: f64| -> f64 {
        x0.iter()
            .zip(&d)
            .map(|(z, &dm)| dm * z.norm_sqr() / (1.0 + mu * dm).powi(2))
            .sum::<f64>()
            - budget
    };
    let mu = bisect_multiplier(excess);
    let x: Vec<Complex64> = x0.iter().zip(&d).map(|(z, &dm)| z / (1.0 + mu * dm)).collect();
    linalg::diag(&x)
}

/// Projection onto the ellipsoid `{Tr(Phi D Phi^H) <= Tr(D)}` as
/// `Phi0 (I + mu D)^{-1}`, evaluated in the eigenbasis of `D`.
pub struct EllipsoidProjector {
    lambda: Vec<f64>,
    u: CMat,
    budget: f64,
}

impl EllipsoidProjector {
    pub fn new(weight: &GnpWeight) -> Self {
        let (lambda, u) = linalg::herm_eig(&weight.d);
        let lambda = lambda.into_iter().map(|l| l.max(0.0)).collect();
        Self { lambda, u, budget: weight.budget }
    }

    pub fn project(&self, phi0: &CMat) -> CMat {
        let psi0 = phi0 * &self.u;
        let col_energy: Vec<f64> = psi0.column_iter().map(|c| c.norm_squared()).collect();
        let excess = |mu: f64| -> f64 {
            self.lambda
                .iter()
                .zip(&col_energy)
                .map(|(&l, &e)| l * e / (1.0 + mu * l).powi(2))
                .sum::<f64>()
                - self.budget
        };
        let mu = bisect_multiplier(excess);
        if mu == 0.0 {
            return phi0.clone();
        }
        let mut psi = psi0;
        for (j, mut col) in psi.column_iter_mut().enumerate() {
            col /= linalg::c(1.0 + mu * self.lambda[j], 0.0);
        }
        psi * self.u.adjoint()
    }
}

/// Dykstra's alternating projections onto the symmetric subspace and a
/// second convex set. Returns the iterate in `project_b`'s set once its
/// asymmetry and step length both fall below `tol`.
fn dykstra_symmetric(phi0: &CMat, tol: f64, project_b: impl Fn(&CMat) -> CMat) -> Result<CMat> {
    let n = phi0.nrows();
    let mut x = phi0.clone();
    let mut p = linalg::zeros(n, n);
    let mut q = linalg::zeros(n, n);
    let mut residual = f64::INFINITY;
    for _ in 0..DYKSTRA_MAX_ITERS {
        let y = linalg::symmetric_part(&(&x + &p));
        p = &x + &p - &y;
        let x_next = project_b(&(&y + &q));
        q = &y + &q - &x_next;
        let step = linalg::fro(&(&x_next - &x));
        residual = asymmetry(&x_next).max(step);
        x = x_next;
        if residual <= tol {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence { iters: DYKSTRA_MAX_ITERS, residual })
}

/// Euclidean projection of `phi0` onto the feasible set of `arch`.
///
/// The BD variants use closed forms: the symmetric part clipped in
/// singular value for `LnpBd`, and [`SymmetricEllipsoidProjector`] for
/// `GnpBd`. Both finish with a symmetrisation plus a radial pull-back so
/// the result is feasible rather than feasible up to rounding.
pub fn project(arch: Architecture, phi0: &CMat, weight: Option<&GnpWeight>) -> Result<ScatteringMatrix> {
    let phi = match arch {
        Architecture::NoRis => phi0.clone(),
        Architecture::LnpD | Architecture::RandD => project_lnp_d(phi0),
        Architecture::GnpD => project_gnp_d(phi0, require_weight(arch, weight)?),
        Architecture::LnpBd => pull_into_spectral_ball(linalg::symmetric_part(&project_spectral_ball(
            &linalg::symmetric_part(phi0),
        ))),
        Architecture::GnpBd => {
            let w = require_weight(arch, weight)?;
            let x = SymmetricEllipsoidProjector::new(w).project(phi0);
            pull_into_ellipsoid(linalg::symmetric_part(&x), w)
        }
    };
    Ok(ScatteringMatrix::new(phi, arch))
}

/// Same sets as [`project`] for the BD architectures, computed by Dykstra's
/// alternating projections. Other architectures defer to [`project`].
pub fn project_dykstra(arch: Architecture, phi0: &CMat, weight: Option<&GnpWeight>, tol: f64) -> Result<ScatteringMatrix> {
    let phi = match arch {
        Architecture::LnpBd => {
            let x = dykstra_symmetric(phi0, tol, project_spectral_ball)?;
            pull_into_spectral_ball(linalg::symmetric_part(&x))
        }
        Architecture::GnpBd => {
            let w = require_weight(arch, weight)?;
            let ell = EllipsoidProjector::new(w);
            let x = dykstra_symmetric(phi0, tol, |m| ell.project(m))?;
            pull_into_ellipsoid(linalg::symmetric_part(&x), w)
        }
        _ => return project(arch, phi0, weight),
    };
    Ok(ScatteringMatrix::new(phi, arch))
}

fn pull_into_spectral_ball(x: CMat) -> CMat {
    let norm = linalg::spectral_norm(&x);
    if norm > 1.0 {
        x.unscale(norm)
    } else {
        x
    }
}

/// Radially scales `phi` back inside `Tr(Phi D Phi^H) <= Tr(D)`.
fn pull_into_ellipsoid(phi: CMat, w: &GnpWeight) -> CMat {
    let out = w.excess(&phi) + w.budget;
    if out > w.budget && out > 0.0 {
        phi.scale((w.budget / out).sqrt())
    } else {
        phi
    }
}

/// Exact projection onto `{Phi = Phi^T, Tr(Phi D Phi^H) <= Tr(D)}`.
///
/// Symmetric matrices are coordinatised by an orthonormal basis of the
/// `n(n+1)/2`-dimensional subspace; the constraint becomes a Hermitian
/// quadratic form there, diagonalised once per weight. Each projection is
/// then two dense products and a scalar bisection. Matches
/// [`project_dykstra`] for `GnpBd`.
pub struct SymmetricEllipsoidProjector {
    n: usize,
    pairs: Vec<(usize, usize)>,
    lambda: Vec<f64>,
    v: CMat,
    budget: f64,
}

impl SymmetricEllipsoidProjector {
    pub fn new(weight: &GnpWeight) -> Self {
        let n = weight.d.nrows();
        let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                pairs.push((i, j));
            }
        }
        // Basis: E_ii, and (E_ij + E_ji)/sqrt(2) for i < j. The form
        // Tr(B_p D B_q^H) only couples entries sharing a row index.
        let entries = |&(i, j): &(usize, usize)| -> Vec<(usize, usize, f64)> {
            if i == j {
                vec![(i, i, 1.0)]
            } else {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                vec![(i, j, s), (j, i, s)]
            }
        };
        let basis: Vec<_> = pairs.iter().map(entries).collect();
        let m = pairs.len();
        let mut q = linalg::zeros(m, m);
        let d = &weight.d;
        for p in 0..m {
            for r in p..m {
                // x^H Q x = sum_i (row_i Phi) D (row_i Phi)^H
                // => Q[p][r] = sum over entries with equal row index of
                //    conj(B_p[i, a]) D[b, a]... arranged so Q is Hermitian.
                let mut acc = linalg::ZERO;
                for &(ip, ap, sp) in &basis[p] {
                    for &(ir, br, sr) in &basis[r] {
                        if ip == ir {
                            acc += d[(br, ap)] * (sp * sr);
                        }
                    }
                }
                q[(p, r)] = acc;
                q[(r, p)] = acc.conj();
            }
        }
        let (lambda, v) = linalg::herm_eig(&q);
        let lambda = lambda.into_iter().map(|l| l.max(0.0)).collect();
        Self { n, pairs, lambda, v, budget: weight.budget }
    }

    fn coords(&self, phi: &CMat) -> nalgebra::DVector<Complex64> {
        let s = std::f64::consts::SQRT_2;
        nalgebra::DVector::from_iterator(
            self.pairs.len(),
            self.pairs.iter().map(|&(i, j)| {
                if i == j {
                    phi[(i, i)]
                } else {
                    (phi[(i, j)] + phi[(j, i)]) / s
                }
            }),
        )
    }

    pub fn project(&self, phi0: &CMat) -> CMat {
        let y0 = self.v.adjoint() * self.coords(phi0);
        let energy: Vec<f64> = y0.iter().map(|z| z.norm_sqr()).collect();
        let excess = |mu: f64| -> f64 {
            self.lambda
                .iter()
                .zip(&energy)
                .map(|(&l, &e)| l * e / (1.0 + mu * l).powi(2))
                .sum::<f64>()
                - self.budget
        };
        let mu = bisect_multiplier(excess);
        let y = nalgebra::DVector::from_iterator(
            y0.len(),
            y0.iter().zip(&self.lambda).map(|(z, &l)| z / (1.0 + mu * l)),
        );
        let x = &self.v * y;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut phi = linalg::zeros(self.n, self.n);
        for (&(i, j), &z) in self.pairs.iter().zip(x.iter()) {
            if i == j {
                phi[(i, i)] = z;
            } else {
                phi[(i, j)] = z * s;
                phi[(j, i)] = z * s;
            }
        }
        phi
    }
}

/// Unit-modulus diagonal with i.i.d. uniform phases. Feasible for every
/// architecture since `Phi^H Phi = I`. `NoRis` yields the zero matrix.
pub fn random_feasible(arch: Architecture, cfg: &SystemConfig, seed: u64) -> ScatteringMatrix {
    if !arch.has_ris() {
        return ScatteringMatrix::new(linalg::zeros(cfg.n_ris, cfg.n_ris), arch);
    }
    let mut rng = rng::stream(rng::derive(seed, &[0x7068_6173]));
    let d: Vec<Complex64> = (0..cfg.n_ris)
        .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..TAU)))
        .collect();
    ScatteringMatrix::new(linalg::diag(&d), arch)
}
