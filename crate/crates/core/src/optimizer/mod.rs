//! Alternating optimisation of the precoders and the scattering matrix for
//! the max-min SEE problem.
//!
//! Each outer iteration rebuilds the rate minorants at the current point,
//! improves `{W}` with `Phi` frozen, rebuilds them again and improves
//! `Phi` with `{W}` frozen. Both half-steps are max-min concave programs
//! solved by [`inner::solve_inner_maxmin`]; a half-step that does not
//! improve the true objective is rejected, so the objective trace is
//! non-decreasing.

pub mod inner;

use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelSet};
use crate::error::{Error, Result};
use crate::feasibility::{self, GnpWeight, ScatteringMatrix, SymmetricEllipsoidProjector};
use crate::linalg::{self, CMat};
use crate::model::{self, Architecture, BeamformerSet, MetricsRecord, PowerModel, SystemConfig};
use crate::surrogate::{self, SurrogateCoeffs};

pub use inner::{solve_inner_maxmin, InnerResult, InnerSettings, MaxMinProblem};

/// Radicands below this are treated as zero in the EE auxiliary terms.
const RATE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgoParams {
    /// Stop once the relative improvement of `min_k zeta_k` drops below this.
    pub delta: f64,
    pub max_outer_iters: usize,
    pub inner_step0: f64,
    pub inner_iters: usize,
    /// Reject half-steps that lower the true objective.
    pub safeguard: bool,
    /// Keep every outer iterate in [`IterateState::history`].
    #[serde(skip)]
    pub keep_history: bool,
}

impl Default for AlgoParams {
    fn default() -> Self {
        let inner = InnerSettings::default();
        Self {
            delta: 1e-3,
            max_outer_iters: 200,
            inner_step0: inner.step0,
            inner_iters: inner.max_iters,
            safeguard: true,
            keep_history: false,
        }
    }
}

impl AlgoParams {
    pub fn inner(&self) -> InnerSettings {
        InnerSettings { step0: self.inner_step0, max_iters: self.inner_iters }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::InvalidConfig("delta must be positive".into()));
        }
        if self.max_outer_iters == 0 || self.inner_iters == 0 {
            return Err(Error::InvalidConfig("iteration caps must be at least 1".into()));
        }
        if !(self.inner_step0 > 0.0) {
            return Err(Error::InvalidConfig("inner_step0 must be positive".into()));
        }
        Ok(())
    }
}

/// Non-fatal events raised during a run.
#[derive(Debug, Clone, PartialEq)]
pub enum OptFlag {
    /// The precoder half-step of this iteration was rolled back.
    WStepRejected { iter: usize },
    PhiStepRejected { iter: usize },
    /// A user's rate at the expansion point was negative; its EE
    /// coefficient was clamped to zero.
    NegativeRate { iter: usize, user: usize },
}

/// One line of the per-iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    /// `min_k zeta_k` in nats (the optimised quantity, unclamped).
    pub objective: f64,
    pub min_rate: f64,
    pub min_ee: f64,
    pub min_see: f64,
    /// `Tr(C) - P`.
    pub power_residual: f64,
    pub phi_violation: f64,
    /// Largest `|surrogate - rate|` at this iteration's expansion points,
    /// over users whose dispersion bound is active.
    pub tangency_gap: f64,
}

#[derive(Debug, Clone)]
pub struct IterateState {
    pub w: BeamformerSet,
    pub phi: ScatteringMatrix,
    pub arch: Architecture,
    /// EE coefficients of the last precoder step.
    pub beta: Vec<f64>,
    /// Auxiliary variables `u_k = sqrt(max(r~_k, 0))` at the last solution.
    pub u: Vec<f64>,
    /// `P_c + eta Tr(W_k W_k^H)` at the last solution.
    pub p: Vec<f64>,
    /// `min_k zeta_k` (nats) at the start and after every outer iteration.
    pub trace: Vec<f64>,
    /// Objective after every half-step, starting with the initial value.
    pub half_steps: Vec<f64>,
    pub records: Vec<IterRecord>,
    pub flags: Vec<OptFlag>,
    /// Outer iterates `(W^(l), Phi^(l))`, when requested.
    pub history: Vec<(BeamformerSet, ScatteringMatrix)>,
}

impl IterateState {
    pub fn from_point(w: BeamformerSet, phi: ScatteringMatrix) -> Self {
        let k = w.k_users();
        let arch = phi.arch;
        Self {
            w,
            phi,
            arch,
            beta: vec![0.0; k],
            u: vec![0.0; k],
            p: vec![0.0; k],
            trace: Vec::new(),
            half_steps: Vec::new(),
            records: Vec::new(),
            flags: Vec::new(),
            history: Vec::new(),
        }
    }

    pub fn iterations(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }

    pub fn objective(&self) -> f64 {
        self.trace.last().copied().unwrap_or(f64::NAN)
    }
}

/// Starting point: unit-modulus diagonal `Phi` (feasible for every set)
/// and `W_k` equal to the top-`d` right singular vectors of `F_k` scaled so
/// that `Tr(C) = P`.
pub fn init_state(ch: &ChannelSet, cfg: &SystemConfig, arch: Architecture, seed: u64) -> IterateState {
    let phi = feasibility::random_feasible(arch, cfg, seed);
    let scale = (cfg.p_budget / (cfg.k_users * cfg.d_streams) as f64).sqrt();
    let w = ch
        .f_k
        .iter()
        .map(|f| top_right_singular_vectors(f, cfg.d_streams).scale(scale))
        .collect();
    IterateState::from_point(BeamformerSet::new(w), phi)
}

fn top_right_singular_vectors(m: &CMat, d: usize) -> CMat {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut out = linalg::zeros(m.ncols(), d);
    for (j, &i) in order.iter().take(d).enumerate() {
        out.set_column(j, &v_t.row(i).adjoint());
    }
    out
}

/// Per-user static power of `arch` for this configuration.
pub fn static_power_for(cfg: &SystemConfig, pm: &PowerModel, arch: Architecture) -> f64 {
    model::static_power(pm, arch, cfg.n_ris, cfg.k_users)
}

/// True SEE values (nats, unclamped) of every user.
pub fn objective_values(
    ch: &ChannelSet,
    phi: &ScatteringMatrix,
    bf: &BeamformerSet,
    cfg: &SystemConfig,
    p_c: f64,
) -> Result<Vec<f64>> {
    let h = channel::effective_channels(ch, phi)?;
    model::see_values(&h, bf, cfg, p_c)
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Feasible set of the precoder step: the power ball plus, for GNP
/// architectures, the passivity constraint `sum_k Tr(W_k^H Q W_k) <= 0`
/// with `Q = G^H (Phi^H Phi - I) G` for the frozen `Phi`.
///
/// The passivity set is a (generally non-convex) cone in `W`; its exact
/// projection follows from the single-constraint KKT conditions, and
/// scaling a cone point into the ball keeps it in the cone.
pub struct PrecoderSet {
    radius: f64,
    cone: Option<(Vec<f64>, CMat)>,
}

impl PrecoderSet {
    pub fn new(cfg: &SystemConfig, ch: &ChannelSet, phi: &ScatteringMatrix) -> Self {
        let cone = phi.arch.is_gnp().then(|| {
            let m = phi.phi.adjoint() * &phi.phi - linalg::eye(phi.n_ris());
            let q = ch.g.adjoint() * m * &ch.g;
            let (mut lambda, u) = linalg::herm_eig(&q);
            let floor = 1e-12 * linalg::fro2(&ch.g).max(f64::MIN_POSITIVE);
            for l in &mut lambda {
                if l.abs() <= floor {
                    *l = 0.0;
                }
            }
            (lambda, u)
        });
        Self { radius: cfg.p_budget.sqrt(), cone }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn project(&self, mut w: Vec<CMat>) -> Vec<CMat> {
        if let Some((lambda, u)) = &self.cone {
            w = project_cone(lambda, u, w);
        }
        let norm = w.iter().map(linalg::fro2).sum::<f64>().sqrt();
        if norm > self.radius {
            let s = self.radius / norm;
            for wk in &mut w {
                *wk = wk.scale(s);
            }
        }
        w
    }
}

fn project_cone(lambda: &[f64], u: &CMat, w: Vec<CMat>) -> Vec<CMat> {
    let rotated: Vec<CMat> = w.iter().map(|wk| u.adjoint() * wk).collect();
    let energy: Vec<f64> = (0..lambda.len())
        .map(|j| rotated.iter().map(|y| y.row(j).norm_squared()).sum())
        .collect();
    let excess = |mu: f64| -> f64 {
        lambda.iter().zip(&energy).map(|(&l, &e)| l * e / (1.0 + mu * l).powi(2)).sum()
    };
    if excess(0.0) <= 0.0 {
        return w;
    }
    let neg_min = lambda
        .iter()
        .zip(&energy)
        .filter(|(&l, &e)| l < 0.0 && e > 0.0)
        .map(|(&l, _)| l)
        .fold(0.0, f64::min);
    let shrink: Vec<f64> = if neg_min < 0.0 {
        // excess is decreasing on [0, 1/|neg_min|) and diverges to -inf.
        let (mut lo, mut hi) = (0.0, -1.0 / neg_min);
        for _ in 0..200 {
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
        lambda.iter().map(|&l| 1.0 / (1.0 + hi * l)).collect()
    } else {
        // Nothing to trade against: remove every amplified direction.
        lambda.iter().map(|&l| if l > 0.0 { 0.0 } else { 1.0 }).collect()
    };
    rotated
        .into_iter()
        .map(|mut y| {
            for (j, mut row) in y.row_iter_mut().enumerate() {
                row *= linalg::c(shrink[j], 0.0);
            }
            u * y
        })
        .collect()
}

struct PrecoderStep<'a> {
    h: &'a [CMat],
    coeffs: &'a [SurrogateCoeffs],
    alpha: &'a [f64],
    beta: &'a [f64],
    p_c: f64,
    eta: f64,
    set: &'a PrecoderSet,
}

impl PrecoderStep<'_> {
    fn surrogate_rate(&self, x: &[CMat], k: usize) -> f64 {
        self.coeffs[k].value(&self.h[k], x)
    }
}

impl MaxMinProblem for PrecoderStep<'_> {
    fn values(&self, x: &[CMat]) -> Result<Vec<f64>> {
        Ok((0..self.coeffs.len())
            .map(|k| {
                let r = self.surrogate_rate(x, k);
                let (a, b) = (self.alpha[k], self.beta[k]);
                let p = self.p_c + self.eta * linalg::fro2(&x[k]);
                a * r + (1.0 - a) * (2.0 * b * r.max(0.0).sqrt() - b * b * p)
            })
            .collect())
    }

    fn gradient(&self, x: &[CMat], k: usize) -> Result<Vec<CMat>> {
        let r = self.surrogate_rate(x, k);
        let (a, b) = (self.alpha[k], self.beta[k]);
        let weight = a + (1.0 - a) * b / r.max(RATE_FLOOR).sqrt();
        let mut g: Vec<CMat> = self.coeffs[k]
            .grad_w(&self.h[k], x)
            .into_iter()
            .map(|gi| gi.scale(weight))
            .collect();
        g[k] -= x[k].scale(2.0 * (1.0 - a) * b * b * self.eta);
        Ok(g)
    }

    fn project(&self, x: Vec<CMat>) -> Result<Vec<CMat>> {
        Ok(self.set.project(x))
    }
}

/// Result of one precoder half-step.
#[derive(Debug, Clone)]
pub struct PrecoderUpdate {
    pub w: BeamformerSet,
    pub beta: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    /// Surrogate objective at the returned point and at the start.
    pub surrogate_value: f64,
    pub surrogate_start: f64,
    pub accepted: bool,
    pub negative_rate_users: Vec<usize>,
    pub tangency_gap: f64,
}

/// Precoder half-step with `Phi` frozen at `state.phi`.
pub fn update_w(
    state: &IterateState,
    ch: &ChannelSet,
    cfg: &SystemConfig,
    pm: &PowerModel,
    params: &AlgoParams,
) -> Result<PrecoderUpdate> {
    let arch = state.phi.arch;
    let p_c = static_power_for(cfg, pm, arch);
    let h = channel::effective_channels(ch, &state.phi)?;
    let coeffs: Vec<SurrogateCoeffs> = (0..cfg.k_users)
        .map(|k| surrogate::build_from_channel(&h[k], &state.w, cfg, k))
        .collect::<Result<_>>()?;
    let rates: Vec<f64> = coeffs.iter().map(|c| c.expansion_rate).collect();
    let negative_rate_users = (0..cfg.k_users).filter(|&k| rates[k] < 0.0).collect();
    let beta: Vec<f64> = (0..cfg.k_users)
        .map(|k| rates[k].max(0.0).sqrt() / (p_c + cfg.eta * state.w.user_power(k)))
        .collect();
    let tangency_gap = tangency_gap(&coeffs, &h, &state.w);

    let set = PrecoderSet::new(cfg, ch, &state.phi);
    let problem = PrecoderStep {
        h: &h,
        coeffs: &coeffs,
        alpha: &cfg.alpha,
        beta: &beta,
        p_c,
        eta: cfg.eta,
        set: &set,
    };
    let res = solve_inner_maxmin(&problem, state.w.w.clone(), set.radius(), &params.inner())?;

    let candidate = BeamformerSet::new(res.x);
    let old = min_of(&objective_values(ch, &state.phi, &state.w, cfg, p_c)?);
    let new = objective_values(ch, &state.phi, &candidate, cfg, p_c).map(|v| min_of(&v));
    let accepted = match new {
        Ok(v) => !params.safeguard || v >= old,
        Err(_) => false,
    };
    let w = if accepted { candidate } else { state.w.clone() };
    let u = (0..cfg.k_users)
        .map(|k| coeffs[k].value(&h[k], &w.w).max(0.0).sqrt())
        .collect();
    let p = (0..cfg.k_users).map(|k| p_c + cfg.eta * w.user_power(k)).collect();
    Ok(PrecoderUpdate {
        w,
        beta,
        u,
        p,
        surrogate_value: res.value,
        surrogate_start: res.start_value,
        accepted,
        negative_rate_users,
        tangency_gap,
    })
}

fn tangency_gap(coeffs: &[SurrogateCoeffs], h: &[CMat], w: &BeamformerSet) -> f64 {
    coeffs
        .iter()
        .filter(|c| c.dispersion_active)
        .map(|c| (c.value(&h[c.k], &w.w) - c.expansion_rate).abs())
        .fold(0.0, f64::max)
}

/// Projection used by the scattering-matrix step.
pub enum PhiSet {
    LnpD,
    LnpBd,
    GnpD(GnpWeight),
    GnpBd(SymmetricEllipsoidProjector),
}

impl PhiSet {
    pub fn new(arch: Architecture, ch: &ChannelSet, w: &BeamformerSet) -> Result<Self> {
        Ok(match arch {
            Architecture::LnpD | Architecture::RandD => PhiSet::LnpD,
            Architecture::LnpBd => PhiSet::LnpBd,
            Architecture::GnpD => PhiSet::GnpD(feasibility::gnp_weight(&ch.g, w)),
            Architecture::GnpBd => {
                PhiSet::GnpBd(SymmetricEllipsoidProjector::new(&feasibility::gnp_weight(&ch.g, w)))
            }
            Architecture::NoRis => return Err(Error::InvalidConfig("no-ris has no scattering matrix".into())),
        })
    }

    pub fn project(&self, phi: &CMat) -> Result<CMat> {
        Ok(match self {
            PhiSet::LnpD => feasibility::project_lnp_d(phi),
            PhiSet::GnpD(w) => feasibility::project_gnp_d(phi, w),
            PhiSet::LnpBd => {
                // Symmetric part, then singular-value clip.
                let sym = linalg::symmetric_part(phi);
                let clipped = feasibility::project_spectral_ball(&sym);
                let clipped = linalg::symmetric_part(&clipped);
                let norm = linalg::spectral_norm(&clipped);
                if norm > 1.0 {
                    clipped.unscale(norm)
                } else {
                    clipped
                }
            }
            PhiSet::GnpBd(p) => p.project(phi),
        })
    }
}

struct PhiStep<'a> {
    ch: &'a ChannelSet,
    w: &'a BeamformerSet,
    coeffs: &'a [SurrogateCoeffs],
    weights: &'a [f64],
    arch: Architecture,
    set: &'a PhiSet,
}

impl PhiStep<'_> {
    fn channel(&self, phi: &CMat, k: usize) -> Result<CMat> {
        // The matrix is borrowed into a temporary tag; no copy of the channels.
        let sm = ScatteringMatrix { phi: phi.clone(), arch: self.arch };
        channel::effective_channel(self.ch, &sm, k)
    }
}

impl MaxMinProblem for PhiStep<'_> {
    fn values(&self, x: &[CMat]) -> Result<Vec<f64>> {
        (0..self.coeffs.len())
            .map(|k| Ok(self.weights[k] * self.coeffs[k].value(&self.channel(&x[0], k)?, &self.w.w)))
            .collect()
    }

    fn gradient(&self, x: &[CMat], k: usize) -> Result<Vec<CMat>> {
        let h = self.channel(&x[0], k)?;
        let g = self.coeffs[k].grad_phi(self.ch, &h, &self.w.w).scale(self.weights[k]);
        let g = if self.arch.is_diagonal() {
            linalg::diag(&linalg::diagonal_of(&g))
        } else {
            linalg::symmetric_part(&g)
        };
        Ok(vec![g])
    }

    fn project(&self, x: Vec<CMat>) -> Result<Vec<CMat>> {
        Ok(vec![self.set.project(&x[0])?])
    }
}

/// Result of one scattering-matrix half-step.
#[derive(Debug, Clone)]
pub struct PhiUpdate {
    pub phi: ScatteringMatrix,
    pub surrogate_value: f64,
    pub surrogate_start: f64,
    pub accepted: bool,
    pub tangency_gap: f64,
}

/// Scattering-matrix half-step with the precoders frozen at `w_next`.
/// Baselines without an optimisable `Phi` pass through unchanged.
pub fn update_phi(
    phi: &ScatteringMatrix,
    w_next: &BeamformerSet,
    ch: &ChannelSet,
    cfg: &SystemConfig,
    pm: &PowerModel,
    params: &AlgoParams,
) -> Result<PhiUpdate> {
    let arch = phi.arch;
    if !arch.optimizes_phi() {
        return Ok(PhiUpdate {
            phi: phi.clone(),
            surrogate_value: f64::NAN,
            surrogate_start: f64::NAN,
            accepted: true,
            tangency_gap: 0.0,
        });
    }
    let p_c = static_power_for(cfg, pm, arch);
    let h = channel::effective_channels(ch, phi)?;
    let coeffs: Vec<SurrogateCoeffs> = (0..cfg.k_users)
        .map(|k| surrogate::build_from_channel(&h[k], w_next, cfg, k))
        .collect::<Result<_>>()?;
    let tangency_gap = tangency_gap(&coeffs, &h, w_next);
    let weights: Vec<f64> = (0..cfg.k_users)
        .map(|k| {
            let a = cfg.alpha_k(k);
            a + (1.0 - a) / (p_c + cfg.eta * w_next.user_power(k))
        })
        .collect();
    let set = PhiSet::new(arch, ch, w_next)?;
    let problem = PhiStep { ch, w: w_next, coeffs: &coeffs, weights: &weights, arch, set: &set };
    let scale = (cfg.n_ris as f64).sqrt();
    let res = solve_inner_maxmin(&problem, vec![phi.phi.clone()], scale, &params.inner())?;

    let candidate = ScatteringMatrix::new(res.x.into_iter().next().expect("one block"), arch);
    let old = min_of(&objective_values(ch, phi, w_next, cfg, p_c)?);
    let new = objective_values(ch, &candidate, w_next, cfg, p_c).map(|v| min_of(&v));
    let accepted = match new {
        Ok(v) => !params.safeguard || v >= old,
        Err(_) => false,
    };
    Ok(PhiUpdate {
        phi: if accepted { candidate } else { phi.clone() },
        surrogate_value: res.value,
        surrogate_start: res.start_value,
        accepted,
        tangency_gap,
    })
}

fn phi_violation(ch: &ChannelSet, phi: &ScatteringMatrix, w: &BeamformerSet) -> Result<f64> {
    let weight = phi.arch.is_gnp().then(|| feasibility::gnp_weight(&ch.g, w));
    Ok(feasibility::contains(phi.arch, &phi.phi, weight.as_ref())?.violation)
}

fn record(
    iter: usize,
    objective: f64,
    ch: &ChannelSet,
    state: &IterateState,
    cfg: &SystemConfig,
    p_c: f64,
    tangency_gap: f64,
) -> Result<IterRecord> {
    let h = channel::effective_channels(ch, &state.phi)?;
    let m = MetricsRecord::evaluate(&h, &state.w, cfg, p_c)?;
    Ok(IterRecord {
        iter,
        objective,
        min_rate: m.min_rate,
        min_ee: m.min_ee,
        min_see: m.min_see,
        power_residual: state.w.total_power() - cfg.p_budget,
        phi_violation: phi_violation(ch, &state.phi, &state.w)?,
        tangency_gap,
    })
}

/// Runs the alternating optimisation from `state` until the relative
/// improvement of `min_k zeta_k` falls below `params.delta` or the outer
/// cap is reached.
pub fn run_from(
    mut state: IterateState,
    ch: &ChannelSet,
    cfg: &SystemConfig,
    pm: &PowerModel,
    params: &AlgoParams,
) -> Result<IterateState> {
    cfg.validate()?;
    params.validate()?;
    ch.check(cfg)?;
    let arch = state.phi.arch;
    let p_c = static_power_for(cfg, pm, arch);
    let start = min_of(&objective_values(ch, &state.phi, &state.w, cfg, p_c)?);
    state.trace = vec![start];
    state.half_steps = vec![start];
    state.records = vec![record(0, start, ch, &state, cfg, p_c, 0.0)?];
    if params.keep_history {
        state.history = vec![(state.w.clone(), state.phi.clone())];
    }

    for iter in 1..=params.max_outer_iters {
        let wu = update_w(&state, ch, cfg, pm, params)?;
        if !wu.accepted {
            state.flags.push(OptFlag::WStepRejected { iter });
        }
        for &user in &wu.negative_rate_users {
            state.flags.push(OptFlag::NegativeRate { iter, user });
        }
        state.w = wu.w;
        state.beta = wu.beta;
        state.u = wu.u;
        state.p = wu.p;
        let mid = min_of(&objective_values(ch, &state.phi, &state.w, cfg, p_c)?);
        state.half_steps.push(mid);

        let pu = update_phi(&state.phi, &state.w, ch, cfg, pm, params)?;
        if !pu.accepted {
            state.flags.push(OptFlag::PhiStepRejected { iter });
        }
        state.phi = pu.phi;
        let value = min_of(&objective_values(ch, &state.phi, &state.w, cfg, p_c)?);
        state.half_steps.push(value);

        let prev = *state.trace.last().expect("trace starts non-empty");
        state.trace.push(value);
        let gap = wu.tangency_gap.max(pu.tangency_gap);
        state.records.push(record(iter, value, ch, &state, cfg, p_c, gap)?);
        if params.keep_history {
            state.history.push((state.w.clone(), state.phi.clone()));
        }

        let rel = (value - prev) / prev.abs().max(f64::MIN_POSITIVE);
        if !(rel >= params.delta) {
            break;
        }
    }
    Ok(state)
}

/// Alternating optimisation from the default starting point. Returns the final state
/// and its per-iteration trace.
pub fn run_algorithm_one(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    pm: &PowerModel,
    arch: Architecture,
    params: &AlgoParams,
    seed: u64,
) -> Result<(IterateState, Vec<IterRecord>)> {
    let state = run_from(init_state(ch, cfg, arch, seed), ch, cfg, pm, params)?;
    let records = state.records.clone();
    Ok((state, records))
}
