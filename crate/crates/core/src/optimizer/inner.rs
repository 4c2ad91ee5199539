//! Projected supergradient ascent for `max_x min_k f_k(x)` over a convex
//! set, with each `f_k` concave.

use crate::error::Result;
use crate::linalg::{self, CMat};

/// Ties within this gap count as active minimisers.
const TIE_TOL: f64 = 1e-12;

/// A max-min problem over a list of complex matrices.
pub trait MaxMinProblem {
    /// `f_k(x)` for every `k`.
    fn values(&self, x: &[CMat]) -> Result<Vec<f64>>;
    /// Euclidean (real) gradient of `f_k` at `x`.
    fn gradient(&self, x: &[CMat], k: usize) -> Result<Vec<CMat>>;
    /// Nearest feasible point.
    fn project(&self, x: Vec<CMat>) -> Result<Vec<CMat>>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSettings {
    /// First step length, as a fraction of the caller's length scale.
    pub step0: f64,
    pub max_iters: usize,
}

impl Default for InnerSettings {
    fn default() -> Self {
        Self { step0: 0.3, max_iters: 150 }
    }
}

#[derive(Debug, Clone)]
pub struct InnerResult {
    pub x: Vec<CMat>,
    pub value: f64,
    pub start_value: f64,
    pub iters: usize,
}

fn min_with_index(vals: &[f64]) -> (usize, f64) {
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let k = vals.iter().position(|&v| v <= min + TIE_TOL).unwrap_or(0);
    (k, min)
}

/// Normalised supergradient steps `s_t = scale * step0 / sqrt(t)` on
/// `F(x) = min_k f_k(x)`, keeping the best iterate. The supergradient is
/// the gradient of the lowest-index active minimiser. The result is never
/// worse than `start`.
pub fn solve_inner_maxmin<P: MaxMinProblem + ?Sized>(
    problem: &P,
    start: Vec<CMat>,
    scale: f64,
    settings: &InnerSettings,
) -> Result<InnerResult> {
    let start_value = min_with_index(&problem.values(&start)?).1;
    let mut best = start.clone();
    let mut best_value = start_value;
    let mut x = start;
    let mut vals = problem.values(&x)?;
    let mut iters = 0;
    for t in 1..=settings.max_iters {
        iters = t;
        let (k, _) = min_with_index(&vals);
        let g = problem.gradient(&x, k)?;
        let norm = g.iter().map(linalg::fro2).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            break;
        }
        let step = scale * settings.step0 / (t as f64).sqrt() / norm;
        let moved: Vec<CMat> = x.iter().zip(&g).map(|(xi, gi)| xi + gi.scale(step)).collect();
        x = problem.project(moved)?;
        vals = problem.values(&x)?;
        let value = min_with_index(&vals).1;
        if value > best_value {
            best_value = value;
            best.clone_from(&x);
        }
    }
    Ok(InnerResult { x: best, value: best_value, start_value, iters })
}
