//! Randomized quantum subgradient for non-smooth convex functions, the
//! classical finite-difference baseline, and deviation-from-linearity
//! diagnostics.

use rand::Rng;

use crate::error::{Error, Result};
use crate::oracles::{CountedOracle, ObjectiveFunction};
use crate::qgrad::{derive_grad_params, smooth_quantum_gradient};
use crate::vecmath::{dot, norm_inf, sub};

/// Result of one randomized subgradient computation.
#[derive(Clone, Debug)]
pub struct SubgradientResult {
    pub gradient: Vec<f64>,
    /// Grid point the smooth gradient was taken at.
    pub sampled_center: Vec<f64>,
    pub r1: f64,
    /// Smoothness bound passed downstream: 2n^{1/3}L/(r1^{2/3}ε^{1/3}).
    pub effective_beta: f64,
    pub logical_queries: u64,
    pub raw_queries: u64,
    pub rounds: u32,
}

/// Uniform node of the axis-aligned grid with spacing `l` anchored at
/// `x − r1·1` inside `B∞(x, r1)`. Nodes per axis: `x_i − r1 + l·k` for
/// `k = 0, …, ⌊2r1/l⌋`.
pub fn grid_sample<R: Rng>(x: &[f64], r1: f64, l: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(r1 > 0.0) || !(l > 0.0) {
        return Err(Error::ParamError("r1 and l must be positive".into()));
    }
    if l > 2.0 * r1 * (1.0 + 1e-12) {
        return Err(Error::DegenerateGrid { l, width: 2.0 * r1 });
    }
    let nodes = grid_nodes_per_axis(r1, l);
    Ok(x.iter()
        .map(|&c| {
            let k = rng.gen_range(0..nodes);
            c - r1 + l * k as f64
        })
        .collect())
}

/// Nodes per axis for a given (r1, l); exposed for enumeration tests.
pub fn grid_nodes_per_axis(r1: f64, l: f64) -> u64 {
    (2.0 * r1 / l + 1e-9).floor() as u64 + 1
}

/// Randomized quantum subgradient: sample `y` from the grid of the derived
/// size inside `B∞(x, r1)`, then run the median-filtered gradient at `y`
/// with smoothness bound `2n^{1/3}L/(r1^{2/3}ε^{1/3})`.
pub fn quantum_subgradient<R: Rng>(
    f: &CountedOracle,
    eval_error: f64,
    lipschitz: f64,
    x: &[f64],
    r1: f64,
    rng: &mut R,
) -> Result<SubgradientResult> {
    let n = x.len();
    if n == 0 {
        return Err(Error::ParamError("empty point".into()));
    }
    if !(eval_error > 0.0) || eval_error >= 1.0f64.min(r1 / (n * n) as f64) {
        return Err(Error::ParamError(format!(
            "need 0 < ε < min{{1, r1/n²}} = {}, got ε = {eval_error}",
            1.0f64.min(r1 / (n * n) as f64)
        )));
    }
    // The guarantee's derivation assumes L ≥ 1; for smaller L run with 1.
    let lip = lipschitz.max(1.0);
    let effective_beta =
        2.0 * (n as f64).powf(1.0 / 3.0) * lip / (r1.powf(2.0 / 3.0) * eval_error.powf(1.0 / 3.0));
    let params = derive_grad_params(n, lip, effective_beta, eval_error)?;
    let y = grid_sample(x, r1, params.grid_size, rng)?;
    let raw_before = f.query_count();
    let smooth = smooth_quantum_gradient(f, eval_error, lip, effective_beta, &y, rng)?;
    let raw_queries = f.query_count() - raw_before;
    let gradient = smooth
        .gradient
        .iter()
        .map(|g| g.clamp(-lipschitz, lipschitz))
        .collect();
    Ok(SubgradientResult {
        gradient,
        sampled_center: y,
        r1,
        effective_beta,
        logical_queries: smooth.logical_phase_queries,
        raw_queries,
        rounds: smooth.rounds,
    })
}

/// Smallest ζ̂ ≥ 0 such that
/// `f(q) ≥ f(x) + ⟨g̃, q−x⟩ − ζ̂‖q−x‖∞ − 4n·r1·L` for all sampled q:
/// the max over q of `[f(x) + ⟨g̃, q−x⟩ − 4n·r1·L − f(q)]₊ / ‖q−x‖∞`.
pub fn subgradient_certificate_check(
    f: &ObjectiveFunction,
    x: &[f64],
    gradient: &[f64],
    r1: f64,
    lipschitz: f64,
    q_samples: &[Vec<f64>],
) -> Result<f64> {
    if q_samples.is_empty() {
        return Err(Error::ParamError("certificate needs at least one sample".into()));
    }
    let n = x.len() as f64;
    let fx = f.eval_exact(x);
    let slack = 4.0 * n * r1 * lipschitz;
    let mut worst = 0.0f64;
    for q in q_samples {
        if !crate::vecmath::all_finite(q) {
            return Err(Error::InvalidPoint);
        }
        let d = sub(q, x);
        let denom = norm_inf(&d);
        if denom == 0.0 {
            continue; // division guard: q = x carries no information
        }
        let violation = fx + dot(gradient, &d) - slack - f.eval_exact(q);
        worst = worst.max(violation / denom);
    }
    Ok(worst)
}

/// Δ(y, z) = |f(z) − f(y) − ⟨∇f(y), z − y⟩| for objectives with an analytic
/// gradient.
pub fn deviation_from_linearity(f: &ObjectiveFunction, y: &[f64], z: &[f64]) -> Result<f64> {
    let grad = f
        .analytic_gradient(y)
        .ok_or_else(|| Error::ParamError("objective has no analytic gradient".into()))?;
    let d = sub(z, y);
    Ok((f.eval_exact(z) - f.eval_exact(y) - dot(&grad, &d)).abs())
}

/// Forward finite differences `(f(x + h·e_i) − f(x))/h`, using exactly
/// `n + 1` evaluation queries.
pub fn finite_difference_gradient(
    f: &CountedOracle,
    x: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::ParamError("step h must be positive".into()));
    }
    let base = f.query_evaluation(x)?;
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        grad.push((f.query_evaluation(&probe)? - base) / h);
        probe[i] = x[i];
    }
    Ok(grad)
}
