//! Exact statevector simulation of the QFT-based gradient estimator and its
//! diagnostics.
//!
//! The phase oracle is realized by direct amplitude multiplication: the
//! simulated state is identical to the phase-kickback construction but
//! exponentially cheaper to prepare. Two query counters are kept: a logical
//! phase-query count (one per estimate, what the oracle-complexity claims
//! refer to) and the raw number of evaluation calls (`N^n` per sweep, since a
//! classical simulator cannot query in superposition).

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::oracles::CountedOracle;

/// Default statevector budget: number of complex amplitudes.
pub const DEFAULT_STATE_BUDGET: u64 = 1 << 22;

/// Environment variable overriding the statevector budget.
pub const STATE_BUDGET_ENV: &str = "QCONVEX_STATE_BUDGET";

/// Current statevector budget (env override or default).
pub fn state_budget() -> u64 {
    std::env::var(STATE_BUDGET_ENV)
        .ok()
        .and_then(|v| v.parse::<u64>().ok())
        .unwrap_or(DEFAULT_STATE_BUDGET)
}

/// Derived constants of the gradient-estimation circuit.
#[derive(Clone, Debug)]
pub struct GradParams {
    pub n: usize,
    pub lipschitz: f64,
    pub smoothness: f64,
    pub eval_error: f64,
    /// Grid size l = 2√(ε/(nβ)).
    pub grid_size: f64,
    /// Bits per register; N = 2^b.
    pub bits: u32,
    pub n_points: usize,
    /// Phase bits; N0 = 2^{b0}.
    pub phase_bits: u32,
    pub n_phase: u64,
}

impl GradParams {
    /// Amplitudes needed for the full register file.
    pub fn state_len(&self) -> u128 {
        (self.n_points as u128).pow(self.n as u32)
    }
}

/// Smallest integer `b ≥ 1` with `2^{-b} ≤ hi`, checked to also satisfy
/// `2^{-b} ≥ lo` (the interval spans a factor of two, so such `b` exists
/// whenever `hi < 1`).
fn bits_in_interval(lo: f64, hi: f64, what: &str) -> Result<u32> {
    if !(hi > 0.0) || !hi.is_finite() {
        return Err(Error::ParamsInfeasible(format!("{what}: bound {hi} not positive/finite")));
    }
    let mut b = (-(hi.log2())).ceil() as i64;
    // Float guards around exact powers of two.
    while b > 0 && 2f64.powi(-(b as i32) + 1) <= hi * (1.0 + 1e-12) {
        b -= 1;
        if b <= -64 {
            break;
        }
    }
    while 2f64.powi(-(b as i32)) > hi * (1.0 + 1e-12) {
        b += 1;
    }
    if b < 1 {
        return Err(Error::ParamsInfeasible(format!(
            "{what}: interval [{lo:.6e}, {hi:.6e}] admits no b ≥ 1 (upper bound ≥ 1/2)"
        )));
    }
    if b > 40 {
        return Err(Error::ParamsInfeasible(format!(
            "{what}: interval [{lo:.6e}, {hi:.6e}] needs b = {b} > 40 bits"
        )));
    }
    let val = 2f64.powi(-(b as i32));
    if val < lo * (1.0 - 1e-12) {
        return Err(Error::ParamsInfeasible(format!(
            "{what}: no power of two in [{lo:.6e}, {hi:.6e}]"
        )));
    }
    Ok(b as u32)
}

/// Derive (l, b, N, b0, N0) from (n, L, β, ε):
/// `24π√(nεβ)/L ≤ 1/N ≤ 48π√(nεβ)/L` and `Nε/(2Ll) ≤ 1/N0 ≤ Nε/(Ll)`.
pub fn derive_grad_params(
    n: usize,
    lipschitz: f64,
    smoothness: f64,
    eval_error: f64,
) -> Result<GradParams> {
    if n == 0 || !(lipschitz > 0.0) || !(smoothness > 0.0) || !(eval_error > 0.0) {
        return Err(Error::ParamError("n, L, β, ε must all be positive".into()));
    }
    let root = (n as f64 * eval_error * smoothness).sqrt();
    let lo = 24.0 * PI * root / lipschitz;
    let hi = 48.0 * PI * root / lipschitz;
    let bits = bits_in_interval(lo, hi, "register bits: 24π√(nεβ)/L ≤ 1/2^b ≤ 48π√(nεβ)/L")?;
    let n_points = 1usize << bits;
    let grid_size = 2.0 * (eval_error / (n as f64 * smoothness)).sqrt();
    let phase_hi = n_points as f64 * eval_error / (lipschitz * grid_size);
    let phase_lo = phase_hi / 2.0;
    let phase_bits =
        bits_in_interval(phase_lo, phase_hi, "phase bits: Nε/(2Ll) ≤ 1/2^b0 ≤ Nε/(Ll)")?;
    Ok(GradParams {
        n,
        lipschitz,
        smoothness,
        eval_error,
        grid_size,
        bits,
        n_points,
        phase_bits,
        n_phase: 1u64 << phase_bits,
    })
}

/// Complex amplitude vector over `n` registers of `b` bits each. Register 0
/// is the most significant digit of the flattened index; digit `d` of a
/// register encodes the group element `γ(d) = d − N/2 ∈ G`.
#[derive(Clone)]
pub struct PhaseState {
    n: usize,
    n_points: usize,
    amps: Vec<Complex64>,
}

impl PhaseState {
    pub fn registers(&self) -> usize {
        self.n
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Decode a flat index into per-register group elements `k_r ∈ G`.
    pub fn index_to_outcome(&self, mut idx: usize) -> Vec<i64> {
        let mut k = vec![0i64; self.n];
        for r in (0..self.n).rev() {
            let digit = idx % self.n_points;
            idx /= self.n_points;
            k[r] = digit as i64 - (self.n_points / 2) as i64;
        }
        k
    }

    /// In-place inverse Fourier transform over the shifted group
    /// `G = {−N/2, …, N/2−1}` on one register. Unitary.
    pub fn apply_inverse_qft_g(&mut self, register: usize) -> Result<()> {
        if register >= self.n {
            return Err(Error::ParamError(format!(
                "register {register} out of range for {} registers",
                self.n
            )));
        }
        let nn = self.n_points;
        let mat = inverse_qft_g_matrix(nn);
        let stride = nn.pow((self.n - 1 - register) as u32);
        let block = stride * nn;
        let mut line = vec![Complex64::new(0.0, 0.0); nn];
        let mut out = vec![Complex64::new(0.0, 0.0); nn];
        let len = self.amps.len();
        let mut base = 0;
        while base < len {
            for low in 0..stride {
                for (d, slot) in line.iter_mut().enumerate() {
                    *slot = self.amps[base + d * stride + low];
                }
                for (k, slot) in out.iter_mut().enumerate() {
                    let row = &mat[k * nn..(k + 1) * nn];
                    *slot = row.iter().zip(&line).map(|(m, a)| m * a).sum();
                }
                for (d, val) in out.iter().enumerate() {
                    self.amps[base + d * stride + low] = *val;
                }
            }
            base += block;
        }
        Ok(())
    }

    pub fn apply_inverse_qft_all(&mut self) -> Result<()> {
        for r in 0..self.n {
            self.apply_inverse_qft_g(r)?;
        }
        Ok(())
    }

    /// Measurement probabilities in flat-index order.
    pub fn outcome_distribution(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Sample one measurement outcome by cumulative inversion.
    pub fn sample_outcome<R: Rng>(&self, rng: &mut R) -> Vec<i64> {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = self.amps.len() - 1;
        for (idx, a) in self.amps.iter().enumerate() {
            acc += a.norm_sqr();
            if u < acc {
                chosen = idx;
                break;
            }
        }
        self.index_to_outcome(chosen)
    }
}

/// Row-major `N × N` matrix of the inverse QFT over `[0, N−1]`:
/// `(1/√N)·e^{−2πi·x·y/N}`.
pub fn inverse_qft_n_matrix(n_points: usize) -> Vec<Complex64> {
    let scale = 1.0 / (n_points as f64).sqrt();
    let mut m = Vec::with_capacity(n_points * n_points);
    for y in 0..n_points {
        for x in 0..n_points {
            let angle = -2.0 * PI * (x as f64) * (y as f64) / n_points as f64;
            m.push(Complex64::from_polar(scale, angle));
        }
    }
    m
}

/// Row-major matrix of the inverse QFT over `G`, indexed by register digits:
/// entry `(y, x) = (1/√N)·e^{−2πi·γ(x)γ(y)/N}`.
pub fn inverse_qft_g_matrix(n_points: usize) -> Vec<Complex64> {
    let scale = 1.0 / (n_points as f64).sqrt();
    let half = (n_points / 2) as i64;
    let mut m = Vec::with_capacity(n_points * n_points);
    for y in 0..n_points {
        let gy = y as i64 - half;
        for x in 0..n_points {
            let gx = x as i64 - half;
            let angle = -2.0 * PI * (gx * gy) as f64 / n_points as f64;
            m.push(Complex64::from_polar(scale, angle));
        }
    }
    m
}

/// Diagonal phase `U|x⟩ = e^{iπx}|x⟩` as a dense matrix.
pub fn u_phase_matrix(n_points: usize) -> Vec<Complex64> {
    let mut m = vec![Complex64::new(0.0, 0.0); n_points * n_points];
    for x in 0..n_points {
        m[x * n_points + x] = Complex64::from_polar(1.0, PI * x as f64);
    }
    m
}

pub fn mat_mul(a: &[Complex64], b: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

fn round_ties_even(v: f64) -> f64 {
    let f = v.floor();
    let frac = v - f;
    if (frac - 0.5).abs() < 1e-15 {
        if (f as i64) % 2 == 0 {
            f
        } else {
            f + 1.0
        }
    } else {
        v.round()
    }
}

/// One counted evaluation sweep: builds the pure phase state
/// `N^{-n/2} Σ_x e^{2πi F̃(x)} |x⟩` with `F̃` the value of
/// `(N/2Ll)[f(x0 + (l/N)γ(x)) − f(x0)]` rounded to the nearest multiple of
/// `1/N0` (ties to even). `f(x0)` is the sweep value at γ = 0, so the sweep
/// makes exactly `N^n` evaluation queries.
pub fn build_phase_state(
    f: &CountedOracle,
    params: &GradParams,
    x0: &[f64],
) -> Result<PhaseState> {
    if x0.len() != params.n {
        return Err(Error::ParamError("x0 dimension mismatch".into()));
    }
    let len_needed = params.state_len();
    let budget = state_budget();
    if len_needed > budget as u128 {
        return Err(Error::StateTooLarge { required: len_needed, budget });
    }
    let len = len_needed as usize;
    let nn = params.n_points;
    let half = (nn / 2) as i64;
    let step = params.grid_size / nn as f64;

    let mut values = vec![0.0f64; len];
    let mut point = vec![0.0f64; params.n];
    for (idx, slot) in values.iter_mut().enumerate() {
        let mut rest = idx;
        for r in (0..params.n).rev() {
            let digit = rest % nn;
            rest /= nn;
            point[r] = x0[r] + step * (digit as i64 - half) as f64;
        }
        *slot = f.query_evaluation(&point)?;
    }

    // Index of the all-zero group element (digit N/2 in every register).
    let mut center_idx = 0usize;
    for _ in 0..params.n {
        center_idx = center_idx * nn + nn / 2;
    }
    let f0 = values[center_idx];

    let scale = nn as f64 / (2.0 * params.lipschitz * params.grid_size);
    let n0 = params.n_phase as f64;
    let amp_mod = 1.0 / (len as f64).sqrt();
    let amps = values
        .iter()
        .map(|v| {
            let f_val = scale * (v - f0);
            let rounded = round_ties_even(f_val * n0) / n0;
            Complex64::from_polar(amp_mod, 2.0 * PI * rounded)
        })
        .collect();
    Ok(PhaseState { n: params.n, n_points: nn, amps })
}

/// Outcome of one run of the gradient-estimation circuit.
#[derive(Clone, Debug)]
pub struct GradientEstimate {
    pub gradient: Vec<f64>,
    pub outcome: Vec<i64>,
    pub logical_phase_queries: u64,
    pub raw_evaluation_queries: u64,
}

/// One full gradient-estimation circuit: phase sweep, inverse QFT over `G`
/// per register, and a seeded measurement from the exact outcome
/// distribution. Reports `g̃ = (2L/N)·(k_1, …, k_n)`.
pub fn gradient_estimate<R: Rng>(
    f: &CountedOracle,
    eval_error: f64,
    lipschitz: f64,
    smoothness: f64,
    x0: &[f64],
    rng: &mut R,
) -> Result<GradientEstimate> {
    if f.precision() > eval_error * (1.0 + 1e-12) {
        return Err(Error::ParamError(format!(
            "oracle precision {} exceeds the assumed evaluation error {eval_error}",
            f.precision()
        )));
    }
    let params = derive_grad_params(x0.len(), lipschitz, smoothness, eval_error)?;
    let mut state = build_phase_state(f, &params, x0)?;
    state.apply_inverse_qft_all()?;
    let outcome = state.sample_outcome(rng);
    let scale = 2.0 * lipschitz / params.n_points as f64;
    let gradient = outcome.iter().map(|&k| scale * k as f64).collect();
    Ok(GradientEstimate {
        gradient,
        outcome,
        logical_phase_queries: 1,
        raw_evaluation_queries: params.state_len() as u64,
    })
}

/// Minimal `T ≥ 1` with `2e^{−T²/24} ≤ 750√(nεβ)/L`.
pub fn median_rounds(n: usize, eval_error: f64, lipschitz: f64, smoothness: f64) -> u32 {
    let rhs = 750.0 * (n as f64 * eval_error * smoothness).sqrt() / lipschitz;
    let mut t = 1u32;
    while 2.0 * (-((t as f64).powi(2)) / 24.0).exp() > rhs {
        t += 1;
        if t > 10_000 {
            break;
        }
    }
    t
}

/// Output of the median-filtered gradient routine.
#[derive(Clone, Debug)]
pub struct SmoothGradient {
    pub gradient: Vec<f64>,
    pub rounds: u32,
    pub logical_phase_queries: u64,
    pub raw_evaluation_queries: u64,
}

/// Runs the estimator `T` times; per coordinate, if more than `T/2` of the
/// estimates lie in an interval of width `3000√(nεβ)` the result is the
/// median of those points, else 0. Output is clamped to `|g̃_i| ≤ L`.
pub fn smooth_quantum_gradient<R: Rng>(
    f: &CountedOracle,
    eval_error: f64,
    lipschitz: f64,
    smoothness: f64,
    x: &[f64],
    rng: &mut R,
) -> Result<SmoothGradient> {
    let n = x.len();
    let t = median_rounds(n, eval_error, lipschitz, smoothness);
    let mut estimates: Vec<Vec<f64>> = Vec::with_capacity(t as usize);
    let mut raw = 0u64;
    for _ in 0..t {
        let est = gradient_estimate(f, eval_error, lipschitz, smoothness, x, rng)?;
        raw += est.raw_evaluation_queries;
        estimates.push(est.gradient);
    }
    let width = 3000.0 * (n as f64 * eval_error * smoothness).sqrt();
    let mut gradient = vec![0.0; n];
    for i in 0..n {
        let mut vals: Vec<f64> = estimates.iter().map(|e| e[i]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        gradient[i] = majority_interval_median(&vals, width)
            .unwrap_or(0.0)
            .clamp(-lipschitz, lipschitz);
    }
    Ok(SmoothGradient {
        gradient,
        rounds: t,
        logical_phase_queries: t as u64,
        raw_evaluation_queries: raw,
    })
}

/// Median of the densest window of width `width` in sorted `vals`, provided
/// that window holds a strict majority; `None` otherwise.
fn majority_interval_median(vals: &[f64], width: f64) -> Option<f64> {
    let t = vals.len();
    let mut best: Option<(usize, usize)> = None;
    let mut j = 0usize;
    for i in 0..t {
        if j < i {
            j = i;
        }
        while j + 1 < t && vals[j + 1] - vals[i] <= width {
            j += 1;
        }
        let count = j - i + 1;
        if best.map_or(true, |(bi, bj)| count > bj - bi + 1) {
            best = Some((i, j));
        }
    }
    let (i, j) = best?;
    let count = j - i + 1;
    if 2 * count <= t {
        return None;
    }
    let window = &vals[i..=j];
    let mid = count / 2;
    Some(if count % 2 == 1 {
        window[mid]
    } else {
        0.5 * (window[mid - 1] + window[mid])
    })
}

/// Two-norm gap and trace distance between the realized phase state and the
/// idealized state `N^{-n/2} Σ e^{2πi g·x/(2L)}|x⟩` for a known gradient.
pub fn state_distance_diagnostic(
    f: &CountedOracle,
    analytic_gradient: &[f64],
    params: &GradParams,
    x0: &[f64],
) -> Result<(f64, f64)> {
    let state = build_phase_state(f, params, x0)?;
    let nn = params.n_points;
    let half = (nn / 2) as i64;
    let len = state.amps.len();
    let amp_mod = 1.0 / (len as f64).sqrt();
    // Compensated sums: the overlap of near-identical unit states is 1 up
    // to crumbs that plain summation would inflate into a fake trace gap.
    let mut diff_sq = 0.0;
    let mut diff_c = 0.0;
    let mut overlap = Complex64::new(0.0, 0.0);
    let mut overlap_c = Complex64::new(0.0, 0.0);
    for (idx, actual) in state.amps.iter().enumerate() {
        let mut rest = idx;
        let mut phase = 0.0;
        for r in (0..params.n).rev() {
            let digit = rest % nn;
            rest /= nn;
            let g = (digit as i64 - half) as f64;
            phase += analytic_gradient[r] * g / (2.0 * params.lipschitz);
        }
        let ideal = Complex64::from_polar(amp_mod, 2.0 * PI * phase);
        let term = (actual - ideal).norm_sqr() - diff_c;
        let sum = diff_sq + term;
        diff_c = (sum - diff_sq) - term;
        diff_sq = sum;
        let term = actual.conj() * ideal - overlap_c;
        let sum = overlap + term;
        overlap_c = (sum - overlap) - term;
        overlap = sum;
    }
    let two_norm_gap = diff_sq.max(0.0).sqrt();
    let fidelity = overlap.norm_sqr().min(1.0);
    let trace_distance = 2.0 * (1.0 - fidelity).max(0.0).sqrt();
    Ok((two_norm_gap, trace_distance))
}

/// Logical/raw query tally used by experiment reports.
#[derive(Default)]
pub struct QueryTally {
    pub logical: AtomicU64,
    pub raw: AtomicU64,
}

impl QueryTally {
    pub fn add(&self, logical: u64, raw: u64) {
        self.logical.fetch_add(logical, Ordering::Relaxed);
        self.raw.fetch_add(raw, Ordering::Relaxed);
    }
}

/// Convenience: evaluation oracle over an exact objective.
pub fn exact_eval_oracle(obj: Arc<crate::oracles::ObjectiveFunction>) -> Arc<CountedOracle> {
    CountedOracle::evaluation(obj, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::ObjectiveFunction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    /// ε·β product that makes the register interval admit exactly `N`.
    fn eps_for_n_points(n: usize, lipschitz: f64, n_points: usize, beta: f64) -> f64 {
        let root = lipschitz / (32.0 * PI * n_points as f64);
        root * root / (n as f64 * beta)
    }

    #[test]
    fn params_intervals_hold() {
        for (n, l, beta, eps) in [
            (1usize, 1.0, 1.0, 1e-8),
            (2, 3.0, 0.5, 1e-7),
            (3, 0.7, 2.0, 1e-9),
        ] {
            let p = derive_grad_params(n, l, beta, eps).unwrap();
            let root = (n as f64 * eps * beta).sqrt();
            let inv_n = 1.0 / p.n_points as f64;
            assert!(24.0 * PI * root / l <= inv_n * (1.0 + 1e-9));
            assert!(inv_n <= 48.0 * PI * root / l * (1.0 + 1e-9));
            let inv_n0 = 1.0 / p.n_phase as f64;
            let hi = p.n_points as f64 * eps / (l * p.grid_size);
            assert!(hi / 2.0 <= inv_n0 * (1.0 + 1e-9));
            assert!(inv_n0 <= hi * (1.0 + 1e-9));
            assert!((p.grid_size - 2.0 * (eps / (n as f64 * beta)).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn params_admit_requested_n() {
        // n = 1, L = 1, εβ = (1/(48π·16))² admits N = 16.
        let eps = {
            let root = 1.0 / (48.0 * PI * 16.0);
            root * root
        };
        let p = derive_grad_params(1, 1.0, 1.0, eps).unwrap();
        assert_eq!(p.n_points, 16);
        let p = derive_grad_params(1, 1.0, 1.0, eps_for_n_points(1, 1.0, 16, 1.0)).unwrap();
        assert_eq!(p.n_points, 16);
    }

    #[test]
    fn params_infeasible_when_epsilon_large() {
        assert!(matches!(
            derive_grad_params(1, 1.0, 1.0, 1.0),
            Err(Error::ParamsInfeasible(_))
        ));
    }

    #[test]
    fn doubling_lipschitz_increments_bits() {
        let eps = eps_for_n_points(1, 1.0, 32, 1.0);
        let a = derive_grad_params(1, 1.0, 1.0, eps).unwrap();
        let b = derive_grad_params(1, 2.0, 1.0, eps).unwrap();
        assert_eq!(b.bits, a.bits + 1);
    }

    #[test]
    fn qft_g_identity_small_sizes() {
        // QFT_G^{-1} = e^{−iπN/2} · U · QFT_N^{-1} · U; the global phase is 1
        // when 4 | N and −1 when N = 2.
        for n_points in [2usize, 4, 8, 16] {
            let direct = inverse_qft_g_matrix(n_points);
            let u = u_phase_matrix(n_points);
            let conj = mat_mul(&mat_mul(&u, &inverse_qft_n_matrix(n_points), n_points), &u, n_points);
            let phase = Complex64::from_polar(1.0, -PI * n_points as f64 / 2.0);
            let adjusted: Vec<Complex64> = conj.iter().map(|m| m * phase).collect();
            assert!(
                max_abs_diff(&direct, &adjusted) < 1e-12,
                "N = {n_points} identity fails"
            );
            if n_points % 4 == 0 {
                assert!(max_abs_diff(&direct, &conj) < 1e-12);
            }
        }
    }

    #[test]
    fn inverse_qft_g_is_unitary_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (n, n_points) in [(1usize, 16usize), (2, 8), (3, 4)] {
            let len = n_points.pow(n as u32);
            let mut amps: Vec<Complex64> = (0..len)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            amps.iter_mut().for_each(|a| *a /= norm);
            let mut state = PhaseState { n, n_points, amps };
            state.apply_inverse_qft_all().unwrap();
            assert!((state.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn phase_state_is_pure_phase_and_counts_one_sweep() {
        let obj = Arc::new(ObjectiveFunction::linear(vec![0.25]));
        let oracle = exact_eval_oracle(obj);
        let eps = eps_for_n_points(1, 1.0, 8, 1.0);
        let params = derive_grad_params(1, 1.0, 1.0, eps).unwrap();
        let state = build_phase_state(&oracle, &params, &[0.0]).unwrap();
        let expect = 1.0 / (params.n_points as f64).sqrt();
        for a in state.amplitudes() {
            assert!((a.norm() - expect).abs() < 1e-10);
        }
        assert_eq!(oracle.query_count(), params.state_len() as u64);
        assert!((state.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn linear_aligned_gradient_is_recovered_exactly() {
        // f(x) = g·x with g = 0.5 = (2L/N)·2 at N = 8: outcome k = 2 with
        // probability 1 and the reported gradient is exact.
        let lipschitz = 1.0;
        let eps = eps_for_n_points(1, lipschitz, 8, 1.0);
        let obj = Arc::new(ObjectiveFunction::linear(vec![0.5]));
        let oracle = exact_eval_oracle(obj);
        let params = derive_grad_params(1, lipschitz, 1.0, eps).unwrap();
        assert_eq!(params.n_points, 8);
        let mut state = build_phase_state(&oracle, &params, &[0.3]).unwrap();
        state.apply_inverse_qft_all().unwrap();
        let dist = state.outcome_distribution();
        let (best, mass) = dist
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        assert!(*mass >= 1.0 - 1e-9, "point mass {mass}");
        assert_eq!(state.index_to_outcome(best), vec![2]);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let est = gradient_estimate(&oracle, eps, lipschitz, 1.0, &[0.3], &mut rng).unwrap();
        assert_eq!(est.outcome, vec![2]);
        assert!((est.gradient[0] - 0.5).abs() < 1e-12);
        assert_eq!(est.logical_phase_queries, 1);
        assert_eq!(est.raw_evaluation_queries, 8);
    }

    #[test]
    fn constant_function_reports_zero_gradient() {
        let obj = Arc::new(ObjectiveFunction::new(
            2,
            1.0,
            5.0,
            5.0,
            Arc::new(|_| 5.0),
            None,
        ));
        let oracle = exact_eval_oracle(obj);
        let eps = eps_for_n_points(2, 1.0, 8, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let est = gradient_estimate(&oracle, eps, 1.0, 1.0, &[0.0, 0.0], &mut rng).unwrap();
        assert_eq!(est.outcome, vec![0, 0]);
        assert_eq!(est.gradient, vec![0.0, 0.0]);
    }

    #[test]
    fn aligned_linear_exactness_across_dims_and_sizes() {
        for n in 1..=3usize {
            for n_points in [8usize, 16] {
                let lipschitz = 1.0;
                let eps = eps_for_n_points(n, lipschitz, n_points, 1.0);
                let step = 2.0 * lipschitz / n_points as f64;
                let ks: Vec<i64> = (0..n)
                    .map(|i| (i as i64 + 1) - (n_points as i64) / 4)
                    .collect();
                let g: Vec<f64> = ks.iter().map(|&k| step * k as f64).collect();
                let obj = Arc::new(ObjectiveFunction::linear(g.clone()));
                let oracle = exact_eval_oracle(obj);
                let params = derive_grad_params(n, lipschitz, 1.0, eps).unwrap();
                assert_eq!(params.n_points, n_points);
                let mut state = build_phase_state(&oracle, &params, &vec![0.1; n]).unwrap();
                state.apply_inverse_qft_all().unwrap();
                let dist = state.outcome_distribution();
                let (best, mass) = dist
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap();
                assert!(*mass >= 1.0 - 1e-9, "n={n} N={n_points} mass={mass}");
                assert_eq!(state.index_to_outcome(best), ks);
            }
        }
    }

    #[test]
    fn smooth_gradient_on_linear_is_exact_and_bounded() {
        let lipschitz = 1.0;
        let eps = eps_for_n_points(1, lipschitz, 8, 1.0);
        let obj = Arc::new(ObjectiveFunction::linear(vec![0.5]));
        let oracle = exact_eval_oracle(obj);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out = smooth_quantum_gradient(&oracle, eps, lipschitz, 1.0, &[0.0], &mut rng).unwrap();
        assert!((out.gradient[0] - 0.5).abs() < 1e-12);
        assert!(out.gradient[0].abs() <= lipschitz);
        assert_eq!(out.logical_phase_queries, out.rounds as u64);
        assert_eq!(out.raw_evaluation_queries, out.rounds as u64 * 8);
    }

    #[test]
    fn majority_interval_fallback_is_zero() {
        // Bimodal with no strict-majority window of the given width.
        let vals = vec![-1.0, -1.0, -0.99, 0.99, 1.0, 1.0];
        assert_eq!(majority_interval_median(&vals, 0.1), None);
        // Clear majority: median of the dense window.
        let vals = vec![-1.0, 0.49, 0.5, 0.5, 0.51];
        let m = majority_interval_median(&vals, 0.1).unwrap();
        assert!((m - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quadratic_failure_rate_below_one_third() {
        // Lemma-level check at n = 1: per-coordinate failure rate of the
        // 1500√(nεβ) threshold over seeded runs stays under 1/3 + 3σ.
        let beta = 1.0;
        let lipschitz = 1.0;
        let eps = eps_for_n_points(1, lipschitz, 16, beta);
        let obj = Arc::new(ObjectiveFunction::quadratic_diag(
            vec![beta],
            vec![0.0],
            lipschitz,
        ));
        let oracle = exact_eval_oracle(obj);
        let threshold = 1500.0 * (eps * beta).sqrt();
        let trials = 300;
        let mut failures = 0;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let est =
                gradient_estimate(&oracle, eps, lipschitz, beta, &[0.0], &mut rng).unwrap();
            if est.gradient[0].abs() > threshold {
                failures += 1;
            }
        }
        let rate = failures as f64 / trials as f64;
        let sigma = (rate.max(1e-3) * (1.0 - rate.max(1e-3)) / trials as f64).sqrt();
        assert!(rate < 1.0 / 3.0 + 3.0 * sigma, "failure rate {rate}");
    }

    #[test]
    fn state_distance_small_for_smooth_quadratic() {
        let beta = 1.0;
        let lipschitz = 1.0;
        let eps = eps_for_n_points(2, lipschitz, 8, beta);
        let obj = Arc::new(ObjectiveFunction::quadratic_diag(
            vec![beta, 0.5 * beta],
            vec![0.0, 0.0],
            lipschitz,
        ));
        let grad = obj.analytic_gradient(&[0.0, 0.0]).unwrap();
        let oracle = exact_eval_oracle(obj);
        let params = derive_grad_params(2, lipschitz, beta, eps).unwrap();
        let (gap, trace) =
            state_distance_diagnostic(&oracle, &grad, &params, &[0.0, 0.0]).unwrap();
        assert!(gap * gap <= 1.0 / 144.0, "gap² = {}", gap * gap);
        assert!(trace <= 2.0 * gap + 1e-12);
    }

    #[test]
    fn linear_state_distance_is_rounding_limited() {
        let lipschitz = 1.0;
        let eps = eps_for_n_points(1, lipschitz, 8, 1.0);
        let obj = Arc::new(ObjectiveFunction::linear(vec![0.5]));
        let grad = vec![0.5];
        let oracle = exact_eval_oracle(obj);
        let params = derive_grad_params(1, lipschitz, 1.0, eps).unwrap();
        let (gap, _) = state_distance_diagnostic(&oracle, &grad, &params, &[0.0]).unwrap();
        // Aligned linear phases are exactly representable on the 1/N0 grid.
        assert!(gap < 1e-10, "gap = {gap}");
    }

    #[test]
    fn state_budget_is_enforced() {
        let obj = Arc::new(ObjectiveFunction::linear(vec![0.5, 0.5, 0.5, 0.5]));
        let oracle = exact_eval_oracle(obj);
        // N = 2048 in dimension 4 would need 2^44 amplitudes.
        let eps = eps_for_n_points(4, 1.0, 2048, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = gradient_estimate(&oracle, eps, 1.0, 1.0, &[0.0; 4], &mut rng);
        assert!(matches!(err, Err(Error::StateTooLarge { .. })));
    }
}
