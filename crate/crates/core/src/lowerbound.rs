//! Executable lower-bound constructions: the wildcard oracle, the
//! sum-of-coordinates and max-norm instances with their oracle-simulation
//! reductions, the discretization algorithm, and the combined 2n-dimensional
//! instance.
//!
//! The quantum search-with-wildcards algorithm itself is out of scope; a
//! classical driver recovers hidden strings with n singleton queries and the
//! reported counts are labeled accordingly.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::oracles::{max_norm_value, ConvexBody, CountedOracle, ObjectiveFunction};

/// Hidden bit string `s` behind the wildcard oracle
/// `Q_s(T, y) = δ[s_{|T} = y]`.
pub struct WildcardInstance {
    s: Vec<bool>,
    count: AtomicU64,
}

impl WildcardInstance {
    pub fn new(s: Vec<bool>) -> Self {
        Self { s, count: AtomicU64::new(0) }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn query_count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    /// `Q_s(T, y)`: 1 iff `s` restricted to the index set `T` equals `y`.
    /// The empty restriction matches vacuously.
    pub fn query(&self, t: &[usize], y: &[bool]) -> Result<bool> {
        if t.len() != y.len() {
            return Err(Error::ArityError);
        }
        if t.iter().any(|&i| i >= self.s.len()) {
            return Err(Error::ParamError("index set exceeds string length".into()));
        }
        self.count.fetch_add(1, Ordering::Relaxed);
        Ok(t.iter().zip(y).all(|(&i, &bit)| self.s[i] == bit))
    }
}

/// Simulate one membership query for the hypercube `C_s = ×_i [s_i−2, s_i+1]`
/// with one wildcard query (zero when some coordinate is always outside).
///
/// Coordinates split into `T_{x,0} = [−2,−1)`, `T_{x,1} = (1,2]`,
/// `T_mid = [−1,1]`, and `T_out` (the rest).
pub fn sum_coords_membership(inst: &WildcardInstance, x: &[f64]) -> Result<bool> {
    if x.len() != inst.len() {
        return Err(Error::ParamError("dimension mismatch".into()));
    }
    let mut t = Vec::new();
    let mut y = Vec::new();
    for (i, &v) in x.iter().enumerate() {
        if (-2.0..-1.0).contains(&v) {
            t.push(i);
            y.push(false);
        } else if v > 1.0 && v <= 2.0 {
            t.push(i);
            y.push(true);
        } else if (-1.0..=1.0).contains(&v) {
            // always inside regardless of s_i
        } else {
            return Ok(false); // T_out nonempty: no query needed
        }
    }
    inst.query(&t, &y)
}

/// Per-coordinate threshold rounding: 0 where `x_i < threshold`, else 1.
pub fn round_sgn(x: &[f64], threshold: f64) -> Vec<bool> {
    x.iter().map(|&v| v >= threshold).collect()
}

/// Exact max-norm objective value
/// `f_c(x) = max_i |π(x_i) − c_i| + Σ_i |π(x_i) − x_i|`.
pub fn max_norm_eval(c: &[bool], x: &[f64]) -> f64 {
    let cf: Vec<f64> = c.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    max_norm_value(&cf, x)
}

/// Decision oracle `δ[f_c(x) ≤ t]` for `x ∈ [0,1]^n`, simulated with at most
/// one wildcard query on the hidden `c`.
///
/// With `J_{0,t} = [0,t]` and `J_{1,t} = [1−t,1]`, coordinates land in
/// `I_0 = J_0∖J_1`, `I_1 = J_1∖J_0`, `I_mid = J_0∩J_1`, or `I_out`;
/// a nonempty `I_out` bucket forces answer 0 without any query.
pub fn max_norm_decision_via_wildcard(
    inst: &WildcardInstance,
    x: &[f64],
    t: f64,
) -> Result<bool> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::DomainError);
    }
    if x.len() != inst.len() || x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::DomainError);
    }
    let mut set = Vec::new();
    let mut y = Vec::new();
    for (i, &v) in x.iter().enumerate() {
        let in_j0 = v <= t;
        let in_j1 = v >= 1.0 - t;
        match (in_j0, in_j1) {
            (true, true) => {}
            (true, false) => {
                set.push(i);
                y.push(false);
            }
            (false, true) => {
                set.push(i);
                y.push(true);
            }
            (false, false) => return Ok(false),
        }
    }
    inst.query(&set, &y)
}

/// Decision-oracle wrapper that counts decision queries (each consumes at
/// most one wildcard query).
pub struct MaxNormDecisionOracle {
    inst: Arc<WildcardInstance>,
    decisions: AtomicU64,
}

impl MaxNormDecisionOracle {
    pub fn new(inst: Arc<WildcardInstance>) -> Self {
        Self { inst, decisions: AtomicU64::new(0) }
    }

    pub fn decide(&self, x: &[f64], t: f64) -> Result<bool> {
        self.decisions.fetch_add(1, Ordering::Relaxed);
        max_norm_decision_via_wildcard(&self.inst, x, t)
    }

    pub fn decision_count(&self) -> u64 {
        self.decisions.load(Ordering::Relaxed)
    }

    pub fn wildcard_count(&self) -> u64 {
        self.inst.query_count()
    }
}

/// Recover `f_c(x)` to additive precision `2^{−bits}` with exactly `bits`
/// decision queries, by dyadic binary search over `t ∈ [0,1]`.
pub fn binary_search_eval(
    oracle: &MaxNormDecisionOracle,
    x: &[f64],
    bits: u32,
) -> Result<f64> {
    if bits == 0 {
        return Err(Error::ParamError("need at least one bit".into()));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..bits {
        let mid = 0.5 * (lo + hi);
        if oracle.decide(x, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `Ord(x)`: the (b, σ) arranging `x_1,…,x_n,1−x_1,…,1−x_n` decreasingly as
/// `b_{σ(1)}x_{σ(1)}+(1−b_{σ(1)})(1−x_{σ(1)}) ≥ …` followed by the mirrored
/// complements. σ is returned as a 0-based position→index map.
///
/// Tie-breaking is the fixed deterministic rule: equal values sort x-type
/// entries before complement entries, then by lower index. The palindrome
/// structure guarantees the top half hits each index exactly once.
pub fn ord(x: &[f64]) -> (Vec<bool>, Vec<usize>) {
    let n = x.len();
    // (value, is_complement, index)
    let mut entries: Vec<(f64, bool, usize)> = Vec::with_capacity(2 * n);
    for (i, &v) in x.iter().enumerate() {
        entries.push((v, false, i));
        entries.push((1.0 - v, true, i));
    }
    entries.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then_with(|| a.1.cmp(&b.1))
            .then_with(|| a.2.cmp(&b.2))
    });
    let mut sigma = Vec::with_capacity(n);
    let mut b = vec![false; n];
    for &(_, is_comp, idx) in entries.iter().take(n) {
        sigma.push(idx);
        b[idx] = !is_comp;
    }
    debug_assert_eq!(
        {
            let mut seen = sigma.clone();
            seen.sort_unstable();
            seen.dedup();
            seen.len()
        },
        n,
        "palindrome structure violated"
    );
    (b, sigma)
}

/// `χ(a, π)_i = (1−a_i)·π(i)/(2n+1) + a_i·(1 − π(i)/(2n+1))`, with π given
/// 0-based (rank `π(i)` is `pi[i] + 1`).
pub fn chi(a: &[bool], pi: &[usize]) -> Vec<f64> {
    let n = a.len();
    let m = (2 * n + 1) as f64;
    a.iter()
        .zip(pi)
        .map(|(&ai, &rank)| {
            let frac = (rank + 1) as f64 / m;
            if ai {
                1.0 - frac
            } else {
                frac
            }
        })
        .collect()
}

/// Intermediate record of one discretized evaluation.
#[derive(Clone, Debug)]
pub struct DiscretizationTrace {
    pub b: Vec<bool>,
    pub sigma: Vec<usize>,
    pub x_star: Vec<f64>,
    pub k_star: usize,
    pub value: f64,
}

/// Evaluate `f_c(x)` exactly for `x ∈ [0,1]^n` using one query to a
/// low-precision oracle (error ≤ 1/(5n)) at the discretized point
/// `x* = χ(b, σ^{-1}) ∈ D_n`: round `k* = ⌈(2n+1)(1−f̂(x*))⌋` and read the
/// answer off the ordering.
pub fn discretized_eval(
    oracle: &CountedOracle,
    x: &[f64],
) -> Result<(f64, DiscretizationTrace)> {
    let n = x.len();
    if n == 0 {
        return Err(Error::ParamError("empty point".into()));
    }
    if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::DomainError);
    }
    let (b, sigma) = ord(x);
    let mut inv = vec![0usize; n];
    for (pos, &idx) in sigma.iter().enumerate() {
        inv[idx] = pos;
    }
    let x_star = chi(&b, &inv);
    let noisy = oracle.query_evaluation(&x_star)?;
    let m = (2 * n + 1) as f64;
    let raw = m * (1.0 - noisy);
    // k* is always in {1,…,n+1}; a compliant oracle keeps `raw` within half
    // a grid step of it, so ties at the range ends round inward.
    if raw < 0.5 - 1e-9 || raw > (n + 1) as f64 + 0.5 + 1e-9 {
        return Err(Error::ContractViolation(format!(
            "k* estimate {raw} outside {{1,…,{}}} by more than 1/2; oracle error exceeds 1/(5n)?",
            n + 1
        )));
    }
    let k_star = (raw.round() as usize).clamp(1, n + 1);
    let value = if k_star == n + 1 {
        let j = sigma[n - 1];
        if b[j] {
            1.0 - x[j]
        } else {
            x[j]
        }
    } else {
        let j = sigma[k_star - 1];
        if b[j] {
            x[j]
        } else {
            1.0 - x[j]
        }
    };
    Ok((value, DiscretizationTrace { b, sigma, x_star, k_star, value }))
}

/// Recover the hidden string of a max-norm instance from an exact
/// evaluation oracle, probing `x^{(T,y)}` (½ off `T`, `y_i` on `T`); the
/// wildcard answer is 1 iff `f_c(x^{(T,y)}) ∈ {0, ½}`.
///
/// The classical driver uses n singleton probes; the quantum
/// search-with-wildcards routine would need only Õ(√n) of these.
pub fn solve_max_norm_via_wildcards(f_oracle: &CountedOracle) -> Result<Vec<bool>> {
    let obj = f_oracle
        .objective()
        .ok_or_else(|| Error::ParamError("need an evaluation oracle".into()))?;
    let n = obj.dim();
    let mut c = Vec::with_capacity(n);
    for i in 0..n {
        let mut probe = vec![0.5; n];
        probe[i] = 1.0;
        let v = f_oracle.query_evaluation(&probe)?;
        if (v - 1.0).abs() < 1e-9 {
            c.push(false); // mismatch: c_i ≠ 1
        } else if v.abs() < 1e-9 || (v - 0.5).abs() < 1e-9 {
            c.push(true);
        } else {
            return Err(Error::ContractViolation(format!(
                "probe value {v} outside {{0, 1/2, 1}}"
            )));
        }
    }
    Ok(c)
}

/// The combined 2n-dimensional instance: membership over `C_s × [0,1]^n` and
/// evaluation of `f_M + f_{E,c}`, minimized at `(s − 2·1, c)` with value
/// `Σ(s_i − 2)`.
pub fn combined_instance(
    s: &[bool],
    c: &[bool],
) -> Result<(Arc<ConvexBody>, Arc<ObjectiveFunction>)> {
    if s.len() != c.len() || s.is_empty() {
        return Err(Error::ParamError("|s| = |c| ≥ 1 required".into()));
    }
    Ok((
        Arc::new(ConvexBody::combined_box(s)),
        Arc::new(ObjectiveFunction::combined(c)),
    ))
}

/// All bit strings of length `n`, for exhaustive sweeps.
pub fn all_bitstrings(n: usize) -> Vec<Vec<bool>> {
    (0..1u32 << n)
        .map(|mask| (0..n).map(|i| mask >> i & 1 == 1).collect())
        .collect()
}

/// All permutations of `0..n` (0-based ranks), for exhaustive sweeps.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            prefix.push(v);
            rec(prefix, rest, out);
            prefix.pop();
            rest.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}
