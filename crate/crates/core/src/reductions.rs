//! Height-function separation and the separation→optimization driver
//! completing membership→optimization.
//!
//! The optimization driver is a textbook central/shallow-cut ellipsoid
//! method rather than the faster cutting-plane scheme the reduction is
//! usually quoted with; it needs O(n² log(κ/ε)) separation calls instead of
//! Õ(n), and the harness reports measured counts so the substitution stays
//! visible. The separation oracle can compute the height-function
//! subgradient either classically (forward differences, n+1 height
//! evaluations) or via the randomized quantum estimator; the classical route
//! is the default for end-to-end runs since the quantum route's worst-case
//! constants demand statevectors far beyond a desk-scale budget.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::oracles::{ConvexBody, CountedOracle, Halfspace, Membership, ObjectiveFunction};
use crate::subgrad::{finite_difference_gradient, quantum_subgradient};
use crate::vecmath::{add, dot, norm2, normalize, scale, sub};

/// Answer of a separation procedure: an assertion `p ∈ B2(K, δ)` or a
/// halfspace approximately containing `K`.
#[derive(Clone, Debug)]
pub enum SeparationAnswer {
    Inside,
    Cut(Halfspace),
}

/// Evaluate the height function
/// `h_p(x) = −max{t ∈ R | x + t·p̂ ∈ K}` by binary search along the ray,
/// to precision `epsilon ≥ 7κδ`, where δ is the membership precision.
///
/// `p̂` points from the body's interior center toward `p`; `x` must lie in
/// `B2(center, r/2)`. Uses at most `⌈log2(2R·7κ/ε)⌉ + 2` membership queries.
pub fn height_eval(
    k_oracle: &CountedOracle,
    p: &[f64],
    x: &[f64],
    epsilon: f64,
) -> Result<f64> {
    let body = k_oracle
        .body()
        .ok_or_else(|| Error::ParamError("height_eval needs a membership oracle".into()))?;
    let kappa = body.kappa();
    if epsilon < 7.0 * kappa * k_oracle.precision() * (1.0 - 1e-12) {
        return Err(Error::ParamError(format!(
            "height precision {epsilon} below 7κδ = {}",
            7.0 * kappa * k_oracle.precision()
        )));
    }
    let center = body.center();
    let dir = normalize(&sub(p, center))
        .ok_or_else(|| Error::ParamError("p coincides with the body center".into()))?;
    // The 3κ-Lipschitz and 7κδ-amplification guarantees hold for
    // x ∈ B2(center, r/2); evaluation itself only needs the ray bracketed.
    if norm2(&sub(x, center)) > 2.0 * body.outer_radius() {
        return Err(Error::ParamError("x far outside the body's outer ball".into()));
    }
    let big_r = body.outer_radius();
    let resolution = epsilon / (7.0 * kappa);

    let at = |t: f64| -> Vec<f64> { add(x, &scale(&dir, t)) };
    if k_oracle.query_membership(&at(0.0))? == Membership::Out {
        return Err(Error::BracketError);
    }
    let mut hi = 2.0 * big_r;
    if k_oracle.query_membership(&at(hi))? == Membership::In {
        return Err(Error::BracketError);
    }
    let mut lo = 0.0;
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if k_oracle.query_membership(&at(mid))? == Membership::In {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(-0.5 * (lo + hi))
}

/// Parameters of the height-function separation oracle.
#[derive(Clone, Copy, Debug)]
pub enum SubgradientMethod {
    /// Forward differences over `n + 1` height evaluations, taken at a point
    /// sampled uniformly from `B∞(0, jitter)`. Differentiating at a sampled
    /// nearby point sidesteps the ridges of non-smooth height functions
    /// (where coordinate-wise differences are not approximate subgradients
    /// at any step size); the emitted margin carries the corresponding
    /// `4n·jitter·L` displacement slack.
    FiniteDifference { step: f64, height_precision: f64, jitter: f64 },
    /// Randomized quantum subgradient at the paper's parameterization
    /// (ε = 7κδ, L = 3κ, r1 = n√ε), taken at the literal point 0 of the
    /// height function's recentered domain.
    Quantum { delta: f64, rho: f64 },
}

/// Wrap the height function as a counted evaluation oracle over the
/// recentered domain (input `z` stands for the point `center + z`).
fn height_objective(
    k_oracle: Arc<CountedOracle>,
    p: Vec<f64>,
    epsilon: f64,
) -> Result<Arc<CountedOracle>> {
    let body = k_oracle
        .body()
        .ok_or_else(|| Error::ParamError("separation needs a membership oracle".into()))?;
    let n = body.dim();
    let kappa = body.kappa();
    let big_r = body.outer_radius();
    let center = body.center().to_vec();
    let eval = move |z: &[f64]| -> f64 {
        let point = add(&center, z);
        height_eval(&k_oracle, &p, &point, epsilon)
            .expect("height evaluation inside B2(center, r/2)")
    };
    let obj = ObjectiveFunction::new(
        n,
        3.0 * kappa,
        -2.0 * big_r,
        2.0 * big_r,
        Arc::new(eval),
        None,
    );
    CountedOracle::evaluation_with(Arc::new(obj), epsilon, crate::oracles::NoisePolicy::Exact)
}

/// `SeparatingHalfspace(K, p, ρ, δ)`: assert `p ∈ B2(K, δ)`, or cut with the
/// ball-exterior halfspace when `‖p − center‖ > R`, or compute a height
/// subgradient and emit the margin-bearing halfspace
/// `{x | ⟨g̃, x − p⟩ ≤ (30000R + 25)·n³·ε^{1/6}·κ²/ρ}`.
pub fn separating_halfspace<Rn: rand::Rng>(
    k_oracle: &Arc<CountedOracle>,
    p: &[f64],
    rho: f64,
    delta: f64,
    rng: &mut Rn,
) -> Result<SeparationAnswer> {
    separating_halfspace_with(
        k_oracle,
        p,
        rho,
        SubgradientMethod::Quantum { delta, rho },
        rng,
    )
}

pub fn separating_halfspace_with<Rn: rand::Rng>(
    k_oracle: &Arc<CountedOracle>,
    p: &[f64],
    rho: f64,
    method: SubgradientMethod,
    rng: &mut Rn,
) -> Result<SeparationAnswer> {
    let body = k_oracle
        .body()
        .ok_or_else(|| Error::ParamError("separation needs a membership oracle".into()))?
        .clone();
    let n = body.dim();
    let kappa = body.kappa();
    let r = body.inner_radius();
    let big_r = body.outer_radius();
    if !(0.0 < rho && rho < 1.0) {
        return Err(Error::ParamError("failure probability ρ must be in (0,1)".into()));
    }

    if k_oracle.query_membership(p)? == Membership::In {
        return Ok(SeparationAnswer::Inside);
    }

    let radial = sub(p, body.center());
    let dist = norm2(&radial);
    if dist > big_r {
        let normal = normalize(&radial).expect("p distinct from center");
        return Ok(SeparationAnswer::Cut(Halfspace::new(normal, p.to_vec(), 0.0)));
    }

    match method {
        SubgradientMethod::Quantum { delta, rho } => {
            if !(delta > 0.0) || delta >= (r / (7.0 * kappa)).min(1.0 / (7.0 * kappa)) {
                return Err(Error::ParamError(format!(
                    "need 0 < δ < min{{r/7κ, 1/7κ}} = {}",
                    (r / (7.0 * kappa)).min(1.0 / (7.0 * kappa))
                )));
            }
            let epsilon = 7.0 * kappa * delta;
            let r1 = n as f64 * epsilon.sqrt();
            let h_oracle = height_objective(k_oracle.clone(), p.to_vec(), epsilon)?;
            let sub_result = quantum_subgradient(
                &h_oracle,
                epsilon,
                3.0 * kappa,
                &vec![0.0; n],
                r1,
                rng,
            )?;
            let margin =
                (30_000.0 * big_r + 25.0) * (n as f64).powi(3) * epsilon.powf(1.0 / 6.0)
                    * kappa
                    * kappa
                    / rho;
            Ok(cut_from_gradient(&sub_result.gradient, &radial, p, margin))
        }
        SubgradientMethod::FiniteDifference { step, height_precision, jitter } => {
            let h_oracle = height_objective(k_oracle.clone(), p.to_vec(), height_precision)?;
            let lip = 3.0 * kappa;
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-jitter..=jitter)).collect();
            let mut grad = finite_difference_gradient(&h_oracle, &y, step)?;
            // h_p is exactly linear along p̂ (shifting the start along the
            // ray shifts the exit by the same amount), so the p̂-component
            // of any subgradient is exactly 1; pin it.
            let dir = normalize(&radial).expect("p distinct from center");
            let along = dot(&grad, &dir);
            for (g, d) in grad.iter_mut().zip(&dir) {
                *g += (1.0 - along) * d;
            }
            let slack = 2.0 * height_precision / step
                + 2.0 * lip * step * n as f64
                + 4.0 * n as f64 * (jitter + step) * lip;
            Ok(cut_from_gradient(&grad, &radial, p, slack))
        }
    }
}

fn cut_from_gradient(
    gradient: &[f64],
    fallback_dir: &[f64],
    p: &[f64],
    margin: f64,
) -> SeparationAnswer {
    let norm = norm2(gradient);
    match normalize(gradient) {
        Some(unit) => SeparationAnswer::Cut(Halfspace::new(unit, p.to_vec(), margin / norm)),
        // Degenerate estimate; counted against the failure budget.
        None => SeparationAnswer::Cut(Halfspace::new(
            normalize(fallback_dir).expect("p distinct from center"),
            p.to_vec(),
            margin,
        )),
    }
}

/// A separation procedure the optimization driver can query.
pub trait Separator {
    fn dim(&self) -> usize;
    /// Interior-ball geometry (center, r, R) of the body being separated.
    fn geometry(&self) -> (Vec<f64>, f64, f64);
    fn separate(&mut self, p: &[f64]) -> Result<SeparationAnswer>;
    /// (membership, evaluation) queries consumed so far.
    fn query_counts(&self) -> (u64, u64);
}

/// Height-function separation oracle over a counted membership oracle.
pub struct HeightSeparator {
    k_oracle: Arc<CountedOracle>,
    f_oracle: Option<Arc<CountedOracle>>,
    method: SubgradientMethod,
    rho: f64,
    rng: ChaCha8Rng,
}

impl HeightSeparator {
    pub fn new(
        k_oracle: Arc<CountedOracle>,
        method: SubgradientMethod,
        rho: f64,
        seed: u64,
    ) -> Self {
        Self { k_oracle, f_oracle: None, method, rho, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Defaults that keep the finite-difference cut slack well under
    /// `epsilon` at the body's scale: the displacement slack `12nκ(jitter)`
    /// lands near ε/16 and the height-precision share near ε/100.
    pub fn fd_defaults(body: &ConvexBody, epsilon: f64) -> SubgradientMethod {
        let n = body.dim() as f64;
        let kappa = body.kappa();
        let scale = body.inner_radius().min(1.0);
        let eps = epsilon.min(1.0);
        let jitter = (eps * scale / (192.0 * n * kappa)).max(1e-12);
        let step = jitter / 64.0;
        SubgradientMethod::FiniteDifference {
            step,
            height_precision: (step * eps / 200.0).max(1e-14),
            jitter,
        }
    }

    /// Also report the evaluation queries of an underlying objective oracle
    /// (used when separating an epigraph lift).
    pub fn with_evaluation_counter(mut self, f_oracle: Arc<CountedOracle>) -> Self {
        self.f_oracle = Some(f_oracle);
        self
    }
}

impl Separator for HeightSeparator {
    fn dim(&self) -> usize {
        self.k_oracle.body().map(|b| b.dim()).unwrap_or(0)
    }

    fn geometry(&self) -> (Vec<f64>, f64, f64) {
        let body = self.k_oracle.body().expect("membership oracle");
        (body.center().to_vec(), body.inner_radius(), body.outer_radius())
    }

    fn separate(&mut self, p: &[f64]) -> Result<SeparationAnswer> {
        separating_halfspace_with(&self.k_oracle, p, self.rho, self.method, &mut self.rng)
    }

    fn query_counts(&self) -> (u64, u64) {
        let evals = self.f_oracle.as_ref().map(|f| f.query_count()).unwrap_or(0);
        (self.k_oracle.query_count(), evals)
    }
}

/// Report of one optimization run.
#[derive(Clone, Debug)]
pub struct OptimizeReport {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: u64,
    pub separation_queries: u64,
    pub membership_queries: u64,
    pub evaluation_queries: u64,
    pub converged: bool,
    /// Localization-set volume proxy (log-det) never increased.
    pub monotone_volume: bool,
}

/// Ellipsoid `{x | (x−z)ᵀ A⁻¹ (x−z) ≤ 1}` with dense symmetric `A`.
struct Ellipsoid {
    dim: usize,
    center: Vec<f64>,
    a: Vec<f64>,
}

impl Ellipsoid {
    fn ball(center: Vec<f64>, radius: f64) -> Self {
        let dim = center.len();
        let mut a = vec![0.0; dim * dim];
        for i in 0..dim {
            a[i * dim + i] = radius * radius;
        }
        Self { dim, center, a }
    }

    fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            out[i] = dot(&self.a[i * self.dim..(i + 1) * self.dim], v);
        }
        out
    }

    /// √(gᵀ A g): half-width of the ellipsoid along direction g.
    fn half_width(&self, g: &[f64]) -> f64 {
        dot(g, &self.mat_vec(g)).max(0.0).sqrt()
    }

    /// log det(A), the volume proxy.
    fn log_det(&self) -> f64 {
        // Cholesky of the symmetric PSD matrix.
        let n = self.dim;
        let mut l = self.a.clone();
        let mut acc = 0.0;
        for j in 0..n {
            let mut d = l[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d <= 0.0 {
                return f64::NEG_INFINITY;
            }
            let dj = d.sqrt();
            acc += 2.0 * dj.ln();
            l[j * n + j] = dj;
            for i in (j + 1)..n {
                let mut v = l[i * n + j];
                for k in 0..j {
                    v -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = v / dj;
            }
        }
        acc
    }

    /// Shallow/central cut keeping `{x | ⟨g, x⟩ ≤ ⟨g, center⟩ + offset}`
    /// with `offset ≥ 0` (0 = central). Offsets beyond the valid shallow-cut
    /// range are truncated to it, so an oversized margin degrades into slow
    /// progress at the margin's resolution instead of stalling the driver.
    /// Returns false only when the ellipsoid has degenerated.
    fn cut(&mut self, g: &[f64], offset: f64) -> bool {
        let gag = self.half_width(g);
        if gag <= 1e-150 {
            return false;
        }
        let n = self.dim as f64;
        // α ∈ (−0.9/n, 0] parameterizes how far past the center the kept
        // halfspace reaches (α > −1/n keeps the update well defined).
        let alpha = -(offset / gag).min(0.9 / n);
        let b = scale(&self.mat_vec(g), 1.0 / gag);
        if self.dim == 1 {
            let radius = self.a[0].sqrt();
            let keep_hi = self.center[0] * g[0].signum() + offset.min(radius);
            let keep_lo = self.center[0] * g[0].signum() - radius;
            let new_r = 0.5 * (keep_hi - keep_lo);
            self.center[0] = (0.5 * (keep_hi + keep_lo)) * g[0].signum();
            self.a[0] = new_r * new_r;
            return true;
        }
        let tau = (1.0 + n * alpha) / (n + 1.0);
        let sigma = 2.0 * tau / (1.0 + alpha);
        let dilation = n * n / (n * n - 1.0) * (1.0 - alpha * alpha);
        for i in 0..self.dim {
            self.center[i] -= tau * b[i];
        }
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.a[i * self.dim + j] =
                    dilation * (self.a[i * self.dim + j] - sigma * b[i] * b[j]);
            }
        }
        // Re-symmetrize against float drift.
        for i in 0..self.dim {
            for j in 0..i {
                let m = 0.5 * (self.a[i * self.dim + j] + self.a[j * self.dim + i]);
                self.a[i * self.dim + j] = m;
                self.a[j * self.dim + i] = m;
            }
        }
        true
    }
}

/// Minimize `⟨c, x⟩` over the body behind `separator` to additive error
/// `epsilon·‖c‖` by the ellipsoid method. Returns the best near-feasible
/// point found; `NoConvergence` carries the best-so-far report.
pub fn optimize_linear<S: Separator>(
    separator: &mut S,
    c: &[f64],
    epsilon: f64,
) -> Result<OptimizeReport> {
    let (center, r, big_r) = separator.geometry();
    let dim = separator.dim();
    if c.len() != dim {
        return Err(Error::ParamError("objective dimension mismatch".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::ParamError("epsilon must be positive".into()));
    }
    let c_norm = norm2(c);
    if c_norm <= 0.0 {
        return Err(Error::ParamError("objective direction must be nonzero".into()));
    }
    let (mem0, eval0) = separator.query_counts();
    let mut ellipsoid = Ellipsoid::ball(center, big_r * 1.0000001);
    let nf = (dim + 1) as f64;
    let cap = (4.0 * nf * nf * ((big_r / (r.min(1.0) * epsilon.min(1.0))).ln() + 8.0)).ceil()
        as u64;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut monotone = true;
    let mut last_log_det = ellipsoid.log_det();
    let mut iterations = 0u64;
    let mut separation_queries = 0u64;
    let mut converged = false;

    while iterations < cap {
        iterations += 1;
        let z = ellipsoid.center.clone();
        separation_queries += 1;
        let (cut_dir, offset) = match separator.separate(&z)? {
            SeparationAnswer::Inside => {
                let val = dot(c, &z);
                if best.as_ref().map_or(true, |(_, v)| val < *v) {
                    best = Some((z.clone(), val));
                }
                (c.to_vec(), 0.0)
            }
            SeparationAnswer::Cut(h) => (h.normal, h.margin),
        };
        // Certified lower bound over the current localization set.
        if let Some((_, val)) = &best {
            let lower = dot(c, &ellipsoid.center) - ellipsoid.half_width(c);
            if val - lower <= epsilon * c_norm {
                converged = true;
                break;
            }
        }
        if !ellipsoid.cut(&cut_dir, offset) {
            break;
        }
        let ld = ellipsoid.log_det();
        if ld > last_log_det + 1e-9 {
            monotone = false;
        }
        last_log_det = ld;
    }

    let (mem1, eval1) = separator.query_counts();
    let report = |x: Vec<f64>, value: f64, converged: bool| OptimizeReport {
        x,
        value,
        iterations,
        separation_queries,
        membership_queries: mem1 - mem0,
        evaluation_queries: eval1 - eval0,
        converged,
        monotone_volume: monotone,
    };
    match best {
        Some((x, value)) if converged => Ok(report(x, value, true)),
        Some((x, value)) => Err(Error::NoConvergence(Box::new(report(x, value, false)))),
        None => Err(Error::NoConvergence(Box::new(report(
            ellipsoid.center.clone(),
            dot(c, &ellipsoid.center),
            false,
        )))),
    }
}

/// How `minimize_convex` computes its height subgradients.
#[derive(Clone, Copy, Debug)]
pub enum DriverMode {
    /// Classical finite differences (default; bounded runtime).
    FiniteDifference,
    /// Quantum subgradient inside the separation oracle.
    Quantum { delta: f64, rho: f64 },
}

/// Minimize a convex `f` over `K` to additive error `epsilon` via the
/// epigraph lift `K' = {(x', x) | f(x) ≤ x' ≤ M}` and a linear optimization
/// in the first coordinate. Every membership test of `K'` consumes exactly
/// one membership query to `K` and one evaluation query to `f`.
pub fn minimize_convex(
    k_oracle: Arc<CountedOracle>,
    f_oracle: Arc<CountedOracle>,
    epsilon: f64,
    seed: u64,
    mode: DriverMode,
) -> Result<OptimizeReport> {
    let body = k_oracle
        .body()
        .ok_or_else(|| Error::ParamError("minimize_convex needs a membership oracle".into()))?;
    let obj = f_oracle
        .objective()
        .ok_or_else(|| Error::ParamError("minimize_convex needs an evaluation oracle".into()))?
        .clone();
    let declared_upper = obj.upper_bound();
    let upper = if declared_upper.is_finite() {
        declared_upper
    } else {
        obj.eval_exact(body.center()) + obj.lipschitz() * body.outer_radius()
    };
    let lifted = crate::oracles::lift_epigraph(k_oracle.clone(), f_oracle.clone(), upper)?;
    let lifted_oracle = CountedOracle::membership(Arc::new(lifted), 0.0);
    let lifted_body = lifted_oracle.body().unwrap().clone();

    let method = match mode {
        DriverMode::FiniteDifference => {
            HeightSeparator::fd_defaults(&lifted_body, epsilon)
        }
        DriverMode::Quantum { delta, rho } => SubgradientMethod::Quantum { delta, rho },
    };
    let mut separator = HeightSeparator::new(lifted_oracle, method, 0.1, seed)
        .with_evaluation_counter(f_oracle.clone());
    let mut c = vec![0.0; body.dim() + 1];
    c[0] = 1.0;

    let finish = |mut rep: OptimizeReport| -> Result<OptimizeReport> {
        let x = rep.x[1..].to_vec();
        let value = f_oracle.query_evaluation(&x)?;
        rep.evaluation_queries += 1;
        rep.x = x;
        rep.value = value;
        Ok(rep)
    };
    match optimize_linear(&mut separator, &c, 0.5 * epsilon) {
        Ok(rep) => finish(rep),
        Err(Error::NoConvergence(rep)) => Err(Error::NoConvergence(Box::new(finish(*rep)?))),
        Err(e) => Err(e),
    }
}
