//! Convex bodies, objective functions, and the precision-respecting,
//! query-counted oracle layer every other module consumes.
//!
//! Bodies carry an interior ball `B2(center, r) ⊆ K ⊆ B2(center, R)`.
//! Families shipped with the crate expose an exact signed distance so the
//! membership oracle can honor the δ-shell semantics deterministically.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::vecmath::{all_finite, norm2, sub};

/// Boundary classification tolerance for exact (δ = 0) geometry.
pub const BOUNDARY_TOL: f64 = 1e-9;

type Predicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
type Distance = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type Eval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type Gradient = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A convex body `K` with a known interior ball and outer ball:
/// `B2(center, inner_radius) ⊆ K ⊆ B2(center, outer_radius)`.
#[derive(Clone)]
pub struct ConvexBody {
    dim: usize,
    inner_radius: f64,
    outer_radius: f64,
    center: Vec<f64>,
    contains: Predicate,
    /// Signed distance to the boundary (negative inside), when the family
    /// admits an exact formula. Drives the δ-shell semantics.
    signed_distance: Option<Distance>,
}

impl ConvexBody {
    pub fn new(
        dim: usize,
        inner_radius: f64,
        outer_radius: f64,
        center: Vec<f64>,
        contains: Predicate,
        signed_distance: Option<Distance>,
    ) -> Self {
        assert!(inner_radius > 0.0 && outer_radius >= inner_radius);
        assert_eq!(center.len(), dim);
        Self { dim, inner_radius, outer_radius, center, contains, signed_distance }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    /// Condition number κ = R/r.
    pub fn kappa(&self) -> f64 {
        self.outer_radius / self.inner_radius
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Exact membership (δ = 0 geometry, boundary tolerance included).
    pub fn contains(&self, x: &[f64]) -> bool {
        (self.contains)(x)
    }

    pub fn signed_distance(&self, x: &[f64]) -> Option<f64> {
        self.signed_distance.as_ref().map(|f| f(x))
    }

    /// Euclidean ball of radius `radius` centered at the origin.
    pub fn ball(dim: usize, radius: f64) -> Self {
        Self::ball_at(vec![0.0; dim], radius)
    }

    pub fn ball_at(center: Vec<f64>, radius: f64) -> Self {
        let dim = center.len();
        let c = center.clone();
        let sd = move |x: &[f64]| norm2(&sub(x, &c)) - radius;
        let sd = Arc::new(sd) as Distance;
        let sd2 = sd.clone();
        Self::new(
            dim,
            radius,
            radius,
            center,
            Arc::new(move |x| sd2(x) <= BOUNDARY_TOL),
            Some(sd),
        )
    }

    /// Axis-aligned box `×_i [lo_i, hi_i]`.
    pub fn axis_box(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        let dim = lo.len();
        let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let inner = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| 0.5 * (b - a))
            .fold(f64::INFINITY, f64::min);
        let outer = norm2(&lo.iter().zip(&hi).map(|(a, b)| 0.5 * (b - a)).collect::<Vec<_>>());
        let sd = Arc::new(box_signed_distance(lo, hi)) as Distance;
        let sd2 = sd.clone();
        Self::new(
            dim,
            inner,
            outer,
            center,
            Arc::new(move |x| sd2(x) <= BOUNDARY_TOL),
            Some(sd),
        )
    }

    /// The shifted hypercube `C_s = ×_i [s_i − 2, s_i + 1]` of the
    /// sum-of-coordinates instance. Contains `B2(0, 1)` for any bit string.
    pub fn sum_coords_box(s: &[bool]) -> Self {
        let lo: Vec<f64> = s.iter().map(|&b| if b { -1.0 } else { -2.0 }).collect();
        let hi: Vec<f64> = s.iter().map(|&b| if b { 2.0 } else { 1.0 }).collect();
        Self::axis_box(lo, hi)
    }

    /// Product body `C_s × [0,1]^n` of the combined lower-bound instance.
    pub fn combined_box(s: &[bool]) -> Self {
        let n = s.len();
        let mut lo: Vec<f64> = s.iter().map(|&b| if b { -1.0 } else { -2.0 }).collect();
        let mut hi: Vec<f64> = s.iter().map(|&b| if b { 2.0 } else { 1.0 }).collect();
        lo.extend(std::iter::repeat(0.0).take(n));
        hi.extend(std::iter::repeat(1.0).take(n));
        Self::axis_box(lo, hi)
    }
}

fn box_signed_distance(lo: Vec<f64>, hi: Vec<f64>) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| {
        let mut out_sq = 0.0;
        let mut inside_depth = f64::INFINITY;
        for i in 0..lo.len() {
            let below = lo[i] - x[i];
            let above = x[i] - hi[i];
            let out = below.max(above).max(0.0);
            out_sq += out * out;
            inside_depth = inside_depth.min((x[i] - lo[i]).min(hi[i] - x[i]));
        }
        if out_sq > 0.0 {
            out_sq.sqrt()
        } else {
            -inside_depth
        }
    }
}

/// The smoothed hypercube `SC_{x0,l}`: the `l/(2n+1)`-ball expansion of the
/// inner box `×_i [x0_i − 2n/(2n+1)·l, x0_i − l/(2n+1)]`. Satisfies the
/// containment chain between the shrunken and the original hypercube.
pub fn smoothed_hypercube(x0: &[f64], l: f64) -> ConvexBody {
    assert!(l > 0.0, "grid size l must be positive");
    let n = x0.len();
    let m = (2 * n + 1) as f64;
    let radius = l / m;
    let lo: Vec<f64> = x0.iter().map(|c| c - l * (2.0 * n as f64) / m).collect();
    let hi: Vec<f64> = x0.iter().map(|c| c - l / m).collect();
    let center: Vec<f64> = x0.iter().map(|c| c - 0.5 * l).collect();
    // Tight inner/outer radii around the box center.
    let half_width = l * (2.0 * n as f64 - 1.0) / (2.0 * m);
    let inner = 0.5 * l;
    let outer = (n as f64).sqrt() * half_width + radius;
    let box_sd = box_signed_distance(lo, hi);
    let sd = Arc::new(move |x: &[f64]| box_sd(x) - radius) as Distance;
    let sd2 = sd.clone();
    ConvexBody::new(
        n,
        inner,
        outer,
        center,
        Arc::new(move |x| sd2(x) <= BOUNDARY_TOL),
        Some(sd),
    )
}

/// A convex objective with declared Lipschitz constant (in the `L∞` sense)
/// and value bounds `m ≤ f ≤ M` on its domain.
#[derive(Clone)]
pub struct ObjectiveFunction {
    dim: usize,
    lipschitz: f64,
    lower: f64,
    upper: f64,
    eval: Eval,
    /// Analytic gradient, for diagnostics only.
    gradient: Option<Gradient>,
    /// Optional declared box domain; `None` means all of R^n.
    domain: Option<(Vec<f64>, Vec<f64>)>,
}

impl ObjectiveFunction {
    pub fn new(
        dim: usize,
        lipschitz: f64,
        lower: f64,
        upper: f64,
        eval: Eval,
        gradient: Option<Gradient>,
    ) -> Self {
        assert!(lipschitz > 0.0 && upper >= lower);
        Self { dim, lipschitz, lower, upper, eval, gradient, domain: None }
    }

    pub fn with_domain(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.domain = Some((lo, hi));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower
    }

    pub fn upper_bound(&self) -> f64 {
        self.upper
    }

    /// Exact value, bypassing noise and counting. Test and setup plumbing.
    pub fn eval_exact(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn analytic_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.gradient.as_ref().map(|g| g(x))
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        match &self.domain {
            None => true,
            Some((lo, hi)) => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| *v >= a - BOUNDARY_TOL && *v <= b + BOUNDARY_TOL),
        }
    }

    /// Linear objective `f(x) = g · x`.
    pub fn linear(g: Vec<f64>) -> Self {
        let dim = g.len();
        let lip = crate::vecmath::norm_inf(&g).max(1e-12);
        let g2 = g.clone();
        let g3 = g.clone();
        Self::new(
            dim,
            lip,
            f64::NEG_INFINITY,
            f64::INFINITY,
            Arc::new(move |x| crate::vecmath::dot(&g2, x)),
            Some(Arc::new(move |_| g3.clone())),
        )
    }

    /// Diagonal quadratic `f(x) = ½ Σ h_i x_i² + g · x`; smoothness is
    /// `max_i |h_i|`.
    pub fn quadratic_diag(h: Vec<f64>, g: Vec<f64>, lipschitz: f64) -> Self {
        assert_eq!(h.len(), g.len());
        let dim = h.len();
        let (h2, g2) = (h.clone(), g.clone());
        let (h3, g3) = (h, g);
        Self::new(
            dim,
            lipschitz,
            f64::NEG_INFINITY,
            f64::INFINITY,
            Arc::new(move |x: &[f64]| {
                x.iter()
                    .enumerate()
                    .map(|(i, v)| 0.5 * h2[i] * v * v + g2[i] * v)
                    .sum()
            }),
            Some(Arc::new(move |x: &[f64]| {
                x.iter().enumerate().map(|(i, v)| h3[i] * v + g3[i]).collect()
            })),
        )
    }

    /// `f(x) = Σ_i x_i`, the sum-of-coordinates objective.
    pub fn sum_coords(dim: usize) -> Self {
        let mut f = Self::linear(vec![1.0; dim]);
        f.lower = -2.0 * dim as f64;
        f.upper = 2.0 * dim as f64;
        f
    }

    /// `f(x) = Σ_i |x_i|`, the canonical non-smooth test function.
    pub fn abs_sum(dim: usize) -> Self {
        Self::new(
            dim,
            1.0,
            0.0,
            f64::INFINITY,
            Arc::new(|x: &[f64]| x.iter().map(|v| v.abs()).sum()),
            None,
        )
    }

    /// The max-norm objective `f_c(x) = max_i |π(x_i) − c_i| + Σ_i |π(x_i) − x_i|`
    /// with hidden bit string `c`; 2-Lipschitz, convex, unique minimum at `x = c`.
    pub fn max_norm(c: &[bool]) -> Self {
        let dim = c.len();
        let cf: Vec<f64> = c.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Self::new(
            dim,
            2.0,
            0.0,
            f64::INFINITY,
            Arc::new(move |x: &[f64]| max_norm_value(&cf, x)),
            None,
        )
    }

    /// Combined instance objective on dimension `2n`:
    /// `f(x) = Σ_{i<n} x_i + max_i |x_{n+i} − c_i|` (on `C_s × [0,1]^n`).
    pub fn combined(c: &[bool]) -> Self {
        let n = c.len();
        let cf: Vec<f64> = c.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Self::new(
            2 * n,
            2.0,
            -2.0 * n as f64,
            f64::INFINITY,
            Arc::new(move |x: &[f64]| {
                let sum: f64 = x[..n].iter().sum();
                sum + max_norm_value(&cf, &x[n..])
            }),
            None,
        )
    }
}

pub(crate) fn projection_unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

pub(crate) fn max_norm_value(c: &[f64], x: &[f64]) -> f64 {
    let mut best = 0.0f64;
    let mut penalty = 0.0;
    for i in 0..c.len() {
        let p = projection_unit(x[i]);
        best = best.max((p - c[i]).abs());
        penalty += (p - x[i]).abs();
    }
    best + penalty
}

/// A halfspace `{x : ⟨normal, x − anchor⟩ ≤ margin}` with unit normal,
/// reported by separation routines. The margin is the error term of the
/// emitting procedure, not a validity proof.
#[derive(Clone, Debug)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub anchor: Vec<f64>,
    pub margin: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, anchor: Vec<f64>, margin: f64) -> Self {
        debug_assert!((norm2(&normal) - 1.0).abs() <= 1e-12, "normal must be unit");
        debug_assert!(margin >= 0.0);
        Self { normal, anchor, margin }
    }

    /// Signed excess `⟨normal, x − anchor⟩ − margin`; positive means `x` is
    /// cut off.
    pub fn excess(&self, x: &[f64]) -> f64 {
        crate::vecmath::dot(&self.normal, &sub(x, &self.anchor)) - self.margin
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.excess(x) <= 0.0
    }
}

/// What an oracle wraps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    Membership,
    Evaluation,
}

/// Deterministic corruption applied within the precision budget δ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoisePolicy {
    Exact,
    RoundToGrid(f64),
    AdditiveDeterministic(f64),
}

/// Behavior inside the ambiguous membership shell (within δ of the boundary).
/// Both choices are legal under the oracle contract.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShellPolicy {
    ExactAnswer,
    Flip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    In,
    Out,
}

enum Target {
    Body(Arc<ConvexBody>),
    Objective(Arc<ObjectiveFunction>),
}

/// A membership or evaluation oracle that enforces precision semantics and
/// counts queries. The counter is atomic so oracles may be shared across
/// threads; everything else is immutable after construction.
pub struct CountedOracle {
    kind: OracleKind,
    precision: f64,
    noise: NoisePolicy,
    shell: ShellPolicy,
    target: Target,
    count: AtomicU64,
}

impl CountedOracle {
    pub fn membership(body: Arc<ConvexBody>, precision: f64) -> Arc<Self> {
        Self::membership_with(body, precision, ShellPolicy::ExactAnswer)
    }

    pub fn membership_with(
        body: Arc<ConvexBody>,
        precision: f64,
        shell: ShellPolicy,
    ) -> Arc<Self> {
        assert!(precision >= 0.0);
        Arc::new(Self {
            kind: OracleKind::Membership,
            precision,
            noise: NoisePolicy::Exact,
            shell,
            target: Target::Body(body),
            count: AtomicU64::new(0),
        })
    }

    pub fn evaluation(obj: Arc<ObjectiveFunction>, precision: f64) -> Arc<Self> {
        Self::evaluation_with(obj, precision, NoisePolicy::Exact)
            .expect("exact policy always fits the budget")
    }

    pub fn evaluation_with(
        obj: Arc<ObjectiveFunction>,
        precision: f64,
        noise: NoisePolicy,
    ) -> Result<Arc<Self>> {
        if precision < 0.0 {
            return Err(Error::ParamError("precision must be nonnegative".into()));
        }
        match noise {
            NoisePolicy::Exact => {}
            NoisePolicy::RoundToGrid(step) => {
                if !(step > 0.0) || step / 2.0 > precision {
                    return Err(Error::ParamError(format!(
                        "rounding step {step} overshoots precision {precision}"
                    )));
                }
            }
            NoisePolicy::AdditiveDeterministic(off) => {
                if off.abs() > precision {
                    return Err(Error::ParamError(format!(
                        "offset {off} exceeds precision {precision}"
                    )));
                }
            }
        }
        Ok(Arc::new(Self {
            kind: OracleKind::Evaluation,
            precision,
            noise,
            shell: ShellPolicy::ExactAnswer,
            target: Target::Objective(obj),
            count: AtomicU64::new(0),
        }))
    }

    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }

    /// Total queries answered so far. Never decreases.
    pub fn query_count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn body(&self) -> Option<&Arc<ConvexBody>> {
        match &self.target {
            Target::Body(b) => Some(b),
            _ => None,
        }
    }

    pub fn objective(&self) -> Option<&Arc<ObjectiveFunction>> {
        match &self.target {
            Target::Objective(f) => Some(f),
            _ => None,
        }
    }

    /// Answer a membership query under the δ-shell contract: assert
    /// `x ∈ B2(K, δ)` or `x ∉ B2(K, −δ)`. Outside the shell the answer is
    /// exact; inside it the shell policy decides.
    pub fn query_membership(&self, x: &[f64]) -> Result<Membership> {
        if self.kind != OracleKind::Membership {
            return Err(Error::ParamError("not a membership oracle".into()));
        }
        let body = self.body().expect("membership oracle wraps a body");
        if x.len() != body.dim() || !all_finite(x) {
            return Err(Error::InvalidPoint);
        }
        self.count.fetch_add(1, Ordering::Relaxed);
        let exact = body.contains(x);
        let ambiguous = self.precision > 0.0
            && matches!(body.signed_distance(x), Some(sd) if sd.abs() <= self.precision);
        let answer = match (ambiguous, self.shell) {
            (true, ShellPolicy::Flip) => !exact,
            _ => exact,
        };
        Ok(if answer { Membership::In } else { Membership::Out })
    }

    /// Answer an evaluation query: a value α with `|α − f(x)| ≤ δ`.
    pub fn query_evaluation(&self, x: &[f64]) -> Result<f64> {
        if self.kind != OracleKind::Evaluation {
            return Err(Error::ParamError("not an evaluation oracle".into()));
        }
        let obj = self.objective().expect("evaluation oracle wraps an objective");
        if x.len() != obj.dim() || !all_finite(x) {
            return Err(Error::InvalidPoint);
        }
        if !obj.in_domain(x) {
            return Err(Error::DomainError);
        }
        self.count.fetch_add(1, Ordering::Relaxed);
        let exact = obj.eval_exact(x);
        Ok(match self.noise {
            NoisePolicy::Exact => exact,
            NoisePolicy::RoundToGrid(step) => (exact / step).round() * step,
            NoisePolicy::AdditiveDeterministic(off) => exact + off,
        })
    }
}

/// Lift `min_{x∈K} f(x)` to the epigraph body
/// `K' = {(x', x) ∈ R × K | f(x) ≤ x' ≤ M}` in dimension `n+1`.
///
/// The returned body's membership test makes exactly one membership query to
/// `K` and one evaluation query to `f`, unconditionally, so query accounting
/// of downstream drivers is deterministic. Interior-ball data for `K'` is
/// derived from the declared bounds plus one construction-time exact
/// evaluation at the center of `K` (instance geometry, not an oracle query).
pub fn lift_epigraph(
    k_oracle: Arc<CountedOracle>,
    f_oracle: Arc<CountedOracle>,
    upper: f64,
) -> Result<ConvexBody> {
    let body = k_oracle
        .body()
        .ok_or_else(|| Error::ParamError("lift needs a membership oracle".into()))?
        .clone();
    let obj = f_oracle
        .objective()
        .ok_or_else(|| Error::ParamError("lift needs an evaluation oracle".into()))?
        .clone();
    if body.dim() != obj.dim() {
        return Err(Error::ParamError("body and objective dimension mismatch".into()));
    }
    if upper < obj.lower_bound() {
        return Err(Error::ParamError("M below the objective's lower bound".into()));
    }
    let n = body.dim();
    let f_center = obj.eval_exact(body.center());
    let room = upper - f_center;
    if room <= 0.0 {
        return Err(Error::ParamError("M leaves no epigraph slack above f(center)".into()));
    }
    let lip = obj.lipschitz();
    let r = 0.99 * body.inner_radius().min(room / (2.0 * (lip + 1.0)));
    let t0 = f_center + (lip + 1.0) * r;
    let lower = obj.lower_bound().max(f_center - lip * body.outer_radius() - room);
    let spread = (upper - t0).max(t0 - lower);
    let outer = (body.outer_radius().powi(2) + spread * spread).sqrt();
    let mut center = Vec::with_capacity(n + 1);
    center.push(t0);
    center.extend_from_slice(body.center());

    let contains = move |p: &[f64]| {
        let (height, x) = (p[0], &p[1..]);
        // Both queries always fire; no short-circuit.
        let in_k = matches!(k_oracle.query_membership(x), Ok(Membership::In));
        let val = f_oracle.query_evaluation(x);
        let below = match val {
            Ok(v) => v <= height + BOUNDARY_TOL,
            Err(_) => false,
        };
        in_k && below && height <= upper + BOUNDARY_TOL
    };

    Ok(ConvexBody::new(n + 1, r, outer, center, Arc::new(contains), None))
}
