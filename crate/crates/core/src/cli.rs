//! Experiment harness: seeded, reproducible runs of every pipeline stage
//! with CSV output. Identical configurations produce byte-identical files;
//! trials may run in parallel and rows are sorted before writing.

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{build_instance, load_config, InstanceSpec};
use crate::error::{Error, Result};
use crate::lowerbound::{
    all_bitstrings, discretized_eval, max_norm_eval, solve_max_norm_via_wildcards,
    sum_coords_membership, WildcardInstance,
};
use crate::oracles::{ConvexBody, CountedOracle, NoisePolicy, ObjectiveFunction};
use crate::qgrad::{derive_grad_params, gradient_estimate};
use crate::reductions::{minimize_convex, DriverMode, OptimizeReport};
use crate::subgrad::{
    finite_difference_gradient, quantum_subgradient, subgradient_certificate_check,
};

#[derive(Parser)]
#[command(
    name = "qconvex",
    version,
    about = "Seeded experiments for oracle-based convex optimization: QFT gradient \
             estimation, randomized subgradients, membership-to-optimization \
             reductions, and wildcard lower-bound instances"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the QFT gradient estimator on a linear or quadratic objective.
    Gradest(GradestArgs),
    /// Run the randomized subgradient with certificate checks and the
    /// finite-difference baseline.
    Subgrad(SubgradArgs),
    /// Minimize a convex objective over a registered body end to end.
    Optimize(OptimizeArgs),
    /// Lower-bound testbed: wildcard reductions, discretization sweeps,
    /// combined-instance recovery.
    Lowerbound(LowerboundArgs),
    /// Single-shot discretized evaluations with their traces.
    Discretize(DiscretizeArgs),
}

#[derive(Args, Clone)]
pub struct CommonArgs {
    /// Base RNG seed; trial t uses seed + t.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of seeded trials.
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
pub struct GradestArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Objective family: "linear" (grid-aligned) or "quadratic".
    #[arg(long, default_value = "quadratic")]
    objective: String,
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Lipschitz bound L.
    #[arg(long, default_value_t = 1.0)]
    lipschitz: f64,
    /// Smoothness bound β.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Evaluation-oracle error ε.
    #[arg(long)]
    eps: f64,
}

#[derive(Args, Clone)]
pub struct SubgradArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Objective family: "abs_sum" or "quadratic".
    #[arg(long, default_value = "abs_sum")]
    objective: String,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    lipschitz: f64,
    #[arg(long)]
    eps: f64,
    /// Approximation scale r1.
    #[arg(long)]
    r1: f64,
    /// Certificate q-grid size.
    #[arg(long, default_value_t = 1000)]
    q_grid: usize,
}

#[derive(Args, Clone)]
pub struct OptimizeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// TOML config with an [instance] table.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance family when no config file is given.
    #[arg(long)]
    family: Option<String>,
    /// Hidden bit strings / parameters for flag-driven instances.
    #[arg(long, value_delimiter = ',')]
    s: Option<Vec<u8>>,
    #[arg(long, value_delimiter = ',')]
    c: Option<Vec<u8>>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    /// Target accuracy ε.
    #[arg(long, default_value_t = 1e-2)]
    eps: f64,
    /// Height-subgradient method: "fd" or "quantum".
    #[arg(long, default_value = "fd")]
    method: String,
    /// Membership precision δ for the quantum method.
    #[arg(long, default_value_t = 1e-22)]
    delta: f64,
    /// Failure-probability budget ρ for the quantum method.
    #[arg(long, default_value_t = 0.2)]
    rho: f64,
}

#[derive(Args, Clone)]
pub struct LowerboundArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Accuracy for the combined-instance recovery runs.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    eps: f64,
}

#[derive(Args, Clone)]
pub struct DiscretizeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Hidden string c as comma-separated bits (random per trial if absent).
    #[arg(long, value_delimiter = ',')]
    c: Option<Vec<u8>>,
    /// Oracle noise magnitude (≤ 1/(5n)).
    #[arg(long)]
    noise: Option<f64>,
}

/// Render a CSV: a `#` comment with the config echo and artifact version,
/// one header row, then data rows.
fn render_csv(meta: &str, columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = format!("# qconvex v{} | {meta}\n", crate::VERSION);
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn bits_to_str(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn parse_bits(raw: &[u8]) -> Result<Vec<bool>> {
    raw.iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(Error::ParamError(format!("bit {v} not in {{0,1}}"))),
        })
        .collect()
}

/// Grid-aligned linear coefficients for exact recovery at the derived N.
fn aligned_linear_coeffs(n: usize, lipschitz: f64, n_points: usize) -> Vec<f64> {
    let step = 2.0 * lipschitz / n_points as f64;
    (0..n)
        .map(|i| step * ((i as i64 + 1) - n_points as i64 / 4) as f64)
        .collect()
}

pub fn cmd_gradest(args: &GradestArgs) -> Result<String> {
    let n = args.n;
    let params = derive_grad_params(n, args.lipschitz, args.beta, args.eps)?;
    let (objective, true_grad): (ObjectiveFunction, Vec<f64>) = match args.objective.as_str() {
        "linear" => {
            let g = aligned_linear_coeffs(n, args.lipschitz, params.n_points);
            (ObjectiveFunction::linear(g.clone()), g)
        }
        "quadratic" => (
            ObjectiveFunction::quadratic_diag(vec![args.beta; n], vec![0.0; n], args.lipschitz),
            vec![0.0; n],
        ),
        other => {
            return Err(Error::ParamError(format!(
                "unknown gradest objective '{other}' (linear|quadratic)"
            )))
        }
    };
    let objective = Arc::new(objective);
    let threshold = 1500.0 * (n as f64 * args.eps * args.beta).sqrt();

    let trials: Vec<(u64, Vec<f64>)> = (0..args.common.trials)
        .into_par_iter()
        .map(|t| {
            let oracle = CountedOracle::evaluation(objective.clone(), 0.0);
            let mut rng = ChaCha8Rng::seed_from_u64(args.common.seed + t);
            let est = gradient_estimate(
                &oracle,
                args.eps,
                args.lipschitz,
                args.beta,
                &vec![0.0; n],
                &mut rng,
            )?;
            Ok((args.common.seed + t, est.gradient))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut failures = 0u64;
    let mut l1_total = 0.0;
    for (seed, grad) in &trials {
        let mut l1 = 0.0;
        for (i, (&g, &truth)) in grad.iter().zip(&true_grad).enumerate() {
            let err = (g - truth).abs();
            l1 += err;
            let flag = err > threshold;
            if flag {
                failures += 1;
            }
            rows.push(vec![
                seed.to_string(),
                i.to_string(),
                fmt(g),
                fmt(truth),
                fmt(err),
                (flag as u8).to_string(),
            ]);
        }
        l1_total += l1;
    }
    let coord_count = (args.common.trials as usize * n) as f64;
    let failure_rate = failures as f64 / coord_count;
    let mean_l1 = l1_total / args.common.trials as f64;
    let l1_ceiling = 3000.0 * (n as f64).powf(1.5) * (args.eps * args.beta).sqrt();
    rows.push(vec![
        "summary".into(),
        "-1".into(),
        fmt(failure_rate),
        fmt(1.0 / 3.0),
        fmt(mean_l1),
        fmt(l1_ceiling),
    ]);

    let meta = format!(
        "cmd=gradest objective={} n={} L={} beta={} eps={} N={} N0={} trials={} seed={} \
         threshold={}",
        args.objective,
        n,
        args.lipschitz,
        args.beta,
        args.eps,
        params.n_points,
        params.n_phase,
        args.common.trials,
        args.common.seed,
        threshold
    );
    Ok(render_csv(
        &meta,
        &["seed", "coordinate", "estimate", "true_gradient", "error", "exceeds_threshold"],
        &rows,
    ))
}

pub fn cmd_subgrad(args: &SubgradArgs) -> Result<String> {
    let n = args.n;
    let objective: Arc<ObjectiveFunction> = match args.objective.as_str() {
        "abs_sum" => Arc::new(ObjectiveFunction::abs_sum(n)),
        "quadratic" => Arc::new(ObjectiveFunction::quadratic_diag(
            vec![0.05; n],
            vec![0.0; n],
            args.lipschitz,
        )),
        other => {
            return Err(Error::ParamError(format!(
                "unknown subgrad objective '{other}' (abs_sum|quadratic)"
            )))
        }
    };
    let x0 = vec![0.0; n];
    let bound =
        5000.0 * args.lipschitz.max(1.0) * (n as f64).powf(5.0 / 3.0) * args.eps.powf(1.0 / 3.0)
            / args.r1.powf(1.0 / 3.0);

    // Deterministic q-grid for the certificate.
    let mut qrng = ChaCha8Rng::seed_from_u64(args.common.seed ^ 0x51_ac_ed);
    let q_samples: Vec<Vec<f64>> = (0..args.q_grid)
        .map(|_| {
            (0..n)
                .map(|_| rand::Rng::gen_range(&mut qrng, -1.0..1.0))
                .collect()
        })
        .collect();

    let per_trial: Vec<(u64, f64, u64, u64, u32, u64)> = (0..args.common.trials)
        .into_par_iter()
        .map(|t| {
            let oracle = CountedOracle::evaluation(objective.clone(), 0.0);
            let mut rng = ChaCha8Rng::seed_from_u64(args.common.seed + t);
            let out =
                quantum_subgradient(&oracle, args.eps, args.lipschitz, &x0, args.r1, &mut rng)?;
            let zeta = subgradient_certificate_check(
                &objective,
                &x0,
                &out.gradient,
                args.r1,
                args.lipschitz,
                &q_samples,
            )?;
            let fd_oracle = CountedOracle::evaluation(objective.clone(), 0.0);
            finite_difference_gradient(&fd_oracle, &x0, 1e-6)?;
            Ok((
                args.common.seed + t,
                zeta,
                out.logical_queries,
                out.raw_queries,
                out.rounds,
                fd_oracle.query_count(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut zeta_total = 0.0;
    for (seed, zeta, logical, raw, rounds, fd) in &per_trial {
        zeta_total += zeta;
        rows.push(vec![
            seed.to_string(),
            fmt(*zeta),
            logical.to_string(),
            raw.to_string(),
            rounds.to_string(),
            fd.to_string(),
        ]);
    }
    let mean = zeta_total / args.common.trials as f64;
    rows.push(vec![
        "summary".into(),
        fmt(mean),
        fmt(bound),
        String::new(),
        String::new(),
        (n + 1).to_string(),
    ]);

    let meta = format!(
        "cmd=subgrad objective={} n={} L={} eps={} r1={} q_grid={} trials={} seed={} \
         zeta_bound={}",
        args.objective, n, args.lipschitz, args.eps, args.r1, args.q_grid, args.common.trials,
        args.common.seed, bound
    );
    Ok(render_csv(
        &meta,
        &["seed", "zeta_hat", "logical_queries", "raw_queries", "rounds", "fd_queries"],
        &rows,
    ))
}

fn instance_from_args(args: &OptimizeArgs) -> Result<(Arc<ConvexBody>, Arc<ObjectiveFunction>, String)> {
    if let Some(path) = &args.config {
        let cfg = load_config(path)?;
        let spec = cfg
            .instance
            .ok_or_else(|| Error::Config("config missing [instance] table".into()))?;
        let echo = format!("config_family={}", spec.family);
        let (b, f) = build_instance(&spec)?;
        return Ok((b, f, echo));
    }
    let family = args
        .family
        .clone()
        .ok_or_else(|| Error::Config("need --config or --family".into()))?;
    let spec = InstanceSpec {
        family: family.clone(),
        dim: args.dim,
        radius: args.radius,
        s: args.s.clone(),
        c: args.c.clone(),
        ..Default::default()
    };
    let (b, f) = build_instance(&spec)?;
    Ok((b, f, format!("family={family}")))
}

fn optimize_rows(report: &OptimizeReport, seed: u64) -> Vec<String> {
    let xs = report
        .x
        .iter()
        .map(|v| fmt(*v))
        .collect::<Vec<_>>()
        .join(";");
    vec![
        seed.to_string(),
        fmt(report.value),
        xs,
        report.iterations.to_string(),
        report.separation_queries.to_string(),
        report.membership_queries.to_string(),
        report.evaluation_queries.to_string(),
        (report.converged as u8).to_string(),
        (report.monotone_volume as u8).to_string(),
    ]
}

const OPTIMIZE_COLUMNS: &[&str] = &[
    "seed",
    "value",
    "x",
    "iterations",
    "separation_queries",
    "membership_queries",
    "evaluation_queries",
    "converged",
    "monotone_volume",
];

/// Returns the CSV plus a nonconvergence flag (exit code 3 when set).
pub fn cmd_optimize(args: &OptimizeArgs) -> Result<(String, bool)> {
    let (body, objective, echo) = instance_from_args(args)?;
    let mode = match args.method.as_str() {
        "fd" => DriverMode::FiniteDifference,
        "quantum" => DriverMode::Quantum { delta: args.delta, rho: args.rho },
        other => {
            return Err(Error::ParamError(format!(
                "unknown method '{other}' (fd|quantum)"
            )))
        }
    };
    let mut rows = Vec::new();
    let mut any_nonconverged = false;
    for t in 0..args.common.trials {
        let seed = args.common.seed + t;
        let k = CountedOracle::membership(body.clone(), 0.0);
        let f = CountedOracle::evaluation(objective.clone(), 0.0);
        match minimize_convex(k, f, args.eps, seed, mode) {
            Ok(rep) => rows.push(optimize_rows(&rep, seed)),
            Err(Error::NoConvergence(rep)) => {
                any_nonconverged = true;
                rows.push(optimize_rows(&rep, seed));
            }
            Err(e) => return Err(e),
        }
    }
    let meta = format!(
        "cmd=optimize {echo} eps={} method={} trials={} seed={}",
        args.eps, args.method, args.common.trials, args.common.seed
    );
    Ok((render_csv(&meta, OPTIMIZE_COLUMNS, &rows), any_nonconverged))
}

pub fn cmd_lowerbound(args: &LowerboundArgs) -> Result<String> {
    let n = args.n;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(args.common.seed);

    // Exhaustive membership-reduction sweep.
    let mut mismatches = 0u64;
    let mut wildcard_queries = 0u64;
    let probes = 1000usize;
    for s in all_bitstrings(n) {
        let inst = WildcardInstance::new(s.clone());
        let body = ConvexBody::sum_coords_box(&s);
        for _ in 0..probes {
            let x: Vec<f64> = (0..n)
                .map(|_| rand::Rng::gen_range(&mut rng, -3.0..3.0))
                .collect();
            let direct = body.signed_distance(&x).unwrap() <= 0.0;
            if sum_coords_membership(&inst, &x)? != direct {
                mismatches += 1;
            }
        }
        wildcard_queries += inst.query_count();
    }
    rows.push(vec![
        "membership_reduction".into(),
        n.to_string(),
        format!("probes={probes}"),
        mismatches.to_string(),
        format!("wildcard_queries={wildcard_queries}"),
    ]);

    // Discretization equivalence sweep with adversarial offsets.
    let mut mismatches = 0u64;
    let mut queries = 0u64;
    let noise = 1.0 / (5 * n + 1) as f64;
    for c in all_bitstrings(n) {
        for flip in [-1.0, 1.0] {
            let oracle = CountedOracle::evaluation_with(
                Arc::new(ObjectiveFunction::max_norm(&c)),
                1.0 / (5.0 * n as f64),
                NoisePolicy::AdditiveDeterministic(flip * noise),
            )?;
            for _ in 0..probes / 2 {
                let x: Vec<f64> = (0..n)
                    .map(|_| rand::Rng::gen_range(&mut rng, 0.0..=1.0))
                    .collect();
                let (value, _) = discretized_eval(&oracle, &x)?;
                if (value - max_norm_eval(&c, &x)).abs() > 1e-12 {
                    mismatches += 1;
                }
            }
            queries += oracle.query_count();
        }
    }
    rows.push(vec![
        "discretization_sweep".into(),
        n.to_string(),
        format!("noise={noise}"),
        mismatches.to_string(),
        format!("evaluation_queries={queries}"),
    ]);

    // Max-norm recovery through the wildcard driver.
    for c in all_bitstrings(n.min(4)) {
        let oracle = CountedOracle::evaluation(Arc::new(ObjectiveFunction::max_norm(&c)), 0.0);
        let recovered = solve_max_norm_via_wildcards(&oracle)?;
        rows.push(vec![
            "wildcard_recovery_classical_driver".into(),
            n.min(4).to_string(),
            format!("c={}", bits_to_str(&c)),
            ((recovered == c) as u8).to_string(),
            format!("evaluation_queries={}", oracle.query_count()),
        ]);
    }

    // Combined-instance recovery by the full pipeline (n = 2 scale).
    let pipeline_n = 2usize.min(n);
    for s in all_bitstrings(pipeline_n) {
        for c in all_bitstrings(pipeline_n) {
            let (body, obj) = crate::lowerbound::combined_instance(&s, &c)?;
            let k = CountedOracle::membership(body, 0.0);
            let f = CountedOracle::evaluation(obj, 0.0);
            let rep = minimize_convex(k, f, args.eps, args.common.seed, DriverMode::FiniteDifference)?;
            let s_rec = crate::lowerbound::round_sgn(&rep.x[..pipeline_n], -1.5);
            let c_rec = crate::lowerbound::round_sgn(&rep.x[pipeline_n..], 0.5);
            let ok = s_rec == s && c_rec == c;
            rows.push(vec![
                "combined_recovery".into(),
                pipeline_n.to_string(),
                format!("s={} c={}", bits_to_str(&s), bits_to_str(&c)),
                (ok as u8).to_string(),
                format!(
                    "value={} membership_queries={} evaluation_queries={}",
                    fmt(rep.value),
                    rep.membership_queries,
                    rep.evaluation_queries
                ),
            ]);
        }
    }

    let meta = format!("cmd=lowerbound n={n} eps={} trials={} seed={}", args.eps, args.common.trials, args.common.seed);
    Ok(render_csv(&meta, &["check", "n", "params", "result", "detail"], &rows))
}

pub fn cmd_discretize(args: &DiscretizeArgs) -> Result<String> {
    let n = args.n;
    let noise = args.noise.unwrap_or(0.0);
    if noise.abs() > 1.0 / (5.0 * n as f64) {
        return Err(Error::ParamError(format!(
            "noise {noise} exceeds the 1/(5n) = {} contract",
            1.0 / (5.0 * n as f64)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.common.seed);
    let c = match &args.c {
        Some(bits) => parse_bits(bits)?,
        None => (0..n).map(|_| rand::Rng::gen_bool(&mut rng, 0.5)).collect(),
    };
    if c.len() != n {
        return Err(Error::ParamError("|c| must equal n".into()));
    }
    let oracle = CountedOracle::evaluation_with(
        Arc::new(ObjectiveFunction::max_norm(&c)),
        noise.abs(),
        if noise == 0.0 {
            NoisePolicy::Exact
        } else {
            NoisePolicy::AdditiveDeterministic(noise)
        },
    )?;
    let mut rows = Vec::new();
    for t in 0..args.common.trials {
        let x: Vec<f64> = (0..n)
            .map(|_| rand::Rng::gen_range(&mut rng, 0.0..=1.0))
            .collect();
        let (value, trace) = discretized_eval(&oracle, &x)?;
        let direct = max_norm_eval(&c, &x);
        rows.push(vec![
            (args.common.seed + t).to_string(),
            x.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(";"),
            trace.x_star.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(";"),
            trace.k_star.to_string(),
            fmt(value),
            fmt(direct),
            (((value - direct).abs() <= 1e-12) as u8).to_string(),
        ]);
    }
    let meta = format!(
        "cmd=discretize n={n} c={} noise={noise} trials={} seed={}",
        bits_to_str(&c),
        args.common.trials,
        args.common.seed
    );
    Ok(render_csv(
        &meta,
        &["trial", "x", "x_star", "k_star", "recovered", "direct", "match"],
        &rows,
    ))
}

fn write_output(out: &Option<PathBuf>, csv: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::ContractViolation(_) => 4,
        Error::NoConvergence(_) => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

/// Entry point: parse arguments, run the subcommand, map errors to exit
/// codes (0 success, 2 usage, 3 nonconvergence, 4 contract violation).
pub fn run() -> i32 {
    let cli = Cli::parse();
    let result: Result<(String, i32)> = match &cli.cmd {
        Command::Gradest(args) => cmd_gradest(args).map(|csv| (csv, 0)),
        Command::Subgrad(args) => cmd_subgrad(args).map(|csv| (csv, 0)),
        Command::Optimize(args) => {
            cmd_optimize(args).map(|(csv, bad)| (csv, if bad { 3 } else { 0 }))
        }
        Command::Lowerbound(args) => cmd_lowerbound(args).map(|csv| (csv, 0)),
        Command::Discretize(args) => cmd_discretize(args).map(|csv| (csv, 0)),
    };
    let common = match &cli.cmd {
        Command::Gradest(a) => &a.common,
        Command::Subgrad(a) => &a.common,
        Command::Optimize(a) => &a.common,
        Command::Lowerbound(a) => &a.common,
        Command::Discretize(a) => &a.common,
    };
    match result {
        Ok((csv, code)) => {
            if let Err(e) = write_output(&common.out, &csv) {
                eprintln!("error: {e}");
                return 1;
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
