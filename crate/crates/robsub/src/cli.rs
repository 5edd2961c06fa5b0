//! Argument parsing and the four subcommands.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use robsub_core::bicriteria::{const_approx, ConstApproxConfig};
use robsub_core::conditioning::ConditioningConfig;
use robsub_core::dimreduce::{dim_reduce, DimReduceConfig};
use robsub_core::hardness::{
    adjacency_from_edges, brute_force_best_coordinate, clique_gap_bound, gen_gadget, is_clique, projector_cost,
};
use robsub_core::oracle::svd_truncation_cost;
use robsub_core::pipeline::{approx, PipelineConfig, SmallApproxConfig};
use robsub_core::regression::{irls_solve, m_regress, regression_cost, IrlsConfig, RegressConfig};
use robsub_core::seed::derive_seed;
use robsub_core::{residual_cost, LossSpec, Matrix, Subspace, WeightVector};
use serde::Serialize;

use crate::bench::{run_bench, write_csv, BenchConfig};
use crate::error::CliError;
use crate::io::{read_edge_list, read_matrix, read_vector, read_weights, write_matrix_market, write_sparse_matrix_market, write_vector};
use crate::report::{ApproxResult, GadgetResult, InputInfo, RegressResult, Report};

pub const THREADS_ENV: &str = "ROBSUB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "robsub", version, about = "Robust subspace approximation and regression")]
pub struct Cli {
    /// Worker threads (0 = one per core). ROBSUB_THREADS takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a rank-k subspace.
    Approx(ApproxArgs),
    /// Robust linear regression.
    Regress(RegressArgs),
    /// Build a clique-reduction instance from a graph and search coordinate subspaces.
    Gadget(GadgetArgs),
    /// Time the first-stage sketch across input densities.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LossName {
    L1,
    Lp,
    Huber,
    L1l2,
    Fair,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LossArgs {
    #[arg(long, value_enum, default_value = "l1")]
    pub loss: LossName,
    /// Exponent for `--loss lp`, in [1, 2].
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Huber threshold or Fair scale.
    #[arg(long, default_value_t = 1.0)]
    pub loss_param: f64,
}

impl LossArgs {
    pub fn spec(&self) -> Result<LossSpec, CliError> {
        let s = match self.loss {
            LossName::L1 => LossSpec::lp(1.0),
            LossName::Lp => LossSpec::lp(self.p),
            LossName::Huber => LossSpec::huber(self.loss_param),
            LossName::L1l2 => Ok(LossSpec::l1l2()),
            LossName::Fair => LossSpec::fair(self.loss_param),
        };
        Ok(s?)
    }

    fn label(&self) -> String {
        match self.loss {
            LossName::L1 => "l1".into(),
            LossName::Lp => format!("lp(p={})", self.p),
            LossName::Huber => format!("huber(tau={})", self.loss_param),
            LossName::L1l2 => "l1l2".into(),
            LossName::Fair => format!("fair(c={})", self.loss_param),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Bicriteria,
    Dimreduce,
    Full,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ApproxArgs {
    /// Matrix Market (.mtx) or headerless CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Optional one-column CSV of row weights (>= 1); `|x|^p` losses only.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub loss: LossArgs,
    #[arg(long, default_value_t = 0.25)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "full")]
    pub stage: Stage,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write the `d x dim` orthonormal basis as Matrix Market.
    #[arg(long)]
    pub subspace_out: Option<PathBuf>,
    #[command(flatten)]
    pub constants: PipelineFlags,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PipelineFlags {
    /// Bicriteria sketch width multiplier (width = c * k^2).
    #[arg(long, default_value_t = 40.0)]
    pub c_sketch: f64,
    /// Sketch distortion target; sparsity is ceil(2 / value).
    #[arg(long, default_value_t = 0.5)]
    pub eps_const: f64,
    /// Bicriteria level sample multiplier.
    #[arg(long, default_value_t = 10.0)]
    pub c_r: f64,
    /// Extra bicriteria level factor for growth-2 losses.
    #[arg(long, default_value_t = 3.0)]
    pub c_loglog: f64,
    /// Bicriteria base-case row multiplier.
    #[arg(long, default_value_t = 50.0)]
    pub p_m_mult: f64,
    /// p-stable embedding rows per squared column.
    #[arg(long, default_value_t = 20.0)]
    pub c_pi: f64,
    /// Random directions for the distortion estimate.
    #[arg(long, default_value_t = 10_000)]
    pub beta_samples: usize,
    /// Base sample size multiplier.
    #[arg(long, default_value_t = 2.0)]
    pub c1: f64,
    /// Assumed bicriteria approximation factor.
    #[arg(long, default_value_t = 1.0)]
    pub quality_k: f64,
    /// Oversampling constant.
    #[arg(long, default_value_t = 4.0)]
    pub k2: f64,
    /// Expected-size cap for residual sampling (0 = uncapped).
    #[arg(long, default_value_t = 200.0)]
    pub dim_reduce_cap: f64,
    /// Column embedding width multiplier.
    #[arg(long, default_value_t = 4.0)]
    pub embed_mult: f64,
    /// Row-sampling exponent; defaults to p.
    #[arg(long)]
    pub c_exponent: Option<f64>,
    /// Fraction of the small-problem cap used for row sampling.
    #[arg(long, default_value_t = 0.8)]
    pub sample_fraction: f64,
    #[arg(long, default_value_t = 0.1)]
    pub kappa: f64,
    /// Gaussian directions for growth-2 losses; defaults to ceil(3 / kappa).
    #[arg(long)]
    pub t_m: Option<usize>,
    /// Per-level accuracy split constant.
    #[arg(long, default_value_t = 1.0)]
    pub c_eps_split: f64,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    /// Largest small problem (rows and columns).
    #[arg(long, default_value_t = 400)]
    pub small_cap: usize,
}

impl PipelineFlags {
    pub fn conditioning(&self) -> ConditioningConfig {
        ConditioningConfig { c_pi: self.c_pi, beta_samples: self.beta_samples, ..ConditioningConfig::default() }
    }

    pub fn bicriteria(&self) -> ConstApproxConfig {
        ConstApproxConfig {
            c_sketch: self.c_sketch,
            eps_const: self.eps_const,
            c_r: self.c_r,
            c_loglog: self.c_loglog,
            p_m_mult: self.p_m_mult,
            conditioning: self.conditioning(),
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            bicriteria: self.bicriteria(),
            r1_multiplier: self.c1,
            quality_k: self.quality_k,
            k2: self.k2,
            dim_reduce_cap: (self.dim_reduce_cap > 0.0).then_some(self.dim_reduce_cap),
            embed_mult: self.embed_mult,
            c_exponent: self.c_exponent,
            sample_fraction: self.sample_fraction,
            kappa: self.kappa,
            t_m: self.t_m,
            c_eps_split: self.c_eps_split,
            small: SmallApproxConfig { restarts: self.restarts, cap: self.small_cap, ..SmallApproxConfig::default() },
            ..PipelineConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RegressArgs {
    /// Design matrix: Matrix Market (.mtx) or headerless CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// One-column CSV of targets.
    #[arg(long)]
    pub targets: PathBuf,
    #[command(flatten)]
    pub loss: LossArgs,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write the sampled solution as a one-column CSV.
    #[arg(long)]
    pub solution_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub kappa: f64,
    #[arg(long)]
    pub t_m: Option<usize>,
    /// Per-level sample size multiplier.
    #[arg(long, default_value_t = 1.0)]
    pub sample_const: f64,
    /// Base case: rows <= base_mult * d^2 / eps^2.
    #[arg(long, default_value_t = 20.0)]
    pub base_mult: f64,
    #[arg(long, default_value_t = 3)]
    pub max_levels: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub irls_tol: f64,
    #[arg(long, default_value_t = 500)]
    pub irls_max_iter: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GadgetArgs {
    /// Edge list: one `u v` pair per line, zero-based.
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 1e4)]
    pub b1: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub b2: u64,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write the point set (simplex rows then vertex rows) as Matrix Market;
    /// weights go to the same path with `.weights.csv` appended.
    #[arg(long)]
    pub export: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 4_000)]
    pub rows: usize,
    #[arg(long, default_value_t = 5_000)]
    pub cols: usize,
    /// Comma-separated densities.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.01, 0.02, 0.04, 0.08])]
    pub densities: Vec<f64>,
    #[arg(long, default_value_t = 160)]
    pub sketch_rows: usize,
    #[arg(long, default_value_t = 4)]
    pub sparsity: usize,
    #[arg(long, default_value_t = 7)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Parses `args`, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("robsub: {e}");
            e.exit_code()
        }
    }
}

fn thread_count(flag: usize) -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => {
            v.trim().parse().map_err(|_| CliError::Config(format!("{THREADS_ENV}={v} is not a thread count")))
        }
        _ => Ok(flag),
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let threads = thread_count(cli.threads)?;
    // a pool may already exist when called repeatedly in-process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    match cli.command {
        Command::Approx(a) => cmd_approx(&a),
        Command::Regress(a) => cmd_regress(&a),
        Command::Gadget(a) => cmd_gadget(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

fn emit(path: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn input_info(a: &Matrix) -> InputInfo {
    InputInfo { rows: a.nrows(), cols: a.ncols(), nnz: a.nnz() }
}

fn clock<T>(timings: &mut BTreeMap<String, f64>, name: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    timings.insert(name.to_string(), start.elapsed().as_secs_f64());
    out
}

/// Folds row weights into the rows for `|x|^p` losses.
fn fold_weights(a: Matrix, w: &WeightVector, loss: &LossSpec) -> Result<Matrix, CliError> {
    if w.is_unit() {
        return Ok(a);
    }
    if loss.is_m2() {
        return Err(CliError::Config("row weights are only supported with |x|^p losses".into()));
    }
    let idx: Vec<usize> = (0..a.nrows()).collect();
    let scales: Vec<f64> = w.as_slice().iter().map(|v| v.powf(1.0 / loss.p)).collect();
    Ok(a.select_rows(&idx, &scales))
}

pub fn cmd_approx(args: &ApproxArgs) -> Result<(), CliError> {
    let loss = args.loss.spec()?;
    let a = read_matrix(&args.input)?;
    if !a.is_finite() {
        return Err(CliError::Io(format!("{}: non-finite entries", args.input.display())));
    }
    let w = match &args.weights {
        Some(p) => read_weights(p)?,
        None => WeightVector::ones(a.nrows()),
    };
    if w.len() != a.nrows() {
        return Err(CliError::Config(format!("{} weights for {} rows", w.len(), a.nrows())));
    }
    if args.k == 0 {
        return Err(CliError::Config("k must be at least 1".into()));
    }
    let work = fold_weights(a.clone(), &w, &loss)?;
    let cfg = args.constants.pipeline();
    let mut timings = BTreeMap::new();

    let bic = clock(&mut timings, "bicriteria", || const_approx(&work, args.k, &loss, &cfg.bicriteria, derive_seed(args.seed, 1)))?;
    let mut result = ApproxResult {
        input: input_info(&a),
        k: args.k,
        stage: format!("{:?}", args.stage).to_lowercase(),
        loss: args.loss.label(),
        subspace_dim: bic.subspace.dim(),
        v_cost_p: 0.0,
        v_cost: 0.0,
        baselines: BTreeMap::new(),
        bicriteria_dim: bic.subspace.dim(),
        bicriteria_depth: bic.depth,
        bicriteria_level_sizes: bic.level_sizes.clone(),
        p_m: bic.p_m,
        saturated: bic.saturated,
        dim_reduce_dim: None,
        dim_reduce_expected_samples: None,
        embed_cols: None,
        sample_size: None,
        recursion_depth: None,
        level_sizes: None,
        small_cost: None,
        converged: None,
    };
    let subspace: Subspace = match args.stage {
        Stage::Bicriteria => bic.subspace.clone(),
        Stage::Dimreduce => {
            let dcfg = DimReduceConfig {
                eps: args.eps,
                quality_k: cfg.quality_k,
                r1_multiplier: cfg.r1_multiplier,
                t_m_override: None,
                k2: cfg.k2,
                sample_cap: cfg.dim_reduce_cap,
                seed: derive_seed(args.seed, 2),
            };
            let k = args.k.min(work.ncols());
            let dr = clock(&mut timings, "dim_reduce", || dim_reduce(&work, k, &bic.subspace, &dcfg, &loss))?;
            result.dim_reduce_dim = Some(dr.subspace.dim());
            result.dim_reduce_expected_samples = Some(dr.expected_sample_size);
            dr.subspace
        }
        Stage::Full => {
            let out = clock(&mut timings, "pipeline", || approx(&work, args.k, args.eps, &loss, &cfg, args.seed))?;
            result.dim_reduce_dim = Some(out.dim_reduce_dim);
            result.embed_cols = Some(out.embed_cols);
            result.sample_size = Some(out.sample_size);
            result.recursion_depth = Some(out.recursion_depth);
            result.level_sizes = Some(out.level_sizes.clone());
            result.small_cost = Some(out.small_cost);
            result.converged = Some(out.converged);
            out.subspace
        }
    };
    result.subspace_dim = subspace.dim();
    let cost = residual_cost(&a, &subspace, &w, &loss)?;
    result.v_cost_p = cost;
    result.v_cost = cost.powf(1.0 / loss.p);
    let k_svd = args.k.min(a.nrows().min(a.ncols()));
    let (_, svd) = clock(&mut timings, "svd_baseline", || svd_truncation_cost(&a, k_svd, &w, &loss))?;
    result.baselines.insert("svd".into(), svd);

    if let Some(p) = &args.subspace_out {
        write_matrix_market(p, &subspace.u)?;
    }
    emit(&args.output, &Report::new("approx", args.seed, args, result, timings).to_json())
}

pub fn cmd_regress(args: &RegressArgs) -> Result<(), CliError> {
    let loss = args.loss.spec()?;
    let a = read_matrix(&args.input)?;
    let b = read_vector(&args.targets)?;
    if b.len() != a.nrows() {
        return Err(CliError::Config(format!("{} targets for {} rows", b.len(), a.nrows())));
    }
    let irls = IrlsConfig { tol: args.irls_tol, max_iter: args.irls_max_iter, ..IrlsConfig::default() };
    let cfg = RegressConfig {
        delta: args.delta,
        kappa: args.kappa,
        t_m: args.t_m,
        sample_const: args.sample_const,
        base_mult: args.base_mult,
        max_levels: args.max_levels,
        irls,
        conditioning: ConditioningConfig::default(),
    };
    let mut timings = BTreeMap::new();
    let w = WeightVector::ones(a.nrows());
    let sampled = clock(&mut timings, "sampled", || m_regress(&a, &b, &loss, args.eps, &cfg, args.seed))?;
    let full = clock(&mut timings, "full_irls", || irls_solve(&a, &b, &w, &loss, &irls))?;
    let sampled_cost = regression_cost(&a, &b, &w, &loss, &sampled.x)?;
    let monotone = full.history.windows(2).all(|h| h[1] <= h[0] * (1.0 + 1e-12));
    let ratio = if full.objective > 0.0 { sampled_cost / full.objective } else if sampled_cost == 0.0 { 1.0 } else { f64::INFINITY };
    let result = RegressResult {
        input: input_info(&a),
        loss: args.loss.label(),
        eps: args.eps,
        sample_size: sampled.sample_size,
        level_sizes: sampled.level_sizes.clone(),
        sampled_cost,
        full_cost: full.objective,
        cost_ratio: ratio,
        full_iterations: full.iterations,
        full_monotone: monotone,
        x: sampled.x.iter().copied().collect(),
    };
    if let Some(p) = &args.solution_out {
        write_vector(p, &result.x)?;
    }
    emit(&args.output, &Report::new("regress", args.seed, args, result, timings).to_json())
}

pub fn cmd_gadget(args: &GadgetArgs) -> Result<(), CliError> {
    let (n, edges) = read_edge_list(&args.edges)?;
    let adj = adjacency_from_edges(n, &edges)?;
    let inst = gen_gadget(&adj, args.k, args.b1, args.b2)?;
    if !(args.p > 0.0) {
        return Err(CliError::Config("p must be positive".into()));
    }
    let mut timings = BTreeMap::new();
    let (best, cost) = clock(&mut timings, "enumeration", || brute_force_best_coordinate(&inst, args.p))?;
    let mut basis = DMatrix::zeros(inst.d, inst.k);
    for (t, &j) in best.iter().enumerate() {
        basis[(j, t)] = 1.0;
    }
    let naive = projector_cost(&inst, &basis, args.p)?;
    let clique = is_clique(&inst.adjacency, &best);
    let (b1, r, k) = (inst.b1, inst.r as f64, inst.k as f64);
    let in_term = (2.0 / b1 - 1.0 / (b1 * b1) - (k - 1.0) * inst.c * inst.c / (b1 * r)).max(0.0);
    let clique_terms = k * in_term.powf(args.p / 2.0);
    let agree = (naive - cost).abs() <= 1e-9 * cost.max(1.0);
    let verdict = match (clique, agree) {
        (true, true) => "clique-k cost formula matched",
        (false, true) => "no k-clique: minimum above the clique formula",
        (_, false) => "closed form and projector evaluation disagree",
    };
    let result = GadgetResult {
        vertices: inst.d,
        degree: inst.r,
        k: inst.k,
        b1: inst.b1,
        b2: inst.b2,
        c: inst.c,
        p: args.p,
        best_set: best,
        best_cost: cost,
        projector_cost: naive,
        excess: cost - inst.reference_cost(),
        best_is_clique: clique,
        clique_terms,
        gap_bound: clique_gap_bound(inst.b1, inst.k, inst.r, args.p),
        verdict: verdict.into(),
    };
    if let Some(p) = &args.export {
        let (q, w) = inst.weighted_points();
        write_sparse_matrix_market(p, &robsub_core::CsrMatrix::from_dense(&q))?;
        write_vector(&weights_path(p), w.as_slice())?;
    }
    emit(&args.output, &Report::new("gadget", 0, args, result, timings).to_json())
}

fn weights_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".weights.csv");
    PathBuf::from(s)
}

pub fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    if args.densities.len() < 2 {
        return Err(CliError::Config("need at least two densities".into()));
    }
    let cfg = BenchConfig {
        rows: args.rows,
        cols: args.cols,
        densities: args.densities.clone(),
        sketch_rows: args.sketch_rows,
        sparsity: args.sparsity,
        reps: args.reps,
    };
    let rows = run_bench(&cfg, args.seed)?;
    let mut buf = Vec::new();
    write_csv(&mut buf, &rows)?;
    emit(&args.output, &String::from_utf8(buf).expect("csv output is utf-8"))
}
