//! Timing of the first-stage sparse sketch against input density.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robsub_core::sketch::{apply_right, make_sparse_sketch};
use robsub_core::{CsrMatrix, Matrix};

use crate::error::CliError;

pub const CSV_HEADER: [&str; 3] = ["density", "nnz", "seconds"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub density: f64,
    pub nnz: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub rows: usize,
    pub cols: usize,
    pub densities: Vec<f64>,
    pub sketch_rows: usize,
    pub sparsity: usize,
    /// Repetitions per density; the median time is reported.
    pub reps: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { rows: 4_000, cols: 5_000, densities: vec![0.01, 0.02, 0.04, 0.08], sketch_rows: 160, sparsity: 4, reps: 7 }
    }
}

/// Uniformly random sparse matrix with Gaussian-ish entries; each entry is
/// present independently with probability `density`.
pub fn random_sparse(rows: usize, cols: usize, density: f64, seed: u64) -> Result<CsrMatrix, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trip = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if rng.random::<f64>() < density {
                trip.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(rows, cols, &trip)?)
}

pub fn run_bench(cfg: &BenchConfig, seed: u64) -> Result<Vec<BenchRow>, CliError> {
    if cfg.densities.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
        return Err(CliError::Config("densities must lie in (0, 1]".into()));
    }
    if cfg.reps == 0 {
        return Err(CliError::Config("reps must be positive".into()));
    }
    let sketch = make_sparse_sketch(seed, cfg.sketch_rows, cfg.cols, cfg.sparsity)?;
    let mut out = Vec::new();
    for (t, &density) in cfg.densities.iter().enumerate() {
        let a = Matrix::Sparse(random_sparse(cfg.rows, cfg.cols, density, seed.wrapping_add(1 + t as u64))?);
        let mut times = Vec::with_capacity(cfg.reps);
        for _ in 0..cfg.reps {
            let start = Instant::now();
            let y = apply_right(&a, &sketch)?;
            times.push(start.elapsed().as_secs_f64());
            std::hint::black_box(y);
        }
        times.sort_by(f64::total_cmp);
        out.push(BenchRow { density, nnz: a.nnz(), seconds: times[times.len() / 2] });
    }
    Ok(out)
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn linear_r2(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}

pub fn write_csv<W: std::io::Write>(w: W, rows: &[BenchRow]) -> Result<(), CliError> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    wr.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        wr.write_record([r.density.to_string(), r.nnz.to_string(), format!("{:e}", r.seconds)]).map_err(io)?;
    }
    wr.flush().map_err(|e| CliError::Io(e.to_string()))
}
