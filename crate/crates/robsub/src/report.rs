//! JSON report envelope shared by all subcommands.

use std::collections::BTreeMap;

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything except `timings` is a deterministic function of the inputs,
/// flags, and seed.
#[derive(Debug, Serialize)]
pub struct Report<C: Serialize, R: Serialize> {
    pub schema_version: u32,
    pub command: &'static str,
    pub seed: u64,
    pub config: C,
    pub result: R,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

impl<C: Serialize, R: Serialize> Report<C, R> {
    pub fn new(command: &'static str, seed: u64, config: C, result: R, timings: BTreeMap<String, f64>) -> Self {
        Report { schema_version: SCHEMA_VERSION, command, seed, config, result, timings }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report types serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputInfo {
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxResult {
    pub input: InputInfo,
    pub k: usize,
    pub stage: String,
    pub loss: String,
    pub subspace_dim: usize,
    pub v_cost_p: f64,
    pub v_cost: f64,
    pub baselines: BTreeMap<String, f64>,
    pub bicriteria_dim: usize,
    pub bicriteria_depth: usize,
    pub bicriteria_level_sizes: Vec<usize>,
    pub p_m: usize,
    pub saturated: bool,
    pub dim_reduce_dim: Option<usize>,
    pub dim_reduce_expected_samples: Option<f64>,
    pub embed_cols: Option<usize>,
    pub sample_size: Option<usize>,
    pub recursion_depth: Option<usize>,
    pub level_sizes: Option<Vec<usize>>,
    pub small_cost: Option<f64>,
    pub converged: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressResult {
    pub input: InputInfo,
    pub loss: String,
    pub eps: f64,
    pub sample_size: usize,
    pub level_sizes: Vec<usize>,
    pub sampled_cost: f64,
    pub full_cost: f64,
    pub cost_ratio: f64,
    pub full_iterations: usize,
    pub full_monotone: bool,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GadgetResult {
    pub vertices: usize,
    pub degree: usize,
    pub k: usize,
    pub b1: f64,
    pub b2: u64,
    pub c: f64,
    pub p: f64,
    pub best_set: Vec<usize>,
    pub best_cost: f64,
    pub projector_cost: f64,
    /// `best_cost` minus the cost with every vertex row at distance 1.
    pub excess: f64,
    pub best_is_clique: bool,
    /// Value of the in-set terms if the best set were a k-clique.
    pub clique_terms: f64,
    pub gap_bound: f64,
    pub verdict: String,
}
