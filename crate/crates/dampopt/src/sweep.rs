//! Runs the rows of a configuration, optionally against the naive oracle.

use std::time::Instant;

use dampopt_core::bench::naive_optimize;
use dampopt_core::optim::{optimize_damping, TraceEntry};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RowSpec, RunConfig};
use crate::error::{CliError, Result};

/// Naive full-order run on the same system.
#[derive(Debug, Clone, Serialize)]
pub struct OracleOutcome {
    pub g_star: Vec<f64>,
    pub hinf_value: f64,
    pub norm_evaluations: usize,
    pub factorizations: usize,
    pub wall_seconds: f64,
    pub rel_gain_err: f64,
    pub rel_hinf_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RowOutcome {
    pub g_star: Vec<f64>,
    pub hinf_value: f64,
    pub omega_star: f64,
    pub outer_iters: usize,
    pub rom_dim: usize,
    pub termination: String,
    pub factorizations: usize,
    pub norm_evaluations: usize,
    pub wall_seconds: f64,
    #[serde(skip)]
    pub trace: Vec<TraceEntry>,
    pub oracle: Option<OracleOutcome>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RowResult {
    pub config_id: usize,
    pub j: Option<usize>,
    pub k: Option<usize>,
    pub problem: String,
    pub mode: String,
    #[serde(flatten)]
    pub outcome: Option<RowOutcome>,
    pub error: Option<String>,
}

impl RowResult {
    /// naive / Algorithm 1 wall-clock ratio.
    pub fn time_ratio(&self) -> Option<f64> {
        let o = self.outcome.as_ref()?;
        Some(o.oracle.as_ref()?.wall_seconds / o.wall_seconds)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn rel_vec(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(f64::MIN_POSITIVE)
}

fn run_row(cfg: &RunConfig, row: &RowSpec, long: bool) -> Result<RowOutcome> {
    let alg = cfg.algorithm()?;
    let init = cfg.initial_gains.clone().unwrap_or_default();
    let t0 = Instant::now();
    let res = optimize_damping(&row.system, &init, &alg)?;
    let wall = t0.elapsed().as_secs_f64();
    log::info!(
        "row {}: H∞ = {:.10e} at g = {:?} after {} outer iterations ({})",
        row.config_id,
        res.hinf_value,
        res.g_star.as_slice(),
        res.outer_iterations,
        res.termination.as_str()
    );
    for t in &res.trace {
        log::debug!(
            "row {} iter {}: g = {:?} reduced {:.10e} full {:.10e} k = {}",
            row.config_id,
            t.iteration,
            t.gains,
            t.reduced_value,
            t.full_value,
            t.rom_dimension
        );
    }
    let g_star = res.g_star.as_slice().to_vec();
    let oracle = if cfg.oracle {
        let t0 = Instant::now();
        let naive = naive_optimize(&row.system, &init[0], &alg.optimizer, &alg.dense, long)?;
        let naive_wall = t0.elapsed().as_secs_f64();
        let ng = naive.g_star.as_slice().to_vec();
        Some(OracleOutcome {
            rel_gain_err: rel_vec(&g_star, &ng),
            rel_hinf_err: rel(res.hinf_value, naive.hinf_value),
            g_star: ng,
            hinf_value: naive.hinf_value,
            norm_evaluations: naive.full_norm_evaluations,
            factorizations: naive.full_factorizations,
            wall_seconds: naive_wall,
        })
    } else {
        None
    };
    Ok(RowOutcome {
        g_star,
        hinf_value: res.hinf_value,
        omega_star: res.omega_star,
        outer_iters: res.outer_iterations,
        rom_dim: res.rom_dimension_final,
        termination: res.termination.as_str().to_string(),
        factorizations: res.full_factorizations,
        norm_evaluations: res.full_norm_evaluations,
        wall_seconds: wall,
        trace: res.trace,
        oracle,
    })
}

/// Runs every row; a failing row is recorded and the others continue.
/// Results come back in row order regardless of `jobs`.
pub fn run_sweep(cfg: &RunConfig, rows: &[RowSpec], jobs: usize, long: bool) -> Result<Vec<RowResult>> {
    let problem = cfg.problem()?.label();
    let mode = cfg.mode.clone();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        rows.par_iter()
            .map(|row| {
                let (outcome, error) = match run_row(cfg, row, long) {
                    Ok(o) => (Some(o), None),
                    Err(e) => {
                        log::error!("row {} failed: {e}", row.config_id);
                        (None, Some(e.to_string()))
                    }
                };
                RowResult {
                    config_id: row.config_id,
                    j: row.j,
                    k: row.k,
                    problem: problem.clone(),
                    mode: mode.clone(),
                    outcome,
                    error,
                }
            })
            .collect()
    }))
}

/// Mean of the per-row naive / Algorithm 1 time ratios.
pub fn average_time_ratio(rows: &[RowResult]) -> Option<f64> {
    let r: Vec<f64> = rows.iter().filter_map(RowResult::time_ratio).collect();
    (!r.is_empty()).then(|| r.iter().sum::<f64>() / r.len() as f64)
}
