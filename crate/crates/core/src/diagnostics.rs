//! Monte-Carlo fold-over check over many seeds.

use rayon::prelude::*;
use serde::Serialize;

use crate::field::{build_field, min_jacobian};
use crate::grid::sample_grid;
use crate::rng::derive_seed;
use crate::DeformError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldCheckConfig {
    pub width: usize,
    pub height: usize,
    pub sigma: f64,
    pub grid: (usize, usize),
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldCheckReport {
    pub trials: usize,
    pub foldovers: usize,
    pub foldover_rate: f64,
    /// Worst (smallest) min-Jacobian seen across trials.
    pub min_jacobian: f64,
    pub min_magnitude: f64,
    pub max_magnitude: f64,
    pub max_abs_gradient: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct TrialOutcome {
    pub seed: u64,
    pub min_jacobian: f64,
    pub min_magnitude: f64,
    pub max_magnitude: f64,
    pub max_abs_gradient: f64,
}

/// Seed used for trial `index` of a run seeded with `seed`.
pub fn trial_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, index as u64)
}

/// Runs every trial and returns the per-trial outcomes in trial order.
pub fn field_trials(cfg: &FieldCheckConfig) -> Result<Vec<TrialOutcome>, DeformError> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(cfg.seed, t);
            let grid = sample_grid(cfg.grid.0, cfg.grid.1, cfg.sigma, seed)?;
            let field = build_field(&grid, cfg.width, cfg.height)?;
            Ok(TrialOutcome {
                seed,
                min_jacobian: min_jacobian(&field)?,
                min_magnitude: field.min_magnitude(),
                max_magnitude: field.max_magnitude(),
                max_abs_gradient: field.max_abs_gradient(),
            })
        })
        .collect()
}

/// Fraction of trials with `min_jacobian <= 0`, plus field magnitude ranges.
pub fn field_check(cfg: &FieldCheckConfig) -> Result<FieldCheckReport, DeformError> {
    if cfg.trials == 0 {
        return Err(DeformError::NoTrials);
    }
    let outcomes = field_trials(cfg)?;
    let foldovers = outcomes.iter().filter(|o| o.min_jacobian <= 0.0).count();
    let fold = |init: f64, f: fn(f64, f64) -> f64, get: fn(&TrialOutcome) -> f64| {
        outcomes.iter().map(get).fold(init, f)
    };
    Ok(FieldCheckReport {
        trials: cfg.trials,
        foldovers,
        foldover_rate: foldovers as f64 / cfg.trials as f64,
        min_jacobian: fold(f64::INFINITY, f64::min, |o| o.min_jacobian),
        min_magnitude: fold(f64::INFINITY, f64::min, |o| o.min_magnitude),
        max_magnitude: fold(0.0, f64::max, |o| o.max_magnitude),
        max_abs_gradient: fold(0.0, f64::max, |o| o.max_abs_gradient),
    })
}
