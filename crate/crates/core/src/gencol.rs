//! Genetic column generation for the W2-penalized problem.
//!
//! Offspring of the active columns enter the pool only when they violate
//! the current dual (positive gain). The pool is capped at `β·N`: once
//! exceeded, `N` inactive non-singleton columns are removed at random.
//! Risks are reported both for the penalized objective and corrected by
//! resetting every cost coefficient to 1.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configuration::{ConfigError, Configuration, ConfigurationPool, CostKind, CostModel};
use crate::data::LabeledDataset;
use crate::lp::{self, LpError, LpSolution};
use crate::search::{self, ConvergenceTrace, Proposer, SearchError, TraceRecord};

/// Columns are accepted iff their gain exceeds this.
pub const GAIN_TOL: f64 = 1e-10;
/// Largest violation tolerated by `certify_optimality`.
pub const CERTIFY_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum GencolError {
    #[error("invalid column generation parameters: {0}")]
    InvalidParams(String),
    #[error("certification needs {needed} configurations, above the cap of {cap}")]
    EnumerationCap { needed: f64, cap: usize },
    #[error("dual has {found} entries for {expected} points")]
    DualLength { expected: usize, found: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl From<SearchError> for GencolError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Lp(e) => GencolError::Lp(e),
            SearchError::Config(e) => GencolError::Config(e),
            other => GencolError::InvalidParams(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GencolParams {
    pub tau: f64,
    /// Pool cap multiplier; the pool is trimmed once it exceeds `β·N`.
    pub beta: usize,
    /// Offspring proposed per generation. The pool stays within
    /// `β·N + s` when `s <= N`.
    pub samples_per_generation: usize,
    pub time_limit: f64,
    pub stagnation_generations: usize,
    pub seed: u64,
    /// Relative weights of add, swap and drop.
    pub rule_weights: [f64; 3],
    /// Acceptance threshold on the gain.
    pub gain_threshold: f64,
}

impl GencolParams {
    /// Defaults for `n_points`: `β = 3`, `s = N`, weights 1:1:0, 300 s,
    /// 50 stagnant generations.
    pub fn new(tau: f64, n_points: usize) -> Self {
        Self {
            tau,
            beta: 3,
            samples_per_generation: n_points.max(1),
            time_limit: 300.0,
            stagnation_generations: 50,
            seed: 0,
            rule_weights: [1.0, 1.0, 0.0],
            gain_threshold: GAIN_TOL,
        }
    }

    pub fn validate(&self) -> Result<(), GencolError> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(GencolError::InvalidParams(format!("tau must be positive, got {}", self.tau)));
        }
        if self.beta < 2 {
            return Err(GencolError::InvalidParams(format!("beta must be at least 2, got {}", self.beta)));
        }
        if !self.gain_threshold.is_finite() {
            return Err(GencolError::InvalidParams("gain threshold must be finite".into()));
        }
        search::validate_common(self.samples_per_generation, &self.rule_weights, self.time_limit)?;
        Ok(())
    }
}

/// Probability-scale summary of a W2 run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct W2RiskReport {
    pub tau: f64,
    pub beta: usize,
    /// `1 - objective / N`.
    pub regularized_value: f64,
    /// `1 - Σ γ / N`, the plain risk of the optimal coupling.
    pub corrected_risk: f64,
    /// `Σ (c(r) - 1) γ(r) / N`.
    pub penalty_paid: f64,
    /// Stopped on stagnation rather than on the time limit.
    pub converged: bool,
    pub elapsed_s: f64,
}

impl W2RiskReport {
    pub fn from_solution(
        solution: &LpSolution,
        pool: &ConfigurationPool,
        n_points: usize,
        tau: f64,
        beta: usize,
    ) -> Self {
        let n = n_points as f64;
        let mass = solution.total_mass();
        let penalty: f64 = solution.gamma.iter().map(|(c, w)| (pool.cost_of(c).unwrap_or(1.0) - 1.0) * w).sum();
        Self {
            tau,
            beta,
            regularized_value: 1.0 - solution.objective / n,
            corrected_risk: 1.0 - mass / n,
            penalty_paid: penalty / n,
            converged: false,
            elapsed_s: 0.0,
        }
    }

    /// `regularized_value + penalty_paid + Σγ/N - 1`, zero up to rounding.
    pub fn identity_residual(&self) -> f64 {
        self.regularized_value + self.penalty_paid + (1.0 - self.corrected_risk) - 1.0
    }
}

/// `Σ_{i∈r} u_i - c(r)` for the W2 cost.
pub fn gain(candidate: &Configuration, dual: &[f64], ds: &LabeledDataset, tau: f64) -> Result<f64, GencolError> {
    if dual.len() != ds.len() {
        return Err(GencolError::DualLength { expected: ds.len(), found: dual.len() });
    }
    let model = CostModel::w2(tau)?;
    let c = crate::configuration::cost(candidate, ds, &model)?;
    Ok(candidate.indices().iter().map(|&i| dual[i as usize]).sum::<f64>() - c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimEvent {
    pub generation: usize,
    pub size_before: usize,
    pub removed: usize,
    pub objective_before: f64,
    pub objective_after: f64,
}

#[derive(Debug, Clone)]
pub struct GencolOutcome {
    pub pool: ConfigurationPool,
    pub solution: LpSolution,
    pub report: W2RiskReport,
    pub trace: ConvergenceTrace,
    pub trims: Vec<TrimEvent>,
    /// Largest pool size observed after any insertion.
    pub max_pool_size: usize,
}

pub fn gencol_w2(ds: &LabeledDataset, params: &GencolParams) -> Result<GencolOutcome, GencolError> {
    params.validate()?;
    let start = Instant::now();
    let limit = Duration::from_secs_f64(params.time_limit);
    let n = ds.len();
    let model = CostModel::w2(params.tau)?;

    let mut pool = ConfigurationPool::with_singletons(n);
    let mut solution = lp::solve(&pool.problem(n))?;
    let mut trace = ConvergenceTrace::default();
    let record = |trace: &mut ConvergenceTrace, generation, pool: &ConfigurationPool, sol: &LpSolution| {
        trace.push(TraceRecord {
            elapsed_s: start.elapsed().as_secs_f64(),
            generation,
            pool_size: pool.len(),
            objective: sol.objective,
            risk: 1.0 - sol.objective / n as f64,
        })
    };
    record(&mut trace, 0, &pool, &solution);

    let mut proposer = Proposer::new(&params.rule_weights, params.seed);
    let mut trims = Vec::new();
    let mut max_pool_size = pool.len();
    let mut stagnant = 0usize;
    let mut generation = 0usize;
    let converged = loop {
        if stagnant >= params.stagnation_generations {
            break true;
        }
        if start.elapsed() >= limit {
            break false;
        }
        generation += 1;

        if pool.len() > params.beta * n {
            let active: HashSet<Configuration> = solution.gamma.iter().map(|(c, _)| c.clone()).collect();
            let size_before = pool.len();
            let removed = pool.trim_inactive(&active, n, &mut proposer.rng);
            let objective_before = solution.objective;
            solution = lp::warm_solve(&pool.problem(n), &solution)?;
            trims.push(TrimEvent {
                generation,
                size_before,
                removed,
                objective_before,
                objective_after: solution.objective,
            });
        }

        let parents: Vec<&Configuration> = solution.gamma.iter().map(|(c, _)| c).collect();
        let candidates = proposer.propose(&parents, params.samples_per_generation, ds, &pool);
        let dual = &solution.dual;
        let scored: Vec<Option<f64>> = candidates
            .par_iter()
            .map(|c| {
                let cost = model.evaluate(c, ds).ok()?;
                let g = c.indices().iter().map(|&i| dual[i as usize]).sum::<f64>() - cost;
                (g > params.gain_threshold).then_some(cost)
            })
            .collect();
        let mut inserted = 0;
        for (c, cost) in candidates.into_iter().zip(scored) {
            if let Some(cost) = cost {
                if pool.insert(c, cost) {
                    inserted += 1;
                }
            }
        }
        max_pool_size = max_pool_size.max(pool.len());
        if inserted == 0 {
            stagnant += 1;
        } else {
            stagnant = 0;
            solution = lp::warm_solve(&pool.problem(n), &solution)?;
        }
        record(&mut trace, generation, &pool, &solution);
    };

    let mut report = W2RiskReport::from_solution(&solution, &pool, n, params.tau, params.beta);
    report.converged = converged;
    report.elapsed_s = start.elapsed().as_secs_f64();
    Ok(GencolOutcome { pool, solution, report, trace, trims, max_pool_size })
}

/// Number of label-distinct nonempty configurations, `Π (n_c + 1) - 1`.
pub fn count_feasible_configurations(ds: &LabeledDataset) -> f64 {
    ds.class_counts().iter().map(|&c| c as f64 + 1.0).product::<f64>() - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub is_optimal: bool,
    /// Largest gain over all feasible configurations.
    pub max_violation: f64,
    pub checked: usize,
}

/// Checks the dual of `solution` against every label-distinct
/// configuration of `ds`. A maximal gain of at most `1e-8` proves the
/// reduced solution optimal for the full LP. Classical models skip
/// configurations of infinite cost.
pub fn certify_optimality(
    solution: &LpSolution,
    ds: &LabeledDataset,
    model: &CostModel,
    cap: usize,
) -> Result<Certificate, GencolError> {
    if solution.dual.len() != ds.len() {
        return Err(GencolError::DualLength { expected: ds.len(), found: solution.dual.len() });
    }
    let needed = count_feasible_configurations(ds);
    if needed > cap as f64 {
        return Err(GencolError::EnumerationCap { needed, cap });
    }
    if let CostKind::W2Penalty { .. } = model.kind {
        // surface metric errors once instead of per configuration
        model.evaluate(&Configuration::new(vec![0]), ds)?;
    }
    let classes = ds.members_by_class();
    let mut all = Vec::with_capacity(needed as usize);
    let mut current = Vec::new();
    enumerate_distinct(&classes, 0, &mut current, &mut all);

    let dual = &solution.dual;
    let max_violation = all
        .par_iter()
        .map(|idx| {
            let r = Configuration::new(idx.clone());
            let cost = model.evaluate(&r, ds).unwrap_or(f64::INFINITY);
            if cost.is_finite() {
                idx.iter().map(|&i| dual[i as usize]).sum::<f64>() - cost
            } else {
                f64::NEG_INFINITY
            }
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(Certificate { is_optimal: max_violation <= CERTIFY_TOL, max_violation, checked: all.len() })
}

fn enumerate_distinct(classes: &[Vec<u32>], k: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if k == classes.len() {
        if !current.is_empty() {
            out.push(current.clone());
        }
        return;
    }
    enumerate_distinct(classes, k + 1, current, out);
    for &i in &classes[k] {
        current.push(i);
        enumerate_distinct(classes, k + 1, current, out);
        current.pop();
    }
}
