//! Discovery of finite-cost configurations under a classical budget.
//!
//! `exhaustive_search` enumerates every configuration that fits in an
//! ε-ball, level by level. `genetic_search` grows the pool from the LP
//! support with add/swap/drop mutations and re-solves after each
//! generation; its risk is a lower bound of the exhaustive one at every
//! step.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configuration::{ConfigError, Configuration, ConfigurationPool};
use crate::data::LabeledDataset;
use crate::geometry::{self, GeometryError, Metric};
use crate::lp::{self, LpError, LpSolution};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("enumeration exceeded the cap of {cap} configurations at length {length}")]
    EnumerationCap { cap: usize, length: usize },
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace serialization failed: {0}")]
    Csv(#[from] csv::Error),
}

/// Enumerates every label-distinct configuration with enclosing radius
/// `<= epsilon`. Each level extends the previous one by points with a larger
/// index and an unused class, so no set is produced twice. Fails with
/// `EnumerationCap` once the pool would exceed `max_configs`.
pub fn exhaustive_search(
    ds: &LabeledDataset,
    metric: Metric,
    epsilon: f64,
    max_configs: Option<usize>,
) -> Result<ConfigurationPool, SearchError> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(SearchError::InvalidParams(format!("budget must be nonnegative, got {epsilon}")));
    }
    let n = ds.len();
    let cap = max_configs.unwrap_or(usize::MAX);
    if n > cap {
        return Err(SearchError::EnumerationCap { cap, length: 1 });
    }
    let mut pool = ConfigurationPool::with_singletons(n);

    // a pair fits in a ball of radius ε iff its distance is at most 2ε,
    // in both metrics
    let neighbors: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (pi, li) = (ds.point(i), ds.label(i));
            (i + 1..n)
                .filter(|&j| {
                    ds.label(j) != li
                        && geometry::within_budget(
                            0.5 * geometry::distance(pi, ds.point(j), metric).unwrap_or(f64::INFINITY),
                            epsilon,
                        )
                })
                .map(|j| j as u32)
                .collect()
        })
        .collect();

    let mut level: Vec<Configuration> = Vec::new();
    for (i, nb) in neighbors.iter().enumerate() {
        for &j in nb {
            level.push(Configuration::new(vec![i as u32, j]));
        }
    }
    let mut length = 2;
    while !level.is_empty() {
        if pool.len() + level.len() > cap {
            return Err(SearchError::EnumerationCap { cap, length });
        }
        for c in &level {
            pool.insert(c.clone(), 1.0);
        }
        length += 1;
        if length > ds.n_classes() {
            break;
        }
        level = level
            .par_chunks(256)
            .map(|chunk| {
                let mut out = Vec::new();
                for r in chunk {
                    extend(r, ds, metric, epsilon, &neighbors, &mut out);
                }
                out
            })
            .flatten_iter()
            .collect();
    }
    Ok(pool)
}

fn extend(
    r: &Configuration,
    ds: &LabeledDataset,
    metric: Metric,
    epsilon: f64,
    neighbors: &[Vec<u32>],
    out: &mut Vec<Configuration>,
) {
    let idx = r.indices();
    let last = *idx.last().expect("nonempty configuration");
    let first = idx[0] as usize;
    let used: Vec<usize> = idx.iter().map(|&i| ds.label(i as usize)).collect();
    for &j in &neighbors[first] {
        if j <= last || used.contains(&ds.label(j as usize)) {
            continue;
        }
        if !idx[1..].iter().all(|&i| neighbors[i as usize].binary_search(&j).is_ok()) {
            continue;
        }
        let candidate = r.with(j);
        let radius = geometry::enclosing_radius(&candidate.points(ds), metric).unwrap_or(f64::INFINITY);
        if geometry::within_budget(radius, epsilon) {
            out.push(candidate);
        }
    }
}

/// Mutation rules for offspring proposals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    /// Add a point of a class absent from the parent.
    Add,
    /// Replace one entry by a new point of a class absent from the rest.
    Swap,
    /// Remove one entry.
    Drop,
}

impl Rule {
    pub const ALL: [Rule; 3] = [Rule::Add, Rule::Swap, Rule::Drop];
}

/// Proposes one offspring of `parent`, or `None` when the move is
/// impossible. Foreign points are drawn uniformly from all points of
/// admissible classes.
pub fn propose_offspring<R: Rng + ?Sized>(
    parent: &Configuration,
    rule: Rule,
    ds: &LabeledDataset,
    rng: &mut R,
) -> Option<Configuration> {
    let idx = parent.indices();
    match rule {
        Rule::Add => {
            if idx.len() >= ds.n_classes() {
                return None;
            }
            let j = draw_foreign(idx, None, ds, rng)?;
            Some(parent.with(j))
        }
        Rule::Swap => {
            let pos = rng.random_range(0..idx.len());
            let rest = parent.without_position(pos);
            let j = draw_foreign(rest.indices(), Some(idx[pos]), ds, rng)?;
            Some(rest.with(j))
        }
        Rule::Drop => {
            if idx.len() < 2 {
                return None;
            }
            let pos = rng.random_range(0..idx.len());
            Some(parent.without_position(pos))
        }
    }
}

/// Uniform point whose class is not used by `members`, excluding `exclude`.
fn draw_foreign<R: Rng + ?Sized>(
    members: &[u32],
    exclude: Option<u32>,
    ds: &LabeledDataset,
    rng: &mut R,
) -> Option<u32> {
    let used: Vec<usize> = members.iter().map(|&i| ds.label(i as usize)).collect();
    let admissible = |j: usize| !used.contains(&ds.label(j)) && Some(j as u32) != exclude;
    let n = ds.len();
    for _ in 0..32 {
        let j = rng.random_range(0..n);
        if admissible(j) {
            return Some(j as u32);
        }
    }
    let pool: Vec<usize> = (0..n).filter(|&j| admissible(j)).collect();
    if pool.is_empty() {
        None
    } else {
        Some(pool[rng.random_range(0..pool.len())] as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneticParams {
    /// Offspring proposed per generation.
    pub samples_per_generation: usize,
    /// Relative weights of add, swap and drop.
    pub rule_weights: [f64; 3],
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
    /// Consecutive generations without insertions before stopping.
    pub stagnation_generations: usize,
    pub seed: u64,
    /// Optional cap on the total number of proposals.
    pub max_proposals: Option<u64>,
    /// Stop once the objective is at or below this value.
    pub target_objective: Option<f64>,
}

impl GeneticParams {
    /// Defaults for a dataset of `n_points`: `s = 2N`, weights 1:1:0,
    /// 300 s, 50 stagnant generations.
    pub fn for_points(n_points: usize) -> Self {
        Self {
            samples_per_generation: (2 * n_points).max(1),
            rule_weights: [1.0, 1.0, 0.0],
            time_limit: 300.0,
            stagnation_generations: 50,
            seed: 0,
            max_proposals: None,
            target_objective: None,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        validate_common(self.samples_per_generation, &self.rule_weights, self.time_limit)
    }
}

pub(crate) fn validate_common(samples: usize, weights: &[f64; 3], time_limit: f64) -> Result<(), SearchError> {
    if samples == 0 {
        return Err(SearchError::InvalidParams("samples per generation must be at least 1".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(SearchError::InvalidParams(format!(
            "rule weights must be nonnegative with a positive sum, got {weights:?}"
        )));
    }
    if time_limit.is_nan() || time_limit <= 0.0 {
        return Err(SearchError::InvalidParams(format!("time limit must be positive, got {time_limit}")));
    }
    Ok(())
}

/// Draws parents uniformly from the LP support and mutates them.
pub(crate) struct Proposer {
    rules: WeightedIndex<f64>,
    pub(crate) rng: ChaCha8Rng,
}

impl Proposer {
    pub(crate) fn new(weights: &[f64; 3], seed: u64) -> Self {
        Self { rules: WeightedIndex::new(weights).expect("validated weights"), rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// `count` proposals; impossible moves, duplicates and pool members are
    /// dropped.
    pub(crate) fn propose(
        &mut self,
        parents: &[&Configuration],
        count: usize,
        ds: &LabeledDataset,
        pool: &ConfigurationPool,
    ) -> Vec<Configuration> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        if parents.is_empty() {
            return out;
        }
        for _ in 0..count {
            let parent = parents[self.rng.random_range(0..parents.len())];
            let rule = Rule::ALL[self.rules.sample(&mut self.rng)];
            if let Some(child) = propose_offspring(parent, rule, ds, &mut self.rng) {
                if !pool.contains(&child) && seen.insert(child.clone()) {
                    out.push(child);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub elapsed_s: f64,
    pub generation: usize,
    pub pool_size: usize,
    pub objective: f64,
    pub risk: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Objectives nonincreasing and risks nondecreasing, up to `tol`.
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.records.windows(2).all(|w| w[1].objective <= w[0].objective + tol && w[1].risk >= w[0].risk - tol)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SearchError> {
        let mut w = csv::Writer::from_writer(out);
        if self.records.is_empty() {
            w.write_record(["elapsed_s", "generation", "pool_size", "objective", "risk"])?;
        }
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, csv_path: impl AsRef<Path>, json_path: impl AsRef<Path>) -> Result<(), SearchError> {
        self.write_csv(std::fs::File::create(csv_path)?)?;
        let json = serde_json::to_string_pretty(self).expect("trace serializes");
        std::fs::write(json_path, json)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Stagnation,
    TimeLimit,
    TargetReached,
    ProposalBudget,
}

#[derive(Debug, Clone)]
pub struct GeneticOutcome {
    pub pool: ConfigurationPool,
    pub solution: LpSolution,
    pub trace: ConvergenceTrace,
    pub stop: StopReason,
    pub proposals: u64,
}

impl GeneticOutcome {
    pub fn risk(&self) -> f64 {
        1.0 - self.solution.objective / self.pool_points() as f64
    }

    fn pool_points(&self) -> usize {
        self.solution.dual.len()
    }
}

/// Solves the LP over every finite-cost pool member.
pub fn solve_pool(pool: &ConfigurationPool, n_points: usize) -> Result<LpSolution, LpError> {
    lp::solve(&pool.problem(n_points))
}

/// `1 - objective / N`.
pub fn risk_of(solution: &LpSolution, n_points: usize) -> f64 {
    1.0 - solution.objective / n_points as f64
}

/// Genetic search under the classical budget `epsilon`, starting from the
/// singletons.
pub fn genetic_search(
    ds: &LabeledDataset,
    metric: Metric,
    epsilon: f64,
    params: &GeneticParams,
) -> Result<GeneticOutcome, SearchError> {
    params.validate()?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(SearchError::InvalidParams(format!("budget must be nonnegative, got {epsilon}")));
    }
    let start = Instant::now();
    let limit = Duration::from_secs_f64(params.time_limit);
    let n = ds.len();
    let mut pool = ConfigurationPool::with_singletons(n);
    let mut solution = solve_pool(&pool, n)?;
    let mut trace = ConvergenceTrace::default();
    let record = |trace: &mut ConvergenceTrace, generation, pool: &ConfigurationPool, sol: &LpSolution| {
        trace.push(TraceRecord {
            elapsed_s: start.elapsed().as_secs_f64(),
            generation,
            pool_size: pool.len(),
            objective: sol.objective,
            risk: risk_of(sol, n),
        })
    };
    record(&mut trace, 0, &pool, &solution);

    let mut proposer = Proposer::new(&params.rule_weights, params.seed);
    let mut proposals = 0u64;
    let mut stagnant = 0usize;
    let mut generation = 0usize;
    let stop = loop {
        if let Some(target) = params.target_objective {
            if solution.objective <= target + 1e-9 * (1.0 + target.abs()) {
                break StopReason::TargetReached;
            }
        }
        if stagnant >= params.stagnation_generations {
            break StopReason::Stagnation;
        }
        if start.elapsed() >= limit {
            break StopReason::TimeLimit;
        }
        let mut count = params.samples_per_generation;
        if let Some(max) = params.max_proposals {
            if proposals >= max {
                break StopReason::ProposalBudget;
            }
            count = count.min((max - proposals) as usize);
        }
        generation += 1;
        proposals += count as u64;

        let parents: Vec<&Configuration> = solution.gamma.iter().map(|(c, _)| c).collect();
        let candidates = proposer.propose(&parents, count, ds, &pool);
        let accepted: Vec<bool> = candidates
            .par_iter()
            .map(|c| {
                geometry::enclosing_radius(&c.points(ds), metric)
                    .map(|r| geometry::within_budget(r, epsilon))
                    .unwrap_or(false)
            })
            .collect();
        let mut inserted = 0;
        for (c, ok) in candidates.into_iter().zip(accepted) {
            if ok && pool.insert(c, 1.0) {
                inserted += 1;
            }
        }
        if inserted == 0 {
            stagnant += 1;
        } else {
            stagnant = 0;
            solution = lp::warm_solve(&pool.problem(n), &solution)?;
        }
        record(&mut trace, generation, &pool, &solution);
    };
    Ok(GeneticOutcome { pool, solution, trace, stop, proposals })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_points() -> LabeledDataset {
        LabeledDataset::from_points(&[vec![0.0, 0.0], vec![2.0, 0.0]], &[0, 1]).unwrap()
    }

    fn three_classes() -> LabeledDataset {
        let pts = vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![0.0, 0.1], vec![5.0, 5.0], vec![5.1, 5.0], vec![9.0, 0.0]];
        LabeledDataset::from_points(&pts, &[0, 1, 2, 0, 1, 2]).unwrap()
    }

    #[test]
    fn tiny_budget_gives_singletons() {
        let ds = three_classes();
        let pool = exhaustive_search(&ds, Metric::Euclidean, 0.01, None).unwrap();
        assert_eq!(pool.len(), ds.len());
        assert!(pool.configurations().all(|c| c.is_singleton()));
    }

    #[test]
    fn two_points_budget_one() {
        let pool = exhaustive_search(&two_points(), Metric::Euclidean, 1.0, None).unwrap();
        assert_eq!(pool.len(), 3);
        assert!(pool.contains(&Configuration::new(vec![0, 1])));
        let pool = exhaustive_search(&two_points(), Metric::Chebyshev, 1.0, None).unwrap();
        assert_eq!(pool.len(), 3);
    }

    #[test]
    fn enumeration_levels() {
        let ds = three_classes();
        let pool = exhaustive_search(&ds, Metric::Euclidean, 0.1, None).unwrap();
        // {0,1},{0,2},{1,2},{0,1,2},{3,4} plus 6 singletons
        assert_eq!(pool.len(), 11);
        assert!(pool.contains(&Configuration::new(vec![0, 1, 2])));
        let counts = pool.counts_by_length();
        assert_eq!(counts[&3], 1);
    }

    #[test]
    fn enumeration_cap() {
        let ds = three_classes();
        let err = exhaustive_search(&ds, Metric::Euclidean, 0.1, Some(8)).unwrap_err();
        assert!(matches!(err, SearchError::EnumerationCap { cap: 8, length: 2 }));
        assert!(exhaustive_search(&ds, Metric::Euclidean, 0.1, Some(11)).is_ok());
    }

    #[test]
    fn drop_and_add_rules() {
        let ds = three_classes();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pair = Configuration::new(vec![0, 1]);
        for _ in 0..20 {
            let child = propose_offspring(&pair, Rule::Drop, &ds, &mut rng).unwrap();
            assert!(child == Configuration::singleton(0) || child == Configuration::singleton(1));
        }
        assert_eq!(propose_offspring(&Configuration::singleton(0), Rule::Drop, &ds, &mut rng), None);
        let full = Configuration::new(vec![0, 1, 2]);
        assert_eq!(propose_offspring(&full, Rule::Add, &ds, &mut rng), None);
        for _ in 0..50 {
            let child = propose_offspring(&pair, Rule::Add, &ds, &mut rng).unwrap();
            assert_eq!(child.len(), 3);
            assert!(child.indices().contains(&2) || child.indices().contains(&5));
        }
    }

    #[test]
    fn swap_rule() {
        let ds = three_classes();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pair = Configuration::new(vec![0, 1]);
        for _ in 0..100 {
            let child = propose_offspring(&pair, Rule::Swap, &ds, &mut rng).unwrap();
            assert_eq!(child.len(), 2);
            assert_ne!(child, pair);
            let labels: HashSet<usize> = child.indices().iter().map(|&i| ds.label(i as usize)).collect();
            assert_eq!(labels.len(), 2);
        }
        // the only point of class 1 cannot be swapped for another of its class
        let ds = LabeledDataset::from_points(&[vec![0.0], vec![1.0]], &[0, 1]).unwrap();
        let pair = Configuration::new(vec![0, 1]);
        assert_eq!(propose_offspring(&pair, Rule::Swap, &ds, &mut rng), None);
    }

    #[test]
    fn genetic_two_points() {
        let ds = two_points();
        let params =
            GeneticParams { rule_weights: [1.0, 0.0, 0.0], stagnation_generations: 3, ..GeneticParams::for_points(2) };
        let out = genetic_search(&ds, Metric::Euclidean, 1.0, &params).unwrap();
        assert!((out.risk() - 0.5).abs() < 1e-12);
        assert_eq!(out.trace.records[1].generation, 1);
        assert!((out.trace.records[1].risk - 0.5).abs() < 1e-12);
        assert_eq!(out.stop, StopReason::Stagnation);
    }

    #[test]
    fn genetic_tiny_budget() {
        let ds = three_classes();
        let params = GeneticParams { stagnation_generations: 5, ..GeneticParams::for_points(6) };
        let out = genetic_search(&ds, Metric::Euclidean, 0.001, &params).unwrap();
        assert_eq!(out.risk(), 0.0);
        assert_eq!(out.pool.len(), 6);
    }

    #[test]
    fn genetic_stops_on_target_and_budget() {
        let ds = three_classes();
        let params = GeneticParams { target_objective: Some(4.0), ..GeneticParams::for_points(6) };
        let out = genetic_search(&ds, Metric::Euclidean, 0.1, &params).unwrap();
        assert_eq!(out.stop, StopReason::TargetReached);
        assert!(out.solution.objective <= 4.0 + 1e-9);

        let params = GeneticParams { max_proposals: Some(7), ..GeneticParams::for_points(6) };
        let out = genetic_search(&ds, Metric::Euclidean, 0.1, &params).unwrap();
        assert_eq!(out.proposals, 7);
        assert_eq!(out.stop, StopReason::ProposalBudget);
    }

    #[test]
    fn invalid_params() {
        let ds = two_points();
        let mut p = GeneticParams::for_points(2);
        p.rule_weights = [0.0; 3];
        assert!(matches!(genetic_search(&ds, Metric::Euclidean, 1.0, &p), Err(SearchError::InvalidParams(_))));
        let mut p = GeneticParams::for_points(2);
        p.samples_per_generation = 0;
        assert!(p.validate().is_err());
        let mut p = GeneticParams::for_points(2);
        p.time_limit = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn trace_csv_header() {
        let mut t = ConvergenceTrace::default();
        t.push(TraceRecord { elapsed_s: 0.5, generation: 0, pool_size: 2, objective: 2.0, risk: 0.0 });
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "elapsed_s,generation,pool_size,objective,risk\n0.5,0,2,2.0,0.0\n");
    }
}
