//! Configurations (label-distinct index sets), their cost coefficients and
//! the deduplicated working pool of LP columns.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use indexmap::IndexMap;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::LabeledDataset;
use crate::geometry::{self, GeometryError, Metric};
use crate::lp::ReducedProblem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("point index {index} out of range for {len} points")]
    IndexOutOfRange { index: u32, len: usize },
    #[error("configuration {0} repeats a class")]
    Infeasible(Configuration),
    #[error("empty configuration")]
    Empty,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid cost model: {0}")]
    InvalidModel(String),
    #[error("malformed pool snapshot: {0}")]
    Snapshot(String),
}

/// Sorted, duplicate-free list of point indices. Equality is list equality,
/// so permutations of the same set compare equal once constructed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<u32>", into = "Vec<u32>")]
pub struct Configuration(Box<[u32]>);

impl Configuration {
    pub fn new(indices: impl Into<Vec<u32>>) -> Self {
        let mut v = indices.into();
        v.sort_unstable();
        v.dedup();
        Self(v.into_boxed_slice())
    }

    pub fn singleton(i: u32) -> Self {
        Self(Box::new([i]))
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.0.len() == 1
    }

    pub fn contains(&self, i: u32) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// New configuration with `i` added.
    pub fn with(&self, i: u32) -> Self {
        let mut v = self.0.to_vec();
        if let Err(pos) = v.binary_search(&i) {
            v.insert(pos, i);
        }
        Self(v.into_boxed_slice())
    }

    /// New configuration with the entry at `pos` removed.
    pub fn without_position(&self, pos: usize) -> Self {
        let mut v = self.0.to_vec();
        v.remove(pos);
        Self(v.into_boxed_slice())
    }

    pub fn points<'d>(&self, ds: &'d LabeledDataset) -> Vec<&'d [f64]> {
        self.0.iter().map(|&i| ds.point(i as usize)).collect()
    }
}

impl From<Vec<u32>> for Configuration {
    fn from(v: Vec<u32>) -> Self {
        Self::new(v)
    }
}

impl From<Configuration> for Vec<u32> {
    fn from(c: Configuration) -> Self {
        c.0.into_vec()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

fn check_range(r: &Configuration, ds: &LabeledDataset) -> Result<(), ConfigError> {
    if r.is_empty() {
        return Err(ConfigError::Empty);
    }
    match r.indices().last() {
        Some(&last) if last as usize >= ds.len() => Err(ConfigError::IndexOutOfRange { index: last, len: ds.len() }),
        _ => Ok(()),
    }
}

/// Labels pairwise distinct.
pub fn is_feasible(r: &Configuration, ds: &LabeledDataset) -> Result<bool, ConfigError> {
    check_range(r, ds)?;
    let idx = r.indices();
    for (k, &a) in idx.iter().enumerate() {
        let la = ds.label(a as usize);
        if idx[k + 1..].iter().any(|&b| ds.label(b as usize) == la) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostKind {
    /// Cost 1 when the enclosing-ball radius is at most `epsilon`, else +∞.
    ClassicalBudget { epsilon: f64 },
    /// Cost `1 + (1/τ²) Σ |x_i - x̄|²`.
    W2Penalty { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub kind: CostKind,
    pub metric: Metric,
}

impl CostModel {
    pub fn classical(epsilon: f64, metric: Metric) -> Result<Self, ConfigError> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(ConfigError::InvalidModel(format!("budget must be nonnegative, got {epsilon}")));
        }
        Ok(Self { kind: CostKind::ClassicalBudget { epsilon }, metric })
    }

    /// The W2 penalty is only defined for the Euclidean metric.
    pub fn w2(tau: f64) -> Result<Self, ConfigError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(ConfigError::InvalidModel(format!("tau must be positive, got {tau}")));
        }
        Ok(Self { kind: CostKind::W2Penalty { tau }, metric: Metric::Euclidean })
    }

    /// Cost without the feasibility check.
    pub fn evaluate(&self, r: &Configuration, ds: &LabeledDataset) -> Result<f64, ConfigError> {
        if r.is_singleton() {
            return Ok(1.0);
        }
        let pts = r.points(ds);
        match self.kind {
            CostKind::ClassicalBudget { epsilon } => {
                let radius = geometry::enclosing_radius(&pts, self.metric)?;
                Ok(if geometry::within_budget(radius, epsilon) { 1.0 } else { f64::INFINITY })
            }
            CostKind::W2Penalty { tau } => {
                if self.metric != Metric::Euclidean {
                    return Err(GeometryError::UnsupportedMetric(self.metric).into());
                }
                Ok(1.0 + geometry::w2_penalty(&pts, tau)?)
            }
        }
    }
}

/// Cost coefficient of a feasible configuration.
pub fn cost(r: &Configuration, ds: &LabeledDataset, model: &CostModel) -> Result<f64, ConfigError> {
    if !is_feasible(r, ds)? {
        return Err(ConfigError::Infeasible(r.clone()));
    }
    model.evaluate(r, ds)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolEntry {
    pub cost: f64,
    /// Insertion stamp, increasing over the pool's lifetime.
    pub inserted: u64,
}

/// One row of the JSON pool snapshot. Infinite costs serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub indices: Vec<u32>,
    pub cost: Option<f64>,
}

/// The working set Ω: configurations with cached costs, kept in insertion
/// order and free of duplicates.
#[derive(Debug, Clone, Default)]
pub struct ConfigurationPool {
    entries: IndexMap<Configuration, PoolEntry>,
    next_stamp: u64,
}

impl ConfigurationPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// All `n` singletons at cost 1.
    pub fn with_singletons(n: usize) -> Self {
        let mut pool = Self::new();
        pool.entries.reserve(n);
        for i in 0..n as u32 {
            pool.insert(Configuration::singleton(i), 1.0);
        }
        pool
    }

    /// Returns `false` when `r` is already present; the cached cost is kept.
    pub fn insert(&mut self, r: Configuration, cost: f64) -> bool {
        use indexmap::map::Entry;
        match self.entries.entry(r) {
            Entry::Occupied(_) => false,
            Entry::Vacant(v) => {
                v.insert(PoolEntry { cost, inserted: self.next_stamp });
                self.next_stamp += 1;
                true
            }
        }
    }

    pub fn contains(&self, r: &Configuration) -> bool {
        self.entries.contains_key(r)
    }

    pub fn cost_of(&self, r: &Configuration) -> Option<f64> {
        self.entries.get(r).map(|e| e.cost)
    }

    pub fn entry(&self, r: &Configuration) -> Option<&PoolEntry> {
        self.entries.get(r)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Configuration, f64)> {
        self.entries.iter().map(|(c, e)| (c, e.cost))
    }

    pub fn configurations(&self) -> impl Iterator<Item = &Configuration> {
        self.entries.keys()
    }

    /// Removes up to `n_remove` members that are neither in `active` nor
    /// singletons, chosen uniformly at random. Survivors keep their order.
    pub fn trim_inactive<R: Rng + ?Sized>(
        &mut self,
        active: &HashSet<Configuration>,
        n_remove: usize,
        rng: &mut R,
    ) -> usize {
        if n_remove == 0 {
            return 0;
        }
        let eligible: Vec<usize> = self
            .entries
            .keys()
            .enumerate()
            .filter(|(_, c)| !c.is_singleton() && !active.contains(*c))
            .map(|(k, _)| k)
            .collect();
        let take = n_remove.min(eligible.len());
        if take == 0 {
            return 0;
        }
        let mut victim = vec![false; self.entries.len()];
        for k in rand::seq::index::sample(rng, eligible.len(), take) {
            victim[eligible[k]] = true;
        }
        let mut pos = 0;
        self.entries.retain(|_, _| {
            let keep = !victim[pos];
            pos += 1;
            keep
        });
        take
    }

    /// Reduced LP over every finite-cost member, in pool order.
    pub fn problem(&self, n_points: usize) -> ReducedProblem<'_> {
        ReducedProblem::new(
            n_points,
            self.entries.iter().filter(|(_, e)| e.cost.is_finite()).map(|(c, e)| (c, e.cost)).collect(),
        )
    }

    /// Number of members per configuration length.
    pub fn counts_by_length(&self) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for c in self.entries.keys() {
            *counts.entry(c.len()).or_insert(0) += 1;
        }
        counts
    }

    pub fn snapshot(&self) -> Vec<SnapshotEntry> {
        self.entries
            .iter()
            .map(|(c, e)| SnapshotEntry { indices: c.indices().to_vec(), cost: e.cost.is_finite().then_some(e.cost) })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.snapshot()).expect("snapshot serializes")
    }

    pub fn from_snapshot(entries: &[SnapshotEntry]) -> Result<Self, ConfigError> {
        let mut pool = Self::new();
        for e in entries {
            if e.indices.is_empty() {
                return Err(ConfigError::Snapshot("empty configuration".into()));
            }
            pool.insert(Configuration::new(e.indices.clone()), e.cost.unwrap_or(f64::INFINITY));
        }
        Ok(pool)
    }

    pub fn from_json(json: &str) -> Result<Self, ConfigError> {
        let entries: Vec<SnapshotEntry> =
            serde_json::from_str(json).map_err(|e| ConfigError::Snapshot(e.to_string()))?;
        Self::from_snapshot(&entries)
    }
}
