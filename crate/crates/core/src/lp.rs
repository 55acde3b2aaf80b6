//! Revised simplex for the reduced covering LP
//!
//! ```text
//! minimize   Σ_r c(r) γ(r)
//! subject to Σ_{r ∋ i} γ(r) = b_i   for every point i,   γ ≥ 0
//! ```
//!
//! The constraint matrix is 0/1 with one column per configuration. Singleton
//! columns form an identity, so the all-singleton basis is a feasible start
//! and phase 1 only runs for rows that lack a singleton column. The basis
//! inverse is kept in product form (an eta file) and rebuilt periodically.
//! Pricing is Dantzig's rule with lowest-index tie-breaking, switching to
//! Bland's rule after a run of degenerate pivots. Problems with many more
//! columns than rows are solved by sifting: a working subset is optimized
//! and extended with the most negative reduced-cost columns until none
//! remain.

use std::collections::HashMap;
use std::io::Write;

use thiserror::Error;

use crate::configuration::Configuration;

pub const PIVOT_TOL: f64 = 1e-10;
pub const OPTIMALITY_TOL: f64 = 1e-9;
pub const FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("reduced problem has no columns")]
    NoColumns,
    #[error("problem is infeasible{}", .uncovered_point.map(|p| format!(": point {p} is covered by no column")).unwrap_or_default())]
    Infeasible { uncovered_point: Option<usize> },
    #[error("iteration limit of {0} pivots reached")]
    IterationLimit(usize),
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("unbounded direction found (entering column {0})")]
    Unbounded(usize),
}

/// The LP restricted to a working set of columns. Columns borrow their
/// configurations; the caller keeps the pool alive while solving.
#[derive(Debug, Clone)]
pub struct ReducedProblem<'a> {
    n_points: usize,
    rhs: Vec<f64>,
    columns: Vec<(&'a Configuration, f64)>,
}

impl<'a> ReducedProblem<'a> {
    /// Unit mass per point.
    pub fn new(n_points: usize, columns: Vec<(&'a Configuration, f64)>) -> Self {
        Self { n_points, rhs: vec![1.0; n_points], columns }
    }

    pub fn with_rhs(mut self, rhs: Vec<f64>) -> Self {
        self.rhs = rhs;
        self
    }

    pub fn push(&mut self, column: &'a Configuration, cost: f64) {
        self.columns.push((column, cost));
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn columns(&self) -> &[(&'a Configuration, f64)] {
        &self.columns
    }

    fn validate(&self) -> Result<(), LpError> {
        if self.columns.is_empty() {
            return Err(LpError::NoColumns);
        }
        if self.rhs.len() != self.n_points {
            return Err(LpError::Invalid(format!("rhs has {} entries for {} points", self.rhs.len(), self.n_points)));
        }
        if let Some(b) = self.rhs.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(LpError::Invalid(format!("rhs entries must be positive, got {b}")));
        }
        let mut covered = vec![false; self.n_points];
        for (c, cost) in &self.columns {
            if !cost.is_finite() {
                return Err(LpError::Invalid(format!("column {c} has non-finite cost")));
            }
            if c.is_empty() {
                return Err(LpError::Invalid("empty column".into()));
            }
            for &i in c.indices() {
                let i = i as usize;
                if i >= self.n_points {
                    return Err(LpError::Invalid(format!("column {c} references point {i}")));
                }
                covered[i] = true;
            }
        }
        if let Some(p) = covered.iter().position(|c| !c) {
            return Err(LpError::Infeasible { uncovered_point: Some(p) });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LpOptions {
    /// Pivot cap over all phases and sifting rounds.
    pub max_iterations: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    /// Pivots between refactorizations of the basis.
    pub refactor_every: usize,
    /// Sifting is used when there are more than `sift_factor · N + 1000`
    /// columns.
    pub sift_factor: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { max_iterations: 5_000_000, bland_after: 50, refactor_every: 100, sift_factor: 20 }
    }
}

/// Basic optimal solution with its dual.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    /// Columns with positive weight, sorted by configuration.
    pub gamma: Vec<(Configuration, f64)>,
    /// One potential per point.
    pub dual: Vec<f64>,
    /// `Σ c(r) γ(r)` on the scale of the right-hand side.
    pub objective: f64,
    pub iterations: usize,
    basis: Vec<Configuration>,
}

impl LpSolution {
    pub fn support_size(&self) -> usize {
        self.gamma.len()
    }

    /// `Σ γ(r)`.
    pub fn total_mass(&self) -> f64 {
        self.gamma.iter().map(|(_, w)| w).sum()
    }

    pub fn dual_objective(&self, rhs: &[f64]) -> f64 {
        self.dual.iter().zip(rhs).map(|(u, b)| u * b).sum()
    }

    /// Structural basic columns of the final basis (including degenerate
    /// ones), used to warm-start the next solve.
    pub fn basis(&self) -> &[Configuration] {
        &self.basis
    }

    /// `Σ_{i ∈ r} u_i`.
    pub fn dual_sum(&self, r: &Configuration) -> f64 {
        r.indices().iter().map(|&i| self.dual[i as usize]).sum()
    }

    /// Residuals of the optimality conditions against `rp`.
    pub fn diagnostics(&self, rp: &ReducedProblem<'_>) -> Diagnostics {
        let mut row = vec![0.0; rp.n_points()];
        for (c, w) in &self.gamma {
            for &i in c.indices() {
                row[i as usize] += w;
            }
        }
        let primal_residual = row.iter().zip(rp.rhs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let costs: HashMap<&Configuration, f64> = rp.columns().iter().map(|(c, k)| (*c, *k)).collect();
        let mut dual_violation: f64 = 0.0;
        for (c, k) in rp.columns() {
            dual_violation = dual_violation.max(self.dual_sum(c) - k);
        }
        let mut slackness: f64 = 0.0;
        let mut min_weight = f64::INFINITY;
        for (c, w) in &self.gamma {
            min_weight = min_weight.min(*w);
            if let Some(k) = costs.get(c) {
                slackness = slackness.max((self.dual_sum(c) - k).abs());
            } else {
                slackness = f64::INFINITY;
            }
        }
        Diagnostics {
            support_size: self.support_size(),
            primal_residual,
            dual_violation,
            duality_gap: (self.objective - self.dual_objective(rp.rhs())).abs(),
            complementary_slackness: slackness,
            min_weight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub support_size: usize,
    /// max_i |Σ_{r∋i} γ(r) - b_i|
    pub primal_residual: f64,
    /// max_r (Σ_{i∈r} u_i - c(r)), positive when a dual constraint is violated.
    pub dual_violation: f64,
    pub duality_gap: f64,
    /// max over the support of |Σ_{i∈r} u_i - c(r)|.
    pub complementary_slackness: f64,
    pub min_weight: f64,
}

impl Diagnostics {
    /// The invariants every returned solution satisfies.
    pub fn check(&self, n_points: usize, objective: f64) -> Result<(), String> {
        let n = n_points as f64;
        if self.support_size > n_points {
            return Err(format!("support {} exceeds {n_points}", self.support_size));
        }
        if self.primal_residual > FEASIBILITY_TOL * n {
            return Err(format!("primal residual {}", self.primal_residual));
        }
        if self.dual_violation > FEASIBILITY_TOL {
            return Err(format!("dual violation {}", self.dual_violation));
        }
        if self.duality_gap > FEASIBILITY_TOL * (1.0 + objective.abs()) {
            return Err(format!("duality gap {}", self.duality_gap));
        }
        if self.complementary_slackness > FEASIBILITY_TOL {
            return Err(format!("complementary slackness {}", self.complementary_slackness));
        }
        if self.min_weight < 0.0 {
            return Err(format!("negative weight {}", self.min_weight));
        }
        Ok(())
    }
}

pub fn solve(rp: &ReducedProblem<'_>) -> Result<LpSolution, LpError> {
    solve_with(rp, None, &LpOptions::default())
}

/// Re-solves starting from `previous`'s basis. Basis columns missing from
/// `rp` are replaced by singletons; if the resulting basis is not primal
/// feasible the solve starts cold.
pub fn warm_solve(rp: &ReducedProblem<'_>, previous: &LpSolution) -> Result<LpSolution, LpError> {
    solve_with(rp, Some(previous), &LpOptions::default())
}

pub fn solve_with(
    rp: &ReducedProblem<'_>,
    previous: Option<&LpSolution>,
    opts: &LpOptions,
) -> Result<LpSolution, LpError> {
    rp.validate()?;
    let start: Vec<usize> = match previous {
        Some(prev) if !prev.basis.is_empty() => {
            let wanted: HashMap<&Configuration, ()> = prev.basis.iter().map(|c| (c, ())).collect();
            rp.columns.iter().enumerate().filter(|(_, (c, _))| wanted.contains_key(c)).map(|(j, _)| j).collect()
        }
        _ => Vec::new(),
    };
    let n = rp.n_points;
    let outcome = if rp.columns.len() > opts.sift_factor * n + 1000 {
        sift(rp, &start, opts)?
    } else {
        let all: Vec<usize> = (0..rp.columns.len()).collect();
        let mut simplex = Simplex::new(rp, all);
        simplex.optimize(&start, opts, 0)?
    };
    Ok(outcome.into_solution(rp))
}

struct Outcome {
    /// (global column, value) for basic structural columns.
    basic: Vec<(usize, f64)>,
    dual: Vec<f64>,
    iterations: usize,
}

impl Outcome {
    fn into_solution(self, rp: &ReducedProblem<'_>) -> LpSolution {
        let mut gamma: Vec<(Configuration, f64)> =
            self.basic.iter().filter(|(_, x)| *x > 1e-12).map(|&(j, x)| (rp.columns[j].0.clone(), x)).collect();
        gamma.sort_by(|a, b| a.0.cmp(&b.0));
        let cost: HashMap<&Configuration, f64> =
            self.basic.iter().map(|&(j, _)| (rp.columns[j].0, rp.columns[j].1)).collect();
        let objective = gamma.iter().map(|(c, w)| cost[c] * w).sum();
        let basis = self.basic.iter().map(|&(j, _)| rp.columns[j].0.clone()).collect();
        LpSolution { gamma, dual: self.dual, objective, iterations: self.iterations, basis }
    }
}

fn sift(rp: &ReducedProblem<'_>, start: &[usize], opts: &LpOptions) -> Result<Outcome, LpError> {
    let n = rp.n_points;
    let batch = (2 * n).max(1000);
    let mut in_working = vec![false; rp.columns.len()];
    let mut working = Vec::new();
    for (j, (c, _)) in rp.columns.iter().enumerate() {
        if c.is_singleton() {
            in_working[j] = true;
            working.push(j);
        }
    }
    for &j in start {
        if !in_working[j] {
            in_working[j] = true;
            working.push(j);
        }
    }
    // seed with the cheapest columns per unit of covered mass
    let mut seed: Vec<usize> = (0..rp.columns.len()).filter(|&j| !in_working[j]).collect();
    seed.sort_by(|&a, &b| {
        let ka = rp.columns[a].1 / rp.columns[a].0.len() as f64;
        let kb = rp.columns[b].1 / rp.columns[b].0.len() as f64;
        ka.total_cmp(&kb).then(a.cmp(&b))
    });
    for &j in seed.iter().take(batch) {
        in_working[j] = true;
        working.push(j);
    }

    let mut basis_global: Vec<usize> = start.to_vec();
    let mut iterations = 0;
    loop {
        working.sort_unstable();
        let mut simplex = Simplex::new(rp, working.clone());
        let local_of: HashMap<usize, usize> = working.iter().enumerate().map(|(l, &g)| (g, l)).collect();
        let start_local: Vec<usize> = basis_global.iter().filter_map(|g| local_of.get(g).copied()).collect();
        let out = simplex.optimize(&start_local, opts, iterations)?;
        iterations = out.iterations;

        let mut entering: Vec<(f64, usize)> = rp
            .columns
            .iter()
            .enumerate()
            .filter(|(j, _)| !in_working[*j])
            .filter_map(|(j, (c, k))| {
                let d = k - c.indices().iter().map(|&i| out.dual[i as usize]).sum::<f64>();
                (d < -OPTIMALITY_TOL).then_some((d, j))
            })
            .collect();
        if entering.is_empty() {
            return Ok(out);
        }
        entering.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in entering.iter().take(batch) {
            in_working[j] = true;
            working.push(j);
        }
        basis_global = out.basic.iter().map(|&(j, _)| j).collect();
    }
}

/// Elementary column transformation of the product-form inverse.
struct Eta {
    row: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

#[derive(Default)]
struct EtaFile {
    etas: Vec<Eta>,
}

impl EtaFile {
    fn ftran(&self, v: &mut [f64]) {
        for e in &self.etas {
            let t = v[e.row];
            if t != 0.0 {
                v[e.row] = t * e.pivot;
                for &(i, x) in &e.entries {
                    v[i] += x * t;
                }
            }
        }
    }

    fn btran(&self, y: &mut [f64]) {
        for e in self.etas.iter().rev() {
            let mut s = y[e.row] * e.pivot;
            for &(i, x) in &e.entries {
                s += y[i] * x;
            }
            y[e.row] = s;
        }
    }

    fn push(&mut self, row: usize, column: &[f64]) {
        let a = column[row];
        let entries =
            column.iter().enumerate().filter(|&(i, v)| i != row && v.abs() > 1e-14).map(|(i, v)| (i, -v / a)).collect();
        self.etas.push(Eta { row, pivot: 1.0 / a, entries });
    }
}

const NONE: usize = usize::MAX;
/// Columns kept from a full pricing scan.
const PRICING_LIST: usize = 64;
/// The list is reused while its best reduced cost is at least this
/// fraction of the best one found by the last full scan.
const STALE_FRACTION: f64 = 0.5;

#[derive(Default)]
struct Candidates {
    columns: Vec<usize>,
    reference: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    One,
    Two,
}

/// Simplex over a subset of the problem's columns. Local variable ids are
/// `0..m` for the columns in `global` and `m + r` for the artificial of row
/// `r`.
struct Simplex<'p, 'a> {
    rp: &'p ReducedProblem<'a>,
    global: Vec<usize>,
    // column-major copy of the working columns followed by the artificials
    starts: Vec<usize>,
    rows: Vec<u32>,
    costs: Vec<f64>,
    singleton_of: Vec<usize>,
    n: usize,
    m: usize,
    basis: Vec<usize>,
    position: Vec<usize>,
    x: Vec<f64>,
    factor: EtaFile,
    iterations: usize,
}

impl<'p, 'a> Simplex<'p, 'a> {
    fn new(rp: &'p ReducedProblem<'a>, global: Vec<usize>) -> Self {
        let n = rp.n_points;
        let m = global.len();
        let mut singleton_of = vec![NONE; n];
        for (l, &g) in global.iter().enumerate() {
            let c = rp.columns[g].0;
            if c.is_singleton() {
                let r = c.indices()[0] as usize;
                if singleton_of[r] == NONE {
                    singleton_of[r] = l;
                }
            }
        }
        let mut starts = Vec::with_capacity(m + n + 1);
        let mut rows = Vec::new();
        let mut costs = Vec::with_capacity(m + n);
        starts.push(0);
        for &g in &global {
            let (c, k) = rp.columns[g];
            rows.extend_from_slice(c.indices());
            starts.push(rows.len());
            costs.push(k);
        }
        for r in 0..n as u32 {
            rows.push(r);
            starts.push(rows.len());
            costs.push(0.0);
        }
        Self {
            rp,
            global,
            starts,
            rows,
            costs,
            singleton_of,
            n,
            m,
            basis: vec![NONE; n],
            position: vec![NONE; m + n],
            x: vec![0.0; n],
            factor: EtaFile::default(),
            iterations: 0,
        }
    }

    #[inline]
    fn column(&self, v: usize) -> &[u32] {
        &self.rows[self.starts[v]..self.starts[v + 1]]
    }

    #[inline]
    fn cost(&self, v: usize, phase: Phase) -> f64 {
        match phase {
            Phase::One => (v >= self.m) as u8 as f64,
            Phase::Two => self.costs[v],
        }
    }

    /// Builds a product-form inverse for a basis made of as many of
    /// `candidates` as are independent, completed by singleton or
    /// artificial columns.
    fn reinvert(&mut self, candidates: &[usize]) {
        self.factor.etas.clear();
        self.basis.fill(NONE);
        let mut rest = Vec::new();
        for &v in candidates {
            let col = self.column(v);
            if col.len() == 1 {
                let r = col[0] as usize;
                if self.basis[r] == NONE {
                    self.basis[r] = v;
                }
            } else {
                rest.push(v);
            }
        }
        rest.sort_by_key(|&v| (self.column(v).len(), v));
        let mut work = vec![0.0; self.n];
        for v in rest {
            work.fill(0.0);
            for &i in self.column(v) {
                work[i as usize] = 1.0;
            }
            self.factor.ftran(&mut work);
            let mut best = NONE;
            let mut best_abs = 1e-9;
            for (r, &a) in work.iter().enumerate() {
                if self.basis[r] == NONE && a.abs() > best_abs {
                    best = r;
                    best_abs = a.abs();
                }
            }
            if best != NONE {
                self.factor.push(best, &work);
                self.basis[best] = v;
            }
        }
        // a singleton can only ever be basic in its own row
        for r in 0..self.n {
            if self.basis[r] == NONE {
                self.basis[r] = match self.singleton_of[r] {
                    NONE => self.m + r,
                    s => s,
                };
            }
        }
        self.position.fill(NONE);
        for (r, &v) in self.basis.iter().enumerate() {
            self.position[v] = r;
        }
        self.recompute_x();
    }

    fn recompute_x(&mut self) {
        self.x.copy_from_slice(self.rp.rhs());
        self.factor.ftran(&mut self.x);
        for v in self.x.iter_mut() {
            if *v < 0.0 && *v > -1e-11 {
                *v = 0.0;
            }
        }
    }

    fn duals(&self, phase: Phase) -> Vec<f64> {
        let mut y: Vec<f64> = self.basis.iter().map(|&v| self.cost(v, phase)).collect();
        self.factor.btran(&mut y);
        y
    }

    fn reduced_cost(&self, v: usize, y: &[f64], phase: Phase) -> f64 {
        self.cost(v, phase) - self.column(v).iter().map(|&i| y[i as usize]).sum::<f64>()
    }

    fn optimize(&mut self, start: &[usize], opts: &LpOptions, prior_iterations: usize) -> Result<Outcome, LpError> {
        self.iterations = prior_iterations;
        self.reinvert(start);
        if self.x.iter().any(|&v| v < -FEASIBILITY_TOL) {
            self.reinvert(&[]);
        }
        let needs_phase_one = self.basis.iter().zip(&self.x).any(|(&v, &x)| v >= self.m && x > 1e-12);
        if needs_phase_one {
            self.run(Phase::One, opts)?;
            let infeasibility: f64 =
                self.basis.iter().zip(&self.x).filter(|(&v, _)| v >= self.m).map(|(_, &x)| x.max(0.0)).sum();
            if infeasibility > FEASIBILITY_TOL * self.n as f64 {
                return Err(LpError::Infeasible { uncovered_point: None });
            }
        }
        self.run(Phase::Two, opts)?;
        let dual = self.duals(Phase::Two);
        let basic = self
            .basis
            .iter()
            .zip(&self.x)
            .filter(|(&v, _)| v < self.m)
            .map(|(&v, &x)| (self.global[v], x.max(0.0)))
            .collect();
        Ok(Outcome { basic, dual, iterations: self.iterations })
    }

    fn run(&mut self, phase: Phase, opts: &LpOptions) -> Result<(), LpError> {
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut fresh = false;
        let mut since_refactor = 0usize;
        let mut candidates = Candidates::default();
        let mut a = vec![0.0; self.n];
        loop {
            let y = self.duals(phase);
            let entering = self.price(&y, phase, bland, &mut candidates);
            if entering == NONE {
                if fresh {
                    return Ok(());
                }
                // confirm optimality on a freshly factored basis
                let current = self.basis.clone();
                self.reinvert(&current);
                fresh = true;
                continue;
            }
            if self.iterations >= opts.max_iterations {
                return Err(LpError::IterationLimit(self.iterations));
            }

            a.fill(0.0);
            for &i in self.column(entering) {
                a[i as usize] = 1.0;
            }
            self.factor.ftran(&mut a);

            let leaving = self.ratio_test(&a, phase, bland).ok_or(LpError::Unbounded(entering))?;
            let theta = if phase == Phase::Two && self.basis[leaving] >= self.m {
                0.0
            } else {
                self.x[leaving].max(0.0) / a[leaving]
            };
            if theta != 0.0 {
                for (xi, ai) in self.x.iter_mut().zip(&a) {
                    *xi -= theta * ai;
                }
            }
            self.x[leaving] = theta;
            let out = self.basis[leaving];
            self.position[out] = NONE;
            self.basis[leaving] = entering;
            self.position[entering] = leaving;
            self.factor.push(leaving, &a);
            self.iterations += 1;
            fresh = false;
            since_refactor += 1;

            if theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > opts.bland_after {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
            if since_refactor >= opts.refactor_every {
                let current = self.basis.clone();
                self.reinvert(&current);
                since_refactor = 0;
            }
        }
    }

    /// Entering column, or `NONE` when a full scan finds no negative reduced
    /// cost. Dantzig pricing runs over a short list of the best columns of
    /// the last full scan, which is refreshed once the list is exhausted.
    /// Under Bland's rule the lowest-index improving column is taken.
    fn price(&self, y: &[f64], phase: Phase, bland: bool, candidates: &mut Candidates) -> usize {
        let nonbasic = |v: usize| self.position[v] == NONE;
        if bland {
            return (0..self.m)
                .find(|&v| nonbasic(v) && self.reduced_cost(v, y, phase) < -OPTIMALITY_TOL)
                .unwrap_or(NONE);
        }
        let pick = |list: &[(f64, usize)]| {
            list.iter().copied().min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))).map_or(NONE, |(_, v)| v)
        };
        let partial: Vec<(f64, usize)> = candidates
            .columns
            .iter()
            .filter(|&&v| nonbasic(v))
            .map(|&v| (self.reduced_cost(v, y, phase), v))
            .filter(|&(d, _)| d < -OPTIMALITY_TOL)
            .collect();
        let best_partial = partial.iter().map(|p| p.0).fold(0.0, f64::min);
        if best_partial < 0.0 && best_partial <= STALE_FRACTION * candidates.reference {
            return pick(&partial);
        }
        let mut all: Vec<(f64, usize)> = (0..self.m)
            .filter(|&v| nonbasic(v))
            .map(|v| (self.reduced_cost(v, y, phase), v))
            .filter(|&(d, _)| d < -OPTIMALITY_TOL)
            .collect();
        let keep = PRICING_LIST.min(all.len());
        if keep > 0 && keep < all.len() {
            all.select_nth_unstable_by(keep - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            all.truncate(keep);
        }
        candidates.columns.clear();
        candidates.columns.extend(all.iter().map(|&(_, v)| v));
        candidates.reference = all.iter().map(|p| p.0).fold(0.0, f64::min);
        pick(&all)
    }

    fn ratio_test(&self, a: &[f64], phase: Phase, bland: bool) -> Option<usize> {
        // an artificial still basic in phase two must leave before it can move
        if phase == Phase::Two {
            let art = (0..self.n)
                .filter(|&p| self.basis[p] >= self.m && a[p].abs() > PIVOT_TOL)
                .max_by(|&p, &q| a[p].abs().total_cmp(&a[q].abs()));
            if art.is_some() {
                return art;
            }
        }
        let min_ratio = a
            .iter()
            .zip(&self.x)
            .filter(|(&ap, _)| ap > PIVOT_TOL)
            .map(|(&ap, &xp)| xp.max(0.0) / ap)
            .fold(f64::INFINITY, f64::min);
        if !min_ratio.is_finite() {
            return None;
        }
        let slack = 1e-12 * (1.0 + min_ratio);
        let mut chosen = NONE;
        for p in 0..self.n {
            if a[p] <= PIVOT_TOL || self.x[p].max(0.0) / a[p] > min_ratio + slack {
                continue;
            }
            let better = chosen == NONE || if bland { self.basis[p] < self.basis[chosen] } else { a[p] > a[chosen] };
            if better {
                chosen = p;
            }
        }
        Some(chosen)
    }
}

/// Writes `rp` in CPLEX LP text format, one variable `g<j>` per column.
pub fn write_lp_format<W: Write>(rp: &ReducedProblem<'_>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "\\ reduced covering problem: {} points, {} columns", rp.n_points, rp.columns.len())?;
    for (j, (c, _)) in rp.columns.iter().enumerate() {
        writeln!(out, "\\ g{j} = {c}")?;
    }
    writeln!(out, "Minimize")?;
    write!(out, " obj:")?;
    for (j, (_, k)) in rp.columns.iter().enumerate() {
        if j > 0 && j % 8 == 0 {
            write!(out, "\n   ")?;
        }
        write!(out, " + {k:e} g{j}")?;
    }
    writeln!(out)?;
    writeln!(out, "Subject To")?;
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); rp.n_points];
    for (j, (c, _)) in rp.columns.iter().enumerate() {
        for &i in c.indices() {
            rows[i as usize].push(j);
        }
    }
    for (i, cols) in rows.iter().enumerate() {
        write!(out, " p{i}:")?;
        for (k, j) in cols.iter().enumerate() {
            if k > 0 && k % 12 == 0 {
                write!(out, "\n   ")?;
            }
            write!(out, " + g{j}")?;
        }
        writeln!(out, " = {:e}", rp.rhs[i])?;
    }
    writeln!(out, "End")
}
