use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::time::Instant;

use advrisk::data::{self, DataError};
use advrisk::gencol::{self, Certificate, GencolError, GencolParams};
use advrisk::lp::{self, LpError};
use advrisk::report::{emit_risk_curve, RiskCurve, RiskPoint};
use advrisk::search::{self, ConvergenceTrace, GeneticParams, SearchError, StopReason};
use advrisk::{CostModel, LabeledDataset, LpSolution, Metric, SyntheticSpec};
use clap::ValueEnum;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::{CertifyArgs, Command, DataArgs, ExhaustiveArgs, GenDataArgs, GencolArgs, GeneticArgs, SearchArgs};

const EXIT_OTHER: u8 = 1;
const EXIT_BAD_ARGS: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_LP: u8 = 4;
const EXIT_CAP: u8 = 5;
const EXIT_INTERNAL: u8 = 6;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Display) -> Self {
        Self { code, message: message.to_string() }
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        match e {
            DataError::InvalidSpec(_) => Failure::new(EXIT_BAD_ARGS, e),
            _ => Failure::new(EXIT_DATA, e),
        }
    }
}

impl From<LpError> for Failure {
    fn from(e: LpError) -> Self {
        Failure::new(EXIT_LP, e)
    }
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Self {
        let code = match e {
            SearchError::EnumerationCap { .. } => EXIT_CAP,
            SearchError::Lp(_) => EXIT_LP,
            SearchError::InvalidParams(_) => EXIT_BAD_ARGS,
            _ => EXIT_OTHER,
        };
        Failure::new(code, e)
    }
}

impl From<GencolError> for Failure {
    fn from(e: GencolError) -> Self {
        let code = match e {
            GencolError::EnumerationCap { .. } => EXIT_CAP,
            GencolError::Lp(_) => EXIT_LP,
            GencolError::InvalidParams(_) => EXIT_BAD_ARGS,
            _ => EXIT_OTHER,
        };
        Failure::new(code, e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(EXIT_OTHER, e)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricArg {
    L2,
    Linf,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::L2 => Metric::Euclidean,
            MetricArg::Linf => Metric::Chebyshev,
        }
    }
}

pub fn parse_weights(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected a:b:c, got {s:?}"));
    }
    let mut w = [0.0f64; 3];
    for (slot, p) in w.iter_mut().zip(parts) {
        *slot = p.trim().parse().map_err(|_| format!("not a number: {p:?}"))?;
        if !(slot.is_finite() && *slot >= 0.0) {
            return Err(format!("weights must be nonnegative, got {p}"));
        }
    }
    if w.iter().sum::<f64>() <= 0.0 {
        return Err("at least one weight must be positive".into());
    }
    Ok(w)
}

/// Applies `ADVRISK_THREADS` to the global worker pool.
pub fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("ADVRISK_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        Failure::new(EXIT_BAD_ARGS, format!("ADVRISK_THREADS must be a positive integer, got {value:?}"))
    })?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| Failure::new(EXIT_OTHER, e))
}

pub fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::GenData(a) => gen_data(a),
        Command::Exhaustive(a) => exhaustive(a),
        Command::Genetic(a) => genetic(a),
        Command::GencolW2(a) => gencol_w2(a),
        Command::Certify(a) => certify(a),
    }
}

fn synthetic_spec(args: &crate::SyntheticArgs, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        n_classes: args.classes.unwrap_or(10),
        n_points: args.n,
        center_box: args.center_box,
        sigma: args.sigma,
        seed,
    }
}

fn load_cifar(path: &Path, classes: Option<usize>) -> Result<LabeledDataset, Failure> {
    let k = classes.ok_or_else(|| Failure::new(EXIT_BAD_ARGS, "--cifar needs --classes"))?;
    if !(1..=100).contains(&k) {
        return Err(Failure::new(EXIT_BAD_ARGS, format!("--classes must be in 1..=100, got {k}")));
    }
    Ok(data::load_cifar100_test(path, k)?)
}

fn load(args: &DataArgs, seed: u64) -> Result<(LabeledDataset, serde_json::Value), Failure> {
    let (ds, source) = if let Some(path) = &args.source.data {
        (data::load_csv(path)?, json!({"csv": path}))
    } else if let Some(path) = &args.source.cifar {
        (load_cifar(path, args.synthetic.classes)?, json!({"cifar100": path, "classes": args.synthetic.classes}))
    } else {
        let spec = synthetic_spec(&args.synthetic, seed);
        (data::generate_synthetic(&spec)?, json!({"synthetic": spec}))
    };
    let info = json!({
        "source": source,
        "n_points": ds.len(),
        "dim": ds.dim(),
        "n_classes": ds.n_classes(),
        "class_counts": ds.class_counts(),
    });
    Ok((ds, info))
}

/// Sorted, strictly increasing grid.
fn grid(values: &[f64], name: &str, strictly_positive: bool) -> Result<Vec<f64>, Failure> {
    if values.is_empty() {
        return Err(Failure::new(EXIT_BAD_ARGS, format!("--{name} needs at least one value")));
    }
    for &v in values {
        let ok = v.is_finite() && if strictly_positive { v > 0.0 } else { v >= 0.0 };
        if !ok {
            return Err(Failure::new(EXIT_BAD_ARGS, format!("invalid --{name} value {v}")));
        }
    }
    let mut g = values.to_vec();
    g.sort_by(f64::total_cmp);
    if g.windows(2).any(|w| w[0] == w[1]) {
        return Err(Failure::new(EXIT_BAD_ARGS, format!("--{name} repeats a value")));
    }
    Ok(g)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::new(EXIT_OTHER, e))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Runs `f` on every grid point, sequentially or in parallel. Grid point
/// `k` gets seed `seed + k`.
fn map_grid<T: Send>(
    grid: &[f64],
    parallel: bool,
    f: impl Fn(usize, f64) -> Result<T, Failure> + Sync,
) -> Result<Vec<T>, Failure> {
    if parallel {
        grid.par_iter().enumerate().map(|(k, &p)| f(k, p)).collect()
    } else {
        grid.iter().enumerate().map(|(k, &p)| f(k, p)).collect()
    }
}

fn check_solution(rp: &advrisk::ReducedProblem<'_>, sol: &LpSolution) -> Result<(), Failure> {
    sol.diagnostics(rp)
        .check(rp.n_points(), sol.objective)
        .map_err(|e| Failure::new(EXIT_INTERNAL, format!("LP solution failed verification: {e}")))
}

fn export(
    prefix: &Path,
    param: f64,
    pool: &advrisk::ConfigurationPool,
    n: usize,
    export_pool: bool,
    export_lp: bool,
) -> Result<(), Failure> {
    if export_pool {
        std::fs::write(with_suffix(prefix, &format!("_pool_{param}.json")), pool.to_json())?;
    }
    if export_lp {
        let file = std::fs::File::create(with_suffix(prefix, &format!("_{param}.lp")))?;
        lp::write_lp_format(&pool.problem(n), std::io::BufWriter::new(file))?;
    }
    Ok(())
}

fn save_trace(prefix: &Path, param: f64, trace: &ConvergenceTrace) -> Result<(), Failure> {
    trace.save(
        with_suffix(prefix, &format!("_trace_{param}.csv")),
        with_suffix(prefix, &format!("_trace_{param}.json")),
    )?;
    Ok(())
}

fn finish(
    prefix: &Path,
    command: &str,
    seed: u64,
    dataset: serde_json::Value,
    params: serde_json::Value,
    curve: &RiskCurve,
) -> Result<(), Failure> {
    emit_risk_curve(curve, with_suffix(prefix, "_curve"))?;
    let manifest = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "dataset": dataset,
        "params": params,
        "grid": curve.points.iter().map(|p| p.param).collect::<Vec<_>>(),
    });
    write_json(&with_suffix(prefix, "_manifest.json"), &manifest)
}

fn report_line(name: &str, p: &RiskPoint) {
    let bound = if p.converged { "" } else { " (lower bound, not converged)" };
    println!(
        "{name}={} risk={:.6} objective={:.6} configs={} time={:.2}s{bound}",
        p.param, p.risk, p.objective, p.n_configs, p.elapsed_s
    );
}

fn gen_data(a: GenDataArgs) -> Result<(), Failure> {
    let ds = match &a.cifar {
        Some(path) => load_cifar(path, a.synthetic.classes)?,
        None => data::generate_synthetic(&synthetic_spec(&a.synthetic, a.seed))?,
    };
    ds.save_csv(&a.out)?;
    println!("wrote {} points, {} classes, dimension {} to {}", ds.len(), ds.n_classes(), ds.dim(), a.out.display());
    Ok(())
}

fn exhaustive(a: ExhaustiveArgs) -> Result<(), Failure> {
    let eps = grid(&a.eps, "eps", false)?;
    let (ds, info) = load(&a.data, a.common.seed)?;
    let metric: Metric = a.metric.into();
    let n = ds.len();
    let prefix = &a.common.out;
    // pools grow with the budget, so each sequential solve starts from the
    // previous optimal basis
    let one = |e: f64, previous: Option<&LpSolution>| -> Result<(RiskPoint, LpSolution), Failure> {
        let t = Instant::now();
        let pool = search::exhaustive_search(&ds, metric, e, a.max_configs)?;
        let rp = pool.problem(n);
        let sol = match previous {
            Some(p) => lp::warm_solve(&rp, p)?,
            None => lp::solve(&rp)?,
        };
        check_solution(&rp, &sol)?;
        export(prefix, e, &pool, n, a.export_pool, a.export_lp)?;
        let point = RiskPoint {
            param: e,
            risk: search::risk_of(&sol, n),
            objective: sol.objective,
            n_configs: pool.len(),
            n_configs_by_length: RiskPoint::format_lengths(&pool.counts_by_length()),
            elapsed_s: t.elapsed().as_secs_f64(),
            converged: true,
        };
        Ok((point, sol))
    };
    let points = if a.common.parallel_grid {
        map_grid(&eps, true, |_, e| one(e, None).map(|(p, _)| p))?
    } else {
        let mut previous: Option<LpSolution> = None;
        let mut points = Vec::new();
        for &e in &eps {
            let (p, sol) = one(e, previous.as_ref())?;
            points.push(p);
            previous = Some(sol);
        }
        points
    };
    let curve = RiskCurve::new(points);
    curve.points.iter().for_each(|p| report_line("eps", p));
    let params = json!({"metric": metric, "eps": eps, "max_configs": a.max_configs});
    finish(prefix, "exhaustive", a.common.seed, info, params, &curve)?;
    if let Some((lo, hi)) = curve.first_decrease(1e-9) {
        return Err(Failure::new(
            EXIT_INTERNAL,
            format!("risk decreased between eps={lo} and eps={hi}; classical risk must be nondecreasing"),
        ));
    }
    Ok(())
}

fn genetic_params(s: &SearchArgs, n: usize, seed: u64, max_proposals: Option<u64>) -> GeneticParams {
    GeneticParams {
        samples_per_generation: s.samples.unwrap_or(2 * n),
        rule_weights: s.rule_weights,
        time_limit: s.time_limit,
        stagnation_generations: s.stagnation,
        seed,
        max_proposals,
        target_objective: None,
    }
}

fn gencol_params(s: &SearchArgs, tau: f64, beta: usize, n: usize, seed: u64) -> GencolParams {
    GencolParams {
        beta,
        samples_per_generation: s.samples.unwrap_or(n),
        time_limit: s.time_limit,
        stagnation_generations: s.stagnation,
        seed,
        rule_weights: s.rule_weights,
        ..GencolParams::new(tau, n)
    }
}

fn genetic(a: GeneticArgs) -> Result<(), Failure> {
    let eps = grid(&a.eps, "eps", false)?;
    let (ds, info) = load(&a.data, a.common.seed)?;
    let metric: Metric = a.metric.into();
    let n = ds.len();
    let prefix = &a.common.out;
    let base = genetic_params(&a.search, n, a.common.seed, a.max_proposals);
    base.validate()?;
    let points = map_grid(&eps, a.common.parallel_grid, |k, e| {
        let params = GeneticParams { seed: base.seed.wrapping_add(k as u64), ..base.clone() };
        let out = search::genetic_search(&ds, metric, e, &params)?;
        check_solution(&out.pool.problem(n), &out.solution)?;
        save_trace(prefix, e, &out.trace)?;
        export(prefix, e, &out.pool, n, a.export_pool, a.export_lp)?;
        Ok(RiskPoint {
            param: e,
            risk: out.risk(),
            objective: out.solution.objective,
            n_configs: out.pool.len(),
            n_configs_by_length: RiskPoint::format_lengths(&out.pool.counts_by_length()),
            elapsed_s: out.trace.last().map_or(0.0, |r| r.elapsed_s),
            converged: matches!(out.stop, StopReason::Stagnation | StopReason::TargetReached),
        })
    })?;
    let curve = RiskCurve::new(points);
    curve.points.iter().for_each(|p| report_line("eps", p));
    let params = json!({"metric": metric, "eps": eps, "search": base});
    finish(prefix, "genetic", a.common.seed, info, params, &curve)
}

fn gencol_w2(a: GencolArgs) -> Result<(), Failure> {
    let taus = grid(&a.tau, "tau", true)?;
    let (ds, info) = load(&a.data, a.common.seed)?;
    let n = ds.len();
    let prefix = &a.common.out;
    gencol_params(&a.search, taus[0], a.beta, n, a.common.seed).validate()?;
    let points = map_grid(&taus, a.common.parallel_grid, |k, tau| {
        let params = gencol_params(&a.search, tau, a.beta, n, a.common.seed.wrapping_add(k as u64));
        let out = gencol::gencol_w2(&ds, &params)?;
        check_solution(&out.pool.problem(n), &out.solution)?;
        save_trace(prefix, tau, &out.trace)?;
        write_json(&with_suffix(prefix, &format!("_w2_{tau}.json")), &out.report)?;
        export(prefix, tau, &out.pool, n, a.export_pool, a.export_lp)?;
        Ok(RiskPoint {
            param: tau,
            risk: out.report.corrected_risk,
            objective: out.solution.objective,
            n_configs: out.pool.len(),
            n_configs_by_length: RiskPoint::format_lengths(&out.pool.counts_by_length()),
            elapsed_s: out.report.elapsed_s,
            converged: out.report.converged,
        })
    })?;
    let curve = RiskCurve::new(points);
    curve.points.iter().for_each(|p| report_line("tau", p));
    let params = json!({
        "tau": taus,
        "search": gencol_params(&a.search, taus[0], a.beta, n, a.common.seed),
    });
    finish(prefix, "gencol-w2", a.common.seed, info, params, &curve)
}

#[derive(Serialize)]
struct CertificateRow {
    param: f64,
    kind: &'static str,
    converged: bool,
    #[serde(flatten)]
    certificate: Certificate,
}

fn certify(a: CertifyArgs) -> Result<(), Failure> {
    let w2 = !a.tau.is_empty();
    let values = if w2 { grid(&a.tau, "tau", true)? } else { grid(&a.eps, "eps", false)? };
    let (ds, info) = load(&a.data, a.common.seed)?;
    let n = ds.len();
    let needed = gencol::count_feasible_configurations(&ds);
    if needed > a.max_configs as f64 {
        return Err(Failure::new(
            EXIT_CAP,
            format!("dataset has {needed} feasible configurations, above --max-configs {}", a.max_configs),
        ));
    }
    let metric: Metric = a.metric.into();
    let prefix = &a.common.out;
    let rows = map_grid(&values, a.common.parallel_grid, |k, p| {
        let seed = a.common.seed.wrapping_add(k as u64);
        let t = Instant::now();
        let (pool, sol, model, converged, trace, risk) = if w2 {
            let out = gencol::gencol_w2(&ds, &gencol_params(&a.search, p, a.beta, n, seed))?;
            let model = CostModel::w2(p).map_err(|e| Failure::new(EXIT_BAD_ARGS, e))?;
            (out.pool, out.solution, model, out.report.converged, out.trace, out.report.corrected_risk)
        } else {
            let out = search::genetic_search(&ds, metric, p, &genetic_params(&a.search, n, seed, None))?;
            let model = CostModel::classical(p, metric).map_err(|e| Failure::new(EXIT_BAD_ARGS, e))?;
            let risk = out.risk();
            (out.pool, out.solution, model, out.stop == StopReason::Stagnation, out.trace, risk)
        };
        check_solution(&pool.problem(n), &sol)?;
        save_trace(prefix, p, &trace)?;
        let certificate = gencol::certify_optimality(&sol, &ds, &model, a.max_configs)?;
        let point = RiskPoint {
            param: p,
            risk,
            objective: sol.objective,
            n_configs: pool.len(),
            n_configs_by_length: RiskPoint::format_lengths(&pool.counts_by_length()),
            elapsed_s: t.elapsed().as_secs_f64(),
            converged,
        };
        let kind = if w2 { "w2" } else { "classical" };
        Ok((point, CertificateRow { param: p, kind, converged, certificate }))
    })?;
    let (points, certs): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    for c in &certs {
        println!(
            "{}={} optimal={} max_violation={:.3e} checked={}",
            if w2 { "tau" } else { "eps" },
            c.param,
            c.certificate.is_optimal,
            c.certificate.max_violation,
            c.certificate.checked
        );
    }
    write_json(&with_suffix(prefix, "_certificates.json"), &certs)?;
    let curve = RiskCurve::new(points);
    let params = json!({"kind": if w2 { "w2" } else { "classical" }, "grid": values, "max_configs": a.max_configs});
    finish(prefix, "certify", a.common.seed, info, params, &curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights() {
        assert_eq!(parse_weights("1:1:0").unwrap(), [1.0, 1.0, 0.0]);
        assert!(parse_weights("1:1").is_err());
        assert!(parse_weights("0:0:0").is_err());
        assert!(parse_weights("1:-1:0").is_err());
        assert!(parse_weights("a:1:0").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(grid(&[0.2, 0.1], "eps", false).unwrap(), vec![0.1, 0.2]);
        assert_eq!(grid(&[0.1, 0.1], "eps", false).unwrap_err().code, EXIT_BAD_ARGS);
        assert!(grid(&[0.0], "tau", true).is_err());
        assert!(grid(&[0.0], "eps", false).is_ok());
        assert!(grid(&[], "eps", false).is_err());
    }

    #[test]
    fn suffixes() {
        assert_eq!(with_suffix(Path::new("out/run"), "_curve.csv"), PathBuf::from("out/run_curve.csv"));
    }
}
