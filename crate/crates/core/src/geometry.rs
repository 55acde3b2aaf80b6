//! Metric kernels on feature vectors.
//!
//! Smallest enclosing balls decide classical feasibility of a configuration,
//! the Fréchet mean and the squared spread around it give the W2 penalty.
//! Everything here is a pure function over borrowed slices.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest ambient dimension handled by the exact move-to-front recursion.
pub const EXACT_MAX_DIM: usize = 16;

/// Relative accuracy of the iterative enclosing-ball solver used above
/// [`EXACT_MAX_DIM`].
pub const REL_TOL_RADIUS: f64 = 1e-6;

/// Ground metric on the feature space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// L2 norm.
    Euclidean,
    /// L∞ norm.
    Chebyshev,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Euclidean => write!(f, "l2"),
            Metric::Chebyshev => write!(f, "linf"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("empty point set")]
    Empty,
    #[error("points must have at least one coordinate")]
    ZeroDimension,
    #[error("operation requires the Euclidean metric, got {0}")]
    UnsupportedMetric(Metric),
    #[error("tau must be positive and finite, got {0}")]
    InvalidTau(f64),
}

/// A closed ball `{ x : d(x, center) <= radius }`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, p: &[f64], metric: Metric) -> bool {
        raw_distance(&self.center, p, metric) <= self.radius + contain_tolerance(self.radius)
    }
}

/// Slack used by containment checks.
pub fn contain_tolerance(radius: f64) -> f64 {
    1e-9 * (1.0 + radius)
}

/// Classical feasibility test `radius <= eps`, with float slack.
pub fn within_budget(radius: f64, epsilon: f64) -> bool {
    radius <= epsilon + 1e-9 * (1.0 + epsilon)
}

pub fn distance(a: &[f64], b: &[f64], metric: Metric) -> Result<f64, GeometryError> {
    if a.len() != b.len() {
        return Err(GeometryError::DimensionMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(GeometryError::ZeroDimension);
    }
    Ok(raw_distance(a, b, metric))
}

fn raw_distance(a: &[f64], b: &[f64], metric: Metric) -> f64 {
    match metric {
        Metric::Euclidean => squared_distance(a, b).sqrt(),
        Metric::Chebyshev => a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
    }
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_points<P: AsRef<[f64]>>(points: &[P]) -> Result<usize, GeometryError> {
    let first = points.first().ok_or(GeometryError::Empty)?.as_ref().len();
    if first == 0 {
        return Err(GeometryError::ZeroDimension);
    }
    for p in points {
        if p.as_ref().len() != first {
            return Err(GeometryError::DimensionMismatch(first, p.as_ref().len()));
        }
    }
    Ok(first)
}

/// Smallest enclosing ball of `points` under `metric`.
///
/// L∞ balls are cubes, so the answer is the bounding-box midpoint with half
/// the largest span. For L2 the move-to-front recursion is exact up to
/// rounding in dimension at most [`EXACT_MAX_DIM`]; above that an away-step
/// Frank–Wolfe iteration on the dual stops once the radius is certified
/// within [`REL_TOL_RADIUS`]. In both cases the returned radius is the
/// largest distance from the returned center, so every input point lies in
/// the ball.
pub fn enclosing_ball<P: AsRef<[f64]>>(points: &[P], metric: Metric) -> Result<Ball, GeometryError> {
    let dim = check_points(points)?;
    let pts: Vec<&[f64]> = points.iter().map(|p| p.as_ref()).collect();
    Ok(match metric {
        Metric::Chebyshev => chebyshev_ball(&pts, dim),
        Metric::Euclidean => match pts.len() {
            1 => Ball { center: pts[0].to_vec(), radius: 0.0 },
            2 => {
                let center: Vec<f64> = pts[0].iter().zip(pts[1]).map(|(a, b)| 0.5 * (a + b)).collect();
                let radius = squared_distance(&center, pts[0]).sqrt().max(squared_distance(&center, pts[1]).sqrt());
                Ball { center, radius }
            }
            _ if dim <= EXACT_MAX_DIM => welzl_ball(&pts, dim),
            _ => frank_wolfe_ball(&pts, REL_TOL_RADIUS),
        },
    })
}

/// Radius of [`enclosing_ball`].
pub fn enclosing_radius<P: AsRef<[f64]>>(points: &[P], metric: Metric) -> Result<f64, GeometryError> {
    if metric == Metric::Chebyshev {
        let dim = check_points(points)?;
        let mut half_span: f64 = 0.0;
        for k in 0..dim {
            let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                let v = p.as_ref()[k];
                (lo.min(v), hi.max(v))
            });
            half_span = half_span.max(0.5 * (hi - lo));
        }
        return Ok(half_span);
    }
    enclosing_ball(points, metric).map(|b| b.radius)
}

fn chebyshev_ball(pts: &[&[f64]], dim: usize) -> Ball {
    let mut center = vec![0.0; dim];
    let mut radius: f64 = 0.0;
    for k in 0..dim {
        let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[k]), hi.max(p[k])));
        center[k] = 0.5 * (lo + hi);
        radius = radius.max(0.5 * (hi - lo));
    }
    Ball { center, radius }
}

fn finalize(pts: &[&[f64]], center: Vec<f64>) -> Ball {
    let radius = pts.iter().map(|p| squared_distance(&center, p)).fold(0.0, f64::max).sqrt();
    Ball { center, radius }
}

/// Move-to-front variant of Welzl's recursion. Boundary sets are kept
/// affinely independent: a point whose circumball with the current support
/// is singular is skipped, and the final radius is recomputed from the
/// center so containment holds regardless.
pub(crate) fn welzl_ball(pts: &[&[f64]], dim: usize) -> Ball {
    let mut order: Vec<usize> = (0..pts.len()).collect();
    let mut support = Vec::with_capacity(dim + 1);
    let ball = move_to_front(pts, &mut order, pts.len(), &mut support, None, dim);
    match ball {
        Some(b) => finalize(pts, b.center),
        None => Ball { center: pts[0].to_vec(), radius: 0.0 },
    }
}

fn inside_exact(ball: &Option<Ball>, p: &[f64]) -> bool {
    match ball {
        None => false,
        Some(b) => {
            let r2 = b.radius * b.radius;
            squared_distance(&b.center, p) <= r2 + 1e-12 * (1.0 + r2)
        }
    }
}

fn move_to_front(
    pts: &[&[f64]],
    order: &mut [usize],
    end: usize,
    support: &mut Vec<usize>,
    mut ball: Option<Ball>,
    dim: usize,
) -> Option<Ball> {
    if support.len() == dim + 1 {
        return ball;
    }
    for i in 0..end {
        let p = order[i];
        if inside_exact(&ball, pts[p]) {
            continue;
        }
        support.push(p);
        match circumball(pts, support) {
            Some(boundary) => {
                ball = move_to_front(pts, order, i, support, Some(boundary), dim);
                support.pop();
                order[..=i].rotate_right(1);
            }
            None => {
                support.pop();
            }
        }
    }
    ball
}

/// Ball through all support points with its center in their affine hull.
fn circumball(pts: &[&[f64]], support: &[usize]) -> Option<Ball> {
    let p0 = pts[support[0]];
    let k = support.len() - 1;
    if k == 0 {
        return Some(Ball { center: p0.to_vec(), radius: 0.0 });
    }
    let offsets: Vec<Vec<f64>> =
        support[1..].iter().map(|&s| pts[s].iter().zip(p0).map(|(a, b)| a - b).collect()).collect();
    // 2 V Vᵀ λ = |v_j|²
    let mut m = vec![vec![0.0; k + 1]; k];
    let mut scale: f64 = 0.0;
    for j in 0..k {
        for l in 0..k {
            m[j][l] = 2.0 * dot(&offsets[j], &offsets[l]);
        }
        m[j][k] = dot(&offsets[j], &offsets[j]);
        scale = scale.max(m[j][j]);
    }
    let lambda = solve_dense(m, 1e-12 * scale.max(f64::MIN_POSITIVE))?;
    let mut center = p0.to_vec();
    for (l, v) in offsets.iter().enumerate() {
        for (c, x) in center.iter_mut().zip(v) {
            *c += lambda[l] * x;
        }
    }
    let radius = squared_distance(&center, p0).sqrt();
    Some(Ball { center, radius })
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve_dense(mut m: Vec<Vec<f64>>, pivot_tol: f64) -> Option<Vec<f64>> {
    let k = m.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() <= pivot_tol {
            return None;
        }
        m.swap(col, piv);
        for row in col + 1..k {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                let (upper, lower) = m.split_at_mut(row);
                for (v, &p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                    *v -= f * p;
                }
            }
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| m[row][c] * x[c]).sum();
        x[row] = (m[row][k] - s) / m[row][row];
    }
    Some(x)
}

/// Away-step Frank–Wolfe on the dual of the enclosing-ball problem, written
/// entirely in terms of the Gram matrix of the (centered) points so the
/// per-iteration cost does not depend on the ambient dimension.
pub(crate) fn frank_wolfe_ball(pts: &[&[f64]], rel_tol: f64) -> Ball {
    let n = pts.len();
    let dim = pts[0].len();
    let mut mean = vec![0.0; dim];
    for p in pts {
        for (m, x) in mean.iter_mut().zip(*p) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().zip(&mean).map(|(x, m)| x - m).collect()).collect();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let g = dot(&centered[i], &centered[j]);
            gram[i * n + j] = g;
            gram[j * n + i] = g;
        }
    }
    let g = |i: usize, j: usize| gram[i * n + j];

    let far_from =
        |a: usize| (0..n).max_by(|&x, &y| (g(x, x) - 2.0 * g(x, a)).total_cmp(&(g(y, y) - 2.0 * g(y, a)))).unwrap();
    let a = far_from(0);
    let b = far_from(a);
    let mut lam = vec![0.0; n];
    lam[a] += 0.5;
    lam[b] += 0.5;
    let mut g_lam: Vec<f64> = (0..n).map(|i| 0.5 * (g(i, a) + g(i, b))).collect();

    let tol_sq = (1.0 + rel_tol) * (1.0 + rel_tol);
    let mut dist2 = vec![0.0; n];
    for _ in 0..1_000_000 {
        let quad: f64 = lam.iter().zip(&g_lam).map(|(l, gl)| l * gl).sum();
        for k in 0..n {
            dist2[k] = (g(k, k) - 2.0 * g_lam[k] + quad).max(0.0);
        }
        let phi: f64 = lam.iter().zip(&dist2).map(|(l, d)| l * d).sum();
        let (kmax, dmax) = dist2.iter().copied().enumerate().max_by(|x, y| x.1.total_cmp(&y.1)).unwrap();
        if phi <= f64::MIN_POSITIVE || dmax <= tol_sq * phi {
            break;
        }
        let delta_plus = dmax / phi - 1.0;
        let (jmin, dmin) = dist2
            .iter()
            .copied()
            .enumerate()
            .filter(|&(j, _)| lam[j] > 0.0)
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        let delta_minus = 1.0 - dmin / phi;
        if delta_plus >= delta_minus || lam[jmin] >= 1.0 {
            let alpha = delta_plus / (2.0 * (1.0 + delta_plus));
            for i in 0..n {
                lam[i] *= 1.0 - alpha;
                g_lam[i] = (1.0 - alpha) * g_lam[i] + alpha * g(i, kmax);
            }
            lam[kmax] += alpha;
        } else {
            let drop_step = lam[jmin] / (1.0 - lam[jmin]);
            let alpha = (delta_minus / (2.0 * (1.0 - delta_minus))).min(drop_step);
            for i in 0..n {
                lam[i] *= 1.0 + alpha;
                g_lam[i] = (1.0 + alpha) * g_lam[i] - alpha * g(i, jmin);
            }
            lam[jmin] -= alpha;
            if alpha >= drop_step || lam[jmin] < 1e-300 {
                lam[jmin] = 0.0;
            }
        }
    }

    let mut center = mean;
    for (l, p) in lam.iter().zip(&centered) {
        if *l != 0.0 {
            for (c, x) in center.iter_mut().zip(p) {
                *c += l * x;
            }
        }
    }
    finalize(pts, center)
}

/// Minimizer of the summed squared distances: the arithmetic mean.
pub fn frechet_mean<P: AsRef<[f64]>>(points: &[P], metric: Metric) -> Result<Vec<f64>, GeometryError> {
    if metric != Metric::Euclidean {
        return Err(GeometryError::UnsupportedMetric(metric));
    }
    let dim = check_points(points)?;
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, x) in mean.iter_mut().zip(p.as_ref()) {
            *m += x;
        }
    }
    let n = points.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

/// `(1/τ²) Σ |x_i - x̄|²` with `x̄` the Euclidean Fréchet mean.
pub fn w2_penalty<P: AsRef<[f64]>>(points: &[P], tau: f64) -> Result<f64, GeometryError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(GeometryError::InvalidTau(tau));
    }
    let mean = frechet_mean(points, Metric::Euclidean)?;
    let spread: f64 = points.iter().map(|p| squared_distance(p.as_ref(), &mean)).sum();
    Ok(spread / (tau * tau))
}
