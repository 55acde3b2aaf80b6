//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use advrisk::LabeledDataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense two-phase tableau simplex with Bland's rule for
/// `min c·x, A x = b, x >= 0`, `b >= 0`. Columns are given as 0/1 row sets.
/// Returns `None` when infeasible.
pub fn dense_lp(n_rows: usize, columns: &[(Vec<u32>, f64)], rhs: &[f64]) -> Option<f64> {
    let m = n_rows;
    let n = columns.len();
    let width = n + m;
    // tableau rows: [structural | artificial | rhs]
    let mut t = vec![vec![0.0f64; width + 1]; m];
    for (j, (rows, _)) in columns.iter().enumerate() {
        for &i in rows {
            t[i as usize][j] = 1.0;
        }
    }
    for i in 0..m {
        t[i][n + i] = 1.0;
        t[i][width] = rhs[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let phase1: Vec<f64> = (0..width).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    bland(&mut t, &mut basis, &phase1, width);
    let infeasibility: f64 = basis.iter().enumerate().filter(|(_, &b)| b >= n).map(|(i, _)| t[i][width]).sum();
    if infeasibility > 1e-9 {
        return None;
    }
    // drive zero-level artificials out where possible
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[i][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }
    let mut phase2: Vec<f64> = columns.iter().map(|(_, c)| *c).collect();
    // artificials are barred from entering by a prohibitive cost
    phase2.extend(std::iter::repeat_n(f64::INFINITY, m));
    bland(&mut t, &mut basis, &phase2, width);
    Some(basis.iter().enumerate().filter(|(_, &b)| b < n).map(|(i, &b)| columns[b].1 * t[i][width]).sum())
}

fn bland(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], width: usize) {
    let m = t.len();
    loop {
        let cb: Vec<f64> = basis.iter().map(|&b| if cost[b].is_finite() { cost[b] } else { 0.0 }).collect();
        let entering = (0..width).find(|&j| {
            if basis.contains(&j) || !cost[j].is_finite() {
                return false;
            }
            let z: f64 = (0..m).map(|i| cb[i] * t[i][j]).sum();
            cost[j] - z < -1e-11
        });
        let Some(j) = entering else { return };
        let mut leave: Option<(f64, usize, usize)> = None;
        for i in 0..m {
            if t[i][j] > 1e-11 {
                let ratio = t[i][width] / t[i][j];
                let better = match leave {
                    None => true,
                    Some((r, _, b)) => ratio < r - 1e-12 || (ratio <= r + 1e-12 && basis[i] < b),
                };
                if better {
                    leave = Some((ratio, i, basis[i]));
                }
            }
        }
        let Some((_, i, _)) = leave else { panic!("unbounded oracle LP") };
        pivot(t, basis, i, j);
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, j: usize) {
    let p = t[r][j];
    for v in t[r].iter_mut() {
        *v /= p;
    }
    let row = t[r].clone();
    for (i, ti) in t.iter_mut().enumerate() {
        if i != r && ti[j] != 0.0 {
            let f = ti[j];
            for (a, b) in ti.iter_mut().zip(&row) {
                *a -= f * b;
            }
        }
    }
    basis[r] = j;
}

/// Smallest enclosing circle of planar points by trying every circle
/// spanned by two or three of them.
pub fn brute_circle_radius(pts: &[[f64; 2]]) -> f64 {
    if pts.len() == 1 {
        return 0.0;
    }
    let contains = |c: [f64; 2], r: f64| pts.iter().all(|p| dist(*p, c) <= r * (1.0 + 1e-12) + 1e-12);
    let mut best = f64::INFINITY;
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            let c = [(pts[a][0] + pts[b][0]) / 2.0, (pts[a][1] + pts[b][1]) / 2.0];
            let r = dist(pts[a], c);
            if r < best && contains(c, r) {
                best = r;
            }
            for d in b + 1..pts.len() {
                if let Some(c) = circumcenter(pts[a], pts[b], pts[d]) {
                    let r = dist(pts[a], c);
                    if r < best && contains(c, r) {
                        best = r;
                    }
                }
            }
        }
    }
    best
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn circumcenter(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Option<[f64; 2]> {
    let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
    if d.abs() < 1e-14 {
        return None;
    }
    let a2 = a[0] * a[0] + a[1] * a[1];
    let b2 = b[0] * b[0] + b[1] * b[1];
    let c2 = c[0] * c[0] + c[1] * c[1];
    Some([
        (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d,
        (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d,
    ])
}

/// Half the largest coordinate span.
pub fn brute_linf_radius(pts: &[[f64; 2]]) -> f64 {
    (0..2)
        .map(|k| {
            let lo = pts.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
            (hi - lo) / 2.0
        })
        .fold(0.0, f64::max)
}

/// Every nonempty label-distinct subset with radius within `eps`, as sorted
/// index lists in lexicographic order.
pub fn power_set_feasible(pts: &[[f64; 2]], labels: &[usize], eps: f64, linf: bool) -> Vec<Vec<u32>> {
    let n = pts.len();
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let idx: Vec<u32> = (0..n as u32).filter(|i| mask & (1 << i) != 0).collect();
        let mut seen = Vec::new();
        if idx.iter().any(|&i| {
            let l = labels[i as usize];
            let dup = seen.contains(&l);
            seen.push(l);
            dup
        }) {
            continue;
        }
        let sub: Vec<[f64; 2]> = idx.iter().map(|&i| pts[i as usize]).collect();
        let r = if linf { brute_linf_radius(&sub) } else { brute_circle_radius(&sub) };
        if r <= eps + 1e-9 * (1.0 + eps) {
            out.push(idx);
        }
    }
    out.sort();
    out
}

/// Optimal value of the full classical LP by power-set enumeration.
pub fn oracle_classical_objective(pts: &[[f64; 2]], labels: &[usize], eps: f64, linf: bool) -> f64 {
    let cols: Vec<(Vec<u32>, f64)> = power_set_feasible(pts, labels, eps, linf).into_iter().map(|c| (c, 1.0)).collect();
    dense_lp(pts.len(), &cols, &vec![1.0; pts.len()]).expect("singletons make the LP feasible")
}

/// Every label-distinct subset with its regularized cost, computed here
/// from scratch.
pub fn w2_columns(inst: &DeskInstance, tau: f64) -> Vec<(Vec<u32>, f64)> {
    let n = inst.pts.len();
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let idx: Vec<u32> = (0..n as u32).filter(|i| mask & (1 << i) != 0).collect();
        let mut labels: Vec<usize> = idx.iter().map(|&i| inst.labels[i as usize]).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != idx.len() {
            continue;
        }
        let k = idx.len() as f64;
        let mx = idx.iter().map(|&i| inst.pts[i as usize][0]).sum::<f64>() / k;
        let my = idx.iter().map(|&i| inst.pts[i as usize][1]).sum::<f64>() / k;
        let spread: f64 =
            idx.iter().map(|&i| (inst.pts[i as usize][0] - mx).powi(2) + (inst.pts[i as usize][1] - my).powi(2)).sum();
        out.push((idx, 1.0 + spread / (tau * tau)));
    }
    out
}

/// A random planar instance with every class present.
#[derive(Clone)]
pub struct DeskInstance {
    pub pts: Vec<[f64; 2]>,
    pub labels: Vec<usize>,
    pub eps: f64,
}

impl DeskInstance {
    pub fn random(seed: u64, max_n: usize, max_k: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(2..=max_k);
        let n = rng.random_range(k.max(4)..=max_n);
        let pts = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        let mut labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
        // shuffle so the forced representatives are not always first
        for i in (1..n).rev() {
            labels.swap(i, rng.random_range(0..=i));
        }
        let eps = rng.random_range(0.1..0.45);
        Self { pts, labels, eps }
    }

    pub fn dataset(&self) -> LabeledDataset {
        let pts: Vec<Vec<f64>> = self.pts.iter().map(|p| p.to_vec()).collect();
        LabeledDataset::from_points(&pts, &self.labels).unwrap()
    }
}

/// Bytes of a CIFAR-100-format file: `per_class` records for each of 100
/// fine classes. Images share a base pattern plus class and per-image
/// perturbations, so that some cross-class groups fit in moderate balls.
pub fn cifar_stand_in(per_class: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<f64> = (0..3072).map(|_| rng.random_range(60.0..190.0)).collect();
    let mut out = Vec::with_capacity(100 * per_class * 3074);
    let offsets: Vec<Vec<f64>> = (0..100).map(|_| (0..3072).map(|_| rng.random_range(-8.0..8.0)).collect()).collect();
    for k in 0..per_class {
        for class in 0..100u8 {
            let spread = if k % 2 == 0 { 12.0 } else { 60.0 };
            out.push(class / 5);
            out.push(class);
            for p in 0..3072 {
                let v = base[p] + offsets[class as usize][p] + rng.random_range(-spread..spread);
                out.push(v.clamp(0.0, 255.0).round() as u8);
            }
        }
    }
    out
}
