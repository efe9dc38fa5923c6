//! Small dense solvers: nonnegative least squares (Lawson-Hanson), the
//! minimum-norm point of a polytope (Wolfe), and Dykstra's alternating
//! projections onto an intersection of halfspaces.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::point::{axpy, dot, norm, sub};

/// Least-squares solution of `min ‖Σ_j x_j cols[j] − y‖`, minimum-norm when
/// rank deficient.
pub fn lstsq_columns(cols: &[&[f64]], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let k = cols.len();
    if k == 0 {
        return Vec::new();
    }
    let a = DMatrix::from_fn(n, k, |i, j| cols[j][i]);
    let b = DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let eps = 1e-13 * svd.singular_values.max().max(1.0);
    match svd.solve(&b, eps) {
        Ok(x) => x.iter().copied().collect(),
        Err(_) => vec![0.0; k],
    }
}

/// Solves the square system `m x = rhs`, falling back to the pseudo-inverse
/// when `m` is singular.
pub fn solve_square(m: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let a = DMatrix::from_fn(n, n, |i, j| m[i][j]);
    let b = DVector::from_column_slice(rhs);
    if let Some(x) = a.clone().lu().solve(&b) {
        if x.iter().all(|v| v.is_finite()) {
            return Some(x.iter().copied().collect());
        }
    }
    let svd = a.svd(true, true);
    let eps = 1e-13 * svd.singular_values.max().max(1.0);
    svd.solve(&b, eps).ok().map(|x| x.iter().copied().collect())
}

/// Nonnegative least squares over generator columns.
#[derive(Debug, Clone)]
pub struct Nnls {
    pub weights: Vec<f64>,
    /// `Σ weights_j · gens[j]`
    pub fit: Vec<f64>,
    pub iterations: usize,
}

/// Lawson-Hanson active-set NNLS: `min ‖G λ − y‖` subject to `λ ≥ 0`, with
/// `G` given column-wise by `gens`.
///
/// Fails with [`Error::NonConvergence`] when the KKT conditions cannot be met
/// within the iteration cap; the caller decides on a fallback.
pub fn nnls(gens: &[Vec<f64>], y: &[f64]) -> Result<Nnls> {
    let k = gens.len();
    let n = y.len();
    let gmax = gens.iter().map(|g| norm(g)).fold(0.0, f64::max);
    let tol = 1e-12 * gmax.max(1.0) * norm(y).max(1.0);

    let mut weights = vec![0.0; k];
    let mut passive = vec![false; k];
    let fit_of = |w: &[f64]| {
        let mut f = vec![0.0; n];
        for (g, &wj) in gens.iter().zip(w) {
            if wj != 0.0 {
                f = axpy(&f, wj, g);
            }
        }
        f
    };
    let cap = 3 * k + 30;
    let mut iterations = 0;

    loop {
        let resid = sub(y, &fit_of(&weights));
        let grad: Vec<f64> = gens.iter().map(|g| dot(g, &resid)).collect();
        let next = (0..k)
            .filter(|&j| !passive[j])
            .max_by(|&a, &b| grad[a].total_cmp(&grad[b]).then(b.cmp(&a)));
        match next {
            Some(j) if grad[j] > tol => passive[j] = true,
            _ => break,
        }
        iterations += 1;
        if iterations > cap {
            return Err(Error::NonConvergence {
                method: "nnls",
                iterations,
                residual: grad.iter().copied().fold(0.0, f64::max),
            });
        }

        loop {
            let idx: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
            let cols: Vec<&[f64]> = idx.iter().map(|&j| gens[j].as_slice()).collect();
            let s = lstsq_columns(&cols, y);
            if s.iter().all(|&v| v > 0.0) {
                for (&j, &v) in idx.iter().zip(&s) {
                    weights[j] = v;
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (&j, &v) in idx.iter().zip(&s) {
                if v <= 0.0 {
                    let denom = weights[j] - v;
                    if denom > 0.0 {
                        alpha = alpha.min(weights[j] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (&j, &v) in idx.iter().zip(&s) {
                weights[j] += alpha * (v - weights[j]);
            }
            for &j in &idx {
                if weights[j] <= 1e-15 * gmax.max(1.0) {
                    weights[j] = 0.0;
                    passive[j] = false;
                }
            }
            if passive.iter().all(|p| !p) {
                break;
            }
        }
    }

    let fit = fit_of(&weights);
    Ok(Nnls {
        weights,
        fit,
        iterations,
    })
}

/// Result of [`min_norm_point`].
#[derive(Debug, Clone)]
pub struct MinNorm {
    pub point: Vec<f64>,
    pub norm: f64,
    /// Convex weights over the input points.
    pub weights: Vec<f64>,
}

/// Minimum-norm point of the convex hull of `points` (Wolfe's algorithm).
pub fn min_norm_point(points: &[Vec<f64>], tol: f64) -> Result<MinNorm> {
    if points.is_empty() {
        return Err(Error::EmptyInput("min_norm_point needs at least one point"));
    }
    let m = points.len();
    let scale = points.iter().map(|p| dot(p, p)).fold(1e-300, f64::max);

    let start = (0..m)
        .min_by(|&a, &b| dot(&points[a], &points[a]).total_cmp(&dot(&points[b], &points[b])))
        .unwrap();
    let mut support = vec![start];
    let mut lambda = vec![1.0];
    let mut x = points[start].clone();
    let cap = 500 + 50 * m;

    for _ in 0..cap {
        let xx = dot(&x, &x);
        let (j, best) = (0..m)
            .map(|i| (i, dot(&x, &points[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .unwrap();
        if xx - best <= tol * scale || support.contains(&j) {
            return Ok(finish(points, &support, &lambda, x));
        }
        support.push(j);
        lambda.push(0.0);

        // minor cycles
        loop {
            let alpha = affine_minimizer(points, &support);
            if alpha.iter().all(|&a| a > tol) {
                lambda = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for (l, a) in lambda.iter().zip(&alpha) {
                if *a <= tol {
                    let d = l - a;
                    if d > 0.0 {
                        theta = theta.min(l / d);
                    }
                }
            }
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l += theta * (a - *l);
            }
            let mut keep_s = Vec::new();
            let mut keep_l = Vec::new();
            for (s, l) in support.iter().zip(&lambda) {
                if *l > tol {
                    keep_s.push(*s);
                    keep_l.push(*l);
                }
            }
            if keep_s.is_empty() {
                // numerically everything vanished; restart from the best vertex
                keep_s.push(j);
                keep_l.push(1.0);
            }
            let total: f64 = keep_l.iter().sum();
            support = keep_s;
            lambda = keep_l.iter().map(|l| l / total).collect();
            if support.len() == 1 {
                break;
            }
        }
        x = combine(points, &support, &lambda);
    }
    Err(Error::NonConvergence {
        method: "min_norm_point",
        iterations: cap,
        residual: norm(&x),
    })
}

fn combine(points: &[Vec<f64>], support: &[usize], lambda: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; points[0].len()];
    for (&s, &l) in support.iter().zip(lambda) {
        x = axpy(&x, l, &points[s]);
    }
    x
}

fn finish(points: &[Vec<f64>], support: &[usize], lambda: &[f64], x: Vec<f64>) -> MinNorm {
    let mut weights = vec![0.0; points.len()];
    for (&s, &l) in support.iter().zip(lambda) {
        weights[s] += l;
    }
    MinNorm {
        norm: norm(&x),
        point: x,
        weights,
    }
}

/// Weights of the minimum-norm point of the affine hull of the support.
fn affine_minimizer(points: &[Vec<f64>], support: &[usize]) -> Vec<f64> {
    let k = support.len();
    let mut m = vec![vec![0.0; k + 1]; k + 1];
    for a in 0..k {
        for b in 0..k {
            m[a][b] = dot(&points[support[a]], &points[support[b]]);
        }
        m[a][k] = 1.0;
        m[k][a] = 1.0;
    }
    let mut rhs = vec![0.0; k + 1];
    rhs[k] = 1.0;
    match solve_square(&m, &rhs) {
        Some(sol) => sol[..k].to_vec(),
        None => vec![1.0 / k as f64; k],
    }
}

/// Dykstra's algorithm for the projection of `y` onto
/// `{x : ⟨a_i, x⟩ ≤ b_i ∀i}`.
pub fn dykstra_halfspaces(
    normals: &[Vec<f64>],
    offsets: &[f64],
    y: &[f64],
    tol: f64,
    max_sweeps: usize,
) -> Result<Vec<f64>> {
    let m = normals.len();
    let sq: Vec<f64> = normals.iter().map(|a| dot(a, a)).collect();
    let mut x = y.to_vec();
    let mut incr = vec![vec![0.0; y.len()]; m];
    let scale = norm(y).max(1.0);
    let violation = |x: &[f64]| {
        normals
            .iter()
            .zip(offsets)
            .map(|(a, b)| (dot(a, x) - b).max(0.0) / dot(a, a).sqrt())
            .fold(0.0, f64::max)
    };
    if violation(&x) <= tol * scale {
        return Ok(x);
    }
    for _ in 0..max_sweeps {
        let prev = x.clone();
        for i in 0..m {
            let z: Vec<f64> = x.iter().zip(&incr[i]).map(|(a, b)| a + b).collect();
            let excess = dot(&normals[i], &z) - offsets[i];
            let proj = if excess > 0.0 {
                axpy(&z, -excess / sq[i], &normals[i])
            } else {
                z.clone()
            };
            incr[i] = sub(&z, &proj);
            x = proj;
        }
        if norm(&sub(&x, &prev)) <= tol * scale && violation(&x) <= tol * scale {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        method: "dykstra",
        iterations: max_sweeps,
        residual: violation(&x),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force oracle: the min-norm point of a hull is the affine
    /// minimizer of some subset with nonnegative weights; enumerate subsets.
    fn min_norm_brute(points: &[Vec<f64>]) -> f64 {
        let m = points.len();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << m) {
            let support: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
            let w = affine_minimizer(points, &support);
            if w.iter().all(|&v| v >= -1e-12) {
                best = best.min(norm(&combine(points, &support, &w)));
            }
        }
        best
    }

    #[test]
    fn min_norm_segment_and_triangle() {
        let seg = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        let r = min_norm_point(&seg, 1e-12).unwrap();
        assert!((r.norm - 1.0).abs() < 1e-12);
        assert!((r.point[1]).abs() < 1e-12);

        let tri = vec![vec![-1.0, -1.0], vec![2.0, -1.0], vec![-1.0, 2.0]];
        let r = min_norm_point(&tri, 1e-12).unwrap();
        assert!(r.norm < 1e-12, "origin inside the triangle");
    }

    #[test]
    fn min_norm_matches_subset_enumeration() {
        let mut rng = crate::sampling::rng(11);
        for trial in 0..200 {
            let dim = 2 + trial % 3;
            let m = 1 + trial % 6;
            let pts: Vec<Vec<f64>> = (0..m)
                .map(|_| {
                    let shift = if trial % 2 == 0 { 1.5 } else { 0.0 };
                    crate::sampling::random_direction(&mut rng, dim)
                        .iter()
                        .enumerate()
                        .map(|(i, v)| v + if i == 0 { shift } else { 0.0 })
                        .collect()
                })
                .collect();
            let wolfe = min_norm_point(&pts, 1e-12).unwrap();
            let brute = min_norm_brute(&pts);
            assert!((wolfe.norm - brute).abs() < 1e-8, "trial {trial}: {} vs {brute}", wolfe.norm);
            let s: f64 = wolfe.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn nnls_recovers_nonnegative_combination() {
        let gens = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
        let r = nnls(&gens, &[3.0, 2.0]).unwrap();
        assert!((r.weights[0] - 1.0).abs() < 1e-12);
        assert!((r.weights[1] - 2.0).abs() < 1e-12);
        // outside the cone: projection onto the boundary ray (1,1)
        let r = nnls(&gens, &[-1.0, 1.0]).unwrap();
        assert!(r.weights[0].abs() < 1e-12);
        assert!(norm(&r.fit) < 1e-12 || (r.fit[0] - r.fit[1]).abs() < 1e-12);
    }

    #[test]
    fn dykstra_projects_onto_quadrant() {
        let normals = vec![vec![-1.0, 0.0], vec![0.0, -1.0]];
        let x = dykstra_halfspaces(&normals, &[0.0, 0.0], &[-1.0, 2.0], 1e-12, 1000).unwrap();
        assert!(x[0].abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }
}
