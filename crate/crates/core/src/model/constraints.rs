//! Closed convex constraint sets: membership, projection, active normals,
//! vertices, recession directions and deterministic sampling.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::cones::extreme_rays;
use crate::error::{Error, Result};
use crate::linalg::{dykstra_halfspaces, solve_square};
use crate::point::{axpy, dist, dot, norm, normalized, scale, sub, Point};
use crate::sampling::{halton, rng, uniform_in_box};

/// Default radius at which unbounded sets are truncated for sampling.
pub const DEFAULT_TRUNCATION_RADIUS: f64 = 1e3;

/// The shape of a constraint set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintKind {
    /// Coordinate box; `null` bounds are infinite.
    Box {
        lower: Vec<Option<f64>>,
        upper: Vec<Option<f64>>,
    },
    /// `{x : A x ≤ b}`
    Polyhedron { a: Vec<Vec<f64>>, b: Vec<f64> },
    /// Planar sector of polar angles `[θ, π/2 − θ]`, `θ ∈ [0, π/4)`.
    Sector { theta: f64 },
    /// `−R^n_+`
    NegOrthant { dim: usize },
}

/// A constraint set together with the truncation radius used when sampling
/// it (only relevant for unbounded sets).
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    pub kind: ConstraintKind,
    pub truncation_radius: f64,
}

/// Output of [`ConstraintSet::sample`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSample {
    pub points: Vec<Point>,
    /// Present when the set is unbounded and was cut at this radius around
    /// the projection of the origin.
    pub truncation_radius: Option<f64>,
}

const MEMBERSHIP_TOL: f64 = 1e-9;

impl ConstraintSet {
    pub fn new(kind: ConstraintKind, truncation_radius: f64) -> Result<Self> {
        if !(truncation_radius > 0.0 && truncation_radius.is_finite()) {
            return Err(Error::InvalidConstraints("truncation radius must be positive".into()));
        }
        let set = Self {
            kind,
            truncation_radius,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn sector(theta: f64) -> Result<Self> {
        Self::new(ConstraintKind::Sector { theta }, DEFAULT_TRUNCATION_RADIUS)
    }

    pub fn neg_orthant(dim: usize) -> Result<Self> {
        Self::new(ConstraintKind::NegOrthant { dim }, DEFAULT_TRUNCATION_RADIUS)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConstraints(m));
        match &self.kind {
            ConstraintKind::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return bad("box bounds must be nonempty and of equal length".into());
                }
                for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
                    let l = l.unwrap_or(f64::NEG_INFINITY);
                    let u = u.unwrap_or(f64::INFINITY);
                    if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                        return bad(format!("box coordinate {i} has empty range"));
                    }
                }
            }
            ConstraintKind::Polyhedron { a, b } => {
                let dim = a.first().map(Vec::len).unwrap_or(0);
                if a.is_empty() || dim == 0 || a.len() != b.len() || a.iter().any(|r| r.len() != dim) {
                    return bad("polyhedron needs a nonempty m x n matrix and m offsets".into());
                }
                if a.iter().flatten().chain(b).any(|v| !v.is_finite()) {
                    return bad("polyhedron data must be finite".into());
                }
                if a.iter().any(|r| norm(r) < 1e-12) {
                    return bad("polyhedron has a zero row".into());
                }
                let p0 = self.project(&vec![0.0; dim]).map_err(|_| {
                    Error::InvalidConstraints("polyhedron appears to be empty".into())
                })?;
                if !self.contains(&p0, 1e-7) {
                    return bad("polyhedron appears to be empty".into());
                }
            }
            ConstraintKind::Sector { theta } => {
                if !(*theta >= 0.0 && *theta < FRAC_PI_4) {
                    return bad(format!("sector angle {theta} outside [0, pi/4)"));
                }
            }
            ConstraintKind::NegOrthant { dim } => {
                if *dim == 0 {
                    return bad("dimension must be at least 1".into());
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ConstraintKind::Box { lower, .. } => lower.len(),
            ConstraintKind::Polyhedron { a, .. } => a[0].len(),
            ConstraintKind::Sector { .. } => 2,
            ConstraintKind::NegOrthant { dim } => *dim,
        }
    }

    fn box_bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.kind {
            ConstraintKind::Box { lower, upper } => Some((
                lower.iter().map(|l| l.unwrap_or(f64::NEG_INFINITY)).collect(),
                upper.iter().map(|u| u.unwrap_or(f64::INFINITY)).collect(),
            )),
            ConstraintKind::NegOrthant { dim } => Some((vec![f64::NEG_INFINITY; *dim], vec![0.0; *dim])),
            _ => None,
        }
    }

    /// Unit rays bounding the sector, lower then upper.
    fn sector_rays(theta: f64) -> [[f64; 2]; 2] {
        [[theta.cos(), theta.sin()], [theta.sin(), theta.cos()]]
    }

    /// Halfspace description `{x : ⟨a_i, x⟩ ≤ b_i}` with unit outward normals.
    pub fn halfspaces(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        match &self.kind {
            ConstraintKind::Polyhedron { a, b } => {
                let mut normals = Vec::new();
                let mut offsets = Vec::new();
                for (row, bi) in a.iter().zip(b) {
                    let n = norm(row);
                    normals.push(scale(row, 1.0 / n));
                    offsets.push(bi / n);
                }
                (normals, offsets)
            }
            ConstraintKind::Sector { theta } => {
                let (s, c) = theta.sin_cos();
                (vec![vec![s, -c], vec![-c, s]], vec![0.0, 0.0])
            }
            _ => {
                let (lo, hi) = self.box_bounds().unwrap();
                let dim = lo.len();
                let mut normals = Vec::new();
                let mut offsets = Vec::new();
                for i in 0..dim {
                    if hi[i].is_finite() {
                        let mut e = vec![0.0; dim];
                        e[i] = 1.0;
                        normals.push(e);
                        offsets.push(hi[i]);
                    }
                    if lo[i].is_finite() {
                        let mut e = vec![0.0; dim];
                        e[i] = -1.0;
                        normals.push(e);
                        offsets.push(-lo[i]);
                    }
                }
                (normals, offsets)
            }
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        let slack = tol * norm(x).max(1.0);
        let (normals, offsets) = self.halfspaces();
        normals.iter().zip(&offsets).all(|(a, b)| dot(a, x) <= b + slack)
    }

    pub fn is_bounded(&self) -> bool {
        self.recession_generators().is_empty()
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        crate::point::check_dim(self.dim(), x.len())?;
        match &self.kind {
            ConstraintKind::Sector { theta } => {
                if self.contains(x, 0.0) {
                    return Ok(x.to_vec());
                }
                let mut best: Option<(f64, Vec<f64>)> = None;
                for ray in Self::sector_rays(*theta) {
                    let t = dot(&ray, x).max(0.0);
                    let p = scale(&ray, t);
                    let d = dist(&p, x);
                    if best.as_ref().map_or(true, |b| d < b.0) {
                        best = Some((d, p));
                    }
                }
                Ok(best.unwrap().1)
            }
            ConstraintKind::Polyhedron { .. } => {
                let (normals, offsets) = self.halfspaces();
                dykstra_halfspaces(&normals, &offsets, x, 1e-13, 100_000)
            }
            _ => {
                let (lo, hi) = self.box_bounds().unwrap();
                Ok(x.iter().zip(lo.iter().zip(&hi)).map(|(v, (l, h))| v.clamp(*l, *h)).collect())
            }
        }
    }

    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        Ok(dist(x, &self.project(x)?))
    }

    /// Unit outward normals of the constraints active at `w`; they generate
    /// the normal cone `N(w; K)` of the polyhedral set.
    pub fn active_normals(&self, w: &[f64], tol: f64) -> Vec<Vec<f64>> {
        let slack = tol * norm(w).max(1.0);
        let (normals, offsets) = self.halfspaces();
        normals
            .into_iter()
            .zip(offsets)
            .filter(|(a, b)| (dot(a, w) - b).abs() <= slack)
            .map(|(a, _)| a)
            .collect()
    }

    /// Finite vertices of the set (capped enumeration).
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let dim = self.dim();
        if let Some((lo, hi)) = self.box_bounds() {
            let mut choices: Vec<Vec<f64>> = Vec::new();
            for i in 0..dim {
                let mut c = Vec::new();
                if lo[i].is_finite() {
                    c.push(lo[i]);
                }
                if hi[i].is_finite() && hi[i] != lo[i] {
                    c.push(hi[i]);
                }
                if c.is_empty() {
                    return Vec::new();
                }
                choices.push(c);
            }
            let total: usize = choices.iter().map(Vec::len).product();
            if total > 4096 {
                return Vec::new();
            }
            let mut out = vec![Vec::new()];
            for c in &choices {
                out = out
                    .into_iter()
                    .flat_map(|prefix: Vec<f64>| {
                        c.iter().map(move |v| {
                            let mut p = prefix.clone();
                            p.push(*v);
                            p
                        })
                    })
                    .collect();
            }
            return out;
        }
        if let ConstraintKind::Sector { .. } = self.kind {
            return vec![vec![0.0, 0.0]];
        }
        let (normals, offsets) = self.halfspaces();
        let m = normals.len();
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut budget = 5000usize;
        let mut idx: Vec<usize> = (0..dim).collect();
        if m < dim {
            return out;
        }
        loop {
            let rows: Vec<Vec<f64>> = idx.iter().map(|&i| normals[i].clone()).collect();
            let rhs: Vec<f64> = idx.iter().map(|&i| offsets[i]).collect();
            if let Some(v) = solve_nonsingular(&rows, &rhs) {
                if self.contains(&v, 1e-9) && !out.iter().any(|o| dist(o, &v) < 1e-9) {
                    out.push(v);
                }
            }
            budget -= 1;
            if budget == 0 || !next_combination(&mut idx, m) {
                break;
            }
        }
        out
    }

    /// Generators of the recession cone (empty for bounded sets).
    pub fn recession_generators(&self) -> Vec<Vec<f64>> {
        let dim = self.dim();
        match &self.kind {
            ConstraintKind::Sector { theta } => {
                let [r1, r2] = Self::sector_rays(*theta);
                vec![r1.to_vec(), r2.to_vec()]
            }
            ConstraintKind::Polyhedron { .. } => {
                let (normals, _) = self.halfspaces();
                if dim <= 3 {
                    let flipped: Vec<Vec<f64>> = normals.iter().map(|a| scale(a, -1.0)).collect();
                    extreme_rays(&flipped)
                } else {
                    let mut out = Vec::new();
                    for k in 0..dim {
                        for s in [1.0, -1.0] {
                            let mut e = vec![0.0; dim];
                            e[k] = s;
                            if normals.iter().all(|a| dot(a, &e) <= 1e-12) {
                                out.push(e);
                            }
                        }
                    }
                    out
                }
            }
            _ => {
                let (lo, hi) = self.box_bounds().unwrap();
                let mut out = Vec::new();
                for k in 0..dim {
                    if hi[k] == f64::INFINITY {
                        let mut e = vec![0.0; dim];
                        e[k] = 1.0;
                        out.push(e);
                    }
                    if lo[k] == f64::NEG_INFINITY {
                        let mut e = vec![0.0; dim];
                        e[k] = -1.0;
                        out.push(e);
                    }
                }
                out
            }
        }
    }

    /// Deterministic sample of the set: always the projection of the origin,
    /// finite vertices and far points on the truncation sphere, then a
    /// low-discrepancy fill (two thirds) and seeded uniform points (one
    /// third) up to `budget` points in total.
    pub fn sample(&self, budget: usize, seed: u64) -> Result<ConstraintSample> {
        self.sample_within(budget, seed, self.truncation_radius)
    }

    /// As [`ConstraintSet::sample`] but truncating at `radius` around the
    /// projection of the origin, bounded or not.
    pub fn sample_within(&self, budget: usize, seed: u64, radius: f64) -> Result<ConstraintSample> {
        let dim = self.dim();
        let budget = budget.max(1);
        let center = self.project(&vec![0.0; dim])?;
        let unbounded = !self.is_bounded();
        let clip = |x: Vec<f64>| -> Vec<f64> {
            let d = dist(&x, &center);
            if d > radius {
                axpy(&center, radius / d, &sub(&x, &center))
            } else {
                x
            }
        };

        let mut points: Vec<Vec<f64>> = vec![center.clone()];
        let mut extras: Vec<Vec<f64>> = Vec::new();
        let mut verts = self.vertices();
        verts.sort_by(|a, b| dist(a, &center).total_cmp(&dist(b, &center)));
        extras.extend(verts.into_iter().filter(|v| dist(v, &center) <= radius));
        let rec = self.recession_generators();
        if !rec.is_empty() {
            let mut dirs: Vec<Vec<f64>> = rec.iter().filter_map(|g| normalized(g)).collect();
            for i in 0..rec.len() {
                for j in (i + 1)..rec.len() {
                    if let Some(m) = normalized(&crate::point::add(&rec[i], &rec[j])) {
                        dirs.push(m);
                    }
                }
            }
            let total = rec.iter().fold(vec![0.0; dim], |acc, g| crate::point::add(&acc, g));
            if let Some(m) = normalized(&total) {
                dirs.push(m);
            }
            for d in dirs {
                let far = axpy(&center, radius, &d);
                if self.contains(&far, 1e-9) {
                    extras.push(far);
                }
            }
        }
        let extra_cap = (budget / 4).max(1);
        for e in extras {
            if points.len() > extra_cap {
                break;
            }
            if !points.iter().any(|p| dist(p, &e) < 1e-12) {
                points.push(e);
            }
        }
        points.truncate(budget);

        let remaining = budget - points.len();
        let n_grid = (2 * remaining).div_ceil(3);
        let n_rand = remaining - n_grid;

        let (lo, hi) = self.sampling_box(&center, radius);
        let mut r = rng(seed);
        let draw = |unit: &[f64]| -> Result<Vec<f64>> {
            if let ConstraintKind::Sector { theta } = self.kind {
                let rad = radius * unit[0];
                let t = theta + (std::f64::consts::FRAC_PI_2 - 2.0 * theta) * unit[1];
                return Ok(vec![rad * t.cos(), rad * t.sin()]);
            }
            let y: Vec<f64> = unit.iter().zip(lo.iter().zip(&hi)).map(|(u, (l, h))| l + u * (h - l)).collect();
            let x = if self.contains(&y, 0.0) { y } else { self.project(&y)? };
            Ok(clip(x))
        };
        for k in 0..n_grid {
            let unit = halton(k as u64 + 1, dim.max(2));
            points.push(draw(&unit)?);
        }
        for _ in 0..n_rand {
            let unit = uniform_in_box(&mut r, &vec![0.0; dim.max(2)], &vec![1.0; dim.max(2)]);
            points.push(draw(&unit)?);
        }

        Ok(ConstraintSample {
            points: points.into_iter().map(|p| Point::from(p.as_slice())).collect(),
            truncation_radius: if unbounded { Some(radius) } else { None },
        })
    }

    fn sampling_box(&self, center: &[f64], radius: f64) -> (Vec<f64>, Vec<f64>) {
        let dim = self.dim();
        let mut lo: Vec<f64> = center.iter().map(|c| c - radius).collect();
        let mut hi: Vec<f64> = center.iter().map(|c| c + radius).collect();
        if let Some((blo, bhi)) = self.box_bounds() {
            for i in 0..dim {
                lo[i] = lo[i].max(blo[i]);
                hi[i] = hi[i].min(bhi[i]);
            }
        }
        (lo, hi)
    }

    pub fn membership_tolerance() -> f64 {
        MEMBERSHIP_TOL
    }
}

fn solve_nonsingular(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rows.len();
    let a = nalgebra::DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    if a.clone().determinant().abs() < 1e-12 {
        return None;
    }
    solve_square(rows, rhs)
}

fn next_combination(idx: &mut [usize], m: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < m - k + i {
            idx[i] += 1;
            for j in (i + 1)..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

impl Serialize for ConstraintSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.kind.serialize(s)
    }
}
