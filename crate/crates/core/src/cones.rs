//! Geometry of the ordering cone: membership, projection, distance, polar
//! cone, excess of finite sets and a sampled C-boundedness probe.
//!
//! Four cone families are supported, all closed, convex and nontrivial:
//!
//! * `Orthant(n)`: the nonnegative orthant `R^n_+`;
//! * `HalfspaceCone`: `{y : ⟨a_i, y⟩ ≥ 0 ∀i}` with unit inward normals;
//! * `Generated`: nonnegative combinations of finitely many rays;
//! * `Product`: Cartesian products of the above, in coordinate order.
//!
//! Projection onto a halfspace cone goes through the Moreau decomposition
//! `y = P_C(y) + P_{C°}(y)` where the polar `C°` is generated by `−a_i`, so both
//! halfspace and generated cones reduce to nonnegative least squares.
//! Dykstra's method is kept as a fallback.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dykstra_halfspaces, nnls};
use crate::point::{check_dim, dist, dot, norm, normalized, scale, sub, Point};

/// Numerical tolerances used by cone operations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeTolerances {
    /// Slack allowed in the defining inequalities when testing membership.
    pub membership: f64,
    /// Stopping tolerance of Dykstra sweeps.
    pub dykstra: f64,
    pub dykstra_max_sweeps: usize,
}

impl Default for ConeTolerances {
    fn default() -> Self {
        Self {
            membership: 1e-9,
            dykstra: 1e-10,
            dykstra_max_sweeps: 100_000,
        }
    }
}

/// A closed, convex, nontrivial cone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase", try_from = "ConeRepr")]
pub enum ConeSpec {
    Orthant {
        dim: usize,
    },
    #[serde(rename = "halfspaces")]
    HalfspaceCone {
        normals: Vec<Vec<f64>>,
    },
    Generated {
        rays: Vec<Vec<f64>>,
    },
    Product {
        parts: Vec<ConeSpec>,
    },
}

#[derive(Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase", deny_unknown_fields)]
enum ConeRepr {
    Orthant { dim: usize },
    Halfspaces { normals: Vec<Vec<f64>> },
    Generated { rays: Vec<Vec<f64>> },
    Product { parts: Vec<ConeSpec> },
}

impl TryFrom<ConeRepr> for ConeSpec {
    type Error = Error;

    fn try_from(r: ConeRepr) -> Result<Self> {
        match r {
            ConeRepr::Orthant { dim } => ConeSpec::orthant(dim),
            ConeRepr::Halfspaces { normals } => ConeSpec::halfspaces(normals),
            ConeRepr::Generated { rays } => ConeSpec::generated(rays),
            ConeRepr::Product { parts } => ConeSpec::product(parts),
        }
    }
}

/// Supremum of `dist(s, C)` over a finite set, with the member attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessValue {
    #[serde(with = "crate::point::extended")]
    pub value: f64,
    pub witness: Point,
}

fn check_matrix(rows: &[Vec<f64>], what: &str) -> Result<usize> {
    let dim = rows
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidCone(format!("{what}: empty list")))?;
    if dim == 0 {
        return Err(Error::InvalidCone(format!("{what}: zero dimension")));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::InvalidCone(format!(
                "{what}: entry {i} has length {}, expected {dim}",
                r.len()
            )));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCone(format!("{what}: entry {i} is not finite")));
        }
        if norm(r) < 1e-12 {
            return Err(Error::InvalidCone(format!("{what}: entry {i} is zero")));
        }
    }
    Ok(dim)
}

impl ConeSpec {
    pub fn orthant(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCone("orthant dimension must be at least 1".into()));
        }
        Ok(Self::Orthant { dim })
    }

    /// Halfspace cone; normals are normalized here.
    pub fn halfspaces(normals: Vec<Vec<f64>>) -> Result<Self> {
        check_matrix(&normals, "halfspace normals")?;
        let normals: Vec<Vec<f64>> = normals.iter().map(|a| normalized(a).unwrap()).collect();
        let cone = Self::HalfspaceCone { normals };
        if !cone.contains_nonzero() {
            return Err(Error::InvalidCone("halfspace cone reduces to {0}".into()));
        }
        Ok(cone)
    }

    pub fn generated(rays: Vec<Vec<f64>>) -> Result<Self> {
        check_matrix(&rays, "generator rays")?;
        let polar = Self::HalfspaceCone {
            normals: rays.iter().map(|r| scale(&normalized(r).unwrap(), -1.0)).collect(),
        };
        if !polar.contains_nonzero() {
            return Err(Error::InvalidCone("generated cone is the whole space".into()));
        }
        Ok(Self::Generated { rays })
    }

    pub fn product(parts: Vec<ConeSpec>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidCone("product of zero cones".into()));
        }
        Ok(Self::Product { parts })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Orthant { dim } => *dim,
            Self::HalfspaceCone { normals } => normals[0].len(),
            Self::Generated { rays } => rays[0].len(),
            Self::Product { parts } => parts.iter().map(ConeSpec::dim).sum(),
        }
    }

    fn contains_nonzero(&self) -> bool {
        let dim = self.dim();
        let mut probes: Vec<Vec<f64>> = Vec::new();
        if let Self::HalfspaceCone { normals } = self {
            let mut sum = vec![0.0; dim];
            for a in normals {
                sum = crate::point::add(&sum, a);
                probes.push(a.clone());
            }
            probes.push(sum);
        }
        for k in 0..dim {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            probes.push(e.clone());
            e[k] = -1.0;
            probes.push(e);
        }
        probes.extend(crate::sampling::sphere_directions(dim, 32 * dim));
        probes
            .iter()
            .any(|p| self.project_unchecked(p, &ConeTolerances::default()).map_or(false, |q| norm(&q) > 1e-9))
    }

    /// Euclidean projection onto the cone.
    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.project_with(y, &ConeTolerances::default())
    }

    pub fn project_with(&self, y: &[f64], tol: &ConeTolerances) -> Result<Vec<f64>> {
        check_dim(self.dim(), y.len())?;
        self.project_unchecked(y, tol)
    }

    fn project_unchecked(&self, y: &[f64], tol: &ConeTolerances) -> Result<Vec<f64>> {
        match self {
            Self::Orthant { .. } => Ok(y.iter().map(|v| v.max(0.0)).collect()),
            Self::HalfspaceCone { normals } => {
                if normals.iter().all(|a| dot(a, y) >= 0.0) {
                    return Ok(y.to_vec());
                }
                let polar: Vec<Vec<f64>> = normals.iter().map(|a| scale(a, -1.0)).collect();
                match nnls(&polar, y) {
                    Ok(fit) => {
                        let p = sub(y, &fit.fit);
                        if normals.iter().all(|a| dot(a, &p) >= -1e-10 * norm(y).max(1.0)) {
                            return Ok(p);
                        }
                        self.project_dykstra(y, tol)
                    }
                    Err(_) => self.project_dykstra(y, tol),
                }
            }
            Self::Generated { rays } => Ok(nnls(rays, y)?.fit),
            Self::Product { parts } => {
                let mut out = Vec::with_capacity(y.len());
                let mut offset = 0;
                for part in parts {
                    let d = part.dim();
                    out.extend(part.project_unchecked(&y[offset..offset + d], tol)?);
                    offset += d;
                }
                Ok(out)
            }
        }
    }

    /// Projection by Dykstra's alternating halfspace projections. Only
    /// meaningful for [`ConeSpec::HalfspaceCone`]; other variants delegate to
    /// [`ConeSpec::project_with`].
    pub fn project_dykstra(&self, y: &[f64], tol: &ConeTolerances) -> Result<Vec<f64>> {
        check_dim(self.dim(), y.len())?;
        match self {
            Self::HalfspaceCone { normals } => {
                let flipped: Vec<Vec<f64>> = normals.iter().map(|a| scale(a, -1.0)).collect();
                let zeros = vec![0.0; normals.len()];
                dykstra_halfspaces(&flipped, &zeros, y, tol.dykstra, tol.dykstra_max_sweeps)
            }
            _ => self.project_with(y, tol),
        }
    }

    pub fn distance(&self, y: &[f64]) -> Result<f64> {
        let p = self.project(y)?;
        Ok(dist(y, &p))
    }

    /// Membership through the defining description of each variant.
    pub fn contains(&self, y: &[f64], tol: f64) -> Result<bool> {
        check_dim(self.dim(), y.len())?;
        Ok(self.contains_unchecked(y, tol))
    }

    fn contains_unchecked(&self, y: &[f64], tol: f64) -> bool {
        let slack = tol * norm(y).max(1.0);
        match self {
            Self::Orthant { .. } => y.iter().all(|&v| v >= -slack),
            Self::HalfspaceCone { normals } => normals.iter().all(|a| dot(a, y) >= -slack),
            Self::Generated { rays } => {
                nnls(rays, y).map_or(false, |fit| dist(&fit.fit, y) <= slack)
            }
            Self::Product { parts } => {
                let mut offset = 0;
                parts.iter().all(|part| {
                    let d = part.dim();
                    let ok = part.contains_unchecked(&y[offset..offset + d], tol);
                    offset += d;
                    ok
                })
            }
        }
    }

    /// The negative dual cone `C⁻ = {y* : ⟨y*, y⟩ ≤ 0 ∀y ∈ C}`.
    pub fn polar_neg(&self) -> Result<ConeSpec> {
        match self {
            Self::Orthant { dim } => Ok(Self::Generated {
                rays: (0..*dim)
                    .map(|k| {
                        let mut e = vec![0.0; *dim];
                        e[k] = -1.0;
                        e
                    })
                    .collect(),
            }),
            Self::HalfspaceCone { normals } => Ok(Self::Generated {
                rays: normals.iter().map(|a| scale(a, -1.0)).collect(),
            }),
            Self::Generated { rays } => Ok(Self::HalfspaceCone {
                normals: rays.iter().map(|r| scale(&normalized(r).unwrap(), -1.0)).collect(),
            }),
            Self::Product { parts } => Ok(Self::Product {
                parts: parts.iter().map(ConeSpec::polar_neg).collect::<Result<_>>()?,
            }),
        }
    }

    /// Unit inward normals describing the cone as `{y : ⟨n, y⟩ ≥ 0}`.
    ///
    /// Generated cones need a facet enumeration, done by brute force for
    /// dimension at most 3.
    pub fn facet_normals(&self) -> Result<Vec<Vec<f64>>> {
        match self {
            Self::Orthant { dim } => Ok((0..*dim)
                .map(|k| {
                    let mut e = vec![0.0; *dim];
                    e[k] = 1.0;
                    e
                })
                .collect()),
            Self::HalfspaceCone { normals } => Ok(normals.clone()),
            Self::Generated { rays } => {
                if rays[0].len() > 3 {
                    return Err(Error::Unsupported(
                        "facet enumeration of generated cones beyond dimension 3".into(),
                    ));
                }
                Ok(extreme_rays(rays))
            }
            Self::Product { .. } => Err(Error::Unsupported(
                "facet normals of a product cone; treat parts separately".into(),
            )),
        }
    }

    /// Generators whose nonnegative combinations give the cone.
    pub fn generators(&self) -> Result<Vec<Vec<f64>>> {
        match self {
            Self::Orthant { dim } => Ok((0..*dim)
                .map(|k| {
                    let mut e = vec![0.0; *dim];
                    e[k] = 1.0;
                    e
                })
                .collect()),
            Self::Generated { rays } => Ok(rays.iter().map(|r| normalized(r).unwrap()).collect()),
            Self::HalfspaceCone { normals } => {
                if normals[0].len() > 3 {
                    return Err(Error::Unsupported(
                        "vertex enumeration of halfspace cones beyond dimension 3".into(),
                    ));
                }
                Ok(extreme_rays(normals))
            }
            Self::Product { parts } => {
                let dim = self.dim();
                let mut out = Vec::new();
                let mut offset = 0;
                for part in parts {
                    for g in part.generators()? {
                        let mut e = vec![0.0; dim];
                        e[offset..offset + g.len()].copy_from_slice(&g);
                        out.push(e);
                    }
                    offset += part.dim();
                }
                Ok(out)
            }
        }
    }
}

/// Brute-force generators of `{n : ⟨v_j, n⟩ ≥ 0 ∀j}` in dimension ≤ 3.
///
/// Candidates are hyperplane intersections (perpendiculars in the plane,
/// cross products in space), coordinate axes, and the defining vectors
/// themselves (which cover lineality directions); those satisfying every
/// inequality are kept, normalized and deduplicated.
pub(crate) fn extreme_rays(vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = vs[0].len();
    let mut cands: Vec<Vec<f64>> = Vec::new();
    match dim {
        1 => {
            cands.push(vec![1.0]);
            cands.push(vec![-1.0]);
        }
        2 => {
            for v in vs {
                cands.push(vec![-v[1], v[0]]);
            }
        }
        _ => {
            let mut basis: Vec<Vec<f64>> = vs.to_vec();
            for k in 0..3 {
                let mut e = vec![0.0; 3];
                e[k] = 1.0;
                basis.push(e);
            }
            for i in 0..basis.len() {
                for j in (i + 1)..basis.len() {
                    cands.push(cross(&basis[i], &basis[j]));
                }
            }
        }
    }
    cands.extend(vs.iter().cloned());
    for k in 0..dim {
        let mut e = vec![0.0; dim];
        e[k] = 1.0;
        cands.push(e);
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    for c in cands {
        let Some(u) = normalized(&c) else { continue };
        for s in [1.0, -1.0] {
            let u = scale(&u, s);
            let valid = vs.iter().all(|v| dot(v, &u) >= -1e-10 * norm(v));
            if valid && !out.iter().any(|o| dist(o, &u) < 1e-9) {
                out.push(u);
            }
        }
    }
    out
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// `max_{s ∈ points} dist(s, C)` with the attaining member (first on ties).
pub fn excess(points: &[Point], cone: &ConeSpec) -> Result<ExcessValue> {
    let first = points.first().ok_or(Error::EmptyInput("excess of an empty set"))?;
    let mut best = (cone.distance(first)?, 0);
    for (i, p) in points.iter().enumerate().skip(1) {
        let d = cone.distance(p)?;
        if d > best.0 {
            best = (d, i);
        }
    }
    Ok(ExcessValue {
        value: best.0,
        witness: points[best.1].clone(),
    })
}

/// Sampled audit of C-boundedness: `S \ C ⊆ m·ball` over the listed points.
/// Can refute C-boundedness of the underlying set, never prove it.
pub fn c_bounded_probe(points: &[Point], cone: &ConeSpec, m: f64) -> bool {
    let tol = ConeTolerances::default().membership;
    points.iter().all(|p| {
        cone.contains(p, tol).unwrap_or(false) || p.norm() <= m
    })
}
