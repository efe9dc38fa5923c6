//! Inner approximations of `∂ν(x)` by the max rule, the normal-cone maps
//! `B̂*_K` and `B*_C`, and the γ-separation audit
//! `[∂ν(x) + B̂*_K(x)] ∩ γ·ball = ∅`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cones::ConeSpec;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::min_norm_point;
use crate::merit::{active_set_with, MeritOracle};
use crate::model::{BifunctionSpec, NamedExample, ProblemInstance};
use crate::point::{add, check_dim, dist, mat_t_vec, norm, normalized, scale, sub, Point};
use crate::sampling::{halton, slerp_arc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exactness {
    Exact,
    Outer,
    Sampled,
}

/// How the generators describe the set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HullShape {
    /// The convex hull of the generators.
    Hull,
    /// The generators themselves: a discretized piece of the unit sphere,
    /// which is not convex.
    SphereUnion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullDescription {
    pub generators: Vec<Point>,
    pub exactness: Exactness,
    pub shape: HullShape,
}

impl HullDescription {
    fn hull(generators: Vec<Vec<f64>>, exactness: Exactness) -> Self {
        Self {
            generators: dedup(generators).into_iter().map(|g| Point::from(g.as_slice())).collect(),
            exactness,
            shape: HullShape::Hull,
        }
    }

    fn sphere(generators: Vec<Vec<f64>>, exactness: Exactness) -> Self {
        Self {
            generators: dedup(generators).into_iter().map(|g| Point::from(g.as_slice())).collect(),
            exactness,
            shape: HullShape::SphereUnion,
        }
    }

    fn vecs(&self) -> Vec<Vec<f64>> {
        self.generators.iter().map(|g| g.coords().to_vec()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdiffReport {
    pub x: Point,
    pub nu_hull: HullDescription,
    #[serde(rename = "bK_hull")]
    pub bk_hull: HullDescription,
    pub gamma_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaProbe {
    pub x: Point,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaAudit {
    /// Minimum over probes: an upper bound of the best valid γ.
    pub value: f64,
    pub argmin: Option<Point>,
    pub per_probe: Vec<GammaProbe>,
}

fn dedup(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if !out.iter().any(|o| dist(o, &p) < 1e-9) {
            out.push(p);
        }
    }
    out
}

/// Linear part in `x` for bifunctions affine in `x` with a known matrix.
fn x_matrix(p: &ProblemInstance) -> Option<Vec<Vec<f64>>> {
    match &p.bifunction {
        BifunctionSpec::Affine { a, .. } => Some(a.clone()),
        BifunctionSpec::Named { name: NamedExample::Example2, .. } => Some(vec![vec![-1.0, 0.0], vec![0.0, -1.0]]),
        _ => None,
    }
}

/// Gradient of `x ↦ dist(f(x,z), C)` where the distance is positive:
/// `Aᵀ(y − P_C y)/dist` for affine `f`, central differences otherwise.
pub fn grad_component(p: &ProblemInstance, x: &Point, z: &Point, cfg: &Config) -> Result<Point> {
    check_dim(p.dim_x, x.dim())?;
    check_dim(p.dim_x, z.dim())?;
    Ok(Point::from(grad_unchecked(p, x, z, cfg)?.as_slice()))
}

fn grad_unchecked(p: &ProblemInstance, x: &[f64], z: &[f64], cfg: &Config) -> Result<Vec<f64>> {
    let y = p.eval_unchecked(x, z);
    let proj = p.cone.project(&y)?;
    let d = dist(&y, &proj);
    if d <= 1e-12 * norm(&y).max(1.0) {
        return Err(Error::Kink("zero distance: subgradient set not a singleton".into()));
    }
    if let Some(a) = x_matrix(p) {
        return Ok(scale(&mat_t_vec(&a, &sub(&y, &proj)), 1.0 / d));
    }
    let h = cfg.subdiff.fd_step * norm(x).max(1.0);
    Ok((0..x.len())
        .map(|i| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            (p.residual(&xp, z) - p.residual(&xm, z)) / (2.0 * h)
        })
        .collect())
}

fn arc_points(gens: &[Vec<f64>], resolution: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = gens.to_vec();
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            let angle = crate::point::dot(&gens[i], &gens[j]).clamp(-1.0, 1.0).acos();
            let steps = ((angle / resolution).ceil() as usize).max(1);
            out.extend(slerp_arc(&gens[i], &gens[j], steps));
        }
    }
    if gens.len() >= 3 {
        for k in 1..=64u64 {
            let w = halton(k, gens.len());
            let total: f64 = w.iter().sum();
            let mix = gens
                .iter()
                .zip(&w)
                .fold(vec![0.0; gens[0].len()], |acc, (g, wi)| add(&acc, &scale(g, wi / total)));
            if let Some(u) = normalized(&mix) {
                out.push(u);
            }
        }
    }
    out
}

/// `B̂*_K(x)`: `N(x;K) ∩ ball` for `x ∈ K`, and `N(w;K) ∩ sphere` at the
/// projection `w` otherwise.
pub fn b_star_k(p: &ProblemInstance, x: &Point, cfg: &Config) -> Result<HullDescription> {
    check_dim(p.dim_x, x.dim())?;
    let k = &p.constraints;
    let res = cfg.subdiff.arc_resolution;
    if k.contains(x, 1e-9) {
        let normals = k.active_normals(x, 1e-9);
        if normals.is_empty() {
            return Ok(HullDescription::hull(vec![vec![0.0; p.dim_x]], Exactness::Exact));
        }
        let exact = if normals.len() == 1 { Exactness::Exact } else { Exactness::Sampled };
        let mut gens = vec![vec![0.0; p.dim_x]];
        gens.extend(arc_points(&normals, res));
        return Ok(HullDescription::hull(gens, exact));
    }
    let w = k.project(x)?;
    let mut normals = k.active_normals(&w, 1e-9);
    if normals.is_empty() {
        normals.push(normalized(&sub(x, &w)).unwrap());
    }
    let exact = if normals.len() == 1 { Exactness::Exact } else { Exactness::Sampled };
    Ok(HullDescription::sphere(arc_points(&normals, res), exact))
}

/// `B*_C`: the negative dual cone capped by the unit ball when `ν(x) = 0`,
/// intersected with the unit sphere when `ν(x) > 0`.
pub fn b_star_c(cone: &ConeSpec, nu_at_x: f64, cfg: &Config) -> Result<HullDescription> {
    let gens: Vec<Vec<f64>> = cone
        .polar_neg()?
        .generators()?
        .into_iter()
        .filter_map(|g| normalized(&g))
        .collect();
    let arc = arc_points(&gens, cfg.subdiff.arc_resolution);
    if nu_at_x <= 0.0 {
        let mut g = vec![vec![0.0; cone.dim()]];
        g.extend(arc);
        Ok(HullDescription::hull(g, Exactness::Sampled))
    } else {
        Ok(HullDescription::sphere(arc, Exactness::Sampled))
    }
}

/// Max-rule estimate of `∂ν(x)`: gradients of the ε-active components,
/// plus `0` when `ν(x) = 0`. Refuses when the concavity audit fails.
pub fn subdiff_nu(p: &ProblemInstance, x: &Point, cfg: &Config) -> Result<HullDescription> {
    check_dim(p.dim_x, x.dim())?;
    guard_concavity(p, cfg)?;
    let oracle = MeritOracle::new(p, cfg)?;
    subdiff_nu_with(&oracle, x, cfg)
}

fn guard_concavity(p: &ProblemInstance, cfg: &Config) -> Result<()> {
    let check = crate::certify::concavity_check(p, cfg.subdiff.concavity_pairs, cfg)?;
    if check.status == crate::certify::CheckStatus::Refuted {
        return Err(Error::AuditRefuted(format!(
            "max rule needs convex components: {}",
            check.evidence
        )));
    }
    Ok(())
}

pub(crate) fn subdiff_nu_with(oracle: &MeritOracle<'_>, x: &Point, cfg: &Config) -> Result<HullDescription> {
    let p = oracle.problem;
    let active = active_set_with(oracle, x, None, cfg)?;
    let mut gens = Vec::new();
    for z in &active.members {
        match grad_unchecked(p, x, z, cfg) {
            Ok(g) => gens.push(g),
            Err(Error::Kink(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if oracle.nu(x) <= cfg.probes.nu_tol || active.nu <= cfg.probes.nu_tol || gens.is_empty() {
        gens.push(vec![0.0; p.dim_x]);
    }
    Ok(HullDescription::hull(gens, Exactness::Sampled))
}

/// Alternative outer estimate for `f` affine in `x`: `Aᵀ` applied to the
/// generators of `B*_C`.
pub fn adjoint_outer_hull(p: &ProblemInstance, nu_at_x: f64, cfg: &Config) -> Result<HullDescription> {
    let a = x_matrix(p).ok_or_else(|| Error::Unsupported("adjoint hull needs f affine in x".into()))?;
    let bc = b_star_c(&p.cone, nu_at_x, cfg)?;
    let gens = bc.generators.iter().map(|g| mat_t_vec(&a, g)).collect();
    Ok(HullDescription {
        generators: dedup(gens).into_iter().map(|g| Point::from(g.as_slice())).collect(),
        exactness: Exactness::Outer,
        shape: bc.shape,
    })
}

/// Distance from the origin to `∂ν + B̂`, where `B̂` is convexified when it
/// is a ball piece and taken pointwise when it is a sphere piece.
pub fn separation(nu_hull: &HullDescription, bk: &HullDescription, tol: f64) -> Result<f64> {
    let a = nu_hull.vecs();
    let b = bk.vecs();
    match bk.shape {
        HullShape::Hull => {
            let sums: Vec<Vec<f64>> = a.iter().flat_map(|u| b.iter().map(move |v| add(u, v))).collect();
            Ok(min_norm_point(&sums, tol)?.norm)
        }
        HullShape::SphereUnion => {
            let mut best = f64::INFINITY;
            for v in &b {
                let shifted: Vec<Vec<f64>> = a.iter().map(|u| add(u, v)).collect();
                best = best.min(min_norm_point(&shifted, tol)?.norm);
            }
            Ok(best)
        }
    }
}

pub fn subdiff_report(p: &ProblemInstance, x: &Point, cfg: &Config) -> Result<SubdiffReport> {
    check_dim(p.dim_x, x.dim())?;
    guard_concavity(p, cfg)?;
    let oracle = MeritOracle::new(p, cfg)?;
    report_with(&oracle, x, cfg)
}

fn report_with(oracle: &MeritOracle<'_>, x: &Point, cfg: &Config) -> Result<SubdiffReport> {
    let nu_hull = subdiff_nu_with(oracle, x, cfg)?;
    let bk_hull = b_star_k(oracle.problem, x, cfg)?;
    let gamma_value = separation(&nu_hull, &bk_hull, cfg.subdiff.min_norm_tol)?;
    Ok(SubdiffReport {
        x: x.clone(),
        nu_hull,
        bk_hull,
        gamma_value,
    })
}

/// Minimum separation over the probes; probes must not be solutions.
pub fn gamma_audit(p: &ProblemInstance, probes: &[Point], cfg: &Config) -> Result<GammaAudit> {
    if probes.is_empty() {
        return Err(Error::EmptyInput("gamma audit needs probes"));
    }
    guard_concavity(p, cfg)?;
    let oracle = MeritOracle::new(p, cfg)?;
    for x in probes {
        check_dim(p.dim_x, x.dim())?;
        if oracle.nu_ka(x) <= cfg.probes.nu_tol {
            return Err(Error::Precondition(format!("probe {:?} is a solution", x.coords())));
        }
    }
    let per_probe: Vec<GammaProbe> = probes
        .par_iter()
        .map(|x| {
            report_with(&oracle, x, cfg).map(|r| GammaProbe {
                x: x.clone(),
                gamma: r.gamma_value,
            })
        })
        .collect::<Result<_>>()?;
    let mut value = f64::INFINITY;
    let mut argmin = None;
    for g in &per_probe {
        if g.gamma < value {
            value = g.gamma;
            argmin = Some(g.x.clone());
        }
    }
    Ok(GammaAudit {
        value,
        argmin,
        per_probe,
    })
}
