//! Metric C-increase: cone depth, the σ-search over B-derivatives and the
//! definitional ball-inclusion check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cones::ConeSpec;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::merit::MeritOracle;
use crate::model::ProblemInstance;
use crate::point::{axpy, check_dim, dot, normalized, sub, Point};
use crate::probes::{probe_points, spread};
use crate::sampling::sphere_directions;
use crate::search;

const DIRECTION_SEED_SALT: u64 = 0xd1_7ec7;
const Z_SEED_SALT: u64 = 0x2_5a3b;

/// Largest `σ` with `y + σ·ball ⊆ C`; negative when `y ∉ C` (most violated
/// facet).
pub fn depth(cone: &ConeSpec, y: &[f64]) -> Result<f64> {
    check_dim(cone.dim(), y.len())?;
    match cone {
        ConeSpec::Orthant { .. } => Ok(y.iter().copied().fold(f64::INFINITY, f64::min)),
        ConeSpec::HalfspaceCone { normals } => {
            Ok(normals.iter().map(|a| dot(a, y)).fold(f64::INFINITY, f64::min))
        }
        ConeSpec::Generated { .. } => {
            let normals = cone.facet_normals()?;
            Ok(normals.iter().map(|a| dot(a, y)).fold(f64::INFINITY, f64::min))
        }
        ConeSpec::Product { parts } => {
            let mut offset = 0;
            let mut best = f64::INFINITY;
            for part in parts {
                let d = part.dim();
                best = best.min(depth(part, &y[offset..offset + d])?);
                offset += d;
            }
            Ok(best)
        }
    }
}

/// Depth evaluator with facet normals resolved once.
struct Depth {
    blocks: Vec<(usize, Vec<Vec<f64>>)>,
}

impl Depth {
    fn new(cone: &ConeSpec) -> Result<Self> {
        let mut blocks = Vec::new();
        let mut stack = vec![cone];
        let mut offset = 0;
        while let Some(c) = stack.pop() {
            match c {
                ConeSpec::Product { parts } => stack.extend(parts.iter().rev()),
                _ => {
                    blocks.push((offset, c.facet_normals()?));
                    offset += c.dim();
                }
            }
        }
        Ok(Self { blocks })
    }

    fn eval(&self, y: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for (offset, normals) in &self.blocks {
            for a in normals {
                best = best.min(dot(a, &y[*offset..*offset + a.len()]));
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncreaseWitness {
    pub x0: Point,
    pub u0: Point,
    /// `min_z depth(C, D_x f(·,z)(x0)(u0))`
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncreaseCertificate {
    pub region: Vec<Point>,
    pub region_description: String,
    pub sigma: f64,
    pub witnesses: Vec<IncreaseWitness>,
    pub incr_lower_bound: f64,
    pub mode: String,
    pub z_budget: usize,
}

/// Outcome of [`sigma_search`]: per-point maxima are kept even when no
/// certificate is issued.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSearch {
    pub certificate: Option<IncreaseCertificate>,
    pub sigma_estimate: f64,
    pub per_point: Vec<IncreaseWitness>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncreaseCheck {
    pub holds: bool,
    pub witness_x: Option<Point>,
    /// `min_z depth(C, f(x,z) − f(x0,z))` at the best candidate.
    pub best_depth: f64,
    /// `(α − 1)·r`
    pub required: f64,
}

struct Context<'a> {
    problem: &'a ProblemInstance,
    zs: Vec<Vec<f64>>,
    depth: Depth,
    dir_pool: Vec<Vec<f64>>,
    sphere_count: usize,
    nu_tol: f64,
    oracle: MeritOracle<'a>,
}

impl<'a> Context<'a> {
    fn new(p: &'a ProblemInstance, cfg: &Config) -> Result<Self> {
        let ic = &cfg.increase;
        let zs = p
            .sample_constraint(ic.z_budget, cfg.seed ^ Z_SEED_SALT)?
            .points
            .into_iter()
            .map(Point::into_vec)
            .collect();
        let targets = p
            .constraints
            .sample_within(ic.direction_samples.max(1), cfg.seed ^ DIRECTION_SEED_SALT, cfg.probes.radius)?
            .points
            .into_iter()
            .map(Point::into_vec)
            .collect::<Vec<_>>();
        let mut dir_pool = sphere_directions(p.dim_x, ic.dirs_per_dim * p.dim_x);
        let sphere_count = dir_pool.len();
        dir_pool.extend(targets);
        Ok(Self {
            problem: p,
            zs,
            depth: Depth::new(&p.cone)?,
            dir_pool,
            sphere_count,
            nu_tol: cfg.probes.nu_tol,
            oracle: MeritOracle::new(p, cfg)?,
        })
    }

    fn active(&self, x0: &[f64]) -> Vec<Vec<f64>> {
        self.problem.constraints.active_normals(x0, 1e-9)
    }

    fn feasible(active: &[Vec<f64>], u: &[f64]) -> bool {
        active.iter().all(|a| dot(a, u) <= 1e-12)
    }

    /// Unit feasible directions at `x0`: the sphere directions that are
    /// feasible, and `(k − x0)/‖k − x0‖` for constraint samples `k`,
    /// deduplicated at `resolution`.
    fn directions(&self, x0: &[f64], resolution: f64) -> Vec<Vec<f64>> {
        let active = self.active(x0);
        let mut out: Vec<Vec<f64>> = Vec::new();
        for (i, v) in self.dir_pool.iter().enumerate() {
            let u = if i < self.sphere_count { Some(v.clone()) } else { normalized(&sub(v, x0)) };
            let Some(u) = u else { continue };
            if !Self::feasible(&active, &u) {
                continue;
            }
            if out.iter().all(|o| crate::point::dist(o, &u) > resolution) {
                out.push(u);
            }
        }
        out
    }

    fn value(&self, x0: &[f64], u: &[f64]) -> f64 {
        self.zs
            .iter()
            .map(|z| match self.problem.b_derivative(x0, z, u) {
                Ok(d) => self.depth.eval(&d),
                Err(_) => f64::NEG_INFINITY,
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Best feasible direction at one point.
fn best_direction(ctx: &Context<'_>, x0: &[f64], cfg: &Config) -> IncreaseWitness {
    let active = ctx.active(x0);
    let dirs = ctx.directions(x0, cfg.increase.dedup_resolution);
    let mut best_u = dirs.first().cloned().unwrap_or_else(|| vec![0.0; x0.len()]);
    let mut best = f64::NEG_INFINITY;
    for u in &dirs {
        let v = ctx.value(x0, u);
        if v > best {
            best = v;
            best_u = u.clone();
        }
    }
    if !dirs.is_empty() && cfg.increase.refine_iters > 0 {
        let out = search::minimize(
            |u| {
                if Context::feasible(&active, u) {
                    -ctx.value(x0, u)
                } else {
                    f64::INFINITY
                }
            },
            |u| normalized(&u).unwrap_or(u),
            best_u.clone(),
            0.1,
            1e-9,
            cfg.increase.refine_iters,
            usize::MAX,
            f64::NEG_INFINITY,
        );
        if -out.value > best {
            best = -out.value;
            best_u = out.x;
        }
    }
    IncreaseWitness {
        x0: Point::from(x0),
        u0: Point::from(best_u.as_slice()),
        value: best,
    }
}

/// Default region: probe points with `ν > tolerance`, spread across scales.
pub fn default_region(p: &ProblemInstance, cfg: &Config) -> Result<Vec<Point>> {
    let oracle = MeritOracle::new(p, cfg)?;
    let probes: Vec<Vec<f64>> = probe_points(p, cfg)?
        .into_iter()
        .filter(|x| oracle.nu(x) > cfg.probes.nu_tol)
        .collect();
    Ok(spread(&probes, cfg.increase.region_size)
        .into_iter()
        .map(|x| Point::from(x.as_slice()))
        .collect())
}

/// Searches the largest `σ` such that every region point has a unit
/// feasible direction `u0` with `D_x f(·,z)(x0)(u0) + σ·ball ⊆ C` for all
/// sampled `z`.
pub fn sigma_search(p: &ProblemInstance, region: &[Point], cfg: &Config) -> Result<SigmaSearch> {
    if region.is_empty() {
        return Err(Error::EmptyInput("sigma search needs a nonempty region"));
    }
    let ctx = Context::new(p, cfg)?;
    for x in region {
        check_dim(p.dim_x, x.dim())?;
        if !p.constraints.contains(x, 1e-9) {
            return Err(Error::Precondition(format!("region point {:?} is outside K", x.coords())));
        }
        if ctx.oracle.nu(x) <= ctx.nu_tol {
            return Err(Error::Precondition(format!("region point {:?} is a solution", x.coords())));
        }
    }
    let per_point: Vec<IncreaseWitness> = region.par_iter().map(|x| best_direction(&ctx, x, cfg)).collect();
    let sigma = per_point.iter().map(|w| w.value).fold(f64::INFINITY, f64::min);
    let certificate = (sigma > cfg.increase.sigma_tol).then(|| IncreaseCertificate {
        region: region.to_vec(),
        region_description: format!("{} points of K with merit above {:e}", region.len(), ctx.nu_tol),
        sigma,
        witnesses: per_point.clone(),
        incr_lower_bound: sigma + 1.0,
        mode: "b-derivative".into(),
        z_budget: ctx.zs.len(),
    });
    let failure = certificate.is_none().then(|| {
        let worst = per_point
            .iter()
            .min_by(|a, b| a.value.total_cmp(&b.value))
            .map(|w| w.x0.coords().to_vec())
            .unwrap_or_default();
        format!("per-point depth drops to {sigma:.3e} at {worst:?}, not above {:e}", cfg.increase.sigma_tol)
    });
    Ok(SigmaSearch {
        certificate,
        sigma_estimate: sigma,
        per_point,
        failure,
    })
}

/// Sufficient test of the metric-increase inclusion at `x0`: a point `x` of
/// `ball(x0, r) ∩ K` with `depth(C, f(x,z) − f(x0,z)) ≥ (α − 1)·r` for all
/// sampled `z`. Candidates are `x0 + r·u` for the hinted direction first,
/// then the feasible direction pool.
pub fn check_increase_at(
    p: &ProblemInstance,
    x0: &Point,
    alpha: f64,
    r: f64,
    hint: Option<&[f64]>,
    cfg: &Config,
) -> Result<IncreaseCheck> {
    check_dim(p.dim_x, x0.dim())?;
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::Precondition("alpha must exceed 1".into()));
    }
    if !(r > 0.0 && r <= cfg.increase.delta0) {
        return Err(Error::Precondition(format!("radius must lie in (0, {}]", cfg.increase.delta0)));
    }
    if !p.constraints.contains(x0, 1e-9) {
        return Err(Error::Precondition("x0 must lie in K".into()));
    }
    let ctx = Context::new(p, cfg)?;
    if ctx.oracle.nu(x0) <= ctx.nu_tol {
        return Err(Error::Precondition("x0 is a solution".into()));
    }
    let required = (alpha - 1.0) * r;
    let f0: Vec<Vec<f64>> = ctx.zs.iter().map(|z| p.eval_unchecked(x0, z)).collect();
    let score = |x: &[f64]| -> f64 {
        ctx.zs
            .iter()
            .zip(&f0)
            .map(|(z, f0z)| ctx.depth.eval(&sub(&p.eval_unchecked(x, z), f0z)))
            .fold(f64::INFINITY, f64::min)
    };
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    if let Some(u) = hint.and_then(normalized) {
        candidates.push(u);
    }
    candidates.extend(ctx.directions(x0, cfg.increase.dedup_resolution));
    let mut best = f64::NEG_INFINITY;
    let mut best_x = None;
    for u in candidates {
        let x = axpy(x0, r, &u);
        if !p.constraints.contains(&x, 1e-12) {
            continue;
        }
        let s = score(&x);
        if s > best {
            best = s;
            best_x = Some(x);
        }
        if best >= required {
            break;
        }
    }
    let holds = best >= required;
    Ok(IncreaseCheck {
        holds,
        witness_x: best_x.filter(|_| holds).map(|x| Point::from(x.as_slice())),
        best_depth: best,
        required,
    })
}

/// Largest radius among `radii` at which [`check_increase_at`] succeeds.
pub fn largest_passing_radius(
    p: &ProblemInstance,
    x0: &Point,
    alpha: f64,
    radii: &[f64],
    hint: Option<&[f64]>,
    cfg: &Config,
) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for &r in radii {
        if check_increase_at(p, x0, alpha, r, hint, cfg)?.holds {
            best = Some(best.map_or(r, |b: f64| b.max(r)));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng;
    use rand::Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn depth_examples() {
        let c = ConeSpec::orthant(2).unwrap();
        assert!((depth(&c, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap() - FRAC_1_SQRT_2).abs() < 1e-15);
        let t = PI / 6.0;
        assert!((depth(&c, &[t.cos(), t.sin()]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(depth(&c, &[-1.0, 5.0]).unwrap(), -1.0);
    }

    #[test]
    fn depth_is_the_inscribed_ball_radius() {
        // y + σ·ball ⊆ C checked on boundary points of the ball
        let cones = [
            ConeSpec::orthant(2).unwrap(),
            ConeSpec::halfspaces(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap(),
            ConeSpec::generated(vec![vec![1.0, 0.2], vec![0.3, 1.0]]).unwrap(),
        ];
        let mut r = rng(11);
        for c in &cones {
            for _ in 0..200 {
                let y = vec![r.gen_range(-2.0..3.0), r.gen_range(-2.0..3.0)];
                let s = depth(c, &y).unwrap();
                let dirs = sphere_directions(2, 1000);
                let inside = |sig: f64| dirs.iter().all(|u| c.contains(&axpy(&y, sig, u), 1e-9).unwrap());
                if s >= 0.0 {
                    assert!(inside(s * (1.0 - 1e-9)), "{y:?} {s}");
                    assert!(!inside(s * 1.01 + 1e-6), "{y:?} {s}");
                } else {
                    assert!(!c.contains(&y, 1e-9).unwrap() || s > -1e-9);
                }
            }
        }
    }

    #[test]
    fn depth_of_product_is_the_smallest_part() {
        let c = ConeSpec::product(vec![ConeSpec::orthant(1).unwrap(), ConeSpec::orthant(2).unwrap()]).unwrap();
        assert_eq!(depth(&c, &[3.0, 2.0, 5.0]).unwrap(), 2.0);
    }

    #[test]
    fn example2_sigma_is_sin_theta() {
        let p = ProblemInstance::example2(PI / 6.0).unwrap();
        let cfg = Config::default();
        let region = default_region(&p, &cfg).unwrap();
        assert!(region.len() >= 40);
        let s = sigma_search(&p, &region, &cfg).unwrap();
        let cert = s.certificate.expect("certificate");
        assert!(cert.sigma >= 0.5 - 1e-3 && cert.sigma <= 0.5 + 1e-9, "{}", cert.sigma);
        assert_eq!(cert.incr_lower_bound, cert.sigma + 1.0);
    }

    #[test]
    fn example2_degenerate_sector_has_no_sigma() {
        let p = ProblemInstance::example2(0.0).unwrap();
        let cfg = Config::default();
        let region = vec![Point::new(vec![0.5, 0.0]).unwrap(), Point::new(vec![1.0, 1.0]).unwrap()];
        let s = sigma_search(&p, &region, &cfg).unwrap();
        assert!(s.certificate.is_none());
        assert!(s.failure.is_some());
    }

    #[test]
    fn example1_has_no_uniform_sigma() {
        let p = ProblemInstance::example1(1e3).unwrap();
        let cfg = Config::default();
        let region = vec![Point::new(vec![-1.0, -1.0]).unwrap(), Point::new(vec![-1e-4, -2e-4]).unwrap()];
        let s = sigma_search(&p, &region, &cfg).unwrap();
        assert!(s.certificate.is_none());
        // the analytic depth bound 2‖x0‖
        assert!(s.per_point[1].value <= 2.0 * 2.3e-4);
    }

    #[test]
    fn solutions_rejected_from_region() {
        let p = ProblemInstance::example2(PI / 6.0).unwrap();
        assert!(sigma_search(&p, &[Point::zeros(2)], &Config::default()).is_err());
        assert!(sigma_search(&p, &[Point::new(vec![-1.0, 0.0]).unwrap()], &Config::default()).is_err());
    }

    #[test]
    fn definitional_check_examples() {
        let p = ProblemInstance::example2(PI / 6.0).unwrap();
        let cfg = Config::default();
        let x0 = Point::new(vec![2.0, 2.0]).unwrap();
        let u0 = [-FRAC_1_SQRT_2, -FRAC_1_SQRT_2];
        let ok = check_increase_at(&p, &x0, 1.5, 0.01, Some(&u0), &cfg).unwrap();
        assert!(ok.holds);
        assert!((ok.best_depth - 0.01 * FRAC_1_SQRT_2).abs() < 1e-12);
        let no = check_increase_at(&p, &x0, 1.8, 0.01, Some(&u0), &cfg).unwrap();
        assert!(!no.holds);
        assert!(no.best_depth < 0.008);
        assert!(check_increase_at(&p, &Point::zeros(2), 1.5, 0.01, None, &cfg).is_err());
    }

    #[test]
    fn certified_witnesses_pass_the_definitional_check() {
        let p = ProblemInstance::example2(PI / 6.0).unwrap();
        let cfg = Config::default();
        let region = spread(
            &default_region(&p, &cfg).unwrap().into_iter().map(Point::into_vec).collect::<Vec<_>>(),
            8,
        );
        let region: Vec<Point> = region.into_iter().map(|v| Point::new(v).unwrap()).collect();
        let cert = sigma_search(&p, &region, &cfg).unwrap().certificate.unwrap();
        let alpha = 1.0 + cert.sigma * (1.0 - 1e-6);
        for w in &cert.witnesses {
            let scale = w.x0.norm();
            for r in [1e-2 * scale, 1e-3 * scale] {
                let c = check_increase_at(&p, &w.x0, alpha, r, Some(&w.u0), &cfg).unwrap();
                assert!(c.holds, "{:?} r={r}", w.x0);
            }
        }
        assert!(largest_passing_radius(&p, &cert.witnesses[0].x0, alpha, &[1e-3, 1e-2], None, &cfg)
            .unwrap()
            .is_some());
    }
}
