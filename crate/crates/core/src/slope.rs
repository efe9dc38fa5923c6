//! Strong slope, restricted strong slope and the sampled upper bound of
//! `ss-inf = inf { |∇ν|_K(x) : x ∈ K, ν(x) > 0 }`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, SlopeConfig};
use crate::error::{Error, Result};
use crate::merit::MeritOracle;
use crate::model::{ConstraintSet, ProblemInstance};
use crate::point::{axpy, check_dim, Point};
use crate::probes::probe_points;
use crate::sampling::sphere_directions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub x: Point,
    pub radii: Vec<f64>,
    pub per_radius_max: Vec<f64>,
    pub value: f64,
    pub restricted: bool,
    pub local_min_detected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsinfReport {
    #[serde(with = "crate::point::extended")]
    pub upper_bound: f64,
    pub argmin_witness: Option<Point>,
    /// Probes with `ν > tolerance` at which a slope was estimated.
    pub points_probed: usize,
    pub points_considered: usize,
}

/// Extra shells tried when the configured ones show no descent at a point
/// with positive value; shrinking stops once two consecutive shells agree.
const MAX_EXTRA_LEVELS: usize = 30;

fn shell_table<F>(phi: &F, x: &[f64], set: Option<&ConstraintSet>, cfg: &SlopeConfig) -> Result<SlopeEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let fx = phi(x);
    if !fx.is_finite() {
        return Err(Error::Precondition("function is infinite at the base point".into()));
    }
    let dim = x.len();
    let dirs = sphere_directions(dim, cfg.dirs_per_dim * dim);
    let shell = |r: f64| -> f64 {
        dirs.par_iter()
            .filter_map(|u| {
                let y = axpy(x, r, u);
                if let Some(k) = set {
                    if !k.contains(&y, 0.0) {
                        return None;
                    }
                }
                Some((fx - phi(&y)) / r)
            })
            .reduce(|| f64::NEG_INFINITY, f64::max)
    };
    let mut radii = Vec::new();
    let mut raw_max = Vec::new();
    let mut r = cfg.r0;
    for _ in 0..cfg.levels {
        radii.push(r);
        raw_max.push(shell(r));
        r *= cfg.shrink;
    }
    if fx > 0.0 && raw_max.last().is_some_and(|&q| q <= cfg.zero_tol) {
        let settled = |q: &[f64]| {
            let (a, b) = (q[q.len() - 2], q[q.len() - 1]);
            a > cfg.zero_tol && b > cfg.zero_tol && (a - b).abs() <= 0.1 * b
        };
        let mut extra = 0;
        while extra < MAX_EXTRA_LEVELS && !settled(&raw_max) {
            radii.push(r);
            raw_max.push(shell(r));
            r *= cfg.shrink;
            extra += 1;
        }
    }
    let per_radius_max: Vec<f64> = raw_max.iter().map(|q| q.max(0.0)).collect();
    let n = radii.len();
    let local_min_detected = raw_max[n.saturating_sub(2)..].iter().all(|&q| q <= cfg.zero_tol);
    let value = if local_min_detected { 0.0 } else { per_radius_max[n - 1] };
    Ok(SlopeEstimate {
        x: Point::from(x),
        radii,
        per_radius_max,
        value,
        restricted: set.is_some(),
        local_min_detected,
    })
}

/// Strong slope of an arbitrary function, over the full sphere of
/// directions.
pub fn strong_slope<F>(phi: F, x: &Point, cfg: &Config) -> Result<SlopeEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    shell_table(&phi, x, None, &cfg.slope)
}

/// Restricted slope `|∇ν|_K(x)` with `ν` evaluated on one fixed z-sample.
pub fn restricted_slope(p: &ProblemInstance, x: &Point, cfg: &Config) -> Result<SlopeEstimate> {
    check_dim(p.dim_x, x.dim())?;
    let oracle = MeritOracle::new(p, cfg)?;
    restricted_slope_with(&oracle, x, cfg)
}

pub(crate) fn restricted_slope_with(oracle: &MeritOracle<'_>, x: &Point, cfg: &Config) -> Result<SlopeEstimate> {
    let p = oracle.problem;
    if !p.constraints.contains(x, 1e-9) {
        return Err(Error::Precondition("restricted slope needs x in K".into()));
    }
    let nu = |y: &[f64]| oracle.nu(y);
    if !nu(x).is_finite() {
        return Err(Error::Precondition("merit is infinite at x".into()));
    }
    shell_table(&nu, x, Some(&p.constraints), &cfg.slope)
}

/// Minimum restricted slope over probes with `ν > probes.nu_tol`: an upper
/// bound of `ss-inf`, never a lower one.
pub fn ssinf_upper(p: &ProblemInstance, cfg: &Config) -> Result<SsinfReport> {
    let oracle = MeritOracle::new(p, cfg)?;
    let probes = probe_points(p, cfg)?;
    let candidates: Vec<&Vec<f64>> = probes.iter().filter(|x| oracle.nu(x) > cfg.probes.nu_tol).collect();
    let slopes: Vec<Result<SlopeEstimate>> = candidates
        .par_iter()
        .map(|x| restricted_slope_with(&oracle, &Point::from(x.as_slice()), cfg))
        .collect();
    let mut best = f64::INFINITY;
    let mut witness = None;
    for (x, s) in candidates.iter().zip(slopes) {
        let s = s?;
        if s.value < best {
            best = s.value;
            witness = Some(Point::from(x.as_slice()));
        }
    }
    Ok(SsinfReport {
        upper_bound: best,
        argmin_witness: witness,
        points_probed: candidates.len(),
        points_considered: probes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::ConeSpec;
    use crate::model::{BifunctionSpec, ConstraintKind};
    use crate::point::norm;
    use std::f64::consts::PI;

    #[test]
    fn smooth_function_matches_gradient_norm() {
        let s = strong_slope(|x: &[f64]| x[0] * x[0] + x[1] * x[1], &Point::new(vec![1.0, 0.0]).unwrap(), &Config::default())
            .unwrap();
        assert!((s.value - 2.0).abs() / 2.0 < 0.05, "{}", s.value);
    }

    #[test]
    fn norm_at_origin_is_a_minimum() {
        // every difference quotient equals -1: no descent at the minimizer
        let s = strong_slope(|x: &[f64]| norm(x), &Point::zeros(3), &Config::default()).unwrap();
        assert_eq!(s.value, 0.0);
        assert!(s.local_min_detected);
        assert!(s.per_radius_max.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn norm_away_from_origin_has_unit_slope() {
        let s = strong_slope(|x: &[f64]| norm(x), &Point::new(vec![0.0, 0.0, 2.0]).unwrap(), &Config::default()).unwrap();
        assert!((s.value - 1.0).abs() < 0.01, "{}", s.value);
    }

    #[test]
    fn shells_extend_below_the_distance_to_the_minimizer() {
        let s = strong_slope(|x: &[f64]| norm(x), &Point::new(vec![1e-4, 0.0]).unwrap(), &Config::default()).unwrap();
        assert!(s.radii.len() > Config::default().slope.levels);
        assert!((s.value - 1.0).abs() < 0.01, "{}", s.value);
    }

    #[test]
    fn constant_has_zero_slope() {
        let s = strong_slope(|_: &[f64]| 3.0, &Point::zeros(2), &Config::default()).unwrap();
        assert_eq!(s.value, 0.0);
        assert!(s.local_min_detected);
    }

    #[test]
    fn example1_slope_is_two_over_n() {
        let p = ProblemInstance::example1(1e3).unwrap();
        let s = restricted_slope(&p, &Point::new(vec![-0.5, -0.5]).unwrap(), &Config::default()).unwrap();
        assert!((s.value - 1.0).abs() < 0.1, "{}", s.value);
    }

    #[test]
    fn example2_interior_slope_is_one() {
        let p = ProblemInstance::example2(PI / 6.0).unwrap();
        let mut cfg = Config::default();
        cfg.merit.use_closed_form = false;
        let s = restricted_slope(&p, &Point::new(vec![2.0, 2.0]).unwrap(), &cfg).unwrap();
        assert!((s.value - 1.0).abs() < 0.05, "{}", s.value);
    }

    #[test]
    fn solution_is_a_local_minimum() {
        let p = ProblemInstance::example2(PI / 6.0).unwrap();
        let s = restricted_slope(&p, &Point::zeros(2), &Config::default()).unwrap();
        assert_eq!(s.value, 0.0);
        assert!(s.local_min_detected);
    }

    #[test]
    fn outside_k_is_rejected() {
        let p = ProblemInstance::example2(PI / 6.0).unwrap();
        assert!(restricted_slope(&p, &Point::new(vec![-1.0, 0.0]).unwrap(), &Config::default()).is_err());
    }

    #[test]
    fn ssinf_example2_is_one() {
        let p = ProblemInstance::example2(PI / 6.0).unwrap();
        let r = ssinf_upper(&p, &Config::default()).unwrap();
        assert!((r.upper_bound - 1.0).abs() < 0.05, "{}", r.upper_bound);
        assert!(r.points_probed > 0);
    }

    #[test]
    fn ssinf_of_identically_zero_merit_is_infinite() {
        // f(x,z) = (1,1) always lies in C
        let p = ProblemInstance::new(
            BifunctionSpec::Affine { a: vec![vec![0.0, 0.0]; 2], b: vec![vec![0.0, 0.0]; 2], c: vec![1.0, 1.0] },
            ConeSpec::orthant(2).unwrap(),
            crate::model::ConstraintSet::new(
                ConstraintKind::Box { lower: vec![Some(-1.0); 2], upper: vec![Some(1.0); 2] },
                10.0,
            )
            .unwrap(),
            None,
        )
        .unwrap();
        let r = ssinf_upper(&p, &Config::default()).unwrap();
        assert_eq!(r.upper_bound, f64::INFINITY);
        assert_eq!(r.points_probed, 0);
        assert!(r.argmin_witness.is_none());
    }
}
