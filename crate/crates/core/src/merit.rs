//! The merit functions `ν(x) = sup_{z∈K} dist(f(x,z), C)` and
//! `ν_K(x) = ν(x) + dist(x, K)`.
//!
//! The supremum is estimated from below by maximizing over a deterministic
//! sample of `K` and refining the best sample with a compass search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::model::ProblemInstance;
use crate::point::{axpy, check_dim, dist, sub, Point};
use crate::search;

const PARALLEL_THRESHOLD: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeritReport {
    pub x: Point,
    #[serde(with = "crate::point::extended")]
    pub nu: f64,
    #[serde(rename = "dist_x_K")]
    pub dist_x_k: f64,
    #[serde(with = "crate::point::extended")]
    pub nu_ka: f64,
    pub witness_z: Point,
    pub samples_used: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub truncation_note: Option<String>,
    /// Numeric form of the truncation note.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub truncation_gap: Option<f64>,
    pub used_closed_form: bool,
    /// The sampled (and refined) estimate, also reported when the closed
    /// form was used.
    #[serde(with = "crate::point::extended")]
    pub nu_sampled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSet {
    pub x: Point,
    pub epsilon: f64,
    /// Reference value: the best evaluated `dist(f(x,z), C)`.
    pub nu: f64,
    pub members: Vec<Point>,
    /// Set when the members lie on the truncation sphere of an unbounded
    /// `K`, i.e. the supremum is approached only far out.
    pub supremum_possibly_not_attained: bool,
}

/// `ν` evaluated against one fixed sample of `K`.
#[derive(Debug, Clone)]
pub struct MeritOracle<'a> {
    pub problem: &'a ProblemInstance,
    pub zs: Vec<Vec<f64>>,
    pub center: Vec<f64>,
    pub truncation_radius: Option<f64>,
    pub use_closed_form: bool,
    pub value_cap: f64,
}

impl<'a> MeritOracle<'a> {
    pub fn new(problem: &'a ProblemInstance, cfg: &Config) -> Result<Self> {
        Self::with_budget(problem, cfg.merit.z_budget, cfg.seed, cfg)
    }

    pub fn with_budget(problem: &'a ProblemInstance, budget: usize, seed: u64, cfg: &Config) -> Result<Self> {
        let sample = problem.sample_constraint(budget, seed)?;
        let center = problem.constraints.project(&vec![0.0; problem.dim_x])?;
        Ok(Self {
            problem,
            zs: sample.points.into_iter().map(Point::into_vec).collect(),
            center,
            truncation_radius: sample.truncation_radius,
            use_closed_form: cfg.merit.use_closed_form,
            value_cap: cfg.merit.value_cap,
        })
    }

    pub fn residual(&self, x: &[f64], z: &[f64]) -> f64 {
        self.problem.residual(x, z)
    }

    /// Largest residual over the sample and the index attaining it (ties
    /// go to the smallest index).
    pub fn sampled_max(&self, x: &[f64]) -> (f64, usize) {
        let pick = |a: (f64, usize), b: (f64, usize)| {
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        };
        let start = (f64::NEG_INFINITY, usize::MAX);
        if self.zs.len() >= PARALLEL_THRESHOLD {
            self.zs
                .par_iter()
                .enumerate()
                .map(|(i, z)| (self.residual(x, z), i))
                .reduce(|| start, pick)
        } else {
            self.zs
                .iter()
                .enumerate()
                .map(|(i, z)| (self.residual(x, z), i))
                .fold(start, pick)
        }
    }

    /// `ν(x)`: the closed form when enabled and available, else the
    /// sampled maximum (no refinement, so values are comparable across
    /// points).
    pub fn nu(&self, x: &[f64]) -> f64 {
        if self.use_closed_form {
            if let Some(v) = self.problem.closed_form_merit(x) {
                return v;
            }
        }
        let v = self.sampled_max(x).0;
        if v > self.value_cap {
            f64::INFINITY
        } else {
            v
        }
    }

    pub fn nu_ka(&self, x: &[f64]) -> f64 {
        self.nu(x) + self.problem.constraints.distance(x).unwrap_or(f64::INFINITY)
    }

    fn clip(&self, z: Vec<f64>) -> Vec<f64> {
        let z = self.problem.constraints.project(&z).unwrap_or(z);
        match self.truncation_radius {
            Some(r) => {
                let d = dist(&z, &self.center);
                if d > r {
                    axpy(&self.center, r / d, &sub(&z, &self.center))
                } else {
                    z
                }
            }
            None => z,
        }
    }

    /// Compass-search refinement of `z ↦ dist(f(x,z), C)` from `z0`.
    pub fn refine(&self, x: &[f64], z0: &[f64], iters: usize) -> (Vec<f64>, f64) {
        let step = 0.1 * dist(z0, &self.center).max(1.0);
        let cap = self.value_cap;
        let out = search::minimize(
            |z| -self.residual(x, z),
            |z| self.clip(z),
            z0.to_vec(),
            step,
            0.0,
            iters,
            usize::MAX,
            -cap,
        );
        (out.x, -out.value)
    }
}

fn truncation_note(p: &ProblemInstance) -> (Option<String>, Option<f64>) {
    match p.truncation_gap() {
        Some(g) if g > 0.0 => (
            Some(format!(
                "sampled supremum may fall short of the true value by at most {g:.6e} (truncation radius {})",
                p.constraints.truncation_radius
            )),
            Some(g),
        ),
        Some(g) => (Some("supremum attained inside the truncation ball".into()), Some(g)),
        None => (None, None),
    }
}

/// Full merit report for `ν(x)` and `ν_K(x)`.
pub fn nu(p: &ProblemInstance, x: &Point, cfg: &Config) -> Result<MeritReport> {
    check_dim(p.dim_x, x.dim())?;
    let oracle = MeritOracle::new(p, cfg)?;
    report_with(&oracle, x, cfg)
}

/// Same report; provided under the name of the function it is read for.
pub fn nu_ka(p: &ProblemInstance, x: &Point, cfg: &Config) -> Result<MeritReport> {
    nu(p, x, cfg)
}

pub(crate) fn report_with(oracle: &MeritOracle<'_>, x: &Point, cfg: &Config) -> Result<MeritReport> {
    let p = oracle.problem;
    let (best, idx) = oracle.sampled_max(x);
    let (wz, refined) = oracle.refine(x, &oracle.zs[idx], cfg.merit.refine_iters);
    let (witness, sampled) = if refined > best { (wz, refined) } else { (oracle.zs[idx].clone(), best) };
    let sampled = if sampled > cfg.merit.value_cap { f64::INFINITY } else { sampled };
    let closed = if cfg.merit.use_closed_form { p.closed_form_merit(x) } else { None };
    let value = closed.unwrap_or(sampled);
    let d = p.constraints.distance(x)?;
    let (truncation_note, truncation_gap) = truncation_note(p);
    Ok(MeritReport {
        x: x.clone(),
        nu: value,
        dist_x_k: d,
        nu_ka: value + d,
        witness_z: Point::from(witness.as_slice()),
        samples_used: oracle.zs.len(),
        truncation_note,
        truncation_gap,
        used_closed_form: closed.is_some(),
        nu_sampled: sampled,
    })
}

/// The ε-active set `{z : dist(f(x,z), C) ≥ ν(x) − ε}` among evaluated
/// samples; `epsilon` defaults to `active_epsilon_rel · max(1, ν)`.
pub fn active_set(p: &ProblemInstance, x: &Point, epsilon: Option<f64>, cfg: &Config) -> Result<ActiveSet> {
    check_dim(p.dim_x, x.dim())?;
    let oracle = MeritOracle::new(p, cfg)?;
    active_set_with(&oracle, x, epsilon, cfg)
}

pub(crate) fn active_set_with(
    oracle: &MeritOracle<'_>,
    x: &Point,
    epsilon: Option<f64>,
    cfg: &Config,
) -> Result<ActiveSet> {
    let (best, idx) = oracle.sampled_max(x);
    if !best.is_finite() || best > cfg.merit.value_cap {
        return Err(Error::Precondition("merit is infinite at this point".into()));
    }
    let (wz, refined) = oracle.refine(x, &oracle.zs[idx], cfg.merit.refine_iters);
    let reference = best.max(refined);
    let eps = epsilon.unwrap_or(cfg.merit.active_epsilon_rel * reference.max(1.0));
    if !(eps > 0.0) {
        return Err(Error::Precondition("epsilon must be positive".into()));
    }
    let mut members: Vec<Vec<f64>> = oracle
        .zs
        .iter()
        .filter(|z| oracle.residual(x, z) >= reference - eps)
        .cloned()
        .collect();
    if refined >= reference - eps && !members.iter().any(|m| dist(m, &wz) < 1e-12) {
        members.push(wz);
    }
    let not_attained = match oracle.truncation_radius {
        Some(r) if reference > 0.0 => members
            .iter()
            .any(|z| dist(z, &oracle.center) >= r * (1.0 - 1e-9)),
        _ => false,
    };
    Ok(ActiveSet {
        x: x.clone(),
        epsilon: eps,
        nu: reference,
        members: members.into_iter().map(|m| Point::from(m.as_slice())).collect(),
        supremum_possibly_not_attained: not_attained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::norm;
    use std::f64::consts::PI;

    fn sampled() -> Config {
        let mut c = Config::default();
        c.merit.use_closed_form = false;
        c
    }

    #[test]
    fn example1_at_minus_one() {
        let p = ProblemInstance::example1(1e3).unwrap();
        let x = Point::new(vec![-1.0, -1.0]).unwrap();
        let r = nu(&p, &x, &sampled()).unwrap();
        assert!((r.nu - 2f64.sqrt()).abs() <= 2e-3, "{}", r.nu);
        assert!(!r.used_closed_form);
        assert!(r.truncation_note.is_some());
        let r = nu(&p, &x, &Config::default()).unwrap();
        assert!(r.used_closed_form);
        assert!((r.nu - r.nu_sampled).abs() <= r.truncation_gap.unwrap());
    }

    #[test]
    fn example1_origin_is_a_solution() {
        let p = ProblemInstance::example1(1e3).unwrap();
        let r = nu(&p, &Point::zeros(2), &sampled()).unwrap();
        assert_eq!(r.nu, 0.0);
        assert_eq!(r.nu_ka, 0.0);
    }

    #[test]
    fn example2_merit_is_the_norm_on_k() {
        let p = ProblemInstance::example2(PI / 6.0).unwrap();
        let r = nu(&p, &Point::new(vec![3f64.sqrt(), 1.0]).unwrap(), &sampled()).unwrap();
        assert!((r.nu - 2.0).abs() <= 2e-2);
        assert_eq!(r.dist_x_k, 0.0);
        assert_eq!(r.nu_ka, r.nu);
    }

    #[test]
    fn example2_outside_k() {
        let p = ProblemInstance::example2(PI / 6.0).unwrap();
        let r = nu(&p, &Point::new(vec![-1.0, -1.0]).unwrap(), &sampled()).unwrap();
        assert_eq!(r.nu, 0.0);
        assert!((r.dist_x_k - 2f64.sqrt()).abs() < 1e-12);
        assert!((r.nu_ka - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn witness_respects_report_invariants() {
        let p = ProblemInstance::example1(1e3).unwrap();
        let x = Point::new(vec![-0.5, -1.5]).unwrap();
        let r = nu(&p, &x, &sampled()).unwrap();
        assert!(p.constraints.contains(&r.witness_z, 1e-9));
        let d = p.cone.distance(&p.evaluate(&x, &r.witness_z).unwrap()).unwrap();
        assert!(d <= r.nu + 1e-12);
    }

    #[test]
    fn active_set_clusters_at_origin_for_example2() {
        let p = ProblemInstance::example2(PI / 6.0).unwrap();
        let a = active_set(&p, &Point::new(vec![1.0, 1.0]).unwrap(), None, &sampled()).unwrap();
        assert!(!a.members.is_empty());
        assert!(a.members.iter().all(|z| z.norm() < 2e-3), "{:?}", a.members);
        assert!(!a.supremum_possibly_not_attained);
    }

    #[test]
    fn active_set_example1_is_far_out() {
        let p = ProblemInstance::example1(1e3).unwrap();
        let a = active_set(&p, &Point::new(vec![-1.0, -1.0]).unwrap(), Some(1e-3), &sampled()).unwrap();
        assert!(a.supremum_possibly_not_attained);
        assert!(a.members.iter().all(|z| z.norm() > 100.0));
    }

    #[test]
    fn solutions_make_everything_active() {
        let p = ProblemInstance::example2(PI / 6.0).unwrap();
        let cfg = sampled();
        let a = active_set(&p, &Point::zeros(2), None, &cfg).unwrap();
        assert!(a.members.len() >= cfg.merit.z_budget);
    }

    #[test]
    fn infinite_merit_is_reported() {
        use crate::cones::ConeSpec;
        use crate::model::{BifunctionSpec, ConstraintSet};
        // f(x,z) = -z on K = R_+ : dist grows without bound
        let p = ProblemInstance::new(
            BifunctionSpec::Affine { a: vec![vec![0.0]], b: vec![vec![-1.0]], c: vec![0.0] },
            ConeSpec::orthant(1).unwrap(),
            ConstraintSet::new(
                crate::model::ConstraintKind::Box { lower: vec![Some(0.0)], upper: vec![None] },
                1e13,
            )
            .unwrap(),
            None,
        )
        .unwrap();
        let r = nu(&p, &Point::zeros(1), &sampled()).unwrap();
        assert_eq!(r.nu, f64::INFINITY);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"+infinity\""));
        assert!(norm(&r.witness_z) > 1e12);
    }
}
