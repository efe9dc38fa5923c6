//! Problem instances: bifunctions, constraint sets, B-derivative oracles and
//! the two built-in examples.

mod constraints;
mod terms;

pub use constraints::{ConstraintKind, ConstraintSample, ConstraintSet, DEFAULT_TRUNCATION_RADIUS};
pub use terms::Term;

use std::f64::consts::FRAC_PI_6;

use serde::{Deserialize, Serialize};

use crate::cones::ConeSpec;
use crate::error::{Error, Result};
use crate::point::{add, axpy, check_dim, mat_vec, norm, scale, sub, Point};

/// Built-in examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NamedExample {
    /// `f(x,z) = (−x₁² + e^{−‖z‖}, −x₂² + 1/(‖z‖+1))`, `C = R²₊`, `K = −R²₊`.
    #[serde(rename = "paper-example-1")]
    Example1,
    /// `f(x,z) = z − x`, `C = R²₊`, `K = K_θ`.
    #[serde(rename = "paper-example-2")]
    Example2,
}

/// The bifunction `f : X × X → Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum BifunctionSpec {
    /// `f(x,z) = A x + B z + c`
    Affine {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        c: Vec<f64>,
    },
    /// `f(x,z) = g(x) + h(z)`
    Separable { g: Term, h: Term },
    /// `f(x,z) = λ(z) · g(x)` with scalar `λ`.
    Factorable { lambda: Term, g: Term },
    Named {
        name: NamedExample,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
    },
}

impl BifunctionSpec {
    pub fn example1() -> Self {
        BifunctionSpec::Named {
            name: NamedExample::Example1,
            theta: None,
        }
    }

    pub fn example2(theta: f64) -> Self {
        BifunctionSpec::Named {
            name: NamedExample::Example2,
            theta: Some(theta),
        }
    }

    pub fn has_closed_form_merit(&self) -> bool {
        matches!(self, BifunctionSpec::Named { .. })
    }

    pub fn has_analytic_b_derivative(&self) -> bool {
        true
    }

    fn dims(&self) -> Option<(usize, usize)> {
        match self {
            BifunctionSpec::Affine { a, c, .. } => Some((a.first().map_or(0, Vec::len), c.len())),
            BifunctionSpec::Named { .. } => Some((2, 2)),
            _ => None,
        }
    }

    fn validate(&self, dim_x: usize, dim_y: usize) -> Result<()> {
        match self {
            BifunctionSpec::Affine { a, b, c } => {
                let ok = |m: &Vec<Vec<f64>>| m.len() == dim_y && m.iter().all(|r| r.len() == dim_x);
                if !ok(a) || !ok(b) || c.len() != dim_y {
                    return Err(Error::InvalidProblem(format!(
                        "affine bifunction needs {dim_y}x{dim_x} matrices a, b and offset c of length {dim_y}"
                    )));
                }
                if a.iter().chain(b).flatten().chain(c).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidProblem("affine data must be finite".into()));
                }
                Ok(())
            }
            BifunctionSpec::Separable { g, h } => {
                g.validate(dim_x, dim_y)?;
                h.validate(dim_x, dim_y)
            }
            BifunctionSpec::Factorable { lambda, g } => {
                lambda.validate(dim_x, 1)?;
                g.validate(dim_x, dim_y)
            }
            BifunctionSpec::Named { name, theta } => {
                if dim_x != 2 || dim_y != 2 {
                    return Err(Error::InvalidProblem("named examples live in dimension 2".into()));
                }
                match (name, theta) {
                    (NamedExample::Example1, Some(_)) => {
                        Err(Error::InvalidProblem("paper-example-1 takes no theta".into()))
                    }
                    (NamedExample::Example2, Some(t)) if !(t.is_finite() && (0.0..FRAC_PI_4_EXCL).contains(t)) => {
                        Err(Error::InvalidProblem(format!("theta {t} outside [0, pi/4)")))
                    }
                    _ => Ok(()),
                }
            }
        }
    }

    fn eval(&self, x: &[f64], z: &[f64]) -> Vec<f64> {
        match self {
            BifunctionSpec::Affine { a, b, c } => add(&add(&mat_vec(a, x), &mat_vec(b, z)), c),
            BifunctionSpec::Separable { g, h } => add(&g.eval(x), &h.eval(z)),
            BifunctionSpec::Factorable { lambda, g } => scale(&g.eval(x), lambda.eval(z)[0]),
            BifunctionSpec::Named { name: NamedExample::Example1, .. } => {
                let n = norm(z);
                vec![-x[0] * x[0] + (-n).exp(), -x[1] * x[1] + 1.0 / (n + 1.0)]
            }
            BifunctionSpec::Named { name: NamedExample::Example2, .. } => sub(z, x),
        }
    }

    fn directional(&self, x: &[f64], z: &[f64], u: &[f64]) -> Vec<f64> {
        match self {
            BifunctionSpec::Affine { a, .. } => mat_vec(a, u),
            BifunctionSpec::Separable { g, .. } => g.directional(x, u),
            BifunctionSpec::Factorable { lambda, g } => scale(&g.directional(x, u), lambda.eval(z)[0]),
            BifunctionSpec::Named { name: NamedExample::Example1, .. } => {
                vec![-2.0 * x[0] * u[0], -2.0 * x[1] * u[1]]
            }
            BifunctionSpec::Named { name: NamedExample::Example2, .. } => scale(u, -1.0),
        }
    }
}

const FRAC_PI_4_EXCL: f64 = std::f64::consts::FRAC_PI_4;

/// On-disk problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub bifunction: BifunctionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone: Option<ConeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<ConstraintKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_x: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_y: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_solutions: Option<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_radius: Option<f64>,
}

/// A strong vector equilibrium problem: find `x ∈ K` with `f(x,z) ∈ C` for
/// all `z ∈ K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub bifunction: BifunctionSpec,
    pub cone: ConeSpec,
    pub constraints: ConstraintSet,
    pub dim_x: usize,
    pub dim_y: usize,
    pub known_solutions: Option<Vec<Point>>,
}

/// Steps of the one-sided difference schedule.
pub const B_DERIVATIVE_STEPS: [f64; 3] = [1e-2, 1e-3, 1e-4];
/// Relative disagreement tolerated between extrapolated quotients.
pub const B_DERIVATIVE_AGREEMENT: f64 = 1e-4;

impl ProblemInstance {
    pub fn new(
        bifunction: BifunctionSpec,
        cone: ConeSpec,
        constraints: ConstraintSet,
        known_solutions: Option<Vec<Point>>,
    ) -> Result<Self> {
        let dim_x = constraints.dim();
        let dim_y = cone.dim();
        bifunction.validate(dim_x, dim_y)?;
        if let Some(sols) = &known_solutions {
            for s in sols {
                check_dim(dim_x, s.dim())?;
            }
        }
        Ok(Self {
            bifunction,
            cone,
            constraints,
            dim_x,
            dim_y,
            known_solutions,
        })
    }

    /// Example 1 with `C = R²₊`, `K = −R²₊` and `Solv = {0}`.
    pub fn example1(truncation_radius: f64) -> Result<Self> {
        Self::new(
            BifunctionSpec::example1(),
            ConeSpec::orthant(2)?,
            ConstraintSet::new(ConstraintKind::NegOrthant { dim: 2 }, truncation_radius)?,
            Some(vec![Point::zeros(2)]),
        )
    }

    /// Example 2 with `C = R²₊`, `K = K_θ` and `Solv = {0}`.
    pub fn example2(theta: f64) -> Result<Self> {
        Self::new(
            BifunctionSpec::example2(theta),
            ConeSpec::orthant(2)?,
            ConstraintSet::new(ConstraintKind::Sector { theta }, DEFAULT_TRUNCATION_RADIUS)?,
            Some(vec![Point::zeros(2)]),
        )
    }

    pub fn from_file(file: ProblemFile) -> Result<Self> {
        let radius = file.truncation_radius.unwrap_or(DEFAULT_TRUNCATION_RADIUS);
        let (default_cone, default_k, default_sols) = match &file.bifunction {
            BifunctionSpec::Named { name: NamedExample::Example1, .. } => (
                Some(ConeSpec::orthant(2)?),
                Some(ConstraintKind::NegOrthant { dim: 2 }),
                Some(vec![Point::zeros(2)]),
            ),
            BifunctionSpec::Named { name: NamedExample::Example2, theta } => (
                Some(ConeSpec::orthant(2)?),
                Some(ConstraintKind::Sector {
                    theta: theta.unwrap_or(FRAC_PI_6),
                }),
                Some(vec![Point::zeros(2)]),
            ),
            _ => (None, None, None),
        };
        let bifunction = match file.bifunction {
            BifunctionSpec::Named { name: NamedExample::Example2, theta: None } => {
                BifunctionSpec::example2(FRAC_PI_6)
            }
            b => b,
        };
        let cone = file
            .cone
            .or(default_cone)
            .ok_or_else(|| Error::InvalidProblem("missing field `cone`".into()))?;
        let kind = file
            .constraints
            .or(default_k)
            .ok_or_else(|| Error::InvalidProblem("missing field `constraints`".into()))?;
        let constraints = ConstraintSet::new(kind, radius)?;
        let p = Self::new(bifunction, cone, constraints, file.known_solutions.or(default_sols))?;
        if let Some(n) = file.dim_x {
            if n != p.dim_x {
                return Err(Error::InvalidProblem(format!(
                    "dim_x = {n} but the constraint set lives in dimension {}",
                    p.dim_x
                )));
            }
        }
        if let Some(m) = file.dim_y {
            if m != p.dim_y {
                return Err(Error::InvalidProblem(format!(
                    "dim_y = {m} but the cone lives in dimension {}",
                    p.dim_y
                )));
            }
        }
        if let Some((n, m)) = p.bifunction.dims() {
            if n != p.dim_x || m != p.dim_y {
                return Err(Error::InvalidProblem(format!(
                    "bifunction maps R^{n} into R^{m}, problem is R^{} into R^{}",
                    p.dim_x, p.dim_y
                )));
            }
        }
        Ok(p)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text).map_err(|e| {
            Error::InvalidProblem(e.to_string())
        })?;
        Self::from_file(file)
    }

    pub fn to_file(&self) -> ProblemFile {
        ProblemFile {
            bifunction: self.bifunction.clone(),
            cone: Some(self.cone.clone()),
            constraints: Some(self.constraints.kind.clone()),
            dim_x: Some(self.dim_x),
            dim_y: Some(self.dim_y),
            known_solutions: self.known_solutions.clone(),
            truncation_radius: Some(self.constraints.truncation_radius),
        }
    }

    /// `f(x, z)`.
    pub fn evaluate(&self, x: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim_x, x.len())?;
        check_dim(self.dim_x, z.len())?;
        Ok(self.bifunction.eval(x, z))
    }

    /// `dist(f(x,z), C)` without dimension checks.
    pub(crate) fn residual(&self, x: &[f64], z: &[f64]) -> f64 {
        let y = self.bifunction.eval(x, z);
        self.cone.distance(&y).unwrap_or(f64::INFINITY)
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> Vec<f64> {
        self.bifunction.eval(x, z)
    }

    /// B-derivative `D_x f(·,z)(x0)(u)`: analytic for every catalog
    /// variant.
    pub fn b_derivative(&self, x0: &[f64], z: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim_x, x0.len())?;
        check_dim(self.dim_x, z.len())?;
        check_dim(self.dim_x, u.len())?;
        if norm(u) == 0.0 {
            return Err(Error::Precondition("direction u must be nonzero".into()));
        }
        if self.bifunction.has_analytic_b_derivative() {
            Ok(self.bifunction.directional(x0, z, u))
        } else {
            self.b_derivative_numeric(x0, z, u)
        }
    }

    /// One-sided difference quotients over [`B_DERIVATIVE_STEPS`] with
    /// Richardson extrapolation of consecutive pairs; the two extrapolants
    /// must agree.
    pub fn b_derivative_numeric(&self, x0: &[f64], z: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim_x, x0.len())?;
        check_dim(self.dim_x, z.len())?;
        check_dim(self.dim_x, u.len())?;
        let len = norm(u);
        if len == 0.0 {
            return Err(Error::Precondition("direction u must be nonzero".into()));
        }
        // positive homogeneity: differentiate along the unit direction
        let u = &scale(u, 1.0 / len);
        let f0 = self.bifunction.eval(x0, z);
        let q: Vec<Vec<f64>> = B_DERIVATIVE_STEPS
            .iter()
            .map(|&t| scale(&sub(&self.bifunction.eval(&axpy(x0, t, u), z), &f0), 1.0 / t))
            .collect();
        let rich = |coarse: &[f64], fine: &[f64], ratio: f64| -> Vec<f64> {
            coarse.iter().zip(fine).map(|(c, f)| (ratio * f - c) / (ratio - 1.0)).collect()
        };
        let r1 = rich(&q[0], &q[1], B_DERIVATIVE_STEPS[0] / B_DERIVATIVE_STEPS[1]);
        let r2 = rich(&q[1], &q[2], B_DERIVATIVE_STEPS[1] / B_DERIVATIVE_STEPS[2]);
        let disagreement = r1.iter().zip(&r2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale_ref = r2.iter().map(|v| v.abs()).fold(1.0, f64::max);
        if disagreement > B_DERIVATIVE_AGREEMENT * scale_ref {
            return Err(Error::NotBDifferentiable { disagreement: disagreement * len });
        }
        Ok(scale(&r2, len))
    }

    /// Deterministic sample of `K`.
    pub fn sample_constraint(&self, budget: usize, seed: u64) -> Result<ConstraintSample> {
        self.constraints.sample(budget, seed)
    }

    fn is_catalog_default(&self) -> Option<NamedExample> {
        let orthant = ConeSpec::Orthant { dim: 2 };
        match (&self.bifunction, &self.constraints.kind) {
            (BifunctionSpec::Named { name: NamedExample::Example1, .. }, ConstraintKind::NegOrthant { dim: 2 })
                if self.cone == orthant =>
            {
                Some(NamedExample::Example1)
            }
            (BifunctionSpec::Named { name: NamedExample::Example2, .. }, ConstraintKind::Sector { .. })
                if self.cone == orthant =>
            {
                Some(NamedExample::Example2)
            }
            _ => None,
        }
    }

    /// Exact `ν(x)` for catalog entries in their default configuration.
    pub fn closed_form_merit(&self, x: &[f64]) -> Option<f64> {
        if x.len() != self.dim_x {
            return None;
        }
        match self.is_catalog_default()? {
            NamedExample::Example1 => Some((x[0].powi(4) + x[1].powi(4)).sqrt()),
            NamedExample::Example2 => Some(norm(&[x[0].max(0.0), x[1].max(0.0)])),
        }
    }

    /// Bound on `ν − ν_R`, the loss from truncating `K` at radius `R`, when
    /// known analytically.
    pub fn truncation_gap(&self) -> Option<f64> {
        let r = self.constraints.truncation_radius;
        match self.is_catalog_default()? {
            NamedExample::Example1 => Some((-r).exp() + 1.0 / (r + 1.0)),
            NamedExample::Example2 => Some(0.0),
        }
    }

    /// Euclidean distance from `x` to the nearest known solution.
    pub fn distance_to_known_solutions(&self, x: &[f64]) -> Option<f64> {
        self.known_solutions
            .as_ref()
            .map(|s| s.iter().map(|p| crate::point::dist(p, x)).fold(f64::INFINITY, f64::min))
    }
}

impl Serialize for ProblemInstance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProblemInstance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = ProblemFile::deserialize(d)?;
        Self::from_file(file).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn example1_evaluations() {
        let p = ProblemInstance::example1(1e3).unwrap();
        assert_eq!(p.evaluate(&[-1.0, -1.0], &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let v = p.evaluate(&[-1.0, -1.0], &[-3.0, -4.0]).unwrap();
        // independent arithmetic: e^{-5} and 1/6
        assert!(close(&v, &[-0.993_262_053, -0.833_333_333], 1e-8));
    }

    #[test]
    fn example2_evaluation_and_derivative() {
        let p = ProblemInstance::example2(PI / 6.0).unwrap();
        assert_eq!(p.evaluate(&[1.0, 2.0], &[3.0, 3.0]).unwrap(), vec![2.0, 1.0]);
        assert_eq!(p.b_derivative(&[0.3, 0.9], &[1.0, 2.0], &[1.0, 0.0]).unwrap(), vec![-1.0, 0.0]);
    }

    #[test]
    fn example1_derivative_analytic_and_numeric() {
        let p = ProblemInstance::example1(1e3).unwrap();
        assert_eq!(p.b_derivative(&[-1.0, -1.0], &[0.0, 0.0], &[1.0, 0.0]).unwrap(), vec![2.0, 0.0]);
        let n = p.b_derivative_numeric(&[-1.0, -1.0], &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(close(&n, &[2.0, 0.0], 1e-9));
    }

    #[test]
    fn derivative_is_positively_homogeneous() {
        let p = ProblemInstance::example1(1e3).unwrap();
        let u = [0.3, -0.7];
        let a = p.b_derivative_numeric(&[-0.4, 0.2], &[1.0, 1.0], &u).unwrap();
        let b = p.b_derivative_numeric(&[-0.4, 0.2], &[1.0, 1.0], &scale(&u, 2.0)).unwrap();
        assert!(close(&b, &scale(&a, 2.0), 1e-8));
        assert!(p.b_derivative(&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn kink_in_x_is_detected() {
        // f(x,z) = |x| via a norm term in x: one-sided quotients are fine,
        // but a term with curvature blow-up is not; use sqrt-like behaviour
        // through exp(−‖x‖) at x = 0, which is B-differentiable.
        let p = ProblemInstance::new(
            BifunctionSpec::Separable {
                g: Term::ExpNorm { weights: vec![1.0] },
                h: Term::Constant { value: vec![0.0] },
            },
            ConeSpec::orthant(1).unwrap(),
            ConstraintSet::new(
                ConstraintKind::Box { lower: vec![Some(-1.0)], upper: vec![Some(1.0)] },
                10.0,
            )
            .unwrap(),
            None,
        )
        .unwrap();
        let n = p.b_derivative_numeric(&[0.0], &[0.0], &[1.0]).unwrap();
        assert!((n[0] + 1.0).abs() < 1e-6);
        let n = p.b_derivative_numeric(&[0.0], &[0.0], &[-1.0]).unwrap();
        assert!((n[0] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn affine_derivative_is_the_matrix() {
        let p = ProblemInstance::new(
            BifunctionSpec::Affine {
                a: vec![vec![1.0, 2.0], vec![-3.0, 0.5]],
                b: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
                c: vec![1.0, -1.0],
            },
            ConeSpec::orthant(2).unwrap(),
            ConstraintSet::neg_orthant(2).unwrap(),
            None,
        )
        .unwrap();
        let d = p.b_derivative(&[4.0, 1.0], &[0.0, -2.0], &[1.0, 1.0]).unwrap();
        assert_eq!(d, vec![3.0, -2.5]);
    }

    #[test]
    fn json_round_trip_and_named_defaults() {
        let p = ProblemInstance::from_json(
            r#"{"bifunction":{"variant":"named","name":"paper-example-2","theta":0.5235987755982988}}"#,
        )
        .unwrap();
        assert_eq!(p, ProblemInstance::example2(0.5235987755982988).unwrap());
        let text = serde_json::to_string(&p).unwrap();
        let back: ProblemInstance = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        let e1 = ProblemInstance::from_json(r#"{"bifunction":{"variant":"named","name":"paper-example-1"}}"#).unwrap();
        assert_eq!(e1, ProblemInstance::example1(1e3).unwrap());
    }

    #[test]
    fn json_errors_are_located() {
        let err = ProblemInstance::from_json("{\n\"bifunction\": {\"variant\":\"nope\"}}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = ProblemInstance::from_json(
            r#"{"bifunction":{"variant":"affine","a":[[1]],"b":[[1]],"c":[0]},"cone":{"variant":"orthant","dim":2},"constraints":{"variant":"neg_orthant","dim":1}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidProblem(_)));
    }

    #[test]
    fn closed_forms_only_for_defaults() {
        let p = ProblemInstance::example1(1e3).unwrap();
        assert_eq!(p.closed_form_merit(&[-1.0, -1.0]), Some(2f64.sqrt()));
        assert!((p.truncation_gap().unwrap() - 1.0 / 1001.0).abs() < 1e-15);
        let mut q = p.clone();
        q.constraints = ConstraintSet::sector(0.1).unwrap();
        assert_eq!(q.closed_form_merit(&[-1.0, -1.0]), None);
        let p2 = ProblemInstance::example2(PI / 6.0).unwrap();
        assert!((p2.closed_form_merit(&[3f64.sqrt(), 1.0]).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(p2.closed_form_merit(&[-1.0, -1.0]), Some(0.0));
    }

    #[test]
    fn separable_identity() {
        let p = ProblemInstance::new(
            BifunctionSpec::Separable {
                g: Term::Polynomial { coeffs: vec![vec![0.0, 1.0, -1.0], vec![1.0, 0.0, -0.5]] },
                h: Term::Sum {
                    terms: vec![Term::ExpNorm { weights: vec![1.0, 0.0] }, Term::RecipNorm { weights: vec![0.0, 1.0] }],
                },
            },
            ConeSpec::orthant(2).unwrap(),
            ConstraintSet::neg_orthant(2).unwrap(),
            None,
        )
        .unwrap();
        let (x, x2, z, z2) = ([0.2, -1.0], [1.5, 0.3], [-1.0, -2.0], [0.0, -0.5]);
        let lhs = sub(&p.evaluate(&x, &z).unwrap(), &p.evaluate(&x, &z2).unwrap());
        let rhs = sub(&p.evaluate(&x2, &z).unwrap(), &p.evaluate(&x2, &z2).unwrap());
        assert!(close(&lhs, &rhs, 1e-14));
    }
}
