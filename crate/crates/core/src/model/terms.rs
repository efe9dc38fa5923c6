//! Analytic building blocks for separable and factorable bifunctions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{add, dot, mat_vec, norm, scale};

/// A map `R^n → R^m` drawn from a small analytic catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Term {
    /// `x ↦ value`
    Constant { value: Vec<f64> },
    /// `x ↦ M x`, `matrix` row-major with `m` rows.
    Linear { matrix: Vec<Vec<f64>> },
    /// Componentwise polynomial, `out_i = Σ_k coeffs[i][k] · x_i^k`; needs `m = n`.
    Polynomial { coeffs: Vec<Vec<f64>> },
    /// `out_i = weights_i · exp(−‖x‖)`
    ExpNorm { weights: Vec<f64> },
    /// `out_i = weights_i / (‖x‖ + 1)`
    RecipNorm { weights: Vec<f64> },
    Sum { terms: Vec<Term> },
}

impl Term {
    /// Checks that the term maps `R^in_dim` into `R^out_dim`.
    pub fn validate(&self, in_dim: usize, out_dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProblem(msg));
        match self {
            Term::Constant { value } => {
                if value.len() != out_dim {
                    return bad(format!("constant term has length {}, expected {out_dim}", value.len()));
                }
            }
            Term::Linear { matrix } => {
                if matrix.len() != out_dim || matrix.iter().any(|r| r.len() != in_dim) {
                    return bad(format!("linear term must be {out_dim}x{in_dim}"));
                }
            }
            Term::Polynomial { coeffs } => {
                if in_dim != out_dim || coeffs.len() != out_dim {
                    return bad(format!(
                        "componentwise polynomial needs {out_dim} coefficient rows and equal input/output dimension"
                    ));
                }
            }
            Term::ExpNorm { weights } | Term::RecipNorm { weights } => {
                if weights.len() != out_dim {
                    return bad(format!("norm term has {} weights, expected {out_dim}", weights.len()));
                }
            }
            Term::Sum { terms } => {
                if terms.is_empty() {
                    return bad("empty sum term".into());
                }
                for t in terms {
                    t.validate(in_dim, out_dim)?;
                }
            }
        }
        let finite = match self {
            Term::Constant { value } => value.iter().all(|v| v.is_finite()),
            Term::Linear { matrix } => matrix.iter().flatten().all(|v| v.is_finite()),
            Term::Polynomial { coeffs } => coeffs.iter().flatten().all(|v| v.is_finite()),
            Term::ExpNorm { weights } | Term::RecipNorm { weights } => weights.iter().all(|v| v.is_finite()),
            Term::Sum { .. } => true,
        };
        if !finite {
            return bad("term coefficients must be finite".into());
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Term::Constant { value } => value.clone(),
            Term::Linear { matrix } => mat_vec(matrix, x),
            Term::Polynomial { coeffs } => coeffs
                .iter()
                .zip(x)
                .map(|(c, &xi)| c.iter().rev().fold(0.0, |acc, ck| acc * xi + ck))
                .collect(),
            Term::ExpNorm { weights } => scale(weights, (-norm(x)).exp()),
            Term::RecipNorm { weights } => scale(weights, 1.0 / (norm(x) + 1.0)),
            Term::Sum { terms } => terms
                .iter()
                .map(|t| t.eval(x))
                .reduce(|a, b| add(&a, &b))
                .unwrap_or_default(),
        }
    }

    /// One-sided directional derivative at `x` along `u`. Positively
    /// homogeneous in `u`; at the kink of the norm terms (`x = 0`) it is the
    /// B-derivative `−‖u‖ · weights`.
    pub fn directional(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        match self {
            Term::Constant { value } => vec![0.0; value.len()],
            Term::Linear { matrix } => mat_vec(matrix, u),
            Term::Polynomial { coeffs } => coeffs
                .iter()
                .zip(x.iter().zip(u))
                .map(|(c, (&xi, &ui))| {
                    let d: f64 = c
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(|(k, ck)| k as f64 * ck * xi.powi(k as i32 - 1))
                        .sum();
                    d * ui
                })
                .collect(),
            Term::ExpNorm { weights } => {
                let n = norm(x);
                let rate = if n > 0.0 { -(-n).exp() * dot(x, u) / n } else { -norm(u) };
                scale(weights, rate)
            }
            Term::RecipNorm { weights } => {
                let n = norm(x);
                let rate = if n > 0.0 {
                    -dot(x, u) / (n * (n + 1.0) * (n + 1.0))
                } else {
                    -norm(u)
                };
                scale(weights, rate)
            }
            Term::Sum { terms } => terms
                .iter()
                .map(|t| t.directional(x, u))
                .reduce(|a, b| add(&a, &b))
                .unwrap_or_default(),
        }
    }
}
