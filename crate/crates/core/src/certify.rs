//! Error-bound certificates along the σ and γ routes, sampled hypothesis
//! audits, and validation of a bound against known solutions.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::increase::{default_region, sigma_search};
use crate::merit::MeritOracle;
use crate::model::ProblemInstance;
use crate::point::{axpy, dist, norm, scale, sub, Point};
use crate::probes::{ambient_points, probe_points};
use crate::sampling::{random_direction, rng};
use crate::subdiff::gamma_audit;

const AUDIT_SEED_SALT: u64 = 0xa0d1_7c0f_fee5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    PassedSampled,
    Refuted,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCheck {
    pub name: String,
    pub status: CheckStatus,
    pub evidence: String,
    /// Points refuting the hypothesis, when one was found.
    pub witness: Option<Vec<Point>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn refuted(&self) -> bool {
        self.checks.iter().any(|c| c.status == CheckStatus::Refuted)
    }

    pub fn check(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Sigma,
    Gamma,
    SsinfUpperOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundForm {
    #[serde(rename = "nu/const on K")]
    NuOnK,
    #[serde(rename = "nu_ka/const on X")]
    NuKaOnX,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Soundness {
    #[serde(rename = "paper-theorem (sampled hypotheses)")]
    SampledHypotheses,
    #[serde(rename = "refutable-only")]
    RefutableOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub route: Route,
    pub constant: f64,
    pub bound_form: BoundForm,
    pub audit: Vec<AuditCheck>,
    pub soundness: Soundness,
}

impl BoundCertificate {
    /// A bound with a caller-chosen constant and no supporting argument.
    pub fn forced(constant: f64) -> Result<Self> {
        if !(constant > 0.0 && constant.is_finite()) {
            return Err(Error::Precondition("certificate constant must be positive".into()));
        }
        Ok(Self {
            route: Route::SsinfUpperOnly,
            constant,
            bound_form: BoundForm::NuOnK,
            audit: Vec::new(),
            soundness: Soundness::RefutableOnly,
        })
    }
}

/// Result of a certification attempt: the certificate, or the stage that
/// stopped it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyOutcome {
    pub certificate: Option<BoundCertificate>,
    pub audit: AuditReport,
    pub failed_stage: Option<String>,
    pub detail: Option<String>,
}

impl CertifyOutcome {
    fn none(audit: AuditReport, stage: &str, detail: String) -> Self {
        Self {
            certificate: None,
            audit,
            failed_stage: Some(stage.into()),
            detail: Some(detail),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub x: Point,
    pub merit: f64,
    pub bound: f64,
    pub true_dist: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationTable {
    pub constant: f64,
    pub bound_form: BoundForm,
    pub rows: Vec<ValidationRow>,
    pub pass: bool,
}

fn z_sample(p: &ProblemInstance, cfg: &Config) -> Result<Vec<Vec<f64>>> {
    Ok(p.sample_constraint(cfg.merit.z_budget, cfg.seed ^ AUDIT_SEED_SALT)?
        .points
        .into_iter()
        .map(Point::into_vec)
        .collect())
}

/// Midpoint C-concavity of `f(·,z)` over `pairs` ambient pairs, each with
/// one sampled `z`: `f(m,z) − (f(a,z) + f(b,z))/2 ∈ C`.
pub fn concavity_check(p: &ProblemInstance, pairs: usize, cfg: &Config) -> Result<AuditCheck> {
    let zs = z_sample(p, cfg)?;
    let xs = ambient_points(p, cfg, 2 * pairs.max(1))?;
    let tol = cfg.certify.concavity_tol;
    let mut worst = 0.0f64;
    for (k, pair) in xs.chunks_exact(2).enumerate() {
        let z = &zs[k % zs.len()];
        let (a, b) = (&pair[0], &pair[1]);
        let m = scale(&axpy(a, 1.0, b), 0.5);
        let fa = p.eval_unchecked(a, z);
        let fb = p.eval_unchecked(b, z);
        let fm = p.eval_unchecked(&m, z);
        let gap: Vec<f64> = fm.iter().zip(fa.iter().zip(&fb)).map(|(m, (a, b))| m - 0.5 * (a + b)).collect();
        let size = norm(&fa).max(norm(&fb)).max(norm(&fm)).max(1.0);
        let violation = p.cone.distance(&gap)? / size;
        worst = worst.max(violation);
        if violation > tol || !violation.is_finite() {
            return Ok(AuditCheck {
                name: "c-concavity".into(),
                status: CheckStatus::Refuted,
                evidence: format!("midpoint gap leaves C by {violation:.3e} (relative) at pair {k}"),
                witness: Some(vec![Point::from(a.as_slice()), Point::from(b.as_slice()), Point::from(z.as_slice())]),
            });
        }
    }
    Ok(AuditCheck {
        name: "c-concavity".into(),
        status: CheckStatus::PassedSampled,
        evidence: format!("{pairs} midpoint pairs, worst relative violation {worst:.3e}"),
        witness: None,
    })
}

fn bounded_check(p: &ProblemInstance, cfg: &Config) -> Result<AuditCheck> {
    let x0 = match &cfg.certify.bounded_x0 {
        Some(x) => {
            crate::point::check_dim(p.dim_x, x.len())?;
            x.clone()
        }
        None => p.constraints.project(&vec![0.0; p.dim_x])?,
    };
    let sample = p.sample_constraint(cfg.merit.z_budget, cfg.seed ^ AUDIT_SEED_SALT)?;
    let center = p.constraints.project(&vec![0.0; p.dim_x])?;
    let radius = sample.truncation_radius.unwrap_or(p.constraints.truncation_radius);
    let images: Vec<Point> = sample
        .points
        .iter()
        .map(|z| Point::from(p.eval_unchecked(&x0, z).as_slice()))
        .collect();
    let tol = crate::cones::ConeTolerances::default().membership;
    let mut m_inner = 0.0f64;
    for (z, y) in sample.points.iter().zip(&images) {
        if dist(z, &center) <= radius / 4.0 && !p.cone.contains(y, tol)? {
            m_inner = m_inner.max(y.norm());
        }
    }
    let m = 2.0 * m_inner + 1e-6;
    if crate::cones::c_bounded_probe(&images, &p.cone, m) {
        return Ok(AuditCheck {
            name: "c-bounded".into(),
            status: CheckStatus::PassedSampled,
            evidence: format!("f(x0,K) outside C stays within norm {m:.3e} over {} samples", images.len()),
            witness: None,
        });
    }
    let far = sample
        .points
        .iter()
        .zip(&images)
        .find(|(_, y)| !p.cone.contains(y, tol).unwrap_or(false) && y.norm() > m)
        .map(|(z, _)| z.clone());
    Ok(AuditCheck {
        name: "c-bounded".into(),
        status: CheckStatus::Refuted,
        evidence: format!("image points outside C grow beyond twice the near-field bound {m_inner:.3e}"),
        witness: far.map(|z| vec![Point::from(x0.as_slice()), z]),
    })
}

fn continuity_check(p: &ProblemInstance, cfg: &Config) -> Result<AuditCheck> {
    let zs = z_sample(p, cfg)?;
    let n = cfg.certify.continuity_samples.max(1);
    let xs = ambient_points(p, cfg, n)?;
    let mut r = rng(cfg.seed ^ AUDIT_SEED_SALT ^ 2);
    let h = 1e-7;
    let mut worst = 0.0f64;
    for (k, x) in xs.iter().enumerate() {
        let z = &zs[k % zs.len()];
        let u = random_direction(&mut r, p.dim_x);
        let q = dist(&p.eval_unchecked(&axpy(x, h, &u), z), &p.eval_unchecked(x, z)) / h;
        if !(q <= cfg.certify.continuity_cap) {
            return Ok(AuditCheck {
                name: "continuity".into(),
                status: CheckStatus::Refuted,
                evidence: format!("difference quotient {q:.3e} at step {h:e}"),
                witness: Some(vec![Point::from(x.as_slice()), Point::from(z.as_slice())]),
            });
        }
        worst = worst.max(q);
    }
    Ok(AuditCheck {
        name: "continuity".into(),
        status: CheckStatus::PassedSampled,
        evidence: format!("largest difference quotient {worst:.3e} over {n} samples"),
        witness: None,
    })
}

fn k_convex_check() -> AuditCheck {
    AuditCheck {
        name: "k-convex".into(),
        status: CheckStatus::PassedSampled,
        evidence: "every supported constraint kind is a closed convex polyhedron".into(),
        witness: None,
    }
}

/// Sampled audits of C-boundedness, C-concavity, continuity and convexity
/// of `K`. Each can refute its hypothesis, none can prove it.
pub fn hypothesis_audit(p: &ProblemInstance, cfg: &Config) -> Result<AuditReport> {
    Ok(AuditReport {
        checks: vec![
            bounded_check(p, cfg)?,
            concavity_check(p, cfg.certify.concavity_pairs, cfg)?,
            continuity_check(p, cfg)?,
            k_convex_check(),
        ],
    })
}

/// The σ route: `dist(x, Solv) ≤ ν(x)/σ` on `K`.
pub fn certify_via_sigma(p: &ProblemInstance, cfg: &Config) -> Result<CertifyOutcome> {
    let full = hypothesis_audit(p, cfg)?;
    let audit = AuditReport {
        checks: full
            .checks
            .into_iter()
            .filter(|c| c.name != "c-concavity")
            .collect(),
    };
    if audit.refuted() {
        return Ok(CertifyOutcome::none(audit, "audit", "a hypothesis check was refuted".into()));
    }
    let region = default_region(p, cfg)?;
    if region.is_empty() {
        return Ok(CertifyOutcome::none(audit, "region", "no probe point with positive merit".into()));
    }
    let search = sigma_search(p, &region, cfg)?;
    match search.certificate {
        Some(c) => Ok(CertifyOutcome {
            certificate: Some(BoundCertificate {
                route: Route::Sigma,
                constant: c.sigma,
                bound_form: BoundForm::NuOnK,
                audit: audit.checks.clone(),
                soundness: Soundness::SampledHypotheses,
            }),
            audit,
            failed_stage: None,
            detail: Some(format!("sigma over {} region points, z budget {}", c.region.len(), c.z_budget)),
        }),
        None => Ok(CertifyOutcome::none(
            audit,
            "sigma-search",
            search.failure.unwrap_or_else(|| "no positive sigma".into()),
        )),
    }
}

/// Probes of the γ route: probes of `K` and ambient points, minus solutions.
pub fn gamma_probes(p: &ProblemInstance, cfg: &Config) -> Result<Vec<Point>> {
    let oracle = MeritOracle::new(p, cfg)?;
    let mut pts = probe_points(p, cfg)?;
    pts.extend(ambient_points(p, cfg, cfg.probes.count)?);
    Ok(pts
        .into_iter()
        .filter(|x| oracle.nu_ka(x) > cfg.probes.nu_tol)
        .map(|x| Point::from(x.as_slice()))
        .collect())
}

/// The γ route: `dist(x, Solv) ≤ ν_K(x)/γ` on the whole space.
pub fn certify_via_gamma(p: &ProblemInstance, cfg: &Config) -> Result<CertifyOutcome> {
    let audit = AuditReport {
        checks: vec![concavity_check(p, cfg.certify.concavity_pairs, cfg)?, k_convex_check()],
    };
    if audit.refuted() {
        return Ok(CertifyOutcome::none(audit, "audit", "a hypothesis check was refuted".into()));
    }
    let probes = gamma_probes(p, cfg)?;
    if probes.is_empty() {
        return Ok(CertifyOutcome::none(audit, "probes", "no probe point with positive merit".into()));
    }
    let g = gamma_audit(p, &probes, cfg)?;
    if !(g.value > cfg.certify.gamma_tol) {
        let at = g.argmin.map(|x| x.into_vec()).unwrap_or_default();
        return Ok(CertifyOutcome::none(
            audit,
            "gamma-audit",
            format!("separation drops to {:.3e} at {at:?}", g.value),
        ));
    }
    let constant = (1.0 - cfg.certify.gamma_safety) * g.value;
    Ok(CertifyOutcome {
        certificate: Some(BoundCertificate {
            route: Route::Gamma,
            constant,
            bound_form: BoundForm::NuKaOnX,
            audit: audit.checks.clone(),
            soundness: Soundness::SampledHypotheses,
        }),
        audit,
        failed_stage: None,
        detail: Some(format!("audit value {:.6} over {} probes", g.value, probes.len())),
    })
}

/// σ route first, γ route when it yields nothing.
pub fn certify_auto(p: &ProblemInstance, cfg: &Config) -> Result<CertifyOutcome> {
    let sigma = certify_via_sigma(p, cfg)?;
    if sigma.certificate.is_some() {
        return Ok(sigma);
    }
    let gamma = certify_via_gamma(p, cfg)?;
    if gamma.certificate.is_some() || !sigma.audit.refuted() {
        return Ok(gamma);
    }
    Ok(sigma)
}

/// Compares `merit(x)/constant` with the distance to the known solutions.
/// The merit is `ν_K`, which equals `ν` on `K`.
pub fn validate_bound(
    p: &ProblemInstance,
    cert: &BoundCertificate,
    xs: &[Point],
    cfg: &Config,
) -> Result<ValidationTable> {
    if p.known_solutions.is_none() {
        return Err(Error::Precondition("validation needs known solutions".into()));
    }
    if !(cert.constant > 0.0) {
        return Err(Error::Precondition("certificate constant must be positive".into()));
    }
    let oracle = MeritOracle::new(p, cfg)?;
    let tol = cfg.certify.validation_tol;
    let rows: Vec<ValidationRow> = xs
        .iter()
        .map(|x| {
            crate::point::check_dim(p.dim_x, x.dim())?;
            let merit = oracle.nu_ka(x);
            let bound = merit / cert.constant;
            let true_dist = p.distance_to_known_solutions(x).unwrap_or(f64::INFINITY);
            Ok(ValidationRow {
                x: x.clone(),
                merit,
                bound,
                true_dist,
                pass: bound >= true_dist - tol,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ValidationTable {
        constant: cert.constant,
        bound_form: cert.bound_form,
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}

/// Points of `K` for validation tables, drawn like the probes.
pub fn validation_points(p: &ProblemInstance, count: usize, cfg: &Config) -> Result<Vec<Point>> {
    let center = p.constraints.project(&vec![0.0; p.dim_x])?;
    let s = p.constraints.sample_within(count + 1, cfg.seed ^ AUDIT_SEED_SALT ^ 3, cfg.probes.radius)?;
    Ok(s
        .points
        .into_iter()
        .filter(|x| norm(&sub(x, &center)) > 0.0 || count == 1)
        .take(count)
        .collect())
}
