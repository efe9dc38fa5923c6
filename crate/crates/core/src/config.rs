//! Budgets, tolerances and seeds shared by every numerical routine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeritConfig {
    /// Number of points of `K` over which the supremum is sampled.
    pub z_budget: usize,
    /// Compass-search iterations refining the best sample.
    pub refine_iters: usize,
    pub refine_shrink: f64,
    /// Values above this are reported as `+infinity`.
    pub value_cap: f64,
    /// Use the catalog's exact merit when one is available.
    pub use_closed_form: bool,
    /// Active-set slack relative to `max(1, ν)`.
    pub active_epsilon_rel: f64,
}

impl Default for MeritConfig {
    fn default() -> Self {
        Self {
            z_budget: 200,
            refine_iters: 60,
            refine_shrink: 0.5,
            value_cap: 1e12,
            use_closed_form: true,
            active_epsilon_rel: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlopeConfig {
    pub r0: f64,
    pub shrink: f64,
    pub levels: usize,
    /// Directions per shell are `dirs_per_dim · dim`.
    pub dirs_per_dim: usize,
    /// Quotients at or below this count as non-descent.
    pub zero_tol: f64,
}

impl Default for SlopeConfig {
    fn default() -> Self {
        Self {
            r0: 0.1,
            shrink: 0.5,
            levels: 6,
            dirs_per_dim: 64,
            zero_tol: 1e-12,
        }
    }
}

/// Where the probe points of `ssinf`, `increase`, `certify` come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    /// Base sample size of `K` within `radius` of the projection of the origin.
    pub count: usize,
    pub radius: f64,
    /// Each base point is also shrunk toward the projection of the origin
    /// by these factors.
    pub scales: Vec<f64>,
    /// Points with `ν` at or below this are treated as solutions.
    pub nu_tol: f64,
    /// Caller-supplied probes appended to the generated ones.
    pub extra: Vec<Vec<f64>>,
    /// Upper bound on the number of probes actually used.
    pub max_probes: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            count: 24,
            radius: 10.0,
            scales: vec![1.0, 1e-1, 1e-2, 1e-3, 1e-4],
            nu_tol: 1e-9,
            extra: Vec::new(),
            max_probes: 160,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IncreaseConfig {
    pub z_budget: usize,
    /// Constraint samples used to generate feasible directions.
    pub direction_samples: usize,
    /// Extra sphere directions per dimension.
    pub dirs_per_dim: usize,
    pub refine_iters: usize,
    pub sigma_tol: f64,
    /// Number of region points drawn from the probe set.
    pub region_size: usize,
    pub dedup_resolution: f64,
    /// Largest radius accepted by the definitional check.
    pub delta0: f64,
}

impl Default for IncreaseConfig {
    fn default() -> Self {
        Self {
            z_budget: 200,
            direction_samples: 64,
            dirs_per_dim: 32,
            refine_iters: 40,
            sigma_tol: 1e-3,
            region_size: 50,
            dedup_resolution: 1e-3,
            delta0: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubdiffConfig {
    pub min_norm_tol: f64,
    /// Angular step used to discretize arcs of unit normals.
    pub arc_resolution: f64,
    /// Step of the central differences used for non-affine gradients.
    pub fd_step: f64,
    /// Pairs sampled by the concavity check that guards the max rule.
    pub concavity_pairs: usize,
}

impl Default for SubdiffConfig {
    fn default() -> Self {
        Self {
            min_norm_tol: 1e-9,
            arc_resolution: 1e-2,
            fd_step: 1e-6,
            concavity_pairs: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    pub gamma_safety: f64,
    pub gamma_tol: f64,
    pub concavity_pairs: usize,
    pub concavity_tol: f64,
    /// Base point of the C-boundedness check; defaults to the projection
    /// of the origin onto `K`.
    pub bounded_x0: Option<Vec<f64>>,
    pub continuity_samples: usize,
    /// Difference quotients above this are reported as jumps.
    pub continuity_cap: f64,
    pub validation_tol: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            gamma_safety: 0.1,
            gamma_tol: 1e-2,
            concavity_pairs: 10_000,
            concavity_tol: 1e-9,
            bounded_x0: None,
            continuity_samples: 500,
            continuity_cap: 1e8,
            validation_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub starts: usize,
    pub max_evals: usize,
    pub initial_step: f64,
    pub min_step: f64,
    pub expansion: f64,
    pub shrink: f64,
    pub zero_tol: f64,
    /// Outer iterations between refreshes of the inner z-sample.
    pub refresh_every: usize,
    /// Inner budget multiplier for the final re-evaluation.
    pub final_budget_factor: usize,
    /// Starts are drawn from this box; defaults to the projection of the
    /// origin onto `K` plus `[-2, 2]^n`.
    pub start_lower: Option<Vec<f64>>,
    pub start_upper: Option<Vec<f64>>,
    /// Explicit first start.
    pub start: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            starts: 8,
            max_evals: 5000,
            initial_step: 0.5,
            min_step: 1e-12,
            expansion: 2.0,
            shrink: 0.5,
            zero_tol: 1e-6,
            refresh_every: 50,
            final_budget_factor: 4,
            start_lower: None,
            start_upper: None,
            start: None,
        }
    }
}

/// Full run configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub merit: MeritConfig,
    pub slope: SlopeConfig,
    pub probes: ProbeConfig,
    pub increase: IncreaseConfig,
    pub subdiff: SubdiffConfig,
    pub certify: CertifyConfig,
    pub solver: SolverConfig,
}

impl Config {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive_counts = [
            ("merit.z_budget", self.merit.z_budget),
            ("slope.levels", self.slope.levels),
            ("slope.dirs_per_dim", self.slope.dirs_per_dim),
            ("probes.max_probes", self.probes.max_probes),
            ("increase.z_budget", self.increase.z_budget),
            ("increase.region_size", self.increase.region_size),
            ("solver.starts", self.solver.starts),
            ("solver.max_evals", self.solver.max_evals),
            ("solver.refresh_every", self.solver.refresh_every),
            ("solver.final_budget_factor", self.solver.final_budget_factor),
        ];
        for (name, v) in positive_counts {
            if v == 0 {
                return Err(Error::InvalidProblem(format!("{name} must be positive")));
            }
        }
        let positive_reals = [
            ("merit.value_cap", self.merit.value_cap),
            ("merit.active_epsilon_rel", self.merit.active_epsilon_rel),
            ("slope.r0", self.slope.r0),
            ("probes.radius", self.probes.radius),
            ("probes.nu_tol", self.probes.nu_tol),
            ("increase.sigma_tol", self.increase.sigma_tol),
            ("increase.delta0", self.increase.delta0),
            ("subdiff.min_norm_tol", self.subdiff.min_norm_tol),
            ("subdiff.arc_resolution", self.subdiff.arc_resolution),
            ("subdiff.fd_step", self.subdiff.fd_step),
            ("certify.gamma_tol", self.certify.gamma_tol),
            ("certify.concavity_tol", self.certify.concavity_tol),
            ("certify.validation_tol", self.certify.validation_tol),
            ("solver.initial_step", self.solver.initial_step),
            ("solver.min_step", self.solver.min_step),
            ("solver.zero_tol", self.solver.zero_tol),
        ];
        for (name, v) in positive_reals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidProblem(format!("{name} must be a positive finite number")));
            }
        }
        let fractions = [
            ("merit.refine_shrink", self.merit.refine_shrink),
            ("slope.shrink", self.slope.shrink),
            ("solver.shrink", self.solver.shrink),
        ];
        for (name, v) in fractions {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidProblem(format!("{name} must lie in (0, 1)")));
            }
        }
        if !(self.certify.gamma_safety >= 0.0 && self.certify.gamma_safety < 1.0) {
            return Err(Error::InvalidProblem("certify.gamma_safety must lie in [0, 1)".into()));
        }
        if !(self.solver.expansion >= 1.0) {
            return Err(Error::InvalidProblem("solver.expansion must be at least 1".into()));
        }
        if self.probes.scales.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
            return Err(Error::InvalidProblem("probes.scales must lie in (0, 1]".into()));
        }
        Ok(())
    }
}
