//! Multistart compass search on `ν_K`, whose zeros are the solutions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::BoundCertificate;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::merit::MeritOracle;
use crate::model::ProblemInstance;
use crate::point::{check_dim, Point};
use crate::sampling::{rng, uniform_in_box};
use crate::search::Compass;

const START_SEED_SALT: u64 = 0x57a7_75ee_d5;
const SAMPLE_SEED_SALT: u64 = 0x5a3b_1e5e_ed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Solved,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iter: usize,
    pub best_nu_ka: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub x_star: Point,
    pub nu_ka_final: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub start_index: usize,
    pub trace: Vec<TracePoint>,
    pub certified_distance: Option<f64>,
    pub status: SolveStatus,
}

struct Run {
    x: Vec<f64>,
    value: f64,
    iterations: usize,
    evaluations: usize,
    trace: Vec<TracePoint>,
}

/// Starting points: the explicit start or the projection of the origin,
/// then seeded uniform draws from the start box.
pub fn start_points(p: &ProblemInstance, cfg: &Config) -> Result<Vec<Vec<f64>>> {
    let sc = &cfg.solver;
    let center = p.constraints.project(&vec![0.0; p.dim_x])?;
    let lower = sc.start_lower.clone().unwrap_or_else(|| center.iter().map(|c| c - 2.0).collect());
    let upper = sc.start_upper.clone().unwrap_or_else(|| center.iter().map(|c| c + 2.0).collect());
    check_dim(p.dim_x, lower.len())?;
    check_dim(p.dim_x, upper.len())?;
    if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
        return Err(Error::Precondition("start box has lower > upper".into()));
    }
    let first = match &sc.start {
        Some(s) => {
            check_dim(p.dim_x, s.len())?;
            s.clone()
        }
        None => center,
    };
    let mut r = rng(cfg.seed ^ START_SEED_SALT);
    let mut out = vec![first];
    while out.len() < sc.starts.max(1) {
        out.push(uniform_in_box(&mut r, &lower, &upper));
    }
    Ok(out)
}

fn run_start(p: &ProblemInstance, x0: Vec<f64>, index: usize, cfg: &Config) -> Result<Run> {
    let sc = &cfg.solver;
    let target = 1e-3 * sc.zero_tol;
    let sample_seed = |epoch: usize| cfg.seed ^ SAMPLE_SEED_SALT ^ ((index as u64) << 32) ^ epoch as u64;
    let mut oracle = MeritOracle::with_budget(p, cfg.merit.z_budget, sample_seed(0), cfg)?;
    let f0 = oracle.nu_ka(&x0);
    let mut c = Compass::new(x0, f0, sc.initial_step, sc.expansion, sc.shrink);
    let mut evaluations = 1;
    let mut iterations = 0;
    let mut best = (c.x.clone(), c.fx);
    let mut trace = vec![TracePoint { iter: 0, best_nu_ka: c.fx }];
    let identity = |x: Vec<f64>| x;
    while evaluations < sc.max_evals && c.step >= sc.min_step && best.1 > target {
        if iterations > 0 && sc.refresh_every > 0 && iterations % sc.refresh_every == 0 && !uses_closed_form(p, cfg) {
            oracle = MeritOracle::with_budget(p, cfg.merit.z_budget, sample_seed(iterations / sc.refresh_every), cfg)?;
            c.fx = oracle.nu_ka(&c.x);
            evaluations += 1;
        }
        let mut f = |x: &[f64]| oracle.nu_ka(x);
        let (_, e) = c.poll(&mut f, &identity, sc.max_evals - evaluations);
        evaluations += e;
        iterations += 1;
        if c.fx < best.1 {
            best = (c.x.clone(), c.fx);
        }
        trace.push(TracePoint {
            iter: iterations,
            best_nu_ka: best.1,
        });
    }
    Ok(Run {
        x: best.0,
        value: best.1,
        iterations,
        evaluations,
        trace,
    })
}

fn uses_closed_form(p: &ProblemInstance, cfg: &Config) -> bool {
    cfg.merit.use_closed_form && p.closed_form_merit(&vec![0.0; p.dim_x]).is_some()
}

/// Minimizes `ν_K` from every start and keeps the best (smallest value,
/// then smallest start index). The final value is re-evaluated on a fresh,
/// larger z-sample.
pub fn solve(p: &ProblemInstance, cfg: &Config, cert: Option<&BoundCertificate>) -> Result<SolveResult> {
    cfg.validate()?;
    let starts = start_points(p, cfg)?;
    let runs: Vec<Run> = starts
        .into_par_iter()
        .enumerate()
        .map(|(i, x0)| run_start(p, x0, i, cfg))
        .collect::<Result<_>>()?;
    let (start_index, run) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.value < a.1.value { b } else { a })
        .expect("at least one start");
    let budget = cfg.merit.z_budget * cfg.solver.final_budget_factor.max(1);
    let fresh = MeritOracle::with_budget(p, budget, cfg.seed ^ SAMPLE_SEED_SALT ^ u64::MAX, cfg)?;
    let nu_ka_final = fresh.nu_ka(&run.x);
    let certified_distance = cert.map(|c| nu_ka_final / c.constant);
    let status = if nu_ka_final <= cfg.solver.zero_tol {
        SolveStatus::Solved
    } else {
        SolveStatus::BudgetExhausted
    };
    Ok(SolveResult {
        x_star: Point::from(run.x.as_slice()),
        nu_ka_final,
        iterations: run.iterations,
        evaluations: run.evaluations,
        start_index,
        trace: run.trace,
        certified_distance,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::norm;
    use std::f64::consts::PI;

    #[test]
    fn example2_from_an_explicit_start() {
        let p = ProblemInstance::example2(PI / 6.0).unwrap();
        let mut cfg = Config::default();
        cfg.solver.start = Some(vec![3f64.sqrt() * 1.2, 1.2]);
        let cert = BoundCertificate::forced(0.5).unwrap();
        let r = solve(&p, &cfg, Some(&cert)).unwrap();
        assert_eq!(r.status, SolveStatus::Solved);
        assert!(r.x_star.norm() <= 1e-4);
        assert!(r.certified_distance.unwrap() >= r.x_star.norm());
        assert!(r.trace.windows(2).all(|w| w[1].best_nu_ka <= w[0].best_nu_ka));
    }

    #[test]
    fn example1_sampled_reaches_small_merit() {
        let p = ProblemInstance::example1(1e3).unwrap();
        let mut cfg = Config::default();
        cfg.merit.use_closed_form = false;
        cfg.solver.start_lower = Some(vec![-2.0, -2.0]);
        cfg.solver.start_upper = Some(vec![0.0, 0.0]);
        cfg.solver.start = Some(vec![-1.5, -1.0]);
        let r = solve(&p, &cfg, None).unwrap();
        assert!(r.nu_ka_final <= 1e-4, "{}", r.nu_ka_final);
        assert!(r.certified_distance.is_none());
    }

    #[test]
    fn example1_closed_form_reaches_the_origin() {
        let p = ProblemInstance::example1(1e3).unwrap();
        let mut cfg = Config::default();
        cfg.solver.start = Some(vec![-1.5, -1.0]);
        let r = solve(&p, &cfg, None).unwrap();
        assert!(r.nu_ka_final <= 1e-4);
        assert!(norm(&r.x_star) <= 1e-2);
    }

    #[test]
    fn start_in_the_solution_set_stops_at_once() {
        let p = ProblemInstance::example2(PI / 6.0).unwrap();
        let mut cfg = Config::default();
        cfg.solver.starts = 1;
        let r = solve(&p, &cfg, None).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.status, SolveStatus::Solved);
    }

    #[test]
    fn reruns_are_identical() {
        let p = ProblemInstance::example1(1e3).unwrap();
        let mut cfg = Config::with_seed(7);
        cfg.merit.use_closed_form = false;
        cfg.solver.max_evals = 800;
        assert_eq!(solve(&p, &cfg, None).unwrap(), solve(&p, &cfg, None).unwrap());
    }
}
