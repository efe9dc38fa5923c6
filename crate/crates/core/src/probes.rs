//! Probe points for sampled audits: a sample of `K` near the projection of
//! the origin, shrunk toward it at several scales, plus caller extras.

use crate::config::Config;
use crate::error::Result;
use crate::model::ProblemInstance;
use crate::point::{axpy, dist, sub};
use crate::sampling::{halton, rng, uniform_in_box};

const PROBE_SEED_SALT: u64 = 0x5eed_0f_9c0b;

/// Probe points inside `K`, extras first, then scale-major.
pub fn probe_points(p: &ProblemInstance, cfg: &Config) -> Result<Vec<Vec<f64>>> {
    let pc = &cfg.probes;
    let center = p.constraints.project(&vec![0.0; p.dim_x])?;
    let base = p
        .constraints
        .sample_within(pc.count.max(1), cfg.seed ^ PROBE_SEED_SALT, pc.radius)?;
    let mut out: Vec<Vec<f64>> = Vec::new();
    let push = |v: Vec<f64>, out: &mut Vec<Vec<f64>>| {
        if !out.iter().any(|o| dist(o, &v) < 1e-12) {
            out.push(v);
        }
    };
    for e in &pc.extra {
        if e.len() == p.dim_x {
            push(e.clone(), &mut out);
        }
    }
    for &s in &pc.scales {
        for b in &base.points {
            push(axpy(&center, s, &sub(b, &center)), &mut out);
        }
    }
    out.truncate(pc.max_probes.max(pc.extra.len()));
    Ok(out)
}

/// Points of the ambient space around `K`, at the probe radius and one
/// tenth of it; used where the theory quantifies over all of `X`.
pub fn ambient_points(p: &ProblemInstance, cfg: &Config, count: usize) -> Result<Vec<Vec<f64>>> {
    let center = p.constraints.project(&vec![0.0; p.dim_x])?;
    let mut out = Vec::with_capacity(count);
    let mut r = rng(cfg.seed ^ PROBE_SEED_SALT ^ 1);
    let unit = vec![1.0; p.dim_x];
    let neg: Vec<f64> = unit.iter().map(|v| -v).collect();
    for k in 0..count {
        let radius = if k % 2 == 0 { cfg.probes.radius } else { 0.1 * cfg.probes.radius };
        let u = if k % 3 == 2 {
            uniform_in_box(&mut r, &neg, &unit)
        } else {
            halton(k as u64 + 1, p.dim_x).into_iter().map(|h| 2.0 * h - 1.0).collect()
        };
        out.push(axpy(&center, radius, &u));
    }
    Ok(out)
}

/// Picks `n` entries spread evenly across `points`.
pub fn spread(points: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    if points.len() <= n {
        return points.to_vec();
    }
    (0..n).map(|k| points[k * points.len() / n].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn probes_lie_in_k_and_reach_small_scales() {
        let p = ProblemInstance::example2(PI / 6.0).unwrap();
        let cfg = Config::default();
        let pts = probe_points(&p, &cfg).unwrap();
        assert!(pts.iter().all(|x| p.constraints.contains(x, 1e-9)));
        assert!(pts.iter().any(|x| crate::point::norm(x) > 5.0));
        assert!(pts.iter().any(|x| crate::point::norm(x) > 0.0 && crate::point::norm(x) < 1e-2));
        assert_eq!(pts, probe_points(&p, &cfg).unwrap());
    }

    #[test]
    fn extras_come_first() {
        let p = ProblemInstance::example1(1e3).unwrap();
        let mut cfg = Config::default();
        cfg.probes.extra = vec![vec![-0.5, -0.5]];
        assert_eq!(probe_points(&p, &cfg).unwrap()[0], vec![-0.5, -0.5]);
    }

    #[test]
    fn spread_covers_the_list() {
        let pts: Vec<Vec<f64>> = (0..10).map(|k| vec![k as f64]).collect();
        let s = spread(&pts, 5);
        assert_eq!(s, vec![vec![0.0], vec![2.0], vec![4.0], vec![6.0], vec![8.0]]);
    }
}
