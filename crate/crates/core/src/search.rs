//! Derivative-free compass (pattern) search.

use crate::point::{axpy, normalized};

/// Poll directions: `±e_i`, plus the sign diagonals in low dimension or
/// `±(1,…,1)/√n` otherwise.
pub fn poll_directions(dim: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[i] = s;
            dirs.push(e);
        }
    }
    if dim >= 2 {
        if dim <= 4 {
            for mask in 0..(1u32 << dim) {
                let d: Vec<f64> = (0..dim).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
                dirs.push(normalized(&d).unwrap());
            }
        } else {
            let d = normalized(&vec![1.0; dim]).unwrap();
            dirs.push(d.iter().map(|v| -v).collect());
            dirs.push(d);
        }
    }
    dirs
}

/// State of a compass search minimizing `f` over the image of `feasible`.
#[derive(Debug, Clone)]
pub struct Compass {
    pub x: Vec<f64>,
    pub fx: f64,
    pub step: f64,
    pub expansion: f64,
    pub shrink: f64,
    dirs: Vec<Vec<f64>>,
}

impl Compass {
    pub fn new(x: Vec<f64>, fx: f64, step: f64, expansion: f64, shrink: f64) -> Self {
        let dirs = poll_directions(x.len());
        Self {
            x,
            fx,
            step,
            expansion,
            shrink,
            dirs,
        }
    }

    /// One opportunistic poll. Returns whether the incumbent improved and
    /// the number of function evaluations spent.
    pub fn poll<F, P>(&mut self, f: &mut F, feasible: &P, max_evals: usize) -> (bool, usize)
    where
        F: FnMut(&[f64]) -> f64,
        P: Fn(Vec<f64>) -> Vec<f64>,
    {
        let mut evals = 0;
        for d in &self.dirs {
            if evals >= max_evals {
                break;
            }
            let trial = feasible(axpy(&self.x, self.step, d));
            if trial == self.x {
                continue;
            }
            let ft = f(&trial);
            evals += 1;
            if ft < self.fx {
                self.x = trial;
                self.fx = ft;
                self.step *= self.expansion;
                return (true, evals);
            }
        }
        self.step *= self.shrink;
        (false, evals)
    }
}

/// Outcome of [`minimize`].
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub iterations: usize,
}

/// Runs polls until the step drops below `min_step`, the budgets run out,
/// or the value reaches `target`.
#[allow(clippy::too_many_arguments)]
pub fn minimize<F, P>(
    mut f: F,
    feasible: P,
    x0: Vec<f64>,
    step: f64,
    min_step: f64,
    max_iters: usize,
    max_evals: usize,
    target: f64,
) -> SearchOutcome
where
    F: FnMut(&[f64]) -> f64,
    P: Fn(Vec<f64>) -> Vec<f64>,
{
    let x0 = feasible(x0);
    let f0 = f(&x0);
    let mut c = Compass::new(x0, f0, step, 1.0, 0.5);
    let mut evals = 1;
    let mut iterations = 0;
    while iterations < max_iters && evals < max_evals && c.step >= min_step && c.fx > target {
        let (_, e) = c.poll(&mut f, &feasible, max_evals - evals);
        evals += e;
        iterations += 1;
    }
    SearchOutcome {
        x: c.x,
        value: c.fx,
        evals,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_minimum_of_a_quadratic() {
        let out = minimize(
            |x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2),
            |x| x,
            vec![5.0, 5.0],
            1.0,
            1e-10,
            10_000,
            100_000,
            f64::NEG_INFINITY,
        );
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] + 2.0).abs() < 1e-6, "{:?}", out.x);
    }

    #[test]
    fn respects_the_feasible_map() {
        let out = minimize(
            |x| x[0] + x[1],
            |x: Vec<f64>| x.into_iter().map(|v| v.max(0.0)).collect(),
            vec![3.0, 1.0],
            1.0,
            1e-10,
            1000,
            10_000,
            f64::NEG_INFINITY,
        );
        assert_eq!(out.value, 0.0);
    }

    #[test]
    fn diagonals_present() {
        assert_eq!(poll_directions(2).len(), 8);
        assert_eq!(poll_directions(6).len(), 14);
    }
}
