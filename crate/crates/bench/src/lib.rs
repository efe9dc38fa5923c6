//! Benchmark fixtures shared by the criterion targets.

use std::f64::consts::PI;

use sveq_core::{BifunctionSpec, ConeSpec, ConstraintKind, ConstraintSet, Point, ProblemInstance};

pub fn example1() -> ProblemInstance {
    ProblemInstance::example1(1e3).expect("catalog entry")
}

pub fn example2() -> ProblemInstance {
    ProblemInstance::example2(PI / 6.0).expect("catalog entry")
}

/// `f(x,z) = z − x` on the box `[−1,1]²`, solved only by `(−1,−1)`.
pub fn box_descent() -> ProblemInstance {
    ProblemInstance::new(
        BifunctionSpec::Affine {
            a: vec![vec![-1.0, 0.0], vec![0.0, -1.0]],
            b: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            c: vec![0.0, 0.0],
        },
        ConeSpec::orthant(2).expect("dimension"),
        ConstraintSet::new(ConstraintKind::Box { lower: vec![Some(-1.0); 2], upper: vec![Some(1.0); 2] }, 10.0)
            .expect("box"),
        Some(vec![Point::new(vec![-1.0, -1.0]).expect("finite")]),
    )
    .expect("consistent dimensions")
}

/// A pointed halfspace cone in `R^dim` with `dim + 1` facets.
pub fn halfspace_cone(dim: usize) -> ConeSpec {
    let mut normals: Vec<Vec<f64>> = (0..dim)
        .map(|k| {
            let mut e = vec![0.2; dim];
            e[k] = 1.0;
            e
        })
        .collect();
    normals.push(vec![1.0; dim]);
    ConeSpec::halfspaces(normals).expect("nontrivial")
}
