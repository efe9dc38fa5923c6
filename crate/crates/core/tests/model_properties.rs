//! Structural identities of the bifunction catalog and convexity of cone
//! distances along C-concave maps.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sveq_core::certify::{concavity_check, CheckStatus};
use sveq_core::model::Term;
use sveq_core::point::{add, dist, scale, sub};
use sveq_core::{BifunctionSpec, Config, ConeSpec, ConstraintKind, ConstraintSet, ProblemInstance};

const PAIRS: usize = 10_000;

fn free_box(dim: usize) -> ConstraintSet {
    ConstraintSet::new(ConstraintKind::Box { lower: vec![None; dim], upper: vec![None; dim] }, 10.0).unwrap()
}

fn unit_box(dim: usize) -> ConstraintSet {
    ConstraintSet::new(ConstraintKind::Box { lower: vec![Some(-1.0); dim], upper: vec![Some(1.0); dim] }, 10.0).unwrap()
}

fn separable() -> ProblemInstance {
    ProblemInstance::new(
        BifunctionSpec::Separable {
            g: Term::Sum {
                terms: vec![
                    Term::Polynomial { coeffs: vec![vec![0.5, 1.0, -1.0], vec![0.0, -2.0, 0.0, 0.0, -0.25]] },
                    Term::Linear { matrix: vec![vec![0.3, -0.2], vec![0.1, 0.4]] },
                ],
            },
            h: Term::Sum {
                terms: vec![Term::ExpNorm { weights: vec![1.0, 0.5] }, Term::RecipNorm { weights: vec![-1.0, 2.0] }],
            },
        },
        ConeSpec::orthant(2).unwrap(),
        unit_box(2),
        None,
    )
    .unwrap()
}

fn factorable() -> ProblemInstance {
    ProblemInstance::new(
        BifunctionSpec::Factorable {
            lambda: Term::Sum {
                terms: vec![Term::Constant { value: vec![2.0] }, Term::Linear { matrix: vec![vec![0.5, -0.5]] }],
            },
            g: Term::Polynomial { coeffs: vec![vec![1.0, 0.0, -1.0], vec![-0.5, 0.0, -2.0]] },
        },
        ConeSpec::orthant(2).unwrap(),
        unit_box(2),
        None,
    )
    .unwrap()
}

fn affine() -> ProblemInstance {
    ProblemInstance::new(
        BifunctionSpec::Affine {
            a: vec![vec![1.0, -2.0], vec![0.5, 0.25], vec![-1.0, 0.0]],
            b: vec![vec![0.0, 1.0], vec![1.0, 1.0], vec![3.0, -1.0]],
            c: vec![0.1, -0.2, 0.3],
        },
        ConeSpec::halfspaces(vec![vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap(),
        free_box(2),
        None,
    )
    .unwrap()
}

fn vec2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn separable_differences_do_not_depend_on_x(x in vec2(), xp in vec2(), z in vec2(), zp in vec2()) {
        let p = separable();
        let lhs = sub(&p.evaluate(&x, &z).unwrap(), &p.evaluate(&x, &zp).unwrap());
        let rhs = sub(&p.evaluate(&xp, &z).unwrap(), &p.evaluate(&xp, &zp).unwrap());
        prop_assert!(dist(&lhs, &rhs) <= 1e-9 * (1.0 + lhs.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
    }

    #[test]
    fn factorable_cross_products_agree(x in vec2(), z in vec2(), zp in vec2()) {
        let p = factorable();
        let lambda = |z: &[f64]| 2.0 + 0.5 * z[0] - 0.5 * z[1];
        prop_assume!(lambda(&z).abs() > 1e-6 && lambda(&zp).abs() > 1e-6);
        let a = scale(&p.evaluate(&x, &z).unwrap(), lambda(&zp));
        let b = scale(&p.evaluate(&x, &zp).unwrap(), lambda(&z));
        prop_assert!(dist(&a, &b) <= 1e-9 * (1.0 + a.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
    }

    #[test]
    fn affine_b_derivative_is_the_matrix(x in vec2(), z in vec2(), u in vec2()) {
        let p = affine();
        prop_assume!(u.iter().any(|v| v.abs() > 1e-9));
        let d = p.b_derivative(&x, &z, &u).unwrap();
        let a = [[1.0, -2.0], [0.5, 0.25], [-1.0, 0.0]];
        for (row, got) in a.iter().zip(&d) {
            prop_assert_eq!(*got, row[0] * u[0] + row[1] * u[1]);
        }
    }

    #[test]
    fn numeric_b_derivative_matches_the_analytic_one(x in vec2(), z in vec2(), u in vec2()) {
        prop_assume!(u.iter().any(|v| v.abs() > 1e-3));
        for p in [separable(), factorable(), ProblemInstance::example1(1e3).unwrap()] {
            let exact = p.b_derivative(&x, &z, &u).unwrap();
            let numeric = p.b_derivative_numeric(&x, &z, &u).unwrap();
            prop_assert!(dist(&exact, &numeric) <= 1e-5 * (1.0 + exact.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
        }
    }
}

fn concave_catalog() -> Vec<(&'static str, ProblemInstance)> {
    let concave_sep = ProblemInstance::new(
        BifunctionSpec::Separable {
            g: Term::Polynomial { coeffs: vec![vec![1.0, 0.5, -1.0], vec![0.0, 0.0, -0.5, 0.0, -1.0]] },
            h: Term::ExpNorm { weights: vec![1.0, -1.0] },
        },
        ConeSpec::orthant(2).unwrap(),
        unit_box(2),
        None,
    )
    .unwrap();
    let concave_factor = ProblemInstance::new(
        BifunctionSpec::Factorable {
            lambda: Term::RecipNorm { weights: vec![1.0] },
            g: Term::Polynomial { coeffs: vec![vec![0.0, 1.0, -1.0], vec![-1.0, 0.0, -3.0]] },
        },
        ConeSpec::orthant(2).unwrap(),
        unit_box(2),
        None,
    )
    .unwrap();
    vec![
        ("example 1", ProblemInstance::example1(1e3).unwrap()),
        ("example 2", ProblemInstance::example2(std::f64::consts::PI / 6.0).unwrap()),
        ("affine", affine()),
        ("separable", concave_sep),
        ("factorable", concave_factor),
    ]
}

/// `f(m,z) − (f(a,z) + f(b,z))/2 ∈ C` and
/// `d_C(f(m,z)) ≤ (d_C(f(a,z)) + d_C(f(b,z)))/2` on sampled pairs.
#[test]
fn concave_maps_have_convex_cone_distances() {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    for (name, p) in concave_catalog() {
        let zs = p.sample_constraint(200, 3).unwrap().points;
        let mut worst_gap = 0.0f64;
        let mut worst_convexity = 0.0f64;
        for k in 0..PAIRS {
            let a: Vec<f64> = (0..p.dim_x).map(|_| r.gen_range(-3.0..3.0)).collect();
            let b: Vec<f64> = (0..p.dim_x).map(|_| r.gen_range(-3.0..3.0)).collect();
            let m = scale(&add(&a, &b), 0.5);
            let z = &zs[k % zs.len()];
            let (fa, fb, fm) = (p.evaluate(&a, z).unwrap(), p.evaluate(&b, z).unwrap(), p.evaluate(&m, z).unwrap());
            let gap = sub(&fm, &scale(&add(&fa, &fb), 0.5));
            worst_gap = worst_gap.max(p.cone.distance(&gap).unwrap());
            let lhs = p.cone.distance(&fm).unwrap();
            let rhs = 0.5 * (p.cone.distance(&fa).unwrap() + p.cone.distance(&fb).unwrap());
            worst_convexity = worst_convexity.max(lhs - rhs);
        }
        assert!(worst_gap <= 1e-9, "{name}: concavity gap {worst_gap:e}");
        assert!(worst_convexity <= 1e-9, "{name}: convexity violation {worst_convexity:e}");
    }
}

#[test]
fn audit_passes_the_concave_catalog() {
    let cfg = Config::default();
    for (name, p) in concave_catalog() {
        let c = concavity_check(&p, PAIRS, &cfg).unwrap();
        assert_eq!(c.status, CheckStatus::PassedSampled, "{name}: {}", c.evidence);
    }
}

#[test]
fn convex_map_is_refuted_with_a_witness() {
    // g(x) = (x₁², −x₂): the first component is convex
    let p = ProblemInstance::new(
        BifunctionSpec::Separable {
            g: Term::Polynomial { coeffs: vec![vec![0.0, 0.0, 1.0], vec![0.0, -1.0]] },
            h: Term::Constant { value: vec![0.0, 0.0] },
        },
        ConeSpec::orthant(2).unwrap(),
        unit_box(2),
        None,
    )
    .unwrap();
    let c = concavity_check(&p, PAIRS, &Config::default()).unwrap();
    assert_eq!(c.status, CheckStatus::Refuted);
    let w = c.witness.unwrap();
    let (a, b, z) = (&w[0], &w[1], &w[2]);
    let m = scale(&add(a, b), 0.5);
    let gap = sub(&p.evaluate(&m, z).unwrap(), &scale(&add(&p.evaluate(a, z).unwrap(), &p.evaluate(b, z).unwrap()), 0.5));
    assert!(gap[0] < -1e-9, "{gap:?}");
    // the explicit pair x₁ = ±1 also violates the midpoint inequality
    let g = |x: f64| x * x;
    assert!(g(0.0) < 0.5 * (g(1.0) + g(-1.0)));
}
