//! The chain from σ-search to metric increase, slopes, certificates and
//! certified solving.

use std::f64::consts::PI;

use sveq_core::certify::{certify_via_gamma, certify_via_sigma, validate_bound, validation_points, BoundCertificate};
use sveq_core::config::Config;
use sveq_core::increase::{check_increase_at, default_region, sigma_search};
use sveq_core::probes::ambient_points;
use sveq_core::slope::restricted_slope;
use sveq_core::solver::solve;
use sveq_core::{BifunctionSpec, ConeSpec, ConstraintKind, ConstraintSet, Point, ProblemInstance};

fn example2() -> ProblemInstance {
    ProblemInstance::example2(PI / 6.0).unwrap()
}

fn box_descent() -> ProblemInstance {
    ProblemInstance::new(
        BifunctionSpec::Affine {
            a: vec![vec![-1.0, 0.0], vec![0.0, -1.0]],
            b: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            c: vec![0.0, 0.0],
        },
        ConeSpec::orthant(2).unwrap(),
        ConstraintSet::new(ConstraintKind::Box { lower: vec![Some(-1.0); 2], upper: vec![Some(1.0); 2] }, 10.0).unwrap(),
        Some(vec![Point::new(vec![-1.0, -1.0]).unwrap()]),
    )
    .unwrap()
}

#[test]
fn sigma_witnesses_pass_the_increase_test() {
    let p = example2();
    let cfg = Config::default();
    let region = default_region(&p, &cfg).unwrap();
    let s = sigma_search(&p, &region, &cfg).unwrap();
    let cert = s.certificate.expect("certificate");
    let alpha = 1.0 + cert.sigma * (1.0 - 0.01);
    for w in &cert.witnesses {
        let scale = w.x0.norm().min(cfg.increase.delta0 * 10.0);
        for r in [1e-2 * scale, 1e-3 * scale] {
            let c = check_increase_at(&p, &w.x0, alpha, r, Some(&w.u0), &cfg).unwrap();
            assert!(c.holds, "{:?} r = {r}: {} < {}", w.x0, c.best_depth, c.required);
        }
    }
}

#[test]
fn sigma_survives_region_shrinkage() {
    let p = example2();
    let cfg = Config::default();
    let region = default_region(&p, &cfg).unwrap();
    let full = sigma_search(&p, &region, &cfg).unwrap().certificate.unwrap().sigma;
    for sub in [&region[..region.len() / 2], &region[region.len() / 2..], &region[..3]] {
        let s = sigma_search(&p, sub, &cfg).unwrap().certificate.unwrap().sigma;
        assert!(s >= full - 1e-12, "{s} < {full}");
    }
}

#[test]
fn degenerate_sector_has_no_sigma() {
    let p = ProblemInstance::example2(0.0).unwrap();
    let cfg = Config::default();
    let region = default_region(&p, &cfg).unwrap();
    assert!(sigma_search(&p, &region, &cfg).unwrap().certificate.is_none());
}

#[test]
fn sigma_certificate_bounds_slopes_from_below() {
    let p = example2();
    let mut cfg = Config::default();
    cfg.certify.concavity_pairs = 1000;
    let cert = certify_via_sigma(&p, &cfg).unwrap().certificate.unwrap();
    for x in default_region(&p, &cfg).unwrap() {
        let s = restricted_slope(&p, &x, &cfg).unwrap();
        assert!(s.value >= 0.9 * cert.constant, "{x:?}: {}", s.value);
    }
}

#[test]
fn issued_certificates_validate_and_weaker_ones_too() {
    let mut cfg = Config::default();
    cfg.certify.concavity_pairs = 1000;
    let cases = [
        (example2(), certify_via_sigma(&example2(), &cfg).unwrap().certificate),
        (box_descent(), certify_via_gamma(&box_descent(), &cfg).unwrap().certificate),
    ];
    for (p, cert) in cases {
        let cert = cert.expect("certificate");
        let mut xs = validation_points(&p, 100, &cfg).unwrap();
        if cert.bound_form == sveq_core::certify::BoundForm::NuKaOnX {
            xs.extend(ambient_points(&p, &cfg, 100).unwrap().into_iter().map(|x| Point::new(x).unwrap()));
        }
        assert!(validate_bound(&p, &cert, &xs, &cfg).unwrap().pass);
        for f in [0.5, 0.1] {
            let weaker = BoundCertificate { constant: cert.constant * f, ..cert.clone() };
            assert!(validate_bound(&p, &weaker, &xs, &cfg).unwrap().pass);
        }
    }
}

#[test]
fn certified_solve_brackets_the_true_distance() {
    let mut cfg = Config::default();
    cfg.certify.concavity_pairs = 1000;
    for p in [example2(), box_descent()] {
        let cert = match certify_via_sigma(&p, &cfg).unwrap().certificate {
            Some(c) => c,
            None => certify_via_gamma(&p, &cfg).unwrap().certificate.unwrap(),
        };
        for f in [0.1, 0.5, 1.0] {
            let mut c2 = cfg.clone();
            c2.solver.max_evals = (5000.0 * f) as usize;
            let r = solve(&p, &c2, Some(&cert)).unwrap();
            let true_dist = p.distance_to_known_solutions(&r.x_star).unwrap();
            assert!(true_dist <= r.certified_distance.unwrap() + 1e-9, "{true_dist} > {:?}", r.certified_distance);
        }
    }
}
