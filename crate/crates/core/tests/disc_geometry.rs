use std::f64::consts::PI;

use fracvolt::disc_geometry::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn metric_examples() {
    let w = c(0.3, -0.4);
    assert!((pseudo_distance(c(0.0, 0.0), w) - 0.5).abs() < 1e-15);
    assert_eq!(pseudo_distance(c(0.5, 0.0), c(0.5, 0.0)), 0.0);
    assert!((pseudo_distance(c(0.5, 0.0), c(-0.5, 0.0)) - 0.8).abs() < 1e-15);
    assert_eq!(hyper_distance(w, w), 0.0);
    assert!((hyper_distance(c(0.0, 0.0), c(0.5, 0.0)) - 0.5 * 3f64.ln()).abs() < 1e-15);
}

#[test]
fn cone_and_square_examples() {
    let xi = Complex64::from_polar(1.0, 1.2);
    assert!(in_cone(0.5 * xi, xi));
    assert!(!in_cone(Complex64::from_polar(0.9, 1.2 + 0.5), xi));
    assert!(in_cone(c(0.0, 0.0), xi));
    let s0 = CarlesonSquare::new(c(0.0, 0.0));
    assert!(in_square(c(0.99, 0.0), &s0) && in_square(c(-0.3, 0.7), &s0));
    let s = CarlesonSquare::new(c(0.5, 0.0));
    assert!(in_square(c(0.75, 0.0), &s));
    assert!(!in_square(c(0.25, 0.0), &s));
}

#[test]
fn hyperbolic_disc_matches_metric() {
    let z = c(0.6, 0.3);
    let r = 0.4;
    let (cen, rad) = hyperbolic_disc_euclid(z, r);
    for k in 0..32 {
        let w = cen + Complex64::from_polar(rad, 2.0 * PI * k as f64 / 32.0);
        assert!((hyper_distance(z, w) - r).abs() < 1e-12);
    }
}

#[test]
fn lattice_half_radius() {
    let lat = build_lattice(0.5, 1, 0.99).unwrap();
    let rep = &lat.report;
    assert!(rep.min_separation >= 0.25, "{}", rep.min_separation);
    assert!(rep.covering_radius <= 0.5, "{}", rep.covering_radius);
    assert!(rep.max_multiplicity <= 64);
    // (1−|w|²)/(1−|z|²) is bounded above and below on D(z, r)
    let (lo, hi) = rep.distortion;
    assert!(lo > 0.0 && hi < f64::INFINITY && lo <= 1.0 && hi >= 1.0);
    let bound = (2.0 * 0.5f64).exp();
    assert!(hi <= bound * 1.0001 && lo >= 1.0 / bound / 1.0001);
    assert!(lat.points.iter().all(|p| p.norm() <= 0.99 + 1e-12));
    let again = build_lattice(0.5, 1, 0.99).unwrap();
    assert_eq!(lat.points, again.points);
    let rows = lat.to_csv();
    assert_eq!(rows.lines().count(), lat.len() + 1);
}

#[test]
fn lattice_rejects_bad_radius() {
    assert!(build_lattice(0.0, 1, 0.9).is_err());
    assert!(build_lattice(1.5, 1, 0.9).is_err());
}

proptest! {
    #[test]
    fn triangle_inequality(a in 0.0f64..0.99, b in 0.0f64..0.99, cc in 0.0f64..0.99,
                           ta in -PI..PI, tb in -PI..PI, tc in -PI..PI) {
        let (x, y, z) = (Complex64::from_polar(a, ta), Complex64::from_polar(b, tb), Complex64::from_polar(cc, tc));
        prop_assert!(hyper_distance(x, z) <= hyper_distance(x, y) + hyper_distance(y, z) + 1e-9);
        prop_assert!((pseudo_distance(x, y) - pseudo_distance(y, x)).abs() < 1e-15);
        let rho = pseudo_distance(x, y);
        prop_assert!((0.0..1.0).contains(&rho));
    }

    #[test]
    fn square_contains_its_generator(m in 0.01f64..0.999, t in -PI..PI) {
        let z = Complex64::from_polar(m, t);
        // the anchor (1−(1−|z|))·e^{i arg z} is z itself
        prop_assert!(in_square(z, &CarlesonSquare::new(z)));
        // and S(a) only holds points at least as close to the boundary
        prop_assert!(!in_square(z * 0.99, &CarlesonSquare::new(z)));
    }
}
