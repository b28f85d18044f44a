use std::sync::Arc;

use fracvolt::radial_weight::RadialWeight;
use fracvolt::special::ln_gamma;
use proptest::prelude::*;

fn std_w(b: f64) -> Arc<RadialWeight> {
    RadialWeight::standard(b).unwrap()
}

/// Composite Simpson on `[a, b]`, used as a brute-force oracle.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `μ_{2n+1} = n! / (2 ∏_{k=1}^n (β+k))` for the standard weight.
fn odd_moment_product(beta: f64, n: usize) -> f64 {
    let mut v = 0.5;
    for k in 1..=n {
        v *= k as f64 / (beta + k as f64);
    }
    v
}

#[test]
fn standard_moment_examples() {
    assert!(rel(std_w(1.0).moment(3.0).unwrap(), 0.25) < 1e-14);
    assert!(rel(std_w(2.0).moment(3.0).unwrap(), 1.0 / 6.0) < 1e-14);
    assert!(rel(std_w(1.0).moment(201.0).unwrap(), 1.0 / 202.0) < 1e-14);
    for n in 0..50 {
        let exact = 1.0 / ((n as f64 + 1.0) * (n as f64 + 2.0));
        assert!(rel(std_w(2.0).moment(2.0 * n as f64 + 1.0).unwrap(), exact) < 1e-13);
    }
}

#[test]
fn standard_tail_is_integral_of_density() {
    for &beta in &[0.5, 1.0, 2.0, 3.0, 4.5] {
        let w = std_w(beta);
        for &r in &[0.0f64, 0.25, 0.5, 0.9] {
            // Substitute s = 1 - u^2 to neutralize the endpoint singularity.
            let u0 = (1.0 - r).sqrt();
            let oracle = simpson(|u| 2.0 * beta * u.powf(2.0 * beta - 1.0) * (2.0 - u * u).powf(beta - 1.0), 0.0, u0, 4000);
            assert!(rel(w.tail(r).unwrap(), oracle) < 1e-9, "beta={beta} r={r}");
        }
    }
    // Closed forms for β = 1, 2.
    assert_eq!(std_w(1.0).tail(0.25).unwrap(), 0.75);
    assert!(rel(std_w(2.0).tail(0.0).unwrap(), 4.0 / 3.0) < 1e-15);
}

#[test]
fn odd_moments_match_product_formula() {
    for &beta in &[0.5, 1.0, 2.0, 3.0] {
        let w = std_w(beta);
        for n in (0..=200).step_by(7) {
            let m = w.moment(2.0 * n as f64 + 1.0).unwrap();
            assert!(rel(m, odd_moment_product(beta, n)) < 1e-12, "beta={beta} n={n}");
        }
    }
}

#[test]
fn mu_plus_of_lebesgue_is_log() {
    let mp = RadialWeight::mu_plus(&std_w(1.0));
    for &r in &[1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9] {
        let v = mp.evaluate(r).unwrap();
        assert!(rel(v, -r.ln()) < 1e-12, "r={r}: {v}");
    }
    // μ₊(r)/(1−r) → 1.
    let r = 1.0 - 2f64.powi(-30);
    assert!((mp.evaluate(r).unwrap() / (1.0 - r) - 1.0).abs() < 1e-6);
}

#[test]
fn mu_plus_tail_bound() {
    for &beta in &[0.5, 1.0, 2.0] {
        let w = std_w(beta);
        let mp = RadialWeight::mu_plus(&w);
        for k in 1..10 {
            let r = k as f64 / 10.0;
            assert!(mp.tail(r).unwrap() <= w.tail(r).unwrap() * (1.0 - r) * (1.0 + 1e-12));
        }
    }
}

#[test]
fn iterated_v_closed_forms() {
    let one = std_w(1.0);
    let v1 = RadialWeight::iterate_v(&one, 1).unwrap();
    let v2 = RadialWeight::iterate_v(&one, 2).unwrap();
    for &r in &[0.0, 0.1, 0.5, 0.9, 0.999] {
        let q = 1.0 - r * r;
        assert!((v1.evaluate(r).unwrap() - q).abs() < 1e-14);
        assert!((v2.evaluate(r).unwrap() - 0.5 * q * q).abs() < 1e-14);
    }
    assert!(RadialWeight::iterate_v(&one, 5).is_err());
}

#[test]
fn w1_closed_form_and_oracle() {
    let w1 = RadialWeight::w_n(1).unwrap();
    for &r in &[0.01f64, 0.2, 0.5, 0.8, 0.99] {
        let exact = 0.5 * (1.0 / r).ln() - 0.25 * (1.0 - r * r);
        assert!(rel(w1.evaluate(r).unwrap(), exact) < 1e-12, "r={r}");
    }
    let brute = simpson(|s| s * (2.0 * s).ln(), 0.5, 1.0, 2000);
    assert!(rel(w1.evaluate(0.5).unwrap(), brute) < 1e-12);
    assert!(w1.evaluate(0.0).is_err());
}

#[test]
fn w1_comparable_to_square_of_distance() {
    let w1 = RadialWeight::w_n(1).unwrap();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut r: f64 = 0.5;
    while r <= 0.999 {
        let q = w1.evaluate(r).unwrap() / (1.0 - r).powi(2);
        lo = lo.min(q);
        hi = hi.max(q);
        r += 0.001;
    }
    assert!(lo > 0.4 && hi < 1.0, "band [{lo}, {hi}]");
}

#[test]
fn moment_recursions() {
    for &beta in &[1.0, 2.0] {
        let nu = RadialWeight::mu_plus(&std_w(beta));
        let mut prev = nu.clone();
        for n in 1..=2 {
            let v = RadialWeight::iterate_v(&nu, n).unwrap();
            for &x in &[1.0, 3.0, 5.0, 7.0] {
                let lhs = v.moment(x).unwrap();
                let rhs = 2.0 * prev.moment(x + 2.0).unwrap() / (x + 1.0);
                assert!(rel(lhs, rhs) < 1e-8, "V beta={beta} n={n} x={x}");
            }
            prev = v;
        }
    }
    let om = std_w(2.0);
    let mut prev = om.clone();
    for n in 1..=2 {
        let s = RadialWeight::iterate_star(&om, n).unwrap();
        for &x in &[1.0, 3.0, 5.0, 7.0] {
            let lhs = s.moment(x).unwrap();
            let rhs = prev.moment(x + 2.0).unwrap() / ((x + 1.0) * (x + 1.0));
            assert!(rel(lhs, rhs) < 1e-8, "star n={n} x={x}");
        }
        prev = s;
    }
}

#[test]
fn iterated_moments_against_closed_recursion() {
    // (μ₊)_x = μ_x/(x+1), then the V recursion, all from closed forms.
    let mu = std_w(2.0);
    let v2 = RadialWeight::iterate_v(&RadialWeight::mu_plus(&mu), 2).unwrap();
    for k in 0..17 {
        let x = 2.0 * k as f64 + 1.0;
        let m = |y: f64| mu.moment(y).unwrap() / (y + 1.0);
        let oracle = 2.0 * (2.0 * m(x + 4.0) / (x + 3.0)) / (x + 1.0);
        assert!(rel(v2.moment(x).unwrap(), oracle) < 1e-11, "x={x}");
    }
    let w2 = RadialWeight::w_n(2).unwrap();
    for k in 0..17 {
        let x = 2.0 * k as f64 + 1.0;
        let oracle = 1.0 / ((x + 5.0) * (x + 3.0).powi(2) * (x + 1.0).powi(2));
        assert!(rel(w2.moment(x).unwrap(), oracle) < 1e-11, "x={x}");
    }
}

#[test]
fn iterated_weight_tail_comparison() {
    for &beta in &[1.0, 2.0] {
        let mu = std_w(beta);
        let mp = RadialWeight::mu_plus(&mu);
        for n in 1..=2u32 {
            let v = RadialWeight::iterate_v(&mp, n).unwrap();
            let mut c_upper: f64 = 0.0;
            let mut c_lower: f64 = 0.0;
            for j in 1..=36 {
                let r = 1.0 - 2f64.powi(-j);
                let base = mu.tail(r).unwrap() * (1.0 - r).powi(n as i32);
                c_upper = c_upper.max(v.evaluate(r).unwrap() / base);
                c_lower = c_lower.max(base * (1.0 - r) / v.tail(r).unwrap());
            }
            assert!(c_upper.is_finite() && c_upper < 10.0, "beta={beta} n={n} C={c_upper}");
            assert!(c_lower.is_finite() && c_lower < 100.0, "beta={beta} n={n} C'={c_lower}");
        }
    }
}

#[test]
fn expression_weights() {
    let e = RadialWeight::parse("expr:2*(1-r^2)").unwrap();
    let s = std_w(2.0);
    for &x in &[0.0, 1.0, 3.0, 10.0, 101.0] {
        assert!(rel(e.moment(x).unwrap(), s.moment(x).unwrap()) < 1e-12, "x={x}");
    }
    for &r in &[0.0, 0.3, 0.95] {
        assert!(rel(e.tail(r).unwrap(), s.tail(r).unwrap()) < 1e-12);
    }
    // Integrable endpoint singularity.
    let half = RadialWeight::parse("expr:0.5*(1-r^2)^(-0.5)").unwrap();
    let s_half = std_w(0.5);
    for &x in &[1.0, 3.0, 21.0] {
        assert!(rel(half.moment(x).unwrap(), s_half.moment(x).unwrap()) < 1e-10, "x={x}");
    }
    assert!(rel(half.tail(0.0).unwrap(), s_half.tail(0.0).unwrap()) < 1e-10);
    assert!(RadialWeight::parse("expr:1/(1-r)").is_err());
    assert!(RadialWeight::parse("expr:r-0.5").is_err());
}

#[test]
fn tail_expression_weights() {
    let t = RadialWeight::parse("tail:(1-r)^2").unwrap();
    // μ = 2(1−r): μ_x = 2/((x+1)(x+2)).
    for &x in &[0.0, 1.0, 5.0, 40.0] {
        let exact = 2.0 / ((x + 1.0) * (x + 2.0));
        assert!(rel(t.moment(x).unwrap(), exact) < 1e-12, "x={x}");
    }
    assert!((t.evaluate(0.25).unwrap() - 1.5).abs() < 1e-14);
    let e1 = RadialWeight::exponential(1.0, 1.0).unwrap();
    let t1 = RadialWeight::parse("tail:exp(-1/(1-r))").unwrap();
    for &x in &[1.0, 17.0, 2049.0] {
        assert!(rel(e1.moment(x).unwrap(), t1.moment(x).unwrap()) < 1e-10, "x={x}");
    }
    assert!(RadialWeight::parse("tail:r").is_err());
}

#[test]
fn exponential_moment_cross_check() {
    // ∫ s^x e^{-1/(1-s)}/(1-s)^2 ds against Simpson in u = 1 - s.
    let w = RadialWeight::exponential(1.0, 1.0).unwrap();
    for &x in &[1.0, 7.0, 63.0] {
        let oracle = simpson(|u| if u == 0.0 { 0.0 } else { (1.0 - u).powf(x) * (-1.0 / u).exp() / (u * u) }, 0.0, 1.0, 200_000);
        assert!(rel(w.moment(x).unwrap(), oracle) < 1e-9, "x={x}");
    }
    assert!(w.log_moment(2f64.powi(37)).unwrap().is_finite());
}

#[test]
fn gamma_closed_form_sanity() {
    // Γ(β+1)/2 · Γ(n+1)/Γ(n+β+1) for β = 0.5 against the product.
    let n = 10usize;
    let lg = ln_gamma(1.5) - 2f64.ln() + ln_gamma(n as f64 + 1.0) - ln_gamma(n as f64 + 1.5);
    assert!(rel(lg.exp(), odd_moment_product(0.5, n)) < 1e-13);
}

proptest! {
    #[test]
    fn tails_are_monotone(beta in 0.3f64..5.0, a in 0.0f64..0.999, b in 0.0f64..0.999) {
        let w = std_w(beta);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(w.tail(lo).unwrap() >= w.tail(hi).unwrap());
        prop_assert!(w.tail(hi).unwrap() > 0.0);
    }

    #[test]
    fn moments_decrease(beta in 0.3f64..5.0, x in 0.0f64..500.0, dx in 0.01f64..50.0) {
        let w = std_w(beta);
        prop_assert!(w.moment(x + dx).unwrap() < w.moment(x).unwrap());
    }
}
