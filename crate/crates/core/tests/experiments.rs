use fracvolt::experiments::*;
use fracvolt::taylor::TaylorSeries;
use fracvolt::RadialWeight;
use num_complex::Complex64;

#[test]
fn corpus_generation() {
    let m = corpus(&Corpus::Monomials { min: 2, max: 4 }, 0);
    assert_eq!(m.len(), 3);
    assert_eq!(m[1].series, TaylorSeries::monomial(3, Complex64::new(1.0, 0.0)));
    let a = corpus(&Corpus::Random { count: 5, max_degree: 7 }, 9);
    let b = corpus(&Corpus::Random { count: 5, max_degree: 7 }, 9);
    assert_eq!(a, b);
    for it in &a {
        let d = it.series.degree();
        assert!((1..=7).contains(&d));
        let e: f64 = it.series.coeffs().iter().map(|c| c.norm_sqr()).sum();
        assert!((e - 1.0).abs() < 1e-14);
    }
    assert_ne!(a, corpus(&Corpus::Random { count: 5, max_degree: 7 }, 10));
    let l = corpus(&Corpus::LogBranch { terms: vec![4] }, 0);
    assert_eq!(l[0].series.coeff(4), Complex64::new(0.25, 0.0));
}

#[test]
fn symbol_parsing() {
    assert!(parse_symbol("zero").unwrap().is_zero());
    assert_eq!(parse_symbol("z^3").unwrap().degree(), 3);
    assert_eq!(parse_symbol("coeffs:1,0,2").unwrap(), TaylorSeries::from_real(&[1.0, 0.0, 2.0]));
    assert_eq!(parse_symbol("[[0,0],[0,1]]").unwrap().coeff(1), Complex64::new(0.0, 1.0));
    assert_eq!(parse_symbol("log:8").unwrap().degree(), 8);
    assert!(parse_symbol("sin(z)").is_err());
}

#[test]
fn slope_helper() {
    assert!((ls_slope(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]) - 2.0).abs() < 1e-14);
    assert_eq!(ls_slope(&[(1.0, 1.0), (1.0, 3.0)]), 0.0);
}

#[test]
fn equivalence_tables() {
    let cfg = ExperimentConfig { corpus: Corpus::Monomials { min: 1, max: 6 }, depth: 8, angles: 8, ..Default::default() };
    let t = cmd_equivalence("bmoa", &cfg).unwrap();
    assert_eq!(t.rows.len(), 6);
    let s = t.summary.clone().unwrap();
    assert_eq!(s.excluded, 0);
    assert!(s.spread.is_finite() && s.spread >= 1.0);
    let csv = t.to_csv().unwrap();
    assert_eq!(csv.lines().count(), 1 + 6 + 4);
    assert!(cmd_equivalence("nonsense", &cfg).is_err());

    // p = 1 Besov at β = 1 diverges: rows stay, the spread leaves them out
    let cfg1 = ExperimentConfig { p: 1.0, ..cfg.clone() };
    let t1 = cmd_equivalence("besov", &cfg1).unwrap();
    assert!(t1.divergent());
    assert_eq!(t1.summary.unwrap().excluded, 6);
}

#[test]
fn volterra_and_moment_commands() {
    let w = RadialWeight::lebesgue();
    let (s, t) = cmd_volterra(&w, &TaylorSeries::zero(), "zero", -1.0, 16, &[2.0]).unwrap();
    assert!(s.values.iter().all(|v| *v == 0.0));
    assert_eq!(t.rows[0].lhs, 0.0);
    assert!(!t.divergent());
    let m = cmd_moments(&RadialWeight::standard(3.0).unwrap(), &[1.0, 3.0]).unwrap();
    for r in &m.rows {
        assert!((r.lhs - r.rhs).abs() < 1e-12);
    }
}
