//! Named experiments assembled from the library, as fixed-column tables.
//!
//! Every table row has the columns
//! `experiment, weight, symbol, param, lhs, rhs, ratio, trunc, err, anchor`.
//! Rows are produced in input order whatever the parallelism, and floats are
//! printed in shortest round-trip form, so equal configurations give equal
//! bytes.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::estimate::{NormEstimate, Status, Truncation};
use crate::quadrature::QuadratureSpec;
use crate::radial_weight::RadialWeight;
use crate::space_norms as sn;
use crate::taylor::{default_z_grid, frac_derivative, frac_integral, frac_rep_identity_check, TaylorSeries};
use crate::volterra::{schatten_norm, singular_values, volterra_matrix, SingularSpectrum};
use crate::weight_class::{classify, WeightClassReport};

/// Function or symbol corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Corpus {
    /// `zⁿ` for `n = min..=max`.
    Monomials { min: usize, max: usize },
    /// `count` polynomials of degree `1..=max_degree` with complex Gaussian
    /// coefficients, scaled to `‖f‖_{H²} = 1`.
    Random { count: usize, max_degree: usize },
    /// `Σ_{k=1}^N z^k/k` for each listed `N`.
    LogBranch { terms: Vec<usize> },
    /// Explicit series.
    Explicit { items: Vec<TaylorSeries> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Everything an experiment depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Weight descriptor (JSON form of [`RadialWeight::descriptor`]).
    pub weight: Value,
    pub corpus: Corpus,
    pub p: f64,
    pub alpha: f64,
    /// Matrix truncation for Schatten experiments.
    pub trunc: usize,
    /// Anchor depth for BMOA-type suprema.
    pub depth: u32,
    /// Anchor rays for BMOA-type suprema.
    pub angles: usize,
    pub format: Format,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            weight: RadialWeight::lebesgue().descriptor(),
            corpus: Corpus::Monomials { min: 1, max: 8 },
            p: 2.0,
            alpha: -1.0,
            trunc: 256,
            depth: 12,
            angles: 16,
            format: Format::Csv,
            seed: 0,
        }
    }
}

/// A labelled corpus element.
#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub label: String,
    pub series: TaylorSeries,
}

pub fn corpus(c: &Corpus, seed: u64) -> Vec<Item> {
    match c {
        Corpus::Monomials { min, max } => (*min..=*max)
            .map(|n| Item { label: format!("z^{n}"), series: TaylorSeries::monomial(n, Complex64::new(1.0, 0.0)) })
            .collect(),
        Corpus::Random { count, max_degree } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..*count)
                .map(|i| {
                    let d = rng.gen_range(1..=(*max_degree).max(1));
                    let raw: Vec<Complex64> = (0..=d).map(|_| Complex64::new(gauss(&mut rng), gauss(&mut rng))).collect();
                    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    Item {
                        label: format!("random[{seed}:{i}]:deg{d}"),
                        series: TaylorSeries::new(raw.into_iter().map(|z| z / norm).collect()),
                    }
                })
                .collect()
        }
        Corpus::LogBranch { terms } => {
            terms.iter().map(|n| Item { label: format!("log:{n}"), series: TaylorSeries::log_branch(*n) }).collect()
        }
        Corpus::Explicit { items } => {
            items.iter().enumerate().map(|(i, s)| Item { label: format!("explicit[{i}]"), series: s.clone() }).collect()
        }
    }
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Parse a symbol: `zero`, `z`, `z^n`, `log:N`, `coeffs:a,b,…` (real) or a
/// JSON list of `[re, im]` pairs.
pub fn parse_symbol(s: &str) -> Result<TaylorSeries> {
    let s = s.trim();
    let bad = || Error::Symbol(s.to_string());
    if s.starts_with('[') {
        return serde_json::from_str(s).map_err(|e| Error::Symbol(format!("{s}: {e}")));
    }
    if s == "zero" || s == "0" {
        return Ok(TaylorSeries::zero());
    }
    if s == "z" {
        return Ok(TaylorSeries::monomial(1, Complex64::new(1.0, 0.0)));
    }
    if let Some(n) = s.strip_prefix("z^") {
        return Ok(TaylorSeries::monomial(n.parse().map_err(|_| bad())?, Complex64::new(1.0, 0.0)));
    }
    if let Some(n) = s.strip_prefix("log:") {
        return Ok(TaylorSeries::log_branch(n.parse().map_err(|_| bad())?));
    }
    if let Some(list) = s.strip_prefix("coeffs:") {
        let v: Vec<f64> = list.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
        return Ok(TaylorSeries::from_real(&v));
    }
    Err(bad())
}

/// One table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: String,
    pub weight: String,
    pub symbol: String,
    pub param: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub trunc: String,
    pub err: f64,
    pub anchor: String,
}

fn trunc_str(t: &Truncation) -> String {
    let opt = |o: Option<usize>| o.map_or("-".to_string(), |v| v.to_string());
    format!("series={};depth={};angular={}", opt(t.series), t.depth, opt(t.angular))
}

fn anchor_str(e: &NormEstimate) -> String {
    e.anchor.map_or(String::new(), |[re, im]| format!("{re};{im}"))
}

impl Row {
    fn pair(experiment: &str, weight: &str, symbol: &str, param: &str, lhs: &NormEstimate, rhs: &NormEstimate) -> Row {
        let err = if lhs.is_divergent() || rhs.is_divergent() {
            f64::INFINITY
        } else {
            // first-order propagation of both indicators into the ratio
            let r = lhs.value / rhs.value;
            r.abs() * (lhs.err / lhs.value.abs() + rhs.err / rhs.value.abs())
        };
        Row {
            experiment: experiment.into(),
            weight: weight.into(),
            symbol: symbol.into(),
            param: param.into(),
            lhs: lhs.value,
            rhs: rhs.value,
            ratio: lhs.value / rhs.value,
            trunc: format!("lhs[{}] rhs[{}]", trunc_str(&lhs.truncation), trunc_str(&rhs.truncation)),
            err,
            anchor: anchor_str(lhs),
        }
    }

    fn divergent(&self) -> bool {
        self.lhs.is_infinite() || self.rhs.is_infinite() || self.err == f64::INFINITY
    }
}

/// Spread of the finite ratios of a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    pub spread: f64,
    /// Least-squares slope of `ln ratio` against `ln(deg + 1)`.
    pub trend_slope: f64,
    /// Rows left out because a side was infinite.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub rows: Vec<Row>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Summary>,
}

impl Table {
    pub fn new(rows: Vec<Row>) -> Self {
        Table { rows, summary: None }
    }

    /// Any row with an infinite side or a divergence flag.
    pub fn divergent(&self) -> bool {
        self.rows.iter().any(Row::divergent)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Invariant(format!("csv: {e}"));
        for r in &self.rows {
            w.serialize(r).map_err(io)?;
        }
        if let Some(s) = &self.summary {
            let exp = self.rows.first().map_or("summary".to_string(), |r| format!("{}/summary", r.experiment));
            for (name, v) in [("min", s.min), ("max", s.max), ("spread", s.spread), ("trend_slope", s.trend_slope)] {
                w.serialize(Row {
                    experiment: exp.clone(),
                    weight: self.rows[0].weight.clone(),
                    symbol: name.into(),
                    param: format!("excluded={}", s.excluded),
                    lhs: v,
                    rhs: f64::NAN,
                    ratio: f64::NAN,
                    trunc: String::new(),
                    err: f64::NAN,
                    anchor: String::new(),
                })
                .map_err(io)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Invariant(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Invariant(e.to_string()))
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).unwrap_or(Value::Null)
    }

    pub fn render(&self, f: Format) -> Result<String> {
        match f {
            Format::Csv => self.to_csv(),
            Format::Json => Ok(format!("{:#}\n", self.to_json())),
        }
    }
}

fn summarize(rows: &[Row], degrees: &[usize]) -> Summary {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .zip(degrees)
        .filter(|(r, _)| !r.divergent() && r.ratio.is_finite() && r.ratio > 0.0)
        .map(|(r, d)| (((*d + 1) as f64).ln(), r.ratio.ln()))
        .collect();
    let excluded = rows.len() - pts.len();
    if pts.is_empty() {
        return Summary { min: f64::NAN, max: f64::NAN, spread: f64::NAN, trend_slope: f64::NAN, excluded };
    }
    let min = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).exp();
    let max = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).exp();
    Summary { min, max, spread: max / min, trend_slope: ls_slope(&pts), excluded }
}

/// Least-squares slope; 0 when the abscissae do not vary.
pub fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx
}

// ---- commands ----------------------------------------------------------------

/// Moments `μ_x` with an independent quadrature column.
pub fn cmd_moments(w: &RadialWeight, xs: &[f64]) -> Result<Table> {
    let rows = xs
        .iter()
        .map(|x| {
            let m = w.moment(*x)?;
            let q = w.moment_by_quadrature(*x);
            Ok(Row {
                experiment: "moments".into(),
                weight: w.label(),
                symbol: "-".into(),
                param: format!("x={x}"),
                lhs: m,
                rhs: q,
                ratio: m / q,
                trunc: "quadrature=global".into(),
                err: (m - q).abs(),
                anchor: String::new(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(Table::new(rows))
}

/// Classifier report and its table form: verdicts in the `param` column,
/// `lhs`/`rhs` of the `dhat` row are the largest and the final logarithm of
/// the tail ratio (logarithms stay finite for exponential tails).
pub fn cmd_classify(w: &RadialWeight, depth: u32) -> Result<(WeightClassReport, Table)> {
    let rep = classify(w, depth)?;
    let row = |param: String, lhs: f64, rhs: f64| Row {
        experiment: "classify".into(),
        weight: w.label(),
        symbol: "-".into(),
        param,
        lhs,
        rhs,
        ratio: f64::NAN,
        trunc: format!("depth={depth}"),
        err: f64::NAN,
        anchor: String::new(),
    };
    let ln_max = rep.dhat.profile.iter().map(|p| p.ln_ratio).fold(f64::NEG_INFINITY, f64::max);
    let ln_last = rep.dhat.profile.last().map_or(f64::NAN, |p| p.ln_ratio);
    let rows = vec![
        row(format!("dhat={}", rep.dhat.verdict.as_str()), ln_max, ln_last),
        row(format!("dcheck={}", rep.dcheck.verdict.as_str()), rep.dcheck.beta_estimate, f64::NAN),
        row(format!("d={}", rep.d.as_str()), f64::NAN, f64::NAN),
    ];
    Ok((rep, Table::new(rows)))
}

/// Coefficients of `D^μ f` and `I^μ f` (`lhs` = Re, `rhs` = Im, `ratio` =
/// multiplier), then the representation-identity residuals for `n = 1, 2`.
pub fn cmd_frac(w: &Arc<RadialWeight>, f: &TaylorSeries, symbol: &str) -> Result<Table> {
    let d = frac_derivative(f, w)?;
    let i = frac_integral(f, w)?;
    let mut rows = Vec::new();
    for (name, s, inv) in [("frac-derivative", &d, true), ("frac-integral", &i, false)] {
        for k in 0..=f.degree() {
            let m = w.moment((2 * k + 1) as f64)?;
            let c = s.coeff(k);
            rows.push(Row {
                experiment: name.into(),
                weight: w.label(),
                symbol: symbol.into(),
                param: format!("n={k}"),
                lhs: c.re,
                rhs: c.im,
                ratio: if inv { 1.0 / m } else { m },
                trunc: format!("series={}", f.degree() + 1),
                err: 0.0,
                anchor: String::new(),
            });
        }
    }
    let grid = default_z_grid();
    for n in [1, 2] {
        // a failed check comes back as an invariant error and ends the command
        let r = frac_rep_identity_check(f, w, n, &grid)?;
        rows.push(Row {
            experiment: "identity".into(),
            weight: w.label(),
            symbol: symbol.into(),
            param: format!("n={n}"),
            lhs: r.residual,
            rhs: r.scale,
            ratio: r.residual / r.scale.max(f64::MIN_POSITIVE),
            trunc: format!("grid={}", grid.len()),
            err: 0.0,
            anchor: String::new(),
        });
    }
    Ok(Table::new(rows))
}

/// Names accepted by [`cmd_norm`].
pub const NORM_NAMES: [&str; 11] = [
    "hardy2", "hardy2-lp", "hardy-ref", "tent", "bmoa", "bmoa-kernel", "bmoa-classical", "bloch", "besov",
    "besov-classical", "bergman",
];

/// A single quantity as a one-row table (`rhs = err` indicator, `ratio = err/value`).
pub fn cmd_norm(name: &str, w: &RadialWeight, f: &TaylorSeries, symbol: &str, cfg: &ExperimentConfig) -> Result<Table> {
    let e = norm_by_name(name, w, f, cfg)?;
    Ok(Table::new(vec![Row {
        experiment: format!("norm:{name}"),
        weight: w.label(),
        symbol: symbol.into(),
        param: format!("p={};alpha={}", cfg.p, cfg.alpha),
        lhs: e.value,
        rhs: e.err,
        ratio: e.err / e.value.abs().max(f64::MIN_POSITIVE),
        trunc: trunc_str(&e.truncation),
        err: if e.is_divergent() { f64::INFINITY } else { e.err },
        anchor: anchor_str(&e),
    }]))
}

fn norm_by_name(name: &str, w: &RadialWeight, f: &TaylorSeries, cfg: &ExperimentConfig) -> Result<NormEstimate> {
    let spec = QuadratureSpec::default();
    let anchors = || sn::anchor_grid(cfg.angles, cfg.depth, None);
    match name {
        "hardy2" => Ok(sn::hardy2_coeff(f)),
        "hardy2-lp" => sn::hardy2_lp(f, w, &spec),
        "hardy-ref" => sn::hardy_reference(f, cfg.p),
        "tent" => sn::tent_norm(f, w, cfg.p, 0, &spec),
        "bmoa" => sn::bmoa_mu_sup(f, w, &anchors(), &spec),
        "bmoa-kernel" => sn::bmoa_kernel_sup(f, w, 2.0, &anchors(), &spec),
        "bmoa-classical" => sn::bmoa_classical(f, &anchors(), &spec),
        "bloch" => sn::bloch_mu(f, w, &spec),
        "besov" => sn::besov_mu(f, w, cfg.p, &spec),
        "besov-classical" => sn::besov_classical(f, cfg.p, &spec),
        "bergman" => sn::bergman_norm(f, cfg.alpha, cfg.p, &spec),
        other => Err(Error::Domain(format!("unknown norm '{other}' (expected one of {})", NORM_NAMES.join(", ")))),
    }
}

/// Names accepted by [`cmd_equivalence`].
pub const EQUIVALENCE_NAMES: [&str; 5] = ["h2-lp", "tent-hp", "bmoa", "besov", "schatten"];

/// Both sides of an equivalence over the corpus, with the spread summary.
///
/// * `h2-lp`: `∫₀¹ M₂(r, D^μ f)² μ̂(r)²/(1−r) r dr` (half of `hardy2_lp`)
///   against `‖f‖²_{H²}`; for `zⁿ` the ratio is `ρ_n`.
/// * `tent-hp`: `tent_norm(f, p)` against `‖f‖^p_{H^p}`.
/// * `bmoa`: `bmoa_mu_sup` against Garnett's classical quantity.
/// * `besov`: `‖g‖^p_{B_{p,μ}}` against `‖g‖^p_{B_p}`.
/// * `schatten`: `‖V_{μ,g}‖^p_{S_p(A²_α)}` at truncation against `‖g‖^p_{B_{p,μ}}`.
pub fn cmd_equivalence(name: &str, cfg: &ExperimentConfig) -> Result<Table> {
    if !EQUIVALENCE_NAMES.contains(&name) {
        return Err(Error::Domain(format!("unknown equivalence '{name}' (expected one of {})", EQUIVALENCE_NAMES.join(", "))));
    }
    let w = RadialWeight::from_descriptor(&cfg.weight)?;
    let items = corpus(&cfg.corpus, cfg.seed);
    let spec = QuadratureSpec::default();
    let anchors = sn::anchor_grid(cfg.angles, cfg.depth, None);
    let label = w.label();
    let rows: Vec<Row> = items
        .par_iter()
        .map(|it| {
            let f = &it.series;
            let (lhs, rhs, param) = match name {
                "h2-lp" => {
                    let mut l = sn::hardy2_lp(f, &w, &spec)?;
                    l.value *= 0.5;
                    l.err *= 0.5;
                    (l, sn::hardy2_coeff(f), String::new())
                }
                "tent-hp" => {
                    (sn::tent_norm(f, &w, cfg.p, 0, &spec)?, sn::hardy_reference(f, cfg.p)?, format!("p={}", cfg.p))
                }
                "bmoa" => (
                    sn::bmoa_mu_sup(f, &w, &anchors, &spec)?,
                    sn::bmoa_classical(f, &anchors, &spec)?,
                    format!("angles={};depth={}", cfg.angles, cfg.depth),
                ),
                "besov" => {
                    (sn::besov_mu(f, &w, cfg.p, &spec)?, sn::besov_classical(f, cfg.p, &spec)?, format!("p={}", cfg.p))
                }
                _ => {
                    let s = schatten_at(&w, f, cfg.alpha, cfg.trunc, cfg.p)?;
                    (s, sn::besov_mu(f, &w, cfg.p, &spec)?, format!("p={};alpha={}", cfg.p, cfg.alpha))
                }
            };
            Ok(Row::pair(&format!("equivalence:{name}"), &label, &it.label, &param, &lhs, &rhs))
        })
        .collect::<Result<_>>()?;
    let degrees: Vec<usize> = items.iter().map(|i| i.series.degree()).collect();
    let summary = summarize(&rows, &degrees);
    Ok(Table { rows, summary: Some(summary) })
}

/// `‖V_{μ,g}‖^p_{S_p}` at truncation `n`; divergence flags carry over.
fn schatten_at(w: &RadialWeight, g: &TaylorSeries, alpha: f64, n: usize, p: f64) -> Result<NormEstimate> {
    let s = singular_values(&volterra_matrix(w, g, alpha, n)?)?;
    let e = schatten_norm(&s, p)?;
    let v = e.value.powf(p);
    let err = (e.value + e.err).powf(p) - v;
    let mut out = NormEstimate::new("schatten_p", v, err, e.truncation).with_status(e.status);
    if let Status::Divergent { .. } = e.status {
        out.err = f64::INFINITY;
    }
    Ok(out)
}

/// Spectrum of `V_{μ,g}` on `A²_α` and one Schatten row per `p`
/// (`lhs` = norm at `N`, `rhs` = norm at `N/2`; divergent rows have `err = inf`).
pub fn cmd_volterra(
    w: &RadialWeight,
    g: &TaylorSeries,
    symbol: &str,
    alpha: f64,
    n: usize,
    ps: &[f64],
) -> Result<(SingularSpectrum, Table)> {
    let full = singular_values(&volterra_matrix(w, g, alpha, n)?)?;
    let half = singular_values(&volterra_matrix(w, g, alpha, (n / 2).max(g.degree()).max(1))?)?;
    let rows = ps
        .iter()
        .map(|p| {
            let a = schatten_norm(&full, *p)?;
            let b = schatten_norm(&half, *p)?;
            Ok(Row {
                experiment: "volterra:schatten".into(),
                weight: w.label(),
                symbol: symbol.into(),
                param: format!("p={p};alpha={alpha}"),
                lhs: a.value,
                rhs: b.value,
                ratio: a.value / b.value,
                trunc: format!("N={n};half={}", half.truncation),
                err: if a.is_divergent() { f64::INFINITY } else { a.err },
                anchor: String::new(),
            })
        })
        .collect::<Result<_>>()?;
    Ok((full, Table::new(rows)))
}
