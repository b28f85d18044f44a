//! Matrix truncations of `V_{μ,g}(f) = I^μ(f · D^μ g)` on `A²_α`, the
//! Toeplitz comparison operator, singular values and Schatten norms.
//!
//! Matrices act on the orthonormal basis `e_n = zⁿ/c_n` with
//! `c_n² = ‖zⁿ‖²_{A²_α} = Γ(α+2)Γ(n+1)/Γ(n+α+2)`; `α = −1` is `H²` with
//! `c_n = 1`. The measure `dA_α` in the Toeplitz entries is
//! `(1−|z|)^α dA`, which at `α = −1` is the Littlewood–Paley density used by
//! [`crate::space_norms::hardy2_lp`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disc_geometry::Lattice;
use crate::error::{Error, Result};
use crate::estimate::{NormEstimate, Status, Truncation};
use crate::quadrature::{integrate_disc, tail_behaviour, QuadratureSpec, Region, TailBehaviour};
use crate::radial_weight::RadialWeight;
use crate::space_norms::{bergman_monomial_norm2, LogProfile};
use crate::summation::{sum, Neumaier};
use crate::taylor::{cauchy_product, frac_derivative, frac_integral, TaylorSeries};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// SVD sweeps allowed before giving up.
const SVD_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixKind {
    Volterra,
    Toeplitz,
}

/// An `N×N` truncation in the basis `e_n = zⁿ/c_n`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub kind: MatrixKind,
    pub entries: DMatrix<Complex64>,
    pub alpha: f64,
    /// `c_n = ‖zⁿ‖_{A²_α}`.
    pub norming: Vec<f64>,
    pub weight: String,
    pub symbol: TaylorSeries,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `M[m][k]`.
    pub fn get(&self, m: usize, k: usize) -> Complex64 {
        self.entries[(m, k)]
    }

    /// JSON dump, entries as `[re, im]` rows.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim())
            .map(|m| (0..self.dim()).map(|k| [self.entries[(m, k)].re, self.entries[(m, k)].im]).collect())
            .collect();
        serde_json::json!({
            "kind": self.kind,
            "dimension": self.dim(),
            "alpha": self.alpha,
            "weight": self.weight,
            "symbol": self.symbol,
            "norming": self.norming,
            "entries": rows,
        })
    }
}

/// `c_0, …, c_{N−1}`.
pub fn norming_constants(alpha: f64, n: usize) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    Ok((0..n).map(|k| if alpha == -1.0 { 1.0 } else { bergman_monomial_norm2(k, alpha).sqrt() }).collect())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= -1.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("α = {alpha} must be ≥ −1")));
    }
    Ok(())
}

/// `M[m][k] = μ_{2m+1} ĝ(m−k)/μ_{2(m−k)+1} · c_m/c_k` for `m ≥ k`, zero above the diagonal.
pub fn volterra_matrix(w: &RadialWeight, g: &TaylorSeries, alpha: f64, n: usize) -> Result<OperatorMatrix> {
    if g.degree() > n {
        return Err(Error::Dimension { expected: n, got: g.degree() });
    }
    let c = norming_constants(alpha, n)?;
    // log moments keep the ratios finite for fast-decaying weights
    let lm: Vec<f64> = (0..n).map(|j| w.log_moment((2 * j + 1) as f64)).collect::<Result<_>>()?;
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|m| {
            (0..n)
                .map(|k| {
                    if k > m {
                        return ZERO;
                    }
                    let gj = g.coeff(m - k);
                    if gj == ZERO {
                        return ZERO;
                    }
                    gj * ((lm[m] - lm[m - k]).exp() * c[m] / c[k])
                })
                .collect()
        })
        .collect();
    let entries = DMatrix::from_fn(n, n, |m, k| rows[m][k]);
    if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Invariant("non-finite Volterra matrix entry".into()));
    }
    Ok(OperatorMatrix { kind: MatrixKind::Volterra, entries, alpha, norming: c, weight: w.label(), symbol: g.clone() })
}

/// The coefficient image of `f` (monomial basis in and out).
pub fn apply(m: &OperatorMatrix, f: &TaylorSeries) -> Result<TaylorSeries> {
    let n = m.dim();
    if f.degree() >= n && !f.is_zero() {
        return Err(Error::Dimension { expected: n, got: f.degree() + 1 });
    }
    let x: Vec<Complex64> = (0..n).map(|k| f.coeff(k) * m.norming[k]).collect();
    let y: Vec<Complex64> = (0..n)
        .map(|i| {
            let mut acc = ZERO;
            for (k, xk) in x.iter().enumerate() {
                acc += m.entries[(i, k)] * xk;
            }
            acc / m.norming[i]
        })
        .collect();
    Ok(TaylorSeries::new(y))
}

/// `I^μ(f · D^μ g)` through degree `n−1`, by composition.
pub fn apply_compositional(w: &RadialWeight, g: &TaylorSeries, f: &TaylorSeries, n: usize) -> Result<TaylorSeries> {
    let d = frac_derivative(g, w)?;
    frac_integral(&cauchy_product(f, &d, n.saturating_sub(1)), w)
}

/// `T[m][k] = ∫ e_k ē_m |D^μ g|² μ̂² dA_α`.
///
/// With `D^μ g = Σ b_j z^j` the angular integral collapses to
/// `T[m][k] = (c_k c_m)^{−1} Σ_j b_j conj(b_{j+k−m}) · 2 M(2(j+k)+1)`,
/// `M(x) = ∫_0^1 r^x μ̂(r)² (1−r)^α dr`.
pub fn toeplitz_matrix(
    w: &RadialWeight,
    g: &TaylorSeries,
    alpha: f64,
    n: usize,
    spec: &QuadratureSpec,
) -> Result<OperatorMatrix> {
    let c = norming_constants(alpha, n)?;
    let b = frac_derivative(g, w)?;
    let mut entries = DMatrix::from_element(n, n, ZERO);
    if !b.is_zero() {
        let prof = LogProfile::build(|_, u| Ok(2.0 * w.log_tail_u(u)? + alpha * u.ln()), spec, spec.order)?;
        if let Some(panel) = prof.divergent {
            return Err(Error::Domain(format!(
                "μ̂²(1−r)^α is not integrable (growth from panel {panel})"
            )));
        }
        let d = b.degree();
        let moments: Vec<f64> = (0..n + d).map(|s| 2.0 * prof.moment((2 * s + 1) as f64)).collect();
        let bc = b.coeffs();
        let rows: Vec<Vec<(usize, Complex64)>> = (0..n)
            .into_par_iter()
            .map(|m| {
                // lower triangle and diagonal; the upper half is the conjugate
                (0..=m)
                    .filter_map(|k| {
                        let shift = m - k; // l = j − shift
                        if shift > d {
                            return None;
                        }
                        let mut re = Neumaier::new();
                        let mut im = Neumaier::new();
                        for j in shift..=d {
                            let t = bc[j] * bc[j - shift].conj() * moments[j + k];
                            re.add(t.re);
                            im.add(t.im);
                        }
                        Some((k, Complex64::new(re.value(), im.value()) / (c[k] * c[m])))
                    })
                    .collect()
            })
            .collect();
        for (m, row) in rows.into_iter().enumerate() {
            for (k, v) in row {
                if m == k {
                    entries[(m, m)] = Complex64::new(v.re, 0.0);
                } else {
                    entries[(m, k)] = v;
                    entries[(k, m)] = v.conj();
                }
            }
        }
    }
    Ok(OperatorMatrix { kind: MatrixKind::Toeplitz, entries, alpha, norming: c, weight: w.label(), symbol: g.clone() })
}

/// Singular values `λ₁ ≥ … ≥ λ_N ≥ 0` of an `N×N` truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSpectrum {
    pub values: Vec<f64>,
    pub truncation: usize,
}

impl SingularSpectrum {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,lambda\n");
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{},{:e}\n", i + 1, v));
        }
        s
    }
}

pub fn singular_values(m: &OperatorMatrix) -> Result<SingularSpectrum> {
    let n = m.dim();
    if m.entries.iter().all(|z| *z == ZERO) {
        return Ok(SingularSpectrum { values: vec![0.0; n], truncation: n });
    }
    let svd = m.entries.clone().try_svd(false, false, f64::EPSILON, SVD_MAX_ITER).ok_or(Error::Svd)?;
    let mut values: Vec<f64> = svd.singular_values.iter().map(|v| v.max(0.0)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(SingularSpectrum { values, truncation: n })
}

/// `‖T‖_{S_p} = (Σ λ_n^p)^{1/p}` at truncation.
///
/// The convergence monitor looks at the dyadic blocks `[2^k, 2^{k+1})` of
/// `λ_n^p`: geometric decay gives an error bound from the extrapolated rest,
/// blocks that stop shrinking mark the estimate divergent. The value is
/// always the truncated sum.
pub fn schatten_norm(s: &SingularSpectrum, p: f64) -> Result<NormEstimate> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Domain(format!("Schatten exponent p = {p} must be positive")));
    }
    let t = Truncation { series: Some(s.truncation), depth: 0, angular: None };
    let powered: Vec<f64> = s.values.iter().map(|v| v.powf(p)).collect();
    let total = sum(powered.iter().copied());
    if total == 0.0 {
        return Ok(NormEstimate::zero("schatten_norm", t));
    }
    let mut blocks = Vec::new();
    let mut lo = 0;
    // only complete blocks enter the test
    while 2 * lo < powered.len() {
        blocks.push(sum(powered[lo..2 * lo + 1].iter().copied()));
        lo = 2 * lo + 1;
    }
    let full = &blocks[..];
    let value = total.powf(1.0 / p);
    match tail_behaviour(full, 4) {
        TailBehaviour::Growing { panel } => {
            Ok(NormEstimate::new("schatten_norm", value, f64::INFINITY, t).with_status(Status::Divergent { panel }))
        }
        TailBehaviour::Decaying { tail, .. } => {
            let err = (total + tail).powf(1.0 / p) - value;
            Ok(NormEstimate::new("schatten_norm", value, err, t))
        }
    }
}

/// `Σ_λ ((1−|z_λ|²)^{−2} ∫_{D(z_λ,r)} |D^μ g|² μ̂² dA)^{p/2}` over the lattice.
pub fn lattice_schatten_sum(
    w: &RadialWeight,
    g: &TaylorSeries,
    p: f64,
    lattice: &Lattice,
    spec: &QuadratureSpec,
) -> Result<NormEstimate> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Domain(format!("exponent p = {p} must be positive")));
    }
    let b = frac_derivative(g, w)?;
    let local = QuadratureSpec { order: 24, angular: (4 * (b.degree() + 1)).max(64), ..*spec };
    let t = Truncation { series: Some(b.degree() + 1), depth: spec.depth, angular: Some(local.angular) };
    if b.is_zero() {
        return Ok(NormEstimate::zero("lattice_schatten_sum", t));
    }
    let terms: Vec<Result<(f64, f64)>> = lattice
        .points
        .par_iter()
        .map(|z| {
            let f = |x: Complex64| -> f64 {
                let tail = w.tail(x.norm()).unwrap_or(f64::NAN);
                b.eval(x).norm_sqr() * tail * tail
            };
            let e = integrate_disc(f, Region::HyperbolicDisc { center: *z, radius: lattice.r }, &local);
            if !e.value.is_finite() {
                return Err(Error::Quadrature { achieved: e.err });
            }
            let s = (1.0 - z.norm_sqr()).powi(-2);
            let v = (s * e.value).powf(0.5 * p);
            let v_lo = (s * (e.value - e.err).max(0.0)).powf(0.5 * p);
            Ok((v, (v - v_lo).abs()))
        })
        .collect();
    let mut val = Neumaier::new();
    let mut err = Neumaier::new();
    for r in terms {
        let (v, e) = r?;
        val.add(v);
        err.add(e);
    }
    Ok(NormEstimate::new("lattice_schatten_sum", val.value(), err.value(), t))
}

/// `⟨T f, f⟩ / ‖V f‖²_{A²_α}` over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayleighProfile {
    pub ratios: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub truncation: usize,
}

impl RayleighProfile {
    /// `max/min`, 1 for an empty profile.
    pub fn spread(&self) -> f64 {
        if self.ratios.is_empty() {
            1.0
        } else {
            self.max / self.min
        }
    }
}

pub fn rayleigh_comparability(
    w: &RadialWeight,
    g: &TaylorSeries,
    alpha: f64,
    corpus: &[TaylorSeries],
    spec: &QuadratureSpec,
) -> Result<RayleighProfile> {
    let n = corpus.iter().map(|f| f.degree()).max().unwrap_or(0) + g.degree() + 1;
    if g.is_zero() || corpus.is_empty() {
        return Ok(RayleighProfile { ratios: vec![], min: 0.0, max: 0.0, truncation: n });
    }
    let v = volterra_matrix(w, g, alpha, n)?;
    let t = toeplitz_matrix(w, g, alpha, n, spec)?;
    let c = &v.norming;
    let ratios: Vec<f64> = corpus
        .iter()
        .map(|f| {
            let x: Vec<Complex64> = (0..n).map(|k| f.coeff(k) * c[k]).collect();
            let mut quad = ZERO;
            for m in 0..n {
                for k in 0..n {
                    quad += x[m].conj() * t.entries[(m, k)] * x[k];
                }
            }
            let vf = apply(&v, f)?;
            let norm2 = sum(vf.coeffs().iter().enumerate().map(|(m, a)| a.norm_sqr() * c[m] * c[m]));
            Ok(quad.re / norm2)
        })
        .collect::<Result<_>>()?;
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(0.0, f64::max);
    Ok(RayleighProfile { ratios, min, max, truncation: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_monitor_on_harmonic_tail() {
        let s = SingularSpectrum { values: (1..=512).map(|m| 2.0 / (m as f64 + 1.0)).collect(), truncation: 512 };
        assert!(schatten_norm(&s, 1.0).unwrap().is_divergent());
        let e = schatten_norm(&s, 2.0).unwrap();
        assert_eq!(e.status, Status::Converged);
        assert!(e.err > 0.0 && e.err < 0.01);
    }
}
