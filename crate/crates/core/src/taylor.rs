//! Finite Taylor series and the coefficient-multiplier calculus
//! `D^μ`, `I^μ`, `R^{ω,ν}`, plus partial sums of the reproducing kernel of
//! `A²_ω`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{QuadratureSpec, RadialRule};
use crate::radial_weight::RadialWeight;
use crate::summation::{sum, sum_complex};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// A polynomial `Σ_{n ≤ degree} f̂(n) zⁿ`. Trailing zero coefficients are
/// trimmed, so the zero series has degree 0 and a single zero coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct TaylorSeries {
    coeffs: Vec<Complex64>,
}

impl TryFrom<Vec<[f64; 2]>> for TaylorSeries {
    type Error = Error;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        let c: Vec<Complex64> = v.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Symbol("non-finite coefficient".into()));
        }
        Ok(TaylorSeries::new(c))
    }
}

impl From<TaylorSeries> for Vec<[f64; 2]> {
    fn from(t: TaylorSeries) -> Self {
        t.coeffs.iter().map(|z| [z.re, z.im]).collect()
    }
}

impl TaylorSeries {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&ZERO) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(ZERO);
        }
        TaylorSeries { coeffs }
    }

    pub fn zero() -> Self {
        Self::new(vec![])
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// `c zⁿ`.
    pub fn monomial(n: usize, c: Complex64) -> Self {
        let mut v = vec![ZERO; n + 1];
        v[n] = c;
        Self::new(v)
    }

    pub fn from_real(c: &[f64]) -> Self {
        Self::new(c.iter().map(|x| Complex64::new(*x, 0.0)).collect())
    }

    /// Truncated branch `log(1/(1−z)) = Σ_{n≥1} zⁿ/n` to degree `n`.
    pub fn log_branch(n: usize) -> Self {
        let mut v = vec![ZERO; n + 1];
        for (k, c) in v.iter_mut().enumerate().skip(1) {
            *c = Complex64::new(1.0 / k as f64, 0.0);
        }
        Self::new(v)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient `f̂(n)`, zero beyond the degree.
    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or(ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, c| acc * z + c)
    }

    /// `f^{(k)}`.
    pub fn derivative(&self, k: usize) -> Self {
        if k > self.degree() {
            return Self::zero();
        }
        let v = (k..=self.degree())
            .map(|n| {
                let fall: f64 = ((n - k + 1)..=n).map(|j| j as f64).product();
                self.coeffs[n] * fall
            })
            .collect();
        Self::new(v)
    }

    /// `zⁿ f(z)`.
    pub fn shift(&self, n: usize) -> Self {
        let mut v = vec![ZERO; n];
        v.extend_from_slice(&self.coeffs);
        Self::new(v)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Keep coefficients of index `≤ n`.
    pub fn truncate(&self, n: usize) -> Self {
        Self::new(self.coeffs.iter().take(n + 1).copied().collect())
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Coefficient-wise multiplication by `m(n)`.
    pub fn multiply_by<F: Fn(usize) -> f64>(&self, m: F) -> Self {
        Self::new(self.coeffs.iter().enumerate().map(|(n, c)| c * m(n)).collect())
    }
}

/// Product truncated at degree `n`: coefficient `m` is `Σ_{k≤m} f̂(k) ĝ(m−k)`.
pub fn cauchy_product(f: &TaylorSeries, g: &TaylorSeries, n: usize) -> TaylorSeries {
    let out = (0..=n)
        .map(|m| {
            let lo = m.saturating_sub(g.degree());
            let hi = m.min(f.degree());
            if lo > hi {
                return ZERO;
            }
            sum_complex((lo..=hi).map(|k| f.coeffs[k] * g.coeffs[m - k]))
        })
        .collect();
    TaylorSeries::new(out)
}

/// `D^μ f = Σ f̂(n)/μ_{2n+1} zⁿ`.
pub fn frac_derivative(f: &TaylorSeries, w: &RadialWeight) -> Result<TaylorSeries> {
    let m = w.moments_odd(f.degree())?;
    Ok(f.multiply_by(|n| 1.0 / m[n]))
}

/// `I^μ f = Σ μ_{2n+1} f̂(n) zⁿ`.
pub fn frac_integral(f: &TaylorSeries, w: &RadialWeight) -> Result<TaylorSeries> {
    let m = w.moments_odd(f.degree())?;
    Ok(f.multiply_by(|n| m[n]))
}

/// `R^{ω,ν} f = Σ (ω_{2n+1}/ν_{2n+1}) f̂(n) zⁿ`.
pub fn frac_r(f: &TaylorSeries, num: &RadialWeight, den: &RadialWeight) -> Result<TaylorSeries> {
    let deg = f.degree();
    let mut mult = Vec::with_capacity(deg + 1);
    for n in 0..=deg {
        let x = (2 * n + 1) as f64;
        mult.push((num.log_moment(x)? - den.log_moment(x)?).exp());
    }
    Ok(f.multiply_by(|n| mult[n]))
}

/// The reproducing kernel `B^ω_z` of `A²_ω` truncated to `N` terms.
#[derive(Debug, Clone)]
pub struct KernelSlice {
    pub weight: Arc<RadialWeight>,
    pub anchor: Complex64,
    pub n: usize,
}

/// A kernel partial sum with its geometric tail bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: Complex64,
    pub tail_bound: f64,
    pub terms: usize,
}

impl KernelSlice {
    pub fn new(weight: Arc<RadialWeight>, anchor: Complex64, n: usize) -> Result<Self> {
        if anchor.norm() >= 1.0 {
            return Err(Error::Domain(format!("kernel anchor |z| = {} ≥ 1", anchor.norm())));
        }
        Ok(KernelSlice { weight, anchor, n })
    }

    /// `B^ω_z` as a series in `ζ`: coefficient `z̄ⁿ/(2ω_{2n+1})`, `n < N`.
    pub fn series(&self) -> Result<TaylorSeries> {
        if self.n == 0 {
            return Ok(TaylorSeries::zero());
        }
        let m = self.weight.moments_odd(self.n - 1)?;
        let zc = self.anchor.conj();
        let mut p = Complex64::new(1.0, 0.0);
        let mut v = Vec::with_capacity(self.n);
        for mk in &m {
            v.push(p / (2.0 * mk));
            p *= zc;
        }
        Ok(TaylorSeries::new(v))
    }
}

/// Partial sum `Σ_{n<N} (z̄ζ)ⁿ/(2ω_{2n+1})`; fails when the tail bound exceeds `tol`.
pub fn kernel_eval(k: &KernelSlice, zeta: Complex64, tol: f64) -> Result<KernelValue> {
    let q = (k.anchor.conj() * zeta).norm();
    if q >= 1.0 {
        return Err(Error::Domain(format!("|z̄ζ| = {q} ≥ 1")));
    }
    if k.n == 0 {
        return Ok(KernelValue { value: ZERO, tail_bound: f64::INFINITY, terms: 0 });
    }
    let m = k.weight.moments_odd(k.n)?;
    let x = k.anchor.conj() * zeta;
    let mut p = Complex64::new(1.0, 0.0);
    let mut terms = Vec::with_capacity(k.n);
    for mk in m.iter().take(k.n) {
        terms.push(p / (2.0 * mk));
        p *= x;
    }
    let value = sum_complex(terms.iter().copied());
    // Next term and the ratio of consecutive moment quotients bound the rest.
    let next = p.norm() / (2.0 * m[k.n]);
    let ratio = q * m[k.n - 1] / m[k.n];
    let tail_bound = if next == 0.0 {
        0.0
    } else if ratio < 1.0 {
        next / (1.0 - ratio)
    } else {
        f64::INFINITY
    };
    if tail_bound > tol {
        return Err(Error::Truncation { bound: tail_bound, tol });
    }
    Ok(KernelValue { value, tail_bound, terms: k.n })
}

/// `⟨f, g⟩_{A²_ω} = Σ f̂(n) conj(ĝ(n)) · 2ω_{2n+1}` (orthogonality of monomials).
pub fn bergman_inner_moments(f: &TaylorSeries, g: &TaylorSeries, w: &RadialWeight) -> Result<Complex64> {
    let n = f.degree().min(g.degree());
    let m = w.moments_odd(n)?;
    Ok(sum_complex((0..=n).map(|k| f.coeff(k) * g.coeff(k).conj() * (2.0 * m[k]))))
}

/// `∫_𝔻 f conj(g) ω dA` by a polar product rule, independent of moments.
pub fn bergman_inner_quadrature(
    f: &TaylorSeries,
    g: &TaylorSeries,
    w: &RadialWeight,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    let rule = RadialRule::new(spec);
    // f conj(g) has frequencies in [−deg g, deg f]; more nodes than that is exact.
    let m = f.degree().max(g.degree()) + 1;
    let mut rings = Vec::with_capacity(rule.len());
    for (r, wt) in rule.nodes.iter().zip(&rule.weights) {
        let wr = w.evaluate(*r)?;
        let ring = sum_complex((0..m).map(|k| {
            let z = Complex64::from_polar(*r, 2.0 * PI * k as f64 / m as f64);
            f.eval(z) * g.eval(z).conj()
        }));
        rings.push(ring * (2.0 * r * wt * wr / m as f64));
    }
    Ok(sum_complex(rings))
}

/// Residual report of the representation identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub residual: f64,
    /// Largest `|D^μ f|` on the grid, for scale.
    pub scale: f64,
    pub n: u32,
}

/// Default absolute tolerance for [`frac_rep_identity_check`].
pub const IDENTITY_TOL: f64 = 1e-8;

/// Points `r e^{iθ}` for `r ∈ {0, .25, .5, .75, .95}` and eight angles.
pub fn default_z_grid() -> Vec<Complex64> {
    let mut out = vec![ZERO];
    for &r in &[0.25, 0.5, 0.75, 0.95] {
        for k in 0..8 {
            out.push(Complex64::from_polar(r, 2.0 * PI * (k as f64 + 0.5) / 8.0));
        }
    }
    out
}

/// Compare `D^μ f` (closed multipliers) with
/// `Σ_{j<n} f̂(j)/μ_{2j+1} z^j + 4ⁿ zⁿ R^{Wⁿ, V_{μ₊,n}}(f^{(n)})` (iterated-weight
/// moments) over `grid`. A residual above [`IDENTITY_TOL`] is an error.
pub fn frac_rep_identity_check(
    f: &TaylorSeries,
    w: &Arc<RadialWeight>,
    n: u32,
    grid: &[Complex64],
) -> Result<IdentityResidual> {
    if !(1..=2).contains(&n) {
        return Err(Error::Domain(format!("identity order n = {n} not in {{1, 2}}")));
    }
    let lhs = frac_derivative(f, w)?;
    let wn = RadialWeight::w_n(n)?;
    let vn = RadialWeight::iterate_v(&RadialWeight::mu_plus(w), n)?;
    let head = frac_derivative(&f.truncate(n as usize - 1), w)?;
    let h = f.derivative(n as usize);
    let tail = frac_r(&h, &wn, &vn)?.shift(n as usize).scale(Complex64::new(4f64.powi(n as i32), 0.0));
    let rhs = head.add(&tail);
    let mut residual: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for z in grid {
        let a = lhs.eval(*z);
        residual = residual.max((a - rhs.eval(*z)).norm());
        scale = scale.max(a.norm());
    }
    if residual > IDENTITY_TOL || !residual.is_finite() {
        return Err(Error::Invariant(format!("representation identity residual {residual:e} (n = {n})")));
    }
    Ok(IdentityResidual { residual, scale, n })
}

/// Sum of `|f̂(n)|²`, used by several norms.
pub fn coeff_energy(f: &TaylorSeries) -> f64 {
    sum(f.coeffs.iter().map(|c| c.norm_sqr()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn trimming_and_degree() {
        let t = TaylorSeries::new(vec![c(1.0), c(0.0), c(0.0)]);
        assert_eq!(t.degree(), 0);
        assert_eq!(TaylorSeries::zero().degree(), 0);
        assert!(TaylorSeries::zero().is_zero());
    }

    #[test]
    fn square_of_one_plus_z() {
        let f = TaylorSeries::from_real(&[1.0, 1.0]);
        assert_eq!(cauchy_product(&f, &f, 4), TaylorSeries::from_real(&[1.0, 2.0, 1.0]));
        assert!(cauchy_product(&f, &TaylorSeries::zero(), 4).is_zero());
    }

    #[test]
    fn derivative_of_cube() {
        let f = TaylorSeries::monomial(3, c(2.0));
        assert_eq!(f.derivative(2), TaylorSeries::monomial(1, c(12.0)));
        assert!(f.derivative(4).is_zero());
    }

    #[test]
    fn json_pairs() {
        let f = TaylorSeries::new(vec![Complex64::new(1.0, -2.0), c(0.5)]);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, "[[1.0,-2.0],[0.5,0.0]]");
        let back: TaylorSeries = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }
}
