//! Norms, seminorms and Carleson quantities on the disc.
//!
//! Every routine returns the integral as written (a `p`-th power where the
//! norm has one): `hardy2_coeff(f)` is `Σ|f̂(n)|² = ‖f‖²_{H²}`, `tent_norm` with
//! `p = 2` is directly comparable to `hardy2_lp`, and so on.
//!
//! Angular integrals over cones `Γ(ξ)` and Carleson squares `S(a)` are done
//! per ring through the Fourier coefficients of `θ ↦ |h(re^{iθ})|²`: the
//! integral over an arc of half-width `δ` centred at `φ` is
//! `Σ_k c_k e^{ikφ} · 2 sin(kδ)/k`, exact for polynomials however narrow the
//! arc gets near the boundary.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::disc_geometry::{CarlesonSquare, Lattice};
use crate::error::{Error, Result};
use crate::estimate::{NormEstimate, Status, Truncation};
use crate::quadrature::{
    breakpoints, disc_rule, integrate_radial, tail_behaviour, QuadratureSpec, RadialRule, Region,
    TailBehaviour,
};
use crate::radial_weight::RadialWeight;
use crate::special::{ln_gamma, ln_gamma_ratio};
use crate::summation::{log_sum_exp, sum, Neumaier};
use crate::taylor::{coeff_energy, frac_derivative, TaylorSeries};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Radius at which the `H^p` reference value is read off.
pub const HARDY_REFERENCE_RADIUS: f64 = 1.0 - 1.0 / (1u64 << 30) as f64;
/// Deepest ray anchor accepted by the kernel path.
pub const KERNEL_MAX_DEPTH: u32 = 12;

fn trunc(series: usize, spec: &QuadratureSpec, angular: Option<usize>) -> Truncation {
    Truncation { series: Some(series), depth: spec.depth, angular }
}

/// Rounding allowance for a sum of positive terms.
fn rounding(total: f64) -> f64 {
    64.0 * f64::EPSILON * total.abs()
}

// ---- radial profiles ---------------------------------------------------------

/// `ln(w_i h(r_i))` on a radial rule, with the extrapolated mass beyond the
/// last panel. `moment(x)` is `∫_0^1 r^x h(r) dr`.
pub(crate) struct LogProfile {
    ln_w: Vec<f64>,
    ln_r: Vec<f64>,
    pub(crate) tail: f64,
    pub(crate) divergent: Option<usize>,
}

/// Global breakpoints without the final `[1 − 2^{−depth}, 1)` panel, which the
/// geometric tail extrapolation replaces.
fn finite_breaks(spec: &QuadratureSpec) -> Vec<f64> {
    let mut b = breakpoints(spec.depth, spec.zero_depth);
    b.pop();
    b
}

impl LogProfile {
    pub(crate) fn build<F: Fn(f64, f64) -> Result<f64>>(ln_h: F, spec: &QuadratureSpec, order: usize) -> Result<Self> {
        let rule = RadialRule::from_breaks(&finite_breaks(spec), order, spec.depth);
        let mut ln_w = Vec::with_capacity(rule.len());
        let mut ln_r = Vec::with_capacity(rule.len());
        for (r, wt) in rule.nodes.iter().zip(&rule.weights) {
            ln_w.push(wt.ln() + ln_h(*r, 1.0 - r)?);
            ln_r.push(r.ln());
        }
        let parts: Vec<f64> = rule
            .panel_start
            .windows(2)
            .map(|s| sum(ln_w[s[0]..s[1]].iter().map(|l| l.exp())))
            .collect();
        let geo = &parts[spec.zero_depth.saturating_sub(1) as usize..];
        let (tail, divergent) = match tail_behaviour(geo, 6) {
            TailBehaviour::Decaying { tail, .. } => (tail, None),
            TailBehaviour::Growing { panel } => (f64::INFINITY, Some(panel)),
        };
        Ok(LogProfile { ln_w, ln_r, tail, divergent })
    }

    pub(crate) fn moment(&self, x: f64) -> f64 {
        self.ln_moment(x).exp()
    }

    pub(crate) fn ln_moment(&self, x: f64) -> f64 {
        let mut ts: Vec<f64> = self.ln_w.iter().zip(&self.ln_r).map(|(w, r)| w + x * r).collect();
        if self.tail > 0.0 {
            ts.push(self.tail.ln());
        }
        log_sum_exp(&ts)
    }
}

/// `ln(μ̂(r)²/(1−r))`
fn ln_hardy_density(w: &RadialWeight) -> impl Fn(f64, f64) -> Result<f64> + '_ {
    move |_, u| Ok(2.0 * w.log_tail_u(u)? - u.ln())
}

/// Shared series evaluation `Σ |b_n|² · 2 ∫ r^{2n+1} h(r) dr` at two orders.
fn radial_series(
    tag: &str,
    b: &TaylorSeries,
    ln_h: &dyn Fn(f64, f64) -> Result<f64>,
    spec: &QuadratureSpec,
) -> Result<NormEstimate> {
    let t = trunc(b.degree() + 1, spec, None);
    if b.is_zero() {
        return Ok(NormEstimate::zero(tag, t));
    }
    let hi = LogProfile::build(ln_h, spec, spec.order)?;
    if let Some(panel) = hi.divergent {
        return Ok(NormEstimate::divergent(tag, panel, t));
    }
    let lo = LogProfile::build(ln_h, spec, (spec.order / 2).max(4))?;
    let series = |p: &LogProfile| {
        let mut acc = Neumaier::new();
        for (n, c) in b.coeffs().iter().enumerate() {
            if *c != ZERO {
                acc.add(c.norm_sqr() * 2.0 * p.moment((2 * n + 1) as f64));
            }
        }
        acc.value()
    };
    let (v, v_lo) = (series(&hi), series(&lo));
    let err = (v - v_lo).abs() + hi.tail.abs() * 2.0 * coeff_energy(b) * 1e-3 + rounding(v);
    Ok(NormEstimate::new(tag, v, err, t).check_floor(spec.floor))
}

// ---- Hardy-space quantities --------------------------------------------------

/// `‖f‖²_{H²} = Σ |f̂(n)|²`.
pub fn hardy2_coeff(f: &TaylorSeries) -> NormEstimate {
    let v = coeff_energy(f);
    NormEstimate::new(
        "hardy2_coeff",
        v,
        rounding(v),
        Truncation { series: Some(f.degree() + 1), depth: 0, angular: None },
    )
}

/// `∫_𝔻 |D^μ f|² μ̂²/(1−|z|) dA`, collapsed by orthogonality to
/// `Σ |f̂(n)|²/μ²_{2n+1} · 2∫₀¹ r^{2n+1} μ̂(r)²/(1−r) dr`.
pub fn hardy2_lp(f: &TaylorSeries, w: &RadialWeight, spec: &QuadratureSpec) -> Result<NormEstimate> {
    let b = frac_derivative(f, w)?;
    radial_series("hardy2_lp", &b, &ln_hardy_density(w), spec)
}

/// `ρ_n = ∫₀¹ r^{2n+1} μ̂(r)²/(1−r) dr / μ²_{2n+1}`, half the ratio
/// `hardy2_lp/hardy2_coeff` for `zⁿ` (the other half is the polar `2r dr`).
pub fn hardy2_monomial_ratios(w: &RadialWeight, ns: &[usize], spec: &QuadratureSpec) -> Result<Vec<f64>> {
    let p = LogProfile::build(ln_hardy_density(w), spec, spec.order)?;
    if p.divergent.is_some() {
        return Ok(vec![f64::INFINITY; ns.len()]);
    }
    ns.iter()
        .map(|&n| {
            let x = (2 * n + 1) as f64;
            Ok((p.ln_moment(x) - 2.0 * w.log_moment(x)?).exp())
        })
        .collect()
}

/// `M_p(r, f)^p = (1/2π)∫|f(re^{iθ})|^p dθ` at `r = 1 − 2^{−30}`: the
/// reference `‖f‖^p_{H^p}` for polynomials.
pub fn hardy_reference(f: &TaylorSeries, p: f64) -> Result<NormEstimate> {
    check_p(p)?;
    let m = (8 * (f.degree() + 1)).max(1024).next_power_of_two();
    let t = Truncation { series: Some(f.degree() + 1), depth: 30, angular: Some(m) };
    let mut ev = RingEvaluator::new(m);
    let mean = |ev: &mut RingEvaluator| sum(ev.values(f.coeffs(), HARDY_REFERENCE_RADIUS).iter().map(|z| z.norm().powf(p))) / ev.m as f64;
    let v = mean(&mut ev);
    let mut coarse = RingEvaluator::new(m / 2);
    let err = (v - mean(&mut coarse)).abs() + rounding(v);
    Ok(NormEstimate::new("hardy_reference", v, err, t))
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Domain(format!("exponent p = {p} must be positive")));
    }
    Ok(())
}

// ---- ring machinery ----------------------------------------------------------

/// Values of a polynomial at `m` equispaced points of a circle, via an inverse FFT.
struct RingEvaluator {
    m: usize,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
}

impl RingEvaluator {
    fn new(m: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_inverse(m);
        RingEvaluator { m, fft, buf: vec![ZERO; m] }
    }

    fn values(&mut self, coeffs: &[Complex64], r: f64) -> &[Complex64] {
        self.buf.iter_mut().for_each(|z| *z = ZERO);
        let mut rn = 1.0;
        for (n, c) in coeffs.iter().enumerate() {
            // e^{inθ_j} only depends on n mod m
            self.buf[n % self.m] += c * rn;
            rn *= r;
        }
        self.fft.process(&mut self.buf);
        &self.buf
    }
}

/// Fourier coefficients `c_k`, `k = 0..=deg`, of `θ ↦ |Σ b_n rⁿ e^{inθ}|²`.
fn autocorrelation(b: &[Complex64], r: f64) -> Vec<Complex64> {
    let mut rn = 1.0;
    let beta: Vec<Complex64> = b
        .iter()
        .map(|c| {
            let v = c * rn;
            rn *= r;
            v
        })
        .collect();
    let d = beta.len();
    (0..d)
        .map(|k| {
            let mut acc = ZERO;
            for m in 0..d - k {
                acc += beta[m + k] * beta[m].conj();
            }
            acc
        })
        .collect()
}

/// `2 sin(kδ)/k`, the arc integral of `e^{ikθ}` over `[−δ, δ]`.
fn arc_factor(k: usize, delta: f64) -> f64 {
    if k == 0 {
        2.0 * delta
    } else {
        2.0 * (k as f64 * delta).sin() / k as f64
    }
}

/// `∫_{φ−δ}^{φ+δ} Σ_{|k|≤d} c_k e^{ikθ} dθ` with `c_{−k} = conj(c_k)`.
fn arc_integral(c: &[Complex64], phi: f64, delta: f64) -> f64 {
    let mut acc = c[0].re * arc_factor(0, delta);
    for (k, ck) in c.iter().enumerate().skip(1) {
        acc += 2.0 * (ck * Complex64::from_polar(1.0, k as f64 * phi)).re * arc_factor(k, delta);
    }
    acc
}

/// Radial densities of the ring measures.
#[derive(Clone, Copy)]
enum Density<'a> {
    /// `μ̂(r)²/(1−r)`
    Hardy(&'a RadialWeight),
    /// `1 − r²`, Garnett's classical BMOA measure
    Garnett,
}

impl Density<'_> {
    fn ln(&self, u: f64) -> Result<f64> {
        match self {
            Density::Hardy(w) => Ok(2.0 * w.log_tail_u(u)? - u.ln()),
            Density::Garnett => Ok((u * (2.0 - u)).ln()),
        }
    }
}

/// Rings for measures `|D^μ g|² μ̂²/(1−|z|) dA`: radius, `w_i r_i/π · μ̂²/(1−r)`,
/// and the autocorrelation of `D^μ g` on the ring.
struct Rings {
    r: Vec<f64>,
    mass: Vec<f64>,
    c: Vec<Vec<Complex64>>,
    panel_start: Vec<usize>,
    breaks: Vec<f64>,
}

fn ring_data(b: &TaylorSeries, dens: Density, breaks: &[f64], order: usize, depth: u32) -> Result<Rings> {
    let rule = RadialRule::from_breaks(breaks, order, depth);
    let mass: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(r, wt)| {
            let u = 1.0 - r;
            Ok(wt * r / PI * dens.ln(u)?.exp())
        })
        .collect::<Result<_>>()?;
    let c = rule.nodes.par_iter().map(|r| autocorrelation(b.coeffs(), *r)).collect();
    Ok(Rings { r: rule.nodes, mass, c, panel_start: rule.panel_start, breaks: rule.breaks })
}

impl Rings {
    fn global(b: &TaylorSeries, dens: Density, spec: &QuadratureSpec, order: usize) -> Result<Self> {
        ring_data(b, dens, &finite_breaks(spec), order, spec.depth)
    }

    /// `ν(S(a)) = ∫_{S(a)} |D^μ g|² μ̂²/(1−|z|) dA`.
    fn square(&self, b: &TaylorSeries, dens: Density, a: Complex64, order: usize) -> Result<f64> {
        let (ra, phi) = a.to_polar();
        if ra == 0.0 {
            let mut acc = Neumaier::new();
            for (m, c) in self.mass.iter().zip(&self.c) {
                acc.add(m * 2.0 * PI * c[0].re);
            }
            return Ok(acc.value());
        }
        let delta = 0.5 * (1.0 - ra);
        // first breakpoint at or above |a|
        let p = self.breaks.partition_point(|x| *x < ra);
        if p >= self.breaks.len() - 1 {
            return Err(Error::Domain(format!("anchor |a| = {ra} beyond the radial grid")));
        }
        let mut acc = Neumaier::new();
        if self.breaks[p] > ra {
            let part = ring_data(b, dens, &[ra, self.breaks[p]], order, 0)?;
            for (m, c) in part.mass.iter().zip(&part.c) {
                acc.add(m * arc_integral(c, phi, delta));
            }
        }
        for i in self.panel_start[p]..self.r.len() {
            acc.add(self.mass[i] * arc_integral(&self.c[i], phi, delta));
        }
        Ok(acc.value())
    }
}

// ---- tent spaces -------------------------------------------------------------

/// `∫_𝕋 [∫_{Γ(ξ)} |D^μ f|² (μ̂/(1−|z|))² dA]^{p/2} |dξ|/2` on `n_xi`
/// equispaced boundary points (0 picks `max(256, 4(deg+1))`). The factor
/// `1/2` on `|dξ|` makes `p = 2` coincide with [`hardy2_lp`], since each `z`
/// lies in the cones of an arc of length `2(1−|z|)`.
pub fn tent_norm(f: &TaylorSeries, w: &RadialWeight, p: f64, n_xi: usize, spec: &QuadratureSpec) -> Result<NormEstimate> {
    check_p(p)?;
    let b = frac_derivative(f, w)?;
    let d = b.degree();
    let n = if n_xi == 0 { (4 * (d + 1)).max(256) } else { n_xi };
    if n <= d {
        return Err(Error::Domain(format!("ξ-grid of {n} points cannot resolve degree {d}")));
    }
    let t = trunc(d + 1, spec, Some(n));
    if b.is_zero() {
        return Ok(NormEstimate::zero("tent_norm", t));
    }
    let check = LogProfile::build(ln_hardy_density(w), spec, 8)?;
    if let Some(panel) = check.divergent {
        return Ok(NormEstimate::divergent("tent_norm", panel, t));
    }
    let order_hi = (spec.order * 3 / 4).max(8);
    let order_lo = (order_hi / 2).max(4);
    let eval = |order: usize| -> Result<f64> {
        let rings = Rings::global(&b, Density::Hardy(w), spec, order)?;
        // C_k = Σ_i mass_i (1−r_i)^{−1} c_k(r_i) · 2 sin(k(1−r_i))/k
        let mut big = vec![ZERO; n];
        for k in 0..=d {
            let mut acc_re = Neumaier::new();
            let mut acc_im = Neumaier::new();
            for i in 0..rings.r.len() {
                let u = 1.0 - rings.r[i];
                let s = rings.mass[i] / u * arc_factor(k, u);
                acc_re.add(s * rings.c[i][k].re);
                acc_im.add(s * rings.c[i][k].im);
            }
            big[k] = Complex64::new(acc_re.value(), acc_im.value());
        }
        big[0] *= 0.5;
        FftPlanner::new().plan_fft_inverse(n).process(&mut big);
        let mut outer = Neumaier::new();
        for z in &big {
            outer.add((2.0 * z.re).max(0.0).powf(0.5 * p));
        }
        Ok(PI / n as f64 * outer.value())
    };
    let (v, v_lo) = (eval(order_hi)?, eval(order_lo)?);
    // mass beyond the last panel is not included; bound its effect
    // relative to the ring total, the missing boundary mass is at most
    // 2·tail·(Σ|b_n|)² over Σ 2|b_n|² μ-moments
    let tail_rel = if check.tail > 0.0 {
        let l1: f64 = b.coeffs().iter().map(|c| c.norm()).sum();
        let total: f64 = b.coeffs().iter().enumerate().map(|(k, c)| 2.0 * c.norm_sqr() * check.moment((2 * k + 1) as f64)).sum();
        2.0 * check.tail * l1 * l1 / total
    } else {
        0.0
    };
    let err = (v - v_lo).abs() + v * tail_rel * (0.5 * p).max(1.0) + rounding(v) * n as f64;
    Ok(NormEstimate::new("tent_norm", v, err, t).check_floor(spec.floor))
}

// ---- BMOA-type quantities ----------------------------------------------------

/// Anchors on `angles` rays at `|a| = 1 − 2^{−j}`, `j = 0..=depth` (the origin once),
/// optionally joined by lattice points.
pub fn anchor_grid(angles: usize, depth: u32, lattice: Option<&Lattice>) -> Vec<Complex64> {
    let mut out = vec![ZERO];
    for j in 1..=depth {
        let m = 1.0 - 0.5f64.powi(j as i32);
        for k in 0..angles {
            out.push(Complex64::from_polar(m, 2.0 * PI * k as f64 / angles as f64));
        }
    }
    if let Some(l) = lattice {
        out.extend(l.points.iter().filter(|z| z.norm() > 0.0));
    }
    out
}

fn best(values: &[(Complex64, f64)]) -> (Complex64, f64) {
    values.iter().copied().fold((ZERO, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
}

/// `sup_a ν(S(a))/(1−|a|)` over `anchors`, `dν = |D^μ g|² μ̂²/(1−|z|) dA`.
/// The constant term of `g` is not part of this seminorm.
pub fn bmoa_mu_sup(g: &TaylorSeries, w: &RadialWeight, anchors: &[Complex64], spec: &QuadratureSpec) -> Result<NormEstimate> {
    let b = frac_derivative(g, w)?;
    let t = trunc(b.degree() + 1, spec, None);
    if b.is_zero() {
        return Ok(NormEstimate::zero("bmoa_mu_sup", t));
    }
    let check = LogProfile::build(ln_hardy_density(w), spec, 8)?;
    if let Some(panel) = check.divergent {
        return Ok(NormEstimate::divergent("bmoa_mu_sup", panel, t));
    }
    square_sup("bmoa_mu_sup", &b, Density::Hardy(w), anchors, spec)
}

/// Garnett's `sup_a ν(S(a))/(1−|a|)` with `dν = |g'|²(1−|z|²) dA`, the
/// classical BMOA seminorm squared up to constants.
pub fn bmoa_classical(g: &TaylorSeries, anchors: &[Complex64], spec: &QuadratureSpec) -> Result<NormEstimate> {
    let b = g.derivative(1);
    if b.is_zero() {
        return Ok(NormEstimate::zero("bmoa_classical", trunc(b.degree() + 1, spec, None)));
    }
    square_sup("bmoa_classical", &b, Density::Garnett, anchors, spec)
}

fn square_sup(tag: &str, b: &TaylorSeries, dens: Density, anchors: &[Complex64], spec: &QuadratureSpec) -> Result<NormEstimate> {
    let t = trunc(b.degree() + 1, spec, None);
    let order_hi = (spec.order * 3 / 4).max(8);
    let order_lo = (order_hi / 2).max(4);
    let hi = Rings::global(b, dens, spec, order_hi)?;
    let vals: Vec<(Complex64, f64)> = anchors
        .par_iter()
        .map(|a| Ok((*a, hi.square(b, dens, *a, order_hi)? / (1.0 - a.norm()))))
        .collect::<Result<_>>()?;
    let (arg, v) = best(&vals);
    let lo = Rings::global(b, dens, spec, order_lo)?;
    let v_lo = lo.square(b, dens, arg, order_lo)? / (1.0 - arg.norm());
    Ok(NormEstimate::new(tag, v, (v - v_lo).abs() + rounding(v) * 16.0, t)
        .check_floor(spec.floor)
        .with_anchor(arg))
}

/// Trend summary of [`vanishing_profile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanishingProfile {
    /// `(|a|, max over rays of ν(S(a))/(1−|a|))`
    pub points: Vec<(f64, f64)>,
    pub peak: f64,
    pub last_over_peak: f64,
    /// Non-increasing from depth 10 on (vacuous if the grid is shallower).
    pub monotone_beyond_10: bool,
}

/// The [`bmoa_mu_sup`] ratio along `|a| = 1 − 2^{−j}`, maximised over 16 rays.
pub fn vanishing_profile(g: &TaylorSeries, w: &RadialWeight, depth: u32, spec: &QuadratureSpec) -> Result<VanishingProfile> {
    if depth >= spec.depth {
        return Err(Error::UnsupportedDepth { n: depth, max: spec.depth - 1 });
    }
    let b = frac_derivative(g, w)?;
    let mut points = Vec::new();
    if b.is_zero() {
        points = (0..=depth).map(|j| (1.0 - 0.5f64.powi(j as i32), 0.0)).collect();
    } else {
        let order = (spec.order * 3 / 4).max(8);
        let rings = Rings::global(&b, Density::Hardy(w), spec, order)?;
        for j in 0..=depth {
            let m = 1.0 - 0.5f64.powi(j as i32);
            let rays = if j == 0 { 1 } else { 16 };
            let mut top: f64 = 0.0;
            for k in 0..rays {
                let a = Complex64::from_polar(m, 2.0 * PI * k as f64 / 16.0);
                top = top.max(rings.square(&b, Density::Hardy(w), a, order)? / (1.0 - m));
            }
            points.push((m, top));
        }
    }
    let peak = points.iter().map(|p| p.1).fold(0.0, f64::max);
    let last = points.last().map(|p| p.1).unwrap_or(0.0);
    let tail: Vec<f64> = points.iter().skip(10).map(|p| p.1).collect();
    let monotone_beyond_10 = tail.windows(2).all(|x| x[1] <= x[0]);
    Ok(VanishingProfile {
        points,
        peak,
        last_over_peak: if peak > 0.0 { last / peak } else { 0.0 },
        monotone_beyond_10,
    })
}

/// Fourier coefficients `K̂_k`, `k = 0..=d`, of `θ ↦ |1 − ρe^{iθ}|^{−(λ+1)}`,
/// from an FFT fine enough to resolve the peak of width `1−ρ`.
fn kernel_coefficients(rho: f64, lambda: f64, d: usize) -> Vec<f64> {
    let need = (32.0 / (1.0 - rho)).ceil() as usize;
    let m = need.max(4 * (d + 1)).max(16).next_power_of_two().min(1 << 17);
    let mut buf: Vec<Complex64> = (0..m)
        .map(|j| {
            let th = 2.0 * PI * j as f64 / m as f64;
            let den = (1.0 - Complex64::from_polar(rho, th)).norm();
            Complex64::new(den.powf(-(lambda + 1.0)), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    (0..=d).map(|k| buf[k].re / m as f64).collect()
}

/// `sup_a ∫_𝔻 (1−|a|)^λ/|1−āz|^{λ+1} dν(z)` with `ν` as in [`bmoa_mu_sup`], on
/// anchors with `|a| ≤ 1 − 2^{−12}`.
pub fn bmoa_kernel_sup(
    g: &TaylorSeries,
    w: &RadialWeight,
    lambda: f64,
    anchors: &[Complex64],
    spec: &QuadratureSpec,
) -> Result<NormEstimate> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("λ = {lambda} must be positive")));
    }
    let cap = 1.0 - 0.5f64.powi(KERNEL_MAX_DEPTH as i32);
    if let Some(a) = anchors.iter().find(|a| a.norm() > cap + 1e-15) {
        return Err(Error::Domain(format!("kernel anchor |a| = {} beyond 1 − 2^−{KERNEL_MAX_DEPTH}", a.norm())));
    }
    let b = frac_derivative(g, w)?;
    let d = b.degree();
    let t = trunc(d + 1, spec, None);
    if b.is_zero() {
        return Ok(NormEstimate::zero("bmoa_kernel_sup", t));
    }
    let check = LogProfile::build(ln_hardy_density(w), spec, 8)?;
    if let Some(panel) = check.divergent {
        return Ok(NormEstimate::divergent("bmoa_kernel_sup", panel, t));
    }
    let eval = |order: usize, anchors: &[Complex64]| -> Result<Vec<(Complex64, f64)>> {
        let rings = Rings::global(&b, Density::Hardy(w), spec, order)?;
        // group anchors by modulus; each group shares the kernel coefficients
        let mut radii: Vec<f64> = anchors.iter().map(|a| a.norm()).collect();
        radii.sort_by(|x, y| x.total_cmp(y));
        radii.dedup();
        let mut out = Vec::with_capacity(anchors.len());
        for ra in radii {
            let group: Vec<Complex64> = anchors.iter().copied().filter(|a| a.norm() == ra).collect();
            let khat: Vec<Vec<f64>> =
                rings.r.par_iter().map(|r| kernel_coefficients(ra * r, lambda, d)).collect();
            let scale = (1.0 - ra).powf(lambda);
            for a in group {
                let phi = a.arg();
                let mut acc = Neumaier::new();
                for i in 0..rings.r.len() {
                    let c = &rings.c[i];
                    let mut ring = c[0].re * khat[i][0];
                    for k in 1..=d {
                        ring += 2.0 * (c[k] * Complex64::from_polar(1.0, k as f64 * phi)).re * khat[i][k];
                    }
                    acc.add(rings.mass[i] * 2.0 * PI * ring);
                }
                out.push((a, scale * acc.value()));
            }
        }
        Ok(out)
    };
    let order_hi = (spec.order / 4).max(8);
    let vals = eval(order_hi, anchors)?;
    let (arg, v) = best(&vals);
    let v_lo = eval((order_hi / 2).max(4), &[arg])?[0].1;
    Ok(NormEstimate::new("bmoa_kernel_sup", v, (v - v_lo).abs() + rounding(v) * 16.0, t)
        .check_floor(spec.floor)
        .with_anchor(arg))
}

// ---- Bloch-type quantities ---------------------------------------------------

/// `sup_z μ̂(|z|)|D^μ g(z)|` over a polar grid refined around the maximum.
pub fn bloch_mu(g: &TaylorSeries, w: &RadialWeight, spec: &QuadratureSpec) -> Result<NormEstimate> {
    let b = frac_derivative(g, w)?;
    let d = b.degree();
    let m = (8 * (d + 1)).max(64).next_power_of_two();
    let t = trunc(d + 1, spec, Some(m));
    if b.is_zero() {
        return Ok(NormEstimate::zero("bloch_mu", t));
    }
    let f = |z: Complex64| -> Result<f64> {
        let u = 1.0 - z.norm();
        if u <= 0.0 {
            return Ok(0.0);
        }
        Ok(w.log_tail_u(u)?.exp() * b.eval(z).norm())
    };
    let mut radii: Vec<f64> = (0..256).map(|k| k as f64 / 256.0).collect();
    radii.extend((1..=4 * spec.depth as i32).map(|j| 1.0 - 0.5f64.powf(j as f64 / 4.0)));
    let mut ev = RingEvaluator::new(m);
    let mut top = (0.0, 0.0, 0usize, 0.0);
    for &r in &radii {
        let tail = w.log_tail_u(1.0 - r)?.exp();
        for (j, z) in ev.values(b.coeffs(), r).iter().enumerate() {
            let v = tail * z.norm();
            if v > top.0 {
                top = (v, r, j, 2.0 * PI * j as f64 / m as f64);
            }
        }
    }
    // alternate golden-section refinements in r and θ
    let (mut r, mut th) = (top.1, top.3);
    let mut v = top.0;
    let dr = (1.0 / 256.0f64).min(0.5 * (1.0 - r)).max(1e-15);
    let mut r_span = (r - dr).max(0.0)..(r + dr).min(1.0 - 1e-16);
    let mut th_span = 2.0 * PI / m as f64;
    for _ in 0..4 {
        let (rr, vr) = golden(|x| f(Complex64::from_polar(x, th)), r_span.start, r_span.end)?;
        if vr > v {
            v = vr;
            r = rr;
        }
        let (tt, vt) = golden(|x| f(Complex64::from_polar(r, x)), th - th_span, th + th_span)?;
        if vt > v {
            v = vt;
            th = tt;
        }
        let half = 0.25 * (r_span.end - r_span.start);
        r_span = (r - half).max(0.0)..(r + half).min(1.0 - 1e-16);
        th_span *= 0.5;
    }
    // grid-to-refined change as the error indicator
    let err = (v - top.0).abs() + rounding(v);
    Ok(NormEstimate::new("bloch_mu", v, err, t).with_anchor(Complex64::from_polar(r, th)))
}

fn golden<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..80 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 > f2 { (x1, f1) } else { (x2, f2) })
}

/// `sup_a ∫_{D(a,r)} |D^μ g|^p μ̂^p (1−|z|)^α dA / (1−|a|)^{α+2}` over lattice anchors.
pub fn bloch_mu_lattice(
    g: &TaylorSeries,
    w: &RadialWeight,
    p: f64,
    alpha: f64,
    lattice: &Lattice,
    spec: &QuadratureSpec,
) -> Result<NormEstimate> {
    check_p(p)?;
    let b = frac_derivative(g, w)?;
    let t = trunc(b.degree() + 1, spec, Some(64));
    if b.is_zero() {
        return Ok(NormEstimate::zero("bloch_mu_lattice", t));
    }
    let disc_spec = QuadratureSpec { order: 16, ..*spec };
    let integrand = |z: Complex64| -> Result<f64> {
        let u = 1.0 - z.norm();
        Ok((p * (w.log_tail_u(u)? + b.eval(z).norm().ln()) + alpha * u.ln()).exp())
    };
    let eval = |a: Complex64, order: usize, ang: usize| -> Result<f64> {
        let rule = disc_rule(Region::HyperbolicDisc { center: a, radius: lattice.r }, &QuadratureSpec { order, ..disc_spec }, ang);
        let mut acc = Neumaier::new();
        for (z, wt) in rule {
            acc.add(wt * integrand(z)?);
        }
        Ok(acc.value() / (1.0 - a.norm()).powf(alpha + 2.0))
    };
    let vals: Vec<(Complex64, f64)> =
        lattice.points.par_iter().map(|a| Ok((*a, eval(*a, 16, 64)?))).collect::<Result<_>>()?;
    let (arg, v) = best(&vals);
    let v_lo = eval(arg, 8, 32)?;
    Ok(NormEstimate::new("bloch_mu_lattice", v, (v - v_lo).abs() + rounding(v), t)
        .check_floor(spec.floor)
        .with_anchor(arg))
}

// ---- Besov and Bergman -------------------------------------------------------

/// Outcome of the tail integrability test `∫_0^1 μ̂(r)^p/(1−r)² dr < ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "verdict")]
pub enum TailWeight {
    Weight { integral: f64 },
    NotAWeight { panel: usize },
}

pub fn tail_weight_test(w: &RadialWeight, p: f64, spec: &QuadratureSpec) -> Result<TailWeight> {
    check_p(p)?;
    let est = integrate_radial(
        |r| {
            let u = 1.0 - r;
            (p * w.log_tail_u(u).unwrap_or(f64::NAN) - 2.0 * u.ln()).exp()
        },
        spec,
    );
    Ok(match est.status {
        Status::Divergent { panel } => TailWeight::NotAWeight { panel },
        _ if !est.value.is_finite() => TailWeight::NotAWeight { panel: 0 },
        _ => TailWeight::Weight { integral: est.value },
    })
}

/// `∫_𝔻 |h|^p ψ(|z|) dA` for a polynomial `h` and a radial density given by
/// `ln ψ(r, 1−r)`, on a polar rule at two radial orders.
fn polar_integral(
    tag: &str,
    h: &TaylorSeries,
    p: f64,
    ln_psi: impl Fn(f64, f64) -> Result<f64> + Sync,
    spec: &QuadratureSpec,
) -> Result<NormEstimate> {
    let m = (4 * (h.degree() + 1)).max(64).next_power_of_two();
    let t = trunc(h.degree() + 1, spec, Some(m));
    let eval = |order: usize| -> Result<(f64, TailBehaviour)> {
        let rule = RadialRule::from_breaks(&finite_breaks(spec), order, spec.depth);
        let mut ev = RingEvaluator::new(m);
        let mut vals = Vec::with_capacity(rule.len());
        for (r, wt) in rule.nodes.iter().zip(&rule.weights) {
            let mean = sum(ev.values(h.coeffs(), *r).iter().map(|z| z.norm().powf(p))) / m as f64;
            let u = 1.0 - r;
            vals.push(2.0 * r * wt * mean * ln_psi(*r, u)?.exp());
        }
        let parts: Vec<f64> = rule.panel_start.windows(2).map(|s| sum(vals[s[0]..s[1]].iter().copied())).collect();
        let total = sum(parts.iter().copied());
        Ok((total, tail_behaviour(&parts[spec.zero_depth.saturating_sub(1) as usize..], 6)))
    };
    let (v, beh) = eval(spec.order)?;
    let tail = match beh {
        TailBehaviour::Growing { panel } => return Ok(NormEstimate::divergent(tag, panel, t)),
        TailBehaviour::Decaying { tail, .. } => tail,
    };
    let (v_lo, _) = eval((spec.order / 2).max(4))?;
    let value = v + tail;
    let err = (v - v_lo).abs() + tail.abs() * 0.5 + rounding(value) * 16.0;
    Ok(NormEstimate::new(tag, value, err, t).check_floor(spec.floor))
}

/// `‖g‖^p_{B_{p,μ}} = ∫_𝔻 |D^μ g|^p μ̂^p/(1−|z|²)² dA` by polar quadrature,
/// after [`tail_weight_test`]; divergent when the tail test fails and `g ≠ 0`.
pub fn besov_mu(g: &TaylorSeries, w: &RadialWeight, p: f64, spec: &QuadratureSpec) -> Result<NormEstimate> {
    check_p(p)?;
    let b = frac_derivative(g, w)?;
    if b.is_zero() {
        return Ok(NormEstimate::zero("besov_mu", trunc(b.degree() + 1, spec, None)));
    }
    if let TailWeight::NotAWeight { panel } = tail_weight_test(w, p, spec)? {
        return Ok(NormEstimate::divergent("besov_mu", panel, trunc(b.degree() + 1, spec, None)));
    }
    polar_integral("besov_mu", &b, p, |_, u| Ok(p * w.log_tail_u(u)? - 2.0 * (u * (2.0 - u)).ln()), spec)
}

/// `∫_𝔻 |D^μ g|^p μ̂^p/(1−|z|²)^s dA` for a general denominator power `s`;
/// `s = 2` is [`besov_mu`] without the tail-weight pre-check.
pub fn besov_mu_power(g: &TaylorSeries, w: &RadialWeight, p: f64, s: f64, spec: &QuadratureSpec) -> Result<NormEstimate> {
    check_p(p)?;
    let b = frac_derivative(g, w)?;
    if b.is_zero() {
        return Ok(NormEstimate::zero("besov_mu_power", trunc(b.degree() + 1, spec, None)));
    }
    polar_integral("besov_mu_power", &b, p, |_, u| Ok(p * w.log_tail_u(u)? - s * (u * (2.0 - u)).ln()), spec)
}

/// The `p = 2` Besov quantity by orthogonality:
/// `Σ |f̂(n)|²/μ²_{2n+1} · 2∫ r^{2n+1} μ̂²/(1−r²)² dr`.
pub fn besov_mu_series(g: &TaylorSeries, w: &RadialWeight, spec: &QuadratureSpec) -> Result<NormEstimate> {
    let b = frac_derivative(g, w)?;
    radial_series("besov_mu_series", &b, &|_, u| Ok(2.0 * w.log_tail_u(u)? - 2.0 * (u * (2.0 - u)).ln()), spec)
}

/// Least `n` with `n p > 1`.
pub fn besov_order(p: f64) -> usize {
    let mut n = 1;
    while (n as f64) * p <= 1.0 {
        n += 1;
    }
    n
}

/// `Σ_{j<n_p} |g^{(j)}(0)|^p + ∫_𝔻 |g^{(n_p)}|^p (1−|z|²)^{n_p p − 2} dA`.
pub fn besov_classical(g: &TaylorSeries, p: f64, spec: &QuadratureSpec) -> Result<NormEstimate> {
    check_p(p)?;
    let n = besov_order(p);
    let mut head = Neumaier::new();
    for j in 0..n {
        let fact: f64 = (1..=j).map(|k| k as f64).product();
        head.add((g.coeff(j).norm() * fact).powf(p));
    }
    let h = g.derivative(n);
    let e = n as f64 * p - 2.0;
    let mut est = if h.is_zero() {
        NormEstimate::zero("besov_classical", trunc(g.degree() + 1, spec, None))
    } else {
        polar_integral("besov_classical", &h, p, |_, u| Ok(e * (u * (2.0 - u)).ln()), spec)?
    };
    est.value += head.value();
    Ok(est)
}

/// `‖zⁿ‖²_{A²_α} = Γ(α+2)Γ(n+1)/Γ(n+α+2)` with `dA_α = (α+1)(1−|z|²)^α dA`.
pub fn bergman_monomial_norm2(n: usize, alpha: f64) -> f64 {
    (ln_gamma(alpha + 2.0) - ln_gamma_ratio(n as f64 + 1.0, alpha + 1.0)).exp()
}

/// `‖f‖^p_{A^p_α} = ∫_𝔻 |f|^p dA_α`, `α > −1`.
pub fn bergman_norm(f: &TaylorSeries, alpha: f64, p: f64, spec: &QuadratureSpec) -> Result<NormEstimate> {
    check_p(p)?;
    if !(alpha > -1.0) {
        return Err(Error::Domain(format!("α = {alpha} must exceed −1")));
    }
    if f.is_zero() {
        return Ok(NormEstimate::zero("bergman_norm", trunc(f.degree() + 1, spec, None)));
    }
    let la = (alpha + 1.0).ln();
    polar_integral("bergman_norm", f, p, |_, u| Ok(la + alpha * (u * (2.0 - u)).ln()), spec)
}

/// `sup_a ν(D(a,r))/(1−|a|)^{2+α}` for `dν = |D^μ g|² μ̂² dA_α`, `α > −1`;
/// for `α = −1`, `sup_a ν(S(a))/(1−|a|)` with `dν = |D^μ g|² μ̂²/(1−|z|) dA`,
/// which is the [`bmoa_mu_sup`] quantity.
pub fn carleson_ratio_sup(
    g: &TaylorSeries,
    w: &RadialWeight,
    alpha: f64,
    anchors: &[Complex64],
    r: f64,
    spec: &QuadratureSpec,
) -> Result<NormEstimate> {
    if alpha == -1.0 {
        let mut e = bmoa_mu_sup(g, w, anchors, spec)?;
        e.tag = "carleson_ratio_sup".into();
        return Ok(e);
    }
    if !(alpha > -1.0) {
        return Err(Error::Domain(format!("α = {alpha} must be −1 or exceed −1")));
    }
    let b = frac_derivative(g, w)?;
    let t = trunc(b.degree() + 1, spec, Some(64));
    if b.is_zero() {
        return Ok(NormEstimate::zero("carleson_ratio_sup", t));
    }
    let la = (alpha + 1.0).ln();
    let eval = |a: Complex64, order: usize, ang: usize| -> Result<f64> {
        let rule = disc_rule(Region::HyperbolicDisc { center: a, radius: r }, &QuadratureSpec { order, ..*spec }, ang);
        let mut acc = Neumaier::new();
        for (z, wt) in rule {
            let u = 1.0 - z.norm();
            acc.add(wt * (2.0 * w.log_tail_u(u)? + la + alpha * (u * (2.0 - u)).ln()).exp() * b.eval(z).norm_sqr());
        }
        Ok(acc.value() / (1.0 - a.norm()).powf(2.0 + alpha))
    };
    let vals: Vec<(Complex64, f64)> = anchors.par_iter().map(|a| Ok((*a, eval(*a, 16, 64)?))).collect::<Result<_>>()?;
    let (arg, v) = best(&vals);
    let v_lo = eval(arg, 8, 32)?;
    Ok(NormEstimate::new("carleson_ratio_sup", v, (v - v_lo).abs() + rounding(v), t)
        .check_floor(spec.floor)
        .with_anchor(arg))
}

/// `ν(S(a))` for the measure of [`bmoa_mu_sup`]; exposed for refinement studies.
pub fn square_measure(g: &TaylorSeries, w: &RadialWeight, s: &CarlesonSquare, spec: &QuadratureSpec) -> Result<f64> {
    let b = frac_derivative(g, w)?;
    if b.is_zero() {
        return Ok(0.0);
    }
    let order = (spec.order * 3 / 4).max(8);
    Rings::global(&b, Density::Hardy(w), spec, order)?.square(&b, Density::Hardy(w), s.anchor, order)
}
