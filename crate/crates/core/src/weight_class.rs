//! Numerical evidence for membership of a weight in the doubling classes
//! `D̂` (upper doubling) and `Ď` (lower doubling).
//!
//! A finite grid cannot decide an asymptotic property, so every verdict is
//! "evidence", built from plateau heuristics on the grid `r_j = 1 − 2^{−j}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::radial_weight::RadialWeight;
use crate::summation::Neumaier;

pub const DEFAULT_DEPTH: u32 = 36;
pub const MAX_DEPTH: u32 = 40;
pub const DEFAULT_K_GRID: [f64; 5] = [2.0, 4.0, 8.0, 16.0, 64.0];
/// A profile plateaus when its last quarter stays within this factor of the median.
pub const PLATEAU_FACTOR: f64 = 1.05;
/// Lower-doubling ratios must exceed this to count.
pub const DCHECK_MIN: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    EvidenceFor,
    EvidenceAgainst,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::EvidenceFor => "evidence-for",
            Verdict::EvidenceAgainst => "evidence-against",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// One grid point: abscissa (`r` or `x` or `K`) and a ratio, also kept as a
/// logarithm because the ratios overflow for rapidly decreasing weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub at: f64,
    pub ratio: f64,
    pub ln_ratio: f64,
}

impl ProfilePoint {
    fn from_ln(at: f64, ln_ratio: f64) -> Self {
        ProfilePoint { at, ratio: ln_ratio.exp(), ln_ratio }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DhatReport {
    /// `(r, μ̂(r)/μ̂((1+r)/2))`
    pub profile: Vec<ProfilePoint>,
    pub sup: f64,
    /// `(x, μ_x/μ_{2x})`
    pub moment_profile: Vec<ProfilePoint>,
    pub tail_plateau: bool,
    pub moment_plateau: bool,
    /// Both profiles bounded or both unbounded.
    pub consistent: bool,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KProfile {
    pub k: f64,
    /// `(r, μ̂(r)/μ̂(1−(1−r)/K))`
    pub profile: Vec<ProfilePoint>,
    pub inf: f64,
    /// The excess `ratio − 1` settles instead of decaying.
    pub excess_plateau: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcheckReport {
    pub k_profiles: Vec<KProfile>,
    pub beta_estimate: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightClassReport {
    pub weight: String,
    pub depth: u32,
    pub dhat: DhatReport,
    pub dcheck: DcheckReport,
    /// Verdict for `D = D̂ ∩ Ď`.
    pub d: Verdict,
}

fn check_depth(depth: u32) -> Result<()> {
    if depth > MAX_DEPTH {
        return Err(Error::UnsupportedDepth { n: depth, max: MAX_DEPTH });
    }
    Ok(())
}

/// Boundary distances `u_j = 2^{−j}`, so that `r_j = 1 − u_j`.
fn grid_u(depth: u32) -> impl Iterator<Item = f64> {
    (0..=depth).map(|j| 0.5f64.powi(j as i32))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn last_quarter(v: &[f64]) -> &[f64] {
    let n = v.len();
    &v[n - (n / 4).max(1)..]
}

/// Last-quarter maximum of `ln v` within `ln 1.05` of the median of `ln v`.
pub fn plateaus(ln_values: &[f64]) -> bool {
    if ln_values.is_empty() || ln_values.iter().any(|v| v.is_nan()) {
        return false;
    }
    let med = median(&mut ln_values.to_vec());
    let top = last_quarter(ln_values).iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top <= med + PLATEAU_FACTOR.ln()
}

/// Upper-doubling diagnostics: tail ratios at `r_j` and moment ratios at `x = 2^j`.
pub fn classify_dhat(w: &RadialWeight, depth: u32) -> Result<DhatReport> {
    check_depth(depth)?;
    let mut profile = Vec::new();
    for u in grid_u(depth) {
        let l = w.log_tail_u(u)? - w.log_tail_u(0.5 * u)?;
        profile.push(ProfilePoint::from_ln(1.0 - u, l));
    }
    let mut moment_profile = Vec::new();
    for j in 0..=depth {
        let x = 2f64.powi(j as i32);
        let l = w.log_moment(x)? - w.log_moment(2.0 * x)?;
        moment_profile.push(ProfilePoint::from_ln(x, l));
    }
    let sup = profile.iter().map(|p| p.ratio).fold(1.0, f64::max);
    let tl: Vec<f64> = profile.iter().map(|p| p.ln_ratio).collect();
    let ml: Vec<f64> = moment_profile.iter().map(|p| p.ln_ratio).collect();
    let (tail_plateau, moment_plateau) = (plateaus(&tl), plateaus(&ml));
    let verdict = match (tail_plateau, moment_plateau) {
        (true, true) => Verdict::EvidenceFor,
        (false, false) => Verdict::EvidenceAgainst,
        _ => Verdict::Inconclusive,
    };
    Ok(DhatReport {
        profile,
        sup,
        moment_profile,
        tail_plateau,
        moment_plateau,
        consistent: tail_plateau == moment_plateau,
        verdict,
    })
}

/// Lower-doubling diagnostics for each `K` in `k_grid`.
///
/// A slowly varying tail gives ratios that creep towards 1 like `log K / j`,
/// which can stay above any fixed threshold on a finite grid. So besides
/// `inf > 1.01` the excess `ratio − 1` must plateau (last-quarter minimum
/// within a factor 1.05 of the median).
pub fn classify_dcheck(w: &RadialWeight, k_grid: &[f64], depth: u32) -> Result<DcheckReport> {
    check_depth(depth)?;
    if let Some(k) = k_grid.iter().find(|k| !(**k > 1.0)) {
        return Err(Error::Domain(format!("K = {k} must exceed 1")));
    }
    let mut k_profiles = Vec::new();
    for &k in k_grid {
        let mut profile = Vec::new();
        for u in grid_u(depth) {
            let l = w.log_tail_u(u)? - w.log_tail_u(u / k)?;
            profile.push(ProfilePoint::from_ln(1.0 - u, l));
        }
        let inf = profile.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min);
        // log of the excess, ln(e^{l} − 1)
        let ex: Vec<f64> = profile.iter().map(|p| p.ln_ratio.exp_m1().ln()).collect();
        let excess_plateau = if ex.iter().any(|v| !v.is_finite()) {
            false
        } else {
            let med = median(&mut ex.clone());
            let low = last_quarter(&ex).iter().copied().fold(f64::INFINITY, f64::min);
            low >= med - PLATEAU_FACTOR.ln()
        };
        k_profiles.push(KProfile { k, profile, inf, excess_plateau });
    }
    let verdict = if k_profiles.iter().any(|p| p.inf > DCHECK_MIN && p.excess_plateau) {
        Verdict::EvidenceFor
    } else {
        Verdict::EvidenceAgainst
    };
    Ok(DcheckReport { k_profiles, beta_estimate: beta_estimate(w, depth)?, verdict })
}

/// Least-squares slope of `log μ̂(r)` against `log(1−r)` on the upper half of the grid.
pub fn beta_estimate(w: &RadialWeight, depth: u32) -> Result<f64> {
    let mut pts = Vec::new();
    for j in depth / 2..=depth {
        let u = 0.5f64.powi(j as i32);
        pts.push(((j as f64) * -std::f64::consts::LN_2, w.log_tail_u(u)?));
    }
    if pts.len() < 2 {
        return Ok(0.0);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let b = sxy / sxx;
    Ok(if b.is_finite() { b.max(0.0) } else { f64::INFINITY })
}

/// Both classifiers with default `K` grid.
pub fn classify(w: &RadialWeight, depth: u32) -> Result<WeightClassReport> {
    let dhat = classify_dhat(w, depth)?;
    let dcheck = classify_dcheck(w, &DEFAULT_K_GRID, depth)?;
    let d = match (dhat.verdict, dcheck.verdict) {
        (Verdict::EvidenceFor, Verdict::EvidenceFor) => Verdict::EvidenceFor,
        (Verdict::EvidenceAgainst, _) | (_, Verdict::EvidenceAgainst) => Verdict::EvidenceAgainst,
        _ => Verdict::Inconclusive,
    };
    Ok(WeightClassReport { weight: w.label(), depth, dhat, dcheck, d })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralPoint {
    pub r: f64,
    pub ratio: f64,
    /// Difference between two quadrature orders.
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralProfile {
    pub gamma: f64,
    pub eta: f64,
    pub points: Vec<IntegralPoint>,
    pub bounded: bool,
    /// Largest relative disagreement between the two quadrature orders.
    pub max_rel_err: f64,
}

/// Ratio `∫_0^r ds/(μ̂(s)^γ(1−s)^η) · μ̂(r)^γ (1−r)^{η−1}` on the grid
/// `r_j`, `j ≤ depth`. A bounded profile is `Ď` evidence for the given
/// `(γ, η)`; the threshold `η₀(γ)` is not searched for. The integrand is
/// folded with `μ̂(r)^γ` so it stays in `[0, 1]` for decreasing tails.
pub fn integral_dcheck_test(w: &RadialWeight, gamma: f64, eta: f64, depth: u32) -> Result<IntegralProfile> {
    check_depth(depth)?;
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("γ = {gamma} must be positive")));
    }
    if !(eta <= 1.0) {
        return Err(Error::Domain(format!("η = {eta} must be ≤ 1")));
    }
    let us: Vec<f64> = grid_u(depth).collect();
    // per panel and node: ln(quadrature weight) − γ ln μ̂(s) − η ln(1−s)
    let panels = |order: usize| -> Result<Vec<Vec<f64>>> {
        let gl = gauss_legendre(order);
        us.windows(2)
            .map(|ab| {
                let (h, c) = (0.5 * (ab[0] - ab[1]), 0.5 * (ab[0] + ab[1]));
                gl.nodes
                    .iter()
                    .zip(&gl.weights)
                    .map(|(x, wt)| {
                        let u = c + h * x;
                        Ok((h * wt).ln() - gamma * w.log_tail_u(u)? - eta * u.ln())
                    })
                    .collect()
            })
            .collect()
    };
    let (hi, lo) = (panels(24)?, panels(12)?);
    let mut points = vec![IntegralPoint { r: 0.0, ratio: 0.0, err: 0.0 }];
    let mut max_rel_err: f64 = 0.0;
    for (j, &u) in us.iter().enumerate().skip(1) {
        let shift = gamma * w.log_tail_u(u)? + (eta - 1.0) * u.ln();
        let eval = |tab: &Vec<Vec<f64>>| {
            let mut acc = Neumaier::new();
            for panel in &tab[..j] {
                for l in panel {
                    acc.add((l + shift).exp());
                }
            }
            acc.value()
        };
        let (a, b) = (eval(&hi), eval(&lo));
        let err = (a - b).abs();
        if a > 0.0 {
            max_rel_err = max_rel_err.max(err / a);
        }
        points.push(IntegralPoint { r: 1.0 - u, ratio: a, err });
    }
    let ln: Vec<f64> = points.iter().skip(1).map(|p| p.ratio.ln()).collect();
    Ok(IntegralProfile { gamma, eta, bounded: plateaus(&ln), points, max_rel_err })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_rule() {
        assert!(plateaus(&[0.1, 0.5, 0.69, 0.69, 0.69, 0.69, 0.69, 0.69]));
        let growing: Vec<f64> = (0..20).map(|j| j as f64).collect();
        assert!(!plateaus(&growing));
        assert!(!plateaus(&[]));
    }

    #[test]
    fn depth_limit() {
        let w = RadialWeight::lebesgue();
        assert!(classify_dhat(&w, 41).is_err());
        assert!(classify_dcheck(&w, &[1.0], 10).is_err());
    }
}
