//! Deterministic radial and polar quadrature.
//!
//! The radial rule is composite Gauss–Legendre on panels that shrink
//! geometrically toward `r = 1` (breakpoints `1 - 2^-j`), optionally also
//! toward `r = 0` for logarithmic singularities there. Angular integrals use
//! the trapezoid rule, exact for trigonometric polynomials of degree below
//! the node count.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::disc_geometry::{hyperbolic_disc_euclid, CarlesonSquare};
pub use crate::estimate::{NormEstimate, Status, Truncation};
use crate::summation::{sum, Neumaier};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn compute_gl(n: usize) -> GaussLegendre {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussLegendre { nodes, weights }
}

/// Cached Gauss–Legendre rule of order `n`.
pub fn gauss_legendre(n: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(r) = cache.read().unwrap().get(&n) {
        return r.clone();
    }
    let rule = Arc::new(compute_gl(n));
    cache.write().unwrap().entry(n).or_insert(rule).clone()
}

/// Gauss–Legendre integral of `f` over `[a, b]`.
pub fn gl_interval<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, order: usize) -> f64 {
    let gl = gauss_legendre(order);
    let (h, c) = (0.5 * (b - a), 0.5 * (b + a));
    let mut acc = Neumaier::new();
    for (x, w) in gl.nodes.iter().zip(&gl.weights) {
        acc.add(w * f(c + h * x));
    }
    h * acc.value()
}

/// Quadrature parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss–Legendre nodes per panel.
    pub order: usize,
    /// Geometric panels reach `1 - 2^-depth`.
    pub depth: u32,
    /// Dyadic panels toward zero reach `2^-zero_depth` (0 disables them).
    pub zero_depth: u32,
    /// Default angular trapezoid nodes.
    pub angular: usize,
    /// Target relative tolerance.
    pub rel_tol: f64,
    /// Relative error above which an estimate is marked non-converged.
    pub floor: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { order: 32, depth: 40, zero_depth: 0, angular: 1024, rel_tol: 1e-10, floor: 1e-7 }
    }
}

impl QuadratureSpec {
    /// Angular node count able to integrate `|p|^2` exactly for a polynomial in
    /// `N` coefficients.
    pub fn angular_for(&self, trunc: usize) -> usize {
        self.angular.max(4 * (trunc + 1))
    }

    pub fn truncation(&self) -> Truncation {
        Truncation { series: None, depth: self.depth, angular: None }
    }
}

/// Panel breakpoints on `[0, 1]`.
pub fn breakpoints(depth: u32, zero_depth: u32) -> Vec<f64> {
    let mut b = vec![0.0];
    if zero_depth > 1 {
        for k in (2..=zero_depth).rev() {
            b.push((-(k as f64)).exp2());
        }
    }
    for j in 1..=depth {
        b.push(1.0 - (-(j as f64)).exp2());
    }
    b.push(1.0);
    b
}

/// Breakpoints clustering toward `1` on an arbitrary interval `[a, 1)`.
pub fn breakpoints_from(a: f64, depth: u32) -> Vec<f64> {
    let mut b = vec![a];
    let len = 1.0 - a;
    for j in 1..=depth {
        let x = a + len * (1.0 - (-(j as f64)).exp2());
        if x >= 1.0 || x <= *b.last().unwrap() {
            break;
        }
        b.push(x);
    }
    b.push(1.0);
    b
}

/// A flattened composite rule: nodes and weights on `[0, 1)`.
#[derive(Debug, Clone)]
pub struct RadialRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Index of the first node of each panel, plus a final sentinel.
    pub panel_start: Vec<usize>,
    pub breaks: Vec<f64>,
    pub depth: u32,
}

impl RadialRule {
    pub fn from_breaks(breaks: &[f64], order: usize, depth: u32) -> Self {
        let gl = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(order * breaks.len());
        let mut weights = Vec::with_capacity(order * breaks.len());
        let mut panel_start = Vec::with_capacity(breaks.len());
        for w in breaks.windows(2) {
            panel_start.push(nodes.len());
            let (h, c) = (0.5 * (w[1] - w[0]), 0.5 * (w[1] + w[0]));
            for (x, wt) in gl.nodes.iter().zip(&gl.weights) {
                nodes.push(c + h * x);
                weights.push(h * wt);
            }
        }
        panel_start.push(nodes.len());
        RadialRule { nodes, weights, panel_start, breaks: breaks.to_vec(), depth }
    }

    pub fn new(spec: &QuadratureSpec) -> Self {
        Self::from_breaks(&breakpoints(spec.depth, spec.zero_depth), spec.order, spec.depth)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Plain weighted sum of precomputed node values.
    pub fn apply(&self, values: &[f64]) -> f64 {
        sum(self.weights.iter().zip(values).map(|(w, v)| w * v))
    }
}

/// Outcome of the geometric-growth test on the panels approaching `r = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailBehaviour {
    /// Contributions decay with ratio `q < 1`; `tail` is the extrapolated rest.
    Decaying { q: f64, tail: f64 },
    /// Contributions fail to decay from panel `panel` on.
    Growing { panel: usize },
}

/// Examine the per-panel contributions `parts` of the geometric panels.
///
/// The last `window` panels must decay geometrically; the sum of the
/// remaining geometric series beyond the last panel is returned.
pub fn tail_behaviour(parts: &[f64], window: usize) -> TailBehaviour {
    let n = parts.len();
    if n < 3 {
        return TailBehaviour::Decaying { q: 0.0, tail: 0.0 };
    }
    let total: f64 = parts.iter().map(|p| p.abs()).sum();
    let last = parts[n - 1];
    if last.abs() <= 1e-17 * total || last == 0.0 {
        return TailBehaviour::Decaying { q: 0.0, tail: 0.0 };
    }
    let w = window.min(n - 1);
    let mut growing_from = None;
    for i in (n - w)..n {
        let prev = parts[i - 1];
        if prev == 0.0 {
            continue;
        }
        let q = parts[i] / prev;
        // Node rounding near r = 1 perturbs panel sums by ~1e-5 relative.
        if q >= 1.0 - 1e-3 {
            if growing_from.is_none() {
                growing_from = Some(i);
            }
        } else {
            growing_from = None;
        }
    }
    if let Some(panel) = growing_from {
        // Require the non-decay to persist to the end of the grid.
        if n - panel >= 2 || w <= 2 {
            return TailBehaviour::Growing { panel };
        }
    }
    let q = last / parts[n - 2];
    if !(0.0..1.0).contains(&q) {
        return TailBehaviour::Decaying { q: 0.0, tail: 0.0 };
    }
    TailBehaviour::Decaying { q, tail: last * q / (1.0 - q) }
}

/// `∫_0^1 f(r) dr` for `f` possibly singular (integrably) at `r = 1`.
///
/// The value is the panel-halved composite rule plus a geometric
/// extrapolation beyond `1 - 2^-depth`; the error indicator is the halving
/// difference plus the change of the extrapolated tail between consecutive
/// panel pairs. Divergence gives `+inf` with the offending panel.
pub fn integrate_radial<F: Fn(f64) -> f64 + Sync>(f: F, spec: &QuadratureSpec) -> NormEstimate {
    integrate_radial_from(f, 0.0, spec, "integrate_radial")
}

/// As [`integrate_radial`] on `[a, 1)`.
pub fn integrate_radial_from<F: Fn(f64) -> f64 + Sync>(f: F, a: f64, spec: &QuadratureSpec, tag: &str) -> NormEstimate {
    let breaks = if a == 0.0 { breakpoints(spec.depth, spec.zero_depth) } else { breakpoints_from(a, spec.depth) };
    // The final `[b_last, 1)` panel is replaced by extrapolation.
    let finite = &breaks[..breaks.len() - 1];
    let mut parts = Vec::with_capacity(finite.len());
    let mut err = Neumaier::new();
    for w in finite.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let coarse = gl_interval(&f, lo, hi, spec.order);
        let mid = 0.5 * (lo + hi);
        let fine = gl_interval(&f, lo, mid, spec.order) + gl_interval(&f, mid, hi, spec.order);
        err.add((fine - coarse).abs());
        parts.push(fine);
    }
    let trunc = Truncation { series: None, depth: spec.depth, angular: None };
    let body = sum(parts.iter().copied());
    if !body.is_finite() {
        return NormEstimate::divergent(tag, parts.iter().position(|p| !p.is_finite()).unwrap_or(0), trunc);
    }
    let start = if a == 0.0 { spec.zero_depth.saturating_sub(1) as usize } else { 0 };
    let geo = &parts[start.min(parts.len())..];
    match tail_behaviour(geo, 6) {
        TailBehaviour::Growing { panel } => NormEstimate::divergent(tag, panel + start, trunc),
        TailBehaviour::Decaying { q, tail } => {
            let n = geo.len();
            let mut tail_err = 0.0;
            if n >= 3 && geo[n - 2] != 0.0 && geo[n - 3] != 0.0 {
                let q_prev = geo[n - 2] / geo[n - 3];
                if (0.0..1.0).contains(&q_prev) {
                    tail_err = (tail - geo[n - 1] * q_prev / (1.0 - q_prev)).abs();
                }
            }
            let _ = q;
            let value = body + tail;
            let rounding = 4.0 * f64::EPSILON * sum(parts.iter().map(|p| p.abs()));
            NormEstimate::new(tag, value, err.value() + tail_err + rounding, trunc).check_floor(spec.floor)
        }
    }
}

/// Integration regions for [`integrate_disc`].
#[derive(Debug, Clone, Copy)]
pub enum Region {
    /// The whole unit disc.
    Disc,
    /// A Carleson square.
    Square(CarlesonSquare),
    /// Hyperbolic disc `D(center, radius)`.
    HyperbolicDisc { center: Complex64, radius: f64 },
    /// Euclidean disc inside the unit disc.
    EuclidDisc { center: Complex64, radius: f64 },
}

/// Polar tensor rule for a region, as flat `(z, weight)` lists with
/// `dA = dx dy / π`.
pub fn disc_rule(region: Region, spec: &QuadratureSpec, angular: usize) -> Vec<(Complex64, f64)> {
    match region {
        Region::Disc => {
            let rr = RadialRule::new(spec);
            let m = angular.max(1);
            let mut out = Vec::with_capacity(rr.len() * m);
            for (r, w) in rr.nodes.iter().zip(&rr.weights) {
                for k in 0..m {
                    let th = 2.0 * PI * k as f64 / m as f64;
                    out.push((Complex64::from_polar(*r, th), 2.0 * r * w / m as f64));
                }
            }
            out
        }
        Region::Square(s) => {
            let a = s.anchor;
            if a.norm() == 0.0 {
                return disc_rule(Region::Disc, spec, angular);
            }
            let (ra, phi) = a.to_polar();
            let h = 0.5 * (1.0 - ra);
            let depth = spec.depth.min((52.0 + (1.0 - ra).log2()).max(4.0) as u32);
            let rr = RadialRule::from_breaks(&breakpoints_from(ra, depth), spec.order, depth);
            // Angular panels: enough to resolve `angular` trig degree over the arc.
            let per_panel = 16usize;
            let panels = ((2.0 * h * angular as f64 / (2.0 * PI)) / 4.0).ceil().max(1.0) as usize;
            let gl = gauss_legendre(per_panel);
            let mut out = Vec::with_capacity(rr.len() * panels * per_panel);
            for (r, w) in rr.nodes.iter().zip(&rr.weights) {
                for p in 0..panels {
                    let lo = phi - h + 2.0 * h * p as f64 / panels as f64;
                    let hi = lo + 2.0 * h / panels as f64;
                    let (hw, c) = (0.5 * (hi - lo), 0.5 * (hi + lo));
                    for (x, gw) in gl.nodes.iter().zip(&gl.weights) {
                        out.push((Complex64::from_polar(*r, c + hw * x), r * w * hw * gw / PI));
                    }
                }
            }
            out
        }
        Region::HyperbolicDisc { center, radius } => {
            let (c, rad) = hyperbolic_disc_euclid(center, radius);
            disc_rule(Region::EuclidDisc { center: c, radius: rad }, spec, angular)
        }
        Region::EuclidDisc { center, radius } => {
            let gl = gauss_legendre(spec.order);
            let m = angular.max(1);
            let mut out = Vec::with_capacity(spec.order * m);
            for (x, gw) in gl.nodes.iter().zip(&gl.weights) {
                let rho = 0.5 * radius * (1.0 + x);
                let wr = 0.5 * radius * gw;
                for k in 0..m {
                    let th = 2.0 * PI * k as f64 / m as f64;
                    out.push((center + Complex64::from_polar(rho, th), 2.0 * rho * wr / m as f64));
                }
            }
            out
        }
    }
}

/// `∫_region F dA` with `dA = dx dy / π`, with a coarse-rule comparison as
/// error indicator.
pub fn integrate_disc<F: Fn(Complex64) -> f64>(f: F, region: Region, spec: &QuadratureSpec) -> NormEstimate {
    let fine_rule = disc_rule(region, spec, spec.angular);
    let coarse_spec = QuadratureSpec { order: (spec.order / 2).max(4), ..*spec };
    let coarse_rule = disc_rule(region, &coarse_spec, (spec.angular / 2).max(8));
    let eval = |rule: &[(Complex64, f64)]| sum(rule.iter().map(|(z, w)| w * f(*z)));
    let fine = eval(&fine_rule);
    let coarse = eval(&coarse_rule);
    let trunc = Truncation { series: None, depth: spec.depth, angular: Some(spec.angular) };
    if !fine.is_finite() {
        return NormEstimate::divergent("integrate_disc", 0, trunc);
    }
    NormEstimate::new("integrate_disc", fine, (fine - coarse).abs(), trunc)
}
