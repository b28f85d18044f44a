//! Radial weights, their tails `μ̂(r) = ∫_r^1 μ`, moments `μ_x = ∫_0^1 s^x μ(s) ds`
//! and the derived weights built from them.
//!
//! Every weight that lacks closed forms is discretized once on a fixed
//! global grid (dyadic panels toward both `0` and `1`, 32 Gauss–Legendre
//! nodes each). The resulting positive "atoms" `w_i μ(t_i)` feed moment sums,
//! cumulative tail tables and the one-step transforms behind `μ₊`, `V_{ν,n}`
//! and `ω^{*,n}`. Point evaluations between grid breakpoints use a short
//! Gauss–Legendre panel from `r` to the next breakpoint plus the tabulated
//! remainder, so nested derived weights never re-integrate from scratch.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quadrature::{breakpoints, gauss_legendre, RadialRule};
use crate::special::{beta_reg, ln_beta, ln_gamma, ln_gamma_ratio};
use crate::summation::{log_sum_exp, sum, Neumaier};

/// Largest `n` accepted by [`RadialWeight::iterate_v`] and
/// [`RadialWeight::iterate_star`].
pub const MAX_ITERATION_DEPTH: u32 = 4;

/// All radial grids stop at `1 − 2^-GRID_DEPTH`.
pub const GRID_DEPTH: u32 = 40;

const PARTIAL_ORDER: usize = 16;

/// The shared grid used to discretize weights.
pub fn global_rule() -> &'static RadialRule {
    static RULE: OnceLock<RadialRule> = OnceLock::new();
    RULE.get_or_init(|| RadialRule::from_breaks(&breakpoints(GRID_DEPTH, GRID_DEPTH), 32, GRID_DEPTH))
}

/// Panel of the global grid containing `r`.
fn panel_of(r: f64) -> usize {
    let b = &global_rule().breaks;
    let p = b.partition_point(|x| *x <= r);
    p.saturating_sub(1).min(b.len() - 2)
}

/// One-step transforms producing a new density from an inner weight `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivedOp {
    /// `r ↦ ∫_r^1 b(t)/t dt`.
    MuPlus,
    /// `V_{b,n}`; the inner weight is `V_{b,n−1}`.
    IterateV(u32),
    /// `b^{*,n}`; the inner weight is `b^{*,n−1}`.
    IterateStar(u32),
    /// `r ↦ b̂(r)^p`.
    PowerTail(f64),
    /// `r ↦ b(r)(1−r)^η`.
    TimesOneMinusR(f64),
}

/// A weight defined through an operation on another weight.
#[derive(Debug, Clone)]
pub struct DerivedWeight {
    /// The weight named by the user.
    pub base: Arc<RadialWeight>,
    pub op: DerivedOp,
    /// The immediate argument of the one-step transform (equals `base`
    /// except for iterations of order ≥ 2).
    inner: Arc<RadialWeight>,
}

#[derive(Debug, Clone)]
pub enum WeightKind {
    /// `μ(s) = β(1−s²)^{β−1}`.
    Standard { beta: f64 },
    /// Tail `μ̂(r) = exp(−c/(1−r)^γ)`.
    Exponential { c: f64, gamma: f64 },
    /// Density given by a formula.
    Density { formula: String, expr: Expr },
    /// Tail given by a formula; the density is its negative derivative.
    Tail { formula: String, expr: Expr },
    Derived(DerivedWeight),
}

/// Positive point masses `w_i μ(t_i)` on the global grid.
#[derive(Debug)]
struct Atoms {
    t: Vec<f64>,
    m: Vec<f64>,
}

/// Suffix tables of a one-step transform, indexed by global breakpoint.
#[derive(Debug)]
struct StepTables {
    /// `Σ_{t_i ≥ g_p} m_i k(t_i)`.
    k0: Vec<f64>,
    /// Star step only: `Σ_{t_i ≥ g_p} m_i t_i log(t_i/g_p)`.
    log_part: Vec<f64>,
}

#[derive(Debug, Default)]
struct Caches {
    atoms: OnceLock<Atoms>,
    tail: OnceLock<Vec<f64>>,
    step: OnceLock<StepTables>,
    log_moments: RwLock<HashMap<u64, f64>>,
}

/// A radial weight on `[0, 1)`. Immutable apart from its internal caches.
#[derive(Debug)]
pub struct RadialWeight {
    kind: WeightKind,
    cache: Caches,
}

impl fmt::Display for RadialWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn check_r(r: f64) -> Result<()> {
    if r.is_nan() || !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!("r = {r} outside [0, 1)")));
    }
    Ok(())
}

impl RadialWeight {
    fn wrap(kind: WeightKind) -> Arc<Self> {
        Arc::new(RadialWeight { kind, cache: Caches::default() })
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    /// `μ(s) = β(1−s²)^{β−1}`.
    pub fn standard(beta: f64) -> Result<Arc<Self>> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Descriptor(format!("standard weight needs beta > 0, got {beta}")));
        }
        Ok(Self::wrap(WeightKind::Standard { beta }))
    }

    /// The constant weight `μ ≡ 1`.
    pub fn lebesgue() -> Arc<Self> {
        Self::wrap(WeightKind::Standard { beta: 1.0 })
    }

    /// Tail `exp(−c/(1−r)^γ)`, density `cγ(1−r)^{−γ−1} exp(−c/(1−r)^γ)`.
    pub fn exponential(c: f64, gamma: f64) -> Result<Arc<Self>> {
        if !(c > 0.0 && gamma > 0.0 && c.is_finite() && gamma.is_finite()) {
            return Err(Error::Descriptor(format!("exponential weight needs c, gamma > 0, got {c}, {gamma}")));
        }
        Ok(Self::wrap(WeightKind::Exponential { c, gamma }))
    }

    /// Weight whose density is given by `formula`.
    pub fn density_expr(formula: &str) -> Result<Arc<Self>> {
        let expr = Expr::parse(formula)?;
        let rule = global_rule();
        for &t in rule.nodes.iter().chain([0.0].iter()) {
            let v = expr.eval(t);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Evaluation { r: t, msg: format!("density {v} is negative or not finite") });
            }
        }
        let w = Self::wrap(WeightKind::Density { formula: formula.to_string(), expr });
        if !(w.tail_at_breakpoint(0) > 0.0) {
            return Err(Error::Descriptor("density integrates to zero".into()));
        }
        w.terminal_check()?;
        Ok(w)
    }

    /// Weight whose tail `μ̂` is given by `formula`.
    pub fn tail_expr(formula: &str) -> Result<Arc<Self>> {
        let expr = Expr::parse(formula)?;
        let rule = global_rule();
        for &t in rule.nodes.iter().chain([0.0].iter()) {
            let d = expr.eval_dual(t);
            // Zero is tolerated away from the origin: fast-decaying tails underflow.
            if !d.v.is_finite() || d.v < 0.0 || (t == 0.0 && d.v == 0.0) {
                return Err(Error::Evaluation { r: t, msg: format!("tail {} is not positive and finite", d.v) });
            }
            if !d.d.is_finite() || d.d > 0.0 {
                return Err(Error::Evaluation { r: t, msg: format!("tail is increasing (derivative {})", d.d) });
            }
        }
        Ok(Self::wrap(WeightKind::Tail { formula: formula.to_string(), expr }))
    }

    fn derived(base: &Arc<Self>, op: DerivedOp, inner: Arc<Self>) -> Arc<Self> {
        Self::wrap(WeightKind::Derived(DerivedWeight { base: base.clone(), op, inner }))
    }

    /// `μ₊(r) = ∫_r^1 μ(t)/t dt`.
    pub fn mu_plus(base: &Arc<Self>) -> Arc<Self> {
        Self::derived(base, DerivedOp::MuPlus, base.clone())
    }

    /// `V_{ν,n}(r) = 2∫_r^1 t V_{ν,n−1}(t) dt`, `V_{ν,0} = ν`.
    pub fn iterate_v(base: &Arc<Self>, n: u32) -> Result<Arc<Self>> {
        if n > MAX_ITERATION_DEPTH {
            return Err(Error::UnsupportedDepth { n, max: MAX_ITERATION_DEPTH });
        }
        let mut cur = base.clone();
        for k in 1..=n {
            cur = Self::derived(base, DerivedOp::IterateV(k), cur);
        }
        Ok(cur)
    }

    /// `ω^{*,n}(r) = ∫_r^1 s ω^{*,n−1}(s) log(s/r) ds`, `ω^{*,0} = ω`.
    pub fn iterate_star(base: &Arc<Self>, n: u32) -> Result<Arc<Self>> {
        if n > MAX_ITERATION_DEPTH {
            return Err(Error::UnsupportedDepth { n, max: MAX_ITERATION_DEPTH });
        }
        let mut cur = base.clone();
        for k in 1..=n {
            cur = Self::derived(base, DerivedOp::IterateStar(k), cur);
        }
        Ok(cur)
    }

    /// `W^n = (1)^{*,n}`.
    pub fn w_n(n: u32) -> Result<Arc<Self>> {
        Self::iterate_star(&Self::lebesgue(), n)
    }

    /// `r ↦ μ̂(r)^p`.
    pub fn power_tail(base: &Arc<Self>, p: f64) -> Arc<Self> {
        Self::derived(base, DerivedOp::PowerTail(p), base.clone())
    }

    /// `r ↦ μ(r)(1−r)^η`.
    pub fn times_one_minus_r(base: &Arc<Self>, eta: f64) -> Arc<Self> {
        Self::derived(base, DerivedOp::TimesOneMinusR(eta), base.clone())
    }

    /// Short human-readable name, also accepted by [`RadialWeight::parse`]
    /// for the non-derived kinds.
    pub fn label(&self) -> String {
        match &self.kind {
            WeightKind::Standard { beta } => format!("std:{beta}"),
            WeightKind::Exponential { c, gamma } => format!("exp:{c}:{gamma}"),
            WeightKind::Density { formula, .. } => format!("expr:{formula}"),
            WeightKind::Tail { formula, .. } => format!("tail:{formula}"),
            WeightKind::Derived(d) => match d.op {
                DerivedOp::MuPlus => format!("mu_plus({})", d.base.label()),
                DerivedOp::IterateV(n) => format!("iterate_V({n},{})", d.base.label()),
                DerivedOp::IterateStar(n) => format!("iterate_star({n},{})", d.base.label()),
                DerivedOp::PowerTail(p) => format!("power_tail({p},{})", d.base.label()),
                DerivedOp::TimesOneMinusR(e) => format!("times_one_minus_r({e},{})", d.base.label()),
            },
        }
    }

    /// JSON descriptor.
    pub fn descriptor(&self) -> Value {
        match &self.kind {
            WeightKind::Standard { beta } => json!({"kind": "standard", "beta": beta}),
            WeightKind::Exponential { c, gamma } => json!({"kind": "exponential", "c": c, "gamma": gamma}),
            WeightKind::Density { formula, .. } => json!({"kind": "expr", "formula": formula}),
            WeightKind::Tail { formula, .. } => json!({"kind": "tail_expr", "formula": formula}),
            WeightKind::Derived(d) => {
                let base = d.base.descriptor();
                match d.op {
                    DerivedOp::MuPlus => json!({"kind": "derived", "op": "mu_plus", "base": base}),
                    DerivedOp::IterateV(n) => json!({"kind": "derived", "op": "iterate_V", "n": n, "base": base}),
                    DerivedOp::IterateStar(n) => json!({"kind": "derived", "op": "iterate_star", "n": n, "base": base}),
                    DerivedOp::PowerTail(p) => json!({"kind": "derived", "op": "power_tail", "p": p, "base": base}),
                    DerivedOp::TimesOneMinusR(e) => {
                        json!({"kind": "derived", "op": "times_one_minus_r", "eta": e, "base": base})
                    }
                }
            }
        }
    }

    /// Build from a JSON descriptor.
    pub fn from_descriptor(v: &Value) -> Result<Arc<Self>> {
        let bad = |m: &str| Error::Descriptor(m.to_string());
        let num = |k: &str| v.get(k).and_then(Value::as_f64).ok_or_else(|| bad(&format!("missing number '{k}'")));
        let kind = v.get("kind").and_then(Value::as_str).ok_or_else(|| bad("missing 'kind'"))?;
        match kind {
            "standard" => Self::standard(num("beta")?),
            "exponential" => Self::exponential(num("c")?, num("gamma")?),
            "expr" | "tail_expr" => {
                let f = v.get("formula").and_then(Value::as_str).ok_or_else(|| bad("missing 'formula'"))?;
                if kind == "expr" {
                    Self::density_expr(f)
                } else {
                    Self::tail_expr(f)
                }
            }
            "derived" => {
                let base = Self::from_descriptor(v.get("base").ok_or_else(|| bad("missing 'base'"))?)?;
                let op = v.get("op").and_then(Value::as_str).ok_or_else(|| bad("missing 'op'"))?;
                let n = || {
                    v.get("n").and_then(Value::as_u64).map(|n| n as u32).ok_or_else(|| bad("missing integer 'n'"))
                };
                match op {
                    "mu_plus" => Ok(Self::mu_plus(&base)),
                    "iterate_V" => Self::iterate_v(&base, n()?),
                    "iterate_star" => Self::iterate_star(&base, n()?),
                    "power_tail" => Ok(Self::power_tail(&base, num("p")?)),
                    "times_one_minus_r" => Ok(Self::times_one_minus_r(&base, num("eta")?)),
                    other => Err(bad(&format!("unknown derived op '{other}'"))),
                }
            }
            other => Err(bad(&format!("unknown kind '{other}'"))),
        }
    }

    /// Parse a shorthand (`std:β`, `exp:c:γ`, `expr:<formula>`,
    /// `tail:<formula>`) or a JSON descriptor.
    pub fn parse(s: &str) -> Result<Arc<Self>> {
        let s = s.trim();
        if s.starts_with('{') {
            let v: Value = serde_json::from_str(s).map_err(|e| Error::Descriptor(e.to_string()))?;
            return Self::from_descriptor(&v);
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Descriptor(format!("bad number '{t}'")));
        if let Some(rest) = s.strip_prefix("std:") {
            Self::standard(num(rest)?)
        } else if let Some(rest) = s.strip_prefix("exp:") {
            let mut it = rest.splitn(2, ':');
            let c = num(it.next().unwrap_or(""))?;
            let g = num(it.next().unwrap_or("1"))?;
            Self::exponential(c, g)
        } else if let Some(rest) = s.strip_prefix("expr:") {
            Self::density_expr(rest)
        } else if let Some(rest) = s.strip_prefix("tail:") {
            Self::tail_expr(rest)
        } else {
            Err(Error::Descriptor(format!("unrecognized weight '{s}'")))
        }
    }

    // ---- point evaluation ------------------------------------------------

    /// `μ(r)` for `0 ≤ r < 1`.
    pub fn evaluate(&self, r: f64) -> Result<f64> {
        check_r(r)?;
        if let WeightKind::Derived(DerivedWeight { op: DerivedOp::IterateStar(_), .. }) = self.kind {
            if r == 0.0 {
                return Err(Error::Domain("iterated star weight is undefined at r = 0".into()));
            }
        }
        let v = self.density_raw(r);
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Evaluation { r, msg: format!("weight value {v}") });
        }
        Ok(v)
    }

    fn density_raw(&self, r: f64) -> f64 {
        match &self.kind {
            WeightKind::Standard { beta } => {
                if *beta == 1.0 {
                    1.0
                } else {
                    beta * ((1.0 - r) * (1.0 + r)).powf(beta - 1.0)
                }
            }
            WeightKind::Exponential { c, gamma } => {
                let u = 1.0 - r;
                let ug = u.powf(*gamma);
                (c.ln() + gamma.ln() - (gamma + 1.0) * u.ln() - c / ug).exp()
            }
            WeightKind::Density { expr, .. } => expr.eval(r),
            WeightKind::Tail { expr, .. } => -expr.eval_dual(r).d,
            WeightKind::Derived(d) => self.derived_density(d, r),
        }
    }

    /// `log μ(r)`, analytic where available.
    fn log_density(&self, r: f64) -> f64 {
        match &self.kind {
            WeightKind::Exponential { c, gamma } => {
                let u = 1.0 - r;
                c.ln() + gamma.ln() - (gamma + 1.0) * u.ln() - c / u.powf(*gamma)
            }
            _ => self.density_raw(r).ln(),
        }
    }

    fn derived_density(&self, d: &DerivedWeight, r: f64) -> f64 {
        let b = &d.inner;
        match d.op {
            DerivedOp::PowerTail(p) => b.tail_raw(r).powf(p),
            DerivedOp::TimesOneMinusR(eta) => b.density_raw(r) * (1.0 - r).powf(eta),
            DerivedOp::MuPlus | DerivedOp::IterateV(_) | DerivedOp::IterateStar(_) => {
                let tables = self.step_tables(d);
                let breaks = &global_rule().breaks;
                let p = panel_of(r);
                let g = breaks[p + 1];
                let upper = p + 1;
                let partial = match d.op {
                    DerivedOp::MuPlus => gl_partial(|t| b.density_raw(t) / t, r, g),
                    DerivedOp::IterateV(_) => gl_partial(|t| 2.0 * t * b.density_raw(t), r, g),
                    _ => gl_partial(|t| t * (t / r).ln() * b.density_raw(t), r, g),
                };
                let rest = tables.k0[upper];
                match d.op {
                    DerivedOp::IterateStar(_) => partial + tables.log_part[upper] + (g / r).ln() * rest,
                    _ => partial + rest,
                }
            }
        }
    }

    fn step_tables(&self, d: &DerivedWeight) -> &StepTables {
        self.cache.step.get_or_init(|| {
            let atoms = d.inner.atoms();
            let rule = global_rule();
            let breaks = &rule.breaks;
            let np = breaks.len() - 1;
            let k = |t: f64| match d.op {
                DerivedOp::MuPlus => 1.0 / t,
                DerivedOp::IterateV(_) => 2.0 * t,
                _ => t,
            };
            let mut k0 = vec![0.0; np + 1];
            let mut acc = Neumaier::new();
            for p in (0..np).rev() {
                for i in (rule.panel_start[p]..rule.panel_start[p + 1]).rev() {
                    acc.add(atoms.m[i] * k(atoms.t[i]));
                }
                k0[p] = acc.value();
            }
            let mut log_part = Vec::new();
            if matches!(d.op, DerivedOp::IterateStar(_)) {
                log_part = vec![0.0; np + 1];
                for (p, slot) in log_part.iter_mut().enumerate().take(np) {
                    let g = breaks[p];
                    let start = rule.panel_start[p];
                    *slot = sum((start..atoms.t.len())
                        .rev()
                        .map(|i| atoms.m[i] * atoms.t[i] * (atoms.t[i] / g).ln()));
                }
            }
            StepTables { k0, log_part }
        })
    }

    // ---- discretization ----------------------------------------------------

    fn atoms(&self) -> &Atoms {
        self.cache.atoms.get_or_init(|| {
            let rule = global_rule();
            let t = rule.nodes.clone();
            let mut m: Vec<f64> = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * self.density_raw(*x)).collect();
            let breaks = &rule.breaks;
            let np = breaks.len() - 1;
            let last = rule.panel_start[np - 1]..rule.panel_start[np];
            let exact_tail = matches!(
                self.kind,
                WeightKind::Standard { .. } | WeightKind::Exponential { .. } | WeightKind::Tail { .. }
            );
            if exact_tail {
                rescale(&mut m[last], self.tail_raw(breaks[np - 1]));
            } else if let Some(mass) = self.terminal_model() {
                rescale(&mut m[last], mass);
            }
            Atoms { t, m }
        })
    }

    /// Power-law model `μ ≈ c(1−r)^{−θ}` on the last panel; returns its mass
    /// when the density blows up there.
    fn terminal_model(&self) -> Option<f64> {
        let h = (-(GRID_DEPTH as f64)).exp2();
        let (u1, u2) = (0.5 * h, 0.25 * h);
        let (v1, v2) = (self.density_raw(1.0 - u1), self.density_raw(1.0 - u2));
        if !(v1 > 0.0 && v2 > 0.0) {
            return None;
        }
        let theta = (v2 / v1).log2();
        if theta <= 1e-3 || theta >= 1.0 {
            return None;
        }
        let c = v1 * u1.powf(theta);
        Some(c * h.powf(1.0 - theta) / (1.0 - theta))
    }

    fn terminal_check(&self) -> Result<()> {
        let h = (-(GRID_DEPTH as f64)).exp2();
        let (v1, v2) = (self.density_raw(1.0 - 0.5 * h), self.density_raw(1.0 - 0.25 * h));
        if v1 > 0.0 && v2 > 0.0 && (v2 / v1).log2() >= 1.0 - 1e-6 {
            return Err(Error::Evaluation { r: 1.0 - h, msg: "density is not integrable at r = 1".into() });
        }
        Ok(())
    }

    // ---- tails -------------------------------------------------------------

    /// `μ̂(r) = ∫_r^1 μ(s) ds`.
    pub fn tail(&self, r: f64) -> Result<f64> {
        check_r(r)?;
        Ok(self.tail_raw(r))
    }

    /// `log μ̂(r)`, analytic for the exponential family (no underflow).
    pub fn log_tail(&self, r: f64) -> Result<f64> {
        check_r(r)?;
        Ok(match &self.kind {
            WeightKind::Exponential { c, gamma } => -c / (1.0 - r).powf(*gamma),
            WeightKind::Tail { expr, .. } => expr.eval_ln(r),
            _ => self.tail_raw(r).ln(),
        })
    }

    /// `log μ̂(1−u)`, taking the distance `u` to the boundary so closed-form
    /// tails keep full relative precision when `u` is tiny.
    pub fn log_tail_u(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::Domain(format!("boundary distance u = {u} not in (0, 1]")));
        }
        Ok(match &self.kind {
            WeightKind::Standard { beta } if *beta == 1.0 => u.ln(),
            WeightKind::Standard { beta } if *beta == 2.0 => (2.0 / 3.0 * u * u * (3.0 - u)).ln(),
            WeightKind::Standard { beta } => {
                let pref = 0.5 * beta * ln_beta(0.5, *beta).exp();
                (pref * beta_reg(*beta, 0.5, u * (2.0 - u))).ln()
            }
            WeightKind::Exponential { c, gamma } => -c / u.powf(*gamma),
            _ => self.log_tail(1.0 - u)?,
        })
    }

    fn tail_raw(&self, r: f64) -> f64 {
        match &self.kind {
            WeightKind::Standard { beta } => standard_tail(*beta, r),
            WeightKind::Exponential { c, gamma } => (-c / (1.0 - r).powf(*gamma)).exp(),
            WeightKind::Tail { expr, .. } => expr.eval(r),
            _ => {
                let table = self.tail_table();
                let p = panel_of(r);
                let g = global_rule().breaks[p + 1];
                gl_partial(|t| self.density_raw(t), r, g) + table[p + 1]
            }
        }
    }

    fn tail_at_breakpoint(&self, p: usize) -> f64 {
        self.tail_table()[p]
    }

    fn tail_table(&self) -> &Vec<f64> {
        self.cache.tail.get_or_init(|| {
            let rule = global_rule();
            let atoms = self.atoms();
            let np = rule.breaks.len() - 1;
            let mut out = vec![0.0; np + 1];
            let mut acc = Neumaier::new();
            for p in (0..np).rev() {
                for i in (rule.panel_start[p]..rule.panel_start[p + 1]).rev() {
                    acc.add(atoms.m[i]);
                }
                out[p] = acc.value();
            }
            out
        })
    }

    // ---- moments -----------------------------------------------------------

    /// `log μ_x`.
    pub fn log_moment(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::Domain(format!("moment index {x} must be finite and ≥ 0")));
        }
        let key = x.to_bits();
        if let Some(v) = self.cache.log_moments.read().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = self.compute_log_moment(x);
        if !v.is_finite() {
            return Err(Error::Quadrature { achieved: f64::NAN });
        }
        Ok(*self.cache.log_moments.write().unwrap().entry(key).or_insert(v))
    }

    /// `μ_x = ∫_0^1 s^x μ(s) ds`.
    pub fn moment(&self, x: f64) -> Result<f64> {
        Ok(self.log_moment(x)?.exp())
    }

    /// `μ_{2n+1}` for `n = 0..=n_max`.
    pub fn moments_odd(&self, n_max: usize) -> Result<Vec<f64>> {
        (0..=n_max).map(|n| self.moment((2 * n + 1) as f64)).collect()
    }

    fn compute_log_moment(&self, x: f64) -> f64 {
        let rule = global_rule();
        match &self.kind {
            WeightKind::Standard { beta } => {
                // (β/2) B((x+1)/2, β) = Γ(β+1)/2 · Γ(a)/Γ(a+β),  a = (x+1)/2
                let a = 0.5 * (x + 1.0);
                ln_gamma(beta + 1.0) - std::f64::consts::LN_2 - ln_gamma_ratio(a, *beta)
            }
            WeightKind::Exponential { .. } => {
                let ts: Vec<f64> = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(t, w)| w.ln() + x * t.ln() + self.log_density(*t))
                    .collect();
                log_sum_exp(&ts)
            }
            WeightKind::Tail { expr, .. } => {
                if x == 0.0 {
                    return expr.eval(0.0).ln();
                }
                // μ_x = x ∫ s^{x−1} μ̂(s) ds
                let ts: Vec<f64> = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(t, w)| w.ln() + (x - 1.0) * t.ln() + expr.eval_ln(*t))
                    .collect();
                x.ln() + log_sum_exp(&ts)
            }
            _ => {
                let a = self.atoms();
                let ts: Vec<f64> = a.t.iter().zip(&a.m).map(|(t, m)| m.ln() + x * t.ln()).collect();
                log_sum_exp(&ts)
            }
        }
    }

    /// Independent moment check by direct quadrature of the density on the
    /// global grid (no closed forms, no tail tricks). Used as a cross-check
    /// column by the CLI.
    pub fn moment_by_quadrature(&self, x: f64) -> f64 {
        let rule = global_rule();
        let ts: Vec<f64> = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(t, w)| w.ln() + x * t.ln() + self.log_density(*t))
            .collect();
        log_sum_exp(&ts).exp()
    }
}

fn rescale(m: &mut [f64], exact: f64) {
    let s = sum(m.iter().copied());
    if s > 0.0 && exact > 0.0 && exact.is_finite() {
        let f = exact / s;
        m.iter_mut().for_each(|v| *v *= f);
    }
}

fn gl_partial<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let gl = gauss_legendre(PARTIAL_ORDER);
    let (h, c) = (0.5 * (b - a), 0.5 * (b + a));
    h * sum(gl.nodes.iter().zip(&gl.weights).map(|(x, w)| w * f(c + h * x)))
}

/// `∫_r^1 β(1−s²)^{β−1} ds = (β/2) B(1/2, β) I_{1−r²}(β, 1/2)`.
pub fn standard_tail(beta: f64, r: f64) -> f64 {
    if beta == 1.0 {
        return 1.0 - r;
    }
    if beta == 2.0 {
        let u = 1.0 - r;
        return 2.0 / 3.0 * u * u * (2.0 + r);
    }
    let y = (1.0 - r) * (1.0 + r);
    let pref = 0.5 * beta * ln_beta(0.5, beta).exp();
    pref * beta_reg(beta, 0.5, y)
}
