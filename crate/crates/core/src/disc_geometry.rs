//! Carleson squares, cones, the pseudohyperbolic metric and r-lattices.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default truncation radius for lattices built by the experiments.
pub const LATTICE_TRUNCATION: f64 = 1.0 - 1.0 / 1024.0;

/// `ρ(z, w) = |z − w| / |1 − z̄ w|`.
pub fn pseudo_distance(z: Complex64, w: Complex64) -> f64 {
    let num = (z - w).norm();
    if num == 0.0 {
        return 0.0;
    }
    let den = (Complex64::new(1.0, 0.0) - z.conj() * w).norm();
    (num / den).min(1.0 - f64::EPSILON / 2.0)
}

/// `β(z, w) = ½ log((1 + ρ)/(1 − ρ))`.
pub fn hyper_distance(z: Complex64, w: Complex64) -> f64 {
    pseudo_distance(z, w).atanh()
}

/// Wrap an angle difference to `(−π, π]`.
pub fn wrap_angle(d: f64) -> f64 {
    let mut x = d % (2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    } else if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

/// `z ∈ Γ(ξ)`, i.e. `|arg z − arg ξ| < 1 − |z|`. The origin lies in every cone.
pub fn in_cone(z: Complex64, xi: Complex64) -> bool {
    let m = z.norm();
    if m == 0.0 {
        return true;
    }
    wrap_angle(z.arg() - xi.arg()).abs() < 1.0 - m
}

/// Carleson square `S(a) = {z : |arg a − arg z| ≤ (1−|a|)/2, |z| ≥ |a|}`;
/// `S(0)` is the whole disc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlesonSquare {
    pub anchor: Complex64,
}

impl CarlesonSquare {
    pub fn new(anchor: Complex64) -> Self {
        CarlesonSquare { anchor }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        in_square(z, self)
    }
}

pub fn in_square(z: Complex64, s: &CarlesonSquare) -> bool {
    let ra = s.anchor.norm();
    if ra == 0.0 {
        return z.norm() < 1.0;
    }
    let rz = z.norm();
    if rz < ra || rz >= 1.0 {
        return false;
    }
    wrap_angle(z.arg() - s.anchor.arg()).abs() <= 0.5 * (1.0 - ra)
}

/// Euclidean center and radius of the hyperbolic disc `D(z, r) = {β(z,·) < r}`.
pub fn hyperbolic_disc_euclid(z: Complex64, r: f64) -> (Complex64, f64) {
    let t = r.tanh();
    let m2 = z.norm_sqr();
    let den = 1.0 - t * t * m2;
    (z * ((1.0 - t * t) / den), t * (1.0 - m2) / den)
}

/// Points sorted by angle inside one hyperbolic-radius bin.
#[derive(Debug, Clone, Default)]
struct Bin {
    items: Vec<(f64, Complex64)>,
}

impl Bin {
    fn insert(&mut self, z: Complex64) {
        let a = z.arg();
        let pos = self.items.partition_point(|(b, _)| *b < a);
        self.items.insert(pos, (a, z));
    }

    fn scan<F: FnMut(Complex64)>(&self, center: f64, half: f64, mut f: F) {
        if half >= PI || self.items.len() < 8 {
            self.items.iter().for_each(|(_, z)| f(*z));
            return;
        }
        let mut visit = |lo: f64, hi: f64| {
            let s = self.items.partition_point(|(b, _)| *b < lo);
            for (b, z) in &self.items[s..] {
                if *b > hi {
                    break;
                }
                f(*z);
            }
        };
        let (lo, hi) = (center - half, center + half);
        visit(lo.max(-PI), hi.min(PI));
        if lo < -PI {
            visit(lo + 2.0 * PI, PI);
        }
        if hi > PI {
            visit(-PI, hi - 2.0 * PI);
        }
    }
}

/// Spatial index keyed by hyperbolic distance from the origin.
#[derive(Debug, Clone)]
struct Index {
    width: f64,
    bins: Vec<Bin>,
}

impl Index {
    fn new(width: f64) -> Self {
        Index { width, bins: Vec::new() }
    }

    fn bin_of(&self, z: Complex64) -> usize {
        (z.norm().atanh() / self.width) as usize
    }

    fn insert(&mut self, z: Complex64) {
        let b = self.bin_of(z);
        if self.bins.len() <= b {
            self.bins.resize(b + 1, Bin::default());
        }
        self.bins[b].insert(z);
    }

    /// Visit every stored point that could lie within β-distance `radius` of `z`.
    fn near<F: FnMut(Complex64)>(&self, z: Complex64, radius: f64, mut f: F) {
        let rho = z.norm().atanh();
        let lo = ((rho - radius) / self.width).floor().max(0.0) as usize;
        let hi = ((rho + radius) / self.width).ceil() as usize;
        let (c, rad) = hyperbolic_disc_euclid(z, radius);
        let cm = c.norm();
        let half = if cm <= rad * 1.000001 { PI } else { (rad / cm).asin() * 1.000001 + 1e-12 };
        let center = if z.norm() == 0.0 { 0.0 } else { z.arg() };
        for b in lo..=hi.min(self.bins.len().saturating_sub(1)) {
            if b < self.bins.len() {
                self.bins[b].scan(center, half, &mut f);
            }
        }
    }

    fn min_distance(&self, z: Complex64, radius: f64, skip_self: bool) -> f64 {
        let mut best = f64::INFINITY;
        self.near(z, radius, |w| {
            if skip_self && w == z {
                return;
            }
            best = best.min(hyper_distance(z, w));
        });
        best
    }

    fn count_within(&self, z: Complex64, radius: f64) -> usize {
        let mut n = 0;
        self.near(z, radius, |w| {
            if hyper_distance(z, w) < radius {
                n += 1;
            }
        });
        n
    }
}

/// Summary of the post-hoc lattice checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeReport {
    pub min_separation: f64,
    pub covering_radius: f64,
    pub max_multiplicity: usize,
    /// Range of `(1−|w|²)/(1−|z|²)` for `w` on the boundary of `D(z, r)`.
    pub distortion: (f64, f64),
    pub probes: usize,
}

/// A truncated r-lattice.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub r: f64,
    pub points: Vec<Complex64>,
    /// Lattice points live on `|z| ≤ truncation`.
    pub truncation: f64,
    pub report: LatticeReport,
    index: Index,
}

fn probe_grid(step: f64, truncation: f64, phase: f64) -> Vec<Complex64> {
    let rho_max = truncation.atanh();
    let mut out = vec![Complex64::new(0.0, 0.0)];
    let mut k = 1;
    loop {
        let rho = k as f64 * step;
        if rho > rho_max {
            break;
        }
        let m = rho.tanh();
        let circ = PI * (2.0 * rho).sinh();
        let n = (circ / step).ceil().max(6.0) as usize;
        let off = phase * (k as f64 * 0.618_033_988_75).fract();
        for i in 0..n {
            let th = 2.0 * PI * (i as f64 + off) / n as f64 - PI;
            out.push(Complex64::from_polar(m, th));
        }
        k += 1;
    }
    out
}

/// Greedy r-lattice on `|z| ≤ truncation`.
///
/// Candidates come from a hyperbolic ring grid of step `r/4` whose ring
/// phases are drawn from `seed`. Separation, covering, multiplicity and the
/// distortion constants are verified afterwards.
pub fn build_lattice(r: f64, seed: u64, truncation: f64) -> Result<Lattice> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Domain(format!("lattice radius {r} outside (0, 1]")));
    }
    if !(0.0..1.0).contains(&truncation) {
        return Err(Error::Domain(format!("truncation {truncation} outside [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = r / 4.0;
    let rho_max = truncation.atanh();
    let mut index = Index::new(r / 2.0);
    let mut points = Vec::new();
    let try_add = |z: Complex64, index: &mut Index, points: &mut Vec<Complex64>| {
        if index.min_distance(z, r / 2.0, false) >= r / 2.0 {
            index.insert(z);
            points.push(z);
        }
    };
    try_add(Complex64::new(0.0, 0.0), &mut index, &mut points);
    let mut k = 1;
    loop {
        let rho = k as f64 * step;
        if rho > rho_max + 1e-15 {
            break;
        }
        let m = rho.tanh().min(truncation);
        let circ = PI * (2.0 * rho).sinh();
        let n = (circ / step).ceil().max(6.0) as usize;
        let phase: f64 = rng.gen();
        for i in 0..n {
            let th = 2.0 * PI * (i as f64 + phase) / n as f64 - PI;
            try_add(Complex64::from_polar(m, th), &mut index, &mut points);
        }
        k += 1;
    }
    // The outermost candidate ring sits exactly on the truncation circle.
    if rho_max > 0.0 {
        let circ = PI * (2.0 * rho_max).sinh();
        let n = (circ / step).ceil().max(6.0) as usize;
        for i in 0..n {
            let th = 2.0 * PI * i as f64 / n as f64 - PI;
            try_add(Complex64::from_polar(truncation, th), &mut index, &mut points);
        }
    }

    let min_sep = points
        .par_iter()
        .map(|z| index.min_distance(*z, r, true))
        .reduce(|| f64::INFINITY, f64::min);
    if min_sep < r / 2.0 * (1.0 - 1e-12) {
        return Err(Error::Separation { dist: min_sep, min: r / 2.0 });
    }
    let probes = probe_grid(r / 8.0, truncation, 0.5);
    let cover: Vec<(f64, usize)> = probes
        .par_iter()
        .map(|z| (index.min_distance(*z, 2.0 * r, false), index.count_within(*z, r)))
        .collect();
    let mut worst = (0.0, Complex64::new(0.0, 0.0));
    let mut mult = 0;
    for (z, (d, c)) in probes.iter().zip(&cover) {
        if *d > worst.0 {
            worst = (*d, *z);
        }
        mult = mult.max(*c);
    }
    if worst.0 > r {
        return Err(Error::Lattice { re: worst.1.re, im: worst.1.im, dist: worst.0 });
    }
    let distortion = points
        .par_iter()
        .map(|z| {
            let (c, rad) = hyperbolic_disc_euclid(*z, r);
            let base = 1.0 - z.norm_sqr();
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            for i in 0..32 {
                let w = c + Complex64::from_polar(rad, 2.0 * PI * i as f64 / 32.0);
                let q = (1.0 - w.norm_sqr()) / base;
                lo = lo.min(q);
                hi = hi.max(q);
            }
            (lo, hi)
        })
        .reduce(|| (f64::INFINITY, 0.0), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    let report = LatticeReport {
        min_separation: min_sep,
        covering_radius: worst.0,
        max_multiplicity: mult,
        distortion,
        probes: probes.len(),
    };
    Ok(Lattice { r, points, truncation, report, index })
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nearest lattice distance from `z` (searching within `2r`).
    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.index.min_distance(z, 2.0 * self.r, false)
    }

    /// CSV export, one `re,im` row per point.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("re,im\n");
        for z in &self.points {
            s.push_str(&format!("{},{}\n", z.re, z.im));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn distances() {
        assert_eq!(pseudo_distance(c(0.0, 0.0), c(0.3, 0.4)), 0.5);
        assert_eq!(pseudo_distance(c(0.5, 0.0), c(0.5, 0.0)), 0.0);
        assert!((pseudo_distance(c(0.5, 0.0), c(-0.5, 0.0)) - 0.8).abs() < 1e-15);
        assert!((hyper_distance(c(0.0, 0.0), c(0.5, 0.0)) - 0.5 * 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn cones_and_squares() {
        let xi = Complex64::from_polar(1.0, 0.7);
        assert!(in_cone(xi * 0.5, xi));
        assert!(!in_cone(Complex64::from_polar(0.9, 0.7 + 0.5), xi));
        assert!(in_cone(c(0.0, 0.0), xi));
        let s = CarlesonSquare::new(c(0.5, 0.0));
        assert!(s.contains(c(0.75, 0.0)));
        assert!(!s.contains(c(0.25, 0.0)));
        assert!(CarlesonSquare::new(c(0.0, 0.0)).contains(c(-0.99, 0.01)));
    }

    #[test]
    fn hyperbolic_disc_boundary() {
        let z = c(0.6, 0.3);
        let (cen, rad) = hyperbolic_disc_euclid(z, 0.4);
        for i in 0..16 {
            let w = cen + Complex64::from_polar(rad, i as f64);
            assert!((hyper_distance(z, w) - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn singleton_lattice() {
        let l = build_lattice(0.5, 1, 0.0).unwrap();
        assert_eq!(l.points, vec![c(0.0, 0.0)]);
    }
}
