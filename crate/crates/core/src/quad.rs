//! Adaptive Gauss–Kronrod quadrature and a log-window integrator for positive half-lines.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quadrature tolerances shared by every kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of interval bisections per adaptive integral.
    pub max_refinements: usize,
    /// Half-width of the window in `ln u` scanned for integrals over (0, ∞).
    pub truncation_radius: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { abs_tol: 1e-10, rel_tol: 1e-8, max_refinements: 4000, truncation_radius: 60.0 }
    }
}

impl QuadSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.truncation_radius > 0.0
            && self.max_refinements > 0
            && self.abs_tol.is_finite()
            && self.rel_tol.is_finite()
            && self.truncation_radius.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid quadrature spec {self:?}")))
        }
    }

    /// Same spec with tighter or looser tolerances.
    pub fn with_tol(self, rel_tol: f64, abs_tol: f64) -> Self {
        QuadSpec { rel_tol, abs_tol, ..self }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// An integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

impl Integral {
    pub const ZERO: Integral = Integral { value: 0.0, error: 0.0, evals: 0 };

    pub fn scale(self, c: f64) -> Integral {
        Integral { value: self.value * c, error: self.error * c.abs(), evals: self.evals }
    }
}

impl std::ops::Add for Integral {
    type Output = Integral;

    fn add(self, other: Integral) -> Integral {
        Integral { value: self.value + other.value, error: self.error + other.error, evals: self.evals + other.evals }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_64, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    let value = k * h;
    let raw = ((k - g) * h).abs();
    // Roundoff floor: the Kronrod sum cannot be trusted below a few ulps of its magnitude.
    let floor = 50.0 * f64::EPSILON * value.abs();
    Segment { a, b, value, error: if raw.is_nan() { f64::INFINITY } else { raw.max(floor) } }
}

/// Adaptive G7–K15 quadrature over `[a, b]`.
pub fn gauss_kronrod<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<Integral> {
    gauss_kronrod_breaks(f, &[a, b], spec)
}

/// Adaptive G7–K15 quadrature starting from the partition given by `breaks` (sorted).
pub fn gauss_kronrod_breaks<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], spec: &QuadSpec) -> Result<Integral> {
    if breaks.len() < 2 {
        return Ok(Integral::ZERO);
    }
    let mut heap = BinaryHeap::new();
    let mut settled: Vec<Segment> = Vec::new();
    let mut evals = 0usize;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod15(&mut f, w[0], w[1]));
            evals += 15;
        }
    }
    let mut refinements = 0usize;
    let mut value: f64 = heap.iter().map(|s| s.value).sum();
    let mut error: f64 = heap.iter().map(|s| s.error).sum();
    loop {
        if !value.is_finite() {
            return Err(Error::Tolerance { what: "quadrature (non-finite integrand)".into(), estimate: f64::INFINITY });
        }
        if error <= spec.target(value) || heap.is_empty() {
            // Resum exactly; the running totals only steer the refinement.
            let (v, e) = heap.iter().chain(settled.iter()).fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
            if e <= spec.target(v) || heap.is_empty() {
                return Ok(Integral { value: v, error: e, evals });
            }
            value = v;
            error = e;
        }
        if refinements >= spec.max_refinements {
            return Err(Error::Tolerance { what: "adaptive quadrature".into(), estimate: error });
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            settled.push(worst);
            continue;
        }
        let left = kronrod15(&mut f, worst.a, mid);
        let right = kronrod15(&mut f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        evals += 30;
        refinements += 1;
    }
}

/// ∫₀^∞ f(u) du for integrands that decay at both ends, through u = e^s.
///
/// The window in s is found by scanning `[-R, R]` (R = `truncation_radius`) and keeping
/// the range where |u f(u)| exceeds 1e-18 of its peak. Mass left at a clamped window
/// edge is folded into the error estimate.
pub fn half_line<F: FnMut(f64) -> f64>(mut f: F, spec: &QuadSpec) -> Result<Integral> {
    let r = spec.truncation_radius;
    let step = 0.5;
    let n = (2.0 * r / step).ceil() as usize;
    let mut h = |s: f64| {
        let u = s.exp();
        u * f(u)
    };
    let grid: Vec<f64> = (0..=n).map(|k| -r + k as f64 * step).collect();
    let vals: Vec<f64> = grid.iter().map(|&s| h(s)).collect();
    let peak = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !peak.is_finite() {
        return Err(Error::Tolerance { what: "half-line quadrature (non-finite integrand)".into(), estimate: f64::INFINITY });
    }
    if peak == 0.0 {
        return Ok(Integral { value: 0.0, error: 0.0, evals: vals.len() });
    }
    let cut = 1e-18 * peak;
    let first = vals.iter().position(|v| v.abs() > cut).unwrap_or(0);
    let last = vals.iter().rposition(|v| v.abs() > cut).unwrap_or(n);
    let lo = first.saturating_sub(1);
    let hi = (last + 1).min(n);
    // Unresolved tails at a clamped edge: assume at worst unit-scale decay in s.
    let mut tail = 0.0;
    if lo == 0 {
        tail += vals[0].abs();
    }
    if hi == n {
        tail += vals[n].abs();
    }
    let breaks: Vec<f64> = (lo..=hi).step_by(2).map(|k| grid[k]).chain(std::iter::once(grid[hi])).collect();
    let mut breaks = breaks;
    breaks.dedup();
    let body = gauss_kronrod_breaks(&mut h, &breaks, spec)?;
    let total = Integral { value: body.value, error: body.error + tail, evals: body.evals + vals.len() };
    if tail > spec.target(total.value) {
        return Err(Error::Tolerance { what: "half-line quadrature truncation".into(), estimate: total.error });
    }
    Ok(total)
}
