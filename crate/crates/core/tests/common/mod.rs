//! Independent numerical helpers for oracles; deliberately simple and separate from the
//! library's adaptive quadrature.
#![allow(dead_code)]

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 1 { n + 1 } else { n };
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let x = a + k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// ∫₀^∞ f(u) du through u = e^s on [lo, hi] in s.
pub fn simpson_log<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    simpson(
        |s| {
            let u = s.exp();
            u * f(u)
        },
        lo,
        hi,
        n,
    )
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

/// K_ν(r) = ∫₀^∞ e^{−r cosh s} cosh(νs) ds by plain Simpson on a generous window.
pub fn bessel_k_simpson(nu: f64, r: f64) -> f64 {
    let expo = |s: f64| -r * s.cosh() + nu.abs() * s;
    let mut peak = f64::NEG_INFINITY;
    let mut top = 0.0;
    while top < 60.0 {
        peak = peak.max(expo(top));
        if expo(top) < peak - 60.0 {
            break;
        }
        top += 0.05;
    }
    simpson(|s| (-r * s.cosh()).exp() * (nu * s).cosh(), 0.0, top, 400_000)
}
