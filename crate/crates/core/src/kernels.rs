//! Gaussian semigroup, transition density, Lévy density, 1-potential, the 1-Poisson and
//! 1-Green kernels of the half-space, Brownian Green functions and the stable half-space
//! Green function.
//!
//! Brownian motion here has generator Δ: g_u(x) = (4πu)^{−d/2} exp(−|x|²/(4u)), so every
//! coordinate has variance 2u.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quad::{gauss_kronrod, gauss_kronrod_breaks, half_line, Integral, QuadSpec};
use crate::special_fns::{gamma, ln_bessel_k, ln_gamma};
use crate::subordinator::{theta_density, ProcessParams};

/// A point of ℝ^d; the last coordinate is the distance to ∂H for H = {x_d > 0}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point { coords }
    }

    /// (0, …, 0, x_d) in dimension d.
    pub fn on_axis(d: usize, x_d: f64) -> Self {
        let mut coords = vec![0.0; d];
        coords[d - 1] = x_d;
        Point { coords }
    }

    /// Point with horizontal offset `h` along the first axis and height `x_d`.
    pub fn with_offset(d: usize, h: f64, x_d: f64) -> Self {
        let mut p = Point::on_axis(d, x_d);
        if d > 1 {
            p.coords[0] = h;
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn last(&self) -> f64 {
        *self.coords.last().expect("points have at least one coordinate")
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.coords.iter().zip(&other.coords).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Mirror image through ∂H.
    pub fn reflected(&self) -> Point {
        let mut p = self.clone();
        let d = p.dim();
        p.coords[d - 1] = -p.coords[d - 1];
        p
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.coords.iter().zip(&other.coords).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, c: f64) -> Point {
        Point { coords: self.coords.iter().map(|x| x * c).collect() }
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point { coords: vec![x] }
    }
}

/// Domains with explicit kernels or Monte Carlo support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    HalfSpace,
    HalfLine,
    Interval { r: f64 },
    Ball { r: f64 },
}

impl Domain {
    pub fn validate(&self, d: usize) -> Result<()> {
        match *self {
            Domain::HalfLine if d != 1 => Err(domain("the half-line needs d = 1")),
            Domain::Interval { r } | Domain::Ball { r } if !(r > 0.0) || !r.is_finite() => {
                Err(domain(format!("domain size must be positive, got {r}")))
            }
            Domain::Interval { .. } if d != 1 => Err(domain("the interval needs d = 1")),
            _ => Ok(()),
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        match *self {
            Domain::HalfSpace | Domain::HalfLine => x.last() > 0.0,
            Domain::Interval { r } => x.coords[0] > 0.0 && x.coords[0] < r,
            Domain::Ball { r } => x.norm() < r,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Domain::Interval { .. } | Domain::Ball { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Domain::HalfSpace => "halfspace",
            Domain::HalfLine => "halfline",
            Domain::Interval { .. } => "interval",
            Domain::Ball { .. } => "ball",
        }
    }
}

fn check_dim(x: &Point, params: &ProcessParams) -> Result<()> {
    if x.dim() != params.d {
        return Err(domain(format!("point has {} coordinates but d = {}", x.dim(), params.d)));
    }
    if x.coords.iter().any(|c| !c.is_finite()) {
        return Err(domain("point has non-finite coordinates"));
    }
    Ok(())
}

fn require_unit_mass(params: &ProcessParams, what: &str) -> Result<()> {
    if params.m != 1.0 {
        return Err(domain(format!("{what} is defined for m = 1, got m = {}", params.m)));
    }
    Ok(())
}

fn gauss_radial(u: f64, r2: f64, d: usize) -> f64 {
    (4.0 * PI * u).powf(-(d as f64) / 2.0) * (-r2 / (4.0 * u)).exp()
}

/// g_u(x) = (4πu)^{−d/2} exp(−|x|²/(4u)).
pub fn gaussian_kernel(u: f64, x: &Point) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(domain(format!("gaussian_kernel needs u > 0, got {u}")));
    }
    let r2 = x.coords.iter().map(|c| c * c).sum::<f64>();
    Ok(gauss_radial(u, r2, x.dim()))
}

/// ν_m(x) from the m = 1 Macdonald closed form and the scaling ν_m(x) = m^{(d+α)/α} ν_1(m^{1/α}x);
/// m = 0 gives the isotropic stable density.
pub fn levy_density(x: &Point, params: &ProcessParams) -> Result<f64> {
    params.validate()?;
    check_dim(x, params)?;
    let r = x.norm();
    if r == 0.0 {
        return Err(Error::Singularity("the Lévy density is infinite at the origin".into()));
    }
    levy_density_radial(r, params)
}

pub(crate) fn levy_density_radial(r: f64, params: &ProcessParams) -> Result<f64> {
    let (a, d) = (params.alpha, params.d as f64);
    let nu = 0.5 * (d + a);
    let ln_front = a.ln() - 0.5 * d * PI.ln() - ln_gamma(1.0 - 0.5 * a)?;
    if params.m == 0.0 {
        let ln_c = ln_front + (a - 1.0) * std::f64::consts::LN_2 + ln_gamma(nu)?;
        return Ok((ln_c - (d + a) * r.ln()).exp());
    }
    let s = params.m.powf(1.0 / a);
    let rs = r * s;
    let ln_nu1 = ln_front + 0.5 * (a - d) * std::f64::consts::LN_2 - nu * rs.ln() + ln_bessel_k(nu, rs)?;
    Ok(((d + a) / a * params.m.ln() + ln_nu1).exp())
}

/// ν_m(x) through its subordination integral α/(2Γ(1−α/2)) ∫ e^{−m^{2/α}u} g_u(x) u^{−1−α/2} du.
pub fn levy_density_integral(x: &Point, params: &ProcessParams, quad: &QuadSpec) -> Result<Integral> {
    params.validate()?;
    check_dim(x, params)?;
    let r2 = x.coords.iter().map(|c| c * c).sum::<f64>();
    if r2 == 0.0 {
        return Err(Error::Singularity("the Lévy density is infinite at the origin".into()));
    }
    let (beta, tilt, d) = (params.beta(), params.tilt(), params.d);
    let front = params.alpha / (2.0 * gamma(1.0 - beta)?);
    let body = half_line(|u| (-tilt * u).exp() * gauss_radial(u, r2, d) * u.powf(-1.0 - beta), quad)?;
    Ok(body.scale(front))
}

/// p_t(x) = ∫₀^∞ θ_α(t,u,m) g_u(x) du with the tilted subordinator density.
pub fn transition_density(t: f64, x: &Point, params: &ProcessParams) -> Result<f64> {
    Ok(transition_density_with(t, x, params, &QuadSpec::default())?.value)
}

/// Transition density with an explicit quadrature spec; returns the error estimate too.
pub fn transition_density_with(t: f64, x: &Point, params: &ProcessParams, quad: &QuadSpec) -> Result<Integral> {
    params.validate()?;
    check_dim(x, params)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(domain(format!("transition_density needs t > 0, got {t}")));
    }
    let r2 = x.coords.iter().map(|c| c * c).sum::<f64>();
    transition_density_radial(t, r2, params, quad)
}

pub(crate) fn transition_density_radial(t: f64, r2: f64, params: &ProcessParams, quad: &QuadSpec) -> Result<Integral> {
    transition_density_radial_by(r2, params.d, |u| theta_density(t, u, params), quad)
}

/// ∫ θ(u) g_u(r) du with a caller-supplied subordinator density (lets callers reuse θ values).
pub(crate) fn transition_density_radial_by<F: FnMut(f64) -> Result<f64>>(
    r2: f64,
    d: usize,
    mut theta: F,
    quad: &QuadSpec,
) -> Result<Integral> {
    let mut failure = None;
    let out = half_line(
        |u| match theta(u) {
            Ok(th) => th * gauss_radial(u, r2, d),
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        quad,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    out
}

/// U₁(x) = C(α,d) K_{(d−α)/2}(|x|)/|x|^{(d−α)/2}, C(α,d) = 2^{1−(d+α)/2}/(Γ(α/2)π^{d/2}); m = 1.
pub fn potential_u1(x: &Point, params: &ProcessParams) -> Result<f64> {
    params.validate()?;
    check_dim(x, params)?;
    require_unit_mass(params, "the 1-potential")?;
    let r = x.norm();
    if r == 0.0 {
        return Err(Error::Singularity("U_1 is singular at the origin".into()));
    }
    let (a, d) = (params.alpha, params.d as f64);
    let nu = 0.5 * (d - a);
    let ln_c = (1.0 - 0.5 * (d + a)) * std::f64::consts::LN_2 - ln_gamma(0.5 * a)? - 0.5 * d * PI.ln();
    Ok((ln_c + ln_bessel_k(nu, r)? - nu * r.ln()).exp())
}

/// 1-Poisson kernel of H for m = 1:
/// 2 sin(απ/2)/π (2π)^{−d/2} (x_d/(−u_d))^{α/2} K_{d/2}(|x−u|)/|x−u|^{d/2}.
pub fn poisson1_halfspace(x: &Point, u: &Point, params: &ProcessParams) -> Result<f64> {
    params.validate()?;
    check_dim(x, params)?;
    check_dim(u, params)?;
    require_unit_mass(params, "the 1-Poisson kernel")?;
    let (xd, ud) = (x.last(), u.last());
    if !(xd > 0.0) {
        return Err(domain(format!("x must lie in H, got x_d = {xd}")));
    }
    if !(ud < 0.0) {
        return Err(domain(format!("u must lie in the complement of H, got u_d = {ud}")));
    }
    let (a, d) = (params.alpha, params.d as f64);
    let r = x.dist(u);
    let ln = (2.0 * (0.5 * a * PI).sin() / PI).ln() - 0.5 * d * (2.0 * PI).ln() + 0.5 * a * (xd / -ud).ln() + ln_bessel_k(0.5 * d, r)?
        - 0.5 * d * r.ln();
    Ok(ln.exp())
}

/// Pairs closer than this are refused by `green1_halfspace`.
pub const NEAR_DIAGONAL: f64 = 1e-6;

/// 1-Green function of H for m = 1.
pub fn green1_halfspace(x: &Point, y: &Point, params: &ProcessParams) -> Result<f64> {
    Ok(green1_halfspace_with(x, y, params, &QuadSpec::default())?.value)
}

/// 1-Green function of H with an explicit quadrature spec.
///
/// Uses G¹(x,y) = A ∫₀^{4x_d y_d} τ^{α/2−1} (τ+r²)^{−d/4} K_{d/2}(√(τ+r²)) dτ, r = |x−y|,
/// A = 2^{1−α}/((2π)^{d/2}Γ(α/2)²), which is the t-integral of the closed form under τ = r²t.
pub fn green1_halfspace_with(x: &Point, y: &Point, params: &ProcessParams, quad: &QuadSpec) -> Result<Integral> {
    params.validate()?;
    check_dim(x, params)?;
    check_dim(y, params)?;
    require_unit_mass(params, "the 1-Green function")?;
    let (xd, yd) = (x.last(), y.last());
    if !(xd > 0.0 && yd > 0.0) {
        return Err(domain(format!("both points must lie in H (x_d = {xd}, y_d = {yd})")));
    }
    let r = x.dist(y);
    if r < NEAR_DIAGONAL {
        return Err(Error::Singularity(format!("|x - y| = {r:e} is below the near-diagonal cutoff")));
    }
    green1_core(r, xd, yd, params, quad)
}

pub(crate) fn green1_core(r: f64, xd: f64, yd: f64, params: &ProcessParams, quad: &QuadSpec) -> Result<Integral> {
    let (a, d) = (params.alpha, params.d as f64);
    let beta = 0.5 * a;
    let ln_a = (1.0 - a) * std::f64::consts::LN_2 - 0.5 * d * (2.0 * PI).ln() - 2.0 * ln_gamma(beta)?;
    let r2 = r * r;
    // τ beyond (r + 60)² − r² contributes below e^{−60} of the peak.
    let upper = (4.0 * xd * yd).min(120.0 * r + 3600.0);
    let nu = 0.5 * d;
    let f = |tau: f64| -> f64 {
        let q = tau + r2;
        let sq = q.sqrt();
        match ln_bessel_k(nu, sq) {
            Ok(lk) => (lk - 0.25 * d * q.ln()).exp(),
            Err(_) => f64::NAN,
        }
    };
    let split = r2.min(upper);
    // τ ∈ [0, split] through τ = s^{1/β}: τ^{β−1}dτ = ds/β.
    let head = gauss_kronrod(|s: f64| f(s.powf(1.0 / beta)) / beta, 0.0, split.powf(beta), quad)?;
    let mut total = head;
    if upper > split {
        let (lo, hi) = (split.ln(), upper.ln());
        let n = ((hi - lo) / 1.5).ceil().max(1.0) as usize;
        let breaks: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
        let tail = gauss_kronrod_breaks(
            |v: f64| {
                let tau = v.exp();
                tau.powf(beta) * f(tau)
            },
            &breaks,
            quad,
        )?;
        total = total + tail;
    }
    if !total.value.is_finite() {
        return Err(Error::Tolerance { what: "1-Green quadrature".into(), estimate: f64::INFINITY });
    }
    Ok(total.scale(ln_a.exp()))
}

/// C(d) = Γ(d/2−1)/(4π^{d/2}), the Newtonian constant for generator Δ, d ≥ 3.
pub fn newton_constant(d: usize) -> Result<f64> {
    if d < 3 {
        return Err(domain("the Newtonian constant needs d >= 3"));
    }
    Ok(gamma(d as f64 / 2.0 - 1.0)? / (4.0 * PI.powf(d as f64 / 2.0)))
}

/// Green function of Brownian motion with generator Δ killed on leaving `domain`.
pub fn green_gauss(dom: &Domain, x: &Point, y: &Point) -> Result<f64> {
    let d = x.dim();
    if y.dim() != d {
        return Err(domain("points of different dimension"));
    }
    dom.validate(d)?;
    if !dom.contains(x) || !dom.contains(y) {
        return Err(domain(format!("points must lie in the {}", dom.name())));
    }
    let r = x.dist(y);
    match *dom {
        Domain::HalfLine => Ok(x.coords[0].min(y.coords[0])),
        Domain::HalfSpace => match d {
            1 => Ok(x.coords[0].min(y.coords[0])),
            2 => {
                if r == 0.0 {
                    return Err(Error::Singularity("x = y".into()));
                }
                Ok((4.0 * x.last() * y.last() / (r * r)).ln_1p() / (4.0 * PI))
            }
            _ => {
                if r == 0.0 {
                    return Err(Error::Singularity("x = y".into()));
                }
                let e = 2.0 - d as f64;
                Ok(newton_constant(d)? * (r.powf(e) - x.dist(&y.reflected()).powf(e)))
            }
        },
        Domain::Interval { r: big } => {
            let (a, b) = (x.coords[0], y.coords[0]);
            Ok((a * (big - b)).min(b * (big - a)) / big)
        }
        Domain::Ball { r: big } => {
            let q = x.dot(x) * y.dot(y) / (big * big) - 2.0 * x.dot(y) + big * big;
            match d {
                1 => {
                    let (a, b) = (x.coords[0], y.coords[0]);
                    Ok(((a + big) * (big - b)).min((b + big) * (big - a)) / (2.0 * big))
                }
                2 => {
                    if r == 0.0 {
                        return Err(Error::Singularity("x = y".into()));
                    }
                    Ok((q / (r * r)).ln() / (4.0 * PI))
                }
                _ => {
                    if r == 0.0 {
                        return Err(Error::Singularity("x = y".into()));
                    }
                    let e = 2.0 - d as f64;
                    Ok(newton_constant(d)? * (r.powf(e) - q.powf(0.5 * e)))
                }
            }
        }
    }
}

/// Default constant of the stable half-space Green function, Γ(d/2)/(2^α π^{d/2} Γ(α/2)²).
pub fn stable_green_constant(params: &ProcessParams) -> Result<f64> {
    let (a, d) = (params.alpha, params.d as f64);
    Ok((ln_gamma(0.5 * d)? - a * std::f64::consts::LN_2 - 0.5 * d * PI.ln() - 2.0 * ln_gamma(0.5 * a)?).exp())
}

/// Green function of the isotropic stable process (m = 0) killed on leaving H.
pub fn green_stable_halfspace(x: &Point, y: &Point, params: &ProcessParams) -> Result<f64> {
    let c = stable_green_constant(params)?;
    Ok(green_stable_halfspace_with(x, y, params, c, &QuadSpec::default())?.value)
}

/// C |x−y|^{α−d} ∫₀^{4x_d y_d/|x−y|²} t^{α/2−1}(t+1)^{−d/2} dt with a caller-chosen constant C.
pub fn green_stable_halfspace_with(x: &Point, y: &Point, params: &ProcessParams, constant: f64, quad: &QuadSpec) -> Result<Integral> {
    params.validate()?;
    check_dim(x, params)?;
    check_dim(y, params)?;
    if params.m != 0.0 {
        return Err(domain("the stable Green function is defined for m = 0"));
    }
    if !(params.alpha < params.d as f64) {
        return Err(domain("the stable half-space Green function needs alpha < d"));
    }
    let (xd, yd) = (x.last(), y.last());
    if !(xd > 0.0 && yd > 0.0) {
        return Err(domain("both points must lie in H"));
    }
    let r = x.dist(y);
    if r == 0.0 {
        return Err(Error::Singularity("x = y".into()));
    }
    let a = 0.5 * params.alpha;
    let b = 0.5 * (params.d as f64 - params.alpha);
    let limit = 4.0 * xd * yd / (r * r);
    let body = incomplete_beta_integral(a, b, limit / (1.0 + limit), quad)?;
    Ok(body.scale(constant * r.powf(params.alpha - params.d as f64)))
}

/// ∫₀^{w_max} w^{a−1}(1−w)^{b−1} dw with both endpoint singularities removed by substitution.
fn incomplete_beta_integral(a: f64, b: f64, w_max: f64, quad: &QuadSpec) -> Result<Integral> {
    let mid = w_max.min(0.5);
    let head = gauss_kronrod(|s: f64| (1.0 - s.powf(1.0 / a)).powf(b - 1.0) / a, 0.0, mid.powf(a), quad)?;
    if w_max <= 0.5 {
        return Ok(head);
    }
    // 1 − w = v^{1/b}: (1−w)^{b−1} dw = dv/b.
    let v_hi = 0.5f64.powf(b);
    let v_lo = (1.0 - w_max).powf(b);
    let tail = gauss_kronrod(|v: f64| (1.0 - v.powf(1.0 / b)).powf(a - 1.0) / b, v_lo, v_hi, quad)?;
    Ok(head + tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_examples() {
        let g = gaussian_kernel(1.0, &Point::from(0.0)).unwrap();
        assert!((g - (4.0 * PI).powf(-0.5)).abs() < 1e-15);
        let g = gaussian_kernel(2.0, &Point::new(vec![2.0, 0.0])).unwrap();
        assert!((g - (-0.5f64).exp() / (8.0 * PI)).abs() < 1e-15);
        assert!(gaussian_kernel(0.0, &Point::from(1.0)).is_err());
    }

    #[test]
    fn brownian_green_examples() {
        let hl = green_gauss(&Domain::HalfLine, &Point::from(2.0), &Point::from(5.0)).unwrap();
        assert_eq!(hl, 2.0);
        let iv = green_gauss(&Domain::Interval { r: 4.0 }, &Point::from(1.0), &Point::from(2.0)).unwrap();
        assert_eq!(iv, 0.5);
        let hs = green_gauss(&Domain::HalfSpace, &Point::on_axis(3, 1.0), &Point::on_axis(3, 2.0)).unwrap();
        assert!((hs - (1.0 - 1.0 / 3.0) / (4.0 * PI)).abs() < 1e-15);
        assert!(green_gauss(&Domain::HalfLine, &Point::from(-1.0), &Point::from(1.0)).is_err());
    }

    #[test]
    fn poisson_example() {
        let p = ProcessParams::new(1.0, 1.0, 1).unwrap();
        let v = poisson1_halfspace(&Point::from(1.0), &Point::from(-1.0), &p).unwrap();
        assert!((v - (-2.0f64).exp() / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn refusals() {
        let p = ProcessParams::new(1.0, 1.0, 1).unwrap();
        assert!(matches!(levy_density(&Point::from(0.0), &p), Err(Error::Singularity(_))));
        assert!(matches!(green1_halfspace(&Point::from(1.0), &Point::from(1.0 + 1e-8), &p), Err(Error::Singularity(_))));
        assert!(potential_u1(&Point::from(1.0), &p.with_m(2.0)).is_err());
        assert!(poisson1_halfspace(&Point::from(1.0), &Point::from(0.5), &p).is_err());
    }
}
