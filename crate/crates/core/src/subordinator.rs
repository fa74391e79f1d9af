//! The α/2-stable subordinator, its exponential tilt by the mass m, and samplers.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quad::{gauss_kronrod, QuadSpec};

/// Stability index, mass and dimension of the process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessParams {
    pub alpha: f64,
    pub m: f64,
    pub d: usize,
}

impl ProcessParams {
    pub fn new(alpha: f64, m: f64, d: usize) -> Result<Self> {
        let p = ProcessParams { alpha, m, d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(domain(format!("alpha must lie in (0, 2), got {}", self.alpha)));
        }
        if !(self.m >= 0.0) || !self.m.is_finite() {
            return Err(domain(format!("m must be finite and >= 0, got {}", self.m)));
        }
        if self.d < 1 {
            return Err(domain("dimension must be at least 1"));
        }
        Ok(())
    }

    /// Index of the subordinator, α/2.
    pub fn beta(&self) -> f64 {
        0.5 * self.alpha
    }

    /// m^{2/α}, the tilt applied to the subordinator density.
    pub fn tilt(&self) -> f64 {
        if self.m == 0.0 {
            0.0
        } else {
            self.m.powf(2.0 / self.alpha)
        }
    }

    pub fn with_m(self, m: f64) -> Self {
        ProcessParams { m, ..self }
    }

    pub fn with_d(self, d: usize) -> Self {
        ProcessParams { d, ..self }
    }
}

/// Monte Carlo settings. Results depend only on these values, never on `workers`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub n_samples: usize,
    pub dt: f64,
    pub master_seed: u64,
    /// Worker threads; 0 lets the thread pool decide.
    pub workers: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { n_samples: 100_000, dt: 0.02, master_seed: 0, workers: 0 }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        Ok(())
    }
}

/// Random stream for one path (or one draw sequence), keyed by seed, salt and index.
pub fn stream_rng(master_seed: u64, salt: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}

fn theta_spec() -> QuadSpec {
    QuadSpec { abs_tol: 1e-300, rel_tol: 1e-13, max_refinements: 4000, truncation_radius: 60.0 }
}

/// ln a(φ) for Zolotarev's/Kanter's function with index β, using the complement
/// ψ = π − φ on the upper half so that sin stays accurate near both endpoints.
#[inline]
fn ln_zolotarev_a(beta: f64, phi: f64, psi: f64) -> f64 {
    let c = 1.0 - beta;
    let (s_beta, s_c, s_one) = if phi <= psi {
        ((beta * phi).sin(), (c * phi).sin(), phi.sin())
    } else {
        ((beta * PI - beta * psi).sin(), (c * PI - c * psi).sin(), psi.sin())
    };
    (beta / c) * s_beta.ln() + s_c.ln() - s_one.ln() / c
}

fn zolotarev_a0(beta: f64) -> f64 {
    beta.powf(beta / (1.0 - beta)) * (1.0 - beta)
}

/// (1/π) ∫₀^π g(φ) dφ split at π/2, with g receiving ln a(φ).
fn zolotarev_integral<G: Fn(f64) -> f64>(beta: f64, g: G) -> Result<f64> {
    let spec = theta_spec();
    let lower = gauss_kronrod(|phi| g(ln_zolotarev_a(beta, phi, PI - phi)), 0.0, 0.5 * PI, &spec)?;
    let upper = gauss_kronrod(|psi| g(ln_zolotarev_a(beta, PI - psi, psi)), 0.0, 0.5 * PI, &spec)?;
    Ok((lower.value + upper.value) / PI)
}

/// Density of the untilted subordinator at time 1.
fn theta_unit(beta: f64, x: f64) -> Result<f64> {
    let c = 1.0 - beta;
    let z = x.powf(-beta / c);
    let a0 = zolotarev_a0(beta);
    if a0 * z > 745.0 {
        return Ok(0.0);
    }
    let inner = zolotarev_integral(beta, |ln_a| {
        let a = ln_a.exp();
        if !a.is_finite() {
            return 0.0;
        }
        a * (-(a - a0) * z).exp()
    })?;
    Ok((beta / c) * x.powf(-1.0 / c) * (-a0 * z).exp() * inner)
}

/// Distribution function of the untilted subordinator at time 1.
fn theta_unit_cdf(beta: f64, x: f64) -> Result<f64> {
    let z = x.powf(-beta / (1.0 - beta));
    if zolotarev_a0(beta) * z > 745.0 {
        return Ok(0.0);
    }
    let v = zolotarev_integral(beta, |ln_a| {
        let a = ln_a.exp();
        if !a.is_finite() {
            return 0.0;
        }
        (-a * z).exp()
    })?;
    Ok(v.clamp(0.0, 1.0))
}

fn check_tu(t: f64, u: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(domain(format!("subordinator time must be positive, got {t}")));
    }
    if !(u > 0.0) || !u.is_finite() {
        return Err(domain(format!("subordinator level must be positive, got {u}")));
    }
    Ok(())
}

/// θ_α(t, u, m) = e^{mt} θ_α(t, u) e^{−m^{2/α} u}.
pub fn theta_density(t: f64, u: f64, params: &ProcessParams) -> Result<f64> {
    params.validate()?;
    check_tu(t, u)?;
    let beta = params.beta();
    let scale = t.powf(-1.0 / beta);
    let base = scale * theta_unit(beta, scale * u)?;
    if params.m == 0.0 {
        return Ok(base);
    }
    Ok(base * (params.m * t - params.tilt() * u).exp())
}

/// P(T ≤ u) for the untilted subordinator (the mass m is ignored).
pub fn theta_cdf(t: f64, u: f64, params: &ProcessParams) -> Result<f64> {
    params.validate()?;
    check_tu(t, u)?;
    let beta = params.beta();
    theta_unit_cdf(beta, t.powf(-1.0 / beta) * u)
}

/// E e^{−λ T_α(t, m)} = e^{mt} e^{−t (λ + m^{2/α})^{α/2}}.
pub fn subordinator_laplace(lambda: f64, t: f64, params: &ProcessParams) -> Result<f64> {
    params.validate()?;
    let tilt = params.tilt();
    if !(lambda >= -tilt) {
        return Err(domain(format!("lambda = {lambda} is below -m^(2/alpha) = {}", -tilt)));
    }
    if !(t > 0.0) {
        return Err(domain(format!("time must be positive, got {t}")));
    }
    Ok((params.m * t - t * (lambda + tilt).powf(params.beta())).exp())
}

/// Sampler for increments of the tilted subordinator over a fixed time step.
#[derive(Debug, Clone, Copy)]
pub struct IncrementSampler {
    beta: f64,
    scale: f64,
    tilt: f64,
    exponent: f64,
}

impl IncrementSampler {
    pub fn new(t: f64, params: &ProcessParams) -> Result<Self> {
        params.validate()?;
        if !(t > 0.0) || !t.is_finite() {
            return Err(domain(format!("increment length must be positive, got {t}")));
        }
        let beta = params.beta();
        Ok(IncrementSampler { beta, scale: t.powf(1.0 / beta), tilt: params.tilt(), exponent: (1.0 - beta) / beta })
    }

    /// Kanter's representation: (a(U)/E)^{(1−β)/β}, U uniform on (0, π), E standard exponential.
    #[inline]
    pub fn draw_untilted<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let phi = loop {
            let v: f64 = rng.random();
            if v > 0.0 {
                break v * PI;
            }
        };
        let e: f64 = Exp1.sample(rng);
        let ln_a = ln_zolotarev_a(self.beta, phi, PI - phi);
        self.scale * (self.exponent * (ln_a - e.ln())).exp()
    }

    /// One tilted draw together with the number of proposals it took.
    #[inline]
    pub fn draw_counted<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, u64) {
        let mut trials = 0u64;
        loop {
            trials += 1;
            let s = self.draw_untilted(rng);
            if self.tilt == 0.0 {
                return (s, trials);
            }
            let v: f64 = rng.random();
            if v < (-self.tilt * s).exp() {
                return (s, trials);
            }
        }
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.draw_counted(rng).0
    }
}

/// A draw from θ_α(t, ·, m) by rejection from the untilted law.
pub fn sample_increment<R: Rng + ?Sized>(t: f64, params: &ProcessParams, rng: &mut R) -> Result<f64> {
    Ok(IncrementSampler::new(t, params)?.draw(rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_one_half_closed_form() {
        let p = ProcessParams::new(1.0, 0.0, 1).unwrap();
        for &(t, u) in &[(1.0f64, 1.0f64), (1.0, 0.05), (2.0, 7.0), (0.3, 300.0)] {
            let exact = t * u.powf(-1.5) * (-t * t / (4.0 * u)).exp() / (2.0 * PI.sqrt());
            let v = theta_density(t, u, &p).unwrap();
            assert!((v / exact - 1.0).abs() < 1e-11, "t={t} u={u}: {v} vs {exact}");
        }
        let cdf = theta_cdf(1.0, 1.0, &p).unwrap();
        assert!((cdf - crate::special_fns::erfc(0.5)).abs() < 1e-12);
    }

    #[test]
    fn tilt_is_pointwise() {
        let p0 = ProcessParams::new(0.7, 0.0, 1).unwrap();
        let p1 = p0.with_m(1.0);
        for &u in &[0.1, 1.0, 5.0] {
            let a = theta_density(2.0, u, &p1).unwrap();
            let b = (2.0f64).exp() * (-u).exp() * theta_density(2.0, u, &p0).unwrap();
            assert!((a / b - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = ProcessParams::new(1.0, 1.0, 1).unwrap();
        assert!(theta_density(0.0, 1.0, &p).is_err());
        assert!(theta_density(1.0, -1.0, &p).is_err());
        assert!(subordinator_laplace(-1.5, 1.0, &p).is_err());
        assert!(ProcessParams::new(2.0, 1.0, 1).is_err());
        assert!(ProcessParams::new(1.0, -1.0, 1).is_err());
        assert!(ProcessParams::new(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn laplace_arithmetic() {
        let p = ProcessParams::new(1.0, 1.0, 1).unwrap();
        assert!((subordinator_laplace(3.0, 2.0, &p).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert!((subordinator_laplace(-1.0, 1.7, &p).unwrap() - 1.7f64.exp()).abs() < 1e-12);
    }
}
