mod common;

use std::f64::consts::PI;

use common::{rel, simpson, simpson_log};
use relpot::kernels::*;
use relpot::special_fns::{bessel_k, gamma, reg_inc_gamma};
use relpot::subordinator::{theta_density, ProcessParams};
use relpot::QuadSpec;

fn params(alpha: f64, m: f64, d: usize) -> ProcessParams {
    ProcessParams::new(alpha, m, d).unwrap()
}

#[test]
fn gaussian_integrates_to_one() {
    let tot = simpson(|x| gaussian_kernel(0.7, &Point::from(x)).unwrap(), -20.0, 20.0, 4000);
    assert!((tot - 1.0).abs() < 1e-12);
    let g = gaussian_kernel(2.0, &Point::new(vec![2.0, 0.0])).unwrap();
    assert!((g - 0.024_13).abs() < 1e-5);
}

#[test]
fn levy_density_matches_subordination_integral() {
    let p = params(1.0, 1.0, 1);
    let v = levy_density(&Point::from(1.0), &p).unwrap();
    // Oracle: α/(2Γ(1/2)) ∫ e^{−u} g_u(1) u^{−3/2} du by Simpson in ln u.
    let oracle = 1.0 / (2.0 * PI.sqrt())
        * simpson_log(|u| (-u).exp() * (4.0 * PI * u).powf(-0.5) * (-1.0 / (4.0 * u)).exp() * u.powf(-1.5), -12.0, 5.0, 20_000);
    assert!(rel(v, oracle) < 1e-9, "{v} vs {oracle}");
    assert!((v - 0.191_593_021_937).abs() < 1e-10);
    assert!((v - 0.191_590_4).abs() < 5e-6);
    assert!(rel(v, bessel_k(1.0, 1.0).unwrap() / PI) < 1e-12);

    let p = params(0.7, 1.0, 3);
    let x = Point::new(vec![2.0, 0.0, 0.0]);
    let closed = levy_density(&x, &p).unwrap();
    let integral = levy_density_integral(&x, &p, &QuadSpec::default().with_tol(1e-12, 1e-300)).unwrap();
    assert!(rel(closed, integral.value) < 1e-8);
}

#[test]
fn levy_density_small_mass_limit() {
    let (a, d) = (1.3, 2usize);
    let c = a * 2f64.powf(a - 1.0) * gamma((d as f64 + a) / 2.0).unwrap() / (PI.powf(d as f64 / 2.0) * gamma(1.0 - a / 2.0).unwrap());
    let x = Point::new(vec![1.0, 0.0]);
    // Richardson in m: ν_m(x) − ν_0(x) is O(m^{...}); two small masses bracket the limit.
    let small = levy_density(&x, &params(a, 1e-6, d)).unwrap();
    assert!(rel(small, c) < 1e-3, "{small} vs {c}");
    assert!(rel(levy_density(&x, &params(a, 0.0, d)).unwrap(), c) < 1e-13);
}

#[test]
fn transition_density_fourier_oracle() {
    let p = params(1.0, 1.0, 1);
    let (t, x) = (1.0, 2.0);
    let v = transition_density(t, &Point::from(x), &p).unwrap();
    let oracle = simpson(|xi| (xi * x).cos() * (t - t * (xi * xi + 1.0).sqrt()).exp(), 0.0, 60.0, 200_000) / PI;
    assert!((v - oracle).abs() < 1e-5 * oracle, "{v} vs {oracle}");
    // The relativistic Cauchy density (t e^t/π) K₁(√(t²+x²))/√(t²+x²) agrees with the oracle.
    let s = (t * t + x * x).sqrt();
    let closed = t * t.exp() / PI * bessel_k(1.0, s).unwrap() / s;
    assert!(rel(closed, oracle) < 1e-6);
}

#[test]
fn transition_density_normalizes() {
    let p = params(1.5, 1.0, 1);
    let spec = QuadSpec::default().with_tol(1e-10, 1e-14);
    let f = |x: f64| transition_density_with(0.7, &Point::from(x), &p, &spec).unwrap().value;
    let near = relpot::quad::gauss_kronrod(|x| 2.0 * f(x), 0.0, 4.0, &spec).unwrap();
    let far = relpot::quad::gauss_kronrod(|x| 2.0 * f(x), 4.0, 80.0, &spec).unwrap();
    assert!((near.value + far.value - 1.0).abs() < 1e-6, "{}", near.value + far.value);
}

#[test]
fn transition_density_mass_scaling() {
    let (a, m, t) = (0.8, 3.0, 0.5);
    let x = Point::new(vec![1.0, 0.0]);
    let lhs = transition_density(t, &x, &params(a, m, 2)).unwrap();
    let s = m.powf(1.0 / a);
    let rhs = m.powf(2.0 / a) * transition_density(m * t, &x.scaled(s), &params(a, 1.0, 2)).unwrap();
    assert!(rel(lhs, rhs) < 1e-8, "{lhs} vs {rhs}");
}

#[test]
fn potential_matches_time_integral() {
    let p = params(1.2, 1.0, 3);
    let x = Point::new(vec![1.0, 0.0, 0.0]);
    let u1 = potential_u1(&x, &p).unwrap();
    let spec = QuadSpec::default().with_tol(1e-8, 1e-14);
    let oracle = simpson_log(|t| (-t).exp() * transition_density_with(t, &x, &p, &spec).unwrap().value, -9.0, 4.0, 400);
    assert!(rel(u1, oracle) < 1e-5, "{u1} vs {oracle}");
    let rot = Point::new(vec![0.6, 0.0, 0.8]);
    assert!(rel(potential_u1(&rot, &p).unwrap(), u1) < 1e-14);
}

#[test]
fn potential_small_distance_power_law() {
    let p = params(1.0, 1.0, 3);
    let ratios: Vec<f64> =
        [0.001, 0.003, 0.01].iter().map(|&r| potential_u1(&Point::new(vec![r, 0.0, 0.0]), &p).unwrap() / r.powf(1.0 - 3.0)).collect();
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(hi / lo < 1.1);
}

#[test]
fn poisson_kernel_mass_and_boundary_decay() {
    let p = params(1.0, 1.0, 1);
    let x = Point::from(1.0);
    let mass = simpson_log(|w| poisson1_halfspace(&x, &Point::from(-w), &p).unwrap(), -30.0, 5.0, 40_000);
    let target = 1.0 - reg_inc_gamma(0.5, 1.0).unwrap();
    assert!((mass - target).abs() < 1e-4, "{mass} vs {target}");
    let u = Point::from(-1.0);
    let a = poisson1_halfspace(&Point::from(1e-4), &u, &p).unwrap();
    let b = poisson1_halfspace(&Point::from(1e-2), &u, &p).unwrap();
    let slope = (b / a).ln() / 100f64.ln();
    assert!((slope - 0.5).abs() < 0.01, "{slope}");
    let v = poisson1_halfspace(&x, &u, &p).unwrap();
    assert!((v - 0.021_53).abs() < 1e-5);
}

/// Oracle for G¹ in its original form, Simpson in t after t = s^{1/β}.
fn green1_oracle(r: f64, xd: f64, yd: f64, a: f64, d: usize) -> f64 {
    let beta = a / 2.0;
    let df = d as f64;
    let limit = (4.0 * xd * yd / (r * r)).min((1.0 + 70.0 / r).powi(2));
    let c = 2f64.powf(1.0 - a) * r.powf(a - df / 2.0) / ((2.0 * PI).powf(df / 2.0) * gamma(beta).unwrap().powi(2));
    let body = |t: f64| (t + 1.0).powf(-df / 4.0) * common::bessel_k_simpson(df / 2.0, r * (t + 1.0).sqrt());
    // Near zero: t^{β−1}dt = ds/β; beyond t = 1 plain Simpson in ln t.
    let head = simpson(|s| body(s.powf(1.0 / beta)) / beta, 0.0, limit.min(1.0).powf(beta), 200);
    let tail = if limit > 1.0 {
        simpson(
            |v| {
                let t = v.exp();
                t.powf(beta) * body(t)
            },
            0.0,
            limit.ln(),
            200,
        )
    } else {
        0.0
    };
    c * (head + tail)
}

#[test]
fn green1_matches_original_form() {
    for &(a, d, xd, yd, h) in &[(1.5, 1usize, 0.5, 1.3, 0.0), (1.0, 2, 0.2, 0.7, 0.3), (0.5, 3, 2.0, 1.0, 1.5)] {
        let p = params(a, 1.0, d);
        let x = Point::with_offset(d, 0.0, xd);
        let y = Point::with_offset(d, h, yd);
        let v = green1_halfspace(&x, &y, &p).unwrap();
        let o = green1_oracle(x.dist(&y), xd, yd, a, d);
        assert!(rel(v, o) < 1e-6, "alpha={a} d={d}: {v} vs {o}");
    }
}

#[test]
fn green1_is_symmetric() {
    let p = params(1.2, 1.0, 3);
    let pairs = [([0.3, -1.0, 0.4], [1.0, 0.5, 2.0]), ([0.0, 0.0, 0.05], [0.1, 0.0, 0.07]), ([2.0, 1.0, 5.0], [0.0, 0.0, 0.5])];
    for (a, b) in pairs {
        let x = Point::new(a.to_vec());
        let y = Point::new(b.to_vec());
        let g1 = green1_halfspace(&x, &y, &p).unwrap();
        let g2 = green1_halfspace(&y, &x, &p).unwrap();
        assert!(rel(g1, g2) < 1e-10);
    }
}

#[test]
fn stable_green_deep_interior() {
    for &a in &[0.5, 1.0] {
        let p = params(a, 0.0, 3);
        let x = Point::new(vec![0.0, 0.0, 1000.0]);
        let y = Point::new(vec![1.0, 0.0, 1000.0]);
        let v = green_stable_halfspace(&x, &y, &p).unwrap();
        let c = stable_green_constant(&p).unwrap();
        // ∫₀^∞ t^{α/2−1}(1+t)^{−3/2} dt = B(α/2, (3−α)/2).
        let b = gamma(a / 2.0).unwrap() * gamma((3.0 - a) / 2.0).unwrap() / gamma(1.5).unwrap();
        assert!(rel(v, c * b) < 1e-6, "alpha={a}: {v} vs {}", c * b);
    }
}

#[test]
fn stable_green_boundary_slope() {
    let p = params(1.0, 0.0, 3);
    let y = Point::new(vec![1.0, 0.0, 1.0]);
    let a = green_stable_halfspace(&Point::on_axis(3, 1e-4), &y, &p).unwrap();
    let b = green_stable_halfspace(&Point::on_axis(3, 1e-2), &y, &p).unwrap();
    let slope = (b / a).ln() / 100f64.ln();
    assert!((slope - 0.5).abs() < 0.01, "{slope}");
}

#[test]
fn newton_constant_from_gaussian_time_integral() {
    for d in 3..=5usize {
        let x = Point::new({
            let mut v = vec![0.0; d];
            v[0] = 1.3;
            v
        });
        let oracle = simpson_log(|u| gaussian_kernel(u, &x).unwrap(), -8.0, 30.0, 20_000);
        let c = newton_constant(d).unwrap() * 1.3f64.powf(2.0 - d as f64);
        assert!(rel(c, oracle) < 1e-6, "d={d}");
    }
    let hs = green_gauss(&Domain::HalfSpace, &Point::on_axis(3, 1.0), &Point::on_axis(3, 2.0)).unwrap();
    assert!((hs - 0.053_05).abs() < 1e-5);
}

#[test]
fn lemma_bounds_with_fitted_constants() {
    // p_t(x) ≤ c(d)/|x|^d with the explicit c(d) = (d/(2π))^{d/2} e^{−d/2} of the Gaussian sup bound,
    // and max p_t ≤ c(t^{−d/2} + t^{−d/α}) with a fitted c.
    for &(a, d) in &[(0.5, 1usize), (1.0, 1), (1.5, 2)] {
        let p = params(a, 1.0, d);
        let cd = (d as f64 / (2.0 * PI)).powf(d as f64 / 2.0) * (-(d as f64) / 2.0).exp();
        let mut fitted = 0.0f64;
        for &t in &[0.05, 0.3, 1.0, 4.0, 20.0] {
            for &r in &[0.1, 0.5, 1.0, 3.0, 10.0] {
                let x = Point::with_offset(d, 0.0, r);
                let v = transition_density(t, &x, &p).unwrap();
                assert!(v * r.powi(d as i32) <= cd * (1.0 + 1e-8), "alpha={a} t={t} r={r}");
            }
            let peak = transition_density(t, &Point::with_offset(d, 0.0, 1e-9), &p).unwrap();
            fitted = fitted.max(peak / (t.powf(-(d as f64) / 2.0) + t.powf(-(d as f64) / a)));
        }
        eprintln!("alpha={a} d={d}: fitted max-density constant {fitted:.4}");
        assert!(fitted.is_finite() && fitted > 0.0);
    }
}

#[test]
fn chapman_kolmogorov_one_dimension() {
    let p = params(1.2, 1.0, 1);
    let spec = QuadSpec::default().with_tol(1e-8, 1e-14);
    let (s, t) = (0.3, 0.7);
    for &w in &[0.0, 0.8, 2.5] {
        let conv = relpot::quad::gauss_kronrod_breaks(
            |z| {
                transition_density_with(s, &Point::from(z), &p, &spec).unwrap().value
                    * transition_density_with(t, &Point::from(w - z), &p, &spec).unwrap().value
            },
            &[-40.0, -4.0, -1.0, 0.0, w, w + 1.0, w + 4.0, w + 40.0],
            &QuadSpec::default().with_tol(1e-7, 1e-12),
        )
        .unwrap();
        let direct = transition_density(s + t, &Point::from(w), &p).unwrap();
        assert!((conv.value - direct).abs() < 1e-4 * direct, "w={w}: {} vs {direct}", conv.value);
    }
}

#[test]
fn theta_upper_bound_fitted_constant() {
    for &a in &[0.5, 1.0, 1.5] {
        let p = params(a, 0.0, 1);
        let mut c = 0.0f64;
        for &t in &[0.1, 1.0, 10.0] {
            for k in -6..=8 {
                let u = 10f64.powf(k as f64 / 2.0);
                c = c.max(theta_density(t, u, &p).unwrap() / (t * u.powf(-1.0 - a / 2.0)));
            }
        }
        eprintln!("alpha={a}: theta <= {c:.4} t u^(-1-alpha/2)");
        assert!(c.is_finite() && c > 0.0 && c < 10.0);
    }
}
