//! Identity checks: equalities that hold exactly, checked by quadrature or within Monte Carlo
//! error.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::kernels::{
    green1_core, green_gauss, green_stable_halfspace_with, levy_density, levy_density_integral, stable_green_constant,
    transition_density_radial, transition_density_radial_by, Domain, Point,
};
use crate::montecarlo::{exit_statistics, mean_value_run, Cell, Target};
use crate::quad::{gauss_kronrod, gauss_kronrod_breaks, half_line, Integral, QuadSpec};
use crate::special_fns::reg_inc_gamma;
use crate::subordinator::{subordinator_laplace, theta_density, McConfig, ProcessParams};

use super::{Check, GridPoint, Report, ReportBuilder, VerifyConfig};

pub(super) fn run(check: &Check, cfg: &VerifyConfig, hash: &str) -> Result<Report> {
    let mut b = ReportBuilder::new(check, cfg, hash);
    let g = &cfg.identities;
    let tol = match check.name {
        "laplace" => {
            laplace(&mut b, cfg)?;
            Some(g.laplace.tolerance)
        }
        "normalization" => {
            normalization(&mut b, cfg)?;
            Some(g.normalization.tolerance)
        }
        "levy-reps" => {
            levy_reps(&mut b, cfg)?;
            Some(g.levy_reps.tolerance)
        }
        "green1-mass" => {
            mass(&mut b, cfg)?;
            Some(g.green1_mass.tolerance)
        }
        "scaling" => {
            scaling(&mut b, cfg)?;
            Some(g.scaling.tolerance)
        }
        "chapman-kolmogorov" => {
            chapman(&mut b, cfg)?;
            Some(g.chapman_kolmogorov.tolerance)
        }
        "gauss-lower" => {
            gauss_lower(&mut b, cfg)?;
            None
        }
        "ikeda-watanabe" => {
            ikeda(&mut b, cfg)?;
            None
        }
        other => return Err(Error::Lookup { name: other.into(), known: vec![] }),
    };
    Ok(b.finish_identity(tol))
}

fn point(x: Vec<f64>, d: usize, alpha: f64, m: f64) -> GridPoint {
    GridPoint { x, y: None, t: None, r: None, d, alpha, m }
}

fn tight(q: &QuadSpec) -> QuadSpec {
    q.with_tol(q.rel_tol.min(1e-10), 1e-300)
}

/// θ(t, ·) with memoized values; repeated densities at one t mostly reuse the same u-nodes.
struct ThetaMemo<'a> {
    t: f64,
    p: &'a ProcessParams,
    values: HashMap<u64, f64>,
}

impl<'a> ThetaMemo<'a> {
    fn new(t: f64, p: &'a ProcessParams) -> Self {
        ThetaMemo { t, p, values: HashMap::new() }
    }

    fn density(&mut self, r2: f64, quad: &QuadSpec) -> Result<Integral> {
        let (t, p) = (self.t, self.p);
        let values = &mut self.values;
        transition_density_radial_by(
            r2,
            p.d,
            |u| match values.get(&u.to_bits()) {
                Some(&v) => Ok(v),
                None => {
                    let v = theta_density(t, u, p)?;
                    values.insert(u.to_bits(), v);
                    Ok(v)
                }
            },
            quad,
        )
    }
}

fn rel_residual(value: f64, reference: f64) -> f64 {
    ((value - reference) / reference).abs()
}

fn laplace(b: &mut ReportBuilder, cfg: &VerifyConfig) -> Result<()> {
    let g = &cfg.identities.laplace;
    let quad = tight(&cfg.quad);
    b.note("x holds λ; residuals are absolute");
    for &alpha in &cfg.alphas {
        let p = ProcessParams::new(alpha, cfg.m, 1)?;
        for &t in &g.t {
            for &lambda in &g.lambda {
                let mut failure = None;
                let num = half_line(
                    |u| match theta_density(t, u, &p) {
                        Ok(th) => (-lambda * u).exp() * th,
                        Err(e) => {
                            failure.get_or_insert(e);
                            f64::NAN
                        }
                    },
                    &quad,
                );
                if let Some(e) = failure {
                    return Err(e);
                }
                let num = num?;
                let exact = subordinator_laplace(lambda, t, &p)?;
                let mut gp = point(vec![lambda], 1, alpha, cfg.m);
                gp.t = Some(t);
                b.residual_row(gp, num.value, num.error, exact, (num.value - exact).abs(), g.tolerance, "all");
            }
        }
    }
    Ok(())
}

/// ∫_ℝ p_t(x) dx for d = 1.
pub(crate) fn total_mass_1d(t: f64, p: &ProcessParams, quad: &QuadSpec) -> Result<Integral> {
    let inner = tight(quad);
    let mut memo = ThetaMemo::new(t, p);
    let mut failure = None;
    // p_t(x) decays like e^{-x} x^{-1-α}; the mass beyond x = 60 is below 1e-26.
    let breaks = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 60.0];
    let half = gauss_kronrod_breaks(
        |x| match memo.density(x * x, &inner) {
            Ok(v) => v.value,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        &breaks,
        quad,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(half?.scale(2.0))
}

fn normalization(b: &mut ReportBuilder, cfg: &VerifyConfig) -> Result<()> {
    let g = &cfg.identities.normalization;
    let quad = cfg.quad.with_tol(1e-9, 1e-300);
    for &alpha in &cfg.alphas {
        let p = ProcessParams::new(alpha, cfg.m, 1)?;
        for &t in &g.t {
            let mass = total_mass_1d(t, &p, &quad)?;
            let mut gp = point(vec![], 1, alpha, cfg.m);
            gp.t = Some(t);
            b.residual_row(gp, mass.value, mass.error, 1.0, (mass.value - 1.0).abs(), g.tolerance, "all");
        }
    }
    Ok(())
}

fn levy_reps(b: &mut ReportBuilder, cfg: &VerifyConfig) -> Result<()> {
    let g = &cfg.identities.levy_reps;
    let quad = tight(&cfg.quad);
    b.note("residuals are relative");
    for &[alpha, d, r] in &g.points {
        let d = d as usize;
        let p = ProcessParams::new(alpha, cfg.m, d)?;
        let x = Point::on_axis(d, r);
        let closed = levy_density(&x, &p)?;
        let int = levy_density_integral(&x, &p, &quad)?;
        b.residual_row(
            point(x.coords.clone(), d, alpha, cfg.m),
            int.value,
            int.error,
            closed,
            rel_residual(int.value, closed),
            g.tolerance,
            "all",
        );
    }
    Ok(())
}

/// ∫_H G¹_H(x, y) dy for x = (0, …, 0, x_d), m = 1.
///
/// d = 1 splits at y = x with power substitutions removing the diagonal singularity; d ≥ 2
/// integrates in polar coordinates around x, with the radial variable substituted near 0 and
/// the angular variable substituted near the boundary of H.
pub fn green1_mass(x_d: f64, params: &ProcessParams, quad: &QuadSpec) -> Result<Integral> {
    params.validate()?;
    if params.m != 1.0 {
        return Err(domain("the 1-Green mass identity is stated for m = 1"));
    }
    if !(x_d > 0.0) || !x_d.is_finite() {
        return Err(domain(format!("x_d must be positive, got {x_d}")));
    }
    if params.d > 3 {
        return Err(domain("green1_mass supports d <= 3"));
    }
    let inner = quad.with_tol(quad.rel_tol * 0.1, 1e-300);
    let (alpha, beta, d) = (params.alpha, params.beta(), params.d);
    let mut failure: Option<Error> = None;
    let mut g = |r: f64, yd: f64| -> f64 {
        if !(yd > 0.0) || r == 0.0 {
            return 0.0;
        }
        match green1_core(r, x_d, yd, params, &inner) {
            Ok(v) => v.value,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        }
    };
    let far = 80.0;
    let tail_breaks = |from: f64| -> Vec<f64> {
        let mut v = vec![from];
        let mut s = from;
        while s < from + far {
            s += 2.0 + 0.25 * (s - from);
            v.push(s.min(from + far));
        }
        v
    };
    let total = if d == 1 {
        // |y − x| = v^q with q = 1/α near the diagonal: G¹ ~ r^{α−1} there.
        let q = 1.0 / alpha;
        let below = gauss_kronrod(|v: f64| q * v.powf(q - 1.0) * g(v.powf(q), x_d - v.powf(q)), 0.0, x_d.powf(1.0 / q), quad)?;
        let near = gauss_kronrod(|v: f64| q * v.powf(q - 1.0) * g(v.powf(q), x_d + v.powf(q)), 0.0, 1.0, quad)?;
        let above = gauss_kronrod_breaks(|y: f64| g(y - x_d, y), &tail_breaks(x_d + 1.0), quad)?;
        below + near + above
    } else {
        let mid = quad.with_tol(quad.rel_tol * 0.3, 1e-300);
        let mut angular = |rho: f64| -> f64 {
            // Directions with y_d = x_d + ρc > 0; c = cos of the angle to the d-th axis.
            let c_min = if rho <= x_d { -1.0 } else { -x_d / rho };
            let out = if d == 2 {
                let th_max = c_min.acos();
                if rho > x_d {
                    // y_d ∝ (θ_max − θ) near θ_max; y_d^{β} behaviour removed by θ = θ_max − w^{1/β}.
                    let wmax = th_max.powf(beta);
                    gauss_kronrod(
                        |w: f64| {
                            let th = th_max - w.powf(1.0 / beta);
                            2.0 * w.powf(1.0 / beta - 1.0) / beta * g(rho, x_d + rho * th.cos())
                        },
                        0.0,
                        wmax,
                        &mid,
                    )
                } else {
                    gauss_kronrod(|th: f64| 2.0 * g(rho, x_d + rho * th.cos()), 0.0, th_max, &mid)
                }
            } else if rho > x_d {
                let wmax = (1.0 - c_min).powf(beta);
                gauss_kronrod(
                    |w: f64| {
                        let c = c_min + w.powf(1.0 / beta);
                        2.0 * PI * w.powf(1.0 / beta - 1.0) / beta * g(rho, x_d + rho * c)
                    },
                    0.0,
                    wmax,
                    &mid,
                )
            } else {
                gauss_kronrod(|c: f64| 2.0 * PI * g(rho, x_d + rho * c), -1.0, 1.0, &mid)
            };
            match out {
                Ok(v) => v.value,
                Err(_) => f64::NAN,
            }
        };
        let df = d as f64;
        // ρ^{d−1} G¹ ~ ρ^{α−1} near 0: ρ = v^{1/α} on [0, 1].
        let split = 1f64.min(x_d);
        let head = gauss_kronrod(
            |v: f64| {
                let rho = v.powf(1.0 / alpha);
                rho.powf(df - 1.0) * angular(rho) * rho / (alpha * v)
            },
            0.0,
            split.powf(alpha),
            quad,
        )?;
        let mut breaks = vec![split];
        if x_d > split {
            breaks.push(x_d);
        }
        if split < 1.0 && x_d < 1.0 {
            breaks.push(1.0);
        }
        breaks.extend(tail_breaks(breaks[breaks.len() - 1]).into_iter().skip(1));
        let rest = gauss_kronrod_breaks(|rho: f64| rho.powf(df - 1.0) * angular(rho), &breaks, quad)?;
        head + rest
    };
    if let Some(e) = failure {
        return Err(e);
    }
    if !total.value.is_finite() {
        return Err(Error::Tolerance { what: "1-Green mass quadrature".into(), estimate: f64::INFINITY });
    }
    Ok(total)
}

fn mass(b: &mut ReportBuilder, cfg: &VerifyConfig) -> Result<()> {
    let g = &cfg.identities.green1_mass;
    let quad = cfg.quad.with_tol(1e-5, 1e-7);
    b.note("the 1-Green function is defined for m = 1; the grid uses m = 1 regardless of the configured m");
    for &alpha in &cfg.alphas {
        for &d in &g.dims {
            let p = ProcessParams::new(alpha, 1.0, d)?;
            for &xd in &g.x_d {
                let v = green1_mass(xd, &p, &quad)?;
                let exact = reg_inc_gamma(0.5 * alpha, xd)?;
                b.residual_row(
                    point(Point::on_axis(d, xd).coords, d, alpha, 1.0),
                    v.value,
                    v.error,
                    exact,
                    (v.value - exact).abs(),
                    g.tolerance,
                    "all",
                );
            }
        }
    }
    Ok(())
}

fn scaling(b: &mut ReportBuilder, cfg: &VerifyConfig) -> Result<()> {
    let g = &cfg.identities.scaling;
    let quad = tight(&cfg.quad);
    b.note("residuals are relative; 'density' rows compare p^m_t(x) with m^{d/α} p^1_{mt}(m^{1/α}x), 'stable-green' rows compare G(sx,sy) with s^{α-d} G(x,y), y in the y field and s in t");
    for &[alpha, m, d, t, r] in &g.points {
        let d = d as usize;
        let pm = ProcessParams::new(alpha, m, d)?;
        let p1 = pm.with_m(1.0);
        let lhs = transition_density_radial(t, r * r, &pm, &quad)?;
        let k = m.powf(1.0 / alpha);
        let rhs = transition_density_radial(m * t, (k * r) * (k * r), &p1, &quad)?.scale(m.powf(d as f64 / alpha));
        let mut gp = point(Point::on_axis(d, r).coords, d, alpha, m);
        gp.t = Some(t);
        b.residual_row(gp, lhs.value, lhs.error, rhs.value, rel_residual(lhs.value, rhs.value), g.tolerance, "density");
    }
    for &[alpha, d, s] in &g.stable {
        let d = d as usize;
        let p = ProcessParams::new(alpha, 0.0, d)?;
        let c = stable_green_constant(&p)?;
        let x = Point::on_axis(d, 1.0);
        let y = Point::with_offset(d, 0.7, 2.0);
        let lhs = green_stable_halfspace_with(&x.scaled(s), &y.scaled(s), &p, c, &quad)?;
        let rhs = green_stable_halfspace_with(&x, &y, &p, c, &quad)?.scale(s.powf(alpha - d as f64));
        let mut gp = point(x.coords.clone(), d, alpha, 0.0);
        gp.y = Some(y.coords.clone());
        gp.t = Some(s);
        b.residual_row(gp, lhs.value, lhs.error, rhs.value, rel_residual(lhs.value, rhs.value), g.tolerance, "stable-green");
    }
    Ok(())
}

fn chapman(b: &mut ReportBuilder, cfg: &VerifyConfig) -> Result<()> {
    let g = &cfg.identities.chapman_kolmogorov;
    let quad = cfg.quad.with_tol(1e-7, 1e-300);
    let inner = tight(&cfg.quad);
    b.note("d = 1; x holds x - y; residuals are relative");
    for &alpha in &cfg.alphas {
        let p = ProcessParams::new(alpha, cfg.m, 1)?;
        for &w in &g.w {
            let mut failure = None;
            let (mut ms, mut mt, mut mst) = (ThetaMemo::new(g.s, &p), ThetaMemo::new(g.t, &p), ThetaMemo::new(g.s + g.t, &p));
            let mut dens = |memo: &mut ThetaMemo, z: f64| match memo.density(z * z, &inner) {
                Ok(v) => v.value,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            };
            let mut breaks: Vec<f64> = [-40.0, -20.0, -10.0, -5.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0]
                .iter()
                .flat_map(|&v| [v, w + v])
                .collect();
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            let conv = gauss_kronrod_breaks(|z| dens(&mut ms, z) * dens(&mut mt, w - z), &breaks, &quad);
            let direct = dens(&mut mst, w);
            if let Some(e) = failure {
                return Err(e);
            }
            let conv = conv?;
            let mut gp = point(vec![w], 1, alpha, cfg.m);
            gp.t = Some(g.s + g.t);
            b.residual_row(gp, conv.value, conv.error, direct, rel_residual(conv.value, direct), g.tolerance, "all");
        }
    }
    Ok(())
}

fn mc(cfg: &VerifyConfig, n: usize) -> McConfig {
    McConfig { n_samples: cfg.paths(n), dt: cfg.dt, master_seed: cfg.master_seed, workers: cfg.workers }
}

/// Average of a Green function over a cell, by quadrature (segments) or by the radial profile
/// from the center (shells).
fn cell_average(cell: &Cell, d: usize, mut f: impl FnMut(f64) -> f64, breaks_at: Option<f64>) -> Result<f64> {
    let q = QuadSpec::default().with_tol(1e-9, 1e-300);
    Ok(match *cell {
        Cell::Segment { lo, hi } => {
            let mut br = vec![lo];
            if let Some(x) = breaks_at.filter(|&x| x > lo && x < hi) {
                br.push(x);
            }
            br.push(hi);
            gauss_kronrod_breaks(&mut f, &br, &q)?.value / (hi - lo)
        }
        Cell::Shell { r_lo, r_hi } => {
            let sphere = 2.0 * PI.powf(0.5 * d as f64) / crate::special_fns::gamma(0.5 * d as f64)?;
            let v = gauss_kronrod(|r| sphere * r.powi(d as i32 - 1) * f(r), r_lo, r_hi, &q)?.value;
            v / cell.volume(d)
        }
    })
}

fn gauss_lower(b: &mut ReportBuilder, cfg: &VerifyConfig) -> Result<()> {
    let g = &cfg.identities.gauss_lower;
    let mc_cfg = mc(cfg, g.n);
    b.monte_carlo(cfg.dt, vec![mc_cfg.n_samples]);
    b.note("value: cell occupation density; reference: (2/α) times the cell-averaged Brownian Green function; residual: shortfall in standard errors (0 when above); allowance 3");
    for &alpha in &cfg.alphas {
        let p1 = ProcessParams::new(alpha, cfg.m, 1)?;
        let dom = Domain::Interval { r: g.interval_r };
        let x = Point::from(g.interval_x);
        let cells = Cell::segments(0.0, g.interval_r, g.interval_cells);
        let run = exit_statistics(&x, &dom, &[], &cells, &p1, &mc_cfg)?;
        for (cell, est) in cells.iter().zip(&run.cells) {
            let gauss = cell_average(cell, 1, |y| green_gauss(&dom, &x, &Point::from(y)).unwrap_or(0.0), Some(g.interval_x))?;
            let reference = 2.0 / alpha * gauss;
            let shortfall = shortfall(est.value, est.std_error, reference);
            let mut gp = point(x.coords.clone(), 1, alpha, cfg.m);
            gp.y = Some(cell.center(1).coords);
            gp.r = Some(g.interval_r);
            b.residual_row(gp, est.value, est.std_error, reference, shortfall, 3.0, "interval");
        }
        let p2 = p1.with_d(2);
        let dom = Domain::Ball { r: g.ball_r };
        let x = Point::new(vec![0.0, 0.0]);
        let cells = Cell::shells(g.ball_r, g.ball_cells);
        let run = exit_statistics(&x, &dom, &[], &cells, &p2, &mc_cfg)?;
        for (cell, est) in cells.iter().zip(&run.cells) {
            let gauss = cell_average(
                cell,
                2,
                |r| if r > 0.0 { green_gauss(&dom, &x, &Point::new(vec![r, 0.0])).unwrap_or(0.0) } else { 0.0 },
                None,
            )?;
            let reference = 2.0 / alpha * gauss;
            let shortfall = shortfall(est.value, est.std_error, reference);
            let mut gp = point(x.coords.clone(), 2, alpha, cfg.m);
            gp.y = Some(cell.center(2).coords);
            gp.r = Some(g.ball_r);
            b.residual_row(gp, est.value, est.std_error, reference, shortfall, 3.0, "ball");
        }
    }
    Ok(())
}

fn shortfall(value: f64, se: f64, reference: f64) -> f64 {
    if value >= reference {
        0.0
    } else if se > 0.0 {
        (reference - value) / se
    } else {
        f64::INFINITY
    }
}

/// ∫_E ν(z − y) dz for E = [e_lo, e_hi] and d = 1.
fn levy_mass(y: f64, e: [f64; 2], p: &ProcessParams) -> Result<f64> {
    let q = QuadSpec::default().with_tol(1e-10, 1e-300);
    let mut failure = None;
    let v = gauss_kronrod(
        |z| match levy_density(&Point::from(z - y), p) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        e[0],
        e[1],
        &q,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(v?.value)
}

fn ikeda(b: &mut ReportBuilder, cfg: &VerifyConfig) -> Result<()> {
    let g = &cfg.identities.ikeda_watanabe;
    let mc_cfg = mc(cfg, g.n);
    b.monte_carlo(cfg.dt, vec![mc_cfg.n_samples]);
    b.note("value: direct exit-law estimate; reference: Σ over cells of the occupation estimate times ∫_cell ∫_E ν(z-y) dz dy; allowance: relative allowance times the direct value plus 3 joint standard errors (the cell sum error is bounded by the sum of cell errors)");
    if !(g.target[0] > g.r) {
        return Err(domain("the target set must lie to the right of the interval"));
    }
    let q = QuadSpec::default().with_tol(1e-9, 1e-300);
    for &alpha in &cfg.alphas {
        let p = ProcessParams::new(alpha, cfg.m, 1)?;
        let dom = Domain::Interval { r: g.r };
        let x = Point::from(g.x);
        let cells = Cell::segments(0.0, g.r, g.cells);
        let target = Target::Segment { lo: g.target[0], hi: g.target[1] };
        let run = exit_statistics(&x, &dom, &[target], &cells, &p, &mc_cfg)?;
        let direct = run.hits[0];
        let (mut sum, mut err) = (0.0, 0.0);
        for (cell, est) in cells.iter().zip(&run.cells) {
            let Cell::Segment { lo, hi } = *cell else { unreachable!("segments") };
            let mut failure = None;
            let w = gauss_kronrod(
                |y| match levy_mass(y, g.target, &p) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                },
                lo,
                hi,
                &q,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            let w = w?.value;
            sum += est.value * w;
            err += est.std_error * w;
        }
        let joint = direct.std_error.hypot(err);
        let allowance = g.relative_allowance * direct.value + 3.0 * joint;
        let mut gp = point(x.coords.clone(), 1, alpha, cfg.m);
        gp.r = Some(g.r);
        gp.y = Some(g.target.to_vec());
        b.residual_row(gp, direct.value, direct.std_error, sum, (direct.value - sum).abs(), allowance, "all");
    }
    Ok(())
}

/// Inputs of the mean-value check of the half-line Green function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicityInput {
    pub x0: f64,
    pub y: f64,
    /// The interval B.
    pub b: (f64, f64),
    /// Width of the cell around y.
    pub cell_width: f64,
    pub horizon: f64,
}

impl Default for HarmonicityInput {
    fn default() -> Self {
        HarmonicityInput { x0: 2.0, y: 5.0, b: (1.0, 3.0), cell_width: 0.2, horizon: 100.0 }
    }
}

/// Mean-value property G(x0, y) = E^{x0} G(X_{τ_B}, y) of the half-line Green function for y
/// outside the closure of B, with both sides estimated by independent Monte Carlo runs. Passes
/// when the difference is within 3 joint standard errors.
pub fn check_harmonicity(input: &HarmonicityInput, params: &ProcessParams, cfg: &McConfig, config_hash: &str) -> Result<Report> {
    let HarmonicityInput { x0, y, b: (lo, hi), cell_width, horizon } = *input;
    if y >= lo && y <= hi {
        return Err(domain(format!("y = {y} lies in the closure of B = ({lo}, {hi})")));
    }
    if !(cell_width > 0.0) {
        return Err(domain("cell width must be positive"));
    }
    let cell = (y - 0.5 * cell_width, y + 0.5 * cell_width);
    let run = mean_value_run(x0, (lo, hi), cell, horizon, params, cfg)?;
    let check = Check {
        name: "harmonicity",
        kind: super::Kind::Identity,
        citation: "y ↦ G_(0,∞)(·, y) is regular harmonic on B for y outside the closure of B: G(x0,y) = E^{x0} G(X_{τ_B}, y)",
        enabled: false,
    };
    let vcfg = VerifyConfig { master_seed: cfg.master_seed, dt: cfg.dt, ..VerifyConfig::canonical() };
    let mut rb = ReportBuilder::new(&check, &vcfg, config_hash);
    rb.monte_carlo(cfg.dt, vec![cfg.n_samples]);
    rb.note(format!("B = ({lo}, {hi}); horizon {horizon}; fraction of outer paths killed on leaving B: {}", run.killed_at_exit));
    let joint = run.direct.joint_error(&run.averaged);
    let gp = GridPoint { x: vec![x0], y: Some(vec![y]), t: Some(horizon), r: None, d: 1, alpha: params.alpha, m: params.m };
    rb.residual_row(
        gp,
        run.averaged.value,
        run.averaged.std_error,
        run.direct.value,
        (run.averaged.value - run.direct.value).abs(),
        3.0 * joint,
        "all",
    );
    Ok(rb.finish_identity(None))
}
