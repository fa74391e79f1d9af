//! Ratio checks of the two-sided estimates against quadrature or Monte Carlo measurements.

use std::collections::HashMap;

use crate::envelopes::{band, EnvInput, EnvelopeBand};
use crate::error::{Error, Result};
use crate::kernels::{gaussian_kernel, green1_halfspace_with, green_gauss, levy_density, Domain, Point};
use crate::montecarlo::{
    estimate_green, estimate_green_halfspace, estimate_killed_density, estimate_survival_curve, exit_statistics, Cell, ExitRun,
    HalfspaceGreen, Target,
};
use crate::quad::{gauss_kronrod, QuadSpec};
use crate::subordinator::{McConfig, ProcessParams};

use super::{Check, GridPoint, Report, ReportBuilder, VerifyConfig};

/// Simulations shared between checks of one harness.
#[derive(Default)]
pub(super) struct SimCache {
    exits: HashMap<(u64, u64, u64, usize), ExitRun>,
    halfspace: HashMap<(u64, u64), HalfspaceGreen>,
}

fn key(v: f64) -> u64 {
    v.to_bits()
}

fn mc(cfg: &VerifyConfig, n: usize) -> McConfig {
    McConfig { n_samples: cfg.paths(n), dt: cfg.dt, master_seed: cfg.master_seed, workers: cfg.workers }
}

fn gp(x: &Point, p: &ProcessParams) -> GridPoint {
    GridPoint { x: x.coords.clone(), y: None, t: None, r: None, d: p.d, alpha: p.alpha, m: p.m }
}

fn grid_point(input: &EnvInput, p: &ProcessParams) -> GridPoint {
    let mut g = gp(&input.x, p);
    g.y = input.y.as_ref().map(|y| y.coords.clone());
    g.t = input.t;
    g.r = input.r;
    g
}

/// Mean of `f` over [lo, hi].
fn average(lo: f64, hi: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let q = QuadSpec::default().with_tol(1e-8, 1e-300);
    let mut failure = None;
    let v = gauss_kronrod(
        |s| match f(s) {
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
    Ok(v?.value / (hi - lo))
}

/// Adds a row when the input is in the band's regime, otherwise records a rejection.
/// `reference` overrides the point value of the envelope (cell averages).
fn row(
    b: &mut ReportBuilder,
    band: &EnvelopeBand,
    input: EnvInput,
    p: &ProcessParams,
    value: f64,
    se: f64,
    reference: impl FnOnce() -> Result<f64>,
) -> Result<()> {
    let point = grid_point(&input, p);
    match band.branch(&input, p) {
        Some(branch) => {
            let env = reference()?;
            b.ratio_row(point, value, se, env, branch);
        }
        None => b.reject(point, format!("outside the regime: {}", band.regime)),
    }
    Ok(())
}

pub(super) fn run(check: &Check, cfg: &VerifyConfig, hash: &str, cache: &mut SimCache) -> Result<Report> {
    let mut b = ReportBuilder::new(check, cfg, hash);
    let band = band(check.name)?;
    let threshold = match check.name {
        "green1" => {
            green1(&mut b, band, cfg)?;
            cfg.thresholds.quadrature
        }
        "halfline-green" => {
            halfline(&mut b, band, cfg)?;
            cfg.thresholds.monte_carlo
        }
        "tail" => {
            tail(&mut b, band, cfg)?;
            cfg.thresholds.monte_carlo
        }
        "exit-interval" | "escape" => {
            exit_interval(&mut b, band, cfg, cache)?;
            cfg.thresholds.monte_carlo
        }
        "exit-ball" => {
            exit_ball(&mut b, band, cfg, cache)?;
            cfg.thresholds.monte_carlo
        }
        "halfspace-green" | "halfspace-gauss" => {
            halfspace(&mut b, band, cfg, cache)?;
            cfg.thresholds.monte_carlo
        }
        "interval-green" => {
            interval_green(&mut b, band, cfg)?;
            cfg.thresholds.monte_carlo
        }
        other => return Err(Error::Lookup { name: other.into(), known: vec![] }),
    };
    Ok(b.finish_ratio(threshold))
}

fn green1(b: &mut ReportBuilder, band: &EnvelopeBand, cfg: &VerifyConfig) -> Result<()> {
    let g = &cfg.envelopes.green1;
    let quad = cfg.quad.with_tol(cfg.quad.rel_tol.min(1e-8), 1e-300);
    b.note("quadrature against the envelope at the same point; the 1-Green function is defined for m = 1");
    for &alpha in &cfg.alphas {
        let p = ProcessParams::new(alpha, 1.0, 1)?;
        for (i, &x) in g.halfline_points.iter().enumerate() {
            for &y in &g.halfline_points[i + 1..] {
                let (xp, yp) = (Point::from(x), Point::from(y));
                let v = green1_halfspace_with(&xp, &yp, &p, &quad)?;
                let input = EnvInput::pair(xp, yp);
                row(b, band, input.clone(), &p, v.value, v.error, || band.eval(&input, &p))?;
            }
        }
    }
    let p = ProcessParams::new(g.d3_alpha, 1.0, 3)?;
    for &xd in &g.d3_heights {
        for &yd in &g.d3_heights {
            let (xp, yp) = (Point::on_axis(3, xd), Point::with_offset(3, g.d3_offset, yd));
            let v = green1_halfspace_with(&xp, &yp, &p, &quad)?;
            let input = EnvInput::pair(xp, yp);
            row(b, band, input.clone(), &p, v.value, v.error, || band.eval(&input, &p))?;
        }
    }
    Ok(())
}

/// Cell of width min(0.1, |x−y|/4, y/2, (R−y)/2) centered at y.
fn cell_around(x: f64, y: f64, r: Option<f64>) -> (f64, f64) {
    let mut w = 0.1f64.min((x - y).abs() / 4.0).min(y / 2.0);
    if let Some(r) = r {
        w = w.min((r - y) / 2.0);
    }
    (y - 0.5 * w, y + 0.5 * w)
}

fn halfline(b: &mut ReportBuilder, band: &EnvelopeBand, cfg: &VerifyConfig) -> Result<()> {
    let g = &cfg.envelopes.halfline_green;
    let mcc = mc(cfg, g.n);
    b.monte_carlo(cfg.dt, vec![mcc.n_samples]);
    b.note(format!(
        "occupation density on a cell of width min(0.1, |x-y|/4, y/2) around y, up to horizon {} with the T^(-1/2) truncation term removed by Richardson extrapolation; envelope averaged over the cell",
        g.horizon
    ));
    let mut worst_truncation = 0.0f64;
    for &alpha in &cfg.alphas {
        let p = ProcessParams::new(alpha, cfg.m, 1)?;
        for &x in &g.points {
            let ys: Vec<f64> = g.points.iter().copied().filter(|&y| y != x).collect();
            let cells: Vec<Cell> = ys.iter().map(|&y| cell_around(x, y, None)).map(|(lo, hi)| Cell::Segment { lo, hi }).collect();
            let est = estimate_green(&Point::from(x), &Domain::HalfLine, &cells, Some(g.horizon), &p, &mcc)?;
            let extra = est.extrapolated.as_ref().expect("unbounded domain");
            for ((&y, cell), (e, full)) in ys.iter().zip(&cells).zip(extra.iter().zip(&est.cells)) {
                worst_truncation = worst_truncation.max((e.value - full.value).abs() / e.value.abs().max(f64::MIN_POSITIVE));
                let Cell::Segment { lo, hi } = *cell else { unreachable!("segments") };
                let input = EnvInput::pair(Point::from(x), Point::from(y));
                row(b, band, input, &p, e.value, e.std_error, || {
                    average(lo, hi, |s| band.eval(&EnvInput::pair(Point::from(x), Point::from(s)), &p))
                })?;
            }
        }
    }
    b.note(format!("largest relative horizon correction: {worst_truncation:.4}"));
    Ok(())
}

fn tail(b: &mut ReportBuilder, band: &EnvelopeBand, cfg: &VerifyConfig) -> Result<()> {
    let g = &cfg.envelopes.tail;
    let mcc = mc(cfg, g.n);
    b.monte_carlo(cfg.dt, vec![mcc.n_samples]);
    b.note("survival of the half-line (d = 1) monitored on the time grid");
    for &alpha in &cfg.alphas {
        let p = ProcessParams::new(alpha, cfg.m, 1)?;
        for &x in &g.x {
            let xp = Point::from(x);
            let curve = estimate_survival_curve(&xp, &g.t, &Domain::HalfLine, &p, &mcc)?;
            for (&t, e) in g.t.iter().zip(&curve) {
                let input = EnvInput::point(xp.clone()).with_t(t);
                row(b, band, input.clone(), &p, e.value, e.std_error, || band.eval(&input, &p))?;
            }
        }
    }
    Ok(())
}

fn exit_run<'a>(cache: &'a mut SimCache, cfg: &VerifyConfig, p: &ProcessParams, x: &Point, r: f64, n: usize) -> Result<&'a ExitRun> {
    let k = (key(p.alpha), key(r), key(x.norm()), p.d);
    if let std::collections::hash_map::Entry::Vacant(e) = cache.exits.entry(k) {
        let (dom, targets) = if p.d == 1 {
            (Domain::Interval { r }, vec![Target::Segment { lo: r, hi: f64::INFINITY }])
        } else {
            (Domain::Ball { r }, vec![])
        };
        let run = exit_statistics(x, &dom, &targets, &[], p, &mc(cfg, n))?;
        e.insert(run);
    }
    Ok(&cache.exits[&k])
}

fn exit_interval(b: &mut ReportBuilder, band: &EnvelopeBand, cfg: &VerifyConfig, cache: &mut SimCache) -> Result<()> {
    let g = &cfg.envelopes.exit_interval;
    let escape = band.name == "escape";
    let fractions = if escape { &cfg.envelopes.escape.fractions } else { &g.fractions };
    b.monte_carlo(cfg.dt, g.n.iter().map(|&n| cfg.paths(n)).collect());
    b.note(if escape {
        "probability that the first grid state outside (0,R) is >= R; x = fraction * R; simulations shared with exit-interval"
    } else {
        "grid-monitored exit time from (0,R); x = fraction * R; monitoring at the grid overestimates the exit time by O(dt^{1/2}) relative terms near the boundary"
    });
    let mut capped = 0.0f64;
    for &alpha in &cfg.alphas {
        let p = ProcessParams::new(alpha, cfg.m, 1)?;
        for (&r, &n) in g.radii.iter().zip(&g.n) {
            for &f in fractions {
                let x = Point::from(f * r);
                let run = exit_run(cache, cfg, &p, &x, r, n)?;
                capped = capped.max(run.capped_fraction);
                let est = if escape { run.hits[0] } else { run.exit_time };
                let input = EnvInput::point(x).with_r(r);
                row(b, band, input.clone(), &p, est.value, est.std_error, || band.eval(&input, &p))?;
            }
        }
    }
    b.note(format!("largest fraction of paths stopped by the time cap: {capped}"));
    Ok(())
}

fn exit_ball(b: &mut ReportBuilder, band: &EnvelopeBand, cfg: &VerifyConfig, cache: &mut SimCache) -> Result<()> {
    let g = &cfg.envelopes.exit_ball;
    b.monte_carlo(cfg.dt, g.n.iter().map(|&n| cfg.paths(n)).collect());
    b.note(format!("grid-monitored exit time from B(0,R) in d = {}; x = (fraction * R, 0, ...)", g.d));
    for &alpha in &cfg.alphas {
        let p = ProcessParams::new(alpha, cfg.m, g.d)?;
        for (&r, &n) in g.radii.iter().zip(&g.n) {
            for &f in &g.fractions {
                let x = Point::with_offset(g.d, 0.0, f * r);
                let run = exit_run(cache, cfg, &p, &x, r, n)?;
                let est = run.exit_time;
                let input = EnvInput::point(x).with_r(r);
                row(b, band, input.clone(), &p, est.value, est.std_error, || band.eval(&input, &p))?;
            }
        }
    }
    Ok(())
}

/// (y_d, horizontal offset, |x−y|) triples needed from x_d by the half-space suites.
fn halfspace_targets(heights: &[f64], distances: &[f64], x_d: f64) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for &yd in heights {
        for &dist in distances {
            let dh = x_d - yd;
            if dist > dh.abs() {
                out.push((yd, (dist * dist - dh * dh).sqrt(), dist));
            }
        }
    }
    out
}

fn halfspace_run<'a>(cache: &'a mut SimCache, cfg: &VerifyConfig, alpha: f64, x_d: f64) -> Result<&'a HalfspaceGreen> {
    let k = (key(alpha), key(x_d));
    if let std::collections::hash_map::Entry::Vacant(e) = cache.halfspace.entry(k) {
        let hs = &cfg.envelopes.halfspace_green;
        let ga = &cfg.envelopes.halfspace_gauss;
        let mut needs = Vec::new();
        if hs.heights.contains(&x_d) {
            needs.extend(halfspace_targets(&hs.heights, &hs.distances, x_d));
        }
        if ga.heights.contains(&x_d) {
            needs.extend(halfspace_targets(&ga.heights, &ga.distances, x_d));
        }
        let mut heights: Vec<f64> = needs.iter().map(|n| n.0).collect();
        let mut offsets: Vec<f64> = needs.iter().map(|n| n.1).collect();
        for v in [&mut heights, &mut offsets] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        let cells: Vec<(f64, f64)> = heights.iter().map(|&h| (h, hs.cell_width)).collect();
        let p = ProcessParams::new(alpha, cfg.m, 1)?;
        let run = estimate_green_halfspace(x_d, &cells, &offsets, &hs.dims, hs.horizon, &p, &mc(cfg, hs.n))?;
        e.insert(run);
    }
    Ok(&cache.halfspace[&k])
}

fn halfspace(b: &mut ReportBuilder, band: &EnvelopeBand, cfg: &VerifyConfig, cache: &mut SimCache) -> Result<()> {
    let hs = &cfg.envelopes.halfspace_green;
    let gauss = band.name == "halfspace-gauss";
    let (heights, distances) = if gauss {
        (&cfg.envelopes.halfspace_gauss.heights, &cfg.envelopes.halfspace_gauss.distances)
    } else {
        (&hs.heights, &hs.distances)
    };
    b.monte_carlo(cfg.dt, vec![cfg.paths(hs.n)]);
    b.note(format!(
        "x = (0, ..., x_d), y at horizontal offset sqrt(|x-y|^2 - (x_d - y_d)^2) along the first axis; (x_d, y_d, |x-y|) combinations with |x-y| <= |x_d - y_d| do not exist and are skipped; \
         occupation density of the last coordinate in a height cell of width {} times the exact horizontal Gaussian density given the subordinator clock, up to horizon {} with the T^(-d/2) term removed by Richardson extrapolation; envelope averaged over the height cell",
        hs.cell_width, hs.horizon
    ));
    let mut alive = 0.0f64;
    for &alpha in &cfg.alphas {
        for &xd in heights {
            let run = halfspace_run(cache, cfg, alpha, xd)?;
            alive = alive.max(run.alive_fraction);
            for (di, &d) in run.dims.iter().enumerate() {
                let p = ProcessParams::new(alpha, cfg.m, d)?;
                for (yd, off, _) in halfspace_targets(heights, distances, xd) {
                    let hi = run.heights.iter().position(|h| h.0 == yd).expect("height simulated");
                    let oi = run.offsets.iter().position(|&o| o == off).expect("offset simulated");
                    let (_, _, e) = run.at(di, hi, oi);
                    let x = Point::on_axis(d, xd);
                    let input = EnvInput::pair(x.clone(), Point::with_offset(d, off, yd));
                    let half = 0.5 * hs.cell_width;
                    row(b, band, input, &p, e.value, e.std_error, || {
                        average(yd - half, yd + half, |s| {
                            let y = Point::with_offset(d, off, s);
                            if gauss {
                                green_gauss(&Domain::HalfSpace, &x, &y)
                            } else {
                                band.eval(&EnvInput::pair(x.clone(), y), &p)
                            }
                        })
                    })?;
                }
            }
        }
    }
    b.note(format!("largest fraction of paths alive at the horizon: {alive:.4}"));
    Ok(())
}

fn interval_green(b: &mut ReportBuilder, band: &EnvelopeBand, cfg: &VerifyConfig) -> Result<()> {
    let g = &cfg.envelopes.interval_green;
    b.monte_carlo(cfg.dt, g.n.iter().map(|&n| cfg.paths(n)).collect());
    b.note("occupation density up to exit on a cell of width min(0.1, |x-y|/4, y/2, (R-y)/2) around y; envelope averaged over the cell");
    for &alpha in &cfg.alphas {
        let p = ProcessParams::new(alpha, cfg.m, 1)?;
        for (&r, &n) in g.radii.iter().zip(&g.n) {
            let mut starts: Vec<f64> = g.near_left.clone();
            starts.push(0.5 * r);
            let mut targets = starts.clone();
            targets.extend(g.near_right.iter().map(|&v| r - v));
            targets.sort_by(f64::total_cmp);
            targets.dedup();
            for &x in &starts {
                let ys: Vec<f64> = targets.iter().copied().filter(|&y| y != x).collect();
                let cells: Vec<Cell> = ys.iter().map(|&y| cell_around(x, y, Some(r))).map(|(lo, hi)| Cell::Segment { lo, hi }).collect();
                let run = exit_statistics(&Point::from(x), &Domain::Interval { r }, &[], &cells, &p, &mc(cfg, n))?;
                for ((&y, cell), e) in ys.iter().zip(&cells).zip(&run.cells) {
                    let Cell::Segment { lo, hi } = *cell else { unreachable!("segments") };
                    let input = EnvInput::pair(Point::from(x), Point::from(y)).with_r(r);
                    row(b, band, input, &p, e.value, e.std_error, || {
                        average(lo, hi, |s| band.eval(&EnvInput::pair(Point::from(x), Point::from(s)).with_r(r), &p))
                    })?;
                }
            }
        }
    }
    Ok(())
}

/// Off-diagonal killed-density bound on the half-line: an upper bound, so only the fitted
/// constant (the largest ratio) is meaningful.
pub(super) fn run_stretch(check: &Check, cfg: &VerifyConfig, hash: &str) -> Result<Report> {
    let g = &cfg.stretch.killed_density;
    let mut b = ReportBuilder::new(check, cfg, hash);
    let mcc = mc(cfg, g.n);
    b.monte_carlo(cfg.dt, vec![mcc.n_samples]);
    let c = 8.0 * 2f64.sqrt();
    b.note(
        "upper bound only: c_max is the fitted constant C and the spread is not a criterion; the verdict requires finite positive ratios",
    );
    b.note("envelope uses c = 8√2 as printed; the reading with 1/(8√2) is reported in the note below");
    let w = 0.2;
    let mut alt_max = 0.0f64;
    for &alpha in &cfg.alphas {
        let p = ProcessParams::new(alpha, cfg.m, 1)?;
        let cells: Vec<Cell> = g.y.iter().map(|&y| Cell::Segment { lo: y - 0.5 * w, hi: y + 0.5 * w }).collect();
        let dens = estimate_killed_density(&Point::from(g.x), &g.t, &cells, &Domain::HalfLine, &p, &mcc)?;
        for (ti, &t) in g.t.iter().enumerate() {
            for (yi, &y) in g.y.iter().enumerate() {
                let mut point = gp(&Point::from(g.x), &p);
                point.y = Some(vec![y]);
                point.t = Some(t);
                let dist = (g.x - y).abs();
                if !(g.x >= 1.0 && y >= 1.0 && dist >= 1.0 && t <= dist * dist) {
                    b.reject(point, "needs x, y >= 1, |x-y| >= 1 and t <= |x-y|^2");
                    continue;
                }
                let env = |c: f64| -> Result<f64> {
                    let z = Point::from(dist / c);
                    let front = (g.x * y / (dist * dist)).min(1.0);
                    Ok(front * (gaussian_kernel(t, &z)? + t * levy_density(&z, &p)?))
                };
                let e = dens[ti][yi];
                b.ratio_row(point, e.value, e.std_error, env(c)?, "all");
                alt_max = alt_max.max(e.value / env(1.0 / c)?);
            }
        }
    }
    b.note(format!("largest ratio with c = 1/(8√2): {alt_max}"));
    let mut report = b.finish_ratio(f64::INFINITY);
    let ratios = report.ratios.clone().unwrap_or_default();
    let ok = !ratios.is_empty() && ratios.iter().all(|q| q.is_finite() && *q > 0.0);
    report.threshold = None;
    report.verdict = if ok { super::Verdict::Pass } else { super::Verdict::Fail };
    Ok(report)
}
