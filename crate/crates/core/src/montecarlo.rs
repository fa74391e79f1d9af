//! Path simulation by subordination and Monte Carlo estimators for survival probabilities,
//! mean exit times, occupation-density Green functions and exit laws.
//!
//! Exit is detected on the time grid only. Every path draws from its own stream keyed by
//! (master seed, salt, path index), and per-path observables are merged in index order, so
//! results do not depend on the number of worker threads.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::kernels::{Domain, Point};
use crate::subordinator::{stream_rng, IncrementSampler, McConfig, ProcessParams};

/// Bounded-domain paths still inside after this much process time are stopped and flagged.
pub const MAX_EXIT_TIME: f64 = 1e5;
/// Highest dimension supported by the simulators.
pub const MAX_SIM_DIM: usize = 3;
const CHUNK: usize = 1024;

const SALT_PATHS: u64 = 0;
const SALT_HALF_DT: u64 = 1;
const SALT_MEAN_VALUE_DIRECT: u64 = 2;
const SALT_MEAN_VALUE_OUTER: u64 = 3;

/// A discretized path; `exit_index` is the first grid index outside the domain, if any.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub states: Vec<Point>,
    pub exit_index: Option<usize>,
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    /// Standard error of the difference of two independent estimates.
    pub fn joint_error(&self, other: &Estimate) -> f64 {
        self.std_error.hypot(other.std_error)
    }

    pub fn scale(self, c: f64) -> Estimate {
        Estimate { value: self.value * c, std_error: self.std_error * c.abs(), n: self.n }
    }
}

/// Welford accumulators for a fixed number of per-path observables.
#[derive(Debug, Clone)]
struct Moments {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(width: usize) -> Self {
        Moments { n: 0, mean: vec![0.0; width], m2: vec![0.0; width] }
    }

    fn push(&mut self, obs: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(obs) {
            let delta = v - *m;
            *m += delta / n;
            *s += delta * (v - *m);
        }
    }

    fn estimate(&self, j: usize) -> Estimate {
        let var = if self.n > 1 { self.m2[j] / (self.n - 1) as f64 } else { 0.0 };
        Estimate { value: self.mean[j], std_error: (var.max(0.0) / self.n as f64).sqrt(), n: self.n }
    }

    fn estimates(&self, range: std::ops::Range<usize>) -> Vec<Estimate> {
        range.map(|j| self.estimate(j)).collect()
    }
}

/// Runs `n_samples` paths, each writing `width` observables, and merges them in index order.
fn run_paths<F>(cfg: &McConfig, salt: u64, width: usize, path: F) -> Result<Moments>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    cfg.validate()?;
    let body = || {
        let mut acc = Moments::new(width);
        let mut start = 0usize;
        while start < cfg.n_samples {
            let end = (start + CHUNK).min(cfg.n_samples);
            let chunk: Vec<Vec<f64>> = (start..end)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream_rng(cfg.master_seed, salt, i as u64);
                    let mut out = vec![0.0; width];
                    path(&mut rng, &mut out);
                    out
                })
                .collect();
            for obs in &chunk {
                acc.push(obs);
            }
            start = end;
        }
        acc
    };
    if cfg.workers == 0 {
        Ok(body())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
        Ok(pool.install(body))
    }
}

/// Single-path stepper: X_{k+1} = X_k + √(2 S_k) Z_k.
#[derive(Debug, Clone, Copy)]
struct Stepper {
    sampler: IncrementSampler,
    d: usize,
}

impl Stepper {
    fn new(params: &ProcessParams, cfg: &McConfig) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        if params.m > 0.0 && cfg.dt > 1.0 / params.m {
            return Err(domain(format!("dt = {} exceeds 1/m = {}; rejection tilting would be impractical", cfg.dt, 1.0 / params.m)));
        }
        if params.d > MAX_SIM_DIM {
            return Err(domain(format!("simulation supports d <= {MAX_SIM_DIM}, got {}", params.d)));
        }
        Ok(Stepper { sampler: IncrementSampler::new(cfg.dt, params)?, d: params.d })
    }

    /// Advances the state and returns the subordinator increment used.
    #[inline]
    fn step<R: Rng + ?Sized>(&self, x: &mut [f64; MAX_SIM_DIM], rng: &mut R) -> f64 {
        let s = self.sampler.draw(rng);
        let scale = (2.0 * s).sqrt();
        for c in x.iter_mut().take(self.d) {
            let z: f64 = rng.sample(StandardNormal);
            *c += scale * z;
        }
        s
    }
}

fn to_array(x: &Point) -> [f64; MAX_SIM_DIM] {
    let mut a = [0.0; MAX_SIM_DIM];
    a[..x.dim()].copy_from_slice(&x.coords);
    a
}

#[inline]
fn inside(dom: &Domain, x: &[f64; MAX_SIM_DIM], d: usize) -> bool {
    match *dom {
        Domain::HalfSpace | Domain::HalfLine => x[d - 1] > 0.0,
        Domain::Interval { r } => x[0] > 0.0 && x[0] < r,
        Domain::Ball { r } => x[..d].iter().map(|c| c * c).sum::<f64>() < r * r,
    }
}

#[inline]
fn on_boundary(dom: &Domain, x: &[f64; MAX_SIM_DIM], d: usize) -> bool {
    match *dom {
        Domain::HalfSpace | Domain::HalfLine => x[d - 1] == 0.0,
        Domain::Interval { r } => x[0] == 0.0 || x[0] == r,
        Domain::Ball { r } => x[..d].iter().map(|c| c * c).sum::<f64>() == r * r,
    }
}

fn check_start(x0: &Point, dom: &Domain, params: &ProcessParams) -> Result<()> {
    if x0.dim() != params.d {
        return Err(domain(format!("start point has {} coordinates but d = {}", x0.dim(), params.d)));
    }
    dom.validate(params.d)?;
    if !dom.contains(x0) {
        return Err(domain(format!("start point {:?} is not in the {}", x0.coords, dom.name())));
    }
    Ok(())
}

fn steps_for(t: f64, dt: f64) -> usize {
    (t / dt).round() as usize
}

/// Simulates X on the grid k·dt up to `horizon` (the path is not stopped anywhere).
pub fn simulate_path<R: Rng + ?Sized>(x0: &Point, horizon: f64, params: &ProcessParams, cfg: &McConfig, rng: &mut R) -> Result<PathSample> {
    simulate(x0, horizon, None, params, cfg, rng)
}

/// Simulates X up to `horizon` or until the first grid point outside `dom`, which is kept.
pub fn simulate_path_in<R: Rng + ?Sized>(
    x0: &Point,
    horizon: f64,
    dom: &Domain,
    params: &ProcessParams,
    cfg: &McConfig,
    rng: &mut R,
) -> Result<PathSample> {
    check_start(x0, dom, params)?;
    simulate(x0, horizon, Some(dom), params, cfg, rng)
}

fn simulate<R: Rng + ?Sized>(
    x0: &Point,
    horizon: f64,
    dom: Option<&Domain>,
    params: &ProcessParams,
    cfg: &McConfig,
    rng: &mut R,
) -> Result<PathSample> {
    if x0.dim() != params.d {
        return Err(domain("start point dimension does not match d"));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(domain(format!("horizon must be finite and >= 0, got {horizon}")));
    }
    let stepper = Stepper::new(params, cfg)?;
    let n = steps_for(horizon, cfg.dt);
    let d = params.d;
    let mut x = to_array(x0);
    let mut times = vec![0.0];
    let mut states = vec![x0.clone()];
    let mut exit_index = None;
    for k in 1..=n {
        stepper.step(&mut x, rng);
        times.push(k as f64 * cfg.dt);
        states.push(Point::new(x[..d].to_vec()));
        if let Some(dom) = dom {
            if !inside(dom, &x, d) {
                exit_index = Some(k);
                break;
            }
        }
    }
    Ok(PathSample { times, states, exit_index })
}

/// How a single path ended.
struct WalkEnd {
    /// Grid index of the first state outside the domain, or the number of steps taken.
    steps: usize,
    exited: bool,
    state: [f64; MAX_SIM_DIM],
}

/// Walks from `x` until exit from `dom` or `max_steps`, calling `visit(k, state, clock)` for every
/// grid state X_k inside the domain with k < exit index; `clock` is the subordinator time T(k·dt).
#[inline]
fn walk<R: Rng + ?Sized, V: FnMut(usize, &[f64; MAX_SIM_DIM], f64)>(
    stepper: &Stepper,
    dom: &Domain,
    mut x: [f64; MAX_SIM_DIM],
    max_steps: usize,
    rng: &mut R,
    mut visit: V,
) -> WalkEnd {
    let d = stepper.d;
    let mut clock = 0.0;
    visit(0, &x, clock);
    for k in 1..=max_steps {
        clock += stepper.step(&mut x, rng);
        if !inside(dom, &x, d) {
            return WalkEnd { steps: k, exited: true, state: x };
        }
        if k < max_steps {
            visit(k, &x, clock);
        }
    }
    WalkEnd { steps: max_steps, exited: false, state: x }
}

/// P^{x0}(τ_D > t) by grid monitoring, with binomial standard error.
pub fn estimate_survival(x0: &Point, t: f64, dom: &Domain, params: &ProcessParams, cfg: &McConfig) -> Result<Estimate> {
    Ok(estimate_survival_curve(x0, &[t], dom, params, cfg)?[0])
}

/// Survival probabilities at several times from one set of paths.
pub fn estimate_survival_curve(x0: &Point, times: &[f64], dom: &Domain, params: &ProcessParams, cfg: &McConfig) -> Result<Vec<Estimate>> {
    check_start(x0, dom, params)?;
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(domain("survival times must be finite and >= 0"));
    }
    let stepper = Stepper::new(params, cfg)?;
    let ks: Vec<usize> = times.iter().map(|&t| steps_for(t, cfg.dt)).collect();
    let max_k = ks.iter().copied().max().unwrap_or(0);
    let start = to_array(x0);
    let m = run_paths(cfg, SALT_PATHS, ks.len(), |rng, out| {
        let end = walk(&stepper, dom, start, max_k, rng, |_, _, _| {});
        for (o, &k) in out.iter_mut().zip(&ks) {
            *o = if end.exited && end.steps <= k { 0.0 } else { 1.0 };
        }
    })?;
    Ok(m.estimates(0..ks.len()))
}

/// Spatial cells for occupation estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Cell {
    /// lo ≤ x₁ < hi (one dimension).
    Segment { lo: f64, hi: f64 },
    /// r_lo ≤ |x| < r_hi.
    Shell { r_lo: f64, r_hi: f64 },
}

impl Cell {
    pub fn volume(&self, d: usize) -> f64 {
        match *self {
            Cell::Segment { lo, hi } => hi - lo,
            Cell::Shell { r_lo, r_hi } => {
                let df = d as f64;
                let unit = std::f64::consts::PI.powf(0.5 * df) / crate::special_fns::gamma(0.5 * df + 1.0).unwrap_or(f64::NAN);
                unit * (r_hi.powi(d as i32) - r_lo.powi(d as i32))
            }
        }
    }

    /// Representative point of the cell (midpoint, or midpoint radius on the first axis).
    pub fn center(&self, d: usize) -> Point {
        match *self {
            Cell::Segment { lo, hi } => Point::from(0.5 * (lo + hi)),
            Cell::Shell { r_lo, r_hi } => {
                let mut c = vec![0.0; d];
                c[0] = 0.5 * (r_lo + r_hi);
                Point::new(c)
            }
        }
    }

    #[inline]
    fn contains(&self, x: &[f64; MAX_SIM_DIM], d: usize) -> bool {
        match *self {
            Cell::Segment { lo, hi } => x[0] >= lo && x[0] < hi,
            Cell::Shell { r_lo, r_hi } => {
                let r2: f64 = x[..d].iter().map(|c| c * c).sum();
                r2 >= r_lo * r_lo && r2 < r_hi * r_hi
            }
        }
    }

    /// Equal segments covering [lo, hi).
    pub fn segments(lo: f64, hi: f64, n: usize) -> Vec<Cell> {
        let h = (hi - lo) / n as f64;
        (0..n).map(|k| Cell::Segment { lo: lo + k as f64 * h, hi: lo + (k + 1) as f64 * h }).collect()
    }

    /// Equal-width shells covering [0, r).
    pub fn shells(r: f64, n: usize) -> Vec<Cell> {
        let h = r / n as f64;
        (0..n).map(|k| Cell::Shell { r_lo: k as f64 * h, r_hi: (k + 1) as f64 * h }).collect()
    }
}

/// Fast lookup when the cells are sorted, disjoint segments; linear scan otherwise.
struct CellIndex<'a> {
    cells: &'a [Cell],
    sorted_lo: Option<Vec<f64>>,
    d: usize,
}

impl<'a> CellIndex<'a> {
    fn new(cells: &'a [Cell], d: usize) -> Self {
        let segs: Option<Vec<(f64, f64)>> = cells
            .iter()
            .map(|c| match *c {
                Cell::Segment { lo, hi } => Some((lo, hi)),
                _ => None,
            })
            .collect();
        let sorted_lo = segs.filter(|s| s.windows(2).all(|w| w[0].1 <= w[1].0)).map(|s| s.iter().map(|p| p.0).collect());
        CellIndex { cells, sorted_lo, d }
    }

    #[inline]
    fn for_each_hit<F: FnMut(usize)>(&self, x: &[f64; MAX_SIM_DIM], mut f: F) {
        if let Some(los) = &self.sorted_lo {
            let i = los.partition_point(|&lo| lo <= x[0]);
            if i > 0 && self.cells[i - 1].contains(x, self.d) {
                f(i - 1);
            }
        } else {
            for (i, c) in self.cells.iter().enumerate() {
                if c.contains(x, self.d) {
                    f(i);
                }
            }
        }
    }
}

/// Target sets for exit laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Target {
    /// lo ≤ x₁ ≤ hi; either end may be infinite.
    Segment { lo: f64, hi: f64 },
    /// Everything outside the domain.
    Complement,
}

impl Target {
    #[inline]
    fn contains(&self, x: &[f64; MAX_SIM_DIM]) -> bool {
        match *self {
            Target::Segment { lo, hi } => x[0] >= lo && x[0] <= hi,
            Target::Complement => true,
        }
    }

    fn check(&self, dom: &Domain) -> Result<()> {
        if let Target::Segment { lo, hi } = *self {
            if !(lo <= hi) {
                return Err(domain("target segment needs lo <= hi"));
            }
            let overlaps = match *dom {
                Domain::Interval { r } => hi > 0.0 && lo < r,
                Domain::Ball { r } => hi > -r && lo < r,
                Domain::HalfLine | Domain::HalfSpace => hi > 0.0,
            };
            if overlaps {
                return Err(domain("the target set must lie outside the domain"));
            }
        }
        Ok(())
    }
}

/// Everything measured on one set of exit-stopped paths.
#[derive(Debug, Clone, Serialize)]
pub struct ExitRun {
    /// Discretized exit time (capped paths contribute the cap).
    pub exit_time: Estimate,
    /// Probability that the first state outside the domain lies in each target.
    pub hits: Vec<Estimate>,
    /// Occupation density per cell (time in cell before exit / cell volume).
    pub cells: Vec<Estimate>,
    /// Paths whose exit state lies exactly on the boundary.
    pub boundary_hits: usize,
    /// Fraction of paths stopped by the time cap.
    pub capped_fraction: f64,
    pub dt: f64,
    pub n: usize,
}

/// Runs exit-stopped paths from `x0` in a bounded domain and records exit times, target hits
/// and cell occupations together.
pub fn exit_statistics(
    x0: &Point,
    dom: &Domain,
    targets: &[Target],
    cells: &[Cell],
    params: &ProcessParams,
    cfg: &McConfig,
) -> Result<ExitRun> {
    exit_statistics_salted(x0, dom, targets, cells, params, cfg, SALT_PATHS)
}

fn exit_statistics_salted(
    x0: &Point,
    dom: &Domain,
    targets: &[Target],
    cells: &[Cell],
    params: &ProcessParams,
    cfg: &McConfig,
    salt: u64,
) -> Result<ExitRun> {
    check_start(x0, dom, params)?;
    if !dom.is_bounded() {
        return Err(domain(format!("exit statistics need a bounded domain; the {} has infinite mean exit time", dom.name())));
    }
    for t in targets {
        t.check(dom)?;
    }
    let stepper = Stepper::new(params, cfg)?;
    let d = params.d;
    let max_steps = steps_for(MAX_EXIT_TIME, cfg.dt);
    let index = CellIndex::new(cells, d);
    let vols: Vec<f64> = cells.iter().map(|c| c.volume(d)).collect();
    let nt = targets.len();
    let nc = cells.len();
    // Layout: exit time, capped, boundary hit, targets, cells.
    let width = 3 + nt + nc;
    let start = to_array(x0);
    let dt = cfg.dt;
    let m = run_paths(cfg, salt, width, |rng, out| {
        let (head, occ) = out.split_at_mut(3 + nt);
        let end = walk(&stepper, dom, start, max_steps, rng, |_, x, _| {
            index.for_each_hit(x, |i| occ[i] += dt);
        });
        head[0] = end.steps as f64 * dt;
        head[1] = if end.exited { 0.0 } else { 1.0 };
        if end.exited {
            head[2] = if on_boundary(dom, &end.state, d) { 1.0 } else { 0.0 };
            for (j, t) in targets.iter().enumerate() {
                head[3 + j] = if t.contains(&end.state) { 1.0 } else { 0.0 };
            }
        }
        for (o, v) in occ.iter_mut().zip(&vols) {
            *o /= v;
        }
    })?;
    let n = m.n;
    Ok(ExitRun {
        exit_time: m.estimate(0),
        hits: m.estimates(3..3 + nt),
        cells: m.estimates(3 + nt..width),
        boundary_hits: (m.estimate(2).value * n as f64).round() as usize,
        capped_fraction: m.estimate(1).value,
        dt,
        n,
    })
}

/// Mean exit time together with the same estimate at dt/2 (independent paths), exposing the
/// monitoring bias.
#[derive(Debug, Clone, Serialize)]
pub struct MeanExit {
    pub estimate: Estimate,
    pub half_dt: Estimate,
    /// estimate − half_dt; positive values mean the coarse grid misses exits.
    pub bias_probe: f64,
    pub capped_fraction: f64,
}

/// E^{x0} τ_D for bounded D, at dt and at dt/2.
pub fn estimate_mean_exit(x0: &Point, dom: &Domain, params: &ProcessParams, cfg: &McConfig) -> Result<MeanExit> {
    let coarse = exit_statistics(x0, dom, &[], &[], params, cfg)?;
    let fine_cfg = McConfig { dt: 0.5 * cfg.dt, ..*cfg };
    let fine = exit_statistics_salted(x0, dom, &[], &[], params, &fine_cfg, SALT_HALF_DT)?;
    Ok(MeanExit {
        estimate: coarse.exit_time,
        half_dt: fine.exit_time,
        bias_probe: coarse.exit_time.value - fine.exit_time.value,
        capped_fraction: coarse.capped_fraction.max(fine.capped_fraction),
    })
}

/// P^{x0}(X_{τ_D} ∈ E).
pub fn estimate_exit_law(x0: &Point, dom: &Domain, target: &Target, params: &ProcessParams, cfg: &McConfig) -> Result<Estimate> {
    Ok(exit_statistics(x0, dom, &[*target], &[], params, cfg)?.hits[0])
}

/// Occupation-density estimate of G_D(x0, ·).
#[derive(Debug, Clone, Serialize)]
pub struct GreenEstimate {
    /// Per-cell density up to exit (or the horizon).
    pub cells: Vec<Estimate>,
    /// Per-cell density up to a quarter of the horizon (unbounded domains only).
    pub early: Option<Vec<Estimate>>,
    /// Richardson combination removing the leading horizon-truncation term (unbounded domains).
    pub extrapolated: Option<Vec<Estimate>>,
    /// Time before exit or horizon; equals Σ cells·volume when the cells cover the domain.
    pub occupation_time: Estimate,
    /// Fraction of paths still alive at the horizon (or the time cap for bounded domains).
    pub capped_fraction: f64,
    /// Bounded domain with more than 1% of paths capped.
    pub warning: bool,
    pub horizon: Option<f64>,
}

/// Occupation-measure estimate of the Green function of D from x0.
///
/// Bounded domains run to exit and `horizon` is ignored. The half-line and half-space need a
/// horizon T; occupation is recorded up to T and up to T/4, and since the neglected tail decays
/// like T^{−d/2} the combination (2^d G(T) − G(T/4))/(2^d − 1) is also returned.
pub fn estimate_green(
    x0: &Point,
    dom: &Domain,
    cells: &[Cell],
    horizon: Option<f64>,
    params: &ProcessParams,
    cfg: &McConfig,
) -> Result<GreenEstimate> {
    check_start(x0, dom, params)?;
    if dom.is_bounded() {
        let run = exit_statistics(x0, dom, &[], cells, params, cfg)?;
        return Ok(GreenEstimate {
            cells: run.cells,
            early: None,
            extrapolated: None,
            occupation_time: run.exit_time,
            capped_fraction: run.capped_fraction,
            warning: run.capped_fraction > 0.01,
            horizon: None,
        });
    }
    let horizon = horizon.ok_or_else(|| domain("an unbounded domain needs an explicit horizon"))?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(domain(format!("horizon must be positive, got {horizon}")));
    }
    let stepper = Stepper::new(params, cfg)?;
    let d = params.d;
    let max_steps = steps_for(horizon, cfg.dt);
    let early_steps = steps_for(0.25 * horizon, cfg.dt);
    let index = CellIndex::new(cells, d);
    let vols: Vec<f64> = cells.iter().map(|c| c.volume(d)).collect();
    let nc = cells.len();
    let w = 2f64.powi(d as i32);
    // Layout: occupation time, alive at horizon, then per cell (full, early, extrapolated).
    let width = 2 + 3 * nc;
    let start = to_array(x0);
    let dt = cfg.dt;
    let m = run_paths(cfg, SALT_PATHS, width, |rng, out| {
        let (head, rest) = out.split_at_mut(2);
        let (full, tail) = rest.split_at_mut(nc);
        let (early, extra) = tail.split_at_mut(nc);
        let end = walk(&stepper, dom, start, max_steps, rng, |k, x, _| {
            index.for_each_hit(x, |i| {
                full[i] += dt;
                if k < early_steps {
                    early[i] += dt;
                }
            });
        });
        head[0] = end.steps as f64 * dt;
        head[1] = if end.exited { 0.0 } else { 1.0 };
        for i in 0..nc {
            full[i] /= vols[i];
            early[i] /= vols[i];
            extra[i] = (w * full[i] - early[i]) / (w - 1.0);
        }
    })?;
    Ok(GreenEstimate {
        cells: m.estimates(2..2 + nc),
        early: Some(m.estimates(2 + nc..2 + 2 * nc)),
        extrapolated: Some(m.estimates(2 + 2 * nc..width)),
        occupation_time: m.estimate(0),
        capped_fraction: m.estimate(1).value,
        warning: false,
        horizon: Some(horizon),
    })
}

/// Half-space Green function estimates G_H(x, y) on a grid of heights y_d and horizontal
/// offsets |ŷ − x̂|, for several dimensions at once.
#[derive(Debug, Clone, Serialize)]
pub struct HalfspaceGreen {
    pub x_d: f64,
    pub heights: Vec<(f64, f64)>,
    pub offsets: Vec<f64>,
    pub dims: Vec<usize>,
    /// Indexed by [dim][height][offset], flattened row-major.
    pub full: Vec<Estimate>,
    pub early: Vec<Estimate>,
    pub extrapolated: Vec<Estimate>,
    pub horizon: f64,
    pub alive_fraction: f64,
}

impl HalfspaceGreen {
    fn idx(&self, dim: usize, height: usize, offset: usize) -> usize {
        (dim * self.heights.len() + height) * self.offsets.len() + offset
    }

    /// (full, early, extrapolated) at the given indices into `dims`, `heights`, `offsets`.
    pub fn at(&self, dim: usize, height: usize, offset: usize) -> (Estimate, Estimate, Estimate) {
        let i = self.idx(dim, height, offset);
        (self.full[i], self.early[i], self.extrapolated[i])
    }
}

/// Green function of H in dimensions `dims` (each ≥ 2) from x = (0, x_d).
///
/// Only the last coordinate and the subordinator clock T are simulated. Given the clock, the
/// horizontal displacement is Gaussian with variance 2T per coordinate, so each visit of the
/// last coordinate to the height cell [y_d − h/2, y_d + h/2) contributes
/// dt · g^{(d−1)}_T(offset) / h. The horizon is handled as in [`estimate_green`].
pub fn estimate_green_halfspace(
    x_d: f64,
    heights: &[(f64, f64)],
    offsets: &[f64],
    dims: &[usize],
    horizon: f64,
    params: &ProcessParams,
    cfg: &McConfig,
) -> Result<HalfspaceGreen> {
    if !(x_d > 0.0) {
        return Err(domain("x_d must be positive"));
    }
    if dims.iter().any(|&d| !(2..=MAX_SIM_DIM).contains(&d)) {
        return Err(domain(format!("half-space dimensions must lie in 2..={MAX_SIM_DIM}")));
    }
    if offsets.iter().any(|&o| !(o > 0.0)) {
        return Err(domain("horizontal offsets must be positive"));
    }
    if heights.iter().any(|&(c, h)| !(h > 0.0) || c - 0.5 * h < 0.0) {
        return Err(domain("height cells must have positive width and lie in H"));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(domain(format!("horizon must be positive, got {horizon}")));
    }
    let line = params.with_d(1);
    let stepper = Stepper::new(&line, cfg)?;
    let max_steps = steps_for(horizon, cfg.dt);
    let early_steps = steps_for(0.25 * horizon, cfg.dt);
    let (nd, nh, no) = (dims.len(), heights.len(), offsets.len());
    let block = nd * nh * no;
    let width = 1 + 3 * block;
    let weights: Vec<f64> = dims.iter().map(|&d| 2f64.powi(d as i32)).collect();
    let off2: Vec<f64> = offsets.iter().map(|o| o * o).collect();
    let dt = cfg.dt;
    let start = to_array(&Point::from(x_d));
    let m = run_paths(cfg, SALT_PATHS, width, |rng, out| {
        let (head, rest) = out.split_at_mut(1);
        let (full, tail) = rest.split_at_mut(block);
        let (early, extra) = tail.split_at_mut(block);
        let end = walk(&stepper, &Domain::HalfLine, start, max_steps, rng, |k, x, clock| {
            if clock == 0.0 {
                return;
            }
            for (hi, &(c, h)) in heights.iter().enumerate() {
                if (x[0] - c).abs() * 2.0 >= h {
                    continue;
                }
                for (di, &d) in dims.iter().enumerate() {
                    let norm = (4.0 * std::f64::consts::PI * clock).powf(-0.5 * (d - 1) as f64) * dt / h;
                    for (oi, &o2) in off2.iter().enumerate() {
                        let v = norm * (-o2 / (4.0 * clock)).exp();
                        let i = (di * nh + hi) * no + oi;
                        full[i] += v;
                        if k < early_steps {
                            early[i] += v;
                        }
                    }
                }
            }
        });
        head[0] = if end.exited { 0.0 } else { 1.0 };
        for (di, &w) in weights.iter().enumerate().take(nd) {
            for i in di * nh * no..(di + 1) * nh * no {
                extra[i] = (w * full[i] - early[i]) / (w - 1.0);
            }
        }
    })?;
    Ok(HalfspaceGreen {
        x_d,
        heights: heights.to_vec(),
        offsets: offsets.to_vec(),
        dims: dims.to_vec(),
        full: m.estimates(1..1 + block),
        early: m.estimates(1 + block..1 + 2 * block),
        extrapolated: m.estimates(1 + 2 * block..width),
        horizon,
        alive_fraction: m.estimate(0).value,
    })
}

/// Empirical E e^{iξ·(X_t − x0)} after one step of length `cfg.dt`; returns (real, imaginary)
/// estimates.
pub fn one_step_characteristic(xi: &[f64], params: &ProcessParams, cfg: &McConfig) -> Result<(Estimate, Estimate)> {
    if xi.len() != params.d {
        return Err(domain("frequency dimension does not match d"));
    }
    let stepper = Stepper::new(params, cfg)?;
    let m = run_paths(cfg, SALT_PATHS, 2, |rng, out| {
        let mut x = [0.0; MAX_SIM_DIM];
        stepper.step(&mut x, rng);
        let phase: f64 = xi.iter().zip(&x).map(|(a, b)| a * b).sum();
        out[0] = phase.cos();
        out[1] = phase.sin();
    })?;
    Ok((m.estimate(0), m.estimate(1)))
}

/// Mean of `f` over `cfg.n_samples` tilted subordinator increments of length t, with the
/// average number of proposals per accepted draw.
pub fn increment_moments<F: Fn(f64) -> f64 + Sync>(t: f64, params: &ProcessParams, cfg: &McConfig, f: F) -> Result<(Estimate, Estimate)> {
    let sampler = IncrementSampler::new(t, params)?;
    let m = run_paths(cfg, SALT_PATHS, 2, |rng, out| {
        let (s, trials) = sampler.draw_counted(rng);
        out[0] = f(s);
        out[1] = trials as f64;
    })?;
    Ok((m.estimate(0), m.estimate(1)))
}

/// Killed transition density p^D_t(x0, ·) averaged over each cell, at each of `times`:
/// P(τ_D > t, X_t ∈ cell)/|cell|. Indexed [time][cell].
pub fn estimate_killed_density(
    x0: &Point,
    times: &[f64],
    cells: &[Cell],
    dom: &Domain,
    params: &ProcessParams,
    cfg: &McConfig,
) -> Result<Vec<Vec<Estimate>>> {
    check_start(x0, dom, params)?;
    if times.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(domain("density times must be positive and finite"));
    }
    let stepper = Stepper::new(params, cfg)?;
    let d = params.d;
    let ks: Vec<usize> = times.iter().map(|&t| steps_for(t, cfg.dt).max(1)).collect();
    let max_k = ks.iter().copied().max().unwrap_or(0);
    let index = CellIndex::new(cells, d);
    let vols: Vec<f64> = cells.iter().map(|c| c.volume(d)).collect();
    let nc = cells.len();
    let start = to_array(x0);
    let m = run_paths(cfg, SALT_PATHS, ks.len() * nc, |rng, out| {
        walk(&stepper, dom, start, max_k + 1, rng, |k, x, _| {
            for (ti, &kt) in ks.iter().enumerate() {
                if kt == k {
                    index.for_each_hit(x, |i| out[ti * nc + i] = 1.0 / vols[i]);
                }
            }
        });
    })?;
    Ok((0..ks.len()).map(|ti| m.estimates(ti * nc..(ti + 1) * nc)).collect())
}

/// Two independent estimates of the half-line Green function at a cell around y, used for the
/// mean-value property on an interval B = (b_lo, b_hi) ⊂ (0, ∞) with y outside B.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeanValueRun {
    /// Occupation density of the cell from x0, up to the horizon.
    pub direct: Estimate,
    /// Mean over exit points z = X_{τ_B} of occupation estimates started afresh at z and run
    /// for the remaining horizon (zero when z ≤ 0).
    pub averaged: Estimate,
    /// Fraction of outer paths leaving B below 0.
    pub killed_at_exit: f64,
}

/// Mean-value check of y ↦ G_(0,∞)(·, y) on B. Both estimates use the same horizon, so their
/// expectations agree exactly for the grid-monitored chain.
pub fn mean_value_run(
    x0: f64,
    b: (f64, f64),
    cell: (f64, f64),
    horizon: f64,
    params: &ProcessParams,
    cfg: &McConfig,
) -> Result<MeanValueRun> {
    let (lo, hi) = b;
    if params.d != 1 {
        return Err(domain("the mean-value check is one-dimensional"));
    }
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(domain(format!("B = ({lo}, {hi}) must be a bounded interval inside (0, inf)")));
    }
    if !(x0 > lo && x0 < hi) {
        return Err(domain(format!("x0 = {x0} is not in B = ({lo}, {hi})")));
    }
    if !(cell.0 < cell.1) || !(cell.0 > 0.0) || (cell.1 > lo && cell.0 < hi) {
        return Err(domain("the target cell must lie in (0, inf) away from the closure of B"));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(domain(format!("horizon must be positive, got {horizon}")));
    }
    let stepper = Stepper::new(params, cfg)?;
    let max_steps = steps_for(horizon, cfg.dt);
    let dt = cfg.dt;
    let h = cell.1 - cell.0;
    let in_cell = |x: &[f64; MAX_SIM_DIM]| x[0] >= cell.0 && x[0] < cell.1;
    let direct = run_paths(cfg, SALT_MEAN_VALUE_DIRECT, 1, |rng, out| {
        walk(&stepper, &Domain::HalfLine, to_array(&Point::from(x0)), max_steps, rng, |_, x, _| {
            if in_cell(x) {
                out[0] += dt / h;
            }
        });
    })?;
    let averaged = run_paths(cfg, SALT_MEAN_VALUE_OUTER, 2, |rng, out| {
        let b_dom = Domain::Interval { r: hi - lo };
        let start = [x0 - lo, 0.0, 0.0];
        let end = walk(&stepper, &b_dom, start, max_steps, rng, |_, _, _| {});
        if !end.exited {
            return;
        }
        let z = end.state[0] + lo;
        if z <= 0.0 {
            out[1] = 1.0;
            return;
        }
        if end.steps >= max_steps {
            return;
        }
        // The exit state is X at step `end.steps`; the continuation is a fresh path from z.
        let mut acc = 0.0;
        walk(&stepper, &Domain::HalfLine, [z, 0.0, 0.0], max_steps - end.steps, rng, |_, x, _| {
            if in_cell(x) {
                acc += dt / h;
            }
        });
        out[0] = acc;
    })?;
    Ok(MeanValueRun { direct: direct.estimate(0), averaged: averaged.estimate(0), killed_at_exit: averaged.estimate(1).value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_horizon_path() {
        let p = ProcessParams::new(1.0, 1.0, 2).unwrap();
        let x0 = Point::new(vec![0.5, 1.0]);
        let mut rng = stream_rng(1, 0, 0);
        let path = simulate_path(&x0, 0.0, &p, &McConfig::default(), &mut rng).unwrap();
        assert_eq!(path.states, vec![x0]);
        assert_eq!(path.times, vec![0.0]);
        assert_eq!(path.exit_index, None);
    }

    #[test]
    fn stopped_path_records_exit() {
        let p = ProcessParams::new(1.0, 1.0, 1).unwrap();
        let mut rng = stream_rng(3, 0, 0);
        let path = simulate_path_in(&Point::from(0.5), 100.0, &Domain::Interval { r: 1.0 }, &p, &McConfig::default(), &mut rng).unwrap();
        let k = path.exit_index.expect("exits well before t = 100");
        assert_eq!(k, path.states.len() - 1);
        assert!(!Domain::Interval { r: 1.0 }.contains(&path.states[k]));
        assert!(path.states[..k].iter().all(|s| Domain::Interval { r: 1.0 }.contains(s)));
    }

    #[test]
    fn refuses_bad_setups() {
        let p = ProcessParams::new(1.0, 100.0, 1).unwrap();
        let cfg = McConfig { n_samples: 10, ..McConfig::default() };
        assert!(estimate_survival(&Point::from(1.0), 1.0, &Domain::HalfLine, &p, &cfg).is_err());
        let p = ProcessParams::new(1.0, 1.0, 1).unwrap();
        assert!(estimate_mean_exit(&Point::from(1.0), &Domain::HalfLine, &p, &cfg).is_err());
        assert!(estimate_survival(&Point::from(-1.0), 1.0, &Domain::HalfLine, &p, &cfg).is_err());
        let bad = Target::Segment { lo: 0.5, hi: 3.0 };
        assert!(estimate_exit_law(&Point::from(1.0), &Domain::Interval { r: 2.0 }, &bad, &p, &cfg).is_err());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let p = ProcessParams::new(1.2, 1.0, 1).unwrap();
        let base = McConfig { n_samples: 3000, master_seed: 11, ..McConfig::default() };
        let dom = Domain::Interval { r: 2.0 };
        let a = exit_statistics(
            &Point::from(0.7),
            &dom,
            &[Target::Complement],
            &Cell::segments(0.0, 2.0, 8),
            &p,
            &McConfig { workers: 1, ..base },
        )
        .unwrap();
        let b = exit_statistics(
            &Point::from(0.7),
            &dom,
            &[Target::Complement],
            &Cell::segments(0.0, 2.0, 8),
            &p,
            &McConfig { workers: 3, ..base },
        )
        .unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
