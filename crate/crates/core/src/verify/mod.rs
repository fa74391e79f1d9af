//! Verification harness: identity checks (equalities to a tolerance) and ratio checks of the
//! two-sided estimates, with JSON and CSV reports.
//!
//! Canonical grids live in `config/grids.toml`, embedded at build time. Reports carry the seed,
//! a hash of the effective configuration and the crate version, and contain nothing that varies
//! between runs with the same configuration.

mod identities;
mod suites;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::quad::QuadSpec;

pub use identities::{check_harmonicity, green1_mass, HarmonicityInput};

/// SHA-256 of the JSON form of a value, hex-encoded.
pub fn hash_json<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("value serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// The canonical configuration shipped with the crate.
pub const DEFAULT_GRIDS: &str = include_str!("../../config/grids.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub quadrature: f64,
    pub monte_carlo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplaceGrid {
    pub t: Vec<f64>,
    pub lambda: Vec<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationGrid {
    pub t: Vec<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyGrid {
    pub points: Vec<[f64; 3]>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassGrid {
    pub x_d: Vec<f64>,
    pub dims: Vec<usize>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingGrid {
    pub points: Vec<[f64; 5]>,
    pub stable: Vec<[f64; 3]>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChapmanGrid {
    pub s: f64,
    pub t: f64,
    pub w: Vec<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussLowerGrid {
    pub n: usize,
    pub interval_r: f64,
    pub interval_x: f64,
    pub interval_cells: usize,
    pub ball_r: f64,
    pub ball_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IkedaGrid {
    pub n: usize,
    pub r: f64,
    pub x: f64,
    pub target: [f64; 2],
    pub cells: usize,
    pub relative_allowance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityGrids {
    pub laplace: LaplaceGrid,
    pub normalization: NormalizationGrid,
    #[serde(rename = "levy-reps")]
    pub levy_reps: LevyGrid,
    #[serde(rename = "green1-mass")]
    pub green1_mass: MassGrid,
    pub scaling: ScalingGrid,
    #[serde(rename = "chapman-kolmogorov")]
    pub chapman_kolmogorov: ChapmanGrid,
    #[serde(rename = "gauss-lower")]
    pub gauss_lower: GaussLowerGrid,
    #[serde(rename = "ikeda-watanabe")]
    pub ikeda_watanabe: IkedaGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Green1Grid {
    pub halfline_points: Vec<f64>,
    pub d3_alpha: f64,
    pub d3_heights: Vec<f64>,
    pub d3_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalflineGrid {
    pub n: usize,
    pub points: Vec<f64>,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailGrid {
    pub n: usize,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalExitGrid {
    pub radii: Vec<f64>,
    pub fractions: Vec<f64>,
    /// Paths per radius.
    pub n: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscapeGrid {
    pub fractions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallExitGrid {
    pub d: usize,
    pub radii: Vec<f64>,
    pub fractions: Vec<f64>,
    pub n: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfspaceGrid {
    pub n: usize,
    pub dims: Vec<usize>,
    pub heights: Vec<f64>,
    pub distances: Vec<f64>,
    pub cell_width: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfspaceGaussGrid {
    pub heights: Vec<f64>,
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalGreenGrid {
    pub radii: Vec<f64>,
    pub n: Vec<usize>,
    /// Distances from 0 used as start and target points.
    pub near_left: Vec<f64>,
    /// Distances from R used as target points.
    pub near_right: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeGrids {
    pub green1: Green1Grid,
    #[serde(rename = "halfline-green")]
    pub halfline_green: HalflineGrid,
    pub tail: TailGrid,
    #[serde(rename = "exit-interval")]
    pub exit_interval: IntervalExitGrid,
    pub escape: EscapeGrid,
    #[serde(rename = "exit-ball")]
    pub exit_ball: BallExitGrid,
    #[serde(rename = "halfspace-green")]
    pub halfspace_green: HalfspaceGrid,
    #[serde(rename = "halfspace-gauss")]
    pub halfspace_gauss: HalfspaceGaussGrid,
    #[serde(rename = "interval-green")]
    pub interval_green: IntervalGreenGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KilledDensityGrid {
    pub enabled: bool,
    pub n: usize,
    pub x: f64,
    pub y: Vec<f64>,
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StretchGrids {
    #[serde(rename = "killed-density-offdiag")]
    pub killed_density: KilledDensityGrid,
}

/// Everything a verification run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub version: u32,
    pub master_seed: u64,
    pub dt: f64,
    pub alphas: Vec<f64>,
    pub m: f64,
    pub thresholds: Thresholds,
    pub quad: QuadSpec,
    pub identities: IdentityGrids,
    pub envelopes: EnvelopeGrids,
    pub stretch: StretchGrids,
    /// Worker threads for Monte Carlo (0: thread-pool default). Not part of the hash.
    #[serde(default, skip_serializing)]
    pub workers: usize,
    /// When set, overrides every per-suite path count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_override: Option<usize>,
    /// When set, only grid points of this dimension are reported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub only_d: Option<usize>,
}

impl VerifyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: VerifyConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn canonical() -> Self {
        Self::from_toml(DEFAULT_GRIDS).expect("the shipped grid file is valid")
    }

    pub fn validate(&self) -> Result<()> {
        self.quad.validate()?;
        if !(self.dt > 0.0) {
            return Err(Error::Config("dt must be positive".into()));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a > 0.0 && *a < 2.0)) {
            return Err(Error::Config("alphas must be non-empty and lie in (0, 2)".into()));
        }
        if !(self.m >= 0.0) {
            return Err(Error::Config("m must be >= 0".into()));
        }
        let e = &self.envelopes;
        if e.exit_interval.n.len() != e.exit_interval.radii.len()
            || e.exit_ball.n.len() != e.exit_ball.radii.len()
            || e.interval_green.n.len() != e.interval_green.radii.len()
        {
            return Err(Error::Config("per-radius path counts must match the radii lists".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex-encoded.
    pub fn hash(&self) -> String {
        hash_json(self)
    }

    /// Restricts every grid to the given α.
    pub fn restrict_alpha(&mut self, alpha: f64) {
        self.alphas = vec![alpha];
    }

    /// Restricts the grids to dimension d where a grid has a dimension axis, and reports only
    /// points of dimension d.
    pub fn restrict_dim(&mut self, d: usize) {
        let i = &mut self.identities;
        i.green1_mass.dims.retain(|&k| k == d);
        i.levy_reps.points.retain(|p| p[1] as usize == d);
        i.scaling.points.retain(|p| p[2] as usize == d);
        i.scaling.stable.retain(|p| p[1] as usize == d);
        let e = &mut self.envelopes;
        e.halfspace_green.dims.retain(|&k| k == d);
        if d >= 2 {
            e.exit_ball.d = d;
        }
        self.only_d = Some(d);
    }

    pub(crate) fn paths(&self, n: usize) -> usize {
        self.n_override.unwrap_or(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Identity,
    Envelope,
    Stretch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Inputs of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub y: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t: Option<f64>,
    #[serde(rename = "R", skip_serializing_if = "Option::is_none", default)]
    pub r: Option<f64>,
    pub d: usize,
    pub alpha: f64,
    pub m: f64,
}

/// A grid point that was not evaluated, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejected {
    pub point: GridPoint,
    pub reason: String,
}

/// Ratio extremes for one (α, d) combination; the constants of an estimate may depend on both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub alpha: f64,
    pub d: usize,
    pub points: usize,
    pub c_min: f64,
    pub c_max: f64,
    pub spread: f64,
    pub branches: BTreeMap<String, [f64; 2]>,
}

/// Result of an identity, envelope or stretch check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub kind: Kind,
    pub citation: String,
    pub version: String,
    pub grid_version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub dt: Option<f64>,
    pub n_paths: Option<Vec<usize>>,
    pub grid: Vec<GridPoint>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Envelope values (ratio checks) or reference values (identities).
    pub references: Vec<f64>,
    pub branches: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ratios: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub residuals: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub allowances: Option<Vec<f64>>,
    pub groups: Vec<Group>,
    pub c_min: Option<f64>,
    pub c_max: Option<f64>,
    pub spread: Option<f64>,
    pub threshold: Option<f64>,
    pub max_residual: Option<f64>,
    pub tolerance: Option<f64>,
    /// Largest relative standard error of a ratio (Monte Carlo checks).
    pub mc_error: Option<f64>,
    pub rejected: Vec<Rejected>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
}

/// CSV column order of [`write_csv`].
pub const CSV_COLUMNS: [&str; 17] = [
    "suite",
    "index",
    "x",
    "y",
    "t",
    "R",
    "d",
    "alpha",
    "m",
    "quantity",
    "std_error",
    "envelope",
    "ratio",
    "branch",
    "seed",
    "config_hash",
    "version",
];

/// Shortest round-trip text of a float; scientific outside [1e-4, 1e16).
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e16).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|c| fmt_f64(*c)).collect::<Vec<_>>().join(" ")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Writes the rows of the reports as CSV. For identities the `envelope` column holds the
/// reference value and `ratio` holds the residual.
pub fn write_csv<W: std::io::Write>(reports: &[Report], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Config(format!("csv output failed: {e}"));
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for r in reports {
        let second = r.ratios.as_ref().or(r.residuals.as_ref());
        for (i, g) in r.grid.iter().enumerate() {
            w.write_record([
                r.name.clone(),
                i.to_string(),
                join(&g.x),
                g.y.as_deref().map(join).unwrap_or_default(),
                opt(g.t),
                opt(g.r),
                g.d.to_string(),
                fmt_f64(g.alpha),
                fmt_f64(g.m),
                fmt_f64(r.values[i]),
                fmt_f64(r.std_errors[i]),
                fmt_f64(r.references[i]),
                second.map(|s| fmt_f64(s[i])).unwrap_or_default(),
                r.branches[i].clone(),
                r.seed.to_string(),
                r.config_hash.clone(),
                r.version.clone(),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Config(format!("csv output failed: {e}")))?;
    Ok(())
}

/// A registered check.
#[derive(Debug, Clone, Copy)]
pub struct Check {
    pub name: &'static str,
    pub kind: Kind,
    pub citation: &'static str,
    /// Included in `all` runs.
    pub enabled: bool,
}

const CHECKS: &[Check] = &[
    Check { name: "laplace", kind: Kind::Identity, citation: "E exp(-λT(t)) = exp(mt) exp(-t(λ + m^{2/α})^{α/2})", enabled: true },
    Check {
        name: "normalization", kind: Kind::Identity, citation: "∫ p_t(x) dx = 1 for p_t(x) = ∫ θ_α(t,u,m) g_u(x) du", enabled: true
    },
    Check {
        name: "levy-reps",
        kind: Kind::Identity,
        citation: "α/(2Γ(1-α/2)) ∫ e^{-u} g_u(x) u^{-1-α/2} du = α2^{(α-d)/2}/(π^{d/2}Γ(1-α/2)) |x|^{-(d+α)/2} K_{(d+α)/2}(|x|)",
        enabled: true,
    },
    Check {
        name: "green1-mass",
        kind: Kind::Identity,
        citation: "∫_H G^1_H(x,y) dy = 1 - E^x e^{-τ_H} = γ(α/2, x_d)/Γ(α/2)",
        enabled: true,
    },
    Check {
        name: "scaling",
        kind: Kind::Identity,
        citation: "p^m_t(x) = m^{d/α} p^1_{mt}(m^{1/α}x); G^stable_H(sx,sy) = s^{α-d} G^stable_H(x,y)",
        enabled: true,
    },
    Check { name: "gauss-lower", kind: Kind::Identity, citation: "G_D(x,y) ≥ (2/α) G^gauss_D(x,y)", enabled: true },
    Check {
        name: "ikeda-watanabe",
        kind: Kind::Identity,
        citation: "P^x(X_{τ_D} ∈ E) = ∫_D G_D(x,y) ν(E - y) dy for dist(D,E) > 0",
        enabled: true,
    },
    Check { name: "chapman-kolmogorov", kind: Kind::Identity, citation: "∫ p_s(x-z) p_t(z-y) dz = p_{s+t}(x-y)", enabled: true },
    Check { name: "green1", kind: Kind::Envelope, citation: "", enabled: true },
    Check { name: "halfline-green", kind: Kind::Envelope, citation: "", enabled: true },
    Check { name: "tail", kind: Kind::Envelope, citation: "", enabled: true },
    Check { name: "exit-interval", kind: Kind::Envelope, citation: "", enabled: true },
    Check { name: "exit-ball", kind: Kind::Envelope, citation: "", enabled: true },
    Check { name: "escape", kind: Kind::Envelope, citation: "", enabled: true },
    Check { name: "halfspace-green", kind: Kind::Envelope, citation: "", enabled: true },
    Check { name: "halfspace-gauss", kind: Kind::Envelope, citation: "", enabled: true },
    Check { name: "interval-green", kind: Kind::Envelope, citation: "", enabled: true },
    Check {
        name: "killed-density-offdiag",
        kind: Kind::Stretch,
        citation: "p^(0,∞)_t(x,y) ≤ C (xy/|x-y|^2 ∧ 1)(g_t((x-y)/(8√2)) + tν((x-y)/(8√2))) for x,y ≥ 1, |x-y| ≥ 1, t ≤ |x-y|^2",
        enabled: false,
    },
];

/// Every registered check, identities first.
pub fn registry() -> Vec<Check> {
    CHECKS
        .iter()
        .map(|c| {
            let mut c = *c;
            if c.kind == Kind::Envelope {
                c.citation = crate::envelopes::band(c.name).map(|b| b.citation).unwrap_or("");
            }
            c
        })
        .collect()
}

fn lookup(name: &str) -> Result<Check> {
    registry().into_iter().find(|c| c.name == name).ok_or_else(|| Error::Lookup { name: name.to_string(), known: suite_names() })
}

/// Names accepted by [`Harness::run`]: groups first, then individual checks.
pub fn suite_names() -> Vec<String> {
    ["all", "identities", "envelopes"].iter().map(|s| s.to_string()).chain(CHECKS.iter().map(|c| c.name.to_string())).collect()
}

/// Runs checks against one configuration, sharing simulations between checks that need the
/// same paths.
pub struct Harness {
    cfg: VerifyConfig,
    hash: String,
    cache: suites::SimCache,
}

impl Harness {
    pub fn new(cfg: VerifyConfig) -> Result<Self> {
        cfg.validate()?;
        let hash = cfg.hash();
        Ok(Harness { cfg, hash, cache: suites::SimCache::default() })
    }

    pub fn config(&self) -> &VerifyConfig {
        &self.cfg
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    /// Resolves a suite name to the checks it runs.
    pub fn resolve(&self, suite: &str) -> Result<Vec<Check>> {
        let all = registry();
        let chosen: Vec<Check> = match suite {
            "all" => {
                all.into_iter().filter(|c| c.enabled || (c.kind == Kind::Stretch && self.cfg.stretch.killed_density.enabled)).collect()
            }
            "identities" => all.into_iter().filter(|c| c.kind == Kind::Identity).collect(),
            "envelopes" => all.into_iter().filter(|c| c.kind == Kind::Envelope).collect(),
            name => vec![lookup(name)?],
        };
        Ok(chosen)
    }

    /// Runs a suite (`all`, `identities`, `envelopes` or a check name); reports are ordered by name.
    pub fn run(&mut self, suite: &str) -> Result<Vec<Report>> {
        let checks = self.resolve(suite)?;
        let mut reports = Vec::with_capacity(checks.len());
        for c in &checks {
            reports.push(self.check(c.name)?);
        }
        reports.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(reports)
    }

    /// Runs one registered check.
    pub fn check(&mut self, name: &str) -> Result<Report> {
        let c = lookup(name)?;
        match c.kind {
            Kind::Identity => identities::run(&c, &self.cfg, &self.hash),
            Kind::Envelope => suites::run(&c, &self.cfg, &self.hash, &mut self.cache),
            Kind::Stretch => suites::run_stretch(&c, &self.cfg, &self.hash),
        }
    }
}

/// Runs one identity check with the given configuration.
pub fn check_identity(name: &str, cfg: &VerifyConfig) -> Result<Report> {
    let c = lookup(name)?;
    if c.kind != Kind::Identity {
        return Err(Error::Lookup {
            name: name.into(),
            known: CHECKS.iter().filter(|c| c.kind == Kind::Identity).map(|c| c.name.into()).collect(),
        });
    }
    Harness::new(cfg.clone())?.check(name)
}

/// Runs one envelope check with the given configuration (its grid comes from `cfg`).
pub fn check_envelope(name: &str, cfg: &VerifyConfig) -> Result<Report> {
    let c = lookup(name)?;
    if c.kind != Kind::Envelope {
        return Err(Error::Lookup {
            name: name.into(),
            known: CHECKS.iter().filter(|c| c.kind == Kind::Envelope).map(|c| c.name.into()).collect(),
        });
    }
    Harness::new(cfg.clone())?.check(name)
}

/// Builder for reports; fills the summary fields from rows.
pub(crate) struct ReportBuilder {
    pub report: Report,
    only_d: Option<usize>,
}

impl ReportBuilder {
    pub fn new(check: &Check, cfg: &VerifyConfig, hash: &str) -> Self {
        ReportBuilder {
            report: Report {
                name: check.name.to_string(),
                kind: check.kind,
                citation: check.citation.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                grid_version: cfg.version,
                seed: cfg.master_seed,
                config_hash: hash.to_string(),
                dt: None,
                n_paths: None,
                grid: Vec::new(),
                values: Vec::new(),
                std_errors: Vec::new(),
                references: Vec::new(),
                branches: Vec::new(),
                ratios: None,
                residuals: None,
                allowances: None,
                groups: Vec::new(),
                c_min: None,
                c_max: None,
                spread: None,
                threshold: None,
                max_residual: None,
                tolerance: None,
                mc_error: None,
                rejected: Vec::new(),
                notes: Vec::new(),
                verdict: Verdict::Fail,
            },
            only_d: cfg.only_d,
        }
    }

    fn keep(&self, point: &GridPoint) -> bool {
        self.only_d.is_none_or(|d| d == point.d)
    }

    /// An empty report is a failure unless the grid was restricted to a dimension it lacks.
    fn empty_ok(&mut self) -> bool {
        let empty = self.report.grid.is_empty();
        if empty {
            if let Some(d) = self.only_d {
                self.report.notes.push(format!("no grid points in dimension {d}"));
                return true;
            }
        }
        false
    }

    pub fn monte_carlo(&mut self, dt: f64, n: Vec<usize>) {
        self.report.dt = Some(dt);
        self.report.n_paths = Some(n);
    }

    pub fn reject(&mut self, point: GridPoint, reason: impl Into<String>) {
        if !self.keep(&point) {
            return;
        }
        self.report.rejected.push(Rejected { point, reason: reason.into() });
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.report.notes.push(s.into());
    }

    /// Row of a ratio check.
    pub fn ratio_row(&mut self, point: GridPoint, value: f64, std_error: f64, envelope: f64, branch: &str) {
        if !self.keep(&point) {
            return;
        }
        let r = &mut self.report;
        r.grid.push(point);
        r.values.push(value);
        r.std_errors.push(std_error);
        r.references.push(envelope);
        r.branches.push(branch.to_string());
        r.ratios.get_or_insert_with(Vec::new).push(value / envelope);
    }

    /// Row of an identity check; `allowance` is the per-point tolerance.
    #[allow(clippy::too_many_arguments)]
    pub fn residual_row(
        &mut self,
        point: GridPoint,
        value: f64,
        std_error: f64,
        reference: f64,
        residual: f64,
        allowance: f64,
        branch: &str,
    ) {
        if !self.keep(&point) {
            return;
        }
        let r = &mut self.report;
        r.grid.push(point);
        r.values.push(value);
        r.std_errors.push(std_error);
        r.references.push(reference);
        r.branches.push(branch.to_string());
        r.residuals.get_or_insert_with(Vec::new).push(residual);
        r.allowances.get_or_insert_with(Vec::new).push(allowance);
    }

    /// Identity verdict: every residual within its allowance.
    pub fn finish_identity(mut self, tolerance: Option<f64>) -> Report {
        let empty_ok = self.empty_ok();
        let r = &mut self.report;
        let res = r.residuals.clone().unwrap_or_default();
        let allow = r.allowances.clone().unwrap_or_default();
        r.max_residual = res.iter().copied().fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
        r.tolerance = tolerance;
        let ok = empty_ok || (!res.is_empty() && res.iter().zip(&allow).all(|(v, a)| v.is_finite() && v <= a));
        r.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
        self.report
    }

    /// Ratio verdict: within every (α, d) group the spread c_max/c_min is at most `threshold`.
    /// The top-level extremes are those of the group with the largest spread.
    pub fn finish_ratio(mut self, threshold: f64) -> Report {
        let empty_ok = self.empty_ok();
        let r = &mut self.report;
        let ratios = r.ratios.clone().unwrap_or_default();
        let mut groups: Vec<Group> = Vec::new();
        for (i, g) in r.grid.iter().enumerate() {
            let q = ratios[i];
            let pos = groups.iter().position(|x| x.alpha == g.alpha && x.d == g.d);
            let grp = match pos {
                Some(p) => &mut groups[p],
                None => {
                    groups.push(Group {
                        alpha: g.alpha,
                        d: g.d,
                        points: 0,
                        c_min: f64::INFINITY,
                        c_max: f64::NEG_INFINITY,
                        spread: 0.0,
                        branches: BTreeMap::new(),
                    });
                    groups.last_mut().expect("just pushed")
                }
            };
            grp.points += 1;
            grp.c_min = grp.c_min.min(q);
            grp.c_max = grp.c_max.max(q);
            let b = grp.branches.entry(r.branches[i].clone()).or_insert([f64::INFINITY, f64::NEG_INFINITY]);
            b[0] = b[0].min(q);
            b[1] = b[1].max(q);
        }
        for g in &mut groups {
            g.spread = if g.c_min > 0.0 { g.c_max / g.c_min } else { f64::INFINITY };
        }
        let worst = groups.iter().max_by(|a, b| a.spread.total_cmp(&b.spread)).cloned();
        r.threshold = Some(threshold);
        r.c_min = worst.as_ref().map(|g| g.c_min);
        r.c_max = worst.as_ref().map(|g| g.c_max);
        r.spread = worst.as_ref().map(|g| g.spread).filter(|s| s.is_finite());
        let mc = ratios
            .iter()
            .zip(&r.std_errors)
            .zip(&r.values)
            .filter(|((_, _), v)| **v != 0.0)
            .map(|((_, se), v)| se / v.abs())
            .fold(0.0f64, f64::max);
        if r.dt.is_some() {
            r.mc_error = Some(mc);
        }
        let ok = empty_ok
            || (!groups.is_empty()
                && ratios.iter().all(|q| q.is_finite() && *q > 0.0)
                && groups.iter().all(|g| g.spread.is_finite() && g.spread <= threshold));
        r.groups = groups;
        r.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
        self.report
    }
}
