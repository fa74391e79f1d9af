//! Run configuration: built-in defaults, then an optional TOML file, then command-line flags.

use std::path::{Path, PathBuf};

use relpot::{McConfig, ProcessParams, QuadSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub alpha: Option<f64>,
    pub m: Option<f64>,
    pub d: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSection {
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_refinements: Option<usize>,
    pub truncation_radius: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub n_samples: Option<usize>,
    pub dt: Option<f64>,
    pub master_seed: Option<u64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Replacement for the shipped grid file.
    pub grids: Option<PathBuf>,
}

/// Contents of a `--config` file; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub quad: QuadSection,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub verify: VerifySection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }
}

/// Flags shared by every subcommand; they override the file.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct Overrides {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub m: Option<f64>,
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Master seed of the Monte Carlo streams.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of paths.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Worker threads (0: all cores); RELPOT_THREADS caps this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,
    /// Output file (standard output when absent).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
}

/// The resolved configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ProcessParams,
    pub quad: QuadSpec,
    pub mc: McConfig,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub grids: Option<PathBuf>,
    /// Values set by the file or flags, before defaults were applied.
    pub explicit: Explicit,
}

#[derive(Debug, Clone, Default)]
pub struct Explicit {
    pub alpha: Option<f64>,
    pub m: Option<f64>,
    pub d: Option<usize>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub dt: Option<f64>,
}

/// What the provenance hash covers: results do not depend on workers or output location.
#[derive(Serialize)]
struct Hashed<'a> {
    params: &'a ProcessParams,
    quad: &'a QuadSpec,
    n_samples: usize,
    dt: f64,
    master_seed: u64,
}

fn threads_cap() -> Result<Option<usize>, String> {
    match std::env::var("RELPOT_THREADS") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| format!("RELPOT_THREADS must be a thread count, got `{v}`")),
        Err(_) => Ok(None),
    }
}

impl RunConfig {
    pub fn resolve(o: &Overrides) -> Result<Self, String> {
        let file = match &o.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let explicit = Explicit {
            alpha: o.alpha.or(file.params.alpha),
            m: o.m.or(file.params.m),
            d: o.d.or(file.params.d),
            seed: o.seed.or(file.mc.master_seed),
            n: o.n.or(file.mc.n_samples),
            dt: o.dt.or(file.mc.dt),
        };
        let defaults = McConfig::default();
        let q = QuadSpec::default();
        let params = ProcessParams {
            alpha: o.alpha.or(file.params.alpha).unwrap_or(1.0),
            m: o.m.or(file.params.m).unwrap_or(1.0),
            d: o.d.or(file.params.d).unwrap_or(1),
        };
        let quad = QuadSpec {
            abs_tol: file.quad.abs_tol.unwrap_or(q.abs_tol),
            rel_tol: o.rel_tol.or(file.quad.rel_tol).unwrap_or(q.rel_tol),
            max_refinements: file.quad.max_refinements.unwrap_or(q.max_refinements),
            truncation_radius: file.quad.truncation_radius.unwrap_or(q.truncation_radius),
        };
        let mut workers = o.threads.or(file.mc.workers).unwrap_or(defaults.workers);
        if let Some(cap) = threads_cap()? {
            if cap > 0 && (workers == 0 || workers > cap) {
                workers = cap;
            }
        }
        let mc = McConfig {
            n_samples: o.n.or(file.mc.n_samples).unwrap_or(defaults.n_samples),
            dt: o.dt.or(file.mc.dt).unwrap_or(defaults.dt),
            master_seed: o.seed.or(file.mc.master_seed).unwrap_or(defaults.master_seed),
            workers,
        };
        Ok(RunConfig {
            params,
            quad,
            mc,
            output: o.output.clone().or(file.output.path),
            format: o.format.or(file.output.format).unwrap_or(Format::Csv),
            grids: file.verify.grids,
            explicit,
        })
    }

    pub fn hash(&self) -> String {
        relpot::verify::hash_json(&Hashed {
            params: &self.params,
            quad: &self.quad,
            n_samples: self.mc.n_samples,
            dt: self.mc.dt,
            master_seed: self.mc.master_seed,
        })
    }
}
