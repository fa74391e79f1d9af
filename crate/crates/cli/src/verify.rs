//! `relpot verify`: runs check suites and writes `<suite>.json` and `<suite>.csv`.

use std::path::{Path, PathBuf};

use relpot::verify::{self, Harness, Report, Verdict, VerifyConfig};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{TOOL, VERSION};
use crate::CliError;

#[derive(Debug, clap::Args)]
pub struct VerifyArgs {
    /// `all`, `identities`, `envelopes` or a check name.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Directory for the report files.
    #[arg(long, default_value = "reports")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Document<'a> {
    tool: &'a str,
    version: &'a str,
    seed: u64,
    config_hash: &'a str,
    suite: &'a str,
    reports: &'a [Report],
}

/// The verification config after applying file and flag overrides.
pub fn config(rc: &RunConfig) -> Result<VerifyConfig, CliError> {
    let mut cfg = match &rc.grids {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::usage(format!("cannot read {}: {e}", p.display())))?;
            VerifyConfig::from_toml(&text)?
        }
        None => VerifyConfig::canonical(),
    };
    let x = &rc.explicit;
    if let Some(a) = x.alpha {
        cfg.restrict_alpha(a);
    }
    if let Some(d) = x.d {
        cfg.restrict_dim(d);
    }
    if let Some(m) = x.m {
        cfg.m = m;
    }
    if let Some(s) = x.seed {
        cfg.master_seed = s;
    }
    if let Some(n) = x.n {
        cfg.n_override = Some(n);
    }
    if let Some(dt) = x.dt {
        cfg.dt = dt;
    }
    cfg.workers = rc.mc.workers;
    cfg.validate()?;
    Ok(cfg)
}

fn write(dir: &Path, suite: &str, cfg: &VerifyConfig, hash: &str, reports: &[Report]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
    let doc = Document { tool: TOOL, version: VERSION, seed: cfg.master_seed, config_hash: hash, suite, reports };
    let mut json = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::io(e.to_string()))?;
    json.push(b'\n');
    let jp = dir.join(format!("{suite}.json"));
    std::fs::write(&jp, json).map_err(|e| CliError::io(format!("cannot write {}: {e}", jp.display())))?;
    let cp = dir.join(format!("{suite}.csv"));
    let file = std::fs::File::create(&cp).map_err(|e| CliError::io(format!("cannot write {}: {e}", cp.display())))?;
    verify::write_csv(reports, std::io::BufWriter::new(file))?;
    Ok(())
}

fn summary(r: &Report) -> String {
    let verdict = match r.verdict {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
    };
    let detail = match (r.spread, r.max_residual) {
        (Some(s), _) => format!("spread {s:.3} (threshold {})", r.threshold.map(|t| t.to_string()).unwrap_or("-".into())),
        (None, Some(m)) => format!("max residual {m:.3e}"),
        _ => String::from("no rows"),
    };
    format!("{verdict} {:<28} {detail}", r.name)
}

/// Runs the suite; returns whether every verdict passed.
pub fn run(a: &VerifyArgs, rc: &RunConfig) -> Result<bool, CliError> {
    let cfg = config(rc)?;
    let mut h = Harness::new(cfg)?;
    // Resolve first so an unknown suite fails before any work.
    h.resolve(&a.suite)?;
    let reports = h.run(&a.suite)?;
    write(&a.out, &a.suite, h.config(), h.config_hash(), &reports)?;
    for r in &reports {
        println!("{}", summary(r));
    }
    Ok(reports.iter().all(|r| r.verdict == Verdict::Pass))
}
