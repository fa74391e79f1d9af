//! `relpot simulate`: Monte Carlo estimates from the path simulator.

use relpot::kernels::{Domain, Point};
use relpot::montecarlo::{self, Cell, Estimate, Target};
use relpot::{McConfig, ProcessParams};
use serde_json::Value;

use crate::output::{num, opt, text, Table};
use crate::{grid, CliError, DomainArg};

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum Kind {
    /// P^x(τ_D > t) at each --t.
    Survival,
    /// E^x τ_D at dt and dt/2 (bounded domains).
    Exit,
    /// Occupation density G_D(x, ·) on --cells cells.
    Green,
    /// P^x(X_{τ_D} ∈ E) for E = [lo, hi] given by --E.
    Exitlaw,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Survival => "survival",
            Kind::Exit => "exit",
            Kind::Green => "green",
            Kind::Exitlaw => "exitlaw",
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long, value_enum)]
    pub domain: DomainArg,
    /// Starting point: last coordinate (|x| in a ball).
    #[arg(long)]
    pub x: String,
    /// Times for survival.
    #[arg(long)]
    pub t: Option<String>,
    /// Domain size; for green on the half-line or half-space it is the extent of the cells.
    #[arg(long = "R")]
    pub r: Option<String>,
    /// Target segment `lo,hi` on the first axis (`inf` allowed).
    #[arg(long = "E")]
    pub e: Option<String>,
    /// Number of cells for green.
    #[arg(long, default_value_t = 20)]
    pub cells: usize,
    /// Occupation horizon for green on unbounded domains.
    #[arg(long)]
    pub horizon: Option<f64>,
}

pub const COLUMNS: &[&str] = &[
    "kind",
    "domain",
    "x",
    "t",
    "R",
    "target_lo",
    "target_hi",
    "cell_lo",
    "cell_hi",
    "quantity",
    "value",
    "std_error",
    "n",
    "dt",
    "capped_fraction",
    "alpha",
    "m",
    "d",
];

fn parse(name: &str, spec: &str) -> Result<Vec<f64>, CliError> {
    grid::parse(spec).map_err(|e| CliError::usage(format!("--{name}: {e}")))
}

struct Row<'a> {
    base: Vec<(&'a str, Value)>,
}

impl<'a> Row<'a> {
    fn push(&self, table: &mut Table, extra: Vec<(&'a str, Value)>, q: &str, e: Estimate) {
        let mut cells = self.base.clone();
        cells.extend(extra);
        cells.push(("quantity", text(q)));
        cells.push(("value", num(e.value)));
        cells.push(("std_error", num(e.std_error)));
        cells.push(("n", Value::from(e.n)));
        table.push(&cells);
    }
}

pub fn run(a: &SimulateArgs, params: &ProcessParams, mc: &McConfig) -> Result<Table, CliError> {
    params.validate()?;
    mc.validate()?;
    let xs = parse("x", &a.x)?;
    let bounded = matches!(a.domain, DomainArg::Interval | DomainArg::Ball);
    let radii: Vec<Option<f64>> = match &a.r {
        Some(s) => parse("R", s)?.into_iter().map(Some).collect(),
        None => vec![None],
    };
    let mut table = Table::new("simulate", COLUMNS);
    for &r in &radii {
        let dom = a.domain.to_domain(r)?;
        dom.validate(params.d)?;
        for &x in &xs {
            let x0 = Point::on_axis(params.d, x);
            let base = Row {
                base: vec![
                    ("kind", text(a.kind.name())),
                    ("domain", text(dom.name())),
                    ("x", num(x)),
                    ("R", opt(r)),
                    ("dt", num(mc.dt)),
                    ("alpha", num(params.alpha)),
                    ("m", num(params.m)),
                    ("d", Value::from(params.d)),
                ],
            };
            let at = |e: CliError| e.with_point(x, r);
            match a.kind {
                Kind::Survival => {
                    let ts = parse("t", a.t.as_deref().ok_or_else(|| CliError::usage("survival needs --t"))?)?;
                    let est = montecarlo::estimate_survival_curve(&x0, &ts, &dom, params, mc).map_err(|e| at(e.into()))?;
                    for (t, e) in ts.iter().zip(est) {
                        base.push(&mut table, vec![("t", num(*t))], "survival", e);
                    }
                }
                Kind::Exit => {
                    let me = montecarlo::estimate_mean_exit(&x0, &dom, params, mc).map_err(|e| at(e.into()))?;
                    let capped = vec![("capped_fraction", num(me.capped_fraction))];
                    base.push(&mut table, capped.clone(), "mean-exit", me.estimate);
                    let mut half = capped;
                    half.push(("dt", num(0.5 * mc.dt)));
                    base.push(&mut table, half, "mean-exit-half-dt", me.half_dt);
                }
                Kind::Exitlaw => {
                    let spec = a.e.as_deref().ok_or_else(|| CliError::usage("exitlaw needs --E lo,hi"))?;
                    let &[lo, hi] = &parse("E", spec)?[..] else {
                        return Err(CliError::usage("--E takes exactly two numbers lo,hi"));
                    };
                    let target = Target::Segment { lo, hi };
                    let est = montecarlo::estimate_exit_law(&x0, &dom, &target, params, mc).map_err(|e| at(e.into()))?;
                    base.push(&mut table, vec![("target_lo", num(lo)), ("target_hi", num(hi))], "exit-law", est);
                }
                Kind::Green => green(a, &dom, r, bounded, &x0, params, mc, &base, &mut table).map_err(at)?,
            }
        }
    }
    Ok(table)
}

#[allow(clippy::too_many_arguments)]
fn green(
    a: &SimulateArgs,
    dom: &Domain,
    r: Option<f64>,
    bounded: bool,
    x0: &Point,
    params: &ProcessParams,
    mc: &McConfig,
    base: &Row,
    table: &mut Table,
) -> Result<(), CliError> {
    if a.cells == 0 {
        return Err(CliError::usage("--cells must be at least 1"));
    }
    let extent = r.ok_or_else(|| CliError::usage("green needs --R (domain size, or cell extent when unbounded)"))?;
    let cells = match dom {
        Domain::Ball { .. } => Cell::shells(extent, a.cells),
        Domain::HalfSpace if params.d > 1 => {
            return Err(relpot::Error::Domain("green on the half-space is simulated for d = 1 only".into()).into())
        }
        _ => Cell::segments(0.0, extent, a.cells),
    };
    let horizon = if bounded { None } else { a.horizon };
    let g = montecarlo::estimate_green(x0, dom, &cells, horizon, params, mc)?;
    let capped = ("capped_fraction", num(g.capped_fraction));
    for (i, c) in cells.iter().enumerate() {
        let (lo, hi) = match *c {
            Cell::Segment { lo, hi } => (lo, hi),
            Cell::Shell { r_lo, r_hi } => (r_lo, r_hi),
        };
        let at = vec![("cell_lo", num(lo)), ("cell_hi", num(hi)), capped.clone(), ("t", opt(g.horizon))];
        base.push(table, at.clone(), "green", g.cells[i]);
        if let Some(ex) = &g.extrapolated {
            base.push(table, at, "green-extrapolated", ex[i]);
        }
    }
    Ok(())
}

impl CliError {
    fn with_point(self, x: f64, r: Option<f64>) -> Self {
        if self.code != crate::EXIT_DOMAIN {
            return self;
        }
        let at = match r {
            Some(r) => format!("x={x} R={r}"),
            None => format!("x={x}"),
        };
        CliError { code: self.code, msg: format!("{} (at {at})", self.msg) }
    }
}
