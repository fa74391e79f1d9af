//! `relpot eval`: kernels and envelopes on grids.

use relpot::envelopes::{self, EnvInput};
use relpot::kernels::{self, Domain, Point};
use relpot::{special_fns, subordinator, Error, ProcessParams, QuadSpec};
use serde_json::Value;

use crate::output::{num, opt, text, Table};
use crate::{grid, CliError, DomainArg};

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Kernel or envelope name (see `relpot list`).
    #[arg(long)]
    pub what: String,
    /// First point: its last coordinate (|x| for radial quantities).
    #[arg(long)]
    pub x: Option<String>,
    /// Second point: its last coordinate.
    #[arg(long)]
    pub y: Option<String>,
    /// Horizontal offset of y along the first axis (d ≥ 2).
    #[arg(long, default_value_t = 0.0)]
    pub offset: f64,
    #[arg(long)]
    pub t: Option<String>,
    #[arg(long = "R")]
    pub r: Option<String>,
    /// Subordinator level for theta and theta-cdf.
    #[arg(long)]
    pub u: Option<String>,
    /// Laplace variable for subordinator-laplace.
    #[arg(long)]
    pub lambda: Option<String>,
    /// Order for bessel-k.
    #[arg(long)]
    pub nu: Option<String>,
    /// Domain for green-gauss.
    #[arg(long, value_enum)]
    pub domain: Option<DomainArg>,
}

pub const COLUMNS: &[&str] =
    &["what", "x", "y", "offset", "t", "R", "u", "lambda", "nu", "alpha", "m", "d", "value", "error_estimate", "branch"];

const KERNELS: &[&str] = &[
    "gaussian",
    "levy",
    "levy-integral",
    "transition",
    "u1",
    "poisson1",
    "green1",
    "green-gauss",
    "green-stable",
    "theta",
    "theta-cdf",
    "subordinator-laplace",
    "bessel-k",
];

const EXTRA_ENVELOPES: &[&str] = &["env-halfline-piecewise", "env-stable-interval"];

/// Every name `--what` accepts.
pub fn names() -> Vec<String> {
    let mut v: Vec<String> = KERNELS.iter().map(|s| s.to_string()).collect();
    v.extend(envelopes::bands().iter().map(|b| format!("env-{}", b.name)));
    v.extend(EXTRA_ENVELOPES.iter().map(|s| s.to_string()));
    v
}

/// Axes a name reads, in iteration order.
fn axes(what: &str, a: &EvalArgs) -> Vec<&'static str> {
    let given = |name: &'static str, v: &Option<String>| v.as_ref().map(|_| name);
    match what {
        "gaussian" | "transition" => vec!["t", "x"],
        "levy" | "levy-integral" | "u1" => vec!["x"],
        "poisson1" | "green1" | "green-stable" | "env-halfline-piecewise" => vec!["x", "y"],
        "green-gauss" => ["x", "y"].into_iter().chain(given("R", &a.r)).collect(),
        "env-stable-interval" => vec!["x", "y", "R"],
        "theta" | "theta-cdf" => vec!["t", "u"],
        "subordinator-laplace" => vec!["t", "lambda"],
        "bessel-k" => vec!["nu", "x"],
        // Envelope bands read x plus whatever else is supplied.
        _ => std::iter::once(Some("x")).chain([given("y", &a.y), given("t", &a.t), given("R", &a.r)]).flatten().collect(),
    }
}

fn axis_grid(name: &str, a: &EvalArgs) -> Result<Vec<f64>, CliError> {
    let spec = match name {
        "x" => &a.x,
        "y" => &a.y,
        "t" => &a.t,
        "R" => &a.r,
        "u" => &a.u,
        "lambda" => &a.lambda,
        _ => &a.nu,
    };
    let spec = spec.as_ref().ok_or_else(|| CliError::usage(format!("--what {} needs --{name}", a.what)))?;
    grid::parse(spec).map_err(|e| CliError::usage(format!("--{name}: {e}")))
}

/// One grid point of the product of the axes.
#[derive(Debug, Default, Clone, Copy)]
struct At {
    x: Option<f64>,
    y: Option<f64>,
    t: Option<f64>,
    r: Option<f64>,
    u: Option<f64>,
    lambda: Option<f64>,
    nu: Option<f64>,
}

impl At {
    fn describe(&self) -> String {
        let f = [("x", self.x), ("y", self.y), ("t", self.t), ("R", self.r), ("u", self.u), ("lambda", self.lambda), ("nu", self.nu)];
        f.iter().filter_map(|(n, v)| v.map(|v| format!("{n}={v}"))).collect::<Vec<_>>().join(" ")
    }

    fn set(&mut self, axis: &str, v: f64) {
        match axis {
            "x" => self.x = Some(v),
            "y" => self.y = Some(v),
            "t" => self.t = Some(v),
            "R" => self.r = Some(v),
            "u" => self.u = Some(v),
            "lambda" => self.lambda = Some(v),
            _ => self.nu = Some(v),
        }
    }
}

fn product(axes: &[&'static str], grids: &[Vec<f64>]) -> Vec<At> {
    let mut out = vec![At::default()];
    for (axis, g) in axes.iter().zip(grids) {
        out = out
            .iter()
            .flat_map(|p| {
                g.iter().map(move |&v| {
                    let mut q = *p;
                    q.set(axis, v);
                    q
                })
            })
            .collect();
    }
    out
}

fn domain(a: &EvalArgs, r: Option<f64>, d: usize) -> Result<Domain, CliError> {
    let dom = a.domain.ok_or_else(|| CliError::usage("--what green-gauss needs --domain"))?.to_domain(r)?;
    dom.validate(d)?;
    Ok(dom)
}

struct Value2 {
    value: f64,
    error: Option<f64>,
    branch: Option<&'static str>,
}

fn plain(v: f64) -> Value2 {
    Value2 { value: v, error: None, branch: None }
}

fn integral(i: relpot::Integral) -> Value2 {
    Value2 { value: i.value, error: Some(i.error), branch: None }
}

fn need(v: Option<f64>, name: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::usage(format!("missing --{name}")))
}

fn one(what: &str, a: &EvalArgs, p: &At, params: &ProcessParams, quad: &QuadSpec) -> Result<Value2, CliError> {
    let d = params.d;
    let x = || need(p.x, "x").map(|v| Point::on_axis(d, v));
    let y = || need(p.y, "y").map(|v| Point::with_offset(d, a.offset, v));
    let r = match what {
        "gaussian" => plain(kernels::gaussian_kernel(need(p.t, "t")?, &x()?)?),
        "levy" => plain(kernels::levy_density(&x()?, params)?),
        "levy-integral" => integral(kernels::levy_density_integral(&x()?, params, quad)?),
        "transition" => integral(kernels::transition_density_with(need(p.t, "t")?, &x()?, params, quad)?),
        "u1" => plain(kernels::potential_u1(&x()?, params)?),
        "poisson1" => plain(kernels::poisson1_halfspace(&x()?, &y()?, params)?),
        "green1" => integral(kernels::green1_halfspace_with(&x()?, &y()?, params, quad)?),
        "green-gauss" => plain(kernels::green_gauss(&domain(a, p.r, d)?, &x()?, &y()?)?),
        "green-stable" => {
            let c = kernels::stable_green_constant(params)?;
            integral(kernels::green_stable_halfspace_with(&x()?, &y()?, params, c, quad)?)
        }
        "theta" => plain(subordinator::theta_density(need(p.t, "t")?, need(p.u, "u")?, params)?),
        "theta-cdf" => plain(subordinator::theta_cdf(need(p.t, "t")?, need(p.u, "u")?, params)?),
        "subordinator-laplace" => plain(subordinator::subordinator_laplace(need(p.lambda, "lambda")?, need(p.t, "t")?, params)?),
        "bessel-k" => plain(special_fns::bessel_k(need(p.nu, "nu")?, need(p.x, "x")?)?),
        "env-halfline-piecewise" => plain(envelopes::env_green_halfline_piecewise(need(p.x, "x")?, need(p.y, "y")?, params)?),
        "env-stable-interval" => plain(envelopes::env_green_stable_interval(need(p.x, "x")?, need(p.y, "y")?, need(p.r, "R")?, params)?),
        other => {
            let band = envelopes::band(other.strip_prefix("env-").unwrap_or(""))
                .map_err(|_| Error::Lookup { name: other.to_string(), known: names() })?;
            let mut input = match p.y {
                Some(_) => EnvInput::pair(x()?, y()?),
                None => EnvInput::point(x()?),
            };
            input.t = p.t;
            input.r = p.r;
            let value = band.eval(&input, params)?;
            Value2 { value, error: None, branch: band.branch(&input, params) }
        }
    };
    Ok(r)
}

pub fn run(a: &EvalArgs, params: &ProcessParams, quad: &QuadSpec) -> Result<Table, CliError> {
    if !names().contains(&a.what) {
        return Err(Error::Lookup { name: a.what.clone(), known: names() }.into());
    }
    params.validate()?;
    quad.validate()?;
    let axes = axes(&a.what, a);
    let grids = axes.iter().map(|n| axis_grid(n, a)).collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new("eval", COLUMNS);
    for p in product(&axes, &grids) {
        let v = one(&a.what, a, &p, params, quad).map_err(|e| e.at(&p.describe()))?;
        let offset = p.y.map(|_| num(a.offset));
        table.push(&[
            ("what", text(&a.what)),
            ("x", opt(p.x)),
            ("y", opt(p.y)),
            ("offset", offset.unwrap_or(Value::Null)),
            ("t", opt(p.t)),
            ("R", opt(p.r)),
            ("u", opt(p.u)),
            ("lambda", opt(p.lambda)),
            ("nu", opt(p.nu)),
            ("alpha", num(params.alpha)),
            ("m", num(params.m)),
            ("d", Value::from(params.d)),
            ("value", num(v.value)),
            ("error_estimate", opt(v.error)),
            ("branch", v.branch.map(text).unwrap_or(Value::Null)),
        ]);
    }
    Ok(table)
}

impl CliError {
    /// Adds the offending grid point to domain errors.
    fn at(self, p: &str) -> Self {
        if self.code == crate::EXIT_DOMAIN {
            CliError { code: self.code, msg: format!("{} (at {p})", self.msg) }
        } else {
            self
        }
    }
}
