//! Constant-free comparison functions of the two-sided Green function, exit time, escape and
//! survival estimates. Each returns the right-hand side of an "≈" statement; the constants are
//! measured by the verification harness.
//!
//! Notation: x̃ = x^{α/2} ∨ x, δ_R(x) = x ∧ (R − x).

use crate::error::{domain, Error, Result};
use crate::kernels::{green_gauss, Domain, Point};
use crate::special_fns::ln_bessel_k;
use crate::subordinator::ProcessParams;

/// x^{α/2} ∨ x.
pub fn tilde(x: f64, alpha: f64) -> f64 {
    x.powf(0.5 * alpha).max(x)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive and finite, got {v}")))
    }
}

fn inside_interval(x: f64, r: f64) -> Result<()> {
    positive("R", r)?;
    if !(x > 0.0 && x < r) {
        return Err(domain(format!("x = {x} is not in (0, {r})")));
    }
    Ok(())
}

/// Which case of the 1-Green comparison function applies.
pub fn green1_branch(x: &Point, y: &Point, params: &ProcessParams) -> &'static str {
    let r = x.dist(y);
    let m = 1f64.min(x.last()).min(y.last());
    if params.d == 1 && params.alpha >= 1.0 {
        if r >= m {
            "far"
        } else if params.alpha == 1.0 {
            "near-log"
        } else {
            "near-power"
        }
    } else {
        "bessel"
    }
}

/// Comparison function for the 1-Green function of H.
///
/// d = 1, α ≥ 1: e^{−r} r^{α/2−1} (1∧x∧y)^{α/2} when r ≥ 1∧x∧y, otherwise log(2(1∧x∧y)/r)
/// for α = 1 and (1∧x∧y)^{α−1} for α > 1. When α < d:
/// K_{(d−α)/2}(r)/r^{(d−α)/2} · [((1∧x_d∧y_d)/(r∧1))^{α/2} ∧ 1].
pub fn env_green1(x: &Point, y: &Point, params: &ProcessParams) -> Result<f64> {
    params.validate()?;
    let (xd, yd) = (x.last(), y.last());
    if x.dim() != params.d || y.dim() != params.d {
        return Err(domain("point dimension does not match d"));
    }
    if !(xd > 0.0 && yd > 0.0) {
        return Err(domain("both points must lie in H"));
    }
    let r = x.dist(y);
    if r == 0.0 {
        return Err(Error::Singularity("x = y".into()));
    }
    let a = params.alpha;
    let m = 1f64.min(xd).min(yd);
    let d = params.d as f64;
    if params.d == 1 && a >= 1.0 {
        return Ok(match green1_branch(x, y, params) {
            "far" => (-r).exp() * r.powf(0.5 * a - 1.0) * m.powf(0.5 * a),
            "near-log" => (2.0 * m / r).ln(),
            _ => m.powf(a - 1.0),
        });
    }
    if a < d {
        let nu = 0.5 * (d - a);
        let k = (ln_bessel_k(nu, r)? - nu * r.ln()).exp();
        return Ok(k * (m / r.min(1.0)).powf(0.5 * a).min(1.0));
    }
    Err(Error::Regime(format!("no 1-Green comparison for d = {}, alpha = {a}", params.d)))
}

/// Half-line Green comparison function: the 1-Green envelope plus (x∧y) ∨ (x∧y)^{α/2}.
pub fn env_green_halfline(x: f64, y: f64, params: &ProcessParams) -> Result<f64> {
    if params.d != 1 {
        return Err(domain("the half-line envelope needs d = 1"));
    }
    positive("x", x)?;
    positive("y", y)?;
    let g1 = env_green1(&Point::from(x), &Point::from(y), params)?;
    Ok(g1 + tilde(x.min(y), params.alpha))
}

/// Piecewise equivalent of the half-line envelope, for x ≤ y (arguments are sorted):
/// G¹ if x ≤ 1 and y − x < 1, G¹ + x if x > 1 and y − x < 1, x ∨ x^{α/2} if y − x ≥ 1.
pub fn env_green_halfline_piecewise(x: f64, y: f64, params: &ProcessParams) -> Result<f64> {
    let (x, y) = (x.min(y), x.max(y));
    positive("x", x)?;
    if y - x >= 1.0 {
        return Ok(tilde(x, params.alpha));
    }
    let g1 = env_green1(&Point::from(x), &Point::from(y), params)?;
    Ok(if x <= 1.0 { g1 } else { g1 + x })
}

/// Survival comparison function ((x_d^{α/2} ∨ x_d)/√t) ∧ 1, for t ≥ 1.
pub fn env_tail_halfspace(x_d: f64, t: f64, params: &ProcessParams) -> Result<f64> {
    positive("x_d", x_d)?;
    if !(t >= 1.0) || !t.is_finite() {
        return Err(Error::Regime(format!("the tail comparison needs t >= 1, got {t}")));
    }
    Ok((tilde(x_d, params.alpha) / t.sqrt()).min(1.0))
}

/// Mean exit time from (0, R): (x^{α/2} ∨ x)((R−x)^{α/2} ∨ (R−x)).
pub fn env_exit_interval(x: f64, r: f64, params: &ProcessParams) -> Result<f64> {
    inside_interval(x, r)?;
    Ok(tilde(x, params.alpha) * tilde(r - x, params.alpha))
}

/// Mean exit time from the ball B(0, R): ((R−|x|)^{α/2} ∨ (R−|x|))(R ∨ R^{α/2}).
pub fn env_exit_ball(x: &Point, r: f64, params: &ProcessParams) -> Result<f64> {
    positive("R", r)?;
    let n = x.norm();
    if !(n < r) {
        return Err(domain(format!("|x| = {n} is not below R = {r}")));
    }
    Ok(tilde(r - n, params.alpha) * tilde(r, params.alpha))
}

/// Probability of leaving (0, R) through the right: (x^{α/2} ∨ x)/(R^{α/2} ∨ R).
pub fn env_escape_prob(x: f64, r: f64, params: &ProcessParams) -> Result<f64> {
    inside_interval(x, r)?;
    Ok(tilde(x, params.alpha) / tilde(r, params.alpha))
}

pub fn halfspace_branch(x: &Point, y: &Point) -> &'static str {
    if x.dist(y) > 3.0 {
        "far"
    } else {
        "near"
    }
}

/// Green comparison function of H for d ≥ 2.
///
/// d ≥ 3: min(x̃ỹ/r^d, r^{2−d}) for r > 3, and [((x_d∧y_d)/r)^{α/2} ∧ 1] r^{α−d} for r ≤ 3.
/// d = 2: ln(1 + 4x̃ỹ/r²) for r > 3, and [((x₂∧y₂)/r)^{α/2} ∧ 1] r^{α−2} + ln(1 ∨ (x₂∧y₂)).
pub fn env_green_halfspace(x: &Point, y: &Point, params: &ProcessParams) -> Result<f64> {
    let d = params.d;
    if d < 2 || x.dim() != d || y.dim() != d {
        return Err(domain("the half-space Green envelope needs d >= 2 and matching points"));
    }
    let (xd, yd) = (x.last(), y.last());
    if !(xd > 0.0 && yd > 0.0) {
        return Err(domain("both points must lie in H"));
    }
    let r = x.dist(y);
    if r == 0.0 {
        return Err(Error::Singularity("x = y".into()));
    }
    let a = params.alpha;
    let df = d as f64;
    let (xt, yt) = (tilde(xd, a), tilde(yd, a));
    let low = xd.min(yd);
    Ok(match (d, halfspace_branch(x, y)) {
        (2, "far") => (4.0 * xt * yt / (r * r)).ln_1p(),
        (2, _) => (low / r).powf(0.5 * a).min(1.0) * r.powf(a - 2.0) + low.max(1.0).ln(),
        (_, "far") => (xt * yt / r.powf(df)).min(r.powf(2.0 - df)),
        _ => (low / r).powf(0.5 * a).min(1.0) * r.powf(a - df),
    })
}

/// The Brownian Green function of H as a comparison function (|x−y| > 2, x_d, y_d ≥ 1).
pub fn env_green_halfspace_gauss(x: &Point, y: &Point, params: &ProcessParams) -> Result<f64> {
    if params.d < 2 {
        return Err(domain("the Gaussian half-space envelope needs d >= 2"));
    }
    green_gauss(&Domain::HalfSpace, x, y)
}

pub fn interval_branch(x: f64, y: f64) -> &'static str {
    if (x - y).abs() <= 1.0 {
        "near"
    } else {
        "far"
    }
}

/// Green comparison function of (0, R), R ≥ 4 (arguments are sorted so that x ≤ y):
/// min of the half-line envelopes at (x, y) and (R−x, R−y) when y − x ≤ 1, and
/// (x^{α/2} ∨ x)((R−y)^{α/2} ∨ (R−y))/R otherwise.
pub fn env_green_interval(x: f64, y: f64, r: f64, params: &ProcessParams) -> Result<f64> {
    let (x, y) = (x.min(y), x.max(y));
    inside_interval(x, r)?;
    inside_interval(y, r)?;
    if r < 4.0 {
        return Err(Error::Regime(format!("the interval Green envelope needs R >= 4, got {r}")));
    }
    if interval_branch(x, y) == "near" {
        let left = env_green_halfline_piecewise(x, y, params)?;
        let right = env_green_halfline_piecewise(r - x, r - y, params)?;
        Ok(left.min(right))
    } else {
        Ok(tilde(x, params.alpha) * tilde(r - y, params.alpha) / r)
    }
}

/// Stable Green comparison function of (0, R) with δ = δ_R(x)δ_R(y):
/// α < 1: min(r^{α−1}, δ^{α/2}/r); α = 1: ln(1 + √δ/r); α > 1: min(δ^{(α−1)/2}, δ^{α/2}/r).
pub fn env_green_stable_interval(x: f64, y: f64, r: f64, params: &ProcessParams) -> Result<f64> {
    inside_interval(x, r)?;
    inside_interval(y, r)?;
    let a = params.alpha;
    let delta = x.min(r - x) * y.min(r - y);
    let dist = (x - y).abs();
    if a > 1.0 {
        return Ok(if dist == 0.0 { delta.powf(0.5 * (a - 1.0)) } else { delta.powf(0.5 * (a - 1.0)).min(delta.powf(0.5 * a) / dist) });
    }
    if dist == 0.0 {
        return Err(Error::Singularity("x = y".into()));
    }
    Ok(if a < 1.0 { dist.powf(a - 1.0).min(delta.powf(0.5 * a) / dist) } else { (delta.sqrt() / dist).ln_1p() })
}

/// Inputs of an envelope evaluation; unused fields stay `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvInput {
    pub x: Point,
    pub y: Option<Point>,
    pub t: Option<f64>,
    pub r: Option<f64>,
}

impl EnvInput {
    pub fn point(x: Point) -> Self {
        EnvInput { x, y: None, t: None, r: None }
    }

    pub fn pair(x: Point, y: Point) -> Self {
        EnvInput { x, y: Some(y), t: None, r: None }
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn with_r(mut self, r: f64) -> Self {
        self.r = Some(r);
        self
    }

    fn y(&self) -> Result<&Point> {
        self.y.as_ref().ok_or_else(|| domain("this envelope needs a second point y"))
    }

    fn t(&self) -> Result<f64> {
        self.t.ok_or_else(|| domain("this envelope needs a time t"))
    }

    fn r(&self) -> Result<f64> {
        self.r.ok_or_else(|| domain("this envelope needs a size R"))
    }

    fn x1(&self) -> f64 {
        self.x.coords[0]
    }
}

type EvalFn = fn(&EnvInput, &ProcessParams) -> Result<f64>;
type RegimeFn = fn(&EnvInput, &ProcessParams) -> Option<&'static str>;

/// A named two-sided comparison function with the regime it is asserted on.
#[derive(Clone, Copy)]
pub struct EnvelopeBand {
    pub name: &'static str,
    pub citation: &'static str,
    pub regime: &'static str,
    eval: EvalFn,
    branch: RegimeFn,
}

impl std::fmt::Debug for EnvelopeBand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EnvelopeBand").field("name", &self.name).field("regime", &self.regime).finish()
    }
}

impl EnvelopeBand {
    /// The branch of the estimate that applies, or `None` outside the regime.
    pub fn branch(&self, input: &EnvInput, params: &ProcessParams) -> Option<&'static str> {
        (self.branch)(input, params)
    }

    pub fn in_regime(&self, input: &EnvInput, params: &ProcessParams) -> bool {
        self.branch(input, params).is_some()
    }

    /// Envelope value; points outside the regime give a regime error.
    pub fn eval(&self, input: &EnvInput, params: &ProcessParams) -> Result<f64> {
        if !self.in_regime(input, params) {
            return Err(Error::Regime(format!("{:?} is outside the regime of {} ({})", input, self.name, self.regime)));
        }
        (self.eval)(input, params)
    }
}

fn in_h(p: &Point) -> bool {
    p.last() > 0.0
}

const BANDS: &[EnvelopeBand] = &[
    EnvelopeBand {
        name: "green1",
        citation: "G^1_H(x,y) ≈ K_{(d-α)/2}(|x-y|)/|x-y|^{(d-α)/2} [((1∧x_d∧y_d)/(|x-y|∧1))^{α/2} ∧ 1] for α < d; explicit three-case form for d = 1, α ≥ 1",
        regime: "x != y in H",
        eval: |i, p| env_green1(&i.x, i.y()?, p),
        branch: |i, p| {
            let y = i.y.as_ref()?;
            (in_h(&i.x) && in_h(y) && i.x != *y && (p.alpha < p.d as f64 || p.d == 1)).then(|| green1_branch(&i.x, y, p))
        },
    },
    EnvelopeBand {
        name: "halfline-green",
        citation: "G_(0,∞)(x,y) ≈ G^1_(0,∞)(x,y) + (x∧y) ∨ (x∧y)^{α/2}",
        regime: "d = 1, x != y > 0",
        eval: |i, p| env_green_halfline(i.x1(), i.y()?.coords[0], p),
        branch: |i, p| {
            let y = i.y.as_ref()?;
            (p.d == 1 && i.x1() > 0.0 && y.coords[0] > 0.0 && i.x != *y).then_some("all")
        },
    },
    EnvelopeBand {
        name: "tail",
        citation: "P^x(τ_H > t) ≈ ((x_d^{α/2} ∨ x_d)/√t) ∧ 1, t ≥ 1",
        regime: "x_d > 0, t >= 1",
        eval: |i, p| env_tail_halfspace(i.x.last(), i.t()?, p),
        branch: |i, _| (in_h(&i.x) && i.t? >= 1.0).then_some("all"),
    },
    EnvelopeBand {
        name: "exit-interval",
        citation: "E^x τ_(0,R) ≈ (x^{α/2} ∨ x)((R-x)^{α/2} ∨ (R-x))",
        regime: "0 < x < R",
        eval: |i, p| env_exit_interval(i.x1(), i.r()?, p),
        branch: |i, p| (p.d == 1 && i.x1() > 0.0 && i.x1() < i.r?).then_some("all"),
    },
    EnvelopeBand {
        name: "exit-ball",
        citation: "E^x τ_B(0,R) ≈ ((R-|x|)^{α/2} ∨ (R-|x|))(R ∨ R^{α/2})",
        regime: "|x| < R",
        eval: |i, p| env_exit_ball(&i.x, i.r()?, p),
        branch: |i, _| (i.x.norm() < i.r?).then_some("all"),
    },
    EnvelopeBand {
        name: "escape",
        citation: "P^x(τ_(0,R) < τ_(0,∞)) ≈ (x^{α/2} ∨ x)/(R^{α/2} ∨ R)",
        regime: "0 < x < R",
        eval: |i, p| env_escape_prob(i.x1(), i.r()?, p),
        branch: |i, p| (p.d == 1 && i.x1() > 0.0 && i.x1() < i.r?).then_some("all"),
    },
    EnvelopeBand {
        name: "halfspace-green",
        citation: "G_H(x,y) ≈ min(x̃ỹ/|x-y|^d, |x-y|^{2-d}) for |x-y| > 3 and [((x_d∧y_d)/|x-y|)^{α/2} ∧ 1]|x-y|^{α-d} for |x-y| ≤ 3 (d ≥ 3); logarithmic forms for d = 2",
        regime: "d >= 2, x != y in H; branches split at |x-y| = 3",
        eval: |i, p| env_green_halfspace(&i.x, i.y()?, p),
        branch: |i, p| {
            let y = i.y.as_ref()?;
            (p.d >= 2 && in_h(&i.x) && in_h(y) && i.x != *y).then(|| halfspace_branch(&i.x, y))
        },
    },
    EnvelopeBand {
        name: "halfspace-gauss",
        citation: "G_H(x,y) ≈ G^gauss_H(x,y) for |x-y| > 2, x_d, y_d ≥ 1",
        regime: "d >= 2, |x-y| > 2, x_d >= 1, y_d >= 1",
        eval: |i, p| env_green_halfspace_gauss(&i.x, i.y()?, p),
        branch: |i, p| {
            let y = i.y.as_ref()?;
            (p.d >= 2 && i.x.dist(y) > 2.0 && i.x.last() >= 1.0 && y.last() >= 1.0).then_some("all")
        },
    },
    EnvelopeBand {
        name: "interval-green",
        citation: "G_(0,R)(x,y) ≈ min(G_(0,∞)(x,y), G_(0,∞)(R-x,R-y)) for |x-y| ≤ 1 and (x^{α/2} ∨ x)((R-y)^{α/2} ∨ (R-y))/R for |x-y| > 1, R ≥ 4, x ≤ y",
        regime: "R >= 4, x != y in (0, R); branches split at |x-y| = 1",
        eval: |i, p| env_green_interval(i.x1(), i.y()?.coords[0], i.r()?, p),
        branch: |i, p| {
            let (x, y, r) = (i.x1(), i.y.as_ref()?.coords[0], i.r?);
            (p.d == 1 && r >= 4.0 && x > 0.0 && y > 0.0 && x < r && y < r && x != y).then(|| interval_branch(x, y))
        },
    },
];

/// Every registered envelope.
pub fn bands() -> &'static [EnvelopeBand] {
    BANDS
}

/// Looks up a registered envelope by name.
pub fn band(name: &str) -> Result<&'static EnvelopeBand> {
    BANDS
        .iter()
        .find(|b| b.name == name)
        .ok_or_else(|| Error::Lookup { name: name.to_string(), known: BANDS.iter().map(|b| b.name.to_string()).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(alpha: f64, d: usize) -> ProcessParams {
        ProcessParams::new(alpha, 1.0, d).unwrap()
    }

    #[test]
    fn arithmetic_examples() {
        let v = env_green1(&Point::from(2.0), &Point::from(4.0), &p(1.5, 1)).unwrap();
        assert!((v - (-2f64).exp() * 2f64.powf(-0.25)).abs() < 1e-15);
        let v = env_green1(&Point::from(2.0), &Point::from(2.5), &p(1.0, 1)).unwrap();
        assert!((v - 4f64.ln()).abs() < 1e-15);
        assert!((env_tail_halfspace(4.0, 64.0, &p(0.7, 1)).unwrap() - 0.5).abs() < 1e-15);
        assert!((env_tail_halfspace(0.25, 1.0, &p(1.0, 1)).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(env_tail_halfspace(1e6, 4.0, &p(1.0, 1)).unwrap(), 1.0);
        assert!(matches!(env_tail_halfspace(1.0, 0.5, &p(1.0, 1)), Err(Error::Regime(_))));
        assert!((env_exit_interval(0.25, 10.0, &p(1.0, 1)).unwrap() - 4.875).abs() < 1e-14);
        assert!((env_exit_ball(&Point::new(vec![3.0, 0.0]), 4.0, &p(1.5, 2)).unwrap() - 4.0).abs() < 1e-14);
        assert!((env_escape_prob(0.04, 0.5, &p(1.0, 1)).unwrap() - 0.2 / 0.5f64.sqrt()).abs() < 1e-14);
        assert!((env_green_interval(1.0, 5.0, 8.0, &p(1.0, 1)).unwrap() - 0.375).abs() < 1e-15);
        assert!(matches!(env_green_interval(1.0, 2.0, 3.0, &p(1.0, 1)), Err(Error::Regime(_))));
    }

    #[test]
    fn lookup_lists_known_names() {
        match band("nope") {
            Err(Error::Lookup { known, .. }) => assert!(known.contains(&"tail".to_string())),
            other => panic!("{other:?}"),
        }
    }
}
