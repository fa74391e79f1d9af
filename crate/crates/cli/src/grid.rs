//! Grid mini-language: a number, a comma list, or `lo:hi:lin|log:n`.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct GridError(pub String);

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for GridError {}

fn number(s: &str) -> Result<f64, GridError> {
    s.trim().parse::<f64>().map_err(|_| GridError(format!("`{s}` is not a number")))
}

/// Parses a grid spec into its points.
pub fn parse(spec: &str) -> Result<Vec<f64>, GridError> {
    let spec = spec.trim();
    // Accept an optional `name=` prefix, as in `x=0.1:10:log:20`.
    let spec = match spec.split_once('=') {
        Some((name, rest)) if name.chars().all(|c| c.is_ascii_alphabetic() || c == '_') => rest,
        _ => spec,
    };
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [lo, hi, kind, n] = parts[..] else {
            return Err(GridError(format!("grid `{spec}` must look like lo:hi:lin|log:n")));
        };
        let (lo, hi) = (number(lo)?, number(hi)?);
        let n: usize = n.trim().parse().map_err(|_| GridError(format!("`{n}` is not a point count")))?;
        if n == 0 {
            return Err(GridError("a grid needs at least one point".into()));
        }
        if n == 1 {
            return Ok(vec![lo]);
        }
        let step = |k: usize| k as f64 / (n - 1) as f64;
        return match kind.trim() {
            "lin" => Ok((0..n).map(|k| if k == n - 1 { hi } else { lo + (hi - lo) * step(k) }).collect()),
            "log" => {
                if !(lo > 0.0 && hi > 0.0) {
                    return Err(GridError("a log grid needs positive end points".into()));
                }
                let (a, b) = (lo.ln(), hi.ln());
                Ok((0..n)
                    .map(|k| {
                        if k == 0 {
                            lo
                        } else if k == n - 1 {
                            hi
                        } else {
                            (a + (b - a) * step(k)).exp()
                        }
                    })
                    .collect())
            }
            other => Err(GridError(format!("grid kind `{other}` is not lin or log"))),
        };
    }
    spec.split(',').map(number).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(parse("2").unwrap(), vec![2.0]);
        assert_eq!(parse("1,2.5").unwrap(), vec![1.0, 2.5]);
        assert_eq!(parse("0:1:lin:3").unwrap(), vec![0.0, 0.5, 1.0]);
        let g = parse("x=0.1:10:log:3").unwrap();
        assert_eq!(g[0], 0.1);
        assert!((g[1] - 1.0).abs() < 1e-15);
        assert_eq!(g[2], 10.0);
        assert!(parse("1:2:cubic:3").is_err());
        assert!(parse("0:1:log:3").is_err());
        assert!(parse("a,b").is_err());
    }
}
