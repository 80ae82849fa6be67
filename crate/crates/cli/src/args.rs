//! Parsers for range and window arguments.

/// Inclusive integer range `a..b` with `a <= b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JRange(pub i32, pub i32);

/// `a..b:step` with `0 < a <= b` and `step > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

/// Most points a sweep may request.
const MAX_SWEEP: usize = 10_000;

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

pub fn parse_j_range(s: &str) -> Result<JRange, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected a range `a..b`, got `{s}`"))?;
    let a: i32 = a
        .trim()
        .parse()
        .map_err(|_| format!("`{a}` is not an integer"))?;
    let b: i32 = b
        .trim()
        .parse()
        .map_err(|_| format!("`{b}` is not an integer"))?;
    if a < 0 || a > b {
        return Err(format!("range {a}..{b} must satisfy 0 <= a <= b"));
    }
    Ok(JRange(a, b))
}

pub fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let (range, step) = s
        .split_once(':')
        .ok_or_else(|| format!("expected `a..b:step`, got `{s}`"))?;
    let (a, b) = range
        .split_once("..")
        .ok_or_else(|| format!("expected `a..b:step`, got `{s}`"))?;
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{t}` is not a number"))
    };
    let (start, end, step) = (num(a)?, num(b)?, num(step)?);
    if !(start > 0.0 && start <= end && end.is_finite()) {
        return Err(format!("sweep {start}..{end} must satisfy 0 < a <= b"));
    }
    if !(step > 0.0) {
        return Err(format!("sweep step {step} must be positive"));
    }
    if (end - start) / step > MAX_SWEEP as f64 {
        return Err(format!("sweep requests more than {MAX_SWEEP} values"));
    }
    Ok(Sweep { start, end, step })
}

pub fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected a window `a,b`, got `{s}`"))?;
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{t}` is not a number"))
    };
    let (a, b) = (num(a)?, num(b)?);
    if !(a < b && a.is_finite() && b.is_finite()) {
        return Err(format!("window [{a}, {b}] is empty"));
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_j_range("3..9").unwrap(), JRange(3, 9));
        assert!(parse_j_range("6..0").is_err());
        assert!(parse_j_range("3-9").is_err());
    }

    #[test]
    fn sweeps_include_the_end() {
        let s = parse_sweep("0.1..2.0:0.1").unwrap();
        let v = s.values();
        assert_eq!(v.len(), 20);
        assert!((v[19] - 2.0).abs() < 1e-12);
        assert!(parse_sweep("0..1:0.1").is_err());
        assert!(parse_sweep("0.1..1:0").is_err());
    }

    #[test]
    fn windows() {
        assert_eq!(parse_window("-1,1").unwrap(), (-1.0, 1.0));
        assert!(parse_window("1,-1").is_err());
    }
}
