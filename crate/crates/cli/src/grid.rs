//! `start:stop:count` grid specs, endpoints included.

use qib_core::config::geometric_beta_grid;

use crate::error::{CliError, CliResult};

fn split(spec: &str) -> CliResult<(f64, f64, usize)> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::usage(format!("grid {spec:?} is not start:stop:count")));
    }
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| CliError::usage(format!("bad number {s:?} in grid {spec:?}")))
    };
    let count = parts[2]
        .trim()
        .parse::<usize>()
        .map_err(|_| CliError::usage(format!("bad count {:?} in grid {spec:?}", parts[2])))?;
    Ok((num(parts[0])?, num(parts[1])?, count))
}

/// Evenly spaced J targets in (0, 1], strictly increasing.
pub fn parse_j_grid(spec: &str) -> CliResult<Vec<f64>> {
    let (a, b, n) = split(spec)?;
    if n == 0 {
        return Err(CliError::usage("grid count must be at least 1"));
    }
    if n > 1 && b <= a {
        return Err(CliError::usage(format!("grid {spec:?} must increase")));
    }
    if !(a > 0.0 && b <= 1.0) {
        return Err(CliError::usage(format!("grid {spec:?} must lie in (0, 1]")));
    }
    let grid: Vec<f64> = if n == 1 {
        vec![a]
    } else {
        (0..n).map(|k| if k + 1 == n { b } else { a + (b - a) * k as f64 / (n - 1) as f64 }).collect()
    };
    qib_core::curve::validate_grid(&grid)?;
    Ok(grid)
}

/// Geometric beta values from `start` to `stop`.
pub fn parse_beta_grid(spec: &str) -> CliResult<Vec<f64>> {
    let (a, b, n) = split(spec)?;
    if n == 0 || !(a > 0.0) || b < a || (n > 1 && b == a) {
        return Err(CliError::usage(format!("beta grid {spec:?} needs 0 < start < stop and count ≥ 1")));
    }
    Ok(geometric_beta_grid(a.log2(), b.log2(), n))
}
