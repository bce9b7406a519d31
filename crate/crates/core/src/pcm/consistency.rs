use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Pcm;
use crate::error::{domain, Error, Result};

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 100_000;

/// Random Index per matrix size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiTable(pub BTreeMap<usize, f64>);

impl Default for RiTable {
    /// Saaty's published values.
    fn default() -> Self {
        RiTable(BTreeMap::from([
            (1, 0.0),
            (2, 0.0),
            (3, 0.58),
            (4, 0.90),
            (5, 1.12),
            (6, 1.24),
            (7, 1.32),
            (8, 1.41),
            (9, 1.45),
            (10, 1.49),
        ]))
    }
}

impl RiTable {
    pub fn get(&self, n: usize) -> Option<f64> {
        self.0.get(&n).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub lambda_max: f64,
    pub ci: f64,
    pub cr: f64,
    pub ri_used: f64,
}

/// Perron eigenvalue and eigenvector (normalized to sum one) of a positive
/// `n x n` row-major matrix by power iteration.
///
/// Starts from `start` or the uniform vector and stops once no component
/// moves by more than `1e-12` relative to its size.
pub fn principal_eigenpair(a: &[f64], n: usize, start: Option<&[f64]>) -> Result<(f64, Vec<f64>)> {
    if a.len() != n * n || n == 0 {
        return Err(domain("matrix shape mismatch"));
    }
    let mut x = match start {
        Some(s) if s.len() == n => s.to_vec(),
        _ => vec![1.0 / n as f64; n],
    };
    let mut y = vec![0.0; n];
    let lambda = power_iterate(a, n, &mut x, &mut y)?;
    Ok((lambda, x))
}

/// In-place power iteration on `x` (any positive start); `y` is scratch.
pub(crate) fn power_iterate(a: &[f64], n: usize, x: &mut [f64], y: &mut [f64]) -> Result<f64> {
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= s);
    for _ in 0..POWER_MAX_ITER {
        let mut lambda = 0.0;
        for i in 0..n {
            let row = &a[i * n..(i + 1) * n];
            let v: f64 = row.iter().zip(x.iter()).map(|(p, q)| p * q).sum();
            y[i] = v;
            lambda += v;
        }
        let mut done = true;
        for i in 0..n {
            let v = y[i] / lambda;
            if (v - x[i]).abs() > POWER_TOL * v {
                done = false;
            }
            x[i] = v;
        }
        if done {
            return Ok(lambda);
        }
    }
    Err(Error::Numeric("power iteration did not converge".into()))
}

/// Principal eigenvalue, Consistency Index and Consistency Ratio.
pub fn consistency_report(pcm: &Pcm, ri_table: &RiTable) -> Result<ConsistencyReport> {
    let n = pcm.n();
    let ri = ri_table
        .get(n)
        .ok_or_else(|| domain(format!("no Random Index for n = {n}")))?;
    let (lambda_max, _) = principal_eigenpair(pcm.as_slice(), n, None)?;
    // lambda_max >= n holds exactly; clamp rounding noise.
    let ci = ((lambda_max - n as f64) / (n as f64 - 1.0)).max(0.0);
    let cr = if ri > 0.0 { ci / ri } else { 0.0 };
    Ok(ConsistencyReport {
        lambda_max,
        ci,
        cr,
        ri_used: ri,
    })
}
