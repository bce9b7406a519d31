use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Both error metrics for one estimate against its reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPair {
    pub d_euc: f64,
    pub tau: f64,
}

impl MetricPair {
    pub fn between(estimate: &[f64], reference: &[f64]) -> Result<MetricPair> {
        Ok(MetricPair {
            d_euc: euclidean_distance(estimate, reference)?,
            tau: kendall_tau(estimate, reference)?,
        })
    }
}

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(domain(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    Ok(())
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Kendall's τ-a: (concordant - discordant) / (n(n-1)/2). A pair tied in
/// either vector counts toward neither side but stays in the denominator.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a, b)?;
    let n = a.len();
    if n < 2 {
        return Err(domain("kendall tau needs at least two items"));
    }
    let mut score = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let s = (a[i] - a[j]).signum() * (b[i] - b[j]).signum();
            if a[i] != a[j] && b[i] != b[j] {
                score += s as i64;
            }
        }
    }
    Ok(score as f64 / (n * (n - 1) / 2) as f64)
}
