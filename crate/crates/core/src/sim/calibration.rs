use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::pcm::{consistency_report, generate_consistent_pcm, perturb, PerturbationLevel, RiTable};

/// Box-plot statistics with the whiskers at the sample extremes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub lower_quartile: f64,
    pub median: f64,
    pub upper_quartile: f64,
    pub max: f64,
}

/// Linear-interpolation quantile over sorted data (`h = (len - 1) p`).
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn five_number_summary(values: &[f64]) -> Result<FiveNumberSummary> {
    if values.is_empty() {
        return Err(domain("no values to summarize"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(domain("NaN in summary input"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(FiveNumberSummary {
        min: v[0],
        lower_quartile: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        upper_quartile: quantile(&v, 0.75),
        max: v[v.len() - 1],
    })
}

/// Consistency ratios of `n_matrices` random consistent matrices after
/// perturbation at `level`.
pub fn cr_calibration<R: Rng + ?Sized>(
    n: usize,
    level: PerturbationLevel,
    n_matrices: usize,
    rng: &mut R,
) -> Result<FiveNumberSummary> {
    if n < 3 {
        return Err(domain("consistency ratio needs n >= 3"));
    }
    if n_matrices == 0 {
        return Err(domain("n_matrices must be positive"));
    }
    let ri = RiTable::default();
    let mut crs = Vec::with_capacity(n_matrices);
    for _ in 0..n_matrices {
        let (pcm, _) = generate_consistent_pcm(n, rng)?;
        let noisy = perturb(&pcm, level, rng);
        crs.push(consistency_report(&noisy, &ri)?.cr);
    }
    five_number_summary(&crs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quartiles_interpolate() {
        let s = five_number_summary(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.min, 1.0);
        assert_eq!(s.lower_quartile, 1.75);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.upper_quartile, 3.25);
        assert_eq!(s.max, 4.0);
        assert_eq!(five_number_summary(&[7.0]).unwrap().median, 7.0);
        assert!(five_number_summary(&[]).is_err());
    }

    #[test]
    fn no_perturbation_means_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let zero = PerturbationLevel::custom(0.0).unwrap();
        let s = cr_calibration(6, zero, 100, &mut rng).unwrap();
        assert!(s.max < 1e-10);
    }

    #[test]
    fn cr_grows_with_halfwidth() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let weak = cr_calibration(5, PerturbationLevel::Weak, 300, &mut rng).unwrap();
        let strong = cr_calibration(5, PerturbationLevel::Strong, 300, &mut rng).unwrap();
        assert!(weak.median < strong.median);
        assert!(weak.min >= 0.0);
    }
}
