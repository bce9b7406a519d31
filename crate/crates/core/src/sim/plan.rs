use serde::{Deserialize, Serialize};

use super::{GraphScore, SweepResult};
use crate::error::{domain, Result};
use crate::pcm::PerturbationLevel;

/// Chebyshev sample-size plan: `alpha = sigma² / (n_samples · epsilon²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSizePlan {
    pub sigma_upper: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub n_samples: u64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(domain(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Smallest sample count whose Chebyshev bound reaches `alpha` at margin
/// `epsilon`.
pub fn plan_sample_size(sigma_upper: f64, epsilon: f64, alpha: f64) -> Result<SampleSizePlan> {
    positive("sigma_upper", sigma_upper)?;
    positive("epsilon", epsilon)?;
    positive("alpha", alpha)?;
    let exact = sigma_upper * sigma_upper / (alpha * epsilon * epsilon);
    // quotients that are integers up to rounding noise must not ceil upward
    let nearest = exact.round();
    let n = if (exact - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        exact.ceil()
    };
    if n > u64::MAX as f64 {
        return Err(domain("sample size overflows"));
    }
    Ok(SampleSizePlan {
        sigma_upper,
        epsilon,
        alpha,
        n_samples: (n as u64).max(1),
    })
}

/// Margin-of-error rule for both metrics. The margin at `N` samples is
/// `sigma / sqrt(alpha · N)` and a gap is significant when it exceeds twice
/// that.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginRule {
    pub sigma_d: f64,
    pub alpha_d: f64,
    pub sigma_tau: f64,
    pub alpha_tau: f64,
}

pub const DEFAULT_SIGMA_D: f64 = 0.05;
pub const DEFAULT_ALPHA_D: f64 = 0.01;
pub const DEFAULT_SIGMA_TAU: f64 = 0.2236;
pub const DEFAULT_ALPHA_TAU: f64 = 0.05;

impl Default for MarginRule {
    fn default() -> Self {
        MarginRule {
            sigma_d: DEFAULT_SIGMA_D,
            alpha_d: DEFAULT_ALPHA_D,
            sigma_tau: DEFAULT_SIGMA_TAU,
            alpha_tau: DEFAULT_ALPHA_TAU,
        }
    }
}

impl MarginRule {
    pub fn validate(&self) -> Result<()> {
        positive("sigma_d", self.sigma_d)?;
        positive("alpha_d", self.alpha_d)?;
        positive("sigma_tau", self.sigma_tau)?;
        positive("alpha_tau", self.alpha_tau)
    }

    pub fn epsilon_d(&self, n_samples: u64) -> f64 {
        self.sigma_d / (self.alpha_d * n_samples as f64).sqrt()
    }

    pub fn epsilon_tau(&self, n_samples: u64) -> f64 {
        self.sigma_tau / (self.alpha_tau * n_samples as f64).sqrt()
    }

    /// Replaces both sigma bounds with the largest standard deviation
    /// observed in a pilot sweep.
    pub fn from_pilot(pilot: &SweepResult, alpha_d: f64, alpha_tau: f64) -> Result<MarginRule> {
        let lv = pilot.values().flat_map(|s| s.levels.iter());
        let (sd_d, sd_tau) = lv.fold((0.0f64, 0.0f64), |(d, t), l| (d.max(l.sd_d_euc), t.max(l.sd_tau)));
        let rule = MarginRule {
            sigma_d: sd_d,
            alpha_d,
            sigma_tau: sd_tau,
            alpha_tau,
        };
        rule.validate()?;
        Ok(rule)
    }
}

/// Outcome of comparing `a` against `b` on one metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Better,
    Worse,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelVerdict {
    pub level: PerturbationLevel,
    pub d_euc: Verdict,
    pub tau: Verdict,
}

/// Smaller-is-better verdict on a gap `a - b` with margin `eps`.
pub(crate) fn judge_lower(a: f64, b: f64, eps: f64) -> Verdict {
    if (a - b).abs() <= 2.0 * eps {
        Verdict::Tie
    } else if a < b {
        Verdict::Better
    } else {
        Verdict::Worse
    }
}

/// Per-level verdicts of `a` relative to `b`: lower distance and higher τ
/// are better.
pub fn significant_difference(a: &GraphScore, b: &GraphScore, rule: &MarginRule) -> Result<Vec<LevelVerdict>> {
    let mut out = Vec::with_capacity(a.levels.len());
    for la in &a.levels {
        let lb = b
            .levels
            .iter()
            .find(|l| l.level == la.level)
            .ok_or_else(|| domain(format!("no {} score to compare against", la.level.name())))?;
        if la.n_samples != lb.n_samples {
            return Err(domain(format!(
                "sample counts differ: {} vs {}",
                la.n_samples, lb.n_samples
            )));
        }
        let n = la.n_samples;
        out.push(LevelVerdict {
            level: la.level,
            d_euc: judge_lower(la.mean_d_euc, lb.mean_d_euc, rule.epsilon_d(n)),
            tau: judge_lower(-la.mean_tau, -lb.mean_tau, rule.epsilon_tau(n)),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_examples() {
        assert_eq!(plan_sample_size(0.05, 0.0005, 0.01).unwrap().n_samples, 1_000_000);
        assert_eq!(plan_sample_size(1.0, 1.0, 1.0).unwrap().n_samples, 1);
        assert_eq!(plan_sample_size(1.0, 1.0, 0.3).unwrap().n_samples, 4);
        assert!(plan_sample_size(0.0, 1.0, 1.0).is_err());
        assert!(plan_sample_size(1.0, -1.0, 1.0).is_err());
        assert!(plan_sample_size(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn plan_satisfies_bound() {
        for &(s, e, a) in &[(0.05, 0.0005, 0.01), (0.2236, 0.001, 0.05), (0.3, 0.01, 0.2)] {
            let p = plan_sample_size(s, e, a).unwrap();
            let bound = |n: u64| s * s / (n as f64 * e * e);
            assert!(bound(p.n_samples) <= a * (1.0 + 1e-9));
            assert!(bound(p.n_samples - 1) > a);
        }
    }

    #[test]
    fn margin_at_reference_count() {
        let rule = MarginRule::default();
        assert!((rule.epsilon_d(1_000_000) - 0.0005).abs() < 1e-15);
        assert!((rule.epsilon_tau(1_000_000) - 0.001).abs() < 1e-6);
    }

    #[test]
    fn judging() {
        assert_eq!(judge_lower(0.1, 0.1, 0.0), Verdict::Tie);
        assert_eq!(judge_lower(0.10, 0.11, 0.001), Verdict::Better);
        assert_eq!(judge_lower(0.11, 0.10, 0.001), Verdict::Worse);
        assert_eq!(judge_lower(0.100, 0.1015, 0.001), Verdict::Tie);
    }
}
