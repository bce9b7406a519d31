//! Reliability hints from bundled simulation runs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use fillin_core::graph::{canonical_form, LabeledGraph};
use fillin_core::store::RunArtifact;

use crate::error::Result;

const BUNDLED: [&str; 5] = [
    include_str!("../data/reference-n2.json"),
    include_str!("../data/reference-n3.json"),
    include_str!("../data/reference-n4.json"),
    include_str!("../data/reference-n5.json"),
    include_str!("../data/reference-n6.json"),
];

/// Expected error at the current number of answers. Means are averaged
/// over the perturbation levels of the reference run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityHint {
    pub e: usize,
    /// Best pattern with `e` comparisons.
    pub optimal_mean_d_euc: f64,
    pub optimal_mean_tau: f64,
    /// The pattern actually answered, when connected.
    pub induced_mean_d_euc: Option<f64>,
    pub induced_mean_tau: Option<f64>,
    pub n_samples: u64,
}

#[derive(Debug, Clone, Default)]
pub struct ReferenceRuns {
    runs: BTreeMap<usize, RunArtifact>,
}

impl ReferenceRuns {
    pub fn bundled() -> Result<ReferenceRuns> {
        let mut refs = ReferenceRuns::default();
        for text in BUNDLED {
            refs.insert(RunArtifact::from_json(text)?);
        }
        Ok(refs)
    }

    pub fn insert(&mut self, run: RunArtifact) {
        self.runs.insert(run.config.n, run);
    }

    pub fn covers(&self, n: usize) -> bool {
        self.runs.contains_key(&n)
    }

    pub fn hint(&self, answered: &LabeledGraph) -> Option<ReliabilityHint> {
        let run = self.runs.get(&answered.n())?;
        let e = answered.edge_count();
        let best = run
            .scores
            .values()
            .filter(|s| s.class.e == e)
            .min_by(|a, b| a.mean_d_euc().total_cmp(&b.mean_d_euc()))?;
        let induced = answered
            .is_connected()
            .then(|| canonical_form(answered).ok())
            .flatten()
            .and_then(|c| run.scores.get(&c));
        Some(ReliabilityHint {
            e,
            optimal_mean_d_euc: best.mean_d_euc(),
            optimal_mean_tau: best.mean_tau(),
            induced_mean_d_euc: induced.map(|s| s.mean_d_euc()),
            induced_mean_tau: induced.map(|s| s.mean_tau()),
            n_samples: best.levels.first().map_or(0, |l| l.n_samples),
        })
    }
}
