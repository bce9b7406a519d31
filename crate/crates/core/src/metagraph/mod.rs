//! The graph of comparison graphs: one node per connected isomorphism
//! class, edges between classes that differ by a single comparison.

mod export;
mod sequence;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Error, Result};
use crate::graph::{CanonicalForm, Catalog, GraphClass, MAX_ENUM_N};
use crate::sim::{judge_lower, MarginRule, SweepResult, Verdict};

pub use export::{export, ExportFormat};
pub use sequence::{extract_sequences, FillingSequence, SequenceKind, SequenceStep};

pub const MIN_META_N: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaGraph {
    pub n: usize,
    pub levels: BTreeMap<usize, Vec<GraphClass>>,
    /// `(lower, upper)`: `upper` is `lower` plus one comparison.
    pub meta_edges: BTreeSet<(CanonicalForm, CanonicalForm)>,
}

pub fn build_metagraph(n: usize) -> Result<MetaGraph> {
    if !(MIN_META_N..=MAX_ENUM_N).contains(&n) {
        return Err(domain(format!(
            "metagraph needs {MIN_META_N} <= n <= {MAX_ENUM_N}, got {n}"
        )));
    }
    let (levels, meta_edges) = Catalog::build(n)?.into_parts();
    Ok(MetaGraph {
        n,
        levels,
        meta_edges,
    })
}

impl MetaGraph {
    pub fn node_count(&self) -> usize {
        self.levels.values().map(Vec::len).sum()
    }

    pub fn class(&self, canon: &CanonicalForm) -> Option<&GraphClass> {
        self.levels
            .get(&canon.edge_count())?
            .iter()
            .find(|c| c.canon == *canon)
    }

    pub fn successors(&self, canon: CanonicalForm) -> impl Iterator<Item = CanonicalForm> + '_ {
        self.meta_edges
            .range((canon, CanonicalForm::MIN)..)
            .take_while(move |(lo, _)| *lo == canon)
            .map(|&(_, hi)| hi)
    }

    pub fn predecessors(&self, canon: CanonicalForm) -> impl Iterator<Item = CanonicalForm> + '_ {
        self.meta_edges
            .iter()
            .filter(move |(_, hi)| *hi == canon)
            .map(|&(lo, _)| lo)
    }

    pub fn is_meta_edge(&self, lower: CanonicalForm, upper: CanonicalForm) -> bool {
        self.meta_edges.contains(&(lower, upper))
    }

    pub fn bottom(&self) -> usize {
        self.n - 1
    }

    pub fn top(&self) -> usize {
        self.n * (self.n - 1) / 2
    }
}

/// One class in a level ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub class: CanonicalForm,
    /// Averaged over the scored perturbation levels.
    pub mean_d_euc: f64,
    pub mean_tau: f64,
    /// Against the level optimum.
    pub d_euc_verdict: Verdict,
    pub tau_verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub e: usize,
    /// Smallest mean distance.
    pub optimal: CanonicalForm,
    /// Largest mean τ.
    pub tau_best: CanonicalForm,
    pub indicators_agree: bool,
    /// The runner-up by distance is within the margin of the optimum.
    pub d_euc_tie: bool,
    /// The runner-up by τ is within the margin of the τ-best class.
    pub tau_tie: bool,
    /// Classes other than the optimum that are not significantly worse on
    /// at least one metric.
    pub near_optimal: Vec<CanonicalForm>,
    pub epsilon_d: f64,
    pub epsilon_tau: f64,
    /// Ordered by mean distance, then canonical form.
    pub ranking: Vec<RankEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredMetaGraph {
    pub meta: MetaGraph,
    pub scores: SweepResult,
    pub margin: MarginRule,
    /// `None` for levels without scores.
    pub summaries: BTreeMap<usize, Option<LevelSummary>>,
}

impl ScoredMetaGraph {
    /// A metagraph with no scores attached.
    pub fn unscored(meta: MetaGraph) -> ScoredMetaGraph {
        let summaries = meta.levels.keys().map(|&e| (e, None)).collect();
        ScoredMetaGraph {
            meta,
            scores: SweepResult::new(),
            margin: MarginRule::default(),
            summaries,
        }
    }

    pub fn n(&self) -> usize {
        self.meta.n
    }

    pub fn summary(&self, e: usize) -> Option<&LevelSummary> {
        self.summaries.get(&e)?.as_ref()
    }

    pub fn optimal(&self, e: usize) -> Option<CanonicalForm> {
        self.summary(e).map(|s| s.optimal)
    }

    pub fn is_optimal(&self, c: CanonicalForm) -> bool {
        self.optimal(c.edge_count()) == Some(c)
    }

    pub fn is_near_optimal(&self, c: CanonicalForm) -> bool {
        self.summary(c.edge_count())
            .is_some_and(|s| s.near_optimal.contains(&c))
    }

    pub fn is_fully_scored(&self) -> bool {
        self.summaries.values().all(Option::is_some)
    }

    /// Mean distance above the level optimum.
    pub fn excess(&self, c: CanonicalForm) -> Option<f64> {
        let best = self.scores.get(&self.optimal(c.edge_count())?)?.mean_d_euc();
        Some(self.scores.get(&c)?.mean_d_euc() - best)
    }

    pub fn from_json(text: &str) -> Result<ScoredMetaGraph> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Attaches scores and marks the per-level optimum and near-optimal classes.
///
/// Every class must be scored under the same perturbation levels with the
/// same sample count.
pub fn mark_optimal(meta: MetaGraph, scores: &SweepResult, margin: &MarginRule) -> Result<ScoredMetaGraph> {
    margin.validate()?;
    let mut reference: Option<(Vec<_>, u64)> = None;
    for class in meta.levels.values().flatten() {
        let s = scores
            .get(&class.canon)
            .ok_or_else(|| contract(format!("no score for class {}", class.canon)))?;
        if s.levels.is_empty() {
            return Err(contract(format!("class {} has no level scores", class.canon)));
        }
        let levels: Vec<_> = s.levels.iter().map(|l| l.level).collect();
        let n_samples = s.levels[0].n_samples;
        if s.levels.iter().any(|l| l.n_samples != n_samples) {
            return Err(contract(format!("class {} mixes sample counts", class.canon)));
        }
        match &reference {
            None => reference = Some((levels, n_samples)),
            Some((r, k)) if *r == levels && *k == n_samples => {}
            Some(_) => {
                return Err(contract(format!(
                    "class {} was scored under different levels or sample counts",
                    class.canon
                )))
            }
        }
    }
    let (_, n_samples) = reference.ok_or_else(|| contract("metagraph has no classes"))?;
    let eps_d = margin.epsilon_d(n_samples);
    let eps_tau = margin.epsilon_tau(n_samples);

    let mut summaries = BTreeMap::new();
    for (&e, classes) in &meta.levels {
        let mut rows: Vec<(CanonicalForm, f64, f64)> = classes
            .iter()
            .map(|c| {
                let s = &scores[&c.canon];
                (c.canon, s.mean_d_euc(), s.mean_tau())
            })
            .collect();
        rows.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let (optimal, best_d, best_d_tau) = rows[0];
        let mut by_tau = rows.clone();
        by_tau.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
        let (tau_best, _, best_tau) = by_tau[0];
        let d_euc_tie = rows.get(1).is_some_and(|r| r.1 - best_d <= 2.0 * eps_d);
        let tau_tie = by_tau.get(1).is_some_and(|r| best_tau - r.2 <= 2.0 * eps_tau);
        let ranking: Vec<RankEntry> = rows
            .iter()
            .map(|&(class, d, t)| RankEntry {
                class,
                mean_d_euc: d,
                mean_tau: t,
                d_euc_verdict: judge_lower(d, best_d, eps_d),
                tau_verdict: judge_lower(-t, -best_d_tau, eps_tau),
            })
            .collect();
        let near_optimal = rows
            .iter()
            .skip(1)
            .filter(|r| r.1 - best_d <= 2.0 * eps_d || best_tau - r.2 <= 2.0 * eps_tau)
            .map(|r| r.0)
            .collect();
        summaries.insert(
            e,
            Some(LevelSummary {
                e,
                optimal,
                tau_best,
                indicators_agree: optimal == tau_best,
                d_euc_tie,
                tau_tie,
                near_optimal,
                epsilon_d: eps_d,
                epsilon_tau: eps_tau,
                ranking,
            }),
        );
    }
    let scores = meta
        .levels
        .values()
        .flatten()
        .map(|c| (c.canon, scores[&c.canon].clone()))
        .collect();
    Ok(ScoredMetaGraph {
        meta,
        scores,
        margin: *margin,
        summaries,
    })
}

/// Outcome of one structural check over a scored metagraph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureCheck {
    pub name: String,
    pub e: usize,
    pub passed: bool,
}

/// Run-level assertions about optimal classes. The star should win among
/// spanning trees. Above the tree level, the optimal degree sequence should
/// have spread at most one unless a more balanced class is within the
/// margin. Optima should be bipartite; where no bipartite class exists, the
/// optimum should need the fewest odd-cycle deletions among the classes
/// within the margin.
pub fn structure_checks(scored: &ScoredMetaGraph) -> Result<Vec<StructureCheck>> {
    let mut out = Vec::new();
    let class = |c: &CanonicalForm| {
        scored
            .meta
            .class(c)
            .ok_or_else(|| Error::Contract(format!("class {c} missing from metagraph")))
    };
    for (&e, summary) in &scored.summaries {
        let Some(s) = summary else { continue };
        let opt = class(&s.optimal)?;
        let level = &scored.meta.levels[&e];
        let within: Vec<&GraphClass> = std::iter::once(Ok(opt))
            .chain(s.near_optimal.iter().map(class))
            .collect::<Result<_>>()?;
        if e == scored.meta.bottom() {
            out.push(StructureCheck {
                name: "star optimal among spanning trees".into(),
                e,
                passed: opt.is_star,
            });
        }
        if e >= scored.meta.n {
            let min_spread = within.iter().map(|c| c.degree_spread()).min().unwrap_or(0);
            out.push(StructureCheck {
                name: "degree balance".into(),
                e,
                passed: opt.degree_spread() <= 1 || min_spread < opt.degree_spread(),
            });
        }
        let any_bipartite = level.iter().any(|c| c.is_bipartite);
        let min_odd = within.iter().map(|c| c.odd_cycle_edge_deletions).min().unwrap_or(0);
        out.push(StructureCheck {
            name: "bipartite proximity".into(),
            e,
            passed: opt.is_bipartite
                || (!any_bipartite && opt.odd_cycle_edge_deletions == min_odd),
        });
    }
    Ok(out)
}
