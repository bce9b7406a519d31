use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ScoredMetaGraph;
use crate::error::{contract, Error, Result};
use crate::graph::{canonical_form, CanonicalForm, LabeledGraph, Pair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    /// Runs from an optimal class to the complete graph.
    Main,
    /// A single optimal class below the main sequence's start.
    Standalone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceStep {
    pub pair: Pair,
    /// Index of the interchangeable group holding this step.
    pub group: usize,
    /// Edge count after this step.
    pub e: usize,
    /// Class of the prefix ending here; `None` inside the opening group,
    /// whose prefixes depend on the order chosen within it.
    pub class: Option<CanonicalForm>,
    pub optimal: bool,
    pub near_optimal: bool,
    /// Whether the step joins two optimal classes; `None` inside the
    /// opening group.
    pub edge_optimal: Option<bool>,
}

/// An ordered list of comparisons. Steps in the same group may be asked in
/// any order; groups are asked in sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillingSequence {
    pub n: usize,
    pub kind: SequenceKind,
    pub steps: Vec<SequenceStep>,
    /// Edge counts along the sequence at which the prefix class is optimal
    /// or near-optimal.
    pub realized_levels: Vec<usize>,
}

impl FillingSequence {
    pub fn pairs(&self) -> Vec<Pair> {
        self.steps.iter().map(|s| s.pair).collect()
    }

    pub fn groups(&self) -> Vec<Vec<Pair>> {
        let mut out: Vec<Vec<Pair>> = Vec::new();
        for s in &self.steps {
            if out.len() <= s.group {
                out.push(Vec::new());
            }
            out[s.group].push(s.pair);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Classes at the end of each group, in order.
    pub fn group_classes(&self) -> Vec<CanonicalForm> {
        self.steps
            .iter()
            .enumerate()
            .filter(|(i, s)| self.steps.get(i + 1).is_none_or(|t| t.group != s.group))
            .filter_map(|(_, s)| s.class)
            .collect()
    }
}

/// Path value from a node to the top: optimal nodes visited, then summed
/// distance excess of the others.
#[derive(Debug, Clone, Copy)]
struct PathValue {
    optimal: usize,
    excess: f64,
    next: Option<CanonicalForm>,
}

fn better(a: (usize, f64), b: (usize, f64)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Filling-in sequences of a fully scored metagraph: standalone sequences
/// for the optimal classes below the main sequence's start level, then the
/// main sequence.
///
/// The main sequence is the path from an optimal class up to the complete
/// graph that visits the most optimal classes; among those, it minimizes
/// the summed distance excess of the non-optimal classes it passes through.
/// Remaining ties go to the lower start level, then to smaller canonical
/// forms.
pub fn extract_sequences(scored: &ScoredMetaGraph) -> Result<Vec<FillingSequence>> {
    if !scored.is_fully_scored() {
        return Err(contract("sequence extraction needs every level scored"));
    }
    let meta = &scored.meta;
    let mut value: BTreeMap<CanonicalForm, PathValue> = BTreeMap::new();
    for (_, classes) in meta.levels.iter().rev() {
        for c in classes {
            let own_opt = usize::from(scored.is_optimal(c.canon));
            let own_excess = if own_opt == 1 {
                0.0
            } else {
                scored
                    .excess(c.canon)
                    .ok_or_else(|| contract(format!("no score for {}", c.canon)))?
            };
            let mut best: Option<(usize, f64, CanonicalForm)> = None;
            for s in meta.successors(c.canon) {
                let v = value[&s];
                if best.is_none_or(|b| better((v.optimal, v.excess), (b.0, b.1))) {
                    best = Some((v.optimal, v.excess, s));
                }
            }
            let (tail_opt, tail_excess, next) = match best {
                Some((o, x, s)) => (o, x, Some(s)),
                None => (0, 0.0, None),
            };
            value.insert(
                c.canon,
                PathValue {
                    optimal: own_opt + tail_opt,
                    excess: own_excess + tail_excess,
                    next,
                },
            );
        }
    }

    let mut start: Option<CanonicalForm> = None;
    for e in meta.levels.keys() {
        let opt = scored.optimal(*e).expect("fully scored");
        let v = value[&opt];
        if start.is_none_or(|s| better((v.optimal, v.excess), (value[&s].optimal, value[&s].excess))) {
            start = Some(opt);
        }
    }
    let start = start.ok_or_else(|| contract("empty metagraph"))?;
    let mut path = vec![start];
    while let Some(next) = value[path.last().expect("nonempty")].next {
        path.push(next);
    }

    let mut out = Vec::new();
    for e in meta.bottom()..start.edge_count() {
        let opt = scored.optimal(e).expect("fully scored");
        out.push(realize(scored, &[opt], SequenceKind::Standalone)?);
    }
    out.push(realize(scored, &path, SequenceKind::Main)?);
    Ok(out)
}

/// Advances `perm` to the next permutation in lexicographic order.
fn next_permutation(perm: &mut [usize]) -> bool {
    let Some(i) = perm.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = perm.iter().rposition(|&x| x > perm[i]).expect("pivot has a successor");
    perm.swap(i, j);
    perm[i + 1..].reverse();
    true
}

fn sorted_edges(g: &LabeledGraph) -> Vec<Pair> {
    let mut e = g.edges();
    e.sort();
    e
}

/// The labeling of `class` whose sorted edge list is lexicographically
/// smallest.
pub(crate) fn lex_min_labeling(class: CanonicalForm) -> LabeledGraph {
    let g = class.graph();
    let mut perm: Vec<usize> = (0..g.n()).collect();
    let mut best = g;
    let mut best_edges = sorted_edges(&g);
    loop {
        let h = g.permute(&perm).expect("valid permutation");
        let edges = sorted_edges(&h);
        if edges < best_edges {
            best = h;
            best_edges = edges;
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    best
}

/// Lays out a class path as concrete comparisons: the first class under
/// its lexicographically smallest labeling as one group, then each later
/// class reached by the smallest pair that lands in it.
fn realize(scored: &ScoredMetaGraph, path: &[CanonicalForm], kind: SequenceKind) -> Result<FillingSequence> {
    let n = scored.n();
    let flags = |c: CanonicalForm| (scored.is_optimal(c), scored.is_near_optimal(c));
    let mut g = lex_min_labeling(path[0]);
    let first = sorted_edges(&g);
    let mut steps: Vec<SequenceStep> = first
        .iter()
        .enumerate()
        .map(|(k, &pair)| SequenceStep {
            pair,
            group: 0,
            e: k + 1,
            class: None,
            optimal: false,
            near_optimal: false,
            edge_optimal: None,
        })
        .collect();
    if let Some(last) = steps.last_mut() {
        let (opt, near) = flags(path[0]);
        last.class = Some(path[0]);
        last.optimal = opt;
        last.near_optimal = near;
    }
    for (k, w) in path.windows(2).enumerate() {
        let target = w[1];
        let mut candidates = g.non_edges();
        candidates.sort();
        let pair = candidates
            .into_iter()
            .find(|&p| canonical_form(&g.with(p)).is_ok_and(|c| c == target))
            .ok_or_else(|| Error::Contract(format!("{} does not extend to {}", w[0], target)))?;
        g.insert(pair);
        let (opt, near) = flags(target);
        steps.push(SequenceStep {
            pair,
            group: k + 1,
            e: g.edge_count(),
            class: Some(target),
            optimal: opt,
            near_optimal: near,
            edge_optimal: Some(scored.is_optimal(w[0]) && opt),
        });
    }
    let realized_levels = steps
        .iter()
        .filter(|s| s.class.is_some() && (s.optimal || s.near_optimal))
        .map(|s| s.e)
        .collect();
    Ok(FillingSequence {
        n,
        kind,
        steps,
        realized_levels,
    })
}
