//! Question orders served to decision makers.

use serde::{Deserialize, Serialize};

use crate::error::{ElicitError, Result};
use fillin_core::graph::{LabeledGraph, Pair};

pub const MIN_N: usize = 2;
pub const MAX_N: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    /// Every item compared with the first one.
    Star,
    /// The ring of all items, for a budget of exactly `n` comparisons.
    Cycle,
    /// Through the optimal patterns up to the complete matrix.
    Main,
    /// Greedy balanced order for sizes without simulated tables.
    Heuristic,
}

/// Groups of comparisons; pairs within a group may be answered in any
/// order, groups strictly in sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequencePlan {
    pub n: usize,
    pub kind: SequenceKind,
    pub groups: Vec<Vec<Pair>>,
    /// True when the order is not backed by simulation results.
    pub extrapolated: bool,
}

impl SequencePlan {
    pub fn len(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = Pair> + '_ {
        self.groups.iter().flatten().copied()
    }
}

/// One-based `(i, j)` table entries to zero-based pairs.
fn table(entries: &[(usize, usize)]) -> Vec<Pair> {
    entries.iter().map(|&(i, j)| Pair(i - 1, j - 1)).collect()
}

fn with_singletons(first: &[(usize, usize)], rest: &[(usize, usize)]) -> Vec<Vec<Pair>> {
    std::iter::once(table(first))
        .chain(rest.iter().map(|&p| table(&[p])))
        .collect()
}

fn star(n: usize) -> SequencePlan {
    SequencePlan {
        n,
        kind: SequenceKind::Star,
        groups: vec![(1..n).map(|j| Pair(0, j)).collect()],
        extrapolated: n > 6,
    }
}

fn main_table(n: usize) -> Option<Vec<Vec<Pair>>> {
    Some(match n {
        2 => vec![table(&[(1, 2)])],
        3 => with_singletons(&[(1, 2), (1, 3)], &[(2, 3)]),
        4 => with_singletons(&[(1, 2), (2, 3), (3, 4), (1, 4)], &[(1, 3), (2, 4)]),
        5 => with_singletons(
            &[(1, 4), (1, 5), (2, 4), (2, 5), (3, 4), (3, 5)],
            &[(1, 2), (1, 3), (4, 5), (2, 3)],
        ),
        6 => with_singletons(
            &[(1, 4), (1, 5), (2, 4), (2, 6), (3, 5), (3, 6)],
            &[(2, 5), (3, 4), (1, 6), (1, 2), (4, 6), (2, 3), (4, 5), (5, 6), (1, 3)],
        ),
        _ => return None,
    })
}

/// Picks the sequence for `n` items and an optional answer budget.
pub fn select_sequence(n: usize, budget: Option<usize>) -> Result<SequencePlan> {
    if !(MIN_N..=MAX_N).contains(&n) {
        return Err(ElicitError::Validation(format!(
            "n must be between {MIN_N} and {MAX_N}, got {n}"
        )));
    }
    if let Some(b) = budget {
        let max = n * (n - 1) / 2;
        if b == 0 || b > max {
            return Err(ElicitError::Validation(format!(
                "budget must be between 1 and {max}, got {b}"
            )));
        }
    }
    if budget == Some(n - 1) && n > 2 {
        return Ok(star(n));
    }
    if budget == Some(5) && n == 5 {
        return Ok(SequencePlan {
            n,
            kind: SequenceKind::Cycle,
            groups: vec![table(&[(1, 2), (2, 3), (3, 4), (4, 5), (1, 5)])],
            extrapolated: false,
        });
    }
    match main_table(n) {
        Some(groups) => Ok(SequencePlan {
            n,
            kind: SequenceKind::Main,
            groups,
            extrapolated: false,
        }),
        None => Ok(heuristic(n)),
    }
}

fn is_bipartite(g: &LabeledGraph) -> bool {
    let n = g.n();
    let mut colour = vec![None; n];
    for s in 0..n {
        if colour[s].is_some() {
            continue;
        }
        colour[s] = Some(false);
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            let c = colour[v].expect("coloured before push");
            for u in (0..n).filter(|&u| u != v && g.has_edge(v, u)) {
                match colour[u] {
                    None => {
                        colour[u] = Some(!c);
                        stack.push(u);
                    }
                    Some(cu) if cu == c => return false,
                    _ => {}
                }
            }
        }
    }
    true
}

fn spread(g: &LabeledGraph) -> usize {
    let d = g.degrees();
    d.iter().max().unwrap_or(&0) - d.iter().min().unwrap_or(&0)
}

/// Greedy order from the empty graph: each step adds the comparison that
/// keeps the degree spread smallest, then avoids closing an odd cycle,
/// then comes first lexicographically. Everything up to the first
/// connected prefix forms one group, since no estimate exists before it.
pub fn heuristic(n: usize) -> SequencePlan {
    let mut g = LabeledGraph::empty(n).expect("n within vertex limit");
    let mut order = Vec::new();
    while let Some(best) = g.non_edges().into_iter().min_by_key(|&p| {
        let h = g.with(p);
        (spread(&h), !is_bipartite(&h), p)
    }) {
        g.insert(best);
        order.push(best);
    }
    let mut prefix = LabeledGraph::empty(n).expect("n within vertex limit");
    let first = order
        .iter()
        .position(|&p| {
            prefix.insert(p);
            prefix.is_connected()
        })
        .expect("complete graph is connected");
    let groups = std::iter::once(order[..=first].to_vec())
        .chain(order[first + 1..].iter().map(|&p| vec![p]))
        .collect();
    SequencePlan {
        n,
        kind: SequenceKind::Heuristic,
        groups,
        extrapolated: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(groups: &[Vec<Pair>]) -> Vec<Vec<String>> {
        groups.iter().map(|g| g.iter().map(Pair::to_string).collect()).collect()
    }

    #[test]
    fn budgets_select_tables() {
        let s = select_sequence(5, Some(4)).unwrap();
        assert_eq!(s.kind, SequenceKind::Star);
        assert_eq!(labels(&s.groups), vec![vec!["a12", "a13", "a14", "a15"]]);
        let s = select_sequence(4, None).unwrap();
        assert_eq!(
            labels(&s.groups),
            vec![vec!["a12", "a23", "a34", "a14"], vec!["a13"], vec!["a24"]]
        );
        assert_eq!(select_sequence(5, Some(5)).unwrap().kind, SequenceKind::Cycle);
        assert_eq!(select_sequence(6, Some(6)).unwrap().kind, SequenceKind::Main);
        let two = select_sequence(2, None).unwrap();
        assert_eq!(labels(&two.groups), vec![vec!["a12"]]);
        assert!(select_sequence(1, None).is_err());
        assert!(select_sequence(9, None).is_err());
        assert!(select_sequence(4, Some(7)).is_err());
    }

    #[test]
    fn every_sequence_covers_all_pairs_once() {
        for n in MIN_N..=MAX_N {
            let budgets = [None, Some(n - 1), Some(n)];
            for budget in budgets.into_iter().filter(|b| b.is_none_or(|b| b <= n * (n - 1) / 2)) {
                let s = select_sequence(n, budget).unwrap();
                let mut pairs: Vec<Pair> = s.pairs().collect();
                let len = pairs.len();
                pairs.sort();
                pairs.dedup();
                assert_eq!(pairs.len(), len, "duplicate in n={n} {budget:?}");
                if matches!(s.kind, SequenceKind::Main | SequenceKind::Heuristic) {
                    assert_eq!(len, n * (n - 1) / 2);
                }
                assert!(pairs.iter().all(|p| p.0 < p.1 && p.1 < n));
            }
        }
    }

    #[test]
    fn heuristic_keeps_degrees_balanced() {
        for n in [7, 8] {
            let s = heuristic(n);
            assert!(s.extrapolated);
            let mut g = LabeledGraph::empty(n).unwrap();
            for (k, group) in s.groups.iter().enumerate() {
                for &p in group {
                    g.insert(p);
                    assert!(spread(&g) <= 1, "n={n} after {p}");
                }
                assert!(g.is_connected(), "group {k}");
            }
            // the first group ends exactly at the first connected prefix
            let first = &s.groups[0];
            let mut h = LabeledGraph::empty(n).unwrap();
            for &p in &first[..first.len() - 1] {
                h.insert(p);
            }
            assert!(!h.is_connected());
            assert!(h.with(first[first.len() - 1]).is_connected());
            assert!(s.groups.iter().skip(1).all(|g| g.len() == 1));
        }
    }

    #[test]
    fn bipartite_check() {
        let path = LabeledGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert!(is_bipartite(&path));
        assert!(!is_bipartite(&path.with(Pair(0, 2))));
        assert!(is_bipartite(&path.with(Pair(0, 3))));
    }
}
