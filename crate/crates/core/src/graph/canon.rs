use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{pair_count, LabeledGraph, MAX_VERTICES};
use crate::error::{Error, Result};

/// Isomorphism-invariant name of a graph: the lexicographically minimal
/// upper-triangle adjacency bitstring over all vertex relabelings.
///
/// `bits` holds the bitstring most-significant-first, so integer order on
/// `bits` is lexicographic order on the bitstring. Ordering is by vertex
/// count first. Serialized as the graph6 string of the canonical labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalForm {
    n: u8,
    bits: u64,
}

impl CanonicalForm {
    /// Orders below every other form.
    pub const MIN: CanonicalForm = CanonicalForm { n: 0, bits: 0 };

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn edge_count(&self) -> usize {
        self.bits.count_ones() as usize
    }

    /// The bitstring as `0`/`1` characters.
    pub fn bitstring(&self) -> String {
        let m = pair_count(self.n());
        (0..m)
            .map(|p| if self.bits >> (m - 1 - p) & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    /// The canonically labeled representative of the class.
    pub fn graph(&self) -> LabeledGraph {
        let m = pair_count(self.n());
        let mut edges = 0u64;
        for p in 0..m {
            if self.bits >> (m - 1 - p) & 1 == 1 {
                edges |= 1 << p;
            }
        }
        LabeledGraph::from_bits(self.n(), edges)
    }
}

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::to_graph6(&self.graph()))
    }
}

impl FromStr for CanonicalForm {
    type Err = Error;

    /// Parses graph6 and canonicalizes, so any labeling is accepted.
    fn from_str(s: &str) -> Result<Self> {
        canonical_form(&super::from_graph6(s)?)
    }
}

impl Serialize for CanonicalForm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CanonicalForm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

struct Search {
    n: usize,
    m: usize,
    adj: [u16; MAX_VERTICES],
    best: Option<u64>,
    perm: [usize; MAX_VERTICES],
}

impl Search {
    /// Places a vertex at position `k`. `cur` is the bitstring prefix for
    /// columns `1..k`, of length `k(k-1)/2`.
    fn place(&mut self, k: usize, used: u16, cur: u64) {
        if k == self.n {
            if self.best.is_none_or(|b| cur < b) {
                self.best = Some(cur);
            }
            return;
        }
        // Column k is fully determined by which vertex lands here; try the
        // smallest columns first so good bounds appear early.
        let mut cands = [(0u64, 0usize); MAX_VERTICES];
        let mut count = 0;
        for v in 0..self.n {
            if used & (1 << v) != 0 {
                continue;
            }
            let mut col = 0u64;
            for i in 0..k {
                col = (col << 1) | ((self.adj[self.perm[i]] >> v) & 1) as u64;
            }
            cands[count] = (col, v);
            count += 1;
        }
        cands[..count].sort_unstable();
        let len = (k + 1) * k / 2;
        for &(col, v) in &cands[..count] {
            let next = (cur << k) | col;
            if let Some(best) = self.best {
                if next > best >> (self.m - len) {
                    break;
                }
            }
            self.perm[k] = v;
            self.place(k + 1, used | (1 << v), next);
        }
    }
}

/// Exact canonical form by branch-and-bound over vertex orderings.
///
/// Vertices are placed one position at a time; each placement fixes one
/// more column of the bitstring, and any branch whose prefix already exceeds
/// the best complete bitstring is cut.
pub fn canonical_form(g: &LabeledGraph) -> Result<CanonicalForm> {
    let n = g.n();
    if n > MAX_VERTICES {
        return Err(Error::Capacity(format!("canonical form needs n <= {MAX_VERTICES}")));
    }
    let mut search = Search {
        n,
        m: pair_count(n),
        adj: g.adjacency(),
        best: None,
        perm: [0; MAX_VERTICES],
    };
    search.place(0, 0, 0);
    Ok(CanonicalForm {
        n: n as u8,
        bits: search.best.unwrap_or(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Pair;
    use proptest::prelude::*;

    fn brute_force(g: &LabeledGraph) -> u64 {
        let n = g.n();
        let m = pair_count(n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = u64::MAX;
        permute_all(&mut perm, 0, &mut |p| {
            // position k holds vertex p[k]
            let mut inv = vec![0; n];
            for (pos, &v) in p.iter().enumerate() {
                inv[v] = pos;
            }
            let h = g.permute(&inv).unwrap();
            let mut val = 0u64;
            for idx in 0..m {
                val = (val << 1) | (h.bits() >> idx & 1);
            }
            best = best.min(val);
        });
        best
    }

    fn permute_all(p: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
        if k == p.len() {
            f(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            permute_all(p, k + 1, f);
            p.swap(k, i);
        }
    }

    #[test]
    fn relabeled_paths_agree() {
        let a = LabeledGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let b = LabeledGraph::from_edges(3, &[(1, 0), (0, 2)]).unwrap();
        assert_eq!(canonical_form(&a).unwrap(), canonical_form(&b).unwrap());
    }

    #[test]
    fn path_and_triangle_differ() {
        let path = LabeledGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let tri = LabeledGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_ne!(canonical_form(&path).unwrap(), canonical_form(&tri).unwrap());
    }

    #[test]
    fn representative_is_isomorphic() {
        let g = LabeledGraph::from_edges(5, &[(0, 4), (4, 2), (2, 3), (1, 3)]).unwrap();
        let c = canonical_form(&g).unwrap();
        assert_eq!(canonical_form(&c.graph()).unwrap(), c);
        assert_eq!(c.graph().edge_count(), 4);
    }

    #[test]
    fn complete_graph_on_ten_vertices() {
        let k10 = LabeledGraph::complete(10).unwrap();
        let c = canonical_form(&k10).unwrap();
        assert_eq!(c.edge_count(), 45);
    }

    #[test]
    fn graph6_string_round_trip() {
        let g = LabeledGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let c = canonical_form(&g).unwrap();
        let parsed: CanonicalForm = c.to_string().parse().unwrap();
        assert_eq!(parsed, c);
    }

    fn arb_graph() -> impl Strategy<Value = (LabeledGraph, Vec<usize>)> {
        (1usize..=7).prop_flat_map(|n| {
            let m = pair_count(n);
            (
                proptest::collection::vec(any::<bool>(), m),
                Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            )
                .prop_map(move |(bits, perm)| {
                    let mut g = LabeledGraph::empty(n).unwrap();
                    for (idx, b) in bits.into_iter().enumerate() {
                        if b {
                            g.insert(Pair::from_index(idx));
                        }
                    }
                    (g, perm)
                })
        })
    }

    proptest! {
        #[test]
        fn invariant_under_relabeling((g, perm) in arb_graph()) {
            let h = g.permute(&perm).unwrap();
            prop_assert_eq!(canonical_form(&g).unwrap(), canonical_form(&h).unwrap());
        }

        #[test]
        fn equals_full_permutation_minimum((g, _perm) in arb_graph()) {
            prop_assume!(g.n() <= 6);
            prop_assert_eq!(canonical_form(&g).unwrap().bits(), brute_force(&g));
        }
    }
}
