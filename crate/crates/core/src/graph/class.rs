use serde::{Deserialize, Serialize};

use super::{canonical_form, two_colouring, CanonicalForm, LabeledGraph};
use crate::error::{contract, Result};

/// Isomorphism class of a connected comparison graph with its structural
/// flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphClass {
    pub canon: CanonicalForm,
    pub n: usize,
    pub e: usize,
    /// Vertex degrees, ascending.
    pub degree_sequence: Vec<usize>,
    pub is_tree: bool,
    pub is_star: bool,
    pub is_cycle: bool,
    pub is_bipartite: bool,
    /// `Some(k)` when every vertex has degree `k`.
    pub k_regular: Option<usize>,
    /// `Some(k)` when exactly one vertex has degree `k + 1` and the rest `k`.
    pub k_quasi_regular: Option<usize>,
    /// Fewest edge deletions that leave the graph bipartite.
    pub odd_cycle_edge_deletions: usize,
}

impl GraphClass {
    /// Max minus min degree.
    pub fn degree_spread(&self) -> usize {
        match (self.degree_sequence.first(), self.degree_sequence.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0,
        }
    }

    pub fn representative(&self) -> LabeledGraph {
        self.canon.graph()
    }

    /// Short human label used in tables.
    pub fn label(&self) -> String {
        if self.e == self.n * (self.n - 1) / 2 {
            return "complete".into();
        }
        if self.is_star {
            return "star".into();
        }
        if self.is_cycle {
            return "cycle".into();
        }
        if self.is_tree {
            return if self.degree_spread() <= 1 || self.degree_sequence.iter().all(|&d| d <= 2) {
                "path".into()
            } else {
                "tree".into()
            };
        }
        let mut parts = Vec::new();
        if let Some(k) = self.k_regular {
            parts.push(format!("{k}-regular"));
        }
        if let Some(k) = self.k_quasi_regular {
            parts.push(format!("{k}-quasi-regular"));
        }
        if self.is_bipartite {
            parts.push("bipartite".into());
        }
        if parts.is_empty() {
            "irregular".into()
        } else {
            parts.join(",")
        }
    }
}

/// Structural classification of a connected graph.
pub fn classify(g: &LabeledGraph) -> Result<GraphClass> {
    if !g.is_connected() {
        return Err(contract("classify needs a connected graph"));
    }
    let n = g.n();
    let e = g.edge_count();
    let mut degrees = g.degrees();
    degrees.sort_unstable();
    let lo = degrees[0];
    let hi = degrees[n - 1];
    let is_tree = e + 1 == n;
    let k_quasi_regular = (hi == lo + 1 && degrees.iter().filter(|&&d| d == hi).count() == 1)
        .then_some(lo);
    Ok(GraphClass {
        canon: canonical_form(g)?,
        n,
        e,
        is_tree,
        is_star: is_tree && n >= 2 && hi == n - 1,
        is_cycle: n >= 3 && lo == 2 && hi == 2,
        is_bipartite: two_colouring(g).is_some(),
        k_regular: (lo == hi).then_some(lo),
        k_quasi_regular,
        odd_cycle_edge_deletions: e - max_cut(g),
        degree_sequence: degrees,
    })
}

/// Maximum cut by enumerating two-colourings with vertex 0 fixed.
fn max_cut(g: &LabeledGraph) -> usize {
    let n = g.n();
    let edges = g.edges();
    if n < 2 {
        return 0;
    }
    let mut best = 0;
    for side in 0u32..(1 << (n - 1)) {
        let side = side << 1;
        let cut = edges
            .iter()
            .filter(|p| (side >> p.0 & 1) != (side >> p.1 & 1))
            .count();
        best = best.max(cut);
    }
    best
}
