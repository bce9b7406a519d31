//! graph6 text encoding (McKay), restricted to the small vertex counts used
//! here: one size byte `n + 63`, then the upper-triangle bits column by
//! column, six per byte, each byte offset by 63.

use super::{pair_count, LabeledGraph, MAX_VERTICES};
use crate::error::{domain, Result};

pub fn to_graph6(g: &LabeledGraph) -> String {
    let m = pair_count(g.n());
    let mut out = String::with_capacity(1 + m.div_ceil(6));
    out.push((g.n() as u8 + 63) as char);
    for chunk in 0..m.div_ceil(6) {
        let mut byte = 0u8;
        for k in 0..6 {
            let idx = chunk * 6 + k;
            let bit = idx < m && g.bits() >> idx & 1 == 1;
            byte = (byte << 1) | bit as u8;
        }
        out.push((byte + 63) as char);
    }
    out
}

pub fn from_graph6(s: &str) -> Result<LabeledGraph> {
    let bytes = s.trim_end().as_bytes();
    let (&head, body) = bytes
        .split_first()
        .ok_or_else(|| domain("empty graph6 string"))?;
    if !(63..=126).contains(&head) {
        return Err(domain(format!("bad graph6 size byte in `{s}`")));
    }
    let n = (head - 63) as usize;
    if n > MAX_VERTICES {
        return Err(domain(format!("graph6 `{s}` has {n} vertices, limit {MAX_VERTICES}")));
    }
    let m = pair_count(n);
    if body.len() != m.div_ceil(6) {
        return Err(domain(format!("graph6 `{s}` has wrong length for n={n}")));
    }
    let mut edges = 0u64;
    for (chunk, &b) in body.iter().enumerate() {
        if !(63..=126).contains(&b) {
            return Err(domain(format!("bad graph6 byte in `{s}`")));
        }
        let v = b - 63;
        for k in 0..6 {
            let idx = chunk * 6 + k;
            if v >> (5 - k) & 1 == 1 {
                if idx >= m {
                    return Err(domain(format!("graph6 `{s}` has padding bits set")));
                }
                edges |= 1 << idx;
            }
        }
    }
    Ok(LabeledGraph::from_bits(n, edges))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_encodings() {
        // Reference strings as produced by nauty's geng/showg.
        let k4 = LabeledGraph::complete(4).unwrap();
        assert_eq!(to_graph6(&k4), "C~");
        let k2 = LabeledGraph::complete(2).unwrap();
        assert_eq!(to_graph6(&k2), "A_");
        let p = LabeledGraph::from_edges(5, &[(0, 2), (0, 4), (1, 3), (3, 4)]).unwrap();
        assert_eq!(to_graph6(&p), "DQc");
    }

    #[test]
    fn decode_round_trip() {
        let g = LabeledGraph::from_edges(6, &[(0, 3), (0, 4), (1, 3), (1, 5), (2, 4), (2, 5)])
            .unwrap();
        assert_eq!(from_graph6(&to_graph6(&g)).unwrap(), g);
    }

    #[test]
    fn rejects_malformed() {
        assert!(from_graph6("").is_err());
        assert!(from_graph6("C").is_err());
        assert!(from_graph6("C~~").is_err());
        assert!(from_graph6("A\x7f").is_err());
    }
}
