//! Pairwise comparison matrices: generation, perturbation, consistency,
//! priority weights and the metrics used to compare weight vectors.

mod consistency;
mod metrics;
mod weights;

use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::graph::{LabeledGraph, Pair};

pub use consistency::{consistency_report, principal_eigenpair, ConsistencyReport, RiTable};
pub use metrics::{euclidean_distance, kendall_tau, MetricPair};
pub(crate) use weights::exp_normalize;
pub use weights::{
    crev_completion, crev_incomplete, ev_complete, llsm_complete, llsm_incomplete,
    llsm_incomplete_grounded, CrevOutcome, LogLeastSquares,
};

pub const MIN_ITEMS: usize = 2;
pub const MAX_ITEMS: usize = 10;

const RECIPROCITY_TOL: f64 = 1e-9;

fn check_n(n: usize) -> Result<()> {
    if !(MIN_ITEMS..=MAX_ITEMS).contains(&n) {
        return Err(domain(format!(
            "n = {n} outside [{MIN_ITEMS}, {MAX_ITEMS}]"
        )));
    }
    Ok(())
}

/// Positive reciprocal matrix; `a[i][j]` says how many times item `i` beats
/// item `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pcm {
    n: usize,
    a: Vec<f64>,
}

impl Pcm {
    /// Consistent matrix `a_ij = w_i / w_j`.
    pub fn from_weights(w: &[f64]) -> Result<Pcm> {
        check_n(w.len())?;
        if w.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(domain("weights must be positive and finite"));
        }
        let n = w.len();
        let mut a = vec![1.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = w[i] / w[j];
            }
        }
        Ok(Pcm { n, a })
    }

    /// All-ones matrix: every item equal.
    pub fn ones(n: usize) -> Result<Pcm> {
        check_n(n)?;
        Ok(Pcm {
            n,
            a: vec![1.0; n * n],
        })
    }

    /// Builds from full rows, validating positivity and reciprocity.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Pcm> {
        let n = rows.len();
        check_n(n)?;
        let mut a = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(domain("matrix is not square"));
            }
            a.extend_from_slice(row);
        }
        let pcm = Pcm { n, a };
        pcm.validate()?;
        Ok(pcm)
    }

    /// Builds from the strict upper triangle; `upper(i, j)` for `i < j`.
    pub fn from_upper(n: usize, mut upper: impl FnMut(usize, usize) -> f64) -> Result<Pcm> {
        check_n(n)?;
        let mut pcm = Pcm {
            n,
            a: vec![1.0; n * n],
        };
        for i in 0..n {
            for j in i + 1..n {
                pcm.set(Pair(i, j), upper(i, j))?;
            }
        }
        Ok(pcm)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let x = self.a[i * n + j];
                if !(x.is_finite() && x > 0.0) {
                    return Err(domain(format!("entry ({i},{j}) = {x} is not positive")));
                }
                let prod = x * self.a[j * n + i];
                if (prod - 1.0).abs() > RECIPROCITY_TOL {
                    return Err(domain(format!("entries ({i},{j}),({j},{i}) not reciprocal")));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn from_slice_unchecked(n: usize, a: &[f64]) -> Pcm {
        Pcm { n, a: a.to_vec() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    /// Sets `a_ij = value` and `a_ji = 1 / value`.
    pub fn set(&mut self, p: Pair, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(domain(format!("comparison value {value} is not positive")));
        }
        let n = self.n;
        self.a[p.0 * n + p.1] = value;
        self.a[p.1 * n + p.0] = 1.0 / value;
        Ok(())
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.a.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Keeps only the entries on `mask`'s edges.
    pub fn restrict(&self, mask: &LabeledGraph) -> Result<IncompletePcm> {
        if mask.n() != self.n {
            return Err(domain("mask size differs from matrix size"));
        }
        let mut out = IncompletePcm::new(self.n)?;
        for p in mask.edges() {
            out.set(p, self.get(p.0, p.1))?;
        }
        Ok(out)
    }
}

/// Pairwise comparison matrix with some entries unknown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncompletePcm {
    n: usize,
    a: Vec<f64>,
    known: LabeledGraph,
}

impl IncompletePcm {
    /// Only the diagonal known.
    pub fn new(n: usize) -> Result<IncompletePcm> {
        check_n(n)?;
        Ok(IncompletePcm {
            n,
            a: vec![1.0; n * n],
            known: LabeledGraph::empty(n)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn set(&mut self, p: Pair, value: f64) -> Result<()> {
        if p.1 >= self.n {
            return Err(domain(format!("pair {p} out of range")));
        }
        if !(value.is_finite() && value > 0.0) {
            return Err(domain(format!("comparison value {value} is not positive")));
        }
        let n = self.n;
        self.a[p.0 * n + p.1] = value;
        self.a[p.1 * n + p.0] = 1.0 / value;
        self.known.insert(p);
        Ok(())
    }

    /// `Some(a_ij)` when known; the diagonal is always known.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        (i == j || self.known.has_edge(i, j)).then(|| self.a[i * self.n + j])
    }

    pub fn is_known(&self, i: usize, j: usize) -> bool {
        i == j || self.known.has_edge(i, j)
    }

    /// The representing graph: items as vertices, known comparisons as edges.
    pub fn graph(&self) -> &LabeledGraph {
        &self.known
    }

    pub fn is_complete(&self) -> bool {
        self.known.edge_count() == self.n * (self.n - 1) / 2
    }

    pub fn to_complete(&self) -> Result<Pcm> {
        if !self.is_complete() {
            return Err(domain("matrix has unknown entries"));
        }
        Ok(Pcm {
            n: self.n,
            a: self.a.clone(),
        })
    }
}

/// Positive weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Normalizes `raw` to sum one.
    pub fn new(raw: Vec<f64>) -> Result<WeightVector> {
        if raw.is_empty() || raw.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(domain("weights must be positive and finite"));
        }
        let mut w = raw;
        normalize(&mut w);
        Ok(WeightVector(w))
    }

    pub(crate) fn from_normalized(w: Vec<f64>) -> WeightVector {
        WeightVector(w)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for WeightVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn normalize(w: &mut [f64]) {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
}

/// Intensity of the element-wise perturbation: `Δ ~ U[-h, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationLevel {
    Weak,
    Modest,
    Strong,
    Custom { halfwidth: f64 },
}

impl PerturbationLevel {
    pub const STANDARD: [PerturbationLevel; 3] = [
        PerturbationLevel::Weak,
        PerturbationLevel::Modest,
        PerturbationLevel::Strong,
    ];

    pub fn custom(halfwidth: f64) -> Result<PerturbationLevel> {
        if !(halfwidth.is_finite() && halfwidth >= 0.0) {
            return Err(domain(format!("halfwidth {halfwidth} must be finite and >= 0")));
        }
        Ok(PerturbationLevel::Custom { halfwidth })
    }

    pub fn halfwidth(&self) -> f64 {
        match *self {
            PerturbationLevel::Weak => 1.0,
            PerturbationLevel::Modest => 1.5,
            PerturbationLevel::Strong => 2.0,
            PerturbationLevel::Custom { halfwidth } => halfwidth,
        }
    }

    pub fn name(&self) -> String {
        match self {
            PerturbationLevel::Weak => "weak".into(),
            PerturbationLevel::Modest => "modest".into(),
            PerturbationLevel::Strong => "strong".into(),
            PerturbationLevel::Custom { halfwidth } => format!("custom:{halfwidth}"),
        }
    }

    /// Stable numeric tag mixed into per-sample seeds.
    pub(crate) fn seed_tag(&self) -> u64 {
        match *self {
            PerturbationLevel::Weak => 1,
            PerturbationLevel::Modest => 2,
            PerturbationLevel::Strong => 3,
            PerturbationLevel::Custom { halfwidth } => halfwidth.to_bits(),
        }
    }
}

impl std::str::FromStr for PerturbationLevel {
    type Err = crate::Error;

    /// `weak`, `modest`, `strong`, or a bare halfwidth such as `0.5`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "weak" => Ok(PerturbationLevel::Weak),
            "modest" => Ok(PerturbationLevel::Modest),
            "strong" => Ok(PerturbationLevel::Strong),
            other => {
                let h = other
                    .strip_prefix("custom:")
                    .unwrap_or(other)
                    .parse::<f64>()
                    .map_err(|_| domain(format!("unknown perturbation level `{s}`")))?;
                PerturbationLevel::custom(h)
            }
        }
    }
}

/// Draws `w_i ~ U[1, 9]` independently and returns `a_ij = w_i / w_j` with
/// the normalized generating weights.
pub fn generate_consistent_pcm<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> Result<(Pcm, WeightVector)> {
    check_n(n)?;
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..=9.0)).collect();
    let pcm = Pcm::from_weights(&w)?;
    Ok((pcm, WeightVector::new(w)?))
}

/// Perturbs one entry `a >= 1` by `delta`, folding results below one onto
/// the reciprocal side of the ratio scale.
#[inline]
pub fn perturb_entry(a: f64, delta: f64) -> f64 {
    if a + delta >= 1.0 {
        a + delta
    } else {
        1.0 / (1.0 - delta - (a - 1.0))
    }
}

/// Perturbs each pair at its `>= 1` representative; `delta(i, j)` is drawn
/// once per pair `i < j`, in row-major order.
pub fn perturb_with(pcm: &Pcm, mut delta: impl FnMut(usize, usize) -> f64) -> Pcm {
    let mut out = pcm.clone();
    perturb_slice(out.n, &mut out.a, &mut delta);
    out
}

pub(crate) fn perturb_slice(n: usize, a: &mut [f64], delta: &mut impl FnMut(usize, usize) -> f64) {
    for i in 0..n {
        for j in i + 1..n {
            let upper = a[i * n + j];
            let d = delta(i, j);
            let new_upper = if upper >= 1.0 {
                perturb_entry(upper, d)
            } else {
                1.0 / perturb_entry(1.0 / upper, d)
            };
            a[i * n + j] = new_upper;
            a[j * n + i] = 1.0 / new_upper;
        }
    }
}

/// Element-wise perturbation with `Δ ~ U[-h, h]` per pair.
pub fn perturb<R: Rng + ?Sized>(pcm: &Pcm, level: PerturbationLevel, rng: &mut R) -> Pcm {
    let h = level.halfwidth();
    perturb_with(pcm, |_, _| rng.random_range(-h..=h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_weights_give_ones() {
        let pcm = Pcm::from_weights(&[2.0, 2.0, 2.0]).unwrap();
        assert!(pcm.as_slice().iter().all(|&x| x == 1.0));
        let w = WeightVector::new(vec![2.0, 2.0, 2.0]).unwrap();
        assert_relative_eq!(w[0], 1.0 / 3.0);
    }

    #[test]
    fn two_item_ratio() {
        let pcm = Pcm::from_weights(&[9.0, 1.0]).unwrap();
        assert_eq!(pcm.get(0, 1), 9.0);
        assert_relative_eq!(pcm.get(1, 0), 1.0 / 9.0);
    }

    #[test]
    fn generated_matrices_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let (pcm, w) = generate_consistent_pcm(6, &mut rng).unwrap();
            let n = pcm.n();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        assert_relative_eq!(
                            pcm.get(i, k),
                            pcm.get(i, j) * pcm.get(j, k),
                            max_relative = 1e-12
                        );
                    }
                    assert_relative_eq!(pcm.get(i, j), w[i] / w[j], max_relative = 1e-12);
                }
            }
            assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn size_out_of_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(generate_consistent_pcm(1, &mut rng).is_err());
        assert!(generate_consistent_pcm(11, &mut rng).is_err());
    }

    #[test]
    fn zero_delta_is_identity() {
        assert_eq!(perturb_entry(1.0, 0.0), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (pcm, _) = generate_consistent_pcm(5, &mut rng).unwrap();
        let same = perturb_with(&pcm, |_, _| 0.0);
        for (x, y) in same.as_slice().iter().zip(pcm.as_slice()) {
            assert_relative_eq!(x, y, max_relative = 1e-15);
        }
        let zero = PerturbationLevel::custom(0.0).unwrap();
        let out = perturb(&pcm, zero, &mut rng);
        for (x, y) in out.as_slice().iter().zip(pcm.as_slice()) {
            assert_relative_eq!(x, y, max_relative = 1e-15);
        }
    }

    #[test]
    fn below_one_branch() {
        // 2 - 1.5 = 0.5 < 1, so the result is 1 / (1 + 1.5 - 1).
        assert_relative_eq!(perturb_entry(2.0, -1.5), 1.0 / 1.5);
        let pcm = Pcm::from_weights(&[2.0, 1.0]).unwrap();
        let out = perturb_with(&pcm, |_, _| -1.5);
        assert_relative_eq!(out.get(0, 1), 1.0 / 1.5);
        assert_relative_eq!(out.get(1, 0), 1.5);
    }

    #[test]
    fn perturbs_the_representative_above_one() {
        // a_01 = 1/3 < 1, so a_10 = 3 is perturbed: 3 + 1 = 4.
        let pcm = Pcm::from_weights(&[1.0, 3.0]).unwrap();
        let out = perturb_with(&pcm, |_, _| 1.0);
        assert_relative_eq!(out.get(1, 0), 4.0);
        assert_relative_eq!(out.get(0, 1), 0.25);
    }

    #[test]
    fn level_parsing_and_halfwidths() {
        assert_eq!("weak".parse::<PerturbationLevel>().unwrap().halfwidth(), 1.0);
        assert_eq!("Modest".parse::<PerturbationLevel>().unwrap().halfwidth(), 1.5);
        assert_eq!("strong".parse::<PerturbationLevel>().unwrap().halfwidth(), 2.0);
        assert_eq!("0.25".parse::<PerturbationLevel>().unwrap().halfwidth(), 0.25);
        assert!("bogus".parse::<PerturbationLevel>().is_err());
        assert!(PerturbationLevel::custom(-1.0).is_err());
    }

    #[test]
    fn restrict_keeps_only_mask() {
        let pcm = Pcm::from_weights(&[1.0, 2.0, 4.0]).unwrap();
        let mask = LabeledGraph::from_edges(3, &[(0, 1)]).unwrap();
        let ip = pcm.restrict(&mask).unwrap();
        assert_eq!(ip.get(0, 1), Some(0.5));
        assert_eq!(ip.get(1, 0), Some(2.0));
        assert_eq!(ip.get(0, 2), None);
        assert_eq!(ip.get(2, 2), Some(1.0));
    }

    #[test]
    fn rejects_invalid_matrices() {
        assert!(Pcm::from_rows(&[vec![1.0, 2.0], vec![0.4, 1.0]]).is_err());
        assert!(Pcm::from_rows(&[vec![1.0, -2.0], vec![-0.5, 1.0]]).is_err());
        assert!(Pcm::from_rows(&[vec![1.0, 2.0], vec![0.5, 1.0]]).is_ok());
    }

    proptest! {
        #[test]
        fn perturbation_keeps_reciprocity(seed in any::<u64>(), n in 2usize..=10, lvl in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (pcm, _) = generate_consistent_pcm(n, &mut rng).unwrap();
            let out = perturb(&pcm, PerturbationLevel::STANDARD[lvl], &mut rng);
            for i in 0..n {
                prop_assert_eq!(out.get(i, i), 1.0);
                for j in 0..n {
                    prop_assert!(out.get(i, j) > 0.0);
                    prop_assert!((out.get(i, j) * out.get(j, i) - 1.0).abs() < 1e-15);
                }
            }
        }
    }
}
