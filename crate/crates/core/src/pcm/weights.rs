use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::consistency::power_iterate;
use super::{normalize, IncompletePcm, Pcm, WeightVector};
use crate::error::{contract, domain, Error, Result};
use crate::graph::{LabeledGraph, Pair};

/// Row geometric means, normalized: the logarithmic least squares weights
/// of a complete matrix.
pub fn llsm_complete(pcm: &Pcm) -> WeightVector {
    let n = pcm.n();
    let a = pcm.as_slice();
    let mut y: Vec<f64> = (0..n)
        .map(|i| a[i * n..(i + 1) * n].iter().map(|x| x.ln()).sum::<f64>() / n as f64)
        .collect();
    exp_normalize(&mut y);
    WeightVector::from_normalized(y)
}

/// `y <- exp(y) / sum(exp(y))`, shifted for range safety.
pub(crate) fn exp_normalize(y: &mut [f64]) {
    let top = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    y.iter_mut().for_each(|v| *v = (*v - top).exp());
    normalize(y);
}

/// Normal equations of log-space least squares restricted to the known
/// comparisons of a fixed mask: `L y = r` with `L` the graph Laplacian and
/// `r_i = Σ_{j ~ i} ln a_ij`.
///
/// The Laplacian is singular along the all-ones direction, so `y[ground]`
/// is pinned to zero and the reduced system, positive definite for a
/// connected mask, is factored once up front. Repeated solves against the
/// same mask only rebuild the right-hand side.
#[derive(Debug, Clone)]
pub struct LogLeastSquares {
    n: usize,
    ground: usize,
    neighbours: Vec<Vec<usize>>,
    factor: Cholesky<f64, Dyn>,
    rhs: DVector<f64>,
}

impl LogLeastSquares {
    pub fn new(mask: &LabeledGraph, ground: usize) -> Result<LogLeastSquares> {
        let n = mask.n();
        if ground >= n {
            return Err(domain(format!("ground vertex {ground} out of range")));
        }
        if !mask.is_connected() {
            return Err(contract(
                "incomplete weights are unique only for a connected representing graph",
            ));
        }
        let mut neighbours = vec![Vec::new(); n];
        for p in mask.edges() {
            neighbours[p.0].push(p.1);
            neighbours[p.1].push(p.0);
        }
        let reduced = |v: usize| if v < ground { v } else { v - 1 };
        let mut lap = DMatrix::<f64>::zeros(n - 1, n - 1);
        for v in (0..n).filter(|&v| v != ground) {
            lap[(reduced(v), reduced(v))] = neighbours[v].len() as f64;
            for &u in neighbours[v].iter().filter(|&&u| u != ground) {
                lap[(reduced(v), reduced(u))] = -1.0;
            }
        }
        let factor = Cholesky::new(lap)
            .ok_or_else(|| Error::Numeric("reduced Laplacian not positive definite".into()))?;
        Ok(LogLeastSquares {
            n,
            ground,
            neighbours,
            factor,
            rhs: DVector::zeros(n - 1),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves for a row-major matrix of logarithms (`log_a[i*n + j] =
    /// ln a_ij`, read only at known positions) and writes normalized
    /// weights into `out`.
    pub fn solve_logs(&mut self, log_a: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut k = 0;
        for v in 0..n {
            if v == self.ground {
                continue;
            }
            self.rhs[k] = self.neighbours[v].iter().map(|&u| log_a[v * n + u]).sum();
            k += 1;
        }
        self.factor.solve_mut(&mut self.rhs);
        let mut k = 0;
        for (v, slot) in out.iter_mut().enumerate().take(n) {
            if v == self.ground {
                *slot = 0.0;
            } else {
                *slot = self.rhs[k];
                k += 1;
            }
        }
        exp_normalize(&mut out[..n]);
    }
}

fn log_matrix(ipcm: &IncompletePcm) -> Vec<f64> {
    let n = ipcm.n();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if let Some(a) = ipcm.get(i, j) {
                out[i * n + j] = a.ln();
            }
        }
    }
    out
}

/// Logarithmic least squares weights over the known entries only.
pub fn llsm_incomplete(ipcm: &IncompletePcm) -> Result<WeightVector> {
    llsm_incomplete_grounded(ipcm, 0)
}

/// As [`llsm_incomplete`] with an explicit grounded coordinate; the result
/// does not depend on the choice.
pub fn llsm_incomplete_grounded(ipcm: &IncompletePcm, ground: usize) -> Result<WeightVector> {
    let mut solver = LogLeastSquares::new(ipcm.graph(), ground)?;
    let mut w = vec![0.0; ipcm.n()];
    solver.solve_logs(&log_matrix(ipcm), &mut w);
    Ok(WeightVector::from_normalized(w))
}

/// Normalized principal right eigenvector.
pub fn ev_complete(pcm: &Pcm) -> Result<WeightVector> {
    let (_, w) = super::principal_eigenpair(pcm.as_slice(), pcm.n(), None)?;
    Ok(WeightVector::from_normalized(w))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrevOutcome {
    pub weights: WeightVector,
    /// The λ_max-minimal completion.
    pub completion: Pcm,
    pub lambda_max: f64,
    pub sweeps: usize,
}

const CREV_IMPROVEMENT_TOL: f64 = 1e-10;
const CREV_MAX_SWEEPS: usize = 1_000;
const LINE_TOL: f64 = 1e-7;

/// Completion state for the coordinate descent: the full matrix plus a warm
/// eigenvector shared by consecutive evaluations.
struct Completion {
    n: usize,
    a: Vec<f64>,
    x: Vec<f64>,
    scratch: Vec<f64>,
}

impl Completion {
    fn set(&mut self, p: Pair, log_value: f64) {
        let v = log_value.exp();
        self.a[p.0 * self.n + p.1] = v;
        self.a[p.1 * self.n + p.0] = 1.0 / v;
    }

    fn lambda(&mut self) -> Result<f64> {
        power_iterate(&self.a, self.n, &mut self.x, &mut self.scratch)
    }

    fn lambda_at(&mut self, p: Pair, t: f64) -> Result<f64> {
        self.set(p, t);
        self.lambda()
    }
}

/// Eigenvector weights of the λ_max-minimal completion.
pub fn crev_incomplete(ipcm: &IncompletePcm) -> Result<WeightVector> {
    Ok(crev_completion(ipcm)?.weights)
}

/// Fills the unknown entries so the principal eigenvalue is minimal, then
/// takes the principal eigenvector of the completed matrix.
///
/// Cyclic coordinate descent over the logarithms of the missing entries:
/// each entry in turn is optimized by a one-dimensional line search, which
/// is sound because λ_max is convex along each log-coordinate. Sweeps repeat
/// until one improves λ_max by less than `1e-10`. The starting point is the
/// logarithmic least squares completion.
pub fn crev_completion(ipcm: &IncompletePcm) -> Result<CrevOutcome> {
    let n = ipcm.n();
    if !ipcm.graph().is_connected() {
        return Err(contract(
            "the minimal completion is unique only for a connected representing graph",
        ));
    }
    let start = llsm_incomplete(ipcm)?;
    let missing = ipcm.graph().non_edges();
    let mut c = Completion {
        n,
        a: vec![1.0; n * n],
        x: start.to_vec(),
        scratch: vec![0.0; n],
    };
    for i in 0..n {
        for j in 0..n {
            c.a[i * n + j] = ipcm.get(i, j).unwrap_or(start[i] / start[j]);
        }
    }
    let mut lambda = c.lambda()?;
    let mut sweeps = 0;
    while !missing.is_empty() && sweeps < CREV_MAX_SWEEPS {
        sweeps += 1;
        let before = lambda;
        for &p in &missing {
            let t0 = c.a[p.0 * n + p.1].ln();
            let (t, value) = line_minimum(&mut c, p, t0)?;
            // keep the incumbent unless the search strictly improved on it
            if value < lambda {
                c.set(p, t);
                lambda = value;
            } else {
                c.set(p, t0);
            }
        }
        lambda = c.lambda()?;
        if before - lambda < CREV_IMPROVEMENT_TOL {
            break;
        }
    }
    let (lambda_max, w) = super::principal_eigenpair(&c.a, n, Some(&c.x))?;
    Ok(CrevOutcome {
        weights: WeightVector::from_normalized(w),
        completion: Pcm { n, a: c.a },
        lambda_max,
        sweeps,
    })
}

/// Minimizes λ_max along one log-coordinate starting from `t0`: bracket
/// by stepping downhill, then Brent's golden-section search with parabolic
/// steps.
fn line_minimum(c: &mut Completion, p: Pair, t0: f64) -> Result<(f64, f64)> {
    let f0 = c.lambda_at(p, t0)?;
    let mut step = 0.25;
    let mut f_up = c.lambda_at(p, t0 + step)?;
    let (dir, mut f_b) = if f_up <= f0 {
        (1.0, f_up)
    } else {
        let f_down = c.lambda_at(p, t0 - step)?;
        if f_down >= f0 {
            // the minimum lies inside [t0 - step, t0 + step]
            return brent(c, p, t0 - step, t0 + step);
        }
        f_up = f_down;
        (-1.0, f_up)
    };
    // walk downhill until the function turns up
    let mut a = t0;
    let mut b = t0 + dir * step;
    loop {
        step *= 2.0;
        let next = b + dir * step;
        let f_next = c.lambda_at(p, next)?;
        if f_next > f_b || step > 64.0 {
            let (lo, hi) = if dir > 0.0 { (a, next) } else { (next, a) };
            return brent(c, p, lo, hi);
        }
        a = b;
        b = next;
        f_b = f_next;
    }
}

fn brent(c: &mut Completion, p: Pair, lo: f64, hi: f64) -> Result<(f64, f64)> {
    const GOLD: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (lo, hi);
    let mut x = a + GOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = c.lambda_at(p, x)?;
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let tol = LINE_TOL * x.abs().max(1.0);
        if (x - m).abs() <= 2.0 * tol - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut num = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                num = -num;
            }
            q = q.abs();
            if num.abs() < (0.5 * q * e).abs() && num > q * (a - x) && num < q * (b - x) {
                e = d;
                d = num / q;
                let u = x + d;
                if u - a < 2.0 * tol || b - u < 2.0 * tol {
                    d = if x < m { tol } else { -tol };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol { x + d } else { x + tol.copysign(d) };
        let fu = c.lambda_at(p, u)?;
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Ok((x, fx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcm::{consistency_report, generate_consistent_pcm, perturb, PerturbationLevel, RiTable};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn perturbed(n: usize, seed: u64, level: PerturbationLevel) -> Pcm {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pcm, _) = generate_consistent_pcm(n, &mut rng).unwrap();
        perturb(&pcm, level, &mut rng)
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    /// Least squares over every ordered pair via SVD, with Σ y = 0 appended.
    fn lsq_oracle(pcm: &Pcm) -> Vec<f64> {
        let n = pcm.n();
        let rows = n * (n - 1) + 1;
        let mut design = DMatrix::zeros(rows, n);
        let mut target = DVector::zeros(rows);
        let mut r = 0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    design[(r, i)] = 1.0;
                    design[(r, j)] = -1.0;
                    target[r] = pcm.get(i, j).ln();
                    r += 1;
                }
            }
        }
        for j in 0..n {
            design[(r, j)] = 1.0;
        }
        let y = design.svd(true, true).solve(&target, 1e-14).unwrap();
        let mut w: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        normalize(&mut w);
        w
    }

    /// Plain gradient descent on the restricted objective.
    fn descent_oracle(ipcm: &IncompletePcm) -> Vec<f64> {
        let n = ipcm.n();
        let edges = ipcm.graph().edges();
        let mut y = vec![0.0; n];
        for _ in 0..200_000 {
            let mut grad = vec![0.0; n];
            for p in &edges {
                let r = y[p.0] - y[p.1] - ipcm.get(p.0, p.1).unwrap().ln();
                grad[p.0] += 2.0 * r;
                grad[p.1] -= 2.0 * r;
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm < 1e-14 {
                break;
            }
            for v in 0..n {
                y[v] -= 0.05 * grad[v];
            }
        }
        let mut w: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        normalize(&mut w);
        w
    }

    /// Dense eigensolver route: Schur eigenvalues, then the null vector of
    /// `A - λI` from an SVD.
    fn eigen_oracle(pcm: &Pcm) -> Vec<f64> {
        let n = pcm.n();
        let m = DMatrix::from_row_slice(n, n, pcm.as_slice());
        let lambda = m
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let shifted = &m - DMatrix::identity(n, n) * lambda;
        let svd = shifted.svd(false, true);
        let k = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let v_t = svd.v_t.unwrap();
        let mut w: Vec<f64> = (0..n).map(|j| v_t[(k, j)]).collect();
        if w[0] < 0.0 {
            w.iter_mut().for_each(|x| *x = -*x);
        }
        normalize(&mut w);
        w
    }

    fn cycle4() -> LabeledGraph {
        LabeledGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap()
    }

    #[test]
    fn llsm_recovers_consistent_weights() {
        let w = [1.5, 7.0, 3.25, 2.0, 8.5];
        let got = llsm_complete(&Pcm::from_weights(&w).unwrap());
        let expect = WeightVector::new(w.to_vec()).unwrap();
        assert!(max_abs_diff(&got, &expect) < 1e-12);
    }

    #[test]
    fn llsm_scale_invariant() {
        let w = [1.5, 7.0, 3.25, 2.0];
        let scaled: Vec<f64> = w.iter().map(|x| x * 123.4).collect();
        let a = llsm_complete(&Pcm::from_weights(&w).unwrap());
        let b = llsm_complete(&Pcm::from_weights(&scaled).unwrap());
        assert!(max_abs_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn llsm_ones_is_uniform() {
        let w = llsm_complete(&Pcm::ones(6).unwrap());
        assert!(w.iter().all(|&x| (x - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn llsm_matches_generic_least_squares() {
        let pcm = perturbed(4, 404, PerturbationLevel::Strong);
        let got = llsm_complete(&pcm);
        assert!(max_abs_diff(&got, &lsq_oracle(&pcm)) < 1e-10);
    }

    #[test]
    fn incomplete_on_complete_mask_reduces() {
        for seed in 0..20 {
            let pcm = perturbed(6, seed, PerturbationLevel::Modest);
            let full = LabeledGraph::complete(6).unwrap();
            let got = llsm_incomplete(&pcm.restrict(&full).unwrap()).unwrap();
            assert!(max_abs_diff(&got, &llsm_complete(&pcm)) < 1e-12);
        }
    }

    #[test]
    fn tree_mask_reproduces_known_entries() {
        let tree = LabeledGraph::from_edges(5, &[(0, 3), (3, 1), (3, 4), (4, 2)]).unwrap();
        let pcm = perturbed(5, 9, PerturbationLevel::Strong);
        let ip = pcm.restrict(&tree).unwrap();
        let w = llsm_incomplete(&ip).unwrap();
        for p in tree.edges() {
            let ratio = w[p.0] / w[p.1];
            assert!((ratio - pcm.get(p.0, p.1)).abs() / pcm.get(p.0, p.1) < 1e-10);
        }
    }

    #[test]
    fn cycle_mask_matches_direct_minimization() {
        let pcm = perturbed(4, 77, PerturbationLevel::Strong);
        let ip = pcm.restrict(&cycle4()).unwrap();
        let got = llsm_incomplete(&ip).unwrap();
        assert!(max_abs_diff(&got, &descent_oracle(&ip)) < 1e-8);
    }

    #[test]
    fn grounding_is_a_gauge() {
        let mask = LabeledGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)])
            .unwrap();
        let ip = perturbed(5, 3, PerturbationLevel::Strong).restrict(&mask).unwrap();
        let base = llsm_incomplete_grounded(&ip, 0).unwrap();
        for g in 1..5 {
            let other = llsm_incomplete_grounded(&ip, g).unwrap();
            assert!(max_abs_diff(&base, &other) < 1e-10);
        }
    }

    #[test]
    fn disconnected_mask_rejected() {
        let mask = LabeledGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let ip = Pcm::ones(4).unwrap().restrict(&mask).unwrap();
        assert!(matches!(llsm_incomplete(&ip), Err(Error::Contract(_))));
        assert!(matches!(crev_incomplete(&ip), Err(Error::Contract(_))));
    }

    #[test]
    fn ev_recovers_consistent_weights() {
        let w = [2.0, 5.0, 1.0, 9.0];
        let got = ev_complete(&Pcm::from_weights(&w).unwrap()).unwrap();
        assert!(max_abs_diff(&got, &WeightVector::new(w.to_vec()).unwrap()) < 1e-10);
        let ones = ev_complete(&Pcm::ones(5).unwrap()).unwrap();
        assert!(ones.iter().all(|&x| (x - 0.2).abs() < 1e-14));
    }

    #[test]
    fn ev_matches_dense_eigensolver() {
        let pcm = perturbed(5, 2024, PerturbationLevel::Strong);
        let got = ev_complete(&pcm).unwrap();
        assert!(max_abs_diff(&got, &eigen_oracle(&pcm)) < 1e-9);
    }

    #[test]
    fn crev_on_complete_mask_is_ev() {
        let pcm = perturbed(5, 31, PerturbationLevel::Modest);
        let full = LabeledGraph::complete(5).unwrap();
        let got = crev_incomplete(&pcm.restrict(&full).unwrap()).unwrap();
        assert!(max_abs_diff(&got, &ev_complete(&pcm).unwrap()) < 1e-12);
    }

    #[test]
    fn crev_on_tree_is_consistent() {
        let tree = LabeledGraph::from_edges(5, &[(0, 1), (0, 2), (2, 3), (2, 4)]).unwrap();
        let ip = perturbed(5, 8, PerturbationLevel::Strong).restrict(&tree).unwrap();
        let out = crev_completion(&ip).unwrap();
        let cr = consistency_report(&out.completion, &RiTable::default()).unwrap();
        assert!(cr.cr <= 1e-10, "cr = {}", cr.cr);
        for p in tree.edges() {
            assert_relative_eq!(out.completion.get(p.0, p.1), ip.get(p.0, p.1).unwrap());
        }
    }

    #[test]
    fn crev_dominates_random_completions() {
        let ip = perturbed(4, 55, PerturbationLevel::Strong).restrict(&cycle4()).unwrap();
        let out = crev_completion(&ip).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let missing = ip.graph().non_edges();
        for _ in 0..1000 {
            let mut full = ip.clone();
            for &p in &missing {
                let v: f64 = rng.random_range(-2.5f64..2.5).exp();
                full.set(p, v).unwrap();
            }
            let lam = consistency_report(&full.to_complete().unwrap(), &RiTable::default())
                .unwrap()
                .lambda_max;
            assert!(out.lambda_max <= lam + 1e-12);
        }
        // known entries are untouched
        for p in cycle4().edges() {
            assert_relative_eq!(out.completion.get(p.0, p.1), ip.get(p.0, p.1).unwrap());
        }
    }
}
