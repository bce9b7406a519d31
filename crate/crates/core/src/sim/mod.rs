//! Monte Carlo scoring of comparison graphs.
//!
//! Each sample draws a consistent matrix from weights in `[1, 9]`, perturbs
//! it, deletes the comparisons missing from the class representative and
//! measures how far the incomplete-matrix weights land from the weights of
//! the complete perturbed matrix. Samples are seeded individually from
//! `(master_seed, class, level, index)` and reduced in fixed chunks in
//! index order, so results do not depend on the thread count.

mod calibration;
mod plan;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::graph::{classify, CanonicalForm, Catalog, GraphClass, MAX_ENUM_N};
use crate::pcm::{
    crev_completion, euclidean_distance, kendall_tau, perturb_slice, principal_eigenpair,
    IncompletePcm, LogLeastSquares, Pcm, PerturbationLevel,
};

pub use calibration::{cr_calibration, five_number_summary, FiveNumberSummary};
pub use plan::{
    plan_sample_size, significant_difference, LevelVerdict, MarginRule, SampleSizePlan, Verdict,
    DEFAULT_ALPHA_D, DEFAULT_ALPHA_TAU, DEFAULT_SIGMA_D, DEFAULT_SIGMA_TAU,
};
pub(crate) use plan::judge_lower;

/// Largest item count for CREV sweeps unless explicitly allowed.
pub const CREV_DEFAULT_MAX_N: usize = 5;

/// Samples per reduction chunk. Changing it changes the floating-point
/// summation order and therefore the low bits of stored results.
const CHUNK: u64 = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Llsm,
    Crev,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "llsm" => Ok(Method::Llsm),
            "crev" => Ok(Method::Crev),
            other => Err(domain(format!("unknown method {other:?}"))),
        }
    }
}

fn default_levels() -> Vec<PerturbationLevel> {
    PerturbationLevel::STANDARD.to_vec()
}

/// Simulation configuration, stored verbatim in run artifacts.
///
/// With neither `e` nor `classes` set, every connected class at every edge
/// count is scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<usize>,
    /// Explicit classes as graph6 strings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<CanonicalForm>>,
    #[serde(default = "default_levels")]
    pub levels: Vec<PerturbationLevel>,
    pub n_samples: u64,
    #[serde(default)]
    pub method: Method,
    pub master_seed: u64,
    /// Worker threads; `None` uses all cores. Does not affect results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub margin: MarginRule,
    #[serde(default)]
    pub allow_crev_large: bool,
}

impl SimConfig {
    pub fn new(n: usize, n_samples: u64, master_seed: u64) -> SimConfig {
        SimConfig {
            n,
            e: None,
            classes: None,
            levels: default_levels(),
            n_samples,
            method: Method::Llsm,
            master_seed,
            workers: None,
            margin: MarginRule::default(),
            allow_crev_large: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(domain("n_samples must be at least 1"));
        }
        if self.levels.is_empty() {
            return Err(domain("no perturbation levels given"));
        }
        for (i, l) in self.levels.iter().enumerate() {
            if self.levels[..i].contains(l) {
                return Err(domain(format!("perturbation level {} listed twice", l.name())));
            }
            if !(l.halfwidth().is_finite() && l.halfwidth() >= 0.0) {
                return Err(domain("perturbation halfwidth must be finite and nonnegative"));
            }
        }
        if self.method == Method::Crev && self.n > CREV_DEFAULT_MAX_N && !self.allow_crev_large {
            return Err(domain(format!(
                "crev is limited to n <= {CREV_DEFAULT_MAX_N}; set allow_crev_large to override"
            )));
        }
        if self.workers == Some(0) {
            return Err(domain("workers must be at least 1"));
        }
        self.margin.validate()?;
        match (&self.e, &self.classes) {
            (Some(_), Some(_)) => Err(domain("give either e or classes, not both")),
            (_, Some(list)) => {
                if list.is_empty() {
                    return Err(domain("empty class list"));
                }
                if let Some(c) = list.iter().find(|c| c.n() != self.n) {
                    return Err(domain(format!("class {c} has {} vertices, not {}", c.n(), self.n)));
                }
                Ok(())
            }
            (e, None) => {
                if !(2..=MAX_ENUM_N).contains(&self.n) {
                    return Err(domain(format!(
                        "sweeps need 2 <= n <= {MAX_ENUM_N}, got {}",
                        self.n
                    )));
                }
                if let Some(e) = *e {
                    let max = self.n * (self.n - 1) / 2;
                    if e + 1 < self.n || e > max {
                        return Err(domain(format!("e={e} outside [{}, {max}]", self.n - 1)));
                    }
                }
                Ok(())
            }
        }
    }

    /// Classes to score, ordered by edge count then canonical form.
    pub fn target_classes(&self) -> Result<Vec<GraphClass>> {
        self.validate()?;
        let mut out = match (&self.e, &self.classes) {
            (_, Some(list)) => {
                let mut v = list.iter().map(|c| classify(&c.graph())).collect::<Result<Vec<_>>>()?;
                v.dedup_by(|a, b| a.canon == b.canon);
                v
            }
            (Some(e), None) => crate::graph::enumerate_connected_classes(self.n, *e)?,
            (None, None) => Catalog::build(self.n)?
                .levels()
                .values()
                .flatten()
                .cloned()
                .collect(),
        };
        out.sort_by_key(|c| (c.e, c.canon));
        out.dedup_by(|a, b| a.canon == b.canon);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelScore {
    pub level: PerturbationLevel,
    pub mean_d_euc: f64,
    pub sd_d_euc: f64,
    pub mean_tau: f64,
    pub sd_tau: f64,
    pub n_samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphScore {
    pub class: GraphClass,
    pub levels: Vec<LevelScore>,
}

impl GraphScore {
    pub fn level(&self, level: PerturbationLevel) -> Option<&LevelScore> {
        self.levels.iter().find(|l| l.level == level)
    }

    /// Mean distance averaged over the scored perturbation levels.
    pub fn mean_d_euc(&self) -> f64 {
        self.levels.iter().map(|l| l.mean_d_euc).sum::<f64>() / self.levels.len() as f64
    }

    pub fn mean_tau(&self) -> f64 {
        self.levels.iter().map(|l| l.mean_tau).sum::<f64>() / self.levels.len() as f64
    }
}

pub type SweepResult = BTreeMap<CanonicalForm, GraphScore>;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sample `k` for one (class, level) cell.
pub fn sample_seed(master_seed: u64, class: CanonicalForm, level: PerturbationLevel, k: u64) -> u64 {
    let mut h = splitmix(master_seed);
    h = splitmix(h ^ class.bits());
    h = splitmix(h ^ (class.n() as u64));
    h = splitmix(h ^ level.seed_tag());
    splitmix(h ^ k)
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let total = self.count + other.count;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / total as f64;
        self.m2 += other.m2 + d * d * (self.count as f64 * other.count as f64) / total as f64;
        self.count = total;
    }

    fn sd(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2.max(0.0) / (self.count - 1) as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct CellMoments {
    d: Moments,
    tau: Moments,
}

impl CellMoments {
    fn merge(&mut self, other: &CellMoments) {
        self.d.merge(&other.d);
        self.tau.merge(&other.tau);
    }
}

/// Per-class scratch state; the LLSM factorization depends only on the mask.
struct Sampler {
    n: usize,
    class: GraphClass,
    method: Method,
    solver: Option<LogLeastSquares>,
    a: Vec<f64>,
    logs: Vec<f64>,
    base: Vec<f64>,
    est: Vec<f64>,
}

impl Sampler {
    fn new(class: &GraphClass, method: Method) -> Result<Sampler> {
        let n = class.n;
        let solver = match method {
            Method::Llsm => Some(LogLeastSquares::new(&class.representative(), 0)?),
            Method::Crev => None,
        };
        Ok(Sampler {
            n,
            class: class.clone(),
            method,
            solver,
            a: vec![1.0; n * n],
            logs: vec![0.0; n * n],
            base: vec![0.0; n],
            est: vec![0.0; n],
        })
    }

    /// Fills `self.a` with a perturbed consistent matrix.
    fn draw(&mut self, rng: &mut ChaCha8Rng, halfwidth: f64) {
        let n = self.n;
        let w = &mut self.base;
        for x in w.iter_mut() {
            *x = rng.random_range(1.0..=9.0);
        }
        for i in 0..n {
            for j in 0..n {
                self.a[i * n + j] = w[i] / w[j];
            }
        }
        perturb_slice(n, &mut self.a, &mut |_, _| rng.random_range(-halfwidth..=halfwidth));
    }

    fn sample(&mut self, seed: u64, halfwidth: f64) -> Result<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.draw(&mut rng, halfwidth);
        let n = self.n;
        match self.method {
            Method::Llsm => {
                for (l, a) in self.logs.iter_mut().zip(&self.a) {
                    *l = a.ln();
                }
                for i in 0..n {
                    self.base[i] = self.logs[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64;
                }
                crate::pcm::exp_normalize(&mut self.base);
                let solver = self.solver.as_mut().expect("llsm sampler has a solver");
                solver.solve_logs(&self.logs, &mut self.est);
            }
            Method::Crev => {
                let (_, ev) = principal_eigenpair(&self.a, n, None)?;
                self.base.copy_from_slice(&ev);
                let full = Pcm::from_slice_unchecked(n, &self.a);
                let masked: IncompletePcm = full.restrict(&self.class.representative())?;
                let out = crev_completion(&masked)?;
                self.est.copy_from_slice(&out.weights);
            }
        }
        Ok((
            euclidean_distance(&self.est, &self.base)?,
            kendall_tau(&self.est, &self.base)?,
        ))
    }
}

/// One scheduled cell: a class at one perturbation level.
struct Cell {
    class: usize,
    level: PerturbationLevel,
}

/// Progress callback: `(finished work units, total work units)`.
pub type Progress<'a> = &'a (dyn Fn(usize, usize) + Sync);

/// A validated sweep ready to run.
pub struct Simulation {
    config: SimConfig,
    classes: Vec<GraphClass>,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Simulation> {
        let classes = config.target_classes()?;
        Ok(Simulation { config, classes })
    }

    pub fn classes(&self) -> &[GraphClass] {
        &self.classes
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn run(&self) -> Result<SweepResult> {
        self.run_with_progress(&|_, _| {})
    }

    pub fn run_with_progress(&self, progress: Progress<'_>) -> Result<SweepResult> {
        match self.config.workers {
            Some(k) => rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?
                .install(|| self.execute(progress)),
            None => self.execute(progress),
        }
    }

    fn execute(&self, progress: Progress<'_>) -> Result<SweepResult> {
        let cfg = &self.config;
        let cells: Vec<Cell> = (0..self.classes.len())
            .flat_map(|class| cfg.levels.iter().map(move |&level| Cell { class, level }))
            .collect();
        let chunks = cfg.n_samples.div_ceil(CHUNK);
        let units: Vec<(usize, u64)> = (0..cells.len())
            .flat_map(|c| (0..chunks).map(move |k| (c, k)))
            .collect();
        let total = units.len();
        let done = std::sync::atomic::AtomicUsize::new(0);
        let partial: Vec<CellMoments> = units
            .par_iter()
            .map_init(
                || None::<(usize, Sampler)>,
                |slot, &(c, k)| -> Result<CellMoments> {
                    let cell = &cells[c];
                    let class = &self.classes[cell.class];
                    if slot.as_ref().map(|s| s.0) != Some(cell.class) {
                        *slot = Some((cell.class, Sampler::new(class, cfg.method)?));
                    }
                    let sampler = &mut slot.as_mut().expect("sampler set above").1;
                    let h = cell.level.halfwidth();
                    let mut m = CellMoments::default();
                    let end = ((k + 1) * CHUNK).min(cfg.n_samples);
                    for s in k * CHUNK..end {
                        let seed = sample_seed(cfg.master_seed, class.canon, cell.level, s);
                        let (d, t) = sampler.sample(seed, h)?;
                        m.d.push(d);
                        m.tau.push(t);
                    }
                    let finished = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
                    progress(finished, total);
                    Ok(m)
                },
            )
            .collect::<Result<_>>()?;

        let mut out = SweepResult::new();
        for (c, cell) in cells.iter().enumerate() {
            let mut m = CellMoments::default();
            for p in &partial[c * chunks as usize..(c + 1) * chunks as usize] {
                m.merge(p);
            }
            let class = &self.classes[cell.class];
            out.entry(class.canon)
                .or_insert_with(|| GraphScore {
                    class: class.clone(),
                    levels: Vec::new(),
                })
                .levels
                .push(LevelScore {
                    level: cell.level,
                    mean_d_euc: m.d.mean,
                    sd_d_euc: m.d.sd(),
                    mean_tau: m.tau.mean,
                    sd_tau: m.tau.sd(),
                    n_samples: m.d.count,
                });
        }
        Ok(out)
    }
}

/// Scores every configured class.
pub fn run_level_sweep(config: &SimConfig) -> Result<SweepResult> {
    Simulation::new(config.clone())?.run()
}

/// Scores a single class under `config`'s levels, sample count, method and
/// seed.
pub fn run_cell(config: &SimConfig, class: &GraphClass) -> Result<GraphScore> {
    if !class.representative().is_connected() {
        return Err(crate::error::contract("cannot score a disconnected class"));
    }
    let cfg = SimConfig {
        e: None,
        classes: Some(vec![class.canon]),
        ..config.clone()
    };
    let mut result = run_level_sweep(&cfg)?;
    Ok(result.remove(&class.canon).expect("the only scored class"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::LabeledGraph;

    fn class_of(n: usize, edges: &[(usize, usize)]) -> GraphClass {
        classify(&LabeledGraph::from_edges(n, edges).unwrap()).unwrap()
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut merged = Moments::default();
        for chunk in xs.chunks(97) {
            let mut m = Moments::default();
            chunk.iter().for_each(|&x| m.push(x));
            merged.merge(&m);
        }
        assert_eq!(merged.count, 1000);
        assert!((merged.mean - whole.mean).abs() < 1e-12);
        assert!((merged.sd() - whole.sd()).abs() < 1e-12);
        let mean = xs.iter().sum::<f64>() / 1000.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 999.0;
        assert!((whole.sd() - var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn complete_class_is_exact() {
        let mut cfg = SimConfig::new(4, 500, 1);
        cfg.e = Some(6);
        let res = run_level_sweep(&cfg).unwrap();
        let s = res.values().next().unwrap();
        for l in &s.levels {
            assert!(l.mean_d_euc.abs() < 1e-12, "{}", l.mean_d_euc);
            assert_eq!(l.mean_tau, 1.0);
        }
    }

    #[test]
    fn single_sample_has_zero_sd() {
        let mut cfg = SimConfig::new(4, 1, 9);
        cfg.e = Some(3);
        for s in run_level_sweep(&cfg).unwrap().values() {
            for l in &s.levels {
                assert_eq!((l.sd_d_euc, l.sd_tau, l.n_samples), (0.0, 0.0, 1));
                assert!(l.mean_d_euc.is_finite());
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = SimConfig::new(5, 5000, 77);
        cfg.e = Some(5);
        cfg.workers = Some(1);
        let one = serde_json::to_string(&run_level_sweep(&cfg).unwrap()).unwrap();
        cfg.workers = Some(3);
        let three = serde_json::to_string(&run_level_sweep(&cfg).unwrap()).unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn run_cell_agrees_with_sweep() {
        let mut cfg = SimConfig::new(4, 3000, 5);
        cfg.e = Some(4);
        let sweep = run_level_sweep(&cfg).unwrap();
        let cycle = class_of(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]);
        let cell = run_cell(&cfg, &cycle).unwrap();
        assert_eq!(&cell, &sweep[&cycle.canon]);
    }

    #[test]
    fn crev_limited_to_small_n() {
        let mut cfg = SimConfig::new(6, 10, 0);
        cfg.method = Method::Crev;
        assert!(cfg.validate().is_err());
        cfg.allow_crev_large = true;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn config_validation() {
        let ok = SimConfig::new(4, 10, 0);
        assert!(ok.validate().is_ok());
        assert!(SimConfig { n_samples: 0, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { e: Some(2), ..ok.clone() }.validate().is_err());
        assert!(SimConfig { e: Some(7), ..ok.clone() }.validate().is_err());
        assert!(SimConfig { n: 9, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { levels: vec![], ..ok.clone() }.validate().is_err());
        assert!(SimConfig { workers: Some(0), ..ok.clone() }.validate().is_err());
        let star5 = class_of(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert!(SimConfig { classes: Some(vec![star5.canon]), ..ok.clone() }.validate().is_err());
    }

    #[test]
    fn config_json_is_flat_and_defaulted() {
        let cfg: SimConfig =
            serde_json::from_str(r#"{"n": 4, "e": 3, "n_samples": 10, "master_seed": 42}"#).unwrap();
        assert_eq!(cfg.levels, PerturbationLevel::STANDARD.to_vec());
        assert_eq!(cfg.method, Method::Llsm);
        assert_eq!(cfg.margin, MarginRule::default());
        let back: SimConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn crev_sampler_runs() {
        let mut cfg = SimConfig::new(4, 50, 3);
        cfg.e = Some(4);
        cfg.method = Method::Crev;
        let res = run_level_sweep(&cfg).unwrap();
        assert_eq!(res.len(), 2);
        for s in res.values() {
            for l in &s.levels {
                assert!(l.mean_d_euc > 0.0 && l.mean_d_euc < 0.5);
            }
        }
    }

    #[test]
    fn seeds_separate_cells() {
        let a = class_of(4, &[(0, 1), (0, 2), (0, 3)]);
        let b = class_of(4, &[(0, 1), (1, 2), (2, 3)]);
        let w = PerturbationLevel::Weak;
        assert_ne!(sample_seed(1, a.canon, w, 0), sample_seed(1, b.canon, w, 0));
        assert_ne!(sample_seed(1, a.canon, w, 0), sample_seed(1, a.canon, PerturbationLevel::Strong, 0));
        assert_ne!(sample_seed(1, a.canon, w, 0), sample_seed(1, a.canon, w, 1));
        assert_ne!(sample_seed(1, a.canon, w, 0), sample_seed(2, a.canon, w, 0));
    }
}
