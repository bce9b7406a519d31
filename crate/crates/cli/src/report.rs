//! Plain-text tables and CSV built from run artifacts.
//!
//! Metric columns use four decimals throughout so output is byte-stable for
//! a given artifact.

use std::collections::BTreeMap;
use std::fmt::Write;

use anyhow::{bail, Context, Result};
use fillin_core::graph::{CanonicalForm, Catalog, GraphClass};
use fillin_core::metagraph::{FillingSequence, SequenceKind};
use fillin_core::pcm::PerturbationLevel;
use fillin_core::sim::FiveNumberSummary;
use fillin_core::sim::GraphScore;
use fillin_core::store::RunArtifact;

fn flags(c: &GraphClass) -> String {
    let mut f = Vec::new();
    if c.is_tree {
        f.push("tree".to_string());
    }
    if c.is_star {
        f.push("star".into());
    }
    if c.is_cycle {
        f.push("cycle".into());
    }
    if c.is_bipartite {
        f.push("bipartite".into());
    }
    if let Some(k) = c.k_regular {
        f.push(format!("{k}-regular"));
    }
    if let Some(k) = c.k_quasi_regular {
        f.push(format!("{k}-quasi-regular"));
    }
    if f.is_empty() {
        "-".into()
    } else {
        f.join(",")
    }
}

fn degrees(c: &GraphClass) -> String {
    c.degree_sequence
        .iter()
        .rev()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join("")
}

/// Class table for `n` vertices, optionally one edge count only, followed
/// by a counts line.
pub fn enumerate(n: usize, e: Option<usize>) -> Result<String> {
    let catalog = Catalog::build(n)?;
    let mut out = String::new();
    let _ = writeln!(out, "{:>3}  {:<10}  {:<10}  flags", "e", "graph6", "degrees");
    let mut counts = Vec::new();
    for (&level, classes) in catalog.levels() {
        if e.is_some_and(|e| e != level) {
            continue;
        }
        for c in classes {
            let _ = writeln!(out, "{:>3}  {:<10}  {:<10}  {}", level, c.canon, degrees(c), flags(c));
        }
        counts.push((level, classes.len()));
    }
    if counts.is_empty() {
        bail!(
            "no connected graph on {n} vertices has {} edges",
            e.unwrap_or_default()
        );
    }
    let total: usize = counts.iter().map(|c| c.1).sum();
    let per_level = counts
        .iter()
        .map(|(e, k)| format!("e={e}: {k}"))
        .collect::<Vec<_>>()
        .join(", ");
    let _ = writeln!(out, "total {total} connected classes on n = {n} ({per_level})");
    Ok(out)
}

/// Optimum at `e`: the scored metagraph's choice when present, otherwise
/// the smallest mean distance over levels.
pub fn optimum(run: &RunArtifact, e: usize) -> Option<CanonicalForm> {
    if let Some(opt) = run.scored.as_ref().and_then(|s| s.optimal(e)) {
        return Some(opt);
    }
    run.scores
        .values()
        .filter(|s| s.class.e == e)
        .min_by(|a, b| a.mean_d_euc().total_cmp(&b.mean_d_euc()).then(a.class.canon.cmp(&b.class.canon)))
        .map(|s| s.class.canon)
}

fn is_near_optimal(run: &RunArtifact, c: CanonicalForm) -> bool {
    run.scored.as_ref().is_some_and(|s| s.is_near_optimal(c))
}

fn metric(v: f64) -> String {
    format!("{v:.4}")
}

/// Scores of every class with `e` edges, best mean distance first. `*`
/// marks the optimum and `~` near-optimal classes.
pub fn rank(run: &RunArtifact, e: usize) -> Result<String> {
    let mut rows: Vec<&GraphScore> = run.scores.values().filter(|s| s.class.e == e).collect();
    if rows.is_empty() {
        bail!("run has no scores at e = {e}");
    }
    rows.sort_by(|a, b| {
        a.mean_d_euc()
            .total_cmp(&b.mean_d_euc())
            .then(a.class.canon.cmp(&b.class.canon))
    });
    let levels: Vec<PerturbationLevel> = rows[0].levels.iter().map(|l| l.level).collect();
    let best = optimum(run, e);
    let mut out = String::new();
    let _ = write!(out, "   {:<10}  {:<22}", "graph6", "class");
    for l in &levels {
        let _ = write!(out, "  {:>8}  {:>8}", format!("d:{}", l.name()), format!("t:{}", l.name()));
    }
    let _ = writeln!(out, "  {:>8}  {:>8}", "d:mean", "t:mean");
    for s in rows {
        let mark = if Some(s.class.canon) == best {
            '*'
        } else if is_near_optimal(run, s.class.canon) {
            '~'
        } else {
            ' '
        };
        let _ = write!(out, "{mark}  {:<10}  {:<22}", s.class.canon, s.class.label());
        for l in &levels {
            let ls = s
                .level(*l)
                .with_context(|| format!("{} lacks level {}", s.class.canon, l.name()))?;
            let _ = write!(out, "  {:>8}  {:>8}", metric(ls.mean_d_euc), metric(ls.mean_tau));
        }
        let _ = writeln!(out, "  {:>8}  {:>8}", metric(s.mean_d_euc()), metric(s.mean_tau()));
    }
    let n_samples = run.scores.values().next().and_then(|s| s.levels.first()).map_or(0, |l| l.n_samples);
    let _ = writeln!(out, "n = {}, e = {e}, N = {n_samples}; * optimal, ~ near-optimal", run.config.n);
    Ok(out)
}

fn sequence_block(out: &mut String, seq: &FillingSequence, run: &RunArtifact) {
    let title = match seq.kind {
        SequenceKind::Main => "main sequence".to_string(),
        SequenceKind::Standalone => format!("standalone sequence, e = {}", seq.len()),
    };
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "  {:<6}{:<6}{:>3}  {:<24}prefix", "step", "pair", "e", "class");
    let groups = seq.groups();
    for (k, s) in seq.steps.iter().enumerate() {
        let mut label = (k + 1).to_string();
        if groups[s.group].len() > 1 {
            label.push('\'');
        }
        if s.edge_optimal == Some(false) {
            label.push('*');
        }
        let class = s
            .class
            .and_then(|c| run.scores.get(&c))
            .map_or("-".to_string(), |g| g.class.label());
        let status = if s.class.is_none() {
            "-"
        } else if s.optimal {
            "optimal"
        } else if s.near_optimal {
            "near-optimal"
        } else {
            "not optimal"
        };
        let _ = writeln!(out, "  {:<6}{:<6}{:>3}  {:<24}{status}", label, s.pair.to_string(), s.e, class);
    }
}

/// Numbered question lists. `'` marks steps that are interchangeable
/// within their group and `*` a step that does not join two optimal classes.
pub fn sequences(run: &RunArtifact) -> Result<String> {
    let seqs = run
        .sequences
        .as_ref()
        .context("run has no sequences; simulate a full sweep with 4 <= n <= 8")?;
    let mut out = String::new();
    for (k, seq) in seqs.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        sequence_block(&mut out, seq, run);
    }
    out.push_str("\n' interchangeable within the group; * step that does not join two optimal classes\n");
    Ok(out)
}

/// One CSV row per edge count and perturbation level for the optimal
/// class, plus the level average.
pub fn plot_csv(run: &RunArtifact) -> Result<String> {
    let mut by_e: BTreeMap<usize, CanonicalForm> = BTreeMap::new();
    for s in run.scores.values() {
        if let Some(opt) = optimum(run, s.class.e) {
            by_e.insert(s.class.e, opt);
        }
    }
    if by_e.is_empty() {
        bail!("run has no scores");
    }
    let mut out = String::from("n,e,level,graph6,class,mean_d_euc,mean_tau\n");
    for (e, c) in by_e {
        let s = &run.scores[&c];
        for l in &s.levels {
            let _ = writeln!(
                out,
                "{},{e},{},{},{},{},{}",
                run.config.n,
                l.level.name(),
                csv_field(&c.to_string()),
                csv_field(&s.class.label()),
                metric(l.mean_d_euc),
                metric(l.mean_tau)
            );
        }
        let _ = writeln!(
            out,
            "{},{e},mean,{},{},{},{}",
            run.config.n,
            csv_field(&c.to_string()),
            csv_field(&s.class.label()),
            metric(s.mean_d_euc()),
            metric(s.mean_tau())
        );
    }
    Ok(out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn calibration(n: usize, level: PerturbationLevel, matrices: usize, s: &FiveNumberSummary) -> String {
    format!(
        "CR of {matrices} perturbed matrices, n = {n}, level {}\n\
         {:>8}  {:>8}  {:>8}  {:>8}  {:>8}\n\
         {:>8}  {:>8}  {:>8}  {:>8}  {:>8}\n",
        level.name(),
        "min",
        "q1",
        "median",
        "q3",
        "max",
        metric(s.min),
        metric(s.lower_quartile),
        metric(s.median),
        metric(s.upper_quartile),
        metric(s.max),
    )
}
