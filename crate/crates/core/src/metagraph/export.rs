use std::fmt::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ScoredMetaGraph;
use crate::error::{domain, Error, Result};
use crate::graph::CanonicalForm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Dot,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            other => Err(domain(format!("unknown export format {other:?}"))),
        }
    }
}

const OPTIMAL_FILL: &str = "palegreen";
const NEAR_FILL: &str = "darkseagreen1";
const OPTIMAL_EDGE: &str = "forestgreen";

pub fn export(scored: &ScoredMetaGraph, format: ExportFormat) -> Result<String> {
    match format {
        ExportFormat::Json => Ok(serde_json::to_string_pretty(scored)? + "\n"),
        ExportFormat::Dot => Ok(to_dot(scored)),
    }
}

fn node_id(c: &CanonicalForm, index: usize) -> String {
    format!("e{}_{}", c.edge_count(), index)
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn to_dot(scored: &ScoredMetaGraph) -> String {
    let meta = &scored.meta;
    let mut ids = std::collections::BTreeMap::new();
    let mut out = String::new();
    let _ = writeln!(out, "graph metagraph_n{} {{", meta.n);
    out.push_str("  rankdir=TB;\n  node [shape=box, style=filled, fillcolor=white, fontname=\"Helvetica\"];\n");
    for (e, classes) in &meta.levels {
        let _ = writeln!(out, "  subgraph level_{e} {{\n    rank=same;");
        for (i, c) in classes.iter().enumerate() {
            let id = node_id(&c.canon, i);
            let fill = if scored.is_optimal(c.canon) {
                OPTIMAL_FILL
            } else if scored.is_near_optimal(c.canon) {
                NEAR_FILL
            } else {
                "white"
            };
            let mut label = format!("{}\\n{}", c.label(), escape(&c.canon.to_string()));
            if let Some(s) = scored.scores.get(&c.canon) {
                let _ = write!(label, "\\nd={:.4} tau={:.4}", s.mean_d_euc(), s.mean_tau());
            }
            let _ = writeln!(out, "    {id} [label=\"{label}\", fillcolor={fill}];");
            ids.insert(c.canon, id);
        }
        out.push_str("  }\n");
    }
    for (lo, hi) in &meta.meta_edges {
        let style = if scored.is_optimal(*lo) && scored.is_optimal(*hi) {
            format!(" [color={OPTIMAL_EDGE}, penwidth=2]")
        } else {
            String::new()
        };
        let _ = writeln!(out, "  {} -- {}{style};", ids[lo], ids[hi]);
    }
    out.push_str("}\n");
    out
}
