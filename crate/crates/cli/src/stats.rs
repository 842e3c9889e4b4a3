use std::collections::BTreeMap;
use std::fmt::Write as _;

use graves_core::graphio::ProgramGraph;
use serde::Serialize;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GroupStats {
    pub count: usize,
    pub max_nodes: usize,
    pub mean_nodes: f64,
    pub max_edges: usize,
    pub mean_edges: f64,
}

/// Size statistics per property name.
pub fn corpus_stats(graphs: &[ProgramGraph]) -> BTreeMap<String, GroupStats> {
    let mut out: BTreeMap<String, GroupStats> = BTreeMap::new();
    for g in graphs {
        let s = out.entry(g.property.to_string()).or_default();
        s.count += 1;
        s.max_nodes = s.max_nodes.max(g.num_nodes());
        s.max_edges = s.max_edges.max(g.num_edges());
        s.mean_nodes += g.num_nodes() as f64;
        s.mean_edges += g.num_edges() as f64;
    }
    for s in out.values_mut() {
        s.mean_nodes /= s.count as f64;
        s.mean_edges /= s.count as f64;
    }
    out
}

pub fn render(stats: &BTreeMap<String, GroupStats>) -> String {
    let mut out = format!(
        "{:<14} {:>6} {:>10} {:>10} {:>10} {:>10}\n",
        "property", "count", "max nodes", "mean nodes", "max edges", "mean edges"
    );
    for (p, s) in stats {
        let _ = writeln!(
            out,
            "{:<14} {:>6} {:>10} {:>10.1} {:>10} {:>10.1}",
            p, s.count, s.max_nodes, s.mean_nodes, s.max_edges, s.mean_edges
        );
    }
    out
}
