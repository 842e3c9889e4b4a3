use std::fmt::Write as _;

use serde::Serialize;

use super::EdgeMask;
use crate::graphio::{EdgeSet, ProgramGraph, TokenVocabulary};

/// Number of edges reported for a mask over `n` edges.
pub fn report_size(n: usize) -> usize {
    if n < 50 {
        5
    } else {
        n / 10
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankedEdge {
    pub rank: usize,
    pub edge_set: EdgeSet,
    pub src: u32,
    pub dst: u32,
    pub src_kind: String,
    pub dst_kind: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExplanationReport {
    pub graph_id: String,
    pub property: String,
    pub num_edges: usize,
    pub m: usize,
    /// Highest scores first; at most `m` entries.
    pub top: Vec<RankedEdge>,
}

/// Picks the `report_size(n)` highest-scoring edges; ties go to the earlier
/// edge.
pub fn top_m_edges(mask: &EdgeMask, g: &ProgramGraph, vocab: &TokenVocabulary) -> ExplanationReport {
    let n = mask.scores.len();
    let m = report_size(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| mask.scores[b].total_cmp(&mask.scores[a]).then(a.cmp(&b)));
    let kind = |node: u32| {
        vocab
            .name(g.node_kinds()[node as usize])
            .unwrap_or("?")
            .to_string()
    };
    let top = order
        .into_iter()
        .take(m)
        .enumerate()
        .map(|(r, i)| {
            let (set, pos) = mask.edges[i];
            let (src, dst) = g.edges(set)[pos];
            RankedEdge {
                rank: r + 1,
                edge_set: set,
                src,
                dst,
                src_kind: kind(src),
                dst_kind: kind(dst),
                score: mask.scores[i],
            }
        })
        .collect();
    ExplanationReport {
        graph_id: g.id.clone(),
        property: g.property.to_string(),
        num_edges: n,
        m,
        top,
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

impl ExplanationReport {
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        serde_json::to_string_pretty(&value).expect("report serializes")
    }

    /// Graphviz rendering of `g`; reported edges are bold and labelled with
    /// their rank and score.
    pub fn to_dot(&self, g: &ProgramGraph, vocab: &TokenVocabulary) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", escape(&g.id));
        let _ = writeln!(out, "  node [shape=box, fontname=\"monospace\"];");
        for (i, &k) in g.node_kinds().iter().enumerate() {
            let name = vocab.name(k).unwrap_or("?");
            let _ = writeln!(out, "  n{i} [label=\"{i}: {}\"];", escape(name));
        }
        for set in EdgeSet::ALL {
            let (style, color) = match set {
                EdgeSet::Ast => ("solid", "gray40"),
                EdgeSet::Icfg => ("dashed", "blue"),
                EdgeSet::Dfg => ("dotted", "darkgreen"),
            };
            for &(s, d) in g.edges(set) {
                let hit = self
                    .top
                    .iter()
                    .find(|e| e.edge_set == set && e.src == s && e.dst == d);
                match hit {
                    Some(e) => {
                        let _ = writeln!(
                            out,
                            "  n{s} -> n{d} [style=\"{style},bold\", color={color}, penwidth=3, label=\"#{} {:.3}\"];",
                            e.rank, e.score
                        );
                    }
                    None => {
                        let _ = writeln!(out, "  n{s} -> n{d} [style={style}, color={color}];");
                    }
                }
            }
        }
        out.push_str("}\n");
        out
    }
}
