//! Generated graphs with a planted structural signal, for overfit and
//! explainer checks.
//!
//! Every program runs a few `while` loops. Half of the graphs keep the edges
//! that close each loop iteration; the other half have them removed, so the
//! two classes differ in those edges alone. The first pseudo-verifier wins
//! exactly when the loop-back edges are present.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::frontend::{extract, ControlKind, FrontendError};
use crate::graphio::{EdgeSet, LabeledInstance, PropertyKind, TokenVocabulary};

pub const LOOPS_PER_PROGRAM: usize = 3;

pub const PSEUDO_VERIFIERS: [&str; 3] = ["loop-prover", "generalist", "straight-liner"];

#[derive(Clone, Debug)]
pub struct PlantedInstance {
    pub instance: LabeledInstance,
    pub source: String,
    pub loops_back: bool,
    /// Positions in the graph's ICFG edge list of the loop-closing edges.
    pub planted_edges: Vec<usize>,
}

fn filler(rng: &mut impl Rng, vars: &[&str]) -> String {
    let v = vars[rng.random_range(0..vars.len())];
    let w = vars[rng.random_range(0..vars.len())];
    let c = rng.random_range(1..9);
    match rng.random_range(0..4) {
        0 => format!("{v} = {v} + {c};"),
        1 => format!("{v} = {w} * {c};"),
        2 => format!("if ({v} > {c}) {w} = {w} - 1;"),
        _ => format!("{v} = {w} - {v};"),
    }
}

/// C source of one random program with [`LOOPS_PER_PROGRAM`] `while` loops.
pub fn planted_program(rng: &mut impl Rng) -> String {
    let vars = ["a", "b", "c"];
    let mut lines = vec!["int main() {".to_string()];
    for v in vars {
        lines.push(format!("  int {v} = {};", rng.random_range(0..5)));
    }
    for _ in 0..LOOPS_PER_PROGRAM {
        for _ in 0..rng.random_range(0..3) {
            lines.push(format!("  {}", filler(rng, &vars)));
        }
        lines.push(format!("  while (a < {}) {{", rng.random_range(5..40)));
        lines.push("    a = a + 1;".into());
        for _ in 0..rng.random_range(0..2) {
            lines.push(format!("    {}", filler(rng, &vars)));
        }
        lines.push(format!("    if (b > {}) break;", rng.random_range(2..20)));
        lines.push("    b = b + a;".into());
        lines.push("  }".into());
    }
    lines.push("  return 0;".into());
    lines.push("}".into());
    lines.join("\n") + "\n"
}

/// `count` instances; even indices keep their loop-back edge.
pub fn planted_dataset(
    count: usize,
    seed: u64,
    vocab: &TokenVocabulary,
) -> Result<Vec<PlantedInstance>, FrontendError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let source = planted_program(&mut rng);
            let id = format!("planted-{seed}-{i:03}");
            let ex = extract(&source, &id, PropertyKind::ReachSafety, vocab, None)?;
            let tagged = |src, dst, kind| {
                ex.icfg
                    .edges
                    .iter()
                    .any(|e| e.src == src && e.dst == dst && e.kind == kind)
            };
            let back: Vec<usize> = ex
                .graph
                .edges(EdgeSet::Icfg)
                .iter()
                .enumerate()
                .filter(|(_, &(s, d))| {
                    let (s, d) = (s as usize, d as usize);
                    tagged(s, d, ControlKind::LoopBack) && !tagged(s, d, ControlKind::Flow)
                })
                .map(|(p, _)| p)
                .collect();
            let loops_back = i % 2 == 0;
            let (graph, planted_edges) = if loops_back {
                (ex.graph, back)
            } else {
                let removed: Vec<_> = back.iter().map(|&p| (EdgeSet::Icfg, p)).collect();
                (ex.graph.without_edges(&removed), Vec::new())
            };
            let labels = if loops_back {
                vec![1.0, 0.5, 0.0]
            } else {
                vec![0.0, 0.5, 1.0]
            };
            let solved = labels.iter().map(|&l| l == 1.0).collect();
            Ok(PlantedInstance {
                instance: LabeledInstance {
                    graph,
                    labels,
                    solved,
                },
                source,
                loops_back,
                planted_edges,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classes_differ_by_the_loop_back_edge_only() {
        let vocab = TokenVocabulary::builtin();
        let data = planted_dataset(12, 7, &vocab).unwrap();
        for d in &data {
            let ex = extract(&d.source, "x", PropertyKind::ReachSafety, &vocab, None).unwrap();
            let full = &ex.graph;
            let g = &d.instance.graph;
            assert_eq!(g.node_kinds(), full.node_kinds());
            assert_eq!(g.edges(EdgeSet::Ast), full.edges(EdgeSet::Ast));
            assert_eq!(g.edges(EdgeSet::Dfg), full.edges(EdgeSet::Dfg));
            let missing = full.num_edges() - g.num_edges();
            let loops = d.source.matches("while").count();
            if d.loops_back {
                assert_eq!(missing, 0);
                assert_eq!(d.planted_edges.len(), loops, "{}", d.source);
                for &p in &d.planted_edges {
                    let (src, dst) = g.edges(EdgeSet::Icfg)[p];
                    assert!(src > dst);
                    assert_eq!(vocab.name(g.node_kinds()[dst as usize]), Some("WhileStmt"));
                }
            } else {
                assert_eq!(missing, loops);
            }
        }
    }
}
