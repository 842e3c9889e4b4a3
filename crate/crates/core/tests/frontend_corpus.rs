mod common;

use graves_core::frontend::{build_icfg, extract, parse, reaching_definitions, tokenize, NodeKind};
use graves_core::graphio::{EdgeSet, ProgramGraph, PropertyKind, TokenVocabulary};

#[test]
fn corpus_has_twenty_small_programs() {
    let corpus = common::corpus();
    assert_eq!(corpus.len(), 20);
    for (name, src) in &corpus {
        let ast = parse(&tokenize(src).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        let icfg = build_icfg(&ast);
        assert!(icfg.statements.len() <= 20, "{name}: {} statements", icfg.statements.len());
    }
}

#[test]
fn reaching_definitions_match_path_enumeration() {
    for (name, src) in common::corpus() {
        let ast = parse(&tokenize(&src).unwrap()).unwrap();
        let icfg = build_icfg(&ast);
        let got: std::collections::BTreeSet<_> = reaching_definitions(&ast, &icfg)
            .edges
            .into_iter()
            .map(|e| (e.def, e.use_site, e.var))
            .collect();
        let want = common::brute_force_reaching(&ast, &icfg);
        assert_eq!(got, want, "{name}");
    }
}

#[test]
fn graphs_are_well_formed_and_deterministic() {
    let vocab = TokenVocabulary::builtin();
    for (name, src) in common::corpus() {
        let a = extract(&src, &name, PropertyKind::ReachSafety, &vocab, None).unwrap();
        let b = extract(&src, &name, PropertyKind::ReachSafety, &vocab, None).unwrap();
        let g = &a.graph;
        assert_eq!(g.to_json(), b.graph.to_json(), "{name}");
        assert_eq!(g.edges(EdgeSet::Ast).len(), g.num_nodes() - 1, "{name}");
        assert_eq!(g.node_kinds()[0], vocab.get("TranslationUnit").unwrap());
        let back = ProgramGraph::from_json_checked(&g.to_json(), Some(vocab.len())).unwrap();
        assert_eq!(&back, g);
        for e in &a.dfg.edges {
            assert_eq!(a.ast.kind(e.use_site), NodeKind::DeclRefExpr, "{name}");
        }
    }
}

