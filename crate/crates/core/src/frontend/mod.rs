//! C-subset frontend: tokens, AST, interprocedural control flow, reaching
//! definitions, and assembly into a [`ProgramGraph`].

mod ast;
mod dataflow;
mod icfg;
mod lexer;
mod parser;

pub use ast::{Ast, AstNode, ForHeader, NodeId, NodeKind};
pub use dataflow::{
    reaching_definitions, resolve_variables, DataEdge, DataEdges, Definition, FlowGraph, FlowNode,
    Use, VarKey,
};
pub use icfg::{build_icfg, called_names, owned_expressions, ControlEdge, ControlEdges, ControlKind};
pub use lexer::{tokenize, Position, Token, TokenKind};
pub use parser::parse;

use thiserror::Error;

use crate::graphio::{Edge, ProgramGraph, PropertyKind, TokenVocabulary};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrontendError {
    #[error("{line}:{column}: lex error: {message}")]
    Lex {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: parse error: expected {expected}, found {found}")]
    Parse {
        line: usize,
        column: usize,
        expected: String,
        found: String,
    },
    #[error("{line}:{column}: unsupported construct: {construct}")]
    Unsupported {
        construct: String,
        line: usize,
        column: usize,
    },
    #[error("graph has {nodes} nodes, above the cap of {cap}")]
    GraphTooLarge { nodes: usize, cap: usize },
}

/// Node kind index for every AST node, refined by lexeme where the
/// vocabulary has an entry for it.
pub fn node_kind_indices(ast: &Ast, vocab: &TokenVocabulary) -> Vec<u32> {
    ast.nodes()
        .iter()
        .map(|n| vocab.lookup(n.kind.as_str(), n.text.as_deref()))
        .collect()
}

fn to_edges(pairs: Vec<(NodeId, NodeId)>) -> Vec<Edge> {
    let mut edges: Vec<Edge> = pairs
        .into_iter()
        .map(|(s, d)| (s as u32, d as u32))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
}

pub fn assemble_graph(
    ast: &Ast,
    icfg: &ControlEdges,
    dfg: &DataEdges,
    vocab: &TokenVocabulary,
    id: &str,
    property: PropertyKind,
    max_nodes: Option<usize>,
) -> Result<ProgramGraph, FrontendError> {
    if let Some(cap) = max_nodes {
        if ast.len() > cap {
            return Err(FrontendError::GraphTooLarge {
                nodes: ast.len(),
                cap,
            });
        }
    }
    let edges = [
        to_edges(ast.edges()),
        to_edges(icfg.pairs()),
        to_edges(dfg.pairs()),
    ];
    Ok(
        ProgramGraph::new(id, property, node_kind_indices(ast, vocab), edges, Some(vocab.len()))
            .expect("frontend edges reference existing nodes"),
    )
}

/// Everything produced for one source file.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub ast: Ast,
    pub icfg: ControlEdges,
    pub dfg: DataEdges,
    pub graph: ProgramGraph,
}

impl Extraction {
    pub fn diagnostics(&self) -> &[String] {
        &self.icfg.diagnostics
    }
}

pub fn extract(
    source: &str,
    id: &str,
    property: PropertyKind,
    vocab: &TokenVocabulary,
    max_nodes: Option<usize>,
) -> Result<Extraction, FrontendError> {
    let ast = parse(&tokenize(source)?)?;
    let icfg = build_icfg(&ast);
    let dfg = reaching_definitions(&ast, &icfg);
    let graph = assemble_graph(&ast, &icfg, &dfg, vocab, id, property, max_nodes)?;
    Ok(Extraction {
        ast,
        icfg,
        dfg,
        graph,
    })
}
