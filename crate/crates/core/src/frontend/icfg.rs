//! Statement-level interprocedural control flow.
//!
//! Every statement in a function body is a flow node; `FunctionDecl` nodes
//! stand for function entry and exit. Loop and branch headers (`IfStmt`,
//! `WhileStmt`, `ForStmt`, `DoStmt`, `SwitchStmt`) are the points where
//! their condition is evaluated. Compound statements are transparent.

use std::collections::BTreeMap;

use serde::Serialize;

use super::ast::{Ast, NodeId, NodeKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlKind {
    /// Intra-procedural successor, including function entry and the edge
    /// from a function's exit points back to its `FunctionDecl`.
    Flow,
    /// Call site to the called function's definition.
    Call,
    /// Called function back to the call site.
    Return,
    /// Edge closing a loop iteration.
    LoopBack,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ControlEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: ControlKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ControlEdges {
    /// Sorted by (src, dst, kind). A pair can carry several tags, e.g. a
    /// recursive `return f(x);` is both a call into and a flow edge to `f`.
    pub edges: Vec<ControlEdge>,
    /// Statement-level nodes, in pre-order, excluding `FunctionDecl`s.
    pub statements: Vec<NodeId>,
    /// Function definitions (with a body), in source order.
    pub functions: Vec<NodeId>,
    /// Human-readable notes, e.g. unresolved callees.
    pub diagnostics: Vec<String>,
}

impl ControlEdges {
    /// Distinct (src, dst) pairs, sorted.
    pub fn pairs(&self) -> Vec<(NodeId, NodeId)> {
        let mut pairs: Vec<_> = self.edges.iter().map(|e| (e.src, e.dst)).collect();
        pairs.dedup();
        pairs
    }

    pub fn count(&self, kind: ControlKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }
}

#[derive(Clone, Copy, Debug)]
enum Dest {
    Node(NodeId),
    Exit,
}

/// Where control goes next, and whether getting there closes a loop.
#[derive(Clone, Copy, Debug)]
struct Target {
    dest: Dest,
    back: bool,
}

impl Target {
    fn node(id: NodeId) -> Self {
        Self {
            dest: Dest::Node(id),
            back: false,
        }
    }

    fn back_to(id: NodeId) -> Self {
        Self {
            dest: Dest::Node(id),
            back: true,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct LoopContext {
    brk: Option<Target>,
    cont: Option<Target>,
}

struct Builder<'a> {
    ast: &'a Ast,
    function: NodeId,
    edges: Vec<ControlEdge>,
    statements: Vec<NodeId>,
}

impl Builder<'_> {
    fn link(&mut self, src: NodeId, to: Target) {
        let (dst, kind) = match to.dest {
            Dest::Node(d) => (d, if to.back { ControlKind::LoopBack } else { ControlKind::Flow }),
            Dest::Exit => (self.function, ControlKind::Flow),
        };
        self.edges.push(ControlEdge { src, dst, kind });
    }

    fn seq(&mut self, stmts: &[NodeId], next: Target, ctx: LoopContext) -> Target {
        stmts
            .iter()
            .rev()
            .fold(next, |after, &s| self.stmt(s, after, ctx))
    }

    /// Emits the edges of `s` given its successor and returns its entry.
    fn stmt(&mut self, s: NodeId, next: Target, ctx: LoopContext) -> Target {
        let ast = self.ast;
        let kids = ast.children(s);
        if ast.kind(s) == NodeKind::CompoundStmt {
            return self.seq(kids, next, ctx);
        }
        self.statements.push(s);
        match ast.kind(s) {
            NodeKind::IfStmt => {
                let then_entry = self.stmt(kids[1], next, ctx);
                let else_entry = match kids.get(2) {
                    Some(&e) => self.stmt(e, next, ctx),
                    None => next,
                };
                self.link(s, then_entry);
                self.link(s, else_entry);
            }
            NodeKind::WhileStmt => {
                let inner = LoopContext {
                    brk: Some(next),
                    cont: Some(Target::back_to(s)),
                };
                let body = self.stmt(kids[1], Target::back_to(s), inner);
                self.link(s, body);
                self.link(s, next);
            }
            NodeKind::DoStmt => {
                let inner = LoopContext {
                    brk: Some(next),
                    cont: Some(Target::node(s)),
                };
                let body = self.stmt(kids[0], Target::node(s), inner);
                self.link(
                    s,
                    Target {
                        dest: body.dest,
                        back: true,
                    },
                );
                self.link(s, next);
                return body;
            }
            NodeKind::ForStmt => {
                let header = ast.node(s).for_header.unwrap_or_default();
                let mut parts = kids.iter().copied();
                let init = header.init.then(|| parts.next()).flatten();
                let _cond = header.cond.then(|| parts.next()).flatten();
                let inc = header.inc.then(|| parts.next()).flatten();
                let body = parts.next().expect("for statement has a body");

                let continue_to = match inc {
                    Some(i) => {
                        self.statements.push(i);
                        self.link(i, Target::back_to(s));
                        Target::node(i)
                    }
                    None => Target::back_to(s),
                };
                let inner = LoopContext {
                    brk: Some(next),
                    cont: Some(continue_to),
                };
                let body_entry = self.stmt(body, continue_to, inner);
                self.link(s, body_entry);
                if header.cond {
                    self.link(s, next);
                }
                if let Some(i) = init {
                    self.statements.push(i);
                    self.link(i, Target::node(s));
                    return Target::node(i);
                }
            }
            NodeKind::SwitchStmt => {
                let inner = LoopContext {
                    brk: Some(next),
                    cont: ctx.cont,
                };
                self.stmt(kids[1], next, inner);
                let mut labels = Vec::new();
                collect_case_labels(ast, kids[1], &mut labels);
                let has_default = labels.iter().any(|&l| ast.kind(l) == NodeKind::DefaultStmt);
                for l in labels {
                    self.link(s, Target::node(l));
                }
                if !has_default {
                    self.link(s, next);
                }
            }
            NodeKind::CaseStmt => {
                let sub = self.stmt(kids[1], next, ctx);
                self.link(s, sub);
            }
            NodeKind::DefaultStmt | NodeKind::LabelStmt => {
                let sub = self.stmt(kids[0], next, ctx);
                self.link(s, sub);
            }
            NodeKind::BreakStmt => {
                if let Some(t) = ctx.brk {
                    self.link(s, t);
                }
            }
            NodeKind::ContinueStmt => {
                if let Some(t) = ctx.cont {
                    self.link(s, t);
                }
            }
            NodeKind::ReturnStmt => self.link(
                s,
                Target {
                    dest: Dest::Exit,
                    back: false,
                },
            ),
            _ => self.link(s, next),
        }
        Target::node(s)
    }
}

fn collect_case_labels(ast: &Ast, id: NodeId, out: &mut Vec<NodeId>) {
    match ast.kind(id) {
        NodeKind::SwitchStmt => {}
        NodeKind::CaseStmt | NodeKind::DefaultStmt => {
            out.push(id);
            for &c in ast.children(id) {
                collect_case_labels(ast, c, out);
            }
        }
        _ => {
            for &c in ast.children(id) {
                collect_case_labels(ast, c, out);
            }
        }
    }
}

/// Expression subtrees evaluated at a statement-level node (its condition,
/// initializers or the expression itself), excluding nested statements.
pub fn owned_expressions(ast: &Ast, s: NodeId) -> Vec<NodeId> {
    let kids = ast.children(s);
    match ast.kind(s) {
        NodeKind::IfStmt | NodeKind::WhileStmt | NodeKind::SwitchStmt | NodeKind::CaseStmt => {
            vec![kids[0]]
        }
        NodeKind::DoStmt => vec![kids[1]],
        NodeKind::ForStmt => {
            let header = ast.node(s).for_header.unwrap_or_default();
            if header.cond {
                vec![kids[usize::from(header.init)]]
            } else {
                Vec::new()
            }
        }
        NodeKind::ReturnStmt => kids.to_vec(),
        NodeKind::DeclStmt => kids
            .iter()
            .filter(|&&d| ast.kind(d) == NodeKind::VarDecl)
            .flat_map(|&d| ast.children(d).iter().copied())
            .collect(),
        NodeKind::CompoundStmt
        | NodeKind::LabelStmt
        | NodeKind::DefaultStmt
        | NodeKind::BreakStmt
        | NodeKind::ContinueStmt
        | NodeKind::NullStmt => Vec::new(),
        _ => vec![s],
    }
}

/// Names of directly called functions inside the expression subtrees of `s`.
pub fn called_names(ast: &Ast, s: NodeId) -> Vec<(NodeId, String)> {
    let mut out = Vec::new();
    let mut stack: Vec<NodeId> = owned_expressions(ast, s);
    stack.reverse();
    while let Some(e) = stack.pop() {
        if ast.kind(e) == NodeKind::CallExpr {
            if let Some(name) = ast.text(e).filter(|t| !t.is_empty()) {
                out.push((e, name.to_string()));
            }
        }
        stack.extend(ast.children(e).iter().rev());
    }
    out
}

/// Builds the interprocedural control flow graph over statement nodes.
pub fn build_icfg(ast: &Ast) -> ControlEdges {
    let mut definitions: BTreeMap<&str, NodeId> = BTreeMap::new();
    for f in ast.functions() {
        if ast.function_body(f).is_some() {
            if let Some(name) = ast.text(f) {
                definitions.entry(name).or_insert(f);
            }
        }
    }

    let mut out = ControlEdges::default();
    for f in ast.functions() {
        let Some(body) = ast.function_body(f) else {
            continue;
        };
        out.functions.push(f);
        let mut b = Builder {
            ast,
            function: f,
            edges: Vec::new(),
            statements: Vec::new(),
        };
        let none = LoopContext {
            brk: None,
            cont: None,
        };
        let exit = Target {
            dest: Dest::Exit,
            back: false,
        };
        let entry = b.stmt(body, exit, none);
        b.link(f, entry);
        out.edges.extend(b.edges);
        out.statements.extend(b.statements);
    }
    out.statements.sort_unstable();
    out.statements.dedup();

    for &s in &out.statements {
        for (call, name) in called_names(ast, s) {
            match definitions.get(name.as_str()) {
                Some(&callee) => {
                    out.edges.push(ControlEdge {
                        src: s,
                        dst: callee,
                        kind: ControlKind::Call,
                    });
                    out.edges.push(ControlEdge {
                        src: callee,
                        dst: s,
                        kind: ControlKind::Return,
                    });
                }
                None => out
                    .diagnostics
                    .push(format!("node {call}: unresolved callee '{name}', no call edge")),
            }
        }
    }

    out.edges.sort_unstable();
    out.edges.dedup();
    out
}
