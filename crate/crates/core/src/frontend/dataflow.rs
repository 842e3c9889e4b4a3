//! Reaching definitions over the ICFG, solved with a work list.
//!
//! Variables are resolved lexically to their declaring node, so locals of
//! different functions never alias; names with no visible declaration are
//! tracked by name. Only direct writes to a named variable define it
//! (`x = ..`, `x += ..`, `x++`, declarations, parameters); writes through
//! pointers or array elements do not.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::ast::{Ast, NodeId, NodeKind};
use super::icfg::{owned_expressions, ControlEdges, ControlKind};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKey {
    /// Declared by this `VarDecl` / `ParmVarDecl`.
    Decl(NodeId),
    /// No visible declaration.
    Free(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DataEdge {
    /// Defining statement (or the declaring node for parameters and globals).
    pub def: NodeId,
    /// `DeclRefExpr` that reads the variable.
    pub use_site: NodeId,
    pub var: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DataEdges {
    /// Sorted by (def, use_site, var).
    pub edges: Vec<DataEdge>,
}

impl DataEdges {
    pub fn pairs(&self) -> Vec<(NodeId, NodeId)> {
        self.edges.iter().map(|e| (e.def, e.use_site)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Definition {
    pub def: NodeId,
    pub var: VarKey,
    pub name: String,
}

/// A variable read at a flow node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Use {
    pub site: NodeId,
    pub var: VarKey,
    pub name: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FlowNode {
    /// AST node this flow node stands for.
    pub ast: NodeId,
    pub uses: Vec<Use>,
    /// Indices into [`FlowGraph::definitions`] generated here.
    pub gens: Vec<usize>,
    pub succs: Vec<usize>,
    pub preds: Vec<usize>,
}

impl FlowNode {
    pub fn defines(&self, graph: &FlowGraph, var: &VarKey) -> bool {
        self.gens.iter().any(|&d| &graph.definitions[d].var == var)
    }
}

/// ICFG lowered for dataflow: each function gets separate entry and exit
/// nodes, and a statement that calls a defined function is split into a
/// pre-call half (reads its operands, jumps to callees) and a post-call
/// half (receives returns, performs its writes).
#[derive(Clone, Debug, Default)]
pub struct FlowGraph {
    pub nodes: Vec<FlowNode>,
    pub definitions: Vec<Definition>,
}

pub fn resolve_variables(ast: &Ast) -> HashMap<NodeId, VarKey> {
    fn walk(
        ast: &Ast,
        id: NodeId,
        scopes: &mut Vec<HashMap<String, NodeId>>,
        out: &mut HashMap<NodeId, VarKey>,
    ) {
        let node = ast.node(id);
        let opens_scope = matches!(
            node.kind,
            NodeKind::FunctionDecl | NodeKind::CompoundStmt | NodeKind::ForStmt
        );
        // A function body shares the parameter scope.
        let body_of_function = node.kind == NodeKind::CompoundStmt
            && node
                .parent
                .is_some_and(|p| ast.kind(p) == NodeKind::FunctionDecl);
        let pushed = opens_scope && !body_of_function;
        if pushed {
            scopes.push(HashMap::new());
        }
        match node.kind {
            NodeKind::VarDecl | NodeKind::ParmVarDecl => {
                if let Some(name) = &node.text {
                    scopes
                        .last_mut()
                        .expect("scope stack never empty")
                        .insert(name.clone(), id);
                }
            }
            NodeKind::DeclRefExpr => {
                let name = node.text.clone().unwrap_or_default();
                let key = scopes
                    .iter()
                    .rev()
                    .find_map(|s| s.get(&name).copied())
                    .map_or(VarKey::Free(name), VarKey::Decl);
                out.insert(id, key);
            }
            _ => {}
        }
        for &c in &node.children {
            walk(ast, c, scopes, out);
        }
        if pushed {
            scopes.pop();
        }
    }
    let mut out = HashMap::new();
    let mut scopes = vec![HashMap::new()];
    walk(ast, ast.root(), &mut scopes, &mut out);
    out
}

#[derive(Default)]
struct Access {
    uses: Vec<Use>,
    defs: Vec<(VarKey, String)>,
}

fn collect_access(ast: &Ast, e: NodeId, vars: &HashMap<NodeId, VarKey>, acc: &mut Access) {
    let node = ast.node(e);
    let named = |id: NodeId| -> Option<(VarKey, String)> {
        (ast.kind(id) == NodeKind::DeclRefExpr)
            .then(|| (vars[&id].clone(), ast.text(id).unwrap_or_default().to_string()))
    };
    let read = |id: NodeId, acc: &mut Access| {
        let (var, name) = named(id).expect("caller checked DeclRefExpr");
        acc.uses.push(Use {
            site: id,
            var,
            name,
        });
    };
    match (node.kind, node.text.as_deref()) {
        (NodeKind::DeclRefExpr, _) => read(e, acc),
        (NodeKind::BinaryOperator, Some("=")) => {
            let (lhs, rhs) = (node.children[0], node.children[1]);
            collect_access(ast, rhs, vars, acc);
            match named(lhs) {
                Some(d) => acc.defs.push(d),
                None => collect_access(ast, lhs, vars, acc),
            }
        }
        (NodeKind::CompoundAssignOperator, _) => {
            let (lhs, rhs) = (node.children[0], node.children[1]);
            collect_access(ast, rhs, vars, acc);
            match named(lhs) {
                Some(d) => {
                    read(lhs, acc);
                    acc.defs.push(d);
                }
                None => collect_access(ast, lhs, vars, acc),
            }
        }
        (NodeKind::UnaryOperator, Some("++" | "--" | "post++" | "post--")) => {
            let operand = node.children[0];
            match named(operand) {
                Some(d) => {
                    read(operand, acc);
                    acc.defs.push(d);
                }
                None => collect_access(ast, operand, vars, acc),
            }
        }
        _ => {
            for &c in &node.children {
                collect_access(ast, c, vars, acc);
            }
        }
    }
}

impl FlowGraph {
    pub fn build(ast: &Ast, icfg: &ControlEdges) -> Self {
        let vars = resolve_variables(ast);
        let mut g = FlowGraph::default();
        let mut def_index: HashMap<(NodeId, VarKey), usize> = HashMap::new();
        let mut add_def = |g: &mut FlowGraph, def: NodeId, var: VarKey, name: String| -> usize {
            *def_index.entry((def, var.clone())).or_insert_with(|| {
                g.definitions.push(Definition { def, var, name });
                g.definitions.len() - 1
            })
        };

        let calls: BTreeSet<NodeId> = icfg
            .edges
            .iter()
            .filter(|e| e.kind == ControlKind::Call)
            .map(|e| e.src)
            .collect();

        // (pre, post) flow-node indices per AST statement / function.
        let mut halves: HashMap<NodeId, (usize, usize)> = HashMap::new();
        let new_node = |g: &mut FlowGraph, ast_id: NodeId| {
            g.nodes.push(FlowNode {
                ast: ast_id,
                ..FlowNode::default()
            });
            g.nodes.len() - 1
        };

        let main = icfg
            .functions
            .iter()
            .copied()
            .find(|&f| ast.text(f) == Some("main"));
        for &f in &icfg.functions {
            let entry = new_node(&mut g, f);
            let exit = new_node(&mut g, f);
            halves.insert(f, (entry, exit));
            let mut gens = Vec::new();
            for &p in ast.children(f) {
                if ast.kind(p) == NodeKind::ParmVarDecl {
                    if let Some(name) = ast.text(p) {
                        gens.push(add_def(&mut g, p, VarKey::Decl(p), name.to_string()));
                    }
                }
            }
            if Some(f) == main {
                for &d in ast.children(ast.root()) {
                    if ast.kind(d) == NodeKind::VarDecl {
                        if let Some(name) = ast.text(d) {
                            gens.push(add_def(&mut g, d, VarKey::Decl(d), name.to_string()));
                        }
                    }
                }
            }
            g.nodes[entry].gens = gens;
        }

        for &s in &icfg.statements {
            let pre = new_node(&mut g, s);
            let post = if calls.contains(&s) {
                new_node(&mut g, s)
            } else {
                pre
            };
            halves.insert(s, (pre, post));

            let mut acc = Access::default();
            if ast.kind(s) == NodeKind::DeclStmt {
                for &d in ast.children(s) {
                    if ast.kind(d) == NodeKind::VarDecl {
                        for &init in ast.children(d) {
                            collect_access(ast, init, &vars, &mut acc);
                        }
                        if let Some(name) = ast.text(d) {
                            acc.defs.push((VarKey::Decl(d), name.to_string()));
                        }
                    }
                }
            } else {
                for e in owned_expressions(ast, s) {
                    collect_access(ast, e, &vars, &mut acc);
                }
            }
            g.nodes[pre].uses = acc.uses;
            let mut gens: Vec<usize> = acc
                .defs
                .into_iter()
                .map(|(var, name)| add_def(&mut g, s, var, name))
                .collect();
            gens.sort_unstable();
            gens.dedup();
            g.nodes[post].gens = gens;
        }

        let is_function = |id: NodeId| ast.kind(id) == NodeKind::FunctionDecl;
        for e in &icfg.edges {
            let (from, to) = match e.kind {
                ControlKind::Call => (halves[&e.src].0, halves[&e.dst].0),
                ControlKind::Return => (halves[&e.src].1, halves[&e.dst].1),
                ControlKind::Flow | ControlKind::LoopBack => {
                    // Out of a FunctionDecl means entry; into one means exit.
                    let from = if is_function(e.src) {
                        halves[&e.src].0
                    } else {
                        halves[&e.src].1
                    };
                    let to = if is_function(e.dst) {
                        halves[&e.dst].1
                    } else {
                        halves[&e.dst].0
                    };
                    (from, to)
                }
            };
            g.nodes[from].succs.push(to);
            g.nodes[to].preds.push(from);
        }
        for n in &mut g.nodes {
            n.succs.sort_unstable();
            n.succs.dedup();
            n.preds.sort_unstable();
            n.preds.dedup();
        }
        g
    }

    /// Work-list fixpoint; returns the definitions reaching the entry of
    /// every flow node.
    pub fn reaching_in(&self) -> Vec<BTreeSet<usize>> {
        let n = self.nodes.len();
        let mut in_sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        let mut out_sets: Vec<BTreeSet<usize>> = self
            .nodes
            .iter()
            .map(|node| node.gens.iter().copied().collect())
            .collect();
        let mut queued = vec![true; n];
        let mut work: VecDeque<usize> = (0..n).collect();

        while let Some(i) = work.pop_front() {
            queued[i] = false;
            let node = &self.nodes[i];
            let incoming: BTreeSet<usize> = node
                .preds
                .iter()
                .flat_map(|&p| out_sets[p].iter().copied())
                .collect();
            let killed: BTreeSet<&VarKey> =
                node.gens.iter().map(|&d| &self.definitions[d].var).collect();
            let mut out: BTreeSet<usize> = incoming
                .iter()
                .copied()
                .filter(|&d| !killed.contains(&self.definitions[d].var))
                .collect();
            out.extend(node.gens.iter().copied());
            in_sets[i] = incoming;
            if out != out_sets[i] {
                out_sets[i] = out;
                for &s in &node.succs {
                    if !queued[s] {
                        queued[s] = true;
                        work.push_back(s);
                    }
                }
            }
        }
        in_sets
    }
}

/// Def-use edges: a definition is linked to every read of the same variable
/// that it reaches along the ICFG without being overwritten.
pub fn reaching_definitions(ast: &Ast, icfg: &ControlEdges) -> DataEdges {
    let graph = FlowGraph::build(ast, icfg);
    let reaching = graph.reaching_in();
    let mut edges = BTreeSet::new();
    for (node, in_set) in graph.nodes.iter().zip(&reaching) {
        for u in &node.uses {
            for &d in in_set {
                let def = &graph.definitions[d];
                if def.var == u.var {
                    edges.insert(DataEdge {
                        def: def.def,
                        use_site: u.site,
                        var: u.name.clone(),
                    });
                }
            }
        }
    }
    DataEdges {
        edges: edges.into_iter().collect(),
    }
}
