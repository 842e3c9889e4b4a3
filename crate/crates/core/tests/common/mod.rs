//! Shared test helpers: the shipped corpus and a path-enumeration oracle for
//! reaching definitions.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::PathBuf;

use graves_core::frontend::{
    owned_expressions, resolve_variables, Ast, ControlEdges, ControlKind, NodeId, NodeKind, VarKey,
};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

/// (stem, source) for every corpus program, sorted by name.
pub fn corpus() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "c"))
        .map(|p| {
            let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
            (stem, std::fs::read_to_string(&p).expect("readable corpus file"))
        })
        .collect();
    out.sort();
    out
}

type State = (NodeId, bool);

struct Facts {
    /// Variable reads of a statement: (DeclRefExpr, variable, name).
    uses: HashMap<NodeId, Vec<(NodeId, VarKey, String)>>,
    /// Writes at a state: (defining node, variable, name). Parameters and
    /// globals are defined by their declaration at function entry.
    defs: HashMap<State, Vec<(NodeId, VarKey, String)>>,
}

fn is_function(ast: &Ast, n: NodeId) -> bool {
    ast.kind(n) == NodeKind::FunctionDecl
}

fn facts(ast: &Ast, icfg: &ControlEdges, calls: &HashSet<NodeId>) -> Facts {
    let vars = resolve_variables(ast);
    let mut f = Facts {
        uses: HashMap::new(),
        defs: HashMap::new(),
    };
    for &s in &icfg.statements {
        let mut uses = Vec::new();
        let mut defs = Vec::new();
        if ast.kind(s) == NodeKind::DeclStmt {
            for &d in ast.children(s) {
                if ast.kind(d) == NodeKind::VarDecl {
                    defs.push((s, VarKey::Decl(d), ast.text(d).unwrap().to_string()));
                }
            }
        }
        let mut stack = owned_expressions(ast, s);
        let mut assigned_only = HashSet::new();
        while let Some(e) = stack.pop() {
            let written = match (ast.kind(e), ast.text(e)) {
                (NodeKind::BinaryOperator, Some("=")) => {
                    let lhs = ast.children(e)[0];
                    if ast.kind(lhs) == NodeKind::DeclRefExpr {
                        assigned_only.insert(lhs);
                    }
                    Some(lhs)
                }
                (NodeKind::CompoundAssignOperator, _) => Some(ast.children(e)[0]),
                (NodeKind::UnaryOperator, Some("++" | "--" | "post++" | "post--")) => {
                    Some(ast.children(e)[0])
                }
                _ => None,
            };
            if let Some(w) = written.filter(|&w| ast.kind(w) == NodeKind::DeclRefExpr) {
                defs.push((s, vars[&w].clone(), ast.text(w).unwrap().to_string()));
            }
            if ast.kind(e) == NodeKind::DeclRefExpr && !assigned_only.contains(&e) {
                uses.push((e, vars[&e].clone(), ast.text(e).unwrap().to_string()));
            }
            stack.extend(ast.children(e).iter().copied());
        }
        f.uses.insert(s, uses);
        f.defs.insert((s, calls.contains(&s)), defs);
    }
    for &func in &icfg.functions {
        let mut defs: Vec<(NodeId, VarKey, String)> = ast
            .children(func)
            .iter()
            .filter(|&&p| ast.kind(p) == NodeKind::ParmVarDecl)
            .map(|&p| (p, VarKey::Decl(p), ast.text(p).unwrap().to_string()))
            .collect();
        if ast.text(func) == Some("main") {
            for &g in ast.children(ast.root()) {
                if ast.kind(g) == NodeKind::VarDecl {
                    defs.push((g, VarKey::Decl(g), ast.text(g).unwrap().to_string()));
                }
            }
        }
        f.defs.insert((func, false), defs);
    }
    f
}

/// Successor states. A function is `(f, false)` at entry and `(f, true)` at
/// exit; a call site is `(s, false)` before the call and `(s, true)` after.
fn successors(ast: &Ast, icfg: &ControlEdges, calls: &HashSet<NodeId>, (n, late): State) -> Vec<State> {
    let arrive = |d: NodeId| -> State { (d, is_function(ast, d)) };
    let out = icfg.edges.iter().filter(|e| e.src == n);
    let picked: Vec<State> = if is_function(ast, n) {
        if late {
            out.filter(|e| e.kind == ControlKind::Return).map(|e| (e.dst, true)).collect()
        } else {
            out.filter(|e| matches!(e.kind, ControlKind::Flow | ControlKind::LoopBack))
                .map(|e| arrive(e.dst))
                .collect()
        }
    } else if calls.contains(&n) && !late {
        out.filter(|e| e.kind == ControlKind::Call).map(|e| (e.dst, false)).collect()
    } else {
        out.filter(|e| matches!(e.kind, ControlKind::Flow | ControlKind::LoopBack))
            .map(|e| arrive(e.dst))
            .collect()
    };
    picked
}

/// Reaching definitions by exhaustive simple-path search: a definition
/// reaches a read iff some path from the defining state to the reading
/// statement passes no other write of the variable.
pub fn brute_force_reaching(ast: &Ast, icfg: &ControlEdges) -> BTreeSet<(NodeId, NodeId, String)> {
    let calls: HashSet<NodeId> = icfg
        .edges
        .iter()
        .filter(|e| e.kind == ControlKind::Call)
        .map(|e| e.src)
        .collect();
    let f = facts(ast, icfg, &calls);
    let mut found = BTreeSet::new();

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        ast: &Ast,
        icfg: &ControlEdges,
        calls: &HashSet<NodeId>,
        f: &Facts,
        state: State,
        var: &VarKey,
        on_path: &mut HashSet<State>,
        hits: &mut BTreeSet<NodeId>,
    ) {
        for next in successors(ast, icfg, calls, state) {
            if on_path.contains(&next) {
                continue;
            }
            let (n, late) = next;
            if !is_function(ast, n) && !late {
                for (site, v, _) in &f.uses[&n] {
                    if v == var {
                        hits.insert(*site);
                    }
                }
            }
            let kills = f
                .defs
                .get(&next)
                .is_some_and(|ds| ds.iter().any(|(_, v, _)| v == var));
            if kills {
                continue;
            }
            on_path.insert(next);
            dfs(ast, icfg, calls, f, next, var, on_path, hits);
            on_path.remove(&next);
        }
    }

    let mut states: Vec<_> = f.defs.iter().collect();
    states.sort_by_key(|(s, _)| **s);
    for (&state, defs) in states {
        for (def, var, name) in defs {
            let mut hits = BTreeSet::new();
            let mut on_path = HashSet::new();
            dfs(ast, icfg, &calls, &f, state, var, &mut on_path, &mut hits);
            for site in hits {
                found.insert((*def, site, name.clone()));
            }
        }
    }
    found
}
