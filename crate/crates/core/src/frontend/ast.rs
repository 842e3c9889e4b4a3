use std::fmt;

pub type NodeId = usize;

macro_rules! node_kinds {
    ($($name:ident),* $(,)?) => {
        /// AST node kinds, named after the corresponding Clang node classes.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum NodeKind {
            $($name),*
        }

        impl NodeKind {
            pub const ALL: &'static [NodeKind] = &[$(NodeKind::$name),*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(NodeKind::$name => stringify!($name)),*
                }
            }
        }
    };
}

node_kinds!(
    TranslationUnit,
    FunctionDecl,
    ParmVarDecl,
    VarDecl,
    TypedefDecl,
    CompoundStmt,
    DeclStmt,
    IfStmt,
    WhileStmt,
    DoStmt,
    ForStmt,
    SwitchStmt,
    CaseStmt,
    DefaultStmt,
    BreakStmt,
    ContinueStmt,
    ReturnStmt,
    LabelStmt,
    NullStmt,
    CallExpr,
    DeclRefExpr,
    IntegerLiteral,
    FloatingLiteral,
    CharacterLiteral,
    StringLiteral,
    BinaryOperator,
    CompoundAssignOperator,
    UnaryOperator,
    ConditionalOperator,
    ArraySubscriptExpr,
    CStyleCastExpr,
    UnaryExprOrTypeTraitExpr,
    InitListExpr,
);

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which optional parts of a `for` header are present. The present parts
/// appear as the leading children of the `ForStmt`, in order, before the body.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ForHeader {
    pub init: bool,
    pub cond: bool,
    pub inc: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AstNode {
    pub kind: NodeKind,
    /// Source lexeme: identifier, literal spelling, operator, callee name.
    pub text: Option<String>,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    pub for_header: Option<ForHeader>,
}

/// Abstract syntax tree stored as a pre-order arena; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ast {
    nodes: Vec<AstNode>,
}

/// Owned tree produced by the parser before numbering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Syntax {
    pub kind: NodeKind,
    pub text: Option<String>,
    pub children: Vec<Syntax>,
    pub for_header: Option<ForHeader>,
}

impl Syntax {
    pub fn new(kind: NodeKind) -> Self {
        Self {
            kind,
            text: None,
            children: Vec::new(),
            for_header: None,
        }
    }

    pub fn with_text(kind: NodeKind, text: impl Into<String>) -> Self {
        Self {
            text: Some(text.into()),
            ..Self::new(kind)
        }
    }

    pub fn child(mut self, c: Syntax) -> Self {
        self.children.push(c);
        self
    }
}

impl Ast {
    pub(crate) fn from_syntax(root: Syntax) -> Self {
        fn visit(s: Syntax, parent: Option<NodeId>, nodes: &mut Vec<AstNode>) -> NodeId {
            let id = nodes.len();
            nodes.push(AstNode {
                kind: s.kind,
                text: s.text,
                children: Vec::with_capacity(s.children.len()),
                parent,
                for_header: s.for_header,
            });
            for c in s.children {
                let cid = visit(c, Some(id), nodes);
                nodes[id].children.push(cid);
            }
            id
        }
        let mut nodes = Vec::new();
        visit(root, None, &mut nodes);
        Self { nodes }
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &AstNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[AstNode] {
        &self.nodes
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id].kind
    }

    pub fn text(&self, id: NodeId) -> Option<&str> {
        self.nodes[id].text.as_deref()
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    /// Parent-to-child edges in pre-order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.nodes
            .iter()
            .enumerate()
            .flat_map(|(p, n)| n.children.iter().map(move |&c| (p, c)))
            .collect()
    }

    /// All `FunctionDecl` nodes, in source order.
    pub fn functions(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.children(self.root())
            .iter()
            .copied()
            .filter(|&id| self.kind(id) == NodeKind::FunctionDecl)
    }

    /// The body of a function definition, `None` for a prototype.
    pub fn function_body(&self, func: NodeId) -> Option<NodeId> {
        self.children(func)
            .last()
            .copied()
            .filter(|&c| self.kind(c) == NodeKind::CompoundStmt)
    }

    /// Pretty indented dump, one node per line; handy in diagnostics and tests.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![(self.root(), 0usize)];
        while let Some((id, depth)) = stack.pop() {
            let n = &self.nodes[id];
            out.push_str(&"  ".repeat(depth));
            out.push_str(n.kind.as_str());
            if let Some(t) = &n.text {
                out.push('(');
                out.push_str(t);
                out.push(')');
            }
            out.push('\n');
            for &c in n.children.iter().rev() {
                stack.push((c, depth + 1));
            }
        }
        out
    }
}
