//! Recursive-descent parser for the supported C subset.
//!
//! Parentheses, semicolons, braces and type spellings are not materialized;
//! they only shape the tree. Direct calls keep the callee name on the
//! `CallExpr` node instead of a callee child, so a call with no arguments is
//! a leaf.

use std::collections::HashSet;

use super::ast::{Ast, ForHeader, NodeKind, Syntax};
use super::lexer::{Position, Token, TokenKind};
use super::FrontendError;

pub fn parse(tokens: &[Token]) -> Result<Ast, FrontendError> {
    let mut p = Parser {
        tokens,
        at: 0,
        typedefs: HashSet::new(),
    };
    let root = p.translation_unit()?;
    Ok(Ast::from_syntax(root))
}

const TYPE_KEYWORDS: &[&str] = &[
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned", "_Bool",
];
const QUALIFIERS: &[&str] = &[
    "const", "volatile", "static", "extern", "register", "auto", "inline", "restrict", "typedef",
];

const ASSIGN_OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="];

/// Binary operator precedence levels, loosest first.
const BINARY_LEVELS: &[&[&str]] = &[
    &["||"],
    &["&&"],
    &["|"],
    &["^"],
    &["&"],
    &["==", "!="],
    &["<", ">", "<=", ">="],
    &["<<", ">>"],
    &["+", "-"],
    &["*", "/", "%"],
];

struct Specifiers {
    is_typedef: bool,
}

struct Declarator {
    name: Option<String>,
    /// Present when this declares a function; holds the parameter nodes.
    params: Option<Vec<Syntax>>,
}

struct Parser<'t> {
    tokens: &'t [Token],
    at: usize,
    typedefs: HashSet<String>,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.at).map(|t| &t.kind)
    }

    fn peek_at(&self, k: usize) -> Option<&TokenKind> {
        self.tokens.get(self.at + k).map(|t| &t.kind)
    }

    fn pos(&self) -> Position {
        self.tokens
            .get(self.at)
            .or_else(|| self.tokens.last())
            .map_or(Position { line: 1, column: 1 }, |t| t.pos)
    }

    fn advance(&mut self) -> Option<&'t Token> {
        let t = self.tokens.get(self.at);
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(TokenKind::Punct(q)) if *q == p)
    }

    fn is_op(&self, o: &str) -> bool {
        matches!(self.peek(), Some(TokenKind::Op(q)) if *q == o)
    }

    fn is_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Some(TokenKind::Keyword(q)) if *q == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        let hit = self.is_punct(p);
        if hit {
            self.at += 1;
        }
        hit
    }

    fn eat_op(&mut self, o: &str) -> bool {
        let hit = self.is_op(o);
        if hit {
            self.at += 1;
        }
        hit
    }

    fn eat_keyword(&mut self, k: &str) -> bool {
        let hit = self.is_keyword(k);
        if hit {
            self.at += 1;
        }
        hit
    }

    fn error(&self, expected: impl Into<String>) -> FrontendError {
        let pos = self.pos();
        FrontendError::Parse {
            line: pos.line,
            column: pos.column,
            expected: expected.into(),
            found: self
                .peek()
                .map_or_else(|| "end of input".to_string(), |k| k.to_string()),
        }
    }

    fn unsupported(&self, construct: &str) -> FrontendError {
        let pos = self.pos();
        FrontendError::Unsupported {
            construct: construct.to_string(),
            line: pos.line,
            column: pos.column,
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), FrontendError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error(format!("'{p}'")))
        }
    }

    fn expect_op(&mut self, o: &str) -> Result<(), FrontendError> {
        if self.eat_op(o) {
            Ok(())
        } else {
            Err(self.error(format!("'{o}'")))
        }
    }

    fn ident(&mut self) -> Result<String, FrontendError> {
        match self.peek() {
            Some(TokenKind::Ident(name)) => {
                let name = name.clone();
                self.at += 1;
                Ok(name)
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn starts_declaration(&self) -> bool {
        self.starts_type_at(0)
    }

    fn starts_type_at(&self, k: usize) -> bool {
        match self.peek_at(k) {
            Some(TokenKind::Keyword(kw)) => {
                TYPE_KEYWORDS.contains(kw)
                    || QUALIFIERS.contains(kw)
                    || matches!(*kw, "struct" | "union" | "enum")
            }
            Some(TokenKind::Ident(name)) => self.typedefs.contains(name),
            _ => false,
        }
    }

    fn translation_unit(&mut self) -> Result<Syntax, FrontendError> {
        let mut unit = Syntax::new(NodeKind::TranslationUnit);
        while self.peek().is_some() {
            if self.eat_punct(";") {
                continue;
            }
            self.external_declaration(&mut unit.children)?;
        }
        Ok(unit)
    }

    fn external_declaration(&mut self, out: &mut Vec<Syntax>) -> Result<(), FrontendError> {
        if !self.starts_declaration() {
            if self.is_keyword("goto") {
                return Err(self.unsupported("goto"));
            }
            return Err(self.error("declaration"));
        }
        let specs = self.specifiers()?;
        if self.eat_punct(";") {
            return Ok(());
        }
        let first = self.declarator()?;
        if let (Some(params), true) = (&first.params, self.is_punct("{")) {
            if specs.is_typedef {
                return Err(self.error("';'"));
            }
            let name = first.name.clone().ok_or_else(|| self.error("function name"))?;
            let mut func = Syntax::with_text(NodeKind::FunctionDecl, name);
            func.children.extend(params.iter().cloned());
            func.children.push(self.compound()?);
            out.push(func);
            return Ok(());
        }
        self.finish_declaration(&specs, first, out)
    }

    /// Declarator list after the first declarator, through the closing `;`.
    fn finish_declaration(
        &mut self,
        specs: &Specifiers,
        first: Declarator,
        out: &mut Vec<Syntax>,
    ) -> Result<(), FrontendError> {
        let mut decl = first;
        loop {
            let name = decl.name.clone().ok_or_else(|| self.error("identifier"))?;
            let node = if specs.is_typedef {
                self.typedefs.insert(name.clone());
                Syntax::with_text(NodeKind::TypedefDecl, name)
            } else if let Some(params) = decl.params {
                let mut f = Syntax::with_text(NodeKind::FunctionDecl, name);
                f.children = params;
                f
            } else {
                let mut v = Syntax::with_text(NodeKind::VarDecl, name);
                if self.eat_op("=") {
                    v.children.push(self.initializer()?);
                }
                v
            };
            out.push(node);
            if self.eat_punct(",") {
                decl = self.declarator()?;
                continue;
            }
            self.expect_punct(";")?;
            return Ok(());
        }
    }

    fn initializer(&mut self) -> Result<Syntax, FrontendError> {
        if self.eat_punct("{") {
            let mut list = Syntax::new(NodeKind::InitListExpr);
            while !self.is_punct("}") {
                list.children.push(self.initializer()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct("}")?;
            Ok(list)
        } else {
            self.assignment()
        }
    }

    fn specifiers(&mut self) -> Result<Specifiers, FrontendError> {
        let mut is_typedef = false;
        let mut seen_type = false;
        let mut any = false;
        loop {
            match self.peek() {
                Some(TokenKind::Keyword(kw)) if matches!(*kw, "struct" | "union" | "enum") => {
                    return Err(self.unsupported(kw));
                }
                Some(TokenKind::Keyword(kw)) if TYPE_KEYWORDS.contains(kw) => {
                    seen_type = true;
                }
                Some(TokenKind::Keyword(kw)) if QUALIFIERS.contains(kw) => {
                    if *kw == "typedef" {
                        is_typedef = true;
                    }
                }
                Some(TokenKind::Ident(name)) if !seen_type && self.typedefs.contains(name) => {
                    seen_type = true;
                }
                _ => break,
            }
            any = true;
            self.at += 1;
        }
        if !any {
            return Err(self.error("type specifier"));
        }
        Ok(Specifiers { is_typedef })
    }

    fn declarator(&mut self) -> Result<Declarator, FrontendError> {
        while self.eat_op("*") {
            while self.eat_keyword("const") || self.eat_keyword("volatile") || self.eat_keyword("restrict") {}
        }
        let name = match self.peek() {
            Some(TokenKind::Ident(_)) => Some(self.ident()?),
            Some(TokenKind::Punct("(")) if matches!(self.peek_at(1), Some(TokenKind::Op("*"))) => {
                return Err(self.unsupported("function pointer declarator"));
            }
            _ => None,
        };
        let mut params = None;
        loop {
            if self.eat_punct("[") {
                if !self.is_punct("]") {
                    self.assignment()?;
                }
                self.expect_punct("]")?;
            } else if self.is_punct("(") && params.is_none() {
                self.at += 1;
                params = Some(self.parameters()?);
            } else {
                break;
            }
        }
        Ok(Declarator { name, params })
    }

    fn parameters(&mut self) -> Result<Vec<Syntax>, FrontendError> {
        let mut params = Vec::new();
        if self.eat_punct(")") {
            return Ok(params);
        }
        if self.is_keyword("void") && matches!(self.peek_at(1), Some(TokenKind::Punct(")"))) {
            self.at += 2;
            return Ok(params);
        }
        loop {
            if self.eat_op("...") {
                self.expect_punct(")")?;
                return Ok(params);
            }
            self.specifiers()?;
            let d = self.declarator()?;
            if d.params.is_some() {
                return Err(self.unsupported("function-typed parameter"));
            }
            let node = match d.name {
                Some(n) => Syntax::with_text(NodeKind::ParmVarDecl, n),
                None => Syntax::new(NodeKind::ParmVarDecl),
            };
            params.push(node);
            if self.eat_punct(",") {
                continue;
            }
            self.expect_punct(")")?;
            return Ok(params);
        }
    }

    fn compound(&mut self) -> Result<Syntax, FrontendError> {
        self.expect_punct("{")?;
        let mut block = Syntax::new(NodeKind::CompoundStmt);
        while !self.is_punct("}") {
            if self.peek().is_none() {
                return Err(self.error("'}'"));
            }
            block.children.push(self.statement()?);
        }
        self.at += 1;
        Ok(block)
    }

    fn local_declaration(&mut self) -> Result<Syntax, FrontendError> {
        let specs = self.specifiers()?;
        let mut stmt = Syntax::new(NodeKind::DeclStmt);
        if self.eat_punct(";") {
            return Ok(stmt);
        }
        let first = self.declarator()?;
        self.finish_declaration(&specs, first, &mut stmt.children)?;
        Ok(stmt)
    }

    fn statement(&mut self) -> Result<Syntax, FrontendError> {
        match self.peek() {
            Some(TokenKind::Punct("{")) => self.compound(),
            Some(TokenKind::Punct(";")) => {
                self.at += 1;
                Ok(Syntax::new(NodeKind::NullStmt))
            }
            Some(TokenKind::Keyword(kw)) => match *kw {
                "if" => self.if_statement(),
                "while" => {
                    self.at += 1;
                    let cond = self.paren_expression()?;
                    let body = self.statement()?;
                    Ok(Syntax::new(NodeKind::WhileStmt).child(cond).child(body))
                }
                "do" => {
                    self.at += 1;
                    let body = self.statement()?;
                    if !self.eat_keyword("while") {
                        return Err(self.error("'while'"));
                    }
                    let cond = self.paren_expression()?;
                    self.expect_punct(";")?;
                    Ok(Syntax::new(NodeKind::DoStmt).child(body).child(cond))
                }
                "for" => self.for_statement(),
                "switch" => {
                    self.at += 1;
                    let cond = self.paren_expression()?;
                    let body = self.statement()?;
                    Ok(Syntax::new(NodeKind::SwitchStmt).child(cond).child(body))
                }
                "case" => {
                    self.at += 1;
                    let value = self.conditional()?;
                    self.expect_op(":")?;
                    let sub = self.statement()?;
                    Ok(Syntax::new(NodeKind::CaseStmt).child(value).child(sub))
                }
                "default" => {
                    self.at += 1;
                    self.expect_op(":")?;
                    let sub = self.statement()?;
                    Ok(Syntax::new(NodeKind::DefaultStmt).child(sub))
                }
                "break" => {
                    self.at += 1;
                    self.expect_punct(";")?;
                    Ok(Syntax::new(NodeKind::BreakStmt))
                }
                "continue" => {
                    self.at += 1;
                    self.expect_punct(";")?;
                    Ok(Syntax::new(NodeKind::ContinueStmt))
                }
                "return" => {
                    self.at += 1;
                    let mut ret = Syntax::new(NodeKind::ReturnStmt);
                    if !self.is_punct(";") {
                        ret.children.push(self.expression()?);
                    }
                    self.expect_punct(";")?;
                    Ok(ret)
                }
                "goto" => Err(self.unsupported("goto")),
                _ if self.starts_declaration() => self.local_declaration(),
                _ => self.expression_statement(),
            },
            Some(TokenKind::Ident(name))
                if matches!(self.peek_at(1), Some(TokenKind::Op(":"))) =>
            {
                let label = name.clone();
                self.at += 2;
                let sub = self.statement()?;
                Ok(Syntax::with_text(NodeKind::LabelStmt, label).child(sub))
            }
            _ if self.starts_declaration() => self.local_declaration(),
            _ => self.expression_statement(),
        }
    }

    fn expression_statement(&mut self) -> Result<Syntax, FrontendError> {
        let e = self.expression()?;
        self.expect_punct(";")?;
        Ok(e)
    }

    fn paren_expression(&mut self) -> Result<Syntax, FrontendError> {
        self.expect_punct("(")?;
        let e = self.expression()?;
        self.expect_punct(")")?;
        Ok(e)
    }

    fn if_statement(&mut self) -> Result<Syntax, FrontendError> {
        self.at += 1;
        let cond = self.paren_expression()?;
        let then = self.statement()?;
        let mut node = Syntax::new(NodeKind::IfStmt).child(cond).child(then);
        if self.eat_keyword("else") {
            node.children.push(self.statement()?);
        }
        Ok(node)
    }

    fn for_statement(&mut self) -> Result<Syntax, FrontendError> {
        self.at += 1;
        self.expect_punct("(")?;
        let mut node = Syntax::new(NodeKind::ForStmt);
        let mut header = ForHeader::default();
        if self.starts_declaration() {
            node.children.push(self.local_declaration()?);
            header.init = true;
        } else if !self.eat_punct(";") {
            node.children.push(self.expression()?);
            self.expect_punct(";")?;
            header.init = true;
        }
        if !self.is_punct(";") {
            node.children.push(self.expression()?);
            header.cond = true;
        }
        self.expect_punct(";")?;
        if !self.is_punct(")") {
            node.children.push(self.expression()?);
            header.inc = true;
        }
        self.expect_punct(")")?;
        node.children.push(self.statement()?);
        node.for_header = Some(header);
        Ok(node)
    }

    fn expression(&mut self) -> Result<Syntax, FrontendError> {
        let mut lhs = self.assignment()?;
        while self.eat_punct(",") {
            let rhs = self.assignment()?;
            lhs = Syntax::with_text(NodeKind::BinaryOperator, ",").child(lhs).child(rhs);
        }
        Ok(lhs)
    }

    fn assignment(&mut self) -> Result<Syntax, FrontendError> {
        let lhs = self.conditional()?;
        if let Some(TokenKind::Op(op)) = self.peek() {
            if ASSIGN_OPS.contains(op) {
                let op = *op;
                self.at += 1;
                let rhs = self.assignment()?;
                let kind = if op == "=" {
                    NodeKind::BinaryOperator
                } else {
                    NodeKind::CompoundAssignOperator
                };
                return Ok(Syntax::with_text(kind, op).child(lhs).child(rhs));
            }
        }
        Ok(lhs)
    }

    fn conditional(&mut self) -> Result<Syntax, FrontendError> {
        let cond = self.binary(0)?;
        if self.eat_op("?") {
            let then = self.expression()?;
            self.expect_op(":")?;
            let otherwise = self.conditional()?;
            return Ok(Syntax::new(NodeKind::ConditionalOperator)
                .child(cond)
                .child(then)
                .child(otherwise));
        }
        Ok(cond)
    }

    fn binary(&mut self, level: usize) -> Result<Syntax, FrontendError> {
        if level == BINARY_LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Op(op)) if BINARY_LEVELS[level].contains(op) => *op,
                _ => return Ok(lhs),
            };
            self.at += 1;
            let rhs = self.binary(level + 1)?;
            lhs = Syntax::with_text(NodeKind::BinaryOperator, op).child(lhs).child(rhs);
        }
    }

    fn unary(&mut self) -> Result<Syntax, FrontendError> {
        match self.peek() {
            Some(TokenKind::Op(op)) if matches!(*op, "++" | "--") => {
                let op = *op;
                self.at += 1;
                let operand = self.unary()?;
                Ok(Syntax::with_text(NodeKind::UnaryOperator, op).child(operand))
            }
            Some(TokenKind::Op(op)) if matches!(*op, "&" | "*" | "-" | "+" | "!" | "~") => {
                let op = *op;
                self.at += 1;
                let operand = self.unary()?;
                Ok(Syntax::with_text(NodeKind::UnaryOperator, op).child(operand))
            }
            Some(TokenKind::Keyword("sizeof")) => {
                self.at += 1;
                let mut node = Syntax::with_text(NodeKind::UnaryExprOrTypeTraitExpr, "sizeof");
                if self.is_punct("(") && self.starts_type_at(1) {
                    self.at += 1;
                    self.type_name()?;
                    self.expect_punct(")")?;
                } else {
                    node.children.push(self.unary()?);
                }
                Ok(node)
            }
            Some(TokenKind::Punct("(")) if self.starts_type_at(1) => {
                self.at += 1;
                let spelled = self.type_name()?;
                self.expect_punct(")")?;
                let operand = self.unary()?;
                Ok(Syntax::with_text(NodeKind::CStyleCastExpr, spelled).child(operand))
            }
            _ => self.postfix(),
        }
    }

    /// Type name inside a cast or `sizeof`; returns its spelling.
    fn type_name(&mut self) -> Result<String, FrontendError> {
        let start = self.at;
        self.specifiers()?;
        let d = self.declarator()?;
        if d.name.is_some() {
            return Err(self.error("abstract declarator"));
        }
        Ok(self.tokens[start..self.at]
            .iter()
            .map(|t| match &t.kind {
                TokenKind::Keyword(k) => k.to_string(),
                TokenKind::Ident(s) => s.clone(),
                TokenKind::Op(o) => o.to_string(),
                other => other.to_string(),
            })
            .collect::<Vec<_>>()
            .join(" "))
    }

    fn postfix(&mut self) -> Result<Syntax, FrontendError> {
        let mut e = self.primary()?;
        loop {
            if self.eat_punct("(") {
                let mut call = if e.kind == NodeKind::DeclRefExpr {
                    Syntax::with_text(NodeKind::CallExpr, e.text.take().unwrap_or_default())
                } else {
                    Syntax::new(NodeKind::CallExpr).child(e)
                };
                if !self.eat_punct(")") {
                    loop {
                        call.children.push(self.assignment()?);
                        if self.eat_punct(",") {
                            continue;
                        }
                        self.expect_punct(")")?;
                        break;
                    }
                }
                e = call;
            } else if self.eat_punct("[") {
                let index = self.expression()?;
                self.expect_punct("]")?;
                e = Syntax::new(NodeKind::ArraySubscriptExpr).child(e).child(index);
            } else if self.is_op(".") || self.is_op("->") {
                return Err(self.unsupported("member access"));
            } else if self.is_op("++") || self.is_op("--") {
                let op = if self.is_op("++") { "post++" } else { "post--" };
                self.at += 1;
                e = Syntax::with_text(NodeKind::UnaryOperator, op).child(e);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> Result<Syntax, FrontendError> {
        let Some(tok) = self.tokens.get(self.at) else {
            return Err(self.error("expression"));
        };
        let node = match &tok.kind {
            TokenKind::Ident(name) => Syntax::with_text(NodeKind::DeclRefExpr, name.clone()),
            TokenKind::IntLit(s) => Syntax::with_text(NodeKind::IntegerLiteral, s.clone()),
            TokenKind::FloatLit(s) => Syntax::with_text(NodeKind::FloatingLiteral, s.clone()),
            TokenKind::CharLit(s) => Syntax::with_text(NodeKind::CharacterLiteral, s.clone()),
            TokenKind::StrLit(s) => {
                let mut text = s.clone();
                self.advance();
                while let Some(TokenKind::StrLit(more)) = self.peek() {
                    text.push_str(more);
                    self.at += 1;
                }
                return Ok(Syntax::with_text(NodeKind::StringLiteral, text));
            }
            TokenKind::Punct("(") => {
                self.advance();
                let inner = self.expression()?;
                self.expect_punct(")")?;
                return Ok(inner);
            }
            TokenKind::Keyword("goto") => return Err(self.unsupported("goto")),
            _ => return Err(self.error("expression")),
        };
        self.advance();
        Ok(node)
    }
}
