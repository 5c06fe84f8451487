//! AST arena and the recursive-descent parser for the supported Java subset.
//!
//! The parser accepts a single method declaration: optional modifiers, a
//! return type, a name, a parameter list, and a block body. Statements cover
//! local variable declarations, assignments, expression statements, `return`,
//! `if`/`else`, `while`, classic `for`, and nested blocks. Expressions cover
//! literals, identifiers, field access, method invocation, `new` with
//! arguments, the binary operators `+ - * / % == != < > <= >= && ||`, unary
//! `!` and `-`, and parentheses. Anything else is reported as an
//! unsupported-construct error that names the construct.

use thiserror::Error;

use super::lexer::{lex, LexError, TokKind, Token};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("unsupported construct `{construct}` at line {line}, column {col}")]
    Unsupported {
        construct: String,
        line: usize,
        col: usize,
    },
    #[error("expected {expected} at line {line}, column {col}, found {found}")]
    Expected {
        expected: String,
        found: String,
        line: usize,
        col: usize,
    },
    #[error("unexpected end of input, expected {expected}")]
    Eof { expected: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

/// Terminal payload: the lexeme as written plus its token position, which
/// fixes the source order used when pairing terminals into paths.
#[derive(Debug, Clone)]
pub struct Terminal {
    pub lexeme: String,
    pub pos: usize,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: &'static str,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub terminal: Option<Terminal>,
}

#[derive(Debug, Clone)]
pub struct Ast {
    nodes: Vec<Node>,
    root: NodeId,
}

impl Ast {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Terminal node ids in source order.
    pub fn terminals(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = (0..self.nodes.len())
            .map(NodeId)
            .filter(|id| self.nodes[id.0].terminal.is_some())
            .collect();
        ids.sort_by_key(|id| self.nodes[id.0].terminal.as_ref().unwrap().pos);
        ids
    }

    /// Index of `child` within its parent's child list, if it has a parent.
    pub fn child_index(&self, child: NodeId) -> Option<usize> {
        let parent = self.node(child).parent?;
        self.node(parent).children.iter().position(|&c| c == child)
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    nodes: Vec<Node>,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.pos + offset)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eof<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::Eof {
            expected: expected.to_string(),
        })
    }

    fn expected<T>(&self, expected: &str) -> Result<T, ParseError> {
        match self.peek() {
            Some(t) => Err(ParseError::Expected {
                expected: expected.to_string(),
                found: format!("{:?}", t.text),
                line: t.line,
                col: t.col,
            }),
            None => self.eof(expected),
        }
    }

    fn unsupported<T>(&self, construct: &str, tok: &Token) -> Result<T, ParseError> {
        Err(ParseError::Unsupported {
            construct: construct.to_string(),
            line: tok.line,
            col: tok.col,
        })
    }

    fn is_punct(&self, text: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokKind::Punct && t.text == text)
    }

    fn is_op(&self, text: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokKind::Op && t.text == text)
    }

    fn eat_punct(&mut self, text: &str) -> Result<Token, ParseError> {
        if self.is_punct(text) {
            Ok(self.bump().unwrap())
        } else {
            self.expected(&format!("`{text}`"))
        }
    }

    fn node(&mut self, kind: &'static str) -> NodeId {
        self.nodes.push(Node {
            kind,
            parent: None,
            children: Vec::new(),
            terminal: None,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn terminal(&mut self, kind: &'static str, tok: &Token, pos: usize) -> NodeId {
        self.nodes.push(Node {
            kind,
            parent: None,
            children: Vec::new(),
            terminal: Some(Terminal {
                lexeme: tok.text.clone(),
                pos,
            }),
        });
        NodeId(self.nodes.len() - 1)
    }

    fn attach(&mut self, parent: NodeId, child: NodeId) {
        self.nodes[child.0].parent = Some(parent);
        self.nodes[parent.0].children.push(child);
    }

    // ---- grammar ----

    fn parse_method(&mut self) -> Result<NodeId, ParseError> {
        let method = self.node("MethodDecl");
        while matches!(self.peek(), Some(t) if t.kind == TokKind::Modifier) {
            let pos = self.pos;
            let tok = self.bump().unwrap();
            let m = self.terminal("Modifier", &tok, pos);
            self.attach(method, m);
        }
        if matches!(self.peek(), Some(t) if t.kind == TokKind::Op && t.text == "@") {
            let tok = self.peek().unwrap().clone();
            return self.unsupported("annotation", &tok);
        }
        let ty = self.parse_type()?;
        self.attach(method, ty);
        let name_tok = match self.peek() {
            Some(t) if t.kind == TokKind::Ident => self.bump().unwrap(),
            Some(t) if t.kind == TokKind::Punct && t.text == "(" => {
                // looked like `Name(` — a constructor, which has no return type
                let t = t.clone();
                return self.unsupported("constructor", &t);
            }
            _ => return self.expected("method name"),
        };
        let name = self.terminal("Ident", &name_tok, self.pos - 1);
        self.attach(method, name);
        let params = self.parse_params()?;
        self.attach(method, params);
        if matches!(self.peek(), Some(t) if t.kind == TokKind::Keyword && t.text == "throws") {
            // `throws` clauses carry no body information; skip the name list
            self.bump();
            loop {
                match self.peek() {
                    Some(t) if t.kind == TokKind::Ident => {
                        self.bump();
                        while self.is_punct(".") {
                            self.bump();
                            match self.peek() {
                                Some(t) if t.kind == TokKind::Ident => {
                                    self.bump();
                                }
                                _ => return self.expected("exception name"),
                            }
                        }
                    }
                    _ => return self.expected("exception name"),
                }
                if self.is_punct(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        let body = self.parse_block()?;
        self.attach(method, body);
        if let Some(t) = self.peek() {
            let t = t.clone();
            return self.expected::<NodeId>("end of method").map_err(|_| {
                ParseError::Expected {
                    expected: "end of method".to_string(),
                    found: format!("{:?}", t.text),
                    line: t.line,
                    col: t.col,
                }
            });
        }
        Ok(method)
    }

    /// Parse a type: primitive or (possibly qualified) class name, with
    /// optional `[]` pairs. Qualified names are folded into one terminal
    /// lexeme; `[]` pairs wrap the base in ArrayType nodes.
    fn parse_type(&mut self) -> Result<NodeId, ParseError> {
        let base = match self.peek().cloned() {
            Some(t) if t.kind == TokKind::PrimType => {
                let pos = self.pos;
                self.bump();
                self.terminal("PrimType", &t, pos)
            }
            Some(t) if t.kind == TokKind::Ident => {
                let pos = self.pos;
                self.bump();
                let mut name = t.text.clone();
                while self.is_punct(".")
                    && matches!(self.peek_at(1), Some(n) if n.kind == TokKind::Ident)
                {
                    self.bump();
                    name.push('.');
                    name.push_str(&self.bump().unwrap().text);
                }
                if self.is_op("<") {
                    let lt = self.peek().unwrap().clone();
                    return self.unsupported("generics", &lt);
                }
                let mut tok = t;
                tok.text = name;
                self.terminal("TypeName", &tok, pos)
            }
            Some(t) => return self.expected("type").map_err(|_| ParseError::Expected {
                expected: "type".to_string(),
                found: format!("{:?}", t.text),
                line: t.line,
                col: t.col,
            }),
            None => return self.eof("type"),
        };
        if matches!(self.peek(), Some(t) if t.kind == TokKind::PrimType) {
            // `int` used as a name position would land here; treat as generic error
            return self.expected("identifier");
        }
        let mut ty = base;
        while self.is_punct("[") {
            self.bump();
            self.eat_punct("]")?;
            let arr = self.node("ArrayType");
            self.attach(arr, ty);
            ty = arr;
        }
        Ok(ty)
    }

    fn parse_params(&mut self) -> Result<NodeId, ParseError> {
        self.eat_punct("(")?;
        let list = self.node("ParamList");
        if self.is_punct(")") {
            self.bump();
            return Ok(list);
        }
        loop {
            let param = self.node("Param");
            if matches!(self.peek(), Some(t) if t.kind == TokKind::Modifier && t.text == "final") {
                let pos = self.pos;
                let tok = self.bump().unwrap();
                let m = self.terminal("Modifier", &tok, pos);
                self.attach(param, m);
            }
            let ty = self.parse_type()?;
            self.attach(param, ty);
            let name_tok = match self.peek() {
                Some(t) if t.kind == TokKind::Ident => self.bump().unwrap(),
                Some(t) if t.kind == TokKind::Punct && t.text == "." => {
                    let t = t.clone();
                    return self.unsupported("varargs", &t);
                }
                _ => return self.expected("parameter name"),
            };
            let name = self.terminal("Ident", &name_tok, self.pos - 1);
            self.attach(param, name);
            self.attach(list, param);
            if self.is_punct(",") {
                self.bump();
            } else {
                break;
            }
        }
        self.eat_punct(")")?;
        Ok(list)
    }

    fn parse_block(&mut self) -> Result<NodeId, ParseError> {
        self.eat_punct("{")?;
        let block = self.node("Block");
        while !self.is_punct("}") {
            if self.peek().is_none() {
                return self.eof("`}`");
            }
            let stmt = self.parse_statement()?;
            self.attach(block, stmt);
        }
        self.bump();
        Ok(block)
    }

    fn parse_statement(&mut self) -> Result<NodeId, ParseError> {
        let tok = match self.peek().cloned() {
            Some(t) => t,
            None => return self.eof("statement"),
        };
        match tok.kind {
            TokKind::Punct if tok.text == "{" => self.parse_block(),
            TokKind::Punct if tok.text == ";" => {
                // stray empty statement: attach nothing, model as empty block
                self.bump();
                Ok(self.node("Block"))
            }
            TokKind::Keyword => match tok.text.as_str() {
                "return" => {
                    let pos = self.pos;
                    self.bump();
                    let ret = self.node("Return");
                    let kw = self.terminal("Kw", &tok, pos);
                    self.attach(ret, kw);
                    if !self.is_punct(";") {
                        let value = self.parse_expr()?;
                        self.attach(ret, value);
                    }
                    self.eat_punct(";")?;
                    Ok(ret)
                }
                "if" => {
                    let pos = self.pos;
                    self.bump();
                    let node = self.node("If");
                    let kw = self.terminal("Kw", &tok, pos);
                    self.attach(node, kw);
                    self.eat_punct("(")?;
                    let cond = self.parse_expr()?;
                    self.attach(node, cond);
                    self.eat_punct(")")?;
                    let then = self.parse_statement()?;
                    self.attach(node, then);
                    if matches!(self.peek(), Some(t) if t.kind == TokKind::Keyword && t.text == "else")
                    {
                        self.bump();
                        let alt = self.parse_statement()?;
                        self.attach(node, alt);
                    }
                    Ok(node)
                }
                "while" => {
                    let pos = self.pos;
                    self.bump();
                    let node = self.node("While");
                    let kw = self.terminal("Kw", &tok, pos);
                    self.attach(node, kw);
                    self.eat_punct("(")?;
                    let cond = self.parse_expr()?;
                    self.attach(node, cond);
                    self.eat_punct(")")?;
                    let body = self.parse_statement()?;
                    self.attach(node, body);
                    Ok(node)
                }
                "for" => {
                    let pos = self.pos;
                    self.bump();
                    let node = self.node("For");
                    let kw = self.terminal("Kw", &tok, pos);
                    self.attach(node, kw);
                    self.eat_punct("(")?;
                    if self.is_punct(":") {
                        return self.unsupported("enhanced for", &tok);
                    }
                    if !self.is_punct(";") {
                        let init = self.parse_for_init()?;
                        self.attach(node, init);
                    }
                    self.eat_punct(";")?;
                    if !self.is_punct(";") {
                        let cond = self.parse_expr()?;
                        self.attach(node, cond);
                    }
                    self.eat_punct(";")?;
                    if !self.is_punct(")") {
                        let update = self.parse_simple_statement_no_semi()?;
                        self.attach(node, update);
                    }
                    self.eat_punct(")")?;
                    let body = self.parse_statement()?;
                    self.attach(node, body);
                    Ok(node)
                }
                other @ ("switch" | "do" | "break" | "continue" | "try" | "throw" | "this"
                | "super" | "assert" | "class" | "interface" | "enum" | "import" | "package") => {
                    self.unsupported(other, &tok)
                }
                other => self.unsupported(other, &tok),
            },
            TokKind::Modifier => self.unsupported("local modifier", &tok),
            TokKind::PrimType => {
                let decl = self.parse_var_decl()?;
                self.eat_punct(";")?;
                Ok(decl)
            }
            _ => {
                if self.looks_like_generic_decl() {
                    return self.unsupported("generics", &tok);
                }
                if self.looks_like_decl() {
                    let decl = self.parse_var_decl()?;
                    self.eat_punct(";")?;
                    Ok(decl)
                } else {
                    let stmt = self.parse_simple_statement_no_semi()?;
                    self.eat_punct(";")?;
                    Ok(stmt)
                }
            }
        }
    }

    /// Token-level lookahead: does the upcoming run read as
    /// `Name(.Name)* ([])* Ident` — i.e. a class-typed declaration?
    fn looks_like_decl(&self) -> bool {
        let mut k = 0;
        match self.peek_at(k) {
            Some(t) if t.kind == TokKind::Ident => k += 1,
            _ => return false,
        }
        loop {
            match (self.peek_at(k), self.peek_at(k + 1)) {
                (Some(dot), Some(name))
                    if dot.kind == TokKind::Punct
                        && dot.text == "."
                        && name.kind == TokKind::Ident =>
                {
                    k += 2;
                }
                _ => break,
            }
        }
        loop {
            match (self.peek_at(k), self.peek_at(k + 1)) {
                (Some(open), Some(close))
                    if open.kind == TokKind::Punct
                        && open.text == "["
                        && close.kind == TokKind::Punct
                        && close.text == "]" =>
                {
                    k += 2;
                }
                _ => break,
            }
        }
        matches!(self.peek_at(k), Some(t) if t.kind == TokKind::Ident)
    }

    /// Lookahead for `Name<...> ident` — a generic-typed declaration, which
    /// the subset rejects by name. Angle brackets are balanced over a short
    /// window; `>>` closes two levels.
    fn looks_like_generic_decl(&self) -> bool {
        let mut k = 0;
        match self.peek_at(k) {
            Some(t) if t.kind == TokKind::Ident => k += 1,
            _ => return false,
        }
        while let (Some(dot), Some(name)) = (self.peek_at(k), self.peek_at(k + 1)) {
            if dot.kind == TokKind::Punct && dot.text == "." && name.kind == TokKind::Ident {
                k += 2;
            } else {
                break;
            }
        }
        if !matches!(self.peek_at(k), Some(t) if t.kind == TokKind::Op && t.text == "<") {
            return false;
        }
        let mut depth = 0i32;
        for step in 0..16 {
            let Some(t) = self.peek_at(k + step) else {
                return false;
            };
            match (t.kind, t.text.as_str()) {
                (TokKind::Op, "<") => depth += 1,
                (TokKind::Op, ">") => depth -= 1,
                (TokKind::Op, ">>") => depth -= 2,
                (TokKind::Ident, _) | (TokKind::PrimType, _) => {}
                (TokKind::Punct, "," | ".") => {}
                (TokKind::Punct, "[" | "]") => {}
                _ => return false,
            }
            if depth == 0 && step > 0 {
                return matches!(
                    self.peek_at(k + step + 1),
                    Some(n) if n.kind == TokKind::Ident
                );
            }
        }
        false
    }

    fn parse_for_init(&mut self) -> Result<NodeId, ParseError> {
        if matches!(self.peek(), Some(t) if t.kind == TokKind::PrimType) || self.looks_like_decl()
        {
            self.parse_var_decl()
        } else {
            self.parse_simple_statement_no_semi()
        }
    }

    fn parse_var_decl(&mut self) -> Result<NodeId, ParseError> {
        let decl = self.node("VarDecl");
        let ty = self.parse_type()?;
        self.attach(decl, ty);
        let name_tok = match self.peek() {
            Some(t) if t.kind == TokKind::Ident => self.bump().unwrap(),
            _ => return self.expected("variable name"),
        };
        let name = self.terminal("Ident", &name_tok, self.pos - 1);
        self.attach(decl, name);
        if self.is_op("=") {
            self.bump();
            let init = self.parse_expr()?;
            self.attach(decl, init);
        }
        if self.is_punct(",") {
            let t = self.peek().unwrap().clone();
            return self.unsupported("multiple declarators", &t);
        }
        Ok(decl)
    }

    /// Assignment or expression statement, without the trailing `;`
    /// (shared by plain statements and `for` init/update slots).
    fn parse_simple_statement_no_semi(&mut self) -> Result<NodeId, ParseError> {
        let expr = self.parse_expr()?;
        if self.is_op("=") {
            self.bump();
            match self.nodes[expr.0].kind {
                "Ident" | "FieldAccess" => {}
                _ => {
                    return self.expected("assignable target before `=`");
                }
            }
            let assign = self.node("Assign");
            self.attach(assign, expr);
            let value = self.parse_expr()?;
            self.attach(assign, value);
            Ok(assign)
        } else {
            let stmt = self.node("ExprStmt");
            self.attach(stmt, expr);
            Ok(stmt)
        }
    }

    // expression precedence ladder

    fn parse_expr(&mut self) -> Result<NodeId, ParseError> {
        self.parse_or()
    }

    fn binary_level(
        &mut self,
        ops: &[(&str, &'static str)],
        next: fn(&mut Self) -> Result<NodeId, ParseError>,
    ) -> Result<NodeId, ParseError> {
        let mut lhs = next(self)?;
        loop {
            let Some(tok) = self.peek() else { break };
            if tok.kind != TokKind::Op {
                break;
            }
            let Some(&(_, kind)) = ops.iter().find(|(text, _)| *text == tok.text) else {
                break;
            };
            self.bump();
            let rhs = next(self)?;
            let node = self.node(kind);
            self.attach(node, lhs);
            self.attach(node, rhs);
            lhs = node;
        }
        Ok(lhs)
    }

    fn parse_or(&mut self) -> Result<NodeId, ParseError> {
        self.binary_level(&[("||", "Or")], Self::parse_and)
    }

    fn parse_and(&mut self) -> Result<NodeId, ParseError> {
        self.binary_level(&[("&&", "And")], Self::parse_equality)
    }

    fn parse_equality(&mut self) -> Result<NodeId, ParseError> {
        self.binary_level(&[("==", "Eq"), ("!=", "Ne")], Self::parse_relational)
    }

    fn parse_relational(&mut self) -> Result<NodeId, ParseError> {
        self.binary_level(
            &[("<", "Lt"), (">", "Gt"), ("<=", "Le"), (">=", "Ge")],
            Self::parse_additive,
        )
    }

    fn parse_additive(&mut self) -> Result<NodeId, ParseError> {
        self.binary_level(&[("+", "Add"), ("-", "Sub")], Self::parse_multiplicative)
    }

    fn parse_multiplicative(&mut self) -> Result<NodeId, ParseError> {
        self.binary_level(&[("*", "Mul"), ("/", "Div"), ("%", "Mod")], Self::parse_unary)
    }

    fn parse_unary(&mut self) -> Result<NodeId, ParseError> {
        match self.peek().cloned() {
            Some(t) if t.kind == TokKind::Op && t.text == "!" => {
                self.bump();
                let operand = self.parse_unary()?;
                let node = self.node("Not");
                self.attach(node, operand);
                Ok(node)
            }
            Some(t) if t.kind == TokKind::Op && t.text == "-" => {
                self.bump();
                let operand = self.parse_unary()?;
                let node = self.node("Neg");
                self.attach(node, operand);
                Ok(node)
            }
            Some(t) if t.kind == TokKind::Op && (t.text == "++" || t.text == "--") => {
                self.unsupported("increment operator", &t)
            }
            _ => self.parse_postfix(),
        }
    }

    fn parse_postfix(&mut self) -> Result<NodeId, ParseError> {
        let mut expr = self.parse_primary()?;
        loop {
            if self.is_punct(".") {
                self.bump();
                let name_tok = match self.peek() {
                    Some(t) if t.kind == TokKind::Ident => self.bump().unwrap(),
                    _ => return self.expected("member name"),
                };
                let name = self.terminal("Ident", &name_tok, self.pos - 1);
                if self.is_punct("(") {
                    let args = self.parse_args()?;
                    let call = self.node("Call");
                    self.attach(call, expr);
                    self.attach(call, name);
                    self.attach(call, args);
                    expr = call;
                } else {
                    let access = self.node("FieldAccess");
                    self.attach(access, expr);
                    self.attach(access, name);
                    expr = access;
                }
            } else if self.is_punct("[") {
                let t = self.peek().unwrap().clone();
                return self.unsupported("array index", &t);
            } else if let Some(t) = self.peek() {
                if t.kind == TokKind::Op
                    && matches!(t.text.as_str(), "++" | "--")
                {
                    let t = t.clone();
                    return self.unsupported("increment operator", &t);
                }
                if t.kind == TokKind::Op && t.text == "->" {
                    let t = t.clone();
                    return self.unsupported("lambda", &t);
                }
                if t.kind == TokKind::Op && t.text == "?" {
                    let t = t.clone();
                    return self.unsupported("ternary expression", &t);
                }
                if t.kind == TokKind::Op
                    && matches!(t.text.as_str(), "&" | "|" | "^" | "~" | "<<" | ">>")
                {
                    let t = t.clone();
                    return self.unsupported("bitwise operator", &t);
                }
                if t.kind == TokKind::Op
                    && matches!(t.text.as_str(), "+=" | "-=" | "*=" | "/=" | "%=" | "&=" | "|=" | "^=")
                {
                    let t = t.clone();
                    return self.unsupported("compound assignment", &t);
                }
                if t.kind == TokKind::Keyword && t.text == "instanceof" {
                    let t = t.clone();
                    return self.unsupported("instanceof", &t);
                }
                break;
            } else {
                break;
            }
        }
        Ok(expr)
    }

    fn parse_args(&mut self) -> Result<NodeId, ParseError> {
        self.eat_punct("(")?;
        let args = self.node("Args");
        if self.is_punct(")") {
            self.bump();
            return Ok(args);
        }
        loop {
            let arg = self.parse_expr()?;
            self.attach(args, arg);
            if self.is_punct(",") {
                self.bump();
            } else {
                break;
            }
        }
        self.eat_punct(")")?;
        Ok(args)
    }

    fn parse_primary(&mut self) -> Result<NodeId, ParseError> {
        let tok = match self.peek().cloned() {
            Some(t) => t,
            None => return self.eof("expression"),
        };
        match tok.kind {
            TokKind::IntLit => {
                let pos = self.pos;
                self.bump();
                Ok(self.terminal("IntLit", &tok, pos))
            }
            TokKind::FloatLit => {
                let pos = self.pos;
                self.bump();
                Ok(self.terminal("FloatLit", &tok, pos))
            }
            TokKind::StringLit => {
                let pos = self.pos;
                self.bump();
                Ok(self.terminal("StringLit", &tok, pos))
            }
            TokKind::CharLit => {
                let pos = self.pos;
                self.bump();
                Ok(self.terminal("CharLit", &tok, pos))
            }
            TokKind::BoolLit => {
                let pos = self.pos;
                self.bump();
                Ok(self.terminal("BoolLit", &tok, pos))
            }
            TokKind::NullLit => {
                let pos = self.pos;
                self.bump();
                Ok(self.terminal("NullLit", &tok, pos))
            }
            TokKind::Ident => {
                let pos = self.pos;
                self.bump();
                let ident = self.terminal("Ident", &tok, pos);
                if self.is_punct("(") {
                    let args = self.parse_args()?;
                    let call = self.node("Call");
                    self.attach(call, ident);
                    self.attach(call, args);
                    Ok(call)
                } else if matches!(self.peek(), Some(t) if t.kind == TokKind::Op && t.text == "->")
                {
                    let t = self.peek().unwrap().clone();
                    self.unsupported("lambda", &t)
                } else {
                    Ok(ident)
                }
            }
            TokKind::Punct if tok.text == "(" => {
                self.bump();
                // `(` followed by a type-looking run and `)` is a cast
                if matches!(self.peek(), Some(t) if t.kind == TokKind::PrimType) {
                    return self.unsupported("cast", &tok);
                }
                // `()` can only start a zero-parameter lambda
                if self.is_punct(")") {
                    return self.unsupported("lambda", &tok);
                }
                let inner = self.parse_expr()?;
                self.eat_punct(")")?;
                // lambda bodies arrive as `(...) -> ...`
                if matches!(self.peek(), Some(t) if t.kind == TokKind::Op && t.text == "->") {
                    return self.unsupported("lambda", &tok);
                }
                Ok(inner)
            }
            TokKind::Keyword if tok.text == "new" => {
                self.bump();
                let class_tok = match self.peek().cloned() {
                    Some(t) if t.kind == TokKind::Ident => t,
                    Some(t) if t.kind == TokKind::PrimType => {
                        return self.unsupported("array creation", &t)
                    }
                    _ => return self.expected("class name"),
                };
                let pos = self.pos;
                self.bump();
                let mut name = class_tok.text.clone();
                while self.is_punct(".")
                    && matches!(self.peek_at(1), Some(n) if n.kind == TokKind::Ident)
                {
                    self.bump();
                    name.push('.');
                    name.push_str(&self.bump().unwrap().text);
                }
                if self.is_op("<") {
                    let t = self.peek().unwrap().clone();
                    return self.unsupported("generics", &t);
                }
                if self.is_punct("[") {
                    let t = self.peek().unwrap().clone();
                    return self.unsupported("array creation", &t);
                }
                let mut name_tok = class_tok;
                name_tok.text = name;
                let class = self.terminal("TypeName", &name_tok, pos);
                let args = self.parse_args()?;
                if self.is_punct("{") {
                    let t = self.peek().unwrap().clone();
                    return self.unsupported("anonymous class", &t);
                }
                let node = self.node("New");
                self.attach(node, class);
                self.attach(node, args);
                Ok(node)
            }
            TokKind::Keyword => self.unsupported(&tok.text, &tok),
            TokKind::Modifier => self.unsupported(&tok.text, &tok),
            _ => {
                if tok.kind == TokKind::Op && tok.text == "->" {
                    return self.unsupported("lambda", &tok);
                }
                self.expected("expression")
            }
        }
    }
}

/// Parse a single Java method declaration into an [`Ast`].
pub fn parse_method(source: &str) -> Result<Ast, ParseError> {
    let tokens = lex(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        nodes: Vec::new(),
    };
    let root = parser.parse_method()?;
    Ok(Ast {
        nodes: parser.nodes,
        root,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn terminal_lexemes(ast: &Ast) -> Vec<String> {
        ast.terminals()
            .into_iter()
            .map(|id| ast.node(id).terminal.as_ref().unwrap().lexeme.clone())
            .collect()
    }

    #[test]
    fn minimal_method_terminals_in_source_order() {
        let ast = parse_method("int f(){return 1;}").unwrap();
        assert_eq!(terminal_lexemes(&ast), vec!["int", "f", "return", "1"]);
    }

    #[test]
    fn parses_full_statement_inventory() {
        let src = r#"
            public static int work(int n, String label) {
                int total = 0;
                for (int i = 0; i < n; i = i + 1) {
                    total = total + i;
                }
                while (total > 100) {
                    total = total - 10;
                }
                if (label == null) {
                    return -1;
                } else {
                    log.debug(label);
                }
                Helper h = new Helper(total);
                h.run();
                return total % 7;
            }
        "#;
        let ast = parse_method(src).unwrap();
        assert_eq!(ast.node(ast.root()).kind, "MethodDecl");
        let lexemes = terminal_lexemes(&ast);
        assert!(lexemes.contains(&"while".to_string()));
        assert!(lexemes.contains(&"Helper".to_string()));
    }

    #[test]
    fn lambda_is_named_in_the_error() {
        let err = parse_method("void f(){ run(() -> x); }").unwrap_err();
        match err {
            ParseError::Unsupported { construct, .. } => assert_eq!(construct, "lambda"),
            other => panic!("expected unsupported-construct error, got {other:?}"),
        }
    }

    #[test]
    fn unsupported_statements_are_named() {
        for (src, want) in [
            ("void f(){ try { g(); } catch (E e) {} }", "try"),
            ("void f(){ switch (x) {} }", "switch"),
            ("void f(){ int[] a = new int[3]; }", "array creation"),
            ("void f(){ x++; }", "increment operator"),
            ("void f(){ List<String> xs = q(); }", "generics"),
            ("void f(){ int y = x & 3; }", "bitwise operator"),
        ] {
            match parse_method(src).unwrap_err() {
                ParseError::Unsupported { construct, .. } => {
                    assert_eq!(construct, want, "for source {src:?}")
                }
                other => panic!("expected unsupported error for {src:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn qualified_types_fold_into_one_terminal() {
        let ast = parse_method("java.util.Date now(){ return new java.util.Date(); }").unwrap();
        let lexemes = terminal_lexemes(&ast);
        assert_eq!(
            lexemes,
            vec!["java.util.Date", "now", "return", "java.util.Date"]
        );
    }

    #[test]
    fn operator_kinds_replace_operator_terminals() {
        let ast = parse_method("boolean f(int a, int b){ return a <= b && !flag; }").unwrap();
        let kinds: Vec<&str> = (0..ast.len())
            .map(|i| ast.node(NodeId(i)).kind)
            .collect();
        assert!(kinds.contains(&"Le"));
        assert!(kinds.contains(&"And"));
        assert!(kinds.contains(&"Not"));
        // no terminal holds an operator lexeme
        assert!(!terminal_lexemes(&ast).iter().any(|l| l == "<=" || l == "&&"));
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_method("int f( {") {
            Err(ParseError::Expected { line, col, .. }) => {
                assert_eq!(line, 1);
                assert!(col > 1);
            }
            other => panic!("expected positioned error, got {other:?}"),
        }
    }

    #[test]
    fn parent_child_links_are_consistent() {
        let ast = parse_method("int f(int x){ if (x > 0) { return x; } return 0; }").unwrap();
        for i in 0..ast.len() {
            let id = NodeId(i);
            for &child in &ast.node(id).children {
                assert_eq!(ast.node(child).parent, Some(id));
            }
            if let Some(parent) = ast.node(id).parent {
                assert!(ast.node(parent).children.contains(&id));
            }
        }
        assert_eq!(ast.node(ast.root()).parent, None);
    }
}
