//! Statement-level parser for Java/C/C++ fragments.
//!
//! Patch fragments rarely form complete compilation units, so the grammar is
//! deliberately shallow: it recognizes the control-flow statements,
//! declarations, function definitions, calls and flat expressions, and turns
//! anything else into an `expr_stmt`. Parsing never fails.

use super::kind::Kind;
use super::lexer::{TokKind, Token};
use super::tree::SyntaxNode;

const MODIFIERS: &[&str] = &[
    "public",
    "private",
    "protected",
    "static",
    "final",
    "abstract",
    "native",
    "transient",
    "volatile",
    "strictfp",
    "virtual",
    "inline",
    "explicit",
    "constexpr",
    "extern",
    "override",
    "friend",
    "mutable",
    "register",
    "typedef",
];

const PRIMITIVES: &[&str] = &[
    "void", "int", "long", "short", "char", "byte", "boolean", "float", "double", "bool", "unsigned", "signed", "auto",
    "var", "wchar_t", "size_t",
];

const TYPE_QUALIFIERS: &[&str] = &["const", "struct", "enum", "union", "typename", "class"];

/// Words that can never start a type or be a variable name.
const RESERVED: &[&str] = &[
    "if",
    "else",
    "while",
    "for",
    "do",
    "switch",
    "case",
    "default",
    "return",
    "break",
    "continue",
    "goto",
    "try",
    "catch",
    "finally",
    "throw",
    "throws",
    "new",
    "delete",
    "this",
    "super",
    "true",
    "false",
    "null",
    "nullptr",
    "instanceof",
    "sizeof",
    "import",
    "package",
    "using",
    "namespace",
    "interface",
    "template",
    "operator",
    "assert",
    "yield",
    "noexcept",
    "extends",
    "implements",
];

const LITERAL_WORDS: &[&str] = &["true", "false", "null", "nullptr", "NULL"];

const OPERATOR_WORDS: &[&str] = &["new", "delete", "instanceof", "sizeof", "typeof", "alignof"];

/// Keywords introducing statements with no tree form of their own; the rest
/// of the statement is kept as a generic expression statement.
const GENERIC_STMT_WORDS: &[&str] =
    &["break", "continue", "goto", "throw", "import", "package", "using", "assert", "yield"];

const TYPE_DECL_WORDS: &[&str] = &["class", "interface", "enum", "struct", "union", "namespace"];

fn is_plain_ident(tok: &Token) -> bool {
    tok.kind == TokKind::Ident && !RESERVED.contains(&tok.text.as_str())
}

pub fn parse_statements(tokens: &[Token]) -> Vec<SyntaxNode> {
    let mut parser = Parser { toks: tokens, pos: 0 };
    let mut out = Vec::new();
    while parser.pos < tokens.len() {
        let before = parser.pos;
        if let Some(stmt) = parser.statement() {
            out.push(stmt);
        }
        if parser.pos == before {
            parser.pos += 1;
        }
    }
    out
}

struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
}

#[derive(Clone, Copy)]
enum Stop {
    /// `;` ends the expression.
    Statement,
    /// `,` or `)` end the expression (argument lists).
    Argument,
    /// `:` ends the expression (case labels, for-each).
    Colon,
    /// `;` or `:` or `)` (for-loop control pieces).
    ForPiece,
    /// `)` or `{` (unparenthesized conditions).
    Condition,
    /// `,` or `}` (initializer lists).
    Initializer,
    /// `]`.
    Bracket,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, off: usize) -> Option<&'t Token> {
        self.toks.get(self.pos + off)
    }

    fn at(&self, kind: TokKind) -> bool {
        self.peek().is_some_and(|t| t.is(kind))
    }

    fn at_word(&self, word: &str) -> bool {
        self.peek().is_some_and(|t| t.is_word(word))
    }

    fn at_op(&self, op: &str) -> bool {
        self.peek().is_some_and(|t| t.is_op(op))
    }

    fn eat(&mut self, kind: TokKind) -> bool {
        if self.at(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Index just past the bracket matching the opener at `start`, or the
    /// end of input when unbalanced.
    /// `name (:: ~? name)* (` at the cursor.
    fn qualified_name_then_paren(&self) -> bool {
        let mut i = self.pos;
        if !self.toks.get(i).is_some_and(is_plain_ident) {
            return false;
        }
        i += 1;
        while self.toks.get(i).is_some_and(|t| t.is_op("::")) {
            i += 1;
            if self.toks.get(i).is_some_and(|t| t.is_op("~")) {
                i += 1;
            }
            if !self.toks.get(i).is_some_and(is_plain_ident) {
                return false;
            }
            i += 1;
        }
        self.toks.get(i).is_some_and(|t| t.is(TokKind::LParen))
    }

    fn matching(&self, start: usize) -> usize {
        let (open, close) = match self.toks[start].kind {
            TokKind::LParen => (TokKind::LParen, TokKind::RParen),
            TokKind::LBrace => (TokKind::LBrace, TokKind::RBrace),
            TokKind::LBracket => (TokKind::LBracket, TokKind::RBracket),
            _ => return start + 1,
        };
        let mut depth = 0usize;
        for (i, tok) in self.toks.iter().enumerate().skip(start) {
            if tok.kind == open {
                depth += 1;
            } else if tok.kind == close {
                depth -= 1;
                if depth == 0 {
                    return i + 1;
                }
            }
        }
        self.toks.len()
    }

    /// Index just past a balanced `<...>` starting at `start`; `None` when the
    /// angle brackets do not close before a statement boundary.
    fn matching_angle(&self, start: usize) -> Option<usize> {
        let mut depth = 0i32;
        for (i, tok) in self.toks.iter().enumerate().skip(start) {
            match tok.kind {
                TokKind::Op => match tok.text.as_str() {
                    "<" => depth += 1,
                    ">" => depth -= 1,
                    ">>" => depth -= 2,
                    ">>>" => depth -= 3,
                    "." | "::" | "?" | "&" | "*" => {}
                    _ => return None,
                },
                TokKind::Ident | TokKind::Comma | TokKind::LBracket | TokKind::RBracket => {}
                _ => return None,
            }
            if depth <= 0 {
                return (depth == 0).then_some(i + 1);
            }
        }
        None
    }

    fn skip_modifiers(&mut self) {
        loop {
            match self.peek() {
                Some(t) if t.kind == TokKind::Ident && MODIFIERS.contains(&t.text.as_str()) => self.pos += 1,
                Some(t) if t.is_word("default") && !self.peek_at(1).is_some_and(|n| n.is_op(":") || n.is_op("->")) => {
                    self.pos += 1
                }
                Some(t) if t.is_word("template") => {
                    self.pos += 1;
                    if self.at_op("<") {
                        match self.matching_angle(self.pos) {
                            Some(end) => self.pos = end,
                            None => return,
                        }
                    }
                }
                // generic method type parameters: `public <T> void f()`
                Some(t) if t.is_op("<") && self.pos > 0 => match self.matching_angle(self.pos) {
                    Some(end) if self.toks.get(end).is_some_and(is_plain_ident) => self.pos = end,
                    _ => return,
                },
                _ => return,
            }
        }
    }

    fn statement(&mut self) -> Option<SyntaxNode> {
        let tok = self.peek()?;
        match tok.kind {
            TokKind::Semi | TokKind::RBrace | TokKind::RParen | TokKind::RBracket | TokKind::Comma => {
                self.pos += 1;
                return None;
            }
            TokKind::LBrace => return Some(self.block()),
            _ => {}
        }
        if tok.kind == TokKind::Ident {
            match tok.text.as_str() {
                "if" => return Some(self.if_stmt()),
                "else" => {
                    // orphaned `else` from a partial hunk
                    let branches = self.else_branch();
                    return Some(SyntaxNode::with(Kind::IfStmt, branches));
                }
                "while" => {
                    self.pos += 1;
                    let cond = self.condition();
                    let body = self.body();
                    return Some(SyntaxNode::with(Kind::While, vec![cond, body]));
                }
                "do" => {
                    self.pos += 1;
                    let body = self.body();
                    let mut children = vec![body];
                    if self.at_word("while") {
                        self.pos += 1;
                        children.push(self.condition());
                        self.eat(TokKind::Semi);
                    }
                    return Some(SyntaxNode::with(Kind::While, children));
                }
                "for" => return Some(self.for_stmt()),
                "switch" => {
                    self.pos += 1;
                    let cond = self.condition();
                    let body = self.body();
                    return Some(SyntaxNode::with(Kind::Switch, vec![cond, body]));
                }
                "case" => {
                    self.pos += 1;
                    let expr = self.expr(Stop::Colon);
                    self.eat_op(":");
                    self.eat_op("->");
                    return Some(match expr {
                        Some(e) => SyntaxNode::with(Kind::Case, vec![e]),
                        None => SyntaxNode::leaf(Kind::Case),
                    });
                }
                "default" if self.peek_at(1).is_some_and(|n| n.is_op(":") || n.is_op("->")) => {
                    self.pos += 2;
                    return Some(SyntaxNode::leaf(Kind::Case));
                }
                "return" => {
                    self.pos += 1;
                    let expr = self.expr(Stop::Statement);
                    self.eat(TokKind::Semi);
                    return Some(match expr {
                        Some(e) => SyntaxNode::with(Kind::Return, vec![e]),
                        None => SyntaxNode::leaf(Kind::Return),
                    });
                }
                "try" | "finally" | "catch" | "synchronized" => {
                    self.pos += 1;
                    if self.at(TokKind::LParen) {
                        self.pos = self.matching(self.pos);
                    }
                    return if self.at(TokKind::LBrace) { Some(self.block()) } else { None };
                }
                "public" | "private" | "protected" if self.peek_at(1).is_some_and(|n| n.is_op(":")) => {
                    self.pos += 2;
                    return None;
                }
                word if GENERIC_STMT_WORDS.contains(&word) => {
                    self.pos += 1;
                    return Some(self.expr_stmt());
                }
                _ => {}
            }
            // labels
            if is_plain_ident(tok) && self.peek_at(1).is_some_and(|n| n.is_op(":")) {
                self.pos += 2;
                return None;
            }
        }

        let start = self.pos;
        self.skip_modifiers();
        if let Some(word) = self.peek().filter(|t| t.kind == TokKind::Ident).map(|t| t.text.as_str()) {
            if TYPE_DECL_WORDS.contains(&word) && !self.looks_like_decl_after_tag() {
                return self.type_declaration();
            }
        }
        if self.at(TokKind::LBrace) {
            // static initializer or modifier-prefixed block
            return Some(self.block());
        }
        if let Some(func) = self.try_function() {
            return Some(func);
        }
        if let Some(decl) = self.try_declaration(true) {
            self.eat(TokKind::Semi);
            return Some(SyntaxNode::with(Kind::DeclStmt, decl));
        }
        self.pos = start;
        Some(self.expr_stmt())
    }

    /// `struct foo x;` in C is a declaration, not a type definition.
    fn looks_like_decl_after_tag(&self) -> bool {
        let a = self.peek_at(1);
        let b = self.peek_at(2);
        matches!((a, b), (Some(a), Some(b)) if is_plain_ident(a) && (is_plain_ident(b) || b.is_op("*")))
    }

    fn type_declaration(&mut self) -> Option<SyntaxNode> {
        // drop the header up to the body
        while let Some(t) = self.peek() {
            match t.kind {
                TokKind::LBrace => return Some(self.block()),
                TokKind::Semi => {
                    self.pos += 1;
                    return None;
                }
                TokKind::RBrace => return None,
                _ => self.pos += 1,
            }
        }
        None
    }

    fn expr_stmt(&mut self) -> SyntaxNode {
        let expr = self.expr(Stop::Statement);
        self.eat(TokKind::Semi);
        match expr {
            Some(e) => SyntaxNode::with(Kind::ExprStmt, vec![e]),
            None => SyntaxNode::leaf(Kind::ExprStmt),
        }
    }

    fn block(&mut self) -> SyntaxNode {
        debug_assert!(self.at(TokKind::LBrace));
        self.pos += 1;
        let mut stmts = Vec::new();
        while let Some(tok) = self.peek() {
            if tok.is(TokKind::RBrace) {
                self.pos += 1;
                break;
            }
            let before = self.pos;
            if let Some(stmt) = self.statement() {
                stmts.push(stmt);
            }
            if self.pos == before {
                self.pos += 1;
            }
        }
        SyntaxNode::with(Kind::Block, stmts)
    }

    /// Loop/branch body; single statements are wrapped in a block.
    fn body(&mut self) -> SyntaxNode {
        if self.at(TokKind::LBrace) {
            return self.block();
        }
        if self.peek().is_none() || self.at(TokKind::RBrace) {
            return SyntaxNode::leaf(Kind::Block);
        }
        if self.eat(TokKind::Semi) {
            return SyntaxNode::leaf(Kind::Block);
        }
        let before = self.pos;
        let stmt = self.statement();
        if self.pos == before {
            self.pos += 1;
        }
        SyntaxNode::with(Kind::Block, stmt.into_iter().collect())
    }

    fn condition(&mut self) -> SyntaxNode {
        let expr = if self.at(TokKind::LParen) {
            let mut items = Vec::new();
            self.paren_group(&mut items);
            (!items.is_empty()).then(|| SyntaxNode::with(Kind::Expr, items))
        } else {
            self.expr(Stop::Condition)
        };
        match expr {
            Some(e) => SyntaxNode::with(Kind::Condition, vec![e]),
            None => SyntaxNode::leaf(Kind::Condition),
        }
    }

    fn if_stmt(&mut self) -> SyntaxNode {
        let mut branches = Vec::new();
        self.pos += 1;
        let cond = self.condition();
        let body = self.body();
        branches.push(SyntaxNode::with(Kind::If, vec![cond, body]));
        while self.at_word("else") {
            let more = self.else_branch();
            let done = more.last().is_some_and(|n| n.kind == Kind::Else);
            branches.extend(more);
            if done {
                break;
            }
        }
        SyntaxNode::with(Kind::IfStmt, branches)
    }

    /// Parses `else ...`; an `else if` becomes another `if` branch of the
    /// same statement.
    fn else_branch(&mut self) -> Vec<SyntaxNode> {
        self.pos += 1;
        if self.at_word("if") {
            self.pos += 1;
            let cond = self.condition();
            let body = self.body();
            vec![SyntaxNode::with(Kind::If, vec![cond, body])]
        } else {
            vec![SyntaxNode::with(Kind::Else, vec![self.body()])]
        }
    }

    fn for_stmt(&mut self) -> SyntaxNode {
        self.pos += 1;
        let mut pieces = Vec::new();
        if self.eat(TokKind::LParen) {
            loop {
                let before = self.pos;
                if let Some(decl) = self.try_declaration(false) {
                    pieces.extend(decl);
                } else if let Some(e) = self.expr(Stop::ForPiece) {
                    pieces.push(e);
                }
                match self.peek() {
                    Some(t) if t.is(TokKind::Semi) || t.is_op(":") => self.pos += 1,
                    Some(t) if t.is(TokKind::RParen) => {
                        self.pos += 1;
                        break;
                    }
                    Some(_) if self.pos == before => self.pos += 1,
                    _ => break,
                }
            }
        }
        let cond = if pieces.is_empty() {
            SyntaxNode::leaf(Kind::Condition)
        } else {
            SyntaxNode::with(Kind::Condition, pieces)
        };
        let body = self.body();
        SyntaxNode::with(Kind::For, vec![cond, body])
    }

    /// Parses a type at the cursor. Restores the cursor and returns `None`
    /// when no type is present.
    fn parse_type(&mut self) -> Option<SyntaxNode> {
        let start = self.pos;
        let mut children = Vec::new();
        while self.peek().is_some_and(|t| t.kind == TokKind::Ident && TYPE_QUALIFIERS.contains(&t.text.as_str())) {
            self.pos += 1;
        }
        let mut saw_name = false;
        // multi-word primitives: `unsigned long long int`
        while let Some(t) = self.peek() {
            if t.kind == TokKind::Ident && PRIMITIVES.contains(&t.text.as_str()) {
                if !saw_name {
                    children.push(SyntaxNode::leaf(Kind::Name));
                }
                saw_name = true;
                self.pos += 1;
            } else {
                break;
            }
        }
        if !saw_name {
            if !self.peek().is_some_and(is_plain_ident) {
                self.pos = start;
                return None;
            }
            self.pos += 1;
            children.push(SyntaxNode::leaf(Kind::Name));
            while (self.at_op(".") || self.at_op("::")) && self.peek_at(1).is_some_and(is_plain_ident) {
                self.pos += 2;
                children.push(SyntaxNode::leaf(Kind::Operator));
                children.push(SyntaxNode::leaf(Kind::Name));
            }
        }
        if self.at_op("<") {
            match self.generic_arguments() {
                Some(args) => children.push(args),
                None => {
                    self.pos = start;
                    return None;
                }
            }
            // qualified continuation after generics: Map<K, V>.Entry
            while (self.at_op(".") || self.at_op("::")) && self.peek_at(1).is_some_and(is_plain_ident) {
                self.pos += 2;
                children.push(SyntaxNode::leaf(Kind::Operator));
                children.push(SyntaxNode::leaf(Kind::Name));
            }
        }
        loop {
            if self.at_op("*") || self.at_op("&") || self.at_op("&&") || self.at_op("...") || self.at_word("const") {
                self.pos += 1;
            } else if self.at(TokKind::LBracket) && self.peek_at(1).is_some_and(|t| t.is(TokKind::RBracket)) {
                self.pos += 2;
                children.push(SyntaxNode::leaf(Kind::Index));
            } else {
                break;
            }
        }
        Some(SyntaxNode::with(Kind::Type, children))
    }

    fn generic_arguments(&mut self) -> Option<SyntaxNode> {
        let end = self.matching_angle(self.pos)?;
        self.pos += 1;
        let mut args = Vec::new();
        while self.pos < end {
            if self.at(TokKind::Comma) {
                self.pos += 1;
                continue;
            }
            if self.at_op("?") {
                self.pos += 1;
                if self.at_word("extends") || self.at_word("super") {
                    self.pos += 1;
                } else {
                    args.push(SyntaxNode::with(Kind::Argument, vec![SyntaxNode::leaf(Kind::Name)]));
                    continue;
                }
            }
            let before = self.pos;
            match self.parse_type() {
                Some(ty) if self.pos <= end => {
                    args.push(SyntaxNode::with(Kind::Argument, ty.children));
                }
                _ => {
                    self.pos = before + 1;
                }
            }
            if self.pos == before {
                self.pos += 1;
            }
        }
        // closing `>` may be fused with an outer one (`>>`)
        self.pos = end;
        Some(if args.is_empty() {
            SyntaxNode::leaf(Kind::ArgumentList)
        } else {
            SyntaxNode::with(Kind::ArgumentList, args)
        })
    }

    /// `type name ( params ) trailer { body }` or a constructor/destructor
    /// without a return type. Leaves the cursor untouched when the tokens do
    /// not form a function.
    fn try_function(&mut self) -> Option<SyntaxNode> {
        let start = self.pos;
        let mut children = Vec::new();
        let ctor_like = self.at_op("~") || self.qualified_name_then_paren();
        if !ctor_like {
            let ty = self.parse_type()?;
            children.push(ty);
        }
        self.eat_op("~");
        if !self.peek().is_some_and(is_plain_ident) {
            self.pos = start;
            return None;
        }
        self.pos += 1;
        children.push(SyntaxNode::leaf(Kind::Name));
        while self.at_op("::") && self.peek_at(1).is_some_and(|t| is_plain_ident(t) || t.is_op("~")) {
            self.pos += 1;
            self.eat_op("~");
            self.pos += 1;
            children.push(SyntaxNode::leaf(Kind::Operator));
            children.push(SyntaxNode::leaf(Kind::Name));
        }
        if !self.at(TokKind::LParen) {
            self.pos = start;
            return None;
        }
        let params_end = self.matching(self.pos);
        // trailer: const, noexcept, throws X, override, `: init(list)`
        let mut i = params_end;
        let mut has_body = false;
        let mut trailer_ok = true;
        while let Some(t) = self.toks.get(i) {
            match t.kind {
                TokKind::LBrace => {
                    has_body = true;
                    break;
                }
                TokKind::Semi => break,
                TokKind::Ident
                    if matches!(t.text.as_str(), "const" | "noexcept" | "override" | "final" | "throws")
                        || (i > params_end && t.kind == TokKind::Ident) => {}
                TokKind::Op if t.text == ":" || t.text == "." || t.text == "::" || t.text == "=" => {}
                TokKind::Comma => {}
                TokKind::LParen if i > params_end => {
                    i = self.matching(i);
                    continue;
                }
                TokKind::RBrace => break,
                _ => {
                    trailer_ok = false;
                    break;
                }
            }
            i += 1;
        }
        let declared = self.toks.get(i).is_some_and(|t| t.is(TokKind::Semi));
        if !trailer_ok || !(has_body || (declared && !ctor_like)) {
            self.pos = start;
            return None;
        }
        // parameters
        self.pos += 1;
        let mut params = Vec::new();
        while self.pos < params_end.saturating_sub(1) {
            let before = self.pos;
            self.skip_modifiers();
            while self.at_word("final") || self.at_word("const") {
                self.pos += 1;
            }
            if let Some(ty) = self.parse_type() {
                let mut decl = vec![ty];
                if self.peek().is_some_and(is_plain_ident) {
                    self.pos += 1;
                    decl.push(SyntaxNode::leaf(Kind::Name));
                }
                while self.at(TokKind::LBracket) {
                    let end = self.matching(self.pos);
                    self.pos = end;
                    decl.push(SyntaxNode::leaf(Kind::Index));
                }
                if self.eat_op("=") {
                    if let Some(e) = self.expr(Stop::Argument) {
                        decl.push(SyntaxNode::with(Kind::Init, vec![e]));
                    }
                }
                params.push(SyntaxNode::with(Kind::Parameter, vec![SyntaxNode::with(Kind::Decl, decl)]));
            }
            while self.pos < params_end.saturating_sub(1) && !self.at(TokKind::Comma) {
                self.pos += 1;
            }
            self.eat(TokKind::Comma);
            if self.pos == before {
                self.pos += 1;
            }
        }
        self.pos = params_end;
        children.push(if params.is_empty() {
            SyntaxNode::leaf(Kind::ParameterList)
        } else {
            SyntaxNode::with(Kind::ParameterList, params)
        });
        self.pos = i;
        if has_body {
            children.push(self.block());
        } else {
            self.eat(TokKind::Semi);
        }
        Some(SyntaxNode::with(Kind::Function, children))
    }

    /// `type name [= init] (, name [= init])*`. Returns the `decl` nodes.
    fn try_declaration(&mut self, allow_multiple: bool) -> Option<Vec<SyntaxNode>> {
        let start = self.pos;
        let ty = self.parse_type()?;
        if !self.peek().is_some_and(is_plain_ident) {
            self.pos = start;
            return None;
        }
        let follow_ok = match self.peek_at(1) {
            None => true,
            Some(t) => {
                t.is(TokKind::Semi)
                    || t.is(TokKind::Comma)
                    || t.is(TokKind::LBracket)
                    || t.is(TokKind::RParen)
                    || t.is_op("=")
                    || t.is_op(":")
            }
        };
        if !follow_ok {
            self.pos = start;
            return None;
        }
        let mut decls = Vec::new();
        let mut first = Some(ty);
        loop {
            if !self.peek().is_some_and(is_plain_ident) {
                break;
            }
            self.pos += 1;
            let mut children = Vec::new();
            if let Some(ty) = first.take() {
                children.push(ty);
            }
            children.push(SyntaxNode::leaf(Kind::Name));
            while self.at(TokKind::LBracket) {
                children.push(self.index());
            }
            if self.eat_op("=") {
                let stop = if allow_multiple { Stop::Argument } else { Stop::ForPiece };
                let init = if self.at(TokKind::LBrace) { Some(self.initializer_list()) } else { self.expr(stop) };
                if let Some(e) = init {
                    children.push(SyntaxNode::with(Kind::Init, vec![e]));
                }
            }
            decls.push(SyntaxNode::with(Kind::Decl, children));
            if allow_multiple && self.at(TokKind::Comma) {
                self.pos += 1;
                continue;
            }
            break;
        }
        Some(decls)
    }

    fn initializer_list(&mut self) -> SyntaxNode {
        debug_assert!(self.at(TokKind::LBrace));
        self.pos += 1;
        let mut items = Vec::new();
        loop {
            if self.at(TokKind::LBrace) {
                items.push(self.initializer_list());
            } else if let Some(e) = self.expr(Stop::Initializer) {
                items.push(e);
            }
            match self.peek() {
                Some(t) if t.is(TokKind::Comma) => self.pos += 1,
                Some(t) if t.is(TokKind::RBrace) => {
                    self.pos += 1;
                    break;
                }
                _ => break,
            }
        }
        SyntaxNode::with(Kind::Block, items)
    }

    fn stops(&self, tok: &Token, stop: Stop) -> bool {
        match tok.kind {
            TokKind::RBrace => true,
            TokKind::RParen => !matches!(stop, Stop::Statement | Stop::Bracket | Stop::Initializer),
            TokKind::RBracket => true,
            TokKind::Semi => true,
            TokKind::Comma => matches!(stop, Stop::Argument | Stop::Initializer),
            TokKind::LBrace => matches!(stop, Stop::Condition),
            TokKind::Op if tok.text == ":" => matches!(stop, Stop::Colon | Stop::ForPiece),
            _ => false,
        }
    }

    /// Flat expression: names, operators, literals, calls and subscripts,
    /// with grouping parentheses spliced away.
    fn expr(&mut self, stop: Stop) -> Option<SyntaxNode> {
        let mut items = Vec::new();
        self.expr_items(stop, &mut items);
        if items.is_empty() {
            None
        } else {
            Some(SyntaxNode::with(Kind::Expr, items))
        }
    }

    fn expr_items(&mut self, stop: Stop, items: &mut Vec<SyntaxNode>) {
        let mut ternary_depth = 0usize;
        while let Some(tok) = self.peek() {
            if tok.is_op(":") && ternary_depth > 0 {
                ternary_depth -= 1;
                self.pos += 1;
                items.push(SyntaxNode::leaf(Kind::Operator));
                continue;
            }
            if self.stops(tok, stop) {
                break;
            }
            match tok.kind {
                TokKind::Number | TokKind::Str => {
                    self.pos += 1;
                    items.push(SyntaxNode::leaf(Kind::Literal));
                }
                TokKind::Op => {
                    if tok.text == "?" {
                        ternary_depth += 1;
                    }
                    self.pos += 1;
                    items.push(SyntaxNode::leaf(Kind::Operator));
                }
                TokKind::Comma => {
                    // comma operator in statement context
                    self.pos += 1;
                    items.push(SyntaxNode::leaf(Kind::Operator));
                }
                TokKind::LParen => self.paren_group(items),
                TokKind::LBracket => {
                    items.push(self.index());
                }
                TokKind::LBrace => {
                    let lambda_body = items.last().is_some_and(|n| n.kind == Kind::Operator)
                        && self.pos > 0
                        && self.toks[self.pos - 1].is_op("->");
                    let anonymous_class = items.last().is_some_and(|n| n.kind == Kind::Call);
                    if lambda_body || anonymous_class {
                        items.push(self.block());
                    } else {
                        items.push(self.initializer_list());
                    }
                }
                TokKind::Ident => self.word(items),
                TokKind::RParen | TokKind::RBracket | TokKind::RBrace | TokKind::Semi => {
                    self.pos += 1;
                }
            }
        }
    }

    fn index(&mut self) -> SyntaxNode {
        debug_assert!(self.at(TokKind::LBracket));
        self.pos += 1;
        let inner = self.expr(Stop::Bracket);
        self.eat(TokKind::RBracket);
        match inner {
            Some(e) => SyntaxNode::with(Kind::Index, vec![e]),
            None => SyntaxNode::leaf(Kind::Index),
        }
    }

    /// Splices a parenthesized group into `items`; commas inside it are
    /// separators, not operators.
    fn paren_group(&mut self, items: &mut Vec<SyntaxNode>) {
        debug_assert!(self.at(TokKind::LParen));
        self.pos += 1;
        loop {
            self.expr_items(Stop::Argument, items);
            match self.peek() {
                Some(t) if t.is(TokKind::Comma) => self.pos += 1,
                Some(t) if t.is(TokKind::RParen) => {
                    self.pos += 1;
                    break;
                }
                _ => break,
            }
        }
    }

    fn word(&mut self, items: &mut Vec<SyntaxNode>) {
        let tok = self.peek().expect("word at cursor");
        let text = tok.text.as_str();
        if LITERAL_WORDS.contains(&text) {
            self.pos += 1;
            items.push(SyntaxNode::leaf(Kind::Literal));
            return;
        }
        if OPERATOR_WORDS.contains(&text) {
            self.pos += 1;
            items.push(SyntaxNode::leaf(Kind::Operator));
            if text == "new" {
                self.new_expression(items);
            }
            return;
        }
        if text == "this" || text == "super" || !RESERVED.contains(&text) && !MODIFIERS.contains(&text) {
            self.pos += 1;
            // explicit generic call: foo.<T>bar() is rare; plain calls only
            if self.at(TokKind::LParen) {
                let args = self.argument_list();
                items.push(SyntaxNode::with(Kind::Call, vec![SyntaxNode::leaf(Kind::Name), args]));
            } else {
                items.push(SyntaxNode::leaf(Kind::Name));
            }
            return;
        }
        // other keywords inside expressions carry no structure
        self.pos += 1;
    }

    fn new_expression(&mut self, items: &mut Vec<SyntaxNode>) {
        let Some(ty) = self.parse_type() else {
            return;
        };
        if self.at(TokKind::LParen) {
            let args = self.argument_list();
            let mut children = ty.children;
            children.push(args);
            items.push(SyntaxNode::with(Kind::Call, children));
        } else {
            items.extend(ty.children);
        }
    }

    fn argument_list(&mut self) -> SyntaxNode {
        debug_assert!(self.at(TokKind::LParen));
        self.pos += 1;
        let mut args = Vec::new();
        loop {
            if let Some(e) = self.expr(Stop::Argument) {
                args.push(SyntaxNode::with(Kind::Argument, vec![e]));
            }
            match self.peek() {
                Some(t) if t.is(TokKind::Comma) => self.pos += 1,
                Some(t) if t.is(TokKind::RParen) => {
                    self.pos += 1;
                    break;
                }
                _ => break,
            }
        }
        if args.is_empty() {
            SyntaxNode::leaf(Kind::ArgumentList)
        } else {
            SyntaxNode::with(Kind::ArgumentList, args)
        }
    }
}
