use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Closed vocabulary of normalized syntax element kinds.
///
/// Names follow the srcML element names. `init` and `index` are carried in
/// addition to the statement/expression core because srcML emits them for
/// every initialized declaration and subscript.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Unit,
    IfStmt,
    If,
    Else,
    Condition,
    Expr,
    ExprStmt,
    Name,
    Operator,
    Literal,
    Block,
    DeclStmt,
    Decl,
    Type,
    Init,
    Index,
    Call,
    ArgumentList,
    Argument,
    While,
    For,
    Switch,
    Case,
    Function,
    ParameterList,
    Parameter,
    Return,
}

/// How a kind contributes to the flat token sequence besides its children.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    None,
    /// The element opens with a keyword token named after the kind.
    Keyword,
    /// The element is delimited by an opening and a closing bracket token.
    Bracketed,
}

impl Kind {
    pub const ALL: [Kind; 27] = [
        Kind::Unit,
        Kind::IfStmt,
        Kind::If,
        Kind::Else,
        Kind::Condition,
        Kind::Expr,
        Kind::ExprStmt,
        Kind::Name,
        Kind::Operator,
        Kind::Literal,
        Kind::Block,
        Kind::DeclStmt,
        Kind::Decl,
        Kind::Type,
        Kind::Init,
        Kind::Index,
        Kind::Call,
        Kind::ArgumentList,
        Kind::Argument,
        Kind::While,
        Kind::For,
        Kind::Switch,
        Kind::Case,
        Kind::Function,
        Kind::ParameterList,
        Kind::Parameter,
        Kind::Return,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Unit => "unit",
            Kind::IfStmt => "if_stmt",
            Kind::If => "if",
            Kind::Else => "else",
            Kind::Condition => "condition",
            Kind::Expr => "expr",
            Kind::ExprStmt => "expr_stmt",
            Kind::Name => "name",
            Kind::Operator => "operator",
            Kind::Literal => "literal",
            Kind::Block => "block",
            Kind::DeclStmt => "decl_stmt",
            Kind::Decl => "decl",
            Kind::Type => "type",
            Kind::Init => "init",
            Kind::Index => "index",
            Kind::Call => "call",
            Kind::ArgumentList => "argument_list",
            Kind::Argument => "argument",
            Kind::While => "while",
            Kind::For => "for",
            Kind::Switch => "switch",
            Kind::Case => "case",
            Kind::Function => "function",
            Kind::ParameterList => "parameter_list",
            Kind::Parameter => "parameter",
            Kind::Return => "return",
        }
    }

    pub fn marker(self) -> Marker {
        match self {
            Kind::If | Kind::Else | Kind::While | Kind::For | Kind::Switch | Kind::Case | Kind::Return => {
                Marker::Keyword
            }
            Kind::Condition | Kind::Block | Kind::ArgumentList | Kind::ParameterList | Kind::Index => Marker::Bracketed,
            _ => Marker::None,
        }
    }

    /// Number of tokens the element itself contributes to a token sequence.
    pub fn marker_tokens(self) -> usize {
        match self.marker() {
            Marker::None => 0,
            Marker::Keyword => 1,
            Marker::Bracketed => 2,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown element kind `{0}`")]
pub struct UnknownKind(pub String);

impl FromStr for Kind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kind::ALL.iter().copied().find(|k| k.as_str() == s).ok_or_else(|| UnknownKind(s.to_string()))
    }
}
