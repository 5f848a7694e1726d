//! Changed-code extraction and normalized syntax trees.
//!
//! A patch is split into per-hunk [`CodeFragment`]s, Java and C-family
//! fragments are parsed into [`TokenTree`]s whose element kinds follow srcML
//! naming, and every fragment can be flattened into a token-kind sequence.
//! Python has no tree form; its sequence comes from a flat lexer.

mod diff;
mod kind;
mod lexer;
mod parser;
mod sequence;
mod srcml;
mod tree;

pub use diff::{extract_fragments, CodeFragment, FragmentMode, FragmentOrigin, Language};
pub use kind::{Kind, Marker, UnknownKind};
pub use sequence::{expected_sequence_len, token_sequence};
pub use srcml::{default_aliases, ingest_srcml, Alias, IngestOptions};
pub use tree::{Node, NodeId, SyntaxNode, TokenTree};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SyntaxError {
    #[error("malformed diff at line {line}: {detail}")]
    MalformedDiff { line: usize, detail: String },
    #[error("no syntax tree support for {0:?} fragments")]
    UnsupportedLanguage(Language),
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("element `{0}` is outside the vocabulary")]
    UnknownElement(String),
}

/// Parses Java/C-family source text into a token tree.
pub fn parse_source(text: &str) -> TokenTree {
    let tokens = lexer::lex_c_family(text);
    TokenTree::from_statements(parser::parse_statements(&tokens))
}

pub fn build_token_tree(fragment: &CodeFragment) -> Result<TokenTree, SyntaxError> {
    if !fragment.language.has_tree_support() {
        return Err(SyntaxError::UnsupportedLanguage(fragment.language));
    }
    Ok(parse_source(&fragment.text))
}

/// Token-kind sequence of a fragment: lexer-derived for Python, tree-derived
/// for everything else.
pub fn fragment_sequence(fragment: &CodeFragment) -> Vec<String> {
    match fragment.language {
        Language::Python => lexer::python_kinds(&fragment.text),
        _ => token_sequence(&parse_source(&fragment.text)),
    }
}
