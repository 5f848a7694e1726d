//! Ingest of srcML-style XML into a [`TokenTree`].

use std::collections::BTreeMap;

use super::kind::Kind;
use super::tree::{SyntaxNode, TokenTree};
use super::SyntaxError;

const CPP_NAMESPACE: &str = "http://www.srcML.org/srcML/cpp";

/// What to do with an element whose name is outside the closed vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alias {
    /// Treat the element as this kind.
    Kind(Kind),
    /// Drop the element but keep its children in its place.
    Splice,
    /// Drop the element and everything under it.
    Drop,
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Reject elements that are neither in the vocabulary nor aliased.
    /// Lenient mode splices them.
    pub strict: bool,
    pub aliases: BTreeMap<String, Alias>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { strict: false, aliases: default_aliases() }
    }
}

impl IngestOptions {
    pub fn strict() -> Self {
        Self { strict: true, ..Self::default() }
    }
}

/// Mapping for the srcML elements the built-in parser folds into the closed
/// vocabulary.
pub fn default_aliases() -> BTreeMap<String, Alias> {
    use Alias::*;
    let table: &[(&str, Alias)] = &[
        ("block_content", Splice),
        ("then", Splice),
        ("control", Kind(super::Kind::Condition)),
        ("incr", Splice),
        ("range", Splice),
        ("ternary", Splice),
        ("try", Splice),
        ("catch", Splice),
        ("finally", Splice),
        ("class", Splice),
        ("struct", Splice),
        ("interface", Splice),
        ("enum", Splice),
        ("namespace", Splice),
        ("unit", Splice),
        ("default", Kind(super::Kind::Case)),
        ("do", Kind(super::Kind::While)),
        ("elseif", Kind(super::Kind::If)),
        ("function_decl", Kind(super::Kind::Function)),
        ("constructor", Kind(super::Kind::Function)),
        ("constructor_decl", Kind(super::Kind::Function)),
        ("destructor", Kind(super::Kind::Function)),
        ("destructor_decl", Kind(super::Kind::Function)),
        ("break", Kind(super::Kind::ExprStmt)),
        ("continue", Kind(super::Kind::ExprStmt)),
        ("goto", Kind(super::Kind::ExprStmt)),
        ("throw", Kind(super::Kind::ExprStmt)),
        ("import", Kind(super::Kind::ExprStmt)),
        ("package", Kind(super::Kind::ExprStmt)),
        ("specifier", Drop),
        ("modifier", Drop),
        ("comment", Drop),
        ("escape", Drop),
        ("label", Drop),
        ("annotation", Drop),
        ("empty_stmt", Drop),
        ("super_list", Drop),
        ("extends", Drop),
        ("implements", Drop),
        ("throws", Drop),
        ("template", Drop),
        ("position", Drop),
    ];
    table.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Parses srcML-compatible XML. Text content is discarded; only the element
/// structure survives.
pub fn ingest_srcml(xml_text: &str, options: &IngestOptions) -> Result<TokenTree, SyntaxError> {
    let doc = roxmltree::Document::parse(xml_text).map_err(|e| SyntaxError::MalformedXml(e.to_string()))?;
    let root = doc.root_element();
    let statements =
        if root.tag_name().name() == "unit" { convert_children(root, options)? } else { convert(root, options)? };
    Ok(TokenTree::from_statements(statements))
}

fn convert_children(node: roxmltree::Node<'_, '_>, options: &IngestOptions) -> Result<Vec<SyntaxNode>, SyntaxError> {
    let mut out = Vec::new();
    for child in node.children().filter(|c| c.is_element()) {
        out.extend(convert(child, options)?);
    }
    Ok(out)
}

fn convert(node: roxmltree::Node<'_, '_>, options: &IngestOptions) -> Result<Vec<SyntaxNode>, SyntaxError> {
    let tag = node.tag_name();
    if tag.namespace() == Some(CPP_NAMESPACE) {
        return Ok(Vec::new());
    }
    let name = tag.name();
    // secondary declarators repeat the type by reference only
    if name == "type" && node.attribute("ref") == Some("prev") {
        return Ok(Vec::new());
    }
    let has_element_children = node.children().any(|c| c.is_element());
    // compound names (a.b, a[i]) flatten into their parts
    if name == "name" && has_element_children {
        return convert_children(node, options);
    }
    let action = match name.parse::<Kind>() {
        Ok(Kind::Unit) => Alias::Splice,
        Ok(kind) => Alias::Kind(kind),
        Err(_) => match options.aliases.get(name) {
            Some(alias) => *alias,
            None if options.strict => return Err(SyntaxError::UnknownElement(name.to_string())),
            None => Alias::Splice,
        },
    };
    match action {
        Alias::Drop => Ok(Vec::new()),
        Alias::Splice => convert_children(node, options),
        Alias::Kind(kind) => Ok(vec![SyntaxNode::with(kind, convert_children(node, options)?)]),
    }
}
