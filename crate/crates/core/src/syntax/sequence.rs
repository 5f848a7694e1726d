use super::kind::{Kind, Marker};
use super::tree::{NodeId, TokenTree};

/// Flat token sequence of a tree, depth-first and left to right.
///
/// Leaf elements contribute their kind. Elements that own a keyword (`if`,
/// `while`, `return`, ...) contribute the keyword before their children, and
/// bracketed elements (`condition`, `block`, argument and parameter lists,
/// subscripts) contribute `<kind>-open` / `<kind>-close` around them.
pub fn token_sequence(tree: &TokenTree) -> Vec<String> {
    let mut out = Vec::new();
    for &stmt in tree.children(tree.root()) {
        walk(tree, stmt, &mut out);
    }
    out
}

fn walk(tree: &TokenTree, id: NodeId, out: &mut Vec<String>) {
    let kind = tree.kind(id);
    let children = tree.children(id);
    match kind.marker() {
        Marker::Keyword => out.push(kind.as_str().to_string()),
        Marker::Bracketed => out.push(format!("{kind}-open")),
        Marker::None if children.is_empty() => out.push(kind.as_str().to_string()),
        Marker::None => {}
    }
    for &child in children {
        walk(tree, child, out);
    }
    if kind.marker() == Marker::Bracketed {
        out.push(format!("{kind}-close"));
    }
}

/// Expected sequence length for a tree: one token per marker-free leaf plus
/// the marker tokens of every element.
pub fn expected_sequence_len(tree: &TokenTree) -> usize {
    tree.preorder()
        .into_iter()
        .skip(1)
        .map(|id| {
            let kind: Kind = tree.kind(id);
            let leaf = tree.children(id).is_empty();
            kind.marker_tokens() + usize::from(leaf && kind.marker() == Marker::None)
        })
        .sum()
}
