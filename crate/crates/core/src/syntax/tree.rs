use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::kind::Kind;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub kind: Kind,
    pub children: Vec<NodeId>,
}

/// Owned intermediate form used while parsing, before the tree is laid
/// out in its arena.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxNode {
    pub kind: Kind,
    pub children: Vec<SyntaxNode>,
}

impl SyntaxNode {
    pub fn leaf(kind: Kind) -> Self {
        Self { kind, children: Vec::new() }
    }

    pub fn with(kind: Kind, children: Vec<SyntaxNode>) -> Self {
        Self { kind, children }
    }
}

/// Normalized syntax tree of a code fragment.
///
/// Nodes live in an arena laid out in depth-first preorder with the `unit`
/// root at index 0, so two trees with the same shape compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenTree {
    nodes: Vec<Node>,
}

impl Default for TokenTree {
    fn default() -> Self {
        Self::new()
    }
}

impl TokenTree {
    /// A root-only tree.
    pub fn new() -> Self {
        Self { nodes: vec![Node { kind: Kind::Unit, children: Vec::new() }] }
    }

    /// Lays out statement subtrees under a fresh `unit` root.
    ///
    /// Panics if any statement contains a nested `unit`.
    pub fn from_statements(statements: Vec<SyntaxNode>) -> Self {
        let mut tree = Self::new();
        for stmt in statements {
            tree.attach(0, stmt);
        }
        tree
    }

    fn attach(&mut self, parent: NodeId, node: SyntaxNode) {
        let id = self.add_child(parent, node.kind);
        for child in node.children {
            self.attach(id, child);
        }
    }

    /// Appends a child under `parent`. Appending in depth-first order keeps
    /// the arena canonical.
    pub fn add_child(&mut self, parent: NodeId, kind: Kind) -> NodeId {
        assert!(kind != Kind::Unit, "`unit` is reserved for the root");
        assert!(parent < self.nodes.len(), "parent {parent} out of range");
        let id = self.nodes.len();
        self.nodes.push(Node { kind, children: Vec::new() });
        self.nodes[parent].children.push(id);
        id
    }

    pub const fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn kind(&self, id: NodeId) -> Kind {
        self.nodes[id].kind
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    /// Number of top-level statements (children of the root).
    pub fn statement_count(&self) -> usize {
        self.nodes[0].children.len()
    }

    /// Node ids in depth-first preorder, root first.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        out
    }

    /// Childless non-root nodes, left to right.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.preorder().into_iter().filter(|&id| id != 0 && self.nodes[id].children.is_empty()).collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes[1..].iter().filter(|n| n.children.is_empty()).count()
    }

    pub fn kind_counts(&self) -> BTreeMap<Kind, usize> {
        let mut counts = BTreeMap::new();
        for node in &self.nodes {
            *counts.entry(node.kind).or_insert(0) += 1;
        }
        counts
    }

    /// Kinds of every node in preorder.
    pub fn kind_sequence(&self) -> Vec<Kind> {
        self.preorder().into_iter().map(|id| self.nodes[id].kind).collect()
    }

    /// Root-to-leaf kind paths, one per leaf, starting at the statement-level
    /// ancestor (the child of the root).
    pub fn statement_paths(&self) -> Vec<Vec<Kind>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        for &stmt in &self.nodes[0].children {
            self.collect_paths(stmt, &mut path, &mut out);
        }
        out
    }

    fn collect_paths(&self, id: NodeId, path: &mut Vec<Kind>, out: &mut Vec<Vec<Kind>>) {
        let node = &self.nodes[id];
        path.push(node.kind);
        if node.children.is_empty() {
            out.push(path.clone());
        } else {
            for &child in &node.children {
                self.collect_paths(child, path, out);
            }
        }
        path.pop();
    }

    /// Merges the statements of `other` after the statements of `self`.
    pub fn extend_with(&mut self, other: &TokenTree) {
        for &stmt in &other.nodes[0].children {
            self.copy_from(other, stmt, 0);
        }
    }

    fn copy_from(&mut self, other: &TokenTree, src: NodeId, parent: NodeId) {
        let id = self.add_child(parent, other.nodes[src].kind);
        for &child in &other.nodes[src].children {
            self.copy_from(other, child, id);
        }
    }

    /// Renders the tree as srcML-style XML with element names only.
    pub fn to_xml(&self) -> String {
        let mut out = String::new();
        self.write_xml(0, 0, &mut out);
        out
    }

    fn write_xml(&self, id: NodeId, depth: usize, out: &mut String) {
        let node = &self.nodes[id];
        let indent = "  ".repeat(depth);
        if node.children.is_empty() {
            let _ = writeln!(out, "{indent}<{}/>", node.kind);
        } else {
            let _ = writeln!(out, "{indent}<{}>", node.kind);
            for &child in &node.children {
                self.write_xml(child, depth + 1, out);
            }
            let _ = writeln!(out, "{indent}</{}>", node.kind);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TokenTree {
        TokenTree::from_statements(vec![SyntaxNode::with(
            Kind::ExprStmt,
            vec![SyntaxNode::with(
                Kind::Expr,
                vec![SyntaxNode::leaf(Kind::Name), SyntaxNode::leaf(Kind::Operator), SyntaxNode::leaf(Kind::Literal)],
            )],
        )])
    }

    #[test]
    fn root_only_tree_has_no_leaves() {
        let tree = TokenTree::new();
        assert_eq!(tree.leaf_count(), 0);
        assert!(tree.leaves().is_empty());
        assert!(tree.statement_paths().is_empty());
        assert_eq!(tree.to_xml(), "<unit/>\n");
    }

    #[test]
    fn preorder_layout_and_paths() {
        let tree = sample();
        assert_eq!(tree.len(), 6);
        assert_eq!(tree.leaf_count(), 3);
        assert_eq!(tree.leaves(), vec![3, 4, 5]);
        let paths = tree.statement_paths();
        assert_eq!(paths[0], vec![Kind::ExprStmt, Kind::Expr, Kind::Name]);
        assert_eq!(paths.len(), 3);
    }

    #[test]
    fn extend_concatenates_statements() {
        let mut a = sample();
        a.extend_with(&sample());
        assert_eq!(a.statement_count(), 2);
        assert_eq!(a.leaf_count(), 6);
        assert_eq!(a.preorder(), (0..a.len()).collect::<Vec<_>>());
    }

    #[test]
    #[should_panic]
    fn nested_unit_rejected() {
        let mut tree = TokenTree::new();
        tree.add_child(0, Kind::Unit);
    }
}
