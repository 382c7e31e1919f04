//! Newick input and canonical Newick output.
//!
//! Accepted inputs are binary trees whose root has two or three children.
//! Branch lengths and internal labels are read and thrown away. Output is
//! canonical: for three or more taxa the tree is written from the vertex
//! adjacent to the smallest taxon, and children are ordered by the smallest
//! taxon they contain, so equal strings mean isomorphic trees.

use crate::error::NewickError;
use crate::tree::{PhyloTree, Taxon};

#[derive(Default)]
struct Node {
    children: Vec<usize>,
    label: Option<String>,
}

fn is_label_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-')
}

fn is_length_byte(b: u8) -> bool {
    b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E')
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn err(&self, msg: impl Into<String>) -> NewickError {
        NewickError::Syntax { pos: self.pos, msg: msg.into() }
    }

    fn take_while(&mut self, f: impl Fn(u8) -> bool) -> &str {
        let start = self.pos;
        while self.pos < self.bytes.len() && f(self.bytes[self.pos]) {
            self.pos += 1;
        }
        // only ASCII bytes are accepted by the predicates
        std::str::from_utf8(&self.bytes[start..self.pos]).unwrap_or_default()
    }

    /// Optional `:length` suffix.
    fn branch_length(&mut self) -> Result<(), NewickError> {
        if self.peek() == Some(b':') {
            self.pos += 1;
            self.skip_ws();
            let s = self.take_while(is_length_byte).to_string();
            if s.parse::<f64>().is_err() {
                return Err(self.err(format!("invalid branch length `{s}`")));
            }
        }
        Ok(())
    }
}

/// Parses one `;`-terminated Newick tree.
pub fn parse_newick(text: &str) -> Result<PhyloTree, NewickError> {
    let mut cur = Cursor { bytes: text.as_bytes(), pos: 0 };
    let mut nodes: Vec<Node> = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    let mut root = None;
    let mut expect_item = true;

    loop {
        let Some(b) = cur.peek() else {
            return Err(if open.is_empty() {
                cur.err("missing ';'")
            } else {
                cur.err("unbalanced parentheses")
            });
        };
        if expect_item {
            if b == b'(' {
                cur.pos += 1;
                let id = nodes.len();
                nodes.push(Node::default());
                if let Some(&top) = open.last() {
                    nodes[top].children.push(id);
                }
                open.push(id);
            } else if is_label_byte(b) {
                let label = cur.take_while(is_label_byte).to_string();
                let id = nodes.len();
                nodes.push(Node { children: Vec::new(), label: Some(label) });
                cur.branch_length()?;
                match open.last() {
                    Some(&top) => nodes[top].children.push(id),
                    None => root = Some(id),
                }
                expect_item = false;
            } else {
                return Err(cur.err("expected a label or '('"));
            }
            continue;
        }
        match b {
            b',' => {
                if open.is_empty() {
                    return Err(cur.err("',' outside parentheses"));
                }
                cur.pos += 1;
                expect_item = true;
            }
            b')' => {
                let Some(id) = open.pop() else {
                    return Err(cur.err("unbalanced parentheses"));
                };
                cur.pos += 1;
                cur.skip_ws();
                // internal labels are discarded
                cur.take_while(is_label_byte);
                cur.branch_length()?;
                if open.is_empty() {
                    root = Some(id);
                }
            }
            b';' => {
                if !open.is_empty() {
                    return Err(cur.err("unbalanced parentheses"));
                }
                cur.pos += 1;
                if cur.peek().is_some() {
                    return Err(cur.err("trailing characters after ';'"));
                }
                break;
            }
            _ => {
                return Err(cur.err(if root.is_some() && open.is_empty() {
                    "expected ';'"
                } else {
                    "expected ',' or ')'"
                }))
            }
        }
        if root.is_some() && open.is_empty() && cur.peek() != Some(b';') {
            return Err(cur.err("expected ';'"));
        }
    }

    let root = root.ok_or(NewickError::Empty)?;
    build_tree(nodes, root)
}

fn build_tree(nodes: Vec<Node>, root: usize) -> Result<PhyloTree, NewickError> {
    let n = nodes.len();
    let mut seen = std::collections::HashSet::new();
    for node in &nodes {
        if let Some(l) = &node.label {
            if !seen.insert(l.as_str()) {
                return Err(NewickError::DuplicateLabel(l.clone()));
            }
        }
    }
    for (id, node) in nodes.iter().enumerate() {
        if node.label.is_some() {
            continue;
        }
        let c = node.children.len();
        let ok = if id == root { c == 2 || c == 3 } else { c == 2 };
        if !ok {
            let degree = if id == root { c } else { c + 1 };
            return Err(NewickError::BadDegree { degree });
        }
    }
    let mut adj = vec![Vec::new(); n];
    for (id, node) in nodes.iter().enumerate() {
        for &c in &node.children {
            adj[id].push(c);
            adj[c].push(id);
        }
    }
    let label: Vec<Option<Taxon>> = nodes.into_iter().map(|n| n.label).collect();
    PhyloTree::normalized(adj, label).map_err(|_| NewickError::Empty)
}

/// Parses a text with one tree per non-blank line. Errors carry the 1-based line number.
pub fn parse_newick_lines(text: &str) -> Result<Vec<PhyloTree>, (usize, NewickError)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_newick(l).map_err(|e| (i + 1, e)))
        .collect()
}

/// Canonical Newick string of a tree.
pub fn write_newick(tree: &PhyloTree) -> String {
    let taxa: Vec<&str> = tree.taxa().collect();
    match taxa.len() {
        1 => return format!("{};", taxa[0]),
        2 => return format!("({},{});", taxa[0], taxa[1]),
        _ => {}
    }
    let root = tree.neighbors(tree.min_leaf())[0];
    let rooted = tree.rooted(root);
    // (smallest taxon, text) per vertex, filled bottom-up
    let mut parts: Vec<Option<(String, String)>> = vec![None; tree.num_vertices()];
    for &v in rooted.order.iter().rev() {
        if let Some(l) = tree.label(v) {
            parts[v] = Some((l.to_string(), l.to_string()));
            continue;
        }
        let mut kids: Vec<(String, String)> = rooted
            .children(tree, v)
            .map(|c| parts[c].take().expect("children are processed first"))
            .collect();
        kids.sort();
        let min = kids[0].0.clone();
        let body: Vec<String> = kids.into_iter().map(|(_, s)| s).collect();
        parts[v] = Some((min, format!("({})", body.join(","))));
    }
    let (_, text) = parts[root].take().expect("root processed");
    text + ";"
}
