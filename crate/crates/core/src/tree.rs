//! Rooted, non-plane, leaf-labeled trees in which every internal vertex has
//! exactly `k` children.
//!
//! Children are stored in canonical order: ascending by the byte-wise order
//! of their canonical Newick strings. Since sibling subtrees have disjoint
//! label sets their strings differ, so the order is total and two trees are
//! semantically equal exactly when they are structurally equal. Internal
//! subtrees sort before leaves (`'('` precedes every digit).

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Leaf(u32),
    Internal(Vec<Node>),
}

impl Node {
    pub fn internal(children: impl IntoIterator<Item = Node>) -> Node {
        Node::Internal(children.into_iter().collect())
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf(_))
    }

    /// Appends this subtree's Newick form (no terminating `;`).
    pub fn write_newick(&self, out: &mut String) {
        match self {
            Node::Leaf(label) => {
                use std::fmt::Write;
                let _ = write!(out, "{label}");
            }
            Node::Internal(children) => {
                out.push('(');
                for (j, c) in children.iter().enumerate() {
                    if j > 0 {
                        out.push(',');
                    }
                    c.write_newick(out);
                }
                out.push(')');
            }
        }
    }

    pub fn newick(&self) -> String {
        let mut s = String::new();
        self.write_newick(&mut s);
        s
    }

    /// Sorts children at every level, returning the canonical subtree string.
    fn canonicalize(&mut self) -> String {
        match self {
            Node::Leaf(label) => label.to_string(),
            Node::Internal(children) => {
                let mut keyed: Vec<(String, Node)> = children.drain(..).map(|mut c| (c.canonicalize(), c)).collect();
                keyed.sort_by(|a, b| a.0.cmp(&b.0));
                let mut s = String::from("(");
                for (j, (key, child)) in keyed.into_iter().enumerate() {
                    if j > 0 {
                        s.push(',');
                    }
                    s.push_str(&key);
                    children.push(child);
                }
                s.push(')');
                s
            }
        }
    }

    fn count(&self) -> (usize, usize) {
        match self {
            Node::Leaf(_) => (1, 0),
            Node::Internal(children) => children.iter().fold((0, 1), |(l, i), c| {
                let (cl, ci) = c.count();
                (l + cl, i + ci)
            }),
        }
    }

    /// Smallest leaf label in the subtree.
    pub fn min_label(&self) -> u32 {
        match self {
            Node::Leaf(label) => *label,
            Node::Internal(children) => children.iter().map(Node::min_label).min().unwrap_or(u32::MAX),
        }
    }
}

/// The first broken tree invariant found by [`Tree::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
pub enum Violation {
    #[error("branching factor k={0} is below 2")]
    BadK(u32),
    #[error("vertex {vertex} has {children} children, expected {k}")]
    Arity { vertex: usize, children: usize, k: u32 },
    #[error("leaf label {label} is outside 1..={n}")]
    LabelOutOfRange { label: u32, n: usize },
    #[error("leaf label {0} appears more than once")]
    DuplicateLabel(u32),
    #[error("children of vertex {vertex} are not in canonical order")]
    NotCanonical { vertex: usize },
}

/// Preorder index of a vertex; the root is 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tree {
    k: u32,
    root: Node,
}

impl Tree {
    /// Canonicalizes `root` and checks every invariant.
    pub fn new(k: u32, mut root: Node) -> Result<Tree> {
        root.canonicalize();
        let tree = Tree { k, root };
        tree.validate()?;
        Ok(tree)
    }

    /// Wraps `root` as is. The result may violate the tree invariants; see
    /// [`Tree::validate`].
    pub fn from_parts_unchecked(k: u32, root: Node) -> Tree {
        Tree { k, root }
    }

    pub fn leaf(k: u32) -> Tree {
        Tree { k, root: Node::Leaf(1) }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn into_root(self) -> Node {
        self.root
    }

    pub fn leaf_count(&self) -> usize {
        self.root.count().0
    }

    pub fn internal_count(&self) -> usize {
        self.root.count().1
    }

    pub fn vertex_count(&self) -> usize {
        let (l, i) = self.root.count();
        l + i
    }

    pub fn validate(&self) -> std::result::Result<(), Violation> {
        if self.k < 2 {
            return Err(Violation::BadK(self.k));
        }
        let n = self.leaf_count();
        let mut seen = vec![false; n + 1];
        let mut next_id = 0;
        self.validate_node(&self.root, n, &mut seen, &mut next_id)?;
        Ok(())
    }

    /// Returns the subtree's canonical string so parents can check order.
    fn validate_node(
        &self,
        node: &Node,
        n: usize,
        seen: &mut [bool],
        next_id: &mut usize,
    ) -> std::result::Result<String, Violation> {
        let id = *next_id;
        *next_id += 1;
        match node {
            Node::Leaf(label) => {
                let l = *label as usize;
                if l == 0 || l > n {
                    return Err(Violation::LabelOutOfRange { label: *label, n });
                }
                if std::mem::replace(&mut seen[l], true) {
                    return Err(Violation::DuplicateLabel(*label));
                }
                Ok(label.to_string())
            }
            Node::Internal(children) => {
                if children.len() != self.k as usize {
                    return Err(Violation::Arity {
                        vertex: id,
                        children: children.len(),
                        k: self.k,
                    });
                }
                let keys = children
                    .iter()
                    .map(|c| self.validate_node(c, n, seen, next_id))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                if keys.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Violation::NotCanonical { vertex: id });
                }
                Ok(format!("({})", keys.join(",")))
            }
        }
    }

    /// Rank of every vertex, in preorder: 0 for leaves, otherwise one more
    /// than the smallest child rank.
    pub fn ranks(&self) -> Vec<u32> {
        fn walk(node: &Node, out: &mut Vec<u32>) -> u32 {
            let slot = out.len();
            out.push(0);
            let r = match node {
                Node::Leaf(_) => 0,
                Node::Internal(children) => 1 + children.iter().map(|c| walk(c, out)).min().unwrap_or(0),
            };
            out[slot] = r;
            r
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    pub fn rank_of(&self, v: VertexId) -> Result<u32> {
        self.ranks().get(v.0).copied().ok_or(Error::UnknownVertex(v.0))
    }

    /// Length of the longest root-to-leaf path.
    pub fn height(&self) -> u32 {
        fn h(node: &Node) -> u32 {
            match node {
                Node::Leaf(_) => 0,
                Node::Internal(cs) => 1 + cs.iter().map(h).max().unwrap_or(0),
            }
        }
        h(&self.root)
    }

    /// Per-rank vertex counts; ranks above `max_rank` go to the tail bucket.
    pub fn census(&self, max_rank: u32) -> RankCensus {
        let mut census = RankCensus::new(max_rank);
        for r in self.ranks() {
            census.record(r);
        }
        census
    }

    /// Canonical Newick string, terminated by `;`.
    pub fn to_newick(&self) -> String {
        let mut s = String::new();
        self.root.write_newick(&mut s);
        s.push(';');
        s
    }

    pub fn from_newick(text: &str, k: u32) -> Result<Tree> {
        let root = parse_newick(text)?;
        Tree::new(k, root)
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_newick())
    }
}

/// Vertex counts by exact rank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankCensus {
    /// `by_rank[i]`: vertices of rank exactly `i`, for `i <= max_rank`.
    pub by_rank: Vec<u64>,
    /// Vertices of rank above `max_rank`.
    pub tail: u64,
    pub total: u64,
}

impl RankCensus {
    pub fn new(max_rank: u32) -> Self {
        RankCensus {
            by_rank: vec![0; max_rank as usize + 1],
            tail: 0,
            total: 0,
        }
    }

    pub fn max_rank(&self) -> u32 {
        self.by_rank.len() as u32 - 1
    }

    pub fn record(&mut self, rank: u32) {
        match self.by_rank.get_mut(rank as usize) {
            Some(c) => *c += 1,
            None => self.tail += 1,
        }
        self.total += 1;
    }

    /// Adds another census with the same `max_rank`.
    pub fn merge(&mut self, other: &RankCensus) {
        assert_eq!(self.by_rank.len(), other.by_rank.len(), "census rank ranges differ");
        for (a, b) in self.by_rank.iter_mut().zip(&other.by_rank) {
            *a += b;
        }
        self.tail += other.tail;
        self.total += other.total;
    }

    /// Vertices of rank at least `i`.
    pub fn rank_ge(&self, i: u32) -> u64 {
        self.by_rank.iter().skip(i as usize).sum::<u64>() + self.tail
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn subtree(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let mut children = vec![self.subtree()?];
                loop {
                    match self.peek() {
                        Some(b',') => {
                            self.pos += 1;
                            children.push(self.subtree()?);
                        }
                        Some(b')') => {
                            self.pos += 1;
                            return Ok(Node::Internal(children));
                        }
                        Some(c) => return Err(self.err(format!("expected ',' or ')', found '{}'", c as char))),
                        None => return Err(self.err("unbalanced parenthesis: missing ')'")),
                    }
                }
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
                let label: u32 = digits.parse().map_err(|_| Error::Parse {
                    pos: start,
                    msg: format!("label '{digits}' does not fit in 32 bits"),
                })?;
                if label == 0 {
                    return Err(Error::Parse {
                        pos: start,
                        msg: "labels start at 1".into(),
                    });
                }
                Ok(Node::Leaf(label))
            }
            Some(c) => Err(self.err(format!("expected '(' or a label, found '{}'", c as char))),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

/// Parses a Newick string with positive integer leaf labels and no branch
/// lengths or internal labels. Whitespace between tokens is ignored.
pub fn parse_newick(text: &str) -> Result<Node> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let root = p.subtree()?;
    match p.peek() {
        Some(b';') => p.pos += 1,
        Some(b')') => return Err(p.err("unbalanced parenthesis: unexpected ')'")),
        Some(c) => return Err(p.err(format!("expected ';', found '{}'", c as char))),
        None => return Err(p.err("missing terminating ';'")),
    }
    if p.peek().is_some() {
        return Err(p.err("trailing input after ';'"));
    }
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(l: u32) -> Node {
        Node::Leaf(l)
    }

    fn cherry(a: u32, b: u32) -> Node {
        Node::internal([leaf(a), leaf(b)])
    }

    #[test]
    fn validation() {
        assert!(Tree::new(2, cherry(1, 2)).is_ok());
        let wide = Node::internal([leaf(1), leaf(2), leaf(3)]);
        assert!(matches!(
            Tree::from_parts_unchecked(2, wide).validate(),
            Err(Violation::Arity {
                vertex: 0,
                children: 3,
                k: 2
            })
        ));
        assert!(matches!(
            Tree::from_parts_unchecked(2, cherry(1, 3)).validate(),
            Err(Violation::LabelOutOfRange { label: 3, n: 2 })
        ));
        assert!(matches!(
            Tree::from_parts_unchecked(2, cherry(1, 1)).validate(),
            Err(Violation::DuplicateLabel(1))
        ));
        assert!(matches!(
            Tree::from_parts_unchecked(2, cherry(2, 1)).validate(),
            Err(Violation::NotCanonical { vertex: 0 })
        ));
        assert!(matches!(
            Tree::from_parts_unchecked(1, leaf(1)).validate(),
            Err(Violation::BadK(1))
        ));
    }

    #[test]
    fn ranks() {
        let balanced = Tree::new(2, Node::internal([cherry(1, 2), cherry(3, 4)])).unwrap();
        assert_eq!(balanced.rank_of(VertexId(0)).unwrap(), 2);
        let cat = Tree::new(2, Node::internal([Node::internal([cherry(1, 2), leaf(3)]), leaf(4)])).unwrap();
        assert_eq!(cat.rank_of(VertexId(0)).unwrap(), 1);
        assert!(matches!(cat.rank_of(VertexId(7)), Err(Error::UnknownVertex(7))));
        // leaves are rank 0 wherever they sit
        let ranks = cat.ranks();
        assert_eq!(ranks.iter().filter(|&&r| r == 0).count(), 4);
    }

    #[test]
    fn censuses() {
        let single = Tree::leaf(2);
        assert_eq!(single.census(2).by_rank, vec![1, 0, 0]);
        let balanced = Tree::new(2, Node::internal([cherry(1, 2), cherry(3, 4)])).unwrap();
        assert_eq!(balanced.census(3).by_rank, vec![4, 2, 1, 0]);
        let cat = Tree::new(2, Node::internal([Node::internal([cherry(1, 2), leaf(3)]), leaf(4)])).unwrap();
        let c = cat.census(1);
        assert_eq!(c.by_rank, vec![4, 3]);
        assert_eq!(c.tail, 0);
        assert_eq!(balanced.census(1).tail, 1);
        assert_eq!(balanced.census(1).rank_ge(1), 3);
    }

    #[test]
    fn newick_output() {
        assert_eq!(Tree::new(2, cherry(2, 1)).unwrap().to_newick(), "(1,2);");
        let t = Tree::new(2, Node::internal([cherry(3, 2), cherry(4, 1)])).unwrap();
        assert_eq!(t.to_newick(), "((1,4),(2,3));");
        let star = Tree::new(3, Node::internal([leaf(3), leaf(1), leaf(2)])).unwrap();
        assert_eq!(star.to_newick(), "(1,2,3);");
        // internal subtrees precede leaves
        let t = Tree::new(2, Node::internal([leaf(1), cherry(2, 3)])).unwrap();
        assert_eq!(t.to_newick(), "((2,3),1);");
    }

    #[test]
    fn newick_input() {
        let t = Tree::from_newick("((1,2),3);", 2).unwrap();
        assert_eq!(t.to_newick(), "((1,2),3);");
        let a = Tree::from_newick("(1,(2,3));", 2).unwrap();
        let b = Tree::from_newick(" ( (2 , 3) ,1 ) ; \n", 2).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            Tree::from_newick("((1,2);", 2),
            Err(Error::Parse { pos: 6, .. })
        ));
        assert!(matches!(Tree::from_newick("(1,2)", 2), Err(Error::Parse { .. })));
        assert!(matches!(Tree::from_newick("(1,2));", 2), Err(Error::Parse { .. })));
        assert!(matches!(
            Tree::from_newick("(1,a);", 2),
            Err(Error::Parse { pos: 3, .. })
        ));
        assert!(matches!(Tree::from_newick("(0,1);", 2), Err(Error::Parse { .. })));
        assert!(matches!(Tree::from_newick("(1,2);x", 2), Err(Error::Parse { .. })));
        assert!(matches!(
            Tree::from_newick("(1,2,3);", 2),
            Err(Error::Invalid(Violation::Arity { .. }))
        ));
        assert!(matches!(Tree::from_newick("(1,3);", 2), Err(Error::Invalid(_))));
    }

    #[test]
    fn multi_digit_labels_order_bytewise() {
        let leaves: Vec<Node> = (1..=11).map(leaf).collect();
        let mut root = leaves[0].clone();
        for l in leaves.into_iter().skip(1) {
            root = Node::internal([root, l]);
        }
        let t = Tree::new(2, root).unwrap();
        let s = t.to_newick();
        assert_eq!(Tree::from_newick(&s, 2).unwrap(), t);
        assert_eq!(t.vertex_count(), 21);
        assert_eq!(t.height(), 10);
    }
}
