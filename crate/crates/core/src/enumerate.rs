//! Exhaustive enumeration of all k-phylogenetic trees on `[n]`.
//!
//! A tree on a label set `S` is either a single leaf or a root whose `k`
//! children are trees on the blocks of a set partition of `S`. Partitions are
//! generated as restricted growth strings, so each unordered partition is
//! produced once, with blocks ordered by their smallest label.

use std::io::{self, Write};

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::exactcount::{internal_count, labeled_t_pow};
use crate::tree::{Node, RankCensus, Tree};

/// Default bound on the number of trees an enumeration may produce.
pub const DEFAULT_CAP: u64 = 10_000_000;

type NodeIter = Box<dyn Iterator<Item = Node> + Send>;

/// Set partitions of `labels` into exactly `k` blocks whose sizes are all
/// admissible leaf counts.
struct Partitions {
    labels: Vec<u32>,
    k: usize,
    /// Restricted growth string: `rgs[j]` is the block of `labels[j]`.
    rgs: Vec<usize>,
    done: bool,
}

impl Partitions {
    fn new(labels: Vec<u32>, k: usize) -> Self {
        let len = labels.len();
        let done = len < k;
        Partitions {
            labels,
            k,
            rgs: vec![0; len],
            done,
        }
    }

    /// Advances to the next restricted growth string with values below `k`.
    fn advance(&mut self) -> bool {
        let len = self.rgs.len();
        for pos in (1..len).rev() {
            let max_before = self.rgs[..pos].iter().copied().max().unwrap_or(0);
            if self.rgs[pos] <= max_before && self.rgs[pos] + 1 < self.k {
                self.rgs[pos] += 1;
                for r in &mut self.rgs[pos + 1..] {
                    *r = 0;
                }
                return true;
            }
        }
        false
    }

    fn blocks(&self) -> Option<Vec<Vec<u32>>> {
        let mut blocks = vec![Vec::new(); self.k];
        for (&b, &l) in self.rgs.iter().zip(&self.labels) {
            blocks[b].push(l);
        }
        let step = self.k - 1;
        let ok = blocks.iter().all(|b| !b.is_empty() && (b.len() - 1) % step == 0);
        ok.then_some(blocks)
    }
}

impl Iterator for Partitions {
    type Item = Vec<Vec<u32>>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let current = self.blocks();
            if !self.advance() {
                self.done = true;
            }
            if current.is_some() {
                return current;
            }
        }
        None
    }
}

/// All trees on `labels`, children in block order (not yet canonical).
fn trees_on(k: usize, labels: Vec<u32>) -> NodeIter {
    if labels.len() == 1 {
        return Box::new(std::iter::once(Node::Leaf(labels[0])));
    }
    Box::new(Partitions::new(labels, k).flat_map(move |blocks| product(k, blocks, Vec::new()).map(Node::Internal)))
}

/// Every choice of one tree per remaining block, appended to `prefix`.
fn product(k: usize, mut blocks: Vec<Vec<u32>>, prefix: Vec<Node>) -> Box<dyn Iterator<Item = Vec<Node>> + Send> {
    if blocks.is_empty() {
        return Box::new(std::iter::once(prefix));
    }
    let first = blocks.remove(0);
    Box::new(trees_on(k, first).flat_map(move |t| {
        let mut p = prefix.clone();
        p.push(t);
        product(k, blocks.clone(), p)
    }))
}

/// A lazy stream of canonical trees.
pub struct TreeStream {
    k: u32,
    inner: NodeIter,
}

impl Iterator for TreeStream {
    type Item = Tree;

    fn next(&mut self) -> Option<Tree> {
        self.inner
            .next()
            .map(|node| Tree::new(self.k, node).expect("enumerated trees satisfy the invariants"))
    }
}

/// Streams every k-phylogenetic tree on `[n]` exactly once, in a fixed
/// deterministic order. Empty for inadmissible `n`.
pub fn enumerate_all(k: u32, n: usize) -> Result<TreeStream> {
    enumerate_all_capped(k, n, DEFAULT_CAP)
}

pub fn enumerate_all_capped(k: u32, n: usize, cap: u64) -> Result<TreeStream> {
    if internal_count(k, n)?.is_none() {
        return Ok(TreeStream {
            k,
            inner: Box::new(std::iter::empty()),
        });
    }
    let count = labeled_t_pow(k, 1, n)?;
    if count > BigUint::from(cap) {
        return Err(Error::TooLarge {
            count: count.to_string(),
            cap,
        });
    }
    let labels: Vec<u32> = (1..=n as u32).collect();
    Ok(TreeStream {
        k,
        inner: trees_on(k as usize, labels),
    })
}

/// All trees on `[n]`, sorted by canonical Newick string.
pub fn enumerate_sorted(k: u32, n: usize) -> Result<Vec<Tree>> {
    let mut keyed: Vec<(String, Tree)> = enumerate_all(k, n)?.map(|t| (t.to_newick(), t)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(keyed.into_iter().map(|(_, t)| t).collect())
}

/// Per-rank vertex counts summed over every tree on `[n]`.
pub fn brute_census(k: u32, n: usize, max_rank: u32) -> Result<RankCensus> {
    let mut census = RankCensus::new(max_rank);
    for tree in enumerate_all(k, n)? {
        census.merge(&tree.census(max_rank));
    }
    Ok(census)
}

/// Writes one canonical Newick line per tree; returns the number written.
pub fn write_newick_lines<W: Write>(trees: impl Iterator<Item = Tree>, mut out: W) -> io::Result<u64> {
    let mut written = 0;
    for t in trees {
        writeln!(out, "{}", t.to_newick())?;
        written += 1;
    }
    out.flush()?;
    Ok(written)
}
