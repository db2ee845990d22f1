//! Exactly uniform random k-phylogenetic trees by the recursive method.
//!
//! For a vertex with `m` leaves below it, the ordered sizes `(n_1, ..., n_k)`
//! of its child subtrees are drawn with probability
//! `multinomial(m; n_1..n_k) * prod t(n_j) / (k! t(m))`, one part at a time:
//! with `j` parts left to place on `r` labels, part size `a` has weight
//! `C(r, a) t(a) P_{j-1}(r - a)` out of `P_j(r)`, where `P_j` counts ordered
//! `j`-tuples of trees. Labels are dealt to the parts by a uniform shuffle.
//! Sibling subtrees have disjoint label sets, so every unordered set of
//! children arises from exactly `k!` ordered tuples and forgetting the order
//! keeps the result uniform.
//!
//! All weights are exact integers compared against a uniform integer draw,
//! so there is no floating-point bias at any size.

use num_bigint::{BigUint, RandBigInt};
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::combinatorics::binomial;
use crate::error::{Error, Result};
use crate::exactcount::{internal_count, CountTable};
use crate::tree::{Node, Tree};

/// Generator for sample `counter` of a run seeded with `seed`. Each counter
/// selects an independent ChaCha stream, so the output of a batch does not
/// depend on how samples are scheduled across threads.
pub fn sample_rng(seed: u64, counter: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(counter);
    rng
}

/// A count table plus the seed schedule for reproducible sampling.
#[derive(Debug, Clone, Copy)]
pub struct SamplerState<'a> {
    pub table: &'a CountTable,
    pub seed: u64,
    pub counter: u64,
}

impl<'a> SamplerState<'a> {
    pub fn new(table: &'a CountTable, seed: u64) -> Self {
        SamplerState {
            table,
            seed,
            counter: 0,
        }
    }

    /// Draws the tree for the current counter and advances it.
    pub fn sample(&mut self, n: usize) -> Result<Tree> {
        let mut rng = sample_rng(self.seed, self.counter);
        self.counter += 1;
        sample_uniform(self.table, n, &mut rng)
    }
}

fn check_request(table: &CountTable, n: usize) -> Result<()> {
    let k = table.k();
    if internal_count(k, n)?.is_none() {
        return Err(Error::Inadmissible { k, n });
    }
    if n > table.n_max() {
        return Err(Error::TableTooSmall {
            k,
            have: table.n_max(),
            rank_rows: 0,
            need: n,
            need_rank: 0,
        });
    }
    Ok(())
}

/// One uniformly random tree on `[n]`.
pub fn sample_uniform<R: Rng + ?Sized>(table: &CountTable, n: usize, rng: &mut R) -> Result<Tree> {
    check_request(table, n)?;
    let mut labels: Vec<u32> = (1..=n as u32).collect();
    labels.shuffle(rng);
    let root = grow(table, &labels, rng)?;
    Tree::new(table.k(), root)
}

/// Builds a uniform tree on the labels in `labels`, whose order is already
/// a uniform permutation.
fn grow<R: Rng + ?Sized>(table: &CountTable, labels: &[u32], rng: &mut R) -> Result<Node> {
    if labels.len() == 1 {
        return Ok(Node::Leaf(labels[0]));
    }
    let sizes = draw_composition(table, labels.len(), rng)?;
    let mut children = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for size in sizes {
        children.push(grow(table, &labels[start..start + size], rng)?);
        start += size;
    }
    Ok(Node::Internal(children))
}

/// Ordered child-subtree sizes for a vertex with `m` leaves below it.
pub fn draw_composition<R: Rng + ?Sized>(table: &CountTable, m: usize, rng: &mut R) -> Result<Vec<usize>> {
    let k = table.k() as usize;
    let mut sizes = Vec::with_capacity(k);
    let mut remaining = m;
    for parts in (2..=k).rev() {
        let a = draw_part(table, remaining, parts, rng)?;
        sizes.push(a);
        remaining -= a;
    }
    sizes.push(remaining);
    Ok(sizes)
}

/// Size of the next part when `parts` trees are still to be placed on `r`
/// labels. Candidate sizes are scanned alternately from both ends, where
/// nearly all the mass sits, so a draw usually inspects a handful of terms.
fn draw_part<R: Rng + ?Sized>(table: &CountTable, r: usize, parts: usize, rng: &mut R) -> Result<usize> {
    let total = table.ordered_forest_count(parts, r)?;
    if total.is_zero() {
        return Err(Error::consistency(format!(
            "no {parts}-tuple of trees covers {r} labels"
        )));
    }
    let target = rng.gen_biguint_below(total);
    let t = |a: usize| table.ordered_forest_count(1, a);
    let rest = |b: usize| table.ordered_forest_count(parts - 1, b);

    let (mut lo, mut hi) = (1usize, r - (parts - 1));
    let mut c_lo = BigUint::from(r);
    let mut c_hi = binomial(r as u64, hi as u64);
    let mut acc = BigUint::zero();
    let mut from_low = true;
    while lo <= hi {
        let (a, c) = if from_low { (lo, &c_lo) } else { (hi, &c_hi) };
        let (ta, tb) = (t(a)?, rest(r - a)?);
        if !ta.is_zero() && !tb.is_zero() {
            acc += c * ta * tb;
            if acc > target {
                return Ok(a);
            }
        }
        if from_low {
            c_lo = c_lo * (r - lo) / (lo + 1);
            lo += 1;
        } else {
            c_hi = c_hi * hi / (r - hi + 1);
            hi -= 1;
        }
        if lo <= hi {
            from_low = !from_low;
        }
    }
    Err(Error::consistency(format!(
        "part weights for r={r}, parts={parts} sum to {acc}, expected {total}"
    )))
}

/// Applies `f` to `count` independent uniform trees. Sample `j` always uses
/// [`sample_rng`]`(base_seed, j)`; results come back in index order no matter
/// how many `workers` run.
pub fn sample_batch_map<T, F>(
    table: &CountTable,
    n: usize,
    count: u64,
    base_seed: u64,
    workers: usize,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Tree) -> T + Sync,
{
    check_request(table, n)?;
    let run = || {
        (0..count)
            .into_par_iter()
            .map(|j| {
                let mut rng = sample_rng(base_seed, j);
                sample_uniform(table, n, &mut rng).map(&f)
            })
            .collect::<Result<Vec<T>>>()
    };
    if workers <= 1 {
        return (0..count)
            .map(|j| sample_uniform(table, n, &mut sample_rng(base_seed, j)).map(&f))
            .collect();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::domain(format!("cannot start {workers} workers: {e}")))?
        .install(run)
}

pub fn sample_batch(table: &CountTable, n: usize, count: u64, base_seed: u64, workers: usize) -> Result<Vec<Tree>> {
    sample_batch_map(table, n, count, base_seed, workers, |t| t)
}
