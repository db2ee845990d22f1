//! Exact counting, enumeration and uniform sampling of k-phylogenetic trees,
//! and the rank statistics of their vertices.
//!
//! A k-phylogenetic tree on `[n]` is a rooted non-plane tree whose leaves are
//! labeled bijectively by `1..=n` and whose internal vertices all have exactly
//! `k` children. The rank of a vertex is its distance to the nearest leaf
//! below it.

pub mod combinatorics;
pub mod enumerate;
pub mod error;
pub mod exactcount;
pub mod report;
pub mod sampler;
pub mod seriesoracle;
pub mod stats;
pub mod tree;

pub use enumerate::{brute_census, enumerate_all, enumerate_all_capped, enumerate_sorted, TreeStream};
pub use error::{Error, Result};
pub use exactcount::{
    c_index, coeff_t_pow, is_admissible, labeled_t_pow, log_concavity_check, negligibility_ratio, rank_eq_limit,
    rank_ge_limit, CountTable, ExactCensus, LimitDistribution,
};
pub use sampler::{sample_batch, sample_uniform, SamplerState};
pub use seriesoracle::TruncatedSeries;
pub use stats::{chi_square_uniformity, convergence_table, estimate_rank_distribution};
pub use tree::{Node, RankCensus, Tree, VertexId, Violation};
