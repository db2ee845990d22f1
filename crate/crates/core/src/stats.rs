//! Monte Carlo estimates, sampler uniformity tests and exact convergence
//! tables.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::enumerate::enumerate_all_capped;
use crate::error::{Error, Result};
use crate::exactcount::{internal_count, negligibility_ratio, rank_eq_limit, rank_ge_limit, CountTable};
use crate::report::{decimal, ratio_string, ser_ratio, to_rational, SIG_DIGITS};
use crate::sampler::sample_batch_map;
use crate::tree::RankCensus;

/// Largest support the uniformity test will enumerate.
pub const MAX_SUPPORT: u64 = 100_000;

/// Significance level of the uniformity test.
pub const SIGNIFICANCE: f64 = 0.001;

fn ser_decimal<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&decimal(r, SIG_DIGITS))
}

fn frac(p: u64, q: u64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateRow {
    pub rank: u32,
    pub count: u64,
    #[serde(serialize_with = "ser_ratio")]
    pub frequency: BigRational,
    #[serde(serialize_with = "ser_ratio")]
    pub limit: BigRational,
    #[serde(serialize_with = "ser_decimal")]
    pub deviation: BigRational,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub k: u32,
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub max_rank: u32,
    /// Vertices summed over all sampled trees.
    pub vertices: u64,
    pub rows: Vec<EstimateRow>,
    /// Vertices of rank above `max_rank`, against the limiting tail mass.
    pub tail: EstimateRow,
}

impl EstimateReport {
    pub fn max_deviation(&self) -> BigRational {
        self.rows
            .iter()
            .map(|r| r.deviation.clone())
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("rank\tcount\tfrequency\tfrequency_decimal\tlimit\tlimit_decimal\tdeviation\n");
        let rows = self.rows.iter().map(|r| (r.rank.to_string(), r));
        let tail = std::iter::once((format!(">{}", self.max_rank), &self.tail));
        for (label, r) in rows.chain(tail) {
            writeln!(
                out,
                "{label}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.count,
                ratio_string(&r.frequency),
                decimal(&r.frequency, SIG_DIGITS),
                ratio_string(&r.limit),
                decimal(&r.limit, SIG_DIGITS),
                decimal(&r.deviation, SIG_DIGITS),
            )
            .unwrap();
        }
        out
    }
}

/// Samples `samples` trees on `[n]` and compares the rank frequencies over
/// all their vertices with the limiting law.
///
/// Every tree on `[n]` has the same number of vertices, so pooling vertices
/// across trees is the same as picking a uniform tree and then a uniform
/// vertex of it. The vertex count of each sample is checked.
pub fn estimate_rank_distribution(
    table: &CountTable,
    n: usize,
    samples: u64,
    base_seed: u64,
    max_rank: u32,
    workers: usize,
) -> Result<EstimateReport> {
    let k = table.k();
    if samples == 0 {
        return Err(Error::domain("samples must be >= 1"));
    }
    let s = internal_count(k, n)?.ok_or(Error::Inadmissible { k, n })?;
    let expected_vertices = (k as usize * s + 1) as u64;

    let censuses = sample_batch_map(table, n, samples, base_seed, workers, |t| t.census(max_rank))?;
    let mut pooled = RankCensus::new(max_rank);
    for c in &censuses {
        if c.total != expected_vertices {
            return Err(Error::consistency(format!(
                "sampled tree has {} vertices, expected {expected_vertices}",
                c.total
            )));
        }
        pooled.merge(c);
    }

    let row = |rank: u32, count: u64, limit: BigRational| {
        let frequency = frac(count, pooled.total);
        let deviation = (&frequency - &limit).abs();
        EstimateRow {
            rank,
            count,
            frequency,
            limit,
            deviation,
        }
    };
    let rows = (0..=max_rank)
        .map(|i| Ok(row(i, pooled.by_rank[i as usize], rank_eq_limit(k, i)?)))
        .collect::<Result<Vec<_>>>()?;
    let tail = row(max_rank + 1, pooled.tail, rank_ge_limit(k, max_rank + 1)?);
    Ok(EstimateReport {
        k,
        n,
        samples,
        seed: base_seed,
        max_rank,
        vertices: pooled.total,
        rows,
        tail,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ChiSquareReport {
    pub k: u32,
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub support: u64,
    pub df: u64,
    pub statistic: f64,
    /// Upper `SIGNIFICANCE` quantile; absent when the support is one tree.
    pub critical: Option<f64>,
    pub significance: f64,
    pub passed: bool,
}

impl ChiSquareReport {
    pub fn to_tsv(&self) -> String {
        let critical = self.critical.map_or("-".to_string(), |c| format!("{c:.6}"));
        format!(
            "k\tn\tsamples\tseed\tsupport\tdf\tstatistic\tcritical\tsignificance\tpassed\n\
             {}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{critical}\t{}\t{}\n",
            self.k,
            self.n,
            self.samples,
            self.seed,
            self.support,
            self.df,
            self.statistic,
            self.significance,
            self.passed
        )
    }
}

/// Upper `alpha` quantile of the chi-square distribution with `df` degrees
/// of freedom.
pub fn chi_square_critical(df: u64, alpha: f64) -> Result<f64> {
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::domain(format!("chi-square with df={df}: {e}")))?;
    Ok(dist.inverse_cdf(1.0 - alpha))
}

/// Pearson goodness-of-fit of `samples` sampled trees against the uniform
/// law on the full enumerated support.
pub fn chi_square_uniformity(
    table: &CountTable,
    n: usize,
    samples: u64,
    base_seed: u64,
    workers: usize,
) -> Result<ChiSquareReport> {
    let k = table.k();
    if samples == 0 {
        return Err(Error::domain("samples must be >= 1"));
    }
    internal_count(k, n)?.ok_or(Error::Inadmissible { k, n })?;
    let mut observed: HashMap<String, u64> = enumerate_all_capped(k, n, MAX_SUPPORT)?
        .map(|t| (t.to_newick(), 0))
        .collect();
    let support = observed.len() as u64;
    if BigUint::from(support) != table.tree_count(n)? {
        return Err(Error::consistency(format!(
            "enumerated {support} trees, count table disagrees at n={n}"
        )));
    }

    for key in sample_batch_map(table, n, samples, base_seed, workers, |t| t.to_newick())? {
        match observed.get_mut(&key) {
            Some(c) => *c += 1,
            None => {
                return Err(Error::consistency(format!(
                    "sampled tree {key} is not in the enumerated support"
                )))
            }
        }
    }

    let expected = samples as f64 / support as f64;
    let statistic: f64 = observed
        .values()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum();
    let df = support - 1;
    let critical = if df == 0 {
        None
    } else {
        Some(chi_square_critical(df, SIGNIFICANCE)?)
    };
    let passed = critical.is_none_or(|c| statistic < c);
    Ok(ChiSquareReport {
        k,
        n,
        samples,
        seed: base_seed,
        support,
        df,
        statistic,
        critical,
        significance: SIGNIFICANCE,
        passed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    #[serde(serialize_with = "ser_ratio")]
    pub ratio: BigRational,
    #[serde(serialize_with = "ser_ratio")]
    pub gap: BigRational,
    /// `[x^n] T^l / [x^n] M_0` for each requested `l`, in order.
    #[serde(serialize_with = "crate::report::ser_ratios")]
    pub negligibility: Vec<BigRational>,
}

/// `m_i(n) / m_0(n)` along a grid of leaf counts, against its limit `k^{-c_i}`.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub k: u32,
    pub i: u32,
    #[serde(serialize_with = "ser_ratio")]
    pub limit: BigRational,
    pub ells: Vec<usize>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn gaps_nonincreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].gap <= w[0].gap)
    }

    /// True if the column for `ells[col]` strictly decreases along the grid.
    pub fn negligibility_decreasing(&self, col: usize) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].negligibility[col] < w[0].negligibility[col])
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("n\tratio\tratio_decimal\tlimit\tgap");
        for l in &self.ells {
            write!(out, "\tneg_T{l}").unwrap();
        }
        out.push('\n');
        for r in &self.rows {
            write!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                r.n,
                ratio_string(&r.ratio),
                decimal(&r.ratio, SIG_DIGITS),
                ratio_string(&self.limit),
                decimal(&r.gap, SIG_DIGITS)
            )
            .unwrap();
            for v in &r.negligibility {
                write!(out, "\t{}", decimal(v, SIG_DIGITS)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Exact convergence table for rank `i` over `n_grid`, with optional
/// negligibility columns for the powers `ells` of `T`.
pub fn convergence_table(table: &CountTable, i: u32, n_grid: &[usize], ells: &[usize]) -> Result<ConvergenceTable> {
    let k = table.k();
    let limit = rank_ge_limit(k, i)?;
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        internal_count(k, n)?.ok_or(Error::Inadmissible { k, n })?;
        let m_i = table.rank_ge_count(i, n)?;
        let m_0 = table.total_vertex_count(n)?;
        let ratio = to_rational(&m_i) / to_rational(&m_0);
        let gap = (&ratio - &limit).abs();
        let negligibility = ells
            .iter()
            .map(|&l| negligibility_ratio(k, l, n))
            .collect::<Result<Vec<_>>>()?;
        rows.push(ConvergenceRow {
            n,
            ratio,
            gap,
            negligibility,
        });
    }
    Ok(ConvergenceTable {
        k,
        i,
        limit,
        ells: ells.to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_values() {
        assert!((chi_square_critical(2, 0.001).unwrap() - 13.8155).abs() < 1e-3);
        assert!((chi_square_critical(14, 0.001).unwrap() - 36.1233).abs() < 1e-3);
    }

    #[test]
    fn single_leaf_estimate_is_exact() {
        for k in 2..5 {
            let table = CountTable::trees_only(k, 1).unwrap();
            let r = estimate_rank_distribution(&table, 1, 1, 0, 2, 1).unwrap();
            assert_eq!(r.rows[0].frequency, frac(1, 1));
            assert_eq!(r.vertices, 1);
        }
    }

    #[test]
    fn single_support_passes_trivially() {
        let table = CountTable::trees_only(2, 2).unwrap();
        let r = chi_square_uniformity(&table, 2, 50, 3, 1).unwrap();
        assert_eq!((r.support, r.df, r.critical, r.passed), (1, 0, None, true));
    }

    #[test]
    fn small_uniformity() {
        let table = CountTable::trees_only(2, 3).unwrap();
        let r = chi_square_uniformity(&table, 3, 3000, 11, 1).unwrap();
        assert_eq!(r.df, 2);
        assert!(r.passed, "{r:?}");
        assert!(chi_square_uniformity(&table, 4, 10, 1, 1).is_err());
    }

    #[test]
    fn convergence_small_grid() {
        let table = CountTable::new(2, 4).unwrap();
        let c = convergence_table(&table, 1, &[3, 4], &[2]).unwrap();
        assert_eq!(c.rows[0].ratio, frac(2, 5));
        assert_eq!(c.rows[1].ratio, frac(3, 7));
        assert!(c.gaps_nonincreasing());
        let c0 = convergence_table(&table, 0, &[1, 2, 3, 4], &[]).unwrap();
        assert!(c0.rows.iter().all(|r| r.ratio == frac(1, 1)));
        assert!(c0.to_tsv().starts_with("n\tratio"));
    }
}
