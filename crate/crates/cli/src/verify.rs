//! The `verify` suite: every count is computed by enumeration, by the integer
//! recurrences, by the closed forms and from the truncated series, and the
//! four must agree exactly.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use kphylo::enumerate::{enumerate_sorted, write_newick_lines, DEFAULT_CAP};
use kphylo::exactcount::{internal_count, labeled_t_pow};
use kphylo::seriesoracle::{
    oracle_m, oracle_r, oracle_r_recursive, solve_t, verify_inverse, verify_theorem_decomposition,
};
use kphylo::{chi_square_uniformity, CountTable, Error, RankCensus, Result};
use serde::Serialize;

/// Ranks checked for `r_i`, `m_i` and `e_i`.
const MAX_RANK: u32 = 3;

/// Largest support used for the sampler check.
const CHI_SUPPORT: u64 = 1000;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub k: u32,
    pub n_max: usize,
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn agree(name: String, values: &[(&str, String)]) -> Check {
    let passed = values.windows(2).all(|w| w[0].1 == w[1].1);
    let detail = values
        .iter()
        .map(|(src, v)| format!("{src}={v}"))
        .collect::<Vec<_>>()
        .join(" ");
    Check { name, passed, detail }
}

fn identity(name: String, passed: bool) -> Check {
    let detail = if passed { "exact" } else { "mismatch" }.to_string();
    Check { name, passed, detail }
}

/// Brute-force counts on `[n]`: trees, root rank census and vertex census.
struct Brute {
    trees: u64,
    root_ge: Vec<u64>,
    vertices: RankCensus,
}

fn brute(k: u32, n: usize, dump: Option<&mut BufWriter<File>>) -> Result<Brute> {
    let trees = enumerate_sorted(k, n)?;
    let mut root_ge = vec![0u64; MAX_RANK as usize + 1];
    let mut vertices = RankCensus::new(MAX_RANK);
    for t in &trees {
        let root = t.ranks()[0];
        for (i, c) in root_ge.iter_mut().enumerate() {
            if root >= i as u32 {
                *c += 1;
            }
        }
        vertices.merge(&t.census(MAX_RANK));
    }
    if let Some(w) = dump {
        write_newick_lines(trees.iter().cloned(), w)
            .map_err(|e| Error::Domain(format!("cannot write newick dump: {e}")))?;
    }
    Ok(Brute {
        trees: trees.len() as u64,
        root_ge,
        vertices,
    })
}

pub fn run(k: u32, n_max: usize, seed: u64, workers: usize, dump: Option<&Path>) -> Result<VerifyReport> {
    internal_count(k, n_max)?;
    let mut dump = match dump {
        Some(p) => {
            Some(BufWriter::new(File::create(p).map_err(|e| {
                Error::Domain(format!("cannot create {}: {e}", p.display()))
            })?))
        }
        None => None,
    };
    let order = n_max.max(2);
    let table = CountTable::with_max_rank(k, n_max, MAX_RANK + 1)?;
    let t_series = solve_t(k, order)?;
    let r_series = (0..=MAX_RANK)
        .map(|i| oracle_r(k, i, order))
        .collect::<Result<Vec<_>>>()?;
    let m_series = (0..=MAX_RANK + 1)
        .map(|i| oracle_m(k, i, order))
        .collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::new();

    for n in 1..=n_max {
        if internal_count(k, n)?.is_none() {
            continue;
        }
        let b = if labeled_t_pow(k, 1, n)? <= DEFAULT_CAP.into() {
            Some(brute(k, n, dump.as_mut())?)
        } else {
            None
        };
        let with_brute = |mut v: Vec<(&'static str, String)>, brute: Option<u64>| {
            if let Some(x) = brute {
                v.insert(0, ("enumeration", x.to_string()));
            }
            v
        };

        checks.push(agree(
            format!("t n={n}"),
            &with_brute(
                vec![
                    ("recurrence", table.tree_count_recurrence(n)?.to_string()),
                    ("closed_form", labeled_t_pow(k, 1, n)?.to_string()),
                    ("series", t_series.labeled_coeff(n)?.to_string()),
                ],
                b.as_ref().map(|b| b.trees),
            ),
        ));
        for i in 0..=MAX_RANK {
            // root_rank_count and rank_ge_count fail unless the recurrence
            // matches the closed form, so a success here covers both.
            checks.push(agree(
                format!("r_{i} n={n}"),
                &with_brute(
                    vec![
                        ("recurrence+closed_form", table.root_rank_count(i, n)?.to_string()),
                        ("series", r_series[i as usize].labeled_coeff(n)?.to_string()),
                    ],
                    b.as_ref().map(|b| b.root_ge[i as usize]),
                ),
            ));
            checks.push(agree(
                format!("m_{i} n={n}"),
                &with_brute(
                    vec![
                        ("recurrence", table.rank_ge_recurrence(i, n)?.to_string()),
                        ("closed_form", table.rank_ge_count(i, n)?.to_string()),
                        ("series", m_series[i as usize].labeled_coeff(n)?.to_string()),
                    ],
                    b.as_ref().map(|b| b.vertices.rank_ge(i)),
                ),
            ));
            let series_e = m_series[i as usize].labeled_coeff(n)? - m_series[i as usize + 1].labeled_coeff(n)?;
            checks.push(agree(
                format!("e_{i} n={n}"),
                &with_brute(
                    vec![
                        (
                            "recurrence",
                            table.rank_census(n, MAX_RANK)?.by_rank[i as usize].to_string(),
                        ),
                        ("series", series_e.to_string()),
                    ],
                    b.as_ref().map(|b| b.vertices.by_rank[i as usize]),
                ),
            ));
        }
    }

    checks.push(identity(
        format!("inverse F(T)=x order={order}"),
        verify_inverse(k, order)?,
    ));
    for i in 0..=MAX_RANK {
        let closed = &r_series[i as usize];
        checks.push(identity(
            format!("R_{i} closed form = iterated order={order}"),
            *closed == oracle_r_recursive(k, i, order)?,
        ));
        checks.push(identity(
            format!("M_{i} decomposition order={order}"),
            verify_theorem_decomposition(k, i, order)?,
        ));
    }

    // Sampler: the largest n whose support is nontrivial and small enough.
    let chi_n = (2..=n_max)
        .rev()
        .filter(|&n| internal_count(k, n).ok().flatten().is_some())
        .find(|&n| labeled_t_pow(k, 1, n).is_ok_and(|c| c <= CHI_SUPPORT.into()));
    if let Some(n) = chi_n {
        let support: u64 = labeled_t_pow(k, 1, n)?.try_into().expect("support below cap");
        let r = chi_square_uniformity(&table, n, 100 * support, seed, workers)?;
        let critical = r.critical.map_or("-".to_string(), |c| format!("{c:.4}"));
        checks.push(Check {
            name: format!("chi-square uniformity n={n}"),
            passed: r.passed,
            detail: format!(
                "samples={} df={} statistic={:.4} critical={critical}",
                r.samples, r.df, r.statistic
            ),
        });
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        k,
        n_max,
        passed,
        checks,
    })
}
