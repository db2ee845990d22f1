//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use kphylo::exactcount::{
    labeled_t_pow, log_concavity_check, negligibility_ratio, rank_ge_closed_form, root_rank_closed_form,
};
use kphylo::seriesoracle::{oracle_r, oracle_r_recursive, verify_inverse, verify_theorem_decomposition};
use kphylo::{
    brute_census, chi_square_uniformity, convergence_table, enumerate_all, estimate_rank_distribution, sample_batch,
    CountTable, Tree,
};
use num_bigint::BigUint;
use num_rational::BigRational;

/// Absolute tolerance for limit convergence and Monte Carlo frequencies.
const TOL: (i64, i64) = (1, 100);
/// Bound on the relative weight of T^l at the largest grid point.
const NEGLIGIBLE: (i64, i64) = (1, 1000);
const GRID: [usize; 6] = [3, 11, 101, 501, 1001, 2001];
/// Pinned seeds for the statistical criteria.
const MC_SEED: u64 = 7;
const CHI_SEED: u64 = 2024;

fn rat((p, q): (i64, i64)) -> BigRational {
    BigRational::new(p.into(), q.into())
}

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

/// Enumeration, integer recurrences and closed forms agree on t, r_i, m_i
/// and e_i for i <= 3.
fn triple_oracle() -> Outcome {
    let mut checked = 0;
    for (k, n_max) in [(2u32, 8usize), (3, 7)] {
        let table = CountTable::with_max_rank(k, n_max, 4).map_err(e)?;
        for n in 1..=n_max {
            let trees: Vec<Tree> = enumerate_all(k, n).map_err(e)?.collect();
            let brute_t = BigUint::from(trees.len());
            let rec_t = table.tree_count_recurrence(n).map_err(e)?.clone();
            let closed_t = labeled_t_pow(k, 1, n).map_err(e)?;
            ensure(brute_t == rec_t && rec_t == closed_t, || {
                format!("t k={k} n={n}: {brute_t} / {rec_t} / {closed_t}")
            })?;

            let census = brute_census(k, n, 4).map_err(e)?;
            let mut m = Vec::new();
            for i in 0..=4u32 {
                let brute_m = BigUint::from(census.rank_ge(i));
                let rec_m = table.rank_ge_recurrence(i, n).map_err(e)?;
                let closed_m = rank_ge_closed_form(k, i, n).map_err(e)?;
                ensure(brute_m == rec_m && rec_m == closed_m, || {
                    format!("m_{i} k={k} n={n}: {brute_m} / {rec_m} / {closed_m}")
                })?;
                m.push(rec_m);
            }
            for i in 0..=3u32 {
                let iu = i as usize;
                let brute_r = BigUint::from(trees.iter().filter(|t| t.ranks()[0] >= i).count());
                let rec_r = table.root_rank_recurrence(i, n).map_err(e)?;
                let closed_r = root_rank_closed_form(k, i, n).map_err(e)?;
                ensure(brute_r == rec_r && rec_r == closed_r, || {
                    format!("r_{i} k={k} n={n}: {brute_r} / {rec_r} / {closed_r}")
                })?;

                let brute_e = BigUint::from(census.by_rank[iu]);
                let rec_e = &m[iu] - &m[iu + 1];
                let closed_e =
                    rank_ge_closed_form(k, i, n).map_err(e)? - rank_ge_closed_form(k, i + 1, n).map_err(e)?;
                ensure(brute_e == rec_e && rec_e == closed_e, || {
                    format!("e_{i} k={k} n={n}: {brute_e} / {rec_e} / {closed_e}")
                })?;
                checked += 3;
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} quantities, k=2 n<=8 and k=3 n<=7"))
}

fn three_leaf_trees() -> Outcome {
    let got: BTreeSet<String> = enumerate_all(2, 3).map_err(e)?.map(|t| t.to_newick()).collect();
    let want: BTreeSet<String> = ["((1,2),3);", "((1,3),2);", "((2,3),1);"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    ensure(got == want, || format!("got {got:?}"))?;
    Ok("3 trees on [3]".into())
}

fn series_identities() -> Outcome {
    const ORDER: usize = 64;
    for k in [2u32, 3, 4] {
        ensure(verify_inverse(k, ORDER).map_err(e)?, || format!("F(T) != x for k={k}"))?;
        for i in 0..=2 {
            let closed = oracle_r(k, i, ORDER).map_err(e)?;
            let iterated = oracle_r_recursive(k, i, ORDER).map_err(e)?;
            ensure(closed == iterated, || format!("R_{i} closed form differs for k={k}"))?;
            ensure(verify_theorem_decomposition(k, i, ORDER).map_err(e)?, || {
                format!("decomposition of M_{i} fails for k={k}")
            })?;
        }
    }
    Ok(format!("order {ORDER}, k in 2..=4, i in 0..=2"))
}

fn limit_convergence(table: &CountTable) -> Outcome {
    let mut out = Vec::new();
    for i in [1u32, 2] {
        let conv = convergence_table(table, i, &GRID, &[]).map_err(e)?;
        let last = conv.rows.last().unwrap();
        ensure(last.gap < rat(TOL), || {
            format!("i={i}: gap {} at n=2001", kphylo::report::decimal(&last.gap, 6))
        })?;
        ensure(conv.gaps_nonincreasing(), || {
            format!("i={i}: gaps increase along the grid")
        })?;
        out.push(format!("i={i} gap {}", kphylo::report::decimal(&last.gap, 4)));
    }
    Ok(out.join(", "))
}

fn negligibility() -> Outcome {
    let mut out = Vec::new();
    for l in [2usize, 3] {
        let col: Vec<BigRational> = GRID
            .iter()
            .map(|&n| negligibility_ratio(2, l, n))
            .collect::<Result<_, _>>()
            .map_err(e)?;
        ensure(col.windows(2).all(|w| w[1] < w[0]), || format!("l={l}: not decreasing"))?;
        let last = col.last().unwrap();
        ensure(*last < rat(NEGLIGIBLE), || {
            format!("l={l}: {} at n=2001", kphylo::report::decimal(last, 6))
        })?;
        out.push(format!("l={l} {}", kphylo::report::decimal(last, 4)));
    }
    Ok(out.join(", "))
}

fn monte_carlo(table: &CountTable) -> Outcome {
    let r = estimate_rank_distribution(table, 1001, 200, MC_SEED, 2, 1).map_err(e)?;
    let want = [(1, 2), (3, 8), (15, 128)];
    for (row, w) in r.rows.iter().zip(want) {
        ensure(row.limit == rat(w), || {
            format!("rank {} limit is {}", row.rank, row.limit)
        })?;
        ensure(row.deviation < rat(TOL), || {
            format!(
                "rank {}: deviation {}",
                row.rank,
                kphylo::report::decimal(&row.deviation, 6)
            )
        })?;
    }
    let worst = kphylo::report::decimal(&r.max_deviation(), 4);
    Ok(format!("200 trees, seed {MC_SEED}, max deviation {worst}"))
}

fn sampler_exactness() -> Outcome {
    let table = CountTable::trees_only(2, 5).map_err(e)?;
    let mut out = Vec::new();
    for (n, samples) in [(3usize, 3000u64), (4, 15_000), (5, 105_000)] {
        let r = chi_square_uniformity(&table, n, samples, CHI_SEED, 1).map_err(e)?;
        ensure(r.passed, || {
            format!("n={n}: statistic {:.3} >= {:?}", r.statistic, r.critical)
        })?;
        out.push(format!("n={n} {:.2}<{:.2}", r.statistic, r.critical.unwrap_or(0.0)));
    }
    let big = CountTable::trees_only(2, 101).map_err(e)?;
    // Sorted, so the comparison is between multisets.
    let newick = |w| -> Result<Vec<String>, String> {
        let mut v: Vec<String> = sample_batch(&big, 101, 500, CHI_SEED, w)
            .map_err(e)?
            .iter()
            .map(|t| t.to_newick())
            .collect();
        v.sort();
        Ok(v)
    };
    ensure(newick(1)? == newick(8)?, || "workers 1 and 8 disagree".into())?;
    Ok(format!("{}; workers 1 = 8", out.join(", ")))
}

fn log_concavity() -> Outcome {
    let mut bad = Vec::new();
    for i in 0..=5 {
        let report = log_concavity_check(i, 20).map_err(e)?;
        if !report.holds() {
            let ks: Vec<String> = report.violations.iter().map(|v| v.at.to_string()).collect();
            bad.push(format!("i={i} at k={}", ks.join(",")));
        }
    }
    ensure(bad.is_empty(), || format!("violations: {}", bad.join("; ")))?;
    Ok("3 <= k <= 19, 0 <= i <= 5".into())
}

fn newick_round_trip() -> Outcome {
    let mut count = 0;
    for (k, n_max) in [(2u32, 6usize), (3, 5)] {
        for n in 1..=n_max {
            for t in enumerate_all(k, n).map_err(e)? {
                let back = Tree::from_newick(&t.to_newick(), k).map_err(e)?;
                ensure(back == t, || format!("{t} came back as {back}"))?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} trees"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut failed = 0;
    let mut report = |id: u32, name: &str, outcome: Outcome| {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{id}] {name}: {detail} ({:.1?})", start.elapsed());
    };

    report(1, "triple-oracle counts", triple_oracle());
    report(2, "three trees on [3]", three_leaf_trees());
    report(3, "generating-function identities", series_identities());
    // One table serves both the exact ratios and the sampler at n = 1001.
    let table = CountTable::with_max_rank(2, 2001, 2).map_err(e);
    report(
        4,
        "limit convergence",
        table.as_ref().map_err(Clone::clone).and_then(limit_convergence),
    );
    report(5, "negligible powers of T", negligibility());
    report(
        6,
        "Monte Carlo rank law",
        table.as_ref().map_err(Clone::clone).and_then(monte_carlo),
    );
    report(7, "sampler exactness", sampler_exactness());
    report(8, "log-concavity over k", log_concavity());
    report(9, "Newick round trip", newick_round_trip());

    if failed == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
