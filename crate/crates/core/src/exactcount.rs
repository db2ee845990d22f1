//! Exact counts of k-phylogenetic trees and of their vertices by rank.
//!
//! Every quantity is computed twice: once from integer convolution
//! recurrences over labeled counts (`n!` times the EGF coefficient), and once
//! from closed-form Lagrange-inversion coefficients. The public accessors on
//! [`CountTable`] return an [`Error::Consistency`] if the two disagree.
//!
//! Trees here are leaf-labeled: only the `n` leaves carry the labels `1..=n`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::combinatorics::{
    big_pow, binomial, binomial_row, exact_div, factorial, labeled_product_at, labeled_square_at,
};
use crate::error::{Error, Result};

pub(crate) fn check_k(k: u32) -> Result<()> {
    if k < 2 {
        return Err(Error::domain(format!("branching factor k must be >= 2, got {k}")));
    }
    Ok(())
}

fn check_kn(k: u32, n: usize) -> Result<()> {
    check_k(k)?;
    if n == 0 {
        return Err(Error::domain("leaf count n must be >= 1"));
    }
    Ok(())
}

/// Number of internal vertices of any k-phylogenetic tree with `n` leaves,
/// or `None` if no such tree exists (`n - 1` not divisible by `k - 1`).
pub fn internal_count(k: u32, n: usize) -> Result<Option<usize>> {
    check_kn(k, n)?;
    let step = k as usize - 1;
    Ok((n - 1).is_multiple_of(step).then(|| (n - 1) / step))
}

pub fn is_admissible(k: u32, n: usize) -> Result<bool> {
    Ok(internal_count(k, n)?.is_some())
}

fn big_rat(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Returns `s` with `n - l = s (k - 1)`, if one exists.
fn lagrange_index(k: u32, l: usize, n: usize) -> Option<usize> {
    let step = k as usize - 1;
    (n >= l && (n - l).is_multiple_of(step)).then(|| (n - l) / step)
}

/// `[x^n] T_k(x)^l`, by Lagrange inversion of `F(x) = x - x^k/k!`:
/// `(l / n) * C(ks + l - 1, s) / k!^s` where `n - l = s (k - 1)`, else 0.
pub fn coeff_t_pow(k: u32, l: usize, n: usize) -> Result<BigRational> {
    check_kn(k, n)?;
    if l == 0 {
        return Err(Error::domain("power l must be >= 1"));
    }
    let Some(s) = lagrange_index(k, l, n) else {
        return Ok(BigRational::zero());
    };
    let num = BigUint::from(l) * binomial((k as usize * s + l - 1) as u64, s as u64);
    let den = BigUint::from(n) * factorial(k as u64).pow(s as u32);
    Ok(big_rat(num, den))
}

/// `n! [x^n] T_k(x)^l`: the number of ordered `l`-tuples of trees whose leaf
/// sets partition `[n]`.
pub fn labeled_t_pow(k: u32, l: usize, n: usize) -> Result<BigUint> {
    check_kn(k, n)?;
    if l == 0 {
        return Err(Error::domain("power l must be >= 1"));
    }
    let Some(s) = lagrange_index(k, l, n) else {
        return Ok(BigUint::zero());
    };
    // n!/n * l * C(ks+l-1, s) / k!^s
    let num = factorial(n as u64 - 1) * l * binomial((k as usize * s + l - 1) as u64, s as u64);
    exact_div(&num, &factorial(k as u64).pow(s as u32), "labeled T^l coefficient")
}

/// `c_i = (k^i - 1)/(k - 1)`, computed by `c_0 = 0`, `c_i = k c_{i-1} + 1`.
pub fn c_index(k: u32, i: u32) -> Result<BigUint> {
    check_k(k)?;
    Ok((0..i).fold(BigUint::zero(), |c, _| c * k + 1u32))
}

/// Limiting fraction of vertices with rank at least `i`: `k^{-c_i}`.
pub fn rank_ge_limit(k: u32, i: u32) -> Result<BigRational> {
    let c = c_index(k, i)?;
    Ok(BigRational::new_raw(BigInt::one(), BigInt::from(big_pow(k as u64, &c))))
}

/// Limiting fraction of vertices with rank exactly `i`:
/// `k^{-c_i} - k^{-c_{i+1}}`.
pub fn rank_eq_limit(k: u32, i: u32) -> Result<BigRational> {
    let c = c_index(k, i)?;
    let c_next = &c * k + 1u32;
    // (k^{c_{i+1} - c_i} - 1) / k^{c_{i+1}}, already in lowest terms.
    let gap = &c_next - &c;
    let num = big_pow(k as u64, &gap) - 1u32;
    let den = big_pow(k as u64, &c_next);
    Ok(BigRational::new_raw(BigInt::from(num), BigInt::from(den)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LimitEntry {
    pub rank: u32,
    #[serde(serialize_with = "crate::report::ser_biguint")]
    pub c: BigUint,
    #[serde(serialize_with = "crate::report::ser_ratio")]
    pub tail_prob: BigRational,
    #[serde(serialize_with = "crate::report::ser_ratio")]
    pub point_prob: BigRational,
}

/// Exact limiting rank distribution for one `k`, ranks `0..=max_rank`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LimitDistribution {
    pub k: u32,
    pub entries: Vec<LimitEntry>,
}

impl LimitDistribution {
    pub fn new(k: u32, max_rank: u32) -> Result<Self> {
        check_k(k)?;
        let entries = (0..=max_rank)
            .map(|i| {
                Ok(LimitEntry {
                    rank: i,
                    c: c_index(k, i)?,
                    tail_prob: rank_ge_limit(k, i)?,
                    point_prob: rank_eq_limit(k, i)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LimitDistribution { k, entries })
    }
}

/// Compares `a/b` with `c/d` for positive denominators without normalizing.
fn cmp_ratio(a: &BigRational, b: &BigRational) -> std::cmp::Ordering {
    (a.numer() * b.denom()).cmp(&(b.numer() * a.denom()))
}

fn mul_raw(a: &BigRational, b: &BigRational) -> BigRational {
    BigRational::new_raw(a.numer() * b.numer(), a.denom() * b.denom())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConcavityViolation {
    /// The middle index of the offending triple.
    pub at: u32,
    #[serde(serialize_with = "crate::report::ser_ratio")]
    pub square: BigRational,
    #[serde(serialize_with = "crate::report::ser_ratio")]
    pub neighbor_product: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConcavityReport {
    /// `"k"` when the sequence runs over k at fixed rank, `"rank"` otherwise.
    pub axis: &'static str,
    pub fixed: u32,
    pub checked: Vec<u32>,
    pub violations: Vec<ConcavityViolation>,
}

impl ConcavityReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `P_{k,i}^2 >= P_{k-1,i} P_{k+1,i}` for `3 <= k <= k_max - 1`.
pub fn log_concavity_check(i: u32, k_max: u32) -> Result<ConcavityReport> {
    if k_max < 4 {
        return Err(Error::domain("k_max must be >= 4"));
    }
    let probs = (2..=k_max).map(|k| rank_eq_limit(k, i)).collect::<Result<Vec<_>>>()?;
    let mut report = ConcavityReport {
        axis: "k",
        fixed: i,
        checked: Vec::new(),
        violations: Vec::new(),
    };
    for (w, k) in probs.windows(3).zip(3..) {
        report.checked.push(k);
        let square = mul_raw(&w[1], &w[1]);
        let neighbor_product = mul_raw(&w[0], &w[2]);
        if cmp_ratio(&square, &neighbor_product).is_lt() {
            report.violations.push(ConcavityViolation {
                at: k,
                square,
                neighbor_product,
            });
        }
    }
    Ok(report)
}

/// Exploratory companion to [`log_concavity_check`]: the same inequality
/// along the rank axis at fixed `k`, for `1 <= i <= i_max - 1`.
pub fn log_concavity_over_rank(k: u32, i_max: u32) -> Result<ConcavityReport> {
    let probs = (0..=i_max).map(|i| rank_eq_limit(k, i)).collect::<Result<Vec<_>>>()?;
    let mut report = ConcavityReport {
        axis: "rank",
        fixed: k,
        checked: Vec::new(),
        violations: Vec::new(),
    };
    for (w, i) in probs.windows(3).zip(1..) {
        report.checked.push(i);
        let square = mul_raw(&w[1], &w[1]);
        let neighbor_product = mul_raw(&w[0], &w[2]);
        if cmp_ratio(&square, &neighbor_product).is_lt() {
            report.violations.push(ConcavityViolation {
                at: i,
                square,
                neighbor_product,
            });
        }
    }
    Ok(report)
}

/// `[x^n] T^l / [x^n] M_0`: the weight of a monomial in `T` relative to the
/// total vertex count. Tends to 0 as `n` grows.
pub fn negligibility_ratio(k: u32, l: usize, n: usize) -> Result<BigRational> {
    let Some(s) = internal_count(k, n)? else {
        return Err(Error::Inadmissible { k, n });
    };
    let numer = coeff_t_pow(k, l, n)?;
    let total = coeff_t_pow(k, 1, n)? * BigRational::from_integer(BigInt::from(k as usize * s + 1));
    Ok(numer / total)
}

/// Closed-form `r_i(n) = n! [x^n] T^{k^i} / k!^{c_i}`.
pub fn root_rank_closed_form(k: u32, i: u32, n: usize) -> Result<BigUint> {
    let Some(l) = power_if_at_most(k, i, n) else {
        return Ok(BigUint::zero());
    };
    let c = c_index(k, i)?.to_u32().expect("c_i < k^i <= n fits in u32");
    let labeled = labeled_t_pow(k, l, n)?;
    exact_div(&labeled, &factorial(k as u64).pow(c), "r_i closed form")
}

/// `k^i` if it does not exceed `n`.
fn power_if_at_most(k: u32, i: u32, n: usize) -> Option<usize> {
    let mut p: usize = 1;
    for _ in 0..i {
        p = p.checked_mul(k as usize).filter(|&p| p <= n)?;
    }
    Some(p)
}

/// Closed-form `m_i(n)`. Writing `f = T^{k-1}/(k-1)!` and using
/// `k^i = 1 + (k-1) c_i`, the series `T^{k^i} / (1 - f)` splits as
/// `(k-1)!^{c_i} (M_0 - T (1 + f + ... + f^{c_i - 1}))`, so
/// `m_i(n) = k^{-c_i} (m_0(n) - sum_{j < c_i} n! [x^n] T^{1+(k-1)j} / (k-1)!^j)`.
pub fn rank_ge_closed_form(k: u32, i: u32, n: usize) -> Result<BigUint> {
    let Some(s) = internal_count(k, n)? else {
        return Ok(BigUint::zero());
    };
    if power_if_at_most(k, i, n).is_none() {
        return Ok(BigUint::zero());
    }
    let c = c_index(k, i)?.to_usize().expect("c_i < n");
    let km1_fact = factorial(k as u64 - 1);
    let t_n = labeled_t_pow(k, 1, n)?;
    let mut acc = BigInt::from(t_n * (k as usize * s + 1));
    // Terms with 1 + (k-1) j > n vanish.
    for j in 0..c.min(s + 1) {
        let l = 1 + (k as usize - 1) * j;
        let term = exact_div(
            &labeled_t_pow(k, l, n)?,
            &km1_fact.pow(j as u32),
            "m_i closed form term",
        )?;
        acc -= BigInt::from(term);
    }
    let acc = acc
        .to_biguint()
        .ok_or_else(|| Error::consistency("m_i closed form is negative"))?;
    exact_div(&acc, &BigUint::from(k).pow(c as u32), "m_i closed form")
}

/// Memoized exact counts for one `k`, leaf counts `1..=n_max` and ranks
/// `0..=max_rank`.
///
/// All rows are labeled counts (`n!` times the EGF coefficient), so every
/// entry is a nonnegative integer and every prescribed division is checked
/// for exactness during construction.
#[derive(Debug, Clone)]
pub struct CountTable {
    k: u32,
    n_max: usize,
    /// `powers[j - 1][n]`: ordered `j`-tuples of trees covering `[n]`, `j = 1..=k`.
    powers: Vec<Vec<BigUint>>,
    /// `root_rank[i][n] = r_i(n)`.
    root_rank: Vec<Vec<BigUint>>,
    /// `rank_ge[i][n] = m_i(n)`.
    rank_ge: Vec<Vec<BigUint>>,
}

impl CountTable {
    /// Builds every rank row that can be nonzero for `n <= n_max`.
    pub fn new(k: u32, n_max: usize) -> Result<Self> {
        check_kn(k, n_max)?;
        let mut top = 0;
        while power_if_at_most(k, top + 1, n_max).is_some() {
            top += 1;
        }
        Self::with_max_rank(k, n_max, top)
    }

    /// Builds rank rows `0..=max_rank` only. Each extra rank costs up to two
    /// convolution passes, so callers that only need low ranks at large `n`
    /// should cap it.
    pub fn with_max_rank(k: u32, n_max: usize, max_rank: u32) -> Result<Self> {
        Self::build(k, n_max, max_rank as usize + 1)
    }

    /// Tree and forest counts only, without rank rows. Enough for sampling.
    pub fn trees_only(k: u32, n_max: usize) -> Result<Self> {
        Self::build(k, n_max, 0)
    }

    fn build(k: u32, n_max: usize, levels: usize) -> Result<Self> {
        check_kn(k, n_max)?;
        let ku = k as usize;
        let k_fact = factorial(k as u64);
        let forest_fact = factorial(k as u64 - 1);
        let zeros = || vec![BigUint::zero(); n_max + 1];

        let mut powers: Vec<Vec<BigUint>> = (0..ku).map(|_| zeros()).collect();
        let mut root_rank: Vec<Vec<BigUint>> = (0..levels).map(|_| zeros()).collect();
        let mut rank_ge: Vec<Vec<BigUint>> = (0..levels).map(|_| zeros()).collect();
        // rank_powers[i][j - 1]: labeled j-th power of r_{i-1}, for i >= 2.
        let mut rank_powers: Vec<Vec<Vec<BigUint>>> = (0..levels)
            .map(|i| {
                if i >= 2 {
                    (0..ku).map(|_| zeros()).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        // forest of k-1 trees, F(n) = powers[k-2][n] / (k-1)!
        let mut forest = zeros();

        for n in 1..=n_max {
            let row = binomial_row(n);

            // t(n) and its labeled powers.
            for j in 2..=ku {
                let (lower, upper) = powers.split_at_mut(j - 1);
                upper[0][n] = if j == 2 {
                    labeled_square_at(&row, &lower[0], n, 1)
                } else {
                    labeled_product_at(&row, &lower[0], &lower[j - 2], n, 1)
                };
            }
            let t_n = if n == 1 {
                BigUint::one()
            } else {
                exact_div(&powers[ku - 1][n], &k_fact, "tree recurrence")?
            };
            powers[0][n] = t_n.clone();
            forest[n] = if ku == 2 {
                t_n.clone()
            } else {
                exact_div(&powers[ku - 2][n], &forest_fact, "forest of k-1 trees")?
            };

            // r_i(n): r_0 = t, r_1 = T^k/k! (t without the single leaf), then powers.
            if levels > 0 {
                root_rank[0][n] = t_n;
            }
            if levels > 1 && n > 1 {
                root_rank[1][n] = root_rank[0][n].clone();
            }
            for i in 2..levels {
                let (prev, cur) = root_rank.split_at_mut(i);
                let base = &prev[i - 1];
                let pw = &mut rank_powers[i];
                pw[0][n] = base[n].clone();
                for j in 2..=ku {
                    let (lower, upper) = pw.split_at_mut(j - 1);
                    upper[0][n] = if j == 2 {
                        labeled_square_at(&row, base, n, 1)
                    } else {
                        labeled_product_at(&row, base, &lower[j - 2], n, 1)
                    };
                }
                cur[0][n] = exact_div(&pw[ku - 1][n], &k_fact, "root rank recurrence")?;
            }

            // m_i(n) = r_i(n) + sum_a C(n, a) m_i(a) F(n - a)
            for i in 0..levels {
                let conv = labeled_product_at(&row, &rank_ge[i], &forest, n, 1);
                rank_ge[i][n] = &root_rank[i][n] + conv;
            }
        }

        Ok(CountTable {
            k,
            n_max,
            powers,
            root_rank,
            rank_ge,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Highest rank with a stored row, if any.
    pub fn max_rank(&self) -> Option<u32> {
        (self.rank_ge.len() as u32).checked_sub(1)
    }

    /// `P_j(n)`: ordered `j`-tuples of trees covering `[n]`, for `1 <= j <= k`.
    pub fn ordered_forest_count(&self, j: usize, n: usize) -> Result<&BigUint> {
        if j == 0 || j > self.k as usize {
            return Err(Error::domain(format!("tuple size must be in 1..={}", self.k)));
        }
        self.check_n(n)?;
        Ok(&self.powers[j - 1][n])
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::domain("leaf count n must be >= 1"));
        }
        if n > self.n_max {
            return Err(self.too_small(n, 0));
        }
        Ok(())
    }

    fn too_small(&self, n: usize, i: u32) -> Error {
        Error::TableTooSmall {
            k: self.k,
            have: self.n_max,
            rank_rows: self.rank_ge.len(),
            need: n,
            need_rank: i,
        }
    }

    fn agree(&self, what: &str, n: usize, table: &BigUint, closed: BigUint) -> Result<BigUint> {
        if *table != closed {
            return Err(Error::consistency(format!(
                "{what} for k={} n={n}: recurrence gives {table}, closed form gives {closed}",
                self.k
            )));
        }
        Ok(closed)
    }

    /// Raw recurrence value of `t_{k,n}`.
    pub fn tree_count_recurrence(&self, n: usize) -> Result<&BigUint> {
        self.check_n(n)?;
        Ok(&self.powers[0][n])
    }

    /// `t_{k,n}`, the number of k-phylogenetic trees on leaf set `[n]`.
    pub fn tree_count(&self, n: usize) -> Result<BigUint> {
        let rec = self.tree_count_recurrence(n)?;
        self.agree("tree count", n, rec, labeled_t_pow(self.k, 1, n)?)
    }

    /// Unordered forests of `j` trees whose leaf sets partition `[n]`.
    pub fn forest_count(&self, j: usize, n: usize) -> Result<BigUint> {
        if j == 0 {
            return Err(Error::domain("forest size j must be >= 1"));
        }
        self.check_n(n)?;
        let ordered = if j <= self.k as usize {
            self.powers[j - 1][n].clone()
        } else {
            self.labeled_power_at(j, n)
        };
        let rec = exact_div(&ordered, &factorial(j as u64), "forest count")?;
        let closed = exact_div(
            &labeled_t_pow(self.k, j, n)?,
            &factorial(j as u64),
            "forest closed form",
        )?;
        self.agree("forest count", n, &rec, closed)
    }

    /// Ordered `j`-tuples of trees covering `[n]`, for `j` beyond the stored powers.
    fn labeled_power_at(&self, j: usize, n: usize) -> BigUint {
        let t = &self.powers[0];
        let mut cur = t[..=n].to_vec();
        let rows: Vec<Vec<BigUint>> = (0..=n).map(binomial_row).collect();
        for _ in 1..j {
            let next: Vec<BigUint> = (0..=n).map(|m| labeled_product_at(&rows[m], t, &cur, m, 1)).collect();
            cur = next;
        }
        cur[n].clone()
    }

    fn rank_row<'a>(&'a self, rows: &'a [Vec<BigUint>], i: u32, n: usize) -> Result<Option<&'a BigUint>> {
        self.check_n(n)?;
        if (i as usize) < rows.len() {
            Ok(Some(&rows[i as usize][n]))
        } else if power_if_at_most(self.k, i, n).is_none() {
            Ok(None)
        } else {
            Err(self.too_small(n, i))
        }
    }

    /// Raw recurrence value of `r_i(n)`, without the closed-form check.
    pub fn root_rank_recurrence(&self, i: u32, n: usize) -> Result<BigUint> {
        Ok(self.rank_row(&self.root_rank, i, n)?.cloned().unwrap_or_default())
    }

    /// `r_i(n)`: trees on `[n]` whose root has rank at least `i`.
    pub fn root_rank_count(&self, i: u32, n: usize) -> Result<BigUint> {
        let rec = self.root_rank_recurrence(i, n)?;
        self.agree("root rank count", n, &rec, root_rank_closed_form(self.k, i, n)?)
    }

    /// Raw recurrence value of `m_i(n)`, without the closed-form check.
    pub fn rank_ge_recurrence(&self, i: u32, n: usize) -> Result<BigUint> {
        Ok(self.rank_row(&self.rank_ge, i, n)?.cloned().unwrap_or_default())
    }

    /// `m_i(n)`: vertices of rank at least `i`, summed over all trees on `[n]`.
    pub fn rank_ge_count(&self, i: u32, n: usize) -> Result<BigUint> {
        let rec = self.rank_ge_recurrence(i, n)?;
        self.agree("rank >= i count", n, &rec, rank_ge_closed_form(self.k, i, n)?)
    }

    /// `(ks + 1) t_{k,n}`; zero for inadmissible `n`.
    pub fn total_vertex_count(&self, n: usize) -> Result<BigUint> {
        self.check_n(n)?;
        let Some(s) = internal_count(self.k, n)? else {
            return Ok(BigUint::zero());
        };
        let total = self.tree_count(n)? * (self.k as usize * s + 1);
        let m0 = self.rank_ge_recurrence(0, n)?;
        self.agree("total vertex count", n, &m0, total)
    }

    /// Vertices of each exact rank `0..=max_rank`, over all trees on `[n]`.
    pub fn rank_census(&self, n: usize, max_rank: u32) -> Result<ExactCensus> {
        self.check_n(n)?;
        if !is_admissible(self.k, n)? {
            return Ok(ExactCensus {
                k: self.k,
                n,
                by_rank: Vec::new(),
                tail: BigUint::zero(),
                total: BigUint::zero(),
            });
        }
        let ge = (0..=max_rank + 1)
            .map(|i| self.rank_ge_count(i, n))
            .collect::<Result<Vec<_>>>()?;
        let total = self.total_vertex_count(n)?;
        let by_rank: Vec<BigUint> = ge
            .windows(2)
            .map(|w| {
                if w[1] > w[0] {
                    Err(Error::consistency(format!("m_i not monotone in i at n={n}")))
                } else {
                    Ok(&w[0] - &w[1])
                }
            })
            .collect::<Result<_>>()?;
        let tail = ge[ge.len() - 1].clone();
        Ok(ExactCensus {
            k: self.k,
            n,
            by_rank,
            tail,
            total,
        })
    }
}

/// Per-rank vertex counts over all trees on `[n]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactCensus {
    pub k: u32,
    pub n: usize,
    /// `by_rank[i] = e_i(n) = m_i(n) - m_{i+1}(n)`. Empty for inadmissible `n`.
    pub by_rank: Vec<BigUint>,
    /// Vertices of rank above the last tracked rank.
    pub tail: BigUint,
    pub total: BigUint,
}

impl ExactCensus {
    pub fn is_empty(&self) -> bool {
        self.by_rank.is_empty()
    }

    /// `e_i(n) / m_0(n)`.
    pub fn ratio(&self, i: usize) -> Option<BigRational> {
        let e = self.by_rank.get(i)?;
        Some(big_rat(e.clone(), self.total.clone()))
    }

    /// `m_i(n)` reconstructed from the per-rank counts.
    pub fn rank_ge(&self, i: usize) -> BigUint {
        self.by_rank.iter().skip(i).sum::<BigUint>() + &self.tail
    }
}
