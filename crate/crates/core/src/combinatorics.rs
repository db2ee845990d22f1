//! Arbitrary-precision integer helpers shared by the counting code.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, j| acc * j)
}

pub fn binomial(n: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for j in 0..r {
        acc *= n - j;
        acc /= j + 1;
    }
    acc
}

/// Row `n` of Pascal's triangle: `C(n, 0), ..., C(n, n)`.
pub fn binomial_row(n: usize) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for j in 0..n {
        c = c * (n - j) / (j + 1);
        row.push(c.clone());
    }
    row
}

/// Divides `num` by `den`, failing if the division leaves a remainder.
pub fn exact_div(num: &BigUint, den: &BigUint, what: &str) -> Result<BigUint> {
    if den.is_zero() {
        return Err(Error::consistency(format!("{what}: division by zero")));
    }
    let (q, r) = num.div_rem(den);
    if !r.is_zero() {
        return Err(Error::consistency(format!("{what}: division by {den} is not exact")));
    }
    Ok(q)
}

/// Labeled (exponential) product coefficient at `n`:
/// `sum_j C(n, j) * a[j] * b[n - j]`, with indices outside `lo..=n - lo`
/// skipped. `row` must be row `n` of Pascal's triangle.
pub fn labeled_product_at(row: &[BigUint], a: &[BigUint], b: &[BigUint], n: usize, lo: usize) -> BigUint {
    let mut acc = BigUint::zero();
    if n < 2 * lo {
        return acc;
    }
    for j in lo..=n - lo {
        let (x, y) = (&a[j], &b[n - j]);
        if x.is_zero() || y.is_zero() {
            continue;
        }
        acc += &row[j] * x * y;
    }
    acc
}

/// [`labeled_product_at`] for `a == b`, using the symmetry of the summand.
pub fn labeled_square_at(row: &[BigUint], a: &[BigUint], n: usize, lo: usize) -> BigUint {
    let mut acc = BigUint::zero();
    if n < 2 * lo {
        return acc;
    }
    for j in (lo..).take_while(|&j| 2 * j < n) {
        let (x, y) = (&a[j], &a[n - j]);
        if x.is_zero() || y.is_zero() {
            continue;
        }
        acc += &row[j] * x * y;
    }
    acc <<= 1;
    if n.is_multiple_of(2) && n / 2 >= lo {
        let x = &a[n / 2];
        acc += &row[n / 2] * x * x;
    }
    acc
}

/// `base^exp` with an arbitrary-precision exponent.
pub fn big_pow(base: u64, exp: &BigUint) -> BigUint {
    num_traits::Pow::pow(BigUint::from(base), exp)
}
