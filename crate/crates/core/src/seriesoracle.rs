//! Exact-rational truncated power series, used as an independent check on
//! the integer recurrences in [`crate::exactcount`].
//!
//! Everything here works directly with the generating functions: `T_k` is
//! obtained by fixed-point iteration of `T = x + T^k/k!`, and the rank
//! series are evaluated from their closed forms in `T`.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::combinatorics::factorial;
use crate::error::{Error, Result};
use crate::exactcount::{c_index, check_k};

/// A power series known through `x^order`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedSeries {
    coeffs: Vec<BigRational>,
}

fn rat_int(v: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(v.into())
}

impl TruncatedSeries {
    pub fn zero(order: usize) -> Self {
        TruncatedSeries {
            coeffs: vec![BigRational::zero(); order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        Self::monomial(order, 0, BigRational::one())
    }

    /// The series `x`.
    pub fn x(order: usize) -> Self {
        Self::monomial(order, 1, BigRational::one())
    }

    pub fn monomial(order: usize, degree: usize, c: BigRational) -> Self {
        let mut s = Self::zero(order);
        if degree <= order {
            s.coeffs[degree] = c;
        }
        s
    }

    /// Coefficients beyond `order` are dropped; missing ones are zero.
    pub fn from_coeffs(order: usize, coeffs: impl IntoIterator<Item = BigRational>) -> Self {
        let mut s = Self::zero(order);
        for (slot, c) in s.coeffs.iter_mut().zip(coeffs) {
            *slot = c;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &BigRational {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// `n! [x^n]`, which must be an integer for counting series.
    pub fn labeled_coeff(&self, n: usize) -> Result<BigUint> {
        let v = &self.coeffs[n] * rat_int(BigInt::from(factorial(n as u64)));
        if !v.is_integer() || v.is_negative() {
            return Err(Error::consistency(format!(
                "n! [x^{n}] = {v} is not a nonnegative integer"
            )));
        }
        Ok(v.to_integer().to_biguint().expect("nonnegative"))
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Lowest index with a nonzero coefficient, or `None` for the zero series.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    fn mul_ref(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let mut out = Self::zero(order);
        let (Some(va), Some(vb)) = (self.valuation(), other.valuation()) else {
            return out;
        };
        for i in va..=order {
            let a = &self.coeffs[i];
            if a.is_zero() {
                continue;
            }
            for j in vb..=order - i {
                let b = &other.coeffs[j];
                if !b.is_zero() {
                    out.coeffs[i + j] += a * b;
                }
            }
        }
        out
    }

    /// `self^e` by repeated squaring.
    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.order());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_ref(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_ref(&base);
            }
        }
        acc
    }

    /// `1 / (1 - self)`; requires a zero constant term.
    pub fn geometric_inverse(&self) -> Result<Self> {
        if !self.coeffs[0].is_zero() {
            return Err(Error::domain("geometric inverse needs a zero constant term"));
        }
        let order = self.order();
        let mut g = Self::one(order);
        for n in 1..=order {
            let mut acc = BigRational::zero();
            for j in 1..=n {
                if !self.coeffs[j].is_zero() && !g.coeffs[n - j].is_zero() {
                    acc += &self.coeffs[j] * &g.coeffs[n - j];
                }
            }
            g.coeffs[n] = acc;
        }
        Ok(g)
    }

    /// `self / unit` for a `unit` with nonzero constant term.
    pub fn div_unit(&self, unit: &Self) -> Result<Self> {
        let c0 = unit.coeffs[0].clone();
        if c0.is_zero() {
            return Err(Error::domain("division by a series with zero constant term"));
        }
        // unit = c0 (1 - u) with u = 1 - unit / c0
        let inv_c0 = c0.recip();
        let u = Self::one(unit.order()) - unit.scale(&inv_c0);
        Ok(self.mul_ref(&u.geometric_inverse()?).scale(&inv_c0))
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let order = self.order().min(rhs.order());
        TruncatedSeries::from_coeffs(order, self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b))
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let order = self.order().min(rhs.order());
        TruncatedSeries::from_coeffs(order, self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b))
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.mul_ref(rhs)
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for TruncatedSeries {
            type Output = TruncatedSeries;
            fn $m(self, rhs: TruncatedSeries) -> TruncatedSeries {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

fn inv_factorial_pow(k: u64, e: u64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(factorial(k).pow(e as u32)))
}

fn small_c(k: u32, i: u32) -> Result<u64> {
    c_index(k, i)?
        .to_u64()
        .ok_or_else(|| Error::domain(format!("c_{i} for k={k} is too large")))
}

fn k_pow(k: u32, i: u32) -> Result<u64> {
    (k as u64)
        .checked_pow(i)
        .ok_or_else(|| Error::domain(format!("k^i overflows for k={k}, i={i}")))
}

/// `T_k` through `x^order`, by iterating `T <- x + T^k/k!` from `T = x`
/// until the coefficients stop changing.
pub fn solve_t(k: u32, order: usize) -> Result<TruncatedSeries> {
    check_k(k)?;
    if order == 0 {
        return Err(Error::domain("truncation order must be >= 1"));
    }
    let x = TruncatedSeries::x(order);
    let inv_kfact = inv_factorial_pow(k as u64, 1);
    let mut t = x.clone();
    // Each pass fixes at least one further coefficient.
    for _ in 0..=order {
        let next = &x + &t.pow(k as u64).scale(&inv_kfact);
        if next == t {
            return Ok(t);
        }
        t = next;
    }
    Err(Error::consistency("fixed-point iteration for T did not stabilize"))
}

/// `F_k(T_k(x)) = x` with `F_k(x) = x - x^k/k!`, checked through `x^order`.
pub fn verify_inverse(k: u32, order: usize) -> Result<bool> {
    let t = solve_t(k, order)?;
    let f_of_t = &t - &t.pow(k as u64).scale(&inv_factorial_pow(k as u64, 1));
    Ok(f_of_t == TruncatedSeries::x(order))
}

/// `f = T^{k-1} / (k-1)!`, the EGF of unordered forests of `k - 1` trees.
fn forest_series(k: u32, t: &TruncatedSeries) -> TruncatedSeries {
    t.pow(k as u64 - 1).scale(&inv_factorial_pow(k as u64 - 1, 1))
}

/// `R_{i,k} = T^{k^i} / k!^{c_i}` from the closed form.
pub fn oracle_r(k: u32, i: u32, order: usize) -> Result<TruncatedSeries> {
    let t = solve_t(k, order)?;
    Ok(t.pow(k_pow(k, i)?).scale(&inv_factorial_pow(k as u64, small_c(k, i)?)))
}

/// `R_{i,k}` from `R_0 = T`, `R_i = R_{i-1}^k / k!`.
pub fn oracle_r_recursive(k: u32, i: u32, order: usize) -> Result<TruncatedSeries> {
    let inv_kfact = inv_factorial_pow(k as u64, 1);
    let mut r = solve_t(k, order)?;
    for _ in 0..i {
        r = r.pow(k as u64).scale(&inv_kfact);
    }
    Ok(r)
}

/// `M_{i,k} = T^{k^i} / (k!^{c_i} (1 - T^{k-1}/(k-1)!))`.
pub fn oracle_m(k: u32, i: u32, order: usize) -> Result<TruncatedSeries> {
    let t = solve_t(k, order)?;
    let g = forest_series(k, &t).geometric_inverse()?;
    let num = t.pow(k_pow(k, i)?).scale(&inv_factorial_pow(k as u64, small_c(k, i)?));
    Ok(&num * &g)
}

/// Checks `T^{k^i} / (1 - f) = p(T) + (k-1)!^{c_i} M_0` through `x^order`, where
/// `f = T^{k-1}/(k-1)!` and `p(T) = -(k-1)!^{c_i} T (1 + f + ... + f^{c_i - 1})`.
pub fn verify_theorem_decomposition(k: u32, i: u32, order: usize) -> Result<bool> {
    let t = solve_t(k, order)?;
    let f = forest_series(k, &t);
    let g = f.geometric_inverse()?;
    let c = small_c(k, i)?;
    let lhs = &t.pow(k_pow(k, i)?) * &g;

    let scale = rat_int(BigInt::from(factorial(k as u64 - 1).pow(c as u32)));
    // f has valuation k - 1, so powers beyond order / (k - 1) vanish.
    let terms = c.min(order as u64 / (k as u64 - 1) + 1);
    let mut geom = TruncatedSeries::zero(order);
    let mut fj = TruncatedSeries::one(order);
    for _ in 0..terms {
        geom = &geom + &fj;
        fj = &fj * &f;
    }
    let p = -&(&t * &geom).scale(&scale);
    let m0 = &t * &g;
    let rhs = &p + &m0.scale(&scale);
    Ok(lhs == rhs)
}
