//! Rendering of exact values for TSV/JSON output.
//!
//! Integers are written as decimal strings. Rationals are written as
//! `"p/q"` next to a decimal rendering with [`SIG_DIGITS`] significant digits.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::ser::SerializeStruct;
use serde::Serializer;

pub const SIG_DIGITS: usize = 12;

pub fn ratio_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn pow10(e: usize) -> BigUint {
    num_traits::pow(BigUint::from(10u32), e)
}

/// Decimal rendering of `r` rounded (half up) to `sig` significant digits.
/// Fixed notation for magnitudes in `[1e-5, 1e12)`, scientific otherwise.
pub fn decimal(r: &BigRational, sig: usize) -> String {
    assert!(sig >= 1);
    if r.is_zero() {
        return "0".to_string();
    }
    let neg = r.is_negative();
    let a = r.numer().magnitude().clone();
    let b = r.denom().magnitude().clone();

    // e = floor(log10(a / b))
    let mut e = a.to_str_radix(10).len() as i64 - b.to_str_radix(10).len() as i64;
    let below = |e: i64| -> bool {
        // a / b < 10^e ?
        if e >= 0 {
            a < &b * pow10(e as usize)
        } else {
            &a * pow10((-e) as usize) < b
        }
    };
    if below(e) {
        e -= 1;
    }

    // m = round(a / b * 10^(sig - 1 - e))
    let shift = sig as i64 - 1 - e;
    let (num, den) = if shift >= 0 {
        (&a * pow10(shift as usize), b.clone())
    } else {
        (a.clone(), &b * pow10((-shift) as usize))
    };
    let (q, rem) = num.div_rem(&den);
    let mut m = if rem * 2u32 >= den { q + 1u32 } else { q };
    if m == pow10(sig) {
        m = pow10(sig - 1);
        e += 1;
    }
    let digits = m.to_str_radix(10);
    debug_assert_eq!(digits.len(), sig);

    let body = if (-5..12).contains(&e) {
        if e >= 0 {
            let split = (e as usize + 1).min(sig);
            let mut s = digits[..split].to_string();
            s.extend(std::iter::repeat_n('0', e as usize + 1 - split));
            if split < sig {
                s.push('.');
                s.push_str(&digits[split..]);
            }
            s
        } else {
            format!("0.{}{}", "0".repeat((-e - 1) as usize), digits)
        }
    } else if sig == 1 {
        format!("{digits}e{e}")
    } else {
        format!("{}.{}e{}", &digits[..1], &digits[1..], e)
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

pub fn ser_biguint<S: Serializer>(x: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_str_radix(10))
}

pub fn ser_biguints<S: Serializer>(xs: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|x| x.to_str_radix(10)))
}

/// Serializes a rational as `{"exact": "p/q", "decimal": "..."}`.
pub fn ser_ratio<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    let mut st = s.serialize_struct("Rational", 2)?;
    st.serialize_field("exact", &ratio_string(r))?;
    st.serialize_field("decimal", &decimal(r, SIG_DIGITS))?;
    st.end()
}

pub fn ser_ratios<S: Serializer>(rs: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
    #[derive(serde::Serialize)]
    struct Wrap<'a>(#[serde(serialize_with = "ser_ratio")] &'a BigRational);
    s.collect_seq(rs.iter().map(Wrap))
}

pub fn to_rational(x: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from_biguint(Sign::Plus, x.clone()))
}
