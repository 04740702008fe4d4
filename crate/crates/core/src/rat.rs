//! Exact rational scalars and the three-way sign.

use std::fmt;

use malachite_base::num::arithmetic::traits::Gcd;
use malachite_nz::natural::Natural;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

fn natural(v: &BigInt) -> Natural {
    Natural::from_owned_limbs_asc(v.magnitude().to_u64_digits())
}

/// Non-negative gcd. The subquadratic algorithm matters: forms deep in a
/// prism carry coefficients of tens of thousands of bits.
pub fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    if a.is_zero() {
        return b.abs();
    }
    if b.is_zero() || b.magnitude().is_one() {
        return if b.is_zero() { a.abs() } else { BigInt::one() };
    }
    let g = natural(a).gcd(natural(b));
    BigInt::from(biguint(&g))
}

fn biguint(n: &Natural) -> BigUint {
    let limbs = n.to_limbs_asc();
    let mut words = Vec::with_capacity(limbs.len() * 2);
    for l in limbs {
        words.push(l as u32);
        words.push((l >> 32) as u32);
    }
    BigUint::new(words)
}

/// Gcd of all entries (zero for an all-zero slice).
pub fn content<'a>(values: impl IntoIterator<Item = &'a BigInt>) -> BigInt {
    let mut g = BigInt::zero();
    for v in values {
        if g.is_one() {
            break;
        }
        g = gcd(&g, v);
    }
    g
}

pub fn lcm(a: &BigInt, b: &BigInt) -> BigInt {
    if a.is_zero() || b.is_zero() {
        return BigInt::zero();
    }
    (a / gcd(a, b) * b).abs()
}

/// Positive lcm of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rat>) -> BigInt {
    let mut l = BigInt::one();
    for v in values {
        let d = v.denom();
        if !d.is_one() {
            l = &l / gcd(&l, d) * d;
        }
    }
    l
}

/// Parses `p/q` or `p`, with an optional leading `-` (the Unicode minus
/// sign is accepted as well).
pub fn parse_rat(token: &str) -> Option<Rat> {
    let cleaned = token.replace('\u{2212}', "-");
    let cleaned = cleaned.strip_prefix('+').unwrap_or(&cleaned);
    let (num, den) = match cleaned.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (cleaned, None),
    };
    if num.is_empty() || !valid_int(num) {
        return None;
    }
    let n: BigInt = num.parse().ok()?;
    let d: BigInt = match den {
        Some(d) if valid_int(d) && !d.starts_with('-') => d.parse().ok()?,
        Some(_) => return None,
        None => BigInt::one(),
    };
    if d.is_zero() {
        return None;
    }
    Some(Rat::new(n, d))
}

fn valid_int(s: &str) -> bool {
    let digits = s.strip_prefix('-').unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

/// Outcome of a sign test. Ordered `Negative < Zero < Positive`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(value: &Rat) -> Sign {
        if value.is_positive() {
            Sign::Positive
        } else if value.is_negative() {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn of_int(value: &BigInt) -> Sign {
        match value.sign() {
            num_bigint::Sign::Plus => Sign::Positive,
            num_bigint::Sign::Minus => Sign::Negative,
            num_bigint::Sign::NoSign => Sign::Zero,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }

    pub fn negate(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }

    pub fn times(self, other: Sign) -> Sign {
        match self.as_i8() * other.as_i8() {
            1 => Sign::Positive,
            -1 => Sign::Negative,
            _ => Sign::Zero,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Negative => '-',
            Sign::Zero => '0',
            Sign::Positive => '+',
        }
    }

    pub fn from_symbol(c: &str) -> Option<Sign> {
        match c {
            "-" | "\u{2212}" => Some(Sign::Negative),
            "0" => Some(Sign::Zero),
            "+" => Some(Sign::Positive),
            _ => None,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Sign::Negative => "negative",
            Sign::Zero => "zero",
            Sign::Positive => "positive",
        };
        f.write_str(s)
    }
}
