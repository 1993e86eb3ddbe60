//! Exact numbers: arbitrary-precision rationals and the `LogValue` group.
//!
//! Every height, potential, error and bound handled by the engine is of the
//! form `½·log₂(q)` for a positive rational `q`. `LogValue` stores `q` and
//! maps the additive structure of heights onto multiplication of rationals,
//! so the whole decision path runs without floating point.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Reduced arbitrary-precision rational with positive denominator.
pub type Rational = BigRational;

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rational_from_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses decimal numerator and denominator strings; `None` on bad digits or
/// a zero denominator.
pub fn parse_rational(num: &str, den: &str) -> Option<Rational> {
    let n = BigInt::parse_bytes(num.as_bytes(), 10)?;
    let d = BigInt::parse_bytes(den.as_bytes(), 10)?;
    (!d.is_zero()).then(|| Rational::new(n, d))
}

/// The real number `½·log₂(q)` for a strictly positive rational `q`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct LogValue {
    q: Rational,
}

impl LogValue {
    pub fn zero() -> Self {
        LogValue { q: Rational::one() }
    }

    /// `½·log₂(q)`. Returns `None` unless `q > 0`.
    pub fn half_log2(q: Rational) -> Option<Self> {
        if q.is_positive() {
            Some(LogValue { q })
        } else {
            None
        }
    }

    /// Convenience for integer ratios; panics on a non-positive ratio.
    pub fn half_log2_ratio(num: i64, den: i64) -> Self {
        Self::half_log2(rational(num, den)).expect("ratio must be positive")
    }

    /// The integer `k`, i.e. `½·log₂(4^k)`.
    pub fn integer(k: i64) -> Self {
        Self::two_pow_halves(2 * k)
    }

    /// `h/2`, i.e. `½·log₂(2^h)`.
    pub fn two_pow_halves(h: i64) -> Self {
        let base = Rational::from_integer(BigInt::from(2));
        LogValue {
            q: pow_rational(&base, h),
        }
    }

    /// `log₂(l₀/l₁)` given the squared lengths `l₀²` and `l₁²`.
    pub fn from_squared_lengths(l0_sq: &Rational, l1_sq: &Rational) -> Option<Self> {
        if !l0_sq.is_positive() || !l1_sq.is_positive() {
            return None;
        }
        Self::half_log2(l0_sq / l1_sq)
    }

    /// The rational `q` with `self = ½·log₂(q)`.
    pub fn q(&self) -> &Rational {
        &self.q
    }

    pub fn is_zero(&self) -> bool {
        self.q.is_one()
    }

    pub fn signum(&self) -> Ordering {
        self.q.cmp(&Rational::one())
    }

    /// `n·self` for any integer `n`.
    pub fn scale(&self, n: i64) -> Self {
        LogValue {
            q: pow_rational(&self.q, n),
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() == Ordering::Less {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Compares `self / a` with `other / b` for positive step counts, by
    /// cross powering: `b·self` vs `a·other`.
    pub fn cmp_ratio(&self, a: u64, other: &LogValue, b: u64) -> Ordering {
        assert!(a > 0 && b > 0, "ratio denominators must be positive");
        let lhs = self.scale(b as i64);
        let rhs = other.scale(a as i64);
        lhs.cmp(&rhs)
    }

    /// Display-only approximation.
    pub fn to_f64(&self) -> f64 {
        0.5 * (log2_big(self.q.numer()) - log2_big(self.q.denom()))
    }

    /// If the value is a multiple of ½ (q a power of two), return that
    /// multiple as a count of halves.
    pub fn as_halves(&self) -> Option<i64> {
        let n = self.q.numer();
        let d = self.q.denom();
        if d.is_one() {
            power_of_two(n).map(|k| k as i64)
        } else if n.is_one() {
            power_of_two(d).map(|k| -(k as i64))
        } else {
            None
        }
    }

    /// Human rendering: exact for multiples of ½, six decimals otherwise.
    pub fn render(&self) -> String {
        match self.as_halves() {
            Some(h) if h % 2 == 0 => format!("{}", h / 2),
            Some(h) => format!("{}", h as f64 / 2.0),
            None => format!("{:.6}", self.to_f64()),
        }
    }
}

impl Default for LogValue {
    fn default() -> Self {
        LogValue::zero()
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LogValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.q.cmp(&other.q)
    }
}

impl Add for LogValue {
    type Output = LogValue;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: LogValue) -> LogValue {
        LogValue { q: self.q * rhs.q }
    }
}

impl<'a> Add<&'a LogValue> for &'a LogValue {
    type Output = LogValue;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: &LogValue) -> LogValue {
        LogValue { q: &self.q * &rhs.q }
    }
}

impl AddAssign<&LogValue> for LogValue {
    #[allow(clippy::suspicious_op_assign_impl)]
    fn add_assign(&mut self, rhs: &LogValue) {
        self.q = &self.q * &rhs.q;
    }
}

impl Sub for LogValue {
    type Output = LogValue;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: LogValue) -> LogValue {
        LogValue { q: self.q / rhs.q }
    }
}

impl<'a> Sub<&'a LogValue> for &'a LogValue {
    type Output = LogValue;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: &LogValue) -> LogValue {
        LogValue { q: &self.q / &rhs.q }
    }
}

impl Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        LogValue { q: self.q.recip() }
    }
}

impl Sum for LogValue {
    fn sum<I: Iterator<Item = LogValue>>(iter: I) -> LogValue {
        iter.fold(LogValue::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a LogValue> for LogValue {
    fn sum<I: Iterator<Item = &'a LogValue>>(iter: I) -> LogValue {
        iter.fold(LogValue::zero(), |acc, x| &acc + x)
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

pub fn pow_rational(base: &Rational, exp: i64) -> Rational {
    let e = exp.unsigned_abs();
    let numer = num_traits::pow::pow(base.numer().clone(), e as usize);
    let denom = num_traits::pow::pow(base.denom().clone(), e as usize);
    let r = Rational::new(numer, denom);
    if exp < 0 {
        r.recip()
    } else {
        r
    }
}

fn power_of_two(n: &BigInt) -> Option<u64> {
    if !n.is_positive() {
        return None;
    }
    let bits = n.bits();
    let mut check = BigInt::one();
    check <<= bits - 1;
    (check == *n).then_some(bits - 1)
}

fn log2_big(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 60 {
        return n.to_f64().unwrap_or(f64::NAN).log2();
    }
    let shift = bits - 60;
    let top = (n >> shift).to_f64().unwrap_or(f64::NAN);
    top.log2() + shift as f64
}

/// Largest `t` with `t² | n`, for `n > 0`.
///
/// Trial division up to `∛n`; the cofactor left after that is 1, a prime,
/// a prime square or a product of two distinct primes, and only the prime
/// square contributes.
pub fn square_part(n: &BigUint) -> BigUint {
    assert!(!n.is_zero(), "square_part of zero");
    let mut rest = n.clone();
    let mut square = BigUint::one();
    let two = BigUint::from(2u32);
    let mut p = two.clone();
    while &p * &p * &p <= rest {
        let pp = &p * &p;
        while (&rest % &pp).is_zero() {
            rest /= &pp;
            square *= &p;
        }
        while (&rest % &p).is_zero() {
            rest /= &p;
        }
        p += if p == two { BigUint::one() } else { two.clone() };
    }
    let r = rest.sqrt();
    if &r * &r == rest {
        square *= r;
    }
    square
}

/// gcd of a non-empty list of integers (non-negative result).
pub fn gcd_all<'a>(xs: impl IntoIterator<Item = &'a BigInt>) -> BigInt {
    xs.into_iter().fold(BigInt::zero(), |g, x| g.gcd(x))
}
