//! Scalar abstraction over the two arithmetic modes.
//!
//! Predicate evaluation during proof-obligation checking must not report
//! float-induced false counterexamples, so the default scalar is an exact
//! rational ([`Rat`]). A plain `f64` mode is available for fast sweeps; it
//! compares equalities up to a relative tolerance of `1e-9`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Relative tolerance used by the float mode for equality-shaped predicates.
pub const FLOAT_REL_EPS: f64 = 1e-9;

/// Numeric type the whole workbench is generic over.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// True when arithmetic is exact (closed under +, -, *, / by nonzero).
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact mode: `==`. Float mode: relative comparison with [`FLOAT_REL_EPS`].
    fn approx_eq(&self, other: &Self) -> bool;
    fn is_finite_val(&self) -> bool;
    /// Canonical report representation ("7/2" in exact mode).
    fn repr(&self) -> String;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
    fn min_s(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }
    fn max_s(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
    fn half(self) -> Self {
        self / Self::from_int(2)
    }
    fn sq(&self) -> Self {
        self.clone() * self.clone()
    }
}

// ---------------------------------------------------------------------------
// Exact rationals: i128 fast path, BigRational on overflow.
// ---------------------------------------------------------------------------

/// Exact rational number.
///
/// Stays on a reduced `i128` numerator/denominator pair as long as every
/// intermediate fits; any overflowing operation promotes to [`BigRational`].
/// Results that fit i128 again are demoted, so the representation of a value
/// is canonical regardless of the path that computed it.
#[derive(Clone, Debug)]
pub enum Rat {
    Small(i128, i128), // reduced, den > 0
    Big(BigRational),
}

impl Rat {
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        Self::small_reduced(num, den)
    }

    fn small_reduced(num: i128, den: i128) -> Self {
        let (mut n, mut d) = if den < 0 { (-num, -den) } else { (num, den) };
        if n == 0 {
            return Rat::Small(0, 1);
        }
        let g = n.abs().gcd(&d);
        n /= g;
        d /= g;
        Rat::Small(n, d)
    }

    fn to_big(&self) -> BigRational {
        match self {
            Rat::Small(n, d) => BigRational::new(BigInt::from(*n), BigInt::from(*d)),
            Rat::Big(b) => b.clone(),
        }
    }

    /// Demote a big rational back to the i128 representation when it fits.
    fn from_big(b: BigRational) -> Self {
        if let (Some(n), Some(d)) = (b.numer().to_i128(), b.denom().to_i128()) {
            Rat::Small(n, d)
        } else {
            Rat::Big(b)
        }
    }

    pub fn numer_repr(&self) -> String {
        match self {
            Rat::Small(n, _) => n.to_string(),
            Rat::Big(b) => b.numer().to_string(),
        }
    }

    pub fn denom_repr(&self) -> String {
        match self {
            Rat::Small(_, d) => d.to_string(),
            Rat::Big(b) => b.denom().to_string(),
        }
    }

    fn cmp_rat(&self, other: &Rat) -> Ordering {
        match (self, other) {
            (Rat::Small(n1, d1), Rat::Small(n2, d2)) => {
                match (n1.checked_mul(*d2), n2.checked_mul(*d1)) {
                    (Some(a), Some(b)) => a.cmp(&b),
                    _ => self.to_big().cmp(&other.to_big()),
                }
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialEq for Rat {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_rat(other) == Ordering::Equal
    }
}
impl Eq for Rat {}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_rat(other))
    }
}
impl Ord for Rat {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_rat(other)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rat::Small(n, 1) => write!(f, "{n}"),
            Rat::Small(n, d) => write!(f, "{n}/{d}"),
            Rat::Big(b) => write!(f, "{b}"),
        }
    }
}

impl Add for Rat {
    type Output = Rat;
    fn add(self, rhs: Rat) -> Rat {
        if let (Rat::Small(n1, d1), Rat::Small(n2, d2)) = (&self, &rhs) {
            let g = d1.gcd(d2);
            let l2 = d2 / g;
            if let (Some(a), Some(b), Some(den)) = (
                n1.checked_mul(l2),
                n2.checked_mul(d1 / g),
                d1.checked_mul(l2),
            ) {
                if let Some(num) = a.checked_add(b) {
                    return Rat::small_reduced(num, den);
                }
            }
        }
        Rat::from_big(self.to_big() + rhs.to_big())
    }
}

impl Sub for Rat {
    type Output = Rat;
    fn sub(self, rhs: Rat) -> Rat {
        self + (-rhs)
    }
}

impl Mul for Rat {
    type Output = Rat;
    fn mul(self, rhs: Rat) -> Rat {
        if let (Rat::Small(n1, d1), Rat::Small(n2, d2)) = (&self, &rhs) {
            // cross-reduce first to keep intermediates small
            let g1 = n1.abs().gcd(d2);
            let g2 = n2.abs().gcd(d1);
            if let (Some(num), Some(den)) =
                ((n1 / g1).checked_mul(n2 / g2), (d1 / g2).checked_mul(d2 / g1))
            {
                return Rat::small_reduced(num, den);
            }
        }
        Rat::from_big(self.to_big() * rhs.to_big())
    }
}

impl Div for Rat {
    type Output = Rat;
    fn div(self, rhs: Rat) -> Rat {
        match rhs {
            Rat::Small(n, d) => {
                assert!(n != 0, "division by zero");
                self * Rat::small_reduced(d, n)
            }
            Rat::Big(b) => {
                assert!(!b.is_zero(), "division by zero");
                Rat::from_big(self.to_big() / b)
            }
        }
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        match self {
            Rat::Small(n, d) => Rat::Small(-n, d),
            Rat::Big(b) => Rat::from_big(-b),
        }
    }
}

impl Scalar for Rat {
    const EXACT: bool = true;

    fn zero() -> Self {
        Rat::Small(0, 1)
    }
    fn one() -> Self {
        Rat::Small(1, 1)
    }
    fn from_int(n: i64) -> Self {
        Rat::Small(n as i128, 1)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Rat::new(num as i128, den as i128)
    }
    fn to_f64(&self) -> f64 {
        match self {
            Rat::Small(n, d) => *n as f64 / *d as f64,
            Rat::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }
    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }
    fn is_finite_val(&self) -> bool {
        true
    }
    fn repr(&self) -> String {
        self.to_string()
    }
}

// ---------------------------------------------------------------------------
// Float mode
// ---------------------------------------------------------------------------

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(n: i64) -> Self {
        n as f64
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn approx_eq(&self, other: &Self) -> bool {
        let scale = 1f64.max(self.abs()).max(other.abs());
        (self - other).abs() <= FLOAT_REL_EPS * scale
    }
    fn is_finite_val(&self) -> bool {
        self.is_finite()
    }
    fn repr(&self) -> String {
        format!("{self:?}")
    }
}

/// Parses "3", "-7/2" or "1.75" into a scalar. Decimal inputs are read as
/// exact ratios before conversion, so exact mode round-trips them.
pub fn parse_scalar<S: Scalar>(s: &str) -> crate::error::Result<S> {
    let t = s.trim();
    let bad = || crate::error::Error::Config {
        field: "scalar".into(),
        msg: format!("cannot parse `{t}` as a number"),
    };
    if let Some((n, d)) = t.split_once('/') {
        let num: i64 = n.trim().parse().map_err(|_| bad())?;
        let den: i64 = d.trim().parse().map_err(|_| bad())?;
        if den <= 0 {
            return Err(bad());
        }
        return Ok(S::from_ratio(num, den));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let whole: i64 = int.trim().parse().map_err(|_| bad())?;
        if frac.is_empty() || frac.len() > 12 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let num: i64 = frac.parse().map_err(|_| bad())?;
        let den = 10i64.pow(frac.len() as u32);
        let frac_part = S::from_ratio(if neg { -num } else { num }, den);
        return Ok(S::from_int(whole) + frac_part);
    }
    let n: i64 = t.parse().map_err(|_| bad())?;
    Ok(S::from_int(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn small_arithmetic_matches_display() {
        let a = Rat::new(3, 4) + Rat::new(1, 4);
        assert_eq!(a, Rat::from_int(1));
        assert_eq!(a.to_string(), "1");
        assert_eq!((Rat::new(1, 3) * Rat::new(3, 7)).to_string(), "1/7");
        assert_eq!((Rat::new(-1, 2)).to_string(), "-1/2");
        assert_eq!((Rat::new(1, -2)).to_string(), "-1/2");
    }

    #[test]
    fn overflow_promotes_and_demotes() {
        let big_val = Rat::new(i128::MAX / 2, 3);
        let r = big_val.clone() * Rat::new(5, 1); // overflows i128 numerator
        let back = r / Rat::new(5, 1);
        assert_eq!(back, big_val);
        assert!(matches!(back, Rat::Small(_, _)));
    }

    proptest! {
        // Oracle: BigRational arithmetic.
        #[test]
        fn matches_bigrational_oracle(
            n1 in -1_000_000i64..1_000_000, d1 in 1i64..5000,
            n2 in -1_000_000i64..1_000_000, d2 in 1i64..5000,
        ) {
            let a = Rat::from_ratio(n1, d1);
            let b = Rat::from_ratio(n2, d2);
            let (oa, ob) = (big(n1, d1), big(n2, d2));
            prop_assert_eq!((a.clone() + b.clone()).to_big(), oa.clone() + ob.clone());
            prop_assert_eq!((a.clone() - b.clone()).to_big(), oa.clone() - ob.clone());
            prop_assert_eq!((a.clone() * b.clone()).to_big(), oa.clone() * ob.clone());
            if n2 != 0 {
                prop_assert_eq!((a.clone() / b.clone()).to_big(), oa.clone() / ob.clone());
            }
            prop_assert_eq!(a.partial_cmp(&b), oa.partial_cmp(&ob));
        }
    }
}
