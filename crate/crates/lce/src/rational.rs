//! Exact rational helpers shared by every module.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qu(n: u64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// `2^k` for any integer `k`, negative exponents included.
pub fn pow2(k: i64) -> Q {
    if k >= 0 {
        Q::from_integer(BigInt::one() << (k as usize))
    } else {
        Q::new(BigInt::one(), BigInt::one() << ((-k) as usize))
    }
}

/// `floor(log2(x))` for a positive rational, computed exactly.
pub fn floor_log2(x: &Q) -> i64 {
    assert!(x.is_positive(), "floor_log2 of a non-positive value");
    let (n, d) = (x.numer(), x.denom());
    let mut k = n.bits() as i64 - d.bits() as i64;
    // 2^k <= x < 2^(k+1) is reached after at most one correction each way.
    while pow2(k) > *x {
        k -= 1;
    }
    while pow2(k + 1) <= *x {
        k += 1;
    }
    k
}

pub fn floor_log2_u64(x: u64) -> i64 {
    assert!(x > 0);
    63 - x.leading_zeros() as i64
}

pub fn ceil_log2_u64(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros() as u64
    }
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        if x.is_positive() {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    })
}

/// Exact conversion of a finite float.
pub fn from_f64(x: f64) -> Q {
    Q::from_float(x).expect("finite float")
}

/// A rational no larger than `x` with denominator `2^bits`.
pub fn floor_dyadic(x: f64, bits: u32) -> Q {
    let scale = (1u64 << bits) as f64;
    let n = (x * scale).floor();
    Q::new(BigInt::from(n as i128), BigInt::one() << bits as usize)
}

pub fn ceil_q(x: &Q) -> BigInt {
    x.ceil().to_integer()
}

pub fn ceil_u64(x: &Q) -> u64 {
    ceil_q(x).to_u64().expect("ceil fits in u64")
}

pub fn is_integer(x: &Q) -> bool {
    x.denom().is_one()
}

pub fn to_u64(x: &Q) -> Option<u64> {
    if is_integer(x) {
        x.numer().to_u64()
    } else {
        None
    }
}

pub fn min_q(a: &Q, b: &Q) -> Q {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

/// Accepts `p/q`, an integer, or a plain decimal such as `0.25` (no exponent notation).
pub fn parse_q(s: &str) -> Result<Q, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let d: BigInt = b.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(Q::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(format!("empty number {s:?}"));
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(format!("bad number {s:?}"));
    }
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().unwrap() };
    let d = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let v = Q::new(n, d);
    Ok(if neg { -v } else { v })
}

/// Canonical text form: `p/q` in lowest terms, or `p` for integers.
pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn lcm_u64(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

pub fn sign(x: &Q) -> Sign {
    x.numer().sign()
}

/// A rational or positive infinity; used for congestion and sparsity.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtQ {
    Finite(Q),
    Infinite,
}

impl ExtQ {
    pub fn finite(&self) -> Option<&Q> {
        match self {
            ExtQ::Finite(x) => Some(x),
            ExtQ::Infinite => None,
        }
    }

    pub fn le_q(&self, bound: &Q) -> bool {
        matches!(self, ExtQ::Finite(x) if x <= bound)
    }

    pub fn ge_q(&self, bound: &Q) -> bool {
        match self {
            ExtQ::Finite(x) => x >= bound,
            ExtQ::Infinite => true,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtQ::Finite(x) => to_f64(x),
            ExtQ::Infinite => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for ExtQ {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtQ::Finite(x) => write!(f, "{}", fmt_q(x)),
            ExtQ::Infinite => write!(f, "inf"),
        }
    }
}

impl serde::Serialize for ExtQ {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Serializes a rational as its canonical `p/q` string.
pub fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_q(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_log2_matches_definition() {
        assert_eq!(floor_log2(&q(1)), 0);
        assert_eq!(floor_log2(&q(3)), 1);
        assert_eq!(floor_log2(&q(4)), 2);
        assert_eq!(floor_log2(&qr(1, 2)), -1);
        assert_eq!(floor_log2(&qr(3, 4)), -1);
        assert_eq!(floor_log2(&qr(1, 3)), -2);
        assert_eq!(floor_log2(&qr(1023, 1024)), -1);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["3/4", "5", "0", "-7/3"] {
            assert_eq!(fmt_q(&parse_q(s).unwrap()), s);
        }
        assert_eq!(parse_q("0.25").unwrap(), qr(1, 4));
        assert_eq!(parse_q("2.5").unwrap(), qr(5, 2));
        assert_eq!(parse_q(".5").unwrap(), qr(1, 2));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
    }

    #[test]
    fn log2_helpers() {
        assert_eq!(ceil_log2_u64(1), 0);
        assert_eq!(ceil_log2_u64(2), 1);
        assert_eq!(ceil_log2_u64(5), 3);
        assert_eq!(floor_log2_u64(5), 2);
        assert_eq!(pow2(-3), qr(1, 8));
    }

    proptest::proptest! {
        #[test]
        fn fmt_parse_round_trip(n in -10_000i64..10_000, d in 1i64..10_000) {
            let x = qr(n, d);
            proptest::prop_assert_eq!(parse_q(&fmt_q(&x)).unwrap(), x);
        }

        #[test]
        fn floor_log2_brackets(n in 1i64..1_000_000, d in 1i64..1_000_000) {
            let x = qr(n, d);
            let k = floor_log2(&x);
            proptest::prop_assert!(pow2(k) <= x && x < pow2(k + 1));
        }
    }
}
