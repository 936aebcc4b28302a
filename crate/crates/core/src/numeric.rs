//! Small exact/approximate numeric helpers shared by the engines.
//!
//! Everything that has to be exact (digits, run lengths, scales, coarse
//! logarithms at construction scale) lives in `BigUint` / `BigRational`.
//! Floating point only enters when a value is reported or compared against
//! an epsilon that is itself a double.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Scales live on a dyadic grid of this many fractional bits.
pub const GRID_BITS: u32 = 32;

/// Natural log of a positive big integer, accurate to ~1 ulp of the result.
pub fn ln_biguint(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "ln of zero");
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap() as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a positive rational. The quotient is formed with 64
/// significant bits before taking the log, so nearly equal numerator and
/// denominator do not lose precision through cancellation of two big logs.
pub fn ln_rational(x: &BigRational) -> f64 {
    assert!(x.is_positive(), "ln of non-positive rational");
    let num = x.numer().magnitude();
    let den = x.denom().magnitude();
    let e = num.bits() as i64 - den.bits() as i64;
    let shift = 64 - e;
    let q = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    let qf = q.to_f64().unwrap();
    qf.ln() - shift as f64 * std::f64::consts::LN_2
}

/// Nearest-ish f64 of a rational (truncated to 64 significant bits first).
pub fn rational_to_f64(x: &BigRational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let neg = x.is_negative();
    let num = x.numer().magnitude();
    let den = x.denom().magnitude();
    let e = num.bits() as i64 - den.bits() as i64;
    let shift = 64 - e;
    let q = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    // two-step scaling keeps tiny and huge exponents from under/overflowing early
    let half_shift = -(shift as f64) / 2.0;
    let v = q.to_f64().unwrap() * 2f64.powf(half_shift) * 2f64.powf(-(shift as f64) - half_shift);
    if neg {
        -v
    } else {
        v
    }
}

/// Exact rational value of a finite double.
pub fn f64_to_rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn uint_to_rational(n: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(n.clone()))
}

pub fn half() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2))
}

/// 2^-bits as an exact rational.
pub fn pow2_neg(bits: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << bits)
}

fn grid_den() -> BigInt {
    BigInt::one() << GRID_BITS
}

/// Round a double up onto the dyadic grid.
pub fn grid_ceil_f64(x: f64) -> BigRational {
    let r = f64_to_rational(x) * BigRational::from_integer(grid_den());
    BigRational::new(r.ceil().to_integer(), grid_den())
}

/// Round a rational up onto the dyadic grid.
pub fn grid_ceil(x: &BigRational) -> BigRational {
    let r = x * BigRational::from_integer(grid_den());
    BigRational::new(r.ceil().to_integer(), grid_den())
}

/// Floor of a non-negative rational as a BigUint.
pub fn floor_uint(x: &BigRational) -> BigUint {
    let f = x.floor().to_integer();
    if f.is_negative() {
        BigUint::zero()
    } else {
        f.magnitude().clone()
    }
}

/// Exact decimal rendering of a rational whose denominator has only 2s and
/// 5s. Returns `None` for anything else.
pub fn rational_to_decimal(x: &BigRational) -> Option<String> {
    let den = x.denom().magnitude().clone();
    let mut d = den.clone();
    let (mut twos, mut fives) = (0u32, 0u32);
    let two = BigUint::from(2u32);
    let five = BigUint::from(5u32);
    while d.is_even() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return None;
    }
    let digits = twos.max(fives);
    let scale = BigUint::from(10u32).pow(digits);
    let scaled = x.numer().magnitude() * (&scale / &den);
    let mut s = scaled.to_str_radix(10);
    if digits > 0 {
        while s.len() <= digits as usize {
            s.insert(0, '0');
        }
        s.insert(s.len() - digits as usize, '.');
        let trimmed = s.trim_end_matches('0').trim_end_matches('.');
        s = trimmed.to_string();
    }
    if x.is_negative() {
        s.insert(0, '-');
    }
    Some(s)
}

/// Parse a plain decimal literal (`-12.5`, `3`, `1.25e-3`) into an exact rational.
pub fn parse_decimal(s: &str) -> Result<BigRational> {
    let bad = || Error::Parse {
        context: "decimal".into(),
        message: format!("not a decimal literal: {s:?}"),
    };
    let t = s.trim();
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(pos) => (&t[..pos], t[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = match mant.find('.') {
        Some(pos) => (&mant[..pos], &mant[pos + 1..]),
        None => (mant, ""),
    };
    if ip.is_empty() && fp.is_empty() {
        return Err(bad());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{ip}{fp}");
    let n = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse::<BigInt>().map_err(|_| bad())?
    };
    let exp10 = exp - fp.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if exp10 >= 0 {
        BigRational::from_integer(n * ten.pow(exp10 as u32))
    } else {
        BigRational::new(n, ten.pow((-exp10) as u32))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

pub fn parse_biguint(s: &str, context: &str) -> Result<BigUint> {
    s.trim().parse::<BigUint>().map_err(|e| Error::Parse {
        context: context.into(),
        message: format!("{s:?}: {e}"),
    })
}

pub fn parse_f64(s: &str, context: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse {
        context: context.into(),
        message: format!("{s:?}: {e}"),
    })
}

/// Shortest round-trip text for a double.
pub fn f64_str(x: f64) -> String {
    format!("{x:?}")
}

/// Bits needed to hold round(e^s - e^-s) for a scale s (upper estimate).
pub fn digit_bits_for_scale(s: &BigRational) -> u64 {
    let sf = rational_to_f64(s);
    (sf * std::f64::consts::LOG2_E + 2.0).ceil().max(1.0) as u64
}

/// round(e^s - e^-s), the integer whose lambda-value has log closest to s.
/// The scale must lie on the dyadic grid and be at least 1.
pub fn digit_from_scale(s: &BigRational, cap_bits: u64) -> Result<BigUint> {
    let need = digit_bits_for_scale(s);
    if need > cap_bits {
        return Err(Error::DigitCapExceeded {
            required_bits: need,
            cap_bits,
        });
    }
    let m = s * BigRational::from_integer(grid_den());
    if !m.is_integer() || !s.is_positive() {
        return Err(Error::Domain("scale must be a positive grid value".into()));
    }
    let m = m.to_integer().to_u128().ok_or_else(|| {
        Error::Domain("scale mantissa exceeds 128 bits".into())
    })?;
    let p = (((need + 192) / 64) * 64) as usize;
    let rm = RoundingMode::ToEven;
    let mut cc = Consts::new().map_err(|e| Error::InsufficientPrecision(format!("{e:?}")))?;
    let x = BigFloat::from_u128(m, p).div(&BigFloat::from_u128(1u128 << GRID_BITS, p), p, rm);
    let e = x.exp(p, rm, &mut cc);
    let inv = e.reciprocal(p, rm);
    let v = e.sub(&inv, p, rm).add(&BigFloat::from_f64(0.5, p), p, rm).floor();
    bigfloat_to_biguint(&v)
}

fn bigfloat_to_biguint(v: &BigFloat) -> Result<BigUint> {
    let (words, _bits, sign, e, _) = v
        .as_raw_parts()
        .ok_or_else(|| Error::InsufficientPrecision("non-finite big float".into()))?;
    if sign == Sign::Neg {
        return Err(Error::Domain("negative value".into()));
    }
    if e <= 0 {
        return Ok(BigUint::zero());
    }
    let mut limbs = Vec::with_capacity(words.len() * 2);
    for w in words {
        limbs.push(*w as u32);
        limbs.push((*w >> 32) as u32);
    }
    let mant = BigUint::new(limbs);
    let total = words.len() as i64 * 64;
    let shift = total - e as i64;
    Ok(if shift >= 0 {
        mant >> shift as u64
    } else {
        mant << (-shift) as u64
    })
}

/// Absolute bound on |ln lambda(round(e^s - e^-s)) - s| for s >= 1.
///
/// Rounding moves the digit by at most 1/2 and ln lambda has slope below
/// e^-s there, so the error is under e^-s <= 2^-floor(1.44 s). The exponent
/// is capped at 1024 bits to keep the rationals small.
pub fn eta_for_scale(s: &BigRational) -> BigRational {
    let scaled = s * BigRational::new(BigInt::from(144), BigInt::from(100));
    let fl = scaled.floor().to_integer().to_u32().unwrap_or(u32::MAX).clamp(1, 1024);
    pow2_neg(fl)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_helpers_match_f64() {
        let x = BigUint::from(123456789u64);
        assert!((ln_biguint(&x) - 123456789f64.ln()).abs() < 1e-12);
        let big = BigUint::from(3u32).pow(2000);
        assert!((ln_biguint(&big) - 2000.0 * 3f64.ln()).abs() < 1e-9);
        let r = BigRational::new(BigInt::from(355), BigInt::from(113));
        assert!((ln_rational(&r) - (355.0f64 / 113.0).ln()).abs() < 1e-14);
        // nearly one: no cancellation
        let n = BigInt::from(10).pow(40) + 1;
        let r = BigRational::new(n, BigInt::from(10).pow(40));
        assert!(ln_rational(&r) >= 0.0);
        assert!((rational_to_f64(&r) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn decimal_round_trip() {
        for s in ["0", "1", "-2.5", "3.0000000002328306436538696289", "1e3", "12.75"] {
            let r = parse_decimal(s).unwrap();
            let back = rational_to_decimal(&r).unwrap();
            assert_eq!(parse_decimal(&back).unwrap(), r, "{s} -> {back}");
        }
        assert_eq!(rational_to_decimal(&pow2_neg(3)).unwrap(), "0.125");
        assert!(rational_to_decimal(&BigRational::new(1.into(), 3.into())).is_none());
        assert!(parse_decimal("1.2.3").is_err());
        assert!(parse_decimal("").is_err());
    }

    #[test]
    fn digit_from_scale_matches_closed_form() {
        // e^16 - e^-16 = 8886110.5205..., so the rounded digit is 8886111.
        let d = digit_from_scale(&int(16), 4096).unwrap();
        assert_eq!(d, BigUint::from(8886111u64));
        let d = digit_from_scale(&int(32), 4096).unwrap();
        assert_eq!(d, BigUint::from(78962960182681u64));
        // small scale cross-check against f64
        let s = grid_ceil_f64(3.7);
        let sf = rational_to_f64(&s);
        let want = (sf.exp() - (-sf).exp()).round();
        assert_eq!(digit_from_scale(&s, 4096).unwrap().to_f64().unwrap(), want);
    }

    #[test]
    fn eta_bounds_the_scale_error() {
        for x in [1.0, 2.5, 7.25, 16.0, 20.0] {
            let s = grid_ceil_f64(x);
            let d = digit_from_scale(&s, 4096).unwrap().to_f64().unwrap();
            let err = ((d / 2.0).asinh() - rational_to_f64(&s)).abs();
            assert!(err <= rational_to_f64(&eta_for_scale(&s)), "{x}: {err}");
        }
        assert_eq!(eta_for_scale(&int(16)), pow2_neg(23));
        assert_eq!(eta_for_scale(&int(5000)), pow2_neg(1024));
    }

    #[test]
    fn digit_cap_is_enforced() {
        let err = digit_from_scale(&int(5000), 4096).unwrap_err();
        assert!(matches!(err, Error::DigitCapExceeded { .. }));
    }

    #[test]
    fn grid_rounding_is_upward() {
        let g = grid_ceil_f64(std::f64::consts::PI);
        assert!(rational_to_f64(&g) >= std::f64::consts::PI);
        assert!(rational_to_f64(&g) - std::f64::consts::PI < 1e-9);
    }
}
