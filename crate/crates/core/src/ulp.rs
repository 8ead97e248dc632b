//! Unit-in-the-last-place arithmetic on binary64 values.
//!
//! The ULP here is `eps * 2^E` with `E` the unbiased exponent of the value,
//! so stepping down from an exact power of two moves by the ULP of the upper
//! binade (two representable values below `1.0` rather than one). Zero and
//! subnormals use the smallest positive subnormal.

use crate::error::{Error, Result};

/// Smallest positive subnormal binary64 value, `2^-1074`.
pub const MIN_SUBNORMAL: f64 = 4.9406564584124654e-324;

const EXP_BIAS: i32 = 1023;
const FRACTION_BITS: i32 = 52;

/// Parameters of a binary interchange format, as far as ULP sizes are
/// concerned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FloatFormat {
    /// Significand precision including the implicit leading bit.
    pub significand_bits: u32,
    /// Unbiased exponent of the smallest normal value.
    pub min_exponent: i32,
}

impl FloatFormat {
    pub const BINARY32: FloatFormat = FloatFormat {
        significand_bits: 24,
        min_exponent: -126,
    };
    pub const BINARY64: FloatFormat = FloatFormat {
        significand_bits: 53,
        min_exponent: -1022,
    };

    /// `2^-(significand_bits - 1)`.
    pub fn machine_epsilon(&self) -> f64 {
        pow2(1 - self.significand_bits as i32)
    }

    /// ULP of `x` measured in this format. `x` is a binary64 value; only its
    /// binary exponent matters, so a 32-bit ULP can be taken of a 64-bit
    /// input without rounding it first.
    pub fn ulp_of(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("ulp of non-finite value {x}")));
        }
        let e = match binary_exponent(x) {
            Some(e) if e >= self.min_exponent => e,
            _ => self.min_exponent,
        };
        Ok(pow2(e - (self.significand_bits as i32 - 1)))
    }
}

/// Unbiased binary exponent `floor(log2 |x|)` of a finite nonzero value,
/// subnormals included. `None` for zero and non-finite values.
pub fn binary_exponent(x: f64) -> Option<i32> {
    if x == 0.0 || !x.is_finite() {
        return None;
    }
    let bits = x.to_bits();
    let biased = ((bits >> FRACTION_BITS) & 0x7ff) as i32;
    if biased != 0 {
        return Some(biased - EXP_BIAS);
    }
    let fraction = bits & ((1u64 << FRACTION_BITS) - 1);
    let top = 63 - fraction.leading_zeros() as i32;
    Some(top - 1074)
}

/// Exact `2^k` for `k` in the binary64 range, saturating to 0 / +inf outside
/// it.
pub fn pow2(k: i32) -> f64 {
    if k > EXP_BIAS {
        f64::INFINITY
    } else if k >= 1 - EXP_BIAS {
        f64::from_bits(((k + EXP_BIAS) as u64) << FRACTION_BITS)
    } else if k >= -1074 {
        f64::from_bits(1u64 << (k + 1074))
    } else {
        0.0
    }
}

/// Binary64 ULP of a value whose unbiased exponent is `e`; exponents below
/// the normal range map to the smallest subnormal.
pub fn ulp_for_exponent(e: i32) -> f64 {
    if e < FloatFormat::BINARY64.min_exponent {
        MIN_SUBNORMAL
    } else {
        pow2(e - FRACTION_BITS)
    }
}

/// `eps * 2^E` for finite `x`; `2^-1074` for zero and subnormals.
pub fn ulp_of(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("ulp of non-finite value {x}")));
    }
    Ok(ulp_of_finite(x))
}

#[inline]
pub(crate) fn ulp_of_finite(x: f64) -> f64 {
    let biased = ((x.to_bits() >> FRACTION_BITS) & 0x7ff) as i32;
    if biased == 0 {
        MIN_SUBNORMAL
    } else {
        ulp_for_exponent(biased - EXP_BIAS)
    }
}

/// `x - ulp_of(x)` evaluated in binary64.
pub fn sub_one_ulp(x: f64) -> Result<f64> {
    Ok(x - ulp_of(x)?)
}

/// `x + steps * ulp_of(x)`; `shift_ulps(x, -1) == sub_one_ulp(x)`.
pub fn shift_ulps(x: f64, steps: i64) -> Result<f64> {
    Ok(x + steps as f64 * ulp_of(x)?)
}

/// `|a - b| / ulp_of(reference)`.
pub fn ulp_distance(a: f64, b: f64, reference: f64) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!(
            "ulp distance between non-finite values {a} and {b}"
        )));
    }
    Ok((a - b).abs() / ulp_of(reference)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent route: next representable value above |x| by bit increment.
    fn gap_above(x: f64) -> f64 {
        let a = x.abs();
        f64::from_bits(a.to_bits() + 1) - a
    }

    #[test]
    fn ulp_of_one_is_epsilon() {
        assert_eq!(ulp_of(1.0).unwrap(), f64::EPSILON);
        assert_eq!(ulp_of(1.0).unwrap(), 2.220446049250313e-16);
    }

    #[test]
    fn ulp_of_zero_is_min_subnormal() {
        assert_eq!(ulp_of(0.0).unwrap(), MIN_SUBNORMAL);
        assert_eq!(MIN_SUBNORMAL.to_bits(), 1);
        assert_eq!(ulp_of(-0.0).unwrap(), MIN_SUBNORMAL);
        assert_eq!(ulp_of(f64::MIN_POSITIVE / 8.0).unwrap(), MIN_SUBNORMAL);
    }

    #[test]
    fn ulp_of_three_matches_bit_gap() {
        assert_eq!(ulp_of(3.0).unwrap(), gap_above(3.0));
        assert_eq!(ulp_of(3.0).unwrap(), pow2(-51));
    }

    #[test]
    fn non_finite_is_domain_error() {
        assert!(matches!(ulp_of(f64::NAN), Err(Error::Domain(_))));
        assert!(sub_one_ulp(f64::INFINITY).is_err());
        assert!(ulp_distance(f64::NEG_INFINITY, 1.0, 1.0).is_err());
        assert!(ulp_distance(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn sub_one_ulp_examples() {
        let below_one = sub_one_ulp(1.0).unwrap();
        assert_eq!(below_one, 0.9999999999999998);
        // A full ULP of 1.0 skips the value directly below it.
        assert_eq!(below_one.to_bits(), 1.0f64.to_bits() - 2);
        assert_eq!(sub_one_ulp(0.0).unwrap(), -MIN_SUBNORMAL);
        let perturbed = sub_one_ulp(0.19999999999999993).unwrap();
        assert_eq!(perturbed - 0.2, -1.1102230246251565e-16);
    }

    #[test]
    fn ulp_distance_examples() {
        assert_eq!(ulp_distance(0.3, 0.3, 0.3).unwrap(), 0.0);
        let d = ulp_distance(
            -8.326672684688674e-17,
            -1.1102230246251565e-16,
            -8.326672684688674e-17,
        )
        .unwrap();
        assert!((d / 2.2518e15 - 1.0).abs() < 1e-4, "{d}");
        assert_eq!(ulp_distance(1.0 + f64::EPSILON, 1.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn formats() {
        assert_eq!(FloatFormat::BINARY64.machine_epsilon(), f64::EPSILON);
        assert_eq!(
            FloatFormat::BINARY32.machine_epsilon(),
            f32::EPSILON as f64
        );
        assert_eq!(FloatFormat::BINARY64.ulp_of(3.0).unwrap(), ulp_of(3.0).unwrap());
        let x = 1.3694384060045659f64;
        let expected = (x as f32).to_bits() + 1;
        let gap32 = (f32::from_bits(expected) - x as f32) as f64;
        assert_eq!(FloatFormat::BINARY32.ulp_of(x).unwrap(), gap32);
        assert_eq!(FloatFormat::BINARY32.ulp_of(0.0).unwrap(), pow2(-149));
    }

    #[test]
    fn binary_exponent_of_subnormals() {
        assert_eq!(binary_exponent(MIN_SUBNORMAL), Some(-1074));
        assert_eq!(binary_exponent(f64::MIN_POSITIVE), Some(-1022));
        assert_eq!(binary_exponent(f64::MIN_POSITIVE / 2.0), Some(-1023));
        assert_eq!(binary_exponent(0.0), None);
        assert_eq!(binary_exponent(-6.0), Some(2));
    }
}
