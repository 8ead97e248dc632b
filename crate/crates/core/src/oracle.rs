//! Extended-precision ground truth.
//!
//! The oracle replays the same operation sequence as the binary64 program
//! with every intermediate held at a wider significand (128 bits by
//! default), which is adequate for the straight-line programs and LU solves
//! in this crate. Inputs enter exactly; decimal literals are rounded from
//! their source text at oracle precision, so `0.2` means one fifth rather
//! than its binary64 neighbour.

use std::cmp::Ordering;
use std::fmt;

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use serde::{Deserialize, Serialize};

use crate::arith::Arithmetic;
use crate::condnum::AtomicOp;
use crate::dsl::{Bindings, InputTexts, Program};
use crate::error::{Error, Lane, Result};
use crate::metrics::classify_significant;
use crate::ulp;

const RM: RoundingMode = RoundingMode::ToEven;

/// Extra working precision for `pow`, enough to absorb `|y ln x|` up to
/// 2^64 before the final rounding.
const POW_GUARD_BITS: usize = 128;
const WORD_BITS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Requested significand width. The arithmetic backend works in whole
    /// 64-bit words, so the effective width is this rounded up to a multiple
    /// of 64.
    pub significand_bits: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            significand_bits: 128,
        }
    }
}

impl OracleConfig {
    pub const MIN_BITS: usize = 113;

    pub fn new(significand_bits: usize) -> Result<Self> {
        let config = OracleConfig { significand_bits };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.significand_bits < Self::MIN_BITS {
            return Err(Error::Argument(format!(
                "oracle precision must be at least {} bits, got {}",
                Self::MIN_BITS,
                self.significand_bits
            )));
        }
        Ok(())
    }

    pub fn effective_bits(&self) -> usize {
        self.significand_bits.div_ceil(WORD_BITS) * WORD_BITS
    }
}

/// An extended-precision real.
#[derive(Debug, Clone)]
pub struct BigReal(BigFloat);

impl BigReal {
    pub fn from_f64(x: f64, config: &OracleConfig) -> Self {
        let p = config.effective_bits();
        if x != 0.0 && x.abs() < f64::MIN_POSITIVE {
            // astro-float misplaces the exponent of subnormal inputs by one;
            // scale into the normal range and back, both steps exact.
            let scaled = BigFloat::from_f64(x * ulp::pow2(64), p);
            let back = BigFloat::from_f64(ulp::pow2(-64), p);
            return BigReal(scaled.mul(&back, p, RM));
        }
        BigReal(BigFloat::from_f64(x, p))
    }

    pub fn inner(&self) -> &BigFloat {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }

    pub fn abs(&self) -> BigReal {
        BigReal(self.0.abs())
    }

    /// Unbiased binary exponent `floor(log2 |x|)`; `None` for zero and
    /// non-finite values.
    pub fn binary_exponent(&self) -> Option<i32> {
        if self.0.is_zero() || !self.is_finite() {
            return None;
        }
        // astro-float keeps the mantissa in [0.5, 1).
        self.0.exponent().map(|e| e - 1)
    }

    /// Correctly rounded (nearest-even) conversion to binary64.
    pub fn to_f64(&self) -> f64 {
        let x = &self.0;
        if x.is_nan() {
            return f64::NAN;
        }
        if x.is_inf_pos() {
            return f64::INFINITY;
        }
        if x.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        if x.is_zero() {
            return if x.is_negative() { -0.0 } else { 0.0 };
        }
        let Some((words, _, sign, exponent, _)) = x.as_raw_parts() else {
            return f64::NAN;
        };
        let negative = matches!(sign, Sign::Neg);
        let top = *words.last().expect("nonzero mantissa");
        let sticky = words[..words.len() - 1].iter().any(|&w| w != 0);
        // Bit 0 sits below the binary64 rounding position, so it can carry
        // the sticky information.
        let m = top | sticky as u64;
        let lead = exponent - 1;
        let magnitude = if lead > 1023 {
            f64::INFINITY
        } else if lead >= -1022 {
            (m as f64) * ulp::pow2(-63) * ulp::pow2(lead)
        } else {
            let keep = lead + 1075;
            if keep <= 0 {
                if keep == 0 && m > 1u64 << 63 {
                    ulp::MIN_SUBNORMAL
                } else {
                    0.0
                }
            } else {
                let shift = (64 - keep) as u32;
                let q = m >> shift;
                let rem = m & ((1u64 << shift) - 1);
                let half = 1u64 << (shift - 1);
                let q = if rem > half || (rem == half && q & 1 == 1) { q + 1 } else { q };
                q as f64 * ulp::MIN_SUBNORMAL
            }
        };
        if negative {
            -magnitude
        } else {
            magnitude
        }
    }

    pub fn cmp_value(&self, other: &BigReal) -> Option<Ordering> {
        self.0.cmp(&other.0).map(|c| c.cmp(&0))
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for BigReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Extended-precision arithmetic with its own constants cache.
pub struct Oracle {
    config: OracleConfig,
    consts: Consts,
    op_count: usize,
}

impl fmt::Debug for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Oracle")
            .field("config", &self.config)
            .field("op_count", &self.op_count)
            .finish()
    }
}

impl Oracle {
    pub fn new(config: OracleConfig) -> Result<Self> {
        config.validate()?;
        let consts = Consts::new().map_err(|e| Error::Oracle(format!("{e:?}")))?;
        Ok(Oracle {
            config,
            consts,
            op_count: 0,
        })
    }

    pub fn config(&self) -> &OracleConfig {
        &self.config
    }

    fn p(&self) -> usize {
        self.config.effective_bits()
    }

    /// Round decimal text at oracle precision; hex-float text is exact.
    pub fn parse_literal(&mut self, value: f64, text: &str) -> Result<BigReal> {
        let t = text.trim();
        let unsigned = t.strip_prefix(['-', '+']).unwrap_or(t);
        if unsigned.starts_with("0x") || unsigned.starts_with("0X") {
            return Ok(BigReal::from_f64(value, &self.config));
        }
        let p = self.p();
        let v = BigFloat::parse(t.strip_prefix('+').unwrap_or(t), Radix::Dec, p, RM, &mut self.consts);
        if v.is_nan() {
            return Err(Error::Oracle(format!("cannot parse literal `{t}`")));
        }
        Ok(BigReal(v))
    }

    fn in_domain(&self, op: AtomicOp, x: &BigFloat, y: Option<&BigFloat>) -> bool {
        let cmp_one = |v: &BigFloat| v.abs().cmp(&BigFloat::from_f64(1.0, WORD_BITS));
        match op {
            AtomicOp::Log | AtomicOp::Log10 => x.is_positive() && !x.is_zero(),
            AtomicOp::Asin | AtomicOp::Acos => cmp_one(x).is_some_and(|c| c <= 0),
            AtomicOp::Sqrt => x.is_zero() || x.is_positive(),
            AtomicOp::Pow => {
                let y_pos = y.is_some_and(|y| y.is_positive() && !y.is_zero());
                (x.is_positive() && !x.is_zero()) || (x.is_zero() && y_pos)
            }
            _ => true,
        }
    }
}

impl Arithmetic for Oracle {
    type Value = BigReal;

    fn input(&mut self, x: f64) -> Result<BigReal> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("non-finite input {x}")));
        }
        Ok(BigReal::from_f64(x, &self.config))
    }

    fn literal(&mut self, value: f64, text: &str) -> Result<BigReal> {
        self.parse_literal(value, text)
    }

    fn apply(&mut self, op: AtomicOp, a: &BigReal, b: Option<&BigReal>) -> Result<BigReal> {
        let op_index = self.op_count;
        self.op_count += 1;
        let p = self.p();
        let x = &a.0;
        let y = b.map(|b| &b.0);
        if op.arity() == 2 && y.is_none() || op.arity() == 1 && y.is_some() {
            return Err(Error::Argument(format!("wrong operand count for {op}")));
        }
        if !self.in_domain(op, x, y) {
            return Err(Error::OpDomain {
                op,
                lane: Lane::Oracle,
                op_index,
            });
        }
        let cc = &mut self.consts;
        let rhs = || y.expect("binary op has a right operand");
        let r = match op {
            AtomicOp::Add => x.add(rhs(), p, RM),
            AtomicOp::Sub => x.sub(rhs(), p, RM),
            AtomicOp::Mul => x.mul(rhs(), p, RM),
            AtomicOp::Div => x.div(rhs(), p, RM),
            AtomicOp::Sin => x.sin(p, RM, cc),
            AtomicOp::Cos => x.cos(p, RM, cc),
            AtomicOp::Tan => x.tan(p, RM, cc),
            AtomicOp::Asin => x.asin(p, RM, cc),
            AtomicOp::Acos => x.acos(p, RM, cc),
            AtomicOp::Sinh => x.sinh(p, RM, cc),
            AtomicOp::Cosh => x.cosh(p, RM, cc),
            AtomicOp::Exp => x.exp(p, RM, cc),
            AtomicOp::Log => x.ln(p, RM, cc),
            AtomicOp::Log10 => x.log10(p, RM, cc),
            AtomicOp::Pow if x.is_zero() => BigFloat::new(p),
            AtomicOp::Pow => {
                // astro-float's own pow never terminates on exactly
                // representable results (1.5^2); go through exp and ln with
                // guard bits instead.
                let w = p + POW_GUARD_BITS;
                let t = x.ln(w, RM, cc).mul(rhs(), w, RM);
                let mut r = t.exp(w, RM, cc);
                if r.set_precision(p, RM).is_err() {
                    r = BigFloat::nan(None);
                }
                r
            }
            AtomicOp::Sqrt => x.sqrt(p, RM),
            AtomicOp::Neg => x.neg(),
        };
        let r = BigReal(r);
        if !r.is_finite() {
            return Err(Error::NonFinite {
                op,
                lane: Lane::Oracle,
                op_index,
            });
        }
        Ok(r)
    }

    fn magnitude(&self, v: &BigReal) -> f64 {
        v.to_f64().abs()
    }

    fn is_zero(&self, v: &BigReal) -> bool {
        v.is_zero()
    }
}

/// Oracle value of a program together with the error of a binary64 result
/// measured against it.
#[derive(Debug, Clone, Serialize)]
pub struct GroundTruth {
    pub value: BigReal,
    /// `value` rounded to binary64.
    #[serde(with = "crate::fmt::float")]
    pub value_f64: f64,
    #[serde(with = "crate::fmt::float")]
    pub low_precision: f64,
    #[serde(with = "crate::fmt::float")]
    pub err_abs: f64,
    /// Infinite (and `zero_oracle` set) when the oracle value is zero but
    /// the binary64 result is not.
    #[serde(with = "crate::fmt::float")]
    pub err_rel: f64,
    #[serde(with = "crate::fmt::float")]
    pub err_ulp: f64,
    pub zero_oracle: bool,
}

impl GroundTruth {
    /// Errors of `low` measured against `value`.
    pub fn compare(value: BigReal, low: f64, config: &OracleConfig) -> GroundTruth {
        let p = config.effective_bits();
        let low_big = BigReal::from_f64(low, config).0;
        // A 2p-bit difference of two p-bit numbers with nearby exponents is
        // exact; either way it is far below binary64 resolution.
        let diff = BigReal(value.0.sub(&low_big, 2 * p, RM).abs());
        let err_abs = diff.to_f64();
        let (err_rel, zero_oracle) = if diff.is_zero() {
            (0.0, false)
        } else if value.is_zero() {
            (f64::INFINITY, true)
        } else {
            (BigReal(diff.0.div(&value.0.abs(), p, RM)).to_f64(), false)
        };
        let ulp = match value.binary_exponent() {
            Some(e) => ulp::ulp_for_exponent(e),
            None => ulp::MIN_SUBNORMAL,
        };
        let err_ulp = if diff.is_zero() {
            0.0
        } else {
            BigReal(diff.0.div(&BigReal::from_f64(ulp, config).0, p, RM)).to_f64()
        };
        GroundTruth {
            value_f64: value.to_f64(),
            value,
            low_precision: low,
            err_abs,
            err_rel,
            err_ulp,
            zero_oracle,
        }
    }

    pub fn significant(&self, threshold: f64) -> bool {
        classify_significant(self.err_rel, threshold)
    }
}

/// Evaluate `program` at oracle precision.
pub fn oracle_eval(program: &Program, bindings: &Bindings, config: &OracleConfig) -> Result<BigReal> {
    oracle_eval_with_texts(program, bindings, &InputTexts::new(), config)
}

/// Oracle evaluation where inputs listed in `texts` are read from their
/// decimal spelling at oracle precision, as literals are.
pub fn oracle_eval_with_texts(
    program: &Program,
    bindings: &Bindings,
    texts: &InputTexts,
    config: &OracleConfig,
) -> Result<BigReal> {
    let mut oracle = Oracle::new(*config)?;
    program.evaluate_with_texts(&mut oracle, bindings, texts)
}

/// Oracle value of `program` and the error of `low_precision_result`
/// against it.
pub fn ground_truth_error(
    program: &Program,
    bindings: &Bindings,
    config: &OracleConfig,
    low_precision_result: f64,
) -> Result<GroundTruth> {
    ground_truth_error_with_texts(program, bindings, &InputTexts::new(), config, low_precision_result)
}

pub fn ground_truth_error_with_texts(
    program: &Program,
    bindings: &Bindings,
    texts: &InputTexts,
    config: &OracleConfig,
    low_precision_result: f64,
) -> Result<GroundTruth> {
    let value = oracle_eval_with_texts(program, bindings, texts, config)?;
    Ok(GroundTruth::compare(value, low_precision_result, config))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> OracleConfig {
        OracleConfig::default()
    }

    #[test]
    fn config_validation() {
        assert!(OracleConfig::new(53).is_err());
        assert!(OracleConfig::new(112).is_err());
        assert_eq!(OracleConfig::new(113).unwrap().effective_bits(), 128);
        assert_eq!(OracleConfig::new(192).unwrap().effective_bits(), 192);
    }

    #[test]
    fn round_trip_binary64() {
        for x in [
            1.0,
            -0.1,
            1.3694384060045659,
            f64::MAX,
            f64::MIN_POSITIVE,
            ulp::MIN_SUBNORMAL,
            -3.0e-310,
            0.0,
        ] {
            assert_eq!(BigReal::from_f64(x, &cfg()).to_f64().to_bits(), x.to_bits(), "{x:e}");
        }
    }

    #[test]
    fn to_f64_rounds_to_nearest_even() {
        let c = cfg();
        let mut o = Oracle::new(c).unwrap();
        // 1 + 2^-53 is a tie: rounds to 1. 1 + 2^-53 + 2^-100 rounds up.
        let one = o.input(1.0).unwrap();
        let half_ulp = o.input(ulp::pow2(-53)).unwrap();
        let tie = o.apply(AtomicOp::Add, &one, Some(&half_ulp)).unwrap();
        assert_eq!(tie.to_f64(), 1.0);
        let tiny = o.input(ulp::pow2(-100)).unwrap();
        let above = o.apply(AtomicOp::Add, &tie, Some(&tiny)).unwrap();
        assert_eq!(above.to_f64(), 1.0 + f64::EPSILON);
        // 3 * 2^-1076 = 0.75 * 2^-1074 rounds to the smallest subnormal.
        let sub = BigReal::from_f64(3.0, &c);
        let scale = BigReal::from_f64(ulp::pow2(-1074), &c);
        let quarter = BigReal::from_f64(0.25, &c);
        let v = o.apply(AtomicOp::Mul, &sub, Some(&scale)).unwrap();
        let v = o.apply(AtomicOp::Mul, &v, Some(&quarter)).unwrap();
        assert_eq!(v.to_f64(), ulp::MIN_SUBNORMAL);
    }

    #[test]
    fn decimal_literals_at_oracle_precision() {
        let mut o = Oracle::new(cfg()).unwrap();
        let fifth = o.literal(0.2, "0.2").unwrap();
        let five = o.input(5.0).unwrap();
        let one = o.apply(AtomicOp::Mul, &fifth, Some(&five)).unwrap();
        let unit = o.input(1.0).unwrap();
        let diff = o.apply(AtomicOp::Sub, &one, Some(&unit)).unwrap();
        assert!(diff.to_f64().abs() < 1e-37);
        let hex = o.literal(0.2, "0x1.999999999999ap-3").unwrap();
        assert_eq!(hex.to_f64(), 0.2);
        assert!(hex.cmp_value(&fifth) == Some(Ordering::Greater));
    }

    #[test]
    fn signed_literals() {
        let mut o = Oracle::new(cfg()).unwrap();
        let neg = o.literal(-0.2, "-0.2").unwrap();
        let pos = o.literal(0.2, "+0.2").unwrap();
        let sum = o.apply(AtomicOp::Add, &neg, Some(&pos)).unwrap();
        assert!(sum.is_zero());
        assert_eq!(o.literal(-0.25, "-0x1p-2").unwrap().to_f64(), -0.25);
    }

    #[test]
    fn illustrative_with_decimal_input() {
        let c = cfg();
        let x = crate::dsl::bindings([("x", 1.3694384060045659)]);
        let texts = InputTexts::from([("x".to_string(), "1.3694384060045659".to_string())]);
        let mid = crate::dsl::parse("cos(x) - 0.2").unwrap();
        let gt = ground_truth_error_with_texts(&mid, &x, &texts, &c, -8.326672684688674e-17).unwrap();
        assert!((gt.err_ulp / 1.0143e15 - 1.0).abs() < 1e-3, "{}", gt.err_ulp);
        let full = crate::dsl::parse("cos(x) - 0.2 + 10").unwrap();
        let gt = ground_truth_error_with_texts(&full, &x, &texts, &c, 10.0).unwrap();
        assert!((gt.err_ulp / 3.9837e-2 - 1.0).abs() < 1e-3, "{}", gt.err_ulp);
        // Read as its binary64 value, the input is about 1.0003e15 ULPs.
        let gt = ground_truth_error(&mid, &x, &c, -8.326672684688674e-17).unwrap();
        assert!((gt.err_ulp / 1.0003e15 - 1.0).abs() < 1e-3, "{}", gt.err_ulp);
    }

    #[test]
    fn domain_checks_at_extended_precision() {
        let mut o = Oracle::new(cfg()).unwrap();
        let one = o.input(1.0).unwrap();
        let tiny = o.input(ulp::pow2(-100)).unwrap();
        let above = o.apply(AtomicOp::Add, &one, Some(&tiny)).unwrap();
        assert!(matches!(
            o.apply(AtomicOp::Asin, &above, None),
            Err(Error::OpDomain { lane: Lane::Oracle, .. })
        ));
        let zero = o.input(0.0).unwrap();
        assert!(o.apply(AtomicOp::Log, &zero, None).is_err());
        let two = o.input(2.0).unwrap();
        assert_eq!(o.apply(AtomicOp::Pow, &zero, Some(&two)).unwrap().to_f64(), 0.0);
    }

    #[test]
    fn compare_metrics() {
        let c = cfg();
        let exact = BigReal::from_f64(10.0, &c);
        let gt = GroundTruth::compare(exact.clone(), 10.0, &c);
        assert_eq!((gt.err_abs, gt.err_rel, gt.err_ulp), (0.0, 0.0, 0.0));
        let gt = GroundTruth::compare(exact, 10.0 + 2.0 * ulp::pow2(-49), &c);
        assert_eq!(gt.err_ulp, 2.0);
        let zero = BigReal::from_f64(0.0, &c);
        let gt = GroundTruth::compare(zero, 1e-20, &c);
        assert!(gt.zero_oracle);
        assert_eq!(gt.err_rel, f64::INFINITY);
    }
}
