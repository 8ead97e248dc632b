//! Atomic operations and their condition numbers.
//!
//! The condition number of an operation with respect to an operand is
//! `|x f'(x) / f(x)|`: the factor by which a relative error in that operand
//! is amplified in the result. Values far above 1 mark the operation's
//! dangerous region (`x ~ y` for subtraction, `x -> n*pi` for `sin`, ...).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Condition threshold above which an operation is considered dangerous.
pub const DEFAULT_THRESHOLD: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomicOp {
    Add,
    Sub,
    Mul,
    Div,
    Sin,
    Cos,
    Tan,
    Asin,
    Acos,
    Sinh,
    Cosh,
    Exp,
    Log,
    Log10,
    Pow,
    Sqrt,
    Neg,
}

impl AtomicOp {
    pub const ALL: [AtomicOp; 17] = [
        AtomicOp::Add,
        AtomicOp::Sub,
        AtomicOp::Mul,
        AtomicOp::Div,
        AtomicOp::Sin,
        AtomicOp::Cos,
        AtomicOp::Tan,
        AtomicOp::Asin,
        AtomicOp::Acos,
        AtomicOp::Sinh,
        AtomicOp::Cosh,
        AtomicOp::Exp,
        AtomicOp::Log,
        AtomicOp::Log10,
        AtomicOp::Pow,
        AtomicOp::Sqrt,
        AtomicOp::Neg,
    ];

    #[inline]
    pub fn arity(self) -> usize {
        match self {
            AtomicOp::Add | AtomicOp::Sub | AtomicOp::Mul | AtomicOp::Div | AtomicOp::Pow => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AtomicOp::Add => "add",
            AtomicOp::Sub => "sub",
            AtomicOp::Mul => "mul",
            AtomicOp::Div => "div",
            AtomicOp::Sin => "sin",
            AtomicOp::Cos => "cos",
            AtomicOp::Tan => "tan",
            AtomicOp::Asin => "asin",
            AtomicOp::Acos => "acos",
            AtomicOp::Sinh => "sinh",
            AtomicOp::Cosh => "cosh",
            AtomicOp::Exp => "exp",
            AtomicOp::Log => "log",
            AtomicOp::Log10 => "log10",
            AtomicOp::Pow => "pow",
            AtomicOp::Sqrt => "sqrt",
            AtomicOp::Neg => "neg",
        }
    }

    /// Whether `(x, y)` lies inside the mathematical domain of the operation.
    ///
    /// `pow` is restricted to `x > 0`, or `x == 0` with `y > 0`.
    #[inline]
    pub fn in_domain(self, x: f64, y: Option<f64>) -> bool {
        match self {
            AtomicOp::Log | AtomicOp::Log10 => x > 0.0,
            AtomicOp::Asin | AtomicOp::Acos => (-1.0..=1.0).contains(&x),
            AtomicOp::Sqrt => x >= 0.0,
            AtomicOp::Pow => {
                let y = y.unwrap_or(f64::NAN);
                x > 0.0 || (x == 0.0 && y > 0.0)
            }
            _ => true,
        }
    }

    /// Binary64 evaluation using the platform libm.
    #[inline]
    pub fn eval(self, x: f64, y: f64) -> f64 {
        match self {
            AtomicOp::Add => x + y,
            AtomicOp::Sub => x - y,
            AtomicOp::Mul => x * y,
            AtomicOp::Div => x / y,
            AtomicOp::Sin => x.sin(),
            AtomicOp::Cos => x.cos(),
            AtomicOp::Tan => x.tan(),
            AtomicOp::Asin => x.asin(),
            AtomicOp::Acos => x.acos(),
            AtomicOp::Sinh => x.sinh(),
            AtomicOp::Cosh => x.cosh(),
            AtomicOp::Exp => x.exp(),
            AtomicOp::Log => x.ln(),
            AtomicOp::Log10 => x.log10(),
            AtomicOp::Pow => x.powf(y),
            AtomicOp::Sqrt => x.sqrt(),
            AtomicOp::Neg => -x,
        }
    }
}

impl fmt::Display for AtomicOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AtomicOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AtomicOp::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown operation `{s}`")))
    }
}

/// Condition numbers of one evaluation, per operand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    #[serde(with = "crate::fmt::float")]
    pub left: f64,
    #[serde(with = "crate::fmt::opt_float")]
    pub right: Option<f64>,
}

impl ConditionResult {
    pub fn unary(left: f64) -> Self {
        ConditionResult { left, right: None }
    }

    pub fn binary(left: f64, right: f64) -> Self {
        ConditionResult {
            left,
            right: Some(right),
        }
    }

    pub fn max(&self) -> f64 {
        self.right.map_or(self.left, |r| self.left.max(r))
    }

    pub fn left_exceeds(&self, threshold: f64) -> bool {
        self.left > threshold
    }

    pub fn right_exceeds(&self, threshold: f64) -> bool {
        self.right.is_some_and(|r| r > threshold)
    }

    pub fn exceeds(&self, threshold: f64) -> bool {
        self.left_exceeds(threshold) || self.right_exceeds(threshold)
    }
}

/// `|num / den|`, with an exact-zero denominator giving `+inf`.
#[inline]
fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        f64::INFINITY
    } else {
        (num / den).abs()
    }
}

/// Condition numbers of `op` at the given operands.
///
/// `y` must be present exactly for binary operations. Operands outside the
/// operation's domain are an error; an exact-zero denominator inside the
/// formula yields `+inf`.
pub fn condition_of(op: AtomicOp, x: f64, y: Option<f64>) -> Result<ConditionResult> {
    if op.arity() == 2 && y.is_none() {
        return Err(Error::Argument(format!("{op} needs two operands")));
    }
    if op.arity() == 1 && y.is_some() {
        return Err(Error::Argument(format!("{op} takes one operand")));
    }
    if !x.is_finite() || y.is_some_and(|y| !y.is_finite()) {
        return Err(Error::Domain(format!("{op} of non-finite operand")));
    }
    if !op.in_domain(x, y) {
        return Err(Error::Domain(format!(
            "{op} outside its domain at x = {x:?}{}",
            y.map(|y| format!(", y = {y:?}")).unwrap_or_default()
        )));
    }
    Ok(condition_unchecked(op, x, y.unwrap_or(0.0)))
}

/// Condition formulas without argument validation; operands are assumed finite
/// and in-domain.
#[inline]
pub(crate) fn condition_unchecked(op: AtomicOp, x: f64, y: f64) -> ConditionResult {
    match op {
        AtomicOp::Add => {
            let s = x + y;
            ConditionResult::binary(ratio(x, s), ratio(y, s))
        }
        AtomicOp::Sub => {
            let d = x - y;
            ConditionResult::binary(ratio(x, d), ratio(y, d))
        }
        AtomicOp::Mul | AtomicOp::Div => ConditionResult::binary(1.0, 1.0),
        AtomicOp::Pow => {
            let right = if x == 0.0 {
                f64::INFINITY
            } else {
                (y * x.ln()).abs()
            };
            ConditionResult::binary(y.abs(), right)
        }
        // sin, tan, sinh and asin have removable singularities at 0 with limit 1.
        AtomicOp::Sin if x == 0.0 => ConditionResult::unary(1.0),
        AtomicOp::Sin => ConditionResult::unary(ratio(x * x.cos(), x.sin())),
        AtomicOp::Cos => ConditionResult::unary((x * x.tan()).abs()),
        AtomicOp::Tan if x == 0.0 => ConditionResult::unary(1.0),
        AtomicOp::Tan => ConditionResult::unary(ratio(x, x.sin() * x.cos())),
        AtomicOp::Asin if x == 0.0 => ConditionResult::unary(1.0),
        AtomicOp::Asin => ConditionResult::unary(ratio(x, (1.0 - x * x).sqrt() * x.asin())),
        AtomicOp::Acos => ConditionResult::unary(ratio(x, (1.0 - x * x).sqrt() * x.acos())),
        AtomicOp::Sinh if x == 0.0 => ConditionResult::unary(1.0),
        // x * coth(x), written to avoid cosh/sinh overflow.
        AtomicOp::Sinh => ConditionResult::unary(ratio(x, x.tanh())),
        AtomicOp::Cosh => ConditionResult::unary((x * x.tanh()).abs()),
        AtomicOp::Exp => ConditionResult::unary(x.abs()),
        AtomicOp::Log | AtomicOp::Log10 => ConditionResult::unary(ratio(1.0, x.ln())),
        AtomicOp::Sqrt => ConditionResult::unary(0.5),
        AtomicOp::Neg => ConditionResult::unary(1.0),
    }
}

/// Cheap conservative pre-check: `true` only if no condition component of
/// `op` at `(x, y)` can exceed `threshold`. Ops without a division-free
/// test answer `false`.
#[inline]
pub(crate) fn clearly_benign(op: AtomicOp, x: f64, y: f64, threshold: f64) -> bool {
    // Covers the roundings of |x/d| and of threshold * |d| * SLACK.
    const SLACK: f64 = 1.0 - 1.0 / (1u64 << 50) as f64;
    let cancel = |d: f64| {
        let bound = threshold * d.abs() * SLACK;
        bound >= f64::MIN_POSITIVE && x.abs() <= bound && y.abs() <= bound
    };
    match op {
        AtomicOp::Add => cancel(x + y),
        AtomicOp::Sub => cancel(x - y),
        AtomicOp::Mul | AtomicOp::Div | AtomicOp::Neg => 1.0 <= threshold,
        AtomicOp::Sqrt => 0.5 <= threshold,
        _ => false,
    }
}

/// True iff any condition component of `op` at the operands exceeds
/// `threshold`.
pub fn in_dangerous_region(op: AtomicOp, x: f64, y: Option<f64>, threshold: f64) -> Result<bool> {
    if !(threshold > 0.0) {
        return Err(Error::Argument(format!("threshold must be positive, got {threshold}")));
    }
    Ok(condition_of(op, x, y)?.exceeds(threshold))
}
