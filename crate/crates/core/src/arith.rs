//! Scalar arithmetic abstraction shared by the expression evaluator and the
//! LU solver, so one code path runs in plain binary64, in the paired shadow
//! lanes, or at oracle precision.

use crate::condnum::AtomicOp;
use crate::error::{Error, Lane, Result};

pub trait Arithmetic {
    type Value: Clone;

    /// Lift an exact binary64 input.
    fn input(&mut self, x: f64) -> Result<Self::Value>;

    /// Lift a program literal. `text` is its source spelling; only
    /// extended-precision arithmetic looks at it.
    fn literal(&mut self, value: f64, _text: &str) -> Result<Self::Value> {
        self.input(value)
    }

    /// Evaluate one atomic operation. `b` is present exactly for binary ops.
    fn apply(&mut self, op: AtomicOp, a: &Self::Value, b: Option<&Self::Value>) -> Result<Self::Value>;

    /// Magnitude used for pivot selection.
    fn magnitude(&self, v: &Self::Value) -> f64;

    fn is_zero(&self, v: &Self::Value) -> bool;
}

/// Plain binary64 evaluation. Domain violations and non-finite results are
/// errors, numbered by dynamic operation index like the shadow engine.
#[derive(Debug, Default, Clone)]
pub struct Binary64 {
    op_count: usize,
}

impl Binary64 {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn op_count(&self) -> usize {
        self.op_count
    }
}

impl Arithmetic for Binary64 {
    type Value = f64;

    fn input(&mut self, x: f64) -> Result<f64> {
        if x.is_finite() {
            Ok(x)
        } else {
            Err(Error::Domain(format!("non-finite input {x}")))
        }
    }

    #[inline]
    fn apply(&mut self, op: AtomicOp, a: &f64, b: Option<&f64>) -> Result<f64> {
        let op_index = self.op_count;
        self.op_count += 1;
        let y = b.copied();
        if !op.in_domain(*a, y) {
            return Err(Error::OpDomain {
                op,
                lane: Lane::Original,
                op_index,
            });
        }
        let r = op.eval(*a, y.unwrap_or(0.0));
        if r.is_finite() {
            Ok(r)
        } else {
            Err(Error::NonFinite {
                op,
                lane: Lane::Original,
                op_index,
            })
        }
    }

    #[inline]
    fn magnitude(&self, v: &f64) -> f64 {
        v.abs()
    }

    #[inline]
    fn is_zero(&self, v: &f64) -> bool {
        *v == 0.0
    }
}
