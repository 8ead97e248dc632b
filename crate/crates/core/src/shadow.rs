//! Paired shadow execution.
//!
//! Every value is carried twice: once in the original lane, which is never
//! modified, and once in the perturbed lane. Before each atomic operation the
//! perturbed lane's operands are checked against the condition threshold;
//! when an operand's condition number exceeds it, that operand is moved by
//! one ULP (or by the next cyclic offset) before the operation runs. The
//! difference between the lanes at the end is the reported error.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::arith::Arithmetic;
use crate::condnum::{clearly_benign, condition_unchecked, AtomicOp, ConditionResult, DEFAULT_THRESHOLD};
use crate::error::{Error, Lane, Result};
use crate::metrics::classify_significant;
#[cfg(test)]
use crate::metrics::DEFAULT_SIGNIFICANCE;
use crate::ulp;

/// A scalar in both lanes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackedPair {
    #[serde(with = "crate::fmt::float")]
    pub original: f64,
    #[serde(with = "crate::fmt::float")]
    pub perturbed: f64,
}

impl TrackedPair {
    pub fn new(original: f64, perturbed: f64) -> Self {
        TrackedPair { original, perturbed }
    }

    /// Both lanes set to `x`. Inputs enter unperturbed.
    pub fn track(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("cannot track non-finite input {x}")));
        }
        Ok(TrackedPair::new(x, x))
    }

    pub fn lanes_identical(&self) -> bool {
        self.original.to_bits() == self.perturbed.to_bits()
    }
}

/// How the offending operand is moved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationMode {
    /// Subtract one ULP.
    #[default]
    OneUlpSub,
    /// Shift by the policy's cyclic offsets, consumed round-robin per
    /// injection.
    Cyclic,
}

/// Which operands are perturbed when a binary operation crosses the
/// threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperandRule {
    /// The left operand if its condition exceeds the threshold, otherwise
    /// the right one.
    #[default]
    FirstExceeding,
    /// The operand with the larger condition number; ties go left.
    LargestCondition,
    /// Every operand whose condition exceeds the threshold.
    AllExceeding,
}

/// How much of each evaluation is written to the [`TraceLog`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceMode {
    /// One event per dynamic operation.
    #[default]
    Full,
    /// Only operations that received a perturbation; the remaining ones are
    /// counted.
    InjectionsOnly,
}

pub const DEFAULT_CYCLIC_OFFSETS: [i64; 6] = [-1, 1, -2, 2, -3, 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPolicy {
    #[serde(with = "crate::fmt::float")]
    pub threshold: f64,
    pub mode: PerturbationMode,
    pub cyclic_offsets: Vec<i64>,
    pub operand_rule: OperandRule,
}

impl Default for PerturbationPolicy {
    fn default() -> Self {
        PerturbationPolicy {
            threshold: DEFAULT_THRESHOLD,
            mode: PerturbationMode::OneUlpSub,
            cyclic_offsets: DEFAULT_CYCLIC_OFFSETS.to_vec(),
            operand_rule: OperandRule::FirstExceeding,
        }
    }
}

impl PerturbationPolicy {
    pub fn with_threshold(threshold: f64) -> Result<Self> {
        let policy = PerturbationPolicy {
            threshold,
            ..Default::default()
        };
        policy.validate()?;
        Ok(policy)
    }

    /// Injection switched off: the lanes never diverge.
    pub fn disabled() -> Self {
        PerturbationPolicy {
            threshold: f64::INFINITY,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) {
            return Err(Error::Argument(format!(
                "threshold must be positive, got {}",
                self.threshold
            )));
        }
        if self.mode == PerturbationMode::Cyclic && self.cyclic_offsets.is_empty() {
            return Err(Error::Argument("cyclic mode needs at least one offset".into()));
        }
        if self.cyclic_offsets.contains(&0) {
            return Err(Error::Argument("cyclic offsets must be nonzero".into()));
        }
        Ok(())
    }

    fn select(&self, cond: &ConditionResult) -> PerturbedOperand {
        let t = self.threshold;
        let left = cond.left_exceeds(t);
        let right = cond.right_exceeds(t);
        match (left, right) {
            (false, false) => PerturbedOperand::None,
            (true, false) => PerturbedOperand::Left,
            (false, true) => PerturbedOperand::Right,
            (true, true) => match self.operand_rule {
                OperandRule::FirstExceeding => PerturbedOperand::Left,
                OperandRule::LargestCondition => {
                    if cond.right.unwrap_or(0.0) > cond.left {
                        PerturbedOperand::Right
                    } else {
                        PerturbedOperand::Left
                    }
                }
                OperandRule::AllExceeding => PerturbedOperand::Both,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbedOperand {
    None,
    Left,
    Right,
    Both,
}

/// Record of one dynamic operation in the perturbed lane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub op_index: usize,
    pub op: AtomicOp,
    /// Perturbed-lane operands as seen by the condition check.
    #[serde(with = "crate::fmt::float_vec")]
    pub operands: Vec<f64>,
    pub condition: ConditionResult,
    pub perturbed_operand: PerturbedOperand,
    /// Signed ULP count applied to the perturbed operand(s); 0 when none.
    pub offset: i64,
}

/// Per-evaluation event log.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceLog {
    pub mode: TraceMode,
    pub events: Vec<TraceEvent>,
    /// Dynamic operations executed, recorded or not.
    pub operations: usize,
    pub injections: usize,
}

impl TraceLog {
    pub fn new(mode: TraceMode) -> Self {
        TraceLog {
            mode,
            ..Default::default()
        }
    }

    pub fn injection_events(&self) -> impl Iterator<Item = &TraceEvent> {
        self.events
            .iter()
            .filter(|e| e.perturbed_operand != PerturbedOperand::None)
    }

    /// One JSON object per line, one line per event.
    pub fn write_lines<W: Write>(&self, mut out: W) -> Result<()> {
        for event in &self.events {
            serde_json::to_writer(&mut out, event)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_lines<R: BufRead>(input: R) -> Result<Vec<TraceEvent>> {
        let mut events = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            events.push(serde_json::from_str(&line)?);
        }
        Ok(events)
    }
}

/// Lane difference of a finished evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    #[serde(with = "crate::fmt::float")]
    pub res_original: f64,
    #[serde(with = "crate::fmt::float")]
    pub res_perturbed: f64,
    #[serde(with = "crate::fmt::float")]
    pub err_abs: f64,
    #[serde(with = "crate::fmt::float")]
    pub err_rel: f64,
    #[serde(with = "crate::fmt::float")]
    pub err_ulp: f64,
    pub significant: bool,
    /// The original result is zero while the lanes differ, so `err_rel` is
    /// infinite.
    pub zero_original: bool,
    /// A lane produced a non-finite value and evaluation stopped there.
    pub exceptional: bool,
    pub injections: usize,
    pub operations: usize,
    pub events: Vec<TraceEvent>,
}

impl ErrorReport {
    /// Build a report from final lane values.
    pub fn from_lanes(result: TrackedPair, log: TraceLog, significance: f64) -> ErrorReport {
        let (o, p) = (result.original, result.perturbed);
        let exceptional = !o.is_finite() || !p.is_finite();
        let (err_abs, err_rel, err_ulp, zero_original) = if result.lanes_identical() {
            (0.0, 0.0, 0.0, false)
        } else if exceptional {
            (f64::INFINITY, f64::INFINITY, f64::INFINITY, false)
        } else {
            let err_abs = (o - p).abs();
            let err_ulp = err_abs / ulp::ulp_of_finite(o);
            if err_abs == 0.0 {
                // +0 vs -0
                (0.0, 0.0, 0.0, false)
            } else if o == 0.0 {
                (err_abs, f64::INFINITY, err_ulp, true)
            } else {
                (err_abs, err_abs / o.abs(), err_ulp, false)
            }
        };
        ErrorReport {
            res_original: o,
            res_perturbed: p,
            err_abs,
            err_rel,
            err_ulp,
            significant: classify_significant(err_rel, significance),
            zero_original,
            exceptional,
            injections: log.injections,
            operations: log.operations,
            events: log.events,
        }
    }

    pub fn trace(&self) -> TraceLog {
        TraceLog {
            mode: TraceMode::Full,
            events: self.events.clone(),
            operations: self.operations,
            injections: self.injections,
        }
    }
}

/// The shadow execution engine for one evaluation.
#[derive(Debug, Clone)]
pub struct Shadow {
    policy: PerturbationPolicy,
    log: TraceLog,
    aborted: Option<TrackedPair>,
}

impl Shadow {
    pub fn new(policy: PerturbationPolicy) -> Result<Self> {
        Self::with_trace_mode(policy, TraceMode::Full)
    }

    pub fn with_trace_mode(policy: PerturbationPolicy, mode: TraceMode) -> Result<Self> {
        policy.validate()?;
        Ok(Shadow {
            policy,
            log: TraceLog::new(mode),
            aborted: None,
        })
    }

    pub fn policy(&self) -> &PerturbationPolicy {
        &self.policy
    }

    pub fn log(&self) -> &TraceLog {
        &self.log
    }

    pub fn track(&self, x: f64) -> Result<TrackedPair> {
        TrackedPair::track(x)
    }

    /// Lanes at the point a non-finite value stopped the evaluation.
    pub fn aborted_at(&self) -> Option<TrackedPair> {
        self.aborted
    }

    /// Evaluate `op` in both lanes, injecting into the perturbed lane when
    /// its operands sit in the op's dangerous region.
    #[inline]
    pub fn apply(&mut self, op: AtomicOp, a: TrackedPair, b: Option<TrackedPair>) -> Result<TrackedPair> {
        if op.arity() == 2 && b.is_none() || op.arity() == 1 && b.is_some() {
            return Err(arity_error(op));
        }
        let op_index = self.log.operations;
        self.log.operations += 1;

        let (ox, oy) = (a.original, b.map(|b| b.original));
        if !op.in_domain(ox, oy) {
            return Err(domain_error(op, Lane::Original, op_index));
        }
        let original = op.eval(ox, oy.unwrap_or(0.0));

        let (px, py) = (a.perturbed, b.map(|b| b.perturbed));
        if !op.in_domain(px, py) {
            return Err(domain_error(op, Lane::Perturbed, op_index));
        }
        if self.log.mode == TraceMode::InjectionsOnly
            && clearly_benign(op, px, py.unwrap_or(0.0), self.policy.threshold)
        {
            let perturbed = op.eval(px, py.unwrap_or(0.0));
            if original.is_finite() && perturbed.is_finite() {
                return Ok(TrackedPair::new(original, perturbed));
            }
            return Err(self.abort(op, op_index, original, perturbed));
        }
        self.apply_checked(op, op_index, original, px, py)
    }

    /// Condition check, injection and trace recording for one operation
    /// whose operands are already known to be in the domain.
    #[inline(never)]
    fn apply_checked(
        &mut self,
        op: AtomicOp,
        op_index: usize,
        original: f64,
        px: f64,
        py: Option<f64>,
    ) -> Result<TrackedPair> {
        let condition = condition_unchecked(op, px, py.unwrap_or(0.0));
        let which = self.policy.select(&condition);

        let (mut qx, mut qy) = (px, py);
        let mut offset = 0;
        if which != PerturbedOperand::None {
            offset = self.next_offset();
            self.log.injections += 1;
            if matches!(which, PerturbedOperand::Left | PerturbedOperand::Both) {
                qx = shift_within_domain(op, px, py, offset, true);
            }
            if matches!(which, PerturbedOperand::Right | PerturbedOperand::Both) {
                qy = py.map(|y| shift_within_domain(op, qx, Some(y), offset, false));
            }
        }
        let perturbed = op.eval(qx, qy.unwrap_or(0.0));

        if self.log.mode == TraceMode::Full || which != PerturbedOperand::None {
            let mut operands = vec![px];
            operands.extend(py);
            self.log.events.push(TraceEvent {
                op_index,
                op,
                operands,
                condition,
                perturbed_operand: which,
                offset,
            });
        }

        if original.is_finite() && perturbed.is_finite() {
            return Ok(TrackedPair::new(original, perturbed));
        }
        Err(self.abort(op, op_index, original, perturbed))
    }

    #[cold]
    fn abort(&mut self, op: AtomicOp, op_index: usize, original: f64, perturbed: f64) -> Error {
        self.aborted = Some(TrackedPair::new(original, perturbed));
        let lane = if original.is_finite() { Lane::Perturbed } else { Lane::Original };
        Error::NonFinite { op, lane, op_index }
    }

    fn next_offset(&self) -> i64 {
        match self.policy.mode {
            PerturbationMode::OneUlpSub => -1,
            PerturbationMode::Cyclic => {
                let offsets = &self.policy.cyclic_offsets;
                offsets[self.log.injections % offsets.len()]
            }
        }
    }

    /// Package the lane difference of `result`.
    pub fn finish(self, result: TrackedPair, significance: f64) -> ErrorReport {
        ErrorReport::from_lanes(result, self.log, significance)
    }

    /// Report for an evaluation stopped by a non-finite value.
    pub fn finish_aborted(self, significance: f64) -> Option<ErrorReport> {
        let pair = self.aborted?;
        Some(ErrorReport::from_lanes(pair, self.log, significance))
    }

    pub fn into_log(self) -> TraceLog {
        self.log
    }
}

/// Shift the chosen operand by `offset` ULPs. If that leaves the op's
/// domain (`asin(-1)` stepping below -1, say) the opposite direction is
/// used, and if both do the operand is left alone.
fn shift_within_domain(op: AtomicOp, x: f64, y: Option<f64>, offset: i64, left: bool) -> f64 {
    let v = if left { x } else { y.unwrap_or(0.0) };
    let ulp = ulp::ulp_of_finite(v);
    for k in [offset, -offset] {
        let moved = v + k as f64 * ulp;
        let ok = if left {
            op.in_domain(moved, y)
        } else {
            op.in_domain(x, Some(moved))
        };
        if ok && moved.is_finite() {
            return moved;
        }
    }
    v
}

#[cold]
fn arity_error(op: AtomicOp) -> Error {
    Error::Argument(format!("wrong operand count for {op}"))
}

#[cold]
fn domain_error(op: AtomicOp, lane: Lane, op_index: usize) -> Error {
    Error::OpDomain { op, lane, op_index }
}

impl Arithmetic for Shadow {
    type Value = TrackedPair;

    fn input(&mut self, x: f64) -> Result<TrackedPair> {
        TrackedPair::track(x)
    }

    #[inline]
    fn apply(&mut self, op: AtomicOp, a: &TrackedPair, b: Option<&TrackedPair>) -> Result<TrackedPair> {
        Shadow::apply(self, op, *a, b.copied())
    }

    /// Original-lane magnitude, so both lanes pivot identically.
    #[inline]
    fn magnitude(&self, v: &TrackedPair) -> f64 {
        v.original.abs()
    }

    #[inline]
    fn is_zero(&self, v: &TrackedPair) -> bool {
        v.original == 0.0
    }
}
