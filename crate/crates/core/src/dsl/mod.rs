//! A straight-line expression language for feeding formulas to the shadow
//! engine and the oracle.
//!
//! ```text
//! # comments run to end of line
//! let t = x * x      # single assignment, newline or `;` separated
//! t - 1              # the last line is the result
//! ```
//!
//! Precedence from tightest: `^` (right-associative), unary minus, `* /`,
//! `+ -`. Functions: `sin cos tan asin acos sinh cosh exp log log10 sqrt
//! neg`. Literals are decimal (correctly rounded) or hex-float (`0x1.8p-3`,
//! exact). Free variables are the program's parameters.
//!
//! Evaluation is left-to-right, depth-first; with non-associative floating
//! point the order is part of the program.

mod lexer;
mod parser;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

pub use parser::parse;

use crate::arith::{Arithmetic, Binary64};
use crate::condnum::AtomicOp;
use crate::error::{Error, Result, Span};
use crate::oracle::{BigReal, OracleConfig};
use crate::shadow::{ErrorReport, PerturbationPolicy, Shadow};

/// Parameter values by name.
pub type Bindings = BTreeMap<String, f64>;

/// Source spelling of inputs, for arithmetic that reads decimals exactly.
pub type InputTexts = BTreeMap<String, String>;

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

/// Spans are ignored: two expressions are equal when their trees are.
impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    /// `text` is the source spelling; the oracle re-reads it at its own
    /// precision.
    Literal { value: f64, text: String },
    Var(String),
    Unary { op: AtomicOp, arg: Box<Expr> },
    Binary { op: AtomicOp, lhs: Box<Expr>, rhs: Box<Expr> },
}

impl PartialEq for ExprKind {
    fn eq(&self, other: &Self) -> bool {
        use ExprKind::*;
        match (self, other) {
            (Literal { value: a, text: ta }, Literal { value: b, text: tb }) => {
                a.to_bits() == b.to_bits() && ta == tb
            }
            (Var(a), Var(b)) => a == b,
            (Unary { op: oa, arg: a }, Unary { op: ob, arg: b }) => oa == ob && a == b,
            (
                Binary { op: oa, lhs: la, rhs: ra },
                Binary { op: ob, lhs: lb, rhs: rb },
            ) => oa == ob && la == lb && ra == rb,
            _ => false,
        }
    }
}

impl Expr {
    fn unary(op: AtomicOp, arg: Expr, span: Span) -> Expr {
        Expr {
            kind: ExprKind::Unary {
                op,
                arg: Box::new(arg),
            },
            span,
        }
    }

    fn binary(op: AtomicOp, lhs: Expr, rhs: Expr, span: Span) -> Expr {
        Expr {
            kind: ExprKind::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
            span,
        }
    }

    /// Number of atomic operations in this expression tree.
    pub fn op_count(&self) -> usize {
        match &self.kind {
            ExprKind::Literal { .. } | ExprKind::Var(_) => 0,
            ExprKind::Unary { arg, .. } => 1 + arg.op_count(),
            ExprKind::Binary { lhs, rhs, .. } => 1 + lhs.op_count() + rhs.op_count(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Literal { text, .. } => f.write_str(text),
            ExprKind::Var(name) => f.write_str(name),
            ExprKind::Unary { op, arg } => write!(f, "{}({arg})", op.name()),
            ExprKind::Binary { op, lhs, rhs } => {
                let sym = match op {
                    AtomicOp::Add => "+",
                    AtomicOp::Sub => "-",
                    AtomicOp::Mul => "*",
                    AtomicOp::Div => "/",
                    AtomicOp::Pow => "^",
                    other => unreachable!("{other} is not a binary operator"),
                };
                write!(f, "({lhs} {sym} {rhs})")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Let {
    pub name: String,
    pub value: Expr,
    pub span: Span,
}

impl PartialEq for Let {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.value == other.value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub statements: Vec<Let>,
    pub result: Expr,
    parameters: Vec<String>,
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.statements {
            writeln!(f, "let {} = {}", s.name, s.value)?;
        }
        write!(f, "{}", self.result)
    }
}

impl std::str::FromStr for Program {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

impl Program {
    /// Free variables in order of first appearance.
    pub fn parameters(&self) -> &[String] {
        &self.parameters
    }

    pub fn op_count(&self) -> usize {
        self.statements.iter().map(|s| s.value.op_count()).sum::<usize>() + self.result.op_count()
    }

    /// Evaluate with any scalar arithmetic.
    pub fn evaluate<A: Arithmetic>(&self, arith: &mut A, bindings: &Bindings) -> Result<A::Value> {
        self.evaluate_with_texts(arith, bindings, &InputTexts::new())
    }

    /// Like [`Program::evaluate`], but an input with an entry in `texts` is
    /// lifted like a literal with that spelling.
    pub fn evaluate_with_texts<A: Arithmetic>(
        &self,
        arith: &mut A,
        bindings: &Bindings,
        texts: &InputTexts,
    ) -> Result<A::Value> {
        let mut env: HashMap<&str, A::Value> = HashMap::new();
        for name in &self.parameters {
            let x = bindings
                .get(name)
                .ok_or_else(|| Error::UnboundParameter(name.clone()))?;
            let v = match texts.get(name) {
                Some(text) => arith.literal(*x, text)?,
                None => arith.input(*x)?,
            };
            env.insert(name, v);
        }
        for s in &self.statements {
            let v = eval_expr(&s.value, arith, &env)?;
            env.insert(&s.name, v);
        }
        eval_expr(&self.result, arith, &env)
    }
}

fn eval_expr<A: Arithmetic>(e: &Expr, arith: &mut A, env: &HashMap<&str, A::Value>) -> Result<A::Value> {
    let at = |err: Error| match err {
        Error::AtSource { .. } => err,
        other => Error::AtSource {
            span: e.span,
            source: Box::new(other),
        },
    };
    match &e.kind {
        ExprKind::Literal { value, text } => arith.literal(*value, text).map_err(at),
        ExprKind::Var(name) => Ok(env[name.as_str()].clone()),
        ExprKind::Unary { op, arg } => {
            let a = eval_expr(arg, arith, env)?;
            arith.apply(*op, &a, None).map_err(at)
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let a = eval_expr(lhs, arith, env)?;
            let b = eval_expr(rhs, arith, env)?;
            arith.apply(*op, &a, Some(&b)).map_err(at)
        }
    }
}

/// Run `program` through the shadow engine and report the lane difference.
///
/// A non-finite intermediate stops evaluation and yields a report flagged
/// `exceptional`; domain violations are errors.
pub fn eval_tracked(
    program: &Program,
    bindings: &Bindings,
    policy: &PerturbationPolicy,
    significance: f64,
) -> Result<ErrorReport> {
    let mut shadow = Shadow::new(policy.clone())?;
    match program.evaluate(&mut shadow, bindings) {
        Ok(pair) => Ok(shadow.finish(pair, significance)),
        Err(e) if e.is_non_finite() => Ok(shadow
            .finish_aborted(significance)
            .expect("non-finite abort records its lanes")),
        Err(e) => Err(e),
    }
}

/// Plain binary64 evaluation.
pub fn eval_plain(program: &Program, bindings: &Bindings) -> Result<f64> {
    program.evaluate(&mut Binary64::new(), bindings)
}

/// Extended-precision evaluation of the same operation sequence.
pub fn eval_oracle(program: &Program, bindings: &Bindings, config: &OracleConfig) -> Result<BigReal> {
    crate::oracle::oracle_eval(program, bindings, config)
}

fn split_binding(pair: &str) -> Result<(&str, &str)> {
    let (name, value) = pair
        .split_once('=')
        .ok_or_else(|| Error::Argument(format!("binding `{pair}` is not name=value")))?;
    let name = name.trim();
    if name.is_empty() {
        return Err(Error::Argument(format!("binding `{pair}` has no name")));
    }
    Ok((name, value.trim()))
}

/// Parse `name=value` pairs; values may be decimal or hex-float.
pub fn parse_bindings<'a>(pairs: impl IntoIterator<Item = &'a str>) -> Result<Bindings> {
    let mut out = Bindings::new();
    for pair in pairs {
        let (name, value) = split_binding(pair)?;
        out.insert(name.to_string(), parse_value(value)?);
    }
    Ok(out)
}

/// The value spelling of each `name=value` pair, checked to parse.
pub fn parse_input_texts<'a>(pairs: impl IntoIterator<Item = &'a str>) -> Result<InputTexts> {
    let mut out = InputTexts::new();
    for pair in pairs {
        let (name, value) = split_binding(pair)?;
        parse_value(value)?;
        out.insert(name.to_string(), value.to_string());
    }
    Ok(out)
}

/// A signed decimal or hex-float number.
pub fn parse_value(text: &str) -> Result<f64> {
    let t = text.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let v = lexer::parse_number(body).map_err(Error::Argument)?;
    Ok(if neg { -v } else { v })
}

pub fn bindings<const N: usize>(pairs: [(&str, f64); N]) -> Bindings {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::DEFAULT_SIGNIFICANCE;

    #[test]
    fn illustrative_structure() {
        let p = parse("cos(x) - 0.2 + 10").unwrap();
        assert!(p.statements.is_empty());
        assert_eq!(p.parameters(), ["x"]);
        let ExprKind::Binary { op: AtomicOp::Add, lhs, rhs } = &p.result.kind else {
            panic!("{:?}", p.result)
        };
        assert!(matches!(&rhs.kind, ExprKind::Literal { value, .. } if *value == 10.0));
        let ExprKind::Binary { op: AtomicOp::Sub, lhs: c, rhs: k } = &lhs.kind else {
            panic!()
        };
        assert!(matches!(&c.kind, ExprKind::Unary { op: AtomicOp::Cos, .. }));
        assert!(matches!(&k.kind, ExprKind::Literal { value, .. } if *value == 0.2));
        assert_eq!(p.op_count(), 3);
    }

    #[test]
    fn let_bindings() {
        let p = parse("let t = x*x; t - 1").unwrap();
        assert_eq!(p.statements.len(), 1);
        assert_eq!(p.statements[0].name, "t");
        assert_eq!(p.parameters(), ["x"]);
        let p = parse("# header\nlet a = x + 1\n\nlet b = a * y # trailing\nb - a\n").unwrap();
        assert_eq!(p.statements.len(), 2);
        assert_eq!(p.parameters(), ["x", "y"]);
    }

    #[test]
    fn syntax_error_column() {
        match parse("1 +").unwrap_err() {
            Error::Syntax { span, .. } => assert_eq!((span.line, span.column), (1, 4)),
            e => panic!("{e}"),
        }
        match parse("let a = 1\nlet b = )").unwrap_err() {
            Error::Syntax { span, .. } => assert_eq!((span.line, span.column), (2, 9)),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn scoping_errors() {
        assert!(matches!(parse("foo(x)"), Err(Error::UnknownFunction { .. })));
        assert!(matches!(parse("let a = 1; let a = 2; a"), Err(Error::Rebinding { .. })));
        match parse("let a = t + 1; let t = 2; a + t") {
            Err(Error::UseBeforeBind { name, span }) => {
                assert_eq!(name, "t");
                assert_eq!(span.column, 9);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("let t = t + 1; t"), Err(Error::UseBeforeBind { .. })));
        assert!(parse("let a = 1").is_err());
        assert!(parse("").is_err());
        assert!(parse("1 2").is_err());
        assert!(parse("x $ y").is_err());
        assert!(parse("0x1.1").is_err());
        assert!(parse("1e400").is_err());
    }

    #[test]
    fn precedence() {
        let p = parse("-x^2").unwrap();
        assert_eq!(p.result.to_string(), "neg((x ^ 2))");
        assert_eq!(parse("2^3^2").unwrap().result.to_string(), "(2 ^ (3 ^ 2))");
        assert_eq!(parse("a - b * c / d + e").unwrap().result.to_string(), "((a - ((b * c) / d)) + e)");
        assert_eq!(parse("2 ^ -1").unwrap().result.to_string(), "(2 ^ neg(1))");
        assert_eq!(parse("(a - b) * -c").unwrap().result.to_string(), "((a - b) * neg(c))");
        assert_eq!(parse("(1 +\n 2)").unwrap().result.to_string(), "(1 + 2)");
    }

    #[test]
    fn printing_reparses() {
        for src in [
            "cos(x) - 0.2 + 10",
            "let t = x*x; let u = sqrt(t) ^ -y; log10(u) / t",
            "-(-x) - 0x1.8p-3 * .5e1",
        ] {
            let p = parse(src).unwrap();
            let again = parse(&p.to_string()).unwrap();
            assert_eq!(p, again, "{src}");
        }
    }

    #[test]
    fn literal_fidelity() {
        for x in [0.1f64, 1.3694384060045659, 5e-324, 1.7976931348623157e308, 0.19999999999999993] {
            let p = parse(&format!("{x:.16e}")).unwrap();
            assert_eq!(eval_plain(&p, &Bindings::new()).unwrap().to_bits(), x.to_bits());
        }
        let p = parse("0x1.999999999999ap-3").unwrap();
        assert_eq!(eval_plain(&p, &Bindings::new()).unwrap(), 0.2);
    }

    #[test]
    fn plain_examples() {
        let p = parse("1.2 - 1.1").unwrap();
        assert_eq!(eval_plain(&p, &Bindings::new()).unwrap(), 0.09999999999999987);
        let p = parse("x").unwrap();
        assert_eq!(eval_plain(&p, &bindings([("x", 5.0)])).unwrap(), 5.0);
        assert!(matches!(eval_plain(&p, &Bindings::new()), Err(Error::UnboundParameter(_))));
    }

    #[test]
    fn tracked_examples() {
        let policy = PerturbationPolicy::default();
        let p = parse("cos(x) - 0.2 + 10").unwrap();
        let r = eval_tracked(&p, &bindings([("x", 1.3694384060045659)]), &policy, DEFAULT_SIGNIFICANCE).unwrap();
        assert_eq!(r.err_ulp, 0.0);
        assert!(!r.significant);
        assert_eq!(r.injections, 1);
        assert_eq!(r.events.iter().filter(|e| e.offset != 0).count(), 1);
        assert_eq!(r.events[1].op, AtomicOp::Sub);

        let p = parse("x - y").unwrap();
        let b = bindings([("x", 0.19999999999999993), ("y", 0.2)]);
        let r = eval_tracked(&p, &b, &policy, DEFAULT_SIGNIFICANCE).unwrap();
        // One ULP of x (2^-55) against a result of -3 * 2^-55.
        assert_eq!(r.err_rel, 1.0 / 3.0);
        assert!(r.significant);

        let p = parse("x + x").unwrap();
        let r = eval_tracked(&p, &bindings([("x", 1.0)]), &policy, DEFAULT_SIGNIFICANCE).unwrap();
        assert_eq!((r.err_abs, r.injections), (0.0, 0));
    }

    #[test]
    fn errors_carry_source_span() {
        let p = parse("let a = x - 2\nlog(a)").unwrap();
        let err = eval_plain(&p, &bindings([("x", 1.0)])).unwrap_err();
        match &err {
            Error::AtSource { span, source } => {
                assert_eq!((span.line, span.column), (2, 1));
                assert!(matches!(**source, Error::OpDomain { op: AtomicOp::Log, op_index: 1, .. }));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn overflow_is_exceptional_report() {
        let p = parse("exp(x) - exp(x)").unwrap();
        let r = eval_tracked(&p, &bindings([("x", 1000.0)]), &PerturbationPolicy::default(), 1e-3).unwrap();
        assert!(r.exceptional);
    }

    #[test]
    fn binding_parsing() {
        let b = parse_bindings(["x=0.2", "y = -0x1p-2", "z=+3"]).unwrap();
        assert_eq!(b["x"], 0.2);
        assert_eq!(b["y"], -0.25);
        assert_eq!(b["z"], 3.0);
        assert!(parse_bindings(["x"]).is_err());
        assert!(parse_bindings(["=1"]).is_err());
        assert!(parse_bindings(["x=abc"]).is_err());
    }
}
