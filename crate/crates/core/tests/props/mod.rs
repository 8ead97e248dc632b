//! Randomized invariants shared by the property tests and the acceptance
//! summary. Each check runs [`CASES`] instances.

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use perturbe::bench::{self, SweepSpec};
use perturbe::condnum::{condition_of, AtomicOp};
use perturbe::dsl::{self, Bindings};
use perturbe::linalg::{self, Matrix, Norm};
use perturbe::metrics::{self, Direction};
use perturbe::shadow::{PerturbedOperand, TraceMode};
use perturbe::{ulp, Binary64, PerturbationPolicy, Shadow};

pub const CASES: u32 = 1000;

pub type Check = fn() -> Result<(), String>;

#[allow(dead_code)]
pub const ALL: &[(&str, Check)] = &[
    ("lane_zero", lane_zero),
    ("original_lane_purity", original_lane_purity),
    ("determinism", determinism),
    ("trace_mode_agreement", trace_mode_agreement),
    ("ulp_identities", ulp_identities),
    ("condnum_identities", condnum_identities),
    ("mann_kendall_antisymmetry", mann_kendall_antisymmetry),
    ("spearman_monotone_invariance", spearman_monotone_invariance),
    ("lu_recomposition", lu_recomposition),
    ("kappa_scale_invariance", kappa_scale_invariance),
    ("jobs_determinism", jobs_determinism),
];

fn run<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn expression() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        prop::sample::select(vec!["0.1", "0.2", "1", "2.5", "3", "1e-3", "10", "0.7"]).prop_map(String::from),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/"]), inner.clone())
                .prop_map(|(a, op, b)| format!("({a} {op} {b})")),
            (
                prop::sample::select(vec!["sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "neg"]),
                inner
            )
                .prop_map(|(f, a)| format!("{f}({a})")),
        ]
    })
}

fn input() -> impl Strategy<Value = f64> {
    prop_oneof![
        -10.0..10.0f64,
        -1e6..1e6f64,
        Just(1.3694384060045659),
        Just(0.2),
        (1u64..64).prop_map(|k| 1.0 + k as f64 * f64::EPSILON),
    ]
}

fn program_case() -> impl Strategy<Value = (dsl::Program, Bindings)> {
    (expression(), input(), input()).prop_map(|(text, x, y)| {
        let program = dsl::parse(&text).expect("generated program parses");
        let b = Bindings::from([("x".to_string(), x), ("y".to_string(), y)]);
        (program, b)
    })
}

fn bound(program: &dsl::Program, b: &Bindings) -> Bindings {
    program
        .parameters()
        .iter()
        .map(|p| (p.clone(), b[p]))
        .collect()
}

/// With no operation perturbed, the lanes never separate.
pub fn lane_zero() -> Result<(), String> {
    let policy = PerturbationPolicy::with_threshold(f64::INFINITY).unwrap();
    run(program_case(), |(program, b)| {
        let b = bound(&program, &b);
        if let Ok(r) = dsl::eval_tracked(&program, &b, &policy, 1e-3) {
            prop_assert_eq!(r.injections, 0);
            if !r.exceptional {
                prop_assert_eq!(r.res_original.to_bits(), r.res_perturbed.to_bits());
                prop_assert_eq!(r.err_abs, 0.0);
                prop_assert!(!r.significant);
            }
        }
        Ok(())
    })
}

/// The original lane is bit-identical to a plain binary64 evaluation.
pub fn original_lane_purity() -> Result<(), String> {
    let policy = PerturbationPolicy::default();
    run(program_case(), |(program, b)| {
        let b = bound(&program, &b);
        let plain = dsl::eval_plain(&program, &b);
        if let Ok(r) = dsl::eval_tracked(&program, &b, &policy, 1e-3) {
            if !r.exceptional {
                let plain = plain.map_err(|e| TestCaseError::fail(format!("plain failed: {e}")))?;
                prop_assert_eq!(r.res_original.to_bits(), plain.to_bits());
            }
        }
        Ok(())
    })
}

pub fn determinism() -> Result<(), String> {
    let policy = PerturbationPolicy::default();
    run(program_case(), |(program, b)| {
        let b = bound(&program, &b);
        let first = dsl::eval_tracked(&program, &b, &policy, 1e-3).map(|r| serde_json::to_string(&r).unwrap());
        let second = dsl::eval_tracked(&program, &b, &policy, 1e-3).map(|r| serde_json::to_string(&r).unwrap());
        match (first, second) {
            (Ok(a), Ok(c)) => prop_assert_eq!(a, c),
            (Err(a), Err(c)) => prop_assert_eq!(a.to_string(), c.to_string()),
            _ => return Err(TestCaseError::fail("one run failed and the other did not")),
        }
        Ok(())
    })
}

/// Recording only injections changes the trace, never the lanes.
pub fn trace_mode_agreement() -> Result<(), String> {
    let ops = prop::sample::select(vec![
        AtomicOp::Add,
        AtomicOp::Sub,
        AtomicOp::Mul,
        AtomicOp::Div,
        AtomicOp::Sqrt,
        AtomicOp::Neg,
        AtomicOp::Sin,
        AtomicOp::Log,
    ]);
    let step = (ops, 0usize..8, 0usize..8);
    let operand = prop_oneof![-4.0..4.0f64, Just(1.0), Just(0.5), Just(1e-17), Just(2.0)];
    let case = (prop::collection::vec(operand, 2..6), prop::collection::vec(step, 1..40));
    run(case, |(inputs, steps)| {
            let mut full = Shadow::new(PerturbationPolicy::default()).unwrap();
            let mut fast = Shadow::with_trace_mode(PerturbationPolicy::default(), TraceMode::InjectionsOnly).unwrap();
            let mut a: Vec<_> = inputs.iter().map(|&x| full.track(x).unwrap()).collect();
            let mut b = a.clone();
            for (op, i, j) in steps {
                let (i, j) = (i % a.len(), j % a.len());
                let rhs = (op.arity() == 2).then_some(j);
                let ra = full.apply(op, a[i], rhs.map(|j| a[j]));
                let rb = fast.apply(op, b[i], rhs.map(|j| b[j]));
                match (ra, rb) {
                    (Ok(x), Ok(y)) => {
                        prop_assert_eq!(x, y);
                        a.push(x);
                        b.push(y);
                    }
                    (Err(x), Err(y)) => {
                        prop_assert_eq!(x.to_string(), y.to_string());
                        break;
                    }
                    (x, y) => return Err(TestCaseError::fail(format!("{x:?} vs {y:?}"))),
                }
            }
            prop_assert_eq!(full.log().injections, fast.log().injections);
            let injected: Vec<_> = full
                .log()
                .events
                .iter()
                .filter(|e| e.perturbed_operand != PerturbedOperand::None)
                .cloned()
                .collect();
            prop_assert_eq!(&injected, &fast.log().events);
            Ok(())
        })
}

fn finite_normal() -> impl Strategy<Value = f64> {
    prop_oneof![
        prop::num::f64::NORMAL,
        -1e3..1e3f64,
    ]
    .prop_filter("normal and away from the top binade", |x| x.is_normal() && x.abs() < 1e300)
}

pub fn ulp_identities() -> Result<(), String> {
    run(finite_normal(), |x| {
        let u = ulp::ulp_of(x).unwrap();
        prop_assert_eq!(u, ulp::ulp_of(-x).unwrap());
        // The gap above |x| is one ULP.
        let up = f64::from_bits(x.abs().to_bits() + 1);
        prop_assert_eq!(up - x.abs(), u);
        // Doubling moves one binade up.
        prop_assert_eq!(ulp::ulp_of(2.0 * x).unwrap(), 2.0 * u);
        prop_assert_eq!(ulp::sub_one_ulp(x).unwrap(), x - u);
        // ULP(x) = eps * 2^E with |x| in [2^E, 2^(E+1)).
        let e = ulp::binary_exponent(x).unwrap();
        prop_assert_eq!(u, f64::EPSILON * ulp::pow2(e));
        prop_assert!(ulp::pow2(e) <= x.abs() && x.abs() < ulp::pow2(e + 1));
        Ok(())
    })
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

pub fn condnum_identities() -> Result<(), String> {
    let pair = (-1e3..1e3f64, -1e3..1e3f64).prop_filter("nonzero operands", |(x, y)| *x != 0.0 && *y != 0.0);
    run(pair, |(x, y)| {
        let mul = condition_of(AtomicOp::Mul, x, Some(y)).unwrap();
        prop_assert_eq!((mul.left, mul.right), (1.0, Some(1.0)));
        let div = condition_of(AtomicOp::Div, x, Some(y)).unwrap();
        prop_assert_eq!((div.left, div.right), (1.0, Some(1.0)));
        if x + y != 0.0 {
            let add = condition_of(AtomicOp::Add, x, Some(y)).unwrap();
            prop_assert!(close(add.left, (x / (x + y)).abs()));
            prop_assert!(close(add.right.unwrap(), (y / (x + y)).abs()));
            // Same-sign operands split the sum.
            if x.signum() == y.signum() {
                prop_assert!((add.left + add.right.unwrap() - 1.0).abs() < 1e-12);
            }
            // x - y is x + (-y).
            let sub = condition_of(AtomicOp::Sub, x, Some(-y)).unwrap();
            prop_assert!(close(sub.left, add.left));
        }
        let exp = condition_of(AtomicOp::Exp, x, None).unwrap();
        prop_assert!(close(exp.left, x.abs()));
        prop_assert!(close(
            condition_of(AtomicOp::Cos, x, None).unwrap().left,
            condition_of(AtomicOp::Cos, -x, None).unwrap().left
        ));
        prop_assert_eq!(condition_of(AtomicOp::Sqrt, x.abs(), None).unwrap().left, 0.5);
        let pow = condition_of(AtomicOp::Pow, x.abs(), Some(y)).unwrap();
        prop_assert!(close(pow.left, y.abs()));
        Ok(())
    })
}

pub fn mann_kendall_antisymmetry() -> Result<(), String> {
    let series = prop::collection::vec(prop_oneof![-1e3..1e3f64, (0i32..5).prop_map(f64::from)], 8..80);
    run(series, |xs| {
        let mut rev = xs.clone();
        rev.reverse();
        let f = metrics::mann_kendall_test(&xs, 0.05).unwrap();
        let r = metrics::mann_kendall_test(&rev, 0.05).unwrap();
        prop_assert_eq!(f.s, -r.s);
        prop_assert_eq!(f.z, -r.z);
        prop_assert_eq!(f.p_value, r.p_value);
        let flipped = match f.direction {
            Direction::Increasing => Direction::Decreasing,
            Direction::Decreasing => Direction::Increasing,
            Direction::NoTrend => Direction::NoTrend,
        };
        prop_assert_eq!(r.direction, flipped);
        Ok(())
    })
}

pub fn spearman_monotone_invariance() -> Result<(), String> {
    let data = (3usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(-3000i32..3000, n),
            prop::collection::vec(-1e6..1e6f64, n),
        )
    });
    run(data, |(xs, ys)| {
        let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
        // Exact in binary64 for |x| < 2^12, so ties are kept.
        let fx: Vec<f64> = xs.iter().map(|x| 3.0 * x * x * x + x - 7.0).collect();
        match (metrics::spearman(&xs, &ys), metrics::spearman(&fx, &ys)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b),
            (Err(_), Err(_)) => {}
            (a, b) => return Err(TestCaseError::fail(format!("{a:?} vs {b:?}"))),
        }
        Ok(())
    })
}

fn square_matrix() -> impl Strategy<Value = Matrix<f64>> {
    (1usize..9).prop_flat_map(|n| {
        prop::collection::vec(-10.0..10.0f64, n * n).prop_map(move |v| Matrix::from_vec(n, v).unwrap())
    })
}

/// P A = L U up to rounding.
pub fn lu_recomposition() -> Result<(), String> {
    run(square_matrix(), |a| {
        let n = a.dim();
        let f = match linalg::lu_decompose(&mut Binary64::new(), &a) {
            Ok(f) => f,
            Err(_) => return Ok(()),
        };
        let scale = a.norm(Norm::Infinity).max(f64::MIN_POSITIVE);
        let tol = 2f64.powi(n as i32) * n as f64 * f64::EPSILON * scale * 4.0;
        for i in 0..n {
            prop_assert_eq!(f.l(i, i), 1.0);
            for j in 0..n {
                let lu: f64 = (0..n).map(|k| f.l(i, k) * f.u(k, j)).sum();
                let pa = *a.get(f.permutation()[i], j);
                prop_assert!((lu - pa).abs() <= tol, "({}, {}): {} vs {}", i, j, lu, pa);
                if j < i {
                    prop_assert_eq!(f.u(i, j), 0.0);
                }
                if j > i {
                    prop_assert_eq!(f.l(i, j), 0.0);
                    prop_assert!(f.l(j, i).abs() <= 1.0);
                }
            }
        }
        Ok(())
    })
}

/// Scaling by a power of two is exact, so kappa does not move at all.
pub fn kappa_scale_invariance() -> Result<(), String> {
    run((square_matrix(), -30i32..30), |(a, k)| {
        let scaled = a.scaled(ulp::pow2(k));
        match (
            linalg::matrix_condition_number(&a, Norm::One),
            linalg::matrix_condition_number(&scaled, Norm::One),
        ) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x.to_bits(), y.to_bits()),
            (Err(_), Err(_)) => {}
            (x, y) => return Err(TestCaseError::fail(format!("{x:?} vs {y:?}"))),
        }
        Ok(())
    })
}

/// Sweep output does not depend on the worker count.
pub fn jobs_determinism() -> Result<(), String> {
    let program = dsl::parse("cos(x) - 0.2").unwrap();
    let policy = PerturbationPolicy::default();
    let spec = (input(), 1usize..6, 1u64..100).prop_map(|(center, points_per_side, stride_ulps)| SweepSpec {
        points_per_side,
        stride_ulps,
        ..SweepSpec::around(center)
    });
    run(spec, |spec| {
        let one = bench::run_sweep(&program, &spec, &policy, 1e-3, 1).unwrap();
        let three = bench::run_sweep(&program, &spec, &policy, 1e-3, 3).unwrap();
        prop_assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&three).unwrap());
        Ok(())
    })
}
