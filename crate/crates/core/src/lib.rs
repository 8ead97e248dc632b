//! Floating-point error detection by paired shadow execution.
//!
//! A program runs in two lanes at once. The original lane is plain binary64.
//! In the perturbed lane, every atomic operation whose condition number
//! exceeds a threshold (1e5 by default) first has the offending operand
//! moved down by one ULP. Where the program amplifies input error, the lanes
//! drift apart; where a large intermediate error is later absorbed, they
//! meet again. The lane difference is the error estimate, and an
//! extended-precision oracle replaying the same operations supplies ground
//! truth to check it against.
//!
//! ```
//! use perturbe::dsl::{self, bindings};
//! use perturbe::shadow::PerturbationPolicy;
//!
//! let program = dsl::parse("cos(x) - 0.2 + 10").unwrap();
//! let report = dsl::eval_tracked(
//!     &program,
//!     &bindings([("x", 1.3694384060045659)]),
//!     &PerturbationPolicy::default(),
//!     1e-3,
//! )
//! .unwrap();
//! // The cancellation in `cos(x) - 0.2` is perturbed, but adding 10 absorbs it.
//! assert_eq!(report.injections, 1);
//! assert_eq!(report.err_ulp, 0.0);
//! ```

pub mod arith;
pub mod bench;
pub mod cli;
pub mod condnum;
pub mod dsl;
pub mod error;
pub mod fmt;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod shadow;
pub mod ulp;

pub use arith::{Arithmetic, Binary64};
pub use condnum::{condition_of, in_dangerous_region, AtomicOp, ConditionResult};
pub use error::{Error, Result};
pub use oracle::{
    ground_truth_error, ground_truth_error_with_texts, oracle_eval, oracle_eval_with_texts, GroundTruth, Oracle, OracleConfig,
};
pub use shadow::{ErrorReport, PerturbationPolicy, Shadow, TraceEvent, TraceLog, TrackedPair};
