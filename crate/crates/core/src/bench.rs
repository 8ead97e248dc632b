//! Experiment drivers: the built-in corpus of dangerous-region programs,
//! ULP-stride input sweeps, and the near-singular linear-system experiment.

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{Arithmetic, Binary64};
use crate::condnum::AtomicOp;
use crate::dsl::{self, Bindings, Program};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, NearSingularSpec, Norm};
use crate::metrics::{self, TrendResult};
use crate::oracle::{ground_truth_error, GroundTruth, Oracle, OracleConfig};
use crate::shadow::{ErrorReport, PerturbationPolicy, Shadow, TraceMode};
use crate::ulp::{self, FloatFormat};

/// Sweep inputs with a larger magnitude are skipped.
pub const INPUT_LIMIT: f64 = 1e9;

/// Errors below this are clamped before taking log10 for correlations.
pub const LOG_FLOOR: f64 = 1e-18;

/// Run `f` on a pool of `jobs` threads, or on the global pool for 0.
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Argument(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expected {
    Significant,
    NonSignificant,
    Unknown,
}

impl Expected {
    pub fn matches(self, significant: bool) -> bool {
        match self {
            Expected::Significant => significant,
            Expected::NonSignificant => !significant,
            Expected::Unknown => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseInput {
    pub bindings: Vec<(&'static str, f64)>,
    pub expected: Expected,
}

impl CaseInput {
    pub fn bindings(&self) -> Bindings {
        self.bindings.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Dangerous,
    Benign,
}

/// A corpus program with one input inside its dangerous region and one
/// outside. Expectations were fixed from 128-bit oracle runs.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchCase {
    pub name: &'static str,
    pub region: &'static str,
    pub program: &'static str,
    pub dangerous: CaseInput,
    pub benign: CaseInput,
}

impl BenchCase {
    pub fn parse(&self) -> Result<Program> {
        dsl::parse(self.program)
    }

    pub fn input(&self, kind: InputKind) -> &CaseInput {
        match kind {
            InputKind::Dangerous => &self.dangerous,
            InputKind::Benign => &self.benign,
        }
    }
}

fn case(
    name: &'static str,
    region: &'static str,
    program: &'static str,
    dangerous: (&[(&'static str, f64)], Expected),
    benign: &[(&'static str, f64)],
) -> BenchCase {
    BenchCase {
        name,
        region,
        program,
        dangerous: CaseInput {
            bindings: dangerous.0.to_vec(),
            expected: dangerous.1,
        },
        benign: CaseInput {
            bindings: benign.to_vec(),
            expected: Expected::NonSignificant,
        },
    }
}

/// The built-in corpus, covering every dangerous region of the atomic
/// condition-number table.
///
/// Inputs are exact binary64 values, so a program only carries real error
/// into its dangerous operation through a rounded literal or intermediate.
/// Regions where binary64 cannot reach a condition number big enough to
/// matter (exp, sinh and cosh of large arguments, asin near 1) are
/// non-significant even at their dangerous inputs.
pub fn corpus() -> Vec<BenchCase> {
    use Expected::*;
    vec![
        case("illustrative", "x ~ y (sub)", "cos(x) - 0.2 + 10", (&[("x", 1.3694384060045659)], NonSignificant), &[("x", 0.5)]),
        case("sub_cancel", "x ~ y (sub)", "x - 0.2", (&[("x", 0.19999999999999993)], Significant), &[("x", 0.5)]),
        case("add_cancel", "x ~ -y (add)", "x + 0.1", (&[("x", -0.09999999999999998)], Significant), &[("x", 1.0)]),
        case("sqrt_diff", "x ~ y (sub)", "sqrt(x + 1) - sqrt(x)", (&[("x", 1e15)], Significant), &[("x", 1.0)]),
        case("expm1", "x ~ y (sub)", "exp(x) - 1", (&[("x", 1e-15)], Significant), &[("x", 1.0)]),
        case("one_minus_cos", "x ~ y (sub)", "(1 - cos(x)) / (x * x)", (&[("x", 2e-8)], Significant), &[("x", 1.0)]),
        case("sin_npi", "sin, x -> n pi", "sin(x * 3.14159265358979323846)", (&[("x", 1.0)], Significant), &[("x", 0.5)]),
        case("cos_half_pi", "cos, x -> n pi + pi/2", "cos(x * 1.57079632679489661923)", (&[("x", 1.0)], Significant), &[("x", 0.25)]),
        case("tan_half_pi", "tan, x -> n pi / 2", "tan(x * 1.57079632679489661923)", (&[("x", 1.0)], Significant), &[("x", 0.5)]),
        case("asin_one", "asin, x -> +-1", "asin(x)", (&[("x", 0.9999999999999999)], NonSignificant), &[("x", 0.5)]),
        case("acos_one", "acos, x -> 1", "acos(x - 1e-17)", (&[("x", 1.0)], Significant), &[("x", 0.5)]),
        case("exp_large", "exp, |x| large", "exp(x * 1.1)", (&[("x", 640.0)], NonSignificant), &[("x", 1.0)]),
        case("sinh_large", "sinh, |x| large", "sinh(x * 1.1)", (&[("x", -640.0)], NonSignificant), &[("x", 0.5)]),
        case("cosh_large", "cosh, |x| large", "cosh(x * 1.1)", (&[("x", 640.0)], NonSignificant), &[("x", 0.5)]),
        case("log_near_one", "log, x -> 1", "log(x + 1e-15)", (&[("x", 1.0)], Significant), &[("x", 2.0)]),
        case("log_one_2p30", "log, x -> 1", "log(x)", (&[("x", 1.0000000009313226)], NonSignificant), &[("x", 3.0)]),
        case("log10_near_one", "log10, x -> 1", "log10(x + 1e-15)", (&[("x", 1.0)], Significant), &[("x", 50.0)]),
        case("pow_large_y", "pow, |y| large", "(1 + x) ^ y", (&[("x", 1e-13), ("y", 1e15)], Significant), &[("x", 0.5), ("y", 2.0)]),
    ]
}

/// Detector and oracle verdicts for one corpus input.
#[derive(Debug, Clone, Serialize)]
pub struct CaseOutcome {
    pub name: String,
    pub kind: InputKind,
    pub bindings: Bindings,
    pub expected: Expected,
    pub detector: ErrorReport,
    pub oracle: GroundTruth,
    pub detector_significant: bool,
    pub oracle_significant: bool,
}

impl CaseOutcome {
    /// Both verdicts agree with the stored expectation.
    pub fn as_expected(&self) -> bool {
        self.expected.matches(self.detector_significant) && self.expected.matches(self.oracle_significant)
    }

    pub fn agree(&self) -> bool {
        self.detector_significant == self.oracle_significant
    }
}

pub fn run_case(
    case: &BenchCase,
    kind: InputKind,
    policy: &PerturbationPolicy,
    oracle: &OracleConfig,
    significance: f64,
) -> Result<CaseOutcome> {
    let program = case.parse()?;
    let input = case.input(kind);
    let bindings = input.bindings();
    let detector = dsl::eval_tracked(&program, &bindings, policy, significance)?;
    let gt = ground_truth_error(&program, &bindings, oracle, detector.res_original)?;
    Ok(CaseOutcome {
        name: case.name.to_string(),
        kind,
        bindings,
        expected: input.expected,
        detector_significant: detector.significant,
        oracle_significant: gt.significant(significance),
        detector,
        oracle: gt,
    })
}

/// Every corpus input, dangerous before benign, in corpus order.
pub fn run_corpus(
    policy: &PerturbationPolicy,
    oracle: &OracleConfig,
    significance: f64,
    jobs: usize,
) -> Result<Vec<CaseOutcome>> {
    let cases = corpus();
    let work: Vec<(&BenchCase, InputKind)> = cases
        .iter()
        .flat_map(|c| [(c, InputKind::Dangerous), (c, InputKind::Benign)])
        .collect();
    with_jobs(jobs, || {
        work.par_iter()
            .map(|(c, k)| run_case(c, *k, policy, oracle, significance))
            .collect::<Result<Vec<_>>>()
    })?
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UlpFormat {
    #[default]
    Bits64,
    Bits32,
}

impl UlpFormat {
    pub fn format(self) -> FloatFormat {
        match self {
            UlpFormat::Bits64 => FloatFormat::BINARY64,
            UlpFormat::Bits32 => FloatFormat::BINARY32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(with = "crate::fmt::float")]
    pub center: f64,
    pub points_per_side: usize,
    pub stride_ulps: u64,
    pub ulp_format: UlpFormat,
}

impl SweepSpec {
    /// 1000 points per side at a 10-ULP stride.
    pub fn around(center: f64) -> Self {
        SweepSpec {
            center,
            points_per_side: 1000,
            stride_ulps: 10,
            ulp_format: UlpFormat::Bits64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() {
            return Err(Error::Argument(format!("sweep center {} is not finite", self.center)));
        }
        if self.points_per_side == 0 || self.stride_ulps == 0 {
            return Err(Error::Argument("points per side and stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Input at signed offset `k`: `center + k * stride * ulp(center)`.
    pub fn input_at(&self, k: i64) -> f64 {
        let step = self.ulp_format.format().ulp_of(self.center).unwrap_or(ulp::MIN_SUBNORMAL);
        self.center + (k as f64) * (self.stride_ulps as f64) * step
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "lowercase", tag = "status")]
pub enum SweepOutcome {
    Report(ErrorReport),
    /// Input magnitude above [`INPUT_LIMIT`].
    Skipped,
    Failed { message: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub offset: i64,
    #[serde(with = "crate::fmt::float")]
    pub input: f64,
    pub outcome: SweepOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMetric {
    #[default]
    ErrRel,
    ErrUlp,
    ErrAbs,
}

impl SweepMetric {
    pub fn of(self, r: &ErrorReport) -> f64 {
        match self {
            SweepMetric::ErrRel => r.err_rel,
            SweepMetric::ErrUlp => r.err_ulp,
            SweepMetric::ErrAbs => r.err_abs,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Sweep {
    pub spec: SweepSpec,
    /// Ordered by offset, `-points_per_side ..= points_per_side`.
    pub points: Vec<SweepPoint>,
}

impl Sweep {
    fn side(&self, metric: SweepMetric, left: bool) -> Vec<f64> {
        self.points
            .iter()
            .filter(|p| if left { p.offset < 0 } else { p.offset > 0 })
            .filter_map(|p| match &p.outcome {
                SweepOutcome::Report(r) => Some(metric.of(r)),
                _ => None,
            })
            .collect()
    }

    /// Metric values left of the center, in increasing input order.
    pub fn left(&self, metric: SweepMetric) -> Vec<f64> {
        self.side(metric, true)
    }

    /// Metric values right of the center, in increasing input order.
    pub fn right(&self, metric: SweepMetric) -> Vec<f64> {
        self.side(metric, false)
    }

    /// Mann-Kendall on each half, center excluded.
    pub fn trends(&self, metric: SweepMetric, alpha: f64) -> Result<(TrendResult, TrendResult)> {
        Ok((
            metrics::mann_kendall_test(&self.left(metric), alpha)?,
            metrics::mann_kendall_test(&self.right(metric), alpha)?,
        ))
    }

    pub fn skipped(&self) -> usize {
        self.points.iter().filter(|p| matches!(p.outcome, SweepOutcome::Skipped)).count()
    }

    pub fn failed(&self) -> usize {
        self.points
            .iter()
            .filter(|p| matches!(p.outcome, SweepOutcome::Failed { .. }))
            .count()
    }
}

/// Evaluate a univariate program at `center + k * stride` ULPs for
/// `k = -P ..= P`. Per-point failures are recorded, not returned.
pub fn run_sweep(
    program: &Program,
    spec: &SweepSpec,
    policy: &PerturbationPolicy,
    significance: f64,
    jobs: usize,
) -> Result<Sweep> {
    spec.validate()?;
    policy.validate()?;
    let [name] = program.parameters() else {
        return Err(Error::Argument(format!(
            "sweeps need a program of one variable, this one has {}",
            program.parameters().len()
        )));
    };
    let p = spec.points_per_side as i64;
    let points = with_jobs(jobs, || {
        (-p..=p)
            .into_par_iter()
            .map(|k| {
                let input = spec.input_at(k);
                let outcome = if !(input.abs() <= INPUT_LIMIT) {
                    SweepOutcome::Skipped
                } else {
                    let b = Bindings::from([(name.clone(), input)]);
                    match dsl::eval_tracked(program, &b, policy, significance) {
                        Ok(r) => SweepOutcome::Report(r),
                        Err(e) => SweepOutcome::Failed { message: e.to_string() },
                    }
                };
                SweepPoint { offset: k, input, outcome }
            })
            .collect()
    })?;
    Ok(Sweep { spec: *spec, points })
}

/// Lane difference of a vector result in the infinity norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VectorError {
    /// `||x_ori||_inf`.
    #[serde(with = "crate::fmt::float")]
    pub norm_original: f64,
    /// `||x_per||_inf`.
    #[serde(with = "crate::fmt::float")]
    pub norm_perturbed: f64,
    /// `||x_ori - x_per||_inf`.
    #[serde(with = "crate::fmt::float")]
    pub err_abs: f64,
    /// `err_abs / ||x_ori||_inf`.
    #[serde(with = "crate::fmt::float")]
    pub err_rel: f64,
    /// `err_abs / ulp(||x_ori||_inf)`.
    #[serde(with = "crate::fmt::float")]
    pub err_ulp: f64,
}

impl VectorError {
    pub fn between(original: &[f64], perturbed: &[f64]) -> VectorError {
        let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let norm_original = inf(original);
        let err_abs = original
            .iter()
            .zip(perturbed)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let err_rel = if err_abs == 0.0 {
            0.0
        } else if norm_original == 0.0 {
            f64::INFINITY
        } else {
            err_abs / norm_original
        };
        VectorError {
            norm_original,
            norm_perturbed: inf(perturbed),
            err_abs,
            err_rel,
            err_ulp: err_abs / ulp::ulp_of(norm_original).unwrap_or(ulp::MIN_SUBNORMAL),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConfig {
    pub count: usize,
    pub n: usize,
    pub seed: u64,
    /// Case `i` uses `severities[i % len]`.
    pub severities: Vec<f64>,
    pub overwrite_probability: f64,
    /// Also solve at oracle precision.
    pub validate: bool,
    pub oracle: OracleConfig,
    pub policy: PerturbationPolicy,
    pub significance: f64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            count: 100,
            n: 200,
            seed: 0,
            severities: vec![1.0, 1e-1, 1e-2, 1e-3],
            overwrite_probability: 0.75,
            validate: true,
            oracle: OracleConfig::default(),
            policy: PerturbationPolicy::default(),
            significance: metrics::DEFAULT_SIGNIFICANCE,
        }
    }
}

impl LinearConfig {
    pub fn validate(&self) -> Result<()> {
        if self.count < 1 || self.n < 1 {
            return Err(Error::Argument("count and dimension must be at least 1".into()));
        }
        if self.severities.is_empty() || self.severities.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
            return Err(Error::Argument("severities must be nonempty and lie in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.overwrite_probability) {
            return Err(Error::Argument("overwrite probability must lie in [0, 1]".into()));
        }
        self.oracle.validate()?;
        self.policy.validate()
    }

    /// Matrix of case `i`. The right-hand side is `A * ones` in binary64.
    pub fn system(&self, i: usize) -> Result<(Matrix<f64>, Vec<f64>)> {
        let spec = NearSingularSpec {
            severity: self.severities[i % self.severities.len()],
            overwrite_probability: self.overwrite_probability,
        };
        let a = if self.n == 1 {
            Matrix::from_vec(1, vec![1.0])?
        } else {
            linalg::gen_matrix(self.n, self.case_seed(i), spec)?
        };
        let b = a.mul_vec(&vec![1.0; self.n]);
        Ok((a, b))
    }

    pub fn case_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(i as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "status", content = "message")]
pub enum RowStatus {
    Ok,
    Singular,
    Failed(String),
}

/// One solved system. Timings cover lifting, factorization and solve.
#[derive(Debug, Clone, Serialize)]
pub struct LinearRow {
    pub index: usize,
    pub seed: u64,
    #[serde(with = "crate::fmt::float")]
    pub severity: f64,
    pub status: RowStatus,
    #[serde(with = "crate::fmt::opt_float")]
    pub kappa: Option<f64>,
    pub detector: Option<VectorError>,
    pub significant: bool,
    pub injections: usize,
    /// `||x_oracle - x_plain||_inf / ||x_oracle||_inf`.
    #[serde(with = "crate::fmt::opt_float")]
    pub oracle_err_rel: Option<f64>,
    #[serde(skip)]
    pub plain_time: Duration,
    #[serde(skip)]
    pub detector_time: Duration,
    #[serde(skip)]
    pub oracle_time: Option<Duration>,
}

impl LinearRow {
    pub fn is_ok(&self) -> bool {
        self.status == RowStatus::Ok
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearExperiment {
    pub rows: Vec<LinearRow>,
    /// Over log10 errors of the non-singular rows; `None` when undefined.
    #[serde(with = "crate::fmt::opt_float")]
    pub pearson: Option<f64>,
    #[serde(with = "crate::fmt::opt_float")]
    pub spearman: Option<f64>,
    /// Spearman between kappa and the oracle error.
    #[serde(with = "crate::fmt::opt_float")]
    pub kappa_spearman: Option<f64>,
    /// Share of rows whose two errors are within a factor of 100.
    #[serde(with = "crate::fmt::opt_float")]
    pub agreement: Option<f64>,
    #[serde(with = "crate::fmt::float")]
    pub plain_secs: f64,
    #[serde(with = "crate::fmt::float")]
    pub detector_secs: f64,
    #[serde(with = "crate::fmt::opt_float")]
    pub oracle_secs: Option<f64>,
}

fn log_err(e: f64) -> f64 {
    e.max(LOG_FLOOR).log10()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

/// `||x_oracle - x_plain||_inf / ||x_oracle||_inf`, differences taken at
/// oracle precision.
fn oracle_error(oracle: &mut Oracle, exact: &[crate::oracle::BigReal], plain: &[f64]) -> Result<f64> {
    let mut diff_max = 0.0f64;
    let mut norm = 0.0f64;
    for (x, p) in exact.iter().zip(plain) {
        let p = oracle.input(*p)?;
        let d = oracle.apply(AtomicOp::Sub, x, Some(&p))?;
        diff_max = diff_max.max(d.to_f64().abs());
        norm = norm.max(x.to_f64().abs());
    }
    Ok(if diff_max == 0.0 {
        0.0
    } else if norm == 0.0 {
        f64::INFINITY
    } else {
        diff_max / norm
    })
}

pub fn run_linear_case(cfg: &LinearConfig, i: usize) -> Result<LinearRow> {
    let (a, b) = cfg.system(i)?;
    let mut row = LinearRow {
        index: i,
        seed: cfg.case_seed(i),
        severity: cfg.severities[i % cfg.severities.len()],
        status: RowStatus::Ok,
        kappa: None,
        detector: None,
        significant: false,
        injections: 0,
        oracle_err_rel: None,
        plain_time: Duration::ZERO,
        detector_time: Duration::ZERO,
        oracle_time: None,
    };

    let (plain, t) = timed(|| linalg::solve(&mut Binary64::new(), &a, &b));
    row.plain_time = t;
    let plain = match plain {
        Ok(x) => x,
        Err(Error::Singular { .. }) => {
            row.status = RowStatus::Singular;
            return Ok(row);
        }
        Err(e) => {
            row.status = RowStatus::Failed(e.to_string());
            return Ok(row);
        }
    };
    row.kappa = linalg::matrix_condition_number(&a, Norm::One).ok();

    let mut shadow = Shadow::with_trace_mode(cfg.policy.clone(), TraceMode::InjectionsOnly)?;
    let (tracked, t) = timed(|| linalg::solve(&mut shadow, &a, &b));
    row.detector_time = t;
    let tracked = match tracked {
        Ok(x) => x,
        Err(e) => {
            row.status = RowStatus::Failed(e.to_string());
            return Ok(row);
        }
    };
    let ori: Vec<f64> = tracked.iter().map(|p| p.original).collect();
    let per: Vec<f64> = tracked.iter().map(|p| p.perturbed).collect();
    debug_assert_eq!(ori, plain);
    let err = VectorError::between(&ori, &per);
    row.significant = metrics::classify_significant(err.err_rel, cfg.significance);
    row.injections = shadow.log().injections;
    row.detector = Some(err);

    if cfg.validate {
        let mut oracle = Oracle::new(cfg.oracle)?;
        let (exact, t) = timed(|| linalg::solve(&mut oracle, &a, &b));
        row.oracle_time = Some(t);
        match exact {
            Ok(x) => row.oracle_err_rel = Some(oracle_error(&mut oracle, &x, &plain)?),
            Err(Error::Singular { .. }) => row.status = RowStatus::Singular,
            Err(e) => row.status = RowStatus::Failed(e.to_string()),
        }
    }
    Ok(row)
}

/// Generate and solve `count` systems, then correlate detector and oracle
/// errors over the non-singular ones.
pub fn run_linear_experiment(cfg: &LinearConfig, jobs: usize) -> Result<LinearExperiment> {
    cfg.validate()?;
    let rows = with_jobs(jobs, || {
        (0..cfg.count)
            .into_par_iter()
            .map(|i| run_linear_case(cfg, i))
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(summarize(rows))
}

pub fn summarize(rows: Vec<LinearRow>) -> LinearExperiment {
    let usable: Vec<&LinearRow> = rows
        .iter()
        .filter(|r| r.is_ok())
        .filter(|r| {
            r.detector.is_some_and(|d| d.err_rel.is_finite()) && r.oracle_err_rel.is_some_and(f64::is_finite)
        })
        .collect();
    let det: Vec<f64> = usable.iter().map(|r| log_err(r.detector.unwrap().err_rel)).collect();
    let ora: Vec<f64> = usable.iter().map(|r| log_err(r.oracle_err_rel.unwrap())).collect();
    let kap: Vec<f64> = usable.iter().map(|r| r.kappa.unwrap_or(f64::NAN)).collect();
    let (pearson, spearman, kappa_spearman, agreement) = if usable.is_empty() {
        (None, None, None, None)
    } else {
        let agree = det.iter().zip(&ora).filter(|(d, o)| (*d - *o).abs() <= 2.0).count();
        (
            metrics::pearson(&det, &ora).ok(),
            metrics::spearman(&det, &ora).ok(),
            if kap.iter().all(|k| k.is_finite()) {
                metrics::spearman(&kap, &ora).ok()
            } else {
                None
            },
            Some(agree as f64 / usable.len() as f64),
        )
    };
    let secs = |f: &dyn Fn(&LinearRow) -> Duration| rows.iter().map(f).sum::<Duration>().as_secs_f64();
    let oracle_secs = rows
        .iter()
        .any(|r| r.oracle_time.is_some())
        .then(|| secs(&|r| r.oracle_time.unwrap_or_default()));
    LinearExperiment {
        pearson,
        spearman,
        kappa_spearman,
        agreement,
        plain_secs: secs(&|r| r.plain_time),
        detector_secs: secs(&|r| r.detector_time),
        oracle_secs,
        rows,
    }
}

/// One line of the experiment CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub case: String,
    pub input_or_seed: String,
    pub res_ori: f64,
    pub res_per: f64,
    pub err_abs: f64,
    pub err_rel: f64,
    pub err_ulp: f64,
    pub significant: bool,
    pub injections: usize,
    pub kappa: Option<f64>,
    pub oracle_err_rel: Option<f64>,
}

pub const CSV_HEADER: [&str; 11] = [
    "case",
    "input_or_seed",
    "res_ori",
    "res_per",
    "err_abs",
    "err_rel",
    "err_ulp",
    "significant",
    "injections",
    "kappa",
    "oracle_err_rel",
];

impl CsvRow {
    pub fn from_report(case: &str, input: &str, r: &ErrorReport) -> CsvRow {
        CsvRow {
            case: case.to_string(),
            input_or_seed: input.to_string(),
            res_ori: r.res_original,
            res_per: r.res_perturbed,
            err_abs: r.err_abs,
            err_rel: r.err_rel,
            err_ulp: r.err_ulp,
            significant: r.significant,
            injections: r.injections,
            kappa: None,
            oracle_err_rel: None,
        }
    }

    /// `None` for rows without a detector result.
    pub fn from_linear(row: &LinearRow) -> Option<CsvRow> {
        let d = row.detector?;
        Some(CsvRow {
            case: format!("lu{}", row.index),
            input_or_seed: row.seed.to_string(),
            res_ori: d.norm_original,
            res_per: d.norm_perturbed,
            err_abs: d.err_abs,
            err_rel: d.err_rel,
            err_ulp: d.err_ulp,
            significant: row.significant,
            injections: row.injections,
            kappa: row.kappa,
            oracle_err_rel: row.oracle_err_rel,
        })
    }

    fn fields(&self) -> [String; 11] {
        let f = crate::fmt::float;
        let opt = |v: Option<f64>| v.map(f).unwrap_or_default();
        [
            self.case.clone(),
            self.input_or_seed.clone(),
            f(self.res_ori),
            f(self.res_per),
            f(self.err_abs),
            f(self.err_rel),
            f(self.err_ulp),
            self.significant.to_string(),
            self.injections.to_string(),
            opt(self.kappa),
            opt(self.oracle_err_rel),
        ]
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[CsvRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record(r.fields()).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{Direction, DEFAULT_SIGNIFICANCE};

    #[test]
    fn corpus_covers_regions() {
        let c = corpus();
        assert!(c.len() >= 12);
        for region in ["sub", "add", "sin", "cos", "tan", "asin", "acos", "exp", "log", "pow"] {
            assert!(
                c.iter().any(|k| k.region.starts_with(region) || k.region.ends_with(&format!("({region})"))),
                "{region}"
            );
        }
        for k in &c {
            let p = k.parse().unwrap();
            for input in [&k.dangerous, &k.benign] {
                let b = input.bindings();
                assert_eq!(p.parameters().len(), b.len(), "{}", k.name);
            }
        }
    }

    #[test]
    fn sweep_of_three_points() {
        let p = dsl::parse("x - 0.2").unwrap();
        let mut spec = SweepSpec::around(0.2);
        spec.points_per_side = 1;
        let s = run_sweep(&p, &spec, &PerturbationPolicy::default(), DEFAULT_SIGNIFICANCE, 1).unwrap();
        assert_eq!(s.points.len(), 3);
        assert_eq!(s.points.iter().map(|p| p.offset).collect::<Vec<_>>(), [-1, 0, 1]);
        assert_eq!(s.points[2].input, 0.2 + 10.0 * ulp::ulp_of(0.2).unwrap());
    }

    #[test]
    fn sweep_skips_large_inputs() {
        let p = dsl::parse("x + 1").unwrap();
        let spec = SweepSpec {
            center: 1e9,
            points_per_side: 5,
            stride_ulps: 1,
            ulp_format: UlpFormat::Bits32,
        };
        let s = run_sweep(&p, &spec, &PerturbationPolicy::default(), DEFAULT_SIGNIFICANCE, 2).unwrap();
        assert_eq!(s.skipped(), 5);
        assert!(s.points.iter().all(|p| (p.input > 1e9) == matches!(p.outcome, SweepOutcome::Skipped)));
        assert!(run_sweep(&dsl::parse("x + y").unwrap(), &spec, &PerturbationPolicy::default(), 1e-3, 1).is_err());
    }

    #[test]
    fn sub_sweep_error_falls_away_from_center() {
        let p = dsl::parse("x - 0.2").unwrap();
        let mut spec = SweepSpec::around(0.2);
        spec.points_per_side = 200;
        let s = run_sweep(&p, &spec, &PerturbationPolicy::default(), DEFAULT_SIGNIFICANCE, 0).unwrap();
        let right = s.right(SweepMetric::ErrRel);
        assert!(right.windows(2).all(|w| w[1] < w[0]));
        let ulps = s.right(SweepMetric::ErrUlp);
        assert!(ulps.windows(2).all(|w| w[1] <= w[0]) && ulps[0] > ulps[ulps.len() - 1]);
        let left = s.left(SweepMetric::ErrRel);
        assert!(left.windows(2).all(|w| w[1] > w[0]));
        let (l, r) = s.trends(SweepMetric::ErrRel, 0.05).unwrap();
        assert_eq!((l.direction, r.direction), (Direction::Increasing, Direction::Decreasing));
    }

    #[test]
    fn vector_error() {
        let e = VectorError::between(&[1.0, -4.0], &[1.0, -4.5]);
        assert_eq!((e.err_abs, e.err_rel, e.norm_original, e.norm_perturbed), (0.5, 0.125, 4.0, 4.5));
        assert_eq!(e.err_ulp, 0.5 / ulp::ulp_of(4.0).unwrap());
        assert_eq!(VectorError::between(&[0.0], &[0.0]).err_rel, 0.0);
        assert_eq!(VectorError::between(&[0.0], &[1e-300]).err_rel, f64::INFINITY);
    }

    #[test]
    fn identity_systems_have_undefined_correlation() {
        let cfg = LinearConfig {
            count: 4,
            n: 1,
            ..LinearConfig::default()
        };
        let exp = run_linear_experiment(&cfg, 1).unwrap();
        assert!(exp.rows.iter().all(|r| r.is_ok() && r.detector.unwrap().err_rel == 0.0));
        assert!(exp.rows.iter().all(|r| r.oracle_err_rel == Some(0.0)));
        assert_eq!((exp.pearson, exp.spearman), (None, None));
    }

    #[test]
    fn csv_layout() {
        let row = CsvRow {
            case: "c".into(),
            input_or_seed: "0.1".into(),
            res_ori: 1.0,
            res_per: 1.0,
            err_abs: 0.0,
            err_rel: f64::INFINITY,
            err_ulp: 2.5e-20,
            significant: true,
            injections: 3,
            kappa: None,
            oracle_err_rel: Some(0.5),
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "case,input_or_seed,res_ori,res_per,err_abs,err_rel,err_ulp,significant,injections,kappa,oracle_err_rel\n\
             c,0.1,1.0,1.0,0.0,inf,2.5e-20,true,3,,0.5\n"
        );
    }
}
