//! The `perturbe` command line: `eval`, `sweep`, `solve`, `validate` and
//! `corpus`.
//!
//! Exit status: 0 when nothing significant was found, 10 when something
//! was, 64 for usage errors, 65 for malformed programs, inputs or failed
//! evaluations, 66 for unreadable files, 70 when the corpus gate fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{self, CsvRow, LinearConfig, SweepMetric, SweepSpec, UlpFormat};
use crate::dsl::{self, Bindings, InputTexts, Program};
use crate::error::{Error, Result};
use crate::fmt::float;
use crate::linalg::{self, Matrix, Norm};
use crate::metrics::TrendResult;
use crate::oracle::{ground_truth_error_with_texts, Oracle, OracleConfig};
use crate::shadow::{ErrorReport, PerturbationMode, PerturbationPolicy, Shadow, TraceMode};
use crate::Binary64;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SIGNIFICANT: i32 = 10;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_NO_INPUT: i32 = 66;
pub const EXIT_GATE: i32 = 70;

#[derive(Debug, Parser)]
#[command(name = "perturbe", version, about = "Floating-point error detection by paired shadow execution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub run: RunConfig,
}

/// Options shared by every subcommand. Each has a `PERTURBE_*` environment
/// variable.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Condition number above which an operation is perturbed.
    #[arg(long, global = true, default_value_t = 1e5, env = "PERTURBE_THRESHOLD")]
    pub threshold: f64,
    /// Relative error at or above which a result is significant.
    #[arg(long, global = true, default_value_t = 1e-3, env = "PERTURBE_SIGNIFICANCE")]
    pub significance: f64,
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::OneUlp, env = "PERTURBE_MODE")]
    pub mode: ModeArg,
    /// Comma-separated ULP offsets for cyclic mode.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true, env = "PERTURBE_CYCLIC_OFFSETS")]
    pub cyclic_offsets: Option<Vec<i64>>,
    /// Oracle significand bits, rounded up to a multiple of 64.
    #[arg(long, global = true, default_value_t = 128, env = "PERTURBE_ORACLE_BITS")]
    pub oracle_bits: usize,
    #[arg(long, global = true, value_enum, default_value_t = OutputArg::Text, env = "PERTURBE_OUTPUT")]
    pub output: OutputArg,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0, env = "PERTURBE_JOBS")]
    pub jobs: usize,
    #[arg(long, global = true, default_value_t = 0, env = "PERTURBE_SEED")]
    pub seed: u64,
    /// Print trace events (text output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    OneUlp,
    Cyclic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputArg {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UlpFormatArg {
    #[value(name = "64")]
    Bits64,
    #[value(name = "32")]
    Bits32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    ErrRel,
    ErrUlp,
    ErrAbs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a program through the detector.
    Eval(ProgramArgs),
    /// Evaluate a one-variable program at ULP-spaced inputs around a center.
    Sweep(SweepArgs),
    /// Solve one linear system, or run the near-singular experiment.
    Solve(SolveArgs),
    /// Compare the detector with the extended-precision oracle.
    Validate(ValidateArgs),
    /// Check every built-in corpus case against its expectation.
    Corpus,
}

#[derive(Debug, Args)]
pub struct ProgramArgs {
    /// Program text, or the path of a file holding it.
    pub program: String,
    /// Inputs as name=value.
    pub bindings: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub program: ProgramArgs,
    /// Give the oracle each input's binary64 value instead of reading its
    /// decimal text at oracle precision.
    #[arg(long)]
    pub binary_inputs: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub program: String,
    #[arg(long, allow_negative_numbers = true, env = "PERTURBE_CENTER")]
    pub center: String,
    #[arg(long, default_value_t = 1000, env = "PERTURBE_POINTS")]
    pub points: usize,
    #[arg(long, default_value_t = 10, env = "PERTURBE_STRIDE_ULPS")]
    pub stride_ulps: u64,
    #[arg(long, value_enum, default_value_t = UlpFormatArg::Bits64, env = "PERTURBE_ULP_FORMAT")]
    pub ulp_format: UlpFormatArg,
    /// Error measure fed to the trend test.
    #[arg(long, value_enum, default_value_t = MetricArg::ErrRel)]
    pub metric: MetricArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Matrix rows separated by `;` or newlines, or a matrix file.
    #[arg(long, requires = "b")]
    pub matrix: Option<String>,
    /// Right-hand side, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    #[arg(long, env = "PERTURBE_N")]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 100, env = "PERTURBE_COUNT")]
    pub count: usize,
    /// Comma-separated severities, cycled over the generated systems.
    #[arg(long, value_delimiter = ',', env = "PERTURBE_SEVERITY")]
    pub severity: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.75, env = "PERTURBE_OVERWRITE_PROBABILITY")]
    pub overwrite_probability: f64,
    /// Also solve at oracle precision and correlate the errors.
    #[arg(long)]
    pub validate: bool,
}

impl RunConfig {
    pub fn policy(&self) -> Result<PerturbationPolicy> {
        let mut p = PerturbationPolicy::with_threshold(self.threshold)?;
        p.mode = match self.mode {
            ModeArg::OneUlp => PerturbationMode::OneUlpSub,
            ModeArg::Cyclic => PerturbationMode::Cyclic,
        };
        if let Some(offsets) = &self.cyclic_offsets {
            p.cyclic_offsets = offsets.clone();
        }
        p.validate()?;
        Ok(p)
    }

    pub fn oracle(&self) -> Result<OracleConfig> {
        OracleConfig::new(self.oracle_bits)
    }

    fn check(&self) -> Result<()> {
        if !(self.significance > 0.0) {
            return Err(Error::Argument(format!("significance must be positive, got {}", self.significance)));
        }
        self.policy()?;
        self.oracle()?;
        Ok(())
    }
}

/// Parse `args` (program name first) and run, writing to the given
/// streams. Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Io(_) => EXIT_NO_INPUT,
        Error::Argument(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    cli.run.check()?;
    match &cli.command {
        Command::Eval(a) => cmd_eval(&cli.run, a, out),
        Command::Sweep(a) => cmd_sweep(&cli.run, a, out, err),
        Command::Solve(a) => cmd_solve(&cli.run, a, out, err),
        Command::Validate(a) => cmd_validate(&cli.run, a, out),
        Command::Corpus => cmd_corpus(&cli.run, out, err),
    }
}

/// Program text from a file if `source` names one, else `source` itself.
pub fn load_program(source: &str) -> Result<Program> {
    let path = Path::new(source);
    let text = if path.is_file() {
        std::fs::read_to_string(path)?
    } else {
        source.to_string()
    };
    dsl::parse(&text)
}

fn load_bindings(program: &Program, pairs: &[String]) -> Result<Bindings> {
    let b = dsl::parse_bindings(pairs.iter().map(String::as_str))?;
    for p in program.parameters() {
        if !b.contains_key(p) {
            return Err(Error::UnboundParameter(p.clone()));
        }
    }
    Ok(b)
}

fn json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn bindings_label(b: &Bindings) -> String {
    b.iter().map(|(k, v)| format!("{k}={}", float(*v))).collect::<Vec<_>>().join(";")
}

fn status(significant: bool) -> i32 {
    if significant {
        EXIT_SIGNIFICANT
    } else {
        EXIT_OK
    }
}

fn write_report_text(out: &mut dyn Write, r: &ErrorReport, verbose: bool) -> Result<()> {
    writeln!(out, "original     {}", float(r.res_original))?;
    writeln!(out, "perturbed    {}", float(r.res_perturbed))?;
    writeln!(out, "err_abs      {}", float(r.err_abs))?;
    writeln!(out, "err_rel      {}", float(r.err_rel))?;
    writeln!(out, "err_ulp      {}", float(r.err_ulp))?;
    writeln!(out, "significant  {}", r.significant)?;
    writeln!(out, "injections   {} of {} operations", r.injections, r.operations)?;
    if r.exceptional {
        writeln!(out, "exceptional  a lane went non-finite; evaluation stopped")?;
    }
    if verbose {
        for e in &r.events {
            let ops: Vec<String> = e.operands.iter().map(|v| float(*v)).collect();
            let cond = match e.condition.right {
                Some(c) => format!("{} {}", float(e.condition.left), float(c)),
                None => float(e.condition.left),
            };
            writeln!(
                out,
                "  #{:<4} {:<6} operands [{}] condition [{}] perturbed {:?} offset {}",
                e.op_index,
                e.op.name(),
                ops.join(", "),
                cond,
                e.perturbed_operand,
                e.offset
            )?;
        }
    }
    Ok(())
}

pub fn cmd_eval(cfg: &RunConfig, a: &ProgramArgs, out: &mut dyn Write) -> Result<i32> {
    let program = load_program(&a.program)?;
    let bindings = load_bindings(&program, &a.bindings)?;
    let report = dsl::eval_tracked(&program, &bindings, &cfg.policy()?, cfg.significance)?;
    match cfg.output {
        OutputArg::Json => json(out, &report)?,
        OutputArg::Csv => bench::write_csv(out, &[CsvRow::from_report("eval", &bindings_label(&bindings), &report)])?,
        OutputArg::Text => write_report_text(out, &report, cfg.verbose > 0)?,
    }
    Ok(status(report.significant))
}

#[derive(Serialize)]
struct SweepJson<'a> {
    sweep: &'a bench::Sweep,
    left: TrendResult,
    right: TrendResult,
}

pub fn cmd_sweep(cfg: &RunConfig, a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let program = load_program(&a.program)?;
    let spec = SweepSpec {
        center: dsl::parse_value(&a.center)?,
        points_per_side: a.points,
        stride_ulps: a.stride_ulps,
        ulp_format: match a.ulp_format {
            UlpFormatArg::Bits64 => UlpFormat::Bits64,
            UlpFormatArg::Bits32 => UlpFormat::Bits32,
        },
    };
    let metric = match a.metric {
        MetricArg::ErrRel => SweepMetric::ErrRel,
        MetricArg::ErrUlp => SweepMetric::ErrUlp,
        MetricArg::ErrAbs => SweepMetric::ErrAbs,
    };
    let sweep = bench::run_sweep(&program, &spec, &cfg.policy()?, cfg.significance, cfg.jobs)?;
    let (left, right) = sweep.trends(metric, a.alpha)?;
    let any_significant = sweep
        .points
        .iter()
        .any(|p| matches!(&p.outcome, bench::SweepOutcome::Report(r) if r.significant));
    let trend_line = |side: &str, t: &TrendResult| {
        format!(
            "{side}: S {} z {} p {} {:?}{}",
            t.s,
            float(t.z),
            float(t.p_value),
            t.direction,
            if t.small_sample { " (small sample)" } else { "" }
        )
    };
    let summary = format!(
        "{}\n{}\nskipped {} failed {}\n",
        trend_line("left", &left),
        trend_line("right", &right),
        sweep.skipped(),
        sweep.failed()
    );
    match cfg.output {
        OutputArg::Json => json(out, &SweepJson { sweep: &sweep, left, right })?,
        OutputArg::Csv => {
            let rows: Vec<CsvRow> = sweep
                .points
                .iter()
                .filter_map(|p| match &p.outcome {
                    bench::SweepOutcome::Report(r) => Some(CsvRow::from_report("sweep", &float(p.input), r)),
                    _ => None,
                })
                .collect();
            bench::write_csv(out, &rows)?;
            err.write_all(summary.as_bytes())?;
        }
        OutputArg::Text => {
            if cfg.verbose > 0 {
                for p in &sweep.points {
                    match &p.outcome {
                        bench::SweepOutcome::Report(r) => writeln!(
                            out,
                            "{:>6} {} err_rel {} err_ulp {}",
                            p.offset,
                            float(p.input),
                            float(r.err_rel),
                            float(r.err_ulp)
                        )?,
                        bench::SweepOutcome::Skipped => writeln!(out, "{:>6} {} skipped", p.offset, float(p.input))?,
                        bench::SweepOutcome::Failed { message } => {
                            writeln!(out, "{:>6} {} failed: {message}", p.offset, float(p.input))?
                        }
                    }
                }
            }
            out.write_all(summary.as_bytes())?;
        }
    }
    Ok(status(any_significant))
}

/// Rows separated by `;` or newlines, entries by spaces or commas. A path
/// to an existing file is read in the matrix text format instead.
pub fn parse_matrix(source: &str) -> Result<Matrix<f64>> {
    let path = Path::new(source);
    if path.is_file() {
        let f = std::fs::File::open(path)?;
        return Matrix::read_text(std::io::BufReader::new(f));
    }
    let rows = source
        .split([';', '\n'])
        .map(str::trim)
        .filter(|r| !r.is_empty())
        .map(|r| linalg::parse_floats(r.trim_matches(|c| c == '[' || c == ']')))
        .collect::<Result<Vec<_>>>()?;
    let m = Matrix::from_rows(rows)?;
    if !m.is_finite() {
        return Err(Error::Argument("matrix entries must be finite".into()));
    }
    Ok(m)
}

#[derive(Serialize)]
struct SolveJson {
    #[serde(with = "crate::fmt::float_vec")]
    x: Vec<f64>,
    #[serde(with = "crate::fmt::float_vec")]
    x_perturbed: Vec<f64>,
    error: bench::VectorError,
    significant: bool,
    injections: usize,
    #[serde(with = "crate::fmt::opt_float")]
    kappa: Option<f64>,
    #[serde(with = "crate::fmt::opt_float")]
    oracle_err_rel: Option<f64>,
}

fn solve_single(cfg: &RunConfig, a: &SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let m = parse_matrix(a.matrix.as_deref().unwrap_or_default())?;
    if let Some(n) = a.n {
        if n != m.dim() {
            return Err(Error::Argument(format!("--n {n} does not match the {0}x{0} matrix", m.dim())));
        }
    }
    let b = linalg::parse_floats(a.b.as_deref().unwrap_or_default())?;
    let plain = linalg::solve(&mut Binary64::new(), &m, &b)?;
    let mut shadow = Shadow::with_trace_mode(cfg.policy()?, TraceMode::InjectionsOnly)?;
    let tracked = linalg::solve(&mut shadow, &m, &b)?;
    let per: Vec<f64> = tracked.iter().map(|p| p.perturbed).collect();
    let error = bench::VectorError::between(&plain, &per);
    let oracle_err_rel = if a.validate {
        let lin = LinearConfig {
            oracle: cfg.oracle()?,
            ..LinearConfig::default()
        };
        let mut oracle = Oracle::new(lin.oracle)?;
        let exact = linalg::solve(&mut oracle, &m, &b)?;
        let mut diff = 0.0f64;
        let mut norm = 0.0f64;
        for (x, p) in exact.iter().zip(&plain) {
            diff = diff.max((x.to_f64() - p).abs());
            norm = norm.max(x.to_f64().abs());
        }
        Some(if diff == 0.0 { 0.0 } else { diff / norm })
    } else {
        None
    };
    let result = SolveJson {
        significant: crate::metrics::classify_significant(error.err_rel, cfg.significance),
        injections: shadow.log().injections,
        kappa: linalg::matrix_condition_number(&m, Norm::One).ok(),
        x: plain,
        x_perturbed: per,
        error,
        oracle_err_rel,
    };
    match cfg.output {
        OutputArg::Json => json(out, &result)?,
        OutputArg::Csv => {
            let row = CsvRow {
                case: "solve".into(),
                input_or_seed: String::new(),
                res_ori: error.norm_original,
                res_per: error.norm_perturbed,
                err_abs: error.err_abs,
                err_rel: error.err_rel,
                err_ulp: error.err_ulp,
                significant: result.significant,
                injections: result.injections,
                kappa: result.kappa,
                oracle_err_rel,
            };
            bench::write_csv(out, &[row])?;
        }
        OutputArg::Text => {
            let xs: Vec<String> = result.x.iter().map(|v| float(*v)).collect();
            writeln!(out, "x            {}", xs.join(" "))?;
            writeln!(out, "err_rel      {}", float(error.err_rel))?;
            writeln!(out, "significant  {}", result.significant)?;
            writeln!(out, "injections   {}", result.injections)?;
            if let Some(k) = result.kappa {
                writeln!(out, "kappa_1      {}", float(k))?;
            }
            if let Some(o) = oracle_err_rel {
                writeln!(out, "oracle_err   {}", float(o))?;
            }
        }
    }
    Ok(status(result.significant))
}

fn experiment_summary(e: &bench::LinearExperiment) -> String {
    let opt = |v: Option<f64>| v.map(float).unwrap_or_else(|| "undefined".into());
    let singular = e.rows.iter().filter(|r| r.status == bench::RowStatus::Singular).count();
    let mut s = format!(
        "cases {} singular {} significant {}\n",
        e.rows.len(),
        singular,
        e.rows.iter().filter(|r| r.significant).count()
    );
    if e.oracle_secs.is_some() {
        s += &format!(
            "pearson {} spearman {} kappa_spearman {} agreement {}\n",
            opt(e.pearson),
            opt(e.spearman),
            opt(e.kappa_spearman),
            opt(e.agreement)
        );
    }
    s += &format!(
        "time plain {}s detector {}s oracle {}\n",
        float(e.plain_secs),
        float(e.detector_secs),
        e.oracle_secs.map(|t| format!("{}s", float(t))).unwrap_or_else(|| "-".into())
    );
    s
}

pub fn cmd_solve(cfg: &RunConfig, a: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    if a.matrix.is_some() {
        return solve_single(cfg, a, out);
    }
    let mut lin = LinearConfig {
        count: a.count,
        n: a.n.unwrap_or(200),
        seed: cfg.seed,
        overwrite_probability: a.overwrite_probability,
        validate: a.validate,
        oracle: cfg.oracle()?,
        policy: cfg.policy()?,
        significance: cfg.significance,
        ..LinearConfig::default()
    };
    if let Some(s) = &a.severity {
        lin.severities = s.clone();
    }
    let e = bench::run_linear_experiment(&lin, cfg.jobs)?;
    let summary = experiment_summary(&e);
    match cfg.output {
        OutputArg::Json => json(out, &e)?,
        OutputArg::Csv => {
            let rows: Vec<CsvRow> = e.rows.iter().filter_map(CsvRow::from_linear).collect();
            bench::write_csv(out, &rows)?;
            err.write_all(summary.as_bytes())?;
        }
        OutputArg::Text => {
            if cfg.verbose > 0 {
                for r in &e.rows {
                    let opt = |v: Option<f64>| v.map(float).unwrap_or_else(|| "-".into());
                    writeln!(
                        out,
                        "{:>4} seed {} severity {} {:?} kappa {} err_rel {} oracle {}",
                        r.index,
                        r.seed,
                        float(r.severity),
                        r.status,
                        opt(r.kappa),
                        opt(r.detector.map(|d| d.err_rel)),
                        opt(r.oracle_err_rel)
                    )?;
                }
            }
            out.write_all(summary.as_bytes())?;
        }
    }
    Ok(status(e.rows.iter().any(|r| r.significant)))
}

#[derive(Serialize)]
struct ValidateJson<'a> {
    detector: &'a ErrorReport,
    oracle: &'a crate::oracle::GroundTruth,
    oracle_significant: bool,
    agree: bool,
}

/// Exit status follows the oracle's verdict.
pub fn cmd_validate(cfg: &RunConfig, v: &ValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let a = &v.program;
    let program = load_program(&a.program)?;
    let bindings = load_bindings(&program, &a.bindings)?;
    let texts = if v.binary_inputs {
        InputTexts::new()
    } else {
        dsl::parse_input_texts(a.bindings.iter().map(String::as_str))?
    };
    let report = dsl::eval_tracked(&program, &bindings, &cfg.policy()?, cfg.significance)?;
    let gt = ground_truth_error_with_texts(&program, &bindings, &texts, &cfg.oracle()?, report.res_original)?;
    let oracle_significant = gt.significant(cfg.significance);
    let agree = oracle_significant == report.significant;
    match cfg.output {
        OutputArg::Json => json(
            out,
            &ValidateJson {
                detector: &report,
                oracle: &gt,
                oracle_significant,
                agree,
            },
        )?,
        OutputArg::Csv => {
            let mut row = CsvRow::from_report("validate", &bindings_label(&bindings), &report);
            row.oracle_err_rel = Some(gt.err_rel);
            bench::write_csv(out, &[row])?;
        }
        OutputArg::Text => {
            writeln!(out, "{:<12} {:>24} {:>24}", "", "detector", "oracle")?;
            writeln!(out, "{:<12} {:>24} {:>24}", "value", float(report.res_perturbed), gt.value.to_string())?;
            for (name, d, o) in [
                ("err_abs", report.err_abs, gt.err_abs),
                ("err_rel", report.err_rel, gt.err_rel),
                ("err_ulp", report.err_ulp, gt.err_ulp),
            ] {
                writeln!(out, "{name:<12} {:>24} {:>24}", float(d), float(o))?;
            }
            writeln!(out, "{:<12} {:>24} {:>24}", "significant", report.significant, oracle_significant)?;
            writeln!(out, "agree        {agree}")?;
        }
    }
    Ok(status(oracle_significant))
}

pub fn cmd_corpus(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let outcomes = bench::run_corpus(&cfg.policy()?, &cfg.oracle()?, cfg.significance, cfg.jobs)?;
    let failures = outcomes.iter().filter(|o| !o.as_expected()).count();
    match cfg.output {
        OutputArg::Json => json(out, &outcomes)?,
        OutputArg::Csv => {
            let rows: Vec<CsvRow> = outcomes
                .iter()
                .map(|o| {
                    let name = format!("{}/{}", o.name, serde_json::to_value(o.kind).unwrap().as_str().unwrap_or(""));
                    let mut row = CsvRow::from_report(&name, &bindings_label(&o.bindings), &o.detector);
                    row.oracle_err_rel = Some(o.oracle.err_rel);
                    row
                })
                .collect();
            bench::write_csv(out, &rows)?;
        }
        OutputArg::Text => {
            for o in &outcomes {
                writeln!(
                    out,
                    "{:<16} {:<9} expected {:<15} detector {:<5} ({:>10}) oracle {:<5} ({:>10}) {}",
                    o.name,
                    format!("{:?}", o.kind).to_lowercase(),
                    format!("{:?}", o.expected),
                    o.detector_significant,
                    format!("{:.3e}", o.detector.err_rel),
                    o.oracle_significant,
                    format!("{:.3e}", o.oracle.err_rel),
                    if o.as_expected() { "ok" } else { "MISMATCH" }
                )?;
            }
        }
    }
    if failures > 0 {
        writeln!(err, "{failures} corpus input(s) did not classify as expected")?;
        return Ok(EXIT_GATE);
    }
    Ok(EXIT_OK)
}
