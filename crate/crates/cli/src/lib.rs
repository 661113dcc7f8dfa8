//! Command-line front end for `leakgauge`.
//!
//! [`run`] is the whole program; `main` only wires it to the process.
//! Exit codes: 0 success, 1 usage error, 2 data error.

mod svg;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use leakgauge::anonymity::{AmplificationReport, DEFAULT_EQ_TOL};
use leakgauge::mic::{MicResult, DEFAULT_BUDGET_EXPONENT};
use leakgauge::perm_entropy::{PatternLengthScan, DEFAULT_PLATEAU_TOL, MAX_PATTERN_LENGTH};
use leakgauge::pipeline::{self, DEFAULT_SCAN_MAX, DEFAULT_SCAN_MIN};
use leakgauge::{
    assess_pair, mic, randomize, synth_random_ints, EvalConfig, PatternLength, RandomizerConfig,
    RandomizerKind, SymbolicSeries,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "leakgauge", version, about = "Estimate privacy-leak risk of randomized data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score a randomized series against its original.
    Assess(AssessArgs),
    /// Permutation entropy as a function of pattern length.
    Scan(ScanArgs),
    /// Approximate maximal information coefficient between two series.
    Mic(MicArgs),
    /// Apply a randomizer and write the noisy series as CSV.
    Randomize(RandomizeArgs),
    /// Generate uniform random integer scores.
    Synth(SynthArgs),
    /// Run a batch of datasets described by a TOML file.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
    Tsv,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Text => "text",
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Tsv => "tsv",
        }
    }
}

#[derive(Debug, Args)]
struct OutArg {
    /// Write results here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScanRange {
    #[arg(long, default_value_t = DEFAULT_SCAN_MIN)]
    n_min: usize,
    #[arg(long, default_value_t = DEFAULT_SCAN_MAX)]
    n_max: usize,
    /// Smallest n whose entropy is within this many bits of the maximum wins.
    #[arg(long, default_value_t = DEFAULT_PLATEAU_TOL)]
    plateau_tol: f64,
}

#[derive(Debug, Args)]
struct AssessArgs {
    #[arg(long)]
    original: PathBuf,
    #[arg(long)]
    randomized: PathBuf,
    /// Column to read from the original file (default: the only column, or PCA).
    #[arg(long)]
    original_column: Option<String>,
    #[arg(long)]
    randomized_column: Option<String>,
    /// Pattern length, or `auto` to pick it from the original's entropy curve.
    #[arg(long, default_value = "auto")]
    n: PatternLength,
    #[command(flatten)]
    range: ScanRange,
    #[arg(long, default_value_t = DEFAULT_EQ_TOL)]
    eq_tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    column: Option<String>,
    #[command(flatten)]
    range: ScanRange,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
    /// Also render the curve as an SVG line chart.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct MicArgs {
    #[arg(long)]
    original: PathBuf,
    #[arg(long)]
    randomized: PathBuf,
    #[arg(long)]
    original_column: Option<String>,
    #[arg(long)]
    randomized_column: Option<String>,
    #[arg(long, default_value_t = DEFAULT_BUDGET_EXPONENT)]
    budget_exponent: f64,
    /// Upper bound on the number of bins along either axis.
    #[arg(long)]
    axis_cap: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct RandomizeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    column: Option<String>,
    /// exponential, laplace, identity or blatant-ramp.
    #[arg(long, default_value = "exponential")]
    mechanism: RandomizerKind,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    sensitivity: Option<f64>,
    /// Candidate outputs for the exponential mechanism.
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long, env = "LEAKGAUGE_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    lo: i64,
    #[arg(long, default_value_t = 100, allow_negative_numbers = true)]
    hi: i64,
    #[arg(long, env = "LEAKGAUGE_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(flatten)]
    out: OutArg,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<leakgauge::Error> for Failure {
    fn from(e: leakgauge::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Parse `args` (including the program name) and execute the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Assess(a) => assess(a, stdout),
        Command::Scan(a) => scan(a, stdout),
        Command::Mic(a) => run_mic(a, stdout),
        Command::Randomize(a) => run_randomize(a, stdout),
        Command::Synth(a) => synth(a, stdout),
        Command::Evaluate(a) => evaluate(a, stdout, stderr),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_DATA
        }
    }
}

fn require_format(format: Format, allowed: &[Format]) -> Outcome {
    if allowed.contains(&format) {
        return Ok(());
    }
    let names: Vec<_> = allowed.iter().map(|f| f.name()).collect();
    Err(usage(format!(
        "--format {} is not available here (choose {})",
        format.name(),
        names.join(", ")
    )))
}

fn check_range(r: &ScanRange) -> Outcome {
    if r.n_min < 2 {
        return Err(usage("--n-min must be at least 2"));
    }
    if r.n_max < r.n_min {
        return Err(usage(format!("--n-max {} is below --n-min {}", r.n_max, r.n_min)));
    }
    if r.n_max > MAX_PATTERN_LENGTH {
        return Err(usage(format!("--n-max must be at most {MAX_PATTERN_LENGTH}")));
    }
    if !(r.plateau_tol.is_finite() && r.plateau_tol >= 0.0) {
        return Err(usage("--plateau-tol must be a finite number >= 0"));
    }
    Ok(())
}

fn check_positive(name: &str, v: Option<f64>) -> Outcome {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(usage(format!("{name} must be a finite number > 0"))),
        _ => Ok(()),
    }
}

fn emit(out: &OutArg, stdout: &mut dyn Write, text: &str) -> Outcome {
    match &out.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Data(format!("cannot write to stdout: {e}"))),
    }
}

fn load(path: &Path, column: Option<&str>) -> Outcome<SymbolicSeries> {
    Ok(pipeline::load_series(path, column)?)
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn assess(a: AssessArgs, stdout: &mut dyn Write) -> Outcome {
    require_format(a.format, &[Format::Text, Format::Json])?;
    check_range(&a.range)?;
    if let PatternLength::Fixed(n) = a.n {
        if !(2..=MAX_PATTERN_LENGTH).contains(&n) {
            return Err(usage(format!("--n must be between 2 and {MAX_PATTERN_LENGTH}")));
        }
    }
    if !(a.eq_tol.is_finite() && a.eq_tol >= 0.0) {
        return Err(usage("--eq-tol must be a finite number >= 0"));
    }

    let original = load(&a.original, a.original_column.as_deref())?;
    let randomized = load(&a.randomized, a.randomized_column.as_deref())?;
    let n = match a.n {
        PatternLength::Fixed(n) => n,
        PatternLength::Auto => {
            let hi = a.range.n_max.min(original.len());
            pipeline::scan(&original, a.range.n_min, hi, a.range.plateau_tol)?.chosen
        }
    };
    let report = assess_pair(&original, &randomized, n, a.eq_tol)?;
    let text = match a.format {
        Format::Json => to_json(&report),
        _ => report_text(&report),
    };
    emit(&a.out, stdout, &text)
}

fn report_text(r: &AmplificationReport) -> String {
    let flags = if r.flags.is_empty() { "none".to_string() } else { r.flags.join(", ") };
    let mut s = String::new();
    let _ = writeln!(s, "pattern length n   {}", r.n);
    let _ = writeln!(s, "records N          {}", r.series_len);
    let _ = writeln!(s, "d1 (original)      {:.6}", r.d1);
    let _ = writeln!(s, "d2 (randomized)    {:.6}", r.d2);
    let _ = writeln!(s, "gamma              {:.6e}", r.gamma);
    let _ = writeln!(s, "r1                 {:.6}", r.r1);
    let _ = writeln!(s, "epsilon            {:.6}", r.epsilon);
    let _ = writeln!(s, "risk               {}", r.direction);
    let _ = writeln!(s, "flags              {flags}");
    s
}

fn scan(a: ScanArgs, stdout: &mut dyn Write) -> Outcome {
    require_format(a.format, &[Format::Tsv, Format::Json, Format::Text])?;
    check_range(&a.range)?;

    let series = load(&a.input, a.column.as_deref())?;
    let hi = a.range.n_max.min(series.len());
    let result = pipeline::scan(&series, a.range.n_min, hi, a.range.plateau_tol)?;
    if let Some(path) = &a.svg {
        std::fs::write(path, svg::entropy_curve(&result))
            .map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))?;
    }
    let text = match a.format {
        Format::Json => to_json(&result),
        Format::Text => scan_text(&result),
        _ => result.to_tsv(),
    };
    emit(&a.out, stdout, &text)
}

fn scan_text(scan: &PatternLengthScan) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>3}  {:>12}", "n", "H (bits)");
    for p in &scan.curve {
        let mark = if p.n == scan.chosen { "  <- chosen" } else { "" };
        let _ = writeln!(s, "{:>3}  {:>12.6}{mark}", p.n, p.entropy_bits);
    }
    let _ = writeln!(
        s,
        "chosen n = {} (max {:.6} bits, plateau tolerance {})",
        scan.chosen, scan.max_entropy_bits, scan.plateau_tol
    );
    s
}

fn run_mic(a: MicArgs, stdout: &mut dyn Write) -> Outcome {
    require_format(a.format, &[Format::Text, Format::Json, Format::Csv])?;
    check_positive("--budget-exponent", Some(a.budget_exponent))?;
    if matches!(a.axis_cap, Some(c) if c < 2) {
        return Err(usage("--axis-cap must be at least 2"));
    }

    let xs = load(&a.original, a.original_column.as_deref())?;
    let ys = load(&a.randomized, a.randomized_column.as_deref())?;
    let result = mic(xs.values(), ys.values(), a.budget_exponent, a.axis_cap)?;
    let text = match a.format {
        Format::Json => to_json(&result),
        Format::Csv => mic_csv(&result),
        _ => mic_text(&result),
    };
    emit(&a.out, stdout, &text)
}

fn mic_text(r: &MicResult) -> String {
    format!(
        "MIC {:.6} (best grid {}x{}, x {:?}, y {:?}; budget {} over {} points, {} grids)\n",
        r.mic,
        r.best_k,
        r.best_l,
        r.best_x_kind,
        r.best_y_kind,
        r.budget,
        r.points,
        r.grids.len()
    )
    .replace("Mass", "mass")
    .replace("Range", "range")
}

fn mic_csv(r: &MicResult) -> String {
    let kind = |k: leakgauge::PartitionKind| match k {
        leakgauge::PartitionKind::Mass => "mass",
        leakgauge::PartitionKind::Range => "range",
    };
    let mut s = String::from("k,l,x_kind,y_kind,rows,cols,mi_bits,nmi\n");
    for g in &r.grids {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            g.k,
            g.l,
            kind(g.x_kind),
            kind(g.y_kind),
            g.rows,
            g.cols,
            g.mi_bits,
            g.nmi
        );
    }
    s
}

fn run_randomize(a: RandomizeArgs, stdout: &mut dyn Write) -> Outcome {
    check_positive("--epsilon", a.epsilon)?;
    check_positive("--sensitivity", a.sensitivity)?;
    let defaults = RandomizerConfig::default();
    let cfg = RandomizerConfig {
        kind: a.mechanism,
        epsilon: a.epsilon.unwrap_or(defaults.epsilon),
        delta: a.delta.or(defaults.delta),
        sensitivity: a.sensitivity.unwrap_or(defaults.sensitivity),
        candidate_bins: a.bins.unwrap_or(defaults.candidate_bins),
        seed: a.seed,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;

    let series = load(&a.input, a.column.as_deref())?;
    let noisy = randomize(&series, &cfg)?;
    emit(&a.out, stdout, &series_csv(&noisy)?)
}

fn series_csv(series: &SymbolicSeries) -> Outcome<String> {
    let mut buf = Vec::new();
    series.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn synth(a: SynthArgs, stdout: &mut dyn Write) -> Outcome {
    if a.count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    if a.lo > a.hi {
        return Err(usage(format!("--lo {} is above --hi {}", a.lo, a.hi)));
    }
    let series = synth_random_ints(a.count, a.lo, a.hi, a.seed)?;
    emit(&a.out, stdout, &series_csv(&series)?)
}

fn evaluate(a: EvaluateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome {
    require_format(a.format, &[Format::Text, Format::Csv, Format::Json])?;
    let config = EvalConfig::load(&a.config)?;
    let result = leakgauge::evaluate(&config);
    let text = match a.format {
        Format::Json => pipeline::render_json(&result.rows) + "\n",
        Format::Csv => pipeline::render_csv(&result.rows)?,
        _ => pipeline::render_text(&result.rows),
    };
    emit(&a.out, stdout, &text)?;
    for f in &result.failures {
        let _ = writeln!(stderr, "error: dataset {}: {}", f.dataset, f.error);
    }
    if result.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Data(format!(
            "{} of {} datasets failed",
            result.failures.len(),
            config.datasets.len()
        )))
    }
}
