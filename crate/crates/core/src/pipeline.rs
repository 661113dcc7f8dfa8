//! Batch assessments: load each dataset, randomize it, and score both the
//! configured randomizer and the order-revealing ramp against the original.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anonymity::{assess_pair, AmplificationReport, RiskDirection, DEFAULT_EQ_TOL};
use crate::data_io::{load_csv, reduce_to_1d, synth_random_ints, ReduceMethod, SymbolicSeries};
use crate::error::{Error, Result};
use crate::perm_entropy::{optimal_pattern_length, PatternLengthScan, DEFAULT_PLATEAU_TOL};
use crate::randomizers::{blatant_ramp, randomize, RandomizerConfig, RandomizerKind};

pub const DEFAULT_SCAN_MIN: usize = 2;
pub const DEFAULT_SCAN_MAX: usize = 12;

/// Load one column of a CSV file as a series.
///
/// With no column named, a single-column file passes through and a
/// multi-column file is reduced to its first principal component.
pub fn load_series(path: &Path, column: Option<&str>) -> Result<SymbolicSeries> {
    let table = load_csv(path, &HashMap::new())?;
    let method = match column {
        Some(name) => ReduceMethod::Passthrough(name.to_string()),
        None if table.columns().len() == 1 => ReduceMethod::Passthrough(table.columns()[0].name.clone()),
        None => ReduceMethod::FirstPrincipalComponent,
    };
    reduce_to_1d(&table, &method)
}

/// Entropy-vs-pattern-length curve with the plateau choice.
pub fn scan(series: &SymbolicSeries, n_min: usize, n_max: usize, plateau_tol: f64) -> Result<PatternLengthScan> {
    optimal_pattern_length(series, n_min, n_max, plateau_tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPatternLength", into = "RawPatternLength")]
pub enum PatternLength {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawPatternLength {
    Fixed(usize),
    Keyword(String),
}

impl TryFrom<RawPatternLength> for PatternLength {
    type Error = String;

    fn try_from(raw: RawPatternLength) -> std::result::Result<Self, String> {
        match raw {
            RawPatternLength::Fixed(n) => Ok(Self::Fixed(n)),
            RawPatternLength::Keyword(k) if k == "auto" => Ok(Self::Auto),
            RawPatternLength::Keyword(k) => Err(format!("pattern_length must be an integer or \"auto\", got \"{k}\"")),
        }
    }
}

impl From<PatternLength> for RawPatternLength {
    fn from(p: PatternLength) -> Self {
        match p {
            PatternLength::Auto => Self::Keyword("auto".into()),
            PatternLength::Fixed(n) => Self::Fixed(n),
        }
    }
}

impl std::str::FromStr for PatternLength {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        s.parse()
            .map(Self::Fixed)
            .map_err(|_| format!("expected an integer or \"auto\", got \"{s}\""))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub count: usize,
    #[serde(default = "default_lo")]
    pub lo: i64,
    #[serde(default = "default_hi")]
    pub hi: i64,
    #[serde(default)]
    pub seed: u64,
}

fn default_lo() -> i64 {
    1
}

fn default_hi() -> i64 {
    100
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv { path: PathBuf, column: Option<String> },
    Synth(SynthSpec),
}

impl DataSource {
    pub fn load(&self) -> Result<SymbolicSeries> {
        match self {
            DataSource::Csv { path, column } => load_series(path, column.as_deref()),
            DataSource::Synth(s) => synth_random_ints(s.count, s.lo, s.hi, s.seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub name: String,
    pub source: DataSource,
    pub randomizer: RandomizerConfig,
    pub pattern_length: PatternLength,
}

/// Batch-wide knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings {
    pub eq_tol: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub plateau_tol: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            eq_tol: DEFAULT_EQ_TOL,
            n_min: DEFAULT_SCAN_MIN,
            n_max: DEFAULT_SCAN_MAX,
            plateau_tol: DEFAULT_PLATEAU_TOL,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    eq_tol: Option<f64>,
    n_min: Option<usize>,
    n_max: Option<usize>,
    plateau_tol: Option<f64>,
    #[serde(default)]
    dataset: Vec<RawDataset>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    name: String,
    path: Option<PathBuf>,
    column: Option<String>,
    synth: Option<SynthSpec>,
    #[serde(default = "default_randomizer")]
    randomizer: String,
    epsilon: Option<f64>,
    delta: Option<f64>,
    sensitivity: Option<f64>,
    bins: Option<usize>,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_pattern_length")]
    pattern_length: PatternLength,
}

fn default_randomizer() -> String {
    "exponential".into()
}

fn default_pattern_length() -> PatternLength {
    PatternLength::Auto
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub settings: EvalSettings,
    pub datasets: Vec<DatasetSpec>,
}

impl EvalConfig {
    /// Parse TOML. Relative dataset paths resolve against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let defaults = EvalSettings::default();
        let settings = EvalSettings {
            eq_tol: raw.eq_tol.unwrap_or(defaults.eq_tol),
            n_min: raw.n_min.unwrap_or(defaults.n_min),
            n_max: raw.n_max.unwrap_or(defaults.n_max),
            plateau_tol: raw.plateau_tol.unwrap_or(defaults.plateau_tol),
        };
        let datasets = raw
            .dataset
            .into_iter()
            .map(|d| {
                let source = match (d.path, d.synth) {
                    (Some(path), None) => DataSource::Csv {
                        path: if path.is_relative() { base_dir.join(path) } else { path },
                        column: d.column,
                    },
                    (None, Some(s)) => DataSource::Synth(s),
                    _ => {
                        return Err(Error::Config(format!(
                            "dataset '{}' needs exactly one of `path` or `synth`",
                            d.name
                        )))
                    }
                };
                let base = RandomizerConfig::default();
                let randomizer = RandomizerConfig {
                    kind: d.randomizer.parse::<RandomizerKind>()?,
                    epsilon: d.epsilon.unwrap_or(base.epsilon),
                    delta: d.delta.or(base.delta),
                    sensitivity: d.sensitivity.unwrap_or(base.sensitivity),
                    candidate_bins: d.bins.unwrap_or(base.candidate_bins),
                    seed: d.seed,
                };
                randomizer
                    .validate()
                    .map_err(|e| Error::Config(format!("dataset '{}': {e}", d.name)))?;
                Ok(DatasetSpec {
                    name: d.name,
                    source,
                    randomizer,
                    pattern_length: d.pattern_length,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { settings, datasets })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Private,
    Blatant,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scenario::Private => "private",
            Scenario::Blatant => "blatant",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentRow {
    pub dataset: String,
    pub scenario: Scenario,
    pub d1: f64,
    pub d2: f64,
    pub m: usize,
    pub n: usize,
    pub gamma: f64,
    pub r1: f64,
    pub epsilon: f64,
    pub direction: RiskDirection,
    pub clamped: bool,
    pub flags: Vec<String>,
}

impl AssessmentRow {
    fn from_report(dataset: &str, scenario: Scenario, r: AmplificationReport) -> Self {
        Self {
            dataset: dataset.to_string(),
            scenario,
            d1: r.d1,
            d2: r.d2,
            m: r.series_len,
            n: r.n,
            gamma: r.gamma,
            r1: r.r1,
            epsilon: r.epsilon,
            direction: r.direction,
            clamped: r.clamped,
            flags: r.flags,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetFailure {
    pub dataset: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Evaluation {
    pub rows: Vec<AssessmentRow>,
    pub failures: Vec<DatasetFailure>,
}

/// Assess one dataset: its private row then its blatant row.
pub fn evaluate_dataset(spec: &DatasetSpec, settings: &EvalSettings) -> Result<[AssessmentRow; 2]> {
    let original = spec.source.load()?;
    let n = match spec.pattern_length {
        PatternLength::Fixed(n) => n,
        PatternLength::Auto => {
            let hi = settings.n_max.min(original.len());
            optimal_pattern_length(&original, settings.n_min, hi, settings.plateau_tol)?.chosen
        }
    };
    let private = randomize(&original, &spec.randomizer)?;
    let ramp = blatant_ramp(&original);
    let private = assess_pair(&original, &private, n, settings.eq_tol)?;
    let blatant = assess_pair(&original, &ramp, n, settings.eq_tol)?;
    Ok([
        AssessmentRow::from_report(&spec.name, Scenario::Private, private),
        AssessmentRow::from_report(&spec.name, Scenario::Blatant, blatant),
    ])
}

/// Run every dataset. Failures are collected, not fatal; rows keep the
/// config order.
pub fn evaluate(config: &EvalConfig) -> Evaluation {
    let results: Vec<Result<[AssessmentRow; 2]>> = config
        .datasets
        .par_iter()
        .map(|d| evaluate_dataset(d, &config.settings))
        .collect();
    let mut out = Evaluation::default();
    for (spec, result) in config.datasets.iter().zip(results) {
        match result {
            Ok(rows) => out.rows.extend(rows),
            Err(e) => out.failures.push(DatasetFailure {
                dataset: spec.name.clone(),
                error: e.to_string(),
            }),
        }
    }
    out
}

const TEXT_HEADER: [&str; 10] = [
    "S/N", "Data set", "rho1", "rho2", "m", "n", "gamma", "r1", "epsilon", "direction",
];

/// Plain-text table grouped like the evaluation figure: privacy-preserving
/// rows first, then blatantly non-private ones. Degrees show 3 decimals.
pub fn render_text(rows: &[AssessmentRow]) -> String {
    let mut out = String::new();
    for (scenario, title) in [
        (Scenario::Private, "Privacy preserving cases"),
        (Scenario::Blatant, "Blatantly non-private cases"),
    ] {
        let cells: Vec<[String; 10]> = rows
            .iter()
            .filter(|r| r.scenario == scenario)
            .enumerate()
            .map(|(i, r)| {
                [
                    (i + 1).to_string(),
                    r.dataset.clone(),
                    format!("{:.3}", r.d1),
                    format!("{:.3}", r.d2),
                    r.m.to_string(),
                    r.n.to_string(),
                    format!("{:.4e}", r.gamma),
                    format!("{:.4}", r.r1),
                    format!("{:.4}", r.epsilon),
                    r.direction.to_string(),
                ]
            })
            .collect();
        let mut widths = TEXT_HEADER.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |fields: &[&str]| {
            let padded: Vec<String> = fields
                .iter()
                .zip(widths)
                .map(|(f, w)| format!("{f:<w$}"))
                .collect();
            padded.join("  ").trim_end().to_string()
        };
        let _ = writeln!(out, "{title}");
        let _ = writeln!(out, "{}", line(&TEXT_HEADER));
        if cells.is_empty() {
            let _ = writeln!(out, "(none)");
        }
        for row in &cells {
            let fields: Vec<&str> = row.iter().map(String::as_str).collect();
            let _ = writeln!(out, "{}", line(&fields));
        }
        out.push('\n');
    }
    out.pop();
    out
}

/// CSV with full-precision numbers.
pub fn render_csv(rows: &[AssessmentRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Csv {
        row: 0,
        message: e.to_string(),
    };
    w.write_record([
        "dataset", "scenario", "d1", "d2", "m", "n", "gamma", "r1", "epsilon", "direction", "clamped", "flags",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.scenario.to_string(),
            r.d1.to_string(),
            r.d2.to_string(),
            r.m.to_string(),
            r.n.to_string(),
            r.gamma.to_string(),
            r.r1.to_string(),
            r.epsilon.to_string(),
            r.direction.to_string(),
            r.clamped.to_string(),
            r.flags.join(";"),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv {
        row: 0,
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render_json(rows: &[AssessmentRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize")
}
