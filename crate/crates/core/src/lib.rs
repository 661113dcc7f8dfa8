//! Privacy-leak risk estimation for privacy-preserving transformations.
//!
//! The headline score compares the degree of anonymity (normalized
//! permutation entropy) of an original series with that of its randomized
//! counterpart, and turns the pair into an amplification bound, an
//! information coefficient, and an implied differential-privacy ε. An
//! approximate MIC between the two series is available as a second,
//! correlation-based view.
//!
//! ```
//! use leakgauge::{assess_pair, blatant_ramp, synth_random_ints, RiskDirection};
//!
//! let scores = synth_random_ints(2_000, 1, 100, 7).unwrap();
//! let ramp = blatant_ramp(&scores);
//! let report = assess_pair(&scores, &ramp, 8, 1e-3).unwrap();
//! assert_eq!(report.d2, 0.0);
//! assert_eq!(report.direction, RiskDirection::Increased);
//! ```

pub mod anonymity;
pub mod data_io;
pub mod error;
pub mod mic;
pub mod perm_entropy;
pub mod pipeline;
pub mod randomizers;

pub use anonymity::{
    amplification_bound, assess_pair, classify_risk, degree_of_anonymity, epsilon_estimate,
    info_coefficient, Amplification, AmplificationReport, AnonymityScore, EpsilonEstimate,
    RiskDirection,
};
pub use data_io::{
    encode_ordinal, load_csv, read_csv, reduce_to_1d, synth_random_ints, Column, ColumnKind,
    ReduceMethod, SymbolicSeries, Table,
};
pub use error::{Error, Result};
pub use mic::{
    build_count_matrix, discrete_mi, equipartition_edges, mic, normalized_mi, CountMatrix,
    Equipartition, MicResult, PartitionKind, ProbMatrix,
};
pub use perm_entropy::{
    extract_patterns, optimal_pattern_length, permutation_entropy, Pattern, PatternDistribution,
    PatternLengthScan,
};
pub use pipeline::{evaluate, AssessmentRow, EvalConfig, Evaluation, PatternLength, Scenario};
pub use randomizers::{
    blatant_ramp, exponential_mechanism, identity, laplace_mechanism, randomize, RandomizerConfig,
    RandomizerKind,
};
