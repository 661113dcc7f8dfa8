//! Degree of anonymity and the amplification-based leak score built on it.
//!
//! The original series gets a degree `d1`, the randomized one `d2`. Those
//! two values stand in for the prior and posterior breach probabilities
//! of a ρ1-to-ρ2 breach, giving the amplification bound
//!
//! ```text
//! γ = (d2 / d1) · ((1 - d1) / (1 - d2))
//! ```
//!
//! which is then remapped to `r1 = sqrt(1 - exp(-2γ))` and to the implied
//! differential-privacy level `ε >= ln γ`.

use serde::{Deserialize, Serialize};

use crate::data_io::SymbolicSeries;
use crate::error::{Error, Result};
use crate::perm_entropy::{extract_patterns, permutation_entropy};

/// Degrees are pulled into `[DEGREE_CLAMP, 1 - DEGREE_CLAMP]` before γ.
pub const DEGREE_CLAMP: f64 = 1e-9;

pub const DEFAULT_EQ_TOL: f64 = 1e-3;

pub const FLAG_CLAMPED: &str = "degree_clamped";
pub const FLAG_NO_DP_BOUND: &str = "no_informative_dp_bound";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnonymityScore {
    pub entropy_bits: f64,
    /// `log2(N)`
    pub max_entropy_bits: f64,
    pub degree: f64,
    pub n: usize,
    #[serde(rename = "N")]
    pub series_len: usize,
}

/// Permutation entropy at pattern length `n`, normalized by `log2(N)`.
pub fn degree_of_anonymity(series: &SymbolicSeries, n: usize) -> Result<AnonymityScore> {
    let len = series.len();
    if len < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: len });
    }
    let entropy_bits = permutation_entropy(&extract_patterns(series, n)?);
    let max_entropy_bits = (len as f64).log2();
    let degree = (entropy_bits / max_entropy_bits).clamp(0.0, 1.0);
    Ok(AnonymityScore {
        entropy_bits,
        max_entropy_bits,
        degree,
        n,
        series_len: len,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplification {
    pub gamma: f64,
    /// Whether either degree had to be pulled off the boundary.
    pub clamped: bool,
}

/// The amplification bound between the original degree `d1` and the
/// randomized degree `d2`.
pub fn amplification_bound(d1: f64, d2: f64) -> Amplification {
    let lo = DEGREE_CLAMP;
    let hi = 1.0 - DEGREE_CLAMP;
    let c1 = d1.clamp(lo, hi);
    let c2 = d2.clamp(lo, hi);
    Amplification {
        gamma: (c2 / c1) * ((1.0 - c1) / (1.0 - c2)),
        clamped: c1 != d1 || c2 != d2,
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::param("gamma", format!("{gamma} must be positive and finite")))
    }
}

/// Information coefficient of correlation, `sqrt(1 - e^(-2γ))`.
pub fn info_coefficient(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok((-(-2.0 * gamma).exp_m1()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RiskDirection {
    Increased,
    Decreased,
    Unchanged,
}

impl std::fmt::Display for RiskDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RiskDirection::Increased => "Increased",
            RiskDirection::Decreased => "Decreased",
            RiskDirection::Unchanged => "Unchanged",
        };
        f.write_str(s)
    }
}

/// Less anonymity after randomization means more risk.
pub fn classify_risk(d1: f64, d2: f64, eq_tol: f64) -> RiskDirection {
    if (d1 - d2).abs() <= eq_tol {
        RiskDirection::Unchanged
    } else if d1 < d2 {
        RiskDirection::Decreased
    } else {
        RiskDirection::Increased
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonEstimate {
    pub epsilon: f64,
    /// False when `ln γ <= 0`, i.e. the bound says nothing about ε >= 0.
    pub informative: bool,
}

/// Empirical noise level `ε = ln γ`. Negative values are kept, not floored.
pub fn epsilon_estimate(gamma: f64) -> Result<EpsilonEstimate> {
    check_gamma(gamma)?;
    let epsilon = gamma.ln();
    Ok(EpsilonEstimate {
        epsilon,
        informative: epsilon > 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplificationReport {
    pub d1: f64,
    pub d2: f64,
    pub gamma: f64,
    pub r1: f64,
    pub epsilon: f64,
    pub direction: RiskDirection,
    pub n: usize,
    #[serde(rename = "N")]
    pub series_len: usize,
    pub clamped: bool,
    pub flags: Vec<String>,
}

/// Score an original series against its randomized counterpart.
///
/// Both series must have the same length: record `i` of the output has to
/// be the noisy response for record `i` of the input.
pub fn assess_pair(
    original: &SymbolicSeries,
    randomized: &SymbolicSeries,
    n: usize,
    eq_tol: f64,
) -> Result<AmplificationReport> {
    if original.len() != randomized.len() {
        return Err(Error::LengthMismatch {
            original: original.len(),
            randomized: randomized.len(),
        });
    }
    if !(eq_tol.is_finite() && eq_tol >= 0.0) {
        return Err(Error::param("eq_tol", format!("{eq_tol} must be finite and >= 0")));
    }
    let d1 = degree_of_anonymity(original, n)?.degree;
    let d2 = degree_of_anonymity(randomized, n)?.degree;
    let amp = amplification_bound(d1, d2);
    let r1 = info_coefficient(amp.gamma)?;
    let eps = epsilon_estimate(amp.gamma)?;

    let mut flags = Vec::new();
    if amp.clamped {
        flags.push(FLAG_CLAMPED.to_string());
    }
    if !eps.informative {
        flags.push(FLAG_NO_DP_BOUND.to_string());
    }
    Ok(AmplificationReport {
        d1,
        d2,
        gamma: amp.gamma,
        r1,
        epsilon: eps.epsilon,
        direction: classify_risk(d1, d2, eq_tol),
        n,
        series_len: original.len(),
        clamped: amp.clamped,
        flags,
    })
}
