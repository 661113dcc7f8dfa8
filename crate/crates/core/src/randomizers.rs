//! Reference randomizers used to exercise the risk metrics.
//!
//! Every randomizer keeps length and index alignment: output record `i` is
//! the response for input record `i`. Each record draws from its own RNG
//! seeded from `(seed, i)`, so results do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_io::SymbolicSeries;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomizerKind {
    Exponential,
    Laplace,
    Identity,
    BlatantRamp,
}

impl std::str::FromStr for RandomizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "exponential" => Ok(Self::Exponential),
            "laplace" => Ok(Self::Laplace),
            "identity" => Ok(Self::Identity),
            "blatant_ramp" => Ok(Self::BlatantRamp),
            other => Err(Error::param("randomizer", format!("unknown kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizerConfig {
    pub kind: RandomizerKind,
    pub epsilon: f64,
    /// Carried as metadata only; neither mechanism uses it.
    pub delta: Option<f64>,
    pub sensitivity: f64,
    pub candidate_bins: usize,
    pub seed: u64,
}

impl Default for RandomizerConfig {
    fn default() -> Self {
        Self {
            kind: RandomizerKind::Exponential,
            epsilon: 0.337,
            delta: Some(0.1),
            sensitivity: 1.0,
            candidate_bins: 100,
            seed: 0,
        }
    }
}

impl RandomizerConfig {
    pub fn validate(&self) -> Result<()> {
        let needs_epsilon = matches!(self.kind, RandomizerKind::Exponential | RandomizerKind::Laplace);
        if needs_epsilon && !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::param("epsilon", format!("{} must be positive and finite", self.epsilon)));
        }
        if self.kind == RandomizerKind::Laplace && !(self.sensitivity.is_finite() && self.sensitivity > 0.0) {
            return Err(Error::param(
                "sensitivity",
                format!("{} must be positive and finite", self.sensitivity),
            ));
        }
        if self.kind == RandomizerKind::Exponential && self.candidate_bins < 2 {
            return Err(Error::param("candidate_bins", "must be at least 2"));
        }
        Ok(())
    }
}

/// Apply the configured randomizer.
pub fn randomize(series: &SymbolicSeries, cfg: &RandomizerConfig) -> Result<SymbolicSeries> {
    cfg.validate()?;
    match cfg.kind {
        RandomizerKind::Exponential => exponential_mechanism(series, cfg),
        RandomizerKind::Laplace => laplace_mechanism(series, cfg),
        RandomizerKind::Identity => Ok(identity(series)),
        RandomizerKind::BlatantRamp => Ok(blatant_ramp(series)),
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// RNG for record `index` of a run seeded with `seed`.
pub fn record_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index as u64)))
}

/// Exponential mechanism over equal-width bin centers.
///
/// Candidates are the centers of `candidate_bins` bins spanning
/// `[min, max]` of the series; utility is `-|x - c| / (max - min)`, which
/// has sensitivity 1.
#[derive(Debug, Clone)]
pub struct ExponentialMechanism {
    candidates: Vec<f64>,
    lo: f64,
    span: f64,
    epsilon: f64,
}

impl ExponentialMechanism {
    const UTILITY_SENSITIVITY: f64 = 1.0;

    pub fn new(lo: f64, hi: f64, bins: usize, epsilon: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::param("range", format!("need min < max, got [{lo}, {hi}]")));
        }
        if bins < 2 {
            return Err(Error::param("candidate_bins", "must be at least 2"));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::param("epsilon", format!("{epsilon} must be positive and finite")));
        }
        let width = (hi - lo) / bins as f64;
        let candidates = (0..bins).map(|i| lo + width * (i as f64 + 0.5)).collect();
        Ok(Self {
            candidates,
            lo,
            span: hi - lo,
            epsilon,
        })
    }

    pub fn candidates(&self) -> &[f64] {
        &self.candidates
    }

    pub fn utility(&self, x: f64, candidate: f64) -> f64 {
        -(x - candidate).abs() / self.span
    }

    /// Selection probabilities for input `x`, aligned with `candidates()`.
    pub fn probabilities(&self, x: f64) -> Vec<f64> {
        let scale = self.epsilon / (2.0 * Self::UTILITY_SENSITIVITY);
        let logits: Vec<f64> = self.candidates.iter().map(|&c| scale * self.utility(x, c)).collect();
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }

    pub fn sample<R: Rng>(&self, x: f64, rng: &mut R) -> f64 {
        let probs = self.probabilities(x);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (c, p) in self.candidates.iter().zip(&probs) {
            acc += p;
            if u < acc {
                return *c;
            }
        }
        // rounding left acc just under 1; take the last candidate with mass
        let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        self.candidates[last]
    }

    pub fn lower_bound(&self) -> f64 {
        self.lo
    }
}

fn bounds(series: &SymbolicSeries) -> (f64, f64) {
    series
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

pub fn exponential_mechanism(series: &SymbolicSeries, cfg: &RandomizerConfig) -> Result<SymbolicSeries> {
    let (lo, hi) = bounds(series);
    if lo == hi {
        return Err(Error::ZeroVariance(
            "exponential mechanism needs a series with min < max".into(),
        ));
    }
    let mech = ExponentialMechanism::new(lo, hi, cfg.candidate_bins, cfg.epsilon)?;
    let out = series
        .values()
        .par_iter()
        .enumerate()
        .map(|(i, &x)| mech.sample(x, &mut record_rng(cfg.seed, i)))
        .collect();
    SymbolicSeries::new(out)
}

/// Adds `Laplace(0, sensitivity / ε)` noise to every record.
pub fn laplace_mechanism(series: &SymbolicSeries, cfg: &RandomizerConfig) -> Result<SymbolicSeries> {
    if !(cfg.sensitivity.is_finite() && cfg.sensitivity > 0.0) {
        return Err(Error::param(
            "sensitivity",
            format!("{} must be positive and finite", cfg.sensitivity),
        ));
    }
    if !(cfg.epsilon.is_finite() && cfg.epsilon > 0.0) {
        return Err(Error::param("epsilon", format!("{} must be positive and finite", cfg.epsilon)));
    }
    let scale = cfg.sensitivity / cfg.epsilon;
    let out = series
        .values()
        .par_iter()
        .enumerate()
        .map(|(i, &x)| x + laplace_sample(scale, &mut record_rng(cfg.seed, i)))
        .collect();
    SymbolicSeries::new(out)
}

fn laplace_sample<R: Rng>(scale: f64, rng: &mut R) -> f64 {
    // inverse CDF on u in (-1/2, 1/2)
    let u: f64 = rng.random::<f64>() - 0.5;
    -scale * u.signum() * (-2.0 * u.abs()).ln_1p()
}

/// `0, 1, …, N-1`: a single ordinal pattern, so zero permutation entropy.
pub fn blatant_ramp(series: &SymbolicSeries) -> SymbolicSeries {
    let ramp = (0..series.len()).map(|i| i as f64).collect();
    SymbolicSeries::new(ramp).expect("ramp of a non-empty series is non-empty")
}

pub fn identity(series: &SymbolicSeries) -> SymbolicSeries {
    series.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anonymity::degree_of_anonymity;

    fn cfg(kind: RandomizerKind, epsilon: f64, seed: u64) -> RandomizerConfig {
        RandomizerConfig {
            kind,
            epsilon,
            seed,
            ..RandomizerConfig::default()
        }
    }

    fn ints(n: usize) -> SymbolicSeries {
        crate::data_io::synth_random_ints(n, 1, 100, 5).unwrap()
    }

    #[test]
    fn large_epsilon_snaps_to_nearest_center() {
        let s = SymbolicSeries::new(vec![0.0, 1.2, 4.9, 10.0, 7.4]).unwrap();
        let out = exponential_mechanism(&s, &RandomizerConfig {
            candidate_bins: 10,
            ..cfg(RandomizerKind::Exponential, 1e6, 1)
        })
        .unwrap();
        assert_eq!(out.values(), &[0.5, 1.5, 4.5, 9.5, 7.5]);
    }

    #[test]
    fn exponential_is_seed_deterministic() {
        let s = ints(500);
        let c = cfg(RandomizerKind::Exponential, 0.337, 9);
        assert_eq!(randomize(&s, &c).unwrap(), randomize(&s, &c).unwrap());
        let other = cfg(RandomizerKind::Exponential, 0.337, 10);
        assert_ne!(randomize(&s, &c).unwrap(), randomize(&s, &other).unwrap());
    }

    #[test]
    fn exponential_rejects_constant_series() {
        let s = SymbolicSeries::new(vec![3.0; 10]).unwrap();
        assert!(exponential_mechanism(&s, &cfg(RandomizerKind::Exponential, 1.0, 0)).is_err());
    }

    #[test]
    fn probabilities_match_softmax() {
        let mech = ExponentialMechanism::new(0.0, 3.0, 3, 6.0).unwrap();
        assert_eq!(mech.candidates(), &[0.5, 1.5, 2.5]);
        // logits ε·u/2 = -0.5, -1.5, -2.5 at x = 0
        let w = [(-0.5f64).exp(), (-1.5f64).exp(), (-2.5f64).exp()];
        let z: f64 = w.iter().sum();
        for (p, wi) in mech.probabilities(0.0).iter().zip(w) {
            assert!((p - wi / z).abs() < 1e-15);
        }
    }

    #[test]
    fn sampling_frequencies_match_softmax() {
        let mut values = vec![0.0; 100_000];
        values[0] = 3.0;
        let s = SymbolicSeries::new(values).unwrap();
        let out = exponential_mechanism(&s, &RandomizerConfig {
            candidate_bins: 3,
            ..cfg(RandomizerKind::Exponential, 6.0, 77)
        })
        .unwrap();
        let mech = ExponentialMechanism::new(0.0, 3.0, 3, 6.0).unwrap();
        let expected = mech.probabilities(0.0);
        let draws = &out.values()[1..];
        for (c, p) in mech.candidates().iter().zip(expected) {
            let freq = draws.iter().filter(|&&v| v == *c).count() as f64 / draws.len() as f64;
            assert!((freq - p).abs() < 1e-2, "candidate {c}: {freq} vs {p}");
        }
    }

    #[test]
    fn laplace_vanishes_for_large_epsilon() {
        let s = ints(200);
        let out = laplace_mechanism(&s, &cfg(RandomizerKind::Laplace, 1e12, 3)).unwrap();
        for (a, b) in s.values().iter().zip(out.values()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn laplace_noise_is_mean_zero() {
        let s = SymbolicSeries::new(vec![0.0; 100_000]).unwrap();
        let c = RandomizerConfig {
            sensitivity: 2.0,
            ..cfg(RandomizerKind::Laplace, 1.0, 12)
        };
        let out = laplace_mechanism(&s, &c).unwrap();
        let n = out.len() as f64;
        let mean = out.values().iter().sum::<f64>() / n;
        // Laplace(0, b) has variance 2b²
        let b = c.sensitivity / c.epsilon;
        let se = (2.0 * b * b / n).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean}, se {se}");
        let var = out.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var / (2.0 * b * b) - 1.0).abs() < 0.05);
    }

    #[test]
    fn laplace_validation_and_determinism() {
        let s = ints(50);
        let bad = RandomizerConfig {
            sensitivity: 0.0,
            ..cfg(RandomizerKind::Laplace, 1.0, 0)
        };
        assert!(randomize(&s, &bad).is_err());
        let c = cfg(RandomizerKind::Laplace, 0.5, 4);
        assert_eq!(randomize(&s, &c).unwrap(), randomize(&s, &c).unwrap());
    }

    #[test]
    fn ramp_definition() {
        let s = SymbolicSeries::new(vec![9.0, 9.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!(blatant_ramp(&s).values(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        let s = ints(944);
        let ramp = blatant_ramp(&s);
        assert_eq!(ramp.len(), 944);
        assert_eq!(degree_of_anonymity(&ramp, 2).unwrap().degree, 0.0);
    }

    #[test]
    fn identity_is_identity() {
        let s = ints(30);
        assert_eq!(identity(&s), s);
        assert_eq!(randomize(&s, &cfg(RandomizerKind::Identity, 0.0, 0)).unwrap(), s);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("blatant-ramp".parse::<RandomizerKind>().unwrap(), RandomizerKind::BlatantRamp);
        assert_eq!("laplace".parse::<RandomizerKind>().unwrap(), RandomizerKind::Laplace);
        assert!("gaussian".parse::<RandomizerKind>().is_err());
    }
}
