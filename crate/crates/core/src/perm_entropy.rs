//! Ordinal patterns and permutation entropy.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::data_io::SymbolicSeries;
use crate::error::{Error, Result};

/// Longest pattern whose Lehmer code fits a `u64` (20! < 2^64 < 21!).
pub const MAX_PATTERN_LENGTH: usize = 20;

pub const DEFAULT_PLATEAU_TOL: f64 = 0.01;

/// Ordinal pattern of one window: `ranks[i]` is the rank of the value at
/// window position `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    ranks: Vec<u8>,
}

impl Pattern {
    pub fn new(ranks: Vec<u8>) -> Result<Self> {
        let n = ranks.len();
        if !(2..=MAX_PATTERN_LENGTH).contains(&n) {
            return Err(Error::param("pattern", format!("length {n} not in 2..={MAX_PATTERN_LENGTH}")));
        }
        let mut seen = vec![false; n];
        for &r in &ranks {
            let r = r as usize;
            if r >= n || seen[r] {
                return Err(Error::param("pattern", format!("{ranks:?} is not a permutation")));
            }
            seen[r] = true;
        }
        Ok(Self { ranks })
    }

    /// Rank the window; equal values rank by position, earlier lower.
    pub fn of_window(window: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..window.len()).collect();
        // stable sort keeps index order among ties
        order.sort_by(|&a, &b| window[a].total_cmp(&window[b]));
        let mut ranks = vec![0u8; window.len()];
        for (rank, &pos) in order.iter().enumerate() {
            ranks[pos] = rank as u8;
        }
        Self { ranks }
    }

    pub fn ranks(&self) -> &[u8] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn lehmer_code(&self) -> u64 {
        let n = self.ranks.len();
        let mut code = 0u64;
        for i in 0..n {
            let smaller_after = self.ranks[i + 1..]
                .iter()
                .filter(|&&r| r < self.ranks[i])
                .count() as u64;
            code = code * (n - i) as u64 + smaller_after;
        }
        code
    }

    pub fn from_lehmer_code(mut code: u64, n: usize) -> Self {
        let mut digits = vec![0usize; n];
        for i in (0..n).rev() {
            let base = (n - i) as u64;
            digits[i] = (code % base) as usize;
            code /= base;
        }
        let mut pool: Vec<u8> = (0..n as u8).collect();
        let ranks = digits.into_iter().map(|d| pool.remove(d)).collect();
        Self { ranks }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.ranks.iter().map(u8::to_string).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// Counts `Q(π)` of every ordinal pattern of length `n` seen in a series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternDistribution {
    n: usize,
    source_len: usize,
    // keyed by Lehmer code
    counts: BTreeMap<u64, u64>,
}

impl PatternDistribution {
    pub fn pattern_length(&self) -> usize {
        self.n
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    /// `W = N - n + 1`.
    pub fn window_count(&self) -> u64 {
        (self.source_len - self.n + 1) as u64
    }

    pub fn distinct_patterns(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, pattern: &Pattern) -> u64 {
        if pattern.len() != self.n {
            return 0;
        }
        self.counts.get(&pattern.lehmer_code()).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Pattern, u64)> + '_ {
        self.counts
            .iter()
            .map(|(&code, &q)| (Pattern::from_lehmer_code(code, self.n), q))
    }

    pub fn raw_counts(&self) -> impl Iterator<Item = u64> + '_ {
        self.counts.values().copied()
    }
}

fn check_length(n: usize, len: usize) -> Result<()> {
    if n < 2 || n > len || n > MAX_PATTERN_LENGTH {
        return Err(Error::PatternLength {
            n,
            len,
            max: MAX_PATTERN_LENGTH,
        });
    }
    Ok(())
}

/// Slide a length-`n` window with stride 1 and count the patterns.
pub fn extract_patterns(series: &SymbolicSeries, n: usize) -> Result<PatternDistribution> {
    let values = series.values();
    check_length(n, values.len())?;
    let mut counts = BTreeMap::new();
    for window in values.windows(n) {
        *counts.entry(Pattern::of_window(window).lehmer_code()).or_insert(0) += 1;
    }
    Ok(PatternDistribution {
        n,
        source_len: values.len(),
        counts,
    })
}

/// Shannon entropy in bits of a list of counts (zero counts contribute 0).
pub(crate) fn entropy_bits<I: IntoIterator<Item = f64>>(weights: I, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let h: f64 = weights
        .into_iter()
        .filter(|&w| w > 0.0)
        .map(|w| {
            let p = w / total;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// `H(n) = -Σ p(π) log2 p(π)` with `p(π) = Q(π) / W`.
///
/// Evaluated as `log2 W - (1/W) Σ Q log2 Q`; every term of the sum is
/// non-negative, so `H <= log2 W` holds exactly in floating point, and the
/// result is clamped to `log2(distinct patterns)`.
pub fn permutation_entropy(dist: &PatternDistribution) -> f64 {
    let w = dist.window_count() as f64;
    let spread: f64 = dist
        .raw_counts()
        .filter(|&q| q > 1)
        .map(|q| {
            let q = q as f64;
            q * q.log2()
        })
        .sum();
    let ceiling = (dist.distinct_patterns() as f64).log2();
    (w.log2() - spread / w).clamp(0.0, ceiling)
}

/// Per-pattern weights for a weighted or restricted entropy. Patterns not
/// in the map weigh 1; a weight of 0 drops the pattern.
#[derive(Debug, Clone, Default)]
pub struct PatternWeights {
    weights: HashMap<Pattern, f64>,
}

impl PatternWeights {
    pub fn uniform() -> Self {
        Self::default()
    }

    pub fn set(&mut self, pattern: Pattern, weight: f64) -> Result<()> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::param("weight", format!("{weight} must be finite and >= 0")));
        }
        self.weights.insert(pattern, weight);
        Ok(())
    }

    pub fn get(&self, pattern: &Pattern) -> f64 {
        self.weights.get(pattern).copied().unwrap_or(1.0)
    }
}

/// Entropy of the reweighted distribution `w(π)Q(π) / Σ w Q`.
pub fn weighted_permutation_entropy(dist: &PatternDistribution, weights: &PatternWeights) -> f64 {
    let scaled: Vec<f64> = dist
        .iter()
        .map(|(p, q)| weights.get(&p) * q as f64)
        .collect();
    let total = scaled.iter().sum();
    entropy_bits(scaled, total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyPoint {
    pub n: usize,
    pub entropy_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternLengthScan {
    pub chosen: usize,
    pub max_entropy_bits: f64,
    pub plateau_tol: f64,
    pub curve: Vec<EntropyPoint>,
}

impl PatternLengthScan {
    /// `n<TAB>entropy_bits` lines behind a header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("n\tentropy_bits\n");
        for p in &self.curve {
            out.push_str(&format!("{}\t{}\n", p.n, p.entropy_bits));
        }
        out
    }
}

/// Smallest pattern length whose entropy is within `plateau_tol` bits of
/// the best one in `[n_min, n_max]`.
pub fn optimal_pattern_length(
    series: &SymbolicSeries,
    n_min: usize,
    n_max: usize,
    plateau_tol: f64,
) -> Result<PatternLengthScan> {
    let len = series.len();
    if n_min < 2 || n_min > n_max || n_max > len || n_max > MAX_PATTERN_LENGTH {
        return Err(Error::PatternRange {
            min: n_min,
            max: n_max,
            len,
        });
    }
    if !(plateau_tol.is_finite() && plateau_tol >= 0.0) {
        return Err(Error::param("plateau_tol", format!("{plateau_tol} must be finite and >= 0")));
    }
    let curve: Vec<EntropyPoint> = (n_min..=n_max)
        .into_par_iter()
        .map(|n| {
            extract_patterns(series, n).map(|d| EntropyPoint {
                n,
                entropy_bits: permutation_entropy(&d),
            })
        })
        .collect::<Result<_>>()?;
    let max_entropy_bits = curve
        .iter()
        .map(|p| p.entropy_bits)
        .fold(f64::NEG_INFINITY, f64::max);
    let chosen = curve
        .iter()
        .find(|p| p.entropy_bits >= max_entropy_bits - plateau_tol)
        .map(|p| p.n)
        .unwrap_or(n_min);
    Ok(PatternLengthScan {
        chosen,
        max_entropy_bits,
        plateau_tol,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(v: &[f64]) -> SymbolicSeries {
        SymbolicSeries::new(v.to_vec()).unwrap()
    }

    fn up() -> Pattern {
        Pattern::new(vec![0, 1]).unwrap()
    }

    fn down() -> Pattern {
        Pattern::new(vec![1, 0]).unwrap()
    }

    #[test]
    fn small_series_n2() {
        let d = extract_patterns(&series(&[3.0, 1.0, 2.0, 3.0]), 2).unwrap();
        assert_eq!(d.window_count(), 3);
        assert_eq!(d.count(&down()), 1);
        assert_eq!(d.count(&up()), 2);
        let expected = -(2.0f64 / 3.0) * (2.0f64 / 3.0).log2() - (1.0f64 / 3.0) * (1.0f64 / 3.0).log2();
        assert!((permutation_entropy(&d) - expected).abs() < 1e-15);
        assert!((permutation_entropy(&d) - 0.918_295_834_054_489_6).abs() < 1e-12);
    }

    #[test]
    fn tie_goes_up() {
        let d = extract_patterns(&series(&[1.0, 1.0]), 2).unwrap();
        assert_eq!(d.count(&up()), 1);
        assert_eq!(d.distinct_patterns(), 1);
    }

    #[test]
    fn ascending_series_single_pattern() {
        let s = series(&(0..50).map(f64::from).collect::<Vec<_>>());
        for n in 2..=8 {
            let d = extract_patterns(&s, n).unwrap();
            assert_eq!(d.distinct_patterns(), 1);
            assert_eq!(d.raw_counts().next(), Some(d.window_count()));
            assert_eq!(permutation_entropy(&d), 0.0);
        }
    }

    #[test]
    fn all_distinct_patterns_give_log2_w() {
        // windows [0,2,1] and [2,1,3] map to different patterns
        let d = extract_patterns(&series(&[0.0, 2.0, 1.0, 3.0]), 3).unwrap();
        assert_eq!(d.distinct_patterns(), 2);
        assert!((permutation_entropy(&d) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn length_bounds() {
        let s = series(&[1.0, 2.0, 3.0]);
        assert!(matches!(extract_patterns(&s, 1), Err(Error::PatternLength { .. })));
        assert!(matches!(extract_patterns(&s, 4), Err(Error::PatternLength { .. })));
        let long = series(&vec![0.0; 30]);
        assert!(extract_patterns(&long, 21).is_err());
        assert!(extract_patterns(&long, 20).is_ok());
    }

    #[test]
    fn lehmer_round_trip_all_of_s4() {
        let mut codes = Vec::new();
        for code in 0..24 {
            let p = Pattern::from_lehmer_code(code, 4);
            assert!(Pattern::new(p.ranks().to_vec()).is_ok());
            assert_eq!(p.lehmer_code(), code);
            codes.push(p);
        }
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), 24);
    }

    #[test]
    fn pattern_validation() {
        assert!(Pattern::new(vec![0]).is_err());
        assert!(Pattern::new(vec![0, 0]).is_err());
        assert!(Pattern::new(vec![0, 2]).is_err());
        assert_eq!(Pattern::new(vec![2, 0, 1]).unwrap().to_string(), "[2,0,1]");
    }

    #[test]
    fn scan_small_series() {
        let scan = optimal_pattern_length(&series(&[3.0, 1.0, 2.0, 3.0]), 2, 3, 0.0).unwrap();
        assert_eq!(scan.chosen, 3);
        assert!((scan.curve[0].entropy_bits - 0.918_295_834_054_489_6).abs() < 1e-12);
        assert!((scan.curve[1].entropy_bits - 1.0).abs() < 1e-15);
        assert_eq!(scan.to_tsv().lines().next(), Some("n\tentropy_bits"));
    }

    #[test]
    fn scan_monotone_returns_n_min() {
        let s = series(&(0..40).map(f64::from).collect::<Vec<_>>());
        let scan = optimal_pattern_length(&s, 3, 7, DEFAULT_PLATEAU_TOL).unwrap();
        assert_eq!(scan.chosen, 3);
        assert!(scan.curve.iter().all(|p| p.entropy_bits == 0.0));
    }

    #[test]
    fn scan_range_errors() {
        let s = series(&[1.0, 2.0, 3.0, 4.0]);
        assert!(optimal_pattern_length(&s, 1, 3, 0.0).is_err());
        assert!(optimal_pattern_length(&s, 3, 2, 0.0).is_err());
        assert!(optimal_pattern_length(&s, 2, 5, 0.0).is_err());
        assert!(optimal_pattern_length(&s, 2, 3, -0.1).is_err());
    }

    #[test]
    fn uniform_weights_match_plain_entropy() {
        let s = series(&[4.0, 1.0, 3.0, 5.0, 2.0, 2.0, 7.0, 0.0]);
        let d = extract_patterns(&s, 3).unwrap();
        let w = weighted_permutation_entropy(&d, &PatternWeights::uniform());
        assert!((w - permutation_entropy(&d)).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_restricts_patterns() {
        let d = extract_patterns(&series(&[3.0, 1.0, 2.0, 3.0]), 2).unwrap();
        let mut w = PatternWeights::uniform();
        w.set(down(), 0.0).unwrap();
        assert_eq!(weighted_permutation_entropy(&d, &w), 0.0);
        assert!(w.set(up(), f64::NAN).is_err());
    }
}
