//! Grid-based mutual information and an approximate Maximal Information
//! Coefficient.
//!
//! Full MIC optimizes arbitrary partition boundaries. Here each axis is cut
//! by either a mass equipartition (equal counts) or a range equipartition
//! (equal widths), and all shapes `k × ℓ` with `k, ℓ >= 2` and
//! `k·ℓ <= B(n)` are tried with every mass/range combination.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_BUDGET_EXPONENT: f64 = 0.6;

const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionKind {
    Mass,
    Range,
}

/// Interior cut points of a 1-D partition.
///
/// Bins are half-open `[e_{i-1}, e_i)` with the last bin closed, so a value
/// equal to an edge falls in the upper bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equipartition {
    pub kind: PartitionKind,
    pub requested_parts: usize,
    pub edges: Vec<f64>,
    /// Set when ties or a zero range forced unequal or fewer bins.
    pub degenerate: bool,
}

impl Equipartition {
    pub fn bins(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn bin_of(&self, x: f64) -> usize {
        bin_index(&self.edges, x)
    }
}

fn bin_index(edges: &[f64], x: f64) -> usize {
    edges.partition_point(|&e| e <= x)
}

/// Midpoint of two ordered values that is strictly greater than `lo`.
fn cut_between(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo {
        mid
    } else {
        hi
    }
}

pub fn equipartition_edges(values: &[f64], parts: usize, kind: PartitionKind) -> Result<Equipartition> {
    if values.is_empty() {
        return Err(Error::EmptySeries);
    }
    if parts == 0 {
        return Err(Error::param("parts", "must be at least 1"));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let (edges, degenerate) = match kind {
        PartitionKind::Mass => mass_edges(values, parts),
        PartitionKind::Range => range_edges(values, parts),
    };
    Ok(Equipartition {
        kind,
        requested_parts: parts,
        edges,
        degenerate,
    })
}

fn mass_edges(values: &[f64], parts: usize) -> (Vec<f64>, bool) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // positions b where a cut between sorted[b-1] and sorted[b] separates values
    let boundaries: Vec<usize> = (1..n).filter(|&b| sorted[b - 1] < sorted[b]).collect();

    let mut degenerate = false;
    let mut chosen: Vec<usize> = Vec::with_capacity(parts.saturating_sub(1));
    for i in 1..parts {
        let target = (i * n) as f64 / parts as f64;
        let at = boundaries.partition_point(|&b| (b as f64) < target);
        let below = at.checked_sub(1).map(|j| boundaries[j]);
        let above = boundaries.get(at).copied();
        let pick = match (below, above) {
            (Some(lo), Some(hi)) => {
                if target - (lo as f64) < (hi as f64) - target {
                    Some(lo)
                } else {
                    Some(hi)
                }
            }
            (lo, hi) => hi.or(lo),
        };
        match pick {
            Some(b) => {
                if (b as f64 - target).abs() >= 1.0 {
                    degenerate = true;
                }
                if chosen.last() != Some(&b) {
                    chosen.push(b);
                } else {
                    degenerate = true;
                }
            }
            None => degenerate = true,
        }
    }
    let edges = chosen
        .into_iter()
        .map(|b| cut_between(sorted[b - 1], sorted[b]))
        .collect();
    (edges, degenerate)
}

fn range_edges(values: &[f64], parts: usize) -> (Vec<f64>, bool) {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if parts == 1 {
        return (Vec::new(), false);
    }
    if lo == hi {
        return (Vec::new(), true);
    }
    let width = (hi - lo) / parts as f64;
    let mut edges: Vec<f64> = (1..parts).map(|i| lo + width * i as f64).collect();
    let before = edges.len();
    edges.dedup();
    (edges.clone(), edges.len() != before)
}

/// Cell counts `A[i][j]`: rows follow the x partition, columns the y one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountMatrix {
    counts: Vec<Vec<u64>>,
    total: u64,
}

impl CountMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let cols = counts.first().map_or(0, Vec::len);
        if cols == 0 || counts.iter().any(|r| r.len() != cols) {
            return Err(Error::param("counts", "need a non-empty rectangular matrix"));
        }
        let total = counts.iter().flatten().sum();
        Ok(Self { counts, total })
    }

    pub fn rows(&self) -> usize {
        self.counts.len()
    }

    pub fn cols(&self) -> usize {
        self.counts[0].len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i][j]
    }

    pub fn as_rows(&self) -> &[Vec<u64>] {
        &self.counts
    }
}

pub fn build_count_matrix(
    xs: &[f64],
    ys: &[f64],
    row_edges: &[f64],
    col_edges: &[f64],
) -> Result<CountMatrix> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            original: xs.len(),
            randomized: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let mut counts = vec![vec![0u64; col_edges.len() + 1]; row_edges.len() + 1];
    for (&x, &y) in xs.iter().zip(ys) {
        counts[bin_index(row_edges, x)][bin_index(col_edges, y)] += 1;
    }
    CountMatrix::from_counts(counts)
}

/// Normalized counts `P = A / n` with marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    probs: Vec<Vec<f64>>,
    row_marginals: Vec<f64>,
    col_marginals: Vec<f64>,
}

impl ProbMatrix {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        let cols = probs.first().map_or(0, Vec::len);
        if cols == 0 || probs.iter().any(|r| r.len() != cols) {
            return Err(Error::param("probs", "need a non-empty rectangular matrix"));
        }
        if probs.iter().flatten().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::param("probs", "entries must be finite and >= 0"));
        }
        let row_marginals: Vec<f64> = probs.iter().map(|r| r.iter().sum()).collect();
        let col_marginals: Vec<f64> = (0..cols).map(|j| probs.iter().map(|r| r[j]).sum()).collect();
        let total: f64 = row_marginals.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::param("probs", format!("entries sum to {total}, not 1")));
        }
        Ok(Self {
            probs,
            row_marginals,
            col_marginals,
        })
    }

    pub fn from_counts(counts: &CountMatrix) -> Result<Self> {
        if counts.total() == 0 {
            return Err(Error::TooFewPoints { needed: 1, got: 0 });
        }
        let n = counts.total() as f64;
        Self::new(
            counts
                .as_rows()
                .iter()
                .map(|r| r.iter().map(|&a| a as f64 / n).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.probs.len()
    }

    pub fn cols(&self) -> usize {
        self.probs[0].len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i][j]
    }

    pub fn row_marginals(&self) -> &[f64] {
        &self.row_marginals
    }

    pub fn col_marginals(&self) -> &[f64] {
        &self.col_marginals
    }
}

/// Mutual information of the grid in bits.
pub fn discrete_mi(p: &ProbMatrix) -> f64 {
    let mut mi = 0.0;
    for (i, row) in p.probs.iter().enumerate() {
        for (j, &pij) in row.iter().enumerate() {
            if pij > 0.0 {
                mi += pij * (pij / (p.row_marginals[i] * p.col_marginals[j])).log2();
            }
        }
    }
    mi.max(0.0)
}

/// `I / log2(min(k, ℓ))`, defined as 0 for a single row or column.
pub fn normalized_mi(p: &ProbMatrix) -> f64 {
    let m = p.rows().min(p.cols());
    if m < 2 {
        return 0.0;
    }
    (discrete_mi(p) / (m as f64).log2()).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridScore {
    pub k: usize,
    pub l: usize,
    pub x_kind: PartitionKind,
    pub y_kind: PartitionKind,
    /// Actual matrix shape after tie deduplication.
    pub rows: usize,
    pub cols: usize,
    pub mi_bits: f64,
    pub nmi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MicResult {
    pub mic: f64,
    pub best_k: usize,
    pub best_l: usize,
    pub best_x_kind: PartitionKind,
    pub best_y_kind: PartitionKind,
    pub budget: usize,
    pub budget_exponent: f64,
    pub points: usize,
    pub grids: Vec<GridScore>,
}

/// `B(n) = max(4, floor(n^exponent))`.
pub fn grid_budget(n: usize, exponent: f64) -> usize {
    ((n as f64).powf(exponent).floor() as usize).max(4)
}

const KINDS: [PartitionKind; 2] = [PartitionKind::Mass, PartitionKind::Range];

/// Approximate MIC of the paired samples `(xs[t], ys[t])`.
///
/// `axis_cap` optionally bounds `k` and `ℓ` individually. Ties in the
/// maximum go to the smallest `k`, then `ℓ`, then mass before range.
pub fn mic(xs: &[f64], ys: &[f64], budget_exponent: f64, axis_cap: Option<usize>) -> Result<MicResult> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            original: xs.len(),
            randomized: ys.len(),
        });
    }
    let n = xs.len();
    if n < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: n });
    }
    if !(budget_exponent.is_finite() && budget_exponent > 0.0) {
        return Err(Error::param("budget_exponent", format!("{budget_exponent} must be positive")));
    }
    if axis_cap.is_some_and(|c| c < 2) {
        return Err(Error::param("axis_cap", "must be at least 2"));
    }
    let budget = grid_budget(n, budget_exponent);
    let max_parts = (budget / 2).min(axis_cap.unwrap_or(usize::MAX));

    let shapes: Vec<(usize, usize, PartitionKind, PartitionKind)> = (2..=max_parts)
        .flat_map(|k| {
            (2..=max_parts)
                .filter(move |l| k * l <= budget)
                .map(move |l| (k, l))
        })
        .flat_map(|(k, l)| {
            KINDS
                .iter()
                .flat_map(move |&xk| KINDS.iter().map(move |&yk| (k, l, xk, yk)))
        })
        .collect();

    // bin assignments per (parts, kind), computed once per axis
    type Binned = (usize, Vec<usize>);
    let assign = |values: &[f64]| -> Result<Vec<[Binned; 2]>> {
        (0..=max_parts)
            .map(|parts| {
                if parts < 2 {
                    return Ok(Default::default());
                }
                let bin = |kind| -> Result<Binned> {
                    let p = equipartition_edges(values, parts, kind)?;
                    Ok((p.bins(), values.iter().map(|&v| p.bin_of(v)).collect()))
                };
                Ok([bin(PartitionKind::Mass)?, bin(PartitionKind::Range)?])
            })
            .collect()
    };
    let x_bins = assign(xs)?;
    let y_bins = assign(ys)?;
    let kind_idx = |k: PartitionKind| (k == PartitionKind::Range) as usize;

    let grids: Vec<GridScore> = shapes
        .par_iter()
        .map(|&(k, l, xk, yk)| {
            let (rows, bx) = &x_bins[k][kind_idx(xk)];
            let (cols, by) = &y_bins[l][kind_idx(yk)];
            let mut counts = vec![vec![0u64; *cols]; *rows];
            for (&i, &j) in bx.iter().zip(by) {
                counts[i][j] += 1;
            }
            let p = ProbMatrix::from_counts(&CountMatrix::from_counts(counts)?)?;
            Ok(GridScore {
                k,
                l,
                x_kind: xk,
                y_kind: yk,
                rows: p.rows(),
                cols: p.cols(),
                mi_bits: discrete_mi(&p),
                nmi: normalized_mi(&p),
            })
        })
        .collect::<Result<_>>()?;

    // first strict maximum in enumeration order
    let best = grids
        .iter()
        .enumerate()
        .fold(0, |best, (i, g)| if g.nmi > grids[best].nmi { i } else { best });
    let best = grids[best].clone();
    Ok(MicResult {
        mic: best.nmi,
        best_k: best.k,
        best_l: best.l,
        best_x_kind: best.x_kind,
        best_y_kind: best.y_kind,
        budget,
        budget_exponent,
        points: n,
        grids,
    })
}
