//! Tabular ingestion, ordinal encoding, 1-D reduction and synthetic data.
//!
//! Everything downstream consumes a [`SymbolicSeries`]: a non-empty, ordered
//! run of finite values. Row order is never changed by anything in this
//! module, since the original and randomized series are compared index by
//! index.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const POWER_ITER_TOL: f64 = 1e-10;
const POWER_ITER_MAX: usize = 10_000;

/// An ordered sequence of comparable symbols.
///
/// Symbols are stored as finite `f64`; categorical data is mapped to ranks
/// by [`encode_ordinal`] before it gets here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SymbolicSeries {
    values: Vec<f64>,
}

impl SymbolicSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// One-column CSV with header `value`. Values use Rust's shortest
    /// round-trip float formatting, so reading the file back is bit-exact.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Csv {
            row: 0,
            message: e.to_string(),
        };
        w.write_record(["value"]).map_err(csv_err)?;
        for v in &self.values {
            w.write_record([v.to_string()]).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Csv {
            row: 0,
            message: e.to_string(),
        })?;
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for SymbolicSeries {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<SymbolicSeries> for Vec<f64> {
    fn from(s: SymbolicSeries) -> Self {
        s.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    /// Ordered tokens. Ranked numerically when every cell parses as a
    /// number, lexicographically otherwise.
    Ordinal,
    /// Unordered tokens, given a lexicographic order for ranking.
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    /// Raw cell text in row order.
    pub cells: Vec<String>,
}

impl Column {
    fn parse_numeric(&self) -> Result<Vec<f64>> {
        self.cells
            .iter()
            .enumerate()
            .map(|(row, cell)| parse_finite(cell).ok_or_else(|| self.not_numeric(row, cell)))
            .collect()
    }

    fn not_numeric(&self, row: usize, cell: &str) -> Error {
        Error::NotNumeric {
            column: self.name.clone(),
            // 1-based data row, header excluded
            row: row + 1,
            value: cell.to_string(),
        }
    }
}

/// A rectangular table of named columns sharing one row count.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<Column>,
    rows: usize,
}

impl Table {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.cells.len());
        if rows == 0 {
            return Err(Error::EmptyData("table".into()));
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
            if c.cells.len() != rows {
                return Err(Error::RaggedRow {
                    row: c.cells.len().min(rows) + 1,
                    expected: rows,
                    found: c.cells.len(),
                });
            }
        }
        Ok(Self { columns, rows })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Record count `m`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let csv_err = |e: csv::Error| Error::Csv {
            row: 0,
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))
            .map_err(csv_err)?;
        for r in 0..self.rows {
            w.write_record(self.columns.iter().map(|c| c.cells[r].as_str()))
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Csv {
            row: 0,
            message: e.to_string(),
        })?;
        Ok(())
    }
}

fn parse_finite(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Load a headed, comma-separated UTF-8 file.
///
/// Column kinds are inferred (numeric when every cell is a finite number,
/// categorical otherwise) unless overridden in `schema`.
pub fn load_csv(path: &Path, schema: &HashMap<String, ColumnKind>) -> Result<Table> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, &path.display().to_string(), schema)
}

/// [`load_csv`] over any reader; `label` names the source in errors.
pub fn read_csv<R: Read>(
    input: R,
    label: &str,
    schema: &HashMap<String, ColumnKind>,
) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);

    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.is_empty() {
        return Err(Error::EmptyData(label.to_string()));
    }
    let names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); names.len()];

    for (idx, record) in reader.records().enumerate() {
        // header is line 1
        let line = idx + 2;
        let record = record.map_err(|e| Error::Csv {
            row: line,
            message: e.to_string(),
        })?;
        if record.len() != names.len() {
            return Err(Error::RaggedRow {
                row: line,
                expected: names.len(),
                found: record.len(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            if cell.trim().is_empty() {
                return Err(Error::MissingCell {
                    row: line,
                    column: names[col].clone(),
                });
            }
            cells[col].push(cell.to_string());
        }
    }
    if cells[0].is_empty() {
        return Err(Error::EmptyData(label.to_string()));
    }

    let columns = names
        .into_iter()
        .zip(cells)
        .map(|(name, cells)| {
            let kind = schema.get(&name).copied().unwrap_or_else(|| {
                if cells.iter().all(|c| parse_finite(c).is_some()) {
                    ColumnKind::Numeric
                } else {
                    ColumnKind::Categorical
                }
            });
            Column { name, kind, cells }
        })
        .collect();
    Table::new(columns)
}

/// Map a column to comparable symbols, preserving row order.
///
/// Numeric columns pass through. Token columns map each token to its rank
/// among the distinct tokens.
pub fn encode_ordinal(column: &Column) -> Result<SymbolicSeries> {
    if column.cells.is_empty() {
        return Err(Error::EmptySeries);
    }
    let values = match column.kind {
        ColumnKind::Numeric => column.parse_numeric()?,
        ColumnKind::Ordinal => match column.parse_numeric() {
            Ok(nums) => dense_numeric_ranks(&nums),
            Err(_) => lexical_ranks(&column.cells),
        },
        ColumnKind::Categorical => lexical_ranks(&column.cells),
    };
    SymbolicSeries::new(values)
}

fn lexical_ranks(cells: &[String]) -> Vec<f64> {
    let distinct: BTreeSet<&str> = cells.iter().map(String::as_str).collect();
    let rank: HashMap<&str, usize> = distinct.into_iter().enumerate().map(|(i, t)| (t, i)).collect();
    cells.iter().map(|c| rank[c.as_str()] as f64).collect()
}

fn dense_numeric_ranks(values: &[f64]) -> Vec<f64> {
    let mut distinct = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    values
        .iter()
        .map(|v| distinct.partition_point(|d| d < v) as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReduceMethod {
    FirstPrincipalComponent,
    Passthrough(String),
}

/// Reduce a table to one value per row.
///
/// The principal-component route centers every (encoded) column, finds
/// the dominant eigenvector of the sample covariance by power iteration,
/// and projects onto it. The sign is fixed so the largest-magnitude
/// loading is positive.
pub fn reduce_to_1d(table: &Table, method: &ReduceMethod) -> Result<SymbolicSeries> {
    match method {
        ReduceMethod::Passthrough(name) => encode_ordinal(table.column(name)?),
        ReduceMethod::FirstPrincipalComponent => {
            let m = table.rows();
            if m < 2 {
                return Err(Error::TooFewPoints { needed: 2, got: m });
            }
            let cols: Vec<Vec<f64>> = table
                .columns()
                .iter()
                .map(|c| encode_ordinal(c).map(SymbolicSeries::into_values))
                .collect::<Result<_>>()?;
            let loadings = principal_axis(&cols)?;
            let means: Vec<f64> = cols.iter().map(|c| mean(c)).collect();
            let projected = (0..m)
                .map(|r| {
                    cols.iter()
                        .zip(&means)
                        .zip(&loadings)
                        .map(|((c, mu), w)| (c[r] - mu) * w)
                        .sum()
                })
                .collect();
            SymbolicSeries::new(projected)
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Dominant unit eigenvector of the covariance of `cols`.
fn principal_axis(cols: &[Vec<f64>]) -> Result<Vec<f64>> {
    let p = cols.len();
    let m = cols[0].len();
    let centered: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| {
            let mu = mean(c);
            c.iter().map(|x| x - mu).collect()
        })
        .collect();
    let mut cov = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in i..p {
            let s: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let v = s / (m - 1) as f64;
            cov[i][j] = v;
            cov[j][i] = v;
        }
    }
    let trace: f64 = (0..p).map(|i| cov[i][i]).sum();
    if trace <= 0.0 {
        return Err(Error::ZeroVariance(
            "zero-variance data: principal-component projection is undefined".into(),
        ));
    }

    // Slightly uneven start so it is unlikely to be orthogonal to the answer.
    let mut v: Vec<f64> = (0..p).map(|i| 1.0 + 0.01 * i as f64).collect();
    normalize(&mut v);
    for _ in 0..POWER_ITER_MAX {
        let mut w: Vec<f64> = cov
            .iter()
            .map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum())
            .collect();
        if normalize(&mut w) == 0.0 {
            return Err(Error::ZeroVariance(
                "power iteration collapsed to the zero vector".into(),
            ));
        }
        let delta = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = w;
        if delta < POWER_ITER_TOL {
            break;
        }
    }

    let lead = v
        .iter()
        .enumerate()
        .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
    if v[lead] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(v)
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// `count` integers drawn uniformly from `[lo, hi]`, reproducible per seed.
pub fn synth_random_ints(count: usize, lo: i64, hi: i64, seed: u64) -> Result<SymbolicSeries> {
    if count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    if lo >= hi {
        return Err(Error::param("bounds", format!("need lo < hi, got [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..count).map(|_| rng.random_range(lo..=hi) as f64).collect();
    SymbolicSeries::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_from(text: &str) -> Result<Table> {
        read_csv(text.as_bytes(), "inline", &HashMap::new())
    }

    fn token_column(tokens: &[&str]) -> Column {
        Column {
            name: "t".into(),
            kind: ColumnKind::Categorical,
            cells: tokens.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn minimal_numeric_file() {
        let t = table_from("s\n1\n2\n3\n").unwrap();
        assert_eq!(t.rows(), 3);
        assert_eq!(t.columns().len(), 1);
        assert_eq!(t.columns()[0].kind, ColumnKind::Numeric);
    }

    #[test]
    fn header_only_is_empty_data() {
        let err = table_from("s\n").unwrap_err();
        assert!(matches!(err, Error::EmptyData(_)));
        assert!(err.to_string().contains("empty data"));
    }

    #[test]
    fn ragged_row_reports_line() {
        let err = table_from("a,b\n1,2\n3\n").unwrap_err();
        match err {
            Error::RaggedRow { row, expected, found } => {
                assert_eq!((row, expected, found), (3, 2, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_cell_is_an_error() {
        let err = table_from("a,b\n1,\n").unwrap_err();
        assert!(matches!(err, Error::MissingCell { row: 2, .. }));
    }

    #[test]
    fn quoted_fields_and_kind_inference() {
        let t = table_from("name,score\n\"b, c\",1.5\na,2\n").unwrap();
        assert_eq!(t.column("name").unwrap().kind, ColumnKind::Categorical);
        assert_eq!(t.column("name").unwrap().cells[0], "b, c");
        assert_eq!(t.column("score").unwrap().kind, ColumnKind::Numeric);
    }

    #[test]
    fn schema_override_forces_numeric_error() {
        let schema = HashMap::from([("x".to_string(), ColumnKind::Numeric)]);
        let t = read_csv("x\n1\nfoo\n".as_bytes(), "inline", &schema).unwrap();
        let err = encode_ordinal(t.column("x").unwrap()).unwrap_err();
        assert!(matches!(err, Error::NotNumeric { row: 2, .. }));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_csv(Path::new("/nonexistent/leakgauge.csv"), &HashMap::new()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn lexical_ranks_small() {
        let s = encode_ordinal(&token_column(&["b", "a", "b"])).unwrap();
        assert_eq!(s.values(), &[1.0, 0.0, 1.0]);
        let s = encode_ordinal(&token_column(&["z", "a", "m", "a"])).unwrap();
        assert_eq!(s.values(), &[2.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn numeric_passthrough() {
        let col = Column {
            name: "x".into(),
            kind: ColumnKind::Numeric,
            cells: vec!["5.0".into(), "2.0".into(), "9.0".into()],
        };
        assert_eq!(encode_ordinal(&col).unwrap().values(), &[5.0, 2.0, 9.0]);
    }

    #[test]
    fn ordinal_numeric_cells_rank_by_value() {
        let col = Column {
            name: "x".into(),
            kind: ColumnKind::Ordinal,
            cells: vec!["10".into(), "9".into(), "10".into(), "1".into()],
        };
        assert_eq!(encode_ordinal(&col).unwrap().values(), &[2.0, 1.0, 2.0, 0.0]);
    }

    #[test]
    fn passthrough_reduction_is_identity() {
        let t = table_from("s\n4\n1\n3\n").unwrap();
        let s = reduce_to_1d(&t, &ReduceMethod::Passthrough("s".into())).unwrap();
        assert_eq!(s.values(), &[4.0, 1.0, 3.0]);
    }

    #[test]
    fn pca_on_identical_columns() {
        // cov = var * [[1,1],[1,1]], axis (1,1)/sqrt2, projection sqrt2 * (x - 2.5)
        let t = table_from("x,y\n1,1\n2,2\n3,3\n4,4\n").unwrap();
        let s = reduce_to_1d(&t, &ReduceMethod::FirstPrincipalComponent).unwrap();
        let expected = [-1.5, -0.5, 0.5, 1.5].map(|c: f64| c * 2f64.sqrt());
        for (a, b) in s.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn pca_sign_follows_largest_loading() {
        // y = -3x: dominant loading is on y, must come out positive
        let t = table_from("x,y\n1,-3\n2,-6\n3,-9\n").unwrap();
        let s = reduce_to_1d(&t, &ReduceMethod::FirstPrincipalComponent).unwrap();
        assert!(s.values()[0] > 0.0 && s.values()[2] < 0.0);
    }

    #[test]
    fn pca_on_constant_table_fails() {
        let t = table_from("x,y\n1,2\n1,2\n1,2\n").unwrap();
        let err = reduce_to_1d(&t, &ReduceMethod::FirstPrincipalComponent).unwrap_err();
        assert!(matches!(err, Error::ZeroVariance(_)));
    }

    #[test]
    fn pca_is_deterministic() {
        let t = table_from("x,y,z\n1,5,a\n2,3,b\n7,1,a\n4,4,c\n").unwrap();
        let a = reduce_to_1d(&t, &ReduceMethod::FirstPrincipalComponent).unwrap();
        let b = reduce_to_1d(&t, &ReduceMethod::FirstPrincipalComponent).unwrap();
        let bits = |s: &SymbolicSeries| s.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn synth_bounds_and_determinism() {
        let s = synth_random_ints(10_000, 1, 100, 42).unwrap();
        assert_eq!(s.len(), 10_000);
        assert!(s.values().iter().all(|v| (1.0..=100.0).contains(v)));
        assert_eq!(s, synth_random_ints(10_000, 1, 100, 42).unwrap());

        let one = synth_random_ints(1, 5, 6, 3).unwrap();
        assert!(one.values()[0] == 5.0 || one.values()[0] == 6.0);

        assert!(synth_random_ints(5, 6, 6, 0).is_err());
        assert!(synth_random_ints(0, 1, 6, 0).is_err());
    }

    #[test]
    fn series_rejects_empty_and_nan() {
        assert!(matches!(SymbolicSeries::new(vec![]), Err(Error::EmptySeries)));
        assert!(matches!(SymbolicSeries::new(vec![1.0, f64::NAN]), Err(Error::NonFinite(1))));
    }

    #[test]
    fn series_csv_has_value_header() {
        let s = SymbolicSeries::new(vec![1.0, 0.1, -2.5]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "value\n1\n0.1\n-2.5\n");
    }
}
