//! Compressed sparse row matrices and Matrix Market I/O.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// CSR matrix of non-negative reals. Stored values are never zero and
/// column indices are strictly increasing within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from (row, col, value) triplets. Duplicates are summed,
    /// zeros dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, _) in &entries {
            if r >= n_rows || c >= n_cols {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({r},{c}) out of bounds for {n_rows}x{n_cols}"
                )));
            }
        }
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut i = 0;
        while i < entries.len() {
            let (r, c, mut v) = entries[i];
            i += 1;
            while i < entries.len() && entries[i].0 == r && entries[i].1 == c {
                v += entries[i].2;
                i += 1;
            }
            if v != 0.0 {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
            }
        }
        for r in 0..n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut triplets = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::InvalidMatrix("ragged dense input".into()));
            }
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((r, c, v));
                }
            }
        }
        Self::from_triplets(n_rows, n_cols, triplets)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let lo = self.row_offsets[r];
        let hi = self.row_offsets[r + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[usize], &[f64])> {
        (0..self.n_rows).map(move |r| self.row(r))
    }

    /// Fraction of zero entries.
    pub fn sparsity(&self) -> Result<f64> {
        let total = self.n_rows * self.n_cols;
        if total == 0 {
            return Err(Error::InvalidMatrix("sparsity of zero-size matrix".into()));
        }
        Ok(1.0 - self.nnz() as f64 / total as f64)
    }

    /// Check the CSR structural invariants.
    pub fn validate(&self) -> Result<()> {
        if self.row_offsets.len() != self.n_rows + 1 {
            return Err(Error::InvalidMatrix("row_offsets length".into()));
        }
        if self.row_offsets[0] != 0 || *self.row_offsets.last().unwrap() != self.values.len() {
            return Err(Error::InvalidMatrix("row_offsets endpoints".into()));
        }
        for w in self.row_offsets.windows(2) {
            if w[1] < w[0] {
                return Err(Error::InvalidMatrix("row_offsets not monotone".into()));
            }
        }
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for w in cols.windows(2) {
                if w[1] <= w[0] {
                    return Err(Error::InvalidMatrix(format!(
                        "columns not strictly increasing in row {r}"
                    )));
                }
            }
            if cols.iter().any(|&c| c >= self.n_cols) {
                return Err(Error::InvalidMatrix(format!("column overflow in row {r}")));
            }
            if vals.iter().any(|&v| v == 0.0 || !v.is_finite()) {
                return Err(Error::InvalidMatrix(format!(
                    "explicit zero or non-finite value in row {r}"
                )));
            }
        }
        Ok(())
    }

    pub fn row_l2_norms(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|r| self.row(r).1.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    /// y = A^T x
    pub fn rmatvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_rows);
        let mut y = vec![0.0; self.n_cols];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let xr = x[r];
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * xr;
            }
        }
        y
    }

    /// Multiply each column by a weight; zero-weight columns vanish.
    pub fn scale_columns(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.n_cols {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} columns",
                weights.len(),
                self.n_cols
            )));
        }
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let w = v * weights[c];
                if w != 0.0 {
                    triplets.push((r, c, w));
                }
            }
        }
        Self::from_triplets(self.n_rows, self.n_cols, triplets)
    }

    /// New matrix from the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut triplets = Vec::new();
        for (new_r, &r) in rows.iter().enumerate() {
            if r >= self.n_rows {
                return Err(Error::InvalidMatrix(format!("row {r} out of range")));
            }
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                triplets.push((new_r, c, v));
            }
        }
        Self::from_triplets(rows.len(), self.n_cols, triplets)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[r][c] = v;
            }
        }
        out
    }

    /// Per-column sums, sums of squares and document frequencies,
    /// computed in one pass. Used by the weighting schemes.
    pub fn column_stats(&self) -> ColumnStats {
        let mut sum = vec![0.0; self.n_cols];
        let mut sum_sq = vec![0.0; self.n_cols];
        let mut doc_freq = vec![0usize; self.n_cols];
        for (cols, vals) in self.rows() {
            for (&c, &v) in cols.iter().zip(vals) {
                sum[c] += v;
                sum_sq[c] += v * v;
                doc_freq[c] += 1;
            }
        }
        ColumnStats {
            sum,
            sum_sq,
            doc_freq,
        }
    }

    pub fn write_matrix_market<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {}", r + 1, c + 1, v)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_matrix_market(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_matrix_market(f)
    }

    pub fn read_matrix_market<R: BufRead>(r: R) -> Result<Self> {
        parse_matrix_market_lines(r.lines().enumerate().map(|(i, l)| (i + 1, l)))
    }

    pub fn load_matrix_market(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_matrix_market(std::io::BufReader::new(f))
    }

    /// Parse Matrix Market coordinate text from a byte slice. Entry
    /// point for untrusted input; never panics on malformed data.
    pub fn parse_matrix_market(data: &[u8]) -> Result<Self> {
        Self::read_matrix_market(std::io::Cursor::new(data))
    }
}

pub struct ColumnStats {
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
    pub doc_freq: Vec<usize>,
}

fn parse_matrix_market_lines(
    lines: impl Iterator<Item = (usize, std::io::Result<String>)>,
) -> Result<SparseMatrix> {
    let err = |line, msg: &str| Error::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut lines = lines.peekable();

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty file"))
        .and_then(|(n, l)| Ok((n, l?)))?;
    let header_fields: Vec<&str> = header.split_whitespace().collect();
    if header_fields.len() < 4
        || !header_fields[0].eq_ignore_ascii_case("%%MatrixMarket")
        || !header_fields[1].eq_ignore_ascii_case("matrix")
        || !header_fields[2].eq_ignore_ascii_case("coordinate")
        || !(header_fields[3].eq_ignore_ascii_case("real")
            || header_fields[3].eq_ignore_ascii_case("integer"))
    {
        return Err(err(line_no, "not a MatrixMarket coordinate real header"));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (line_no, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(err(line_no, "size line must have 3 fields"));
                }
                let n: usize = fields[0].parse().map_err(|_| err(line_no, "bad n_rows"))?;
                let m: usize = fields[1].parse().map_err(|_| err(line_no, "bad n_cols"))?;
                let nnz: usize = fields[2].parse().map_err(|_| err(line_no, "bad nnz"))?;
                size = Some((n, m, nnz));
                triplets.reserve(nnz.min(1 << 24));
            }
            Some((n, m, _)) => {
                if fields.len() != 3 {
                    return Err(err(line_no, "entry must have 3 fields"));
                }
                let r: usize = fields[0].parse().map_err(|_| err(line_no, "bad row"))?;
                let c: usize = fields[1].parse().map_err(|_| err(line_no, "bad col"))?;
                let v: f64 = fields[2].parse().map_err(|_| err(line_no, "bad value"))?;
                if r == 0 || c == 0 || r > n || c > m {
                    return Err(err(line_no, "index out of range (1-based)"));
                }
                if !v.is_finite() {
                    return Err(err(line_no, "non-finite value"));
                }
                triplets.push((r - 1, c - 1, v));
            }
        }
    }
    let (n, m, nnz) = size.ok_or_else(|| err(0, "missing size line"))?;
    if triplets.len() != nnz {
        return Err(err(
            0,
            &format!("declared {} entries, found {}", nnz, triplets.len()),
        ));
    }
    SparseMatrix::from_triplets(n, m, triplets)
}
