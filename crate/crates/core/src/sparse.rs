//! CSR sparse matrices, pattern graphs, and the relaxation kernels shared by
//! the setup and solve phases.
//!
//! Summation orders are fixed (row-major, ascending column) so repeated runs
//! produce bitwise-identical results.

use std::io::{BufRead, Write};

use crate::coarsening::Partition;
use crate::error::{Error, Result};

/// Compressed sparse row matrix. Column indices are strictly increasing within
/// each row and all stored values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::InvalidStructure(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if row_offsets[0] != 0 || *row_offsets.last().unwrap() != col_indices.len() {
            return Err(Error::InvalidStructure(
                "row_offsets must start at 0 and end at nnz".into(),
            ));
        }
        if col_indices.len() != values.len() {
            return Err(Error::InvalidStructure(
                "col_indices and values differ in length".into(),
            ));
        }
        for i in 0..n_rows {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            if lo > hi {
                return Err(Error::InvalidStructure("row_offsets not monotone".into()));
            }
            for k in lo..hi {
                if col_indices[k] >= n_cols {
                    return Err(Error::InvalidStructure(format!(
                        "column index {} out of bounds in row {i}",
                        col_indices[k]
                    )));
                }
                if k > lo && col_indices[k] <= col_indices[k - 1] {
                    return Err(Error::InvalidStructure(format!(
                        "columns not strictly increasing in row {i}"
                    )));
                }
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidStructure("non-finite value".into()));
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds from (row, col, value) triplets; duplicate positions are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut t: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(i, j, v) in &t {
            if i >= n_rows || j >= n_cols {
                return Err(Error::InvalidStructure(format!(
                    "triplet ({i}, {j}) out of bounds for {n_rows}x{n_cols}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidStructure("non-finite value".into()));
            }
        }
        t.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(t.len());
        let mut values = Vec::with_capacity(t.len());
        let mut last = None;
        for &(i, j, v) in &t {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(j);
                values.push(v);
                row_offsets[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Self::new(n_rows, n_cols, row_offsets, col_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Converts a dense row-major matrix, dropping exact zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut triplets = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n_cols {
                return Err(Error::InvalidStructure("ragged dense input".into()));
            }
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n_rows, n_cols, &triplets)
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

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Diagonal entries; structurally missing entries come back as 0.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch(format!(
                "spmv: vector length {} vs {} columns",
                x.len(),
                self.n_cols
            )));
        }
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without allocation; lengths must already match.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut next = counts.clone();
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let k = next[j];
                col_indices[k] = i;
                values[k] = v;
                next[j] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets: counts,
            col_indices,
            values,
        }
    }

    /// Sparse product `self * other` with per-row dense accumulation.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.n_cols != other.n_rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul: {}x{} by {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let mut scratch = vec![0.0f64; other.n_cols];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; other.n_cols];
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.n_rows {
            touched.clear();
            let (cols, vals) = self.row(i);
            for (&k, &a) in cols.iter().zip(vals) {
                let (bcols, bvals) = other.row(k);
                for (&j, &b) in bcols.iter().zip(bvals) {
                    if !mark[j] {
                        mark[j] = true;
                        touched.push(j);
                        scratch[j] = 0.0;
                    }
                    scratch[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                col_indices.push(j);
                values.push(scratch[j]);
                mark[j] = false;
            }
            row_offsets.push(col_indices.len());
        }
        SparseMatrix::new(self.n_rows, other.n_cols, row_offsets, col_indices, values)
    }

    /// `self + beta * other`, patterns merged.
    pub fn add_scaled(&self, other: &SparseMatrix, beta: f64) -> Result<SparseMatrix> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::DimensionMismatch("add_scaled: shape mismatch".into()));
        }
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.n_rows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let ja = ca.get(p).copied().unwrap_or(usize::MAX);
                let jb = cb.get(q).copied().unwrap_or(usize::MAX);
                if ja < jb {
                    col_indices.push(ja);
                    values.push(va[p]);
                    p += 1;
                } else if jb < ja {
                    col_indices.push(jb);
                    values.push(beta * vb[q]);
                    q += 1;
                } else {
                    col_indices.push(ja);
                    values.push(va[p] + beta * vb[q]);
                    p += 1;
                    q += 1;
                }
            }
            row_offsets.push(col_indices.len());
        }
        SparseMatrix::new(self.n_rows, self.n_cols, row_offsets, col_indices, values)
    }

    pub fn scaled(mut self, s: f64) -> SparseMatrix {
        for v in &mut self.values {
            *v *= s;
        }
        self
    }

    /// Max |a_ij - a_ji| relative to max |a_ij| stays below `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        let t = self.transpose();
        let scale = self
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        if self.row_offsets != t.row_offsets || self.col_indices != t.col_indices {
            // patterns differ: compare entrywise through lookups
            for i in 0..self.n_rows {
                let (cols, vals) = self.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    if (v - t.get(i, j)).abs() > tol * scale {
                        return false;
                    }
                }
                let (tcols, tvals) = t.row(i);
                for (&j, &v) in tcols.iter().zip(tvals) {
                    if (v - self.get(i, j)).abs() > tol * scale {
                        return false;
                    }
                }
            }
            return true;
        }
        self.values
            .iter()
            .zip(&t.values)
            .all(|(a, b)| (a - b).abs() <= tol * scale)
    }

    /// `(A + A^T) / 2`; keeps Galerkin products exactly symmetric.
    pub fn symmetrized(&self) -> Result<SparseMatrix> {
        Ok(self.add_scaled(&self.transpose(), 1.0)?.scaled(0.5))
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Writes coordinate-format Matrix Market with 17 significant digits, so a
    /// read-back reproduces every value bitwise.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }

    pub fn read_matrix_market<R: BufRead>(r: R) -> Result<SparseMatrix> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::MatrixMarket("empty input".into()))??;
        let fields: Vec<String> = header.split_whitespace().map(|s| s.to_lowercase()).collect();
        if fields.len() < 5
            || fields[0] != "%%matrixmarket"
            || fields[1] != "matrix"
            || fields[2] != "coordinate"
            || (fields[3] != "real" && fields[3] != "integer")
        {
            return Err(Error::MatrixMarket(format!("unsupported header: {header}")));
        }
        let symmetric = match fields[4].as_str() {
            "general" => false,
            "symmetric" => true,
            other => return Err(Error::MatrixMarket(format!("unsupported symmetry: {other}"))),
        };
        let mut size_line = None;
        for line in lines.by_ref() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            size_line = Some(trimmed.to_string());
            break;
        }
        let size_line = size_line.ok_or_else(|| Error::MatrixMarket("missing size line".into()))?;
        let dims: Vec<usize> = size_line
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| Error::MatrixMarket(e.to_string())))
            .collect::<Result<_>>()?;
        if dims.len() != 3 {
            return Err(Error::MatrixMarket(format!("bad size line: {size_line}")));
        }
        let (n_rows, n_cols, nnz) = (dims[0], dims[1], dims[2]);
        let mut triplets = Vec::with_capacity(nnz);
        for line in lines {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            let toks: Vec<&str> = trimmed.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::MatrixMarket(format!("bad entry line: {trimmed}")));
            }
            let i: usize = toks[0].parse().map_err(|_| Error::MatrixMarket(format!("bad row index: {}", toks[0])))?;
            let j: usize = toks[1].parse().map_err(|_| Error::MatrixMarket(format!("bad col index: {}", toks[1])))?;
            let v: f64 = toks[2].parse().map_err(|_| Error::MatrixMarket(format!("bad value: {}", toks[2])))?;
            if i == 0 || j == 0 || i > n_rows || j > n_cols {
                return Err(Error::MatrixMarket(format!("index out of range: {trimmed}")));
            }
            triplets.push((i - 1, j - 1, v));
            if symmetric && i != j {
                triplets.push((j - 1, i - 1, v));
            }
        }
        let expected = triplets.len();
        let m = SparseMatrix::from_triplets(n_rows, n_cols, &triplets)?;
        if m.nnz() != expected {
            return Err(Error::MatrixMarket("duplicate entries in input".into()));
        }
        Ok(m)
    }
}

/// Undirected-in-storage adjacency: per-vertex sorted neighbor lists without
/// self loops.
#[derive(Debug, Clone)]
pub struct AdjacencyGraph {
    neighbors: Vec<Vec<usize>>,
}

impl AdjacencyGraph {
    pub fn n_vertices(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }
}

/// Pattern of `|A|^d` with the diagonal removed, computed by `d - 1` boolean
/// self-products of the stored pattern of `A`.
pub fn graph_power(a: &SparseMatrix, d: usize) -> Result<AdjacencyGraph> {
    if d < 1 {
        return Err(Error::InvalidParameter(format!("graph power depth {d} must be >= 1")));
    }
    if a.n_rows() != a.n_cols() {
        return Err(Error::DimensionMismatch("graph power needs a square matrix".into()));
    }
    let n = a.n_rows();
    let base: Vec<Vec<usize>> = (0..n).map(|i| a.row(i).0.to_vec()).collect();
    let mut current = base.clone();
    let mut mark = vec![false; n];
    for _ in 1..d {
        let mut next: Vec<Vec<usize>> = Vec::with_capacity(n);
        for row in &current {
            let mut out: Vec<usize> = Vec::new();
            for &k in row {
                for &j in &base[k] {
                    if !mark[j] {
                        mark[j] = true;
                        out.push(j);
                    }
                }
            }
            for &j in &out {
                mark[j] = false;
            }
            out.sort_unstable();
            next.push(out);
        }
        current = next;
    }
    for (i, row) in current.iter_mut().enumerate() {
        row.retain(|&j| j != i);
    }
    Ok(AdjacencyGraph { neighbors: current })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDirection {
    Forward,
    Backward,
}

/// One Gauss-Seidel sweep on `A x = b` in place.
pub fn gauss_seidel_sweep(
    a: &SparseMatrix,
    x: &mut [f64],
    b: &[f64],
    direction: SweepDirection,
) -> Result<()> {
    let n = a.n_rows();
    if a.n_cols() != n || x.len() != n || b.len() != n {
        return Err(Error::DimensionMismatch("gauss_seidel_sweep".into()));
    }
    let order: Box<dyn Iterator<Item = usize>> = match direction {
        SweepDirection::Forward => Box::new(0..n),
        SweepDirection::Backward => Box::new((0..n).rev()),
    };
    for i in order {
        let (cols, vals) = a.row(i);
        let mut diag = 0.0;
        let mut acc = b[i];
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i {
                diag = v;
            } else {
                acc -= v * x[j];
            }
        }
        if diag == 0.0 {
            return Err(Error::ZeroDiagonal(i));
        }
        x[i] = acc / diag;
    }
    Ok(())
}

/// One compatible-relaxation sweep `u_f <- E_f u_f`: Gauss-Seidel on the
/// homogeneous F-submatrix system, C-entries untouched and excluded from the
/// stencil sums.
pub fn f_relaxation_sweep(a: &SparseMatrix, partition: &Partition, u: &mut [f64]) -> Result<()> {
    let n = a.n_rows();
    if a.n_cols() != n || u.len() != n || partition.len() != n {
        return Err(Error::DimensionMismatch("f_relaxation_sweep".into()));
    }
    for &i in partition.f() {
        let (cols, vals) = a.row(i);
        let mut diag = 0.0;
        let mut acc = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i {
                diag = v;
            } else if !partition.is_coarse(j) {
                acc -= v * u[j];
            }
        }
        if diag == 0.0 {
            return Err(Error::ZeroDiagonal(i));
        }
        u[i] = acc / diag;
    }
    Ok(())
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}
