//! Compressed sparse row matrices and the Jacobi kernels built on them.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// Largest dimension accepted by the dense oracles.
pub const DENSE_LIMIT: usize = 2000;

/// Square CSR matrix with a structurally present, nonzero diagonal and
/// symmetric values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
    diag_pos: Vec<usize>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets.
    ///
    /// Duplicate coordinates are summed. Every row needs a nonzero diagonal
    /// and the values must be symmetric to 1e-12 relative.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= n || j >= n {
                return Err(Error::OutOfBounds { row: i, col: j, n });
            }
        }
        let mut sorted = triplets.to_vec();
        sorted.sort_by_key(|t| (t.0, t.1));

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut vals: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *vals.last_mut().expect("duplicate follows an entry") += v;
            } else {
                col_idx.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }

        let mut diag_pos = Vec::with_capacity(n);
        for i in 0..n {
            let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            match row.binary_search(&i) {
                Ok(k) if vals[row_ptr[i] + k] != 0.0 => diag_pos.push(row_ptr[i] + k),
                _ => return Err(Error::ZeroDiagonal(i)),
            }
        }

        let a = Self {
            n,
            row_ptr,
            col_idx,
            vals,
            diag_pos,
        };
        a.check_symmetric()?;
        Ok(a)
    }

    fn check_symmetric(&self) -> Result<()> {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j <= i {
                    continue;
                }
                let w = self.get(j, i);
                if (v - w).abs() > 1e-12 * v.abs().max(w.abs()) {
                    return Err(Error::Asymmetric {
                        row: i,
                        col: j,
                        upper: v,
                        lower: w,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    /// Entries `(col, value)` of row `i`, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    /// Stored value at `(i, j)`, zero when structurally absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.diag_pos.iter().map(|&p| self.vals[p]).collect()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without dimension checks beyond debug assertions.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    /// `b - A x` into `r`.
    pub fn residual_into(&self, x: &[f64], b: &[f64], r: &mut [f64]) {
        self.matvec_into(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
    }

    /// One weighted Jacobi sweep, `x' = (1 - w) x + w D^-1 (b - (L + U) x)`.
    pub fn weighted_jacobi_sweep(&self, x: &[f64], b: &[f64], omega: f64) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        self.check_len(b.len())?;
        let out = (0..self.n)
            .map(|i| {
                let mut off = 0.0;
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    let j = self.col_idx[k];
                    if j != i {
                        off += self.vals[k] * x[j];
                    }
                }
                let d = self.vals[self.diag_pos[i]];
                (1.0 - omega) * x[i] + omega * (b[i] - off) / d
            })
            .collect();
        Ok(out)
    }

    /// Dense copy, for the small-instance oracles.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.n > DENSE_LIMIT {
            return Err(Error::TooLarge {
                n: self.n,
                max: DENSE_LIMIT,
            });
        }
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        Ok(d)
    }

    /// Dense Jacobi iteration matrix `B_J = -D^-1 (L + U)`.
    pub fn dense_jacobi_matrix(&self) -> Result<DMatrix<f64>> {
        let mut b = self.to_dense()?;
        let d = self.diagonal();
        for i in 0..self.n {
            for j in 0..self.n {
                b[(i, j)] = if i == j { 0.0 } else { -b[(i, j)] / d[i] };
            }
        }
        Ok(b)
    }

    /// Writes the matrix in Matrix Market coordinate format, lower triangle
    /// with the `symmetric` qualifier.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        let lower: Vec<(usize, usize, f64)> = (0..self.n)
            .flat_map(|i| self.row(i).filter(move |&(j, _)| j <= i).map(move |(j, v)| (i, j, v)))
            .collect();
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.n, self.n, lower.len())?;
        for (i, j, v) in lower {
            writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
        }
        Ok(())
    }

    /// Reads a real coordinate Matrix Market file (`general` or `symmetric`).
    pub fn read_matrix_market<R: BufRead>(r: R) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse {
            path: "<matrix market>".into(),
            line,
            msg: msg.to_string(),
        };
        let mut lines = r.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty input"))?;
        let header = header?.to_ascii_lowercase();
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
            return Err(bad(1, "missing %%MatrixMarket matrix header"));
        }
        if fields[2] != "coordinate" || fields[3] != "real" {
            return Err(bad(1, "only real coordinate matrices are supported"));
        }
        let symmetric = match fields[4] {
            "symmetric" => true,
            "general" => false,
            _ => return Err(bad(1, "symmetry must be general or symmetric")),
        };

        let mut size: Option<(usize, usize)> = None;
        let mut triplets = Vec::new();
        for (lineno, line) in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            let parts: Vec<&str> = t.split_whitespace().collect();
            match size {
                None => {
                    if parts.len() != 3 {
                        return Err(bad(lineno + 1, "expected `rows cols nnz`"));
                    }
                    let p = |s: &str| s.parse::<usize>().map_err(|_| bad(lineno + 1, "bad size"));
                    let (rows, cols, nnz) = (p(parts[0])?, p(parts[1])?, p(parts[2])?);
                    if rows != cols {
                        return Err(bad(lineno + 1, "matrix is not square"));
                    }
                    triplets.reserve(nnz * if symmetric { 2 } else { 1 });
                    size = Some((rows, nnz));
                }
                Some(_) => {
                    if parts.len() != 3 {
                        return Err(bad(lineno + 1, "expected `row col value`"));
                    }
                    let i: usize = parts[0].parse().map_err(|_| bad(lineno + 1, "bad row"))?;
                    let j: usize = parts[1].parse().map_err(|_| bad(lineno + 1, "bad col"))?;
                    let v: f64 = parts[2].parse().map_err(|_| bad(lineno + 1, "bad value"))?;
                    if i == 0 || j == 0 {
                        return Err(bad(lineno + 1, "indices are 1-based"));
                    }
                    triplets.push((i - 1, j - 1, v));
                    if symmetric && i != j {
                        triplets.push((j - 1, i - 1, v));
                    }
                }
            }
        }
        let (n, _) = size.ok_or_else(|| bad(1, "missing size line"))?;
        Self::from_triplets(n, &triplets)
    }
}

/// Euclidean norm.
pub fn norm_l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `||b - A x||_2`.
pub fn residual_l2(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Result<f64> {
    a.check_len(x.len())?;
    a.check_len(b.len())?;
    let mut r = vec![0.0; a.n()];
    a.residual_into(x, b, &mut r);
    Ok(norm_l2(&r))
}

/// `||b - A x||_2 / ||b - A x0||_2`.
pub fn relative_residual_l2(a: &SparseMatrix, x: &[f64], b: &[f64], x0: &[f64]) -> Result<f64> {
    let r0 = residual_l2(a, x0, b)?;
    if r0 == 0.0 {
        return Err(Error::ZeroInitialResidual);
    }
    Ok(residual_l2(a, x, b)? / r0)
}

/// `||x_new - x_old||_inf`.
pub fn diff_inf(x_new: &[f64], x_old: &[f64]) -> Result<f64> {
    if x_new.len() != x_old.len() {
        return Err(Error::Dimension {
            expected: x_old.len(),
            got: x_new.len(),
        });
    }
    Ok(x_new
        .iter()
        .zip(x_old)
        .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

/// Eigenvalues of `B_J = -D^-1 (L + U)`, ascending.
///
/// With a positive diagonal the similar symmetric matrix
/// `D^-1/2 (-(L + U)) D^-1/2` is diagonalised; otherwise a general real
/// Schur decomposition is used and the spectrum must come out real.
pub fn dense_jacobi_eigenvalues(a: &SparseMatrix) -> Result<Vec<f64>> {
    if a.n() > DENSE_LIMIT {
        return Err(Error::TooLarge {
            n: a.n(),
            max: DENSE_LIMIT,
        });
    }
    let d = a.diagonal();
    let mut eigs: Vec<f64> = if d.iter().all(|&v| v > 0.0) {
        let s: Vec<f64> = d.iter().map(|v| v.sqrt()).collect();
        let mut m = DMatrix::zeros(a.n(), a.n());
        for i in 0..a.n() {
            for (j, v) in a.row(i) {
                if i != j {
                    m[(i, j)] = -v / (s[i] * s[j]);
                }
            }
        }
        SymmetricEigen::new(m).eigenvalues.iter().copied().collect()
    } else {
        let b = a.dense_jacobi_matrix()?;
        let mut out = Vec::with_capacity(a.n());
        for z in b.complex_eigenvalues().iter() {
            if z.im.abs() >= 1e-10 {
                return Err(Error::ComplexEigenvalue(z.im));
            }
            out.push(z.re);
        }
        out
    };
    eigs.sort_by(f64::total_cmp);
    Ok(eigs)
}
