//! Minimal dense real-matrix kernel: products, integer powers, LU
//! factorization/solve/inverse, left null vectors of generators, and a
//! power-iteration spectral radius.
//!
//! Everything is `f64` row-major. Matrices in this crate stay small
//! (at most ~500x500), so dense O(n^3) routines are deliberate — no
//! sparse formats, no external solver.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("singular to working precision: pivot {pivot:e} at elimination step {step}")]
    Singular { step: usize, pivot: f64 },
    #[error("null space is not one-dimensional (residual {residual:e} exceeds {tolerance:e})")]
    AmbiguousNullSpace { residual: f64, tolerance: f64 },
    #[error("left null vector has entry {value:e} at index {index}; input is not a generator")]
    NotAGenerator { index: usize, value: f64 },
    #[error("power iteration did not converge in {iterations} iterations (last estimate {last_estimate})")]
    PowerIterationStalled { iterations: usize, last_estimate: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },
}

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from a row-major entry vector, rejecting NaN/Inf.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self, LinalgError> {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        assert_eq!(
            entries.len(),
            rows * cols,
            "entry vector length {} does not match {}x{}",
            entries.len(),
            rows,
            cols
        );
        if let Some(flat) = entries.iter().position(|x| !x.is_finite()) {
            return Err(LinalgError::NonFiniteEntry {
                row: flat / cols,
                col: flat % cols,
            });
        }
        Ok(Self { rows, cols, entries })
    }

    /// Builds from nested rows; handy in tests.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, LinalgError> {
        assert!(!rows.is_empty(), "need at least one row");
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let entries: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(rows.len(), cols, entries)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, entries: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Maximum absolute row sum.
    pub fn infinity_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entrywise difference; shapes must match.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Standard matrix product.
    pub fn multiply(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let (n, m) = (self.rows, other.cols);
        let mut out = vec![0.0; n * m];
        // i-k-j loop order: the inner update runs over contiguous rows.
        for i in 0..n {
            let arow = self.row(i);
            let orow = &mut out[i * m..(i + 1) * m];
            for (k, &aik) in arow.iter().enumerate() {
                if aik == 0.0 {
                    continue; // the block matrices here are mostly zeros
                }
                let brow = other.row(k);
                for (o, &bkj) in orow.iter_mut().zip(brow) {
                    *o += aik * bkj;
                }
            }
        }
        Ok(Self { rows: n, cols: m, entries: out })
    }

    /// `self^k` by repeated squaring; `k = 0` gives the identity.
    pub fn power(&self, k: u32) -> Result<Self, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.multiply(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.multiply(&base)?;
            }
        }
        Ok(result)
    }

    /// Matrix-vector product `self * v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }

    /// Row-vector product `v * self`.
    pub fn vecmat(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &mij) in out.iter_mut().zip(self.row(i)) {
                *o += vi * mij;
            }
        }
        out
    }

    /// LU factorization with partial pivoting.
    pub fn lu_factor(&self) -> Result<LuFactors, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let mut lu = self.entries.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        // Pivots below this are treated as exact zeros (relative to the
        // matrix scale) and reported as singularity.
        let threshold = 1e-300 * self.infinity_norm().max(1.0);
        for step in 0..n {
            let mut pivot_row = step;
            let mut pivot_val = lu[step * n + step].abs();
            for r in step + 1..n {
                let cand = lu[r * n + step].abs();
                if cand > pivot_val {
                    pivot_row = r;
                    pivot_val = cand;
                }
            }
            if pivot_val <= threshold {
                return Err(LinalgError::Singular { step, pivot: pivot_val });
            }
            if pivot_row != step {
                for c in 0..n {
                    lu.swap(step * n + c, pivot_row * n + c);
                }
                perm.swap(step, pivot_row);
            }
            let pivot = lu[step * n + step];
            for r in step + 1..n {
                let factor = lu[r * n + step] / pivot;
                lu[r * n + step] = factor;
                if factor != 0.0 {
                    let (upper, lower) = lu.split_at_mut(r * n);
                    let src = &upper[step * n + step + 1..step * n + n];
                    let dst = &mut lower[step + 1..n];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d -= factor * s;
                    }
                }
            }
        }
        Ok(LuFactors { n, lu, perm })
    }

    /// Inverse via LU; requires max |self * inverse - I| small for
    /// well-conditioned inputs (tested property).
    pub fn lu_invert(&self) -> Result<Self, LinalgError> {
        let f = self.lu_factor()?;
        let n = f.n;
        let mut inv = Self::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = f.solve(&e);
            e[j] = 0.0;
            for i in 0..n {
                inv.entries[i * n + j] = col[i];
            }
        }
        Ok(inv)
    }
}

/// Packed LU factors with the permutation applied during elimination.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl LuFactors {
    /// Solves `A x = rhs` for the factored `A`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let n = self.n;
        // Forward substitution on the permuted right-hand side.
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            for k in 0..i {
                acc -= self.lu[i * n + k] * x[k];
            }
            x[i] = acc;
        }
        // Back substitution.
        for i in (0..n).rev() {
            let mut acc = x[i];
            for k in i + 1..n {
                acc -= self.lu[i * n + k] * x[k];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        x
    }
}

/// Left null vector of a conservative generator: the row vector `v` with
/// `v * m = 0`, `v * e = 1`, `v >= 0`.
///
/// One balance equation is redundant for a generator (columns sum to zero),
/// so the last one is replaced by the normalization row and the resulting
/// square system is solved by LU. Rank deficiency other than the expected
/// one dimension shows up as a singular solve or a large residual.
pub fn left_null_vector(m: &DenseMatrix) -> Result<Vec<f64>, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
    }
    let n = m.rows;
    // Transposed system S v^T = e_{n-1}: row j of S is column j of m,
    // except the last row which enforces sum(v) = 1.
    let mut s = DenseMatrix::zeros(n, n);
    for j in 0..n - 1 {
        for i in 0..n {
            s.set(j, i, m.get(i, j));
        }
    }
    for i in 0..n {
        s.set(n - 1, i, 1.0);
    }
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;

    let factors = match s.lu_factor() {
        Ok(f) => f,
        Err(LinalgError::Singular { pivot, .. }) => {
            return Err(LinalgError::AmbiguousNullSpace { residual: pivot, tolerance: 0.0 })
        }
        Err(e) => return Err(e),
    };
    let mut v = factors.solve(&rhs);

    // Self-checks: the dropped equation must hold too, and the vector must
    // be a probability vector up to roundoff.
    let residual = m
        .vecmat(&v)
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max);
    let tolerance = 1e-10 * m.infinity_norm().max(1.0);
    if residual > tolerance {
        return Err(LinalgError::AmbiguousNullSpace { residual, tolerance });
    }
    for (index, value) in v.iter_mut().enumerate() {
        if *value < -1e-12 {
            return Err(LinalgError::NotAGenerator { index, value: *value });
        }
        if *value < 0.0 {
            *value = 0.0;
        }
    }
    let total: f64 = v.iter().sum();
    for value in v.iter_mut() {
        *value /= total;
    }
    Ok(v)
}

/// Spectral radius of a nonnegative square matrix by power iteration,
/// to relative tolerance 1e-10.
pub fn spectral_radius(m: &DenseMatrix) -> Result<f64, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
    }
    debug_assert!(m.entries.iter().all(|&x| x >= 0.0), "expected nonnegative entries");
    let shift = m.infinity_norm().max(1.0);
    spectral_radius_apply(m.rows, shift, |v, out| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = m.row(i).iter().zip(v).map(|(a, x)| a * x).sum();
        }
    })
}

/// Power iteration on `apply + shift*I`, returning the unshifted dominant
/// eigenvalue. The positive shift makes the iteration matrix aperiodic, so
/// the method also converges for nonnegative matrices with zero diagonal
/// (e.g. permutation-like blocks) where plain power iteration cycles.
/// `apply` must write `M v` into its second argument.
pub fn spectral_radius_apply(
    n: usize,
    shift: f64,
    apply: impl Fn(&[f64], &mut [f64]),
) -> Result<f64, LinalgError> {
    const MAX_ITER: usize = 200_000;
    const REL_TOL: f64 = 1e-10;
    let mut v = vec![1.0; n];
    let mut w = vec![0.0; n];
    let mut previous = f64::NAN;
    for _ in 1..=MAX_ITER {
        apply(&v, &mut w);
        for (wi, &vi) in w.iter_mut().zip(&v) {
            *wi += shift * vi;
        }
        let norm = w.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if norm == 0.0 {
            return Ok(0.0); // reachable only from a nilpotent matrix
        }
        let estimate = norm - shift;
        for (vi, &wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        if (estimate - previous).abs() <= REL_TOL * estimate.abs().max(1e-12) {
            return Ok(estimate.max(0.0));
        }
        previous = estimate;
    }
    Err(LinalgError::PowerIterationStalled { iterations: MAX_ITER, last_estimate: previous })
}
