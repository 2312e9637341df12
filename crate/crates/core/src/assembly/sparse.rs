//! Sparse matrices with a deterministic assembly order and a direct LU solver.

use faer::linalg::solvers::SolveCore;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat};
use nalgebra::DVector;

use crate::error::{Error, Result};

/// Accumulates (row, col, value) contributions; duplicates are summed in insertion order.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        if value != 0.0 {
            self.entries.push((row, col, value));
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn build(mut self) -> CscMatrix {
        // Stable sort keeps the insertion order among duplicates, so sums are reproducible.
        self.entries.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; self.n + 1];
        let mut row_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last = None;
        for &(r, c, v) in &self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..self.n {
            col_ptr[c + 1] += col_ptr[c];
        }
        CscMatrix { n: self.n, col_ptr, row_idx, values }
    }
}

/// Square compressed-sparse-column matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn identity(n: usize) -> Self {
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.push(i, i, 1.0);
        }
        b.build()
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        for c in 0..self.n {
            let xc = x[c];
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.values[k] * xc;
            }
        }
        y
    }

    pub fn transpose_mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.n,
            (0..self.n).map(|c| (self.col_ptr[c]..self.col_ptr[c + 1]).map(|k| self.values[k] * x[self.row_idx[k]]).sum()),
        )
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        match self.row_idx[range.clone()].binary_search(&row) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    /// Iterates over stored entries as (row, col, value), column by column.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |c| (self.col_ptr[c]..self.col_ptr[c + 1]).map(move |k| (self.row_idx[k], c, self.values[k])))
    }

    /// Largest |a_ij - a_ji| relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let max = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max == 0.0 {
            return 0.0;
        }
        self.iter().map(|(r, c, v)| (v - self.get(c, r)).abs()).fold(0.0, f64::max) / max
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.n, self.n);
        for (r, c, v) in self.iter() {
            d[(r, c)] += v;
        }
        d
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<_> = self.iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &triplets)
            .map_err(|e| Error::Numeric(format!("sparse matrix creation failed: {e:?}")))
    }
}

/// Sparse LU factorisation with partial pivoting.
pub struct SparseLu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu").field("n", &self.n).finish()
    }
}

impl SparseLu {
    pub fn factor(a: &CscMatrix) -> std::result::Result<Self, String> {
        let m = a.to_faer().map_err(|e| e.to_string())?;
        let lu = m.sp_lu().map_err(|e| format!("{e:?}"))?;
        Ok(Self { n: a.n, lu })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.solve_with(b, Conj::No, false)
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &DVector<f64>) -> DVector<f64> {
        self.solve_with(b, Conj::No, true)
    }

    fn solve_with(&self, b: &DVector<f64>, conj: Conj, transpose: bool) -> DVector<f64> {
        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        if transpose {
            self.lu.solve_transpose_in_place_with_conj(conj, rhs.as_mut());
        } else {
            self.lu.solve_in_place_with_conj(conj, rhs.as_mut());
        }
        DVector::from_fn(self.n, |i, _| rhs[(i, 0)])
    }
}

/// Outcome of a direct solve with iterative refinement.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub x: DVector<f64>,
    /// ||A x - b|| / ||b|| (0 when b = 0).
    pub relative_residual: f64,
    pub refinement_steps: usize,
}

pub fn relative_residual(a: &CscMatrix, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let bn = b.norm();
    let r = (a.mul_vec(x) - b).norm();
    if bn == 0.0 {
        r
    } else {
        r / bn
    }
}

/// Factorises `a`, solves, and refines until the residual stops improving.
pub fn solve_direct(a: &CscMatrix, b: &DVector<f64>) -> std::result::Result<(SparseLu, SolveOutcome), String> {
    let lu = SparseLu::factor(a)?;
    let mut x = lu.solve(b);
    if x.iter().any(|v| !v.is_finite()) {
        return Err("factorisation produced non-finite values (singular matrix)".into());
    }
    let mut res = relative_residual(a, &x, b);
    let mut steps = 0;
    while steps < 5 && res > 1e-14 {
        let r = b - a.mul_vec(&x);
        let candidate = &x + lu.solve(&r);
        let cres = relative_residual(a, &candidate, b);
        if !(cres < res) {
            break;
        }
        x = candidate;
        res = cres;
        steps += 1;
    }
    Ok((lu, SolveOutcome { x, relative_residual: res, refinement_steps: steps }))
}
