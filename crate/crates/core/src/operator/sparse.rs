//! Compressed sparse rows and a sparse Cholesky factorization for symmetric
//! positive definite systems.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    /// Sums duplicate entries in insertion order.
    pub fn from_triplets(n: usize, trip: &[(usize, usize, f64)]) -> Self {
        let mut idx: Vec<usize> = (0..trip.len()).collect();
        idx.sort_by_key(|&i| (trip[i].0, trip[i].1));
        let mut row_ptr = vec![0; n + 1];
        let mut col = Vec::new();
        let mut val: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for &i in &idx {
            let (r, c, v) = trip[i];
            if last == Some((r, c)) {
                *val.last_mut().expect("entry exists") += v;
            } else {
                col.push(c);
                val.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr { n, row_ptr, col, val }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |i| (self.col[i], self.val[i]))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(j, _)| j == c).map(|(_, v)| v).unwrap_or(0.0)
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec(x, &mut y);
        y
    }

    /// `self + a·other` for matrices with the same pattern or not.
    pub fn add_scaled(&self, a: f64, other: &Csr) -> Csr {
        let mut trip = Vec::with_capacity(self.val.len() + other.val.len());
        for r in 0..self.n {
            trip.extend(self.row(r).map(|(c, v)| (r, c, v)));
            trip.extend(other.row(r).map(|(c, v)| (r, c, a * v)));
        }
        Csr::from_triplets(self.n, &trip)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|r| self.row(r).all(|(c, v)| self.get(c, r) == v))
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }
}

#[derive(Debug, thiserror::Error)]
#[error("sparse Cholesky factorization failed: {0}")]
pub struct FactorError(String);

/// Sparse LLᵀ factor (fill-reducing ordering, supernodal) of an SPD matrix.
pub struct SparseCholesky {
    n: usize,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl SparseCholesky {
    pub fn new(a: &Csr) -> Result<Self, FactorError> {
        let trip: Vec<Triplet<usize, usize, f64>> = (0..a.n)
            .flat_map(|r| a.row(r).filter(move |&(c, _)| c >= r).map(move |(c, v)| Triplet::new(c, r, v)))
            .collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(a.n, a.n, &trip)
            .map_err(|e| FactorError(format!("{e:?}")))?;
        let llt = mat.sp_cholesky(Side::Lower).map_err(|e| FactorError(e.to_string()))?;
        Ok(SparseCholesky { n: a.n, llt })
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_many(std::slice::from_mut(&mut x));
        x
    }

    /// Solves A X = B in place, one right-hand side per vector.
    pub fn solve_many(&self, rhs: &mut [Vec<f64>]) {
        let mut b = Mat::<f64>::from_fn(self.n, rhs.len(), |i, j| rhs[j][i]);
        self.llt.solve_in_place(b.as_mut());
        for (j, r) in rhs.iter_mut().enumerate() {
            for (i, x) in r.iter_mut().enumerate() {
                *x = b[(i, j)];
            }
        }
    }
}
