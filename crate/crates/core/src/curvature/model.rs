//! The corner model G = s⁻¹(Y + A), Y = diag(y_1..y_m, 0..0).
//!
//! The closed forms below are written in the variables y_j with
//! ∂/∂x_j = −(y_j²/2s) ∂/∂y_j, i.e. y_j = 2s/x_j. The model potential
//! realizing them is u = 2Σ_{j≤m} x_j log x_j + xᵀAx/(2s).
//! (In the variable s/(2x_j) the same metric has T scaled by 16.)

use super::CurvatureError;
use crate::potential::{Jet, PotentialError, SymplecticPotential};
use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub n: usize,
    pub m: usize,
    pub a: DMatrix<f64>,
}

impl ModelSpec {
    pub fn new(n: usize, m: usize, a: DMatrix<f64>) -> Result<Self, CurvatureError> {
        if m > n || a.nrows() != n || a.ncols() != n {
            return Err(CurvatureError::InvalidModel(format!("need m ≤ n and A of size {n}")));
        }
        if (&a - a.transpose()).amax() > 1e-14 * a.amax() || a.clone().cholesky().is_none() {
            return Err(CurvatureError::InvalidModel("A must be symmetric positive definite".into()));
        }
        Ok(ModelSpec { n, m, a })
    }

    pub fn identity(n: usize, m: usize) -> Self {
        Self::new(n, m, DMatrix::identity(n, n)).expect("identity model")
    }

    /// y_j = 2s/x_j.
    pub fn y_from_x(s: f64, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&xi| 2.0 * s / xi).collect()
    }

    /// x_j = 2s/y_j for j ≤ m; the remaining coordinates are set to `rest`.
    pub fn x_from_y(&self, s: f64, y: &[f64], rest: f64) -> Vec<f64> {
        (0..self.n)
            .map(|j| if j < self.m { 2.0 * s / y[j] } else { rest })
            .collect()
    }

    pub fn g(&self, s: f64, y: &[f64]) -> DMatrix<f64> {
        let mut g = self.a.clone();
        for j in 0..self.m {
            g[(j, j)] += y[j];
        }
        g / s
    }

    pub fn potential(&self, s: f64) -> ModelPotential<'_> {
        ModelPotential { model: self, s }
    }
}

/// u = 2Σ_{j≤m} x_j log x_j + xᵀAx/(2s) on {x_j > 0, j ≤ m}.
#[derive(Clone, Copy, Debug)]
pub struct ModelPotential<'a> {
    pub model: &'a ModelSpec,
    pub s: f64,
}

impl SymplecticPotential for ModelPotential<'_> {
    fn dim(&self) -> usize {
        self.model.n
    }

    fn jet(&self, x: &[f64], order: usize) -> Result<Jet, PotentialError> {
        let (n, m) = (self.model.n, self.model.m);
        let d = self.boundary_distance(x);
        if d <= 0.0 {
            return Err(PotentialError::BoundaryPoint(d));
        }
        let mut j = Jet::zero(n, order);
        let xv = DVector::from_column_slice(x);
        let ax = &self.model.a * &xv / self.s;
        j.value = 0.5 * xv.dot(&ax);
        j.grad = ax;
        j.hess = &self.model.a / self.s;
        for i in 0..m {
            let xi = x[i];
            j.value += 2.0 * xi * xi.ln();
            j.grad[i] += 2.0 * (1.0 + xi.ln());
            j.hess[(i, i)] += 2.0 / xi;
            if order >= 3 {
                j.third[i][(i, i)] = -2.0 / (xi * xi);
            }
            if order >= 4 {
                j.fourth[i][i][(i, i)] = 4.0 / (xi * xi * xi);
            }
        }
        Ok(j)
    }

    fn boundary_distance(&self, x: &[f64]) -> f64 {
        x[..self.model.m].iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

fn submatrix(a: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

fn det_or_one(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        1.0
    } else {
        a.determinant()
    }
}

/// Signed cofactor Δ_pq = (−1)^{p+q} det (M with row p and column q removed).
fn cofactor(a: &DMatrix<f64>, p: usize, q: usize) -> f64 {
    let n = a.nrows();
    let rows: Vec<usize> = (0..n).filter(|&i| i != p).collect();
    let cols: Vec<usize> = (0..n).filter(|&j| j != q).collect();
    let sgn = if (p + q) % 2 == 0 { 1.0 } else { -1.0 };
    sgn * det_or_one(&submatrix(a, &rows, &cols))
}

/// Closed-form T for the corner model at variables y (length m) and parameter s.
pub fn model_t(model: &ModelSpec, y: &[f64], s: f64) -> DMatrix<f64> {
    let (n, m) = (model.n, model.m);
    let mut ya = model.a.clone();
    for j in 0..m {
        ya[(j, j)] += y[j];
    }
    let delta = ya.determinant();
    let d = DMatrix::from_fn(n, n, |p, q| cofactor(&ya, p, q));
    let s2 = s * s;
    let mut t = DMatrix::zeros(n, n);
    for j in 0..m {
        for i in 0..m {
            if i != j {
                t[(j, i)] = -(y[j] * y[j] * y[i] * y[i]) * d[(i, j)] * d[(i, j)] / (4.0 * s2 * delta * delta);
            }
        }
        let mut tjj = 0.0;
        for h in (0..m).filter(|&h| h != j) {
            tjj -= y[j] * y[j] * y[h] * y[h] * d[(j, h)] * d[(h, h)] / (4.0 * s2 * delta * delta);
        }
        tjj += y[j].powi(3) * d[(j, j)] / (2.0 * s2 * delta);
        tjj -= y[j].powi(4) * d[(j, j)] * d[(j, j)] / (2.0 * s2 * delta * delta);
        t[(j, j)] = tjj;
    }
    t
}

/// Diagonal T′ and the ratios (G′)⁻¹T′ of the comparison metric.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelTPrime {
    pub t: Vec<f64>,
    pub ratio: Vec<f64>,
}

/// T′_jj = y_j³/(2s²(y_j+1)²) for j ≤ m and (y_j³/2s²)(1 − y_j) for j > m,
/// where for j > m the variable is y_j = s/(2x_j) with x_j taken from `x_rest`.
pub fn model_t_prime(y: &[f64], x_rest: &[f64], s: f64, n: usize, m: usize) -> ModelTPrime {
    let mut t = Vec::with_capacity(n);
    let mut ratio = Vec::with_capacity(n);
    for j in 0..n {
        if j < m {
            let yj = y[j];
            t.push(yj.powi(3) / (2.0 * s * s * (yj + 1.0).powi(2)));
            ratio.push(yj.powi(3) / (2.0 * s * (yj + 1.0).powi(3)));
        } else {
            let xj = x_rest[j - m];
            let yj = s / (2.0 * xj);
            t.push(yj.powi(3) / (2.0 * s * s) * (1.0 - yj));
            ratio.push(s * s / (16.0 * xj.powi(3)) * (1.0 - s / (2.0 * xj)));
        }
    }
    ModelTPrime { t, ratio }
}

/// Checks [A]_I = det(A)·[A⁻¹]_{I′} for principal minors, I′ the complement of I.
pub fn minor_identity_check(a: &DMatrix<f64>, idx: &[usize]) -> Result<bool, CurvatureError> {
    let n = a.nrows();
    let det = a.determinant();
    let inv = a.clone().try_inverse().ok_or(CurvatureError::SingularA)?;
    if det == 0.0 || !det.is_finite() {
        return Err(CurvatureError::SingularA);
    }
    let comp: Vec<usize> = (0..n).filter(|i| !idx.contains(i)).collect();
    let lhs = det_or_one(&submatrix(a, idx, idx));
    let rhs = det * det_or_one(&submatrix(&inv, &comp, &comp));
    // Hadamard bound of the I-block sets the natural scale of the minor
    let scale: f64 = idx
        .iter()
        .map(|&i| idx.iter().map(|&j| a[(i, j)] * a[(i, j)]).sum::<f64>().sqrt())
        .product();
    Ok((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(scale))
}
