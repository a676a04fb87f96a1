//! Lowest eigenpairs of K v = λ M v for sparse symmetric K and SPD M.

use super::sparse::{Csr, SparseCholesky};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, thiserror::Error)]
pub enum EigenError {
    #[error("Cholesky factorization failed: {0}")]
    CholeskyFailure(String),
    #[error("eigensolver did not converge (worst residual {0:e})")]
    ConvergenceFailure(f64),
    #[error("requested {count} eigenpairs of a system of size {n}")]
    TooMany { count: usize, n: usize },
}

#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// M-orthonormal eigenvectors.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

/// Systems up to this size go to the dense solver.
pub const DENSE_LIMIT: usize = 200;
/// Target residual of the iterative solver, relative to max(1, |λ|).
pub const ITERATIVE_TOL: f64 = 1e-10;
/// Accepted normwise backward error ‖Kv − λMv‖ / ((‖K‖ + |λ|‖M‖)‖v‖) once the
/// Ritz values and the residual have stopped moving; graded meshes and
/// Gaussian weights can leave M too ill-conditioned for `ITERATIVE_TOL`.
pub const BACKWARD_TOL: f64 = 1e-13;
const MAX_ITER: usize = 2000;
/// Shift moves toward the lowest Ritz value once it has settled; a successful
/// factorization of K − σM certifies σ < λ₁.
const MAX_RESHIFTS: usize = 4;

pub fn residual(k: &Csr, m: &Csr, lambda: f64, v: &[f64]) -> f64 {
    let kv = k.apply(v);
    let mv = m.apply(v);
    let r: f64 = kv.iter().zip(&mv).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
    r / mv.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dense solve or shift-invert subspace iteration below `shift`-adjacent
/// eigenvalues; `shift` must lie below the spectrum.
pub fn lowest_eigs(k: &Csr, m: &Csr, count: usize, shift: f64) -> Result<EigenPairs, EigenError> {
    if count > k.n || count == 0 {
        return Err(EigenError::TooMany { count, n: k.n });
    }
    if k.n <= DENSE_LIMIT || 3 * count > k.n {
        dense_eigs(k, m, count)
    } else {
        subspace_eigs(k, m, count, shift)
    }
}

pub fn dense_eigs(k: &Csr, m: &Csr, count: usize) -> Result<EigenPairs, EigenError> {
    let n = k.n;
    if count > n {
        return Err(EigenError::TooMany { count, n });
    }
    let chol = m
        .to_dense()
        .cholesky()
        .ok_or_else(|| EigenError::CholeskyFailure("mass matrix".into()))?;
    let l = chol.l();
    let kd = k.to_dense();
    let a = l
        .solve_lower_triangular(&kd)
        .ok_or_else(|| EigenError::CholeskyFailure("triangular solve".into()))?;
    let c = l
        .solve_lower_triangular(&a.transpose())
        .ok_or_else(|| EigenError::CholeskyFailure("triangular solve".into()))?;
    let c = 0.5 * (&c + c.transpose());
    let eig = c.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lt = l.transpose();
    let mut out = EigenPairs {
        values: vec![],
        vectors: vec![],
        residuals: vec![],
    };
    for &i in idx.iter().take(count) {
        let y: DVector<f64> = eig.eigenvectors.column(i).into_owned();
        let v = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| EigenError::CholeskyFailure("back substitution".into()))?;
        let v: Vec<f64> = v.iter().copied().collect();
        let lam = eig.eigenvalues[i];
        out.residuals.push(residual(k, m, lam, &v));
        out.values.push(lam);
        out.vectors.push(v);
    }
    Ok(out)
}

fn inf_norm(a: &Csr) -> f64 {
    (0..a.n).map(|r| a.row(r).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn m_dot(m: &Csr, a: &[f64], b: &[f64]) -> f64 {
    m.apply(b).iter().zip(a).map(|(x, y)| x * y).sum()
}

/// M-orthonormalizes `block` in place (two passes of modified Gram–Schmidt),
/// replacing collapsed vectors by fresh random ones.
fn m_orthonormalize(m: &Csr, block: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
    let n = m.n;
    let mut mb: Vec<Vec<f64>> = Vec::with_capacity(block.len());
    for i in 0..block.len() {
        for attempt in 0..4 {
            let before = m_dot(m, &block[i], &block[i]).sqrt();
            for _ in 0..2 {
                for j in 0..i {
                    let c: f64 = mb[j].iter().zip(&block[i]).map(|(a, b)| a * b).sum();
                    let (head, tail) = block.split_at_mut(i);
                    for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                        *x -= c * y;
                    }
                }
            }
            let mv = m.apply(&block[i]);
            let nrm = mv.iter().zip(&block[i]).map(|(a, b)| a * b).sum::<f64>().sqrt();
            if nrm > 1e-10 * before && nrm.is_finite() {
                for x in block[i].iter_mut() {
                    *x /= nrm;
                }
                mb.push(mv.into_iter().map(|x| x / nrm).collect());
                break;
            }
            if attempt == 3 {
                panic!("cannot extend M-orthonormal block");
            }
            block[i] = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        }
    }
}

pub fn subspace_eigs(k: &Csr, m: &Csr, count: usize, shift: f64) -> Result<EigenPairs, EigenError> {
    let n = k.n;
    let p = (2 * count).max(count + 8).min(n);
    let mut shift = shift;
    let mut fact = SparseCholesky::new(&k.add_scaled(-shift, m)).map_err(|e| EigenError::CholeskyFailure(e.to_string()))?;
    let mut reshifts = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let (nk, nm) = (inf_norm(k), inf_norm(m));
    let mut worst = f64::INFINITY;
    let mut prev_worst = f64::INFINITY;
    let mut prev: Vec<f64> = vec![f64::NAN; count];
    for _ in 0..MAX_ITER {
        let mut y: Vec<Vec<f64>> = x.iter().map(|v| m.apply(v)).collect();
        fact.solve_many(&mut y);
        m_orthonormalize(m, &mut y, &mut rng);
        let ky: Vec<Vec<f64>> = y.iter().map(|v| k.apply(v)).collect();
        let h = DMatrix::from_fn(p, p, |i, j| {
            let a: f64 = y[i].iter().zip(&ky[j]).map(|(a, b)| a * b).sum();
            let b: f64 = y[j].iter().zip(&ky[i]).map(|(a, b)| a * b).sum();
            0.5 * (a + b)
        });
        let eig = h.symmetric_eigen();
        let mut idx: Vec<usize> = (0..p).collect();
        idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        x = idx
            .iter()
            .map(|&c| {
                let mut v = vec![0.0; n];
                for (r, yr) in y.iter().enumerate() {
                    let w = eig.eigenvectors[(r, c)];
                    for (vi, yi) in v.iter_mut().zip(yr) {
                        *vi += w * yi;
                    }
                }
                v
            })
            .collect();
        let values: Vec<f64> = idx.iter().map(|&c| eig.eigenvalues[c]).collect();
        let res: Vec<f64> = (0..count).map(|i| residual(k, m, values[i], &x[i])).collect();
        worst = (0..count).map(|i| res[i] / values[i].abs().max(1.0)).fold(0.0, f64::max);
        let stalled = (0..count).all(|i| (values[i] - prev[i]).abs() <= 1e-12 * values[i].abs().max(1.0))
            && worst >= 0.9 * prev_worst;
        let backward = (0..count)
            .map(|i| {
                let mv = m.apply(&x[i]);
                let r_abs = res[i] * mv.iter().map(|t| t * t).sum::<f64>().sqrt();
                let xn = x[i].iter().map(|t| t * t).sum::<f64>().sqrt();
                r_abs / ((nk + values[i].abs() * nm) * xn)
            })
            .fold(0.0, f64::max);
        let settled = (values[0] - prev[0]).abs() <= 1e-3 * (values[0] - shift);
        prev = values[..count].to_vec();
        prev_worst = worst;
        if worst <= ITERATIVE_TOL || (stalled && backward <= BACKWARD_TOL) {
            return Ok(EigenPairs {
                values: values[..count].to_vec(),
                vectors: x[..count].to_vec(),
                residuals: res,
            });
        }
        if settled && reshifts < MAX_RESHIFTS {
            reshifts += 1;
            let target = shift + 0.9 * (values[0] - shift);
            if let Ok(f) = SparseCholesky::new(&k.add_scaled(-target, m)) {
                shift = target;
                fact = f;
            }
        }
    }
    Err(EigenError::ConvergenceFailure(worst))
}
