//! Ricci curvature of toric Kähler metrics `dxᵀG dx + dθᵀG⁻¹dθ`, G = Hess u.
//!
//! With f = log det G⁻¹ the matrices
//!
//! ```text
//! R_jl = −Σ_h ∂_j( G^{lh} ∂_h f ),   T = R G,   ρ = G⁻¹R/4
//! ```
//! encode the Ricci form. The Riemannian Ricci tensor restricted to the
//! action directions is `Ric(∂_x, ∂_x) = T/2`, so `Ric ≥ κ g` is the matrix
//! inequality `T ≥ 2κ G`. `min_ratio` is the smallest κ with `T v = κ G v`.

mod model;
mod oracle;
mod scan;

pub use model::{minor_identity_check, model_t, model_t_prime, ModelPotential, ModelSpec, ModelTPrime};
pub use oracle::{christoffel_ricci_oracle, OracleRicci};
pub use scan::{ricci_lower_bound_scan, ScanRegion, ScanReport, ScanRow, ScanTarget};

use crate::potential::{hessian_data, PotentialError, SymplecticPotential};
use nalgebra::DMatrix;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CurvatureError {
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error("G is singular")]
    SingularG,
    #[error("matrix is singular")]
    SingularA,
    #[error("scan region touches a codimension-two face")]
    RegionTouchesCodimTwo,
    #[error("finite-difference step leaves the domain")]
    StepTooLarge,
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct RicciData {
    pub x: Vec<f64>,
    pub s: f64,
    #[serde(skip)]
    pub r: DMatrix<f64>,
    #[serde(skip)]
    pub t: DMatrix<f64>,
    #[serde(skip)]
    pub rho: DMatrix<f64>,
    #[serde(skip)]
    pub g: DMatrix<f64>,
    pub min_ratio: f64,
}

impl RicciData {
    /// Best κ with Ric ≥ κ g (half of `min_ratio`).
    pub fn ricci_lower_bound(&self) -> f64 {
        0.5 * self.min_ratio
    }

    /// Action-direction block of the Riemannian Ricci tensor.
    pub fn ricci_xx(&self) -> DMatrix<f64> {
        0.5 * (&self.t + self.t.transpose()) * 0.5
    }

    pub fn symmetry_defect(&self) -> f64 {
        (&self.t - self.t.transpose()).amax() / self.t.amax().max(f64::MIN_POSITIVE)
    }
}

/// Smallest generalized eigenvalue of `T v = κ G v` (T symmetrized) via Cholesky of G.
pub fn min_generalized_eigenvalue(t: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<f64, CurvatureError> {
    let chol = g.clone().cholesky().ok_or(CurvatureError::SingularG)?;
    let l = chol.l();
    let linv = l.try_inverse().ok_or(CurvatureError::SingularG)?;
    let ts = 0.5 * (t + t.transpose());
    let c = &linv * ts * linv.transpose();
    let c = 0.5 * (&c + c.transpose());
    Ok(c.symmetric_eigenvalues().min())
}

/// R, T, ρ and min_ratio from exact derivatives of G up to second order.
pub fn ricci_general<P: SymplecticPotential + ?Sized>(pot: &P, s: f64, x: &[f64]) -> Result<RicciData, CurvatureError> {
    let n = pot.dim();
    let h = hessian_data(pot, s, x, 4)?;
    let gi = &h.g_inv;
    let a: Vec<DMatrix<f64>> = h.dg.iter().map(|d| gi * d).collect();
    // f_h = ∂_h log det G⁻¹ = −tr(G⁻¹ ∂_h G)
    let f: Vec<f64> = a.iter().map(|m| -m.trace()).collect();
    // ∂_j f_h = tr(G⁻¹∂_jG G⁻¹∂_hG) − tr(G⁻¹ ∂_j∂_h G)
    let df = |j: usize, hh: usize| (&a[j] * &a[hh]).trace() - (gi * &h.d2g[j][hh]).trace();
    let mut r = DMatrix::zeros(n, n);
    for j in 0..n {
        let dginv = -(gi * &h.dg[j] * gi);
        for l in 0..n {
            let mut acc = 0.0;
            for hh in 0..n {
                acc += dginv[(l, hh)] * f[hh] + gi[(l, hh)] * df(j, hh);
            }
            r[(j, l)] = -acc;
        }
    }
    let t = &r * &h.g;
    let rho = gi * &r / 4.0;
    let min_ratio = min_generalized_eigenvalue(&t, &h.g)?;
    Ok(RicciData {
        x: x.to_vec(),
        s,
        r,
        t,
        rho,
        g: h.g,
        min_ratio,
    })
}
