//! Symplectic potentials u_s = a·v_P + φ + s⁻¹ψ and their derivative tensors.
//!
//! `v_P = Σ_r ℓ_r log ℓ_r` is the Guillemin potential of the polytope and
//! `a` its coefficient. With `a = ½` the metric `dxᵀG dx + dθᵀG⁻¹dθ`
//! closes up smoothly over the facets for angles of period 2π, which is the
//! default. `a = 1` is available for the unnormalized function.

mod ground;
mod poly;

pub use ground::GroundState;
pub use poly::{PolynomialFn, Term};

use crate::polytope::{DelzantPolytope, LocalChart, Rational};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Default Guillemin coefficient.
pub const GUILLEMIN_HALF: f64 = 0.5;

const BOUNDARY_TOL: f64 = 1e-14;
const PD_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum PotentialError {
    #[error("point is on or outside the boundary (min slack {0:e})")]
    BoundaryPoint(f64),
    #[error("Hessian is not positive definite at {0:?}")]
    NotPositiveDefinite(Vec<f64>),
    #[error("chart does not match the point or polytope")]
    ChartMismatch,
    #[error("mode {0:?} lies outside kP")]
    ModeOutsidePolytope(Vec<i64>),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Value and derivatives of a scalar function up to fourth order.
///
/// `third[k][(i, j)] = ∂_i∂_j∂_k f`, `fourth[k][l][(i, j)] = ∂_i∂_j∂_k∂_l f`.
#[derive(Clone, Debug)]
pub struct Jet {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
    pub third: Vec<DMatrix<f64>>,
    pub fourth: Vec<Vec<DMatrix<f64>>>,
}

impl Jet {
    pub fn zero(n: usize, order: usize) -> Self {
        Jet {
            value: 0.0,
            grad: DVector::zeros(n),
            hess: DMatrix::zeros(n, n),
            third: if order >= 3 { vec![DMatrix::zeros(n, n); n] } else { vec![] },
            fourth: if order >= 4 { vec![vec![DMatrix::zeros(n, n); n]; n] } else { vec![] },
        }
    }

    fn axpy(&mut self, a: f64, other: &Jet) {
        self.value += a * other.value;
        self.grad += a * &other.grad;
        self.hess += a * &other.hess;
        for (t, o) in self.third.iter_mut().zip(&other.third) {
            *t += a * o;
        }
        for (t, o) in self.fourth.iter_mut().zip(&other.fourth) {
            for (tt, oo) in t.iter_mut().zip(o) {
                *tt += a * oo;
            }
        }
    }

    pub fn of_polynomial(p: &PolynomialFn, x: &[f64], order: usize) -> Self {
        let n = p.dim();
        let mut j = Jet::zero(n, order);
        if p.is_zero() {
            return j;
        }
        j.value = p.eval(x);
        for i in 0..n {
            j.grad[i] = p.partial(&[i], x);
            for l in 0..n {
                j.hess[(i, l)] = p.partial(&[i, l], x);
            }
        }
        if order >= 3 {
            for k in 0..n {
                for i in 0..n {
                    for l in 0..n {
                        j.third[k][(i, l)] = p.partial(&[i, l, k], x);
                    }
                }
            }
        }
        if order >= 4 {
            for k in 0..n {
                for m in 0..n {
                    for i in 0..n {
                        for l in 0..n {
                            j.fourth[k][m][(i, l)] = p.partial(&[i, l, k, m], x);
                        }
                    }
                }
            }
        }
        j
    }
}

/// Derivatives of the Guillemin potential Σ_r ℓ_r log ℓ_r (unit coefficient).
pub fn guillemin_derivatives(p: &DelzantPolytope, x: &[f64], order: usize) -> Result<Jet, PotentialError> {
    let n = p.dim();
    if x.len() != n {
        return Err(PotentialError::DimensionMismatch(format!("point has {} coordinates, polytope {n}", x.len())));
    }
    let mut j = Jet::zero(n, order);
    for f in p.facets() {
        let l = crate::polytope::slack(f, x);
        if l <= BOUNDARY_TOL {
            return Err(PotentialError::BoundaryPoint(l));
        }
        let nu: Vec<f64> = f.normal.iter().map(|&v| v as f64).collect();
        let ln = l.ln();
        j.value += l * ln;
        for a in 0..n {
            j.grad[a] += nu[a] * (1.0 + ln);
            for b in 0..n {
                j.hess[(a, b)] += nu[a] * nu[b] / l;
            }
        }
        if order >= 3 {
            let c3 = -1.0 / (l * l);
            for k in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        j.third[k][(a, b)] += c3 * nu[a] * nu[b] * nu[k];
                    }
                }
            }
        }
        if order >= 4 {
            let c4 = 2.0 / (l * l * l);
            for k in 0..n {
                for m in 0..n {
                    for a in 0..n {
                        for b in 0..n {
                            j.fourth[k][m][(a, b)] += c4 * nu[a] * nu[b] * nu[k] * nu[m];
                        }
                    }
                }
            }
        }
    }
    Ok(j)
}

/// Anything with a convex potential whose Hessian defines a toric metric.
pub trait SymplecticPotential: Sync {
    fn dim(&self) -> usize;
    /// Derivatives of u at `x` up to `order` (≤ 4).
    fn jet(&self, x: &[f64], order: usize) -> Result<Jet, PotentialError>;
    /// Distance-like measure to the edge of the domain (min facet slack).
    fn boundary_distance(&self, _x: &[f64]) -> f64 {
        f64::INFINITY
    }
}

/// G = Hess u with inverse, determinant and derivatives.
#[derive(Clone, Debug)]
pub struct HessianData {
    pub x: Vec<f64>,
    pub s: f64,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub det_g: f64,
    /// `dg[k] = ∂_k G`.
    pub dg: Vec<DMatrix<f64>>,
    /// `d2g[k][l] = ∂_k∂_l G`, present when requested.
    pub d2g: Vec<Vec<DMatrix<f64>>>,
}

impl HessianData {
    pub fn log_det_g_inv(&self) -> f64 {
        -self.det_g.ln()
    }
}

/// Checks λ_min > 1e-10·λ_max for a symmetric matrix.
pub fn is_positive_definite(g: &DMatrix<f64>) -> bool {
    let n = g.nrows();
    let (lo, hi) = match n {
        1 => (g[(0, 0)], g[(0, 0)]),
        2 => {
            let (a, b, c) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
            let m = 0.5 * (a + c);
            let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            (m - r, m + r)
        }
        _ => {
            let e = g.clone().symmetric_eigenvalues();
            (e.min(), e.max())
        }
    };
    hi > 0.0 && lo > PD_TOL * hi
}

/// Builds HessianData from a potential jet of order ≥ 2.
pub fn hessian_data<P: SymplecticPotential + ?Sized>(
    pot: &P,
    s: f64,
    x: &[f64],
    order: usize,
) -> Result<HessianData, PotentialError> {
    let j = pot.jet(x, order.max(2))?;
    from_jet(j, s, x)
}

fn from_jet(j: Jet, s: f64, x: &[f64]) -> Result<HessianData, PotentialError> {
    let g = j.hess;
    if !is_positive_definite(&g) {
        return Err(PotentialError::NotPositiveDefinite(x.to_vec()));
    }
    let g_inv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| PotentialError::NotPositiveDefinite(x.to_vec()))?;
    let det_g = g.determinant();
    Ok(HessianData {
        x: x.to_vec(),
        s,
        g,
        g_inv,
        det_g,
        dg: j.third,
        d2g: j.fourth,
    })
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
struct PotentialFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi: Option<Vec<Term>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    psi: Option<Vec<Term>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    guillemin: Option<f64>,
}

/// The data (P, φ, ψ) defining u_s = a·v_P + φ + s⁻¹ψ.
#[derive(Clone, Debug)]
pub struct PotentialSpec {
    pub polytope: DelzantPolytope,
    pub phi: PolynomialFn,
    pub psi: PolynomialFn,
    /// Coefficient `a` of the Guillemin term.
    pub guillemin: f64,
}

impl PotentialSpec {
    /// Checked constructor; runs the admissibility sampler.
    pub fn new(polytope: DelzantPolytope, phi: PolynomialFn, psi: PolynomialFn) -> Result<Self, PotentialError> {
        let spec = Self::new_unchecked(polytope, phi, psi);
        spec.check_admissible()?;
        Ok(spec)
    }

    /// Constructor without admissibility sampling (for surrogates such as ψ = 0).
    pub fn new_unchecked(polytope: DelzantPolytope, phi: PolynomialFn, psi: PolynomialFn) -> Self {
        PotentialSpec {
            polytope,
            phi,
            psi,
            guillemin: GUILLEMIN_HALF,
        }
    }

    /// φ = 0 and ψ = ½‖x‖².
    pub fn standard(polytope: DelzantPolytope) -> Self {
        let n = polytope.dim();
        Self::new_unchecked(polytope, PolynomialFn::zero(n), PolynomialFn::half_norm_sq(n))
    }

    pub fn with_guillemin(mut self, a: f64) -> Self {
        self.guillemin = a;
        self
    }

    pub fn dim(&self) -> usize {
        self.polytope.dim()
    }

    /// Parses `{"phi": [...], "psi": [...], "guillemin": a}` with defaults for absent fields.
    pub fn from_json(polytope: DelzantPolytope, s: &str) -> Result<Self, PotentialError> {
        let file: PotentialFile = serde_json::from_str(s)?;
        let n = polytope.dim();
        let poly = |t: Option<Vec<Term>>, default: PolynomialFn| match t {
            Some(t) => PolynomialFn::from_terms(n, &t).map_err(PotentialError::DimensionMismatch),
            None => Ok(default),
        };
        let phi = poly(file.phi, PolynomialFn::zero(n))?;
        let psi = poly(file.psi, PolynomialFn::half_norm_sq(n))?;
        let mut spec = Self::new_unchecked(polytope, phi, psi);
        if let Some(a) = file.guillemin {
            spec.guillemin = a;
        }
        spec.check_admissible()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PotentialFile {
            phi: Some(self.phi.to_terms()),
            psi: Some(self.psi.to_terms()),
            guillemin: Some(self.guillemin),
        })
        .expect("potential serialization")
    }

    /// The member u_s of the family.
    pub fn at(&self, s: f64) -> FamilyMember<'_> {
        FamilyMember { spec: self, s }
    }

    /// Derivatives of a·v_P + φ (the s-independent part).
    pub fn base_jet(&self, x: &[f64], order: usize) -> Result<Jet, PotentialError> {
        let mut j = Jet::zero(self.dim(), order);
        j.axpy(self.guillemin, &guillemin_derivatives(&self.polytope, x, order)?);
        j.axpy(1.0, &Jet::of_polynomial(&self.phi, x, order));
        Ok(j)
    }

    pub fn psi_hessian(&self, x: &[f64]) -> DMatrix<f64> {
        Jet::of_polynomial(&self.psi, x, 2).hess
    }

    /// Sample points used by the admissibility check: an interior grid plus
    /// points approaching every face representative from the centroid.
    pub fn validation_sample(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let p = &self.polytope;
        let n = p.dim();
        let c: Vec<f64> = p.centroid().iter().map(crate::polytope::lattice::rat_to_f64).collect();
        let verts = p.vertices_f64();
        let mut interior = vec![c.clone()];
        for v in &verts {
            for t in [0.25, 0.5, 0.75, 0.9] {
                interior.push((0..n).map(|i| c[i] + t * (v[i] - c[i])).collect());
            }
        }
        let mut near = Vec::new();
        if let Ok(faces) = p.vertices_and_faces() {
            for f in faces.iter().filter(|f| f.codim > 0) {
                let q: Vec<f64> = f.point.iter().map(crate::polytope::lattice::rat_to_f64).collect();
                for e in [1e-1, 1e-2, 1e-3, 1e-4] {
                    near.push((0..n).map(|i| q[i] + e * (c[i] - q[i])).collect());
                }
            }
        }
        (interior, near)
    }

    /// Sampled admissibility: Hess ψ ≻ 0, Hess(a v_P + φ) ≻ 0 and
    /// det Hess(a v_P + φ)·Πℓ_r > 0 on the validation sample.
    pub fn check_admissible(&self) -> Result<(), PotentialError> {
        let n = self.dim();
        if self.phi.dim() != n || self.psi.dim() != n {
            return Err(PotentialError::DimensionMismatch("φ/ψ dimension differs from polytope".into()));
        }
        let (interior, near) = self.validation_sample();
        let mut psi_points: Vec<Vec<f64>> = self.polytope.vertices_f64();
        psi_points.extend(interior.iter().cloned());
        for x in &psi_points {
            if !is_positive_definite(&self.psi_hessian(x)) {
                return Err(PotentialError::NotPositiveDefinite(x.clone()));
            }
        }
        for x in &interior {
            if !is_positive_definite(&self.base_jet(x, 2)?.hess) {
                return Err(PotentialError::NotPositiveDefinite(x.clone()));
            }
        }
        for x in interior.iter().chain(&near) {
            let h = self.base_jet(x, 2)?.hess;
            let prod: f64 = self.polytope.slacks(x).iter().product();
            if !(h.determinant() * prod > 0.0) {
                return Err(PotentialError::NotPositiveDefinite(x.clone()));
            }
        }
        Ok(())
    }

    /// G_s(x) with first derivatives.
    pub fn family_hessian(&self, s: f64, x: &[f64]) -> Result<HessianData, PotentialError> {
        hessian_data(&self.at(s), s, x, 3)
    }

    /// Splits G_s into a·X_m⁻¹ + s⁻¹A + B in the coordinates of `chart`.
    ///
    /// `x` is given in chart coordinates. The first matrix carries the
    /// Guillemin coefficient so that B stays bounded up to the face.
    pub fn boundary_decomposition(
        &self,
        s: f64,
        chart: &LocalChart,
        x: &[f64],
    ) -> Result<BoundaryDecomposition, PotentialError> {
        let n = self.dim();
        if chart.dim() != n || x.len() != n || !self.polytope.contains(&chart.base) {
            return Err(PotentialError::ChartMismatch);
        }
        if x[..chart.local_codim].iter().any(|&v| v <= 0.0) {
            return Err(PotentialError::ChartMismatch);
        }
        let xo = chart.from_chart_f64(x);
        let g = self.family_hessian(s, &xo)?.g;
        // x' = A x + c, so Hess' = A^{-T} Hess A^{-1}
        let ainv = DMatrix::from_fn(n, n, |i, j| chart.inverse_map()[i][j] as f64);
        let pull = |m: &DMatrix<f64>| ainv.transpose() * m * &ainv;
        let g_chart = pull(&g);
        let a = pull(&self.psi_hessian(&xo));
        let mut sing = DMatrix::zeros(n, n);
        for i in 0..chart.local_codim {
            sing[(i, i)] = self.guillemin / x[i];
        }
        let b = &g_chart - &sing - &a / s;
        Ok(BoundaryDecomposition {
            singular: sing,
            a,
            b,
            g: g_chart,
        })
    }

    /// Pull back along the chart change x ↦ A x + c (A ∈ GLₙℤ, c ∈ ℤⁿ).
    pub fn transform(&self, a: &[Vec<i64>], c: &[i64]) -> Result<Self, crate::polytope::PolytopeError> {
        let polytope = self.polytope.transform(a, c)?;
        let n = self.dim();
        let ainv = crate::polytope::lattice::unimodular_inverse(a).expect("checked by transform");
        let b = DMatrix::from_fn(n, n, |i, j| ainv[i][j] as f64);
        let d: Vec<f64> = (0..n)
            .map(|i| -(0..n).map(|j| ainv[i][j] as f64 * c[j] as f64).sum::<f64>())
            .collect();
        Ok(PotentialSpec {
            polytope,
            phi: self.phi.compose_affine(&b, &d),
            psi: self.psi.compose_affine(&b, &d),
            guillemin: self.guillemin,
        })
    }

    pub fn ground_state(&self, s: f64, k: i64, m: &[i64]) -> Result<GroundState<'_>, PotentialError> {
        GroundState::new(self, s, k, m)
    }

    /// Checks that m/k lies in P exactly.
    pub fn mode_in_polytope(&self, k: i64, m: &[i64]) -> bool {
        let b: Vec<Rational> = m.iter().map(|&mi| Rational::new(mi, k)).collect();
        self.polytope.contains(&b)
    }
}

/// Result of [`PotentialSpec::boundary_decomposition`]; all matrices in chart coordinates.
#[derive(Clone, Debug)]
pub struct BoundaryDecomposition {
    pub singular: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

/// u_s for a fixed s.
#[derive(Clone, Copy, Debug)]
pub struct FamilyMember<'a> {
    pub spec: &'a PotentialSpec,
    pub s: f64,
}

impl SymplecticPotential for FamilyMember<'_> {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn jet(&self, x: &[f64], order: usize) -> Result<Jet, PotentialError> {
        let mut j = self.spec.base_jet(x, order)?;
        j.axpy(1.0 / self.s, &Jet::of_polynomial(&self.spec.psi, x, order));
        Ok(j)
    }

    fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.spec.polytope.min_slack(x)
    }
}

impl SymplecticPotential for PotentialSpec {
    fn dim(&self) -> usize {
        self.polytope.dim()
    }

    /// The s-independent part a·v_P + φ (ψ is ignored).
    fn jet(&self, x: &[f64], order: usize) -> Result<Jet, PotentialError> {
        self.base_jet(x, order)
    }

    fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.polytope.min_slack(x)
    }
}
