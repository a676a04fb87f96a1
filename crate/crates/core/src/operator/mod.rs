//! Fourier-mode reduction of the ∂̄-Laplacian and its P1 discretization.
//!
//! For a torus character m ∈ ℤⁿ the level-k sector of the frame-bundle
//! Laplacian becomes the scalar operator on P
//!
//! ```text
//! L φ = −div(G_s⁻¹ ∇φ) + [ (m − kx)ᵀ G_s (m − kx) + k² ] φ
//! ```
//!
//! with natural boundary conditions, and 2Δ_∂̄ = L − (k² + kn) on that sector.

mod eigen;
mod mesh;
pub mod sparse;

pub use eigen::{dense_eigs, lowest_eigs, residual, subspace_eigs, EigenError, EigenPairs, DENSE_LIMIT};
pub use mesh::{build_graded_mesh, layered_mesh, build_mesh, quadrature, refine_triangulation, Grading, Mesh, QuadRule};

use crate::polytope::{DelzantPolytope, PolytopeError};
use crate::potential::{hessian_data, PotentialError, PotentialSpec};
use nalgebra::DMatrix;
use serde::Serialize;
use sparse::Csr;

/// Potential values above this at a quadrature point abort assembly.
pub const COEFFICIENT_LIMIT: f64 = 1e14;
/// Interval grading used by the solvers: cells of size ~h² at ∂P, where φ_m behaves like √ℓ.
pub const SOLVER_GRADING: Grading = Grading::Power { beta: 0.5, h_min: 0.0 };

/// Width of the graded boundary strip of 2D solver meshes.
pub const SOLVER_LAYER: f64 = 0.1;

/// Solver mesh with cell diameters ≤ h: [`SOLVER_GRADING`] on intervals,
/// [`layered_mesh`] with [`SOLVER_LAYER`] on polygons.
pub fn solver_mesh(p: &DelzantPolytope, h: f64) -> Result<Mesh, PolytopeError> {
    match p.dim() {
        2 => layered_mesh(p, h, SOLVER_LAYER),
        _ => build_graded_mesh(p, h, SOLVER_GRADING),
    }
}

/// Allowed undershoot of a ∂̄-eigenvalue below zero.
pub const NEGATIVE_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum OperatorError {
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error("mass matrix is not positive definite")]
    NotPositiveDefiniteMass,
    #[error("potential {value:e} at {x:?} exceeds the coefficient limit")]
    CoefficientOverflow { x: Vec<f64>, value: f64 },
    #[error("quadrature point on the boundary of P")]
    QuadratureOnBoundary,
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("negative ∂̄-eigenvalue {0:e}")]
    NegativeEigenvalue(f64),
    #[error("mode has length {0}, expected {1}")]
    ModeLength(usize, usize),
}

fn weight(k: i64, m: &[i64], x: &[f64]) -> Vec<f64> {
    m.iter().zip(x).map(|(&mi, &xi)| mi as f64 - k as f64 * xi).collect()
}

fn quad_form(g: &DMatrix<f64>, w: &[f64]) -> f64 {
    let n = w.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += w[i] * g[(i, j)] * w[j];
        }
    }
    acc
}

/// Diffusion G_s⁻¹(x) and potential V(x) of the mode-m operator.
pub fn reduced_coefficients(
    spec: &PotentialSpec,
    s: f64,
    k: i64,
    m: &[i64],
    x: &[f64],
) -> Result<(DMatrix<f64>, f64), OperatorError> {
    if m.len() != spec.dim() {
        return Err(OperatorError::ModeLength(m.len(), spec.dim()));
    }
    let h = hessian_data(&spec.at(s), s, x, 2)?;
    let v = quad_form(&h.g, &weight(k, m, x)) + (k * k) as f64;
    Ok((h.g_inv, v))
}

#[derive(Clone, Debug)]
struct QPoint {
    cell: usize,
    bary: [f64; 3],
    /// weight × cell measure
    w: f64,
    x: Vec<f64>,
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
}

/// Metric data at every quadrature point of a mesh for one (spec, s),
/// shared by the assemblies of all (k, m).
#[derive(Clone, Debug)]
pub struct OperatorContext<'a> {
    pub mesh: &'a Mesh,
    pub s: f64,
    qp: Vec<QPoint>,
    grads: Vec<Vec<[f64; 2]>>,
}

impl<'a> OperatorContext<'a> {
    pub fn new(spec: &PotentialSpec, s: f64, mesh: &'a Mesh) -> Result<Self, OperatorError> {
        if mesh.dim != spec.dim() {
            return Err(OperatorError::Polytope(PolytopeError::DimensionUnsupported(mesh.dim)));
        }
        let rule = quadrature(mesh.dim);
        let fam = spec.at(s);
        let mut qp = Vec::with_capacity(rule.len() * mesh.n_cells());
        let mut grads = Vec::with_capacity(mesh.n_cells());
        for c in 0..mesh.n_cells() {
            let meas = mesh.cell_measure(c);
            grads.push(mesh.gradients(c));
            for r in &rule {
                let x = mesh.point(c, &r.bary);
                if spec.polytope.min_slack(&x) <= 0.0 {
                    return Err(OperatorError::QuadratureOnBoundary);
                }
                let h = hessian_data(&fam, s, &x, 2)?;
                qp.push(QPoint {
                    cell: c,
                    bary: r.bary,
                    w: r.weight * meas,
                    x,
                    g: h.g,
                    g_inv: h.g_inv,
                });
            }
        }
        Ok(OperatorContext { mesh, s, qp, grads })
    }

    /// Stiffness and mass of the mode-m operator at level k.
    pub fn assemble(&self, k: i64, m: &[i64]) -> Result<ReducedOperator, OperatorError> {
        let dim = self.mesh.dim;
        if m.len() != dim {
            return Err(OperatorError::ModeLength(m.len(), dim));
        }
        let nv = dim + 1;
        let nq = self.qp.len() / self.mesh.n_cells().max(1);
        let mut kt = Vec::with_capacity(self.mesh.n_cells() * nv * nv);
        let mut mt = Vec::with_capacity(self.mesh.n_cells() * nv * nv);
        let k2 = (k * k) as f64;
        for c in 0..self.mesh.n_cells() {
            let verts = self.mesh.cell(c);
            let gr = &self.grads[c];
            let mut kl = [[0.0; 3]; 3];
            let mut ml = [[0.0; 3]; 3];
            for q in &self.qp[c * nq..(c + 1) * nq] {
                debug_assert_eq!(q.cell, c);
                let v = quad_form(&q.g, &weight(k, m, &q.x)) + k2;
                if !(v <= COEFFICIENT_LIMIT) {
                    return Err(OperatorError::CoefficientOverflow { x: q.x.clone(), value: v });
                }
                for i in 0..nv {
                    for j in i..nv {
                        let mut a = 0.0;
                        for p in 0..dim {
                            for r in 0..dim {
                                a += gr[i][p] * q.g_inv[(p, r)] * gr[j][r];
                            }
                        }
                        let phi = q.bary[i] * q.bary[j];
                        kl[i][j] += q.w * (a + v * phi);
                        ml[i][j] += q.w * phi;
                    }
                }
            }
            for i in 0..nv {
                for j in 0..nv {
                    let (a, b) = (i.min(j), i.max(j));
                    kt.push((verts[i], verts[j], kl[a][b]));
                    mt.push((verts[i], verts[j], ml[a][b]));
                }
            }
        }
        let n = self.mesh.n_nodes();
        Ok(ReducedOperator {
            s: self.s,
            k,
            mode: m.to_vec(),
            stiffness: Csr::from_triplets(n, &kt),
            mass: Csr::from_triplets(n, &mt),
            h: self.mesh.h_max(),
        })
    }

    /// Quadrature points x_q with the contributions w_q·v(x_q)² to ∫ v².
    pub fn weighted_squares<'b>(&'b self, v: &'b [f64]) -> impl Iterator<Item = (&'b [f64], f64)> + 'b {
        self.qp.iter().map(move |q| {
            let val: f64 = self.mesh.cell(q.cell).iter().enumerate().map(|(i, &n)| q.bary[i] * v[n]).sum();
            (q.x.as_slice(), q.w * val * val)
        })
    }

    /// ∫ v² over the quadrature points where `inside` holds, divided by ∫ v².
    pub fn mass_fraction(&self, v: &[f64], inside: impl Fn(&[f64]) -> bool) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (x, c) in self.weighted_squares(v) {
            den += c;
            if inside(x) {
                num += c;
            }
        }
        num / den
    }
}

#[derive(Clone, Debug)]
pub struct ReducedOperator {
    pub s: f64,
    pub k: i64,
    pub mode: Vec<i64>,
    pub stiffness: Csr,
    pub mass: Csr,
    /// Longest mesh edge.
    pub h: f64,
}

impl ReducedOperator {
    pub fn dofs(&self) -> usize {
        self.stiffness.n
    }

    pub fn rayleigh_quotient(&self, v: &[f64]) -> f64 {
        let kv = self.stiffness.apply(v);
        let mv = self.mass.apply(v);
        let a: f64 = kv.iter().zip(v).map(|(x, y)| x * y).sum();
        let b: f64 = mv.iter().zip(v).map(|(x, y)| x * y).sum();
        a / b
    }
}

pub fn assemble(spec: &PotentialSpec, s: f64, k: i64, m: &[i64], mesh: &Mesh) -> Result<ReducedOperator, OperatorError> {
    OperatorContext::new(spec, s, mesh)?.assemble(k, m)
}

/// Eigenvalues of the reduced operator, ascending with multiplicity.
#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    #[serde(skip)]
    pub vectors: Vec<Vec<f64>>,
}

fn eigen_error(e: EigenError) -> OperatorError {
    match e {
        EigenError::CholeskyFailure(msg) if msg.contains("mass") => OperatorError::NotPositiveDefiniteMass,
        other => OperatorError::Eigen(other),
    }
}

pub fn solve_eigs(op: &ReducedOperator, count: usize) -> Result<Spectrum, OperatorError> {
    // V ≥ k² pointwise, so K − (k² − ½)M is positive definite
    let shift = (op.k * op.k) as f64 - 0.5;
    let e = lowest_eigs(&op.stiffness, &op.mass, count, shift).map_err(eigen_error)?;
    Ok(Spectrum {
        eigenvalues: e.values,
        residuals: e.residuals,
        vectors: e.vectors,
    })
}

/// ∂̄-Laplacian eigenvalues of one Fourier mode.
#[derive(Clone, Debug, Serialize)]
pub struct DbarSpectrum {
    pub s: f64,
    pub k: i64,
    pub mode: Vec<i64>,
    pub dbar_eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub dofs: usize,
    pub h: f64,
    #[serde(skip)]
    pub vectors: Vec<Vec<f64>>,
}

impl DbarSpectrum {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spectrum serialization")
    }
}

/// Maps reduced eigenvalues λ̂ to (λ̂ − k² − kn)/2.
pub fn to_dbar(op: &ReducedOperator, spec: Spectrum) -> Result<DbarSpectrum, OperatorError> {
    let k = op.k as f64;
    let n = op.mode.len() as f64;
    let mut vals = Vec::with_capacity(spec.eigenvalues.len());
    for &l in &spec.eigenvalues {
        let d = 0.5 * (l - k * k - k * n);
        if d < -NEGATIVE_TOL {
            return Err(OperatorError::NegativeEigenvalue(d));
        }
        vals.push(d.max(0.0));
    }
    Ok(DbarSpectrum {
        s: op.s,
        k: op.k,
        mode: op.mode.clone(),
        dbar_eigenvalues: vals,
        residuals: spec.residuals,
        dofs: op.dofs(),
        h: op.h,
        vectors: spec.vectors,
    })
}

pub fn dbar_spectrum(
    spec: &PotentialSpec,
    s: f64,
    k: i64,
    m: &[i64],
    mesh: &Mesh,
    count: usize,
) -> Result<DbarSpectrum, OperatorError> {
    let op = assemble(spec, s, k, m, mesh)?;
    let sp = solve_eigs(&op, count)?;
    to_dbar(&op, sp)
}

/// Integer vectors m with ν_r·m ≥ k·λ_r − margin for every facet.
pub fn mode_set(p: &DelzantPolytope, k: i64, margin: i64) -> Vec<Vec<i64>> {
    let n = p.dim();
    let mut lo = vec![i64::MAX; n];
    let mut hi = vec![i64::MIN; n];
    for v in p.vertices() {
        for d in 0..n {
            let x = v[d] * k;
            lo[d] = lo[d].min(x.floor().to_integer() - margin);
            hi[d] = hi[d].max(x.ceil().to_integer() + margin);
        }
    }
    // the inflated polytope fits in a box grown by margin·n in each direction
    for d in 0..n {
        lo[d] -= margin * n as i64;
        hi[d] += margin * n as i64;
    }
    let mut out = Vec::new();
    crate::polytope::lattice::for_each_box_point(&lo, &hi, |m| {
        let ok = p
            .facets()
            .iter()
            .all(|f| f.normal.iter().zip(m).map(|(a, b)| a * b).sum::<i64>() >= k * f.offset - margin);
        if ok {
            out.push(m.to_vec());
        }
    });
    out
}

/// Nodal values of the closed-form ground state, scaled to max 1. Boundary
/// nodes are evaluated a hair inside P.
pub fn interpolate_ground_state(
    spec: &PotentialSpec,
    s: f64,
    k: i64,
    m: &[i64],
    mesh: &Mesh,
) -> Result<Vec<f64>, OperatorError> {
    let gs = spec.ground_state(s, k, m)?;
    let c: Vec<f64> = spec.polytope.centroid().iter().map(crate::polytope::lattice::rat_to_f64).collect();
    let pts: Vec<Vec<f64>> = (0..mesh.n_nodes())
        .map(|i| {
            let x = mesh.node(i);
            if spec.polytope.min_slack(x) > 1e-12 {
                x.to_vec()
            } else {
                x.iter().zip(&c).map(|(a, b)| a + 1e-13 * (b - a)).collect()
            }
        })
        .collect();
    Ok(gs.normalized_values(&pts)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PolynomialFn;

    fn cp1() -> PotentialSpec {
        PotentialSpec::standard(DelzantPolytope::interval(1))
    }

    #[test]
    fn coefficients_examples() {
        let spec = cp1().with_guillemin(1.0);
        let (d, v) = reduced_coefficients(&spec, 0.1, 1, &[0], &[0.5]).unwrap();
        assert!((v - 4.5).abs() < 1e-12);
        assert!((d[(0, 0)] - 1.0 / 14.0).abs() < 1e-12);
        let (_, v) = reduced_coefficients(&cp1(), 0.3, 2, &[1], &[0.5]).unwrap();
        assert_eq!(v, 4.0);
    }

    #[test]
    fn potential_lower_bound() {
        let spec = PotentialSpec::standard(DelzantPolytope::simplex(2, 1));
        let s = 0.2;
        for x in [[0.1, 0.2], [0.6, 0.3], [0.05, 0.05]] {
            for (k, m) in [(1, [0, 0]), (2, [1, 3]), (1, [-1, 2])] {
                let (_, v) = reduced_coefficients(&spec, s, k, &m, &x).unwrap();
                let d2: f64 = (0..2).map(|i| (x[i] - m[i] as f64 / k as f64).powi(2)).sum();
                let kf = k as f64;
                assert!(v >= kf * kf + kf * kf * d2 / s - 1e-9);
            }
        }
    }

    #[test]
    fn assembly_is_symmetric_and_positive() {
        let spec = PotentialSpec::standard(DelzantPolytope::simplex(2, 1));
        let mesh = build_mesh(&spec.polytope, 0.2, 1.0).unwrap();
        let op = assemble(&spec, 0.5, 1, &[1, 0], &mesh).unwrap();
        assert!(op.stiffness.is_symmetric() && op.mass.is_symmetric());
        let sp = solve_eigs(&op, 4).unwrap();
        assert!(sp.eigenvalues[0] >= 1.0 - 1e-6);
        assert!(sp.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn sphere_ground_level() {
        let mesh = solver_mesh(&DelzantPolytope::interval(1), 1.0 / 400.0).unwrap();
        let spec = cp1();
        for m in [0, 1] {
            let d = dbar_spectrum(&spec, 1.0, 1, &[m], &mesh, 3).unwrap();
            assert!(d.dbar_eigenvalues[0] < 1e-4, "{:?}", d.dbar_eigenvalues);
            assert!(d.residuals.iter().all(|&r| r < 1e-8), "{:?}", d.residuals);
        }
    }

    #[test]
    fn outside_mode_grows() {
        let spec = cp1();
        let mut prev = 0.0;
        for s in [1.0f64, 0.3, 0.1] {
            let mesh = solver_mesh(&spec.polytope, s.sqrt() / 40.0).unwrap();
            let d = dbar_spectrum(&spec, s, 1, &[2], &mesh, 1).unwrap();
            assert!(d.dbar_eigenvalues[0] > prev);
            prev = d.dbar_eigenvalues[0];
        }
    }

    #[test]
    fn mode_sets() {
        let seg = DelzantPolytope::interval(1);
        assert_eq!(mode_set(&seg, 2, 0), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(mode_set(&seg, 2, 1).len(), 5);
        assert_eq!(mode_set(&seg, 2, 1)[0], vec![-1]);
        let tri = DelzantPolytope::simplex(2, 1);
        let mut ms = mode_set(&tri, 1, 0);
        ms.sort();
        assert_eq!(ms, vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn spectrum_json_fields() {
        let spec = PotentialSpec::new_unchecked(DelzantPolytope::interval(1), PolynomialFn::zero(1), PolynomialFn::half_norm_sq(1));
        let mesh = solver_mesh(&spec.polytope, 0.05).unwrap();
        let d = dbar_spectrum(&spec, 0.5, 1, &[0], &mesh, 2).unwrap();
        let v: serde_json::Value = serde_json::from_str(&d.to_json()).unwrap();
        for key in ["s", "k", "mode", "dbar_eigenvalues", "residuals", "dofs", "h"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
