//! Gaussian–Neumann oscillators on the tangent cones at Bohr–Sommerfeld points.
//!
//! At b with chart coordinates y (first m̃ of them constrained y_i ≥ 0) and
//! A0 = Hess ψ(b) in that chart, the rescaled variable ξ = s^{−1/2}A0^{1/2}y
//! lives on the cone C = A0^{1/2}(ℝ≥0^m̃ × ℝ^{n−m̃}). The limit operator is
//! Σ(−∂²_{ξ_i} + 2kξ_i∂_{ξ_i}) on L²(C, e^{−k|ξ|²}dξ) with Neumann condition.

use crate::operator::{lowest_eigs, quadrature, refine_triangulation, sparse::Csr, EigenError, Mesh};
use crate::polytope::{lattice::rat_to_f64, BsPoint, LocalChart, PolytopeError};
use crate::potential::PotentialSpec;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, thiserror::Error)]
pub enum LimitError {
    #[error("chart construction failed: {0}")]
    ChartFailure(#[from] PolytopeError),
    #[error("cone is not separable")]
    NotSeparable,
    #[error("truncation radius too small: lowest eigenvalue {0:e}")]
    TruncationTooSmall(f64),
    #[error("numeric cone spectra need n ≤ 2, got {0}")]
    DimensionUnsupported(usize),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("Hess ψ is not positive definite at b")]
    NotPositiveDefinite,
}

/// Tangent cone at a Bohr–Sommerfeld point with its Gaussian weight.
#[derive(Clone, Debug)]
pub struct ConeModel {
    pub bs_point: BsPoint,
    pub chart: LocalChart,
    /// Codimension m̃ of the face containing b.
    pub codim: usize,
    /// Hess ψ(b) in chart coordinates.
    pub a0: DMatrix<f64>,
    /// Unit inward normals A0^{−1/2}e_i / |·| of the facets of the cone.
    pub normals: Vec<DVector<f64>>,
    pub k: i64,
}

impl ConeModel {
    pub fn dim(&self) -> usize {
        self.a0.nrows()
    }

    /// Opening angle of a two-dimensional corner cone: π − ∠(n₁, n₂).
    pub fn opening_angle(&self) -> Option<f64> {
        if self.dim() == 2 && self.codim == 2 {
            let c = self.normals[0].dot(&self.normals[1]).clamp(-1.0, 1.0);
            Some(PI - c.acos())
        } else {
            None
        }
    }
}

fn sym_sqrt(a: &DMatrix<f64>, power: f64) -> Result<DMatrix<f64>, LimitError> {
    let e = a.clone().symmetric_eigen();
    if e.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(LimitError::NotPositiveDefinite);
    }
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|l| l.powf(power)));
    Ok(&e.eigenvectors * d * e.eigenvectors.transpose())
}

pub fn cone_at(spec: &PotentialSpec, b: &BsPoint) -> Result<ConeModel, LimitError> {
    let chart = LocalChart::at(&spec.polytope, &b.point)?;
    let n = spec.dim();
    let x = b.point_f64();
    let ainv = DMatrix::from_fn(n, n, |i, j| chart.inverse_map()[i][j] as f64);
    let a0 = ainv.transpose() * spec.psi_hessian(&x) * &ainv;
    let a0 = 0.5 * (&a0 + a0.transpose());
    let m = chart.local_codim;
    let half = sym_sqrt(&a0, -0.5)?;
    let normals = (0..m)
        .map(|i| {
            let v = half.column(i).into_owned();
            let nv = v.norm();
            v / nv
        })
        .collect();
    Ok(ConeModel {
        bs_point: b.clone(),
        chart,
        codim: m,
        a0,
        normals,
        k: b.level,
    })
}

/// Facet normals pairwise orthogonal (always true for m̃ ≤ 1).
pub fn is_separable(cone: &ConeModel) -> bool {
    if cone.codim <= 1 {
        return true;
    }
    let inv = match cone.a0.clone().try_inverse() {
        Some(i) => i,
        None => return false,
    };
    let scale = inv.amax();
    (0..cone.codim).all(|i| (0..cone.codim).all(|j| i == j || inv[(i, j)].abs() <= 1e-12 * scale))
}

/// Spectrum of ½Δ^k on a cone, grouped by value.
#[derive(Clone, Debug, Serialize)]
pub struct LimitSpectrum {
    pub b: Vec<String>,
    pub k: i64,
    pub exact: bool,
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_radius: Option<f64>,
}

impl LimitSpectrum {
    /// Ascending list with each value repeated by multiplicity.
    pub fn expanded(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(&v, &m)| std::iter::repeat(v).take(m))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spectrum serialization")
    }
}

/// #{κ ∈ ℤ≥0ⁿ : 2(κ₁+…+κ_m) + κ_{m+1}+…+κ_n = N}.
pub fn composition_count(n: usize, m: usize, total: usize) -> usize {
    // dp over coordinates
    let mut ways = vec![0usize; total + 1];
    ways[0] = 1;
    for i in 0..n {
        let step = if i < m { 2 } else { 1 };
        let mut next = vec![0usize; total + 1];
        for (t, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            let mut u = t;
            while u <= total {
                next[u] += w;
                u += step;
            }
        }
        ways = next;
    }
    ways[total]
}

fn label(b: &BsPoint) -> Vec<String> {
    b.point.iter().map(|r| r.to_string()).collect()
}

pub fn exact_cone_spectrum(cone: &ConeModel, k: i64, n_max: usize) -> Result<LimitSpectrum, LimitError> {
    if !is_separable(cone) {
        return Err(LimitError::NotSeparable);
    }
    let n = cone.dim();
    let mut eigenvalues = Vec::new();
    let mut multiplicities = Vec::new();
    for total in 0..=n_max {
        let c = composition_count(n, cone.codim, total);
        if c > 0 {
            eigenvalues.push((k as usize * total) as f64);
            multiplicities.push(c);
        }
    }
    Ok(LimitSpectrum {
        b: label(&cone.bs_point),
        k,
        exact: true,
        eigenvalues,
        multiplicities,
        truncation_radius: None,
    })
}

/// Default truncation radius √(30/k).
pub fn default_radius(k: i64) -> f64 {
    (30.0 / k as f64).sqrt()
}

/// Relative size of the default mesh: h = R·this.
pub const CONE_MESH_FRACTION: f64 = 1.0 / 60.0;

/// Mesh of the truncated cone in a canonical position determined by
/// (n, m̃, opening angle) only.
pub fn cone_mesh(cone: &ConeModel, radius: f64, h: f64) -> Result<Mesh, LimitError> {
    match cone.dim() {
        1 => {
            let lo = if cone.codim == 1 { 0.0 } else { -radius };
            let cells = ((radius - lo) / h).ceil() as usize;
            let coords: Vec<f64> = (0..=cells).map(|i| lo + (radius - lo) * i as f64 / cells as f64).collect();
            Ok(Mesh {
                dim: 1,
                cells: (0..cells).flat_map(|i| [i, i + 1]).collect(),
                coords,
                target_h: h,
            })
        }
        2 => {
            let alpha = match cone.codim {
                0 => 2.0 * PI,
                1 => PI,
                _ => cone.opening_angle().expect("corner cone"),
            };
            Ok(sector_mesh(alpha, radius, h))
        }
        n => Err(LimitError::DimensionUnsupported(n)),
    }
}

/// Sector {r ≤ R, |θ| ≤ α/2} (full disk when α = 2π), fan from the origin.
pub fn sector_mesh(alpha: f64, radius: f64, h: f64) -> Mesh {
    let full = (alpha - 2.0 * PI).abs() < 1e-12;
    let segs = ((alpha / (PI / 8.0)).ceil() as usize).max(2);
    let mut pts = vec![[0.0, 0.0]];
    let npts = if full { segs } else { segs + 1 };
    for i in 0..npts {
        let t = -0.5 * alpha + alpha * i as f64 / segs as f64;
        pts.push([radius * t.cos(), radius * t.sin()]);
    }
    let tris = (0..segs)
        .map(|i| {
            let a = 1 + i;
            let b = if full { 1 + (i + 1) % segs } else { 2 + i };
            [a, b, 0]
        })
        .collect();
    refine_triangulation(pts, tris, |_| h)
}

/// Weighted stiffness and mass with density e^{−k|ξ|²}.
pub fn weighted_matrices(mesh: &Mesh, k: i64) -> (Csr, Csr) {
    let rule = quadrature(mesh.dim);
    let nv = mesh.dim + 1;
    let mut kt = Vec::with_capacity(mesh.n_cells() * nv * nv);
    let mut mt = Vec::with_capacity(mesh.n_cells() * nv * nv);
    for c in 0..mesh.n_cells() {
        let meas = mesh.cell_measure(c);
        let g = mesh.gradients(c);
        let verts = mesh.cell(c);
        let mut kl = [[0.0; 3]; 3];
        let mut ml = [[0.0; 3]; 3];
        for r in &rule {
            let x = mesh.point(c, &r.bary);
            let w = r.weight * meas * (-(k as f64) * x.iter().map(|v| v * v).sum::<f64>()).exp();
            for i in 0..nv {
                for j in i..nv {
                    kl[i][j] += w * (0..mesh.dim).map(|d| g[i][d] * g[j][d]).sum::<f64>();
                    ml[i][j] += w * r.bary[i] * r.bary[j];
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
    let n = mesh.n_nodes();
    (Csr::from_triplets(n, &kt), Csr::from_triplets(n, &mt))
}

/// Groups an ascending list into values and multiplicities (relative tolerance `tol`).
pub fn group_values(vals: &[f64], tol: f64) -> (Vec<f64>, Vec<usize>) {
    let mut out: Vec<(f64, usize, f64)> = Vec::new();
    for &v in vals {
        match out.last_mut() {
            Some((first, m, sum)) if (v - *first).abs() <= tol * first.abs().max(1.0) => {
                *m += 1;
                *sum += v;
            }
            _ => out.push((v, 1, v)),
        }
    }
    (out.iter().map(|(_, m, s)| s / *m as f64).collect(), out.iter().map(|(_, m, _)| *m).collect())
}

pub fn numeric_cone_spectrum(cone: &ConeModel, k: i64, count: usize, radius: Option<f64>) -> Result<LimitSpectrum, LimitError> {
    let r = radius.unwrap_or_else(|| default_radius(k));
    numeric_cone_spectrum_with(cone, k, count, r, r * CONE_MESH_FRACTION)
}

pub fn numeric_cone_spectrum_with(cone: &ConeModel, k: i64, count: usize, radius: f64, h: f64) -> Result<LimitSpectrum, LimitError> {
    let h = if cone.dim() == 1 { h.min(radius / 400.0) } else { h };
    let mesh = cone_mesh(cone, radius, h)?;
    let (kk, mm) = weighted_matrices(&mesh, k);
    let e = lowest_eigs(&kk, &mm, count, -1.0)?;
    let vals: Vec<f64> = e.values.iter().map(|v| 0.5 * v).collect();
    if vals[0].abs() > 1e-6 {
        return Err(LimitError::TruncationTooSmall(vals[0]));
    }
    let (eigenvalues, multiplicities) = group_values(&vals, 1e-2);
    Ok(LimitSpectrum {
        b: label(&cone.bs_point),
        k,
        exact: false,
        eigenvalues,
        multiplicities,
        truncation_radius: Some(radius),
    })
}

/// Closed-form spectrum of ½Δ^k on a planar wedge of opening α with Neumann
/// sides: k(2p + jπ/α), p, j ≥ 0, returned ascending with repetition.
pub fn wedge_spectrum(alpha: f64, k: i64, count: usize) -> Vec<f64> {
    let nu = PI / alpha;
    let mut v = Vec::new();
    let top = count as f64 * 2.0 + 2.0;
    for p in 0..=count {
        for j in 0..=count {
            let l = 2.0 * p as f64 + j as f64 * nu;
            if l <= top {
                v.push(k as f64 * l);
            }
        }
    }
    v.sort_by(f64::total_cmp);
    v.truncate(count);
    v
}

/// ξ = s^{−1/2}A0^{1/2}y for y in chart coordinates.
pub fn rescale_to_limit(a0: &DMatrix<f64>, s: f64, y: &[f64]) -> Result<Vec<f64>, LimitError> {
    let r = sym_sqrt(a0, 0.5)?;
    Ok((r * DVector::from_column_slice(y) / s.sqrt()).iter().copied().collect())
}

pub fn rescale_from_limit(a0: &DMatrix<f64>, s: f64, xi: &[f64]) -> Result<Vec<f64>, LimitError> {
    let r = sym_sqrt(a0, -0.5)?;
    Ok((r * DVector::from_column_slice(xi) * s.sqrt()).iter().copied().collect())
}

/// Predicted spectrum of ½Δ^k at b, exact when separable.
#[derive(Clone, Debug, Serialize)]
pub struct Prediction {
    pub point: Vec<f64>,
    pub mode: Vec<i64>,
    pub spectrum: LimitSpectrum,
}

/// One prediction per b ∈ B_k, in `bs_points` order.
pub fn predicted_limit(spec: &PotentialSpec, k: i64, count: usize) -> Result<Vec<Prediction>, LimitError> {
    let mut out = Vec::new();
    for b in spec.polytope.bs_points(k)? {
        let cone = cone_at(spec, &b)?;
        let spectrum = if is_separable(&cone) {
            // enough levels to hold `count` eigenvalues
            let mut n_max = count;
            loop {
                let sp = exact_cone_spectrum(&cone, k, n_max)?;
                if sp.multiplicities.iter().sum::<usize>() >= count {
                    break sp;
                }
                n_max += count;
            }
        } else {
            numeric_cone_spectrum(&cone, k, count, None)?
        };
        out.push(Prediction {
            point: b.point.iter().map(rat_to_f64).collect(),
            mode: b.mode(),
            spectrum,
        });
    }
    Ok(out)
}
