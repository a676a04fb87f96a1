//! Delzant lattice polytopes with exact rational arithmetic.
//!
//! A polytope is stored as the list of facet inequalities `ν_r·x ≥ λ_r`
//! with primitive integer normals. Validation enumerates vertices by
//! brute force over n-subsets of facets, which is fine for the small
//! polytopes this crate deals with.

mod chart;
pub mod lattice;

pub use chart::LocalChart;
pub use lattice::Rational;

use lattice::{
    ceil_rat, dot_int_rat, floor_rat, for_each_box_point, for_each_subset, frac, gcd_all,
    int_det, kernel_vector, lcm_denominators, rank, rat_to_f64, solve,
};
use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub offset: i64,
}

/// One failed invariant found during validation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    Unbounded,
    EmptyInterior,
    NonPrimitiveNormal(usize),
    RedundantFacet(usize),
    NotDelzant(usize),
    Malformed(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Unbounded => write!(f, "polytope is unbounded"),
            Violation::EmptyInterior => write!(f, "polytope has empty interior"),
            Violation::NonPrimitiveNormal(r) => write!(f, "normal of facet {r} is not primitive"),
            Violation::RedundantFacet(r) => write!(f, "facet {r} is redundant"),
            Violation::NotDelzant(v) => write!(f, "vertex {v} violates the Delzant condition"),
            Violation::Malformed(m) => write!(f, "malformed input: {m}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PolytopeError {
    #[error("invalid polytope: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("face enumeration supports dimension at most 3, got {0}")]
    DimensionUnsupported(usize),
    #[error("point lies outside the polytope")]
    PointOutside,
    #[error("level must be at least 1")]
    BadLevel,
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawPolytope {
    dim: usize,
    facets: Vec<Facet>,
}

/// A validated Delzant polytope `P = {x : ν_r·x ≥ λ_r}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolytope", into = "RawPolytope")]
pub struct DelzantPolytope {
    dim: usize,
    facets: Vec<Facet>,
    vertices: Vec<Vec<Rational>>,
    vertex_facets: Vec<Vec<usize>>,
}

impl TryFrom<RawPolytope> for DelzantPolytope {
    type Error = PolytopeError;
    fn try_from(raw: RawPolytope) -> Result<Self, Self::Error> {
        validate_delzant(raw.dim, raw.facets)
    }
}

impl From<DelzantPolytope> for RawPolytope {
    fn from(p: DelzantPolytope) -> Self {
        let mut facets = p.facets;
        facets.sort_by(|a, b| a.normal.cmp(&b.normal).then(a.offset.cmp(&b.offset)));
        RawPolytope { dim: p.dim, facets }
    }
}

/// A face of P, identified by the facets containing it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Face {
    pub active: Vec<usize>,
    pub codim: usize,
    pub vertices: Vec<usize>,
    /// Centroid of the face vertices, a relative-interior point.
    pub point: Vec<Rational>,
}

/// A Bohr–Sommerfeld point b ∈ P ∩ (1/k)ℤⁿ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BsPoint {
    #[serde(serialize_with = "ser_rational_vec")]
    pub point: Vec<Rational>,
    pub level: i64,
    pub strict_level: i64,
    pub face_codim: usize,
    pub active: Vec<usize>,
}

fn ser_rational_vec<S: serde::Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&x.to_string())?;
    }
    seq.end()
}

impl BsPoint {
    /// The Fourier mode m = k·b attached to this point.
    pub fn mode(&self) -> Vec<i64> {
        self.point
            .iter()
            .map(|b| (*b * self.level).to_integer())
            .collect()
    }

    pub fn point_f64(&self) -> Vec<f64> {
        self.point.iter().map(rat_to_f64).collect()
    }
}

/// Validates raw facet data and returns the polytope or every violation found.
pub fn validate_delzant(dim: usize, facets: Vec<Facet>) -> Result<DelzantPolytope, PolytopeError> {
    let invalid = |v: Violation| Err(PolytopeError::Invalid(vec![v]));
    if dim == 0 {
        return invalid(Violation::Malformed("dimension must be at least 1".into()));
    }
    if let Some(r) = facets.iter().position(|f| f.normal.len() != dim) {
        return invalid(Violation::Malformed(format!("facet {r} has wrong normal length")));
    }
    let mut violations = Vec::new();
    for (r, f) in facets.iter().enumerate() {
        if gcd_all(&f.normal) != 1 {
            violations.push(Violation::NonPrimitiveNormal(r));
        }
    }
    if facets.iter().any(|f| f.normal.iter().all(|&c| c == 0)) {
        return Err(PolytopeError::Invalid(violations));
    }
    if is_unbounded(dim, &facets) {
        violations.push(Violation::Unbounded);
        return Err(PolytopeError::Invalid(violations));
    }

    let (vertices, vertex_facets) = enumerate_vertices(dim, &facets);
    if vertices.is_empty() || !has_interior(dim, &facets, &vertices) {
        violations.push(Violation::EmptyInterior);
        return Err(PolytopeError::Invalid(violations));
    }

    for r in 0..facets.len() {
        let duplicate = facets[..r].iter().any(|f| *f == facets[r]);
        let on: Vec<&Vec<Rational>> = vertices
            .iter()
            .zip(&vertex_facets)
            .filter(|(_, act)| act.contains(&r))
            .map(|(v, _)| v)
            .collect();
        if duplicate || affine_rank(&on) < dim {
            violations.push(Violation::RedundantFacet(r));
        }
    }

    for (i, act) in vertex_facets.iter().enumerate() {
        let unimodular = act.len() == dim && {
            let m: Vec<Vec<i64>> = act.iter().map(|&r| facets[r].normal.clone()).collect();
            int_det(&m).abs() == 1
        };
        if !unimodular {
            violations.push(Violation::NotDelzant(i));
        }
    }

    if violations.is_empty() {
        Ok(DelzantPolytope {
            dim,
            facets,
            vertices,
            vertex_facets,
        })
    } else {
        Err(PolytopeError::Invalid(violations))
    }
}

/// The recession cone {y : ν_r·y ≥ 0} is nontrivial iff the normals do not span
/// or some extreme-ray candidate (kernel of n-1 normals) lies in it.
fn is_unbounded(dim: usize, facets: &[Facet]) -> bool {
    let rows: Vec<Vec<Rational>> = facets
        .iter()
        .map(|f| f.normal.iter().map(|&v| Rational::from_integer(v)).collect())
        .collect();
    if rank(&rows) < dim {
        return true;
    }
    let mut found = false;
    for_each_subset(facets.len(), dim - 1, |sub| {
        if found {
            return;
        }
        let m: Vec<Vec<i64>> = sub.iter().map(|&r| facets[r].normal.clone()).collect();
        if let Some(y) = kernel_vector(&m, dim) {
            for sign in [1i64, -1] {
                if facets
                    .iter()
                    .all(|f| f.normal.iter().zip(&y).map(|(a, b)| a * b * sign).sum::<i64>() >= 0)
                {
                    found = true;
                }
            }
        }
    });
    found
}

fn enumerate_vertices(dim: usize, facets: &[Facet]) -> (Vec<Vec<Rational>>, Vec<Vec<usize>>) {
    let mut verts: Vec<Vec<Rational>> = Vec::new();
    for_each_subset(facets.len(), dim, |sub| {
        let a: Vec<Vec<Rational>> = sub
            .iter()
            .map(|&r| facets[r].normal.iter().map(|&v| Rational::from_integer(v)).collect())
            .collect();
        let b: Vec<Rational> = sub.iter().map(|&r| Rational::from_integer(facets[r].offset)).collect();
        if let Some(x) = solve(&a, &b) {
            let inside = facets
                .iter()
                .all(|f| dot_int_rat(&f.normal, &x) >= Rational::from_integer(f.offset));
            if inside && !verts.contains(&x) {
                verts.push(x);
            }
        }
    });
    verts.sort();
    let act = verts
        .iter()
        .map(|v| {
            (0..facets.len())
                .filter(|&r| dot_int_rat(&facets[r].normal, v) == Rational::from_integer(facets[r].offset))
                .collect()
        })
        .collect();
    (verts, act)
}

fn has_interior(dim: usize, facets: &[Facet], vertices: &[Vec<Rational>]) -> bool {
    let c = centroid(dim, vertices.iter());
    facets
        .iter()
        .all(|f| dot_int_rat(&f.normal, &c) > Rational::from_integer(f.offset))
}

fn centroid<'a>(dim: usize, pts: impl Iterator<Item = &'a Vec<Rational>>) -> Vec<Rational> {
    let mut c = vec![Rational::zero(); dim];
    let mut count = 0i64;
    for p in pts {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci += *pi;
        }
        count += 1;
    }
    c.iter().map(|v| *v / count.max(1)).collect()
}

fn affine_rank(pts: &[&Vec<Rational>]) -> usize {
    if pts.is_empty() {
        return 0;
    }
    let diffs: Vec<Vec<Rational>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(pts[0]).map(|(a, b)| *a - *b).collect())
        .collect();
    rank(&diffs) + 1
}

impl DelzantPolytope {
    pub fn new(dim: usize, facets: Vec<Facet>) -> Result<Self, PolytopeError> {
        validate_delzant(dim, facets)
    }

    /// Parses `{"dim": n, "facets": [{"normal": [..], "offset": λ}, ...]}`.
    pub fn from_json(s: &str) -> Result<Self, PolytopeError> {
        let raw: RawPolytope = serde_json::from_str(s)?;
        validate_delzant(raw.dim, raw.facets)
    }

    /// Serialized form with facets sorted by normal.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("polytope serialization")
    }

    /// The segment [0, len].
    pub fn interval(len: i64) -> Self {
        Self::new(
            1,
            vec![
                Facet { normal: vec![1], offset: 0 },
                Facet { normal: vec![-1], offset: -len },
            ],
        )
        .expect("interval")
    }

    /// The standard simplex {x ≥ 0, Σx ≤ scale}.
    pub fn simplex(dim: usize, scale: i64) -> Self {
        let mut facets: Vec<Facet> = (0..dim)
            .map(|i| {
                let mut nu = vec![0; dim];
                nu[i] = 1;
                Facet { normal: nu, offset: 0 }
            })
            .collect();
        facets.push(Facet {
            normal: vec![-1; dim],
            offset: -scale,
        });
        Self::new(dim, facets).expect("simplex")
    }

    /// Hirzebruch trapezoid {x ≥ 0, 0 ≤ y ≤ b, x + a y ≤ c}.
    pub fn hirzebruch(a: i64, b: i64, c: i64) -> Result<Self, PolytopeError> {
        Self::new(
            2,
            vec![
                Facet { normal: vec![1, 0], offset: 0 },
                Facet { normal: vec![0, 1], offset: 0 },
                Facet { normal: vec![0, -1], offset: -b },
                Facet { normal: vec![-1, -a], offset: -c },
            ],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn vertices(&self) -> &[Vec<Rational>] {
        &self.vertices
    }

    /// Facets active at vertex `i`.
    pub fn vertex_facets(&self, i: usize) -> &[usize] {
        &self.vertex_facets[i]
    }

    pub fn vertices_f64(&self) -> Vec<Vec<f64>> {
        self.vertices
            .iter()
            .map(|v| v.iter().map(rat_to_f64).collect())
            .collect()
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        self.facets
            .iter()
            .all(|f| dot_int_rat(&f.normal, x) >= Rational::from_integer(f.offset))
    }

    /// Facets whose inequality is tight at `x`.
    pub fn active_facets(&self, x: &[Rational]) -> Vec<usize> {
        (0..self.facets.len())
            .filter(|&r| dot_int_rat(&self.facets[r].normal, x) == Rational::from_integer(self.facets[r].offset))
            .collect()
    }

    /// Facet slacks ℓ_r(x) = ν_r·x − λ_r.
    pub fn slacks(&self, x: &[f64]) -> Vec<f64> {
        self.facets.iter().map(|f| slack(f, x)).collect()
    }

    pub fn min_slack(&self, x: &[f64]) -> f64 {
        self.facets.iter().map(|f| slack(f, x)).fold(f64::INFINITY, f64::min)
    }

    /// Interior centroid of the vertices.
    pub fn centroid(&self) -> Vec<Rational> {
        centroid(self.dim, self.vertices.iter())
    }

    /// Componentwise bounding box of the vertices.
    pub fn bounding_box(&self) -> (Vec<Rational>, Vec<Rational>) {
        let mut lo = self.vertices[0].clone();
        let mut hi = self.vertices[0].clone();
        for v in &self.vertices {
            for i in 0..self.dim {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        (lo, hi)
    }

    /// Face lattice with one relative-interior point per face.
    pub fn vertices_and_faces(&self) -> Result<Vec<Face>, PolytopeError> {
        if self.dim > 3 {
            return Err(PolytopeError::DimensionUnsupported(self.dim));
        }
        let mut faces = Vec::new();
        for codim in 0..=self.dim {
            for_each_subset(self.facets.len(), codim, |sub| {
                let verts: Vec<usize> = (0..self.vertices.len())
                    .filter(|&i| sub.iter().all(|r| self.vertex_facets[i].contains(r)))
                    .collect();
                if verts.is_empty() {
                    return;
                }
                let point = centroid(self.dim, verts.iter().map(|&i| &self.vertices[i]));
                // A simple polytope meets an m-subset of facets in a face of codim m
                // or not at all; the active set of the centroid certifies this.
                if self.active_facets(&point) != sub {
                    return;
                }
                faces.push(Face {
                    active: sub.to_vec(),
                    codim,
                    vertices: verts,
                    point,
                });
            });
        }
        Ok(faces)
    }

    /// Bohr–Sommerfeld points P ∩ (1/k)ℤⁿ in lexicographic order of k·b.
    pub fn bs_points(&self, k: i64) -> Result<Vec<BsPoint>, PolytopeError> {
        if k < 1 {
            return Err(PolytopeError::BadLevel);
        }
        let (lo, hi) = self.bounding_box();
        let lo: Vec<i64> = lo.iter().map(|v| floor_rat(&(*v * k))).collect();
        let hi: Vec<i64> = hi.iter().map(|v| ceil_rat(&(*v * k))).collect();
        let mut out = Vec::new();
        for_each_box_point(&lo, &hi, |m| {
            let inside = self
                .facets
                .iter()
                .all(|f| f.normal.iter().zip(m).map(|(a, b)| a * b).sum::<i64>() >= k * f.offset);
            if inside {
                let point: Vec<Rational> = m.iter().map(|&mi| Rational::new(mi, k)).collect();
                let active = self.active_facets(&point);
                out.push(BsPoint {
                    strict_level: lcm_denominators(&point),
                    face_codim: active.len(),
                    active,
                    point,
                    level: k,
                });
            }
        });
        Ok(out)
    }

    /// Number of lattice points of kP.
    pub fn lattice_count(&self, k: i64) -> usize {
        self.bs_points(k).map(|v| v.len()).unwrap_or(0)
    }

    /// Holonomy generators e^{2πi k b_i} of the level-k prequantum connection on the fiber over b.
    pub fn fiber_holonomy(&self, b: &[Rational], k: i64) -> Result<Vec<Complex64>, PolytopeError> {
        if !self.contains(b) {
            return Err(PolytopeError::PointOutside);
        }
        Ok(b.iter()
            .map(|bi| {
                let f = frac(&(*bi * k));
                if f.is_zero() {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * rat_to_f64(&f))
                }
            })
            .collect())
    }

    /// Exact Bohr–Sommerfeld test: b ∈ P and k·b integral.
    pub fn is_bohr_sommerfeld(&self, b: &[Rational], k: i64) -> bool {
        self.contains(b) && b.iter().all(|bi| (*bi * k).is_integer())
    }

    /// Image under x ↦ A x + c with A ∈ GLₙℤ and integral c.
    pub fn transform(&self, a: &[Vec<i64>], c: &[i64]) -> Result<Self, PolytopeError> {
        let ainv = lattice::unimodular_inverse(a).ok_or_else(|| {
            PolytopeError::Invalid(vec![Violation::Malformed("map is not unimodular".into())])
        })?;
        let n = self.dim;
        let facets = self
            .facets
            .iter()
            .map(|f| {
                // ν' = A^{-T} ν, λ' = λ + ν'·c
                let normal: Vec<i64> = (0..n)
                    .map(|i| (0..n).map(|j| ainv[j][i] * f.normal[j]).sum())
                    .collect();
                let offset = f.offset + normal.iter().zip(c).map(|(a, b)| a * b).sum::<i64>();
                Facet { normal, offset }
            })
            .collect();
        validate_delzant(n, facets)
    }

    /// A lattice point strictly inside, if any (used for sanity checks).
    pub fn is_interior(&self, x: &[Rational]) -> bool {
        self.facets
            .iter()
            .all(|f| dot_int_rat(&f.normal, x) > Rational::from_integer(f.offset))
    }
}

pub(crate) fn slack(f: &Facet, x: &[f64]) -> f64 {
    f.normal
        .iter()
        .zip(x)
        .map(|(&a, &b)| a as f64 * b)
        .sum::<f64>()
        - f.offset as f64
}

/// Parses a rational from "p/q", "p" or a decimal-free integer string.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let q: i64 = q.trim().parse().ok()?;
            if q == 0 {
                return None;
            }
            Some(Rational::new(p.trim().parse().ok()?, q))
        }
        None => Some(Rational::from_integer(s.parse().ok()?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q)
    }

    fn f(normal: &[i64], offset: i64) -> Facet {
        Facet {
            normal: normal.to_vec(),
            offset,
        }
    }

    #[test]
    fn segment_is_valid() {
        let p = DelzantPolytope::new(1, vec![f(&[1], 0), f(&[-1], -1)]).unwrap();
        assert_eq!(p.dim(), 1);
        assert_eq!(p.facets().len(), 2);
        assert_eq!(p.vertices().len(), 2);
    }

    #[test]
    fn simplex_is_valid() {
        let p = DelzantPolytope::new(2, vec![f(&[1, 0], 0), f(&[0, 1], 0), f(&[-1, -1], -1)]).unwrap();
        assert_eq!(p.vertices().len(), 3);
    }

    #[test]
    fn weighted_projective_plane_is_not_delzant() {
        // x ≥ 0, y ≥ 0, x + 2y ≤ 2: the cone at (0,1) has |det| = 2.
        let err = DelzantPolytope::new(2, vec![f(&[1, 0], 0), f(&[0, 1], 0), f(&[-1, -2], -2)]).unwrap_err();
        let PolytopeError::Invalid(v) = err else { panic!() };
        let bad: Vec<_> = v.iter().filter(|x| matches!(x, Violation::NotDelzant(_))).collect();
        assert_eq!(bad.len(), 1);
    }

    #[test]
    fn scaled_offset_triangle_stays_unimodular() {
        // All pairwise determinants of (1,1),(-1,0),(0,-1) are ±1, so rescaling an
        // offset keeps the polytope Delzant.
        let p = DelzantPolytope::new(2, vec![f(&[1, 1], -2), f(&[-1, 0], -1), f(&[0, -1], -1)]).unwrap();
        assert_eq!(p.vertices().len(), 3);
    }

    #[test]
    fn violation_classes() {
        let inv = |dim, fs: Vec<Facet>| match DelzantPolytope::new(dim, fs) {
            Err(PolytopeError::Invalid(v)) => v,
            other => panic!("expected violations, got {other:?}"),
        };
        assert!(inv(2, vec![f(&[1, 0], 0), f(&[0, 1], 0)]).contains(&Violation::Unbounded));
        assert!(inv(1, vec![f(&[1], 0), f(&[-1], 0)]).contains(&Violation::EmptyInterior));
        assert!(inv(1, vec![f(&[1], 1), f(&[-1], 0)]).contains(&Violation::EmptyInterior));
        assert!(inv(1, vec![f(&[2], 0), f(&[-1], -1)]).contains(&Violation::NonPrimitiveNormal(0)));
        assert!(inv(1, vec![f(&[1], 0), f(&[-1], -1), f(&[1], -1)]).contains(&Violation::RedundantFacet(2)));
        assert!(inv(2, vec![f(&[1, 0], 0), f(&[0, 1], 0), f(&[-1, -1], -1), f(&[-1, -1], -1)])
            .contains(&Violation::RedundantFacet(3)));
        assert!(inv(2, vec![f(&[1, 0], 0), f(&[0, 1], 0), f(&[-1, -1], -1), f(&[-1, 0], -1)])
            .contains(&Violation::RedundantFacet(3)));
    }

    #[test]
    fn faces_of_segment_and_simplex() {
        let faces = DelzantPolytope::interval(1).vertices_and_faces().unwrap();
        assert_eq!(faces.len(), 3);
        assert_eq!(faces[0].codim, 0);
        assert_eq!(faces[0].point, vec![r(1, 2)]);
        let faces = DelzantPolytope::simplex(2, 1).vertices_and_faces().unwrap();
        let count = |c| faces.iter().filter(|f| f.codim == c).count();
        assert_eq!((count(0), count(1), count(2)), (1, 3, 3));
    }

    #[test]
    fn hirzebruch_trapezoid_faces() {
        let p = DelzantPolytope::hirzebruch(1, 1, 2).unwrap();
        let faces = p.vertices_and_faces().unwrap();
        assert_eq!(faces.iter().filter(|f| f.codim == 1).count(), 4);
        assert_eq!(faces.iter().filter(|f| f.codim == 2).count(), 4);
        // brute-force vertex check over facet pairs
        assert_eq!(
            p.vertices(),
            &[
                vec![r(0, 1), r(0, 1)],
                vec![r(0, 1), r(1, 1)],
                vec![r(1, 1), r(1, 1)],
                vec![r(2, 1), r(0, 1)]
            ]
        );
        for face in &faces {
            assert_eq!(p.active_facets(&face.point), face.active);
        }
    }

    #[test]
    fn bs_points_of_segment() {
        let p = DelzantPolytope::interval(1);
        let b1 = p.bs_points(1).unwrap();
        assert_eq!(b1.len(), 2);
        assert!(b1.iter().all(|b| b.strict_level == 1 && b.face_codim == 1));
        let b2 = p.bs_points(2).unwrap();
        assert_eq!(b2.iter().map(|b| b.point[0]).collect::<Vec<_>>(), vec![r(0, 1), r(1, 2), r(1, 1)]);
        assert_eq!(b2[1].strict_level, 2);
        assert_eq!(b2[1].face_codim, 0);
        assert_eq!(b2[1].mode(), vec![1]);
    }

    #[test]
    fn bs_points_of_simplex() {
        assert_eq!(DelzantPolytope::simplex(2, 1).bs_points(2).unwrap().len(), 6);
    }

    #[test]
    fn holonomy_examples() {
        let p = DelzantPolytope::simplex(2, 1);
        let h = p.fiber_holonomy(&[r(1, 2), r(0, 1)], 2).unwrap();
        assert!(h.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        let h = p.fiber_holonomy(&[r(1, 3), r(0, 1)], 1).unwrap();
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        assert!((h[0] - w).norm() < 1e-15);
        assert_eq!(h[1], Complex64::new(1.0, 0.0));
        assert!(matches!(
            p.fiber_holonomy(&[r(1, 1), r(1, 1)], 1),
            Err(PolytopeError::PointOutside)
        ));
    }

    #[test]
    fn canonical_json_roundtrip() {
        let p = DelzantPolytope::new(2, vec![f(&[-1, -1], -1), f(&[1, 0], 0), f(&[0, 1], 0)]).unwrap();
        let s = p.to_canonical_json();
        assert_eq!(
            s,
            r#"{"dim":2,"facets":[{"normal":[-1,-1],"offset":-1},{"normal":[0,1],"offset":0},{"normal":[1,0],"offset":0}]}"#
        );
        let q = DelzantPolytope::from_json(&s).unwrap();
        assert_eq!(q.to_canonical_json(), s);
    }

    #[test]
    fn transform_preserves_validity() {
        let p = DelzantPolytope::simplex(2, 2);
        let q = p.transform(&[vec![1, 1], vec![0, 1]], &[3, -1]).unwrap();
        assert_eq!(q.lattice_count(1), p.lattice_count(1));
        assert!(p.transform(&[vec![2, 0], vec![0, 1]], &[0, 0]).is_err());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("1/2"), Some(r(1, 2)));
        assert_eq!(parse_rational(" -3 "), Some(r(-3, 1)));
        assert_eq!(parse_rational("1/0"), None);
    }
}
