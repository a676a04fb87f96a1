use super::lattice::{dot_int_rat, rat_to_f64, unimodular_inverse, Rational};
use super::{DelzantPolytope, PolytopeError};
use serde::Serialize;

/// Affine lattice chart x ↦ A x + c centred at a point b of P.
///
/// The first `local_codim` rows of `A` are the normals of the facets active
/// at b, so those facets become the coordinate hyperplanes {x_i = 0} and P
/// looks locally like {x_i ≥ 0, i ≤ m̃}.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalChart {
    #[serde(skip)]
    pub base: Vec<Rational>,
    pub lattice_map: Vec<Vec<i64>>,
    #[serde(skip)]
    pub shift: Vec<Rational>,
    pub local_codim: usize,
    /// Facet indices sent to x_1, …, x_m̃ in order.
    pub active: Vec<usize>,
    inverse: Vec<Vec<i64>>,
}

impl LocalChart {
    pub fn at(p: &DelzantPolytope, b: &[Rational]) -> Result<Self, PolytopeError> {
        if b.len() != p.dim() || !p.contains(b) {
            return Err(PolytopeError::PointOutside);
        }
        let n = p.dim();
        let active = p.active_facets(b);
        // Complete the active normals to a lattice basis using a vertex of the face.
        let vertex = (0..p.vertices().len())
            .find(|&i| active.iter().all(|r| p.vertex_facets(i).contains(r)))
            .expect("every face of a polytope has a vertex");
        let mut rows: Vec<usize> = active.clone();
        rows.extend(p.vertex_facets(vertex).iter().filter(|r| !active.contains(r)));
        let lattice_map: Vec<Vec<i64>> = rows.iter().map(|&r| p.facets()[r].normal.clone()).collect();
        let inverse = unimodular_inverse(&lattice_map).expect("Delzant vertex cone is unimodular");
        let shift: Vec<Rational> = lattice_map.iter().map(|row| -dot_int_rat(row, b)).collect();
        debug_assert_eq!(shift.len(), n);
        Ok(LocalChart {
            base: b.to_vec(),
            lattice_map,
            shift,
            local_codim: active.len(),
            active,
            inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.lattice_map.len()
    }

    pub fn inverse_map(&self) -> &[Vec<i64>] {
        &self.inverse
    }

    pub fn to_chart(&self, x: &[Rational]) -> Vec<Rational> {
        self.lattice_map
            .iter()
            .zip(&self.shift)
            .map(|(row, c)| dot_int_rat(row, x) + *c)
            .collect()
    }

    pub fn from_chart(&self, y: &[Rational]) -> Vec<Rational> {
        let d: Vec<Rational> = y.iter().zip(&self.shift).map(|(a, c)| *a - *c).collect();
        self.inverse.iter().map(|row| dot_int_rat(row, &d)).collect()
    }

    pub fn to_chart_f64(&self, x: &[f64]) -> Vec<f64> {
        self.lattice_map
            .iter()
            .zip(&self.shift)
            .map(|(row, c)| row.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum::<f64>() + rat_to_f64(c))
            .collect()
    }

    pub fn from_chart_f64(&self, y: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = y.iter().zip(&self.shift).map(|(a, c)| a - rat_to_f64(c)).collect();
        self.inverse
            .iter()
            .map(|row| row.iter().zip(&d).map(|(&a, &b)| a as f64 * b).sum())
            .collect()
    }

    /// Matrix A as floating point.
    pub fn matrix_f64(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        nalgebra::DMatrix::from_fn(n, n, |i, j| self.lattice_map[i][j] as f64)
    }

    pub fn shift_f64(&self) -> Vec<f64> {
        self.shift.iter().map(rat_to_f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::Facet;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q)
    }

    /// Transformed facet ν' = A^{-T} ν, λ' = λ + ν'·c (rational offsets allowed).
    fn image_facets(p: &DelzantPolytope, ch: &LocalChart) -> Vec<(Vec<i64>, Rational)> {
        let n = p.dim();
        let inv = ch.inverse_map();
        p.facets()
            .iter()
            .map(|f: &Facet| {
                let nu: Vec<i64> = (0..n).map(|i| (0..n).map(|j| inv[j][i] * f.normal[j]).sum()).collect();
                let lam = Rational::from_integer(f.offset) + dot_int_rat(&nu, &ch.shift);
                (nu, lam)
            })
            .collect()
    }

    #[test]
    fn segment_right_end() {
        let p = DelzantPolytope::interval(1);
        let ch = LocalChart::at(&p, &[r(1, 1)]).unwrap();
        assert_eq!(ch.lattice_map, vec![vec![-1]]);
        assert_eq!(ch.shift, vec![r(1, 1)]);
        assert_eq!(ch.to_chart(&[r(1, 1)]), vec![r(0, 1)]);
        assert_eq!(ch.to_chart(&[r(1, 4)]), vec![r(3, 4)]);
    }

    #[test]
    fn simplex_vertex_chart() {
        let p = DelzantPolytope::simplex(2, 1);
        let ch = LocalChart::at(&p, &[r(1, 1), r(0, 1)]).unwrap();
        assert_eq!(ch.local_codim, 2);
        let img = image_facets(&p, &ch);
        for (i, &fr) in ch.active.iter().enumerate() {
            let mut e = vec![0; 2];
            e[i] = 1;
            assert_eq!(img[fr], (e, r(0, 1)));
        }
    }

    #[test]
    fn simplex_edge_chart_half_integral() {
        let p = DelzantPolytope::simplex(2, 1);
        let b = [r(1, 2), r(0, 1)];
        let ch = LocalChart::at(&p, &b).unwrap();
        assert_eq!(ch.local_codim, 1);
        assert!(ch.shift.iter().all(|c| (*c * 2).is_integer()));
        let img = image_facets(&p, &ch);
        assert_eq!(img[ch.active[0]], (vec![1, 0], r(0, 1)));
        assert_eq!(ch.to_chart(&b), vec![r(0, 1), r(0, 1)]);
    }

    #[test]
    fn roundtrip_on_samples() {
        let p = DelzantPolytope::hirzebruch(1, 1, 2).unwrap();
        for b in [[r(0, 1), r(0, 1)], [r(1, 2), r(1, 1)], [r(1, 3), r(1, 3)]] {
            let ch = LocalChart::at(&p, &b).unwrap();
            for x in [[r(1, 5), r(1, 7)], [r(1, 2), r(1, 3)]] {
                assert_eq!(ch.from_chart(&ch.to_chart(&x)), x.to_vec());
                let xf: Vec<f64> = x.iter().map(rat_to_f64).collect();
                let back = ch.from_chart_f64(&ch.to_chart_f64(&xf));
                assert!(back.iter().zip(&xf).all(|(a, b)| (a - b).abs() < 1e-14));
            }
        }
        assert!(LocalChart::at(&p, &[r(3, 1), r(0, 1)]).is_err());
    }
}
