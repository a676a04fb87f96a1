//! Ricci tensor of the 2n-dimensional metric blockdiag(G, G⁻¹) in (x, θ)
//! coordinates from Christoffel symbols, with metric derivatives taken by
//! fourth-order central differences in x. Nothing here uses the Kähler
//! structure, which makes it an independent check of [`super::ricci_general`].

use super::CurvatureError;
use crate::potential::{hessian_data, SymplecticPotential};
use nalgebra::DMatrix;

#[derive(Clone, Debug)]
pub struct OracleRicci {
    /// Full 2n × 2n Ricci tensor.
    pub full: DMatrix<f64>,
    /// Its (dx, dx) block.
    pub xx: DMatrix<f64>,
    pub step: f64,
}

/// Relative FD step used by the oracle.
pub const ORACLE_REL_STEP: f64 = 1e-4;

pub fn christoffel_ricci_oracle<P: SymplecticPotential + ?Sized>(
    pot: &P,
    s: f64,
    x: &[f64],
) -> Result<OracleRicci, CurvatureError> {
    let d = pot.boundary_distance(x);
    let h = if d.is_finite() { ORACLE_REL_STEP * d } else { ORACLE_REL_STEP };
    christoffel_ricci_oracle_with_step(pot, s, x, h)
}

pub fn christoffel_ricci_oracle_with_step<P: SymplecticPotential + ?Sized>(
    pot: &P,
    s: f64,
    x: &[f64],
    h: f64,
) -> Result<OracleRicci, CurvatureError> {
    let n = pot.dim();
    let dd = pot.boundary_distance(x);
    if dd.is_finite() && 2.0 * h * (n as f64).sqrt() >= dd {
        return Err(CurvatureError::StepTooLarge);
    }
    let big = 2 * n;
    let metric = |p: &[f64]| -> Result<DMatrix<f64>, CurvatureError> {
        let hd = hessian_data(pot, s, p, 2)?;
        let mut g = DMatrix::zeros(big, big);
        g.view_mut((0, 0), (n, n)).copy_from(&hd.g);
        g.view_mut((n, n), (n, n)).copy_from(&hd.g_inv);
        Ok(g)
    };
    let shifted = |a: usize, ta: f64, b: usize, tb: f64| -> Result<DMatrix<f64>, CurvatureError> {
        let mut p = x.to_vec();
        p[a] += ta * h;
        p[b] += tb * h;
        metric(&p)
    };
    let g0 = metric(x)?;
    let ginv = g0.clone().try_inverse().ok_or(CurvatureError::SingularG)?;
    let c1 = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
    let c2 = [(-2.0, -1.0 / 12.0), (-1.0, 16.0 / 12.0), (0.0, -30.0 / 12.0), (1.0, 16.0 / 12.0), (2.0, -1.0 / 12.0)];

    // dg[a] = ∂_a g for a < n, zero for θ directions
    let mut dg = vec![DMatrix::zeros(big, big); big];
    for a in 0..n {
        let mut acc = DMatrix::zeros(big, big);
        for &(t, w) in &c1 {
            acc += w * shifted(a, t, a, 0.0)?;
        }
        dg[a] = acc / h;
    }
    let mut ddg = vec![vec![DMatrix::zeros(big, big); big]; big];
    for a in 0..n {
        for b in a..n {
            let mut acc = DMatrix::zeros(big, big);
            if a == b {
                for &(t, w) in &c2 {
                    acc += w * shifted(a, t, a, 0.0)?;
                }
            } else {
                for &(ta, wa) in &c1 {
                    for &(tb, wb) in &c1 {
                        acc += (wa * wb) * shifted(a, ta, b, tb)?;
                    }
                }
            }
            acc /= h * h;
            ddg[a][b] = acc.clone();
            ddg[b][a] = acc;
        }
    }

    // Γ^c_{ab} and ∂_e Γ^c_{ab}
    let idx = |a: usize, b: usize, c: usize| (a * big + b) * big + c;
    let mut gamma = vec![0.0; big * big * big];
    let mut dgamma = vec![0.0; big * big * big * big];
    let dginv: Vec<DMatrix<f64>> = dg.iter().map(|m| -(&ginv * m * &ginv)).collect();
    for c in 0..big {
        for a in 0..big {
            for b in 0..big {
                let mut v = 0.0;
                for d in 0..big {
                    let low = dg[a][(d, b)] + dg[b][(d, a)] - dg[d][(a, b)];
                    v += 0.5 * ginv[(c, d)] * low;
                }
                gamma[idx(c, a, b)] = v;
                for e in 0..n {
                    let mut dv = 0.0;
                    for d in 0..big {
                        let low = dg[a][(d, b)] + dg[b][(d, a)] - dg[d][(a, b)];
                        let dlow = ddg[e][a][(d, b)] + ddg[e][b][(d, a)] - ddg[e][d][(a, b)];
                        dv += 0.5 * (dginv[e][(c, d)] * low + ginv[(c, d)] * dlow);
                    }
                    dgamma[e * big * big * big + idx(c, a, b)] = dv;
                }
            }
        }
    }
    let dgam = |e: usize, c: usize, a: usize, b: usize| dgamma[e * big * big * big + idx(c, a, b)];
    let gam = |c: usize, a: usize, b: usize| gamma[idx(c, a, b)];

    let mut ric = DMatrix::zeros(big, big);
    for b in 0..big {
        for d in 0..big {
            let mut v = 0.0;
            for a in 0..big {
                v += dgam(a, a, b, d) - dgam(d, a, a, b);
                for e in 0..big {
                    v += gam(a, a, e) * gam(e, b, d) - gam(a, d, e) * gam(e, a, b);
                }
            }
            ric[(b, d)] = v;
        }
    }
    let xx = ric.view((0, 0), (n, n)).into_owned();
    Ok(OracleRicci { full: ric, xx, step: h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::ricci_general;
    use crate::polytope::DelzantPolytope;
    use crate::potential::{PolynomialFn, PotentialSpec};

    #[test]
    fn flat_metric_has_zero_ricci() {
        let p = DelzantPolytope::simplex(2, 1);
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let spec = PotentialSpec::new_unchecked(p, PolynomialFn::zero(2), PolynomialFn::quadratic_form(&a)).with_guillemin(0.0);
        let o = christoffel_ricci_oracle(&spec.at(1.0), 1.0, &[0.3, 0.3]).unwrap();
        assert!(o.full.amax() < 1e-6, "{}", o.full);
    }

    #[test]
    fn sphere_matches_general() {
        let spec = PotentialSpec::new_unchecked(DelzantPolytope::interval(1), PolynomialFn::zero(1), PolynomialFn::zero(1))
            .with_guillemin(1.0);
        for x in [0.3, 0.5, 0.8] {
            let o = christoffel_ricci_oracle(&spec, 1.0, &[x]).unwrap();
            let rd = ricci_general(&spec, 1.0, &[x]).unwrap();
            let want = rd.ricci_xx();
            assert!((o.xx[(0, 0)] - want[(0, 0)]).abs() < 1e-6 * want[(0, 0)].abs());
            // Einstein: Ric = g on all of the 2-sphere
            assert!((o.full[(1, 1)] - rd.g[(0, 0)].recip()).abs() < 1e-6 * rd.g[(0, 0)].recip());
        }
    }

    #[test]
    fn step_too_large_is_reported() {
        let spec = PotentialSpec::standard(DelzantPolytope::interval(1));
        assert!(matches!(
            christoffel_ricci_oracle_with_step(&spec.at(1.0), 1.0, &[0.01], 0.01),
            Err(CurvatureError::StepTooLarge)
        ));
    }
}
