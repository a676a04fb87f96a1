use super::{PotentialError, PotentialSpec, SymplecticPotential};
use nalgebra::DVector;

/// The closed-form ground state φ_m = exp((m − kx)·∇u_s + k u_s) of the
/// mode-m reduced operator, normalizable when m/k ∈ P.
#[derive(Clone, Debug)]
pub struct GroundState<'a> {
    spec: &'a PotentialSpec,
    pub s: f64,
    pub k: i64,
    pub mode: Vec<i64>,
}

impl<'a> GroundState<'a> {
    pub fn new(spec: &'a PotentialSpec, s: f64, k: i64, m: &[i64]) -> Result<Self, PotentialError> {
        if m.len() != spec.dim() {
            return Err(PotentialError::DimensionMismatch("mode length".into()));
        }
        if k < 1 || !spec.mode_in_polytope(k, m) {
            return Err(PotentialError::ModeOutsidePolytope(m.to_vec()));
        }
        Ok(GroundState {
            spec,
            s,
            k,
            mode: m.to_vec(),
        })
    }

    fn w(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(x.len(), self.mode.iter().zip(x).map(|(&m, &xi)| m as f64 - self.k as f64 * xi))
    }

    /// log φ_m(x).
    pub fn log_value(&self, x: &[f64]) -> Result<f64, PotentialError> {
        let j = self.spec.at(self.s).jet(x, 2)?;
        Ok(self.w(x).dot(&j.grad) + self.k as f64 * j.value)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64, PotentialError> {
        Ok(self.log_value(x)?.exp())
    }

    /// ∇ log φ_m = G_s (m − kx).
    pub fn grad_log(&self, x: &[f64]) -> Result<DVector<f64>, PotentialError> {
        let j = self.spec.at(self.s).jet(x, 2)?;
        Ok(&j.hess * self.w(x))
    }

    /// Exact eigenvalue k² + kn of the reduced operator.
    pub fn eigenvalue(&self) -> f64 {
        let k = self.k as f64;
        k * k + k * self.spec.dim() as f64
    }

    /// Values at `points` scaled so that the largest equals 1.
    pub fn normalized_values(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, PotentialError> {
        let logs = points
            .iter()
            .map(|p| self.log_value(p))
            .collect::<Result<Vec<_>, _>>()?;
        let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(logs.iter().map(|l| (l - mx).exp()).collect())
    }

    /// (Lφ − λφ)/φ evaluated from the jet without using the closed-form simplification,
    /// where L = −div(G⁻¹∇·) + (m − kx)ᵀG(m − kx) + k².
    pub fn relative_residual(&self, x: &[f64]) -> Result<f64, PotentialError> {
        let n = x.len();
        let k = self.k as f64;
        let jet = self.spec.at(self.s).jet(x, 3)?;
        let g = &jet.hess;
        let ginv = g.clone().try_inverse().ok_or_else(|| PotentialError::NotPositiveDefinite(x.to_vec()))?;
        let w = self.w(x);
        // g_j = ∂_j log φ = −k ∂_j u + Σ_l w_l G_jl + k ∂_j u
        let grad_log: DVector<f64> = -k * &jet.grad + g * &w + k * &jet.grad;
        // ∂_i g_j = −k G_ji + Σ_l w_l ∂_i G_jl
        let dgrad = |i: usize, j: usize| -k * g[(j, i)] + (0..n).map(|l| w[l] * jet.third[i][(j, l)]).sum::<f64>();
        // div(G⁻¹∇φ)/φ = Σ_i [g_i (G⁻¹g)_i + Σ_j ∂_i(G⁻¹)_ij g_j + Σ_j G⁻¹_ij ∂_i g_j]
        let ginv_g = &ginv * &grad_log;
        let mut div = 0.0;
        for i in 0..n {
            let dginv = -(&ginv * &jet.third[i] * &ginv);
            div += grad_log[i] * ginv_g[i];
            for j in 0..n {
                div += dginv[(i, j)] * grad_log[j] + ginv[(i, j)] * dgrad(i, j);
            }
        }
        let v = w.dot(&(g * &w)) + k * k;
        let lphi = -div + v;
        Ok((lphi - self.eigenvalue()) / self.eigenvalue())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::DelzantPolytope;
    use crate::potential::PolynomialFn;
    use approx::assert_relative_eq;

    fn bare_segment() -> PotentialSpec {
        PotentialSpec::new_unchecked(DelzantPolytope::interval(1), PolynomialFn::zero(1), PolynomialFn::zero(1))
            .with_guillemin(1.0)
    }

    #[test]
    fn segment_ground_states_are_linear() {
        let spec = bare_segment();
        let g0 = spec.ground_state(1.0, 1, &[0]).unwrap();
        let g1 = spec.ground_state(1.0, 1, &[1]).unwrap();
        for x in [0.1, 0.37, 0.8] {
            assert_relative_eq!(g0.value(&[x]).unwrap(), 1.0 - x, max_relative = 1e-12);
            assert_relative_eq!(g1.value(&[x]).unwrap(), x, max_relative = 1e-12);
            assert!(g0.relative_residual(&[x]).unwrap().abs() < 1e-12);
        }
        assert!(matches!(spec.ground_state(1.0, 1, &[2]), Err(PotentialError::ModeOutsidePolytope(_))));
    }

    #[test]
    fn residual_vanishes_on_random_specs() {
        let p = DelzantPolytope::hirzebruch(1, 1, 2).unwrap();
        let phi = PolynomialFn::from_terms(2, &[crate::potential::Term { alpha: vec![1, 2], c: 0.1 }]).unwrap();
        let psi = PolynomialFn::quadratic_form(&nalgebra::DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]));
        let spec = PotentialSpec::new(p, phi, psi).unwrap();
        for (k, m) in [(1, vec![0, 0]), (1, vec![1, 1]), (2, vec![3, 0]), (3, vec![2, 1])] {
            let gs = spec.ground_state(0.3, k, &m).unwrap();
            for x in [[0.5, 0.5], [0.01, 0.2], [1.5, 0.3], [0.3, 0.99]] {
                let r = gs.relative_residual(&x).unwrap();
                assert!(r.abs() < 1e-8, "k={k} m={m:?} x={x:?} r={r}");
            }
        }
    }
}
