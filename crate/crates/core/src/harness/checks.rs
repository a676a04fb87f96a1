use super::{HarnessError, LocalizationRow, LOCALIZATION_NOISE};
use crate::operator::{solver_mesh, OperatorContext};
use crate::potential::PotentialSpec;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Cumulative L²-mass of an eigenfunction against the distance to the
/// nearest center.
pub(crate) struct RadialProfile {
    dist: Vec<f64>,
    cum: Vec<f64>,
}

pub(crate) fn radial_profile(ctx: &OperatorContext, v: &[f64], centers: &[Vec<f64>]) -> RadialProfile {
    let mut pts: Vec<(f64, f64)> = ctx
        .weighted_squares(v)
        .map(|(x, w)| {
            let d = centers
                .iter()
                .map(|c| c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            (d, w)
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pts.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    let mut dist = Vec::with_capacity(pts.len());
    let mut cum = Vec::with_capacity(pts.len());
    for (d, w) in pts {
        acc += w;
        dist.push(d);
        cum.push(acc / total);
    }
    RadialProfile { dist, cum }
}

pub(crate) fn mass_within(p: &RadialProfile, r: f64) -> f64 {
    match p.dist.partition_point(|&d| d <= r) {
        0 => 0.0,
        i => p.cum[i - 1],
    }
}

pub(crate) fn radius_for_mass(p: &RadialProfile, level: f64) -> f64 {
    let i = p.cum.partition_point(|&c| c < level);
    p.dist.get(i).or(p.dist.last()).copied().unwrap_or(0.0)
}

/// Worst case over the BS modes and levels at one (k, s).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LocalizationSummary {
    pub k: i64,
    pub s: f64,
    pub c_min: f64,
    pub fractions: Vec<f64>,
}

/// Aggregates per-eigenfunction rows into one line per (k, s), in the order
/// the pairs first appear.
pub fn localization_check(rows: &[LocalizationRow], c_grid: &[f64]) -> Vec<LocalizationSummary> {
    let mut out: Vec<LocalizationSummary> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|o| o.k == r.k && o.s == r.s) {
            Some(o) => {
                o.c_min = o.c_min.max(r.c_min);
                for (a, b) in o.fractions.iter_mut().zip(&r.fractions) {
                    *a = a.min(*b);
                }
            }
            None => out.push(LocalizationSummary {
                k: r.k,
                s: r.s,
                c_min: r.c_min,
                fractions: r.fractions.clone(),
            }),
        }
    }
    for o in &mut out {
        o.fractions.truncate(c_grid.len());
    }
    out.sort_by(|a, b| a.k.cmp(&b.k).then(b.s.total_cmp(&a.s)));
    out
}

/// The minimal radius may grow by at most LOCALIZATION_NOISE from one s to the next smaller one.
pub(crate) fn localization_bounded(summary: &[LocalizationSummary]) -> bool {
    summary
        .windows(2)
        .filter(|w| w[0].k == w[1].k)
        .all(|w| w[1].c_min <= (1.0 + LOCALIZATION_NOISE) * w[0].c_min)
}

/// Limit in s of λ(s) = λ∞ + C·s^p fitted through three (s, λ), s descending.
pub fn richardson(s: [f64; 3], v: [f64; 3]) -> Option<f64> {
    let d0 = v[0] - v[1];
    let d1 = v[1] - v[2];
    if d1 == 0.0 {
        return Some(v[2]);
    }
    let r = d0 / d1;
    let f = |p: f64| (s[0].powf(p) - s[1].powf(p)) / (s[1].powf(p) - s[2].powf(p)) - r;
    let (mut lo, mut hi) = (0.05, 6.0);
    if f(lo) * f(hi) > 0.0 {
        return None;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    Some(v[2] - d1 * s[2].powf(p) / (s[1].powf(p) - s[2].powf(p)))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FiberRow {
    pub s: f64,
    /// max λ_max(G_s⁻¹)/s over a uniform interior grid.
    pub c_interior: f64,
    /// The same over the nodes of a boundary-graded mesh.
    pub c_graded: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FiberTable {
    pub rows: Vec<FiberRow>,
    /// max λ_max((Hess ψ)⁻¹), which bounds every c.
    pub bound: f64,
    pub within_bound: bool,
    /// c does not decrease as s decreases.
    pub monotone: bool,
}

fn lambda_min(g: &DMatrix<f64>) -> f64 {
    g.clone().symmetric_eigenvalues().min()
}

fn interior_grid(spec: &PotentialSpec, per_axis: usize) -> Vec<Vec<f64>> {
    let p = &spec.polytope;
    let (lo, hi) = p.bounding_box();
    let lo: Vec<f64> = lo.iter().map(crate::polytope::lattice::rat_to_f64).collect();
    let hi: Vec<f64> = hi.iter().map(crate::polytope::lattice::rat_to_f64).collect();
    let n = p.dim();
    let step: f64 = (0..n).map(|i| (hi[i] - lo[i]) / per_axis as f64).fold(f64::INFINITY, f64::min);
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let x: Vec<f64> = (0..n)
            .map(|i| lo[i] + (hi[i] - lo[i]) * (idx[i] as f64 + 0.5) / per_axis as f64)
            .collect();
        if p.min_slack(&x) > 0.25 * step {
            out.push(x);
        }
        let mut i = 0;
        while i < n {
            idx[i] += 1;
            if idx[i] < per_axis {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == n {
            return out;
        }
    }
}

fn graded_grid(spec: &PotentialSpec) -> Result<Vec<Vec<f64>>, HarnessError> {
    let p = &spec.polytope;
    let h = if p.dim() == 1 { 1.0 / 200.0 } else { 1.0 / 20.0 };
    let mesh = solver_mesh(p, h)?;
    let c: Vec<f64> = p.centroid().iter().map(crate::polytope::lattice::rat_to_f64).collect();
    Ok((0..mesh.n_nodes())
        .map(|i| {
            let x = mesh.node(i);
            x.iter().zip(&c).map(|(a, b)| a + 1e-9 * (b - a)).collect()
        })
        .collect())
}

/// Proxy for the fiber diameter: C(s) = max_x λ_max(G_s⁻¹(x))/s on two grids
/// of P, checked against the bound G_s⁻¹ ≤ s·(Hess ψ)⁻¹.
pub fn fiber_diameter_check(spec: &PotentialSpec, s_list: &[f64]) -> Result<FiberTable, HarnessError> {
    let interior = interior_grid(spec, if spec.dim() == 1 { 400 } else { 40 });
    let graded = graded_grid(spec)?;
    let bound = interior
        .iter()
        .chain(&graded)
        .map(|x| 1.0 / lambda_min(&spec.psi_hessian(x)))
        .fold(0.0, f64::max);
    let c_on = |grid: &[Vec<f64>], s: f64| -> Result<f64, HarnessError> {
        let mut c: f64 = 0.0;
        for x in grid {
            c = c.max(1.0 / lambda_min(&spec.family_hessian(s, x)?.g) / s);
        }
        Ok(c)
    };
    let mut rows = Vec::new();
    for &s in s_list {
        rows.push(FiberRow {
            s,
            c_interior: c_on(&interior, s)?,
            c_graded: c_on(&graded, s)?,
        });
    }
    let within_bound = rows
        .iter()
        .all(|r| r.c_interior.max(r.c_graded) <= bound * (1.0 + 1e-9));
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| b.s.total_cmp(&a.s));
    let monotone = sorted
        .windows(2)
        .all(|w| w[1].c_interior >= w[0].c_interior * (1.0 - 1e-9) && w[1].c_graded >= w[0].c_graded * (1.0 - 1e-9));
    Ok(FiberTable {
        rows,
        bound,
        within_bound,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::DelzantPolytope;
    use approx::assert_relative_eq;

    #[test]
    fn richardson_recovers_power_law() {
        let s = [0.2, 0.1, 0.05];
        let v = s.map(|x: f64| 3.0 + 2.0 * x.powf(0.7));
        assert_relative_eq!(richardson(s, v).unwrap(), 3.0, max_relative = 1e-9);
        let s = [0.2, 0.1, 0.02];
        let v = s.map(|x: f64| 1.0 - 0.5 * x.powf(1.5));
        assert_relative_eq!(richardson(s, v).unwrap(), 1.0, max_relative = 1e-9);
    }

    #[test]
    fn fiber_constant_on_cp1() {
        // G_s = 1/(2x(1−x)) + 1/s, smallest at x = ½
        let spec = PotentialSpec::standard(DelzantPolytope::interval(1));
        let t = fiber_diameter_check(&spec, &[1.0, 0.1, 0.01]).unwrap();
        assert_relative_eq!(t.bound, 1.0, max_relative = 1e-12);
        for r in &t.rows {
            let exact = 1.0 / (2.0 * r.s + 1.0);
            assert_relative_eq!(r.c_interior, exact, max_relative = 1e-4);
            assert_relative_eq!(r.c_graded, exact, max_relative = 1e-3);
        }
        assert!(t.within_bound && t.monotone);
    }

    #[test]
    fn fiber_constant_scales_with_psi() {
        let p = DelzantPolytope::simplex(2, 1);
        let base = PotentialSpec::standard(p.clone());
        let scaled = PotentialSpec::new(p, base.phi.clone(), base.psi.scale(4.0)).unwrap();
        let a = fiber_diameter_check(&base, &[0.01]).unwrap();
        let b = fiber_diameter_check(&scaled, &[0.04]).unwrap();
        assert_relative_eq!(b.bound, 0.25 * a.bound, max_relative = 1e-12);
        // u with ψ×4 at s equals u with ψ at s/4, so C scales by ¼
        assert_relative_eq!(b.rows[0].c_interior, 0.25 * a.rows[0].c_interior, max_relative = 1e-9);
    }
}
