use super::{model_t, ricci_general, min_generalized_eigenvalue, CurvatureError, ModelSpec};
use crate::potential::PotentialSpec;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug)]
pub enum ScanTarget<'a> {
    Model(&'a ModelSpec),
    Spec(&'a PotentialSpec),
}

#[derive(Clone, Debug)]
pub enum ScanRegion {
    /// Log-spaced grid in z_j = y_j/√s, one range per active coordinate.
    /// A coordinate whose range reaches above `cap` approaches its facet;
    /// two such coordinates approach a codimension-two face.
    ModelBox {
        z_ranges: Vec<(f64, f64)>,
        points_per_axis: usize,
        cap: f64,
        allow_codim_two: bool,
    },
    /// Grid over P keeping points with slack ≥ `margin` and at distance
    /// ≥ `exclusion` from every codimension-two face.
    Polytope {
        resolution: usize,
        exclusion: f64,
        margin: f64,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub s: f64,
    pub x: Vec<f64>,
    pub min_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanSummary {
    pub s: f64,
    pub inf_min_ratio: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    pub per_s: Vec<ScanSummary>,
}

impl ScanReport {
    pub fn inf(&self) -> f64 {
        self.per_s.iter().map(|p| p.inf_min_ratio).fold(f64::INFINITY, f64::min)
    }

    /// CSV with columns s, x1..xn, min_ratio.
    pub fn to_csv(&self) -> String {
        let n = self.rows.first().map(|r| r.x.len()).unwrap_or(0);
        let mut out = String::from("s");
        for i in 1..=n {
            let _ = write!(out, ",x{i}");
        }
        out.push_str(",min_ratio\n");
        for r in &self.rows {
            let _ = write!(out, "{}", r.s);
            for v in &r.x {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{}", r.min_ratio);
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.per_s).expect("summary serialization")
    }
}

fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![]];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

fn dist_point_segment(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let ap: Vec<f64> = a.iter().zip(p).map(|(x, y)| y - x).collect();
    let l2: f64 = ab.iter().map(|v| v * v).sum();
    let t = if l2 > 0.0 {
        (ap.iter().zip(&ab).map(|(u, v)| u * v).sum::<f64>() / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ap.iter().zip(&ab).map(|(u, v)| (u - t * v).powi(2)).sum::<f64>().sqrt()
}

/// Grid of min_ratio over `region` for every s, with the per-s infimum.
pub fn ricci_lower_bound_scan(target: ScanTarget<'_>, s_list: &[f64], region: &ScanRegion) -> Result<ScanReport, CurvatureError> {
    let mut rows = Vec::new();
    for &s in s_list {
        let pts: Vec<Vec<f64>> = match (target, region) {
            (
                ScanTarget::Model(model),
                ScanRegion::ModelBox {
                    z_ranges,
                    points_per_axis,
                    cap,
                    allow_codim_two,
                },
            ) => {
                if z_ranges.len() != model.m {
                    return Err(CurvatureError::InvalidModel("one z range per active coordinate".into()));
                }
                let near = z_ranges.iter().filter(|r| r.1 > *cap).count();
                if near >= 2 && !allow_codim_two {
                    return Err(CurvatureError::RegionTouchesCodimTwo);
                }
                let axes: Vec<Vec<f64>> = z_ranges.iter().map(|&(lo, hi)| log_grid(lo, hi, *points_per_axis)).collect();
                cartesian(&axes)
            }
            (ScanTarget::Spec(spec), ScanRegion::Polytope { resolution, exclusion, margin }) => {
                let p = &spec.polytope;
                let faces = p.vertices_and_faces().map_err(|e| CurvatureError::InvalidModel(e.to_string()))?;
                let verts = p.vertices_f64();
                let low: Vec<Vec<usize>> = faces.iter().filter(|f| f.codim == 2).map(|f| f.vertices.clone()).collect();
                let (lo, hi) = p.bounding_box();
                let lo: Vec<f64> = lo.iter().map(crate::polytope::lattice::rat_to_f64).collect();
                let hi: Vec<f64> = hi.iter().map(crate::polytope::lattice::rat_to_f64).collect();
                let axes: Vec<Vec<f64>> = (0..p.dim())
                    .map(|i| (0..=*resolution).map(|j| lo[i] + (hi[i] - lo[i]) * j as f64 / *resolution as f64).collect())
                    .collect();
                cartesian(&axes)
                    .into_iter()
                    .filter(|x| p.min_slack(x) >= *margin)
                    .filter(|x| {
                        low.iter().all(|fv| {
                            let d = match fv.len() {
                                1 => dist_point_segment(x, &verts[fv[0]], &verts[fv[0]]),
                                _ => dist_point_segment(x, &verts[fv[0]], &verts[fv[1]]),
                            };
                            d >= *exclusion
                        })
                    })
                    .collect()
            }
            _ => return Err(CurvatureError::InvalidModel("scan target and region kinds differ".into())),
        };
        let vals: Result<Vec<ScanRow>, CurvatureError> = pts
            .par_iter()
            .map(|p| match target {
                ScanTarget::Model(model) => {
                    let y: Vec<f64> = p.iter().map(|z| z * s.sqrt()).collect();
                    let t = model_t(model, &y, s);
                    let g = model.g(s, &y);
                    Ok(ScanRow {
                        s,
                        x: model.x_from_y(s, &y, 0.0),
                        min_ratio: min_generalized_eigenvalue(&t, &g)?,
                    })
                }
                ScanTarget::Spec(spec) => Ok(ScanRow {
                    s,
                    x: p.clone(),
                    min_ratio: ricci_general(&spec.at(s), s, p)?.min_ratio,
                }),
            })
            .collect();
        rows.extend(vals?);
    }
    let per_s = s_list
        .iter()
        .map(|&s| {
            let sel: Vec<f64> = rows.iter().filter(|r| r.s == s).map(|r| r.min_ratio).collect();
            ScanSummary {
                s,
                inf_min_ratio: sel.iter().cloned().fold(f64::INFINITY, f64::min),
                points: sel.len(),
            }
        })
        .collect();
    Ok(ScanReport { rows, per_s })
}
