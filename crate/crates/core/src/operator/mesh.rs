use crate::polytope::{DelzantPolytope, PolytopeError};
use std::collections::HashMap;

/// How cell size shrinks toward ∂P.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Grading {
    Uniform,
    /// Geometric tail of widths h·r, h·r², … toward each facet.
    Geometric(f64),
    /// Nodes at distances D·(i/N)^{1/β} from each facet, N = ⌈D/(βh)⌉;
    /// layers thinner than h_min are merged.
    Power { beta: f64, h_min: f64 },
}

/// Simplicial mesh of a polytope (n ≤ 2) with P1 data.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub dim: usize,
    /// Node coordinates, `dim` entries per node.
    pub coords: Vec<f64>,
    /// Cell node indices, `dim + 1` entries per cell.
    pub cells: Vec<usize>,
    pub target_h: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct QuadRule {
    /// Barycentric coordinates (first dim+1 entries used) and weight summing to 1.
    pub bary: [f64; 3],
    pub weight: f64,
}

pub fn quadrature(dim: usize) -> Vec<QuadRule> {
    match dim {
        1 => {
            let d = 0.5 * (0.6f64).sqrt();
            vec![
                QuadRule { bary: [0.5 + d, 0.5 - d, 0.0], weight: 5.0 / 18.0 },
                QuadRule { bary: [0.5, 0.5, 0.0], weight: 8.0 / 18.0 },
                QuadRule { bary: [0.5 - d, 0.5 + d, 0.0], weight: 5.0 / 18.0 },
            ]
        }
        _ => {
            let (a, wa) = (0.445_948_490_915_965, 0.223_381_589_678_011);
            let (b, wb) = (0.091_576_213_509_771, 0.109_951_743_655_322);
            let mut q = Vec::with_capacity(6);
            for (p, w) in [(a, wa), (b, wb)] {
                let c = 1.0 - 2.0 * p;
                for bary in [[p, p, c], [p, c, p], [c, p, p]] {
                    q.push(QuadRule { bary, weight: w });
                }
            }
            q
        }
    }
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let w = self.dim + 1;
        &self.cells[c * w..(c + 1) * w]
    }

    /// Lebesgue measure of a cell.
    pub fn cell_measure(&self, c: usize) -> f64 {
        let v = self.cell(c);
        match self.dim {
            1 => (self.node(v[1])[0] - self.node(v[0])[0]).abs(),
            _ => {
                let (a, b, d) = (self.node(v[0]), self.node(v[1]), self.node(v[2]));
                0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (b[1] - a[1]) * (d[0] - a[0])).abs()
            }
        }
    }

    /// Point with barycentric coordinates `bary` in cell `c`.
    pub fn point(&self, c: usize, bary: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        for (k, &v) in self.cell(c).iter().enumerate() {
            for (d, pd) in p.iter_mut().enumerate() {
                *pd += bary[k] * self.node(v)[d];
            }
        }
        p
    }

    /// Gradients of the P1 hat functions of cell `c`, one row per vertex.
    pub fn gradients(&self, c: usize) -> Vec<[f64; 2]> {
        let v = self.cell(c);
        match self.dim {
            1 => {
                let w = self.node(v[1])[0] - self.node(v[0])[0];
                vec![[-1.0 / w, 0.0], [1.0 / w, 0.0]]
            }
            _ => {
                let (a, b, d) = (self.node(v[0]), self.node(v[1]), self.node(v[2]));
                let det = (b[0] - a[0]) * (d[1] - a[1]) - (b[1] - a[1]) * (d[0] - a[0]);
                let g1 = [(d[1] - a[1]) / det, -(d[0] - a[0]) / det];
                let g2 = [-(b[1] - a[1]) / det, (b[0] - a[0]) / det];
                vec![[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2]
            }
        }
    }

    fn edge_lengths(&self, c: usize) -> Vec<f64> {
        let v = self.cell(c);
        let mut out = Vec::new();
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                let (a, b) = (self.node(v[i]), self.node(v[j]));
                out.push(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt());
            }
        }
        out
    }

    /// Longest edge.
    pub fn h_max(&self) -> f64 {
        (0..self.n_cells()).flat_map(|c| self.edge_lengths(c)).fold(0.0, f64::max)
    }

    pub fn h_min(&self) -> f64 {
        (0..self.n_cells()).flat_map(|c| self.edge_lengths(c)).fold(f64::INFINITY, f64::min)
    }

    /// max over cells of circumradius / (2·inradius); 1 for equilateral triangles.
    pub fn shape_ratio(&self) -> f64 {
        if self.dim == 1 {
            return 1.0;
        }
        (0..self.n_cells())
            .map(|c| {
                let e = self.edge_lengths(c);
                let area = self.cell_measure(c);
                let per = e.iter().sum::<f64>();
                let r_in = 2.0 * area / per;
                let r_out = e[0] * e[1] * e[2] / (4.0 * area);
                r_out / (2.0 * r_in)
            })
            .fold(0.0, f64::max)
    }

    /// Largest interior angle over all cells, in radians (0 in 1D).
    pub fn max_angle(&self) -> f64 {
        if self.dim == 1 {
            return 0.0;
        }
        (0..self.n_cells())
            .map(|c| {
                let e = self.edge_lengths(c);
                (0..3)
                    .map(|i| {
                        let (a, b, o) = (e[(i + 1) % 3], e[(i + 2) % 3], e[i]);
                        ((a * a + b * b - o * o) / (2.0 * a * b)).clamp(-1.0, 1.0).acos()
                    })
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Smallest facet slack over all quadrature points.
    pub fn min_quadrature_slack(&self, p: &DelzantPolytope) -> f64 {
        let q = quadrature(self.dim);
        (0..self.n_cells())
            .flat_map(|c| q.iter().map(move |r| (c, r.bary)))
            .map(|(c, b)| p.min_slack(&self.point(c, &b)))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Mesh with the default grading: geometric with the given ratio (1 = uniform).
pub fn build_mesh(p: &DelzantPolytope, target_h: f64, grading_ratio: f64) -> Result<Mesh, PolytopeError> {
    let g = if grading_ratio >= 1.0 {
        Grading::Uniform
    } else {
        Grading::Geometric(grading_ratio)
    };
    build_graded_mesh(p, target_h, g)
}

pub fn build_graded_mesh(p: &DelzantPolytope, target_h: f64, grading: Grading) -> Result<Mesh, PolytopeError> {
    assert!(target_h > 0.0, "mesh size must be positive");
    match p.dim() {
        1 => {
            let v = p.vertices_f64();
            let (a, b) = (v[0][0].min(v[1][0]), v[0][0].max(v[1][0]));
            Ok(interval_mesh(a, b, target_h, grading))
        }
        2 => Ok(polygon_mesh(p, target_h, grading)),
        n => Err(PolytopeError::DimensionUnsupported(n)),
    }
}

fn interval_mesh(a: f64, b: f64, h: f64, grading: Grading) -> Mesh {
    let offsets = end_offsets(0.5 * (b - a), h, grading);
    let mut coords: Vec<f64> = offsets.iter().map(|d| a + d).collect();
    coords.pop();
    coords.extend(offsets.iter().rev().map(|d| b - d));
    from_1d(coords, h)
}

/// Ascending distances from a boundary point covering [0, len], graded near 0.
fn end_offsets(len: f64, h: f64, grading: Grading) -> Vec<f64> {
    match grading {
        Grading::Uniform => {
            let n = (len / h).ceil().max(1.0) as usize;
            (0..=n).map(|i| len * i as f64 / n as f64).collect()
        }
        Grading::Geometric(r) => {
            let floor = (h * h).min(h * 1e-2);
            let mut tail = Vec::new();
            let mut w = h * r;
            let mut total = 0.0;
            while w > floor && total + w < len - h {
                tail.push(w);
                total += w;
                w *= r;
            }
            let rest = len - total;
            let nu = (rest / h).ceil().max(1.0) as usize;
            let mut pts = vec![0.0];
            let mut acc = 0.0;
            for w in tail.iter().rev() {
                acc += w;
                pts.push(acc);
            }
            for i in 1..=nu {
                pts.push(total + rest * i as f64 / nu as f64);
            }
            pts
        }
        Grading::Power { beta, h_min } => {
            let gamma = 1.0 / beta;
            let n = (len / (beta * h)).ceil().max(1.0) as usize;
            let mut pts: Vec<f64> = (0..=n).map(|i| len * (i as f64 / n as f64).powf(gamma)).collect();
            // merge cells below the floor into the first one
            while pts.len() > 2 && pts[1] < h_min {
                pts.remove(1);
            }
            pts
        }
    }
}

fn from_1d(coords: Vec<f64>, h: f64) -> Mesh {
    let n = coords.len();
    let cells = (0..n - 1).flat_map(|i| [i, i + 1]).collect();
    Mesh {
        dim: 1,
        coords,
        cells,
        target_h: h,
    }
}

/// Newest-vertex bisection mesh: triangles `[v0, v1, v2]` with refinement edge v0–v1.
struct Nvb {
    pts: Vec<[f64; 2]>,
    tris: Vec<[usize; 3]>,
    mids: HashMap<(usize, usize), usize>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Nvb {
    fn diam(&self, t: &[usize; 3]) -> f64 {
        let d = |i: usize, j: usize| {
            let (a, b) = (self.pts[t[i]], self.pts[t[j]]);
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
        };
        d(0, 1).max(d(1, 2)).max(d(0, 2))
    }

    fn midpoint(&mut self, a: usize, b: usize) -> usize {
        if let Some(&m) = self.mids.get(&key(a, b)) {
            return m;
        }
        let (p, q) = (self.pts[a], self.pts[b]);
        self.pts.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
        let m = self.pts.len() - 1;
        self.mids.insert(key(a, b), m);
        m
    }

    fn hanging(&self, t: &[usize; 3]) -> bool {
        [(0, 1), (1, 2), (0, 2)].iter().any(|&(i, j)| self.mids.contains_key(&key(t[i], t[j])))
    }

    /// Bisects marked triangles and closes the mesh.
    fn refine(&mut self, mark: impl Fn(&Self, &[usize; 3]) -> bool) {
        let mut marked: Vec<bool> = self.tris.iter().map(|t| mark(self, t)).collect();
        loop {
            let mut changed = false;
            let mut next = Vec::with_capacity(self.tris.len() * 2);
            let mut next_mark = Vec::with_capacity(self.tris.len() * 2);
            let tris = std::mem::take(&mut self.tris);
            for (t, m) in tris.into_iter().zip(marked) {
                if m || self.hanging(&t) {
                    let mid = self.midpoint(t[0], t[1]);
                    next.push([t[2], t[0], mid]);
                    next.push([t[1], t[2], mid]);
                    next_mark.extend([false, false]);
                    changed = true;
                } else {
                    next.push(t);
                    next_mark.push(false);
                }
            }
            self.tris = next;
            marked = next_mark;
            if !changed {
                break;
            }
        }
    }
}

/// Fan from the vertex centroid c over the facets. The triangle over facet
/// [a, b] is cut into layers c + τ(q − c), q ∈ [a, b], parallel to the facet;
/// the τ-levels are shared by all facets and graded toward τ = 1, and each
/// facet segment is split with the same grading toward both of its ends.
fn polygon_mesh(p: &DelzantPolytope, h: f64, grading: Grading) -> Mesh {
    let verts = p.vertices_f64();
    let c = [
        verts.iter().map(|v| v[0]).sum::<f64>() / verts.len() as f64,
        verts.iter().map(|v| v[1]).sum::<f64>() / verts.len() as f64,
    ];
    let mut order: Vec<usize> = (0..verts.len()).collect();
    order.sort_by(|&i, &j| {
        let ai = (verts[i][1] - c[1]).atan2(verts[i][0] - c[0]);
        let aj = (verts[j][1] - c[1]).atan2(verts[j][0] - c[0]);
        ai.partial_cmp(&aj).expect("finite angles")
    });
    let corners: Vec<[f64; 2]> = order.iter().map(|&i| [verts[i][0], verts[i][1]]).collect();
    let nv = corners.len();
    let depth = (0..nv)
        .map(|f| {
            let (a, b) = (corners[f], corners[(f + 1) % nv]);
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            ((a[0] - c[0]) * dy - (a[1] - c[1]) * dx).abs() / dx.hypot(dy)
        })
        .fold(0.0, f64::max);
    let tau: Vec<f64> = end_offsets(depth, h, grading).iter().rev().map(|d| 1.0 - d / depth).collect();
    let nl = tau.len();
    let at = |q: [f64; 2], t: f64| [c[0] + t * (q[0] - c[0]), c[1] + t * (q[1] - c[1])];

    let mut pts = vec![c];
    // ray[v][j]: node on the ray to corner v at level j ≥ 1
    let mut ray = vec![vec![0usize; nl]; nv];
    for (v, r) in ray.iter_mut().enumerate() {
        for (j, rj) in r.iter_mut().enumerate().skip(1) {
            pts.push(at(corners[v], tau[j]));
            *rj = pts.len() - 1;
        }
    }
    let mut tris = Vec::new();
    for f in 0..nv {
        let (a, b) = (corners[f], corners[(f + 1) % nv]);
        let len = (a[0] - b[0]).hypot(a[1] - b[1]);
        let half = end_offsets(0.5 * len, h, grading);
        let mut ts: Vec<f64> = half.iter().map(|d| d / len).collect();
        ts.pop();
        ts.extend(half.iter().rev().map(|d| 1.0 - d / len));
        let segs = ts.len() - 1;
        let layer = |j: usize, pts: &mut Vec<[f64; 2]>| -> Vec<usize> {
            let mut ids = vec![ray[f][j]];
            for &t in &ts[1..segs] {
                pts.push(at([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], tau[j]));
                ids.push(pts.len() - 1);
            }
            ids.push(ray[(f + 1) % nv][j]);
            ids
        };
        let mut inner = layer(1, &mut pts);
        for i in 0..segs {
            tris.push([0, inner[i], inner[i + 1]]);
        }
        for j in 2..nl {
            let outer = layer(j, &mut pts);
            for i in 0..segs {
                let (p0, p1, q0, q1) = (inner[i], inner[i + 1], outer[i], outer[i + 1]);
                let len = |u: usize, v: usize| (pts[u][0] - pts[v][0]).hypot(pts[u][1] - pts[v][1]);
                if len(p0, q1) <= len(p1, q0) {
                    tris.push([p0, q0, q1]);
                    tris.push([p0, q1, p1]);
                } else {
                    tris.push([p1, q0, q1]);
                    tris.push([p0, q0, p1]);
                }
            }
            inner = outer;
        }
    }
    finish(
        Nvb {
            pts,
            tris,
            mids: HashMap::new(),
        },
        h,
    )
}

/// Polygon mesh with cell diameters ≤ h in two parts. A strip of width
/// w ≤ `layer` along ∂P is cut by lines parallel to each facet at distances
/// w·(i/N)² (i = 0..N), joined at the corners along the segments from the
/// vertices of P to the vertices of the inner offset polygon. The inner
/// polygon is meshed by newest-vertex bisection, conforming with the strip.
/// Every cell touching a facet has its opposite side parallel to it, so nodal
/// interpolants of functions behaving like √ℓ near the facet converge.
pub fn layered_mesh(p: &DelzantPolytope, h: f64, layer: f64) -> Result<Mesh, PolytopeError> {
    assert!(h > 0.0 && layer > 0.0, "mesh parameters must be positive");
    if p.dim() != 2 {
        return Err(PolytopeError::DimensionUnsupported(p.dim()));
    }
    let outer = ccw_vertices(p);
    let nv = outer.len();
    let t = h / 2f64.sqrt();
    let (w, inner) = offset_polygon(&outer, layer);
    let dist = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
    // facet i runs from vertex i to vertex i + 1; tangential stretch from inner to outer edge
    let stretch = (0..nv)
        .map(|i| dist(outer[i], outer[(i + 1) % nv]) / dist(inner[i], inner[(i + 1) % nv]))
        .fold(1.0, f64::max);
    // connector i joins outer[i] (ℓ = 0) to inner[i] (ℓ = w) across the corner
    let slant = (0..nv).map(|i| dist(outer[i], inner[i]) / w).fold(1.0, f64::max);
    let n_layers = (2.0 * w * slant / t).ceil().max(1.0) as usize;
    let d: Vec<f64> = (0..=n_layers).map(|j| w * (1.0 - j as f64 / n_layers as f64).powi(2)).collect();

    let edge_size = t / stretch;
    let near = 2.0 * h;
    let inner_poly = inner.clone();
    let size = move |x: [f64; 2]| {
        let m = inner_poly.len();
        let to_edge = (0..m)
            .map(|i| {
                let (a, b) = (inner_poly[i], inner_poly[(i + 1) % m]);
                let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
                ((x[0] - a[0]) * ey - (x[1] - a[1]) * ex).abs() / ex.hypot(ey)
            })
            .fold(f64::INFINITY, f64::min);
        if to_edge < near {
            edge_size
        } else {
            h
        }
    };
    let core = refine_triangulation(inner.clone(), min_max_angle(&inner), size);
    let mut pts: Vec<[f64; 2]> = (0..core.n_nodes()).map(|i| [core.node(i)[0], core.node(i)[1]]).collect();
    let mut tris: Vec<[usize; 3]> = core.cells.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();

    // connector nodes: conn[i][j] at distance d[j] from both facets meeting at vertex i
    let conn: Vec<Vec<usize>> = (0..nv)
        .map(|i| {
            (0..=n_layers)
                .map(|j| {
                    if j == 0 {
                        return i;
                    }
                    let f = d[j] / w;
                    pts.push([outer[i][0] + f * (inner[i][0] - outer[i][0]), outer[i][1] + f * (inner[i][1] - outer[i][1])]);
                    pts.len() - 1
                })
                .collect()
        })
        .collect();
    for i in 0..nv {
        let (a, b) = (inner[i], inner[(i + 1) % nv]);
        let len = dist(a, b);
        let (ex, ey) = ((b[0] - a[0]) / len, (b[1] - a[1]) / len);
        let mut on_edge: Vec<(f64, usize)> = (nv..core.n_nodes())
            .filter_map(|k| {
                let x = pts[k];
                let (rx, ry) = (x[0] - a[0], x[1] - a[1]);
                let u = (rx * ex + ry * ey) / len;
                ((rx * ey - ry * ex).abs() < 1e-12 * len.max(1.0) && u > 0.0 && u < 1.0).then_some((u, k))
            })
            .collect();
        on_edge.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite"));
        let j_next = (i + 1) % nv;
        let mut prev: Vec<usize> = std::iter::once(i).chain(on_edge.iter().map(|e| e.1)).chain(std::iter::once(j_next)).collect();
        for j in 1..=n_layers {
            let (pa, pb) = (pts[conn[i][j]], pts[conn[j_next][j]]);
            let mut row = vec![conn[i][j]];
            for &(u, _) in &on_edge {
                pts.push([pa[0] + u * (pb[0] - pa[0]), pa[1] + u * (pb[1] - pa[1])]);
                row.push(pts.len() - 1);
            }
            row.push(conn[j_next][j]);
            for q in 0..row.len() - 1 {
                let (p0, p1, q0, q1) = (prev[q], prev[q + 1], row[q], row[q + 1]);
                if dist(pts[p0], pts[q1]) <= dist(pts[p1], pts[q0]) {
                    tris.push([p0, q0, q1]);
                    tris.push([p0, q1, p1]);
                } else {
                    tris.push([p1, q0, q1]);
                    tris.push([p0, q0, p1]);
                }
            }
            prev = row;
        }
    }
    let h_max = tris
        .iter()
        .map(|t| {
            let e = |u: usize, v: usize| dist(pts[t[u]], pts[t[v]]);
            e(0, 1).max(e(1, 2)).max(e(0, 2))
        })
        .fold(0.0, f64::max);
    Ok(finish(
        Nvb {
            pts,
            tris,
            mids: HashMap::new(),
        },
        h_max,
    ))
}

fn ccw_vertices(p: &DelzantPolytope) -> Vec<[f64; 2]> {
    let verts = p.vertices_f64();
    let c = [
        verts.iter().map(|v| v[0]).sum::<f64>() / verts.len() as f64,
        verts.iter().map(|v| v[1]).sum::<f64>() / verts.len() as f64,
    ];
    let mut pts: Vec<[f64; 2]> = verts.iter().map(|v| [v[0], v[1]]).collect();
    pts.sort_by(|a, b| {
        let ta = (a[1] - c[1]).atan2(a[0] - c[0]);
        let tb = (b[1] - c[1]).atan2(b[0] - c[0]);
        ta.partial_cmp(&tb).expect("finite angles")
    });
    pts
}

/// Inner polygon at distance w from every edge of a convex CCW polygon, with
/// w ≤ `target` halved until every inner edge keeps at least half its length.
fn offset_polygon(outer: &[[f64; 2]], target: f64) -> (f64, Vec<[f64; 2]>) {
    let n = outer.len();
    // edge i: point outer[i], unit direction e_i, inward normal (−e_y, e_x)
    let dirs: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let (a, b) = (outer[i], outer[(i + 1) % n]);
            let l = (b[0] - a[0]).hypot(b[1] - a[1]);
            [(b[0] - a[0]) / l, (b[1] - a[1]) / l]
        })
        .collect();
    let mut w = target;
    loop {
        let inner: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let (e0, e1) = (dirs[(i + n - 1) % n], dirs[i]);
                // v + w·(n0 + n1 − (n0·n1) …): solve n_k·(x − v) = w for both edges through v
                let (n0, n1) = ([-e0[1], e0[0]], [-e1[1], e1[0]]);
                let det = n0[0] * n1[1] - n0[1] * n1[0];
                let dx = w * (n1[1] - n0[1]) / det;
                let dy = w * (n0[0] - n1[0]) / det;
                [outer[i][0] + dx, outer[i][1] + dy]
            })
            .collect();
        let ok = (0..n).all(|i| {
            let (a, b) = (inner[i], inner[(i + 1) % n]);
            let (oa, ob) = (outer[i], outer[(i + 1) % n]);
            let along = (b[0] - a[0]) * dirs[i][0] + (b[1] - a[1]) * dirs[i][1];
            along >= 0.5 * (ob[0] - oa[0]).hypot(ob[1] - oa[1])
        });
        if ok {
            return (w, inner);
        }
        w *= 0.5;
    }
}

/// Triangulation of a convex polygon (vertices in order) minimising the
/// largest angle; each triangle lists its longest edge first.
fn min_max_angle(pts: &[[f64; 2]]) -> Vec<[usize; 3]> {
    let n = pts.len();
    let angle = |a: usize, b: usize, c: usize| {
        let (u, v) = ([pts[b][0] - pts[a][0], pts[b][1] - pts[a][1]], [pts[c][0] - pts[a][0], pts[c][1] - pts[a][1]]);
        (u[0] * v[1] - u[1] * v[0]).abs().atan2(u[0] * v[0] + u[1] * v[1])
    };
    let worst = |a: usize, b: usize, c: usize| angle(a, b, c).max(angle(b, c, a)).max(angle(c, a, b));
    // best[i][j]: largest angle of the best triangulation of the sub-polygon i..=j
    let mut best = vec![vec![0.0f64; n]; n];
    let mut split = vec![vec![0usize; n]; n];
    for len in 2..n {
        for i in 0..n - len {
            let j = i + len;
            best[i][j] = f64::INFINITY;
            for k in i + 1..j {
                let v = best[i][k].max(best[k][j]).max(worst(i, k, j));
                if v < best[i][j] {
                    best[i][j] = v;
                    split[i][j] = k;
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut stack = vec![(0, n - 1)];
    while let Some((i, j)) = stack.pop() {
        if j < i + 2 {
            continue;
        }
        let k = split[i][j];
        let d2 = |a: usize, b: usize| (pts[a][0] - pts[b][0]).powi(2) + (pts[a][1] - pts[b][1]).powi(2);
        let (e_ij, e_ik, e_kj) = (d2(i, j), d2(i, k), d2(k, j));
        out.push(if e_ij >= e_ik && e_ij >= e_kj {
            [i, j, k]
        } else if e_ik >= e_kj {
            [i, k, j]
        } else {
            [k, j, i]
        });
        stack.push((i, k));
        stack.push((k, j));
    }
    out
}

/// Refines an initial triangulation by newest-vertex bisection until every
/// triangle has diameter ≤ `size` at its centroid. Each input triangle lists
/// its refinement edge first (v0–v1); boundary edges there keep the
/// bisection compatible.
pub fn refine_triangulation(pts: Vec<[f64; 2]>, tris: Vec<[usize; 3]>, size: impl Fn([f64; 2]) -> f64) -> Mesh {
    let mut m = Nvb {
        pts,
        tris,
        mids: HashMap::new(),
    };
    let centroid = |mm: &Nvb, t: &[usize; 3]| {
        let (a, b, d) = (mm.pts[t[0]], mm.pts[t[1]], mm.pts[t[2]]);
        [(a[0] + b[0] + d[0]) / 3.0, (a[1] + b[1] + d[1]) / 3.0]
    };
    loop {
        let need = |mm: &Nvb, t: &[usize; 3]| mm.diam(t) > size(centroid(mm, t));
        if !m.tris.iter().any(|t| need(&m, t)) {
            break;
        }
        m.refine(need);
    }
    let h = m.tris.iter().map(|t| m.diam(t)).fold(0.0, f64::max);
    finish(m, h)
}

fn finish(m: Nvb, h: f64) -> Mesh {
    let mut cells = Vec::with_capacity(3 * m.tris.len());
    for t in &m.tris {
        let (a, b, d) = (m.pts[t[0]], m.pts[t[1]], m.pts[t[2]]);
        let det = (b[0] - a[0]) * (d[1] - a[1]) - (b[1] - a[1]) * (d[0] - a[0]);
        if det > 0.0 {
            cells.extend_from_slice(t);
        } else {
            cells.extend([t[0], t[2], t[1]]);
        }
    }
    Mesh {
        dim: 2,
        coords: m.pts.iter().flat_map(|q| [q[0], q[1]]).collect(),
        cells,
        target_h: h,
    }
}
