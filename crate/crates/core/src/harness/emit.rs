use super::{ConvergenceReport, HarnessError, PointTable};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

fn join<T: ToString>(v: &[T], sep: &str) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

/// Writes report.json, eigs_k{K}.csv, localization.csv, kernel.csv and
/// plot_b{i}.svg into `dir`; tables without rows produce no file.
pub fn emit_reports(report: &ConvergenceReport, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<(), HarnessError> {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    put("report.json".into(), report.to_json() + "\n")?;

    let mut ks: Vec<i64> = report.spectra.iter().map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();
    for k in ks {
        let mut csv = String::from("s,mode,bs,h,dofs,level,dbar_eigenvalue,residual\n");
        for r in report.spectra.iter().filter(|r| r.k == k) {
            for (j, (l, res)) in r.dbar_eigenvalues.iter().zip(&r.residuals).enumerate() {
                writeln!(csv, "{},{},{},{},{},{},{},{}", r.s, join(&r.mode, ";"), r.bs, r.h, r.dofs, j, l, res).unwrap();
            }
        }
        put(format!("eigs_k{k}.csv"), csv)?;
    }

    if !report.localization.is_empty() {
        let mut csv = String::from("k,s,mode,level,c_min");
        for c in &report.c_grid {
            write!(csv, ",c={c}").unwrap();
        }
        csv.push('\n');
        for r in &report.localization {
            write!(csv, "{},{},{},{},{}", r.k, r.s, join(&r.mode, ";"), r.level, r.c_min).unwrap();
            for f in &r.fractions {
                write!(csv, ",{f}").unwrap();
            }
            csv.push('\n');
        }
        put("localization.csv".into(), csv)?;
    }

    if !report.kernel.is_empty() {
        let mut csv = String::from("k,s,zero_modes,lattice_points\n");
        for r in &report.kernel {
            writeln!(csv, "{},{},{},{}", r.k, r.s, r.zero_modes, r.lattice_points).unwrap();
        }
        put("kernel.csv".into(), csv)?;
    }

    for (i, p) in report.points.iter().enumerate() {
        put(format!("plot_b{i}.svg"), svg_plot(p))?;
    }
    Ok(written)
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Eigenvalue trajectories against log s with dashed lines at the predicted limits.
pub fn svg_plot(p: &PointTable) -> String {
    let ls: Vec<f64> = p.rows.iter().map(|r| r.s.log10()).collect();
    let (x0, x1) = match (ls.iter().cloned().reduce(f64::min), ls.iter().cloned().reduce(f64::max)) {
        (Some(a), Some(b)) if b > a => (a, b),
        (Some(a), _) => (a - 0.5, a + 0.5),
        _ => (-1.0, 0.0),
    };
    let ymax = p
        .rows
        .iter()
        .flat_map(|r| r.computed.iter())
        .chain(&p.predicted)
        .cloned()
        .fold(1.0, f64::max)
        * 1.1;
    // larger s on the left, so time runs toward the limit
    let px = |l: f64| MARGIN + (x1 - l) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - y / ymax * (H - 2.0 * MARGIN);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#).unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">k = {}, b = ({}), m = ({})</text>"#,
        W / 2.0,
        p.k,
        join(&p.b, ", "),
        join(&p.mode, ", ")
    )
    .unwrap();
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    writeln!(s, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#).unwrap();
    for row in &p.rows {
        let x = px(row.s.log10());
        writeln!(s, r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, b + 5.0).unwrap();
        writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            b + 18.0,
            row.s
        )
        .unwrap();
    }
    for i in 0..=4 {
        let v = ymax * i as f64 / 4.0;
        let y = py(v);
        writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="black"/>"#, l - 5.0).unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.2}</text>"#,
            l - 8.0,
            y + 4.0
        )
        .unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">s</text>"#, W / 2.0, H - 15.0).unwrap();
    for (j, mu) in p.predicted.iter().enumerate() {
        let y = py(*mu);
        let c = COLORS[j % COLORS.len()];
        writeln!(s, r#"<line x1="{l}" y1="{y:.2}" x2="{r}" y2="{y:.2}" stroke="{c}" stroke-dasharray="6 4"/>"#).unwrap();
    }
    let levels = p.rows.iter().map(|r| r.computed.len()).max().unwrap_or(0);
    for j in 0..levels {
        let c = COLORS[j % COLORS.len()];
        let pts: Vec<String> = p
            .rows
            .iter()
            .filter_map(|r| r.computed.get(j).map(|v| format!("{:.2},{:.2}", px(r.s.log10()), py(*v))))
            .collect();
        writeln!(s, r#"<polyline points="{}" stroke="{c}" fill="none" stroke-width="2"/>"#, pts.join(" ")).unwrap();
        for pt in &pts {
            let (x, y) = pt.split_once(',').expect("point");
            writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{c}"/>"#).unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}
