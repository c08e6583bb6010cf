//! Minimal SVG charts: Pareto scatter plots and metric curves.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::manifest::{default_objectives, ObjectiveInfo};
use super::HarnessError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 64.0;
const PALETTE: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit<'a>(pts: impl Iterator<Item = &'a (f64, f64)>) -> Self {
        let (mut x, mut y) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
        for &(a, b) in pts.filter(|p| p.0.is_finite() && p.1.is_finite()) {
            x = (x.0.min(a), x.1.max(a));
            y = (y.0.min(b), y.1.max(b));
        }
        let widen = |r: (f64, f64)| {
            if !r.0.is_finite() {
                (0.0, 1.0)
            } else if r.1 - r.0 <= 0.0 {
                (r.0 - 0.5 * r.0.abs().max(1.0), r.1 + 0.5 * r.1.abs().max(1.0))
            } else {
                let pad = 0.05 * (r.1 - r.0);
                (r.0 - pad, r.1 + pad)
            }
        };
        Self { x: widen(x), y: widen(y) }
    }

    fn px(&self, p: (f64, f64)) -> (f64, f64) {
        let u = (p.0 - self.x.0) / (self.x.1 - self.x.0);
        let v = (p.1 - self.y.0) / (self.y.1 - self.y.0);
        (MARGIN + u * (WIDTH - 2.0 * MARGIN), HEIGHT - MARGIN - v * (HEIGHT - 2.0 * MARGIN))
    }
}

fn open(svg: &mut String, frame: &Frame, title: &str, x_label: &str, y_label: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, y0) = (MARGIN, HEIGHT - MARGIN);
    let (x1, y1) = (WIDTH - MARGIN, MARGIN);
    let _ = writeln!(svg, r#"<path class="axes" d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" stroke="black" fill="none"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#, WIDTH / 2.0, HEIGHT - 16.0, escape(x_label));
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (v, anchor, x, y) in [
        (frame.x.0, "start", x0, y0 + 16.0),
        (frame.x.1, "end", x1, y0 + 16.0),
        (frame.y.0, "end", x0 - 4.0, y0),
        (frame.y.1, "end", x0 - 4.0, y1 + 4.0),
    ] {
        let _ = writeln!(svg, r#"<text class="tick" x="{x}" y="{y}" text-anchor="{anchor}" font-size="10">{v:.4}</text>"#);
    }
}

/// Scatter plot with one `marker` circle per point.
pub fn scatter_svg(points: &[(f64, f64)], title: &str, x_label: &str, y_label: &str) -> String {
    let frame = Frame::fit(points.iter());
    let mut svg = String::new();
    open(&mut svg, &frame, title, x_label, y_label);
    for &p in points {
        let (x, y) = frame.px(p);
        let _ = writeln!(svg, r#"<circle class="marker" cx="{x:.2}" cy="{y:.2}" r="4" fill="{}"/>"#, PALETTE[0]);
    }
    svg.push_str("</svg>\n");
    svg
}

/// Line chart with one polyline per named series.
pub fn line_svg(series: &[(String, Vec<(f64, f64)>)], title: &str, x_label: &str, y_label: &str) -> String {
    let frame = Frame::fit(series.iter().flat_map(|s| s.1.iter()));
    let mut svg = String::new();
    open(&mut svg, &frame, title, x_label, y_label);
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&p| {
                let (x, y) = frame.px(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            coords.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text class="legend" x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 150.0,
            MARGIN + 14.0 * k as f64,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Per-series `(generation, igd, hv)` rows of a metrics CSV. Series are keyed
/// by the `run` column when present, otherwise by `algorithm`.
pub fn read_metrics_series(path: &Path) -> Result<Vec<(String, Vec<(f64, f64, f64)>)>, HarnessError> {
    let bad = |m: String| HarnessError::PlotInput(format!("{}: {m}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (g, igd, hv) = match (col("generation"), col("igd"), col("hv")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(bad("expected generation, igd and hv columns".into())),
    };
    let key = col("run").or(col("algorithm"));
    let mut series: Vec<(String, Vec<(f64, f64, f64)>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> Result<f64, HarnessError> {
            let s = rec.get(i).unwrap_or("");
            s.trim().parse::<f64>().map_err(|_| bad(format!("not a number: '{s}'")))
        };
        let name = key.and_then(|k| rec.get(k)).unwrap_or("run").to_string();
        let row = (num(g)?, num(igd)?, num(hv)?);
        match series.iter_mut().find(|s| s.0 == name) {
            Some(s) => s.1.push(row),
            None => series.push((name, vec![row])),
        }
    }
    if series.is_empty() {
        return Err(bad("no rows".into()));
    }
    Ok(series)
}

fn read_front(path: &Path) -> Result<Vec<(f64, f64)>, HarnessError> {
    let ep = crate::evolve::read_ep_csv(path).map_err(|e| HarnessError::PlotInput(format!("{}: {e}", path.display())))?;
    Ok(ep.iter().map(|m| (m.objectives[0], m.objectives[1])).collect())
}

fn axis_label(o: &ObjectiveInfo) -> String {
    format!("{} ({}) [{}]", o.label, o.name, o.unit)
}

/// Write `igd.svg`, `hv.svg` and one `pareto_<stem>.svg` per archive file.
pub fn render(
    metrics: &Path,
    archives: &[PathBuf],
    objectives: Option<&[ObjectiveInfo]>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    let series = read_metrics_series(metrics)?;
    let fronts = archives
        .iter()
        .map(|p| read_front(p).map(|f| (p, f)))
        .collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::Runtime(format!("{}: {e}", out_dir.display())))?;
    let defaults = default_objectives();
    let objectives = objectives.filter(|o| o.len() >= 2).unwrap_or(&defaults);
    let (xl, yl) = (axis_label(&objectives[0]), axis_label(&objectives[1]));
    let mut written = Vec::new();
    let mut emit = |name: String, body: String| -> Result<(), HarnessError> {
        let path = out_dir.join(name);
        std::fs::write(&path, body).map_err(|e| HarnessError::Runtime(format!("{}: {e}", path.display())))?;
        written.push(path);
        Ok(())
    };
    for (k, title) in [(1usize, "IGD"), (2, "Hypervolume")] {
        let lines: Vec<(String, Vec<(f64, f64)>)> = series
            .iter()
            .map(|(n, rows)| (n.clone(), rows.iter().map(|r| (r.0, if k == 1 { r.1 } else { r.2 })).collect()))
            .collect();
        let file = if k == 1 { "igd.svg" } else { "hv.svg" };
        emit(file.into(), line_svg(&lines, title, "generation", title))?;
    }
    for (path, front) in fronts {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "front".into());
        emit(format!("pareto_{stem}.svg"), scatter_svg(&front, &format!("Pareto front {stem}"), &xl, &yl))?;
    }
    Ok(written)
}
