//! Deterministic static plots from a report: solution constellations in the
//! complex plane, eigenvalue strip plots, and a monodromy-distance CSV.
//! Missing report fields are tolerated with a warning.

use std::io;
use std::path::Path;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 40.0;

pub fn render(report: &serde_json::Value, out: &Path) -> io::Result<()> {
    std::fs::create_dir_all(out)?;
    let artifacts = &report["artifacts"];
    if artifacts.is_null() {
        eprintln!("warning: report has no artifacts; nothing to plot");
        return Ok(());
    }
    constellation(artifacts, &out.join("constellation.svg"))?;
    spectrum_strip(artifacts, &out.join("spectrum.svg"))?;
    monodromy_csv(artifacts, &out.join("monodromy.csv"))?;
    Ok(())
}

fn points_of(v: &serde_json::Value) -> Vec<(f64, f64)> {
    v.as_array()
        .map(|a| {
            a.iter()
                .filter_map(|p| {
                    let pair = p.as_array()?;
                    Some((pair.first()?.as_f64()?, pair.get(1)?.as_f64()?))
                })
                .collect()
        })
        .unwrap_or_default()
}

/// Scatter of the marked points z_i (squares) and auxiliary points w_j
/// (circles) in the complex plane.
fn constellation(artifacts: &serde_json::Value, path: &Path) -> io::Result<()> {
    let z = points_of(&artifacts["points"]);
    let mut w: Vec<(f64, f64)> = Vec::new();
    if let Some(sols) = artifacts["solutions"].as_array() {
        for s in sols {
            w.extend(points_of(&s["w"]));
        }
    }
    if z.is_empty() && w.is_empty() {
        eprintln!("warning: no points to plot in constellation");
    }
    let all: Vec<(f64, f64)> = z.iter().chain(&w).copied().collect();
    let (map_x, map_y) = mapper(&all);
    let mut svg = svg_header();
    for (x, y) in &z {
        svg.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"8\" height=\"8\" fill=\"#1f4e79\"/>\n",
            map_x(*x) - 4.0,
            map_y(*y) - 4.0
        ));
    }
    for (x, y) in &w {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#c0392b\"/>\n",
            map_x(*x),
            map_y(*y)
        ));
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)
}

/// One horizontal strip per operator block; ticks at the real parts of the
/// eigenvalues.
fn spectrum_strip(artifacts: &serde_json::Value, path: &Path) -> io::Result<()> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    if let Some(specs) = artifacts["spectra"].as_array() {
        for s in specs {
            if let Some(evs) = s["spectrum"]["eigenvalues"].as_array() {
                let mut row = Vec::new();
                for e in evs {
                    if let Some(re) = e.as_array().and_then(|a| a.first()).and_then(|x| x.as_f64())
                    {
                        row.push(re);
                    }
                }
                if !row.is_empty() {
                    rows.push(row);
                }
            }
        }
    }
    if rows.is_empty() {
        eprintln!("warning: no spectra in report");
    }
    let all: Vec<(f64, f64)> = rows
        .iter()
        .flat_map(|r| r.iter().map(|&x| (x, 0.0)))
        .collect();
    let (map_x, _) = mapper(&all);
    let mut svg = svg_header();
    let n = rows.len().max(1) as f64;
    for (i, row) in rows.iter().enumerate() {
        let y = MARGIN + (H - 2.0 * MARGIN) * (i as f64 + 0.5) / n;
        svg.push_str(&format!(
            "<line x1=\"{MARGIN}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#999\"/>\n",
            W - MARGIN
        ));
        for x in row {
            svg.push_str(&format!(
                "<line x1=\"{0:.2}\" y1=\"{1:.2}\" x2=\"{0:.2}\" y2=\"{2:.2}\" stroke=\"#1f4e79\" stroke-width=\"2\"/>\n",
                map_x(*x),
                y - 8.0,
                y + 8.0
            ));
        }
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)
}

/// Frozen CSV columns: label,projective_distance,det_deviation.
fn monodromy_csv(artifacts: &serde_json::Value, path: &Path) -> io::Result<()> {
    let mut csv = String::from("label,projective_distance,det_deviation\n");
    if let Some(rows) = artifacts["monodromy"].as_array() {
        for r in rows {
            csv.push_str(&format!(
                "{},{:e},{:e}\n",
                r["label"].as_str().unwrap_or("?"),
                r["projective_distance"].as_f64().unwrap_or(f64::NAN),
                r["det_deviation"].as_f64().unwrap_or(f64::NAN),
            ));
        }
    }
    std::fs::write(path, csv)
}

fn svg_header() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    )
}

type Mapper = Box<dyn Fn(f64) -> f64>;

fn mapper(points: &[(f64, f64)]) -> (Mapper, Mapper) {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for (x, y) in points {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if points.is_empty() {
        (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
    }
    let pad = |a: f64, b: f64| {
        let d = (b - a).max(1e-9);
        (a - 0.1 * d, b + 0.1 * d)
    };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    let fx = move |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let fy = move |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    (Box::new(fx), Box::new(fy))
}
