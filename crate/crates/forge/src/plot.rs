//! Plot data export and minimal SVG rendering.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use illusion_forge_core::analysis::BandRow;

pub const CSV_HEADER: [&str; 5] = ["x", "y", "fit", "band_lo", "band_hi"];

/// 17 significant digits: enough to round-trip any f64.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes rows sorted by x (ties by y) with a header row.
pub fn export_plot_data(rows: &[BandRow], path: &Path) -> Result<()> {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(CSV_HEADER)?;
    for r in &sorted {
        w.write_record([num(r.x), num(r.y), num(r.fit), num(r.lo), num(r.hi)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_plot_data(path: &Path) -> Result<Vec<BandRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> { Ok(rec[i].parse()?) };
        out.push(BandRow { x: f(0)?, y: f(1)?, fit: f(2)?, lo: f(3)?, hi: f(4)? });
    }
    Ok(out)
}

/// Scatter of the data, the fitted curve and its shaded band.
pub fn svg_fit_plot(rows: &[BandRow], title: &str, x_label: &str, y_label: &str) -> String {
    const W: f64 = 480.0;
    const H: f64 = 320.0;
    const PAD: f64 = 48.0;
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x));
    let xs = sorted.iter().map(|r| r.x);
    let ys = sorted.iter().flat_map(|r| [r.y, r.lo, r.hi]);
    let (x0, x1) = bounds(xs);
    let (y0, y1) = bounds(ys);
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, W / 2.0, H - 10.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    if !sorted.is_empty() {
        let mut band = String::new();
        for r in &sorted {
            let _ = write!(band, "{:.2},{:.2} ", px(r.x), py(r.hi));
        }
        for r in sorted.iter().rev() {
            let _ = write!(band, "{:.2},{:.2} ", px(r.x), py(r.lo));
        }
        let _ = writeln!(s, r##"<polygon class="band" points="{}" fill="#f4a261" fill-opacity="0.3" stroke="none"/>"##, band.trim_end());
        let line: Vec<String> = sorted.iter().map(|r| format!("{:.2},{:.2}", px(r.x), py(r.fit))).collect();
        let _ = writeln!(s, r##"<polyline class="fit" points="{}" fill="none" stroke="#e76f51" stroke-width="2"/>"##, line.join(" "));
        for r in &sorted {
            let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#264653"/>"##, px(r.x), py(r.y));
        }
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One column per entry with its illusory render on top and its control
/// below. Image paths are written as given, relative to the SVG.
pub fn svg_montage(columns: &[(String, String, String)], tile: u32) -> String {
    let label_h = 20;
    let (w, h) = (tile * columns.len() as u32, 2 * tile + label_h);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (i, (name, top, bottom)) in columns.iter().enumerate() {
        let x = i as u32 * tile;
        let _ = writeln!(s, r#"<text x="{}" y="14" text-anchor="middle" font-size="12">{}</text>"#, x + tile / 2, escape(name));
        let _ = writeln!(s, r#"<image x="{x}" y="{label_h}" width="{tile}" height="{tile}" href="{}"/>"#, escape(top));
        let _ = writeln!(s, r#"<image x="{x}" y="{}" width="{tile}" height="{tile}" href="{}"/>"#, label_h + tile, escape(bottom));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_series_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        export_plot_data(&[], &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "x,y,fit,band_lo,band_hi\n");
    }

    #[test]
    fn round_trip_exact_and_sorted() {
        let rows = vec![
            BandRow { x: 0.7, y: 1.0 / 3.0, fit: 0.1 + 0.2, lo: -1e-300, hi: 123456.789 },
            BandRow { x: 0.1, y: std::f64::consts::PI, fit: 2.0, lo: 1.0, hi: 3.0 },
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        export_plot_data(&rows, &p).unwrap();
        let back = read_plot_data(&p).unwrap();
        assert_eq!(back, vec![rows[1].clone(), rows[0].clone()]);
    }

    #[test]
    fn montage_grid_is_columns_by_two() {
        let cols: Vec<_> = (0..5).map(|i| (format!("f{i}"), format!("{i}a.png"), format!("{i}b.png"))).collect();
        let svg = svg_montage(&cols, 224);
        assert_eq!(svg.matches("<image").count(), 10);
        assert!(svg.contains(r#"width="1120" height="468""#));
    }
}
