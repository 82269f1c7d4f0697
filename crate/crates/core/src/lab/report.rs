//! Output files: CSV tables, log-log SVG plots and JSON summaries. Every
//! file is written to a temporary sibling and renamed into place.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

use super::rates::{RateTable, RateVariable};

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Log-log plot of `mean_err` against the swept parameter with the fitted
/// line. `None` when no row has a positive error.
pub fn loglog_svg(table: &RateTable) -> Option<String> {
    let pts: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter(|r| r.param > 0.0 && r.mean_err > 0.0)
        .map(|r| (r.param.log10(), r.mean_err.log10()))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let (w, h, pad) = (560.0, 400.0, 60.0);
    let span = |v: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if hi - lo < 1e-9 {
            (lo - 0.5, hi + 0.5)
        } else {
            let m = 0.08 * (hi - lo);
            (lo - m, hi + m)
        }
    };
    let (x0, x1) = span(&mut pts.iter().map(|p| p.0));
    let (y0, y1) = span(&mut pts.iter().map(|p| p.1));
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);

    let label = match table.variable {
        RateVariable::N => "N",
        RateVariable::Tau => "tau",
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    for (x, y) in &pts {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="steelblue"/>"#,
            sx(*x),
            sy(*y)
        );
    }
    if let Some(fit) = &table.fit {
        let ln10 = std::f64::consts::LN_10;
        let line = |x: f64| (fit.intercept + fit.slope * x * ln10) / ln10;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-dasharray="6 4"/>"#,
            sx(x0),
            sy(line(x0)),
            sx(x1),
            sy(line(x1))
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14">slope {:.3} (expected {:.3})</text>"#,
            pad,
            pad - 20.0,
            fit.slope,
            table.expected_slope
        );
    }
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">{:.3e}</text>"#,
            sx(v),
            h - pad + 18.0,
            10f64.powf(v)
        );
    }
    for v in [y0, y1] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{:.3e}</text>"#,
            pad - 6.0,
            sy(v),
            10f64.powf(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{label} (log scale)</text>"#,
        w / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" font-family="sans-serif" font-size="13" transform="rotate(-90 15 {})" text-anchor="middle">mean sup BL error</text>"#,
        h / 2.0,
        h / 2.0
    );
    s.push_str("</svg>\n");
    Some(s)
}

#[derive(Serialize)]
struct RateSummary<'a> {
    pass: bool,
    slope: Option<f64>,
    slope_ci: Option<(f64, f64)>,
    expected_slope: f64,
    band: (f64, f64),
    moments_ok: bool,
    table: &'a RateTable,
}

/// Writes `<name>.csv`, `<name>.json` and, when there is something to plot,
/// `<name>.svg` into `dir`. Returns the paths written.
pub fn emit_report(dir: &Path, name: &str, table: &RateTable) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let csv = dir.join(format!("{name}.csv"));
    write_atomic(&csv, table.to_csv().as_bytes())?;
    written.push(csv);
    if let Some(svg) = loglog_svg(table) {
        let path = dir.join(format!("{name}.svg"));
        write_atomic(&path, svg.as_bytes())?;
        written.push(path);
    }
    let json = dir.join(format!("{name}.json"));
    write_json(
        &json,
        &RateSummary {
            pass: table.pass(),
            slope: table.fit.as_ref().map(|f| f.slope),
            slope_ci: table.fit.as_ref().and_then(|f| f.ci),
            expected_slope: table.expected_slope,
            band: table.band,
            moments_ok: table.moments.ok(),
            table,
        },
    )?;
    written.push(json);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::rates::{fit_loglog, MomentSummary, RateRow};

    fn table(rows: Vec<RateRow>) -> RateTable {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.param, r.mean_err)).collect();
        RateTable {
            variable: RateVariable::N,
            fit: fit_loglog(&pts),
            rows,
            expected_slope: -0.5,
            band: (-0.65, -0.35),
            insufficient_replicas: vec![],
            stride: 1,
            reference: "test".into(),
            reference_error: None,
            moments: MomentSummary {
                reference: vec![],
                particle_trajectories: 0,
                particle_envelope_violations: 0,
                max_envelope_ratio: 0.0,
            },
        }
    }

    #[test]
    fn empty_table_has_header_only_and_no_plot() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(dir.path(), "rate_n", &table(vec![])).unwrap();
        assert_eq!(files.len(), 2);
        let csv = std::fs::read_to_string(dir.path().join("rate_n.csv")).unwrap();
        assert_eq!(csv, "param,mean_err,stderr,epsilon,slope_running\n");
        assert!(!dir.path().join("rate_n.svg").exists());
    }

    #[test]
    fn six_rows() {
        let rows: Vec<RateRow> = [64.0, 128.0, 256.0, 512.0, 1024.0, 2048.0]
            .iter()
            .map(|&n: &f64| RateRow {
                param: n,
                mean_err: n.powf(-0.5),
                stderr: 0.0,
                epsilon: n.powf(-0.5),
                replicas: 20,
                slope_running: None,
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        emit_report(dir.path(), "r", &table(rows)).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
        assert_eq!(csv.lines().count(), 7);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
        assert!((json["slope"].as_f64().unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(json["pass"], true);
        assert!(std::fs::read_to_string(dir.path().join("r.svg")).unwrap().starts_with("<svg"));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
