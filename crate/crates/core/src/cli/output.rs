use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use crate::error::Result;
use crate::experiments::{ErrorTable, RateEstimate};
use crate::integrators::Scheme;

/// Files staged in memory and written together; a failed write removes the
/// files already written.
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|f| f.0.clone()).collect()
    }

    pub fn commit(self) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir)?;
        let mut written = Vec::new();
        for (name, contents) in &self.files {
            let path = self.dir.join(name);
            if let Err(e) = fs::write(&path, contents) {
                remove_all(&written);
                let _ = fs::remove_file(&path);
                return Err(e.into());
            }
            written.push(path);
        }
        Ok(written)
    }
}

pub fn remove_all(paths: &[PathBuf]) {
    for p in paths {
        let _ = fs::remove_file(p);
    }
}

pub fn errors_csv(table: &ErrorTable) -> String {
    let mut s = String::from("scheme,dt_exponent,error,stderr,failures\n");
    for r in &table.rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.scheme, r.dt_exponent, r.error, r.stderr, r.failures);
    }
    s
}

pub fn rate_csv(rates: &[(Scheme, RateEstimate)]) -> String {
    let mut s = String::from("scheme,slope,intercept,r2\n");
    for (scheme, r) in rates {
        let _ = writeln!(s, "{scheme},{},{},{}", r.slope, r.intercept, r.r_squared);
    }
    s
}

/// Log-log points with reference lines of slope ½ and 1 through the coarsest point.
pub fn plotdata_csv(table: &ErrorTable) -> String {
    let mut s = String::from("scheme,log2dt,log2error,ref_slope_half,ref_slope_one\n");
    for scheme in table.schemes() {
        let rows = table.for_scheme(scheme).rows;
        let Some(anchor) = rows.iter().max_by(|a, b| a.dt.total_cmp(&b.dt)) else {
            continue;
        };
        let (x0, y0) = (anchor.dt.log2(), anchor.error.log2());
        for r in &rows {
            let x = r.dt.log2();
            let _ = writeln!(
                s,
                "{scheme},{x},{},{},{}",
                r.error.log2(),
                y0 + 0.5 * (x - x0),
                y0 + (x - x0)
            );
        }
    }
    s
}

/// Minimal log-log scatter with the two reference slopes.
pub fn convergence_svg(table: &ErrorTable) -> String {
    let pts: Vec<(Scheme, f64, f64)> = table
        .rows
        .iter()
        .filter(|r| r.error > 0.0 && r.error.is_finite())
        .map(|r| (r.scheme, r.dt.log2(), r.error.log2()))
        .collect();
    let (w, h, pad) = (480.0, 360.0, 48.0);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    );
    if pts.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let fold = |f: fn(&(Scheme, f64, f64)) -> f64, init: f64, op: fn(f64, f64) -> f64| pts.iter().map(f).fold(init, op);
    let (xmin, xmax) = (fold(|p| p.1, f64::INFINITY, f64::min), fold(|p| p.1, f64::NEG_INFINITY, f64::max));
    let (ymin, ymax) = (fold(|p| p.2, f64::INFINITY, f64::min), fold(|p| p.2, f64::NEG_INFINITY, f64::max));
    let xr = (xmax - xmin).max(1e-9);
    let yr = (ymax - ymin).max(1e-9);
    let px = |x: f64| pad + (x - xmin) / xr * (w - 2.0 * pad);
    let py = |y: f64| h - pad - (y - ymin) / yr * (h - 2.0 * pad);
    let _ = writeln!(
        s,
        "<line x1=\"{pad}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n<line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{}\" stroke=\"black\"/>",
        h - pad,
        w - pad,
        h - pad,
        h - pad
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">log2 dt</text>\n<text x=\"12\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 12 {})\" text-anchor=\"middle\">log2 error</text>",
        w / 2.0,
        h - 12.0,
        h / 2.0,
        h / 2.0
    );
    // reference slopes through the coarsest point of the first scheme
    let anchor = pts.iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
    for (slope, dash) in [(0.5, "4 3"), (1.0, "1 3")] {
        let y_at = |x: f64| anchor.2 + slope * (x - anchor.1);
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\" stroke-dasharray=\"{dash}\"/>",
            px(xmin),
            py(y_at(xmin)),
            px(xmax),
            py(y_at(xmax))
        );
    }
    let colors = ["#1f77b4", "#d62728", "#2ca02c"];
    for (i, scheme) in table.schemes().iter().enumerate() {
        let c = colors[i % colors.len()];
        for p in pts.iter().filter(|p| p.0 == *scheme) {
            let _ = writeln!(s, "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{c}\"/>", px(p.1), py(p.2));
        }
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{c}\">{scheme}</text>",
            w - pad - 60.0,
            pad + 16.0 * i as f64
        );
    }
    s.push_str("</svg>\n");
    s
}
