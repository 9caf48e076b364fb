//! Two-column `.dat` files and small standalone SVG renderings.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;

fn empty(what: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidInput, format!("no data for {what}"))
}

/// Writes `x y` pairs, one per line, after a `#` header.
pub fn write_dat(path: &Path, header: &str, pts: &[(f64, f64)]) -> io::Result<()> {
    if pts.is_empty() {
        return Err(empty(&path.display().to_string()));
    }
    let mut s = format!("# {header}\n");
    for (x, y) in pts {
        let _ = writeln!(s, "{x:.12e} {y:.12e}");
    }
    fs::write(path, s)
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(pts: impl Iterator<Item = (f64, f64)>) -> Frame {
        let mut f = Frame {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for (x, y) in pts {
            f.x0 = f.x0.min(x);
            f.x1 = f.x1.max(x);
            f.y0 = f.y0.min(y);
            f.y1 = f.y1.max(y);
        }
        if f.x1 - f.x0 < 1e-12 {
            f.x0 -= 0.5;
            f.x1 += 0.5;
        }
        if f.y1 - f.y0 < 1e-12 {
            f.y0 -= 0.5;
            f.y1 += 0.5;
        }
        f
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn open(title: &str, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(title));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 15.0, esc(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(ylabel)
    );
    s
}

fn ticks(s: &mut String, f: &Frame) {
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let x = f.x0 + t * (f.x1 - f.x0);
        let y = f.y0 + t * (f.y1 - f.y0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{:.3}</text>"#, f.px(x), H - PAD + 16.0, x);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{:.3}</text>"#, PAD - 6.0, f.py(y) + 4.0, y);
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Log-log decay plot of `(μ, value)` with the fitted line and its slope.
pub fn decay_svg(points: &[(f64, f64)], slope: f64, intercept: f64, title: &str) -> io::Result<String> {
    if points.is_empty() {
        return Err(empty("decay plot"));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.log10(), y.log10())).collect();
    let fitted = |lx: f64| (slope * lx * std::f64::consts::LN_10 + intercept) / std::f64::consts::LN_10;
    let f = Frame::fit(logs.iter().copied().chain(logs.iter().map(|&(x, _)| (x, fitted(x)))));
    let mut s = open(title, "log10 mu", "log10 value");
    ticks(&mut s, &f);
    let (a, b) = (logs[0].0, logs[logs.len() - 1].0);
    let _ = writeln!(
        s,
        r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="firebrick" stroke-dasharray="6 4"/>"#,
        f.px(a),
        f.py(fitted(a)),
        f.px(b),
        f.py(fitted(b))
    );
    for (x, y) in &logs {
        let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3.5" fill="steelblue"/>"#, f.px(*x), f.py(*y));
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" fill="firebrick">fitted slope {slope:.4}</text>"#,
        W - PAD - 150.0,
        PAD + 20.0
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// Scan plot of `log10 σ_rel` against `Re λ` with vertical markers at the
/// candidate eigenvalues.
pub fn scan_svg(points: &[(f64, f64)], candidates: &[f64], title: &str) -> io::Result<String> {
    if points.is_empty() {
        return Err(empty("scan plot"));
    }
    let f = Frame::fit(points.iter().copied());
    let mut s = open(title, "Re lambda", "log10 sigma_min/sigma_max");
    ticks(&mut s, &f);
    let path: Vec<String> = points
        .iter()
        .map(|(x, y)| format!("{:.1},{:.1}", f.px(*x), f.py(*y)))
        .collect();
    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="steelblue"/>"#, path.join(" "));
    for &c in candidates {
        let x = f.px(c.clamp(f.x0, f.x1));
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{PAD}" x2="{x:.1}" y2="{}" stroke="firebrick"/>"#,
            H - PAD
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" fill="firebrick">{c:.4}</text>"#, x + 4.0, PAD + 14.0);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// `decay.dat` and `decay.svg` (with `stem` in place of `decay`).
pub fn emit_decay(dir: &Path, stem: &str, points: &[(f64, f64)], slope: f64, intercept: f64) -> io::Result<Vec<PathBuf>> {
    let svg = decay_svg(points, slope, intercept, &format!("{stem}: fitted slope {slope:.3}"))?;
    fs::create_dir_all(dir)?;
    let dat = dir.join(format!("{stem}.dat"));
    write_dat(&dat, &format!("mu value   slope {slope:.6}"), points)?;
    let svg_path = dir.join(format!("{stem}.svg"));
    fs::write(&svg_path, svg)?;
    Ok(vec![dat, svg_path])
}

pub fn emit_scan(dir: &Path, stem: &str, points: &[(f64, f64)], candidates: &[f64]) -> io::Result<Vec<PathBuf>> {
    let svg = scan_svg(points, candidates, &format!("{stem}: {} candidates", candidates.len()))?;
    fs::create_dir_all(dir)?;
    let dat = dir.join(format!("{stem}.dat"));
    write_dat(&dat, "re_lambda log10_sigma_rel", points)?;
    let svg_path = dir.join(format!("{stem}.svg"));
    fs::write(&svg_path, svg)?;
    Ok(vec![dat, svg_path])
}
