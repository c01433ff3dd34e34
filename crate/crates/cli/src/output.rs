use anyhow::{Context, Result};
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

/// A CSV table preceded by a `# config-sha256` comment row.
pub struct Table {
    hash: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(hash: String, header: &[&str]) -> Self {
        Table { hash, header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = format!("# config-sha256: {}\r\n", self.hash);
        for line in std::iter::once(&self.header).chain(&self.rows) {
            let cells: Vec<String> = line.iter().map(|c| quote(c)).collect();
            out.push_str(&cells.join(","));
            out.push_str("\r\n");
        }
        out
    }

    /// Writes to `path`, or to stdout when there is none.
    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        let text = self.render();
        match path {
            Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                std::io::stdout().lock().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\r', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// Shortest round-trip form, in scientific notation outside `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v.is_nan() {
        "NaN".into()
    } else if a == 0.0 || (1e-4..1e15).contains(&a) || a.is_infinite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Line plot of `(ε, min E_ε)` on log-scaled `ε`, with the continuum minimum as a horizontal rule.
pub fn study_svg(points: &[(f64, f64)], continuum: Option<f64>) -> String {
    let (w, h, pad) = (480.0, 320.0, 48.0);
    let finite: Vec<(f64, f64)> = points.iter().copied().filter(|(e, v)| e.is_finite() && v.is_finite()).collect();
    let xs: Vec<f64> = finite.iter().map(|p| p.0.ln()).collect();
    let mut ys: Vec<f64> = finite.iter().map(|p| p.1).collect();
    ys.extend(continuum.filter(|c| c.is_finite()));
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = span(&xs);
    let (y0, y1) = span(&ys);
    let px = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let py = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{pad} {pad} V{b} H{r}" fill="none" stroke="black"/>"#,
        b = h - pad,
        r = w - pad
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">ε (log scale)</text>"#, w / 2.0, h - 12.0);
    let _ = writeln!(svg, r#"<text x="12" y="{}" transform="rotate(-90 12 {})" text-anchor="middle">min E</text>"#, h / 2.0, h / 2.0);
    if let Some(c) = continuum.filter(|c| c.is_finite()) {
        let _ = writeln!(
            svg,
            r#"<line x1="{pad}" y1="{y:.2}" x2="{r}" y2="{y:.2}" stroke="gray" stroke-dasharray="6 4"/>"#,
            y = py(c),
            r = w - pad
        );
    }
    let coords: Vec<String> = xs.iter().zip(&finite).map(|(&x, p)| format!("{:.2},{:.2}", px(x), py(p.1))).collect();
    let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="navy" stroke-width="2"/>"#, coords.join(" "));
    for c in &coords {
        let (x, y) = c.split_once(',').unwrap();
        let _ = writeln!(svg, r#"<circle cx="{x}" cy="{y}" r="3" fill="navy"/>"#);
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting_follows_rfc_4180() {
        assert_eq!(quote("plain"), "plain");
        assert_eq!(quote("a,b"), "\"a,b\"");
        assert_eq!(quote("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new("abc".into(), &["x", "y"]);
        t.push(vec!["1".into(), "2,3".into()]);
        assert_eq!(t.render(), "# config-sha256: abc\r\nx,y\r\n1,\"2,3\"\r\n");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 2.0, 0.125, -3.5e-31, 1e20, 1.0 / 3.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(2.0), "2");
        assert_eq!(num(1e-30), "1e-30");
    }

    #[test]
    fn plot_is_well_formed() {
        let s = study_svg(&[(0.25, 1.0), (0.125, 0.5), (0.0625, f64::NAN)], Some(0.2));
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches("<circle").count(), 2);
        assert!(s.contains("stroke-dasharray"));
        let flat = study_svg(&[(0.25, 0.0), (0.125, 0.0)], Some(0.0));
        assert!(!flat.contains("NaN"));
    }
}
