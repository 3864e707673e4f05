//! SVG line plots of complexity curves read back from their CSV form.

use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use ermlab_core::complexity::{fixed_point, ComplexityCurve, CurveKind, FixedPointStatus};
use ermlab_core::io::CURVE_HEADER;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;

/// Parses a curve CSV with header `r,value,stderr,K,n,kind`.
pub fn read_curve_csv(text: &str) -> Result<ComplexityCurve> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = reader.headers().context("cannot read CSV header")?.clone();
    let found: Vec<&str> = headers.iter().collect();
    let expected: Vec<&str> = CURVE_HEADER.split(',').collect();
    if found != expected {
        bail!("curve CSV header must be `{CURVE_HEADER}`, found `{}`", found.join(","));
    }
    let mut grid = Vec::new();
    let mut values = Vec::new();
    let mut stderr = Vec::new();
    let mut meta: Option<(usize, usize, CurveKind)> = None;
    for (line, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("malformed CSV row {}", line + 2))?;
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .with_context(|| format!("row {}: column `{}` is not a number", line + 2, expected[i]))
        };
        grid.push(num(0)?);
        values.push(num(1)?);
        stderr.push(num(2)?);
        let k: usize = record[3].parse().with_context(|| format!("row {}: bad `K`", line + 2))?;
        let n: usize = record[4].parse().with_context(|| format!("row {}: bad `n`", line + 2))?;
        let kind = match &record[5] {
            "true-measure" => CurveKind::TrueMeasure,
            "empirical" => CurveKind::Empirical,
            other => bail!("row {}: unknown curve kind `{other}`", line + 2),
        };
        meta.get_or_insert((k, n, kind));
    }
    let (replicates, n, kind) = meta.ok_or_else(|| anyhow!("curve CSV has no rows"))?;
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        bail!("curve levels `r` must be strictly increasing");
    }
    let sup_bound = *grid.last().expect("nonempty");
    Ok(ComplexityCurve {
        empty_levels: vec![false; grid.len()],
        grid,
        values,
        stderr,
        replicates,
        n,
        kind,
        sup_bound,
    })
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
    from: f64,
    to: f64,
}

impl Axis {
    fn map(&self, v: f64) -> f64 {
        let t = if self.log {
            (v.max(self.lo).log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        };
        self.from + t * (self.to - self.from)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let first = self.lo.log10().ceil() as i32;
            let last = self.hi.log10().floor() as i32;
            (first..=last).map(|e| 10f64.powi(e)).collect()
        } else {
            (0..=5).map(|i| self.lo + (self.hi - self.lo) * i as f64 / 5.0).collect()
        }
    }
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 0.01 && v.abs() < 1000.0 {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.0e}")
    }
}

fn polyline(points: &[(f64, f64)]) -> String {
    points
        .iter()
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Curve, ±2·stderr band, `factor·r` reference line, shaded fixed-point
/// bracket and a marker at the fixed point.
pub fn render_svg(curve: &ComplexityCurve, factor: f64) -> Result<String> {
    if curve.grid.is_empty() {
        bail!("curve has no levels");
    }
    let fp = fixed_point(curve, factor, 0.0).map_err(|e| anyhow!("{e}"))?;
    let (r_lo, r_hi) = (curve.grid[0], *curve.grid.last().expect("nonempty"));
    let log = r_lo > 0.0 && r_hi / r_lo >= 20.0;
    let x = Axis {
        lo: r_lo,
        hi: if r_hi > r_lo { r_hi } else { r_lo + 1.0 },
        log,
        from: LEFT,
        to: WIDTH - RIGHT,
    };
    let upper: Vec<f64> = curve.values.iter().zip(&curve.stderr).map(|(v, s)| v + 2.0 * s).collect();
    let lower: Vec<f64> = curve.values.iter().zip(&curve.stderr).map(|(v, s)| v - 2.0 * s).collect();
    let y_min = lower.iter().copied().fold(0.0, f64::min);
    let y_max = upper.iter().copied().fold(factor * r_hi, f64::max) * 1.05;
    let y = Axis {
        lo: y_min,
        hi: if y_max > y_min { y_max } else { y_min + 1.0 },
        log: false,
        from: HEIGHT - BOTTOM,
        to: TOP,
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    if let (Some(a), Some(b)) = fp.bracket {
        let (xa, xb) = (x.map(a), x.map(b));
        let _ = writeln!(
            svg,
            r##"<rect x="{xa:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}" fill="#f4d03f" fill-opacity="0.35"><title>fixed-point bracket [{}, {}]</title></rect>"##,
            (xb - xa).max(1.0),
            HEIGHT - BOTTOM - TOP,
            a,
            b
        );
    }

    let mut band: Vec<(f64, f64)> = curve.grid.iter().zip(&upper).map(|(&r, &u)| (x.map(r), y.map(u))).collect();
    band.extend(curve.grid.iter().zip(&lower).rev().map(|(&r, &l)| (x.map(r), y.map(l))));
    let _ = writeln!(
        svg,
        r##"<polygon points="{}" fill="#9ecae1" fill-opacity="0.5" stroke="none"/>"##,
        polyline(&band)
    );

    let reference: Vec<(f64, f64)> = curve.grid.iter().map(|&r| (x.map(r), y.map(factor * r))).collect();
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="1.5" stroke-dasharray="6 4"/>"##,
        polyline(&reference)
    );

    let line: Vec<(f64, f64)> = curve.grid.iter().zip(&curve.values).map(|(&r, &v)| (x.map(r), y.map(v))).collect();
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#08519c" stroke-width="2"/>"##,
        polyline(&line)
    );

    if fp.status != FixedPointStatus::Exhausted {
        let j = curve.grid.iter().position(|&r| r == fp.r_star).unwrap_or(0);
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.2}" cy="{:.2}" r="5" fill="#d62728"><title>fixed point r* = {}</title></circle>"##,
            x.map(fp.r_star),
            y.map(curve.values[j]),
            fp.r_star
        );
    }

    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="black"/>"#
    );
    for t in x.ticks() {
        let px = x.map(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 5.0,
            y0 + 20.0,
            label(t)
        );
    }
    for t in y.ticks() {
        let py = y.map(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0,
            label(t)
        );
    }
    let y_name = match curve.kind {
        CurveKind::TrueMeasure => "ξ_n(r)",
        CurveKind::Empirical => "ξ̂_n(r)",
    };
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">r{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 14.0,
        if log { " (log scale)" } else { "" }
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{y_name}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    let status = match fp.status {
        FixedPointStatus::Crossed => format!("r* = {}", label(fp.r_star)),
        FixedPointStatus::Degenerate => format!("r* = {} (smallest level)", label(fp.r_star)),
        FixedPointStatus::Exhausted => "no crossing on the grid".to_string(),
    };
    let _ = writeln!(
        svg,
        r#"<text x="{x0:.2}" y="24" font-size="14">{y_name} ± 2 stderr, n = {}, K = {}; dashed: {}·r; {status}</text>"#,
        curve.n,
        curve.replicates,
        label(factor)
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}
