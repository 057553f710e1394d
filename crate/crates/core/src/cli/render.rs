//! Static SVG renderings of fields, curves and embeddings.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::store::{FimField, Metric};

const PLOT_W: f64 = 480.0;
const PLOT_H: f64 = 320.0;
const MARGIN: f64 = 40.0;

/// Ink directions for the three colour channels, 60° apart in the
/// parameter plane; `v` and `−v` give the same colour.
const INK_ANGLES: [f64; 3] = [0.0, std::f64::consts::FRAC_PI_3, 2.0 * std::f64::consts::FRAC_PI_3];

/// Colour of a metric on the ring of radius `scale`.
///
/// Channel `k` is darkened by `u_kᵀ g u_k / scale²` (clamped to 1), linear in
/// `g`: zero is white, anything `≥ scale² I` is black and a rank-1 metric
/// `v vᵀ` takes a hue set by the direction of `v`.
pub fn metric_color(m: &Metric, scale: f64) -> [u8; 3] {
    let s2 = scale * scale;
    let mut out = [255u8; 3];
    for (c, &a) in out.iter_mut().zip(&INK_ANGLES) {
        let (x, y) = (a.cos(), a.sin());
        let ink = ((x * x * m.g00 + 2.0 * x * y * m.g01 + y * y * m.g11) / s2).clamp(0.0, 1.0);
        *c = (255.0 * (1.0 - ink)).round() as u8;
    }
    out
}

/// 95th percentile of `√trace g` over the field, or 1 for a zero field.
pub fn default_scale(field: &FimField) -> f64 {
    let mut v: Vec<f64> = field.entries.iter().map(|m| m.trace().max(0.0).sqrt()).collect();
    v.sort_by(f64::total_cmp);
    let q = v[((v.len() - 1) as f64 * 0.95).round() as usize];
    if q > 0.0 && q.is_finite() {
        q
    } else {
        1.0
    }
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// One square per grid point, `λ₀` to the right and `λ₁` upwards.
pub fn pixel_svg(per_axis: usize, colors: &[[u8; 3]], index: impl Fn(usize, usize) -> usize) -> String {
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {per_axis} {per_axis}" width="{}" height="{}" shape-rendering="crispEdges">"#,
        8 * per_axis,
        8 * per_axis
    )
    .unwrap();
    for l1 in 0..per_axis {
        for l0 in 0..per_axis {
            let y = per_axis - 1 - l1;
            writeln!(out, r#"<rect x="{l0}" y="{y}" width="1" height="1" fill="{}"/>"#, hex(colors[index(l0, l1)])).unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Line plot of one or more series over a shared `x`.
pub fn line_svg(x: &[f64], series: &[(&str, Vec<f64>)], x_label: &str) -> String {
    let (x0, x1) = range(x.iter().copied());
    let (mut y0, y1) = range(series.iter().flat_map(|(_, s)| s.iter().copied()));
    y0 = y0.min(0.0);
    let px = |v: f64| MARGIN + (v - x0) / (x1 - x0).max(f64::MIN_POSITIVE) * (PLOT_W - 2.0 * MARGIN);
    let py = |v: f64| PLOT_H - MARGIN - (v - y0) / (y1 - y0).max(f64::MIN_POSITIVE) * (PLOT_H - 2.0 * MARGIN);
    let palette = ["#c0392b", "#27ae60", "#2c3e50", "#8e44ad"];
    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {PLOT_W} {PLOT_H}" width="{PLOT_W}" height="{PLOT_H}">"#).unwrap();
    writeln!(out, r#"<rect width="{PLOT_W}" height="{PLOT_H}" fill="white"/>"#).unwrap();
    let (bx, by) = (MARGIN, PLOT_H - MARGIN);
    writeln!(out, r#"<path d="M{bx} {MARGIN}V{by}H{}" fill="none" stroke="black"/>"#, PLOT_W - MARGIN).unwrap();
    writeln!(out, r#"<text x="{bx}" y="{}" font-size="11">{x0:.3}</text>"#, by + 14.0).unwrap();
    writeln!(out, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{x1:.3}</text>"#, PLOT_W - MARGIN, by + 14.0).unwrap();
    writeln!(out, r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">{x_label}</text>"#, PLOT_W / 2.0, by + 28.0).unwrap();
    writeln!(out, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{y1:.4}</text>"#, bx - 4.0, MARGIN + 4.0).unwrap();
    writeln!(out, r#"<text x="{}" y="{by}" font-size="11" text-anchor="end">{y0:.4}</text>"#, bx - 4.0).unwrap();
    for (k, (name, s)) in series.iter().enumerate() {
        let color = palette[k % palette.len()];
        let pts: Vec<String> = x.iter().zip(s).map(|(&a, &b)| format!("{:.3},{:.3}", px(a), py(b))).collect();
        writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" ")).unwrap();
        writeln!(out, r#"<text x="{}" y="{}" font-size="11" fill="{color}">{name}</text>"#, PLOT_W - MARGIN - 60.0, MARGIN + 14.0 * k as f64).unwrap();
    }
    out.push_str("</svg>\n");
    out
}

fn range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    v.filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
}

/// A 2D field as a colour-ring image, a 1D field as a line plot.
pub fn render_field(field: &FimField, scale: Option<f64>) -> Result<String> {
    let g = &field.grid;
    if g.dims() == 1 {
        let x: Vec<f64> = (0..g.per_axis()).map(|l| g.axis_coord(l)).collect();
        return Ok(line_svg(&x, &[("g00", field.slice(0, 0, 0, 0))], "lambda0"));
    }
    let c = scale.unwrap_or_else(|| default_scale(field));
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("colour scale must be positive, got {c}")));
    }
    let colors: Vec<[u8; 3]> = field.entries.iter().map(|m| metric_color(m, c)).collect();
    Ok(pixel_svg(g.per_axis(), &colors, |a, b| g.index(a, b)))
}

/// A tab-separated table with a header row, as columns.
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::malformed("table", "empty"))?
            .split('\t')
            .map(str::to_string)
            .collect();
        let mut columns = vec![Vec::new(); header.len()];
        for (n, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split('\t').collect();
            if cells.len() != header.len() {
                return Err(Error::malformed("table", format!("row {n} has {} cells, header has {}", cells.len(), header.len())));
            }
            for (col, cell) in columns.iter_mut().zip(cells) {
                col.push(cell.parse().map_err(|_| Error::malformed("table", format!("row {n}: {cell:?} is not a number")))?);
            }
        }
        Ok(Self { header, columns })
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header.iter().position(|h| h == name).map(|i| self.columns[i].as_slice())
    }
}

/// Confusion curves plot accuracy against `c`; embeddings plot their
/// components in 1D and map the first three to RGB in 2D.
pub fn render_table(table: &Table) -> Result<String> {
    if let (Some(c), Some(acc)) = (table.column("c"), table.column("accuracy")) {
        return Ok(line_svg(c, &[("accuracy", acc.to_vec())], "c"));
    }
    let pcs: Vec<(String, &[f64])> = table
        .header
        .iter()
        .zip(&table.columns)
        .filter(|(h, _)| h.starts_with("pc"))
        .map(|(h, c)| (h.clone(), c.as_slice()))
        .collect();
    let (l0, l1) = match (table.column("l0"), table.column("l1")) {
        (Some(a), Some(b)) if !pcs.is_empty() => (a, b),
        _ => return Err(Error::malformed("table", "expected a confusion curve or an embedding")),
    };
    let two_d = l1.iter().any(|&v| v != 0.0);
    if !two_d {
        let x = table.column("lambda0").ok_or_else(|| Error::malformed("table", "missing lambda0"))?;
        let series: Vec<(&str, Vec<f64>)> = pcs.iter().take(4).map(|(h, c)| (h.as_str(), c.to_vec())).collect();
        return Ok(line_svg(x, &series, "lambda0"));
    }
    let n = l0.len();
    let per_axis = (n as f64).sqrt().round() as usize;
    if per_axis * per_axis != n {
        return Err(Error::malformed("table", "2D embedding is not square"));
    }
    let mut colors = vec![[255u8; 3]; n];
    for (ch, (_, pc)) in pcs.iter().take(3).enumerate() {
        let (lo, hi) = range(pc.iter().copied());
        for (i, &v) in pc.iter().enumerate() {
            let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            colors[i][ch] = (255.0 * t).round() as u8;
        }
    }
    let mut at = vec![0usize; n];
    for i in 0..n {
        at[l1[i] as usize * per_axis + l0[i] as usize] = i;
    }
    Ok(pixel_svg(per_axis, &colors, |a, b| at[b * per_axis + a]))
}
