//! CSV grids and SVG figures. Figures are drawn from CSV text only.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use msc_core::models::nishimori_beta;
use serde::{Deserialize, Serialize};

use crate::crossing::{estimate_crossing, Curve, CurveSet, DEFAULT_RESAMPLES};
use crate::error::ThresholdError;
use crate::scan::{GridRow, PhaseBoundary};

/// Identifies the build and inputs that produced a file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Provenance {
            tool: "msc".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config_hash.into(),
            seed,
        }
    }

    fn line(&self) -> String {
        format!("{} {} config_hash={} seed={}", self.tool, self.version, self.config_hash, self.seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub family: String,
    pub p: f64,
    pub beta_c: Option<f64>,
    pub beta_err: Option<f64>,
    #[serde(rename = "T_c")]
    pub t_c: Option<f64>,
    #[serde(rename = "T_err")]
    pub t_err: Option<f64>,
}

pub fn phase_rows(boundary: &PhaseBoundary) -> Vec<PhaseRow> {
    boundary
        .points
        .iter()
        .map(|p| PhaseRow {
            family: boundary.family.to_string(),
            p: p.rate,
            beta_c: p.beta_c,
            beta_err: p.beta_err,
            t_c: p.t_c,
            t_err: p.t_err,
        })
        .collect()
}

/// CSV with a `#` provenance line ahead of the header.
pub fn to_csv<T: Serialize>(rows: &[T], prov: &Provenance) -> Result<String, ThresholdError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8 csv");
    Ok(format!("# {}\n{}", prov.line(), body))
}

/// Rows and the provenance line (without `#`) of a CSV produced by [`to_csv`].
pub fn from_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<(Option<String>, Vec<T>), ThresholdError> {
    let prov = text.lines().next().and_then(|l| l.strip_prefix("# ")).map(str::to_string);
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows = r.deserialize().collect::<Result<Vec<T>, _>>()?;
    Ok((prov, rows))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Binder cumulant against the error rate, one curve per size.
    Rate,
    /// Binder cumulant against beta, one panel series per rate and size.
    Beta,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let (mut x0, mut x1) = bounds(xs);
        let (mut y0, mut y1) = bounds(ys);
        if x1 <= x0 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 <= y0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = 0.05 * (y1 - y0);
        Frame { x0, x1, y0: y0 - pad, y1: y1 + pad }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn bounds(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    xs.filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
}

fn header(out: &mut String, prov: Option<&str>, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    if let Some(p) = prov {
        let _ = writeln!(out, "<!-- {p} -->");
        let _ = writeln!(out, "<metadata>{p}</metadata>");
    }
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" font-size="15" text-anchor="middle" font-family="sans-serif">{title}</text>"#, WIDTH / 2.0);
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(out, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#);
    for i in 0..=4 {
        let xv = f.x0 + (f.x1 - f.x0) * i as f64 / 4.0;
        let yv = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
        let (px, py) = (f.x(xv), f.y(yv));
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{:.2}" font-size="11" text-anchor="middle" font-family="sans-serif">{xv:.4}</text>"#, b + 16.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end" font-family="sans-serif">{yv:.3}</text>"#, l - 6.0, py + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="13" text-anchor="middle" font-family="sans-serif">{xlabel}</text>"#, WIDTH / 2.0, HEIGHT - 12.0);
    let _ = writeln!(out, r#"<text x="16" y="{}" font-size="13" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 16 {})">{ylabel}</text>"#, HEIGHT / 2.0, HEIGHT / 2.0);
}

fn series(out: &mut String, f: &Frame, pts: &[(f64, f64, f64)], color: &str, label: &str, slot: usize) {
    let mut d = String::new();
    for (i, &(x, y, _)) in pts.iter().enumerate() {
        let _ = write!(d, "{}{:.2} {:.2} ", if i == 0 { "M" } else { "L" }, f.x(x), f.y(y));
    }
    let _ = writeln!(out, r#"<path d="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, d.trim_end());
    for &(x, y, e) in pts {
        let (px, lo, hi) = (f.x(x), f.y(y - e), f.y(y + e));
        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{lo:.2}" x2="{px:.2}" y2="{hi:.2}" stroke="{color}"/>"#);
        let _ = writeln!(out, r#"<circle cx="{px:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, f.y(y));
    }
    let ly = MARGIN + 14.0 * slot as f64;
    let lx = WIDTH - MARGIN - 110.0;
    let _ = writeln!(out, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 16.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="11" font-family="sans-serif">{label}</text>"#, lx + 20.0, ly + 4.0);
}

fn marker(out: &mut String, f: &Frame, x: f64, label: &str) {
    let px = f.x(x);
    let _ = writeln!(
        out,
        r#"<line x1="{px:.2}" y1="{MARGIN}" x2="{px:.2}" y2="{}" stroke="gray" stroke-dasharray="5,4"/>"#,
        HEIGHT - MARGIN
    );
    let _ = writeln!(out, r#"<text x="{:.2}" y="{}" font-size="11" font-family="sans-serif" fill="gray">{label}</text>"#, px + 4.0, MARGIN + 12.0);
}

/// Binder curves from grid CSV text, with the crossing marked when there is
/// one.
pub fn binder_svg(csv_text: &str, axis: Axis) -> Result<String, ThresholdError> {
    let (prov, rows): (_, Vec<GridRow>) = from_csv(csv_text)?;
    let family = rows.first().map(|r| r.family.clone()).unwrap_or_default();
    // series key -> points sorted by x
    let mut groups: BTreeMap<(u64, usize), Vec<(f64, f64, f64)>> = BTreeMap::new();
    for r in &rows {
        let (key, x) = match axis {
            Axis::Rate => ((0, r.size), r.p),
            Axis::Beta => ((r.p.to_bits(), r.size), r.beta),
        };
        groups.entry(key).or_default().push((x, r.binder, r.binder_err));
    }
    for pts in groups.values_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let all = groups.values().flatten();
    let frame = Frame::new(all.clone().map(|p| p.0), all.clone().flat_map(|p| [p.1 - p.2, p.1 + p.2]));
    let mut out = String::new();
    let xlabel = match axis {
        Axis::Rate => "error rate",
        Axis::Beta => "beta",
    };
    header(&mut out, prov.as_deref(), &format!("Binder cumulant, {family}"));
    axes(&mut out, &frame, xlabel, "U_q");
    for (slot, ((rate_bits, size), pts)) in groups.iter().enumerate() {
        let label = match axis {
            Axis::Rate => format!("L = {size}"),
            Axis::Beta => format!("p = {}, L = {size}", f64::from_bits(*rate_bits)),
        };
        series(&mut out, &frame, pts, PALETTE[slot % PALETTE.len()], &label, slot);
    }
    // one crossing per rate (beta axis) or overall (rate axis)
    let mut by_rate: BTreeMap<u64, Vec<(usize, &Vec<(f64, f64, f64)>)>> = BTreeMap::new();
    for ((rate_bits, size), pts) in &groups {
        by_rate.entry(*rate_bits).or_default().push((*size, pts));
    }
    for curves in by_rate.values() {
        let grid: Vec<f64> = curves[0].1.iter().map(|p| p.0).collect();
        if curves.len() < 2 || curves.iter().any(|(_, pts)| pts.iter().map(|p| p.0).ne(grid.iter().copied())) {
            continue;
        }
        let set = CurveSet {
            grid,
            curves: curves
                .iter()
                .map(|(size, pts)| Curve {
                    size: *size,
                    values: pts.iter().map(|p| p.1).collect(),
                    errors: pts.iter().map(|p| p.2).collect(),
                })
                .collect(),
        };
        if let Ok(est) = estimate_crossing(&set, DEFAULT_RESAMPLES) {
            if let (Some(v), Some(s)) = (est.value(), est.sigma()) {
                marker(&mut out, &frame, v, &format!("{v:.4} ± {s:.4}"));
            }
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Critical temperature against rate from phase CSV text, with the
/// Nishimori line `T = 1 / beta_N(p)` overlaid.
pub fn phase_svg(csv_text: &str) -> Result<String, ThresholdError> {
    let (prov, rows): (_, Vec<PhaseRow>) = from_csv(csv_text)?;
    let family = rows.first().map(|r| r.family.clone()).unwrap_or_default();
    let pts: Vec<(f64, f64, f64)> =
        rows.iter().filter_map(|r| Some((r.p, r.t_c?, r.t_err.unwrap_or(0.0)))).collect();
    let (_, xmax) = bounds(rows.iter().map(|r| r.p));
    let xmax = if xmax.is_finite() { xmax.max(0.2) } else { 0.5 };
    let ys = pts.iter().flat_map(|p| [p.1 - p.2, p.1 + p.2]).chain([0.0]);
    let mut frame = Frame::new([0.0, xmax].into_iter(), ys);
    frame.y0 = 0.0;
    let mut out = String::new();
    header(&mut out, prov.as_deref(), &format!("Phase boundary, {family}"));
    axes(&mut out, &frame, "error rate", "T");
    series(&mut out, &frame, &pts, PALETTE[0], "T_c(p)", 0);
    // Nishimori line, clipped to the frame
    let mut d = String::new();
    let steps = 200;
    let mut first = true;
    for i in 1..steps {
        let p = xmax * i as f64 / steps as f64;
        let Ok(b) = nishimori_beta(p) else { continue };
        if b <= 0.0 {
            continue;
        }
        let t = 1.0 / b;
        if t > frame.y1 {
            continue;
        }
        let _ = write!(d, "{}{:.2} {:.2} ", if first { "M" } else { "L" }, frame.x(p), frame.y(t));
        first = false;
    }
    if !d.is_empty() {
        let _ = writeln!(out, r#"<path d="{}" stroke="black" fill="none" stroke-dasharray="3,3"/>"#, d.trim_end());
        let lx = WIDTH - MARGIN - 110.0;
        let ly = MARGIN + 14.0;
        let _ = writeln!(out, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="black" stroke-dasharray="3,3"/>"#, lx + 16.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="11" font-family="sans-serif">Nishimori line</text>"#, lx + 20.0, ly + 4.0);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<GridRow> {
        let mut v = Vec::new();
        for &l in &[6usize, 9] {
            for (i, &p) in [0.08, 0.1, 0.12].iter().enumerate() {
                v.push(GridRow {
                    family: "qp".into(),
                    p,
                    beta: nishimori_beta(p).unwrap(),
                    size: l,
                    binder: 0.5 - (p - 0.1) * l as f64,
                    binder_err: 0.01,
                    energy: -1.0 - i as f64,
                    energy_err: 0.1,
                    n_disorder: 10,
                    excluded: 0,
                });
            }
        }
        v
    }

    #[test]
    fn csv_round_trip_keeps_provenance() {
        let prov = Provenance::new("abc", 7);
        let text = to_csv(&rows(), &prov).unwrap();
        assert!(text.starts_with("# msc "));
        assert!(text.lines().nth(1).unwrap().starts_with("family,p,beta,L,U_q,U_q_err,E,E_err,n_disorder,excluded"));
        let (line, back): (_, Vec<GridRow>) = from_csv(&text).unwrap();
        assert_eq!(back, rows());
        assert!(line.unwrap().contains("seed=7"));
    }

    #[test]
    fn svg_is_a_function_of_the_csv() {
        let text = to_csv(&rows(), &Provenance::new("abc", 7)).unwrap();
        let a = binder_svg(&text, Axis::Rate).unwrap();
        assert_eq!(a, binder_svg(&text, Axis::Rate).unwrap());
        assert!(a.contains("config_hash=abc"));
        assert!(a.contains("0.1000 ±"));
        assert!(a.ends_with("</svg>\n"));
    }
}
