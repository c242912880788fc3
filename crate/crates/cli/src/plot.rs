//! Static SVG plots. Output depends only on the input files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rmtl_core::bounds::Consistency;

use crate::output::{read_report, write_atomic, RunReport, VerdictRecord, BOUNDS_FILE, VERDICTS_FILE};
use crate::CliError;

pub const RHS_PLOT: &str = "bound_rhs_vs_n.svg";
pub const EDDM_PLOT: &str = "eddm_vs_n.svg";
pub const ODDM_PLOT: &str = "oddm_heatmap.svg";
pub const VERDICT_PLOT: &str = "verdicts.svg";

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Default)]
pub struct PlotOutcome {
    pub written: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.05 * (hi - lo);
        Axis { lo: lo - pad, hi: hi + pad, log }
    }

    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        let k = 5;
        (0..=k)
            .map(|i| {
                let t = self.lo + (self.hi - self.lo) * i as f64 / k as f64;
                let label = if self.log { format!("{:.2e}", 10f64.powf(t)) } else { format!("{t:.3}") };
                (i as f64 / k as f64, label)
            })
            .collect()
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(title: &str, meta: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, "<metadata>{}</metadata>", esc(meta));
    let _ = writeln!(s, r##"<rect width="{W}" height="{H}" fill="#ffffff"/>"##);
    let _ = writeln!(s, r#"<text x="{}" y="28" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, esc(title));
    s
}

fn frame(s: &mut String, x: &Axis, y: &Axis, xlabel: &str, ylabel: &str) {
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let _ = writeln!(s, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333333"/>"##);
    for (u, label) in x.ticks() {
        let px = LEFT + u * pw;
        let _ = writeln!(s, r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#333333"/>"##, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, TOP + ph + 18.0);
    }
    for (u, label) in y.ticks() {
        let py = TOP + ph - u * ph;
        let _ = writeln!(s, r##"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="#333333"/>"##, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 8.0, py + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 15.0, esc(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        esc(ylabel)
    );
}

/// Line chart with one polyline and marker set per series.
#[allow(clippy::too_many_arguments)]
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series], log_x: bool, log_y: bool, meta: &str, notes: &[String]) -> String {
    let keep = |v: f64, log: bool| v.is_finite() && (!log || v > 0.0);
    let series: Vec<Series> = series
        .iter()
        .map(|s| Series {
            label: s.label.clone(),
            points: s.points.iter().copied().filter(|&(x, y)| keep(x, log_x) && keep(y, log_y)).collect(),
        })
        .collect();
    let x = Axis::fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)), log_x);
    let y = Axis::fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)), log_y);
    let mut s = header(title, meta);
    frame(&mut s, &x, &y, xlabel, ylabel);
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    for (k, ser) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(a, b)| format!("{:.2},{:.2}", LEFT + x.unit(a) * pw, TOP + ph - y.unit(b) * ph))
            .collect();
        if pts.len() > 1 {
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        }
        for p in &pts {
            let (cx, cy) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(s, r#"<circle class="point" cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
        let ly = TOP + 14.0 + 16.0 * k as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(s, r#"<rect x="{lx}" y="{:.2}" width="10" height="10" fill="{color}"/>"#, ly - 9.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, lx + 14.0, esc(&ser.label));
    }
    for (k, note) in notes.iter().enumerate() {
        let _ = writeln!(s, r#"<text class="note" x="{:.2}" y="{:.2}" font-size="11">{}</text>"#, LEFT + 6.0, TOP + 14.0 + 14.0 * k as f64, esc(note));
    }
    s.push_str("</svg>\n");
    s
}

fn meta(report: &RunReport) -> String {
    format!("config_hash={} seeds={:?}", report.config_hash, report.seeds)
}

/// RHS of every theorem against N, from the bounds table.
pub fn rhs_plot(bounds_csv: &str, meta: &str) -> Result<Option<String>, String> {
    let mut lines = bounds_csv.lines();
    let header: Vec<&str> = lines.next().ok_or("bounds table is empty")?.split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).ok_or(format!("bounds table lacks column {name}"));
    let (n_col, seed_col, xi_col) = (col("n")?, col("seed")?, col("xi_index")?);
    let theorems = ["thm1_rhs", "thm2_rhs", "thm3_rhs", "thm4_rhs"];
    let cols: Vec<usize> = theorems.iter().map(|t| col(t)).collect::<Result<_, _>>()?;
    let mut series: Vec<(String, Series)> = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let n: f64 = f[n_col].parse().map_err(|_| "bad n value".to_string())?;
        for (t, &c) in theorems.iter().zip(&cols) {
            let Ok(v) = f[c].parse::<f64>() else { continue };
            let key = format!("{} seed {} ξ#{}", &t[..4], f[seed_col], f[xi_col]);
            match series.iter_mut().find(|(k, _)| *k == key) {
                Some((_, s)) => s.points.push((n, v)),
                None => series.push((
                    key.clone(),
                    Series {
                        label: key,
                        points: vec![(n, v)],
                    },
                )),
            }
        }
    }
    if series.is_empty() {
        return Ok(None);
    }
    let series: Vec<Series> = series.into_iter().map(|(_, s)| s).collect();
    Ok(Some(line_chart(
        "Bound right-hand sides",
        "N (samples per task)",
        "RHS (probability bound, log scale)",
        &series,
        true,
        true,
        meta,
        &["values ≥ 1 are vacuous".to_string()],
    )))
}

fn consistency_label(c: Consistency) -> &'static str {
    match c {
        Consistency::ConsistentTrend => "consistent-trend",
        Consistency::NotConsistent => "not-consistent",
        Consistency::Inconclusive => "inconclusive",
    }
}

pub fn eddm_plot(report: &RunReport) -> Option<String> {
    let mut series: Vec<Series> = Vec::new();
    for c in &report.cells {
        for g in &c.groups {
            let Some(v) = g.eddm else { continue };
            let label = format!("{} seed {} ξ#{}", g.group, c.seed, c.xi_index);
            match series.iter_mut().find(|s| s.label == label) {
                Some(s) => s.points.push((c.n as f64, v)),
                None => series.push(Series {
                    label,
                    points: vec![(c.n as f64, v)],
                }),
            }
        }
    }
    if series.is_empty() {
        return None;
    }
    let notes: Vec<String> = report
        .series
        .iter()
        .map(|s| format!("seed {} ξ#{}: {}", s.seed, s.xi_index, consistency_label(s.consistency)))
        .collect();
    Some(line_chart(
        "EDDM against sample size",
        "N (samples per task)",
        "EDDM (dependence gap, probability units)",
        &series,
        true,
        false,
        &meta(report),
        &notes,
    ))
}

fn diverging(v: f64) -> String {
    let t = v.clamp(-1.0, 1.0);
    let (r, g, b) = if t >= 0.0 {
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

pub fn oddm_heatmap(report: &RunReport) -> Option<String> {
    let cells = &report.cells;
    let rows = cells.first()?.groups.len();
    if rows == 0 {
        return None;
    }
    let range = report.config.class.loss.range();
    let mut s = header("ODDM by task group", &meta(report));
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let cw = pw / cells.len() as f64;
    let rh = ph / rows as f64;
    for (j, c) in cells.iter().enumerate() {
        for (i, g) in c.groups.iter().enumerate().take(rows) {
            let fill = g.oddm.map_or("#bbbbbb".to_string(), diverging);
            let title = g.oddm.map_or("undefined".to_string(), |v| format!("{v:.4}"));
            let _ = writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="{cw:.2}" height="{rh:.2}" fill="{fill}" stroke="#ffffff"><title>{} at N={}: {title}</title></rect>"##,
                LEFT + j as f64 * cw,
                TOP + i as f64 * rh,
                esc(&g.group),
                c.n
            );
        }
        let xi_min = c.xi.iter().copied().fold(f64::INFINITY, f64::min);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">N={} ξ/(b-a)={:.3}</text>"#,
            LEFT + (j as f64 + 0.5) * cw,
            TOP + ph + 16.0,
            c.n,
            xi_min / range
        );
    }
    for (i, g) in cells[0].groups.iter().enumerate() {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, TOP + (i as f64 + 0.5) * rh + 4.0, esc(&g.group));
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">cells (sample size, normalized threshold)</text>"#, LEFT + pw / 2.0, H - 15.0);
    for (k, v) in [-1.0, -0.5, 0.0, 0.5, 1.0].iter().enumerate() {
        let y = TOP + 20.0 * k as f64;
        let _ = writeln!(s, r#"<rect x="{:.2}" y="{y:.2}" width="14" height="14" fill="{}"/>"#, W - RIGHT + 12.0, diverging(*v));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{v:+.1}</text>"#, W - RIGHT + 32.0, y + 11.0);
    }
    s.push_str("</svg>\n");
    Some(s)
}

pub fn verdict_plot(records: &[VerdictRecord], meta: &str) -> Option<String> {
    let with: Vec<&VerdictRecord> = records.iter().filter(|r| r.verdict.is_some()).collect();
    if with.is_empty() {
        return None;
    }
    let lhs = Series {
        label: "LHS (measured)".into(),
        points: with.iter().enumerate().map(|(k, r)| (k as f64, r.verdict.as_ref().unwrap().lhs)).collect(),
    };
    let rhs = Series {
        label: "min(RHS, 1)".into(),
        points: with.iter().enumerate().map(|(k, r)| (k as f64, r.verdict.as_ref().unwrap().rhs.min(1.0))).collect(),
    };
    Some(line_chart("Checked verdicts", "verdict index", "probability", &[lhs, rhs], false, false, meta, &[]))
}

/// Renders every plot whose inputs are present in `dir`.
pub fn emit_plots(dir: &Path) -> Result<PlotOutcome, CliError> {
    let report = read_report(dir)?;
    let meta = meta(&report);
    let mut out = PlotOutcome::default();
    let put = |name: &str, svg: Option<String>, missing: &str, out: &mut PlotOutcome| -> Result<(), CliError> {
        match svg {
            Some(svg) => {
                let path = dir.join(name);
                write_atomic(&path, svg.as_bytes())?;
                out.written.push(path);
            }
            None => out.warnings.push(format!("{missing}; skipping {name}")),
        }
        Ok(())
    };
    match std::fs::read_to_string(dir.join(BOUNDS_FILE)) {
        Ok(text) => match rhs_plot(&text, &meta) {
            Ok(svg) => put(RHS_PLOT, svg, "no bound values", &mut out)?,
            Err(e) => out.warnings.push(format!("{e}; skipping {RHS_PLOT}")),
        },
        Err(_) => out.warnings.push(format!("{BOUNDS_FILE} missing; skipping {RHS_PLOT}")),
    }
    put(EDDM_PLOT, eddm_plot(&report), "no EDDM series", &mut out)?;
    put(ODDM_PLOT, oddm_heatmap(&report), "no ODDM values", &mut out)?;
    let records: Vec<VerdictRecord> = match std::fs::read_to_string(dir.join(VERDICTS_FILE)) {
        Ok(text) => text.lines().filter(|l| !l.trim().is_empty()).filter_map(|l| serde_json::from_str(l).ok()).collect(),
        Err(_) => Vec::new(),
    };
    put(VERDICT_PLOT, verdict_plot(&records, &meta), "no checked verdicts", &mut out)?;
    Ok(out)
}
