//! SVG heatmaps of sweep results: one panel per method, `theta` down the
//! rows, `N` across the columns. Darker cells mean lower values.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::sweep::{summarize, CellSummary};
use crate::metrics::TrialRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatMetric {
    FailureRate,
    MeanSuccessError,
}

impl FromStr for HeatMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "failure_rate" => Ok(HeatMetric::FailureRate),
            "mean_success_error" => Ok(HeatMetric::MeanSuccessError),
            other => Err(Error::InvalidInput(format!(
                "unknown metric `{other}` (valid: failure_rate, mean_success_error)"
            ))),
        }
    }
}

impl HeatMetric {
    fn name(self) -> &'static str {
        match self {
            HeatMetric::FailureRate => "failure rate",
            HeatMetric::MeanSuccessError => "mean error of successful recoveries",
        }
    }

    fn value(self, cell: &CellSummary) -> Option<f64> {
        match self {
            HeatMetric::FailureRate => Some(cell.failure_rate),
            HeatMetric::MeanSuccessError => cell.mean_success_error,
        }
    }

    fn label(self, v: f64) -> String {
        match self {
            HeatMetric::FailureRate => format!("{v:.2}"),
            HeatMetric::MeanSuccessError => format!("{v:.2e}"),
        }
    }
}

/// Colour-map endpoints: `LOW` for the minimum, `HIGH` for the maximum.
pub const LOW: (u8, u8, u8) = (8, 29, 88);
pub const HIGH: (u8, u8, u8) = (255, 255, 217);

/// Linear blend between the endpoints for `t` in `[0, 1]`.
pub fn shade(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let mix = |a: u8, b: u8| (f64::from(a) + (f64::from(b) - f64::from(a)) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(LOW.0, HIGH.0),
        mix(LOW.1, HIGH.1),
        mix(LOW.2, HIGH.2)
    )
}

const CELL_W: usize = 70;
const CELL_H: usize = 34;
const MARGIN_L: usize = 70;
const MARGIN_T: usize = 50;
const PANEL_GAP: usize = 40;

fn sorted_unique<T: Copy + PartialOrd>(mut v: Vec<T>) -> Vec<T> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite axis values"));
    v.dedup();
    v
}

pub fn render_heatmap(records: &[TrialRecord], metric: HeatMetric) -> Result<String> {
    if records.is_empty() {
        return Err(Error::InvalidInput("results contain no records".into()));
    }
    let cells = summarize(records);
    let mut methods: Vec<String> = Vec::new();
    for c in &cells {
        if !methods.contains(&c.method) {
            methods.push(c.method.clone());
        }
    }
    let ns = sorted_unique(cells.iter().map(|c| c.n).collect());
    let thetas = sorted_unique(cells.iter().map(|c| c.theta).collect());

    let values: Vec<f64> = cells.iter().filter_map(|c| metric.value(c)).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if values.is_empty() { 0.0 } else { hi - lo };
    let t_of = |v: f64| if span > 0.0 { (v - lo) / span } else { 0.0 };

    let panel_w = MARGIN_L + ns.len() * CELL_W;
    let panel_h = MARGIN_T + thetas.len() * CELL_H + 40;
    let legend_w = 110;
    let width = methods.len() * panel_w + (methods.len() - 1) * PANEL_GAP + legend_w + 20;
    let height = panel_h + 20;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##
    );

    for (p, method) in methods.iter().enumerate() {
        let x0 = p * (panel_w + PANEL_GAP);
        let _ = writeln!(
            svg,
            r#"<g class="panel" data-method="{method}"><text x="{}" y="18" font-size="14" text-anchor="middle">{method}</text>"#,
            x0 + MARGIN_L + ns.len() * CELL_W / 2
        );
        for (i, &theta) in thetas.iter().enumerate() {
            let y = MARGIN_T + i * CELL_H;
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="end">{theta}</text>"#,
                x0 + MARGIN_L - 6,
                y + CELL_H / 2 + 4
            );
            for (j, &n) in ns.iter().enumerate() {
                let x = x0 + MARGIN_L + j * CELL_W;
                let cell = cells
                    .iter()
                    .find(|c| &c.method == method && c.n == n && c.theta == theta);
                match cell.and_then(|c| metric.value(c)) {
                    Some(v) => {
                        let t = t_of(v);
                        let ink = if t < 0.5 { "#ffffff" } else { "#000000" };
                        let _ = writeln!(
                            svg,
                            r#"<rect class="cell" x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{}"/><text x="{}" y="{}" text-anchor="middle" fill="{ink}">{}</text>"#,
                            shade(t),
                            x + CELL_W / 2,
                            y + CELL_H / 2 + 4,
                            metric.label(v)
                        );
                    }
                    None => {
                        let _ = writeln!(
                            svg,
                            r##"<rect class="cell empty" x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="#dddddd"/><text x="{}" y="{}" text-anchor="middle">n/a</text>"##,
                            x + CELL_W / 2,
                            y + CELL_H / 2 + 4
                        );
                    }
                }
            }
        }
        let base = MARGIN_T + thetas.len() * CELL_H;
        for (j, &n) in ns.iter().enumerate() {
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="middle">{n}</text>"#,
                x0 + MARGIN_L + j * CELL_W + CELL_W / 2,
                base + 16
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">N</text><text x="{}" y="{}" text-anchor="middle">theta</text></g>"#,
            x0 + MARGIN_L + ns.len() * CELL_W / 2,
            base + 32,
            x0 + 20,
            MARGIN_T - 10
        );
    }

    // colour bar
    let lx = methods.len() * (panel_w + PANEL_GAP) - PANEL_GAP + 30;
    let bar_h = thetas.len() * CELL_H;
    let _ = writeln!(
        svg,
        r#"<g class="legend"><text x="{lx}" y="{}">{}</text>"#,
        MARGIN_T - 10,
        metric.name()
    );
    let steps = 20;
    for k in 0..steps {
        let t = k as f64 / (steps - 1) as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx}" y="{:.1}" width="16" height="{:.1}" fill="{}"/>"#,
            MARGIN_T as f64 + bar_h as f64 * k as f64 / steps as f64,
            bar_h as f64 / steps as f64 + 0.5,
            shade(t)
        );
    }
    if values.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">no data</text>"#,
            lx + 22,
            MARGIN_T + 10
        );
    } else if span > 0.0 {
        let _ = writeln!(
            svg,
            r#"<text class="legend-min" x="{}" y="{}">{}</text><text class="legend-max" x="{}" y="{}">{}</text>"#,
            lx + 22,
            MARGIN_T + 10,
            metric.label(lo),
            lx + 22,
            MARGIN_T + bar_h,
            metric.label(hi)
        );
    } else {
        let _ = writeln!(
            svg,
            r#"<text class="legend-single" x="{}" y="{}">{}</text>"#,
            lx + 22,
            MARGIN_T + 10,
            metric.label(lo)
        );
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}
