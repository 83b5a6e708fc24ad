//! Static two-panel monitoring chart (T² above, SPE below) as SVG.

use std::fmt::Write;

use olpp_core::monitoring::{DetectionRecord, MonitoringModel};

const WIDTH: f64 = 900.0;
const PANEL_HEIGHT: f64 = 260.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const GAP: f64 = 50.0;
/// Floor for values on a logarithmic axis.
const LOG_FLOOR: f64 = 1e-12;

struct Panel<'a> {
    title: &'a str,
    values: Vec<f64>,
    threshold: Option<f64>,
}

pub fn render(records: &[DetectionRecord], model: &MonitoringModel, log_scale: bool) -> String {
    let index: Vec<usize> = records.iter().map(|r| r.sample_index).collect();
    let panels = [
        Panel {
            title: "T²",
            values: records.iter().map(|r| r.t2).collect(),
            threshold: Some(model.j_th_t2),
        },
        Panel {
            title: "SPE",
            values: records.iter().map(|r| r.spe).collect(),
            threshold: model.j_th_spe,
        },
    ];
    let height = MARGIN_TOP + 2.0 * PANEL_HEIGHT + GAP + 40.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, panel) in panels.iter().enumerate() {
        let top = MARGIN_TOP + i as f64 * (PANEL_HEIGHT + GAP);
        draw_panel(&mut svg, panel, &index, top, log_scale);
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">sample</text>"#,
        MARGIN_LEFT + plot_width() / 2.0,
        height - 8.0
    );
    svg.push_str("</svg>\n");
    svg
}

fn plot_width() -> f64 {
    WIDTH - MARGIN_LEFT - MARGIN_RIGHT
}

fn draw_panel(svg: &mut String, panel: &Panel, index: &[usize], top: f64, log_scale: bool) {
    let transform = |v: f64| if log_scale { v.max(LOG_FLOOR).log10() } else { v };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in panel.values.iter().copied().chain(panel.threshold) {
        lo = lo.min(transform(v));
        hi = hi.max(transform(v));
    }
    if !log_scale {
        lo = lo.min(0.0);
    }
    if !(hi > lo) {
        hi = lo + 1.0;
    }
    let pad = 0.05 * (hi - lo);
    hi += pad;
    if log_scale {
        lo -= pad;
    }
    let (x0, x1) = (
        index.first().copied().unwrap_or(0) as f64,
        index.last().copied().unwrap_or(1).max(1) as f64,
    );
    let span = if x1 > x0 { x1 - x0 } else { 1.0 };
    let px = |x: f64| MARGIN_LEFT + (x - x0) / span * plot_width();
    let py = |v: f64| top + PANEL_HEIGHT - (transform(v) - lo) / (hi - lo) * PANEL_HEIGHT;

    let _ = writeln!(
        svg,
        r##"<g class="panel"><rect x="{MARGIN_LEFT}" y="{top:.1}" width="{:.1}" height="{PANEL_HEIGHT}" fill="none" stroke="#444"/>"##,
        plot_width()
    );
    let scale_note = if log_scale { " (log10)" } else { "" };
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN_LEFT}" y="{:.1}" font-weight="bold">{}{scale_note}</text>"#,
        top - 8.0,
        panel.title
    );
    for (value, y) in [(hi, top), (lo, top + PANEL_HEIGHT)] {
        let label = if log_scale {
            format!("1e{value:.1}")
        } else {
            format!("{value:.3}")
        };
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#,
            MARGIN_LEFT - 6.0,
            y + 4.0
        );
    }

    let points = decimate(index, &panel.values, plot_width() as usize);
    let mut path = String::new();
    for (k, &(x, v)) in points.iter().enumerate() {
        let _ = write!(path, "{}{:.2},{:.2}", if k == 0 { "" } else { " " }, px(x), py(v));
    }
    let _ = writeln!(
        svg,
        r##"<polyline class="series" fill="none" stroke="#1f5fa8" stroke-width="1" points="{path}"/>"##
    );
    match panel.threshold {
        Some(j) => {
            let y = py(j);
            let _ = writeln!(
                svg,
                r##"<line class="threshold" x1="{MARGIN_LEFT}" y1="{y:.2}" x2="{:.1}" y2="{y:.2}" stroke="#c0392b" stroke-dasharray="6,4"/>"##,
                MARGIN_LEFT + plot_width()
            );
        }
        None => {
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">no control limit: residual space is empty</text>"#,
                MARGIN_LEFT + plot_width() - 6.0,
                top + 16.0
            );
        }
    }
    svg.push_str("</g>\n");
}

/// Keeps the first, minimum, maximum and last value of each horizontal
/// bucket so long series stay small without hiding spikes.
fn decimate(index: &[usize], values: &[f64], buckets: usize) -> Vec<(f64, f64)> {
    let n = values.len();
    if n <= 4 * buckets.max(1) {
        return index.iter().zip(values).map(|(&i, &v)| (i as f64, v)).collect();
    }
    let mut out = Vec::with_capacity(4 * buckets);
    for b in 0..buckets {
        let (s, e) = (b * n / buckets, (b + 1) * n / buckets);
        if s == e {
            continue;
        }
        let (mut imin, mut imax) = (s, s);
        for i in s..e {
            if values[i] < values[imin] {
                imin = i;
            }
            if values[i] > values[imax] {
                imax = i;
            }
        }
        let mut picks = [s, imin, imax, e - 1];
        picks.sort_unstable();
        let mut last = usize::MAX;
        for p in picks {
            if p != last {
                out.push((index[p] as f64, values[p]));
                last = p;
            }
        }
    }
    out
}
