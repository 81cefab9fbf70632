//! Self-contained, byte-deterministic SVG plots.
//!
//! Two renderers cover every output kind: a time-series line plot (first
//! column on the x axis, one polyline per named column) and a two-panel
//! phase-plane plot for the amplitude orbits. All coordinates are written
//! with fixed decimal formatting, so identical payloads give identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::CliError;
use crate::runner::CsvPayload;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 46.0;
const MARGIN_BOTTOM: f64 = 58.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Render a line plot of the named columns against the payload's first
/// column and write it to `path`.
pub fn emit_svg(payload: &CsvPayload, columns: &[&str], path: &Path) -> Result<(), CliError> {
    let rendered = render_line_plot(payload, columns)?;
    std::fs::write(path, rendered)?;
    Ok(())
}

/// Line plot against the first column; errors on an empty payload or a
/// missing column name.
pub fn render_line_plot(payload: &CsvPayload, columns: &[&str]) -> Result<String, CliError> {
    if payload.rows.is_empty() {
        return Err(CliError::Config("cannot plot an empty table".into()));
    }
    if payload.columns.is_empty() {
        return Err(CliError::Config("payload has no columns".into()));
    }
    let x_name = payload.columns[0].clone();
    let mut series = Vec::new();
    for name in columns {
        let idx = payload.column_index(name).ok_or_else(|| {
            CliError::Config(format!(
                "column `{name}` not in payload (have: {})",
                payload.columns.join(", ")
            ))
        })?;
        let points: Vec<(f64, f64)> = payload
            .rows
            .iter()
            .map(|r| (r[0], r[idx]))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        series.push(((*name).to_string(), points));
    }

    let xs = series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.1));
    let (x_min, x_max) = padded_range(min_max(xs), 0.0);
    let (y_min, y_max) = padded_range(min_max(ys), 0.05);

    let map_x = |x: f64| {
        MARGIN_LEFT + (x - x_min) / (x_max - x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    };
    let map_y = |y: f64| {
        HEIGHT - MARGIN_BOTTOM
            - (y - y_min) / (y_max - y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    };

    let mut out = String::new();
    svg_header(&mut out, WIDTH, HEIGHT);
    axes(&mut out, x_min, x_max, y_min, y_max, &map_x, &map_y, &x_name, &columns.join(", "));
    for (k, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if !points.is_empty() {
            polyline(&mut out, points, color, &map_x, &map_y);
        }
        // Legend swatch and label.
        let ly = MARGIN_TOP - 28.0 + 14.0 * k as f64;
        let _ = write!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"10\" height=\"3\" fill=\"{}\"/>\
             <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" font-family=\"monospace\">{}</text>\n",
            MARGIN_LEFT + 4.0,
            ly,
            color,
            MARGIN_LEFT + 19.0,
            ly + 4.0,
            name
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Two-panel phase-plane plot of the branch amplitude orbits: cavity on the
/// left, resonator on the right, one curve per branch, with the
/// half-unit coherent-state uncertainty circle drawn at each start point as
/// decoration.
pub fn render_orbit_plot(payload: &CsvPayload) -> Result<String, CliError> {
    if payload.rows.is_empty() {
        return Err(CliError::Config("cannot plot an empty table".into()));
    }
    let mut out = String::new();
    svg_header(&mut out, WIDTH, HEIGHT);
    let panels = [
        ("cavity amplitude", "re_alpha_plus", "im_alpha_plus", "re_alpha_minus", "im_alpha_minus"),
        ("resonator amplitude", "re_beta_plus", "im_beta_plus", "re_beta_minus", "im_beta_minus"),
    ];
    let panel_width = (WIDTH - MARGIN_LEFT - MARGIN_RIGHT - 40.0) / 2.0;
    for (p, (title, re_plus, im_plus, re_minus, im_minus)) in panels.iter().enumerate() {
        let columns = [re_plus, im_plus, re_minus, im_minus];
        let mut idx = [0usize; 4];
        for (slot, name) in idx.iter_mut().zip(columns.iter()) {
            *slot = payload.column_index(name).ok_or_else(|| {
                CliError::Config(format!("column `{name}` not in orbit payload"))
            })?;
        }
        let radius_pad = 0.75;
        let extent = payload
            .rows
            .iter()
            .flat_map(|r| idx.iter().map(|&i| r[i].abs()))
            .fold(1.0f64, f64::max)
            + radius_pad;

        let x0 = MARGIN_LEFT + (panel_width + 40.0) * p as f64;
        let map_x = move |x: f64| x0 + (x + extent) / (2.0 * extent) * panel_width;
        let y_span = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let map_y = move |y: f64| HEIGHT - MARGIN_BOTTOM - (y + extent) / (2.0 * extent) * y_span;

        // Panel frame and axes through the origin.
        let _ = write!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#888\"/>\n",
            x0, MARGIN_TOP, panel_width, y_span
        );
        let _ = write!(
            out,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#ccc\"/>\n",
            map_x(-extent), map_y(0.0), map_x(extent), map_y(0.0)
        );
        let _ = write!(
            out,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#ccc\"/>\n",
            map_x(0.0), map_y(-extent), map_x(0.0), map_y(extent)
        );
        let _ = write!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" font-family=\"monospace\" text-anchor=\"middle\">{title} (Re horizontal, Im vertical)</text>\n",
            x0 + panel_width / 2.0,
            MARGIN_TOP - 10.0
        );

        for (branch, (re_idx, im_idx)) in [(0usize, (idx[0], idx[1])), (1, (idx[2], idx[3]))] {
            let color = PALETTE[branch];
            let points: Vec<(f64, f64)> = payload
                .rows
                .iter()
                .map(|r| (r[re_idx], r[im_idx]))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .collect();
            if points.is_empty() {
                continue;
            }
            polyline(&mut out, &points, color, &map_x, &map_y);
            // Minimum-uncertainty circle (radius 1/2) at the start amplitude;
            // decoration only.
            let (sx, sy) = points[0];
            let r_px = 0.5 / (2.0 * extent) * panel_width;
            let _ = write!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"{}\" stroke-dasharray=\"3,2\"/>\n",
                map_x(sx), map_y(sy), r_px, color
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn svg_header(out: &mut String, width: f64, height: f64) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width:.0} {height:.0}\" width=\"{width:.0}\" height=\"{height:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

fn padded_range((lo, hi): (f64, f64), pad: f64) -> (f64, f64) {
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        let span = hi - lo;
        (lo - pad * span, hi + pad * span)
    }
}

#[allow(clippy::too_many_arguments)]
fn axes(
    out: &mut String,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    map_x: &impl Fn(f64) -> f64,
    map_y: &impl Fn(f64) -> f64,
    x_label: &str,
    y_label: &str,
) {
    let _ = write!(
        out,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#444\"/>\n",
        MARGIN_LEFT,
        MARGIN_TOP,
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    );
    let ticks = 6;
    for k in 0..=ticks {
        let frac = k as f64 / ticks as f64;
        let xv = x_min + frac * (x_max - x_min);
        let yv = y_min + frac * (y_max - y_min);
        let xp = map_x(xv);
        let yp = map_y(yv);
        let _ = write!(
            out,
            "<line x1=\"{xp:.2}\" y1=\"{:.2}\" x2=\"{xp:.2}\" y2=\"{:.2}\" stroke=\"#ddd\"/>\
             <text x=\"{xp:.2}\" y=\"{:.2}\" font-size=\"10\" font-family=\"monospace\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_TOP,
            HEIGHT - MARGIN_BOTTOM,
            HEIGHT - MARGIN_BOTTOM + 16.0,
            tick_label(xv)
        );
        let _ = write!(
            out,
            "<line x1=\"{:.2}\" y1=\"{yp:.2}\" x2=\"{:.2}\" y2=\"{yp:.2}\" stroke=\"#ddd\"/>\
             <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" font-family=\"monospace\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT,
            WIDTH - MARGIN_RIGHT,
            MARGIN_LEFT - 6.0,
            yp + 3.5,
            tick_label(yv)
        );
    }
    let _ = write!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" font-family=\"monospace\" text-anchor=\"middle\">{x_label}</text>\n",
        MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / 2.0,
        HEIGHT - 14.0
    );
    let _ = write!(
        out,
        "<text x=\"16\" y=\"{:.2}\" font-size=\"12\" font-family=\"monospace\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{y_label}</text>\n",
        (HEIGHT - MARGIN_BOTTOM + MARGIN_TOP) / 2.0,
        (HEIGHT - MARGIN_BOTTOM + MARGIN_TOP) / 2.0
    );
}

fn tick_label(value: f64) -> String {
    if value == 0.0 {
        "0".to_string()
    } else if value.abs() >= 1e-3 && value.abs() < 1e4 {
        format!("{value:.3}")
    } else {
        format!("{value:.2e}")
    }
}

fn polyline(
    out: &mut String,
    points: &[(f64, f64)],
    color: &str,
    map_x: &impl Fn(f64) -> f64,
    map_y: &impl Fn(f64) -> f64,
) {
    out.push_str("<polyline fill=\"none\" stroke=\"");
    out.push_str(color);
    out.push_str("\" stroke-width=\"1.2\" points=\"");
    for (x, y) in points {
        let _ = write!(out, "{:.2},{:.2} ", map_x(*x), map_y(*y));
    }
    out.push_str("\"/>\n");
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_payload() -> CsvPayload {
        let mut payload = CsvPayload::new(&["t", "a", "b"]);
        for k in 0..50 {
            let t = k as f64 * 0.1;
            payload.rows.push(vec![t, t.sin(), t.cos()]);
        }
        payload
    }

    #[test]
    fn line_plot_contains_polylines_and_labels() {
        let rendered = render_line_plot(&sample_payload(), &["a", "b"]).unwrap();
        assert!(rendered.starts_with("<svg"));
        assert!(rendered.ends_with("</svg>\n"));
        assert_eq!(rendered.matches("<polyline").count(), 2);
        assert!(rendered.contains(">t<"));
    }

    #[test]
    fn missing_column_is_an_error() {
        let err = render_line_plot(&sample_payload(), &["nope"]).unwrap_err();
        assert!(err.to_string().contains("nope"));
    }

    #[test]
    fn empty_payload_is_an_error() {
        let empty = CsvPayload::new(&["t", "a"]);
        assert!(render_line_plot(&empty, &["a"]).is_err());
    }

    #[test]
    fn rendering_is_deterministic() {
        let payload = sample_payload();
        let first = render_line_plot(&payload, &["a"]).unwrap();
        let second = render_line_plot(&payload, &["a"]).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn emit_svg_writes_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.svg");
        emit_svg(&sample_payload(), &["a", "b"], &path).unwrap();
        let written = std::fs::read_to_string(&path).unwrap();
        assert!(written.starts_with("<svg"));
    }
}
