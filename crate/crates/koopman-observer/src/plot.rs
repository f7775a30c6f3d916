//! Minimal SVG line plots (axes, ticks, legend, optional log-scale y) so the
//! pipeline can emit trajectory and error-decay figures with no display stack.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 44.0;
const MARGIN_B: f64 = 52.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub dashed: bool,
}

impl Series {
    pub fn solid(label: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Series {
            label: label.into(),
            xs,
            ys,
            dashed: false,
        }
    }

    pub fn dashed(label: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Series {
            label: label.into(),
            xs,
            ys,
            dashed: true,
        }
    }
}

fn nice_ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    (0..=count)
        .map(|k| lo + (hi - lo) * k as f64 / count as f64)
        .collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        if s.is_empty() || s == "-" { "0".into() } else { s }
    } else {
        format!("{v:.1e}")
    }
}

/// Render one figure. With `log_y` the y data must be positive; points at or
/// below zero are dropped from the drawn polylines (a decaying error norm can
/// reach exact zero at the matched-start instant).
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    log_y: bool,
) -> Result<String> {
    if series.is_empty() {
        return Err(Error::InvalidArgument("no series to plot".into()));
    }
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for s in series {
        if s.xs.len() != s.ys.len() {
            return Err(Error::DimensionMismatch(format!(
                "series '{}' has {} x values and {} y values",
                s.label,
                s.xs.len(),
                s.ys.len()
            )));
        }
        for (&x, &y) in s.xs.iter().zip(&s.ys) {
            if !x.is_finite() || !y.is_finite() {
                continue;
            }
            let yv = if log_y {
                if y <= 0.0 {
                    continue;
                }
                y.log10()
            } else {
                y
            };
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(yv);
            ymax = ymax.max(yv);
        }
    }
    if !xmin.is_finite() || !ymin.is_finite() {
        return Err(Error::InvalidArgument(
            "no drawable points (all non-finite or non-positive on a log axis)".into(),
        ));
    }
    if xmax == xmin {
        xmax = xmin + 1.0;
    }
    if ymax == ymin {
        ymax = ymin + 1.0;
        ymin -= 1.0;
    }
    let pad = 0.04 * (ymax - ymin);
    let (ymin, ymax) = (ymin - pad, ymax + pad);

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + (x - xmin) / (xmax - xmin) * plot_w;
    let py = |y: f64| MARGIN_T + (1.0 - (y - ymin) / (ymax - ymin)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        svg,
        "  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        MARGIN_L + plot_w / 2.0,
        xml_escape(title)
    );

    // frame
    let _ = writeln!(
        svg,
        "  <rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" fill=\"none\" stroke=\"#333\"/>"
    );

    // ticks + grid
    for tx in nice_ticks(xmin, xmax, 5) {
        let x = px(tx);
        let _ = writeln!(
            svg,
            "  <line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#ccc\" stroke-width=\"0.5\"/>",
            MARGIN_T,
            MARGIN_T + plot_h
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            MARGIN_T + plot_h + 18.0,
            fmt_tick(tx)
        );
    }
    for ty in nice_ticks(ymin, ymax, 5) {
        let y = py(ty);
        let _ = writeln!(
            svg,
            "  <line x1=\"{MARGIN_L}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#ccc\" stroke-width=\"0.5\"/>",
            MARGIN_L + plot_w
        );
        let label = if log_y {
            format!("1e{}", fmt_tick(ty))
        } else {
            fmt_tick(ty)
        };
        let _ = writeln!(
            svg,
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            MARGIN_L - 6.0,
            y + 4.0,
            label
        );
    }

    // axis labels
    let _ = writeln!(
        svg,
        "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0,
        xml_escape(x_label)
    );
    let _ = writeln!(
        svg,
        "  <text x=\"18\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{}</text>",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        xml_escape(y_label)
    );

    // polylines
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = if s.dashed {
            " stroke-dasharray=\"6 4\""
        } else {
            ""
        };
        let mut points = String::new();
        for (&x, &y) in s.xs.iter().zip(&s.ys) {
            if !x.is_finite() || !y.is_finite() {
                continue;
            }
            let yv = if log_y {
                if y <= 0.0 {
                    continue;
                }
                y.log10()
            } else {
                y
            };
            let _ = write!(points, "{:.2},{:.2} ", px(x), py(yv));
        }
        if points.is_empty() {
            continue;
        }
        let _ = writeln!(
            svg,
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash} points=\"{}\"/>",
            points.trim_end()
        );
    }

    // legend
    let lx = MARGIN_L + plot_w + 12.0;
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = MARGIN_T + 14.0 + 18.0 * i as f64;
        let dash = if s.dashed {
            " stroke-dasharray=\"6 4\""
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            "  <line x1=\"{lx:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>",
            lx + 26.0
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            lx + 32.0,
            y + 4.0,
            xml_escape(&s.label)
        );
    }

    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write_svg(path: &Path, svg: &str) -> Result<()> {
    std::fs::write(path, svg).map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_polylines_and_legend() {
        let xs: Vec<f64> = (0..100).map(|k| k as f64 * 0.05).collect();
        let ys: Vec<f64> = xs.iter().map(|t| (-t).exp()).collect();
        let ys2: Vec<f64> = xs.iter().map(|t| (-0.5 * t).exp()).collect();
        let svg = line_plot(
            "decay",
            "t",
            "x",
            &[
                Series::solid("true", xs.clone(), ys),
                Series::dashed("estimate", xs, ys2),
            ],
            false,
        )
        .unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("estimate"));
        assert!(svg.contains("</svg>"));
    }

    #[test]
    fn log_axis_drops_nonpositive_points() {
        let xs = vec![0.0, 1.0, 2.0, 3.0];
        let ys = vec![1.0, 0.1, 0.0, 0.01]; // the zero must vanish, not break log10
        let svg = line_plot("err", "t", "‖e‖", &[Series::solid("run", xs, ys)], true).unwrap();
        let poly = svg
            .lines()
            .find(|l| l.contains("<polyline"))
            .unwrap()
            .to_string();
        let n_points = poly.split("points=\"").nth(1).unwrap().split(' ').count();
        assert_eq!(n_points, 3);
    }

    #[test]
    fn all_nonpositive_on_log_axis_is_an_error() {
        let xs = vec![0.0, 1.0];
        let ys = vec![0.0, 0.0];
        assert!(line_plot("e", "t", "y", &[Series::solid("z", xs, ys)], true).is_err());
    }

    #[test]
    fn escapes_markup_in_labels() {
        let svg = line_plot(
            "a < b & c",
            "t",
            "y",
            &[Series::solid("x<1>", vec![0.0, 1.0], vec![0.0, 1.0])],
            false,
        )
        .unwrap();
        assert!(svg.contains("a &lt; b &amp; c"));
        assert!(svg.contains("x&lt;1&gt;"));
    }
}
