//! Minimal self-contained SVG 1.1 line plots. No external dependencies;
//! output is deterministic for identical inputs (fixed-precision pixel
//! coordinates, stable element order).

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 86.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 46.0;
const MARGIN_BOTTOM: f64 = 58.0;

/// One plotted series. NaN values split the line into separate segments.
pub struct Series<'a> {
    pub label: String,
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    pub color: &'a str,
    pub dashed: bool,
    pub markers: bool,
}

fn esc(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        let trimmed = s.trim_end_matches('0').trim_end_matches('.');
        trimmed.to_string()
    }
}

struct Bounds {
    lo: f64,
    hi: f64,
}

fn data_bounds(values: impl Iterator<Item = f64>) -> Bounds {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        // No finite data at all: pick an arbitrary fixed window.
        return Bounds { lo: 0.0, hi: 1.0 };
    }
    if lo == hi {
        let pad = lo.abs().max(1.0) * 0.05;
        return Bounds {
            lo: lo - pad,
            hi: hi + pad,
        };
    }
    let pad = (hi - lo) * 0.05;
    Bounds {
        lo: lo - pad,
        hi: hi + pad,
    }
}

/// Renders titled axes plus the given series into a standalone SVG document.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let xb = data_bounds(series.iter().flat_map(|s| s.xs.iter().copied()));
    let yb = data_bounds(series.iter().flat_map(|s| s.ys.iter().copied()));
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_px = |x: f64, y: f64| -> (f64, f64) {
        let px = MARGIN_LEFT + (x - xb.lo) / (xb.hi - xb.lo) * plot_w;
        let py = MARGIN_TOP + (yb.hi - y) / (yb.hi - yb.lo) * plot_h;
        (px, py)
    };

    let mut out = String::with_capacity(8192);
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        esc(title)
    ));

    // Axes box.
    out.push_str(&format!(
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n"
    ));

    // Ticks and grid lines.
    for i in 0..5 {
        let f = i as f64 / 4.0;
        let xv = xb.lo + f * (xb.hi - xb.lo);
        let yv = yb.lo + f * (yb.hi - yb.lo);
        let (px, _) = to_px(xv, yb.lo);
        let (_, py) = to_px(xb.lo, yv);
        out.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#ddd\" stroke-width=\"1\"/>\n",
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        ));
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" stroke=\"#ddd\" stroke-width=\"1\"/>\n",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        ));
        out.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            MARGIN_TOP + plot_h + 18.0,
            fmt_tick(xv)
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            MARGIN_LEFT - 6.0,
            py + 4.0,
            fmt_tick(yv)
        ));
    }

    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 14.0,
        esc(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"20\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 20 {:.1})\">{}</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        esc(y_label)
    ));

    // Series: split polylines at NaN gaps.
    for s in series {
        let dash = if s.dashed {
            " stroke-dasharray=\"7 4\""
        } else {
            ""
        };
        let mut run: Vec<(f64, f64)> = Vec::new();
        let flush = |run: &mut Vec<(f64, f64)>, out: &mut String| {
            if run.len() >= 2 {
                let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                out.push_str(&format!(
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"{}/>\n",
                    pts.join(" "),
                    s.color,
                    dash
                ));
            }
            run.clear();
        };
        for (&x, &y) in s.xs.iter().zip(s.ys) {
            if x.is_finite() && y.is_finite() {
                run.push(to_px(x, y));
            } else {
                flush(&mut run, &mut out);
            }
        }
        flush(&mut run, &mut out);
        if s.markers {
            for (&x, &y) in s.xs.iter().zip(s.ys) {
                if x.is_finite() && y.is_finite() {
                    let (px, py) = to_px(x, y);
                    out.push_str(&format!(
                        "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3.2\" fill=\"{}\"/>\n",
                        s.color
                    ));
                }
            }
        }
    }

    // Legend, top-right inside the plot area.
    for (i, s) in series.iter().enumerate() {
        let ly = MARGIN_TOP + 16.0 + i as f64 * 18.0;
        let lx = MARGIN_LEFT + plot_w - 180.0;
        let dash = if s.dashed {
            " stroke-dasharray=\"7 4\""
        } else {
            ""
        };
        out.push_str(&format!(
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{}\" stroke-width=\"1.8\"{}/>\n",
            lx + 28.0,
            s.color,
            dash
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            lx + 34.0,
            ly + 4.0,
            esc(&s.label)
        ));
    }

    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn produces_a_standalone_svg_document() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [1.0, 0.5, 0.8];
        let svg = line_plot(
            "test plot",
            "x",
            "value",
            &[Series {
                label: "truth".into(),
                xs: &xs,
                ys: &ys,
                color: "#000000",
                dashed: false,
                markers: false,
            }],
        );
        assert!(svg.starts_with("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\""));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("test plot"));
    }

    #[test]
    fn nan_gaps_split_polylines() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [1.0, 1.1, f64::NAN, 0.9, 1.0];
        let svg = line_plot(
            "gaps",
            "x",
            "y",
            &[Series {
                label: "broken".into(),
                xs: &xs,
                ys: &ys,
                color: "#cc0000",
                dashed: true,
                markers: false,
            }],
        );
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn output_is_deterministic() {
        let xs = [0.64, 0.52, 0.44, 0.41, 0.37];
        let ys = [4.0e-4, 2.7e-4, 2.3e-4, 2.1e-4, 2.0e-4];
        let mk = || {
            line_plot(
                "rates",
                "reference rate",
                "error",
                &[Series {
                    label: "direct".into(),
                    xs: &xs,
                    ys: &ys,
                    color: "#1f77b4",
                    dashed: false,
                    markers: true,
                }],
            )
        };
        assert_eq!(mk(), mk());
    }

    #[test]
    fn constant_series_is_handled() {
        let xs = [0.0, 1.0];
        let ys = [0.1849, 0.1849];
        let svg = line_plot(
            "flat",
            "x",
            "y",
            &[Series {
                label: "flat".into(),
                xs: &xs,
                ys: &ys,
                color: "#000",
                dashed: false,
                markers: false,
            }],
        );
        assert!(svg.contains("<polyline"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn labels_are_escaped() {
        let xs = [0.0, 1.0];
        let ys = [0.0, 1.0];
        let svg = line_plot(
            "a < b & c",
            "x",
            "y",
            &[Series {
                label: "s<1>".into(),
                xs: &xs,
                ys: &ys,
                color: "#000",
                dashed: false,
                markers: false,
            }],
        );
        assert!(svg.contains("a &lt; b &amp; c"));
        assert!(svg.contains("s&lt;1&gt;"));
    }
}
