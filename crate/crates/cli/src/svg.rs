//! Minimal SVG line plots for visual inspection of decoded draws.

use ndarray::Array2;
use std::fmt::Write as _;

/// Renders up to `max_lines` rows of `draws` as overlaid polylines.
pub fn line_plot(draws: &Array2<f64>, title: &str, max_lines: usize) -> String {
    let (w, h) = (640.0, 360.0);
    let (ml, mr, mt, mb) = (45.0, 10.0, 30.0, 25.0);
    let rows = draws.nrows().min(max_lines);
    let cols = draws.ncols();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..rows {
        for &v in draws.row(i) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() || lo == hi {
        lo = -1.0;
        hi = 1.0;
    }
    let pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    let x = |j: usize| ml + (w - ml - mr) * j as f64 / (cols.max(2) - 1) as f64;
    let y = |v: f64| mt + (h - mt - mb) * (1.0 - (v - lo) / (hi - lo));

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    let _ = write!(
        svg,
        "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n<text x=\"{}\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
        ml,
        title
    );
    // axes
    let _ = write!(
        svg,
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr,
        h - mb,
        h - mb
    );
    for (v, label) in [(lo + pad, format!("{:.2}", lo + pad)), (hi - pad, format!("{:.2}", hi - pad))] {
        let _ = write!(
            svg,
            "<text x=\"2\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
            y(v) + 3.0,
            label
        );
    }
    for i in 0..rows {
        let mut points = String::new();
        for j in 0..cols {
            let _ = write!(points, "{:.1},{:.1} ", x(j), y(draws[[i, j]]));
        }
        let _ = write!(
            svg,
            "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-opacity=\"0.45\" stroke-width=\"1\" points=\"{}\"/>\n",
            points.trim_end()
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emits_wellformed_svg() {
        let draws = Array2::from_shape_fn((5, 20), |(i, j)| (i as f64 - 2.0) * (j as f64 / 19.0));
        let svg = line_plot(&draws, "draws", 3);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 3);
    }
}
