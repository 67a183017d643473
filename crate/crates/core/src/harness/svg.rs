//! Minimal standalone SVG line plots: axes, ticks, legend, optional log
//! scale. No plotting dependency; CSV stays the canonical data artifact and
//! these files are just a quick visual check.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
}

/// A shared x grid with one or more y series of the same length.
#[derive(Clone, Debug, Default)]
pub struct CurveSet {
    pub x: Vec<f64>,
    pub series: Vec<Series>,
}

impl CurveSet {
    pub fn new(x: Vec<f64>) -> Self {
        Self {
            x,
            series: Vec::new(),
        }
    }

    pub fn push(&mut self, label: impl Into<String>, values: Vec<f64>) {
        self.series.push(Series {
            label: label.into(),
            values,
        });
    }
}

#[derive(Clone, Debug)]
pub struct SvgOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub width: u32,
    pub height: u32,
    /// Embedded as a comment so the artifact is traceable to its config.
    pub config_hash: String,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            title: String::new(),
            x_label: "step".into(),
            y_label: "value".into(),
            log_y: false,
            width: 800,
            height: 500,
            config_hash: String::new(),
        }
    }
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Render polyline curves to an SVG string.
pub fn render_svg_lines(curves: &CurveSet, opts: &SvgOptions) -> Result<String> {
    if curves.series.is_empty() || curves.x.is_empty() {
        return Err(Error::EmptySeries);
    }
    for s in &curves.series {
        if s.values.len() != curves.x.len() {
            return Err(Error::SeriesLengthMismatch {
                label: s.label.clone(),
                expected: curves.x.len(),
                got: s.values.len(),
            });
        }
        if s.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("svg series"));
        }
    }

    let transform = |v: f64| -> f64 {
        if opts.log_y {
            v.max(1e-300).log10()
        } else {
            v
        }
    };
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &curves.series {
        for &v in &s.values {
            let tv = transform(v);
            y_min = y_min.min(tv);
            y_max = y_max.max(tv);
        }
    }
    if y_max - y_min < 1e-12 {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let (x_min, x_max) = (
        curves.x.iter().cloned().fold(f64::INFINITY, f64::min),
        curves.x.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };

    let w = opts.width as f64;
    let h = opts.height as f64;
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let plot_w = w - ml - mr;
    let plot_h = h - mt - mb;
    let px = |x: f64| ml + (x - x_min) / x_span * plot_w;
    let py = |v: f64| mt + (y_max - transform(v)) / (y_max - y_min) * plot_h;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        opts.width, opts.height, opts.width, opts.height
    ));
    if !opts.config_hash.is_empty() {
        out.push_str(&format!("<!-- config {} -->\n", opts.config_hash));
    }
    out.push_str(&format!(
        "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
        opts.width, opts.height
    ));
    if !opts.title.is_empty() {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
            w / 2.0,
            xml_escape(&opts.title)
        ));
    }
    // axes
    out.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        mt + plot_h,
        ml + plot_w,
        mt + plot_h
    ));
    out.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        mt + plot_h
    ));
    // ticks
    let n_ticks = 5;
    for i in 0..=n_ticks {
        let fx = x_min + x_span * i as f64 / n_ticks as f64;
        let x = px(fx);
        out.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
            mt + plot_h,
            mt + plot_h + 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            mt + plot_h + 18.0,
            tick_label(fx)
        ));
        let fy = y_min + (y_max - y_min) * i as f64 / n_ticks as f64;
        let y = mt + (y_max - fy) / (y_max - y_min) * plot_h;
        let label = if opts.log_y { 10f64.powf(fy) } else { fy };
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{ml}\" y2=\"{y}\" stroke=\"black\"/>\n",
            ml - 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            ml - 8.0,
            y + 4.0,
            tick_label(label)
        ));
    }
    // axis labels
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        ml + plot_w / 2.0,
        h - 10.0,
        xml_escape(&opts.x_label)
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        mt + plot_h / 2.0,
        mt + plot_h / 2.0,
        xml_escape(&opts.y_label)
    ));
    // polylines
    for (i, s) in curves.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = curves
            .x
            .iter()
            .zip(&s.values)
            .map(|(&x, &v)| format!("{:.2},{:.2}", px(x), py(v)))
            .collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\" points=\"{}\"/>\n",
            points.join(" ")
        ));
    }
    // legend
    for (i, s) in curves.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = mt + 14.0 + 18.0 * i as f64;
        let x = ml + plot_w - 150.0;
        out.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            x + 22.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            x + 28.0,
            y + 4.0,
            xml_escape(&s.label)
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Render and write to a file.
pub fn export_svg_lines(curves: &CurveSet, opts: &SvgOptions, path: &Path) -> Result<()> {
    let svg = render_svg_lines(curves, opts)?;
    std::fs::write(path, svg)?;
    Ok(())
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_series_render_two_polylines() {
        let mut curves = CurveSet::new(vec![0.0, 1.0, 2.0]);
        curves.push("a", vec![1.0, 2.0, 3.0]);
        curves.push("b", vec![3.0, 2.0, 1.0]);
        let svg = render_svg_lines(&curves, &SvgOptions::default()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("</svg>"));
    }

    #[test]
    fn constant_series_is_a_horizontal_line() {
        let lnm = 800.0f64.ln();
        let mut curves = CurveSet::new(vec![0.0, 1.0, 2.0, 3.0]);
        curves.push("test", vec![lnm; 4]);
        let svg = render_svg_lines(&curves, &SvgOptions::default()).unwrap();
        let points = svg
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        let ys: Vec<&str> = points
            .split_whitespace()
            .map(|p| p.split(',').nth(1).unwrap())
            .collect();
        assert!(ys.windows(2).all(|w| w[0] == w[1]), "y coords {ys:?}");
    }

    #[test]
    fn errors_on_empty_and_mismatched() {
        let curves = CurveSet::new(vec![]);
        assert!(matches!(
            render_svg_lines(&curves, &SvgOptions::default()),
            Err(Error::EmptySeries)
        ));
        let mut curves = CurveSet::new(vec![0.0, 1.0]);
        curves.push("a", vec![1.0]);
        assert!(matches!(
            render_svg_lines(&curves, &SvgOptions::default()),
            Err(Error::SeriesLengthMismatch { .. })
        ));
    }

    #[test]
    fn log_scale_renders() {
        let mut curves = CurveSet::new(vec![0.0, 1.0, 2.0]);
        curves.push("nll", vec![4.0, 0.4, 0.04]);
        let opts = SvgOptions {
            log_y: true,
            ..Default::default()
        };
        assert!(render_svg_lines(&curves, &opts).is_ok());
    }
}
