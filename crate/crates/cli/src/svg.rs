//! Self-contained SVG plots: reliability diagrams and precision curves.
//!
//! Hand-rolled so runs need no plotting toolchain. Reliability diagrams use
//! the usual layout: unit square, dashed y=x diagonal for perfect
//! calibration, and the binned curve as a polyline over non-empty bins.

use slicecal_core::curves::{CalibrationCurve, PrecisionCurve};

const SIZE: f64 = 480.0;
const MARGIN: f64 = 56.0;

fn x(v: f64) -> f64 {
    MARGIN + v * (SIZE - 2.0 * MARGIN)
}

fn y(v: f64) -> f64 {
    SIZE - MARGIN - v * (SIZE - 2.0 * MARGIN)
}

fn header(title: &str, x_label: &str, y_label: &str) -> String {
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" \
         viewBox=\"0 0 {SIZE} {SIZE}\">\n\
         <rect width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"15\">{title}</text>\n",
        SIZE / 2.0
    );
    // Axes.
    out.push_str(&format!(
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        x(0.0),
        y(0.0),
        x(1.0),
        y(0.0)
    ));
    out.push_str(&format!(
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        x(0.0),
        y(0.0),
        x(0.0),
        y(1.0)
    ));
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"11\">{v:.1}</text>\n",
            x(v),
            y(0.0) + 18.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"11\">{v:.1}</text>\n",
            x(0.0) - 8.0,
            y(v) + 4.0
        ));
    }
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\">{x_label}</text>\n",
        SIZE / 2.0,
        SIZE - 12.0
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\" transform=\"rotate(-90 16 {:.1})\">{y_label}</text>\n",
        SIZE / 2.0,
        SIZE / 2.0
    ));
    out
}

fn polyline(points: &[(f64, f64)], color: &str) -> String {
    let coords: Vec<String> = points
        .iter()
        .map(|&(px, py)| format!("{:.1},{:.1}", x(px), y(py)))
        .collect();
    let mut out = format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
        coords.join(" ")
    );
    for &(px, py) in points {
        out.push_str(&format!(
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>\n",
            x(px),
            y(py)
        ));
    }
    out
}

/// Reliability diagram of a calibration curve: mean confidence vs accuracy
/// per non-empty bin, with the dashed y=x diagonal of perfect calibration.
pub fn reliability_diagram(curve: &CalibrationCurve, title: &str) -> String {
    let mut out = header(title, "confidence", "accuracy");
    out.push_str(&format!(
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"gray\" \
         stroke-dasharray=\"6,4\"/>\n",
        x(0.0),
        y(0.0),
        x(1.0),
        y(1.0)
    ));
    let points: Vec<(f64, f64)> = curve
        .bins()
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| (b.mean_confidence, b.accuracy))
        .collect();
    if !points.is_empty() {
        out.push_str(&polyline(&points, "#c0392b"));
    }
    out.push_str("</svg>\n");
    out
}

/// Precision-vs-threshold line plot of an exact precision curve.
pub fn precision_plot(curve: &PrecisionCurve, title: &str) -> String {
    let mut out = header(title, "confidence threshold", "precision");
    let mut points: Vec<(f64, f64)> = curve.points().collect();
    points.reverse(); // ascending thresholds
    if !points.is_empty() {
        out.push_str(&polyline(&points, "#2c3e50"));
    }
    out.push_str("</svg>\n");
    out
}
