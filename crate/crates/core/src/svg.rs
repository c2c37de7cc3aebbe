//! Minimal SVG renderings of the scatter and loss-curve artifacts.

use std::fmt::Write;

use crate::trace::TrainingTrace;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;

struct Axis {
    min: f64,
    max: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>) -> Self {
        let (mut min, mut max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        if !(min < max) {
            min -= 1.0;
            max += 1.0;
        }
        let pad = 0.05 * (max - min);
        Self {
            min: min - pad,
            max: max + pad,
        }
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }
}

fn px(axis: &Axis, v: f64) -> f64 {
    MARGIN + axis.frac(v) * (WIDTH - 2.0 * MARGIN)
}

fn py(axis: &Axis, v: f64) -> f64 {
    HEIGHT - MARGIN - axis.frac(v) * (HEIGHT - 2.0 * MARGIN)
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str, x: &Axis, y: &Axis) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="100%" height="100%" fill="white"/>
<text x="{cx}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>
<line x1="{MARGIN}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>
<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{bottom}" stroke="black"/>
<text x="{cx}" y="{xl}" text-anchor="middle" font-family="sans-serif" font-size="12">{x_label}</text>
<text x="16" y="{cy}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {cy})">{y_label}</text>
<text x="{MARGIN}" y="{tick}" font-family="sans-serif" font-size="10">{x0:.1}</text>
<text x="{right}" y="{tick}" text-anchor="end" font-family="sans-serif" font-size="10">{x1:.1}</text>
<text x="{ytx}" y="{bottom}" text-anchor="end" font-family="sans-serif" font-size="10">{y0:.1}</text>
<text x="{ytx}" y="{top}" text-anchor="end" font-family="sans-serif" font-size="10">{y1:.1}</text>
"#,
        cx = WIDTH / 2.0,
        cy = HEIGHT / 2.0,
        bottom = HEIGHT - MARGIN,
        right = WIDTH - MARGIN,
        top = MARGIN + 4.0,
        xl = HEIGHT - 16.0,
        tick = HEIGHT - MARGIN + 14.0,
        ytx = MARGIN - 4.0,
        x0 = x.min,
        x1 = x.max,
        y0 = y.min,
        y1 = y.max,
    );
}

/// Predicted-vs-true scatter with the identity line. Emits exactly one
/// `<circle>` per pair.
pub fn scatter(pairs: &[(f64, f64)]) -> String {
    let axis = Axis::new(pairs.iter().flat_map(|&(t, p)| [t, p]));
    let mut out = String::new();
    frame(
        &mut out,
        "Predicted vs. true body fat",
        "True body fat (%)",
        "Predicted body fat (%)",
        &axis,
        &axis,
    );
    let _ = writeln!(
        out,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 3"/>"#,
        px(&axis, axis.min),
        py(&axis, axis.min),
        px(&axis, axis.max),
        py(&axis, axis.max)
    );
    for &(t, p) in pairs {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue" fill-opacity="0.7"/>"#,
            px(&axis, t),
            py(&axis, p)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Training (and holdout, when present) loss per epoch as polylines.
pub fn loss_curves(trace: &TrainingTrace) -> String {
    let x = Axis::new(trace.entries.iter().map(|e| e.epoch as f64));
    let y = Axis::new(
        trace
            .entries
            .iter()
            .flat_map(|e| std::iter::once(e.train_loss).chain(e.holdout_loss)),
    );
    let mut out = String::new();
    frame(&mut out, "Loss per epoch", "Epoch", "MSE loss", &x, &y);
    let line = |vals: Vec<(f64, f64)>, color: &str| -> String {
        let pts: Vec<String> = vals
            .iter()
            .map(|&(e, l)| format!("{:.2},{:.2}", px(&x, e), py(&y, l)))
            .collect();
        format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            pts.join(" ")
        )
    };
    out.push_str(&line(
        trace
            .entries
            .iter()
            .map(|e| (e.epoch as f64, e.train_loss))
            .collect(),
        "steelblue",
    ));
    let holdout: Vec<(f64, f64)> = trace
        .entries
        .iter()
        .filter_map(|e| e.holdout_loss.map(|h| (e.epoch as f64, h)))
        .collect();
    if !holdout.is_empty() {
        out.push_str(&line(holdout, "darkorange"));
    }
    let _ = writeln!(
        out,
        r#"<text x="{lx}" y="{ly}" font-family="sans-serif" font-size="11" fill="steelblue">training</text>"#,
        lx = WIDTH - MARGIN - 80.0,
        ly = MARGIN + 12.0
    );
    if trace.entries.iter().any(|e| e.holdout_loss.is_some()) {
        let _ = writeln!(
            out,
            r#"<text x="{lx}" y="{ly}" font-family="sans-serif" font-size="11" fill="darkorange">holdout</text>"#,
            lx = WIDTH - MARGIN - 80.0,
            ly = MARGIN + 26.0
        );
    }
    out.push_str("</svg>\n");
    out
}
