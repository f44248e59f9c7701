//! Minimal static SVG rendering of a survival curve with a shaded band.

use crate::bands::BandResult;
use crate::survest::SurvCurve;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 48.0;

fn sx(t: f64, t0: f64, t1: f64) -> f64 {
    MARGIN + (t - t0) / (t1 - t0) * (W - 2.0 * MARGIN)
}

fn sy(s: f64) -> f64 {
    H - MARGIN - s * (H - 2.0 * MARGIN)
}

fn polyline(points: &[(f64, f64)]) -> String {
    points
        .iter()
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Render the base curve with its band (and optionally the truth curve) to
/// an SVG document. Times are mapped through `time_map` before plotting so
/// internally standardized grids can be drawn on the original scale.
pub fn band_svg(
    band: &BandResult,
    base: &SurvCurve,
    truth: Option<&SurvCurve>,
    title: &str,
    time_map: impl Fn(f64) -> f64,
) -> String {
    let ts: Vec<f64> = base.grid.points().iter().map(|&t| time_map(t)).collect();
    let (t0, t1) = (ts[0], *ts.last().unwrap());

    let curve_pts = |values: &[f64]| -> Vec<(f64, f64)> {
        ts.iter().zip(values).map(|(&t, &v)| (sx(t, t0, t1), sy(v))).collect()
    };

    let mut band_poly = curve_pts(&band.upper.values);
    let mut lower_pts = curve_pts(&band.lower.values);
    lower_pts.reverse();
    band_poly.extend(lower_pts);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<polygon points=\"{}\" fill=\"#9ecae1\" fill-opacity=\"0.45\" stroke=\"none\"/>\n",
        polyline(&band_poly)
    ));
    if let Some(truth) = truth {
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"5,3\"/>\n",
            polyline(&curve_pts(&truth.values))
        ));
    }
    svg.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f4e79\" stroke-width=\"2\"/>\n",
        polyline(&curve_pts(&base.values))
    ));

    // axes
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN,
        t = MARGIN
    ));
    for k in 0..=5 {
        let s = k as f64 / 5.0;
        let y = sy(s);
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{s:.1}</text>\n",
            MARGIN - 6.0,
            y + 4.0
        ));
        let t = t0 + s * (t1 - t0);
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{t:.1}</text>\n",
            sx(t, t0, t1),
            H - MARGIN + 16.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        title
    ));
    svg.push_str("</svg>\n");
    svg
}
