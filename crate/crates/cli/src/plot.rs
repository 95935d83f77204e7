//! Static SVG quantile-band plots, no scripting.
//!
//! One file per metric: x axis is cumulative evaluations, one median polyline
//! plus one shaded q10-q90 band per campaign, and a legend entry per
//! campaign.

use ehrlich::CampaignSummary;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(f64::MIN_POSITIVE);
        MARGIN_LEFT + (v - self.x_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(f64::MIN_POSITIVE);
        HEIGHT - MARGIN_BOTTOM - (v - self.y_min) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

pub fn render_metric_svg(metric: &str, campaigns: &[(String, CampaignSummary)]) -> String {
    let mut x_max = 0.0f64;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for (_, summary) in campaigns {
        let series = summary.metrics.metric(metric).expect("known metric name");
        x_max = x_max.max(*summary.evals.last().unwrap_or(&0) as f64);
        for values in [&series.q10, &series.q50, &series.q90] {
            for &v in values.iter().filter(|v| v.is_finite()) {
                y_min = y_min.min(v);
                y_max = y_max.max(v);
            }
        }
    }
    if !y_min.is_finite() || !y_max.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    if y_max - y_min < 1e-12 {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let frame = Frame {
        x_min: 0.0,
        x_max: x_max.max(1.0),
        y_min,
        y_max,
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"28\" font-family=\"sans-serif\" font-size=\"18\" \
         text-anchor=\"middle\">{metric} (median, q10&#8211;q90 over trials)</text>\n",
        WIDTH / 2.0
    ));

    push_axes(&mut svg, &frame);

    for (idx, (label, summary)) in campaigns.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let series = summary.metrics.metric(metric).expect("known metric name");
        let xs: Vec<f64> = summary.evals.iter().map(|&e| e as f64).collect();

        let mut band = String::new();
        for (x, y) in xs.iter().zip(&series.q90) {
            band.push_str(&format!("{:.2},{:.2} ", frame.x(*x), frame.y(clampf(*y, &frame))));
        }
        for (x, y) in xs.iter().zip(&series.q10).rev() {
            band.push_str(&format!("{:.2},{:.2} ", frame.x(*x), frame.y(clampf(*y, &frame))));
        }
        svg.push_str(&format!(
            "<polygon class=\"band\" points=\"{}\" fill=\"{color}\" fill-opacity=\"0.18\" \
             stroke=\"none\"/>\n",
            band.trim_end()
        ));

        let median: Vec<String> = xs
            .iter()
            .zip(&series.q50)
            .map(|(x, y)| format!("{:.2},{:.2}", frame.x(*x), frame.y(clampf(*y, &frame))))
            .collect();
        svg.push_str(&format!(
            "<polyline class=\"median\" points=\"{}\" fill=\"none\" stroke=\"{color}\" \
             stroke-width=\"2\"/>\n",
            median.join(" ")
        ));

        let ly = MARGIN_TOP + 18.0 * idx as f64;
        svg.push_str(&format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n",
            MARGIN_LEFT + 8.0,
            ly
        ));
        svg.push_str(&format!(
            "<text class=\"legend\" x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" \
             font-size=\"13\">{}</text>\n",
            MARGIN_LEFT + 26.0,
            ly + 11.0,
            escape(label)
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

fn clampf(v: f64, frame: &Frame) -> f64 {
    if v.is_finite() {
        v
    } else if v > 0.0 {
        frame.y_max
    } else {
        frame.y_min
    }
}

fn push_axes(svg: &mut String, frame: &Frame) {
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let xv = frame.x_min + t * (frame.x_max - frame.x_min);
        let xp = frame.x(xv);
        svg.push_str(&format!(
            "<line x1=\"{xp:.2}\" y1=\"{y0}\" x2=\"{xp:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            y0 + 5.0
        ));
        svg.push_str(&format!(
            "<text class=\"tick\" x=\"{xp:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" \
             font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            y0 + 20.0,
            format_tick(xv)
        ));
        let yv = frame.y_min + t * (frame.y_max - frame.y_min);
        let yp = frame.y(yv);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{yp:.2}\" x2=\"{x0}\" y2=\"{yp:.2}\" stroke=\"black\"/>\n",
            x0 - 5.0
        ));
        svg.push_str(&format!(
            "<text class=\"tick\" x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" \
             font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            x0 - 9.0,
            yp + 4.0,
            format_tick(yv)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\">evaluations</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 18.0
    ));
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 100_000.0 {
        format!("{:.1e}", v)
    } else if v.abs() >= 10.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
