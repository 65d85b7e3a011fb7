//! Minimal self-contained SVG line charts (SVG 1.1, no external assets).

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dash {
    Dashed,
    Dotted,
}

impl Dash {
    fn attr(self) -> &'static str {
        match self {
            Dash::Dashed => " stroke-dasharray=\"8,5\"",
            Dash::Dotted => " stroke-dasharray=\"2,4\"",
        }
    }
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct HLine {
    pub label: String,
    pub y: f64,
    pub dash: Dash,
}

pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub hlines: Vec<HLine>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect()
}

impl LineChart {
    pub fn render(&self) -> String {
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for s in &self.series {
            for &(x, y) in &s.points {
                xs.push(x);
                ys.push(y);
            }
        }
        for h in &self.hlines {
            ys.push(h.y);
        }
        let (mut x_lo, mut x_hi) = min_max(&xs);
        let (mut y_lo, mut y_hi) = min_max(&ys);
        if x_lo == x_hi {
            x_lo -= 1.0;
            x_hi += 1.0;
        }
        if y_lo == y_hi {
            y_lo -= 1.0;
            y_hi += 1.0;
        }
        let y_pad = 0.06 * (y_hi - y_lo);
        y_lo -= y_pad;
        y_hi += y_pad;

        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let px = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
        let py = |y: f64| MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
        ));
        out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        out.push_str(&format!(
            "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>\n",
            MARGIN_LEFT + plot_w / 2.0,
            escape(&self.title)
        ));

        // frame and gridlines with tick labels
        out.push_str(&format!(
            "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"#333\"/>\n"
        ));
        for t in ticks(x_lo, x_hi, 5) {
            let x = px(t);
            out.push_str(&format!(
                "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"#ddd\"/>\n",
                MARGIN_TOP,
                MARGIN_TOP + plot_h
            ));
            out.push_str(&format!(
                "<text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{:.3}</text>\n",
                MARGIN_TOP + plot_h + 18.0,
                t
            ));
        }
        for t in ticks(y_lo, y_hi, 5) {
            let y = py(t);
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" stroke=\"#ddd\"/>\n",
                MARGIN_LEFT,
                MARGIN_LEFT + plot_w
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{:.3}</text>\n",
                MARGIN_LEFT - 6.0,
                y + 4.0,
                t
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 {})\">{}</text>\n",
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_TOP + plot_h / 2.0,
            escape(&self.y_label)
        ));

        for h in &self.hlines {
            let y = py(h.y);
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" stroke=\"#444\" stroke-width=\"1.5\"{}/>\n",
                MARGIN_LEFT,
                MARGIN_LEFT + plot_w,
                h.dash.attr()
            ));
        }

        let mut legend_y = MARGIN_TOP + 10.0;
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            out.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" points=\"{}\"/>\n",
                pts.join(" ")
            ));
            for &(x, y) in &s.points {
                out.push_str(&format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.6\" fill=\"{color}\"/>\n",
                    px(x),
                    py(y)
                ));
            }
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{legend_y:.2}\" x2=\"{}\" y2=\"{legend_y:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                WIDTH - MARGIN_RIGHT + 10.0,
                WIDTH - MARGIN_RIGHT + 34.0
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
                WIDTH - MARGIN_RIGHT + 40.0,
                legend_y + 4.0,
                escape(&s.label)
            ));
            legend_y += 16.0;
        }
        for h in &self.hlines {
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{legend_y:.2}\" x2=\"{}\" y2=\"{legend_y:.2}\" stroke=\"#444\" stroke-width=\"1.5\"{}/>\n",
                WIDTH - MARGIN_RIGHT + 10.0,
                WIDTH - MARGIN_RIGHT + 34.0,
                h.dash.attr()
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
                WIDTH - MARGIN_RIGHT + 40.0,
                legend_y + 4.0,
                escape(&h.label)
            ));
            legend_y += 16.0;
        }

        out.push_str("</svg>\n");
        out
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return (0.0, 1.0);
    }
    (
        finite.iter().copied().fold(f64::INFINITY, f64::min),
        finite.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}
