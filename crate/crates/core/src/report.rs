//! Deterministic text output: CSV tables with `#`-prefixed metadata and a
//! dependency-free SVG line plot. Nothing here records wall-clock time or
//! machine identity, so rerunning a command with the same seed produces
//! byte-identical files.

use std::fmt::Write as _;

/// A CSV table assembled in memory: metadata comments, one header, rows.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    meta: Vec<(String, String)>,
    header: String,
    rows: Vec<String>,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Csv { meta: Vec::new(), header: header.to_string(), rows: Vec::new() }
    }

    /// Adds a `# key = value` metadata line. Lines are emitted sorted by key
    /// so insertion order cannot leak into the byte stream.
    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    /// Adds one data row from already-formatted fields.
    pub fn row(&mut self, fields: &[String]) -> &mut Self {
        self.rows.push(fields.join(","));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Renders the table. Floats belong in rows via [`fmt_f64`], which uses
    /// the shortest representation that round-trips.
    pub fn render(&self) -> String {
        let mut meta = self.meta.clone();
        meta.sort();
        let mut out = String::new();
        for (k, v) in &meta {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let _ = writeln!(out, "{}", self.header);
        for row in &self.rows {
            let _ = writeln!(out, "{row}");
        }
        out
    }
}

/// Shortest decimal form that parses back to exactly the same f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// One named curve for [`line_plot`].
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PLOT_W: f64 = 800.0;
const PLOT_H: f64 = 500.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f6fb2", "#c2452d", "#2d8a4e", "#8451a1", "#b08a1e", "#3d3d3d"];

/// Renders a polyline plot with a log-scaled x axis and a linear y axis,
/// with tick labels and a legend. Output is a complete standalone SVG
/// document and depends only on the input series.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let xs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .filter(|x| *x > 0.0)
        .collect();
    let ys: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).collect();
    let (x_min, x_max) = bounds(&xs, (1.0, 10.0));
    let (mut y_min, mut y_max) = bounds(&ys, (0.0, 1.0));
    if y_min > 0.0 {
        y_min = 0.0;
    }
    if (y_max - y_min).abs() < 1e-30 {
        y_max = y_min + 1.0;
    }
    let lx_min = x_min.ln();
    let lx_max = if x_max > x_min { x_max.ln() } else { x_min.ln() + 1.0 };
    let px = |x: f64| {
        MARGIN_L + (x.ln() - lx_min) / (lx_max - lx_min) * (PLOT_W - MARGIN_L - MARGIN_R)
    };
    let py = |y: f64| {
        PLOT_H - MARGIN_B - (y - y_min) / (y_max - y_min) * (PLOT_H - MARGIN_T - MARGIN_B)
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {PLOT_W} {PLOT_H}\" \
         font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(svg, "<rect width=\"{PLOT_W}\" height=\"{PLOT_H}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        MARGIN_L + (PLOT_W - MARGIN_L - MARGIN_R) / 2.0,
        escape(title)
    );

    // Axes.
    let x0 = MARGIN_L;
    let x1 = PLOT_W - MARGIN_R;
    let y0 = PLOT_H - MARGIN_B;
    let y1 = MARGIN_T;
    let _ = writeln!(
        svg,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>"
    );

    // Decade ticks on x, five linear ticks on y.
    let mut decade = 10f64.powf(x_min.log10().floor());
    while decade <= x_max * 1.0000001 {
        if decade >= x_min * 0.9999999 {
            let x = px(decade);
            let _ = writeln!(
                svg,
                "<line x1=\"{x}\" y1=\"{y0}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>",
                y0 + 5.0
            );
            let _ = writeln!(
                svg,
                "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
                y0 + 18.0,
                format_tick(decade)
            );
        }
        decade *= 10.0;
    }
    for i in 0..=4 {
        let y = y_min + (y_max - y_min) * i as f64 / 4.0;
        let yy = py(y);
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{yy}\" x2=\"{x0}\" y2=\"{yy}\" stroke=\"black\"/>",
            x0 - 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            x0 - 8.0,
            yy + 4.0,
            format_tick(y)
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        MARGIN_L + (PLOT_W - MARGIN_L - MARGIN_R) / 2.0,
        PLOT_H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );

    // Curves and legend.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0 > 0.0)
            .map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1)))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(
                svg,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                pts.join(" ")
            );
        }
        let ly = MARGIN_T + 16.0 * i as f64 + 8.0;
        let lx = PLOT_W - MARGIN_R + 12.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            lx + 20.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\">{}</text>",
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    let _ = writeln!(svg, "</svg>");
    svg
}

fn bounds(values: &[f64], fallback: (f64, f64)) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo > hi {
        fallback
    } else {
        (lo, hi)
    }
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if a >= 1000.0 || a < 0.01 {
        format!("{v:.0e}")
    } else if a >= 10.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_renders_sorted_metadata_then_header_then_rows() {
        let mut t = Csv::new("n,value");
        t.meta("seed", 7).meta("alpha", 0.5);
        t.row(&["10".into(), fmt_f64(0.25)]);
        t.row(&["20".into(), fmt_f64(0.5)]);
        assert_eq!(t.render(), "# alpha = 0.5\n# seed = 7\nn,value\n10,0.25\n20,0.5\n");
    }

    #[test]
    fn float_formatting_round_trips() {
        for &x in &[0.1, 1.0 / 3.0, 8.886278694512179, 1e-12, 123456.789, -0.0658403127905729] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let series = vec![
            Series { label: "ell=n".into(), points: vec![(100.0, 0.9), (1000.0, 0.5)] },
            Series { label: "ell=n^2".into(), points: vec![(100.0, 0.1), (1000.0, 0.05)] },
        ];
        let a = line_plot("capacity", "n", "nats", &series);
        let b = line_plot("capacity", "n", "nats", &series);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("</svg>"));
        assert!(a.contains("ell=n^2"));
        assert!(a.contains("polyline"));
    }

    #[test]
    fn plot_handles_empty_and_flat_series() {
        let empty = line_plot("t", "x", "y", &[]);
        assert!(empty.contains("</svg>"));
        let flat = vec![Series { label: "c".into(), points: vec![(10.0, 1.0), (100.0, 1.0)] }];
        let svg = line_plot("t", "x", "y", &flat);
        assert!(svg.contains("polyline"));
    }

    #[test]
    fn labels_are_escaped() {
        let s = vec![Series { label: "a<b & c".into(), points: vec![(1.0, 0.0)] }];
        let svg = line_plot("x<y", "n", "p", &s);
        assert!(svg.contains("a&lt;b &amp; c"));
        assert!(svg.contains("x&lt;y"));
        assert!(!svg.contains("a<b"));
    }
}
