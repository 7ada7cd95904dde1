//! Bare-bones SVG charts. CSV stays the authoritative output; these are for eyeballing.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD_L: f64 = 64.0;
const PAD_R: f64 = 16.0;
const PAD_T: f64 = 36.0;
const PAD_B: f64 = 72.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit<'a>(points: impl Iterator<Item = &'a (f64, f64)>) -> Self {
        let mut f = Frame {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for &(x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            f.x0 = f.x0.min(x);
            f.x1 = f.x1.max(x);
            f.y0 = f.y0.min(y);
            f.y1 = f.y1.max(y);
        }
        if !f.x0.is_finite() {
            f = Frame {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
            };
        }
        if f.x1 - f.x0 < 1e-12 {
            f.x1 = f.x0 + 1.0;
        }
        if f.y1 - f.y0 < 1e-12 {
            f.y0 -= 0.5;
            f.y1 += 0.5;
        }
        let pad = 0.05 * (f.y1 - f.y0);
        f.y0 -= pad;
        f.y1 += pad;
        f
    }

    fn px(&self, x: f64) -> f64 {
        PAD_L + (x - self.x0) / (self.x1 - self.x0) * (W - PAD_L - PAD_R)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD_B - (y - self.y0) / (self.y1 - self.y0) * (H - PAD_T - PAD_B)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(title: &str, ylabel: &str, f: &Frame) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let (bx, by) = (PAD_L, H - PAD_B);
    let _ = writeln!(
        s,
        r#"<path d="M{bx},{PAD_T} V{by} H{}" fill="none" stroke="black"/>"#,
        W - PAD_R
    );
    for i in 0..=4 {
        let v = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
        let y = f.py(v);
        let _ = writeln!(
            s,
            r##"<line x1="{}" x2="{bx}" y1="{y:.1}" y2="{y:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">{v:.3}</text>"##,
            bx - 4.0,
            bx - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text transform="translate(14,{}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (PAD_T + by) / 2.0,
        escape(ylabel)
    );
    s
}

fn legend(s: &mut String, labels: &[&str]) {
    for (i, l) in labels.iter().enumerate() {
        let y = PAD_T + 6.0 + 14.0 * i as f64;
        let x = W - PAD_R - 150.0;
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{}" width="10" height="3" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            y - 3.0,
            COLORS[i % COLORS.len()],
            x + 14.0,
            y + 1.0,
            escape(l)
        );
    }
}

/// Line chart of numeric series with numeric x ticks.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let f = Frame::fit(series.iter().flat_map(|s| s.points.iter()));
    let mut s = open(title, ylabel, &f);
    for i in 0..=4 {
        let v = f.x0 + (f.x1 - f.x0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            f.px(v),
            H - PAD_B + 16.0,
            trim(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (PAD_L + W - PAD_R) / 2.0,
        H - PAD_B + 36.0,
        escape(xlabel)
    );
    for (i, ser) in series.iter().enumerate() {
        path(&mut s, &f, &ser.points, COLORS[i % COLORS.len()]);
    }
    if series.len() > 1 {
        legend(
            &mut s,
            &series.iter().map(|x| x.label.as_str()).collect::<Vec<_>>(),
        );
    }
    s.push_str("</svg>\n");
    s
}

fn trim(v: f64) -> String {
    let t = format!("{v:.3}");
    t.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn path(s: &mut String, f: &Frame, points: &[(f64, f64)], color: &str) {
    let mut d = String::new();
    let mut pen_up = true;
    for &(x, y) in points {
        if !(x.is_finite() && y.is_finite()) {
            pen_up = true;
            continue;
        }
        let _ = write!(
            d,
            "{}{:.1},{:.1} ",
            if pen_up { "M" } else { "L" },
            f.px(x),
            f.py(y)
        );
        pen_up = false;
    }
    let _ = writeln!(
        s,
        r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
        d.trim_end()
    );
    for &(x, y) in points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.1}" cy="{:.1}" r="2" fill="{color}"/>"#,
            f.px(x),
            f.py(y)
        );
    }
}

/// Line chart over categorical x positions (layer names).
pub fn category_chart(title: &str, ylabel: &str, categories: &[String], series: &[Series]) -> String {
    let f = Frame::fit(series.iter().flat_map(|s| s.points.iter()));
    let f = Frame {
        x0: -0.5,
        x1: categories.len() as f64 - 0.5,
        ..f
    };
    let mut s = open(title, ylabel, &f);
    for (i, c) in categories.iter().enumerate() {
        let x = f.px(i as f64);
        let y = H - PAD_B + 10.0;
        let _ = writeln!(
            s,
            r#"<text transform="translate({x:.1},{y}) rotate(45)">{}</text>"#,
            escape(c)
        );
    }
    for (i, ser) in series.iter().enumerate() {
        path(&mut s, &f, &ser.points, COLORS[i % COLORS.len()]);
    }
    if series.len() > 1 {
        legend(
            &mut s,
            &series.iter().map(|x| x.label.as_str()).collect::<Vec<_>>(),
        );
    }
    s.push_str("</svg>\n");
    s
}

/// One box (q1..q3 with a median tick) per category.
pub fn box_chart(title: &str, ylabel: &str, categories: &[String], boxes: &[(f64, f64, f64)]) -> String {
    let pts: Vec<(f64, f64)> = boxes
        .iter()
        .flat_map(|&(q1, _, q3)| [(0.0, q1), (0.0, q3)])
        .collect();
    let f = Frame::fit(pts.iter());
    let f = Frame {
        x0: -0.5,
        x1: categories.len() as f64 - 0.5,
        ..f
    };
    let mut s = open(title, ylabel, &f);
    let half = 0.3 * (W - PAD_L - PAD_R) / categories.len().max(1) as f64;
    for (i, (c, &(q1, med, q3))) in categories.iter().zip(boxes).enumerate() {
        let x = f.px(i as f64);
        let _ = writeln!(
            s,
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#cfe2f3" stroke="#1f77b4"/>"##,
            x - half,
            f.py(q3),
            2.0 * half,
            (f.py(q1) - f.py(q3)).max(0.5)
        );
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" x2="{:.1}" y1="{:.1}" y2="{:.1}" stroke="#d62728" stroke-width="2"/>"##,
            x - half,
            x + half,
            f.py(med),
            f.py(med)
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate({x:.1},{}) rotate(45)">{}</text>"#,
            H - PAD_B + 10.0,
            escape(c)
        );
    }
    s.push_str("</svg>\n");
    s
}
