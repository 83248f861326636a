//! Standalone SVG for decision regions, responsibility maps and
//! reliability diagrams. Plain rect/path/text markup, no dependencies.

use std::fmt::Write;

use gmc::calibration::ReliabilityBin;
use gmc::diagnostics::GridMap;
use ndarray::ArrayView2;

const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#76b7b2", "#edc948", "#ff9da7", "#9c755f", "#bab0ac",
];
const SIZE: f64 = 480.0;
const MARGIN: f64 = 48.0;

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

struct Frame {
    out: String,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(title: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        let full = SIZE + 2.0 * MARGIN;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" viewBox="0 0 {full} {full}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{full}" height="{full}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
            full / 2.0,
            MARGIN * 0.6,
            escape(title)
        );
        Self { out, x, y }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * SIZE
    }

    fn py(&self, y: f64) -> f64 {
        MARGIN + (self.y.1 - y) / (self.y.1 - self.y.0) * SIZE
    }

    fn axes(&mut self, x_label: &str, y_label: &str) {
        let (x0, x1, y0, y1) = (self.x.0, self.x.1, self.y.0, self.y.1);
        let _ = writeln!(
            self.out,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#
        );
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let (vx, vy) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
            let (px, py) = (self.px(vx), self.py(vy));
            let bottom = MARGIN + SIZE;
            let _ = writeln!(
                self.out,
                r#"<line x1="{px:.2}" y1="{bottom}" x2="{px:.2}" y2="{}" stroke="black"/><text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#,
                bottom + 4.0,
                bottom + 16.0,
                tick(vx)
            );
            let _ = writeln!(
                self.out,
                r#"<line x1="{}" y1="{py:.2}" x2="{MARGIN}" y2="{py:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                MARGIN - 4.0,
                MARGIN - 6.0,
                py + 4.0,
                tick(vy)
            );
        }
        let _ = writeln!(
            self.out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN + SIZE / 2.0,
            MARGIN + SIZE + 36.0,
            escape(x_label)
        );
        let _ = writeln!(
            self.out,
            r#"<text transform="translate(14 {}) rotate(-90)" text-anchor="middle">{}</text>"#,
            MARGIN + SIZE / 2.0,
            escape(y_label)
        );
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" { "0.00".into() } else { s }
}

/// `hex` at opacity `alpha` over white, as an opaque color.
fn tint(hex: &str, alpha: f64) -> String {
    let channel = |k: usize| {
        let c = u8::from_str_radix(&hex[1 + 2 * k..3 + 2 * k], 16).unwrap_or(0) as f64;
        (alpha * c + (1.0 - alpha) * 255.0).round() as u8
    };
    format!("#{:02x}{:02x}{:02x}", channel(0), channel(1), channel(2))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Cell fills; runs of equal fill along a grid row merge into one rect.
fn cells(frame: &mut Frame, grid: &GridMap, fill: impl Fn(usize) -> (usize, f64)) {
    let r = grid.resolution;
    let w = SIZE / r as f64;
    for j in 0..r {
        let y = MARGIN + (r - 1 - j) as f64 * w;
        let mut i = 0;
        while i < r {
            let key = fill(j * r + i);
            let mut end = i + 1;
            while end < r && fill(j * r + end) == key {
                end += 1;
            }
            let _ = writeln!(
                frame.out,
                r#"<rect x="{:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" fill="{}" shape-rendering="crispEdges"/>"#,
                MARGIN + i as f64 * w,
                (end - i) as f64 * w + 0.05,
                w + 0.05,
                tint(color(key.0), key.1)
            );
            i = end;
        }
    }
}

fn scatter(frame: &mut Frame, points: ArrayView2<'_, f64>, labels: &[usize]) {
    for (p, &y) in points.rows().into_iter().zip(labels) {
        let (px, py) = (frame.px(p[0]), frame.py(p[1]));
        if (MARGIN..=MARGIN + SIZE).contains(&px) && (MARGIN..=MARGIN + SIZE).contains(&py) {
            let _ = writeln!(
                frame.out,
                r#"<circle cx="{px:.2}" cy="{py:.2}" r="2.2" fill="{}" stroke="black" stroke-width="0.4"/>"#,
                color(y)
            );
        }
    }
}

fn legend(frame: &mut Frame, entries: &[String]) {
    for (k, name) in entries.iter().enumerate() {
        let y = MARGIN + 8.0 + 16.0 * k as f64;
        let x = MARGIN + SIZE - 110.0;
        let _ = writeln!(
            frame.out,
            r#"<rect x="{x}" y="{y}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            color(k),
            x + 14.0,
            y + 9.0,
            escape(name)
        );
    }
}

/// Predicted-class regions with labelled points on top.
pub fn decision_regions(grid: &GridMap, points: ArrayView2<'_, f64>, labels: &[usize], class_names: &[String], title: &str) -> String {
    let b = grid.bounds;
    let mut f = Frame::new(title, (b.x_min, b.x_max), (b.y_min, b.y_max));
    cells(&mut f, grid, |k| (grid.predicted[k], 0.35));
    scatter(&mut f, points, labels);
    f.axes("x0", "x1");
    legend(&mut f, class_names);
    f.finish()
}

/// Most responsible plane of the grid's class per cell; opacity tracks its
/// responsibility in steps of 0.1.
pub fn responsibility_map(grid: &GridMap, title: &str) -> String {
    let b = grid.bounds;
    let mut f = Frame::new(title, (b.x_min, b.x_max), (b.y_min, b.y_max));
    let winners = grid.winning_planes();
    cells(&mut f, grid, |k| {
        let a = grid.responsibilities[k][winners[k]];
        (winners[k], 0.15 + 0.7 * (a * 10.0).round() / 10.0)
    });
    f.axes("x0", "x1");
    let planes = grid.responsibilities.first().map_or(0, Vec::len);
    legend(&mut f, &(0..planes).map(|m| format!("plane {m}")).collect::<Vec<_>>());
    f.finish()
}

/// Accuracy bars per confidence bin against the diagonal.
pub fn reliability_diagram(bins: &[ReliabilityBin], ece: f64, title: &str) -> String {
    let mut f = Frame::new(&format!("{title} (ECE {ece:.4})"), (0.0, 1.0), (0.0, 1.0));
    for b in bins.iter().filter(|b| b.count > 0) {
        let (x0, x1) = (f.px(b.low), f.px(b.high));
        let (top, base) = (f.py(b.accuracy), f.py(0.0));
        let _ = writeln!(
            f.out,
            r##"<rect x="{x0:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="#4e79a7" fill-opacity="0.8" stroke="white"/>"##,
            x1 - x0,
            base - top
        );
        let gap = f.py(b.mean_confidence);
        let _ = writeln!(
            f.out,
            r##"<line x1="{x0:.2}" y1="{gap:.2}" x2="{x1:.2}" y2="{gap:.2}" stroke="#e15759" stroke-width="2"/>"##
        );
    }
    let (a, z) = ((f.px(0.0), f.py(0.0)), (f.px(1.0), f.py(1.0)));
    let _ = writeln!(
        f.out,
        r#"<path d="M {:.2} {:.2} L {:.2} {:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        a.0, a.1, z.0, z.1
    );
    f.axes("confidence", "accuracy");
    f.finish()
}
