//! Static line plots of piecewise-constant functions.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use dinterp::grid1d::PwcFunction1D;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 30.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub fn write_plot(path: &Path, curves: &[&PwcFunction1D]) -> io::Result<()> {
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (0.0f64, 0.0f64);
    for u in curves {
        x0 = x0.min(u.grid().lower());
        x1 = x1.max(u.grid().upper());
        for &v in u.values() {
            y0 = y0.min(v);
            y1 = y1.max(v);
        }
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        out,
        r#"<line x1="{m}" y1="{z}" x2="{e}" y2="{z}" stroke="black" stroke-width="0.5"/>"#,
        m = MARGIN,
        e = WIDTH - MARGIN,
        z = sy(0.0)
    );
    for (k, u) in curves.iter().enumerate() {
        let edges = u.grid().edges();
        let mut points = String::new();
        for (j, &v) in u.values().iter().enumerate() {
            let _ = write!(points, "{:.2},{:.2} {:.2},{:.2} ", sx(edges[j]), sy(v), sx(edges[j + 1]), sy(v));
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1" points="{}"/>"#,
            COLORS[k % COLORS.len()],
            points.trim_end()
        );
    }
    out.push_str("</svg>\n");
    fs::write(path, out)
}
