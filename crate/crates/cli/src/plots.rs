//! Dependency-free image output: binary PPM heatmaps and SVG line plots.

use std::fmt::Write as _;

/// Colour stops of a perceptually ordered dark-blue to yellow ramp.
const RAMP: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

pub const GRANTED: &str = "#1f4fd8";
pub const DENIED: &str = "#d62728";

fn ramp(t: f64) -> [u8; 3] {
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let x = t * (RAMP.len() - 1) as f64;
    let i = (x.floor() as usize).min(RAMP.len() - 2);
    let f = x - i as f64;
    std::array::from_fn(|c| (RAMP[i][c] + f * (RAMP[i + 1][c] - RAMP[i][c])).round() as u8)
}

/// Binary PPM of an `nx` x `ny` x-fastest slice, north up, each cell
/// drawn as a `scale` x `scale` block. Values map linearly from `[lo, hi]`.
pub fn heatmap_ppm(
    values: &[f64],
    nx: usize,
    ny: usize,
    lo: f64,
    hi: f64,
    scale: usize,
) -> Vec<u8> {
    let (w, h) = (nx * scale, ny * scale);
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    let span = hi - lo;
    for row in 0..h {
        let j = ny - 1 - row / scale;
        for col in 0..w {
            let v = values[j * nx + col / scale];
            let t = if span > 0.0 { (v - lo) / span } else { 0.0 };
            out.extend_from_slice(&ramp(t));
        }
    }
    out
}

/// Pixel scale so the longer side is roughly 512 pixels.
pub fn scale_for(nx: usize, ny: usize) -> usize {
    (512 / nx.max(ny).max(1)).max(1)
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const M: f64 = 56.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2",
];

fn svg_open(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
}

/// Rejection-rate curves over thresholds in `[0, 1]`, one series each.
pub fn curves_svg(series: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut out = String::new();
    svg_open(&mut out);
    let px = |t: f64| M + t * (W - 2.0 * M);
    let py = |r: f64| H - M - r * (H - 2.0 * M);
    let _ = writeln!(
        out,
        r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    );
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{v}</text>"#,
            px(v),
            H - M + 16.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v}</text>"#,
            M - 6.0,
            py(v) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">clearance threshold</text>"#,
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">rejection rate</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|(t, r)| format!("{:.2},{:.2}", px(*t), py(*r)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" fill="{colour}">{}</text>"#,
            M + 8.0,
            M + 16.0 * (i + 1) as f64,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Top-down view of paths inside `extent = [[x_min, x_max], [y_min, y_max]]`,
/// blue when granted and red otherwise.
pub fn paths_svg(paths: &[(String, Vec<[f64; 3]>, bool)], extent: [[f64; 2]; 2]) -> String {
    let mut out = String::new();
    svg_open(&mut out);
    let sx = (W - 2.0 * M) / (extent[0][1] - extent[0][0]).max(1e-9);
    let sy = (H - 2.0 * M) / (extent[1][1] - extent[1][0]).max(1e-9);
    let s = sx.min(sy);
    let px = |x: f64| M + (x - extent[0][0]) * s;
    let py = |y: f64| H - M - (y - extent[1][0]) * s;
    let _ = writeln!(
        out,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        px(extent[0][0]),
        py(extent[1][1]),
        (extent[0][1] - extent[0][0]) * s,
        (extent[1][1] - extent[1][0]) * s
    );
    for (name, pts, granted) in paths {
        let colour = if *granted { GRANTED } else { DENIED };
        let coords: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.2},{:.2}", px(p[0]), py(p[1])))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            coords.join(" "),
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_header_and_size() {
        let img = heatmap_ppm(&[0.0, 1.0, 2.0, 3.0], 2, 2, 0.0, 3.0, 3);
        let header = b"P6\n6 6\n255\n";
        assert!(img.starts_with(header));
        assert_eq!(img.len(), header.len() + 6 * 6 * 3);
        // top-left pixel shows the north-west cell (value 2)
        assert_eq!(&img[header.len()..header.len() + 3], &ramp(2.0 / 3.0));
    }

    #[test]
    fn ramp_ends() {
        assert_eq!(ramp(0.0), [68, 1, 84]);
        assert_eq!(ramp(1.0), [253, 231, 37]);
        assert_eq!(ramp(f64::NAN), ramp(0.0));
    }

    #[test]
    fn svg_colours_follow_verdict() {
        let svg = paths_svg(
            &[
                ("a".into(), vec![[0.0; 3], [10.0, 10.0, 0.0]], true),
                ("b".into(), vec![[0.0; 3], [5.0, 0.0, 0.0]], false),
            ],
            [[0.0, 10.0], [0.0, 10.0]],
        );
        assert!(svg.contains(GRANTED) && svg.contains(DENIED));
        let c = curves_svg(&[("x<y".into(), vec![(0.0, 0.0), (1.0, 1.0)])]);
        assert!(c.contains("x&lt;y"));
    }
}
