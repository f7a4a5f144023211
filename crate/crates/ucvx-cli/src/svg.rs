//! Minimal SVG plots: polylines, value-colored dots, segments and polygons.

use std::fmt::Write;

use ucvx::TabFunc;

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 48.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone)]
pub enum Layer {
    Line { label: String, pts: Vec<[f64; 2]> },
    /// Dots colored by `values` on a blue–red ramp, or by the layer color.
    Dots { label: String, pts: Vec<[f64; 2]>, values: Option<Vec<f64>> },
    Segments { label: String, segs: Vec<[[f64; 2]; 2]> },
    Polygon { label: String, pts: Vec<[f64; 2]> },
}

impl Layer {
    fn label(&self) -> &str {
        match self {
            Layer::Line { label, .. } | Layer::Dots { label, .. } | Layer::Segments { label, .. } | Layer::Polygon { label, .. } => label,
        }
    }

    fn points(&self) -> Vec<[f64; 2]> {
        match self {
            Layer::Line { pts, .. } | Layer::Dots { pts, .. } | Layer::Polygon { pts, .. } => pts.clone(),
            Layer::Segments { segs, .. } => segs.iter().flatten().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub layers: Vec<Layer>,
}

/// Graph of a 1D function over its finite values.
pub fn graph(label: &str, f: &TabFunc) -> Layer {
    let s = f.support();
    let pts = (0..s.len()).filter(|&i| f.value(i).is_finite()).map(|i| [s.point(i)[0], f.value(i)]).collect();
    Layer::Line { label: label.into(), pts }
}

/// Support points of a 2D function colored by value.
pub fn heat(label: &str, f: &TabFunc) -> Layer {
    let s = f.support();
    let keep: Vec<usize> = (0..s.len()).filter(|&i| f.value(i).is_finite()).collect();
    Layer::Dots {
        label: label.into(),
        pts: keep.iter().map(|&i| [s.point(i)[0], s.point(i)[1]]).collect(),
        values: Some(keep.iter().map(|&i| f.value(i)).collect()),
    }
}

/// [`graph`] for 1D supports, [`heat`] for 2D ones, nothing otherwise.
pub fn function_layer(label: &str, f: &TabFunc) -> Option<Layer> {
    match f.support().dim() {
        1 => Some(graph(label, f)),
        2 => Some(heat(label, f)),
        _ => None,
    }
}

fn ramp(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.5 };
    let r = (40.0 + 215.0 * t).round() as u8;
    let b = (255.0 - 215.0 * t).round() as u8;
    format!("#{r:02x}40{b:02x}")
}

impl Plot {
    pub fn new(title: impl Into<String>) -> Plot {
        Plot { title: title.into(), layers: Vec::new() }
    }

    pub fn with(mut self, layer: Layer) -> Plot {
        self.layers.push(layer);
        self
    }

    pub fn render(&self) -> String {
        let all: Vec<[f64; 2]> = self.layers.iter().flat_map(Layer::points).filter(|p| p[0].is_finite() && p[1].is_finite()).collect();
        let (mut x0, mut x1, mut y0, mut y1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY), |(a, b, c, d), p| {
            (a.min(p[0]), b.max(p[0]), c.min(p[1]), d.max(p[1]))
        });
        if all.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            (x0, x1) = (x0 - 0.5, x1 + 0.5);
        }
        if y1 - y0 < 1e-12 {
            (y0, y1) = (y0 - 0.5, y1 + 0.5);
        }
        let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
        let mut out = String::new();
        let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(out, r##"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="#888"/>"##, W - 2.0 * PAD, H - 2.0 * PAD);
        let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&self.title));
        let _ = writeln!(out, r#"<text x="{PAD}" y="{}" text-anchor="start">{x0:.4}</text>"#, H - PAD + 16.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{x1:.4}</text>"#, W - PAD, H - PAD + 16.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{y0:.4}</text>"#, PAD - 4.0, H - PAD);
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{y1:.4}</text>"#, PAD - 4.0, PAD + 4.0);
        for (k, layer) in self.layers.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            match layer {
                Layer::Line { pts, .. } => {
                    let path: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p[0]), sy(p[1]))).collect();
                    let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
                }
                Layer::Polygon { pts, .. } => {
                    let path: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p[0]), sy(p[1]))).collect();
                    let _ = writeln!(out, r#"<polygon fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
                }
                Layer::Segments { segs, .. } => {
                    for [a, b] in segs {
                        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}"/>"#, sx(a[0]), sy(a[1]), sx(b[0]), sy(b[1]));
                    }
                }
                Layer::Dots { pts, values, .. } => {
                    let (lo, hi) = values.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                    for (i, p) in pts.iter().enumerate() {
                        let fill = match values {
                            Some(v) => ramp(if hi > lo { (v[i] - lo) / (hi - lo) } else { 0.5 }),
                            None => color.to_string(),
                        };
                        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{fill}"/>"#, sx(p[0]), sy(p[1]));
                    }
                }
            }
            let ly = PAD + 16.0 + 16.0 * k as f64;
            let _ = writeln!(out, r#"<text x="{}" y="{ly}" text-anchor="end" fill="{color}">{}</text>"#, W - PAD - 8.0, escape(layer.label()));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_layers_deterministically() {
        let p = Plot::new("t <1>")
            .with(Layer::Line { label: "f".into(), pts: vec![[0.0, 0.0], [1.0, 1.0]] })
            .with(Layer::Dots { label: "v".into(), pts: vec![[0.5, 0.5]], values: Some(vec![2.0]) })
            .with(Layer::Segments { label: "s".into(), segs: vec![[[0.0, 1.0], [1.0, 0.0]]] })
            .with(Layer::Polygon { label: "b".into(), pts: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] });
        let a = p.render();
        assert_eq!(a, p.render());
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("polyline") && a.contains("circle") && a.contains("<line") && a.contains("polygon"));
        assert!(a.contains("t &lt;1&gt;"));
    }

    #[test]
    fn empty_plot_is_valid() {
        assert!(Plot::new("").render().contains("</svg>"));
    }
}
