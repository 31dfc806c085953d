use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 40.0;
const COLORS: [&str; 6] = ["#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Maximal,
    Solution,
    Bound,
}

/// Cartesian overlay: polylines plus critical markers, drawn y-up in a
/// fixed 800x600 view box.
#[derive(Debug, Default)]
pub struct Plot {
    paths: Vec<(String, Style, Vec<(f64, f64)>)>,
    markers: Vec<(f64, f64)>,
}

impl Plot {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn path(&mut self, label: &str, style: Style, pts: Vec<(f64, f64)>) {
        let pts: Vec<_> = pts.into_iter().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
        if pts.len() > 1 {
            self.paths.push((label.to_string(), style, pts));
        }
    }

    pub fn marker(&mut self, x: f64, y: f64) {
        if x.is_finite() && y.is_finite() {
            self.markers.push((x, y));
        }
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let all = self.paths.iter().flat_map(|p| p.2.iter()).chain(self.markers.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !(x1 > x0) {
            x0 -= 1.0;
            x1 += 1.0;
        }
        if !(y1 > y0) {
            y0 -= 1.0;
            y1 += 1.0;
        }
        (x0, x1, y0, y1)
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let scale = ((WIDTH - 2.0 * MARGIN) / (x1 - x0)).min((HEIGHT - 2.0 * MARGIN) / (y1 - y0));
        let ox = MARGIN + 0.5 * ((WIDTH - 2.0 * MARGIN) - scale * (x1 - x0));
        let oy = MARGIN + 0.5 * ((HEIGHT - 2.0 * MARGIN) - scale * (y1 - y0));
        let px = |x: f64| ox + scale * (x - x0);
        let py = |y: f64| HEIGHT - (oy + scale * (y - y0));

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="600" viewBox="0 0 800 600">"#
        );
        let _ = writeln!(s, r#"<rect width="800" height="600" fill="white"/>"#);
        if x0 <= 0.0 && x1 >= 0.0 && y0 <= 0.0 && y1 >= 0.0 {
            let _ = writeln!(
                s,
                r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#444"><title>camera</title></circle>"##,
                px(0.0),
                py(0.0)
            );
        }
        let mut color = 0;
        for (label, style, pts) in &self.paths {
            let (stroke, width, dash) = match style {
                Style::Maximal => ("#d62728", 2.5, r#" stroke-dasharray="8 4""#),
                Style::Bound => ("#ff7f0e", 1.5, r#" stroke-dasharray="3 3""#),
                Style::Solution => {
                    color += 1;
                    (COLORS[(color - 1) % COLORS.len()], 1.5, "")
                }
            };
            let mut d = String::new();
            for (i, (x, y)) in pts.iter().enumerate() {
                let _ = write!(d, "{}{:.2} {:.2}", if i == 0 { "M" } else { " L" }, px(*x), py(*y));
            }
            let _ = writeln!(
                s,
                r#"<path d="{d}" fill="none" stroke="{stroke}" stroke-width="{width}"{dash}><title>{}</title></path>"#,
                escape(label)
            );
        }
        for (x, y) in &self.markers {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="black"><title>critical point</title></circle>"#,
                px(*x),
                py(*y)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn y_axis_points_up() {
        let mut p = Plot::new();
        p.path("s", Style::Solution, vec![(0.0, 0.0), (1.0, 1.0)]);
        let svg = p.render();
        assert!(svg.contains(r#"viewBox="0 0 800 600""#));
        let d = svg.split("d=\"M").nth(1).unwrap();
        let nums: Vec<f64> = d
            .split('"')
            .next()
            .unwrap()
            .split(|c: char| c == ' ' || c == 'L')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse().unwrap())
            .collect();
        assert!(nums[1] > nums[3]);
    }
}
