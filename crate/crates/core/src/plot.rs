//! Minimal self-contained SVG line/marker plots.

use std::fmt::Write;

use crate::correlator::G2Result;
use crate::fiber::TaperProfile;
use crate::photostats::SaturationFit;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    /// Non-finite y values break the line.
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    pub color: &'static str,
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Dashed horizontal guides (y, label).
    pub guides: Vec<(f64, String)>,
}

/// Round tick step giving about `n` intervals over `span`.
fn nice_step(span: f64, n: f64) -> f64 {
    let raw = span / n;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f < 1.5 {
        1.0
    } else if f < 3.0 {
        2.0
    } else if f < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl Plot {
    fn y_transform(&self, y: f64) -> f64 {
        if self.log_y {
            y.log10()
        } else {
            y
        }
    }

    fn ranges(&self) -> ((f64, f64), (f64, f64)) {
        let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
        let mut yr = (f64::INFINITY, f64::NEG_INFINITY);
        let ys = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .chain(self.guides.iter().map(|g| (f64::NAN, g.0)));
        for (x, y) in ys {
            if x.is_finite() {
                xr = (xr.0.min(x), xr.1.max(x));
            }
            let ty = self.y_transform(y);
            if ty.is_finite() {
                yr = (yr.0.min(ty), yr.1.max(ty));
            }
        }
        let pad = |r: (f64, f64)| {
            if !r.0.is_finite() {
                (0.0, 1.0)
            } else if r.1 - r.0 <= 0.0 {
                (r.0 - 0.5, r.1 + 0.5)
            } else {
                r
            }
        };
        let yr = pad(yr);
        let span = yr.1 - yr.0;
        let yr = if self.log_y {
            yr
        } else {
            (yr.0 - 0.05 * span, yr.1 + 0.05 * span)
        };
        (pad(xr), yr)
    }

    pub fn to_svg(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.ranges();
        let pw = WIDTH - MARGIN_L - MARGIN_R;
        let ph = HEIGHT - MARGIN_T - MARGIN_B;
        let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
        let sy = |ty: f64| MARGIN_T + (1.0 - (ty - y0) / (y1 - y0)) * ph;

        let mut o = String::new();
        let _ = writeln!(
            o,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(o, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            o,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            o,
            r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );

        let step = nice_step(x1 - x0, 8.0);
        let mut t = (x0 / step).ceil() * step;
        while t <= x1 + 1e-9 * step {
            let x = sx(t);
            let _ = writeln!(
                o,
                r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{b2}" stroke="black"/><text x="{x:.2}" y="{ty}" text-anchor="middle">{}</text>"#,
                fmt_tick(t),
                b = MARGIN_T + ph,
                b2 = MARGIN_T + ph + 5.0,
                ty = MARGIN_T + ph + 20.0
            );
            t += step;
        }
        let y_ticks: Vec<f64> = if self.log_y {
            (y0.ceil() as i32..=y1.floor() as i32)
                .map(f64::from)
                .collect()
        } else {
            let step = nice_step(y1 - y0, 6.0);
            let mut v = Vec::new();
            let mut t = (y0 / step).ceil() * step;
            while t <= y1 + 1e-9 * step {
                v.push(t);
                t += step;
            }
            v
        };
        for ty in y_ticks {
            let y = sy(ty);
            let label = if self.log_y {
                fmt_tick(10f64.powf(ty))
            } else {
                fmt_tick(ty)
            };
            let _ = writeln!(
                o,
                r#"<line x1="{a}" y1="{y:.2}" x2="{MARGIN_L}" y2="{y:.2}" stroke="black"/><text x="{tx}" y="{yt:.2}" text-anchor="end">{label}</text>"#,
                a = MARGIN_L - 5.0,
                tx = MARGIN_L - 8.0,
                yt = y + 4.0
            );
        }
        let _ = writeln!(
            o,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN_L + pw / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            o,
            r#"<text x="20" y="{y}" text-anchor="middle" transform="rotate(-90 20 {y})">{}</text>"#,
            escape(&self.y_label),
            y = MARGIN_T + ph / 2.0
        );

        for (g, label) in &self.guides {
            let y = sy(self.y_transform(*g));
            let _ = writeln!(
                o,
                r#"<line x1="{MARGIN_L}" y1="{y:.2}" x2="{r}" y2="{y:.2}" stroke="gray" stroke-dasharray="6 4"/><text x="{tx}" y="{yt:.2}" text-anchor="end" fill="gray">{}</text>"#,
                escape(label),
                r = MARGIN_L + pw,
                tx = MARGIN_L + pw - 4.0,
                yt = y - 4.0
            );
        }

        for (i, s) in self.series.iter().enumerate() {
            match s.style {
                Style::Line => {
                    let mut d = String::new();
                    let mut pen_down = false;
                    for &(x, y) in &s.points {
                        let ty = self.y_transform(y);
                        if !(x.is_finite() && ty.is_finite()) {
                            pen_down = false;
                            continue;
                        }
                        let _ = write!(
                            d,
                            "{}{:.2},{:.2} ",
                            if pen_down { 'L' } else { 'M' },
                            sx(x),
                            sy(ty)
                        );
                        pen_down = true;
                    }
                    let _ = writeln!(
                        o,
                        r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.2"/>"#,
                        d.trim_end(),
                        s.color
                    );
                }
                Style::Markers => {
                    for &(x, y) in &s.points {
                        let ty = self.y_transform(y);
                        if x.is_finite() && ty.is_finite() {
                            let _ = writeln!(
                                o,
                                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{}"/>"#,
                                sx(x),
                                sy(ty),
                                s.color
                            );
                        }
                    }
                }
            }
            let ly = MARGIN_T + 16.0 + 16.0 * i as f64;
            let lx = MARGIN_L + 12.0;
            let _ = writeln!(
                o,
                r#"<rect x="{lx}" y="{a}" width="10" height="10" fill="{}"/><text x="{b}" y="{c}">{}</text>"#,
                s.color,
                escape(&s.label),
                a = ly - 9.0,
                b = lx + 15.0,
                c = ly
            );
        }
        o.push_str("</svg>\n");
        o
    }
}

/// Normalized g²(τ) per bin against delay from the zero peak, with the
/// single-photon threshold at 0.5.
pub fn g2_plot(g2: &G2Result) -> Plot {
    let h = &g2.histogram;
    let points = (0..h.len())
        .map(|i| {
            (
                (h.tau(i) - g2.zero_delay_ps) as f64 * 1e-3,
                g2.normalized[i],
            )
        })
        .collect();
    Plot {
        title: format!("g2(0) = {:.3}", g2.g2_zero),
        x_label: "delay (ns)".into(),
        y_label: "g2 (peak height normalized)".into(),
        log_y: false,
        series: vec![Series {
            label: "g2".into(),
            points,
            style: Style::Line,
            color: "#1f4e9c",
        }],
        guides: vec![(0.5, "0.5".into())],
    }
}

/// Measured (filtered) intensities and the fitted saturation curve.
pub fn saturation_plot(data: &[(f64, f64)], fit: &SaturationFit) -> Plot {
    let p_max = data.iter().map(|d| d.0).fold(0.0, f64::max);
    let curve = (0..=200)
        .map(|i| {
            let p = p_max * i as f64 / 200.0;
            (p, fit.intensity(p))
        })
        .collect();
    Plot {
        title: format!("P_sat = {:.1} nW", fit.p_sat),
        x_label: "excitation power (nW)".into(),
        y_label: "count rate (1/s)".into(),
        log_y: false,
        series: vec![
            Series {
                label: "measured".into(),
                points: data.to_vec(),
                style: Style::Markers,
                color: "#c0392b",
            },
            Series {
                label: "fit".into(),
                points: curve,
                style: Style::Line,
                color: "#1f4e9c",
            },
        ],
        guides: vec![(fit.i_inf, "I_inf".into())],
    }
}

/// Radius along the taper on a logarithmic axis.
pub fn taper_plot(profile: &TaperProfile) -> Plot {
    Plot {
        title: format!(
            "taper: waist {:.0} nm over {:.2} mm",
            profile.recipe.target_radius_nm, profile.waist_length_mm
        ),
        x_label: "z (mm)".into(),
        y_label: "radius (nm)".into(),
        log_y: true,
        series: vec![Series {
            label: "r(z)".into(),
            points: profile.samples.clone(),
            style: Style::Line,
            color: "#1f4e9c",
        }],
        guides: Vec::new(),
    }
}
