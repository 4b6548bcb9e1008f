//! Flame-brushed taper geometry.
//!
//! A hot zone of length L(x) = L0 + α·x is kept uniform while the fiber is
//! elongated by x. Only heated glass stretches, so the waist radius obeys
//! dr_w/dx = −r_w / (2L), and glass leaving the hot zone freezes into the
//! transitions. α = 0 is the constant hot zone, giving an exponential
//! transition r(z) = r0·exp(−z/L0) and waist r_w = r0·exp(−x/(2L0)).
//!
//! Lengths are carried in nm internally; the public surface uses the units
//! named in each field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NM_PER_MM: f64 = 1e6;
const NM_PER_UM: f64 = 1e3;
/// Geometric sampling ratio between adjacent profile radii.
pub const PROFILE_RATIO: f64 = 1.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum HotZoneMode {
    ConstantHotzone,
    /// Hot zone grows as L0 + alpha·x; alpha < 1.
    LinearProfile {
        alpha: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaperRecipe {
    pub initial_radius_um: f64,
    pub target_radius_nm: f64,
    /// Effective flame (hot-zone) length L0.
    pub hot_zone_mm: f64,
    pub mode: HotZoneMode,
}

impl Default for TaperRecipe {
    fn default() -> Self {
        TaperRecipe {
            initial_radius_um: 62.5,
            target_radius_nm: 150.0,
            hot_zone_mm: 0.5,
            mode: HotZoneMode::ConstantHotzone,
        }
    }
}

impl TaperRecipe {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_radius_um > 0.0 && self.initial_radius_um.is_finite()) {
            return Err(Error::invalid("initial_radius_um", "must be > 0"));
        }
        if !(self.target_radius_nm > 0.0) {
            return Err(Error::invalid("target_radius_nm", "must be > 0"));
        }
        if self.target_radius_nm >= self.r0() {
            return Err(Error::invalid(
                "target_radius_nm",
                "must be smaller than the initial radius",
            ));
        }
        if !(self.hot_zone_mm > 0.0 && self.hot_zone_mm.is_finite()) {
            return Err(Error::invalid("hot_zone_mm", "must be > 0"));
        }
        if let HotZoneMode::LinearProfile { alpha } = self.mode {
            if !(alpha < 1.0 && alpha.is_finite()) {
                return Err(Error::invalid("alpha", "must be < 1"));
            }
            if self.l0() + alpha * self.elongation_nm() <= 0.0 {
                return Err(Error::invalid(
                    "alpha",
                    "hot zone shrinks to zero before the target is reached",
                ));
            }
        }
        Ok(())
    }

    fn r0(&self) -> f64 {
        self.initial_radius_um * NM_PER_UM
    }

    fn l0(&self) -> f64 {
        self.hot_zone_mm * NM_PER_MM
    }

    fn alpha(&self) -> f64 {
        match self.mode {
            HotZoneMode::ConstantHotzone => 0.0,
            HotZoneMode::LinearProfile { alpha } => alpha,
        }
    }

    /// Hot-zone length after elongation `x_nm`.
    fn hot_zone_at(&self, x_nm: f64) -> f64 {
        self.l0() + self.alpha() * x_nm
    }

    /// Waist radius after elongation `x_nm`.
    fn waist_radius_at(&self, x_nm: f64) -> f64 {
        let a = self.alpha();
        if a == 0.0 {
            self.r0() * (-x_nm / (2.0 * self.l0())).exp()
        } else {
            self.r0() * (1.0 + a * x_nm / self.l0()).powf(-1.0 / (2.0 * a))
        }
    }

    fn elongation_nm(&self) -> f64 {
        let a = self.alpha();
        let ratio = self.r0() / self.target_radius_nm;
        if a == 0.0 {
            2.0 * self.l0() * ratio.ln()
        } else {
            self.l0() / a * (ratio.powf(2.0 * a) - 1.0)
        }
    }

    /// Elongation needed to reach the target waist, mm.
    pub fn total_elongation_mm(&self) -> f64 {
        self.elongation_nm() / NM_PER_MM
    }

    /// Waist radius (nm) after elongating by `x_mm`.
    pub fn waist_radius_after(&self, x_mm: f64) -> f64 {
        self.waist_radius_at(x_mm * NM_PER_MM)
    }

    /// Transition radius at distance `s` from its thick end, final shape.
    fn transition_radius(&self, s_nm: f64) -> f64 {
        let a = self.alpha();
        let l0 = self.l0();
        if a == 0.0 {
            self.r0() * (-s_nm / l0).exp()
        } else {
            self.r0() * (1.0 + 2.0 * a * s_nm / ((1.0 - a) * l0)).powf(-1.0 / (2.0 * a))
        }
    }

    /// Inverse of [`Self::transition_radius`].
    fn transition_position(&self, r_nm: f64) -> f64 {
        let a = self.alpha();
        let l0 = self.l0();
        let ratio = self.r0() / r_nm;
        if a == 0.0 {
            l0 * ratio.ln()
        } else {
            (1.0 - a) * l0 / (2.0 * a) * (ratio.powf(2.0 * a) - 1.0)
        }
    }
}

/// Sampled taper: left transition, waist, right transition.
#[derive(Debug, Clone, Serialize)]
pub struct TaperProfile {
    pub recipe: TaperRecipe,
    /// (z mm, r nm), z from the thick end of the left transition.
    pub samples: Vec<(f64, f64)>,
    pub waist_length_mm: f64,
    pub transition_length_mm: f64,
    pub total_elongation_mm: f64,
}

impl TaperProfile {
    pub fn total_length_mm(&self) -> f64 {
        2.0 * self.transition_length_mm + self.waist_length_mm
    }

    /// Closed-form radius at `z_mm`; r0 outside the taper.
    pub fn radius_at(&self, z_mm: f64) -> f64 {
        let recipe = &self.recipe;
        let total = self.total_length_mm();
        if z_mm <= 0.0 || z_mm >= total {
            return recipe.r0();
        }
        let s = z_mm.min(total - z_mm);
        if s >= self.transition_length_mm {
            recipe.target_radius_nm
        } else {
            recipe.transition_radius(s * NM_PER_MM)
        }
    }

    /// Glass volume of the original cylinder consumed by the taper, nm²·mm.
    pub fn consumed_volume(&self) -> f64 {
        std::f64::consts::PI * self.recipe.r0().powi(2) * self.recipe.hot_zone_mm
    }
}

pub fn taper_profile(recipe: &TaperRecipe) -> Result<TaperProfile> {
    recipe.validate()?;
    let x = recipe.elongation_nm();
    let alpha = recipe.alpha();
    let z0 = (1.0 - alpha) * x / 2.0;
    let waist = recipe.hot_zone_at(x);
    let r0 = recipe.r0();
    let rw = recipe.target_radius_nm;
    let n = ((r0 / rw).ln() / PROFILE_RATIO.ln()).ceil() as usize;
    let left: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            if i == n {
                return (z0, rw);
            }
            let r = r0 * (rw / r0).powf(i as f64 / n as f64);
            (recipe.transition_position(r), r)
        })
        .collect();
    let total = 2.0 * z0 + waist;
    let mut samples: Vec<(f64, f64)> = left.iter().map(|&(z, r)| (z / NM_PER_MM, r)).collect();
    samples.extend(
        left.iter()
            .rev()
            .map(|&(z, r)| ((total - z) / NM_PER_MM, r)),
    );
    Ok(TaperProfile {
        recipe: *recipe,
        samples,
        waist_length_mm: waist / NM_PER_MM,
        transition_length_mm: z0 / NM_PER_MM,
        total_elongation_mm: x / NM_PER_MM,
    })
}

/// One motor-program step: elongate while sweeping the flame over the hot
/// zone, positions relative to the taper centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PullStep {
    pub elongation_mm: f64,
    pub hot_zone_mm: f64,
    pub sweep_from_mm: f64,
    pub sweep_to_mm: f64,
}

/// Default elongation per program step, as a fraction of L0.
pub const DEFAULT_STEP_FRACTION: f64 = 0.05;

/// Stepwise pulling program reaching the recipe's target waist. The final
/// step is shortened to land on the target.
pub fn pull_trajectory(recipe: &TaperRecipe, step_mm: Option<f64>) -> Result<Vec<PullStep>> {
    recipe.validate()?;
    let total = recipe.elongation_nm();
    let step = step_mm.map_or(DEFAULT_STEP_FRACTION * recipe.l0(), |s| s * NM_PER_MM);
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("step_mm", "must be > 0"));
    }
    if step > total * (1.0 + 1e-12) {
        return Err(Error::invalid(
            "step_mm",
            format!(
                "a {:.4} mm step drives the waist below the target (total elongation {:.4} mm)",
                step / NM_PER_MM,
                total / NM_PER_MM
            ),
        ));
    }
    let mut steps = Vec::new();
    let mut x = 0.0;
    while x < total * (1.0 - 1e-12) {
        let dx = step.min(total - x);
        let l = recipe.hot_zone_at(x) / NM_PER_MM;
        steps.push(PullStep {
            elongation_mm: dx / NM_PER_MM,
            hot_zone_mm: l,
            sweep_from_mm: -l / 2.0,
            sweep_to_mm: l / 2.0,
        });
        x += dx;
    }
    Ok(steps)
}

/// Frozen transition piece: radius `start · exp(−t/decay)` for t ∈ [0, len],
/// or uniform when `decay` is None.
#[derive(Debug, Clone, Copy)]
struct Segment {
    start: f64,
    decay: Option<f64>,
    len: f64,
}

impl Segment {
    fn radius(&self, t: f64) -> f64 {
        match self.decay {
            Some(d) => self.start * (-t / d).exp(),
            None => self.start,
        }
    }

    /// ∫ r² dt over [t1, t2].
    fn r2_integral(&self, t1: f64, t2: f64) -> f64 {
        match self.decay {
            Some(d) => {
                self.start * self.start * d / 2.0 * ((-2.0 * t1 / d).exp() - (-2.0 * t2 / d).exp())
            }
            None => self.start * self.start * (t2 - t1),
        }
    }
}

/// Result of executing a pull program on a uniform fiber.
#[derive(Debug, Clone)]
pub struct PulledFiber {
    initial_radius_nm: f64,
    /// Left transition, thick end first; the right side mirrors it.
    segments: Vec<Segment>,
    pub waist_radius_nm: f64,
    pub waist_length_mm: f64,
}

impl PulledFiber {
    fn transition_len(&self) -> f64 {
        self.segments.iter().map(|s| s.len).sum()
    }

    pub fn total_length_mm(&self) -> f64 {
        (2.0 * self.transition_len()) / NM_PER_MM + self.waist_length_mm
    }

    pub fn radius_at(&self, z_mm: f64) -> f64 {
        let total = self.total_length_mm();
        if z_mm <= 0.0 || z_mm >= total {
            return self.initial_radius_nm;
        }
        let mut s = z_mm.min(total - z_mm) * NM_PER_MM;
        for seg in &self.segments {
            if s < seg.len {
                return seg.radius(s);
            }
            s -= seg.len;
        }
        self.waist_radius_nm
    }

    /// Glass volume / π in nm²·mm.
    pub fn volume(&self) -> f64 {
        let transitions: f64 = self
            .segments
            .iter()
            .map(|s| s.r2_integral(0.0, s.len))
            .sum();
        (2.0 * transitions / NM_PER_MM + self.waist_radius_nm.powi(2) * self.waist_length_mm)
            * std::f64::consts::PI
    }

    /// Largest relative radius deviation from `profile`, sampled densely.
    pub fn max_relative_deviation(&self, profile: &TaperProfile, points: usize) -> f64 {
        let total = profile.total_length_mm().max(self.total_length_mm());
        (0..=points)
            .map(|i| {
                let z = total * i as f64 / points as f64;
                let want = profile.radius_at(z);
                (self.radius_at(z) - want).abs() / want
            })
            .fold(0.0, f64::max)
    }
}

/// Executes `program` on a uniform fiber of radius `initial_radius_um`,
/// enforcing volume conservation of the hot zone at every step. Within a
/// step the hot zone is constant, so the glass leaving it is exponential;
/// when the next step changes the hot-zone length, glass is re-absorbed (and
/// re-homogenized) or frozen at the waist radius.
pub fn simulate_pull(
    initial_radius_um: f64,
    initial_hot_zone_mm: f64,
    program: &[PullStep],
) -> Result<PulledFiber> {
    let r0 = initial_radius_um * NM_PER_UM;
    let mut hot = initial_hot_zone_mm * NM_PER_MM;
    if !(r0 > 0.0 && hot > 0.0) {
        return Err(Error::invalid(
            "initial_radius_um",
            "radius and hot zone must be > 0",
        ));
    }
    let mut rw = r0;
    let mut segments: Vec<Segment> = Vec::new();
    for (i, step) in program.iter().enumerate() {
        let dx = step.elongation_mm * NM_PER_MM;
        let new_hot = step.hot_zone_mm * NM_PER_MM;
        if !(dx >= 0.0 && new_hot > 0.0) {
            return Err(Error::invalid(
                "program",
                format!("step {i} has non-physical elongation or hot zone"),
            ));
        }
        if new_hot > hot {
            // Reheat (new_hot − hot)/2 of the innermost transition glass per side.
            let mut need = (new_hot - hot) / 2.0;
            let mut volume = rw * rw * hot;
            while need > 0.0 {
                let Some(seg) = segments.last_mut() else {
                    // Nothing frozen yet: the hot zone widens into the uniform fiber.
                    volume += 2.0 * r0 * r0 * need;
                    break;
                };
                let take = need.min(seg.len);
                volume += 2.0 * seg.r2_integral(seg.len - take, seg.len);
                seg.len -= take;
                need -= take;
                if seg.len <= 0.0 {
                    segments.pop();
                }
            }
            rw = (volume / new_hot).sqrt();
        } else if new_hot < hot {
            segments.push(Segment {
                start: rw,
                decay: None,
                len: (hot - new_hot) / 2.0,
            });
        }
        hot = new_hot;
        if dx > 0.0 {
            segments.push(Segment {
                start: rw,
                decay: Some(hot),
                len: dx / 2.0,
            });
            rw *= (-dx / (2.0 * hot)).exp();
        }
    }
    Ok(PulledFiber {
        initial_radius_nm: r0,
        segments,
        waist_radius_nm: rw,
        waist_length_mm: hot / NM_PER_MM,
    })
}
