//! Local adiabaticity of a taper transition.
//!
//! At each profile segment the taper angle |dr/dz| is compared with
//! r·(β1 − β2)/(2π): the angle at which the local beat length between the
//! fundamental mode and its nearest coupling partner equals the length scale
//! of the radius change.

use std::collections::HashMap;

use serde::Serialize;

use super::guidance::FiberSpec;
use super::mode::two_mode_betas;
use super::taper::TaperProfile;
use crate::error::{Error, Result};

/// Adjacent samples further apart than this in radius are too coarse.
pub const MAX_SAMPLE_RATIO: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdiabaticPoint {
    pub z_mm: f64,
    pub r_nm: f64,
    pub angle: f64,
    pub criterion: f64,
    /// criterion / angle; above 1 is adiabatic.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdiabaticityReport {
    pub ok: bool,
    pub worst_margin: f64,
    pub worst_z_mm: f64,
    pub points: Vec<AdiabaticPoint>,
}

impl AdiabaticityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z_mm,r_nm,angle,criterion,margin\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{:e},{:e},{:e}\n",
                p.z_mm, p.r_nm, p.angle, p.criterion, p.margin
            ));
        }
        out
    }
}

/// Checks an arbitrary (z mm, r nm) profile. Segments with equal radii are
/// skipped (zero angle); a radius jump with dz = 0 has infinite angle.
pub fn adiabaticity_check_samples(
    samples: &[(f64, f64)],
    wavelength_nm: f64,
    n1: f64,
    n2: f64,
) -> Result<AdiabaticityReport> {
    FiberSpec::new(1.0, n1, n2, wavelength_nm)?;
    if samples.len() < 2 {
        return Err(Error::invalid("profile", "needs at least two samples"));
    }
    for (i, w) in samples.windows(2).enumerate() {
        let (z0, r0) = w[0];
        let (z1, r1) = w[1];
        if !(r0 > 0.0 && r1 > 0.0) || !(z1 >= z0) {
            return Err(Error::invalid(
                "profile",
                format!(
                    "sample {} is not a valid (increasing z, positive r) point",
                    i + 1
                ),
            ));
        }
        if z1 > z0 && r0.max(r1) / r0.min(r1) > MAX_SAMPLE_RATIO {
            return Err(Error::invalid(
                "profile",
                format!(
                    "too coarsely sampled at z = {z0} mm: adjacent radius ratio {:.4} > {MAX_SAMPLE_RATIO}",
                    r0.max(r1) / r0.min(r1)
                ),
            ));
        }
    }

    let midpoint = |r0: f64, r1: f64| (r0.max(r1) * r0.min(r1)).sqrt();
    let mut radii: Vec<f64> = samples
        .windows(2)
        .filter(|w| w[0].1 != w[1].1 && w[1].0 > w[0].0)
        .map(|w| midpoint(w[0].1, w[1].1))
        .collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let criteria = criteria_parallel(&radii, wavelength_nm, n1, n2)?;

    let mut points = Vec::new();
    for w in samples.windows(2) {
        let (z0, r0) = w[0];
        let (z1, r1) = w[1];
        if r0 == r1 {
            continue;
        }
        let dz = (z1 - z0) * 1e6;
        let r = midpoint(r0, r1);
        let z_mm = 0.5 * (z0 + z1);
        if dz == 0.0 {
            points.push(AdiabaticPoint {
                z_mm,
                r_nm: r,
                angle: f64::INFINITY,
                criterion: f64::NAN,
                margin: 0.0,
            });
            continue;
        }
        let angle = (r1 - r0).abs() / dz;
        let criterion = criteria[&r.to_bits()];
        points.push(AdiabaticPoint {
            z_mm,
            r_nm: r,
            angle,
            criterion,
            margin: criterion / angle,
        });
    }
    let (worst_margin, worst_z_mm) =
        points
            .iter()
            .map(|p| (p.margin, p.z_mm))
            .fold(
                (f64::INFINITY, f64::NAN),
                |acc, x| if x.0 < acc.0 { x } else { acc },
            );
    Ok(AdiabaticityReport {
        ok: worst_margin > 1.0,
        worst_margin,
        worst_z_mm,
        points,
    })
}

pub fn adiabaticity_check(
    profile: &TaperProfile,
    wavelength_nm: f64,
    n1: f64,
    n2: f64,
) -> Result<AdiabaticityReport> {
    adiabaticity_check_samples(&profile.samples, wavelength_nm, n1, n2)
}

/// r·(β1 − β2)/(2π) for each radius, split across threads.
fn criteria_parallel(
    radii: &[f64],
    wavelength_nm: f64,
    n1: f64,
    n2: f64,
) -> Result<HashMap<u64, f64>> {
    let eval = |r: f64| -> Result<(u64, f64)> {
        let spec = FiberSpec::new(r, n1, n2, wavelength_nm)?;
        let (b1, b2) = two_mode_betas(&spec)?;
        Ok((r.to_bits(), r * (b1 - b2) / (2.0 * std::f64::consts::PI)))
    };
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    if threads == 1 {
        return radii.iter().map(|&r| eval(r)).collect();
    }
    let chunk = radii.len().div_ceil(threads).max(1);
    let parts: Vec<Result<Vec<(u64, f64)>>> = std::thread::scope(|s| {
        let handles: Vec<_> = radii
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(|&r| eval(r)).collect::<Result<Vec<_>>>()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("criterion worker panicked"))
            .collect()
    });
    let mut map = HashMap::with_capacity(radii.len());
    for part in parts {
        map.extend(part?);
    }
    Ok(map)
}
