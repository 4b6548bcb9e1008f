use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::{simulate_intensity_trace, DetectionChain, EmitterModel, ExcitationModel};
use crate::error::{Error, Result};
use crate::photostats::SaturationPoint;

/// 2·√(2 ln 2): FWHM of a Gaussian in units of σ.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

/// Photon wavelengths (nm) drawn from the emitter's Gaussian line.
pub fn simulate_spectrum(emitter: &EmitterModel, n_photons: usize, seed: u64) -> Result<Vec<f64>> {
    emitter.validate()?;
    if n_photons == 0 {
        return Err(Error::invalid("n_photons", "must be > 0"));
    }
    let center = emitter.emission_center_nm;
    let sigma = emitter.emission_fwhm_nm / FWHM_PER_SIGMA;
    if sigma == 0.0 {
        return Ok(vec![center; n_photons]);
    }
    let line = Normal::new(center, sigma).expect("finite sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_photons).map(|_| line.sample(&mut rng)).collect())
}

/// Saturation measurement: at each power, `repeats` windows of `window_ms`
/// from one intensity trace, converted to counts/s and multiplied by
/// independent N(1, `noise`) factors.
#[allow(clippy::too_many_arguments)]
pub fn simulate_saturation_data(
    emitter: &EmitterModel,
    excitation: &ExcitationModel,
    chain: &DetectionChain,
    powers_nw: &[f64],
    repeats: usize,
    window_ms: f64,
    noise: f64,
    seed: u64,
) -> Result<Vec<SaturationPoint>> {
    if repeats == 0 {
        return Err(Error::invalid("repeats", "must be > 0"));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::invalid("noise", "must be >= 0"));
    }
    let factor = Normal::new(1.0, noise).expect("finite noise");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7);
    let duration_s = repeats as f64 * window_ms * 1e-3;
    powers_nw
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let x = ExcitationModel {
                power_nw: p,
                ..*excitation
            };
            let trace = simulate_intensity_trace(
                emitter,
                &x,
                chain,
                window_ms,
                duration_s,
                seed.wrapping_add(i as u64 + 1),
            )?;
            let repeats = trace
                .iter()
                .take(repeats)
                .map(|&n| n as f64 / (window_ms * 1e-3) * factor.sample(&mut rng))
                .collect();
            Ok(SaturationPoint {
                power_nw: p,
                repeats,
            })
        })
        .collect()
}

/// Counts behind analyzers H, V, D, A, R, L for a partially linearly
/// polarized source. `counts_per_setting` is the mean count an unpolarized
/// source would give in each setting.
pub fn simulate_polarimetry(
    emitter: &EmitterModel,
    counts_per_setting: f64,
    seed: u64,
) -> Result<[f64; 6]> {
    emitter.validate()?;
    if !(counts_per_setting > 0.0 && counts_per_setting.is_finite()) {
        return Err(Error::invalid("counts_per_setting", "must be > 0"));
    }
    let p = emitter.polarization.dop;
    let two_theta = 2.0 * emitter.polarization.axis_deg.to_radians();
    let (s1, s2) = (p * two_theta.cos(), p * two_theta.sin());
    let projections = [s1, -s1, s2, -s2, 0.0, 0.0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = [0.0; 6];
    for (o, proj) in out.iter_mut().zip(projections) {
        let mean = counts_per_setting * (1.0 + proj);
        *o = if mean > 0.0 {
            Poisson::new(mean).expect("positive mean").sample(&mut rng)
        } else {
            0.0
        };
    }
    Ok(out)
}
