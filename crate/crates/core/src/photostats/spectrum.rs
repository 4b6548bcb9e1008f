use serde::Serialize;

use super::lm::levenberg_marquardt;
use crate::emitter::FWHM_PER_SIGMA;
use crate::error::{Error, Result};

/// Finest histogram bin used for photon wavelength samples, nm.
pub const MIN_BIN_NM: f64 = 0.01;
/// Secondary maximum, as a fraction of the fitted peak, that flags a
/// spectrum as multimodal.
pub const SECONDARY_PEAK_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumFit {
    pub center_nm: f64,
    pub fwhm_nm: f64,
    pub amplitude: f64,
    pub bin_width_nm: f64,
    /// False when the line is narrower than one bin; `fwhm_nm` is then the
    /// bin width, an upper bound.
    pub resolved: bool,
    /// A second maximum above 20 % of the peak lies outside ±1.5 FWHM.
    pub multimodal: bool,
    /// RMS residual relative to the amplitude.
    pub relative_residual: f64,
}

/// Bins photon wavelengths and fits a Gaussian. Bin width is 1/20 of the
/// sample FWHM estimate, never below `MIN_BIN_NM`.
pub fn fit_spectrum_samples(wavelengths_nm: &[f64]) -> Result<SpectrumFit> {
    if wavelengths_nm.len() < 2 {
        return Err(Error::invalid("wavelengths", "need at least 2 samples"));
    }
    if wavelengths_nm.iter().any(|w| !w.is_finite()) {
        return Err(Error::invalid("wavelengths", "non-finite sample"));
    }
    let n = wavelengths_nm.len() as f64;
    let mean = wavelengths_nm.iter().sum::<f64>() / n;
    let var = wavelengths_nm
        .iter()
        .map(|w| (w - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    let bin = (var.sqrt() * FWHM_PER_SIGMA / 20.0).max(MIN_BIN_NM);
    let lo = wavelengths_nm.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = wavelengths_nm
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let first = (lo / bin).floor() - 2.0;
    let n_bins = ((hi / bin).floor() - first) as usize + 3;
    let mut counts = vec![0.0; n_bins];
    for w in wavelengths_nm {
        counts[((w / bin).floor() - first) as usize] += 1.0;
    }
    let centers: Vec<f64> = (0..n_bins)
        .map(|i| (first + i as f64 + 0.5) * bin)
        .collect();
    fit_binned(&centers, &counts, bin)
}

/// Gaussian fit to a binned spectrum. `wavelengths_nm` are bin centres,
/// evenly spaced and increasing.
pub fn fit_spectrum(wavelengths_nm: &[f64], counts: &[f64]) -> Result<SpectrumFit> {
    if wavelengths_nm.len() != counts.len() {
        return Err(Error::invalid("counts", "length differs from wavelengths"));
    }
    if wavelengths_nm.len() < 2 {
        return Err(Error::invalid("wavelengths", "need at least 2 bins"));
    }
    if wavelengths_nm.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("wavelengths", "must be strictly increasing"));
    }
    if counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::invalid("counts", "must be finite and >= 0"));
    }
    let bin = (wavelengths_nm[wavelengths_nm.len() - 1] - wavelengths_nm[0])
        / (wavelengths_nm.len() - 1) as f64;
    fit_binned(wavelengths_nm, counts, bin)
}

fn fit_binned(wavelengths_nm: &[f64], counts: &[f64], bin: f64) -> Result<SpectrumFit> {
    let (peak_i, &peak) = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    if peak <= 0.0 {
        return Err(Error::invalid("counts", "spectrum is empty"));
    }
    let total: f64 = counts.iter().sum();
    let mean = wavelengths_nm
        .iter()
        .zip(counts)
        .map(|(w, c)| w * c)
        .sum::<f64>()
        / total;
    let var = wavelengths_nm
        .iter()
        .zip(counts)
        .map(|(w, c)| c * (w - mean).powi(2))
        .sum::<f64>()
        / total;
    let occupied = counts.iter().filter(|&&c| c > 0.0).count();
    if occupied < 3 {
        // Line narrower than the binning: report the bin as an upper bound.
        return Ok(SpectrumFit {
            center_nm: mean,
            fwhm_nm: bin,
            amplitude: peak,
            bin_width_nm: bin,
            resolved: false,
            multimodal: false,
            relative_residual: 0.0,
        });
    }

    let sigma0 = var.sqrt().max(bin);
    let out = levenberg_marquardt(
        [peak, wavelengths_nm[peak_i], sigma0],
        |p| {
            let (a, c, s) = (p[0], p[1], p[2]);
            let mut r = Vec::with_capacity(counts.len());
            let mut j = Vec::with_capacity(counts.len());
            for (&x, &y) in wavelengths_nm.iter().zip(counts) {
                let u = (x - c) / s;
                let g = (-0.5 * u * u).exp();
                r.push(a * g - y);
                j.push([g, a * g * u / s, a * g * u * u / s]);
            }
            (r, j)
        },
        "spectrum fit",
    )?;
    let [amplitude, center_nm, sigma] = out.params;
    let fwhm_nm = sigma.abs() * FWHM_PER_SIGMA;
    let relative_residual = (out.cost / counts.len() as f64).sqrt() / amplitude.abs();

    let smoothed: Vec<f64> = (0..counts.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 2).min(counts.len());
            counts[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let multimodal = wavelengths_nm.iter().zip(&smoothed).any(|(w, s)| {
        (w - center_nm).abs() > 1.5 * fwhm_nm && *s > SECONDARY_PEAK_FRACTION * amplitude
    });

    Ok(SpectrumFit {
        center_nm,
        fwhm_nm,
        amplitude,
        bin_width_nm: bin,
        resolved: fwhm_nm > bin,
        multimodal,
        relative_residual,
    })
}
