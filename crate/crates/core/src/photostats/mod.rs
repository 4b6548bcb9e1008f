//! Saturation, spectrum and polarization analyses.

mod lm;
mod saturation;
mod spectrum;
mod stokes;

pub use lm::{levenberg_marquardt, LmOutcome, MAX_ITERATIONS, STEP_TOLERANCE};
pub use saturation::{
    blinking_filter, fit_saturation, fit_saturation_curve, fit_saturation_with, reduce,
    saturation_curve, Reduction, SaturationFit, SaturationPoint, DEFAULT_KEEP,
};
pub use spectrum::{
    fit_spectrum, fit_spectrum_samples, SpectrumFit, MIN_BIN_NM, SECONDARY_PEAK_FRACTION,
};
pub use stokes::{
    degree_of_polarization, stokes_from_intensities, Dop, StokesVector, UNPOLARIZED_THRESHOLD,
};
