//! Two-channel coincidence histograms and the g²(τ) analysis built on them.

mod analysis;
mod histogram;

pub use analysis::{
    analyze_pulsed, detect_dead_time_gap, estimate_background, excise_dead_time_region,
    integrate_peaks, normalize_cw, normalize_long_delay, verdict, ExcisedRegion, G2Result,
    LongDelayWindow, Normalization, PeakArea, PulsedAnalysis, Quality, Verdict,
    HIGH_PURITY_THRESHOLD, MIN_NORMALIZATION_PEAKS, SINGLE_PHOTON_THRESHOLD,
};
pub use histogram::{
    bin_index, brute_force_correlate, cross_correlate, cross_correlate_range, thread_count,
    CorrelationHistogram,
};
