//! Nanofiber design: single-mode rules, the exact fundamental mode with its
//! evanescent-field metrics, and flame-brushed taper profiles.

mod adiabatic;
pub mod bessel;
mod guidance;
mod mode;
mod sellmeier;
mod taper;

pub use adiabatic::{
    adiabaticity_check, adiabaticity_check_samples, AdiabaticPoint, AdiabaticityReport,
    MAX_SAMPLE_RATIO,
};
pub use guidance::{
    cutoff_radius, single_mode_check, subwavelength_check, v_number, FiberSpec, SingleModeCheck,
    SubwavelengthCheck, V_CUTOFF, V_CUTOFF_DESIGN,
};
pub use mode::{
    coupling_efficiency_estimate, hybrid_roots, solve_he11, two_mode_betas, ModeFields,
    ModeSolution, INDEX_EPS,
};
pub use sellmeier::{sellmeier_silica, SILICA_RANGE_NM};
pub use taper::{
    pull_trajectory, simulate_pull, taper_profile, HotZoneMode, PullStep, PulledFiber,
    TaperProfile, TaperRecipe, DEFAULT_STEP_FRACTION, PROFILE_RATIO,
};
