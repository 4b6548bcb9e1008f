use crate::error::{Error, Result};

/// Three-term Sellmeier coefficients for fused silica (Malitson 1965),
/// wavelengths in µm.
const B: [f64; 3] = [0.696_166_3, 0.407_942_6, 0.897_479_4];
const C: [f64; 3] = [0.068_404_3, 0.116_241_4, 9.896_161];

pub const SILICA_RANGE_NM: (f64, f64) = (210.0, 3700.0);

/// Refractive index of fused silica at `wavelength_nm`.
pub fn sellmeier_silica(wavelength_nm: f64) -> Result<f64> {
    let (lo, hi) = SILICA_RANGE_NM;
    if !(lo..=hi).contains(&wavelength_nm) {
        return Err(Error::invalid(
            "wavelength_nm",
            format!("{wavelength_nm} nm outside silica Sellmeier range {lo}-{hi} nm"),
        ));
    }
    let l2 = (wavelength_nm * 1e-3).powi(2);
    let n2 = 1.0
        + B.iter()
            .zip(C.iter())
            .map(|(b, c)| b * l2 / (l2 - c * c))
            .sum::<f64>();
    Ok(n2.sqrt())
}
