use serde::{Deserialize, Serialize};

use super::lm::levenberg_marquardt;
use crate::error::{Error, Result};

/// Repeats kept by the blinking filter.
pub const DEFAULT_KEEP: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationPoint {
    pub power_nw: f64,
    /// Intensities (counts/s) of the repeated measurements at this power.
    pub repeats: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaturationFit {
    pub i_inf: f64,
    pub p_sat: f64,
    /// RMS of the fit residuals, counts/s.
    pub residual: f64,
    /// `residual` / `i_inf`.
    pub relative_residual: f64,
    pub iterations: usize,
}

impl SaturationFit {
    pub fn intensity(&self, power_nw: f64) -> f64 {
        saturation_curve(self.i_inf, self.p_sat, power_nw)
    }
}

/// I(P) = I∞·P/(P + P_sat).
pub fn saturation_curve(i_inf: f64, p_sat: f64, power_nw: f64) -> f64 {
    i_inf * power_nw / (power_nw + p_sat)
}

/// How the repeats at one power are reduced to a single intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// Mean of the n brightest repeats (rejects blinking-off windows).
    Brightest(usize),
    /// Plain mean of all repeats.
    Mean,
}

/// Mean of the `keep` largest repeats.
pub fn blinking_filter(repeats: &[f64], keep: usize) -> Result<f64> {
    if keep == 0 {
        return Err(Error::invalid("keep", "must be >= 1"));
    }
    if repeats.len() < keep {
        return Err(Error::invalid(
            "repeats",
            format!("{} repeats, fewer than keep = {keep}", repeats.len()),
        ));
    }
    if repeats.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("repeats", "non-finite intensity"));
    }
    let mut sorted = repeats.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(sorted[..keep].iter().sum::<f64>() / keep as f64)
}

pub fn reduce(point: &SaturationPoint, how: Reduction) -> Result<f64> {
    match how {
        Reduction::Brightest(keep) => blinking_filter(&point.repeats, keep),
        Reduction::Mean => {
            if point.repeats.is_empty() {
                return Err(Error::invalid("repeats", "empty"));
            }
            Ok(point.repeats.iter().sum::<f64>() / point.repeats.len() as f64)
        }
    }
}

/// Blinking-filtered (three brightest) saturation fit.
pub fn fit_saturation(points: &[SaturationPoint]) -> Result<SaturationFit> {
    fit_saturation_with(points, Reduction::Brightest(DEFAULT_KEEP))
}

pub fn fit_saturation_with(points: &[SaturationPoint], how: Reduction) -> Result<SaturationFit> {
    let mut data = Vec::with_capacity(points.len());
    for p in points {
        if !(p.power_nw >= 0.0 && p.power_nw.is_finite()) {
            return Err(Error::invalid("power_nw", "must be >= 0"));
        }
        data.push((p.power_nw, reduce(p, how)?));
    }
    fit_saturation_curve(&data)
}

/// Least-squares fit of I∞·P/(P + P_sat) to (power, intensity) pairs with
/// each residual divided by its intensity (floored at 1% of the largest),
/// which matches noise proportional to the signal. Start: I∞ = largest
/// intensity, P_sat = the power whose intensity is nearest half of it.
pub fn fit_saturation_curve(data: &[(f64, f64)]) -> Result<SaturationFit> {
    let mut powers: Vec<f64> = data.iter().map(|d| d.0).collect();
    powers.sort_by(f64::total_cmp);
    powers.dedup();
    if powers.len() < 3 {
        return Err(Error::invalid(
            "power_nw",
            format!("{} distinct powers, need at least 3", powers.len()),
        ));
    }
    let i0 = data.iter().map(|d| d.1).fold(f64::MIN, f64::max);
    if !(i0 > 0.0) {
        return Err(Error::invalid("repeats", "no positive intensity"));
    }
    let p0 = data
        .iter()
        .filter(|d| d.0 > 0.0)
        .min_by(|a, b| (a.1 - i0 / 2.0).abs().total_cmp(&(b.1 - i0 / 2.0).abs()))
        .map(|d| d.0)
        .ok_or_else(|| Error::invalid("power_nw", "no positive power"))?;

    let floor = 0.01 * i0;
    let out = levenberg_marquardt(
        [i0, p0],
        |p| {
            let (i_inf, p_sat) = (p[0], p[1]);
            let r = data
                .iter()
                .map(|&(x, y)| (saturation_curve(i_inf, p_sat, x) - y) / y.max(floor))
                .collect();
            let j = data
                .iter()
                .map(|&(x, y)| {
                    let d = x + p_sat;
                    let s = y.max(floor);
                    [x / d / s, -i_inf * x / (d * d) / s]
                })
                .collect();
            (r, j)
        },
        "saturation fit",
    )?;
    let [i_inf, p_sat] = out.params;
    if !(i_inf > 0.0 && p_sat > 0.0) {
        return Err(Error::Numerical(format!(
            "saturation fit left the physical domain (I∞ = {i_inf}, P_sat = {p_sat})"
        )));
    }
    let residual = (data
        .iter()
        .map(|&(x, y)| (saturation_curve(i_inf, p_sat, x) - y).powi(2))
        .sum::<f64>()
        / data.len() as f64)
        .sqrt();
    Ok(SaturationFit {
        i_inf,
        p_sat,
        residual,
        relative_residual: residual / i_inf,
        iterations: out.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn filter_examples() {
        let r = [1.0, 9.0, 3.0, 7.0, 5.0, 8.0, 2.0, 6.0, 4.0, 10.0];
        assert_eq!(blinking_filter(&r, 3).unwrap(), 9.0);
        assert_eq!(blinking_filter(&[5.0; 10], 3).unwrap(), 5.0);
        assert!(blinking_filter(&[1.0, 2.0], 3).is_err());
    }

    fn noiseless(p_sat: f64, i_inf: f64) -> Vec<SaturationPoint> {
        [5.0, 10.0, 20.0, 40.0, 80.0, 160.0, 320.0, 640.0]
            .iter()
            .map(|&p| SaturationPoint {
                power_nw: p,
                repeats: vec![saturation_curve(i_inf, p_sat, p); 10],
            })
            .collect()
    }

    #[test]
    fn noiseless_recovery() {
        let fit = fit_saturation(&noiseless(80.0, 2e5)).unwrap();
        assert!((fit.p_sat - 80.0).abs() < 0.1);
        assert!((fit.intensity(fit.p_sat) - fit.i_inf / 2.0).abs() < 1e-9 * fit.i_inf);
        assert!(fit.residual < 1e-6);
    }

    #[test]
    fn degenerate_powers_rejected() {
        let pts = vec![
            SaturationPoint {
                power_nw: 50.0,
                repeats: vec![1.0; 10]
            };
            5
        ];
        assert!(fit_saturation(&pts).is_err());
    }

    #[test]
    fn filter_rejects_off_windows() {
        use crate::emitter::{
            simulate_intensity_trace, BlinkingModel, DetectionChain, EmitterModel, ExcitationModel,
        };
        let steady = EmitterModel {
            bleaching: false,
            ..Default::default()
        };
        let blinking = EmitterModel {
            blinking: BlinkingModel::two_state(0.3, 0.2),
            ..steady
        };
        let (x, c) = (ExcitationModel::default(), DetectionChain::default());
        let on_rate = simulate_intensity_trace(&steady, &x, &c, 1000.0, 2.0, 1)
            .unwrap()
            .iter()
            .sum::<u64>() as f64
            / 2.0;
        let trace: Vec<f64> = simulate_intensity_trace(&blinking, &x, &c, 100.0, 1.0, 3)
            .unwrap()
            .iter()
            .map(|&n| n as f64 * 10.0)
            .collect();
        assert_eq!(trace.len(), 10);
        let filtered = blinking_filter(&trace, 3).unwrap();
        let mean = trace.iter().sum::<f64>() / 10.0;
        assert!(
            (filtered / on_rate - 1.0).abs() < 0.05,
            "{filtered} vs {on_rate}"
        );
        assert!(mean < 0.95 * on_rate, "{mean} vs {on_rate}");
    }

    proptest! {
        #[test]
        fn filter_permutation_invariant(mut v in prop::collection::vec(0.0f64..1e6, 3..20), seed in any::<u64>()) {
            let before = blinking_filter(&v, 3).unwrap();
            let n = v.len();
            v.rotate_left((seed % n as u64) as usize);
            v.reverse();
            prop_assert_eq!(blinking_filter(&v, 3).unwrap(), before);
        }

        #[test]
        fn filter_monotone(v in prop::collection::vec(0.0f64..1e6, 3..20), i in 0usize..20, bump in 0.0f64..1e5) {
            let before = blinking_filter(&v, 3).unwrap();
            let mut w = v.clone();
            let i = i % w.len();
            w[i] += bump;
            prop_assert!(blinking_filter(&w, 3).unwrap() >= before);
        }

        #[test]
        fn model_data_is_recovered(p_sat in 10.0f64..300.0, i_inf in 1e3f64..1e6) {
            let fit = fit_saturation(&noiseless(p_sat, i_inf)).unwrap();
            prop_assert!((fit.p_sat / p_sat - 1.0).abs() < 1e-6);
            prop_assert!((fit.i_inf / i_inf - 1.0).abs() < 1e-6);
        }
    }
}
