use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::{BlinkingKind, BlinkingModel};
use crate::error::{Error, Result};

/// ∫_lo^hi t^s dt.
fn power_integral(s: f64, lo: f64, hi: f64) -> f64 {
    if (s + 1.0).abs() < 1e-12 {
        (hi / lo).ln()
    } else {
        (hi.powf(s + 1.0) - lo.powf(s + 1.0)) / (s + 1.0)
    }
}

fn powerlaw_mean(exponent: f64, lo: f64, hi: f64) -> f64 {
    power_integral(1.0 - exponent, lo, hi) / power_integral(-exponent, lo, hi)
}

/// Inverse-CDF draw from density ∝ t^(−exponent) on [lo, hi].
fn sample_powerlaw(exponent: f64, lo: f64, hi: f64, u: f64) -> f64 {
    let a = 1.0 - exponent;
    if a.abs() < 1e-12 {
        lo * (hi / lo).powf(u)
    } else {
        (lo.powf(a) + u * (hi.powf(a) - lo.powf(a))).powf(1.0 / a)
    }
}

/// Lower cutoff of a truncated power law with the given mean and cap.
pub fn powerlaw_min_dwell(mean: f64, exponent: f64, cap: f64) -> Result<f64> {
    if !(mean > 0.0 && mean < cap) {
        return Err(Error::invalid(
            "dwell_cap_s",
            "mean dwell must lie in (0, cap)",
        ));
    }
    let (mut lo, mut hi) = ((cap * 1e-15).ln(), cap.ln());
    if powerlaw_mean(exponent, lo.exp(), cap) > mean {
        return Err(Error::invalid(
            "powerlaw_exponent",
            "mean dwell unreachable with this exponent and cap",
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if powerlaw_mean(exponent, mid.exp(), cap) < mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

enum Dwell {
    Exponential(Exp<f64>),
    Powerlaw { exponent: f64, lo: f64, hi: f64 },
}

impl Dwell {
    fn new(kind: BlinkingKind, mean: f64, model: &BlinkingModel) -> Result<Self> {
        Ok(match kind {
            BlinkingKind::TwoStatePowerlaw => Dwell::Powerlaw {
                exponent: model.powerlaw_exponent,
                lo: powerlaw_min_dwell(mean, model.powerlaw_exponent, model.dwell_cap_s)?,
                hi: model.dwell_cap_s,
            },
            _ => Dwell::Exponential(Exp::new(1.0 / mean).expect("positive rate")),
        })
    }

    fn full<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Dwell::Exponential(ref e) => e.sample(rng),
            Dwell::Powerlaw { exponent, lo, hi } => sample_powerlaw(exponent, lo, hi, rng.random()),
        }
    }

    /// Remaining dwell seen from a random time in a stationary process:
    /// a length-biased dwell times a uniform fraction.
    fn residual<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Dwell::Exponential(ref e) => e.sample(rng),
            Dwell::Powerlaw { exponent, lo, hi } => {
                sample_powerlaw(exponent - 1.0, lo, hi, rng.random()) * rng.random::<f64>()
            }
        }
    }
}

/// On-intervals of the emitter in [0, end_s), starting from the stationary
/// state distribution.
pub fn on_intervals<R: Rng>(
    model: &BlinkingModel,
    end_s: f64,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    model.validate()?;
    if end_s <= 0.0 {
        return Ok(Vec::new());
    }
    if model.kind == BlinkingKind::None {
        return Ok(vec![(0.0, end_s)]);
    }
    let on = Dwell::new(model.kind, model.mean_on_s, model)?;
    let off = Dwell::new(model.kind, model.mean_off_s, model)?;
    let mut state_on = rng.random::<f64>() < model.duty_cycle();
    let mut t = 0.0;
    let mut dwell = if state_on {
        on.residual(rng)
    } else {
        off.residual(rng)
    };
    let mut out = Vec::new();
    while t < end_s {
        let stop = (t + dwell).min(end_s);
        if state_on && stop > t {
            out.push((t, stop));
        }
        t += dwell;
        state_on = !state_on;
        dwell = if state_on {
            on.full(rng)
        } else {
            off.full(rng)
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn on_time(iv: &[(f64, f64)]) -> f64 {
        iv.iter().map(|(a, b)| b - a).sum()
    }

    #[test]
    fn no_blinking_is_always_on() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let iv = on_intervals(&BlinkingModel::default(), 2.0, &mut rng).unwrap();
        assert_eq!(iv, vec![(0.0, 2.0)]);
    }

    #[test]
    fn exponential_duty_cycle() {
        // Renewal theory: duty = on/(on+off). Over T with mean cycle c the
        // on-fraction has variance ≈ 2·on²·off²/(on+off)³ / T for exponential
        // dwells; with on = off = m this is m/(4T).
        let m = 1e-3;
        let total = 200.0;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let iv = on_intervals(&BlinkingModel::two_state(m, m), total, &mut rng).unwrap();
        let duty = on_time(&iv) / total;
        let sigma = (m / (4.0 * total)).sqrt();
        assert!((duty - 0.5).abs() < 3.0 * sigma, "{duty} ± {sigma}");
        for w in iv.windows(2) {
            assert!(w[0].1 < w[1].0);
        }
    }

    #[test]
    fn powerlaw_mean_is_matched() {
        for exponent in [1.5, 2.0, 2.5] {
            let lo = powerlaw_min_dwell(0.01, exponent, 5.0).unwrap();
            assert!((powerlaw_mean(exponent, lo, 5.0) / 0.01 - 1.0).abs() < 1e-9);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let n = 200_000;
            let mean = (0..n)
                .map(|_| sample_powerlaw(exponent, lo, 5.0, rng.random()))
                .sum::<f64>()
                / n as f64;
            assert!((mean / 0.01 - 1.0).abs() < 0.1, "m = {exponent}: {mean}");
        }
    }

    #[test]
    fn powerlaw_intervals_respect_cap() {
        let model = BlinkingModel {
            kind: BlinkingKind::TwoStatePowerlaw,
            mean_on_s: 0.01,
            mean_off_s: 0.02,
            powerlaw_exponent: 1.6,
            dwell_cap_s: 1.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let iv = on_intervals(&model, 100.0, &mut rng).unwrap();
        assert!(iv.iter().all(|(a, b)| b - a <= 1.0 + 1e-12));
        let duty = on_time(&iv) / 100.0;
        assert!((duty - 1.0 / 3.0).abs() < 0.1, "{duty}");
    }
}
