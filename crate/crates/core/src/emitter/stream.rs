use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Geometric, Normal, Poisson};

use super::{on_intervals, DetectionChain, EmitterModel, ExcitationMode, ExcitationModel};
use crate::error::{Error, Result};
use crate::timetag::{merge_channels, Ps, StreamMeta, TagStream, TimeTag, PS_PER_NS, PS_PER_S};

/// Independent random streams derived from one seed, so changing e.g. the
/// dark rate leaves the signal photons untouched.
const STREAM_BLINK: u64 = 1;
const STREAM_BLEACH: u64 = 2;
const STREAM_SIGNAL: u64 = 3;
const STREAM_DARK: [u64; 2] = [4, 5];

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A simulated acquisition with the hidden state that produced it.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub stream: TagStream,
    /// When the emitter bleached, if within the acquisition.
    pub bleach_time_s: Option<f64>,
    /// Fraction of the acquisition the emitter spent on.
    pub on_fraction: f64,
    pub signal_photons: usize,
    pub dark_counts: usize,
    /// Tags removed by the router dead time.
    pub dead_time_losses: usize,
}

pub fn simulate_stream(
    emitter: &EmitterModel,
    excitation: &ExcitationModel,
    chain: &DetectionChain,
    duration_s: f64,
    seed: u64,
) -> Result<TagStream> {
    simulate(emitter, excitation, chain, duration_s, seed).map(|s| s.stream)
}

pub fn simulate(
    emitter: &EmitterModel,
    excitation: &ExcitationModel,
    chain: &DetectionChain,
    duration_s: f64,
    seed: u64,
) -> Result<Simulation> {
    emitter.validate()?;
    excitation.validate()?;
    chain.validate()?;
    if !(duration_s > 0.0 && duration_s * PS_PER_S < i64::MAX as f64 / 2.0) {
        return Err(Error::invalid(
            "duration_s",
            "must be > 0 and fit in i64 picoseconds",
        ));
    }
    let duration_ps = (duration_s * PS_PER_S).round() as Ps;

    let bleach_time_s = emitter.mean_survival_s().and_then(|mean| {
        let t = Exp::new(1.0 / mean)
            .expect("positive rate")
            .sample(&mut rng_for(seed, STREAM_BLEACH));
        (t < duration_s).then_some(t)
    });
    let lit_until = bleach_time_s.unwrap_or(duration_s);
    let intervals = on_intervals(
        &emitter.blinking,
        lit_until,
        &mut rng_for(seed, STREAM_BLINK),
    )?;
    let on_time: f64 = intervals.iter().map(|(a, b)| b - a).sum();

    let mut channels = signal_photons(emitter, excitation, chain, &intervals, duration_ps, seed);
    let signal_photons = channels[0].len() + channels[1].len();

    let mut dark_counts = 0;
    for (ch, times) in channels.iter_mut().enumerate() {
        let mean = chain.dark_rate[ch] * duration_s;
        if mean > 0.0 {
            let mut rng = rng_for(seed, STREAM_DARK[ch]);
            let n = Poisson::new(mean).expect("positive mean").sample(&mut rng) as usize;
            times.extend((0..n).map(|_| rng.random_range(0..duration_ps)));
            dark_counts += n;
        }
        times.sort_unstable();
        times.dedup();
    }
    let merged = merge_channels(&channels[0], &channels[1]);
    let before = merged.len();
    let dead_ps = (chain.router_dead_time_ns * PS_PER_NS).round() as Ps;
    let tags = apply_router_dead_time(&merged, dead_ps);
    let dead_time_losses = before - tags.len();

    let meta = StreamMeta {
        resolution_ps: 1,
        duration_ps,
        excitation: Some(*excitation),
        rng_seed: Some(seed),
    };
    Ok(Simulation {
        stream: TagStream::new(tags, meta)?,
        bleach_time_s,
        on_fraction: on_time / duration_s,
        signal_photons,
        dark_counts,
        dead_time_losses,
    })
}

/// Detected signal photons per channel (unsorted), cable delay applied.
fn signal_photons(
    emitter: &EmitterModel,
    excitation: &ExcitationModel,
    chain: &DetectionChain,
    intervals: &[(f64, f64)],
    duration_ps: Ps,
    seed: u64,
) -> [Vec<Ps>; 2] {
    let mut out: [Vec<Ps>; 2] = [Vec::new(), Vec::new()];
    let [p0, p1] = chain.channel_probabilities();
    let p_emit = emitter.quantum_yield;
    let p_det = p_emit * (p0 + p1);
    if p_det <= 0.0 {
        return out;
    }
    let to_ch0 = p0 / (p0 + p1);
    let mut rng = rng_for(seed, STREAM_SIGNAL);
    let lifetime_ps = emitter.lifetime_ns * PS_PER_NS;
    let decay = Exp::new(1.0 / lifetime_ps).expect("positive lifetime");
    let jitter = Normal::new(0.0, chain.timing_jitter_ps).expect("finite jitter");
    let delay_ps = chain.channel_delay_ns * PS_PER_NS;

    let mut push = |rng: &mut ChaCha8Rng, t: f64| {
        let ch = usize::from(rng.random::<f64>() >= to_ch0);
        let mut t = t + jitter.sample(rng);
        if ch == 1 {
            t += delay_ps;
        }
        let t = t.round();
        if t >= 0.0 && t < duration_ps as f64 {
            out[ch].push(t as Ps);
        }
    };

    match excitation.mode {
        ExcitationMode::Pulsed => {
            let p = emitter.excitation_probability(excitation.power_nw) * p_det;
            if p <= 0.0 {
                return out;
            }
            let skip = Geometric::new(p).expect("p in (0, 1]");
            let period = excitation.period_ps() as f64;
            for &(a, b) in intervals {
                let first = (a * PS_PER_S / period).ceil() as u64;
                let end = (b * PS_PER_S / period).ceil() as u64;
                let mut n = first.saturating_add(skip.sample(&mut rng));
                while n < end {
                    let t = n as f64 * period + decay.sample(&mut rng);
                    push(&mut rng, t);
                    n = n.saturating_add(1 + skip.sample(&mut rng));
                }
            }
        }
        ExcitationMode::Cw => {
            // Excitation rate (1/τ)·P/P_sat gives the cycle rate
            // 1/(1/k + τ) = (1/τ)·P/(P + P_sat).
            let k_exc = excitation.power_nw / emitter.p_sat / lifetime_ps;
            if k_exc <= 0.0 {
                return out;
            }
            let skip = Geometric::new(p_det).expect("p in (0, 1]");
            for &(a, b) in intervals {
                let (a, b) = (a * PS_PER_S, b * PS_PER_S);
                let mut t = a;
                loop {
                    // Sum of g excitation waits and g decays, g cycles until detection.
                    let g = 1.0 + skip.sample(&mut rng) as f64;
                    let wait = Gamma::new(g, 1.0 / k_exc)
                        .expect("valid shape")
                        .sample(&mut rng)
                        + Gamma::new(g, lifetime_ps)
                            .expect("valid shape")
                            .sample(&mut rng);
                    t += wait;
                    if t >= b {
                        break;
                    }
                    push(&mut rng, t);
                }
            }
        }
    }
    out
}

/// Non-paralyzable dead time on the merged stream: a tag is kept iff it
/// arrives at least `dead_time_ps` after the previously kept tag.
pub fn apply_router_dead_time(tags: &[TimeTag], dead_time_ps: Ps) -> Vec<TimeTag> {
    if dead_time_ps <= 0 {
        return tags.to_vec();
    }
    let mut out = Vec::with_capacity(tags.len());
    let mut last: Option<Ps> = None;
    for &tag in tags {
        if last.is_none_or(|l| tag.time - l >= dead_time_ps) {
            out.push(tag);
            last = Some(tag.time);
        }
    }
    out
}

/// Detected counts (both channels) per `bin_ms` bin; the last bin may be
/// partial so the counts always sum to the stream length.
pub fn simulate_intensity_trace(
    emitter: &EmitterModel,
    excitation: &ExcitationModel,
    chain: &DetectionChain,
    bin_ms: f64,
    duration_s: f64,
    seed: u64,
) -> Result<Vec<u64>> {
    if !(bin_ms > 0.0 && bin_ms.is_finite()) {
        return Err(Error::invalid("bin_ms", "must be > 0"));
    }
    if duration_s == 0.0 {
        return Ok(Vec::new());
    }
    let stream = simulate_stream(emitter, excitation, chain, duration_s, seed)?;
    let bin_ps = bin_ms * 1e9;
    let n_bins = (stream.meta().duration_ps as f64 / bin_ps).ceil() as usize;
    let mut counts = vec![0u64; n_bins];
    for tag in stream.tags() {
        let i = ((tag.time as f64 / bin_ps) as usize).min(n_bins - 1);
        counts[i] += 1;
    }
    Ok(counts)
}
