//! Pulsed g²(τ) correction pipeline: dead-time excision, inter-peak
//! background, peak integration, long-delay normalization, verdict.
//!
//! Peaks sit at zero_delay + k·T. Background is subtracted before
//! normalization; masked bins never enter any sum.

use serde::{Deserialize, Serialize};

use super::histogram::{bin_index, cross_correlate_range, CorrelationHistogram};
use crate::error::{Error, Result};
use crate::timetag::{Ps, PS_PER_NS};

/// Below this g²(0) the source counts as a single-photon emitter.
pub const SINGLE_PHOTON_THRESHOLD: f64 = 0.5;
pub const HIGH_PURITY_THRESHOLD: f64 = 0.1;
/// Fewest peaks accepted in the long-delay normalization window.
pub const MIN_NORMALIZATION_PEAKS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    SinglePhoton,
    NotSinglePhoton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quality {
    HighPurity,
    Standard,
}

/// Strict thresholds: g²(0) = 0.5 is not single-photon.
pub fn verdict(g2_zero: f64) -> (Verdict, Quality) {
    let v = if g2_zero < SINGLE_PHOTON_THRESHOLD {
        Verdict::SinglePhoton
    } else {
        Verdict::NotSinglePhoton
    };
    let q = if g2_zero < HIGH_PURITY_THRESHOLD {
        Quality::HighPurity
    } else {
        Quality::Standard
    };
    (v, q)
}

/// Delays removed because the router could not register them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcisedRegion {
    pub from_ps: Ps,
    pub to_ps: Ps,
    pub bins: usize,
}

/// Masks every bin with |τ| < dead_time. Returns the region only when
/// something was masked.
pub fn excise_dead_time_region(
    hist: &CorrelationHistogram,
    dead_time_ps: Ps,
) -> (CorrelationHistogram, Option<ExcisedRegion>) {
    let mut out = hist.clone();
    let mut n = 0;
    if dead_time_ps > 0 {
        for i in 0..out.len() {
            if out.tau(i).abs() < dead_time_ps {
                n += usize::from(!out.mask[i]);
                out.mask[i] = true;
            }
        }
    }
    let region = (n > 0).then_some(ExcisedRegion {
        from_ps: -dead_time_ps,
        to_ps: dead_time_ps,
        bins: n,
    });
    (out, region)
}

/// Finds an empty band of bins symmetric about τ = 0 that is too wide to
/// be a counting fluctuation; returns its half-width.
pub fn detect_dead_time_gap(hist: &CorrelationHistogram) -> Option<Ps> {
    let zero = usize::try_from(-hist.first_bin)
        .ok()
        .filter(|&i| i < hist.len())?;
    if hist.bins[zero] != 0 {
        return None;
    }
    let mut m = 1;
    while zero >= m && zero + m < hist.len() && hist.bins[zero - m] == 0 && hist.bins[zero + m] == 0
    {
        m += 1;
    }
    let gap_bins = 2 * m - 1;
    let outside = hist.len().checked_sub(gap_bins).filter(|&n| n > 0)?;
    let mean = hist.total() as f64 / outside as f64;
    (m >= 2 && mean * gap_bins as f64 > 20.0).then_some(m as Ps * hist.bin_width)
}

/// Mean count per unmasked bin in the central half of each inter-peak gap.
pub fn estimate_background(
    hist: &CorrelationHistogram,
    period_ps: Ps,
    zero_delay_ps: Ps,
) -> Result<f64> {
    if period_ps <= 0 {
        return Err(Error::invalid("repetition_period_ns", "must be > 0"));
    }
    let (lo, hi) = (period_ps / 4, 3 * period_ps / 4);
    let mut sum = 0u64;
    let mut n = 0usize;
    for i in 0..hist.len() {
        if hist.mask[i] {
            continue;
        }
        let rel = (hist.tau(i) - zero_delay_ps).rem_euclid(period_ps);
        if rel >= lo && rel <= hi {
            sum += hist.bins[i];
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Numerical(
            "no unmasked inter-peak bins for background".into(),
        ));
    }
    Ok(sum as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakArea {
    pub k: i64,
    /// Peak centre in raw histogram delay.
    pub center_ps: Ps,
    /// Background-subtracted counts.
    pub area: f64,
    pub raw: u64,
    pub bins: usize,
    /// False when any bin in the window was masked.
    pub complete: bool,
    /// Counting error of `area`.
    pub sigma: f64,
}

/// Integrates ±window/2 around every peak whose window lies inside the
/// histogram.
pub fn integrate_peaks(
    hist: &CorrelationHistogram,
    period_ps: Ps,
    zero_delay_ps: Ps,
    window_ps: Ps,
    background: f64,
) -> Result<Vec<PeakArea>> {
    if period_ps <= 0 {
        return Err(Error::invalid("repetition_period_ns", "must be > 0"));
    }
    if window_ps <= 0 || window_ps > period_ps {
        return Err(Error::invalid(
            "peak_window_ns",
            "must be positive and no larger than the repetition period",
        ));
    }
    if hist.is_empty() {
        return Ok(Vec::new());
    }
    let w = hist.bin_width;
    let lo_edge = hist.tau(0) - w / 2;
    let hi_edge = hist.tau(hist.len() - 1) + w / 2;
    let half = window_ps / 2;
    let k_lo = (lo_edge + half - zero_delay_ps).div_euclid(period_ps)
        + i64::from((lo_edge + half - zero_delay_ps).rem_euclid(period_ps) != 0);
    let k_hi = (hi_edge - half - zero_delay_ps).div_euclid(period_ps);
    let mut peaks = Vec::new();
    for k in k_lo..=k_hi {
        let c = zero_delay_ps + k * period_ps;
        // Bins whose centre lies in [c − half, c + half).
        let first = (c - half).div_euclid(w) + i64::from((c - half).rem_euclid(w) != 0);
        let last = (c + half).div_euclid(w) - i64::from((c + half).rem_euclid(w) == 0);
        let mut raw = 0;
        let mut bins = 0;
        let mut complete = true;
        for idx in first.max(hist.first_bin)..=last.min(hist.index(hist.len() - 1)) {
            let i = (idx - hist.first_bin) as usize;
            if hist.mask[i] {
                complete = false;
            } else {
                raw += hist.bins[i];
                bins += 1;
            }
        }
        peaks.push(PeakArea {
            k,
            center_ps: c,
            area: raw as f64 - bins as f64 * background,
            raw,
            bins,
            complete,
            sigma: (raw as f64).sqrt(),
        });
    }
    Ok(peaks)
}

/// Range of |k·T| (relative to the zero-delay peak) used for normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongDelayWindow {
    pub from_ns: f64,
    pub to_ns: f64,
}

impl Default for LongDelayWindow {
    /// Peaks around 10 ms delay.
    fn default() -> Self {
        LongDelayWindow {
            from_ns: 9_990_000.0,
            to_ns: 10_010_000.0,
        }
    }
}

impl LongDelayWindow {
    pub fn validate(&self) -> Result<()> {
        if !(self.from_ns >= 0.0 && self.to_ns > self.from_ns && self.to_ns.is_finite()) {
            return Err(Error::invalid(
                "long_delay_window",
                "needs 0 <= from_ns < to_ns",
            ));
        }
        Ok(())
    }

    fn contains(&self, delay_ps: Ps) -> bool {
        let d = delay_ps.abs() as f64 / PS_PER_NS;
        d >= self.from_ns && d <= self.to_ns
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Normalization {
    /// Mean area of the complete peaks inside the window.
    pub factor: f64,
    pub peaks_used: usize,
    /// (k, area / factor) for every input peak.
    pub normalized: Vec<(i64, f64)>,
    pub g2_zero: f64,
}

/// Divides every peak area by the mean area of the complete peaks whose
/// |k·T| lies in `window`. g2_zero is clamped at 0.
pub fn normalize_long_delay(
    peaks: &[PeakArea],
    period_ps: Ps,
    window: &LongDelayWindow,
) -> Result<Normalization> {
    window.validate()?;
    let in_window: Vec<f64> = peaks
        .iter()
        .filter(|p| p.complete && window.contains(p.k * period_ps))
        .map(|p| p.area)
        .collect();
    if in_window.is_empty() {
        return Err(Error::invalid(
            "long_delay_window",
            "contains no complete peaks",
        ));
    }
    if in_window.len() < MIN_NORMALIZATION_PEAKS {
        return Err(Error::invalid(
            "long_delay_window",
            format!(
                "contains {} complete peaks, need at least {MIN_NORMALIZATION_PEAKS}",
                in_window.len()
            ),
        ));
    }
    let factor = in_window.iter().sum::<f64>() / in_window.len() as f64;
    if !(factor > 0.0) {
        return Err(Error::Numerical(format!(
            "non-positive normalization factor {factor}"
        )));
    }
    let zero = peaks
        .iter()
        .find(|p| p.k == 0)
        .ok_or_else(|| Error::Numerical("zero-delay peak outside the histogram".into()))?;
    if !zero.complete {
        return Err(Error::Numerical(
            "zero-delay peak overlaps the excised dead-time region".into(),
        ));
    }
    Ok(Normalization {
        factor,
        peaks_used: in_window.len(),
        normalized: peaks.iter().map(|p| (p.k, p.area / factor)).collect(),
        g2_zero: (zero.area / factor).max(0.0),
    })
}

/// Settings for [`analyze_pulsed`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulsedAnalysis {
    pub bin_width_ps: Ps,
    pub repetition_period_ns: f64,
    /// Raw delay of the zero-delay peak (the channel-1 cable delay).
    pub zero_delay_ns: f64,
    /// Full integration window; defaults to min(T/2, 10·lifetime).
    pub peak_window_ns: Option<f64>,
    pub lifetime_ns: Option<f64>,
    /// Router dead time to excise; None detects the gap from the data.
    pub dead_time_ns: Option<f64>,
    /// Side peaks kept on each side of zero in the central histogram.
    pub side_peaks: i64,
    pub long_delay: LongDelayWindow,
}

impl Default for PulsedAnalysis {
    fn default() -> Self {
        PulsedAnalysis {
            bin_width_ps: 512,
            repetition_period_ns: 200.0,
            zero_delay_ns: 0.0,
            peak_window_ns: None,
            lifetime_ns: None,
            dead_time_ns: None,
            side_peaks: 10,
            long_delay: LongDelayWindow::default(),
        }
    }
}

impl PulsedAnalysis {
    pub fn validate(&self) -> Result<()> {
        if self.bin_width_ps <= 0 {
            return Err(Error::invalid("bin_width_ps", "must be > 0"));
        }
        if !(self.repetition_period_ns > 0.0 && self.repetition_period_ns.is_finite()) {
            return Err(Error::invalid("repetition_period_ns", "must be > 0"));
        }
        if !(self.zero_delay_ns >= 0.0 && self.zero_delay_ns.is_finite()) {
            return Err(Error::invalid("zero_delay_ns", "must be >= 0"));
        }
        if self.side_peaks < 1 {
            return Err(Error::invalid("side_peaks", "must be >= 1"));
        }
        if let Some(l) = self.lifetime_ns {
            if !(l > 0.0) {
                return Err(Error::invalid("lifetime_ns", "must be > 0"));
            }
        }
        if let Some(d) = self.dead_time_ns {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::invalid("dead_time_ns", "must be >= 0"));
            }
        }
        self.long_delay.validate()
    }

    pub fn period_ps(&self) -> Ps {
        (self.repetition_period_ns * PS_PER_NS).round() as Ps
    }

    pub fn zero_delay_ps(&self) -> Ps {
        (self.zero_delay_ns * PS_PER_NS).round() as Ps
    }

    /// Integration window actually used, ps.
    pub fn window_ps(&self) -> Ps {
        let t = self.repetition_period_ns;
        let ns = self.peak_window_ns.unwrap_or_else(|| {
            self.lifetime_ns
                .map_or(t / 2.0, |l| (t / 2.0).min(10.0 * l))
        });
        (ns * PS_PER_NS).round() as Ps
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct G2Result {
    /// Central histogram with the dead-time mask applied.
    #[serde(skip)]
    pub histogram: CorrelationHistogram,
    /// Per-bin g² scaled so long-delay peak maxima sit at 1; NaN if masked.
    #[serde(skip)]
    pub normalized: Vec<f64>,
    pub background: f64,
    pub background_long: f64,
    pub normalization_factor: f64,
    pub normalization_peaks: usize,
    pub peak_areas: Vec<PeakArea>,
    pub normalized_peaks: Vec<(i64, f64)>,
    pub g2_zero: f64,
    pub g2_zero_sigma: f64,
    pub excised_region: Option<ExcisedRegion>,
    pub verdict: Verdict,
    pub quality: Quality,
    pub window_ps: Ps,
    pub long_delay: LongDelayWindow,
    pub zero_delay_ps: Ps,
    pub repetition_period_ps: Ps,
}

impl G2Result {
    /// Normalized area of peak k and its counting error.
    pub fn peak(&self, k: i64) -> Option<(f64, f64)> {
        let p = self.peak_areas.iter().find(|p| p.k == k)?;
        p.complete.then(|| {
            (
                p.area / self.normalization_factor,
                p.sigma / self.normalization_factor,
            )
        })
    }
}

/// Full pulsed pipeline from two sorted channel time lists.
pub fn analyze_pulsed(start: &[Ps], stop: &[Ps], cfg: &PulsedAnalysis) -> Result<G2Result> {
    cfg.validate()?;
    let w = cfg.bin_width_ps;
    let t = cfg.period_ps();
    let z = cfg.zero_delay_ps();
    let window = cfg.window_ps();
    let reach = (2 * cfg.side_peaks + 1) * t / 2;
    let central = cross_correlate_range(
        start,
        stop,
        w,
        bin_index(z - reach, w),
        bin_index(z + reach, w),
    )?;

    let dead_ps = match cfg.dead_time_ns {
        Some(ns) => (ns * PS_PER_NS).round() as Ps,
        None => detect_dead_time_gap(&central).unwrap_or(0),
    };
    let (central, excised_region) = excise_dead_time_region(&central, dead_ps);
    let background = estimate_background(&central, t, z)?;
    let mut peaks = integrate_peaks(&central, t, z, window, background)?;

    // Long-delay peaks on both sides, from their own narrow histograms.
    let from = (cfg.long_delay.from_ns * PS_PER_NS).round() as Ps;
    let to = (cfg.long_delay.to_ns * PS_PER_NS).round() as Ps;
    let mut long_peaks = Vec::new();
    let mut long_bg = Vec::new();
    let mut long_hists = Vec::new();
    for (lo, hi) in [
        (z + from - t / 2, z + to + t / 2),
        (z - to - t / 2, z - from + t / 2),
    ] {
        let h = cross_correlate_range(start, stop, w, bin_index(lo, w), bin_index(hi, w))?;
        let (h, _) = excise_dead_time_region(&h, dead_ps);
        let bg = estimate_background(&h, t, z)?;
        long_peaks.extend(
            integrate_peaks(&h, t, z, window, bg)?
                .into_iter()
                .filter(|p| !peaks.iter().any(|q| q.k == p.k)),
        );
        long_bg.push(bg);
        long_hists.push((h, bg));
    }
    let background_long = long_bg.iter().sum::<f64>() / long_bg.len() as f64;
    peaks.extend(long_peaks);
    peaks.sort_by_key(|p| p.k);

    let norm = normalize_long_delay(&peaks, t, &cfg.long_delay)?;
    let zero_peak = peaks
        .iter()
        .find(|p| p.k == 0)
        .expect("checked by normalization");
    let n_zero = zero_peak.bins as f64;
    let n_bg = bg_bins(&central, t, z).max(1) as f64;
    let g2_zero_sigma =
        (zero_peak.raw as f64 + n_zero * n_zero * background / n_bg).sqrt() / norm.factor;
    let (verdict, quality) = verdict(norm.g2_zero);

    let height = long_peak_height(&long_hists, &peaks, t, window, &cfg.long_delay)
        .filter(|&h| h > 0.0)
        .unwrap_or(norm.factor / (window as f64 / w as f64).max(1.0));
    let normalized = (0..central.len())
        .map(|i| {
            if central.mask[i] {
                f64::NAN
            } else {
                (central.bins[i] as f64 - background) / height
            }
        })
        .collect();

    Ok(G2Result {
        histogram: central,
        normalized,
        background,
        background_long,
        normalization_factor: norm.factor,
        normalization_peaks: norm.peaks_used,
        peak_areas: peaks,
        normalized_peaks: norm.normalized,
        g2_zero: norm.g2_zero,
        g2_zero_sigma,
        excised_region,
        verdict,
        quality,
        window_ps: window,
        long_delay: cfg.long_delay,
        zero_delay_ps: z,
        repetition_period_ps: t,
    })
}

fn bg_bins(hist: &CorrelationHistogram, t: Ps, z: Ps) -> usize {
    (0..hist.len())
        .filter(|&i| {
            let rel = (hist.tau(i) - z).rem_euclid(t);
            !hist.mask[i] && rel >= t / 4 && rel <= 3 * t / 4
        })
        .count()
}

/// Maximum of the mean background-subtracted peak profile over the
/// long-delay peaks, the per-bin scale at which g² = 1.
fn long_peak_height(
    hists: &[(CorrelationHistogram, f64)],
    peaks: &[PeakArea],
    t: Ps,
    window: Ps,
    long: &LongDelayWindow,
) -> Option<f64> {
    let w = hists.first()?.0.bin_width;
    let half = window / 2 / w;
    let mut profile = vec![0.0; (2 * half + 1) as usize];
    let mut n = 0usize;
    for p in peaks
        .iter()
        .filter(|p| p.complete && long.contains(p.k * t))
    {
        let centre = bin_index(p.center_ps, w);
        for (h, bg) in hists {
            let last = h.index(h.len() - 1);
            if centre - half < h.first_bin || centre + half > last {
                continue;
            }
            let i0 = (centre - half - h.first_bin) as usize;
            let span = i0..i0 + profile.len();
            if span.clone().any(|j| h.mask[j]) {
                continue;
            }
            for (acc, j) in profile.iter_mut().zip(span) {
                *acc += h.bins[j] as f64 - bg;
            }
            n += 1;
        }
    }
    (n > 0).then(|| profile.iter().fold(f64::MIN, |m, &v| m.max(v)) / n as f64)
}

/// Per-bin CW normalization g²(τ) = C(τ)·T² / (N₁N₂·Δ·(T − |τ|)), which
/// reduces to C·T/(N₁N₂Δ) for |τ| ≪ T. Masked bins are NaN.
pub fn normalize_cw(hist: &CorrelationHistogram, duration_ps: Ps) -> Result<Vec<f64>> {
    if duration_ps <= 0 {
        return Err(Error::invalid("duration", "must be > 0"));
    }
    if hist.n_start == 0 || hist.n_stop == 0 {
        return Err(Error::Numerical("empty channel, g² undefined".into()));
    }
    let t = duration_ps as f64;
    let scale = hist.n_start as f64 * hist.n_stop as f64 * hist.bin_width as f64 / (t * t);
    Ok((0..hist.len())
        .map(|i| {
            let overlap = t - hist.tau(i).abs() as f64;
            if hist.mask[i] || overlap <= 0.0 {
                f64::NAN
            } else {
                hist.bins[i] as f64 / (scale * overlap)
            }
        })
        .collect())
}
