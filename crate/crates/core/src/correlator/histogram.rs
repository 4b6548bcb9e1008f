use serde::Serialize;

use crate::error::{Error, Result};
use crate::timetag::Ps;

/// Coincidence counts between a start and a stop channel. Bin k is centred
/// on τ = k·bin_width and covers [k·w − w/2, k·w + w/2); a delay exactly on
/// an edge goes to the higher bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationHistogram {
    pub bin_width: Ps,
    /// Bin index of `bins[0]`.
    pub first_bin: i64,
    pub bins: Vec<u64>,
    /// Bins excluded from every analysis step.
    pub mask: Vec<bool>,
    pub n_start: u64,
    pub n_stop: u64,
    pub duration: Ps,
}

impl CorrelationHistogram {
    fn empty(bin_width: Ps, first_bin: i64, last_bin: i64) -> Self {
        let n = (last_bin - first_bin + 1) as usize;
        CorrelationHistogram {
            bin_width,
            first_bin,
            bins: vec![0; n],
            mask: vec![false; n],
            n_start: 0,
            n_stop: 0,
            duration: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Bin index of `bins[i]`.
    pub fn index(&self, i: usize) -> i64 {
        self.first_bin + i as i64
    }

    /// Centre delay of `bins[i]`.
    pub fn tau(&self, i: usize) -> Ps {
        self.index(i) * self.bin_width
    }

    /// Largest |τ| covered, to the outer bin centre.
    pub fn max_tau(&self) -> Ps {
        self.tau(0)
            .abs()
            .max(self.tau(self.len().saturating_sub(1)).abs())
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Bin-wise sum of two histograms over the same range.
    pub fn merge(&mut self, other: &CorrelationHistogram) {
        assert_eq!(self.first_bin, other.first_bin);
        assert_eq!(self.bins.len(), other.bins.len());
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
    }

    /// Same histogram with the channels swapped: τ → −τ.
    pub fn mirrored(&self) -> CorrelationHistogram {
        let mut bins = self.bins.clone();
        bins.reverse();
        let mut mask = self.mask.clone();
        mask.reverse();
        CorrelationHistogram {
            bin_width: self.bin_width,
            first_bin: -(self.first_bin + self.len() as i64 - 1),
            bins,
            mask,
            n_start: self.n_stop,
            n_stop: self.n_start,
            duration: self.duration,
        }
    }
}

/// Bin index of delay `d` for width `w` (exact integer arithmetic).
#[inline]
pub fn bin_index(d: Ps, w: Ps) -> i64 {
    (2 * d + w).div_euclid(2 * w)
}

fn check_sorted(times: &[Ps]) -> Result<()> {
    match times.windows(2).position(|w| w[1] < w[0]) {
        Some(i) => Err(Error::NonMonotonic { index: i + 1 }),
        None => Ok(()),
    }
}

fn check_args(bin_width: Ps, max_tau: Ps) -> Result<i64> {
    if bin_width <= 0 {
        return Err(Error::invalid("bin_width", "must be > 0"));
    }
    if max_tau < bin_width {
        return Err(Error::invalid("max_tau", "must be >= bin_width"));
    }
    Ok(max_tau / bin_width)
}

fn span(a: &[Ps], b: &[Ps]) -> Ps {
    let last = a
        .last()
        .copied()
        .unwrap_or(0)
        .max(b.last().copied().unwrap_or(0));
    let first = a
        .first()
        .copied()
        .unwrap_or(0)
        .min(b.first().copied().unwrap_or(0));
    last - first
}

/// Thread count for histogram sharding: available cores, capped by the
/// NTAG_THREADS environment variable.
pub fn thread_count() -> usize {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var("NTAG_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        Some(cap) if cap > 0 => cores.min(cap),
        _ => cores,
    }
}

/// Histogram of t_stop − t_start over bins −K..=K, K = floor(max_tau / w).
pub fn cross_correlate(
    start: &[Ps],
    stop: &[Ps],
    bin_width: Ps,
    max_tau: Ps,
) -> Result<CorrelationHistogram> {
    let k = check_args(bin_width, max_tau)?;
    cross_correlate_range(start, stop, bin_width, -k, k)
}

/// Histogram restricted to bins `first..=last`; used for the long-delay
/// normalization window without filling the delays in between.
pub fn cross_correlate_range(
    start: &[Ps],
    stop: &[Ps],
    bin_width: Ps,
    first: i64,
    last: i64,
) -> Result<CorrelationHistogram> {
    if bin_width <= 0 {
        return Err(Error::invalid("bin_width", "must be > 0"));
    }
    if last < first {
        return Err(Error::invalid("max_tau", "empty bin range"));
    }
    check_sorted(start)?;
    check_sorted(stop)?;
    let threads = thread_count().min(start.len() / 4096).max(1);
    let chunk = start.len().div_ceil(threads).max(1);
    // Single-threaded targets (wasm) cannot spawn.
    let mut hist = if threads == 1 {
        sweep(start, stop, bin_width, first, last)
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = start
                .chunks(chunk)
                .map(|part| s.spawn(move || sweep(part, stop, bin_width, first, last)))
                .collect();
            let mut total = CorrelationHistogram::empty(bin_width, first, last);
            for h in handles {
                total.merge(&h.join().expect("correlator shard panicked"));
            }
            total
        })
    };
    hist.n_start = start.len() as u64;
    hist.n_stop = stop.len() as u64;
    hist.duration = span(start, stop);
    Ok(hist)
}

/// Sliding-window sweep: for each start tag the stop tags inside the
/// delay range form a contiguous run whose left edge only moves forward.
fn sweep(start: &[Ps], stop: &[Ps], w: Ps, first: i64, last: i64) -> CorrelationHistogram {
    let mut hist = CorrelationHistogram::empty(w, first, last);
    let Some(&a0) = start.first() else {
        return hist;
    };
    let mut lo = stop.partition_point(|&b| bin_index(b - a0, w) < first);
    for &a in start {
        while lo < stop.len() && bin_index(stop[lo] - a, w) < first {
            lo += 1;
        }
        for &b in &stop[lo..] {
            let k = bin_index(b - a, w);
            if k > last {
                break;
            }
            hist.bins[(k - first) as usize] += 1;
        }
    }
    hist
}

/// O(N·M) reference: every pair is binned independently.
pub fn brute_force_correlate(
    start: &[Ps],
    stop: &[Ps],
    bin_width: Ps,
    max_tau: Ps,
) -> Result<CorrelationHistogram> {
    let k = check_args(bin_width, max_tau)?;
    let mut hist = CorrelationHistogram::empty(bin_width, -k, k);
    for &a in start {
        for &b in stop {
            let i = bin_index(b - a, bin_width);
            if (-k..=k).contains(&i) {
                hist.bins[(i + k) as usize] += 1;
            }
        }
    }
    hist.n_start = start.len() as u64;
    hist.n_stop = stop.len() as u64;
    hist.duration = span(start, stop);
    Ok(hist)
}
