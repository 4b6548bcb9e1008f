//! Time-tagged photon detection events.
//!
//! A [`TagStream`] is the exchange format between the emitter simulator and
//! every analyzer. Times are integer picoseconds since stream start, which
//! keeps histogram binning exact. Streams are validated on construction and
//! never mutated afterwards.

mod format;

pub use format::{
    encode_tags, read_tags, write_tags, Format, CSV_HEADER, NTAG_MAGIC, NTAG_VERSION,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Picoseconds.
pub type Ps = i64;

pub const PS_PER_NS: f64 = 1e3;
pub const PS_PER_S: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeTag {
    pub time: Ps,
    pub channel: u8,
}

impl TimeTag {
    pub const fn new(time: Ps, channel: u8) -> Self {
        TimeTag { time, channel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcitationMode {
    Pulsed,
    Cw,
}

/// Excitation laser settings as recorded alongside a stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Excitation {
    pub mode: ExcitationMode,
    /// Pulse period in ns; ignored for cw.
    pub repetition_period_ns: f64,
    pub power_nw: f64,
    pub wavelength_nm: f64,
}

impl Default for Excitation {
    fn default() -> Self {
        Excitation {
            mode: ExcitationMode::Pulsed,
            repetition_period_ns: 200.0,
            power_nw: 80.0,
            wavelength_nm: 405.0,
        }
    }
}

impl Excitation {
    pub fn validate(&self) -> Result<()> {
        if self.mode == ExcitationMode::Pulsed
            && !(self.repetition_period_ns > 0.0 && self.repetition_period_ns.is_finite())
        {
            return Err(Error::invalid(
                "repetition_period_ns",
                "must be > 0 in pulsed mode",
            ));
        }
        if !(self.power_nw >= 0.0 && self.power_nw.is_finite()) {
            return Err(Error::invalid("power_nw", "must be >= 0"));
        }
        if !(self.wavelength_nm > 0.0) {
            return Err(Error::invalid("wavelength_nm", "must be > 0"));
        }
        Ok(())
    }

    pub fn period_ps(&self) -> Ps {
        (self.repetition_period_ns * PS_PER_NS).round() as Ps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamMeta {
    /// Instrument timing resolution, ps per tick.
    pub resolution_ps: u64,
    /// Total acquisition span in ps.
    pub duration_ps: Ps,
    pub excitation: Option<Excitation>,
    pub rng_seed: Option<u64>,
}

impl Default for StreamMeta {
    fn default() -> Self {
        StreamMeta {
            resolution_ps: 1,
            duration_ps: 0,
            excitation: None,
            rng_seed: None,
        }
    }
}

/// A validated, time-ordered sequence of tags.
#[derive(Debug, Clone, PartialEq)]
pub struct TagStream {
    tags: Vec<TimeTag>,
    meta: StreamMeta,
}

impl TagStream {
    /// Validates ordering and channel range. Input is never re-sorted.
    pub fn new(tags: Vec<TimeTag>, meta: StreamMeta) -> Result<Self> {
        validate_tags(&tags)?;
        if meta.resolution_ps == 0 {
            return Err(Error::invalid("resolution_ps", "must be > 0"));
        }
        if let Some(last) = tags.last() {
            if meta.duration_ps < last.time {
                return Err(Error::invalid(
                    "duration_ps",
                    format!("{} is before last tag at {}", meta.duration_ps, last.time),
                ));
            }
        }
        Ok(TagStream { tags, meta })
    }

    pub fn tags(&self) -> &[TimeTag] {
        &self.tags
    }

    pub fn meta(&self) -> &StreamMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn into_parts(self) -> (Vec<TimeTag>, StreamMeta) {
        (self.tags, self.meta)
    }
}

/// Checks the stream invariants: times non-negative and non-decreasing,
/// strictly increasing within a channel, channel in {0, 1}.
pub fn validate_tags(tags: &[TimeTag]) -> Result<()> {
    let mut last_any = Ps::MIN;
    let mut last_in_channel = [Ps::MIN; 2];
    for (index, tag) in tags.iter().enumerate() {
        if tag.time < 0 {
            return Err(Error::NegativeTime {
                index,
                time: tag.time,
            });
        }
        if tag.channel > 1 {
            return Err(Error::BadChannel {
                index,
                channel: tag.channel,
            });
        }
        let ch = tag.channel as usize;
        if tag.time < last_any || tag.time <= last_in_channel[ch] {
            return Err(Error::NonMonotonic { index });
        }
        last_any = tag.time;
        last_in_channel[ch] = tag.time;
    }
    Ok(())
}

/// Splits a two-channel stream into per-channel time sequences.
pub fn split_channels(stream: &TagStream) -> (Vec<Ps>, Vec<Ps>) {
    split_tags(stream.tags()).expect("validated stream has channels in {0, 1}")
}

/// Same as [`split_channels`] for a raw tag slice; rejects channels above 1.
pub fn split_tags(tags: &[TimeTag]) -> Result<(Vec<Ps>, Vec<Ps>)> {
    let mut ch0 = Vec::with_capacity(tags.len() / 2 + 1);
    let mut ch1 = Vec::with_capacity(tags.len() / 2 + 1);
    for (index, tag) in tags.iter().enumerate() {
        match tag.channel {
            0 => ch0.push(tag.time),
            1 => ch1.push(tag.time),
            channel => return Err(Error::BadChannel { index, channel }),
        }
    }
    Ok((ch0, ch1))
}

/// Merges two sorted per-channel time lists into one ordered stream.
/// Equal times order channel 0 first.
pub fn merge_channels(ch0: &[Ps], ch1: &[Ps]) -> Vec<TimeTag> {
    let mut out = Vec::with_capacity(ch0.len() + ch1.len());
    let (mut i, mut j) = (0, 0);
    while i < ch0.len() || j < ch1.len() {
        let take0 = j >= ch1.len() || (i < ch0.len() && ch0[i] <= ch1[j]);
        if take0 {
            out.push(TimeTag::new(ch0[i], 0));
            i += 1;
        } else {
            out.push(TimeTag::new(ch1[j], 1));
            j += 1;
        }
    }
    out
}
