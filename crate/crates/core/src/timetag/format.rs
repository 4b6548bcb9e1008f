//! NTAG binary and CSV encodings.
//!
//! Binary layout, all integers little-endian:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "NTAG"
//!      4     2  version (1)
//!      6     2  flags (0)
//!      8     8  record count
//!     16     8  resolution_ps
//!     24  16*n  records: i64 time_ps, u8 channel, 7 zero pad bytes
//! ```

use std::fmt::Write as _;

use super::{validate_tags, Ps, StreamMeta, TagStream, TimeTag};
use crate::error::{Error, Result};

pub const NTAG_MAGIC: [u8; 4] = *b"NTAG";
pub const NTAG_VERSION: u16 = 1;
pub const CSV_HEADER: &str = "time_ps,channel";

const HEADER_LEN: usize = 24;
const RECORD_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Binary,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" | "ntag" => Ok(Format::Binary),
            "csv" => Ok(Format::Csv),
            other => Err(Error::invalid(
                "format",
                format!("unknown format {other:?}"),
            )),
        }
    }
}

pub fn write_tags(stream: &TagStream, format: Format) -> Vec<u8> {
    encode(stream.tags(), stream.meta().resolution_ps, format)
}

/// Encodes a raw tag slice, validating it first.
pub fn encode_tags(tags: &[TimeTag], resolution_ps: u64, format: Format) -> Result<Vec<u8>> {
    validate_tags(tags)?;
    Ok(encode(tags, resolution_ps, format))
}

fn encode(tags: &[TimeTag], resolution_ps: u64, format: Format) -> Vec<u8> {
    match format {
        Format::Binary => {
            let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * tags.len());
            out.extend_from_slice(&NTAG_MAGIC);
            out.extend_from_slice(&NTAG_VERSION.to_le_bytes());
            out.extend_from_slice(&0u16.to_le_bytes());
            out.extend_from_slice(&(tags.len() as u64).to_le_bytes());
            out.extend_from_slice(&resolution_ps.to_le_bytes());
            for tag in tags {
                out.extend_from_slice(&tag.time.to_le_bytes());
                out.push(tag.channel);
                out.extend_from_slice(&[0u8; 7]);
            }
            out
        }
        Format::Csv => {
            let mut s = String::with_capacity(16 + 16 * tags.len());
            s.push_str(CSV_HEADER);
            s.push('\n');
            for tag in tags {
                let _ = writeln!(s, "{},{}", tag.time, tag.channel);
            }
            s.into_bytes()
        }
    }
}

pub fn read_tags(bytes: &[u8], format: Format) -> Result<TagStream> {
    let (tags, resolution_ps) = match format {
        Format::Binary => decode_binary(bytes)?,
        Format::Csv => (decode_csv(bytes)?, 1),
    };
    validate_tags(&tags)?;
    let duration_ps = tags.last().map_or(0, |t| t.time);
    TagStream::new(
        tags,
        StreamMeta {
            resolution_ps,
            duration_ps,
            ..Default::default()
        },
    )
}

fn decode_binary(bytes: &[u8]) -> Result<(Vec<TimeTag>, u64)> {
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != NTAG_MAGIC {
            return Err(Error::BadMagic {
                found: bytes[..4].try_into().unwrap(),
            });
        }
        return Err(Error::Framing(format!(
            "header needs {HEADER_LEN} bytes, file has {}",
            bytes.len()
        )));
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != NTAG_MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    if version != NTAG_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let resolution_ps = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let body = &bytes[HEADER_LEN..];
    if !body.len().is_multiple_of(RECORD_LEN) {
        return Err(Error::Framing(format!(
            "truncated record: {} trailing bytes",
            body.len() % RECORD_LEN
        )));
    }
    let available = (body.len() / RECORD_LEN) as u64;
    if available != count {
        return Err(Error::Framing(format!(
            "header declares {count} records, body holds {available}"
        )));
    }
    let tags = body
        .chunks_exact(RECORD_LEN)
        .map(|rec| TimeTag {
            time: i64::from_le_bytes(rec[..8].try_into().unwrap()),
            channel: rec[8],
        })
        .collect();
    Ok((tags, resolution_ps))
}

fn decode_csv(bytes: &[u8]) -> Result<Vec<TimeTag>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Csv {
        line: 0,
        reason: e.to_string(),
    })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Csv {
                line: 1,
                reason: format!("expected header {CSV_HEADER:?}, found {header:?}"),
            })
        }
        None => {
            return Err(Error::Csv {
                line: 1,
                reason: "missing header".into(),
            })
        }
    }
    let mut tags = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (t, c) = line.split_once(',').ok_or_else(|| Error::Csv {
            line: line_no,
            reason: "expected two fields".into(),
        })?;
        let time: Ps = t.trim().parse().map_err(|e| Error::Csv {
            line: line_no,
            reason: format!("time: {e}"),
        })?;
        let channel: u8 = c.trim().parse().map_err(|e| Error::Csv {
            line: line_no,
            reason: format!("channel: {e}"),
        })?;
        tags.push(TimeTag { time, channel });
    }
    Ok(tags)
}
