// Validation is written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlator;
pub mod emitter;
pub mod error;
pub mod fiber;
pub mod photostats;
pub mod plot;
pub mod repro;
pub mod scenario;
pub mod timetag;

pub use error::{Error, ErrorKind, Result};
