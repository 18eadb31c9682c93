//! Command-line front end for the `smalldev` library.
//!
//! Each command reads a [`config::RunConfig`], runs the relevant part of the
//! pipeline and writes its artifacts under the output directory:
//!
//! ```text
//! constants.json  spectrum_N*.csv  spectrum_fits.json
//! smallball.csv   report.json      plots/*.dat
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod render;

pub use config::{Overrides, RatioBasis, RunConfig};
pub use error::{CliError, Stage};
pub use pipeline::{
    cmd_smallball, cmd_spectrum, cmd_theory, cmd_verify, SmallBallOutput, SpectrumOutput, TheoryOutput,
    VerificationReport,
};
