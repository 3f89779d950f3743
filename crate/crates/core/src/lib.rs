//! Monte Carlo simulation and analysis of standoff target detection with
//! correlated photon pairs.
//!
//! One photon of each pair (the signal) illuminates a diffuse target; its
//! partner (the herald) is detected locally. Counting signal singles gives
//! classical illumination, counting signal–herald coincidences gives quantum
//! illumination. The crate simulates both from the same acquisitions and
//! compares their signal-to-noise ratios with the source's g².
//!
//! - [`model`]: parameters, configuration, presets, validation
//! - [`source`]: pair statistics and wavelength bookkeeping
//! - [`channel`]: aggregate and time-tag acquisition simulators
//! - [`correlator`]: binning of tag streams, coincidences, g²
//! - [`analytics`]: exact click probabilities, SNR, QEF, sweeps
//! - [`imaging`]: raster scans, interpolation, contrast
//! - [`cli`]: the `qisim` command line

pub mod analytics;
pub mod channel;
pub mod cli;
pub mod correlator;
pub mod error;
pub mod imaging;
pub mod model;
pub mod rng;
pub mod source;

pub use error::{Error, Result};
pub use model::{BinProbabilities, ChannelParams, ClickCounts, ExperimentConfig, SourceParams};
