//! Domain types shared by every stage of the simulator: source and channel
//! parameters, the experiment configuration, per-run click tallies and the
//! per-bin detection probabilities.
//!
//! Time is integer picoseconds throughout. Noise terms are stored as mean
//! detections per coincidence bin; [`per_bin_from_pulsed_rate`] and
//! [`per_bin_from_uniform_rate`] convert from counts per second.

use std::fs;
use std::ops::{Add, AddAssign};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PS_PER_SECOND: f64 = 1e12;

/// Statistics of the photon-pair source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// Mean number of pairs per pump pulse.
    pub mu: f64,
    pub rep_rate_hz: f64,
    pub pump_nm: f64,
    pub signal_nm: f64,
    pub herald_nm: f64,
    /// Probability that the idler of a pair produces a herald click
    /// (coupling, filtering and detector efficiency lumped together).
    pub eta_herald: f64,
    /// Mean herald-channel detections per bin that have no signal partner
    /// (Raman photons and detector dark counts).
    pub noise_herald_per_bin: f64,
}

impl SourceParams {
    /// Pump pulse period rounded to the nearest picosecond.
    pub fn pulse_period_ps(&self) -> u64 {
        (PS_PER_SECOND / self.rep_rate_hz).round() as u64
    }

    /// Returns a copy whose `herald_nm` is fixed by energy conservation.
    pub fn with_derived_herald(mut self) -> Result<Self> {
        self.herald_nm = crate::source::idler_wavelength(self.pump_nm, self.signal_nm)?;
        Ok(self)
    }
}

/// Standoff geometry, signal-arm efficiencies and receiver noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Diameter of the collectable mode at the collection optics, meters.
    pub d_m: f64,
    /// Target standoff distance, meters.
    pub dist_m: f64,
    /// Measured fraction of the diffusely scattered light that is collected.
    pub collection_fraction: f64,
    pub eta_signal_detector: f64,
    /// Transmitter, fiber and filter throughput of the signal arm.
    pub eta_transmit: f64,
    /// Mean jamming detections per bin. The jammer is pulse-synchronous.
    pub background_per_bin: f64,
    /// Mean signal-detector dark counts per bin (uniform in time).
    pub dark_signal_per_bin: f64,
    /// Mean stray room-light detections per bin (uniform in time). Present
    /// even when the jammer is blocked.
    #[serde(default)]
    pub stray_signal_per_bin: f64,
    pub bin_width_ps: u64,
    pub target_reflectivity: f64,
    /// Gaussian timing jitter of each detector (1σ), picoseconds.
    #[serde(default = "default_jitter_ps")]
    pub jitter_ps: f64,
    /// Detector dead time. Only honoured by the time-tag simulator.
    #[serde(default)]
    pub dead_time_ps: u64,
}

fn default_jitter_ps() -> f64 {
    300.0
}

impl ChannelParams {
    /// Probability that a signal photon leaving the source is detected.
    /// Zero with the target out: nothing returns from the absorber.
    pub fn signal_efficiency(&self, target_in: bool) -> f64 {
        if target_in {
            self.eta_transmit
                * self.target_reflectivity
                * self.collection_fraction
                * self.eta_signal_detector
        } else {
            0.0
        }
    }

    /// Signal-channel noise per bin that does not depend on the target:
    /// jamming, stray light and dark counts.
    pub fn signal_noise_per_bin(&self) -> f64 {
        self.background_per_bin + self.stray_signal_per_bin + self.dark_signal_per_bin
    }

    /// Noise that is uniform in time rather than locked to the pulses.
    pub fn unsynchronized_noise_per_bin(&self) -> f64 {
        self.stray_signal_per_bin + self.dark_signal_per_bin
    }
}

/// Everything needed to reproduce one acquisition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: SourceParams,
    pub channel: ChannelParams,
    /// Pulses per acquisition segment.
    pub n_pulses: u64,
    pub seed: u64,
    /// Pulses per target-in or target-out shutter segment.
    pub toggle_period_pulses: u64,
}

/// Mean detections per bin of a pulse-synchronous source detected at `rate_hz`.
pub fn per_bin_from_pulsed_rate(rate_hz: f64, rep_rate_hz: f64) -> f64 {
    rate_hz / rep_rate_hz
}

/// Mean detections per bin of a process that is uniform in time.
pub fn per_bin_from_uniform_rate(rate_hz: f64, bin_width_ps: u64) -> f64 {
    rate_hz * bin_width_ps as f64 / PS_PER_SECOND
}

const DEFAULT_REP_RATE_HZ: f64 = 80e6;
const DEFAULT_BIN_WIDTH_PS: u64 = 2000;
/// Assumed dark-count rate of each detector.
const DEFAULT_DARK_RATE_HZ: f64 = 100.0;

impl ExperimentConfig {
    /// The table-top standoff experiment: 80 MHz source calibrated to the
    /// direct-fiber count rates, 32 cm target distance, measured collection
    /// fraction, no jamming. Herald efficiency reproduces the ~13:1
    /// singles-to-coincidence ratio.
    pub fn paper_default() -> Self {
        let source = SourceParams {
            mu: 5.8e-3,
            rep_rate_hz: DEFAULT_REP_RATE_HZ,
            pump_nm: 793.0,
            signal_nm: 671.0,
            herald_nm: 970.0,
            eta_herald: 0.075,
            noise_herald_per_bin: per_bin_from_uniform_rate(
                DEFAULT_DARK_RATE_HZ,
                DEFAULT_BIN_WIDTH_PS,
            ),
        };
        let channel = ChannelParams {
            d_m: 0.03,
            dist_m: 0.32,
            collection_fraction: 3e-4,
            eta_signal_detector: 0.6,
            eta_transmit: 0.3,
            background_per_bin: 0.0,
            dark_signal_per_bin: per_bin_from_uniform_rate(
                DEFAULT_DARK_RATE_HZ,
                DEFAULT_BIN_WIDTH_PS,
            ),
            stray_signal_per_bin: 0.0,
            bin_width_ps: DEFAULT_BIN_WIDTH_PS,
            target_reflectivity: 1.0,
            jitter_ps: default_jitter_ps(),
            dead_time_ps: 0,
        };
        ExperimentConfig {
            source,
            channel,
            n_pulses: DEFAULT_REP_RATE_HZ as u64,
            seed: 0x005e_ed0f_9a1f,
            toggle_period_pulses: DEFAULT_REP_RATE_HZ as u64,
        }
    }

    /// Source characterization with perfect detectors: signal fiber straight
    /// onto its detector, no dark counts and no herald-side noise. Upper
    /// bound on the achievable g².
    pub fn bare_source() -> Self {
        let mut cfg = Self::paper_default().direct_fiber();
        cfg.source.noise_herald_per_bin = 0.0;
        cfg.channel.dark_signal_per_bin = 0.0;
        cfg.channel.stray_signal_per_bin = 0.0;
        cfg
    }

    /// The same source and detectors with the signal fiber connected
    /// directly to its detector: no target, no collection loss, no jamming.
    pub fn direct_fiber(mut self) -> Self {
        self.channel.collection_fraction = 1.0;
        self.channel.eta_transmit = 1.0;
        self.channel.target_reflectivity = 1.0;
        self.channel.background_per_bin = 0.0;
        self.channel.stray_signal_per_bin = 0.0;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.source.mu = mu;
        self
    }

    pub fn with_background(mut self, background_per_bin: f64) -> Self {
        self.channel.background_per_bin = background_per_bin;
        self
    }

    /// Converts seconds of acquisition into pulses at the source rate.
    pub fn seconds_to_pulses(&self, seconds: f64) -> u64 {
        (seconds * self.source.rep_rate_hz).round() as u64
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Reads and validates a JSON configuration file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        validate_config(Self::from_json(&text)?)
    }
}

/// Built-in configurations selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    PaperDefault,
    BareSource,
}

impl Preset {
    pub fn config(self) -> ExperimentConfig {
        match self {
            Preset::PaperDefault => ExperimentConfig::paper_default(),
            Preset::BareSource => ExperimentConfig::bare_source(),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-default" => Ok(Preset::PaperDefault),
            "bare-source" => Ok(Preset::BareSource),
            other => Err(Error::InvalidArgument(format!("unknown preset {other:?}"))),
        }
    }
}

fn check_probability(field: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::config(field, format!("out of range: {value} not in [0, 1]")))
    }
}

fn check_non_negative(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("out of range: {value} is negative or not finite")))
    }
}

fn check_positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("out of range: {value} must be positive")))
    }
}

/// Returns the configuration unchanged when every invariant holds, otherwise
/// an error naming the first offending field.
pub fn validate_config(raw: ExperimentConfig) -> Result<ExperimentConfig> {
    let s = &raw.source;
    if !(s.mu.is_finite() && s.mu >= 0.0) {
        return Err(Error::config("mu", format!("out of range: {}", s.mu)));
    }
    check_positive("rep_rate_hz", s.rep_rate_hz)?;
    check_positive("pump_nm", s.pump_nm)?;
    check_positive("signal_nm", s.signal_nm)?;
    check_positive("herald_nm", s.herald_nm)?;
    check_probability("eta_herald", s.eta_herald)?;
    check_non_negative("noise_herald_per_bin", s.noise_herald_per_bin)?;

    let c = &raw.channel;
    check_non_negative("d_m", c.d_m)?;
    check_positive("dist_m", c.dist_m)?;
    check_probability("collection_fraction", c.collection_fraction)?;
    check_probability("eta_signal_detector", c.eta_signal_detector)?;
    check_probability("eta_transmit", c.eta_transmit)?;
    check_non_negative("background_per_bin", c.background_per_bin)?;
    check_non_negative("dark_signal_per_bin", c.dark_signal_per_bin)?;
    check_non_negative("stray_signal_per_bin", c.stray_signal_per_bin)?;
    if c.bin_width_ps == 0 {
        return Err(Error::config("bin_width_ps", "out of range: zero bin width"));
    }
    let period = s.pulse_period_ps();
    if c.bin_width_ps > period {
        return Err(Error::config(
            "bin_width_ps",
            format!("out of range: bin exceeds pulse period ({} > {period} ps)", c.bin_width_ps),
        ));
    }
    check_probability("target_reflectivity", c.target_reflectivity)?;
    check_non_negative("jitter_ps", c.jitter_ps)?;

    if raw.n_pulses == 0 {
        return Err(Error::config("n_pulses", "out of range: must be at least 1"));
    }
    if raw.toggle_period_pulses == 0 {
        return Err(Error::config("toggle_period_pulses", "out of range: must be at least 1"));
    }
    Ok(raw)
}

/// Per-run tallies. Click detectors register at most one click per channel
/// per bin, so every count is bounded by `n_pulses`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClickCounts {
    pub n_pulses: u64,
    pub n_signal_clicks: u64,
    pub n_herald_clicks: u64,
    pub n_coincidences: u64,
    pub target_in: bool,
}

impl ClickCounts {
    pub fn empty(target_in: bool) -> Self {
        ClickCounts {
            target_in,
            ..Default::default()
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.n_coincidences <= self.n_signal_clicks.min(self.n_herald_clicks)
            && self.n_signal_clicks <= self.n_pulses
            && self.n_herald_clicks <= self.n_pulses
    }

    /// Empirical per-bin probabilities.
    pub fn frequencies(&self) -> (f64, f64, f64) {
        let n = self.n_pulses as f64;
        (
            self.n_signal_clicks as f64 / n,
            self.n_herald_clicks as f64 / n,
            self.n_coincidences as f64 / n,
        )
    }
}

impl AddAssign for ClickCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.n_pulses += rhs.n_pulses;
        self.n_signal_clicks += rhs.n_signal_clicks;
        self.n_herald_clicks += rhs.n_herald_clicks;
        self.n_coincidences += rhs.n_coincidences;
    }
}

impl Add for ClickCounts {
    type Output = ClickCounts;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

/// Per-bin click probabilities of the two detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinProbabilities {
    pub p_signal: f64,
    pub p_herald: f64,
    pub p_coincidence: f64,
    /// Probability of a signal click from target-independent noise alone.
    pub p_background: f64,
}

impl BinProbabilities {
    /// Probabilities of the four click patterns, ordered
    /// (both, signal only, herald only, neither).
    pub fn patterns(&self) -> [f64; 4] {
        let both = self.p_coincidence;
        let signal_only = (self.p_signal - both).max(0.0);
        let herald_only = (self.p_herald - both).max(0.0);
        let neither = (1.0 - both - signal_only - herald_only).max(0.0);
        [both, signal_only, herald_only, neither]
    }

    /// The two-mode second-order coherence P_sh / (P_s P_h).
    pub fn g2(&self) -> f64 {
        self.p_coincidence / (self.p_signal * self.p_herald)
    }

    pub fn satisfies_frechet_bounds(&self, tol: f64) -> bool {
        let lo = (self.p_signal + self.p_herald - 1.0).max(0.0);
        let hi = self.p_signal.min(self.p_herald);
        self.p_coincidence >= lo - tol && self.p_coincidence <= hi + tol
    }
}
