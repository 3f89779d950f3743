//! Pair-source statistics: energy conservation, the mean-photon-number
//! calibration and per-pulse pair sampling.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

/// Idler wavelength fixed by two-pump-photon energy conservation,
/// 2/λ_pump = 1/λ_signal + 1/λ_idler.
pub fn idler_wavelength(pump_nm: f64, signal_nm: f64) -> Result<f64> {
    let inv = 2.0 / pump_nm - 1.0 / signal_nm;
    if !(inv.is_finite() && inv > 0.0) || !(pump_nm > 0.0 && signal_nm > 0.0) {
        return Err(Error::NoIdler { pump_nm, signal_nm });
    }
    Ok(1.0 / inv)
}

/// Mean pairs per pulse inferred from the detected signal rate:
/// N_s / (R_p · η_ds).
pub fn mean_photon_number(
    signal_counts_per_s: f64,
    rep_rate_hz: f64,
    eta_signal_detector: f64,
) -> Result<f64> {
    let denom = rep_rate_hz * eta_signal_detector;
    if !(denom > 0.0) {
        return Err(Error::Undefined(
            "mean photon number undefined: zero repetition rate or detector efficiency",
        ));
    }
    Ok(signal_counts_per_s / denom)
}

/// Photon-number statistics of the pairs emitted in one pulse.
pub trait PairStatistics {
    fn sample<R: Rng + ?Sized>(&self, mu: f64, rng: &mut R) -> u64;
}

/// Multi-mode (Poissonian) pair statistics.
#[derive(Debug, Clone, Copy, Default)]
pub struct PoissonPairs;

impl PairStatistics for PoissonPairs {
    fn sample<R: Rng + ?Sized>(&self, mu: f64, rng: &mut R) -> u64 {
        poisson(mu, rng)
    }
}

/// Draws from Poisson(mean); a zero or negative mean yields 0.
pub(crate) fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite means.
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Number of pairs generated by one pulse.
pub fn sample_pair_count<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> u64 {
    PoissonPairs.sample(mu, rng)
}
