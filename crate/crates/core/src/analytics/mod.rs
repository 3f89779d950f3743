//! Closed-form click probabilities, signal-to-noise ratios and the quantum
//! enhancement factor, plus the shutter-toggling sweep driver.
//!
//! Per bin the pair number is Poisson(μ). Each pair independently yields a
//! herald click with probability η_h and a signal click with probability
//! η_sig (zero with the target out). Herald noise δ_h and signal noise
//! n_s = β + stray + dark are independent Poisson terms. Poisson thinning
//! splits the pair photons into independent herald-only, signal-only and
//! joint streams, which gives the exact click-detector probabilities:
//!
//! ```text
//! P_h  = 1 − exp(−(μη_h + δ_h))
//! P_s  = 1 − exp(−(μη_sig + n_s))
//! P_sh = P_s·P_h + exp(−(μη_h + δ_h + μη_sig + n_s))·(exp(μη_hη_sig) − 1)
//! ```
//!
//! The last line is the inclusion–exclusion form rearranged to avoid
//! cancellation when P_sh is tiny.

mod sweep;

use rand::Rng;

pub use sweep::{run_sweep, SweepRow, SweepTable, SweepVariable, SWEEP_CSV_HEADER};

use crate::error::{Error, Result};
use crate::model::{BinProbabilities, ChannelParams, ExperimentConfig, SourceParams};
use crate::source::poisson;

/// Exact per-bin click probabilities for the given source and channel.
pub fn click_probabilities(source: &SourceParams, channel: &ChannelParams, target_in: bool) -> BinProbabilities {
    let mu = source.mu;
    let eta_h = source.eta_herald;
    let eta_s = channel.signal_efficiency(target_in);
    let herald_mean = mu * eta_h + source.noise_herald_per_bin;
    let noise_s = channel.signal_noise_per_bin();
    let signal_mean = mu * eta_s + noise_s;

    let p_herald = -(-herald_mean).exp_m1();
    let p_signal = -(-signal_mean).exp_m1();
    let p_coincidence =
        p_signal * p_herald + (-(herald_mean + signal_mean)).exp() * (mu * eta_h * eta_s).exp_m1();
    BinProbabilities {
        p_signal,
        p_herald,
        p_coincidence,
        p_background: -(-noise_s).exp_m1(),
    }
}

/// Which detection statistic an SNR was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnrKind {
    #[default]
    Counts,
    /// Signal-detector singles (classical illumination).
    Classical,
    /// Signal–herald coincidences (quantum illumination).
    Quantum,
}

/// (N_in − N_out) / N_out with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SnrResult {
    pub value: f64,
    pub std_err: f64,
    pub n_in: u64,
    pub n_out: u64,
    pub kind: SnrKind,
}

impl SnrResult {
    pub fn with_kind(mut self, kind: SnrKind) -> Self {
        self.kind = kind;
        self
    }
}

/// SNR of target-in over target-out detection counts. Errors assume
/// independent Poisson counts.
pub fn snr_from_counts(n_in: u64, n_out: u64) -> Result<SnrResult> {
    if n_out == 0 {
        return Err(Error::Undefined("SNR undefined: zero background counts"));
    }
    let (a, b) = (n_in as f64, n_out as f64);
    Ok(SnrResult {
        value: a / b - 1.0,
        std_err: (a / (b * b) + a * a / (b * b * b)).sqrt(),
        n_in,
        n_out,
        kind: SnrKind::Counts,
    })
}

/// Parametric bootstrap of the SNR standard error: both counts are
/// redrawn from Poisson laws with their observed means. Resamples with a
/// zero target-out count are skipped.
pub fn bootstrap_snr_std_err<R: Rng + ?Sized>(n_in: u64, n_out: u64, resamples: usize, rng: &mut R) -> Result<f64> {
    if n_out == 0 {
        return Err(Error::Undefined("SNR undefined: zero background counts"));
    }
    let draws: Vec<f64> = (0..resamples)
        .filter_map(|_| {
            let a = poisson(n_in as f64, rng);
            let b = poisson(n_out as f64, rng);
            (b > 0).then(|| a as f64 / b as f64 - 1.0)
        })
        .collect();
    if draws.len() < 2 {
        return Err(Error::Undefined("bootstrap needs at least two usable resamples"));
    }
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(var.sqrt())
}

/// Classical SNR of single detections, η·P_s / P_b.
pub fn expected_snr_classical(eta: f64, p_s: f64, p_b: f64) -> Result<f64> {
    if p_b == 0.0 {
        return Err(Error::Undefined("classical SNR undefined: zero background probability"));
    }
    Ok(eta * p_s / p_b)
}

/// Quantum SNR of coincidences, η·P_sh / (P_h·P_b).
pub fn expected_snr_quantum(eta: f64, p_sh: f64, p_h: f64, p_b: f64) -> Result<f64> {
    let denom = p_h * p_b;
    if denom == 0.0 {
        return Err(Error::Undefined("quantum SNR undefined: zero herald or background probability"));
    }
    Ok(eta * p_sh / denom)
}

/// Quantum enhancement factor SNR_q / SNR_c.
pub fn qef(snr_q: f64, snr_c: f64) -> Result<f64> {
    if snr_c == 0.0 {
        return Err(Error::Undefined("QEF undefined: zero classical SNR"));
    }
    Ok(snr_q / snr_c)
}

/// QEF of two measured SNRs with first-order error propagation.
pub fn qef_from_results(quantum: &SnrResult, classical: &SnrResult) -> Result<(f64, f64)> {
    if !(classical.value > 0.0) {
        return Err(Error::Undefined("QEF undefined: non-positive classical SNR"));
    }
    let value = qef(quantum.value, classical.value)?;
    let rel_q = if quantum.value != 0.0 { quantum.std_err / quantum.value } else { 0.0 };
    let rel_c = classical.std_err / classical.value;
    let std_err = if quantum.value != 0.0 {
        value.abs() * (rel_q * rel_q + rel_c * rel_c).sqrt()
    } else {
        quantum.std_err / classical.value
    };
    Ok((value, std_err))
}

/// Expected classical and quantum SNR of a configuration, using the exact
/// target-in and target-out click probabilities.
pub fn exact_snr(config: &ExperimentConfig) -> Result<(f64, f64)> {
    let on = click_probabilities(&config.source, &config.channel, true);
    let off = click_probabilities(&config.source, &config.channel, false);
    if off.p_signal == 0.0 || off.p_coincidence == 0.0 {
        return Err(Error::Undefined("SNR undefined: zero background counts"));
    }
    Ok((
        on.p_signal / off.p_signal - 1.0,
        on.p_coincidence / off.p_coincidence - 1.0,
    ))
}

/// Expected QEF of a configuration from the exact click probabilities.
pub fn exact_qef(config: &ExperimentConfig) -> Result<f64> {
    let (snr_c, snr_q) = exact_snr(config)?;
    qef(snr_q, snr_c)
}

/// g² the companion measurement would see: same configuration with the
/// jammer blocked and the target in.
pub fn companion_g2(config: &ExperimentConfig) -> f64 {
    let blocked = config.with_background(0.0);
    click_probabilities(&blocked.source, &blocked.channel, true).g2()
}
