//! One acquisition through the standoff channel: pair generation, signal-arm
//! loss via the target and collection optics, jamming and dark noise, and
//! click detection.
//!
//! [`simulate_counts`] draws the four per-bin click patterns directly from
//! their exact probabilities. [`simulate_tags`] realizes the same physics
//! photon by photon as a time-tag stream, for exercising the correlator.

mod tags;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};

pub use tags::{Channel, TimeTag, TimeTagStream, QITT_MAGIC, QITT_VERSION};

use crate::analytics::click_probabilities;
use crate::correlator::BinGrid;
use crate::error::{Error, Result};
use crate::model::{ClickCounts, ExperimentConfig};

/// Largest fraction of isotropically scattered light a mode of diameter
/// `d_m` can collect at distance `dist_m`: d² / (8 D²).
pub fn collection_fraction_max(d_m: f64, dist_m: f64) -> Result<f64> {
    if !(dist_m > 0.0) {
        return Err(Error::Undefined("collection fraction undefined: zero distance"));
    }
    if !(d_m >= 0.0) {
        return Err(Error::InvalidArgument(format!("negative mode diameter {d_m}")));
    }
    Ok(d_m * d_m / (8.0 * dist_m * dist_m))
}

/// Draws `n` trials over four outcomes by sequential conditional binomials.
pub(crate) fn sample_multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64; 4], rng: &mut R) -> [u64; 4] {
    let mut out = [0u64; 4];
    let mut remaining = n;
    let mut mass = 1.0f64;
    for (i, &p) in probs.iter().enumerate().take(3) {
        if remaining == 0 {
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q).map(|b| b.sample(rng)).unwrap_or(0)
        };
        out[i] = k;
        remaining -= k;
        mass -= p;
    }
    out[3] = remaining;
    out
}

/// Click tallies for `n_pulses` bins, sampled exactly from the multinomial
/// over (both, signal only, herald only, neither).
pub fn simulate_counts<R: Rng + ?Sized>(
    config: &ExperimentConfig,
    target_in: bool,
    n_pulses: u64,
    rng: &mut R,
) -> ClickCounts {
    CountSampler::new(config, target_in).sample(n_pulses, rng)
}

/// Aggregate-mode sampler with the pattern probabilities computed once,
/// for drawing many segments of the same configuration.
#[derive(Debug, Clone, Copy)]
pub struct CountSampler {
    patterns: [f64; 4],
    target_in: bool,
}

impl CountSampler {
    pub fn new(config: &ExperimentConfig, target_in: bool) -> Self {
        let probs = click_probabilities(&config.source, &config.channel, target_in);
        CountSampler {
            patterns: probs.patterns(),
            target_in,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n_pulses: u64, rng: &mut R) -> ClickCounts {
        let [both, signal_only, herald_only, _] = sample_multinomial(n_pulses, &self.patterns, rng);
        ClickCounts {
            n_pulses,
            n_signal_clicks: both + signal_only,
            n_herald_clicks: both + herald_only,
            n_coincidences: both,
            target_in: self.target_in,
        }
    }
}

struct PoissonSource(Option<Poisson<f64>>);

impl PoissonSource {
    fn new(mean: f64) -> Self {
        PoissonSource(if mean > 0.0 { Poisson::new(mean).ok() } else { None })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.0.as_ref().map_or(0, |d| d.sample(rng) as u64)
    }
}

/// Explicit time-tag realization of `n_pulses` pulses.
///
/// Pulse `k` (1-based) fires at `k · T`; the run lasts `(n_pulses + 1) · T`.
/// Photon clicks (pairs, jamming, herald noise) land at the pulse time plus
/// Gaussian jitter. Dark counts and stray light are uniform over the run.
/// Within any coincidence bin at most one tag per channel survives; with a
/// non-zero dead time, tags closer than it to the previous kept tag of the
/// same channel are also dropped.
pub fn simulate_tags<R: Rng + ?Sized>(
    config: &ExperimentConfig,
    target_in: bool,
    n_pulses: u64,
    rng: &mut R,
) -> TimeTagStream {
    let source = &config.source;
    let channel = &config.channel;
    let period = source.pulse_period_ps();
    let duration = (n_pulses + 1) * period;
    let grid = BinGrid::new(channel.bin_width_ps, period, duration);

    let eta_signal = channel.signal_efficiency(target_in);
    let eta_herald = source.eta_herald;
    let pairs = PoissonSource::new(source.mu);
    let jamming = PoissonSource::new(channel.background_per_bin);
    let herald_noise = PoissonSource::new(source.noise_herald_per_bin);
    let jitter = Normal::new(0.0, channel.jitter_ps).ok().filter(|_| channel.jitter_ps > 0.0);

    let jittered = |t: u64, rng: &mut R| -> u64 {
        match &jitter {
            Some(d) => {
                let dt: f64 = d.sample(rng);
                (t as f64 + dt).round().clamp(0.0, (duration - 1) as f64) as u64
            }
            None => t,
        }
    };

    let mut tags = Vec::new();
    for k in 1..=n_pulses {
        let t0 = k * period;
        let mut signal_photons = jamming.sample(rng);
        let mut herald_photons = herald_noise.sample(rng);
        for _ in 0..pairs.sample(rng) {
            signal_photons += (rng.random::<f64>() < eta_signal) as u64;
            herald_photons += (rng.random::<f64>() < eta_herald) as u64;
        }
        if signal_photons > 0 {
            let t = jittered(t0, rng);
            tags.push(TimeTag::new(Channel::Signal, t));
        }
        if herald_photons > 0 {
            let t = jittered(t0, rng);
            tags.push(TimeTag::new(Channel::Herald, t));
        }
    }

    let uniform_per_bin = channel.unsynchronized_noise_per_bin();
    if uniform_per_bin > 0.0 {
        let mean = uniform_per_bin * duration as f64 / channel.bin_width_ps as f64;
        for _ in 0..PoissonSource::new(mean).sample(rng) {
            tags.push(TimeTag::new(Channel::Signal, rng.random_range(0..duration)));
        }
    }

    tags.sort_unstable();
    let tags = enforce_click_semantics(tags, &grid, channel.dead_time_ps);
    TimeTagStream::from_sorted_unchecked(tags, duration)
}

/// Keeps the first tag per channel in every bin and applies dead time.
fn enforce_click_semantics(tags: Vec<TimeTag>, grid: &BinGrid, dead_time_ps: u64) -> Vec<TimeTag> {
    // Per channel: (bin of the last kept tag, time of the last kept tag).
    let mut last: [(Option<u64>, Option<u64>); 2] = [(None, None); 2];
    tags.into_iter()
        .filter(|tag| {
            let slot = &mut last[tag.channel as usize];
            let bin = grid.bin_of(tag.time_ps);
            if bin.is_some() && bin == slot.0 {
                return false;
            }
            if let Some(prev) = slot.1 {
                if dead_time_ps > 0 && tag.time_ps - prev < dead_time_ps {
                    return false;
                }
            }
            *slot = (bin.or(slot.0), Some(tag.time_ps));
            true
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlator::bin_and_count;
    use crate::rng::substream;

    fn quiet(mu: f64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::paper_default().with_mu(mu);
        cfg.source.noise_herald_per_bin = 0.0;
        cfg.channel.dark_signal_per_bin = 0.0;
        cfg.channel.background_per_bin = 0.0;
        cfg
    }

    fn perfect(mu: f64) -> ExperimentConfig {
        let mut cfg = quiet(mu).direct_fiber();
        cfg.source.eta_herald = 1.0;
        cfg.channel.eta_signal_detector = 1.0;
        cfg
    }

    #[test]
    fn collection_fraction_examples() {
        let r = collection_fraction_max(0.03, 0.32).unwrap();
        assert_eq!(format!("{r:.1e}"), "1.1e-3");
        assert_eq!(collection_fraction_max(0.0, 0.32).unwrap(), 0.0);
        for x in [0.01, 1.0, 37.5] {
            assert!((collection_fraction_max(x, x).unwrap() - 0.125).abs() < 1e-15);
        }
        assert!(collection_fraction_max(0.03, 0.0).is_err());
    }

    #[test]
    fn multinomial_conserves_trials() {
        let mut rng = substream(3, &[]);
        let draw = sample_multinomial(1_000_000, &[0.1, 0.2, 0.3, 0.4], &mut rng);
        assert_eq!(draw.iter().sum::<u64>(), 1_000_000);
        assert_eq!(sample_multinomial(5, &[0.0, 0.0, 0.0, 1.0], &mut rng), [0, 0, 0, 5]);
        assert_eq!(sample_multinomial(5, &[1.0, 0.0, 0.0, 0.0], &mut rng), [5, 0, 0, 0]);
    }

    #[test]
    fn no_photons_no_clicks() {
        let mut rng = substream(1, &[]);
        let counts = simulate_counts(&quiet(0.0), true, 1_000_000, &mut rng);
        assert_eq!(counts.n_signal_clicks + counts.n_herald_clicks + counts.n_coincidences, 0);
        assert!(simulate_tags(&quiet(0.0), true, 100_000, &mut rng).is_empty());
    }

    #[test]
    fn perfect_correlation_limit() {
        let mut rng = substream(11, &[]);
        let n = 10_000_000u64;
        let counts = simulate_counts(&perfect(0.01), true, n, &mut rng);
        let p = 1.0 - (-0.01f64).exp();
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        let frac = counts.n_coincidences as f64 / n as f64;
        assert!((frac - p).abs() < 4.0 * sigma, "{frac} vs {p}");
        assert_eq!(counts.n_coincidences, counts.n_signal_clicks);
        assert_eq!(counts.n_coincidences, counts.n_herald_clicks);
    }

    #[test]
    fn target_out_coincidences_are_accidental() {
        let mut cfg = quiet(0.01).with_background(1e-4);
        cfg.source.eta_herald = 0.1;
        let n = 100_000_000u64;
        let counts = simulate_counts(&cfg, false, n, &mut substream(5, &[]));
        let p_h = 1.0 - (-0.01f64 * 0.1).exp();
        let p_b = 1.0 - (-1e-4f64).exp();
        let p = p_h * p_b;
        let frac = counts.n_coincidences as f64 / n as f64;
        let sigma = (p / n as f64).sqrt();
        assert!((frac - p).abs() < 4.0 * sigma, "{frac} vs {p}");

        let (ps, ph, psh) = counts.frequencies();
        let ratio = psh / (ps * ph);
        // Relative error of the ratio is dominated by the coincidence count.
        let rel = 1.0 / (counts.n_coincidences as f64).sqrt();
        assert!((ratio - 1.0).abs() < 4.0 * rel, "ratio {ratio}");
    }

    #[test]
    fn identical_seed_identical_output() {
        let cfg = ExperimentConfig::paper_default().with_mu(0.02).with_background(1e-3);
        let a = simulate_counts(&cfg, true, 80_000_000, &mut substream(9, &[1]));
        let b = simulate_counts(&cfg, true, 80_000_000, &mut substream(9, &[1]));
        assert_eq!(a, b);
        let a = simulate_tags(&cfg, true, 200_000, &mut substream(9, &[2]));
        let b = simulate_tags(&cfg, true, 200_000, &mut substream(9, &[2]));
        assert_eq!(a, b);
    }

    #[test]
    fn signal_clicks_grow_with_mu() {
        let mut cfg = perfect(0.0).with_background(1e-3);
        cfg.channel.eta_transmit = 0.1;
        let n = 10_000_000u64;
        let mut previous: Option<(f64, f64)> = None;
        for (i, mu) in [0.002, 0.005, 0.01, 0.015, 0.025].into_iter().enumerate() {
            cfg.source.mu = mu;
            let c = simulate_counts(&cfg, true, n, &mut substream(21, &[i as u64]));
            let x = c.n_signal_clicks as f64;
            if let Some((prev, prev_var)) = previous {
                assert!(x - prev > -4.0 * (x + prev_var).sqrt(), "{x} after {prev}");
            }
            previous = Some((x, x));
        }
    }

    #[test]
    fn tag_stream_is_sorted_and_bounded() {
        let mut cfg = ExperimentConfig::paper_default().with_mu(0.05).with_background(0.02);
        cfg.channel.dark_signal_per_bin = 1e-3;
        cfg.channel.collection_fraction = 0.5;
        for seed in 0..5 {
            let s = simulate_tags(&cfg, seed % 2 == 0, 20_000, &mut substream(seed, &[]));
            assert!(!s.is_empty());
            assert!(s.tags().windows(2).all(|w| w[0] <= w[1]));
            assert!(s.tags().iter().all(|t| t.time_ps < s.duration_ps()));
            assert_eq!(s.duration_ps(), 20_001 * 12_500);
        }
    }

    #[test]
    fn at_most_one_tag_per_channel_per_bin() {
        let mut cfg = quiet(0.0).with_background(3.0);
        cfg.channel.dark_signal_per_bin = 0.5;
        let stream = simulate_tags(&cfg, true, 5_000, &mut substream(8, &[]));
        let grid = BinGrid::new(2000, 12_500, stream.duration_ps());
        let mut seen = std::collections::HashSet::new();
        for tag in stream.tags() {
            if let Some(bin) = grid.bin_of(tag.time_ps) {
                assert!(seen.insert((tag.channel, bin)), "duplicate in bin {bin}");
            }
        }
        let counts = bin_and_count(&stream, 2000, 12_500).unwrap();
        // 1 - exp(-3.5) of the bins click.
        assert!(counts.n_signal_clicks > 4_780);
    }

    #[test]
    fn dead_time_spaces_tags() {
        let mut cfg = quiet(0.0).with_background(0.0);
        cfg.channel.dark_signal_per_bin = 0.2;
        cfg.channel.dead_time_ps = 50_000;
        let stream = simulate_tags(&cfg, true, 10_000, &mut substream(4, &[]));
        let times: Vec<u64> = stream.tags().iter().map(|t| t.time_ps).collect();
        assert!(times.len() > 100);
        assert!(times.windows(2).all(|w| w[1] - w[0] >= 50_000));
    }
}
