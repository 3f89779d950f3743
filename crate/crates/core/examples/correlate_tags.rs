//! Time-tag mode end to end: simulate a tag stream, write and read it back
//! as QITT, bin it, and compare with a sliding-window match and with the
//! closed-form probabilities.
//!
//!     cargo run --release --example correlate_tags

use qisim::analytics::click_probabilities;
use qisim::channel::{simulate_tags, TimeTagStream};
use qisim::correlator::{bin_and_count, bin_and_count_parallel, estimate_g2, windowed_coincidences};
use qisim::rng::substream;
use qisim::ExperimentConfig;

fn main() -> qisim::Result<()> {
    let cfg = ExperimentConfig::paper_default().direct_fiber().with_mu(0.02);
    let pulses = 5_000_000;
    let stream = simulate_tags(&cfg, true, pulses, &mut substream(cfg.seed, &[1]));

    let mut buf = Vec::new();
    stream.write_qitt(&mut buf)?;
    let stream = TimeTagStream::read_qitt(buf.as_slice())?;
    println!("{} tags, {} bytes as QITT", stream.len(), buf.len());

    let (w, period) = (cfg.channel.bin_width_ps, cfg.source.pulse_period_ps());
    let counts = bin_and_count(&stream, w, period)?;
    assert_eq!(counts, bin_and_count_parallel(&stream, w, period, 8)?);
    let g2 = estimate_g2(&counts)?;
    let p = click_probabilities(&cfg.source, &cfg.channel, true);
    let n = counts.n_pulses as f64;
    println!("signal  {:>8} (expected {:.0})", counts.n_signal_clicks, n * p.p_signal);
    println!("herald  {:>8} (expected {:.0})", counts.n_herald_clicks, n * p.p_herald);
    println!("coinc   {:>8} (expected {:.0})", counts.n_coincidences, n * p.p_coincidence);
    println!("g2 {:.2} ± {:.2} (exact {:.2})", g2.value, g2.std_err, p.g2());
    println!("window ±1 ns pairs: {}", windowed_coincidences(&stream, w / 2)?);
    Ok(())
}
