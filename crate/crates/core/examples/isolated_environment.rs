//! Dark-box run: no jamming, 30 s with and 30 s without the target at each
//! pump setting. Singles and coincidences come from the same acquisition.
//!
//!     cargo run --release --example isolated_environment

use qisim::analytics::{qef_from_results, snr_from_counts};
use qisim::channel::simulate_counts;
use qisim::rng::substream;
use qisim::ExperimentConfig;

fn main() -> qisim::Result<()> {
    let cfg = ExperimentConfig::paper_default().with_background(0.0);
    let pulses = cfg.seconds_to_pulses(30.0);
    println!(
        "{:>7} | {:>8} {:>8} {:>9} | {:>6} {:>6} {:>9} | {:>6}",
        "mu", "CI in", "CI out", "SNR_c", "QI in", "QI out", "SNR_q", "QEF"
    );
    for (i, mu) in [0.002, 0.005, 0.01, 0.02, 0.03].into_iter().enumerate() {
        let c = cfg.with_mu(mu);
        let on = simulate_counts(&c, true, pulses, &mut substream(c.seed, &[i as u64, 1]));
        let off = simulate_counts(&c, false, pulses, &mut substream(c.seed, &[i as u64, 0]));
        let classical = snr_from_counts(on.n_signal_clicks, off.n_signal_clicks)?;
        let quantum = snr_from_counts(on.n_coincidences, off.n_coincidences);
        let q = quantum.as_ref().map_or("undef".to_string(), |q| format!("{:.2}", q.value));
        let qef = quantum
            .and_then(|q| qef_from_results(&q, &classical))
            .map_or("undef".to_string(), |(v, _)| format!("{v:.1}"));
        println!(
            "{mu:>7} | {:>8} {:>8} {:>9.3} | {:>6} {:>6} {:>9} | {qef:>6}",
            on.n_signal_clicks, off.n_signal_clicks, classical.value, on.n_coincidences, off.n_coincidences, q
        );
    }
    Ok(())
}
