//! Source characterization: singles, coincidences and g² against μ with the
//! signal fiber connected straight to its detector.
//!
//!     cargo run --release --example characterize_source

use qisim::channel::CountSampler;
use qisim::correlator::estimate_g2;
use qisim::rng::substream;
use qisim::source::idler_wavelength;
use qisim::ExperimentConfig;

fn main() -> qisim::Result<()> {
    let cfg = ExperimentConfig::paper_default().direct_fiber();
    let idler = idler_wavelength(cfg.source.pump_nm, cfg.source.signal_nm)?;
    println!("pump {} nm, signal {} nm -> herald {idler:.1} nm", cfg.source.pump_nm, cfg.source.signal_nm);

    let seconds = 60.0;
    let pulses = cfg.seconds_to_pulses(seconds);
    println!("{:>8} {:>12} {:>12} {:>12} {:>10}", "mu", "signal/s", "herald/s", "coinc/s", "g2");
    for (i, mu) in [0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.07].into_iter().enumerate() {
        let c = cfg.with_mu(mu);
        let counts = CountSampler::new(&c, true).sample(pulses, &mut substream(c.seed, &[i as u64]));
        let g2 = estimate_g2(&counts)?;
        println!(
            "{mu:>8} {:>12.0} {:>12.0} {:>12.0} {:>6.1}±{:.1}",
            counts.n_signal_clicks as f64 / seconds,
            counts.n_herald_clicks as f64 / seconds,
            counts.n_coincidences as f64 / seconds,
            g2.value,
            g2.std_err
        );
    }
    Ok(())
}
