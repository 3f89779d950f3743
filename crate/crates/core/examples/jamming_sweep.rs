//! Jamming sweep at μ = 5.8e-3 with the target toggled every second. The
//! singles gap closes as the jammer grows; the coincidence gap does not.
//!
//!     cargo run --release --example jamming_sweep [-- out.csv]

use qisim::analytics::{run_sweep, SweepVariable};
use qisim::model::per_bin_from_pulsed_rate;
use qisim::ExperimentConfig;

fn main() -> qisim::Result<()> {
    let cfg = ExperimentConfig::paper_default();
    let rates = [0.0, 1e3, 3e3, 1e4, 3e4, 1e5, 3e5];
    let values: Vec<f64> = rates.iter().map(|&r| per_bin_from_pulsed_rate(r, cfg.source.rep_rate_hz)).collect();
    let table = run_sweep(&cfg, SweepVariable::Background, &values, cfg.seconds_to_pulses(600.0))?;

    println!("{:>9} {:>10} {:>10} {:>8} {:>8} {:>12} {:>12}", "jam /s", "CI in", "CI out", "QI in", "QI out", "SNR_c", "SNR_q");
    for (rate, row) in rates.iter().zip(&table.rows) {
        let fmt = |s: Option<qisim::analytics::SnrResult>| s.map_or("undef".into(), |s| format!("{:.4}", s.value));
        println!(
            "{rate:>9} {:>10} {:>10} {:>8} {:>8} {:>12} {:>12}",
            row.counts_in.n_signal_clicks,
            row.counts_out.n_signal_clicks,
            row.counts_in.n_coincidences,
            row.counts_out.n_coincidences,
            fmt(row.classical),
            fmt(row.quantum)
        );
    }
    if let Some(path) = std::env::args().nth(1) {
        table.write_csv(std::fs::File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
