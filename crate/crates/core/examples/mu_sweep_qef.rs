//! QEF against μ under ~10⁴ jamming counts per second, next to the g² of
//! the jammer-blocked companion run. Signal-detector dark counts are off;
//! with them on, g² drops by the pair purity while QEF does not.
//!
//!     cargo run --release --example mu_sweep_qef

use qisim::analytics::{companion_g2, exact_qef, run_sweep, SweepVariable};
use qisim::model::per_bin_from_pulsed_rate;
use qisim::ExperimentConfig;

fn main() -> qisim::Result<()> {
    let mut cfg = ExperimentConfig::paper_default();
    cfg = cfg.with_background(per_bin_from_pulsed_rate(1e4, cfg.source.rep_rate_hz));
    cfg.channel.dark_signal_per_bin = 0.0;

    let mus = [1e-3, 2.5e-3, 5.8e-3, 1e-2, 2.5e-2];
    // A 1e-3 classical SNR needs a very long toggled acquisition to resolve.
    let dwell = cfg.seconds_to_pulses(1e6);
    let table = run_sweep(&cfg, SweepVariable::Mu, &mus, dwell)?;

    println!("{:>8} {:>11} {:>9} {:>16} {:>14} {:>10}", "mu", "SNR_c", "SNR_q", "QEF", "g2", "exact");
    for row in &table.rows {
        let (Some(c), Some(q), Some((qef, qef_err)), Some(g2)) = (row.classical, row.quantum, row.qef, row.g2) else {
            println!("{:>8} {:?}", row.value, row.errors);
            continue;
        };
        let exact = exact_qef(&cfg.with_mu(row.value))?;
        println!(
            "{:>8} {:>11.2e} {:>9.3} {:>9.1} ± {:<5.1} {:>7.1} ± {:<4.1} {exact:>10.1}",
            row.value, c.value, q.value, qef, qef_err, g2.value, g2.std_err
        );
    }
    let with_darks = ExperimentConfig::paper_default().with_background(cfg.channel.background_per_bin).with_mu(1e-3);
    println!(
        "with 100/s signal darks at mu=1e-3: exact QEF {:.1}, companion g2 {:.1}",
        exact_qef(&with_darks)?,
        companion_g2(&with_darks)
    );
    Ok(())
}
