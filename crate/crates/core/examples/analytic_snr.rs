//! Closed-form click probabilities, SNRs and QEF without simulation.
//!
//!     cargo run --release --example analytic_snr

use qisim::analytics::{click_probabilities, companion_g2, exact_snr, expected_snr_classical, expected_snr_quantum, qef};
use qisim::channel::collection_fraction_max;
use qisim::model::{per_bin_from_pulsed_rate, Preset};

fn main() -> qisim::Result<()> {
    let base = Preset::PaperDefault.config();
    let r = collection_fraction_max(base.channel.d_m, base.channel.dist_m)?;
    println!("geometric collection limit d²/8D² = {r:.2e}");

    let bare = Preset::BareSource.config();
    for mu in [1e-4, 1e-3, 1e-2] {
        let b = bare.with_mu(mu);
        println!("bare source mu={mu:.0e}: g2 = {:.1}", click_probabilities(&b.source, &b.channel, true).g2());
    }

    // The companion g2 is taken with the jammer blocked; signal dark counts
    // lower it below the QEF.
    println!("\n{:>8} {:>10} {:>10} {:>9} {:>11}", "jam /s", "SNR_c", "SNR_q", "QEF", "blocked g2");
    for rate in [1e3, 1e4, 1e5] {
        let cfg = base.with_background(per_bin_from_pulsed_rate(rate, base.source.rep_rate_hz));
        let (snr_c, snr_q) = exact_snr(&cfg)?;
        println!("{rate:>8} {snr_c:>10.2e} {snr_q:>10.3} {:>9.1} {:>11.1}", qef(snr_q, snr_c)?, companion_g2(&cfg));
    }

    // The transmission product and background cancel in the ratio.
    let p = click_probabilities(&base.source, &base.channel, true);
    for (eta, pb) in [(1.0, 1e-4), (0.01, 3e-3)] {
        let q = qef(
            expected_snr_quantum(eta, p.p_coincidence, p.p_herald, pb)?,
            expected_snr_classical(eta, p.p_signal, pb)?,
        )?;
        println!("eta={eta}, P_b={pb}: QEF = {q:.3} (g2 = {:.3})", p.g2());
    }
    Ok(())
}
