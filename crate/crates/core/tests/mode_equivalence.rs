use qisim::analytics::{click_probabilities, companion_g2, exact_qef, qef_from_results, snr_from_counts};
use qisim::channel::{simulate_counts, simulate_tags, TimeTagStream};
use qisim::correlator::{bin_and_count, estimate_g2};
use qisim::model::{ClickCounts, ExperimentConfig};
use qisim::rng::substream;

fn patterns(c: &ClickCounts) -> [f64; 4] {
    let both = c.n_coincidences;
    let s = c.n_signal_clicks - both;
    let h = c.n_herald_clicks - both;
    [both, s, h, c.n_pulses - both - s - h].map(|x| x as f64)
}

fn bright() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::paper_default().direct_fiber().with_mu(0.05);
    cfg.source.eta_herald = 0.4;
    cfg.source.noise_herald_per_bin = 0.01;
    cfg.channel.background_per_bin = 0.02;
    cfg.channel.dark_signal_per_bin = 0.005;
    cfg
}

#[test]
fn tag_mode_matches_closed_form() {
    let cfg = bright();
    let n = 400_000;
    for target_in in [true, false] {
        let stream = simulate_tags(&cfg, target_in, n, &mut substream(11, &[target_in as u64]));
        let counts = bin_and_count(&stream, cfg.channel.bin_width_ps, cfg.source.pulse_period_ps()).unwrap();
        assert_eq!(counts.n_pulses, n);
        let p = click_probabilities(&cfg.source, &cfg.channel, target_in).patterns();
        for (x, pi) in patterns(&counts).iter().zip(p) {
            let sd = (n as f64 * pi * (1.0 - pi)).sqrt();
            assert!((x - n as f64 * pi).abs() <= 4.0 * sd, "target_in={target_in}: {x} vs {}", n as f64 * pi);
        }
    }
}

#[test]
fn tag_files_round_trip_through_correlator() {
    let cfg = bright();
    let stream = simulate_tags(&cfg, true, 20_000, &mut substream(12, &[]));
    let mut buf = Vec::new();
    stream.write_qitt(&mut buf).unwrap();
    let back = TimeTagStream::read_qitt(buf.as_slice()).unwrap();
    let (w, t) = (cfg.channel.bin_width_ps, cfg.source.pulse_period_ps());
    assert_eq!(bin_and_count(&back, w, t).unwrap(), bin_and_count(&stream, w, t).unwrap());
}

#[test]
fn monte_carlo_qef_converges_to_g2() {
    // 1e9 pulses in total across in/out, on a channel bright enough that
    // both SNRs are resolved.
    let mut cfg = ExperimentConfig::paper_default().direct_fiber().with_mu(0.01);
    cfg.channel.dark_signal_per_bin = 0.0;
    cfg.channel.background_per_bin = 1e-3;
    let half = 500_000_000;
    let on = simulate_counts(&cfg, true, half, &mut substream(13, &[1]));
    let off = simulate_counts(&cfg, false, half, &mut substream(13, &[2]));
    let c = snr_from_counts(on.n_signal_clicks, off.n_signal_clicks).unwrap();
    let q = snr_from_counts(on.n_coincidences, off.n_coincidences).unwrap();
    let (qef, _) = qef_from_results(&q, &c).unwrap();
    let g2 = companion_g2(&cfg);
    assert!((qef - g2).abs() / g2 < 0.10, "QEF {qef} vs g2 {g2}");
    assert!((exact_qef(&cfg).unwrap() - g2).abs() / g2 < 1e-3);

    let companion = simulate_counts(&cfg.with_background(0.0), true, half, &mut substream(13, &[3]));
    let measured = estimate_g2(&companion).unwrap();
    assert!((measured.value - g2).abs() <= 4.0 * measured.std_err);
}

#[test]
fn signal_darks_lower_g2_but_not_qef() {
    let mut cfg = ExperimentConfig::paper_default().with_background(1.25e-4);
    let clean = {
        cfg.channel.dark_signal_per_bin = 0.0;
        cfg
    };
    cfg.channel.dark_signal_per_bin = 2e-7;
    let q0 = exact_qef(&clean).unwrap();
    let q1 = exact_qef(&cfg).unwrap();
    assert!((q0 - q1).abs() / q0 < 1e-3);
    assert!(companion_g2(&cfg) < 0.8 * companion_g2(&clean));
}
