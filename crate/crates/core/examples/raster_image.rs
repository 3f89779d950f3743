//! Raster-scanned CI and QI images of a two-level scene, without and with
//! a 14,000 /s jammer. Writes PGM and CSV files into the given directory.
//!
//!     cargo run --release --example raster_image [-- out_dir]

use std::fs::File;
use std::path::{Path, PathBuf};

use qisim::imaging::{contrast, interpolate4, raster_scan, PixelImage, Scene};
use qisim::model::per_bin_from_pulsed_rate;
use qisim::ExperimentConfig;

fn save(img: &PixelImage, dir: &Path, name: &str) -> qisim::Result<()> {
    interpolate4(img)?.write_pgm(File::create(dir.join(format!("{name}.pgm")))?)?;
    img.write_csv(File::create(dir.join(format!("{name}.csv")))?)
}

fn main() -> qisim::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    std::fs::create_dir_all(&dir)?;

    // A ring on a black background.
    let scene = Scene::two_level(16, 16, 1.0, 0.0, |r, c| {
        let d2 = (r as f64 - 7.5).powi(2) + (c as f64 - 7.5).powi(2);
        (9.0..36.0).contains(&d2)
    })?;
    let mask = scene.mask_above(0.5);
    let cfg = ExperimentConfig::paper_default().with_mu(7.9e-3);
    let jammed = cfg.with_background(per_bin_from_pulsed_rate(14_000.0, cfg.source.rep_rate_hz));

    for (label, c, seconds) in [
        ("dark_1s", cfg.with_background(0.0), 1.0),
        ("jam_1000s", jammed, 1000.0),
        ("jam_6000s", jammed, 6000.0),
    ] {
        let (ci, qi) = raster_scan(&scene, &c, c.seconds_to_pulses(seconds), c.seed)?;
        println!("{label:>10}: CI contrast {:6.2}   QI contrast {:6.2}", contrast(&ci, &mask)?, contrast(&qi, &mask)?);
        save(&ci, &dir, &format!("{label}_ci"))?;
        save(&qi, &dir, &format!("{label}_qi"))?;
    }
    println!("images written to {}", dir.display());
    Ok(())
}
