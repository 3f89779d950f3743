//! Raster-scan imaging of a reflectivity scene. Each pixel is an
//! independent acquisition; singles give the classical image and
//! coincidences from the same acquisition give the quantum image.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use crate::channel::CountSampler;
use crate::error::{Error, Result};
use crate::model::ExperimentConfig;
use crate::rng::substream;

const IMAGE_STREAM: u64 = 0x0049_4d41_4745;

/// Returned by [`contrast`] when both classes have zero variance but
/// different means.
pub const INFINITE_CONTRAST: f64 = f64::INFINITY;

/// Row-major grid of target reflectivities in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    height: usize,
    width: usize,
    reflectivity: Vec<f64>,
    /// Pixel pitch in arbitrary units.
    pub pitch: f64,
}

impl Scene {
    pub fn new(height: usize, width: usize, reflectivity: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::BadScene("scene must be at least 1×1".into()));
        }
        if reflectivity.len() != height * width {
            return Err(Error::BadScene(format!(
                "expected {} pixels, got {}",
                height * width,
                reflectivity.len()
            )));
        }
        if let Some(v) = reflectivity.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::BadScene(format!("reflectivity {v} outside [0, 1]")));
        }
        Ok(Scene {
            height,
            width,
            reflectivity,
            pitch: 1.0,
        })
    }

    /// Scene taking `fg` where `is_foreground(row, col)` holds and `bg` elsewhere.
    pub fn two_level(
        height: usize,
        width: usize,
        fg: f64,
        bg: f64,
        is_foreground: impl Fn(usize, usize) -> bool,
    ) -> Result<Self> {
        let values = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .map(|(r, c)| if is_foreground(r, c) { fg } else { bg })
            .collect();
        Self::new(height, width, values)
    }

    /// Parses a plain-text (P2) graymap; reflectivity is gray / maxval.
    pub fn from_pgm(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        if tokens.next() != Some("P2") {
            return Err(Error::BadScene("not a plain PGM (P2) file".into()));
        }
        let mut header = |what: &str| -> Result<usize> {
            tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::BadScene(format!("missing or invalid {what}")))
        };
        let width = header("width")?;
        let height = header("height")?;
        let maxval = header("maxval")?;
        if maxval == 0 || maxval > 65_535 {
            return Err(Error::BadScene(format!("maxval {maxval} out of range")));
        }
        let values = tokens
            .map(|t| {
                t.parse::<usize>()
                    .ok()
                    .filter(|&g| g <= maxval)
                    .map(|g| g as f64 / maxval as f64)
                    .ok_or_else(|| Error::BadScene(format!("bad gray value {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(height, width, values)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.reflectivity[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.reflectivity
    }

    /// Pixels brighter than `threshold`.
    pub fn mask_above(&self, threshold: f64) -> Vec<bool> {
        self.reflectivity.iter().map(|&v| v > threshold).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageKind {
    /// Singles counts (classical illumination).
    Ci,
    /// Coincidence counts (quantum illumination).
    Qi,
}

/// Row-major grid of non-negative counts or rates.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelImage {
    height: usize,
    width: usize,
    values: Vec<f64>,
    pub dwell_pulses: u64,
    pub kind: ImageKind,
}

impl PixelImage {
    pub fn new(height: usize, width: usize, values: Vec<f64>, dwell_pulses: u64, kind: ImageKind) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::InvalidArgument(format!(
                "image of {height}×{width} needs {} values, got {}",
                height * width,
                values.len()
            )));
        }
        Ok(PixelImage {
            height,
            width,
            values,
            dwell_pulses,
            kind,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PixelImage {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    /// Plain PGM (P2) with values rescaled linearly so the maximum maps to 65535.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        let max = self.values.iter().cloned().fold(0.0f64, f64::max);
        let mut out = format!("P2\n{} {}\n65535\n", self.width, self.height);
        for row in self.values.chunks(self.width) {
            let line: Vec<String> = row
                .iter()
                .map(|&v| {
                    let g = if max > 0.0 { (v / max * 65_535.0).round() } else { 0.0 };
                    (g as u32).to_string()
                })
                .collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        w.write_all(out.as_bytes())?;
        Ok(())
    }

    /// Unscaled values, one image row per line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut out = String::new();
        for row in self.values.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        w.write_all(out.as_bytes())?;
        Ok(())
    }
}

/// Scans the target across the fixed beam. Pixel `(r, c)` uses the RNG
/// substream `(seed, r, c)`, so the images do not depend on thread count.
/// Returns the (CI, QI) pair.
pub fn raster_scan(
    scene: &Scene,
    config: &ExperimentConfig,
    dwell_pulses: u64,
    seed: u64,
) -> Result<(PixelImage, PixelImage)> {
    if dwell_pulses == 0 {
        return Err(Error::InvalidArgument("dwell must be at least one pulse".into()));
    }
    let (h, w) = (scene.height(), scene.width());
    let pixels: Vec<(f64, f64)> = (0..h * w)
        .into_par_iter()
        .map(|i| {
            let (r, c) = (i / w, i % w);
            let mut cfg = *config;
            cfg.channel.target_reflectivity = scene.get(r, c);
            let mut rng = substream(seed, &[IMAGE_STREAM, r as u64, c as u64]);
            let counts = CountSampler::new(&cfg, true).sample(dwell_pulses, &mut rng);
            (counts.n_signal_clicks as f64, counts.n_coincidences as f64)
        })
        .collect();
    let (ci, qi): (Vec<f64>, Vec<f64>) = pixels.into_iter().unzip();
    Ok((
        PixelImage::new(h, w, ci, dwell_pulses, ImageKind::Ci)?,
        PixelImage::new(h, w, qi, dwell_pulses, ImageKind::Qi)?,
    ))
}

/// 2× bilinear upsampling to (2H−1)×(2W−1). Original samples stay at even
/// indices; inserted samples average their 2 edge or 4 face neighbours.
pub fn interpolate4(image: &PixelImage) -> Result<PixelImage> {
    let (h, w) = (image.height(), image.width());
    if h < 2 || w < 2 {
        return Err(Error::InvalidArgument(format!(
            "interpolation needs at least 2×2 pixels, got {h}×{w}"
        )));
    }
    let (oh, ow) = (2 * h - 1, 2 * w - 1);
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            let rows = if r % 2 == 0 { [r / 2, r / 2] } else { [r / 2, r / 2 + 1] };
            let cols = if c % 2 == 0 { [c / 2, c / 2] } else { [c / 2, c / 2 + 1] };
            let sum: f64 = rows
                .iter()
                .flat_map(|&rr| cols.iter().map(move |&cc| image.get(rr, cc)))
                .sum();
            out[r * ow + c] = sum / 4.0;
        }
    }
    PixelImage::new(oh, ow, out, image.dwell_pulses, image.kind)
}

fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// (mean_fg − mean_bg) / √((var_fg + var_bg) / 2) with sample variances.
/// Zero when both classes are constant and equal; ±[`INFINITE_CONTRAST`]
/// when both are constant and differ.
pub fn contrast(image: &PixelImage, foreground_mask: &[bool]) -> Result<f64> {
    if foreground_mask.len() != image.values().len() {
        return Err(Error::InvalidArgument("mask size does not match image".into()));
    }
    let (fg, bg): (Vec<(f64, bool)>, Vec<(f64, bool)>) = image
        .values()
        .iter()
        .copied()
        .zip(foreground_mask.iter().copied())
        .partition(|&(_, m)| m);
    if fg.is_empty() || bg.is_empty() {
        return Err(Error::InvalidArgument("contrast needs foreground and background pixels".into()));
    }
    let fg: Vec<f64> = fg.into_iter().map(|p| p.0).collect();
    let bg: Vec<f64> = bg.into_iter().map(|p| p.0).collect();
    let (mf, vf) = mean_var(&fg);
    let (mb, vb) = mean_var(&bg);
    let spread = ((vf + vb) / 2.0).sqrt();
    if spread == 0.0 {
        return Ok(if mf == mb {
            0.0
        } else {
            INFINITE_CONTRAST.copysign(mf - mb)
        });
    }
    Ok((mf - mb) / spread)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::poisson;
    use approx::assert_relative_eq;

    fn image(h: usize, w: usize, values: Vec<f64>) -> PixelImage {
        PixelImage::new(h, w, values, 1, ImageKind::Ci).unwrap()
    }

    #[test]
    fn interpolation_examples() {
        let out = interpolate4(&image(2, 2, vec![0.0, 2.0, 2.0, 4.0])).unwrap();
        assert_eq!((out.height(), out.width()), (3, 3));
        assert_eq!(out.values(), &[0.0, 1.0, 2.0, 1.0, 2.0, 3.0, 2.0, 3.0, 4.0]);

        let out = interpolate4(&image(3, 4, vec![7.5; 12])).unwrap();
        assert_eq!((out.height(), out.width()), (5, 7));
        assert!(out.values().iter().all(|&v| v == 7.5));

        assert!(interpolate4(&image(1, 4, vec![1.0; 4])).is_err());
    }

    #[test]
    fn interpolation_keeps_original_samples() {
        let src: Vec<f64> = (0..12).map(|i| (i * i) as f64).collect();
        let img = image(3, 4, src);
        let out = interpolate4(&img).unwrap();
        for r in 0..3 {
            for c in 0..4 {
                assert_eq!(out.get(2 * r, 2 * c), img.get(r, c));
            }
        }
    }

    #[test]
    fn contrast_degenerate_cases() {
        let mask = vec![true, true, false, false];
        assert_eq!(contrast(&image(2, 2, vec![3.0; 4]), &mask).unwrap(), 0.0);
        let c = contrast(&image(2, 2, vec![10.0, 10.0, 0.0, 0.0]), &mask).unwrap();
        assert_eq!(c, INFINITE_CONTRAST);
        let c = contrast(&image(2, 2, vec![0.0, 0.0, 10.0, 10.0]), &mask).unwrap();
        assert_eq!(c, -INFINITE_CONTRAST);
        assert!(contrast(&image(2, 2, vec![1.0; 4]), &[true; 4]).is_err());
        assert!(contrast(&image(2, 2, vec![1.0; 4]), &[true; 3]).is_err());
    }

    #[test]
    fn contrast_of_poisson_classes() {
        // Oracle: Poisson mean equals variance, so the expected contrast is
        // (20 − 10) / √((20 + 10) / 2).
        let mut rng = substream(31, &[]);
        let n = 1000;
        let values: Vec<f64> = (0..2 * n)
            .map(|i| poisson(if i < n { 20.0 } else { 10.0 }, &mut rng) as f64)
            .collect();
        let mask: Vec<bool> = (0..2 * n).map(|i| i < n).collect();
        let c = contrast(&image(2, n, values), &mask).unwrap();
        let expected = 10.0 / 15f64.sqrt();
        // Delta-method sd of the estimator: mean part √(15·2/1000)/√15 ≈ 0.045,
        // variance part ≈ c·√(2/1000)/2·(…); 0.05 bounds both.
        assert!((c - expected).abs() < 4.0 * 0.05, "{c} vs {expected}");
    }

    #[test]
    fn contrast_is_scale_invariant() {
        let img = image(2, 3, vec![5.0, 7.0, 6.0, 1.0, 2.0, 4.0]);
        let mask = vec![true, true, true, false, false, false];
        let c = contrast(&img, &mask).unwrap();
        for k in [0.01, 3.0, 1e6] {
            assert_relative_eq!(contrast(&img.scaled(k), &mask).unwrap(), c, max_relative = 1e-12);
        }
    }

    #[test]
    fn pgm_parse() {
        let text = "P2\n# comment\n3 2\n255\n0 255 51\n255 0 0\n";
        let s = Scene::from_pgm(text).unwrap();
        assert_eq!((s.height(), s.width()), (2, 3));
        assert_eq!(s.get(0, 1), 1.0);
        assert_relative_eq!(s.get(0, 2), 0.2);
        assert!(Scene::from_pgm("P5\n1 1\n255\n0").is_err());
        assert!(Scene::from_pgm("P2\n2 2\n255\n0 0 0").is_err());
        assert!(Scene::from_pgm("P2\n1 1\n255\n300").is_err());
        assert!(Scene::from_pgm("P2\n1 1\n255\nx").is_err());
    }

    #[test]
    fn pgm_and_csv_output() {
        let img = image(2, 2, vec![0.0, 1.0, 2.0, 4.0]);
        let mut pgm = Vec::new();
        img.write_pgm(&mut pgm).unwrap();
        assert_eq!(String::from_utf8(pgm).unwrap(), "P2\n2 2\n65535\n0 16384\n32768 65535\n");
        let mut csv = Vec::new();
        img.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "0,1\n2,4\n");
        let mut blank = Vec::new();
        image(1, 2, vec![0.0, 0.0]).write_pgm(&mut blank).unwrap();
        assert!(String::from_utf8(blank).unwrap().ends_with("\n0 0\n"));
    }

    #[test]
    fn dark_quiet_scan_is_blank() {
        let mut cfg = ExperimentConfig::paper_default().with_mu(0.0);
        cfg.source.noise_herald_per_bin = 0.0;
        cfg.channel.dark_signal_per_bin = 0.0;
        let scene = Scene::new(4, 4, vec![0.7; 16]).unwrap();
        let (ci, qi) = raster_scan(&scene, &cfg, 80_000_000, 1).unwrap();
        assert!(ci.values().iter().chain(qi.values()).all(|&v| v == 0.0));
        assert!(raster_scan(&scene, &cfg, 0, 1).is_err());
    }

    #[test]
    fn black_scene_gives_accidentals_only() {
        let cfg = ExperimentConfig::paper_default()
            .with_mu(7.9e-3)
            .with_background(14_000.0 / 80e6);
        let scene = Scene::new(16, 16, vec![0.0; 256]).unwrap();
        let dwell = 800_000_000;
        let (_, qi) = raster_scan(&scene, &cfg, dwell, 3).unwrap();
        let p = crate::analytics::click_probabilities(&cfg.source, &cfg.channel, false);
        let expected = p.p_herald * p.p_background * dwell as f64;
        let mean = qi.values().iter().sum::<f64>() / 256.0;
        let sigma = (expected / 256.0).sqrt();
        assert!((mean - expected).abs() < 4.0 * sigma, "{mean} vs {expected}");
    }
}
