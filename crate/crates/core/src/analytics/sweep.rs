//! Parameter sweeps with target-shutter toggling.
//!
//! Each row alternates target-in and target-out segments of
//! `toggle_period_pulses`, accumulates both tallies, and derives the
//! classical (singles) and quantum (coincidence) SNRs and their ratio.
//! A companion acquisition with the jammer blocked supplies g² at the
//! same μ for comparison.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use super::{qef_from_results, snr_from_counts, SnrKind, SnrResult};
use crate::channel::CountSampler;
use crate::correlator::{estimate_g2, G2Estimate};
use crate::error::{Error, Result};
use crate::model::{validate_config, ClickCounts, ExperimentConfig};
use crate::rng::substream;

const SWEEP_STREAM: u64 = 0x0053_5745_4550;

pub const SWEEP_CSV_HEADER: [&str; 12] = [
    "value",
    "n_in_singles",
    "n_out_singles",
    "n_in_coinc",
    "n_out_coinc",
    "snr_c",
    "snr_c_err",
    "snr_q",
    "snr_q_err",
    "qef",
    "g2",
    "g2_err",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// Mean pairs per pulse.
    Mu,
    /// Jamming detections per bin.
    Background,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Mu => "mu",
            SweepVariable::Background => "background",
        }
    }

    fn apply(self, config: ExperimentConfig, value: f64) -> ExperimentConfig {
        match self {
            SweepVariable::Mu => config.with_mu(value),
            SweepVariable::Background => config.with_background(value),
        }
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu" => Ok(SweepVariable::Mu),
            "background" => Ok(SweepVariable::Background),
            other => Err(Error::InvalidArgument(format!("unknown sweep variable {other:?}"))),
        }
    }
}

/// One sweep point. Derived quantities are `None` when undefined for this
/// row; the reasons are kept in `errors`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub counts_in: ClickCounts,
    pub counts_out: ClickCounts,
    pub companion: ClickCounts,
    pub classical: Option<SnrResult>,
    pub quantum: Option<SnrResult>,
    /// (QEF, standard error)
    pub qef: Option<(f64, f64)>,
    pub g2: Option<G2Estimate>,
    pub errors: Vec<String>,
}

impl SweepRow {
    fn failed(value: f64, error: String) -> Self {
        SweepRow {
            value,
            counts_in: ClickCounts::empty(true),
            counts_out: ClickCounts::empty(false),
            companion: ClickCounts::empty(true),
            classical: None,
            quantum: None,
            qef: None,
            g2: None,
            errors: vec![error],
        }
    }

    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub variable: SweepVariable,
    pub rows: Vec<SweepRow>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), |x| x.to_string())
}

impl SweepTable {
    /// Column of a derived quantity, in row order.
    pub fn column(&self, f: impl Fn(&SweepRow) -> Option<f64>) -> Vec<Option<f64>> {
        self.rows.iter().map(f).collect()
    }

    /// CSV export; undefined entries are written as `NaN`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(SWEEP_CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.value.to_string(),
                r.counts_in.n_signal_clicks.to_string(),
                r.counts_out.n_signal_clicks.to_string(),
                r.counts_in.n_coincidences.to_string(),
                r.counts_out.n_coincidences.to_string(),
                fmt_opt(r.classical.map(|s| s.value)),
                fmt_opt(r.classical.map(|s| s.std_err)),
                fmt_opt(r.quantum.map(|s| s.value)),
                fmt_opt(r.quantum.map(|s| s.std_err)),
                fmt_opt(r.qef.map(|q| q.0)),
                fmt_opt(r.g2.map(|g| g.value)),
                fmt_opt(r.g2.map(|g| g.std_err)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn keep<T>(errors: &mut Vec<String>, r: Result<T>) -> Option<T> {
    r.map_err(|e| errors.push(e.to_string())).ok()
}

fn run_row(config: &ExperimentConfig, variable: SweepVariable, index: u64, value: f64, dwell_pulses: u64) -> SweepRow {
    let config = match validate_config(variable.apply(*config, value)) {
        Ok(c) => c,
        Err(e) => return SweepRow::failed(value, e.to_string()),
    };
    let toggle = config.toggle_period_pulses;
    let pairs = dwell_pulses / (2 * toggle);

    let mut rng = substream(config.seed, &[SWEEP_STREAM, index, 0]);
    let target_in = CountSampler::new(&config, true);
    let target_out = CountSampler::new(&config, false);
    let mut counts_in = ClickCounts::empty(true);
    let mut counts_out = ClickCounts::empty(false);
    for _ in 0..pairs {
        counts_in += target_in.sample(toggle, &mut rng);
        counts_out += target_out.sample(toggle, &mut rng);
    }

    let blocked = config.with_background(0.0);
    let mut companion_rng = substream(config.seed, &[SWEEP_STREAM, index, 1]);
    let companion = CountSampler::new(&blocked, true).sample(dwell_pulses, &mut companion_rng);

    let mut errors = Vec::new();
    let classical = keep(&mut errors, snr_from_counts(counts_in.n_signal_clicks, counts_out.n_signal_clicks))
        .map(|s| s.with_kind(SnrKind::Classical));
    let quantum = keep(&mut errors, snr_from_counts(counts_in.n_coincidences, counts_out.n_coincidences))
        .map(|s| s.with_kind(SnrKind::Quantum));
    let qef = match (&quantum, &classical) {
        (Some(q), Some(c)) => keep(&mut errors, qef_from_results(q, c)),
        _ => None,
    };
    let g2 = keep(&mut errors, estimate_g2(&companion));

    SweepRow {
        value,
        counts_in,
        counts_out,
        companion,
        classical,
        quantum,
        qef,
        g2,
        errors,
    }
}

/// Runs every sweep point with `dwell_pulses` split evenly between target
/// in and out. A remainder shorter than one in/out pair is not simulated.
/// Row failures are recorded in the row; only bad arguments abort.
pub fn run_sweep(
    config: &ExperimentConfig,
    variable: SweepVariable,
    values: &[f64],
    dwell_pulses: u64,
) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    if config.toggle_period_pulses == 0 || dwell_pulses < 2 * config.toggle_period_pulses {
        return Err(Error::InvalidArgument(format!(
            "dwell of {dwell_pulses} pulses is shorter than one in/out toggle pair"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rows = sorted
        .par_iter()
        .enumerate()
        .map(|(i, &v)| run_row(config, variable, i as u64, v, dwell_pulses))
        .collect();
    Ok(SweepTable { variable, rows })
}
