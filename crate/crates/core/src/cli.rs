//! Command-line front end. The binary only forwards to [`run`]; keeping the
//! logic here makes it testable in-process.
//!
//! Exit codes: 0 success, 2 usage error, 3 configuration or input error,
//! 4 I/O error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{run_sweep, SweepVariable};
use crate::channel::{simulate_tags, CountSampler, TimeTagStream};
use crate::correlator::{bin_and_count, estimate_g2};
use crate::error::Error;
use crate::imaging::{contrast, interpolate4, raster_scan, PixelImage, Scene};
use crate::model::{per_bin_from_pulsed_rate, validate_config, ExperimentConfig, Preset};
use crate::rng::substream;

pub const CONFIG_ENV: &str = "QISIM_CONFIG";
pub const DEFAULT_LEDGER: &str = "qisim-runs.jsonl";

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_IO: u8 = 4;

const CHARACTERIZE_STREAM: u64 = 0x4348_4152;
const TAGS_STREAM: u64 = 0x5441_4753;

#[derive(Debug, Parser)]
#[command(name = "qisim", version, about = "Correlated-photon standoff detection simulator")]
pub struct Cli {
    /// JSON experiment configuration. Falls back to $QISIM_CONFIG, then to --preset.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Built-in configuration used when no config file is given.
    #[arg(long, global = true, default_value = "paper-default")]
    pub preset: String,
    /// Overrides the seed of the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Maximum worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON-lines run ledger. Defaults to qisim-runs.jsonl next to the output.
    #[arg(long, global = true)]
    pub ledger: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Singles, coincidences and g² against μ with the signal fiber on its detector.
    Characterize(CharacterizeArgs),
    /// Target-toggled SNR sweep over μ or jamming rate.
    Sweep(SweepArgs),
    /// Raster-scan CI and QI images of a PGM scene.
    Image(ImageArgs),
    /// Simulate a time-tag stream and write it to a file.
    Tags(TagsArgs),
    /// Bin a time-tag file into singles, coincidences and g².
    Correlate(CorrelateArgs),
}

#[derive(Debug, Args)]
pub struct CharacterizeArgs {
    /// Mean pairs per pulse, comma separated.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1, allow_hyphen_values = true)]
    pub mu: Vec<f64>,
    /// Acquisition time per point, seconds.
    #[arg(long, default_value_t = 60.0)]
    pub dwell_s: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// `mu` or `background`.
    #[arg(long)]
    pub variable: String,
    /// Sweep values. Background values are detected jamming counts per second.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1, allow_hyphen_values = true)]
    pub values: Vec<f64>,
    /// Total acquisition per point (target in plus out), seconds.
    #[arg(long, default_value_t = 2000.0)]
    pub dwell_s: f64,
    /// Background for a μ sweep, detected jamming counts per second.
    #[arg(long)]
    pub background_hz: Option<f64>,
    /// μ for a background sweep.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ImageArgs {
    /// Plain PGM (P2) reflectivity scene.
    #[arg(long)]
    pub scene: PathBuf,
    /// Integration time per pixel, seconds.
    #[arg(long, default_value_t = 1.0)]
    pub dwell_s: f64,
    /// Jamming counts per second.
    #[arg(long)]
    pub background_hz: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Output prefix; writes <prefix>_ci.pgm, _qi.pgm, _ci.csv and _qi.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TagsArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub pulses: u64,
    /// Simulate with the target removed.
    #[arg(long)]
    pub target_out: bool,
    /// Output file; `.csv` selects the text format, anything else QITT.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// QITT or CSV (by extension) tag file.
    #[arg(long)]
    pub input: PathBuf,
    /// Bin width, picoseconds. Defaults to the configuration's.
    #[arg(long)]
    pub bin_ps: Option<u64>,
    /// Summary JSON output.
    #[arg(long)]
    pub out: PathBuf,
}

/// A command failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError {
            code: EXIT_IO,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Csv(_) => EXIT_IO,
            Error::InvalidArgument(_) => EXIT_USAGE,
            _ => EXIT_CONFIG,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

/// One line of the run ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub config_digest: String,
    pub seed: u64,
    pub command: String,
    pub outputs: Vec<String>,
    pub summary: BTreeMap<String, f64>,
}

/// SHA-256 of the canonical JSON form of a configuration. Object keys are
/// emitted sorted, so the digest ignores key order in the source file.
pub fn config_digest(config: &ExperimentConfig) -> String {
    let value = serde_json::to_value(config).expect("config serializes");
    let canonical = serde_json::to_vec(&value).expect("value serializes");
    hex::encode(Sha256::digest(&canonical))
}

/// Appends one record; existing lines are never rewritten.
pub fn append_record(ledger: &Path, record: &RunRecord) -> std::io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(ledger)?;
    let mut line = serde_json::to_string(record).map_err(std::io::Error::other)?;
    line.push('\n');
    f.write_all(line.as_bytes())
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            ExperimentConfig::from_json(&text).map_err(|e| CliError::config(format!("invalid config: {e}")))?
        }
        None => cli
            .preset
            .parse::<Preset>()
            .map_err(|e| CliError::usage(e.to_string()))?
            .config(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    validate_config(config).map_err(|e| CliError::config(format!("invalid config: {e}")))
}

fn dwell_pulses(config: &ExperimentConfig, seconds: f64) -> Result<u64, CliError> {
    if !(seconds.is_finite() && seconds > 0.0) {
        return Err(CliError::usage(format!("dwell must be positive, got {seconds}")));
    }
    Ok(config.seconds_to_pulses(seconds).max(1))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn fmt_or_nan(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".into(), |x| x.to_string())
}

pub const CHARACTERIZE_CSV_HEADER: &str =
    "mu,n_pulses,n_signal,n_herald,n_coinc,signal_hz,herald_hz,coinc_hz,g2,g2_err";

fn characterize(config: &ExperimentConfig, args: &CharacterizeArgs) -> Result<(Vec<String>, BTreeMap<String, f64>), CliError> {
    if args.mu.is_empty() {
        return Err(CliError::usage("at least one --mu value is required"));
    }
    let direct = config.direct_fiber();
    let pulses = dwell_pulses(config, args.dwell_s)?;
    let seconds = pulses as f64 / config.source.rep_rate_hz;
    let mut lines = vec![CHARACTERIZE_CSV_HEADER.to_string()];
    let mut g2_values = Vec::new();
    for (i, &mu) in args.mu.iter().enumerate() {
        let cfg = validate_config(direct.with_mu(mu)).map_err(|e| CliError::config(format!("invalid config: {e}")))?;
        let mut rng = substream(cfg.seed, &[CHARACTERIZE_STREAM, i as u64]);
        let c = CountSampler::new(&cfg, true).sample(pulses, &mut rng);
        let g2 = estimate_g2(&c).ok();
        g2_values.extend(g2.map(|g| g.value));
        lines.push(format!(
            "{mu},{},{},{},{},{},{},{},{},{}",
            c.n_pulses,
            c.n_signal_clicks,
            c.n_herald_clicks,
            c.n_coincidences,
            c.n_signal_clicks as f64 / seconds,
            c.n_herald_clicks as f64 / seconds,
            c.n_coincidences as f64 / seconds,
            fmt_or_nan(g2.map(|g| g.value)),
            fmt_or_nan(g2.map(|g| g.std_err)),
        ));
    }
    let mut text = lines.join("\n");
    text.push('\n');
    fs::write(&args.out, text).map_err(|e| CliError::io(&args.out, e))?;

    let mut summary = BTreeMap::new();
    summary.insert("points".into(), args.mu.len() as f64);
    if let Some(max) = g2_values.iter().cloned().reduce(f64::max) {
        summary.insert("g2_max".into(), max);
    }
    Ok((vec![args.out.display().to_string()], summary))
}

fn sweep(config: &ExperimentConfig, args: &SweepArgs) -> Result<(Vec<String>, BTreeMap<String, f64>), CliError> {
    let variable: SweepVariable = args.variable.parse().map_err(|e: Error| CliError::usage(e.to_string()))?;
    let rep = config.source.rep_rate_hz;
    let mut base = *config;
    if let Some(bg) = args.background_hz {
        base = base.with_background(per_bin_from_pulsed_rate(bg, rep));
    }
    if let Some(mu) = args.mu {
        base = base.with_mu(mu);
    }
    let values: Vec<f64> = match variable {
        SweepVariable::Mu => args.values.clone(),
        SweepVariable::Background => args.values.iter().map(|&hz| per_bin_from_pulsed_rate(hz, rep)).collect(),
    };
    let pulses = dwell_pulses(config, args.dwell_s)?;
    let table = run_sweep(&base, variable, &values, pulses)?;

    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    fs::write(&args.out, buf).map_err(|e| CliError::io(&args.out, e))?;

    let ok = table.rows.iter().filter(|r| r.is_ok()).count();
    for r in table.rows.iter().filter(|r| !r.is_ok()) {
        eprintln!("row {}: {}", r.value, r.errors.join("; "));
    }
    if ok == 0 {
        return Err(CliError::config("every sweep row failed"));
    }
    let mut summary = BTreeMap::new();
    summary.insert("rows".into(), table.rows.len() as f64);
    summary.insert("rows_ok".into(), ok as f64);
    Ok((vec![args.out.display().to_string()], summary))
}

fn image_paths(prefix: &Path) -> [PathBuf; 4] {
    let p = prefix.display().to_string();
    [
        PathBuf::from(format!("{p}_ci.pgm")),
        PathBuf::from(format!("{p}_qi.pgm")),
        PathBuf::from(format!("{p}_ci.csv")),
        PathBuf::from(format!("{p}_qi.csv")),
    ]
}

fn write_image(img: &PixelImage, pgm: &Path, csv: &Path) -> Result<(), CliError> {
    let smooth = if img.height() >= 2 && img.width() >= 2 {
        interpolate4(img)?
    } else {
        img.clone()
    };
    let mut w = create(pgm)?;
    smooth.write_pgm(&mut w).map_err(|e| CliError::io(pgm, e))?;
    w.flush().map_err(|e| CliError::io(pgm, e))?;
    let mut w = create(csv)?;
    img.write_csv(&mut w).map_err(|e| CliError::io(csv, e))?;
    w.flush().map_err(|e| CliError::io(csv, e))
}

fn image(config: &ExperimentConfig, args: &ImageArgs) -> Result<(Vec<String>, BTreeMap<String, f64>), CliError> {
    let text = fs::read_to_string(&args.scene).map_err(|e| CliError::io(&args.scene, e))?;
    let scene = Scene::from_pgm(&text).map_err(|e| CliError::config(e.to_string()))?;
    let mut cfg = *config;
    if let Some(bg) = args.background_hz {
        cfg = cfg.with_background(per_bin_from_pulsed_rate(bg, cfg.source.rep_rate_hz));
    }
    if let Some(mu) = args.mu {
        cfg = cfg.with_mu(mu);
    }
    let cfg = validate_config(cfg).map_err(|e| CliError::config(format!("invalid config: {e}")))?;
    let pulses = dwell_pulses(&cfg, args.dwell_s)?;
    let (ci, qi) = raster_scan(&scene, &cfg, pulses, cfg.seed)?;

    let [ci_pgm, qi_pgm, ci_csv, qi_csv] = image_paths(&args.out);
    write_image(&ci, &ci_pgm, &ci_csv)?;
    write_image(&qi, &qi_pgm, &qi_csv)?;

    let mut summary = BTreeMap::new();
    let (lo, hi) = scene
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi > lo {
        let mask = scene.mask_above((lo + hi) / 2.0);
        summary.insert("ci_contrast".into(), contrast(&ci, &mask)?);
        summary.insert("qi_contrast".into(), contrast(&qi, &mask)?);
    }
    summary.insert("dwell_pulses".into(), pulses as f64);
    let outputs = [ci_pgm, qi_pgm, ci_csv, qi_csv]
        .iter()
        .map(|p| p.display().to_string())
        .collect();
    Ok((outputs, summary))
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn tags(config: &ExperimentConfig, args: &TagsArgs) -> Result<(Vec<String>, BTreeMap<String, f64>), CliError> {
    if args.pulses == 0 {
        return Err(CliError::usage("--pulses must be at least 1"));
    }
    let mut rng = substream(config.seed, &[TAGS_STREAM]);
    let stream = simulate_tags(config, !args.target_out, args.pulses, &mut rng);
    let w = create(&args.out)?;
    if is_csv(&args.out) {
        stream.write_csv(w)?;
    } else {
        stream.write_qitt(w)?;
    }
    let mut summary = BTreeMap::new();
    summary.insert("tags".into(), stream.len() as f64);
    Ok((vec![args.out.display().to_string()], summary))
}

fn correlate(config: &ExperimentConfig, args: &CorrelateArgs) -> Result<(Vec<String>, BTreeMap<String, f64>), CliError> {
    let file = File::open(&args.input).map_err(|e| CliError::io(&args.input, e))?;
    let stream = if is_csv(&args.input) {
        TimeTagStream::read_csv(file)
    } else {
        TimeTagStream::read_qitt(file)
    }
    .map_err(|e| CliError::config(e.to_string()))?;
    let bin = args.bin_ps.unwrap_or(config.channel.bin_width_ps);
    let counts = bin_and_count(&stream, bin, config.source.pulse_period_ps())?;

    let mut summary = BTreeMap::new();
    summary.insert("n_pulses".into(), counts.n_pulses as f64);
    summary.insert("n_signal".into(), counts.n_signal_clicks as f64);
    summary.insert("n_herald".into(), counts.n_herald_clicks as f64);
    summary.insert("n_coinc".into(), counts.n_coincidences as f64);
    if let Ok(g) = estimate_g2(&counts) {
        summary.insert("g2".into(), g.value);
        summary.insert("g2_err".into(), g.std_err);
    }
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::config(e.to_string()))?;
    fs::write(&args.out, text + "\n").map_err(|e| CliError::io(&args.out, e))?;
    Ok((vec![args.out.display().to_string()], summary))
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Characterize(_) => "characterize",
            Command::Sweep(_) => "sweep",
            Command::Image(_) => "image",
            Command::Tags(_) => "tags",
            Command::Correlate(_) => "correlate",
        }
    }

    fn out(&self) -> &Path {
        match self {
            Command::Characterize(a) => &a.out,
            Command::Sweep(a) => &a.out,
            Command::Image(a) => &a.out,
            Command::Tags(a) => &a.out,
            Command::Correlate(a) => &a.out,
        }
    }
}

fn default_ledger(out: &Path) -> PathBuf {
    match out.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => dir.join(DEFAULT_LEDGER),
        _ => PathBuf::from(DEFAULT_LEDGER),
    }
}

/// Executes a parsed command line and appends its ledger record.
pub fn execute(cli: &Cli) -> Result<RunRecord, CliError> {
    let config = load_config(cli)?;
    let work = || match &cli.command {
        Command::Characterize(a) => characterize(&config, a),
        Command::Sweep(a) => sweep(&config, a),
        Command::Image(a) => image(&config, a),
        Command::Tags(a) => tags(&config, a),
        Command::Correlate(a) => correlate(&config, a),
    };
    let (outputs, summary) = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::usage(e.to_string()))?
            .install(work)?,
        None => work()?,
    };

    let record = RunRecord {
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        config_digest: config_digest(&config),
        seed: config.seed,
        command: cli.command.name().to_string(),
        outputs,
        summary,
    };
    let ledger = cli.ledger.clone().unwrap_or_else(|| default_ledger(cli.command.out()));
    append_record(&ledger, &record).map_err(|e| CliError::io(&ledger, e))?;
    Ok(record)
}

/// Parses `args` (including the program name) and runs it. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(record) => {
            for (k, v) in &record.summary {
                println!("{k} = {v}");
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
