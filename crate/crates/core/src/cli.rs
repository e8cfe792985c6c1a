//! Command-line front end: argument and config-file parsing, CSV output,
//! gnuplot script generation and the run manifest.
//!
//! Settings come from three layers, later layers winning: built-in defaults,
//! an optional `key = value` config file (`--config`), and command-line
//! flags. Every flag `--foo-bar` has the config key `foo_bar` (or `foo-bar`).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde::Serialize;
use thiserror::Error;

use crate::constellation::ModulationSpec;
use crate::engine::{abep_records, run_mse_sweep, run_sweep, SweepConfig, SweepRecord};
use crate::error::SmbmError;
use crate::estimation::EstimatorKind;
use crate::mapping::SystemConfig;

/// Environment variable naming the directory for outputs when `--out` is absent.
pub const OUT_DIR_ENV: &str = "SMBM_OUT_DIR";

pub const CSV_HEADER: &str = "snr_db,mse_empirical,mse_analytic,ber,bit_errors,bits_simulated,abep_bound,warning";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Args(#[from] clap::Error),
    #[error(transparent)]
    Config(#[from] SmbmError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("no records to write")]
    NoRecords,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

#[derive(Debug, Parser, Default)]
#[command(name = "smbm", version, about = "SMBM channel estimation, BER simulation and ABEP bounds")]
struct Flags {
    /// Flat `key = value` config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// mse | ber | abep
    #[arg(long)]
    mode: Option<String>,
    /// perfect | ls | lmmse
    #[arg(long)]
    csi: Option<String>,
    /// bpsk, qpsk, 8psk, 16psk, 16qam, 64qam, ...
    #[arg(long = "mod")]
    modulation: Option<String>,
    /// Symbol energy Es
    #[arg(long)]
    es: Option<String>,
    #[arg(long)]
    nt: Option<String>,
    #[arg(long)]
    nr: Option<String>,
    #[arg(long)]
    nrf: Option<String>,
    /// SNR grid in dB: `start:step:stop`, a comma list, or one value
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output CSV path
    #[arg(long)]
    out: Option<String>,
    /// Data symbols per channel realization
    #[arg(long)]
    block_length: Option<String>,
    /// Bit errors to collect per SNR point
    #[arg(long)]
    min_errors: Option<String>,
    /// Block limit per SNR point
    #[arg(long)]
    max_blocks: Option<String>,
    /// Channel draws per SNR point in mse mode
    #[arg(long)]
    draws: Option<String>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    workers: Option<String>,
    /// Also write a gnuplot script to this path
    #[arg(long)]
    plot: Option<String>,
    /// Exit nonzero when a point stops on max_blocks
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    warnings_as_errors: Option<String>,
}

const KEYS: &[&str] = &[
    "mode",
    "csi",
    "mod",
    "es",
    "nt",
    "nr",
    "nrf",
    "snr",
    "seed",
    "out",
    "block_length",
    "min_errors",
    "max_blocks",
    "draws",
    "workers",
    "plot",
    "warnings_as_errors",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mse,
    Ber,
    Abep,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Mse => "mse",
            Mode::Ber => "ber",
            Mode::Abep => "abep",
        }
    }
}

/// Fully resolved run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSettings {
    pub mode: Mode,
    pub sweep: SweepConfig,
    pub draws: u64,
    pub out: PathBuf,
    pub plot: Option<PathBuf>,
    pub warnings_as_errors: bool,
}

fn invalid(field: &'static str, reason: impl Into<String>) -> SmbmError {
    SmbmError::InvalidConfig {
        field,
        reason: reason.into(),
    }
}

fn parse_num<T: std::str::FromStr>(field: &'static str, raw: &str) -> Result<T, SmbmError> {
    raw.trim()
        .parse()
        .map_err(|_| invalid(field, format!("cannot parse `{raw}`")))
}

fn parse_bool(field: &'static str, raw: &str) -> Result<bool, SmbmError> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(invalid(field, format!("expected a boolean, got `{raw}`"))),
    }
}

/// Parses `start:step:stop` (stop included when on the grid), `a,b,c`, or a
/// single value.
pub fn parse_snr_grid(raw: &str) -> Result<Vec<f64>, SmbmError> {
    let raw = raw.trim();
    let grid = if raw.contains(':') {
        let parts: Vec<f64> = raw
            .split(':')
            .map(|p| parse_num("snr", p))
            .collect::<Result<_, _>>()?;
        let [start, step, stop] = parts[..] else {
            return Err(invalid("snr", "range must be start:step:stop"));
        };
        if step.is_nan() || step <= 0.0 || stop.is_nan() || start.is_nan() || stop < start {
            return Err(invalid("snr", "range needs step > 0 and stop >= start"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
            .collect()
    } else {
        raw.split(',')
            .map(|p| parse_num("snr", p))
            .collect::<Result<Vec<f64>, _>>()?
    };
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("snr", "SNR grid must be strictly increasing"));
    }
    Ok(grid)
}

/// Reads a section-less `key = value` file; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, SmbmError> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(invalid("config", format!("line {}: expected `key = value`", n + 1)));
        };
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(invalid("config", format!("line {}: unknown key `{key}`", n + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn flag_values(f: &Flags) -> Vec<(&'static str, Option<&String>)> {
    vec![
        ("mode", f.mode.as_ref()),
        ("csi", f.csi.as_ref()),
        ("mod", f.modulation.as_ref()),
        ("es", f.es.as_ref()),
        ("nt", f.nt.as_ref()),
        ("nr", f.nr.as_ref()),
        ("nrf", f.nrf.as_ref()),
        ("snr", f.snr.as_ref()),
        ("seed", f.seed.as_ref()),
        ("out", f.out.as_ref()),
        ("block_length", f.block_length.as_ref()),
        ("min_errors", f.min_errors.as_ref()),
        ("max_blocks", f.max_blocks.as_ref()),
        ("draws", f.draws.as_ref()),
        ("workers", f.workers.as_ref()),
        ("plot", f.plot.as_ref()),
        ("warnings_as_errors", f.warnings_as_errors.as_ref()),
    ]
}

pub fn parse_args<I, T>(argv: I) -> Result<RunSettings, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let flags = Flags::try_parse_from(argv)?;
    let mut values = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    for (key, value) in flag_values(&flags) {
        if let Some(v) = value {
            values.insert(key.to_string(), v.clone());
        }
    }
    Ok(resolve(&values, std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))?)
}

/// Applies defaults to the merged key/value settings and validates them.
pub fn resolve(values: &BTreeMap<String, String>, out_dir: Option<PathBuf>) -> Result<RunSettings, SmbmError> {
    let get = |k: &str| values.get(k).map(String::as_str);
    let mode = match get("mode").unwrap_or("ber").trim() {
        "mse" => Mode::Mse,
        "ber" => Mode::Ber,
        "abep" => Mode::Abep,
        other => return Err(invalid("mode", format!("unknown mode `{other}` (expected mse, ber or abep)"))),
    };
    let csi: EstimatorKind = get("csi").unwrap_or("lmmse").trim().parse()?;
    if mode == Mode::Mse && csi == EstimatorKind::Perfect {
        return Err(invalid("csi", "mse mode needs an estimator (ls or lmmse)"));
    }
    let mut modulation: ModulationSpec = get("mod").unwrap_or("qpsk").parse()?;
    if let Some(es) = get("es") {
        modulation.symbol_energy = parse_num("es", es)?;
        if !(modulation.symbol_energy > 0.0 && modulation.symbol_energy.is_finite()) {
            return Err(invalid("es", "symbol energy must be positive"));
        }
    }
    let nt = get("nt").map_or(Ok(4), |v| parse_num("nt", v))?;
    let nr = get("nr").map_or(Ok(4), |v| parse_num("nr", v))?;
    let nrf = get("nrf").map_or(Ok(2), |v| parse_num("nrf", v))?;
    let system = SystemConfig::new(nt, nr, nrf, modulation)?;

    let grid = parse_snr_grid(get("snr").unwrap_or("-4:2:16"))?;
    let mut sweep = SweepConfig::new(system, grid, csi);
    if let Some(v) = get("seed") {
        sweep.master_seed = parse_num("seed", v)?;
    }
    if let Some(v) = get("block_length") {
        sweep.block_length = parse_num("block_length", v)?;
    }
    if let Some(v) = get("min_errors") {
        sweep.min_bit_errors = parse_num("min_errors", v)?;
    }
    if let Some(v) = get("max_blocks") {
        sweep.max_blocks = parse_num("max_blocks", v)?;
    }
    if let Some(v) = get("workers") {
        sweep.workers = parse_num("workers", v)?;
    }
    sweep.validate()?;
    let draws = get("draws").map_or(Ok(10_000), |v| parse_num("draws", v))?;
    if draws == 0 {
        return Err(invalid("draws", "at least one channel draw is required"));
    }

    let out = match get("out") {
        Some(p) => PathBuf::from(p.trim()),
        None => out_dir
            .unwrap_or_else(|| PathBuf::from("."))
            .join(format!("smbm_{}.csv", mode.name())),
    };
    Ok(RunSettings {
        mode,
        sweep,
        draws,
        out,
        plot: get("plot").map(|p| PathBuf::from(p.trim())),
        warnings_as_errors: get("warnings_as_errors").map_or(Ok(false), |v| parse_bool("warnings_as_errors", v))?,
    })
}

fn real(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn int(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV text for `records`; reals carry 17 significant digits.
pub fn format_csv(records: &[SweepRecord]) -> String {
    let mut s = String::with_capacity(64 * (records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            real(Some(r.snr_db)),
            real(r.mse_empirical),
            real(r.mse_analytic),
            real(r.ber),
            int(r.bit_errors),
            int(r.bits_simulated),
            real(r.abep_bound),
            r.warning.as_deref().unwrap_or("")
        );
    }
    s
}

pub fn write_csv(records: &[SweepRecord], path: &Path) -> Result<(), CliError> {
    if records.is_empty() {
        return Err(CliError::NoRecords);
    }
    fs::write(path, format_csv(records)).map_err(|e| io_err(path, e))
}

/// Path of `target` as seen from the directory holding `from_file`.
fn relative_to(target: &Path, from_file: &Path) -> PathBuf {
    let base = from_file.parent().unwrap_or(Path::new(""));
    match target.strip_prefix(base) {
        Ok(rel) if !base.as_os_str().is_empty() => rel.to_path_buf(),
        _ => {
            if base.as_os_str().is_empty() {
                target.to_path_buf()
            } else if let (Ok(t), Ok(b)) = (fs::canonicalize(target), fs::canonicalize(base)) {
                t.strip_prefix(&b).map(Path::to_path_buf).unwrap_or(t)
            } else {
                target.to_path_buf()
            }
        }
    }
}

/// Writes a gnuplot script that draws the populated series of `records`
/// from `csv_path` with a logarithmic y axis.
pub fn emit_plot_script(records: &[SweepRecord], csv_path: &Path, script_path: &Path) -> Result<(), CliError> {
    if records.is_empty() {
        return Err(CliError::NoRecords);
    }
    let csv = relative_to(csv_path, script_path).to_string_lossy().replace('\'', "''");
    let png = Path::new(&csv).with_extension("png").to_string_lossy().into_owned();
    let has = |f: fn(&SweepRecord) -> bool| records.iter().any(f);

    let mut series: Vec<(usize, &str, &str)> = Vec::new();
    let ylabel;
    if has(|r| r.ber.is_some()) {
        ylabel = "Bit error rate";
        series.push((4, "ber", "linespoints pt 7"));
        series.push((7, "abep_bound", "lines dashtype 2"));
    } else if has(|r| r.mse_empirical.is_some()) {
        ylabel = "MSE";
        series.push((2, "mse_empirical", "linespoints pt 7"));
        series.push((3, "mse_analytic", "lines dashtype 2"));
    } else {
        ylabel = "ABEP";
        series.push((7, "abep_bound", "linespoints pt 7"));
    }

    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot script written by smbm {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# run from this directory: gnuplot {}", script_path.file_name().unwrap_or_default().to_string_lossy());
    s.push_str("set datafile separator ','\n");
    s.push_str("set datafile missing ''\n");
    s.push_str("set terminal pngcairo size 900,650\n");
    let _ = writeln!(s, "set output '{png}'");
    s.push_str("set logscale y\nset format y '10^{%L}'\nset grid\n");
    s.push_str("set xlabel 'SNR (dB)'\n");
    let _ = writeln!(s, "set ylabel '{ylabel}'");
    s.push_str("set key autotitle columnhead\n");
    let plots: Vec<String> = series
        .iter()
        .enumerate()
        .map(|(i, (col, title, style))| {
            let file = if i == 0 { format!("'{csv}'") } else { "''".to_string() };
            format!("{file} using 1:{col} with {style} title '{title}'")
        })
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    fs::write(script_path, s).map_err(|e| io_err(script_path, e))
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    settings: &'a RunSettings,
    master_seed: u64,
    started_unix: f64,
    finished_unix: f64,
    csv: &'a Path,
    plot: Option<&'a Path>,
    warnings: Vec<(f64, &'a str)>,
}

/// Sidecar path for a CSV: `run.csv` -> `run.csv.manifest.json`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    csv.with_file_name(name)
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<SweepRecord>,
    pub warnings: usize,
}

pub fn execute(settings: &RunSettings) -> Result<RunOutcome, CliError> {
    let started = unix_now();
    let records = match settings.mode {
        Mode::Mse => run_mse_sweep(&settings.sweep, settings.draws)?,
        Mode::Ber => run_sweep(&settings.sweep)?,
        Mode::Abep => abep_records(&settings.sweep)?,
    };
    if let Some(dir) = settings.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    write_csv(&records, &settings.out)?;
    if let Some(plot) = &settings.plot {
        emit_plot_script(&records, &settings.out, plot)?;
    }
    let warnings: Vec<(f64, &str)> = records
        .iter()
        .filter_map(|r| r.warning.as_deref().map(|w| (r.snr_db, w)))
        .collect();
    let manifest = Manifest {
        tool: "smbm",
        version: env!("CARGO_PKG_VERSION"),
        settings,
        master_seed: settings.sweep.master_seed,
        started_unix: started,
        finished_unix: unix_now(),
        csv: &settings.out,
        plot: settings.plot.as_deref(),
        warnings,
    };
    let path = manifest_path(&settings.out);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(|e| io_err(&path, e))?;
    let n_warn = manifest.warnings.len();
    Ok(RunOutcome {
        records,
        warnings: n_warn,
    })
}
