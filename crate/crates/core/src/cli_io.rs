//! CSV ingestion, report bundles, and the `rcskit` command line.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dists::{DistParams, Family, SampleMeta, SampleSet};
use crate::geometry::SPEED_OF_LIGHT;
use crate::gof::{rank_fits, FitDiagnostic, GofReport};
use crate::link_budget::CalibrationFactor;
use crate::montecarlo::{run_scenario, ScenarioSpec};
use crate::nf_rcs::{fit_pl, fit_pl_all, ModelOrder, NfRcsError, PathLossFit, PlObservation};
use crate::waveform::{separate_target, CirCapture, NoiseSource};

pub const TOOL_VERSION: &str = concat!("rcskit ", env!("CARGO_PKG_VERSION"));
pub const RCS_HEADER: [&str; 4] = ["target_id", "frequency_ghz", "theta_b_deg", "rcs_m2"];
pub const PL_HEADER: [&str; 3] = ["y_m", "frequency_ghz", "pl_db"];
pub const CIR_HEADER: [&str; 3] = ["index", "re", "im"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("line {line}: {message}")]
    Value { line: u64, message: String },
    #[error("malformed JSON: {0}")]
    Json(String),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> IoError {
    IoError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Key of one measurement configuration. Ordered by target, then frequency,
/// then angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupKey {
    pub target_id: String,
    pub frequency_ghz: f64,
    pub theta_b_deg: f64,
}

impl Eq for GroupKey {}

impl Ord for GroupKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.target_id
            .cmp(&other.target_id)
            .then(self.frequency_ghz.total_cmp(&other.frequency_ghz))
            .then(self.theta_b_deg.total_cmp(&other.theta_b_deg))
    }
}

impl PartialOrd for GroupKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<&GroupKey> for SampleMeta {
    fn from(k: &GroupKey) -> Self {
        SampleMeta {
            target_id: k.target_id.clone(),
            frequency_ghz: k.frequency_ghz,
            theta_b_deg: k.theta_b_deg,
        }
    }
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<(), IoError> {
    let got: Vec<&str> = found.iter().map(str::trim).collect();
    if got != expected {
        return Err(IoError::Schema(format!(
            "expected header `{}`, found `{}`",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input)
}

fn parse_field(record: &csv::StringRecord, index: usize, name: &str) -> Result<f64, IoError> {
    let line = record.position().map_or(0, |p| p.line());
    let raw = record.get(index).unwrap_or("");
    let v: f64 = raw.parse().map_err(|_| IoError::Value {
        line,
        message: format!("{name} `{raw}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(IoError::Value {
            line,
            message: format!("{name} must be finite"),
        });
    }
    Ok(v)
}

fn records<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<Vec<csv::StringRecord>, IoError> {
    let header = reader.headers().map_err(|e| IoError::Schema(e.to_string()))?.clone();
    check_header(&header, expected)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IoError::Schema(e.to_string()))?;
        if record.len() != expected.len() {
            return Err(IoError::Schema(format!(
                "line {}: expected {} columns, found {}",
                record.position().map_or(0, |p| p.line()),
                expected.len(),
                record.len()
            )));
        }
        out.push(record);
    }
    Ok(out)
}

/// Parses RCS sample rows and groups them by configuration, keeping row order
/// within each group.
pub fn read_rcs_csv<R: Read>(input: R) -> Result<BTreeMap<GroupKey, SampleSet>, IoError> {
    let mut reader = csv_reader(input);
    let mut groups: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
    for record in records(&mut reader, &RCS_HEADER)? {
        let line = record.position().map_or(0, |p| p.line());
        let target_id = record[0].to_string();
        if target_id.is_empty() {
            return Err(IoError::Value {
                line,
                message: "target_id is empty".into(),
            });
        }
        let frequency_ghz = parse_field(&record, 1, "frequency_ghz")?;
        if frequency_ghz <= 0.0 {
            return Err(IoError::Value {
                line,
                message: format!("frequency_ghz must be positive, got {frequency_ghz}"),
            });
        }
        let theta_b_deg = parse_field(&record, 2, "theta_b_deg")?;
        let rcs = parse_field(&record, 3, "rcs_m2")?;
        if rcs <= 0.0 {
            return Err(IoError::Value {
                line,
                message: format!("rcs_m2 must be positive, got {rcs}"),
            });
        }
        let key = GroupKey {
            target_id,
            frequency_ghz,
            theta_b_deg,
        };
        groups.entry(key).or_default().push(rcs);
    }
    groups
        .into_iter()
        .map(|(k, v)| {
            let set = SampleSet::new(v, SampleMeta::from(&k)).map_err(|e| IoError::Schema(e.to_string()))?;
            Ok((k, set))
        })
        .collect()
}

pub fn ingest_rcs_csv(path: &Path) -> Result<BTreeMap<GroupKey, SampleSet>, IoError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    read_rcs_csv(file)
}

/// Writes RCS rows with shortest round-trip float formatting and LF endings.
pub fn write_rcs_csv<W: Write>(out: W, key: &GroupKey, values: &[f64]) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let wrap = |e: csv::Error| IoError::Schema(e.to_string());
    w.write_record(RCS_HEADER).map_err(wrap)?;
    let f = key.frequency_ghz.to_string();
    let t = key.theta_b_deg.to_string();
    for v in values {
        w.write_record([key.target_id.as_str(), &f, &t, &v.to_string()]).map_err(wrap)?;
    }
    w.flush().map_err(|e| IoError::Schema(e.to_string()))
}

pub fn read_pl_csv<R: Read>(input: R) -> Result<Vec<PlObservation>, IoError> {
    let mut reader = csv_reader(input);
    let mut out = Vec::new();
    for record in records(&mut reader, &PL_HEADER)? {
        let line = record.position().map_or(0, |p| p.line());
        let y_m = parse_field(&record, 0, "y_m")?;
        let f = parse_field(&record, 1, "frequency_ghz")?;
        if y_m <= 0.0 || f <= 0.0 {
            return Err(IoError::Value {
                line,
                message: "y_m and frequency_ghz must be positive".into(),
            });
        }
        out.push(PlObservation {
            y_m,
            frequency_hz: f * 1e9,
            pl_db: parse_field(&record, 2, "pl_db")?,
        });
    }
    if out.is_empty() {
        return Err(IoError::Schema("no observations".into()));
    }
    Ok(out)
}

pub fn ingest_pl_csv(path: &Path) -> Result<Vec<PlObservation>, IoError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    read_pl_csv(file)
}

pub fn write_pl_csv<W: Write>(out: W, obs: &[PlObservation]) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let wrap = |e: csv::Error| IoError::Schema(e.to_string());
    w.write_record(PL_HEADER).map_err(wrap)?;
    for o in obs {
        w.write_record([o.y_m.to_string(), (o.frequency_hz / 1e9).to_string(), o.pl_db.to_string()])
            .map_err(wrap)?;
    }
    w.flush().map_err(|e| IoError::Schema(e.to_string()))
}

/// Sidecar metadata stored next to a CIR CSV as `<file>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirSidecar {
    pub frequency_hz: f64,
    pub scenario_tag: String,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Reads `index,re,im` taps plus the JSON sidecar. Indices must run 0..N.
pub fn read_cir(path: &Path) -> Result<CirCapture, IoError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv_reader(file);
    let mut taps = Vec::new();
    for record in records(&mut reader, &CIR_HEADER)? {
        let line = record.position().map_or(0, |p| p.line());
        if record[0].parse::<usize>().ok() != Some(taps.len()) {
            return Err(IoError::Value {
                line,
                message: format!("expected tap index {}", taps.len()),
            });
        }
        taps.push(Complex64::new(parse_field(&record, 1, "re")?, parse_field(&record, 2, "im")?));
    }
    if taps.is_empty() {
        return Err(IoError::Schema("CIR has no taps".into()));
    }
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| io_err(&side, e))?;
    let meta: CirSidecar = serde_json::from_str(&text).map_err(|e| IoError::Json(e.to_string()))?;
    CirCapture::new(taps, meta.frequency_hz, meta.scenario_tag).map_err(|e| IoError::Schema(e.to_string()))
}

pub fn write_cir(path: &Path, cir: &CirCapture) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    w.write_record(CIR_HEADER).map_err(|e| io_err(path, e))?;
    for (i, t) in cir.taps.iter().enumerate() {
        w.write_record([i.to_string(), t.re.to_string(), t.im.to_string()])
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    let side = CirSidecar {
        frequency_hz: cir.frequency_hz,
        scenario_tag: cir.scenario_tag.clone(),
    };
    write_json(&sidecar_path(path), &side)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

pub fn digest_file(path: &Path) -> Result<InputDigest, IoError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

/// Ranked fits for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub target_id: String,
    pub frequency_ghz: f64,
    pub theta_b_deg: f64,
    pub n_samples: usize,
    pub sample_min: f64,
    pub sample_max: f64,
    /// Best first.
    pub reports: Vec<GofReport>,
    #[serde(default)]
    pub excluded: Vec<FitDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyFits {
    pub frequency_ghz: f64,
    pub fits: Vec<PathLossFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub tool_version: String,
    pub inputs: Vec<InputDigest>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<GroupReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geom_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub path_loss: Vec<FrequencyFits>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSpec>,
}

impl ReportBundle {
    fn new(inputs: Vec<InputDigest>) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            inputs,
            groups: Vec::new(),
            geom_a: None,
            path_loss: Vec::new(),
            scenario: None,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| IoError::Json(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| IoError::Json(e.to_string()))
}

/// Failure of a command, carrying its exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<NfRcsError> for CliError {
    fn from(e: NfRcsError) -> Self {
        match e {
            NfRcsError::InvalidObservation { .. } | NfRcsError::MixedFrequencies(..) | NfRcsError::UnknownOrder(_) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rcskit", version, about = "Radar cross section fitting and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Sigma1,
    Sigma2,
    Sigma3,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Pdf,
    Cdf,
    PlCurve,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit and rank distributions for every configuration in an RCS sample file.
    FitDist {
        #[arg(long)]
        input: PathBuf,
        /// `all` or a comma-separated list such as `gamma,weibull`.
        #[arg(long, default_value = "all")]
        families: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the near-field path-loss model per frequency.
    FitPl {
        #[arg(long)]
        input: PathBuf,
        /// Half baseline a in metres.
        #[arg(long)]
        geom_a: f64,
        #[arg(long, value_enum, default_value = "all")]
        model: ModelChoice,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a synthetic scenario and rank the recovered RCS values.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_samples: PathBuf,
        #[arg(long)]
        out_report: PathBuf,
        /// Overrides the seed in the spec.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Tabulate fitted curves from a report for external plotting.
    Plotdata {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// RCS from target, background and noise CIR captures plus a free-space
    /// reference power.
    RcsFromCir {
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        background: PathBuf,
        /// Noise-only capture.
        #[arg(long, conflicts_with = "noise_floor_db")]
        noise: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        noise_floor_db: Option<f64>,
        /// Free-space received power at the target position, in W.
        #[arg(long)]
        p_rx: f64,
        /// Tx-target distance in metres.
        #[arg(long)]
        distance: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (including the program name), runs the command, and returns
/// the process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("rcskit: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::FitDist { input, families, out } => cmd_fit_dist(&input, &families, &out),
        Command::FitPl {
            input,
            geom_a,
            model,
            out,
        } => cmd_fit_pl(&input, geom_a, model, &out),
        Command::Simulate {
            spec,
            out_samples,
            out_report,
            seed,
        } => cmd_simulate(&spec, &out_samples, &out_report, seed),
        Command::Plotdata { report, kind, grid, out } => cmd_plotdata(&report, kind, grid, &out),
        Command::RcsFromCir {
            target,
            background,
            noise,
            noise_floor_db,
            p_rx,
            distance,
            out,
        } => cmd_rcs_from_cir(&target, &background, noise.as_deref(), noise_floor_db, p_rx, distance, &out),
    }
}

pub fn parse_families(spec: &str) -> Result<Vec<Family>, CliError> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(Family::FITTABLE.to_vec());
    }
    let families = spec
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<Family>().map_err(|e| CliError::Input(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    if families.is_empty() {
        return Err(CliError::Input("no families given".into()));
    }
    Ok(families)
}

fn group_report(key: &GroupKey, set: &SampleSet, families: &[Family]) -> Result<GroupReport, CliError> {
    let ranking = rank_fits(set, families).map_err(|e| CliError::Numeric(format!("{}: {e}", key.target_id)))?;
    if ranking.reports.is_empty() {
        let why: Vec<String> = ranking.excluded.iter().map(|d| format!("{}: {}", d.family, d.message)).collect();
        return Err(CliError::Numeric(format!(
            "every family failed for {} at {} GHz, {}°: {}",
            key.target_id,
            key.frequency_ghz,
            key.theta_b_deg,
            why.join("; ")
        )));
    }
    let values = set.values();
    Ok(GroupReport {
        target_id: key.target_id.clone(),
        frequency_ghz: key.frequency_ghz,
        theta_b_deg: key.theta_b_deg,
        n_samples: values.len(),
        sample_min: values.iter().copied().fold(f64::INFINITY, f64::min),
        sample_max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        reports: ranking.reports,
        excluded: ranking.excluded,
    })
}

pub fn cmd_fit_dist(input: &Path, families: &str, out: &Path) -> Result<(), CliError> {
    let families = parse_families(families)?;
    let digest = digest_file(input)?;
    let groups = ingest_rcs_csv(input)?;
    if groups.is_empty() {
        return Err(CliError::Input(format!("{}: no samples", input.display())));
    }
    let mut bundle = ReportBundle::new(vec![digest]);
    for (key, set) in &groups {
        bundle.groups.push(group_report(key, set, &families)?);
    }
    write_json(out, &bundle)?;
    Ok(())
}

pub fn cmd_fit_pl(input: &Path, geom_a: f64, model: ModelChoice, out: &Path) -> Result<(), CliError> {
    if !(geom_a.is_finite() && geom_a >= 0.0) {
        return Err(CliError::Input(format!("--geom-a must be non-negative, got {geom_a}")));
    }
    let digest = digest_file(input)?;
    let obs = ingest_pl_csv(input)?;
    let mut by_freq: BTreeMap<u64, Vec<PlObservation>> = BTreeMap::new();
    for o in obs {
        // Positive floats order like their bit patterns.
        by_freq.entry(o.frequency_hz.to_bits()).or_default().push(o);
    }
    let mut bundle = ReportBundle::new(vec![digest]);
    bundle.geom_a = Some(geom_a);
    for (bits, group) in by_freq {
        let fits = match model {
            ModelChoice::All => fit_pl_all(&group, geom_a)?,
            ModelChoice::Sigma1 => vec![fit_pl(&group, geom_a, ModelOrder::Sigma1)?],
            ModelChoice::Sigma2 => vec![fit_pl(&group, geom_a, ModelOrder::Sigma2)?],
            ModelChoice::Sigma3 => vec![fit_pl(&group, geom_a, ModelOrder::Sigma3)?],
        };
        bundle.path_loss.push(FrequencyFits {
            frequency_ghz: f64::from_bits(bits) / 1e9,
            fits,
        });
    }
    write_json(out, &bundle)?;
    Ok(())
}

pub fn cmd_simulate(spec_path: &Path, out_samples: &Path, out_report: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let digest = digest_file(spec_path)?;
    let mut spec: ScenarioSpec = read_json(spec_path)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let run = run_scenario(&spec).map_err(|e| match e {
        crate::montecarlo::MonteCarloError::InvalidSpec(m) => CliError::Input(m),
        other => CliError::Numeric(other.to_string()),
    })?;
    let meta = spec.meta();
    let key = GroupKey {
        target_id: meta.target_id,
        frequency_ghz: meta.frequency_ghz,
        theta_b_deg: meta.theta_b_deg,
    };
    let file = fs::File::create(out_samples).map_err(|e| io_err(out_samples, e))?;
    write_rcs_csv(std::io::BufWriter::new(file), &key, &run.recovered_sigma)?;

    let mut bundle = ReportBundle::new(vec![digest]);
    let values = &run.recovered_sigma;
    bundle.groups.push(GroupReport {
        target_id: key.target_id.clone(),
        frequency_ghz: key.frequency_ghz,
        theta_b_deg: key.theta_b_deg,
        n_samples: values.len(),
        sample_min: values.iter().copied().fold(f64::INFINITY, f64::min),
        sample_max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        reports: run.gof_reports,
        excluded: run.excluded,
    });
    bundle.scenario = Some(spec);
    write_json(out_report, &bundle)?;
    Ok(())
}

/// `count` evenly spaced points over [lo, hi]; a single point sits at `lo`.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}

pub fn cmd_plotdata(report: &Path, kind: PlotKind, grid: usize, out: &Path) -> Result<(), CliError> {
    if grid == 0 {
        return Err(CliError::Input("--grid must be at least 1".into()));
    }
    let bundle: ReportBundle = read_json(report)?;
    let file = fs::File::create(out).map_err(|e| io_err(out, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(std::io::BufWriter::new(file));
    let wrap = |e: csv::Error| CliError::Input(e.to_string());
    match kind {
        PlotKind::Pdf | PlotKind::Cdf => {
            if bundle.groups.is_empty() {
                return Err(CliError::Input("report has no distribution groups".into()));
            }
            let column = if kind == PlotKind::Pdf { "pdf" } else { "cdf" };
            w.write_record(["target_id", "frequency_ghz", "theta_b_deg", "rank", "family", "x", column])
                .map_err(wrap)?;
            for g in &bundle.groups {
                let xs = linear_grid(g.sample_min, g.sample_max, grid);
                for (rank, r) in g.reports.iter().enumerate() {
                    let p: &DistParams = &r.params;
                    for &x in &xs {
                        let v = if kind == PlotKind::Pdf { p.pdf(x) } else { p.cdf(x) };
                        w.write_record([
                            g.target_id.clone(),
                            g.frequency_ghz.to_string(),
                            g.theta_b_deg.to_string(),
                            (rank + 1).to_string(),
                            r.family.to_string(),
                            x.to_string(),
                            v.to_string(),
                        ])
                        .map_err(wrap)?;
                    }
                }
            }
        }
        PlotKind::PlCurve => {
            let geom_a = bundle
                .geom_a
                .ok_or_else(|| CliError::Input("report has no geom_a".into()))?;
            if bundle.path_loss.is_empty() {
                return Err(CliError::Input("report has no path-loss fits".into()));
            }
            w.write_record(["frequency_ghz", "model", "y_m", "pl_db"]).map_err(wrap)?;
            let ys = linear_grid(2.0, 10.0, grid);
            for ff in &bundle.path_loss {
                for fit in &ff.fits {
                    for &y in &ys {
                        let pl = fit.predict_at_offset(geom_a, y, ff.frequency_ghz * 1e9)?;
                        w.write_record([
                            ff.frequency_ghz.to_string(),
                            fit.model.order.to_string(),
                            y.to_string(),
                            pl.to_string(),
                        ])
                        .map_err(wrap)?;
                    }
                }
            }
        }
    }
    w.flush().map_err(|e| CliError::Input(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirRcsReport {
    pub tool_version: String,
    pub inputs: Vec<InputDigest>,
    pub frequency_hz: f64,
    pub distance_m: f64,
    pub p_tot: f64,
    pub p_back: f64,
    pub p_noise: f64,
    pub p_tar: f64,
    pub clamped: bool,
    pub calibration_k: f64,
    pub rcs_m2: f64,
}

pub fn cmd_rcs_from_cir(
    target: &Path,
    background: &Path,
    noise: Option<&Path>,
    noise_floor_db: Option<f64>,
    p_rx: f64,
    distance: f64,
    out: &Path,
) -> Result<(), CliError> {
    let mut inputs = vec![digest_file(target)?, digest_file(background)?];
    let t = read_cir(target)?;
    let b = read_cir(background)?;
    let noise = match (noise, noise_floor_db) {
        (Some(p), _) => {
            inputs.push(digest_file(p)?);
            NoiseSource::from_capture(&read_cir(p)?)
        }
        (None, Some(level_db)) => NoiseSource::Floor { level_db },
        (None, None) => return Err(CliError::Input("give --noise or --noise-floor-db".into())),
    };
    if t.frequency_hz != b.frequency_hz {
        return Err(CliError::Input("target and background captures differ in frequency".into()));
    }
    let lambda = SPEED_OF_LIGHT / t.frequency_hz;
    let budget = separate_target(&t, &b, noise);
    let cal = CalibrationFactor::calibrate(p_rx, distance, lambda).map_err(|e| CliError::Input(e.to_string()))?;
    let rcs = cal
        .invert_rcs_at(budget.p_tar, lambda, distance)
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    let report = CirRcsReport {
        tool_version: TOOL_VERSION.to_string(),
        inputs,
        frequency_hz: t.frequency_hz,
        distance_m: distance,
        p_tot: budget.p_tot,
        p_back: budget.p_back,
        p_noise: budget.p_noise,
        p_tar: budget.p_tar,
        clamped: budget.clamped,
        calibration_k: cal.k(),
        rcs_m2: rcs,
    };
    write_json(out, &report)?;
    Ok(())
}
