//! Command-line front end: `simulate`, `analyze`, `spectrum` and `verify`.
//!
//! Every run is described by a [`RunConfig`], read from `--config` and then
//! patched by flags. The SHA-256 of the effective config goes into a header
//! of every file a command writes, so outputs can be matched to the run that
//! produced them.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::acceptance::{run_suite, SuiteOptions, VerifyReport, DEFAULT_SEEDS};
use crate::cwt::{cwt, SampledSignal, ScaleGrid, UniformGrid};
use crate::error::{AnalysisError, Error, Result};
use crate::exponent::{exponent_field_from_leaders, ExponentField};
use crate::leaders::leader_field;
use crate::poly::PiecewisePolynomial;
use crate::pulse::{
    band_partition, expected_band_count, sample_path, sample_process, PulseProcessParams, PulseSet,
    DEFAULT_J_MAX,
};
use crate::pulse_analysis::{analyze_pulses, PulseAnalysis};
use crate::spectrum::{coarse_grained_spectrum, render_svg, SpectrumEstimate, TheoreticalSpectrum};
use crate::wavelet::{build_even_wavelet, AnalyzingWavelet};

pub const CONFIG_FORMAT_VERSION: u32 = 1;

/// Exit status for a completed `verify` run with failing criteria.
pub const EXIT_ACCEPTANCE_FAILURE: i32 = 2;

// ---------------------------------------------------------------- config

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub process: ProcessConfig,
    #[serde(default)]
    pub wavelet: WaveletConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub analyze: AnalyzeConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            format_version: CONFIG_FORMAT_VERSION,
            seed: 0,
            process: ProcessConfig::default(),
            wavelet: WaveletConfig::default(),
            simulate: SimulateConfig::default(),
            analyze: AnalyzeConfig::default(),
            spectrum: SpectrumConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessConfig {
    pub alpha: f64,
    pub eta: f64,
    pub j_max: u32,
    /// Pulse shape; the default `t(1 - t²)²` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PiecewisePolynomial>,
}

impl Default for ProcessConfig {
    fn default() -> Self {
        ProcessConfig {
            alpha: 0.5,
            eta: 0.9,
            j_max: DEFAULT_J_MAX,
            pulse: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveletConfig {
    pub vanishing_moments: u32,
    pub smoothness: u32,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        WaveletConfig {
            vanishing_moments: 6,
            smoothness: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub path_samples: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { path_samples: 4097 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    /// Sampled signal (`x,value` CSV) or pulse-set JSON.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// `"inf"` selects the sup-leader.
    #[serde(with = "p_value")]
    pub p: f64,
    pub scales_per_octave: u32,
    /// Pulse input: exponents on `2^grid_exponent` points of `[0, 1)`.
    pub grid_exponent: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regression: Option<[f64; 2]>,
    /// Signal input: spacing of the exponent positions (default: every plane position).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent_step: Option<f64>,
    /// The plane CSV keeps at most this many positions per row.
    pub plane_csv_columns: usize,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            input: None,
            p: 2.0,
            scales_per_octave: 8,
            grid_exponent: 14,
            a_min: None,
            a_max: None,
            regression: None,
            exponent_step: None,
            plane_csv_columns: 2048,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Exponent CSV written by `analyze`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Simulate and analyze first instead of reading `input`.
    pub chain: bool,
    pub bin_width: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            input: None,
            chain: false,
            bin_width: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub only: Option<Vec<String>>,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<u64>>,
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            only: None,
            seeds: DEFAULT_SEEDS.to_vec(),
            sweep: None,
            tolerances: BTreeMap::new(),
        }
    }
}

/// `p` as a JSON number, or the string `"inf"`.
mod p_value {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() && *p > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Number(p) => Ok(p),
            Raw::Text(t) => super::parse_p(&t).map_err(serde::de::Error::custom),
        }
    }
}

fn parse_p(text: &str) -> std::result::Result<f64, String> {
    match text.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|_| format!("cannot read p from {text:?}")),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text)?;
        if config.format_version != CONFIG_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "config format_version {} is not supported (expected {CONFIG_FORMAT_VERSION})",
                config.format_version
            )));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let compact = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(compact.as_bytes()))
    }

    pub fn process_params(&self) -> Result<PulseProcessParams> {
        let p = &self.process;
        let params = PulseProcessParams::new(p.alpha, p.eta, p.j_max, self.seed)?;
        Ok(match &p.pulse {
            Some(shape) => params.with_pulse(shape.clone())?,
            None => params,
        })
    }

    pub fn analysis_wavelet(&self) -> Result<AnalyzingWavelet> {
        Ok(build_even_wavelet(self.wavelet.vanishing_moments, self.wavelet.smoothness)?)
    }
}

// ---------------------------------------------------------------- arguments

#[derive(Debug, Parser)]
#[command(name = "pleader", version, about = "Continuous wavelet p-leaders and random pulse processes")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "PLEADER_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a pulse process; writes pulses.json and path.csv.
    Simulate {
        #[arg(long, allow_negative_numbers = true)]
        alpha: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        j_max: Option<u32>,
    },
    /// Transform, leaders and exponents of a signal CSV or pulse set.
    Analyze {
        /// Signal CSV (`x,value`) or pulses.json
        #[arg(long)]
        input: Option<PathBuf>,
        /// A number greater than 1, or "inf".
        #[arg(long)]
        p: Option<String>,
    },
    /// Coarse-grained spectrum with the theoretical overlay.
    Spectrum {
        /// exponents.csv from `analyze`
        #[arg(long)]
        input: Option<PathBuf>,
        /// Simulate and analyze first, using the process settings.
        #[arg(long)]
        chain: bool,
        #[arg(long)]
        p: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        alpha: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        bin_width: Option<f64>,
    },
    /// Run the acceptance suite; writes report.json.
    Verify {
        /// Comma-separated criteria, e.g. A1,A3.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
        /// Extra seeds for the stochastic criteria, comma-separated.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<u64>>,
        /// Override a tolerance, e.g. --tolerance A1=0.1 (repeatable).
        #[arg(long = "tolerance", value_parser = parse_tolerance)]
        tolerances: Vec<(String, f64)>,
    },
}

fn parse_tolerance(text: &str) -> std::result::Result<(String, f64), String> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got {text:?}"))?;
    let value: f64 = value.parse().map_err(|_| format!("bad tolerance value in {text:?}"))?;
    if !(value > 0.0) {
        return Err(format!("tolerance must be positive in {text:?}"));
    }
    Ok((name.trim().to_string(), value))
}

/// Config from `--config` (or defaults) with the flag overrides applied.
pub fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.common.seed {
        config.seed = seed;
    }
    match &cli.command {
        Command::Simulate { alpha, eta, j_max } => {
            override_process(&mut config, *alpha, *eta);
            if let Some(j) = j_max {
                config.process.j_max = *j;
            }
        }
        Command::Analyze { input, p } => {
            if let Some(i) = input {
                config.analyze.input = Some(i.clone());
            }
            if let Some(p) = p {
                config.analyze.p = parse_p(p).map_err(Error::Config)?;
            }
        }
        Command::Spectrum {
            input,
            chain,
            p,
            alpha,
            eta,
            bin_width,
        } => {
            override_process(&mut config, *alpha, *eta);
            if let Some(i) = input {
                config.spectrum.input = Some(i.clone());
            }
            config.spectrum.chain |= *chain;
            if let Some(p) = p {
                config.analyze.p = parse_p(p).map_err(Error::Config)?;
            }
            if let Some(w) = bin_width {
                config.spectrum.bin_width = *w;
            }
        }
        Command::Verify {
            only,
            sweep,
            tolerances,
        } => {
            if let Some(o) = only {
                config.verify.only = Some(o.clone());
            }
            if let Some(s) = sweep {
                config.verify.sweep = Some(s.clone());
            }
            if let Some(seed) = cli.common.seed {
                config.verify.seeds = (0..DEFAULT_SEEDS.len() as u64).map(|k| seed + k).collect();
            }
            for (name, value) in tolerances {
                config.verify.tolerances.insert(name.clone(), *value);
            }
        }
    }
    Ok(config)
}

fn override_process(config: &mut RunConfig, alpha: Option<f64>, eta: Option<f64>) {
    if let Some(a) = alpha {
        config.process.alpha = a;
    }
    if let Some(e) = eta {
        config.process.eta = e;
    }
}

// ---------------------------------------------------------------- commands

/// What a command produced, for the caller to print.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
    pub exit_code: i32,
}

struct Run<'a> {
    command: &'static str,
    out: &'a Path,
    hash: String,
    files: Vec<PathBuf>,
    summary: Vec<String>,
}

impl<'a> Run<'a> {
    fn new(config: &'a RunConfig, command: &'static str, out: &'a Path) -> Result<Self> {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        Ok(Run {
            command,
            out,
            hash: config.hash(),
            files: Vec::new(),
            summary: Vec::new(),
        })
    }

    fn header(&self) -> String {
        format!("pleader {} config-sha256={}", self.command, self.hash)
    }

    fn write<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
    {
        let path = self.out.join(name);
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn finish(self, exit_code: i32) -> CommandOutput {
        CommandOutput {
            files: self.files,
            summary: self.summary,
            exit_code,
        }
    }
}

/// Pulse-set JSON as written by `simulate`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PulseDocument {
    header: String,
    pulse_set: PulseSet,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PulseInput {
    Document(PulseDocument),
    Bare(PulseSet),
}

pub fn cmd_simulate(config: &RunConfig, out: &Path) -> Result<CommandOutput> {
    let params = config.process_params()?;
    let set = sample_process(&params);
    let mut run = Run::new(config, "simulate", out)?;
    let doc = PulseDocument {
        header: run.header(),
        pulse_set: set.clone(),
    };
    run.write("pulses.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &doc).map_err(std::io::Error::other)?;
        writeln!(w)
    })?;
    let path = sample_path(&params, &set, config.simulate.path_samples);
    let header = run.header();
    run.write("path.csv", |w| {
        writeln!(w, "# {header}")?;
        writeln!(w, "x,F")?;
        for (x, f) in &path {
            writeln!(w, "{x},{f}")?;
        }
        Ok(())
    })?;
    run.summary.push(format!(
        "{} pulses (alpha {}, eta {}, j_max {}, seed {})",
        set.len(),
        params.alpha,
        params.eta,
        params.j_max,
        params.seed
    ));
    for band in band_partition(&set, params.eta) {
        if band.j == 0 || band.j > params.j_max {
            continue;
        }
        run.summary.push(format!(
            "band {:>2}: {:>8} pulses (expected {:.1})",
            band.j,
            band.members.len(),
            expected_band_count(band.j, params.eta)
        ));
    }
    Ok(run.finish(0))
}

/// Reads an `x,value` CSV with a uniform `x` column; `#` lines and a header
/// row are skipped.
pub fn read_signal_csv(path: &Path) -> Result<SampledSignal> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(a), Some(b)) = (fields.next(), fields.next()) else {
            return Err(AnalysisError::InvalidSignal(format!("line {}: expected two columns", n + 1)).into());
        };
        match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
            (Ok(x), Ok(v)) => {
                xs.push(x);
                vs.push(v);
            }
            _ if xs.is_empty() => continue, // header row
            _ => {
                return Err(AnalysisError::InvalidSignal(format!("line {}: not numeric", n + 1)).into());
            }
        }
    }
    if xs.len() < 2 {
        return Err(AnalysisError::InvalidSignal(format!(
            "{} holds {} samples, need at least 2",
            path.display(),
            xs.len()
        ))
        .into());
    }
    let step = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    for (i, &x) in xs.iter().enumerate() {
        if (x - (xs[0] + i as f64 * step)).abs() > 1e-6 * step {
            return Err(AnalysisError::InvalidSignal(format!(
                "sample {i} at x = {x} breaks the uniform spacing {step}"
            ))
            .into());
        }
    }
    Ok(SampledSignal::new(xs[0], step, vs)?)
}

fn read_pulses(text: &str) -> Option<PulseSet> {
    match serde_json::from_str::<PulseInput>(text).ok()? {
        PulseInput::Document(d) => Some(d.pulse_set),
        PulseInput::Bare(s) => Some(s),
    }
}

pub fn cmd_analyze(config: &RunConfig, out: &Path) -> Result<CommandOutput> {
    let input = config
        .analyze
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("analyze needs an input file (--input or analyze.input)".into()))?;
    let text = fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let psi = config.analysis_wavelet()?;
    let a = &config.analyze;
    let mut run = Run::new(config, "analyze", out)?;
    let header = run.header();

    let (plane, leaders, exponents) = if let Some(set) = read_pulses(&text) {
        // pulse sets always take the analytic per-pulse path
        set.validate()?;
        let params = set.params()?;
        let params = match &config.process.pulse {
            Some(shape) => params.with_pulse(shape.clone())?,
            None => params,
        };
        let mut setup = PulseAnalysis::new(a.p, a.grid_exponent);
        setup.scales_per_octave = a.scales_per_octave;
        if let Some(v) = a.a_min {
            setup.finest_scale = v;
        }
        if let Some(v) = a.a_max {
            setup.coarsest_scale = v;
        }
        if let Some([lo, hi]) = a.regression {
            setup.regression = (lo, hi);
        } else {
            setup.regression = (setup.regression.0.max(setup.finest_scale), setup.coarsest_scale);
        }
        let result = analyze_pulses(&params, &set, &psi, &setup)?;
        run.summary.push(format!(
            "pulse set: {} pulses, {} in the plane, {} through their self-energy",
            set.len(),
            result.resolved,
            result.unresolved
        ));
        (result.plane, result.leaders, result.exponents)
    } else {
        let f = read_signal_csv(input)?;
        let span = f.end() - f.origin();
        // below ~16 samples per scale the sampled transform loses accuracy
        let a_min = a.a_min.unwrap_or(16.0 * f.step());
        let a_max = a.a_max.unwrap_or(span / 8.0);
        let grid = ScaleGrid::dyadic(a_max, a_min, a.scales_per_octave)?;
        let stride = ((a_min / 4.0 / f.step()).floor() as usize).max(1);
        let db = stride as f64 * f.step();
        // positions whose wavelet support stays inside the signal at every scale
        let skip = (a_max / db).ceil() as usize;
        let total = (f.len() - 1) / stride + 1;
        if total <= 4 * skip + 1 {
            return Err(AnalysisError::Coverage(format!(
                "signal of length {span} is too short for scale {a_max}"
            ))
            .into());
        }
        let positions = UniformGrid::new(f.origin() + (skip * stride) as f64 * f.step(), db, total - 2 * skip)?;
        let plane = cwt(&f, &psi, &grid, &positions)?;
        let (lo, hi) = match a.regression {
            Some([lo, hi]) => (lo, hi),
            None => (2.0 * a_min, a_max),
        };
        let x_step = a.exponent_step.unwrap_or(db);
        let per = (x_step / db).round().max(1.0) as usize;
        let first = positions.at(skip);
        let count = (positions.len - 2 * skip - 1) / per + 1;
        let x0s = UniformGrid::new(first, per as f64 * db, count)?;
        let leaders = leader_field(&plane, a.p, lo, hi, &x0s)?;
        let exponents = exponent_field_from_leaders(&leaders, (lo, hi))?;
        run.summary.push(format!(
            "signal: {} samples, scales [{a_min}, {a_max}], {} exponent positions",
            f.len(),
            count
        ));
        (plane, leaders, exponents)
    };

    let stride = plane.positions().len.div_ceil(a.plane_csv_columns.max(1));
    run.write("plane.csv", |w| plane.write_csv_strided(w, Some(&header), stride))?;
    run.write("leaders.csv", |w| leaders.write_csv(w, Some(&header)))?;
    run.write("exponents.csv", |w| exponents.write_csv(w, Some(&header)))?;
    let finite: Vec<f64> = exponents.finite_slopes().collect();
    if !finite.is_empty() {
        let mean = finite.iter().sum::<f64>() / finite.len() as f64;
        run.summary.push(format!(
            "p = {}: {} finite exponents, mean {mean:.4}",
            a.p,
            finite.len()
        ));
    }
    Ok(run.finish(0))
}

/// Theoretical spectrum matching the process and `p`, if the theory covers it.
fn theory_for(config: &RunConfig, p: f64) -> Result<Option<TheoreticalSpectrum>> {
    let (alpha, eta) = (config.process.alpha, config.process.eta);
    if p.is_infinite() {
        if alpha > 0.0 {
            return Ok(Some(TheoreticalSpectrum::holder(alpha, eta)?));
        }
        return Ok(None);
    }
    if alpha < 0.0 {
        return Ok(Some(TheoreticalSpectrum::p_spectrum(alpha, eta, p)?));
    }
    Ok(None)
}

pub fn cmd_spectrum(config: &RunConfig, out: &Path) -> Result<CommandOutput> {
    // hypothesis violations are reported before any work is done
    let p_requested = config.analyze.p;
    let early_theory = if config.spectrum.chain {
        theory_for(config, p_requested)?
    } else {
        None
    };
    let field = if config.spectrum.chain {
        let params = config.process_params()?;
        let set = sample_process(&params);
        let psi = config.analysis_wavelet()?;
        let mut setup = PulseAnalysis::new(p_requested, config.analyze.grid_exponent);
        setup.scales_per_octave = config.analyze.scales_per_octave;
        analyze_pulses(&params, &set, &psi, &setup)?.exponents
    } else {
        let input = config.spectrum.input.as_ref().ok_or_else(|| {
            Error::Config("spectrum needs an exponent CSV (--input) or --chain".into())
        })?;
        let text = fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
        ExponentField::read_csv(&text)?
    };
    let theory = match early_theory {
        Some(t) => Some(t),
        None => theory_for(config, field.p)?,
    };
    let n = field.positions.len;
    if !n.is_power_of_two() {
        return Err(AnalysisError::InvalidGrid(format!("exponent field has {n} points, expected a power of two")).into());
    }
    let j = n.trailing_zeros();
    let estimate = coarse_grained_spectrum(&field, config.spectrum.bin_width, j)?;

    let mut run = Run::new(config, "spectrum", out)?;
    let header = run.header();
    run.write("spectrum.csv", |w| estimate.write_csv(w, theory.as_ref(), Some(&header)))?;
    let title = spectrum_title(config, field.p);
    let svg = render_svg(&estimate, theory.as_ref(), &title);
    run.write("spectrum.svg", |w| write_svg_with_comment(w, &svg, &header))?;
    if config.spectrum.chain {
        run.write("exponents.csv", |w| field.write_csv(w, Some(&header)))?;
    }
    summarize_spectrum(&mut run.summary, &estimate, theory.as_ref());
    Ok(run.finish(0))
}

fn spectrum_title(config: &RunConfig, p: f64) -> String {
    let p = if p.is_infinite() { "inf".to_string() } else { p.to_string() };
    format!("alpha = {}, eta = {}, p = {p}", config.process.alpha, config.process.eta)
}

fn write_svg_with_comment(w: &mut impl Write, svg: &str, comment: &str) -> std::io::Result<()> {
    // the comment goes right after the opening tag's line so the file still starts with <svg
    match svg.split_once('\n') {
        Some((first, rest)) => write!(w, "{first}\n<!-- {comment} -->\n{rest}"),
        None => write!(w, "{svg}\n<!-- {comment} -->\n"),
    }
}

fn summarize_spectrum(summary: &mut Vec<String>, est: &SpectrumEstimate, theory: Option<&TheoreticalSpectrum>) {
    summary.push(format!(
        "{} exponents in {} bins of width {} ({} excluded)",
        est.num_points,
        est.counts.len(),
        est.bin_width,
        est.excluded
    ));
    if let Some((h, d)) = est.peak() {
        summary.push(format!("peak at h = {h:.3}, dim {d:.3}"));
    }
    if let Some(t) = theory {
        summary.push(format!(
            "theoretical support [{:.4}, {:.4}]",
            t.support.0, t.support.1
        ));
    }
}

/// `report.json` plus the header line.
#[derive(Debug, Serialize, Deserialize)]
pub struct ReportDocument {
    pub header: String,
    #[serde(flatten)]
    pub report: VerifyReport,
}

pub fn cmd_verify(config: &RunConfig, out: &Path) -> Result<CommandOutput> {
    let options = SuiteOptions {
        only: config.verify.only.clone(),
        tolerances: config.verify.tolerances.clone(),
        seeds: config.verify.seeds.clone(),
        sweep: config.verify.sweep.clone(),
    };
    let report = run_suite(&options)?;
    let mut run = Run::new(config, "verify", out)?;
    let doc = ReportDocument {
        header: run.header(),
        report,
    };
    run.write("report.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &doc).map_err(std::io::Error::other)?;
        writeln!(w)
    })?;
    for c in &doc.report.criteria {
        run.summary.push(c.summary_line());
        if let Some(s) = &c.seed_sweep {
            run.summary.push(format!("    sweep pass rate {:.3} over {} seeds", s.pass_rate, s.seeds.len()));
        }
    }
    let code = if doc.report.all_pass { 0 } else { EXIT_ACCEPTANCE_FAILURE };
    Ok(run.finish(code))
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(output) => {
            for line in &output.summary {
                println!("{line}");
            }
            for f in &output.files {
                println!("wrote {}", f.display());
            }
            output.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(cli: &Cli) -> Result<CommandOutput> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let config = effective_config(cli)?;
    let out = cli.common.out.as_path();
    match cli.command {
        Command::Simulate { .. } => cmd_simulate(&config, out),
        Command::Analyze { .. } => cmd_analyze(&config, out),
        Command::Spectrum { .. } => cmd_spectrum(&config, out),
        Command::Verify { .. } => cmd_verify(&config, out),
    }
}
