//! The acceptance suite: ten numbered checks of the library against closed
//! forms and the statistical behaviour of the pulse process.
//!
//! Every check reports one headline number against one tolerance. The
//! tolerance can be overridden by name; everything else about a check is
//! fixed here so that reports from different machines are comparable.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cwt::{cwt, reconstruct, SampledSignal, ScaleGrid, UniformGrid};
use crate::error::Result;
use crate::exponent::estimate_p_exponent;
use crate::leaders::{leader_field, lp_norm_proxy, LeaderField};
use crate::numeric::fit_line;
use crate::pulse::{
    band_norms, band_partition, epsilon_j, expected_band_count, sample_process, PulseProcessParams,
};
use crate::pulse_analysis::{analyze_pulses, PulseAnalysis};
use crate::spectrum::{coarse_grained_spectrum, theoretical_p_spectrum, Dim};
use crate::wavelet::{
    admissibility_constant, build_even_wavelet, build_reconstruction_wavelet, cross_admissibility,
    moment, AnalyzingWavelet, WaveletShape, MOMENT_TOLERANCE,
};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Identifiers in suite order.
pub const CRITERIA: [&str; 10] = ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9", "A10"];

/// Seeds of the pulse-process checks.
pub const DEFAULT_SEEDS: [u64; 3] = [1, 2, 3];

/// Truncation depths of the pulse realizations used by A7 and A8. Pulses
/// narrower than the plane enter the leaders through their self-energy, so
/// depth only costs sampling time.
pub const A7_J_MAX: u32 = 20;
pub const A8_J_MAX: u32 = 40;
/// Deep enough that the band norms are resolved by the quadrature grid.
pub const A9_J_MAX: u32 = 18;

/// Exponent grid `2^J` of the spectrum checks and their histogram bin width.
pub const SPECTRUM_GRID: u32 = 14;
pub const SPECTRUM_BIN_WIDTH: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSweep {
    pub seeds: Vec<u64>,
    pub passed: Vec<bool>,
    pub pass_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub name: String,
    pub title: String,
    pub target: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub runtime_s: f64,
    pub runtime_limit_s: f64,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_sweep: Option<SeedSweep>,
}

impl CriterionReport {
    /// `A1 PASS measured=… tol=… (1.2 s) detail`
    pub fn summary_line(&self) -> String {
        format!(
            "{:<3} {} measured={:.4e} tol={:e} ({:.1} s / {:.0} s) {}: {}",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.measured,
            self.tolerance,
            self.runtime_s,
            self.runtime_limit_s,
            self.title,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub format_version: u32,
    pub criteria: Vec<CriterionReport>,
    pub all_pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    /// Run only these criteria (all when `None`).
    pub only: Option<Vec<String>>,
    pub tolerances: BTreeMap<String, f64>,
    pub seeds: Vec<u64>,
    /// Extra seeds for the stochastic checks; per-seed outcomes are reported
    /// but do not change `pass`.
    pub sweep: Option<Vec<u64>>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            only: None,
            tolerances: BTreeMap::new(),
            seeds: DEFAULT_SEEDS.to_vec(),
            sweep: None,
        }
    }
}

pub fn default_tolerance(name: &str) -> Option<f64> {
    Some(match name {
        "A1" => 0.05,
        "A2" => 1e-6,
        "A3" => 0.05,
        "A4" => 50.0,
        "A5" => 3.0,
        "A6" => 3.0,
        "A7" => 0.1,
        "A8" => 0.15,
        "A9" => 0.1,
        "A10" => 1e-12,
        _ => return None,
    })
}

fn runtime_limit(name: &str) -> Duration {
    Duration::from_secs(match name {
        "A2" | "A10" => 1,
        "A1" | "A5" => 10,
        "A3" | "A4" => 30,
        "A6" | "A9" => 60,
        "A7" => 300,
        _ => 600,
    })
}

fn title(name: &str) -> &'static str {
    match name {
        "A1" => "cusp p-leader power law",
        "A2" => "wavelet certification and polynomial annihilation",
        "A3" => "reconstruction of a smooth bump",
        "A4" => "N_f norm equivalence over a signal battery",
        "A5" => "cusp leaders bounded by a^alpha",
        "A6" => "band census of the pulse process",
        "A7" => "Holder spectrum of pulses (alpha=0.5, eta=0.9)",
        "A8" => "p-spectrum of pulses (alpha=-0.7, eta=0.5, p=1.2)",
        "A9" => "L^p band norms and partial sums (alpha=-0.7, eta=0.5, p=1.3)",
        _ => "spectrum identities at the support endpoints",
    }
}

/// Outcome of one check before timing is attached.
struct Outcome {
    target: String,
    measured: f64,
    pass: bool,
    detail: String,
    seed_sweep: Option<SeedSweep>,
}

/// Runs the selected criteria in suite order.
pub fn run_suite(options: &SuiteOptions) -> Result<VerifyReport> {
    if let Some(only) = &options.only {
        if let Some(bad) = only.iter().find(|n| default_tolerance(n).is_none()) {
            return Err(crate::error::Error::Config(format!("unknown criterion {bad}")));
        }
    }
    if let Some(bad) = options.tolerances.keys().find(|n| default_tolerance(n).is_none()) {
        return Err(crate::error::Error::Config(format!("tolerance override for unknown criterion {bad}")));
    }
    if options.seeds.is_empty() {
        return Err(crate::error::Error::Config("at least one seed is required".into()));
    }
    let mut criteria = Vec::new();
    for name in CRITERIA {
        if options.only.as_ref().is_some_and(|o| !o.iter().any(|n| n == name)) {
            continue;
        }
        criteria.push(run_criterion(name, options)?);
    }
    let all_pass = criteria.iter().all(|c| c.pass);
    Ok(VerifyReport {
        format_version: REPORT_FORMAT_VERSION,
        criteria,
        all_pass,
    })
}

/// Runs one criterion by name.
pub fn run_criterion(name: &str, options: &SuiteOptions) -> Result<CriterionReport> {
    let tol = options
        .tolerances
        .get(name)
        .copied()
        .or_else(|| default_tolerance(name))
        .ok_or_else(|| crate::error::Error::Config(format!("unknown criterion {name}")))?;
    let start = Instant::now();
    let outcome = match name {
        "A1" => cusp_power_law(tol)?,
        "A2" => certification(tol)?,
        "A3" => reconstruction(tol)?,
        "A4" => norm_equivalence(tol)?,
        "A5" => cusp_boundedness(tol)?,
        "A6" => band_census(tol),
        "A7" => holder_spectrum(tol, &options.seeds, options.sweep.as_deref())?,
        "A8" => p_spectrum(tol, &options.seeds, options.sweep.as_deref())?,
        "A9" => band_norm_decay(tol, &options.seeds, options.sweep.as_deref())?,
        _ => spectrum_identities(tol)?,
    };
    let elapsed = start.elapsed();
    let limit = runtime_limit(name);
    let in_time = elapsed <= limit;
    let mut detail = outcome.detail;
    if !in_time {
        detail.push_str(&format!("; over the runtime limit ({:.1} s)", elapsed.as_secs_f64()));
    }
    Ok(CriterionReport {
        name: name.to_string(),
        title: title(name).to_string(),
        target: outcome.target,
        measured: outcome.measured,
        tolerance: tol,
        pass: outcome.pass && in_time,
        runtime_s: elapsed.as_secs_f64(),
        runtime_limit_s: limit.as_secs_f64(),
        detail,
        seed_sweep: outcome.seed_sweep,
    })
}

/// Wavelet used for every leader-based check.
pub fn analysis_wavelet() -> Result<AnalyzingWavelet> {
    Ok(build_even_wavelet(6, 7)?)
}

// ---------------------------------------------------------------- cusps

const CUSP_ALPHAS: [f64; 3] = [0.3, 0.5, 0.7];
const CUSP_PS: [f64; 3] = [1.5, 2.0, 4.0];
/// Regression range of the cusp checks: five octaves.
const CUSP_RANGE: (f64, f64) = (1.0 / 256.0, 1.0 / 8.0);

/// Leader fields at the origin for every cusp and exponent.
fn cusp_leaders() -> Result<Vec<(f64, f64, LeaderField)>> {
    let psi = analysis_wavelet()?;
    let grid = ScaleGrid::dyadic(CUSP_RANGE.1, CUSP_RANGE.0 / 2.0, 8)?;
    let positions = UniformGrid::spanning(-0.25, 0.25, 1.0 / 4096.0)?;
    let origin = UniformGrid::new(0.0, 1.0 / 4096.0, 1)?;
    let mut out = Vec::new();
    for alpha in CUSP_ALPHAS {
        let f = SampledSignal::from_fn(-1.0, 1.0, (1 << 15) + 1, |x: f64| x.abs().powf(alpha))?;
        let plane = cwt(&f, &psi, &grid, &positions)?;
        for p in CUSP_PS {
            out.push((alpha, p, leader_field(&plane, p, CUSP_RANGE.0, CUSP_RANGE.1, &origin)?));
        }
    }
    Ok(out)
}

fn cusp_power_law(tol: f64) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (alpha, p, leaders) in cusp_leaders()? {
        let slope = estimate_p_exponent(&leaders, 0.0, CUSP_RANGE)?.value();
        worst = worst.max((slope - alpha).abs());
        parts.push(format!("{alpha}/{p}:{slope:.4}"));
    }
    Ok(Outcome {
        target: "|slope - alpha| <= tol over 5 octaves, alpha in {0.3,0.5,0.7}, p in {1.5,2,4}".into(),
        measured: worst,
        pass: worst <= tol,
        detail: format!("slopes {}", parts.join(" ")),
        seed_sweep: None,
    })
}

fn cusp_boundedness(tol: f64) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (alpha, p, leaders) in cusp_leaders()? {
        let normalized: Vec<f64> = leaders.column(0).map(|(a, l, _)| l * a.powf(-alpha)).collect();
        let max = normalized.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = normalized.iter().cloned().fold(f64::INFINITY, f64::min);
        let ratio = if min > 0.0 { max / min } else { f64::INFINITY };
        worst = worst.max(ratio);
        parts.push(format!("{alpha}/{p}:{ratio:.3}"));
    }
    Ok(Outcome {
        target: "max/min of L(a,0) a^-alpha < tol over the regression scales".into(),
        measured: worst,
        pass: worst < tol,
        detail: format!("ratios {}", parts.join(" ")),
        seed_sweep: None,
    })
}

// ---------------------------------------------------------------- wavelets

const CERTIFIED_FAMILY: [(u32, u32); 6] = [(2, 1), (2, 2), (3, 3), (4, 4), (6, 7), (8, 9)];

fn certification(tol: f64) -> Result<Outcome> {
    let mut family: Vec<(String, AnalyzingWavelet)> = Vec::new();
    for (nv, s) in CERTIFIED_FAMILY {
        family.push((format!("psi({nv},{s})"), build_even_wavelet(nv, s)?));
    }
    // the reconstruction partner goes through the same checks
    let phi = build_reconstruction_wavelet(&build_even_wavelet(2, 2)?);
    family.push((
        "phi".into(),
        AnalyzingWavelet::from_shape(phi.shape().clone(), phi.vanishing_moments(), phi.smoothness())?,
    ));

    let mut worst_moment: f64 = 0.0;
    let mut worst_annihilation: f64 = 0.0;
    let mut problems = Vec::new();
    let grid = ScaleGrid::dyadic(0.5, 1.0 / 64.0, 8)?;
    let positions = UniformGrid::spanning(-1.0, 1.0, 1.0 / 64.0)?;
    for (label, w) in &family {
        let (lo, hi) = w.shape().support();
        if lo < -1.0 || hi > 1.0 {
            problems.push(format!("{label}: support [{lo}, {hi}]"));
        }
        let nv = w.vanishing_moments();
        for m in 0..nv {
            worst_moment = worst_moment.max(moment(w, m).abs());
        }
        let odd_part = (0..=200)
            .map(|i| {
                let x = -1.0 + i as f64 / 100.0;
                (w.eval(x) - w.eval(-x)).abs()
            })
            .fold(0.0, f64::max);
        if odd_part > 1e-12 {
            problems.push(format!("{label}: not even ({odd_part:e})"));
        }
        // generic polynomial of the highest annihilated degree
        let degree = (nv - 1) as i32;
        let poly = |x: f64| {
            (0..=degree)
                .map(|k| (1.0 + 0.5 * k as f64) * (-1.0_f64).powi(k) * x.powi(k))
                .sum::<f64>()
        };
        let f = SampledSignal::from_fn(-2.0, 2.0, 4097, poly)?;
        let plane = cwt(&f, w, &grid, &positions)?;
        let max_w = plane.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        worst_annihilation = worst_annihilation.max(max_w / f.sup_norm());
    }
    if worst_moment >= MOMENT_TOLERANCE {
        problems.push(format!("moment {worst_moment:e}"));
    }
    Ok(Outcome {
        target: format!(
            "|moment| < {MOMENT_TOLERANCE:e}, support in [-1,1], even; polynomial CWT / sup|f| < tol"
        ),
        measured: worst_annihilation,
        pass: problems.is_empty() && worst_annihilation < tol,
        detail: if problems.is_empty() {
            format!("{} wavelets, worst moment {worst_moment:.2e}", family.len())
        } else {
            problems.join("; ")
        },
        seed_sweep: None,
    })
}

// ---------------------------------------------------------------- transform

/// Zero-mean bump `(1 - x²/σ²) e^{-x²/(2σ²)}`.
pub fn ricker(x: f64, sigma: f64) -> f64 {
    let r = (x / sigma).powi(2);
    (1.0 - r) * (-0.5 * r).exp()
}

fn reconstruction(tol: f64) -> Result<Outcome> {
    let sigma = 0.05;
    let psi = build_even_wavelet(2, 2)?;
    let phi = build_reconstruction_wavelet(&psi);
    let c = cross_admissibility(&psi, &phi)?;
    let f = SampledSignal::from_fn(-4.0, 4.0, 16001, |x| ricker(x, sigma))?;
    let grid = ScaleGrid::dyadic(2.0, 0.002, 8)?;
    let positions = UniformGrid::spanning(-2.0, 2.0, 0.0005)?;
    let plane = cwt(&f, &psi, &grid, &positions)?;
    let xs = UniformGrid::spanning(-0.5, 0.5, 0.001)?;
    let rec = reconstruct(&plane, &phi, &c, &xs)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (x, r) in xs.iter().zip(rec.values()) {
        let v = ricker(x, sigma);
        num += (r - v).powi(2);
        den += v * v;
    }
    let err = (num / den).sqrt();
    let c_psi = admissibility_constant(&psi)?;
    Ok(Outcome {
        target: "relative L2 error on [-0.5, 0.5] < tol".into(),
        measured: err,
        pass: err < tol,
        detail: format!(
            "sigma {sigma}, scales [0.002, 2] at 8/octave, c(psi,phi) = {:.6}, c_psi = {:.6}",
            c.c_psi, c_psi.c_psi
        ),
        seed_sweep: None,
    })
}

/// The six signals of the norm-equivalence battery.
pub fn norm_battery() -> Vec<(&'static str, Box<dyn Fn(f64) -> f64>)> {
    vec![
        ("ricker 0.02", Box::new(|x| ricker(x, 0.02))),
        ("ricker 0.05", Box::new(|x| ricker(x, 0.05))),
        (
            "gabor",
            Box::new(|x: f64| (20.0 * std::f64::consts::PI * x).cos() * (-0.5 * (x / 0.05).powi(2)).exp()),
        ),
        ("gaussian derivative", Box::new(|x: f64| -x / 0.03 * (-0.5 * (x / 0.03).powi(2)).exp())),
        (
            "two bumps",
            Box::new(|x| ricker(x - 0.2, 0.03) - 0.5 * ricker(x + 0.15, 0.04)),
        ),
        (
            "compact polynomial",
            Box::new(|x: f64| {
                let u = x / 0.1;
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    -8.0 * u * (1.0 - u * u).powi(3)
                }
            }),
        ),
    ]
}

fn norm_equivalence(tol: f64) -> Result<Outcome> {
    let p = 2.0;
    let psi = build_even_wavelet(2, 2)?;
    let grid = ScaleGrid::dyadic(1.0, 1.0 / 512.0, 8)?;
    let positions = UniformGrid::spanning(-1.5, 1.5, 1.0 / 1024.0)?;
    let mut ratios = Vec::new();
    let mut parts = Vec::new();
    for (label, g) in norm_battery() {
        let f = SampledSignal::from_fn(-3.0, 3.0, 6 * 4096 + 1, g)?;
        let plane = cwt(&f, &psi, &grid, &positions)?;
        let n_f = lp_norm_proxy(&plane, p)?;
        let norm = f.lp_norm(p, -3.0, 3.0);
        let ratio = norm / n_f;
        parts.push(format!("{label}:{ratio:.3}"));
        ratios.push(ratio);
    }
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let span = max / min;
    Ok(Outcome {
        target: "max/min of ||f||_2 / N_f over 6 signals < tol".into(),
        measured: span,
        pass: span.is_finite() && span < tol,
        detail: format!("ratios {}", parts.join(" ")),
        seed_sweep: None,
    })
}

// ---------------------------------------------------------------- pulses

const CENSUS_SEEDS: u64 = 200;
const CENSUS_BANDS: std::ops::RangeInclusive<u32> = 5..=15;

fn band_census(tol: f64) -> Outcome {
    let (alpha, eta, j_max) = (0.5, 0.9, *CENSUS_BANDS.end());
    let bands: Vec<u32> = CENSUS_BANDS.collect();
    let mut counts = vec![Vec::new(); bands.len()];
    let (mut inside, mut total) = (0usize, 0usize);
    for seed in 1..=CENSUS_SEEDS {
        let params = PulseProcessParams::new(alpha, eta, j_max, seed).expect("valid census parameters");
        let set = sample_process(&params);
        let partition = band_partition(&set, eta);
        for (k, &j) in bands.iter().enumerate() {
            let card = partition.get(j as usize).map_or(0, |b| b.members.len()) as f64;
            counts[k].push(card);
            if j >= 10 {
                let e = epsilon_j(j, eta);
                let lo = (eta * j as f64 * (1.0 - e)).exp2();
                let hi = (eta * j as f64 * (1.0 + e)).exp2();
                total += 1;
                inside += (card >= lo && card <= hi) as usize;
            }
        }
    }
    let n = CENSUS_SEEDS as f64;
    let mut worst_z: f64 = 0.0;
    for (k, &j) in bands.iter().enumerate() {
        let mean = counts[k].iter().sum::<f64>() / n;
        let var = counts[k].iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        let z = (mean - expected_band_count(j, eta)).abs() / se;
        worst_z = worst_z.max(z);
    }
    let envelope = inside as f64 / total as f64;
    Outcome {
        target: "|mean - 2^(eta j)(1 - 2^-eta)| <= tol SE for j in 5..=15; envelope holds for >= 95% of j >= 10".into(),
        measured: worst_z,
        pass: worst_z <= tol && envelope >= 0.95,
        detail: format!("{CENSUS_SEEDS} seeds, eta {eta}, envelope fraction {envelope:.4}"),
        seed_sweep: None,
    }
}

struct SeedCheck {
    pass: bool,
    measured: f64,
    detail: String,
}

fn holder_seed(tol: f64, seed: u64) -> Result<SeedCheck> {
    let (alpha, eta) = (0.5, 0.9);
    let params = PulseProcessParams::new(alpha, eta, A7_J_MAX, seed)?;
    let set = sample_process(&params);
    let psi = analysis_wavelet()?;
    let out = analyze_pulses(&params, &set, &psi, &PulseAnalysis::new(f64::INFINITY, SPECTRUM_GRID))?;
    let est = coarse_grained_spectrum(&out.exponents, SPECTRUM_BIN_WIDTH, SPECTRUM_GRID)?;
    let (h_peak, d_peak) = est.peak().unwrap_or((f64::NAN, f64::NAN));
    let lowest = out.exponents.finite_slopes().fold(f64::INFINITY, f64::min);
    let floor = alpha * eta - 0.1;
    let deviation = (h_peak - alpha).abs().max((d_peak - 1.0).abs());
    Ok(SeedCheck {
        pass: deviation <= tol && lowest >= floor,
        measured: deviation,
        detail: format!("seed {seed}: peak ({h_peak:.3}, {d_peak:.3}), lowest exponent {lowest:.3}"),
    })
}

fn p_spectrum_seed(tol: f64, seed: u64) -> Result<SeedCheck> {
    let (alpha, eta, p) = (-0.7, 0.5, 1.2);
    let params = PulseProcessParams::new(alpha, eta, A8_J_MAX, seed)?;
    let set = sample_process(&params);
    let psi = analysis_wavelet()?;
    let out = analyze_pulses(&params, &set, &psi, &PulseAnalysis::new(p, SPECTRUM_GRID))?;
    let est = coarse_grained_spectrum(&out.exponents, SPECTRUM_BIN_WIDTH, SPECTRUM_GRID)?;
    let formula = |h: f64| (h * eta * p + eta) / (alpha * eta * p + 1.0);
    let mut worst: f64 = 0.0;
    for ((h, &count), dim) in est.centers().zip(&est.counts).zip(&est.dims) {
        if count < 32 {
            continue;
        }
        if let Dim::Finite(d) = dim {
            worst = worst.max((d - formula(h)).abs());
        }
    }
    let (left, right) = (alpha * eta, alpha + (1.0 - eta) / (eta * p));
    let (lo, hi) = est.support_with_min_count(32).unwrap_or((f64::NAN, f64::NAN));
    let endpoints_ok = (lo - left).abs() <= 0.1 && (hi - right).abs() <= 0.1;
    Ok(SeedCheck {
        pass: worst <= tol && endpoints_ok,
        measured: worst,
        detail: format!(
            "seed {seed}: worst |dim - D| {worst:.3}, support [{lo:.3}, {hi:.3}] vs [{left:.3}, {right:.3}]"
        ),
    })
}

/// Runs a per-seed check over the suite seeds (requiring `needed` passes) and
/// optionally over a sweep.
fn seeded<F>(seeds: &[u64], needed: usize, sweep: Option<&[u64]>, target: String, check: F) -> Result<Outcome>
where
    F: Fn(u64) -> Result<SeedCheck>,
{
    let mut passes = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut details = Vec::new();
    for &seed in seeds {
        let c = check(seed)?;
        passes += c.pass as usize;
        worst = worst.max(c.measured);
        details.push(format!("{} [{}]", c.detail, if c.pass { "pass" } else { "fail" }));
    }
    let seed_sweep = match sweep {
        Some(extra) => {
            let passed = extra.iter().map(|&s| check(s).map(|c| c.pass)).collect::<Result<Vec<_>>>()?;
            let rate = passed.iter().filter(|&&b| b).count() as f64 / passed.len().max(1) as f64;
            Some(SeedSweep {
                seeds: extra.to_vec(),
                passed,
                pass_rate: rate,
            })
        }
        None => None,
    };
    Ok(Outcome {
        target: format!("{target}; {needed} of {} seeds", seeds.len()),
        measured: worst,
        pass: passes >= needed,
        detail: details.join("; "),
        seed_sweep,
    })
}

fn holder_spectrum(tol: f64, seeds: &[u64], sweep: Option<&[u64]>) -> Result<Outcome> {
    seeded(
        seeds,
        seeds.len(),
        sweep,
        "peak within tol of (0.5, 1), no exponent below 0.35".into(),
        |s| holder_seed(tol, s),
    )
}

fn p_spectrum(tol: f64, seeds: &[u64], sweep: Option<&[u64]>) -> Result<Outcome> {
    // two of three, scaled to the number of seeds given
    let needed = (2 * seeds.len()).div_ceil(3);
    seeded(
        seeds,
        needed,
        sweep,
        "|dim - (H eta p + eta)/(alpha eta p + 1)| <= tol on bins with >= 32 points, endpoints within 0.1".into(),
        |s| p_spectrum_seed(tol, s),
    )
}

fn band_norm_seed(tol: f64, seed: u64) -> Result<SeedCheck> {
    let (alpha, eta, p) = (-0.7, 0.5, 1.3);
    let params = PulseProcessParams::new(alpha, eta, A9_J_MAX, seed)?;
    let set = sample_process(&params);
    let norms = band_norms(&params, &set, p)?;
    let (mut js, mut logs) = (Vec::new(), Vec::new());
    for (j, &n) in norms.per_band.iter().enumerate().skip(4) {
        if n > 0.0 && j as u32 <= A9_J_MAX {
            js.push(j as f64);
            logs.push(n.log2());
        }
    }
    let slope = fit_line(&js, &logs).map_or(f64::NAN, |f| f.slope);
    let bound = -alpha * eta + eta / p - 1.0 / p + tol;
    let last = A9_J_MAX as usize;
    let tail = norms.per_band[last] / norms.partial_sums[last];
    Ok(SeedCheck {
        pass: slope <= bound && tail < 0.01,
        measured: slope,
        detail: format!(
            "seed {seed}: log2 slope {slope:.4} (bound {bound:.4}), last band / partial sum {tail:.4} (< 0.01)"
        ),
    })
}

fn band_norm_decay(tol: f64, seeds: &[u64], sweep: Option<&[u64]>) -> Result<Outcome> {
    seeded(
        &seeds[..1],
        1,
        sweep,
        "band-norm log2 slope <= -alpha eta + eta/p - 1/p + tol, partial sums Cauchy to 1%".into(),
        |s| band_norm_seed(tol, s),
    )
}

// ---------------------------------------------------------------- theory

fn spectrum_identities(tol: f64) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let eta = rng.random_range(0.05..0.95);
        // η - 1 < αη  <=>  α > 1 - 1/η
        let alpha = rng.random_range((1.0 - 1.0 / eta) * 0.999..-1e-3);
        let hi = -1.0 / (alpha * eta) + 1.0 / alpha;
        let p = rng.random_range(1.0 + 1e-6..hi);
        let left = theoretical_p_spectrum(alpha, eta, p, alpha * eta)?;
        let right = theoretical_p_spectrum(alpha, eta, p, alpha + (1.0 - eta) / (eta * p))?;
        let e_left = left.finite().map_or(f64::INFINITY, |d| (d - eta).abs());
        let e_right = right.finite().map_or(f64::INFINITY, |d| (d - 1.0).abs());
        worst = worst.max(e_left).max(e_right);
    }
    Ok(Outcome {
        target: "D(alpha eta) = eta and D(alpha + (1-eta)/(eta p)) = 1 for 100 admissible triples".into(),
        measured: worst,
        pass: worst <= tol,
        detail: "largest deviation over both endpoints".into(),
        seed_sweep: None,
    })
}
