//! Leader and exponent fields of a pulse process, computed from the analytic
//! per-pulse transform.
//!
//! The time-scale plane only reaches down to a finest scale `a_min`, but the
//! pulses of a realization can be far narrower. A pulse of amplitude `h` and
//! half-width `w` contributes `h^p · w · K_p` to the p-leader window integral,
//! whatever `w` is, where
//!
//! `K_p = ∫ (∫_0^∞ |d(σ, u)|² dσ/σ)^{p/2} du`
//!
//! and `d` is the transform of the unit pulse. Pulses narrower than a few
//! `a_min` are therefore left out of the plane and added back through this
//! constant; narrow pulses are isolated from one another and sit where wider
//! pulses are locally polynomial, so cross terms are negligible.

use crate::cwt::{pulse_coefficient, PulseTransform, ScaleGrid, TimeScalePlane, UniformGrid};
use crate::error::AnalysisError;
use crate::exponent::{exponent_field_from_leaders, ExponentField};
use crate::leaders::{add_point_features, leader_field, LeaderField};
use crate::numeric::GaussLegendre;
use crate::poly::PiecewisePolynomial;
use crate::pulse::{PulseProcessParams, PulseSet};
use crate::wavelet::WaveletShape;

/// Pulses with half-width below `UNRESOLVED_FACTOR · a_min` are handled
/// through their self-energy instead of the plane.
pub const UNRESOLVED_FACTOR: f64 = 4.0;

/// Discretization of a pulse-process analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseAnalysis {
    pub p: f64,
    /// Exponents are reported on the `2^J` points `k 2^{-J}` of `[0, 1)`.
    pub grid_exponent: u32,
    pub scales_per_octave: u32,
    pub finest_scale: f64,
    pub coarsest_scale: f64,
    pub regression: (f64, f64),
    /// Exact evaluations per scale length along each row of the plane.
    pub samples_per_scale: usize,
}

impl PulseAnalysis {
    /// Plane from `2^{-2}` down to `2^{-J}` at 8 scales per octave, sampled
    /// every `2^{-(J+2)}`; regression over `[2^{-(J-2)}, 2^{-2}]`, i.e. down to
    /// the unresolved-pulse cutoff.
    pub fn new(p: f64, grid_exponent: u32) -> Self {
        let j = grid_exponent as f64;
        PulseAnalysis {
            p,
            grid_exponent,
            scales_per_octave: 8,
            finest_scale: (-j).exp2(),
            coarsest_scale: 0.25,
            regression: ((2.0 - j).exp2(), 0.25),
            samples_per_scale: 8,
        }
    }

    pub fn position_step(&self) -> f64 {
        self.finest_scale / 4.0
    }

    fn check(&self) -> Result<(), AnalysisError> {
        if !(self.p > 1.0) {
            return Err(AnalysisError::InvalidP(self.p));
        }
        if self.grid_exponent == 0 || self.grid_exponent > 24 {
            return Err(AnalysisError::InvalidGrid(format!(
                "grid exponent must be in 1..=24, got {}",
                self.grid_exponent
            )));
        }
        let (lo, hi) = self.regression;
        if !(self.finest_scale > 0.0
            && self.finest_scale <= lo
            && lo < hi
            && hi <= self.coarsest_scale
            && self.coarsest_scale < 1.0)
        {
            return Err(AnalysisError::InvalidGrid(format!(
                "need 0 < a_min ≤ {lo} < {hi} ≤ a_max < 1 with a_min = {}, a_max = {}",
                self.finest_scale, self.coarsest_scale
            )));
        }
        let step = self.position_step();
        let per_point = (-(self.grid_exponent as f64)).exp2() / step;
        if per_point < 1.0 || (per_point - per_point.round()).abs() > 1e-9 {
            return Err(AnalysisError::InvalidGrid(format!(
                "position step {step} must divide the exponent grid step"
            )));
        }
        Ok(())
    }
}

/// Everything produced by [`analyze_pulses`].
#[derive(Debug, Clone)]
pub struct PulseAnalysisOutput {
    pub plane: TimeScalePlane,
    pub leaders: LeaderField,
    pub exponents: ExponentField,
    pub resolved: usize,
    pub unresolved: usize,
}

/// `K_p` for finite `p`, `sup |d|` for `p = ∞`.
pub fn pulse_self_energy<W: WaveletShape>(pulse: &PiecewisePolynomial, analyzer: &W, p: f64) -> f64 {
    let rule = GaussLegendre::cached((pulse.degree() + analyzer.shape().degree()) / 2 + 1);
    let d = |sigma: f64, u: f64| pulse_coefficient(pulse, analyzer, &rule, 1.0, 0.0, sigma, u);
    let (ln_lo, ln_hi, per_unit) = (1e-6_f64.ln(), 1e3_f64.ln(), 32.0);
    let energy = |u: f64| -> (f64, f64) {
        // d(σ, u) vanishes unless σ > |u| - 1
        let start = ((u.abs() - 1.0).max(1e-6)).ln().max(ln_lo);
        let n = ((ln_hi - start) * per_unit).ceil().max(2.0) as usize;
        let h = (ln_hi - start) / n as f64;
        let mut e = 0.0;
        let mut peak = 0.0_f64;
        for i in 0..=n {
            let v = d((start + i as f64 * h).exp(), u);
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            e += w * v * v;
            peak = peak.max(v.abs());
        }
        (e * h, peak)
    };
    // uniform in u near the pulse, logarithmic in |u| further out
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    let (inner, du) = (3.0, 1.0 / 128.0);
    let m = (2.0 * inner / du) as usize;
    for i in 0..=m {
        let w = if i == 0 || i == m { 0.5 } else { 1.0 };
        nodes.push((-inner + i as f64 * du, w * du));
    }
    let (outer, per_octave) = (1024.0_f64, 32usize);
    let steps = (outer / inner).log2().ceil() as usize * per_octave;
    let dl = (outer / inner).ln() / steps as f64;
    for i in 0..=steps {
        let u = inner * (i as f64 * dl).exp();
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        nodes.push((u, w * dl * u));
        nodes.push((-u, w * dl * u));
    }
    if p.is_infinite() {
        return nodes.iter().map(|&(u, _)| energy(u).1).fold(0.0, f64::max);
    }
    nodes.iter().map(|&(u, w)| w * energy(u).0.powf(0.5 * p)).sum()
}

/// Plane, leaders and exponents of a realization on the `2^J` grid of
/// `[0, 1)`.
pub fn analyze_pulses<W: WaveletShape + Sync>(
    params: &PulseProcessParams,
    pulses: &PulseSet,
    analyzer: &W,
    config: &PulseAnalysis,
) -> Result<PulseAnalysisOutput, AnalysisError> {
    config.check()?;
    let cutoff = UNRESOLVED_FACTOR * config.finest_scale;
    let (wide, narrow): (Vec<_>, Vec<_>) = pulses
        .pulses
        .iter()
        .partition(|p| 1.0 / p.dilation(pulses.eta) >= cutoff);
    let resolved = PulseSet {
        pulses: wide,
        ..pulses.clone()
    };

    let grid = ScaleGrid::dyadic(config.coarsest_scale, config.finest_scale, config.scales_per_octave)?;
    let db = config.position_step();
    let reach = config.coarsest_scale + db;
    let positions = UniformGrid::spanning(-reach, 1.0 + reach, db)?;
    let transform = PulseTransform::new(params, &resolved, analyzer);
    let plane = transform.plane(&grid, &positions, config.samples_per_scale)?;

    let n = 1usize << config.grid_exponent;
    let x0s = UniformGrid::new(0.0, 1.0 / n as f64, n)?;
    let (lo, hi) = config.regression;
    let mut leaders = leader_field(&plane, config.p, lo, hi, &x0s)?;

    if !narrow.is_empty() {
        let k = pulse_self_energy(&params.pulse, analyzer, config.p);
        let mut features: Vec<(f64, f64)> = narrow
            .iter()
            .map(|pl| {
                let h = pl.amplitude(pulses.alpha).abs();
                let mass = if config.p.is_infinite() {
                    h * k
                } else {
                    h.powf(config.p) * k / pl.dilation(pulses.eta)
                };
                (pl.x, mass)
            })
            .collect();
        features.sort_by(|a, b| a.0.total_cmp(&b.0));
        add_point_features(&mut leaders, &features);
    }
    let exponents = exponent_field_from_leaders(&leaders, config.regression)?;
    Ok(PulseAnalysisOutput {
        plane,
        leaders,
        exponents,
        resolved: resolved.pulses.len(),
        unresolved: narrow.len(),
    })
}
