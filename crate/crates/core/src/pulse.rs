//! Sums of random pulses
//! `F(x) = Σ_n C_n^{-α} g(B_n^{1/η} (x - X_n))`
//! driven by unit-rate Poisson arrivals `C_n`, `B_n` and uniform centres `X_n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::numeric::GaussLegendre;
use crate::poly::PiecewisePolynomial;
use crate::spectrum::admissible_p_range;

pub const DEFAULT_J_MAX: u32 = 16;

/// `t (1 - t^2)^2` on `[-1, 1]`.
pub fn default_pulse() -> PiecewisePolynomial {
    PiecewisePolynomial::single(-1.0, 1.0, vec![0.0, 1.0, 0.0, -2.0, 0.0, 1.0])
        .expect("static pulse shape is valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseProcessParams {
    pub alpha: f64,
    pub eta: f64,
    pub pulse: PiecewisePolynomial,
    pub j_max: u32,
    pub seed: u64,
}

impl PulseProcessParams {
    pub fn new(alpha: f64, eta: f64, j_max: u32, seed: u64) -> Result<Self, ModelError> {
        let params = PulseProcessParams {
            alpha,
            eta,
            pulse: default_pulse(),
            j_max,
            seed,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_pulse(mut self, pulse: PiecewisePolynomial) -> Result<Self, ModelError> {
        self.pulse = pulse;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let (alpha, eta) = (self.alpha, self.eta);
        if !alpha.is_finite() || alpha == 0.0 {
            return Err(ModelError::InvalidParams(format!(
                "alpha must be finite and non-zero, got {alpha}"
            )));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(ModelError::InvalidParams(format!(
                "eta must lie in (0, 1), got {eta}"
            )));
        }
        if alpha < 0.0 && eta - 1.0 >= alpha * eta {
            return Err(ModelError::Hypothesis(format!(
                "alpha < 0 requires eta - 1 < alpha * eta, got {} >= {}",
                eta - 1.0,
                alpha * eta
            )));
        }
        if self.j_max == 0 || self.j_max > 40 {
            return Err(ModelError::InvalidParams(format!(
                "j_max must lie in 1..=40, got {}",
                self.j_max
            )));
        }
        let (lo, hi) = self.pulse.support();
        if lo < -1.0 || hi > 1.0 {
            return Err(ModelError::InvalidParams(format!(
                "pulse support [{lo}, {hi}] is not inside [-1, 1]"
            )));
        }
        if self.pulse.max_relative_jump(0) > 1e-9 {
            return Err(ModelError::InvalidParams(
                "pulse must be continuous (Lipschitz)".into(),
            ));
        }
        if !self.pulse.lipschitz_bound().is_finite() || self.pulse.l2_norm() == 0.0 {
            return Err(ModelError::InvalidParams("pulse must be a non-zero Lipschitz function".into()));
        }
        Ok(())
    }

    /// Truncation threshold on `B_n`: pulses need `B_n^{1/η} < 2^{j_max}`.
    pub fn b_limit(&self) -> f64 {
        (self.eta * self.j_max as f64).exp2()
    }
}

/// One pulse: amplitude parameter `c`, dilation parameter `b`, centre `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub c: f64,
    pub b: f64,
    pub x: f64,
}

impl Pulse {
    /// `B^{1/η}`.
    pub fn dilation(&self, eta: f64) -> f64 {
        self.b.powf(1.0 / eta)
    }

    /// `C^{-α}`.
    pub fn amplitude(&self, alpha: f64) -> f64 {
        self.c.powf(-alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "PulseSetFile", into = "PulseSetFile")]
pub struct PulseSet {
    pub seed: u64,
    pub alpha: f64,
    pub eta: f64,
    pub j_max: u32,
    pub pulses: Vec<Pulse>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PulseSetFile {
    seed: u64,
    alpha: f64,
    eta: f64,
    j_max: u32,
    triples: Vec<[f64; 3]>,
}

impl From<PulseSet> for PulseSetFile {
    fn from(s: PulseSet) -> Self {
        PulseSetFile {
            seed: s.seed,
            alpha: s.alpha,
            eta: s.eta,
            j_max: s.j_max,
            triples: s.pulses.iter().map(|p| [p.c, p.b, p.x]).collect(),
        }
    }
}

impl TryFrom<PulseSetFile> for PulseSet {
    type Error = ModelError;

    fn try_from(f: PulseSetFile) -> Result<Self, ModelError> {
        let set = PulseSet {
            seed: f.seed,
            alpha: f.alpha,
            eta: f.eta,
            j_max: f.j_max,
            pulses: f
                .triples
                .iter()
                .map(|t| Pulse {
                    c: t[0],
                    b: t[1],
                    x: t[2],
                })
                .collect(),
        };
        set.validate()?;
        Ok(set)
    }
}

impl PulseSet {
    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(ModelError::InvalidParams(format!("eta {} outside (0, 1)", self.eta)));
        }
        let limit = (self.eta * self.j_max as f64).exp2();
        for (n, p) in self.pulses.iter().enumerate() {
            if !(p.c > 0.0) || !p.c.is_finite() {
                return Err(ModelError::InvalidParams(format!("C_{n} = {} is not positive", p.c)));
            }
            if !(0.0..=1.0).contains(&p.x) {
                return Err(ModelError::InvalidParams(format!("X_{n} = {} outside [0, 1]", p.x)));
            }
            if !(p.b > 0.0) || p.b >= limit {
                return Err(ModelError::InvalidParams(format!(
                    "B_{n} = {} outside (0, 2^(eta j_max))",
                    p.b
                )));
            }
            if n > 0 && p.b <= self.pulses[n - 1].b {
                return Err(ModelError::InvalidParams(format!(
                    "B_n must be strictly increasing (n = {n})"
                )));
            }
        }
        Ok(())
    }

    /// Parameters matching this set, with the default pulse shape.
    pub fn params(&self) -> Result<PulseProcessParams, ModelError> {
        PulseProcessParams::new(self.alpha, self.eta, self.j_max, self.seed)
    }
}

/// Draws one realization. `C_n` and `B_n` are partial sums of unit
/// exponentials, `X_n` uniform on `[0, 1]`; each sequence has its own ChaCha
/// stream under the same seed.
pub fn sample_process(params: &PulseProcessParams) -> PulseSet {
    let stream = |s: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(s);
        rng
    };
    let (mut rc, mut rb, mut rx) = (stream(0), stream(1), stream(2));
    let limit = params.b_limit();
    let mut pulses = Vec::new();
    let (mut c, mut b) = (0.0_f64, 0.0_f64);
    loop {
        let eb: f64 = Exp1.sample(&mut rb);
        b += eb;
        if b >= limit {
            break;
        }
        let ec: f64 = Exp1.sample(&mut rc);
        c += ec;
        let x: f64 = rx.random::<f64>();
        pulses.push(Pulse { c, b, x });
    }
    PulseSet {
        seed: params.seed,
        alpha: params.alpha,
        eta: params.eta,
        j_max: params.j_max,
        pulses,
    }
}

/// Band of `β = B^{1/η}`: 0 when `β < 1`, else `j` with `2^{j-1} ≤ β < 2^j`.
pub fn band_of(beta: f64) -> u32 {
    if beta < 1.0 {
        return 0;
    }
    let mut j = beta.log2().floor() as i64 + 1;
    // guard the floor against rounding at exact powers of two
    while j > 1 && beta < ((j - 1) as f64).exp2() {
        j -= 1;
    }
    while beta >= (j as f64).exp2() {
        j += 1;
    }
    j as u32
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandIndex {
    pub j: u32,
    pub members: Vec<usize>,
}

/// Bands `A_0, ..., A_{j_max}` (possibly empty) partitioning the pulses.
pub fn band_partition(pulses: &PulseSet, eta: f64) -> Vec<BandIndex> {
    let top = pulses
        .pulses
        .iter()
        .map(|p| band_of(p.dilation(eta)))
        .max()
        .unwrap_or(0)
        .max(pulses.j_max);
    let mut bands: Vec<BandIndex> = (0..=top)
        .map(|j| BandIndex {
            j,
            members: Vec::new(),
        })
        .collect();
    for (n, p) in pulses.pulses.iter().enumerate() {
        bands[band_of(p.dilation(eta)) as usize].members.push(n);
    }
    bands
}

/// `ε_j = log2(j) / (η j)`.
pub fn epsilon_j(j: u32, eta: f64) -> f64 {
    (j as f64).log2() / (eta * j as f64)
}

/// Expected band size `2^{ηj} (1 - 2^{-η})`, `j ≥ 1`.
pub fn expected_band_count(j: u32, eta: f64) -> f64 {
    (eta * j as f64).exp2() * (1.0 - (-eta).exp2())
}

/// A pulse with the quantities needed for evaluation precomputed.
#[derive(Debug, Clone, Copy)]
pub struct PreparedPulse {
    pub amplitude: f64,
    pub beta: f64,
    pub x: f64,
    /// Half-width of the support, `1/β`.
    pub radius: f64,
}

/// Pulses grouped by band and sorted by centre for interval queries.
#[derive(Debug, Clone)]
pub struct PulseIndex {
    bands: Vec<Vec<PreparedPulse>>,
    band_radius: Vec<f64>,
}

impl PulseIndex {
    pub fn new(pulses: &PulseSet) -> Self {
        let mut bands: Vec<Vec<PreparedPulse>> = Vec::new();
        for p in &pulses.pulses {
            let beta = p.dilation(pulses.eta);
            let j = band_of(beta) as usize;
            if bands.len() <= j {
                bands.resize(j + 1, Vec::new());
            }
            bands[j].push(PreparedPulse {
                amplitude: p.amplitude(pulses.alpha),
                beta,
                x: p.x,
                radius: 1.0 / beta,
            });
        }
        for band in &mut bands {
            band.sort_by(|a, b| a.x.total_cmp(&b.x));
        }
        let band_radius = bands
            .iter()
            .map(|b| b.iter().fold(0.0_f64, |m, p| m.max(p.radius)))
            .collect();
        PulseIndex { bands, band_radius }
    }

    pub fn bands(&self) -> &[Vec<PreparedPulse>] {
        &self.bands
    }

    /// Calls `visit` for every pulse whose support meets `[lo, hi]`.
    pub fn for_each_overlapping<F: FnMut(&PreparedPulse)>(&self, lo: f64, hi: f64, mut visit: F) {
        for (band, &r) in self.bands.iter().zip(&self.band_radius) {
            if band.is_empty() {
                continue;
            }
            let start = band.partition_point(|p| p.x < lo - r);
            for p in &band[start..] {
                if p.x > hi + r {
                    break;
                }
                if p.x + p.radius >= lo && p.x - p.radius <= hi {
                    visit(p);
                }
            }
        }
    }

    /// Same as [`for_each_overlapping`](Self::for_each_overlapping), one band only.
    pub fn for_each_in_band<F: FnMut(&PreparedPulse)>(&self, j: usize, lo: f64, hi: f64, mut visit: F) {
        let Some(band) = self.bands.get(j) else {
            return;
        };
        let r = self.band_radius[j];
        let start = band.partition_point(|p| p.x < lo - r);
        for p in &band[start..] {
            if p.x > hi + r {
                break;
            }
            if p.x + p.radius >= lo && p.x - p.radius <= hi {
                visit(p);
            }
        }
    }
}

/// `F(x)` for the realization, summing only pulses whose support covers `x`.
pub fn evaluate(params: &PulseProcessParams, index: &PulseIndex, x: f64) -> f64 {
    let mut total = 0.0;
    index.for_each_overlapping(x, x, |p| {
        total += p.amplitude * params.pulse.eval(p.beta * (x - p.x));
    });
    total
}

/// Samples of `F` on `n` points of `[0, 1]`.
pub fn sample_path(params: &PulseProcessParams, pulses: &PulseSet, n: usize) -> Vec<(f64, f64)> {
    let index = PulseIndex::new(pulses);
    let step = 1.0 / (n.max(2) - 1) as f64;
    (0..n.max(2))
        .map(|i| {
            let x = i as f64 * step;
            (x, evaluate(params, &index, x))
        })
        .collect()
}

/// Per-band norms `‖F_j‖_{L^p[0,1]}` together with the norms of the partial
/// sums `‖Σ_{i≤j} F_i‖_{L^p[0,1]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandNorms {
    pub p: f64,
    pub per_band: Vec<f64>,
    pub partial_sums: Vec<f64>,
}

/// Composite Gauss-Legendre quadrature on cells of width `2^{-(j_max+2)}`,
/// fine enough to resolve the narrowest pulses.
pub fn band_norms(
    params: &PulseProcessParams,
    pulses: &PulseSet,
    p: f64,
) -> Result<BandNorms, ModelError> {
    if params.alpha < 0.0 {
        let (lo, hi) = admissible_p_range(params.alpha, params.eta)?;
        if !(p >= lo && p < hi) {
            return Err(ModelError::POutOfRange { p, lo, hi });
        }
    } else if !(p >= 1.0) || !p.is_finite() {
        return Err(ModelError::InvalidParams(format!("p must be finite and at least 1, got {p}")));
    }
    let bands = band_partition(pulses, params.eta).len();
    let index = PulseIndex::new(pulses);
    let cells = 1usize << (params.j_max + 2).min(24);
    let h = 1.0 / cells as f64;
    let rule = GaussLegendre::cached(4);
    let mut band_acc = vec![0.0; bands];
    let mut sum_acc = vec![0.0; bands];
    let mut per_band = vec![0.0; bands];
    for cell in 0..cells {
        let mid = (cell as f64 + 0.5) * h;
        for (&node, &weight) in rule.nodes.iter().zip(&rule.weights) {
            let x = mid + 0.5 * h * node;
            let w = 0.5 * h * weight;
            per_band.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..bands {
                index.for_each_in_band(j, x, x, |q| {
                    per_band[j] += q.amplitude * params.pulse.eval(q.beta * (x - q.x));
                });
            }
            let mut running = 0.0;
            for j in 0..bands {
                running += per_band[j];
                band_acc[j] += w * per_band[j].abs().powf(p);
                sum_acc[j] += w * running.abs().powf(p);
            }
        }
    }
    Ok(BandNorms {
        p,
        per_band: band_acc.iter().map(|v| v.powf(1.0 / p)).collect(),
        partial_sums: sum_acc.iter().map(|v| v.powf(1.0 / p)).collect(),
    })
}

/// `‖F_j‖_{L^p[0,1]}` per band, for `α < 0` and `p` in the admissible range.
pub fn lp_partial_sum_norms(
    params: &PulseProcessParams,
    pulses: &PulseSet,
    p: f64,
) -> Result<Vec<f64>, ModelError> {
    if params.alpha >= 0.0 {
        return Err(ModelError::Hypothesis(format!(
            "band norms are defined here for alpha < 0, got {}",
            params.alpha
        )));
    }
    Ok(band_norms(params, pulses, p)?.per_band)
}

/// Largest number of band-`j` pulse supports covering a single grid point.
pub fn max_overlap(index: &PulseIndex, j: usize, grid_points: usize) -> usize {
    let n = grid_points.max(2);
    (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            let mut count = 0;
            index.for_each_in_band(j, x, x, |_| count += 1);
            count
        })
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_of_respects_half_open_intervals() {
        assert_eq!(band_of(0.5), 0);
        assert_eq!(band_of(1.0), 1);
        assert_eq!(band_of(1.999), 1);
        assert_eq!(band_of(2.0), 2);
        assert_eq!(band_of(1024.0), 11);
        assert_eq!(band_of(1023.9), 10);
    }

    #[test]
    fn same_seed_same_set() {
        let params = PulseProcessParams::new(0.5, 0.9, 10, 7).unwrap();
        let a = sample_process(&params);
        let b = sample_process(&params);
        assert_eq!(a, b);
        assert!(a.pulses.windows(2).all(|w| w[0].b < w[1].b));
        let limit = params.b_limit();
        assert!(a.pulses.iter().all(|p| p.b < limit));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PulseProcessParams::new(0.5, 1.5, 10, 0).is_err());
        assert!(PulseProcessParams::new(0.0, 0.5, 10, 0).is_err());
        // eta - 1 = -0.5 is not below alpha * eta = -0.5
        assert!(matches!(
            PulseProcessParams::new(-1.0, 0.5, 10, 0),
            Err(ModelError::Hypothesis(_))
        ));
    }

    #[test]
    fn single_pulse_evaluation() {
        let params = PulseProcessParams::new(0.5, 0.9, 10, 0).unwrap();
        let set = PulseSet {
            seed: 0,
            alpha: 0.5,
            eta: 0.9,
            j_max: 10,
            pulses: vec![Pulse { c: 2.0, b: 3.0, x: 0.4 }],
        };
        let index = PulseIndex::new(&set);
        let beta = 3f64.powf(1.0 / 0.9);
        let x = 0.4 + 0.3 / beta;
        let want = 2f64.powf(-0.5) * params.pulse.eval(0.3);
        assert!((evaluate(&params, &index, x) - want).abs() < 1e-15);
        assert_eq!(evaluate(&params, &index, 0.4 + 1.01 / beta), 0.0);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let params = PulseProcessParams::new(-0.7, 0.5, 12, 99).unwrap();
        let set = sample_process(&params);
        let text = serde_json::to_string(&set).unwrap();
        assert!(text.contains("\"triples\""));
        let back: PulseSet = serde_json::from_str(&text).unwrap();
        assert_eq!(set, back);
    }

    #[test]
    fn json_rejects_non_increasing_b() {
        let text = r#"{"seed":1,"alpha":0.5,"eta":0.5,"j_max":4,"triples":[[1,2,0.5],[2,1.5,0.5]]}"#;
        assert!(serde_json::from_str::<PulseSet>(text).is_err());
    }
}
