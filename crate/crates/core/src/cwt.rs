//! Continuous wavelet transform on a log-spaced scale grid.
//!
//! `W(a, b) = (1/a) ∫ f(x) ψ((x - b)/a) dx`, computed by trapezoidal
//! quadrature on the native grid of a sampled signal, or from any closed-form
//! source such as the per-pulse transform of a pulse process.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::AnalysisError;
use crate::numeric::{solve_dense, GaussLegendre};
use crate::poly::PiecewisePolynomial;
use crate::pulse::{PreparedPulse, PulseIndex, PulseProcessParams, PulseSet};
use crate::wavelet::{AdmissibilityConstant, AnalyzingWavelet, ReconstructionWavelet, WaveletShape};

/// Uniformly sampled real function.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    origin: f64,
    step: f64,
    values: Vec<f64>,
}

impl SampledSignal {
    pub fn new(origin: f64, step: f64, values: Vec<f64>) -> Result<Self, AnalysisError> {
        if !(step > 0.0) || !step.is_finite() || !origin.is_finite() {
            return Err(AnalysisError::InvalidSignal(format!(
                "step must be positive and finite, got {step}"
            )));
        }
        if values.len() < 2 {
            return Err(AnalysisError::InvalidSignal(format!(
                "need at least 2 samples, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(AnalysisError::InvalidSignal(format!(
                "sample {i} is not finite"
            )));
        }
        Ok(SampledSignal {
            origin,
            step,
            values,
        })
    }

    /// Samples `f` at `n` points spanning `[lo, hi]`.
    pub fn from_fn<F: Fn(f64) -> f64>(lo: f64, hi: f64, n: usize, f: F) -> Result<Self, AnalysisError> {
        if n < 2 || !(hi > lo) {
            return Err(AnalysisError::InvalidSignal(format!(
                "cannot sample [{lo}, {hi}] with {n} points"
            )));
        }
        let step = (hi - lo) / (n - 1) as f64;
        Self::new(lo, step, (0..n).map(|i| f(lo + i as f64 * step)).collect())
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.x(self.values.len() - 1)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trapezoidal `(∫ |f|^p)^{1/p}` over `[lo, hi]` (clipped to the domain).
    pub fn lp_norm(&self, p: f64, lo: f64, hi: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.values.len() {
            let x = self.x(i);
            if x < lo || x > hi {
                continue;
            }
            let w = if i == 0 || i + 1 == self.values.len() { 0.5 } else { 1.0 };
            total += w * self.values[i].abs().powf(p);
        }
        (total * self.step).powf(1.0 / p)
    }
}

/// Log-spaced scales, stored in decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleGrid {
    scales: Vec<f64>,
    scales_per_octave: u32,
}

impl ScaleGrid {
    /// Scales `a_max · 2^{-i/spo}` for all `i` with the scale `≥ a_min`
    /// (up to rounding).
    pub fn dyadic(a_max: f64, a_min: f64, scales_per_octave: u32) -> Result<Self, AnalysisError> {
        if !(a_max > 0.0) || !(a_min > 0.0) || a_min > a_max || scales_per_octave == 0 {
            return Err(AnalysisError::InvalidGrid(format!(
                "bad scale range [{a_min}, {a_max}] with {scales_per_octave} scales per octave"
            )));
        }
        let spo = scales_per_octave as f64;
        let count = ((a_max / a_min).log2() * spo + 1e-9).floor() as usize + 1;
        let scales = (0..count)
            .map(|i| a_max * (-(i as f64) / spo).exp2())
            .collect();
        Ok(ScaleGrid {
            scales,
            scales_per_octave,
        })
    }

    pub fn new(scales: Vec<f64>, scales_per_octave: u32) -> Result<Self, AnalysisError> {
        if scales.is_empty() || scales_per_octave == 0 {
            return Err(AnalysisError::InvalidGrid("empty scale grid".into()));
        }
        if scales.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(AnalysisError::InvalidGrid("scales must be positive".into()));
        }
        let ratio = (-1.0 / scales_per_octave as f64).exp2();
        for w in scales.windows(2) {
            if ((w[1] / w[0]) - ratio).abs() > 1e-12 {
                return Err(AnalysisError::InvalidGrid(format!(
                    "scales {} and {} do not have ratio 2^(-1/{scales_per_octave})",
                    w[0], w[1]
                )));
            }
        }
        Ok(ScaleGrid {
            scales,
            scales_per_octave,
        })
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn scales_per_octave(&self) -> u32 {
        self.scales_per_octave
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    /// `ln` of the ratio between neighbouring scales.
    pub fn log_step(&self) -> f64 {
        std::f64::consts::LN_2 / self.scales_per_octave as f64
    }

    pub fn finest(&self) -> f64 {
        *self.scales.last().unwrap()
    }

    pub fn coarsest(&self) -> f64 {
        self.scales[0]
    }

    pub fn octaves(&self) -> f64 {
        (self.coarsest() / self.finest()).log2()
    }
}

/// `start + i · step` for `i < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self, AnalysisError> {
        if !(step > 0.0) || !step.is_finite() || !start.is_finite() || len == 0 {
            return Err(AnalysisError::InvalidGrid(format!(
                "bad position grid: start {start}, step {step}, len {len}"
            )));
        }
        Ok(UniformGrid { start, step, len })
    }

    /// Grid from `lo` to `hi` inclusive with the given step (rounded to fit).
    pub fn spanning(lo: f64, hi: f64, step: f64) -> Result<Self, AnalysisError> {
        let len = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Self::new(lo, step, len)
    }

    pub fn at(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.at(self.len - 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.at(i))
    }

    /// Index of the grid point nearest to `x`, if `x` lies within half a step of the grid.
    pub fn nearest(&self, x: f64) -> Option<usize> {
        let r = ((x - self.start) / self.step).round();
        if r < 0.0 || r >= self.len as f64 {
            None
        } else {
            Some(r as usize)
        }
    }
}

/// `w[i][j] = W(a_i, b_j)`, rows follow the (decreasing) scale grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeScalePlane {
    grid: ScaleGrid,
    positions: UniformGrid,
    w: Vec<f64>,
    valid: Vec<bool>,
    noise_floor: f64,
}

impl TimeScalePlane {
    pub fn from_parts(
        grid: ScaleGrid,
        positions: UniformGrid,
        w: Vec<f64>,
        valid: Vec<bool>,
        noise_floor: f64,
    ) -> Result<Self, AnalysisError> {
        let n = grid.len() * positions.len;
        if w.len() != n || valid.len() != n {
            return Err(AnalysisError::InvalidGrid(format!(
                "plane needs {n} entries, got {} values and {} flags",
                w.len(),
                valid.len()
            )));
        }
        if let Some(k) = w.iter().position(|v| !v.is_finite()) {
            return Err(AnalysisError::Estimation(format!(
                "non-finite transform value at row {}, column {}",
                k / positions.len,
                k % positions.len
            )));
        }
        Ok(TimeScalePlane {
            grid,
            positions,
            w,
            valid,
            noise_floor,
        })
    }

    /// Plane filled from a closed-form transform; every entry is valid.
    pub fn from_fn<F>(grid: ScaleGrid, positions: UniformGrid, f: F) -> Result<Self, AnalysisError>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let rows: Vec<Vec<f64>> = grid
            .scales()
            .par_iter()
            .map(|&a| positions.iter().map(|b| f(a, b)).collect())
            .collect();
        let w: Vec<f64> = rows.into_iter().flatten().collect();
        let valid = vec![true; w.len()];
        Self::from_parts(grid, positions, w, valid, 0.0)
    }

    pub fn scale_grid(&self) -> &ScaleGrid {
        &self.grid
    }

    pub fn positions(&self) -> &UniformGrid {
        &self.positions
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.positions.len + j]
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.valid[i * self.positions.len + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.positions.len;
        &self.w[i * n..(i + 1) * n]
    }

    pub fn row_valid(&self, i: usize) -> &[bool] {
        let n = self.positions.len;
        &self.valid[i * n..(i + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    /// Magnitude below which transform values are indistinguishable from
    /// quadrature rounding.
    pub fn noise_floor(&self) -> f64 {
        self.noise_floor
    }

    pub fn scaled(&self, lambda: f64) -> TimeScalePlane {
        TimeScalePlane {
            w: self.w.iter().map(|v| v * lambda).collect(),
            noise_floor: self.noise_floor * lambda.abs(),
            ..self.clone()
        }
    }

    pub fn write_csv<W: Write>(&self, out: &mut W, comment: Option<&str>) -> std::io::Result<()> {
        self.write_csv_strided(out, comment, 1)
    }

    /// Like [`write_csv`](Self::write_csv), keeping every `stride`-th position.
    pub fn write_csv_strided<W: Write>(
        &self,
        out: &mut W,
        comment: Option<&str>,
        stride: usize,
    ) -> std::io::Result<()> {
        let stride = stride.max(1);
        if let Some(c) = comment {
            writeln!(out, "# {c}")?;
        }
        write!(out, "scale")?;
        for b in self.positions.iter().step_by(stride) {
            write!(out, ",{b}")?;
        }
        writeln!(out)?;
        for (i, a) in self.grid.scales().iter().enumerate() {
            write!(out, "{a}")?;
            for v in self.row(i).iter().step_by(stride) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Binary layout, little-endian: `"TSPL"`, u64 scale count, u64 position
    /// count, u64 scales per octave, f64 position start, f64 position step,
    /// f64 noise floor, f64 scales, f64 values row by row, one byte per
    /// validity flag.
    pub fn write_binary<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        out.write_all(b"TSPL")?;
        out.write_all(&(self.grid.len() as u64).to_le_bytes())?;
        out.write_all(&(self.positions.len as u64).to_le_bytes())?;
        out.write_all(&(self.grid.scales_per_octave() as u64).to_le_bytes())?;
        for v in [self.positions.start, self.positions.step, self.noise_floor] {
            out.write_all(&v.to_le_bytes())?;
        }
        for v in self.grid.scales().iter().chain(&self.w) {
            out.write_all(&v.to_le_bytes())?;
        }
        let flags: Vec<u8> = self.valid.iter().map(|&v| v as u8).collect();
        out.write_all(&flags)
    }

    pub fn read_binary<R: Read>(input: &mut R) -> Result<Self, AnalysisError> {
        let bad = |e: std::io::Error| AnalysisError::Format(format!("truncated plane dump: {e}"));
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic).map_err(bad)?;
        if &magic != b"TSPL" {
            return Err(AnalysisError::Format("missing TSPL magic".into()));
        }
        let mut u = [0u8; 8];
        let mut next_u64 = |input: &mut R| -> Result<u64, AnalysisError> {
            input.read_exact(&mut u).map_err(bad)?;
            Ok(u64::from_le_bytes(u))
        };
        let rows = next_u64(input)? as usize;
        let cols = next_u64(input)? as usize;
        let spo = next_u64(input)? as u32;
        let next_f64 = |input: &mut R| -> Result<f64, AnalysisError> {
            let mut b = [0u8; 8];
            input.read_exact(&mut b).map_err(bad)?;
            Ok(f64::from_le_bytes(b))
        };
        let start = next_f64(input)?;
        let step = next_f64(input)?;
        let floor = next_f64(input)?;
        if rows.checked_mul(cols).is_none_or(|n| n > 1 << 32) {
            return Err(AnalysisError::Format(format!("implausible plane size {rows}x{cols}")));
        }
        let scales = (0..rows).map(|_| next_f64(input)).collect::<Result<Vec<_>, _>>()?;
        let w = (0..rows * cols)
            .map(|_| next_f64(input))
            .collect::<Result<Vec<_>, _>>()?;
        let mut flags = vec![0u8; rows * cols];
        input.read_exact(&mut flags).map_err(bad)?;
        let grid = ScaleGrid::new(scales, spo)?;
        let positions = UniformGrid::new(start, step, cols)?;
        Self::from_parts(grid, positions, w, flags.iter().map(|&f| f != 0).collect(), floor)
    }
}

/// Trapezoidal CWT of a sampled signal.
///
/// The discrete kernel at each `(a, b)` is corrected by a small multiple of
/// `(1 - u^2)^2 · poly(u)` so that its discrete moments up to
/// `vanishing_moments - 1` are zero; polynomials are then annihilated to
/// rounding error even when only a few samples fall under the wavelet.
/// Positions whose support `[b - a, b + a]` leaves the signal domain are
/// flagged invalid.
pub fn cwt(
    f: &SampledSignal,
    psi: &AnalyzingWavelet,
    grid: &ScaleGrid,
    positions: &UniformGrid,
) -> Result<TimeScalePlane, AnalysisError> {
    let limit = 2.0 * f.step;
    if let Some(&a) = grid.scales().iter().find(|&&a| a < limit * (1.0 - 1e-12)) {
        return Err(AnalysisError::ScaleBelowResolution { scale: a, limit });
    }
    let offset = (positions.start - f.origin) / f.step;
    let ratio = positions.step / f.step;
    let aligned = (offset - offset.round()).abs() < 1e-9 && (ratio - ratio.round()).abs() < 1e-9;
    let moments = psi.vanishing_moments() as usize;
    let (lo, hi) = (f.origin, f.end());
    let slack = 1e-9 * f.step;

    let rows: Vec<(Vec<f64>, Vec<bool>)> = grid
        .scales()
        .par_iter()
        .map(|&a| {
            let cached = aligned.then(|| AlignedKernel::new(psi, a, f.step, moments));
            let mut row = Vec::with_capacity(positions.len);
            let mut valid = Vec::with_capacity(positions.len);
            for b in positions.iter() {
                valid.push(b - a >= lo - slack && b + a <= hi + slack);
                let value = match &cached {
                    Some(k) => k.apply(f, ((b - f.origin) / f.step).round() as i64),
                    None => direct(f, psi, a, b, moments),
                };
                row.push(value);
            }
            (row, valid)
        })
        .collect();

    let mut w = Vec::with_capacity(grid.len() * positions.len);
    let mut valid = Vec::with_capacity(w.capacity());
    for (r, v) in rows {
        w.extend(r);
        valid.extend(v);
    }
    let floor = 1e-9 * f.sup_norm();
    TimeScalePlane::from_parts(grid.clone(), *positions, w, valid, floor)
}

/// Kernel for positions on the sample grid: `W = (h/a) Σ_m k_m f[c + m]`.
struct AlignedKernel {
    half: i64,
    weights: Vec<f64>,
}

impl AlignedKernel {
    fn new(psi: &AnalyzingWavelet, a: f64, h: f64, moments: usize) -> Self {
        let half = (a / h).floor() as i64;
        let us: Vec<f64> = (-half..=half).map(|m| m as f64 * h / a).collect();
        let weights = corrected_kernel(psi, &us, moments)
            .into_iter()
            .map(|k| k * h / a)
            .collect();
        AlignedKernel { half, weights }
    }

    fn apply(&self, f: &SampledSignal, centre: i64) -> f64 {
        let n = f.values.len() as i64;
        let first = (centre - self.half).max(0);
        let last = (centre + self.half).min(n - 1);
        if first > last {
            return 0.0;
        }
        let mut acc = 0.0;
        for idx in first..=last {
            let k = (idx - centre + self.half) as usize;
            let mut v = f.values[idx as usize];
            if idx == 0 || idx == n - 1 {
                v *= 0.5;
            }
            acc += self.weights[k] * v;
        }
        acc
    }
}

fn direct(f: &SampledSignal, psi: &AnalyzingWavelet, a: f64, b: f64, moments: usize) -> f64 {
    let n = f.values.len();
    let first = (((b - a - f.origin) / f.step).ceil().max(0.0)) as usize;
    let last_f = ((b + a - f.origin) / f.step).floor();
    if last_f < 0.0 || first >= n {
        return 0.0;
    }
    let last = (last_f as usize).min(n - 1);
    if first > last {
        return 0.0;
    }
    let us: Vec<f64> = (first..=last).map(|i| (f.x(i) - b) / a).collect();
    let kernel = corrected_kernel(psi, &us, moments);
    let mut acc = 0.0;
    for (k, i) in kernel.iter().zip(first..=last) {
        let mut v = f.values[i];
        if i == 0 || i == n - 1 {
            v *= 0.5;
        }
        acc += k * v;
    }
    acc * f.step / a
}

/// `ψ(u_i)` minus `g(u_i) Σ_l λ_l u_i^l` with `g = (1 - u^2)^2`, where `λ`
/// zeroes the discrete moments `Σ k_i u_i^m`, `m < moments`.
fn corrected_kernel(psi: &AnalyzingWavelet, us: &[f64], moments: usize) -> Vec<f64> {
    let mut kernel: Vec<f64> = us.iter().map(|&u| psi.eval(u)).collect();
    let g: Vec<f64> = us
        .iter()
        .map(|&u| if u.abs() < 1.0 { (1.0 - u * u).powi(2) } else { 0.0 })
        .collect();
    let m = moments.min(us.len().saturating_sub(2));
    if m == 0 {
        return kernel;
    }
    let mut mat = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for (i, &u) in us.iter().enumerate() {
        let mut powers = vec![1.0; 2 * m];
        for p in 1..2 * m {
            powers[p] = powers[p - 1] * u;
        }
        for r in 0..m {
            rhs[r] += kernel[i] * powers[r];
            for c in 0..m {
                mat[r * m + c] += g[i] * powers[r + c];
            }
        }
    }
    if let Some(lambda) = solve_dense(&mut mat, &mut rhs, m, 1e-14) {
        for (i, &u) in us.iter().enumerate() {
            let mut poly = 0.0;
            for l in lambda.iter().rev() {
                poly = poly * u + l;
            }
            kernel[i] -= g[i] * poly;
        }
    }
    kernel
}

/// Inverse transform `f̂(x) = (1/c) ∫∫ a^{-2} W(a, b) φ((x - b)/a) db da`,
/// discretized with log-scale weights on the plane's grids.
pub fn reconstruct(
    plane: &TimeScalePlane,
    phi: &ReconstructionWavelet,
    c: &AdmissibilityConstant,
    x_grid: &UniformGrid,
) -> Result<SampledSignal, AnalysisError> {
    if plane.grid.octaves() < 6.0 {
        return Err(AnalysisError::InsufficientScales(format!(
            "reconstruction needs at least 6 octaves of scales, plane spans {:.2}",
            plane.grid.octaves()
        )));
    }
    if !(c.c_psi > 0.0) || !c.c_psi.is_finite() {
        return Err(AnalysisError::Estimation(format!(
            "admissibility constant {} is not usable",
            c.c_psi
        )));
    }
    let dlog = plane.grid.log_step();
    let db = plane.positions.step;
    let values: Vec<f64> = x_grid
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&x| {
            let mut acc = 0.0;
            for (i, &a) in plane.grid.scales().iter().enumerate() {
                let row = plane.row(i);
                let jlo = ((x - a - plane.positions.start) / db).ceil().max(0.0) as usize;
                let jhi_f = ((x + a - plane.positions.start) / db).floor();
                if jhi_f < 0.0 {
                    continue;
                }
                let jhi = (jhi_f as usize).min(plane.positions.len - 1);
                let mut s = 0.0;
                for (j, &wv) in row.iter().enumerate().take(jhi + 1).skip(jlo) {
                    s += wv * phi.eval((x - plane.positions.at(j)) / a);
                }
                acc += s * db / a * dlog;
            }
            acc / c.c_psi
        })
        .collect();
    SampledSignal::new(x_grid.start, x_grid.step, values)
}

/// `d(a, b) = (1/a) ∫ g(β(x - x_n)) w((x - b)/a) dx` for one pulse of shape
/// `g`, without its amplitude. In `u = (x - b)/a` the integrand is a
/// polynomial on each piece, so Gauss-Legendre with `rule` is exact when it
/// has at least `(deg g + deg w)/2 + 1` nodes.
pub fn pulse_coefficient<W: WaveletShape>(
    pulse: &PiecewisePolynomial,
    analyzer: &W,
    rule: &GaussLegendre,
    beta: f64,
    x_n: f64,
    a: f64,
    b: f64,
) -> f64 {
    let w = analyzer.shape();
    let (wlo, whi) = w.support();
    let (glo, ghi) = pulse.support();
    // pulse argument t = β(a u + b - x_n)  <=>  u = (x_n - b + t/β)/a
    let to_u = |t: f64| (x_n - b + t / beta) / a;
    let lo = wlo.max(to_u(glo));
    let hi = whi.min(to_u(ghi));
    if !(hi > lo) {
        return 0.0;
    }
    let wb = w.breakpoints();
    let gb = pulse.breakpoints();
    let (mut i, mut j) = (0, 0);
    let mut left = lo;
    let mut total = 0.0;
    while left < hi {
        while i < wb.len() && wb[i] <= left {
            i += 1;
        }
        while j < gb.len() && to_u(gb[j]) <= left {
            j += 1;
        }
        let mut right = hi;
        if i < wb.len() {
            right = right.min(wb[i]);
        }
        if j < gb.len() {
            right = right.min(to_u(gb[j]));
        }
        total += rule.integrate(left, right, |u| {
            pulse.eval(beta * (a * u + b - x_n)) * analyzer.eval(u)
        });
        left = right;
    }
    total
}

fn rule_for<W: WaveletShape>(pulse: &PiecewisePolynomial, analyzer: &W) -> std::sync::Arc<GaussLegendre> {
    GaussLegendre::cached((pulse.degree() + analyzer.shape().degree()) / 2 + 1)
}

/// `Σ_n C_n^{-α} d_n(a, b)` by a direct scan over the pulses; pulses whose
/// support misses `[b - a, b + a]` are skipped.
pub fn cwt_pulse_analytic<W: WaveletShape>(
    params: &PulseProcessParams,
    pulses: &PulseSet,
    analyzer: &W,
    a: f64,
    b: f64,
) -> f64 {
    let rule = rule_for(&params.pulse, analyzer);
    let (wlo, whi) = analyzer.shape().support();
    let mut total = 0.0;
    for p in &pulses.pulses {
        let beta = p.dilation(pulses.eta);
        let r = 1.0 / beta;
        if p.x + r < b + a * wlo || p.x - r > b + a * whi {
            continue;
        }
        total += p.amplitude(pulses.alpha)
            * pulse_coefficient(&params.pulse, analyzer, &rule, beta, p.x, a, b);
    }
    total
}

/// Indexed evaluator of the pulse transform, for many `(a, b)` queries.
pub struct PulseTransform<'a, W: WaveletShape> {
    pulse: &'a PiecewisePolynomial,
    analyzer: &'a W,
    index: PulseIndex,
    rule: std::sync::Arc<GaussLegendre>,
}

impl<'a, W: WaveletShape + Sync> PulseTransform<'a, W> {
    pub fn new(params: &'a PulseProcessParams, pulses: &PulseSet, analyzer: &'a W) -> Self {
        PulseTransform {
            pulse: &params.pulse,
            analyzer,
            index: PulseIndex::new(pulses),
            rule: rule_for(&params.pulse, analyzer),
        }
    }

    pub fn value(&self, a: f64, b: f64) -> f64 {
        let (wlo, whi) = self.analyzer.shape().support();
        let mut total = 0.0;
        self.index.for_each_overlapping(b + a * wlo, b + a * whi, |p: &PreparedPulse| {
            total += p.amplitude
                * pulse_coefficient(self.pulse, self.analyzer, &self.rule, p.beta, p.x, a, b);
        });
        total
    }

    /// Plane of the analytic transform. Row `a` is evaluated exactly every
    /// `max(1, ⌊a / (samples_per_scale · Δb)⌋)` columns and filled in between
    /// by cubic (Catmull-Rom) interpolation; a row varies on length scale `a`,
    /// so this loses little while keeping the cost per row roughly constant.
    pub fn plane(
        &self,
        grid: &ScaleGrid,
        positions: &UniformGrid,
        samples_per_scale: usize,
    ) -> Result<TimeScalePlane, AnalysisError> {
        let m = samples_per_scale.max(1) as f64;
        let n = positions.len;
        let rows: Vec<Vec<f64>> = grid
            .scales()
            .par_iter()
            .map(|&a| {
                let stride = ((a / (m * positions.step)).floor() as usize).max(1);
                if stride == 1 {
                    return positions.iter().map(|b| self.value(a, b)).collect();
                }
                let knots = (n - 1).div_ceil(stride) + 1;
                // one extra knot on each side for the cubic stencil
                let vals: Vec<f64> = (-1..=knots as i64)
                    .map(|k| self.value(a, positions.start + (k * stride as i64) as f64 * positions.step))
                    .collect();
                (0..n)
                    .map(|c| {
                        let k = c / stride;
                        let t = (c % stride) as f64 / stride as f64;
                        if t == 0.0 {
                            return vals[k + 1];
                        }
                        catmull_rom(vals[k], vals[k + 1], vals[k + 2], vals[k + 3], t)
                    })
                    .collect()
            })
            .collect();
        let w: Vec<f64> = rows.into_iter().flatten().collect();
        let valid = vec![true; w.len()];
        TimeScalePlane::from_parts(grid.clone(), *positions, w, valid, 0.0)
    }
}

fn catmull_rom(p0: f64, p1: f64, p2: f64, p3: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * (2.0 * p1
        + (p2 - p0) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
        + (3.0 * (p1 - p2) + p3 - p0) * t3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::build_even_wavelet;

    #[test]
    fn dyadic_grid_has_constant_ratio() {
        let g = ScaleGrid::dyadic(0.25, 0.25 / 16.0, 8).unwrap();
        assert_eq!(g.len(), 33);
        assert!((g.finest() - 0.25 / 16.0).abs() < 1e-15);
        assert!(ScaleGrid::new(g.scales().to_vec(), 8).is_ok());
        assert!(ScaleGrid::new(vec![1.0, 0.6], 1).is_err());
    }

    #[test]
    fn rejects_scale_below_resolution() {
        let f = SampledSignal::from_fn(0.0, 1.0, 101, |x| x).unwrap();
        let psi = build_even_wavelet(2, 2).unwrap();
        let grid = ScaleGrid::dyadic(0.1, 0.01, 4).unwrap();
        let pos = UniformGrid::spanning(0.2, 0.8, 0.1).unwrap();
        assert!(matches!(
            cwt(&f, &psi, &grid, &pos),
            Err(AnalysisError::ScaleBelowResolution { .. })
        ));
    }

    #[test]
    fn aligned_and_direct_paths_agree() {
        let f = SampledSignal::from_fn(-1.0, 1.0, 2001, |x| (5.0 * x).sin() + x.abs().sqrt()).unwrap();
        let psi = build_even_wavelet(2, 2).unwrap();
        let grid = ScaleGrid::dyadic(0.2, 0.01, 4).unwrap();
        let aligned = UniformGrid::new(-0.5, 0.01, 101).unwrap();
        let shifted = UniformGrid::new(-0.5 + 1e-7, 0.01, 101).unwrap();
        let p1 = cwt(&f, &psi, &grid, &aligned).unwrap();
        let p2 = cwt(&f, &psi, &grid, &shifted).unwrap();
        for (x, y) in p1.values().iter().zip(p2.values()) {
            assert!((x - y).abs() < 1e-5, "{x} vs {y}");
        }
    }

    #[test]
    fn catmull_rom_reproduces_cubics() {
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        for t in [0.1, 0.5, 0.9] {
            let v = catmull_rom(f(-1.0), f(0.0), f(1.0), f(2.0), t);
            // Catmull-Rom is exact for quadratics only
            let q = |x: f64| 3.0 * x * x - x + 2.0;
            let vq = catmull_rom(q(-1.0), q(0.0), q(1.0), q(2.0), t);
            assert!((vq - q(t)).abs() < 1e-12);
            assert!((v - f(t)).abs() < 0.2);
        }
    }

    #[test]
    fn binary_round_trip() {
        let f = SampledSignal::from_fn(0.0, 1.0, 257, |x| x * x * x).unwrap();
        let psi = build_even_wavelet(2, 2).unwrap();
        let grid = ScaleGrid::dyadic(0.25, 1.0 / 32.0, 2).unwrap();
        let pos = UniformGrid::spanning(0.0, 1.0, 1.0 / 16.0).unwrap();
        let plane = cwt(&f, &psi, &grid, &pos).unwrap();
        let mut buf = Vec::new();
        plane.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"TSPL");
        let back = TimeScalePlane::read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(plane, back);
        assert!(TimeScalePlane::read_binary(&mut &buf[..buf.len() - 1]).is_err());
    }
}
