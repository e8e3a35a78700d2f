//! Even, compactly supported analyzing and reconstruction wavelets.
//!
//! Wavelets are finite combinations of bumps `(1 - x^2)^k` on `[-1, 1]`, so
//! moments, inner products and Fourier transforms are available exactly or to
//! rounding error.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::WaveletError;
use crate::numeric::{solve_dense, GaussLegendre};
use crate::poly::{bump_coefficients, PiecewisePolynomial};

pub const MOMENT_TOLERANCE: f64 = 1e-8;
pub const CROSS_CORRELATION_FLOOR: f64 = 1e-6;

/// Anything backed by a piecewise polynomial shape.
pub trait WaveletShape {
    fn shape(&self) -> &PiecewisePolynomial;

    /// Certified shapes are continuous, so the closed support ends are exact zeros.
    fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.shape().support();
        if x <= lo || x >= hi {
            0.0
        } else {
            self.shape().eval(x)
        }
    }

    fn moment(&self, m: u32) -> f64 {
        self.shape().moment(m)
    }

    /// `∫ w(x) e^{-i ξ x} dx`.
    fn fourier(&self, xi: f64) -> Complex64 {
        fourier_transform(self.shape(), xi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzingWavelet {
    shape: PiecewisePolynomial,
    vanishing_moments: u32,
    smoothness: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionWavelet {
    shape: PiecewisePolynomial,
    vanishing_moments: u32,
    smoothness: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityConstant {
    pub c_psi: f64,
    pub quadrature_error_estimate: f64,
}

impl WaveletShape for AnalyzingWavelet {
    fn shape(&self) -> &PiecewisePolynomial {
        &self.shape
    }
}

impl WaveletShape for ReconstructionWavelet {
    fn shape(&self) -> &PiecewisePolynomial {
        &self.shape
    }
}

impl AnalyzingWavelet {
    /// Wrap a shape after checking support, evenness, moments and smoothness.
    pub fn from_shape(
        shape: PiecewisePolynomial,
        vanishing_moments: u32,
        smoothness: u32,
    ) -> Result<Self, WaveletError> {
        if vanishing_moments < 2 {
            return Err(WaveletError::Infeasible(format!(
                "an analyzing wavelet needs at least 2 vanishing moments, got {vanishing_moments}"
            )));
        }
        certify(&shape, vanishing_moments, smoothness)?;
        Ok(AnalyzingWavelet {
            shape,
            vanishing_moments,
            smoothness,
        })
    }

    pub fn vanishing_moments(&self) -> u32 {
        self.vanishing_moments
    }

    pub fn smoothness(&self) -> u32 {
        self.smoothness
    }

    pub fn is_even(&self) -> bool {
        true
    }

    /// Returns the same wavelet multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> AnalyzingWavelet {
        AnalyzingWavelet {
            shape: self.shape.scaled(lambda),
            ..self.clone()
        }
    }

    pub fn to_file(&self) -> WaveletFile {
        WaveletFile::new(&self.shape, self.vanishing_moments, self.smoothness)
    }
}

impl ReconstructionWavelet {
    pub fn from_shape(
        shape: PiecewisePolynomial,
        vanishing_moments: u32,
        smoothness: u32,
    ) -> Result<Self, WaveletError> {
        if vanishing_moments < 1 {
            return Err(WaveletError::Infeasible(
                "a reconstruction wavelet needs a vanishing mean".into(),
            ));
        }
        certify(&shape, vanishing_moments, smoothness)?;
        Ok(ReconstructionWavelet {
            shape,
            vanishing_moments,
            smoothness,
        })
    }

    pub fn vanishing_moments(&self) -> u32 {
        self.vanishing_moments
    }

    pub fn smoothness(&self) -> u32 {
        self.smoothness
    }

    pub fn to_file(&self) -> WaveletFile {
        WaveletFile::new(&self.shape, self.vanishing_moments, self.smoothness)
    }
}

/// On-disk form shared by both wavelet kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveletFile {
    pub breakpoints: Vec<f64>,
    pub segments: Vec<Vec<f64>>,
    pub vanishing_moments: u32,
    pub smoothness: u32,
}

impl WaveletFile {
    fn new(shape: &PiecewisePolynomial, vanishing_moments: u32, smoothness: u32) -> Self {
        WaveletFile {
            breakpoints: shape.breakpoints().to_vec(),
            segments: shape.segments().to_vec(),
            vanishing_moments,
            smoothness,
        }
    }

    pub fn into_analyzing(self) -> Result<AnalyzingWavelet, WaveletError> {
        let shape = PiecewisePolynomial::new(self.breakpoints, self.segments)?;
        AnalyzingWavelet::from_shape(shape, self.vanishing_moments, self.smoothness)
    }

    pub fn into_reconstruction(self) -> Result<ReconstructionWavelet, WaveletError> {
        let shape = PiecewisePolynomial::new(self.breakpoints, self.segments)?;
        ReconstructionWavelet::from_shape(shape, self.vanishing_moments, self.smoothness)
    }
}

impl Serialize for AnalyzingWavelet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for AnalyzingWavelet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        WaveletFile::deserialize(d)?
            .into_analyzing()
            .map_err(serde::de::Error::custom)
    }
}

fn certify(
    shape: &PiecewisePolynomial,
    vanishing_moments: u32,
    smoothness: u32,
) -> Result<(), WaveletError> {
    let (lo, hi) = shape.support();
    if lo < -1.0 || hi > 1.0 {
        return Err(WaveletError::Certification(format!(
            "support [{lo}, {hi}] is not inside [-1, 1]"
        )));
    }
    let norm = shape.l2_norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(WaveletError::Certification("wavelet is identically zero".into()));
    }
    for m in 0..vanishing_moments {
        let v = shape.moment(m) / norm;
        if v.abs() >= MOMENT_TOLERANCE {
            return Err(WaveletError::Certification(format!(
                "moment {m} is {v:e}, expected 0"
            )));
        }
    }
    let scale = (0..=200)
        .map(|i| shape.eval(-1.0 + i as f64 / 100.0).abs())
        .fold(0.0_f64, f64::max)
        .max(norm);
    for i in 0..1000 {
        let x = (i as f64 + 0.5) / 1000.0;
        if (shape.eval(x) - shape.eval(-x)).abs() > 1e-10 * scale {
            return Err(WaveletError::Certification(format!(
                "not even: w({x}) != w(-{x})"
            )));
        }
    }
    let jump = shape.max_relative_jump(smoothness as usize);
    if jump > 1e-9 {
        return Err(WaveletError::Certification(format!(
            "not C^{smoothness}: relative derivative jump {jump:e}"
        )));
    }
    Ok(())
}

/// Even wavelet on `[-1, 1]` with `num_vanishing` vanishing moments that is
/// `smoothness` times continuously differentiable on the whole line.
pub fn build_even_wavelet(
    num_vanishing: u32,
    smoothness: u32,
) -> Result<AnalyzingWavelet, WaveletError> {
    if num_vanishing < 2 {
        return Err(WaveletError::Infeasible(format!(
            "num_vanishing must be at least 2, got {num_vanishing}"
        )));
    }
    if smoothness + 1 < num_vanishing {
        return Err(WaveletError::Infeasible(format!(
            "smoothness {smoothness} is below num_vanishing - 1 = {}",
            num_vanishing - 1
        )));
    }
    if smoothness > 40 || num_vanishing > 24 {
        return Err(WaveletError::Infeasible(format!(
            "({num_vanishing}, {smoothness}) is beyond what double precision supports"
        )));
    }
    let shape = solve_bump_combination(num_vanishing, smoothness)?;
    AnalyzingWavelet::from_shape(shape, num_vanishing, smoothness)
}

/// Solve for `sum_i c_i (1 - x^2)^{k_i}` with `c_0 = 1` and vanishing even moments.
/// `(1 - x^2)^k` is `C^{k-1}` at `x = ±1`, so the smallest power is
/// `smoothness + 1`. Odd moments vanish by symmetry.
fn solve_bump_combination(
    num_vanishing: u32,
    smoothness: u32,
) -> Result<PiecewisePolynomial, WaveletError> {
    let n_even = num_vanishing.div_ceil(2) as usize;
    let k0 = smoothness + 1;
    for spread in 1..=3u32 {
        let powers: Vec<u32> = (0..=n_even as u32).map(|i| k0 + spread * i).collect();
        let bumps: Vec<PiecewisePolynomial> = powers
            .iter()
            .map(|&k| PiecewisePolynomial::single(-1.0, 1.0, bump_coefficients(k)))
            .collect::<Result<_, _>>()?;
        // rows: even moments 0, 2, ...; columns: bumps 1..=n_even, each scaled
        // by its own zeroth moment to keep the system balanced
        let col_scale: Vec<f64> = bumps.iter().map(|b| b.moment(0)).collect();
        let mut a = vec![0.0; n_even * n_even];
        let mut rhs = vec![0.0; n_even];
        for r in 0..n_even {
            let m = 2 * r as u32;
            for c in 0..n_even {
                a[r * n_even + c] = bumps[c + 1].moment(m) / col_scale[c + 1];
            }
            rhs[r] = -bumps[0].moment(m);
        }
        let Some(sol) = solve_dense(&mut a, &mut rhs, n_even, 1e-13) else {
            continue;
        };
        let mut coeffs = bump_coefficients(powers[0]);
        coeffs.resize(2 * *powers.last().unwrap() as usize + 1, 0.0);
        for (c, &weight) in sol.iter().enumerate() {
            let w = weight / col_scale[c + 1];
            for (i, v) in bump_coefficients(powers[c + 1]).into_iter().enumerate() {
                coeffs[i] += w * v;
            }
        }
        let raw = PiecewisePolynomial::single(-1.0, 1.0, coeffs)?;
        let norm = raw.l2_norm();
        let sign = if raw.eval(0.0) < 0.0 { -1.0 } else { 1.0 };
        return Ok(raw.scaled(sign / norm));
    }
    Err(WaveletError::SingularMomentSystem {
        vanishing: num_vanishing,
        smoothness,
    })
}

pub fn moment<W: WaveletShape>(w: &W, m: u32) -> f64 {
    w.moment(m)
}

/// Exact Fourier transform of a piecewise polynomial.
pub fn fourier_transform(p: &PiecewisePolynomial, xi: f64) -> Complex64 {
    let degree = p.degree();
    let switch = (4 * degree).max(40) as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for (seg, w) in p.segments().iter().zip(p.breakpoints().windows(2)) {
        let (a, b) = (w[0], w[1]);
        if xi.abs() * (b - a) < switch {
            let nodes = seg.len() / 2 + (xi.abs() * (b - a)) as usize + 12;
            let rule = GaussLegendre::cached(nodes);
            let re = rule.integrate(a, b, |x| crate::poly::horner(seg, x) * (xi * x).cos());
            let im = rule.integrate(a, b, |x| -crate::poly::horner(seg, x) * (xi * x).sin());
            total += Complex64::new(re, im);
        } else {
            total += by_parts(seg, a, b, xi);
        }
    }
    total
}

/// `∫_a^b P(x) e^{-iξx} dx = Σ_j [-P^{(j)}(x) e^{-iξx} / (iξ)^{j+1}]_a^b`, exact.
fn by_parts(seg: &[f64], a: f64, b: f64, xi: f64) -> Complex64 {
    let mut deriv = seg.to_vec();
    let i_xi = Complex64::new(0.0, xi);
    let mut denom = i_xi;
    let ea = Complex64::from_polar(1.0, -xi * a);
    let eb = Complex64::from_polar(1.0, -xi * b);
    let mut total = Complex64::new(0.0, 0.0);
    while !deriv.is_empty() {
        let pb = crate::poly::horner(&deriv, b);
        let pa = crate::poly::horner(&deriv, a);
        total -= (eb * pb - ea * pa) / denom;
        denom *= i_xi;
        deriv = deriv
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, v)| v * i as f64)
            .collect();
    }
    total
}

const XI_MIN: f64 = 1e-6;
const XI_MAX: f64 = 1e6;
const POINTS_PER_DECADE: usize = 64;

/// `c_ψ = ∫_0^∞ |ψ̂(ξ)|² / ξ dξ`.
pub fn admissibility_constant(w: &AnalyzingWavelet) -> Result<AdmissibilityConstant, WaveletError> {
    log_frequency_integral(|xi| w.fourier(xi).norm_sqr())
}

/// `∫_0^∞ Re(ψ̂(ξ) conj(φ̂(ξ))) / ξ dξ`, the normalization of the reconstruction
/// formula when analyzing with `psi` and synthesizing with `phi`.
pub fn cross_admissibility<A: WaveletShape, B: WaveletShape>(
    psi: &A,
    phi: &B,
) -> Result<AdmissibilityConstant, WaveletError> {
    log_frequency_integral(|xi| (psi.fourier(xi) * phi.fourier(xi).conj()).re)
}

/// Trapezoid in `u = ln ξ` over `[1e-6, 1e6]`; the error estimate compares
/// against the rule on every other node.
fn log_frequency_integral<F: Fn(f64) -> f64>(g: F) -> Result<AdmissibilityConstant, WaveletError> {
    let (u0, u1) = (XI_MIN.ln(), XI_MAX.ln());
    let intervals = POINTS_PER_DECADE * (XI_MAX / XI_MIN).log10().round() as usize;
    let h = (u1 - u0) / intervals as f64;
    let values: Vec<f64> = (0..=intervals).map(|i| g((u0 + i as f64 * h).exp())).collect();
    let peak = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !peak.is_finite() || peak == 0.0 {
        return Err(WaveletError::NonConvergent("integrand vanishes or is not finite".into()));
    }
    let (first, last) = (values[0].abs(), values[intervals].abs());
    if first > 1e-8 * peak {
        return Err(WaveletError::NonConvergent(format!(
            "integrand does not decay at low frequency ({:e} of peak); the wavelet mean is not zero",
            first / peak
        )));
    }
    if last > 1e-8 * peak {
        return Err(WaveletError::NonConvergent(format!(
            "integrand does not decay at high frequency ({:e} of peak)",
            last / peak
        )));
    }
    let trap = |stride: usize| -> f64 {
        let n = intervals / stride;
        let inner: f64 = (1..n).map(|i| values[i * stride]).sum();
        (inner + 0.5 * (values[0] + values[intervals])) * h * stride as f64
    };
    let fine = trap(1);
    let coarse = trap(2);
    Ok(AdmissibilityConstant {
        c_psi: fine,
        quadrature_error_estimate: (fine - coarse).abs(),
    })
}

/// Even, `C^1`, zero-mean synthesis wavelet whose pairing with `psi` stays
/// away from zero under small dilations and shifts. Falls back to `psi`.
pub fn build_reconstruction_wavelet(psi: &AnalyzingWavelet) -> ReconstructionWavelet {
    let fallback = || ReconstructionWavelet {
        shape: psi.shape.clone(),
        vanishing_moments: psi.vanishing_moments,
        smoothness: psi.smoothness,
    };
    let Ok(candidate) = build_even_wavelet(2, 1) else {
        return fallback();
    };
    let Ok(cross) = cross_admissibility(psi, &candidate) else {
        return fallback();
    };
    let sign = if cross.c_psi < 0.0 { -1.0 } else { 1.0 };
    let phi = ReconstructionWavelet {
        shape: candidate.shape.scaled(sign),
        vanishing_moments: 2,
        smoothness: 1,
    };
    let paired = perturbed_pairing(psi, &phi, 0.0);
    let stable = (-10..=10)
        .map(|i| perturbed_pairing(psi, &phi, i as f64 * 0.01))
        .all(|v| v.abs() > CROSS_CORRELATION_FLOOR && v.signum() == paired.signum());
    if stable && cross.c_psi.abs() > CROSS_CORRELATION_FLOOR {
        phi
    } else {
        fallback()
    }
}

/// `∫ φ((u - ε) / (1 + ε)) ψ(u) du`.
pub fn perturbed_pairing<A: WaveletShape, B: WaveletShape>(psi: &A, phi: &B, eps: f64) -> f64 {
    let (lo, hi) = psi.shape().support();
    let (plo, phi_hi) = phi.shape().support();
    let lo = lo.max(eps + (1.0 + eps) * plo);
    let hi = hi.min(eps + (1.0 + eps) * phi_hi);
    if hi <= lo {
        return 0.0;
    }
    let nodes = (psi.shape().degree() + phi.shape().degree()) / 2 + 2;
    let mut cuts: Vec<f64> = psi
        .shape()
        .breakpoints()
        .iter()
        .copied()
        .chain(phi.shape().breakpoints().iter().map(|b| eps + (1.0 + eps) * b))
        .filter(|&c| c > lo && c < hi)
        .collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    let rule = GaussLegendre::cached(nodes);
    cuts.windows(2)
        .map(|w| rule.integrate(w[0], w[1], |u| phi.eval((u - eps) / (1.0 + eps)) * psi.eval(u)))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_infeasible_parameters() {
        assert!(matches!(build_even_wavelet(1, 3), Err(WaveletError::Infeasible(_))));
        assert!(matches!(build_even_wavelet(4, 1), Err(WaveletError::Infeasible(_))));
    }

    #[test]
    fn moments_vanish_and_support_is_closed() {
        for (nv, s) in [(2, 1), (2, 3), (3, 2), (4, 3), (6, 6), (8, 9)] {
            let w = build_even_wavelet(nv, s).unwrap();
            for m in 0..nv {
                assert!(w.moment(m).abs() < MOMENT_TOLERANCE, "nv={nv} s={s} m={m}");
            }
            assert_eq!(w.eval(1.0), 0.0);
            assert_eq!(w.eval(-1.0), 0.0);
            assert!(w.moment(nv + (nv % 2)).abs() > 1e-8, "next even moment should not vanish");
        }
    }

    #[test]
    fn smoothness_is_exact_order() {
        let w = build_even_wavelet(2, 3).unwrap();
        assert!(w.shape().max_jump(3) < 1e-10);
        assert!(w.shape().max_jump(4) > 1e-3);
    }

    #[test]
    fn fourier_branches_agree() {
        let w = build_even_wavelet(4, 3).unwrap();
        let seg = &w.shape().segments()[0];
        for xi in [3.0, 17.5, 60.0] {
            let direct = GaussLegendre::new(200).integrate(-1.0, 1.0, |x| {
                crate::poly::horner(seg, x) * (xi * x).cos()
            });
            let parts = by_parts(seg, -1.0, 1.0, xi);
            assert!((parts.re - direct).abs() < 1e-9, "xi={xi}");
            assert!(parts.im.abs() < 1e-9);
        }
    }

    #[test]
    fn admissibility_rejects_nonzero_mean() {
        let bump = PiecewisePolynomial::single(-1.0, 1.0, bump_coefficients(3)).unwrap();
        let fake = AnalyzingWavelet {
            shape: bump,
            vanishing_moments: 2,
            smoothness: 2,
        };
        assert!(matches!(
            admissibility_constant(&fake),
            Err(WaveletError::NonConvergent(_))
        ));
    }

    #[test]
    fn reconstruction_wavelet_pairs_with_psi() {
        let psi = build_even_wavelet(2, 3).unwrap();
        let phi = build_reconstruction_wavelet(&psi);
        assert!(phi.moment(0).abs() < 1e-8);
        assert!(phi.moment(1).abs() < 1e-15);
        assert!(perturbed_pairing(&psi, &phi, 0.0).abs() > CROSS_CORRELATION_FLOOR);
        assert!(cross_admissibility(&psi, &phi).unwrap().c_psi > 0.0);
    }

    #[test]
    fn json_round_trip() {
        let w = build_even_wavelet(4, 5).unwrap();
        let text = serde_json::to_string(&w).unwrap();
        let back: AnalyzingWavelet = serde_json::from_str(&text).unwrap();
        assert_eq!(w, back);
    }

    #[test]
    fn json_rejects_uncertified_shape() {
        let text = r#"{"breakpoints":[-1,1],"segments":[[1,0,-1]],"vanishing_moments":2,"smoothness":0}"#;
        assert!(serde_json::from_str::<AnalyzingWavelet>(text).is_err());
    }
}
