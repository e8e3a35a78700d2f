//! Closed-form spectra of the pulse process and a coarse-grained
//! (histogram) spectrum estimator.
//!
//! The estimator replaces Hausdorff dimension by the box-counting proxy
//! `log2(count) / J` over a grid of `2^J` points. It is biased upward for
//! sparse exponent sets and is not `dim_H`.

use std::fmt;
use std::fmt::Write as _;
use std::io::Write;

use crate::error::{AnalysisError, ModelError};
use crate::exponent::ExponentField;

/// A spectrum value; outside the support the spectrum is `-∞` by convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dim {
    Finite(f64),
    NegInfinity,
}

impl Dim {
    pub fn finite(self) -> Option<f64> {
        match self {
            Dim::Finite(v) => Some(v),
            Dim::NegInfinity => None,
        }
    }

    pub fn is_neg_infinity(self) -> bool {
        matches!(self, Dim::NegInfinity)
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dim::Finite(v) => write!(f, "{v}"),
            Dim::NegInfinity => f.write_str("-inf"),
        }
    }
}

/// `(1, -1/(αη) + 1/α)`, the range of `p` where the p-spectrum formula holds.
pub fn admissible_p_range(alpha: f64, eta: f64) -> Result<(f64, f64), ModelError> {
    if !(alpha < 0.0) || !alpha.is_finite() {
        return Err(ModelError::InvalidParams(format!(
            "the p-spectrum needs alpha < 0, got {alpha}"
        )));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(ModelError::InvalidParams(format!("eta must lie in (0, 1), got {eta}")));
    }
    if eta - 1.0 >= alpha * eta {
        return Err(ModelError::Hypothesis(format!(
            "eta - 1 < alpha * eta fails: {} >= {}",
            eta - 1.0,
            alpha * eta
        )));
    }
    Ok((1.0, -1.0 / (alpha * eta) + 1.0 / alpha))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumKind {
    Holder,
    P(f64),
}

/// Affine spectrum on a closed support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalSpectrum {
    pub kind: SpectrumKind,
    pub alpha: f64,
    pub eta: f64,
    pub support: (f64, f64),
}

impl TheoreticalSpectrum {
    /// `h ↦ h/α` on `[αη, α]`, for `α > 0`.
    pub fn holder(alpha: f64, eta: f64) -> Result<Self, ModelError> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(ModelError::InvalidParams(format!(
                "the Hölder spectrum needs alpha > 0, got {alpha}"
            )));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(ModelError::InvalidParams(format!("eta must lie in (0, 1), got {eta}")));
        }
        Ok(TheoreticalSpectrum {
            kind: SpectrumKind::Holder,
            alpha,
            eta,
            support: (alpha * eta, alpha),
        })
    }

    /// `H ↦ (Hηp + η)/(αηp + 1)` on `[αη, α + (1-η)/(ηp)]`, for `α < 0`.
    pub fn p_spectrum(alpha: f64, eta: f64, p: f64) -> Result<Self, ModelError> {
        let (lo, hi) = admissible_p_range(alpha, eta)?;
        if !(p > lo && p < hi) {
            return Err(ModelError::POutOfRange { p, lo, hi });
        }
        Ok(TheoreticalSpectrum {
            kind: SpectrumKind::P(p),
            alpha,
            eta,
            support: (alpha * eta, alpha + (1.0 - eta) / (eta * p)),
        })
    }

    pub fn eval(&self, h: f64) -> Dim {
        let (lo, hi) = self.support;
        if !(h >= lo && h <= hi) {
            return Dim::NegInfinity;
        }
        Dim::Finite(match self.kind {
            SpectrumKind::Holder => h / self.alpha,
            SpectrumKind::P(p) => {
                let (a, e) = (self.alpha, self.eta);
                (h * e * p + e) / (a * e * p + 1.0)
            }
        })
    }

    /// Slope of the affine part.
    pub fn slope(&self) -> f64 {
        match self.kind {
            SpectrumKind::Holder => 1.0 / self.alpha,
            SpectrumKind::P(p) => self.eta * p / (self.alpha * self.eta * p + 1.0),
        }
    }
}

pub fn theoretical_holder_spectrum(alpha: f64, eta: f64, h: f64) -> Result<Dim, ModelError> {
    Ok(TheoreticalSpectrum::holder(alpha, eta)?.eval(h))
}

pub fn theoretical_p_spectrum(alpha: f64, eta: f64, p: f64, h: f64) -> Result<Dim, ModelError> {
    // p = 1 sits on the open boundary of the admissible range but the formula
    // is still defined there; it is accepted for the closed-form evaluation.
    if p == 1.0 {
        admissible_p_range(alpha, eta)?;
        let spectrum = TheoreticalSpectrum {
            kind: SpectrumKind::P(1.0),
            alpha,
            eta,
            support: (alpha * eta, alpha + (1.0 - eta) / eta),
        };
        return Ok(spectrum.eval(h));
    }
    Ok(TheoreticalSpectrum::p_spectrum(alpha, eta, p)?.eval(h))
}

/// Histogram of exponents with bins `[k w, (k + 1) w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    pub bin_width: f64,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub dims: Vec<Dim>,
    pub grid_scale_j: u32,
    /// Points that entered the histogram (finite exponents).
    pub num_points: usize,
    /// Points left out (smooth sentinels and failed estimates).
    pub excluded: usize,
}

impl SpectrumEstimate {
    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }

    /// `(center, dim)` of the most populated bin.
    pub fn peak(&self) -> Option<(f64, f64)> {
        let (k, _) = self
            .counts
            .iter()
            .enumerate()
            .max_by_key(|&(k, &c)| (c, std::cmp::Reverse(k)))?;
        Some((self.centers().nth(k)?, self.dims[k].finite()?))
    }

    /// Centres of the outermost bins holding at least `min_count` points.
    pub fn support_with_min_count(&self, min_count: usize) -> Option<(f64, f64)> {
        let centers: Vec<f64> = self.centers().collect();
        let first = self.counts.iter().position(|&c| c >= min_count)?;
        let last = self.counts.iter().rposition(|&c| c >= min_count)?;
        Some((centers[first], centers[last]))
    }

    /// Lower edge of the first non-empty bin.
    pub fn lowest_mass(&self) -> Option<f64> {
        let k = self.counts.iter().position(|&c| c > 0)?;
        Some(self.bin_edges[k])
    }

    pub fn write_csv<W: Write>(
        &self,
        out: &mut W,
        theory: Option<&TheoreticalSpectrum>,
        comment: Option<&str>,
    ) -> std::io::Result<()> {
        if let Some(c) = comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "h_center,count,dim,theoretical_dim")?;
        for ((h, count), dim) in self.centers().zip(&self.counts).zip(&self.dims) {
            let t = theory.map(|t| t.eval(h).to_string()).unwrap_or_else(|| "nan".into());
            writeln!(out, "{h},{count},{dim},{t}")?;
        }
        Ok(())
    }
}

/// Coarse-grained spectrum of an exponent field sampled on `2^J` points of `[0, 1]`.
pub fn coarse_grained_spectrum(
    field: &ExponentField,
    bin_width: f64,
    j: u32,
) -> Result<SpectrumEstimate, AnalysisError> {
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(AnalysisError::InvalidGrid(format!("bin width must be positive, got {bin_width}")));
    }
    if field.entries.is_empty() {
        return Err(AnalysisError::InvalidGrid("empty exponent field".into()));
    }
    if j == 0 || j > 30 || field.positions.len != 1usize << j {
        return Err(AnalysisError::InvalidGrid(format!(
            "field has {} points, expected 2^{j}",
            field.positions.len
        )));
    }
    let pos = &field.positions;
    if pos.start < -1e-12 || pos.end() > 1.0 + 1e-12 {
        return Err(AnalysisError::InvalidGrid(format!(
            "field positions [{}, {}] are not inside [0, 1]",
            pos.start,
            pos.end()
        )));
    }
    let slopes: Vec<f64> = field.finite_slopes().collect();
    let excluded = field.entries.len() - slopes.len();
    if slopes.is_empty() {
        return Ok(SpectrumEstimate {
            bin_width,
            bin_edges: Vec::new(),
            counts: Vec::new(),
            dims: Vec::new(),
            grid_scale_j: j,
            num_points: 0,
            excluded,
        });
    }
    let bin = |h: f64| (h / bin_width).floor() as i64;
    let lo = slopes.iter().map(|&h| bin(h)).min().unwrap();
    let hi = slopes.iter().map(|&h| bin(h)).max().unwrap();
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for &h in &slopes {
        counts[(bin(h) - lo) as usize] += 1;
    }
    let bin_edges = (lo..=hi + 1).map(|k| k as f64 * bin_width).collect();
    let dims = counts
        .iter()
        .map(|&c| {
            if c == 0 {
                Dim::NegInfinity
            } else {
                Dim::Finite((c as f64).log2() / j as f64)
            }
        })
        .collect();
    Ok(SpectrumEstimate {
        bin_width,
        bin_edges,
        counts,
        dims,
        grid_scale_j: j,
        num_points: slopes.len(),
        excluded,
    })
}

/// Standalone SVG line plot of the estimate, with the theoretical spectrum
/// overlaid when given.
pub fn render_svg(estimate: &SpectrumEstimate, theory: Option<&TheoreticalSpectrum>, title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 56.0;
    let est: Vec<(f64, f64)> = estimate
        .centers()
        .zip(&estimate.dims)
        .filter_map(|(h, d)| d.finite().map(|v| (h, v)))
        .collect();
    let theo: Vec<(f64, f64)> = theory
        .map(|t| {
            let (a, b) = t.support;
            (0..=100)
                .filter_map(|i| {
                    let h = a + (b - a) * i as f64 / 100.0;
                    t.eval(h).finite().map(|d| (h, d))
                })
                .collect()
        })
        .unwrap_or_default();
    let xs = est.iter().chain(&theo).map(|p| p.0);
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    let pad = 0.05 * (x1 - x0).max(1e-3);
    let (x0, x1) = (x0 - pad, x1 + pad);
    let (y0, y1) = (0.0, 1.1);
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let polyline = |pts: &[(f64, f64)]| {
        pts.iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y.clamp(y0, y1))))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<path d="M{M},{} L{},{} M{M},{} L{M},{M}" stroke="black" fill="none"/>"#,
        H - M,
        W - M,
        H - M,
        H - M
    );
    for i in 0..=5 {
        let x = x0 + (x1 - x0) * i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{x:.2}</text>"#,
            sx(x),
            H - M + 18.0
        );
        let y = 0.2 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{y:.1}</text>"#,
            M - 6.0,
            sy(y) + 4.0
        );
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">h</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(svg, r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">D(h)</text>"#, H / 2.0, H / 2.0);
    if theo.len() > 1 {
        let _ = writeln!(
            svg,
            r##"<polyline class="theoretical" points="{}" stroke="#c03030" stroke-width="2" fill="none"/>"##,
            polyline(&theo)
        );
    }
    if !est.is_empty() {
        let _ = writeln!(
            svg,
            r##"<polyline class="estimated" points="{}" stroke="#2050b0" stroke-width="1.5" fill="none"/>"##,
            polyline(&est)
        );
        for &(x, y) in &est {
            let _ = writeln!(
                svg,
                r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#2050b0"/>"##,
                sx(x),
                sy(y.clamp(y0, y1))
            );
        }
    }
    let lx = W - M - 150.0;
    let _ = writeln!(svg, r##"<line x1="{lx}" y1="{M}" x2="{}" y2="{M}" stroke="#2050b0" stroke-width="1.5"/>"##, lx + 24.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}">estimated</text>"#, lx + 30.0, M + 4.0);
    if theo.len() > 1 {
        let _ = writeln!(svg, r##"<line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="#c03030" stroke-width="2"/>"##, M + 18.0, lx + 24.0, M + 18.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">theoretical</text>"#, lx + 30.0, M + 22.0);
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cwt::UniformGrid;
    use crate::exponent::{ExponentEstimate, FieldEntry};

    fn field_of(slopes: &[f64], j: u32) -> ExponentField {
        let n = 1usize << j;
        let entries = (0..n)
            .map(|i| {
                let s = slopes[i % slopes.len()];
                FieldEntry::Estimated(ExponentEstimate {
                    x0: i as f64 / n as f64,
                    p: 2.0,
                    slope: s,
                    intercept: 0.0,
                    scale_range: (0.01, 0.1),
                    residual: 0.0,
                    num_scales: 4,
                    dropped_zeros: 0,
                })
            })
            .collect();
        ExponentField {
            p: 2.0,
            positions: UniformGrid::new(0.0, 1.0 / n as f64, n).unwrap(),
            entries,
        }
    }

    #[test]
    fn figure_parameters() {
        assert_eq!(theoretical_holder_spectrum(0.5, 0.9, 0.5).unwrap(), Dim::Finite(1.0));
        let d = theoretical_holder_spectrum(0.5, 0.9, 0.45).unwrap().finite().unwrap();
        assert!((d - 0.9).abs() < 1e-15);
        assert_eq!(theoretical_holder_spectrum(0.5, 0.9, 0.2).unwrap(), Dim::NegInfinity);
        let d = theoretical_p_spectrum(-0.7, 0.5, 1.0, -0.35).unwrap().finite().unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        let d = theoretical_p_spectrum(-0.7, 0.5, 1.0, 0.3).unwrap().finite().unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn admissible_range_arithmetic() {
        let (lo, hi) = admissible_p_range(-0.7, 0.5).unwrap();
        assert_eq!(lo, 1.0);
        assert!((hi - 10.0 / 7.0).abs() < 1e-12);
        let (_, hi) = admissible_p_range(-0.2, 0.5).unwrap();
        assert!((hi - 5.0).abs() < 1e-12);
        assert!(matches!(admissible_p_range(-1.0, 0.5), Err(ModelError::Hypothesis(_))));
    }

    #[test]
    fn p_out_of_range_message() {
        let err = TheoreticalSpectrum::p_spectrum(-0.7, 0.5, 3.0).unwrap_err();
        assert_eq!(err.to_string(), "p = 3 outside (1, 1.4286)");
    }

    #[test]
    fn constant_field_is_one_full_bin() {
        let est = coarse_grained_spectrum(&field_of(&[0.42], 8), 0.05, 8).unwrap();
        assert_eq!(est.counts, vec![256]);
        assert_eq!(est.dims, vec![Dim::Finite(1.0)]);
        assert_eq!(est.num_points, 256);
        let (h, d) = est.peak().unwrap();
        assert!((h - 0.425).abs() < 1e-12 && d == 1.0);
    }

    #[test]
    fn empty_interior_bins_are_neg_infinity() {
        let est = coarse_grained_spectrum(&field_of(&[0.11, 0.31], 4), 0.05, 4).unwrap();
        assert_eq!(est.counts.len(), 5);
        assert!(est.dims[1].is_neg_infinity());
        assert_eq!(est.counts.iter().sum::<usize>(), 16);
    }

    #[test]
    fn rejects_wrong_grid_size() {
        let f = field_of(&[0.1], 4);
        assert!(coarse_grained_spectrum(&f, 0.05, 5).is_err());
        assert!(coarse_grained_spectrum(&f, 0.0, 4).is_err());
    }

    #[test]
    fn svg_has_two_curves() {
        let est = coarse_grained_spectrum(&field_of(&[-0.3, 0.0, 0.1], 6), 0.05, 6).unwrap();
        let theory = TheoreticalSpectrum::p_spectrum(-0.7, 0.5, 1.2).unwrap();
        let svg = render_svg(&est, Some(&theory), "p-spectrum");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("class=\"theoretical\""));
        assert!(svg.contains("class=\"estimated\""));
    }
}
