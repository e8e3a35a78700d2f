//! Compactly supported piecewise polynomials in the monomial basis.
//!
//! Segment `i` covers `[breakpoints[i], breakpoints[i + 1]]` and holds the
//! coefficients `c_0, c_1, ...` of `sum_k c_k x^k` in the global variable `x`.
//! The function is zero outside `[breakpoints[0], breakpoints[last]]`.

use serde::{Deserialize, Serialize};

use crate::error::WaveletError;
use crate::numeric::GaussLegendre;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePolynomial {
    breakpoints: Vec<f64>,
    segments: Vec<Vec<f64>>,
}

impl PiecewisePolynomial {
    pub fn new(breakpoints: Vec<f64>, segments: Vec<Vec<f64>>) -> Result<Self, WaveletError> {
        if breakpoints.len() < 2 {
            return Err(WaveletError::InvalidShape(
                "need at least two breakpoints".into(),
            ));
        }
        if segments.len() + 1 != breakpoints.len() {
            return Err(WaveletError::InvalidShape(format!(
                "{} breakpoints need {} segments, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                segments.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite())
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(WaveletError::InvalidShape(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        if segments.iter().flatten().any(|c| !c.is_finite()) {
            return Err(WaveletError::InvalidShape("non-finite coefficient".into()));
        }
        let segments = segments
            .into_iter()
            .map(|mut c| {
                if c.is_empty() {
                    c.push(0.0);
                }
                c
            })
            .collect();
        Ok(PiecewisePolynomial {
            breakpoints,
            segments,
        })
    }

    /// A single polynomial restricted to `[lo, hi]`.
    pub fn single(lo: f64, hi: f64, coeffs: Vec<f64>) -> Result<Self, WaveletError> {
        Self::new(vec![lo, hi], vec![coeffs])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Vec<f64>] {
        &self.segments
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    pub fn degree(&self) -> usize {
        self.segments
            .iter()
            .map(|c| c.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    /// Value at `x`; zero outside the support. At an interior breakpoint the
    /// right-hand segment is used.
    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(lo..=hi).contains(&x) {
            return 0.0;
        }
        let idx = self.segment_index(x);
        horner(&self.segments[idx], x)
    }

    fn segment_index(&self, x: f64) -> usize {
        let last = self.segments.len() - 1;
        match self.breakpoints[1..last + 1]
            .binary_search_by(|b| b.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => (i + 1).min(last),
            Err(i) => i.min(last),
        }
    }

    /// `∫ x^m p(x) dx`, exact segment by segment.
    pub fn moment(&self, m: u32) -> f64 {
        let mut total = 0.0;
        for (seg, w) in self.segments.iter().zip(self.breakpoints.windows(2)) {
            let (a, b) = (w[0], w[1]);
            for (i, &c) in seg.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let e = (m as usize + i + 1) as i32;
                total += c * (b.powi(e) - a.powi(e)) / e as f64;
            }
        }
        total
    }

    /// `∫ p(x) q(x) dx`, exact (Gauss-Legendre with enough nodes per common piece).
    pub fn inner_product(&self, other: &PiecewisePolynomial) -> f64 {
        let nodes = (self.degree() + other.degree()) / 2 + 2;
        let rule = GaussLegendre::cached(nodes);
        let mut cuts: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .copied()
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let (lo, hi) = self.support();
        let (olo, ohi) = other.support();
        let (lo, hi) = (lo.max(olo), hi.min(ohi));
        cuts.windows(2)
            .filter(|w| w[0] >= lo && w[1] <= hi)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let (ps, qs) = (
                    &self.segments[self.segment_index(mid)],
                    &other.segments[other.segment_index(mid)],
                );
                rule.integrate(w[0], w[1], |x| horner(ps, x) * horner(qs, x))
            })
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner_product(self).max(0.0).sqrt()
    }

    pub fn scaled(&self, lambda: f64) -> PiecewisePolynomial {
        PiecewisePolynomial {
            breakpoints: self.breakpoints.clone(),
            segments: self
                .segments
                .iter()
                .map(|c| c.iter().map(|v| v * lambda).collect())
                .collect(),
        }
    }

    /// Derivative of order `k`, segment-wise.
    pub fn derivative(&self, k: usize) -> PiecewisePolynomial {
        let segments = self
            .segments
            .iter()
            .map(|c| {
                let mut d = c.clone();
                for _ in 0..k {
                    d = if d.len() <= 1 {
                        vec![0.0]
                    } else {
                        d.iter()
                            .enumerate()
                            .skip(1)
                            .map(|(i, v)| v * i as f64)
                            .collect()
                    };
                }
                d
            })
            .collect();
        PiecewisePolynomial {
            breakpoints: self.breakpoints.clone(),
            segments,
        }
    }

    /// Largest jump of the derivatives of order `0..=order` across breakpoints,
    /// including the jump to zero at both support ends.
    pub fn max_jump(&self, order: usize) -> f64 {
        let mut worst = 0.0_f64;
        for k in 0..=order {
            let d = self.derivative(k);
            let n = d.segments.len();
            for (i, &b) in self.breakpoints.iter().enumerate() {
                let left = if i == 0 { 0.0 } else { horner(&d.segments[i - 1], b) };
                let right = if i == n { 0.0 } else { horner(&d.segments[i], b) };
                worst = worst.max((left - right).abs());
            }
        }
        worst
    }

    /// Like [`max_jump`](Self::max_jump), but each jump is divided by the size of
    /// the terms summed to evaluate it, so rounding in high-order derivatives of
    /// high-degree segments does not register as a jump.
    pub fn max_relative_jump(&self, order: usize) -> f64 {
        let mut worst = 0.0_f64;
        for k in 0..=order {
            let d = self.derivative(k);
            let n = d.segments.len();
            for (i, &b) in self.breakpoints.iter().enumerate() {
                let side = |j: Option<usize>| match j {
                    None => (0.0, 0.0),
                    Some(j) => (horner(&d.segments[j], b), abs_terms(&d.segments[j], b)),
                };
                let (left, lm) = side(i.checked_sub(1));
                let (right, rm) = side((i < n).then_some(i));
                let mag = lm.max(rm);
                if mag > 0.0 {
                    worst = worst.max((left - right).abs() / mag);
                }
            }
        }
        worst
    }

    /// Largest absolute value of the first derivative (Lipschitz constant).
    pub fn lipschitz_bound(&self) -> f64 {
        let d = self.derivative(1);
        let mut worst = 0.0_f64;
        for (seg, w) in d.segments.iter().zip(self.breakpoints.windows(2)) {
            for k in 0..=64 {
                let x = w[0] + (w[1] - w[0]) * k as f64 / 64.0;
                worst = worst.max(horner(seg, x).abs());
            }
        }
        worst
    }
}

pub(crate) fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

fn abs_terms(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x.abs() + v.abs())
}

/// Monomial coefficients of `(1 - x^2)^k`.
pub(crate) fn bump_coefficients(k: u32) -> Vec<f64> {
    let k = k as usize;
    let mut coeffs = vec![0.0; 2 * k + 1];
    let mut binom = 1.0_f64;
    for i in 0..=k {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[2 * i] = sign * binom;
        binom = binom * (k - i) as f64 / (i + 1) as f64;
    }
    coeffs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hat() -> PiecewisePolynomial {
        // 1 - |x| on [-1, 1]
        PiecewisePolynomial::new(vec![-1.0, 0.0, 1.0], vec![vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap()
    }

    #[test]
    fn zero_outside_support() {
        let p = hat();
        assert_eq!(p.eval(-1.5), 0.0);
        assert_eq!(p.eval(1.0001), 0.0);
        assert!((p.eval(0.25) - 0.75).abs() < 1e-15);
        assert!((p.eval(-0.25) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn moments_are_exact() {
        let p = hat();
        assert!((p.moment(0) - 1.0).abs() < 1e-15);
        assert!(p.moment(1).abs() < 1e-15);
        // ∫ x^2 (1 - |x|) = 2 (1/3 - 1/4)
        assert!((p.moment(2) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn inner_product_matches_moment() {
        let p = hat();
        let one = PiecewisePolynomial::single(-1.0, 1.0, vec![1.0]).unwrap();
        assert!((p.inner_product(&one) - p.moment(0)).abs() < 1e-14);
        // ∫ (1-|x|)^2 = 2/3
        assert!((p.inner_product(&p) - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn bump_coefficients_expand_correctly() {
        let c = bump_coefficients(3);
        for x in [-0.7_f64, 0.0, 0.3, 0.95] {
            let want = (1.0 - x * x).powi(3);
            assert!((horner(&c, x) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn jumps_detect_smoothness() {
        let bump = PiecewisePolynomial::single(-1.0, 1.0, bump_coefficients(3)).unwrap();
        assert!(bump.max_jump(2) < 1e-12);
        assert!(bump.max_jump(3) > 1.0);
        assert!(hat().max_jump(0) < 1e-15);
        assert!(hat().max_jump(1) > 0.5);
    }

    #[test]
    fn rejects_bad_breakpoints() {
        assert!(PiecewisePolynomial::new(vec![0.0, 0.0], vec![vec![1.0]]).is_err());
        assert!(PiecewisePolynomial::new(vec![0.0, 1.0, 2.0], vec![vec![1.0]]).is_err());
    }
}
