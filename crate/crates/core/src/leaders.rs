//! Continuous leaders, continuous p-leaders and the `N_f` norm proxy.
//!
//! With `E_a(t) = ∫_{s_min}^{a} |W(s, t)|² ds/s` (a log-scale Riemann sum over
//! the plane's rows),
//!
//! * `L^{(p)}(a, b) = ((1/a) ∫_{|t-b|<a} E_a(t)^{p/2} dt)^{1/p}`,
//! * `L(a, b) = sup { |W(s, t)| : s ≤ a, |t - b| < a }`,
//! * `N_f = (∫ E_∞(t)^{p/2} dt)^{1/p}`.
//!
//! `p = f64::INFINITY` selects the sup-leader everywhere a `p` is accepted.

use std::collections::VecDeque;
use std::io::Write;

use crate::cwt::{TimeScalePlane, UniformGrid};
use crate::error::AnalysisError;

/// Result of a single leader evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaderValue {
    pub value: f64,
    /// Finest scale that entered the computation.
    pub s_min: f64,
    /// Plane entries in the region that were skipped as boundary-affected.
    pub excluded: usize,
}

/// Leaders on a grid of anchor scales (decreasing) and positions.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderField {
    p: f64,
    anchor_scales: Vec<f64>,
    positions: UniformGrid,
    values: Vec<f64>,
    valid: Vec<bool>,
    s_min: f64,
    noise_floor: f64,
}

impl LeaderField {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn anchor_scales(&self) -> &[f64] {
        &self.anchor_scales
    }

    pub fn positions(&self) -> &UniformGrid {
        &self.positions
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.positions.len + j]
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.valid[i * self.positions.len + j]
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    /// Leaders at or below this level carry no information beyond rounding.
    pub fn noise_floor(&self) -> f64 {
        self.noise_floor
    }

    /// `(a, L(a, x0), valid)` for the position column `j`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (f64, f64, bool)> + '_ {
        self.anchor_scales
            .iter()
            .enumerate()
            .map(move |(i, &a)| (a, self.value(i, j), self.is_valid(i, j)))
    }

    pub fn write_csv<W: Write>(&self, out: &mut W, comment: Option<&str>) -> std::io::Result<()> {
        if let Some(c) = comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "a,b,L,valid")?;
        for (i, a) in self.anchor_scales.iter().enumerate() {
            for (j, b) in self.positions.iter().enumerate() {
                writeln!(out, "{a},{b},{},{}", self.value(i, j), self.is_valid(i, j) as u8)?;
            }
        }
        Ok(())
    }
}

fn check_p(p: f64) -> Result<(), AnalysisError> {
    if p > 1.0 {
        Ok(())
    } else {
        Err(AnalysisError::InvalidP(p))
    }
}

/// Row indices with scale `≤ a`, finest first.
fn rows_up_to(plane: &TimeScalePlane, a: f64) -> Result<Vec<usize>, AnalysisError> {
    let scales = plane.scale_grid().scales();
    let finest = plane.scale_grid().finest();
    if a < finest * (1.0 - 1e-12) {
        return Err(AnalysisError::ScaleBelowResolution {
            scale: a,
            limit: finest,
        });
    }
    if a > plane.scale_grid().coarsest() * (1.0 + 1e-12) {
        return Err(AnalysisError::Coverage(format!(
            "scale {a} is above the coarsest plane scale {}",
            plane.scale_grid().coarsest()
        )));
    }
    Ok((0..scales.len())
        .rev()
        .filter(|&i| scales[i] <= a * (1.0 + 1e-12))
        .collect())
}

/// Column range of the open ball `|t - b| < a`, or an error when the ball
/// is not inside the plane's positions.
fn ball_columns(positions: &UniformGrid, a: f64, b: f64) -> Option<(usize, usize)> {
    let half = 0.5 * positions.step;
    if b - a < positions.start - half || b + a > positions.end() + half {
        return None;
    }
    let r = a * (1.0 - 1e-9);
    let lo = ((b - r - positions.start) / positions.step).ceil().max(0.0) as usize;
    let hi = (((b + r - positions.start) / positions.step).floor() as usize).min(positions.len - 1);
    (lo <= hi).then_some((lo, hi))
}

fn coverage_error(a: f64, b: f64, positions: &UniformGrid) -> AnalysisError {
    AnalysisError::Coverage(format!(
        "ball of radius {a} around {b} leaves the plane positions [{}, {}]",
        positions.start,
        positions.end()
    ))
}

/// `sup |W(s, t)|` over `s ≤ a`, `|t - b| < a`.
pub fn continuous_leader(plane: &TimeScalePlane, a: f64, b: f64) -> Result<LeaderValue, AnalysisError> {
    let rows = rows_up_to(plane, a)?;
    let (lo, hi) = ball_columns(plane.positions(), a, b).ok_or_else(|| coverage_error(a, b, plane.positions()))?;
    let mut best = 0.0_f64;
    let mut excluded = 0;
    for &i in &rows {
        for j in lo..=hi {
            if plane.is_valid(i, j) {
                best = best.max(plane.value(i, j).abs());
            } else {
                excluded += 1;
            }
        }
    }
    Ok(LeaderValue {
        value: best,
        s_min: plane.scale_grid().finest(),
        excluded,
    })
}

/// Continuous p-leader at `(a, b)`; `p = ∞` gives [`continuous_leader`].
pub fn continuous_p_leader(
    plane: &TimeScalePlane,
    p: f64,
    a: f64,
    b: f64,
) -> Result<LeaderValue, AnalysisError> {
    check_p(p)?;
    if p.is_infinite() {
        return continuous_leader(plane, a, b);
    }
    let rows = rows_up_to(plane, a)?;
    let (lo, hi) = ball_columns(plane.positions(), a, b).ok_or_else(|| coverage_error(a, b, plane.positions()))?;
    let dlog = plane.scale_grid().log_step();
    let mut excluded = 0;
    let mut total = 0.0;
    for j in lo..=hi {
        let mut e = 0.0;
        for &i in &rows {
            if plane.is_valid(i, j) {
                e += plane.value(i, j).powi(2) * dlog;
            } else {
                excluded += 1;
            }
        }
        total += e.powf(0.5 * p);
    }
    let step = plane.positions().step;
    Ok(LeaderValue {
        value: (total * step / a).powf(1.0 / p),
        s_min: plane.scale_grid().finest(),
        excluded,
    })
}

/// `N_f` over the whole plane.
pub fn lp_norm_proxy(plane: &TimeScalePlane, p: f64) -> Result<f64, AnalysisError> {
    check_p(p)?;
    if p.is_infinite() {
        return Err(AnalysisError::InvalidP(p));
    }
    if plane.scale_grid().octaves() < 6.0 {
        return Err(AnalysisError::InsufficientScales(format!(
            "the norm proxy needs at least 6 octaves, plane spans {:.2}",
            plane.scale_grid().octaves()
        )));
    }
    let dlog = plane.scale_grid().log_step();
    let cols = plane.positions().len;
    let mut energy = vec![0.0; cols];
    let mut any_valid = false;
    for i in 0..plane.scale_grid().len() {
        for (j, (v, ok)) in plane.row(i).iter().zip(plane.row_valid(i)).enumerate() {
            if *ok {
                energy[j] += v * v * dlog;
                any_valid = true;
            }
        }
    }
    if !any_valid {
        return Err(AnalysisError::Coverage("plane has no valid entries".into()));
    }
    let total: f64 = energy.iter().map(|e| e.powf(0.5 * p)).sum();
    Ok((total * plane.positions().step).powf(1.0 / p))
}

/// Leaders for every plane scale in `[a_min, a_max]` and every position of
/// `x0s`, which must lie on the plane's position grid.
///
/// Entries whose ball leaves the plane, or which touch boundary-affected
/// plane entries, are marked invalid.
pub fn leader_field(
    plane: &TimeScalePlane,
    p: f64,
    a_min: f64,
    a_max: f64,
    x0s: &UniformGrid,
) -> Result<LeaderField, AnalysisError> {
    check_p(p)?;
    let pos = plane.positions();
    let stride_f = x0s.step / pos.step;
    let stride = stride_f.round() as usize;
    let first = pos.nearest(x0s.start);
    let first = match first {
        Some(f) if stride >= 1 && (stride_f - stride as f64).abs() < 1e-6 => f,
        _ => {
            return Err(AnalysisError::InvalidGrid(
                "leader positions must lie on the plane's position grid".into(),
            ))
        }
    };
    if (pos.at(first) - x0s.start).abs() > 1e-6 * pos.step {
        return Err(AnalysisError::InvalidGrid(format!(
            "position {} is not on the plane grid",
            x0s.start
        )));
    }
    let scales = plane.scale_grid().scales();
    let anchors: Vec<usize> = (0..scales.len())
        .filter(|&i| scales[i] >= a_min * (1.0 - 1e-12) && scales[i] <= a_max * (1.0 + 1e-12))
        .collect();
    if anchors.is_empty() {
        return Err(AnalysisError::Coverage(format!(
            "no plane scale in [{a_min}, {a_max}]"
        )));
    }
    let cols = pos.len;
    let dlog = plane.scale_grid().log_step();
    let mut acc = vec![0.0_f64; cols];
    let mut tainted = vec![false; cols];
    let n_out = x0s.len;
    let mut values = vec![0.0; anchors.len() * n_out];
    let mut valid = vec![false; anchors.len() * n_out];

    // anchors are in decreasing order; walk rows from the finest scale up
    let coarsest_anchor = anchors[0];
    for i in (coarsest_anchor..scales.len()).rev() {
        for (j, (v, ok)) in plane.row(i).iter().zip(plane.row_valid(i)).enumerate() {
            if *ok {
                if p.is_infinite() {
                    acc[j] = acc[j].max(v.abs());
                } else {
                    acc[j] += v * v * dlog;
                }
            } else {
                tainted[j] = true;
            }
        }
        let Some(slot) = anchors.iter().position(|&k| k == i) else {
            continue;
        };
        let a = scales[i];
        let row_vals = &mut values[slot * n_out..(slot + 1) * n_out];
        let row_ok = &mut valid[slot * n_out..(slot + 1) * n_out];
        let mut bad_prefix = vec![0usize; cols + 1];
        for j in 0..cols {
            bad_prefix[j + 1] = bad_prefix[j] + tainted[j] as usize;
        }
        if p.is_infinite() {
            let windows: Vec<Option<(usize, usize)>> =
                (0..n_out).map(|k| ball_columns(pos, a, x0s.at(k))).collect();
            let maxima = window_maxima(&acc, &windows);
            for k in 0..n_out {
                if let (Some((lo, hi)), Some(m)) = (windows[k], maxima[k]) {
                    row_vals[k] = m;
                    row_ok[k] = bad_prefix[hi + 1] == bad_prefix[lo];
                }
            }
        } else {
            let sums = RangeSum::new(acc.iter().map(|e| e.powf(0.5 * p)));
            for k in 0..n_out {
                if let Some((lo, hi)) = ball_columns(pos, a, x0s.at(k)) {
                    let total = sums.sum(lo, hi + 1);
                    row_vals[k] = (total * pos.step / a).powf(1.0 / p);
                    row_ok[k] = bad_prefix[hi + 1] == bad_prefix[lo];
                }
            }
        }
    }
    let floor = if p.is_infinite() {
        plane.noise_floor()
    } else {
        plane.noise_floor() * (2.0 * scales.len() as f64 * dlog).sqrt()
    };
    Ok(LeaderField {
        p,
        anchor_scales: anchors.iter().map(|&i| scales[i]).collect(),
        positions: *x0s,
        values,
        valid,
        s_min: plane.scale_grid().finest(),
        noise_floor: floor,
    })
}

/// Folds isolated features too fine for the plane into a leader field.
///
/// Feature `(x_k, m_k)` is treated as concentrated at `x_k`: for finite `p` it
/// adds `m_k` to `∫_{|t-b|<a} E_a(t)^{p/2} dt` of every ball containing
/// `x_k`; for the sup-leader `m_k` is a lower bound on `|W|` inside such a
/// ball. Features must be sorted by position.
pub fn add_point_features(field: &mut LeaderField, features: &[(f64, f64)]) {
    if features.is_empty() {
        return;
    }
    debug_assert!(features.windows(2).all(|w| w[0].0 <= w[1].0));
    let xs: Vec<f64> = features.iter().map(|f| f.0).collect();
    let n_out = field.positions.len;
    let p = field.p;
    let sums = (!p.is_infinite()).then(|| RangeSum::new(features.iter().map(|f| f.1)));
    let masses: Vec<f64> = features.iter().map(|f| f.1).collect();
    for (slot, &a) in field.anchor_scales.iter().enumerate() {
        let windows: Vec<Option<(usize, usize)>> = (0..n_out)
            .map(|k| {
                let b = field.positions.at(k);
                let lo = xs.partition_point(|&x| x <= b - a);
                let hi = xs.partition_point(|&x| x < b + a);
                (hi > lo).then(|| (lo, hi - 1))
            })
            .collect();
        let row = &mut field.values[slot * n_out..(slot + 1) * n_out];
        match &sums {
            Some(sums) => {
                for (k, w) in windows.iter().enumerate() {
                    if let Some((lo, hi)) = *w {
                        let extra = sums.sum(lo, hi + 1) / a;
                        row[k] = (row[k].powf(p) + extra).powf(1.0 / p);
                    }
                }
            }
            None => {
                for (k, m) in window_maxima(&masses, &windows).into_iter().enumerate() {
                    if let Some(m) = m {
                        row[k] = row[k].max(m);
                    }
                }
            }
        }
    }
}

/// Pairwise-sum tree. Range sums only ever add non-negative partial sums,
/// so a huge value elsewhere in the row cannot swamp a quiet window the way
/// prefix-sum differences would.
struct RangeSum {
    n: usize,
    tree: Vec<f64>,
}

impl RangeSum {
    fn new<I: ExactSizeIterator<Item = f64>>(data: I) -> Self {
        let n = data.len();
        let mut tree = vec![0.0; 2 * n];
        for (i, v) in data.enumerate() {
            tree[n + i] = v;
        }
        for i in (1..n).rev() {
            tree[i] = tree[2 * i] + tree[2 * i + 1];
        }
        RangeSum { n, tree }
    }

    /// Sum over `lo..hi`.
    fn sum(&self, lo: usize, hi: usize) -> f64 {
        let (mut l, mut r) = (lo + self.n, hi + self.n);
        let mut total = 0.0;
        while l < r {
            if l & 1 == 1 {
                total += self.tree[l];
                l += 1;
            }
            if r & 1 == 1 {
                r -= 1;
                total += self.tree[r];
            }
            l >>= 1;
            r >>= 1;
        }
        total
    }
}

/// Maximum of `data` over each window; windows must be ordered by both ends.
fn window_maxima(data: &[f64], windows: &[Option<(usize, usize)>]) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(windows.len());
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next = 0usize;
    for w in windows {
        let Some((lo, hi)) = *w else {
            out.push(None);
            continue;
        };
        while next <= hi {
            while deque.back().is_some_and(|&b| data[b] <= data[next]) {
                deque.pop_back();
            }
            deque.push_back(next);
            next += 1;
        }
        while deque.front().is_some_and(|&f| f < lo) {
            deque.pop_front();
        }
        out.push(deque.front().map(|&f| data[f]));
    }
    out
}

/// Dyadic discrete p-leader built from transform values at
/// `(2^{-j'}, k' 2^{-j'})`, used as a stand-in for wavelet coefficients:
/// `(Σ_{λ' ⊆ 3λ_{j,k}, j' ≥ j} |W|^p 2^{-(j'-j)})^{1/p}`.
pub fn discrete_p_leader_proxy(
    plane: &TimeScalePlane,
    p: f64,
    j: i32,
    k: i64,
) -> Result<f64, AnalysisError> {
    check_p(p)?;
    let scales = plane.scale_grid().scales();
    let levels: Vec<(i32, usize)> = (j..j + 64)
        .map_while(|jj| {
            let target = (-(jj as f64)).exp2();
            scales
                .iter()
                .position(|&a| (a / target - 1.0).abs() < 1e-9)
                .map(|row| (jj, row))
        })
        .collect();
    if levels.len() < 2 {
        return Err(AnalysisError::InsufficientDepth(format!(
            "need dyadic scales 2^-{j} and 2^-{} in the plane",
            j + 1
        )));
    }
    let pos = plane.positions();
    let mut total = 0.0_f64;
    for &(jj, row) in &levels {
        let shift = jj - j;
        let width = 1i64 << shift;
        let weight = (-(shift as f64)).exp2();
        for kk in (k - 1) * width..(k + 2) * width {
            let b = kk as f64 * (-(jj as f64)).exp2();
            let col = pos
                .nearest(b)
                .filter(|&c| (pos.at(c) - b).abs() <= 1e-6 * pos.step)
                .ok_or_else(|| {
                    AnalysisError::Coverage(format!("dyadic point {b} is not on the plane grid"))
                })?;
            let c = plane.value(row, col).abs();
            if p.is_infinite() {
                total = total.max(c);
            } else {
                total += c.powf(p) * weight;
            }
        }
    }
    Ok(if p.is_infinite() { total } else { total.powf(1.0 / p) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cwt::ScaleGrid;

    fn toy_plane() -> TimeScalePlane {
        let grid = ScaleGrid::dyadic(0.5, 1.0 / 64.0, 4).unwrap();
        let pos = UniformGrid::spanning(-1.0, 1.0, 1.0 / 128.0).unwrap();
        TimeScalePlane::from_fn(grid, pos, |a, b| a.sqrt() * (1.0 + (7.0 * b).sin()) * (b - 0.1 * a).cos()).unwrap()
    }

    #[test]
    fn rejects_p_at_most_one() {
        let plane = toy_plane();
        assert!(matches!(continuous_p_leader(&plane, 1.0, 0.25, 0.0), Err(AnalysisError::InvalidP(_))));
        assert!(matches!(lp_norm_proxy(&plane, 0.5), Err(AnalysisError::InvalidP(_))));
    }

    #[test]
    fn batch_matches_pointwise() {
        let plane = toy_plane();
        let x0s = UniformGrid::spanning(-0.5, 0.5, 1.0 / 32.0).unwrap();
        for p in [1.5, 2.0, 4.0, f64::INFINITY] {
            let field = leader_field(&plane, p, 1.0 / 64.0, 0.5, &x0s).unwrap();
            for (i, &a) in field.anchor_scales().iter().enumerate() {
                for (k, b) in x0s.iter().enumerate() {
                    let pointwise = continuous_p_leader(&plane, p, a, b).unwrap().value;
                    let batch = field.value(i, k);
                    assert!((pointwise - batch).abs() <= 1e-12 * pointwise.max(1e-300), "p={p} a={a} b={b}");
                    assert!(field.is_valid(i, k));
                }
            }
        }
    }

    #[test]
    fn range_sum_matches_direct() {
        let data: Vec<f64> = (0..37).map(|i| ((i * 7919) % 13) as f64 + 0.5).collect();
        let sums = RangeSum::new(data.iter().copied());
        for lo in 0..data.len() {
            for hi in lo..=data.len() {
                let direct: f64 = data[lo..hi].iter().sum();
                assert!((sums.sum(lo, hi) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sup_window_maxima() {
        let data = [1.0, 5.0, 2.0, 0.0, 3.0, 1.0];
        let w = [Some((0, 1)), Some((1, 3)), Some((2, 4)), None, Some((4, 5))];
        let m = window_maxima(&data, &w);
        assert_eq!(m, vec![Some(5.0), Some(5.0), Some(3.0), None, Some(3.0)]);
    }

    #[test]
    fn out_of_plane_ball_is_an_error() {
        let plane = toy_plane();
        assert!(matches!(continuous_leader(&plane, 0.5, 0.9), Err(AnalysisError::Coverage(_))));
        assert!(continuous_leader(&plane, 1.0 / 256.0, 0.0).is_err());
    }
}
