//! Pointwise p-exponents from the decay of leaders across scales.
//!
//! The exponent at `x0` is the least-squares slope of `ln L(a, x0)` against
//! `ln a` over a reported scale range. The fit residual is kept so that
//! oscillating behaviour shows up instead of being averaged away.

use std::io::Write;

use rayon::prelude::*;

use crate::cwt::{TimeScalePlane, UniformGrid};
use crate::error::AnalysisError;
use crate::leaders::{leader_field, LeaderField};
use crate::numeric::fit_line;

pub const MIN_SCALES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentEstimate {
    pub x0: f64,
    pub p: f64,
    pub slope: f64,
    pub intercept: f64,
    pub scale_range: (f64, f64),
    /// RMS residual of the log-log fit.
    pub residual: f64,
    pub num_scales: usize,
    /// Leaders at the noise floor that were left out of the fit.
    pub dropped_zeros: usize,
}

/// Outcome at one point: a finite slope, or the `+∞` sentinel for signals
/// whose leaders all vanish (locally polynomial).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointExponent {
    Estimated(ExponentEstimate),
    Smooth { x0: f64, p: f64 },
}

impl PointExponent {
    /// Slope, with `f64::INFINITY` standing for the smooth sentinel.
    pub fn value(&self) -> f64 {
        match self {
            PointExponent::Estimated(e) => e.slope,
            PointExponent::Smooth { .. } => f64::INFINITY,
        }
    }

    pub fn estimate(&self) -> Option<&ExponentEstimate> {
        match self {
            PointExponent::Estimated(e) => Some(e),
            PointExponent::Smooth { .. } => None,
        }
    }
}

/// Per-position entry of an [`ExponentField`]; failures do not abort the batch.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldEntry {
    Estimated(ExponentEstimate),
    Smooth,
    Failed(String),
}

impl FieldEntry {
    pub fn finite_slope(&self) -> Option<f64> {
        match self {
            FieldEntry::Estimated(e) => Some(e.slope),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentField {
    pub p: f64,
    pub positions: UniformGrid,
    pub entries: Vec<FieldEntry>,
}

impl ExponentField {
    pub fn finite_slopes(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().filter_map(FieldEntry::finite_slope)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W, comment: Option<&str>) -> std::io::Result<()> {
        if let Some(c) = comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "x0,p,slope,residual,n_scales")?;
        for (x0, e) in self.positions.iter().zip(&self.entries) {
            match e {
                FieldEntry::Estimated(est) => writeln!(
                    out,
                    "{x0},{},{},{},{}",
                    self.p, est.slope, est.residual, est.num_scales
                )?,
                FieldEntry::Smooth => writeln!(out, "{x0},{},inf,0,0", self.p)?,
                FieldEntry::Failed(_) => writeln!(out, "{x0},{},nan,nan,0", self.p)?,
            }
        }
        Ok(())
    }

    /// Reads the CSV written by [`write_csv`](Self::write_csv).
    pub fn read_csv(text: &str) -> Result<Self, AnalysisError> {
        let mut rows = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let header = rows.next().unwrap_or_default();
        if header.trim() != "x0,p,slope,residual,n_scales" {
            return Err(AnalysisError::Format(format!(
                "unexpected exponent field header {header:?}"
            )));
        }
        let mut xs = Vec::new();
        let mut entries = Vec::new();
        let mut p = f64::NAN;
        for (line_no, line) in rows.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            let parse = |i: usize| -> Result<f64, AnalysisError> {
                fields
                    .get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| AnalysisError::Format(format!("bad value on data line {}", line_no + 1)))
            };
            if fields.len() != 5 {
                return Err(AnalysisError::Format(format!(
                    "data line {} has {} columns, expected 5",
                    line_no + 1,
                    fields.len()
                )));
            }
            let x0 = parse(0)?;
            p = parse(1)?;
            let slope = parse(2)?;
            let residual = parse(3)?;
            let n = parse(4)? as usize;
            xs.push(x0);
            entries.push(if slope == f64::INFINITY {
                FieldEntry::Smooth
            } else if slope.is_nan() {
                FieldEntry::Failed("failed in source file".into())
            } else {
                FieldEntry::Estimated(ExponentEstimate {
                    x0,
                    p,
                    slope,
                    intercept: f64::NAN,
                    scale_range: (f64::NAN, f64::NAN),
                    residual,
                    num_scales: n,
                    dropped_zeros: 0,
                })
            });
        }
        if xs.is_empty() {
            return Err(AnalysisError::Format("exponent field has no rows".into()));
        }
        let step = if xs.len() > 1 { xs[1] - xs[0] } else { 1.0 };
        for (i, x) in xs.iter().enumerate() {
            if (x - (xs[0] + i as f64 * step)).abs() > 1e-6 * step.abs().max(1e-300) {
                return Err(AnalysisError::Format("exponent positions are not a uniform grid".into()));
            }
        }
        Ok(ExponentField {
            p,
            positions: UniformGrid::new(xs[0], step, xs.len())?,
            entries,
        })
    }
}

fn check_range(scale_range: (f64, f64)) -> Result<(), AnalysisError> {
    let (lo, hi) = scale_range;
    if lo > 0.0 && hi > lo && hi.is_finite() {
        Ok(())
    } else {
        Err(AnalysisError::InvalidGrid(format!(
            "scale range ({lo}, {hi}) must satisfy 0 < a_min < a_max"
        )))
    }
}

/// Regression of `ln L(a, x0)` against `ln a` for anchors inside `scale_range`.
pub fn estimate_p_exponent(
    leaders: &LeaderField,
    x0: f64,
    scale_range: (f64, f64),
) -> Result<PointExponent, AnalysisError> {
    check_range(scale_range)?;
    let pos = leaders.positions();
    let col = pos
        .nearest(x0)
        .filter(|&c| (pos.at(c) - x0).abs() <= 1e-6 * pos.step)
        .ok_or_else(|| AnalysisError::Coverage(format!("no leaders computed at x0 = {x0}")))?;
    fit_column(leaders, col, scale_range)
}

/// Same as [`estimate_p_exponent`], restricted to sup-leaders.
pub fn estimate_holder_exponent(
    leaders: &LeaderField,
    x0: f64,
    scale_range: (f64, f64),
) -> Result<PointExponent, AnalysisError> {
    if !leaders.p().is_infinite() {
        return Err(AnalysisError::InvalidP(leaders.p()));
    }
    estimate_p_exponent(leaders, x0, scale_range)
}

fn fit_column(
    leaders: &LeaderField,
    col: usize,
    (lo, hi): (f64, f64),
) -> Result<PointExponent, AnalysisError> {
    let x0 = leaders.positions().at(col);
    let floor = leaders.noise_floor();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut zeros = 0;
    let mut candidates = 0;
    let (mut a_lo, mut a_hi) = (f64::INFINITY, 0.0_f64);
    for (a, l, ok) in leaders.column(col) {
        if !ok || a < lo * (1.0 - 1e-12) || a > hi * (1.0 + 1e-12) {
            continue;
        }
        candidates += 1;
        if l <= floor {
            zeros += 1;
            continue;
        }
        xs.push(a.ln());
        ys.push(l.ln());
        a_lo = a_lo.min(a);
        a_hi = a_hi.max(a);
    }
    if candidates > 0 && zeros == candidates {
        return Ok(PointExponent::Smooth { x0, p: leaders.p() });
    }
    if xs.len() < MIN_SCALES {
        return Err(AnalysisError::InsufficientScales(format!(
            "{} usable scales at x0 = {x0} in [{lo}, {hi}] ({zeros} at the noise floor), need {MIN_SCALES}",
            xs.len()
        )));
    }
    let fit = fit_line(&xs, &ys)
        .ok_or_else(|| AnalysisError::Estimation(format!("degenerate regression at x0 = {x0}")))?;
    if !fit.slope.is_finite() {
        return Err(AnalysisError::Estimation(format!("non-finite slope at x0 = {x0}")));
    }
    Ok(PointExponent::Estimated(ExponentEstimate {
        x0,
        p: leaders.p(),
        slope: fit.slope,
        intercept: fit.intercept,
        scale_range: (a_lo, a_hi),
        residual: fit.rms_residual,
        num_scales: xs.len(),
        dropped_zeros: zeros,
    }))
}

/// Estimates at every column of an existing leader field.
pub fn exponent_field_from_leaders(
    leaders: &LeaderField,
    scale_range: (f64, f64),
) -> Result<ExponentField, AnalysisError> {
    check_range(scale_range)?;
    let entries = (0..leaders.positions().len)
        .into_par_iter()
        .map(|col| match fit_column(leaders, col, scale_range) {
            Ok(PointExponent::Estimated(e)) => FieldEntry::Estimated(e),
            Ok(PointExponent::Smooth { .. }) => FieldEntry::Smooth,
            Err(e) => FieldEntry::Failed(e.to_string()),
        })
        .collect();
    Ok(ExponentField {
        p: leaders.p(),
        positions: *leaders.positions(),
        entries,
    })
}

/// Leaders and exponents at `positions` in one pass over the plane.
pub fn exponent_field(
    plane: &TimeScalePlane,
    p: f64,
    positions: &UniformGrid,
    scale_range: (f64, f64),
) -> Result<ExponentField, AnalysisError> {
    check_range(scale_range)?;
    let leaders = leader_field(plane, p, scale_range.0, scale_range.1, positions)?;
    exponent_field_from_leaders(&leaders, scale_range)
}
