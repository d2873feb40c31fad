//! Gap decay along the slab family: a field `+1` on a centred stretch of
//! relative length `δ` of one side, free elsewhere. The fitted slope of
//! `log gap` against `l` shows the decay slowing as `δ` grows towards 1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{exact_record, RECORD_SCHEMA};
use crate::boundary::BoundaryDescriptor;
use crate::hamiltonian::RateKind;
use crate::simulate::linear_fit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionPoint {
    pub l: usize,
    pub gap: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub delta: f64,
    pub points: Vec<TransitionPoint>,
    /// Least-squares slope of `ln gap` in `l`; absent with fewer than three gaps.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub schema: String,
    pub beta: f64,
    pub rates: RateKind,
    pub l_values: Vec<usize>,
    pub rows: Vec<TransitionRow>,
}

/// `(slope, intercept, R²)` of `ln gap` against `l`, or `None` with fewer than
/// three points.
pub fn log_gap_slope(points: &[(usize, f64)]) -> Option<(f64, f64, f64)> {
    if points.len() < 3 || points.iter().any(|p| !(p.1 > 0.0)) {
        return None;
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|&(l, g)| (l as f64, g.ln())).collect();
    linear_fit(&xy)
}

pub fn transition_study(l_values: &[usize], beta: f64, deltas: &[f64], rates: RateKind) -> TransitionReport {
    let rows = deltas
        .iter()
        .map(|&delta| {
            let points: Vec<TransitionPoint> = l_values
                .par_iter()
                .map(|&l| {
                    let r = exact_record(l, beta, BoundaryDescriptor::Slab(delta), rates);
                    TransitionPoint { l, gap: r.gap.filter(|_| r.error.is_none()), error: r.error }
                })
                .collect();
            let ok: Vec<(usize, f64)> = points.iter().filter_map(|p| p.gap.map(|g| (p.l, g))).collect();
            let fit = log_gap_slope(&ok);
            TransitionRow {
                delta,
                points,
                slope: fit.map(|f| f.0),
                intercept: fit.map(|f| f.1),
                r_squared: fit.map(|f| f.2),
            }
        })
        .collect();
    TransitionReport { schema: RECORD_SCHEMA.to_string(), beta, rates, l_values: l_values.to_vec(), rows }
}

impl TransitionReport {
    pub fn has_failures(&self) -> bool {
        self.rows.iter().flat_map(|r| &r.points).any(|p| p.error.is_some())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_size_declines_to_fit() {
        let r = transition_study(&[2], 1.0, &[0.5, 1.0], RateKind::Exponential);
        assert_eq!(r.rows.len(), 2);
        for row in &r.rows {
            assert!(row.slope.is_none());
            assert!(row.points[0].gap.unwrap() > 0.0);
        }
    }

    #[test]
    fn repeated_runs_are_identical() {
        let a = transition_study(&[1, 2, 3], 1.0, &[0.5], RateKind::Metropolis).to_json();
        let b = transition_study(&[1, 2, 3], 1.0, &[0.5], RateKind::Metropolis).to_json();
        assert_eq!(a, b);
        assert!(a.contains("\"slope\""));
    }

    #[test]
    fn failures_are_kept() {
        let r = transition_study(&[2, 6], 1.0, &[0.5], RateKind::Exponential);
        assert!(r.has_failures());
        assert!(r.rows[0].slope.is_none());
    }

    #[test]
    fn slope_of_exact_exponential() {
        let pts: Vec<(usize, f64)> = (2..5).map(|l| (l, (3.0 - 0.7 * l as f64).exp())).collect();
        let (s, b, _) = log_gap_slope(&pts).unwrap();
        assert!((s + 0.7).abs() < 1e-12 && (b - 3.0).abs() < 1e-12);
        assert!(log_gap_slope(&pts[..2]).is_none());
    }
}
