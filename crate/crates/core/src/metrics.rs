//! Pareto dominance, IGD and two-objective hypervolume. Every objective is
//! maximized.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("objective vectors have dimensions {0} and {1}")]
    DimensionMismatch(usize, usize),
    #[error("empty front")]
    EmptyFront,
    #[error("point {0:?} does not dominate the reference point {1:?}")]
    PointBelowReference(Vec<f64>, Vec<f64>),
    #[error("hypervolume is implemented for two objectives, got {0}")]
    UnsupportedDimension(usize),
}

/// `a` is at least as good as `b` everywhere and differs somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::DimensionMismatch(a.len(), b.len()));
    }
    Ok(a.iter().zip(b).all(|(x, y)| x >= y) && a != b)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Mean distance from each reference point to its nearest front point.
pub fn igd(front: &[Vec<f64>], reference: &[Vec<f64>]) -> Result<f64, MetricsError> {
    if front.is_empty() || reference.is_empty() {
        return Err(MetricsError::EmptyFront);
    }
    let mut total = 0.0;
    for r in reference {
        let mut best = f64::INFINITY;
        for p in front {
            if p.len() != r.len() {
                return Err(MetricsError::DimensionMismatch(p.len(), r.len()));
            }
            best = best.min(euclid(p, r));
        }
        total += best;
    }
    Ok(total / reference.len() as f64)
}

/// Area dominated by `front` and bounded below by `reference`.
pub fn hypervolume(front: &[Vec<f64>], reference: &[f64]) -> Result<f64, MetricsError> {
    if reference.len() != 2 {
        return Err(MetricsError::UnsupportedDimension(reference.len()));
    }
    let mut pts = Vec::with_capacity(front.len());
    for p in front {
        if p.len() != 2 {
            return Err(MetricsError::DimensionMismatch(p.len(), 2));
        }
        if !(p[0] >= reference[0] && p[1] >= reference[1]) {
            return Err(MetricsError::PointBelowReference(p.clone(), reference.to_vec()));
        }
        pts.push((p[0], p[1]));
    }
    // Descending in the first objective; sweep keeps the best second value.
    pts.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let mut area = 0.0;
    let mut top = reference[1];
    for (x, y) in pts {
        if y > top {
            area += (x - reference[0]) * (y - top);
            top = y;
        }
    }
    Ok(area)
}

/// Indices of the non-dominated members of `points` (first occurrence of
/// duplicates kept).
pub fn non_dominated(points: &[Vec<f64>]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            !points.iter().enumerate().any(|(j, q)| {
                dominates(q, &points[i]).unwrap_or(false) || (j < i && q == &points[i])
            })
        })
        .collect()
}

/// Non-dominated union of several fronts.
pub fn reference_front(fronts: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    let all: Vec<Vec<f64>> = fronts.iter().flatten().cloned().collect();
    non_dominated(&all).into_iter().map(|i| all[i].clone()).collect()
}

/// Componentwise worst over `points`, pushed out by `margin` of each range.
pub fn reference_point(points: &[Vec<f64>], margin: f64) -> Result<Vec<f64>, MetricsError> {
    let first = points.first().ok_or(MetricsError::EmptyFront)?;
    let m = first.len();
    (0..m)
        .map(|k| {
            let (lo, hi) = points.iter().try_fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                if p.len() != m {
                    return Err(MetricsError::DimensionMismatch(p.len(), m));
                }
                Ok((lo.min(p[k]), hi.max(p[k])))
            })?;
            let range = hi - lo;
            let pad = if range > 0.0 { margin * range } else { margin * lo.abs().max(1.0) };
            Ok(lo - pad)
        })
        .collect()
}
