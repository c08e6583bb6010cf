/// Central-difference gradient of `f` at `x` with step `h`.
pub fn central_difference<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest `|a − b| / max(|a|, |b|, floor)` over paired entries.
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> (f64, usize) {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .enumerate()
        .fold((0.0, 0), |(best, bi), (i, e)| if e > best { (e, i) } else { (best, bi) })
}

/// Result of comparing an analytic gradient against finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
}

impl GradCheck {
    pub const STEP: f64 = 1e-5;
    /// Denominator floor, relative to the largest gradient entry.
    pub const FLOOR: f64 = 1e-6;

    pub fn run<F: FnMut(&[f64]) -> f64>(f: F, x: &[f64], analytic: Vec<f64>) -> Self {
        let numeric = central_difference(f, x, Self::STEP);
        let scale = numeric.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let (max_rel_error, worst_index) = max_relative_error(&analytic, &numeric, Self::FLOOR * scale);
        Self {
            max_rel_error,
            worst_index,
            analytic,
            numeric,
        }
    }
}
