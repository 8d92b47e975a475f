//! Least-squares fits used by the trend detectors.

use nalgebra::{DMatrix, DVector};

/// Slope of the least-squares line through `(xs, ys)`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Value at `x = 0` of the least-squares polynomial of the given degree.
///
/// Abscissae are rescaled to `[0, 1]` by their maximum modulus before the
/// Vandermonde system is solved, which keeps cubic fits on narrow ranges well
/// conditioned.
pub fn poly_intercept(xs: &[f64], ys: &[f64], degree: usize) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() > degree, "need more points than the polynomial degree");
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let a = DMatrix::from_fn(xs.len(), degree + 1, |i, j| (xs[i] / scale).powi(j as i32));
    let b = DVector::from_column_slice(ys);
    let svd = a.svd(true, true);
    let coef = svd.solve(&b, 1e-14).expect("SVD was computed with both factors");
    coef[0]
}
