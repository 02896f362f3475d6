//! Small least-squares helpers for decay-rate fits.

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need at least two samples to fit a slope");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        num += (xi - mx) * (yi - my);
        den += (xi - mx) * (xi - mx);
    }
    num / den
}

/// Slope of `ln(values)` against `times`; values must be positive.
pub fn log_slope(times: &[f64], values: &[f64]) -> f64 {
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    ls_slope(times, &logs)
}

/// Log-log slope: `d ln(values) / d ln(abscissae)`.
pub fn loglog_slope(abscissae: &[f64], values: &[f64]) -> f64 {
    let lx: Vec<f64> = abscissae.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    ls_slope(&lx, &ly)
}
