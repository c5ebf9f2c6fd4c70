//! Direct lagged-product estimators and moment helpers.
//!
//! These operate on raw traces with no binning or model assumptions, which
//! makes them the reference estimators the generator tests are checked
//! against.

use num_complex::Complex64;

use crate::trace::FieldTrace;

/// Time-averaged intensity `<|a|^2>` of a field trace.
pub fn mean_intensity(trace: &FieldTrace) -> f64 {
    trace.samples.iter().map(|a| a.norm_sqr()).sum::<f64>() / trace.len() as f64
}

/// First-order coherence `g1` at a lag of `k` samples,
/// `<a*(t) a(t+k)> / <|a|^2>`.
pub fn g1_at(trace: &FieldTrace, k: usize) -> Complex64 {
    let n = trace.len();
    assert!(k < n, "lag exceeds trace length");
    let mut acc = Complex64::new(0.0, 0.0);
    for t in 0..n - k {
        acc += trace.samples[t].conj() * trace.samples[t + k];
    }
    acc / (n - k) as f64 / mean_intensity(trace)
}

/// Second-order coherence `g2` at a lag of `k` samples,
/// `<I(t) I(t+k)> / <I>^2`.
pub fn g2_at(trace: &FieldTrace, k: usize) -> f64 {
    let n = trace.len();
    assert!(k < n, "lag exceeds trace length");
    let intensity: Vec<f64> = trace.samples.iter().map(|a| a.norm_sqr()).collect();
    let mean = intensity.iter().sum::<f64>() / n as f64;
    let mut acc = 0.0;
    for t in 0..n - k {
        acc += intensity[t] * intensity[t + k];
    }
    acc / (n - k) as f64 / (mean * mean)
}

/// Sample skewness of a real series.
pub fn skewness(data: &[f64]) -> f64 {
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let m2 = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = data.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

/// Sample excess kurtosis of a real series (0 for a Gaussian).
pub fn excess_kurtosis(data: &[f64]) -> f64 {
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let m2 = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = data.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2) - 3.0
}
