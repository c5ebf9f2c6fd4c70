//! Brute-force reference for the interferometric cross-correlation.
//!
//! Operating directly on a field trace, this evaluates the six surviving
//! terms of the dither-averaged cross-correlation: four displaced intensity
//! correlations and the two negative interference terms,
//!
//! ```text
//! g2x(tau) = [2 G(tau) + G(tau + delta) + G(tau - delta)] / 4
//!            - Re< F(t) conj(F(t + tau)) > / 2,      F(t) = a(t + delta) a*(t)
//! ```
//!
//! normalized by the squared mean intensity. The dither average is applied
//! analytically: every term carrying a net dither phasor vanishes and only
//! the phase-free combination above survives, so the oracle is a noise-free
//! reference for the detected pipeline on the same trace ensemble (both
//! estimate an exactly even function of tau, so lags are folded to |tau|).

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::trace::FieldTrace;

/// Evaluate the six-term cross-correlation at the given lags (seconds,
/// signed, on the sample grid) for interferometric delay `delta`.
pub fn oracle_six_terms(trace: &FieldTrace, delta: f64, tau_grid: &[f64]) -> Result<Vec<f64>> {
    let k_delta = lag_on_grid(delta, trace.dt, "delta")?;
    let lags: Vec<i64> = tau_grid
        .iter()
        .map(|&tau| lag_on_grid(tau, trace.dt, "tau"))
        .collect::<Result<_>>()?;
    let max_lag = lags.iter().map(|k| k.unsigned_abs()).max().unwrap_or(0);
    let needed = (delta + max_lag as f64 * trace.dt) * 100.0;
    if trace.duration() < needed {
        return Err(invalid(
            "trace",
            format!(
                "duration {:e} s too short; need >= 100 * (delta + max tau) = {needed:e} s",
                trace.duration()
            ),
        ));
    }
    let eval = OracleEval::new(trace, k_delta as usize, &lags);
    Ok(lags.iter().map(|&k| eval.value(k)).collect())
}

/// Six-term values averaged over the sample-grid lags inside each histogram
/// bin, directly comparable with a [`CorrelationHistogram`] of the same
/// `bin_width` and `window` (bins centered on multiples of `bin_width`).
pub fn oracle_binned(
    trace: &FieldTrace,
    delta: f64,
    bin_width: f64,
    window: f64,
) -> Result<Vec<f64>> {
    let half_bins = (window / bin_width).round() as i64;
    let per_bin = (bin_width / trace.dt).round().max(1.0) as i64;
    let stride = (per_bin / 8).max(1);

    let k_delta = lag_on_grid(delta, trace.dt, "delta")?;
    // grid lags binned with the histogram's rounding rule
    let mut bins: Vec<Vec<i64>> = vec![Vec::new(); (2 * half_bins + 1) as usize];
    let reach = ((half_bins as f64 + 0.5) * bin_width / trace.dt).ceil() as i64;
    for j in (-reach..=reach).step_by(stride as usize) {
        let bin = ((j as f64 * trace.dt) / bin_width).round() as i64;
        if bin.abs() <= half_bins {
            bins[(bin + half_bins) as usize].push(j);
        }
    }

    let all_lags: Vec<i64> = bins.iter().flatten().copied().collect();
    let max_lag = all_lags.iter().map(|k| k.unsigned_abs()).max().unwrap_or(0);
    let needed = (delta + max_lag as f64 * trace.dt) * 100.0;
    if trace.duration() < needed {
        return Err(invalid(
            "trace",
            format!(
                "duration {:e} s too short; need >= 100 * (delta + window) = {needed:e} s",
                trace.duration()
            ),
        ));
    }
    let eval = OracleEval::new(trace, k_delta as usize, &all_lags);
    Ok(bins
        .iter()
        .map(|lags| lags.iter().map(|&k| eval.value(k)).sum::<f64>() / lags.len() as f64)
        .collect())
}

struct OracleEval {
    k_delta: usize,
    g: HashMap<usize, f64>,
    h: HashMap<usize, f64>,
}

impl OracleEval {
    fn new(trace: &FieldTrace, k_delta: usize, lags: &[i64]) -> Self {
        let intensity: Vec<f64> = trace.samples.iter().map(|a| a.norm_sqr()).collect();
        let mean = intensity.iter().sum::<f64>() / intensity.len() as f64;
        let norm = mean * mean;
        // F(t) = a(t + delta) a*(t); the interference term is its lagged
        // self-product, so three complex products per sample collapse to one
        let fringe: Vec<Complex64> = trace.samples[..trace.samples.len() - k_delta]
            .iter()
            .zip(&trace.samples[k_delta..])
            .map(|(direct, delayed)| delayed * direct.conj())
            .collect();

        let mut g_lags: Vec<usize> = Vec::new();
        let mut h_lags: Vec<usize> = Vec::new();
        for &k in lags {
            let ka = k.unsigned_abs() as usize;
            g_lags.push(ka);
            g_lags.push((k + k_delta as i64).unsigned_abs() as usize);
            g_lags.push((k - k_delta as i64).unsigned_abs() as usize);
            h_lags.push(ka);
        }
        g_lags.sort_unstable();
        g_lags.dedup();
        h_lags.sort_unstable();
        h_lags.dedup();

        let g = g_lags
            .par_iter()
            .map(|&k| (k, lagged_mean_real(&intensity, k) / norm))
            .collect();
        let h = h_lags
            .par_iter()
            .map(|&k| (k, lagged_mean_conj(&fringe, k).re / norm))
            .collect();
        OracleEval { k_delta, g, h }
    }

    fn value(&self, k: i64) -> f64 {
        let g = |lag: i64| self.g[&(lag.unsigned_abs() as usize)];
        let kd = self.k_delta as i64;
        let intensity_terms = (2.0 * g(k) + g(k + kd) + g(k - kd)) / 4.0;
        intensity_terms - 0.5 * self.h[&(k.unsigned_abs() as usize)]
    }
}

fn lagged_mean_real(series: &[f64], lag: usize) -> f64 {
    let n = series.len() - lag;
    let mut acc = 0.0;
    for t in 0..n {
        acc += series[t] * series[t + lag];
    }
    acc / n as f64
}

fn lagged_mean_conj(series: &[Complex64], lag: usize) -> Complex64 {
    let n = series.len() - lag;
    let mut acc = Complex64::new(0.0, 0.0);
    for t in 0..n {
        acc += series[t] * series[t + lag].conj();
    }
    acc / n as f64
}

fn lag_on_grid(value: f64, dt: f64, name: &'static str) -> Result<i64> {
    let k = value / dt;
    let rounded = k.round();
    if (k - rounded).abs() > 1e-6 * rounded.abs().max(1.0) {
        return Err(invalid(name, format!("{value:e} s is not a multiple of dt = {dt:e} s")));
    }
    Ok(rounded as i64)
}
