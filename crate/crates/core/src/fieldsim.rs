//! Stochastic generators for the three source classes.
//!
//! All generators emit a [`FieldTrace`] normalized to unit mean intensity
//! and are deterministic functions of their parameters and seed, so
//! realizations can run in parallel on distinct seeds.
//!
//! * `generate_chaotic` — complex Ornstein-Uhlenbeck (Gaussian) envelope
//!   with `<a*(t) a(t+tau)> = exp(-|tau|/tau_c)`, i.e. a Lorentzian
//!   spectrum of half-width `1/tau_c`. The update uses the exact one-step
//!   transition (decay factor plus Gaussian innovation), not
//!   Euler-Maruyama, so correlation tests carry no dt bias.
//! * `generate_coherent_am` — phase-diffusing coherent field with a
//!   mean-reverting intensity process. The intensity is a square-root
//!   (CIR-type) diffusion with stationary Gamma law of mean 1 and variance
//!   `alpha`, sampled through its exact noncentral-chi-squared transition.
//!   Its autocovariance is exactly `alpha * exp(-2|tau|/tau_amp)` and the
//!   process is non-negative by construction, so intensity clamping never
//!   triggers. A Gaussian amplitude process clipped at zero would clamp
//!   several percent of the samples at `alpha ~ 0.45` and pull `g2(0)`
//!   visibly below `1 + alpha`.
//! * `generate_mixture` — per-realization ensemble mix: with probability
//!   `x` the realization is a noiseless phase-diffusing coherent field,
//!   otherwise chaotic. Mixing at the field level (coherent carrier plus
//!   chaotic component in one trace) yields a cross-correlation dip of
//!   depth `x^2/2` instead of `x/2`; the oracle tests demonstrate this,
//!   which is why the ensemble form is used.
//!
//! The full `|g1|` of the coherent-AM field decays slightly faster than
//! `exp(-|tau|/tau_c)` at lags beyond `tau_amp` because the amplitude
//! factor `<sqrt(I(t) I(t+tau))>` saturates below 1; for `alpha = 0.445`
//! the depression is about 8%. All phase-sensitive observables used here
//! probe lags well below that, where the effect is negligible.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, invalid, Result};
use crate::trace::FieldTrace;

/// Parameter set describing one of the three source classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceModel {
    /// Gaussian chaotic field with coherence time `tau_c`.
    Chaotic { tau_c: f64 },
    /// Coherent field with phase diffusion (coherence time `tau_c`) and
    /// relative intensity noise of integral `alpha` and correlation time
    /// `tau_amp / 2`.
    CoherentAm { tau_c: f64, tau_amp: f64, alpha: f64 },
    /// Ensemble mixture: fraction `x` coherent, `1 - x` chaotic, both with
    /// coherence time `tau_c`.
    Mixture { x: f64, tau_c: f64 },
}

impl SourceModel {
    /// Coherence time of the field.
    pub fn tau_c(&self) -> f64 {
        match *self {
            SourceModel::Chaotic { tau_c }
            | SourceModel::CoherentAm { tau_c, .. }
            | SourceModel::Mixture { tau_c, .. } => tau_c,
        }
    }

    /// Amplitude-fluctuation correlation time, if the model has one.
    pub fn tau_amp(&self) -> Option<f64> {
        match *self {
            SourceModel::CoherentAm { tau_amp, .. } => Some(tau_amp),
            _ => None,
        }
    }

    /// Longest correlation time scale of the source.
    pub fn max_timescale(&self) -> f64 {
        self.tau_amp().map_or(self.tau_c(), |t| t.max(self.tau_c()))
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("tau_c", self.tau_c())?;
        match *self {
            SourceModel::Chaotic { .. } => {}
            SourceModel::CoherentAm { tau_c, tau_amp, alpha } => {
                ensure_positive("tau_amp", tau_amp)?;
                if tau_amp <= tau_c {
                    return Err(invalid(
                        "tau_amp",
                        format!("must exceed tau_c = {tau_c:e}, got {tau_amp:e}"),
                    ));
                }
                if !(0.0..1.0).contains(&alpha) {
                    return Err(invalid("alpha", format!("must be in [0, 1), got {alpha}")));
                }
            }
            SourceModel::Mixture { x, .. } => {
                if !(0.0..=1.0).contains(&x) {
                    return Err(invalid("x", format!("must be in [0, 1], got {x}")));
                }
            }
        }
        Ok(())
    }
}

/// Generate a realization of `model` over `duration` seconds at interval `dt`.
pub fn generate(model: &SourceModel, duration: f64, dt: f64, seed: u64) -> Result<FieldTrace> {
    model.validate()?;
    match *model {
        SourceModel::Chaotic { tau_c } => generate_chaotic(tau_c, duration, dt, seed),
        SourceModel::CoherentAm { tau_c, tau_amp, alpha } => {
            generate_coherent_am(tau_c, tau_amp, alpha, duration, dt, seed)
        }
        SourceModel::Mixture { x, tau_c } => generate_mixture(x, tau_c, duration, dt, seed),
    }
}

/// Chaotic (thermal) field: complex OU process with unit mean intensity.
pub fn generate_chaotic(tau_c: f64, duration: f64, dt: f64, seed: u64) -> Result<FieldTrace> {
    ensure_positive("tau_c", tau_c)?;
    let n = validate_grid(tau_c, tau_c, duration, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = complex_ou(&mut rng, n, (-dt / tau_c).exp());
    FieldTrace::new(samples, dt, 1.0)
}

/// Coherent field with phase diffusion and Lorentzian RIN of integral `alpha`.
pub fn generate_coherent_am(
    tau_c: f64,
    tau_amp: f64,
    alpha: f64,
    duration: f64,
    dt: f64,
    seed: u64,
) -> Result<FieldTrace> {
    SourceModel::CoherentAm { tau_c, tau_amp, alpha }.validate()?;
    let n = validate_grid(tau_c, tau_amp, duration, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let intensity = intensity_path(&mut rng, n, dt, tau_amp, alpha);
    let samples = modulate_phase(&mut rng, &intensity, dt, tau_c);
    FieldTrace::new(samples, dt, 1.0)
}

/// Ensemble mixture: the realization is coherent with probability `x`,
/// chaotic otherwise. Both components have unit mean intensity, so merged
/// statistics weight them `x : 1 - x`.
pub fn generate_mixture(x: f64, tau_c: f64, duration: f64, dt: f64, seed: u64) -> Result<FieldTrace> {
    SourceModel::Mixture { x, tau_c }.validate()?;
    let n = validate_grid(tau_c, tau_c, duration, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = if rng.random::<f64>() < x {
        let intensity = vec![1.0; n];
        modulate_phase(&mut rng, &intensity, dt, tau_c)
    } else {
        complex_ou(&mut rng, n, (-dt / tau_c).exp())
    };
    FieldTrace::new(samples, dt, 1.0)
}

/// Stationary complex OU path with per-step decay `rho` and unit mean power.
fn complex_ou(rng: &mut ChaCha8Rng, n: usize, rho: f64) -> Vec<Complex64> {
    // each quadrature is stationary N(0, 1/2)
    let innovation = ((1.0 - rho * rho) / 2.0).sqrt();
    let stationary = (0.5f64).sqrt();
    let mut samples = Vec::with_capacity(n);
    let mut a = Complex64::new(stationary * normal(rng), stationary * normal(rng));
    samples.push(a);
    for _ in 1..n {
        a = rho * a + Complex64::new(innovation * normal(rng), innovation * normal(rng));
        samples.push(a);
    }
    samples
}

/// Exact transition sampling of the square-root intensity diffusion
/// `dI = (2/tau_amp)(1 - I) dt + sqrt(4 alpha / tau_amp) sqrt(I) dW`.
///
/// Mean 1, variance `alpha`, autocovariance `alpha * exp(-2|tau|/tau_amp)`,
/// stationary law Gamma(1/alpha, alpha). Each step draws the scaled
/// noncentral chi-squared transition as a Poisson mixture of Gamma
/// variates. `alpha < 1` is the Feller condition keeping the path away
/// from zero.
fn intensity_path(rng: &mut ChaCha8Rng, n: usize, dt: f64, tau_amp: f64, alpha: f64) -> Vec<f64> {
    if alpha < 1e-12 {
        return vec![1.0; n];
    }
    let shape0 = 1.0 / alpha;
    let decay = (-2.0 * dt / tau_amp).exp();
    let c = 1.0 / (alpha * (1.0 - decay));

    let mut path = Vec::with_capacity(n);
    let stationary = Gamma::new(shape0, alpha).expect("valid gamma");
    let mut intensity = stationary.sample(rng);
    path.push(intensity);
    for _ in 1..n {
        let poisson_mean = c * decay * intensity;
        let j = if poisson_mean > 1e-12 {
            Poisson::new(poisson_mean).expect("valid poisson").sample(rng)
        } else {
            0.0
        };
        let y = Gamma::new(shape0 + j, 2.0).expect("valid gamma").sample(rng);
        intensity = y / (2.0 * c);
        path.push(intensity);
    }
    path
}

/// Multiply a real intensity path onto a phase-diffusing carrier with
/// `|g1(tau)| = exp(-|tau|/tau_c)` (Wiener phase, diffusion rate `2/tau_c`).
fn modulate_phase(rng: &mut ChaCha8Rng, intensity: &[f64], dt: f64, tau_c: f64) -> Vec<Complex64> {
    let step = (2.0 * dt / tau_c).sqrt();
    let mut phase: f64 = rng.random::<f64>() * TAU;
    intensity
        .iter()
        .map(|&i| {
            let a = i.sqrt() * Complex64::new(phase.cos(), phase.sin());
            phase += step * normal(rng);
            a
        })
        .collect()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn validate_grid(tau_c: f64, slowest: f64, duration: f64, dt: f64) -> Result<usize> {
    ensure_positive("duration", duration)?;
    ensure_positive("dt", dt)?;
    if dt > tau_c / 20.0 {
        return Err(invalid(
            "dt",
            format!("must be <= tau_c/20 = {:e} to avoid aliasing, got {dt:e}", tau_c / 20.0),
        ));
    }
    if duration < 1000.0 * slowest {
        return Err(invalid(
            "duration",
            format!(
                "must be >= 1000 * {:e} = {:e} to bound estimator bias, got {duration:e}",
                slowest,
                1000.0 * slowest
            ),
        ));
    }
    Ok((duration / dt).round() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    const TAU_C: f64 = 50e-12;

    #[test]
    fn rejects_coarse_dt_and_short_duration() {
        assert!(generate_chaotic(TAU_C, 1e-6, 5e-12, 1).is_err());
        assert!(generate_chaotic(TAU_C, 1e-9, 1e-12, 1).is_err());
        assert!(generate_coherent_am(1e-9, 0.5e-9, 0.4, 1e-5, 5e-11, 1).is_err()); // tau_amp < tau_c
        assert!(generate_coherent_am(1e-9, 2.76e-9, 1.2, 1e-4, 5e-11, 1).is_err()); // alpha >= 1
        assert!(generate_mixture(1.4, TAU_C, 1e-6, 1e-12, 1).is_err());
    }

    #[test]
    fn chaotic_is_deterministic_per_seed() {
        let a = generate_chaotic(TAU_C, 1e-7, 2.5e-12, 42).unwrap();
        let b = generate_chaotic(TAU_C, 1e-7, 2.5e-12, 42).unwrap();
        let c = generate_chaotic(TAU_C, 1e-7, 2.5e-12, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn chaotic_mean_intensity_and_g2_zero() {
        // tau_c = 50 ps, duration = 1 us, dt = 1 ps
        let trace = generate_chaotic(TAU_C, 1e-6, 1e-12, 7).unwrap();
        let mean = stats::mean_intensity(&trace);
        assert!((mean - 1.0).abs() < 0.05, "mean intensity {mean}");
        let g2_0 = stats::g2_at(&trace, 0);
        assert!((g2_0 - 2.0).abs() < 0.05, "g2(0) = {g2_0}");
    }

    #[test]
    fn chaotic_g1_decays_with_coherence_time() {
        // |g1(tau_c)| = exp(-1), estimated by direct lagged product
        let trace = generate_chaotic(TAU_C, 2e-6, 2e-12, 11).unwrap();
        let lag = (TAU_C / trace.dt).round() as usize;
        let g1 = stats::g1_at(&trace, lag).norm();
        assert!(
            (g1 - (-1.0f64).exp()).abs() < 0.03,
            "|g1(tau_c)| = {g1}, expected {}",
            (-1.0f64).exp()
        );
    }

    #[test]
    fn chaotic_satisfies_siegert_relation() {
        // g2(tau) = 1 + |g1(tau)|^2 within 0.05 for tau in [0, 5 tau_c]
        let trace = generate_chaotic(TAU_C, 4e-6, 2.5e-12, 13).unwrap();
        let per_tau_c = (TAU_C / trace.dt).round() as usize;
        for k in (0..=5 * per_tau_c).step_by(per_tau_c / 4) {
            let g2 = stats::g2_at(&trace, k);
            let g1 = stats::g1_at(&trace, k).norm();
            assert!(
                (g2 - 1.0 - g1 * g1).abs() < 0.05,
                "Siegert violated at lag {k}: g2 = {g2}, 1+|g1|^2 = {}",
                1.0 + g1 * g1
            );
        }
    }

    #[test]
    fn chaotic_quadratures_are_gaussian() {
        let trace = generate_chaotic(TAU_C, 2.5e-6, 2.5e-12, 17).unwrap();
        let re: Vec<f64> = trace.samples.iter().map(|a| a.re).collect();
        let im: Vec<f64> = trace.samples.iter().map(|a| a.im).collect();
        assert!(re.len() >= 1_000_000);
        for q in [&re, &im] {
            assert!(stats::skewness(q).abs() < 0.05);
            assert!(stats::excess_kurtosis(q).abs() < 0.1);
        }
    }

    #[test]
    fn coherent_am_matches_rin_autocorrelation() {
        // g2(0) = 1 + alpha and g2(tau_amp/2) = 1 + alpha/e
        let (alpha, tau_amp) = (0.445, 2.76e-9);
        let trace = generate_coherent_am(1e-9, tau_amp, alpha, 2e-5, 5e-11, 23).unwrap();
        let g2_0 = stats::g2_at(&trace, 0);
        assert!((g2_0 - 1.445).abs() < 0.03, "g2(0) = {g2_0}");
        let lag = (tau_amp / 2.0 / trace.dt).round() as usize;
        let g2_half = stats::g2_at(&trace, lag);
        let expected = 1.0 + alpha * (-1.0f64).exp();
        assert!((g2_half - expected).abs() < 0.03, "g2(tau_amp/2) = {g2_half} vs {expected}");
    }

    #[test]
    fn coherent_am_alpha_zero_is_flat() {
        let trace = generate_coherent_am(1e-9, 2.76e-9, 0.0, 1e-5, 5e-11, 29).unwrap();
        for k in [0, 10, 100, 1000] {
            let g2 = stats::g2_at(&trace, k);
            assert!((g2 - 1.0).abs() < 0.02, "g2({k}) = {g2}");
        }
    }

    #[test]
    fn coherent_am_g2_curve_follows_exponential() {
        let (alpha, tau_amp) = (0.445, 2.76e-9);
        let trace = generate_coherent_am(1.5e-9, tau_amp, alpha, 4e-5, 7.5e-11, 31).unwrap();
        let per = (tau_amp / trace.dt).round() as usize;
        for k in (0..=2 * per).step_by(per / 4) {
            let tau = k as f64 * trace.dt;
            let expected = 1.0 + alpha * (-2.0 * tau / tau_amp).exp();
            let got = stats::g2_at(&trace, k);
            assert!(
                (got - expected).abs() < 0.03,
                "g2({tau:e}) = {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn mixture_limits_recover_pure_sources() {
        // x = 1: coherent, flat g2; x = 0: chaotic, g2(0) = 2
        let coh = generate_mixture(1.0, TAU_C, 1e-6, 2.5e-12, 37).unwrap();
        let g2_coh = stats::g2_at(&coh, 0);
        assert!((g2_coh - 1.0).abs() < 0.02, "g2(0) = {g2_coh}");
        let cha = generate_mixture(0.0, TAU_C, 1e-6, 2.5e-12, 37).unwrap();
        let g2_cha = stats::g2_at(&cha, 0);
        assert!((g2_cha - 2.0).abs() < 0.05, "g2(0) = {g2_cha}");
    }

    #[test]
    fn mixture_draws_both_branches() {
        let mut coherent = 0;
        for seed in 0..200 {
            let trace = generate_mixture(0.6, TAU_C, 5.1e-8, 2.5e-12, seed).unwrap();
            let g2 = stats::g2_at(&trace, 0);
            if (g2 - 1.0).abs() < 0.3 {
                coherent += 1;
            }
        }
        // Binomial(200, 0.6): expect ~120, 5 sigma is ~35
        assert!((85..=155).contains(&coherent), "coherent branch count {coherent}");
    }
}
