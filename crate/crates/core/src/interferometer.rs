//! Unbalanced Michelson transform with fringe dithering.
//!
//! With arm delay `delta` on the sample grid and a dither phase `phi(t)`
//! that is piecewise constant over segments, the two output ports carry
//!
//! ```text
//! E_A(t) = (a(t + delta) e^{i phi(t)} - a(t)) / sqrt(2)
//! E_B(t) = (a(t + delta) e^{i phi(t)} + a(t)) / sqrt(2)
//! ```
//!
//! so `I_A + I_B = |a(t)|^2 + |a(t+delta)|^2` pointwise. Random uniform
//! segment phases make the fringe terms vanish in expectation, which is the
//! operational content of sweeping the arm difference over several
//! wavelengths: the detectors average over fringes and retain only fringe
//! contrast.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, invalid, Error, Result};
use crate::trace::{FieldTrace, IntensityTrace};

/// Dither applied to the interferometer arm difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DitherMode {
    /// Fixed zero phase; fringes survive at the outputs.
    None,
    /// Uniform random phase on `[0, 2pi)`, constant over segments of the
    /// given duration. A segment duration at or beyond the trace duration
    /// degenerates to one random phase per realization, which performs the
    /// fringe average across the ensemble instead of within the trace.
    RandomPhase { segment_duration: f64 },
}

/// Which paths are open through the interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitMode {
    /// Both arms open: interferometric cross-correlation mode.
    BothArms,
    /// One arm blocked: each detector sees a quarter of the input
    /// intensity and the cross-histogram measures plain `g2`.
    BlockArm { which: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerConfig {
    /// Interferometric delay in seconds (path difference over c/n).
    pub delta: f64,
    pub dither: DitherMode,
    pub split_mode: SplitMode,
}

impl InterferometerConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("delta", self.delta)?;
        if let DitherMode::RandomPhase { segment_duration } = self.dither {
            ensure_positive("segment_duration", segment_duration)?;
        }
        Ok(())
    }

    /// Check the dither segment bounds against a source with longest
    /// correlation time `max_timescale` and a record of `duration` seconds:
    /// segments must be long enough not to distort field correlations
    /// (`> 50 * max_timescale`) and either short enough to average at least
    /// 100 fringes per trace (`< duration / 100`) or cover the whole trace.
    pub fn validate_for_source(&self, max_timescale: f64, duration: f64) -> Result<()> {
        self.validate()?;
        if let DitherMode::RandomPhase { segment_duration } = self.dither {
            if segment_duration <= 50.0 * max_timescale {
                return Err(invalid(
                    "segment_duration",
                    format!(
                        "must exceed 50 * max correlation time = {:e}, got {segment_duration:e}",
                        50.0 * max_timescale
                    ),
                ));
            }
            if segment_duration < duration && segment_duration >= duration / 100.0 {
                return Err(invalid(
                    "segment_duration",
                    format!(
                        "must be < duration/100 = {:e} (or >= duration for one phase per \
                         realization), got {segment_duration:e}",
                        duration / 100.0
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Delay expressed in samples, rejecting off-grid values.
fn delay_samples(delta: f64, dt: f64) -> Result<usize> {
    let k = delta / dt;
    let rounded = k.round();
    if (k - rounded).abs() > 1e-6 * rounded.max(1.0) {
        return Err(Error::DeltaNotOnGrid { delta, dt });
    }
    Ok(rounded as usize)
}

/// Apply the interferometer to one field realization.
///
/// Returns the intensity traces at ports A and B. In `BothArms` mode the
/// outputs are `n - delta/dt` samples long; the dither phase sequence is a
/// pure function of `dither_seed`.
pub fn transform(
    input: &FieldTrace,
    cfg: &InterferometerConfig,
    dither_seed: u64,
) -> Result<(IntensityTrace, IntensityTrace)> {
    cfg.validate()?;
    if let SplitMode::BlockArm { .. } = cfg.split_mode {
        let blocked = blocked_arm_intensity(input);
        return Ok((blocked.clone(), blocked));
    }

    let k = delay_samples(cfg.delta, input.dt)?;
    let n = input.len();
    if n <= k {
        return Err(Error::TraceTooShort { needed: k + 1, got: n });
    }
    let out_len = n - k;

    let phases = dither_phases(cfg.dither, out_len, input.dt, dither_seed);
    let mut intensity_a = Vec::with_capacity(out_len);
    let mut intensity_b = Vec::with_capacity(out_len);
    let samples = &input.samples;
    match phases {
        Some((seg_len, phase_table)) => {
            for i in 0..out_len {
                let rotated = samples[i + k] * phase_table[i / seg_len];
                let (ia, ib) = port_intensities(rotated, samples[i]);
                intensity_a.push(ia);
                intensity_b.push(ib);
            }
        }
        None => {
            for i in 0..out_len {
                let (ia, ib) = port_intensities(samples[i + k], samples[i]);
                intensity_a.push(ia);
                intensity_b.push(ib);
            }
        }
    }

    Ok((
        IntensityTrace::new(intensity_a, input.dt, input.flux)?,
        IntensityTrace::new(intensity_b, input.dt, input.flux)?,
    ))
}

#[inline]
fn port_intensities(delayed: Complex64, direct: Complex64) -> (f64, f64) {
    let e_a = (delayed - direct) * std::f64::consts::FRAC_1_SQRT_2;
    let e_b = (delayed + direct) * std::f64::consts::FRAC_1_SQRT_2;
    (e_a.norm_sqr(), e_b.norm_sqr())
}

/// Intensity each detector sees with one interferometer arm blocked: the
/// input passes the splitter twice, so a quarter of `|a|^2` reaches each
/// port and the cross-histogram of the two detectors estimates `g2` of the
/// source directly.
pub fn blocked_arm_intensity(input: &FieldTrace) -> IntensityTrace {
    IntensityTrace {
        samples: input.samples.iter().map(|a| a.norm_sqr() * 0.25).collect(),
        dt: input.dt,
        flux: input.flux,
    }
}

/// Segment length in samples plus one unit phasor per segment.
fn dither_phases(
    dither: DitherMode,
    out_len: usize,
    dt: f64,
    seed: u64,
) -> Option<(usize, Vec<Complex64>)> {
    match dither {
        DitherMode::None => None,
        DitherMode::RandomPhase { segment_duration } => {
            let seg_len = ((segment_duration / dt).round() as usize).max(1).min(out_len);
            let n_segments = out_len.div_ceil(seg_len);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let table = (0..n_segments)
                .map(|_| {
                    let phi = rng.random::<f64>() * std::f64::consts::TAU;
                    Complex64::new(phi.cos(), phi.sin())
                })
                .collect();
            Some((seg_len, table))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldsim::{generate_chaotic, generate_coherent_am};

    fn config(delta: f64, dither: DitherMode) -> InterferometerConfig {
        InterferometerConfig { delta, dither, split_mode: SplitMode::BothArms }
    }

    #[test]
    fn zero_delay_routes_all_energy_to_port_b() {
        let trace = generate_chaotic(50e-12, 1e-7, 2.5e-12, 3).unwrap();
        let (a, b) = transform(&trace, &config(0.0, DitherMode::None), 0).unwrap();
        for (i, (ia, ib)) in a.samples.iter().zip(&b.samples).enumerate() {
            let input = trace.samples[i].norm_sqr();
            assert!(ia.abs() < 1e-12 * input.max(1.0), "I_A[{i}] = {ia}");
            assert!((ib - 2.0 * input).abs() < 1e-12 * input.max(1.0));
        }
    }

    #[test]
    fn energy_is_conserved_pointwise() {
        let trace = generate_chaotic(50e-12, 1e-7, 2.5e-12, 5).unwrap();
        let delta = 550e-12;
        let k = (delta / trace.dt).round() as usize;
        let cfg = config(delta, DitherMode::RandomPhase { segment_duration: 5e-9 });
        let (a, b) = transform(&trace, &cfg, 9).unwrap();
        for i in 0..a.samples.len() {
            let lhs = a.samples[i] + b.samples[i];
            let rhs = trace.samples[i].norm_sqr() + trace.samples[i + k].norm_sqr();
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0), "sample {i}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn rejects_off_grid_delay_and_short_traces() {
        let trace = generate_chaotic(50e-12, 1e-7, 2.5e-12, 7).unwrap();
        let err = transform(&trace, &config(1.3e-12, DitherMode::None), 0).unwrap_err();
        assert!(matches!(err, Error::DeltaNotOnGrid { .. }));
        let err = transform(&trace, &config(2e-7, DitherMode::None), 0).unwrap_err();
        assert!(matches!(err, Error::TraceTooShort { .. }));
    }

    #[test]
    fn dithered_outputs_split_evenly_for_unbalanced_delay() {
        // delta = 550 ps >> tau_c = 50 ps
        let trace = generate_chaotic(50e-12, 1e-5, 2.5e-12, 11).unwrap();
        let cfg = config(550e-12, DitherMode::RandomPhase { segment_duration: 10e-9 });
        let (a, b) = transform(&trace, &cfg, 13).unwrap();
        let mean = |t: &IntensityTrace| t.samples.iter().sum::<f64>() / t.samples.len() as f64;
        let (ma, mb) = (mean(&a), mean(&b));
        assert!((ma - mb).abs() / mb < 0.01, "port means {ma} vs {mb}");
    }

    #[test]
    fn dither_averages_fringe_term_away() {
        // coherent alpha = 0 input with delta < tau_c: the fringe term
        // 2 <Re(a*(t) a(t+delta) e^{i phi})> is O(1) undithered; many short
        // random segments suppress it below 0.01.
        let tau_c = 1e-9;
        let delta = 0.5e-9;
        let trace = generate_coherent_am(tau_c, 5e-9, 0.0, 2e-4, 5e-11, 17).unwrap();
        let fringe = |dither: DitherMode, seed: u64| {
            let (a, b) = transform(&trace, &config(delta, dither), seed).unwrap();
            let n = a.samples.len() as f64;
            let sum: f64 = b.samples.iter().zip(&a.samples).map(|(ib, ia)| ib - ia).sum();
            (sum / n).abs()
        };
        let undithered = fringe(DitherMode::None, 0);
        assert!(undithered > 0.5, "undithered fringe {undithered}");
        let dithered = fringe(DitherMode::RandomPhase { segment_duration: 2e-9 }, 19);
        assert!(dithered < 0.01, "dithered fringe {dithered}");
    }

    #[test]
    fn blocked_arm_gives_quarter_intensity_on_both_ports() {
        let trace = generate_chaotic(50e-12, 1e-7, 2.5e-12, 23).unwrap();
        let cfg = InterferometerConfig {
            delta: 550e-12,
            dither: DitherMode::None,
            split_mode: SplitMode::BlockArm { which: 1 },
        };
        let (a, b) = transform(&trace, &cfg, 0).unwrap();
        assert_eq!(a, b);
        for (i, ia) in a.samples.iter().enumerate() {
            assert!((ia - trace.samples[i].norm_sqr() * 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn segment_bounds_are_checked_against_source() {
        let cfg = config(550e-12, DitherMode::RandomPhase { segment_duration: 1e-9 });
        // too short for a 50 ps source? no: 1 ns > 50 * 50 ps = 2.5 ns is false -> err
        assert!(cfg.validate_for_source(50e-12, 1e-5).is_err());
        let cfg = config(550e-12, DitherMode::RandomPhase { segment_duration: 5e-9 });
        assert!(cfg.validate_for_source(50e-12, 1e-5).is_ok());
        // between duration/100 and duration: rejected
        let cfg = config(550e-12, DitherMode::RandomPhase { segment_duration: 5e-7 });
        assert!(cfg.validate_for_source(50e-12, 1e-5).is_err());
        // one phase per realization: allowed
        let cfg = config(550e-12, DitherMode::RandomPhase { segment_duration: 2e-5 });
        assert!(cfg.validate_for_source(50e-12, 1e-5).is_ok());
    }
}
