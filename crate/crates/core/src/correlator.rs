//! Time-tag correlation histograms.
//!
//! `cross_correlate` counts every tag pair `(t_a, t_b)` whose separation
//! `t_b - t_a` falls within the window, full multi-start (not start-stop),
//! using a two-pointer sweep over the sorted streams: O(N_a + N_b + P)
//! with P the number of in-window pairs. Only `a`-tags whose full window
//! fits inside the record contribute, and the normalization time shrinks
//! by one window at each record edge, which removes edge bias from every
//! bin: for uncorrelated streams the expected counts are
//! `rate_a * rate_b * bin_width * total_time` in every bin.
//!
//! Normalization uses measured rates (counts over duration), mirroring how
//! a hardware correlation card is normalized, so
//! `g2[k] = counts[k] / (rate_a * rate_b * total_time * bin_width)` and
//! `sigma[k] = g2[k] / sqrt(counts[k])`.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detector::TagStream;
use crate::error::{ensure_positive, invalid, Error, Result};

/// What the histogram estimates: `Auto` tags a blocked-arm measurement of
/// the source's own `g2(tau)`; `Cross` is the interferometric
/// `g2x(tau, delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMode {
    Auto,
    Cross,
}

/// Binned, normalized second-order correlation estimate.
///
/// Bins are centered on `k * bin_width` for `k in -half_bins..=half_bins`;
/// the realized half-window is `(half_bins + 1/2) * bin_width`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationHistogram {
    pub mode: CorrelationMode,
    pub bin_width: f64,
    /// Number of bins on each side of the center bin.
    pub half_bins: usize,
    /// Pair counts per bin, index `0` at `tau = -half_bins * bin_width`.
    pub counts: Vec<u64>,
    /// Effective accumulation time after the edge correction, seconds.
    pub total_time: f64,
    /// Full record time, seconds (normalizes the rates).
    pub duration: f64,
    /// Total tags seen on each channel.
    pub n_a: u64,
    pub n_b: u64,
}

impl CorrelationHistogram {
    /// Histogram with no accumulated data, mergeable with anything of the
    /// same shape.
    pub fn empty(mode: CorrelationMode, bin_width: f64, window: f64) -> Result<Self> {
        let half_bins = half_bins_for(bin_width, window)?;
        Ok(CorrelationHistogram {
            mode,
            bin_width,
            half_bins,
            counts: vec![0; 2 * half_bins + 1],
            total_time: 0.0,
            duration: 0.0,
            n_a: 0,
            n_b: 0,
        })
    }

    pub fn n_bins(&self) -> usize {
        2 * self.half_bins + 1
    }

    /// Realized half-window in seconds.
    pub fn window(&self) -> f64 {
        (self.half_bins as f64 + 0.5) * self.bin_width
    }

    /// Bin center in seconds for a bin index in `0..n_bins()`.
    pub fn tau(&self, index: usize) -> f64 {
        (index as f64 - self.half_bins as f64) * self.bin_width
    }

    /// Measured rates (counts/second) on the two channels.
    pub fn rates(&self) -> (f64, f64) {
        if self.duration > 0.0 {
            (self.n_a as f64 / self.duration, self.n_b as f64 / self.duration)
        } else {
            (0.0, 0.0)
        }
    }

    fn denominator(&self) -> f64 {
        let (rate_a, rate_b) = self.rates();
        rate_a * rate_b * self.total_time * self.bin_width
    }

    /// Normalized correlation estimate per bin.
    pub fn g2(&self) -> Vec<f64> {
        let denom = self.denominator();
        if denom <= 0.0 {
            return vec![0.0; self.n_bins()];
        }
        self.counts.iter().map(|&c| c as f64 / denom).collect()
    }

    /// Standard error per bin, `g2 / sqrt(counts)`; the single-count scale
    /// `1 / denominator` is used for empty bins.
    pub fn sigma(&self) -> Vec<f64> {
        let denom = self.denominator();
        if denom <= 0.0 {
            return vec![f64::INFINITY; self.n_bins()];
        }
        self.counts
            .iter()
            .map(|&c| if c > 0 { (c as f64).sqrt() / denom } else { 1.0 / denom })
            .collect()
    }

    /// Accumulate another histogram of identical shape. Counts and times
    /// add; rates and `g2` re-derive from the sums.
    pub fn merge(&mut self, other: &CorrelationHistogram) -> Result<()> {
        if self.mode != other.mode {
            return Err(Error::ShapeMismatch { message: "modes differ".into() });
        }
        if self.half_bins != other.half_bins || self.bin_width != other.bin_width {
            return Err(Error::ShapeMismatch {
                message: format!(
                    "bins {}x{:e} vs {}x{:e}",
                    self.n_bins(),
                    self.bin_width,
                    other.n_bins(),
                    other.bin_width
                ),
            });
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.total_time += other.total_time;
        self.duration += other.duration;
        self.n_a += other.n_a;
        self.n_b += other.n_b;
        Ok(())
    }

    /// Write `tau_s,g2,sigma,counts` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "tau_s,g2,sigma,counts")?;
        let g2 = self.g2();
        let sigma = self.sigma();
        for i in 0..self.n_bins() {
            writeln!(w, "{:e},{:e},{:e},{}", self.tau(i), g2[i], sigma[i], self.counts[i])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reconstruct a histogram from its CSV and metadata sidecar.
    pub fn read_csv(path: &Path, meta: &HistogramMetadata) -> Result<Self> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut counts = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if i == 0 {
                continue; // header
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != 4 {
                return Err(Error::Format {
                    message: format!("line {}: expected 4 columns", i + 1),
                });
            }
            let c: u64 = fields[3]
                .parse()
                .map_err(|e| Error::Format { message: format!("line {}: {e}", i + 1) })?;
            counts.push(c);
        }
        if counts.len() % 2 == 0 || counts.is_empty() {
            return Err(Error::Format {
                message: format!("expected an odd number of bins, got {}", counts.len()),
            });
        }
        let half_bins = (counts.len() - 1) / 2;
        Ok(CorrelationHistogram {
            mode: meta.mode,
            bin_width: meta.bin_width,
            half_bins,
            counts,
            total_time: meta.total_time,
            duration: meta.duration,
            n_a: meta.n_a,
            n_b: meta.n_b,
        })
    }

    /// Metadata sidecar describing this histogram.
    pub fn metadata(&self, delta: Option<f64>, config_hash: Option<String>) -> HistogramMetadata {
        let (rate_a, rate_b) = self.rates();
        HistogramMetadata {
            mode: self.mode,
            bin_width: self.bin_width,
            window: self.window(),
            rates: (rate_a, rate_b),
            total_time: self.total_time,
            duration: self.duration,
            n_a: self.n_a,
            n_b: self.n_b,
            delta,
            config_hash,
        }
    }
}

/// JSON sidecar stored next to each histogram CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramMetadata {
    pub mode: CorrelationMode,
    pub bin_width: f64,
    pub window: f64,
    pub rates: (f64, f64),
    pub total_time: f64,
    pub duration: f64,
    pub n_a: u64,
    pub n_b: u64,
    /// Interferometric delay of the run, if the mode was `Cross`.
    pub delta: Option<f64>,
    /// Hash of the generating experiment configuration.
    pub config_hash: Option<String>,
}

impl HistogramMetadata {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(BufWriter::new(file), self)
            .map_err(|e| Error::Format { message: e.to_string() })?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Format { message: e.to_string() })
    }
}

fn half_bins_for(bin_width: f64, window: f64) -> Result<usize> {
    ensure_positive("bin_width", bin_width)?;
    ensure_positive("window", window)?;
    if window < 10.0 * bin_width {
        return Err(invalid(
            "window",
            format!("must be >= 10 * bin_width = {:e}, got {window:e}", 10.0 * bin_width),
        ));
    }
    Ok((window / bin_width).round() as usize)
}

/// Cross-correlation histogram between two detector channels.
pub fn cross_correlate(
    a: &TagStream,
    b: &TagStream,
    bin_width: f64,
    window: f64,
) -> Result<CorrelationHistogram> {
    correlate(a, b, bin_width, window, CorrelationMode::Cross)
}

/// Same machinery as [`cross_correlate`], for two detectors behind the
/// splitter in blocked-arm mode; the result is tagged as a `g2`
/// measurement of the source.
pub fn autocorrelate(
    a: &TagStream,
    b: &TagStream,
    bin_width: f64,
    window: f64,
) -> Result<CorrelationHistogram> {
    correlate(a, b, bin_width, window, CorrelationMode::Auto)
}

fn correlate(
    a: &TagStream,
    b: &TagStream,
    bin_width: f64,
    window: f64,
    mode: CorrelationMode,
) -> Result<CorrelationHistogram> {
    a.validate()?;
    b.validate()?;
    let duration = a.duration;
    if (duration - b.duration).abs() > 1e-9 * duration.max(b.duration) {
        return Err(Error::DurationMismatch { a: duration, b: b.duration });
    }
    let mut hist = CorrelationHistogram::empty(mode, bin_width, window)?;
    let half_bins = hist.half_bins as i64;
    let w_eff = hist.window();
    if duration <= 2.0 * w_eff {
        return Err(invalid(
            "window",
            format!("record of {duration:e} s too short for a 2 x {w_eff:e} s edge correction"),
        ));
    }

    let t_lo = w_eff;
    let t_hi = duration - w_eff;
    let inv_width = 1.0 / bin_width;
    let tags_b = &b.tags;
    let mut lo = 0usize;
    let start = a.tags.partition_point(|&t| t < t_lo);
    for &ta in &a.tags[start..] {
        if ta > t_hi {
            break;
        }
        let lower = ta - w_eff;
        while lo < tags_b.len() && tags_b[lo] < lower {
            lo += 1;
        }
        let upper = ta + w_eff;
        for &tb in &tags_b[lo..] {
            if tb > upper {
                break;
            }
            let k = ((tb - ta) * inv_width).round() as i64;
            if k.abs() <= half_bins {
                hist.counts[(k + half_bins) as usize] += 1;
            }
        }
    }

    hist.total_time = duration - 2.0 * w_eff;
    hist.duration = duration;
    hist.n_a = a.tags.len() as u64;
    hist.n_b = b.tags.len() as u64;
    Ok(hist)
}
