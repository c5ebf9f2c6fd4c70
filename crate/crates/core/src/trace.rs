//! Sampled field and intensity records.
//!
//! A [`FieldTrace`] holds one realization of the complex optical envelope
//! `a(t)` on a uniform grid, normalized to unit mean intensity; the photon
//! rate lives separately in `flux` so statistics stay decoupled from the
//! detector scale. [`IntensityTrace`] is the real-valued counterpart produced
//! by the interferometer.
//!
//! Both types round-trip through a little-endian binary format:
//! magic (`PSFT` for fields, `PSIT` for intensities), `version: u32`,
//! `dt: f64`, `flux: f64`, `n: u64`, then `n` payload records (`re, im`
//! pairs for fields, single `f64` for intensities).

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{ensure_positive, invalid, Error, Result};

pub const FIELD_MAGIC: &[u8; 4] = b"PSFT";
pub const INTENSITY_MAGIC: &[u8; 4] = b"PSIT";
pub const FORMAT_VERSION: u32 = 1;

/// One realization of the complex field envelope on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTrace {
    /// Complex amplitude samples; `|a|^2` is instantaneous intensity in
    /// units of the mean.
    pub samples: Vec<Complex64>,
    /// Sample interval in seconds.
    pub dt: f64,
    /// Mean photon rate in photons/second carried by the trace.
    pub flux: f64,
}

impl FieldTrace {
    pub fn new(samples: Vec<Complex64>, dt: f64, flux: f64) -> Result<Self> {
        ensure_positive("dt", dt)?;
        ensure_positive("flux", flux)?;
        if samples.is_empty() {
            return Err(invalid("samples", "trace must not be empty"));
        }
        Ok(FieldTrace { samples, dt, flux })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Record length in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    /// Instantaneous intensity `|a(t)|^2`, same grid.
    pub fn intensity(&self) -> IntensityTrace {
        IntensityTrace {
            samples: self.samples.iter().map(|a| a.norm_sqr()).collect(),
            dt: self.dt,
            flux: self.flux,
        }
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        write_header(&mut w, FIELD_MAGIC, self.dt, self.flux, self.samples.len())?;
        for a in &self.samples {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(std::fs::File::open(path)?);
        let (dt, flux, n) = read_header(&mut r, FIELD_MAGIC)?;
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            samples.push(Complex64::new(re, im));
        }
        FieldTrace::new(samples, dt, flux)
    }

    /// Debug export with columns `t,re,im`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "t,re,im")?;
        for (i, a) in self.samples.iter().enumerate() {
            writeln!(w, "{:e},{:e},{:e}", i as f64 * self.dt, a.re, a.im)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Real-valued intensity record, e.g. one interferometer output port.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityTrace {
    /// Intensity samples in units of the source mean intensity.
    pub samples: Vec<f64>,
    /// Sample interval in seconds.
    pub dt: f64,
    /// Photon rate corresponding to unit intensity, photons/second.
    pub flux: f64,
}

impl IntensityTrace {
    pub fn new(samples: Vec<f64>, dt: f64, flux: f64) -> Result<Self> {
        ensure_positive("dt", dt)?;
        ensure_positive("flux", flux)?;
        if samples.is_empty() {
            return Err(invalid("samples", "trace must not be empty"));
        }
        Ok(IntensityTrace { samples, dt, flux })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        write_header(&mut w, INTENSITY_MAGIC, self.dt, self.flux, self.samples.len())?;
        for v in &self.samples {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(std::fs::File::open(path)?);
        let (dt, flux, n) = read_header(&mut r, INTENSITY_MAGIC)?;
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            samples.push(read_f64(&mut r)?);
        }
        IntensityTrace::new(samples, dt, flux)
    }
}

fn write_header<W: Write>(w: &mut W, magic: &[u8; 4], dt: f64, flux: f64, n: usize) -> Result<()> {
    w.write_all(magic)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&dt.to_le_bytes())?;
    w.write_all(&flux.to_le_bytes())?;
    w.write_all(&(n as u64).to_le_bytes())?;
    Ok(())
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<(f64, f64, usize)> {
    let mut got = [0u8; 4];
    r.read_exact(&mut got)?;
    if &got != magic {
        return Err(Error::Format {
            message: format!("bad magic {:?}, expected {:?}", got, magic),
        });
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format {
            message: format!("unsupported version {version}"),
        });
    }
    let dt = read_f64(r)?;
    let flux = read_f64(r)?;
    let n = read_u64(r)? as usize;
    Ok((dt, flux, n))
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_trace_rejects_empty_and_bad_scalars() {
        assert!(FieldTrace::new(vec![], 1e-12, 1e6).is_err());
        assert!(FieldTrace::new(vec![Complex64::new(1.0, 0.0)], 0.0, 1e6).is_err());
        assert!(FieldTrace::new(vec![Complex64::new(1.0, 0.0)], 1e-12, -1.0).is_err());
    }

    #[test]
    fn field_binary_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.psft");
        let trace = FieldTrace::new(
            vec![Complex64::new(0.5, -1.25), Complex64::new(2.0, 3.5)],
            2.5e-12,
            1e9,
        )
        .unwrap();
        trace.write_binary(&path).unwrap();
        let back = FieldTrace::read_binary(&path).unwrap();
        assert_eq!(trace, back);
    }

    #[test]
    fn intensity_binary_roundtrip_and_magic_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.psit");
        let trace = IntensityTrace::new(vec![0.0, 1.5, 0.25], 1e-12, 5e8).unwrap();
        trace.write_binary(&path).unwrap();
        let back = IntensityTrace::read_binary(&path).unwrap();
        assert_eq!(trace, back);
        // a field reader must reject an intensity file
        assert!(FieldTrace::read_binary(&path).is_err());
    }
}
