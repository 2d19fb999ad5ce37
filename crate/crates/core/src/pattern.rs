//! Time-sampled scan trajectories.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::design::UnmodulatedDesign;
use crate::error::{domain, Result};
use crate::scanner::{Axis, ScannerConfig};

/// Uniformly sampled `(t, x, y)` sequence. Time is in y-cycles, positions are
/// relative to the on-resonance amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPattern {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Frame time `m`.
    pub frame_len: u32,
    /// Number of frames spanned by the samples.
    pub frames: u32,
}

impl SampledPattern {
    pub fn new(t: Vec<f64>, x: Vec<f64>, y: Vec<f64>, frame_len: u32, frames: u32) -> Result<Self> {
        let p = Self {
            t,
            x,
            y,
            frame_len,
            frames,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.t.len();
        if n < 2 || self.x.len() != n || self.y.len() != n {
            return Err(domain(format!(
                "pattern arrays must have equal length >= 2 (t: {}, x: {}, y: {})",
                n,
                self.x.len(),
                self.y.len()
            )));
        }
        let all_finite = self.t.iter().chain(&self.x).chain(&self.y).all(|v| v.is_finite());
        if !all_finite {
            return Err(domain("pattern contains non-finite values"));
        }
        let dt = self.t[1] - self.t[0];
        if dt <= 0.0 {
            return Err(domain("timestamps must be strictly increasing"));
        }
        let tol = 1e-9 * dt.max(self.t[n - 1].abs());
        for w in self.t.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > tol {
                return Err(domain("timestamps must be uniformly spaced"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.iter().copied().zip(self.y.iter().copied())
    }
}

/// `n` sample times uniform over `[start, start + span)`.
pub fn uniform_times(start: f64, span: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| start + span * i as f64 / n as f64).collect()
}

/// Single-tone motion per axis with explicit amplitudes.
#[allow(clippy::too_many_arguments)]
pub fn sample_tones(
    (fx, phix, ax): (f64, f64, f64),
    (fy, phiy, ay): (f64, f64, f64),
    frame_len: u32,
    frame_index: u32,
    n: usize,
) -> Result<SampledPattern> {
    if n < 2 {
        return Err(domain(format!("need at least 2 samples (got {n})")));
    }
    let m = frame_len as f64;
    let t = uniform_times(frame_index as f64 * m, m, n);
    let x = t.iter().map(|&t| ax * (2.0 * PI * fx * t + phix).cos()).collect();
    let y = t.iter().map(|&t| ay * (2.0 * PI * fy * t + phiy).cos()).collect();
    SampledPattern::new(t, x, y, frame_len, 1)
}

/// Samples one frame of an unmodulated design. Each axis is scaled by its
/// transfer amplitude at the drive frequency; design frequencies are in units
/// of `fy_res`.
pub fn sample_unmodulated(
    design: &UnmodulatedDesign,
    config: &ScannerConfig,
    frame_index: u32,
    n: usize,
) -> Result<SampledPattern> {
    let fx = design.fx_f64();
    let fy = design.fy_f64();
    let ax = config.transfer_amplitude(Axis::X, fx * config.fy_res)?;
    let ay = config.transfer_amplitude(Axis::Y, fy * config.fy_res)?;
    sample_tones((fx, design.phix, ax), (fy, design.phiy, ay), design.m, frame_index, n)
}

/// Same trajectory with both amplitudes forced to 1, the unbounded-actuation
/// reference used when comparing RoI densities.
pub fn sample_unmodulated_unit(design: &UnmodulatedDesign, start: f64, span: f64, n: usize) -> Result<SampledPattern> {
    if n < 2 {
        return Err(domain(format!("need at least 2 samples (got {n})")));
    }
    let (fx, fy) = (design.fx_f64(), design.fy_f64());
    let t = uniform_times(start, span, n);
    let x = t.iter().map(|&t| (2.0 * PI * fx * t + design.phix).cos()).collect();
    let y = t.iter().map(|&t| (2.0 * PI * fy * t + design.phiy).cos()).collect();
    let frames = (span / design.m as f64).round().max(1.0) as u32;
    SampledPattern::new(t, x, y, design.m, frames)
}
