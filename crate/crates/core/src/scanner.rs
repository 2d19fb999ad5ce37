//! Harmonic-oscillator plant model of a biaxial resonant scanner.
//!
//! Amplitudes are normalized so that driving an axis exactly at its resonant
//! frequency gives unit response. The true amplitude peak sits slightly below
//! resonance for finite Q and is deliberately not used as the reference.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// Resonant frequencies and quality factors of the two scanner axes.
///
/// In normalized mode `fy_res = 1` and time is measured in y-cycles, so
/// `fx_res` is the resonant frequency ratio `r`. Experiment-style configs
/// carry frequencies in Hz; designs are then scaled by `fy_res`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScannerConfig {
    pub fx_res: f64,
    pub fy_res: f64,
    pub qx: f64,
    pub qy: f64,
}

impl ScannerConfig {
    /// Normalized config: `fy_res = 1`, `fx_res = r`, same Q on both axes.
    pub fn normalized(r: f64, q: f64) -> Self {
        Self {
            fx_res: r,
            fy_res: 1.0,
            qx: q,
            qy: q,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx_res, self.fy_res, self.qx, self.qy]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(domain("scanner config contains non-finite values"));
        }
        if self.fx_res <= 0.0 || self.fy_res <= 0.0 {
            return Err(domain(format!(
                "resonant frequencies must be positive (fx_res = {}, fy_res = {})",
                self.fx_res, self.fy_res
            )));
        }
        if self.qx < 1.0 || self.qy < 1.0 {
            return Err(domain(format!(
                "quality factors must be >= 1 (qx = {}, qy = {})",
                self.qx, self.qy
            )));
        }
        Ok(())
    }

    /// Validates the stricter normalized-mode invariants.
    pub fn validate_normalized(&self) -> Result<()> {
        self.validate()?;
        if self.fy_res != 1.0 {
            return Err(domain(format!(
                "normalized mode requires fy_res = 1 (got {})",
                self.fy_res
            )));
        }
        if !(1.0..=3.0).contains(&self.fx_res) {
            return Err(domain(format!(
                "normalized mode requires fx_res in [1, 3] (got {})",
                self.fx_res
            )));
        }
        Ok(())
    }

    /// Resonant frequency ratio `fx_res / fy_res`.
    pub fn ratio(&self) -> f64 {
        self.fx_res / self.fy_res
    }

    pub fn resonance(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.fx_res,
            Axis::Y => self.fy_res,
        }
    }

    pub fn quality(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.qx,
            Axis::Y => self.qy,
        }
    }

    /// Drive-amplitude response of `axis` at frequency `f`, in (0, 1].
    pub fn transfer_amplitude(&self, axis: Axis, f: f64) -> Result<f64> {
        self.validate()?;
        if !(f.is_finite() && f > 0.0) {
            return Err(domain(format!("frequency must be positive (got {f})")));
        }
        Ok(harmonic_amplitude(f, self.resonance(axis), self.quality(axis)))
    }

    /// Ring-up / settle time `Q / (pi f_res)`, in the config's time units.
    pub fn settle_time(&self, axis: Axis) -> Result<f64> {
        self.validate()?;
        Ok(self.quality(axis) / (PI * self.resonance(axis)))
    }

    /// Full width at half maximum of the resonance peak, `f_res / Q`.
    pub fn fwhm(&self, axis: Axis) -> f64 {
        self.resonance(axis) / self.quality(axis)
    }
}

/// `1 / (Q sqrt(((f/f_r)^2 - 1)^2 + (f/(f_r Q))^2))`; equals 1 at `f = f_r`.
///
/// Callers are expected to have validated their inputs.
pub fn harmonic_amplitude(f: f64, f_res: f64, q: f64) -> f64 {
    let u = f / f_res;
    if u == 1.0 {
        return 1.0;
    }
    let detune = u * u - 1.0;
    let damping = u / q;
    1.0 / (q * (detune * detune + damping * damping).sqrt())
}

/// Phase lag of the oscillator response relative to the drive, in (-pi, 0].
/// Passes through `-pi/2` at resonance.
pub fn harmonic_phase(f: f64, f_res: f64, q: f64) -> f64 {
    let u = f / f_res;
    -(u / q).atan2(1.0 - u * u)
}

/// Frequency of the true amplitude peak, `f_r sqrt(1 - 1/(2Q^2))`.
pub fn peak_frequency(f_res: f64, q: f64) -> f64 {
    f_res * (1.0 - 1.0 / (2.0 * q * q)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(r: f64) -> ScannerConfig {
        ScannerConfig::normalized(r, 20.0)
    }

    #[test]
    fn unit_response_at_resonance() {
        for r in [1.0, 1.5, 2.42, 3.0] {
            let h = p(r).transfer_amplitude(Axis::X, r).unwrap();
            assert_abs_diff_eq!(h, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn off_resonance_values() {
        let c = p(1.5);
        let h1 = c.transfer_amplitude(Axis::X, 11.0 / 7.0).unwrap();
        assert_abs_diff_eq!(h1, 0.45, epsilon = 0.01);
        let h2 = c.transfer_amplitude(Axis::X, 41.0 / 28.0).unwrap() * c.transfer_amplitude(Axis::Y, 1.0).unwrap();
        assert_abs_diff_eq!(h2, 0.74, epsilon = 0.01);
        let dc = c.transfer_amplitude(Axis::X, 1e-9).unwrap();
        assert_abs_diff_eq!(dc, 0.05, epsilon = 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(p(1.5).transfer_amplitude(Axis::X, 0.0).is_err());
        assert!(p(1.5).transfer_amplitude(Axis::X, -1.0).is_err());
        let bad = ScannerConfig { qx: 0.5, ..p(1.5) };
        assert!(bad.transfer_amplitude(Axis::X, 1.0).is_err());
        let bad = ScannerConfig { fy_res: 0.0, ..p(1.5) };
        assert!(bad.settle_time(Axis::Y).is_err());
        assert!(ScannerConfig { fy_res: 2.0, ..p(1.5) }.validate_normalized().is_err());
        assert!(p(3.5).validate_normalized().is_err());
    }

    #[test]
    fn settle_times() {
        let khz = ScannerConfig {
            fx_res: 1000.0,
            fy_res: 1100.0,
            qx: 20.0,
            qy: 50.0,
        };
        assert_abs_diff_eq!(khz.settle_time(Axis::X).unwrap(), 6.366e-3, epsilon = 1e-5);
        assert_abs_diff_eq!(khz.settle_time(Axis::Y).unwrap(), 14.469e-3, epsilon = 1e-5);
        let unit = ScannerConfig {
            fx_res: 1.0,
            fy_res: 1.0,
            qx: PI,
            qy: PI,
        };
        assert_abs_diff_eq!(unit.settle_time(Axis::X).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn unimodal_with_bounded_peak() {
        for q in [1.0, 2.0, 20.0, 50.0] {
            let c = ScannerConfig::normalized(1.7, q);
            let fp = peak_frequency(1.7, q);
            let hp = harmonic_amplitude(fp, 1.7, q);
            let mut prev = 0.0;
            for i in 1..=4000 {
                let f = 6.0 * i as f64 / 4000.0;
                let h = c.transfer_amplitude(Axis::X, f).unwrap();
                assert!(h > 0.0 && h <= hp * (1.0 + 1e-12));
                if f <= fp {
                    assert!(h > prev, "not increasing below the peak at f = {f}, q = {q}");
                } else if f - 6.0 / 4000.0 >= fp {
                    assert!(h < prev, "not decreasing above the peak at f = {f}, q = {q}");
                }
                prev = h;
            }
        }
    }

    #[test]
    fn phase_curve() {
        assert_abs_diff_eq!(harmonic_phase(2.0, 2.0, 30.0), -PI / 2.0, epsilon = 1e-15);
        assert!(harmonic_phase(1.9, 2.0, 30.0) > -PI / 2.0);
        assert!(harmonic_phase(2.1, 2.0, 30.0) < -PI / 2.0);
    }
}
