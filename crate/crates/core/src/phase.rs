//! Scanner phase recovery from in-phase/quadrature reads, and a frame-rate
//! drift-and-correction simulator.

use std::f64::consts::PI;

use nalgebra::{Matrix6, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scanner::harmonic_phase;

/// Systems with a larger 2-norm condition number are rejected.
pub const MAX_CONDITION: f64 = 1e8;

/// Maps an angle onto `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Same as [`wrap_angle`] in degrees, onto `(-180, 180]`.
pub fn wrap_degrees(a: f64) -> f64 {
    let w = a.rem_euclid(360.0);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraturePair {
    pub x: f64,
    pub xq: f64,
}

/// Four-quadrant phase of a signal sample and its 90 degree shifted copy.
pub fn quadrature_phase(pair: QuadraturePair) -> Result<f64> {
    if !(pair.x.is_finite() && pair.xq.is_finite()) {
        return Err(domain("quadrature pair must be finite"));
    }
    if pair.x == 0.0 && pair.xq == 0.0 {
        return Err(Error::UndefinedPhase);
    }
    let a = pair.xq.atan2(pair.x);
    Ok(if a == -PI { PI } else { a })
}

/// Three tones `alpha_i cos(omega_i t + phi_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultitoneState {
    pub omegas: [f64; 3],
    pub amps: [f64; 3],
    pub phases: [f64; 3],
}

impl MultitoneState {
    pub fn validate(&self) -> Result<()> {
        let all = self.omegas.iter().chain(&self.amps).chain(&self.phases);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(domain("multitone state must be finite"));
        }
        if self.amps.iter().any(|&a| a < 0.0) {
            return Err(domain("multitone amplitudes must be nonnegative"));
        }
        check_distinct(&self.omegas)
    }

    /// Signal and its quadrature copy at time `t`.
    pub fn sample(&self, t: f64) -> QuadraturePair {
        let mut pair = QuadraturePair { x: 0.0, xq: 0.0 };
        for i in 0..3 {
            let arg = self.omegas[i] * t + self.phases[i];
            pair.x += self.amps[i] * arg.cos();
            pair.xq += self.amps[i] * arg.sin();
        }
        pair
    }
}

/// Reads at `t = 0, T/2, T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultitoneSamples {
    pub x: [f64; 3],
    pub xq: [f64; 3],
}

impl MultitoneSamples {
    pub fn from_state(state: &MultitoneState, frame_time: f64) -> Self {
        let mut s = Self {
            x: [0.0; 3],
            xq: [0.0; 3],
        };
        for (k, t) in sample_times(frame_time).into_iter().enumerate() {
            let p = state.sample(t);
            s.x[k] = p.x;
            s.xq[k] = p.xq;
        }
        s
    }
}

pub fn sample_times(frame_time: f64) -> [f64; 3] {
    [0.0, frame_time / 2.0, frame_time]
}

fn check_distinct(omegas: &[f64; 3]) -> Result<()> {
    for i in 0..3 {
        for j in i + 1..3 {
            if omegas[i] == omegas[j] {
                return Err(domain(format!("tone frequencies {i} and {j} coincide ({})", omegas[i])));
            }
        }
    }
    Ok(())
}

/// Rows are `x(t_k)` then `xq(t_k)`; columns are `alpha_i cos(phi_i)` then
/// `alpha_i sin(phi_i)`.
fn system_matrix(omegas: &[f64; 3], frame_time: f64) -> Matrix6<f64> {
    let mut a = Matrix6::zeros();
    for (k, t) in sample_times(frame_time).into_iter().enumerate() {
        for (i, w) in omegas.iter().enumerate() {
            let (s, c) = (w * t).sin_cos();
            a[(k, i)] = c;
            a[(k, i + 3)] = -s;
            a[(k + 3, i)] = s;
            a[(k + 3, i + 3)] = c;
        }
    }
    a
}

/// The pair whose sampling phasors `exp(i omega T / 2)` lie closest, which
/// is the pair that aliases when the system is singular.
fn closest_pair(omegas: &[f64; 3], frame_time: f64) -> (usize, usize, f64) {
    let mut best = (0, 1, f64::INFINITY);
    for i in 0..3 {
        for j in i + 1..3 {
            let gap = wrap_angle((omegas[i] - omegas[j]) * frame_time / 2.0).abs();
            if gap < best.2 {
                best = (i, j, gap);
            }
        }
    }
    best
}

/// Recovers amplitudes and phases of three tones from reads at
/// `{0, T/2, T}`.
pub fn solve_multitone(samples: &MultitoneSamples, omegas: [f64; 3], frame_time: f64) -> Result<MultitoneState> {
    if !(frame_time > 0.0 && frame_time.is_finite()) {
        return Err(domain(format!("frame time must be positive (got {frame_time})")));
    }
    if omegas
        .iter()
        .chain(&samples.x)
        .chain(&samples.xq)
        .any(|v| !v.is_finite())
    {
        return Err(domain("samples and frequencies must be finite"));
    }
    check_distinct(&omegas)?;
    let a = system_matrix(&omegas, frame_time);
    let sv = a.singular_values();
    let (hi, lo) = (sv.max(), sv.min());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        let (i, j, gap) = closest_pair(&omegas, frame_time);
        return Err(Error::IllConditioned {
            condition,
            detail: format!(
                "tones {i} and {j} alias over the sampling comb: (omega_{i} - omega_{j}) T / 2 = {:.6} rad, \
                 {gap:.3e} rad from a multiple of 2 pi",
                (omegas[i] - omegas[j]) * frame_time / 2.0
            ),
        });
    }
    let b = Vector6::new(
        samples.x[0],
        samples.x[1],
        samples.x[2],
        samples.xq[0],
        samples.xq[1],
        samples.xq[2],
    );
    let u = a.lu().solve(&b).ok_or_else(|| Error::IllConditioned {
        condition,
        detail: "LU factorization failed".into(),
    })?;
    let mut state = MultitoneState {
        omegas,
        amps: [0.0; 3],
        phases: [0.0; 3],
    };
    for i in 0..3 {
        let (c, s) = (u[i], u[i + 3]);
        state.amps[i] = c.hypot(s);
        state.phases[i] = if c == 0.0 && s == 0.0 {
            0.0
        } else {
            wrap_angle(s.atan2(c))
        };
    }
    Ok(state)
}

/// Offset of the resonance from its nominal value, in Hz, over time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Drift {
    None,
    Linear { rate_hz_per_s: f64 },
    Sine { amplitude_hz: f64, period_s: f64 },
}

impl Drift {
    pub fn offset(&self, t: f64) -> f64 {
        match *self {
            Drift::None => 0.0,
            Drift::Linear { rate_hz_per_s } => rate_hz_per_s * t,
            Drift::Sine { amplitude_hz, period_s } => amplitude_hz * (2.0 * PI * t / period_s).sin(),
        }
    }
}

/// Driven oscillator whose resonance drifts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plant {
    pub resonance_hz: f64,
    pub q: f64,
}

impl Plant {
    /// Phase change, in degrees, at drive `f` when the resonance has moved
    /// by `offset` Hz.
    pub fn phase_shift_deg(&self, f: f64, offset: f64) -> f64 {
        (harmonic_phase(f, self.resonance_hz + offset, self.q) - harmonic_phase(f, self.resonance_hz, self.q))
            .to_degrees()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftScenario {
    pub drift: Drift,
    pub plant: Plant,
    pub frame_time_s: f64,
    pub control_enabled: bool,
    /// Standard deviation of each phase read, degrees.
    pub noise_deg: f64,
}

impl DriftScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_time_s > 0.0 && self.frame_time_s.is_finite()) {
            return Err(domain("frame_time_s must be positive"));
        }
        if !(self.noise_deg >= 0.0 && self.noise_deg.is_finite()) {
            return Err(domain("noise_deg must be nonnegative"));
        }
        if !(self.plant.resonance_hz > 0.0 && self.plant.q >= 1.0) {
            return Err(domain("plant needs a positive resonance and q >= 1"));
        }
        match self.drift {
            Drift::Sine { period_s, .. } if !(period_s.is_finite() && period_s > 0.0) => {
                Err(domain("sine drift needs a positive period"))
            }
            _ => Ok(()),
        }
    }
}

/// Linear drift rate whose open-loop phase change reaches `target_deg` after
/// `duration_s` at drive `f`. Found by bisection on the plant phase curve,
/// within one linewidth of the resonance.
pub fn calibrated_linear_drift(plant: &Plant, f: f64, target_deg: f64, duration_s: f64) -> Result<Drift> {
    if !(target_deg > 0.0 && duration_s > 0.0) {
        return Err(domain("calibration needs a positive target and duration"));
    }
    let shift = |d: f64| plant.phase_shift_deg(f, d).abs();
    let mut hi = plant.resonance_hz / plant.q;
    if shift(hi) < target_deg {
        return Err(domain(format!(
            "a {target_deg} degree shift needs more than one linewidth of drift"
        )));
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if shift(mid) < target_deg {
            lo = mid
        } else {
            hi = mid
        }
    }
    Ok(Drift::Linear {
        rate_hz_per_s: 0.5 * (lo + hi) / duration_s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftRecord {
    /// Frame start, seconds.
    pub t: f64,
    /// Phase error held through the frame, after any correction.
    pub phase_error_deg: f64,
    /// Correction applied at this frame start, degrees.
    pub correction_deg: f64,
    pub corrected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSummary {
    pub frames: usize,
    pub max_abs_error_deg: f64,
    pub std_error_deg: f64,
    pub mean_error_deg: f64,
}

pub fn summarize(trace: &[DriftRecord]) -> DriftSummary {
    let n = trace.len().max(1) as f64;
    let mean = trace.iter().map(|r| r.phase_error_deg).sum::<f64>() / n;
    let var = trace.iter().map(|r| (r.phase_error_deg - mean).powi(2)).sum::<f64>() / n;
    DriftSummary {
        frames: trace.len(),
        max_abs_error_deg: trace.iter().fold(0.0, |m, r| m.max(r.phase_error_deg.abs())),
        std_error_deg: var.sqrt(),
        mean_error_deg: mean,
    }
}

/// One record per frame. The plant phase follows the static oscillator
/// phase curve at the drifted resonance; with control on, each frame start
/// reads the current error with Gaussian noise and subtracts the reading.
pub fn simulate_drift_control(
    scenario: &DriftScenario,
    drive_hz: f64,
    duration_s: f64,
    seed: u64,
) -> Result<Vec<DriftRecord>> {
    scenario.validate()?;
    if !(drive_hz > 0.0 && drive_hz.is_finite()) {
        return Err(domain("drive frequency must be positive"));
    }
    if duration_s.is_nan() || duration_s < scenario.frame_time_s {
        return Err(domain(format!(
            "duration {duration_s} s is shorter than one frame ({} s)",
            scenario.frame_time_s
        )));
    }
    let frames = (duration_s / scenario.frame_time_s).floor() as usize;
    let noise = Normal::new(0.0, scenario.noise_deg).map_err(|e| domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut applied = 0.0;
    let mut trace = Vec::with_capacity(frames);
    for k in 0..frames {
        let t = k as f64 * scenario.frame_time_s;
        let plant = scenario.plant.phase_shift_deg(drive_hz, scenario.drift.offset(t));
        let mut correction = 0.0;
        if scenario.control_enabled {
            let reading = wrap_degrees(plant + applied) + rng.sample(noise);
            correction = -reading;
            applied = wrap_degrees(applied + correction);
        }
        trace.push(DriftRecord {
            t,
            phase_error_deg: wrap_degrees(plant + applied),
            correction_deg: correction,
            corrected: correction != 0.0,
        });
    }
    Ok(trace)
}
