//! Closed-form frequency and phase selection for unmodulated patterns.
//!
//! The proposed rule searches x-frequencies `k / 4m` in order of distance to
//! the resonant ratio `r` and accepts the first candidate that lands in one of
//! three good-coverage cases, keyed on `gcd(k, 4m)`:
//!
//! * `1`: the pattern repeats every `4m` (retraced every `2m`); accepted only
//!   if the near-repeat node `k n = +-1 (mod 4m)` stays close to frame edges,
//!   see [`case1_criterion`]. Phase `0`.
//! * `2`: repeats every `2m`, phase `0`.
//! * `4`: repeats every `m`, phase `pi / 2m`.
//!
//! The baseline rule only considers patterns that repeat every frame,
//! `f_x = k / m`, with the phase offset `pi / 2m`.

use std::f64::consts::PI;

use num_integer::Integer;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::frac;

pub const MIN_FRAME: u32 = 2;
pub const MAX_FRAME: u32 = 64;
/// Largest accepted detuning `|f_x - r|` for the proposed rule.
pub const SEARCH_CAP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DesignCase {
    Case1,
    Case2,
    Case3,
    Baseline,
}

impl std::fmt::Display for DesignCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DesignCase::Case1 => "Case1",
            DesignCase::Case2 => "Case2",
            DesignCase::Case3 => "Case3",
            DesignCase::Baseline => "Baseline",
        };
        f.write_str(s)
    }
}

/// Single-tone drive per axis. `fy = 1` and `phiy = 0` always.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnmodulatedDesign {
    #[serde(with = "frac")]
    pub fx: Rational64,
    #[serde(with = "frac")]
    pub fy: Rational64,
    pub phix: f64,
    pub phiy: f64,
    pub case: DesignCase,
    /// Unreduced numerator: `fx = k / 4m` (proposed) or `k / m` (baseline).
    pub k: i64,
    pub m: u32,
    /// Set when `r` sits within one frequency step of an integer; such ratios
    /// admit only far-from-resonance designs and expect a low fill-factor.
    #[serde(default)]
    pub near_integer_ratio: bool,
}

impl UnmodulatedDesign {
    /// An arbitrary single-tone pattern, outside either design rule.
    pub fn custom(fx: Rational64, phix: f64, m: u32) -> Self {
        Self {
            fx,
            fy: Rational64::from_integer(1),
            phix,
            phiy: 0.0,
            case: DesignCase::Baseline,
            k: *fx.numer(),
            m,
            near_integer_ratio: false,
        }
    }

    pub fn fx_f64(&self) -> f64 {
        frac::to_f64(&self.fx)
    }

    pub fn fy_f64(&self) -> f64 {
        frac::to_f64(&self.fy)
    }

    pub fn period(&self) -> Result<PeriodReport> {
        repeat_period(self.fx, self.fy, self.phix, self.phiy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rejection {
    /// `gcd(k, 4m) = 1` but some `k n = +-1 (mod 4m)` falls mid-frame.
    Case1Criterion,
    /// `gcd(k, 4m)` outside `{1, 2, 4}`.
    Gcd(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectedCandidate {
    pub k: i64,
    pub reason: Rejection,
}

fn check_frame(m: u32) -> Result<()> {
    if !(MIN_FRAME..=MAX_FRAME).contains(&m) {
        return Err(domain(format!(
            "frame time m must be in [{MIN_FRAME}, {MAX_FRAME}] (got {m})"
        )));
    }
    Ok(())
}

fn check_ratio(r: f64) -> Result<()> {
    if !(r.is_finite() && (1.0 - 1e-9..=3.0 + 1e-9).contains(&r)) {
        return Err(domain(format!("resonant ratio r must be in [1, 3] (got {r})")));
    }
    Ok(())
}

/// `k` ordered by `|k - target|`, smaller `k` first on ties.
fn closest_first(target: f64, radius: f64) -> Vec<i64> {
    let lo = ((target - radius).ceil() as i64).max(1);
    let hi = (target + radius).floor() as i64;
    let mut ks: Vec<i64> = (lo..=hi).collect();
    // quantized so that float noise in target cannot split exact ties
    ks.sort_by_key(|&k| (((k as f64 - target).abs() * 1e9).round() as i64, k));
    ks
}

/// Line-4 check: `(k n) mod 4m` avoids `{1, 4m - 1}` for every
/// `n` in `floor(m/2) ..= 3 floor(m/2)`. Requires `gcd(k, 4m) = 1`.
pub fn case1_criterion(k: i64, m: u32) -> Result<bool> {
    check_frame(m)?;
    let q = 4 * m as i64;
    if k <= 0 || k.gcd(&q) != 1 {
        return Err(domain(format!(
            "case1 criterion needs gcd(k, 4m) = 1 (k = {k}, m = {m})"
        )));
    }
    let half = (m / 2) as i64;
    Ok((half..=3 * half).all(|n| {
        let res = (k * n).rem_euclid(q);
        res != 1 && res != q - 1
    }))
}

/// Proposed design rule. Returns the closest-to-resonance `k / 4m` that
/// satisfies one of the three coverage cases.
pub fn design_unmodulated(r: f64, m: u32) -> Result<UnmodulatedDesign> {
    design_unmodulated_traced(r, m).map(|(d, _)| d)
}

/// As [`design_unmodulated`], also returning every closer candidate that was
/// rejected, in search order.
pub fn design_unmodulated_traced(r: f64, m: u32) -> Result<(UnmodulatedDesign, Vec<RejectedCandidate>)> {
    check_ratio(r)?;
    check_frame(m)?;
    let q = 4 * m as i64;
    let target = q as f64 * r;
    let mut rejected = Vec::new();
    for k in closest_first(target, SEARCH_CAP * q as f64 + 1e-9) {
        let (case, phix) = match k.gcd(&q) {
            1 => {
                if case1_criterion(k, m)? {
                    (DesignCase::Case1, 0.0)
                } else {
                    rejected.push(RejectedCandidate {
                        k,
                        reason: Rejection::Case1Criterion,
                    });
                    continue;
                }
            }
            2 => (DesignCase::Case2, 0.0),
            4 => (DesignCase::Case3, PI / (2.0 * m as f64)),
            g => {
                rejected.push(RejectedCandidate {
                    k,
                    reason: Rejection::Gcd(g),
                });
                continue;
            }
        };
        let design = UnmodulatedDesign {
            fx: Rational64::new(k, q),
            fy: Rational64::from_integer(1),
            phix,
            phiy: 0.0,
            case,
            k,
            m,
            near_integer_ratio: (r - r.round()).abs() <= 1.0 / q as f64,
        };
        return Ok((design, rejected));
    }
    Err(Error::NoFeasibleDesign { r, m })
}

/// Repeating-pattern baseline: `f_x = k / m` with `gcd(k, m) = 1` closest to
/// `r`, ties broken toward the larger `k`, and `phi_x = pi / 2m`.
pub fn baseline_repeating_design(r: f64, m: u32) -> Result<UnmodulatedDesign> {
    check_ratio(r)?;
    check_frame(m)?;
    let mi = m as i64;
    let target = mi as f64 * r;
    // a unit step in k always reaches a coprime within m of the target
    let best = closest_first(target, mi as f64 + 1.0)
        .into_iter()
        .filter(|k| k.gcd(&mi) == 1)
        .min_by_key(|&k| (((k as f64 - target).abs() * 1e9).round() as i64, -k))
        .ok_or(Error::NoFeasibleDesign { r, m })?;
    Ok(UnmodulatedDesign {
        fx: Rational64::new(best, mi),
        fy: Rational64::from_integer(1),
        phix: PI / (2.0 * m as f64),
        phiy: 0.0,
        case: DesignCase::Baseline,
        k: best,
        m,
        near_integer_ratio: (r - r.round()).abs() <= 1.0 / mi as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodReport {
    /// Least `t > 0` with both `fx t` and `fy t` integer.
    #[serde(with = "frac")]
    pub signal_period: Rational64,
    /// Time to trace the full point set once. Half the signal period when the
    /// trajectory has a turning point where both phases are multiples of
    /// `pi`, after which the path is retraced backwards.
    #[serde(with = "frac")]
    pub coverage_period: Rational64,
}

fn near_integer(v: f64) -> bool {
    (v - v.round()).abs() < 1e-9
}

pub fn repeat_period(fx: Rational64, fy: Rational64, phix: f64, phiy: f64) -> Result<PeriodReport> {
    if *fx.numer() <= 0 || *fy.numer() <= 0 {
        return Err(domain("repeat_period needs positive frequencies"));
    }
    // {t : f t in Z} is the lattice (1/f) Z; intersect the two lattices
    let px = fx.recip();
    let py = fy.recip();
    let signal = Rational64::new(px.numer().lcm(py.numer()), px.denom().gcd(py.denom()));

    // turning points: 2 fy c + phiy/pi in Z and 2 fx c + phix/pi in Z
    let fxf = frac::to_f64(&fx);
    let fyf = frac::to_f64(&fy);
    let ax = phix / PI;
    let ay = phiy / PI;
    let p = frac::to_f64(&signal);
    let j_lo = ay.floor() as i64 - 1;
    let j_hi = (2.0 * fyf * p + ay).ceil() as i64 + 1;
    let retraced = (j_lo..=j_hi).any(|j| {
        let c = (j as f64 - ay) / (2.0 * fyf);
        (-1e-12..p).contains(&c) && near_integer(2.0 * fxf * c + ax)
    });
    let coverage = if retraced { signal / 2 } else { signal };
    Ok(PeriodReport {
        signal_period: signal,
        coverage_period: coverage,
    })
}
