use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::design::UnmodulatedDesign;
use crate::error::{Error, Result};
use crate::pattern::{uniform_times, SampledPattern};
use crate::scanner::{Axis, ScannerConfig};

pub const MAX_TONES: usize = 5;
const FEASIBILITY_SLACK: f64 = 1e-9;

/// Tone offsets around resonance for the five-tone set.
pub const FIVE_TONES: [f64; 5] = [6.0 / 7.0, 13.0 / 14.0, 1.0, 15.0 / 14.0, 8.0 / 7.0];
/// Tone offsets for the three-tone set.
pub const THREE_TONES: [f64; 3] = [13.0 / 14.0, 1.0, 15.0 / 14.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constraint {
    /// `sqrt(sum a^2 + g^2) <= 1` per axis.
    #[default]
    Rms,
    /// `sum sqrt(a^2 + g^2) <= 1` per axis.
    Absolute,
}

/// Multi-tone drive coefficients. Frequencies are in units of the y-axis
/// resonance and time in y-cycles; each axis moves as
/// `sum_n H(f_n) (c_n cos(2 pi f_n t) + s_n sin(2 pi f_n t))` over `[0, l m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulatedParams {
    pub x_freqs: Vec<f64>,
    pub y_freqs: Vec<f64>,
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub delta: Vec<f64>,
    pub l: u32,
    pub m: u32,
    pub config: ScannerConfig,
    #[serde(default)]
    pub constraint: Constraint,
}

/// Frequencies `n / (l m)` for `n` in `n1..=n2`.
pub fn tones_from_indices(n1: u32, n2: u32, l: u32, m: u32) -> Vec<f64> {
    (n1..=n2).map(|n| n as f64 / (l * m) as f64).collect()
}

/// `offsets * f_res` for each offset.
pub fn tones_around(f_res: f64, offsets: &[f64]) -> Vec<f64> {
    offsets.iter().map(|c| c * f_res).collect()
}

/// Norm of one axis under the given constraint.
pub fn axis_norm(cos: &[f64], sin: &[f64], constraint: Constraint) -> f64 {
    match constraint {
        Constraint::Rms => cos.iter().chain(sin).map(|v| v * v).sum::<f64>().sqrt(),
        Constraint::Absolute => cos.iter().zip(sin).map(|(a, b)| a.hypot(*b)).sum(),
    }
}

impl ModulatedParams {
    /// All coefficients zero.
    pub fn zeros(x_freqs: Vec<f64>, y_freqs: Vec<f64>, l: u32, m: u32, config: ScannerConfig) -> Self {
        let (nx, ny) = (x_freqs.len(), y_freqs.len());
        Self {
            x_freqs,
            y_freqs,
            alpha: vec![0.0; nx],
            gamma: vec![0.0; nx],
            beta: vec![0.0; ny],
            delta: vec![0.0; ny],
            l,
            m,
            config,
            constraint: Constraint::Rms,
        }
    }

    /// Tone `i` set to `amp cos(2 pi f t + phase)`.
    pub fn set_tone(&mut self, axis: Axis, i: usize, amp: f64, phase: f64) {
        let (c, s) = match axis {
            Axis::X => (&mut self.alpha, &mut self.gamma),
            Axis::Y => (&mut self.beta, &mut self.delta),
        };
        c[i] = amp * phase.cos();
        s[i] = -amp * phase.sin();
    }

    /// Amplitude and phase of each tone, inverse of [`Self::set_tone`].
    pub fn tones(&self, axis: Axis) -> Vec<(f64, f64)> {
        let (c, s) = self.axis_coeffs(axis);
        c.iter().zip(s).map(|(a, g)| (a.hypot(*g), (-g).atan2(*a))).collect()
    }

    /// Single-tone drive reproducing an unmodulated design. The design's
    /// frequencies must appear in the tone sets.
    pub fn from_design(
        design: &UnmodulatedDesign,
        x_freqs: Vec<f64>,
        y_freqs: Vec<f64>,
        l: u32,
        config: ScannerConfig,
    ) -> Result<Self> {
        let find = |freqs: &[f64], f: f64, axis: &str| {
            freqs
                .iter()
                .position(|&g| (g - f).abs() < 1e-12)
                .ok_or_else(|| Error::InvalidParams(format!("{axis} tone set does not contain {f}")))
        };
        let ix = find(&x_freqs, design.fx_f64(), "x")?;
        let iy = find(&y_freqs, design.fy_f64(), "y")?;
        let mut p = Self::zeros(x_freqs, y_freqs, l, design.m, config);
        p.set_tone(Axis::X, ix, 1.0, design.phix);
        p.set_tone(Axis::Y, iy, 1.0, design.phiy);
        p.validate()?;
        Ok(p)
    }

    /// Gaussian coefficients scaled onto the unit constraint surface, per
    /// axis. Deterministic in `seed`.
    pub fn random(x_freqs: Vec<f64>, y_freqs: Vec<f64>, l: u32, m: u32, config: ScannerConfig, seed: u64) -> Self {
        let mut p = Self::zeros(x_freqs, y_freqs, l, m, config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in p.alpha.iter_mut().chain(p.gamma.iter_mut()) {
            *v = rng.sample(StandardNormal);
        }
        for v in p.beta.iter_mut().chain(p.delta.iter_mut()) {
            *v = rng.sample(StandardNormal);
        }
        for axis in [Axis::X, Axis::Y] {
            let n = p.norm(axis);
            if n > 0.0 {
                let (c, s) = p.axis_coeffs_mut(axis);
                c.iter_mut().chain(s.iter_mut()).for_each(|v| *v /= n);
            }
        }
        p
    }

    pub fn axis_coeffs(&self, axis: Axis) -> (&[f64], &[f64]) {
        match axis {
            Axis::X => (&self.alpha, &self.gamma),
            Axis::Y => (&self.beta, &self.delta),
        }
    }

    fn axis_coeffs_mut(&mut self, axis: Axis) -> (&mut Vec<f64>, &mut Vec<f64>) {
        match axis {
            Axis::X => (&mut self.alpha, &mut self.gamma),
            Axis::Y => (&mut self.beta, &mut self.delta),
        }
    }

    pub fn freqs(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::X => &self.x_freqs,
            Axis::Y => &self.y_freqs,
        }
    }

    /// `[cos..., sin...]` for one axis.
    pub fn stacked(&self, axis: Axis) -> Vec<f64> {
        let (c, s) = self.axis_coeffs(axis);
        c.iter().chain(s).copied().collect()
    }

    /// Inverse of [`Self::stacked`].
    pub fn set_stacked(&mut self, axis: Axis, v: &[f64]) {
        let (c, s) = self.axis_coeffs_mut(axis);
        let n = c.len();
        assert_eq!(v.len(), 2 * n, "stacked coefficient length mismatch");
        c.copy_from_slice(&v[..n]);
        s.copy_from_slice(&v[n..]);
    }

    pub fn norm(&self, axis: Axis) -> f64 {
        let (c, s) = self.axis_coeffs(axis);
        axis_norm(c, s, self.constraint)
    }

    /// Length of the sampled window, `l m`.
    pub fn window(&self) -> f64 {
        (self.l * self.m) as f64
    }

    /// Structural checks only; the amplitude constraint is checked by
    /// [`Self::validate`].
    pub fn validate_shape(&self) -> Result<()> {
        self.config.validate()?;
        if self.l == 0 || self.m == 0 {
            return Err(Error::InvalidParams("l and m must be positive".into()));
        }
        for (axis, f, c, s) in [
            ("x", &self.x_freqs, &self.alpha, &self.gamma),
            ("y", &self.y_freqs, &self.beta, &self.delta),
        ] {
            if f.is_empty() || f.len() > MAX_TONES {
                return Err(Error::InvalidParams(format!(
                    "{axis} axis needs 1..={MAX_TONES} tones (got {})",
                    f.len()
                )));
            }
            if c.len() != f.len() || s.len() != f.len() {
                return Err(Error::InvalidParams(format!(
                    "{axis} coefficient arrays must match its {} tones",
                    f.len()
                )));
            }
            if f.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidParams(format!(
                    "{axis} tone frequencies must be positive"
                )));
            }
            if c.iter().chain(s.iter()).any(|v| !v.is_finite()) {
                return Err(Error::InvalidParams(format!("{axis} coefficients must be finite")));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_shape()?;
        for (axis, name) in [(Axis::X, "x"), (Axis::Y, "y")] {
            let n = self.norm(axis);
            if n > 1.0 + FEASIBILITY_SLACK {
                return Err(Error::InvalidParams(format!(
                    "{name} coefficients violate the amplitude constraint (norm {n})"
                )));
            }
        }
        Ok(())
    }

    /// Euclidean projection of each axis onto its constraint ball.
    pub fn project(&mut self) {
        let constraint = self.constraint;
        for axis in [Axis::X, Axis::Y] {
            let (c, s) = self.axis_coeffs_mut(axis);
            match constraint {
                Constraint::Rms => project_l2(c, s),
                Constraint::Absolute => project_group_l1(c, s),
            }
        }
    }

    /// Synthesis matrix for one axis: `n x 2k`, row-major, columns
    /// `H(f) cos`, then `H(f) sin`.
    pub fn basis(&self, axis: Axis, n: usize) -> Result<Basis> {
        let freqs = self.freqs(axis);
        let gains = freqs
            .iter()
            .map(|&f| self.config.transfer_amplitude(axis, f * self.config.fy_res))
            .collect::<Result<Vec<_>>>()?;
        let k = freqs.len();
        let t = uniform_times(0.0, self.window(), n);
        let mut data = vec![0.0; n * 2 * k];
        for (row, &ti) in t.iter().enumerate() {
            for (j, (&f, &h)) in freqs.iter().zip(&gains).enumerate() {
                let (s, c) = (2.0 * PI * f * ti).sin_cos();
                data[row * 2 * k + j] = h * c;
                data[row * 2 * k + k + j] = h * s;
            }
        }
        Ok(Basis {
            rows: n,
            cols: 2 * k,
            data,
        })
    }
}

/// Row-major sample-from-coefficient map of one axis.
#[derive(Debug, Clone)]
pub struct Basis {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Basis {
    pub fn apply(&self, coeffs: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(coeffs).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `A^T g`.
    pub fn apply_transpose(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (row, &gi) in self.data.chunks_exact(self.cols).zip(g) {
            if gi != 0.0 {
                for (o, a) in out.iter_mut().zip(row) {
                    *o += a * gi;
                }
            }
        }
        out
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

fn project_l2(c: &mut [f64], s: &mut [f64]) {
    let n = axis_norm(c, s, Constraint::Rms);
    if n > 1.0 {
        c.iter_mut().chain(s.iter_mut()).for_each(|v| *v /= n);
    }
}

/// Projection onto `sum_i |(c_i, s_i)| <= 1`: the tone magnitudes go onto the
/// l1 ball, each tone keeps its direction.
fn project_group_l1(c: &mut [f64], s: &mut [f64]) {
    let mags: Vec<f64> = c.iter().zip(s.iter()).map(|(a, b)| a.hypot(*b)).collect();
    if mags.iter().sum::<f64>() <= 1.0 {
        return;
    }
    let mut sorted = mags.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut tau = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        acc += v;
        let candidate = (acc - 1.0) / (i + 1) as f64;
        if v > candidate {
            tau = candidate;
        }
    }
    for ((a, b), &mag) in c.iter_mut().zip(s.iter_mut()).zip(&mags) {
        let shrunk = (mag - tau).max(0.0);
        let scale = if mag > 0.0 { shrunk / mag } else { 0.0 };
        *a *= scale;
        *b *= scale;
    }
}

/// Samples `n` points of the multi-tone motion over `[0, l m)`.
pub fn synthesize_modulated(params: &ModulatedParams, n: usize) -> Result<SampledPattern> {
    if n < 2 {
        return Err(crate::error::domain(format!("need at least 2 samples (got {n})")));
    }
    params.validate()?;
    let x = params.basis(Axis::X, n)?.apply(&params.stacked(Axis::X));
    let y = params.basis(Axis::Y, n)?.apply(&params.stacked(Axis::Y));
    let t = uniform_times(0.0, params.window(), n);
    SampledPattern::new(t, x, y, params.m, params.l)
}

/// Three x tones with the amplitude and phase profile of the object
/// detection example, y driven by one tone at its resonance.
pub fn detection_example(config: ScannerConfig, m: u32) -> ModulatedParams {
    let x = tones_around(config.ratio(), &THREE_TONES);
    let mut p = ModulatedParams::zeros(x, vec![1.0], 2, m, config);
    for (i, (a, deg)) in [(0.22, 86.0f64), (0.95, 178.0), (0.22, 86.0)].into_iter().enumerate() {
        p.set_tone(Axis::X, i, a, deg.to_radians());
    }
    p.set_tone(Axis::Y, 0, 1.0, 0.0);
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::design_unmodulated;
    use crate::pattern::sample_unmodulated_unit;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg() -> ScannerConfig {
        ScannerConfig::normalized(2.0, 20.0)
    }

    fn five(seed: u64) -> ModulatedParams {
        ModulatedParams::random(tones_around(2.0, &FIVE_TONES), FIVE_TONES.to_vec(), 2, 7, cfg(), seed)
    }

    #[test]
    fn single_resonant_tone_is_unit_cosine() {
        let mut p = ModulatedParams::zeros(vec![2.0], vec![1.0], 2, 7, cfg());
        p.alpha[0] = 1.0;
        let s = synthesize_modulated(&p, 1400).unwrap();
        for (t, x) in s.t.iter().zip(&s.x) {
            assert_abs_diff_eq!(*x, (2.0 * PI * 2.0 * t).cos(), epsilon = 1e-12);
        }
        assert!(s.y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn detection_example_is_feasible() {
        let p = detection_example(ScannerConfig::normalized(2.0, 20.0), 7);
        assert_abs_diff_eq!(p.norm(Axis::X), 0.999, epsilon = 1e-3);
        let s = synthesize_modulated(&p, 500).unwrap();
        assert_eq!(s.len(), 500);
        let back = p.tones(Axis::X);
        assert_abs_diff_eq!(back[1].0, 0.95, epsilon = 1e-12);
        assert_abs_diff_eq!(back[1].1, 178f64.to_radians(), epsilon = 1e-12);
    }

    #[test]
    fn design_init_matches_unmodulated_trajectory() {
        let d = design_unmodulated(2.0, 7).unwrap();
        let c = ScannerConfig::normalized(d.fx_f64(), 20.0);
        let mut xf = tones_around(2.0, &FIVE_TONES);
        xf[2] = d.fx_f64();
        let p = ModulatedParams::from_design(&d, xf, FIVE_TONES.to_vec(), 2, c).unwrap();
        let s = synthesize_modulated(&p, 500).unwrap();
        let r = sample_unmodulated_unit(&d, 0.0, 14.0, 500).unwrap();
        for i in 0..500 {
            assert_abs_diff_eq!(s.x[i], r.x[i], epsilon = 1e-9);
            assert_abs_diff_eq!(s.y[i], r.y[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = five(1);
        p.alpha[0] = 2.0;
        assert!(matches!(synthesize_modulated(&p, 10), Err(Error::InvalidParams(_))));
        let mut p = five(1);
        p.gamma.pop();
        assert!(p.validate().is_err());
        let p = ModulatedParams::zeros(vec![1.0; 6], vec![1.0], 2, 7, cfg());
        assert!(p.validate().is_err());
        let p = ModulatedParams::zeros(vec![-1.0], vec![1.0], 2, 7, cfg());
        assert!(p.validate().is_err());
    }

    #[test]
    fn random_init_is_on_the_sphere_and_seeded() {
        let a = five(7);
        assert_abs_diff_eq!(a.norm(Axis::X), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.norm(Axis::Y), 1.0, epsilon = 1e-12);
        assert_eq!(a, five(7));
        assert_ne!(a, five(8));
    }

    #[test]
    fn tone_indices() {
        let f = tones_from_indices(12, 16, 2, 7);
        assert_eq!(f.len(), 5);
        assert_abs_diff_eq!(f[1], 13.0 / 14.0, epsilon = 1e-15);
    }

    #[test]
    fn group_l1_projection_examples() {
        let mut c = vec![3.0, 0.0];
        let mut s = vec![0.0, 4.0];
        project_group_l1(&mut c, &mut s);
        // magnitudes (3, 4) -> (0, 1)
        assert_abs_diff_eq!(c[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], 1.0, epsilon = 1e-15);
        let mut c = vec![0.6, 0.6];
        let mut s = vec![0.0, 0.0];
        project_group_l1(&mut c, &mut s);
        assert_abs_diff_eq!(c[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn far_tone_is_attenuated() {
        // FWHM is f_res / Q = 0.1, so 2.4 is more than 3 FWHM away
        let h = cfg().transfer_amplitude(Axis::X, 2.4).unwrap();
        assert!(h <= 0.2);
        let mut near = ModulatedParams::zeros(vec![2.0, 2.4], vec![1.0], 2, 7, cfg());
        near.alpha = vec![0.5, 0.0];
        let mut both = near.clone();
        both.alpha[1] = 0.5;
        let a = synthesize_modulated(&near, 700).unwrap();
        let b = synthesize_modulated(&both, 700).unwrap();
        let near_peak = a.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..700 {
            assert!((b.x[i] - a.x[i]).abs() <= h * near_peak + 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn synthesis_is_linear(s1 in 0u64..1000, s2 in 0u64..1000, a in -0.5f64..0.5, b in -0.5f64..0.5) {
            let p1 = five(s1);
            let p2 = five(s2);
            let mut mix = p1.clone();
            for axis in [Axis::X, Axis::Y] {
                let v: Vec<f64> = p1.stacked(axis).iter().zip(p2.stacked(axis)).map(|(u, w)| a * u + b * w).collect();
                mix.set_stacked(axis, &v);
            }
            let (x1, x2, xm) = (
                synthesize_modulated(&p1, 200).unwrap(),
                synthesize_modulated(&p2, 200).unwrap(),
                synthesize_modulated(&mix, 200).unwrap(),
            );
            for i in 0..200 {
                prop_assert!((xm.x[i] - (a * x1.x[i] + b * x2.x[i])).abs() < 1e-12);
                prop_assert!((xm.y[i] - (a * x1.y[i] + b * x2.y[i])).abs() < 1e-12);
            }
        }

        #[test]
        fn projection_is_feasible_and_idempotent(
            v in prop::collection::vec(-3.0f64..3.0, 10),
            absolute in any::<bool>(),
        ) {
            let mut p = five(0);
            p.constraint = if absolute { Constraint::Absolute } else { Constraint::Rms };
            p.set_stacked(Axis::X, &v);
            p.project();
            prop_assert!(p.norm(Axis::X) <= 1.0 + 1e-12);
            let once = p.clone();
            p.project();
            for (a, b) in once.stacked(Axis::X).iter().zip(p.stacked(Axis::X)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn group_l1_projection_is_nearest_feasible_point(
            v in prop::collection::vec(-2.0f64..2.0, 6),
            probe in prop::collection::vec(-1.0f64..1.0, 6),
        ) {
            let (mut c, mut s) = (v[..3].to_vec(), v[3..].to_vec());
            project_group_l1(&mut c, &mut s);
            // any feasible probe is no closer to v than the projection
            let (pc, ps) = (&probe[..3], &probe[3..]);
            let scale = axis_norm(pc, ps, Constraint::Absolute).max(1.0);
            let d_proj: f64 = c.iter().chain(&s).zip(&v).map(|(a, b)| (a - b).powi(2)).sum();
            let d_probe: f64 = pc.iter().chain(ps).zip(&v).map(|(a, b)| (a / scale - b).powi(2)).sum();
            prop_assert!(d_proj <= d_probe + 1e-12);
        }
    }
}
