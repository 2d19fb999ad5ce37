//! Fill-factor and scanning-range metrics, and the design sweeps built on
//! them.
//!
//! The fill-factor is `2 - R_max`, where `R_max` approximates the radius of
//! the largest empty circle inside the pattern after each axis is rescaled to
//! `[-1, 1]`: the largest distance from any patch center of a uniform grid
//! to its nearest sample.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{baseline_repeating_design, design_unmodulated, UnmodulatedDesign};
use crate::error::{Error, Result};
use crate::nn::PointIndex;
use crate::pattern::{sample_unmodulated, SampledPattern};
use crate::scanner::{Axis, ScannerConfig};

pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_GRID: usize = 128;
pub const THREADS_ENV: &str = "LISSSCAN_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricOptions {
    /// Samples per frame.
    pub samples: usize,
    /// Patches per side of the `[-1, 1]^2` evaluation grid.
    pub grid: usize,
    /// Frame evaluated, `[frame m, (frame + 1) m)`.
    pub frame: u32,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            grid: DEFAULT_GRID,
            frame: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub fill_factor: f64,
    pub r_max: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scanning_range: Option<f64>,
}

/// Patch centers of an `n x n` grid over `[-1, 1]`, per axis.
pub fn patch_centers(n: usize) -> Vec<f64> {
    let side = 2.0 / n as f64;
    (0..n).map(|i| -1.0 + (i as f64 + 0.5) * side).collect()
}

/// Rescales each axis by its own largest magnitude onto `[-1, 1]`.
pub fn normalize(pattern: &SampledPattern) -> Result<Vec<(f64, f64)>> {
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let sx = max_abs(&pattern.x);
    let sy = max_abs(&pattern.y);
    if sx <= 0.0 {
        return Err(Error::DegeneratePattern { axis: "x" });
    }
    if sy <= 0.0 {
        return Err(Error::DegeneratePattern { axis: "y" });
    }
    Ok(pattern.points().map(|(x, y)| (x / sx, y / sy)).collect())
}

pub fn fill_factor(pattern: &SampledPattern) -> Result<CoverageReport> {
    fill_factor_on_grid(pattern, DEFAULT_GRID)
}

pub fn fill_factor_on_grid(pattern: &SampledPattern, grid: usize) -> Result<CoverageReport> {
    if grid == 0 {
        return Err(crate::error::domain("grid must have at least one patch"));
    }
    let pts = normalize(pattern)?;
    let index = PointIndex::new(&pts);
    let centers = patch_centers(grid);
    let mut worst = 0.0f64;
    for &cx in &centers {
        for &cy in &centers {
            worst = worst.max(index.nearest(cx, cy).1);
        }
    }
    let r_max = worst.sqrt();
    Ok(CoverageReport {
        fill_factor: 2.0 - r_max,
        r_max,
        scanning_range: None,
    })
}

/// Product of the two transfer amplitudes at the design's drive frequencies.
pub fn scanning_range(design: &UnmodulatedDesign, config: &ScannerConfig) -> Result<f64> {
    let hx = config.transfer_amplitude(Axis::X, design.fx_f64() * config.fy_res)?;
    let hy = config.transfer_amplitude(Axis::Y, design.fy_f64() * config.fy_res)?;
    Ok(hx * hy)
}

/// Fill-factor of one sampled frame plus the scanning range.
pub fn evaluate_design(
    design: &UnmodulatedDesign,
    config: &ScannerConfig,
    opts: &MetricOptions,
) -> Result<CoverageReport> {
    let pattern = sample_unmodulated(design, config, opts.frame, opts.samples)?;
    let mut report = fill_factor_on_grid(&pattern, opts.grid)?;
    report.scanning_range = Some(scanning_range(design, config)?);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    Proposed,
    Baseline,
}

impl std::fmt::Display for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Rule::Proposed => "Proposed",
            Rule::Baseline => "Baseline",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    pub m: u32,
    pub rule: Rule,
    /// `"ok"` or the error kind that prevented a design.
    pub status: String,
    pub fill_factor: Option<f64>,
    pub scanning_range: Option<f64>,
    pub fx: Option<String>,
}

fn sweep_cell(r: f64, m: u32, rule: Rule, template: &ScannerConfig, opts: &MetricOptions) -> SweepRow {
    let config = ScannerConfig {
        fx_res: r,
        fy_res: 1.0,
        ..*template
    };
    let design = match rule {
        Rule::Proposed => design_unmodulated(r, m),
        Rule::Baseline => baseline_repeating_design(r, m),
    };
    let outcome = design.and_then(|d| evaluate_design(&d, &config, opts).map(|rep| (d, rep)));
    match outcome {
        Ok((d, rep)) => SweepRow {
            r,
            m,
            rule,
            status: "ok".into(),
            fill_factor: Some(rep.fill_factor),
            scanning_range: rep.scanning_range,
            fx: Some(crate::frac::format(&d.fx)),
        },
        Err(e) => SweepRow {
            r,
            m,
            rule,
            status: e.kind().into(),
            fill_factor: None,
            scanning_range: None,
            fx: None,
        },
    }
}

/// One row per `(r, m, rule)`, ordered by `m`, then `r`, then rule. The
/// template supplies the quality factors; resonances are set per cell in
/// normalized units.
pub fn sweep_designs(
    r_grid: &[f64],
    m_set: &[u32],
    template: &ScannerConfig,
    opts: &MetricOptions,
) -> Result<Vec<SweepRow>> {
    if r_grid.is_empty() || m_set.is_empty() {
        return Err(crate::error::domain("sweep grids must be nonempty"));
    }
    let cells: Vec<(f64, u32, Rule)> = m_set
        .iter()
        .flat_map(|&m| {
            r_grid
                .iter()
                .flat_map(move |&r| [(r, m, Rule::Proposed), (r, m, Rule::Baseline)])
        })
        .collect();
    let run = || -> Vec<SweepRow> {
        cells
            .par_iter()
            .map(|&(r, m, rule)| sweep_cell(r, m, rule, template, opts))
            .collect()
    };
    match thread_cap()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| crate::error::domain(format!("thread pool: {e}")))
            .map(|pool| pool.install(run)),
        None => Ok(run()),
    }
}

/// Worker cap from `LISSSCAN_THREADS`, if set.
fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(crate::error::domain(format!(
                "{THREADS_ENV} must be a positive integer (got {v:?})"
            ))),
        },
        Err(_) => Ok(None),
    }
}

/// `r_min, r_min + step, ...` up to `r_max` inclusive, rounded to 1e-9 so that
/// grid points such as 2.0 are exact.
pub fn ratio_grid(r_min: f64, r_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && r_min.is_finite() && r_max.is_finite() && r_max >= r_min) {
        return Err(crate::error::domain(format!(
            "bad ratio grid: min {r_min}, max {r_max}, step {step}"
        )));
    }
    let n = ((r_max - r_min) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((r_min + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

/// Fill-factor with `phi_x + delta` substituted, for each `delta`.
pub fn phase_tolerance_sweep(
    design: &UnmodulatedDesign,
    config: &ScannerConfig,
    deltas: &[f64],
    opts: &MetricOptions,
) -> Result<Vec<(f64, f64)>> {
    deltas
        .iter()
        .map(|&delta| {
            let perturbed = UnmodulatedDesign {
                phix: design.phix + delta,
                ..design.clone()
            };
            let pattern = sample_unmodulated(&perturbed, config, opts.frame, opts.samples)?;
            Ok((delta, fill_factor_on_grid(&pattern, opts.grid)?.fill_factor))
        })
        .collect()
}
