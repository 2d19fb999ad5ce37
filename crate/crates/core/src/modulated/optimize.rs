use serde::{Deserialize, Serialize};

use super::objective::{assign_and_score, frozen_loss, sample_gradient};
use super::params::ModulatedParams;
use super::weight::WeightMap;
use crate::error::{Error, Result};
use crate::scanner::Axis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepRule {
    /// Minimizer of the frozen-assignment quadratic along the gradient.
    #[default]
    Exact,
    /// `step` every iteration.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    pub max_iters: usize,
    /// Initial step for [`StepRule::Fixed`], and the fallback when the
    /// exact step is undefined.
    pub step: f64,
    pub step_rule: StepRule,
    pub max_halvings: u32,
    /// Occupancy radius; `None` means half a patch side.
    pub threshold: Option<f64>,
    /// Samples synthesized per evaluation.
    pub n_samples: usize,
    /// Stop once the loss changed by less than this fraction over
    /// `stall_window` iterations.
    pub rel_tol: f64,
    pub stall_window: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            step: 0.05,
            step_rule: StepRule::Exact,
            max_halvings: 10,
            threshold: None,
            n_samples: 500,
            rel_tol: 1e-5,
            stall_window: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    /// Lowest-loss iterate seen.
    pub params: ModulatedParams,
    pub loss: f64,
    /// Loss of every iterate, starting with the initial point.
    pub trace: Vec<f64>,
    /// Running minimum of `trace`.
    pub best_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// What an observer sees after each iterate is evaluated.
pub struct IterationInfo<'a> {
    pub iteration: usize,
    pub loss: f64,
    pub params: &'a ModulatedParams,
}

pub fn optimize(init: &ModulatedParams, wmap: &WeightMap, opts: &OptimizeOptions) -> Result<OptimizeResult> {
    optimize_observed(init, wmap, opts, |_| {})
}

/// Continues from an earlier optimum, typically for a nearby weight map.
pub fn warm_start(previous: &OptimizeResult, wmap: &WeightMap, opts: &OptimizeOptions) -> Result<OptimizeResult> {
    optimize(&previous.params, wmap, opts)
}

/// Projected gradient descent. Each iteration freezes the nearest-sample
/// assignment, steps along the negative gradient, projects back onto the
/// amplitude constraints and halves the step until the frozen loss does not
/// increase. The assignment is then recomputed, which can raise the true
/// loss, so the best iterate seen is returned.
pub fn optimize_observed(
    init: &ModulatedParams,
    wmap: &WeightMap,
    opts: &OptimizeOptions,
    mut observe: impl FnMut(&IterationInfo),
) -> Result<OptimizeResult> {
    init.validate()?;
    wmap.validate()?;
    if opts.n_samples < 2 || !(opts.step.is_finite() && opts.step > 0.0) {
        return Err(crate::error::domain(
            "optimizer needs n_samples >= 2 and a positive step",
        ));
    }
    let threshold = opts.threshold.unwrap_or_else(|| wmap.default_threshold());
    let bx = init.basis(Axis::X, opts.n_samples)?;
    let by = init.basis(Axis::Y, opts.n_samples)?;

    let mut params = init.clone();
    let mut cx = params.stacked(Axis::X);
    let mut cy = params.stacked(Axis::Y);
    let mut x = bx.apply(&cx);
    let mut y = by.apply(&cy);
    let (mut loss, mut assignment) = assign_and_score(&x, &y, wmap, threshold);
    let mut trace = vec![loss];
    let mut best = (loss, params.clone());
    let mut converged = false;
    observe(&IterationInfo {
        iteration: 0,
        loss,
        params: &params,
    });
    if !loss.is_finite() {
        return Err(Error::OptimizationFailed { iteration: 0, trace });
    }

    let mut iterations = 0;
    while iterations < opts.max_iters {
        let eff = assignment.effective_weights(wmap);
        let (sx, sy) = sample_gradient(&x, &y, &eff, &assignment);
        let gx = bx.apply_transpose(&sx);
        let gy = by.apply_transpose(&sy);
        let gg: f64 = gx.iter().chain(&gy).map(|v| v * v).sum();
        if gg == 0.0 {
            converged = true;
            break;
        }
        let mut step = match opts.step_rule {
            StepRule::Fixed => opts.step,
            StepRule::Exact => {
                // frozen loss along -G is quadratic with curvature
                // 2 sum_p w_p |A_n(p) G|^2
                let dx = bx.apply(&gx);
                let dy = by.apply(&gy);
                let curv: f64 = eff
                    .iter()
                    .zip(&assignment.n_idx)
                    .map(|(&w, &n)| 2.0 * w * (dx[n] * dx[n] + dy[n] * dy[n]))
                    .sum();
                if curv > 0.0 {
                    gg / curv
                } else {
                    opts.step
                }
            }
        };

        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let mut trial = params.clone();
            trial.set_stacked(Axis::X, &sub_scaled(&cx, &gx, step));
            trial.set_stacked(Axis::Y, &sub_scaled(&cy, &gy, step));
            trial.project();
            let (tcx, tcy) = (trial.stacked(Axis::X), trial.stacked(Axis::Y));
            let (tx, ty) = (bx.apply(&tcx), by.apply(&tcy));
            if frozen_loss(&tx, &ty, &eff, &assignment) <= loss {
                accepted = Some((trial, tcx, tcy, tx, ty));
                break;
            }
            step /= 2.0;
        }
        iterations += 1;
        let Some((trial, tcx, tcy, tx, ty)) = accepted else {
            // no descent even for a tiny step: projected stationary point
            converged = true;
            break;
        };
        (params, cx, cy, x, y) = (trial, tcx, tcy, tx, ty);
        (loss, assignment) = assign_and_score(&x, &y, wmap, threshold);
        trace.push(loss);
        observe(&IterationInfo {
            iteration: iterations,
            loss,
            params: &params,
        });
        if !loss.is_finite() {
            return Err(Error::OptimizationFailed {
                iteration: iterations,
                trace,
            });
        }
        if loss < best.0 {
            best = (loss, params.clone());
        }
        if loss == 0.0 {
            converged = true;
            break;
        }
        if trace.len() > opts.stall_window {
            let earlier = trace[trace.len() - 1 - opts.stall_window];
            if (earlier - loss).abs() <= opts.rel_tol * earlier.abs() {
                converged = true;
                break;
            }
        }
    }

    let best_trace = trace
        .iter()
        .scan(f64::INFINITY, |m, &v| {
            *m = v.min(*m);
            Some(*m)
        })
        .collect();
    Ok(OptimizeResult {
        params: best.1,
        loss: best.0,
        trace,
        best_trace,
        iterations,
        converged,
    })
}

fn sub_scaled(c: &[f64], g: &[f64], s: f64) -> Vec<f64> {
    c.iter().zip(g).map(|(a, b)| a - s * b).collect()
}
