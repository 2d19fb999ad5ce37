//! Command-line front end. [`run`] returns the process exit code: 0 on
//! success, 1 when the computation fails, 2 on bad usage.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::coverage::{evaluate_design, phase_tolerance_sweep, ratio_grid, sweep_designs, MetricOptions};
use crate::design::{baseline_repeating_design, design_unmodulated_traced, UnmodulatedDesign};
use crate::error::{domain, Result};
use crate::io::{export_pattern, load_rects, load_weight_map, read_json, write_csv, write_json, PatternFormat};
use crate::modulated::{
    optimize_observed, roi_density, synthesize_modulated, tones_around, Constraint, ModulatedParams, OptimizeOptions,
    Rect, StepRule, WeightMap, DEFAULT_PATCHES, FIVE_TONES, THREE_TONES,
};
use crate::pattern::{sample_unmodulated, sample_unmodulated_unit};
use crate::phase::{
    calibrated_linear_drift, simulate_drift_control, solve_multitone, summarize, DriftScenario, MultitoneSamples,
};
use crate::scanner::{Axis, ScannerConfig};

#[derive(Parser, Debug)]
#[command(name = "lissscan", version, about = "Resonant scanner pattern design and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pick scan frequencies and phases for a resonant ratio.
    Design(DesignArgs),
    /// Fill-factor and scanning range of one design.
    Metrics(MetricsArgs),
    /// Metrics of both design rules over a grid of ratios and frame times.
    Sweep(SweepArgs),
    /// Write the sampled trajectory of a design or of optimized parameters.
    Pattern(PatternArgs),
    /// Optimize multi-tone drive coefficients for a region of interest.
    Optimize(OptimizeArgs),
    /// Simulate resonance drift with and without per-frame phase correction.
    PhaseSim(PhaseSimArgs),
    /// Recover three tone amplitudes and phases from quadrature reads.
    PhaseSolve(PhaseSolveArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum RuleArg {
    Proposed,
    Baseline,
}

#[derive(Args, Debug)]
struct DesignSel {
    /// Resonant frequency ratio fx_res / fy_res, in [1, 3].
    #[arg(long)]
    r: f64,
    /// Frame time in y-cycles.
    #[arg(long)]
    m: u32,
    #[arg(long, value_enum, default_value = "proposed")]
    rule: RuleArg,
}

impl DesignSel {
    fn design(&self) -> Result<UnmodulatedDesign> {
        match self.rule {
            RuleArg::Proposed => design_unmodulated_traced(self.r, self.m).map(|(d, _)| d),
            RuleArg::Baseline => baseline_repeating_design(self.r, self.m),
        }
    }
}

#[derive(Args, Debug)]
struct DesignArgs {
    #[command(flatten)]
    sel: DesignSel,
    /// Scanner JSON; adds drive frequencies in Hz.
    #[arg(long)]
    scanner: Option<PathBuf>,
    /// Include the rejected closer candidates.
    #[arg(long)]
    explain: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MetricArgs {
    /// Quality factor of both axes.
    #[arg(long, default_value_t = 20.0)]
    q: f64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 128)]
    grid: usize,
    #[arg(long, default_value_t = 0)]
    frame: u32,
}

impl MetricArgs {
    fn options(&self) -> MetricOptions {
        MetricOptions {
            samples: self.samples,
            grid: self.grid,
            frame: self.frame,
        }
    }
}

#[derive(Args, Debug)]
struct MetricsArgs {
    #[command(flatten)]
    sel: DesignSel,
    #[command(flatten)]
    metric: MetricArgs,
    /// Phase offsets of the x axis, in degrees, to evaluate as well.
    #[arg(long, value_delimiter = ',')]
    phase_deltas: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, default_value_t = 1.0)]
    r_min: f64,
    #[arg(long, default_value_t = 3.0)]
    r_max: f64,
    #[arg(long, default_value_t = 0.05)]
    r_step: f64,
    /// Frame times, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<u32>,
    #[command(flatten)]
    metric: MetricArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PatternArgs {
    /// Resonant ratio of an unmodulated design.
    #[arg(long, required_unless_present = "params", requires = "m")]
    r: Option<f64>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long, value_enum, default_value = "proposed")]
    rule: RuleArg,
    #[arg(long, default_value_t = 20.0)]
    q: f64,
    #[arg(long, default_value_t = 0)]
    frame: u32,
    /// Modulated parameters, as written by `optimize`.
    #[arg(long, conflicts_with = "r")]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Output file; `.json` selects JSON, anything else CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum InitArg {
    Random,
    Design,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ConstraintArg {
    Rms,
    Absolute,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum StepArg {
    Exact,
    Fixed,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    /// Scanner JSON with fx_res, fy_res, qx, qy.
    #[arg(long)]
    scanner: PathBuf,
    /// Weight map (`.pgm`, `.csv`) or rectangle list (`.json`).
    #[arg(long)]
    roi: PathBuf,
    /// Tones on the x axis.
    #[arg(long, default_value_t = 5, value_parser = parse_tones)]
    tones: usize,
    /// Tones on the y axis; defaults to `--tones`.
    #[arg(long, value_parser = parse_tones)]
    y_tones: Option<usize>,
    #[arg(long, default_value_t = 500)]
    n_samples: usize,
    #[arg(long, default_value_t = 7)]
    m: u32,
    /// Tone-spacing divisor; the sampled window is `l m`.
    #[arg(long, default_value_t = 2)]
    l: u32,
    /// Patches per side when the RoI is a rectangle list.
    #[arg(long, default_value_t = DEFAULT_PATCHES)]
    patches: usize,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, value_enum, default_value = "exact")]
    step_rule: StepArg,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    #[arg(long, value_enum, default_value = "random")]
    init: InitArg,
    #[arg(long, value_enum, default_value = "rms")]
    constraint: ConstraintArg,
    /// Continue from the parameters in an earlier `params.json`.
    #[arg(long, conflicts_with = "init")]
    warm: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PhaseSimArgs {
    /// Scenario JSON.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 2400.0)]
    duration: f64,
    /// Replace the scenario drift with a linear drift reaching this many
    /// degrees of open-loop error at the end of the run.
    #[arg(long)]
    calibrate_deg: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PhaseSolveArgs {
    /// JSON with `x`, `xq`, `omegas` and `frame_time`.
    #[arg(long)]
    samples: PathBuf,
}

fn parse_tones(s: &str) -> std::result::Result<usize, String> {
    match s {
        "1" => Ok(1),
        "3" => Ok(3),
        "5" => Ok(5),
        _ => Err(format!("tone count must be 1, 3 or 5 (got {s})")),
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {msg}", e.kind());
            1
        }
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            let mut stdout = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut stdout, value)?;
            writeln!(stdout)?;
            Ok(())
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Design(a) => design_cmd(a),
        Command::Metrics(a) => metrics_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Pattern(a) => pattern_cmd(a),
        Command::Optimize(a) => optimize_cmd(a),
        Command::PhaseSim(a) => phase_sim_cmd(a),
        Command::PhaseSolve(a) => phase_solve_cmd(a),
    }
}

#[derive(Serialize)]
struct DesignOutput {
    #[serde(flatten)]
    design: UnmodulatedDesign,
    period: crate::design::PeriodReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    fx_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fy_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rejected: Option<Vec<crate::design::RejectedCandidate>>,
}

fn design_cmd(a: DesignArgs) -> Result<()> {
    let (design, rejected) = match a.sel.rule {
        RuleArg::Proposed => design_unmodulated_traced(a.sel.r, a.sel.m)?,
        RuleArg::Baseline => (baseline_repeating_design(a.sel.r, a.sel.m)?, Vec::new()),
    };
    let scanner: Option<ScannerConfig> = a.scanner.as_deref().map(read_json).transpose()?;
    if let Some(s) = &scanner {
        s.validate()?;
    }
    let out = DesignOutput {
        period: design.period()?,
        fx_hz: scanner.map(|s| design.fx_f64() * s.fy_res),
        fy_hz: scanner.map(|s| design.fy_f64() * s.fy_res),
        rejected: a.explain.then_some(rejected),
        design,
    };
    emit(&out, a.out.as_deref())
}

#[derive(Serialize)]
struct MetricsOutput {
    design: UnmodulatedDesign,
    fill_factor: f64,
    r_max: f64,
    scanning_range: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    phase_tolerance: Vec<PhaseToleranceRow>,
}

#[derive(Serialize)]
struct PhaseToleranceRow {
    delta_deg: f64,
    fill_factor: f64,
}

fn metrics_cmd(a: MetricsArgs) -> Result<()> {
    let design = a.sel.design()?;
    let config = ScannerConfig::normalized(a.sel.r, a.metric.q);
    config.validate()?;
    let opts = a.metric.options();
    let report = evaluate_design(&design, &config, &opts)?;
    let radians: Vec<f64> = a.phase_deltas.iter().map(|d| d.to_radians()).collect();
    let phase_tolerance = phase_tolerance_sweep(&design, &config, &radians, &opts)?
        .into_iter()
        .zip(&a.phase_deltas)
        .map(|((_, ff), &deg)| PhaseToleranceRow {
            delta_deg: deg,
            fill_factor: ff,
        })
        .collect();
    let out = MetricsOutput {
        design,
        fill_factor: report.fill_factor,
        r_max: report.r_max,
        scanning_range: report.scanning_range,
        phase_tolerance,
    };
    emit(&out, a.out.as_deref())
}

fn sweep_cmd(a: SweepArgs) -> Result<()> {
    let grid = ratio_grid(a.r_min, a.r_max, a.r_step)?;
    let template = ScannerConfig::normalized(1.0, a.metric.q);
    template.validate()?;
    let rows = sweep_designs(&grid, &a.m, &template, &a.metric.options())?;
    write_csv(&a.out, &rows)
}

fn pattern_cmd(a: PatternArgs) -> Result<()> {
    let pattern = match (&a.params, a.r, a.m) {
        (Some(path), _, _) => {
            let saved: OptimizeOutput = read_json(path)?;
            synthesize_modulated(&saved.params, a.samples)?
        }
        (None, Some(r), Some(m)) => {
            let sel = DesignSel { r, m, rule: a.rule };
            let config = ScannerConfig::normalized(r, a.q);
            sample_unmodulated(&sel.design()?, &config, a.frame, a.samples)?
        }
        _ => return Err(domain("pattern needs either --params or both --r and --m")),
    };
    export_pattern(&pattern, &a.out, PatternFormat::from_path(&a.out))
}

#[derive(Serialize, serde::Deserialize)]
struct RoiDensity {
    optimized: usize,
    reference: Option<usize>,
    ratio: Option<f64>,
}

#[derive(Serialize, serde::Deserialize)]
struct ToneSummary {
    freq: f64,
    amplitude: f64,
    phase_rad: f64,
}

#[derive(Serialize, serde::Deserialize)]
struct OptimizeOutput {
    params: ModulatedParams,
    x_tones: Vec<ToneSummary>,
    y_tones: Vec<ToneSummary>,
    initial_loss: f64,
    final_loss: f64,
    iterations: usize,
    converged: bool,
    seed: u64,
    roi_density: RoiDensity,
}

#[derive(Serialize)]
struct TraceRow {
    iteration: usize,
    loss: f64,
    best_loss: f64,
}

fn tone_set(n: usize) -> &'static [f64] {
    match n {
        1 => &[1.0],
        3 => &THREE_TONES,
        _ => &FIVE_TONES,
    }
}

/// Closed rectangles over the patches with positive weight.
fn rects_from_map(w: &WeightMap) -> Vec<Rect> {
    let side = 2.0 / w.m as f64;
    let mut out = Vec::new();
    for iy in 0..w.m {
        for ix in 0..w.m {
            if w.get(ix, iy) > 0.0 {
                let (x0, y0) = (-1.0 + ix as f64 * side, -1.0 + iy as f64 * side);
                out.push(Rect {
                    x0,
                    x1: x0 + side,
                    y0,
                    y1: y0 + side,
                });
            }
        }
    }
    out
}

fn optimize_cmd(a: OptimizeArgs) -> Result<()> {
    let config: ScannerConfig = read_json(&a.scanner)?;
    config.validate()?;
    let r = config.ratio();
    let is_json = a.roi.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let (wmap, rois) = if is_json {
        let rects = load_rects(&a.roi)?;
        (WeightMap::from_rects(&rects, a.patches)?, rects)
    } else {
        let w = load_weight_map(&a.roi)?;
        let rects = rects_from_map(&w);
        (w, rects)
    };
    let x_freqs = tones_around(r, tone_set(a.tones));
    let y_freqs = tones_around(1.0, tone_set(a.y_tones.unwrap_or(a.tones)));
    let constraint = match a.constraint {
        ConstraintArg::Rms => Constraint::Rms,
        ConstraintArg::Absolute => Constraint::Absolute,
    };
    let mut init = if let Some(path) = &a.warm {
        let saved: OptimizeOutput = read_json(path)?;
        saved.params
    } else {
        match a.init {
            InitArg::Random => ModulatedParams::random(x_freqs, y_freqs, a.l, a.m, config, a.seed),
            InitArg::Design => {
                let d = design_unmodulated_traced(r, a.m)?.0;
                let mut xf = x_freqs;
                // the design frequency replaces the nearest tone
                let centre = xf.len() / 2;
                xf[centre] = d.fx_f64();
                ModulatedParams::from_design(&d, xf, y_freqs, a.l, config)?
            }
        }
    };
    init.constraint = constraint;
    init.project();
    let opts = OptimizeOptions {
        max_iters: a.max_iters,
        step: a.step,
        step_rule: match a.step_rule {
            StepArg::Exact => StepRule::Exact,
            StepArg::Fixed => StepRule::Fixed,
        },
        threshold: a.threshold,
        n_samples: a.n_samples,
        ..OptimizeOptions::default()
    };
    let res = optimize_observed(&init, &wmap, &opts, |_| {})?;

    let optimized = roi_density(&synthesize_modulated(&res.params, a.n_samples)?, &rois);
    let reference = (1.0..=3.0)
        .contains(&r)
        .then(|| design_unmodulated_traced(r, a.m))
        .transpose()?
        .map(|(d, _)| sample_unmodulated_unit(&d, 0.0, res.params.window(), a.n_samples))
        .transpose()?
        .map(|p| roi_density(&p, &rois));
    let summarize_axis = |axis: Axis| -> Vec<ToneSummary> {
        res.params
            .freqs(axis)
            .iter()
            .zip(res.params.tones(axis))
            .map(|(&freq, (amplitude, phase_rad))| ToneSummary {
                freq,
                amplitude,
                phase_rad,
            })
            .collect()
    };
    let out = OptimizeOutput {
        x_tones: summarize_axis(Axis::X),
        y_tones: summarize_axis(Axis::Y),
        initial_loss: res.trace[0],
        final_loss: res.loss,
        iterations: res.iterations,
        converged: res.converged,
        seed: a.seed,
        roi_density: RoiDensity {
            optimized,
            reference,
            ratio: reference.filter(|&n| n > 0).map(|n| optimized as f64 / n as f64),
        },
        params: res.params.clone(),
    };
    if let Some(path) = &a.trace {
        let rows: Vec<TraceRow> = res
            .trace
            .iter()
            .zip(&res.best_trace)
            .enumerate()
            .map(|(iteration, (&loss, &best_loss))| TraceRow {
                iteration,
                loss,
                best_loss,
            })
            .collect();
        write_csv(path, &rows)?;
    }
    write_json(&a.out, &out)
}

#[derive(serde::Deserialize)]
struct PhaseSimConfig {
    #[serde(flatten)]
    scenario: DriftScenario,
    drive_hz: f64,
}

#[derive(Serialize)]
struct TraceCsvRow {
    t: f64,
    phase_error_deg: f64,
    corrected: bool,
    correction_deg: f64,
}

fn phase_sim_cmd(a: PhaseSimArgs) -> Result<()> {
    let cfg: PhaseSimConfig = read_json(&a.scenario)?;
    let mut scenario = cfg.scenario;
    if let Some(target) = a.calibrate_deg {
        scenario.drift = calibrated_linear_drift(&scenario.plant, cfg.drive_hz, target, a.duration)?;
    }
    let trace = simulate_drift_control(&scenario, cfg.drive_hz, a.duration, a.seed)?;
    let rows: Vec<TraceCsvRow> = trace
        .iter()
        .map(|r| TraceCsvRow {
            t: r.t,
            phase_error_deg: r.phase_error_deg,
            corrected: r.corrected,
            correction_deg: r.correction_deg,
        })
        .collect();
    write_csv(&a.out, &rows)?;
    emit(&summarize(&trace), None)
}

#[derive(serde::Deserialize)]
struct PhaseSolveInput {
    x: [f64; 3],
    xq: [f64; 3],
    omegas: [f64; 3],
    frame_time: f64,
}

fn phase_solve_cmd(a: PhaseSolveArgs) -> Result<()> {
    let input: PhaseSolveInput = read_json(&a.samples)?;
    let state = solve_multitone(
        &MultitoneSamples {
            x: input.x,
            xq: input.xq,
        },
        input.omegas,
        input.frame_time,
    )?;
    emit(&state, None)
}
