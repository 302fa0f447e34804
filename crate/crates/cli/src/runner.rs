use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use sweepbec::dynamics::{
    imaginary_time_ground_state, propagate, ImaginaryTimeOptions, OverlapTarget, PropagationConfig, PropagationWarning,
};
use sweepbec::grid::write_field;
use sweepbec::spectrum::{find_avoided_crossing, level_scan, lowest_eigenpairs, x0_range, EigenOptions, LinearOperatorSpec};
use sweepbec::stationary::{
    continuation_scan, continue_in_g, Branch, ContinuationOptions, ContinuationParameter, StationaryOptions,
    StationaryState, StopReason,
};
use sweepbec::{oscillator, Dim, Field64, Grid64, Potential64, Schedule64};

use crate::config::{ExperimentConfig, Initial, Kind};
use crate::manifest::{FileRecord, RunManifest, Stage, Status};
use crate::CliError;

struct Run<'a> {
    out: &'a Path,
    files: Vec<FileRecord>,
    stages: Vec<Stage>,
    metrics: BTreeMap<String, f64>,
    warnings: Vec<String>,
}

enum Failure {
    Numerical(sweepbec::Error),
    Io(std::io::Error),
}

impl From<sweepbec::Error> for Failure {
    fn from(e: sweepbec::Error) -> Self {
        Failure::Numerical(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Step<T> = std::result::Result<T, Failure>;

impl Run<'_> {
    fn stage<R>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Step<R>) -> Step<R> {
        let t = Instant::now();
        let r = f(self);
        self.stages.push(Stage { name: name.to_string(), seconds: t.elapsed().as_secs_f64() });
        r
    }

    fn emit(&mut self, rel: &str, data: Vec<u8>) -> Step<()> {
        std::fs::write(self.out.join(rel), &data)?;
        self.files.push(FileRecord::of(rel, &data));
        Ok(())
    }

    fn emit_field(&mut self, rel: &str, field: &Field64) -> Step<()> {
        let mut buf = Vec::new();
        write_field(field, &mut buf)?;
        self.emit(rel, buf)
    }

    fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.insert(name.into(), value);
    }
}

/// Runs the experiment, writing data files and `manifest.json` into `out`.
///
/// A numerical failure still leaves a manifest (status `failed`) behind.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest, CliError> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let start = Instant::now();
    let mut run = Run { out, files: Vec::new(), stages: Vec::new(), metrics: BTreeMap::new(), warnings: Vec::new() };
    let result = match cfg.kind {
        Kind::Sweep1d | Kind::Sweep2d => sweep(cfg, &mut run),
        Kind::Spectrum1d | Kind::Spectrum2d => spectrum(cfg, &mut run),
        Kind::Continuation => continuation(cfg, &mut run),
        Kind::Groundstate => groundstate(cfg, &mut run),
    };
    let failure = match result {
        Ok(()) => None,
        Err(Failure::Io(e)) => return Err(CliError::Io(e)),
        Err(Failure::Numerical(e)) => Some(e.to_string()),
    };
    let manifest = RunManifest {
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        status: if failure.is_some() { Status::Failed } else { Status::Ok },
        failure: failure.clone(),
        stages: run.stages,
        total_seconds: start.elapsed().as_secs_f64(),
        files: run.files,
        metrics: run.metrics,
        warnings: run.warnings,
    };
    manifest.write(out)?;
    match failure {
        None => Ok(manifest),
        Some(msg) => Err(CliError::Numerical(msg)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub metric: String,
    pub value: Option<f64>,
    pub range: [f64; 2],
    pub pass: bool,
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        match self.value {
            Some(v) => write!(f, "{verdict} {} = {v:.6} in [{}, {}]", self.metric, self.range[0], self.range[1]),
            None => write!(f, "{verdict} {} missing, expected [{}, {}]", self.metric, self.range[0], self.range[1]),
        }
    }
}

/// Compares the manifest metrics with the configured `expect` ranges.
pub fn check(cfg: &ExperimentConfig, manifest: &RunManifest) -> Vec<CheckLine> {
    cfg.expect
        .iter()
        .map(|(metric, range)| {
            let value = manifest.metrics.get(metric).copied();
            let pass = value.is_some_and(|v| v >= range[0] && v <= range[1]);
            CheckLine { metric: metric.clone(), value, range: *range, pass }
        })
        .collect()
}

fn grid_for(cfg: &ExperimentConfig) -> sweepbec::Result<Arc<Grid64>> {
    Ok(Arc::new(Grid64::new(Dim::from_usize(cfg.dim())?, cfg.points, cfg.half_width)?))
}

fn spec_for(cfg: &ExperimentConfig) -> sweepbec::Result<Potential64> {
    Potential64::new(Dim::from_usize(cfg.dim())?, cfg.u0, cfg.sigma, cfg.omega, cfg.x0_start)
}

fn stationary_opts(cfg: &ExperimentConfig) -> StationaryOptions {
    StationaryOptions { tol: cfg.tol, ..Default::default() }
}

fn relax_opts(cfg: &ExperimentConfig) -> ImaginaryTimeOptions {
    ImaginaryTimeOptions { polish_tol: cfg.tol, ..Default::default() }
}

fn sweep(cfg: &ExperimentConfig, run: &mut Run) -> Step<()> {
    let grid = grid_for(cfg)?;
    let spec = spec_for(cfg)?;
    let passes = cfg.passes.unwrap_or(1);
    let (speed, dt) = (cfg.speed.unwrap_or(0.0), cfg.dt.unwrap_or(0.0));
    let two_d = grid.dim() == Dim::Two;
    let trap = Potential64::harmonic(spec.dim, spec.omega);

    let initial = run.stage("initial state", |_| {
        let from = match cfg.initial.unwrap_or(Initial::Relaxed) {
            Initial::Relaxed => spec,
            Initial::Trap => trap,
        };
        Ok(imaginary_time_ground_state(&from, cfg.g, grid.clone(), &relax_opts(cfg))?)
    })?;
    run.metric("mu_initial", initial.mu);

    // pass k should end in level k of the bare trap
    let levels: Vec<usize> = if two_d { (1..=passes).collect() } else { (0..=passes).collect() };
    let targets = run.stage("targets", |_| {
        let built: Vec<sweepbec::Result<OverlapTarget<f64>>> = levels
            .par_iter()
            .map(|&k| {
                let linear = if two_d { oscillator::vortex_2d(&grid, k as i32) } else { oscillator::state_1d(&grid, k) };
                let name = if two_d { format!("l{k}") } else { format!("n{k}") };
                let state = if cfg.g == 0.0 {
                    linear
                } else {
                    continue_in_g(&linear, &trap, cfg.g, cfg.g_steps.unwrap_or(10), &stationary_opts(cfg))?.state
                };
                Ok(OverlapTarget::new(name, state))
            })
            .collect();
        Ok(built.into_iter().collect::<sweepbec::Result<Vec<_>>>()?)
    })?;

    let omega = if two_d { cfg.omega } else { 0.0 };
    let sched = Schedule64::new(cfg.x0_start, cfg.x0_end, speed, passes, omega)?;
    let mut pcfg = PropagationConfig::new(dt, cfg.g);
    pcfg.record_stride = cfg.record_stride.unwrap_or(1000);
    let traj = run.stage("propagation", |_| Ok(propagate(&initial.state, &spec, &sched, &pcfg, &targets)?))?;

    for w in &traj.warnings {
        run.warnings.push(match w {
            PropagationWarning::LargeStep { dt, v_min } => format!("dt |V_min| = {} exceeds 0.1 (dt {dt})", dt * v_min.abs()),
            PropagationWarning::StepAdjusted { requested, used } => format!("dt adjusted from {requested} to {used}"),
            PropagationWarning::FocusingResonance { dt, k_max } => {
                format!("dt k_max^2 / 2 = {:.2} exceeds pi with g < 0; reduce dt when refining the grid", dt * k_max * k_max / 2.0)
            }
        });
    }
    for p in 1..=passes {
        let name = if two_d { format!("l{p}") } else { format!("n{p}") };
        let v = traj.overlap_at_pass_end(&name, p - 1).unwrap_or(f64::NAN);
        run.metric(format!("p{p}"), v);
        if let Some(lz) = traj.lz.as_ref() {
            run.metric(format!("lz{p}"), lz[traj.pass_ends[p - 1]]);
        }
    }
    run.metric("norm_drift", traj.max_norm_drift());
    run.metric("dt_used", traj.dt_used);

    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    run.emit("trajectory.csv", csv)?;
    for (p, st) in traj.pass_states.iter().enumerate() {
        run.emit_field(&format!("pass{}.bin", p + 1), st)?;
    }
    Ok(())
}

fn spectrum(cfg: &ExperimentConfig, run: &mut Run) -> Step<()> {
    let grid = grid_for(cfg)?;
    let op = LinearOperatorSpec::new(grid, spec_for(cfg)?)?;
    let xs = x0_range(cfg.x0_start, cfg.x0_end, cfg.x0_step.unwrap_or(0.1));
    let levels = cfg.levels.unwrap_or(2);
    let eopts = EigenOptions { tol: cfg.tol, ..Default::default() };
    let scan = run.stage("level scan", |_| Ok(level_scan(&op, &xs, levels, &eopts)?))?;
    match find_avoided_crossing(&scan.curve(0), &scan.curve(1)) {
        Ok(c) => {
            run.metric("x0_star", c.x0_star);
            run.metric("gap", c.gap);
        }
        Err(e) => run.warnings.push(format!("ground/first crossing: {e}")),
    }
    let last = xs.len() - 1;
    for l in 0..levels {
        run.metric(format!("e{l}_end"), scan.energies[l][last]);
        if let Some(lz) = scan.lz.as_ref() {
            run.metric(format!("lz{l}_end"), lz[l][last]);
        }
    }
    let mut csv = Vec::new();
    scan.write_csv(&mut csv)?;
    run.emit("levels.csv", csv)
}

fn continuation(cfg: &ExperimentConfig, run: &mut Run) -> Step<()> {
    let grid = grid_for(cfg)?;
    let spec = spec_for(cfg)?;
    let levels = cfg.levels.unwrap_or(1);
    let copts = ContinuationOptions { newton_tol: cfg.tol, ..Default::default() };
    let pairs = run.stage("linear seeds", |_| {
        let op = LinearOperatorSpec::new(grid.clone(), spec)?;
        Ok(lowest_eigenpairs(&op, levels, &EigenOptions::default())?)
    })?;
    let branches = run.stage("branches", |_| {
        let traced: Vec<sweepbec::Result<Branch<f64>>> = pairs
            .par_iter()
            .map(|p| {
                let mut seed = StationaryState {
                    state: p.state.clone(),
                    mu: p.energy,
                    g: 0.0,
                    spec,
                    residual_norm: p.residual,
                    warnings: vec![],
                };
                if cfg.g != 0.0 {
                    let in_g = continuation_scan(&seed, ContinuationParameter::Coupling, cfg.g, &copts)?;
                    let end = in_g.points.last().expect("branch has its seed point");
                    if in_g.stop != StopReason::Reached {
                        return Err(sweepbec::Error::Domain(format!(
                            "continuation in g stopped at g = {} ({:?})",
                            end.g, in_g.stop
                        )));
                    }
                    seed = end.to_stationary(&spec);
                }
                continuation_scan(&seed, ContinuationParameter::DipPosition, cfg.x0_end, &copts)
            })
            .collect();
        Ok(traced.into_iter().collect::<sweepbec::Result<Vec<_>>>()?)
    })?;

    let mut csv = Vec::new();
    let mut excited_multivalued = 0;
    for (k, b) in branches.iter().enumerate() {
        b.write_csv(k, &mut csv, k == 0)?;
        let crossings = b.self_intersections();
        run.metric(format!("folds{k}"), b.folds().len() as f64);
        run.metric(format!("multivalued{k}"), if b.is_multivalued() { 1.0 } else { 0.0 });
        run.metric(format!("self_intersections{k}"), crossings.len() as f64);
        run.metric(format!("reached{k}"), if b.stop == StopReason::Reached { 1.0 } else { 0.0 });
        if b.stop != StopReason::Reached {
            run.warnings.push(format!("branch {k} stopped early: {:?}", b.stop));
        }
        if k > 0 && b.is_multivalued() {
            excited_multivalued += 1;
        }
        if k == 0 {
            // a loop whose two crossing strands sit on opposite sides of the barrier
            let split = crossings.iter().find(|c| {
                let (a, z) = (b.localization_at(c.first), b.localization_at(c.second));
                (a - 0.5) * (z - 0.5) < 0.0
            });
            run.metric("ground_loop_split", if split.is_some() { 1.0 } else { 0.0 });
            if let Some(c) = split {
                run.metric("ground_loop_x0", c.x0);
                run.metric("ground_loop_mu", c.mu);
                run.metric("ground_loop_left_a", b.localization_at(c.first));
                run.metric("ground_loop_left_b", b.localization_at(c.second));
            }
        }
    }
    run.metric("excited_multivalued", excited_multivalued as f64);
    run.emit("branches.csv", csv)
}

fn groundstate(cfg: &ExperimentConfig, run: &mut Run) -> Step<()> {
    let grid = grid_for(cfg)?;
    let spec = spec_for(cfg)?;
    let st = run.stage("imaginary time", |_| Ok(imaginary_time_ground_state(&spec, cfg.g, grid.clone(), &relax_opts(cfg))?))?;
    run.metric("mu", st.mu);
    run.metric("residual", st.residual_norm);
    run.emit_field("state.bin", &st.state)
}
