//! Mode dispatch, output files and exit statuses.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ism_core::dynamics::{
    advect_loop, state_norm, step_rk4, step_rk4_with_loop, Deterministic, Drift, MaterialLoop, Params, SimState,
    Truncated,
};
use ism_core::experiments::{
    gbm_max_oracle, mc_global_regularity, mc_hitting, strong_convergence_study, GlobalConfig, McSummary, StrongConfig,
};
use ism_core::field::{make_grid, Grid, NormSpec};
use ism_core::initial::{analytic_state, random_state, smooth_state};
use ism_core::stochastic::{
    lambda_value, path_seed, sample_wiener, step_em, step_transformed, transform_backward, Monitor, NoiseModel,
    StoppingKind, StoppingRecord, TransformedDrift,
};
use ism_core::{IsmError, StepFailure};
use log::{info, warn};
use thiserror::Error;

use crate::checkpoint::{read_checkpoint_for, write_checkpoint, CheckpointError};
use crate::config::{ConfigError, GridConfig, InitialConfig, Mode, NoiseChoice, RunConfig};
use crate::diagnostics::{fmt_f64, DiagnosticsError, DiagnosticsLog, DiagnosticsRecord};

/// How a run ended. Configuration and I/O failures surface as [`RunError`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    Stopped,
    Diverged,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Completed => 0,
            Outcome::Stopped => 2,
            Outcome::Diverged => 3,
        }
    }
}

/// Exit status for errors that prevent a run from starting or finishing.
pub const ERROR_STATUS: i32 = 1;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Core(#[from] IsmError),
    #[error("output I/O: {0}")]
    Io(#[from] io::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

/// Runs one mode with outputs under `out_dir`.
pub fn run(mode: Mode, cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, RunError> {
    cfg.require_for(mode)?;
    fs::create_dir_all(out_dir)?;
    let out = Outputs { dir: out_dir.to_path_buf() };
    fs::write(out.path(&cfg.output.echo), cfg.echo(mode))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build()?;
    pool.install(|| match mode {
        Mode::SimDet | Mode::SimSde | Mode::SimTransform => simulate(mode, cfg, &out),
        Mode::McHitting => run_mc_hitting(cfg, &out),
        Mode::McGlobal => run_mc_global(cfg, &out),
        Mode::Convergence => run_convergence(cfg, &out),
        Mode::Diag => run_diag(cfg, &out),
    })
}

fn build_grid(g: &GridConfig) -> Result<Grid, RunError> {
    Ok(make_grid(g.geometry, g.nx, g.nz, g.lx, g.lz)?)
}

fn initial_state(cfg: &RunConfig) -> Result<SimState, RunError> {
    let grid = build_grid(cfg.grid.as_ref().expect("checked by require_for"))?;
    Ok(match &cfg.initial {
        InitialConfig::Zero => SimState::zeros(&grid),
        InitialConfig::Smooth { amplitude } => smooth_state(&grid, *amplitude),
        InitialConfig::Analytic { amplitude } => analytic_state(&grid, *amplitude),
        InitialConfig::Random { amplitude, max_mode, seed } => random_state(&grid, *seed, *max_mode, *amplitude),
        InitialConfig::Checkpoint { path } => {
            let (state, stored) = read_checkpoint_for(path, &grid)?;
            let p = &cfg.params;
            if (stored.f, stored.g, stored.theta0, stored.s) != (p.f, p.g, p.theta0, p.s) {
                warn!("checkpoint parameters {stored:?} differ from the configured ones; using the configuration");
            }
            state
        }
    })
}

fn step_count(start: f64, horizon: f64, dt: f64) -> Result<usize, RunError> {
    let span = horizon - start;
    let n = (span / dt).round();
    if !(n >= 1.0) || (n * dt - span).abs() > 1e-9 * horizon.abs().max(dt) {
        return Err(ConfigError::Invalid {
            key: "time.T".into(),
            line: None,
            message: format!("must exceed the start time {start} by a whole number of steps dt = {dt}"),
        }
        .into());
    }
    Ok(n as usize)
}

fn default_loop(grid: &Grid, points: usize, radius: Option<f64>) -> Result<MaterialLoop, RunError> {
    let (lx, lz) = (grid.lx(), grid.lz());
    let radius = radius.unwrap_or(0.25 * lx.min(lz));
    Ok(MaterialLoop::circle([0.5 * lx, 0.5 * lz], radius, points)?)
}

/// Writes a monitor record as `key = value` lines.
pub fn write_stopping_record(record: &StoppingRecord, path: &Path) -> io::Result<()> {
    let mut o = String::new();
    let _ = writeln!(o, "kind = {}", record.kind.name());
    let _ = writeln!(o, "threshold = {}", fmt_f64(record.threshold));
    let _ = writeln!(o, "triggered = {}", record.triggered);
    let _ = writeln!(o, "trigger_time = {}", record.trigger_time.map(fmt_f64).unwrap_or_else(|| "none".into()));
    let _ = writeln!(o, "trigger_value = {}", fmt_f64(record.trigger_value));
    fs::write(path, o)
}

enum Stepper {
    Plain(Box<dyn Drift>),
    Em(NoiseModel),
    Transformed(TransformedDrift),
}

struct Monitors {
    norm: Option<Monitor>,
    gbm: Option<Monitor>,
}

impl Monitors {
    /// Feeds one sample to every armed monitor; returns the record that fired first.
    fn observe(&mut self, t: f64, state: &SimState, lambda: Option<f64>) -> Option<StoppingRecord> {
        if let Some(m) = &mut self.norm {
            if m.observe(t, state_norm(state, NormSpec::W1_INF)) {
                return Some(m.record());
            }
        }
        if let (Some(m), Some(l)) = (&mut self.gbm, lambda) {
            if m.observe(t, l) {
                return Some(m.record());
            }
        }
        None
    }
}

fn simulate(mode: Mode, cfg: &RunConfig, out: &Outputs) -> Result<Outcome, RunError> {
    let time = cfg.time.expect("checked by require_for");
    let params = cfg.params;
    let initial = initial_state(cfg)?;
    let start = initial.t;
    if mode != Mode::SimDet && start != 0.0 {
        return Err(ConfigError::Invalid {
            key: "initial.path".into(),
            line: None,
            message: format!("stochastic runs start at t = 0, the checkpoint is at t = {start}"),
        }
        .into());
    }
    let n_steps = step_count(start, time.horizon, time.dt)?;
    let alpha = cfg.noise.alpha;
    let path = match mode {
        Mode::SimDet => None,
        _ => Some(sample_wiener(time.dt, n_steps, 1, path_seed(cfg.seed, 0))?),
    };
    let w = path.as_ref().map(|p| p.values(0));
    let truncation = match (mode, cfg.monitor.radius) {
        (Mode::SimDet, Some(r)) => Some(Truncated::new(params, r)?),
        _ => None,
    };
    let stepper = match mode {
        Mode::SimDet => match &truncation {
            Some(t) => Stepper::Plain(Box::new(*t)),
            None => Stepper::Plain(Box::new(Deterministic { params })),
        },
        Mode::SimSde => Stepper::Em(match cfg.noise.kind {
            NoiseChoice::Linear => NoiseModel::linear(alpha),
            NoiseChoice::Off => NoiseModel::off(),
        }),
        _ => Stepper::Transformed(TransformedDrift::new(params, alpha, path.as_ref().expect("stochastic"))),
    };
    let mut monitors = Monitors {
        norm: cfg.monitor.radius.map(|radius| Monitor::new(StoppingKind::NormThreshold { radius })),
        gbm: match mode {
            Mode::SimDet => None,
            _ => cfg.monitor.r.map(|r| Monitor::new(StoppingKind::GbmThreshold { r })),
        },
    };
    let mut material = match cfg.output.loop_points {
        0 => None,
        n => Some(default_loop(initial.grid(), n, cfg.output.loop_radius)?),
    };

    let diag_path = out.path(&cfg.output.diagnostics);
    if diag_path.exists() {
        fs::remove_file(&diag_path)?;
    }
    let mut log = DiagnosticsLog::open(&diag_path)?;
    let physical = |evolved: &SimState, i: usize| -> Result<SimState, IsmError> {
        match (&stepper, &w) {
            (Stepper::Transformed(_), Some(w)) => transform_backward(evolved, alpha, w[i]),
            _ => Ok(evolved.clone()),
        }
    };
    let record = |state: &SimState, i: usize, material: Option<&MaterialLoop>| -> Result<DiagnosticsRecord, RunError> {
        let mut r =
            DiagnosticsRecord::of_state(state, &params, cfg.monitor.norm).with_circulation(state, &params, material);
        if let Some(w) = &w {
            r.w_t = Some(w[i]);
            r.lambda = Some(lambda_value(alpha, w[i], state.t));
        }
        if let Some(t) = &truncation {
            let weights = t.weights(state)?;
            r.cutoff = Some([weights.us, weights.ut, weights.th]);
        }
        Ok(r)
    };

    let mut evolved = initial;
    let mut i = 0;
    let outcome = loop {
        let state = physical(&evolved, i)?;
        let rec = record(&state, i, material.as_ref())?;
        let fired = monitors.observe(state.t, &state, rec.lambda);
        if i % cfg.output.stride == 0 || i == n_steps || fired.is_some() {
            log.push(&rec)?;
        }
        if let Some(stop) = fired {
            info!("monitor `{}` fired at t = {}", stop.kind.name(), state.t);
            write_stopping_record(&stop, &out.path(&cfg.output.stopping))?;
            write_checkpoint(&state, &params, &out.path(&cfg.output.checkpoint))?;
            break Outcome::Stopped;
        }
        if i == n_steps {
            write_checkpoint(&state, &params, &out.path(&cfg.output.checkpoint))?;
            break Outcome::Completed;
        }
        let step: Result<SimState, StepFailure<SimState>> = match &stepper {
            Stepper::Plain(drift) => match material.take() {
                Some(m) => step_rk4_with_loop(&evolved, &m, time.dt, drift.as_ref()).map(|(s, m)| {
                    material = Some(m);
                    s
                }),
                None => step_rk4(&evolved, time.dt, drift.as_ref()),
            },
            Stepper::Em(model) => {
                let p = path.as_ref().expect("stochastic");
                step_em(&evolved, &params, time.dt, &p.step_increments(i), model).inspect(|_| {
                    if let Some(m) = material.take() {
                        material = advect_loop(&m, &evolved.u_s, time.dt).ok();
                    }
                })
            }
            Stepper::Transformed(drift) => step_transformed(&evolved, time.dt, drift).inspect(|_| {
                if let Some(m) = material.take() {
                    let u = physical(&evolved, i).map(|p| p.u_s).unwrap_or_else(|_| evolved.u_s.clone());
                    material = advect_loop(&m, &u, time.dt).ok();
                }
            }),
        };
        match step {
            Ok(next) => {
                evolved = next;
                i += 1;
            }
            Err(StepFailure { last_valid, error: IsmError::Diverged { t, reason } }) => {
                warn!("diverged at t = {t}: {reason}");
                let state = physical(&last_valid, i).unwrap_or(last_valid);
                write_checkpoint(&state, &params, &out.path(&cfg.output.checkpoint))?;
                break Outcome::Diverged;
            }
            Err(StepFailure { error, .. }) => return Err(error.into()),
        }
    };
    log.finish()?;
    Ok(outcome)
}

fn summary_row(label: &str, s: &McSummary) -> String {
    format!(
        "{label},{},{},{},{},{},{}",
        s.n_paths,
        s.hits,
        fmt_f64(s.fraction),
        fmt_f64(s.standard_error),
        s.seed,
        fmt_f64(s.dt)
    )
}

const SUMMARY_HEADER: &str = "quantity,n_paths,hits,fraction,standard_error,seed,dt";

fn run_mc_hitting(cfg: &RunConfig, out: &Outputs) -> Result<Outcome, RunError> {
    let time = cfg.time.expect("checked by require_for");
    let r = cfg.monitor.r.expect("checked by require_for");
    let alpha = cfg.noise.alpha;
    let summary = mc_hitting(alpha, r, time.horizon, cfg.mc.n_paths, time.dt, cfg.seed)?;
    let oracle = gbm_max_oracle(alpha, r, time.horizon)?;
    let text = format!("{SUMMARY_HEADER},oracle\n{},{}\n", summary_row("hitting", &summary), fmt_f64(oracle));
    fs::write(out.path(&cfg.output.summary), text)?;
    Ok(Outcome::Completed)
}

fn run_mc_global(cfg: &RunConfig, out: &Outputs) -> Result<Outcome, RunError> {
    let time = cfg.time.expect("checked by require_for");
    let r = cfg.monitor.r.expect("checked by require_for");
    let global = GlobalConfig {
        params: cfg.params,
        initial: initial_state(cfg)?,
        r,
        c_tilde: cfg.monitor.c_tilde,
        norm: cfg.monitor.norm,
        n_paths: cfg.mc.n_paths,
        horizon: time.horizon,
        dt: time.dt,
        seed: cfg.seed,
    };
    let report = mc_global_regularity(&global)?;
    let oracle = gbm_max_oracle(cfg.noise.alpha, r, time.horizon)?;
    let mut text = format!("{SUMMARY_HEADER},reference\n");
    let _ = writeln!(text, "{},", summary_row("ordering", &report.ordering));
    let _ = writeln!(text, "{},", summary_row("bound", &report.bound));
    let _ = writeln!(text, "{},{}", summary_row("non_hitting", &report.non_hitting), fmt_f64(1.0 - oracle));
    let _ = writeln!(text, "diverged,{},{},,,{},{},", cfg.mc.n_paths, report.diverged, cfg.seed, fmt_f64(time.dt));
    fs::write(out.path(&cfg.output.summary), text)?;

    let cell = |t: Option<f64>| t.map(fmt_f64).unwrap_or_default();
    let mut paths = String::from(
        "path,gbm_triggered,gbm_time,gbm_value,amplitude_triggered,amplitude_time,amplitude_value,bound_held,diverged\n",
    );
    for (i, p) in report.paths.iter().enumerate() {
        let _ = writeln!(
            paths,
            "{i},{},{},{},{},{},{},{},{}",
            p.gbm.triggered,
            cell(p.gbm.trigger_time),
            fmt_f64(p.gbm.trigger_value),
            p.amplitude.triggered,
            cell(p.amplitude.trigger_time),
            fmt_f64(p.amplitude.trigger_value),
            p.bound_held,
            p.diverged
        );
    }
    fs::write(out.path("paths.csv"), paths)?;
    if report.diverged > 0 {
        warn!("{} of {} paths diverged", report.diverged, cfg.mc.n_paths);
    }
    Ok(Outcome::Completed)
}

fn run_convergence(cfg: &RunConfig, out: &Outputs) -> Result<Outcome, RunError> {
    let time = cfg.time.expect("checked by require_for");
    let alpha = match cfg.noise.kind {
        NoiseChoice::Off => 0.0,
        NoiseChoice::Linear => cfg.noise.alpha,
    };
    let study = StrongConfig {
        params: Params { alpha, ..cfg.params },
        initial: initial_state(cfg)?,
        alpha,
        horizon: time.horizon,
        coarse_dt: time.dt,
        levels: cfg.mc.levels,
        reference_refinements: cfg.mc.reference_refinements,
        paths: cfg.mc.n_paths,
        seed: cfg.seed,
    };
    let table = strong_convergence_study(&study)?;
    let mut text = String::from("dt,rms_error\n");
    for (dt, e) in &table.rows {
        let _ = writeln!(text, "{},{}", fmt_f64(*dt), fmt_f64(*e));
    }
    fs::write(out.path(&cfg.output.summary), text)?;
    let slope = table.slope.map(fmt_f64).unwrap_or_else(|| "undefined".into());
    fs::write(out.path("slope.txt"), format!("slope = {slope}\n"))?;
    Ok(Outcome::Completed)
}

fn run_diag(cfg: &RunConfig, out: &Outputs) -> Result<Outcome, RunError> {
    let state = initial_state(cfg)?;
    let material = match cfg.output.loop_points {
        0 => None,
        n => Some(default_loop(state.grid(), n, cfg.output.loop_radius)?),
    };
    let rec = DiagnosticsRecord::of_state(&state, &cfg.params, cfg.monitor.norm).with_circulation(
        &state,
        &cfg.params,
        material.as_ref(),
    );
    crate::diagnostics::append_diagnostics(&rec, &out.path(&cfg.output.diagnostics))?;
    Ok(Outcome::Completed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::diagnostics::read_diagnostics;

    fn config(body: &str) -> RunConfig {
        parse_config(body).unwrap()
    }

    const DET: &str = "[grid]\nnx = 16\nnz = 16\n[time]\ndt = 0.01\nT = 0.05\n";

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [Outcome::Completed.code(), Outcome::Stopped.code(), Outcome::Diverged.code(), ERROR_STATUS];
        assert_eq!(codes, [0, 2, 3, 1]);
    }

    #[test]
    fn deterministic_run_ends_at_horizon() {
        let dir = tempfile::tempdir().unwrap();
        let c = config(DET);
        assert_eq!(run(Mode::SimDet, &c, dir.path()).unwrap(), Outcome::Completed);
        let rows = read_diagnostics(&dir.path().join("diagnostics.csv")).unwrap();
        assert_eq!(rows.len(), 6);
        assert!((rows.last().unwrap().t - 0.05).abs() < 1e-15);
        assert!(rows.iter().all(|r| r.lambda.is_none() && r.w_t.is_none()));
        assert!(dir.path().join("final.ckpt").exists());
        assert!(dir.path().join("effective.cfg").exists());
        assert!(!dir.path().join("stopping.txt").exists());
    }

    #[test]
    fn stride_keeps_first_and_last_rows() {
        let dir = tempfile::tempdir().unwrap();
        let c = config(&format!("{DET}[output]\nstride = 2\n"));
        run(Mode::SimDet, &c, dir.path()).unwrap();
        let ts: Vec<f64> = read_diagnostics(&dir.path().join("diagnostics.csv")).unwrap().iter().map(|r| r.t).collect();
        assert_eq!(ts.len(), 4);
        assert_eq!(ts[0], 0.0);
        assert!((ts[3] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn horizon_must_be_whole_steps() {
        let dir = tempfile::tempdir().unwrap();
        let c = config("[grid]\nnx = 8\nnz = 8\n[time]\ndt = 0.03\nT = 0.1\n");
        assert!(matches!(run(Mode::SimDet, &c, dir.path()), Err(RunError::Config(_))));
    }

    #[test]
    fn stopping_record_file_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.txt");
        let rec = StoppingRecord {
            kind: StoppingKind::GbmThreshold { r: 2.0 },
            threshold: 2.0,
            triggered: false,
            trigger_time: None,
            trigger_value: 1.5,
        };
        write_stopping_record(&rec, &path).unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            "kind = gbm\nthreshold = 2\ntriggered = false\ntrigger_time = none\ntrigger_value = 1.5\n"
        );
    }
}
