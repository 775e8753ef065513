//! Run loop, snapshots and diagnostics, and the study harnesses built on top of them.

mod config;
pub mod io;

use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::{fit_scaling, track_neck, NeckTracker, ScalingFit, ScalingSeries};
use crate::curve::{enclosed_volume, reconstruct, Anchor, CurveState, DerivedGeometry};
use crate::error::{Error, Result};
use crate::meshref::build_guideline;
use crate::problems::P2Curve;
use crate::reparam::{geometric_distance, to_uniform};
use crate::timestep::Stepper;

pub use config::{GammaExpr, GuidelineOverrides, Problem, RunConfig};
use io::{DiagRow, DiagWriter, SnapshotMeta};

/// Runs `f` on a pool of `threads` workers, or on the global pool when `threads == 0`.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("threads = {threads}: {e}")))?;
    Ok(pool.install(f))
}

/// Why the time loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    EndTime,
    NeckThinned,
}

/// A time evolution in memory: state, the previous step's density and the tracked neck.
pub struct Simulation {
    cfg: RunConfig,
    stepper: Stepper,
    pub state: CurveState,
    pub r_prev: Option<Vec<f64>>,
    pub step: usize,
    pub tracker: NeckTracker,
    pub series: ScalingSeries,
    volume0: f64,
}

impl Simulation {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        Self::with_step(cfg, cfg.dt, cfg.eps_k)
    }

    /// Same as [`Simulation::new`] with the step size and filter level replaced.
    pub fn with_step(cfg: &RunConfig, dt: f64, eps_k: f64) -> Result<Self> {
        let mut cfg = cfg.clone();
        cfg.dt = dt;
        cfg.eps_k = eps_k;
        cfg.validate()?;
        let state = cfg.initial_state()?;
        Self::from_state(cfg, state, None, 0)
    }

    fn from_state(
        cfg: RunConfig,
        state: CurveState,
        r_prev: Option<Vec<f64>>,
        step: usize,
    ) -> Result<Self> {
        let stepper = Stepper::new(cfg.step_config(), cfg.n)?;
        let volume0 = enclosed_volume(&reconstruct(&state, cfg.z_anchor)?)?;
        Ok(Self {
            cfg,
            stepper,
            state,
            r_prev,
            step,
            tracker: NeckTracker::new(),
            series: ScalingSeries::new(),
            volume0,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn geometry(&self) -> Result<DerivedGeometry> {
        reconstruct(&self.state, self.cfg.z_anchor)
    }

    /// Guideline at the grid nodes, whatever the mesh mode.
    pub fn guideline(&self, geom: &DerivedGeometry) -> Result<Vec<f64>> {
        let p = self.cfg.guideline_params();
        Ok(build_guideline(&self.state, geom, &p, &p.plan()?)?.gl_at_nodes)
    }

    /// Relative volume change since the start.
    pub fn volume_drift(&self) -> Result<f64> {
        Ok((enclosed_volume(&self.geometry()?)? - self.volume0) / self.volume0)
    }

    /// Advances one step and returns its diagnostics row.
    pub fn advance(&mut self) -> Result<DiagRow> {
        let out = self.stepper.step(&self.state, self.r_prev.as_deref())?;
        self.state = out.state;
        self.r_prev = Some(out.r_base);
        self.step += 1;
        let geom = self.geometry()?;
        let neck = self.tracker.update(&track_neck(&geom)?);
        if let Some(nk) = neck {
            if self.series.times.last().map_or(true, |&t| self.state.t > t) {
                self.series.push(self.state.t, nk.r_min, nk.z_min);
            }
        }
        let d = out.diagnostics;
        Ok(DiagRow {
            step: self.step,
            t: d.t,
            l: d.l,
            ds_min: d.ds_min,
            r_min: neck.map_or(f64::NAN, |n| n.r_min),
            z_min: neck.map_or(f64::NAN, |n| n.z_min),
            volume: d.volume,
            closure_residual: d.closure_residual,
            cfl_ratio: d.cfl_ratio,
            filtered_modes: d.filtered_modes,
        })
    }

    /// Steps until `t_end`, or until `stop` returns true on a row.
    pub fn run_until(
        &mut self,
        t_end: f64,
        mut each: impl FnMut(&Self, &DiagRow) -> Result<bool>,
    ) -> Result<StopReason> {
        let dt = self.cfg.dt;
        while self.state.t < t_end - 0.5 * dt {
            let row = self.advance()?;
            if each(self, &row)? {
                return Ok(StopReason::NeckThinned);
            }
        }
        Ok(StopReason::EndTime)
    }

    fn snapshot(&self, dir: &Path) -> Result<PathBuf> {
        let geom = self.geometry()?;
        let gl = self.guideline(&geom)?;
        let meta = SnapshotMeta {
            step: self.step,
            t: self.state.t,
            l: geom.l,
            dt: self.cfg.dt,
            sigma: self.state.sigma,
            neck_alpha: self.tracker.alpha(),
        };
        let path = io::write_snapshot(dir, &self.state, &geom, &gl, &meta)?;
        if let Some(r) = &self.r_prev {
            io::write_rprev(dir, self.step, r)?;
        }
        Ok(path)
    }
}

/// What a finished time evolution leaves behind.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub state: CurveState,
    pub stop: StopReason,
    pub series: ScalingSeries,
    pub fit: Option<ScalingFit>,
    pub volume_drift: f64,
    pub last_snapshot: PathBuf,
}

/// One row of the initialization sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P2Row {
    pub n: usize,
    pub err_r: f64,
    pub err_z: f64,
}

#[derive(Debug, Clone)]
pub enum RunReport {
    Evolution(RunSummary),
    P2Sweep(Vec<P2Row>),
}

/// Runs a configuration and writes its artifacts under `outdir`.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    with_threads(cfg.threads, || run_inner(cfg))?
}

fn run_inner(cfg: &RunConfig) -> Result<RunReport> {
    let dir = cfg.outdir.as_path();
    if cfg.problem == Problem::P2Test {
        let rows = p2_sweep(cfg.p2_eps, cfg.p2_warp, &cfg.p2_sizes)?;
        fs::create_dir_all(dir)?;
        let mut text = String::from("N,err_r,err_z\n");
        for r in &rows {
            text.push_str(&format!(
                "{},{},{}\n",
                r.n,
                io::fmt(r.err_r),
                io::fmt(r.err_z)
            ));
        }
        fs::write(dir.join("p2test.csv"), text)?;
        return Ok(RunReport::P2Sweep(rows));
    }

    let diag_path = dir.join("diag.csv");
    let resume_from = if cfg.resume {
        io::latest_snapshot(dir)?
    } else {
        None
    };
    let (mut sim, mut diag) = match resume_from {
        Some(step) => {
            let meta = SnapshotMeta::read(&io::meta_path(dir, step))?;
            let snap = io::Snapshot::read(&io::snapshot_path(dir, step))?;
            let state = snap.state(meta.t, meta.sigma)?;
            let r_prev = io::read_rprev(dir, step)?;
            let mut sim = Simulation::from_state(cfg.clone(), state, r_prev, step)?;
            sim.volume0 = enclosed_volume(&reconstruct(&cfg.initial_state()?, cfg.z_anchor)?)?;
            let (w, rows) = DiagWriter::resume(&diag_path, step)?;
            for r in rows.iter().filter(|r| r.r_min.is_finite()) {
                sim.series.push(r.t, r.r_min, r.z_min);
            }
            sim.tracker = meta
                .neck_alpha
                .map_or_else(NeckTracker::new, NeckTracker::seeded);
            log::info!("resuming from step {step}, t = {}", meta.t);
            (sim, w)
        }
        None => {
            let sim = Simulation::new(cfg)?;
            fs::create_dir_all(dir)?;
            let w = DiagWriter::create(&diag_path)?;
            sim.snapshot(dir)?;
            (sim, w)
        }
    };

    let every = cfg.snapshot_every;
    let stop_r = cfg.stop_r_min;
    let result = sim.run_until(cfg.t_end, |s, row| {
        diag.push(row)?;
        if s.step % every == 0 {
            diag.flush()?;
            s.snapshot(dir)?;
        }
        Ok(stop_r.is_some_and(|r| row.r_min <= r))
    });
    diag.flush()?;
    let stop = match result {
        Ok(stop) => stop,
        Err(e) => {
            let geom = sim.geometry()?;
            let gl = sim
                .guideline(&geom)
                .unwrap_or_else(|_| vec![f64::NAN; sim.state.n()]);
            let path = dir.join(format!("postmortem_{:08}.csv", sim.step));
            io::write_snapshot_to(&path, &sim.state, &geom, &gl)?;
            log::error!(
                "run aborted after step {}: {e}; last good state in {}",
                sim.step,
                path.display()
            );
            return Err(e);
        }
    };
    if sim.step % every != 0 {
        sim.snapshot(dir)?;
    }

    let fit = fit_scaling(&sim.series, None).ok();
    let summary = RunSummary {
        steps: sim.step,
        state: sim.state.clone(),
        stop,
        series: sim.series.clone(),
        fit,
        volume_drift: sim.volume_drift()?,
        last_snapshot: io::snapshot_path(dir, sim.step),
    };
    fs::write(dir.join("summary.txt"), render_summary(cfg, &summary))?;
    Ok(RunReport::Evolution(summary))
}

fn render_summary(cfg: &RunConfig, s: &RunSummary) -> String {
    let mut out = format!(
        "problem={}\nN={}\ndt={}\nsteps={}\nt={}\nstop={:?}\nvolume_drift={:e}\n",
        cfg.problem.name(),
        cfg.n,
        cfg.dt,
        s.steps,
        s.state.t,
        s.stop,
        s.volume_drift
    );
    if let Some(f) = &s.fit {
        out.push_str(&format!(
            "fit_window={} {}\nfit_samples={}\nt_p={}\nz_p={}\nr2_r={}\nr2_z={}\n",
            f.window.0, f.window.1, f.samples, f.t_p, f.z_p, f.r2_r, f.r2_z
        ));
    }
    out
}

/// Relative errors of the uniformized P2 curve against its exact polar form.
pub fn p2_sweep(eps: f64, warp: f64, sizes: &[usize]) -> Result<Vec<P2Row>> {
    let c = P2Curve::new(eps)?;
    let anchor = Anchor::Fixed(c.south_pole());
    sizes
        .iter()
        .map(|&n| {
            let st = c.state(n, warp, 0.0)?;
            let u = to_uniform(&st, &reconstruct(&st, anchor)?)?;
            let g = reconstruct(&u.to_state(0.0, 0.0)?, anchor)?;
            let (mut er, mut ez, mut sr, mut sz) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
            for (r, z) in g.r.iter().zip(&g.z) {
                let (re, ze) = c.point(P2Curve::polar_angle(*r, *z));
                er = er.max((r - re).abs());
                ez = ez.max((z - ze).abs());
                sr = sr.max(re.abs());
                sz = sz.max(ze.abs());
            }
            Ok(P2Row {
                n,
                err_r: er / sr,
                err_z: ez / sz,
            })
        })
        .collect()
}

/// One step size of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub eps_k: f64,
    /// Relative max distance at equal parameter values.
    pub raw: f64,
    /// Relative max distance after both curves are regridded to arclength.
    pub geometric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub t_end: f64,
    pub dt_ref: f64,
    pub eps_k_ref: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slopes on log-log axes.
    pub raw_order: f64,
    pub geometric_order: f64,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("dt,eps_K,raw,geometric\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{}\n",
                r.dt,
                r.eps_k,
                io::fmt(r.raw),
                io::fmt(r.geometric)
            ));
        }
        s
    }
}

/// Evolves the configured problem to `t_end` with each step size and compares against a
/// reference run at `dt_ref`.
pub fn convergence(cfg: &RunConfig, dts: &[f64]) -> Result<ConvergenceTable> {
    cfg.validate()?;
    if cfg.problem == Problem::P2Test {
        return Err(Error::Config("p2test has no time evolution".into()));
    }
    if dts.len() < 3 {
        return Err(Error::Config(format!(
            "{} step sizes given, need at least 3 for a slope",
            dts.len()
        )));
    }
    if let Some(dt) = dts.iter().find(|&&dt| !(dt > cfg.dt_ref)) {
        return Err(Error::Config(format!(
            "step {dt} is not larger than the reference step {}",
            cfg.dt_ref
        )));
    }
    for &dt in dts.iter().chain(std::iter::once(&cfg.dt_ref)) {
        steps_to(cfg.t_end, dt)?;
    }
    with_threads(cfg.threads, || {
        let reference = evolve(cfg, cfg.dt_ref, cfg.eps_k_ref)?;
        let x_ref = reconstruct(&reference, Anchor::Fixed(0.0))?;
        let rows = dts
            .iter()
            .map(|&dt| {
                let eps_k = cfg.eps_k_for(dt);
                let st = evolve(cfg, dt, eps_k)?;
                let x = reconstruct(&st, Anchor::Fixed(0.0))?;
                Ok(ConvergenceRow {
                    dt,
                    eps_k,
                    raw: raw_distance(&x, &x_ref),
                    geometric: geometric_distance(&st, &reference)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let dts: Vec<f64> = rows.iter().map(|r| r.dt).collect();
        let raw: Vec<f64> = rows.iter().map(|r| r.raw).collect();
        let geo: Vec<f64> = rows.iter().map(|r| r.geometric).collect();
        Ok(ConvergenceTable {
            t_end: cfg.t_end,
            dt_ref: cfg.dt_ref,
            eps_k_ref: cfg.eps_k_ref,
            raw_order: observed_order(&dts, &raw),
            geometric_order: observed_order(&dts, &geo),
            rows,
        })
    })?
}

fn steps_to(t_end: f64, dt: f64) -> Result<usize> {
    let k = (t_end / dt).round();
    if k < 1.0 || (k * dt - t_end).abs() > 1e-9 * t_end {
        return Err(Error::Config(format!(
            "step {dt} does not divide t_end = {t_end}"
        )));
    }
    Ok(k as usize)
}

fn evolve(cfg: &RunConfig, dt: f64, eps_k: f64) -> Result<CurveState> {
    let mut sim = Simulation::with_step(cfg, dt, eps_k)?;
    let steps = steps_to(cfg.t_end, dt)?;
    for _ in 0..steps {
        sim.advance()?;
    }
    log::info!(
        "dt = {dt:e}: reached t = {} after {steps} steps",
        sim.state.t
    );
    Ok(sim.state)
}

/// Max over the nodes in `[0, pi]` of `|X - X_ref|`, relative to the max of `|X_ref|`.
pub fn raw_distance(x: &DerivedGeometry, x_ref: &DerivedGeometry) -> f64 {
    let half = x.n() / 2;
    let mut diff = 0.0_f64;
    let mut scale = 0.0_f64;
    for j in 0..=half {
        diff = diff.max((x.r[j] - x_ref.r[j]).hypot(x.z[j] - x_ref.z[j]));
        scale = scale.max(x_ref.r[j].hypot(x_ref.z[j]));
    }
    diff / scale
}

/// Least-squares slope of `log e` against `log dt`.
pub fn observed_order(dts: &[f64], errs: &[f64]) -> f64 {
    let x: Vec<f64> = dts.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = errs.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
