use std::collections::HashMap;
use std::path::{Path, PathBuf};

use evalexpr::{
    ContextWithMutableFunctions, ContextWithMutableVariables, DefaultNumericTypes, Function,
    HashMapContext, Node, Value,
};

use crate::curve::{Anchor, CurveState};
use crate::error::{Error, Result};
use crate::meshref::GuidelineParams;
use crate::problems;
use crate::spectral;
use crate::timestep::{MeshMode, StepConfig};

/// Built-in initial conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Pinchoff,
    BagBreakup,
    P2Test,
    Custom,
}

impl Problem {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "pinchoff" => Ok(Problem::Pinchoff),
            "bagbreakup" => Ok(Problem::BagBreakup),
            "p2test" => Ok(Problem::P2Test),
            "custom" => Ok(Problem::Custom),
            other => Err(Error::Config(format!("unknown problem `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Problem::Pinchoff => "pinchoff",
            Problem::BagBreakup => "bagbreakup",
            Problem::P2Test => "p2test",
            Problem::Custom => "custom",
        }
    }
}

/// Per-key overrides of [`GuidelineParams::defaults`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GuidelineOverrides {
    pub a: Option<f64>,
    pub d: Option<f64>,
    pub delta_r: Option<f64>,
    pub k_max: Option<usize>,
    pub n_up: Option<usize>,
    pub eps_rel: Option<f64>,
}

/// Everything a run needs. Built from a flat `key = value` file; the `problem` key
/// selects a preset and the remaining keys override it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: Problem,
    pub n: usize,
    pub dt: f64,
    pub eps_k: f64,
    pub sigma: f64,
    /// Expression in `alpha` for the initial sheet strength of a custom run.
    pub gamma0: Option<String>,
    pub guideline: GuidelineOverrides,
    pub uniform_mesh: bool,
    /// Quadrature nodes; `None` means the default for `n`.
    pub m_quad: Option<usize>,
    pub c_cfl: f64,
    pub symmetrize: bool,
    pub t_end: f64,
    /// Stop early once the tracked neck is at most this thin.
    pub stop_r_min: Option<f64>,
    pub snapshot_every: usize,
    pub outdir: PathBuf,
    pub z_anchor: Anchor,
    /// Worker threads; 0 leaves the choice to the thread pool.
    pub threads: usize,
    pub resume: bool,
    /// `(dt, eps_K)` pairs used by the convergence harness.
    pub eps_k_schedule: Vec<(f64, f64)>,
    pub dt_ref: f64,
    pub eps_k_ref: f64,
    pub p2_eps: f64,
    pub p2_warp: f64,
    pub p2_sizes: Vec<usize>,
}

impl RunConfig {
    pub fn preset(problem: Problem) -> Self {
        let base = RunConfig {
            problem,
            n: 512,
            dt: 2e-4,
            eps_k: 1e-11,
            sigma: 0.2,
            gamma0: None,
            guideline: GuidelineOverrides::default(),
            uniform_mesh: false,
            m_quad: None,
            c_cfl: 2.5,
            symmetrize: true,
            t_end: 1.0,
            stop_r_min: None,
            snapshot_every: 500,
            outdir: PathBuf::from("out"),
            z_anchor: Anchor::Fixed(0.0),
            threads: 0,
            resume: false,
            eps_k_schedule: Vec::new(),
            dt_ref: 1e-5,
            eps_k_ref: 1e-14,
            p2_eps: 2.0 / 7.0,
            p2_warp: 0.0,
            p2_sizes: vec![32, 48, 64, 80, 96, 112, 128, 144, 160, 176, 192, 224, 256],
        };
        match problem {
            Problem::Pinchoff => RunConfig {
                t_end: 1.9,
                z_anchor: Anchor::Centroid,
                ..base
            },
            Problem::BagBreakup => RunConfig {
                sigma: 0.04,
                t_end: 4.9,
                z_anchor: Anchor::Fixed(-1.0),
                ..base
            },
            Problem::P2Test | Problem::Custom => base,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses and validates a configuration text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: HashMap<String, (String, usize)> = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim().to_ascii_lowercase();
            if entries
                .insert(key.clone(), (value.trim().to_string(), lineno + 1))
                .is_some()
            {
                return Err(Error::Config(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
        }
        let problem = match entries.remove("problem") {
            Some((v, _)) => Problem::parse(&v)?,
            None => return Err(Error::Config("missing key `problem`".into())),
        };
        let mut cfg = RunConfig::preset(problem);
        let mut keys: Vec<(String, (String, usize))> = entries.into_iter().collect();
        keys.sort_by_key(|(_, (_, line))| *line);
        for (key, (value, line)) in keys {
            cfg.set(&key, &value).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {line}: {msg}")),
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let g = &mut self.guideline;
        match key {
            "n" => self.n = num(key, value)?,
            "dt" => self.dt = num(key, value)?,
            "eps_k" => self.eps_k = num(key, value)?,
            "sigma" => self.sigma = num(key, value)?,
            "gamma0" => self.gamma0 = Some(value.to_string()),
            "gl_a" => g.a = Some(num(key, value)?),
            "gl_d" => g.d = Some(num(key, value)?),
            "delta_r" => g.delta_r = Some(num(key, value)?),
            "k_max" => g.k_max = Some(num(key, value)?),
            "n_up" => g.n_up = Some(num(key, value)?),
            "eps_rel" => g.eps_rel = Some(num(key, value)?),
            "mesh" => {
                self.uniform_mesh = match value {
                    "adaptive" => false,
                    "uniform" => true,
                    _ => {
                        return Err(Error::Config(format!(
                            "mesh must be `adaptive` or `uniform`, got `{value}`"
                        )))
                    }
                }
            }
            "m_quad" => self.m_quad = Some(num(key, value)?),
            "c_cfl" => self.c_cfl = num(key, value)?,
            "symmetrize" => self.symmetrize = num(key, value)?,
            "t_end" => self.t_end = num(key, value)?,
            "stop_r_min" => self.stop_r_min = Some(num(key, value)?),
            "snapshot_every" => self.snapshot_every = num(key, value)?,
            "outdir" => self.outdir = PathBuf::from(value),
            "z_anchor" => {
                self.z_anchor = if value == "centroid" {
                    Anchor::Centroid
                } else {
                    Anchor::Fixed(num(key, value)?)
                }
            }
            "threads" => self.threads = num(key, value)?,
            "resume" => self.resume = num(key, value)?,
            "eps_k_schedule" => {
                self.eps_k_schedule = list(value)
                    .map(|pair| {
                        let (dt, eps) = pair.split_once(':').ok_or_else(|| {
                            Error::Config(format!("schedule entry `{pair}` is not `dt:eps_K`"))
                        })?;
                        Ok((num(key, dt.trim())?, num(key, eps.trim())?))
                    })
                    .collect::<Result<_>>()?
            }
            "dt_ref" => self.dt_ref = num(key, value)?,
            "eps_k_ref" => self.eps_k_ref = num(key, value)?,
            "p2_eps" => self.p2_eps = num(key, value)?,
            "p2_warp" => self.p2_warp = num(key, value)?,
            "p2_sizes" => {
                self.p2_sizes = list(value).map(|v| num(key, v)).collect::<Result<_>>()?
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn guideline_params(&self) -> GuidelineParams {
        let d = GuidelineParams::defaults(self.n);
        let g = &self.guideline;
        GuidelineParams {
            a: g.a.unwrap_or(d.a),
            d: g.d.unwrap_or(d.d),
            delta_r: g.delta_r.unwrap_or(d.delta_r),
            k_max: g.k_max.unwrap_or(d.k_max),
            n_up: g.n_up.unwrap_or(d.n_up),
            eps_rel: g.eps_rel.unwrap_or(d.eps_rel),
        }
    }

    /// Integrator settings for a given step size and filter level.
    pub fn step_config_with(&self, dt: f64, eps_k: f64) -> StepConfig {
        let mut sc = StepConfig::new(self.n, dt);
        sc.eps_k = eps_k;
        sc.c_cfl = self.c_cfl;
        if let Some(m) = self.m_quad {
            sc.m_quad = m;
        }
        sc.mesh = if self.uniform_mesh {
            MeshMode::Uniform
        } else {
            MeshMode::Adaptive(self.guideline_params())
        };
        sc.symmetrize = self.symmetrize;
        sc
    }

    pub fn step_config(&self) -> StepConfig {
        self.step_config_with(self.dt, self.eps_k)
    }

    /// Filter level for a step size: the schedule entry when one matches, `eps_K` otherwise.
    pub fn eps_k_for(&self, dt: f64) -> f64 {
        self.eps_k_schedule
            .iter()
            .find(|(d, _)| (d - dt).abs() <= 1e-9 * dt)
            .map(|&(_, e)| e)
            .unwrap_or(self.eps_k)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.problem == Problem::P2Test {
            if self.p2_sizes.is_empty() {
                return bad("p2_sizes is empty".into());
            }
            if let Some(n) = self
                .p2_sizes
                .iter()
                .find(|&&n| spectral::check_grid(n).is_err())
            {
                return bad(format!("p2_sizes entry {n} is not an even size >= 8"));
            }
            if !(self.p2_eps.abs() < 0.5 && self.p2_warp.abs() < 1.0) {
                return bad("p2_eps must lie in (-0.5, 0.5) and p2_warp in (-1, 1)".into());
            }
            return Ok(());
        }
        if self.n < 8 || !self.n.is_power_of_two() {
            return bad(format!("N = {} must be a power of two, at least 8", self.n));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be positive", self.t_end));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma = {} must be non-negative", self.sigma));
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every must be at least 1".into());
        }
        if let Some(r) = self.stop_r_min {
            if !(r > 0.0) {
                return bad(format!("stop_r_min = {r} must be positive"));
            }
        }
        if !(self.dt_ref > 0.0) || !(self.eps_k_ref >= 0.0) {
            return bad("dt_ref must be positive and eps_K_ref non-negative".into());
        }
        if self
            .eps_k_schedule
            .iter()
            .any(|&(d, e)| !(d > 0.0) || !(0.0..1.0).contains(&e))
        {
            return bad("eps_K_schedule needs positive steps and filter levels in [0, 1)".into());
        }
        if self.problem == Problem::Custom && self.gamma0.is_none() {
            return bad("problem = custom needs a gamma0 expression".into());
        }
        if let Some(expr) = &self.gamma0 {
            if self.problem != Problem::Custom {
                return bad("gamma0 is only used with problem = custom".into());
            }
            GammaExpr::compile(expr)?;
        }
        self.step_config().validate(self.n).map_err(config_error)?;
        Ok(())
    }

    /// Initial state of the configured problem.
    pub fn initial_state(&self) -> Result<CurveState> {
        let n = self.n;
        let st = match self.problem {
            Problem::Pinchoff => problems::pinchoff(n)?,
            Problem::BagBreakup => problems::bagbreakup(n)?,
            Problem::P2Test => return Err(Error::Config("p2test has no time evolution".into())),
            Problem::Custom => {
                let mut expr = GammaExpr::compile(self.gamma0.as_deref().unwrap_or_default())?;
                let gamma = spectral::grid(n)
                    .iter()
                    .map(|&a| expr.eval(a))
                    .collect::<Result<Vec<f64>>>()?;
                let st = CurveState::sphere(n, 1.0, gamma, self.sigma)?;
                let scale = st.gamma.iter().fold(1.0_f64, |m, g| m.max(g.abs()));
                if st.symmetry_residual() > 1e-12 * scale {
                    return Err(Error::Config("gamma0 must be odd in alpha".into()));
                }
                return Ok(st);
            }
        };
        Ok(CurveState {
            sigma: self.sigma,
            ..st
        })
    }
}

fn config_error(e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => Error::Config(format!("{name}: {reason}")),
        other => other,
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{value}` for key `{key}`")))
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// A compiled scalar expression in `alpha`, with `pi` and the usual elementary functions.
pub struct GammaExpr {
    tree: Node<DefaultNumericTypes>,
    ctx: HashMapContext<DefaultNumericTypes>,
}

impl GammaExpr {
    pub fn compile(expr: &str) -> Result<Self> {
        let tree = evalexpr::build_operator_tree::<DefaultNumericTypes>(expr)
            .map_err(|e| Error::Config(format!("gamma0 `{expr}`: {e}")))?;
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        let unary: [(&str, fn(f64) -> f64); 8] = [
            ("sin", f64::sin),
            ("cos", f64::cos),
            ("tan", f64::tan),
            ("exp", f64::exp),
            ("sinh", f64::sinh),
            ("cosh", f64::cosh),
            ("tanh", f64::tanh),
            ("sqrt", f64::sqrt),
        ];
        for (name, f) in unary {
            ctx.set_function(
                name.into(),
                Function::new(move |v: &Value| Ok(Value::from_float(f(v.as_number()?)))),
            )
            .map_err(|e| Error::Config(e.to_string()))?;
        }
        ctx.set_value("pi".into(), Value::from_float(std::f64::consts::PI))
            .map_err(|e| Error::Config(e.to_string()))?;
        let mut out = GammaExpr { tree, ctx };
        out.eval(0.5)?;
        Ok(out)
    }

    pub fn eval(&mut self, alpha: f64) -> Result<f64> {
        self.ctx
            .set_value("alpha".into(), Value::from_float(alpha))
            .map_err(|e| Error::Config(e.to_string()))?;
        let v = self
            .tree
            .eval_number_with_context(&self.ctx)
            .map_err(|e| Error::Config(format!("gamma0: {e}")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Config(format!(
                "gamma0 is not finite at alpha = {alpha}"
            )))
        }
    }
}
