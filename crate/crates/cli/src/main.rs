use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use axisheet::analysis::{fit_scaling, ScalingSeries};
use axisheet::curve::{reconstruct, Anchor};
use axisheet::meshref::{build_guideline, GuidelineParams};
use axisheet::reparam::to_uniform;
use axisheet::run::io::{self, SnapshotMeta};
use axisheet::run::{self, RunConfig, RunReport};
use axisheet::Error;

#[derive(Parser)]
#[command(
    name = "axisheet",
    version,
    about = "Axisymmetric vortex sheets with surface tension"
)]
struct Cli {
    /// Log level when RUST_LOG is unset
    #[arg(long, global = true, default_value = "info")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file
    Run { config: PathBuf },
    /// Step-size convergence study against a reference run
    Convergence {
        config: PathBuf,
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        dts: Vec<f64>,
    },
    /// Regrid a snapshot to the arclength parametrization
    Regrid {
        snapshot: PathBuf,
        /// Output file; defaults to `<snapshot>_uniform.csv`
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the pinch-off scaling law to a diagnostics file
    Analyze {
        diag: PathBuf,
        #[arg(long, num_args = 2, value_names = ["T_A", "T_B"])]
        window: Option<Vec<f64>>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter { .. } | Error::InvalidGridSize(_) => 2,
        Error::Io(_) => 1,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(&cli.log)).init();
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Convergence { config, dts } => cmd_convergence(&config, &dts),
        Command::Regrid { snapshot, out } => cmd_regrid(&snapshot, out),
        Command::Analyze { diag, window } => cmd_analyze(&diag, window.map(|w| (w[0], w[1]))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn cmd_run(path: &Path) -> Result<(), Error> {
    let cfg = RunConfig::from_file(path)?;
    match run::run(&cfg)? {
        RunReport::P2Sweep(rows) => {
            println!("N,err_r,err_z");
            for r in rows {
                println!("{},{:e},{:e}", r.n, r.err_r, r.err_z);
            }
        }
        RunReport::Evolution(s) => {
            println!("steps {} t {} stop {:?}", s.steps, s.state.t, s.stop);
            println!("relative volume change {:e}", s.volume_drift);
            if let Some(f) = s.fit {
                println!(
                    "scaling fit over [{}, {}] ({} samples): t_p {} z_p {} R2 {} / {}",
                    f.window.0, f.window.1, f.samples, f.t_p, f.z_p, f.r2_r, f.r2_z
                );
            }
            println!("last snapshot {}", s.last_snapshot.display());
        }
    }
    Ok(())
}

fn cmd_convergence(path: &Path, dts: &[f64]) -> Result<(), Error> {
    let cfg = RunConfig::from_file(path)?;
    let table = run::convergence(&cfg, dts)?;
    std::fs::create_dir_all(&cfg.outdir)?;
    std::fs::write(cfg.outdir.join("convergence.csv"), table.to_csv())?;
    print!("{}", table.to_csv());
    println!(
        "observed order: raw {:.3}, regridded {:.3}",
        table.raw_order, table.geometric_order
    );
    Ok(())
}

fn cmd_regrid(path: &Path, out: Option<PathBuf>) -> Result<(), Error> {
    let snap = io::Snapshot::read(path)?;
    let meta = meta_for(path).and_then(|m| SnapshotMeta::read(&m).ok());
    let (t, sigma) = meta.map_or((0.0, 0.0), |m| (m.t, m.sigma));
    let state = snap.state(t, sigma)?;
    let anchor = Anchor::Fixed(snap.z.first().copied().unwrap_or(0.0));
    let uniform = to_uniform(&state, &reconstruct(&state, anchor)?)?.to_state(t, sigma)?;
    let geom = reconstruct(&uniform, anchor)?;
    let params = GuidelineParams::defaults(uniform.n());
    let gl = build_guideline(&uniform, &geom, &params, &params.plan()?)?.gl_at_nodes;
    let out = out.unwrap_or_else(|| {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        path.with_file_name(format!("{stem}_uniform.csv"))
    });
    io::write_snapshot_to(&out, &uniform, &geom, &gl)?;
    println!("wrote {}", out.display());
    Ok(())
}

/// `meta_<step>.txt` next to `snap_<step>.csv`.
fn meta_for(snapshot: &Path) -> Option<PathBuf> {
    let name = snapshot.file_name()?.to_str()?;
    let step: usize = name
        .strip_prefix("snap_")?
        .strip_suffix(".csv")?
        .parse()
        .ok()?;
    Some(io::meta_path(snapshot.parent()?, step))
}

fn cmd_analyze(path: &Path, window: Option<(f64, f64)>) -> Result<(), Error> {
    let rows = io::read_diag(path)?;
    let mut series = ScalingSeries::new();
    for r in rows.iter().filter(|r| r.r_min.is_finite()) {
        if series.times.last().map_or(true, |&t| r.t > t) {
            series.push(r.t, r.r_min, r.z_min);
        }
    }
    let fit = fit_scaling(&series, window).map_err(|e| Error::Config(e.to_string()))?;
    println!("window {} {}", fit.window.0, fit.window.1);
    println!("samples {}", fit.samples);
    println!("t_p {}", fit.t_p);
    println!("z_p {}", fit.z_p);
    println!("r2_r {}", fit.r2_r);
    println!("r2_z {}", fit.r2_z);
    Ok(())
}
