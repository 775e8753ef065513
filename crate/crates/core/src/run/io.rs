use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::curve::{CurveState, DerivedGeometry};
use crate::error::{Error, Result};
use crate::spectral;

pub const SNAPSHOT_HEADER: &str = "alpha,r,z,theta,s_alpha,gamma,kappa_z,kappa_r,GL";
pub const DIAG_HEADER: &str =
    "step,t,L,ds_min,r_min,z_min,volume,closure_residual,cfl_ratio,filtered_modes";

/// Seventeen significant digits, enough to read back the same `f64`.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("snap_{step:08}.csv"))
}

pub fn meta_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("meta_{step}.txt"))
}

pub fn rprev_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("rprev_{step}.csv"))
}

/// Companion record of a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMeta {
    pub step: usize,
    pub t: f64,
    pub l: f64,
    pub dt: f64,
    pub sigma: f64,
    pub neck_alpha: Option<f64>,
}

impl SnapshotMeta {
    fn render(&self) -> String {
        let mut s = format!(
            "step={}\nt={}\nL={}\ndt={}\nsigma={}\n",
            self.step,
            fmt(self.t),
            fmt(self.l),
            fmt(self.dt),
            fmt(self.sigma)
        );
        if let Some(a) = self.neck_alpha {
            s.push_str(&format!("neck_alpha={}\n", fmt(a)));
        }
        s
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut meta = SnapshotMeta {
            step: 0,
            t: f64::NAN,
            l: f64::NAN,
            dt: f64::NAN,
            sigma: 0.0,
            neck_alpha: None,
        };
        for line in text.lines() {
            let Some((k, v)) = line.split_once('=') else {
                continue;
            };
            let v = v.trim();
            let parse = |v: &str| -> Result<f64> { v.parse().map_err(|_| bad_field(path, k)) };
            match k.trim() {
                "step" => meta.step = v.parse().map_err(|_| bad_field(path, k))?,
                "t" => meta.t = parse(v)?,
                "L" => meta.l = parse(v)?,
                "dt" => meta.dt = parse(v)?,
                "sigma" => meta.sigma = parse(v)?,
                "neck_alpha" => meta.neck_alpha = Some(parse(v)?),
                _ => {}
            }
        }
        if !meta.t.is_finite() {
            return Err(Error::Io(format!("{}: no time recorded", path.display())));
        }
        Ok(meta)
    }
}

fn bad_field(path: &Path, key: &str) -> Error {
    Error::Io(format!("{}: cannot parse `{key}`", path.display()))
}

/// Writes `snap_<step>.csv` and `meta_<step>.txt`.
pub fn write_snapshot(
    dir: &Path,
    state: &CurveState,
    geom: &DerivedGeometry,
    gl: &[f64],
    meta: &SnapshotMeta,
) -> Result<PathBuf> {
    let path = snapshot_path(dir, meta.step);
    write_snapshot_to(&path, state, geom, gl)?;
    fs::write(meta_path(dir, meta.step), meta.render())?;
    Ok(path)
}

pub fn write_snapshot_to(
    path: &Path,
    state: &CurveState,
    geom: &DerivedGeometry,
    gl: &[f64],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{SNAPSHOT_HEADER}")?;
    for (j, alpha) in spectral::grid(state.n()).into_iter().enumerate() {
        let row = [
            alpha,
            geom.r[j],
            geom.z[j],
            state.theta[j],
            state.s_alpha[j],
            state.gamma[j],
            geom.kappa_z[j],
            geom.kappa_r[j],
            gl[j],
        ];
        writeln!(w, "{}", row.map(fmt).join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Columns of a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub alpha: Vec<f64>,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub theta: Vec<f64>,
    pub s_alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub kappa_z: Vec<f64>,
    pub kappa_r: Vec<f64>,
    pub gl: Vec<f64>,
}

impl Snapshot {
    pub fn read(path: &Path) -> Result<Self> {
        let cols = read_columns(path, SNAPSHOT_HEADER)?;
        let mut it = cols.into_iter();
        let mut next = || it.next().unwrap_or_default();
        Ok(Snapshot {
            alpha: next(),
            r: next(),
            z: next(),
            theta: next(),
            s_alpha: next(),
            gamma: next(),
            kappa_z: next(),
            kappa_r: next(),
            gl: next(),
        })
    }

    pub fn state(&self, t: f64, sigma: f64) -> Result<CurveState> {
        CurveState::new(
            t,
            self.theta.clone(),
            self.s_alpha.clone(),
            self.gamma.clone(),
            sigma,
        )
    }
}

/// Reads a headered CSV of floats into columns, checking the header.
pub fn read_columns(path: &Path, header: &str) -> Result<Vec<Vec<f64>>> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines.next().transpose()?.unwrap_or_default();
    if first.trim() != header {
        return Err(Error::Io(format!(
            "{}: unexpected header `{}`",
            path.display(),
            first.trim()
        )));
    }
    let width = header.split(',').count();
    let mut cols = vec![Vec::new(); width];
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(Error::Io(format!(
                "{}: row {} has {} fields",
                path.display(),
                i + 2,
                fields.len()
            )));
        }
        for (c, f) in cols.iter_mut().zip(fields) {
            c.push(f.trim().parse().map_err(|_| {
                Error::Io(format!(
                    "{}: row {}: cannot parse `{f}`",
                    path.display(),
                    i + 2
                ))
            })?);
        }
    }
    Ok(cols)
}

pub fn write_rprev(dir: &Path, step: usize, r: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(rprev_path(dir, step))?);
    writeln!(w, "R")?;
    for v in r {
        writeln!(w, "{}", fmt(*v))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rprev(dir: &Path, step: usize) -> Result<Option<Vec<f64>>> {
    let path = rprev_path(dir, step);
    if !path.exists() {
        return Ok(None);
    }
    Ok(read_columns(&path, "R")?.pop())
}

/// One line of `diag.csv`. Neck columns are `NaN` while the shape has no neck.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagRow {
    pub step: usize,
    pub t: f64,
    pub l: f64,
    pub ds_min: f64,
    pub r_min: f64,
    pub z_min: f64,
    pub volume: f64,
    pub closure_residual: f64,
    pub cfl_ratio: f64,
    pub filtered_modes: usize,
}

impl DiagRow {
    fn render(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.step,
            fmt(self.t),
            fmt(self.l),
            fmt(self.ds_min),
            fmt(self.r_min),
            fmt(self.z_min),
            fmt(self.volume),
            fmt(self.closure_residual),
            fmt(self.cfl_ratio),
            self.filtered_modes
        )
    }
}

/// Append-only writer for `diag.csv`.
pub struct DiagWriter {
    out: BufWriter<File>,
}

impl DiagWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{DIAG_HEADER}")?;
        Ok(Self { out })
    }

    /// Reopens an existing file after dropping every row past `last_step`.
    pub fn resume(path: &Path, last_step: usize) -> Result<(Self, Vec<DiagRow>)> {
        let rows: Vec<DiagRow> = read_diag(path)?
            .into_iter()
            .filter(|r| r.step <= last_step)
            .collect();
        let mut w = Self::create(path)?;
        for r in &rows {
            w.push(r)?;
        }
        Ok((w, rows))
    }

    pub fn push(&mut self, row: &DiagRow) -> Result<()> {
        writeln!(self.out, "{}", row.render())?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn read_diag(path: &Path) -> Result<Vec<DiagRow>> {
    let cols = read_columns(path, DIAG_HEADER)?;
    Ok((0..cols[0].len())
        .map(|i| DiagRow {
            step: cols[0][i] as usize,
            t: cols[1][i],
            l: cols[2][i],
            ds_min: cols[3][i],
            r_min: cols[4][i],
            z_min: cols[5][i],
            volume: cols[6][i],
            closure_residual: cols[7][i],
            cfl_ratio: cols[8][i],
            filtered_modes: cols[9][i] as usize,
        })
        .collect())
}

/// Largest step with a snapshot, meta file and all, in `dir`.
pub fn latest_snapshot(dir: &Path) -> Result<Option<usize>> {
    if !dir.exists() {
        return Ok(None);
    }
    let mut best = None;
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name();
        let name = name.to_string_lossy();
        let Some(step) = name
            .strip_prefix("snap_")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse::<usize>().ok())
        else {
            continue;
        };
        if meta_path(dir, step).exists() && best.map_or(true, |b| step > b) {
            best = Some(step);
        }
    }
    Ok(best)
}
