//! File formats: trajectory and regret CSVs (17 significant digits),
//! JSON-compatible specs for systems, estimates and realized models.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::arx::{ArxSystem, NoiseKind, NoiseSpec, TrajectoryLog};
use crate::error::{Error, Result};
use crate::harness::RegretTrace;
use crate::hokalman::{ParameterRadii, RealizedSystem};
use crate::sysid::LsEstimate;

/// 17 significant digits: round-trips every f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::Config("matrix rows must be non-empty".into()));
    }
    let ncols = rows[0].len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config(
            "matrix rows must be non-empty and rectangular".into(),
        ));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

/// Trajectory CSV: `t,u_0..u_{p-1},y_0..y_{m-1},loss` with a mandatory
/// header. States and noises are not part of the interchange format.
pub fn write_trajectory_csv(path: &Path, log: &TrajectoryLog) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let p = log.inputs.first().map_or(0, |u| u.len());
    let m = log.outputs.first().map_or(0, |y| y.len());
    let mut header = String::from("t");
    for j in 0..p {
        header.push_str(&format!(",u_{j}"));
    }
    for j in 0..m {
        header.push_str(&format!(",y_{j}"));
    }
    header.push_str(",loss");
    writeln!(w, "{header}")?;
    for t in 0..log.len() {
        let mut line = t.to_string();
        for j in 0..p {
            line.push(',');
            line.push_str(&fmt_f64(log.inputs[t][j]));
        }
        for j in 0..m {
            line.push(',');
            line.push_str(&fmt_f64(log.outputs[t][j]));
        }
        line.push(',');
        line.push_str(&fmt_f64(log.losses[t]));
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv(path: &Path) -> Result<TrajectoryLog> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty trajectory csv".into()))??;
    let cols: Vec<&str> = header.split(',').collect();
    let p = cols.iter().filter(|c| c.starts_with("u_")).count();
    let m = cols.iter().filter(|c| c.starts_with("y_")).count();
    if cols.first() != Some(&"t") || cols.last() != Some(&"loss") || m == 0 || p == 0 {
        return Err(Error::Config("malformed trajectory csv header".into()));
    }
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut losses = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 + p + m {
            return Err(Error::Config(format!(
                "trajectory csv row {} has {} fields, expected {}",
                lineno + 2,
                fields.len(),
                2 + p + m
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Config(format!("bad float '{s}' in csv: {e}")))
        };
        let u: Result<Vec<f64>> = fields[1..1 + p].iter().map(|s| parse(s)).collect();
        let y: Result<Vec<f64>> = fields[1 + p..1 + p + m].iter().map(|s| parse(s)).collect();
        inputs.push(DVector::from_vec(u?));
        outputs.push(DVector::from_vec(y?));
        losses.push(parse(fields[1 + p + m])?);
    }
    let mut log = TrajectoryLog::from_signals(inputs, outputs)?;
    log.losses = losses;
    Ok(log)
}

/// Regret CSV: `t,cost,comparator_cost,cum_regret`.
pub fn write_regret_csv(path: &Path, trace: &RegretTrace) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "t,cost,comparator_cost,cum_regret")?;
    for t in 0..trace.len() {
        writeln!(
            w,
            "{t},{},{},{}",
            fmt_f64(trace.costs[t]),
            fmt_f64(trace.comparator[t]),
            fmt_f64(trace.cum_regret[t])
        )?;
    }
    w.flush()?;
    Ok(())
}

/// One-row CSV with the identification diagnostics of a sysid-only cell.
pub fn write_sysid_cell_csv(path: &Path, cell: &crate::harness::CellResult) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "t,seed,est_error,sigma_min_rate,membership")?;
    writeln!(
        w,
        "{},{},{},{},{}",
        cell.t,
        cell.seed,
        cell.sysid_error.map_or_else(|| "nan".into(), fmt_f64),
        cell.sigma_min_rate.map_or_else(|| "nan".into(), fmt_f64),
        cell.membership
            .map_or_else(|| "nan".into(), |b| (b as u8).to_string()),
    )?;
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoiseSpecJson {
    pub kind: NoiseKind,
    pub sub_gaussian_r: f64,
    /// Row-major covariance.
    pub sigma_e: Vec<Vec<f64>>,
    pub sigma_e_sq_lower: f64,
}

/// JSON-compatible system description with row-major matrix arrays.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemSpec {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub noise: NoiseSpecJson,
}

impl SystemSpec {
    pub fn from_system(sys: &ArxSystem) -> Self {
        Self {
            n: sys.state_dim(),
            m: sys.output_dim(),
            p: sys.input_dim(),
            a: matrix_to_rows(sys.a()),
            b: matrix_to_rows(sys.b()),
            c: matrix_to_rows(sys.c()),
            f: matrix_to_rows(sys.f()),
            noise: NoiseSpecJson {
                kind: sys.noise.kind,
                sub_gaussian_r: sys.noise.sub_gaussian_r,
                sigma_e: matrix_to_rows(&sys.noise.sigma_e),
                sigma_e_sq_lower: sys.noise.sigma_e_sq_lower,
            },
        }
    }

    pub fn to_system(&self) -> Result<ArxSystem> {
        let a = rows_to_matrix(&self.a)?;
        let b = rows_to_matrix(&self.b)?;
        let c = rows_to_matrix(&self.c)?;
        let f = rows_to_matrix(&self.f)?;
        if a.nrows() != self.n || b.ncols() != self.p || c.nrows() != self.m {
            return Err(Error::Config(
                "declared dimensions do not match matrices".into(),
            ));
        }
        let noise = NoiseSpec::new(
            self.noise.kind,
            rows_to_matrix(&self.noise.sigma_e)?,
            self.noise.sub_gaussian_r,
            self.noise.sigma_e_sq_lower,
        )?;
        ArxSystem::new(a, b, c, f, noise)
    }
}

/// Serialized least-squares estimate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateSpec {
    pub h: usize,
    pub m: usize,
    pub p: usize,
    pub lambda: f64,
    pub t: usize,
    #[serde(default)]
    pub beta: Option<f64>,
    pub g_hat: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl EstimateSpec {
    pub fn from_estimate(est: &LsEstimate) -> Self {
        Self {
            h: est.h,
            m: est.m,
            p: est.p,
            lambda: est.lambda,
            t: est.t,
            beta: est.beta,
            g_hat: matrix_to_rows(&est.g_hat),
            v: matrix_to_rows(&est.v),
        }
    }

    pub fn to_estimate(&self) -> Result<LsEstimate> {
        Ok(LsEstimate {
            g_hat: rows_to_matrix(&self.g_hat)?,
            v: rows_to_matrix(&self.v)?,
            lambda: self.lambda,
            t: self.t,
            beta: self.beta,
            h: self.h,
            m: self.m,
            p: self.p,
        })
    }
}

/// Serialized realized model plus its confidence radii report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RealizedSpec {
    pub n: usize,
    pub sigma_n: f64,
    pub stable: bool,
    /// Order suggested by the largest spectral gap of the Hankel (diagnostic).
    #[serde(default)]
    pub order_hint: Option<usize>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    #[serde(default)]
    pub radii: Option<ParameterRadii>,
}

impl RealizedSpec {
    pub fn from_realized(r: &RealizedSystem, radii: Option<ParameterRadii>) -> Self {
        Self {
            n: r.n,
            sigma_n: r.sigma_n,
            stable: r.is_stable(),
            order_hint: None,
            a: matrix_to_rows(&r.a_hat),
            b: matrix_to_rows(&r.b_hat),
            c: matrix_to_rows(&r.c_hat),
            f: matrix_to_rows(&r.f_hat),
            radii,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let f = std::fs::File::open(path)?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}
