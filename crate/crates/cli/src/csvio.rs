//! Fixed-schema CSV serialization of planned and simulated time series.
//!
//! One row per sample:
//! `t, pL_x, pL_y, pL_z, roll, pitch, yaw,` then per carrier `i`
//! `pRi_x, pRi_y, pRi_z, vRi_x, vRi_y, vRi_z, speedi, Ti,` then the
//! internal-force components `lam1..lamM`, their rates `dlam1..dlamM`, and
//! the direction-change outputs `z1..zN`. Angles are radians. Numbers carry
//! 17 significant digits so a parsed series replays bit-exactly. Files are
//! written atomically (temp file + rename).

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use slingloiter_core::geometry::{Rotation, Vec3};
use slingloiter_core::planner::PlannedTrajectory;
use slingloiter_core::simulator::SimSeries;

use crate::error::CliError;

pub fn header(cables: usize, lambda_dim: usize) -> Vec<String> {
    let mut cols = vec![
        "t".into(),
        "pL_x".into(),
        "pL_y".into(),
        "pL_z".into(),
        "roll".into(),
        "pitch".into(),
        "yaw".into(),
    ];
    for i in 1..=cables {
        for suffix in ["x", "y", "z"] {
            cols.push(format!("pR{i}_{suffix}"));
        }
        for suffix in ["x", "y", "z"] {
            cols.push(format!("vR{i}_{suffix}"));
        }
        cols.push(format!("speed{i}"));
        cols.push(format!("T{i}"));
    }
    for j in 1..=lambda_dim {
        cols.push(format!("lam{j}"));
    }
    for j in 1..=lambda_dim {
        cols.push(format!("dlam{j}"));
    }
    for i in 1..=cables {
        cols.push(format!("z{i}"));
    }
    cols
}

fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `rows` under `header` to `path` through a temp file in the same
/// directory, so readers never observe a half-written file.
pub fn write_rows(
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    {
        let out = tmp.as_file_mut();
        let mut buf = std::io::BufWriter::new(out);
        writeln!(buf, "{}", header.join(","))?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            let mut first = true;
            for v in row {
                if !first {
                    buf.write_all(b",")?;
                }
                first = false;
                buf.write_all(format_value(v).as_bytes())?;
            }
            buf.write_all(b"\n")?;
        }
        buf.flush()?;
    }
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("cannot persist {}: {e}", path.display())))?;
    Ok(())
}

fn pose_columns(position: &Vec3, attitude: &Rotation) -> [f64; 6] {
    let (roll, pitch, yaw) = attitude.to_rpy();
    [position.x, position.y, position.z, roll, pitch, yaw]
}

/// Serializes a planned trajectory; the load pose columns carry the
/// constant equilibrium pose the plan holds.
pub fn write_plan_csv(
    path: &Path,
    plan: &PlannedTrajectory,
    position: &Vec3,
    attitude: &Rotation,
    z: &[Vec<f64>],
) -> Result<(), CliError> {
    let n = plan.cable_count();
    let m = plan.lambda.first().map_or(0, |l| l.len());
    let header = header(n, m);
    let pose = pose_columns(position, attitude);
    let rows = (0..plan.sample_count()).map(|k| {
        let mut row = Vec::with_capacity(header.len());
        row.push(plan.times[k]);
        row.extend_from_slice(&pose);
        for i in 0..n {
            let cable = &plan.cables[i];
            row.extend_from_slice(cable.position[k].as_slice());
            row.extend_from_slice(cable.velocity[k].as_slice());
            row.push(cable.velocity[k].norm());
            row.push(cable.tension[k]);
        }
        row.extend(plan.lambda[k].iter());
        row.extend(plan.lambda_rate[k].iter());
        for zi in z {
            row.push(zi[k]);
        }
        row
    });
    write_rows(path, &header, rows)
}

/// Serializes a simulation run.
pub fn write_sim_csv(path: &Path, series: &SimSeries) -> Result<(), CliError> {
    let n = series.carrier_position.len();
    let m = series.lambda.first().map_or(0, |l| l.len());
    let header = header(n, m);
    let rows = (0..series.sample_count()).map(|k| {
        let mut row = Vec::with_capacity(header.len());
        row.push(series.times[k]);
        row.extend_from_slice(series.load_position[k].as_slice());
        let (roll, pitch, yaw) = series.load_attitude[k].to_rpy();
        row.extend_from_slice(&[roll, pitch, yaw]);
        for i in 0..n {
            row.extend_from_slice(series.carrier_position[i][k].as_slice());
            row.extend_from_slice(series.carrier_velocity[i][k].as_slice());
            row.push(series.speed(i, k));
            row.push(series.tension[i][k]);
        }
        row.extend(series.lambda[k].iter());
        row.extend(series.lambda_rate[k].iter());
        for i in 0..n {
            row.push(series.z[i][k]);
        }
        row
    });
    write_rows(path, &header, rows)
}

/// Columns recovered from a stored series, enough to re-run the verdicts.
pub struct CsvSeries {
    pub times: Vec<f64>,
    /// `[carrier][sample]`
    pub carrier_velocity: Vec<Vec<Vec3>>,
    pub tension: Vec<Vec<f64>>,
    pub lambda_rate: Vec<DVector<f64>>,
    pub z: Vec<Vec<f64>>,
}

impl CsvSeries {
    pub fn speed(&self, carrier: usize, sample: usize) -> f64 {
        self.carrier_velocity[carrier][sample].norm()
    }
}

/// Parses a series written by [`write_plan_csv`]/[`write_sim_csv`],
/// validating the header against the cable count and internal-force
/// dimension of the configuration it is checked against.
pub fn read_series_csv(path: &Path, cables: usize, lambda_dim: usize) -> Result<CsvSeries, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let expected = header(cables, lambda_dim);
    let mut lines = text.lines();
    let head = lines
        .next()
        .ok_or_else(|| CliError::Config(format!("{}: empty file", path.display())))?;
    let got: Vec<&str> = head.split(',').collect();
    if got != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(CliError::Config(format!(
            "{}: header does not match the expected series schema for {cables} cables / {lambda_dim} internal forces",
            path.display()
        )));
    }

    let mut series = CsvSeries {
        times: Vec::new(),
        carrier_velocity: vec![Vec::new(); cables],
        tension: vec![Vec::new(); cables],
        lambda_rate: Vec::new(),
        z: vec![Vec::new(); cables],
    };
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| {
                CliError::Config(format!("{}: row {}: {e}", path.display(), lineno + 2))
            })?;
        if fields.len() != expected.len() {
            return Err(CliError::Config(format!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                lineno + 2,
                fields.len(),
                expected.len()
            )));
        }
        if fields.iter().any(|f| !f.is_finite()) {
            return Err(CliError::Config(format!(
                "{}: row {} contains non-finite values",
                path.display(),
                lineno + 2
            )));
        }
        series.times.push(fields[0]);
        for i in 0..cables {
            let base = 7 + 8 * i;
            series.carrier_velocity[i].push(Vec3::new(
                fields[base + 3],
                fields[base + 4],
                fields[base + 5],
            ));
            series.tension[i].push(fields[base + 7]);
        }
        let lam_base = 7 + 8 * cables;
        series.lambda_rate.push(DVector::from_iterator(
            lambda_dim,
            fields[lam_base + lambda_dim..lam_base + 2 * lambda_dim]
                .iter()
                .copied(),
        ));
        let z_base = lam_base + 2 * lambda_dim;
        for i in 0..cables {
            series.z[i].push(fields[z_base + i]);
        }
    }
    if series.times.is_empty() {
        return Err(CliError::Config(format!("{}: no data rows", path.display())));
    }
    Ok(series)
}

/// Atomic pretty-printed JSON dump.
pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    serde_json::to_writer_pretty(tmp.as_file_mut(), value)
        .map_err(|e| CliError::Io(e.to_string()))?;
    tmp.as_file_mut().write_all(b"\n")?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("cannot persist {}: {e}", path.display())))?;
    Ok(())
}
