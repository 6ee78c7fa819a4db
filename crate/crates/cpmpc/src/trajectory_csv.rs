//! `trajectory.csv`: one row per control period, columns in [`COLUMNS`] order.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back reproduces every numeric column bit for bit. Solve wall time is not
//! written, which keeps repeated runs byte-identical.

use std::io::{Read, Write};

use anyhow::{anyhow, bail, Context, Result};
use cpmpc_core::model::SupportRegion;
use cpmpc_core::qp::QpStatus;
use cpmpc_core::sim::{AxisSample, LogRow, TrajectoryLog};

pub const COLUMNS: [&str; 33] = [
    "time",
    "x_com",
    "x_com_vel",
    "x_cp",
    "x_zmp",
    "x_cmp",
    "x_hdot",
    "x_fext",
    "x_zmp_rate",
    "x_hddot",
    "y_com",
    "y_com_vel",
    "y_cp",
    "y_zmp",
    "y_cmp",
    "y_hdot",
    "y_fext",
    "y_zmp_rate",
    "y_hddot",
    "theta_pitch",
    "theta_rate_pitch",
    "theta_roll",
    "theta_rate_roll",
    "status",
    "iterations",
    "horizon",
    "objective",
    "prediction_error",
    "unforeseen_force",
    "region_x_min",
    "region_x_max",
    "region_y_min",
    "region_y_max",
];

/// A log together with the support region it was recorded against.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub log: TrajectoryLog,
    pub region: SupportRegion,
}

fn status_name(s: QpStatus) -> &'static str {
    match s {
        QpStatus::Optimal => "optimal",
        QpStatus::Infeasible => "infeasible",
        QpStatus::MaxIterations => "max_iterations",
        QpStatus::Unbounded => "unbounded",
    }
}

fn parse_status(s: &str) -> Option<QpStatus> {
    Some(match s {
        "optimal" => QpStatus::Optimal,
        "infeasible" => QpStatus::Infeasible,
        "max_iterations" => QpStatus::MaxIterations,
        "unbounded" => QpStatus::Unbounded,
        _ => return None,
    })
}

fn axis_fields(a: &AxisSample) -> [f64; 9] {
    [a.com, a.com_velocity, a.cp, a.zmp, a.cmp, a.hdot, a.f_ext, a.zmp_rate, a.hddot]
}

fn axis_from(v: &[f64]) -> AxisSample {
    AxisSample {
        com: v[0],
        com_velocity: v[1],
        cp: v[2],
        zmp: v[3],
        cmp: v[4],
        hdot: v[5],
        f_ext: v[6],
        zmp_rate: v[7],
        hddot: v[8],
    }
}

pub fn write_csv<W: Write>(out: W, trajectory: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    let r = &trajectory.region;
    for row in &trajectory.log.rows {
        let mut rec: Vec<String> = Vec::with_capacity(COLUMNS.len());
        rec.push(row.time.to_string());
        rec.extend(axis_fields(&row.sagittal).iter().map(f64::to_string));
        rec.extend(axis_fields(&row.frontal).iter().map(f64::to_string));
        for v in [row.theta_pitch, row.theta_rate_pitch, row.theta_roll, row.theta_rate_roll] {
            rec.push(v.to_string());
        }
        rec.push(status_name(row.status).to_string());
        rec.push(row.iterations.to_string());
        rec.push(row.horizon.to_string());
        rec.push(row.objective.to_string());
        rec.push(row.prediction_error.to_string());
        rec.push(u8::from(row.unforeseen_force).to_string());
        for v in [r.x_min, r.x_max, r.y_min, r.y_max] {
            rec.push(v.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Trajectory> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().context("reading header")?.clone();
    if headers.iter().ne(COLUMNS.iter().copied()) {
        bail!("unexpected header; expected {}", COLUMNS.join(","));
    }

    let mut rows = Vec::new();
    let mut region = None;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.with_context(|| format!("line {line}"))?;
        let num = |c: usize| -> Result<f64> {
            rec[c]
                .parse::<f64>()
                .map_err(|_| anyhow!("line {line}: column {} is not a number: {:?}", COLUMNS[c], &rec[c]))
        };
        let int = |c: usize| -> Result<usize> {
            rec[c]
                .parse::<usize>()
                .map_err(|_| anyhow!("line {line}: column {} is not an integer: {:?}", COLUMNS[c], &rec[c]))
        };
        let x: Vec<f64> = (1..10).map(num).collect::<Result<_>>()?;
        let y: Vec<f64> = (10..19).map(num).collect::<Result<_>>()?;
        let status = parse_status(&rec[23]).ok_or_else(|| anyhow!("line {line}: unknown status {:?}", &rec[23]))?;
        let unforeseen = match &rec[28] {
            "0" => false,
            "1" => true,
            other => bail!("line {line}: unforeseen_force must be 0 or 1, got {other:?}"),
        };
        region.get_or_insert(SupportRegion::new(num(29)?, num(30)?, num(31)?, num(32)?));
        rows.push(LogRow {
            time: num(0)?,
            sagittal: axis_from(&x),
            frontal: axis_from(&y),
            theta_pitch: num(19)?,
            theta_rate_pitch: num(20)?,
            theta_roll: num(21)?,
            theta_rate_roll: num(22)?,
            status,
            iterations: int(24)?,
            horizon: int(25)?,
            objective: num(26)?,
            prediction_error: num(27)?,
            unforeseen_force: unforeseen,
            solve_time: 0.0,
        });
    }
    let region = region.ok_or_else(|| anyhow!("trajectory has no rows"))?;
    let period = if rows.len() > 1 { rows[1].time - rows[0].time } else { 0.0 };
    Ok(Trajectory {
        log: TrajectoryLog { period, rows },
        region,
    })
}
