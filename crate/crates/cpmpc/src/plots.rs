//! The three trajectory plots written by `simulate --format svg` and `plot`.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cpmpc_core::model::Axis;
use cpmpc_core::sim::{AxisSample, LogRow};

use crate::svg::{padded_range, Panel, Svg};
use crate::trajectory_csv::Trajectory;

const COM: &str = "#1f77b4";
const CP: &str = "#d62728";
const ZMP: &str = "#2ca02c";
const CMP: &str = "#9467bd";
const REGION: &str = "#7f7f7f";

pub const PLOT_FILES: [&str; 3] = ["timeseries.svg", "ground_plane.svg", "momentum.svg"];

fn column(rows: &[LogRow], axis: Axis, f: impl Fn(&AxisSample) -> f64) -> Vec<f64> {
    rows.iter().map(|r| f(r.axis(axis))).collect()
}

/// Per-axis CoM, CP, ZMP and CMP over time, region bounds shaded.
pub fn timeseries(traj: &Trajectory) -> String {
    let rows = &traj.log.rows;
    let t: Vec<f64> = rows.iter().map(|r| r.time).collect();
    let mut svg = Svg::new(760.0, 620.0);
    for (i, axis) in Axis::BOTH.into_iter().enumerate() {
        let series = [
            ("CoM", COM, column(rows, axis, |a| a.com)),
            ("CP", CP, column(rows, axis, |a| a.cp)),
            ("ZMP", ZMP, column(rows, axis, |a| a.zmp)),
            ("CMP", CMP, column(rows, axis, |a| a.cmp)),
        ];
        let (lo, hi) = traj.region.bounds(axis);
        let y_range = padded_range(series.iter().flat_map(|s| s.2.iter().copied()).chain([lo, hi]));
        let panel = Panel {
            left: 80.0,
            top: 40.0 + 300.0 * i as f64,
            width: 640.0,
            height: 220.0,
            x_range: padded_range(t.iter().copied()),
            y_range,
        };
        let (title, label) = match axis {
            Axis::Sagittal => ("Sagittal", "x [m]"),
            Axis::Frontal => ("Frontal", "y [m]"),
        };
        panel.band(&mut svg, lo, hi, REGION);
        panel.axes(&mut svg, title, "t [s]", label);
        for (_, color, ys) in &series {
            panel.trace(&mut svg, &t, ys, color, false);
        }
        panel.legend(&mut svg, &series.iter().map(|s| (s.0, s.1)).collect::<Vec<_>>());
    }
    svg.finish()
}

/// The four trajectories in the ground plane over the support region.
pub fn ground_plane(traj: &Trajectory) -> String {
    let rows = &traj.log.rows;
    let series = [
        ("CoM", COM, column(rows, Axis::Sagittal, |a| a.com), column(rows, Axis::Frontal, |a| a.com)),
        ("CP", CP, column(rows, Axis::Sagittal, |a| a.cp), column(rows, Axis::Frontal, |a| a.cp)),
        ("ZMP", ZMP, column(rows, Axis::Sagittal, |a| a.zmp), column(rows, Axis::Frontal, |a| a.zmp)),
        ("CMP", CMP, column(rows, Axis::Sagittal, |a| a.cmp), column(rows, Axis::Frontal, |a| a.cmp)),
    ];
    let r = traj.region;
    let x_range = padded_range(series.iter().flat_map(|s| s.2.iter().copied()).chain([r.x_min, r.x_max]));
    let y_range = padded_range(series.iter().flat_map(|s| s.3.iter().copied()).chain([r.y_min, r.y_max]));
    let mut svg = Svg::new(620.0, 620.0);
    let panel = Panel {
        left: 80.0,
        top: 40.0,
        width: 500.0,
        height: 500.0,
        x_range,
        y_range,
    };
    let (x0, y1) = panel.map(r.x_min, r.y_max);
    let (x1, y0) = panel.map(r.x_max, r.y_min);
    svg.rect(x0, y1, (x1 - x0).max(2.0), (y0 - y1).max(2.0), REGION, 0.25);
    panel.axes(&mut svg, "Ground plane", "x [m]", "y [m]");
    for (_, color, xs, ys) in &series {
        let flat = xs.iter().zip(ys).all(|(x, y)| (x - xs[0]).abs() < 1e-12 && (y - ys[0]).abs() < 1e-12);
        if flat && !xs.is_empty() {
            svg.circle(panel.map(xs[0], ys[0]), 4.0, color);
        } else {
            panel.trace(&mut svg, xs, ys, color, false);
        }
    }
    panel.legend(&mut svg, &series.iter().map(|s| (s.0, s.1)).collect::<Vec<_>>());
    svg.finish()
}

/// Angular momentum rate and flywheel angle over time.
pub fn momentum(traj: &Trajectory) -> String {
    let rows = &traj.log.rows;
    let t: Vec<f64> = rows.iter().map(|r| r.time).collect();
    let hdot_x = column(rows, Axis::Sagittal, |a| a.hdot);
    let hdot_y = column(rows, Axis::Frontal, |a| a.hdot);
    let pitch: Vec<f64> = rows.iter().map(|r| r.theta_pitch).collect();
    let roll: Vec<f64> = rows.iter().map(|r| r.theta_roll).collect();

    let mut svg = Svg::new(760.0, 620.0);
    let top = Panel {
        left: 80.0,
        top: 40.0,
        width: 640.0,
        height: 220.0,
        x_range: padded_range(t.iter().copied()),
        y_range: padded_range(hdot_x.iter().chain(&hdot_y).copied()),
    };
    top.axes(&mut svg, "Angular momentum rate", "t [s]", "Hdot [N m]");
    top.trace(&mut svg, &t, &hdot_x, CP, false);
    top.trace(&mut svg, &t, &hdot_y, COM, true);
    top.legend(&mut svg, &[("sagittal", CP), ("frontal", COM)]);

    let bottom = Panel {
        top: 340.0,
        y_range: padded_range(pitch.iter().chain(&roll).copied()),
        ..top
    };
    bottom.axes(&mut svg, "Flywheel angle", "t [s]", "theta [rad]");
    bottom.trace(&mut svg, &t, &pitch, CP, false);
    bottom.trace(&mut svg, &t, &roll, COM, true);
    bottom.legend(&mut svg, &[("pitch", CP), ("roll", COM)]);
    svg.finish()
}

/// Writes all three plots into `dir`, returning their paths.
pub fn write_plots(traj: &Trajectory, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let docs = [timeseries(traj), ground_plane(traj), momentum(traj)];
    let mut paths = Vec::new();
    for (name, doc) in PLOT_FILES.iter().zip(docs) {
        let path = dir.join(name);
        std::fs::write(&path, doc).with_context(|| format!("writing {}", path.display()))?;
        paths.push(path);
    }
    Ok(paths)
}
