use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use cpmpc_core::sim::{run_scenario_with_clock, Clock, PlantMode, TrajectoryLog};
use log::{debug, error, info, warn};

use crate::plots::write_plots;
use crate::scenario_file::{OutputFormat, PlantName, ScenarioFile};
use crate::summary::Summary;
use crate::trajectory_csv::{read_csv, write_csv, Trajectory};
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_RECOVERED: i32 = 2;
pub const EXIT_PROPERTY_FAILED: i32 = 3;

pub const LOG_ENV: &str = "CPMPC_LOG";

#[derive(Parser, Debug)]
#[command(name = "cpmpc", version, about = "Capture-point MPC push recovery with hip and ankle strategies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and write its trajectory, summary and plots
    Simulate(SimulateArgs),
    /// Check the solver and model against independent oracles
    Verify(VerifyArgs),
    /// Render plots from a trajectory.csv
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Scenario JSON file
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing
    #[arg(long)]
    out: PathBuf,
    /// Output formats; overrides the scenario's output section
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<OutputFormat>>,
    /// Plant model; overrides the scenario's mpc.plant
    #[arg(long)]
    plant: Option<PlantName>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = verify::DEFAULT_SEED)]
    seed: u64,
    /// Number of random QPs checked against the enumeration oracle
    #[arg(long, default_value_t = verify::DEFAULT_COUNT)]
    count: usize,
}

#[derive(Args, Debug)]
struct PlotArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

struct WallClock(Instant);

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Verify(a) => verify_cmd(&a),
        Command::Plot(a) => match plot(&a.input, &a.out) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                error!("{e:#}");
                eprintln!("error: {e:#}");
                EXIT_ERROR
            }
        },
    }
}

fn simulate(args: &SimulateArgs) -> i32 {
    match simulate_inner(args) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_NOT_RECOVERED,
        Err(e) => {
            error!("{e:#}");
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn simulate_inner(args: &SimulateArgs) -> Result<bool> {
    let mut file = ScenarioFile::load(&args.scenario).with_context(|| format!("{}", args.scenario.display()))?;
    if let Some(plant) = args.plant {
        file.mpc.plant = plant;
    }
    let formats = args.format.clone().unwrap_or_else(|| file.output.formats.clone());
    let scenario = file.to_scenario().with_context(|| format!("{}", args.scenario.display()))?;
    info!(
        "scenario {}: {} pushes, {} periods, plant {:?}",
        file.name.as_deref().unwrap_or("(unnamed)"),
        scenario.disturbances.len(),
        scenario.num_periods(),
        scenario.plant_mode
    );

    let clock = WallClock(Instant::now());
    let (log, report) = run_scenario_with_clock(&scenario, &clock).context("running scenario")?;
    let wall_time = clock.now();
    for row in log.rows.iter().filter(|r| r.status != cpmpc_core::qp::QpStatus::Optimal) {
        warn!("t = {:.3} s: QP {}, zero inputs applied", row.time, row.status);
    }
    debug!("episode took {wall_time:.4} s");

    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let trajectory = Trajectory {
        log,
        region: scenario.region(),
    };
    if formats.contains(&OutputFormat::Csv) {
        write_trajectory(&args.out.join("trajectory.csv"), &trajectory)?;
    }
    if formats.contains(&OutputFormat::Json) {
        let plant = match scenario.plant_mode {
            PlantMode::Matched => "matched",
            PlantMode::Continuous => "continuous",
        };
        let summary = Summary::new(&report, file.name.clone(), plant, scenario.num_periods(), wall_time);
        let path = args.out.join("summary.json");
        std::fs::write(&path, summary.to_json() + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    if formats.contains(&OutputFormat::Svg) {
        write_plots(&trajectory, &args.out.join("plots"))?;
    }

    if report.success {
        println!(
            "recovered: peak |Hdot| {:.2} / {:.2} N m, hip pitch {:.3} rad",
            report.peak_hdot_sagittal, report.peak_hdot_frontal, report.theta_max
        );
    } else {
        println!("not recovered:");
        for f in &report.failures {
            println!("  {f}");
        }
        if report.solver.infeasible > 0 {
            println!("  {} of {} solves infeasible", report.solver.infeasible, report.solver.solves);
        }
    }
    Ok(report.success)
}

fn write_trajectory(path: &Path, trajectory: &Trajectory) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_csv(BufWriter::new(file), trajectory).with_context(|| format!("writing {}", path.display()))
}

fn verify_cmd(args: &VerifyArgs) -> i32 {
    let results = verify::run_all(args.seed, args.count);
    for r in &results {
        println!("{r}");
    }
    if results.iter().all(|r| r.passed) {
        EXIT_OK
    } else {
        EXIT_PROPERTY_FAILED
    }
}

fn plot(input: &Path, out: &Path) -> Result<()> {
    let file = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let trajectory = read_csv(file).with_context(|| format!("{}", input.display()))?;
    for path in write_plots(&trajectory, out)? {
        info!("wrote {}", path.display());
    }
    Ok(())
}

/// Reads a trajectory back; convenience for tests and tooling.
pub fn load_trajectory(path: &Path) -> Result<TrajectoryLog> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_csv(file)?.log)
}
