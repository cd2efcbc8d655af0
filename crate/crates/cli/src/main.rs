use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use slingloiter::commands::{self, Overrides};
use slingloiter::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "slingloiter",
    version,
    about = "Plan, verify, and simulate non-stop carrier trajectories that hold a cable-suspended body at a constant pose"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report grasp rank, nullity, pair selection, and feasibility margins.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Also write analyze.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate carrier trajectories; writes plan.csv and plan_summary.json.
    Plan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Sample step override, s.
        #[arg(long)]
        dt: Option<f64>,
        /// Horizon override, s.
        #[arg(long)]
        duration: Option<f64>,
        /// Carrier speed floor override, m/s.
        #[arg(long = "v-min")]
        v_min: Option<f64>,
    },
    /// Run the closed-loop simulation; writes sim.csv and sim_summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long = "v-min")]
        v_min: Option<f64>,
    },
    /// Re-check a stored series CSV against the non-stop criteria.
    Verify {
        /// Series file produced by plan or simulate.
        #[arg(long)]
        csv: PathBuf,
        /// Configuration the series belongs to (cable count, pair
        /// selection, default thresholds).
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "v-min")]
        v_min: Option<f64>,
        #[arg(long = "z-min")]
        z_min: Option<f64>,
    },
    /// Plan over a grid of internal-force parameters; writes sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Axis spec `name=start:step:stop`; `name` is one of phaseK,
        /// amplitudeK, frequencyK, lambda0K (K = 1-based component).
        /// Repeat for a second axis.
        #[arg(long)]
        vary: Vec<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        duration: Option<f64>,
    },
}

fn dispatch(cli: Cli) -> Result<serde_json::Value, slingloiter::CliError> {
    match cli.command {
        Command::Analyze { config, out } => {
            let config = RunConfig::from_path(&config)?;
            commands::analyze_cmd(&config, out.as_ref())
        }
        Command::Plan {
            config,
            out,
            dt,
            duration,
            v_min,
        } => {
            let config = RunConfig::from_path(&config)?;
            let overrides = Overrides {
                dt,
                duration,
                v_min,
                z_min: None,
            };
            commands::plan_cmd(&config, &out, overrides)
        }
        Command::Simulate {
            config,
            out,
            dt,
            duration,
            v_min,
        } => {
            let config = RunConfig::from_path(&config)?;
            let overrides = Overrides {
                dt,
                duration,
                v_min,
                z_min: None,
            };
            commands::simulate_cmd(&config, &out, overrides)
        }
        Command::Verify {
            csv,
            config,
            v_min,
            z_min,
        } => {
            let config = RunConfig::from_path(&config)?;
            let overrides = Overrides {
                dt: None,
                duration: None,
                v_min,
                z_min,
            };
            commands::verify_cmd(&csv, &config, overrides)
        }
        Command::Sweep {
            config,
            vary,
            out,
            dt,
            duration,
        } => {
            let config = RunConfig::from_path(&config)?;
            let overrides = Overrides {
                dt,
                duration,
                v_min: None,
                z_min: None,
            };
            commands::sweep_cmd(&config, &vary, &out, overrides)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(value) => {
            println!("{}", serde_json::to_string_pretty(&value).expect("json"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
