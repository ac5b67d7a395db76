use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use desitter_flow::error::ShellError;
use desitter_flow::shell::commands::{
    cmd_check, cmd_dual_check, cmd_run, cmd_sweep, dual_report_passes, exit_code, load_profile,
    slice_table, write_slice_table, CheckSource, EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_PROPERTY,
};
use desitter_flow::shell::{parse_config_file, Scenario};

#[derive(Parser)]
#[command(name = "dsflow", version, about = "Locally constrained inverse mean curvature flow of radial graphs in de Sitter space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file; the standard perturbed scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Hypersurface dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Number of grid intervals.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Flow one scenario to convergence.
    Run(Common),
    /// Refinement and identity checks on a scenario or stored profile.
    Check {
        #[command(flatten)]
        common: Common,
        /// Profile file to check instead of the scenario.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Closed-form slice quantities as CSV on stdout.
    SliceTable {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.1)]
        r_min: f64,
        #[arg(long, default_value_t = 3.0)]
        r_max: f64,
        #[arg(long, default_value_t = 30)]
        steps: usize,
    },
    /// Gauss-map duality identities of the initial profile as JSON.
    DualCheck(Common),
    /// Run several scenario files in parallel.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Scenario files.
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
}

fn scenario(config: Option<&Path>, common: &Common) -> Result<Scenario, ShellError> {
    let mut s = match config {
        Some(path) => parse_config_file(path)?,
        None => Scenario::standard(),
    };
    if let Some(n) = common.n {
        s.dim = n;
    }
    if let Some(big) = common.grid {
        s.intervals = big;
    }
    if let Some(t) = common.tmax {
        s.flow.t_max = t;
    }
    if let Some(c) = common.cfl {
        s.flow.cfl = c;
    }
    s.flow
        .validate()
        .map_err(|e| ShellError::Scenario(e.to_string()))?;
    Ok(s)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), ShellError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| ShellError::Format {
        path: "<stdout>".into(),
        message: e.to_string(),
    })?;
    println!("{text}");
    Ok(())
}

fn execute(command: Command) -> Result<i32, ShellError> {
    match command {
        Command::Run(common) => {
            let s = scenario(common.config.as_deref(), &common)?;
            let outcome = cmd_run(&s, &common.out)?;
            print_json(&outcome.report)?;
            Ok(outcome.exit_code)
        }
        Command::Check { common, profile } => {
            let report = match profile {
                Some(path) => cmd_check(CheckSource::Profile(&load_profile(&path)?))?,
                None => cmd_check(CheckSource::Scenario(&scenario(
                    common.config.as_deref(),
                    &common,
                )?))?,
            };
            print_json(&report)?;
            Ok(if report.passed { EXIT_OK } else { EXIT_PROPERTY })
        }
        Command::SliceTable {
            common,
            r_min,
            r_max,
            steps,
        } => {
            let s = scenario(common.config.as_deref(), &common)?;
            if !(r_min > 0.0 && r_max >= r_min) || steps == 0 {
                return Err(ShellError::Scenario("need 0 < r_min <= r_max and steps > 0".into()));
            }
            let radii: Vec<f64> = (0..=steps)
                .map(|k| r_min + (r_max - r_min) * k as f64 / steps as f64)
                .collect();
            let rows = slice_table(&s.model()?, &radii)?;
            write_slice_table(&rows, std::io::stdout().lock()).map_err(|e| ShellError::Format {
                path: "<stdout>".into(),
                message: e.to_string(),
            })?;
            Ok(EXIT_OK)
        }
        Command::DualCheck(common) => {
            let s = scenario(common.config.as_deref(), &common)?;
            let report = cmd_dual_check(&s)?;
            print_json(&report)?;
            Ok(if dual_report_passes(&report) { EXIT_OK } else { EXIT_PROPERTY })
        }
        Command::Sweep { common, configs } => {
            let scenarios = configs
                .iter()
                .map(|path| scenario(Some(path), &common))
                .collect::<Result<Vec<_>, _>>()?;
            let mut names: Vec<&str> = scenarios.iter().map(|s| s.name.as_str()).collect();
            names.sort_unstable();
            if names.windows(2).any(|w| w[0] == w[1]) {
                return Err(ShellError::Scenario("sweep scenarios need distinct names".into()));
            }
            let mut worst = EXIT_OK;
            for (name, result) in cmd_sweep(&scenarios, &common.out) {
                let code = match result {
                    Ok(outcome) => outcome.exit_code,
                    Err(err) => {
                        eprintln!("{name}: {err}");
                        exit_code(&err)
                    }
                };
                println!("{name}\t{code}");
                worst = worst.max(code);
            }
            Ok(worst)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("dsflow: {err}");
            let code = exit_code(&err);
            debug_assert!(code == EXIT_IO || code >= EXIT_CONFIG);
            code
        }
    };
    ExitCode::from(code as u8)
}
