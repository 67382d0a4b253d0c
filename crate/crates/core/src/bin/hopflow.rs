use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hopflow::acceptance::evaluate_all;
use hopflow::commands::{curve_info_file, flow_run, torus_check, write_torus_table};
use hopflow::config::{RunConfig, VerifyConfig};
use hopflow::curve::DiffScheme;
use hopflow::Error;

/// Degenerate elastic flow of spherical curves and their Hopf tori.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flow described by a key=value config file.
    FlowRun { config: PathBuf },
    /// Print and store the diagnostics of a snapshot.
    CurveInfo {
        snapshot: PathBuf,
        /// fd or fourier
        #[arg(long, default_value = "fourier")]
        diff: DiffScheme,
        /// Output file (default: <snapshot>.info.json)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lift a snapshot to its Hopf torus and check the surface identities.
    TorusCheck {
        snapshot: PathBuf,
        #[arg(long, default_value_t = 64)]
        fiber_res: usize,
        /// Output file (default: <snapshot>.torus.txt)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    VerifyAll { config: PathBuf },
}

fn init_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("HOPFLOW_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.parse().map_err(|_| Error::Config {
        key: "HOPFLOW_THREADS".into(),
        message: format!("not a thread count: `{raw}`"),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config {
            key: "HOPFLOW_THREADS".into(),
            message: e.to_string(),
        })
}

fn execute(command: Command) -> Result<bool, Error> {
    init_threads()?;
    match command {
        Command::FlowRun { config } => {
            let config = RunConfig::from_file(&config)?;
            let summary = flow_run(&config)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(true)
        }
        Command::CurveInfo { snapshot, diff, out } => {
            let info = curve_info_file(&snapshot, diff, out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&info)?);
            Ok(true)
        }
        Command::TorusCheck {
            snapshot,
            fiber_res,
            out,
        } => {
            let report = torus_check(&snapshot, fiber_res, out.as_deref())?;
            write_torus_table(&mut std::io::stdout().lock(), &report)?;
            Ok(true)
        }
        Command::VerifyAll { config } => {
            let config = VerifyConfig::from_file(&config)?;
            let outcomes = evaluate_all(&config.criteria);
            for o in &outcomes {
                println!("{o}");
            }
            if let Some(dir) = &config.output_dir {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("acceptance.json"), serde_json::to_string_pretty(&outcomes)?)?;
            }
            Ok(outcomes.iter().all(|o| o.passed))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ Error::Config { .. }) | Err(e @ Error::Parse { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
