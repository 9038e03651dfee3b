use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hodgeflow::config::{OutputFormat, RunConfig};
use hodgeflow::run;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Parser)]
#[command(name = "hodgeflow", version, about = "Discrete exterior calculus experiments on triangulated surfaces")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory override.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Output format override.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// RNG seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Spectral truncation override (number of retained modes).
    #[arg(long, global = true)]
    modes: Option<usize>,
    /// Tolerance override for pass/fail columns.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mesh statistics: sizes, Euler characteristic, boundary loops, h.
    MeshInfo,
    /// Harmonic-space dimensions per degree and boundary condition.
    Betti,
    /// Hodge-Morrey-Friedrichs decomposition of the configured field.
    Decompose,
    /// Heat smoothing slopes and commutation residuals.
    HeatSweep,
    /// Energy ledger of the configured flow.
    Onsager,
    /// BMD Besov, coarea, and product-estimate suites.
    Besov,
}

fn load_config(cli: &Cli) -> Result<RunConfig, hodgeflow::Error> {
    let path = cli.config.as_deref().ok_or_else(|| {
        hodgeflow::Error::Config("--config PATH is required".into())
    })?;
    let mut config = RunConfig::load(path)?;
    if let Some(out) = &cli.out {
        config.out_dir = Some(out.clone());
    }
    if let Some(format) = cli.format {
        config.format = match format {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(modes) = cli.modes {
        config.modes = Some(modes);
    }
    if let Some(tol) = cli.tol {
        config.tol = tol;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let table = match &cli.command {
        Command::MeshInfo => run::cmd_mesh_info(&config),
        Command::Betti => run::cmd_betti(&config),
        Command::Decompose => run::cmd_decompose(&config),
        Command::HeatSweep => run::cmd_heat_sweep(&config),
        Command::Onsager => run::cmd_onsager(&config),
        Command::Besov => run::cmd_besov(&config),
    };
    match table.and_then(|t| t.write(&config)) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(run::exit_code(&e) as u8)
        }
    }
}
