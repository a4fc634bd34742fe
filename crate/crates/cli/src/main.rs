use clap::{Args, Parser, Subcommand};
use lempert::polesys::GreenFormula;
use lempert_cli::{
    load_config, report, run_indicator, run_multiplicity, run_reproduce_distinct, run_sweep,
    CliError, Overrides,
};
use std::path::PathBuf;
use std::process::ExitCode;

/// Generalized Lempert/Green machinery on polydisks: indicator reports,
/// disk multiplicities, the explicit bidisk example, and collision sweeps.
#[derive(Parser)]
#[command(name = "lempert", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an indicator, report its mass, orthonormalization, and
    /// offset estimates.
    Indicator(Common),
    /// Valuations, multiplicity, and the sampling oracle for a disk at a
    /// pole.
    Multiplicity(Common),
    /// Rebuild the two-pole bidisk example with its admissibility and Green
    /// reports.
    ReproduceDistinct(Common),
    /// Pole-collision convergence sweep; writes the CSV table.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Seed override for stochastic sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Pole-hit tolerance override.
    #[arg(long)]
    tol_hit: Option<f64>,
    /// Taylor-coefficient tolerance override.
    #[arg(long)]
    tol_coeff: Option<f64>,
    /// Output file (CSV for sweep and reproduce-distinct, JSON copy
    /// otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Green formula variant: corrected (default) or verbatim.
    #[arg(long)]
    green_formula: Option<String>,
}

fn overrides(common: &Common) -> Result<Overrides, CliError> {
    let green_formula = match common.green_formula.as_deref() {
        None => None,
        Some("corrected") => Some(GreenFormula::Corrected),
        Some("verbatim") => Some(GreenFormula::Verbatim),
        Some(other) => {
            return Err(CliError::Parse(format!(
                "unknown green formula {other:?}; expected corrected or verbatim"
            )))
        }
    };
    Ok(Overrides {
        seed: common.seed,
        tol_hit: common.tol_hit,
        tol_coeff: common.tol_coeff,
        green_formula,
    })
}

fn write_out(path: &PathBuf, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Indicator(common) => {
            let over = overrides(&common)?;
            let cfg = load_config(&common.config)?;
            let value = run_indicator(cfg, &over)?;
            let text = report::to_json_string(&value);
            println!("{text}");
            if let Some(out) = &common.out {
                write_out(out, &text)?;
            }
        }
        Command::Multiplicity(common) => {
            let over = overrides(&common)?;
            let cfg = load_config(&common.config)?;
            let value = run_multiplicity(cfg, &over)?;
            let text = report::to_json_string(&value);
            println!("{text}");
            if let Some(out) = &common.out {
                write_out(out, &text)?;
            }
        }
        Command::ReproduceDistinct(common) => {
            let over = overrides(&common)?;
            let cfg = load_config(&common.config)?;
            let (value, csv) = run_reproduce_distinct(cfg, &over)?;
            println!("{}", report::to_json_string(&value));
            if let Some(out) = &common.out {
                write_out(out, &csv)?;
            }
        }
        Command::Sweep(common) => {
            let over = overrides(&common)?;
            let cfg = load_config(&common.config)?;
            let (value, csv) = run_sweep(cfg, &over)?;
            println!("{}", report::to_json_string(&value));
            let out = common
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from("sweep.csv"));
            write_out(&out, &csv)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
