use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use spdc_cli::{run, Command, Format, Overrides, RunOptions};

/// Design and simulation of factorable SPDC photon-pair sources.
#[derive(Debug, Parser)]
#[command(name = "spdc", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Format of the data tables; summaries are always JSON.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Grid points per spectral axis, overriding the scenario.
    #[arg(long, global = true)]
    grid: Option<usize>,

    /// Starting transverse quadrature nodes per axis, overriding the scenario.
    #[arg(long, global = true)]
    quadrature_nodes: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Cmd {
    /// Poling period, dispersion parameter, GVM points and an optional D map.
    Phasematch,
    /// Pump envelope, phasematching and JSI matrices with the Schmidt purity.
    Jsa,
    /// Plane-wave purity versus pump bandwidth.
    PurityScan,
    /// Heralding efficiencies for the configured collection modes.
    Heralding,
    /// Heralding efficiencies versus signal collection waist.
    WaistScan,
    /// Hong-Ou-Mandel dips for both arms.
    Homi,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config) = cli.config else {
        eprintln!("error: --config <file> is required");
        return ExitCode::from(2);
    };
    let command = match cli.command {
        Cmd::Phasematch => Command::Phasematch,
        Cmd::Jsa => Command::Jsa,
        Cmd::PurityScan => Command::PurityScan,
        Cmd::Heralding => Command::Heralding,
        Cmd::WaistScan => Command::WaistScan,
        Cmd::Homi => Command::Homi,
    };
    let opts = RunOptions {
        config,
        out: cli.out,
        format: match cli.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        },
        overrides: Overrides {
            grid_points: cli.grid,
            quadrature_nodes: cli.quadrature_nodes,
        },
    };
    match run(command, &opts) {
        Ok(outcome) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&outcome.summary).expect("summary serializes")
            );
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            if outcome.partial {
                eprintln!("warning: some points did not converge; see the summary");
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
