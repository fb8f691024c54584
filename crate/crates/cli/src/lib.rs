//! Front end for the `spdc` binary: scenario parsing, the six commands and
//! their output files. The binary is a thin clap wrapper over [`run`].

pub mod commands;
pub mod config;
pub mod output;
pub mod quantity;

use std::path::{Path, PathBuf};

use spdc_core::SpdcError;
use thiserror::Error;

pub use commands::Outcome;
pub use config::{Overrides, Scenario};
pub use output::Format;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] SpdcError),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 config, 3 non-convergence, 4 physics domain, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_convergence() => 3,
            CliError::Core(e) if e.is_physics_domain() => 4,
            CliError::Core(SpdcError::InvalidInput(_) | SpdcError::InvalidModel(_) | SpdcError::NotImplemented(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Phasematch,
    Jsa,
    PurityScan,
    Heralding,
    WaistScan,
    Homi,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Phasematch => "phasematch",
            Command::Jsa => "jsa",
            Command::PurityScan => "purity-scan",
            Command::Heralding => "heralding",
            Command::WaistScan => "waist-scan",
            Command::Homi => "homi",
        }
    }

    fn uses_quadrature(self, sc: &Scenario) -> bool {
        match self {
            Command::Heralding | Command::WaistScan => true,
            Command::Jsa => sc.config.jsa.mode == config::JsaMode::Fiber,
            _ => false,
        }
    }

    fn uses_grid(self) -> bool {
        self != Command::Phasematch
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    pub format: Format,
    pub overrides: Overrides,
}

/// Loads the scenario, runs `command` and writes its files into `opts.out`.
pub fn run(command: Command, opts: &RunOptions) -> Result<Outcome, CliError> {
    let sc = Scenario::load(&opts.config, opts.overrides)?;
    run_scenario(command, &sc, &opts.out, opts.format)
}

pub fn run_scenario(command: Command, sc: &Scenario, out: &Path, format: Format) -> Result<Outcome, CliError> {
    let provenance = output::Provenance {
        tool: format!("spdc {}", env!("CARGO_PKG_VERSION")),
        command: command.name().into(),
        config: sc
            .path
            .file_name()
            .map_or_else(|| sc.path.display().to_string(), |n| n.to_string_lossy().into_owned()),
        config_sha256: sc.sha256.clone(),
        dispersion: sc.dispersion.citation().into(),
        quadrature: command.uses_quadrature(sc).then_some(sc.quadrature),
        grid_points: command.uses_grid().then_some(sc.grid_points),
    };
    let emitter = output::Emitter::new(out, format, provenance)?;
    match command {
        Command::Phasematch => commands::phasematch(sc, emitter),
        Command::Jsa => commands::jsa(sc, emitter),
        Command::PurityScan => commands::purity_scan(sc, emitter),
        Command::Heralding => commands::heralding(sc, emitter),
        Command::WaistScan => commands::waist_scan(sc, emitter),
        Command::Homi => commands::homi(sc, emitter),
    }
}
