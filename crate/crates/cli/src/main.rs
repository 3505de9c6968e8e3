use clap::{Parser, Subcommand, ValueEnum};
use hyshell::config::{parse_config, parse_config_with_preset, RunConfig};
use hyshell::solver::Method;
use hyshell::{presets, ShellError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hyshell", version, about = "Nonlinear hyperelastic shell analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem described by a config file, a preset, or both.
    Run {
        /// TOML config; optional when --preset is given.
        config: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, value_enum)]
        solver: Option<SolverArg>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// List the built-in presets, or print one as TOML.
    Preset { name: Option<String> },
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Newton,
    Arclength,
}

fn exit_code(e: &ShellError) -> u8 {
    match e {
        ShellError::ConfigError(_)
        | ShellError::ExpressionParseError(_)
        | ShellError::InvalidGeometry(_)
        | ShellError::DomainError(_)
        | ShellError::InvalidOrder(_)
        | ShellError::InvalidMaterial(_)
        | ShellError::UnknownNode(_)
        | ShellError::BadSurfaceSelector(_)
        | ShellError::ConflictingConstraints(_) => 2,
        ShellError::NonConvergence(_) | ShellError::ComplexRoots => 3,
        _ => 4,
    }
}

fn load(config: Option<&PathBuf>, preset: Option<&str>) -> Result<RunConfig, ShellError> {
    match (config, preset) {
        (Some(path), p) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ShellError::ConfigError(format!("cannot read {}: {e}", path.display())))?;
            if let Some(p) = p {
                log::info!("--preset {p} is used as the base of {}", path.display());
            }
            parse_config_with_preset(&text, p)
        }
        (None, Some(p)) => parse_config(&format!("preset = \"{p}\"")),
        (None, None) => Err(ShellError::ConfigError("give a config file, --preset, or both".into())),
    }
}

fn run(
    config: Option<PathBuf>,
    output: Option<PathBuf>,
    preset: Option<String>,
    solver: Option<SolverArg>,
    tol: Option<f64>,
    max_steps: Option<usize>,
) -> Result<(), ShellError> {
    let mut cfg = load(config.as_ref(), preset.as_deref())?;
    if let Some(dir) = output {
        log::info!("--output overrides output.directory ({} -> {})", cfg.output.directory.display(), dir.display());
        cfg.output.directory = dir;
    }
    if let Some(s) = solver {
        let m = match s {
            SolverArg::Newton => Method::Newton,
            SolverArg::Arclength => Method::ArcLength,
        };
        log::info!("--solver overrides solver.method ({:?} -> {m:?})", cfg.solver.method);
        cfg.solver.method = m;
    }
    if let Some(t) = tol {
        log::info!("--tol overrides solver.tol ({} -> {t})", cfg.solver.tol);
        cfg.solver.tol = t;
    }
    if let Some(n) = max_steps {
        log::info!("--max-steps overrides solver.max_steps ({} -> {n})", cfg.solver.max_steps);
        cfg.solver.max_steps = n;
    }
    cfg.solver.validate()?;
    let dir = cfg.output.directory.clone();
    let outcome = hyshell::run::execute(&cfg, &dir)?;
    println!("{} accepted steps written to {}", outcome.states.len(), dir.display());
    match outcome.error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, output, preset, solver, tol, max_steps } => run(config, output, preset, solver, tol, max_steps),
        Command::Preset { name: None } => {
            for n in presets::names() {
                println!("{n}");
            }
            Ok(())
        }
        Command::Preset { name: Some(n) } => presets::preset_text(&n).map(|t| print!("{t}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
