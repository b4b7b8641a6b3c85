use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use metallic_lab::scenario::LoadedScenario;
use metallic_lab::{
    apply_structure_override, builtins, cmd_analyze, cmd_angle_sweep, cmd_builtin_list,
    cmd_verify, effective_seed, parse_checks, parse_grid, CliError, Format,
};

/// Numerical lab for hemi-slant submanifolds in metallic Riemannian space:
/// classify scenarios, compute slant angles, and verify the structural
/// identities as residual checks.
#[derive(Parser)]
#[command(name = "metallic-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Text => Format::Text,
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Args)]
struct ScenarioArgs {
    /// Path to a scenario file.
    #[arg(long, conflicts_with = "builtin")]
    scenario: Option<PathBuf>,
    /// Name of a builtin scenario (see `builtin-list`).
    #[arg(long)]
    builtin: Option<String>,
    /// Override the ambient structure: `jbar` (builtin variant) or a
    /// comma-separated sigma/sigma_bar pattern.
    #[arg(long)]
    structure: Option<String>,
    /// Number of samples (default: the scenario's sampling plan).
    #[arg(long)]
    samples: Option<usize>,
    /// Seed override (beats METALLIC_LAB_SEED and the scenario default).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
}

impl ScenarioArgs {
    fn load(&self) -> Result<LoadedScenario, CliError> {
        let loaded = match (&self.scenario, &self.builtin) {
            (Some(path), None) => metallic_lab::scenario::load(path)?,
            (None, Some(name)) => builtins::builtin(name)?,
            _ => {
                return Err(CliError::Input(
                    "exactly one of --scenario or --builtin is required".into(),
                ))
            }
        };
        match &self.structure {
            Some(spec) => apply_structure_override(&loaded, spec),
            None => Ok(loaded),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classify a scenario: slant angles, hemi-slant verdict, normal split.
    Analyze {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Run identity checks and report per-check residuals.
    Verify {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// `all` or a comma-separated list of check IDs.
        #[arg(long)]
        checks: Option<String>,
    },
    /// Sweep a declared constant and report the slant angle per grid value.
    AngleSweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// The declared constant to sweep (e.g. t).
        #[arg(long)]
        var: String,
        /// `start:stop:count`, a comma-separated list, or a single value.
        #[arg(long)]
        grid: String,
    },
    /// List builtin scenarios.
    BuiltinList {
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
}

fn run(cli: Cli) -> Result<(String, i32), CliError> {
    match cli.command {
        Command::Analyze { scenario } => {
            let loaded = scenario.load()?;
            let seed = effective_seed(&loaded, scenario.seed);
            cmd_analyze(&loaded, scenario.samples, seed, scenario.format.into())
        }
        Command::Verify { scenario, checks } => {
            let loaded = scenario.load()?;
            let seed = effective_seed(&loaded, scenario.seed);
            let ids = parse_checks(checks.as_deref(), &loaded.checks)?;
            cmd_verify(
                &loaded,
                &ids,
                scenario.samples,
                seed,
                scenario.format.into(),
            )
        }
        Command::AngleSweep {
            scenario,
            var,
            grid,
        } => {
            let loaded = scenario.load()?;
            let seed = effective_seed(&loaded, scenario.seed);
            let grid = parse_grid(&grid)?;
            cmd_angle_sweep(&loaded, &var, &grid, seed, scenario.format.into())
        }
        Command::BuiltinList { format } => cmd_builtin_list(format.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((output, code)) => {
            print!("{output}");
            ExitCode::from(code as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
