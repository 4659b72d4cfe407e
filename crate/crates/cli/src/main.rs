// SPDX-License-Identifier: Apache-2.0

mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use varnn_core::experiments::{AblationAxis, SyntheticPreset};

#[derive(Parser, Debug)]
#[command(name = "varnn", version, about = "Residual-memory windowed regression: train, evaluate, ablate, check")]
struct Cli {
    /// Directory under which runs without an explicit output go.
    #[arg(long, global = true, env = "VARNN_OUTPUT_ROOT", default_value = "runs")]
    output_root: PathBuf,

    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Run configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory; overrides the config and the output root.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Replace an existing non-empty output directory.
    #[arg(long)]
    overwrite: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Tanh,
    Relu,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PresetArg {
    RegimeShift,
    Drift,
    Heteroscedastic,
}

impl From<PresetArg> for SyntheticPreset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::RegimeShift => SyntheticPreset::RegimeShift,
            PresetArg::Drift => SyntheticPreset::Drift,
            PresetArg::Heteroscedastic => SyntheticPreset::Heteroscedastic,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train and score every model in the config on identical windows.
    Train(RunArgs),
    /// Reload a finished run's parameters and re-score them.
    Evaluate {
        /// Directory written by `train` or `ablate`.
        #[arg(long)]
        run: PathBuf,
    },
    /// Sweep one axis around the config's residual-memory model.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        /// Overrides `axis` in the config.
        #[arg(long, value_parser = parse_axis)]
        axis: Option<AblationAxis>,
    },
    /// Compare analytic gradients with central finite differences.
    Gradcheck {
        /// Optional config providing a `[gradcheck]` section.
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Negate analytic gradients before comparing (self-test).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Parameter and MAC counts for the config's models, with timings.
    Bench(RunArgs),
    /// Write a synthetic series to CSV.
    Synth {
        /// Config whose dataset is synthetic.
        #[arg(short, long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long, value_enum, requires = "seed")]
        preset: Option<PresetArg>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        overwrite: bool,
    },
}

fn parse_axis(s: &str) -> Result<AblationAxis, String> {
    s.parse().map_err(|e: varnn_core::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Train(args) => commands::train(&args.config, args.output.as_deref(), args.overwrite, &cli.output_root),
        Command::Evaluate { run } => commands::evaluate(&run),
        Command::Ablate { run, axis } => commands::ablate(&run.config, run.output.as_deref(), run.overwrite, &cli.output_root, axis),
        Command::Gradcheck {
            config,
            suite,
            inject_fault,
        } => commands::gradcheck(config.as_deref(), suite == Suite::Tanh || suite == Suite::All, suite == Suite::Relu || suite == Suite::All, inject_fault),
        Command::Bench(args) => commands::bench(&args.config, args.output.as_deref(), args.overwrite, &cli.output_root),
        Command::Synth {
            config,
            preset,
            seed,
            output,
            overwrite,
        } => commands::synth(config.as_deref(), preset.map(Into::into).zip(seed), &output, overwrite),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
