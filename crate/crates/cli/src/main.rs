//! `ernet`: build models, run the inference flows, cost them against hardware targets and scan
//! the expansion-ratio design space.

mod commands;
mod config;
mod model_args;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ernet", version, about = "Block-based inference and cost tools for expansion-reduction networks")]
struct Cli {
    /// Flat TOML file of flag values; flags given on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a model and write its description and seeded weights.
    Build(commands::BuildArgs),
    /// Run one inference flow on an image.
    Infer(commands::InferArgs),
    /// Run all three flows, compare outputs and check counters against the analytic model.
    VerifyFlows(commands::VerifyArgs),
    /// Cost a model against a hardware target.
    Cost(commands::CostArgs),
    /// Find the largest affordable expansion ratio per module count.
    Scan(commands::ScanArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<commands::VerificationFailed>().is_some() {
        return 2;
    }
    for cause in err.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some()
            || matches!(cause.downcast_ref::<ernet::Error>(), Some(ernet::Error::Io(_)))
        {
            return 3;
        }
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = cli.config.as_deref().map(config::load).transpose()?;
    let cfg = cfg.as_ref();
    match cli.command {
        Command::Build(a) => commands::build(config::merge(&a, cfg)?),
        Command::Infer(a) => commands::infer(config::merge(&a, cfg)?),
        Command::VerifyFlows(a) => commands::verify_flows(config::merge(&a, cfg)?),
        Command::Cost(a) => commands::cost(config::merge(&a, cfg)?),
        Command::Scan(a) => commands::scan(config::merge(&a, cfg)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_classes() {
        let verify = anyhow::Error::new(commands::VerificationFailed(1));
        assert_eq!(exit_code(&verify), 2);
        let io = anyhow::Error::new(std::io::Error::other("disk")).context("writing");
        assert_eq!(exit_code(&io), 3);
        let wrapped = anyhow::Error::new(ernet::Error::Io(std::io::Error::other("disk")));
        assert_eq!(exit_code(&wrapped), 3);
        assert_eq!(exit_code(&anyhow::anyhow!("bad flag")), 1);
    }
}
