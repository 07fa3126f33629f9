use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use foelner::{run, CliError, Command, Format, GroupMode, RunConfig};

#[derive(Parser)]
#[command(
    name = "foelner",
    version,
    about = "Følner invariants of groups and group von Neumann algebras"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Replay the literal constants next to the re-derived ones in audits.
    #[arg(long, global = true)]
    paper_mode: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Boundary ratios of finite subsets of a Cayley graph.
    Group {
        #[arg(long)]
        group: String,
        /// Comma-separated generators; defaults to the standard ones.
        #[arg(long)]
        gens: Option<String>,
        #[arg(long)]
        radius: usize,
        #[arg(long, value_enum, default_value_t = GroupMode::Exhaustive)]
        mode: GroupMode,
        #[arg(long, default_value_t = 10_000)]
        iters: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Certificate from the explicit witness frame for L(F_n).
    Witness {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long)]
        formula_only: bool,
    },
    /// Annealed search for projections with small commutators.
    Scan {
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        radius: usize,
        #[arg(long, default_value_t = 10_000)]
        iters: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Inequality-chain audit over random frames in L(F_2).
    Audit {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        radius: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 100)]
        frames: usize,
    },
    /// Direct vs closed-form commutator ratios on random frames.
    IdentityCheck {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("FOELNER_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Invalid(format!("FOELNER_THREADS={v:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invalid(e.to_string()))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let command = match cli.command {
        Cmd::Group {
            group,
            gens,
            radius,
            mode,
            iters,
            seed,
        } => Command::Group {
            group,
            generators: gens,
            radius,
            mode,
            iterations: iters,
            seed,
        },
        Cmd::Witness {
            n,
            k,
            depth,
            formula_only,
        } => Command::Witness {
            n,
            k,
            depth,
            formula_only,
        },
        Cmd::Scan {
            n,
            rank,
            radius,
            iters,
            seed,
        } => Command::Scan {
            n,
            rank,
            radius,
            iterations: iters,
            seed,
        },
        Cmd::Audit {
            rank,
            radius,
            seed,
            frames,
        } => Command::Audit {
            rank,
            radius,
            seed,
            frames,
        },
        Cmd::IdentityCheck { trials, seed } => Command::IdentityCheck { trials, seed },
    };
    let report = run(RunConfig {
        command,
        format: cli.format,
        paper_mode: cli.paper_mode,
    })?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let text = report.render()?;
    match cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn global_flags_after_subcommand() {
        let cli = Cli::try_parse_from([
            "foelner", "audit", "--rank", "2", "--radius", "3", "--seed", "1", "--paper-mode",
            "--format", "csv",
        ])
        .unwrap();
        assert!(cli.paper_mode);
        assert_eq!(cli.format, Format::Csv);
        assert!(matches!(cli.command, Cmd::Audit { frames: 100, .. }));
    }

    #[test]
    fn defaults() {
        let cli = Cli::try_parse_from(["foelner", "witness", "--n", "2", "--k", "8"]).unwrap();
        assert!(matches!(
            cli.command,
            Cmd::Witness {
                depth: 6,
                formula_only: false,
                ..
            }
        ));
        assert!(Cli::try_parse_from(["foelner", "group", "--group", "free:2"]).is_err());
    }
}
