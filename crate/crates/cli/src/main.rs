use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use superband::commands::{cmd_bands, cmd_sweep, cmd_verify, CommandOutput, ExitStatus};
use superband::config::RunConfig;
use superband::exec::Execution;

#[derive(Parser)]
#[command(name = "superband", version, about = "Band projectors and interband transition bounds for driven Bloch electrons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Band energies over the k-grid and the gap certificate.
    Bands(Common),
    /// Recurrence identities, projector exactness and defect scaling.
    Verify(Common),
    /// Transition amplitudes against the Duhamel bound over (epsilon, a, k).
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML); the bundled reference model if omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides output.dir.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; overrides output.workers.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Double every grid for a convergence audit.
    #[arg(long)]
    refine: bool,
}

fn load(common: &Common) -> superband::Result<(RunConfig, PathBuf, Execution)> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::reference(),
    };
    if let Some(w) = common.workers {
        cfg.output.workers = w;
    }
    if common.refine {
        cfg = cfg.refined();
    }
    cfg.validate()?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let exec = Execution::with_workers(cfg.output.workers);
    Ok((cfg, out, exec))
}

fn run(cli: Cli) -> superband::Result<CommandOutput> {
    let (common, which) = match &cli.command {
        Command::Bands(c) => (c, "bands"),
        Command::Verify(c) => (c, "verify"),
        Command::Sweep(c) => (c, "sweep"),
    };
    let (cfg, out, exec) = load(common)?;
    let output = match which {
        "bands" => cmd_bands(&cfg)?,
        "verify" => cmd_verify(&cfg, exec)?,
        _ => cmd_sweep(&cfg, exec)?,
    };
    output.write_to(&out)?;
    Ok(output)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(ExitStatus::Usage.code() as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(output) => {
            for line in &output.summary {
                println!("{line}");
            }
            for p in &output.problems {
                eprintln!("FAILED {p}");
            }
            ExitCode::from(output.status.code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(ExitStatus::of_error(&e).code() as u8)
        }
    }
}
