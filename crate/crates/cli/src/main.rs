use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mprelay_cli::{load_config, run_region, run_sumrate, run_validate, CliError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "mprelay", version, about = "Rate regions of the two-pair bidirectional relay network")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Trace projected region boundaries and write one CSV per protocol.
    Region(Common),
    /// Sweep uniform power and write the maximum sum rates.
    Sumrate(Common),
    /// Run the validation suites; exits 1 if any fails.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `search.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `outputs.dir`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig, CliError> {
        let mut cfg = load_config(&self.config)?;
        if let Some(s) = self.seed {
            cfg.search.seed = s;
        }
        if let Some(d) = &self.out_dir {
            cfg.out_dir = d.clone();
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.cmd {
        Cmd::Region(c) => {
            for p in run_region(&c.load()?)? {
                println!("{}", p.display());
            }
            Ok(true)
        }
        Cmd::Sumrate(c) => {
            println!("{}", run_sumrate(&c.load()?)?.display());
            Ok(true)
        }
        Cmd::Validate(c) => {
            let report = run_validate(&c.load()?)?;
            println!("{report}");
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
