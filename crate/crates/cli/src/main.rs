use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ttgs_core::harness::{self, HarnessError, RunConfig};

/// Test-time graph search over offline data for frozen goal-conditioned
/// policies, evaluated on a maze testbed.
#[derive(Debug, Parser)]
#[command(name = "ttgs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the planning graph and write its cache file.
    BuildGraph(Common),
    /// Compare the one-shot policy with TTGS over tasks, rollouts and seeds.
    Eval(Common),
    /// Evaluate TTGS over a grid of (tau, budget[, M]) cells.
    Sweep(Common),
    /// Render the distance field and guide path as SVG.
    Viz(Common),
    /// One-shot success rate against goal distance.
    Curve(Common),
    /// Generate an offline dataset in the configured maze.
    GenDataset {
        /// Output file; `.jsonl` selects the text format.
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print the effective configuration as TOML.
    ShowConfig(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config file; fields not set there keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Field overrides as `--<field> <value>` or `--<field>=<value>`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--FIELD VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, HarnessError> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        base.with_overrides(&parse_overrides(&self.overrides)?)
    }
}

fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, HarnessError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(field) = arg.strip_prefix("--") else {
            return Err(HarnessError::Config(format!("expected --<field>, got {arg:?}")));
        };
        match field.split_once('=') {
            Some((k, v)) => out.push((k.to_owned(), v.to_owned())),
            None => {
                let value = it
                    .next()
                    .ok_or_else(|| HarnessError::Config(format!("--{field} needs a value")))?;
                out.push((field.to_owned(), value.clone()));
            }
        }
    }
    Ok(out)
}

fn run(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::BuildGraph(c) => {
            let config = c.resolve()?;
            let report = harness::with_workers(|| harness::cmd_build_graph(&config))?;
            println!("{report}");
        }
        Command::Eval(c) => {
            let config = c.resolve()?;
            let out = harness::with_workers(|| harness::cmd_eval(&config))?;
            print!("{}", out.table.to_csv());
            println!();
            print!("{}", out.comparison.to_csv());
        }
        Command::Sweep(c) => {
            let config = c.resolve()?;
            harness::with_workers(|| harness::cmd_sweep(&config))?;
            let path = PathBuf::from(&config.out_dir).join("sweep.csv");
            let text = std::fs::read_to_string(&path).map_err(|source| HarnessError::Output { path, source })?;
            print!("{text}");
        }
        Command::Viz(c) => {
            let config = c.resolve()?;
            let path = harness::with_workers(|| harness::cmd_viz(&config))?;
            println!("{}", path.display());
        }
        Command::Curve(c) => {
            let config = c.resolve()?;
            let points = harness::with_workers(|| harness::cmd_curve(&config))?;
            println!("n,rate,lo,hi");
            for p in points {
                println!("{},{:.4},{:.4},{:.4}", p.n, p.rate, p.lo, p.hi);
            }
        }
        Command::GenDataset { output, common } => {
            let config = common.resolve()?;
            let n = harness::cmd_gen_dataset(&config, &output)?;
            println!("wrote {n} transitions to {}", output.display());
        }
        Command::ShowConfig(c) => print!("{}", c.resolve()?.to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
