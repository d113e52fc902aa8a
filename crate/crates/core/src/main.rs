use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use relay_bounds::channel::{Topology, DEFAULT_BASE_GAMMA};
use relay_bounds::mc::verify_suite;
use relay_bounds::sweep::{self, BoundsConfig, OutputFormat, SweepConfig};
use relay_bounds::{Error, TopologyKind};

#[derive(Parser)]
#[command(name = "relay-bounds", version, about = "Capacity bounds and message-splitting rates for Gaussian MIMO relay channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the angle between H1 and H2 for one relay placement.
    Sweep {
        /// Sweep configuration file; defaults apply without one.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Relay placement when no config file is given.
        #[arg(long, conflicts_with = "config")]
        topology: Option<TopologyKind>,
        /// Angles evaluated concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Overrides the optimizer seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "csv")]
        format: OutputFormat,
        /// Output file; `-` writes CSV to stdout. Defaults to the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every closed-form mutual information against Monte Carlo estimates.
    Verify {
        #[arg(long, default_value_t = 100)]
        profiles: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest antenna count per terminal.
        #[arg(long, default_value_t = 2)]
        max_antennas: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Evaluate bounds and rates for one channel given by its matrices.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Argument(_) => 2,
        Error::Domain(_) | Error::Invariant(_) => 3,
        Error::Io { .. } => 1,
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Sweep {
            config,
            topology,
            jobs,
            seed,
            format,
            out,
        } => {
            let mut cfg = match (&config, topology) {
                (Some(path), _) => SweepConfig::from_file(path)?,
                (None, kind) => SweepConfig::new(Topology::new(
                    kind.unwrap_or(TopologyKind::Equidistant),
                    DEFAULT_BASE_GAMMA,
                )?),
            };
            if let Some(s) = seed {
                cfg.optimizer.seed = s;
            }
            cfg.validate()?;
            let out = out.unwrap_or_else(|| cfg.output_path.clone());
            let result = sweep::run_sweep_with(&cfg, jobs, |row| {
                eprintln!("theta = {:.6} done ({} evaluations)", row.theta, row.evals_total);
            })?;
            if out.as_os_str() == "-" {
                if format != OutputFormat::Csv {
                    return Err(Error::Config("only CSV can be written to stdout".into()));
                }
                let text = sweep::to_csv_string(&result)?;
                std::io::stdout()
                    .write_all(text.as_bytes())
                    .map_err(|e| Error::Io { path: "<stdout>".into(), source: e })?;
            } else {
                for path in sweep::emit(&result, format, &out)? {
                    eprintln!("wrote {}", path.display());
                }
            }
            Ok(true)
        }
        Command::Verify {
            profiles,
            samples,
            seed,
            max_antennas,
            jobs,
        } => {
            let report = verify_suite(profiles, samples, seed, max_antennas, jobs)?;
            for ((expr, n), (_, z)) in report.agree.iter().zip(&report.worst_z) {
                println!("{expr:<16} {n:>4}/{profiles} within 3 SE (worst |z| = {z:.2})");
            }
            let ok = report.passed(0.95);
            println!("{}", if ok { "PASS" } else { "FAIL" });
            Ok(ok)
        }
        Command::Bounds { config } => {
            let cfg = BoundsConfig::from_file(&config)?;
            print!("{}", sweep::run_bounds(&cfg)?.render());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
