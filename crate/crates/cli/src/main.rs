use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qtdm_cli::report::{cmd_report, render_text};
use qtdm_cli::run::cmd_run;
use qtdm_cli::sweep::cmd_sweep;
use qtdm_cli::theory::cmd_theory;
use qtdm_cli::{init_threads, CliError, ConfigArgs};

#[derive(Parser)]
#[command(name = "qtdm", version, about = "Joint regional state and readout estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance per seed and run the requested estimators.
    Run(ConfigArgs),
    /// Sweep the (delta, total shots) grid.
    Sweep(ConfigArgs),
    /// Identifiability, growth, likelihood and scaling checks.
    Theory(ConfigArgs),
    /// Benchmark table from run directories.
    Report {
        dirs: Vec<PathBuf>,
        #[arg(long, default_value = "qtdm-report")]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let report = cmd_run(&config)?;
            for s in &report.seeds {
                for (mode, m) in &s.modes {
                    println!("seed {} {mode}: e_rho {:.4} e_c {:.4} l_bar {:.2}", s.master_seed, m.metrics.e_rho, m.metrics.e_c, m.metrics.l_bar);
                }
            }
            println!("wrote {}", config.out.display());
        }
        Command::Sweep(args) => {
            let config = args.resolve()?;
            let outcome = cmd_sweep(&config)?;
            println!("wrote {} rows to {}", outcome.rows.len(), config.out.join("sweep.csv").display());
            if outcome.failures > 0 {
                return Err(CliError::PartialSweep(outcome.failures));
            }
        }
        Command::Theory(args) => {
            let config = args.resolve()?;
            let report = cmd_theory(&config)?;
            for f in &report.fixtures {
                println!(
                    "{}: dim T {} kernel full {} tensor {} sigma_min {:.3e} c {:.3e}",
                    f.name, f.full.tangent_dim, f.full.kernel_dim, f.tensor.kernel_dim, f.full.sigma_min, f.full.growth_constant_estimate
                );
                for g in &f.growth {
                    println!("  {} direction: {}", g.direction, g.flag);
                }
            }
            println!("kl identity max rel discrepancy {:.2e}", report.kl.max_rel_discrepancy);
            if !report.passed {
                return Err(CliError::Contract("a theory check failed, see theory.json".into()));
            }
        }
        Command::Report { dirs, out } => {
            let rows = cmd_report(&dirs, &out)?;
            print!("{}", render_text(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qtdm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
