use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use freqbin::commands::{self, Common, Status};
use freqbin::CliResult;

/// Simulate and analyse a Sagnac frequency-bin entangled photon-pair source.
#[derive(Debug, Parser)]
#[command(name = "freqbin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Configuration file, or `paper-profile` for the built-in one (default).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

impl From<CommonArgs> for Common {
    fn from(a: CommonArgs) -> Self {
        Common {
            config: a.config,
            seed: a.seed,
            out: a.out,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write branch-count, beating and power-scan CSVs.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fit the beating curve to a CSV and write fit.json.
    Fit {
        beating_csv: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
        /// Remove the accidental level implied by the configured CAR first.
        #[arg(long)]
        subtract_accidentals: bool,
    },
    /// Reconstruct the density matrix and write report.json.
    Tomo {
        fit_json: PathBuf,
        branch_csv: PathBuf,
        /// Power-scan CSV to fit and include in the report.
        #[arg(long, value_name = "PATH")]
        power_scan: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
        /// Clip V to the physical bound 2√(p(1−p)) before reconstructing.
        #[arg(long)]
        project_physical: bool,
    },
    /// Render plots and a summary table from report.json.
    Report {
        report_json: PathBuf,
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Run the acceptance checks against the built-in profile.
    Verify {
        #[arg(long, value_name = "N", default_value_t = freqbin::verify::DEFAULT_SEED)]
        seed: u64,
    },
}

fn run(cli: Cli) -> CliResult<Status> {
    match cli.command {
        Command::Simulate { common } => {
            let (status, files) = commands::simulate(&common.into())?;
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(status)
        }
        Command::Fit {
            beating_csv,
            common,
            subtract_accidentals,
        } => {
            let (status, report, path) =
                commands::fit(&common.into(), &beating_csv, subtract_accidentals)?;
            let v = report.fit.params.visibility;
            println!(
                "V = {} ± {}, reduced chi2 {:.3}, {} iterations",
                v.value,
                v.sigma.map_or_else(|| "n/a".to_owned(), |s| s.to_string()),
                report.fit.reduced_chi_square,
                report.fit.iterations
            );
            if status == Status::NotConverged {
                eprintln!("warning: fit did not converge");
            }
            println!("wrote {}", path.display());
            Ok(status)
        }
        Command::Tomo {
            fit_json,
            branch_csv,
            power_scan,
            common,
            project_physical,
        } => {
            let (status, bundle) = commands::tomo(
                &common.into(),
                &fit_json,
                &branch_csv,
                power_scan.as_deref(),
                project_physical,
            )?;
            print!("{}", commands::summary(&bundle, &[]));
            match status {
                Status::Unphysical => eprintln!(
                    "error: reconstructed state is unphysical (margin {:+.5})",
                    bundle.density_matrix.physicality_margin
                ),
                Status::NotConverged => eprintln!("warning: beating fit did not converge"),
                _ => {}
            }
            Ok(status)
        }
        Command::Report { report_json, out } => {
            let (status, rendered) = commands::report(&report_json, &out)?;
            for w in &rendered.warnings {
                eprintln!("warning: {w}");
            }
            for f in rendered.plots.iter().chain(&rendered.sidecars) {
                println!("wrote {}", f.display());
            }
            println!("wrote {}", rendered.summary.display());
            Ok(status)
        }
        Command::Verify { seed } => {
            let (status, results) = commands::verify(seed);
            for c in &results {
                println!("{c}");
            }
            let passed = results.iter().filter(|c| c.passed).count();
            println!("{passed}/{} criteria passed", results.len());
            Ok(status)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
