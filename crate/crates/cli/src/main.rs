mod bundled;
mod run;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use run::RunError;

#[derive(Parser)]
#[command(name = "skewprod", version, about = "Scenario runner for skew-product cocycles over irrational rotations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or a bundled scenario by name) and write the report and tables.
    Run {
        scenario: String,
        #[arg(long, default_value = "skewprod-out")]
        out: PathBuf,
        /// Worker threads for the parallel parts of each task.
        #[arg(long)]
        threads: Option<usize>,
        /// Seed for random sampling in verification steps; recorded in the report.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check a scenario against the schema and its invariants without computing anything.
    Validate { scenario: String },
    /// List the bundled scenarios.
    List,
}

fn read(arg: &str) -> Result<String, RunError> {
    let path = Path::new(arg);
    if path.is_file() {
        return std::fs::read_to_string(path).map_err(|source| RunError::Io { path: arg.to_string(), source });
    }
    bundled::lookup(arg).map(str::to_string).ok_or_else(|| RunError::NotFound(arg.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::List => {
            bundled::SCENARIOS.iter().try_for_each(|(name, text)| {
                let (s, _) = scenario::load(text).map_err(RunError::Schema)?;
                println!("{name:<20} {}", s.description);
                Ok(())
            })
        }
        Command::Validate { scenario } => read(&scenario).and_then(|text| {
            let (s, _) = scenario::load(&text).map_err(RunError::Schema)?;
            println!("ok: scenario `{}` with {} task(s)", s.name, s.tasks.len());
            Ok(())
        }),
        Command::Run { scenario, out, threads, seed } => (|| {
            if let Some(n) = threads {
                // only fails if a pool already exists, which cannot happen this early
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
            }
            let text = read(&scenario)?;
            let (s, echo) = scenario::load(&text).map_err(RunError::Schema)?;
            let artifacts = run::execute(&s, echo, seed)?;
            run::write(&artifacts, &out, &s.outputs)?;
            println!("wrote {} task result(s) to {}", s.tasks.len(), out.display());
            Ok(())
        })(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                RunError::Schema(s) => {
                    for d in &s.0 {
                        eprintln!("schema error: {d}");
                    }
                }
                e => eprintln!("error: {e}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
