use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use locbo_experiment::runner::{audit_dir, Manifest};
use locbo_experiment::{audit, registry, run_experiment, ExperimentSpec, RunOptions};

#[derive(Parser)]
#[command(name = "locbo", version, about = "Run and audit conformal Bayesian-optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a spec file or a previous manifest.
    Run {
        spec: PathBuf,
        /// Base seed; trial i uses seed + i.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Output directory.
        #[arg(long, env = "LOCBO_OUT")]
        out: Option<PathBuf>,
        /// Overwrite existing results.
        #[arg(long)]
        force: bool,
    },
    /// Print the coverage audit of a results directory.
    Audit { dir: PathBuf },
    /// List known problems and methods.
    List,
}

fn load_spec(path: &PathBuf) -> locbo_experiment::Result<ExperimentSpec> {
    match Manifest::load(path) {
        Ok(m) => Ok(m.spec),
        Err(_) => ExperimentSpec::load(path),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            spec,
            seed,
            trials,
            out,
            force,
        } => load_spec(&spec).and_then(|mut s| {
            if let Some(seed) = seed {
                s.base_seed = seed;
            }
            if let Some(n) = trials {
                s.n_trials = n;
            }
            let out_dir = out
                .or_else(|| s.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("results"));
            let summary = run_experiment(&s, &RunOptions { out_dir: out_dir.clone(), force })?;
            for (label, finals) in &summary.terminal {
                if !finals.is_empty() {
                    println!(
                        "{label}: median final {} = {:.6} over {} trials",
                        summary.metric,
                        locbo_experiment::stats::median(finals),
                        finals.len()
                    );
                }
            }
            for f in &summary.failures {
                eprintln!("{} trial {} failed: {}", f.method, f.trial, f.message);
            }
            println!("results written to {}", out_dir.display());
            Ok(())
        }),
        Command::Audit { dir } => audit_dir(&dir).and_then(|rows| {
            let path = dir.join("audit.csv");
            audit::write_csv(&rows, &path)?;
            println!("method,trial,rounds,y_miscoverage,y_bound,f_miscoverage,f_bound,b_xi");
            for r in &rows {
                let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
                println!(
                    "{},{},{},{:.6},{},{:.6},{},{}",
                    r.method,
                    r.trial,
                    r.rounds,
                    r.y_miscoverage,
                    opt(r.y_bound),
                    r.f_miscoverage,
                    opt(r.f_bound),
                    opt(r.b_xi)
                );
            }
            Ok(())
        }),
        Command::List => {
            println!("problems: {}", registry::problem_names().join(", "));
            println!("methods: {}", registry::method_names().join(", "));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
