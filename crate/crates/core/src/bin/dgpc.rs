use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dgpc::config::{load_config, Method, PRESETS};
use dgpc::export::{compare, execute, resume, RunSummary};
use dgpc::{DgpcError, Result};

/// Dynamical polynomial chaos and Monte Carlo solvers for white-noise driven
/// Burgers and Navier-Stokes equations.
#[derive(Parser)]
#[command(name = "dgpc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration (file, preset or both).
    Run {
        /// TOML configuration file.
        config: Option<PathBuf>,
        /// Built-in preset, `name` or `name:variant`.
        #[arg(long)]
        preset: Option<String>,
        /// Override a setting, e.g. `--set dgpc.kl_modes=4`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Method to run instead of the configured one.
        #[arg(long, value_parser = parse_method)]
        method: Option<Method>,
        /// Output directory.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Print the resolved configuration and exit.
        #[arg(long)]
        dry_run: bool,
    },
    /// Continue a solver run from a snapshot.
    Resume {
        snapshot: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Relative L2 errors of the moments of a run against a reference run.
    Compare {
        run: PathBuf,
        reference: PathBuf,
        /// Directory for errors.csv; defaults to the run directory.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Exact moments of the travelling-wave Burgers problem.
    Oracle {
        config: Option<PathBuf>,
        #[arg(long, default_value = "example3")]
        preset: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// List built-in presets and their variants.
    Presets,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    match s {
        "dgpc" => Ok(Method::Dgpc),
        "mc" => Ok(Method::Mc),
        "oracle" => Ok(Method::Oracle),
        _ => Err(format!("unknown method `{s}` (dgpc, mc, oracle)")),
    }
}

fn report(s: &RunSummary) {
    let m = &s.manifest;
    println!(
        "wrote {} moment files to {} in {:.2} s",
        m.moments.len(),
        s.output.display(),
        m.wall_time_seconds
    );
    if m.intervals > 0 {
        println!("{} intervals, {} restarts", m.intervals, m.restarts);
    }
    if let (Some(u), Some(x)) = (m.paths_used, m.paths_excluded) {
        println!("{u} paths used, {x} excluded");
    }
}

fn output_dir(cli: Option<PathBuf>, configured: Option<&Path>) -> PathBuf {
    cli.or_else(|| configured.map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("dgpc-output"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            preset,
            mut overrides,
            method,
            out,
            dry_run,
        } => {
            if config.is_none() && preset.is_none() {
                return Err(DgpcError::usage("give a configuration file or --preset"));
            }
            if let Some(m) = method {
                let name = match m {
                    Method::Dgpc => "dgpc",
                    Method::Mc => "mc",
                    Method::Oracle => "oracle",
                };
                overrides.push(format!("method = \"{name}\""));
            }
            let cfg = load_config(config.as_deref(), preset.as_deref(), &overrides)?;
            if dry_run {
                print!("{}", cfg.to_toml()?);
                return Ok(());
            }
            let out = output_dir(out, cfg.output.as_deref());
            report(&execute(&cfg, &out)?);
        }
        Command::Resume {
            snapshot,
            overrides,
            out,
        } => report(&resume(&snapshot, &out, &overrides)?),
        Command::Compare {
            run,
            reference,
            out,
        } => {
            let out = out.unwrap_or_else(|| run.clone());
            let rows = compare(&run, &reference, &out)?;
            println!("component,order,time,error,relative");
            for r in &rows {
                println!(
                    "{},{},{},{:.6e},{}",
                    r.component, r.order, r.time, r.error, r.relative
                );
            }
        }
        Command::Oracle {
            config,
            preset,
            mut overrides,
            out,
        } => {
            overrides.push("method = \"oracle\"".into());
            let cfg = load_config(config.as_deref(), Some(&preset), &overrides)?;
            let out = output_dir(out, cfg.output.as_deref());
            report(&execute(&cfg, &out)?);
        }
        Command::Presets => {
            for (name, variants) in PRESETS {
                println!("{name}: {}", variants.join(", "));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Some(n) = std::env::var("DGPC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(DgpcError::Config(list)) => {
            eprintln!("configuration errors:");
            for e in list {
                eprintln!("  - {e}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
