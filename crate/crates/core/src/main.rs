use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use d2dsim::config::{load_config, ConfigError, SimConfig};
use d2dsim::fmt_f64;
use d2dsim::matching::{build_candidates, is_stable, solve, utilities, SolveError, SolveOptions};
use d2dsim::scenario::{generate_scenario, read_scenario_csv, write_scenario_csv, ScenarioCsvError};
use d2dsim::sim::{emit_csv, sweep, SimError, Strategy, SweepSpec, SweepVariable};

#[derive(Parser)]
#[command(name = "d2dsim", version, about = "Context-aware D2D link assignment simulator")]
struct Cli {
    /// Overrides `rng_seed` from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write aggregated rows as CSV.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_variable)]
        sweep: SweepVariable,
        /// Comma-separated, strictly increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        reps: usize,
        #[arg(long, value_delimiter = ',', default_value = "matching,random", value_parser = parse_strategy)]
        strategies: Vec<Strategy>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the assignment for a dumped scenario and write the matched links.
    Match {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a scenario and dump it as CSV.
    Scenario {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dump: PathBuf,
    },
}

fn parse_variable(s: &str) -> Result<SweepVariable, String> {
    s.parse()
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

enum CliError {
    Validation(String),
    Io(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Io { .. } => CliError::Io(e.to_string()),
            SimError::Config(c) => c.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn config(path: Option<&Path>, seed: Option<u64>) -> Result<SimConfig, CliError> {
    let mut cfg = match path {
        Some(p) => load_config(p)?,
        None => SimConfig::default(),
    };
    if let Some(s) = seed {
        cfg.rng_seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            config: cfg_path,
            sweep: variable,
            values,
            reps,
            strategies,
            out,
        } => {
            let spec = SweepSpec {
                variable,
                values,
                replications: reps,
                base: config(cfg_path.as_deref(), cli.seed)?,
                strategies,
            };
            let rows = sweep(&spec)?;
            emit_csv(&rows, &out)?;
            println!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::Match {
            scenario,
            config: cfg_path,
            out,
        } => {
            let cfg = config(cfg_path.as_deref(), cli.seed)?;
            let file = File::open(&scenario).map_err(|e| io_error(&scenario, e))?;
            let world = read_scenario_csv(BufReader::new(file)).map_err(|e| match e {
                ScenarioCsvError::Io(e) => io_error(&scenario, e),
                other => CliError::Validation(format!("{}: {other}", scenario.display())),
            })?;
            let candidates = build_candidates(&world, &cfg);
            let opts = SolveOptions {
                max_outer_iterations: cfg.max_outer_iterations,
            };
            let (matching, iterations, converged) = match solve(&candidates, &opts) {
                Ok(sol) => (sol.matching, sol.iterations, true),
                Err(SolveError::NotConverged(nc)) => (nc.best, nc.iterations, false),
            };
            let u = utilities(&candidates, &matching).expect("solver output is a candidate matching");
            let (no_blocking, _) = is_stable(&matching, &candidates).expect("validated");

            let file = File::create(&out).map_err(|e| io_error(&out, e))?;
            let mut w = BufWriter::new(file);
            let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
                writeln!(w, "pair_id,channel_id,offload_score,offload_size,p_consistent,rate")?;
                for (p, c) in matching.links() {
                    let l = candidates.link(p, c).expect("candidate");
                    writeln!(
                        w,
                        "{},{},{},{},{},{}",
                        p.0,
                        c.0,
                        fmt_f64(l.offload_score),
                        fmt_f64(l.offload_size),
                        fmt_f64(l.p_consistent),
                        fmt_f64(l.rate())
                    )?;
                }
                w.flush()
            };
            write(&mut w).map_err(|e| io_error(&out, e))?;
            println!(
                "u_net={} iterations={} stable={} converged={}",
                fmt_f64(u.u_net),
                iterations,
                converged && no_blocking,
                converged
            );
        }
        Command::Scenario { config: cfg_path, dump } => {
            let cfg = config(cfg_path.as_deref(), cli.seed)?;
            let world = generate_scenario(&cfg);
            let file = File::create(&dump).map_err(|e| io_error(&dump, e))?;
            write_scenario_csv(&world, BufWriter::new(file)).map_err(|e| io_error(&dump, e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // bad arguments are validation errors; --help and --version are not errors
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
