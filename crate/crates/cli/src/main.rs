use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cachelab_core::experiments::{
    audit, default_memory_mu, default_memory_su, dichotomy_multi_user, dichotomy_single_user, mixed_rate, render_csv,
    render_dat, render_json, sweep, AuditSpec, SweepSpec, DEFAULT_GAMMA_POINTS,
};
use cachelab_core::model::{regularity, Mode};
use cachelab_core::numeric::parse_rational;
use cachelab_core::{analyze, Error, Memory, Setup, SystemConfig};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "cachelab",
    version,
    about = "Rates, lower bounds and gaps for multi-level coded caching"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Achievable rate, best lower bound and gap at one memory size.
    Rate {
        config: PathBuf,
        #[arg(long = "mem")]
        memory: String,
        /// Reject instances that violate the regularity conditions.
        #[arg(long)]
        strict: bool,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Evaluate a memory grid and write CSV plus JSON and gnuplot companions.
    Sweep {
        config: PathBuf,
        /// `a:b:n`, n evenly spaced points from a to b inclusive.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the two strategies on the families that separate them.
    Dichotomy {
        #[command(subcommand)]
        family: Family,
    },
    /// Split memory between the multi-user and single-user classes.
    Mixed {
        config: PathBuf,
        #[arg(long = "mem")]
        memory: String,
        /// Fraction of memory given to the multi-user class.
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long, default_value_t = DEFAULT_GAMMA_POINTS)]
        points: usize,
    },
    /// Check the gap constants on seeded random instances.
    Audit {
        #[arg(long, value_enum)]
        setup: SetupArg,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
}

#[derive(Subcommand)]
enum Family {
    /// Two levels with `(N1, N2) = (2^5r, 2^8r)`, `(U1, U2) = (2^4r, 2^r)`.
    Mu {
        #[arg(long)]
        r: u64,
        /// Defaults to `2^5r`.
        #[arg(long = "mem")]
        memory: Option<String>,
        /// Defaults to `2^3r`.
        #[arg(long)]
        caches: Option<u64>,
    },
    /// `L` levels of `N` files each, one user per cache.
    Su {
        #[arg(long)]
        levels: u64,
        #[arg(long)]
        files: u64,
        /// Defaults to `LN/4`.
        #[arg(long = "mem")]
        memory: Option<String>,
        #[arg(long)]
        users: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SetupArg {
    Mu,
    Su,
}

/// An error paired with the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Regularity(_) => 3,
            _ => 1,
        };
        Failure::new(code, e.to_string())
    }
}

fn load_config(path: &Path) -> Result<SystemConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::new(2, format!("cannot read {}: {e}", path.display())))?;
    SystemConfig::from_json(&text).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))
}

fn parse_memory(text: &str) -> Result<Memory, Failure> {
    Memory::parse(text).map_err(|e| Failure::new(1, e.to_string()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::new(4, format!("cannot write {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Rate {
            config,
            memory,
            strict,
            json,
        } => {
            let config = load_config(&config)?;
            let memory = parse_memory(&memory)?;
            let mode = if strict { Mode::Strict } else { Mode::Permissive };
            regularity(&config, mode)?;
            let report = analyze(&config, &memory)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report.to_json()).expect("json"));
            } else {
                print!("{}", report.summary());
            }
        }
        Command::Sweep { config, grid, out } => {
            let config = load_config(&config)?;
            let spec = match grid {
                Some(g) => SweepSpec::parse(&g, config.total_files())?,
                None => SweepSpec::default_for(&config),
            };
            let rows = sweep(&config, &spec)?;
            write_file(&out, &render_csv(&rows))?;
            let json = serde_json::to_string_pretty(&render_json(&config, &rows)).expect("json");
            write_file(&out.with_extension("json"), &json)?;
            write_file(&out.with_extension("dat"), &render_dat(&rows))?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::Dichotomy { family } => {
            let result = match family {
                Family::Mu { r, memory, caches } => {
                    let memory = match memory {
                        Some(m) => parse_memory(&m)?,
                        None => default_memory_mu(r),
                    };
                    dichotomy_multi_user(r, &memory, caches)?
                }
                Family::Su {
                    levels,
                    files,
                    memory,
                    users,
                } => {
                    let memory = match memory {
                        Some(m) => parse_memory(&m)?,
                        None => default_memory_su(levels, files),
                    };
                    dichotomy_single_user(levels, files, &memory, users)?
                }
            };
            if !result.regime_ok {
                eprintln!("warning: memory is outside the regime where every level is partially stored");
            }
            println!("{}", serde_json::to_string_pretty(&result.to_json()).expect("json"));
        }
        Command::Mixed {
            config,
            memory,
            gamma,
            points,
        } => {
            let config = load_config(&config)?;
            let memory = parse_memory(&memory)?;
            let gamma = match gamma {
                Some(g) => {
                    Some(parse_rational(&g).ok_or_else(|| Failure::new(1, format!("cannot parse gamma `{g}`")))?)
                }
                None => None,
            };
            let report = mixed_rate(&config, &memory, gamma, points)?;
            print!("{}", report.summary());
        }
        Command::Audit {
            setup,
            count,
            seed,
            points,
        } => {
            let setup = match setup {
                SetupArg::Mu => Setup::MultiUser,
                SetupArg::Su => Setup::SingleUser,
            };
            let spec = AuditSpec {
                points,
                ..AuditSpec::new(setup, count, seed)
            };
            let summary = audit(&spec)?;
            print!("{}", summary.render());
            if !summary.ok() {
                let first = summary.failures[0].to_json();
                return Err(Failure::new(
                    5,
                    format!(
                        "{} failure(s); first offending instance:\n{}",
                        summary.failures.len(),
                        serde_json::to_string_pretty(&first).expect("json")
                    ),
                ));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
