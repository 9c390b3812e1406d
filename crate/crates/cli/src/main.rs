use std::path::{Path, PathBuf};
use std::process::ExitCode;

use arlang_core::{load, Program, Runtime, RuntimeOptions, SchedulerMode};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "arlang", version, about = "Run actor-reactor programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a program, spawn Main and run its start constructor.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Scheduler::Deterministic)]
        scheduler: Scheduler,
        /// Seed for every Random instance.
        #[arg(long)]
        seed: Option<u64>,
        /// Stop after this many turns (0 = unbounded).
        #[arg(long, default_value_t = 0)]
        max_turns: u64,
        /// Print one line per reactor turn on stderr.
        #[arg(long)]
        trace_propagation: bool,
        /// Print every termination check on stderr.
        #[arg(long)]
        trace_sct: bool,
        /// Print the graph of a reactor behaviour instead of running.
        #[arg(long, value_name = "BEHAVIOUR")]
        dump_dag: Option<String>,
    },
    /// Print the compiled graph of a reactor behaviour.
    DumpDag { file: PathBuf, behaviour: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheduler {
    Deterministic,
    Concurrent,
}

const EXIT_LOAD: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn read_program(path: &Path) -> Result<Program, ExitCode> {
    let source = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_LOAD)
    })?;
    load(&source).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_LOAD)
    })
}

fn dump(program: &Program, behaviour: &str) -> ExitCode {
    match program.dag(behaviour) {
        Some(dag) => {
            print!("{}", dag.dump());
            ExitCode::SUCCESS
        }
        None => {
            eprintln!("error: no reactor behaviour named `{behaviour}`");
            ExitCode::from(EXIT_LOAD)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::DumpDag { file, behaviour } => match read_program(&file) {
            Ok(p) => dump(&p, &behaviour),
            Err(code) => code,
        },
        Command::Run {
            file,
            scheduler,
            seed,
            max_turns,
            trace_propagation,
            trace_sct,
            dump_dag,
        } => {
            let program = match read_program(&file) {
                Ok(p) => p,
                Err(code) => return code,
            };
            if let Some(b) = dump_dag {
                return dump(&program, &b);
            }
            let options = RuntimeOptions {
                scheduler: match scheduler {
                    Scheduler::Deterministic => SchedulerMode::Deterministic,
                    Scheduler::Concurrent => SchedulerMode::Concurrent,
                },
                seed,
                max_turns,
                trace_propagation,
                trace_sct,
                ..Default::default()
            };
            let summary = Runtime::new(&program, options).run();
            match summary.error {
                Some(e) => {
                    eprintln!("runtime error: {e}");
                    ExitCode::from(EXIT_RUNTIME)
                }
                None => ExitCode::SUCCESS,
            }
        }
    }
}
