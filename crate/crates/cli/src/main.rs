use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kernel_lsq::experiment::{self, LoadedConfig, Manifest};
use kernel_lsq::Error;

const EXIT_OTHER: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "kernel-lsq", version, about = "Kernel Lagrange bases and L2 projectors on the sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every level of a sweep and write the reports.
    Run { config: PathBuf },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Melt the reports of a run directory into experiment,level,metric,value rows.
    Plotdata {
        dir: PathBuf,
        /// Write here instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        _ => EXIT_OTHER,
    }
}

fn summarize(m: &Manifest) {
    for l in &m.levels {
        let status = if l.ok { "ok" } else { "FAILED" };
        eprintln!("level {:>6} {status}", l.n);
        for s in l.stages.iter().filter(|s| s.error.is_some()) {
            eprintln!("    {:?}: {}", s.stage, s.error.as_deref().unwrap_or_default());
        }
    }
}

fn execute(command: Command) -> Result<u8, Error> {
    match command {
        Command::Validate { config } => {
            let loaded = LoadedConfig::load(&config)?;
            let v = experiment::validate(&loaded)?;
            for d in &v.diagnostics {
                println!("{d}");
            }
            println!("ok: {} level(s)", v.levels.len());
            Ok(0)
        }
        Command::Run { config } => {
            let loaded = LoadedConfig::load(&config)?;
            let manifest = experiment::run(&loaded)?;
            summarize(&manifest);
            eprintln!("reports in {}", loaded.output_dir().display());
            Ok(if manifest.all_failed() { EXIT_NUMERICAL } else { 0 })
        }
        Command::Plotdata { dir, out } => {
            let rows = experiment::plotdata(&dir)?;
            match out {
                Some(path) => experiment::write_plotdata(BufWriter::new(File::create(path)?), &rows)?,
                None => {
                    let stdout = io::stdout();
                    let mut lock = stdout.lock();
                    experiment::write_plotdata(&mut lock, &rows)?;
                    lock.flush()?;
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
