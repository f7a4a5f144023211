//! Command-line front end: subcommands, run manifests, SVG plots and the
//! acceptance criteria.
//!
//! Exit codes: 0 success, 1 a reproduced criterion failed, 2 precondition
//! failure, 3 cap exceeded, 4 input, parse or I/O error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;

pub mod args;
pub mod commands;
pub mod criteria;
pub mod manifest;
pub mod svg;

use args::Cli;
use commands::{execute, to_pretty, CriterionFailed};
use manifest::{Hashed, RunManifest};

pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<CriterionFailed>().is_some() {
        return 1;
    }
    match err.downcast_ref::<ucvx::Error>() {
        Some(ucvx::Error::Precondition(_) | ucvx::Error::NotConvex { .. } | ucvx::Error::Lp(_)) => 2,
        Some(ucvx::Error::CapExceeded(_)) => 3,
        _ => 4,
    }
}

fn write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes).map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))
}

fn manifest_path(cli: &Cli) -> Option<PathBuf> {
    cli.common.manifest.clone().or_else(|| {
        cli.common.report.as_ref().map(|r| {
            let mut s = r.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    })
}

fn run_cli(cli: &Cli) -> anyhow::Result<()> {
    let start = Instant::now();
    let out = match cli.common.threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(|| execute(&cli.command))?,
        None => execute(&cli.command)?,
    };
    let mut outputs = Vec::new();
    let report = to_pretty(&out.report)?;
    match &cli.common.report {
        Some(p) => {
            write(p, &report)?;
            outputs.push(Hashed::new(p.display().to_string(), &report));
        }
        None => {
            print!("{}", String::from_utf8_lossy(&report));
            outputs.push(Hashed::new("stdout", &report));
        }
    }
    if let Some(p) = &cli.common.plot {
        let svg = out.plot.as_ref().map(|p| p.render()).unwrap_or_else(|| svg::Plot::new(format!("{}: nothing to plot", cli.command.name())).render());
        write(p, svg.as_bytes())?;
        outputs.push(Hashed::new(p.display().to_string(), svg.as_bytes()));
    }
    for (p, bytes) in &out.files {
        write(p, bytes)?;
        outputs.push(Hashed::new(p.display().to_string(), bytes));
    }
    if let Some(p) = manifest_path(cli) {
        let m = RunManifest {
            subcommand: cli.command.name().to_string(),
            inputs: out.inputs,
            parameters: serde_json::to_value(&cli.command)?,
            seed: cli.common.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: start.elapsed().as_secs_f64(),
            outputs,
        };
        write(&p, &to_pretty(&m)?)?;
    }
    match out.deferred {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 4 } else { 0 };
        }
    };
    match run_cli(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
