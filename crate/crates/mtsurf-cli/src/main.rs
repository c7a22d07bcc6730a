//! Manifest-driven CLI for marginally trapped surface analysis.
//!
//! Exit codes: 0 success; 1 residuals or laws above tolerance / not
//! congruent; 2 manifest, CSV or IO error; 3 violated family or pipeline
//! precondition; 4 grid mismatch.

mod commands;
mod manifest;

use clap::{Args, Parser, Subcommand};
use manifest::{BackendChoice, Manifest};
use mtsurf::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mtsurf", version, about = "marginally trapped surfaces in de Sitter 4-space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Manifest JSON path.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory (defaults to the manifest's `output`, then `./out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Residual tolerance override.
    #[arg(long)]
    tol: Option<f64>,
    /// Grid resolution override as nx,ny.
    #[arg(long)]
    grid: Option<String>,
    /// Backend override.
    #[arg(long, value_parser = ["analytic", "fd"])]
    backend: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the invariant pipeline and write invariants.csv,
    /// classification.json and residuals.json.
    Analyze(Common),
    /// Integrate the requested deformation families and verify their
    /// transformation laws.
    Deform(Common),
    /// Congruence-test two surface CSVs on the manifest grid.
    Verify {
        #[command(flatten)]
        common: Common,
        path_a: PathBuf,
        path_b: PathBuf,
    },
    /// Sample the manifest surface and write its positions CSV.
    Generate(Common),
}

fn apply_overrides(m: &mut Manifest, c: &Common) -> Result<(), Error> {
    if let Some(t) = c.tol {
        m.options.tolerance = Some(t);
    }
    if let Some(g) = &c.grid {
        let parts: Vec<&str> = g.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::Manifest(format!("--grid wants nx,ny, got '{g}'")));
        }
        let nx = parts[0]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Manifest(format!("--grid nx: {e}")))?;
        let ny = parts[1]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Manifest(format!("--grid ny: {e}")))?;
        m.grid.resolution = [nx, ny];
    }
    if let Some(b) = &c.backend {
        m.backend = if b == "fd" {
            BackendChoice::Fd
        } else {
            BackendChoice::Analytic
        };
    }
    Ok(())
}

fn out_dir(m: &Manifest, c: &Common) -> PathBuf {
    c.out
        .clone()
        .or_else(|| m.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Manifest(_) | Error::Parse(_) | Error::Io(_) | Error::Validation(_) => 2,
        Error::GridMismatch(_) => 4,
        Error::State(_)
        | Error::Parameter(_)
        | Error::Isotropy { .. }
        | Error::GaussMapConstant(_)
        | Error::NonIntegrable(_)
        | Error::Normalization(_)
        | Error::NotSpacelike { .. } => 3,
        _ => 1,
    }
}

fn run() -> Result<bool, Error> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Analyze(c) | Command::Deform(c) | Command::Generate(c) => {
            let (mut m, hash) = Manifest::load(&c.manifest)?;
            apply_overrides(&mut m, c)?;
            let base = c
                .manifest
                .parent()
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("."));
            let out = out_dir(&m, c);
            match &cli.command {
                Command::Analyze(_) => {
                    let ok = commands::cmd_analyze(&m, &hash, &base, &out)?;
                    println!(
                        "analyze: {} (reports in {})",
                        if ok { "PASS" } else { "FAIL" },
                        out.display()
                    );
                    Ok(ok)
                }
                Command::Deform(_) => {
                    let ok = commands::cmd_deform(&m, &hash, &base, &out)?;
                    println!(
                        "deform: {} (outputs in {})",
                        if ok { "PASS" } else { "FAIL" },
                        out.display()
                    );
                    Ok(ok)
                }
                Command::Generate(_) => {
                    let path = commands::cmd_generate(&m, &base, &out)?;
                    println!("generated {}", path.display());
                    Ok(true)
                }
                Command::Verify { .. } => unreachable!(),
            }
        }
        Command::Verify {
            common,
            path_a,
            path_b,
        } => {
            let (mut m, hash) = Manifest::load(&common.manifest)?;
            apply_overrides(&mut m, common)?;
            let out = out_dir(&m, common);
            let ok = commands::cmd_verify(&m, &hash, path_a, path_b, &out, common.tol)?;
            println!(
                "verify: {} (report in {})",
                if ok { "congruent" } else { "not congruent" },
                out.display()
            );
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
