use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pbif::cli::{run, Mode, RunConfig, RunError};

/// Radial p-Laplacian bifurcation runs driven by a JSON configuration.
#[derive(Debug, Parser)]
#[command(name = "pbif", version)]
struct Args {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the mode from the configuration.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized property trials.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; with 2 or more the two branches are traced concurrently.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn fail(e: &RunError, out: Option<&PathBuf>) -> ExitCode {
    let record = e.record();
    if let Some(dir) = out.filter(|d| d.is_dir()) {
        let _ = std::fs::write(dir.join("error.json"), format!("{record:#}\n"));
    }
    println!("{record}");
    ExitCode::from(e.code as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PBIF_LOG", "error")).init();
    let args = Args::parse();
    let mut cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(&e, args.out.as_ref()),
    };
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(o) = args.out {
        cfg.out = o;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    match run(&cfg, args.threads) {
        Ok(summary) => {
            println!("{}", serde_json::json!({ "status": "ok", "mode": summary.mode, "files": summary.files }));
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e, Some(&cfg.out)),
    }
}
