mod args;
mod commands;
mod report;

use args::{Cli, Command};
use clap::Parser;
use report::{manifest, render, Failure, SCHEMA};
use serde_json::json;
use std::io::Write;
use std::time::Instant;

fn run(cli: &Cli) -> Result<i32, Failure> {
    let threads = match cli.threads {
        Some(0) => return Err(Failure::usage("--threads must be at least 1")),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| Failure {
        code: 1,
        message: e.to_string(),
        detail: None,
    })?;
    let start = Instant::now();
    let (report, family_config) = pool.install(|| match &cli.command {
        Command::Constants(a) => commands::constants(a).map(|r| (r, None)),
        Command::Family(a) => commands::family(a),
        Command::Explicit(a) => commands::explicit(a),
        Command::Verify(a) => commands::verify(a).map(|r| (r, None)),
    })?;
    let config = json!({
        "command": cli.command,
        "format": cli.format,
        "family_config_sha256": family_config.map(|c| report::sha256_hex(c.as_bytes())),
    });
    let m = manifest(&config, &report, threads, start.elapsed().as_secs_f64());
    let (doc, side) = render(cli.command.name(), cli.format, &report, &m)?;
    match &cli.out {
        Some(path) => {
            std::fs::write(path, doc).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
            if let Some(s) = side {
                let mp = format!("{}.manifest.json", path.display());
                std::fs::write(&mp, s).map_err(|e| Failure::usage(format!("cannot write {mp}: {e}")))?;
            }
        }
        None => {
            std::io::stdout().write_all(doc.as_bytes()).map_err(anyhow::Error::from)?;
            if let Some(s) = side {
                eprint!("{s}");
            }
        }
    }
    Ok(report.code)
}

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(c) => c,
        Err(f) => {
            let err =
                json!({ "schema": SCHEMA, "error": { "exit_code": f.code, "message": f.message, "detail": f.detail } });
            eprintln!("{}", serde_json::to_string_pretty(&err).unwrap_or_else(|_| f.message.clone()));
            f.code
        }
    };
    std::process::exit(code);
}
