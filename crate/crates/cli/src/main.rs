use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::Parser;
use weilrep_cli::commands;
use weilrep_cli::config::Cli;

fn main() -> ExitCode {
    let cfg = match Cli::parse().into_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(&cfg) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn execute(cfg: &weilrep_cli::config::RunConfig) -> anyhow::Result<u8> {
    if let Some(j) = cfg.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .context("configuring worker threads")?;
    }
    let start = Instant::now();
    let mut report = commands::run(cfg);
    let secs = start.elapsed().as_secs_f64();
    if cfg.timing {
        report.timing = Some(BTreeMap::from([("total_seconds".to_string(), secs)]));
    }
    let text = report.to_json()?;
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    let s = &report.summary;
    eprintln!(
        "{} passed, {} failed, {} skipped in {secs:.2}s",
        s.passed, s.failed, s.skipped
    );
    Ok(report.exit_code())
}
