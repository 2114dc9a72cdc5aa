use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use floqlind_cli::config::{parse_config, resolve_out_dir, Command, Overrides};
use floqlind_cli::run::{run, write_error, RunError};

/// Driven open-qubit dynamics, exceptional points and Floquet ladders.
#[derive(Parser, Debug)]
#[command(name = "floqlind", version)]
struct Cli {
    /// evolve, adiabatic, ep, floquet, ipr, algebra, sensitivity or oracle-check.
    command: Command,
    /// INI-style config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// fig1, fig2, fig3a, fig3b, fig4a or fig4b.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (default: $FLOQLIND_OUT, then ./floqlind-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of csv,json,svg.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "m-max")]
    m_max: Option<usize>,
    #[arg(long)]
    rtol: Option<f64>,
    /// Extra `section.key=value` assignment; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        command: Some(cli.command),
        preset: cli.preset,
        out: cli.out.clone(),
        formats: cli.format,
        seed: cli.seed,
        m_max: cli.m_max,
        rtol: cli.rtol,
        set: cli.set,
    };
    let result = parse_config(cli.config.as_deref(), &overrides)
        .map_err(RunError::from)
        .and_then(|cfg| run(&cfg).map(|o| (cfg, o)));
    match result {
        Ok((cfg, outcome)) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.exit_code != 0 {
                eprintln!("{}: one or more checks failed", cfg.command.name());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            let out = resolve_out_dir(cli.out.as_deref(), None);
            if let Err(e) = write_error(&out, Some(cli.command), &err) {
                eprintln!("error: {e}");
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
