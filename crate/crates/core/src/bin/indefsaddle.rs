use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use indefsaddle::runner::{parse_config, run, Command, Format, RunError};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Region,
    Solve,
    Branch,
    Levels,
    Check,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Region => Command::Region,
            Cmd::Solve => Command::Solve,
            Cmd::Branch => Command::Branch,
            Cmd::Levels => Command::Levels,
            Cmd::Check => Command::Check,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Fmt {
    Csv,
    Json,
}

/// Critical points and region analysis for perturbed Hamiltonian elliptic systems.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    command: Cmd,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Prefix prepended to every output file name.
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Fmt>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, RunError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| RunError::Config(config_error("threads", &e.to_string())))?;
    }
    let text = std::fs::read_to_string(&cli.config).map_err(|e| RunError::io(&cli.config, e))?;
    let mut config = parse_config(&text).map_err(RunError::Config)?;
    let requested: Command = cli.command.into();
    if requested != config.command {
        return Err(RunError::Config(config_error(
            "command",
            &format!(
                "command line asks for `{}` but the configuration declares `{}`",
                requested.as_str(),
                config.command.as_str()
            ),
        )));
    }
    if let Some(out) = &cli.out {
        config.output = out.clone();
    }
    if let Some(f) = cli.format {
        config.format = match f {
            Fmt::Csv => Format::Csv,
            Fmt::Json => Format::Json,
        };
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    let report = run(&config)?;
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    for f in &report.files {
        println!("{}", f.display());
    }
    eprintln!(
        "{}: {} records, {} checks passed, {} failed, {:.3} s",
        report.command.as_str(),
        report.records,
        report.checks_passed,
        report.checks_failed,
        report.wall_time.as_secs_f64()
    );
    Ok(report.exit_code())
}

fn config_error(field: &str, message: &str) -> indefsaddle::runner::ConfigError {
    indefsaddle::runner::ConfigError {
        errors: vec![indefsaddle::runner::config::FieldError {
            field: field.into(),
            message: message.into(),
        }],
    }
}
