use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shortmat_cli::commands::{self, DEFAULT_REL_TOL, DEFAULT_TOL};
use shortmat_cli::{CliError, Format, ModelSpec, Overrides};

/// Short-maturity asymptotics of semimartingale models with a Monte Carlo check.
#[derive(Parser)]
#[command(name = "shortmat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Leading-order call asymptotics for one strike.
    Asymptotics(Common),
    /// f(x), L f(x) and f(x) + t L f(x) for the spec's query function.
    Expansion(Common),
    /// Monte Carlo convergence table against the predicted coefficient.
    Verify(Common),
    /// Monte Carlo call prices, or E[S_t] when no strike is given.
    Simulate(Common),
}

#[derive(Args)]
struct Common {
    /// Model-spec TOML file.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    strike: Option<f64>,
    /// Maturity in years.
    #[arg(long)]
    t: Option<f64>,
    /// Comma-separated maturities, sorted descending before use.
    #[arg(long, value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,
    /// Master seed; the spec's [sim] seed, else 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Monte Carlo paths per maturity.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Quadrature tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Relative part of the verify tolerance.
    #[arg(long, default_value_t = DEFAULT_REL_TOL)]
    rel_tol: f64,
    /// Coefficient to verify against instead of the analytic one.
    #[arg(long)]
    predicted: Option<f64>,
    /// Worker threads for the simulation.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            strike: self.strike,
            t: self.t,
            t_grid: self.t_grid.clone(),
            seed: self.seed,
            paths: self.paths,
            tol: self.tol,
            predicted: self.predicted,
            rel_tol: self.rel_tol,
        }
    }

    fn sink(&self) -> Result<Box<dyn Write>, CliError> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn emit_one<T: serde::Serialize>(c: &Common, value: &T) -> Result<(), CliError> {
    let mut out = c.sink()?;
    match c.format {
        Format::Json => commands::write_json(&mut out, value)?,
        Format::Csv => commands::write_csv(&mut out, std::slice::from_ref(value))?,
    }
    out.flush()?;
    Ok(())
}

fn run(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Asymptotics(c) => {
            let spec = ModelSpec::load(&c.spec)?;
            emit_one(c, &commands::asymptotics(&spec, &c.overrides())?)
        }
        Command::Expansion(c) => {
            let spec = ModelSpec::load(&c.spec)?;
            emit_one(c, &commands::expansion(&spec, &c.overrides())?)
        }
        Command::Simulate(c) => {
            let spec = ModelSpec::load(&c.spec)?;
            let rows = with_threads(c.threads, || commands::simulate(&spec, &c.overrides()))?;
            let mut out = c.sink()?;
            match c.format {
                Format::Json => commands::write_json(&mut out, &rows)?,
                Format::Csv => commands::write_csv(&mut out, &rows)?,
            }
            out.flush()?;
            Ok(())
        }
        Command::Verify(c) => {
            let spec = ModelSpec::load(&c.spec)?;
            let report = with_threads(c.threads, || commands::verify(&spec, &c.overrides()))?;
            let mut out = c.sink()?;
            match c.format {
                Format::Json => commands::write_json(&mut out, &report)?,
                Format::Csv => {
                    commands::write_csv(&mut out, &report.rows)?;
                    let mut err = io::stderr().lock();
                    serde_json::to_writer(&mut err, &report.verdict)
                        .map_err(|e| CliError::Io(e.to_string()))?;
                    writeln!(err)?;
                }
            }
            out.flush()?;
            if report.verdict.passed() {
                Ok(())
            } else {
                Err(CliError::Fail(format!(
                    "ratio {} at t = {} outside tolerance",
                    report.verdict.ratio, report.verdict.smallest_t
                )))
            }
        }
    }
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Schema(format!("--threads: {e}")))?
            .install(f),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
