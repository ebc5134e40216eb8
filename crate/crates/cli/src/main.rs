use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

mod envelope;
mod literal;
mod run;

use envelope::{write_envelopes_csv, write_json_line, ErrorBody, ErrorEnvelope};
use literal::{parse_complex, parse_epsilon, parse_grid, parse_sigmas};
use run::{Failure, Output};

const EXIT_VERIFY_FAIL: u8 = 1;
const EXIT_IO: u8 = 5;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "ezv", version, about = "Elliptic zeta values, elliptic gamma and identity checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a single quantity.
    Eval {
        target: EvalTarget,
        #[command(flatten)]
        opts: Opts,
    },
    /// Check an identity and report its residual.
    Verify {
        target: VerifyTarget,
        #[command(flatten)]
        opts: Opts,
    },
    /// Tabulate a limit along a sequence of sigma values.
    Limits {
        target: LimitTarget,
        #[command(flatten)]
        opts: Opts,
    },
    /// Emit a table, CSV by default.
    Table {
        target: TableTarget,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalTarget {
    #[value(name = "zk")]
    Zk,
    #[value(name = "zk_lattice")]
    ZkLattice,
    #[value(name = "dk")]
    Dk,
    #[value(name = "theta0")]
    Theta0,
    #[value(name = "ellgamma")]
    EllGamma,
    #[value(name = "loggamma_sum")]
    LogGammaSum,
    #[value(name = "eisenstein")]
    Eisenstein,
    #[value(name = "zeta")]
    Zeta,
    #[value(name = "gk")]
    Gk,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyTarget {
    #[value(name = "three-term-add")]
    ThreeTermAdd,
    #[value(name = "three-term-mod")]
    ThreeTermMod,
    #[value(name = "func-eq")]
    FuncEq,
    #[value(name = "prop1")]
    Prop1,
    #[value(name = "logEG")]
    LogEg,
    #[value(name = "thm2-first")]
    Thm2First,
    #[value(name = "thm2-Q")]
    Thm2Q,
    #[value(name = "lipschitz")]
    Lipschitz,
    #[value(name = "cocycle")]
    Cocycle,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitTarget {
    #[value(name = "zeta-limit")]
    ZetaLimit,
    #[value(name = "gamma-limit")]
    GammaLimit,
    #[value(name = "scl-limit")]
    SclLimit,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableTarget {
    #[value(name = "divisors")]
    Divisors,
    #[value(name = "dk-coeffs")]
    DkCoeffs,
    #[value(name = "zk-grid")]
    ZkGrid,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Opts {
    /// Weight / index k.
    #[arg(long)]
    pub k: Option<u32>,
    /// Upper half-plane point, `re,im` or `a+bi`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub tau: Option<Complex64>,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub sigma: Option<Complex64>,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub z: Option<Complex64>,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub rho: Option<Complex64>,
    /// Homogeneous coordinates for the cocycle probe.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub x1: Option<Complex64>,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub x2: Option<Complex64>,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub x3: Option<Complex64>,
    /// Target accuracy.
    #[arg(long, env = "EZV_PRECISION", value_parser = parse_epsilon)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_terms: Option<usize>,
    /// Lattice truncation radius.
    #[arg(long)]
    pub radius: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Drop the anomaly term from the modular relation.
    #[arg(long)]
    pub no_anomaly: bool,
    /// Imaginary parts of the sigma sequence, comma separated.
    #[arg(long, value_parser = parse_sigmas)]
    pub sigmas: Option<literal::SigmaList>,
    #[arg(long)]
    pub kmax: Option<u32>,
    #[arg(long)]
    pub nmax: Option<u64>,
    /// Grid size as `NxM`.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
    /// Sample count for fits.
    #[arg(long)]
    pub samples: Option<usize>,
}

fn open_sink(out: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn report_error(err: &ErrorEnvelope) {
    eprintln!("ezv: {}", err.error.message);
    let mut stdout = io::stdout().lock();
    let _ = write_json_line(&mut stdout, err);
    let _ = stdout.flush();
}

fn emit(output: &Output, format: Format, out: &Option<PathBuf>) -> Result<(), String> {
    let mut sink = open_sink(out).map_err(|e| format!("cannot open output: {e}"))?;
    let written: Result<(), String> = match (output, format) {
        (Output::Envelopes(items), Format::Json) => items
            .iter()
            .try_for_each(|e| write_json_line(sink.as_mut(), e))
            .map_err(|e| e.to_string()),
        (Output::Envelopes(items), Format::Csv) => {
            write_envelopes_csv(sink.as_mut(), items).map_err(|e| e.to_string())
        }
        (Output::Table(t), Format::Csv) => t.write_csv(sink.as_mut()).map_err(|e| e.to_string()),
        (Output::Table(t), Format::Json) => t.write_json(sink.as_mut()).map_err(|e| e.to_string()),
    };
    written?;
    sink.flush().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let (opts, default_format) = match &cli.command {
        Command::Table { opts, .. } => (opts, Format::Csv),
        Command::Eval { opts, .. } | Command::Verify { opts, .. } | Command::Limits { opts, .. } => {
            (opts, Format::Json)
        }
    };
    let format = opts.format.unwrap_or(default_format);

    let result = match &cli.command {
        Command::Eval { target, opts } => run::eval(*target, opts),
        Command::Verify { target, opts } => run::verify(*target, opts),
        Command::Limits { target, opts } => run::limits(*target, opts),
        Command::Table { target, opts } => run::table(*target, opts),
    };

    match result {
        Ok(output) => {
            if let Err(msg) = emit(&output, format, &opts.out) {
                report_error(&ErrorEnvelope {
                    request: None,
                    error: ErrorBody::io(msg),
                });
                return ExitCode::from(EXIT_IO);
            }
            if output.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERIFY_FAIL)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("ezv: usage: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Core { request, error }) => {
            let code = run::exit_code(&error);
            report_error(&ErrorEnvelope {
                request,
                error: ErrorBody::from_core(&error),
            });
            ExitCode::from(code)
        }
    }
}
