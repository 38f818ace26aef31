use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qshield::gen::{generate, FixtureFamily, FixtureSpec};
use qshield::sim::{format_sweep, sweep_k};
use qshield::{default_database, load_database, AttackFamily, NoiseModel, SignatureDatabase};

mod scan;

/// Exit status for bad input; severities use 0..=2.
const EXIT_INPUT: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "qshield",
    version,
    about = "Scan OpenQASM circuits for crosstalk attack patterns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan .qasm files. Exit code: 0 clean, 1 suspicious, 2 malicious, 3 bad input.
    Scan(ScanArgs),
    /// Print victim success probability against attack length.
    Sweep(SweepArgs),
    /// Write an attack fixture: victim Grover circuit plus an attacker chain.
    Gen(GenArgs),
    /// Inspect signature databases.
    #[command(subcommand)]
    Db(DbCommand),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Args)]
pub struct ScanArgs {
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    /// Signature database file; the built-in database when omitted.
    #[arg(long)]
    pub signatures: Option<PathBuf>,
    /// Device coupling map, one `i j` edge per line.
    #[arg(long)]
    pub coupling: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Override every signature's suspicious threshold.
    #[arg(long)]
    pub suspicious_at: Option<usize>,
    /// Override every signature's malicious threshold.
    #[arg(long)]
    pub malicious_at: Option<usize>,
    /// Match the circuit as written, skipping transpiler canonicalization.
    #[arg(long)]
    pub no_canonicalize: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value = "cx-delay")]
    family: AttackFamily,
    /// Inclusive range `a..b`, or a single value.
    #[arg(long, default_value = "0..300", value_parser = parse_k_range)]
    k: (u64, u64),
    /// Delay length in dt. Does not affect the model; kept for the record.
    #[arg(long, default_value_t = 1)]
    delay: u64,
    #[arg(long)]
    p_base: Option<f64>,
    #[arg(long)]
    lambda_cx: Option<f64>,
    #[arg(long)]
    lambda_xy: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// cx-delay, delay-only, x-delay, y-delay, z-delay, i-delay or cx-chain.
    #[arg(long)]
    family: FixtureFamily,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    delay: u64,
    /// Attacker qubits, comma separated. Defaults to 2,3 or 2.
    #[arg(long, value_delimiter = ',')]
    qubits: Option<Vec<usize>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DbCommand {
    /// Print a database in file format.
    Show {
        #[arg(long)]
        signatures: Option<PathBuf>,
    },
    /// Validate database files.
    Check {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

fn parse_k_range(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
        None => (s, s),
    };
    let num = |t: &str| {
        t.trim()
            .parse::<u64>()
            .map_err(|_| format!("`{t}` is not a non-negative integer"))
    };
    let (a, b) = (num(a)?, num(b)?);
    if a > b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok((a, b))
}

/// Loads the database from `path` or falls back to the built-in one.
pub fn database(path: Option<&Path>) -> Result<SignatureDatabase> {
    match path {
        None => Ok(default_database()),
        Some(p) => {
            let text = read(p)?;
            load_database(&text).with_context(|| format!("{}", p.display()))
        }
    }
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let shipped = NoiseModel::shipped();
    let noise = NoiseModel {
        p_base: args.p_base.unwrap_or(shipped.p_base),
        lambda_cx: args.lambda_cx.unwrap_or(shipped.lambda_cx),
        lambda_xy: args.lambda_xy.unwrap_or(shipped.lambda_xy),
        gamma: args.gamma.unwrap_or(shipped.gamma),
    };
    let (lo, hi) = args.k;
    let ks: Vec<u64> = (lo..=hi).collect();
    let points = sweep_k(&noise, args.family, args.delay, &ks)?;
    write_output(args.out.as_deref(), &format_sweep(&points))
}

fn run_gen(args: GenArgs) -> Result<()> {
    let qubits = args
        .qubits
        .unwrap_or_else(|| [2, 3][..args.family.width()].to_vec());
    let text = generate(&FixtureSpec {
        family: args.family,
        k: args.k,
        delay_dt: args.delay,
        qubits,
    })?;
    write_output(args.out.as_deref(), &text)
}

fn run_db(cmd: DbCommand) -> Result<()> {
    match cmd {
        DbCommand::Show { signatures } => {
            write_output(None, &database(signatures.as_deref())?.to_text())
        }
        DbCommand::Check { paths } => {
            let mut failed = 0;
            for p in &paths {
                match database(Some(p)) {
                    Ok(db) => println!(
                        "{}: ok, version {}, {} signature(s)",
                        p.display(),
                        db.version,
                        db.signatures.len()
                    ),
                    Err(e) => {
                        eprintln!("error: {e:#}");
                        failed += 1;
                    }
                }
            }
            if failed > 0 {
                bail!("{failed} of {} database file(s) invalid", paths.len());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Scan(args) => return scan::run(&args),
        Command::Sweep(args) => run_sweep(args),
        Command::Gen(args) => run_gen(args),
        Command::Db(cmd) => run_db(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

/// For failures that are the tool's fault rather than the input's.
fn internal(msg: impl std::fmt::Display) -> anyhow::Error {
    anyhow!("internal error: {msg}")
}
