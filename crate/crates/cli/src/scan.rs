//! The `scan` subcommand.

use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{Context, Result};
use qshield::canon::CanonicalCircuit;
use qshield::{
    canonicalize, lower, parse, scan, CouplingMap, ScanReport, SignatureDatabase, Verdict,
};
use serde::Serialize;

use crate::{database, internal, read, Format, ScanArgs, EXIT_INPUT, EXIT_INTERNAL};

/// Bumped whenever a field is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct JsonReport<'a> {
    schema_version: u32,
    tool_version: &'static str,
    path: String,
    #[serde(flatten)]
    report: &'a ScanReport,
}

enum Outcome {
    Report(ScanReport),
    /// Bad input; the message already names the file.
    Rejected(anyhow::Error),
    Internal(anyhow::Error),
}

impl Outcome {
    fn exit_code(&self) -> u8 {
        match self {
            Outcome::Report(r) => match r.verdict {
                Verdict::Clean => 0,
                Verdict::Suspicious => 1,
                Verdict::Malicious => 2,
            },
            Outcome::Rejected(_) => EXIT_INPUT,
            Outcome::Internal(_) => EXIT_INTERNAL,
        }
    }
}

struct Job<'a> {
    db: &'a SignatureDatabase,
    coupling: Option<&'a CouplingMap>,
    canonical: bool,
}

impl Job<'_> {
    fn scan_file(&self, path: &Path) -> Outcome {
        let text = match read(path) {
            Ok(t) => t,
            Err(e) => return Outcome::Rejected(e),
        };
        let ast = match parse(&text) {
            Ok(a) => a,
            Err(e) => return Outcome::Rejected(anyhow::anyhow!("{}:{e}", path.display())),
        };
        let circuit = lower(&ast);
        let canon = if self.canonical {
            canonicalize(&circuit)
        } else {
            CanonicalCircuit::raw(circuit)
        };
        match scan(&canon, self.db, self.coupling) {
            Ok(r) => Outcome::Report(r),
            Err(e) => Outcome::Rejected(anyhow::anyhow!("{}: {e}", path.display())),
        }
    }
}

fn setup(args: &ScanArgs) -> Result<(SignatureDatabase, Option<CouplingMap>)> {
    let db = database(args.signatures.as_deref())?
        .with_thresholds(args.suspicious_at, args.malicious_at)
        .context("threshold override")?;
    let coupling = match &args.coupling {
        None => None,
        Some(p) => Some(CouplingMap::parse(&read(p)?).with_context(|| p.display().to_string())?),
    };
    Ok((db, coupling))
}

/// Scans files on a small worker pool; results come back in argument order.
fn scan_all(job: &Job<'_>, paths: &[std::path::PathBuf]) -> Vec<Outcome> {
    let slots: Vec<Mutex<Option<Outcome>>> = paths.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(paths.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = paths.get(i) else { break };
                let outcome =
                    std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| job.scan_file(path)))
                        .unwrap_or_else(|_| {
                            Outcome::Internal(internal(format!(
                                "scanner panicked on {}",
                                path.display()
                            )))
                        });
                *slots[i].lock().unwrap() = Some(outcome);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every slot filled"))
        .collect()
}

pub fn render_text(path: &Path, report: &ScanReport) -> String {
    let mut out = format!("{}: {}\n", path.display(), report.verdict);
    if report.runs.is_empty() {
        out.push_str("  no signature runs\n");
    }
    for run in &report.runs {
        let binding: Vec<String> = run
            .binding
            .iter()
            .map(|(v, q)| format!("{v}={q}"))
            .collect();
        let _ = write!(
            out,
            "  {} {} k={} at instruction {}",
            run.signature_id,
            binding.join(" "),
            run.k,
            run.start_instruction_index
        );
        match run.source_locations.first().copied().flatten() {
            Some(loc) => {
                let _ = writeln!(out, " (line {}, column {})", loc.line, loc.column);
            }
            None => out.push('\n'),
        }
    }
    out
}

pub fn render_json(path: &Path, report: &ScanReport) -> serde_json::Result<String> {
    serde_json::to_string(&JsonReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        path: path.display().to_string(),
        report,
    })
}

pub fn run(args: &ScanArgs) -> ExitCode {
    let (db, coupling) = match setup(args) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let job = Job {
        db: &db,
        coupling: coupling.as_ref(),
        canonical: !args.no_canonicalize,
    };
    let outcomes = scan_all(&job, &args.paths);
    let mut code = 0;
    for (path, outcome) in args.paths.iter().zip(&outcomes) {
        let mut status = outcome.exit_code();
        match outcome {
            Outcome::Report(report) => {
                let rendered = match args.format {
                    Format::Text => Ok(render_text(path, report)),
                    Format::Json => render_json(path, report).map(|mut s| {
                        s.push('\n');
                        s
                    }),
                };
                match rendered {
                    Ok(s) => print!("{s}"),
                    Err(e) => {
                        eprintln!("error: {:#}", internal(e));
                        status = EXIT_INTERNAL;
                    }
                }
            }
            Outcome::Rejected(e) | Outcome::Internal(e) => eprintln!("error: {e:#}"),
        }
        code = code.max(status);
    }
    ExitCode::from(code)
}
