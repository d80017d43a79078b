//! Command-line interface. Reports and listings go to stdout (or `-o`);
//! diagnostics go to stderr.
//!
//! Exit codes: 0 scan completed, 2 violations found, 1 error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ephiscan_core::parsers::builtin_parsers;
use ephiscan_core::parsers::codemap::MeasureCodeMap;
use ephiscan_core::report::{render_json, render_text, render_timeline_json, render_timeline_text, to_canonical_json};
use ephiscan_core::time::UtcInstant;
use serde::Serialize;

use crate::fixture::{generate_fixture, manifest_path, FixtureSpec};
use crate::{scan_path, ScanConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_VIOLATIONS: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "ephiscan", version, about = "Find health data left on disk by medical-device companion apps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scan an extracted app-data tree (directory or zip) and report PHI exposure.
    Scan(ScanArgs),
    /// Print every timestamped record in UTC order.
    Timeline(ScanArgs),
    /// Generate a synthetic evidence tree and its manifest from a fixture spec.
    Fixtures {
        spec: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// List the built-in app parsers.
    ListParsers {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
struct ScanArgs {
    path: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Print recovered values in full.
    #[arg(long)]
    no_redact: bool,
    /// Use this instant (YYYY-MM-DDTHH:MM:SSZ) instead of the wall clock.
    #[arg(long, value_parser = parse_clock)]
    fixed_clock: Option<UtcInstant>,
    /// Health Mate measure-type code map replacing the built-in one.
    #[arg(long)]
    code_map: Option<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn parse_clock(s: &str) -> Result<UtcInstant, String> {
    UtcInstant::parse_iso8601(s).ok_or_else(|| format!("{s:?} is not a UTC instant like 2018-07-05T22:25:49Z"))
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_ERROR
            } else {
                let _ = stdout.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Scan(args) => cmd_scan(&args, stdout),
        Command::Timeline(args) => cmd_timeline(&args, stdout),
        Command::Fixtures { spec, out } => cmd_fixtures(&spec, &out, stdout),
        Command::ListParsers { format } => cmd_list_parsers(format, stdout),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(stderr, "ephiscan: {message}");
            EXIT_ERROR
        }
    }
}

fn config(args: &ScanArgs) -> Result<ScanConfig, String> {
    let mut config = ScanConfig { redact: !args.no_redact, fixed_clock: args.fixed_clock, ..ScanConfig::default() };
    if let Some(path) = &args.code_map {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        config.code_map = MeasureCodeMap::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(config)
}

fn emit(bytes: &[u8], out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => stdout.write_all(bytes).map_err(|e| format!("writing output: {e}")),
    }
}

fn cmd_scan(args: &ScanArgs, stdout: &mut dyn Write) -> Result<u8, String> {
    let outcome = scan_path(&args.path, &config(args)?).map_err(|e| e.to_string())?;
    let report = outcome.report;
    let bytes = match args.format {
        Format::Json => render_json(&report),
        Format::Text => render_text(&report).into_bytes(),
    };
    emit(&bytes, args.out.as_deref(), stdout)?;
    Ok(if report.has_violations() { EXIT_VIOLATIONS } else { EXIT_OK })
}

fn cmd_timeline(args: &ScanArgs, stdout: &mut dyn Write) -> Result<u8, String> {
    let outcome = scan_path(&args.path, &config(args)?).map_err(|e| e.to_string())?;
    let bytes = match args.format {
        Format::Json => render_timeline_json(&outcome.timeline),
        Format::Text => render_timeline_text(&outcome.timeline).into_bytes(),
    };
    emit(&bytes, args.out.as_deref(), stdout)?;
    Ok(EXIT_OK)
}

fn cmd_fixtures(spec_path: &Path, out: &Path, stdout: &mut dyn Write) -> Result<u8, String> {
    let text = fs::read_to_string(spec_path).map_err(|e| format!("{}: {e}", spec_path.display()))?;
    let spec = FixtureSpec::parse(&text).map_err(|e| format!("{}: {e}", spec_path.display()))?;
    let manifest = generate_fixture(&spec, out).map_err(|e| e.to_string())?;
    writeln!(
        stdout,
        "wrote {} file(s) with {} planted record(s) to {}\nmanifest: {}",
        manifest.files.len(),
        manifest.records.len(),
        out.display(),
        manifest_path(out).display()
    )
    .map_err(|e| format!("writing output: {e}"))?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ParserEntry {
    id: &'static str,
    app_name: &'static str,
    signature: &'static str,
}

fn cmd_list_parsers(format: Format, stdout: &mut dyn Write) -> Result<u8, String> {
    let entries: Vec<ParserEntry> = builtin_parsers()
        .iter()
        .map(|p| ParserEntry { id: p.id(), app_name: p.app_name(), signature: p.signature() })
        .collect();
    let bytes = match format {
        Format::Json => to_canonical_json(&entries),
        Format::Text => {
            let w_id = entries.iter().map(|e| e.id.len()).max().unwrap_or(0).max(2);
            let w_app = entries.iter().map(|e| e.app_name.len()).max().unwrap_or(0).max(3);
            let mut s = format!("{:<w_id$}  {:<w_app$}  SIGNATURE\n", "ID", "APP");
            for e in &entries {
                s.push_str(&format!("{:<w_id$}  {:<w_app$}  {}\n", e.id, e.app_name, e.signature));
            }
            s.into_bytes()
        }
    };
    stdout.write_all(&bytes).map_err(|e| format!("writing output: {e}"))?;
    Ok(EXIT_OK)
}
