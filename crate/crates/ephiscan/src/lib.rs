//! Scanner for residual health data left by mobile medical-device companion
//! apps: evidence containers, synthetic fixtures and the command line.

pub mod cli;
pub mod fixture;
pub mod source;

use std::path::Path;

use ephiscan_core::parsers::builtin_parsers;
use ephiscan_core::parsers::codemap::MeasureCodeMap;
use ephiscan_core::phi::RuleTable;
use ephiscan_core::scan::{scan_evidence, ScanOptions, ScanOutcome};
use ephiscan_core::time::UtcInstant;

pub use source::{open_source, EvidenceSource, OpenError};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub redact: bool,
    /// Replaces the wall clock, for reproducible output.
    pub fixed_clock: Option<UtcInstant>,
    pub code_map: MeasureCodeMap,
    pub rules: RuleTable,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { redact: true, fixed_clock: None, code_map: MeasureCodeMap::default(), rules: RuleTable::default() }
    }
}

pub fn now() -> UtcInstant {
    UtcInstant::from_unix_seconds(chrono::Utc::now().timestamp()).unwrap_or(UtcInstant::EPOCH)
}

/// Opens `path` and runs the full scan over it.
pub fn scan_path(path: &Path, config: &ScanConfig) -> Result<ScanOutcome, OpenError> {
    let clock = config.fixed_clock.unwrap_or_else(now);
    let source = open_source(path, clock)?;
    let options = ScanOptions {
        generated_at: clock,
        redact: config.redact,
        code_map: &config.code_map,
        rules: &config.rules,
        evidence_origin: source.origin_name(),
        tool_version: TOOL_VERSION.to_owned(),
    };
    let mut outcome = scan_evidence(&source, builtin_parsers(), &options);
    outcome.report.warnings.extend(source.warnings.iter().cloned());
    Ok(outcome)
}
