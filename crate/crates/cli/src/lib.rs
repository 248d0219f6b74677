//! Configuration-driven verification of the exponential change of a Finsler
//! metric: runs check suites, exports geodesic traces and merges reports.

pub mod config;
pub mod error;
pub mod geodesic;
pub mod report;
pub mod suites;

use std::path::Path;

pub use config::{Overrides, RunConfig, Tolerances};
pub use error::{CliError, CliResult};
pub use geodesic::GeodesicRun;
pub use report::{CheckRecord, LedgerEntry, VerificationReport};
pub use hexp_finsler::Transcription;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_ERROR: u8 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Tensors,
    Connection,
    Projective,
    All,
}

impl Suite {
    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Tensors => "tensors",
            Suite::Connection => "connection",
            Suite::Projective => "projective",
            Suite::All => "all",
        }
    }
}

pub fn exit_code(report: &CliResult<VerificationReport>) -> u8 {
    match report {
        Ok(r) if r.pass => EXIT_PASS,
        Ok(_) => EXIT_FAIL,
        Err(_) => EXIT_ERROR,
    }
}

pub fn verify(cfg: &RunConfig, suite: Suite) -> CliResult<VerificationReport> {
    let setup = suites::Setup::new(cfg)?;
    let mut report = VerificationReport::new("verify", Some(suite.as_str()), Some(cfg.clone()));
    if matches!(suite, Suite::Tensors | Suite::All) {
        suites::tensors(cfg, &setup)?.into_iter().for_each(|r| report.push(r));
    }
    if matches!(suite, Suite::Connection | Suite::All) {
        suites::connection(cfg, &setup)?.into_iter().for_each(|r| report.push(r));
        report.add_ledger(suites::ledger(cfg.transcription));
    }
    if matches!(suite, Suite::Projective | Suite::All) {
        suites::projective(cfg, &setup)?.into_iter().for_each(|r| report.push(r));
    }
    report.finalize();
    Ok(report)
}

pub fn geodesic(cfg: &RunConfig) -> CliResult<(VerificationReport, GeodesicRun)> {
    let setup = suites::Setup::new(cfg)?;
    let mut report = VerificationReport::new("geodesic", None, Some(cfg.clone()));
    let (records, run) = geodesic::run(cfg, &setup)?;
    records.into_iter().for_each(|r| report.push(r));
    report.finalize();
    Ok((report, run))
}

pub fn merge_reports(paths: &[impl AsRef<Path>]) -> CliResult<VerificationReport> {
    if paths.is_empty() {
        return Err(CliError::Config("report needs at least one input".into()));
    }
    let mut inputs = Vec::with_capacity(paths.len());
    for p in paths {
        let p = p.as_ref();
        inputs.push((p.display().to_string(), VerificationReport::read(p)?));
    }
    Ok(report::merge(&inputs))
}
