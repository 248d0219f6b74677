//! Geodesics of the base and the changed metric from the same initial data.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use hexp_finsler::projectivity::{geodesic_trace, trace_compare, GeodesicTrace};

use crate::config::{GeodesicOptions, RunConfig};
use crate::error::{CliError, CliResult};
use crate::report::{CheckRecord, Judge};
use crate::suites::Setup;

/// Allowed `|L(x, ẋ) − 1|` along a unit-speed trace.
pub const SPEED_DRIFT_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct GeodesicRun {
    pub base: GeodesicTrace,
    pub changed: GeodesicTrace,
    /// Largest distance from the base trace to the changed path, when both
    /// traces are long enough to compare.
    pub distance: Option<f64>,
}

pub fn run(cfg: &RunConfig, setup: &Setup) -> CliResult<(Vec<CheckRecord>, GeodesicRun)> {
    let g: &GeodesicOptions = cfg
        .geodesic
        .as_ref()
        .ok_or_else(|| CliError::Config("the geodesic command needs a [geodesic] section".into()))?;
    let bounds = g.bounds()?;
    let base = geodesic_trace(&setup.base, &g.x0, &g.y0, g.t_end, g.step, bounds.as_ref())?;
    let changed = geodesic_trace(&setup.star, &g.x0, &g.y0, g.t_end, g.step, bounds.as_ref())?;
    let compared = trace_compare(&base, &changed);

    let mut out = Vec::new();
    for (check, trace) in [("geodesic-speed-base", &base), ("geodesic-speed-changed", &changed)] {
        let d = trace.speed_drift;
        out.push(
            CheckRecord::residual(check, "L(x, ẋ) = 1", trace.len(), d, d, SPEED_DRIFT_TOL, Judge::Abs)
                .with_note(format!("{:?}", trace.terminal).to_lowercase()),
        );
    }
    let samples = base.len();
    let eq = "distance from base geodesic to changed geodesic";
    let record = match &compared {
        Ok(d) => {
            let d = *d;
            match cfg.expect.projective {
                Some(true) => CheckRecord::residual("geodesic-compare", eq, samples, d, d, cfg.tol.geodesic, Judge::Abs)
                    .with_note("paths expected to coincide"),
                Some(false) => {
                    let mut r = CheckRecord::residual("geodesic-compare", eq, samples, d, d, cfg.tol.separation, Judge::Abs);
                    r.pass = d > cfg.tol.separation;
                    r.with_note("paths expected to separate")
                }
                None => {
                    let mut r = CheckRecord::residual("geodesic-compare", eq, samples, d, d, cfg.tol.geodesic, Judge::Abs);
                    r.pass = true;
                    r.with_note("informational")
                }
            }
        }
        Err(e) => {
            let mut r = CheckRecord::residual("geodesic-compare", eq, samples, 0.0, 0.0, cfg.tol.geodesic, Judge::Abs);
            // a comparison nobody asked for cannot fail
            r.pass = cfg.expect.projective.is_none();
            r.with_note(e.to_string())
        }
    };
    out.push(record);
    let distance = compared.ok();
    Ok((out, GeodesicRun { base, changed, distance }))
}

/// Paths `PREFIX.base.txt` and `PREFIX.changed.txt`.
pub fn trace_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let with = |suffix: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(suffix);
        PathBuf::from(s)
    };
    (with(".base.txt"), with(".changed.txt"))
}

pub fn write_traces(run: &GeodesicRun, prefix: &Path) -> CliResult<(PathBuf, PathBuf)> {
    let (base_path, changed_path) = trace_paths(prefix);
    for (path, trace) in [(&base_path, &run.base), (&changed_path, &run.changed)] {
        let file = File::create(path).map_err(|e| CliError::io(path.display(), e))?;
        trace
            .write_to(BufWriter::new(file))
            .map_err(|e| CliError::io(path.display(), e))?;
    }
    Ok((base_path, changed_path))
}
