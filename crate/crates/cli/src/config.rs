//! Run configuration: a TOML document with `[metric]`, `[hvector]`,
//! `[chart]`, and optional `[expect]`, `[tol]` and `[geodesic]` sections.

use std::path::Path;

use hexp_finsler::metrics::{HVectorSpec, MetricSpec};
use hexp_finsler::{ChartSpec, Transcription};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_SAMPLES: usize = 128;
pub const DEFAULT_SEED: u64 = 42;

/// Tolerance ladder. Each check is judged against one rung.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Identities exact up to rounding.
    pub algebraic: f64,
    /// Closed forms of the changed metric against its jets (relative).
    pub tensors: f64,
    /// Inverse metric products.
    pub inverse: f64,
    /// Connection coefficients and their defining equations.
    pub connection: f64,
    /// Finite-difference Berwald coefficients.
    pub berwald: f64,
    /// Distance between geodesics expected to coincide.
    pub geodesic: f64,
    /// Minimum distance between geodesics expected to separate.
    pub separation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            algebraic: 1e-12,
            tensors: 1e-9,
            inverse: 1e-10,
            connection: 1e-7,
            berwald: 1e-6,
            geodesic: 1e-5,
            separation: 1e-3,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> CliResult<()> {
        let rungs = [
            ("algebraic", self.algebraic),
            ("tensors", self.tensors),
            ("inverse", self.inverse),
            ("connection", self.connection),
            ("berwald", self.berwald),
            ("geodesic", self.geodesic),
            ("separation", self.separation),
        ];
        for (name, v) in rungs {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("tolerance `{name}` must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Declared outcomes. A check whose verdict is negative still passes when
/// the configuration expects it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projective: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallel: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicOptions {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Box the traces may not leave; unbounded when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<Vec<f64>>,
}

impl GeodesicOptions {
    pub fn bounds(&self) -> CliResult<Option<ChartSpec>> {
        match (&self.lo, &self.hi) {
            (Some(lo), Some(hi)) => Ok(Some(ChartSpec::new(lo.clone(), hi.clone(), 0, 1)?)),
            (None, None) => Ok(None),
            _ => Err(CliError::Config("geodesic lo and hi must be given together".into())),
        }
    }
}

fn default_t_end() -> f64 {
    5.0
}

fn default_step() -> f64 {
    1e-3
}

/// Sampling box; seed and count fall back to the command line or defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

/// The file as written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub transcription: Transcription,
    pub metric: MetricSpec,
    pub hvector: HVectorSpec,
    pub chart: ChartConfig,
    #[serde(default)]
    pub expect: Expectations,
    #[serde(default)]
    pub tol: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geodesic: Option<GeodesicOptions>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tol_algebraic: Option<f64>,
    pub tol_tensors: Option<f64>,
    pub tol_connection: Option<f64>,
    pub tol_berwald: Option<f64>,
    pub tol_geodesic: Option<f64>,
}

/// Fully resolved configuration of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub transcription: Transcription,
    pub metric: MetricSpec,
    pub hvector: HVectorSpec,
    pub chart: ChartSpec,
    pub expect: Expectations,
    pub tol: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geodesic: Option<GeodesicOptions>,
}

impl RunConfig {
    pub fn from_toml(text: &str, fallback_name: &str, ov: &Overrides) -> CliResult<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::resolve(file, fallback_name, ov)
    }

    pub fn load(path: &Path, ov: &Overrides) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
        Self::from_toml(&text, stem, ov)
    }

    pub fn resolve(file: ConfigFile, fallback_name: &str, ov: &Overrides) -> CliResult<Self> {
        let samples = ov.samples.or(file.chart.samples).unwrap_or(DEFAULT_SAMPLES);
        let seed = ov.seed.or(file.chart.seed).unwrap_or(DEFAULT_SEED);
        if samples == 0 {
            return Err(CliError::Config("sample count must be at least 1".into()));
        }
        let chart = ChartSpec::new(file.chart.lo, file.chart.hi, seed, samples)?;
        let n = file.metric.dim;
        if n < 2 {
            return Err(CliError::Config(format!("dimension must be at least 2, got {n}")));
        }
        if chart.dim() != n {
            return Err(CliError::Config(format!(
                "chart has {} coordinates but the metric has dimension {n}",
                chart.dim()
            )));
        }
        let mut tol = file.tol;
        let pairs = [
            (&mut tol.algebraic, ov.tol_algebraic),
            (&mut tol.tensors, ov.tol_tensors),
            (&mut tol.connection, ov.tol_connection),
            (&mut tol.berwald, ov.tol_berwald),
            (&mut tol.geodesic, ov.tol_geodesic),
        ];
        for (slot, value) in pairs {
            if let Some(v) = value {
                *slot = v;
            }
        }
        tol.validate()?;
        if let Some(g) = &file.geodesic {
            if g.x0.len() != n || g.y0.len() != n {
                return Err(CliError::Config(format!("geodesic x0 and y0 need {n} components")));
            }
            if !(g.t_end > 0.0 && g.step > 0.0 && g.step <= g.t_end) {
                return Err(CliError::Config("geodesic needs 0 < step <= t_end".into()));
            }
            if let Some(b) = g.bounds()? {
                if b.dim() != n || !b.contains(&g.x0) {
                    return Err(CliError::Config("geodesic box must have dimension n and contain x0".into()));
                }
            }
        }
        Ok(RunConfig {
            name: file.name.unwrap_or_else(|| fallback_name.to_string()),
            transcription: file.transcription,
            metric: file.metric,
            hvector: file.hvector,
            chart,
            expect: file.expect,
            tol,
            geodesic: file.geodesic,
        })
    }
}
