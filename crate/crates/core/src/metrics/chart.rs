use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};

/// Attempts per accepted sample before giving up on a restrictive cone.
const ATTEMPTS_PER_SAMPLE: usize = 200;

/// Coordinate box, sample count and seed for reproducible `(x, y)` sampling.
///
/// Positions are uniform in the box; directions are uniform on the Euclidean
/// unit sphere and rejected when they fall outside the admissible cone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub seed: u64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplePoint {
    pub index: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ChartSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, seed: u64, samples: usize) -> Result<Self> {
        let c = ChartSpec { lo, hi, seed, samples };
        c.validate()?;
        Ok(c)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.len() != self.hi.len() {
            return Err(GeometryError::InvalidParameter(format!(
                "chart bounds have {} and {} components",
                self.lo.len(),
                self.hi.len()
            )));
        }
        if self.lo.len() < 2 {
            return Err(GeometryError::InvalidParameter("chart dimension must be >= 2".into()));
        }
        for (a, (lo, hi)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(GeometryError::InvalidParameter(format!(
                    "chart box is degenerate in coordinate {a}: [{lo}, {hi}]"
                )));
            }
        }
        if self.samples == 0 {
            return Err(GeometryError::InvalidParameter("sample count must be >= 1".into()));
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.lo.len()
            && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Draw `samples` admissible points, deterministically for a given seed.
    pub fn sample(&self, admissible: impl Fn(&[f64], &[f64]) -> bool) -> Result<Vec<SamplePoint>> {
        self.validate()?;
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.samples);
        let budget = self.samples * ATTEMPTS_PER_SAMPLE;
        let mut attempts = 0;
        while out.len() < self.samples {
            if attempts == budget {
                return Err(GeometryError::Sampling(format!(
                    "only {} of {} admissible samples after {attempts} attempts",
                    out.len(),
                    self.samples
                )));
            }
            attempts += 1;
            let x: Vec<f64> = (0..n).map(|a| rng.random_range(self.lo[a]..=self.hi[a])).collect();
            let mut y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let norm = y.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
            if norm < 1e-8 {
                continue;
            }
            y.iter_mut().for_each(|v| *v /= norm);
            if admissible(&x, &y) {
                out.push(SamplePoint {
                    index: out.len(),
                    x,
                    y,
                });
            }
        }
        Ok(out)
    }
}
