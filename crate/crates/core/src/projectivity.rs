//! Projectivity of the change: the factor `P` with `*G^i = G^i + P y^i`,
//! the condition on `F_i0`, and geodesic traces for comparing point sets.

use std::io::Write;

use serde::Serialize;

use crate::difference::{ChangePoint, OracleDifference};
use crate::error::{GeometryError, Result};
use crate::fundamentals::{base_tensors, connections, spray};
use crate::metrics::{hexp_apply, ChartSpec, HVectorField, MetricFunction};
use crate::tensor::{max_abs_vector, Vector};

/// Default tolerance for both projectivity verdicts.
pub const PROJECTIVE_TOL: f64 = 1e-8;

/// `P` from the closed form in terms of `E_00`, `β_|0`, `m²` and `F_β0`.
pub fn projective_factor(p: &ChangePoint) -> f64 {
    let (t, cs, covd) = (&p.base, &p.cs, &p.covd);
    let (l, e) = (t.l, cs.e_tau);
    let y_l = t.y_lower().dot(&t.l_upper());
    let bracket = e / l * covd.beta_0 * cs.m2 + 2.0 * e * covd.f_beta0;
    y_l / (2.0 * l * l) * (covd.e_00 - l / e / cs.divisor() * bracket)
}

/// `P` read off a spray difference: `y_i D^i_00 / (2L²)`.
pub fn factor_from_spray(d00: &Vector, p: &ChangePoint) -> f64 {
    p.base.y_lower().dot(d00) / (2.0 * p.base.l * p.base.l)
}

/// `max_i |D^i_00 − 2P y^i|` with `P` taken from `D^i_00` itself, i.e. the
/// part of the spray difference not along `y`.
pub fn spray_gap(d00: &Vector, p: &ChangePoint) -> f64 {
    max_abs_vector(&(d00 - &p.base.y * (2.0 * factor_from_spray(d00, p))))
}

/// `max_i |F_i0 + β_|0 m_i / (2L)|`
pub fn condition_residual(p: &ChangePoint) -> f64 {
    let s = p.covd.beta_0 / (2.0 * p.base.l);
    max_abs_vector(&(&p.covd.f_i0 + &p.cs.m * s))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectivityVerdict {
    pub samples: usize,
    pub tol: f64,
    /// Worst spray gap over the sample.
    pub spray_gap: f64,
    /// Worst condition residual over the sample.
    pub condition: f64,
    /// Worst `|P_closed − P_spray|`.
    pub factor_gap: f64,
    pub projective_by_spray: bool,
    pub projective_by_condition: bool,
    /// Samples where the two verdicts disagree.
    pub disagreements: usize,
}

impl ProjectivityVerdict {
    pub fn consistent(&self) -> bool {
        self.disagreements == 0
    }
}

/// Decide projectivity on sampled points, by the spray test and by the
/// condition on `F_i0`, and record whether they agree point by point.
pub fn is_projective(
    metric: &MetricFunction,
    b: &HVectorField,
    chart: &ChartSpec,
    tol: f64,
) -> Result<ProjectivityVerdict> {
    let star = hexp_apply(metric, b)?;
    let points = chart.sample(|x, y| metric.is_admissible(x, y) && star.is_admissible(x, y))?;
    let mut v = ProjectivityVerdict {
        samples: points.len(),
        tol,
        spray_gap: 0.0,
        condition: 0.0,
        factor_gap: 0.0,
        projective_by_spray: false,
        projective_by_condition: false,
        disagreements: 0,
    };
    for s in &points {
        let p = ChangePoint::new(metric, b, &s.x, &s.y)?;
        let star_conn = connections(&base_tensors(&star, &s.x, &s.y)?);
        let oracle = OracleDifference::from_connections(&p.conn, &star_conn);
        let a = spray_gap(&oracle.d00, &p);
        let c = condition_residual(&p);
        if (a < tol) != (c < tol) {
            v.disagreements += 1;
        }
        v.spray_gap = v.spray_gap.max(a);
        v.condition = v.condition.max(c);
        v.factor_gap = v
            .factor_gap
            .max((projective_factor(&p) - factor_from_spray(&oracle.d00, &p)).abs());
    }
    v.projective_by_spray = v.spray_gap < tol;
    v.projective_by_condition = v.condition < tol;
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalReason {
    Completed,
    ChartExit,
    DomainExit,
}

/// States `(t, x, ẋ)` of an integrated geodesic.
#[derive(Clone, Debug)]
pub struct GeodesicTrace {
    pub t: Vec<f64>,
    pub x: Vec<Vector>,
    pub v: Vec<Vector>,
    pub step: f64,
    /// Order of the integration method.
    pub order: u32,
    pub terminal: TerminalReason,
    /// `max |L(x, ẋ) − 1|` along the trace.
    pub speed_drift: f64,
}

impl GeodesicTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// One line per state: `t x^1..x^n y^1..y^n`.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        for ((t, x), v) in self.t.iter().zip(&self.x).zip(&self.v) {
            let mut line = format!("{t:.17e}");
            for c in x.iter().chain(v.iter()) {
                line.push_str(&format!(" {c:.17e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Integrate `ẍ^i + 2G^i(x, ẋ) = 0` from `x0` along `y0` (rescaled to unit
/// speed) with fixed-step RK4. Stops early when `x` leaves `chart` or the
/// metric cannot be evaluated.
pub fn geodesic_trace(
    metric: &MetricFunction,
    x0: &[f64],
    y0: &[f64],
    t_end: f64,
    step: f64,
    chart: Option<&ChartSpec>,
) -> Result<GeodesicTrace> {
    if !(step > 0.0 && t_end > 0.0 && step.is_finite() && t_end.is_finite()) {
        return Err(GeometryError::InvalidParameter(format!(
            "geodesic needs positive t_end and step, got {t_end} and {step}"
        )));
    }
    if !metric.is_admissible(x0, y0) {
        return Err(GeometryError::InadmissibleMetric {
            x: x0.to_vec(),
            reason: format!("initial direction {y0:?} is not admissible"),
        });
    }
    let speed = metric.value(x0, y0)?;
    let mut x = Vector::from_column_slice(x0);
    let mut v = Vector::from_column_slice(y0) / speed;
    let steps = (t_end / step).round() as usize;
    let accel = |x: &Vector, v: &Vector| -> Result<Vector> {
        Ok(spray(metric, x.as_slice(), v.as_slice())? * -2.0)
    };
    let mut trace = GeodesicTrace {
        t: vec![0.0],
        x: vec![x.clone()],
        v: vec![v.clone()],
        step,
        order: 4,
        terminal: TerminalReason::Completed,
        speed_drift: 0.0,
    };
    for s in 1..=steps {
        let rk = || -> Result<(Vector, Vector)> {
            let k1x = v.clone();
            let k1v = accel(&x, &v)?;
            let k2x = &v + &k1v * (0.5 * step);
            let k2v = accel(&(&x + &k1x * (0.5 * step)), &k2x)?;
            let k3x = &v + &k2v * (0.5 * step);
            let k3v = accel(&(&x + &k2x * (0.5 * step)), &k3x)?;
            let k4x = &v + &k3v * step;
            let k4v = accel(&(&x + &k3x * step), &k4x)?;
            Ok((
                &x + (k1x + &k2x * 2.0 + &k3x * 2.0 + k4x) * (step / 6.0),
                &v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (step / 6.0),
            ))
        };
        let (nx, nv) = match rk() {
            Ok(next) => next,
            Err(_) => {
                trace.terminal = TerminalReason::DomainExit;
                break;
            }
        };
        if chart.is_some_and(|c| !c.contains(nx.as_slice())) {
            trace.terminal = TerminalReason::ChartExit;
            break;
        }
        let l = match metric.value(nx.as_slice(), nv.as_slice()) {
            Ok(l) if l.is_finite() => l,
            _ => {
                trace.terminal = TerminalReason::DomainExit;
                break;
            }
        };
        trace.speed_drift = trace.speed_drift.max((l - 1.0).abs());
        x = nx;
        v = nv;
        trace.t.push(s as f64 * step);
        trace.x.push(x.clone());
        trace.v.push(v.clone());
    }
    Ok(trace)
}

fn arc_lengths(points: &[Vector]) -> Vec<f64> {
    let mut s = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    s.push(0.0);
    for w in points.windows(2) {
        acc += (&w[1] - &w[0]).norm();
        s.push(acc);
    }
    s
}

fn point_segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let (mut len2, mut dot) = (0.0, 0.0);
    for k in 0..p.len() {
        let ab = b[k] - a[k];
        len2 += ab * ab;
        dot += (p[k] - a[k]) * ab;
    }
    let t = if len2 > 0.0 { (dot / len2).clamp(0.0, 1.0) } else { 0.0 };
    (0..p.len())
        .map(|k| {
            let d = p[k] - (a[k] + (b[k] - a[k]) * t);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Segments per bounding box in the polyline search.
const CHUNK: usize = 32;

/// A run of consecutive segments and the box containing them.
struct Chunk {
    first: usize,
    last: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Chunk {
    fn lower_bound(&self, p: &[f64]) -> f64 {
        (0..p.len())
            .map(|k| {
                let d = (self.lo[k] - p[k]).max(p[k] - self.hi[k]).max(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

fn chunks(points: &[Vec<f64>]) -> Vec<Chunk> {
    let n = points[0].len();
    let segments = points.len() - 1;
    (0..segments)
        .step_by(CHUNK)
        .map(|first| {
            let last = (first + CHUNK).min(segments);
            let mut lo = vec![f64::INFINITY; n];
            let mut hi = vec![f64::NEG_INFINITY; n];
            for q in &points[first..=last] {
                for k in 0..n {
                    lo[k] = lo[k].min(q[k]);
                    hi[k] = hi[k].max(q[k]);
                }
            }
            Chunk { first, last, lo, hi }
        })
        .collect()
}

/// Distance from `p` to the polyline, skipping chunks whose box is farther
/// than the best distance found so far. `hint` is the chunk tried first.
fn polyline_distance(p: &[f64], points: &[Vec<f64>], boxes: &[Chunk], hint: usize) -> f64 {
    let scan = |c: &Chunk, best: f64| {
        (c.first..c.last).fold(best, |b, i| b.min(point_segment_distance(p, &points[i], &points[i + 1])))
    };
    let mut best = scan(&boxes[hint], f64::INFINITY);
    for (j, c) in boxes.iter().enumerate() {
        if j != hint && c.lower_bound(p) < best {
            best = scan(c, best);
        }
    }
    best
}

/// Largest distance from a point of `t1` to the path of `t2`, over the arc
/// length both traces cover. Independent of parametrisation.
pub fn trace_compare(t1: &GeodesicTrace, t2: &GeodesicTrace) -> Result<f64> {
    if t1.len() < 2 || t2.len() < 2 {
        return Err(GeometryError::InsufficientTrace(format!(
            "traces have {} and {} states, need at least 2 each",
            t1.len(),
            t2.len()
        )));
    }
    let s1 = arc_lengths(&t1.x);
    let s2 = arc_lengths(&t2.x);
    let span = s1[s1.len() - 1].min(s2[s2.len() - 1]);
    if span <= 0.0 {
        return Err(GeometryError::InsufficientTrace("traces have zero length".into()));
    }
    let path: Vec<Vec<f64>> = t2.x.iter().map(|v| v.as_slice().to_vec()).collect();
    let boxes = chunks(&path);
    let mut worst = 0.0f64;
    let mut j = 0;
    for (p, s) in t1.x.iter().zip(&s1) {
        if *s > span {
            break;
        }
        // the nearest point usually sits at a similar arc length
        while j + 1 < s2.len() && s2[j + 1] < *s {
            j += 1;
        }
        worst = worst.max(polyline_distance(p.as_slice(), &path, &boxes, (j / CHUNK).min(boxes.len() - 1)));
    }
    Ok(worst)
}
