use std::collections::BTreeMap;

use super::dual::{Dual1, Dual2, Dual3, Nested, Real};
use crate::error::{GeometryError, Result};
use crate::tensor::{Matrix, Rank3, Vector};

/// A scalar field `f(x, y)` on the tangent bundle of an `n`-dimensional chart
/// that can be evaluated over any [`Real`] scalar.
pub trait ScalarField {
    fn dim(&self) -> usize;

    fn eval<T: Real>(&self, x: &[T], y: &[T]) -> Result<T>;

    fn eval_f64(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.eval(x, y)
    }
}

impl<F: ScalarField + ?Sized> ScalarField for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval<T: Real>(&self, x: &[T], y: &[T]) -> Result<T> {
        (**self).eval(x, y)
    }
}

/// Derivatives of a scalar field at one point `(x, y)`.
///
/// Index conventions: `dx_dy[(a, i)] = ∂_a ∂̇_i f` and
/// `dx_dy2[(a, i, j)] = ∂_a ∂̇_i ∂̇_j f`, with `∂_a = ∂/∂x^a` and
/// `∂̇_i = ∂/∂y^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub dy: Option<Vector>,
    pub dy2: Option<Matrix>,
    pub dy3: Option<Rank3>,
    pub dx: Option<Vector>,
    pub dx_dy: Option<Matrix>,
    pub dx_dy2: Option<Rank3>,
}

impl Jet {
    pub fn dy(&self) -> &Vector {
        self.dy.as_ref().expect("jet evaluated without first y-derivatives")
    }

    pub fn dy2(&self) -> &Matrix {
        self.dy2.as_ref().expect("jet evaluated without second y-derivatives")
    }

    pub fn dy3(&self) -> &Rank3 {
        self.dy3.as_ref().expect("jet evaluated without third y-derivatives")
    }

    pub fn dx(&self) -> &Vector {
        self.dx.as_ref().expect("jet evaluated without x-derivatives")
    }

    pub fn dx_dy(&self) -> &Matrix {
        self.dx_dy.as_ref().expect("jet evaluated without mixed derivatives")
    }

    pub fn dx_dy2(&self) -> &Rank3 {
        self.dx_dy2.as_ref().expect("jet evaluated without mixed second derivatives")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Slot {
    X(usize),
    Y(usize),
}

/// Canonical key for a partial derivative: optional x index plus sorted y indices.
type Key = (Option<usize>, Vec<usize>);

fn key_of(slots: &[Slot]) -> Key {
    let mut xs = None;
    let mut ys = Vec::new();
    for s in slots {
        match *s {
            Slot::X(a) => xs = Some(a),
            Slot::Y(i) => ys.push(i),
        }
    }
    ys.sort_unstable();
    (xs, ys)
}

/// Multisets of `{0..n}` of size `k`, each sorted.
fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, k, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

fn evaluate_along<T: Nested, F: ScalarField>(
    f: &F,
    x: &[f64],
    y: &[f64],
    slots: &[Slot],
    acc: &mut BTreeMap<Key, (f64, usize)>,
) -> Result<()> {
    debug_assert_eq!(slots.len(), T::DEPTH);
    let depth = T::DEPTH;
    let seeds_for = |target: Slot| -> Vec<f64> {
        slots
            .iter()
            .map(|s| if *s == target { 1.0 } else { 0.0 })
            .collect()
    };
    let xt: Vec<T> = (0..x.len()).map(|a| T::seed(x[a], &seeds_for(Slot::X(a)))).collect();
    let yt: Vec<T> = (0..y.len()).map(|i| T::seed(y[i], &seeds_for(Slot::Y(i)))).collect();
    let out = f.eval(&xt, &yt)?;
    if !out.all_finite() {
        return Err(GeometryError::EvaluationDomain {
            x: x.to_vec(),
            y: y.to_vec(),
        });
    }
    for mask in 0..(1usize << depth) {
        let chosen: Vec<Slot> = (0..depth)
            .filter(|lvl| mask & (1 << lvl) != 0)
            .map(|lvl| slots[lvl])
            .collect();
        let entry = acc.entry(key_of(&chosen)).or_insert((0.0, 0));
        entry.0 += out.coefficient(mask);
        entry.1 += 1;
    }
    Ok(())
}

/// Exact derivatives of `f` at `(x, y)`: y-derivatives up to `order_y` (at
/// most 3) and, when `with_x` is set, every mixed derivative with one x slot
/// and total order at most `max(order_y, 1)`.
///
/// Repeated evaluations of the same partial derivative are averaged, so the
/// stored y-arrays are symmetric under index permutations.
pub fn jet_eval<F: ScalarField>(
    f: &F,
    x: &[f64],
    y: &[f64],
    order_y: usize,
    with_x: bool,
) -> Result<Jet> {
    let n = f.dim();
    if x.len() != n || y.len() != n {
        return Err(GeometryError::InvalidParameter(format!(
            "point dimension mismatch: field has n = {n}, got x of {} and y of {}",
            x.len(),
            y.len()
        )));
    }
    if order_y > 3 {
        return Err(GeometryError::InvalidParameter(format!(
            "order_y = {order_y} exceeds the supported maximum of 3"
        )));
    }
    if y.iter().all(|v| *v == 0.0) {
        return Err(GeometryError::InvalidParameter("direction y must be nonzero".into()));
    }

    let depth = if with_x { order_y.max(1) } else { order_y };
    if depth == 0 {
        let value = f.eval_f64(x, y)?;
        if !value.is_finite() {
            return Err(GeometryError::EvaluationDomain {
                x: x.to_vec(),
                y: y.to_vec(),
            });
        }
        return Ok(Jet {
            value,
            dy: None,
            dy2: None,
            dy3: None,
            dx: None,
            dx_dy: None,
            dx_dy2: None,
        });
    }

    let mut plans: Vec<Vec<Slot>> = multisets(n, depth)
        .into_iter()
        .map(|ms| ms.into_iter().map(Slot::Y).collect())
        .collect();
    if with_x {
        for a in 0..n {
            for ms in multisets(n, depth - 1) {
                let mut slots = vec![Slot::X(a)];
                slots.extend(ms.into_iter().map(Slot::Y));
                plans.push(slots);
            }
        }
    }

    let mut acc: BTreeMap<Key, (f64, usize)> = BTreeMap::new();
    for slots in &plans {
        match depth {
            1 => evaluate_along::<Dual1, F>(f, x, y, slots, &mut acc)?,
            2 => evaluate_along::<Dual2, F>(f, x, y, slots, &mut acc)?,
            _ => evaluate_along::<Dual3, F>(f, x, y, slots, &mut acc)?,
        }
    }

    let get = |xs: Option<usize>, ys: &[usize]| -> f64 {
        let mut sorted = ys.to_vec();
        sorted.sort_unstable();
        let (sum, count) = acc[&(xs, sorted)];
        sum / count as f64
    };

    let value = get(None, &[]);
    let dy = (order_y >= 1).then(|| Vector::from_fn(n, |i, _| get(None, &[i])));
    let dy2 = (order_y >= 2).then(|| Matrix::from_fn(n, n, |i, j| get(None, &[i, j])));
    let dy3 = (order_y >= 3).then(|| Rank3::from_fn(n, |i, j, k| get(None, &[i, j, k])));
    let dx = with_x.then(|| Vector::from_fn(n, |a, _| get(Some(a), &[])));
    let dx_dy = (with_x && depth >= 2).then(|| Matrix::from_fn(n, n, |a, i| get(Some(a), &[i])));
    let dx_dy2 = (with_x && depth >= 3).then(|| Rank3::from_fn(n, |a, i, j| get(Some(a), &[i, j])));

    Ok(Jet {
        value,
        dy,
        dy2,
        dy3,
        dx,
        dx_dy,
        dx_dy2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct SquareFirst;
    impl ScalarField for SquareFirst {
        fn dim(&self) -> usize {
            2
        }
        fn eval<T: Real>(&self, _x: &[T], y: &[T]) -> Result<T> {
            Ok(y[0] * y[0])
        }
    }

    struct EuclideanNorm;
    impl ScalarField for EuclideanNorm {
        fn dim(&self) -> usize {
            2
        }
        fn eval<T: Real>(&self, _x: &[T], y: &[T]) -> Result<T> {
            Ok((y[0] * y[0] + y[1] * y[1]).sqrt())
        }
    }

    /// |y| exp(0.1 y^1 / |y|)
    struct ChangedEuclidean;
    impl ScalarField for ChangedEuclidean {
        fn dim(&self) -> usize {
            2
        }
        fn eval<T: Real>(&self, _x: &[T], y: &[T]) -> Result<T> {
            let l = (y[0] * y[0] + y[1] * y[1]).sqrt();
            Ok(l * (y[0] * 0.1 / l).exp())
        }
    }

    /// x-dependent: exp(x0) * y0 * y1^2 + x1 * y0
    struct Mixed;
    impl ScalarField for Mixed {
        fn dim(&self) -> usize {
            2
        }
        fn eval<T: Real>(&self, x: &[T], y: &[T]) -> Result<T> {
            Ok(x[0].exp() * y[0] * y[1] * y[1] + x[1] * y[0])
        }
    }

    #[test]
    fn polynomial_jet() {
        let j = jet_eval(&SquareFirst, &[0.3, -1.0], &[1.0, 0.0], 3, false).unwrap();
        assert_eq!(j.value, 1.0);
        assert_eq!(j.dy().as_slice(), &[2.0, 0.0]);
        assert_eq!(j.dy2()[(0, 0)], 2.0);
        assert_eq!(j.dy2()[(0, 1)], 0.0);
        assert_eq!(j.dy2()[(1, 1)], 0.0);
        assert_eq!(j.dy3().max_abs(), 0.0);
    }

    #[test]
    fn euclidean_norm_on_unit_circle() {
        let j = jet_eval(&EuclideanNorm, &[0.0, 0.0], &[0.0, 1.0], 2, false).unwrap();
        assert_eq!(j.value, 1.0);
        assert_eq!(j.dy().as_slice(), &[0.0, 1.0]);
        assert!((j.dy2()[(0, 0)] - 1.0).abs() < 1e-15);
        assert!(j.dy2()[(0, 1)].abs() < 1e-15);
        assert!(j.dy2()[(1, 1)].abs() < 1e-15);
    }

    #[test]
    fn exponential_change_of_euclidean() {
        // ∂/∂y^1 = e^τ (b_1 - τ l_1 + l_1) with τ = 0, l = (0, 1), b = (0.1, 0)
        let j = jet_eval(&ChangedEuclidean, &[0.0, 0.0], &[0.0, 1.0], 1, false).unwrap();
        assert!((j.value - 1.0).abs() < 1e-15);
        assert!((j.dy()[0] - 0.1).abs() < 1e-15);
        assert!((j.dy()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mixed_derivatives_match_hand_values() {
        let (x, y) = ([0.2, -0.7], [1.5, 0.5]);
        let j = jet_eval(&Mixed, &x, &y, 3, true).unwrap();
        let e = 0.2f64.exp();
        assert!((j.dx()[0] - e * 1.5 * 0.25).abs() < 1e-14);
        assert!((j.dx()[1] - 1.5).abs() < 1e-14);
        // ∂_0 ∂̇_1 f = e^{x0} 2 y0 y1
        assert!((j.dx_dy()[(0, 1)] - e * 2.0 * 1.5 * 0.5).abs() < 1e-14);
        assert!((j.dx_dy()[(1, 0)] - 1.0).abs() < 1e-14);
        // ∂_0 ∂̇_1 ∂̇_1 f = e^{x0} 2 y0
        assert!((j.dx_dy2()[(0, 1, 1)] - e * 3.0).abs() < 1e-14);
        assert!((j.dx_dy2()[(0, 0, 1)] - e * 2.0 * 0.5).abs() < 1e-14);
        assert_eq!(j.dx_dy2()[(1, 0, 0)], 0.0);
        // ∂̇_0 ∂̇_1 ∂̇_1 f = 2 e^{x0}
        assert!((j.dy3()[(1, 0, 1)] - 2.0 * e).abs() < 1e-14);
    }

    #[test]
    fn order_selection() {
        let j = jet_eval(&Mixed, &[0.0, 0.0], &[1.0, 1.0], 2, true).unwrap();
        assert!(j.dy3.is_none() && j.dx_dy2.is_none());
        assert!(j.dx_dy.is_some() && j.dy2.is_some());
        let j = jet_eval(&Mixed, &[0.0, 0.0], &[1.0, 1.0], 1, true).unwrap();
        assert!(j.dx.is_some() && j.dx_dy.is_none());
        let j = jet_eval(&Mixed, &[0.0, 0.0], &[1.0, 1.0], 0, false).unwrap();
        assert!(j.dy.is_none());
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(matches!(
            jet_eval(&Mixed, &[0.0, 0.0], &[0.0, 0.0], 1, false),
            Err(GeometryError::InvalidParameter(_))
        ));
        assert!(matches!(
            jet_eval(&Mixed, &[0.0, 0.0], &[1.0, 0.0], 4, false),
            Err(GeometryError::InvalidParameter(_))
        ));
    }

    #[test]
    fn non_finite_is_a_domain_error() {
        struct Kink;
        impl ScalarField for Kink {
            fn dim(&self) -> usize {
                2
            }
            fn eval<T: Real>(&self, _x: &[T], y: &[T]) -> Result<T> {
                Ok(y[0].abs() + y[1])
            }
        }
        let err = jet_eval(&Kink, &[0.0, 0.0], &[0.0, 1.0], 1, false).unwrap_err();
        assert_eq!(
            err,
            GeometryError::EvaluationDomain {
                x: vec![0.0, 0.0],
                y: vec![0.0, 1.0]
            }
        );
    }

    #[test]
    fn multiset_counts() {
        assert_eq!(multisets(2, 3).len(), 4);
        assert_eq!(multisets(3, 3).len(), 10);
        assert_eq!(multisets(3, 0), vec![Vec::<usize>::new()]);
    }
}
