use hexp_finsler::closed_forms::{
    change_scalars, compare_starred, inverse_consistency, invert_rank_one, star_inverse_by_rank_one,
    starred_closed_forms, starred_oracle,
};
use hexp_finsler::diffkit::{fd_check, jet_eval};
use hexp_finsler::difference::{defining_residuals, difference_tensor, oracle_difference, ChangePoint, Transcription};
use hexp_finsler::fundamentals::{base_tensors, connections, identity_residuals};
use hexp_finsler::metrics::{hexp_apply, CovectorField, HVectorField, MatrixField, MetricFunction};
use hexp_finsler::projectivity::projective_factor;
use hexp_finsler::tensor::{max_abs_diff, outer, Matrix, Vector};
use proptest::prelude::*;

fn v(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}

fn zoo() -> Vec<MetricFunction> {
    let alpha = MatrixField::new_conformal(Matrix::from_row_slice(2, 2, &[1.2, 0.1, 0.1, 0.8]), v(&[0.3, -0.2])).unwrap();
    let beta = CovectorField::affine(v(&[0.2, 0.1]), Matrix::from_row_slice(2, 2, &[0.1, 0.0, 0.05, 0.1])).unwrap();
    vec![
        MetricFunction::euclidean(2),
        MetricFunction::riemannian(alpha.clone()),
        MetricFunction::randers(alpha.clone(), beta.clone()).unwrap(),
        MetricFunction::kropina(alpha.clone(), beta.clone()).unwrap(),
        MetricFunction::matsumoto(alpha, beta).unwrap(),
    ]
}

fn hvectors() -> Vec<HVectorField> {
    vec![
        HVectorField::constant(v(&[0.1, -0.05])),
        HVectorField::gradient(CovectorField::affine(v(&[0.1, 0.0]), Matrix::from_row_slice(2, 2, &[0.2, 0.1, 0.1, -0.1])).unwrap())
            .unwrap(),
        HVectorField::homothety(2, 0.2),
        HVectorField::mixed(
            CovectorField::affine(v(&[0.05, 0.1]), Matrix::from_row_slice(2, 2, &[0.0, 0.1, -0.1, 0.0])).unwrap(),
            0.15,
        ),
    ]
}

fn point() -> impl Strategy<Value = ([f64; 2], [f64; 2])> {
    (
        prop::array::uniform2(-0.4f64..0.4),
        (0.0f64..std::f64::consts::TAU).prop_map(|a| [a.cos(), a.sin()]),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn euler_and_homogeneity((x, y) in point(), which in 0usize..5, lambda in 0.3f64..6.0) {
        let m = &zoo()[which];
        prop_assume!(m.is_admissible(&x, &y));
        let jet = jet_eval(m, &x, &y, 2, false).unwrap();
        let euler: f64 = (0..2).map(|k| y[k] * jet.dy()[k]).sum();
        prop_assert!((euler - jet.value).abs() / jet.value.abs() < 1e-12);
        let y0 = jet.dy2() * v(&y);
        prop_assert!(y0.amax() < 1e-12 * jet.dy2().amax().max(1.0));
        let scaled = [y[0] * lambda, y[1] * lambda];
        let l = m.value(&x, &scaled).unwrap();
        prop_assert!((l - lambda * jet.value).abs() < 1e-12 * lambda * jet.value.abs());
    }

    #[test]
    fn jets_agree_with_finite_differences((x, y) in point(), which in 0usize..5) {
        let m = &zoo()[which];
        prop_assume!(m.is_admissible(&x, &y));
        let r = fd_check(m, &x, &y, 1e-4).unwrap();
        // near the cone edge of a Kropina metric the jets grow large, so the
        // truncation error is measured against their size
        let jet = jet_eval(m, &x, &y, 3, false).unwrap();
        let size = jet.value.abs().max(jet.dy3().max_abs()).max(1.0);
        prop_assert!(r.max_deviation() < 1e-6 * size, "{:?}", r);
    }

    #[test]
    fn structural_identities((x, y) in point(), which in 0usize..5) {
        let m = &zoo()[which];
        prop_assume!(m.is_admissible(&x, &y));
        let t = base_tensors(m, &x, &y).unwrap();
        let r = identity_residuals(&t, &connections(&t));
        prop_assert!(r.metricity < 1e-8 && r.deflection < 1e-9 && r.spray_euler < 1e-9, "{:?}", r);
        prop_assert!(r.cartan_transverse < 1e-12, "{:?}", r);
        prop_assert!((t.li.dot(&t.y) - t.l).abs() < 1e-12 * t.l.max(1.0));
        prop_assert!((&t.h * &t.y).amax() < 1e-12 * t.h.amax().max(1.0));
    }

    #[test]
    fn change_scalar_identities((x, y) in point(), which in 0usize..5, hv in 0usize..4) {
        let m = &zoo()[which];
        let b = &hvectors()[hv];
        prop_assume!(m.is_admissible(&x, &y));
        let t = base_tensors(m, &x, &y).unwrap();
        let cs = change_scalars(&t, &b.value(&x, &t.li), b.rho()).unwrap();
        prop_assert!(cs.m.dot(&t.y).abs() < 1e-12);
        prop_assert!((cs.m2 - (cs.b2 - cs.tau * cs.tau)).abs() < 1e-12);
        prop_assert!(cs.m_up.dot(&t.y_lower()).abs() < 1e-12);
    }

    #[test]
    fn closed_forms_equal_oracle((x, y) in point(), which in 0usize..5, hv in 0usize..4) {
        let m = &zoo()[which];
        let b = &hvectors()[hv];
        let star = hexp_apply(m, b).unwrap();
        prop_assume!(m.is_admissible(&x, &y) && star.is_admissible(&x, &y));
        let t = base_tensors(m, &x, &y).unwrap();
        let cs = change_scalars(&t, &b.value(&x, &t.li), b.rho()).unwrap();
        let closed = starred_closed_forms(&t, &cs);
        let oracle = starred_oracle(&base_tensors(&star, &x, &y).unwrap());
        for r in compare_starred(&closed, &oracle) {
            prop_assert!(r.rel < 1e-9, "{:?}", r);
        }
        prop_assert!(inverse_consistency(&closed) < 1e-10);
        let (chain, _) = star_inverse_by_rank_one(&t, &cs).unwrap();
        prop_assert!(max_abs_diff(chain.as_slice(), closed.g_inv.as_slice()) < 1e-10);
    }

    #[test]
    fn pipeline_equals_oracle((x, y) in point(), which in 0usize..3, hv in 0usize..4) {
        // Euclidean, Riemannian and Randers bases keep the test quick
        let m = &zoo()[which];
        let b = &hvectors()[hv];
        let star = hexp_apply(m, b).unwrap();
        prop_assume!(m.is_admissible(&x, &y) && star.is_admissible(&x, &y));
        let p = ChangePoint::new(m, b, &x, &y).unwrap();
        let d = difference_tensor(&p, Transcription::Corrected);
        let o = oracle_difference(m, b, &x, &y).unwrap();
        prop_assert!(max_abs_diff(d.d00.as_slice(), o.d00.as_slice()) < 1e-7);
        prop_assert!(max_abs_diff(d.d0j.as_slice(), o.d0j.as_slice()) < 1e-7);
        prop_assert!(max_abs_diff(d.djk.as_slice(), o.djk.as_slice()) < 1e-7);
        prop_assert!(max_abs_diff(d.djk.contract_last(&p.base.y).as_slice(), d.d0j.as_slice()) < 1e-9);
        let r = defining_residuals(&p, &d.d0j, &d.djk, Transcription::Corrected);
        prop_assert!(r.first < 1e-7 && r.second < 1e-7 && r.split < 1e-10, "{:?}", r);
    }

    #[test]
    fn projective_factor_is_homogeneous((x, y) in point(), lambda in prop::sample::select(vec![0.5, 2.0])) {
        let m = &zoo()[1];
        let b = HVectorField::constant(v(&[0.3, -0.2]));
        let p1 = projective_factor(&ChangePoint::new(m, &b, &x, &y).unwrap());
        let ys = [y[0] * lambda, y[1] * lambda];
        let pl = projective_factor(&ChangePoint::new(m, &b, &x, &ys).unwrap());
        prop_assert!((pl - lambda * p1).abs() <= 1e-9 * lambda * p1.abs().max(1e-3));
    }

    #[test]
    fn rank_one_inverse(entries in prop::array::uniform9(-1.0f64..1.0), n in prop::array::uniform3(-2.0f64..2.0)) {
        let a = Matrix::from_row_slice(3, 3, &entries);
        let m = &a * a.transpose() + Matrix::identity(3, 3) * 0.3;
        let n = v(&n);
        let (l, det) = invert_rank_one(&m, &n).unwrap();
        let full = &m + outer(&n, &n);
        prop_assert!((&full * &l - Matrix::identity(3, 3)).amax() < 1e-12 * full.amax().max(1.0) * l.amax().max(1.0));
        prop_assert!((det - full.determinant()).abs() < 1e-10 * det.abs());
    }
}
