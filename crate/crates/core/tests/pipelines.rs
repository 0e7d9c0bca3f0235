use std::collections::BTreeMap;

use mtoda_core::continuous::{laguerre_closed_form_multi, LatticeWindow};
use mtoda_core::discrete::{ab_field_from_tau, dm_toda_step, verify_dgtoda, verify_div, verify_mkp, ABField, StepOptions};
use mtoda_core::exact::{int, rat};
use mtoda_core::mop::{mop_type2, verify_nn_recurrence};
use mtoda_core::stepline::{laguerre_alpha, miura_from_table, miura_map, miura_sites};
use mtoda_core::zero_curvature::{b_by_summation, ZeroCurvatureData};
use mtoda_core::{LatticeBox, MomentSpec, MultiIndex, NNCoefficients, Rational};
use num_traits::Zero;
use proptest::prelude::*;

#[test]
fn spec_json_to_closed_form() {
    let text = r#"{"r": 3, "kind": "laguerre", "delta": 1, "kappa": ["1", "3/2", "4"]}"#;
    let spec = MomentSpec::from_json(text).unwrap();
    assert_eq!(MomentSpec::from_value(spec.to_value()).unwrap(), spec);
    let t = rat(2, 7);
    let table = spec.table_at(&t, 14).unwrap();
    let window = LatticeWindow::from_table(&table, LatticeBox::cube(3, 2)).unwrap();
    let kappa = [int(1), rat(3, 2), int(4)];
    for (n, c) in &window.field {
        assert_eq!(c, &laguerre_closed_form_multi(n, 1, &kappa, &t).unwrap(), "{n}");
    }
}

#[test]
fn three_measure_discrete_flow_with_shift() {
    let spec = MomentSpec::laguerre(0, vec![int(1), int(2), int(3)]).unwrap();
    let lambda = rat(-1, 2);
    let box4 = LatticeBox::cube(3, 4);
    let f0 = ab_field_from_tau(&spec, &box4, 0, &lambda).unwrap();
    let f0 = ABField::from_value(&f0.to_value()).unwrap();
    assert!(verify_div(&f0).all_zero());
    let f1 = dm_toda_step(&f0, &StepOptions { strict: true, ..Default::default() }).unwrap();
    let direct = ab_field_from_tau(&spec, &f1.lattice, 1, &lambda).unwrap();
    assert_eq!(f1, direct);
    let g0 = ab_field_from_tau(&spec, &f1.lattice, 0, &lambda).unwrap();
    assert!(verify_mkp(&g0, &direct).all_zero());
    assert!(verify_dgtoda(&g0, &direct).all_zero());
}

#[test]
fn stepline_coefficients_by_three_routes() {
    let kappa = [int(1), int(3)];
    let spec = MomentSpec::laguerre(2, kappa.to_vec()).unwrap();
    let t = rat(1, 4);
    let len = 7;
    let from_det = miura_from_table(&spec.table_at(&t, 20).unwrap(), len).unwrap();
    let nn: BTreeMap<MultiIndex, NNCoefficients> = miura_sites(len)
        .into_iter()
        .map(|n| {
            let c = laguerre_closed_form_multi(&n, 2, &kappa, &t).unwrap();
            (n, c)
        })
        .collect();
    let from_closed = miura_map(&nn, len).unwrap();
    assert_eq!(from_det, from_closed);
    for big_n in 0..len {
        let (a0, a1, a2) = laguerre_alpha(big_n, 2, &kappa[0], &kappa[1], &t).unwrap();
        assert_eq!((&a0, &a1, &a2), (&from_det.alpha0[big_n], &from_det.alpha1[big_n], &from_det.alpha2[big_n]));
    }
}

#[test]
fn transition_matrix_checks_through_the_public_api() {
    let spec = MomentSpec::laguerre(0, vec![int(1), int(2)]).unwrap();
    let table = spec.table_at(&int(0), 16).unwrap();
    assert_eq!(b_by_summation(&table, 1, 0).unwrap().0, rat(9, 2));
    let data = ZeroCurvatureData::new(&spec, 3, 3, 2).unwrap();
    for n in 0..3 {
        for m in 0..3 {
            assert!(data.determinant_residuals(n, m, 1).unwrap().all_zero());
            assert!(data.entry31_residual(n, m, 1).unwrap().is_zero());
            let psi = data.psi(n, m, 0).unwrap();
            assert_eq!(psi[0], mop_type2(&table, &MultiIndex::new(vec![n, m])).unwrap());
        }
    }
}

fn moments_from(seed: &[i64]) -> MomentSpec {
    let rows = seed
        .chunks(seed.len() / 2)
        .map(|c| c.iter().map(|&x| int(x)).collect())
        .collect();
    MomentSpec::explicit(rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The nearest-neighbour recurrence holds wherever its stencil is normal.
    #[test]
    fn recurrence_holds_on_random_normal_stencils(seed in prop::collection::vec(-5i64..=5, 24)) {
        let spec = moments_from(&seed);
        let table = spec.table_at(&Rational::zero(), 11).unwrap();
        for n in LatticeBox::cube(2, 3).sites() {
            for j in 0..2 {
                match verify_nn_recurrence(&table, &n, j) {
                    Ok(res) => prop_assert!(res.is_zero(), "{} j={}", n, j),
                    Err(err) => prop_assert!(err.is_degeneracy(), "{}", err),
                }
            }
        }
    }
}
