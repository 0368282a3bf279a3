mod common;

use common::two_days;
use pvsize_core::analysis::{compare_formulations, compute_kpis, duration_curves, PvBasis, RowStatus};
use pvsize_core::optimizer::optimize;
use pvsize_core::system_model::Formulation;
use pvsize_core::{LinearDefaults, LossParams, OptimizeOptions};

#[test]
fn without_losses_all_formulations_agree() {
    let scn = two_days().lossless();
    let rows = compare_formulations(
        &scn,
        &LinearDefaults::best_point(&LossParams::lossless()),
        &Formulation::ALL,
        &OptimizeOptions::default(),
    );
    assert_eq!(rows.iter().map(|r| r.formulation).collect::<Vec<_>>(), Formulation::ALL.to_vec());
    let reference = rows[0].objective;
    for r in &rows {
        assert_eq!(r.status, RowStatus::Optimal, "{r:?}");
        assert!((r.objective - reference).abs() <= 1e-6 * reference, "{r:?}");
        assert!((r.objective_under_convex_operation - reference).abs() <= 1e-6 * reference, "{r:?}");
    }
}

#[test]
fn linear_variants_bracket_the_convex_optimum() {
    let scn = two_days();
    let rows = compare_formulations(
        &scn,
        &LinearDefaults::best_point(&scn.losses),
        &Formulation::ALL,
        &OptimizeOptions::default(),
    );
    let cc = rows.iter().find(|r| r.formulation == Formulation::CcCb).unwrap().objective;
    for r in &rows {
        assert_eq!(r.status, RowStatus::Optimal, "{r:?}");
        assert!(r.objective <= cc * (1.0 + 1e-7), "{r:?}");
        assert!(r.objective_under_convex_operation >= cc * (1.0 - 1e-7), "{r:?}");
    }
}

#[test]
fn subset_comparison_keeps_label_order() {
    let scn = two_days();
    let rows = compare_formulations(
        &scn,
        &LinearDefaults::best_point(&scn.losses),
        &[Formulation::LcLb, Formulation::CcCb, Formulation::LcLb],
        &OptimizeOptions::default(),
    );
    assert_eq!(rows.iter().map(|r| r.formulation).collect::<Vec<_>>(), vec![Formulation::CcCb, Formulation::LcLb]);
}

#[test]
fn kpis_of_an_optimized_schedule() {
    let mut scn = two_days();
    scn.costs.c_grid_withdraw = 0.4;
    let r = optimize(&scn).unwrap();
    let avail: Vec<f64> = scn.pv.values().iter().map(|g| g * r.sizing.pv_wp).collect();
    let k = compute_kpis(&r.schedule, &r.sizing, &scn.load_kw(), &avail, PvBasis::Available).unwrap();
    for f in [k.self_consumption, k.self_sufficiency, k.battery_idle_fraction] {
        assert!((0.0..=1.0).contains(&f), "{k:?}");
    }
    assert!(k.self_sufficiency > 0.0 && k.grid_withdrawal > 0.0);
    let used = compute_kpis(&r.schedule, &r.sizing, &scn.load_kw(), &avail, PvBasis::Used).unwrap();
    assert!(used.self_consumption <= k.self_consumption + 1e-9);

    let (charge, discharge) = duration_curves(&r.schedule, r.sizing.p_b_nom.max(1e-3)).unwrap();
    for c in [&charge, &discharge] {
        assert!(c.windows(2).all(|w| w[0] >= w[1]));
    }
}
