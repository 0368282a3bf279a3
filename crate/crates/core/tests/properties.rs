mod common;

use common::{max_balance_residual, max_energy_residual, scenario};
use proptest::prelude::*;
use pvsize_core::analysis::{compute_kpis, duration_curves, PvBasis};
use pvsize_core::optimizer::{brute_force_operation, optimize};
use pvsize_core::system_model::Formulation;
use pvsize_core::{LinearDefaults, Scenario};

fn small_scenario() -> impl Strategy<Value = Scenario> {
    (1usize..=5).prop_flat_map(|n| {
        (prop::collection::vec(0.0f64..2.0, n), prop::collection::vec(0.0f64..1.0, n), prop::bool::ANY).prop_map(
            |(load, g, half_hour)| {
                let mut scn = scenario(&load, &g, if half_hour { 0.5 } else { 1.0 }, false);
                scn.costs.horizon_years = 900.0;
                scn
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn optimized_schedules_are_physical(scn in small_scenario()) {
        let r = optimize(&scn).unwrap();
        let s = &r.schedule;
        prop_assert!(max_balance_residual(s) <= 1e-6);
        prop_assert!(max_energy_residual(s) <= 1e-6);
        for t in 0..s.len() {
            prop_assert!(s.eb[t] >= -1e-7 && s.eb[t] <= r.sizing.e_b_nom + 1e-7);
            for v in [s.pc[t], s.pd[t], s.ppvi[t], s.p_gi[t], s.p_gw[t], s.p_inv_pos[t], s.p_inv_neg[t]] {
                prop_assert!(v >= -1e-7);
            }
        }
        prop_assert!(r.slack.tight_within_tol, "{:?}", r.slack.sites);
        prop_assert!(r.exact.relative_change <= 1e-4);
    }

    #[test]
    fn relaxed_optimum_never_beats_the_oracle(scn in small_scenario()) {
        let r = optimize(&scn).unwrap();
        let o = brute_force_operation(&scn, &r.sizing, 7).unwrap();
        prop_assert!(r.stage1_objective <= o.cost_eur * (1.0 + 10.0 * scn.solver.tol_gap) + 1e-6);
    }

    #[test]
    fn linear_model_is_optimistic(scn in small_scenario()) {
        let linear = LinearDefaults::best_point(&scn.losses);
        let cc = optimize(&scn).unwrap().stage1_objective;
        let lc = optimize(&scn.with_formulation(Formulation::LcLb.spec(&linear))).unwrap().stage1_objective;
        prop_assert!(lc <= cc * (1.0 + 1e-7) + 1e-6, "{lc} > {cc}");
    }

    #[test]
    fn kpis_and_curves_are_well_formed(scn in small_scenario()) {
        let r = optimize(&scn).unwrap();
        let avail: Vec<f64> = scn.pv.values().iter().map(|g| g * r.sizing.pv_wp).collect();
        let k = compute_kpis(&r.schedule, &r.sizing, &scn.load_kw(), &avail, PvBasis::Available).unwrap();
        for f in [k.self_consumption, k.self_sufficiency, k.battery_idle_fraction] {
            prop_assert!((0.0..=1.0).contains(&f));
        }
        prop_assert!(k.grid_injection >= 0.0 && k.grid_withdrawal >= 0.0);
        if r.sizing.p_b_nom > 1e-6 {
            let (charge, _) = duration_curves(&r.schedule, r.sizing.p_b_nom).unwrap();
            prop_assert!(charge.windows(2).all(|w| w[0] >= w[1]));
            let mean = charge.iter().sum::<f64>() / charge.len() as f64;
            let expected = r.schedule.pc.iter().sum::<f64>() * r.schedule.dt_hours
                / (r.sizing.p_b_nom * charge.len() as f64 * r.schedule.dt_hours);
            prop_assert!((mean - expected).abs() <= 1e-9);
            prop_assert!(charge.iter().all(|&c| c <= 1.0 + 1e-6));
        }
    }
}
