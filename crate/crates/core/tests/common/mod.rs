#![allow(dead_code)]

use pvsize_core::conic::SolverSettings;
use pvsize_core::profiles::synth::SynthSpec;
use pvsize_core::profiles::{Profile, ProfileKind};
use pvsize_core::system_model::Formulation;
use pvsize_core::{CostParams, LinearDefaults, LossParams, OperationSchedule, Scenario};

pub fn scenario(load_kw: &[f64], g: &[f64], dt: f64, annualize: bool) -> Scenario {
    let losses = LossParams::representative();
    Scenario {
        load: Profile::new(ProfileKind::Load, load_kw.iter().map(|l| l * 1e3).collect(), dt).unwrap(),
        pv: Profile::new(ProfileKind::PvNormalized, g.to_vec(), dt).unwrap(),
        costs: CostParams { annualize, ..CostParams::reference() },
        losses,
        formulation: Formulation::CcCb.spec(&LinearDefaults::best_point(&losses)),
        solver: SolverSettings::default(),
    }
}

/// G = [0, 1, 1, 0] at 1 h, load = [1, 0, 0, 1] kW. The four hours are
/// weighted 4000 times so that a PV-battery system pays off while pure export
/// does not.
pub fn toy() -> Scenario {
    let mut scn = scenario(&[1.0, 0.0, 0.0, 1.0], &[0.0, 1.0, 1.0, 0.0], 1.0, false);
    scn.costs.horizon_years = 4000.0;
    scn
}

/// Two synthetic spring days at hourly resolution, weighted 900 times.
pub fn two_days() -> Scenario {
    let spec = SynthSpec { steps: 48, dt_hours: 1.0, start_day: 80.0, seed: 3, ..SynthSpec::default() };
    let (load, pv) = spec.generate::<f64>().unwrap();
    let mut scn = toy();
    scn.load = load;
    scn.pv = pv;
    scn.costs.horizon_years = 900.0;
    scn
}

/// Largest absolute residual over the five power balances, kW.
pub fn max_balance_residual(s: &OperationSchedule) -> f64 {
    use pvsize_core::system_model::LossSite::*;
    let l = |site, t: usize| s.site(site).total[t];
    let mut worst = 0.0f64;
    for t in 0..s.len() {
        let r = [
            s.ppvi[t] - l(PvDcdc, t) - s.p_beta[t],
            s.pd[t] - l(BatteryDcdcDischarge, t) - s.pc[t] - l(BatteryDcdcCharge, t) - s.p_alpha[t],
            s.p_alpha[t] + s.p_beta[t] - s.p_gamma[t],
            s.p_gamma[t] - s.p_inv(t) - l(InverterExport, t) - l(InverterImport, t),
            s.p_inv(t) + s.p_gw[t] - s.load_kw[t] - s.p_gi[t],
        ];
        worst = r.iter().fold(worst, |m, x| m.max(x.abs()));
    }
    worst
}

/// Largest residual of the cyclic stored-energy recursion, kWh.
pub fn max_energy_residual(s: &OperationSchedule) -> f64 {
    use pvsize_core::system_model::LossSite::*;
    let n = s.len();
    (0..n)
        .map(|t| {
            let prev = s.eb[(t + n - 1) % n];
            let cell = s.site(CellCharge).total[t] + s.site(CellDischarge).total[t];
            (s.eb[t] - prev - s.dt_hours * (s.pc[t] - s.pd[t] - cell)).abs()
        })
        .fold(0.0, f64::max)
}
