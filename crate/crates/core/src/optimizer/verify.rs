use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::system_model::{LossSite, OperationSchedule, Scenario, SiteLaw, Sizing};

use super::exact::{converter_loss, inverter_output};

/// Denominator floor for relative slacks and complementarity bounds, kW.
pub const SLACK_FLOOR_KW: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Tolerances<T> {
    /// Relative cone slack.
    pub slack_rel: T,
    /// Opposing-flow overlap relative to the rating.
    pub complementarity_rel: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances { slack_rel: T::lit(1e-4), complementarity_rel: T::lit(1e-6) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SiteSlack<T> {
    pub site: LossSite,
    /// Whether the site carries a cone in this formulation.
    pub conic: bool,
    pub max_abs_slack_kw: T,
    pub max_rel_slack: T,
    /// Most negative slack seen, i.e. solver round-off below the exact loss.
    pub min_slack_kw: T,
    pub worst_step: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Overlap<T> {
    /// max over t of min(a_t, b_t), kW
    pub max_overlap_kw: T,
    pub bound_kw: T,
    pub within_tol: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SlackReport<T> {
    pub sites: Vec<SiteSlack<T>>,
    pub battery: Overlap<T>,
    pub grid: Overlap<T>,
    pub inverter: Overlap<T>,
    pub tolerances: Tolerances<T>,
    pub tight_within_tol: bool,
    pub complementary_within_tol: bool,
}

impl<T: Real> SlackReport<T> {
    pub fn is_ok(&self) -> bool {
        self.tight_within_tol && self.complementary_within_tol
    }

    pub fn site(&self, site: LossSite) -> &SiteSlack<T> {
        &self.sites[site.index()]
    }

    pub fn max_rel_slack(&self) -> T {
        self.sites.iter().fold(T::zero(), |m, s| m.max(s.max_rel_slack))
    }
}

fn flow<T: Copy>(s: &OperationSchedule<T>, site: LossSite) -> &[T] {
    match site {
        LossSite::PvDcdc => &s.ppvi,
        LossSite::BatteryDcdcCharge | LossSite::CellCharge => &s.pc,
        LossSite::BatteryDcdcDischarge | LossSite::CellDischarge => &s.pd,
        LossSite::InverterExport => &s.p_inv_pos,
        LossSite::InverterImport => &s.p_inv_neg,
    }
}

fn overlap<T: Real>(a: &[T], b: &[T], rating: T, tol: T) -> Overlap<T> {
    let max_overlap = a.iter().zip(b).fold(T::zero(), |m, (&x, &y)| m.max(x.min(y)));
    let bound = tol * rating.max(T::lit(SLACK_FLOOR_KW));
    Overlap { max_overlap_kw: max_overlap, bound_kw: bound, within_tol: max_overlap <= bound }
}

/// Compares each site's reported quadratic loss with the exact quadratic term
/// and checks the opposing flow pairs.
pub fn verify_relaxation<T: Real>(
    schedule: &OperationSchedule<T>,
    sizing: &Sizing<T>,
    laws: &[SiteLaw<T>; 7],
    tol: &Tolerances<T>,
) -> SlackReport<T> {
    let floor = T::lit(SLACK_FLOOR_KW);
    let sites: Vec<SiteSlack<T>> = LossSite::ALL
        .iter()
        .map(|&site| {
            let law = &laws[site.index()];
            let rating = site.rating(sizing);
            let reported = &schedule.site(site).quadratic;
            let mut out = SiteSlack {
                site,
                conic: law.is_conic(),
                max_abs_slack_kw: T::zero(),
                max_rel_slack: T::zero(),
                min_slack_kw: T::zero(),
                worst_step: None,
            };
            for (t, (&p, &q)) in flow(schedule, site).iter().zip(reported).enumerate() {
                let exact_q = law.quadratic(p.max(T::zero()), rating);
                let slack = q - exact_q;
                let denom = law.exact(p.max(T::zero()), rating).max(floor);
                let rel = slack.abs() / denom;
                out.max_abs_slack_kw = out.max_abs_slack_kw.max(slack.abs());
                if rel > out.max_rel_slack {
                    out.max_rel_slack = rel;
                    out.worst_step = Some(t);
                }
                out.min_slack_kw = out.min_slack_kw.min(slack);
            }
            out
        })
        .collect();

    let peak_load = schedule.load_kw.iter().fold(T::zero(), |m, &l| m.max(l));
    let battery = overlap(&schedule.pc, &schedule.pd, sizing.p_b_nom, tol.complementarity_rel);
    let grid = overlap(&schedule.p_gi, &schedule.p_gw, sizing.p_inv_nom.max(peak_load), tol.complementarity_rel);
    let inverter = overlap(&schedule.p_inv_pos, &schedule.p_inv_neg, sizing.p_inv_nom, tol.complementarity_rel);
    let tight = sites.iter().all(|s| s.max_rel_slack <= tol.slack_rel);
    SlackReport {
        sites,
        battery,
        grid,
        inverter,
        tolerances: *tol,
        tight_within_tol: tight,
        complementary_within_tol: battery.within_tol && grid.within_tol && inverter.within_tol,
    }
}

/// Cost of a schedule recomputed with the exact quadratic losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ExactEvaluation<T> {
    /// Total cost from the program's grid flows, €.
    pub model_cost_eur: T,
    /// Total cost after replaying the converter and cell commands, €.
    pub exact_cost_eur: T,
    pub relative_change: T,
    /// Stored energy left over after one replayed cycle, kWh. Non-negative
    /// when the relaxation over-estimates cell losses.
    pub cycle_energy_drift_kwh: T,
    /// Steps at which the inverter could not deliver the replayed power.
    pub infeasible_steps: usize,
}

/// Keeps the battery and PV converter commands of `schedule`, replays them
/// through the exact loss models of `scn.losses` and settles the difference at
/// the grid.
pub fn reevaluate_exact<T: Real>(scn: &Scenario<T>, schedule: &OperationSchedule<T>, sizing: &Sizing<T>) -> ExactEvaluation<T> {
    let l = &scn.losses;
    let n = schedule.len();
    let mut p_gi = Vec::with_capacity(n);
    let mut p_gw = Vec::with_capacity(n);
    let mut infeasible = 0;
    let mut drift = T::zero();
    for t in 0..n {
        let pc = schedule.pc[t];
        let pd = schedule.pd[t];
        let ppvi = schedule.ppvi[t];
        let p_beta = ppvi - converter_loss(ppvi, sizing.p_pv_nom, &l.pv_dcdc, true);
        let p_alpha = pd
            - converter_loss(pd, sizing.p_b_nom, &l.battery_dcdc, false)
            - pc
            - converter_loss(pc, sizing.p_b_nom, &l.battery_dcdc, true);
        let p_gamma = p_alpha + p_beta;
        let p_inv = match inverter_output(p_gamma, sizing.p_inv_nom, &l.inverter) {
            Some(p) => p,
            None => {
                infeasible += 1;
                schedule.p_inv(t)
            }
        };
        let net = p_inv - schedule.load_kw[t];
        p_gi.push(net.max(T::zero()));
        p_gw.push((-net).max(T::zero()));

        let cell = &l.battery_cell;
        let lc = cell.lambda() * pc + cell.quadratic_term(pc, sizing.e_b_nom);
        let ld = cell.lambda() * pd + cell.quadratic_term(pd, sizing.e_b_nom);
        drift += ((pc - lc) - (pd + ld)) * schedule.dt_hours;
    }
    let model = scn.total_cost(sizing, &schedule.p_gi, &schedule.p_gw);
    let exact = scn.total_cost(sizing, &p_gi, &p_gw);
    let denom = model.abs().max(T::one());
    ExactEvaluation {
        model_cost_eur: model,
        exact_cost_eur: exact,
        relative_change: (exact - model).abs() / denom,
        cycle_energy_drift_kwh: drift,
        infeasible_steps: infeasible,
    }
}
