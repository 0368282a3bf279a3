//! Key performance indicators, duration curves and the comparison of the four
//! loss formulations.

use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::SolveStatus;
use crate::optimizer::{optimize_operation, optimize_with, OptimizeError, OptimizeOptions};
use crate::profiles::synth::HOURS_PER_YEAR;
use crate::scalar::Real;
use crate::system_model::{
    BatteryModel, ConverterModel, Formulation, FormulationSpec, LinearDefaults, OperationSchedule, Scenario, Sizing,
};

/// A step counts as idle when neither battery flow reaches this share of the
/// rated converter power.
pub const IDLE_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PvBasis {
    /// Available PV power before curtailment.
    #[default]
    Available,
    /// PV power actually fed into the converter.
    Used,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Kpis<T> {
    pub self_consumption: T,
    pub self_sufficiency: T,
    /// kWh per year
    pub grid_injection: T,
    /// kWh per year
    pub grid_withdrawal: T,
    pub battery_idle_fraction: T,
    pub battery_full_cycles: T,
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("length mismatch: schedule has {schedule} steps, {what} has {other}")]
    Length { schedule: usize, what: &'static str, other: usize },
    #[error("battery flows present but rated power is zero")]
    NoBatteryRating,
}

fn sum<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, &x| a + x)
}

fn ratio<T: Real>(num: T, den: T) -> T {
    if den > T::zero() {
        (num / den).max(T::zero()).min(T::one())
    } else {
        T::zero()
    }
}

/// KPIs of a schedule. `load_kw` and `pv_available_kw` are per-step powers;
/// energies are scaled to one year of operation.
pub fn compute_kpis<T: Real>(
    schedule: &OperationSchedule<T>,
    sizing: &Sizing<T>,
    load_kw: &[T],
    pv_available_kw: &[T],
    basis: PvBasis,
) -> Result<Kpis<T>, AnalysisError> {
    let n = schedule.len();
    for (what, other) in [("load", load_kw.len()), ("pv", pv_available_kw.len())] {
        if other != n {
            return Err(AnalysisError::Length { schedule: n, what, other });
        }
    }
    let dt = schedule.dt_hours;
    let e_pv = match basis {
        PvBasis::Available => sum(pv_available_kw),
        PvBasis::Used => sum(&schedule.ppvi),
    } * dt;
    let e_inj = sum(&schedule.p_gi) * dt;
    let e_wd = sum(&schedule.p_gw) * dt;
    let e_load = sum(load_kw) * dt;
    let per_year = if n > 0 { T::lit(HOURS_PER_YEAR) / (T::lit(n as f64) * dt) } else { T::zero() };

    let threshold = T::lit(IDLE_THRESHOLD) * sizing.p_b_nom;
    let idle = schedule.pc.iter().zip(&schedule.pd).filter(|(&c, &d)| c.max(d) < threshold).count();
    let idle_fraction = if sizing.p_b_nom > T::zero() && n > 0 {
        T::lit(idle as f64) / T::lit(n as f64)
    } else {
        T::one()
    };
    let cycles = if sizing.e_b_nom > T::zero() { sum(&schedule.pd) * dt / sizing.e_b_nom } else { T::zero() };

    Ok(Kpis {
        self_consumption: ratio(e_pv - e_inj, e_pv),
        self_sufficiency: ratio(e_load - e_wd, e_load),
        grid_injection: e_inj.max(T::zero()) * per_year,
        grid_withdrawal: e_wd.max(T::zero()) * per_year,
        battery_idle_fraction: idle_fraction,
        battery_full_cycles: cycles,
    })
}

/// Charge and discharge powers relative to `p_b_nom`, sorted descending.
pub fn duration_curves<T: Real>(schedule: &OperationSchedule<T>, p_b_nom: T) -> Result<(Vec<T>, Vec<T>), AnalysisError> {
    let curve = |v: &[T]| -> Result<Vec<T>, AnalysisError> {
        if p_b_nom <= T::zero() {
            return if v.iter().all(|&p| p <= T::zero()) {
                Ok(vec![T::zero(); v.len()])
            } else {
                Err(AnalysisError::NoBatteryRating)
            };
        }
        let mut c: Vec<T> = v.iter().map(|&p| (p / p_b_nom).max(T::zero())).collect();
        c.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        Ok(c)
    };
    Ok((curve(&schedule.pc)?, curve(&schedule.pd)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ComparisonRow<T> {
    pub formulation: Formulation,
    pub status: RowStatus,
    pub objective: T,
    pub objective_under_convex_operation: T,
    pub sizing: Sizing<T>,
    /// kWh over the simulated period
    pub grid_injection: T,
    pub grid_withdrawal: T,
    pub runtime_s: f64,
    pub message: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Optimal,
    /// The variant solved but the convex re-operation did not.
    Partial,
    Failed,
}

fn failure_status(e: &OptimizeError) -> String {
    match e {
        OptimizeError::Solver { stage, status } => format!("{stage:?} stage: {status:?}"),
        other => other.to_string(),
    }
}

/// Optimizes `base` under each requested formulation concurrently. Linear
/// variants take their efficiencies from `linear`. For every variant except
/// CC-CB the resulting sizing is then operated under the fully convex model.
pub fn compare_formulations<T: Real + Send + Sync>(
    base: &Scenario<T>,
    linear: &LinearDefaults<T>,
    which: &[Formulation],
    opts: &OptimizeOptions<T>,
) -> Vec<ComparisonRow<T>> {
    let convex = base.with_formulation(FormulationSpec {
        converter_model: ConverterModel::Convex,
        battery_model: BatteryModel::Convex,
    });
    let mut wanted: Vec<Formulation> = which.to_vec();
    wanted.sort();
    wanted.dedup();

    let mut rows: Vec<ComparisonRow<T>> = thread::scope(|s| {
        let handles: Vec<_> = wanted
            .iter()
            .map(|&f| {
                let scn = base.with_formulation(f.spec(linear));
                let convex = &convex;
                s.spawn(move || run_variant(f, &scn, convex, opts))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("variant thread panicked")).collect()
    });
    rows.sort_by_key(|r| r.formulation);
    rows
}

fn run_variant<T: Real>(
    f: Formulation,
    scn: &Scenario<T>,
    convex: &Scenario<T>,
    opts: &OptimizeOptions<T>,
) -> ComparisonRow<T> {
    let nan = T::nan();
    let res = match optimize_with(scn, opts) {
        Ok(r) => r,
        Err(e) => {
            return ComparisonRow {
                formulation: f,
                status: RowStatus::Failed,
                objective: nan,
                objective_under_convex_operation: nan,
                sizing: Sizing { pv_wp: nan, e_b_nom: nan, p_pv_nom: nan, p_b_nom: nan, p_inv_nom: nan },
                grid_injection: nan,
                grid_withdrawal: nan,
                runtime_s: 0.0,
                message: Some(failure_status(&e)),
            }
        }
    };
    let dt = res.schedule.dt_hours;
    let mut row = ComparisonRow {
        formulation: f,
        status: RowStatus::Optimal,
        objective: res.stage1_objective,
        objective_under_convex_operation: res.stage1_objective,
        sizing: res.sizing,
        grid_injection: sum(&res.schedule.p_gi) * dt,
        grid_withdrawal: sum(&res.schedule.p_gw) * dt,
        runtime_s: res.runtimes.total_s,
        message: None,
    };
    if f != Formulation::CcCb {
        let single = OptimizeOptions { two_stage: false, ..*opts };
        match optimize_operation(convex, &res.sizing, &single) {
            Ok(op) => {
                row.objective_under_convex_operation = op.stage1_objective;
                row.runtime_s += op.runtimes.total_s;
            }
            Err(e) => {
                row.status = RowStatus::Partial;
                row.objective_under_convex_operation = nan;
                row.message = Some(format!("convex operation: {}", failure_status(&e)));
            }
        }
    }
    if let Some(s) = res.stage2.filter(|s| s.status != SolveStatus::Optimal) {
        row.status = RowStatus::Partial;
        row.message.get_or_insert_with(|| format!("loss stage: {:?}", s.status));
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system_model::{LossSite, SiteLosses};

    fn schedule(pc: Vec<f64>, pd: Vec<f64>, p_gi: Vec<f64>, p_gw: Vec<f64>) -> OperationSchedule<f64> {
        let n = pc.len();
        let z = vec![0.0; n];
        OperationSchedule {
            dt_hours: 1.0,
            load_kw: z.clone(),
            pc,
            pd,
            ppv: z.clone(),
            ppvi: z.clone(),
            p_alpha: z.clone(),
            p_beta: z.clone(),
            p_gamma: z.clone(),
            p_inv_pos: z.clone(),
            p_inv_neg: z.clone(),
            p_gi,
            p_gw,
            eb: z.clone(),
            losses: LossSite::ALL
                .iter()
                .map(|&site| SiteLosses { site, total: z.clone(), quadratic: z.clone() })
                .collect(),
        }
    }

    fn sizing(p_b_nom: f64, e_b_nom: f64) -> Sizing<f64> {
        Sizing { p_b_nom, e_b_nom, ..Sizing::zero() }
    }

    #[test]
    fn kpi_arithmetic() {
        // E_pv = 10, E_inj = 8, E_load = 4, E_wd = 2
        let s = schedule(vec![0.0; 2], vec![0.0; 2], vec![8.0, 0.0], vec![0.0, 2.0]);
        let k = compute_kpis(&s, &sizing(0.0, 0.0), &[2.0, 2.0], &[10.0, 0.0], PvBasis::Available).unwrap();
        assert!((k.self_consumption - 0.2).abs() < 1e-12);
        assert!((k.self_sufficiency - 0.5).abs() < 1e-12);
        assert!((k.grid_injection - 8.0 * 4380.0).abs() < 1e-6);
    }

    #[test]
    fn kpi_extremes() {
        let grid_only = schedule(vec![0.0; 2], vec![0.0; 2], vec![0.0; 2], vec![1.0, 1.0]);
        let k = compute_kpis(&grid_only, &sizing(0.0, 0.0), &[1.0, 1.0], &[0.0, 0.0], PvBasis::Available).unwrap();
        assert_eq!((k.self_consumption, k.self_sufficiency), (0.0, 0.0));

        let island = schedule(vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0; 2], vec![0.0; 2]);
        let k = compute_kpis(&island, &sizing(1.0, 2.0), &[0.5, 1.0], &[2.0, 0.0], PvBasis::Available).unwrap();
        assert_eq!((k.self_consumption, k.self_sufficiency), (1.0, 1.0));
        assert_eq!(k.battery_idle_fraction, 0.0);
        assert!((k.battery_full_cycles - 0.5).abs() < 1e-12);

        assert!(compute_kpis(&island, &sizing(1.0, 2.0), &[0.5], &[2.0, 0.0], PvBasis::Available).is_err());
    }

    #[test]
    fn duration_curve_sorts() {
        let s = schedule(vec![0.5, 1.0, 0.0], vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]);
        let (c, d) = duration_curves(&s, 1.0).unwrap();
        assert_eq!(c, vec![1.0, 0.5, 0.0]);
        assert_eq!(d, vec![0.0; 3]);
        assert_eq!(duration_curves(&s, 0.0), Err(AnalysisError::NoBatteryRating));
        let idle = schedule(vec![0.0; 3], vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]);
        assert_eq!(duration_curves(&idle, 0.0).unwrap().0, vec![0.0; 3]);
    }
}
