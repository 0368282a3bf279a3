//! Exhaustive dispatch search for tiny instances.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;
use crate::system_model::{ModelError, Scenario, Sizing};

use super::exact::{cell_power_for_rate, converter_loss, inverter_output};

pub const MAX_ORACLE_STEPS: usize = 8;
pub const MAX_GRID_STEPS: usize = 21;
/// Ratings below this (kW or kWh) are treated as absent components.
pub const NEGLIGIBLE_RATING: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle limited to {MAX_ORACLE_STEPS} steps, got {0}")]
    TooManySteps(usize),
    #[error("grid_steps must be in 2..={MAX_GRID_STEPS}, got {0}")]
    BadGrid(usize),
    #[error("no discretized schedule satisfies the constraints")]
    NoFeasiblePoint,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OracleResult<T> {
    /// Operating cost over the horizon plus investment, €.
    pub cost_eur: T,
    /// Stored energy at the end of each step, kWh.
    pub energy_path: Vec<T>,
    pub ppvi: Vec<T>,
    /// Estimated cost error from the energy and curtailment grids, €.
    pub discretization_bound_eur: T,
}

struct StepCost<'a, T> {
    scn: &'a Scenario<T>,
    sizing: Sizing<T>,
    load: Vec<T>,
    avail: Vec<T>,
    weight: T,
}

impl<T: Real> StepCost<'_, T> {
    /// Grid cost (€) at step `t` for moving the stored energy from `e0` to
    /// `e1` while feeding `ppvi` from the PV converter.
    fn eval(&self, t: usize, e0: T, e1: T, ppvi: T) -> Option<T> {
        let l = &self.scn.losses;
        let s = &self.sizing;
        let dt = self.scn.dt_hours();
        let (pc, pd) = cell_power_for_rate((e1 - e0) / dt, s.e_b_nom, &l.battery_cell)?;
        let cap = s.p_b_nom * (T::one() + T::lit(1e-9));
        if pc > cap || pd > cap {
            return None;
        }
        let p_beta = ppvi - converter_loss(ppvi, s.p_pv_nom, &l.pv_dcdc, true);
        let p_alpha = pd
            - converter_loss(pd, s.p_b_nom, &l.battery_dcdc, false)
            - pc
            - converter_loss(pc, s.p_b_nom, &l.battery_dcdc, true);
        let p_inv = inverter_output(p_alpha + p_beta, s.p_inv_nom, &l.inverter)?;
        let net = p_inv - self.load[t];
        let c = &self.scn.costs;
        let cost = if net >= T::zero() { -c.c_grid_inject * net } else { -c.c_grid_withdraw * net };
        Some(cost * dt * self.weight)
    }

    fn curtailment_levels(&self, t: usize, grid_steps: usize) -> Vec<T> {
        let top = self.avail[t].min(self.sizing.p_pv_nom).max(T::zero());
        levels(top, grid_steps)
    }

    /// Best curtailment choice for a transition.
    fn best(&self, t: usize, e0: T, e1: T, grid_steps: usize) -> Option<(T, T)> {
        let mut best: Option<(T, T)> = None;
        for p in self.curtailment_levels(t, grid_steps) {
            if let Some(c) = self.eval(t, e0, e1, p) {
                if best.map_or(true, |(b, _)| c < b) {
                    best = Some((c, p));
                }
            }
        }
        best
    }
}

fn levels<T: Real>(top: T, grid_steps: usize) -> Vec<T> {
    if top <= T::zero() {
        return vec![T::zero()];
    }
    let d = T::lit((grid_steps - 1) as f64);
    (0..grid_steps).map(|i| top * T::lit(i as f64) / d).collect()
}

/// Minimum-cost operation of a fixed sizing over a discretized state and
/// control space, using the exact loss models. Stored energy takes
/// `grid_steps` uniformly spaced levels in `[0, e_b_nom]` and the PV converter
/// input `grid_steps` levels in `[0, min(G·PV_Wp, p_pv_nom)]`.
pub fn brute_force_operation<T: Real>(
    scn: &Scenario<T>,
    sizing: &Sizing<T>,
    grid_steps: usize,
) -> Result<OracleResult<T>, OracleError> {
    scn.validate()?;
    sizing.validate()?;
    let n = scn.steps();
    if n > MAX_ORACLE_STEPS {
        return Err(OracleError::TooManySteps(n));
    }
    if !(2..=MAX_GRID_STEPS).contains(&grid_steps) {
        return Err(OracleError::BadGrid(grid_steps));
    }
    let capex = sizing.capex(&scn.costs);
    let eps = T::lit(NEGLIGIBLE_RATING);
    let snap = |x: T| if x < eps { T::zero() } else { x };
    let snapped = Sizing {
        pv_wp: snap(sizing.pv_wp),
        e_b_nom: snap(sizing.e_b_nom),
        p_pv_nom: snap(sizing.p_pv_nom),
        p_b_nom: snap(sizing.p_b_nom),
        p_inv_nom: snap(sizing.p_inv_nom),
    };
    let sizing = &snapped;
    let sc = StepCost {
        scn,
        sizing: snapped,
        load: scn.load_kw(),
        avail: scn.pv.values().iter().map(|&g| g * sizing.pv_wp).collect(),
        weight: scn.operating_weight(),
    };
    let battery = sizing.e_b_nom > T::zero() && sizing.p_b_nom > T::zero();
    let e_levels = if battery { levels(sizing.e_b_nom, grid_steps) } else { vec![T::zero()] };
    let m = e_levels.len();

    // transition[t][i][j]: best (cost, ppvi) from level i to level j at step t
    let transition: Vec<Vec<Vec<Option<(T, T)>>>> = (0..n)
        .map(|t| {
            (0..m)
                .map(|i| (0..m).map(|j| sc.best(t, e_levels[i], e_levels[j], grid_steps)).collect())
                .collect()
        })
        .collect();

    let throughput = |i: usize, j: usize| i.abs_diff(j);
    let mut best: Option<(T, usize, Vec<usize>)> = None;
    for start in 0..m {
        // (cost, accumulated |ΔE| index distance)
        let mut value: Vec<Option<(T, usize)>> = vec![None; m];
        value[start] = Some((T::zero(), 0));
        let mut parent = vec![vec![usize::MAX; m]; n];
        for t in 0..n {
            let mut next: Vec<Option<(T, usize)>> = vec![None; m];
            for i in 0..m {
                let Some((v, thr)) = value[i] else { continue };
                for j in 0..m {
                    let Some((c, _)) = transition[t][i][j] else { continue };
                    let cand = (v + c, thr + throughput(i, j));
                    let better = match next[j] {
                        None => true,
                        Some((b, bt)) => cand.0 < b - T::lit(1e-12) || (cand.0 <= b + T::lit(1e-12) && cand.1 < bt),
                    };
                    if better {
                        next[j] = Some(cand);
                        parent[t][j] = i;
                    }
                }
            }
            value = next;
        }
        if let Some((v, _)) = value[start] {
            let better = match &best {
                None => true,
                Some((b, _, _)) => v < *b - T::lit(1e-12),
            };
            if better {
                let mut path = vec![start; n];
                let mut j = start;
                for t in (0..n).rev() {
                    path[t] = j;
                    j = parent[t][j];
                }
                best = Some((v, start, path));
            }
        }
    }
    let (op_cost, start, path) = best.ok_or(OracleError::NoFeasiblePoint)?;

    let energy_path: Vec<T> = path.iter().map(|&i| e_levels[i]).collect();
    let mut prev = e_levels[start];
    let mut ppvi = Vec::with_capacity(n);
    let mut bound = T::zero();
    let de = if m > 1 { e_levels[1] - e_levels[0] } else { T::zero() };
    for t in 0..n {
        let e1 = energy_path[t];
        let (c, p) = sc.best(t, prev, e1, grid_steps).expect("path transition is feasible");
        ppvi.push(p);
        // local slopes by finite differences around the chosen point
        let mut slope_e = T::zero();
        if m > 1 {
            for (a, b) in [(prev + de, e1), (prev - de, e1), (prev, e1 + de), (prev, e1 - de)] {
                if a < T::zero() || b < T::zero() || a > sizing.e_b_nom || b > sizing.e_b_nom {
                    continue;
                }
                if let Some((c2, _)) = sc.best(t, a, b, grid_steps) {
                    slope_e = slope_e.max((c2 - c).abs() / de);
                }
            }
        }
        let lv = sc.curtailment_levels(t, grid_steps);
        let mut slope_p = T::zero();
        let mut h = T::zero();
        if lv.len() > 1 {
            h = lv[1] - lv[0];
            for w in lv.windows(2) {
                if let (Some(a), Some(b)) = (sc.eval(t, prev, e1, w[0]), sc.eval(t, prev, e1, w[1])) {
                    slope_p = slope_p.max((b - a).abs() / h);
                }
            }
        }
        bound += slope_e * de + slope_p * h / (T::one() + T::one());
        prev = e1;
    }

    Ok(OracleResult {
        cost_eur: op_cost + capex,
        energy_path,
        ppvi,
        discretization_bound_eur: bound,
    })
}
