//! Two-stage solve: minimize cost, then minimize losses at (almost) that cost
//! so that the cone relaxations become tight.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{ConicProgram, ConicSolution, SolveStatus};
use crate::scalar::Real;
use crate::system_model::{
    build_dispatch_program, build_operation_program, build_sizing_program, extract_schedule, ExtractError, ModelError,
    OperationSchedule, Scenario, Sizing, VariableMap,
};

pub mod exact;
mod oracle;
mod verify;

pub use exact::{cell_power_for_rate, converter_loss, inverter_output};
pub use oracle::{brute_force_operation, OracleError, OracleResult, MAX_GRID_STEPS, MAX_ORACLE_STEPS, NEGLIGIBLE_RATING};
pub use verify::{
    reevaluate_exact, verify_relaxation, ExactEvaluation, Overlap, SiteSlack, SlackReport, Tolerances, SLACK_FLOOR_KW,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Cost,
    Losses,
}

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{stage:?} stage ended with status {status:?}")]
    Solver { stage: Stage, status: SolveStatus },
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OptimizeOptions<T> {
    /// Relative allowance on the stage-1 objective in the stage-2 cap. The
    /// allowance is at least `cap_epsilon` €.
    pub cap_epsilon: T,
    /// Run the loss-minimizing second stage.
    pub two_stage: bool,
    pub tolerances: Tolerances<T>,
}

impl<T: Real> Default for OptimizeOptions<T> {
    fn default() -> Self {
        OptimizeOptions { cap_epsilon: T::lit(1e-6), two_stage: true, tolerances: Tolerances::default() }
    }
}

impl<T: Real> OptimizeOptions<T> {
    pub fn cap(&self, objective_eur: T) -> T {
        objective_eur + self.cap_epsilon * objective_eur.abs().max(T::one())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct StageReport<T> {
    pub status: SolveStatus,
    /// € for the cost stage, kWh for the loss stage.
    pub objective: T,
    pub iterations: u32,
    pub build_s: f64,
    pub solve_s: f64,
    pub num_vars: usize,
    pub num_constraints: usize,
    pub num_cones: usize,
    /// Worst violation found by the independent feasibility check.
    pub max_violation: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Runtimes {
    pub stage1_s: f64,
    pub stage2_s: f64,
    pub verify_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SizingResult<T> {
    pub sizing: Sizing<T>,
    /// Stage-1 optimum, €.
    pub stage1_objective: T,
    /// Total losses of the reported schedule, kWh.
    pub stage2_losses: T,
    /// Total cost of the reported schedule, €.
    pub cost_eur: T,
    pub stage1: StageReport<T>,
    /// `None` when the second stage was disabled.
    pub stage2: Option<StageReport<T>>,
    pub schedule: OperationSchedule<T>,
    pub slack: SlackReport<T>,
    pub exact: ExactEvaluation<T>,
    pub runtimes: Runtimes,
}

impl<T: Real> SizingResult<T> {
    /// Both stages optimal (or stage 2 disabled).
    pub fn stages_optimal(&self) -> bool {
        self.stage1.status.is_optimal() && self.stage2.map_or(true, |s| s.status.is_optimal())
    }
}

fn run_stage<T: Real>(
    scn: &Scenario<T>,
    build: impl FnOnce() -> Result<(ConicProgram<T>, VariableMap<T>), ModelError>,
    scale: T,
) -> Result<(ConicSolution<T>, VariableMap<T>, StageReport<T>), ModelError> {
    let t0 = Instant::now();
    let (prog, map) = build()?;
    let build_s = t0.elapsed().as_secs_f64();
    let sol = prog.solve(&scn.solver);
    log::debug!(
        "{} vars, {} rows, {} cones: {:?} after {} iterations in {:.3}s",
        prog.num_vars(),
        prog.num_constraints(),
        prog.num_cones(),
        sol.status,
        sol.iterations,
        sol.solve_time_s
    );
    let report = StageReport {
        status: sol.status,
        objective: sol.objective_value * scale,
        iterations: sol.iterations,
        build_s,
        solve_s: sol.solve_time_s,
        num_vars: prog.num_vars(),
        num_constraints: prog.num_constraints(),
        num_cones: prog.num_cones(),
        max_violation: sol.feasibility.map_or(T::nan(), |f| f.max_violation()),
    };
    Ok((sol, map, report))
}

/// Sizes the system (stage 1), then re-optimizes operation for that sizing
/// with minimal losses (stage 2), and verifies the result.
pub fn optimize<T: Real>(scn: &Scenario<T>) -> Result<SizingResult<T>, OptimizeError> {
    optimize_with(scn, &OptimizeOptions::default())
}

pub fn optimize_with<T: Real>(scn: &Scenario<T>, opts: &OptimizeOptions<T>) -> Result<SizingResult<T>, OptimizeError> {
    two_stage(scn, None, opts)
}

/// Same pipeline with the sizing held fixed: cost-optimal dispatch, then
/// loss-minimal dispatch under the cost cap.
pub fn optimize_operation<T: Real>(
    scn: &Scenario<T>,
    sizing: &Sizing<T>,
    opts: &OptimizeOptions<T>,
) -> Result<SizingResult<T>, OptimizeError> {
    two_stage(scn, Some(sizing), opts)
}

fn two_stage<T: Real>(
    scn: &Scenario<T>,
    fixed: Option<&Sizing<T>>,
    opts: &OptimizeOptions<T>,
) -> Result<SizingResult<T>, OptimizeError> {
    let start = Instant::now();
    scn.validate()?;
    let kilo = T::lit(1e3);

    let (sol1, map1, stage1) = run_stage(
        scn,
        || match fixed {
            None => build_sizing_program(scn),
            Some(s) => build_dispatch_program(scn, s),
        },
        kilo,
    )?;
    if !sol1.status.is_optimal() {
        return Err(OptimizeError::Solver { stage: Stage::Cost, status: sol1.status });
    }
    let (schedule1, sizing) = extract_schedule(&sol1, &map1)?;
    drop(sol1);
    let stage1_s = start.elapsed().as_secs_f64();

    let mut schedule = schedule1;
    let mut stage2 = None;
    let t2 = Instant::now();
    if opts.two_stage {
        let cap = opts.cap(stage1.objective);
        let (sol2, map2, report) = run_stage(scn, || build_operation_program(scn, &sizing, Some(cap)), T::one())?;
        stage2 = Some(report);
        if sol2.status.is_optimal() {
            schedule = extract_schedule(&sol2, &map2)?.0;
        } else {
            log::warn!("loss stage ended with {:?}; reporting the cost-stage schedule", sol2.status);
        }
    }
    let stage2_s = t2.elapsed().as_secs_f64();

    let t3 = Instant::now();
    let slack = verify_relaxation(&schedule, &sizing, &map1.laws, &opts.tolerances);
    let exact = reevaluate_exact(scn, &schedule, &sizing);
    let cost_eur = scn.total_cost(&sizing, &schedule.p_gi, &schedule.p_gw);
    let verify_s = t3.elapsed().as_secs_f64();
    if opts.two_stage && !slack.is_ok() {
        log::warn!(
            "relaxation not tight: max relative slack {}, complementarity ok = {}",
            slack.max_rel_slack(),
            slack.complementary_within_tol
        );
    }

    Ok(SizingResult {
        sizing,
        stage1_objective: stage1.objective,
        stage2_losses: schedule.total_losses_kwh(),
        cost_eur,
        stage1,
        stage2,
        schedule,
        slack,
        exact,
        runtimes: Runtimes { stage1_s, stage2_s, verify_s, total_s: start.elapsed().as_secs_f64() },
    })
}
