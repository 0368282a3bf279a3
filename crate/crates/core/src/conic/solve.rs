//! Interior-point backend: maps a [`ConicProgram`] onto Clarabel's standard
//! form `min qᵀx  s.t.  Ax + s = b, s ∈ K`.
//!
//! Row layout of `A`: equality rows and fixed variables (zero cone), then
//! inequality rows and finite bounds (non-negative orthant), then one
//! 3-dimensional second-order cone per rotated cone, using
//! `u·v ≥ w², u, v ≥ 0  ⇔  ‖(u − v, 2w)‖₂ ≤ u + v`.

use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};

use super::{check_feasibility, ConicProgram, FeasibilityReport, Relation};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
    IterationLimit,
}

impl SolveStatus {
    pub fn is_optimal(self) -> bool {
        self == SolveStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SolverSettings<T> {
    pub tol_feas: T,
    pub tol_gap: T,
    pub max_iter: u32,
}

impl<T: Real> Default for SolverSettings<T> {
    fn default() -> Self {
        SolverSettings { tol_feas: T::lit(1e-8), tol_gap: T::lit(1e-8), max_iter: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution<T> {
    pub status: SolveStatus,
    pub objective_value: T,
    pub var_values: Vec<T>,
    pub solve_time_s: f64,
    pub iterations: u32,
    /// Independent re-check of an optimal point against the raw program data.
    pub feasibility: Option<FeasibilityReport<T>>,
}

struct Triplets<T> {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
    rhs: Vec<T>,
}

impl<T: Real> Triplets<T> {
    fn new() -> Self {
        Triplets { rows: Vec::new(), cols: Vec::new(), vals: Vec::new(), rhs: Vec::new() }
    }

    fn push_row(&mut self, terms: impl IntoIterator<Item = (usize, T)>, rhs: T) {
        let r = self.rhs.len();
        for (c, v) in terms {
            if v != T::zero() {
                self.rows.push(r);
                self.cols.push(c);
                self.vals.push(v);
            }
        }
        self.rhs.push(rhs);
    }

    fn num_rows(&self) -> usize {
        self.rhs.len()
    }
}

impl<T: Real> ConicProgram<T> {
    /// Solves the program. Never panics on solver trouble: failures are
    /// reported through [`ConicSolution::status`]. Identical inputs produce
    /// identical outputs.
    pub fn solve(&self, settings: &SolverSettings<T>) -> ConicSolution<T> {
        let start = Instant::now();
        let n = self.num_vars();
        let mut a = Triplets::new();

        // zero cone
        for c in self.constraints().iter().filter(|c| c.relation == Relation::Eq) {
            a.push_row(c.terms.iter().map(|&(v, k)| (v.0, k)), c.rhs);
        }
        for (i, (&lo, &hi)) in self.lower().iter().zip(self.upper()).enumerate() {
            if lo == hi {
                a.push_row([(i, T::one())], lo);
            }
        }
        let n_zero = a.num_rows();

        // non-negative orthant
        for c in self.constraints() {
            match c.relation {
                Relation::Eq => {}
                Relation::Le => a.push_row(c.terms.iter().map(|&(v, k)| (v.0, k)), c.rhs),
                Relation::Ge => a.push_row(c.terms.iter().map(|&(v, k)| (v.0, -k)), -c.rhs),
            }
        }
        for (i, (&lo, &hi)) in self.lower().iter().zip(self.upper()).enumerate() {
            if lo == hi {
                continue;
            }
            if lo.is_finite() {
                a.push_row([(i, -T::one())], -lo);
            }
            if hi.is_finite() {
                a.push_row([(i, T::one())], hi);
            }
        }
        let n_nonneg = a.num_rows() - n_zero;

        let two = T::one() + T::one();
        for k in self.cones() {
            let (u, v) = (k.u.0, k.v.0);
            a.push_row([(u, -T::one()), (v, -T::one())], T::zero());
            a.push_row([(u, -T::one()), (v, T::one())], T::zero());
            a.push_row(k.w.terms.iter().map(|&(x, c)| (x.0, -two * c)), two * k.w.constant);
        }

        let m = a.num_rows();
        let mut cones = Vec::with_capacity(2 + self.num_cones());
        if n_zero > 0 {
            cones.push(SupportedConeT::ZeroConeT(n_zero));
        }
        if n_nonneg > 0 {
            cones.push(SupportedConeT::NonnegativeConeT(n_nonneg));
        }
        cones.extend((0..self.num_cones()).map(|_| SupportedConeT::SecondOrderConeT(3)));

        let failure = |status| ConicSolution {
            status,
            objective_value: T::nan(),
            var_values: vec![T::nan(); n],
            solve_time_s: start.elapsed().as_secs_f64(),
            iterations: 0,
            feasibility: None,
        };

        if m == 0 {
            // unconstrained: bounded only if the objective vanishes
            if self.objective().iter().any(|&c| c != T::zero()) {
                return failure(SolveStatus::Unbounded);
            }
            let x = vec![T::zero(); n];
            return ConicSolution {
                status: SolveStatus::Optimal,
                objective_value: self.objective_value(&x),
                feasibility: Some(check_feasibility(self, &x)),
                var_values: x,
                solve_time_s: start.elapsed().as_secs_f64(),
                iterations: 0,
            };
        }

        let a_mat = CscMatrix::new_from_triplets(m, n, a.rows, a.cols, a.vals);
        let p_mat = CscMatrix::<T>::zeros((n, n));
        let built = DefaultSettingsBuilder::<T>::default()
            .verbose(false)
            .tol_feas(settings.tol_feas)
            .tol_gap_abs(settings.tol_gap)
            .tol_gap_rel(settings.tol_gap)
            .max_iter(settings.max_iter)
            .build();
        let Ok(cl_settings) = built else {
            log::error!("invalid solver settings");
            return failure(SolveStatus::NumericalFailure);
        };
        let mut solver = match DefaultSolver::new(&p_mat, self.objective(), &a_mat, &a.rhs, &cones, cl_settings) {
            Ok(s) => s,
            Err(e) => {
                log::error!("solver setup failed: {e}");
                return failure(SolveStatus::NumericalFailure);
            }
        };
        solver.solve();

        let sol = &solver.solution;
        let x = sol.x.clone();
        let status = match sol.status {
            SolverStatus::Solved => SolveStatus::Optimal,
            SolverStatus::AlmostSolved => {
                let report = check_feasibility(self, &x);
                if report.is_feasible(settings.tol_feas * T::lit(10.0)) {
                    log::debug!("reduced-accuracy solution accepted after feasibility check");
                    SolveStatus::Optimal
                } else {
                    SolveStatus::NumericalFailure
                }
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
            SolverStatus::MaxIterations | SolverStatus::MaxTime => SolveStatus::IterationLimit,
            _ => SolveStatus::NumericalFailure,
        };
        let iterations = sol.iterations;
        if status != SolveStatus::Optimal {
            return ConicSolution { iterations, ..failure(status) };
        }
        let feasibility = Some(check_feasibility(self, &x));
        ConicSolution {
            status,
            objective_value: self.objective_value(&x),
            var_values: x,
            solve_time_s: start.elapsed().as_secs_f64(),
            iterations,
            feasibility,
        }
    }
}
