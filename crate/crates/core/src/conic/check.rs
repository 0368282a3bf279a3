//! Solver-independent feasibility check, evaluated from the raw program data.

use super::{ConicProgram, Relation};
use crate::scalar::Real;

/// Worst violations of a candidate point. Linear and bound violations are
/// relative to `1 + |rhs| + max_j |a_j·x_j|` of their row; cone violations are
/// measured on the equivalent standard cone `‖(u − v, 2w)‖ ≤ u + v` relative
/// to `1 + u + v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport<T> {
    pub max_bound_violation: T,
    pub max_linear_violation: T,
    pub max_cone_violation: T,
    /// `max(0, w² − u·v)` over all cones, unscaled.
    pub max_cone_product_gap: T,
}

impl<T: Real> FeasibilityReport<T> {
    pub fn max_violation(&self) -> T {
        self.max_bound_violation.max(self.max_linear_violation).max(self.max_cone_violation)
    }

    pub fn is_feasible(&self, tol: T) -> bool {
        self.max_violation() <= tol
    }
}

pub fn check_feasibility<T: Real>(prog: &ConicProgram<T>, x: &[T]) -> FeasibilityReport<T> {
    assert_eq!(x.len(), prog.num_vars(), "point dimension mismatch");
    let zero = T::zero();
    let one = T::one();

    let mut max_bound = zero;
    for ((&xi, &lo), &hi) in x.iter().zip(prog.lower()).zip(prog.upper()) {
        if lo.is_finite() {
            max_bound = max_bound.max((lo - xi) / (one + lo.abs()));
        }
        if hi.is_finite() {
            max_bound = max_bound.max((xi - hi) / (one + hi.abs()));
        }
    }

    let mut max_lin = zero;
    for c in prog.constraints() {
        let (lhs, scale) = c.terms.iter().fold((zero, zero), |(s, m), &(v, a)| {
            let t = a * x[v.0];
            (s + t, m.max(t.abs()))
        });
        let diff = lhs - c.rhs;
        let viol = match c.relation {
            Relation::Eq => diff.abs(),
            Relation::Le => diff.max(zero),
            Relation::Ge => (-diff).max(zero),
        };
        max_lin = max_lin.max(viol / (one + c.rhs.abs() + scale));
    }

    let mut max_cone = zero;
    let mut max_gap = zero;
    let two = one + one;
    for k in prog.cones() {
        let u = x[k.u.0];
        let v = x[k.v.0];
        let w = k.w.eval(x);
        let norm = (u - v).hypot(two * w);
        max_cone = max_cone.max((norm - (u + v)) / (one + u.abs() + v.abs()));
        max_gap = max_gap.max(w * w - u * v);
    }

    FeasibilityReport {
        max_bound_violation: max_bound.max(zero),
        max_linear_violation: max_lin,
        max_cone_violation: max_cone.max(zero),
        max_cone_product_gap: max_gap.max(zero),
    }
}
