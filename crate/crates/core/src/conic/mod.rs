//! Linear-objective programs over linear constraints and rotated
//! second-order cones.
//!
//! A rotated cone constraint `rsoc(u, v, w)` encodes `u·v ≥ w²` with
//! `u, v ≥ 0`, where `u` and `v` are variables and `w` is an affine
//! expression. Variable bounds live on the variables themselves rather than
//! as constraint rows.

use std::fmt::{self, Display};
use std::io::{self, Write};

use thiserror::Error;

use crate::scalar::Real;

mod check;
mod solve;

pub use check::{check_feasibility, FeasibilityReport};
pub use solve::{ConicSolution, SolveStatus, SolverSettings};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConicError {
    #[error("variable bounds are inverted: lower {lower} > upper {upper}")]
    InvertedBounds { lower: f64, upper: f64 },
    #[error("variable index {index} out of range (program has {num_vars} variables)")]
    InvalidVar { index: usize, num_vars: usize },
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("NaN bound")]
    NanBound,
}

/// Index of a program variable. Stable for the lifetime of the program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

impl Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// Sparse affine expression `Σ coeff·var + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinExpr<T> {
    pub terms: Vec<(Var, T)>,
    pub constant: T,
}

impl<T: Real> LinExpr<T> {
    pub fn zero() -> Self {
        LinExpr { terms: Vec::new(), constant: T::zero() }
    }

    pub fn constant(c: T) -> Self {
        LinExpr { terms: Vec::new(), constant: c }
    }

    pub fn var(v: Var) -> Self {
        LinExpr { terms: vec![(v, T::one())], constant: T::zero() }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Var, T)>) -> Self {
        LinExpr { terms: terms.into_iter().collect(), constant: T::zero() }
    }

    pub fn term(mut self, v: Var, coeff: T) -> Self {
        self.terms.push((v, coeff));
        self
    }

    pub fn plus_constant(mut self, c: T) -> Self {
        self.constant += c;
        self
    }

    pub fn scaled(mut self, k: T) -> Self {
        self.terms.iter_mut().for_each(|(_, c)| *c *= k);
        self.constant *= k;
        self
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.terms.iter().fold(self.constant, |acc, &(v, c)| acc + c * x[v.0])
    }

    /// Merges repeated variables and drops exact zeros.
    fn normalize(&mut self) {
        self.terms.sort_by_key(|&(v, _)| v);
        let mut merged: Vec<(Var, T)> = Vec::with_capacity(self.terms.len());
        for &(v, c) in &self.terms {
            match merged.last_mut() {
                Some((last, acc)) if *last == v => *acc += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != T::zero());
        self.terms = merged;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

impl Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Eq => "=",
            Relation::Le => "<=",
            Relation::Ge => ">=",
        })
    }
}

/// `Σ coeff·var  (=|≤|≥)  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinConstraint<T> {
    pub terms: Vec<(Var, T)>,
    pub relation: Relation,
    pub rhs: T,
}

/// `u·v ≥ w²`, `u, v ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rsoc<T> {
    pub u: Var,
    pub v: Var,
    pub w: LinExpr<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConstraintId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConeId(pub usize);

/// Minimize `cᵀx + constant` subject to bounds, linear rows and rotated cones.
#[derive(Debug, Clone, Default)]
pub struct ConicProgram<T> {
    lower: Vec<T>,
    upper: Vec<T>,
    objective: Vec<T>,
    objective_constant: T,
    constraints: Vec<LinConstraint<T>>,
    cones: Vec<Rsoc<T>>,
}

impl<T: Real> ConicProgram<T> {
    pub fn new() -> Self {
        ConicProgram {
            lower: Vec::new(),
            upper: Vec::new(),
            objective: Vec::new(),
            objective_constant: T::zero(),
            constraints: Vec::new(),
            cones: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_cones(&self) -> usize {
        self.cones.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn objective(&self) -> &[T] {
        &self.objective
    }

    pub fn objective_constant(&self) -> T {
        self.objective_constant
    }

    pub fn constraints(&self) -> &[LinConstraint<T>] {
        &self.constraints
    }

    pub fn cones(&self) -> &[Rsoc<T>] {
        &self.cones
    }

    /// Adds a variable with bounds `[lower, upper]` (either may be infinite)
    /// and objective coefficient `objective_coeff`.
    pub fn add_variable(&mut self, lower: T, upper: T, objective_coeff: T) -> Result<Var, ConicError> {
        check_bounds(lower, upper)?;
        if !objective_coeff.is_finite() {
            return Err(ConicError::NonFinite("objective"));
        }
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(objective_coeff);
        Ok(Var(self.lower.len() - 1))
    }

    /// Replaces the bounds of an existing variable.
    pub fn set_bounds(&mut self, v: Var, lower: T, upper: T) -> Result<(), ConicError> {
        self.check_var(v)?;
        check_bounds(lower, upper)?;
        self.lower[v.0] = lower;
        self.upper[v.0] = upper;
        Ok(())
    }

    pub fn fix(&mut self, v: Var, value: T) -> Result<(), ConicError> {
        self.set_bounds(v, value, value)
    }

    pub fn set_objective_coeff(&mut self, v: Var, coeff: T) -> Result<(), ConicError> {
        self.check_var(v)?;
        if !coeff.is_finite() {
            return Err(ConicError::NonFinite("objective"));
        }
        self.objective[v.0] = coeff;
        Ok(())
    }

    pub fn add_objective_constant(&mut self, c: T) -> Result<(), ConicError> {
        if !c.is_finite() {
            return Err(ConicError::NonFinite("objective"));
        }
        self.objective_constant += c;
        Ok(())
    }

    /// Adds `expr (rel) rhs`. A constant inside `expr` is moved to the right.
    pub fn add_constraint(&mut self, expr: LinExpr<T>, relation: Relation, rhs: T) -> Result<ConstraintId, ConicError> {
        let mut expr = expr;
        self.check_expr(&expr, "linear constraint")?;
        if !rhs.is_finite() {
            return Err(ConicError::NonFinite("linear constraint"));
        }
        expr.normalize();
        self.constraints.push(LinConstraint { terms: expr.terms, relation, rhs: rhs - expr.constant });
        Ok(ConstraintId(self.constraints.len() - 1))
    }

    /// Adds `u·v ≥ w²`. Lower bounds of `u` and `v` below zero are raised to
    /// zero, since the cone implies non-negativity.
    pub fn add_rsoc(&mut self, u: Var, v: Var, w: LinExpr<T>) -> Result<ConeId, ConicError> {
        self.check_var(u)?;
        self.check_var(v)?;
        let mut w = w;
        self.check_expr(&w, "cone")?;
        w.normalize();
        for x in [u, v] {
            // a negative upper bound is left alone; the solver reports infeasibility
            if self.lower[x.0] < T::zero() && self.upper[x.0] >= T::zero() {
                self.lower[x.0] = T::zero();
            }
        }
        self.cones.push(Rsoc { u, v, w });
        Ok(ConeId(self.cones.len() - 1))
    }

    /// `cᵀx + constant`.
    pub fn objective_value(&self, x: &[T]) -> T {
        self.objective.iter().zip(x).fold(self.objective_constant, |acc, (&c, &xi)| acc + c * xi)
    }

    fn check_var(&self, v: Var) -> Result<(), ConicError> {
        if v.0 < self.num_vars() {
            Ok(())
        } else {
            Err(ConicError::InvalidVar { index: v.0, num_vars: self.num_vars() })
        }
    }

    fn check_expr(&self, e: &LinExpr<T>, what: &'static str) -> Result<(), ConicError> {
        for &(v, c) in &e.terms {
            self.check_var(v)?;
            if !c.is_finite() {
                return Err(ConicError::NonFinite(what));
            }
        }
        if !e.constant.is_finite() {
            return Err(ConicError::NonFinite(what));
        }
        Ok(())
    }

    /// Plain-text dump, one item per line, for diffing programs. The format is
    /// not stable.
    pub fn dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# {} vars, {} linear, {} rsoc", self.num_vars(), self.constraints.len(), self.cones.len())?;
        write!(out, "min:")?;
        for (i, c) in self.objective.iter().enumerate() {
            if *c != T::zero() {
                write!(out, " {:+e} x{}", c, i)?;
            }
        }
        writeln!(out, " {:+e}", self.objective_constant)?;
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            writeln!(out, "bound x{i}: [{lo:e}, {hi:e}]")?;
        }
        for (i, c) in self.constraints.iter().enumerate() {
            write!(out, "c{i}:")?;
            for (v, k) in &c.terms {
                write!(out, " {k:+e} {v}")?;
            }
            writeln!(out, " {} {:e}", c.relation, c.rhs)?;
        }
        for (i, k) in self.cones.iter().enumerate() {
            write!(out, "rsoc{i}: {} * {} >= (", k.u, k.v)?;
            for (v, c) in &k.w.terms {
                write!(out, " {c:+e} {v}")?;
            }
            writeln!(out, " {:+e})^2", k.w.constant)?;
        }
        Ok(())
    }
}

fn check_bounds<T: Real>(lower: T, upper: T) -> Result<(), ConicError> {
    if lower.is_nan() || upper.is_nan() {
        return Err(ConicError::NanBound);
    }
    if lower > upper {
        return Err(ConicError::InvertedBounds { lower: lower.to_f64_lossy(), upper: upper.to_f64_lossy() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variable_indices_are_sequential() {
        let mut p = ConicProgram::<f64>::new();
        assert_eq!(p.add_variable(0.0, f64::INFINITY, 1.0).unwrap(), Var(0));
        assert_eq!(p.add_variable(f64::NEG_INFINITY, f64::INFINITY, 0.0).unwrap(), Var(1));
        assert_eq!(p.num_vars(), 2);
    }

    #[test]
    fn inverted_bounds_rejected() {
        let mut p = ConicProgram::<f64>::new();
        assert!(matches!(p.add_variable(5.0, 3.0, 0.0), Err(ConicError::InvertedBounds { .. })));
        assert!(p.add_variable(f64::NAN, 3.0, 0.0).is_err());
        assert_eq!(p.num_vars(), 0);
    }

    #[test]
    fn rsoc_tightens_lower_bounds() {
        let mut p = ConicProgram::<f64>::new();
        let u = p.add_variable(f64::NEG_INFINITY, f64::INFINITY, 0.0).unwrap();
        let v = p.add_variable(-3.0, 10.0, 0.0).unwrap();
        let x = p.add_variable(f64::NEG_INFINITY, f64::INFINITY, 0.0).unwrap();
        p.add_rsoc(u, v, LinExpr::var(x)).unwrap();
        assert_eq!(p.lower()[u.0], 0.0);
        assert_eq!(p.lower()[v.0], 0.0);
        assert_eq!(p.lower()[x.0], f64::NEG_INFINITY);
    }

    #[test]
    fn invalid_indices_rejected() {
        let mut p = ConicProgram::<f64>::new();
        let u = p.add_variable(0.0, 1.0, 0.0).unwrap();
        assert!(matches!(p.add_rsoc(u, Var(7), LinExpr::zero()), Err(ConicError::InvalidVar { index: 7, .. })));
        assert!(p.add_constraint(LinExpr::var(Var(3)), Relation::Le, 1.0).is_err());
        assert!(p.add_constraint(LinExpr::var(u), Relation::Le, f64::NAN).is_err());
        assert!(p.add_constraint(LinExpr::zero().term(u, f64::INFINITY), Relation::Le, 1.0).is_err());
    }

    #[test]
    fn constraint_terms_are_merged() {
        let mut p = ConicProgram::<f64>::new();
        let x = p.add_variable(0.0, 1.0, 0.0).unwrap();
        let y = p.add_variable(0.0, 1.0, 0.0).unwrap();
        let e = LinExpr::var(x).term(y, 2.0).term(x, 3.0).term(y, -2.0).plus_constant(1.0);
        p.add_constraint(e, Relation::Eq, 5.0).unwrap();
        assert_eq!(p.constraints()[0].terms, vec![(x, 4.0)]);
        assert_eq!(p.constraints()[0].rhs, 4.0);
    }

    #[test]
    fn dump_has_one_line_per_item() {
        let mut p = ConicProgram::<f64>::new();
        let x = p.add_variable(0.0, f64::INFINITY, 1.0).unwrap();
        let y = p.add_variable(1.0, 1.0, 0.0).unwrap();
        p.add_constraint(LinExpr::var(x), Relation::Ge, 0.5).unwrap();
        p.add_rsoc(x, y, LinExpr::constant(2.0)).unwrap();
        let mut buf = Vec::new();
        p.dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 1 + 2 + 1 + 1);
        assert!(text.contains("rsoc0: x0 * x1 >="));
    }
}
