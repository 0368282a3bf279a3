use crate::conic::{ConicProgram, LinExpr, Relation, Var};
use crate::scalar::Real;

use super::{LossSite, ModelError, Scenario, SiteLaw, Sizing};

/// Decision variables of one timestep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepVars {
    pub pc: Var,
    pub pd: Var,
    pub ppvi: Var,
    pub p_alpha: Var,
    pub p_beta: Var,
    pub p_gamma: Var,
    pub p_inv_pos: Var,
    pub p_inv_neg: Var,
    pub p_gi: Var,
    pub p_gw: Var,
    pub eb: Var,
    /// Epigraph variable of each site's quadratic loss divided by the site's
    /// curvature, in [`LossSite::ALL`] order. `None` where the site has no
    /// quadratic term.
    pub quad: [Option<Var>; 7],
}

impl StepVars {
    pub fn flow(&self, site: LossSite) -> Var {
        match site {
            LossSite::PvDcdc => self.ppvi,
            LossSite::BatteryDcdcCharge | LossSite::CellCharge => self.pc,
            LossSite::BatteryDcdcDischarge | LossSite::CellDischarge => self.pd,
            LossSite::InverterExport => self.p_inv_pos,
            LossSite::InverterImport => self.p_inv_neg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizingVars {
    pub pv_wp: Var,
    pub e_b_nom: Var,
    pub p_pv_nom: Var,
    pub p_b_nom: Var,
    pub p_inv_nom: Var,
}

impl SizingVars {
    pub fn rating(&self, site: LossSite) -> Var {
        match site {
            LossSite::PvDcdc => self.p_pv_nom,
            LossSite::BatteryDcdcCharge | LossSite::BatteryDcdcDischarge => self.p_b_nom,
            LossSite::InverterExport | LossSite::InverterImport => self.p_inv_nom,
            LossSite::CellCharge | LossSite::CellDischarge => self.e_b_nom,
        }
    }
}

/// Links program variables back to physical quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableMap<T> {
    pub steps: Vec<StepVars>,
    pub sizing: SizingVars,
    pub laws: [SiteLaw<T>; 7],
    pub dt_hours: T,
    /// kW per kWp (equivalently W/Wp) at each step.
    pub pv_yield: Vec<T>,
    pub load_kw: Vec<T>,
    /// Set when the sizing was fixed rather than optimized.
    pub fixed_sizing: Option<Sizing<T>>,
    pub num_vars: usize,
}

impl<T: Real> VariableMap<T> {
    /// Loss at `site` and step `t` as an affine expression in kW.
    pub fn loss_expr(&self, site: LossSite, t: usize) -> LinExpr<T> {
        let law = &self.laws[site.index()];
        let s = &self.steps[t];
        let mut e = LinExpr::zero();
        if law.standby != T::zero() {
            e = e.term(self.sizing.rating(site), law.standby);
        }
        if law.linear != T::zero() {
            e = e.term(s.flow(site), law.linear);
        }
        if let Some(q) = s.quad[site.index()] {
            e = e.term(q, law.curvature);
        }
        e
    }
}

#[derive(Debug, Clone, Copy)]
enum Mode<T> {
    Free,
    Fixed(Sizing<T>),
}

#[derive(Debug, Clone, Copy)]
enum Goal<T> {
    Cost,
    /// Minimize energy losses with the total cost capped, in €.
    Losses { cost_cap: Option<T> },
}

/// Joint sizing and operation, minimizing total cost of ownership.
pub fn build_sizing_program<T: Real>(scn: &Scenario<T>) -> Result<(ConicProgram<T>, VariableMap<T>), ModelError> {
    build(scn, Mode::Free, Goal::Cost)
}

/// Operation for a given sizing, minimizing total cost of ownership.
pub fn build_dispatch_program<T: Real>(
    scn: &Scenario<T>,
    sizing: &Sizing<T>,
) -> Result<(ConicProgram<T>, VariableMap<T>), ModelError> {
    sizing.validate()?;
    build(scn, Mode::Fixed(*sizing), Goal::Cost)
}

/// Operation for a given sizing, minimizing total energy losses subject to
/// total cost not exceeding `cost_cap` (€).
pub fn build_operation_program<T: Real>(
    scn: &Scenario<T>,
    sizing: &Sizing<T>,
    cost_cap: Option<T>,
) -> Result<(ConicProgram<T>, VariableMap<T>), ModelError> {
    sizing.validate()?;
    if cost_cap.is_some_and(|c| c.is_nan()) {
        return Err(ModelError::NanCap);
    }
    build(scn, Mode::Fixed(*sizing), Goal::Losses { cost_cap })
}

fn build<T: Real>(scn: &Scenario<T>, mode: Mode<T>, goal: Goal<T>) -> Result<(ConicProgram<T>, VariableMap<T>), ModelError> {
    scn.validate()?;
    let zero = T::zero();
    let inf = T::infinity();
    let kilo = T::lit(1e-3);
    let n = scn.steps();
    let dt = scn.dt_hours();
    let load_kw = scn.load_kw();
    let pv_yield: Vec<T> = scn.pv.values().to_vec();
    let laws = LossSite::ALL.map(|s| SiteLaw::for_site(s, &scn.losses, &scn.formulation));

    let mut prog = ConicProgram::new();

    let sizing = match mode {
        Mode::Free => SizingVars {
            pv_wp: prog.add_variable(zero, inf, zero)?,
            e_b_nom: prog.add_variable(zero, inf, zero)?,
            p_pv_nom: prog.add_variable(zero, inf, zero)?,
            p_b_nom: prog.add_variable(zero, inf, zero)?,
            p_inv_nom: prog.add_variable(zero, inf, zero)?,
        },
        Mode::Fixed(s) => SizingVars {
            pv_wp: prog.add_variable(s.pv_wp, s.pv_wp, zero)?,
            e_b_nom: prog.add_variable(s.e_b_nom, s.e_b_nom, zero)?,
            p_pv_nom: prog.add_variable(s.p_pv_nom, s.p_pv_nom, zero)?,
            p_b_nom: prog.add_variable(s.p_b_nom, s.p_b_nom, zero)?,
            p_inv_nom: prog.add_variable(s.p_inv_nom, s.p_inv_nom, zero)?,
        },
    };

    // Flow caps: bounds when the sizing is fixed, rows otherwise. A zero
    // rating shuts its flows off and its cones are dropped.
    let (pv_cap, bat_cap, e_cap, inv_cap) = match mode {
        Mode::Free => (inf, inf, inf, inf),
        Mode::Fixed(s) => {
            let battery_present = s.p_b_nom > zero && s.e_b_nom > zero;
            (
                s.p_pv_nom,
                if battery_present { s.p_b_nom } else { zero },
                if battery_present { s.e_b_nom } else { zero },
                s.p_inv_nom,
            )
        }
    };
    let rating_active = |site: LossSite| match site {
        LossSite::PvDcdc => pv_cap > zero,
        LossSite::BatteryDcdcCharge
        | LossSite::BatteryDcdcDischarge
        | LossSite::CellCharge
        | LossSite::CellDischarge => bat_cap > zero,
        LossSite::InverterExport | LossSite::InverterImport => inv_cap > zero,
    };

    let mut steps = Vec::with_capacity(n);
    for _ in 0..n {
        let mut s = StepVars {
            pc: prog.add_variable(zero, bat_cap, zero)?,
            pd: prog.add_variable(zero, bat_cap, zero)?,
            ppvi: prog.add_variable(zero, pv_cap, zero)?,
            p_alpha: prog.add_variable(-inf, inf, zero)?,
            p_beta: prog.add_variable(-inf, inf, zero)?,
            p_gamma: prog.add_variable(-inf, inf, zero)?,
            p_inv_pos: prog.add_variable(zero, inv_cap, zero)?,
            p_inv_neg: prog.add_variable(zero, inv_cap, zero)?,
            p_gi: prog.add_variable(zero, inf, zero)?,
            p_gw: prog.add_variable(zero, inf, zero)?,
            eb: prog.add_variable(zero, e_cap, zero)?,
            quad: [None; 7],
        };
        for site in LossSite::ALL {
            if laws[site.index()].is_conic() && rating_active(site) {
                s.quad[site.index()] = Some(prog.add_variable(zero, inf, zero)?);
            }
        }
        steps.push(s);
    }

    let map = VariableMap {
        steps,
        sizing,
        laws,
        dt_hours: dt,
        pv_yield,
        load_kw,
        fixed_sizing: match mode {
            Mode::Free => None,
            Mode::Fixed(s) => Some(s),
        },
        num_vars: prog.num_vars(),
    };

    for t in 0..n {
        let s = map.steps[t];
        let loss = |site: LossSite| map.loss_expr(site, t);

        // curtailment: ppvi ≤ G·PV_Wp
        prog.add_constraint(
            LinExpr::var(s.ppvi).term(sizing.pv_wp, -map.pv_yield[t]),
            Relation::Le,
            zero,
        )?;
        if let Mode::Free = mode {
            for (flow, cap) in [
                (s.ppvi, sizing.p_pv_nom),
                (s.pc, sizing.p_b_nom),
                (s.pd, sizing.p_b_nom),
                (s.p_inv_pos, sizing.p_inv_nom),
                (s.p_inv_neg, sizing.p_inv_nom),
                (s.eb, sizing.e_b_nom),
            ] {
                prog.add_constraint(LinExpr::var(flow).term(cap, -T::one()), Relation::Le, zero)?;
            }
        }

        // PV converter: ppvi − L = pβ
        let mut e = LinExpr::var(s.ppvi).term(s.p_beta, -T::one());
        e.terms.extend(loss(LossSite::PvDcdc).scaled(-T::one()).terms);
        prog.add_constraint(e, Relation::Eq, zero)?;

        // battery converter: pc + Lc − (pd − Ld) + pα = 0
        let mut e = LinExpr::var(s.pc).term(s.pd, -T::one()).term(s.p_alpha, T::one());
        e.terms.extend(loss(LossSite::BatteryDcdcCharge).terms);
        e.terms.extend(loss(LossSite::BatteryDcdcDischarge).terms);
        prog.add_constraint(e, Relation::Eq, zero)?;

        // DC bus
        prog.add_constraint(
            LinExpr::var(s.p_alpha).term(s.p_beta, T::one()).term(s.p_gamma, -T::one()),
            Relation::Eq,
            zero,
        )?;

        // inverter: pγ − pinv − L = 0
        let mut e = LinExpr::var(s.p_gamma).term(s.p_inv_pos, -T::one()).term(s.p_inv_neg, T::one());
        e.terms.extend(loss(LossSite::InverterExport).scaled(-T::one()).terms);
        e.terms.extend(loss(LossSite::InverterImport).scaled(-T::one()).terms);
        prog.add_constraint(e, Relation::Eq, zero)?;

        // AC node: pinv − load − pgi + pgw = 0
        prog.add_constraint(
            LinExpr::var(s.p_inv_pos).term(s.p_inv_neg, -T::one()).term(s.p_gi, -T::one()).term(s.p_gw, T::one()),
            Relation::Eq,
            map.load_kw[t],
        )?;

        // stored energy, cyclic over the horizon
        let prev = map.steps[(t + n - 1) % n].eb;
        let mut e = LinExpr::var(s.eb).term(prev, -T::one()).term(s.pc, -dt).term(s.pd, dt);
        e.terms.extend(loss(LossSite::CellCharge).scaled(dt).terms);
        e.terms.extend(loss(LossSite::CellDischarge).scaled(dt).terms);
        prog.add_constraint(e, Relation::Eq, zero)?;

        for site in LossSite::ALL {
            // q'·rating ≥ flow², loss = curvature·q'
            if let Some(q) = s.quad[site.index()] {
                prog.add_rsoc(q, sizing.rating(site), LinExpr::var(s.flow(site)))?;
            }
        }
    }

    let cost = cost_expr(scn, &map);
    match goal {
        Goal::Cost => set_objective(&mut prog, &cost)?,
        Goal::Losses { cost_cap } => {
            let mut losses = LinExpr::zero();
            for t in 0..n {
                for site in LossSite::ALL {
                    losses.terms.extend(map.loss_expr(site, t).scaled(dt).terms);
                }
            }
            set_objective(&mut prog, &losses)?;
            if let Some(cap) = cost_cap {
                if cap.is_finite() {
                    prog.add_constraint(cost, Relation::Le, cap * kilo)?;
                }
            }
        }
    }
    Ok((prog, map))
}

/// Total cost of ownership in k€.
fn cost_expr<T: Real>(scn: &Scenario<T>, map: &VariableMap<T>) -> LinExpr<T> {
    let kilo = T::lit(1e-3);
    let c = &scn.costs;
    let w = scn.operating_weight() * map.dt_hours * kilo;
    let mut e = LinExpr::zero()
        .term(map.sizing.p_b_nom, c.c_dcdc * kilo)
        .term(map.sizing.p_pv_nom, c.c_dcdc * kilo)
        .term(map.sizing.p_inv_nom, c.c_inv * kilo)
        .term(map.sizing.pv_wp, c.c_pv * kilo)
        .term(map.sizing.e_b_nom, c.c_battery * kilo);
    for s in &map.steps {
        e = e.term(s.p_gw, c.c_grid_withdraw * w).term(s.p_gi, -c.c_grid_inject * w);
    }
    e
}

fn set_objective<T: Real>(prog: &mut ConicProgram<T>, e: &LinExpr<T>) -> Result<(), ModelError> {
    let mut coeffs = vec![T::zero(); prog.num_vars()];
    for &(v, a) in &e.terms {
        coeffs[v.index()] += a;
    }
    for (i, a) in coeffs.into_iter().enumerate() {
        if a != T::zero() {
            prog.set_objective_coeff(Var(i), a)?;
        }
    }
    prog.add_objective_constant(e.constant)?;
    Ok(())
}
