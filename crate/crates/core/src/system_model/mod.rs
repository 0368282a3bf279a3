//! Conic model of a DC-coupled PV-battery system.
//!
//! Topology: PV array → PV DC/DC converter → DC bus ← battery DC/DC
//! converter ← battery cell; DC bus ↔ inverter ↔ household and grid.
//! Every loss site is either a linear constant-efficiency term or a
//! quadratic model relaxed to a rotated cone, depending on the
//! [`FormulationSpec`].
//!
//! Inside the program powers are in kW, energies in kWh and money in k€.
//! Profile data (W, W/Wp) and reported results (kW, kWh, €) are converted at
//! the boundary.

use std::fmt::{self, Display};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{ConicError, SolverSettings};
use crate::loss_models::{defaults, BatteryLossParams, ConverterLossParams, LinearEfficiency};
use crate::profiles::synth::HOURS_PER_YEAR;
use crate::profiles::{check_aligned, Profile, ProfileError};
use crate::scalar::Real;

mod build;
mod schedule;

pub use build::{
    build_dispatch_program, build_operation_program, build_sizing_program, SizingVars, StepVars, VariableMap,
};
pub use schedule::{extract_schedule, ExtractError, OperationSchedule, SiteLosses, SCHEDULE_COLUMNS};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("invalid cost parameters: {0}")]
    Costs(String),
    #[error("invalid sizing: {0}")]
    Sizing(String),
    #[error("objective cap must not be NaN")]
    NanCap,
    #[error(transparent)]
    Program(#[from] ConicError),
}

/// Economic parameters of the total-cost-of-ownership objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct CostParams<T> {
    /// €/kWp
    pub c_pv: T,
    /// €/kWh
    pub c_battery: T,
    /// €/kVA, applied to both DC/DC converters
    pub c_dcdc: T,
    /// €/kVA
    pub c_inv: T,
    /// €/kWh
    pub c_grid_withdraw: T,
    /// €/kWh
    pub c_grid_inject: T,
    /// Years over which operating cost accrues.
    pub horizon_years: T,
    /// Scale the operating cost of the simulated period to a full year
    /// (8760 h). Off by default: the profile is taken to be the year.
    #[serde(default)]
    pub annualize: bool,
}

impl<T: Real> CostParams<T> {
    /// Reference values: 750 €/kWp, 250 €/kWh, 130 €/kVA, 200 €/kVA,
    /// 0.26 €/kWh withdrawal, 0.10 €/kWh injection, 10 years.
    pub fn reference() -> Self {
        CostParams {
            c_pv: T::lit(750.0),
            c_battery: T::lit(250.0),
            c_dcdc: T::lit(130.0),
            c_inv: T::lit(200.0),
            c_grid_withdraw: T::lit(0.26),
            c_grid_inject: T::lit(0.1),
            horizon_years: T::lit(10.0),
            annualize: false,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let named = [
            ("c_pv", self.c_pv),
            ("c_battery", self.c_battery),
            ("c_dcdc", self.c_dcdc),
            ("c_inv", self.c_inv),
            ("c_grid_withdraw", self.c_grid_withdraw),
            ("c_grid_inject", self.c_grid_inject),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v >= T::zero()) {
                return Err(ModelError::Costs(format!("{name} must be a non-negative number, got {v}")));
            }
        }
        if !(self.horizon_years.is_finite() && self.horizon_years > T::zero()) {
            return Err(ModelError::Costs(format!("horizon_years must be positive, got {}", self.horizon_years)));
        }
        if self.c_grid_inject > self.c_grid_withdraw {
            log::warn!(
                "injection remuneration {} exceeds withdrawal price {}: the model may cycle energy through the grid",
                self.c_grid_inject,
                self.c_grid_withdraw
            );
        }
        Ok(())
    }

    /// Multiplier from simulated-period energy cost to horizon cost.
    pub fn operating_weight(&self, steps: usize, dt_hours: T) -> T {
        let period = if self.annualize {
            T::lit(HOURS_PER_YEAR) / (T::lit(steps as f64) * dt_hours)
        } else {
            T::one()
        };
        self.horizon_years * period
    }
}

/// Fitted loss parameters for every loss-bearing component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct LossParams<T> {
    pub pv_dcdc: ConverterLossParams<T>,
    pub battery_dcdc: ConverterLossParams<T>,
    pub inverter: ConverterLossParams<T>,
    pub battery_cell: BatteryLossParams<T>,
}

impl<T: Real> LossParams<T> {
    /// Representative placeholder parameters, see [`defaults`].
    pub fn representative() -> Self {
        LossParams {
            pv_dcdc: defaults::pv_dcdc(),
            battery_dcdc: defaults::battery_dcdc(),
            inverter: defaults::inverter(),
            battery_cell: defaults::battery_cell(),
        }
    }

    pub fn lossless() -> Self {
        LossParams {
            pv_dcdc: ConverterLossParams::lossless(T::lit(1000.0)),
            battery_dcdc: ConverterLossParams::lossless(T::lit(1000.0)),
            inverter: ConverterLossParams::lossless(T::lit(1000.0)),
            battery_cell: BatteryLossParams::lossless(T::one()),
        }
    }
}

/// Constant efficiencies used when converters are modeled linearly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct LinearConverterEfficiencies<T> {
    pub pv_dcdc: LinearEfficiency<T>,
    pub battery_dcdc: LinearEfficiency<T>,
    pub inverter: LinearEfficiency<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", rename_all = "snake_case")]
pub enum ConverterModel<T> {
    Convex,
    Linear(LinearConverterEfficiencies<T>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", rename_all = "snake_case")]
pub enum BatteryModel<T> {
    Convex,
    Linear(LinearEfficiency<T>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FormulationSpec<T> {
    pub converter_model: ConverterModel<T>,
    pub battery_model: BatteryModel<T>,
}

/// The four combinations of converter and battery loss modeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Formulation {
    #[serde(rename = "CC-CB")]
    CcCb,
    #[serde(rename = "CC-LB")]
    CcLb,
    #[serde(rename = "LC-CB")]
    LcCb,
    #[serde(rename = "LC-LB")]
    LcLb,
}

impl Formulation {
    pub const ALL: [Formulation; 4] = [Formulation::CcCb, Formulation::CcLb, Formulation::LcCb, Formulation::LcLb];

    pub fn label(self) -> &'static str {
        match self {
            Formulation::CcCb => "CC-CB",
            Formulation::CcLb => "CC-LB",
            Formulation::LcCb => "LC-CB",
            Formulation::LcLb => "LC-LB",
        }
    }

    pub fn convex_converters(self) -> bool {
        matches!(self, Formulation::CcCb | Formulation::CcLb)
    }

    pub fn convex_battery(self) -> bool {
        matches!(self, Formulation::CcCb | Formulation::LcCb)
    }

    /// Builds the spec, taking linear efficiencies from `linear`.
    pub fn spec<T: Real>(self, linear: &LinearDefaults<T>) -> FormulationSpec<T> {
        FormulationSpec {
            converter_model: if self.convex_converters() {
                ConverterModel::Convex
            } else {
                ConverterModel::Linear(linear.converters)
            },
            battery_model: if self.convex_battery() {
                BatteryModel::Convex
            } else {
                BatteryModel::Linear(linear.battery)
            },
        }
    }
}

impl Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown formulation label {0:?} (expected CC-CB, CC-LB, LC-CB or LC-LB)")]
pub struct UnknownFormulation(pub String);

impl FromStr for Formulation {
    type Err = UnknownFormulation;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Formulation::ALL
            .into_iter()
            .find(|f| f.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownFormulation(s.to_string()))
    }
}

/// Constant efficiencies for the linear formulations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LinearDefaults<T> {
    pub converters: LinearConverterEfficiencies<T>,
    pub battery: LinearEfficiency<T>,
}

impl<T: Real> LinearDefaults<T> {
    /// Each component's peak efficiency under its quadratic model, so that the
    /// linear losses never exceed the quadratic ones.
    pub fn best_point(losses: &LossParams<T>) -> Self {
        let eff = |eta: T| LinearEfficiency::new(eta).unwrap_or_else(|_| LinearEfficiency::lossless());
        LinearDefaults {
            converters: LinearConverterEfficiencies {
                pv_dcdc: eff(losses.pv_dcdc.best_point_efficiency()),
                battery_dcdc: eff(losses.battery_dcdc.best_point_efficiency()),
                inverter: eff(losses.inverter.best_point_efficiency()),
            },
            battery: eff(losses.battery_cell.best_point_efficiency()),
        }
    }
}

/// Installed capacities: kWp, kWh and kVA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Sizing<T> {
    pub pv_wp: T,
    pub e_b_nom: T,
    pub p_pv_nom: T,
    pub p_b_nom: T,
    pub p_inv_nom: T,
}

impl<T: Real> Sizing<T> {
    pub fn zero() -> Self {
        Sizing { pv_wp: T::zero(), e_b_nom: T::zero(), p_pv_nom: T::zero(), p_b_nom: T::zero(), p_inv_nom: T::zero() }
    }

    pub fn as_array(&self) -> [T; 5] {
        [self.pv_wp, self.e_b_nom, self.p_pv_nom, self.p_b_nom, self.p_inv_nom]
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.as_array().iter().all(|&v| v.is_finite() && v >= T::zero()) {
            Ok(())
        } else {
            Err(ModelError::Sizing(format!("all sizes must be finite and non-negative: {self:?}")))
        }
    }

    /// Clamps solver round-off below zero.
    pub fn clamped(&self) -> Self {
        let c = |v: T| v.max(T::zero());
        Sizing {
            pv_wp: c(self.pv_wp),
            e_b_nom: c(self.e_b_nom),
            p_pv_nom: c(self.p_pv_nom),
            p_b_nom: c(self.p_b_nom),
            p_inv_nom: c(self.p_inv_nom),
        }
    }

    /// Investment part of the objective, in €.
    pub fn capex(&self, costs: &CostParams<T>) -> T {
        costs.c_dcdc * (self.p_b_nom + self.p_pv_nom)
            + costs.c_inv * self.p_inv_nom
            + costs.c_pv * self.pv_wp
            + costs.c_battery * self.e_b_nom
    }
}

/// Everything needed to build and solve a model instance.
#[derive(Debug, Clone)]
pub struct Scenario<T> {
    pub load: Profile<T>,
    pub pv: Profile<T>,
    pub costs: CostParams<T>,
    pub losses: LossParams<T>,
    pub formulation: FormulationSpec<T>,
    pub solver: SolverSettings<T>,
}

impl<T: Real> Scenario<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_aligned(&self.load, &self.pv)?;
        self.costs.validate()
    }

    pub fn steps(&self) -> usize {
        self.load.len()
    }

    pub fn dt_hours(&self) -> T {
        self.load.dt_hours()
    }

    /// Load in kW.
    pub fn load_kw(&self) -> Vec<T> {
        let k = T::lit(1e-3);
        self.load.values().iter().map(|&w| w * k).collect()
    }

    pub fn operating_weight(&self) -> T {
        self.costs.operating_weight(self.steps(), self.dt_hours())
    }

    /// Grid exchange part of the objective, in €, for per-step injection and
    /// withdrawal in kW.
    pub fn operating_cost(&self, p_gi: &[T], p_gw: &[T]) -> T {
        let dt = self.dt_hours();
        let net = p_gi.iter().zip(p_gw).fold(T::zero(), |acc, (&gi, &gw)| {
            acc + (self.costs.c_grid_withdraw * gw - self.costs.c_grid_inject * gi) * dt
        });
        net * self.operating_weight()
    }

    /// Total cost of ownership in €.
    pub fn total_cost(&self, sizing: &Sizing<T>, p_gi: &[T], p_gw: &[T]) -> T {
        self.operating_cost(p_gi, p_gw) + sizing.capex(&self.costs)
    }

    pub fn with_formulation(&self, formulation: FormulationSpec<T>) -> Self {
        Scenario { formulation, ..self.clone() }
    }

    /// Same scenario with every loss removed, in every formulation.
    pub fn lossless(&self) -> Self {
        let formulation = FormulationSpec {
            converter_model: match self.formulation.converter_model {
                ConverterModel::Convex => ConverterModel::Convex,
                ConverterModel::Linear(_) => ConverterModel::Linear(LinearConverterEfficiencies {
                    pv_dcdc: LinearEfficiency::lossless(),
                    battery_dcdc: LinearEfficiency::lossless(),
                    inverter: LinearEfficiency::lossless(),
                }),
            },
            battery_model: match self.formulation.battery_model {
                BatteryModel::Convex => BatteryModel::Convex,
                BatteryModel::Linear(_) => BatteryModel::Linear(LinearEfficiency::lossless()),
            },
        };
        Scenario { losses: LossParams::lossless(), formulation, ..self.clone() }
    }
}

/// Loss sites of the model. Standby losses (`P_nom·ã`) are booked on the
/// battery converter's charge site, the inverter's export site and the PV
/// converter site, once per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossSite {
    PvDcdc,
    BatteryDcdcCharge,
    BatteryDcdcDischarge,
    InverterExport,
    InverterImport,
    CellCharge,
    CellDischarge,
}

impl LossSite {
    pub const ALL: [LossSite; 7] = [
        LossSite::PvDcdc,
        LossSite::BatteryDcdcCharge,
        LossSite::BatteryDcdcDischarge,
        LossSite::InverterExport,
        LossSite::InverterImport,
        LossSite::CellCharge,
        LossSite::CellDischarge,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            LossSite::PvDcdc => "pv_dcdc",
            LossSite::BatteryDcdcCharge => "battery_dcdc_charge",
            LossSite::BatteryDcdcDischarge => "battery_dcdc_discharge",
            LossSite::InverterExport => "inverter_export",
            LossSite::InverterImport => "inverter_import",
            LossSite::CellCharge => "battery_cell_charge",
            LossSite::CellDischarge => "battery_cell_discharge",
        }
    }

    pub fn is_battery_cell(self) -> bool {
        matches!(self, LossSite::CellCharge | LossSite::CellDischarge)
    }

    pub fn carries_standby(self) -> bool {
        matches!(self, LossSite::PvDcdc | LossSite::BatteryDcdcCharge | LossSite::InverterExport)
    }

    /// Rated quantity the loss scales with: converter kVA or battery kWh.
    pub fn rating<T: Copy>(self, s: &Sizing<T>) -> T {
        match self {
            LossSite::PvDcdc => s.p_pv_nom,
            LossSite::BatteryDcdcCharge | LossSite::BatteryDcdcDischarge => s.p_b_nom,
            LossSite::InverterExport | LossSite::InverterImport => s.p_inv_nom,
            LossSite::CellCharge | LossSite::CellDischarge => s.e_b_nom,
        }
    }
}

impl Display for LossSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Loss law applied at one site: `standby·rating + linear·flow + quadratic`,
/// with `quadratic·rating ≥ curvature·flow²` when `curvature > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteLaw<T> {
    pub standby: T,
    pub linear: T,
    pub curvature: T,
}

impl<T: Real> SiteLaw<T> {
    pub fn for_site(site: LossSite, losses: &LossParams<T>, form: &FormulationSpec<T>) -> Self {
        let zero = T::zero();
        if site.is_battery_cell() {
            return match form.battery_model {
                BatteryModel::Convex => SiteLaw {
                    standby: zero,
                    linear: losses.battery_cell.lambda(),
                    curvature: losses.battery_cell.gamma(),
                },
                BatteryModel::Linear(eff) => SiteLaw { standby: zero, linear: eff.loss_factor(), curvature: zero },
            };
        }
        let (params, linear_eff) = match (site, &form.converter_model) {
            (LossSite::PvDcdc, ConverterModel::Linear(l)) => (&losses.pv_dcdc, Some(l.pv_dcdc)),
            (LossSite::PvDcdc, ConverterModel::Convex) => (&losses.pv_dcdc, None),
            (LossSite::BatteryDcdcCharge | LossSite::BatteryDcdcDischarge, m) => (
                &losses.battery_dcdc,
                match m {
                    ConverterModel::Linear(l) => Some(l.battery_dcdc),
                    ConverterModel::Convex => None,
                },
            ),
            (_, m) => (
                &losses.inverter,
                match m {
                    ConverterModel::Linear(l) => Some(l.inverter),
                    ConverterModel::Convex => None,
                },
            ),
        };
        match linear_eff {
            Some(eff) => SiteLaw { standby: zero, linear: eff.loss_factor(), curvature: zero },
            None => SiteLaw {
                standby: if site.carries_standby() { params.a_tilde() } else { zero },
                linear: params.b(),
                curvature: params.c_tilde(),
            },
        }
    }

    /// Exact loss at `flow` for a component of size `rating`.
    pub fn exact(&self, flow: T, rating: T) -> T {
        self.standby * rating + self.linear * flow + self.quadratic(flow, rating)
    }

    /// Exact quadratic part, zero for an idle absent component.
    pub fn quadratic(&self, flow: T, rating: T) -> T {
        if self.curvature == T::zero() || flow == T::zero() {
            T::zero()
        } else {
            self.curvature * flow * flow / rating
        }
    }

    pub fn is_conic(&self) -> bool {
        self.curvature > T::zero()
    }
}
