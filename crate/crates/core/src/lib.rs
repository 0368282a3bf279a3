//! Joint sizing and operation of a DC-coupled PV-battery household system as
//! a second-order cone program.
//!
//! The numeric core is generic over [`Real`]; the aliases at the crate root
//! fix it to `f64`.

pub mod analysis;
pub mod conic;
pub mod loss_models;
pub mod optimizer;
pub mod profiles;
pub mod scalar;
pub mod system_model;

pub use scalar::Real;

pub type Profile = profiles::Profile<f64>;
pub type BatteryLossParams = loss_models::BatteryLossParams<f64>;
pub type ConverterLossParams = loss_models::ConverterLossParams<f64>;
pub type LinearEfficiency = loss_models::LinearEfficiency<f64>;
pub type ConicProgram = conic::ConicProgram<f64>;
pub type ConicSolution = conic::ConicSolution<f64>;
pub type SolverSettings = conic::SolverSettings<f64>;
pub type CostParams = system_model::CostParams<f64>;
pub type LossParams = system_model::LossParams<f64>;
pub type FormulationSpec = system_model::FormulationSpec<f64>;
pub type LinearDefaults = system_model::LinearDefaults<f64>;
pub type Sizing = system_model::Sizing<f64>;
pub type Scenario = system_model::Scenario<f64>;
pub type OperationSchedule = system_model::OperationSchedule<f64>;
pub type SizingResult = optimizer::SizingResult<f64>;
pub type SlackReport = optimizer::SlackReport<f64>;
pub type OptimizeOptions = optimizer::OptimizeOptions<f64>;
pub type Kpis = analysis::Kpis<f64>;
pub type ComparisonRow = analysis::ComparisonRow<f64>;
