//! Battery and converter loss models.
//!
//! Battery cell: `loss = λ·P + γ·P²/E_nom`, derived from a linear fit of
//! efficiency against C-rate, `η(C) = α + β·C` with `C = P·T_s/E_nom`.
//! Hence `λ = 1 − α` and `γ = −β·T_s`.
//!
//! Converter: `loss = P_nom·ã + b·P + c̃·P²/P_nom`, obtained by placing a
//! converter with fitted coefficients `(a, b, c)` at rating `P_nom_og` in
//! parallel `P_nom/P_nom_og` times: `ã = a/P_nom_og`, `c̃ = c·P_nom_og`.
//!
//! All loss functions are unit-agnostic as long as powers and energies use a
//! consistent pair (W/Wh or kW/kWh).

use std::fmt::Display;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::flit;

/// Relative overshoot of a converter rating tolerated without a warning.
pub const RATING_OVERSHOOT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossModelError {
    #[error("insufficient distinct C-rates: need at least 2, got {0}")]
    InsufficientPoints(usize),
    #[error("efficiency {0} out of range (0, 1]")]
    EfficiencyOutOfRange(f64),
    #[error("non-finite fit point")]
    NonFinitePoint,
    #[error("battery efficiency slope beta must be negative, got {0}")]
    NonNegativeSlope(f64),
    #[error("battery efficiency intercept alpha must lie in (0, 1], got {0}")]
    InterceptOutOfRange(f64),
    #[error("sample frequency ts_hours must be positive, got {0}")]
    BadSampleTime(f64),
    #[error("rated battery energy must be positive, got {0}")]
    NonPositiveEnergy(f64),
    #[error("power must be non-negative, got {0}")]
    NegativePower(f64),
    #[error("converter rated at 0 cannot carry {0}")]
    ZeroRatingWithFlow(f64),
    #[error("invalid converter parameters: {0}")]
    InvalidConverter(String),
}

fn f64_of<T: Float>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Ordinary least-squares fit of `η = α + β·C` to `(c_rate, efficiency)`
/// points. Returns `(α, β)`.
pub fn fit_battery_efficiency<T: Float>(points: &[(T, T)]) -> Result<(T, T), LossModelError> {
    for &(c, eta) in points {
        if !c.is_finite() || !eta.is_finite() {
            return Err(LossModelError::NonFinitePoint);
        }
        if eta <= T::zero() || eta > T::one() {
            return Err(LossModelError::EfficiencyOutOfRange(f64_of(eta)));
        }
    }
    let mut distinct: Vec<T> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(LossModelError::InsufficientPoints(distinct.len()));
    }
    let n = flit::<T>(points.len() as f64);
    let mean_c = points.iter().fold(T::zero(), |s, p| s + p.0) / n;
    let mean_eta = points.iter().fold(T::zero(), |s, p| s + p.1) / n;
    let (sxy, sxx) = points.iter().fold((T::zero(), T::zero()), |(sxy, sxx), &(c, eta)| {
        let dc = c - mean_c;
        (sxy + dc * (eta - mean_eta), sxx + dc * dc)
    });
    let beta = sxy / sxx;
    Ok((mean_eta - beta * mean_c, beta))
}

/// Battery cell loss coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BatteryFit<T>", into = "BatteryFit<T>")]
#[serde(bound(
    serialize = "T: Float + Serialize",
    deserialize = "T: Float + Display + Deserialize<'de>"
))]
pub struct BatteryLossParams<T> {
    alpha: T,
    beta: T,
    ts_hours: T,
    lambda: T,
    gamma: T,
}

/// Serialized form: the fitted line and the C-rate time base.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryFit<T> {
    pub alpha: T,
    pub beta: T,
    pub ts_hours: T,
}

impl<T: Float + Display> TryFrom<BatteryFit<T>> for BatteryLossParams<T> {
    type Error = LossModelError;
    fn try_from(f: BatteryFit<T>) -> Result<Self, Self::Error> {
        derive_battery_loss_params(f.alpha, f.beta, f.ts_hours)
    }
}

impl<T: Float> From<BatteryLossParams<T>> for BatteryFit<T> {
    fn from(p: BatteryLossParams<T>) -> Self {
        BatteryFit { alpha: p.alpha, beta: p.beta, ts_hours: p.ts_hours }
    }
}

/// `λ = 1 − α`, `γ = −β·T_s`.
pub fn derive_battery_loss_params<T: Float>(
    alpha: T,
    beta: T,
    ts_hours: T,
) -> Result<BatteryLossParams<T>, LossModelError> {
    if !(alpha > T::zero() && alpha <= T::one()) {
        return Err(LossModelError::InterceptOutOfRange(f64_of(alpha)));
    }
    if !(beta < T::zero()) {
        return Err(LossModelError::NonNegativeSlope(f64_of(beta)));
    }
    if !(ts_hours > T::zero() && ts_hours.is_finite()) {
        return Err(LossModelError::BadSampleTime(f64_of(ts_hours)));
    }
    Ok(BatteryLossParams { alpha, beta, ts_hours, lambda: T::one() - alpha, gamma: -beta * ts_hours })
}

impl<T: Float> BatteryLossParams<T> {
    /// A loss-free cell (`α = 1`, `β = 0`), outside the fitted-model domain.
    pub fn lossless(ts_hours: T) -> Self {
        BatteryLossParams {
            alpha: T::one(),
            beta: T::zero(),
            ts_hours,
            lambda: T::zero(),
            gamma: T::zero(),
        }
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }
    pub fn beta(&self) -> T {
        self.beta
    }
    pub fn ts_hours(&self) -> T {
        self.ts_hours
    }
    pub fn lambda(&self) -> T {
        self.lambda
    }
    pub fn gamma(&self) -> T {
        self.gamma
    }

    /// Fitted efficiency at a C-rate.
    pub fn efficiency_at_c_rate(&self, c_rate: T) -> T {
        self.alpha + self.beta * c_rate
    }

    /// Highest efficiency of the model, reached as the C-rate tends to 0.
    pub fn best_point_efficiency(&self) -> T {
        self.alpha
    }

    /// `γ·P²/E_nom`, treating an absent battery (`E_nom = 0`) with no flow as
    /// lossless.
    pub fn quadratic_term(&self, p: T, e_nom: T) -> T {
        if p == T::zero() || self.gamma == T::zero() {
            T::zero()
        } else {
            self.gamma * p * p / e_nom
        }
    }
}

/// Exact battery loss `λ·P + γ·P²/E_nom`, used for both charge and discharge.
pub fn battery_loss_exact<T: Float>(
    p: T,
    e_nom: T,
    params: &BatteryLossParams<T>,
) -> Result<T, LossModelError> {
    if !(e_nom > T::zero()) {
        return Err(LossModelError::NonPositiveEnergy(f64_of(e_nom)));
    }
    if p < T::zero() {
        return Err(LossModelError::NegativePower(f64_of(p)));
    }
    Ok(params.lambda * p + params.gamma * p * p / e_nom)
}

/// Converter loss coefficients at the original rating and their per-rating
/// transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConverterFit<T>", into = "ConverterFit<T>")]
#[serde(bound(
    serialize = "T: Float + Serialize",
    deserialize = "T: Float + Display + Deserialize<'de>"
))]
pub struct ConverterLossParams<T> {
    a: T,
    b: T,
    c: T,
    p_nom_og: T,
    a_tilde: T,
    c_tilde: T,
}

/// Serialized form: fitted `(a, b, c)` at rating `p_nom_og` (W, -, 1/W, W).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConverterFit<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub p_nom_og: T,
}

impl<T: Float + Display> TryFrom<ConverterFit<T>> for ConverterLossParams<T> {
    type Error = LossModelError;
    fn try_from(f: ConverterFit<T>) -> Result<Self, Self::Error> {
        ConverterLossParams::new(f.a, f.b, f.c, f.p_nom_og)
    }
}

impl<T: Float> From<ConverterLossParams<T>> for ConverterFit<T> {
    fn from(p: ConverterLossParams<T>) -> Self {
        ConverterFit { a: p.a, b: p.b, c: p.c, p_nom_og: p.p_nom_og }
    }
}

impl<T: Float + Display> ConverterLossParams<T> {
    pub fn new(a: T, b: T, c: T, p_nom_og: T) -> Result<Self, LossModelError> {
        let bad = |msg: String| Err(LossModelError::InvalidConverter(msg));
        if !(p_nom_og > T::zero() && p_nom_og.is_finite()) {
            return bad(format!("p_nom_og must be positive, got {p_nom_og}"));
        }
        if !(a >= T::zero() && a.is_finite()) {
            return bad(format!("a must be non-negative, got {a}"));
        }
        if !(b >= T::zero() && b < T::one()) {
            return bad(format!("b must lie in [0, 1), got {b}"));
        }
        if !(c > T::zero() && c.is_finite()) {
            return bad(format!("c must be positive, got {c}"));
        }
        Ok(Self::from_parts(a, b, c, p_nom_og))
    }
}

impl<T: Float> ConverterLossParams<T> {
    fn from_parts(a: T, b: T, c: T, p_nom_og: T) -> Self {
        ConverterLossParams { a, b, c, p_nom_og, a_tilde: a / p_nom_og, c_tilde: c * p_nom_og }
    }

    /// A loss-free converter, outside the fitted-model domain.
    pub fn lossless(p_nom_og: T) -> Self {
        Self::from_parts(T::zero(), T::zero(), T::zero(), p_nom_og)
    }

    pub fn a(&self) -> T {
        self.a
    }
    pub fn b(&self) -> T {
        self.b
    }
    pub fn c(&self) -> T {
        self.c
    }
    pub fn p_nom_og(&self) -> T {
        self.p_nom_og
    }
    pub fn a_tilde(&self) -> T {
        self.a_tilde
    }
    pub fn c_tilde(&self) -> T {
        self.c_tilde
    }

    /// Standby plus linear part, `P_nom·ã + b·P`.
    pub fn linear_term(&self, p: T, p_nom: T) -> T {
        p_nom * self.a_tilde + self.b * p
    }

    /// `c̃·P²/P_nom`, zero for an absent converter carrying no flow.
    pub fn quadratic_term(&self, p: T, p_nom: T) -> T {
        if p == T::zero() || self.c_tilde == T::zero() {
            T::zero()
        } else {
            self.c_tilde * p * p / p_nom
        }
    }

    /// Efficiency `1 − loss/P` at a load fraction `x = P/P_nom`.
    pub fn efficiency_at_load(&self, x: T) -> T {
        T::one() - (self.a_tilde / x + self.b + self.c_tilde * x)
    }

    /// Load fraction in `(0, 1]` with the highest efficiency.
    pub fn best_load_fraction(&self) -> T {
        if self.c_tilde == T::zero() {
            T::one()
        } else {
            (self.a_tilde / self.c_tilde).sqrt().min(T::one()).max(T::epsilon())
        }
    }

    /// Peak efficiency over loads up to the rating. A constant efficiency no
    /// higher than this is dominated by the quadratic model at every load.
    pub fn best_point_efficiency(&self) -> T {
        self.efficiency_at_load(self.best_load_fraction())
    }

    pub fn efficiency_at_rated(&self) -> T {
        self.efficiency_at_load(T::one())
    }
}

/// Exact converter loss `P_nom·ã + b·P + c̃·P²/P_nom`.
pub fn converter_loss_exact<T: Float + Display>(
    p: T,
    p_nom: T,
    params: &ConverterLossParams<T>,
) -> Result<T, LossModelError> {
    if p < T::zero() {
        return Err(LossModelError::NegativePower(f64_of(p)));
    }
    if p_nom < T::zero() {
        return Err(LossModelError::NegativePower(f64_of(p_nom)));
    }
    if p_nom == T::zero() {
        return if p == T::zero() { Ok(T::zero()) } else { Err(LossModelError::ZeroRatingWithFlow(f64_of(p))) };
    }
    if p > p_nom * (T::one() + flit(RATING_OVERSHOOT_TOL)) {
        log::warn!("converter operated at {p} above its rating {p_nom}");
    }
    Ok(params.linear_term(p, p_nom) + params.quadratic_term(p, p_nom))
}

/// Constant efficiency, `0 < η ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EfficiencyValue<T>", into = "EfficiencyValue<T>")]
#[serde(bound(
    serialize = "T: Float + Serialize",
    deserialize = "T: Float + Display + Deserialize<'de>"
))]
pub struct LinearEfficiency<T> {
    eta: T,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencyValue<T> {
    pub eta: T,
}

impl<T: Float + Display> TryFrom<EfficiencyValue<T>> for LinearEfficiency<T> {
    type Error = LossModelError;
    fn try_from(v: EfficiencyValue<T>) -> Result<Self, Self::Error> {
        LinearEfficiency::new(v.eta)
    }
}

impl<T: Float> From<LinearEfficiency<T>> for EfficiencyValue<T> {
    fn from(e: LinearEfficiency<T>) -> Self {
        EfficiencyValue { eta: e.eta }
    }
}

impl<T: Float> LinearEfficiency<T> {
    pub fn new(eta: T) -> Result<Self, LossModelError> {
        if eta > T::zero() && eta <= T::one() {
            Ok(LinearEfficiency { eta })
        } else {
            Err(LossModelError::EfficiencyOutOfRange(f64_of(eta)))
        }
    }

    pub fn lossless() -> Self {
        LinearEfficiency { eta: T::one() }
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    /// Loss per unit of throughput, `1 − η`.
    pub fn loss_factor(&self) -> T {
        T::one() - self.eta
    }
}

/// `(1 − η)·P`.
pub fn converter_loss_linear<T: Float>(p: T, eff: &LinearEfficiency<T>) -> T {
    eff.loss_factor() * p
}

/// Constant-efficiency battery loss `(1 − η)·P`, used by the linear battery
/// formulation.
pub fn battery_loss_linear<T: Float>(p: T, eff: &LinearEfficiency<T>) -> T {
    eff.loss_factor() * p
}

/// Representative parameter sets. These are placeholders chosen to give peak
/// efficiencies typical of residential hardware (roughly 96-98 % for the
/// converters); replace them with measured fits where available.
pub mod defaults {
    use super::*;

    /// PV string DC/DC converter: peak efficiency about 97.8 % near 41 % load.
    pub fn pv_dcdc<T: Float>() -> ConverterLossParams<T> {
        ConverterLossParams::from_parts(flit(10.0), flit(0.012), flit(0.012 / 5000.0), flit(5000.0))
    }

    /// Battery DC/DC converter: peak efficiency about 97.5 % near 45 % load.
    pub fn battery_dcdc<T: Float>() -> ConverterLossParams<T> {
        ConverterLossParams::from_parts(flit(9.0), flit(0.012), flit(0.015 / 3000.0), flit(3000.0))
    }

    /// Grid inverter: peak efficiency about 96.8 % at half load.
    pub fn inverter<T: Float>() -> ConverterLossParams<T> {
        ConverterLossParams::from_parts(flit(25.0), flit(0.012), flit(0.02 / 5000.0), flit(5000.0))
    }

    /// Li-ion cell: 99 % at vanishing C-rate, 96 % at 1C.
    pub fn battery_cell<T: Float>() -> BatteryLossParams<T> {
        derive_battery_loss_params(flit(0.99), flit(-0.03), T::one()).expect("valid defaults")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    fn conv(a_tilde: f64, b: f64, c_tilde: f64) -> ConverterLossParams<f64> {
        let p_og = 1000.0;
        ConverterLossParams::new(a_tilde * p_og, b, c_tilde / p_og, p_og).unwrap()
    }

    #[test]
    fn two_point_fit_is_exact() {
        let (a, b) = fit_battery_efficiency(&[(0.0, 0.99), (1.0, 0.97)]).unwrap();
        assert!(close(a, 0.99, 1e-15));
        assert!(close(b, -0.02, 1e-12));
    }

    #[test]
    fn duplicated_point_fit() {
        // two identical points weigh the same as one for the line through them
        let (a, b) = fit_battery_efficiency(&[(0.5, 0.98), (0.5, 0.98), (1.0, 0.96)]).unwrap();
        assert!(close(a, 1.00, 1e-12), "{a}");
        assert!(close(b, -0.04, 1e-12), "{b}");
    }

    #[test]
    fn fit_needs_two_distinct_rates() {
        assert_eq!(
            fit_battery_efficiency(&[(0.0, 0.99)]).unwrap_err().to_string(),
            "insufficient distinct C-rates: need at least 2, got 1"
        );
        assert!(fit_battery_efficiency(&[(0.5, 0.99), (0.5, 0.98)]).is_err());
        assert!(matches!(
            fit_battery_efficiency(&[(0.0, 1.2), (1.0, 0.9)]),
            Err(LossModelError::EfficiencyOutOfRange(_))
        ));
        assert!(fit_battery_efficiency(&[(0.0, 0.0), (1.0, 0.9)]).is_err());
    }

    #[test]
    fn derive_params() {
        let p = derive_battery_loss_params(0.99, -0.02, 1.0).unwrap();
        assert!(close(p.lambda(), 0.01, 1e-12));
        assert!(close(p.gamma(), 0.02, 1e-15));
        let p = derive_battery_loss_params(1.0, -0.04, 0.25).unwrap();
        assert_eq!(p.lambda(), 0.0);
        assert!(close(p.gamma(), 0.01, 1e-15));
        assert!(matches!(derive_battery_loss_params(0.99, 0.01, 1.0), Err(LossModelError::NonNegativeSlope(_))));
        assert!(derive_battery_loss_params(0.99, 0.0, 1.0).is_err());
        assert!(derive_battery_loss_params(0.0, -0.01, 1.0).is_err());
        assert!(derive_battery_loss_params(1.01, -0.01, 1.0).is_err());
        assert!(derive_battery_loss_params(0.99, -0.01, 0.0).is_err());
    }

    #[test]
    fn battery_exact_values() {
        let p = BatteryLossParams { alpha: 0.98, beta: -0.005, ts_hours: 1.0, lambda: 0.02, gamma: 0.005 };
        assert_eq!(battery_loss_exact(0.0, 5000.0, &p).unwrap(), 0.0);
        assert!(close(battery_loss_exact(1000.0, 5000.0, &p).unwrap(), 21.0, 1e-14));
        assert!(battery_loss_exact(1.0, 0.0, &p).is_err());
        assert!(battery_loss_exact(1.0, -1.0, &p).is_err());
        let no_lin = BatteryLossParams { lambda: 0.0, ..p };
        let l1 = battery_loss_exact(1000.0, 5000.0, &no_lin).unwrap();
        let l2 = battery_loss_exact(2000.0, 10000.0, &no_lin).unwrap();
        assert!(close(l2, 2.0 * l1, 1e-14));
    }

    #[test]
    fn converter_exact_values() {
        let params = conv(0.01, 0.01, 0.02);
        assert!(close(converter_loss_exact(0.0, 1000.0, &params).unwrap(), 10.0, 1e-14));
        assert!(close(converter_loss_exact(1000.0, 1000.0, &params).unwrap(), 40.0, 1e-14));
        let l1 = converter_loss_exact(500.0, 1000.0, &params).unwrap();
        let l2 = converter_loss_exact(1000.0, 2000.0, &params).unwrap();
        assert!(close(l2, 2.0 * l1, 1e-12));
    }

    #[test]
    fn converter_zero_rating() {
        let params = conv(0.01, 0.01, 0.02);
        assert_eq!(converter_loss_exact(0.0, 0.0, &params).unwrap(), 0.0);
        assert!(matches!(converter_loss_exact(1.0, 0.0, &params), Err(LossModelError::ZeroRatingWithFlow(_))));
        assert!(converter_loss_exact(-1.0, 10.0, &params).is_err());
        // overshoot still evaluates
        assert!(converter_loss_exact(1100.0, 1000.0, &params).is_ok());
    }

    #[test]
    fn converter_param_validation() {
        assert!(ConverterLossParams::new(1.0, 0.01, 1e-5, 0.0).is_err());
        assert!(ConverterLossParams::new(-1.0, 0.01, 1e-5, 1000.0).is_err());
        assert!(ConverterLossParams::new(1.0, 1.0, 1e-5, 1000.0).is_err());
        assert!(ConverterLossParams::new(1.0, 0.01, 0.0, 1000.0).is_err());
        let p = ConverterLossParams::new(10.0, 0.01, 2e-5, 1000.0).unwrap();
        assert_eq!(p.a_tilde() * p.p_nom_og(), p.a());
        assert_eq!(p.c_tilde() / p.p_nom_og(), p.c());
    }

    #[test]
    fn linear_losses() {
        let e = LinearEfficiency::new(0.95).unwrap();
        assert!(close(converter_loss_linear(1000.0, &e), 50.0, 1e-12));
        assert_eq!(converter_loss_linear(0.0, &e), 0.0);
        let one = LinearEfficiency::new(1.0).unwrap();
        assert_eq!(converter_loss_linear(1234.0, &one), 0.0);
        let b = LinearEfficiency::new(0.96).unwrap();
        assert!(close(battery_loss_linear(2000.0, &b), 80.0, 1e-12));
        assert_eq!(battery_loss_linear(0.0, &b), 0.0);
        assert_eq!(battery_loss_linear(5.0, &one), 0.0);
        assert!(LinearEfficiency::new(0.0).is_err());
        assert!(LinearEfficiency::new(1.0001).is_err());
    }

    #[test]
    fn defaults_peak_efficiency_is_residential() {
        for p in [defaults::pv_dcdc::<f64>(), defaults::battery_dcdc(), defaults::inverter()] {
            let eta = p.best_point_efficiency();
            assert!((0.94..=0.98).contains(&eta), "{eta}");
            assert!(p.efficiency_at_rated() <= eta);
            // round-trips through validation
            assert_eq!(ConverterLossParams::new(p.a(), p.b(), p.c(), p.p_nom_og()).unwrap(), p);
        }
        let cell = defaults::battery_cell::<f64>();
        assert!(close(cell.efficiency_at_c_rate(1.0), 0.96, 1e-12));
    }

    #[test]
    fn serde_field_names() {
        let v = serde_json::to_value(defaults::inverter::<f64>()).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["a", "b", "c", "p_nom_og"]);
        let v = serde_json::to_value(defaults::battery_cell::<f64>()).unwrap();
        assert_eq!(v, serde_json::json!({"alpha": 0.99, "beta": -0.03, "ts_hours": 1.0}));
        let e: LinearEfficiency<f64> = serde_json::from_str(r#"{"eta": 0.95}"#).unwrap();
        assert_eq!(e.eta(), 0.95);
        assert!(serde_json::from_str::<LinearEfficiency<f64>>(r#"{"eta": 1.5}"#).is_err());
        assert!(serde_json::from_str::<BatteryLossParams<f64>>(r#"{"alpha": 0.99, "beta": 0.01, "ts_hours": 1}"#).is_err());
    }

    proptest! {
        #[test]
        fn parallel_scaling(p in 0.0f64..5000.0, p_nom in 1.0f64..5000.0, k in 0.01f64..100.0) {
            let params = defaults::inverter::<f64>();
            let base = converter_loss_exact(p, p_nom, &params).unwrap();
            let scaled = converter_loss_exact(k * p, k * p_nom, &params).unwrap();
            prop_assert!(close(scaled, k * base, 1e-12));
        }

        #[test]
        fn converter_loss_is_convex(p_nom in 10.0f64..5000.0, h_frac in 1e-3f64..0.05) {
            let params = defaults::pv_dcdc::<f64>();
            let h = h_frac * p_nom;
            let mut p = h;
            while p + h <= p_nom {
                let f = |x| converter_loss_exact(x, p_nom, &params).unwrap();
                let second = f(p + h) - 2.0 * f(p) + f(p - h);
                prop_assert!(second >= -1e-9 * f(p));
                p += h;
            }
        }

        #[test]
        fn battery_loss_fraction_increases(p1 in 1.0f64..5000.0, dp in 1.0f64..5000.0, e in 100.0f64..20000.0) {
            let params = defaults::battery_cell::<f64>();
            let r1 = battery_loss_exact(p1, e, &params).unwrap() / p1;
            let r2 = battery_loss_exact(p1 + dp, e, &params).unwrap() / (p1 + dp);
            prop_assert!(r2 > r1);
        }

        #[test]
        fn derive_reproduces_fitted_efficiency(alpha in 0.8f64..1.0, beta in -0.1f64..-1e-4, ts in 0.1f64..2.0, c in 0.01f64..3.0, e in 100.0f64..20000.0) {
            let params = derive_battery_loss_params(alpha, beta, ts).unwrap();
            let p = c * e / ts;
            let eta = 1.0 - battery_loss_exact(p, e, &params).unwrap() / p;
            prop_assert!(close(eta, alpha + beta * c, 1e-12));
        }

        #[test]
        fn fit_recovers_line(alpha in 0.8f64..1.0, beta in -0.1f64..-1e-4, rates in prop::collection::vec(0.0f64..2.0, 2..10)) {
            let mut pts: Vec<(f64, f64)> = rates.iter().map(|&c| (c, alpha + beta * c)).collect();
            pts.push((2.5, alpha + beta * 2.5));
            pts.push((0.0, alpha));
            let (a, b) = fit_battery_efficiency(&pts).unwrap();
            prop_assert!((a - alpha).abs() <= 1e-10);
            prop_assert!((b - beta).abs() <= 1e-10);
        }

        #[test]
        fn best_point_dominates(x in 0.001f64..1.0) {
            for params in [defaults::pv_dcdc::<f64>(), defaults::battery_dcdc(), defaults::inverter()] {
                prop_assert!(params.efficiency_at_load(x) <= params.best_point_efficiency() + 1e-15);
            }
        }
    }
}
