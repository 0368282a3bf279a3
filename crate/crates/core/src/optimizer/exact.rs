//! Inverse component models under the exact quadratic losses.

use crate::loss_models::{BatteryLossParams, ConverterLossParams};
use crate::scalar::Real;

/// AC-side inverter power for DC-side input `p_gamma`, with the standby loss
/// paid on the DC side. `None` if the request exceeds what the inverter can
/// deliver.
pub fn inverter_output<T: Real>(p_gamma: T, p_nom: T, params: &ConverterLossParams<T>) -> Option<T> {
    let zero = T::zero();
    let one = T::one();
    let two = one + one;
    if p_nom <= zero {
        return if p_gamma.abs() <= T::lit(1e-12) { Some(zero) } else { None };
    }
    let r = p_gamma - params.a_tilde() * p_nom;
    let b = params.b();
    let k = params.c_tilde() / p_nom;
    let p = if r >= zero {
        // k·p² + (1 + b)·p = r
        if k == zero {
            r / (one + b)
        } else {
            two * r / ((one + b) + ((one + b) * (one + b) + two * two * k * r).sqrt())
        }
    } else {
        // import m ≥ 0 with k·m² − (1 − b)·m = r, smaller root
        let disc = (one - b) * (one - b) + two * two * k * r;
        if disc < zero {
            return None;
        }
        let m = -two * r / ((one - b) + disc.sqrt());
        -m
    };
    (p.abs() <= p_nom * (one + T::lit(1e-9))).then_some(p)
}

/// Cell charge and discharge powers that change the stored energy at rate
/// `de_per_h` (kW). `None` if no admissible power achieves it.
pub fn cell_power_for_rate<T: Real>(de_per_h: T, e_nom: T, params: &BatteryLossParams<T>) -> Option<(T, T)> {
    let zero = T::zero();
    let one = T::one();
    let two = one + one;
    if de_per_h == zero {
        return Some((zero, zero));
    }
    if e_nom <= zero {
        return None;
    }
    let lambda = params.lambda();
    let k = params.gamma() / e_nom;
    if de_per_h > zero {
        // (1 − λ)·pc − k·pc² = r, smaller root
        let disc = (one - lambda) * (one - lambda) - two * two * k * de_per_h;
        if disc < zero {
            return None;
        }
        let pc = two * de_per_h / ((one - lambda) + disc.sqrt());
        Some((pc, zero))
    } else {
        // (1 + λ)·pd + k·pd² = −r
        let r = -de_per_h;
        let disc = (one + lambda) * (one + lambda) + two * two * k * r;
        let pd = two * r / ((one + lambda) + disc.sqrt());
        Some((zero, pd))
    }
}

/// Converter loss with standby; zero for an absent idle converter.
pub fn converter_loss<T: Real>(p: T, p_nom: T, params: &ConverterLossParams<T>, standby: bool) -> T {
    let s = if standby { params.a_tilde() * p_nom } else { T::zero() };
    s + params.b() * p + params.quadratic_term(p, p_nom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss_models::defaults;

    #[test]
    fn inverter_inverse_matches_forward_model() {
        let inv = defaults::inverter::<f64>();
        let p_nom = 4.0;
        for &p in &[-3.5, -1.0, -0.01, 0.0, 0.2, 2.0, 3.9] {
            let (pos, neg) = if p >= 0.0 { (p, 0.0) } else { (0.0, -p) };
            let gamma = p + converter_loss(pos, p_nom, &inv, true) + converter_loss(neg, p_nom, &inv, false);
            let back = inverter_output(gamma, p_nom, &inv).unwrap();
            assert!((back - p).abs() < 1e-12, "{p} -> {back}");
        }
        assert!(inverter_output(-1e3, p_nom, &inv).is_none());
        assert_eq!(inverter_output(0.0, 0.0, &inv), Some(0.0));
        assert!(inverter_output(1.0, 0.0, &inv).is_none());
    }

    #[test]
    fn cell_inverse_matches_energy_change() {
        let cell = defaults::battery_cell::<f64>();
        let e = 5.0;
        for &r in &[-4.0, -0.5, 0.3, 2.0, 4.0] {
            let (pc, pd) = cell_power_for_rate(r, e, &cell).unwrap();
            let lc = cell.lambda() * pc + cell.quadratic_term(pc, e);
            let ld = cell.lambda() * pd + cell.quadratic_term(pd, e);
            assert!(((pc - lc) - (pd + ld) - r).abs() < 1e-12);
        }
        assert!(cell_power_for_rate(1e6, e, &cell).is_none());
        assert!(cell_power_for_rate(1.0, 0.0, &cell).is_none());
    }
}
