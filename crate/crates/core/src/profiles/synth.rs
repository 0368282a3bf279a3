//! Deterministic synthetic household load and PV profiles.
//!
//! PV follows a sinusoidal daylight envelope whose day length and amplitude
//! vary over the year, modulated by a random daily clearness index and
//! short-term cloud noise. Load is a base load with a morning and an evening
//! peak, higher in winter, with multiplicative noise. Both series are then
//! scaled so that their energy, extrapolated to a full year, hits the
//! requested annual targets. No attempt is made to model irradiance
//! transposition onto a tilted plane.

use std::f64::consts::PI;
use std::fmt::Display;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Profile, ProfileError, ProfileKind, PV_HARD_LIMIT};
use crate::scalar::flit;

pub const HOURS_PER_YEAR: f64 = 8760.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub steps: usize,
    pub dt_hours: f64,
    /// Annual household consumption in kWh.
    pub load_kwh: f64,
    /// Annual available PV yield in Wh/Wp.
    pub pv_wh_per_wp: f64,
    #[serde(default)]
    pub seed: u64,
    /// Day of year (0-based) at which the series starts.
    #[serde(default)]
    pub start_day: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            steps: 35040,
            dt_hours: 0.25,
            load_kwh: 2774.0,
            pv_wh_per_wp: 1020.0,
            seed: 0,
            start_day: 0.0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.steps == 0 {
            return Err(ProfileError::Empty);
        }
        if !(self.dt_hours.is_finite() && self.dt_hours > 0.0) {
            return Err(ProfileError::BadInterval(self.dt_hours));
        }
        for (name, v) in [("load_kwh", self.load_kwh), ("pv_wh_per_wp", self.pv_wh_per_wp)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ProfileError::InvalidSpec(format!(
                    "synthetic target {name} must be positive, got {v}"
                )));
            }
        }
        if !self.start_day.is_finite() {
            return Err(ProfileError::InvalidSpec("start_day must be finite".into()));
        }
        Ok(())
    }

    fn year_steps(&self) -> usize {
        (HOURS_PER_YEAR / self.dt_hours).round().max(1.0) as usize
    }

    /// Generates `(load, pv)`. Identical specs yield identical profiles.
    pub fn generate<T: Float + Display>(&self) -> Result<(Profile<T>, Profile<T>), ProfileError> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        // scale on at least a full year so short windows keep their seasonal share
        let total = self.steps.max(self.year_steps());
        let mut load = Vec::with_capacity(total);
        let mut pv = Vec::with_capacity(total);

        let mut day_index = i64::MIN;
        let mut clearness = 1.0;
        let mut day_level = 1.0;
        let mut cloud = 0.0f64;
        for t in 0..total {
            let hours = self.start_day * 24.0 + (t as f64 + 0.5) * self.dt_hours;
            let day = (hours / 24.0).floor();
            let hour = hours - day * 24.0;
            let season = (2.0 * PI * (day + 10.0) / 365.0).cos(); // +1 near the winter solstice
            if day as i64 != day_index {
                day_index = day as i64;
                // clear days dominate in summer, overcast ones in winter
                let p_clear = 0.4 - 0.2 * season;
                let p_overcast = 0.3 + 0.2 * season;
                let u: f64 = rng.gen();
                clearness = if u < p_clear {
                    rng.gen_range(0.85..1.0)
                } else if u < 1.0 - p_overcast {
                    rng.gen_range(0.4..0.85)
                } else {
                    rng.gen_range(0.05..0.3)
                };
                day_level = rng.gen_range(0.8..1.2);
            }

            // PV: daylight bell between sunrise and sunset
            let day_length = 12.0 - 4.0 * season;
            let sunrise = 12.0 - day_length / 2.0;
            let x = (hour - sunrise) / day_length;
            let clear_sky = if (0.0..=1.0).contains(&x) {
                (1.0 - 0.55 * season) * (PI * x).sin().powf(1.3)
            } else {
                0.0
            };
            cloud = 0.7 * cloud + 0.3 * rng.gen_range(-1.0..1.0);
            let variability = (1.0 - clearness) * 0.6;
            let factor = (clearness + variability * cloud).clamp(0.03, 1.0);
            pv.push(clear_sky * factor);

            // load: base + morning and evening peaks, more in winter
            let morning = 600.0 * (-0.5 * ((hour - 7.5) / 1.0).powi(2)).exp();
            let evening = 900.0 * (-0.5 * ((hour - 19.0) / 1.6).powi(2)).exp();
            let midday = 150.0 * (-0.5 * ((hour - 13.0) / 2.0).powi(2)).exp();
            let base = 180.0 * (1.0 + 0.25 * season);
            let noise = rng.gen_range(0.7..1.3);
            load.push((base + (morning + evening + midday) * day_level) * noise);
        }

        let years = total as f64 * self.dt_hours / HOURS_PER_YEAR;
        scale_to(&mut load, self.load_kwh * 1000.0 * years, self.dt_hours)?;
        scale_to(&mut pv, self.pv_wh_per_wp * years, self.dt_hours)?;
        load.truncate(self.steps);
        pv.truncate(self.steps);
        if pv.iter().all(|&v| v <= 0.0) {
            return Err(ProfileError::InvalidSpec(
                "synthetic PV window contains no daylight".into(),
            ));
        }
        if let Some((row, &max)) = pv.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) {
            if max > PV_HARD_LIMIT {
                return Err(ProfileError::PvTooHigh { row: row + 1, value: max });
            }
        }

        let label = format!("synthetic day {}", self.start_day);
        let convert = |v: Vec<f64>| v.into_iter().map(flit::<T>).collect::<Vec<T>>();
        let dt = flit::<T>(self.dt_hours);
        let load = Profile::new(ProfileKind::Load, convert(load), dt)?.with_start_label(label.clone());
        let pv = Profile::new(ProfileKind::PvNormalized, convert(pv), dt)?.with_start_label(label);
        Ok((load, pv))
    }
}

fn scale_to(values: &mut [f64], target: f64, dt: f64) -> Result<(), ProfileError> {
    let energy: f64 = values.iter().map(|v| v * dt).sum();
    if energy <= 0.0 {
        return Err(ProfileError::InvalidSpec(
            "synthetic profile contains no energy to scale".into(),
        ));
    }
    let k = target / energy;
    values.iter_mut().for_each(|v| *v *= k);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn year_matches_targets() {
        let spec = SynthSpec::default();
        let (load, pv) = spec.generate::<f64>().unwrap();
        assert_eq!(load.len(), 35040);
        let load_kwh = load.annual_energy() / 1000.0;
        let pv_wh = pv.annual_energy();
        assert!((load_kwh - 2774.0).abs() / 2774.0 < 1e-3, "{load_kwh}");
        assert!((pv_wh - 1020.0).abs() / 1020.0 < 1e-3, "{pv_wh}");
        let peak = pv.values().iter().copied().fold(0.0, f64::max);
        assert!(peak > 0.5 && peak <= 1.0, "peak {peak}");
    }

    #[test]
    fn week_is_annualized() {
        let spec = SynthSpec { steps: 672, dt_hours: 0.25, start_day: 80.0, ..SynthSpec::default() };
        let (load, pv) = spec.generate::<f64>().unwrap();
        assert_eq!(load.len(), 672);
        let frac = 168.0 / 8760.0;
        let load_kwh = load.annual_energy() / frac / 1000.0;
        let pv_wh = pv.annual_energy() / frac;
        assert!(load_kwh > 0.7 * 2774.0 && load_kwh < 1.3 * 2774.0, "{load_kwh}");
        assert!(pv_wh > 0.5 * 1020.0 && pv_wh < 1.5 * 1020.0, "{pv_wh}");
    }

    #[test]
    fn window_is_a_slice_of_the_year() {
        let year = SynthSpec { dt_hours: 1.0, steps: 8760, ..SynthSpec::default() };
        let week = SynthSpec { steps: 168, ..year.clone() };
        let (yl, yp) = year.generate::<f64>().unwrap();
        let (wl, wp) = week.generate::<f64>().unwrap();
        assert_eq!(&yl.values()[..168], wl.values());
        assert_eq!(&yp.values()[..168], wp.values());
    }

    #[test]
    fn deterministic() {
        let spec = SynthSpec { steps: 96, ..SynthSpec::default() };
        assert_eq!(spec.generate::<f64>().unwrap(), spec.generate::<f64>().unwrap());
        let other = SynthSpec { seed: 1, ..spec.clone() };
        assert_ne!(spec.generate::<f64>().unwrap().0, other.generate::<f64>().unwrap().0);
    }

    #[test]
    fn rejects_bad_targets() {
        assert!(SynthSpec { load_kwh: 0.0, ..SynthSpec::default() }.generate::<f64>().is_err());
        assert!(SynthSpec { pv_wh_per_wp: -1.0, ..SynthSpec::default() }.generate::<f64>().is_err());
        assert!(SynthSpec { steps: 0, ..SynthSpec::default() }.generate::<f64>().is_err());
    }

    #[test]
    fn night_only_window_is_an_error() {
        let spec = SynthSpec { steps: 4, dt_hours: 0.25, ..SynthSpec::default() };
        assert!(spec.generate::<f64>().is_err());
    }
}
