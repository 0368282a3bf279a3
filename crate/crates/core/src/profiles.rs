//! Load and PV time series: parsing, validation, resampling and energy totals.

use std::fmt::Display;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::flit;

pub mod synth;

/// PV samples above this value (W/Wp) are rejected outright.
pub const PV_HARD_LIMIT: f64 = 1.5;
/// PV samples above this value (W/Wp) are accepted with a warning.
pub const PV_WARN_LIMIT: f64 = 1.0;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("failed to read profile {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("cannot parse sample at row {row}: {text:?}")]
    Parse { row: usize, text: String },
    #[error("negative sample at row {row}")]
    Negative { row: usize },
    #[error("non-finite sample at row {row}")]
    NonFinite { row: usize },
    #[error("PV sample {value} W/Wp at row {row} exceeds {PV_HARD_LIMIT} W/Wp")]
    PvTooHigh { row: usize, value: f64 },
    #[error("profile is empty")]
    Empty,
    #[error("sample interval must be positive and finite, got {0}")]
    BadInterval(f64),
    #[error("resample factor must be positive, got {0}")]
    ZeroFactor(usize),
    #[error("profile length {len} is not divisible by resample factor {factor}")]
    NotDivisible { len: usize, factor: usize },
    #[error("profiles are misaligned: {0}")]
    Misaligned(String),
    #[error("invalid synthetic profile spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// Household consumption in W.
    Load,
    /// PV output per installed peak power, in W/Wp.
    PvNormalized,
}

impl ProfileKind {
    fn column_name(self) -> &'static str {
        match self {
            ProfileKind::Load => "load_w",
            ProfileKind::PvNormalized => "pv_w_per_wp",
        }
    }
}

/// Fixed-resolution time series. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<T> {
    kind: ProfileKind,
    values: Vec<T>,
    dt_hours: T,
    start_label: Option<String>,
}

impl<T: Float + Display> Profile<T> {
    /// Validates and wraps `values`. Row numbers in errors are 1-based sample
    /// positions.
    pub fn new(kind: ProfileKind, values: Vec<T>, dt_hours: T) -> Result<Self, ProfileError> {
        if !(dt_hours.is_finite() && dt_hours > T::zero()) {
            return Err(ProfileError::BadInterval(dt_hours.to_f64().unwrap_or(f64::NAN)));
        }
        if values.is_empty() {
            return Err(ProfileError::Empty);
        }
        let mut warned = false;
        for (i, &v) in values.iter().enumerate() {
            validate_sample(kind, v, i + 1, &mut warned)?;
        }
        Ok(Profile { kind, values, dt_hours, start_label: None })
    }

    pub fn with_start_label(mut self, label: impl Into<String>) -> Self {
        self.start_label = Some(label.into());
        self
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dt_hours(&self) -> T {
        self.dt_hours
    }

    pub fn start_label(&self) -> Option<&str> {
        self.start_label.as_deref()
    }

    /// Total span in hours.
    pub fn span_hours(&self) -> T {
        flit::<T>(self.values.len() as f64) * self.dt_hours
    }

    /// `Σ value·dt`: Wh for load profiles, Wh/Wp for PV profiles.
    pub fn annual_energy(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, &v| acc + v * self.dt_hours)
    }

    /// Averages consecutive blocks of `factor` samples.
    pub fn resample_average(&self, factor: usize) -> Result<Self, ProfileError> {
        if factor == 0 {
            return Err(ProfileError::ZeroFactor(factor));
        }
        if self.values.len() % factor != 0 {
            return Err(ProfileError::NotDivisible { len: self.values.len(), factor });
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let k = flit::<T>(factor as f64);
        let values = self
            .values
            .chunks_exact(factor)
            .map(|block| block.iter().fold(T::zero(), |acc, &v| acc + v) / k)
            .collect();
        Ok(Profile {
            kind: self.kind,
            values,
            dt_hours: self.dt_hours * k,
            start_label: self.start_label.clone(),
        })
    }

    /// Writes the single-column CSV form, with a header naming the unit.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.kind.column_name())?;
        for v in &self.values {
            writeln!(out, "{v}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), ProfileError> {
        let path = path.as_ref();
        let io_err = |source| ProfileError::Io { path: path.display().to_string(), source };
        let file = fs::File::create(path).map_err(io_err)?;
        let mut buf = io::BufWriter::new(file);
        self.write_csv(&mut buf).map_err(io_err)?;
        buf.flush().map_err(io_err)
    }
}

impl<T: Float + Display + FromStr> Profile<T> {
    /// Parses single-column CSV text. The first line may be a non-numeric
    /// header; blank lines are skipped. Rows in errors are 1-based file lines.
    pub fn parse_csv(text: &str, kind: ProfileKind, dt_hours: T) -> Result<Self, ProfileError> {
        let mut values = Vec::new();
        let mut warned = false;
        for (idx, line) in text.lines().enumerate() {
            let row = idx + 1;
            let field = line.trim().trim_end_matches(',').trim();
            if field.is_empty() {
                continue;
            }
            let field = field.trim_matches('"');
            match field.parse::<T>() {
                Ok(v) => {
                    validate_sample(kind, v, row, &mut warned)?;
                    values.push(v);
                }
                Err(_) if idx == 0 => continue,
                Err(_) => return Err(ProfileError::Parse { row, text: field.to_string() }),
            }
        }
        Profile::new(kind, values, dt_hours)
    }
}

fn validate_sample<T: Float + Display>(
    kind: ProfileKind,
    v: T,
    row: usize,
    warned: &mut bool,
) -> Result<(), ProfileError> {
    if !v.is_finite() {
        return Err(ProfileError::NonFinite { row });
    }
    if v < T::zero() {
        return Err(ProfileError::Negative { row });
    }
    if kind == ProfileKind::PvNormalized {
        if v > flit(PV_HARD_LIMIT) {
            return Err(ProfileError::PvTooHigh { row, value: v.to_f64().unwrap_or(f64::NAN) });
        }
        if v > flit(PV_WARN_LIMIT) && !*warned {
            log::warn!("PV sample {v} W/Wp at row {row} exceeds {PV_WARN_LIMIT} W/Wp");
            *warned = true;
        }
    }
    Ok(())
}

/// Reads a profile from a single-column CSV file.
pub fn load_profile_csv<T: Float + Display + FromStr>(
    path: impl AsRef<Path>,
    kind: ProfileKind,
    dt_hours: T,
) -> Result<Profile<T>, ProfileError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|source| ProfileError::Io { path: path.display().to_string(), source })?;
    Profile::parse_csv(&text, kind, dt_hours)
}

/// Checks that a load and a PV profile can drive the same scenario.
pub fn check_aligned<T: Float + Display>(load: &Profile<T>, pv: &Profile<T>) -> Result<(), ProfileError> {
    if load.kind != ProfileKind::Load || pv.kind != ProfileKind::PvNormalized {
        return Err(ProfileError::Misaligned(format!(
            "expected (load, pv_normalized), got ({:?}, {:?})",
            load.kind, pv.kind
        )));
    }
    if load.len() != pv.len() {
        return Err(ProfileError::Misaligned(format!(
            "load has {} samples, pv has {}",
            load.len(),
            pv.len()
        )));
    }
    if load.dt_hours != pv.dt_hours {
        return Err(ProfileError::Misaligned(format!(
            "load dt {} h, pv dt {} h",
            load.dt_hours, pv.dt_hours
        )));
    }
    Ok(())
}
