//! Scenario configuration files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use pvsize_core::analysis::PvBasis;
use pvsize_core::loss_models::LinearEfficiency;
use pvsize_core::optimizer::Tolerances;
use pvsize_core::profiles::synth::SynthSpec;
use pvsize_core::profiles::{load_profile_csv, ProfileKind};
use pvsize_core::system_model::Formulation;
use pvsize_core::{CostParams, LinearDefaults, LossParams, OptimizeOptions, Scenario, SolverSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSource {
    /// Household load in W, one sample per row.
    pub load_csv: Option<PathBuf>,
    /// PV output in W/Wp, one sample per row.
    pub pv_csv: Option<PathBuf>,
    /// Sample interval of the CSV files, hours.
    pub dt_hours: Option<f64>,
    pub synth: Option<SynthSpec>,
}

/// Per-component constant efficiencies for the linear formulations. Missing
/// entries fall back to each convex model's best-point efficiency.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearOverrides {
    pub pv_dcdc: Option<f64>,
    pub battery_dcdc: Option<f64>,
    pub inverter: Option<f64>,
    pub battery: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub profiles: ProfileSource,
    #[serde(default = "CostParams::reference")]
    pub costs: CostParams,
    #[serde(default = "LossParams::representative")]
    pub losses: LossParams,
    #[serde(default = "default_formulation")]
    pub formulation: Formulation,
    #[serde(default)]
    pub linear_efficiency: LinearOverrides,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub tolerances: Tolerances<f64>,
    #[serde(default)]
    pub pv_basis: PvBasis,
    /// Average this many consecutive samples before building the program.
    #[serde(default = "one")]
    pub resample: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_formulation() -> Formulation {
    Formulation::CcCb
}

fn one() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ScenarioConfig {
    /// Reads a config file. Relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: ScenarioConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.profiles.load_csv, &mut cfg.profiles.pv_csv].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.profiles;
        match (&p.synth, &p.load_csv, &p.pv_csv) {
            (Some(spec), None, None) => spec.validate()?,
            (None, Some(load), Some(pv)) => {
                for f in [load, pv] {
                    if !f.is_file() {
                        bail!("profile file {} does not exist", f.display());
                    }
                }
                if p.dt_hours.is_none() {
                    bail!("profiles.dt_hours is required with CSV profiles");
                }
            }
            _ => bail!("profiles needs either a synth table or both load_csv and pv_csv"),
        }
        if self.resample == 0 {
            bail!("resample must be at least 1");
        }
        self.costs.validate()?;
        self.linear_defaults()?;
        Ok(())
    }

    pub fn linear_defaults(&self) -> Result<LinearDefaults> {
        let mut d = LinearDefaults::best_point(&self.losses);
        let o = &self.linear_efficiency;
        let set = |slot: &mut LinearEfficiency<f64>, v: Option<f64>, name: &str| -> Result<()> {
            if let Some(eta) = v {
                *slot = LinearEfficiency::new(eta).with_context(|| format!("linear_efficiency.{name}"))?;
            }
            Ok(())
        };
        set(&mut d.converters.pv_dcdc, o.pv_dcdc, "pv_dcdc")?;
        set(&mut d.converters.battery_dcdc, o.battery_dcdc, "battery_dcdc")?;
        set(&mut d.converters.inverter, o.inverter, "inverter")?;
        set(&mut d.battery, o.battery, "battery")?;
        Ok(d)
    }

    pub fn options(&self) -> OptimizeOptions {
        OptimizeOptions { tolerances: self.tolerances, ..OptimizeOptions::default() }
    }

    /// Loads or generates the profiles and assembles the scenario.
    pub fn scenario(&self) -> Result<Scenario> {
        let p = &self.profiles;
        let (load, pv) = match (&p.synth, &p.load_csv, &p.pv_csv, p.dt_hours) {
            (Some(spec), ..) => spec.generate::<f64>()?,
            (None, Some(l), Some(g), Some(dt)) => (
                load_profile_csv(l, ProfileKind::Load, dt)?,
                load_profile_csv(g, ProfileKind::PvNormalized, dt)?,
            ),
            _ => bail!("incomplete profile source"),
        };
        let (load, pv) = if self.resample > 1 {
            (load.resample_average(self.resample)?, pv.resample_average(self.resample)?)
        } else {
            (load, pv)
        };
        let scn = Scenario {
            load,
            pv,
            costs: self.costs,
            losses: self.losses,
            formulation: self.formulation.spec(&self.linear_defaults()?),
            solver: self.solver,
        };
        scn.validate()?;
        Ok(scn)
    }
}
