//! Command implementations. Each returns the process exit code.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use pvsize_core::analysis::{compare_formulations, compute_kpis, duration_curves, PvBasis, RowStatus};
use pvsize_core::conic::SolveStatus;
use pvsize_core::optimizer::{optimize_with, verify_relaxation, ExactEvaluation, OptimizeError};
use pvsize_core::profiles::synth::SynthSpec;
use pvsize_core::system_model::{Formulation, LossSite, SiteLaw};
use pvsize_core::{ComparisonRow, OperationSchedule, Sizing};

use crate::config::ScenarioConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_LOOSE: i32 = 2;

/// Config overrides. Each flag replaces the config field of the same name.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub resample: Option<usize>,
    #[arg(long)]
    pub formulation: Option<Formulation>,
    #[arg(long)]
    pub load_csv: Option<PathBuf>,
    #[arg(long)]
    pub pv_csv: Option<PathBuf>,
    #[arg(long)]
    pub dt_hours: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub c_pv: Option<f64>,
    #[arg(long)]
    pub c_battery: Option<f64>,
    #[arg(long)]
    pub c_dcdc: Option<f64>,
    #[arg(long)]
    pub c_inv: Option<f64>,
    #[arg(long)]
    pub c_grid_withdraw: Option<f64>,
    #[arg(long)]
    pub c_grid_inject: Option<f64>,
    #[arg(long)]
    pub horizon_years: Option<f64>,
    #[arg(long)]
    pub annualize: Option<bool>,
    #[arg(long)]
    pub tol_feas: Option<f64>,
    #[arg(long)]
    pub tol_gap: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<u32>,
    #[arg(long)]
    pub slack_rel: Option<f64>,
    #[arg(long)]
    pub complementarity_rel: Option<f64>,
    /// `available` or `used`
    #[arg(long, value_parser = parse_pv_basis)]
    pub pv_basis: Option<PvBasis>,
    /// Remove every loss from the scenario.
    #[arg(long)]
    pub lossless: bool,
}

fn parse_pv_basis(s: &str) -> Result<PvBasis, String> {
    match s.to_ascii_lowercase().as_str() {
        "available" => Ok(PvBasis::Available),
        "used" => Ok(PvBasis::Used),
        _ => Err(format!("unknown pv basis {s:?}, expected available or used")),
    }
}

macro_rules! set {
    ($src:expr => $dst:expr) => {
        if let Some(v) = $src {
            $dst = v;
        }
    };
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) -> Result<()> {
        set!(self.output_dir.clone() => cfg.output_dir);
        set!(self.resample => cfg.resample);
        set!(self.formulation => cfg.formulation);
        set!(self.pv_basis => cfg.pv_basis);
        let p = &mut cfg.profiles;
        if self.load_csv.is_some() || self.pv_csv.is_some() {
            p.synth = None;
            p.load_csv = self.load_csv.clone().or(p.load_csv.take());
            p.pv_csv = self.pv_csv.clone().or(p.pv_csv.take());
        }
        set!(self.dt_hours.map(Some) => p.dt_hours);
        if let Some(seed) = self.seed {
            match &mut p.synth {
                Some(spec) => spec.seed = seed,
                None => bail!("--seed needs a synthetic profile source"),
            }
        }
        let c = &mut cfg.costs;
        set!(self.c_pv => c.c_pv);
        set!(self.c_battery => c.c_battery);
        set!(self.c_dcdc => c.c_dcdc);
        set!(self.c_inv => c.c_inv);
        set!(self.c_grid_withdraw => c.c_grid_withdraw);
        set!(self.c_grid_inject => c.c_grid_inject);
        set!(self.horizon_years => c.horizon_years);
        set!(self.annualize => c.annualize);
        set!(self.tol_feas => cfg.solver.tol_feas);
        set!(self.tol_gap => cfg.solver.tol_gap);
        set!(self.max_iter => cfg.solver.max_iter);
        set!(self.slack_rel => cfg.tolerances.slack_rel);
        set!(self.complementarity_rel => cfg.tolerances.complementarity_rel);
        if self.lossless {
            cfg.losses = pvsize_core::LossParams::lossless();
            cfg.linear_efficiency = Default::default();
        }
        cfg.validate()
    }
}

fn load_config(path: &Path, overrides: &Overrides) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(path)?;
    overrides.apply(&mut cfg)?;
    Ok(cfg)
}

fn write_json<S: Serialize>(dir: &Path, name: &str, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Contents of `sizing.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingReport {
    pub formulation: Formulation,
    pub steps: usize,
    pub dt_hours: f64,
    pub sizing: Sizing,
    /// Cost-stage optimum, €.
    pub objective_eur: f64,
    /// Total cost of the reported schedule, €.
    pub cost_eur: f64,
    pub losses_kwh: f64,
    pub stage1_status: SolveStatus,
    pub stage2_status: Option<SolveStatus>,
    pub exact: ExactEvaluation<f64>,
}

pub const OPTIMIZE_OUTPUTS: [&str; 5] =
    ["sizing.json", "schedule.csv", "kpis.json", "slack_report.json", "runtimes.json"];

pub fn cmd_optimize(config: &Path, overrides: &Overrides, curves: bool) -> i32 {
    match run_optimize(config, overrides, curves) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}

fn run_optimize(config: &Path, overrides: &Overrides, curves: bool) -> Result<i32> {
    let cfg = load_config(config, overrides)?;
    let scn = cfg.scenario()?;
    let res = match optimize_with(&scn, &cfg.options()) {
        Ok(r) => r,
        Err(e @ OptimizeError::Solver { .. }) => bail!("solver failure: {e}"),
        Err(e) => return Err(e.into()),
    };
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;

    let report = SizingReport {
        formulation: cfg.formulation,
        steps: scn.steps(),
        dt_hours: scn.dt_hours(),
        sizing: res.sizing,
        objective_eur: res.stage1_objective,
        cost_eur: res.cost_eur,
        losses_kwh: res.stage2_losses,
        stage1_status: res.stage1.status,
        stage2_status: res.stage2.map(|s| s.status),
        exact: res.exact.clone(),
    };
    write_json(dir, "sizing.json", &report)?;

    let mut csv = Vec::new();
    res.schedule.write_csv(&mut csv)?;
    fs::write(dir.join("schedule.csv"), csv)?;

    let available: Vec<f64> = scn.pv.values().iter().map(|g| g * res.sizing.pv_wp).collect();
    let kpis = compute_kpis(&res.schedule, &res.sizing, &scn.load_kw(), &available, cfg.pv_basis)?;
    write_json(dir, "kpis.json", &kpis)?;
    write_json(dir, "slack_report.json", &res.slack)?;
    write_json(
        dir,
        "runtimes.json",
        &serde_json::json!({ "runtimes": res.runtimes, "stage1": res.stage1, "stage2": res.stage2 }),
    )?;
    if curves {
        write_duration_curves(dir, &res.schedule, res.sizing.p_b_nom)?;
    }

    println!(
        "{}: objective {:.2} €, PV {:.3} kWp, battery {:.3} kWh, converters {:.3}/{:.3} kW, inverter {:.3} kW",
        cfg.formulation,
        res.stage1_objective,
        res.sizing.pv_wp,
        res.sizing.e_b_nom,
        res.sizing.p_pv_nom,
        res.sizing.p_b_nom,
        res.sizing.p_inv_nom
    );
    println!(
        "max relative cone slack {:.2e}, exact re-evaluation change {:.2e}, {:.1} s",
        res.slack.max_rel_slack(),
        res.exact.relative_change,
        res.runtimes.total_s
    );
    if !res.stages_optimal() {
        eprintln!("warning: loss stage did not reach optimality; the cost-stage schedule was kept");
        return Ok(EXIT_LOOSE);
    }
    if !res.slack.is_ok() {
        eprintln!(
            "warning: relaxation is not exact (tight: {}, complementary: {}); see slack_report.json",
            res.slack.tight_within_tol, res.slack.complementary_within_tol
        );
        return Ok(EXIT_LOOSE);
    }
    Ok(EXIT_OK)
}

fn write_duration_curves(dir: &Path, schedule: &OperationSchedule, p_b_nom: f64) -> Result<()> {
    let (charge, discharge) = duration_curves(schedule, p_b_nom)?;
    let mut out = String::from("charge,discharge\n");
    for (c, d) in charge.iter().zip(&discharge) {
        out.push_str(&format!("{c},{d}\n"));
    }
    fs::write(dir.join("duration_curves.csv"), out)?;
    Ok(())
}

pub fn cmd_compare(config: &Path, overrides: &Overrides, formulations: Option<&str>) -> i32 {
    match run_compare(config, overrides, formulations) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}

pub fn parse_formulations(list: &str) -> Result<Vec<Formulation>> {
    list.split(',').map(|s| s.trim().parse::<Formulation>().map_err(Into::into)).collect()
}

fn run_compare(config: &Path, overrides: &Overrides, formulations: Option<&str>) -> Result<i32> {
    let which = match formulations {
        Some(list) => parse_formulations(list)?,
        None => Formulation::ALL.to_vec(),
    };
    let cfg = load_config(config, overrides)?;
    let scn = cfg.scenario()?;
    let rows = compare_formulations(&scn, &cfg.linear_defaults()?, &which, &cfg.options());
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    fs::write(dir.join("comparison.csv"), comparison_csv(&rows))?;
    write_json(dir, "comparison.json", &rows)?;

    println!("{:<6} {:>8} {:>12} {:>12} {:>8} {:>8}", "model", "status", "objective", "convex op.", "PV kWp", "E kWh");
    for r in &rows {
        println!(
            "{:<6} {:>8} {:>12.2} {:>12.2} {:>8.3} {:>8.3}",
            r.formulation.label(),
            format!("{:?}", r.status).to_lowercase(),
            r.objective,
            r.objective_under_convex_operation,
            r.sizing.pv_wp,
            r.sizing.e_b_nom
        );
    }
    if rows.iter().all(|r| r.status == RowStatus::Optimal) {
        Ok(EXIT_OK)
    } else {
        for r in rows.iter().filter(|r| r.status != RowStatus::Optimal) {
            eprintln!("warning: {}: {}", r.formulation, r.message.as_deref().unwrap_or("failed"));
        }
        Ok(EXIT_LOOSE)
    }
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(
        "formulation,status,objective_eur,objective_under_convex_operation_eur,pv_wp,e_b_nom,p_pv_nom,p_b_nom,\
         p_inv_nom,grid_injection_kwh,grid_withdrawal_kwh,runtime_s,message\n",
    );
    for r in rows {
        let s = &r.sizing;
        let status = serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let message = r.message.as_deref().unwrap_or("").replace([',', '\n'], ";");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.formulation.label(),
            status,
            r.objective,
            r.objective_under_convex_operation,
            s.pv_wp,
            s.e_b_nom,
            s.p_pv_nom,
            s.p_b_nom,
            s.p_inv_nom,
            r.grid_injection,
            r.grid_withdrawal,
            r.runtime_s,
            message
        ));
    }
    out
}

/// Flags of the `synth` command.
#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 35040)]
    pub steps: usize,
    #[arg(long, visible_alias = "dt", default_value_t = 0.25)]
    pub dt_hours: f64,
    /// Annual household consumption, kWh.
    #[arg(long, default_value_t = 2774.0)]
    pub load_kwh: f64,
    /// Annual PV yield, Wh/Wp.
    #[arg(long, default_value_t = 1020.0)]
    pub pv_wh_per_wp: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Day of year at which the series starts.
    #[arg(long, default_value_t = 0.0)]
    pub start_day: f64,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}

impl SynthArgs {
    pub fn spec(&self) -> SynthSpec {
        SynthSpec {
            steps: self.steps,
            dt_hours: self.dt_hours,
            load_kwh: self.load_kwh,
            pv_wh_per_wp: self.pv_wh_per_wp,
            seed: self.seed,
            start_day: self.start_day,
        }
    }
}

pub fn cmd_synth(args: &SynthArgs) -> i32 {
    let run = || -> Result<()> {
        let (load, pv) = args.spec().generate::<f64>()?;
        fs::create_dir_all(&args.output_dir)
            .with_context(|| format!("cannot create {}", args.output_dir.display()))?;
        load.save_csv(args.output_dir.join("load.csv"))?;
        pv.save_csv(args.output_dir.join("pv.csv"))?;
        println!(
            "{} steps of {} h: load {:.1} kWh, PV {:.1} Wh/Wp",
            load.len(),
            load.dt_hours(),
            load.annual_energy() / 1e3,
            pv.annual_energy()
        );
        Ok(())
    };
    match run() {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}

pub fn cmd_verify(config: &Path, overrides: &Overrides) -> i32 {
    match run_verify(config, overrides) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}

fn run_verify(config: &Path, overrides: &Overrides) -> Result<i32> {
    let cfg = load_config(config, overrides)?;
    let dir = &cfg.output_dir;
    let read = |name: &str| {
        let p = dir.join(name);
        fs::read_to_string(&p).with_context(|| format!("cannot read {}", p.display()))
    };
    let report: SizingReport = serde_json::from_str(&read("sizing.json")?)?;
    let schedule = OperationSchedule::parse_csv(&read("schedule.csv")?, report.dt_hours)?;
    let saved: Value = serde_json::from_str(&read("slack_report.json")?)?;

    let formulation = report.formulation.spec(&cfg.linear_defaults()?);
    let laws = LossSite::ALL.map(|s| SiteLaw::for_site(s, &cfg.losses, &formulation));
    let slack = verify_relaxation(&schedule, &report.sizing, &laws, &cfg.tolerances);
    let fresh = serde_json::to_value(&slack)?;
    if let Some(path) = first_difference(&saved, &fresh, "") {
        eprintln!("error: slack_report.json differs from the re-verified schedule at {path}");
        return Ok(EXIT_FAILURE);
    }
    println!(
        "verified {} steps: max relative cone slack {:.2e}, tight {}, complementary {}",
        schedule.len(),
        slack.max_rel_slack(),
        slack.tight_within_tol,
        slack.complementary_within_tol
    );
    Ok(if slack.is_ok() { EXIT_OK } else { EXIT_LOOSE })
}

/// Location of the first mismatch, numbers compared to 1e-9 relative.
pub fn first_difference(a: &Value, b: &Value, at: &str) -> Option<String> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64()?, y.as_f64()?);
            ((x - y).abs() > 1e-9 * x.abs().max(1.0)).then(|| at.to_string())
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                return Some(at.to_string());
            }
            x.iter().zip(y).enumerate().find_map(|(i, (u, v))| first_difference(u, v, &format!("{at}[{i}]")))
        }
        (Value::Object(x), Value::Object(y)) => {
            if x.len() != y.len() {
                return Some(at.to_string());
            }
            x.iter().find_map(|(k, u)| match y.get(k) {
                Some(v) => first_difference(u, v, &format!("{at}.{k}")),
                None => Some(format!("{at}.{k}")),
            })
        }
        _ => (a != b).then(|| at.to_string()),
    }
}
