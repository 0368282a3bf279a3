use std::fmt::Write as _;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{ConicSolution, SolveStatus};
use crate::scalar::Real;

use super::{LossSite, Sizing, VariableMap};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("solution is not optimal ({0:?})")]
    NotOptimal(SolveStatus),
    #[error("solution has {got} values, program has {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("schedule csv: {0}")]
    Csv(String),
}

/// Loss of one site over the horizon, kW per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SiteLosses<T> {
    pub site: LossSite,
    /// Loss booked in the energy balances.
    pub total: Vec<T>,
    /// Quadratic epigraph value; zero where the site has no quadratic term.
    pub quadratic: Vec<T>,
}

/// Per-step operation in kW and kWh. `p_inv` is exported as
/// `p_inv_pos − p_inv_neg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OperationSchedule<T> {
    pub dt_hours: T,
    pub load_kw: Vec<T>,
    pub pc: Vec<T>,
    pub pd: Vec<T>,
    pub ppv: Vec<T>,
    pub ppvi: Vec<T>,
    pub p_alpha: Vec<T>,
    pub p_beta: Vec<T>,
    pub p_gamma: Vec<T>,
    pub p_inv_pos: Vec<T>,
    pub p_inv_neg: Vec<T>,
    pub p_gi: Vec<T>,
    pub p_gw: Vec<T>,
    pub eb: Vec<T>,
    /// In [`LossSite::ALL`] order.
    pub losses: Vec<SiteLosses<T>>,
}

/// Leading columns of the schedule CSV; loss columns follow, then the
/// inverter split, the load and the quadratic epigraph values.
pub const SCHEDULE_COLUMNS: [&str; 12] = [
    "t_index", "pc_kw", "pd_kw", "ppv_kw", "ppvi_kw", "p_alpha_kw", "p_beta_kw", "p_gamma_kw", "p_inv_kw", "p_gi_kw",
    "p_gw_kw", "eb_kwh",
];

fn loss_column(site: LossSite) -> String {
    format!("loss_{}_kw", site.name())
}

fn quad_column(site: LossSite) -> String {
    format!("quad_{}_kw", site.name())
}

/// Reads the schedule and sizing out of an optimal solution.
pub fn extract_schedule<T: Real>(
    sol: &ConicSolution<T>,
    map: &VariableMap<T>,
) -> Result<(OperationSchedule<T>, Sizing<T>), ExtractError> {
    if !sol.status.is_optimal() {
        return Err(ExtractError::NotOptimal(sol.status));
    }
    let x = &sol.var_values;
    let expected = map.num_vars;
    if x.len() != expected {
        return Err(ExtractError::Dimension { got: x.len(), expected });
    }
    let v = |var: crate::conic::Var| x[var.index()];
    let col = |f: &dyn Fn(&super::StepVars) -> crate::conic::Var| -> Vec<T> { map.steps.iter().map(|s| v(f(s))).collect() };

    let sizing = match map.fixed_sizing {
        Some(s) => s,
        None => Sizing {
            pv_wp: v(map.sizing.pv_wp),
            e_b_nom: v(map.sizing.e_b_nom),
            p_pv_nom: v(map.sizing.p_pv_nom),
            p_b_nom: v(map.sizing.p_b_nom),
            p_inv_nom: v(map.sizing.p_inv_nom),
        }
        .clamped(),
    };

    let losses = LossSite::ALL
        .iter()
        .map(|&site| SiteLosses {
            site,
            total: (0..map.steps.len()).map(|t| map.loss_expr(site, t).eval(x)).collect(),
            quadratic: map
                .steps
                .iter()
                .map(|s| s.quad[site.index()].map_or(T::zero(), |q| v(q) * map.laws[site.index()].curvature))
                .collect(),
        })
        .collect();

    let schedule = OperationSchedule {
        dt_hours: map.dt_hours,
        load_kw: map.load_kw.clone(),
        pc: col(&|s| s.pc),
        pd: col(&|s| s.pd),
        ppv: map.pv_yield.iter().map(|&g| g * sizing.pv_wp).collect(),
        ppvi: col(&|s| s.ppvi),
        p_alpha: col(&|s| s.p_alpha),
        p_beta: col(&|s| s.p_beta),
        p_gamma: col(&|s| s.p_gamma),
        p_inv_pos: col(&|s| s.p_inv_pos),
        p_inv_neg: col(&|s| s.p_inv_neg),
        p_gi: col(&|s| s.p_gi),
        p_gw: col(&|s| s.p_gw),
        eb: col(&|s| s.eb),
        losses,
    };
    Ok((schedule, sizing))
}

impl<T: Real> OperationSchedule<T> {
    pub fn len(&self) -> usize {
        self.pc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pc.is_empty()
    }

    pub fn p_inv(&self, t: usize) -> T {
        self.p_inv_pos[t] - self.p_inv_neg[t]
    }

    pub fn site(&self, site: LossSite) -> &SiteLosses<T> {
        &self.losses[site.index()]
    }

    /// Sum of all losses over the horizon, kWh.
    pub fn total_losses_kwh(&self) -> T {
        self.losses.iter().flat_map(|l| l.total.iter()).fold(T::zero(), |a, &l| a + l) * self.dt_hours
    }

    pub fn site_losses_kwh(&self, site: LossSite) -> T {
        self.site(site).total.iter().fold(T::zero(), |a, &l| a + l) * self.dt_hours
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut header: Vec<String> = SCHEDULE_COLUMNS.iter().map(|s| s.to_string()).collect();
        header.extend(LossSite::ALL.iter().map(|&s| loss_column(s)));
        header.extend(["p_inv_pos_kw", "p_inv_neg_kw", "load_kw"].map(String::from));
        header.extend(LossSite::ALL.iter().map(|&s| quad_column(s)));
        writeln!(out, "{}", header.join(","))?;
        let mut line = String::new();
        for t in 0..self.len() {
            line.clear();
            let _ = write!(line, "{t}");
            let row = [
                self.pc[t],
                self.pd[t],
                self.ppv[t],
                self.ppvi[t],
                self.p_alpha[t],
                self.p_beta[t],
                self.p_gamma[t],
                self.p_inv(t),
                self.p_gi[t],
                self.p_gw[t],
                self.eb[t],
            ];
            let tail = [self.p_inv_pos[t], self.p_inv_neg[t], self.load_kw[t]];
            let values = row
                .iter()
                .chain(self.losses.iter().map(|l| &l.total[t]))
                .chain(tail.iter())
                .chain(self.losses.iter().map(|l| &l.quadratic[t]));
            for v in values {
                let _ = write!(line, ",{}", v.to_f64_lossy());
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Parses the output of [`OperationSchedule::write_csv`].
    pub fn parse_csv(text: &str, dt_hours: T) -> Result<Self, ExtractError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines.next().ok_or_else(|| ExtractError::Csv("empty file".into()))?.split(',').collect();
        let find = |name: &str| {
            header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| ExtractError::Csv(format!("missing column {name}")))
        };
        let names: Vec<String> = SCHEDULE_COLUMNS[1..]
            .iter()
            .map(|s| s.to_string())
            .chain(["p_inv_pos_kw", "p_inv_neg_kw", "load_kw"].map(String::from))
            .chain(LossSite::ALL.iter().map(|&s| loss_column(s)))
            .chain(LossSite::ALL.iter().map(|&s| quad_column(s)))
            .collect();
        let idx = names.iter().map(|n| find(n)).collect::<Result<Vec<_>, _>>()?;
        let mut cols: Vec<Vec<T>> = vec![Vec::new(); names.len()];
        for (row, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            for (c, &i) in idx.iter().enumerate() {
                let raw = fields.get(i).ok_or_else(|| ExtractError::Csv(format!("row {}: too few fields", row + 1)))?;
                let v: f64 = raw
                    .trim()
                    .parse()
                    .map_err(|_| ExtractError::Csv(format!("row {}: cannot parse {raw:?}", row + 1)))?;
                cols[c].push(T::lit(v));
            }
        }
        let mut cols = cols.into_iter();
        let mut next = || cols.next().unwrap_or_default();
        let pc = next();
        let pd = next();
        let ppv = next();
        let ppvi = next();
        let p_alpha = next();
        let p_beta = next();
        let p_gamma = next();
        let _p_inv = next();
        let p_gi = next();
        let p_gw = next();
        let eb = next();
        let p_inv_pos = next();
        let p_inv_neg = next();
        let load_kw = next();
        let totals: Vec<Vec<T>> = LossSite::ALL.iter().map(|_| next()).collect();
        let quads: Vec<Vec<T>> = LossSite::ALL.iter().map(|_| next()).collect();
        let losses = LossSite::ALL
            .iter()
            .zip(totals.into_iter().zip(quads))
            .map(|(&site, (total, quadratic))| SiteLosses { site, total, quadratic })
            .collect();
        Ok(OperationSchedule {
            dt_hours,
            load_kw,
            pc,
            pd,
            ppv,
            ppvi,
            p_alpha,
            p_beta,
            p_gamma,
            p_inv_pos,
            p_inv_neg,
            p_gi,
            p_gw,
            eb,
            losses,
        })
    }
}
