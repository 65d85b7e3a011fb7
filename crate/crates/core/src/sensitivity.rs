//! Sensitivity analysis over the (γ, λ) grid.
//!
//! Every grid cell is an independent solve from fresh uniform
//! initialization; cells run concurrently over a work pool and are
//! assembled in (γ index, λ index) order, so outputs are deterministic. A
//! failed cell is recorded with `converged = false` instead of aborting the
//! sweep. Reference estimators (OLS/ridge implied weights, IPW) can be
//! co-computed for the baseline rows and the chart reference lines.

use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{worst_case_bound, BoundReport};
use crate::data::{Dataset, ProblemConfig, SolverConfig, TargetSpec};
use crate::diagnostics::{diagnostics_record, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::implied::{fit_propensity, ipw_att_weights, point_estimate};
use crate::io::fmt_g17;
use crate::solver::{solve, solve_closed_form_ridge_path, ObjectiveBreakdown};
use crate::svg::{Dash, HLine, LineChart, Series};

/// Which reference estimators to co-compute.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineFlags {
    pub ols: bool,
    pub ridge: bool,
    pub ipw: bool,
}

/// The sweep grid: log-spaced γ values, a λ list, and the shared base
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub gammas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub base_config: ProblemConfig,
    pub baselines: BaselineFlags,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() || self.lambdas.is_empty() {
            return Err(Error::InvalidConfig("sweep grids must be nonempty".to_string()));
        }
        for (name, grid, positive) in [
            ("gamma", &self.gammas, true),
            ("lambda", &self.lambdas, false),
        ] {
            for pair in grid.windows(2) {
                if pair[0] >= pair[1] {
                    return Err(Error::InvalidConfig(format!(
                        "{name} grid must be strictly ascending"
                    )));
                }
            }
            for &v in grid.iter() {
                if positive && !(v > 0.0) {
                    return Err(Error::InvalidConfig(format!("{name} grid must be positive")));
                }
                if !positive && !(v >= 0.0) {
                    return Err(Error::InvalidConfig(format!("{name} grid must be nonnegative")));
                }
            }
        }
        self.base_config.validate()
    }
}

/// Log-spaced grid with `k` points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, k: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || k < 2 {
        return Err(Error::InvalidConfig(format!(
            "log grid needs 0 < lo < hi and k >= 2, got {lo}:{hi}:{k}"
        )));
    }
    let (llo, lhi) = (lo.log10(), hi.log10());
    Ok((0..k)
        .map(|i| 10f64.powf(llo + (lhi - llo) * i as f64 / (k - 1) as f64))
        .collect())
}

/// One solved grid cell.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub gamma: f64,
    pub lambda: f64,
    pub estimate: f64,
    pub objective: ObjectiveBreakdown,
    pub diagnostics: DiagnosticsRecord,
    pub bound: Option<BoundReport>,
    pub converged: bool,
}

/// One reference estimator row.
#[derive(Debug, Clone, Serialize)]
pub struct BaselineRow {
    pub method: String,
    pub lambda: Option<f64>,
    pub estimate: f64,
    pub objective: ObjectiveBreakdown,
    pub diagnostics: DiagnosticsRecord,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    pub baseline_rows: Vec<BaselineRow>,
}

/// Solves every (γ, λ) cell and the requested baselines.
///
/// The IPW baseline needs a target sample (the propensity model is a
/// source-vs-target classifier); requesting it with a bare target point is
/// a configuration error.
pub fn run_sweep(
    data: &Dataset,
    target: &TargetSpec,
    grid: &SweepGrid,
    scfg: &SolverConfig,
) -> Result<SweepResult> {
    grid.validate()?;
    scfg.validate()?;
    target.check_dim(data)?;
    if grid.baselines.ipw && target.sample().is_none() {
        return Err(Error::InvalidConfig(
            "the ipw baseline requires a target sample (multi-row target file)".to_string(),
        ));
    }

    let indices: Vec<(usize, usize)> = (0..grid.gammas.len())
        .flat_map(|g| (0..grid.lambdas.len()).map(move |l| (g, l)))
        .collect();
    let cells: Vec<SweepCell> = indices
        .par_iter()
        .map(|&(gi, li)| {
            let mut cfg = grid.base_config.clone();
            cfg.gamma = grid.gammas[gi];
            cfg.lambda = grid.lambdas[li];
            solve_cell(data, target, &cfg, scfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut baseline_rows = Vec::new();
    if grid.baselines.ols {
        baseline_rows.push(baseline_row(data, target, &grid.base_config, "ols", 0.0)?);
    }
    if grid.baselines.ridge {
        baseline_rows.push(baseline_row(
            data,
            target,
            &grid.base_config,
            "ridge",
            grid.base_config.lambda,
        )?);
    }
    if grid.baselines.ipw {
        let sample = target.sample().expect("checked above");
        let model = fit_propensity(data, sample)?;
        let w = ipw_att_weights(&model, data, true)?;
        baseline_rows.push(BaselineRow {
            method: "ipw".to_string(),
            lambda: None,
            estimate: point_estimate(&w, data.outcomes())?,
            objective: crate::solver::objective(w.weights(), data, target, &grid.base_config)?,
            diagnostics: diagnostics_record(&w, data, target)?,
        });
    }
    Ok(SweepResult {
        cells,
        baseline_rows,
    })
}

fn solve_cell(
    data: &Dataset,
    target: &TargetSpec,
    cfg: &ProblemConfig,
    scfg: &SolverConfig,
) -> Result<SweepCell> {
    match solve(data, target, cfg, scfg) {
        Ok(out) => Ok(SweepCell {
            gamma: cfg.gamma,
            lambda: cfg.lambda,
            estimate: point_estimate(&out.weights, data.outcomes())?,
            objective: out.objective,
            diagnostics: diagnostics_record(&out.weights, data, target)?,
            bound: Some(worst_case_bound(&out.weights, data, target, &cfg.holder)?),
            converged: true,
        }),
        Err(Error::NonFiniteObjective { epoch }) => {
            log::warn!(
                "cell (gamma={}, lambda={}) failed at epoch {epoch}; recording as unconverged",
                cfg.gamma,
                cfg.lambda
            );
            Ok(SweepCell {
                gamma: cfg.gamma,
                lambda: cfg.lambda,
                estimate: f64::NAN,
                objective: ObjectiveBreakdown {
                    imbalance_term: f64::NAN,
                    dispersion_term: f64::NAN,
                    extrapolation_term: f64::NAN,
                    total: f64::NAN,
                },
                diagnostics: DiagnosticsRecord {
                    negative_influence: f64::NAN,
                    balance_rmse: f64::NAN,
                    balance_linf: f64::NAN,
                    balance_l2: f64::NAN,
                    l2_norm: f64::NAN,
                    ess: f64::NAN,
                    in_hull: false,
                    sum_weights: f64::NAN,
                },
                bound: None,
                converged: false,
            })
        }
        Err(e) => Err(e),
    }
}

fn baseline_row(
    data: &Dataset,
    target: &TargetSpec,
    base: &ProblemConfig,
    method: &str,
    lambda: f64,
) -> Result<BaselineRow> {
    let w = solve_closed_form_ridge_path(data, target, lambda)?;
    Ok(BaselineRow {
        method: method.to_string(),
        lambda: Some(lambda),
        estimate: point_estimate(&w, data.outcomes())?,
        objective: crate::solver::objective(w.weights(), data, target, base)?,
        diagnostics: diagnostics_record(&w, data, target)?,
    })
}

/// Fixed column schema of the sweep CSV.
pub const SWEEP_CSV_HEADER: &str =
    "gamma,lambda,estimate,term_a,term_b,term_c,neg_influence,balance_rmse,l2_norm,ess,converged,method";

/// Writes one row per cell followed by the baseline rows. Values carry 17
/// significant digits so a round-trip parse is bit-exact.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for c in &result.cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},solver",
            fmt_g17(c.gamma),
            fmt_g17(c.lambda),
            fmt_g17(c.estimate),
            fmt_g17(c.objective.imbalance_term),
            fmt_g17(c.objective.dispersion_term),
            fmt_g17(c.objective.extrapolation_term),
            fmt_g17(c.diagnostics.negative_influence),
            fmt_g17(c.diagnostics.balance_rmse),
            fmt_g17(c.diagnostics.l2_norm),
            fmt_g17(c.diagnostics.ess),
            c.converged
        )?;
    }
    for b in &result.baseline_rows {
        writeln!(
            out,
            ",{},{},{},{},{},{},{},{},{},true,{}",
            b.lambda.map(fmt_g17).unwrap_or_default(),
            fmt_g17(b.estimate),
            fmt_g17(b.objective.imbalance_term),
            fmt_g17(b.objective.dispersion_term),
            fmt_g17(b.objective.extrapolation_term),
            fmt_g17(b.diagnostics.negative_influence),
            fmt_g17(b.diagnostics.balance_rmse),
            fmt_g17(b.diagnostics.l2_norm),
            fmt_g17(b.diagnostics.ess),
            b.method
        )?;
    }
    Ok(())
}

/// Chart content selector for [`emit_svg`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepChart {
    Estimate,
    Balance,
    NegInfluence,
    Norm,
}

impl SweepChart {
    fn y_label(self) -> &'static str {
        match self {
            SweepChart::Estimate => "estimate",
            SweepChart::Balance => "balance RMSE",
            SweepChart::NegInfluence => "negative influence",
            SweepChart::Norm => "L2 norm of weights",
        }
    }

    fn cell_value(self, cell: &SweepCell) -> f64 {
        match self {
            SweepChart::Estimate => cell.estimate,
            SweepChart::Balance => cell.diagnostics.balance_rmse,
            SweepChart::NegInfluence => cell.diagnostics.negative_influence,
            SweepChart::Norm => cell.diagnostics.l2_norm,
        }
    }

    fn baseline_value(self, row: &BaselineRow) -> f64 {
        match self {
            SweepChart::Estimate => row.estimate,
            SweepChart::Balance => row.diagnostics.balance_rmse,
            SweepChart::NegInfluence => row.diagnostics.negative_influence,
            SweepChart::Norm => row.diagnostics.l2_norm,
        }
    }
}

/// Writes a line chart: x = log₁₀γ, one polyline per λ, horizontal
/// reference lines for the baselines (dashed for the regression-implied
/// weights, dotted for IPW).
pub fn emit_svg(result: &SweepResult, kind: SweepChart, path: &Path) -> Result<()> {
    if result.cells.is_empty() {
        return Err(Error::EmptyInput("sweep result has no cells"));
    }
    let mut lambdas: Vec<f64> = result.cells.iter().map(|c| c.lambda).collect();
    lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lambdas.dedup();
    let mut series = Vec::new();
    for &l in &lambdas {
        let mut points: Vec<(f64, f64)> = result
            .cells
            .iter()
            .filter(|c| c.lambda == l && c.converged)
            .map(|c| (c.gamma.log10(), kind.cell_value(c)))
            .collect();
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        series.push(Series {
            label: format!("lambda={l}"),
            points,
        });
    }
    let hlines = result
        .baseline_rows
        .iter()
        .map(|b| HLine {
            label: b.method.clone(),
            y: kind.baseline_value(b),
            dash: if b.method == "ipw" { Dash::Dotted } else { Dash::Dashed },
        })
        .collect();
    let chart = LineChart {
        title: format!("{} vs gamma", kind.y_label()),
        x_label: "log10(gamma)".to_string(),
        y_label: kind.y_label().to_string(),
        series,
        hlines,
    };
    std::fs::write(path, chart.render())?;
    Ok(())
}
