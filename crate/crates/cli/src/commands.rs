//! Subcommand implementations. Every command writes its artifacts under the
//! output directory and finishes with a `manifest.json` content-hash index.

use std::io::Write as _;
use std::path::Path;

use extrabal::bounds::{estimate_sigma_ridge, prop1_bound, prop2_bound, worst_case_bound, BoundReport};
use extrabal::data::{Dataset, ProblemConfig, Provenance, SolverConfig, TargetSpec, WeightVector};
use extrabal::dgp::{generate, replicate, ReplicationTable, ScenarioKind, ScenarioSpec};
use extrabal::diagnostics::{diagnostics_record, DiagnosticsRecord};
use extrabal::error::{Error, Result};
use extrabal::implied::{fit_propensity, ipw_att_weights, point_estimate};
use extrabal::io;
use extrabal::scale::{minmax_scale, ScalingRecord};
use extrabal::seed::derive_seed;
use extrabal::sensitivity::{emit_csv, emit_svg, BaselineFlags, SweepChart, SweepGrid};
use extrabal::solver::{solve, solve_closed_form_ridge_path};
use nalgebra::DVector;
use serde::Serialize;

use crate::args::{
    parse_baselines, parse_grid, parse_mu_even, BaselinesArgs, BoundArg, BoundArgs, DiagnoseArgs,
    EstimatorArg, FileConfig, KindArg, SimulateArgs, SolveArgs, SweepArgs,
};
use crate::manifest::Manifest;

struct LoadedProblem {
    data: Dataset,
    target: TargetSpec,
    scaling: Option<ScalingRecord>,
}

fn load_problem(
    io_args: &crate::args::IoArgs,
    file: &FileConfig,
    scale: bool,
) -> Result<LoadedProblem> {
    let y_col = io_args.y_col(file)?;
    let id_col = io_args.id_col(file)?;
    let (data, columns) = io::read_source_csv(&io_args.source(file)?, &y_col, id_col.as_deref())?;
    let target = io::read_target_csv(&io_args.target(file)?, &columns.feature_names)?;
    target.check_dim(&data)?;
    if scale {
        let (scaled, scaled_target, record) = minmax_scale(&data, &target)?;
        Ok(LoadedProblem {
            data: scaled,
            target: scaled_target,
            scaling: Some(record),
        })
    } else {
        Ok(LoadedProblem {
            data,
            target,
            scaling: None,
        })
    }
}

fn ensure_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidConfig(format!("serialization: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn write_scaling(
    out: &Path,
    scaling: &Option<ScalingRecord>,
    manifest: &mut Manifest,
) -> Result<()> {
    if let Some(record) = scaling {
        let path = out.join("scaling.json");
        write_json(&path, record)?;
        manifest.add(&path)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveReport<'a> {
    method: &'static str,
    estimate: f64,
    objective: &'a extrabal::solver::ObjectiveBreakdown,
    diagnostics: DiagnosticsRecord,
    config: &'a ProblemConfig,
    solver: &'a SolverConfig,
    best_epoch: usize,
    stopped_early: bool,
}

pub fn run_solve(args: &SolveArgs, file: &FileConfig) -> Result<()> {
    let (cfg, scale) = args.problem.resolve(file)?;
    let scfg = args.solver.resolve(file)?;
    let out = args.io.out(file)?;
    ensure_out(&out)?;
    let problem = load_problem(&args.io, file, scale)?;

    let result = solve(&problem.data, &problem.target, &cfg, &scfg)?;
    let mut manifest = Manifest::new(&out);

    let weights_path = out.join("weights.csv");
    io::write_weights_csv(&weights_path, problem.data.unit_ids(), &result.weights)?;
    manifest.add(&weights_path)?;

    let trace_path = out.join("trace.csv");
    io::write_trace_csv(&trace_path, &result.trace)?;
    manifest.add(&trace_path)?;

    let report = SolveReport {
        method: result.weights.method(),
        estimate: point_estimate(&result.weights, problem.data.outcomes())?,
        objective: &result.objective,
        diagnostics: diagnostics_record(&result.weights, &problem.data, &problem.target)?,
        config: &cfg,
        solver: &scfg,
        best_epoch: result.trace.best_epoch,
        stopped_early: result.trace.stopped_early,
    };
    let diag_path = out.join("diagnostics.json");
    write_json(&diag_path, &report)?;
    manifest.add(&diag_path)?;

    write_scaling(&out, &problem.scaling, &mut manifest)?;
    manifest.write()?;
    log::info!(
        "solve: estimate {:.6}, objective {:.6e}, outputs in {}",
        report.estimate,
        result.objective.total,
        out.display()
    );
    Ok(())
}

pub fn run_sweep(args: &SweepArgs, file: &FileConfig) -> Result<()> {
    let (base_config, scale) = args.problem.resolve(file)?;
    let scfg = args.solver.resolve(file)?;
    let out = args.io.out(file)?;
    ensure_out(&out)?;
    let problem = load_problem(&args.io, file, scale)?;

    let gamma_text = args
        .grid_gamma
        .clone()
        .or(file.string("grid-gamma")?)
        .unwrap_or_else(|| "0.01:10:10".to_string());
    let lambda_text = args
        .grid_lambda
        .clone()
        .or(file.string("grid-lambda")?)
        .unwrap_or_else(|| "0.01,0.1,1,10".to_string());
    let baselines = match args.baselines.clone().or(file.string("baselines")?) {
        Some(text) => parse_baselines(&text)?,
        None => BaselineFlags::default(),
    };
    let grid = SweepGrid {
        gammas: parse_grid(&gamma_text)?,
        lambdas: parse_grid(&lambda_text)?,
        base_config,
        baselines,
    };

    let result = run_sweep_inner(&problem, &grid, &scfg)?;
    let mut manifest = Manifest::new(&out);
    let csv_path = out.join("sweep.csv");
    emit_csv(&result, &csv_path)?;
    manifest.add(&csv_path)?;
    for (kind, name) in [
        (SweepChart::Estimate, "estimate.svg"),
        (SweepChart::Balance, "balance.svg"),
        (SweepChart::NegInfluence, "neg_influence.svg"),
        (SweepChart::Norm, "norm.svg"),
    ] {
        let path = out.join(name);
        emit_svg(&result, kind, &path)?;
        manifest.add(&path)?;
    }
    write_scaling(&out, &problem.scaling, &mut manifest)?;
    manifest.write()?;
    log::info!(
        "sweep: {} cells, {} baselines, outputs in {}",
        result.cells.len(),
        result.baseline_rows.len(),
        out.display()
    );
    Ok(())
}

fn run_sweep_inner(
    problem: &LoadedProblem,
    grid: &SweepGrid,
    scfg: &SolverConfig,
) -> Result<extrabal::sensitivity::SweepResult> {
    extrabal::sensitivity::run_sweep(&problem.data, &problem.target, grid, scfg)
}

#[derive(Serialize)]
struct BaselineReport<'a> {
    method: &'a str,
    estimate: f64,
    diagnostics: DiagnosticsRecord,
    lambda: Option<f64>,
    clipped_units: Option<Vec<usize>>,
}

pub fn run_baselines(args: &BaselinesArgs, file: &FileConfig) -> Result<()> {
    let (cfg, scale) = args.problem.resolve(file)?;
    let out = args.io.out(file)?;
    ensure_out(&out)?;
    let problem = load_problem(&args.io, file, scale)?;

    let flags = match args.baselines.clone().or(file.string("baselines")?) {
        Some(text) => parse_baselines(&text)?,
        None => BaselineFlags {
            ols: true,
            ridge: true,
            ipw: problem.target.sample().is_some(),
        },
    };
    if flags.ipw && problem.target.sample().is_none() {
        return Err(Error::InvalidConfig(
            "the ipw baseline requires a target sample (multi-row target file)".to_string(),
        ));
    }

    let mut manifest = Manifest::new(&out);
    let mut produced = Vec::new();
    if flags.ols {
        produced.push((
            "ols",
            solve_closed_form_ridge_path(&problem.data, &problem.target, 0.0)?,
            Some(0.0),
        ));
    }
    if flags.ridge {
        produced.push((
            "ridge",
            solve_closed_form_ridge_path(&problem.data, &problem.target, cfg.lambda)?,
            Some(cfg.lambda),
        ));
    }
    if flags.ipw {
        let model = fit_propensity(&problem.data, problem.target.sample().expect("checked"))?;
        produced.push(("ipw", ipw_att_weights(&model, &problem.data, true)?, None));
    }

    for (method, weights, lambda) in &produced {
        let weights_path = out.join(format!("weights_{method}.csv"));
        io::write_weights_csv(&weights_path, problem.data.unit_ids(), weights)?;
        manifest.add(&weights_path)?;
        let clipped_units = match weights.provenance() {
            Provenance::Ipw { clipped, .. } => Some(clipped.clone()),
            _ => None,
        };
        let report = BaselineReport {
            method,
            estimate: point_estimate(weights, problem.data.outcomes())?,
            diagnostics: diagnostics_record(weights, &problem.data, &problem.target)?,
            lambda: *lambda,
            clipped_units,
        };
        let diag_path = out.join(format!("diagnostics_{method}.json"));
        write_json(&diag_path, &report)?;
        manifest.add(&diag_path)?;
    }
    write_scaling(&out, &problem.scaling, &mut manifest)?;
    manifest.write()?;
    log::info!("baselines: wrote {} methods to {}", produced.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct BoundOutput<'a> {
    #[serde(flatten)]
    report: &'a BoundReport,
    sigma: f64,
    /// true when sigma was estimated from ridge residuals instead of being
    /// supplied; plug-in noise scales void the formal coverage statement
    plug_in_sigma: bool,
}

pub fn run_bound(args: &BoundArgs, file: &FileConfig) -> Result<()> {
    let (cfg, scale) = args.problem.resolve(file)?;
    let out = args.io.out(file)?;
    ensure_out(&out)?;
    let problem = load_problem(&args.io, file, scale)?;

    let weights_path = args
        .weights
        .clone()
        .or(file.path("weights")?)
        .ok_or_else(|| Error::InvalidConfig("missing --weights".to_string()))?;
    let (_, raw) = io::read_weights_csv(&weights_path)?;
    let w = WeightVector::new(DVector::from_vec(raw), Provenance::External)?;

    let mut holder = cfg.holder;
    let plug_in_sigma = !args.problem.sigma_explicit(file)?;
    if plug_in_sigma {
        holder.sigma = estimate_sigma_ridge(&problem.data, cfg.lambda)?;
        log::warn!(
            "sigma not supplied; using ridge-residual plug-in {:.4e} (coverage is no longer formal)",
            holder.sigma
        );
    }

    let variant = args.bound.unwrap_or_else(|| {
        match file.string("bound").ok().flatten().as_deref() {
            Some("prop1") => BoundArg::Prop1,
            Some("prop2") => BoundArg::Prop2,
            _ => BoundArg::Worst,
        }
    });
    let report = match variant {
        BoundArg::Worst => worst_case_bound(&w, &problem.data, &problem.target, &holder)?,
        BoundArg::Prop1 => {
            let coeff_text = args
                .mu_even
                .clone()
                .or(file.string("mu-even")?)
                .ok_or_else(|| {
                    Error::InvalidConfig(
                        "--bound prop1 needs --mu-even c0,c1,... (c0 + c1*||x||^2 + ...)".to_string(),
                    )
                })?;
            let coeffs = parse_mu_even(&coeff_text)?;
            let oracle = move |x: &DVector<f64>| -> f64 {
                let r2 = x.norm_squared();
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * r2.powi(k as i32))
                    .sum()
            };
            prop1_bound(&w, &problem.data, &problem.target, &holder, oracle)?
        }
        BoundArg::Prop2 => prop2_bound(&w, &problem.data, &problem.target, &holder)?,
    };

    let mut manifest = Manifest::new(&out);
    let path = out.join("bound.json");
    write_json(
        &path,
        &BoundOutput {
            report: &report,
            sigma: holder.sigma,
            plug_in_sigma,
        },
    )?;
    manifest.add(&path)?;
    write_scaling(&out, &problem.scaling, &mut manifest)?;
    manifest.write()?;
    log::info!("bound: total {:.6e} written to {}", report.total, out.display());
    Ok(())
}

pub fn run_diagnose(args: &DiagnoseArgs, file: &FileConfig) -> Result<()> {
    let problem = load_problem(&args.io, file, false)?;
    let weights_path = args
        .weights
        .clone()
        .or(file.path("weights")?)
        .ok_or_else(|| Error::InvalidConfig("missing --weights".to_string()))?;
    let (_, raw) = io::read_weights_csv(&weights_path)?;
    let w = WeightVector::new(DVector::from_vec(raw), Provenance::External)?;
    let record = diagnostics_record(&w, &problem.data, &problem.target)?;
    let text = serde_json::to_string_pretty(&record)
        .map_err(|e| Error::InvalidConfig(format!("serialization: {e}")))?;
    println!("{text}");
    if let Some(out) = args.io.out.clone().or(file.path("out")?) {
        ensure_out(&out)?;
        let mut manifest = Manifest::new(&out);
        let path = out.join("diagnostics.json");
        std::fs::write(&path, text + "\n")?;
        manifest.add(&path)?;
        manifest.write()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    spec: &'a ScenarioSpec,
    estimator: &'static str,
    reps: usize,
    truth: f64,
    mse: f64,
    mse_standard_error: f64,
}

pub fn run_simulate(args: &SimulateArgs, file: &FileConfig) -> Result<()> {
    let (cfg, _) = args.problem.resolve(file)?;
    let scfg = args.solver.resolve(file)?;
    let out = args
        .out
        .clone()
        .or(file.path("out")?)
        .ok_or_else(|| Error::InvalidConfig("missing --out".to_string()))?;
    ensure_out(&out)?;

    let kind = match args.kind.or_else(|| match file.string("kind").ok().flatten().as_deref() {
        Some("linear") => Some(KindArg::Linear),
        Some("nonlinear") => Some(KindArg::Nonlinear),
        _ => None,
    }) {
        Some(KindArg::Linear) | None => ScenarioKind::Linear,
        Some(KindArg::Nonlinear) => ScenarioKind::Nonlinear,
    };
    let root_seed = scfg.seed;
    let mut spec = ScenarioSpec::new(kind, derive_seed(root_seed, "scenario", 0));
    if let Some(n) = args.n.or(file.usize("n")?) {
        spec.n = n;
    }
    if let Some(d) = args.d.or(file.usize("d")?) {
        spec.d = d;
        spec.beta = vec![1.0; d];
    }
    if let Some(text) = args.beta.clone().or(file.string("beta")?) {
        spec.beta = parse_mu_even(&text)?;
    }
    if let Some(s) = args.noise_sd.or(file.f64("noise-sd")?) {
        spec.noise_sd = s;
    }
    if let Some(g) = args.hull_gap.or(file.f64("hull-gap")?) {
        spec.hull_gap = g;
    }
    let reps = args.reps.or(file.usize("reps")?).unwrap_or(100);

    let estimator = args.estimator.unwrap_or(EstimatorArg::Solver);
    let estimator_name = match estimator {
        EstimatorArg::Solver => "solver",
        EstimatorArg::Ols => "ols",
        EstimatorArg::Ridge => "ridge",
    };
    let table: ReplicationTable = match estimator {
        EstimatorArg::Solver => replicate(
            &spec,
            |d, t| solve(d, t, &cfg, &scfg).map(|o| o.weights),
            reps,
        )?,
        EstimatorArg::Ols => replicate(&spec, |d, t| solve_closed_form_ridge_path(d, t, 0.0), reps)?,
        EstimatorArg::Ridge => {
            replicate(&spec, |d, t| solve_closed_form_ridge_path(d, t, cfg.lambda), reps)?
        }
    };

    let scenario = generate(&spec)?;
    let mut manifest = Manifest::new(&out);

    let reps_path = out.join("reps.csv");
    let mut reps_file = std::fs::File::create(&reps_path)?;
    writeln!(
        reps_file,
        "rep,estimate,truth,error,squared_error,neg_influence,balance_rmse,balance_linf,l2_norm,ess,in_hull,sum_weights"
    )?;
    for row in &table.rows {
        writeln!(
            reps_file,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            row.rep,
            io::fmt_g17(row.estimate),
            io::fmt_g17(row.truth),
            io::fmt_g17(row.error),
            io::fmt_g17(row.squared_error),
            io::fmt_g17(row.diagnostics.negative_influence),
            io::fmt_g17(row.diagnostics.balance_rmse),
            io::fmt_g17(row.diagnostics.balance_linf),
            io::fmt_g17(row.diagnostics.l2_norm),
            io::fmt_g17(row.diagnostics.ess),
            row.diagnostics.in_hull,
            io::fmt_g17(row.diagnostics.sum_weights)
        )?;
    }
    drop(reps_file);
    manifest.add(&reps_path)?;

    let summary_path = out.join("summary.json");
    write_json(
        &summary_path,
        &SimulateSummary {
            spec: &spec,
            estimator: estimator_name,
            reps,
            truth: scenario.truth_at_target(),
            mse: table.mse,
            mse_standard_error: table.mse_standard_error,
        },
    )?;
    manifest.add(&summary_path)?;

    // emit the generated instance in the standard file layout
    let source_path = out.join("scenario_source.csv");
    io::write_source_csv(&source_path, &scenario.data)?;
    manifest.add(&source_path)?;
    let target_path = out.join("scenario_target.csv");
    io::write_target_csv(&target_path, &scenario.target)?;
    manifest.add(&target_path)?;

    manifest.write()?;
    log::info!(
        "simulate: {} reps of {} on the {:?} scenario, mse {:.6e}",
        reps,
        estimator_name,
        kind,
        table.mse
    );
    Ok(())
}
