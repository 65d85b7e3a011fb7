//! Weight solver for the three-term balancing objective
//!
//! ```text
//! minimize  ‖Σ_i w_i X_i − x*‖²_p  +  λ‖w‖²₂  +  γ‖( 1(w_i<0)·|w_i|·s_i )_i‖_q
//! ```
//!
//! with per-unit penalty scales s_i = ‖X_i‖₂^α (or ‖X_i − x*‖₂^α when the
//! centered penalty is selected), p ∈ {2, ∞} and q ∈ {1, 2, ∞}. The first
//! term controls imbalance against the target, the second the dispersion of
//! the weights, the third the mass placed on negatively weighted units.
//!
//! γ = 0 recovers the classic minimum-variance balancing problem; γ → ∞
//! approaches a hard non-negativity constraint. The objective is convex but
//! nonsmooth, so minimization uses Adam over subgradients from uniform
//! initialization, keeping the best-objective iterate.
//!
//! For γ = 0 and p = 2 the minimizer has the ridge-regression implied-weight
//! closed form w_i = x*ᵀ(XᵀX + λI)⁻¹X_i, available here as a fast path and
//! as an oracle for the iterative route.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, PExtrap, PImbalance, ProblemConfig, Provenance, SolverConfig, TargetSpec, WeightVector};
use crate::error::{Error, Result};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const NORMALIZE_SUM_GUARD: f64 = 1e-8;

/// Value of each objective term at a weight vector. The dispersion and
/// extrapolation terms are reported before multiplication by λ and γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub imbalance_term: f64,
    pub dispersion_term: f64,
    pub extrapolation_term: f64,
    pub total: f64,
}

/// Objective value per epoch, exportable as CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub epoch: usize,
    pub total: f64,
    pub term_a: f64,
    pub term_b: f64,
    pub term_c: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
    pub stopped_early: bool,
    pub best_epoch: usize,
}

/// Solver output: weights, their objective breakdown, and the per-epoch trace.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub weights: WeightVector,
    pub objective: ObjectiveBreakdown,
    pub trace: ConvergenceTrace,
}

/// Per-unit penalty scales s_i for the extrapolation term.
fn penalty_scales(data: &Dataset, target: &TargetSpec, cfg: &ProblemConfig) -> DVector<f64> {
    let n = data.n();
    let x = data.features();
    let alpha = cfg.holder.alpha;
    DVector::from_iterator(
        n,
        (0..n).map(|i| {
            let norm = if cfg.centered_penalty {
                (x.row(i).transpose() - target.point()).norm()
            } else {
                x.row(i).norm()
            };
            norm.powf(alpha)
        }),
    )
}

/// Imbalance residual r = Σ_i w_i X_i − x*.
fn imbalance_residual(w: &DVector<f64>, data: &Dataset, target: &TargetSpec) -> DVector<f64> {
    data.features().tr_mul(w) - target.point()
}

fn check_inputs(w: &DVector<f64>, data: &Dataset, target: &TargetSpec) -> Result<()> {
    target.check_dim(data)?;
    if w.len() != data.n() {
        return Err(Error::DimensionMismatch {
            context: "weight length vs dataset rows",
            expected: data.n(),
            found: w.len(),
        });
    }
    Ok(())
}

/// Evaluates all three terms of the objective at `w`.
pub fn objective(
    w: &DVector<f64>,
    data: &Dataset,
    target: &TargetSpec,
    cfg: &ProblemConfig,
) -> Result<ObjectiveBreakdown> {
    check_inputs(w, data, target)?;
    cfg.validate()?;
    let scales = penalty_scales(data, target, cfg);
    Ok(objective_with_scales(w, data, target, cfg, &scales))
}

fn objective_with_scales(
    w: &DVector<f64>,
    data: &Dataset,
    target: &TargetSpec,
    cfg: &ProblemConfig,
    scales: &DVector<f64>,
) -> ObjectiveBreakdown {
    let r = imbalance_residual(w, data, target);
    let term_a = match cfg.p_imbalance {
        PImbalance::L2 => r.norm_squared(),
        PImbalance::Linf => {
            let m = r.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs()));
            m * m
        }
    };
    let term_b = w.norm_squared();
    let term_c = extrapolation_norm(w, scales, cfg.p_extrap);
    ObjectiveBreakdown {
        imbalance_term: term_a,
        dispersion_term: term_b,
        extrapolation_term: term_c,
        total: term_a + cfg.lambda * term_b + cfg.gamma * term_c,
    }
}

/// q-norm of the vector v_i = 1(w_i < 0)·|w_i|·s_i. The `0.0 +` keeps empty
/// sums from surfacing as -0.0 in reports.
fn extrapolation_norm(w: &DVector<f64>, scales: &DVector<f64>, q: PExtrap) -> f64 {
    match q {
        PExtrap::L1 => {
            0.0 + w
                .iter()
                .zip(scales.iter())
                .filter(|(&wi, _)| wi < 0.0)
                .map(|(&wi, &si)| -wi * si)
                .sum::<f64>()
        }
        PExtrap::L2 => (0.0
            + w.iter()
                .zip(scales.iter())
                .filter(|(&wi, _)| wi < 0.0)
                .map(|(&wi, &si)| (wi * si).powi(2))
                .sum::<f64>())
        .sqrt(),
        PExtrap::Linf => w
            .iter()
            .zip(scales.iter())
            .filter(|(&wi, _)| wi < 0.0)
            .map(|(&wi, &si)| -wi * si)
            .fold(0.0, f64::max),
    }
}

/// A subgradient of the total objective at `w`.
///
/// At the kink w_i = 0 the negative-part contribution is taken as 0, the
/// same element automatic differentiation of max(−w, 0) picks. For ∞-norm
/// terms, ties among maximizing coordinates share the subgradient mass
/// equally, which stays inside the subdifferential and is deterministic.
pub fn subgradient(
    w: &DVector<f64>,
    data: &Dataset,
    target: &TargetSpec,
    cfg: &ProblemConfig,
) -> Result<DVector<f64>> {
    check_inputs(w, data, target)?;
    cfg.validate()?;
    let scales = penalty_scales(data, target, cfg);
    let mut g = DVector::zeros(w.len());
    subgradient_into(w, data, target, cfg, &scales, &mut g);
    Ok(g)
}

fn subgradient_into(
    w: &DVector<f64>,
    data: &Dataset,
    target: &TargetSpec,
    cfg: &ProblemConfig,
    scales: &DVector<f64>,
    out: &mut DVector<f64>,
) {
    let x = data.features();
    let r = imbalance_residual(w, data, target);

    // term (a)
    match cfg.p_imbalance {
        PImbalance::L2 => {
            // ∇‖r‖²₂ = 2 X r
            out.gemv(2.0, x, &r, 0.0);
        }
        PImbalance::Linf => {
            let m = r.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs()));
            out.fill(0.0);
            if m > 0.0 {
                let ties: Vec<usize> = (0..r.len()).filter(|&j| r[j].abs() == m).collect();
                let share = 2.0 * m / ties.len() as f64;
                for &j in &ties {
                    let s = share * r[j].signum();
                    out.axpy(s, &x.column(j), 1.0);
                }
            }
        }
    }

    // term (b)
    out.axpy(2.0 * cfg.lambda, w, 1.0);

    // term (c): v_i = 1(w_i<0)·|w_i|·s_i, with dv_i/dw_i = −s_i on w_i < 0
    if cfg.gamma > 0.0 {
        match cfg.p_extrap {
            PExtrap::L1 => {
                for i in 0..w.len() {
                    if w[i] < 0.0 {
                        out[i] -= cfg.gamma * scales[i];
                    }
                }
            }
            PExtrap::L2 => {
                let norm = extrapolation_norm(w, scales, PExtrap::L2);
                if norm > 0.0 {
                    for i in 0..w.len() {
                        if w[i] < 0.0 {
                            let vi = -w[i] * scales[i];
                            out[i] -= cfg.gamma * scales[i] * vi / norm;
                        }
                    }
                }
            }
            PExtrap::Linf => {
                let norm = extrapolation_norm(w, scales, PExtrap::Linf);
                if norm > 0.0 {
                    let ties: Vec<usize> = (0..w.len())
                        .filter(|&i| w[i] < 0.0 && -w[i] * scales[i] == norm)
                        .collect();
                    let share = cfg.gamma / ties.len() as f64;
                    for &i in &ties {
                        out[i] -= share * scales[i];
                    }
                }
            }
        }
    }
}

/// Minimizes the objective with Adam (moment decays 0.9/0.999, epsilon 1e-8)
/// from uniform initialization w_i = 1/n.
///
/// When `cfg.normalize_sum_to_one` is set, the weights are rescaled to sum
/// to one after every update and the subgradient fed to Adam is chained
/// through that rescale (g − 𝟙·wᵀg at Σw = 1, as automatic differentiation
/// of w/Σw produces). Differentiating around the rescale instead would let
/// its common-mode cancellation trap the iterates at uniform weights
/// whenever all gradient components share a sign. The rescale is skipped
/// with a warning if the sum falls within 1e-8 of zero. Runs for
/// `scfg.epochs` steps or until the objective change drops below
/// `scfg.tolerance`, and returns the iterate with the best objective seen,
/// which is never worse than initialization.
pub fn solve(
    data: &Dataset,
    target: &TargetSpec,
    cfg: &ProblemConfig,
    scfg: &SolverConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    scfg.validate()?;
    target.check_dim(data)?;
    let n = data.n();
    let scales = penalty_scales(data, target, cfg);

    let mut w = DVector::from_element(n, 1.0 / n as f64);
    let mut m: DVector<f64> = DVector::zeros(n);
    let mut v: DVector<f64> = DVector::zeros(n);
    let mut g: DVector<f64> = DVector::zeros(n);

    let mut trace = ConvergenceTrace::default();
    let first = objective_with_scales(&w, data, target, cfg, &scales);
    if !first.total.is_finite() {
        return Err(Error::NonFiniteObjective { epoch: 0 });
    }
    trace.rows.push(TraceRow {
        epoch: 0,
        total: first.total,
        term_a: first.imbalance_term,
        term_b: first.dispersion_term,
        term_c: first.extrapolation_term,
    });
    let mut best = first;
    let mut best_w = w.clone();
    let mut best_epoch = 0;
    let mut prev_total = first.total;

    let mut beta1_t = 1.0;
    let mut beta2_t = 1.0;
    for epoch in 1..=scfg.epochs {
        subgradient_into(&w, data, target, cfg, &scales, &mut g);
        if cfg.normalize_sum_to_one {
            let s = w.sum();
            if s.abs() > NORMALIZE_SUM_GUARD {
                // chain rule through u ↦ u/Σu evaluated at the rescaled point
                let common = w.dot(&g) / s;
                g.add_scalar_mut(-common);
                g /= s;
            }
        }
        beta1_t *= ADAM_BETA1;
        beta2_t *= ADAM_BETA2;
        let bc1 = 1.0 - beta1_t;
        let bc2 = 1.0 - beta2_t;
        for i in 0..n {
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
            let m_hat: f64 = m[i] / bc1;
            let v_hat: f64 = v[i] / bc2;
            w[i] -= scfg.learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
        if cfg.normalize_sum_to_one {
            let s = w.sum();
            if s.abs() > NORMALIZE_SUM_GUARD {
                w /= s;
            } else {
                log::warn!("epoch {epoch}: weight sum {s:.3e} too close to zero, skipping normalization");
            }
        }

        let obj = objective_with_scales(&w, data, target, cfg, &scales);
        if !obj.total.is_finite() {
            return Err(Error::NonFiniteObjective { epoch });
        }
        log::debug!(
            "epoch {epoch}: total={:.6e} a={:.3e} b={:.3e} c={:.3e}",
            obj.total,
            obj.imbalance_term,
            obj.dispersion_term,
            obj.extrapolation_term
        );
        trace.rows.push(TraceRow {
            epoch,
            total: obj.total,
            term_a: obj.imbalance_term,
            term_b: obj.dispersion_term,
            term_c: obj.extrapolation_term,
        });
        if obj.total < best.total {
            best = obj;
            best_w.copy_from(&w);
            best_epoch = epoch;
        }
        if (obj.total - prev_total).abs() < scfg.tolerance {
            trace.stopped_early = true;
            break;
        }
        prev_total = obj.total;
    }
    trace.best_epoch = best_epoch;

    let weights = WeightVector::new(
        best_w,
        Provenance::Solver { config: cfg.clone() },
    )?;
    Ok(SolveResult {
        weights,
        objective: best,
        trace,
    })
}

/// Ridge-regression implied weights w_i = x*ᵀ(XᵀX + λI)⁻¹X_i.
///
/// Exact minimizer of the γ = 0, p = 2, unnormalized objective; λ = 0 gives
/// the OLS implied weights and requires X to have full column rank.
pub fn solve_closed_form_ridge_path(
    data: &Dataset,
    target: &TargetSpec,
    lambda: f64,
) -> Result<WeightVector> {
    target.check_dim(data)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
    }
    let z = ridge_gram_solve(data.features(), target.point(), lambda)?;
    let w = data.features() * z;
    WeightVector::new(w, Provenance::Ridge { lambda })
}

/// Solves (XᵀX + λI) z = b by Cholesky.
pub(crate) fn ridge_gram_solve(x: &DMatrix<f64>, b: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let d = x.ncols();
    let mut gram = x.tr_mul(x);
    for j in 0..d {
        gram[(j, j)] += lambda;
    }
    match gram.cholesky() {
        Some(chol) => Ok(chol.solve(b)),
        None => Err(Error::SingularSystem),
    }
}

impl ConvergenceTrace {
    pub fn final_total(&self) -> Option<f64> {
        self.rows.last().map(|r| r.total)
    }
}
