//! Implied-weight baselines: IPW via an internal logistic fit, ridge
//! implied smoother weights, and augmented / doubly robust combinations.
//!
//! All of these estimators have the linear-smoother form μ̂(x*) = Σ w_i Y_i;
//! what differs is how the weights are produced. IPW weights are always
//! positive; ridge implied weights and the doubly robust adjustment are
//! free to go negative, which is exactly the behavior the solver's penalty
//! regulates.

use nalgebra::{DMatrix, DVector};

use crate::data::{Dataset, Provenance, TargetSpec, WeightVector};
use crate::error::{Error, Result};
use crate::solver::ridge_gram_solve;

/// Clipping bound for fitted propensities (keeps odds finite).
pub const PROPENSITY_CLIP: f64 = 1e-6;
const IRLS_MAX_ITER: usize = 100;
const IRLS_GRAD_TOL: f64 = 1e-8;
const IRLS_JITTER: f64 = 1e-8;

/// Logistic model of membership in the source sample (label 1 = source,
/// label 0 = target). Coefficients are (intercept, β₁, …, β_d).
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityModel {
    pub coefficients: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl PropensityModel {
    /// Fitted probability ê(x) of belonging to the source.
    pub fn predict(&self, x: &DVector<f64>) -> f64 {
        let eta = self.coefficients[0]
            + self
                .coefficients
                .rows(1, self.coefficients.len() - 1)
                .dot(x);
        sigmoid(eta)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Fits the source-membership propensity by iteratively reweighted least
/// squares with a 1e-8 ridge jitter on the normal equations.
///
/// Non-convergence after 100 iterations signals (near-)perfect separation,
/// for which the MLE diverges.
pub fn fit_propensity(source: &Dataset, target_sample: &DMatrix<f64>) -> Result<PropensityModel> {
    let n = source.n();
    let m = target_sample.nrows();
    if m == 0 {
        return Err(Error::SingleClass);
    }
    if target_sample.ncols() != source.dim() {
        return Err(Error::DimensionMismatch {
            context: "target sample columns vs dataset features",
            expected: source.dim(),
            found: target_sample.ncols(),
        });
    }
    let d = source.dim();
    let rows = n + m;
    // design [1 | X] over the stacked source and target rows
    let mut z = DMatrix::zeros(rows, d + 1);
    let mut y = DVector::zeros(rows);
    for i in 0..n {
        z[(i, 0)] = 1.0;
        for j in 0..d {
            z[(i, j + 1)] = source.features()[(i, j)];
        }
        y[i] = 1.0;
    }
    for i in 0..m {
        z[(n + i, 0)] = 1.0;
        for j in 0..d {
            z[(n + i, j + 1)] = target_sample[(i, j)];
        }
    }

    let mut beta = DVector::zeros(d + 1);
    for iter in 1..=IRLS_MAX_ITER {
        let eta = &z * &beta;
        let p = eta.map(sigmoid);
        let residual = &y - &p;
        let grad = z.tr_mul(&residual);
        if !beta.iter().all(|b| b.is_finite()) {
            return Err(Error::PerfectSeparation { iterations: iter });
        }
        if grad.amax() <= IRLS_GRAD_TOL {
            // a vanishing gradient with every unit classified to saturation
            // means the likelihood is maximized at infinity
            if residual.amax() < 1e-6 {
                return Err(Error::PerfectSeparation { iterations: iter });
            }
            return Ok(PropensityModel {
                coefficients: beta,
                converged: true,
                iterations: iter - 1,
            });
        }
        // H = ZᵀWZ + jitter·I with W = diag(p(1−p))
        let mut h = DMatrix::zeros(d + 1, d + 1);
        for r in 0..rows {
            let wgt = p[r] * (1.0 - p[r]);
            let zr = z.row(r);
            for a in 0..=d {
                for b in a..=d {
                    h[(a, b)] += wgt * zr[a] * zr[b];
                }
            }
        }
        for a in 0..=d {
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
            h[(a, a)] += IRLS_JITTER;
        }
        let step = h.cholesky().ok_or(Error::SingularSystem)?.solve(&grad);
        beta += step;
    }
    Err(Error::PerfectSeparation {
        iterations: IRLS_MAX_ITER,
    })
}

/// Odds-form IPW weights w_i ∝ ê(X_i)/(1 − ê(X_i)) for the source units.
///
/// Fitted propensities are clipped to [1e-6, 1 − 1e-6]; clipped units are
/// recorded in the provenance. With `normalize` the weights are rescaled to
/// sum to one (the Hájek form). All outputs are strictly positive.
pub fn ipw_att_weights(
    model: &PropensityModel,
    source: &Dataset,
    normalize: bool,
) -> Result<WeightVector> {
    if model.coefficients.len() != source.dim() + 1 {
        return Err(Error::DimensionMismatch {
            context: "propensity coefficients vs dataset features",
            expected: source.dim() + 1,
            found: model.coefficients.len(),
        });
    }
    let n = source.n();
    let mut w = DVector::zeros(n);
    let mut clipped = Vec::new();
    for i in 0..n {
        let e = model.predict(&source.row(i));
        let e_clipped = e.clamp(PROPENSITY_CLIP, 1.0 - PROPENSITY_CLIP);
        if e_clipped != e {
            clipped.push(i);
        }
        w[i] = e_clipped / (1.0 - e_clipped);
    }
    if normalize {
        let s = w.sum();
        w /= s;
    }
    WeightVector::new(
        w,
        Provenance::Ipw {
            normalized: normalize,
            clipped,
        },
    )
}

/// Combines initial weights with an arbitrary linear smoother:
/// ŵ_i = w⁰_i + ω_i(x*) − Σ_j w⁰_j ω_i(X_j).
///
/// `smoother_weights` maps a query point to the smoother's n training
/// weights. The output can carry negative entries even when both inputs are
/// nonnegative.
pub fn augmented_weights<F>(
    w0: &WeightVector,
    smoother_weights: F,
    data: &Dataset,
    target: &TargetSpec,
) -> Result<WeightVector>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    w0.check_len(data)?;
    target.check_dim(data)?;
    let n = data.n();
    let omega_star = smoother_weights(target.point());
    if omega_star.len() != n {
        return Err(Error::DimensionMismatch {
            context: "smoother weight length vs dataset rows",
            expected: n,
            found: omega_star.len(),
        });
    }
    let mut adjustment = omega_star;
    for j in 0..n {
        let omega_j = smoother_weights(&data.row(j));
        if omega_j.len() != n {
            return Err(Error::DimensionMismatch {
                context: "smoother weight length vs dataset rows",
                expected: n,
                found: omega_j.len(),
            });
        }
        adjustment.axpy(-w0.weights()[j], &omega_j, 1.0);
    }
    WeightVector::new(w0.weights() + adjustment, Provenance::Augmented)
}

/// Ridge implied smoother weights as a reusable function of the query point:
/// ω(x) = X(XᵀX + λI)⁻¹x.
pub fn ridge_smoother(data: &Dataset, lambda: f64) -> Result<impl Fn(&DVector<f64>) -> DVector<f64> + '_> {
    let d = data.dim();
    let mut gram = data.features().tr_mul(data.features());
    for j in 0..d {
        gram[(j, j)] += lambda;
    }
    let chol = gram.cholesky().ok_or(Error::SingularSystem)?;
    Ok(move |x: &DVector<f64>| data.features() * chol.solve(x))
}

/// Doubly robust implied weights with a ridge outcome model:
/// ŵ_i = w⁰_i + (x* − Xᵀw⁰)ᵀ(XᵀX + λI)⁻¹X_i.
pub fn dr_ridge_weights(
    w0: &WeightVector,
    data: &Dataset,
    target: &TargetSpec,
    lambda: f64,
) -> Result<WeightVector> {
    w0.check_len(data)?;
    target.check_dim(data)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
    }
    let residual = target.point() - data.features().tr_mul(w0.weights());
    let z = ridge_gram_solve(data.features(), &residual, lambda)?;
    let w = w0.weights() + data.features() * z;
    WeightVector::new(w, Provenance::DrRidge { lambda })
}

/// Weighted-outcome point estimate μ̂ = Σ w_i Y_i.
pub fn point_estimate(w: &WeightVector, outcomes: &DVector<f64>) -> Result<f64> {
    if w.len() != outcomes.len() {
        return Err(Error::DimensionMismatch {
            context: "weight length vs outcome length",
            expected: outcomes.len(),
            found: w.len(),
        });
    }
    Ok(w.weights().dot(outcomes))
}
