//! Scalar weight diagnostics: negative influence, balance error, weight
//! norms, effective sample size, and convex-hull membership of the target.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, PImbalance, TargetSpec, WeightVector};
use crate::error::{Error, Result};
use crate::simplex::simplex_least_squares;

/// Residual threshold under which the target counts as inside the hull.
pub const HULL_RESIDUAL_TOL: f64 = 1e-7;
/// Projected-gradient iterations for the hull membership solve.
pub const HULL_PG_STEPS: usize = 500;

/// One-line summary of a weight vector against a dataset and target.
///
/// `balance_rmse` divides the coordinate gaps by √d (a per-coordinate root
/// mean square); `balance_l2` is the unscaled gap norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub negative_influence: f64,
    pub balance_rmse: f64,
    pub balance_linf: f64,
    pub balance_l2: f64,
    pub l2_norm: f64,
    pub ess: f64,
    pub in_hull: bool,
    pub sum_weights: f64,
}

/// Share of total absolute weight sitting on negatively weighted units:
/// Σ 1(w_i<0)|w_i| / Σ|w_i|.
pub fn negative_influence(w: &DVector<f64>) -> Result<f64> {
    let total: f64 = w.iter().map(|x| x.abs()).sum();
    if total == 0.0 {
        return Err(Error::AllZeroWeights);
    }
    let neg: f64 = 0.0 + w.iter().filter(|&&x| x < 0.0).map(|x| -x).sum::<f64>();
    Ok(neg / total)
}

/// Balance error between the reweighted source and the target point.
/// p = L2 gives the per-coordinate RMSE √(‖Σw_iX_i − x*‖²₂/d); p = Linf the
/// largest absolute coordinate gap.
pub fn balance(w: &DVector<f64>, data: &Dataset, target: &TargetSpec, p: PImbalance) -> Result<f64> {
    target.check_dim(data)?;
    if w.len() != data.n() {
        return Err(Error::DimensionMismatch {
            context: "weight length vs dataset rows",
            expected: data.n(),
            found: w.len(),
        });
    }
    let r = data.features().tr_mul(w) - target.point();
    Ok(match p {
        PImbalance::L2 => (r.norm_squared() / data.dim() as f64).sqrt(),
        PImbalance::Linf => r.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs())),
    })
}

/// Kish effective sample size (Σw)²/Σw².
pub fn ess(w: &DVector<f64>) -> Result<f64> {
    let sumsq = w.norm_squared();
    if sumsq == 0.0 {
        return Err(Error::AllZeroWeights);
    }
    let s = w.sum();
    Ok(s * s / sumsq)
}

/// Whether x* admits a representation Σw_iX_i = x* with w on the simplex,
/// decided by simplex-constrained least squares and a residual threshold.
pub fn in_convex_hull(data: &Dataset, target: &TargetSpec) -> Result<bool> {
    Ok(hull_distance(data, target)? <= HULL_RESIDUAL_TOL)
}

/// Euclidean distance from x* to the convex hull of the source rows
/// (up to projected-gradient accuracy).
pub fn hull_distance(data: &Dataset, target: &TargetSpec) -> Result<f64> {
    target.check_dim(data)?;
    let fit = simplex_least_squares(data.features(), target.point(), HULL_PG_STEPS);
    Ok(fit.residual_norm)
}

/// Computes the full record for a weight vector.
pub fn diagnostics_record(
    w: &WeightVector,
    data: &Dataset,
    target: &TargetSpec,
) -> Result<DiagnosticsRecord> {
    w.check_len(data)?;
    let weights = w.weights();
    let r = data.features().tr_mul(weights) - target.point();
    Ok(DiagnosticsRecord {
        negative_influence: negative_influence(weights)?,
        balance_rmse: (r.norm_squared() / data.dim() as f64).sqrt(),
        balance_linf: r.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs())),
        balance_l2: r.norm(),
        l2_norm: weights.norm(),
        ess: ess(weights)?,
        in_hull: in_convex_hull(data, target)?,
        sum_weights: weights.sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dataset(rows: &[Vec<f64>]) -> Dataset {
        let y: Vec<f64> = rows.iter().map(|_| 0.0).collect();
        Dataset::from_rows(rows, &y).unwrap()
    }

    fn target(p: &[f64]) -> TargetSpec {
        TargetSpec::from_point(DVector::from_column_slice(p)).unwrap()
    }

    #[test]
    fn negative_influence_formula() {
        assert_abs_diff_eq!(
            negative_influence(&DVector::from_column_slice(&[-1.0, 2.0])).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-15
        );
        assert_eq!(
            negative_influence(&DVector::from_column_slice(&[0.3, 0.7])).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            negative_influence(&DVector::from_column_slice(&[-1.0, 1.0])).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert!(negative_influence(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn negative_influence_scale_invariant() {
        let w = DVector::from_column_slice(&[-0.25, 0.5, 1.5]);
        let a = negative_influence(&w).unwrap();
        let b = negative_influence(&(37.5 * w)).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-15);
    }

    #[test]
    fn balance_values() {
        let data = dataset(&[vec![1.0], vec![2.0]]);
        let t = target(&[3.0]);
        let w = DVector::from_column_slice(&[0.0, 1.0]);
        assert_abs_diff_eq!(balance(&w, &data, &t, PImbalance::L2).unwrap(), 1.0, epsilon = 1e-12);
        let exact = DVector::from_column_slice(&[-1.0, 2.0]);
        assert_abs_diff_eq!(
            balance(&exact, &data, &t, PImbalance::L2).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn balance_matches_plain_loop() {
        let rows = vec![vec![0.3, -1.0, 2.0], vec![1.4, 0.2, 0.9], vec![-0.5, 0.8, 1.1]];
        let data = dataset(&rows);
        let t = target(&[0.25, 0.5, -0.75]);
        let w = DVector::from_column_slice(&[0.4, -0.2, 0.9]);
        let mut gaps = [0.0; 3];
        for j in 0..3 {
            let mut s = 0.0;
            for i in 0..3 {
                s += w[i] * rows[i][j];
            }
            gaps[j] = s - t.point()[j];
        }
        let rmse = (gaps.iter().map(|g| g * g).sum::<f64>() / 3.0).sqrt();
        let linf = gaps.iter().fold(0.0_f64, |acc, g| acc.max(g.abs()));
        assert_abs_diff_eq!(balance(&w, &data, &t, PImbalance::L2).unwrap(), rmse, epsilon = 1e-12);
        assert_abs_diff_eq!(balance(&w, &data, &t, PImbalance::Linf).unwrap(), linf, epsilon = 1e-12);
    }

    #[test]
    fn ess_values() {
        let n = 4;
        let uniform = DVector::from_element(n, 1.0 / n as f64);
        assert_abs_diff_eq!(ess(&uniform).unwrap(), n as f64, epsilon = 1e-12);
        let onehot = DVector::from_column_slice(&[0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(ess(&onehot).unwrap(), 1.0, epsilon = 1e-12);
        let w = DVector::from_column_slice(&[0.5, 0.5, 0.0]);
        assert_abs_diff_eq!(ess(&w).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn hull_membership_cases() {
        let data = dataset(&[vec![1.0], vec![2.0]]);
        assert!(in_convex_hull(&data, &target(&[1.5])).unwrap());
        assert!(!in_convex_hull(&data, &target(&[3.0])).unwrap());
        // a vertex is inside
        assert!(in_convex_hull(&data, &target(&[2.0])).unwrap());
    }

    #[test]
    fn hull_membership_invariant_under_row_permutation() {
        let rows = vec![vec![0.1, 0.9], vec![0.8, 0.2], vec![0.5, 0.6]];
        let mut permuted = rows.clone();
        permuted.rotate_left(1);
        let t = target(&[0.45, 0.55]);
        assert_eq!(
            in_convex_hull(&dataset(&rows), &t).unwrap(),
            in_convex_hull(&dataset(&permuted), &t).unwrap()
        );
    }
}
