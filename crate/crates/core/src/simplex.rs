//! Least squares over the probability simplex via projected gradient.
//!
//! Used for convex-hull membership tests and as the target-placement
//! primitive in the synthetic scenarios: the residual norm of
//! min_{w ∈ Δ} ‖Xᵀw − x*‖₂ is the distance from x* to the convex hull of
//! the rows of X.

use nalgebra::{DMatrix, DVector};

/// Euclidean projection onto the probability simplex {w ≥ 0, Σw = 1}.
pub fn project_to_simplex(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len();
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    let mut rho = 0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            rho = k + 1;
            theta = t;
        }
    }
    debug_assert!(rho > 0);
    DVector::from_iterator(n, v.iter().map(|&x| (x - theta).max(0.0)))
}

/// Result of the simplex-constrained least-squares solve.
#[derive(Debug, Clone)]
pub struct SimplexFit {
    pub weights: DVector<f64>,
    /// ‖Xᵀw − x*‖₂ at the returned weights.
    pub residual_norm: f64,
}

/// Minimizes ‖Xᵀw − x*‖²₂ over the simplex with `steps` projected-gradient
/// iterations at step size 1/L, L = 2σ_max(X)².
pub fn simplex_least_squares(x: &DMatrix<f64>, point: &DVector<f64>, steps: usize) -> SimplexFit {
    let n = x.nrows();
    let lipschitz = 2.0 * spectral_norm_squared(x).max(f64::MIN_POSITIVE);
    let step = 1.0 / lipschitz;
    let mut w = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..steps {
        let r = x.tr_mul(&w) - point;
        let grad = x * (2.0 * r);
        w = project_to_simplex(&(&w - step * grad));
    }
    let residual_norm = (x.tr_mul(&w) - point).norm();
    SimplexFit {
        weights: w,
        residual_norm,
    }
}

/// λ_max(XᵀX) by power iteration on the d×d Gram matrix.
fn spectral_norm_squared(x: &DMatrix<f64>) -> f64 {
    let gram = x.tr_mul(x);
    let d = gram.nrows();
    let mut v = DVector::from_element(d, 1.0 / (d as f64).sqrt());
    let mut eig = 0.0;
    for _ in 0..100 {
        let mut next = &gram * &v;
        let norm = next.norm();
        if norm == 0.0 {
            return 0.0;
        }
        next /= norm;
        eig = norm;
        v = next;
    }
    eig
}
