//! Shared domain types: datasets, target specifications, weight vectors, and
//! the hyperparameter bundles consumed by the solver and the bound
//! calculators.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Source sample: an n×d feature matrix with one outcome per row.
///
/// Immutable after construction; all entries are guaranteed finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    outcomes: DVector<f64>,
    unit_ids: Vec<String>,
}

impl Dataset {
    /// Validates and builds a dataset from a feature matrix and outcomes.
    /// When `unit_ids` is `None`, rows are labeled `"1"..="n"`.
    pub fn new(
        features: DMatrix<f64>,
        outcomes: DVector<f64>,
        unit_ids: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = features.nrows();
        let d = features.ncols();
        if n == 0 {
            return Err(Error::EmptyInput("dataset has no rows"));
        }
        if d == 0 {
            return Err(Error::EmptyInput("dataset has no feature columns"));
        }
        if outcomes.len() != n {
            return Err(Error::DimensionMismatch {
                context: "outcome length vs feature rows",
                expected: n,
                found: outcomes.len(),
            });
        }
        for i in 0..n {
            for j in 0..d {
                if !features[(i, j)].is_finite() {
                    return Err(Error::NonFinite {
                        row: i + 1,
                        column: format!("x{}", j + 1),
                    });
                }
            }
            if !outcomes[i].is_finite() {
                return Err(Error::NonFinite {
                    row: i + 1,
                    column: "y".to_string(),
                });
            }
        }
        let unit_ids = match unit_ids {
            Some(ids) => {
                if ids.len() != n {
                    return Err(Error::DimensionMismatch {
                        context: "unit id count vs feature rows",
                        expected: n,
                        found: ids.len(),
                    });
                }
                ids
            }
            None => (1..=n).map(|i| i.to_string()).collect(),
        };
        Ok(Self {
            features,
            outcomes,
            unit_ids,
        })
    }

    /// Builds a dataset from row-major feature rows plus outcomes.
    pub fn from_rows(rows: &[Vec<f64>], outcomes: &[f64]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("dataset has no rows"));
        }
        let d = rows[0].len();
        if rows.len() != outcomes.len() {
            return Err(Error::DimensionMismatch {
                context: "outcome length vs feature rows",
                expected: rows.len(),
                found: outcomes.len(),
            });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    context: "ragged feature row",
                    expected: d,
                    found: row.len(),
                });
            }
            let _ = i;
        }
        let features = DMatrix::from_row_iterator(rows.len(), d, rows.iter().flatten().copied());
        Self::new(features, DVector::from_column_slice(outcomes), None)
    }

    /// Same features and ids, new outcomes. Used when replicating noise draws.
    pub fn with_outcomes(&self, outcomes: DVector<f64>) -> Result<Self> {
        Self::new(self.features.clone(), outcomes, Some(self.unit_ids.clone()))
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn outcomes(&self) -> &DVector<f64> {
        &self.outcomes
    }

    pub fn unit_ids(&self) -> &[String] {
        &self.unit_ids
    }

    /// Row i as a column vector.
    pub fn row(&self, i: usize) -> DVector<f64> {
        self.features.row(i).transpose()
    }
}

/// Target of estimation: the canonical point x*, optionally accompanied by
/// the target sample it was derived from.
///
/// When built from a sample alone, the point is the column-wise mean
/// (the centroid). When a point is supplied explicitly it takes precedence
/// over the sample mean.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    point: DVector<f64>,
    target_sample: Option<DMatrix<f64>>,
}

impl TargetSpec {
    pub fn from_point(point: DVector<f64>) -> Result<Self> {
        check_finite_vector(&point, "target point")?;
        if point.is_empty() {
            return Err(Error::EmptyInput("target point has no coordinates"));
        }
        Ok(Self {
            point,
            target_sample: None,
        })
    }

    /// Point = centroid of the sample rows.
    pub fn from_sample(sample: DMatrix<f64>) -> Result<Self> {
        if sample.nrows() == 0 || sample.ncols() == 0 {
            return Err(Error::EmptyInput("target sample is empty"));
        }
        check_finite_matrix(&sample, "target sample")?;
        let point = column_means(&sample);
        Ok(Self {
            point,
            target_sample: Some(sample),
        })
    }

    /// Explicit point wins; the sample is retained for propensity fitting.
    pub fn with_sample(point: DVector<f64>, sample: DMatrix<f64>) -> Result<Self> {
        check_finite_vector(&point, "target point")?;
        check_finite_matrix(&sample, "target sample")?;
        if sample.ncols() != point.len() {
            return Err(Error::DimensionMismatch {
                context: "target sample columns vs point length",
                expected: point.len(),
                found: sample.ncols(),
            });
        }
        Ok(Self {
            point,
            target_sample: Some(sample),
        })
    }

    pub fn dim(&self) -> usize {
        self.point.len()
    }

    pub fn point(&self) -> &DVector<f64> {
        &self.point
    }

    pub fn sample(&self) -> Option<&DMatrix<f64>> {
        self.target_sample.as_ref()
    }

    /// Checks the target dimension against a dataset.
    pub fn check_dim(&self, data: &Dataset) -> Result<()> {
        if self.dim() != data.dim() {
            return Err(Error::DimensionMismatch {
                context: "target dimension vs dataset features",
                expected: data.dim(),
                found: self.dim(),
            });
        }
        Ok(())
    }
}

/// Hölder continuity and noise parameters: |μ(x) − μ(x')| ≤ a‖x − x'‖^α,
/// sub-Gaussian noise scale σ, and confidence level δ for the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderParams {
    pub a: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub delta: f64,
}

impl HolderParams {
    pub fn new(a: f64, alpha: f64, sigma: f64, delta: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidConfig(format!("holder constant a must be > 0, got {a}")));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "holder exponent alpha must be > 0, got {alpha}"
            )));
        }
        if !(sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!("sigma must be >= 0, got {sigma}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta must lie in (0,1), got {delta}")));
        }
        Ok(Self { a, alpha, sigma, delta })
    }
}

impl Default for HolderParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            alpha: 1.0,
            sigma: 0.0,
            delta: 0.05,
        }
    }
}

/// Norm used for the imbalance term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PImbalance {
    L2,
    Linf,
}

/// Norm used for the negative-weight penalty term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PExtrap {
    L1,
    L2,
    Linf,
}

/// Hyperparameters of the three-term weight objective.
///
/// `centered_penalty` switches the per-unit penalty scale from ‖X_i‖^α to
/// ‖X_i − x*‖^α; the latter matches the scale appearing in the error bounds,
/// the former is the default objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub lambda: f64,
    pub gamma: f64,
    pub p_imbalance: PImbalance,
    pub p_extrap: PExtrap,
    pub normalize_sum_to_one: bool,
    pub centered_penalty: bool,
    pub holder: HolderParams,
}

impl ProblemConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        HolderParams::new(
            self.holder.a,
            self.holder.alpha,
            self.holder.sigma.max(0.0),
            self.holder.delta,
        )?;
        Ok(())
    }
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            gamma: 0.1,
            p_imbalance: PImbalance::L2,
            p_extrap: PExtrap::L1,
            normalize_sum_to_one: true,
            centered_penalty: false,
            holder: HolderParams::default(),
        }
    }
}

/// First-order solver settings. The defaults mirror common Adam practice:
/// learning rate 0.01 and 5000 epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".to_string()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be >= 0, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 5000,
            tolerance: 1e-10,
            seed: 0,
        }
    }
}

/// How a weight vector was produced, including the hyperparameters used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Provenance {
    Solver { config: ProblemConfig },
    Ridge { lambda: f64 },
    Ipw { normalized: bool, clipped: Vec<usize> },
    Augmented,
    DrRidge { lambda: f64 },
    External,
}

impl Provenance {
    pub fn method(&self) -> &'static str {
        match self {
            Provenance::Solver { .. } => "solver",
            Provenance::Ridge { .. } => "ridge",
            Provenance::Ipw { .. } => "ipw",
            Provenance::Augmented => "augmented",
            Provenance::DrRidge { .. } => "dr-ridge",
            Provenance::External => "external",
        }
    }
}

/// Estimated per-unit weights plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: DVector<f64>,
    provenance: Provenance,
}

impl WeightVector {
    pub fn new(weights: DVector<f64>, provenance: Provenance) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyInput("weight vector is empty"));
        }
        check_finite_vector(&weights, "weight")?;
        Ok(Self { weights, provenance })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn method(&self) -> &'static str {
        self.provenance.method()
    }

    pub fn check_len(&self, data: &Dataset) -> Result<()> {
        if self.len() != data.n() {
            return Err(Error::DimensionMismatch {
                context: "weight length vs dataset rows",
                expected: data.n(),
                found: self.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn check_finite_vector(v: &DVector<f64>, what: &str) -> Result<()> {
    for (i, x) in v.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFinite {
                row: i + 1,
                column: what.to_string(),
            });
        }
    }
    Ok(())
}

pub(crate) fn check_finite_matrix(m: &DMatrix<f64>, what: &str) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite {
                    row: i + 1,
                    column: format!("{what} column {}", j + 1),
                });
            }
        }
    }
    Ok(())
}

pub(crate) fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows() as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_rows_passes_through_identity() {
        let data = Dataset::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 2.0]).unwrap();
        assert_eq!(data.n(), 2);
        assert_eq!(data.dim(), 2);
        assert_eq!(data.outcomes()[1], 2.0);
        assert_eq!(data.unit_ids(), &["1", "2"]);
    }

    #[test]
    fn nan_feature_names_the_cell() {
        let err = Dataset::from_rows(&[vec![1.0, f64::NAN]], &[1.0]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 1"), "{msg}");
        assert!(msg.contains("x2"), "{msg}");
    }

    #[test]
    fn outcome_length_mismatch_is_an_error() {
        let err = Dataset::from_rows(&[vec![1.0], vec![2.0]], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(Dataset::from_rows(&[], &[]).is_err());
    }

    #[test]
    fn target_from_sample_takes_column_means() {
        let sample = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 4.0, 6.0]);
        let t = TargetSpec::from_sample(sample).unwrap();
        assert_eq!(t.point().as_slice(), &[2.0, 4.0]);
        assert!(t.sample().is_some());
    }

    #[test]
    fn explicit_point_wins_over_sample_mean() {
        let sample = DMatrix::from_row_slice(2, 1, &[0.0, 2.0]);
        let t = TargetSpec::with_sample(DVector::from_column_slice(&[5.0]), sample).unwrap();
        assert_eq!(t.point()[0], 5.0);
    }

    #[test]
    fn holder_params_reject_bad_delta() {
        assert!(HolderParams::new(1.0, 1.0, 0.0, 0.0).is_err());
        assert!(HolderParams::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(HolderParams::new(1.0, 1.0, -0.1, 0.5).is_err());
    }

    #[test]
    fn solver_config_defaults() {
        let cfg = SolverConfig::default();
        assert_eq!(cfg.learning_rate, 0.01);
        assert_eq!(cfg.epochs, 5000);
        cfg.validate().unwrap();
    }

    #[test]
    fn provenance_method_tags() {
        assert_eq!(Provenance::Ridge { lambda: 0.0 }.method(), "ridge");
        assert_eq!(
            Provenance::Solver {
                config: ProblemConfig::default()
            }
            .method(),
            "solver"
        );
        assert_eq!(Provenance::DrRidge { lambda: 1.0 }.method(), "dr-ridge");
    }
}
