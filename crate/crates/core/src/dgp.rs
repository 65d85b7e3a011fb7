//! Synthetic scenarios: small uniform feature clouds with the target point
//! pushed outside the convex hull, under a linear or a nonlinear outcome
//! function. With the target outside the hull, exact balance requires
//! negative weights, which makes these instances the natural stress test
//! for the extrapolation penalty.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, TargetSpec, WeightVector};
use crate::diagnostics::{diagnostics_record, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::simplex::simplex_least_squares;

/// Outcome function family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    /// μ(x) = βᵀx
    Linear,
    /// μ(x) = 2x₀² + x₁ + x₀x₁
    Nonlinear,
}

/// Scenario description. Defaults match the desk-scale study: 10 units in
/// two dimensions, β = (1, 1), noise 0.1, and a hull gap of 0.5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n: usize,
    pub d: usize,
    pub beta: Vec<f64>,
    pub noise_sd: f64,
    pub hull_gap: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, seed: u64) -> Self {
        Self {
            kind,
            n: 10,
            d: 2,
            beta: vec![1.0, 1.0],
            noise_sd: 0.1,
            hull_gap: 0.5,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < self.d + 1 {
            return Err(Error::InvalidConfig(format!(
                "need n >= d + 1 for a nondegenerate hull, got n = {}, d = {}",
                self.n, self.d
            )));
        }
        if self.kind == ScenarioKind::Nonlinear && self.d < 2 {
            return Err(Error::InvalidConfig(
                "the nonlinear outcome uses the first two coordinates, need d >= 2".to_string(),
            ));
        }
        if self.kind == ScenarioKind::Linear && self.beta.len() != self.d {
            return Err(Error::InvalidConfig(format!(
                "beta length {} does not match d = {}",
                self.beta.len(),
                self.d
            )));
        }
        if !(self.noise_sd >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise_sd must be >= 0, got {}",
                self.noise_sd
            )));
        }
        if !(self.hull_gap >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "hull_gap must be >= 0, got {}",
                self.hull_gap
            )));
        }
        Ok(())
    }
}

/// A generated instance: data with noisy outcomes, the exterior target, and
/// access to the noiseless outcome function.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub data: Dataset,
    pub target: TargetSpec,
    pub spec: ScenarioSpec,
}

impl Scenario {
    /// Noiseless μ(x).
    pub fn truth(&self, x: &DVector<f64>) -> f64 {
        match self.spec.kind {
            ScenarioKind::Linear => self
                .spec
                .beta
                .iter()
                .zip(x.iter())
                .map(|(b, v)| b * v)
                .sum(),
            ScenarioKind::Nonlinear => 2.0 * x[0] * x[0] + x[1] + x[0] * x[1],
        }
    }

    /// μ(x*) at the generated target point.
    pub fn truth_at_target(&self) -> f64 {
        self.truth(self.target.point())
    }

    /// New outcome draw Y = μ(X) + ε with the given noise seed.
    pub fn redraw_outcomes(&self, noise_seed: u64) -> Result<Dataset> {
        let y = draw_outcomes(self, noise_seed)?;
        self.data.with_outcomes(y)
    }
}

fn draw_outcomes(scenario: &Scenario, noise_seed: u64) -> Result<DVector<f64>> {
    let n = scenario.data.n();
    let mut y = DVector::zeros(n);
    for i in 0..n {
        y[i] = scenario.truth(&scenario.data.row(i));
    }
    if scenario.spec.noise_sd > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let normal = Normal::new(0.0, scenario.spec.noise_sd)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        for i in 0..n {
            y[i] += normal.sample(&mut rng);
        }
    }
    Ok(y)
}

/// Draws the feature cloud uniformly on [0,1]^d, then walks the target from
/// the centroid along the outward normal of the hull face farthest from the
/// centroid (farthest-vertex direction when d ≠ 2) until the distance to
/// the hull reaches `hull_gap`.
pub fn generate(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut features = DMatrix::zeros(spec.n, spec.d);
    for i in 0..spec.n {
        for j in 0..spec.d {
            features[(i, j)] = rng.random::<f64>();
        }
    }
    let centroid = crate::data::column_means(&features);
    let direction = exterior_direction(&features, &centroid);

    // walk outward until the hull distance clears the gap
    let gap = spec.hull_gap.max(1e-3);
    let mut t = 0.0;
    let mut point = centroid.clone();
    for _ in 0..10_000 {
        t += 0.01;
        point = &centroid + t * &direction;
        let dist = simplex_least_squares(&features, &point, 2000).residual_norm;
        if dist >= gap {
            break;
        }
    }
    let target = TargetSpec::from_point(point)?;

    let mut scenario = Scenario {
        data: Dataset::new(features, DVector::zeros(spec.n), None)?,
        target,
        spec: spec.clone(),
    };
    let y = draw_outcomes(&scenario, derive_seed(spec.seed, "scenario-noise", 0))?;
    scenario.data = scenario.data.with_outcomes(y)?;
    Ok(scenario)
}

/// Unit direction along which the target leaves the hull.
fn exterior_direction(features: &DMatrix<f64>, centroid: &DVector<f64>) -> DVector<f64> {
    if features.ncols() == 2 {
        if let Some(normal) = farthest_face_normal_2d(features, centroid) {
            return normal;
        }
    }
    // fall back: away from the centroid through the farthest vertex
    let mut best = (0, 0.0);
    for i in 0..features.nrows() {
        let dist = (features.row(i).transpose() - centroid).norm();
        if dist > best.1 {
            best = (i, dist);
        }
    }
    let dir = features.row(best.0).transpose() - centroid;
    &dir / dir.norm()
}

/// Outward unit normal of the 2-d hull edge farthest from the centroid.
fn farthest_face_normal_2d(features: &DMatrix<f64>, centroid: &DVector<f64>) -> Option<DVector<f64>> {
    let pts: Vec<(f64, f64)> = (0..features.nrows())
        .map(|i| (features[(i, 0)], features[(i, 1)]))
        .collect();
    let hull = monotone_chain(&pts);
    if hull.len() < 3 {
        return None;
    }
    let c = (centroid[0], centroid[1]);
    let mut best: Option<(f64, (f64, f64))> = None;
    for k in 0..hull.len() {
        let p = hull[k];
        let q = hull[(k + 1) % hull.len()];
        let edge = (q.0 - p.0, q.1 - p.1);
        let len = (edge.0 * edge.0 + edge.1 * edge.1).sqrt();
        if len == 0.0 {
            continue;
        }
        // rotate the CCW edge by −90° to face outward
        let mut normal = (edge.1 / len, -edge.0 / len);
        let to_c = (c.0 - p.0, c.1 - p.1);
        if to_c.0 * normal.0 + to_c.1 * normal.1 > 0.0 {
            normal = (-normal.0, -normal.1);
        }
        let dist = -(to_c.0 * normal.0 + to_c.1 * normal.1);
        if best.map_or(true, |(bd, _)| dist > bd) {
            best = Some((dist, normal));
        }
    }
    best.map(|(_, n)| DVector::from_column_slice(&[n.0, n.1]))
}

/// Andrew's monotone chain; returns hull vertices in CCW order.
fn monotone_chain(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// One replication: the realized estimate against the noiseless truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepRow {
    pub rep: usize,
    pub estimate: f64,
    pub truth: f64,
    pub error: f64,
    pub squared_error: f64,
    pub diagnostics: DiagnosticsRecord,
}

/// Replication study output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicationTable {
    pub rows: Vec<RepRow>,
    pub mse: f64,
    pub mse_standard_error: f64,
}

/// Runs `reps` fresh-noise replications of an estimator on a fixed design:
/// features and target stay pinned to the scenario seed, only the outcome
/// noise is redrawn.
pub fn replicate<F>(spec: &ScenarioSpec, estimator: F, reps: usize) -> Result<ReplicationTable>
where
    F: Fn(&Dataset, &TargetSpec) -> Result<WeightVector> + Sync,
{
    if reps == 0 {
        return Err(Error::InvalidConfig("reps must be >= 1".to_string()));
    }
    let scenario = generate(spec)?;
    let truth = scenario.truth_at_target();
    let rows: Vec<RepRow> = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<RepRow> {
            let data = scenario.redraw_outcomes(derive_seed(spec.seed, "rep-noise", r as u64))?;
            let w = estimator(&data, &scenario.target).map_err(|e| Error::EstimatorFailure {
                rep: r,
                message: e.to_string(),
            })?;
            let estimate = w.weights().dot(data.outcomes());
            let error = estimate - truth;
            Ok(RepRow {
                rep: r,
                estimate,
                truth,
                error,
                squared_error: error * error,
                diagnostics: diagnostics_record(&w, &data, &scenario.target)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mse = rows.iter().map(|r| r.squared_error).sum::<f64>() / reps as f64;
    let var = if reps > 1 {
        rows.iter()
            .map(|r| (r.squared_error - mse).powi(2))
            .sum::<f64>()
            / (reps - 1) as f64
    } else {
        0.0
    };
    Ok(ReplicationTable {
        rows,
        mse,
        mse_standard_error: (var / reps as f64).sqrt(),
    })
}
