//! Min-max feature scaling.
//!
//! Each source column is mapped to [0, 1]; the target is mapped with the
//! same affine map, so target coordinates may land outside [0, 1]. Constant
//! columns are mapped to 0 with a recorded range of 1 so the map stays
//! invertible.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, TargetSpec};
use crate::error::Result;

/// Per-column (min, range) of the affine maps, kept for inversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub mins: Vec<f64>,
    pub ranges: Vec<f64>,
}

impl ScalingRecord {
    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    pub fn apply_value(&self, col: usize, x: f64) -> f64 {
        (x - self.mins[col]) / self.ranges[col]
    }

    pub fn invert_value(&self, col: usize, z: f64) -> f64 {
        z * self.ranges[col] + self.mins[col]
    }

    pub fn apply_matrix(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                out[(i, j)] = self.apply_value(j, m[(i, j)]);
            }
        }
        out
    }

    pub fn invert_matrix(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                out[(i, j)] = self.invert_value(j, m[(i, j)]);
            }
        }
        out
    }

    pub fn apply_vector(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(v.len(), v.iter().enumerate().map(|(j, &x)| self.apply_value(j, x)))
    }
}

/// Rescales every source feature column to [0, 1] and maps the target with
/// the identical affine parameters.
pub fn minmax_scale(data: &Dataset, target: &TargetSpec) -> Result<(Dataset, TargetSpec, ScalingRecord)> {
    target.check_dim(data)?;
    let x = data.features();
    let d = data.dim();
    let mut mins = Vec::with_capacity(d);
    let mut ranges = Vec::with_capacity(d);
    for j in 0..d {
        let col = x.column(j);
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = max - min;
        if range == 0.0 {
            log::warn!("feature column {} is constant ({min}); mapping it to 0", j + 1);
            mins.push(min);
            ranges.push(1.0);
        } else {
            mins.push(min);
            ranges.push(range);
        }
    }
    let record = ScalingRecord { mins, ranges };
    let scaled = Dataset::new(
        record.apply_matrix(x),
        data.outcomes().clone(),
        Some(data.unit_ids().to_vec()),
    )?;
    let point = record.apply_vector(target.point());
    let scaled_target = match target.sample() {
        Some(sample) => TargetSpec::with_sample(point, record.apply_matrix(sample))?,
        None => TargetSpec::from_point(point)?,
    };
    Ok((scaled, scaled_target, record))
}
