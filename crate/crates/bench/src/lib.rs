//! Shared fixtures for the benchmark targets.

use extrabal::data::{Dataset, TargetSpec};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random dense instance with features and target drawn from [−1, 1).
pub fn random_instance(seed: u64, n: usize, d: usize) -> (Dataset, TargetSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = DMatrix::from_fn(n, d, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let outcomes = DVector::from_fn(n, |_, _| rng.random::<f64>());
    let data = Dataset::new(features, outcomes, None).expect("valid instance");
    let point = DVector::from_fn(d, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    (data, TargetSpec::from_point(point).expect("valid target"))
}
