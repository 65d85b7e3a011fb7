//! End-to-end acceptance suite. Each test covers one release criterion at a
//! pinned tolerance and prints a `[PASS]` line; criterion 11 (byte-identical
//! sweep reruns) lives in the CLI crate next to the binary it exercises.

use extrabal::bounds::{prop1_bound, prop2_bound, reflect};
use extrabal::data::{
    Dataset, HolderParams, PExtrap, PImbalance, ProblemConfig, Provenance, SolverConfig,
    TargetSpec, WeightVector,
};
use extrabal::dgp::{generate, replicate, ScenarioKind, ScenarioSpec};
use extrabal::diagnostics::negative_influence;
use extrabal::implied::{dr_ridge_weights, point_estimate, ridge_smoother, augmented_weights};
use extrabal::sensitivity::log_grid;
use extrabal::solver::{objective, solve, solve_closed_form_ridge_path, subgradient};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn random_instance(seed: u64, n: usize, d: usize) -> (Dataset, TargetSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = DMatrix::from_fn(n, d, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let y = DVector::from_fn(n, |_, _| rng.random::<f64>());
    let data = Dataset::new(features, y, None).unwrap();
    let point = DVector::from_fn(d, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    (data, TargetSpec::from_point(point).unwrap())
}

fn base_config(lambda: f64, gamma: f64) -> ProblemConfig {
    ProblemConfig {
        lambda,
        gamma,
        p_imbalance: PImbalance::L2,
        p_extrap: PExtrap::L1,
        normalize_sum_to_one: false,
        centered_penalty: false,
        holder: HolderParams::default(),
    }
}

/// Criterion 1: the iterative solver agrees with the ridge closed form on
/// 50 random instances (n=20, d=5, λ ∈ {0.1, 1}, γ=0, p=2, no
/// normalization) within 1e-4 ∞-norm on weights and 1e-6 relative
/// objective, in under 30 seconds.
#[test]
fn c01_solver_matches_closed_form() {
    let start = std::time::Instant::now();
    let scfg = SolverConfig {
        tolerance: 0.0,
        ..SolverConfig::default()
    };
    let mut worst_w = 0.0_f64;
    let mut worst_obj = 0.0_f64;
    for seed in 0..25u64 {
        for &lambda in &[0.1, 1.0] {
            let (data, target) = random_instance(seed, 20, 5);
            let cfg = base_config(lambda, 0.0);
            let oracle = solve_closed_form_ridge_path(&data, &target, lambda).unwrap();
            let out = solve(&data, &target, &cfg, &scfg).unwrap();
            let w_diff = (out.weights.weights() - oracle.weights()).amax();
            let oracle_obj = objective(oracle.weights(), &data, &target, &cfg).unwrap().total;
            let rel_obj = (out.objective.total - oracle_obj).abs() / oracle_obj.abs();
            worst_w = worst_w.max(w_diff);
            worst_obj = worst_obj.max(rel_obj);
        }
    }
    let elapsed = start.elapsed();
    assert!(worst_w < 1e-4, "worst weight gap {worst_w:.3e}");
    assert!(worst_obj < 1e-6, "worst relative objective gap {worst_obj:.3e}");
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 1: solver vs closed form, worst ∞-gap {worst_w:.2e}, worst rel objective {worst_obj:.2e}, {elapsed:.2?}"
    );
}

/// Test-side projected-gradient oracle over the probability simplex,
/// independent of the library solver.
fn simplex_oracle(
    features: &DMatrix<f64>,
    point: &DVector<f64>,
    lambda: f64,
    steps: usize,
) -> DVector<f64> {
    fn project(v: &DVector<f64>) -> DVector<f64> {
        let mut sorted: Vec<f64> = v.iter().copied().collect();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut cumsum = 0.0;
        let mut theta = 0.0;
        for (k, &u) in sorted.iter().enumerate() {
            cumsum += u;
            let t = (cumsum - 1.0) / (k + 1) as f64;
            if u - t > 0.0 {
                theta = t;
            }
        }
        v.map(|x| (x - theta).max(0.0))
    }
    let n = features.nrows();
    let lipschitz = 2.0 * (features.norm_squared() + lambda);
    let step = 1.0 / lipschitz;
    let mut w = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..steps {
        let r = features.tr_mul(&w) - point;
        let grad = features * (2.0 * r) + 2.0 * lambda * &w;
        w = project(&(&w - step * grad));
    }
    w
}

/// Criterion 2: on the hull-violation instance, γ = 1e6 drives negative
/// influence below 1e-3 and lands within 1e-2 of the simplex-constrained
/// optimum found by an independent projected-gradient oracle.
#[test]
fn c02_hard_constraint_limit() {
    let scenario = generate(&ScenarioSpec::new(ScenarioKind::Linear, 42)).unwrap();
    let lambda = 0.1;
    let cfg = ProblemConfig {
        normalize_sum_to_one: true,
        ..base_config(lambda, 1e6)
    };
    let scfg = SolverConfig {
        learning_rate: 0.001,
        epochs: 100_000,
        tolerance: 0.0,
        seed: 0,
    };
    let out = solve(&scenario.data, &scenario.target, &cfg, &scfg).unwrap();
    let ni = negative_influence(out.weights.weights()).unwrap();
    assert!(ni < 1e-3, "negative influence {ni:.3e}");

    let oracle_w = simplex_oracle(scenario.data.features(), scenario.target.point(), lambda, 200_000);
    let oracle_obj = objective(&oracle_w, &scenario.data, &scenario.target, &cfg).unwrap();
    let gap = (out.objective.total - oracle_obj.total).abs();
    assert!(gap < 1e-2, "objective gap {gap:.3e}");
    println!(
        "[PASS] criterion 2: hard-constraint limit, negative influence {ni:.2e}, oracle gap {gap:.2e}"
    );
}

/// Criterion 3: the extrapolation term at the solution is non-increasing in
/// γ (tolerance 1e-6) over a 10-point log grid, for λ ∈ {0.01, 0.1, 1, 10}.
#[test]
fn c03_extrapolation_path_monotone() {
    let scenario = generate(&ScenarioSpec::new(ScenarioKind::Linear, 42)).unwrap();
    let gammas = log_grid(0.01, 100.0, 10).unwrap();
    let scfg = SolverConfig {
        epochs: 20_000,
        tolerance: 0.0,
        ..SolverConfig::default()
    };
    let mut worst = f64::NEG_INFINITY;
    for &lambda in &[0.01, 0.1, 1.0, 10.0] {
        let mut prev = f64::INFINITY;
        for &gamma in &gammas {
            let cfg = ProblemConfig {
                normalize_sum_to_one: true,
                ..base_config(lambda, gamma)
            };
            let c = solve(&scenario.data, &scenario.target, &cfg, &scfg)
                .unwrap()
                .objective
                .extrapolation_term;
            worst = worst.max(c - prev);
            assert!(
                c <= prev + 1e-6,
                "term (c) rose from {prev:.6e} to {c:.6e} at gamma={gamma}, lambda={lambda}"
            );
            prev = c;
        }
    }
    println!("[PASS] criterion 3: term (c) non-increasing in gamma, worst increase {worst:.2e}");
}

/// Criterion 4: analytic subgradients match central finite differences
/// (h = 1e-6) to relative error 1e-5 at 100 random points with all
/// |w_i| > 1e-3, for every (p_imbalance, p_extrap) combination.
#[test]
fn c04_gradient_matches_finite_differences() {
    let h = 1e-6;
    let mut worst = 0.0_f64;
    for (ci, &p_imb) in [PImbalance::L2, PImbalance::Linf].iter().enumerate() {
        for (cj, &p_ext) in [PExtrap::L1, PExtrap::L2, PExtrap::Linf].iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(3100 + (ci * 3 + cj) as u64);
            for k in 0..100 {
                let (data, target) = random_instance(7000 + k, 8, 3);
                let cfg = ProblemConfig {
                    p_imbalance: p_imb,
                    p_extrap: p_ext,
                    ..base_config(0.3, 0.7)
                };
                // weights bounded away from the kink at zero
                let w = DVector::from_fn(8, |_, _| {
                    let mag = 0.05 + 0.95 * rng.random::<f64>();
                    if rng.random::<bool>() {
                        mag
                    } else {
                        -mag
                    }
                });
                let g = subgradient(&w, &data, &target, &cfg).unwrap();
                let mut fd = DVector::zeros(8);
                for i in 0..8 {
                    let mut wp = w.clone();
                    let mut wm = w.clone();
                    wp[i] += h;
                    wm[i] -= h;
                    fd[i] = (objective(&wp, &data, &target, &cfg).unwrap().total
                        - objective(&wm, &data, &target, &cfg).unwrap().total)
                        / (2.0 * h);
                }
                let rel = (&g - &fd).amax() / fd.amax().max(1e-8);
                worst = worst.max(rel);
                assert!(
                    rel <= 1e-5,
                    "combo ({p_imb:?}, {p_ext:?}) instance {k}: relative error {rel:.3e}"
                );
            }
        }
    }
    println!("[PASS] criterion 4: subgradient vs finite differences, worst relative error {worst:.2e}");
}

/// Criterion 5: 1000 random Jensen checks never violate convexity beyond
/// 1e-9, over all norm combinations.
#[test]
fn c05_objective_convexity() {
    let combos = [
        (PImbalance::L2, PExtrap::L1),
        (PImbalance::L2, PExtrap::L2),
        (PImbalance::L2, PExtrap::Linf),
        (PImbalance::Linf, PExtrap::L1),
        (PImbalance::Linf, PExtrap::L2),
        (PImbalance::Linf, PExtrap::Linf),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst = f64::NEG_INFINITY;
    for check in 0..1000 {
        let (p_imb, p_ext) = combos[check % combos.len()];
        let (data, target) = random_instance(20_000 + check as u64, 6, 2);
        let cfg = ProblemConfig {
            p_imbalance: p_imb,
            p_extrap: p_ext,
            ..base_config(0.5 * rng.random::<f64>(), 2.0 * rng.random::<f64>())
        };
        let w = DVector::from_fn(6, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let v = DVector::from_fn(6, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let theta: f64 = rng.random::<f64>();
        let mix = theta * &w + (1.0 - theta) * &v;
        let f_mix = objective(&mix, &data, &target, &cfg).unwrap().total;
        let f_bound = theta * objective(&w, &data, &target, &cfg).unwrap().total
            + (1.0 - theta) * objective(&v, &data, &target, &cfg).unwrap().total;
        worst = worst.max(f_mix - f_bound);
        assert!(
            f_mix <= f_bound + 1e-9,
            "Jensen violation {:.3e} on check {check}",
            f_mix - f_bound
        );
    }
    println!("[PASS] criterion 5: convexity, worst Jensen slack {worst:.2e}");
}

/// One-sided 99% binomial acceptance threshold for violation counts under
/// H0: violation rate ≤ delta (normal approximation with continuity
/// correction).
fn binomial_crit(m: usize, delta: f64) -> usize {
    let mean = m as f64 * delta;
    let sd = (m as f64 * delta * (1.0 - delta)).sqrt();
    (mean + 2.326 * sd + 0.5).floor() as usize
}

/// Criterion 6: Monte Carlo coverage of the even-part bounds on a 1-d
/// quadratic instance (a = 2·max|x|, α = 1, σ = 0.1): over 2000 noise
/// redraws the realized error exceeds each bound in at most a δ fraction of
/// draws (99% one-sided binomial allowance), for δ ∈ {0.05, 0.2}, in under
/// two minutes.
#[test]
fn c06_bound_coverage() {
    let start = std::time::Instant::now();
    let n = 20;
    let mut rng = ChaCha8Rng::seed_from_u64(971);
    let xs: Vec<f64> = (0..n).map(|_| 0.5 + rng.random::<f64>()).collect();
    let x_star = 0.2;
    let mu = |x: f64| x * x;
    let a = 2.0 * xs.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    let sigma = 0.1;
    let truth = mu(x_star);
    let mu_noiseless: Vec<f64> = xs.iter().map(|&x| mu(x)).collect();

    let features = DMatrix::from_fn(n, 1, |i, _| xs[i]);
    let data0 = Dataset::new(features, DVector::from_column_slice(&mu_noiseless), None).unwrap();
    let target = TargetSpec::from_point(DVector::from_column_slice(&[x_star])).unwrap();

    // weights with genuine negative mass, estimated once from the features
    let cfg = ProblemConfig {
        normalize_sum_to_one: true,
        ..base_config(0.1, 0.05)
    };
    let w = solve(&data0, &target, &cfg, &SolverConfig::default())
        .unwrap()
        .weights;
    let ni = negative_influence(w.weights()).unwrap();
    assert!(ni > 0.05, "instance should exercise negative weights, got {ni:.3}");

    let m_draws = 2000;
    for &delta in &[0.05, 0.2] {
        let holder = HolderParams {
            a,
            alpha: 1.0,
            sigma,
            delta,
        };
        let p1_total = prop1_bound(&w, &data0, &target, &holder, |x| x[0] * x[0])
            .unwrap()
            .total;
        let normal = Normal::new(0.0, sigma).unwrap();
        let mut noise_rng = ChaCha8Rng::seed_from_u64(4242);
        let mut viol1 = 0usize;
        let mut viol2 = 0usize;
        for _ in 0..m_draws {
            let y = DVector::from_iterator(
                n,
                mu_noiseless.iter().map(|&m| m + normal.sample(&mut noise_rng)),
            );
            let err = (truth - w.weights().dot(&y)).abs();
            if err > p1_total {
                viol1 += 1;
            }
            let data_y = data0.with_outcomes(y).unwrap();
            if err > prop2_bound(&w, &data_y, &target, &holder).unwrap().total {
                viol2 += 1;
            }
        }
        let crit = binomial_crit(m_draws, delta);
        assert!(viol1 <= crit, "delta={delta}: prop1 violations {viol1} > {crit}");
        assert!(viol2 <= crit, "delta={delta}: prop2 violations {viol2} > {crit}");
        println!(
            "[PASS] criterion 6 (delta={delta}): coverage, prop1 {viol1}/{m_draws}, prop2 {viol2}/{m_draws}, allowed {crit}"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
}

/// Criterion 7: the doubly robust weights and both displayed augmented
/// estimator forms give the same point estimate to 1e-10 on 100 random
/// instances; the dr weights equal the ridge-smoother augmentation.
#[test]
fn c07_doubly_robust_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let mut worst = 0.0_f64;
    for k in 0..100u64 {
        let (data, target) = random_instance(40_000 + k, 12, 3);
        let lambda = if k % 2 == 0 { 0.0 } else { 0.1 };
        let w0 = WeightVector::new(
            DVector::from_fn(12, |_, _| rng.random::<f64>() * 2.0 - 0.5),
            Provenance::External,
        )
        .unwrap();

        let dr = dr_ridge_weights(&w0, &data, &target, lambda).unwrap();
        let estimate_weights = point_estimate(&dr, data.outcomes()).unwrap();

        // outcome-model route: m̂(x) = xᵀ(XᵀX+λI)⁻¹XᵀY
        let x = data.features();
        let mut gram = x.tr_mul(x);
        for j in 0..3 {
            gram[(j, j)] += lambda;
        }
        let beta = gram
            .cholesky()
            .unwrap()
            .solve(&x.tr_mul(data.outcomes()));
        let m_hat = |q: &DVector<f64>| q.dot(&beta);
        let fitted: DVector<f64> = DVector::from_fn(12, |i, _| m_hat(&data.row(i)));
        let base_est = w0.weights().dot(data.outcomes());
        let form_one = base_est + (m_hat(target.point()) - w0.weights().dot(&fitted));
        let form_two = m_hat(target.point()) + w0.weights().dot(&(data.outcomes() - &fitted));

        let gap1 = (estimate_weights - form_one).abs();
        let gap2 = (estimate_weights - form_two).abs();
        worst = worst.max(gap1).max(gap2);
        assert!(gap1 < 1e-10 && gap2 < 1e-10, "instance {k}: gaps {gap1:.3e}, {gap2:.3e}");

        let smoother = ridge_smoother(&data, lambda).unwrap();
        let via_aug = augmented_weights(&w0, &smoother, &data, &target).unwrap();
        let w_gap = (dr.weights() - via_aug.weights()).amax();
        worst = worst.max(w_gap);
        assert!(w_gap < 1e-10, "instance {k}: weight route gap {w_gap:.3e}");
    }
    println!("[PASS] criterion 7: doubly robust identities, worst gap {worst:.2e}");
}

/// Criterion 8: on the linear scenario, regularizing extrapolation hurts —
/// MSE at γ=0.01 stays below MSE at γ=100 by more than twice the paired
/// Monte Carlo standard error over 100 replications.
#[test]
fn c08_linear_dgp_trend() {
    let spec = ScenarioSpec::new(ScenarioKind::Linear, 42);
    let scfg = SolverConfig {
        epochs: 5000,
        tolerance: 0.0,
        ..SolverConfig::default()
    };
    let reps = 100;
    let run = |gamma: f64| {
        let cfg = ProblemConfig {
            normalize_sum_to_one: true,
            ..base_config(0.1, gamma)
        };
        replicate(&spec, |d, t| solve(d, t, &cfg, &scfg).map(|o| o.weights), reps).unwrap()
    };
    let low = run(0.01);
    let high = run(100.0);
    let diffs: Vec<f64> = high
        .rows
        .iter()
        .zip(&low.rows)
        .map(|(h, l)| h.squared_error - l.squared_error)
        .collect();
    let mean = diffs.iter().sum::<f64>() / reps as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let se = (var / reps as f64).sqrt();
    assert!(
        mean > 2.0 * se,
        "gap {mean:.4e} not beyond 2×SE {se:.4e} (mse {:.4e} vs {:.4e})",
        low.mse,
        high.mse
    );
    println!(
        "[PASS] criterion 8: linear trend, MSE {:.3e} @ gamma=0.01 vs {:.3e} @ gamma=100, gap/SE {:.1}",
        low.mse,
        high.mse,
        mean / se
    );
}

/// Criterion 9: on the nonlinear scenario the best MSE over a 10-point log
/// grid of γ is strictly interior and beats both endpoints by at least 5%.
#[test]
fn c09_nonlinear_dgp_interior_optimum() {
    let spec = ScenarioSpec::new(ScenarioKind::Nonlinear, 42);
    let gammas = log_grid(0.01, 100.0, 10).unwrap();
    let scfg = SolverConfig {
        epochs: 1500,
        tolerance: 0.0,
        ..SolverConfig::default()
    };
    let reps = 200;
    let mses: Vec<f64> = gammas
        .iter()
        .map(|&gamma| {
            let cfg = ProblemConfig {
                normalize_sum_to_one: true,
                ..base_config(0.1, gamma)
            };
            replicate(&spec, |d, t| solve(d, t, &cfg, &scfg).map(|o| o.weights), reps)
                .unwrap()
                .mse
        })
        .collect();
    let (k_min, &best) = mses
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    assert!(k_min > 0 && k_min < mses.len() - 1, "minimum at endpoint {k_min}");
    let left = (mses[0] - best) / mses[0];
    let right = (mses[mses.len() - 1] - best) / mses[mses.len() - 1];
    assert!(
        left >= 0.05 && right >= 0.05,
        "margins {:.1}% / {:.1}% too small",
        100.0 * left,
        100.0 * right
    );
    println!(
        "[PASS] criterion 9: interior optimum at gamma={:.3} (index {k_min}), margins {:.0}%/{:.0}%",
        gammas[k_min],
        100.0 * left,
        100.0 * right
    );
}

/// Criterion 10: w_i X_i = |w_i| X‡_i holds bit-exactly on 1000 random
/// weight/feature draws.
#[test]
fn c10_reflection_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for k in 0..1000 {
        let n = 2 + (k % 7);
        let d = 1 + (k % 4);
        let features = DMatrix::from_fn(n, d, |_, _| rng.random::<f64>() * 10.0 - 5.0);
        let data = Dataset::new(features, DVector::zeros(n), None).unwrap();
        let w = WeightVector::new(
            DVector::from_fn(n, |_, _| rng.random::<f64>() * 4.0 - 2.0),
            Provenance::External,
        )
        .unwrap();
        let reflected = reflect(&data, &w).unwrap();
        for i in 0..n {
            for j in 0..d {
                let lhs = w.weights()[i] * data.features()[(i, j)];
                let rhs = w.weights()[i].abs() * reflected[(i, j)];
                assert_eq!(lhs.to_bits(), rhs.to_bits(), "draw {k}, entry ({i},{j})");
            }
        }
    }
    println!("[PASS] criterion 10: reflection identity exact on 1000 draws");
}
