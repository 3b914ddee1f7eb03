use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regproj::harness::normalized_theta;
use regproj::operators::{model_rhs, CollocationScheme, Kernel};
use regproj::quadrature::QuadratureGrid;
use regproj::rules::{
    check_collocation_params, choose_n_apriori, choose_n_discrepancy, choose_n_monotone_error, default_b,
    discrepancy_from_residuals, me_index, tau_of_c, Admissibility, Decision, MeLevel, NFamily,
};
use regproj::solvers::{
    least_error_grid, solve_collocation, solve_least_error, CollocationSystem, LeastErrorOptions, NodeInterpolant,
    SolveResult,
};
use regproj::spaces::{bregman_distance, lp_norm, SampledFunction, SpaceSpec};
use regproj::splines::Mesh;
use regproj::{Error, Function1D};

/// `τ(c)` from its construction: the cubic `z` with `z(0) = z(c) = 1`,
/// `z(1) = -1` and `z'(0) = 2 / (c(1-c)(2c-1))`, maximized on `[0, 1]`.
fn tau_oracle(c: f64) -> f64 {
    // z(t) = 1 + a t + b t^2 + d t^3 with b c + d c^2 = -a and b + d = -2 - a
    let a = 2.0 / (c * (1.0 - c) * (2.0 * c - 1.0));
    let d = (c * (2.0 + a) - a) / (c * c - c);
    let b = -2.0 - a - d;
    let z = |t: f64| 1.0 + a * t + b * t * t + d * t * t * t;
    assert!((z(c) - 1.0).abs() < 1e-9 && (z(1.0) + 1.0).abs() < 1e-9, "bad cubic");
    (0..=200_000).map(|i| z(i as f64 / 200_000.0).abs()).fold(0.0, f64::max)
}

#[test]
fn tau_reference_values() {
    for (c, want) in [(0.6, 5.67), (0.7, 4.10), (0.8, 4.22)] {
        assert!((tau_of_c(c).unwrap() - want).abs() < 0.01, "c={c}");
    }
    for c in [0.6, 0.7, 0.8, 0.9] {
        let (t, o) = (tau_of_c(c).unwrap(), tau_oracle(c));
        assert!((t - o).abs() < 1e-6, "c={c}: {t} vs {o}");
    }
    assert!((default_b(0.7).unwrap() - 1.01 - tau_of_c(0.7).unwrap()).abs() < 1e-15);
}

#[test]
fn tau_domain_and_blowup() {
    for c in [0.5, 1.0, 0.2, f64::NAN] {
        assert!(tau_of_c(c).is_err());
    }
    assert!(tau_of_c(0.5001).unwrap() > 1e3);
    assert!(tau_of_c(0.9999).unwrap() > 1e3);
    for i in 1..100 {
        assert!(tau_of_c(0.5 + i as f64 * 0.005).unwrap() >= 1.0);
    }
}

#[test]
fn admissibility_examples() {
    let r = check_collocation_params(&[1.0], 1).unwrap();
    assert_eq!((r.product, r.verdict), (0.0, Admissibility::Admissible));
    let r = check_collocation_params(&[0.7, 1.0], 2).unwrap();
    assert!((r.product - 0.3 / 0.7).abs() < 1e-15 && r.verdict == Admissibility::Admissible);
    let r = check_collocation_params(&[0.3, 1.0], 2).unwrap();
    assert!((r.product - 0.7 / 0.3).abs() < 1e-14 && r.verdict == Admissibility::Inadmissible);
    assert_eq!(check_collocation_params(&[0.5, 1.0], 3).unwrap().verdict, Admissibility::Unknown);
    assert!(check_collocation_params(&[1.0, 0.5], 2).is_err());
}

#[test]
fn apriori_rule() {
    assert_eq!(choose_n_apriori(1e-4, 2, 0.5).unwrap(), 10);
    assert_eq!(choose_n_apriori(1.0, 3, 0.9).unwrap(), 1);
    assert!(choose_n_apriori(0.0, 2, 0.5).is_err());
    assert!(choose_n_apriori(1e-3, 2, 1.0).is_err());
    let mut last = 0;
    for m in 1..=12 {
        let delta = 10f64.powi(-m);
        let n = choose_n_apriori(delta, 2, 0.5).unwrap();
        assert!(n >= last);
        // n^l δ decreases towards 0
        assert!((n as f64).powi(2) * delta <= delta.sqrt() * 1.0001);
        last = n;
    }
    assert!(last >= 1000);
}

/// Noisy collocation for `u*(s) = s^{1/2}`, `l = 2`, `k = 2`, with the sup
/// residual against the interpolated noisy data in `residual_c`.
fn noisy_collocation(c: f64, delta: f64, seed: u64, n: usize) -> regproj::Result<SolveResult> {
    let kernel = Kernel::volterra(2)?;
    let scheme = CollocationScheme::with_endpoint(Mesh::new(n)?, c)?;
    let nodes = scheme.nodes();
    let theta = normalized_theta(nodes.len(), seed ^ n as u64)?;
    let noise = NodeInterpolant::new(nodes.clone(), theta.clone())?;
    let values: Vec<f64> = nodes
        .iter()
        .zip(&theta)
        .map(|(&t, th)| model_rhs(0.5, 2, t).unwrap() + delta * th)
        .collect();
    let system = CollocationSystem::new(&kernel, &scheme, 2)?;
    let mut res = system.solve(&values)?;
    let f = |t: f64| model_rhs(0.5, 2, t).unwrap() + delta * noise.value(t);
    res.residual_c = system.sup_residual(res.coeffs().unwrap(), &f);
    Ok(res)
}

fn collocation_residuals(c: f64, delta: f64, seed: u64, n_max: usize) -> Vec<f64> {
    (1..=n_max)
        .map(|n| noisy_collocation(c, delta, seed, n).unwrap().residual_c)
        .collect()
}

#[test]
fn discrepancy_chooses_the_first_level() {
    let levels = [1, 2, 3, 4];
    let t = discrepancy_from_residuals(&levels, &[5.0, 2.0, 0.5, 0.1], 1.0, 1.5).unwrap();
    assert_eq!(t.chosen_n, Some(3));
    assert_eq!(t.records.len(), 3);
    assert_eq!(t.records[2].decision, Decision::Stop);
    let t = discrepancy_from_residuals(&levels, &[5.0, 5.0, 5.0, 5.0], 1.0, 1.5).unwrap();
    assert_eq!((t.chosen_n, t.status()), (None, "not reached"));
    assert!(discrepancy_from_residuals(&levels, &[0.0; 4], 1.0, 1.0).is_err());
    assert!(discrepancy_from_residuals(&levels, &[0.0; 4], 0.0, 2.0).is_err());
}

#[test]
fn discrepancy_semantics_on_noisy_runs() {
    for seed in 0..6u64 {
        for (c, delta) in [(0.7, 1e-3), (0.8, 1e-4), (0.6, 1e-2)] {
            let residuals = collocation_residuals(c, delta, seed, 24);
            let b = default_b(c).unwrap();
            let trace = choose_n_discrepancy(
                NFamily::Consecutive { start: 1, n_max: 24 },
                |n| noisy_collocation(c, delta, seed, n),
                delta,
                b,
            )
            .unwrap();
            if let Some(n) = trace.chosen_n {
                assert!(residuals[n - 1] <= b * delta);
                if n > 1 {
                    assert!(residuals[n - 2] > b * delta);
                }
            }
            // n_D never grows with b
            let mut last = usize::MAX;
            for scale in [1.0, 1.5, 2.0, 4.0, 10.0] {
                let t = discrepancy_from_residuals(&(1..=24).collect::<Vec<_>>(), &residuals, delta, b * scale).unwrap();
                let n = t.chosen_n.unwrap_or(usize::MAX);
                assert!(n <= last);
                last = n;
            }
        }
    }
}

#[test]
fn discrepancy_failure_keeps_partial_trace() {
    let trace = choose_n_discrepancy(
        NFamily::Consecutive { start: 1, n_max: 5 },
        |n| {
            if n == 3 {
                return Err(Error::Singular { condition: f64::INFINITY });
            }
            solve_collocation(
                &Kernel::volterra(1).unwrap(),
                &CollocationScheme::endpoint(Mesh::new(1).unwrap()),
                1,
                &[1.0],
            )
            .map(|mut r| {
                r.residual_c = 1.0;
                r
            })
        },
        0.1,
        2.0,
    )
    .unwrap();
    assert_eq!(trace.records.len(), 2);
    assert_eq!(trace.failure.as_ref().map(|f| f.0), Some(3));
    assert_eq!(trace.status(), "failed");
}

#[test]
fn exact_data_with_generous_delta_stops_at_once() {
    let residuals = collocation_residuals(0.7, 0.0, 0, 3);
    let t = discrepancy_from_residuals(&[1, 2, 3], &residuals, residuals[0] + 1e-3, 1.01).unwrap();
    assert_eq!(t.chosen_n, Some(1));
}

/// A nested least-error instance on the shared grid of the finest level.
struct Nested {
    kernel: Kernel,
    grid: Arc<QuadratureGrid>,
    fine_values: Vec<f64>,
    finest: usize,
    spec: SpaceSpec,
}

impl Nested {
    fn new(l: u32, finest: usize, p: f64, data: impl Fn(f64) -> f64) -> Self {
        let scheme = CollocationScheme::endpoint(Mesh::new(finest).unwrap());
        let grid = Arc::new(least_error_grid(&scheme, 8));
        let fine_values = scheme.nodes().iter().map(|&t| data(t)).collect();
        Self {
            kernel: Kernel::volterra(l).unwrap(),
            grid,
            fine_values,
            finest,
            spec: SpaceSpec::lp(p).unwrap(),
        }
    }

    fn level(&self, n: usize) -> MeLevel {
        let stride = self.finest / n;
        let values: Vec<f64> = (0..n).map(|i| self.fine_values[(i + 1) * stride - 1]).collect();
        let scheme = CollocationScheme::endpoint(Mesh::new(n).unwrap());
        let opts = LeastErrorOptions {
            grid: Some(self.grid.clone()),
            dense_residual: false,
            ..LeastErrorOptions::default()
        };
        let result = solve_least_error(&self.kernel, &scheme, &values, &self.spec, &opts).unwrap();
        MeLevel { result, values }
    }
}

#[test]
fn me_index_p2_identity() {
    let inst = Nested::new(2, 8, 2.0, |t| t.sin() + 0.01 * (40.0 * t).cos());
    for n in [1, 2, 4] {
        let (lo, hi) = (inst.level(n), inst.level(2 * n));
        let (vn, vm) = (lo.result.dual.clone().unwrap(), hi.result.dual.clone().unwrap());
        let d = me_index(&vn, &vm, &hi.values, 2.0).unwrap();
        let norm = |l: &MeLevel| l.result.solution.lp_norm(&inst.spec).unwrap();
        let diff = vm.sub(&vn.embed_into(vm.nodes()).unwrap()).unwrap().norm();
        let identity = (norm(&hi).powi(2) - norm(&lo).powi(2)) / (2.0 * diff);
        assert!((d - identity).abs() < 1e-8, "n={n}: {d} vs {identity}");
    }
}

#[test]
fn me_index_undefined_for_zero_data() {
    let inst = Nested::new(2, 4, 2.0, |_| 0.0);
    let (lo, hi) = (inst.level(2), inst.level(4));
    let err = me_index(&lo.result.dual.unwrap(), &hi.result.dual.unwrap(), &hi.values, 2.0);
    assert!(matches!(err, Err(Error::UndefinedIndex)));
}

#[test]
fn me_index_nonnegative_on_random_nested_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..100 {
        let p = [1.5, 2.0, 3.0, 4.0][case % 4];
        let l = 1 + (case % 2) as u32;
        let n = [1, 2, 4][case % 3];
        let a: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let inst = Nested::new(l, 2 * n, p, move |t| {
            a[0] * t + a[1] * t * t + a[2] * (7.0 * t).sin() + a[3] * (t - 0.5).abs()
        });
        let (lo, hi) = (inst.level(n), inst.level(2 * n));
        let q = inst.spec.q().unwrap();
        match me_index(&lo.result.dual.unwrap(), &hi.result.dual.unwrap(), &hi.values, q) {
            Ok(d) => assert!(d >= -1e-10, "case {case}: d_ME = {d}"),
            Err(Error::UndefinedIndex) => {}
            Err(e) => panic!("case {case}: {e}"),
        }
    }
}

#[test]
fn me_rule_first_level_and_not_reached() {
    let inst = Nested::new(2, 16, 2.0, |t| model_rhs(0.5, 2, t).unwrap());
    let levels = NFamily::Dyadic { start: 1, n_max: 16 }.levels();
    let huge = choose_n_monotone_error(&levels, |n| Ok(inst.level(n)), 1e3, 2.0).unwrap();
    assert_eq!(huge.chosen_n, Some(1));
    let exact = choose_n_monotone_error(&levels, |n| Ok(inst.level(n)), 0.0, 2.0).unwrap();
    assert_eq!((exact.chosen_n, exact.status()), (None, "not reached"));
    assert_eq!(exact.records.len(), levels.len() - 1);
    assert!(exact.records.iter().all(|r| r.criterion_value >= 0.0));
    let csv = exact.to_csv_string().unwrap();
    assert!(csv.starts_with("n,criterion_value,decision\n"));
}

#[test]
fn bregman_error_decreases_while_delta_below_index() {
    // discrete-consistent data: f = A u* evaluated by the shared quadrature
    for seed in 0..5u64 {
        let finest = 32;
        let scheme = CollocationScheme::endpoint(Mesh::new(finest).unwrap());
        let grid = Arc::new(least_error_grid(&scheme, 8));
        let kernel = Kernel::volterra(1).unwrap();
        let u_star = SampledFunction::from_fn(grid.clone(), &|s: f64| s.sqrt()).unwrap();
        let exact: Vec<f64> = scheme
            .nodes()
            .iter()
            .map(|&t| regproj::operators::apply_a_sampled(&kernel, &u_star, t))
            .collect();
        let fmax = exact.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let delta = 0.01 * fmax;
        let theta = normalized_theta(finest, seed).unwrap();
        let noisy: Vec<f64> = exact.iter().zip(&theta).map(|(f, th)| f + delta * th).collect();
        let spec = SpaceSpec::lp(2.0).unwrap();
        let mut inst = Nested::new(1, finest, 2.0, |_| 0.0);
        inst.grid = grid.clone();
        inst.fine_values = noisy;
        let levels = NFamily::Dyadic { start: 1, n_max: finest }.levels();
        let trace = choose_n_monotone_error(&levels, |n| Ok(inst.level(n)), delta, 2.0).unwrap();
        for r in trace.records.iter().filter(|r| delta <= r.criterion_value) {
            let err = |n: usize| {
                let u = inst.level(n).result.solution.sample(grid.clone()).unwrap();
                bregman_distance(&u_star, &u, &spec).unwrap()
            };
            assert!(err(2 * r.n) <= err(r.n) + 1e-8, "seed {seed} n={}", r.n);
        }
        assert!(lp_norm(&u_star, &spec).unwrap() > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn discrepancy_choice_is_first_index(residuals in prop::collection::vec(0.0..10.0f64, 1..20), b in 1.01..5.0f64) {
        let levels: Vec<usize> = (1..=residuals.len()).collect();
        let t = discrepancy_from_residuals(&levels, &residuals, 1.0, b).unwrap();
        match t.chosen_n {
            Some(n) => {
                prop_assert!(residuals[n - 1] <= b);
                prop_assert!(residuals[..n - 1].iter().all(|&r| r > b));
            }
            None => prop_assert!(residuals.iter().all(|&r| r > b)),
        }
    }

    #[test]
    fn apriori_is_monotone_in_delta(d1 in 1e-12..1.0f64, d2 in 1e-12..1.0f64, l in 1u32..4) {
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(choose_n_apriori(lo, l, 0.5).unwrap() >= choose_n_apriori(hi, l, 0.5).unwrap());
    }
}
