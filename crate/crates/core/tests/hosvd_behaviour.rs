use tensoraudit::generate::{planted_tucker, random_uniform, PlantedSpec};
use tensoraudit::hosvd::{hosvd_objective, hosvd_run};
use tensoraudit::init::make_init_bundle;
use tensoraudit::rng::SplitMix64;
use tensoraudit::{FactorMatrix, Tensor3};

#[test]
fn noiseless_planted_tensor_is_recovered() {
    let p = planted_tucker(&PlantedSpec {
        dims: [12, 10, 9],
        core_dims: [3, 3, 3],
        spectrum: vec![3.0, 2.0, 1.0],
        noise: 0.0,
        seed: 17,
    })
    .unwrap();
    let bundle = make_init_bundle(&p.tensor, [3, 3, 3], 5).unwrap();
    for start in &bundle.starts {
        let (model, _) = hosvd_run(&p.tensor, [3, 3, 3], &start.v0, &start.w0, 30).unwrap();
        let j1 = hosvd_objective(&p.tensor, &model.core);
        assert!(j1 <= 1e-10 * p.tensor.frobenius_norm_sq(), "{:?}: J1 = {j1}", start.label);
        let resid = p.tensor.distance_sq(&model.reconstruct().unwrap()).unwrap();
        assert!(resid <= 1e-10 * p.tensor.frobenius_norm_sq());
    }
}

#[test]
fn objective_is_monotone_from_every_start() {
    for seed in 0..5 {
        let x = random_uniform([9, 8, 7], seed);
        let slack = 1e-9 * x.frobenius_norm_sq();
        let bundle = make_init_bundle(&x, [3, 2, 4], seed + 100).unwrap();
        for start in &bundle.starts {
            let (_, trace) = hosvd_run(&x, [3, 2, 4], &start.v0, &start.w0, 40).unwrap();
            for w in trace.objective.windows(2) {
                assert!(w[1] >= w[0] - slack, "{:?} decreased: {} -> {}", start.label, w[0], w[1]);
            }
        }
    }
}

#[test]
fn converged_solution_is_a_fixed_point() {
    let x = random_uniform([8, 8, 8], 3);
    let bundle = make_init_bundle(&x, [3, 3, 3], 1).unwrap();
    let s = &bundle.starts[0];
    let (model, trace) = hosvd_run(&x, [3, 3, 3], &s.v0, &s.w0, 300).unwrap();
    let (again, trace2) = hosvd_run(&x, [3, 3, 3], &model.v, &model.w, 1).unwrap();
    let last = *trace.objective.last().unwrap();
    assert!((trace2.objective[0] - last).abs() <= 1e-10 * last);
    assert!(again.u.sub(&model.u).unwrap().max_abs() < 1e-6);
}

#[test]
fn factors_are_orthonormal() {
    let x = random_uniform([7, 6, 5], 9);
    let (m, _) = hosvd_run(&x, [2, 3, 4], &FactorMatrix::padded_identity(6, 3), &FactorMatrix::padded_identity(5, 4), 5)
        .unwrap();
    for f in [&m.u, &m.v, &m.w] {
        assert!(f.orthonormality_error() < 1e-12);
    }
}

fn r1_win_rate(make: impl Fn(u64) -> Tensor3) -> usize {
    (0..50u64)
        .filter(|&trial| {
            let x = make(trial);
            let bundle = make_init_bundle(&x, [3, 3, 3], trial).unwrap();
            let first: Vec<f64> = bundle
                .starts
                .iter()
                .map(|s| hosvd_run(&x, [3, 3, 3], &s.v0, &s.w0, 1).unwrap().1.objective[0])
                .collect();
            first[1..].iter().all(|&o| first[0] >= o)
        })
        .count()
}

/// The PCA start should beat every random start after one sweep in at least
/// 90% of trials. Measured, not guaranteed.
#[test]
fn r1_is_a_warm_start() {
    let gaussian = r1_win_rate(|t| {
        let mut rng = SplitMix64::new(2000 + t);
        Tensor3::from_fn(10, 9, 8, |_, _, _| rng.next_gaussian())
    });
    let planted = r1_win_rate(|t| {
        planted_tucker(&PlantedSpec {
            dims: [10, 9, 8],
            core_dims: [3, 3, 3],
            spectrum: vec![1.0, 0.7, 0.5],
            noise: 0.1,
            seed: t,
        })
        .unwrap()
        .tensor
    });
    // Uniform(0,1) data has a dominant mean direction that the all-positive
    // random starts already capture, so the margin is not reliable there.
    let uniform = r1_win_rate(|t| random_uniform([10, 9, 8], 1000 + t));
    println!("R1 first-sweep wins: gaussian {gaussian}/50, planted {planted}/50, uniform {uniform}/50");
    assert!(gaussian >= 45, "gaussian: R1 won {gaussian}/50");
    assert!(planted >= 45, "planted: R1 won {planted}/50");
}
