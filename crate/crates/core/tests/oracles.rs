use std::f64::consts::{FRAC_PI_2, LN_2};

use approx::assert_abs_diff_eq;
use qtl_core::data::{gen_feature_blobs, gen_spirals, BlobsConfig, Dataset, SpiralsConfig};
use qtl_core::gradients::bare_jacobians;
use qtl_core::nn::{cross_entropy_loss, AdamConfig, ParamSet};
use qtl_core::train::{train, TrainConfig};
use qtl_core::{Adam, BareCircuit, DressedCircuit, Model};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn logistic_accuracy(train: &Dataset, test: &Dataset) -> f64 {
    let w_len = train.width();
    let mut w = vec![0.0; w_len + 1];
    let score = |w: &[f64], x: &[f64]| w[w_len] + x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
    for _ in 0..500 {
        let mut grad = vec![0.0; w_len + 1];
        for (x, label) in train.rows() {
            let err = 1.0 / (1.0 + (-score(&w, x)).exp()) - label as f64;
            for (g, xi) in grad.iter_mut().zip(x) {
                *g += err * xi;
            }
            grad[w_len] += err;
        }
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= 0.5 * g / train.len() as f64;
        }
    }
    let correct = test
        .rows()
        .filter(|(x, label)| usize::from(score(&w, x) > 0.0) == *label)
        .count();
    correct as f64 / test.len() as f64
}

#[test]
fn spirals_defeat_a_linear_classifier() {
    for seed in 0..3 {
        let (train, test) = gen_spirals(&SpiralsConfig {
            seed,
            ..SpiralsConfig::default()
        })
        .unwrap();
        let acc = logistic_accuracy(&train, &test);
        assert!(acc < 0.70, "seed {seed}: linear accuracy {acc}");
    }
}

fn blobs(separation: f64) -> (Dataset, Dataset) {
    gen_feature_blobs(&BlobsConfig {
        width: 16,
        n_train: 400,
        n_test: 2000,
        separation,
        sigma: 1.0,
        seed: 4,
    })
    .unwrap()
}

#[test]
fn blob_separation_controls_linear_accuracy() {
    let (train, test) = blobs(0.0);
    let chance = logistic_accuracy(&train, &test);
    assert!((0.45..0.55).contains(&chance), "{chance}");
    let (train, test) = blobs(10.0);
    let easy = logistic_accuracy(&train, &test);
    assert!(easy > 0.999, "{easy}");
}

#[test]
fn single_qubit_closed_form() {
    for x in [-1.0, -0.3, 0.0, 0.6, 1.0] {
        let bare = BareCircuit::new(1, 0, vec![]).unwrap();
        assert_abs_diff_eq!(
            bare.run(&[x]).unwrap()[0],
            -(x * FRAC_PI_2).sin(),
            epsilon = 1e-12
        );
        let w = 0.7;
        let one = BareCircuit::new(1, 1, vec![w]).unwrap();
        assert_abs_diff_eq!(
            one.run(&[x]).unwrap()[0],
            -(x * FRAC_PI_2 + w).sin(),
            epsilon = 1e-12
        );
    }
}

#[test]
fn cnot_chain_correlates_neighbours() {
    let (a, b) = (0.4, -0.9);
    let z0 = -(a * FRAC_PI_2).sin();
    let z1 = -(b * FRAC_PI_2).sin();
    let c = BareCircuit::new(2, 1, vec![0.0, 0.0]).unwrap();
    let z = c.run(&[a, b]).unwrap();
    assert_abs_diff_eq!(z[0], z0, epsilon = 1e-12);
    assert_abs_diff_eq!(z[1], z0 * z1, epsilon = 1e-12);
}

#[test]
fn parameter_shift_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let eps = 1e-5;
    for _ in 0..20 {
        let n = rng.random_range(1..=4);
        let depth = rng.random_range(1..=4);
        let c = BareCircuit::random(n, depth, &mut rng).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let jac = bare_jacobians(&c, &x).unwrap();
        for layer in 0..depth {
            for q in 0..n {
                let mut plus = c.clone();
                plus.set_weight(layer, q, c.weight(layer, q) + eps);
                let mut minus = c.clone();
                minus.set_weight(layer, q, c.weight(layer, q) - eps);
                let (zp, zm) = (plus.run(&x).unwrap(), minus.run(&x).unwrap());
                for out in 0..n {
                    let fd = (zp[out] - zm[out]) / (2.0 * eps);
                    assert_abs_diff_eq!(jac.d_weight(out, layer, q), fd, epsilon = 1e-8);
                }
            }
        }
        for i in 0..n {
            let mut xp = x.clone();
            xp[i] += eps;
            let mut xm = x.clone();
            xm[i] -= eps;
            let (zp, zm) = (c.run(&xp).unwrap(), c.run(&xm).unwrap());
            for out in 0..n {
                let fd = (zp[out] - zm[out]) / (2.0 * eps);
                assert_abs_diff_eq!(jac.d_input(out, i), fd, epsilon = 1e-8);
            }
        }
    }
}

#[test]
fn uniform_logits_cost_ln_2() {
    let (loss, grad) = cross_entropy_loss(&[-3.0, -3.0], 0).unwrap();
    assert_abs_diff_eq!(loss, LN_2, epsilon = 1e-12);
    assert_abs_diff_eq!(grad[0], -0.5, epsilon = 1e-12);
}

#[test]
fn adam_first_step_moves_by_the_learning_rate() {
    let mut params = ParamSet::default();
    params.push("w", vec![1.0, -2.0]);
    let mut grads = ParamSet::default();
    grads.push("w", vec![3.0, -0.01]);
    let mut adam = Adam::new(AdamConfig::new(0.1), &params);
    adam.step(&mut params, &grads).unwrap();
    let w = params.get("w").unwrap();
    assert_abs_diff_eq!(w[0], 0.9, epsilon = 1e-8);
    assert_abs_diff_eq!(w[1], -1.9, epsilon = 1e-5);
}

#[test]
fn dressed_circuit_learns_spirals() {
    let (train_set, test_set) = gen_spirals(&SpiralsConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut model = DressedCircuit::random(2, 4, 5, 2, &mut rng).unwrap();
    let trace = train(
        &mut model,
        &train_set,
        Some(&test_set),
        &TrainConfig::new(600, 10, 0.02, 0),
    )
    .unwrap();
    let losses = trace.losses();
    assert!(losses.last().unwrap() < &losses[0]);
    assert!(model.accuracy(&test_set).unwrap() > 0.8);
}
