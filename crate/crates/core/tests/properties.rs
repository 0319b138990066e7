use proptest::prelude::*;
use qtl_core::data::{batches, gen_spirals, index_batches, Dataset, SpiralsConfig};
use qtl_core::nn::{cross_entropy_loss, softmax};
use qtl_core::transfer::truncate_quantum;
use qtl_core::{BareCircuit, Gate, StateVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn angles(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, n)
}

proptest! {
    #[test]
    fn gates_preserve_norm(n in 1usize..=5, seed in any::<u64>(), target in 0usize..5, angle in -10.0f64..10.0) {
        let target = target % n;
        let mut state = BareCircuit::random(n, 1, &mut ChaCha8Rng::seed_from_u64(seed))
            .unwrap()
            .final_state(&vec![0.3; n])
            .unwrap();
        state.apply_mut(&Gate::ry(target, angle)).unwrap();
        state.apply_mut(&Gate::h(target)).unwrap();
        if n > 1 {
            state.apply_mut(&Gate::cnot(target, (target + 1) % n)).unwrap();
        }
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circuits_stay_normalised_and_bounded(n in 1usize..=4, depth in 0usize..=5, seed in any::<u64>(), x in angles(4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = BareCircuit::random(n, depth, &mut rng).unwrap();
        let state = c.final_state(&x[..n]).unwrap();
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        for z in c.run(&x[..n]).unwrap() {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&z));
        }
    }

    #[test]
    fn truncation_keeps_leading_rows(n in 1usize..=4, depth in 0usize..=6, keep in 0usize..=6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = BareCircuit::random(n, depth, &mut rng).unwrap();
        match truncate_quantum(&c, keep) {
            Ok(t) => {
                prop_assert!(keep <= depth);
                prop_assert_eq!(t.weights(), &c.weights()[..keep * n]);
            }
            Err(_) => prop_assert!(keep > depth),
        }
    }

    #[test]
    fn softmax_is_a_distribution(logits in prop::collection::vec(-700.0f64..700.0, 1..8)) {
        let p = softmax(&logits);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&q| (0.0..=1.0).contains(&q)));
    }

    #[test]
    fn cross_entropy_is_non_negative(logits in prop::collection::vec(-50.0f64..50.0, 2..8), label in 0usize..8) {
        let label = label % logits.len();
        let (loss, grad) = cross_entropy_loss(&logits, label).unwrap();
        prop_assert!(loss >= 0.0);
        prop_assert!(grad.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn batches_cover_every_index_once(n in 1usize..300, batch in 1usize..40, seed in any::<u64>()) {
        let b = index_batches(n, batch, seed);
        prop_assert_eq!(b.len(), n.div_ceil(batch));
        prop_assert!(b.iter().all(|c| !c.is_empty() && c.len() <= batch));
        let mut all: Vec<usize> = b.into_iter().flatten().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn spirals_are_balanced(n_train in 1usize..200, n_test in 1usize..50, seed in any::<u64>()) {
        let (train, test) = gen_spirals(&SpiralsConfig { n_train, n_test, seed, ..SpiralsConfig::default() }).unwrap();
        for d in [&train, &test] {
            let c = d.class_counts();
            prop_assert!(c[0].abs_diff(c[1]) <= 1);
        }
    }

    #[test]
    fn dataset_batches_match_index_batches(n in 1usize..50, seed in any::<u64>()) {
        let d = Dataset::new(1, vec![0.0; n], vec![0; n], 2).unwrap();
        prop_assert_eq!(batches(&d, 4, seed), index_batches(n, 4, seed));
    }

    #[test]
    fn zero_state_is_basis_zero(n in 1usize..=6) {
        let s = StateVector::zero(n).unwrap();
        prop_assert_eq!(s.expect_z_all(), vec![1.0; n]);
    }
}
