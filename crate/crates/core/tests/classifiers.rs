use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shortcut_lab::classifiers::{bayes_latent_rule, fit_lda, LinearClassifier, DEFAULT_RIDGE};
use shortcut_lab::datagen::{generate_dataset, sample_latents, DatasetSpec, LatentSample};

fn latents(spec: &DatasetSpec, n: usize, seed: u64) -> (DMatrix<f64>, Vec<i8>) {
    let zs: Vec<LatentSample> = sample_latents(spec, n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let x = DMatrix::from_fn(2, n, |i, j| if i == 0 { zs[j].z_s } else { zs[j].z_c });
    (x, zs.iter().map(|z| z.y).collect())
}

fn angle(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos()
}

#[test]
fn lda_direction_converges_to_bayes() {
    for (rho_s, rho_c, sigma) in [(0.85, 0.9, 0.6), (0.6, 0.9, 0.4), (0.9, 0.7, 0.8)] {
        let spec = DatasetSpec {
            rho_s,
            rho_c,
            sigma_sc: sigma,
            ..DatasetSpec::default()
        };
        let (x, y) = latents(&spec, 1_000_000, 7);
        let lda = fit_lda(&x, &y, DEFAULT_RIDGE).unwrap();
        let bayes = bayes_latent_rule(spec.mu_s().unwrap(), spec.mu_c().unwrap(), sigma).unwrap();
        let a = angle(&lda.weights, &bayes.weights);
        assert!(a <= 0.05, "angle {a} at ({rho_s}, {rho_c}, {sigma})");
        assert!(lda.intercept.abs() < 0.01);
    }
}

#[test]
fn lda_accuracy_close_to_bayes_on_fresh_latents() {
    let spec = DatasetSpec::default();
    let (x_train, y_train) = latents(&spec, spec.n_train, 1);
    let (x_test, y_test) = latents(&spec, 100_000, 2);
    let lda = fit_lda(&x_train, &y_train, DEFAULT_RIDGE).unwrap();
    let bayes = bayes_latent_rule(spec.mu_s().unwrap(), spec.mu_c().unwrap(), spec.sigma_sc).unwrap();
    let acc_lda = lda.accuracy(&x_test, &y_test).unwrap();
    let acc_bayes = bayes.accuracy(&x_test, &y_test).unwrap();
    assert!(acc_lda >= acc_bayes - 0.005, "{acc_lda} vs {acc_bayes}");
}

#[test]
fn lda_on_embedded_inputs_matches_latent_accuracy() {
    let spec = DatasetSpec {
        seed: 3,
        ..DatasetSpec::default()
    };
    let ds = generate_dataset(&spec).unwrap();
    let lda = fit_lda(&ds.train.inputs, &ds.train.labels(), DEFAULT_RIDGE).unwrap();
    let bayes = bayes_latent_rule(spec.mu_s().unwrap(), spec.mu_c().unwrap(), spec.sigma_sc).unwrap();
    let acc = lda.accuracy(&ds.val.inputs, &ds.val.labels()).unwrap();
    let acc_bayes = bayes.accuracy(&ds.val.latent_matrix(), &ds.val.labels()).unwrap();
    // 100 input dimensions and 3200 samples: a little overfitting is expected.
    assert!(acc >= acc_bayes - 0.03, "{acc} vs {acc_bayes}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decisions_are_scale_invariant(
        w in prop::collection::vec(-5.0f64..5.0, 3),
        b in -2.0f64..2.0,
        c in 1e-3f64..1e3,
        xs in prop::collection::vec(-10.0f64..10.0, 30),
    ) {
        let clf = LinearClassifier { weights: w.clone(), intercept: b };
        let scaled = LinearClassifier { weights: w.iter().map(|v| v * c).collect(), intercept: b * c };
        let x = DMatrix::from_column_slice(3, 10, &xs);
        let p = clf.predict_batch(&x).unwrap();
        let q = scaled.predict_batch(&x).unwrap();
        for j in 0..10 {
            // Exact ties can flip under rounding; skip points within rounding of the boundary.
            let d = clf.decision(x.column(j).as_slice()).unwrap();
            if d.abs() > 1e-9 {
                prop_assert_eq!(p[j], q[j]);
            }
        }
    }

    #[test]
    fn relabeling_negates_the_fit(seed in 0u64..1000) {
        let spec = DatasetSpec::default();
        let (x, y) = latents(&spec, 200, seed);
        let flipped: Vec<i8> = y.iter().map(|v| -v).collect();
        let a = fit_lda(&x, &y, DEFAULT_RIDGE).unwrap();
        let b = fit_lda(&x, &flipped, DEFAULT_RIDGE).unwrap();
        for (u, v) in a.weights.iter().zip(&b.weights) {
            prop_assert!((u + v).abs() < 1e-9);
        }
        prop_assert!((a.intercept + b.intercept).abs() < 1e-9);
    }
}
