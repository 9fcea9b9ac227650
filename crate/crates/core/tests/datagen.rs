use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

use shortcut_lab::datagen::{
    build_apparatus, generate_dataset, make_probe_grid, predictivity_to_mean, sample_latents, DatasetSpec,
};

fn phi(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn small_spec() -> DatasetSpec {
    DatasetSpec {
        dim: 12,
        n_train: 200,
        n_val: 40,
        grid_res: 6,
        seed: 11,
        ..DatasetSpec::default()
    }
}

#[test]
fn quantile_round_trip() {
    for rho in [0.55, 0.7, 0.9, 0.99] {
        let mu = predictivity_to_mean(rho).unwrap();
        assert!((phi(mu) - rho).abs() < 1e-10, "rho {rho}");
    }
}

#[test]
fn latent_moments_and_predictivity() {
    let spec = DatasetSpec {
        rho_s: 0.7,
        rho_c: 0.9,
        sigma_sc: 0.6,
        ..DatasetSpec::default()
    };
    let n = 100_000;
    let zs = sample_latents(&spec, n, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(zs.iter().filter(|z| z.y == 1).count(), n / 2);

    let nf = n as f64;
    let agree = |f: &dyn Fn(&shortcut_lab::datagen::LatentSample) -> f64| {
        zs.iter().filter(|z| f(z).signum() == f64::from(z.y)).count() as f64 / nf
    };
    for (rho, emp) in [(0.7, agree(&|z| z.z_s)), (0.9, agree(&|z| z.z_c))] {
        let se = (rho * (1.0 - rho) / nf).sqrt();
        assert!((emp - rho).abs() < 5.0 * se, "predictivity {emp} vs {rho}");
    }

    // Residuals after removing the class mean are N(0, Σ).
    let (mu_s, mu_c) = (spec.mu_s().unwrap(), spec.mu_c().unwrap());
    let r: Vec<(f64, f64)> = zs
        .iter()
        .map(|z| {
            let y = f64::from(z.y);
            (z.z_s - y * mu_s, z.z_c - y * mu_c)
        })
        .collect();
    let mean = |f: &dyn Fn(&(f64, f64)) -> f64| r.iter().map(f).sum::<f64>() / nf;
    let tol = 5.0 / nf.sqrt();
    assert!(mean(&|p| p.0).abs() < tol);
    assert!(mean(&|p| p.1).abs() < tol);
    assert!((mean(&|p| p.0 * p.0) - 1.0).abs() < 2.0 * tol);
    assert!((mean(&|p| p.1 * p.1) - 1.0).abs() < 2.0 * tol);
    assert!((mean(&|p| p.0 * p.1) - 0.6).abs() < 2.0 * tol);
}

/// Two-sample Kolmogorov–Smirnov statistic.
fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn negative_class_mirrors_positive_class() {
    let spec = DatasetSpec::default();
    let zs = sample_latents(&spec, 100_000, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let pos: Vec<_> = zs.iter().filter(|z| z.y == 1).collect();
    let neg: Vec<_> = zs.iter().filter(|z| z.y == -1).collect();
    let m = pos.len() as f64;
    // alpha = 0.001 critical value for equal sample sizes.
    let crit = 1.95 * (2.0 / m).sqrt();
    let d_s = ks(pos.iter().map(|z| z.z_s).collect(), neg.iter().map(|z| -z.z_s).collect());
    let d_c = ks(pos.iter().map(|z| z.z_c).collect(), neg.iter().map(|z| -z.z_c).collect());
    // A projection mixing both coordinates catches a broken correlation sign.
    let d_mix = ks(
        pos.iter().map(|z| z.z_s - z.z_c).collect(),
        neg.iter().map(|z| z.z_c - z.z_s).collect(),
    );
    assert!(d_s < crit && d_c < crit && d_mix < crit, "{d_s} {d_c} {d_mix} vs {crit}");
}

#[test]
fn projection_recovers_scaled_latents() {
    let ds = generate_dataset(&small_spec()).unwrap();
    let app = &ds.apparatus;
    assert!(app.w_s.dot(&app.w_c).abs() < 1e-14);
    for (j, z) in ds.train.latents.iter().enumerate() {
        let x = ds.train.inputs.column(j);
        assert!((x.dot(&app.w_s) - ds.spec.alpha_s * z.z_s).abs() < 1e-12);
        assert!((x.dot(&app.w_c) - ds.spec.alpha_c * z.z_c).abs() < 1e-12);
    }
}

#[test]
fn nesting_cascade_inverts() {
    let spec = DatasetSpec {
        eta_c: 3,
        alpha_s: 0.1,
        alpha_c: 0.1,
        ..small_spec()
    };
    let app = build_apparatus(&spec, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let net = app.nest_c.as_ref().expect("nested core feature");
    assert_eq!(net.layers.len(), 3);
    assert!(app.nest_s.is_none());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let z: f64 = rand::Rng::gen_range(&mut rng, -3.0..3.0);
        // Each layer amplifies by up to lambda; keep the last pre-activation O(1).
        let e = &app.w_c * (spec.alpha_c * z * spec.lambda.powi(-3));
        let mut out = DMatrix::from_column_slice(spec.dim, 1, e.as_slice());
        net.apply(&mut out);
        let back = net.invert(&out.column(0).into_owned()).unwrap();
        assert!((back - &e).amax() <= 1e-6 * e.amax());
    }
}

#[test]
fn nested_inputs_compose_tanh_then_cascade() {
    let spec = DatasetSpec {
        eta_c: 2,
        alpha_s: 0.1,
        alpha_c: 0.1,
        ..small_spec()
    };
    let ds = generate_dataset(&spec).unwrap();
    let app = &ds.apparatus;
    let qs = &app.nest_c.as_ref().unwrap().layers;
    let th = |v: f64| (spec.lambda * v).tanh();
    for (j, z) in ds.train.latents.iter().enumerate().take(50) {
        let shortcut = (&app.w_s * (spec.alpha_s * z.z_s)).map(th);
        let mut core = (&app.w_c * (spec.alpha_c * z.z_c)).map(th);
        for q in qs {
            core = (q * core).map(th);
        }
        let expected = shortcut + core;
        assert!((ds.train.inputs.column(j) - expected).amax() < 1e-12);
    }
}

#[test]
fn generation_is_deterministic() {
    let a = generate_dataset(&small_spec()).unwrap();
    let b = generate_dataset(&small_spec()).unwrap();
    assert_eq!(a, b);
    let c = generate_dataset(&DatasetSpec {
        seed: 12,
        ..small_spec()
    })
    .unwrap();
    assert_ne!(a.train.inputs, c.train.inputs);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn probe_grid_is_negation_closed_and_zero_free(
        half_res in 1usize..25,
        rho_s in 0.55f64..0.99,
        rho_c in 0.55f64..0.99,
    ) {
        let spec = DatasetSpec { grid_res: 2 * half_res, rho_s, rho_c, ..DatasetSpec::default() };
        let g = make_probe_grid(&spec).unwrap();
        prop_assert_eq!(g.len(), spec.grid_res * spec.grid_res);
        for axis in [&g.axis_s, &g.axis_c] {
            prop_assert!(axis.iter().all(|&v| v != 0.0));
            for (i, v) in axis.iter().enumerate() {
                prop_assert_eq!(*v, -axis[axis.len() - 1 - i]);
            }
        }
        prop_assert!((g.axis_s[g.axis_s.len() - 1] - 3.0 * spec.mu_s().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn quantile_is_odd_and_monotone(rho in 0.5001f64..0.9999, d in 1e-4f64..0.01) {
        let a = predictivity_to_mean(rho).unwrap();
        prop_assert!((a + predictivity_to_mean(1.0 - rho).unwrap()).abs() < 1e-9);
        if rho + d < 1.0 {
            prop_assert!(predictivity_to_mean(rho + d).unwrap() > a);
        }
    }
}
