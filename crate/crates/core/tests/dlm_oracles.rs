mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{normal_matrix, random_dlm, rts_means, simulate_dlm, JointGaussian};
use dss::dlm::{build_conditional_dlm, ffbs_sample, kalman_filter, unscale_states, ConditionalDlm, DlmStep};
use dss::linalg::SysMatrix;
use dss::regime::{Regime, RegimeMatrix};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn filtered_moments_match_joint_conditioning() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dlm = random_dlm(3, 2, 2, &mut rng);
        let (_, y) = simulate_dlm(&dlm, &mut rng);
        let stats = kalman_filter(&dlm, &y).unwrap();
        let joint = JointGaussian::new(&dlm);
        let (mean, cov) = joint.condition_states(&y);
        let last = 2 * 2;
        for i in 0..2 {
            assert!(close(stats.mean[2][i], mean[last + i], 1e-10), "seed {seed} mean {i}");
            for k in 0..2 {
                assert!(close(stats.cov[2][(i, k)], cov[(last + i, last + k)], 1e-10), "seed {seed} cov {i},{k}");
            }
        }
    }
}

#[test]
fn filtered_moments_match_with_singular_state_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dlm = random_dlm(4, 3, 1, &mut rng);
    let (_, y) = simulate_dlm(&dlm, &mut rng);
    let stats = kalman_filter(&dlm, &y).unwrap();
    let (mean, cov) = JointGaussian::new(&dlm).condition_states(&y);
    for i in 0..3 {
        assert!(close(stats.mean[3][i], mean[9 + i], 1e-9));
        assert!(close(stats.cov[3][(i, i)], cov[(9 + i, 9 + i)], 1e-9));
    }
}

#[test]
fn log_likelihood_matches_joint_marginal() {
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = rng.random_range(1..=5);
        let q = rng.random_range(1..=3);
        let rank = rng.random_range(1..=q);
        let dlm = random_dlm(n, q, rank, &mut rng);
        let (_, y) = simulate_dlm(&dlm, &mut rng);
        let filt = kalman_filter(&dlm, &y).unwrap().total_loglik();
        let exact = JointGaussian::new(&dlm).log_marginal(&y);
        assert!((filt - exact).abs() < 1e-8, "seed {seed}: {filt} vs {exact}");
    }
}

#[test]
fn static_coefficients_give_the_conjugate_regression_posterior() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, q) = (25, 2);
    let x = normal_matrix(n, q, &mut rng);
    let sd = 0.7;
    let prior_var = 4.0;
    let steps = (0..n)
        .map(|t| DlmStep {
            obs_offset: 0.0,
            loading: x.row(t).transpose(),
            obs_sd: sd,
            state_offset: DVector::zeros(q),
            transition: SysMatrix::identity(q),
            noise: SysMatrix::zeros(q),
        })
        .collect();
    let dlm = ConditionalDlm { steps, m0: DVector::zeros(q), v0: DMatrix::identity(q, q) * prior_var };
    let y: Vec<f64> = (0..n).map(|t| x[(t, 0)] - 0.5 * x[(t, 1)] + sd * rng.random::<f64>()).collect();
    let stats = kalman_filter(&dlm, &y).unwrap();

    let precision = x.transpose() * &x / (sd * sd) + DMatrix::identity(q, q) / prior_var;
    let post_cov = precision.try_inverse().unwrap();
    let post_mean = &post_cov * x.transpose() * DVector::from_column_slice(&y) / (sd * sd);
    for i in 0..q {
        assert!(close(stats.mean[n - 1][i], post_mean[i], 1e-10));
        for k in 0..q {
            assert!(close(stats.cov[n - 1][(i, k)], post_cov[(i, k)], 1e-10));
        }
    }
}

#[test]
fn zero_loading_propagates_the_prior() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut dlm = random_dlm(5, 2, 2, &mut rng);
    for s in &mut dlm.steps {
        s.loading.fill(0.0);
        s.obs_offset = 0.0;
        s.obs_sd = 1.0;
    }
    let y = [0.3, -1.2, 0.8, 2.0, -0.1];
    let stats = kalman_filter(&dlm, &y).unwrap();
    let mut m = dlm.m0.clone();
    for (t, s) in dlm.steps.iter().enumerate() {
        m = &s.state_offset + s.transition.mul_vec(&m);
        assert!((&stats.mean[t] - &m).amax() < 1e-12);
        let iid = -0.5 * (std::f64::consts::TAU.ln() + y[t] * y[t]);
        assert!((stats.loglik[t] - iid).abs() < 1e-12);
    }
}

#[test]
fn ffbs_average_converges_to_the_smoother() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let dlm = random_dlm(4, 2, 2, &mut rng);
    let (_, y) = simulate_dlm(&dlm, &mut rng);
    let stats = kalman_filter(&dlm, &y).unwrap();
    let smooth = rts_means(&dlm, &y);
    let (_, cov) = JointGaussian::new(&dlm).condition_states(&y);
    let draws = 100_000;
    let mut sum = DMatrix::zeros(4, 2);
    for _ in 0..draws {
        sum += ffbs_sample(&dlm, &y, &stats, &mut rng).unwrap().states;
    }
    for t in 0..4 {
        for j in 0..2 {
            let se = (cov[(2 * t + j, 2 * t + j)] / draws as f64).sqrt();
            let dev = (sum[(t, j)] / draws as f64 - smooth[t][j]).abs();
            assert!(dev < 4.0 * se, "t={t} j={j}: {dev} vs se {se}");
        }
    }
}

#[test]
fn zero_state_noise_gives_a_deterministic_backward_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut dlm = random_dlm(5, 2, 2, &mut rng);
    for s in &mut dlm.steps {
        s.noise = SysMatrix::zeros(2);
    }
    let (_, y) = simulate_dlm(&dlm, &mut rng);
    let stats = kalman_filter(&dlm, &y).unwrap();
    let path = ffbs_sample(&dlm, &y, &stats, &mut rng).unwrap().states;
    for t in 0..4 {
        let s = &dlm.steps[t + 1];
        let next = path.row(t + 1).transpose();
        let cur = path.row(t).transpose();
        let implied = &s.state_offset + s.transition.mul_vec(&cur);
        assert!((implied - next).amax() < 1e-8, "t={t}");
    }
}

#[test]
fn unscaled_coefficients_follow_the_regime_scaled_ar() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (n, r, tau2, phi) = (200, 0.005, 4.0, 0.9);
    let path: Vec<Regime> = (0..n).map(|t| Regime::from_slab((t / 20) % 2 == 0)).collect();
    let k = RegimeMatrix::from_columns(&[path.clone()]);
    let mut scaled = DMatrix::zeros(n, 1);
    let mut innov = vec![0.0; n];
    scaled[(0, 0)] = rng.sample::<f64, _>(rand_distr::StandardNormal);
    for t in 1..n {
        innov[t] = rng.sample::<f64, _>(rand_distr::StandardNormal);
        scaled[(t, 0)] = phi * scaled[(t - 1, 0)] + (1.0 - phi * phi).sqrt() * innov[t];
    }
    let beta = unscale_states(&scaled, &k, r, &[tau2]);
    for t in 1..n {
        let psi = path[t].scale(r) * tau2;
        let psi_prev = path[t - 1].scale(r) * tau2;
        let pred = (psi / psi_prev).sqrt() * phi * beta[(t - 1, 0)];
        let noise = (psi * (1.0 - phi * phi)).sqrt() * innov[t];
        assert!((beta[(t, 0)] - pred - noise).abs() < 1e-12);
    }
}

#[test]
fn spike_loading_scale() {
    let x = DMatrix::from_element(1, 1, 1.0);
    let k = RegimeMatrix::filled(1, 1, Regime::Spike);
    let dlm = build_conditional_dlm(&x, &k, 0.005, &[4.0], &[0.97], 1.0).unwrap();
    assert!((dlm.steps[0].loading[0] - 0.02f64.sqrt()).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn filtered_covariances_stay_symmetric_psd(seed in 0u64..10_000, n in 1usize..8, q in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dlm = random_dlm(n, q, q, &mut rng);
        let (_, y) = simulate_dlm(&dlm, &mut rng);
        let stats = kalman_filter(&dlm, &y).unwrap();
        for v in &stats.cov {
            prop_assert!((v - v.transpose()).amax() == 0.0);
            let min = v.clone().symmetric_eigen().eigenvalues.min();
            prop_assert!(min >= -1e-10, "min eigenvalue {}", min);
        }
        prop_assert!(stats.pred_var.iter().all(|r| *r > 0.0));
    }

    #[test]
    fn unit_scale_loadings_equal_the_regressors(seed in 0u64..10_000, n in 1usize..20, q in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = normal_matrix(n, q, &mut rng);
        let k = RegimeMatrix::filled(n, q, Regime::Slab);
        let phi = vec![0.5; q];
        let a = build_conditional_dlm(&x, &k, 0.01, &vec![1.0; q], &phi, 1.0).unwrap();
        let b = build_conditional_dlm(&x, &k, 0.01, &vec![1.0; q], &phi, 1.0).unwrap();
        prop_assert_eq!(&a, &b);
        for t in 0..n {
            for j in 0..q {
                prop_assert_eq!(a.steps[t].loading[j], x[(t, j)]);
            }
        }
    }
}
