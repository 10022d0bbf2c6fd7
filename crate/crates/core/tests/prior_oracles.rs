mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{
    integrate_even, integrate_positive, ks_on_grid, q_grid_spread, quantile_grid, tabulate_cdf, tau2_grid_spread, variance_constant,
};
use dss::prior::{
    marginal_beta_density, q_conditional, tau2_conditional, tau2_quadratic_form, Hyperparameters, PriorKind, ScaleConditional,
};
use dss::regime::Regime;

#[test]
fn tau2_conditional_is_prior_times_path_likelihood() {
    for kind in PriorKind::ALL {
        let spread = tau2_grid_spread(kind, 20, 1);
        assert!(spread < 1e-8, "{kind}: spread {spread}");
    }
}

#[test]
fn q_conditional_is_prior_times_mixing_density() {
    for kind in PriorKind::ALL {
        let spread = q_grid_spread(kind, 20, 2);
        assert!(spread < 1e-8, "{kind}: spread {spread}");
    }
}

fn ks_against_quadrature(cond: &ScaleConditional, draws: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..draws).map(|_| cond.sample(&mut rng).unwrap()).collect();
    v.sort_by(|a, b| a.total_cmp(b));
    let center = cond.ln_density_unnorm(v[draws / 2]);
    let density = |x: f64| if x > 0.0 { (cond.ln_density_unnorm(x) - center).exp() } else { 0.0 };
    let grid = quantile_grid(&v, 400);
    ks_on_grid(&v, &grid, &tabulate_cdf(density, &grid))
}

#[test]
fn conditional_draws_follow_their_densities() {
    let hp = Hyperparameters::example1();
    for kind in PriorKind::ALL {
        let beta: Vec<f64> = (0..40).map(|t| (t as f64 / 5.0).sin()).collect();
        let k: Vec<Regime> = (0..40).map(|t| Regime::from_slab(t < 25)).collect();
        let s = tau2_quadratic_form(&beta, &k, hp.spike_ratio, 0.95);
        let tau = tau2_conditional(kind, &hp, 0.2, s, 40).unwrap();
        let d = ks_against_quadrature(&tau, 100_000, 3);
        assert!(d < 0.01, "{kind} tau2: KS {d}");
        let q = q_conditional(kind, &hp, 0.3, 0.8).unwrap();
        let d = ks_against_quadrature(&q, 100_000, 4);
        assert!(d < 0.01, "{kind} Q: KS {d}");
    }
}

#[test]
fn marginal_densities_integrate_to_one_and_calibrate_the_variance() {
    let hp = Hyperparameters { spike_ratio: 0.01, nu: 5.0, a_tau: 0.5, ..Hyperparameters::example1() };
    for kind in PriorKind::ALL {
        for &w in &[0.0, 0.3, 0.9, 1.0] {
            let q = 0.7;
            let dens = |x: f64| marginal_beta_density(kind, &hp, q, w, x).unwrap();
            // split the integral at the spike scale so both components resolve
            let piv = (hp.spike_ratio * q).sqrt();
            let mass = integrate_even(&dens, piv);
            assert!((mass - 1.0).abs() < 1e-6, "{kind} w={w}: mass {mass}");
            let var = integrate_even(|x| x * x * dens(x), piv);
            let target = variance_constant(kind, &hp) * q * ((1.0 - w) * hp.spike_ratio + w);
            assert!(((var - target) / target).abs() < 1e-6, "{kind} w={w}: var {var} vs {target}");
        }
    }
}

#[test]
fn nmig_two_spike_shape() {
    let hp = Hyperparameters { spike_ratio: 0.0025, nu: 5.0, c_psi: 2.0, cap_c_psi: 0.05, ..Hyperparameters::example1() };
    let c = variance_constant(PriorKind::Nmig, &hp);
    let at_zero = |w: f64| {
        // Q at the mean of its inverse-gamma prior
        let q = hp.cap_c_psi / (c * ((1.0 - w) * hp.spike_ratio + w)) / (hp.c_psi - 1.0);
        let slab = marginal_beta_density(PriorKind::Nmig, &hp, q, 1.0, 0.0).unwrap();
        let mix = marginal_beta_density(PriorKind::Nmig, &hp, q, w, 0.0).unwrap();
        let spike = (mix - w * slab) / (1.0 - w);
        (mix, spike, slab)
    };
    let (mix5, spike5, slab5) = at_zero(0.5);
    let (mix9, spike9, slab9) = at_zero(0.9);
    assert!(spike5 > slab5 && spike9 > slab9);
    assert!(mix9 < mix5);
    // the spike stays visible as a second, sharper peak
    let q = hp.cap_c_psi / (c * (0.5 * hp.spike_ratio + 0.5));
    let d0 = marginal_beta_density(PriorKind::Nmig, &hp, q, 0.5, 0.0).unwrap();
    let d_spike_edge = marginal_beta_density(PriorKind::Nmig, &hp, q, 0.5, 3.0 * (hp.spike_ratio * q).sqrt()).unwrap();
    assert!(d0 > 5.0 * d_spike_edge);
    let tail = integrate_positive(|x| marginal_beta_density(PriorKind::Nmig, &hp, q, 0.5, x).unwrap(), q.sqrt());
    assert!((2.0 * tail - 1.0).abs() < 1e-6);
}
