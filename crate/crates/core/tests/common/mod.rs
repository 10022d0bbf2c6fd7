//! Independent oracles shared by the integration tests: brute-force joint
//! Gaussian conditioning, exhaustive regime enumeration, a smoother, a joint
//! prior simulator and quadrature helpers.
#![allow(dead_code)]

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use dss::dists::{sample_beta, sample_gamma, sample_inv_gamma};
use dss::dlm::{ConditionalDlm, DlmStep, RegimeSystem};
use dss::gck::RegimePrior;
use dss::linalg::SysMatrix;
use dss::prior::{q_conditional, q_prior_scale, slab_weight, tau2_conditional, tau2_quadratic_form, Hyperparameters, PriorKind};
use statrs::function::gamma::ln_gamma;
use dss::regime::{Regime, RegimeMatrix};
use dss::sampler::{mcmc_step, McmcConfig, McmcState};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

pub fn normal_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn normal_vector<R: Rng>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// A random DLM with dense system matrices. `rank_noise < q` gives a
/// singular state noise factor.
pub fn random_dlm<R: Rng>(n: usize, q: usize, rank_noise: usize, rng: &mut R) -> ConditionalDlm {
    let steps = (0..n)
        .map(|_| {
            let mut g = normal_matrix(q, q, rng) * (0.6 / (q as f64).sqrt());
            for i in 0..q {
                g[(i, i)] += 0.3;
            }
            let mut gamma = normal_matrix(q, q, rng) * 0.5;
            for c in rank_noise..q {
                gamma.column_mut(c).fill(0.0);
            }
            DlmStep {
                obs_offset: rng.sample::<f64, _>(StandardNormal) * 0.3,
                loading: normal_vector(q, rng),
                obs_sd: 0.3 + rng.random::<f64>(),
                state_offset: normal_vector(q, rng) * 0.2,
                transition: SysMatrix::Dense(g),
                noise: SysMatrix::Dense(gamma),
            }
        })
        .collect();
    let a = normal_matrix(q, q, rng);
    let v0 = &a * a.transpose() * 0.5 + DMatrix::identity(q, q) * 0.2;
    ConditionalDlm { steps, m0: normal_vector(q, rng), v0 }
}

/// Draw `(theta_{1:T}, y_{1:T})` from the model by forward simulation.
pub fn simulate_dlm<R: Rng>(dlm: &ConditionalDlm, rng: &mut R) -> (DMatrix<f64>, Vec<f64>) {
    let q = dlm.m0.len();
    let l = Cholesky::new(dlm.v0.clone()).expect("V0 positive definite").l();
    let mut theta = &dlm.m0 + l * normal_vector(q, rng);
    let mut states = DMatrix::zeros(dlm.steps.len(), q);
    let mut y = Vec::with_capacity(dlm.steps.len());
    for (t, s) in dlm.steps.iter().enumerate() {
        theta = &s.state_offset + s.transition.mul_vec(&theta) + s.noise.mul_vec(&normal_vector(q, rng));
        y.push(s.obs_offset + s.loading.dot(&theta) + s.obs_sd * rng.sample::<f64, _>(StandardNormal));
        states.set_row(t, &theta.transpose());
    }
    (states, y)
}

/// Joint Gaussian law of `(theta_1, ..., theta_T, y_1, ..., y_T)` built as an
/// affine map of `(theta_0, v_{1:T}, u_{1:T})`.
pub struct JointGaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub n: usize,
    pub q: usize,
}

impl JointGaussian {
    pub fn new(dlm: &ConditionalDlm) -> Self {
        let n = dlm.steps.len();
        let q = dlm.m0.len();
        let nz = q + n * q + n;
        // z = (theta_0, v_1..v_T, u_1..u_T), mean and covariance
        let mut mz = DVector::zeros(nz);
        mz.rows_mut(0, q).copy_from(&dlm.m0);
        let mut sz = DMatrix::identity(nz, nz);
        sz.view_mut((0, 0), (q, q)).copy_from(&dlm.v0);

        let dim = n * q + n;
        let mut map = DMatrix::zeros(dim, nz);
        let mut offset = DVector::zeros(dim);
        // theta_t = c + A z, starting from theta_0 = z[0..q]
        let mut a = DMatrix::zeros(q, nz);
        a.view_mut((0, 0), (q, q)).fill_with_identity();
        let mut c = DVector::zeros(q);
        for (t, s) in dlm.steps.iter().enumerate() {
            let g = s.transition.to_dense();
            let gam = s.noise.to_dense();
            a = &g * &a;
            a.view_mut((0, q + t * q), (q, q)).copy_from(&gam);
            c = &s.state_offset + &g * &c;
            map.view_mut((t * q, 0), (q, nz)).copy_from(&a);
            offset.rows_mut(t * q, q).copy_from(&c);
            let row = n * q + t;
            let fa = s.loading.transpose() * &a;
            map.row_mut(row).copy_from(&fa);
            map[(row, q + n * q + t)] = s.obs_sd;
            offset[row] = s.obs_offset + s.loading.dot(&c);
        }
        let mean = offset + &map * mz;
        let cov = &map * sz * map.transpose();
        Self { mean, cov, n, q }
    }

    fn split(&self) -> (usize, usize) {
        (self.n * self.q, self.n)
    }

    /// `E(theta | y)` (stacked by time) and `Cov(theta | y)`.
    pub fn condition_states(&self, y: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let (ns, ny) = self.split();
        let yv = DVector::from_column_slice(y);
        let syy = self.cov.view((ns, ns), (ny, ny)).into_owned();
        let sty = self.cov.view((0, ns), (ns, ny)).into_owned();
        let stt = self.cov.view((0, 0), (ns, ns)).into_owned();
        let chol = Cholesky::new(syy).expect("Var(y) positive definite");
        let resid = yv - self.mean.rows(ns, ny);
        let mean = self.mean.rows(0, ns) + &sty * chol.solve(&resid);
        let cov = stt - &sty * chol.solve(&sty.transpose());
        (mean, cov)
    }

    /// `ln p(y)`.
    pub fn log_marginal(&self, y: &[f64]) -> f64 {
        let (ns, ny) = self.split();
        let idx: Vec<usize> = (ns..ns + ny).collect();
        ln_mvn(&DVector::from_column_slice(y), &self.sub_mean(&idx), &self.sub_cov(&idx, &idx))
    }

    /// `ln p(y_{t+1:T} | theta_t = theta)` for 0-based `t`.
    pub fn log_future_given_state(&self, t: usize, theta: &DVector<f64>, y: &[f64]) -> f64 {
        let q = self.q;
        let (ns, _) = self.split();
        let s_idx: Vec<usize> = (t * q..(t + 1) * q).collect();
        let f_idx: Vec<usize> = (ns + t + 1..ns + self.n).collect();
        let (m, c) = self.conditional(&f_idx, &s_idx, theta);
        ln_mvn(&DVector::from_column_slice(&y[t + 1..]), &m, &c)
    }

    /// `ln p(y_{t+1:T} | y_{1:t})` for 0-based `t`.
    pub fn log_future_given_past(&self, t: usize, y: &[f64]) -> f64 {
        let (ns, _) = self.split();
        let p_idx: Vec<usize> = (ns..=ns + t).collect();
        let f_idx: Vec<usize> = (ns + t + 1..ns + self.n).collect();
        let (m, c) = self.conditional(&f_idx, &p_idx, &DVector::from_column_slice(&y[..=t]));
        ln_mvn(&DVector::from_column_slice(&y[t + 1..]), &m, &c)
    }

    fn sub_mean(&self, idx: &[usize]) -> DVector<f64> {
        DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean[i]))
    }

    fn sub_cov(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.cov[(rows[i], cols[j])])
    }

    fn conditional(&self, target: &[usize], given: &[usize], value: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let sgg = self.sub_cov(given, given);
        let stg = self.sub_cov(target, given);
        let chol = Cholesky::new(sgg).expect("conditioning block positive definite");
        let m = self.sub_mean(target) + &stg * chol.solve(&(value - self.sub_mean(given)));
        let c = self.sub_cov(target, target) - &stg * chol.solve(&stg.transpose());
        (m, c)
    }
}

pub fn ln_mvn(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let chol = Cholesky::new(cov.clone()).expect("covariance positive definite");
    let d = x - mean;
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    -0.5 * (x.len() as f64 * LN_2PI + logdet + d.dot(&chol.solve(&d)))
}

/// Rauch-Tung-Striebel smoothed means, computed with its own filter.
pub fn rts_means(dlm: &ConditionalDlm, y: &[f64]) -> Vec<DVector<f64>> {
    let mut m = dlm.m0.clone();
    let mut v = dlm.v0.clone();
    let mut filt = Vec::new();
    let mut pred = Vec::new();
    for (s, &yt) in dlm.steps.iter().zip(y) {
        let g = s.transition.to_dense();
        let w = s.noise.to_dense() * s.noise.to_dense().transpose();
        let a = &s.state_offset + &g * &m;
        let p = &g * &v * g.transpose() + w;
        let f = &s.loading;
        let r = (f.transpose() * &p * f)[0] + s.obs_sd * s.obs_sd;
        let k = &p * f / r;
        m = &a + &k * (yt - s.obs_offset - f.dot(&a));
        v = &p - &k * f.transpose() * &p;
        pred.push((a, p));
        filt.push((m.clone(), v.clone()));
    }
    let n = filt.len();
    let mut out = vec![DVector::zeros(0); n];
    out[n - 1] = filt[n - 1].0.clone();
    for t in (0..n - 1).rev() {
        let g = dlm.steps[t + 1].transition.to_dense();
        let (a, p) = &pred[t + 1];
        let (mt, vt) = &filt[t];
        let gain = vt * g.transpose() * p.clone().try_inverse().expect("invertible predictive covariance");
        out[t] = mt + gain * (&out[t + 1] - a);
    }
    out
}

/// All `2^n` regime paths of length `n`.
pub fn all_paths(n: usize) -> Vec<Vec<Regime>> {
    (0..1usize << n).map(|b| (0..n).map(|t| Regime::from_slab(b >> t & 1 == 1)).collect()).collect()
}

/// Exact posterior `p(K | y)` over all paths of column `j`, other columns
/// fixed, by brute-force Gaussian marginal likelihoods.
pub fn enumerate_posterior<S: RegimeSystem>(
    sys: &S,
    y: &[f64],
    k: &RegimeMatrix,
    j: usize,
    prior: &RegimePrior,
) -> Vec<(Vec<Regime>, f64)> {
    let paths = all_paths(y.len());
    let ln_w: Vec<f64> = paths
        .iter()
        .map(|p| {
            let mut kk = k.clone();
            kk.set_column(j, p);
            JointGaussian::new(&sys.materialize(&kk)).log_marginal(y) + prior.ln_path(p)
        })
        .collect();
    let hi = ln_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = ln_w.iter().map(|w| (w - hi).exp()).sum();
    paths.into_iter().zip(ln_w).map(|(p, w)| (p, (w - hi).exp() / total)).collect()
}

/// `P(K_t = slab | y, K_{s != t})` from the enumerated posterior.
pub fn enumerated_conditionals(posterior: &[(Vec<Regime>, f64)], current: &[Regime]) -> Vec<f64> {
    (0..current.len())
        .map(|t| {
            let mut num = 0.0;
            let mut den = 0.0;
            for (p, w) in posterior {
                if (0..current.len()).all(|s| s == t || p[s] == current[s]) {
                    den += w;
                    if p[t].is_slab() {
                        num += w;
                    }
                }
            }
            num / den
        })
        .collect()
}

/// `int_a^b f` by double-exponential quadrature.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    quadrature::double_exponential::integrate(f, a, b, 1e-13).integral
}

/// `int_0^inf f`, mapped to the unit interval by `x = u / (1 - u)` and split
/// at `pivot` (a point near the bulk of the mass).
pub fn integrate_positive(f: impl Fn(f64) -> f64, pivot: f64) -> f64 {
    let head = integrate(&f, 0.0, pivot);
    let tail = integrate(
        |u| {
            let x = pivot + u / (1.0 - u);
            if u >= 1.0 {
                0.0
            } else {
                f(x) / (1.0 - u).powi(2)
            }
        },
        0.0,
        1.0,
    );
    head + tail
}

/// `int_{-inf}^{inf} f` for an even integrand.
pub fn integrate_even(f: impl Fn(f64) -> f64, pivot: f64) -> f64 {
    2.0 * integrate_positive(f, pivot)
}

/// Sup distance between the empirical CDF of `sorted` and a CDF tabulated at
/// increasing points `grid` with values `cdf`.
pub fn ks_on_grid(sorted: &[f64], grid: &[f64], cdf: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    grid.iter()
        .zip(cdf)
        .map(|(x, c)| {
            let below = sorted.partition_point(|v| v < x) as f64 / n;
            let at = sorted.partition_point(|v| v <= x) as f64 / n;
            (below - c).abs().max((at - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Tabulate the CDF of an unnormalized positive density at `grid` (sorted,
/// positive) by piecewise quadrature, normalizing with the tails.
pub fn tabulate_cdf(density: impl Fn(f64) -> f64, grid: &[f64]) -> Vec<f64> {
    let mut acc = integrate(&density, 0.0, grid[0]);
    let mut out = vec![acc];
    for w in grid.windows(2) {
        acc += integrate(&density, w[0], w[1]);
        out.push(acc);
    }
    let last = *grid.last().unwrap();
    let total = acc + integrate_positive(|x| density(last + x), last.max(1e-3));
    out.iter().map(|v| v / total).collect()
}

/// Grid of `m` points at evenly spaced empirical quantiles of `sorted`.
pub fn quantile_grid(sorted: &[f64], m: usize) -> Vec<f64> {
    let n = sorted.len();
    let mut g: Vec<f64> = (1..m).map(|i| sorted[i * (n - 1) / m]).collect();
    g.dedup();
    g
}

/// One-sample KS distance against an analytic CDF.
pub fn ks_analytic(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, x)| {
            let c = cdf(*x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

pub fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// One draw of every model quantity from the joint prior for a fixed design.
pub fn draw_from_prior<R: Rng>(
    kind: PriorKind,
    hp: &Hyperparameters,
    n: usize,
    q: usize,
    rng: &mut R,
) -> McmcState {
    let mut cols = Vec::with_capacity(q);
    let mut state = McmcState {
        beta_tilde: DMatrix::zeros(n, q),
        k: RegimeMatrix::filled(n, q, Regime::Slab),
        tau2: vec![0.0; q],
        q: vec![0.0; q],
        phi: vec![0.0; q],
        stay_slab: vec![0.0; q],
        stay_spike: vec![0.0; q],
        sigma2: sample_inv_gamma(hp.a_sigma, hp.b_sigma, rng).unwrap(),
    };
    for j in 0..q {
        let phi = sample_beta(hp.a_phi, hp.b_phi, rng).unwrap();
        let stay_slab = sample_beta(hp.a_omega, hp.b_omega, rng).unwrap();
        let stay_spike = sample_beta(hp.a_omega, hp.b_omega, rng).unwrap();
        let w = slab_weight(hp, stay_slab, stay_spike);
        let qj = sample_inv_gamma(hp.c_psi, q_prior_scale(kind, hp, w).unwrap(), rng).unwrap();
        let tau2 = match kind {
            PriorKind::Nmig => sample_inv_gamma(hp.nu, qj, rng).unwrap(),
            _ => sample_gamma(hp.mixing_shape(kind), 1.0 / (2.0 * qj), rng).unwrap(),
        };
        let mut path = Vec::with_capacity(n);
        let mut slab = rng.random::<f64>() < 0.5;
        let mut b = rng.sample::<f64, _>(StandardNormal);
        for t in 0..n {
            if t > 0 {
                let stay = if slab { stay_slab } else { stay_spike };
                if rng.random::<f64>() >= stay {
                    slab = !slab;
                }
                b = phi * b + (1.0 - phi * phi).sqrt() * rng.sample::<f64, _>(StandardNormal);
            }
            path.push(Regime::from_slab(slab));
            state.beta_tilde[(t, j)] = b;
        }
        cols.push(path);
        state.tau2[j] = tau2;
        state.q[j] = qj;
        state.phi[j] = phi;
        state.stay_slab[j] = stay_slab;
        state.stay_spike[j] = stay_spike;
    }
    state.k = RegimeMatrix::from_columns(&cols);
    state
}

/// `y_t = x_t' beta_t + sigma e_t` for the unscaled coefficients of `state`.
pub fn draw_response<R: Rng>(state: &McmcState, x: &DMatrix<f64>, spike_ratio: f64, rng: &mut R) -> Vec<f64> {
    let beta = state.beta(spike_ratio);
    (0..x.nrows())
        .map(|t| x.row(t).dot(&beta.row(t)) + state.sigma2.sqrt() * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Successive-conditional simulator: alternate a fresh response given the
/// parameters with one sampler iteration given the response. Returns the
/// recorded `(phi_1, stay_slab_1, sigma2)`.
pub fn geweke(kind: PriorKind, hp: &Hyperparameters, records: usize, thin: usize, seed: u64) -> Vec<[f64; 3]> {
    let (n, q) = (30, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = normal_matrix(n, q, &mut rng);
    let cfg = McmcConfig::new(kind, *hp, 1, 0, seed);
    let mut state = draw_from_prior(kind, hp, n, q, &mut rng);
    let mut out = Vec::with_capacity(records);
    for i in 0..records * thin {
        let y = draw_response(&state, &x, hp.spike_ratio, &mut rng);
        mcmc_step(&mut state, &x, &y, &cfg, &mut rng).unwrap();
        if i % thin == 0 {
            out.push([state.phi[0], state.stay_slab[0], state.sigma2]);
        }
    }
    out
}

pub fn geweke_hyperparameters() -> Hyperparameters {
    Hyperparameters {
        spike_ratio: 0.1,
        nu: 5.0,
        a_tau: 0.5,
        c_psi: 3.0,
        cap_c_psi: 1.0,
        a_sigma: 3.0,
        b_sigma: 2.0,
        a_phi: 4.0,
        b_phi: 2.0,
        a_omega: 4.0,
        b_omega: 2.0,
        alpha: 30.0,
        ..Hyperparameters::example1()
    }
}

pub fn ln_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (LN_2PI + var.ln() + (x - mean).powi(2) / var)
}

/// `ln p(tau2 | Q)` written out from the mixing laws.
pub fn ln_mixing(kind: PriorKind, hp: &Hyperparameters, tau2: f64, q: f64) -> f64 {
    match kind {
        PriorKind::Nmig => hp.nu * q.ln() - ln_gamma(hp.nu) - (hp.nu + 1.0) * tau2.ln() - q / tau2,
        PriorKind::NormalGamma | PriorKind::LaplaceMix => {
            let a = if kind == PriorKind::LaplaceMix { 1.0 } else { hp.a_tau };
            -a * (2.0 * q).ln() - ln_gamma(a) + (a - 1.0) * tau2.ln() - tau2 / (2.0 * q)
        }
    }
}

pub fn variance_constant(kind: PriorKind, hp: &Hyperparameters) -> f64 {
    match kind {
        PriorKind::Nmig => 1.0 / (hp.nu - 1.0),
        PriorKind::NormalGamma => 2.0 * hp.a_tau,
        PriorKind::LaplaceMix => 2.0,
    }
}

/// `ln p(Q | w)`: inverse gamma with shape `c_psi` and scale `C_psi / f*(w)`.
pub fn ln_q_prior(kind: PriorKind, hp: &Hyperparameters, q: f64, w: f64) -> f64 {
    let scale = hp.cap_c_psi / (variance_constant(kind, hp) * ((1.0 - w) * hp.spike_ratio + w));
    hp.c_psi * scale.ln() - ln_gamma(hp.c_psi) - (hp.c_psi + 1.0) * q.ln() - scale / q
}

/// Likelihood of a coefficient path under the regime-scaled AR(1).
pub fn ln_path_likelihood(beta: &[f64], k: &[Regime], r: f64, tau2: f64, phi: f64) -> f64 {
    let mut ll = ln_normal(beta[0], 0.0, k[0].scale(r) * tau2);
    for t in 1..beta.len() {
        let (kt, kp) = (k[t].scale(r), k[t - 1].scale(r));
        ll += ln_normal(beta[t], (kt / kp).sqrt() * phi * beta[t - 1], kt * tau2 * (1.0 - phi * phi));
    }
    ll
}

pub fn random_hp<R: Rng>(rng: &mut R) -> Hyperparameters {
    Hyperparameters {
        spike_ratio: 0.001 + 0.2 * rng.random::<f64>(),
        nu: 1.5 + 20.0 * rng.random::<f64>(),
        a_tau: 0.1 + 2.0 * rng.random::<f64>(),
        c_psi: 0.5 + 50.0 * rng.random::<f64>(),
        cap_c_psi: 0.05 + 5.0 * rng.random::<f64>(),
        ..Hyperparameters::example1()
    }
}

/// `max - min` of `got - expect` over a log-spaced grid around `center`.
pub fn ratio_spread(got: impl Fn(f64) -> f64, expect: impl Fn(f64) -> f64, center: f64) -> f64 {
    let diffs: Vec<f64> = (-30..=30).map(|i| center * (i as f64 / 10.0).exp()).map(|x| got(x) - expect(x)).collect();
    diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - diffs.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Largest grid spread of `ln(tau2 conditional) - ln(prior x likelihood)`
/// over `states` random states with paths of length 6.
pub fn tau2_grid_spread(kind: PriorKind, states: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..states {
        let hp = random_hp(&mut rng);
        let n = 6;
        let k: Vec<Regime> = (0..n).map(|_| Regime::from_slab(rng.random())).collect();
        let beta: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let phi = 0.1 + 0.85 * rng.random::<f64>();
        let q = 0.01 + rng.random::<f64>();
        let s = tau2_quadratic_form(&beta, &k, hp.spike_ratio, phi);
        let cond = tau2_conditional(kind, &hp, q, s, n).unwrap();
        worst = worst.max(ratio_spread(
            |x| cond.ln_density_unnorm(x),
            |x| ln_mixing(kind, &hp, x, q) + ln_path_likelihood(&beta, &k, hp.spike_ratio, x, phi),
            s / n as f64,
        ));
    }
    worst
}

/// Largest grid spread of `ln(Q conditional) - ln(prior x mixing density)`.
pub fn q_grid_spread(kind: PriorKind, states: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..states {
        let hp = random_hp(&mut rng);
        let tau2 = 0.01 + 2.0 * rng.random::<f64>();
        let w = rng.random::<f64>();
        let cond = q_conditional(kind, &hp, tau2, w).unwrap();
        worst = worst.max(ratio_spread(
            |x| cond.ln_density_unnorm(x),
            |x| ln_q_prior(kind, &hp, x, w) + ln_mixing(kind, &hp, tau2, x),
            tau2,
        ));
    }
    worst
}
