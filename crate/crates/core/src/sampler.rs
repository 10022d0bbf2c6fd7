//! The Gibbs/Metropolis sampler for the dynamic spike-and-slab regression.
//!
//! One iteration updates, in order:
//!
//! 1. each regime column `K_{., j}` with the states integrated out,
//! 2. the scaled state path by forward filtering, backward sampling,
//! 3. the observation variance `sigma2`,
//! 4. each `tau2_j`, holding the unscaled coefficient path fixed,
//! 5. each AR coefficient `phi_j` by Metropolis-Hastings,
//! 6. each pair of transition probabilities by Metropolis-Hastings,
//! 7. each mixing scale `Q_j`.
//!
//! Regimes are drawn before the states: they are sampled from a distribution
//! that marginalizes the states, so the states must be refreshed before any
//! step conditions on them.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{mean_sd, Dataset};
use crate::dists::{ln_beta_pdf, ln_inv_gamma_pdf, sample_beta, sample_inv_gamma};
use crate::dlm::{build_conditional_dlm, ffbs_sample, kalman_filter, unscale_states, TvpSystem};
use crate::error::{Error, Result, UpdateStep};
use crate::gck::{sample_regime_path, RegimePrior, SweepMode};
use crate::prior::{
    f_star, family_constant, q_prior_scale, sample_q, sample_tau2, slab_weight, stationary_slab_prob,
    Hyperparameters, PriorKind,
};
use crate::regime::{transition_counts, Regime, RegimeMatrix};

/// Blocks of the chain that are held at their initial values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Freeze {
    pub regimes: bool,
    pub states: bool,
    pub sigma2: bool,
    pub tau2: bool,
    pub phi: bool,
    pub transitions: bool,
    pub q: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub n_iter: usize,
    pub n_burn: usize,
    pub seed: u64,
    pub kind: PriorKind,
    pub hp: Hyperparameters,
    pub thin: usize,
    /// Keep every retained draw for the draw archive.
    pub save_paths: bool,
    pub sweep_mode: SweepMode,
    pub freeze: Freeze,
}

impl McmcConfig {
    pub fn new(kind: PriorKind, hp: Hyperparameters, n_iter: usize, n_burn: usize, seed: u64) -> Self {
        Self {
            n_iter,
            n_burn,
            seed,
            kind,
            hp,
            thin: 1,
            save_paths: false,
            sweep_mode: SweepMode::Gck,
            freeze: Freeze::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_burn >= self.n_iter {
            return Err(Error::Config(format!(
                "burn-in ({}) must be smaller than the number of iterations ({})",
                self.n_burn, self.n_iter
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thinning must be at least 1".into()));
        }
        self.hp.validate(self.kind)
    }

    /// Number of draws kept after burn-in and thinning.
    pub fn n_kept(&self) -> usize {
        (self.n_iter - self.n_burn).div_ceil(self.thin)
    }

    fn keeps(&self, iter: usize) -> bool {
        iter >= self.n_burn && (iter - self.n_burn) % self.thin == 0
    }
}

/// Full state of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct McmcState {
    /// Scaled states, `T x q`.
    pub beta_tilde: DMatrix<f64>,
    pub k: RegimeMatrix,
    pub tau2: Vec<f64>,
    pub q: Vec<f64>,
    pub phi: Vec<f64>,
    /// `P(slab -> slab)` per predictor.
    pub stay_slab: Vec<f64>,
    /// `P(spike -> spike)` per predictor.
    pub stay_spike: Vec<f64>,
    pub sigma2: f64,
}

impl McmcState {
    /// Deterministic starting point: zero states, all regimes in the slab,
    /// `tau2 = 1`, prior means for `phi`, the transition probabilities and `Q`,
    /// and the sample variance of `y` for `sigma2`.
    pub fn initial(data: &Dataset, kind: PriorKind, hp: &Hyperparameters) -> Result<Self> {
        let (n, q) = data.x.shape();
        let phi0 = hp.a_phi / (hp.a_phi + hp.b_phi);
        let omega0 = hp.a_omega / (hp.a_omega + hp.b_omega);
        let w0 = slab_weight(hp, omega0, omega0);
        let scale = q_prior_scale(kind, hp, w0)?;
        let q0 = if hp.c_psi > 1.0 { scale / (hp.c_psi - 1.0) } else { scale / (hp.c_psi + 1.0) };
        let sigma2 = if n > 1 { mean_sd(data.y.iter().copied()).1.powi(2) } else { 1.0 };
        let sigma2 = if sigma2 > 0.0 && sigma2.is_finite() { sigma2 } else { 1.0 };
        Ok(Self {
            beta_tilde: DMatrix::zeros(n, q),
            k: RegimeMatrix::filled(n, q, Regime::Slab),
            tau2: vec![1.0; q],
            q: vec![q0; q],
            phi: vec![phi0; q],
            stay_slab: vec![omega0; q],
            stay_spike: vec![omega0; q],
            sigma2,
        })
    }

    /// Unscaled coefficients `beta = sqrt(K tau2) * beta_tilde`.
    pub fn beta(&self, spike_ratio: f64) -> DMatrix<f64> {
        unscale_states(&self.beta_tilde, &self.k, spike_ratio, &self.tau2)
    }

    pub fn regime_prior(&self, j: usize) -> Result<RegimePrior> {
        RegimePrior::with_transitions(self.stay_slab[j], self.stay_spike[j])
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: &[f64]| -> Result<()> {
            match v.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
                Some(x) => Err(Error::Numerical(format!("{name} left its domain: {x}"))),
                None => Ok(()),
            }
        };
        let unit = |name: &str, v: &[f64], closed: bool| -> Result<()> {
            let ok = |x: f64| if closed { (0.0..=1.0).contains(&x) } else { x > 0.0 && x < 1.0 };
            match v.iter().find(|x| !ok(**x)) {
                Some(x) => Err(Error::Numerical(format!("{name} left its domain: {x}"))),
                None => Ok(()),
            }
        };
        positive("tau2", &self.tau2)?;
        positive("Q", &self.q)?;
        positive("sigma2", &[self.sigma2])?;
        unit("phi", &self.phi, false)?;
        unit("stay_slab", &self.stay_slab, true)?;
        unit("stay_spike", &self.stay_spike, true)?;
        if self.beta_tilde.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite state".into()));
        }
        Ok(())
    }
}

/// Metropolis-Hastings outcomes of one iteration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepOutcome {
    pub phi_accepted: Vec<bool>,
    pub transitions_accepted: Vec<bool>,
}

/// Log of the unnormalized full conditional of `phi_j` given the scaled path
/// `path`: Beta prior times the stationary AR(1) transition densities.
pub fn ln_phi_target(phi: f64, path: &[f64], hp: &Hyperparameters) -> f64 {
    if !(phi > 0.0 && phi < 1.0) {
        return f64::NEG_INFINITY;
    }
    let v = 1.0 - phi * phi;
    let ss: f64 = path.windows(2).map(|w| (w[1] - phi * w[0]).powi(2)).sum();
    let m = path.len().saturating_sub(1) as f64;
    ln_beta_pdf(phi, hp.a_phi, hp.b_phi) - 0.5 * m * v.ln() - ss / (2.0 * v)
}

/// One Metropolis-Hastings move for `phi_j` with the mean-preserving proposal
/// `Beta(alpha, alpha (1 - phi) / phi)`.
pub fn mh_update_phi<R: Rng + ?Sized>(phi: f64, path: &[f64], hp: &Hyperparameters, rng: &mut R) -> Result<(f64, bool)> {
    if !(phi > 0.0 && phi < 1.0) {
        return Err(Error::domain(format!("phi = {phi} outside (0, 1)")));
    }
    let alpha = hp.alpha;
    let xi = |p: f64| alpha * (1.0 - p) / p;
    let prop = sample_beta(alpha, xi(phi), rng)?;
    if !(prop > 0.0 && prop < 1.0) {
        return Ok((phi, false));
    }
    let ln_ratio = ln_phi_target(prop, path, hp) + ln_beta_pdf(phi, alpha, xi(prop))
        - ln_phi_target(phi, path, hp)
        - ln_beta_pdf(prop, alpha, xi(phi));
    if ln_ratio.is_finite() && rng.random::<f64>().ln() < ln_ratio {
        Ok((prop, true))
    } else {
        Ok((phi, false))
    }
}

/// Conjugate Beta draws of `(P(slab -> slab), P(spike -> spike))` from the
/// transition counts of one regime path.
pub fn update_transition_probs<R: Rng + ?Sized>(path: &[Regime], hp: &Hyperparameters, rng: &mut R) -> Result<(f64, f64)> {
    let c = transition_counts(path);
    let (slab, spike) = (Regime::Slab.index(), Regime::Spike.index());
    let stay_slab = sample_beta(hp.a_omega + c[slab][slab] as f64, hp.b_omega + c[slab][spike] as f64, rng)?;
    let stay_spike = sample_beta(hp.a_omega + c[spike][spike] as f64, hp.b_omega + c[spike][slab] as f64, rng)?;
    Ok((stay_slab, stay_spike))
}

/// `ln p(Q | transition probabilities)`: the inverse-gamma prior on `Q`, whose
/// scale depends on the slab weight.
pub fn ln_q_prior(kind: PriorKind, hp: &Hyperparameters, q: f64, stay_slab: f64, stay_spike: f64) -> Result<f64> {
    let w = slab_weight(hp, stay_slab, stay_spike);
    let scale = hp.cap_c_psi / f_star(family_constant(kind, hp)?, w, hp.spike_ratio);
    Ok(ln_inv_gamma_pdf(q, hp.c_psi, scale))
}

/// Transition-probability update: the conjugate Beta draw serves as an
/// independence proposal, corrected for the dependence of the prior on `Q`.
pub fn mh_update_transitions<R: Rng + ?Sized>(
    kind: PriorKind,
    hp: &Hyperparameters,
    path: &[Regime],
    q: f64,
    current: (f64, f64),
    rng: &mut R,
) -> Result<((f64, f64), bool)> {
    let prop = update_transition_probs(path, hp, rng)?;
    let ln_ratio = ln_q_prior(kind, hp, q, prop.0, prop.1)? - ln_q_prior(kind, hp, q, current.0, current.1)?;
    if ln_ratio >= 0.0 || rng.random::<f64>().ln() < ln_ratio {
        Ok((prop, true))
    } else {
        Ok((current, false))
    }
}

/// One full iteration of the sampler.
pub fn mcmc_step<R: Rng + ?Sized>(
    state: &mut McmcState,
    x: &DMatrix<f64>,
    y: &[f64],
    cfg: &McmcConfig,
    rng: &mut R,
) -> Result<StepOutcome> {
    let hp = &cfg.hp;
    let r = hp.spike_ratio;
    let (n, q) = x.shape();
    if y.len() != n || state.beta_tilde.shape() != (n, q) {
        return Err(Error::Dimension("chain state does not match the data".into()));
    }
    let mut outcome = StepOutcome { phi_accepted: vec![false; q], transitions_accepted: vec![false; q] };

    if !cfg.freeze.regimes {
        let sys = TvpSystem::new(x, r, &state.tau2, &state.phi, state.sigma2).map_err(|e| e.at_step(UpdateStep::Regimes))?;
        for j in 0..q {
            let prior = state.regime_prior(j).map_err(|e| e.at_step(UpdateStep::Regimes))?;
            sample_regime_path(&sys, y, &mut state.k, j, &prior, cfg.sweep_mode, rng)
                .map_err(|e| e.at_step(UpdateStep::Regimes))?;
        }
    }

    if !cfg.freeze.states {
        let mut draw = || -> Result<DMatrix<f64>> {
            let dlm = build_conditional_dlm(x, &state.k, r, &state.tau2, &state.phi, state.sigma2)?;
            let stats = kalman_filter(&dlm, y)?;
            Ok(ffbs_sample(&dlm, y, &stats, rng)?.states)
        };
        state.beta_tilde = draw().map_err(|e| e.at_step(UpdateStep::States))?;
    }

    let beta = state.beta(r);
    if !cfg.freeze.sigma2 {
        let sse: f64 = (0..n).map(|t| (y[t] - x.row(t).dot(&beta.row(t))).powi(2)).sum();
        state.sigma2 = sample_inv_gamma(hp.a_sigma + n as f64 / 2.0, hp.b_sigma + sse / 2.0, rng)
            .map_err(|e| e.at_step(UpdateStep::ObsVariance))?;
    }

    for j in 0..q {
        let path = state.k.column(j);
        if !cfg.freeze.tau2 {
            let bj: Vec<f64> = beta.column(j).iter().copied().collect();
            let t2 = sample_tau2(cfg.kind, hp, state.q[j], &bj, &path, state.phi[j], rng)
                .map_err(|e| e.at_step(UpdateStep::Tau2))?;
            state.tau2[j] = t2;
            for t in 0..n {
                state.beta_tilde[(t, j)] = bj[t] / (path[t].scale(r) * t2).sqrt();
            }
        }

        if !cfg.freeze.phi {
            let scaled: Vec<f64> = state.beta_tilde.column(j).iter().copied().collect();
            let (phi, acc) = mh_update_phi(state.phi[j], &scaled, hp, rng).map_err(|e| e.at_step(UpdateStep::Ar))?;
            state.phi[j] = phi;
            outcome.phi_accepted[j] = acc;
        }

        if !cfg.freeze.transitions {
            let (omega, acc) = mh_update_transitions(cfg.kind, hp, &path, state.q[j], (state.stay_slab[j], state.stay_spike[j]), rng)
                .map_err(|e| e.at_step(UpdateStep::Transitions))?;
            state.stay_slab[j] = omega.0;
            state.stay_spike[j] = omega.1;
            outcome.transitions_accepted[j] = acc;
        }

        if !cfg.freeze.q {
            let w = slab_weight(hp, state.stay_slab[j], state.stay_spike[j]);
            state.q[j] = sample_q(cfg.kind, hp, state.tau2[j], w, rng).map_err(|e| e.at_step(UpdateStep::Q))?;
        }
    }
    debug_assert!(state.validate().is_ok(), "{:?}", state.validate());
    Ok(outcome)
}

/// Location summary of a set of draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Sample quantile with linear interpolation between order statistics
/// (`sorted` must be ascending and non-empty).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Moments {
    pub fn of(values: &[f64]) -> Self {
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            median: quantile_sorted(&s, 0.5),
            lower: quantile_sorted(&s, 0.025),
            upper: quantile_sorted(&s, 0.975),
        }
    }
}

/// Pointwise summaries of the coefficient paths (`T x q` each).
#[derive(Debug, Clone, PartialEq)]
pub struct PathSummary {
    pub mean: DMatrix<f64>,
    pub median: DMatrix<f64>,
    pub lower: DMatrix<f64>,
    pub upper: DMatrix<f64>,
    /// Posterior probability of the slab regime.
    pub inclusion: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarSummary {
    pub name: String,
    #[serde(flatten)]
    pub moments: Moments,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub beta: PathSummary,
    pub scalars: Vec<ScalarSummary>,
    /// Acceptance rate of the `phi_j` moves over all iterations.
    pub phi_acceptance: Vec<f64>,
    /// Acceptance rate of the transition-probability moves.
    pub transition_acceptance: Vec<f64>,
    pub n_kept: usize,
}

impl PosteriorSummary {
    pub fn scalar(&self, name: &str) -> Option<&Moments> {
        self.scalars.iter().find(|s| s.name == name).map(|s| &s.moments)
    }
}

/// Names of the scalar parameters, in archive column order.
pub fn scalar_names(q: usize) -> Vec<String> {
    let mut names = vec!["sigma2".to_string()];
    for block in ["tau2", "Q", "phi", "omega11", "omega00"] {
        names.extend((1..=q).map(|j| format!("{block}_{j}")));
    }
    names
}

fn scalar_row(state: &McmcState) -> Vec<f64> {
    let mut row = vec![state.sigma2];
    for block in [&state.tau2, &state.q, &state.phi, &state.stay_slab, &state.stay_spike] {
        row.extend_from_slice(block);
    }
    row
}

/// Retained draws of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawArchive {
    pub len: usize,
    pub dim: usize,
    /// One vector per `(t, j)` cell (index `t * q + j`), one entry per draw.
    pub beta: Vec<Vec<f64>>,
    /// Slab indicators per cell and draw.
    pub regimes: Vec<Vec<bool>>,
    pub scalar_names: Vec<String>,
    /// One row per draw.
    pub scalars: Vec<Vec<f64>>,
}

impl DrawArchive {
    fn new(len: usize, dim: usize, capacity: usize, keep_regimes: bool) -> Self {
        Self {
            len,
            dim,
            beta: (0..len * dim).map(|_| Vec::with_capacity(capacity)).collect(),
            regimes: if keep_regimes { (0..len * dim).map(|_| Vec::with_capacity(capacity)).collect() } else { Vec::new() },
            scalar_names: scalar_names(dim),
            scalars: Vec::with_capacity(capacity),
        }
    }

    pub fn n_draws(&self) -> usize {
        self.scalars.len()
    }
}

struct Accumulator {
    archive: DrawArchive,
    inclusion: Vec<u64>,
}

impl Accumulator {
    fn push(&mut self, state: &McmcState, spike_ratio: f64) {
        let beta = state.beta(spike_ratio);
        let (n, q) = beta.shape();
        let keep_regimes = !self.archive.regimes.is_empty();
        for t in 0..n {
            for j in 0..q {
                let cell = t * q + j;
                self.archive.beta[cell].push(beta[(t, j)]);
                let slab = state.k.get(t, j).is_slab();
                self.inclusion[cell] += slab as u64;
                if keep_regimes {
                    self.archive.regimes[cell].push(slab);
                }
            }
        }
        self.archive.scalars.push(scalar_row(state));
    }

    fn summarize(&self, phi_acc: &[u64], tr_acc: &[u64], n_iter: usize) -> PosteriorSummary {
        let (n, q) = (self.archive.len, self.archive.dim);
        let kept = self.archive.n_draws();
        let cells: Vec<Moments> = self.archive.beta.iter().map(|d| Moments::of(d)).collect();
        let mat = |f: &dyn Fn(&Moments) -> f64| DMatrix::from_fn(n, q, |t, j| f(&cells[t * q + j]));
        let beta = PathSummary {
            mean: mat(&|m| m.mean),
            median: mat(&|m| m.median),
            lower: mat(&|m| m.lower),
            upper: mat(&|m| m.upper),
            inclusion: DMatrix::from_fn(n, q, |t, j| self.inclusion[t * q + j] as f64 / kept as f64),
        };
        let scalars = self
            .archive
            .scalar_names
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let col: Vec<f64> = self.archive.scalars.iter().map(|row| row[i]).collect();
                ScalarSummary { name: name.clone(), moments: Moments::of(&col) }
            })
            .collect();
        let rate = |v: &[u64]| v.iter().map(|&a| a as f64 / n_iter as f64).collect();
        PosteriorSummary {
            beta,
            scalars,
            phi_acceptance: rate(phi_acc),
            transition_acceptance: rate(tr_acc),
            n_kept: kept,
        }
    }
}

/// Result of one chain.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub summary: PosteriorSummary,
    pub archive: Option<DrawArchive>,
    pub final_state: McmcState,
}

/// Run one chain from the deterministic starting point.
pub fn run_chain(data: &Dataset, cfg: &McmcConfig) -> Result<ChainOutput> {
    let state = McmcState::initial(data, cfg.kind, &cfg.hp)?;
    run_chain_from(data, cfg, state)
}

/// Run one chain from a given state.
pub fn run_chain_from(data: &Dataset, cfg: &McmcConfig, mut state: McmcState) -> Result<ChainOutput> {
    cfg.validate()?;
    data.validate()?;
    state.validate()?;
    let (n, q) = data.x.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut acc = Accumulator {
        archive: DrawArchive::new(n, q, cfg.n_kept(), cfg.save_paths),
        inclusion: vec![0; n * q],
    };
    let mut phi_acc = vec![0u64; q];
    let mut tr_acc = vec![0u64; q];
    for iter in 0..cfg.n_iter {
        let out = mcmc_step(&mut state, &data.x, &data.y, cfg, &mut rng)
            .map_err(|e| Error::Iteration { iter, source: Box::new(e) })?;
        for j in 0..q {
            phi_acc[j] += out.phi_accepted[j] as u64;
            tr_acc[j] += out.transitions_accepted[j] as u64;
        }
        if cfg.keeps(iter) {
            acc.push(&state, cfg.hp.spike_ratio);
        }
    }
    let summary = acc.summarize(&phi_acc, &tr_acc, cfg.n_iter);
    let archive = cfg.save_paths.then_some(acc.archive);
    Ok(ChainOutput { summary, archive, final_state: state })
}

/// Run independent chains in parallel.
pub fn run_chains(jobs: &[(&Dataset, McmcConfig)]) -> Vec<Result<ChainOutput>> {
    jobs.par_iter().map(|(d, c)| run_chain(d, c)).collect()
}

/// Root mean squared difference over all entries.
pub fn compute_rmse(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    if estimate.shape() != truth.shape() {
        return Err(Error::Dimension(format!("estimate is {:?}, truth is {:?}", estimate.shape(), truth.shape())));
    }
    if estimate.is_empty() {
        return Err(Error::Dimension("empty matrices".into()));
    }
    Ok(((estimate - truth).norm_squared() / estimate.len() as f64).sqrt())
}

/// Stationary slab probability implied by the current transition
/// probabilities of predictor `j`.
pub fn stationary_inclusion(state: &McmcState, j: usize) -> f64 {
    stationary_slab_prob(state.stay_slab[j], state.stay_spike[j])
}
