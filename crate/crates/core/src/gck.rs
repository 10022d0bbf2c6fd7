//! Sampling the latent regime chain without conditioning on the states.
//!
//! For a regime-conditional DLM the backward moments `(Omega_t, mu_t)` give
//! `p(y_{t+1:n} | theta_t, K) ∝ exp{-(theta' Omega_t theta - 2 mu_t' theta) / 2}`
//! and depend on `K_{t+1:n}` only. Combined with one Kalman step forward they
//! yield the single-site conditional `p(K_t | y, K_{s != t})` for every `t` at a
//! total cost linear in the series length.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dlm::{ConditionalDlm, DlmStep, RegimeSystem};
use crate::error::{Error, Result};
use crate::linalg::symmetrize;
use crate::regime::{Regime, RegimeMatrix};

/// Markov prior on one regime path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimePrior {
    /// `P(K_1 = slab)`
    pub initial_slab: f64,
    /// `P(K_t = slab | K_{t-1} = slab)`
    pub stay_slab: f64,
    /// `P(K_t = spike | K_{t-1} = spike)`
    pub stay_spike: f64,
}

impl RegimePrior {
    pub fn new(initial_slab: f64, stay_slab: f64, stay_spike: f64) -> Result<Self> {
        for (name, v) in [("initial slab probability", initial_slab), ("stay_slab", stay_slab), ("stay_spike", stay_spike)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} = {v} is not a probability")));
            }
        }
        Ok(Self { initial_slab, stay_slab, stay_spike })
    }

    /// Prior with an even initial distribution.
    pub fn with_transitions(stay_slab: f64, stay_spike: f64) -> Result<Self> {
        Self::new(0.5, stay_slab, stay_spike)
    }

    /// Row-stochastic transition matrix indexed `[from.index()][to.index()]`.
    pub fn transition_matrix(&self) -> [[f64; 2]; 2] {
        [[self.stay_spike, 1.0 - self.stay_spike], [1.0 - self.stay_slab, self.stay_slab]]
    }

    pub fn ln_initial(&self, k: Regime) -> f64 {
        match k {
            Regime::Slab => self.initial_slab.ln(),
            Regime::Spike => (1.0 - self.initial_slab).ln(),
        }
    }

    pub fn ln_transition(&self, from: Regime, to: Regime) -> f64 {
        self.transition_matrix()[from.index()][to.index()].ln()
    }

    /// Log prior probability of a whole path.
    pub fn ln_path(&self, path: &[Regime]) -> f64 {
        match path.first() {
            None => 0.0,
            Some(&k0) => {
                self.ln_initial(k0) + path.windows(2).map(|w| self.ln_transition(w[0], w[1])).sum::<f64>()
            }
        }
    }

    /// `ln p(K_t = k | K_{t-1}) + ln p(K_{t+1} | K_t = k)` with the boundary
    /// conventions: initial prior at the first point, no right term at the last.
    fn ln_local(&self, path: &[Regime], t: usize, k: Regime) -> f64 {
        let left = if t == 0 { self.ln_initial(k) } else { self.ln_transition(path[t - 1], k) };
        let right = if t + 1 < path.len() { self.ln_transition(k, path[t + 1]) } else { 0.0 };
        left + right
    }
}

/// Conditional moments of `theta_{t+1}` given `theta_t` and `y_{t+1}`:
/// `theta_{t+1} = a + A theta_t + B y_{t+1} + C xi`, `xi ~ N(0, I)`, and
/// `r = Var(y_{t+1} | theta_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMatrices {
    pub a: DVector<f64>,
    pub a_mat: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DMatrix<f64>,
    pub r: f64,
}

/// `1 - sqrt(1 - |u|^2 / r)` divided by `|u|^2`, written without cancellation.
#[inline]
fn shrink_coef(r: f64, obs_sd: f64) -> f64 {
    1.0 / (r + obs_sd * r.sqrt())
}

impl StepMatrices {
    /// Dense moments for the system of one step.
    pub fn new(step: &DlmStep) -> Result<Self> {
        let q = step.dim();
        let f = &step.loading;
        let u = step.noise.tr_mul_vec(f);
        let r = u.norm_squared() + step.obs_sd * step.obs_sd;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Numerical(format!("one-step observation variance r = {r}")));
        }
        let b = step.noise.mul_vec(&u) / r;
        let g = step.transition.to_dense();
        let a_mat = &g - &b * f.transpose() * &g;
        let a = &step.state_offset - &b * (f.dot(&step.state_offset) + step.obs_offset);
        let kappa = shrink_coef(r, step.obs_sd);
        let proj = DMatrix::identity(q, q) - &u * u.transpose() * kappa;
        let c = step.noise.mul_mat(&proj);
        Ok(Self { a, a_mat, b, c, r })
    }
}

/// Backward moments for `t = 0..n`, with the last entry zero.
///
/// `Omega_t` is kept as a square-root factor `U_t` with `Omega_t = U_t U_t'`
/// and at most `min(q, n - 1 - t)` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardStats {
    pub omega_root: Vec<DMatrix<f64>>,
    pub mu: Vec<DVector<f64>>,
}

impl BackwardStats {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Dense `Omega_t`.
    pub fn omega(&self, t: usize) -> DMatrix<f64> {
        let u = &self.omega_root[t];
        u * u.transpose()
    }
}

/// Backward moments for all time points of `dlm`.
pub fn backward_recursion(dlm: &ConditionalDlm, y: &[f64]) -> Result<BackwardStats> {
    dlm.validate()?;
    let n = dlm.len();
    if y.len() != n {
        return Err(Error::Dimension(format!("{} observations for a {n}-step DLM", y.len())));
    }
    let q = dlm.state_dim();
    let mut omega_root = vec![DMatrix::zeros(q, 0); n];
    let mut mu = vec![DVector::zeros(q); n];
    for t in (0..n.saturating_sub(1)).rev() {
        let (o, m) = backward_step(&dlm.steps[t + 1], y[t + 1], &omega_root[t + 1], &mu[t + 1], t)?;
        omega_root[t] = o;
        mu[t] = m;
    }
    Ok(BackwardStats { omega_root, mu })
}

/// One backward move from `(Omega_{t+1}, mu_{t+1})` to `(Omega_t, mu_t)` using
/// the system of step `t + 1`.
///
/// With `Omega = U U'`, the update `Omega - Omega C D^{-1} C' Omega` equals
/// `U E^{-1} U'` for `E = I + U' C C' U`, so only a `k x k` factorization is
/// needed, where `k` is the rank of the incoming factor.
fn backward_step(
    step: &DlmStep,
    y: f64,
    root: &DMatrix<f64>,
    mu: &DVector<f64>,
    t: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let q = step.dim();
    let k = root.ncols();
    let f = &step.loading;
    let u = step.noise.tr_mul_vec(f);
    let gamma2 = step.obs_sd * step.obs_sd;
    let r = u.norm_squared() + gamma2;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Degenerate { t: t + 1, what: format!("one-step observation variance r = {r}") });
    }
    let c = step.transition.tr_mul_vec(f);
    let resid = y - step.obs_offset - f.dot(&step.state_offset);
    let b = step.noise.mul_vec(&u) / r;
    let kappa = shrink_coef(r, step.obs_sd);

    // d = a + B y
    let d = &step.state_offset + &b * resid;
    let v = mu - root * root.tr_mul(&d);

    let (shrunk_root, nu) = if k == 0 {
        (DMatrix::zeros(q, 0), v)
    } else {
        // W = C' U with C = Gamma (I - kappa u u')
        let gu = step.noise.tr_mul_mat(root);
        let ugu = gu.tr_mul(&u);
        let w = &gu - &u * (ugu.transpose() * kappa);
        let mut e = w.tr_mul(&w);
        for i in 0..k {
            e[(i, i)] += 1.0;
        }
        let chol = Cholesky::new(e).ok_or_else(|| Error::Degenerate { t, what: "I + U' C C' U is not positive definite".into() })?;
        // U L^{-T}
        let shrunk = chol
            .l_dirty()
            .solve_lower_triangular(&root.transpose())
            .ok_or_else(|| Error::Degenerate { t, what: "singular backward factor".into() })?
            .transpose();
        // (I - Omega C D^{-1} C') v = v - U E^{-1} W' C' v
        let gv = step.noise.tr_mul_vec(&v);
        let ct_v = &gv - &u * (kappa * u.dot(&gv));
        let nu = &v - root * chol.solve(&w.tr_mul(&ct_v));
        (shrunk, nu)
    };

    // A' X = G' X - c (b' X) with A = G - b c'
    let mut new_root = DMatrix::zeros(q, shrunk_root.ncols() + 1);
    if shrunk_root.ncols() > 0 {
        let gx = step.transition.tr_mul_mat(&shrunk_root);
        let bx = shrunk_root.tr_mul(&b);
        new_root.columns_mut(0, shrunk_root.ncols()).copy_from(&(gx - &c * bx.transpose()));
    }
    new_root.set_column(shrunk_root.ncols(), &(&c / r.sqrt()));
    let mu_t = step.transition.tr_mul_vec(&nu) - &c * b.dot(&nu) + &c * (resid / r);

    let new_root = if new_root.ncols() > q { compress_root(new_root) } else { new_root };
    if new_root.iter().chain(mu_t.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Degenerate { t, what: "non-finite backward moments".into() });
    }
    Ok((new_root, mu_t))
}

/// Replace a wide factor `U` (more columns than rows) by a square one with the
/// same `U U'`.
fn compress_root(u: DMatrix<f64>) -> DMatrix<f64> {
    u.transpose().qr().r().transpose()
}

/// Log of `p(y_{t+1:n} | y_{1:t}, K)` up to a factor that does not depend on
/// `K_{1:t}`, for `theta_t | y_{1:t} ~ N(mean, T T')`.
pub fn predictive_factor(
    mean: &DVector<f64>,
    factor: &DMatrix<f64>,
    omega: &DMatrix<f64>,
    mu: &DVector<f64>,
) -> Result<f64> {
    let k = factor.ncols();
    let om = omega * mean;
    let quad0 = mean.dot(&om) - 2.0 * mu.dot(mean);
    if k == 0 {
        return finite(-0.5 * quad0);
    }
    let mut inner = factor.tr_mul(&(omega * factor));
    for i in 0..k {
        inner[(i, i)] += 1.0;
    }
    symmetrize(&mut inner);
    let h = factor.tr_mul(&(mu - om));
    let chol = Cholesky::new(inner).ok_or_else(|| Error::Numerical("T' Omega T + I is not positive definite".into()))?;
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let quad = quad0 - h.dot(&chol.solve(&h));
    finite(-0.5 * logdet - 0.5 * quad)
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!("non-finite predictive factor {v}")))
    }
}

/// How the future likelihood term is evaluated during a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// Backward moments once per sweep, linear cost.
    #[default]
    Gck,
    /// Re-run the Kalman filter over the future for every candidate,
    /// quadratic cost. Kept as a reference implementation.
    Naive,
}

/// Sweep `t = 0..n` over column `j` of `k`, drawing each `K_{t,j}` from its
/// single-site conditional and committing it before moving on.
///
/// Returns the slab probability used at each time point.
pub fn sample_regime_path<S, R>(
    sys: &S,
    y: &[f64],
    k: &mut RegimeMatrix,
    j: usize,
    prior: &RegimePrior,
    mode: SweepMode,
    rng: &mut R,
) -> Result<Vec<f64>>
where
    S: RegimeSystem + ?Sized,
    R: Rng + ?Sized,
{
    sweep(sys, y, k, j, prior, mode, |_, p| Regime::from_slab(rng.random::<f64>() < p))
}

/// Single-site conditionals `P(K_{t,j} = slab | y, K_{s != t})` for all `t`,
/// leaving `k` unchanged.
pub fn single_site_conditionals<S>(
    sys: &S,
    y: &[f64],
    k: &RegimeMatrix,
    j: usize,
    prior: &RegimePrior,
    mode: SweepMode,
) -> Result<Vec<f64>>
where
    S: RegimeSystem + ?Sized,
{
    let mut work = k.clone();
    sweep(sys, y, &mut work, j, prior, mode, |t, _| k.get(t, j))
}

/// Normalized slab probability from the two unnormalized log weights.
fn slab_probability(ln_spike: f64, ln_slab: f64, t: usize) -> Result<f64> {
    if ln_spike.is_nan() || ln_slab.is_nan() {
        return Err(Error::Degenerate { t, what: "NaN regime weight".into() });
    }
    let hi = ln_spike.max(ln_slab);
    if hi == f64::NEG_INFINITY {
        return Err(Error::Degenerate { t, what: "both regimes have zero probability".into() });
    }
    let ws = (ln_slab - hi).exp();
    let wp = (ln_spike - hi).exp();
    Ok(ws / (ws + wp))
}

/// Shared one-step prediction `theta_t | y_{1:t-1}` together with the
/// projections onto the future factor `U_t`.
struct Prediction {
    a: DVector<f64>,
    p: DMatrix<f64>,
    /// `P U`
    pu: DMatrix<f64>,
    /// `U' P U`
    upu: DMatrix<f64>,
}

impl Prediction {
    fn new(step: &DlmStep, m: &DVector<f64>, v: &DMatrix<f64>, root: &DMatrix<f64>) -> Self {
        let a = &step.state_offset + step.transition.mul_vec(m);
        let mut p = step.transition.sandwich(v) + step.noise.gram();
        symmetrize(&mut p);
        let pu = &p * root;
        let mut upu = root.tr_mul(&pu);
        symmetrize(&mut upu);
        Self { a, p, pu, upu }
    }

    fn same_system(x: &DlmStep, y: &DlmStep) -> bool {
        x.transition == y.transition && x.noise == y.noise && x.state_offset == y.state_offset
    }
}

/// Filtered moments and log weight for one candidate regime at time `t`.
struct Candidate {
    m: DVector<f64>,
    v: DMatrix<f64>,
    ln_weight: f64,
}

/// One-step log-likelihood plus the log future factor for one candidate.
///
/// With `Omega = U U'` and filtered covariance `V`, the determinant
/// `|T' Omega T + I|` equals `|I + U' V U|` and the quadratic term uses
/// `(V^{-1} + Omega)^{-1} = V - V U (I + U' V U)^{-1} U' V`.
fn evaluate_candidate(
    step: &DlmStep,
    pred: &Prediction,
    y: f64,
    root: &DMatrix<f64>,
    mu: &DVector<f64>,
    t: usize,
) -> Result<Candidate> {
    let pf = &pred.p * &step.loading;
    let r = step.loading.dot(&pf) + step.obs_sd * step.obs_sd;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Degenerate { t, what: format!("predictive variance R_t = {r}") });
    }
    let e = y - step.obs_offset - step.loading.dot(&pred.a);
    let m = &pred.a + &pf * (e / r);
    let mut v = &pred.p - &pf * pf.transpose() / r;
    symmetrize(&mut v);
    let ll = -0.5 * (r.ln() + e * e / r);

    let k = root.ncols();
    let fut = if k == 0 {
        0.0
    } else {
        let um = root.tr_mul(&m);
        let s = mu - root * &um;
        // U' V U = U' P U - (U' p)(U' p)' / R
        let up = pred.pu.tr_mul(&step.loading);
        let mut inner = &pred.upu - &up * up.transpose() / r;
        for i in 0..k {
            inner[(i, i)] += 1.0;
        }
        symmetrize(&mut inner);
        let chol = Cholesky::<f64, Dyn>::new(inner)
            .ok_or_else(|| Error::Degenerate { t, what: "I + U' V U is not positive definite".into() })?;
        let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let vs = &v * &s;
        let uvs = root.tr_mul(&vs);
        let quad_v = s.dot(&vs) - uvs.dot(&chol.solve(&uvs));
        let quad = um.norm_squared() - 2.0 * mu.dot(&m) - quad_v;
        -0.5 * (logdet + quad)
    };
    let ln_weight = ll + fut;
    if !ln_weight.is_finite() {
        return Err(Error::Degenerate { t, what: format!("non-finite likelihood weight {ln_weight}") });
    }
    Ok(Candidate { m, v, ln_weight })
}

fn sweep<S, F>(
    sys: &S,
    y: &[f64],
    k: &mut RegimeMatrix,
    j: usize,
    prior: &RegimePrior,
    mode: SweepMode,
    mut choose: F,
) -> Result<Vec<f64>>
where
    S: RegimeSystem + ?Sized,
    F: FnMut(usize, f64) -> Regime,
{
    let n = sys.len();
    if y.len() != n || k.len() != n || k.dim() != sys.state_dim() {
        return Err(Error::Dimension(format!(
            "sweep over {} observations with a {}x{} regime matrix for a {n}x{} system",
            y.len(),
            k.len(),
            k.dim(),
            sys.state_dim()
        )));
    }
    if j >= k.dim() {
        return Err(Error::Dimension(format!("predictor index {j} out of range 0..{}", k.dim())));
    }
    match mode {
        SweepMode::Gck => sweep_gck(sys, y, k, j, prior, &mut choose),
        SweepMode::Naive => sweep_naive(sys, y, k, j, prior, &mut choose),
    }
}

fn candidate_row(k: &RegimeMatrix, t: usize, j: usize, value: Regime) -> Vec<Regime> {
    let mut row = k.row(t).to_vec();
    row[j] = value;
    row
}

fn sweep_gck<S, F>(
    sys: &S,
    y: &[f64],
    k: &mut RegimeMatrix,
    j: usize,
    prior: &RegimePrior,
    choose: &mut F,
) -> Result<Vec<f64>>
where
    S: RegimeSystem + ?Sized,
    F: FnMut(usize, f64) -> Regime,
{
    let n = sys.len();
    let back = backward_recursion(&sys.materialize(k), y)?;
    let (mut m, mut v) = sys.initial();
    let mut probs = Vec::with_capacity(n);
    let mut path = k.column(j);
    for t in 0..n {
        let (root, mu) = (&back.omega_root[t], &back.mu[t]);
        let steps = Regime::BOTH.map(|c| sys.step(t, &candidate_row(k, t, j, c)));
        let pred0 = Prediction::new(&steps[0], &m, &v, root);
        let pred1 = (!Prediction::same_system(&steps[0], &steps[1])).then(|| Prediction::new(&steps[1], &m, &v, root));
        let spike = evaluate_candidate(&steps[0], &pred0, y[t], root, mu, t)?;
        let slab = evaluate_candidate(&steps[1], pred1.as_ref().unwrap_or(&pred0), y[t], root, mu, t)?;
        let p = slab_probability(
            spike.ln_weight + prior.ln_local(&path, t, Regime::Spike),
            slab.ln_weight + prior.ln_local(&path, t, Regime::Slab),
            t,
        )?;
        probs.push(p);
        let chosen = choose(t, p);
        path[t] = chosen;
        k.set(t, j, chosen);
        let next = if chosen.is_slab() { slab } else { spike };
        m = next.m;
        v = next.v;
    }
    Ok(probs)
}

fn sweep_naive<S, F>(
    sys: &S,
    y: &[f64],
    k: &mut RegimeMatrix,
    j: usize,
    prior: &RegimePrior,
    choose: &mut F,
) -> Result<Vec<f64>>
where
    S: RegimeSystem + ?Sized,
    F: FnMut(usize, f64) -> Regime,
{
    let n = sys.len();
    let (mut m, mut v) = sys.initial();
    let mut probs = Vec::with_capacity(n);
    let mut path = k.column(j);
    for t in 0..n {
        let mut ln_w = [0.0; 2];
        let mut first = Vec::with_capacity(2);
        for c in Regime::BOTH {
            k.set(t, j, c);
            let mut mm = m.clone();
            let mut vv = v.clone();
            let mut ll = 0.0;
            for s in t..n {
                let fs = crate::dlm::kalman_step(&sys.step(s, k.row(s)), &mm, &vv, y[s], s)?;
                ll += fs.loglik;
                mm = fs.mean;
                vv = fs.cov;
                if s == t {
                    first.push((mm.clone(), vv.clone()));
                }
            }
            ln_w[c.index()] = ll + prior.ln_local(&path, t, c);
        }
        let p = slab_probability(ln_w[0], ln_w[1], t)?;
        probs.push(p);
        let chosen = choose(t, p);
        path[t] = chosen;
        k.set(t, j, chosen);
        let (mm, vv) = first.swap_remove(chosen.index());
        m = mm;
        v = vv;
    }
    Ok(probs)
}
