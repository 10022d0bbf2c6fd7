//! Gaussian dynamic linear models: Kalman filtering, likelihood and
//! forward-filtering backward-sampling of the state path.
//!
//! The model at time `t` is
//!
//! ```text
//! y_t     = f_t + F_t' theta_t + gamma_t u_t,        u_t ~ N(0, 1)
//! theta_t = g_t + G_t theta_{t-1} + Gamma_t v_t,     v_t ~ N(0, I)
//! ```
//!
//! with `theta_0 ~ N(m_0, V_0)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{psd_factor, psd_pinv, sample_with_factor, symmetrize, SysMatrix};
use crate::regime::{Regime, RegimeMatrix};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// System quantities of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct DlmStep {
    /// `f_t`
    pub obs_offset: f64,
    /// `F_t`
    pub loading: DVector<f64>,
    /// `gamma_t`
    pub obs_sd: f64,
    /// `g_t`
    pub state_offset: DVector<f64>,
    /// `G_t`
    pub transition: SysMatrix,
    /// `Gamma_t`
    pub noise: SysMatrix,
}

impl DlmStep {
    pub fn dim(&self) -> usize {
        self.loading.len()
    }
}

/// A fully realized (regime-conditional) DLM.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDlm {
    pub steps: Vec<DlmStep>,
    pub m0: DVector<f64>,
    pub v0: DMatrix<f64>,
}

impl ConditionalDlm {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.m0.len()
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.state_dim();
        if self.v0.nrows() != q || self.v0.ncols() != q {
            return Err(Error::Dimension(format!("V_0 is {}x{}, expected {q}x{q}", self.v0.nrows(), self.v0.ncols())));
        }
        for (t, s) in self.steps.iter().enumerate() {
            if s.loading.len() != q
                || s.state_offset.len() != q
                || s.transition.dim() != q
                || s.noise.dim() != q
            {
                return Err(Error::Dimension(format!("system at t={t} does not match state dimension {q}")));
            }
            if !(s.obs_sd >= 0.0) {
                return Err(Error::domain(format!("negative observation scale at t={t}")));
            }
        }
        Ok(())
    }
}

/// Filtered moments at one time point.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterStep {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// One-step predictive variance `R_t`.
    pub pred_var: f64,
    /// `log p(y_t | y_{1:t-1})`
    pub loglik: f64,
}

/// Output of the Kalman filter for the whole series.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterStats {
    pub mean: Vec<DVector<f64>>,
    pub cov: Vec<DMatrix<f64>>,
    pub pred_var: Vec<f64>,
    pub loglik: Vec<f64>,
}

impl FilterStats {
    pub fn total_loglik(&self) -> f64 {
        self.loglik.iter().sum()
    }
}

/// Sampled state path, one row per time point.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePath {
    pub states: DMatrix<f64>,
}

/// One Kalman recursion from `(m_{t-1}, V_{t-1})`.
pub fn kalman_step(
    step: &DlmStep,
    m_prev: &DVector<f64>,
    v_prev: &DMatrix<f64>,
    y: f64,
    t: usize,
) -> Result<FilterStep> {
    let a = &step.state_offset + step.transition.mul_vec(m_prev);
    let p = step.transition.sandwich(v_prev) + step.noise.gram();
    let pf = &p * &step.loading;
    let r = step.loading.dot(&pf) + step.obs_sd * step.obs_sd;
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Degenerate { t, what: format!("predictive variance R_t = {r}") });
    }
    let e = y - step.obs_offset - step.loading.dot(&a);
    let gain = pf / r;
    let mean = a + &gain * e;
    let mut cov = p - &gain * gain.transpose() * r;
    symmetrize(&mut cov);
    let loglik = -0.5 * (LN_2PI + r.ln() + e * e / r);
    Ok(FilterStep { mean, cov, pred_var: r, loglik })
}

pub fn kalman_filter(dlm: &ConditionalDlm, y: &[f64]) -> Result<FilterStats> {
    dlm.validate()?;
    if y.len() != dlm.len() {
        return Err(Error::Dimension(format!("{} observations for a {}-step DLM", y.len(), dlm.len())));
    }
    let n = dlm.len();
    let mut stats = FilterStats {
        mean: Vec::with_capacity(n),
        cov: Vec::with_capacity(n),
        pred_var: Vec::with_capacity(n),
        loglik: Vec::with_capacity(n),
    };
    let mut m = dlm.m0.clone();
    let mut v = dlm.v0.clone();
    for (t, (step, &yt)) in dlm.steps.iter().zip(y).enumerate() {
        let fs = kalman_step(step, &m, &v, yt, t)?;
        m = fs.mean.clone();
        v = fs.cov.clone();
        stats.mean.push(fs.mean);
        stats.cov.push(fs.cov);
        stats.pred_var.push(fs.pred_var);
        stats.loglik.push(fs.loglik);
    }
    Ok(stats)
}

/// Joint draw of `theta_{1:T}` given `y_{1:T}` by backward sampling from the
/// filtered moments.
///
/// `theta_t | theta_{t+1}, y_{1:t}` is Gaussian with gain `V_t G' P^+`, where
/// `P = G V_t G' + Gamma Gamma'` is the one-step predictive state covariance;
/// a singular `P` is handled through its pseudo-inverse.
pub fn ffbs_sample<R: Rng + ?Sized>(
    dlm: &ConditionalDlm,
    y: &[f64],
    stats: &FilterStats,
    rng: &mut R,
) -> Result<StatePath> {
    let n = dlm.len();
    let q = dlm.state_dim();
    if y.len() != n || stats.mean.len() != n || stats.cov.len() != n {
        return Err(Error::Dimension("filter output does not match the DLM length".into()));
    }
    let mut states = DMatrix::zeros(n, q);
    if n == 0 {
        return Ok(StatePath { states });
    }
    let mut next = sample_with_factor(&stats.mean[n - 1], &psd_factor(&stats.cov[n - 1]), rng);
    states.set_row(n - 1, &next.transpose());
    for t in (0..n - 1).rev() {
        let step = &dlm.steps[t + 1];
        let vt = &stats.cov[t];
        let mt = &stats.mean[t];
        let p = step.transition.sandwich(vt) + step.noise.gram();
        let a = &step.state_offset + step.transition.mul_vec(mt);
        // G V_t
        let gv = step.transition.mul_mat(vt);
        // gain' = P^+ G V_t
        let gain_t = match p.clone().cholesky() {
            Some(ch) => ch.solve(&gv),
            None => psd_pinv(&p) * &gv,
        };
        let mean = mt + gain_t.tr_mul(&(&next - a));
        let mut cov = vt - gv.tr_mul(&gain_t);
        symmetrize(&mut cov);
        let cur = sample_with_factor(&mean, &psd_factor(&cov), rng);
        if cur.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate { t, what: "non-finite backward draw".into() });
        }
        states.set_row(t, &cur.transpose());
        next = cur;
    }
    Ok(StatePath { states })
}

/// A DLM whose system matrices at time `t` are determined by the regime
/// vector `K_t` (one regime per predictor).
pub trait RegimeSystem {
    fn len(&self) -> usize;
    fn state_dim(&self) -> usize;
    fn initial(&self) -> (DVector<f64>, DMatrix<f64>);
    fn step(&self, t: usize, regimes: &[Regime]) -> DlmStep;

    fn materialize(&self, k: &RegimeMatrix) -> ConditionalDlm {
        let (m0, v0) = self.initial();
        ConditionalDlm { steps: (0..self.len()).map(|t| self.step(t, k.row(t))).collect(), m0, v0 }
    }
}

/// Time-varying-parameter regression on scaled states.
///
/// The observation loading of predictor `j` at time `t` is
/// `X_{t,j} sqrt(K_{t,j} tau2_j)`, the transition is `diag(phi)` with noise
/// `diag(sqrt(1 - phi^2))`, and `theta_0 ~ N(0, I)` so that the first scaled
/// state is marginally standard normal.
#[derive(Debug, Clone)]
pub struct TvpSystem<'a> {
    pub x: &'a DMatrix<f64>,
    pub spike_ratio: f64,
    pub tau2: &'a [f64],
    pub sigma2: f64,
    transition: SysMatrix,
    noise: SysMatrix,
}

impl<'a> TvpSystem<'a> {
    pub fn new(x: &'a DMatrix<f64>, spike_ratio: f64, tau2: &'a [f64], phi: &[f64], sigma2: f64) -> Result<Self> {
        let q = x.ncols();
        if tau2.len() != q || phi.len() != q {
            return Err(Error::Dimension(format!("tau2/phi lengths {}/{} for {q} predictors", tau2.len(), phi.len())));
        }
        if !(spike_ratio > 0.0 && spike_ratio <= 1.0) {
            return Err(Error::domain(format!("spike ratio r={spike_ratio} outside (0, 1]")));
        }
        if let Some(v) = tau2.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::domain(format!("tau2 must be positive, got {v}")));
        }
        if let Some(v) = phi.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::domain(format!("phi must lie in (0, 1), got {v}")));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::domain(format!("sigma2 must be positive, got {sigma2}")));
        }
        let transition = SysMatrix::Diagonal(DVector::from_column_slice(phi));
        let noise = SysMatrix::Diagonal(DVector::from_iterator(q, phi.iter().map(|p| (1.0 - p * p).sqrt())));
        Ok(Self { x, spike_ratio, tau2, sigma2, transition, noise })
    }

    /// `psi_{t,j} = K_{t,j} tau2_j`
    pub fn psi(&self, regime: Regime, j: usize) -> f64 {
        regime.scale(self.spike_ratio) * self.tau2[j]
    }
}

impl RegimeSystem for TvpSystem<'_> {
    fn len(&self) -> usize {
        self.x.nrows()
    }

    fn state_dim(&self) -> usize {
        self.x.ncols()
    }

    fn initial(&self) -> (DVector<f64>, DMatrix<f64>) {
        let q = self.state_dim();
        (DVector::zeros(q), DMatrix::identity(q, q))
    }

    fn step(&self, t: usize, regimes: &[Regime]) -> DlmStep {
        let q = self.state_dim();
        let loading = DVector::from_fn(q, |j, _| self.x[(t, j)] * self.psi(regimes[j], j).sqrt());
        DlmStep {
            obs_offset: 0.0,
            loading,
            obs_sd: self.sigma2.sqrt(),
            state_offset: DVector::zeros(q),
            transition: self.transition.clone(),
            noise: self.noise.clone(),
        }
    }
}

/// Realize the scaled-state regression DLM for a given regime matrix.
pub fn build_conditional_dlm(
    x: &DMatrix<f64>,
    k: &RegimeMatrix,
    spike_ratio: f64,
    tau2: &[f64],
    phi: &[f64],
    sigma2: f64,
) -> Result<ConditionalDlm> {
    if k.len() != x.nrows() || k.dim() != x.ncols() {
        return Err(Error::Dimension(format!(
            "regimes are {}x{}, regressors {}x{}",
            k.len(),
            k.dim(),
            x.nrows(),
            x.ncols()
        )));
    }
    let sys = TvpSystem::new(x, spike_ratio, tau2, phi, sigma2)?;
    Ok(sys.materialize(k))
}

/// Unscaled coefficients `beta_{t,j} = sqrt(psi_{t,j}) * beta_tilde_{t,j}`.
pub fn unscale_states(scaled: &DMatrix<f64>, k: &RegimeMatrix, spike_ratio: f64, tau2: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(scaled.nrows(), scaled.ncols(), |t, j| {
        scaled[(t, j)] * (k.get(t, j).scale(spike_ratio) * tau2[j]).sqrt()
    })
}
