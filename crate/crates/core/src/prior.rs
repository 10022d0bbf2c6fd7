//! Dynamic spike-and-slab priors on the coefficient variances.
//!
//! Each coefficient variance is `psi_{j,t} = K_{j,t} tau2_j` with `K` in
//! `{r, 1}` and `tau2_j` drawn from a mixing law whose scale `Q_j` carries an
//! inverse-gamma prior. The three supported families are
//!
//! | kind          | `tau2 \| Q`          | marginal of `beta` in the slab | `c`          |
//! |---------------|----------------------|--------------------------------|--------------|
//! | NMIG          | `IG(nu, Q)`          | `t_{2 nu}(0, Q / nu)`          | `1/(nu - 1)` |
//! | Normal-Gamma  | `Gamma(a, 1/(2Q))`   | `NG(a, Q)`                     | `2a`         |
//! | Laplace       | `Exp(1/(2Q))`        | `Laplace(sqrt(Q))`             | `2`          |
//!
//! so that the slab variance of `beta` is `c Q` and the spike variance `c Q r`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dists::{
    density_laplace, density_normal_gamma, density_scaled_t, ln_inv_gamma_pdf, sample_gig, sample_inv_gamma,
    GigParams,
};
use crate::error::{Error, Result};
use crate::regime::Regime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    Nmig,
    #[serde(rename = "ng")]
    NormalGamma,
    #[serde(rename = "laplace")]
    LaplaceMix,
}

impl PriorKind {
    pub const ALL: [PriorKind; 3] = [PriorKind::Nmig, PriorKind::NormalGamma, PriorKind::LaplaceMix];

    pub fn as_str(self) -> &'static str {
        match self {
            PriorKind::Nmig => "nmig",
            PriorKind::NormalGamma => "ng",
            PriorKind::LaplaceMix => "laplace",
        }
    }
}

impl fmt::Display for PriorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PriorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nmig" => Ok(PriorKind::Nmig),
            "ng" | "normal-gamma" | "normalgamma" => Ok(PriorKind::NormalGamma),
            "laplace" | "lap" => Ok(PriorKind::LaplaceMix),
            other => Err(Error::Config(format!("unknown prior kind '{other}' (expected nmig, ng or laplace)"))),
        }
    }
}

/// Which probability plays the role of the slab weight `w` in `f*(w)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlabWeight {
    /// Stationary slab probability of the regime chain.
    #[default]
    Stationary,
    /// Probability of staying in the slab.
    StaySlab,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Spike-to-slab variance ratio `r`.
    pub spike_ratio: f64,
    /// Inverse-gamma shape `nu` of the NMIG mixing law.
    pub nu: f64,
    /// Gamma shape `a` of the Normal-Gamma mixing law.
    pub a_tau: f64,
    /// Shape of the inverse-gamma prior on `Q`.
    pub c_psi: f64,
    /// Scale numerator of the inverse-gamma prior on `Q`.
    pub cap_c_psi: f64,
    pub a_sigma: f64,
    pub b_sigma: f64,
    pub a_phi: f64,
    pub b_phi: f64,
    pub a_omega: f64,
    pub b_omega: f64,
    /// Concentration of the Beta proposal for `phi`.
    pub alpha: f64,
    pub slab_weight: SlabWeight,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self::example1()
    }
}

impl Hyperparameters {
    /// Settings for the five-predictor simulation study.
    pub fn example1() -> Self {
        Self {
            spike_ratio: 0.005,
            nu: 5.0,
            a_tau: 0.5,
            c_psi: 51.0,
            cap_c_psi: 5.0,
            a_sigma: 1e-4,
            b_sigma: 1e-4,
            a_phi: 77.6,
            b_phi: 2.4,
            a_omega: 77.6,
            b_omega: 2.4,
            alpha: 1000.0,
            slab_weight: SlabWeight::Stationary,
        }
    }

    /// Settings for the recursive-regression (Cholesky) simulation study.
    pub fn example2() -> Self {
        Self { nu: 25.0, c_psi: 50.0, cap_c_psi: 1.5, a_sigma: 5.0, b_sigma: 1.5, ..Self::example1() }
    }

    /// Settings for the inflation application.
    pub fn inflation() -> Self {
        Self {
            spike_ratio: 0.05,
            nu: 50.0,
            c_psi: 50.0,
            cap_c_psi: 0.05,
            a_sigma: 31.0,
            b_sigma: 4.22,
            ..Self::example1()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "example1" => Ok(Self::example1()),
            "example2" => Ok(Self::example2()),
            "inflation" => Ok(Self::inflation()),
            other => Err(Error::Config(format!("unknown preset '{other}' (expected example1, example2 or inflation)"))),
        }
    }

    /// Gamma shape of the mixing law of `kind` (1 for the Laplace family).
    pub fn mixing_shape(&self, kind: PriorKind) -> f64 {
        match kind {
            PriorKind::Nmig => self.nu,
            PriorKind::NormalGamma => self.a_tau,
            PriorKind::LaplaceMix => 1.0,
        }
    }

    pub fn validate(&self, kind: PriorKind) -> Result<()> {
        let named = [
            ("nu", self.nu),
            ("a_tau", self.a_tau),
            ("c_psi", self.c_psi),
            ("C_psi", self.cap_c_psi),
            ("a_sigma", self.a_sigma),
            ("b_sigma", self.b_sigma),
            ("a_phi", self.a_phi),
            ("b_phi", self.b_phi),
            ("a_omega", self.a_omega),
            ("b_omega", self.b_omega),
            ("alpha", self.alpha),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.spike_ratio > 0.0 && self.spike_ratio < 0.5) {
            return Err(Error::Config(format!("spike ratio r must lie in (0, 0.5), got {}", self.spike_ratio)));
        }
        if kind == PriorKind::Nmig && self.nu <= 1.0 {
            return Err(Error::Config(format!("NMIG needs nu > 1 for a finite slab variance, got {}", self.nu)));
        }
        Ok(())
    }
}

/// `c` such that the slab variance of `beta` given `Q` is `c Q`.
pub fn family_constant(kind: PriorKind, hp: &Hyperparameters) -> Result<f64> {
    match kind {
        PriorKind::Nmig if hp.nu <= 1.0 => Err(Error::domain(format!("NMIG constant needs nu > 1, got {}", hp.nu))),
        PriorKind::Nmig => Ok(1.0 / (hp.nu - 1.0)),
        PriorKind::NormalGamma if hp.a_tau <= 0.0 => Err(Error::domain(format!("Gamma shape must be positive, got {}", hp.a_tau))),
        PriorKind::NormalGamma => Ok(2.0 * hp.a_tau),
        PriorKind::LaplaceMix => Ok(2.0),
    }
}

/// `c [(1 - w) r + w]`: prior variance of `beta` when the slab has weight `w`.
pub fn f_star(c: f64, slab_prob: f64, spike_ratio: f64) -> f64 {
    c * ((1.0 - slab_prob) * spike_ratio + slab_prob)
}

/// Stationary slab probability of a two-state chain. A chain that never
/// leaves its initial state gets 1/2.
pub fn stationary_slab_prob(stay_slab: f64, stay_spike: f64) -> f64 {
    let denom = 2.0 - stay_spike - stay_slab;
    if denom <= 0.0 {
        0.5
    } else {
        (1.0 - stay_spike) / denom
    }
}

/// Slab weight used in `f*` under the configured convention.
pub fn slab_weight(hp: &Hyperparameters, stay_slab: f64, stay_spike: f64) -> f64 {
    match hp.slab_weight {
        SlabWeight::Stationary => stationary_slab_prob(stay_slab, stay_spike),
        SlabWeight::StaySlab => stay_slab,
    }
}

/// Scale of the inverse-gamma prior on `Q`: `C_psi / f*(w)`.
pub fn q_prior_scale(kind: PriorKind, hp: &Hyperparameters, slab_prob: f64) -> Result<f64> {
    Ok(hp.cap_c_psi / f_star(family_constant(kind, hp)?, slab_prob, hp.spike_ratio))
}

/// `sum_t (beta_t - sqrt(K_t / K_{t-1}) phi beta_{t-1})^2 / (K_t (1 - phi^2))`
/// with the first term `beta_1^2 / K_1`: the quadratic form of the
/// coefficient path at unit `tau2`.
pub fn tau2_quadratic_form(beta: &[f64], k: &[Regime], spike_ratio: f64, phi: f64) -> f64 {
    let mut s = 0.0;
    for t in 0..beta.len() {
        let kt = k[t].scale(spike_ratio);
        if t == 0 {
            s += beta[0] * beta[0] / kt;
        } else {
            let kp = k[t - 1].scale(spike_ratio);
            let d = beta[t] - (kt / kp).sqrt() * phi * beta[t - 1];
            s += d * d / (kt * (1.0 - phi * phi));
        }
    }
    s
}

/// A univariate full conditional of inverse-gamma or GIG form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleConditional {
    /// Density proportional to `x^{-shape-1} exp(-scale / x)`.
    InvGamma { shape: f64, scale: f64 },
    Gig(GigParams),
}

impl ScaleConditional {
    pub fn ln_density_unnorm(&self, x: f64) -> f64 {
        match *self {
            ScaleConditional::InvGamma { shape, scale } => ln_inv_gamma_pdf(x, shape, scale),
            ScaleConditional::Gig(p) => p.ln_density_unnorm(x),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let x = match *self {
            ScaleConditional::InvGamma { shape, scale } => sample_inv_gamma(shape, scale, rng)?,
            ScaleConditional::Gig(p) => sample_gig(&p, rng),
        };
        if x > 0.0 && x.is_finite() {
            Ok(x)
        } else {
            Err(Error::Numerical(format!("scale draw {x} from {self:?}")))
        }
    }
}

/// Full conditional of `tau2_j` given `Q_j` and the quadratic form `s` of a
/// path of length `len`.
pub fn tau2_conditional(kind: PriorKind, hp: &Hyperparameters, q: f64, s: f64, len: usize) -> Result<ScaleConditional> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::domain(format!("Q must be positive, got {q}")));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::Numerical(format!("invalid quadratic form {s}")));
    }
    let half_t = len as f64 / 2.0;
    match kind {
        PriorKind::Nmig => Ok(ScaleConditional::InvGamma { shape: hp.nu + half_t, scale: q + s / 2.0 }),
        PriorKind::NormalGamma | PriorKind::LaplaceMix => {
            if s <= 0.0 {
                return Err(Error::Numerical("zero quadratic form in the GIG conditional of tau2".into()));
            }
            Ok(ScaleConditional::Gig(GigParams::new(hp.mixing_shape(kind) - half_t, 1.0 / q, s)?))
        }
    }
}

/// Draw `tau2_j` given the unscaled coefficient path and its regimes.
pub fn sample_tau2<R: Rng + ?Sized>(
    kind: PriorKind,
    hp: &Hyperparameters,
    q: f64,
    beta: &[f64],
    k: &[Regime],
    phi: f64,
    rng: &mut R,
) -> Result<f64> {
    if beta.len() != k.len() {
        return Err(Error::Dimension(format!("{} coefficients with {} regimes", beta.len(), k.len())));
    }
    let s = tau2_quadratic_form(beta, k, hp.spike_ratio, phi);
    tau2_conditional(kind, hp, q, s, beta.len())?.sample(rng)
}

/// Full conditional of `Q_j` given `tau2_j` and slab weight `w`.
pub fn q_conditional(kind: PriorKind, hp: &Hyperparameters, tau2: f64, slab_prob: f64) -> Result<ScaleConditional> {
    if !(tau2 > 0.0 && tau2.is_finite()) {
        return Err(Error::domain(format!("tau2 must be positive, got {tau2}")));
    }
    if !(0.0..=1.0).contains(&slab_prob) {
        return Err(Error::domain(format!("slab weight {slab_prob} is not a probability")));
    }
    let prior_scale = q_prior_scale(kind, hp, slab_prob)?;
    match kind {
        PriorKind::Nmig => Ok(ScaleConditional::Gig(GigParams::new(hp.nu - hp.c_psi, 2.0 / tau2, 2.0 * prior_scale)?)),
        PriorKind::NormalGamma | PriorKind::LaplaceMix => Ok(ScaleConditional::InvGamma {
            shape: hp.c_psi + hp.mixing_shape(kind),
            scale: tau2 / 2.0 + prior_scale,
        }),
    }
}

pub fn sample_q<R: Rng + ?Sized>(
    kind: PriorKind,
    hp: &Hyperparameters,
    tau2: f64,
    slab_prob: f64,
    rng: &mut R,
) -> Result<f64> {
    q_conditional(kind, hp, tau2, slab_prob)?.sample(rng)
}

/// Log density of `tau2` given `Q` under the mixing law of `kind`, including
/// all `Q`-dependent normalizing terms.
pub fn ln_mixing_density(kind: PriorKind, hp: &Hyperparameters, tau2: f64, q: f64) -> f64 {
    match kind {
        PriorKind::Nmig => ln_inv_gamma_pdf(tau2, hp.nu, q),
        PriorKind::NormalGamma | PriorKind::LaplaceMix => {
            let a = hp.mixing_shape(kind);
            let rate = 1.0 / (2.0 * q);
            a * rate.ln() - statrs::function::gamma::ln_gamma(a) + (a - 1.0) * tau2.ln() - rate * tau2
        }
    }
}

/// Density of one coefficient given `Q` for a single regime.
fn component_density(kind: PriorKind, hp: &Hyperparameters, q: f64, regime: Regime, x: f64) -> Result<f64> {
    let scale = regime.scale(hp.spike_ratio) * q;
    match kind {
        PriorKind::Nmig => density_scaled_t(x, 2.0 * hp.nu, scale / hp.nu),
        PriorKind::NormalGamma => density_normal_gamma(x, hp.a_tau, scale),
        PriorKind::LaplaceMix => density_laplace(x, scale.sqrt()),
    }
}

/// Marginal prior density of a coefficient: a two-component mixture with
/// slab weight `w`.
pub fn marginal_beta_density(kind: PriorKind, hp: &Hyperparameters, q: f64, slab_prob: f64, x: f64) -> Result<f64> {
    if !(q > 0.0) || !(0.0..=1.0).contains(&slab_prob) {
        return Err(Error::domain(format!("invalid Q = {q} or slab weight {slab_prob}")));
    }
    let slab = component_density(kind, hp, q, Regime::Slab, x)?;
    let spike = if slab_prob < 1.0 { component_density(kind, hp, q, Regime::Spike, x)? } else { 0.0 };
    Ok(slab_prob * slab + (1.0 - slab_prob) * spike)
}

/// Mixture of a scaled-t slab and a Laplace spike.
pub fn laplace_t_density(hp: &Hyperparameters, q: f64, slab_prob: f64, x: f64) -> Result<f64> {
    let slab = density_scaled_t(x, 2.0 * hp.nu, q / hp.nu)?;
    let spike = density_laplace(x, (hp.spike_ratio * q).sqrt())?;
    Ok(slab_prob * slab + (1.0 - slab_prob) * spike)
}
