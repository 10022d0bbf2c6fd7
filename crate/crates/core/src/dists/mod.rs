//! Random variate generation and closed-form densities used by the sampler.
//!
//! Parametrizations are fixed crate-wide:
//! - `Gamma(shape, rate)`, mean `shape / rate`;
//! - `InvGamma(shape, scale)`, mean `scale / (shape - 1)`, i.e. the reciprocal of
//!   a `Gamma(shape, rate = scale)` draw;
//! - `Exponential(rate)`, mean `1 / rate`;
//! - `GIG(p, g, h)` with density proportional to `x^(p-1) exp(-(g x + h / x) / 2)`.

mod bessel;
mod gig;

pub use bessel::{bessel_k, ln_bessel_k};
pub use gig::{sample_gig, GigParams};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    check_positive("gamma shape", shape)?;
    check_positive("gamma rate", rate)?;
    let dist = rand_distr::Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::domain(format!("gamma({shape}, {rate}): {e}")))?;
    Ok(dist.sample(rng))
}

/// Draw from `InvGamma(shape, scale)`.
pub fn sample_inv_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    check_positive("inverse-gamma shape", shape)?;
    check_positive("inverse-gamma scale", scale)?;
    let x = sample_gamma(shape, scale, rng)?;
    let v = 1.0 / x;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!("inverse-gamma({shape}, {scale}) draw overflowed")))
    }
}

pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    check_positive("beta a", a)?;
    check_positive("beta b", b)?;
    let dist = rand_distr::Beta::new(a, b)
        .map_err(|e| Error::domain(format!("beta({a}, {b}): {e}")))?;
    Ok(dist.sample(rng))
}

#[inline]
pub fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn ln_inv_gamma_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

pub fn ln_beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return f64::NEG_INFINITY;
    }
    (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
}

/// Normal-Gamma density: the marginal of `x | psi ~ N(0, psi)` with
/// `psi ~ Gamma(a, rate = 1 / (2 gamma^2))`. `scale_gamma2` is `gamma^2`.
///
/// Evaluated in closed form through the modified Bessel function of the
/// second kind. At `x = 0` the density is finite only for `a > 1/2`.
pub fn density_normal_gamma(x: f64, a: f64, scale_gamma2: f64) -> Result<f64> {
    check_positive("normal-gamma shape", a)?;
    check_positive("normal-gamma scale", scale_gamma2)?;
    let gamma = scale_gamma2.sqrt();
    let ax = x.abs();
    if ax == 0.0 {
        if a > 0.5 {
            let ln = ln_gamma(a - 0.5) - (2.0f64).ln() - LN_SQRT_PI - gamma.ln() - ln_gamma(a);
            return Ok(ln.exp());
        }
        return Ok(f64::INFINITY);
    }
    let nu = a - 0.5;
    let ln_norm = LN_SQRT_PI + nu * std::f64::consts::LN_2 + (a + 0.5) * gamma.ln() + ln_gamma(a);
    let ln = nu * ax.ln() + ln_bessel_k(nu, ax / gamma) - ln_norm;
    Ok(ln.exp())
}

/// Student-t density with `dof` degrees of freedom, zero location and
/// squared scale `scale2`.
pub fn density_scaled_t(x: f64, dof: f64, scale2: f64) -> Result<f64> {
    check_positive("t degrees of freedom", dof)?;
    check_positive("t squared scale", scale2)?;
    let z2 = x * x / (dof * scale2);
    let ln = ln_gamma(0.5 * (dof + 1.0))
        - ln_gamma(0.5 * dof)
        - 0.5 * (dof * scale2).ln()
        - LN_SQRT_PI
        - 0.5 * (dof + 1.0) * z2.ln_1p();
    Ok(ln.exp())
}

/// Laplace density with zero location and scale `b` (variance `2 b^2`).
pub fn density_laplace(x: f64, scale: f64) -> Result<f64> {
    check_positive("laplace scale", scale)?;
    Ok((-x.abs() / scale).exp() / (2.0 * scale))
}
