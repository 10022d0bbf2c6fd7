//! Generalized inverse Gaussian variates.
//!
//! Port of the Hörmann–Leydold (2014) generator: ratio-of-uniforms with a
//! mode shift for large order or concentration, ratio-of-uniforms without
//! shift in the intermediate region, and a piecewise-constant hat for the
//! small-order, small-concentration corner. All three have a uniformly
//! bounded rejection rate, including the very negative orders that appear in
//! the `tau2` full conditional (`p = a_tau - T/2`).

use rand::Rng;

use crate::error::{Error, Result};

/// Density proportional to `x^(p-1) exp(-(g x + h / x) / 2)` on `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GigParams {
    pub p: f64,
    pub g: f64,
    pub h: f64,
}

impl GigParams {
    pub fn new(p: f64, g: f64, h: f64) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::domain(format!("GIG order must be finite, got {p}")));
        }
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::domain(format!("GIG rate g must be positive, got {g}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::domain(format!("GIG rate h must be positive, got {h}")));
        }
        Ok(Self { p, g, h })
    }

    /// Unnormalized log density.
    pub fn ln_density_unnorm(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        (self.p - 1.0) * x.ln() - 0.5 * (self.g * x + self.h / x)
    }

    /// Location of the density maximum.
    pub fn mode(&self) -> f64 {
        let pm1 = self.p - 1.0;
        let disc = (pm1 * pm1 + self.g * self.h).sqrt();
        if pm1 >= 0.0 {
            (pm1 + disc) / self.g
        } else {
            self.h / (disc - pm1)
        }
    }
}

/// Mode of `x^(lambda-1) exp(-omega/2 (x + 1/x))`.
fn standard_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0).powi(2) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda).powi(2) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

pub fn sample_gig<R: Rng + ?Sized>(params: &GigParams, rng: &mut R) -> f64 {
    let lambda = params.p.abs();
    let alpha = (params.h / params.g).sqrt();
    let omega = (params.h * params.g).sqrt();
    let x = if lambda > 2.0 || omega > 3.0 {
        rou_shift(lambda, omega, rng)
    } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        rou_noshift(lambda, omega, rng)
    } else {
        concave_hat(lambda, omega, rng)
    };
    if params.p < 0.0 {
        alpha / x
    } else {
        alpha * x
    }
}

#[inline]
fn unif<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // (0, 1]: keeps logs finite
    1.0 - rng.random::<f64>()
}

fn rou_noshift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = standard_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0).powi(2) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * unif(rng);
        let v = unif(rng);
        let x = u / v;
        if v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn rou_shift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = standard_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);

    // extremes of (x - xm) sqrt(f(x)) are the roots of a cubic
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();

    loop {
        let u = uminus + unif(rng) * (uplus - uminus);
        let v = unif(rng);
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn concave_hat<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let xm = standard_mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let mut area = [k0 * x0, 0.0, 0.0];
    let (k1, k2);
    if x0 >= 2.0 / omega {
        k1 = 0.0;
        k2 = x0.powf(lambda - 1.0);
        area[2] = k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega;
    } else {
        k1 = (-omega).exp();
        area[1] = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        k2 = (2.0 / omega).powf(lambda - 1.0);
        area[2] = k2 * 2.0 * (-1.0f64).exp() / omega;
    }
    let total = area[0] + area[1] + area[2];

    loop {
        let mut v = total * unif(rng);
        let (x, hx);
        if v <= area[0] {
            x = x0 * v / area[0];
            hx = k0;
        } else {
            v -= area[0];
            if v <= area[1] {
                if lambda == 0.0 {
                    x = omega * (omega.exp() * v).exp();
                    hx = k1 / x;
                } else {
                    x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    hx = k1 * x.powf(lambda - 1.0);
                }
            } else {
                v -= area[1];
                let a = x0.max(2.0 / omega);
                x = -2.0 / omega * ((-omega / 2.0 * a).exp() - omega / (2.0 * k2) * v).ln();
                hx = k2 * (-omega / 2.0 * x).exp();
            }
        }
        let u = unif(rng) * hx;
        if u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}
