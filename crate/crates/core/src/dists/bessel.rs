//! Modified Bessel function of the second kind, `K_nu(x)`, for real order.
//!
//! Uses `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt`. The integrand is
//! entire and decays double-exponentially, so the trapezoidal rule converges
//! geometrically; summation is done in the log domain so large orders and
//! tiny or huge arguments neither overflow nor underflow.

/// Natural log of `K_nu(x)` for `x > 0`.
pub fn ln_bessel_k(nu: f64, x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if !(x > 0.0) {
        return f64::NAN;
    }
    let nu = nu.abs();
    let ln_g = |t: f64| -> f64 {
        // ln cosh(nu t), stable for large arguments
        let a = nu * t;
        let ln_cosh = a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2;
        -x * t.cosh() + ln_cosh
    };
    let peak = (nu / x).asinh();
    let curvature = (x * x + nu * nu).sqrt().max(25.0);
    let h = 0.5 / curvature.sqrt();
    let ln_peak = ln_g(peak);

    // accumulate exp(ln_g - ln_peak)
    let mut sum = 0.5 * (ln_g(0.0) - ln_peak).exp();
    let mut k = 1usize;
    loop {
        let t = k as f64 * h;
        let lv = ln_g(t) - ln_peak;
        sum += lv.exp();
        if t > peak && lv < -45.0 {
            break;
        }
        k += 1;
    }
    ln_peak + (h * sum).ln()
}

pub fn bessel_k(nu: f64, x: f64) -> f64 {
    ln_bessel_k(nu, x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn reference_values() {
        // Abramowitz & Stegun tables
        assert!(rel(bessel_k(0.0, 1.0), 0.421_024_438_240_708_3) < 1e-13);
        assert!(rel(bessel_k(1.0, 1.0), 0.601_907_230_197_234_6) < 1e-13);
        assert!(rel(bessel_k(0.0, 0.1), 2.427_069_024_702_016_6) < 1e-13);
        assert!(rel(bessel_k(1.0, 2.0), 0.139_865_881_816_522_4) < 1e-13);
    }

    #[test]
    fn half_integer_closed_form() {
        for &x in &[1e-6, 0.01, 0.3, 1.0, 7.5, 40.0, 700.0, 2000.0] {
            let exact = 0.5 * (std::f64::consts::PI / (2.0 * x)).ln() - x;
            let got = ln_bessel_k(0.5, x);
            assert!((got - exact).abs() < 1e-12 * exact.abs().max(1.0), "x={x}: {got} vs {exact}");
            // K_{3/2}(x) = sqrt(pi/(2x)) e^{-x} (1 + 1/x)
            let exact32 = exact + (1.0 + 1.0 / x).ln();
            let got32 = ln_bessel_k(1.5, x);
            assert!((got32 - exact32).abs() < 1e-12 * exact32.abs().max(1.0));
        }
    }

    #[test]
    fn recurrence_holds_for_fractional_and_large_order() {
        // K_{nu+1}(x) = K_{nu-1}(x) + 2 nu / x K_nu(x)
        for &nu in &[0.3, 2.7, 15.2, 99.5] {
            for &x in &[0.05, 1.3, 30.0] {
                let lhs = ln_bessel_k(nu + 1.0, x);
                let a = ln_bessel_k(nu - 1.0, x);
                let b = (2.0 * nu / x).ln() + ln_bessel_k(nu, x);
                let m = a.max(b);
                let rhs = m + ((a - m).exp() + (b - m).exp()).ln();
                assert!((lhs - rhs).abs() < 1e-11 * lhs.abs().max(1.0), "nu={nu} x={x}");
            }
        }
    }

    #[test]
    fn symmetric_in_order() {
        assert_eq!(ln_bessel_k(-2.3, 0.7), ln_bessel_k(2.3, 0.7));
    }
}
