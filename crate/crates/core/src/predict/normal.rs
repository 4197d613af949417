//! Standard normal helpers evaluated in log space.

use statrs::function::erf::erfc;
use std::f64::consts::SQRT_2;

/// Linear predictors are clamped to `[-ETA_CLAMP, ETA_CLAMP]` inside the
/// likelihood.
pub const ETA_CLAMP: f64 = 30.0;

// ln(sqrt(2 pi))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

pub fn log_norm_pdf(z: f64) -> f64 {
    -LN_SQRT_2PI - 0.5 * z * z
}

/// `ln Phi(z)` without cancellation in either tail.
pub fn log_norm_cdf(z: f64) -> f64 {
    if z > 0.0 {
        // Phi(z) = 1 - Phi(-z); keep the small complement exact
        (-0.5 * erfc(z / SQRT_2)).ln_1p()
    } else if z > -37.0 {
        (0.5 * erfc(-z / SQRT_2)).ln()
    } else {
        // asymptotic series of the Mills ratio, erfc underflows here
        let z2 = z * z;
        let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
        log_norm_pdf(z) - (-z).ln() + series.ln()
    }
}

/// `phi(z) / Phi(z)`.
pub fn inverse_mills(z: f64) -> f64 {
    (log_norm_pdf(z) - log_norm_cdf(z)).exp()
}

#[cfg(test)]
#[allow(clippy::excessive_precision, clippy::approx_constant)]
mod tests {
    use super::*;

    // ln Phi(z) from mpmath at 80 digits.
    const REFERENCE: [(f64, f64); 17] = [
        (-30.0, -454.32124395634319711),
        (-25.0, -316.63940800802025894),
        (-20.0, -203.91715537109726394),
        (-10.0, -53.231285150512470578),
        (-5.0, -15.064998393988725736),
        (-2.5, -5.0816482772786904984),
        (-1.0, -1.8410216450092635058),
        (-0.3, -0.96210281816885065666),
        (0.0, -0.69314718055994530942),
        (0.3, -0.48141016158848120517),
        (1.0, -0.17275377902344988953),
        (2.5, -0.006229025485860002381),
        (5.0, -2.8665161296376359338e-7),
        (8.0, -6.2209605742717860585e-16),
        (10.0, -7.619853024160526066e-24),
        (20.0, -2.7536241186062336951e-89),
        (30.0, -4.9067139271481870595e-198),
    ];

    #[test]
    fn log_cdf_matches_high_precision_reference() {
        for (z, expected) in REFERENCE {
            let got = log_norm_cdf(z);
            let rel = ((got - expected) / expected).abs();
            assert!(rel < 1e-10, "z={z}: got {got}, expected {expected}, rel {rel}");
        }
    }

    #[test]
    fn deep_tail_stays_finite_and_monotone() {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..200 {
            let z = -60.0 + 0.5 * i as f64;
            let v = log_norm_cdf(z);
            // above ~38 the value rounds to -0
            assert!(v.is_finite() && (v > prev || (z > 30.0 && v >= prev)), "z={z}");
            prev = v;
        }
        let (a, b) = (log_norm_cdf(-36.999), log_norm_cdf(-37.001));
        assert!((a - b).abs() < 0.1);
    }

    #[test]
    fn mills_ratio() {
        assert!((inverse_mills(0.0) - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
        // for very negative z, phi/Phi ~ -z
        assert!((inverse_mills(-30.0) / 30.0 - 1.0).abs() < 2e-3);
        assert!(inverse_mills(30.0) < 1e-190);
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
    }
}
