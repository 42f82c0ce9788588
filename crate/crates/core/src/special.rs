//! Small numeric helpers on top of the `libm` special functions.

use libm::{erfc, lgamma};

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `ln P(Z > x)` for a standard normal `Z`, accurate deep into the tail.
pub fn log_norm_sf(x: f64) -> f64 {
    if x < 25.0 {
        (0.5 * erfc(x / std::f64::consts::SQRT_2)).ln()
    } else {
        let x2 = x * x;
        let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
        -0.5 * x2 - x.ln() - LN_SQRT_2PI + series.ln()
    }
}

pub fn log_norm_cdf(x: f64) -> f64 {
    log_norm_sf(-x)
}

/// `ln(Phi(b) - Phi(a))` for `a < b`.
pub fn log_norm_interval(a: f64, b: f64) -> f64 {
    debug_assert!(a < b);
    if a > 0.0 {
        // both in the upper tail: Q(a) - Q(b)
        let la = log_norm_sf(a);
        let lb = log_norm_sf(b);
        la + log1m_exp(lb - la)
    } else if b < 0.0 {
        let la = log_norm_cdf(a);
        let lb = log_norm_cdf(b);
        lb + log1m_exp(la - lb)
    } else {
        (1.0 - norm_sf_plain(b) - norm_cdf(a)).ln()
    }
}

fn norm_sf_plain(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `ln(1 - e^x)` for `x <= 0`.
pub fn log1m_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    lgamma(a) + lgamma(b) - lgamma(a + b)
}

/// `(exponent) * ln(x)` with the convention `0 * ln 0 = 0`.
pub fn xlogy(exponent: f64, x: f64) -> f64 {
    if exponent == 0.0 {
        0.0
    } else {
        exponent * x.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((norm_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((norm_cdf(-2.0) - 0.022_750_131_948_179_2).abs() < 1e-15);
    }

    #[test]
    fn log_sf_is_continuous_across_branch() {
        let below = log_norm_sf(25.0 - 1e-9);
        let above = log_norm_sf(25.0 + 1e-9);
        assert!((below - above).abs() < 1e-6, "{below} vs {above}");
        // Q(40) is below the f64 range; the log stays finite.
        assert!((log_norm_sf(40.0) - (-804.608_442_013_753_8)).abs() < 1e-9);
        assert!((log_norm_sf(25.0) - (-316.639_408_008_020_26)).abs() < 1e-9);
    }

    #[test]
    fn interval_mass() {
        let direct = (norm_cdf(1.0) - norm_cdf(-0.5)).ln();
        assert!((log_norm_interval(-0.5, 1.0) - direct).abs() < 1e-14);
        let tail = (norm_cdf(-3.0) - norm_cdf(-4.0)).ln();
        assert!((log_norm_interval(-4.0, -3.0) - tail).abs() < 1e-12);
        let upper = (norm_sf_plain(3.0) - norm_sf_plain(4.0)).ln();
        assert!((log_norm_interval(3.0, 4.0) - upper).abs() < 1e-12);
    }

    #[test]
    fn beta_function() {
        // B(2, 3) = 1/12
        assert!((ln_beta(2.0, 3.0) - (1.0f64 / 12.0).ln()).abs() < 1e-13);
    }
}
