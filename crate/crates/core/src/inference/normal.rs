//! Gaussian CDF helpers with accurate tails.

use libm::erfc;

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `P(a < X < b)` for `X ~ N(mean, std^2)`; infinite bounds allowed.
/// Evaluated on whichever tail keeps relative precision.
pub fn normal_interval(mean: f64, std: f64, a: f64, b: f64) -> f64 {
    debug_assert!(std > 0.0 && a <= b);
    let za = (a - mean) / std;
    let zb = (b - mean) / std;
    let mass = if za >= 0.0 {
        // both bounds in the upper tail: use survival functions
        std_normal_cdf(-za) - std_normal_cdf(-zb)
    } else {
        std_normal_cdf(zb) - std_normal_cdf(za)
    };
    mass.max(0.0)
}
