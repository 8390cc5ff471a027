//! Small special-function helpers used by the waiting-time laws.

/// Riemann zeta function for real `s > 1`.
///
/// Direct summation of the first terms plus an Euler–Maclaurin tail,
/// accurate to better than 1e-12 over the parameter range used here
/// (`s` down to ~1.2).
pub fn riemann_zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta(s) requires s > 1, got {s}");
    const M: u64 = 2000;
    let head: f64 = (1..M).map(|n| (n as f64).powf(-s)).sum();
    head + zeta_tail(s, M - 1)
}

/// Tail sum `sum_{n > m} n^{-s}` by Euler–Maclaurin on `f(x) = x^{-s}`.
pub fn zeta_tail(s: f64, m: u64) -> f64 {
    let m = m as f64 + 1.0; // tail starts at n = m + 1
    let integral = m.powf(1.0 - s) / (s - 1.0);
    let half = 0.5 * m.powf(-s);
    let b2 = s * m.powf(-s - 1.0) / 12.0;
    let b4 = s * (s + 1.0) * (s + 2.0) * m.powf(-s - 3.0) / 720.0;
    integral + half + b2 - b4
}

/// ln(n!) — exact cumulative sum for small n, Stirling series beyond.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n <= 256 {
        return (2..=n).map(|k| (k as f64).ln()).sum();
    }
    let x = n as f64;
    let x2 = x * x;
    x * x.ln() - x + 0.5 * (std::f64::consts::TAU * x).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x * x2)
        + 1.0 / (1260.0 * x2 * x2 * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zeta_two_is_pi_squared_over_six() {
        assert!((riemann_zeta(2.0) - PI * PI / 6.0).abs() < 1e-12);
    }

    #[test]
    fn zeta_spot_values() {
        // Apery's constant and zeta(4) = pi^4/90.
        assert!((riemann_zeta(3.0) - 1.202_056_903_159_594_2).abs() < 1e-12);
        assert!((riemann_zeta(4.0) - PI.powi(4) / 90.0).abs() < 1e-12);
        // Brute-force cross-check at a non-integer argument.
        let brute: f64 = (1..40_000_000u64).map(|n| (n as f64).powf(-1.5)).sum::<f64>()
            + zeta_tail(1.5, 39_999_999);
        assert!((riemann_zeta(1.5) - brute).abs() < 1e-11);
    }

    #[test]
    fn zeta_tail_matches_direct_sum() {
        let direct: f64 = (101..200_000u64).map(|n| (n as f64).powf(-2.5)).sum::<f64>()
            + zeta_tail(2.5, 199_999);
        assert!((zeta_tail(2.5, 100) - direct).abs() < 1e-13);
    }

    #[test]
    fn ln_factorial_matches_direct_product() {
        let direct: f64 = (2..=300u64).map(|k| (k as f64).ln()).sum();
        assert!((ln_factorial(300) - direct).abs() < 1e-9 * direct);
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-12);
    }
}
