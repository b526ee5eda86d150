//! Small statistical helpers shared by the attack and moment modules.

/// z for a 95% (two-sided) Wilson score interval.
pub const WILSON_Z_95: f64 = 1.959_963_984_540_054;

/// Lower endpoint of the Wilson score interval for a binomial proportion.
///
/// Used to turn empirical success counts into a conservative lower bound on
/// the true success probability before comparing against the 1/17 floor.
pub fn wilson_lower_bound(successes: u64, trials: u64, z: f64) -> f64 {
    assert!(trials > 0, "wilson bound needs at least one trial");
    assert!(successes <= trials);
    if successes == 0 {
        // Mathematically 0; skip the formula so roundoff can't leak in.
        return 0.0;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let margin = z * libm::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    let lower = (center - margin) / denom;
    lower.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_endpoints() {
        // All failures: bound is 0.  All successes: bound is 1/(1 + z^2/n).
        assert_eq!(wilson_lower_bound(0, 100, WILSON_Z_95), 0.0);
        let all = wilson_lower_bound(200, 200, WILSON_Z_95);
        let expected = 1.0 / (1.0 + WILSON_Z_95 * WILSON_Z_95 / 200.0);
        assert!((all - expected).abs() < 1e-12);
        assert!(all > 0.98 && all < 1.0);
    }

    #[test]
    fn wilson_is_below_empirical_fraction() {
        for &(s, t) in &[(1u64, 30u64), (10, 30), (29, 30), (500, 1000)] {
            let lb = wilson_lower_bound(s, t, WILSON_Z_95);
            assert!(lb < s as f64 / t as f64);
            assert!(lb >= 0.0);
        }
    }

    #[test]
    fn wilson_tightens_with_more_trials() {
        let a = wilson_lower_bound(50, 100, WILSON_Z_95);
        let b = wilson_lower_bound(5000, 10000, WILSON_Z_95);
        assert!(b > a);
        assert!((b - 0.5).abs() < 0.02);
    }
}
