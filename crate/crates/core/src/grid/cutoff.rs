//! The fixed cutoff shape `φ`: `1` on `[0, ½]`, `0` on `[1, ∞)`, joined by a
//! cubic smoothstep so that `φ` is C¹ and non-increasing.

/// `φ(t) = 1 − (3u² − 2u³)` with `u = clamp(2t − 1, 0, 1)`.
pub fn phi(t: f64) -> f64 {
    let u = (2.0 * t - 1.0).clamp(0.0, 1.0);
    1.0 - u * u * (3.0 - 2.0 * u)
}

/// `φ′(t)`.
pub fn dphi(t: f64) -> f64 {
    let u = 2.0 * t - 1.0;
    if !(0.0..=1.0).contains(&u) {
        return 0.0;
    }
    -12.0 * u * (1.0 - u)
}

/// `∫_{R²} φ(|x|) dx = 2π ∫_0^1 φ(t) t dt`, by composite Simpson quadrature
/// on the smooth part.
pub fn planar_integral() -> f64 {
    // ∫_0^{1/2} t dt = 1/8; the remainder is a quartic on [1/2, 1].
    let n = 1024;
    let (a, b) = (0.5, 1.0);
    let step = (b - a) / n as f64;
    let g = |t: f64| phi(t) * t;
    let mut s = g(a) + g(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * g(a + step * k as f64);
    }
    2.0 * std::f64::consts::PI * (0.125 + s * step / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape() {
        assert_eq!(phi(0.0), 1.0);
        assert_eq!(phi(0.5), 1.0);
        assert_eq!(phi(1.0), 0.0);
        assert_eq!(phi(3.0), 0.0);
        assert!((phi(0.75) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 0..=1000 {
            let t = k as f64 / 800.0;
            assert!(phi(t) <= prev);
            assert!(dphi(t) <= 0.0);
            prev = phi(t);
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        for k in 1..100 {
            let t = 0.45 + k as f64 * 0.006;
            let fd = (phi(t + 1e-6) - phi(t - 1e-6)) / 2e-6;
            assert!((fd - dphi(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn integral_closed_form() {
        // ∫_0^1 φ(t) t dt = 1/8 + (1/4)∫_0^1 (1 + u − 3u² − u³ + 2u⁴) du = 0.2875
        let exact = 2.0 * std::f64::consts::PI * 0.2875;
        assert!((planar_integral() - exact).abs() < 1e-12);
    }
}
