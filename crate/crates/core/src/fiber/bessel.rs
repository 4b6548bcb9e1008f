//! Integer-order Bessel functions J_n and exponentially scaled K_n.
//!
//! Both come from integral representations evaluated with the trapezoidal
//! rule, which converges geometrically for these analytic integrands:
//!
//! J_n(x) = 1/(2π) ∫_0^{2π} cos(nθ − x sin θ) dθ (periodic, so the rule is
//! exact up to aliasing terms of order J_{N−n}(x));
//!
//! e^x K_ν(x) = ∫_0^∞ exp(−x (cosh t − 1)) cosh(ν t) dt.

use std::f64::consts::PI;

/// Bessel function of the first kind, integer order.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    if n < 0 {
        let v = bessel_j(-n, x);
        return if n % 2 == 0 { v } else { -v };
    }
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let nodes = 32 + 2 * (x.abs().ceil() as usize + n as usize);
    let h = 2.0 * PI / nodes as f64;
    let nf = n as f64;
    let sum: f64 = (0..nodes)
        .map(|i| {
            let theta = i as f64 * h;
            (nf * theta - x * theta.sin()).cos()
        })
        .sum();
    sum / nodes as f64
}

/// e^x · K_ν(x) for x > 0.
pub fn bessel_k_scaled(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0, "K_nu requires x > 0, got {x}");
    // The integrand peak has width ~ 1/√x; keep several nodes across it.
    let step = 0.05f64.min(0.25 / x.sqrt());
    let mut sum = 0.5; // t = 0 term
    let mut t = step;
    loop {
        let term = (-x * ((t).cosh() - 1.0)).exp() * (nu * t).cosh();
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        t += step;
    }
    sum * step
}

/// K_ν(x), underflows to zero for large x.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    bessel_k_scaled(nu, x) * (-x).exp()
}

/// J_n'(x) = (J_{n−1} − J_{n+1}) / 2.
pub fn bessel_j_prime(n: i32, x: f64) -> f64 {
    0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))
}
