pub use statrs::function::erf::erfc;
pub use statrs::function::gamma::{digamma, gamma_lr, ln_gamma};

/// Trigamma ψ'(x) for x > 0.
///
/// Shifts the argument above 12 with ψ'(x) = ψ'(x+1) + 1/x², then applies the
/// asymptotic Bernoulli series.
pub fn trigamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut x = x;
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // 1/x + 1/(2x²) + Σ B_2k / x^(2k+1)
    let series = inv
        + 0.5 * inv2
        + inv * inv2
            * (1.0 / 6.0
                + inv2 * (-1.0 / 30.0 + inv2 * (1.0 / 42.0 + inv2 * (-1.0 / 30.0 + inv2 * (5.0 / 66.0 + inv2 * (-691.0 / 2730.0))))));
    acc + series
}
