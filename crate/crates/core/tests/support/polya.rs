//! Exact return probabilities of simple random walk on `Z^3`, independent of
//! the simulation code.
//!
//! `u_n` is the probability of being back at the origin after `2n` steps. Its
//! generating function at 1 is `sum u_n = Γ(1/24)Γ(5/24)Γ(7/24)Γ(11/24) √6 / (32 π^3)`
//! (Watson), and `P(return) = 1 - 1 / sum u_n`. The truncated first-return
//! probability follows from the renewal identity `u = δ + f * u`.

#![allow(dead_code)]

use statrs::function::gamma::gamma;

/// `sum_{n>=0} u_n` in closed form.
pub fn expected_visits() -> f64 {
    let pi = std::f64::consts::PI;
    6f64.sqrt() / (32.0 * pi.powi(3))
        * gamma(1.0 / 24.0)
        * gamma(5.0 / 24.0)
        * gamma(7.0 / 24.0)
        * gamma(11.0 / 24.0)
}

/// Infinite-horizon return probability.
pub fn return_probability() -> f64 {
    1.0 - 1.0 / expected_visits()
}

/// `u_0..=u_max` from the three-term recurrence for closed walks,
/// `n^3 a_n = 2(2n-1)(10n^2-10n+3) a_{n-1} - 36(n-1)(2n-1)(2n-3) a_{n-2}`,
/// rescaled by `36^n` so that `u_n = a_n / 36^n`.
pub fn return_series(n_max: usize) -> Vec<f64> {
    let mut u = vec![1.0, 1.0 / 6.0];
    for n in 2..=n_max {
        let nf = n as f64;
        let a = 2.0 * (2.0 * nf - 1.0) * (10.0 * nf * nf - 10.0 * nf + 3.0) / 36.0;
        let b = (nf - 1.0) * (2.0 * nf - 1.0) * (2.0 * nf - 3.0) / 36.0;
        u.push((a * u[n - 1] - b * u[n - 2]) / (nf * nf * nf));
    }
    u.truncate(n_max + 1);
    u
}

/// Exact closed-walk count `a_n = C(2n, n) sum_{i+j+k=n} (n! / (i! j! k!))^2`
/// by direct summation, for small `n`.
pub fn closed_walks_brute(n: u32) -> u128 {
    let binom = |n: u32, k: u32| (0..k).fold(1u128, |r, i| r * (n - i) as u128 / (i + 1) as u128);
    let mut inner = 0u128;
    for i in 0..=n {
        for j in 0..=n - i {
            let m = binom(n, i) * binom(n - i, j);
            inner += m * m;
        }
    }
    binom(2 * n, n) * inner
}

/// `P(first return to the origin within 2 * n_max steps)` via the renewal
/// identity `f_n = u_n - sum_{m=1}^{n-1} f_m u_{n-m}`.
pub fn truncated_return_probability(n_max: usize) -> f64 {
    let u = return_series(n_max);
    let mut f = vec![0.0; n_max + 1];
    let mut total = 0.0;
    for n in 1..=n_max {
        let conv: f64 = (1..n).map(|m| f[m] * u[n - m]).sum();
        f[n] = u[n] - conv;
        total += f[n];
    }
    total
}
