//! Jacobi and Gegenbauer polynomials, their norms, and Gauss-Jacobi rules.
//!
//! Classical normalization throughout: `P_n^{(α,β)}(1) = binom(n+α, n)` and
//! `C_n^λ(1) = binom(n+2λ-1, n)`. Orthonormal values are taken with respect
//! to the unnormalized weight `(1-x)^α (1+x)^β` on `[-1, 1]`.

pub mod quadrature;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_unit_interval, Error, Result};

pub use quadrature::{gauss_jacobi_rule, QuadratureRule};

/// Jacobi weight `(1-x)^alpha (1+x)^beta` on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntervalParams")]
pub struct IntervalWeight {
    alpha: f64,
    beta: f64,
}

#[derive(Deserialize)]
struct IntervalParams {
    alpha: f64,
    beta: f64,
}

impl TryFrom<IntervalParams> for IntervalWeight {
    type Error = Error;

    fn try_from(p: IntervalParams) -> Result<Self> {
        IntervalWeight::new(p.alpha, p.beta)
    }
}

impl IntervalWeight {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > -1.0 && beta > -1.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Jacobi exponents must exceed -1, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// Legendre weight.
    pub fn lebesgue() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `λ = α + β + 1`; the degree-n eigenvalue of the Jacobi operator is `-n(n+λ)`.
    pub fn lambda(&self) -> f64 {
        self.alpha + self.beta + 1.0
    }

    /// `∫ (1-x)^α (1+x)^β dx`.
    pub fn total_mass(&self) -> f64 {
        jacobi_norm_sq(*self, 0)
    }

    /// Density of the weight at `x`.
    pub fn density(&self, x: f64) -> f64 {
        (1.0 - x).powf(self.alpha) * (1.0 + x).powf(self.beta)
    }
}

/// Coefficients of the orthonormal three-term recurrence
/// `x p_n = b_{n+1} p_{n+1} + a_n p_n + b_n p_{n-1}`.
///
/// Returns `(a_n, b_n)`; `b_0` is reported as zero.
pub fn recurrence_coefficients(alpha: f64, beta: f64, n: usize) -> (f64, f64) {
    let s = alpha + beta;
    let nf = n as f64;
    let a = if n == 0 {
        (beta - alpha) / (s + 2.0)
    } else {
        (beta * beta - alpha * alpha) / ((2.0 * nf + s) * (2.0 * nf + s + 2.0))
    };
    let b = match n {
        0 => 0.0,
        // (n + s) / (2n + s - 1) cancels to one at n = 1; this avoids 0/0 when s = -1.
        1 => (4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + s).powi(2) * (3.0 + s))).sqrt(),
        _ => {
            let num = 4.0 * nf * (nf + alpha) * (nf + beta) * (nf + s);
            let den = (2.0 * nf + s).powi(2) * (2.0 * nf + s + 1.0) * (2.0 * nf + s - 1.0);
            (num / den).sqrt()
        }
    };
    (a, b)
}

/// Classical Jacobi polynomial `P_n^{(α,β)}(x)` by the three-term recurrence.
pub fn eval_jacobi(w: IntervalWeight, n: usize, x: f64) -> Result<f64> {
    let x = check_unit_interval("x", x)?;
    Ok(jacobi_classical_unchecked(w.alpha, w.beta, n, x))
}

pub(crate) fn jacobi_classical_unchecked(alpha: f64, beta: f64, n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let s = alpha + beta;
    let mut prev = 1.0;
    let mut cur = (alpha + 1.0) + 0.5 * (s + 2.0) * (x - 1.0);
    for k in 2..=n {
        let kf = k as f64;
        let c = 2.0 * kf + s;
        let lead = 2.0 * kf * (kf + s) * (c - 2.0);
        let lin = (c - 1.0) * (c * (c - 2.0) * x + alpha * alpha - beta * beta);
        let back = 2.0 * (kf + alpha - 1.0) * (kf + beta - 1.0) * c;
        let next = (lin * cur - back * prev) / lead;
        prev = cur;
        cur = next;
    }
    cur
}

/// `ln h_n` where `h_n = ∫ P_n^{(α,β)}(x)^2 (1-x)^α (1+x)^β dx`.
pub fn ln_jacobi_norm_sq(w: IntervalWeight, n: usize) -> f64 {
    let (a, b) = (w.alpha, w.beta);
    let ln2 = std::f64::consts::LN_2;
    if n == 0 {
        return (a + b + 1.0) * ln2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(a + b + 2.0);
    }
    let nf = n as f64;
    (a + b + 1.0) * ln2 - (2.0 * nf + a + b + 1.0).ln()
        + ln_gamma(nf + a + 1.0)
        + ln_gamma(nf + b + 1.0)
        - ln_gamma(nf + a + b + 1.0)
        - ln_gamma(nf + 1.0)
}

/// Squared norm `h_n` of the classical Jacobi polynomial, evaluated in log space.
pub fn jacobi_norm_sq(w: IntervalWeight, n: usize) -> f64 {
    ln_jacobi_norm_sq(w, n).exp()
}

/// Orthonormal Jacobi polynomial `p_n = P_n / sqrt(h_n)`.
pub fn eval_jacobi_orthonormal(w: IntervalWeight, n: usize, x: f64) -> Result<f64> {
    let x = check_unit_interval("x", x)?;
    let mut seq = OrthonormalJacobi::new(w, x);
    let mut value = seq.next().unwrap_or(0.0);
    for _ in 0..n {
        value = seq.next().unwrap_or(0.0);
    }
    Ok(value)
}

/// `ln |P_n^{(α,β)}(1)| = ln binom(n+α, n)`.
pub fn ln_jacobi_at_one(alpha: f64, n: usize) -> f64 {
    let nf = n as f64;
    ln_gamma(nf + alpha + 1.0) - ln_gamma(alpha + 1.0) - ln_gamma(nf + 1.0)
}

/// Iterator over `p_0(x), p_1(x), ...` using the orthonormal recurrence.
#[derive(Debug, Clone)]
pub struct OrthonormalJacobi {
    alpha: f64,
    beta: f64,
    x: f64,
    n: usize,
    prev: f64,
    cur: f64,
}

impl OrthonormalJacobi {
    pub fn new(w: IntervalWeight, x: f64) -> Self {
        let p0 = (-0.5 * ln_jacobi_norm_sq(w, 0)).exp();
        Self {
            alpha: w.alpha,
            beta: w.beta,
            x,
            n: 0,
            prev: 0.0,
            cur: p0,
        }
    }
}

impl Iterator for OrthonormalJacobi {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.cur;
        let (a, b) = recurrence_coefficients(self.alpha, self.beta, self.n);
        let (_, b_next) = recurrence_coefficients(self.alpha, self.beta, self.n + 1);
        let next = ((self.x - a) * self.cur - b * self.prev) / b_next;
        self.prev = self.cur;
        self.cur = next;
        self.n += 1;
        Some(out)
    }
}

/// Classical Gegenbauer polynomial `C_n^λ(u)` with generating function
/// `(1 - 2uz + z^2)^{-λ}`.
pub fn eval_gegenbauer(lambda: f64, n: usize, u: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "Gegenbauer index must be positive, got {lambda}"
        )));
    }
    let u = check_unit_interval("u", u)?;
    if n == 0 {
        return Ok(1.0);
    }
    let mut prev = 1.0;
    let mut cur = 2.0 * lambda * u;
    for k in 2..=n {
        let kf = k as f64;
        let next = (2.0 * (kf + lambda - 1.0) * u * cur - (kf + 2.0 * lambda - 2.0) * prev) / kf;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `C_n^λ(1) = Γ(n+2λ) / (Γ(2λ) n!)`.
pub fn gegenbauer_at_one(lambda: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let nf = n as f64;
    (ln_gamma(nf + 2.0 * lambda) - ln_gamma(2.0 * lambda) - ln_gamma(nf + 1.0)).exp()
}

/// Iterator over the normalized ratios `C_n^λ(u) / C_n^λ(1)`.
///
/// Bounded by one in absolute value for `λ ≥ 0`; at `λ = 0` it yields the
/// Chebyshev polynomials `T_n(u)`, the limit of the ratio.
#[derive(Debug, Clone)]
pub struct GegenbauerRatios {
    lambda: f64,
    u: f64,
    n: usize,
    prev: f64,
    cur: f64,
}

impl GegenbauerRatios {
    pub fn new(lambda: f64, u: f64) -> Self {
        Self {
            lambda,
            u,
            n: 0,
            prev: 0.0,
            cur: 1.0,
        }
    }
}

impl Iterator for GegenbauerRatios {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.cur;
        let k = (self.n + 1) as f64;
        let next = if self.n == 0 {
            self.u
        } else {
            (2.0 * (k + self.lambda - 1.0) * self.u * self.cur - (k - 1.0) * self.prev)
                / (k + 2.0 * self.lambda - 1.0)
        };
        self.prev = self.cur;
        self.cur = next;
        self.n += 1;
        Some(out)
    }
}

/// `ln f_n` with `f_n = ((n+λ)/λ) C_n^λ(1)`, extended continuously to `λ = 0`
/// (where `f_0 = 1` and `f_n = 2`).
pub fn ln_gegenbauer_kernel_factor(lambda: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    (2.0 * (nf + lambda)).ln() + ln_gamma(nf + 2.0 * lambda)
        - ln_gamma(2.0 * lambda + 1.0)
        - ln_gamma(nf + 1.0)
}

/// `∫ (1-u^2)^{λ-1/2} du = sqrt(π) Γ(λ+1/2) / Γ(λ+1)`.
pub fn gegenbauer_weight_mass(lambda: f64) -> f64 {
    (0.5 * std::f64::consts::PI.ln() + ln_gamma(lambda + 0.5) - ln_gamma(lambda + 1.0)).exp()
}

/// Both sides of `∫ |C_n^λ|^2 w_λ = (λ/(n+λ)) C_n^λ(1)`.
///
/// The identity holds with `w_λ(u) = (1-u^2)^{λ-1/2}` normalized to unit
/// mass, so the left side is the Gauss-Jacobi quadrature of `C_n^λ(u)^2`
/// divided by the total mass of `w_λ`. Returns `(quadrature, closed form)`.
pub fn gegenbauer_norm_identity_check(lambda: f64, n: usize) -> Result<(f64, f64)> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "Gegenbauer index must be positive, got {lambda}"
        )));
    }
    let a = lambda - 0.5;
    let rule = gauss_jacobi_rule(a, a, n + 2)?;
    let mut lhs = 0.0;
    for (&u, &wt) in rule.nodes().iter().zip(rule.weights()) {
        let c = eval_gegenbauer(lambda, n, u)?;
        lhs += wt * c * c;
    }
    lhs /= rule.mass();
    let rhs = lambda / (n as f64 + lambda) * gegenbauer_at_one(lambda, n);
    Ok((lhs, rhs))
}
