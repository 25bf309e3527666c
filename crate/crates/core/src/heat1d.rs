//! The Jacobi heat kernel on `[-1, 1]`: spectral series with a certified
//! cutoff, the arccos distance, and the volume comparable of its metric balls.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit_interval, Error, Result};
use crate::jacobi::{
    ln_gegenbauer_kernel_factor, ln_jacobi_at_one, ln_jacobi_norm_sq, recurrence_coefficients,
    GegenbauerRatios, IntervalWeight,
};

/// Smallest time accepted by default; the series length grows like `t^{-1/2}`.
pub const DEFAULT_T_MIN: f64 = 1e-4;

/// Largest admissible series cutoff.
pub const N_MAX: usize = 5000;

/// Series cutoff together with the absolute tail bound it certifies.
///
/// The bound holds for every time `t >= t_min`, since each tail term is
/// decreasing in `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPlan {
    cutoff: usize,
    tail_tol: f64,
    t_min: f64,
}

impl TruncationPlan {
    pub fn new(cutoff: usize, tail_tol: f64, t_min: f64) -> Result<Self> {
        if cutoff < 1 || !(tail_tol > 0.0) || !(t_min > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "invalid truncation plan: cutoff {cutoff}, tail_tol {tail_tol}, t_min {t_min}"
            )));
        }
        Ok(Self {
            cutoff,
            tail_tol,
            t_min,
        })
    }

    /// Highest degree kept in the partial sum.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    /// The same plan with the cutoff doubled, used for the N-vs-2N confirmation.
    pub fn doubled(&self) -> Self {
        Self {
            cutoff: 2 * self.cutoff,
            ..*self
        }
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= self.t_min) || !t.is_finite() {
            return Err(Error::Truncation(format!(
                "t = {t} is below the plan's certified minimum {}",
                self.t_min
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_time_floor(t: f64, tol: f64) -> Result<()> {
    if !(t >= DEFAULT_T_MIN) || !t.is_finite() {
        return Err(Error::Truncation(format!(
            "t = {t} is below the admissible minimum {DEFAULT_T_MIN}"
        )));
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    Ok(())
}

/// Finds the smallest `N` with `Σ_{n>N} exp(ln_term(n)) < tol`.
///
/// `ln_term` must eventually decrease super-geometrically, which holds for
/// every series here because of the `exp(-t n^2)` factor.
pub(crate) fn certify_cutoff<F: Fn(usize) -> f64>(
    ln_term: F,
    t: f64,
    tol: f64,
) -> Result<TruncationPlan> {
    let ln_tol = tol.ln();
    let floor = ln_tol - 60.0;
    let hard_stop = N_MAX + 20_000;
    let mut terms = Vec::with_capacity(256);
    let mut n = 0;
    loop {
        let lt = ln_term(n);
        let decreasing = n > 0 && lt < terms[n - 1];
        terms.push(lt);
        if (decreasing && lt < floor) || n >= hard_stop {
            break;
        }
        n += 1;
    }
    let last = terms.len() - 1;
    if last >= hard_stop {
        return Err(Error::Truncation(format!(
            "series tail did not decay by n = {hard_stop}"
        )));
    }
    // geometric bound for everything past the last computed term
    let ratio = (terms[last] - terms[last - 1]).exp();
    let mut tail = terms[last].exp() * ratio / (1.0 - ratio);
    let mut cutoff = last;
    for k in (1..=last).rev() {
        // tail currently bounds Σ_{n>k}
        if tail >= tol {
            break;
        }
        cutoff = k;
        tail += terms[k].exp();
        if tail >= tol {
            break;
        }
        cutoff = k - 1;
    }
    let cutoff = cutoff.max(1);
    if cutoff > N_MAX {
        return Err(Error::Truncation(format!(
            "cutoff {cutoff} exceeds N_MAX = {N_MAX} for t = {t}, tol = {tol}; relax tol or raise t"
        )));
    }
    TruncationPlan::new(cutoff, tol, t)
}

/// `ρ(x, y) = |arccos x - arccos y|`.
pub fn rho(x: f64, y: f64) -> Result<f64> {
    let x = check_unit_interval("x", x)?;
    let y = check_unit_interval("y", y)?;
    Ok((x.acos() - y.acos()).abs())
}

/// `r (1-x+r^2)^{α+1/2} (1+x+r^2)^{β+1/2}`, comparable to the measure of the
/// metric ball of radius `r` about `x`.
pub fn volume_interval_hat(w: IntervalWeight, x: f64, r: f64) -> Result<f64> {
    let x = check_unit_interval("x", x)?;
    check_radius(r)?;
    let r2 = r * r;
    Ok(r * (1.0 - x + r2).powf(w.alpha() + 0.5) * (1.0 + x + r2).powf(w.beta() + 0.5))
}

pub(crate) fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= std::f64::consts::PI) {
        return Err(Error::Domain(format!("radius must lie in (0, π], got {r}")));
    }
    Ok(())
}

/// `ln sup_{[-1,1]} |p_n|` majorant for the orthonormal Jacobi polynomial.
///
/// Exact (the larger endpoint value) when `max(α, β) >= -1/2`; otherwise a
/// polynomial-growth majorant `(n+1) max(|p_n(±1)|, p_0, 1)`.
fn ln_sup_orthonormal(w: IntervalWeight, n: usize) -> f64 {
    let half_ln_h = 0.5 * ln_jacobi_norm_sq(w, n);
    let at_plus = ln_jacobi_at_one(w.alpha(), n) - half_ln_h;
    let at_minus = ln_jacobi_at_one(w.beta(), n) - half_ln_h;
    let endpoint = at_plus.max(at_minus);
    if w.alpha().max(w.beta()) >= -0.5 {
        endpoint
    } else {
        let p0 = -0.5 * ln_jacobi_norm_sq(w, 0);
        ((n + 1) as f64).ln() + endpoint.max(p0).max(0.0)
    }
}

/// Cutoff for the interval kernel at time `t` with absolute tail below `tol`.
pub fn choose_truncation(w: IntervalWeight, t: f64, tol: f64) -> Result<TruncationPlan> {
    check_time_floor(t, tol)?;
    let lambda = w.lambda();
    certify_cutoff(
        |n| {
            let nf = n as f64;
            -t * nf * (nf + lambda) + 2.0 * ln_sup_orthonormal(w, n)
        },
        t,
        tol,
    )
}

/// Cutoff for the Gegenbauer-form kernel `Σ e^{-tn(n+2λ)} f_n r_n(u) r_n(v)`.
pub fn choose_truncation_gegenbauer(lambda: f64, t: f64, tol: f64) -> Result<TruncationPlan> {
    check_time_floor(t, tol)?;
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!(
            "Gegenbauer index must be nonnegative, got {lambda}"
        )));
    }
    certify_cutoff(
        |n| {
            let nf = n as f64;
            -t * nf * (nf + 2.0 * lambda) + ln_gegenbauer_kernel_factor(lambda, n)
        },
        t,
        tol,
    )
}

/// Precomputed recurrence for orthonormal Jacobi polynomials up to a fixed degree.
#[derive(Debug, Clone)]
pub(crate) struct JacobiRecurrence {
    a: Vec<f64>,
    b: Vec<f64>,
    p0: f64,
}

impl JacobiRecurrence {
    pub(crate) fn new(w: IntervalWeight, degree: usize) -> Self {
        let (a, b) = (0..=degree + 1)
            .map(|k| recurrence_coefficients(w.alpha(), w.beta(), k))
            .unzip();
        Self {
            a,
            b,
            p0: (-0.5 * ln_jacobi_norm_sq(w, 0)).exp(),
        }
    }

    /// `Σ_{n<=N} coeffs[n] p_n(x) p_n(y)` in fixed order.
    #[inline]
    pub(crate) fn bilinear_sum(&self, coeffs: &[f64], x: f64, y: f64) -> f64 {
        let (mut px_prev, mut px) = (0.0, self.p0);
        let (mut py_prev, mut py) = (0.0, self.p0);
        let mut sum = 0.0;
        for (n, &c) in coeffs.iter().enumerate() {
            sum += c * (px * py);
            let inv = 1.0 / self.b[n + 1];
            let nx = ((x - self.a[n]) * px - self.b[n] * px_prev) * inv;
            let ny = ((y - self.a[n]) * py - self.b[n] * py_prev) * inv;
            px_prev = px;
            px = nx;
            py_prev = py;
            py = ny;
        }
        sum
    }

    /// `Σ_{n<=N} coeffs[n] p_n(x)`.
    #[inline]
    pub(crate) fn linear_sum(&self, coeffs: &[f64], x: f64) -> f64 {
        let (mut prev, mut cur) = (0.0, self.p0);
        let mut sum = 0.0;
        for (n, &c) in coeffs.iter().enumerate() {
            sum += c * cur;
            let next = ((x - self.a[n]) * cur - self.b[n] * prev) / self.b[n + 1];
            prev = cur;
            cur = next;
        }
        sum
    }
}

/// The interval kernel at a fixed time, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct IntervalHeatKernel {
    recurrence: JacobiRecurrence,
    decay: Vec<f64>,
}

impl IntervalHeatKernel {
    pub fn new(w: IntervalWeight, t: f64, plan: &TruncationPlan) -> Result<Self> {
        plan.check_time(t)?;
        let lambda = w.lambda();
        let decay = (0..=plan.cutoff())
            .map(|n| {
                let nf = n as f64;
                (-t * nf * (nf + lambda)).exp()
            })
            .collect();
        Ok(Self {
            recurrence: JacobiRecurrence::new(w, plan.cutoff()),
            decay,
        })
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let x = check_unit_interval("x", x)?;
        let y = check_unit_interval("y", y)?;
        Ok(self.recurrence.bilinear_sum(&self.decay, x, y))
    }
}

/// `Σ_{n<=N} e^{-tn(n+λ)} p_n(x) p_n(y)` with orthonormal Jacobi `p_n`.
pub fn heat_kernel_interval(
    w: IntervalWeight,
    t: f64,
    x: f64,
    y: f64,
    plan: &TruncationPlan,
) -> Result<f64> {
    IntervalHeatKernel::new(w, t, plan)?.eval(x, y)
}

/// The Jacobi kernel with one argument pinned at `1`:
/// `s ↦ Σ_{n<=N} e^{-tn(n+λ)} p_n(1) p_n(s)`.
#[derive(Debug, Clone)]
pub(crate) struct JacobiKernelAtOne {
    recurrence: JacobiRecurrence,
    coeffs: Vec<f64>,
}

impl JacobiKernelAtOne {
    pub(crate) fn new(w: IntervalWeight, t: f64, cutoff: usize) -> Self {
        let lambda = w.lambda();
        let coeffs = (0..=cutoff)
            .map(|n| {
                let nf = n as f64;
                let ln_p1 = ln_jacobi_at_one(w.alpha(), n) - 0.5 * ln_jacobi_norm_sq(w, n);
                (-t * nf * (nf + lambda) + ln_p1).exp()
            })
            .collect();
        Self {
            recurrence: JacobiRecurrence::new(w, cutoff),
            coeffs,
        }
    }

    /// Single spectral component `p_n(1) p_n(s)`, without the time factor.
    pub(crate) fn component(w: IntervalWeight, n: usize) -> Self {
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = (ln_jacobi_at_one(w.alpha(), n) - 0.5 * ln_jacobi_norm_sq(w, n)).exp();
        Self {
            recurrence: JacobiRecurrence::new(w, n),
            coeffs,
        }
    }

    #[inline]
    pub(crate) fn eval(&self, s: f64) -> f64 {
        self.recurrence.linear_sum(&self.coeffs, s)
    }
}

/// Time factors `e^{-tn(n+2λ)} f_n` of the Gegenbauer-form kernel.
pub(crate) fn gegenbauer_coefficients(lambda: f64, t: f64, cutoff: usize) -> Vec<f64> {
    (0..=cutoff)
        .map(|n| {
            let nf = n as f64;
            (-t * nf * (nf + 2.0 * lambda) + ln_gegenbauer_kernel_factor(lambda, n)).exp()
        })
        .collect()
}

/// `Σ coeffs[n] C_n^λ(z)/C_n^λ(1)`.
#[inline]
pub(crate) fn gegenbauer_linear_sum(lambda: f64, coeffs: &[f64], z: f64) -> f64 {
    coeffs
        .iter()
        .zip(GegenbauerRatios::new(lambda, z))
        .map(|(c, r)| c * r)
        .sum()
}

/// `Σ_{n<=N} e^{-tn(n+2λ)} ((n+λ)/λ) C_n^λ(u) C_n^λ(v) / C_n^λ(1)`.
///
/// This is the Jacobi kernel for `α = β = λ - 1/2` taken against the
/// probability-normalized weight; it equals `gegenbauer_weight_mass(λ)` times
/// [`heat_kernel_interval`] at those exponents. Accepts `λ = 0` (the
/// Chebyshev limit).
pub fn heat_kernel_gegenbauer(
    lambda: f64,
    t: f64,
    u: f64,
    v: f64,
    plan: &TruncationPlan,
) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!(
            "Gegenbauer index must be nonnegative, got {lambda}"
        )));
    }
    plan.check_time(t)?;
    let u = check_unit_interval("u", u)?;
    let v = check_unit_interval("v", v)?;
    let coeffs = gegenbauer_coefficients(lambda, t, plan.cutoff());
    Ok(coeffs
        .iter()
        .zip(GegenbauerRatios::new(lambda, u).zip(GegenbauerRatios::new(lambda, v)))
        .map(|(c, (ru, rv))| c * (ru * rv))
        .sum())
}
