//! Heat kernel, projector kernels, distance and volume comparable on the
//! unit ball `𝔹^d` with weight `w_μ(x) = (1-‖x‖²)^{μ-1/2}`.
//!
//! Both the projector kernels and the heat kernel are reduced to one
//! dimensional integrals of Gegenbauer-type kernels evaluated at
//! `z(u) = ⟨x,y⟩ + u sqrt(1-‖x‖²) sqrt(1-‖y‖²)` against `(1-u²)^{μ-1}`.
//! For `μ = 0` that integral collapses to the average of `u = ±1`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::heat1d::{
    certify_cutoff, check_radius, check_time_floor, gegenbauer_coefficients, gegenbauer_linear_sum,
    TruncationPlan,
};
use crate::jacobi::{gauss_jacobi_rule, ln_gegenbauer_kernel_factor, QuadratureRule};

/// Slack tolerated on `‖x‖ ≤ 1`.
pub const POINT_SLACK: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BallParams")]
pub struct BallWeight {
    mu: f64,
    d: usize,
    lambda: f64,
    total_mass: f64,
}

/// Deserialized form: only the free parameters, revalidated on load.
#[derive(Deserialize)]
struct BallParams {
    mu: f64,
    d: usize,
}

impl TryFrom<BallParams> for BallWeight {
    type Error = Error;

    fn try_from(p: BallParams) -> Result<Self> {
        BallWeight::new(p.mu, p.d)
    }
}

impl BallWeight {
    pub fn new(mu: f64, d: usize) -> Result<Self> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ball weight needs μ ≥ 0, got {mu}"
            )));
        }
        if d == 0 {
            return Err(Error::InvalidParameter(
                "ball dimension must be at least 1".into(),
            ));
        }
        Ok(Self {
            mu,
            d,
            lambda: mu + (d as f64 - 1.0) / 2.0,
            total_mass: ball_total_measure(mu, d),
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `λ = μ + (d-1)/2`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `ν_μ(𝔹^d)`.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// `μ = 0` selects the two-point formulas.
    pub fn is_zero_mu(&self) -> bool {
        self.mu == 0.0
    }

    /// Degree-n eigenvalue magnitude `n(n + 2λ) = n(n + d + 2μ - 1)`.
    pub fn eigen_rate(&self, n: usize) -> f64 {
        let nf = n as f64;
        nf * (nf + 2.0 * self.lambda)
    }

    pub fn density(&self, x: &BallPoint) -> f64 {
        (1.0 - x.norm_sq()).max(0.0).powf(self.mu - 0.5)
    }

    fn check_point(&self, x: &BallPoint) -> Result<()> {
        if x.dim() != self.d {
            return Err(Error::Domain(format!(
                "point has dimension {}, weight has {}",
                x.dim(),
                self.d
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallPoint {
    coords: Vec<f64>,
}

impl BallPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("ball point needs finite coordinates".into()));
        }
        let n2: f64 = coords.iter().map(|c| c * c).sum();
        if n2.sqrt() > 1.0 + POINT_SLACK {
            return Err(Error::Domain(format!(
                "point {coords:?} lies outside the unit ball"
            )));
        }
        Ok(Self { coords })
    }

    pub fn origin(d: usize) -> Self {
        Self {
            coords: vec![0.0; d],
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    /// `sqrt(1 - ‖x‖²)`, zero on the sphere.
    pub fn boundary_factor(&self) -> f64 {
        (1.0 - self.norm_sq()).max(0.0).sqrt()
    }

    pub fn dot(&self, other: &BallPoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// `d_B(x, y) = arccos(⟨x,y⟩ + sqrt(1-‖x‖²) sqrt(1-‖y‖²))`.
///
/// Evaluated as the chord form `2 asin(‖x̃ - ỹ‖ / 2)` with `x̃ = (x, sqrt(1-‖x‖²))`
/// on the upper hemisphere, which is exact at `x = y` and keeps full relative
/// accuracy for nearby points.
pub fn dist_ball(x: &BallPoint, y: &BallPoint) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::Domain("points of different dimension".into()));
    }
    let lifted = x.boundary_factor() - y.boundary_factor();
    let chord_sq: f64 = x
        .coords
        .iter()
        .zip(&y.coords)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        + lifted * lifted;
    Ok(2.0 * (0.5 * chord_sq.sqrt()).min(1.0).asin())
}

/// `r^d (1 - ‖x‖² + r²)^μ`.
pub fn volume_ball_hat(w: &BallWeight, x: &BallPoint, r: f64) -> Result<f64> {
    w.check_point(x)?;
    check_radius(r)?;
    Ok(r.powi(w.d as i32) * (1.0 - x.norm_sq() + r * r).max(0.0).powf(w.mu))
}

/// `ν_μ(𝔹^d) = π^{d/2} Γ(μ+1/2) / Γ(μ+(d+1)/2)`.
pub fn ball_total_measure(mu: f64, d: usize) -> f64 {
    let df = d as f64;
    (0.5 * df * std::f64::consts::PI.ln() + ln_gamma(mu + 0.5) - ln_gamma(mu + (df + 1.0) / 2.0))
        .exp()
}

/// Probability rule for `(1-u²)^{μ-1}` on `[-1,1]`, or `{±1}` with weight ½ at `μ = 0`.
fn u_rule(w: &BallWeight, nodes: usize) -> Result<QuadratureRule> {
    if w.is_zero_mu() {
        QuadratureRule::from_parts(vec![-1.0, 1.0], vec![0.5, 0.5], 1)
    } else {
        Ok(gauss_jacobi_rule(w.mu - 1.0, w.mu - 1.0, nodes)?.normalized())
    }
}

/// Nodes needed to integrate a degree-`n` polynomial in `u` exactly, with margin.
fn nodes_for_degree(n: usize) -> usize {
    n.div_ceil(2) + 2
}

#[inline]
fn z_values<'a>(
    x: &BallPoint,
    y: &BallPoint,
    rule: &'a QuadratureRule,
) -> impl Iterator<Item = (f64, f64)> + 'a {
    let ip = x.dot(y);
    let h = x.boundary_factor() * y.boundary_factor();
    rule.iter()
        .map(move |(u, wu)| ((ip + u * h).clamp(-1.0, 1.0), wu))
}

/// Kernel of the orthogonal projector onto `𝒱_n(w_μ)`.
///
/// `c_λ` is fixed by requiring the `n = 0` kernel to be `1/ν_μ(𝔹^d)`.
pub fn projector_ball(w: &BallWeight, n: usize, x: &BallPoint, y: &BallPoint) -> Result<f64> {
    w.check_point(x)?;
    w.check_point(y)?;
    let rule = u_rule(w, nodes_for_degree(n))?;
    let factor = ln_gegenbauer_kernel_factor(w.lambda, n).exp();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = factor;
    let avg: f64 = z_values(x, y, &rule)
        .map(|(z, wu)| wu * gegenbauer_linear_sum(w.lambda, &coeffs, z))
        .sum();
    Ok(avg / w.total_mass)
}

/// Cutoff for the ball heat kernel at time `t` with absolute tail below `tol`.
pub fn choose_truncation(w: &BallWeight, t: f64, tol: f64) -> Result<TruncationPlan> {
    check_time_floor(t, tol)?;
    let ln_mass = w.total_mass.ln();
    certify_cutoff(
        |n| -t * w.eigen_rate(n) + ln_gegenbauer_kernel_factor(w.lambda, n) - ln_mass,
        t,
        tol,
    )
}

/// The ball heat kernel at a fixed time, in its one-dimensional integral form.
#[derive(Debug, Clone)]
pub struct BallHeatKernel {
    weight: BallWeight,
    coeffs: Vec<f64>,
    rule: QuadratureRule,
}

impl BallHeatKernel {
    pub fn new(w: &BallWeight, t: f64, plan: &TruncationPlan) -> Result<Self> {
        plan.check_time(t)?;
        Ok(Self {
            weight: *w,
            coeffs: gegenbauer_coefficients(w.lambda, t, plan.cutoff()),
            rule: u_rule(w, nodes_for_degree(plan.cutoff()))?,
        })
    }

    pub fn eval(&self, x: &BallPoint, y: &BallPoint) -> Result<f64> {
        self.weight.check_point(x)?;
        self.weight.check_point(y)?;
        let lambda = self.weight.lambda;
        let avg: f64 = z_values(x, y, &self.rule)
            .map(|(z, wu)| wu * gegenbauer_linear_sum(lambda, &self.coeffs, z))
            .sum();
        Ok(avg / self.weight.total_mass)
    }
}

/// `e^{tD_μ}(x,y) = c_λ ∫ e^{tL_λ}(1, z(u)) (1-u²)^{μ-1} du` (two-point form at `μ = 0`).
pub fn heat_kernel_ball(
    w: &BallWeight,
    t: f64,
    x: &BallPoint,
    y: &BallPoint,
    plan: &TruncationPlan,
) -> Result<f64> {
    BallHeatKernel::new(w, t, plan)?.eval(x, y)
}

/// `Σ_{n≤N} e^{-tn(n+2λ)} P_n(w_μ; x, y)`, the projector-series route.
pub fn heat_kernel_ball_series(
    w: &BallWeight,
    t: f64,
    x: &BallPoint,
    y: &BallPoint,
    plan: &TruncationPlan,
) -> Result<f64> {
    plan.check_time(t)?;
    let mut sum = 0.0;
    for n in 0..=plan.cutoff() {
        sum += (-t * w.eigen_rate(n)).exp() * projector_ball(w, n, x, y)?;
    }
    Ok(sum)
}
