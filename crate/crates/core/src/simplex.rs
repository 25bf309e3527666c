//! Heat kernel, projector kernels, distance and volume comparable on the
//! simplex `𝕋^d` with weight `w_κ(x) = Π x_i^{κ_i-1/2} (1-|x|)^{κ_{d+1}-1/2}`.
//!
//! Both kernels are `(d+1)`-fold integrals over `[-1,1]^{d+1}` of a Jacobi
//! kernel with exponents `(λ_κ-1/2, -1/2)` evaluated at `2z(u)² - 1`, where
//! `z(u) = Σ u_i sqrt(x_i y_i)` and `x_{d+1} = 1 - |x|`. Each axis carries the
//! weight `(1-u_i²)^{κ_i-1}`; an axis with `κ_i = 0` is the average of `u_i = ±1`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::heat1d::{
    certify_cutoff, check_radius, check_time_floor, JacobiKernelAtOne, TruncationPlan,
};
use crate::jacobi::{
    gauss_jacobi_rule, ln_jacobi_at_one, ln_jacobi_norm_sq, IntervalWeight, QuadratureRule,
};

/// Slack tolerated on the simplex constraints.
pub const POINT_SLACK: f64 = 1e-14;

/// Default cap on tensor-quadrature evaluations per kernel value.
pub const DEFAULT_NODE_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SimplexParams")]
pub struct SimplexWeight {
    kappa: Vec<f64>,
    d: usize,
    lambda_kappa: f64,
    total_mass: f64,
    zero_mask: Vec<bool>,
}

#[derive(Deserialize)]
struct SimplexParams {
    kappa: Vec<f64>,
    #[serde(default)]
    d: Option<usize>,
}

impl TryFrom<SimplexParams> for SimplexWeight {
    type Error = Error;

    fn try_from(p: SimplexParams) -> Result<Self> {
        let w = SimplexWeight::new(p.kappa)?;
        match p.d {
            Some(d) if d != w.dim() => Err(Error::InvalidParameter(format!(
                "d = {d} does not match {} exponents",
                w.kappa.len()
            ))),
            _ => Ok(w),
        }
    }
}

impl SimplexWeight {
    /// `kappa` holds `κ_1, ..., κ_{d+1}`; the dimension is `kappa.len() - 1`.
    pub fn new(kappa: Vec<f64>) -> Result<Self> {
        if kappa.len() < 2 {
            return Err(Error::InvalidParameter(
                "simplex weight needs d + 1 ≥ 2 exponents".into(),
            ));
        }
        if kappa.iter().any(|k| !(*k >= 0.0) || !k.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "simplex exponents must be ≥ 0, got {kappa:?}"
            )));
        }
        let d = kappa.len() - 1;
        let sum: f64 = kappa.iter().sum();
        Ok(Self {
            lambda_kappa: sum + (d as f64 - 1.0) / 2.0,
            total_mass: simplex_total_measure(&kappa),
            zero_mask: kappa.iter().map(|&k| k == 0.0).collect(),
            kappa,
            d,
        })
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `λ_κ = |κ| + (d-1)/2`.
    pub fn lambda_kappa(&self) -> f64 {
        self.lambda_kappa
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn zero_mask(&self) -> &[bool] {
        &self.zero_mask
    }

    /// Degree-n eigenvalue magnitude `n(n + λ_κ)`.
    pub fn eigen_rate(&self, n: usize) -> f64 {
        let nf = n as f64;
        nf * (nf + self.lambda_kappa)
    }

    /// Jacobi weight `(λ_κ - 1/2, -1/2)` of the one-dimensional kernel.
    pub fn jacobi_weight(&self) -> IntervalWeight {
        IntervalWeight::new(self.lambda_kappa - 0.5, -0.5).expect("λ_κ ≥ 0 gives valid exponents")
    }

    pub fn density(&self, x: &SimplexPoint) -> f64 {
        let mut w = x.aug.max(0.0).powf(self.kappa[self.d] - 0.5);
        for (c, k) in x.coords.iter().zip(&self.kappa) {
            w *= c.max(0.0).powf(k - 0.5);
        }
        w
    }

    fn check_point(&self, x: &SimplexPoint) -> Result<()> {
        if x.dim() != self.d {
            return Err(Error::Domain(format!(
                "point has dimension {}, weight has {}",
                x.dim(),
                self.d
            )));
        }
        Ok(())
    }

    /// `c_κ` under the normalized axis rules: the constant projector is `1/ν_κ`.
    fn normalization(&self) -> f64 {
        ln_jacobi_norm_sq(self.jacobi_weight(), 0).exp() / self.total_mass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint {
    coords: Vec<f64>,
    aug: f64,
}

impl SimplexPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.iter().any(|c| !c.is_finite() || *c < -POINT_SLACK) {
            return Err(Error::Domain(format!(
                "simplex point needs nonnegative coordinates, got {coords:?}"
            )));
        }
        let sum: f64 = coords.iter().sum();
        if sum > 1.0 + POINT_SLACK {
            return Err(Error::Domain(format!(
                "coordinates of {coords:?} sum to {sum} > 1"
            )));
        }
        Ok(Self {
            aug: 1.0 - sum,
            coords,
        })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// `x_{d+1} = 1 - |x|`.
    pub fn aug(&self) -> f64 {
        self.aug
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Barycentric coordinates `(x_1, ..., x_d, x_{d+1})`, clipped at zero.
    pub fn barycentric(&self) -> impl Iterator<Item = f64> + '_ {
        self.coords
            .iter()
            .copied()
            .chain(std::iter::once(self.aug))
            .map(|c| c.max(0.0))
    }

    fn root_products(&self, other: &SimplexPoint) -> Vec<f64> {
        self.barycentric()
            .zip(other.barycentric())
            .map(|(a, b)| (a * b).sqrt())
            .collect()
    }
}

/// `d_T(x, y) = arccos(Σ sqrt(x_i y_i) + sqrt(1-|x|) sqrt(1-|y|))`.
///
/// Evaluated as `2 asin(‖sqrt(x) - sqrt(y)‖ / 2)` over barycentric coordinates,
/// the same quantity without cancellation near the diagonal.
pub fn dist_simplex(x: &SimplexPoint, y: &SimplexPoint) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::Domain("points of different dimension".into()));
    }
    let chord_sq: f64 = x
        .barycentric()
        .zip(y.barycentric())
        .map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2))
        .sum();
    Ok(2.0 * (0.5 * chord_sq.sqrt()).min(1.0).asin())
}

/// `r^d (1-|x|+r²)^{κ_{d+1}} Π (x_i + r²)^{κ_i}`.
pub fn volume_simplex_hat(w: &SimplexWeight, x: &SimplexPoint, r: f64) -> Result<f64> {
    w.check_point(x)?;
    check_radius(r)?;
    let r2 = r * r;
    Ok(x.barycentric()
        .zip(&w.kappa)
        .fold(r.powi(w.d as i32), |acc, (c, k)| acc * (c + r2).powf(*k)))
}

/// `ν_κ(𝕋^d) = Π Γ(κ_i+1/2) / Γ(|κ|+(d+1)/2)`.
pub fn simplex_total_measure(kappa: &[f64]) -> f64 {
    let d = kappa.len() as f64 - 1.0;
    let sum: f64 = kappa.iter().sum();
    let num: f64 = kappa.iter().map(|k| ln_gamma(k + 0.5)).sum();
    (num - ln_gamma(sum + (d + 1.0) / 2.0)).exp()
}

/// Probability rules for each axis: Gauss-Jacobi `(κ_i-1, κ_i-1)` with
/// `nodes` points, or `{±1}` when `κ_i = 0`.
fn axis_rules(w: &SimplexWeight, nodes: usize) -> Result<Vec<QuadratureRule>> {
    w.kappa
        .iter()
        .map(|&k| {
            if k == 0.0 {
                QuadratureRule::from_parts(vec![-1.0, 1.0], vec![0.5, 0.5], 1)
            } else {
                Ok(gauss_jacobi_rule(k - 1.0, k - 1.0, nodes)?.normalized())
            }
        })
        .collect()
}

fn tensor_size(rules: &[QuadratureRule]) -> u128 {
    rules.iter().map(|r| r.len() as u128).product()
}

/// `Σ_{u ∈ grid} w(u) f(2 z(u)² - 1)` over the tensor grid, in lexicographic order.
fn tensor_average<F: Fn(f64) -> f64>(rules: &[QuadratureRule], roots: &[f64], f: F) -> f64 {
    // scaled node lists: (u_i * sqrt(x_i y_i), w_i)
    let axes: Vec<Vec<(f64, f64)>> = rules
        .iter()
        .zip(roots)
        .map(|(r, a)| r.iter().map(|(u, w)| (u * a, w)).collect())
        .collect();
    let last = axes.len() - 1;
    let mut idx = vec![0usize; axes.len()];
    let mut total = 0.0;
    loop {
        let mut z = 0.0;
        let mut wt = 1.0;
        for (axis, &i) in axes[..last].iter().zip(&idx) {
            z += axis[i].0;
            wt *= axis[i].1;
        }
        let mut inner = 0.0;
        for &(zu, wu) in &axes[last] {
            let zz = (z + zu).clamp(-1.0, 1.0);
            inner += wu * f(2.0 * zz * zz - 1.0);
        }
        total += wt * inner;
        // odometer over all axes but the last
        let mut k = last;
        loop {
            if k == 0 {
                return total;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Kernel of the orthogonal projector onto `𝒱_n(w_κ)`.
pub fn projector_simplex(
    w: &SimplexWeight,
    n: usize,
    x: &SimplexPoint,
    y: &SimplexPoint,
) -> Result<f64> {
    w.check_point(x)?;
    w.check_point(y)?;
    let rules = axis_rules(w, n + 2)?;
    let component = JacobiKernelAtOne::component(w.jacobi_weight(), n);
    let avg = tensor_average(&rules, &x.root_products(y), |s| component.eval(s));
    Ok(w.normalization() * avg)
}

/// Cutoff for the simplex heat kernel at time `t` with absolute tail below `tol`.
pub fn choose_truncation(w: &SimplexWeight, t: f64, tol: f64) -> Result<TruncationPlan> {
    check_time_floor(t, tol)?;
    let jw = w.jacobi_weight();
    let ln_c = w.normalization().ln();
    // α ≥ β = -1/2, so |p_n| peaks at s = 1
    certify_cutoff(
        |n| {
            -t * w.eigen_rate(n)
                + 2.0 * (ln_jacobi_at_one(jw.alpha(), n) - 0.5 * ln_jacobi_norm_sq(jw, n))
                + ln_c
        },
        t,
        tol,
    )
}

/// The simplex heat kernel at a fixed time, in its tensor-integral form.
#[derive(Debug, Clone)]
pub struct SimplexHeatKernel {
    weight: SimplexWeight,
    kernel: JacobiKernelAtOne,
    rules: Vec<QuadratureRule>,
}

impl SimplexHeatKernel {
    pub fn new(w: &SimplexWeight, t: f64, plan: &TruncationPlan) -> Result<Self> {
        Self::with_budget(w, t, plan, DEFAULT_NODE_BUDGET)
    }

    pub fn with_budget(
        w: &SimplexWeight,
        t: f64,
        plan: &TruncationPlan,
        budget: u128,
    ) -> Result<Self> {
        plan.check_time(t)?;
        let rules = axis_rules(w, plan.cutoff() + 2)?;
        let needed = tensor_size(&rules);
        if needed > budget {
            return Err(Error::NodeBudget { needed, budget });
        }
        Ok(Self {
            weight: w.clone(),
            kernel: JacobiKernelAtOne::new(w.jacobi_weight(), t, plan.cutoff()),
            rules,
        })
    }

    pub fn eval(&self, x: &SimplexPoint, y: &SimplexPoint) -> Result<f64> {
        self.weight.check_point(x)?;
        self.weight.check_point(y)?;
        let avg = tensor_average(&self.rules, &x.root_products(y), |s| self.kernel.eval(s));
        Ok(self.weight.normalization() * avg)
    }
}

/// `e^{tD_κ}(x,y) = c_κ ∫ e^{tL_{λ-1/2,-1/2}}(1, 2z(u)²-1) Π (1-u_i²)^{κ_i-1} du`.
pub fn heat_kernel_simplex(
    w: &SimplexWeight,
    t: f64,
    x: &SimplexPoint,
    y: &SimplexPoint,
    plan: &TruncationPlan,
) -> Result<f64> {
    SimplexHeatKernel::new(w, t, plan)?.eval(x, y)
}

/// `Σ_{n≤N} e^{-tn(n+λ_κ)} P_n(w_κ; x, y)`, the projector-series route.
pub fn heat_kernel_simplex_series(
    w: &SimplexWeight,
    t: f64,
    x: &SimplexPoint,
    y: &SimplexPoint,
    plan: &TruncationPlan,
) -> Result<f64> {
    plan.check_time(t)?;
    let mut sum = 0.0;
    for n in 0..=plan.cutoff() {
        sum += (-t * w.eigen_rate(n)).exp() * projector_simplex(w, n, x, y)?;
    }
    Ok(sum)
}
