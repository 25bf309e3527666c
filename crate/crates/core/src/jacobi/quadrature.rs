//! Gauss-Jacobi rules from the recurrence (Jacobi) matrix.
//!
//! Nodes are the eigenvalues of the symmetric tridiagonal matrix built from
//! the orthonormal recurrence coefficients (implicit QL, with Sturm bisection
//! as a fallback), polished by Newton steps on `p_m`. Weights are the
//! Christoffel numbers `1 / Σ_{k<m} p_k(x_i)^2`.

use serde::{Deserialize, Serialize};

use super::{ln_jacobi_norm_sq, recurrence_coefficients, IntervalWeight};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    degree_exact: usize,
}

impl QuadratureRule {
    /// Builds a rule from raw parts, checking the ordering and positivity invariants.
    pub fn from_parts(nodes: Vec<f64>, weights: Vec<f64>, degree_exact: usize) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::Quadrature(
                "nodes and weights must be nonempty and equal length".into(),
            ));
        }
        if nodes.windows(2).any(|p| !(p[0] < p[1])) {
            return Err(Error::Quadrature(
                "nodes must be strictly increasing".into(),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Quadrature(
                "weights must be positive and finite".into(),
            ));
        }
        Ok(Self {
            nodes,
            weights,
            degree_exact,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn degree_exact(&self) -> usize {
        self.degree_exact
    }

    /// Sum of the weights.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Same nodes, weights rescaled to sum to one.
    pub fn normalized(&self) -> Self {
        let m = self.mass();
        Self {
            nodes: self.nodes.clone(),
            weights: self.weights.iter().map(|w| w / m).collect(),
            degree_exact: self.degree_exact,
        }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Node/weight pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// `m`-point Gauss rule for the weight `(1-u)^a (1+u)^b` on `[-1, 1]`,
/// exact for polynomials of degree `2m - 1`.
pub fn gauss_jacobi_rule(a: f64, b: f64, m: usize) -> Result<QuadratureRule> {
    let w = IntervalWeight::new(a, b)?;
    if m == 0 {
        return Err(Error::InvalidParameter(
            "a Gauss rule needs at least one node".into(),
        ));
    }
    let diag: Vec<f64> = (0..m).map(|k| recurrence_coefficients(a, b, k).0).collect();
    let off: Vec<f64> = (1..m).map(|k| recurrence_coefficients(a, b, k).1).collect();
    let mut nodes = tridiagonal_eigenvalues(&diag, &off)?;
    nodes.sort_by(f64::total_cmp);

    let p0 = (-0.5 * ln_jacobi_norm_sq(w, 0)).exp();
    let mut weights = Vec::with_capacity(m);
    for x in nodes.iter_mut() {
        *x = newton_polish(a, b, m, p0, *x);
        let mut sum_sq = 0.0;
        let (mut prev, mut cur) = (0.0, p0);
        for k in 0..m {
            sum_sq += cur * cur;
            let (ak, bk) = recurrence_coefficients(a, b, k);
            let (_, bn) = recurrence_coefficients(a, b, k + 1);
            let next = ((*x - ak) * cur - bk * prev) / bn;
            prev = cur;
            cur = next;
        }
        weights.push(1.0 / sum_sq);
    }
    QuadratureRule::from_parts(nodes, weights, 2 * m - 1)
}

/// Value and derivative of the orthonormal `p_m` at `x`.
fn orthonormal_with_derivative(a: f64, b: f64, m: usize, p0: f64, x: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (0.0, p0);
    let (mut dprev, mut dcur) = (0.0, 0.0);
    for k in 0..m {
        let (ak, bk) = recurrence_coefficients(a, b, k);
        let (_, bn) = recurrence_coefficients(a, b, k + 1);
        let next = ((x - ak) * cur - bk * prev) / bn;
        let dnext = ((x - ak) * dcur + cur - bk * dprev) / bn;
        prev = cur;
        cur = next;
        dprev = dcur;
        dcur = dnext;
    }
    (cur, dcur)
}

fn newton_polish(a: f64, b: f64, m: usize, p0: f64, x0: f64) -> f64 {
    let mut x = x0;
    for _ in 0..3 {
        let (p, dp) = orthonormal_with_derivative(a, b, m, p0, x);
        if dp == 0.0 || !dp.is_finite() {
            break;
        }
        let step = p / dp;
        let next = x - step;
        // a polishing step never moves further than the eigensolver error
        if !next.is_finite() || step.abs() > 1e-8 || next.abs() >= 1.0 {
            break;
        }
        x = next;
        if step.abs() <= f64::EPSILON * x.abs().max(1e-300) {
            break;
        }
    }
    x
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (`off.len() == diag.len() - 1`).
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    match implicit_ql(diag, off) {
        Some(ev) => Ok(ev),
        None => sturm_bisection(diag, off),
    }
}

const QL_MAX_ITER: usize = 60;

fn implicit_ql(diag: &[f64], off: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return None;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let bb = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * bb;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - bb;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    if d.iter().all(|v| v.is_finite()) {
        Some(d)
    } else {
        None
    }
}

/// Number of eigenvalues strictly below `x` (Sturm sequence count).
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q == 0.0 {
            f64::EPSILON * (off[i - 1].abs() + f64::MIN_POSITIVE)
        } else {
            q
        };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn sturm_bisection(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r =
            if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Quadrature(
            "non-finite recurrence coefficients".into(),
        ));
    }
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if sturm_count(diag, off, mid) > k {
                b = mid;
            } else {
                a = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_point_legendre() {
        let r = gauss_jacobi_rule(0.0, 0.0, 2).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert_relative_eq!(r.nodes()[0], -s, epsilon = 1e-15);
        assert_relative_eq!(r.nodes()[1], s, epsilon = 1e-15);
        assert_relative_eq!(r.weights()[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(r.weights()[1], 1.0, epsilon = 1e-14);
        assert_eq!(r.degree_exact(), 3);
        for k in 0..=3 {
            let exact = if k % 2 == 0 {
                2.0 / (k as f64 + 1.0)
            } else {
                0.0
            };
            assert_relative_eq!(r.integrate(|u| u.powi(k)), exact, epsilon = 1e-14);
        }
    }

    #[test]
    fn midpoint_rule() {
        let r = gauss_jacobi_rule(0.0, 0.0, 1).unwrap();
        assert_eq!(r.nodes(), &[0.0]);
        assert_relative_eq!(r.weights()[0], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn bisection_agrees_with_ql() {
        let m = 40;
        let (a, b) = (-0.3, 1.7);
        let diag: Vec<f64> = (0..m).map(|k| recurrence_coefficients(a, b, k).0).collect();
        let off: Vec<f64> = (1..m).map(|k| recurrence_coefficients(a, b, k).1).collect();
        let mut ql = implicit_ql(&diag, &off).unwrap();
        ql.sort_by(f64::total_cmp);
        let bis = sturm_bisection(&diag, &off).unwrap();
        for (x, y) in ql.iter().zip(&bis) {
            assert!((x - y).abs() < 1e-13, "{x} vs {y}");
        }
    }

    #[test]
    fn invalid_arguments() {
        assert!(gauss_jacobi_rule(-1.0, 0.0, 4).is_err());
        assert!(gauss_jacobi_rule(0.0, 0.0, 0).is_err());
        assert!(QuadratureRule::from_parts(vec![0.5, 0.1], vec![1.0, 1.0], 1).is_err());
        assert!(QuadratureRule::from_parts(vec![0.1, 0.5], vec![1.0, -1.0], 1).is_err());
    }
}
