//! Product quadrature on the ball and simplex, exact for polynomials of a
//! given total degree against the domain weight.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::jacobi::{gauss_jacobi_rule, QuadratureRule};

/// Points and positive weights of a multivariate rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Cubature {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl Cubature {
    /// One-dimensional rule viewed as a cubature.
    pub fn from_rule(rule: &QuadratureRule) -> Self {
        Self {
            dim: 1,
            points: rule.nodes().iter().map(|&x| vec![x]).collect(),
            weights: rule.weights().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| w * f(p))
            .sum()
    }

    /// Unit ball `𝔹^d` (`d ≤ 3`) with weight `(1-‖x‖²)^{μ-1/2}`; exact up to `degree`.
    ///
    /// Polar factorization: a Gauss-Jacobi rule in `s = 2r² - 1` times a
    /// rule on the sphere `S^{d-1}`.
    pub fn ball(mu: f64, d: usize, degree: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidParameter(format!(
                "ball cubature supports d ≤ 3, got {d}"
            )));
        }
        let radial = gauss_jacobi_rule(mu - 0.5, (d as f64 - 2.0) / 2.0, degree / 4 + 1)?;
        let scale = 2f64.powf(-(mu - 0.5) - (d as f64 - 2.0) / 2.0) / 4.0;
        let sphere = sphere_rule(d, degree);
        let mut points = Vec::with_capacity(radial.len() * sphere.len());
        let mut weights = Vec::with_capacity(radial.len() * sphere.len());
        for (s, ws) in radial.iter() {
            let r = (0.5 * (1.0 + s)).sqrt();
            for (xi, wx) in &sphere {
                points.push(xi.iter().map(|c| r * c).collect());
                weights.push(ws * scale * wx);
            }
        }
        Ok(Self {
            dim: d,
            points,
            weights,
        })
    }

    /// Simplex `𝕋^d` with weight `Π x_i^{κ_i-1/2} (1-|x|)^{κ_{d+1}-1/2}`; exact up to `degree`.
    ///
    /// Collapsed (Dirichlet) coordinates: `x_1 = v_1`, `(x_2, ...) = (1 - v_1) y`
    /// with `y` in `𝕋^{d-1}`, each stage a Beta-weight Gauss rule.
    pub fn simplex(kappa: &[f64], degree: usize) -> Result<Self> {
        if kappa.len() < 2 {
            return Err(Error::InvalidParameter(
                "simplex weight needs d + 1 ≥ 2 exponents".into(),
            ));
        }
        let exps: Vec<f64> = kappa.iter().map(|k| k - 0.5).collect();
        let m = degree / 2 + 1;
        let (points, weights) = dirichlet_rule(&exps, m)?;
        Ok(Self {
            dim: kappa.len() - 1,
            points,
            weights,
        })
    }
}

/// Rule for `∫_{𝕋^d} f(x) Π x_i^{e_i} (1-|x|)^{e_{d+1}} dx` with `m` nodes per stage.
fn dirichlet_rule(exps: &[f64], m: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let d = exps.len() - 1;
    if d == 0 {
        return Ok((vec![Vec::new()], vec![1.0]));
    }
    // first coordinate: v^{e_1} (1-v)^{Σ_{i≥2} e_i + d - 1}
    let p = exps[0];
    let q = exps[1..].iter().sum::<f64>() + (d as f64 - 1.0);
    let beta = beta_rule(p, q, m)?;
    let (inner_pts, inner_wts) = dirichlet_rule(&exps[1..], m)?;
    let mut points = Vec::with_capacity(beta.len() * inner_pts.len());
    let mut weights = Vec::with_capacity(beta.len() * inner_pts.len());
    for &(v, wv) in &beta {
        for (y, wy) in inner_pts.iter().zip(&inner_wts) {
            let mut x = Vec::with_capacity(d);
            x.push(v);
            x.extend(y.iter().map(|c| (1.0 - v) * c));
            points.push(x);
            weights.push(wv * wy);
        }
    }
    Ok((points, weights))
}

/// Gauss rule on `[0, 1]` for the weight `v^p (1-v)^q`.
fn beta_rule(p: f64, q: f64, m: usize) -> Result<Vec<(f64, f64)>> {
    let rule = gauss_jacobi_rule(q, p, m)?;
    let scale = 2f64.powf(-(p + q + 1.0));
    Ok(rule
        .iter()
        .map(|(s, w)| (0.5 * (1.0 + s), w * scale))
        .collect())
}

/// Rule on `S^{d-1}` exact for polynomials of degree `≤ degree`.
fn sphere_rule(d: usize, degree: usize) -> Vec<(Vec<f64>, f64)> {
    let m_phi = degree + 1;
    let circle = |k: usize| -> (f64, f64) {
        let phi = 2.0 * PI * (k as f64 + 0.5) / m_phi as f64;
        (phi.cos(), phi.sin())
    };
    match d {
        1 => vec![(vec![-1.0], 1.0), (vec![1.0], 1.0)],
        2 => (0..m_phi)
            .map(|k| {
                let (c, s) = circle(k);
                (vec![c, s], 2.0 * PI / m_phi as f64)
            })
            .collect(),
        _ => {
            let polar = gauss_jacobi_rule(0.0, 0.0, degree / 2 + 1).expect("Legendre rule");
            let mut out = Vec::with_capacity(polar.len() * m_phi);
            for (z, wz) in polar.iter() {
                let rho = (1.0 - z * z).sqrt();
                for k in 0..m_phi {
                    let (c, s) = circle(k);
                    out.push((vec![rho * c, rho * s, z], wz * 2.0 * PI / m_phi as f64));
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn disk_area_and_moments() {
        // μ = 1/2 is Lebesgue measure
        let c = Cubature::ball(0.5, 2, 6).unwrap();
        assert_relative_eq!(c.mass(), PI, max_relative = 1e-13);
        // ∫ x² over the unit disk = π/4
        assert_relative_eq!(c.integrate(|p| p[0] * p[0]), PI / 4.0, max_relative = 1e-13);
        // odd moments vanish
        assert!(c.integrate(|p| p[0] * p[1] * p[1]).abs() < 1e-14);
    }

    #[test]
    fn ball_volumes() {
        let c = Cubature::ball(0.5, 3, 4).unwrap();
        assert_relative_eq!(c.mass(), 4.0 * PI / 3.0, max_relative = 1e-13);
        let c = Cubature::ball(0.5, 1, 4).unwrap();
        assert_relative_eq!(c.mass(), 2.0, max_relative = 1e-13);
        let c = Cubature::ball(0.0, 2, 4).unwrap();
        assert_relative_eq!(c.mass(), 2.0 * PI, max_relative = 1e-13);
    }

    #[test]
    fn triangle_area() {
        let c = Cubature::simplex(&[0.5, 0.5, 0.5], 4).unwrap();
        assert_relative_eq!(c.mass(), 0.5, max_relative = 1e-13);
        // ∫ x1 x2 over the triangle = 1/24
        assert_relative_eq!(
            c.integrate(|p| p[0] * p[1]),
            1.0 / 24.0,
            max_relative = 1e-13
        );
        let c = Cubature::simplex(&[0.0, 0.0], 2).unwrap();
        assert_relative_eq!(c.mass(), PI, max_relative = 1e-13);
    }
}
