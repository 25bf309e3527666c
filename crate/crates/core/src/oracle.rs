//! Brute-force ground truth built from monomials: Gram–Schmidt orthonormal
//! bases under the weighted measures, exact application of the generators,
//! and the Green and decomposition identities checked by quadrature.
//!
//! Nothing here shares code with the closed kernel formulas except the
//! weighted cubature rules, which are themselves tested against moments.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ball::BallWeight;
use crate::cubature::Cubature;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::jacobi::IntervalWeight;
use crate::simplex::SimplexWeight;

/// Gram matrix tolerance a finished basis must meet.
pub const GRAM_TOL: f64 = 1e-10;

/// Distance from the boundary kept by the pointwise decomposition check.
pub const INTERIOR_MARGIN: f64 = 1e-3;

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Polynomial in `d` variables stored as a map from exponent vectors to
/// coefficients. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "PolyRecord", try_from = "PolyRecord")]
pub struct MultiPoly {
    dim: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

#[derive(Serialize, Deserialize)]
struct PolyRecord {
    dim: usize,
    terms: Vec<PolyTerm>,
}

#[derive(Serialize, Deserialize)]
struct PolyTerm {
    exponents: Vec<u32>,
    coeff: f64,
}

impl From<MultiPoly> for PolyRecord {
    fn from(p: MultiPoly) -> Self {
        PolyRecord {
            dim: p.dim,
            terms: p
                .terms
                .into_iter()
                .map(|(exponents, coeff)| PolyTerm { exponents, coeff })
                .collect(),
        }
    }
}

impl TryFrom<PolyRecord> for MultiPoly {
    type Error = Error;

    fn try_from(r: PolyRecord) -> Result<Self> {
        let mut p = MultiPoly::zero(r.dim);
        for term in r.terms {
            if term.exponents.len() != r.dim {
                return Err(Error::Oracle(format!(
                    "term {:?} does not have {} exponents",
                    term.exponents, r.dim
                )));
            }
            p.add_term(term.exponents, term.coeff);
        }
        Ok(p)
    }
}

impl MultiPoly {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    pub fn monomial(exponents: Vec<u32>, c: f64) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn var(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Self::monomial(e, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exponents: &[u32]) -> f64 {
        self.terms.get(exponents).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn add_term(&mut self, exponents: Vec<u32>, c: f64) {
        debug_assert_eq!(exponents.len(), self.dim);
        match self.terms.entry(exponents) {
            Entry::Occupied(mut o) => {
                let v = *o.get() + c;
                if v == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = v;
                }
            }
            Entry::Vacant(slot) => {
                if c != 0.0 {
                    slot.insert(c);
                }
            }
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero(self.dim);
        }
        Self {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &MultiPoly) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), s * c);
        }
        out
    }

    pub fn add(&self, other: &MultiPoly) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &MultiPoly) -> Self {
        self.axpy(-1.0, other)
    }

    pub fn mul(&self, other: &MultiPoly) -> Self {
        let mut out = Self::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.dim, 1.0);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// `∂_i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut e2 = e.clone();
                e2[i] -= 1;
                out.add_term(e2, c * e[i] as f64);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        compensated_sum(self.terms.iter().map(|(e, c)| {
            let mut v = *c;
            for (xi, &k) in x.iter().zip(e) {
                v *= xi.powi(k as i32);
            }
            v
        }))
    }

    /// Largest coefficient difference to `other`.
    pub fn max_coeff_diff(&self, other: &MultiPoly) -> f64 {
        self.sub(other)
            .terms
            .values()
            .fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Exponent vectors of total degree exactly `n` in `d` variables, graded
/// lexicographically.
pub fn monomials_of_degree(d: usize, n: u32) -> Vec<Vec<u32>> {
    fn rec(d: usize, n: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == d {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=n).rev() {
            prefix.push(k);
            rec(d, n - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, n, &mut Vec::with_capacity(d), &mut out);
    out
}

fn n_max_guard(d: usize) -> usize {
    match d {
        1 => 12,
        2 => 8,
        _ => 5,
    }
}

/// Orthonormal basis of `𝒱_0 ⊕ ... ⊕ 𝒱_{n_max}` for one weighted domain.
#[derive(Debug, Clone)]
pub struct OrthonormalBasis {
    domain: Domain,
    levels: Vec<Vec<MultiPoly>>,
    cubature: Cubature,
    gram_error: f64,
}

impl OrthonormalBasis {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn n_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> Result<&[MultiPoly]> {
        self.levels
            .get(n)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::Oracle(format!("level {n} exceeds n_max = {}", self.n_max())))
    }

    pub fn cubature(&self) -> &Cubature {
        &self.cubature
    }

    /// Largest entry of `G - I` measured after construction.
    pub fn gram_error(&self) -> f64 {
        self.gram_error
    }

    pub fn inner(&self, f: &MultiPoly, g: &MultiPoly) -> f64 {
        weighted_inner(&self.cubature, |x| f.eval(x) * g.eval(x))
    }
}

fn weighted_inner<F: Fn(&[f64]) -> f64>(cub: &Cubature, f: F) -> f64 {
    compensated_sum(
        cub.points()
            .iter()
            .zip(cub.weights())
            .map(|(x, w)| w * f(x)),
    )
}

/// Gram–Schmidt on graded monomials, run twice per element.
pub fn gram_schmidt_basis(domain: &Domain, n_max: usize) -> Result<OrthonormalBasis> {
    gram_schmidt_basis_shuffled(domain, n_max, None)
}

/// As [`gram_schmidt_basis`], with the monomials of each degree visited in an
/// order shuffled by `seed`. The spans, hence the projectors, do not change.
pub fn gram_schmidt_basis_shuffled(
    domain: &Domain,
    n_max: usize,
    seed: Option<u64>,
) -> Result<OrthonormalBasis> {
    let d = domain.dim();
    if d > 3 {
        return Err(Error::Oracle(format!(
            "oracle bases are limited to d ≤ 3, got {d}"
        )));
    }
    if n_max > n_max_guard(d) {
        return Err(Error::Oracle(format!(
            "n_max = {n_max} exceeds the conditioning guard {} for d = {d}",
            n_max_guard(d)
        )));
    }
    let cubature = domain.cubature(2 * n_max + 2)?;
    let center = match domain {
        Domain::Simplex(_) => 1.0 / (d as f64 + 1.0),
        _ => 0.0,
    };
    let shifted: Vec<MultiPoly> = (0..d)
        .map(|i| MultiPoly::var(d, i).axpy(-center, &MultiPoly::constant(d, 1.0)))
        .collect();
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);

    let values_of =
        |p: &MultiPoly| -> Vec<f64> { cubature.points().iter().map(|x| p.eval(x)).collect() };
    let inner = |a: &[f64], b: &[f64]| -> f64 {
        compensated_sum(
            cubature
                .weights()
                .iter()
                .zip(a.iter().zip(b))
                .map(|(w, (u, v))| w * u * v),
        )
    };

    let mut accepted: Vec<(MultiPoly, Vec<f64>)> = Vec::new();
    let mut levels = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut exps = monomials_of_degree(d, n as u32);
        if let Some(r) = rng.as_mut() {
            exps.shuffle(r);
        }
        let mut level = Vec::with_capacity(exps.len());
        for e in exps {
            let mut p = MultiPoly::constant(d, 1.0);
            for (i, &k) in e.iter().enumerate() {
                p = p.mul(&shifted[i].pow(k));
            }
            let mut vals = values_of(&p);
            let start_norm = inner(&vals, &vals).sqrt();
            for _pass in 0..2 {
                for (q, qv) in &accepted {
                    let c = inner(&vals, qv);
                    p = p.axpy(-c, q);
                    for (v, qx) in vals.iter_mut().zip(qv) {
                        *v -= c * qx;
                    }
                }
            }
            let norm = inner(&vals, &vals).sqrt();
            if !(norm > 1e-8 * start_norm) {
                return Err(Error::Oracle(format!(
                    "loss of orthogonality at degree {n}: residual norm {norm:e} of {start_norm:e}"
                )));
            }
            p = p.scale(1.0 / norm);
            let vals = values_of(&p);
            accepted.push((p.clone(), vals));
            level.push(p);
        }
        levels.push(level);
    }

    // Fresh evaluation, independent of the running values above.
    let all: Vec<Vec<f64>> = accepted.iter().map(|(p, _)| values_of(p)).collect();
    let mut gram_error = 0.0_f64;
    for i in 0..all.len() {
        for j in 0..=i {
            let g = inner(&all[i], &all[j]);
            let target = if i == j { 1.0 } else { 0.0 };
            gram_error = gram_error.max((g - target).abs());
        }
    }
    if !(gram_error <= GRAM_TOL) {
        return Err(Error::Oracle(format!(
            "Gram matrix deviates from identity by {gram_error:e}"
        )));
    }
    Ok(OrthonormalBasis {
        domain: domain.clone(),
        levels,
        cubature,
        gram_error,
    })
}

/// `Σ_j φ_{nj}(x) φ_{nj}(y)`.
pub fn projector_oracle(basis: &OrthonormalBasis, n: usize, x: &[f64], y: &[f64]) -> Result<f64> {
    let level = basis.level(n)?;
    check_dim(basis, x)?;
    check_dim(basis, y)?;
    Ok(compensated_sum(level.iter().map(|p| p.eval(x) * p.eval(y))))
}

fn check_dim(basis: &OrthonormalBasis, x: &[f64]) -> Result<()> {
    if x.len() != basis.domain.dim() {
        return Err(Error::Domain(format!(
            "expected {} coordinates, got {}",
            basis.domain.dim(),
            x.len()
        )));
    }
    Ok(())
}

/// Truncated spectral sum `Σ_{n≤n_max} e^{-t·rate(n)} P_n(x, y)`. Fails unless
/// the tail past `n_max` is certified below `tol` by the kernel majorant.
pub fn heat_oracle(
    basis: &OrthonormalBasis,
    t: f64,
    x: &[f64],
    y: &[f64],
    tol: f64,
) -> Result<f64> {
    let plan = basis.domain.choose_truncation(t, tol)?;
    if plan.cutoff() > basis.n_max() {
        return Err(Error::Oracle(format!(
            "tail not certified: t = {t} needs degree {} but the basis stops at {}",
            plan.cutoff(),
            basis.n_max()
        )));
    }
    let terms: Result<Vec<f64>> = (0..=basis.n_max())
        .map(|n| Ok((-t * basis.domain.eigen_rate(n)).exp() * projector_oracle(basis, n, x, y)?))
        .collect();
    Ok(compensated_sum(terms?))
}

/// `Σ_{i,j} x_i x_j ∂_i ∂_j p`.
fn euler_second(p: &MultiPoly) -> MultiPoly {
    let d = p.dim();
    let mut out = MultiPoly::zero(d);
    for i in 0..d {
        let pi = p.derivative(i);
        for j in 0..d {
            let term = MultiPoly::var(d, i)
                .mul(&MultiPoly::var(d, j))
                .mul(&pi.derivative(j));
            out = out.add(&term);
        }
    }
    out
}

/// `Σ_i x_i ∂_i p`.
fn euler_first(p: &MultiPoly) -> MultiPoly {
    let d = p.dim();
    (0..d).fold(MultiPoly::zero(d), |acc, i| {
        acc.add(&MultiPoly::var(d, i).mul(&p.derivative(i)))
    })
}

/// Jacobi operator `(1-x²)f'' + (β-α-(α+β+2)x)f'` on one variable.
#[allow(non_snake_case)]
pub fn apply_D_interval(w: IntervalWeight, p: &MultiPoly) -> MultiPoly {
    let x = MultiPoly::var(1, 0);
    let one = MultiPoly::constant(1, 1.0);
    let second = one.sub(&x.mul(&x)).mul(&p.derivative(0).derivative(0));
    let drift = MultiPoly::constant(1, w.beta() - w.alpha()).axpy(-(w.lambda() + 1.0), &x);
    second.add(&drift.mul(&p.derivative(0)))
}

/// `Σ(1-x_i²)∂_i² - 2Σ_{i<j} x_i x_j ∂_i∂_j - (d+2μ)Σ x_i ∂_i`.
#[allow(non_snake_case)]
pub fn apply_D_ball(w: &BallWeight, p: &MultiPoly) -> MultiPoly {
    let d = p.dim();
    let laplace = (0..d).fold(MultiPoly::zero(d), |acc, i| {
        acc.add(&p.derivative(i).derivative(i))
    });
    laplace
        .sub(&euler_second(p))
        .axpy(-(d as f64 + 2.0 * w.mu()), &euler_first(p))
}

/// `Σ x_i∂_i² - Σ_{i,j} x_i x_j ∂_i∂_j + Σ(κ_i + 1/2 - (|κ| + (d+1)/2)x_i)∂_i`.
#[allow(non_snake_case)]
pub fn apply_D_simplex(w: &SimplexWeight, p: &MultiPoly) -> MultiPoly {
    let d = p.dim();
    let kappa = w.kappa();
    let total: f64 = kappa.iter().sum::<f64>() + (d as f64 + 1.0) / 2.0;
    let mut out = euler_second(p).scale(-1.0);
    for (i, &k) in kappa.iter().take(d).enumerate() {
        let xi = MultiPoly::var(d, i);
        let pi = p.derivative(i);
        out = out.add(&xi.mul(&pi.derivative(i)));
        let drift = MultiPoly::constant(d, k + 0.5).axpy(-total, &xi);
        out = out.add(&drift.mul(&pi));
    }
    out
}

/// The generator of `domain` applied to `p`.
pub fn apply_generator(domain: &Domain, p: &MultiPoly) -> MultiPoly {
    match domain {
        Domain::Interval(w) => apply_D_interval(*w, p),
        Domain::Ball(w) => apply_D_ball(w, p),
        Domain::Simplex(w) => apply_D_simplex(w, p),
    }
}

/// `D_{i,j} p = x_i ∂_j p - x_j ∂_i p`.
fn angular(p: &MultiPoly, i: usize, j: usize) -> MultiPoly {
    let d = p.dim();
    MultiPoly::var(d, i)
        .mul(&p.derivative(j))
        .sub(&MultiPoly::var(d, j).mul(&p.derivative(i)))
}

fn check_poly_dim(domain: &Domain, p: &MultiPoly) -> Result<()> {
    if p.dim() != domain.dim() {
        return Err(Error::Oracle(format!(
            "polynomial has {} variables, domain has dimension {}",
            p.dim(),
            domain.dim()
        )));
    }
    Ok(())
}

/// Both sides of the integration-by-parts identity
/// `∫ (D f) g w = -∫ Γ(f, g) w`, where `Γ` is the carré du champ of the domain.
pub fn green_identity_check(domain: &Domain, f: &MultiPoly, g: &MultiPoly) -> Result<(f64, f64)> {
    check_poly_dim(domain, f)?;
    check_poly_dim(domain, g)?;
    let d = domain.dim();
    let cub = domain.cubature(f.degree() + g.degree() + 2)?;
    let df = apply_generator(domain, f);
    let lhs = weighted_inner(&cub, |x| df.eval(x) * g.eval(x));

    let fi: Vec<MultiPoly> = (0..d).map(|i| f.derivative(i)).collect();
    let gi: Vec<MultiPoly> = (0..d).map(|i| g.derivative(i)).collect();
    let rhs = match domain {
        Domain::Interval(_) => -weighted_inner(&cub, |x| {
            fi[0].eval(x) * gi[0].eval(x) * (1.0 - x[0] * x[0])
        }),
        Domain::Ball(_) => {
            let pairs: Vec<(MultiPoly, MultiPoly)> = (0..d)
                .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
                .map(|(i, j)| (angular(f, i, j), angular(g, i, j)))
                .collect();
            -weighted_inner(&cub, |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let radial =
                    compensated_sum((0..d).map(|i| fi[i].eval(x) * gi[i].eval(x) * (1.0 - r2)));
                let ang = compensated_sum(pairs.iter().map(|(a, b)| a.eval(x) * b.eval(x)));
                radial + ang
            })
        }
        Domain::Simplex(_) => -weighted_inner(&cub, |x| {
            let aug = 1.0 - x.iter().sum::<f64>();
            let mut terms = Vec::with_capacity(d * d);
            for i in 0..d {
                let fxi = fi[i].eval(x);
                let gxi = gi[i].eval(x);
                terms.push(fxi * gxi * x[i] * aug);
                for j in (i + 1)..d {
                    let fij = fxi - fi[j].eval(x);
                    let gij = gxi - gi[j].eval(x);
                    terms.push(fij * gij * x[i] * x[j]);
                }
            }
            compensated_sum(terms)
        }),
    };
    Ok((lhs, rhs))
}

/// Result of comparing `D p` with the sum of its divergence-form pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// Largest pointwise `|D p - Σ pieces|` on the interior grid.
    pub max_abs_diff: f64,
    /// Largest `|D p|` on the same grid (at least 1).
    pub scale: f64,
    pub points: usize,
}

/// Compares `D p` against the symmetric decomposition of the generator,
///
/// * ball: `Σ_i w⁻¹∂_i(w(1-‖x‖²)∂_i p) + Σ_{i<j} D_{i,j}² p`,
/// * simplex: `Σ_i U_i p + Σ_{i<j} U_{i,j} p` with
///   `U_i = w⁻¹∂_i(w x_i(1-|x|)∂_i)` and `U_{i,j} = w⁻¹∂_{i,j}(w x_i x_j ∂_{i,j})`,
/// * interval: `w⁻¹(w(1-x²)p')'`,
///
/// with the derivative of `w` taken through `∂ log w` pointwise on interior
/// cubature nodes.
pub fn decomposition_check(domain: &Domain, p: &MultiPoly) -> Result<DecompositionReport> {
    check_poly_dim(domain, p)?;
    let d = domain.dim();
    let dp = apply_generator(domain, p);
    let cub = domain.cubature(2 * p.degree() + 6)?;
    let pi: Vec<MultiPoly> = (0..d).map(|i| p.derivative(i)).collect();
    let pii: Vec<MultiPoly> = (0..d).map(|i| pi[i].derivative(i)).collect();

    let mut max_abs_diff = 0.0_f64;
    let mut scale = 1.0_f64;
    let mut points = 0;
    match domain {
        Domain::Interval(w) => {
            for x in cub.points() {
                let s = 1.0 - x[0] * x[0];
                if s < INTERIOR_MARGIN {
                    continue;
                }
                // ∂ log w = -α/(1-x) + β/(1+x)
                let dlogw = -w.alpha() / (1.0 - x[0]) + w.beta() / (1.0 + x[0]);
                let piece = s * pii[0].eval(x) + (-2.0 * x[0] + s * dlogw) * pi[0].eval(x);
                let exact = dp.eval(x);
                max_abs_diff = max_abs_diff.max((exact - piece).abs());
                scale = scale.max(exact.abs());
                points += 1;
            }
        }
        Domain::Ball(w) => {
            let rot: Vec<MultiPoly> = (0..d)
                .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
                .map(|(i, j)| angular(&angular(p, i, j), i, j))
                .collect();
            for x in cub.points() {
                let s = 1.0 - x.iter().map(|v| v * v).sum::<f64>();
                if s < INTERIOR_MARGIN {
                    continue;
                }
                let mut pieces = Vec::with_capacity(d + rot.len());
                for i in 0..d {
                    // w = (1-‖x‖²)^{μ-1/2}
                    let dlogw = -(2.0 * w.mu() - 1.0) * x[i] / s;
                    pieces.push(s * pii[i].eval(x) + (-2.0 * x[i] + s * dlogw) * pi[i].eval(x));
                }
                pieces.extend(rot.iter().map(|r| r.eval(x)));
                let exact = dp.eval(x);
                max_abs_diff = max_abs_diff.max((exact - compensated_sum(pieces)).abs());
                scale = scale.max(exact.abs());
                points += 1;
            }
        }
        Domain::Simplex(w) => {
            let a: Vec<f64> = w.kappa().iter().map(|k| k - 0.5).collect();
            let mixed: Vec<(usize, usize, MultiPoly, MultiPoly)> = (0..d)
                .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let pij = pi[i].sub(&pi[j]);
                    let pijij = pij.derivative(i).sub(&pij.derivative(j));
                    (i, j, pij, pijij)
                })
                .collect();
            for x in cub.points() {
                let aug = 1.0 - x.iter().sum::<f64>();
                if aug < INTERIOR_MARGIN || x.iter().any(|&v| v < INTERIOR_MARGIN) {
                    continue;
                }
                let mut pieces = Vec::with_capacity(d + mixed.len());
                for i in 0..d {
                    let c = x[i] * aug;
                    let dc = aug - x[i];
                    let dlogw = a[i] / x[i] - a[d] / aug;
                    pieces.push(c * pii[i].eval(x) + (dc + c * dlogw) * pi[i].eval(x));
                }
                for (i, j, pij, pijij) in &mixed {
                    let (i, j) = (*i, *j);
                    let c = x[i] * x[j];
                    // ∂_{i,j}(x_i x_j) = x_j - x_i, ∂_{i,j} log w = a_i/x_i - a_j/x_j
                    let dc = x[j] - x[i];
                    let dlogw = a[i] / x[i] - a[j] / x[j];
                    pieces.push(c * pijij.eval(x) + (dc + c * dlogw) * pij.eval(x));
                }
                let exact = dp.eval(x);
                max_abs_diff = max_abs_diff.max((exact - compensated_sum(pieces)).abs());
                scale = scale.max(exact.abs());
                points += 1;
            }
        }
    }
    if points == 0 {
        return Err(Error::Oracle(
            "no interior grid points for the decomposition check".into(),
        ));
    }
    Ok(DecompositionReport {
        max_abs_diff,
        scale,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::eval_jacobi_orthonormal;

    fn ball(mu: f64, d: usize) -> Domain {
        Domain::Ball(BallWeight::new(mu, d).unwrap())
    }

    fn simplex(kappa: &[f64]) -> Domain {
        Domain::Simplex(SimplexWeight::new(kappa.to_vec()).unwrap())
    }

    #[test]
    fn legendre_up_to_sign() {
        let dom = Domain::Interval(IntervalWeight::lebesgue());
        let b = gram_schmidt_basis(&dom, 2).unwrap();
        for n in 0..=2 {
            let p = &b.level(n).unwrap()[0];
            for &x in &[-0.9, -0.3, 0.2, 0.7] {
                let want = eval_jacobi_orthonormal(IntervalWeight::lebesgue(), n, x).unwrap();
                assert!((p.eval(&[x]).abs() - want.abs()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn level_zero_is_constant() {
        let dom = ball(1.0, 2);
        let b = gram_schmidt_basis(&dom, 3).unwrap();
        let p = &b.level(0).unwrap()[0];
        assert_eq!(p.degree(), 0);
        assert!((p.coefficient(&[0, 0]).abs() - 1.0 / dom.total_mass().sqrt()).abs() < 1e-13);
        for n in 0..=3 {
            assert_eq!(b.level(n).unwrap().len(), n + 1);
        }
    }

    #[test]
    fn guard_rejects_large_degree() {
        assert!(matches!(
            gram_schmidt_basis(&ball(1.0, 3), 6),
            Err(Error::Oracle(_))
        ));
        assert!(matches!(
            gram_schmidt_basis(&ball(1.0, 2), 9),
            Err(Error::Oracle(_))
        ));
    }

    #[test]
    fn d_ball_on_linear() {
        let w = BallWeight::new(1.0, 2).unwrap();
        let p = MultiPoly::var(2, 0);
        assert!(apply_D_ball(&w, &p).max_coeff_diff(&p.scale(-4.0)) < 1e-15);
        assert!(apply_D_ball(&w, &MultiPoly::constant(2, 3.0)).is_zero());
    }

    #[test]
    fn d_simplex_hand_check() {
        // κ = (1/2, 1/2), d = 1: D x² = x·2 - x²·2 + (1 - 2x)·2x = 4x - 6x²
        let w = SimplexWeight::new(vec![0.5, 0.5]).unwrap();
        let x2 = MultiPoly::monomial(vec![2], 1.0);
        let want = MultiPoly::monomial(vec![1], 4.0).add(&MultiPoly::monomial(vec![2], -6.0));
        assert_eq!(apply_D_simplex(&w, &x2), want);
    }

    #[test]
    fn json_round_trip() {
        let p = MultiPoly::monomial(vec![1, 2], 0.25).add(&MultiPoly::constant(2, -1.5));
        let s = serde_json::to_string(&p).unwrap();
        let q: MultiPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        assert!(serde_json::from_str::<MultiPoly>(
            r#"{"dim":2,"terms":[{"exponents":[1],"coeff":1.0}]}"#
        )
        .is_err());
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials_of_degree(2, 3).len(), 4);
        assert_eq!(monomials_of_degree(3, 2).len(), 6);
        assert_eq!(monomials_of_degree(1, 5), vec![vec![5]]);
    }

    #[test]
    fn heat_oracle_needs_certified_tail() {
        let dom = Domain::Interval(IntervalWeight::lebesgue());
        let b = gram_schmidt_basis(&dom, 4).unwrap();
        assert!(matches!(
            heat_oracle(&b, 0.01, &[0.1], &[0.2], 1e-10),
            Err(Error::Oracle(_))
        ));
    }

    #[test]
    fn simplex_basis_builds() {
        let b = gram_schmidt_basis(&simplex(&[1.0, 1.0, 1.0]), 4).unwrap();
        assert!(b.gram_error() < 1e-12);
    }
}
