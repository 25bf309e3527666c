//! Invariant suites shared by the `selftest` command and the test targets.
//!
//! Each suite runs a list of numbered checks and reports how many passed.
//! Faults can be injected explicitly to prove a suite can fail.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ball::BallWeight;
use crate::domain::Domain;
use crate::envelope::{run_scan, ScanConfig};
use crate::error::Result;
use crate::heat1d::heat_kernel_interval;
use crate::jacobi::{
    eval_jacobi, gauss_jacobi_rule, gegenbauer_norm_identity_check, jacobi_norm_sq, IntervalWeight,
};
use crate::oracle::{
    apply_generator, gram_schmidt_basis, green_identity_check, monomials_of_degree,
    projector_oracle, MultiPoly,
};
use crate::simplex::SimplexWeight;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

/// Deliberate corruption used to show a suite detects it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Scale the Jacobi norm constant `h_n` by `1 + 1e-6` for `n ≥ 1`.
    NormConstant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: usize,
    pub total: usize,
    /// First few failure descriptions.
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.passed == self.total && self.total > 0
    }
}

struct Tally {
    name: &'static str,
    passed: usize,
    total: usize,
    failures: Vec<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            passed: 0,
            total: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.total += 1;
        if ok {
            self.passed += 1;
        } else if self.failures.len() < 5 {
            self.failures.push(what());
        }
    }

    /// `|a - b| ≤ tol · max(1, |b|)`.
    fn close(&mut self, a: f64, b: f64, tol: f64, what: impl FnOnce() -> String) {
        let ok = (a - b).abs() <= tol * b.abs().max(1.0);
        self.check(ok, || format!("{}: {a} vs {b}", what()));
    }

    fn result<T>(&mut self, r: Result<T>, what: &str) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.check(false, || format!("{what}: {e}"));
                None
            }
        }
    }

    fn finish(self) -> SuiteReport {
        SuiteReport {
            name: self.name.into(),
            passed: self.passed,
            total: self.total,
            failures: self.failures,
        }
    }
}

/// Deterministic interior and boundary points of a domain.
pub fn sample_points(domain: &Domain, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = domain.dim();
    (0..count)
        .map(|k| match domain {
            Domain::Interval(_) => {
                if k == 0 {
                    vec![1.0]
                } else if k == 1 {
                    vec![-1.0]
                } else {
                    vec![rng.random_range(-1.0..1.0)]
                }
            }
            Domain::Ball(_) => loop {
                let p: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let n2: f64 = p.iter().map(|a| a * a).sum();
                if n2 <= 1.0 {
                    if k == 0 {
                        let n = n2.sqrt().max(1e-300);
                        break p.iter().map(|a| a / n).collect();
                    }
                    break p;
                }
            },
            Domain::Simplex(_) => {
                let mut e: Vec<f64> = (0..=d).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                if k == 0 {
                    e[0] = 0.0;
                }
                let s: f64 = e.iter().sum();
                e[..d].iter().map(|a| a / s).collect()
            }
        })
        .collect()
}

/// `∫ K(t, x, y) dν(y)` by a cubature exact for the truncated kernel.
pub fn markov_mass(domain: &Domain, t: f64, x: &[f64], tol: f64) -> Result<f64> {
    let plan = domain.choose_truncation(t, tol)?;
    let kernel = domain.heat_kernel(t, &plan)?;
    let cub = domain.cubature(plan.cutoff() + 2)?;
    let mut vals = Vec::with_capacity(cub.len());
    for (y, w) in cub.points().iter().zip(cub.weights()) {
        vals.push(w * kernel.eval(x, y)?);
    }
    Ok(crate::oracle::compensated_sum(vals))
}

/// `(∫ K_s(x, z) K_t(z, y) dν(z), K_{s+t}(x, y))`.
pub fn semigroup_pair(
    domain: &Domain,
    s: f64,
    t: f64,
    x: &[f64],
    y: &[f64],
    tol: f64,
) -> Result<(f64, f64)> {
    let ps = domain.choose_truncation(s, tol)?;
    let pt = domain.choose_truncation(t, tol)?;
    let pst = domain.choose_truncation(s + t, tol)?;
    let ks = domain.heat_kernel(s, &ps)?;
    let kt = domain.heat_kernel(t, &pt)?;
    let kst = domain.heat_kernel(s + t, &pst)?;
    let cub = domain.cubature(ps.cutoff() + pt.cutoff() + 2)?;
    let mut vals = Vec::with_capacity(cub.len());
    for (z, w) in cub.points().iter().zip(cub.weights()) {
        vals.push(w * ks.eval(x, z)? * kt.eval(z, y)?);
    }
    Ok((crate::oracle::compensated_sum(vals), kst.eval(x, y)?))
}

fn jacobi_orthonormality(fault: Option<Fault>) -> SuiteReport {
    let mut tally = Tally::new("jacobi-orthonormality");
    let params = [
        (0.0, 0.0),
        (-0.4, 0.4),
        (1.5, -0.4),
        (0.4, 1.5),
        (-0.5, -0.5),
    ];
    let n_max = 12;
    for &(a, b) in &params {
        let w = IntervalWeight::new(a, b).expect("valid exponents");
        let Some(rule) = tally.result(gauss_jacobi_rule(a, b, 64), "gauss rule") else {
            continue;
        };
        let norm = |n: usize| {
            let h = jacobi_norm_sq(w, n);
            match fault {
                Some(Fault::NormConstant) if n >= 1 => h * (1.0 + 1e-6),
                _ => h,
            }
        };
        let vals: Vec<Vec<f64>> = (0..=n_max)
            .map(|n| {
                let s = norm(n).sqrt();
                rule.nodes()
                    .iter()
                    .map(|&x| eval_jacobi(w, n, x).unwrap_or(f64::NAN) / s)
                    .collect()
            })
            .collect();
        for i in 0..=n_max {
            for j in 0..=i {
                let g: f64 = rule
                    .weights()
                    .iter()
                    .enumerate()
                    .map(|(k, wk)| wk * vals[i][k] * vals[j][k])
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                tally.check((g - want).abs() <= 1e-10, || {
                    format!("(α,β)=({a},{b}) G[{i}][{j}] = {g}")
                });
            }
        }
    }
    tally.finish()
}

fn gegenbauer_identity() -> SuiteReport {
    let mut tally = Tally::new("gegenbauer-norm-identity");
    for &lambda in &[0.5, 1.0, 2.5] {
        for n in 0..=20 {
            if let Some((lhs, rhs)) =
                tally.result(gegenbauer_norm_identity_check(lambda, n), "identity")
            {
                tally.check((lhs - rhs).abs() <= 1e-11 * rhs.abs(), || {
                    format!("λ={lambda} n={n}: {lhs} vs {rhs}")
                });
            }
        }
    }
    tally.finish()
}

fn interval_golden() -> SuiteReport {
    let mut tally = Tally::new("interval-golden");
    let w = IntervalWeight::lebesgue();
    // direct summation of Σ e^{-n(n+1)} (2n+1)/2
    let direct: f64 = (0..40)
        .map(|n| (-(n * (n + 1)) as f64).exp() * (2 * n + 1) as f64 / 2.0)
        .sum();
    tally.close(direct, 0.7092216, 1e-6, || "direct sum".into());
    let plan = crate::heat1d::choose_truncation(w, 1.0, 1e-12);
    if let Some(plan) = tally.result(plan, "plan") {
        if let Some(v) = tally.result(heat_kernel_interval(w, 1.0, 1.0, 1.0, &plan), "kernel") {
            tally.close(v, direct, 1e-12, || "kernel vs direct".into());
        }
    }
    tally.finish()
}

fn dual_path(
    name: &'static str,
    domains: &[Domain],
    times: &[f64],
    pairs: usize,
    tol: f64,
) -> SuiteReport {
    let mut tally = Tally::new(name);
    for (k, dom) in domains.iter().enumerate() {
        let pts = sample_points(dom, 2 * pairs, 100 + k as u64);
        for &t in times {
            let Some(plan) = tally.result(dom.choose_truncation(t, 1e-14), "plan") else {
                continue;
            };
            let Some(kernel) = tally.result(dom.heat_kernel(t, &plan), "kernel") else {
                continue;
            };
            for p in pts.chunks(2) {
                let a = kernel.eval(&p[0], &p[1]);
                let b = dom.heat_kernel_series(t, &p[0], &p[1], &plan);
                if let (Some(a), Some(b)) = (tally.result(a, "integral"), tally.result(b, "series"))
                {
                    tally.check((a - b).abs() <= tol, || {
                        format!("{dom:?} t={t} {p:?}: {a} vs {b}")
                    });
                }
            }
        }
    }
    tally.finish()
}

fn markov_and_semigroup(domains: &[Domain], times: &[f64]) -> SuiteReport {
    let mut tally = Tally::new("markov-semigroup");
    for (k, dom) in domains.iter().enumerate() {
        let pts = sample_points(dom, 3, 200 + k as u64);
        for &t in times {
            for x in &pts {
                if let Some(m) = tally.result(markov_mass(dom, t, x, 1e-13), "markov") {
                    tally.check((m - 1.0).abs() <= 1e-8, || {
                        format!("{dom:?} t={t} x={x:?}: mass {m}")
                    });
                }
            }
            for &s in times {
                if let Some((a, b)) = tally.result(
                    semigroup_pair(dom, s, t, &pts[1], &pts[2], 1e-13),
                    "semigroup",
                ) {
                    tally.check((a - b).abs() <= 1e-7 * b.abs().max(1.0), || {
                        format!("{dom:?} s={s} t={t}: {a} vs {b}")
                    });
                }
            }
        }
    }
    tally.finish()
}

fn oracle_projector(domains: &[Domain], n_max: usize) -> SuiteReport {
    let mut tally = Tally::new("oracle-projector");
    for (k, dom) in domains.iter().enumerate() {
        let Some(basis) = tally.result(gram_schmidt_basis(dom, n_max), "basis") else {
            continue;
        };
        let pts = sample_points(dom, 4, 300 + k as u64);
        for n in 0..=n_max {
            for x in &pts {
                for y in &pts {
                    let a = projector_oracle(&basis, n, x, y);
                    let b = dom.projector(n, x, y);
                    if let (Some(a), Some(b)) =
                        (tally.result(a, "oracle"), tally.result(b, "closed"))
                    {
                        tally.close(a, b, 1e-9, || format!("{dom:?} n={n}"));
                    }
                }
            }
        }
    }
    tally.finish()
}

fn eigenspaces(domains: &[Domain], n_max: usize) -> SuiteReport {
    let mut tally = Tally::new("eigenspaces");
    for dom in domains {
        let Some(basis) = tally.result(gram_schmidt_basis(dom, n_max), "basis") else {
            continue;
        };
        for n in 0..=n_max {
            for p in basis.level(n).unwrap_or(&[]) {
                let err = apply_generator(dom, p).max_coeff_diff(&p.scale(-dom.eigen_rate(n)));
                tally.check(err <= 1e-9 * p.max_abs_coeff().max(1.0), || {
                    format!("{dom:?} n={n}: {err}")
                });
            }
        }
    }
    tally.finish()
}

/// Random polynomial of degree `≤ deg` with coefficients in `[-1, 1]`.
pub fn random_poly<R: Rng>(d: usize, deg: u32, rng: &mut R) -> MultiPoly {
    let mut p = MultiPoly::zero(d);
    for n in 0..=deg {
        for e in monomials_of_degree(d, n) {
            p.add_term(e, rng.random_range(-1.0..1.0));
        }
    }
    p
}

fn green(domains: &[Domain], pairs: usize) -> SuiteReport {
    let mut tally = Tally::new("green-identity");
    for (k, dom) in domains.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + k as u64);
        for _ in 0..pairs {
            let df = rng.random_range(1..=5u32);
            let dg = rng.random_range(1..=5u32);
            let f = random_poly(dom.dim(), df, &mut rng);
            let g = random_poly(dom.dim(), dg, &mut rng);
            if let Some((l, r)) = tally.result(green_identity_check(dom, &f, &g), "green") {
                tally.check(
                    (l - r).abs() <= 1e-9 * l.abs().max(r.abs()).max(1e-300),
                    || format!("{dom:?}: {l} vs {r}"),
                );
            }
        }
    }
    tally.finish()
}

fn envelope(domains: &[Domain], pairs_per_t: usize) -> SuiteReport {
    let mut tally = Tally::new("envelope");
    for dom in domains {
        let config = ScanConfig {
            pairs_per_t,
            ..ScanConfig::default()
        };
        if let Some(r) = tally.result(run_scan(dom, &config), "scan") {
            tally.check(r.passed(), || {
                format!(
                    "{dom:?}: quarantined {}/{}, violations {}",
                    r.training.quarantined.len(),
                    r.holdout.quarantined.len(),
                    r.check.violations
                )
            });
        }
    }
    tally.finish()
}

fn ball(mu: f64, d: usize) -> Domain {
    Domain::Ball(BallWeight::new(mu, d).expect("valid ball weight"))
}

fn simplex(kappa: &[f64]) -> Domain {
    Domain::Simplex(SimplexWeight::new(kappa.to_vec()).expect("valid simplex weight"))
}

fn interval(a: f64, b: f64) -> Domain {
    Domain::Interval(IntervalWeight::new(a, b).expect("valid interval weight"))
}

/// Runs the suites of `level`, in a fixed order.
pub fn run_selftest(level: Level, fault: Option<Fault>) -> Vec<SuiteReport> {
    let mut out = vec![
        jacobi_orthonormality(fault),
        gegenbauer_identity(),
        interval_golden(),
    ];
    match level {
        Level::Quick => {
            out.push(dual_path(
                "ball-dual-path",
                &[ball(0.5, 2), ball(1.0, 1)],
                &[0.1, 1.0],
                5,
                1e-10,
            ));
            out.push(markov_and_semigroup(
                &[interval(0.0, 0.0), ball(1.0, 2)],
                &[0.4],
            ));
            out.push(oracle_projector(
                &[ball(1.0, 2), simplex(&[1.0, 0.5, 0.0])],
                3,
            ));
            out.push(eigenspaces(&[ball(1.0, 2), simplex(&[1.0, 1.0, 1.0])], 3));
            out.push(green(&[ball(1.0, 2), simplex(&[1.0, 1.0, 1.0])], 5));
            out.push(envelope(&[interval(0.0, 0.0)], 200));
        }
        Level::Full => {
            let balls: Vec<Domain> = [0.0, 0.5, 1.0, 2.0]
                .iter()
                .flat_map(|&mu| (1..=3).map(move |d| ball(mu, d)))
                .collect();
            out.push(dual_path(
                "ball-dual-path",
                &balls,
                &[0.1, 0.5, 1.0],
                20,
                1e-10,
            ));
            let simplices = [
                simplex(&[0.5, 0.5]),
                simplex(&[1.0, 0.0]),
                simplex(&[1.0, 0.5, 0.0]),
                simplex(&[0.0, 0.0, 0.0]),
            ];
            out.push(dual_path(
                "simplex-dual-path",
                &simplices,
                &[0.1, 0.5, 1.0],
                20,
                1e-9,
            ));
            out.push(markov_and_semigroup(
                &[interval(0.0, 0.0), ball(1.0, 2), simplex(&[1.0, 0.5, 0.0])],
                &[0.1, 0.4],
            ));
            let shared = [
                ball(0.0, 2),
                ball(1.0, 2),
                ball(0.5, 1),
                simplex(&[1.0, 0.5, 0.0]),
                simplex(&[0.5, 0.5]),
            ];
            out.push(oracle_projector(&shared, 4));
            out.push(eigenspaces(&shared, 4));
            out.push(green(
                &[interval(0.3, -0.4), ball(1.0, 2), simplex(&[1.0, 1.0, 1.0])],
                25,
            ));
            out.push(envelope(
                &[
                    interval(0.0, 0.0),
                    interval(1.5, -0.5),
                    ball(0.0, 2),
                    ball(1.0, 2),
                    simplex(&[1.0, 0.5, 0.0]),
                ],
                500,
            ));
        }
    }
    out
}
