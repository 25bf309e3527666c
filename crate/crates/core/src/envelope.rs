//! Empirical two-sided Gaussian envelope of the normalized heat kernel
//!
//! `G(t, x, y) = K(t, x, y) sqrt(V̂(x, √t) V̂(y, √t))` against `u = d(x, y)²/t`:
//! sample point pairs, fit `c1 e^{-u/c2} ≤ G ≤ c3 e^{-u/c4}` by a grid minimax,
//! and count violations on a fresh holdout.
//!
//! All three domains embed isometrically (for their distance) in a unit
//! sphere: the interval and ball through `x ↦ (x, sqrt(1-‖x‖²))`, the simplex
//! through `x ↦ sqrt` of the barycentric coordinates. Pairs are drawn by a
//! geodesic step of prescribed length from a boundary-stratified base point,
//! then folded back into the domain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, HeatKernel};
use crate::error::{Error, Result};
use crate::heat1d::TruncationPlan;

/// Log-space tolerance below which a holdout excess counts as roundoff.
pub const VIOLATION_TOL: f64 = 1e-12;

/// Smallest and largest candidate `c2`, `c4`.
pub const C_GRID_RANGE: (f64, f64) = (0.05, 50.0);

/// `m` log-uniform points covering `[0.05, 50]`.
pub fn default_c_grid(m: usize) -> Vec<f64> {
    let (lo, hi) = C_GRID_RANGE;
    let m = m.max(2);
    (0..m)
        .map(|k| lo * (hi / lo).powf(k as f64 / (m - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSample {
    pub u: f64,
    pub log_g: f64,
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// A pair whose kernel value fell at or below the truncation slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarantinedSample {
    pub t: f64,
    pub kernel: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub samples: Vec<EnvelopeSample>,
    pub quarantined: Vec<QuarantinedSample>,
}

/// Which function plays the role of `K` in a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSource {
    Heat,
    /// `K = (V̂(x,√t) V̂(y,√t))^{-1/2}`: the right on-diagonal size and no
    /// off-diagonal decay, so `G ≡ 1` for every `u`.
    NegativeControl,
}

/// Boundary-stratified random pairs plus deterministic anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSampler {
    pub seed: u64,
    pub pairs_per_t: usize,
    /// Largest `u = d²/t` requested.
    pub u_max: f64,
    pub anchors: bool,
}

impl PairSampler {
    pub fn new(seed: u64, pairs_per_t: usize, u_max: f64) -> Self {
        Self {
            seed,
            pairs_per_t,
            u_max,
            anchors: true,
        }
    }

    /// Pairs for the `index`-th time `t`. Depends only on `(seed, index, t)`.
    pub fn pairs(&self, domain: &Domain, t: f64, index: usize) -> Vec<PointPair> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64 + 1);
        let sphere = SphereModel::of(domain);
        let mut out = Vec::with_capacity(self.pairs_per_t + 64);
        if self.anchors {
            for x in sphere.anchor_points() {
                out.push(sphere.pair(&x, &x));
                for frac in [0.25, 0.5, 1.0] {
                    let theta = (frac * self.u_max * t).sqrt();
                    let y = sphere.step(&x, &sphere.fixed_direction(&x), theta);
                    out.push(sphere.pair(&x, &y));
                }
            }
        }
        for _ in 0..self.pairs_per_t {
            let x = sphere.random_base(&mut rng);
            let u = if rng.random::<f64>() < 0.2 {
                0.0
            } else {
                self.u_max * rng.random::<f64>()
            };
            let theta = (u * t).sqrt();
            let dir = sphere.random_direction(&x, &mut rng);
            let y = sphere.step(&x, &dir, theta);
            out.push(sphere.pair(&x, &y));
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
enum SphereModel {
    /// Interval or ball: the last lifted coordinate is `sqrt(1-‖x‖²) ≥ 0`.
    Hemisphere(usize),
    /// Simplex: all `d+1` lifted coordinates are nonnegative.
    Orthant(usize),
}

fn normalize(v: &mut [f64]) -> bool {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n > 1e-300 {
        v.iter_mut().for_each(|a| *a /= n);
        true
    } else {
        false
    }
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box–Muller; one draw per call keeps the stream layout simple.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Draw of the boundary depth `δ`: exact boundary, log-uniform, or bulk.
fn depth<R: Rng>(rng: &mut R) -> Option<f64> {
    let s: f64 = rng.random();
    if s < 0.15 {
        Some(0.0)
    } else if s < 0.6 {
        Some(10f64.powf(-6.0 * rng.random::<f64>()))
    } else {
        None
    }
}

impl SphereModel {
    fn of(domain: &Domain) -> Self {
        match domain {
            Domain::Interval(_) => SphereModel::Hemisphere(1),
            Domain::Ball(w) => SphereModel::Hemisphere(w.dim()),
            Domain::Simplex(w) => SphereModel::Orthant(w.dim()),
        }
    }

    fn d(&self) -> usize {
        match *self {
            SphereModel::Hemisphere(d) | SphereModel::Orthant(d) => d,
        }
    }

    fn lift(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SphereModel::Hemisphere(_) => {
                let mut p = x.to_vec();
                p.push((1.0 - x.iter().map(|a| a * a).sum::<f64>()).max(0.0).sqrt());
                p
            }
            SphereModel::Orthant(_) => {
                let mut p: Vec<f64> = x.iter().map(|a| a.max(0.0).sqrt()).collect();
                p.push((1.0 - x.iter().sum::<f64>()).max(0.0).sqrt());
                p
            }
        }
    }

    fn unlift(&self, p: &[f64]) -> Vec<f64> {
        let d = self.d();
        match self {
            SphereModel::Hemisphere(_) => p[..d].iter().map(|a| a.clamp(-1.0, 1.0)).collect(),
            SphereModel::Orthant(_) => {
                let total: f64 = p.iter().map(|a| a * a).sum();
                p[..d].iter().map(|a| a * a / total).collect()
            }
        }
    }

    fn fold(&self, p: &mut [f64]) {
        match self {
            SphereModel::Hemisphere(d) => p[*d] = p[*d].abs(),
            SphereModel::Orthant(_) => p.iter_mut().for_each(|a| *a = a.abs()),
        }
    }

    fn pair(&self, x: &[f64], y: &[f64]) -> PointPair {
        PointPair {
            x: x.to_vec(),
            y: y.to_vec(),
        }
    }

    /// Geodesic step of length `theta` from `x` along tangent `dir`, folded
    /// back into the domain.
    fn step(&self, x: &[f64], dir: &[f64], theta: f64) -> Vec<f64> {
        if theta == 0.0 {
            return x.to_vec();
        }
        let p = self.lift(x);
        let theta = theta.min(std::f64::consts::PI);
        let mut q: Vec<f64> = p
            .iter()
            .zip(dir)
            .map(|(a, e)| theta.cos() * a + theta.sin() * e)
            .collect();
        self.fold(&mut q);
        self.unlift(&q)
    }

    fn tangent(&self, x: &[f64], mut v: Vec<f64>) -> Option<Vec<f64>> {
        let p = self.lift(x);
        let dot: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(&p).for_each(|(a, b)| *a -= dot * b);
        normalize(&mut v).then_some(v)
    }

    fn random_direction<R: Rng>(&self, x: &[f64], rng: &mut R) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..=self.d()).map(|_| gaussian(rng)).collect();
            if let Some(e) = self.tangent(x, v) {
                return e;
            }
        }
    }

    /// A tangent direction depending only on `x`, used by the anchors.
    fn fixed_direction(&self, x: &[f64]) -> Vec<f64> {
        let m = self.d() + 1;
        let mut toward = vec![1.0; m];
        match self {
            SphereModel::Hemisphere(d) => toward[*d] = 0.5,
            SphereModel::Orthant(_) => toward[0] = 2.0,
        }
        self.tangent(x, toward)
            .or_else(|| self.tangent(x, (0..m).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect()))
            .or_else(|| self.tangent(x, (0..m).map(|k| if k == 1 { 1.0 } else { 0.0 }).collect()))
            .expect("two independent vectors cannot both be parallel to x")
    }

    /// Random local move of a pair: `x` alone, `y` alone, both by the same
    /// ambient displacement (which keeps diagonal pairs diagonal), or a snap
    /// of `x` or `y` onto the nearest boundary face.
    fn perturb<R: Rng>(
        &self,
        x: &[f64],
        y: &[f64],
        sigma: f64,
        rng: &mut R,
    ) -> (Vec<f64>, Vec<f64>) {
        let theta = sigma * gaussian(rng).abs();
        let v: Vec<f64> = (0..=self.d()).map(|_| gaussian(rng)).collect();
        let along = |p: &[f64]| match self.tangent(p, v.clone()) {
            Some(e) => self.step(p, &e, theta),
            None => p.to_vec(),
        };
        if x == y {
            // diagonal pairs mostly stay diagonal
            return match rng.random_range(0..10u32) {
                0 => (along(x), y.to_vec()),
                1 => {
                    let s = self.snap(x);
                    (s.clone(), s)
                }
                _ => {
                    let n = along(x);
                    (n.clone(), n)
                }
            };
        }
        match rng.random_range(0..8u32) {
            0 | 1 => (along(x), y.to_vec()),
            2 | 3 => (x.to_vec(), along(y)),
            4 => (self.snap(x), y.to_vec()),
            5 => (x.to_vec(), self.snap(y)),
            _ => (along(x), along(y)),
        }
    }

    /// Nearest point on the boundary face closest to `x`.
    fn snap(&self, x: &[f64]) -> Vec<f64> {
        match *self {
            SphereModel::Hemisphere(_) => {
                let n = x.iter().map(|a| a * a).sum::<f64>().sqrt();
                if n == 0.0 {
                    return x.to_vec();
                }
                x.iter().map(|a| a / n).collect()
            }
            SphereModel::Orthant(d) => {
                let mut bary: Vec<f64> = x.to_vec();
                bary.push((1.0 - x.iter().sum::<f64>()).max(0.0));
                let (imin, _) = bary
                    .iter()
                    .enumerate()
                    .fold(
                        (0, f64::INFINITY),
                        |acc, (i, &b)| if b < acc.1 { (i, b) } else { acc },
                    );
                bary[imin] = 0.0;
                let total: f64 = bary.iter().sum();
                bary[..d].iter().map(|b| b / total).collect()
            }
        }
    }

    fn random_base<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match *self {
            SphereModel::Hemisphere(d) => {
                let mut dir: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
                if !normalize(&mut dir) {
                    dir = vec![0.0; d];
                    dir[0] = 1.0;
                }
                let r = match depth(rng) {
                    Some(delta) => 1.0 - delta,
                    None => rng.random::<f64>().powf(1.0 / d as f64),
                };
                dir.iter().map(|a| a * r).collect()
            }
            SphereModel::Orthant(d) => {
                let mut bary: Vec<f64> =
                    (0..=d).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                if let Some(delta) = depth(rng) {
                    // shrink a random proper subset of the coordinates
                    let keep = rng.random_range(0..=d);
                    for (k, b) in bary.iter_mut().enumerate() {
                        if k != keep && rng.random::<f64>() < 0.5 {
                            *b *= delta;
                        }
                    }
                }
                let total: f64 = bary.iter().sum();
                bary[..d].iter().map(|b| b / total).collect()
            }
        }
    }

    fn anchor_points(&self) -> Vec<Vec<f64>> {
        match *self {
            SphereModel::Hemisphere(d) => {
                let mut pts = vec![vec![0.0; d]];
                for r in [0.5, 0.9, 0.99, 0.9999, 1.0] {
                    let mut p = vec![0.0; d];
                    p[0] = r;
                    pts.push(p.clone());
                    p[0] = -r;
                    pts.push(p);
                }
                if d > 1 {
                    let c = 1.0 / (d as f64).sqrt();
                    pts.push(vec![c; d]);
                }
                pts
            }
            SphereModel::Orthant(d) => {
                let mut bary_pts: Vec<Vec<f64>> = vec![vec![1.0 / (d + 1) as f64; d + 1]];
                for i in 0..=d {
                    let mut v = vec![0.0; d + 1];
                    v[i] = 1.0;
                    bary_pts.push(v);
                    for j in (i + 1)..=d {
                        let mut e = vec![0.0; d + 1];
                        e[i] = 0.5;
                        e[j] = 0.5;
                        bary_pts.push(e);
                    }
                    if d > 1 {
                        let mut f = vec![1.0 / d as f64; d + 1];
                        f[i] = 0.0;
                        bary_pts.push(f);
                    }
                }
                bary_pts.into_iter().map(|b| b[..d].to_vec()).collect()
            }
        }
    }
}

fn volume(domain: &Domain, x: &[f64], r: f64) -> Result<f64> {
    domain.volume_hat(x, r.min(std::f64::consts::PI))
}

/// Kernels for a list of times, each truncated by its own plan.
struct TimedKernels<'a> {
    domain: &'a Domain,
    source: KernelSource,
    t_list: &'a [f64],
    plans: &'a [TruncationPlan],
    kernels: Vec<HeatKernel>,
}

type Evaluated = std::result::Result<EnvelopeSample, QuarantinedSample>;

impl<'a> TimedKernels<'a> {
    fn new(
        domain: &'a Domain,
        source: KernelSource,
        t_list: &'a [f64],
        plans: &'a [TruncationPlan],
    ) -> Result<Self> {
        if t_list.is_empty() {
            return Err(Error::Envelope("empty list of times".into()));
        }
        if plans.len() != t_list.len() {
            return Err(Error::Envelope(
                "one truncation plan per time is required".into(),
            ));
        }
        for (&t, plan) in t_list.iter().zip(plans) {
            if !(t >= plan.t_min() && t <= 1.0) {
                return Err(Error::Envelope(format!(
                    "t = {t} lies outside [{}, 1]",
                    plan.t_min()
                )));
            }
        }
        let kernels = t_list
            .iter()
            .zip(plans)
            .map(|(&t, plan)| domain.heat_kernel(t, plan))
            .collect::<Result<_>>()?;
        Ok(Self {
            domain,
            source,
            t_list,
            plans,
            kernels,
        })
    }

    fn evaluate(&self, k: usize, x: &[f64], y: &[f64]) -> Result<Evaluated> {
        let t = self.t_list[k];
        self.domain.validate_point(x)?;
        self.domain.validate_point(y)?;
        let r = t.sqrt();
        let vol = volume(self.domain, x, r)? * volume(self.domain, y, r)?;
        let kernel = match self.source {
            KernelSource::Heat => self.kernels[k].eval(x, y)?,
            KernelSource::NegativeControl => 1.0 / vol.sqrt(),
        };
        if !(kernel > self.plans[k].tail_tol()) {
            return Ok(Err(QuarantinedSample {
                t,
                kernel,
                x: x.to_vec(),
                y: y.to_vec(),
            }));
        }
        let dist = self.domain.distance(x, y)?;
        Ok(Ok(EnvelopeSample {
            u: dist * dist / t,
            log_g: kernel.ln() + 0.5 * vol.ln(),
            t,
            x: x.to_vec(),
            y: y.to_vec(),
        }))
    }
}

/// One sample per `(pair, t)`; `pairs[k]` are the pairs for `t_list[k]`, and
/// `plans[k]` truncates the kernel at that time.
///
/// Kernel values at or below the plan's `tail_tol` are quarantined. Evaluation
/// is parallel; the output order is the input order whatever the pool size.
pub fn sample_envelope(
    domain: &Domain,
    source: KernelSource,
    t_list: &[f64],
    pairs: &[Vec<PointPair>],
    plans: &[TruncationPlan],
) -> Result<SampleSet> {
    let kernels = TimedKernels::new(domain, source, t_list, plans)?;
    if pairs.len() != t_list.len() {
        return Err(Error::Envelope("one pair list per time is required".into()));
    }
    let jobs: Vec<(usize, &PointPair)> = pairs
        .iter()
        .enumerate()
        .flat_map(|(k, ps)| ps.iter().map(move |p| (k, p)))
        .collect();
    let evaluated: Vec<Result<Evaluated>> = jobs
        .par_iter()
        .map(|&(k, pair)| kernels.evaluate(k, &pair.x, &pair.y))
        .collect();

    let mut set = SampleSet::default();
    for e in evaluated {
        match e? {
            Ok(s) => set.samples.push(s),
            Err(q) => set.quarantined.push(q),
        }
    }
    Ok(set)
}

/// Which side of the sandwich a refinement pushes on.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Side {
    /// maximize `logG + u/c4`
    Upper(f64),
    /// minimize `logG + u/c2`
    Lower(f64),
}

impl Side {
    /// Larger is more extreme.
    fn score(&self, s: &EnvelopeSample) -> f64 {
        match *self {
            Side::Upper(c4) => s.log_g + s.u / c4,
            Side::Lower(c2) => -(s.log_g + s.u / c2),
        }
    }
}

/// Local pattern search from the `starts` most extreme samples for `side`,
/// keeping `u ≤ u_cap` and `t` fixed. Returns the improved samples.
///
/// Random samples rarely land on a smooth interior extremum; this pass moves
/// the training set onto the local extrema so that a fresh holdout cannot beat
/// them by chance.
fn refine_side(
    kernels: &TimedKernels<'_>,
    samples: &[EnvelopeSample],
    side: Side,
    u_cap: f64,
    starts: usize,
    seed: u64,
) -> Result<Vec<EnvelopeSample>> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| {
        side.score(&samples[b])
            .total_cmp(&side.score(&samples[a]))
            .then(a.cmp(&b))
    });
    let mut picked: Vec<&EnvelopeSample> = Vec::with_capacity(starts);
    for &i in &order {
        if picked.len() == starts {
            break;
        }
        let s = &samples[i];
        if !picked
            .iter()
            .any(|p| p.t == s.t && p.x == s.x && p.y == s.y)
        {
            picked.push(s);
        }
    }
    let sphere = SphereModel::of(kernels.domain);
    let results: Vec<Result<Option<EnvelopeSample>>> = picked
        .par_iter()
        .enumerate()
        .map(|(j, start)| {
            let k = kernels
                .t_list
                .iter()
                .position(|&t| t == start.t)
                .expect("sample time from the list");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64 + 1);
            let mut best = (*start).clone();
            let mut best_score = side.score(&best);
            let mut improved = false;
            let mut sigma = 0.1 * start.t.sqrt();
            let floor = 1e-9 * start.t.sqrt();
            for _ in 0..REFINE_ITERS {
                if sigma < floor {
                    break;
                }
                let (x, y) = sphere.perturb(&best.x, &best.y, sigma, &mut rng);
                let cand = match kernels.evaluate(k, &x, &y)? {
                    Ok(c) if c.u <= u_cap => c,
                    _ => {
                        sigma *= 0.7;
                        continue;
                    }
                };
                let sc = side.score(&cand);
                if sc > best_score {
                    best_score = sc;
                    best = cand;
                    improved = true;
                    sigma *= 1.5;
                } else {
                    sigma *= 0.7;
                }
            }
            Ok(improved.then_some(best))
        })
        .collect();
    let mut out = Vec::new();
    for r in results {
        if let Some(s) = r? {
            out.push(s);
        }
    }
    Ok(out)
}

/// Evaluations per refinement start.
const REFINE_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub log_c1: f64,
    pub log_c3: f64,
    pub n_samples: usize,
    pub n_quarantined: usize,
    /// `max (logG - log c3 + u/c4)`, zero by construction.
    pub max_upper_slack: f64,
    /// `max (log c1 - u/c2 - logG)`, zero by construction.
    pub max_lower_slack: f64,
}

impl EnvelopeFit {
    pub fn upper_excess(&self, s: &EnvelopeSample) -> f64 {
        s.log_g - (self.log_c3 - s.u / self.c4)
    }

    pub fn lower_excess(&self, s: &EnvelopeSample) -> f64 {
        (self.log_c1 - s.u / self.c2) - s.log_g
    }

    /// `c3/c1`.
    pub fn ratio(&self) -> f64 {
        (self.log_c3 - self.log_c1).exp()
    }
}

/// Grid minimax fit of the sandwich. The reductions are `max`/`min`, so the
/// result does not depend on sample order.
pub fn fit_envelope(
    samples: &[EnvelopeSample],
    n_quarantined: usize,
    c_grid: &[f64],
) -> Result<EnvelopeFit> {
    if samples.is_empty() {
        return Err(Error::Envelope(format!(
            "no retained samples ({n_quarantined} quarantined)"
        )));
    }
    if c_grid.is_empty() || c_grid.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
        return Err(Error::Envelope(
            "c grid must hold positive finite values".into(),
        ));
    }
    let mut grid = c_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let upper = |c4: f64| {
        samples
            .iter()
            .map(|s| s.log_g + s.u / c4)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let lower = |c2: f64| {
        samples
            .iter()
            .map(|s| s.log_g + s.u / c2)
            .fold(f64::INFINITY, f64::min)
    };

    // The sandwich ratio separates: minimize log c3 over c4, maximize log c1 over c2.
    // Strict comparisons keep the smallest c on ties.
    let mut best_upper = (grid[0], upper(grid[0]));
    for &c in &grid[1..] {
        let v = upper(c);
        if v < best_upper.1 {
            best_upper = (c, v);
        }
    }
    let mut best_lower = (grid[0], lower(grid[0]));
    for &c in &grid[1..] {
        let v = lower(c);
        if v > best_lower.1 {
            best_lower = (c, v);
        }
    }
    let (c4, log_c3) = best_upper;
    let (c2, log_c1) = best_lower;
    let mut fit = EnvelopeFit {
        c1: log_c1.exp(),
        c2,
        c3: log_c3.exp(),
        c4,
        log_c1,
        log_c3,
        n_samples: samples.len(),
        n_quarantined,
        max_upper_slack: 0.0,
        max_lower_slack: 0.0,
    };
    fit.max_upper_slack = samples
        .iter()
        .map(|s| fit.upper_excess(s))
        .fold(f64::NEG_INFINITY, f64::max);
    fit.max_lower_slack = samples
        .iter()
        .map(|s| fit.lower_excess(s))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub n_holdout: usize,
    pub violations: usize,
    pub violation_fraction: f64,
    pub worst_upper_slack: f64,
    pub worst_lower_slack: f64,
}

impl EnvelopeCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Holdout samples outside the fitted sandwich by more than [`VIOLATION_TOL`].
pub fn check_envelope(fit: &EnvelopeFit, holdout: &[EnvelopeSample]) -> EnvelopeCheck {
    let mut violations = 0;
    let mut worst_upper = f64::NEG_INFINITY;
    let mut worst_lower = f64::NEG_INFINITY;
    for s in holdout {
        let up = fit.upper_excess(s);
        let lo = fit.lower_excess(s);
        worst_upper = worst_upper.max(up);
        worst_lower = worst_lower.max(lo);
        if up > VIOLATION_TOL || lo > VIOLATION_TOL {
            violations += 1;
        }
    }
    EnvelopeCheck {
        n_holdout: holdout.len(),
        violations,
        violation_fraction: if holdout.is_empty() {
            0.0
        } else {
            violations as f64 / holdout.len() as f64
        },
        worst_upper_slack: worst_upper,
        worst_lower_slack: worst_lower,
    }
}

/// Complete scan: training set, fit, fresh-seed holdout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub t_list: Vec<f64>,
    pub tol: f64,
    pub seed: u64,
    pub pairs_per_t: usize,
    /// `u` range of the training pairs.
    pub u_train: f64,
    /// `u` range of the holdout pairs; wider than training to test extrapolation.
    pub u_holdout: f64,
    pub c_grid_points: usize,
    /// Local refinement starts per side and round; zero disables refinement.
    pub refine_starts: usize,
    pub source: KernelSource,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            t_list: vec![0.01, 0.0316, 0.1, 0.316, 1.0],
            tol: 1e-12,
            seed: 1,
            pairs_per_t: 500,
            u_train: 16.0,
            u_holdout: 24.0,
            c_grid_points: 61,
            refine_starts: 12,
            source: KernelSource::Heat,
        }
    }
}

impl ScanConfig {
    /// Seed of the holdout sampler, distinct from the training seed.
    pub fn holdout_seed(&self) -> u64 {
        self.seed ^ 0x9e37_79b9_7f4a_7c15
    }

    fn refine_seed(&self, round: usize, side: usize) -> u64 {
        self.seed.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ ((round as u64) << 8 | side as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub config: ScanConfig,
    /// Cutoff degree used at each time of `config.t_list`.
    pub cutoffs: Vec<usize>,
    pub training: SampleSet,
    /// Training samples contributed by local refinement (included in `training`).
    pub n_refined: usize,
    pub holdout: SampleSet,
    pub fit: EnvelopeFit,
    pub check: EnvelopeCheck,
}

impl ScanResult {
    /// Zero quarantined values, zero holdout violations and a finite `c3/c1`.
    pub fn passed(&self) -> bool {
        self.training.quarantined.is_empty()
            && self.holdout.quarantined.is_empty()
            && self.check.passed()
            && self.fit.ratio().is_finite()
    }
}

/// Rounds of refine-and-refit.
const REFINE_ROUNDS: usize = 3;

pub fn run_scan(domain: &Domain, config: &ScanConfig) -> Result<ScanResult> {
    if config.t_list.is_empty() {
        return Err(Error::Envelope("empty list of times".into()));
    }
    let plans: Vec<TruncationPlan> = config
        .t_list
        .iter()
        .map(|&t| domain.choose_truncation(t, config.tol))
        .collect::<Result<_>>()?;
    let kernels = TimedKernels::new(domain, config.source, &config.t_list, &plans)?;
    let draw = |seed: u64, u_max: f64| -> Vec<Vec<PointPair>> {
        let sampler = PairSampler::new(seed, config.pairs_per_t, u_max);
        config
            .t_list
            .iter()
            .enumerate()
            .map(|(k, &t)| sampler.pairs(domain, t, k))
            .collect()
    };
    let grid = default_c_grid(config.c_grid_points);

    let mut training = sample_envelope(
        domain,
        config.source,
        &config.t_list,
        &draw(config.seed, config.u_train),
        &plans,
    )?;
    let mut fit = fit_envelope(&training.samples, training.quarantined.len(), &grid)?;
    let mut n_refined = 0;
    if config.refine_starts > 0 {
        for round in 0..REFINE_ROUNDS {
            let upper = refine_side(
                &kernels,
                &training.samples,
                Side::Upper(fit.c4),
                config.u_train,
                config.refine_starts,
                config.refine_seed(round, 0),
            )?;
            let lower = refine_side(
                &kernels,
                &training.samples,
                Side::Lower(fit.c2),
                config.u_train,
                config.refine_starts,
                config.refine_seed(round, 1),
            )?;
            let added = upper.len() + lower.len();
            n_refined += added;
            training.samples.extend(upper);
            training.samples.extend(lower);
            let next = fit_envelope(&training.samples, training.quarantined.len(), &grid)?;
            let settled = added == 0 || (next.c2 == fit.c2 && next.c4 == fit.c4 && round > 0);
            fit = next;
            if settled {
                break;
            }
        }
    }

    let holdout = sample_envelope(
        domain,
        config.source,
        &config.t_list,
        &draw(config.holdout_seed(), config.u_holdout),
        &plans,
    )?;
    let check = check_envelope(&fit, &holdout.samples);
    Ok(ScanResult {
        config: config.clone(),
        cutoffs: plans.iter().map(|p| p.cutoff()).collect(),
        training,
        n_refined,
        holdout,
        fit,
        check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::BallWeight;
    use crate::jacobi::IntervalWeight;
    use crate::simplex::SimplexWeight;

    fn sample(u: f64, log_g: f64) -> EnvelopeSample {
        EnvelopeSample {
            u,
            log_g,
            t: 1.0,
            x: vec![0.0],
            y: vec![0.0],
        }
    }

    #[test]
    fn single_sample_fit() {
        let fit = fit_envelope(&[sample(0.0, 0.0)], 0, &default_c_grid(11)).unwrap();
        assert_eq!((fit.c1, fit.c3), (1.0, 1.0));
        assert_eq!((fit.c2, fit.c4), (0.05, 0.05));
    }

    #[test]
    fn two_sample_fit() {
        let fit = fit_envelope(&[sample(0.0, 0.0), sample(1.0, -1.0)], 0, &[1.0]).unwrap();
        assert_eq!((fit.c1, fit.c3, fit.ratio()), (1.0, 1.0, 1.0));
    }

    #[test]
    fn empty_fit_is_an_error() {
        assert!(matches!(
            fit_envelope(&[], 4, &[1.0]),
            Err(Error::Envelope(_))
        ));
    }

    #[test]
    fn holdout_equal_to_training() {
        let s: Vec<_> = (0..20)
            .map(|k| sample(k as f64 * 0.3, -(k as f64) * 0.11 + (k % 3) as f64 * 0.05))
            .collect();
        let fit = fit_envelope(&s, 0, &default_c_grid(21)).unwrap();
        assert_eq!(check_envelope(&fit, &s).violations, 0);
        assert!(fit.max_upper_slack.abs() < 1e-15 && fit.max_lower_slack.abs() < 1e-15);
    }

    #[test]
    fn sampler_points_are_valid_and_deterministic() {
        let doms = [
            Domain::Interval(IntervalWeight::lebesgue()),
            Domain::Ball(BallWeight::new(1.0, 2).unwrap()),
            Domain::Ball(BallWeight::new(0.0, 3).unwrap()),
            Domain::Simplex(SimplexWeight::new(vec![1.0, 0.5, 0.0]).unwrap()),
        ];
        for dom in &doms {
            let s = PairSampler::new(3, 200, 16.0);
            let a = s.pairs(dom, 0.01, 0);
            assert_eq!(a, s.pairs(dom, 0.01, 0));
            assert_ne!(a, s.pairs(dom, 0.01, 1));
            for p in &a {
                dom.validate_point(&p.x).unwrap();
                dom.validate_point(&p.y).unwrap();
                let u = dom.distance(&p.x, &p.y).unwrap().powi(2) / 0.01;
                assert!(u <= 16.0 * (1.0 + 1e-9), "{dom:?} {p:?} {u}");
            }
        }
    }
}
