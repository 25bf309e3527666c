//! A weighted domain: interval, ball or simplex together with its weight.

use serde::{Deserialize, Serialize};

use crate::ball::{self, BallPoint, BallWeight};
use crate::cubature::Cubature;
use crate::error::{Error, Result};
use crate::heat1d::{self, TruncationPlan};
use crate::jacobi::{gauss_jacobi_rule, IntervalWeight};
use crate::simplex::{self, SimplexPoint, SimplexWeight};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "domain", rename_all = "lowercase")]
pub enum Domain {
    Interval(IntervalWeight),
    Ball(BallWeight),
    Simplex(SimplexWeight),
}

impl Domain {
    pub fn name(&self) -> &'static str {
        match self {
            Domain::Interval(_) => "interval",
            Domain::Ball(_) => "ball",
            Domain::Simplex(_) => "simplex",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval(_) => 1,
            Domain::Ball(w) => w.dim(),
            Domain::Simplex(w) => w.dim(),
        }
    }

    /// Magnitude of the eigenvalue on degree-n polynomials.
    pub fn eigen_rate(&self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            Domain::Interval(w) => nf * (nf + w.lambda()),
            Domain::Ball(w) => w.eigen_rate(n),
            Domain::Simplex(w) => w.eigen_rate(n),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Domain::Interval(w) => w.total_mass(),
            Domain::Ball(w) => w.total_mass(),
            Domain::Simplex(w) => w.total_mass(),
        }
    }

    /// Weighted rule exact for polynomials of total degree `≤ degree`.
    pub fn cubature(&self, degree: usize) -> Result<Cubature> {
        match self {
            Domain::Interval(w) => {
                let rule = gauss_jacobi_rule(w.alpha(), w.beta(), degree / 2 + 1)?;
                Ok(Cubature::from_rule(&rule))
            }
            Domain::Ball(w) => Cubature::ball(w.mu(), w.dim(), degree),
            Domain::Simplex(w) => Cubature::simplex(w.kappa(), degree),
        }
    }

    pub fn choose_truncation(&self, t: f64, tol: f64) -> Result<TruncationPlan> {
        match self {
            Domain::Interval(w) => heat1d::choose_truncation(*w, t, tol),
            Domain::Ball(w) => ball::choose_truncation(w, t, tol),
            Domain::Simplex(w) => simplex::choose_truncation(w, t, tol),
        }
    }

    /// Checks that `p` is a point of the domain and returns it unchanged.
    pub fn validate_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::Domain(format!(
                "expected {} coordinates, got {}",
                self.dim(),
                p.len()
            )));
        }
        match self {
            Domain::Interval(_) => crate::error::check_unit_interval("x", p[0]).map(|_| ()),
            Domain::Ball(_) => BallPoint::new(p.to_vec()).map(|_| ()),
            Domain::Simplex(_) => SimplexPoint::new(p.to_vec()).map(|_| ()),
        }
    }

    /// Geodesic-type distance of the domain.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            Domain::Interval(_) => heat1d::rho(x[0], y[0]),
            Domain::Ball(_) => {
                ball::dist_ball(&BallPoint::new(x.to_vec())?, &BallPoint::new(y.to_vec())?)
            }
            Domain::Simplex(_) => simplex::dist_simplex(
                &SimplexPoint::new(x.to_vec())?,
                &SimplexPoint::new(y.to_vec())?,
            ),
        }
    }

    /// Volume comparable `V̂(x, r)`.
    pub fn volume_hat(&self, x: &[f64], r: f64) -> Result<f64> {
        match self {
            Domain::Interval(w) => heat1d::volume_interval_hat(*w, x[0], r),
            Domain::Ball(w) => ball::volume_ball_hat(w, &BallPoint::new(x.to_vec())?, r),
            Domain::Simplex(w) => {
                simplex::volume_simplex_hat(w, &SimplexPoint::new(x.to_vec())?, r)
            }
        }
    }

    /// Projector kernel `P_n(x, y)` by the closed representation of the domain.
    pub fn projector(&self, n: usize, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            Domain::Interval(w) => {
                let px = crate::jacobi::eval_jacobi_orthonormal(*w, n, x[0])?;
                let py = crate::jacobi::eval_jacobi_orthonormal(*w, n, y[0])?;
                Ok(px * py)
            }
            Domain::Ball(w) => ball::projector_ball(
                w,
                n,
                &BallPoint::new(x.to_vec())?,
                &BallPoint::new(y.to_vec())?,
            ),
            Domain::Simplex(w) => simplex::projector_simplex(
                w,
                n,
                &SimplexPoint::new(x.to_vec())?,
                &SimplexPoint::new(y.to_vec())?,
            ),
        }
    }

    /// `Σ_{n≤N} e^{-t·rate(n)} P_n(x, y)` with `N` from `plan`: the projector
    /// series, independent of the integral form used by [`Domain::heat_kernel`].
    pub fn heat_kernel_series(
        &self,
        t: f64,
        x: &[f64],
        y: &[f64],
        plan: &TruncationPlan,
    ) -> Result<f64> {
        match self {
            Domain::Interval(_) => {
                plan.check_time(t)?;
                let mut sum = 0.0;
                for n in 0..=plan.cutoff() {
                    sum += (-t * self.eigen_rate(n)).exp() * self.projector(n, x, y)?;
                }
                Ok(sum)
            }
            Domain::Ball(w) => ball::heat_kernel_ball_series(
                w,
                t,
                &BallPoint::new(x.to_vec())?,
                &BallPoint::new(y.to_vec())?,
                plan,
            ),
            Domain::Simplex(w) => simplex::heat_kernel_simplex_series(
                w,
                t,
                &SimplexPoint::new(x.to_vec())?,
                &SimplexPoint::new(y.to_vec())?,
                plan,
            ),
        }
    }

    /// A heat kernel evaluator for time `t`.
    pub fn heat_kernel(&self, t: f64, plan: &TruncationPlan) -> Result<HeatKernel> {
        Ok(match self {
            Domain::Interval(w) => {
                HeatKernel::Interval(heat1d::IntervalHeatKernel::new(*w, t, plan)?)
            }
            Domain::Ball(w) => HeatKernel::Ball(ball::BallHeatKernel::new(w, t, plan)?),
            Domain::Simplex(w) => HeatKernel::Simplex(simplex::SimplexHeatKernel::new(w, t, plan)?),
        })
    }
}

/// Fixed-time kernel on any of the three domains.
#[derive(Debug, Clone)]
pub enum HeatKernel {
    Interval(heat1d::IntervalHeatKernel),
    Ball(ball::BallHeatKernel),
    Simplex(simplex::SimplexHeatKernel),
}

impl HeatKernel {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            HeatKernel::Interval(k) => k.eval(x[0], y[0]),
            HeatKernel::Ball(k) => {
                k.eval(&BallPoint::new(x.to_vec())?, &BallPoint::new(y.to_vec())?)
            }
            HeatKernel::Simplex(k) => k.eval(
                &SimplexPoint::new(x.to_vec())?,
                &SimplexPoint::new(y.to_vec())?,
            ),
        }
    }
}
