//! Waiting-time laws for the random gaps between successive measurements.
//!
//! Eight laws are supported, four with support on the positive even integers
//! (matching the parity structure of the discrete-time walk) and four with
//! support on the positive reals (for the continuous-time model):
//!
//! ```text
//! discrete exponential   p_tau = r (1-r)^(tau/2 - 1)            tau = 2,4,6,...
//! discrete power law     p_tau = 2^s / (zeta(s) tau^s)          tau = 2,4,6,...
//! discrete delta         p_tau = delta_{tau,tau0}               tau0 even
//! Poisson                p_tau = e^-L L^(tau/2-1)/(tau/2-1)!    tau = 2,4,6,...
//! exponential            p(tau) = r e^(-r tau)                  tau >= 0
//! power law              p(tau) = a/(tc (tau/tc)^(1+a))         tau >= tc
//! delta                  p(tau) = delta(tau - tau0)             tau0 > 0
//! half-normal            p(tau) ~ exp(-(tau-th)^2/(2 s^2))      tau >= th
//! ```
//!
//! Only finite-mean laws are admitted (`s > 2`, `alpha > 1`): any realizable
//! measurement protocol has a finite average gap.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Poisson as PoissonDist, StandardNormal, Zeta};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{self, QuadError};
use crate::special::{riemann_zeta, zeta_tail};
use crate::tol;

#[derive(Debug, Error)]
pub enum IntervalError {
    #[error("invalid waiting-time law: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// A moment that may diverge for heavy-tailed parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Moment {
    Finite(f64),
    Infinite,
}

impl Moment {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Moment::Finite(v) => Some(*v),
            Moment::Infinite => None,
        }
    }
}

/// Support of a law, used by the measurement engine to reject incompatible
/// model/law pairings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauSupport {
    /// Positive even integers.
    EvenIntegers,
    /// Positive reals.
    PositiveReals,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntervalLaw {
    DiscreteExponential { r: f64 },
    DiscretePowerLaw { s: f64 },
    DiscreteDelta { tau0: u64 },
    Poisson { lambda: f64 },
    ContinuousExponential { r: f64 },
    ContinuousPowerLaw { alpha: f64, tau_ch: f64 },
    ContinuousDelta { tau0: f64 },
    HalfNormal { tau_hn: f64, sigma: f64 },
}

/// Cap on the number of atoms summed explicitly in discrete expectations.
/// The remainder is handled with the analytic tail mass (see [`IntervalLaw::expect`]).
const MAX_DISCRETE_TERMS: u64 = 1_000_000;

impl IntervalLaw {
    pub fn discrete_exponential(r: f64) -> Result<Self, IntervalError> {
        let law = Self::DiscreteExponential { r };
        law.validate().map(|_| law)
    }

    pub fn discrete_power_law(s: f64) -> Result<Self, IntervalError> {
        let law = Self::DiscretePowerLaw { s };
        law.validate().map(|_| law)
    }

    pub fn discrete_delta(tau0: u64) -> Result<Self, IntervalError> {
        let law = Self::DiscreteDelta { tau0 };
        law.validate().map(|_| law)
    }

    pub fn poisson(lambda: f64) -> Result<Self, IntervalError> {
        let law = Self::Poisson { lambda };
        law.validate().map(|_| law)
    }

    pub fn continuous_exponential(r: f64) -> Result<Self, IntervalError> {
        let law = Self::ContinuousExponential { r };
        law.validate().map(|_| law)
    }

    pub fn continuous_power_law(alpha: f64, tau_ch: f64) -> Result<Self, IntervalError> {
        let law = Self::ContinuousPowerLaw { alpha, tau_ch };
        law.validate().map(|_| law)
    }

    pub fn continuous_delta(tau0: f64) -> Result<Self, IntervalError> {
        let law = Self::ContinuousDelta { tau0 };
        law.validate().map(|_| law)
    }

    pub fn half_normal(tau_hn: f64, sigma: f64) -> Result<Self, IntervalError> {
        let law = Self::HalfNormal { tau_hn, sigma };
        law.validate().map(|_| law)
    }

    /// Check parameter domains. Deserialized laws must be validated before use.
    pub fn validate(&self) -> Result<(), IntervalError> {
        let bad = |msg: String| Err(IntervalError::InvalidParameter(msg));
        match *self {
            Self::DiscreteExponential { r } => {
                if !(r > 0.0 && r < 1.0) {
                    return bad(format!("discrete exponential needs 0 < r < 1, got r = {r}"));
                }
            }
            Self::DiscretePowerLaw { s } => {
                if !(s > 2.0) {
                    return bad(format!("discrete power law needs s > 2 (finite mean), got s = {s}"));
                }
            }
            Self::DiscreteDelta { tau0 } => {
                if tau0 == 0 || tau0 % 2 != 0 {
                    return bad(format!("discrete delta needs a positive even tau0, got {tau0}"));
                }
            }
            Self::Poisson { lambda } => {
                if !(lambda > 0.0) {
                    return bad(format!("Poisson law needs lambda > 0, got {lambda}"));
                }
            }
            Self::ContinuousExponential { r } => {
                if !(r > 0.0) {
                    return bad(format!("exponential law needs r > 0, got {r}"));
                }
            }
            Self::ContinuousPowerLaw { alpha, tau_ch } => {
                if !(alpha > 1.0) {
                    return bad(format!("power law needs alpha > 1 (finite mean), got {alpha}"));
                }
                if !(tau_ch > 0.0) {
                    return bad(format!("power law needs tau_ch > 0, got {tau_ch}"));
                }
            }
            Self::ContinuousDelta { tau0 } => {
                if !(tau0 > 0.0) {
                    return bad(format!("delta law needs tau0 > 0, got {tau0}"));
                }
            }
            Self::HalfNormal { tau_hn, sigma } => {
                if !(tau_hn >= 0.0) {
                    return bad(format!("half-normal needs tau_hn >= 0, got {tau_hn}"));
                }
                if !(sigma > 0.0) {
                    return bad(format!("half-normal needs sigma > 0, got {sigma}"));
                }
            }
        }
        Ok(())
    }

    pub fn support(&self) -> TauSupport {
        match self {
            Self::DiscreteExponential { .. }
            | Self::DiscretePowerLaw { .. }
            | Self::DiscreteDelta { .. }
            | Self::Poisson { .. } => TauSupport::EvenIntegers,
            _ => TauSupport::PositiveReals,
        }
    }

    /// The single support point of a delta law, if this is one.
    pub fn single_atom(&self) -> Option<f64> {
        match *self {
            Self::DiscreteDelta { tau0 } => Some(tau0 as f64),
            Self::ContinuousDelta { tau0 } => Some(tau0),
            _ => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::DiscreteExponential { r } => 2.0 / r,
            Self::DiscretePowerLaw { s } => 2.0 * riemann_zeta(s - 1.0) / riemann_zeta(s),
            Self::DiscreteDelta { tau0 } => tau0 as f64,
            Self::Poisson { lambda } => 2.0 * (1.0 + lambda),
            Self::ContinuousExponential { r } => 1.0 / r,
            Self::ContinuousPowerLaw { alpha, tau_ch } => tau_ch * alpha / (alpha - 1.0),
            Self::ContinuousDelta { tau0 } => tau0,
            Self::HalfNormal { tau_hn, sigma } => {
                tau_hn + sigma * (2.0 / std::f64::consts::PI).sqrt()
            }
        }
    }

    pub fn variance(&self) -> Moment {
        match *self {
            Self::DiscreteExponential { r } => Moment::Finite(4.0 * (1.0 - r) / (r * r)),
            Self::DiscretePowerLaw { s } => {
                if s > 3.0 {
                    let (z, z1, z2) =
                        (riemann_zeta(s), riemann_zeta(s - 1.0), riemann_zeta(s - 2.0));
                    Moment::Finite(4.0 * (z * z2 - z1 * z1) / (z * z))
                } else {
                    Moment::Infinite
                }
            }
            Self::DiscreteDelta { .. } => Moment::Finite(0.0),
            Self::Poisson { lambda } => Moment::Finite(4.0 * lambda),
            Self::ContinuousExponential { r } => Moment::Finite(1.0 / (r * r)),
            Self::ContinuousPowerLaw { alpha, tau_ch } => {
                if alpha > 2.0 {
                    Moment::Finite(
                        tau_ch * tau_ch * alpha / ((alpha - 2.0) * (alpha - 1.0) * (alpha - 1.0)),
                    )
                } else {
                    Moment::Infinite
                }
            }
            Self::ContinuousDelta { .. } => Moment::Finite(0.0),
            Self::HalfNormal { sigma, .. } => {
                Moment::Finite(sigma * sigma * (1.0 - 2.0 / std::f64::consts::PI))
            }
        }
    }

    /// Probability mass (discrete and delta laws) or density (continuous laws)
    /// at `tau`. Zero outside the support.
    pub fn mass_or_density(&self, tau: f64) -> f64 {
        match *self {
            Self::DiscreteExponential { r } => match even_index(tau) {
                Some(j) => r * (1.0 - r).powi((j - 1) as i32),
                None => 0.0,
            },
            Self::DiscretePowerLaw { s } => match even_index(tau) {
                Some(j) => (j as f64).powf(-s) / riemann_zeta(s),
                None => 0.0,
            },
            Self::DiscreteDelta { tau0 } => {
                if tau == tau0 as f64 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Poisson { lambda } => match even_index(tau) {
                Some(j) => {
                    let k = (j - 1) as f64;
                    (-lambda + k * lambda.ln() - crate::special::ln_factorial(j - 1)).exp()
                }
                None => 0.0,
            },
            Self::ContinuousExponential { r } => {
                if tau >= 0.0 {
                    r * (-r * tau).exp()
                } else {
                    0.0
                }
            }
            Self::ContinuousPowerLaw { alpha, tau_ch } => {
                if tau >= tau_ch {
                    alpha / tau_ch * (tau / tau_ch).powf(-1.0 - alpha)
                } else {
                    0.0
                }
            }
            Self::ContinuousDelta { tau0 } => {
                if tau == tau0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::HalfNormal { tau_hn, sigma } => {
                if tau >= tau_hn {
                    let z = (tau - tau_hn) / sigma;
                    (2.0 / (std::f64::consts::PI * sigma * sigma)).sqrt() * (-0.5 * z * z).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Draw one waiting time. Discrete laws return exact even integers
    /// (represented in f64); continuous laws return positive reals.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::DiscreteExponential { r } => {
                // inverse CDF of the geometric number of "ticks" j >= 1
                let v: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
                let j = (v.ln() / (1.0 - r).ln()).ceil().max(1.0);
                2.0 * j
            }
            Self::DiscretePowerLaw { s } => {
                let z = Zeta::new(s).expect("validated s > 2");
                2.0 * z.sample(rng)
            }
            Self::DiscreteDelta { tau0 } => tau0 as f64,
            Self::Poisson { lambda } => {
                let p = PoissonDist::new(lambda).expect("validated lambda > 0");
                2.0 * (p.sample(rng) + 1.0)
            }
            Self::ContinuousExponential { r } => {
                let v: f64 = 1.0 - rng.random::<f64>();
                -v.ln() / r
            }
            Self::ContinuousPowerLaw { alpha, tau_ch } => {
                // inverse CDF: tau = tau_ch * u^(-1/alpha), u uniform on (0, 1]
                let u: f64 = 1.0 - rng.random::<f64>();
                tau_ch * u.powf(-1.0 / alpha)
            }
            Self::ContinuousDelta { tau0 } => tau0,
            Self::HalfNormal { tau_hn, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                tau_hn + sigma * z.abs()
            }
        }
    }

    /// Expectation of `f` under the law.
    ///
    /// Discrete laws are summed atom by atom until the truncated tail mass
    /// drops below [`tol::MASS_TAIL`] (or [`MAX_DISCRETE_TERMS`] is reached,
    /// whichever comes first); the left-out mass is then reassigned at the
    /// running mean of the most recent `f` values, so normalization is exact
    /// and the truncation error for bounded `f` stays below the tail mass.
    /// Continuous laws use panelled adaptive quadrature at relative accuracy
    /// [`tol::QUAD_REL`], with the power-law tail beyond the quadrature
    /// window handled through its analytic mass.
    pub fn expect(&self, f: &dyn Fn(f64) -> f64) -> Result<f64, IntervalError> {
        match *self {
            Self::DiscreteDelta { tau0 } => Ok(f(tau0 as f64)),
            Self::ContinuousDelta { tau0 } => Ok(f(tau0)),
            Self::DiscreteExponential { r } => {
                let max_j = (tol::MASS_TAIL.ln() / (1.0 - r).ln()).ceil() as u64 + 2;
                let mut mass = r;
                Ok(sum_discrete(f, max_j, |_| {
                    let m = mass;
                    mass *= 1.0 - r;
                    m
                }))
            }
            Self::Poisson { lambda } => {
                let mut mass = (-lambda).exp();
                let mut j = 0u64;
                Ok(sum_discrete(f, 10_000_000, |_| {
                    j += 1;
                    let m = mass;
                    mass *= lambda / j as f64;
                    m
                }))
            }
            Self::DiscretePowerLaw { s } => {
                let z = riemann_zeta(s);
                let terms = self.discrete_truncation_terms().expect("discrete law");
                let mut acc = 0.0;
                for j in 1..=terms {
                    acc += (j as f64).powf(-s) / z * f(2.0 * j as f64);
                }
                let tail_mass = zeta_tail(s, terms) / z;
                Ok(acc + tail_mass * discrete_tail_weighted_mean(f, terms, s))
            }
            Self::ContinuousExponential { r } => {
                // e^(-46) ~ 1e-20: the remainder is far below quadrature accuracy.
                let hi = 46.0 / r;
                let edges: Vec<f64> = (0..=64).map(|i| hi * i as f64 / 64.0).collect();
                let g = move |t: f64| self.mass_or_density(t) * f(t);
                Ok(quad::panel_simpson(&g, &edges, quad_budget(&g, &edges))?)
            }
            Self::HalfNormal { tau_hn, sigma } => {
                // half-normal mass beyond 9.5 sigma is ~1e-21
                let hi = tau_hn + 9.5 * sigma;
                let edges: Vec<f64> =
                    (0..=64).map(|i| tau_hn + (hi - tau_hn) * i as f64 / 64.0).collect();
                let g = move |t: f64| self.mass_or_density(t) * f(t);
                Ok(quad::panel_simpson(&g, &edges, quad_budget(&g, &edges))?)
            }
            Self::ContinuousPowerLaw { alpha, tau_ch } => {
                // integrate [tau_ch, x_hi] on log-spaced panels; the remaining
                // tail carries analytic mass (x_hi/tau_ch)^-alpha and is
                // assigned the density-weighted mean of f over a coarse grid.
                let decades = (-tol::MASS_TAIL.log10() / alpha).min(6.0);
                let x_hi = tau_ch * 10f64.powf(decades);
                let panels_per_decade = 16;
                let n_panels = (decades * panels_per_decade as f64).ceil() as usize;
                let edges: Vec<f64> = (0..=n_panels)
                    .map(|i| tau_ch * 10f64.powf(decades * i as f64 / n_panels as f64))
                    .collect();
                let g = move |t: f64| self.mass_or_density(t) * f(t);
                let head = quad::panel_simpson(&g, &edges, quad_budget(&g, &edges))?;
                let tail_mass = (x_hi / tau_ch).powf(-alpha);
                Ok(head + tail_mass * tail_weighted_mean(f, x_hi, alpha))
            }
        }
    }

    /// Number of atoms an explicit sum over this discrete law visits before
    /// the analytic tail takes over. `None` for continuous laws.
    ///
    /// Callers that tabulate an expensive `f` ahead of an [`expect`] call can
    /// size the table as `2 * terms` (the largest even tau visited).
    pub fn discrete_truncation_terms(&self) -> Option<u64> {
        match *self {
            Self::DiscreteExponential { r } => {
                Some(((tol::MASS_TAIL.ln() / (1.0 - r).ln()).ceil() as u64 + 2).max(1))
            }
            Self::DiscretePowerLaw { s } => {
                let z = riemann_zeta(s);
                // zeta tail J^(1-s)/((s-1) z) <= MASS_TAIL
                let j = (((s - 1.0) * z * tol::MASS_TAIL).ln() / (1.0 - s)).exp();
                Some((j.ceil() as u64).clamp(1, MAX_DISCRETE_TERMS))
            }
            Self::DiscreteDelta { .. } => Some(1),
            Self::Poisson { lambda } => {
                Some((lambda + 60.0 * lambda.sqrt().max(1.0)).ceil() as u64)
            }
            _ => None,
        }
    }
}

/// Index j >= 1 such that tau = 2j, if tau is a positive even integer.
fn even_index(tau: f64) -> Option<u64> {
    if tau <= 0.0 || tau.fract() != 0.0 || tau > 2.0 * MAX_DISCRETE_TERMS as f64 * 1e6 {
        return None;
    }
    let t = tau as u64;
    if t % 2 == 0 {
        Some(t / 2)
    } else {
        None
    }
}

struct RecentMean {
    buf: VecDeque<f64>,
}

impl RecentMean {
    const WINDOW: usize = 64;

    fn new() -> Self {
        Self { buf: VecDeque::with_capacity(Self::WINDOW) }
    }

    fn push(&mut self, v: f64) {
        if self.buf.len() == Self::WINDOW {
            self.buf.pop_front();
        }
        self.buf.push_back(v);
    }

    fn mean(&self) -> f64 {
        if self.buf.is_empty() {
            0.0
        } else {
            self.buf.iter().sum::<f64>() / self.buf.len() as f64
        }
    }
}

/// Shared driver for discrete sums with masses supplied term by term.
fn sum_discrete(f: &dyn Fn(f64) -> f64, max_terms: u64, mut mass_at: impl FnMut(u64) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut cum = 0.0;
    let mut recent = RecentMean::new();
    for j in 1..=max_terms {
        let mass = mass_at(j);
        let val = f(2.0 * j as f64);
        acc += mass * val;
        cum += mass;
        recent.push(val);
        if 1.0 - cum <= tol::MASS_TAIL {
            break;
        }
    }
    acc + (1.0 - cum).max(0.0) * recent.mean()
}

/// Absolute quadrature budget from a coarse panel estimate, targeting
/// relative accuracy [`tol::QUAD_REL`].
fn quad_budget(g: &dyn Fn(f64) -> f64, edges: &[f64]) -> f64 {
    let mut scale = 0.0;
    for w in edges.windows(2) {
        let m = 0.5 * (w[0] + w[1]);
        let est = (w[1] - w[0]) / 6.0 * (g(w[0]) + 4.0 * g(m) + g(w[1]));
        scale += est.abs();
    }
    (tol::QUAD_REL * scale).max(1e-14)
}

/// Density-weighted mean of `f` over the discrete power-law tail `j > j_hi`,
/// sampled on a coarse log grid of even integers covering four decades.
fn discrete_tail_weighted_mean(f: &dyn Fn(f64) -> f64, j_hi: u64, s: f64) -> f64 {
    const POINTS: usize = 256;
    let step = 4.0 / POINTS as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut prev_edge = j_hi as f64;
    for i in 0..POINTS {
        let edge = j_hi as f64 * 10f64.powf(step * (i + 1) as f64);
        let j_mid = (0.5 * (prev_edge + edge)).round().max(j_hi as f64 + 1.0);
        let w = j_mid.powf(-s) * (edge - prev_edge);
        num += w * f(2.0 * j_mid);
        den += w;
        prev_edge = edge;
    }
    num / den
}

/// Density-weighted mean of `f` over the power-law tail beyond `x_hi`,
/// from a coarse log grid covering the next four decades.
fn tail_weighted_mean(f: &dyn Fn(f64) -> f64, x_hi: f64, alpha: f64) -> f64 {
    const POINTS: usize = 256;
    let mut num = 0.0;
    let mut den = 0.0;
    let step = 4.0 / POINTS as f64; // decades per point
    for i in 0..POINTS {
        let x0 = x_hi * 10f64.powf(step * i as f64);
        let x1 = x_hi * 10f64.powf(step * (i + 1) as f64);
        let x = 0.5 * (x0 + x1);
        let w = x.powf(-1.0 - alpha) * (x1 - x0);
        num += w * f(x);
        den += w;
    }
    num / den
}
