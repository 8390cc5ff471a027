//! Closed-form survival statistics for the projected scheme, and the
//! large-deviation route to the typical value.
//!
//! Under the projected scheme each measurement restarts the evolution from a
//! multiple of the initial state, so the survival probability factorizes over
//! rounds, `S_m = prod_a q(tau_a)`, and
//!
//! ```text
//! mean    S_m = exp( m ln E[q(tau)] )
//! typical S_m = exp( m E[ln q(tau)] )
//! ```
//!
//! with `mean >= typical` by Jensen's inequality (equality only for a
//! deterministic waiting time). The typical value is the most probable one:
//! the distribution of `x = (1/m) ln S_m` obeys a large-deviation principle
//! `P(x) ~ exp(-m I(x))` whose rate function vanishes exactly at
//! `x* = E[ln q]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intervals::{IntervalError, IntervalLaw};

#[derive(Debug, Error)]
pub enum LdtError {
    #[error("invalid finite-support law: {0}")]
    InvalidLaw(String),
    #[error("return probabilities must be finite, positive and at most 1: {0}")]
    InvalidQ(String),
    #[error(
        "x = {x:.6} outside the achievable range [{lo:.6}, {hi:.6}] of (1/m) ln S_m; \
         the rate is +infinity there"
    )]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
}

/// Anything that can take expectations of a bounded function of the waiting
/// time. Implemented by the eight stock laws and by finite-support laws.
pub trait WaitingTimeLaw {
    fn expectation(&self, f: &dyn Fn(f64) -> f64) -> Result<f64, IntervalError>;

    /// The complete atom list, if the law is purely atomic with finitely many
    /// atoms (delta laws, finite-support laws). Used to detect zero-return
    /// support points exactly.
    fn finite_atoms(&self) -> Option<Vec<(f64, f64)>>;
}

impl WaitingTimeLaw for IntervalLaw {
    fn expectation(&self, f: &dyn Fn(f64) -> f64) -> Result<f64, IntervalError> {
        self.expect(f)
    }

    fn finite_atoms(&self) -> Option<Vec<(f64, f64)>> {
        self.single_atom().map(|tau| vec![(tau, 1.0)])
    }
}

/// Average survival probability after `m` measurements under the projected
/// scheme: `exp(m ln E[q])`.
pub fn average_survival<L: WaitingTimeLaw + ?Sized>(
    law: &L,
    q: &dyn Fn(f64) -> f64,
    m: u64,
) -> Result<f64, IntervalError> {
    if m == 0 {
        return Ok(1.0);
    }
    let eq = law.expectation(q)?.min(1.0);
    if eq <= 0.0 {
        return Ok(0.0);
    }
    Ok((m as f64 * eq.ln()).exp())
}

/// Typical (most probable) survival probability under the projected scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Typical {
    Value(f64),
    /// The law puts mass on a waiting time with `q(tau) = 0`: almost every
    /// realization eventually hits it, so the typical survival is exactly 0.
    ZeroAtom { tau: f64 },
}

impl Typical {
    pub fn value(&self) -> f64 {
        match self {
            Typical::Value(v) => *v,
            Typical::ZeroAtom { .. } => 0.0,
        }
    }
}

/// `exp(m E[ln q])`, the most probable survival probability at large `m`.
///
/// For laws with infinite support, isolated `q = 0` points are floored at the
/// smallest positive double inside the logarithm (they carry no mass for
/// continuous laws and drive the result to zero anyway for discrete ones).
pub fn typical_survival<L: WaitingTimeLaw + ?Sized>(
    law: &L,
    q: &dyn Fn(f64) -> f64,
    m: u64,
) -> Result<Typical, IntervalError> {
    if let Some(atoms) = law.finite_atoms() {
        if let Some(&(tau, _)) = atoms.iter().find(|&&(tau, p)| p > 0.0 && q(tau) == 0.0) {
            return Ok(Typical::ZeroAtom { tau });
        }
    }
    if m == 0 {
        return Ok(Typical::Value(1.0));
    }
    let e_log = law
        .expectation(&|tau| {
            let v = q(tau);
            if v > 0.0 {
                v.ln().min(0.0)
            } else {
                f64::MIN_POSITIVE.ln()
            }
        })?
        .min(0.0);
    Ok(Typical::Value((m as f64 * e_log).exp()))
}

/// A waiting-time law with `d` support points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliLaw {
    support: Vec<f64>,
    probs: Vec<f64>,
}

impl BernoulliLaw {
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self, LdtError> {
        if support.is_empty() || support.len() != probs.len() {
            return Err(LdtError::InvalidLaw(format!(
                "need matching nonempty support/probability lists, got {} and {}",
                support.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(LdtError::InvalidLaw("every probability must be positive".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(LdtError::InvalidLaw(format!("probabilities sum to {total}, not 1")));
        }
        for (i, a) in support.iter().enumerate() {
            if !a.is_finite() {
                return Err(LdtError::InvalidLaw("support points must be finite".into()));
            }
            if support[..i].contains(a) {
                return Err(LdtError::InvalidLaw(format!("duplicate support point {a}")));
            }
        }
        Ok(Self { support, probs })
    }

    pub fn dimension(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Return-probability values at the support points, validated for the
    /// large-deviation formulas.
    fn log_q(&self, q_values: &[f64]) -> Result<Vec<f64>, LdtError> {
        if q_values.len() != self.dimension() {
            return Err(LdtError::InvalidQ(format!(
                "need {} q values, got {}",
                self.dimension(),
                q_values.len()
            )));
        }
        if q_values.iter().any(|&q| !(q > 0.0 && q <= 1.0) || !q.is_finite()) {
            return Err(LdtError::InvalidQ(format!("{q_values:?}")));
        }
        Ok(q_values.iter().map(|q| q.ln()).collect())
    }
}

impl WaitingTimeLaw for BernoulliLaw {
    fn expectation(&self, f: &dyn Fn(f64) -> f64) -> Result<f64, IntervalError> {
        Ok(self.support.iter().zip(&self.probs).map(|(&t, &p)| p * f(t)).sum())
    }

    fn finite_atoms(&self) -> Option<Vec<(f64, f64)>> {
        Some(self.support.iter().copied().zip(self.probs.iter().copied()).collect())
    }
}

/// Large-deviation rate function `I(x)` of `x = (1/m) ln S_m` for a
/// finite-support law under the projected scheme.
///
/// `I(x)` is the Kullback-Leibler divergence `sum_a f_a ln(f_a / p_a)`
/// minimized over occupation fractions `f` compatible with `x`; the minimizer
/// is the exponentially tilted distribution `f_a = p_a q_a^theta / Z(theta)`
/// with `theta` solving the constraint `sum_a f_a ln q_a = x`. It is
/// nonnegative, zero exactly at the typical value `x* = sum_a p_a ln q_a`,
/// and `+infinity` (an error here) outside `[min ln q, max ln q]`.
pub fn ld_rate_function(
    bern: &BernoulliLaw,
    q_values: &[f64],
    x: f64,
) -> Result<f64, LdtError> {
    let logq = bern.log_q(q_values)?;
    let lo = logq.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = logq.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let slack = 1e-12 * (1.0 + span + hi.abs());
    if x < lo - slack || x > hi + slack {
        return Err(LdtError::OutOfDomain { x, lo, hi });
    }
    let x = x.clamp(lo, hi);
    if span <= 1e-14 {
        return Ok(0.0);
    }
    let p = bern.probs();

    // endpoints: all mass moves onto the extreme support points
    let boundary = 1e-13 * (1.0 + span);
    if x - lo <= boundary || hi - x <= boundary {
        let target = if x - lo <= boundary { lo } else { hi };
        let mass: f64 = logq
            .iter()
            .zip(p)
            .filter(|(&l, _)| (l - target).abs() <= boundary)
            .map(|(_, &pi)| pi)
            .sum();
        return Ok(-mass.ln());
    }

    // solve E_theta[ln q] = x for the tilting parameter by bisection;
    // the constraint mean is strictly increasing in theta
    let tilted_mean = |theta: f64| -> f64 {
        let shift = logq.iter().map(|&l| theta * l).fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        let mut num = 0.0;
        for (&l, &pi) in logq.iter().zip(p) {
            let w = pi * (theta * l - shift).exp();
            z += w;
            num += w * l;
        }
        num / z
    };
    let (mut t_lo, mut t_hi) = (-1.0, 1.0);
    while tilted_mean(t_lo) > x {
        t_lo *= 2.0;
        if t_lo < -1e8 {
            break;
        }
    }
    while tilted_mean(t_hi) < x {
        t_hi *= 2.0;
        if t_hi > 1e8 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (t_lo + t_hi);
        if tilted_mean(mid) < x {
            t_lo = mid;
        } else {
            t_hi = mid;
        }
        if t_hi - t_lo <= 1e-15 * (1.0 + t_lo.abs().max(t_hi.abs())) {
            break;
        }
    }
    let theta = 0.5 * (t_lo + t_hi);

    // I(x) = theta x - ln Z(theta), evaluated with the same shift
    let shift = logq.iter().map(|&l| theta * l).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logq.iter().zip(p).map(|(&l, &pi)| pi * (theta * l - shift).exp()).sum();
    Ok((theta * x - (shift + z.ln())).max(0.0))
}

/// The equal-split occupation-fraction solution for the rate function,
///
/// ```text
/// f_a = (ln q_d - x) / ((d-1) (ln q_d - ln q_a)),  a < d,
/// f_d = 1 - sum f_a,
/// ```
///
/// which distributes the log-deficit evenly over the `d - 1` constraint
/// terms. The two-constraint system fixes `f` uniquely only for `d <= 2`,
/// where this coincides with [`ld_rate_function`]; for `d > 2` it is one
/// particular (non-minimizing) choice, kept for comparison. Support points
/// sharing the same `q` are collapsed first (their split is immaterial).
pub fn ld_rate_function_equal_split(
    bern: &BernoulliLaw,
    q_values: &[f64],
    x: f64,
) -> Result<f64, LdtError> {
    let logq_raw = bern.log_q(q_values)?;
    // collapse duplicate ln q values, accumulating probability
    let mut logq: Vec<f64> = Vec::new();
    let mut p: Vec<f64> = Vec::new();
    for (&l, &pi) in logq_raw.iter().zip(bern.probs()) {
        match logq.iter().position(|&e| (e - l).abs() <= 1e-12 * (1.0 + l.abs())) {
            Some(i) => p[i] += pi,
            None => {
                logq.push(l);
                p.push(pi);
            }
        }
    }
    let d = logq.len();
    let lo = logq.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = logq.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-12 * (1.0 + hi - lo + hi.abs());
    if x < lo - slack || x > hi + slack {
        return Err(LdtError::OutOfDomain { x, lo, hi });
    }
    if d == 1 {
        return Ok(0.0);
    }
    let l_last = logq[d - 1];
    let mut f = vec![0.0; d];
    let mut tail = 0.0;
    for a in 0..d - 1 {
        let lambda = l_last - logq[a];
        f[a] = (l_last - x) / ((d - 1) as f64 * lambda);
        tail += f[a];
    }
    f[d - 1] = 1.0 - tail;
    if f.iter().any(|&v| !(-1e-12..=1.0 + 1e-12).contains(&v)) {
        return Err(LdtError::OutOfDomain { x, lo, hi });
    }
    let rate = f
        .iter()
        .zip(&p)
        .map(|(&fa, &pa)| if fa > 0.0 { fa * (fa / pa).ln() } else { 0.0 })
        .sum::<f64>();
    Ok(rate.max(0.0))
}

/// Typical survival probability from the large-deviation minimizer:
/// `exp(m sum_a p_a ln q_a)`. Identical to [`typical_survival`] restricted to
/// a finite-support law.
pub fn typical_from_ld(bern: &BernoulliLaw, q_values: &[f64], m: u64) -> Result<f64, LdtError> {
    if q_values.len() != bern.dimension() {
        return Err(LdtError::InvalidQ(format!(
            "need {} q values, got {}",
            bern.dimension(),
            q_values.len()
        )));
    }
    if q_values.iter().any(|&q| q == 0.0) {
        return Ok(0.0);
    }
    let logq = bern.log_q(q_values)?;
    let x_star: f64 = logq.iter().zip(bern.probs()).map(|(&l, &p)| p * l).sum();
    Ok((m as f64 * x_star).exp())
}

/// Deviation from perfect freezing under regularly spaced measurements:
/// `1 - q(tau0)^m`. For small `tau0` this is `m * O(tau0^2)` — the quantum
/// Zeno suppression of evolution.
pub fn zeno_deviation(q: &dyn Fn(f64) -> f64, tau0: f64, m: u64) -> f64 {
    let qv = q(tau0).clamp(0.0, 1.0);
    if qv == 0.0 {
        return if m == 0 { 0.0 } else { 1.0 };
    }
    1.0 - (m as f64 * qv.ln()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intervals::IntervalLaw;
    use crate::rng::realization_rng;

    #[test]
    fn average_survival_basics() {
        let law = IntervalLaw::discrete_delta(4).unwrap();
        let q = |t: f64| 0.8f64.powf(t / 4.0);
        assert_eq!(average_survival(&law, &q, 0).unwrap(), 1.0);
        let s5 = average_survival(&law, &q, 5).unwrap();
        assert!((s5 - 0.8f64.powi(5)).abs() < 1e-14);
    }

    #[test]
    fn swap_coin_every_even_tau_survives() {
        // q = 1 on the even integers: averages stay at 1 for any even-support law
        let law = IntervalLaw::discrete_exponential(0.5).unwrap();
        let q = |_t: f64| 1.0;
        for m in [1u64, 7, 100] {
            assert!((average_survival(&law, &q, m).unwrap() - 1.0).abs() < 1e-12);
            assert!((typical_survival(&law, &q, m).unwrap().value() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_point_law_typical_and_average() {
        let bern = BernoulliLaw::new(vec![2.0, 4.0], vec![0.5, 0.5]).unwrap();
        let q = |t: f64| if t == 2.0 { 1.0 } else { (-2.0f64).exp() };
        for m in [1u64, 3, 10] {
            let typical = typical_survival(&bern, &q, m).unwrap().value();
            assert!((typical - (-(m as f64)).exp()).abs() < 1e-12 * typical);
            let avg = average_survival(&bern, &q, m).unwrap();
            let want = ((1.0 + (-2.0f64).exp()) / 2.0).powi(m as i32);
            assert!((avg - want).abs() < 1e-12 * want);
            assert!(avg > typical); // Jensen, strict for a random law
        }
    }

    #[test]
    fn delta_law_average_equals_typical() {
        let law = IntervalLaw::continuous_delta(0.4).unwrap();
        let q = |t: f64| (-(t * t)).exp();
        for m in [1u64, 5, 20] {
            let avg = average_survival(&law, &q, m).unwrap();
            let typ = typical_survival(&law, &q, m).unwrap().value();
            assert!((avg - typ).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_atom_is_diagnosed() {
        let law = IntervalLaw::continuous_delta(1.5).unwrap();
        let q = |t: f64| if t == 1.5 { 0.0 } else { 1.0 };
        match typical_survival(&law, &q, 3).unwrap() {
            Typical::ZeroAtom { tau } => assert_eq!(tau, 1.5),
            other => panic!("expected zero atom, got {other:?}"),
        }
    }

    #[test]
    fn jensen_ordering_across_stock_laws() {
        let laws = [
            IntervalLaw::discrete_exponential(0.5).unwrap(),
            IntervalLaw::discrete_power_law(3.5).unwrap(),
            IntervalLaw::poisson(1.5).unwrap(),
            IntervalLaw::continuous_exponential(2.0).unwrap(),
            IntervalLaw::half_normal(0.0, 1.0).unwrap(),
        ];
        let q = |t: f64| (0.2 + 0.7 * (1.3 * t).cos().powi(2)).min(1.0);
        for law in &laws {
            for m in [1u64, 10] {
                let avg = average_survival(law, &q, m).unwrap();
                let typ = typical_survival(law, &q, m).unwrap().value();
                assert!(avg >= typ - 1e-12, "{law:?}: {avg} < {typ}");
            }
        }
    }

    #[test]
    fn rate_function_zero_at_typical_value() {
        let bern =
            BernoulliLaw::new(vec![2.0, 4.0, 6.0], vec![0.3, 0.5, 0.2]).unwrap();
        let q: [f64; 3] = [0.9, 0.4, 0.15];
        let x_star: f64 =
            q.iter().zip(bern.probs()).map(|(&qi, &pi)| pi * qi.ln()).sum();
        let at_star = ld_rate_function(&bern, &q, x_star).unwrap();
        assert!(at_star < 1e-12, "I(x*) = {at_star}");
        // KL of the law against itself, by hand: f = p at theta = 0
        assert!(ld_rate_function(&bern, &q, x_star - 0.05).unwrap() > 0.0);
        assert!(ld_rate_function(&bern, &q, x_star + 0.05).unwrap() > 0.0);
    }

    #[test]
    fn rate_function_d1_and_boundaries() {
        let single = BernoulliLaw::new(vec![2.0], vec![1.0]).unwrap();
        assert_eq!(ld_rate_function(&single, &[0.5], 0.5f64.ln()).unwrap(), 0.0);
        assert!(ld_rate_function(&single, &[0.5], 0.0).is_err());

        // d = 2 at the lower boundary: all mass on the smaller ln q
        let bern = BernoulliLaw::new(vec![2.0, 4.0], vec![0.5, 0.5]).unwrap();
        let q = [0.3, 0.8];
        let i_lo = ld_rate_function(&bern, &q, 0.3f64.ln()).unwrap();
        assert!((i_lo - 2.0f64.ln()).abs() < 1e-10, "got {i_lo}");
        let i_hi = ld_rate_function(&bern, &q, 0.8f64.ln()).unwrap();
        assert!((i_hi - 2.0f64.ln()).abs() < 1e-10);
        assert!(ld_rate_function(&bern, &q, 0.2f64.ln()).is_err());
    }

    #[test]
    fn equal_split_matches_exact_solution_for_two_points() {
        let bern = BernoulliLaw::new(vec![2.0, 4.0], vec![0.35, 0.65]).unwrap();
        let q = [0.7, 0.2];
        let lo = 0.2f64.ln();
        let hi = 0.7f64.ln();
        for i in 1..20 {
            let x = lo + (hi - lo) * i as f64 / 20.0;
            let exact = ld_rate_function(&bern, &q, x).unwrap();
            let split = ld_rate_function_equal_split(&bern, &q, x).unwrap();
            assert!((exact - split).abs() < 1e-10, "x={x}: {exact} vs {split}");
        }
    }

    #[test]
    fn equal_split_is_not_minimizing_beyond_two_points() {
        // with three support points the equal-split fractions at x* are not p,
        // so that rate stays positive while the exact one vanishes
        let bern =
            BernoulliLaw::new(vec![2.0, 4.0, 6.0], vec![1.0 / 3.0; 3]).unwrap();
        let q = [(-2.0f64).exp(), (-1.0f64).exp(), 1.0];
        let x_star: f64 = q.iter().zip(bern.probs()).map(|(&qi, &pi)| pi * qi.ln()).sum();
        let exact = ld_rate_function(&bern, &q, x_star).unwrap();
        let split = ld_rate_function_equal_split(&bern, &q, x_star).unwrap();
        assert!(exact < 1e-12);
        assert!(split > 0.05, "equal-split rate at x* = {split}");
        assert!(split >= exact);
    }

    #[test]
    fn typical_from_ld_matches_typical_survival() {
        let support = vec![2.0, 4.0, 6.0, 8.0, 10.0];
        let probs = vec![0.1, 0.2, 0.3, 0.25, 0.15];
        let bern = BernoulliLaw::new(support.clone(), probs.clone()).unwrap();
        let qf = |t: f64| 0.3 + 0.6 * (t / 10.0);
        let q: Vec<f64> = support.iter().map(|&t| qf(t)).collect();
        for m in [1u64, 4, 9] {
            let a = typical_from_ld(&bern, &q, m).unwrap();
            let b = typical_survival(&bern, &qf, m).unwrap().value();
            assert!((a - b).abs() < 1e-12 * b.max(1e-12));
        }
    }

    #[test]
    fn grid_minimizer_sits_at_typical_value() {
        let mut rng = realization_rng(2024, 0);
        use rand::Rng;
        for _ in 0..10 {
            let d = rng.random_range(2usize..=6);
            let mut probs: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= total);
            let support: Vec<f64> = (1..=d).map(|i| 2.0 * i as f64).collect();
            let q: Vec<f64> = (0..d).map(|_| rng.random_range(0.05f64..1.0)).collect();
            let bern = BernoulliLaw::new(support, probs.clone()).unwrap();
            let lo = q.iter().map(|v| v.ln()).fold(f64::INFINITY, f64::min);
            let hi = q.iter().map(|v| v.ln()).fold(f64::NEG_INFINITY, f64::max);
            if hi - lo < 1e-3 {
                continue;
            }
            let grid = 4001;
            let (mut best_x, mut best_i) = (f64::NAN, f64::INFINITY);
            for g in 0..grid {
                let x = lo + (hi - lo) * g as f64 / (grid - 1) as f64;
                let i = ld_rate_function(&bern, &q, x).unwrap();
                assert!(i >= 0.0);
                if i < best_i {
                    best_i = i;
                    best_x = x;
                }
            }
            let x_star: f64 = q.iter().zip(&probs).map(|(&qi, &pi)| pi * qi.ln()).sum();
            let resolution = (hi - lo) / (grid - 1) as f64;
            assert!((best_x - x_star).abs() <= 1.5 * resolution);
        }
    }

    #[test]
    fn zeno_deviation_scaling() {
        // two-site chain: q(tau) = cos^2(2 gamma tau)
        let gamma = 1.0;
        let q = move |tau: f64| (2.0 * gamma * tau).cos().powi(2);
        assert_eq!(zeno_deviation(&q, 0.0, 100), 0.0);
        let m = 50u64;
        for tau0 in [1e-3, 1e-4] {
            let dev = zeno_deviation(&q, tau0, m);
            let leading = 4.0 * m as f64 * gamma * gamma * tau0 * tau0;
            assert!((dev - leading).abs() < 0.01 * leading, "tau0={tau0}: {dev} vs {leading}");
            // quadratic in tau0: halving reduces by ~4
            let ratio = dev / zeno_deviation(&q, tau0 / 2.0, m);
            assert!((ratio - 4.0).abs() < 0.05);
        }
    }

    #[test]
    fn bernoulli_law_validation() {
        assert!(BernoulliLaw::new(vec![], vec![]).is_err());
        assert!(BernoulliLaw::new(vec![2.0], vec![0.9]).is_err());
        assert!(BernoulliLaw::new(vec![2.0, 2.0], vec![0.5, 0.5]).is_err());
        assert!(BernoulliLaw::new(vec![2.0, 4.0], vec![1.2, -0.2]).is_err());
        assert!(BernoulliLaw::new(vec![2.0, 4.0], vec![0.5, 0.5]).is_ok());
    }
}
