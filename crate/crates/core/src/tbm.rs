//! Tight-binding model on a periodic one-dimensional lattice.
//!
//! A single particle hops between nearest-neighbour sites with amplitude
//! `gamma` (hbar = 1), so the amplitudes obey
//!
//! ```text
//! d psi_n / dt = i gamma (psi_{n-1} + psi_{n+1})
//! ```
//!
//! In Fourier space each mode simply picks up the phase
//! `exp(i 2 gamma t cos(2 pi q / N))`, which gives the exact propagator
//!
//! ```text
//! psi_{n,n0}(t) = (1/N) sum_q exp[ i 2 gamma t cos(2pi q/N) + i 2pi q (n - n0)/N ]
//! ```
//!
//! valid for arbitrary real `t`.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TbmError {
    #[error("lattice needs at least 2 sites, got {0}")]
    LatticeTooSmall(usize),
    #[error("hopping strength must be positive, got {0}")]
    NonPositiveHopping(f64),
    #[error("site {site} outside lattice of {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },
}

/// Lattice size and hopping strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TbmParams {
    n_sites: usize,
    gamma: f64,
}

impl TbmParams {
    pub fn new(n_sites: usize, gamma: f64) -> Result<Self, TbmError> {
        if n_sites < 2 {
            return Err(TbmError::LatticeTooSmall(n_sites));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(TbmError::NonPositiveHopping(gamma));
        }
        Ok(Self { n_sites, gamma })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Particle state: one complex amplitude per site.
#[derive(Debug, Clone, PartialEq)]
pub struct TbmState {
    pub amps: Vec<C64>,
}

impl TbmState {
    pub fn localized(params: &TbmParams, n0: usize) -> Result<Self, TbmError> {
        if n0 >= params.n_sites {
            return Err(TbmError::SiteOutOfRange { site: n0, n_sites: params.n_sites });
        }
        let mut amps = vec![C64::ZERO; params.n_sites];
        amps[n0] = C64::ONE;
        Ok(Self { amps })
    }

    pub fn n_sites(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Exact propagator amplitude `psi_{n,n0}(t)` for a particle released from
/// `n0` at time zero.
pub fn propagator_amplitude(params: &TbmParams, n: usize, n0: usize, t: f64) -> C64 {
    let nn = params.n_sites as f64;
    let dn = (n as i64 - n0 as i64) as f64;
    let mut acc = C64::ZERO;
    for q in 0..params.n_sites {
        let kq = 2.0 * PI * q as f64 / nn;
        acc += C64::cis(2.0 * params.gamma * t * kq.cos() + kq * dn);
    }
    acc / nn
}

/// Evolve a state for time `tau` through Fourier space: forward transform,
/// per-mode phase `e^{i 2 gamma tau cos(2pi q/N)}`, inverse transform.
///
/// The transform is the direct O(N^2) reference implementation.
pub fn evolve(state: &TbmState, params: &TbmParams, tau: f64) -> TbmState {
    let n = state.n_sites();
    let nn = n as f64;
    // forward: psi_hat_q = sum_j psi_j e^{-i 2pi j q/N}
    let mut modes = vec![C64::ZERO; n];
    for (q, m) in modes.iter_mut().enumerate() {
        for (j, amp) in state.amps.iter().enumerate() {
            *m += amp * C64::cis(-2.0 * PI * (j * q % n) as f64 / nn);
        }
    }
    // phases
    for (q, m) in modes.iter_mut().enumerate() {
        let kq = 2.0 * PI * q as f64 / nn;
        *m *= C64::cis(2.0 * params.gamma * tau * kq.cos());
    }
    // inverse: psi_j = (1/N) sum_q psi_hat_q e^{+i 2pi j q/N}
    let mut amps = vec![C64::ZERO; n];
    for (j, amp) in amps.iter_mut().enumerate() {
        for (q, m) in modes.iter().enumerate() {
            *amp += m * C64::cis(2.0 * PI * (j * q % n) as f64 / nn);
        }
        *amp /= nn;
    }
    TbmState { amps }
}

/// Site occupation probabilities `P_n(t) = |psi_n(t)|^2`.
pub fn site_occupation(state: &TbmState) -> Vec<f64> {
    state.amps.iter().map(|c| c.norm_sqr()).collect()
}

/// Return probability `q(tau) = |(1/N) sum_q e^{i 2 gamma tau cos(2pi q/N)}|^2`,
/// independent of the starting site.
pub fn q_return(params: &TbmParams, tau: f64) -> f64 {
    ReturnAmplitude::new(params).eval(tau)
}

/// Cached mode cosines for repeated `q(tau)` evaluation.
#[derive(Debug, Clone)]
pub struct ReturnAmplitude {
    two_gamma: f64,
    cosines: Vec<f64>,
    inv_n: f64,
}

impl ReturnAmplitude {
    pub fn new(params: &TbmParams) -> Self {
        let nn = params.n_sites as f64;
        let cosines =
            (0..params.n_sites).map(|q| (2.0 * PI * q as f64 / nn).cos()).collect();
        Self { two_gamma: 2.0 * params.gamma, cosines, inv_n: 1.0 / nn }
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for &cq in &self.cosines {
            let (s, c) = (self.two_gamma * tau * cq).sin_cos();
            re += c;
            im += s;
        }
        ((re * re + im * im) * self.inv_n * self.inv_n).min(1.0)
    }
}

/// Slow reference propagation for cross-checks: classical RK4 on the hopping
/// equations of motion, independent of the spectral route.
pub mod reference {
    use super::*;

    /// Integrate the hopping ODE from a particle localized at `n0` up to
    /// time `t` with step `dt`; returns the site occupations.
    pub fn hopping_ode_occupation(params: &TbmParams, n0: usize, t: f64, dt: f64) -> Vec<f64> {
        let n = params.n_sites();
        let gamma = params.gamma();
        let deriv = |psi: &[C64], out: &mut Vec<C64>| {
            out.clear();
            for j in 0..n {
                let left = psi[(j + n - 1) % n];
                let right = psi[(j + 1) % n];
                out.push(C64::new(0.0, gamma) * (left + right));
            }
        };
        let mut psi = vec![C64::ZERO; n];
        psi[n0] = C64::ONE;
        let steps = (t / dt).round() as u64;
        let h = t / steps as f64;
        let (mut k1, mut k2, mut k3, mut k4) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut tmp = vec![C64::ZERO; n];
        for _ in 0..steps {
            deriv(&psi, &mut k1);
            for j in 0..n {
                tmp[j] = psi[j] + 0.5 * h * k1[j];
            }
            deriv(&tmp, &mut k2);
            for j in 0..n {
                tmp[j] = psi[j] + 0.5 * h * k2[j];
            }
            deriv(&tmp, &mut k3);
            for j in 0..n {
                tmp[j] = psi[j] + h * k3[j];
            }
            deriv(&tmp, &mut k4);
            for j in 0..n {
                psi[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        psi.iter().map(|c| c.norm_sqr()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol;
    use proptest::prelude::*;

    #[test]
    fn propagator_t0_is_a_delta() {
        let p = TbmParams::new(11, 1.3).unwrap();
        for n in 0..11 {
            let amp = propagator_amplitude(&p, n, 4, 0.0);
            let want = if n == 4 { 1.0 } else { 0.0 };
            assert!((amp - want).norm() < 1e-13);
        }
    }

    #[test]
    fn two_site_return_amplitude_is_cosine() {
        let p = TbmParams::new(2, 0.8).unwrap();
        for tau in [0.0, 0.3, 1.7, 9.4] {
            let amp = propagator_amplitude(&p, 0, 0, tau);
            assert!((amp.re - (2.0 * 0.8 * tau).cos()).abs() < 1e-13);
            assert!(amp.im.abs() < 1e-13);
            // q(tau) = cos^2(2 gamma tau)
            let q = q_return(&p, tau);
            assert!((q - (2.0 * 0.8 * tau).cos().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn four_site_return_amplitude_is_cos_squared() {
        let p = TbmParams::new(4, 1.0).unwrap();
        for tau in [0.1, 0.9, 2.2, 7.3] {
            let amp = propagator_amplitude(&p, 0, 0, tau);
            let want = (1.0 + (2.0 * tau).cos()) / 2.0;
            assert!((amp.re - want).abs() < 1e-13);
            assert!(amp.im.abs() < 1e-13);
            assert!((q_return(&p, tau) - tau.cos().powi(4)).abs() < 1e-12);
        }
    }

    #[test]
    fn propagator_norm_is_one() {
        let p = TbmParams::new(50, 1.0).unwrap();
        for tau in [0.5, 3.0, 10.0] {
            let total: f64 =
                (0..50).map(|n| propagator_amplitude(&p, n, 7, tau).norm_sqr()).sum();
            assert!((total - 1.0).abs() < tol::UNITARITY);
        }
    }

    #[test]
    fn evolve_matches_propagator_for_localized_start() {
        let p = TbmParams::new(20, 1.0).unwrap();
        let state = TbmState::localized(&p, 3).unwrap();
        let evolved = evolve(&state, &p, 2.7);
        for n in 0..20 {
            let want = propagator_amplitude(&p, n, 3, 2.7);
            assert!((evolved.amps[n] - want).norm() < tol::UNITARITY);
        }
    }

    #[test]
    fn evolve_composes() {
        let p = TbmParams::new(17, 0.9).unwrap();
        let state = TbmState::localized(&p, 0).unwrap();
        let once = evolve(&state, &p, 3.1);
        let twice = evolve(&evolve(&state, &p, 1.4), &p, 1.7);
        for (x, y) in once.amps.iter().zip(&twice.amps) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn occupation_is_translation_covariant_and_reflection_symmetric() {
        let p = TbmParams::new(12, 1.0).unwrap();
        let t = 4.3;
        let occ0: Vec<f64> =
            (0..12).map(|n| propagator_amplitude(&p, n, 0, t).norm_sqr()).collect();
        let occ3: Vec<f64> =
            (0..12).map(|n| propagator_amplitude(&p, n, 3, t).norm_sqr()).collect();
        for n in 0..12 {
            assert!((occ3[(n + 3) % 12] - occ0[n]).abs() < tol::UNITARITY);
            // even in (n - n0)
            assert!((occ0[n] - occ0[(12 - n) % 12]).abs() < tol::UNITARITY);
        }
    }

    #[test]
    fn spectral_route_matches_ode_integration() {
        let p = TbmParams::new(16, 1.0).unwrap();
        let ode = reference::hopping_ode_occupation(&p, 0, 3.0, 1e-3);
        let state = evolve(&TbmState::localized(&p, 0).unwrap(), &p, 3.0);
        let spectral = site_occupation(&state);
        for (a, b) in ode.iter().zip(&spectral) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(TbmParams::new(1, 1.0).is_err());
        assert!(TbmParams::new(10, 0.0).is_err());
        assert!(TbmParams::new(10, -2.0).is_err());
        let p = TbmParams::new(4, 1.0).unwrap();
        assert!(TbmState::localized(&p, 4).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn evolution_preserves_norm(
            n_sites in 2usize..40,
            gamma in 0.1f64..3.0,
            taus in proptest::collection::vec(0.0f64..5.0, 1..6),
        ) {
            let p = TbmParams::new(n_sites, gamma).unwrap();
            let mut state = TbmState::localized(&p, n_sites / 2).unwrap();
            for &tau in &taus {
                state = evolve(&state, &p, tau);
                prop_assert!((state.norm_sq() - 1.0).abs() < tol::UNITARITY);
            }
        }

        #[test]
        fn return_probability_is_a_probability(
            n_sites in 2usize..60,
            gamma in 0.1f64..3.0,
            tau in 0.0f64..40.0,
        ) {
            let p = TbmParams::new(n_sites, gamma).unwrap();
            let q = q_return(&p, tau);
            prop_assert!((0.0..=1.0).contains(&q));
        }
    }
}
