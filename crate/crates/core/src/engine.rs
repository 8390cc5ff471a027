//! The repeated evolve-and-measure protocol.
//!
//! Starting from a normalized initial state, each round evolves the current
//! state unitarily for a random waiting time `tau_alpha` and then performs an
//! instantaneous projective measurement onto the initial state,
//! `P = |psi(0)><psi(0)|`. Evolution continues with either
//!
//! - the projected component `P |psi>` ([`Scheme::Projected`]), or
//! - the leftover component `(I - P) |psi>` ([`Scheme::Leftover`]).
//!
//! No renormalization is ever applied: the squared norm after the `m`-th
//! measurement *is* the survival probability `S_m`, and
//! `F_m = S_{m-1} - S_m` is the probability of first detection at round `m`.
//!
//! Model states are kept in Fourier space, where free evolution is a
//! per-mode phase and the projector touches a single site, so one
//! measurement round costs O(N) regardless of `tau`.

use num_complex::Complex64 as C64;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::intervals::{IntervalLaw, TauSupport};
use crate::qrw::{self, CoinAngle, QrwError, ReturnProbability, SpinorInit};
use crate::rng::realization_rng;
use crate::tbm::{ReturnAmplitude, TbmError, TbmParams};
use crate::tol;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(
        "incompatible waiting-time law for the discrete-time walk: the walk advances in \
         integer steps and, for the parity-locked lattice (even site count), occupies the \
         starting site only at even times, so any measurement after an odd or non-integer \
         interval would return zero; use a law supported on the even integers"
    )]
    ParityMismatch,
    #[error("survival series increases at m = {m} by {increase:.3e} (beyond noise)")]
    NonMonotonic { m: usize, increase: f64 },
    #[error("ensemble needs at least one realization")]
    NoRealizations,
    #[error(transparent)]
    Qrw(#[from] QrwError),
    #[error(transparent)]
    Tbm(#[from] TbmError),
}

/// Which component of the measured state continues to evolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Keep `P |psi>`: the component along the initial state.
    Projected,
    /// Keep `(I - P) |psi>`: what the detector did not claim.
    Leftover,
}

/// A lattice model prepared for the measurement protocol.
pub trait System: Sync {
    type State: Clone + Send;

    fn initial_state(&self) -> Self::State;
    /// Free unitary evolution for waiting time `tau`, in place.
    fn evolve(&self, state: &mut Self::State, tau: f64);
    /// `<psi(0)|state>`.
    fn overlap_with_initial(&self, state: &Self::State) -> C64;
    /// `state - c |psi(0)>`, in place.
    fn subtract_initial(&self, state: &mut Self::State, c: C64);
    /// `c |psi(0)>`.
    fn scaled_initial(&self, c: C64) -> Self::State;
    fn norm_sq(&self, state: &Self::State) -> f64;
    /// Return probability `q(tau)` for the free evolution.
    fn return_probability(&self, tau: f64) -> f64;
    /// Which waiting times the model can accept.
    fn admissible_support(&self) -> TauSupport;
    fn descriptor(&self) -> String;
}

/// One projective measurement: returns the survival weight (the squared norm
/// of the post-measurement state) and the state that continues to evolve.
pub fn measure<S: System>(sys: &S, state: &S::State, scheme: Scheme) -> (f64, S::State) {
    let c = sys.overlap_with_initial(state);
    match scheme {
        Scheme::Projected => {
            let post = sys.scaled_initial(c);
            (sys.norm_sq(&post), post)
        }
        Scheme::Leftover => {
            let mut post = state.clone();
            sys.subtract_initial(&mut post, c);
            (sys.norm_sq(&post), post)
        }
    }
}

/// First-detection series `F_m = S_{m-1} - S_m` (with `S_0 = 1`).
///
/// Fails if the survival series increases by more than [`tol::MONOTONE_NOISE`].
pub fn first_detection(survival: &[f64]) -> Result<Vec<f64>, EngineError> {
    let mut prev = 1.0;
    let mut out = Vec::with_capacity(survival.len());
    for (m, &s) in survival.iter().enumerate() {
        let f = prev - s;
        if f < -tol::MONOTONE_NOISE {
            return Err(EngineError::NonMonotonic { m: m + 1, increase: -f });
        }
        out.push(f);
        prev = s;
    }
    Ok(out)
}

/// One realization: the sampled waiting times with the resulting survival and
/// first-detection series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub taus: Vec<f64>,
    pub survival: Vec<f64>,
    pub first_detection: Vec<f64>,
}

/// Run one realization of `m` measurement rounds.
pub fn run_trajectory<S: System>(
    sys: &S,
    scheme: Scheme,
    law: &IntervalLaw,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory, EngineError> {
    check_law_support(sys, law)?;
    let mut state = sys.initial_state();
    let mut taus = Vec::with_capacity(m);
    let mut survival = Vec::with_capacity(m);
    let mut dead = false;
    for _ in 0..m {
        let tau = law.sample(rng);
        taus.push(tau);
        if dead {
            survival.push(0.0);
            continue;
        }
        sys.evolve(&mut state, tau);
        let (weight, post) = measure(sys, &state, scheme);
        survival.push(weight);
        state = post;
        // once the state is exactly zero it stays zero
        if weight == 0.0 {
            dead = true;
        }
    }
    let first_detection = first_detection(&survival)?;
    Ok(Trajectory { taus, survival, first_detection })
}

fn check_law_support<S: System>(sys: &S, law: &IntervalLaw) -> Result<(), EngineError> {
    match (sys.admissible_support(), law.support()) {
        (TauSupport::EvenIntegers, TauSupport::PositiveReals) => Err(EngineError::ParityMismatch),
        _ => Ok(()),
    }
}

/// Order-independent accumulator for ensemble statistics.
///
/// Trajectories must be absorbed in realization order (the driver computes
/// batches in parallel and folds them back in index order), which keeps all
/// floating-point sums — and therefore the published statistics — bit-stable
/// across thread counts. Serializable so long scans can checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleAccumulator {
    m: usize,
    keep_traces: usize,
    pub absorbed: u64,
    sum_s: Vec<f64>,
    sum_log_s: Vec<f64>,
    count_positive: Vec<u64>,
    traces: Vec<Trajectory>,
}

impl EnsembleAccumulator {
    pub fn new(m: usize, keep_traces: usize) -> Self {
        Self {
            m,
            keep_traces,
            absorbed: 0,
            sum_s: vec![0.0; m],
            sum_log_s: vec![0.0; m],
            count_positive: vec![0; m],
            traces: Vec::new(),
        }
    }

    pub fn absorb(&mut self, trajectory: Trajectory) {
        assert_eq!(trajectory.survival.len(), self.m, "trajectory length mismatch");
        for (i, &s) in trajectory.survival.iter().enumerate() {
            self.sum_s[i] += s;
            if s > 0.0 {
                self.sum_log_s[i] += s.ln();
                self.count_positive[i] += 1;
            }
        }
        if self.traces.len() < self.keep_traces {
            self.traces.push(trajectory);
        }
        self.absorbed += 1;
    }

    pub fn finish(
        self,
        master_seed: u64,
        model: String,
        scheme: Scheme,
        law: IntervalLaw,
    ) -> EnsembleResult {
        let r = self.absorbed.max(1) as f64;
        let s_mean = self.sum_s.iter().map(|s| s / r).collect();
        let s_typical = self
            .sum_log_s
            .iter()
            .zip(&self.count_positive)
            .map(|(ls, &n)| if n == 0 { 0.0 } else { (ls / n as f64).exp() })
            .collect();
        EnsembleResult {
            s_mean,
            s_typical,
            traces: self.traces,
            realizations: self.absorbed,
            master_seed,
            model,
            scheme,
            law,
        }
    }
}

/// Ensemble statistics over independent realizations of the waiting times.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleResult {
    /// Arithmetic mean of `S_m` across realizations.
    pub s_mean: Vec<f64>,
    /// Geometric-mean estimator `exp(<ln S_m>)` over realizations with
    /// `S_m > 0`; converges to the most probable value at large `m`.
    pub s_typical: Vec<f64>,
    /// The first few retained realizations.
    pub traces: Vec<Trajectory>,
    pub realizations: u64,
    pub master_seed: u64,
    pub model: String,
    pub scheme: Scheme,
    pub law: IntervalLaw,
}

impl EnsembleResult {
    /// Mean first-detection series, `F_m = S_{m-1} - S_m` applied to the mean.
    pub fn f_mean(&self) -> Vec<f64> {
        diff_series(&self.s_mean)
    }

    /// First-detection series of the typical-survival estimator.
    pub fn f_typical(&self) -> Vec<f64> {
        diff_series(&self.s_typical)
    }
}

fn diff_series(s: &[f64]) -> Vec<f64> {
    let mut prev = 1.0;
    s.iter()
        .map(|&v| {
            let f = prev - v;
            prev = v;
            f
        })
        .collect()
}

/// Batch size for parallel realization scheduling.
const BATCH: u64 = 64;

/// Run `realizations` independent realizations, deterministically seeded from
/// `master_seed` (realization `i` uses stream `i`; see [`crate::rng`]).
pub fn run_ensemble<S: System>(
    sys: &S,
    scheme: Scheme,
    law: &IntervalLaw,
    m: usize,
    realizations: u64,
    master_seed: u64,
    keep_traces: usize,
) -> Result<EnsembleResult, EngineError> {
    if realizations == 0 {
        return Err(EngineError::NoRealizations);
    }
    check_law_support(sys, law)?;
    let mut acc = EnsembleAccumulator::new(m, keep_traces);
    run_into_accumulator(sys, scheme, law, m, realizations, master_seed, &mut acc, |_| {})?;
    Ok(acc.finish(master_seed, sys.descriptor(), scheme, *law))
}

/// Drive realizations `acc.absorbed .. realizations` into an accumulator,
/// invoking `after_batch` after each absorbed batch (checkpoint hook).
pub fn run_into_accumulator<S: System>(
    sys: &S,
    scheme: Scheme,
    law: &IntervalLaw,
    m: usize,
    realizations: u64,
    master_seed: u64,
    acc: &mut EnsembleAccumulator,
    mut after_batch: impl FnMut(&EnsembleAccumulator),
) -> Result<(), EngineError> {
    check_law_support(sys, law)?;
    while acc.absorbed < realizations {
        let start = acc.absorbed;
        let end = (start + BATCH).min(realizations);
        let batch: Result<Vec<Trajectory>, EngineError> = (start..end)
            .into_par_iter()
            .map(|i| {
                let mut rng = realization_rng(master_seed, i);
                run_trajectory(sys, scheme, law, m, &mut rng)
            })
            .collect();
        for trajectory in batch? {
            acc.absorb(trajectory);
        }
        after_batch(acc);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Models plugged into the protocol
// ---------------------------------------------------------------------------

/// Coined walk prepared for measurement, resident in Fourier space.
pub struct QrwSystem {
    n_sites: usize,
    init: SpinorInit,
    coin: CoinAngle,
    init_modes: Vec<[C64; 2]>,
    evolver: QrwEvolver,
    ret: ReturnProbability,
}

enum QrwEvolver {
    Eigen(Vec<qrw::EigenMode>),
    /// theta = 0 or pi: `M_k = sign * diag(e^{+i kk}, e^{-i kk})`.
    Shift { wavenumbers: Vec<f64>, negate: bool },
    /// theta = pi/2: `M_k^2 = -I`.
    Swap { wavenumbers: Vec<f64> },
}

impl QrwSystem {
    pub fn new(n_sites: usize, coin: CoinAngle, init: SpinorInit) -> Result<Self, EngineError> {
        let state = qrw::QrwState::localized(n_sites, &init)?; // validates sizes
        drop(state);
        let init_modes: Vec<[C64; 2]> = (0..n_sites)
            .map(|slot| {
                let k = qrw::mode_wavenumber(n_sites, slot);
                let w = C64::cis(2.0 * PI * k as f64 * init.n0() as f64 / n_sites as f64);
                [w * init.a(), w * init.b()]
            })
            .collect();
        let wavenumbers = || {
            (0..n_sites)
                .map(|slot| {
                    2.0 * PI * qrw::mode_wavenumber(n_sites, slot) as f64 / n_sites as f64
                })
                .collect::<Vec<f64>>()
        };
        let evolver = match coin.theta() {
            t if t == 0.0 => QrwEvolver::Shift { wavenumbers: wavenumbers(), negate: false },
            t if t == PI => QrwEvolver::Shift { wavenumbers: wavenumbers(), negate: true },
            t if t == PI / 2.0 => QrwEvolver::Swap { wavenumbers: wavenumbers() },
            _ => QrwEvolver::Eigen(qrw::QrwEigenSystem::new(n_sites, coin)?.modes().to_vec()),
        };
        let ret = ReturnProbability::new(&init, coin, n_sites);
        Ok(Self { n_sites, init, coin, init_modes, evolver, ret })
    }

    pub fn coin(&self) -> CoinAngle {
        self.coin
    }

    pub fn init(&self) -> &SpinorInit {
        &self.init
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
}

impl System for QrwSystem {
    type State = Vec<[C64; 2]>;

    fn initial_state(&self) -> Self::State {
        self.init_modes.clone()
    }

    fn evolve(&self, state: &mut Self::State, tau: f64) {
        debug_assert!(tau >= 0.0 && tau.fract() == 0.0, "walk time must be integer");
        match &self.evolver {
            QrwEvolver::Eigen(modes) => {
                for (v, m) in state.iter_mut().zip(modes) {
                    *v = m.apply(*v, tau);
                }
            }
            QrwEvolver::Shift { wavenumbers, negate } => {
                let sign = if *negate && (tau as u64) % 2 == 1 { -1.0 } else { 1.0 };
                for (v, kk) in state.iter_mut().zip(wavenumbers) {
                    let w = C64::cis(kk * tau);
                    v[0] *= sign * w;
                    v[1] *= sign * w.conj();
                }
            }
            QrwEvolver::Swap { wavenumbers } => {
                let t = tau as u64;
                let sign = if (t / 2) % 2 == 0 { 1.0 } else { -1.0 };
                if t % 2 == 0 {
                    if sign < 0.0 {
                        for v in state.iter_mut() {
                            v[0] = -v[0];
                            v[1] = -v[1];
                        }
                    }
                } else {
                    // odd leftover step: M_k = [[0, e^{ikk}], [-e^{-ikk}, 0]]
                    for (v, kk) in state.iter_mut().zip(wavenumbers) {
                        let w = C64::cis(*kk);
                        let up = sign * w * v[1];
                        let down = -sign * w.conj() * v[0];
                        *v = [up, down];
                    }
                }
            }
        }
    }

    fn overlap_with_initial(&self, state: &Self::State) -> C64 {
        let mut acc = C64::ZERO;
        for (v, i) in state.iter().zip(&self.init_modes) {
            acc += i[0].conj() * v[0] + i[1].conj() * v[1];
        }
        acc / self.n_sites as f64
    }

    fn subtract_initial(&self, state: &mut Self::State, c: C64) {
        for (v, i) in state.iter_mut().zip(&self.init_modes) {
            v[0] -= c * i[0];
            v[1] -= c * i[1];
        }
    }

    fn scaled_initial(&self, c: C64) -> Self::State {
        self.init_modes.iter().map(|i| [c * i[0], c * i[1]]).collect()
    }

    fn norm_sq(&self, state: &Self::State) -> f64 {
        state.iter().map(|v| v[0].norm_sqr() + v[1].norm_sqr()).sum::<f64>()
            / self.n_sites as f64
    }

    fn return_probability(&self, tau: f64) -> f64 {
        self.ret.eval(tau)
    }

    fn admissible_support(&self) -> TauSupport {
        TauSupport::EvenIntegers
    }

    fn descriptor(&self) -> String {
        format!(
            "qrw(N={}, theta={:.12}, a={}, b={}, n0={})",
            self.n_sites,
            self.coin.theta(),
            self.init.a(),
            self.init.b(),
            self.init.n0()
        )
    }
}

/// Tight-binding chain prepared for measurement, resident in Fourier space.
pub struct TbmSystem {
    params: TbmParams,
    n0: usize,
    init_modes: Vec<C64>,
    mode_cosines: Vec<f64>,
    ret: ReturnAmplitude,
}

impl TbmSystem {
    pub fn new(params: TbmParams, n0: usize) -> Result<Self, EngineError> {
        if n0 >= params.n_sites() {
            return Err(TbmError::SiteOutOfRange { site: n0, n_sites: params.n_sites() }.into());
        }
        let nn = params.n_sites() as f64;
        let init_modes = (0..params.n_sites())
            .map(|q| C64::cis(-2.0 * PI * (q * n0 % params.n_sites()) as f64 / nn))
            .collect();
        let mode_cosines =
            (0..params.n_sites()).map(|q| (2.0 * PI * q as f64 / nn).cos()).collect();
        let ret = ReturnAmplitude::new(&params);
        Ok(Self { params, n0, init_modes, mode_cosines, ret })
    }

    pub fn params(&self) -> TbmParams {
        self.params
    }

    pub fn n0(&self) -> usize {
        self.n0
    }
}

impl System for TbmSystem {
    type State = Vec<C64>;

    fn initial_state(&self) -> Self::State {
        self.init_modes.clone()
    }

    fn evolve(&self, state: &mut Self::State, tau: f64) {
        let two_gamma_tau = 2.0 * self.params.gamma() * tau;
        for (v, cq) in state.iter_mut().zip(&self.mode_cosines) {
            *v *= C64::cis(two_gamma_tau * cq);
        }
    }

    fn overlap_with_initial(&self, state: &Self::State) -> C64 {
        // <n0|psi> = (1/N) sum_q psi_hat_q e^{+i 2pi q n0/N}
        let mut acc = C64::ZERO;
        for (v, i) in state.iter().zip(&self.init_modes) {
            acc += v * i.conj();
        }
        acc / self.params.n_sites() as f64
    }

    fn subtract_initial(&self, state: &mut Self::State, c: C64) {
        for (v, i) in state.iter_mut().zip(&self.init_modes) {
            *v -= c * i;
        }
    }

    fn scaled_initial(&self, c: C64) -> Self::State {
        self.init_modes.iter().map(|i| c * i).collect()
    }

    fn norm_sq(&self, state: &Self::State) -> f64 {
        state.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.params.n_sites() as f64
    }

    fn return_probability(&self, tau: f64) -> f64 {
        self.ret.eval(tau)
    }

    fn admissible_support(&self) -> TauSupport {
        TauSupport::PositiveReals
    }

    fn descriptor(&self) -> String {
        format!(
            "tbm(N={}, gamma={:.12}, n0={})",
            self.params.n_sites(),
            self.params.gamma(),
            self.n0
        )
    }
}
