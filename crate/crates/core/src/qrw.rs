//! Coined quantum random walk on a periodic one-dimensional lattice.
//!
//! One time step acts on the walker state with the coin rotation `C` in spin
//! space followed by the spin-conditioned translation `U` (spin-up moves one
//! site right, spin-down one site left). In component form, with
//! `|Psi(n,t)> = [Psi_u(n,t), Psi_d(n,t)]`:
//!
//! ```text
//! Psi_u(n, t+1) =  cos(theta) Psi_u(n-1, t) + sin(theta) Psi_d(n-1, t)
//! Psi_d(n, t+1) = -sin(theta) Psi_u(n+1, t) + cos(theta) Psi_d(n+1, t)
//! ```
//!
//! Three equivalent propagation routes are provided: direct stepping
//! ([`step`]), spectral evolution through the per-mode transfer matrix
//! ([`fourier_propagate`]), and the fully closed-form amplitudes
//! ([`amplitude_closed_form`]). They agree to [`tol::PROPAGATOR_EQUIV`].
//!
//! The walk is invariant under `theta -> theta + pi` (the transfer matrices
//! only change sign), so coin angles are restricted to `[0, pi]`.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QrwError {
    #[error("coin angle must lie in [0, pi] and be finite, got {0}")]
    CoinAngleRange(f64),
    #[error("initial spinor (a, b) must be nonzero")]
    ZeroSpinor,
    #[error("lattice needs at least 2 sites, got {0}")]
    LatticeTooSmall(usize),
    #[error("initial site {n0} outside lattice of {n_sites} sites")]
    SiteOutOfRange { n0: usize, n_sites: usize },
    #[error(
        "spectral decomposition is degenerate at theta = {0} (the coin does not mix \
         the spin states); use the direct shift propagator instead"
    )]
    SingularCoin(f64),
}

/// Coin rotation angle, restricted to `[0, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinAngle(f64);

/// How the coin acts at the exactly solvable angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CoinKind {
    /// theta = 0: no spin mixing, components translate ballistically.
    Shift,
    /// theta = pi: ballistic translation with a sign flip per step.
    NegShift,
    /// theta = pi/2: full mixing, `up -> -down`, `down -> up`.
    SwapShift,
    Generic,
}

impl CoinAngle {
    pub fn new(theta: f64) -> Result<Self, QrwError> {
        if theta.is_finite() && (0.0..=PI).contains(&theta) {
            Ok(Self(theta))
        } else {
            Err(QrwError::CoinAngleRange(theta))
        }
    }

    pub fn from_degrees(degrees: f64) -> Result<Self, QrwError> {
        Self::new(degrees.to_radians())
    }

    /// Fold an arbitrary angle into `[0, pi)` using the `theta -> theta + pi`
    /// invariance of all observables.
    pub fn reduced(theta: f64) -> Self {
        let mut t = theta.rem_euclid(2.0 * PI);
        if t >= PI {
            t -= PI;
        }
        Self(t)
    }

    pub fn theta(self) -> f64 {
        self.0
    }

    pub(crate) fn kind(self) -> CoinKind {
        if self.0 == 0.0 {
            CoinKind::Shift
        } else if self.0 == PI {
            CoinKind::NegShift
        } else if self.0 == PI / 2.0 {
            CoinKind::SwapShift
        } else {
            CoinKind::Generic
        }
    }
}

/// Initial condition: the walker localized on site `n0` in a normalized
/// superposition `(a |up> + b |down>) |n0>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinorInit {
    a: C64,
    b: C64,
    n0: usize,
}

impl SpinorInit {
    /// Store the spinor normalized by `1/sqrt(|a|^2 + |b|^2)`.
    pub fn new(a: C64, b: C64, n0: usize) -> Result<Self, QrwError> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QrwError::ZeroSpinor);
        }
        Ok(Self { a: a / norm, b: b / norm, n0 })
    }

    pub fn a(&self) -> C64 {
        self.a
    }

    pub fn b(&self) -> C64 {
        self.b
    }

    pub fn n0(&self) -> usize {
        self.n0
    }
}

/// Walker state: one spin-up and one spin-down amplitude per lattice site.
#[derive(Debug, Clone, PartialEq)]
pub struct QrwState {
    pub up: Vec<C64>,
    pub down: Vec<C64>,
}

impl QrwState {
    pub fn localized(n_sites: usize, init: &SpinorInit) -> Result<Self, QrwError> {
        if n_sites < 2 {
            return Err(QrwError::LatticeTooSmall(n_sites));
        }
        if init.n0 >= n_sites {
            return Err(QrwError::SiteOutOfRange { n0: init.n0, n_sites });
        }
        let mut state =
            Self { up: vec![C64::ZERO; n_sites], down: vec![C64::ZERO; n_sites] };
        state.up[init.n0] = init.a;
        state.down[init.n0] = init.b;
        Ok(state)
    }

    pub fn n_sites(&self) -> usize {
        self.up.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.up.iter().chain(self.down.iter()).map(|c| c.norm_sqr()).sum()
    }
}

/// One step of the walk: coin rotation followed by the conditional shift.
pub fn step(state: &QrwState, coin: CoinAngle) -> QrwState {
    let n = state.n_sites();
    let (c, s) = (coin.theta().cos(), coin.theta().sin());
    let mut up = vec![C64::ZERO; n];
    let mut down = vec![C64::ZERO; n];
    for site in 0..n {
        let left = (site + n - 1) % n;
        let right = (site + 1) % n;
        up[site] = c * state.up[left] + s * state.down[left];
        down[site] = -s * state.up[right] + c * state.down[right];
    }
    QrwState { up, down }
}

/// Storage slot -> signed Fourier wavenumber.
///
/// Modes live on `k in [-(N-1)/2, (N-1)/2]` for odd `N` and
/// `k in [-N/2, N/2-1]` for even `N`; slot `j` holds `k = j` for
/// `j <= (N-1)/2` and `k = j - N` above.
pub fn mode_wavenumber(n_sites: usize, slot: usize) -> i64 {
    let n = n_sites as i64;
    let j = slot as i64;
    if j <= (n - 1) / 2 {
        j
    } else {
        j - n
    }
}

/// One spectral mode of the single-step transfer matrix
///
/// ```text
/// M_k = [  e^{+i 2pi k/N} cos(theta)   e^{+i 2pi k/N} sin(theta) ]
///       [ -e^{-i 2pi k/N} sin(theta)   e^{-i 2pi k/N} cos(theta) ]
/// ```
///
/// with eigenvalues `e^{+-i omega_k}`, `cos(omega_k) = cos(2pi k/N) cos(theta)`,
/// and orthonormal eigenvectors built from
/// `h_±(k) = cot(theta) sin(2pi k/N) ± csc(theta) sin(omega_k)`.
#[derive(Debug, Clone, Copy)]
pub struct EigenMode {
    pub k: i64,
    pub omega: f64,
    pub h_plus: f64,
    pub h_minus: f64,
    pub phi1: [C64; 2],
    pub phi2: [C64; 2],
}

impl EigenMode {
    /// Apply `M_k^t` to a mode vector.
    pub fn apply(&self, v: [C64; 2], t: f64) -> [C64; 2] {
        let c1 = self.phi1[0].conj() * v[0] + self.phi1[1].conj() * v[1];
        let c2 = self.phi2[0].conj() * v[0] + self.phi2[1].conj() * v[1];
        let e1 = C64::cis(self.omega * t) * c1;
        let e2 = C64::cis(-self.omega * t) * c2;
        [e1 * self.phi1[0] + e2 * self.phi2[0], e1 * self.phi1[1] + e2 * self.phi2[1]]
    }
}

/// Spectral decomposition of all transfer matrices for a lattice/coin pair.
#[derive(Debug, Clone)]
pub struct QrwEigenSystem {
    n_sites: usize,
    modes: Vec<EigenMode>,
}

impl QrwEigenSystem {
    /// Fails with [`QrwError::SingularCoin`] at `theta = 0` and `theta = pi`,
    /// where `h_±` degenerate (no spin mixing).
    pub fn new(n_sites: usize, coin: CoinAngle) -> Result<Self, QrwError> {
        if n_sites < 2 {
            return Err(QrwError::LatticeTooSmall(n_sites));
        }
        let theta = coin.theta();
        if matches!(coin.kind(), CoinKind::Shift | CoinKind::NegShift) {
            return Err(QrwError::SingularCoin(theta));
        }
        let (cot, csc) = (1.0 / theta.tan(), 1.0 / theta.sin());
        let modes = (0..n_sites)
            .map(|slot| {
                let k = mode_wavenumber(n_sites, slot);
                let kk = 2.0 * PI * k as f64 / n_sites as f64;
                let cos_omega = (kk.cos() * theta.cos()).clamp(-1.0, 1.0);
                let omega = cos_omega.acos();
                let sin_omega = omega.sin();
                let h_plus = cot * kk.sin() + csc * sin_omega;
                let h_minus = cot * kk.sin() - csc * sin_omega;
                let phase = C64::cis(kk);
                let mi = C64::new(0.0, -1.0);
                let n1 = 1.0 / (1.0 + h_plus * h_plus).sqrt();
                let n2 = 1.0 / (1.0 + h_minus * h_minus).sqrt();
                EigenMode {
                    k,
                    omega,
                    h_plus,
                    h_minus,
                    phi1: [mi * phase * h_plus * n1, C64::new(n1, 0.0)],
                    phi2: [mi * phase * h_minus * n2, C64::new(n2, 0.0)],
                }
            })
            .collect();
        Ok(Self { n_sites, modes })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn modes(&self) -> &[EigenMode] {
        &self.modes
    }

    /// Forward transform `Psi~(k) = sum_n Psi(n) e^{+i 2pi k n / N}`.
    pub fn forward(&self, state: &QrwState) -> Vec<[C64; 2]> {
        fourier_forward(state)
    }

    /// Inverse transform `Psi(n) = (1/N) sum_k Psi~(k) e^{-i 2pi k n / N}`.
    pub fn inverse(&self, modes: &[[C64; 2]]) -> QrwState {
        fourier_inverse(self.n_sites, modes)
    }
}

fn fourier_forward(state: &QrwState) -> Vec<[C64; 2]> {
    let n = state.n_sites();
    (0..n)
        .map(|slot| {
            let k = mode_wavenumber(n, slot);
            let mut acc = [C64::ZERO; 2];
            for site in 0..n {
                let w = C64::cis(2.0 * PI * k as f64 * site as f64 / n as f64);
                acc[0] += state.up[site] * w;
                acc[1] += state.down[site] * w;
            }
            acc
        })
        .collect()
}

fn fourier_inverse(n_sites: usize, modes: &[[C64; 2]]) -> QrwState {
    let n = n_sites;
    let mut up = vec![C64::ZERO; n];
    let mut down = vec![C64::ZERO; n];
    for site in 0..n {
        let mut acc = [C64::ZERO; 2];
        for (slot, m) in modes.iter().enumerate() {
            let k = mode_wavenumber(n, slot);
            let w = C64::cis(-2.0 * PI * k as f64 * site as f64 / n as f64);
            acc[0] += m[0] * w;
            acc[1] += m[1] * w;
        }
        up[site] = acc[0] / n as f64;
        down[site] = acc[1] / n as f64;
    }
    QrwState { up, down }
}

/// Propagate `t` steps through Fourier space; equals `t` applications of
/// [`step`] at cost independent of `t` (one eigenphase per mode).
pub fn fourier_propagate(state: &QrwState, coin: CoinAngle, t: u64) -> QrwState {
    match coin.kind() {
        CoinKind::Shift => shift_propagate(state, t, 1.0),
        CoinKind::NegShift => shift_propagate(state, t, if t % 2 == 0 { 1.0 } else { -1.0 }),
        CoinKind::SwapShift => swap_propagate(state, t),
        CoinKind::Generic => {
            let eig = QrwEigenSystem::new(state.n_sites(), coin).expect("generic coin");
            let mut modes = fourier_forward(state);
            for (m, em) in modes.iter_mut().zip(eig.modes()) {
                *m = em.apply(*m, t as f64);
            }
            fourier_inverse(state.n_sites(), &modes)
        }
    }
}

/// theta = 0 or pi: spin-up translates right, spin-down left, times a sign.
fn shift_propagate(state: &QrwState, t: u64, sign: f64) -> QrwState {
    let n = state.n_sites();
    let shift = (t % n as u64) as usize;
    let mut up = vec![C64::ZERO; n];
    let mut down = vec![C64::ZERO; n];
    for site in 0..n {
        up[(site + shift) % n] = sign * state.up[site];
        down[(site + n - shift % n) % n] = sign * state.down[site];
    }
    QrwState { up, down }
}

/// theta = pi/2: two steps return the state negated, so
/// `psi(t) = (-1)^{t/2} psi(0)` for even `t`.
fn swap_propagate(state: &QrwState, t: u64) -> QrwState {
    let half = t / 2;
    let sign = if half % 2 == 0 { 1.0 } else { -1.0 };
    let base = if t % 2 == 0 { state.clone() } else { step(state, CoinAngle(PI / 2.0)) };
    QrwState {
        up: base.up.iter().map(|c| sign * c).collect(),
        down: base.down.iter().map(|c| sign * c).collect(),
    }
}

/// Closed-form amplitudes `(Psi_u(n,t), Psi_d(n,t))` for a walker started
/// from `init` on an `n_sites` ring.
///
/// For odd `N` the amplitudes are a plain sum of per-mode terms over
/// `k in [-(N-1)/2, (N-1)/2]`; for even `N` the unpaired `k = -N/2` mode
/// contributes the separate alternating term `(-1)^{n - n0 + t}` built from
/// `cos(theta t)` and `sin(theta t)`.
pub fn amplitude_closed_form(
    init: &SpinorInit,
    coin: CoinAngle,
    n_sites: usize,
    n: usize,
    t: u64,
) -> (C64, C64) {
    let nn = n_sites as f64;
    let (a, b) = (init.a, init.b);
    let n0 = init.n0;
    match coin.kind() {
        CoinKind::Shift | CoinKind::NegShift => {
            let sign = if coin.kind() == CoinKind::NegShift && t % 2 == 1 { -1.0 } else { 1.0 };
            let shift = (t % n_sites as u64) as usize;
            let u = if n == (n0 + shift) % n_sites { sign * a } else { C64::ZERO };
            let d = if n == (n0 + n_sites - shift) % n_sites { sign * b } else { C64::ZERO };
            (u, d)
        }
        CoinKind::SwapShift => {
            let sign = if (t / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if t % 2 == 0 {
                if n == n0 {
                    (sign * a, sign * b)
                } else {
                    (C64::ZERO, C64::ZERO)
                }
            } else {
                let u = if n == (n0 + 1) % n_sites { sign * b } else { C64::ZERO };
                let d = if n == (n0 + n_sites - 1) % n_sites { -sign * a } else { C64::ZERO };
                (u, d)
            }
        }
        CoinKind::Generic => {
            let eig = QrwEigenSystem::new(n_sites, coin).expect("generic coin");
            let dn = n as i64 - n0 as i64;
            let mut u = C64::ZERO;
            let mut d = C64::ZERO;
            for mode in eig.modes() {
                if n_sites % 2 == 0 && mode.k == -(n_sites as i64) / 2 {
                    continue; // handled by the alternating term below
                }
                let kk = 2.0 * PI * mode.k as f64 / nn;
                let wt = mode.omega * t as f64;
                let h = mode.h_plus;
                let norm = 2.0 / (nn * (1.0 + h * h));
                u += norm
                    * (a * (kk * dn as f64 + wt).cos()
                        + b * h * (kk * (dn - 1) as f64 + wt).sin());
                d += norm
                    * (-a * h * (-kk * (dn + 1) as f64 + wt).sin()
                        + b * (-kk * dn as f64 + wt).cos());
            }
            if n_sites % 2 == 0 {
                let alt = if (dn + t as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let tt = coin.theta() * t as f64;
                u += alt / nn * (a * tt.cos() + b * tt.sin());
                d += alt / nn * (-a * tt.sin() + b * tt.cos());
            }
            (u, d)
        }
    }
}

/// Site occupation probabilities `P_n(t) = |Psi_u(n,t)|^2 + |Psi_d(n,t)|^2`.
pub fn site_occupation(state: &QrwState) -> Vec<f64> {
    state
        .up
        .iter()
        .zip(&state.down)
        .map(|(u, d)| u.norm_sqr() + d.norm_sqr())
        .collect()
}

/// Return probability `q(tau) = |<psi(0)| U^tau |psi(0)>|^2`, evaluated from
/// the closed-form amplitudes at the initial site.
pub fn q_return(init: &SpinorInit, coin: CoinAngle, n_sites: usize, tau: u64) -> f64 {
    let (u, d) = amplitude_closed_form(init, coin, n_sites, init.n0, tau);
    let c = init.a.conj() * u + init.b.conj() * d;
    c.norm_sqr().min(1.0)
}

/// Sites that can carry nonzero occupation at time `t`.
///
/// A path of `t` unit steps has displacement `d = t (mod 2)`, so on an even
/// ring the site parity is locked to the parity of `n0 + t` for all times.
/// On an odd ring the lock holds for short times, but once a winding path
/// fits inside `t` steps (`t >= N - |d|` for the symmetric displacement `d`)
/// the opposite parity opens up as well, and for `t > N` every site is
/// reachable.
pub fn parity_support(n_sites: usize, n0: usize, t: u64) -> Vec<bool> {
    let n = n_sites as i64;
    (0..n_sites)
        .map(|site| {
            let delta = (site as i64 - n0 as i64).rem_euclid(n);
            if n_sites % 2 == 0 {
                (delta - t as i64).rem_euclid(2) == 0
            } else {
                let half = (n - 1) / 2;
                let sym = (delta + half).rem_euclid(n) - half;
                let parity_ok = (sym - t as i64).rem_euclid(2) == 0;
                parity_ok || (n - sym.abs()) as u64 <= t
            }
        })
        .collect()
}

/// Cached evaluation of the return probability `q(tau)` for many `tau`.
///
/// For a mixing coin the return amplitude is a trigonometric polynomial in
/// `tau`,
///
/// ```text
/// c(tau) = (1/N) sum_k [ w1_k e^{+i omega_k tau} + w2_k e^{-i omega_k tau} ]
/// ```
///
/// with nonnegative weights `w1_k = |<phi1_k|v>|^2`, `w2_k = |<phi2_k|v>|^2`
/// (independent of the starting site), which makes grid evaluation cheap.
#[derive(Debug, Clone)]
pub struct ReturnProbability {
    kind: ReturnKind,
}

#[derive(Debug, Clone)]
enum ReturnKind {
    Generic { omegas: Vec<f64>, w_sum: Vec<f64>, w_diff: Vec<f64>, inv_n: f64 },
    /// theta in {0, pi}: ballistic revival after a full loop only.
    BallisticRevival { n_sites: u64 },
    /// theta = pi/2: exact two-step revival.
    TwoStepRevival,
}

impl ReturnProbability {
    pub fn new(init: &SpinorInit, coin: CoinAngle, n_sites: usize) -> Self {
        let kind = match coin.kind() {
            CoinKind::Shift | CoinKind::NegShift => {
                ReturnKind::BallisticRevival { n_sites: n_sites as u64 }
            }
            CoinKind::SwapShift => ReturnKind::TwoStepRevival,
            CoinKind::Generic => {
                let eig = QrwEigenSystem::new(n_sites, coin).expect("generic coin");
                let v = [init.a, init.b];
                let mut omegas = Vec::with_capacity(n_sites);
                let mut w_sum = Vec::with_capacity(n_sites);
                let mut w_diff = Vec::with_capacity(n_sites);
                for m in eig.modes() {
                    let c1 = m.phi1[0].conj() * v[0] + m.phi1[1].conj() * v[1];
                    let c2 = m.phi2[0].conj() * v[0] + m.phi2[1].conj() * v[1];
                    let (w1, w2) = (c1.norm_sqr(), c2.norm_sqr());
                    omegas.push(m.omega);
                    w_sum.push(w1 + w2);
                    w_diff.push(w1 - w2);
                }
                ReturnKind::Generic { omegas, w_sum, w_diff, inv_n: 1.0 / n_sites as f64 }
            }
        };
        Self { kind }
    }

    pub fn eval(&self, tau: f64) -> f64 {
        match &self.kind {
            ReturnKind::BallisticRevival { n_sites } => {
                if (tau as u64) % n_sites == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            ReturnKind::TwoStepRevival => {
                if (tau as u64) % 2 == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            ReturnKind::Generic { omegas, w_sum, w_diff, inv_n } => {
                let mut re = 0.0;
                let mut im = 0.0;
                for ((om, ws), wd) in omegas.iter().zip(w_sum).zip(w_diff) {
                    let (s, c) = (om * tau).sin_cos();
                    re += ws * c;
                    im += wd * s;
                }
                ((re * re + im * im) * inv_n * inv_n).min(1.0)
            }
        }
    }

    /// `q(tau)` on the even grid `tau = 2, 4, ..., 2 * terms`, evaluated with
    /// per-mode phase rotors (re-synchronized periodically against drift).
    pub fn eval_even_grid(&self, terms: u64) -> Vec<f64> {
        match &self.kind {
            ReturnKind::Generic { omegas, w_sum, w_diff, inv_n } => {
                const RESYNC: u64 = 4096;
                let n_modes = omegas.len();
                let rot: Vec<C64> = omegas.iter().map(|&om| C64::cis(2.0 * om)).collect();
                let mut cur: Vec<C64> = rot.clone();
                let mut out = Vec::with_capacity(terms as usize);
                for j in 1..=terms {
                    if j % RESYNC == 0 {
                        for (c, &om) in cur.iter_mut().zip(omegas) {
                            *c = C64::cis(2.0 * om * j as f64);
                        }
                    }
                    let mut re = 0.0;
                    let mut im = 0.0;
                    for i in 0..n_modes {
                        re += w_sum[i] * cur[i].re;
                        im += w_diff[i] * cur[i].im;
                        cur[i] *= rot[i];
                    }
                    out.push(((re * re + im * im) * inv_n * inv_n).min(1.0));
                }
                out
            }
            _ => (1..=terms).map(|j| self.eval(2.0 * j as f64)).collect(),
        }
    }
}
