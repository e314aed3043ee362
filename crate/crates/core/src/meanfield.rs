//! Thermodynamic-limit dynamics of the collective battery.
//!
//! With `m_α = <J_α>/N` and the rescaled rate `Γ = Nγ`, the magnetization
//! obeys
//!
//! ```text
//! dm_x/dt = nΓ m_z m_x
//! dm_y/dt = -2Ω m_z + nΓξ m_y m_z
//! dm_z/dt = 2Ω m_y - nΓ m_x² - nΓξ m_y²
//! ```
//!
//! with `ξ = 2g + 1`. The squared length `|m|²` is conserved. The flow has a
//! boundary-time-crystal phase for `Ω > Ω_cri = nΓ|ξ|/4` and two stationary
//! phases below it, distinguished by the sign of ξ.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::ode::{integrate, IntegratorOptions};
use crate::waveguide::Setup;
use crate::{Error, Result};

/// Drive, feedback and setup of a mean-field run. Ω and time are measured
/// in units of `big_gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldParams {
    pub omega: f64,
    pub g: f64,
    pub setup: Setup,
    /// Rescaled decay rate `Γ = Nγ`.
    pub big_gamma: f64,
}

impl MeanFieldParams {
    pub fn new(omega: f64, g: f64, setup: Setup) -> Self {
        MeanFieldParams {
            omega,
            g,
            setup,
            big_gamma: 1.0,
        }
    }

    pub fn xi(&self) -> f64 {
        2.0 * self.g + 1.0
    }

    /// `nΓ`
    fn n_gamma(&self) -> f64 {
        self.setup.n() as f64 * self.big_gamma
    }

    pub fn omega_cri(&self) -> f64 {
        self.n_gamma() * self.xi().abs() / 4.0
    }
}

/// Per-atom magnetization at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldState {
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
    pub t: f64,
}

impl MeanFieldState {
    /// All atoms in the ground state.
    pub const GROUND: MeanFieldState = MeanFieldState {
        mx: 0.0,
        my: 0.0,
        mz: -0.5,
        t: 0.0,
    };

    pub fn new(mx: f64, my: f64, mz: f64) -> Self {
        MeanFieldState { mx, my, mz, t: 0.0 }
    }

    pub fn length_sq(&self) -> f64 {
        self.mx * self.mx + self.my * self.my + self.mz * self.mz
    }

    /// Stored energy per atom in units of ω_0.
    pub fn energy(&self) -> f64 {
        self.mz + 0.5
    }

    /// Ergotropy per atom of the single-site state with Bloch vector `2m`.
    pub fn ergotropy(&self) -> f64 {
        (self.mz + self.length_sq().sqrt()).max(0.0)
    }

    fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.mx, self.my, self.mz)
    }

    fn from_vector(v: &Vector3<f64>, t: f64) -> Self {
        MeanFieldState {
            mx: v[0],
            my: v[1],
            mz: v[2],
            t,
        }
    }
}

fn rhs(v: &Vector3<f64>, p: &MeanFieldParams) -> Vector3<f64> {
    let (mx, my, mz) = (v[0], v[1], v[2]);
    let ng = p.n_gamma();
    let xi = p.xi();
    Vector3::new(
        ng * mz * mx,
        -2.0 * p.omega * mz + ng * xi * my * mz,
        2.0 * p.omega * my - ng * mx * mx - ng * xi * my * my,
    )
}

/// Right-hand side `(dm_x, dm_y, dm_z)`.
pub fn derivatives(s: &MeanFieldState, p: &MeanFieldParams) -> [f64; 3] {
    let d = rhs(&s.vector(), p);
    [d[0], d[1], d[2]]
}

/// Jacobian of [`derivatives`] with respect to `(m_x, m_y, m_z)`.
pub fn jacobian(s: &MeanFieldState, p: &MeanFieldParams) -> Matrix3<f64> {
    let ng = p.n_gamma();
    let xi = p.xi();
    Matrix3::new(
        ng * s.mz,
        0.0,
        ng * s.mx,
        0.0,
        ng * xi * s.mz,
        -2.0 * p.omega + ng * xi * s.my,
        -2.0 * ng * s.mx,
        2.0 * p.omega - 2.0 * ng * xi * s.my,
        0.0,
    )
}

/// Integrate the mean-field equations from `s0` and sample on `times`.
pub fn evolve(
    s0: &MeanFieldState,
    p: &MeanFieldParams,
    times: &[f64],
    opts: &IntegratorOptions,
) -> Result<Vec<MeanFieldState>> {
    if s0.length_sq().sqrt() > 0.5 + 1e-12 {
        return Err(Error::validation(format!(
            "magnetization length {} exceeds 1/2",
            s0.length_sq().sqrt()
        )));
    }
    let mut out = Vec::with_capacity(times.len());
    integrate(
        |_, v: &Vector3<f64>| rhs(v, p),
        s0.t,
        s0.vector(),
        times,
        opts,
        |_, t, v| {
            out.push(MeanFieldState::from_vector(v, t));
            Ok(())
        },
    )?;
    Ok(out)
}

/// Default integrator settings for mean-field runs; tight enough that the
/// conserved length drifts by well under 1e-9 over a few hundred 1/Γ.
pub fn default_options() -> IntegratorOptions {
    IntegratorOptions::with_rtol(1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Boundary time crystal: persistent oscillations.
    BtcA,
    /// Stationary with `E_ss ≤ 1/2` (ξ ≥ 0).
    StationaryB,
    /// Stationary with `E_ss > 1/2` (ξ < 0).
    StationaryC,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::BtcA => "btc_a",
            Phase::StationaryB => "stationary_b",
            Phase::StationaryC => "stationary_c",
        }
    }

    pub fn is_stationary(self) -> bool {
        self != Phase::BtcA
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub omega: f64,
    pub g: f64,
    pub setup: Setup,
    pub xi: f64,
    pub phase: Phase,
    /// Closed-form stationary energy per atom; `None` in the BTC phase.
    pub e_ss: Option<f64>,
    pub omega_cri: f64,
    /// `ξ = 0`: the critical drive vanishes.
    pub degenerate: bool,
}

/// Closed-form stationary energy
/// `E_ss = 1/2 - sign(ξ) √(1/4 - 4Ω²/(n²Γ²ξ²))`, defined for `Ω ≤ Ω_cri`.
pub fn steady_energy(p: &MeanFieldParams) -> Option<f64> {
    let xi = p.xi();
    if xi == 0.0 || p.omega.abs() > p.omega_cri() {
        return None;
    }
    let ratio = 2.0 * p.omega / (p.n_gamma() * xi);
    let root = (0.25 - ratio * ratio).max(0.0).sqrt();
    Some(0.5 - xi.signum() * root)
}

pub fn classify_phase(p: &MeanFieldParams) -> Result<PhasePoint> {
    if p.big_gamma.is_nan() || p.big_gamma <= 0.0 {
        return Err(Error::validation("big_gamma must be positive"));
    }
    let xi = p.xi();
    let omega_cri = p.omega_cri();
    let degenerate = xi == 0.0;
    let phase = if p.omega > omega_cri {
        Phase::BtcA
    } else if xi >= 0.0 {
        Phase::StationaryB
    } else {
        Phase::StationaryC
    };
    Ok(PhasePoint {
        omega: p.omega,
        g: p.g,
        setup: p.setup,
        xi,
        phase,
        e_ss: if phase.is_stationary() { steady_energy(p) } else { None },
        omega_cri,
        degenerate,
    })
}

/// The two stationary points `m = (0, 2Ω/(nΓξ), ±√(1/4 - m_y²))` on the
/// sphere reached from the ground state, physical branch first. Empty in the
/// BTC phase.
pub fn stationary_points(p: &MeanFieldParams) -> Vec<MeanFieldState> {
    let Some(e) = steady_energy(p) else {
        return Vec::new();
    };
    let my = 2.0 * p.omega / (p.n_gamma() * p.xi());
    let mz = e - 0.5;
    alloc::vec![MeanFieldState::new(0.0, my, mz), MeanFieldState::new(0.0, my, -mz)]
}

/// Tolerance on `|f(m)|` for [`stability`] to accept a fixed point.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-10;

/// Eigenvalues of the Jacobian at a fixed point. The point is linearly
/// stable iff every real part is `≤ 0`.
pub fn stability(fixed_point: &MeanFieldState, p: &MeanFieldParams) -> Result<[Complex64; 3]> {
    let f = derivatives(fixed_point, p);
    let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > FIXED_POINT_TOLERANCE {
        return Err(Error::validation(format!(
            "({}, {}, {}) is not a fixed point: |f| = {norm:e}",
            fixed_point.mx, fixed_point.my, fixed_point.mz
        )));
    }
    let eig = jacobian(fixed_point, p).complex_eigenvalues();
    Ok([eig[0], eig[1], eig[2]])
}

pub fn is_stable(eigenvalues: &[Complex64]) -> bool {
    eigenvalues.iter().all(|z| z.re <= 1e-12)
}

/// `M = Γ m_x^κ / (Γ κ m_y - Ω)`, with `|m_x|^κ` in the numerator since the
/// sign of `m_x` never changes along a trajectory.
pub fn conserved_m(s: &MeanFieldState, p: &MeanFieldParams, kappa: f64) -> Result<f64> {
    let den = p.big_gamma * kappa * s.my - p.omega;
    if den.abs() < 1e-12 {
        return Err(Error::Singular("conserved quantity denominator"));
    }
    let num = if s.mx == 0.0 { 0.0 } else { s.mx.abs().powf(kappa) };
    Ok(p.big_gamma * num / den)
}

/// Largest relative change of [`conserved_m`] along a trajectory from `s0`.
pub fn conserved_m_drift(
    s0: &MeanFieldState,
    p: &MeanFieldParams,
    kappa: f64,
    t_max: f64,
    samples: usize,
) -> Result<f64> {
    let grid = crate::lindblad::uniform_grid(t_max, samples);
    let traj = evolve(s0, p, &grid, &default_options())?;
    let m0 = conserved_m(s0, p, kappa)?;
    let mut worst = 0.0f64;
    for s in &traj {
        let m = conserved_m(s, p, kappa)?;
        worst = worst.max((m - m0).abs() / m0.abs().max(1e-300));
    }
    Ok(worst)
}

/// Pick the exponent among `candidates` that keeps `M` most nearly constant
/// along the trajectory from `s0`. Returns `(κ, drift)`.
///
/// Candidates whose denominator vanishes inside the window are skipped.
/// Stationary points sit on the zero set of `Γξ m_y - Ω` when `n = 2`, so
/// keep `t_max` short of the relaxation time.
pub fn identify_kappa(
    s0: &MeanFieldState,
    p: &MeanFieldParams,
    candidates: &[f64],
    t_max: f64,
) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for &kappa in candidates {
        let drift = match conserved_m_drift(s0, p, kappa, t_max, 200) {
            Ok(d) => d,
            Err(Error::Singular(_)) => continue,
            Err(e) => return Err(e),
        };
        if best.is_none_or(|(_, d)| drift < d) {
            best = Some((kappa, drift));
        }
    }
    best.ok_or(Error::validation("no usable kappa candidate"))
}

/// Peak-to-peak amplitude of a sampled signal. Interior extrema are refined
/// with a parabola through the neighbouring samples, so the estimate does not
/// depend on where the grid happens to fall on each peak.
pub fn peak_to_peak(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for (k, &v) in values.iter().enumerate() {
        hi = hi.max(v);
        lo = lo.min(v);
        if k == 0 || k + 1 == values.len() {
            continue;
        }
        let (a, b, c) = (values[k - 1], v, values[k + 1]);
        let is_max = b >= a && b >= c;
        let is_min = b <= a && b <= c;
        let curv = a - 2.0 * b + c;
        if (is_max || is_min) && curv != 0.0 {
            let peak = b - (c - a) * (c - a) / (8.0 * curv);
            if is_max {
                hi = hi.max(peak);
            } else {
                lo = lo.min(peak);
            }
        }
    }
    hi - lo
}

/// Behavioural phase test: run from the ground state to `t_max` and compare
/// the energy's peak-to-peak amplitude over the final quarter with
/// `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationTest {
    pub t_max: f64,
    pub samples: usize,
    pub threshold: f64,
}

impl Default for OscillationTest {
    fn default() -> Self {
        OscillationTest {
            t_max: 200.0,
            samples: 20_001,
            threshold: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationVerdict {
    pub amplitude: f64,
    pub final_energy: f64,
    pub oscillating: bool,
}

pub fn oscillation_verdict(p: &MeanFieldParams, test: &OscillationTest) -> Result<OscillationVerdict> {
    let grid = crate::lindblad::uniform_grid(test.t_max / p.big_gamma, test.samples);
    let traj = evolve(&MeanFieldState::GROUND, p, &grid, &default_options())?;
    let start = traj.len() * 3 / 4;
    let energies: Vec<f64> = traj[start..].iter().map(MeanFieldState::energy).collect();
    let amplitude = peak_to_peak(&energies);
    Ok(OscillationVerdict {
        amplitude,
        final_energy: traj.last().map(MeanFieldState::energy).unwrap_or(f64::NAN),
        oscillating: amplitude > test.threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(omega: f64, g: f64, setup: Setup) -> MeanFieldParams {
        MeanFieldParams::new(omega, g, setup)
    }

    fn numeric_jacobian(s: &MeanFieldState, p: &MeanFieldParams) -> Matrix3<f64> {
        let h = 1e-6;
        let mut j = Matrix3::zeros();
        for c in 0..3 {
            let mut plus = *s;
            let mut minus = *s;
            match c {
                0 => (plus.mx += h, minus.mx -= h),
                1 => (plus.my += h, minus.my -= h),
                _ => (plus.mz += h, minus.mz -= h),
            };
            let (fp, fm) = (derivatives(&plus, p), derivatives(&minus, p));
            for r in 0..3 {
                j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        j
    }

    #[test]
    fn ground_state_derivative() {
        for (omega, g, setup) in [(0.3, 1.0, Setup::II), (2.0, -2.0, Setup::I)] {
            let d = derivatives(&MeanFieldState::GROUND, &p(omega, g, setup));
            assert_eq!(d, [0.0, omega, 0.0]);
        }
        let d = derivatives(&MeanFieldState::new(0.0, 0.0, 0.5), &p(0.0, 0.7, Setup::II));
        assert_eq!(d, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn radial_derivative_vanishes() {
        let params = p(0.3, 1.0, Setup::II);
        for k in 0..50 {
            let a = k as f64 * 0.37;
            let s = MeanFieldState::new(0.4 * a.cos() * a.sin(), 0.3 * (2.0 * a).sin(), 0.45 * a.cos());
            let d = derivatives(&s, &params);
            let radial = s.mx * d[0] + s.my * d[1] + s.mz * d[2];
            assert!(radial.abs() < 1e-14);
        }
    }

    #[test]
    fn analytic_jacobian_matches_differences() {
        let params = p(0.8, -1.3, Setup::II);
        let s = MeanFieldState::new(0.21, -0.13, 0.3);
        let diff = jacobian(&s, &params) - numeric_jacobian(&s, &params);
        assert!(diff.amax() < 1e-8);
    }

    #[test]
    fn closed_form_steady_energies() {
        let b = classify_phase(&p(1.0, 1.0, Setup::II)).unwrap();
        assert_eq!(b.phase, Phase::StationaryB);
        assert!((b.e_ss.unwrap() - (0.5 - 5f64.sqrt() / 6.0)).abs() < 1e-15);
        assert!((b.e_ss.unwrap() - 0.1273).abs() < 1e-4);
        let c = classify_phase(&p(0.01, -2.0, Setup::II)).unwrap();
        assert_eq!(c.phase, Phase::StationaryC);
        assert!((c.e_ss.unwrap() - 0.99998).abs() < 1e-5);
        assert!(c.e_ss.unwrap() > 0.5);
    }

    #[test]
    fn btc_above_critical_drive() {
        let a = classify_phase(&p(2.0, 1.0, Setup::II)).unwrap();
        assert_eq!(a.phase, Phase::BtcA);
        assert_eq!(a.omega_cri, 1.5);
        assert_eq!(a.e_ss, None);
        assert!(stationary_points(&p(2.0, 1.0, Setup::II)).is_empty());
        // exactly on the boundary counts as stationary
        assert_eq!(classify_phase(&p(1.5, 1.0, Setup::II)).unwrap().phase, Phase::StationaryB);
        assert_eq!(p(1.0, 1.0, Setup::I).omega_cri(), 0.75);
    }

    #[test]
    fn degenerate_line() {
        let d = classify_phase(&p(0.2, -0.5, Setup::II)).unwrap();
        assert!(d.degenerate);
        assert_eq!((d.phase, d.omega_cri), (Phase::BtcA, 0.0));
        let mut bad = p(0.2, 1.0, Setup::II);
        bad.big_gamma = 0.0;
        assert!(classify_phase(&bad).is_err());
    }

    #[test]
    fn branch_stability() {
        let params = p(1.0, 1.0, Setup::II);
        let pts = stationary_points(&params);
        let phys = stability(&pts[0], &params).unwrap();
        assert!(is_stable(&phys));
        let mirror = stability(&pts[1], &params).unwrap();
        assert!(!is_stable(&mirror));
        // the oracle Jacobian agrees on both branches
        for s in &pts {
            let mut a = numeric_jacobian(s, &params).complex_eigenvalues().iter().map(|z| z.re).collect::<Vec<_>>();
            let mut b = jacobian(s, &params).complex_eigenvalues().iter().map(|z| z.re).collect::<Vec<_>>();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn south_pole_without_drive() {
        let params = p(0.0, 0.0, Setup::I);
        let eig = stability(&MeanFieldState::GROUND, &params).unwrap();
        assert!(is_stable(&eig));
        let mut re: Vec<f64> = eig.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert_eq!(re, [-0.5, -0.5, 0.0]);
    }

    #[test]
    fn non_fixed_point_rejected() {
        let params = p(1.0, 1.0, Setup::II);
        assert!(matches!(stability(&MeanFieldState::GROUND, &params), Err(Error::Validation(_))));
    }

    #[test]
    fn evolve_rejects_overlong_vector() {
        let s = MeanFieldState::new(0.4, 0.4, 0.0);
        assert!(evolve(&s, &p(1.0, 1.0, Setup::II), &[0.0, 1.0], &default_options()).is_err());
    }

    #[test]
    fn stationary_trajectories_settle() {
        for (omega, g) in [(1.0, 1.0), (0.01, -2.0)] {
            let params = p(omega, g, Setup::II);
            let traj = evolve(&MeanFieldState::GROUND, &params, &[0.0, 200.0], &default_options()).unwrap();
            let e = traj[1].energy();
            assert!((e - steady_energy(&params).unwrap()).abs() < 1e-4, "Ω={omega} g={g} E={e}");
        }
    }

    #[test]
    fn ground_start_has_zero_m() {
        let params = p(2.0, 1.0, Setup::II);
        let grid = crate::lindblad::uniform_grid(20.0, 101);
        for s in evolve(&MeanFieldState::GROUND, &params, &grid, &default_options()).unwrap() {
            assert_eq!(conserved_m(&s, &params, 3.0).unwrap(), 0.0);
        }
        let s = MeanFieldState::new(0.0, 0.2, -0.3);
        assert_eq!(conserved_m(&s, &params, 1.5).unwrap(), 0.0);
        let s = MeanFieldState::new(0.1, 0.5, -0.3);
        assert!(matches!(conserved_m(&s, &params, 4.0), Err(Error::Singular(_))));
    }

    #[test]
    fn kappa_experiment_selects_xi() {
        let params = p(0.5, 1.0, Setup::II);
        let s0 = MeanFieldState::new(0.3, 0.1, -0.37);
        let candidates = [0.5, 1.0, 2.0, 3.0, 4.0, 5.0];
        let (kappa, drift) = identify_kappa(&s0, &params, &candidates, 4.0).unwrap();
        assert_eq!(kappa, params.xi());
        assert!(drift < 1e-6);
        assert!(conserved_m_drift(&s0, &params, 2.0, 4.0, 200).unwrap() > 1e-3);
        // the flow runs into the singular set of M
        assert!(conserved_m_drift(&s0, &params, 3.0, 20.0, 200).is_err());
    }

    #[test]
    fn btc_oscillates_and_stationary_does_not() {
        let test = OscillationTest::default();
        let a = oscillation_verdict(&p(2.0, 1.0, Setup::II), &test).unwrap();
        assert!(a.oscillating);
        let b = oscillation_verdict(&p(1.0, 1.0, Setup::II), &test).unwrap();
        assert!(!b.oscillating);
    }

    #[test]
    fn parabolic_peaks() {
        let xs: Vec<f64> = (0..40).map(|k| (0.3 * k as f64 + 0.1).sin()).collect();
        let pp = peak_to_peak(&xs);
        assert!((pp - 2.0).abs() < 1e-3);
        assert_eq!(peak_to_peak(&[]), 0.0);
    }
}
