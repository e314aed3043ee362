//! Generators for atoms coupled to an open waveguide (setup I) or to a
//! waveguide terminated by a mirror (setup II), with homodyne measurement
//! feedback of the right-propagating output onto the drive.
//!
//! Three builders share one [`ModelSpec`]:
//!
//! * [`build_full_setup1`] / [`build_full_setup2`] resolve every atom
//!   (Hilbert dimension 2^N);
//! * [`build_single_atom`] writes the N = 1 case directly in terms of the
//!   feedback-dependent ladder rates;
//! * [`build_collective`] is the Dicke-basis model (dimension N+1) valid when
//!   all propagation phases are multiples of 2π and the coupling is achiral.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::TAU;
use num_complex::Complex64;

use crate::lindblad::{Generator, LadderRates, RateMatrix};
use crate::matrix::{anticommutator, c64, ComplexMatrix, I};
use crate::qops::{self, build_collective_ops, build_site_operators};
use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Waveguide geometry. `n()` is the index entering the collective rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setup {
    /// Open waveguide; left-propagating emission is lost.
    I,
    /// Semi-infinite waveguide; left-propagating emission is reflected.
    II,
}

impl Setup {
    pub fn n(self) -> u8 {
        match self {
            Setup::I => 1,
            Setup::II => 2,
        }
    }

    pub fn from_n(n: u8) -> Option<Self> {
        match n {
            1 => Some(Setup::I),
            2 => Some(Setup::II),
            _ => None,
        }
    }
}

/// Physical parameters of one battery configuration.
///
/// Rates and `omega` share one unit (typically the total single-atom decay
/// rate γ); times are measured in its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub setup: Setup,
    pub n_atoms: usize,
    pub gamma_r: f64,
    pub gamma_l: f64,
    /// Dimensionless measurement-feedback strength.
    pub g: f64,
    /// Drive amplitude Ω.
    pub omega: f64,
    /// Propagation phases `φ_1, …, φ_N`. `φ_1` is the mirror phase of setup
    /// II; `φ_s` for `s ≥ 2` is the phase between atoms `s - 1` and `s`.
    pub phi: Vec<f64>,
    /// Bare transition frequency; only scales reported energies.
    pub omega0: f64,
}

impl ModelSpec {
    /// Achiral coupling with total rate `gamma` and every phase at 2π.
    pub fn achiral(setup: Setup, n_atoms: usize, gamma: f64, g: f64, omega: f64) -> Self {
        ModelSpec {
            setup,
            n_atoms,
            gamma_r: gamma / 2.0,
            gamma_l: gamma / 2.0,
            g,
            omega,
            phi: vec![TAU; n_atoms],
            omega0: 1.0,
        }
    }

    pub fn single(setup: Setup, gamma_r: f64, gamma_l: f64, g: f64, omega: f64, phi1: f64) -> Self {
        ModelSpec {
            setup,
            n_atoms: 1,
            gamma_r,
            gamma_l,
            g,
            omega,
            phi: vec![phi1],
            omega0: 1.0,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma_r + self.gamma_l
    }

    pub fn phi1(&self) -> f64 {
        self.phi.first().copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(Error::validation("at least one atom is required"));
        }
        let finite = [self.gamma_r, self.gamma_l, self.g, self.omega, self.omega0]
            .iter()
            .chain(&self.phi)
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::validation("model parameters must be finite"));
        }
        if self.gamma_r < 0.0 || self.gamma_l < 0.0 || self.gamma() <= 0.0 {
            return Err(Error::validation(format!(
                "decay rates must be non-negative with positive sum (gamma_r = {}, gamma_l = {})",
                self.gamma_r, self.gamma_l
            )));
        }
        if self.phi.len() != self.n_atoms {
            return Err(Error::validation(format!(
                "{} phases given for {} atoms",
                self.phi.len(),
                self.n_atoms
            )));
        }
        Ok(())
    }

    /// `Σ_{s=2}^{k} φ_s` for atom `k` (0-based index `k - 1`).
    fn cumulative_phase(&self) -> Vec<f64> {
        let mut cum = Vec::with_capacity(self.n_atoms);
        let mut acc = 0.0;
        for (k, &p) in self.phi.iter().enumerate() {
            if k > 0 {
                acc += p;
            }
            cum.push(acc);
        }
        cum
    }
}

fn expi(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// Distance of `x` from the nearest multiple of 2π.
fn off_lattice(x: f64) -> f64 {
    let r = x - TAU * (x / TAU).floor();
    r.min(TAU - r)
}

/// Operators shared by both full setups.
struct FullParts {
    /// `H_RL`, waveguide-mediated exchange.
    exchange: ComplexMatrix,
    /// `L_R`
    right: ComplexMatrix,
    /// `L_L`
    left: ComplexMatrix,
    /// `F = i √γ_R g Σ σ^x`
    feedback: ComplexMatrix,
    /// `H_d = Ω Σ σ^x`
    drive: ComplexMatrix,
}

fn full_parts(spec: &ModelSpec) -> Result<FullParts> {
    spec.validate()?;
    let ops = build_site_operators(spec.n_atoms)?;
    let n = spec.n_atoms;
    let dim = ops.dim();
    let cum = spec.cumulative_phase();
    let total = cum[n - 1];

    let mut exchange = ComplexMatrix::zeros(dim, dim);
    for j in 0..n {
        for l in 0..n {
            if j == l {
                continue;
            }
            let phase = (cum[j.max(l)] - cum[j.min(l)]).abs();
            let rate = if j > l { spec.gamma_r } else { spec.gamma_l };
            if rate == 0.0 {
                continue;
            }
            // (γ / 2i) e^{iφ_{l,j}} σ_j^+ σ_l^-
            let coeff = expi(phase) * (rate / 2.0) * (-I);
            exchange += &ops.sigma_plus[j] * &ops.sigma_minus[l] * coeff;
        }
    }
    exchange = &exchange + exchange.adjoint();

    let mut right = ComplexMatrix::zeros(dim, dim);
    let mut left = ComplexMatrix::zeros(dim, dim);
    let mut sx = ComplexMatrix::zeros(dim, dim);
    for ((sm, sxj), &c) in ops.sigma_minus.iter().zip(&ops.sigma_x).zip(&cum) {
        right += sm * (expi(total - c) * spec.gamma_r.sqrt());
        left += sm * (expi(c) * spec.gamma_l.sqrt());
        sx += sxj;
    }
    let feedback = &sx * (I * spec.gamma_r.sqrt() * spec.g);
    let drive = &sx * c64(spec.omega, 0.0);

    Ok(FullParts {
        exchange,
        right,
        left,
        feedback,
        drive,
    })
}

fn require_setup(spec: &ModelSpec, setup: Setup) -> Result<()> {
    if spec.setup != setup {
        return Err(Error::validation(format!(
            "builder for setup {:?} called with setup {:?}",
            setup, spec.setup
        )));
    }
    Ok(())
}

/// Full N-atom master equation for the open waveguide:
/// `H = H_RL + H_f + H_d`, jumps `L_R - iF` and `L_L`.
pub fn build_full_setup1(spec: &ModelSpec) -> Result<Generator> {
    require_setup(spec, Setup::I)?;
    let p = full_parts(spec)?;
    let f_dag = p.feedback.adjoint();
    let h_fb = &f_dag * &p.right * c64(0.5, 0.0);
    let h_fb = &h_fb + h_fb.adjoint();
    let h = &p.exchange + h_fb + &p.drive;
    let jumps = vec![&p.right - &p.feedback * I, p.left];
    Generator::new(h, jumps, RateMatrix::diagonal(&[1.0, 1.0])?)
}

/// Full N-atom master equation with the mirror:
/// `H = H_RL + H_f + H_φ1 + H_d`, single jump `e^{iφ_1} S_R L_L + L_R - iF`.
pub fn build_full_setup2(spec: &ModelSpec) -> Result<Generator> {
    require_setup(spec, Setup::II)?;
    let p = full_parts(spec)?;
    let cum = spec.cumulative_phase();
    // e^{iφ_1} S_R with S_R = e^{iφ_Σ}
    let mirror = expi(spec.phi1() + cum[spec.n_atoms - 1]);
    let reflected = &p.left * mirror;
    let out = &reflected + &p.right;

    let h_fb = p.feedback.adjoint() * &out * c64(0.5, 0.0);
    let h_fb = &h_fb + h_fb.adjoint();
    // e^{iφ_1} S_R L_R† L_L / 2i + H.c.
    let h_cfb = p.right.adjoint() * &reflected * c64(0.0, -0.5);
    let h_cfb = &h_cfb + h_cfb.adjoint();

    let h = &p.exchange + h_fb + h_cfb + &p.drive;
    let jump = &out - &p.feedback * I;
    Generator::new(h, vec![jump], RateMatrix::diagonal(&[1.0])?)
}

pub fn build_full(spec: &ModelSpec) -> Result<Generator> {
    match spec.setup {
        Setup::I => build_full_setup1(spec),
        Setup::II => build_full_setup2(spec),
    }
}

/// Feedback-dependent ladder rates of a single atom.
pub fn single_atom_rates(spec: &ModelSpec) -> LadderRates {
    let (gr, gl, g) = (spec.gamma_r, spec.gamma_l, spec.g);
    match spec.setup {
        Setup::I => LadderRates {
            minus_plus: gr * (g + 1.0).powi(2) + gl,
            plus_minus: gr * g * g,
            plus_plus: c64(gr * g * (g + 1.0), 0.0),
        },
        Setup::II => {
            let phi1 = spec.phi1();
            let cross = (gr * gl).sqrt();
            LadderRates {
                minus_plus: spec.gamma()
                    + gr * g * (g + 2.0)
                    + 2.0 * cross * (g + 1.0) * phi1.cos(),
                plus_minus: gr * g * g,
                plus_plus: c64(gr * g * (g + 1.0), 0.0) + expi(-phi1) * (cross * g),
            }
        }
    }
}

/// Mirror-induced frequency shift `ω = √(γ_R γ_L) sin φ_1 (g + 1)` of setup
/// II; zero for setup I.
pub fn single_atom_frequency_shift(spec: &ModelSpec) -> f64 {
    match spec.setup {
        Setup::I => 0.0,
        Setup::II => (spec.gamma_r * spec.gamma_l).sqrt() * spec.phi1().sin() * (spec.g + 1.0),
    }
}

/// Single-atom master equation with jumps `[σ^-, σ^+]`.
pub fn build_single_atom(spec: &ModelSpec) -> Result<Generator> {
    spec.validate()?;
    if spec.n_atoms != 1 {
        return Err(Error::validation(format!(
            "single-atom builder called with {} atoms",
            spec.n_atoms
        )));
    }
    let sm = qops::sigma_minus();
    let sp = qops::sigma_plus();
    let shift = single_atom_frequency_shift(spec);
    let h = qops::sigma_x() * c64(spec.omega, 0.0) + &sp * &sm * c64(shift, 0.0);
    let rates = single_atom_rates(spec).to_rate_matrix()?;
    Generator::new(h, vec![sm, sp], rates)
}

/// Ladder rates of the collective model for total single-atom rate `gamma`.
pub fn collective_rates(setup: Setup, gamma: f64, g: f64) -> LadderRates {
    let n = setup.n() as f64;
    LadderRates {
        minus_plus: gamma * (g * g + 2.0 * n * (g + 1.0)) / 2.0,
        plus_minus: gamma * g * g / 2.0,
        plus_plus: c64(gamma * g * (g + n) / 2.0, 0.0),
    }
}

/// Phase tolerance for the 2π-lattice condition of the collective model.
const PHASE_TOLERANCE: f64 = 1e-9;

/// Dicke-basis model `H = 2Ω J_x - (nγg/2){J_x, J_y}` with jumps
/// `[J_-, J_+]`.
/// Check that `spec` is within the collective model's domain: achiral
/// coupling and every propagation phase a multiple of 2π.
pub fn check_collective(spec: &ModelSpec) -> Result<()> {
    spec.validate()?;
    let gamma = spec.gamma();
    if (spec.gamma_r - spec.gamma_l).abs() > 1e-12 * gamma {
        return Err(Error::validation(
            "the collective model assumes achiral coupling (gamma_r = gamma_l); use the full builders",
        ));
    }
    // φ_1 only enters setup II
    let skip = match spec.setup {
        Setup::I => 1,
        Setup::II => 0,
    };
    if let Some((s, p)) = spec
        .phi
        .iter()
        .enumerate()
        .skip(skip)
        .find(|(_, &p)| off_lattice(p) > PHASE_TOLERANCE)
    {
        return Err(Error::validation(format!(
            "phi_{} = {p} is not a multiple of 2*pi; the collective model does not apply, use the full builders",
            s + 1
        )));
    }
    Ok(())
}

pub fn build_collective(spec: &ModelSpec) -> Result<Generator> {
    check_collective(spec)?;
    let gamma = spec.gamma();
    let ops = build_collective_ops(spec.n_atoms)?;
    let n = spec.setup.n() as f64;
    let h = &ops.jx * c64(2.0 * spec.omega, 0.0)
        - anticommutator(&ops.jx, &ops.jy) * c64(n * gamma * spec.g / 2.0, 0.0);
    let rates = collective_rates(spec.setup, gamma, spec.g).to_rate_matrix()?;
    Generator::new(h, vec![ops.jminus, ops.jplus], rates)
}

/// Level of description used to build a generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Full,
    Single,
    Collective,
}

pub fn build(kind: ModelKind, spec: &ModelSpec) -> Result<Generator> {
    match kind {
        ModelKind::Full => build_full(spec),
        ModelKind::Single => build_single_atom(spec),
        ModelKind::Collective => build_collective(spec),
    }
}

/// Bare battery Hamiltonian with zero ground energy: `ω_0 Σ_j |e><e|_j`, or
/// `ω_0 (J_z + N/2)` in the Dicke basis.
pub fn battery_hamiltonian(kind: ModelKind, spec: &ModelSpec) -> Result<ComplexMatrix> {
    let w = c64(spec.omega0, 0.0);
    match kind {
        ModelKind::Single => Ok(qops::sigma_plus() * qops::sigma_minus() * w),
        ModelKind::Full => {
            let ops = build_site_operators(spec.n_atoms)?;
            let dim = ops.dim();
            let mut h = ComplexMatrix::zeros(dim, dim);
            for (p, m) in ops.sigma_plus.iter().zip(&ops.sigma_minus) {
                h += p * m;
            }
            Ok(h * w)
        }
        ModelKind::Collective => {
            let ops = build_collective_ops(spec.n_atoms)?;
            let shift = ComplexMatrix::identity(ops.dim(), ops.dim()) * c64(spec.n_atoms as f64 / 2.0, 0.0);
            Ok((ops.jz + shift) * w)
        }
    }
}

/// All atoms in the ground state.
pub fn ground_state(kind: ModelKind, spec: &ModelSpec) -> ComplexMatrix {
    let dim = match kind {
        ModelKind::Single => 2,
        ModelKind::Full => 1 << spec.n_atoms,
        ModelKind::Collective => spec.n_atoms + 1,
    };
    let mut rho = ComplexMatrix::zeros(dim, dim);
    // ground is the last basis state in every convention
    rho[(dim - 1, dim - 1)] = c64(1.0, 0.0);
    rho
}
