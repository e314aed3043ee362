//! Stored energy and ergotropy of battery states.

use alloc::format;
use alloc::vec::Vec;

use crate::lindblad::Trajectory;
use crate::matrix::{ensure_square, hermitian_eigen, hermitian_eigenvalues, hermiticity_defect, ComplexMatrix};
use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Basis a report was computed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Site,
    Dicke,
}

/// Energy bookkeeping for one state. `energy = ergotropy + passive_energy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub energy: f64,
    pub ergotropy: f64,
    pub passive_energy: f64,
    pub basis: Basis,
}

impl EnergyReport {
    /// The same report divided by the number of atoms.
    pub fn per_atom(self, n_atoms: usize) -> Self {
        let n = n_atoms as f64;
        EnergyReport {
            energy: self.energy / n,
            ergotropy: self.ergotropy / n,
            passive_energy: self.passive_energy / n,
            basis: self.basis,
        }
    }
}

fn check_pair(rho: &ComplexMatrix, h_b: &ComplexMatrix) -> Result<()> {
    let d = ensure_square(rho, "density matrix")?;
    let dh = ensure_square(h_b, "battery Hamiltonian")?;
    if d != dh {
        return Err(Error::validation(format!(
            "density matrix dimension {d} does not match battery Hamiltonian dimension {dh}"
        )));
    }
    Ok(())
}

/// `Tr[H_B ρ]`.
pub fn stored_energy(rho: &ComplexMatrix, h_b: &ComplexMatrix) -> Result<f64> {
    check_pair(rho, h_b)?;
    Ok(energy_unchecked(rho, h_b))
}

fn energy_unchecked(rho: &ComplexMatrix, h_b: &ComplexMatrix) -> f64 {
    // Tr[H ρ] = Σ_ij H_ij ρ_ji without forming the product
    let d = rho.nrows();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += (h_b[(i, j)] * rho[(j, i)]).re;
        }
    }
    acc
}

/// Per-atom energy `<J_z>/N + 1/2` of a Dicke-basis state, in units of ω_0.
pub fn collective_energy_per_atom(rho: &ComplexMatrix) -> Result<f64> {
    let d = ensure_square(rho, "density matrix")?;
    let n = (d - 1) as f64;
    if d < 2 {
        return Err(Error::validation("Dicke state needs at least one atom"));
    }
    // basis index k carries m = N/2 - k
    let jz: f64 = (0..d).map(|k| (n / 2.0 - k as f64) * rho[(k, k)].re).sum();
    Ok(jz / n + 0.5)
}

/// Energy, passive-state energy and ergotropy of `rho` with respect to
/// `h_b`.
///
/// The passive state pairs the eigenvalues of `rho` in decreasing order with
/// the levels of `h_b` in increasing order. Ties among the eigenvalues of
/// `rho` may be paired in any order; the passive energy does not depend on
/// it.
pub fn ergotropy(rho: &ComplexMatrix, h_b: &ComplexMatrix, basis: Basis) -> Result<EnergyReport> {
    check_pair(rho, h_b)?;
    if hermiticity_defect(rho) > 1e-8 {
        return Err(Error::validation("density matrix is not Hermitian"));
    }
    if hermiticity_defect(h_b) > 1e-10 {
        return Err(Error::validation("battery Hamiltonian is not Hermitian"));
    }
    let energy = energy_unchecked(rho, h_b);
    let mut populations = hermitian_eigenvalues(rho);
    populations.reverse();
    let levels = hermitian_eigenvalues(h_b);
    let passive_energy: f64 = populations.iter().zip(&levels).map(|(r, e)| r * e).sum();
    let mut work = energy - passive_energy;
    if work < 0.0 && work > -1e-12 {
        work = 0.0;
    }
    Ok(EnergyReport {
        energy,
        ergotropy: work,
        passive_energy,
        basis,
    })
}

/// The passive state itself, `Σ_n r_n |ε_n><ε_n|`.
pub fn passive_state(rho: &ComplexMatrix, h_b: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_pair(rho, h_b)?;
    let mut populations = hermitian_eigenvalues(rho);
    populations.reverse();
    let (_, levels) = hermitian_eigen(h_b);
    let d = rho.nrows();
    let mut sigma = ComplexMatrix::zeros(d, d);
    for (k, r) in populations.iter().enumerate() {
        let v = levels.column(k);
        sigma += v * v.adjoint() * num_complex::Complex64::new(*r, 0.0);
    }
    Ok(sigma)
}

/// Maxima of energy and ergotropy over a sampled trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema {
    pub energy_max: f64,
    pub ergotropy_max: f64,
    pub t_energy_max: f64,
    pub t_ergotropy_max: f64,
}

pub fn trajectory_extrema(traj: &Trajectory, h_b: &ComplexMatrix, basis: Basis) -> Result<Extrema> {
    if traj.is_empty() {
        return Err(Error::validation("trajectory has no samples"));
    }
    let reports = traj
        .states
        .iter()
        .map(|rho| ergotropy(rho, h_b, basis))
        .collect::<Result<Vec<_>>>()?;
    let mut ext = Extrema {
        energy_max: f64::NEG_INFINITY,
        ergotropy_max: f64::NEG_INFINITY,
        t_energy_max: traj.times[0],
        t_ergotropy_max: traj.times[0],
    };
    for (r, &t) in reports.iter().zip(&traj.times) {
        if r.energy > ext.energy_max {
            ext.energy_max = r.energy;
            ext.t_energy_max = t;
        }
        if r.ergotropy > ext.ergotropy_max {
            ext.ergotropy_max = r.ergotropy;
            ext.t_ergotropy_max = t;
        }
    }
    Ok(ext)
}
