//! Lindblad generators with a general (possibly non-diagonal) rate matrix.
//!
//! A [`Generator`] holds a Hamiltonian `H`, jump operators `A_a` and a rate
//! matrix `K` and acts as
//!
//! ```text
//! L(ρ) = -i[H, ρ] + Σ_ab K_ab (A_a ρ A_b† - {A_b† A_a, ρ}/2)
//! ```
//!
//! For ladder jumps `(σ^-, σ^+)` the entries of `K` are the feedback rates
//! `Γ_{μν}` multiplying `σ^μ ρ σ^ν`: `K = [[Γ_{-+}, Γ_{--}], [Γ_{++}, Γ_{+-}]]`,
//! see [`LadderRates`]. In this form `K` is Hermitian whenever the generator
//! preserves Hermiticity, and positive semidefinite exactly when the
//! evolution is completely positive.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Schur, SVD};
use num_complex::Complex64;

use crate::matrix::{
    c64, ensure_square, hermitian_eigen, hermiticity_defect, identity, kron, max_abs,
    min_eigenvalue, unvectorize, vectorize, ComplexMatrix, I,
};
use crate::ode::{integrate, IntegratorOptions};
use crate::waveguide::ModelSpec;
use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Largest superoperator dimension `D²` handled by the dense eigen- and
/// null-space solvers.
pub const MAX_SUPEROPERATOR_DIM: usize = 4096;

/// Tolerance for the positive-semidefinite test of a rate matrix.
pub const CP_TOLERANCE: f64 = 1e-12;

/// Hermitian rate matrix over a list of jump operators.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    entries: DMatrix<Complex64>,
}

impl RateMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::validation("rate matrix must be square"));
        }
        let scale = max_abs(&entries).max(1.0);
        if entries.nrows() > 0 && hermiticity_defect(&entries) > 1e-12 * scale {
            return Err(Error::validation("rate matrix must be Hermitian"));
        }
        for k in 0..entries.nrows() {
            if entries[(k, k)].re < -1e-12 * scale {
                return Err(Error::validation(format!(
                    "diagonal rate {} is negative",
                    entries[(k, k)].re
                )));
            }
        }
        Ok(RateMatrix { entries })
    }

    /// Independent channels `D[A_a]` with the given rates.
    pub fn diagonal(rates: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(rates.len(), rates.iter().map(|&r| c64(r, 0.0)));
        Self::new(DMatrix::from_diagonal(&d))
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether the matrix is positive semidefinite, i.e. the dissipator is
    /// completely positive.
    pub fn cp_flag(&self) -> bool {
        self.is_empty() || min_eigenvalue(&self.entries) >= -CP_TOLERANCE
    }
}

/// Rates `Γ_{μν}` of a master equation `Σ_{μν} Γ_{μν} D_{σ^μ,σ^ν}` with
/// `D_{A,B} ρ = A ρ B - {B A, ρ}/2` and `μ, ν ∈ {+, -}`.
///
/// `Γ_{--}` is the conjugate of `Γ_{++}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderRates {
    /// `Γ_{-+}`: weight of `σ^- ρ σ^+` (decay).
    pub minus_plus: f64,
    /// `Γ_{+-}`: weight of `σ^+ ρ σ^-` (pumping).
    pub plus_minus: f64,
    /// `Γ_{++}`: weight of `σ^+ ρ σ^+`.
    pub plus_plus: Complex64,
}

impl LadderRates {
    pub fn minus_minus(&self) -> Complex64 {
        self.plus_plus.conj()
    }

    /// Rate matrix for the jump list `[lowering, raising]`.
    pub fn to_rate_matrix(&self) -> Result<RateMatrix> {
        RateMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[
                c64(self.minus_plus, 0.0),
                self.minus_minus(),
                self.plus_plus,
                c64(self.plus_minus, 0.0),
            ],
        ))
    }

    /// `Γ_{-+} Γ_{+-} - |Γ_{++}|²`, non-negative iff the rates are CP.
    pub fn cp_margin(&self) -> f64 {
        self.minus_plus * self.plus_minus - self.plus_plus.norm_sqr()
    }
}

/// A complete Lindblad evolution.
#[derive(Debug, Clone)]
pub struct Generator {
    hamiltonian: ComplexMatrix,
    jumps: Vec<ComplexMatrix>,
    rates: RateMatrix,
    /// `H - (i/2) Σ K_ab A_b† A_a`
    effective: ComplexMatrix,
    /// Eigen-channels `(λ_k, L_k)` of the rate matrix.
    channels: Vec<(f64, ComplexMatrix)>,
}

impl Generator {
    pub fn new(hamiltonian: ComplexMatrix, jumps: Vec<ComplexMatrix>, rates: RateMatrix) -> Result<Self> {
        let dim = ensure_square(&hamiltonian, "Hamiltonian")?;
        if jumps.len() != rates.len() {
            return Err(Error::validation(format!(
                "{} jump operators but a {}x{} rate matrix",
                jumps.len(),
                rates.len(),
                rates.len()
            )));
        }
        for (k, a) in jumps.iter().enumerate() {
            if a.nrows() != dim || a.ncols() != dim {
                return Err(Error::validation(format!(
                    "jump operator {k} is {}x{}, Hamiltonian is {dim}x{dim}",
                    a.nrows(),
                    a.ncols()
                )));
            }
        }
        if hermiticity_defect(&hamiltonian) > 1e-12 * max_abs(&hamiltonian).max(1.0) {
            return Err(Error::validation("Hamiltonian must be Hermitian"));
        }

        let mut effective = hamiltonian.clone();
        let k = rates.entries();
        for (a, ja) in jumps.iter().enumerate() {
            for (b, jb) in jumps.iter().enumerate() {
                if k[(a, b)] != c64(0.0, 0.0) {
                    effective -= jb.adjoint() * ja * (I * 0.5 * k[(a, b)]);
                }
            }
        }

        let mut channels = Vec::new();
        if !jumps.is_empty() {
            let (lambda, u) = hermitian_eigen(k);
            for (col, &l) in lambda.iter().enumerate() {
                if l == 0.0 {
                    continue;
                }
                let mut op = ComplexMatrix::zeros(dim, dim);
                for (a, ja) in jumps.iter().enumerate() {
                    op += ja * u[(a, col)];
                }
                channels.push((l, op));
            }
        }

        Ok(Generator {
            hamiltonian,
            jumps,
            rates,
            effective,
            channels,
        })
    }

    /// Closed-system generator `-i[H, ·]`.
    pub fn unitary(hamiltonian: ComplexMatrix) -> Result<Self> {
        Self::new(hamiltonian, Vec::new(), RateMatrix::diagonal(&[])?)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[ComplexMatrix] {
        &self.jumps
    }

    pub fn rates(&self) -> &RateMatrix {
        &self.rates
    }

    pub fn cp_flag(&self) -> bool {
        self.rates.cp_flag()
    }

    /// `L(ρ)`.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.nrows() != self.dim() || rho.ncols() != self.dim() {
            return Err(Error::validation(format!(
                "state is {}x{}, generator acts on dimension {}",
                rho.nrows(),
                rho.ncols(),
                self.dim()
            )));
        }
        Ok(self.apply_unchecked(rho))
    }

    pub(crate) fn apply_unchecked(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let h_rho = &self.effective * rho;
        // -i(H_eff ρ - ρ H_eff†) = -i H_eff ρ + (-i H_eff ρ)† for Hermitian ρ,
        // but ρ is not assumed Hermitian here.
        let mut out = (h_rho - rho * self.effective.adjoint()) * (-I);
        for (lambda, op) in &self.channels {
            out += op * rho * op.adjoint() * c64(*lambda, 0.0);
        }
        out
    }

    /// Matrix of `L` acting on column-stacked density matrices.
    pub fn superoperator(&self) -> Superoperator {
        let d = self.dim();
        let id = identity(d);
        let mut m = kron(&id, &self.effective) * (-I) + kron(&self.effective.conjugate(), &id) * I;
        let k = self.rates.entries();
        for (a, ja) in self.jumps.iter().enumerate() {
            for (b, jb) in self.jumps.iter().enumerate() {
                if k[(a, b)] != c64(0.0, 0.0) {
                    // vec(A ρ B†) = (conj(B) ⊗ A) vec(ρ)
                    m += kron(&jb.conjugate(), ja) * k[(a, b)];
                }
            }
        }
        Superoperator { dim: d, matrix: m }
    }
}

/// Column-stacking matrix representation of a Liouvillian.
#[derive(Debug, Clone)]
pub struct Superoperator {
    /// Hilbert-space dimension `D`; the matrix is `D² × D²`.
    pub dim: usize,
    pub matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        unvectorize(&(&self.matrix * vectorize(rho)), self.dim)
    }

    /// Largest entry of the trace row `Σ_j ⟨jj| S`, zero for a
    /// trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        (0..d * d)
            .map(|col| (0..d).map(|j| self.matrix[(j + j * d, col)]).sum::<Complex64>().norm())
            .fold(0.0, f64::max)
    }

    /// The same map written in an orthonormal basis of Hermitian matrices.
    ///
    /// A Hermiticity-preserving `L` is real in this basis, which halves the
    /// storage and lets the eigen- and null-space solvers work in real
    /// arithmetic. Coordinates follow [`hermitian_coords`].
    pub fn real_form(&self) -> DMatrix<f64> {
        let d = self.dim;
        let n = d * d;
        let s = &self.matrix;
        let vec_idx = |i: usize, j: usize| i + j * d;
        let r2 = core::f64::consts::FRAC_1_SQRT_2;
        let mut out = DMatrix::<f64>::zeros(n, n);
        let mut col = 0;
        for j in 0..d {
            for k in j..d {
                if j == k {
                    let img = s.column(vec_idx(j, j)).into_owned();
                    write_coords(&img, d, &mut out, col);
                    col += 1;
                } else {
                    let a = s.column(vec_idx(j, k));
                    let b = s.column(vec_idx(k, j));
                    // (E_jk + E_kj)/√2 and i(E_jk - E_kj)/√2
                    let sym = (a + b) * c64(r2, 0.0);
                    write_coords(&sym, d, &mut out, col);
                    let anti = (a - b) * c64(0.0, r2);
                    write_coords(&anti, d, &mut out, col + 1);
                    col += 2;
                }
            }
        }
        out
    }
}

fn write_coords(vec_img: &DVector<Complex64>, d: usize, out: &mut DMatrix<f64>, col: usize) {
    let m = unvectorize(vec_img, d);
    for (row, x) in hermitian_coords(&m).into_iter().enumerate() {
        out[(row, col)] = x;
    }
}

/// Coordinates of a Hermitian matrix in the orthonormal basis
/// `E_jj, (E_jk + E_kj)/√2, i(E_jk - E_kj)/√2` for `j < k`, enumerated
/// row by row over the upper triangle.
pub fn hermitian_coords(m: &ComplexMatrix) -> Vec<f64> {
    let d = m.nrows();
    let s2 = core::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for j in 0..d {
        for k in j..d {
            if j == k {
                out.push(m[(j, j)].re);
            } else {
                let z = (m[(j, k)] + m[(k, j)].conj()) * 0.5;
                out.push(s2 * z.re);
                out.push(s2 * z.im);
            }
        }
    }
    out
}

/// Inverse of [`hermitian_coords`].
pub fn from_hermitian_coords(x: &[f64], d: usize) -> ComplexMatrix {
    let r2 = core::f64::consts::FRAC_1_SQRT_2;
    let mut m = ComplexMatrix::zeros(d, d);
    let mut idx = 0;
    for j in 0..d {
        for k in j..d {
            if j == k {
                m[(j, j)] = c64(x[idx], 0.0);
                idx += 1;
            } else {
                let z = c64(x[idx] * r2, x[idx + 1] * r2);
                m[(j, k)] = z;
                m[(k, j)] = z.conj();
                idx += 2;
            }
        }
    }
    m
}

fn check_budget(g: &Generator) -> Result<()> {
    let n = g.dim() * g.dim();
    if n > MAX_SUPEROPERATOR_DIM {
        return Err(Error::Size {
            what: "superoperator dimension",
            size: n,
            limit: MAX_SUPEROPERATOR_DIM,
        });
    }
    Ok(())
}

/// Relative singular-value threshold defining the numerical null space.
pub const NULL_SPACE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: ComplexMatrix,
    /// Dimension of the numerical null space of `L`. Values above one mean
    /// `rho` is only one of several stationary states.
    pub degeneracy: usize,
    /// Frobenius norm of `L(rho)`.
    pub residual: f64,
}

impl SteadyState {
    pub fn is_unique(&self) -> bool {
        self.degeneracy == 1
    }
}

/// Stationary state from the null space of the superoperator.
///
/// The null space comes from an SVD of the real Hermitian-basis form of `L`.
/// Within it the state is fixed by the trace condition: we take the
/// minimum-norm null vector with unit trace, which is what appending the
/// trace row to `L` and solving in the least-squares sense gives.
pub fn steady_state(g: &Generator) -> Result<SteadyState> {
    steady_state_with_tolerance(g, NULL_SPACE_TOLERANCE)
}

pub fn steady_state_with_tolerance(g: &Generator, rel_tol: f64) -> Result<SteadyState> {
    check_budget(g)?;
    let d = g.dim();
    let real = g.superoperator().real_form();
    let n = real.nrows();
    let svd = SVD::try_new(real, false, true, f64::EPSILON, 0)
        .ok_or(Error::NoConvergence("singular value decomposition"))?;
    let v_t = svd.v_t.as_ref().ok_or(Error::NoConvergence("singular value decomposition"))?;
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().copied().fold(0.0, f64::max);
    let threshold = rel_tol * sigma_max.max(f64::MIN_POSITIVE);

    let mut null: Vec<usize> = (0..sigma.len()).filter(|&k| sigma[k] <= threshold).collect();
    if null.is_empty() {
        let k_min = (0..sigma.len())
            .min_by(|&a, &b| sigma[a].total_cmp(&sigma[b]))
            .expect("non-empty spectrum");
        null.push(k_min);
    }
    let degeneracy = null.len();

    // trace functional in Hermitian coordinates: 1 on diagonal elements
    let trace_coords = hermitian_coords(&identity(d));
    let mut x = DVector::<f64>::zeros(n);
    for &k in &null {
        let v = v_t.row(k).transpose();
        let w: f64 = v.iter().zip(&trace_coords).map(|(a, b)| a * b).sum();
        x += v * w;
    }
    let tr: f64 = x.iter().zip(&trace_coords).map(|(a, b)| a * b).sum();
    if tr.abs() < 1e-300 {
        return Err(Error::Singular("steady-state trace"));
    }
    x /= tr;
    let rho = from_hermitian_coords(x.as_slice(), d);
    let residual = g.apply_unchecked(&rho).norm();
    Ok(SteadyState {
        rho,
        degeneracy,
        residual,
    })
}

/// Eigenvalues of `L`, sorted by descending real part (ties by ascending
/// imaginary part).
pub fn spectrum(g: &Generator) -> Result<Vec<Complex64>> {
    check_budget(g)?;
    let real = g.superoperator().real_form();
    let n = real.nrows();
    let schur = Schur::try_new(real, f64::EPSILON, 1000 * n.max(1))
        .ok_or(Error::NoConvergence("Schur decomposition"))?;
    let mut eig: Vec<Complex64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| c64(z.re, z.im))
        .collect();
    sort_spectrum(&mut eig);
    Ok(eig)
}

pub fn sort_spectrum(eig: &mut [Complex64]) {
    eig.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
}

/// First eigenvalue of a sorted spectrum with `|λ| > zero_tol`: the slowest
/// decaying mode when the stationary state is unique.
pub fn leading_nonzero(spectrum: &[Complex64], zero_tol: f64) -> Option<Complex64> {
    spectrum.iter().copied().find(|z| z.norm() > zero_tol)
}

/// Options for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub integrator: IntegratorOptions,
    /// Abort when the smallest eigenvalue of a sampled state drops below
    /// this value.
    pub positivity_floor: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            integrator: IntegratorOptions::default(),
            positivity_floor: -1e-6,
        }
    }
}

/// Sampled solution of a master equation.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexMatrix>,
    /// `|Tr ρ - 1|` per sample.
    pub trace_defect: Vec<f64>,
    /// Smallest eigenvalue per sample.
    pub min_eig: Vec<f64>,
    pub hermiticity_defect: Vec<f64>,
    pub metadata: Option<ModelSpec>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn with_metadata(mut self, spec: ModelSpec) -> Self {
        self.metadata = Some(spec);
        self
    }
}

pub fn validate_density_matrix(rho: &ComplexMatrix, dim: usize) -> Result<()> {
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::validation(format!(
            "initial state is {}x{}, expected {dim}x{dim}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    if hermiticity_defect(rho) > 1e-10 {
        return Err(Error::validation("initial state is not Hermitian"));
    }
    let tr = rho.trace();
    if (tr - c64(1.0, 0.0)).norm() > 1e-8 {
        return Err(Error::validation(format!("initial state has trace {tr}")));
    }
    let lo = min_eigenvalue(rho);
    if lo < -1e-8 {
        return Err(Error::validation(format!(
            "initial state has negative eigenvalue {lo:e}"
        )));
    }
    Ok(())
}

/// Integrate `dρ/dt = L(ρ)` from `t = 0` and sample on `times`.
pub fn evolve(
    g: &Generator,
    rho0: &ComplexMatrix,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    validate_density_matrix(rho0, g.dim())?;
    let mut traj = Trajectory {
        times: Vec::with_capacity(times.len()),
        states: Vec::with_capacity(times.len()),
        trace_defect: Vec::with_capacity(times.len()),
        min_eig: Vec::with_capacity(times.len()),
        hermiticity_defect: Vec::with_capacity(times.len()),
        metadata: None,
    };
    integrate(
        |_, rho: &ComplexMatrix| g.apply_unchecked(rho),
        0.0,
        rho0.clone(),
        times,
        &opts.integrator,
        |_, t, rho| {
            let lo = min_eigenvalue(rho);
            if lo < opts.positivity_floor {
                return Err(Error::Positivity { t, min_eig: lo });
            }
            traj.times.push(t);
            traj.trace_defect.push((rho.trace() - c64(1.0, 0.0)).norm());
            traj.min_eig.push(lo);
            traj.hermiticity_defect.push(hermiticity_defect(rho));
            traj.states.push(rho.clone());
            Ok(())
        },
    )?;
    Ok(traj)
}

/// `n` evenly spaced times on `[0, t_max]`, both ends included.
pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![0.0],
        _ => (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{anticommutator, commutator, matrix_unit, trace_distance};
    use crate::qops::{sigma_minus, sigma_plus, sigma_x, sigma_z};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(d, d, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
        let a = random_matrix(rng, d);
        (&a + a.adjoint()).scale(0.5)
    }

    fn random_density(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
        let a = random_matrix(rng, d);
        let p = &a * a.adjoint();
        let tr = p.trace();
        p / tr
    }

    /// Σ_ab K_ab (A_a ρ A_b† - {A_b† A_a, ρ}/2) written out term by term.
    fn oracle(h: &ComplexMatrix, jumps: &[ComplexMatrix], k: &DMatrix<Complex64>, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = commutator(h, rho) * (-I);
        for (a, ja) in jumps.iter().enumerate() {
            for (b, jb) in jumps.iter().enumerate() {
                let sandwich = ja * rho * jb.adjoint();
                let anti = anticommutator(&(jb.adjoint() * ja), rho) * c64(0.5, 0.0);
                out += (sandwich - anti) * k[(a, b)];
            }
        }
        out
    }

    /// Scaling and squaring with a truncated Taylor series.
    fn expm(a: &ComplexMatrix) -> ComplexMatrix {
        let norm = a.norm();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let scaled = a / c64(2f64.powi(squarings as i32), 0.0);
        let n = a.nrows();
        let mut term = identity(n);
        let mut sum = identity(n);
        for k in 1..30 {
            term = &term * &scaled / c64(k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    fn decay(gamma: f64) -> Generator {
        Generator::new(
            ComplexMatrix::zeros(2, 2),
            alloc::vec![sigma_minus()],
            RateMatrix::diagonal(&[gamma]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn pure_decay_action() {
        let g = decay(0.7);
        let out = g.apply(&matrix_unit(2, 0, 0)).unwrap();
        let expected = (matrix_unit(2, 1, 1) - matrix_unit(2, 0, 0)) * c64(0.7, 0.0);
        assert!(max_abs(&(out - expected)) < 1e-15);
    }

    #[test]
    fn two_photon_terms_vanish_on_maximally_mixed_state() {
        let rates = LadderRates {
            minus_plus: 0.0,
            plus_minus: 0.0,
            plus_plus: c64(0.3, 0.0),
        };
        let g = Generator::new(
            ComplexMatrix::zeros(2, 2),
            alloc::vec![sigma_minus(), sigma_plus()],
            rates.to_rate_matrix().unwrap(),
        )
        .unwrap();
        assert!(!g.cp_flag());
        let out = g.apply(&identity(2).scale(0.5)).unwrap();
        assert!(out.trace().norm() < 1e-15);
        assert!(max_abs(&out) < 1e-15);
    }

    #[test]
    fn action_matches_term_by_term_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in [2usize, 3, 5] {
            let h = random_hermitian(&mut rng, d);
            let jumps: Vec<_> = (0..3).map(|_| random_matrix(&mut rng, d)).collect();
            let b = random_matrix(&mut rng, 3);
            // any Hermitian rate matrix with non-negative diagonal
            let mut k = (&b + b.adjoint()).scale(0.5);
            for i in 0..3 {
                k[(i, i)] = c64(k[(i, i)].re.abs() + 0.1, 0.0);
            }
            let g = Generator::new(h.clone(), jumps.clone(), RateMatrix::new(k.clone()).unwrap()).unwrap();
            let rho = random_hermitian(&mut rng, d);
            let got = g.apply(&rho).unwrap();
            let want = oracle(&h, &jumps, &k, &rho);
            assert!(max_abs(&(&got - &want)) < 1e-12, "d = {d}");
            assert!(got.trace().norm() < 1e-12);
            assert!(hermiticity_defect(&got) < 1e-12);
        }
    }

    #[test]
    fn superoperator_matches_direct_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = 3;
        let h = random_hermitian(&mut rng, d);
        let jumps: Vec<_> = (0..2).map(|_| random_matrix(&mut rng, d)).collect();
        let rates = LadderRates {
            minus_plus: 1.3,
            plus_minus: 0.4,
            plus_plus: c64(0.2, -0.5),
        };
        let g = Generator::new(h, jumps, rates.to_rate_matrix().unwrap()).unwrap();
        let s = g.superoperator();
        assert!(s.trace_defect() < 1e-12);
        for _ in 0..20 {
            let rho = random_density(&mut rng, d);
            let a = s.apply(&rho);
            let b = g.apply(&rho).unwrap();
            assert!(max_abs(&(a - b)) < 1e-10);
        }
    }

    #[test]
    fn real_form_acts_on_hermitian_coordinates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Generator::new(
            random_hermitian(&mut rng, 3),
            alloc::vec![random_matrix(&mut rng, 3)],
            RateMatrix::diagonal(&[0.8]).unwrap(),
        )
        .unwrap();
        let r = g.superoperator().real_form();
        let rho = random_hermitian(&mut rng, 3);
        let x = DVector::from_vec(hermitian_coords(&rho));
        let image = &r * x;
        let want = hermitian_coords(&g.apply(&rho).unwrap());
        for (a, b) in image.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(max_abs(&(from_hermitian_coords(&hermitian_coords(&rho), 3) - &rho)) < 1e-15);
    }

    #[test]
    fn amplitude_damping_spectrum() {
        let gamma = 0.9;
        let eig = spectrum(&decay(gamma)).unwrap();
        let want = [0.0, -gamma / 2.0, -gamma / 2.0, -gamma];
        for (z, w) in eig.iter().zip(want) {
            assert!((z.re - w).abs() < 1e-12 && z.im.abs() < 1e-12, "{eig:?}");
        }
    }

    #[test]
    fn unitary_spectrum_is_imaginary() {
        let h = sigma_x() * c64(0.8, 0.0) + sigma_z() * c64(0.3, 0.0);
        let eig = spectrum(&Generator::unitary(h).unwrap()).unwrap();
        assert!(eig.iter().all(|z| z.re.abs() < 1e-12));
        let e = (0.8f64.powi(2) + 0.3f64.powi(2)).sqrt();
        assert!(eig.iter().any(|z| (z.im - 2.0 * e).abs() < 1e-12));
    }

    #[test]
    fn spectrum_and_steady_state_refuse_large_systems() {
        let g = Generator::unitary(identity(65)).unwrap();
        assert!(matches!(spectrum(&g), Err(Error::Size { .. })));
        assert!(matches!(steady_state(&g), Err(Error::Size { .. })));
    }

    #[test]
    fn unitary_generator_has_degenerate_steady_states() {
        let g = Generator::unitary(sigma_z()).unwrap();
        let ss = steady_state(&g).unwrap();
        // populations of both levels are conserved
        assert_eq!(ss.degeneracy, 2);
        assert!(ss.residual < 1e-12);
        assert!((ss.rho.trace() - c64(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rate_matrix_validation() {
        let not_hermitian = DMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.5, 0.0), c64(0.1, 0.0), c64(1.0, 0.0)]);
        assert!(RateMatrix::new(not_hermitian).is_err());
        assert!(RateMatrix::diagonal(&[-1.0]).is_err());
        let rates = LadderRates {
            minus_plus: 1.0,
            plus_minus: 1.0,
            plus_plus: c64(1.0, 0.0),
        };
        assert!(rates.to_rate_matrix().unwrap().cp_flag());
        assert_eq!(rates.cp_margin(), 0.0);
    }

    #[test]
    fn generator_rejects_mismatched_dimensions() {
        let res = Generator::new(identity(2), alloc::vec![identity(3)], RateMatrix::diagonal(&[1.0]).unwrap());
        assert!(matches!(res, Err(Error::Validation(_))));
        let res = Generator::new(identity(2), alloc::vec![identity(2)], RateMatrix::diagonal(&[1.0, 1.0]).unwrap());
        assert!(res.is_err());
        let g = decay(1.0);
        assert!(g.apply(&identity(3)).is_err());
    }

    #[test]
    fn evolve_at_zero_returns_initial_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho0 = random_density(&mut rng, 2);
        let traj = evolve(&decay(1.0), &rho0, &[0.0], &EvolveOptions::default()).unwrap();
        assert_eq!(traj.states.len(), 1);
        assert_eq!(traj.states[0], rho0);
    }

    #[test]
    fn evolve_rejects_invalid_initial_states() {
        let g = decay(1.0);
        assert!(evolve(&g, &identity(2), &[0.0, 1.0], &EvolveOptions::default()).is_err());
        let neg = ComplexMatrix::from_diagonal(&DVector::from_vec(alloc::vec![c64(1.5, 0.0), c64(-0.5, 0.0)]));
        assert!(evolve(&g, &neg, &[0.0, 1.0], &EvolveOptions::default()).is_err());
    }

    #[test]
    fn evolve_matches_matrix_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let d = 3;
        let h = random_hermitian(&mut rng, d);
        let jumps: Vec<_> = (0..2).map(|_| random_matrix(&mut rng, d).scale(0.5)).collect();
        let g = Generator::new(h, jumps, RateMatrix::diagonal(&[1.0, 0.5]).unwrap()).unwrap();
        let rho0 = random_density(&mut rng, d);
        let mut times: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..5.0)).collect();
        times.sort_by(f64::total_cmp);
        let traj = evolve(&g, &rho0, &times, &EvolveOptions::default()).unwrap();
        let s = g.superoperator();
        for (t, rho) in times.iter().zip(&traj.states) {
            let prop = expm(&(&s.matrix * c64(*t, 0.0)));
            let exact = unvectorize(&(prop * vectorize(&rho0)), d);
            assert!(max_abs(&(rho - exact)) < 1e-7, "t = {t}");
        }
    }

    #[test]
    fn steady_state_is_a_fixed_point_of_evolution() {
        let h = sigma_x() * c64(0.6, 0.0);
        let g = Generator::new(h, alloc::vec![sigma_minus()], RateMatrix::diagonal(&[1.0]).unwrap()).unwrap();
        let ss = steady_state(&g).unwrap();
        let traj = evolve(&g, &ss.rho, &uniform_grid(10.0, 21), &EvolveOptions::default()).unwrap();
        for rho in &traj.states {
            assert!(trace_distance(rho, &ss.rho) < 1e-6);
        }
    }

    #[test]
    fn positivity_monitor_aborts_non_cp_runs() {
        // eigen-channels (σz ± σx)/√2 with rates ±1 push |e><e| out of the
        // positive cone at once
        let k = DMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
        let g = Generator::new(
            ComplexMatrix::zeros(2, 2),
            alloc::vec![sigma_z(), sigma_x()],
            RateMatrix::new(k).unwrap(),
        )
        .unwrap();
        assert!(!g.cp_flag());
        let res = evolve(&g, &matrix_unit(2, 0, 0), &uniform_grid(1.0, 11), &EvolveOptions::default());
        assert!(matches!(res, Err(Error::Positivity { .. })), "{res:?}");
    }

    #[test]
    fn uniform_grid_endpoints() {
        let g = uniform_grid(2.0, 5);
        assert_eq!(g, [0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(uniform_grid(2.0, 1), [0.0]);
    }
}
