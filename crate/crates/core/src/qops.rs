//! Operator algebra on N two-level atoms.
//!
//! Basis conventions used throughout the crate:
//!
//! * a single atom is ordered `(|e>, |g>)`, so index 0 is the excited state;
//! * N atoms use the lexicographic tensor product with atom 1 as the most
//!   significant factor;
//! * the Dicke basis `|j = N/2, m>` is ordered by descending `m`, so index 0
//!   is the fully excited state.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::matrix::{c64, ensure_square, hermiticity_defect, ComplexMatrix, I};
use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Largest atom number accepted by the site-resolved builders.
pub const MAX_SITES: usize = 12;

const ONE: Complex64 = c64(1.0, 0.0);

/// `σ^- = |g><e|` in the `(|e>, |g>)` ordering.
pub fn sigma_minus() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(0.0, 0.0), ONE, c64(0.0, 0.0)])
}

pub fn sigma_plus() -> ComplexMatrix {
    sigma_minus().adjoint()
}

pub fn sigma_x() -> ComplexMatrix {
    sigma_plus() + sigma_minus()
}

pub fn sigma_y() -> ComplexMatrix {
    (sigma_plus() - sigma_minus()) * (-I)
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(alloc::vec![ONE, -ONE]))
}

/// Pauli and ladder operators embedded on each site of an N-atom register.
/// Index `j` in the vectors is atom `j + 1`.
#[derive(Debug, Clone)]
pub struct SiteOperators {
    pub n_atoms: usize,
    pub sigma_minus: Vec<ComplexMatrix>,
    pub sigma_plus: Vec<ComplexMatrix>,
    pub sigma_x: Vec<ComplexMatrix>,
}

impl SiteOperators {
    pub fn dim(&self) -> usize {
        1 << self.n_atoms
    }
}

fn check_sites(n_atoms: usize) -> Result<()> {
    if n_atoms == 0 || n_atoms > MAX_SITES {
        return Err(Error::Size {
            what: "site-resolved atom count",
            size: n_atoms,
            limit: MAX_SITES,
        });
    }
    Ok(())
}

/// Bit mask selecting atom `site` (0-based) in a lexicographic basis index.
#[inline]
fn site_mask(n_atoms: usize, site: usize) -> usize {
    1 << (n_atoms - 1 - site)
}

pub fn build_site_operators(n_atoms: usize) -> Result<SiteOperators> {
    check_sites(n_atoms)?;
    let dim = 1usize << n_atoms;
    let mut sigma_minus = Vec::with_capacity(n_atoms);
    for site in 0..n_atoms {
        let mask = site_mask(n_atoms, site);
        let mut m = ComplexMatrix::zeros(dim, dim);
        // bit clear = excited; lowering sets the bit
        for col in (0..dim).filter(|c| c & mask == 0) {
            m[(col | mask, col)] = ONE;
        }
        sigma_minus.push(m);
    }
    let sigma_plus: Vec<_> = sigma_minus.iter().map(|m| m.adjoint()).collect();
    let sigma_x = sigma_minus
        .iter()
        .zip(&sigma_plus)
        .map(|(m, p)| m + p)
        .collect();
    Ok(SiteOperators {
        n_atoms,
        sigma_minus,
        sigma_plus,
        sigma_x,
    })
}

/// Collective spin operators `J_α = Σ_j σ_j^α / 2` restricted to the
/// maximal-spin (Dicke) block of dimension N+1.
#[derive(Debug, Clone)]
pub struct CollectiveOps {
    pub n_atoms: usize,
    pub jx: ComplexMatrix,
    pub jy: ComplexMatrix,
    pub jz: ComplexMatrix,
    pub jplus: ComplexMatrix,
    pub jminus: ComplexMatrix,
}

impl CollectiveOps {
    pub fn dim(&self) -> usize {
        self.n_atoms + 1
    }

    /// Total spin `j = N/2`.
    pub fn spin(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    /// `m` quantum number of Dicke basis index `k`.
    pub fn m_of(&self, k: usize) -> f64 {
        self.spin() - k as f64
    }
}

pub fn build_collective_ops(n_atoms: usize) -> Result<CollectiveOps> {
    if n_atoms == 0 {
        return Err(Error::validation("collective model needs at least one atom"));
    }
    let dim = n_atoms + 1;
    let j = n_atoms as f64 / 2.0;
    let mut jplus = ComplexMatrix::zeros(dim, dim);
    let mut jz = ComplexMatrix::zeros(dim, dim);
    for k in 0..dim {
        let m = j - k as f64;
        jz[(k, k)] = c64(m, 0.0);
        if k > 0 {
            // |j, m> -> |j, m+1> lives one index up
            jplus[(k - 1, k)] = c64((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let jminus = jplus.adjoint();
    let jx = (&jplus + &jminus).scale(0.5);
    let jy = (&jplus - &jminus) * c64(0.0, -0.5);
    Ok(CollectiveOps {
        n_atoms,
        jx,
        jy,
        jz,
        jplus,
        jminus,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Isometry from the Dicke block into the full 2^N register; column `k` is
/// the normalized symmetric state with `N - k` excitations.
pub fn dicke_isometry(n_atoms: usize) -> Result<DMatrix<Complex64>> {
    check_sites(n_atoms)?;
    let dim = 1usize << n_atoms;
    let mut v = DMatrix::zeros(dim, n_atoms + 1);
    for idx in 0..dim {
        // set bits are ground atoms
        let ground = idx.count_ones() as usize;
        let excited = n_atoms - ground;
        let col = n_atoms - excited;
        v[(idx, col)] = c64(1.0 / binomial(n_atoms, excited).sqrt(), 0.0);
    }
    Ok(v)
}

/// The maximal-spin block of a register density matrix.
#[derive(Debug, Clone)]
pub struct DickeProjection {
    /// `V† ρ V`, not renormalized.
    pub block: ComplexMatrix,
    /// Population of the symmetric subspace, `Tr(block)`.
    pub population: f64,
}

impl DickeProjection {
    /// True when some weight lies outside the symmetric subspace.
    pub fn is_partial(&self, tol: f64) -> bool {
        self.population < 1.0 - tol
    }

    /// The block rescaled to unit trace, if it carries any weight.
    pub fn normalized(&self) -> Option<ComplexMatrix> {
        (self.population > 0.0).then(|| self.block.unscale(self.population))
    }
}

pub fn project_to_dicke(rho: &ComplexMatrix, n_atoms: usize) -> Result<DickeProjection> {
    let dim = ensure_square(rho, "density matrix")?;
    if n_atoms == 0 || n_atoms > MAX_SITES || dim != 1 << n_atoms {
        return Err(Error::validation(format!(
            "density matrix of dimension {dim} does not describe {n_atoms} atoms"
        )));
    }
    let tr = rho.trace();
    if (tr - ONE).norm() > 1e-8 {
        return Err(Error::validation(format!("density matrix trace is {tr}, expected 1")));
    }
    if hermiticity_defect(rho) > 1e-8 {
        return Err(Error::validation("density matrix is not Hermitian"));
    }
    let v = dicke_isometry(n_atoms)?;
    let block = v.adjoint() * rho * &v;
    let population = block.trace().re;
    Ok(DickeProjection { block, population })
}

/// Lift a Dicke-block operator into the full register, `V A V†`.
pub fn embed_dicke(block: &ComplexMatrix, n_atoms: usize) -> Result<ComplexMatrix> {
    let d = ensure_square(block, "Dicke block")?;
    if d != n_atoms + 1 {
        return Err(Error::validation(format!(
            "Dicke block has dimension {d}, expected {}",
            n_atoms + 1
        )));
    }
    let v = dicke_isometry(n_atoms)?;
    Ok(&v * block * v.adjoint())
}
