// Copyright 2026 chiralwg Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense operator algebra on the tensor-product space of N two-level emitters.
//!
//! Ordering convention: site 0 is the most significant tensor factor, so the
//! computational basis index of a product state reads the sites left to right
//! as binary digits with `g = 0`, `e = 1`. For two sites `|e₁g₂⟩` is index 2.
//!
//! All rates are expressed in units of a user-chosen reference rate and ħ = 1.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest register held as a dense pure state (or operator).
pub const MAX_PURE_SITES: usize = 12;
/// Largest register held as a dense density matrix.
pub const MAX_DENSITY_SITES: usize = 6;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-9;
const NORM_TOL: f64 = 1e-12;

pub(crate) fn sites_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Maximum entrywise deviation of `m` from its adjoint.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Dense operator on `n_sites` two-level emitters.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    n_sites: usize,
    matrix: DMatrix<C64>,
    hermitian: bool,
}

impl Operator {
    /// Wraps a square matrix whose dimension is a power of two.
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let n_sites = sites_for_dim(matrix.nrows())?;
        if n_sites > MAX_PURE_SITES {
            return Err(Error::Capacity {
                what: "operators",
                n_sites,
                max: MAX_PURE_SITES,
            });
        }
        Ok(Self {
            n_sites,
            matrix,
            hermitian: false,
        })
    }

    /// Wraps a matrix and marks it Hermitian after checking it is.
    pub fn hermitian(matrix: DMatrix<C64>) -> Result<Self> {
        let defect = hermiticity_defect(&matrix);
        if defect >= HERMITIAN_TOL {
            return Err(Error::InvalidParameter(format!(
                "matrix is not Hermitian (defect {defect:e})"
            )));
        }
        let mut op = Self::from_matrix(matrix)?;
        op.hermitian = true;
        Ok(op)
    }

    pub(crate) fn from_parts(n_sites: usize, matrix: DMatrix<C64>, hermitian: bool) -> Self {
        debug_assert_eq!(matrix.nrows(), 1 << n_sites);
        Self {
            n_sites,
            matrix,
            hermitian,
        }
    }

    pub fn identity(n_sites: usize) -> Self {
        Self::from_parts(n_sites, DMatrix::identity(1 << n_sites, 1 << n_sites), true)
    }

    pub fn zeros(n_sites: usize) -> Self {
        let d = 1 << n_sites;
        Self::from_parts(n_sites, DMatrix::zeros(d, d), true)
    }

    /// σ⁻ = |g⟩⟨e|.
    pub fn lowering() -> Self {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        Self::from_parts(1, m, false)
    }

    /// σ⁺ = |e⟩⟨g|.
    pub fn raising() -> Self {
        Self::lowering().adjoint()
    }

    /// σ⁺σ⁻ = |e⟩⟨e|.
    pub fn excited_projector() -> Self {
        let mut m = DMatrix::zeros(2, 2);
        m[(1, 1)] = C64::new(1.0, 0.0);
        Self::from_parts(1, m, true)
    }

    /// σ_z = |e⟩⟨e| − |g⟩⟨g|.
    pub fn sigma_z() -> Self {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(-1.0, 0.0);
        m[(1, 1)] = C64::new(1.0, 0.0);
        Self::from_parts(1, m, true)
    }

    pub fn sigma_x() -> Self {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        m[(1, 0)] = C64::new(1.0, 0.0);
        Self::from_parts(1, m, true)
    }

    /// |ψ⟩⟨ψ| for a pure state.
    pub fn projector(state: &PureState) -> Self {
        let v = state.amplitudes();
        Self::from_parts(state.n_sites(), v * v.adjoint(), true)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    /// True when the operator was constructed or verified as Hermitian.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(self.n_sites, self.matrix.adjoint(), self.hermitian)
    }

    pub fn scale(&self, factor: C64) -> Self {
        let hermitian = self.hermitian && factor.im == 0.0;
        Self::from_parts(self.n_sites, &self.matrix * factor, hermitian)
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other)?;
        Ok(Self::from_parts(
            self.n_sites,
            &self.matrix * &other.matrix - &other.matrix * &self.matrix,
            false,
        ))
    }

    /// Largest entrywise magnitude.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
    }

    pub fn embed(&self, site: usize, n_sites: usize) -> Result<Operator> {
        embed_operator(self, site, n_sites)
    }

    fn check_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator::from_parts(
            self.n_sites,
            &self.matrix + &rhs.matrix,
            self.hermitian && rhs.hermitian,
        )
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator::from_parts(
            self.n_sites,
            &self.matrix - &rhs.matrix,
            self.hermitian && rhs.hermitian,
        )
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator::from_parts(self.n_sites, &self.matrix * &rhs.matrix, false)
    }
}

/// `I ⊗ … ⊗ local ⊗ … ⊗ I` with `local` acting on `site`.
pub fn embed_operator(local: &Operator, site: usize, n_sites: usize) -> Result<Operator> {
    if local.n_sites() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: local.dim(),
        });
    }
    if site >= n_sites {
        return Err(Error::SiteOutOfRange { site, n_sites });
    }
    if n_sites > MAX_PURE_SITES {
        return Err(Error::Capacity {
            what: "operators",
            n_sites,
            max: MAX_PURE_SITES,
        });
    }
    let left: DMatrix<C64> = DMatrix::identity(1 << site, 1 << site);
    let right_dim = 1 << (n_sites - site - 1);
    let right: DMatrix<C64> = DMatrix::identity(right_dim, right_dim);
    let m = left.kronecker(&local.matrix).kronecker(&right);
    Ok(Operator::from_parts(n_sites, m, local.hermitian))
}

/// σ_j⁻ on an `n_sites` register.
pub fn site_lowering(site: usize, n_sites: usize) -> Result<Operator> {
    embed_operator(&Operator::lowering(), site, n_sites)
}

/// σ_j⁺σ_j⁻ on an `n_sites` register.
pub fn site_excitation(site: usize, n_sites: usize) -> Result<Operator> {
    embed_operator(&Operator::excited_projector(), site, n_sites)
}

/// Normalized state vector on `n_sites` emitters.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n_sites: usize,
    amplitudes: DVector<C64>,
}

impl PureState {
    /// Accepts an already normalized amplitude vector.
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        let n_sites = sites_for_dim(amplitudes.len())?;
        if n_sites > MAX_PURE_SITES {
            return Err(Error::Capacity {
                what: "pure states",
                n_sites,
                max: MAX_PURE_SITES,
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(Self {
            n_sites,
            amplitudes,
        })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        let v = amplitudes.unscale(norm);
        Self::new(v)
    }

    pub fn basis(n_sites: usize, index: usize) -> Result<Self> {
        if n_sites > MAX_PURE_SITES {
            return Err(Error::Capacity {
                what: "pure states",
                n_sites,
                max: MAX_PURE_SITES,
            });
        }
        let dim = 1usize << n_sites;
        if index >= dim {
            return Err(Error::InvalidState(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut v = DVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Ok(Self {
            n_sites,
            amplitudes: v,
        })
    }

    /// Product state from a label such as `"eg"` (site 0 first).
    pub fn from_labels(labels: &str) -> Result<Self> {
        let mut index = 0usize;
        let mut n = 0usize;
        for ch in labels.chars() {
            let bit = match ch {
                'g' | '0' => 0,
                'e' | '1' => 1,
                other => {
                    return Err(Error::InvalidState(format!(
                        "unknown site label {other:?}, expected 'g' or 'e'"
                    )))
                }
            };
            index = (index << 1) | bit;
            n += 1;
        }
        if n == 0 {
            return Err(Error::InvalidState("empty state label".into()));
        }
        Self::basis(n, index)
    }

    pub fn ground(n_sites: usize) -> Result<Self> {
        Self::basis(n_sites, 0)
    }

    /// Tensor product of single-site states, site 0 first.
    pub fn product(sites: &[PureState]) -> Result<Self> {
        let mut v = DVector::from_element(1, C64::new(1.0, 0.0));
        for s in sites {
            v = v.kronecker(&s.amplitudes);
        }
        Self::normalized(v)
    }

    /// (|e₁g₂⟩ − |g₁e₂⟩)/√2.
    pub fn singlet() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = DVector::from_vec(vec![
            C64::new(0.0, 0.0),
            C64::new(-h, 0.0),
            C64::new(h, 0.0),
            C64::new(0.0, 0.0),
        ]);
        Self {
            n_sites: 2,
            amplitudes: v,
        }
    }

    /// (|e₁g₂⟩ + |g₁e₂⟩)/√2.
    pub fn triplet() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = DVector::from_vec(vec![
            C64::new(0.0, 0.0),
            C64::new(h, 0.0),
            C64::new(h, 0.0),
            C64::new(0.0, 0.0),
        ]);
        Self {
            n_sites: 2,
            amplitudes: v,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        if self.n_sites > MAX_DENSITY_SITES {
            return Err(Error::Capacity {
                what: "density matrices",
                n_sites: self.n_sites,
                max: MAX_DENSITY_SITES,
            });
        }
        let m = &self.amplitudes * self.amplitudes.adjoint();
        Ok(DensityMatrix::from_parts(self.n_sites, m))
    }
}

/// Density matrix on `n_sites` emitters.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_sites: usize,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let n_sites = sites_for_dim(matrix.nrows())?;
        if n_sites > MAX_DENSITY_SITES {
            return Err(Error::Capacity {
                what: "density matrices",
                n_sites,
                max: MAX_DENSITY_SITES,
            });
        }
        let defect = hermiticity_defect(&matrix);
        if defect >= HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix is not Hermitian (defect {defect:e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let rho = Self::from_parts(n_sites, matrix);
        let min_eig = rho.min_eigenvalue();
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix has negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(rho)
    }

    pub(crate) fn from_parts(n_sites: usize, matrix: DMatrix<C64>) -> Self {
        Self { n_sites, matrix }
    }

    pub fn maximally_mixed(n_sites: usize) -> Result<Self> {
        if n_sites > MAX_DENSITY_SITES {
            return Err(Error::Capacity {
                what: "density matrices",
                n_sites,
                max: MAX_DENSITY_SITES,
            });
        }
        let d = 1usize << n_sites;
        let m = DMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0);
        Ok(Self::from_parts(n_sites, m))
    }

    /// Tensor product, site order preserved.
    pub fn product(parts: &[DensityMatrix]) -> Result<Self> {
        let mut m = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for p in parts {
            m = m.kronecker(&p.matrix);
        }
        Self::new(m)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = hermitian_part(&self.matrix);
        SymmetricEigen::new(h).eigenvalues.iter().copied().collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn fidelity_to_pure(&self, state: &PureState) -> Result<f64> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: state.dim(),
            });
        }
        let v = state.amplitudes();
        Ok(v.dotc(&(&self.matrix * v)).re)
    }

    /// Population of the excited state of `site`.
    pub fn excited_population(&self, site: usize) -> Result<f64> {
        if site >= self.n_sites {
            return Err(Error::SiteOutOfRange {
                site,
                n_sites: self.n_sites,
            });
        }
        let shift = self.n_sites - 1 - site;
        Ok((0..self.dim())
            .filter(|i| (i >> shift) & 1 == 1)
            .map(|i| self.matrix[(i, i)].re)
            .sum())
    }
}

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// ½‖a − b‖₁ for Hermitian matrices of equal size.
pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let diff = hermitian_part(&(a - b));
    0.5 * SymmetricEigen::new(diff)
        .eigenvalues
        .iter()
        .map(|x| x.abs())
        .sum::<f64>()
}

/// Reduced density matrix on the sites in `keep` (kept in ascending site order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_sites();
    if keep.is_empty() {
        return Err(Error::InvalidParameter(
            "partial trace needs at least one kept site".into(),
        ));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    for w in kept.windows(2) {
        if w[0] == w[1] {
            return Err(Error::InvalidParameter(format!(
                "site {} listed twice in partial trace",
                w[0]
            )));
        }
    }
    if let Some(&bad) = kept.iter().find(|&&s| s >= n) {
        return Err(Error::SiteOutOfRange {
            site: bad,
            n_sites: n,
        });
    }
    let traced: Vec<usize> = (0..n).filter(|s| !kept.contains(s)).collect();

    let scatter = |sites: &[usize], bits: usize| -> usize {
        let k = sites.len();
        sites.iter().enumerate().fold(0usize, |acc, (pos, &site)| {
            let bit = (bits >> (k - 1 - pos)) & 1;
            acc | (bit << (n - 1 - site))
        })
    };

    let dk = 1usize << kept.len();
    let dt = 1usize << traced.len();
    let m = rho.matrix();
    let mut out = DMatrix::zeros(dk, dk);
    for a in 0..dk {
        let ia = scatter(&kept, a);
        for b in 0..dk {
            let ib = scatter(&kept, b);
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..dt {
                let it = scatter(&traced, t);
                acc += m[(ia | it, ib | it)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(DensityMatrix::from_parts(kept.len(), out))
}

/// Tr(ρA).
pub fn expectation(rho: &DensityMatrix, op: &Operator) -> Result<C64> {
    if rho.dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: op.dim(),
        });
    }
    let m = rho.matrix();
    let a = op.matrix();
    let d = rho.dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += m[(i, k)] * a[(k, i)];
        }
    }
    Ok(acc)
}
