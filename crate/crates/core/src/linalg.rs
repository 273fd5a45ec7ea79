//! Small dense complex Hermitian linear algebra.
//!
//! Everything here works on `d × d` matrices with `d` in the single digits to
//! low tens: trusted-party blocks, conditional states and the joint density
//! matrices they come from. Eigendecompositions are delegated to `nalgebra`;
//! this module fixes the conventions on top of it (ascending eigenvalues,
//! canonical eigenvector phase, rank thresholds, PSD clamping).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use thiserror::Error;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Maximum entrywise deviation `|M - M†|` accepted by [`Hermitian::new`].
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Eigenvalues at or above `-PSD_TOL` count as nonnegative (and are clamped to 0).
pub const PSD_TOL: f64 = 1e-9;
/// Eigenvalues of `Σ(1 - R_i)` at or below this value span the common image.
pub const INTERSECTION_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (max |M - M^dagger| = {deviation:e})")]
    NonHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty operator list")]
    Empty,
}

/// Threshold used to decide which eigenvalues are "nonzero".
///
/// An eigenvalue counts iff `λ > max(abs_tol, rel_tol · λ_max)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RankTolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for RankTolerance {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-8 }
    }
}

impl RankTolerance {
    pub fn threshold(&self, lambda_max: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * lambda_max)
    }
}

/// A Hermitian matrix. The stored matrix is exactly Hermitian: construction
/// checks the deviation against [`HERMITICITY_TOL`] and then symmetrizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian(CMatrix);

impl Hermitian {
    pub fn new(m: CMatrix) -> Result<Self, LinalgError> {
        Self::with_tolerance(m, HERMITICITY_TOL)
    }

    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self, LinalgError> {
        if m.nrows() != m.ncols() {
            return Err(LinalgError::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        let deviation = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if deviation > tol {
            return Err(LinalgError::NonHermitian { deviation });
        }
        Ok(Self::symmetrized(m))
    }

    /// Wraps `(M + M†)/2` without any tolerance check. Used internally for
    /// matrices that are Hermitian by construction up to rounding.
    pub(crate) fn symmetrized(m: CMatrix) -> Self {
        let adj = m.adjoint();
        Self((m + adj) * C64::new(0.5, 0.0))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        let mut m = CMatrix::zeros(d, d);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        Self(m)
    }

    /// `|v⟩⟨v|` (not normalized).
    pub fn outer(v: &CVector) -> Self {
        Self::symmetrized(v * v.adjoint())
    }

    /// Projector onto the span of `v`; `v` need not be normalized.
    pub fn ket_projector(v: &CVector) -> Self {
        let n = v.norm();
        Self::outer(&(v / C64::new(n, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `Tr(A B)` for Hermitian `A`, `B`; real up to rounding.
    pub fn trace_product(&self, other: &Hermitian) -> f64 {
        self.0.iter().zip(other.0.transpose().iter()).map(|(a, b)| (a * b).re).sum()
    }

    /// `⟨v|M|v⟩`.
    pub fn expectation(&self, v: &CVector) -> f64 {
        (v.adjoint() * &self.0 * v)[(0, 0)].re
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(&self.0 * C64::new(factor, 0.0))
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Hermitian) -> f64 {
        (&self.0 - &other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Hilbert–Schmidt norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// `A ⊗ B`.
    pub fn kron(&self, other: &Hermitian) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// Conjugation `U M U†`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        Self::symmetrized(u * &self.0 * u.adjoint())
    }
}

impl Add for &Hermitian {
    type Output = Hermitian;
    fn add(self, rhs: &Hermitian) -> Hermitian {
        Hermitian(&self.0 + &rhs.0)
    }
}

impl Add for Hermitian {
    type Output = Hermitian;
    fn add(self, rhs: Hermitian) -> Hermitian {
        Hermitian(self.0 + rhs.0)
    }
}

impl AddAssign<&Hermitian> for Hermitian {
    fn add_assign(&mut self, rhs: &Hermitian) {
        self.0 += &rhs.0;
    }
}

impl Sub for &Hermitian {
    type Output = Hermitian;
    fn sub(self, rhs: &Hermitian) -> Hermitian {
        Hermitian(&self.0 - &rhs.0)
    }
}

impl Sub for Hermitian {
    type Output = Hermitian;
    fn sub(self, rhs: Hermitian) -> Hermitian {
        Hermitian(self.0 - rhs.0)
    }
}

impl Neg for Hermitian {
    type Output = Hermitian;
    fn neg(self) -> Hermitian {
        Hermitian(-self.0)
    }
}

impl Mul<f64> for &Hermitian {
    type Output = Hermitian;
    fn mul(self, rhs: f64) -> Hermitian {
        self.scaled(rhs)
    }
}

impl Mul<f64> for Hermitian {
    type Output = Hermitian;
    fn mul(self, rhs: f64) -> Hermitian {
        Hermitian(self.0 * C64::new(rhs, 0.0))
    }
}

/// Spectral decomposition with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: Vec<CVector>,
}

impl Eigh {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `Σ f(λ_k) v_k v_k†`, skipping terms where `f` returns `None`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> Option<f64>) -> Hermitian {
        let d = self.vectors.first().map_or(0, |v| v.len());
        let mut m = CMatrix::zeros(d, d);
        for (&lambda, v) in self.values.iter().zip(&self.vectors) {
            if let Some(w) = f(lambda) {
                m += v * v.adjoint() * C64::new(w, 0.0);
            }
        }
        Hermitian::symmetrized(m)
    }
}

/// Rotates `v` so that its first component of largest modulus is real positive.
pub fn canonical_phase(v: &mut CVector) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v.iter().position(|z| z.norm() >= max * (1.0 - 1e-10)).unwrap_or(0);
    let z = v[pivot];
    let phase = z.conj() / z.norm();
    v.iter_mut().for_each(|c| *c *= phase);
}

pub fn eigh(m: &Hermitian) -> Eigh {
    let d = m.dim();
    if d == 0 {
        return Eigh { values: vec![], vectors: vec![] };
    }
    let se = m.0.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut v: CVector = se.eigenvectors.column(i).into_owned();
            let n = v.norm();
            v /= C64::new(n, 0.0);
            canonical_phase(&mut v);
            v
        })
        .collect();
    Eigh { values, vectors }
}

pub fn min_eigenvalue(m: &Hermitian) -> f64 {
    eigh(m).min()
}

fn check_psd(e: &Eigh) -> Result<(), LinalgError> {
    let min = e.min();
    if min < -PSD_TOL {
        return Err(LinalgError::NotPsd { min_eigenvalue: min });
    }
    Ok(())
}

fn rank_from(e: &Eigh, tol: &RankTolerance) -> usize {
    let thr = tol.threshold(e.max().max(0.0));
    e.values.iter().filter(|&&l| l > thr).count()
}

pub fn rank_of(m: &Hermitian, tol: &RankTolerance) -> usize {
    rank_from(&eigh(m), tol)
}

/// Rank, or `None` when some eigenvalue sits within a factor of ten of the
/// rank threshold.
pub fn robust_rank(m: &Hermitian, tol: &RankTolerance) -> Option<usize> {
    let e = eigh(m);
    let thr = tol.threshold(e.max().max(0.0));
    if e.values.iter().any(|&l| l.abs() > thr / 10.0 && l.abs() < thr * 10.0) {
        return None;
    }
    Some(rank_from(&e, tol))
}

pub fn image_projector(m: &Hermitian, tol: &RankTolerance) -> Result<Hermitian, LinalgError> {
    let e = eigh(m);
    check_psd(&e)?;
    let thr = tol.threshold(e.max().max(0.0));
    Ok(e.reconstruct_with(|l| (l > thr).then_some(1.0)))
}

/// Moore–Penrose pseudo-inverse of a PSD matrix.
pub fn pseudo_inverse(m: &Hermitian, tol: &RankTolerance) -> Result<Hermitian, LinalgError> {
    let e = eigh(m);
    check_psd(&e)?;
    let thr = tol.threshold(e.max().max(0.0));
    Ok(e.reconstruct_with(|l| (l > thr).then(|| 1.0 / l)))
}

/// Orthonormal basis of a subspace of `C^dim`.
#[derive(Debug, Clone)]
pub struct Subspace {
    pub ambient_dim: usize,
    pub basis: Vec<CVector>,
}

impl Subspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn projector(&self) -> Hermitian {
        let mut m = CMatrix::zeros(self.ambient_dim, self.ambient_dim);
        for v in &self.basis {
            m += v * v.adjoint();
        }
        Hermitian::symmetrized(m)
    }
}

/// Spectrum of `K = Σ_i (1 - R_i)`; its (near-)kernel is the common image of
/// the inputs.
#[derive(Debug, Clone)]
pub struct IntersectionSpectrum {
    pub spectrum: Eigh,
    pub intersection_tol: f64,
}

impl IntersectionSpectrum {
    /// Smallest eigenvalue of `K`.
    pub fn margin(&self) -> f64 {
        self.spectrum.min()
    }

    pub fn kernel(&self) -> Subspace {
        let basis = self
            .spectrum
            .values
            .iter()
            .zip(&self.spectrum.vectors)
            .filter(|(&l, _)| l <= self.intersection_tol)
            .map(|(_, v)| v.clone())
            .collect();
        Subspace { ambient_dim: self.spectrum.vectors.len(), basis }
    }
}

pub fn intersection_spectrum_of_projectors(
    projectors: &[Hermitian],
    intersection_tol: f64,
) -> Result<IntersectionSpectrum, LinalgError> {
    let first = projectors.first().ok_or(LinalgError::Empty)?;
    let d = first.dim();
    let mut k = CMatrix::zeros(d, d);
    for r in projectors {
        if r.dim() != d {
            return Err(LinalgError::DimensionMismatch { expected: d, found: r.dim() });
        }
        k += CMatrix::identity(d, d) - &r.0;
    }
    Ok(IntersectionSpectrum {
        spectrum: eigh(&Hermitian::symmetrized(k)),
        intersection_tol,
    })
}

pub fn intersection_spectrum(
    operators: &[Hermitian],
    tol: &RankTolerance,
    intersection_tol: f64,
) -> Result<IntersectionSpectrum, LinalgError> {
    let projectors = operators
        .iter()
        .map(|m| image_projector(m, tol))
        .collect::<Result<Vec<_>, _>>()?;
    intersection_spectrum_of_projectors(&projectors, intersection_tol)
}

/// Common image `⋂_i Im(M_i)` of PSD operators.
pub fn range_intersection(operators: &[Hermitian], tol: &RankTolerance) -> Result<Subspace, LinalgError> {
    Ok(intersection_spectrum(operators, tol, INTERSECTION_TOL)?.kernel())
}

/// `Tr_first((M ⊗ 1) ρ)` where `M` acts on the leading tensor factor of
/// dimension `m.nrows()` and `ρ` acts on `C^{m.nrows()} ⊗ C^{d_rest}`.
pub fn contract_first(m: &CMatrix, rho: &CMatrix, d_rest: usize) -> Result<CMatrix, LinalgError> {
    let da = m.nrows();
    if rho.nrows() != da * d_rest || rho.ncols() != da * d_rest {
        return Err(LinalgError::DimensionMismatch { expected: da * d_rest, found: rho.nrows() });
    }
    let mut out = CMatrix::zeros(d_rest, d_rest);
    for alpha in 0..da {
        for beta in 0..da {
            let coeff = m[(alpha, beta)];
            if coeff == C64::new(0.0, 0.0) {
                continue;
            }
            // (M ⊗ 1)ρ traced over the first factor: Σ_{αβ} M_{αβ} ρ_{(β,i),(α,j)}
            let block = rho.view((beta * d_rest, alpha * d_rest), (d_rest, d_rest));
            out += block * coeff;
        }
    }
    Ok(out)
}

/// Kronecker product of a list of matrices (empty list gives the 1×1 identity).
pub fn kron_all<'a>(ms: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    ms.into_iter()
        .fold(CMatrix::identity(1, 1), |acc, m| acc.kronecker(m))
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Column vector from real components.
pub fn real_vector(xs: &[f64]) -> CVector {
    CVector::from_iterator(xs.len(), xs.iter().map(|&x| c(x, 0.0)))
}

/// Matrix rearranged so that rows index the subsystems in `left` and columns
/// the rest, for a vector on `⊗ dims`.
pub fn reshape_cut(v: &CVector, dims: &[usize], left: &[usize]) -> CMatrix {
    let right: Vec<usize> = (0..dims.len()).filter(|i| !left.contains(i)).collect();
    let dl: usize = left.iter().map(|&i| dims[i]).product();
    let dr: usize = right.iter().map(|&i| dims[i]).product();
    let mut out = CMatrix::zeros(dl, dr);
    let mut digits = vec![0usize; dims.len()];
    for (flat, &amp) in v.iter().enumerate() {
        let mut rem = flat;
        for k in (0..dims.len()).rev() {
            digits[k] = rem % dims[k];
            rem /= dims[k];
        }
        let row = left.iter().fold(0, |acc, &i| acc * dims[i] + digits[i]);
        let col = right.iter().fold(0, |acc, &i| acc * dims[i] + digits[i]);
        out[(row, col)] = amp;
    }
    out
}
