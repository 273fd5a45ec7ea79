//! Quantum realizations of assemblages in the three-party scenario
//! `A B | C` (two untrusted qubits with binary settings and outcomes, a
//! trusted system of dimension `d`).
//!
//! * [`theorem2_construct`]: measurements steering a pure state, entangled
//!   across `AB|C`, onto the edge.
//! * [`theorem4_construct`]: the same for rank-two states whose conditional
//!   states after one `A` measurement are pure and entangled.
//! * [`theorem3_scan`]: randomized check that states of rank at least three
//!   never reach the edge.
//! * [`lemmas`]: randomized checks of the rank patterns that the no-go
//!   argument relies on.

mod construct;
pub mod lemmas;
pub mod random;
mod scan;

pub use construct::{random_rank_two_instance, theorem2_construct, theorem4_construct, Construction};
pub use random::RandomSource;
pub use scan::{
    povm_pvm_split, structured_state, theorem3_scan, MeasurementKind, PvmSplit, SampleRecord, ScanConfig, ScanReport,
    SplitCheck, StateFamily,
};

use crate::assemblage::{Assemblage, MeasurementSet};
use crate::error::Result;
use crate::linalg::{contract_first, reshape_cut, CVector, Hermitian, RankTolerance};
use serde::Serialize;

pub const DEFAULT_MAX_TRIES: usize = 1000;

/// A state together with measurements whose assemblage has a claimed property.
#[derive(Debug, Clone)]
pub struct RealizationRecipe {
    /// Subsystem dimensions; the last entry is the trusted system.
    pub dims: Vec<usize>,
    pub state: Hermitian,
    pub measurements: MeasurementSet,
    pub provenance: String,
    /// Measurement draws used before the property was verified.
    pub tries: usize,
}

impl RealizationRecipe {
    pub fn assemblage(&self) -> Result<Assemblage> {
        Assemblage::from_quantum(&self.state, &self.measurements)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchmidtDecomposition {
    pub rank: usize,
    /// Descending.
    pub coefficients: Vec<f64>,
}

/// Schmidt coefficients of `v ∈ ⊗ dims` across the cut `left | rest`.
pub fn schmidt_check(v: &CVector, dims: &[usize], left: &[usize], tol: &RankTolerance) -> SchmidtDecomposition {
    let m = reshape_cut(v, dims, left);
    let mut coefficients: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    coefficients.sort_by(|a, b| b.total_cmp(a));
    let thr = tol.threshold(coefficients.first().copied().unwrap_or(0.0));
    let rank = coefficients.iter().filter(|&&s| s > thr).count();
    SchmidtDecomposition { rank, coefficients }
}

/// Leading Schmidt pair `(u, w)` with `v ≈ s·u ⊗ w` across `left | rest`
/// (rest in increasing subsystem order).
pub(crate) fn leading_schmidt_pair(v: &CVector, dims: &[usize], left: &[usize]) -> (CVector, CVector, f64) {
    let m = reshape_cut(v, dims, left);
    let svd = m.svd(true, true);
    let k = svd.singular_values.imax();
    let u = svd.u.as_ref().expect("u requested").column(k).into_owned();
    let w = svd.v_t.as_ref().expect("v_t requested").row(k).transpose();
    (u, w, svd.singular_values[k])
}

/// `Tr_1((M ⊗ 1) ρ)` for `ρ` on `C^{M.dim} ⊗ C^rest`.
pub(crate) fn condition(m: &Hermitian, rho: &Hermitian) -> Hermitian {
    let rest = rho.dim() / m.dim();
    Hermitian::symmetrized(contract_first(m.matrix(), rho.matrix(), rest).expect("dimensions checked by caller"))
}

/// Binary qubit POVM with both settings equal to the projective measurement
/// `{|u⟩⟨u|, 1 - |u⟩⟨u|}`.
pub(crate) fn fixed_pvm_pair(u: &CVector) -> Vec<Vec<Hermitian>> {
    let p = Hermitian::ket_projector(u);
    let q = Hermitian::identity(u.len()) - p.clone();
    vec![vec![p.clone(), q.clone()], vec![p, q]]
}
