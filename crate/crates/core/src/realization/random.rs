//! Seeded sampling of states, unitaries and measurements.

use crate::assemblage::{Assemblage, LhsModel, LhsTerm, Povm};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, Hermitian, C64};
use crate::scenario::Scenario;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

pub const RNG_ALGORITHM: &str = "chacha8";

/// Seed plus stream index; sample `i` of a run always draws from stream `i`,
/// so results do not depend on how work is split across threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RandomSource {
    pub seed: u64,
    pub algorithm: &'static str,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, algorithm: RNG_ALGORITHM }
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

fn gaussian_c<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian_c(rng))
}

/// Haar-random unitary: QR of a Ginibre matrix with the phases of `R`'s
/// diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(n, n, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let z = r[(j, j)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { c(1.0, 0.0) };
        q.column_mut(j).apply(|z| *z *= phase);
    }
    q
}

/// Uniformly random unit vector on `⊗ dims`.
pub fn random_pure_state<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> CVector {
    let n: usize = dims.iter().product();
    let v = CVector::from_fn(n, |_, _| gaussian_c(rng));
    let norm = v.norm();
    v / c(norm, 0.0)
}

/// Weights in `[0.1, 1.1)`, normalized: strictly positive, so the rank is exact.
fn positive_weights<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| 0.1 + rng.random::<f64>()).collect();
    let sum: f64 = w.iter().sum();
    w.into_iter().map(|x| x / sum).collect()
}

/// `U diag(p) U†` with `rank` positive entries in `p`.
pub fn random_mixed_state<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Result<Hermitian> {
    if rank == 0 || rank > dim {
        return Err(Error::InvalidParams(format!("rank {rank} impossible in dimension {dim}")));
    }
    let u = haar_unitary(dim, rng);
    let p = positive_weights(rank, rng);
    Ok(mix_columns(&u, &p))
}

/// `Σ_k p_k u_k u_k†` over the first `p.len()` columns of `u`.
pub(crate) fn mix_columns(u: &CMatrix, p: &[f64]) -> Hermitian {
    let mut m = CMatrix::zeros(u.nrows(), u.nrows());
    for (k, &w) in p.iter().enumerate() {
        let col = u.column(k);
        m += col * col.adjoint() * c(w, 0.0);
    }
    Hermitian::symmetrized(m)
}

/// `{|u⟩⟨u|, 1 - |u⟩⟨u|}` for a Haar-random qubit vector `u`.
pub fn random_pvm_qubit<R: Rng + ?Sized>(rng: &mut R) -> Povm {
    pvm_from_basis(&haar_unitary(2, rng))
}

/// Rank-one projectors onto the columns of a unitary.
pub fn pvm_from_basis(u: &CMatrix) -> Povm {
    (0..u.ncols())
        .map(|k| Hermitian::ket_projector(&u.column(k).into_owned()))
        .collect()
}

/// `M_k = S^{-1/2} G_k S^{-1/2}` with `G_k = A_k A_k†` Ginibre and `S = Σ G_k`.
pub fn random_povm<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Result<Povm> {
    if outcomes == 0 || dim == 0 {
        return Err(Error::InvalidParams("POVM needs at least one outcome and dimension".into()));
    }
    let gs: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let a = ginibre(dim, dim, rng);
            &a * a.adjoint()
        })
        .collect();
    let mut s = CMatrix::zeros(dim, dim);
    for g in &gs {
        s += g;
    }
    let inv_sqrt = crate::linalg::eigh(&Hermitian::symmetrized(s)).reconstruct_with(|l| Some(1.0 / l.sqrt()));
    let mut povm: Povm = gs
        .iter()
        .map(|g| {
            Hermitian::symmetrized(inv_sqrt.matrix() * g * inv_sqrt.matrix())
        })
        .collect();
    // absorb the rounding error of the completeness relation into the last effect
    let mut sum = Hermitian::zeros(dim);
    for e in &povm[..outcomes - 1] {
        sum += e;
    }
    povm[outcomes - 1] = Hermitian::identity(dim) - sum;
    Ok(povm)
}

/// Random probability vector with entries bounded away from zero.
pub fn random_distribution<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    positive_weights(k, rng)
}

/// Random LHS assemblage: 1–4 terms with random conditionals, random weights
/// and random states of rank 1 or 2 (capped at `d`).
pub fn random_lhs_model<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> Result<LhsModel> {
    let terms = rng.random_range(1..=4usize);
    let weights = positive_weights(terms, rng);
    let d = s.trusted_dim();
    let terms = weights
        .into_iter()
        .map(|w| {
            let conditionals = s
                .settings()
                .iter()
                .zip(s.outcomes())
                .map(|(&nx, &na)| (0..nx).map(|_| random_conditional(na, rng)).collect())
                .collect();
            let rank = rng.random_range(1..=2usize).min(d);
            Ok(LhsTerm { weight: w, conditionals, state: random_mixed_state(d, rank, rng)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LhsModel { terms })
}

/// Conditional distribution that is sometimes deterministic, sometimes spread.
fn random_conditional<R: Rng + ?Sized>(na: usize, rng: &mut R) -> Vec<f64> {
    if rng.random_bool(0.3) {
        let hit = rng.random_range(0..na);
        (0..na).map(|k| if k == hit { 1.0 } else { 0.0 }).collect()
    } else {
        let w: Vec<f64> = (0..na).map(|_| rng.random::<f64>()).collect();
        let sum: f64 = w.iter().sum();
        w.into_iter().map(|x| x / sum).collect()
    }
}

pub fn random_lhs_assemblage<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> Result<Assemblage> {
    Assemblage::from_lhs(&random_lhs_model(s, rng)?, s)
}
