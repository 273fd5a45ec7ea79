use super::random::{haar_unitary, pvm_from_basis, random_pure_state, random_pvm_qubit};
use super::{condition, fixed_pvm_pair, leading_schmidt_pair, schmidt_check, RealizationRecipe};
use crate::assemblage::{MeasurementSet, Povm};
use crate::edge::{is_on_edge, non_proportional};
use crate::error::{Error, Result};
use crate::linalg::{c, rank_of, CVector, Hermitian};
use crate::tolerance::Tolerances;
use rand::Rng;

/// How a recipe was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    /// `ψ = φ_A ⊗ φ_BC`: both `A` settings project onto `φ_A`.
    ProductA,
    /// `ψ = φ_B ⊗ φ_AC`: both `B` settings project onto `φ_B`.
    ProductB,
    /// No product structure: random projective measurements on both parties.
    Search,
    /// Rank-two state with pure entangled conditional states.
    RankTwo,
}

impl Construction {
    pub fn label(self) -> &'static str {
        match self {
            Construction::ProductA => "pure-state/product-A",
            Construction::ProductB => "pure-state/product-B",
            Construction::Search => "pure-state/random-search",
            Construction::RankTwo => "rank-two/conditional-pure",
        }
    }
}

fn pairwise_non_proportional(ops: &[Hermitian]) -> bool {
    ops.iter()
        .enumerate()
        .all(|(i, a)| ops[i + 1..].iter().all(|b| non_proportional(a, b)))
}

fn two_random_pvms<R: Rng + ?Sized>(rng: &mut R) -> Vec<Povm> {
    vec![random_pvm_qubit(rng), random_pvm_qubit(rng)]
}

fn trusted_dim_of(len: usize) -> Result<usize> {
    if len == 0 || !len.is_multiple_of(4) {
        return Err(Error::DimensionMismatch(format!("vector of length {len} is not on C^2 ⊗ C^2 ⊗ C^d")));
    }
    Ok(len / 4)
}

fn finish(
    dims: Vec<usize>,
    state: Hermitian,
    parties: Vec<Vec<Povm>>,
    how: Construction,
    tries: usize,
    tol: &Tolerances,
) -> Result<Option<RealizationRecipe>> {
    let recipe = RealizationRecipe {
        dims,
        state,
        measurements: MeasurementSet::new(parties)?,
        provenance: how.label().to_string(),
        tries,
    };
    let a = recipe.assemblage()?;
    Ok(is_on_edge(&a, tol)?.on_edge.then_some(recipe))
}

/// Projective measurements on `A` and `B` that steer the pure state
/// `ψ ∈ C^2 ⊗ C^2 ⊗ C^d` onto the edge.
///
/// Product inputs `φ_A ⊗ φ_BC` (or `φ_B ⊗ φ_AC`) use the explicit recipe:
/// the product party always answers as if it measured its own state, and the
/// other party's two PVMs are redrawn until the four conditional states are
/// pairwise non-proportional. Other inputs use random PVMs on both parties.
/// Every returned recipe has been checked with [`is_on_edge`].
pub fn theorem2_construct<R: Rng + ?Sized>(
    psi: &CVector,
    rng: &mut R,
    max_tries: usize,
    tol: &Tolerances,
) -> Result<RealizationRecipe> {
    let d = trusted_dim_of(psi.len())?;
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!("vector norm is {norm}")));
    }
    let dims = [2, 2, d];
    if schmidt_check(psi, &dims, &[0, 1], &tol.rank).rank < 2 {
        return Err(Error::NotEntangled);
    }
    let state = Hermitian::ket_projector(psi);

    let product_party = [0usize, 1]
        .into_iter()
        .find(|&p| schmidt_check(psi, &dims, &[p], &tol.rank).rank == 1);

    for attempt in 1..=max_tries {
        let (parties, how) = match product_party {
            Some(p) => {
                let (u, w, _) = leading_schmidt_pair(psi, &dims, &[p]);
                let fixed = fixed_pvm_pair(&u);
                let rest = Hermitian::ket_projector(&w);
                let other = two_random_pvms(rng);
                let conditioned: Vec<Hermitian> =
                    other.iter().flat_map(|povm| povm.iter().map(|e| condition(e, &rest))).collect();
                if !pairwise_non_proportional(&conditioned) {
                    continue;
                }
                if p == 0 {
                    (vec![fixed, other], Construction::ProductA)
                } else {
                    (vec![other, fixed], Construction::ProductB)
                }
            }
            None => (vec![two_random_pvms(rng), two_random_pvms(rng)], Construction::Search),
        };
        if let Some(r) = finish(dims.to_vec(), state.clone(), parties, how, attempt, tol)? {
            return Ok(r);
        }
    }
    Err(Error::SearchExhausted { tries: max_tries })
}

/// Edge realization for a rank-two state on `C^2 ⊗ C^2 ⊗ C^d`, given `A`'s
/// two binary POVMs. Setting 0 of `A` must leave `BC` in a rank-one state for
/// both outcomes, and that pure state must be entangled across `B|C`; setting
/// 1 is unconstrained. `B` PVMs are redrawn until, for each outcome `a`, the
/// four operators `Tr_B(Q_{b|y} ⊗ 1 ρ_{a|0})` are pairwise non-proportional.
pub fn theorem4_construct<R: Rng + ?Sized>(
    rho: &Hermitian,
    a_povms: &[Povm],
    rng: &mut R,
    max_tries: usize,
    tol: &Tolerances,
) -> Result<RealizationRecipe> {
    let d = trusted_dim_of(rho.dim())?;
    crate::assemblage::check_density(rho)?;
    let rank = rank_of(rho, &tol.rank);
    if rank != 2 {
        return Err(Error::PreconditionFailed(format!("state has rank {rank}, expected 2")));
    }
    if a_povms.len() != 2 || a_povms.iter().any(|p| p.len() != 2 || p.iter().any(|e| e.dim() != 2)) {
        return Err(Error::PreconditionFailed("A needs two binary qubit measurements".into()));
    }
    let conditioned: Vec<Hermitian> = a_povms[0].iter().map(|m| condition(m, rho)).collect();
    for (a, rho_a) in conditioned.iter().enumerate() {
        let e = crate::linalg::eigh(rho_a);
        let r = rank_of(rho_a, &tol.rank);
        if r != 1 {
            return Err(Error::PreconditionFailed(format!("conditional state for a = {a} has rank {r}, expected 1")));
        }
        let v = e.vectors.last().expect("nonempty spectrum");
        if schmidt_check(v, &[2, d], &[0], &tol.rank).rank < 2 {
            return Err(Error::PreconditionFailed(format!("conditional state for a = {a} is not entangled")));
        }
    }
    for attempt in 1..=max_tries {
        let b = two_random_pvms(rng);
        let ok = conditioned.iter().all(|rho_a| {
            let ops: Vec<Hermitian> = b.iter().flat_map(|povm| povm.iter().map(|q| condition(q, rho_a))).collect();
            pairwise_non_proportional(&ops)
        });
        if !ok {
            continue;
        }
        let parties = vec![a_povms.to_vec(), b];
        if let Some(r) = finish(vec![2, 2, d], rho.clone(), parties, Construction::RankTwo, attempt, tol)? {
            return Ok(r);
        }
    }
    Err(Error::SearchExhausted { tries: max_tries })
}

/// Random input satisfying the rank-two preconditions:
/// `ρ = λ|ψ₁⟩⟨ψ₁| + (1-λ)|ψ₂⟩⟨ψ₂|` with `ψ₁ = α|u₀χ₀⟩ + β|u₁χ₁⟩`,
/// `ψ₂ = β̄|u₀χ₀⟩ - ᾱ|u₁χ₁⟩`, random entangled `χ_a` on `C^2 ⊗ C^d`, and `A`
/// setting 0 measuring in the basis `{u₀, u₁}`; setting 1 is a random PVM.
pub fn random_rank_two_instance<R: Rng + ?Sized>(d: usize, rng: &mut R) -> (Hermitian, Vec<Povm>) {
    let u = haar_unitary(2, rng);
    let chi: Vec<CVector> = (0..2).map(|_| random_pure_state(&[2, d], rng)).collect();
    let theta: f64 = rng.random_range(0.2..1.37);
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let alpha = c(theta.cos(), 0.0);
    let beta = c(theta.sin() * phase.cos(), theta.sin() * phase.sin());
    let e0 = u.column(0).into_owned().kronecker(&chi[0]);
    let e1 = u.column(1).into_owned().kronecker(&chi[1]);
    let psi1 = &e0 * alpha + &e1 * beta;
    let psi2 = &e0 * beta.conj() - &e1 * alpha.conj();
    let lambda: f64 = rng.random_range(0.15..0.85);
    let rho = Hermitian::ket_projector(&psi1) * lambda + Hermitian::ket_projector(&psi2) * (1.0 - lambda);
    (rho, vec![pvm_from_basis(&u), random_pvm_qubit(rng)])
}
