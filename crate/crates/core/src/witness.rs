//! Witnesses built from edge assemblages.
//!
//! For an edge assemblage `Σ` the block operator `Z_{a|x} = 1 - R_{a|x}`
//! satisfies `Tr(ZΣ) = 0`, while on LHS assemblages `Tr(ZΣ_LHS)` is bounded
//! below by `ε = min_L λ_min(Σ_{I_L} Z_{a|x})`. Shifting by
//! `(ε / Π𝒳_i)·1` gives a witness that is nonnegative on LHS assemblages and
//! evaluates to `-ε` on `Σ`.

use crate::assemblage::Assemblage;
use crate::edge::{block_projectors, is_on_edge};
use crate::error::{Error, Result};
use crate::linalg::{eigh, CVector, Hermitian};
use crate::scenario::{DeterministicBox, Scenario, DEFAULT_BOX_CAP};
use crate::tolerance::Tolerances;
use rayon::prelude::*;

/// One Hermitian operator per position, in canonical order. Not necessarily PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessBlock {
    scenario: Scenario,
    blocks: Vec<Hermitian>,
}

impl WitnessBlock {
    pub fn new(scenario: Scenario, blocks: Vec<Hermitian>) -> Result<Self> {
        if blocks.len() != scenario.num_positions() {
            return Err(Error::DimensionMismatch(format!(
                "{} blocks for {} positions",
                blocks.len(),
                scenario.num_positions()
            )));
        }
        if blocks.iter().any(|b| b.dim() != scenario.trusted_dim()) {
            return Err(Error::DimensionMismatch("block dimension differs from d".into()));
        }
        Ok(Self { scenario, blocks })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn blocks(&self) -> &[Hermitian] {
        &self.blocks
    }

    pub fn block_at(&self, index: usize) -> &Hermitian {
        &self.blocks[index]
    }

    pub fn max_deviation(&self, other: &WitnessBlock) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
    }

    /// `Σ_{a|x ∈ I_L} W_{a|x}`.
    pub fn box_sum(&self, l: &DeterministicBox) -> Hermitian {
        let mut acc = Hermitian::zeros(self.scenario.trusted_dim());
        for i in self.scenario.support_indices(l) {
            acc += &self.blocks[i];
        }
        acc
    }
}

/// `Z_{a|x} = 1 - R_{a|x}` without checking the edge property.
pub fn canonical_z_unchecked(a: &Assemblage, tol: &Tolerances) -> Result<WitnessBlock> {
    let d = a.scenario().trusted_dim();
    let id = Hermitian::identity(d);
    let blocks = block_projectors(a, tol)?.iter().map(|r| &id - r).collect();
    WitnessBlock::new(a.scenario().clone(), blocks)
}

pub fn canonical_z(a: &Assemblage, tol: &Tolerances) -> Result<WitnessBlock> {
    if !is_on_edge(a, tol)?.on_edge {
        return Err(Error::NotOnEdge);
    }
    canonical_z_unchecked(a, tol)
}

#[derive(Debug, Clone)]
pub struct LhsFloor {
    pub epsilon: f64,
    pub argmin_index: usize,
    pub argmin_box: DeterministicBox,
    /// Eigenvector of `Σ_{I_L} Z` for the minimum; with the argmin box it
    /// forms the LHS extreme point attaining the floor.
    pub extreme_vector: CVector,
}

/// `min_L λ_min(Σ_{a|x ∈ I_L} Z_{a|x})`, ties broken by canonical box order.
pub fn lhs_floor(z: &WitnessBlock) -> Result<LhsFloor> {
    let s = z.scenario();
    let count = s.num_deterministic_boxes();
    if count > DEFAULT_BOX_CAP as u128 {
        return Err(Error::CombinatorialOverflow { count, cap: DEFAULT_BOX_CAP });
    }
    let mins: Vec<(f64, CVector)> = (0..count as usize)
        .into_par_iter()
        .map(|k| {
            let e = eigh(&z.box_sum(&s.box_at(k)));
            (e.values[0], e.vectors[0].clone())
        })
        .collect();
    let (argmin_index, (epsilon, v)) = mins
        .into_iter()
        .enumerate()
        .reduce(|best, cur| if cur.1 .0 < best.1 .0 { cur } else { best })
        .expect("at least one box");
    Ok(LhsFloor { epsilon, argmin_index, argmin_box: s.box_at(argmin_index), extreme_vector: v })
}

/// `W_{a|x} = Z_{a|x} - (ε / Π𝒳_i)·1`.
pub fn build_witness(z: &WitnessBlock, epsilon: f64) -> Result<WitnessBlock> {
    if !(epsilon > 0.0) {
        return Err(Error::NonpositiveEpsilon(epsilon));
    }
    let s = z.scenario();
    let shift = Hermitian::identity(s.trusted_dim()) * (epsilon / s.num_setting_tuples() as f64);
    WitnessBlock::new(s.clone(), z.blocks.iter().map(|b| b - &shift).collect())
}

/// `Σ_{a|x} Tr(W_{a|x} σ_{a|x})`.
pub fn evaluate(w: &WitnessBlock, a: &Assemblage) -> Result<f64> {
    if w.scenario() != a.scenario() {
        return Err(Error::DimensionMismatch("witness and assemblage scenarios differ".into()));
    }
    Ok(w.blocks.iter().zip(a.blocks()).map(|(x, y)| x.trace_product(y)).sum())
}

#[derive(Debug, Clone)]
pub struct WitnessCertificate {
    pub z: WitnessBlock,
    pub epsilon: f64,
    /// Floor of `Z` over LHS assemblages; `epsilon ≤ floor`.
    pub floor: f64,
    pub argmin_index: usize,
    pub argmin_box: DeterministicBox,
    pub extreme_vector: CVector,
    pub w: WitnessBlock,
    pub meta: Option<serde_json::Value>,
}

impl WitnessCertificate {
    pub fn scenario(&self) -> &Scenario {
        self.z.scenario()
    }

    /// The LHS assemblage `L_argmin ⊗ |v⟩⟨v|` on which the witness attains the floor.
    pub fn extreme_point(&self) -> Result<Assemblage> {
        Assemblage::deterministic(self.scenario(), &self.argmin_box, &Hermitian::ket_projector(&self.extreme_vector))
    }
}

/// Canonical certificate for an edge assemblage. `epsilon` defaults to the
/// floor; a smaller positive value is accepted, a larger one is rejected.
pub fn certify(a: &Assemblage, epsilon: Option<f64>, tol: &Tolerances) -> Result<WitnessCertificate> {
    let z = canonical_z(a, tol)?;
    let floor = lhs_floor(&z)?;
    let eps = epsilon.unwrap_or(floor.epsilon);
    if eps > floor.epsilon * (1.0 + 1e-12) {
        return Err(Error::InvalidParams(format!(
            "epsilon {eps} exceeds the LHS floor {}",
            floor.epsilon
        )));
    }
    let w = build_witness(&z, eps)?;
    Ok(WitnessCertificate {
        z,
        epsilon: eps,
        floor: floor.epsilon,
        argmin_index: floor.argmin_index,
        argmin_box: floor.argmin_box,
        extreme_vector: floor.extreme_vector,
        w,
        meta: a.meta.clone(),
    })
}
