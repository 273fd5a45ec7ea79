//! Edge membership and LHS-part subtraction.
//!
//! An assemblage admits subtraction of `ε·L ⊗ |ψ⟩⟨ψ|` exactly when `ψ` lies in
//! the image of every block `σ_{a|x}` with `a|x ∈ I_L`. Per box we compute the
//! spectrum of `K_L = Σ_{I_L} (1 - R_{a|x})`; its kernel is that common image.
//! The assemblage is on the edge iff every `K_L` is nonsingular.

use crate::assemblage::Assemblage;
use crate::error::{Error, Result};
use crate::linalg::{
    eigh, image_projector, intersection_spectrum_of_projectors, pseudo_inverse, rank_of, CMatrix,
    CVector, Hermitian, IntersectionSpectrum, C64,
};
use crate::scenario::{DeterministicBox, Scenario, DEFAULT_BOX_CAP};
use crate::tolerance::{Tolerances, ZERO_BLOCK_TRACE};
use rayon::prelude::*;
use serde::Serialize;

/// Multiple of the intersection tolerance that every box margin must exceed
/// for an on-edge verdict.
pub const EDGE_MARGIN_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Serialize)]
pub struct BoxEdgeInfo {
    pub box_index: usize,
    pub intersection_dim: usize,
    /// Smallest eigenvalue of `Σ_{I_L} (1 - R_{a|x})`.
    pub margin: f64,
    pub marginal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeReport {
    pub on_edge: bool,
    /// Some margin fell in `(intersection_tol, 10·intersection_tol]`.
    pub marginal: bool,
    pub per_box: Vec<BoxEdgeInfo>,
    #[serde(serialize_with = "crate::io::serialize_opt_cvector")]
    pub witness_vector: Option<CVector>,
    pub witness_box: Option<usize>,
}

impl EdgeReport {
    pub fn min_margin(&self) -> f64 {
        self.per_box.iter().map(|b| b.margin).fold(f64::INFINITY, f64::min)
    }
}

/// Image projectors of all blocks, in canonical position order.
pub fn block_projectors(a: &Assemblage, tol: &Tolerances) -> Result<Vec<Hermitian>> {
    a.blocks()
        .par_iter()
        .map(|b| {
            if b.trace() < ZERO_BLOCK_TRACE {
                // a negative-trace block still has to fail the PSD check
                eigh_psd_guard(b, tol)?;
                Ok(Hermitian::zeros(b.dim()))
            } else {
                Ok(image_projector(b, &tol.rank)?)
            }
        })
        .collect()
}

fn eigh_psd_guard(b: &Hermitian, tol: &Tolerances) -> Result<()> {
    let min = eigh(b).min();
    if min < -tol.psd {
        return Err(crate::linalg::LinalgError::NotPsd { min_eigenvalue: min }.into());
    }
    Ok(())
}

fn spectrum_for(
    s: &Scenario,
    projectors: &[Hermitian],
    l: &DeterministicBox,
    tol: &Tolerances,
) -> Result<IntersectionSpectrum> {
    let selected: Vec<Hermitian> = s.support_indices(l).into_iter().map(|i| projectors[i].clone()).collect();
    Ok(intersection_spectrum_of_projectors(&selected, tol.intersection)?)
}

/// Spectrum of `Σ_{I_L} (1 - R_{a|x})` for a single box.
pub fn box_spectrum(a: &Assemblage, l: &DeterministicBox, tol: &Tolerances) -> Result<IntersectionSpectrum> {
    check_box(a.scenario(), l)?;
    let s = a.scenario();
    let projectors: Vec<Hermitian> = s
        .support_indices(l)
        .into_iter()
        .map(|i| {
            let b = a.block_at(i);
            if b.trace() < ZERO_BLOCK_TRACE {
                eigh_psd_guard(b, tol)?;
                Ok(Hermitian::zeros(b.dim()))
            } else {
                Ok(image_projector(b, &tol.rank)?)
            }
        })
        .collect::<Result<_>>()?;
    Ok(intersection_spectrum_of_projectors(&projectors, tol.intersection)?)
}

fn check_box(s: &Scenario, l: &DeterministicBox) -> Result<()> {
    if !s.is_box_consistent(l) {
        return Err(Error::InvalidParams("deterministic box does not fit the scenario".into()));
    }
    Ok(())
}

/// A unit vector in `⋂_{a|x ∈ I_L} Im σ_{a|x}`, or `None` if that
/// intersection is trivial. When it has dimension above one the kernel
/// eigenvector of smallest eigenvalue is returned.
pub fn subtractable_along(a: &Assemblage, l: &DeterministicBox, tol: &Tolerances) -> Result<Option<CVector>> {
    let spec = box_spectrum(a, l, tol)?;
    Ok(spec.kernel().basis.into_iter().next())
}

fn box_info(index: usize, spec: &IntersectionSpectrum, tol: &Tolerances) -> BoxEdgeInfo {
    let margin = spec.margin();
    BoxEdgeInfo {
        box_index: index,
        intersection_dim: spec.kernel().dim(),
        margin,
        marginal: margin > tol.intersection && margin <= EDGE_MARGIN_FACTOR * tol.intersection,
    }
}

/// Edge decision over every local deterministic box.
///
/// A box whose margin lands in the marginal band makes the verdict "not on
/// the edge" with `marginal = true`; the reported vector is then only an
/// approximate common-image vector.
pub fn is_on_edge(a: &Assemblage, tol: &Tolerances) -> Result<EdgeReport> {
    is_on_edge_capped(a, tol, DEFAULT_BOX_CAP)
}

pub fn is_on_edge_capped(a: &Assemblage, tol: &Tolerances, cap: usize) -> Result<EdgeReport> {
    let s = a.scenario();
    let count = s.num_deterministic_boxes();
    if count > cap as u128 {
        return Err(Error::CombinatorialOverflow { count, cap });
    }
    let projectors = block_projectors(a, tol)?;
    let results: Vec<(BoxEdgeInfo, Option<CVector>)> = (0..count as usize)
        .into_par_iter()
        .map(|k| {
            let spec = spectrum_for(s, &projectors, &s.box_at(k), tol)?;
            let info = box_info(k, &spec, tol);
            let v = (info.margin <= EDGE_MARGIN_FACTOR * tol.intersection)
                .then(|| spec.spectrum.vectors[0].clone());
            Ok((info, v))
        })
        .collect::<Result<_>>()?;

    let exact = results.iter().find(|(i, _)| i.intersection_dim > 0);
    let near = results.iter().find(|(i, _)| i.marginal);
    let chosen = exact.or(near);
    let marginal = results.iter().any(|(i, _)| i.marginal);
    Ok(EdgeReport {
        on_edge: chosen.is_none(),
        marginal,
        witness_vector: chosen.and_then(|(_, v)| v.clone()),
        witness_box: chosen.map(|(i, _)| i.box_index),
        per_box: results.into_iter().map(|(i, _)| i).collect(),
    })
}

/// `|det(Π_{a|x ∈ I_L} R_{a|x} - 1)|`, product taken in canonical position order.
/// Vanishes iff the box admits subtraction.
pub fn det_criterion(a: &Assemblage, l: &DeterministicBox, tol: &Tolerances) -> Result<f64> {
    check_box(a.scenario(), l)?;
    let projectors = block_projectors(a, tol)?;
    Ok(det_from_projectors(a.scenario(), &projectors, l))
}

fn det_from_projectors(s: &Scenario, projectors: &[Hermitian], l: &DeterministicBox) -> f64 {
    let d = s.trusted_dim();
    let mut prod = CMatrix::identity(d, d);
    for i in s.support_indices(l) {
        prod *= projectors[i].matrix();
    }
    (prod - CMatrix::identity(d, d)).determinant().norm()
}

/// Determinant criterion for every box, in canonical order.
pub fn det_criteria(a: &Assemblage, tol: &Tolerances) -> Result<Vec<f64>> {
    let s = a.scenario();
    let boxes = crate::scenario::enumerate_deterministic_boxes(s)?;
    let projectors = block_projectors(a, tol)?;
    Ok(boxes.par_iter().map(|l| det_from_projectors(s, &projectors, l)).collect())
}

#[derive(Debug, Clone)]
pub struct SubtractionResult {
    pub epsilon: f64,
    pub box_index: usize,
    pub lhs_box: DeterministicBox,
    pub vector: CVector,
    /// Position index in `I_L` where the bound on `ε` is attained.
    pub tight_position: usize,
    /// `Σ - ε·L ⊗ |ψ⟩⟨ψ|`, not renormalized.
    pub residual: Assemblage,
    /// `residual / (1 - ε)`; absent when `ε` is 1 up to 1e-9.
    pub renormalized_residual: Option<Assemblage>,
}

impl SubtractionResult {
    /// The subtracted part `ε·L ⊗ |ψ⟩⟨ψ|`.
    pub fn lhs_part(&self) -> Result<Assemblage> {
        let s = self.residual.scenario();
        Ok(Assemblage::deterministic(s, &self.lhs_box, &Hermitian::ket_projector(&self.vector))?
            .scaled(self.epsilon))
    }

    /// `residual + ε·L ⊗ |ψ⟩⟨ψ|`.
    pub fn reconstruct(&self) -> Result<Assemblage> {
        self.residual.add(&self.lhs_part()?)
    }
}

/// Largest `ε` with `σ_{a|x} - ε·p_L(a|x)|ψ⟩⟨ψ| ≥ 0` for all positions:
/// `ε = min_{a|x ∈ I_L} 1/⟨ψ|σ⁺_{a|x}|ψ⟩`.
pub fn max_subtraction(
    a: &Assemblage,
    l: &DeterministicBox,
    psi: &CVector,
    tol: &Tolerances,
) -> Result<SubtractionResult> {
    let s = a.scenario();
    check_box(s, l)?;
    if psi.len() != s.trusted_dim() {
        return Err(Error::WrongDimension { expected: s.trusted_dim(), found: psi.len() });
    }
    let norm = psi.norm();
    if !(norm > 0.0) {
        return Err(Error::VectorNotInImage { residual: f64::NAN });
    }
    let psi = psi / C64::new(norm, 0.0);

    let mut epsilon = f64::INFINITY;
    let mut tight = 0;
    for i in s.support_indices(l) {
        let b = a.block_at(i);
        let r = if b.trace() < ZERO_BLOCK_TRACE { Hermitian::zeros(b.dim()) } else { image_projector(b, &tol.rank)? };
        let out = (&psi - r.matrix() * &psi).norm();
        if out > 1e-8 {
            return Err(Error::VectorNotInImage { residual: out });
        }
        let q = pseudo_inverse(b, &tol.rank)?.expectation(&psi);
        let e = 1.0 / q;
        if e < epsilon {
            epsilon = e;
            tight = i;
        }
    }

    let part = Assemblage::deterministic(s, l, &Hermitian::ket_projector(&psi))?.scaled(epsilon);
    let residual = a.sub(&part)?;
    let renormalized_residual = (1.0 - epsilon > 1e-9).then(|| residual.scaled(1.0 / (1.0 - epsilon)));
    Ok(SubtractionResult {
        epsilon,
        box_index: s.box_index(l),
        lhs_box: l.clone(),
        vector: psi,
        tight_position: tight,
        residual,
        renormalized_residual,
    })
}

/// Subtract along `box_index` if given, else along the first subtractable box.
pub fn subtract(a: &Assemblage, box_index: Option<usize>, tol: &Tolerances) -> Result<SubtractionResult> {
    let s = a.scenario();
    let (l, psi) = match box_index {
        Some(k) => {
            if (k as u128) >= s.num_deterministic_boxes() {
                return Err(Error::InvalidParams(format!("box index {k} out of range")));
            }
            let l = s.box_at(k);
            let psi = subtractable_along(a, &l, tol)?.ok_or(Error::NothingToSubtract)?;
            (l, psi)
        }
        None => {
            let report = is_on_edge(a, tol)?;
            match (report.witness_box, report.witness_vector) {
                (Some(k), Some(v)) if !report.per_box[k].marginal || report.per_box[k].intersection_dim > 0 => {
                    (s.box_at(k), v)
                }
                _ => return Err(Error::NothingToSubtract),
            }
        }
    };
    max_subtraction(a, &l, &psi, tol)
}

/// First box (canonical order) with `Σ_{I_L} rank σ_{a|x} > (|I_L| - 1)·d`.
/// Any returned box certifies that the assemblage is not on the edge.
pub fn rank_screen(a: &Assemblage, tol: &Tolerances) -> Result<Option<(usize, DeterministicBox)>> {
    let s = a.scenario();
    let count = s.num_deterministic_boxes();
    if count > DEFAULT_BOX_CAP as u128 {
        return Err(Error::CombinatorialOverflow { count, cap: DEFAULT_BOX_CAP });
    }
    let ranks = block_ranks(a, tol);
    let bound = (s.num_setting_tuples() - 1) * s.trusted_dim();
    Ok((0..count as usize)
        .into_par_iter()
        .find_first(|&k| s.support_indices(&s.box_at(k)).iter().map(|&i| ranks[i]).sum::<usize>() > bound)
        .map(|k| (k, s.box_at(k))))
}

fn block_ranks(a: &Assemblage, tol: &Tolerances) -> Vec<usize> {
    a.blocks()
        .iter()
        .map(|b| if b.trace() < ZERO_BLOCK_TRACE { 0 } else { rank_of(b, &tol.rank) })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorollaryBound {
    pub lhs_sum: usize,
    pub bound: usize,
    pub satisfied: bool,
}

/// `Σ_{a|x} rank σ_{a|x}` against `(Π𝒳_i - 1)(Π𝒜_i)·d`. A violated bound
/// certifies that the assemblage is not on the edge.
pub fn corollary_bound(a: &Assemblage, tol: &Tolerances) -> CorollaryBound {
    let s = a.scenario();
    let lhs_sum = block_ranks(a, tol).iter().sum();
    let bound = (s.num_setting_tuples() - 1) * s.num_outcome_tuples() * s.trusted_dim();
    CorollaryBound { lhs_sum, bound, satisfied: lhs_sum <= bound }
}

/// Normalized Hilbert–Schmidt overlap `|⟨A,B⟩| / (‖A‖‖B‖)` below `1 - 1e-8`.
pub fn non_proportional(a: &Hermitian, b: &Hermitian) -> bool {
    let na = a.frobenius_norm();
    let nb = b.frobenius_norm();
    if na == 0.0 || nb == 0.0 {
        return true;
    }
    a.trace_product(b).abs() / (na * nb) < 1.0 - 1e-8
}

/// Qubit criterion: true iff some box's blocks contain no zero block and no
/// two non-proportional rank-one blocks, i.e. iff an LHS part can be
/// subtracted. Requires `d = 2`.
pub fn qubit_rectangle_criterion(a: &Assemblage, tol: &Tolerances) -> Result<bool> {
    let s = a.scenario();
    if s.trusted_dim() != 2 {
        return Err(Error::WrongDimension { expected: 2, found: s.trusted_dim() });
    }
    let ranks = block_ranks(a, tol);
    let count = s.num_deterministic_boxes();
    if count > DEFAULT_BOX_CAP as u128 {
        return Err(Error::CombinatorialOverflow { count, cap: DEFAULT_BOX_CAP });
    }
    Ok((0..count as usize).into_par_iter().any(|k| {
        let support = s.support_indices(&s.box_at(k));
        if support.iter().any(|&i| ranks[i] == 0) {
            return false;
        }
        let rank_one: Vec<&Hermitian> =
            support.iter().filter(|&&i| ranks[i] == 1).map(|&i| a.block_at(i)).collect();
        !rank_one
            .iter()
            .enumerate()
            .any(|(j, x)| rank_one[j + 1..].iter().any(|y| non_proportional(x, y)))
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeDiagnostics {
    pub det_criteria: Vec<f64>,
    pub min_det: f64,
    pub rank_screen_box: Option<usize>,
    pub corollary: CorollaryBound,
    pub qubit_rectangle: Option<bool>,
}

pub fn diagnostics(a: &Assemblage, tol: &Tolerances) -> Result<EdgeDiagnostics> {
    let det = det_criteria(a, tol)?;
    let min_det = det.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(EdgeDiagnostics {
        min_det,
        det_criteria: det,
        rank_screen_box: rank_screen(a, tol)?.map(|(k, _)| k),
        corollary: corollary_bound(a, tol),
        qubit_rectangle: (a.scenario().trusted_dim() == 2).then(|| qubit_rectangle_criterion(a, tol)).transpose()?,
    })
}
