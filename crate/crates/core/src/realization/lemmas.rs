//! Randomized checks of rank patterns of conditional states.
//!
//! Each check draws states from a mix of generic and structured families
//! (the structured ones are built to hit the premises of the statement),
//! classifies ranks with [`robust_rank`], and counts violations. Draws where
//! some eigenvalue sits within a factor of ten of the rank threshold are
//! redrawn and counted as borderline.

use super::condition;
use super::random::{
    haar_unitary, mix_columns, pvm_from_basis, random_distribution, random_mixed_state, random_pvm_qubit, RandomSource,
};
use super::scan::structured_state;
use crate::assemblage::{Assemblage, MeasurementSet};
use crate::error::Result;
use crate::linalg::{robust_rank, CMatrix, CVector, Hermitian};
use crate::tolerance::Tolerances;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub name: String,
    pub draws: usize,
    /// Draws in which the statement's hypothesis (or a near variant) held.
    pub premise_hits: usize,
    pub violations: usize,
    pub borderline_resampled: usize,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

enum Outcome {
    Borderline,
    Checked { premise: bool, violation: bool },
}

fn run<F>(name: &str, draws: usize, seed: u64, draw: F) -> Result<LemmaReport>
where
    F: Fn(usize, &mut rand_chacha::ChaCha8Rng) -> Result<Outcome> + Sync,
{
    let src = RandomSource::new(seed);
    let per_draw: Vec<(bool, bool, usize)> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = src.stream(i as u64);
            let mut resampled = 0;
            loop {
                match draw(i, &mut rng)? {
                    Outcome::Borderline => resampled += 1,
                    Outcome::Checked { premise, violation } => return Ok((premise, violation, resampled)),
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(LemmaReport {
        name: name.to_string(),
        draws,
        premise_hits: per_draw.iter().filter(|d| d.0).count(),
        violations: per_draw.iter().filter(|d| d.1).count(),
        borderline_resampled: per_draw.iter().map(|d| d.2).sum(),
    })
}

/// `Σ_k p_k v_k v_k†` for orthonormal `v_k`, with random positive weights.
fn mixture_of<R: Rng + ?Sized>(vectors: &[CVector], rng: &mut R) -> Hermitian {
    mix_columns(&CMatrix::from_columns(vectors), &random_distribution(vectors.len(), rng))
}

/// `k` random orthonormal vectors in the span of the orthonormal `frame`.
fn random_in_span<R: Rng + ?Sized>(frame: &[CVector], k: usize, rng: &mut R) -> Vec<CVector> {
    let f = CMatrix::from_columns(frame);
    let u = haar_unitary(frame.len(), rng);
    (0..k).map(|j| &f * u.column(j)).collect()
}

fn basis_vector(u: &CMatrix, k: usize) -> CVector {
    u.column(k).into_owned()
}

/// Normalized Hilbert–Schmidt overlap, `None` when it is too close to the
/// proportionality threshold to decide.
fn proportional(a: &Hermitian, b: &Hermitian) -> Option<bool> {
    let (na, nb) = (a.frobenius_norm(), b.frobenius_norm());
    if na == 0.0 || nb == 0.0 {
        return Some(false);
    }
    let gap = 1.0 - a.trace_product(b).abs() / (na * nb);
    if gap > 1e-7 {
        Some(false)
    } else if gap < 1e-9 {
        Some(true)
    } else {
        None
    }
}

/// Rank-three `ρ_AB` on `C^2 ⊗ C^d` measured by a projective `{P_0, P_1}` on
/// `A`: the two conditional states are never both of rank one; for `d ≥ 3` a
/// vanishing one forces the other to rank three; for `d = 2` neither vanishes.
pub fn check_rank_three_conditionals(draws: usize, seed: u64, tol: &Tolerances) -> Result<LemmaReport> {
    run("rank-three conditional states", draws, seed, |i, rng| {
        let d = 2 + i % 3;
        let u = haar_unitary(2, rng);
        let local = haar_unitary(d, rng);
        let rho = match i % 4 {
            0 => random_mixed_state(2 * d, 3, rng)?,
            // one outcome leaves a pure state: span{u0 ⊗ h} ⊕ (u1 ⊗ C^d)
            1 | 2 => {
                let mut frame = vec![basis_vector(&u, 0).kronecker(&basis_vector(&local, 0))];
                frame.extend((0..d).map(|j| basis_vector(&u, 1).kronecker(&basis_vector(&local, j))));
                mixture_of(&random_in_span(&frame, 3, rng), rng)
            }
            // one outcome never occurs: |u1⟩⟨u1| ⊗ τ (needs d ≥ 3 for rank three)
            _ => {
                if d >= 3 {
                    let tau = random_mixed_state(d, 3, rng)?;
                    Hermitian::ket_projector(&basis_vector(&u, 1)).kron(&tau)
                } else {
                    random_mixed_state(2 * d, 3, rng)?
                }
            }
        };
        let pvm = if rng.random_bool(0.9) { pvm_from_basis(&u) } else { random_pvm_qubit(rng) };
        let ranks: Vec<Option<usize>> = std::iter::once(robust_rank(&rho, &tol.rank))
            .chain(pvm.iter().map(|p| robust_rank(&condition(p, &rho), &tol.rank)))
            .collect();
        let [Some(r), Some(r0), Some(r1)] = ranks[..] else {
            return Ok(Outcome::Borderline);
        };
        debug_assert_eq!(r, 3);
        let premise = r0 <= 1 || r1 <= 1;
        let both_pure = r0 == 1 && r1 == 1;
        let zero_rule = if d >= 3 {
            (r0 == 0 && r1 != 3) || (r1 == 0 && r0 != 3)
        } else {
            r0 == 0 || r1 == 0
        };
        Ok(Outcome::Checked { premise, violation: r != 3 || both_pure || zero_rule })
    })
}

/// Rank-two `ρ_AB` on `C^2 ⊗ C^d` with two different projective measurements
/// on `A`: a vanishing conditional state forces the other three to rank two
/// and mutually proportional; two rank-one outcomes for one setting force the
/// other setting to two rank-two outcomes, or all four to be proportional
/// rank-one operators.
pub fn check_rank_two_conditionals(draws: usize, seed: u64, tol: &Tolerances) -> Result<LemmaReport> {
    run("rank-two conditional states", draws, seed, |i, rng| {
        let d = 2 + i % 3;
        let u = haar_unitary(2, rng);
        let local = haar_unitary(d, rng);
        let e = |a: usize, j: usize| basis_vector(&u, a).kronecker(&basis_vector(&local, j));
        let rho = match i % 4 {
            0 => random_mixed_state(2 * d, 2, rng)?,
            // a = 0 never occurs for the structured setting
            1 => Hermitian::ket_projector(&basis_vector(&u, 1)).kron(&random_mixed_state(d, 2, rng)?),
            // both outcomes leave pure states h and g
            2 => mixture_of(&random_in_span(&[e(0, 0), e(1, 1)], 2, rng), rng),
            // same, with h = g
            _ => mixture_of(&random_in_span(&[e(0, 0), e(1, 0)], 2, rng), rng),
        };
        let mut settings = [pvm_from_basis(&u), random_pvm_qubit(rng)];
        if rng.random_bool(0.5) {
            settings.swap(0, 1);
        }
        let ops: Vec<Vec<Hermitian>> =
            settings.iter().map(|pvm| pvm.iter().map(|p| condition(p, &rho)).collect()).collect();
        let Some(r) = robust_rank(&rho, &tol.rank) else {
            return Ok(Outcome::Borderline);
        };
        let mut ranks = [[0usize; 2]; 2];
        for x in 0..2 {
            for a in 0..2 {
                match robust_rank(&ops[x][a], &tol.rank) {
                    Some(k) => ranks[x][a] = k,
                    None => return Ok(Outcome::Borderline),
                }
            }
        }
        let flat: Vec<(usize, &Hermitian)> =
            (0..2).flat_map(|x| (0..2).map(move |a| (x, a))).map(|(x, a)| (ranks[x][a], &ops[x][a])).collect();
        let all_proportional = |items: &[&Hermitian]| -> Option<bool> {
            let mut all = true;
            for (j, a) in items.iter().enumerate() {
                for b in &items[j + 1..] {
                    all &= proportional(a, b)?;
                }
            }
            Some(all)
        };

        let mut premise = false;
        let mut violation = r != 2;
        if flat.iter().any(|(k, _)| *k == 0) {
            premise = true;
            let others: Vec<&Hermitian> = flat.iter().filter(|(k, _)| *k != 0).map(|(_, h)| *h).collect();
            let Some(prop) = all_proportional(&others) else {
                return Ok(Outcome::Borderline);
            };
            let all_rank_two = flat.iter().filter(|(k, _)| *k == 0).count() == 1
                && flat.iter().all(|(k, _)| *k == 0 || *k == 2);
            violation |= !(all_rank_two && prop);
        }
        for x1 in 0..2 {
            if ranks[x1] == [1, 1] {
                premise = true;
                let x2 = 1 - x1;
                let all: Vec<&Hermitian> = flat.iter().map(|(_, h)| *h).collect();
                let ok = if ranks[x2] == [2, 2] {
                    true
                } else if ranks[x2] == [1, 1] {
                    let Some(prop) = all_proportional(&all) else {
                        return Ok(Outcome::Borderline);
                    };
                    prop
                } else {
                    false
                };
                violation |= !ok;
            }
        }
        Ok(Outcome::Checked { premise, violation })
    })
}

/// Block rank pattern of a binary two-party assemblage, indexed by
/// `[a][x][b][y]`.
pub type RankPattern = [[[[u8; 2]; 2]; 2]; 2];

fn pattern_from(f: impl Fn(usize, usize, usize, usize) -> u8) -> RankPattern {
    let mut p = [[[[0u8; 2]; 2]; 2]; 2];
    for a in 0..2 {
        for x in 0..2 {
            for b in 0..2 {
                for y in 0..2 {
                    p[a][x][b][y] = f(a, x, b, y);
                }
            }
        }
    }
    p
}

/// The two forbidden patterns (rank one where marked, rank two elsewhere)
/// closed under relabeling settings, outcomes per setting, and parties.
pub fn forbidden_patterns() -> BTreeSet<RankPattern> {
    // rank one on the x = y quadrants
    let diagonal = pattern_from(|_, x, _, y| if x == y { 1 } else { 2 });
    // rank one where b = x
    let staircase = pattern_from(|_, x, b, _| if b == x { 1 } else { 2 });

    type Move = fn(&RankPattern) -> RankPattern;
    let moves: [Move; 7] = [
        |p| pattern_from(|a, x, b, y| p[a][1 - x][b][y]),
        |p| pattern_from(|a, x, b, y| p[a][x][b][1 - y]),
        |p| pattern_from(|a, x, b, y| p[if x == 0 { 1 - a } else { a }][x][b][y]),
        |p| pattern_from(|a, x, b, y| p[if x == 1 { 1 - a } else { a }][x][b][y]),
        |p| pattern_from(|a, x, b, y| p[a][x][if y == 0 { 1 - b } else { b }][y]),
        |p| pattern_from(|a, x, b, y| p[a][x][if y == 1 { 1 - b } else { b }][y]),
        |p| pattern_from(|a, x, b, y| p[b][y][a][x]),
    ];
    let mut seen: BTreeSet<RankPattern> = BTreeSet::new();
    let mut queue = vec![diagonal, staircase];
    while let Some(p) = queue.pop() {
        if seen.insert(p) {
            queue.extend(moves.iter().map(|m| m(&p)));
        }
    }
    seen
}

/// Robust rank pattern, or `None` if any block is borderline.
pub fn rank_pattern(a: &Assemblage, tol: &Tolerances) -> Option<RankPattern> {
    let s = a.scenario();
    if s.settings() != [2, 2] || s.outcomes() != [2, 2] {
        return None;
    }
    let mut p = [[[[0u8; 2]; 2]; 2]; 2];
    for pos in s.positions() {
        let r = robust_rank(a.block(&pos), &tol.rank)? as u8;
        p[pos.outcomes[0]][pos.settings[0]][pos.outcomes[1]][pos.settings[1]] = r;
    }
    Some(p)
}

/// Positions where both patterns have a rank-one block.
fn shared_rank_one(p: &RankPattern, q: &RankPattern) -> usize {
    let mut n = 0;
    for a in 0..2 {
        for x in 0..2 {
            for b in 0..2 {
                for y in 0..2 {
                    n += usize::from(p[a][x][b][y] == 1 && q[a][x][b][y] == 1);
                }
            }
        }
    }
    n
}

/// Rank-three three-qubit states under projective measurements never
/// produce one of the forbidden block patterns. Premise hits are draws
/// sharing at least half of some forbidden pattern's rank-one blocks.
pub fn check_forbidden_forms(draws: usize, seed: u64, tol: &Tolerances) -> Result<LemmaReport> {
    let forbidden = forbidden_patterns();
    run("forbidden block patterns at rank three", draws, seed, |i, rng| {
        let (rho, parties) = match i % 3 {
            0 => {
                let rho = random_mixed_state(8, 3, rng)?;
                let parties = (0..2).map(|_| vec![random_pvm_qubit(rng), random_pvm_qubit(rng)]).collect();
                (rho, parties)
            }
            k => {
                let (rho, ua, ub) = structured_state(3, rng)?;
                let mut pa = vec![pvm_from_basis(&ua), random_pvm_qubit(rng)];
                let pb = vec![pvm_from_basis(&ub), random_pvm_qubit(rng)];
                if k == 2 {
                    pa.swap(0, 1);
                }
                (rho, vec![pa, pb])
            }
        };
        let a = Assemblage::from_quantum(&rho, &MeasurementSet::new(parties)?)?;
        if robust_rank(&rho, &tol.rank) != Some(3) {
            return Ok(Outcome::Borderline);
        }
        let Some(p) = rank_pattern(&a, tol) else {
            return Ok(Outcome::Borderline);
        };
        let best = forbidden.iter().map(|q| shared_rank_one(&p, q)).max().unwrap_or(0);
        Ok(Outcome::Checked { premise: best >= 4, violation: forbidden.contains(&p) })
    })
}
