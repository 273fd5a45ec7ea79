//! The assemblage data model.
//!
//! An [`Assemblage`] stores one trusted-party block per position `a|x`, in
//! the scenario's canonical position order. Construction only checks shapes;
//! the physical constraints (positivity, normalization, no-signaling) are
//! reported by [`Assemblage::validate`], which never fails.

use crate::error::{Error, Result};
use crate::linalg::{contract_first, eigh, CMatrix, Hermitian};
use crate::scenario::{DeterministicBox, Position, Scenario};
use crate::tolerance::Tolerances;
use serde::Serialize;

/// One POVM: element `k` is the effect for outcome `k`.
pub type Povm = Vec<Hermitian>;

/// Per party, per setting, a POVM on that party's space.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    parties: Vec<Vec<Povm>>,
}

impl MeasurementSet {
    pub fn new(parties: Vec<Vec<Povm>>) -> Result<Self> {
        let m = Self { parties };
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<()> {
        if self.parties.is_empty() {
            return Err(Error::InvalidMeasurement("no parties".into()));
        }
        for (i, settings) in self.parties.iter().enumerate() {
            let first = settings
                .first()
                .ok_or_else(|| Error::InvalidMeasurement(format!("party {i} has no settings")))?;
            let outcomes = first.len();
            let dim = first
                .first()
                .ok_or_else(|| Error::InvalidMeasurement(format!("party {i} has an empty POVM")))?
                .dim();
            for (x, povm) in settings.iter().enumerate() {
                if povm.len() != outcomes {
                    return Err(Error::InvalidMeasurement(format!(
                        "party {i} setting {x}: {} outcomes, expected {outcomes}",
                        povm.len()
                    )));
                }
                check_povm(povm, dim).map_err(|e| {
                    Error::InvalidMeasurement(format!("party {i} setting {x}: {e}"))
                })?;
            }
        }
        Ok(())
    }

    pub fn parties(&self) -> usize {
        self.parties.len()
    }

    pub fn party_dims(&self) -> Vec<usize> {
        self.parties.iter().map(|s| s[0][0].dim()).collect()
    }

    pub fn settings(&self) -> Vec<usize> {
        self.parties.iter().map(|s| s.len()).collect()
    }

    pub fn outcomes(&self) -> Vec<usize> {
        self.parties.iter().map(|s| s[0].len()).collect()
    }

    pub fn element(&self, party: usize, setting: usize, outcome: usize) -> &Hermitian {
        &self.parties[party][setting][outcome]
    }

    pub fn povm(&self, party: usize, setting: usize) -> &Povm {
        &self.parties[party][setting]
    }

    pub fn party(&self, party: usize) -> &[Povm] {
        &self.parties[party]
    }

    pub fn into_parties(self) -> Vec<Vec<Povm>> {
        self.parties
    }

    pub fn scenario(&self, trusted_dim: usize) -> Result<Scenario> {
        Scenario::new(self.settings(), self.outcomes(), trusted_dim)
    }
}

/// Completeness within 1e-9 and positivity of each effect.
pub fn check_povm(povm: &[Hermitian], dim: usize) -> std::result::Result<(), String> {
    let mut sum = Hermitian::zeros(dim);
    for (k, e) in povm.iter().enumerate() {
        if e.dim() != dim {
            return Err(format!("effect {k} has dimension {}, expected {dim}", e.dim()));
        }
        let min = eigh(e).min();
        if min < -1e-9 {
            return Err(format!("effect {k} is not PSD (min eigenvalue {min:e})"));
        }
        sum += e;
    }
    let dev = sum.max_abs_diff(&Hermitian::identity(dim));
    if dev > 1e-9 {
        return Err(format!("effects do not sum to identity (deviation {dev:e})"));
    }
    Ok(())
}

/// One term `q_j · Π_i p_j^{(i)}(a_i|x_i) · ρ_j` of a local hidden state model.
#[derive(Debug, Clone)]
pub struct LhsTerm {
    pub weight: f64,
    /// `conditionals[i][x][a] = p^{(i)}(a|x)`.
    pub conditionals: Vec<Vec<Vec<f64>>>,
    pub state: Hermitian,
}

impl LhsTerm {
    /// Term whose conditionals are the deterministic box `l`.
    pub fn deterministic(weight: f64, s: &Scenario, l: &DeterministicBox, state: Hermitian) -> Self {
        let conditionals = l
            .responses
            .iter()
            .zip(s.outcomes())
            .map(|(f, &na)| {
                f.iter()
                    .map(|&a| (0..na).map(|k| if k == a { 1.0 } else { 0.0 }).collect())
                    .collect()
            })
            .collect();
        Self { weight, conditionals, state }
    }

    fn prob(&self, pos: &Position) -> f64 {
        self.conditionals
            .iter()
            .zip(pos.settings.iter().zip(&pos.outcomes))
            .map(|(p, (&x, &a))| p[x][a])
            .product()
    }
}

#[derive(Debug, Clone)]
pub struct LhsModel {
    pub terms: Vec<LhsTerm>,
}

impl LhsModel {
    pub fn check(&self, s: &Scenario) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidModel(m));
        if self.terms.is_empty() {
            return bad("no terms".into());
        }
        let total: f64 = self.terms.iter().map(|t| t.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("weights sum to {total}"));
        }
        for (j, t) in self.terms.iter().enumerate() {
            if t.weight < 0.0 {
                return bad(format!("term {j} has negative weight"));
            }
            if t.conditionals.len() != s.parties() {
                return bad(format!("term {j}: wrong number of parties"));
            }
            for (i, p) in t.conditionals.iter().enumerate() {
                if p.len() != s.settings()[i] {
                    return bad(format!("term {j} party {i}: wrong number of settings"));
                }
                for (x, dist) in p.iter().enumerate() {
                    let sum: f64 = dist.iter().sum();
                    if dist.len() != s.outcomes()[i]
                        || dist.iter().any(|&v| v < 0.0)
                        || (sum - 1.0).abs() > 1e-9
                    {
                        return bad(format!("term {j} party {i} setting {x}: not a distribution"));
                    }
                }
            }
            if t.state.dim() != s.trusted_dim() {
                return bad(format!("term {j}: state has dimension {}", t.state.dim()));
            }
            if (t.state.trace() - 1.0).abs() > 1e-9 || eigh(&t.state).min() < -1e-9 {
                return bad(format!("term {j}: state is not a density matrix"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Psd,
    Normalization,
    NoSignaling,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Block label, or a marginal label with `*` for summed-out parties.
    pub position: String,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub psd_ok: bool,
    pub normalization_ok: bool,
    pub no_signaling_ok: bool,
    pub worst_violation: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.psd_ok && self.normalization_ok && self.no_signaling_ok
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assemblage {
    scenario: Scenario,
    blocks: Vec<Hermitian>,
    pub meta: Option<serde_json::Value>,
}

impl Assemblage {
    /// Blocks in canonical position order.
    pub fn new(scenario: Scenario, blocks: Vec<Hermitian>) -> Result<Self> {
        if blocks.len() != scenario.num_positions() {
            return Err(Error::DimensionMismatch(format!(
                "{} blocks for {} positions",
                blocks.len(),
                scenario.num_positions()
            )));
        }
        if let Some(b) = blocks.iter().find(|b| b.dim() != scenario.trusted_dim()) {
            return Err(Error::DimensionMismatch(format!(
                "block of dimension {} in a d = {} scenario",
                b.dim(),
                scenario.trusted_dim()
            )));
        }
        Ok(Self { scenario, blocks, meta: None })
    }

    pub fn from_fn(scenario: Scenario, mut f: impl FnMut(&Position) -> Hermitian) -> Result<Self> {
        let blocks = scenario.positions().map(|p| f(&p)).collect();
        Self::new(scenario, blocks)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn blocks(&self) -> &[Hermitian] {
        &self.blocks
    }

    pub fn block(&self, pos: &Position) -> &Hermitian {
        &self.blocks[self.scenario.index_of(pos)]
    }

    pub fn block_at(&self, index: usize) -> &Hermitian {
        &self.blocks[index]
    }

    pub fn block_by_label(&self, label: &str) -> Result<&Hermitian> {
        Ok(self.block(&self.scenario.parse_position(label)?))
    }

    pub fn into_blocks(self) -> Vec<Hermitian> {
        self.blocks
    }

    fn check_compatible(&self, other: &Assemblage) -> Result<()> {
        if self.scenario != other.scenario {
            return Err(Error::DimensionMismatch("assemblages have different scenarios".into()));
        }
        Ok(())
    }

    /// `p·self + (1 - p)·other`.
    pub fn mix(&self, other: &Assemblage, p: f64) -> Result<Self> {
        self.check_compatible(other)?;
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * p + b * (1.0 - p)).collect();
        Self::new(self.scenario.clone(), blocks)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            scenario: self.scenario.clone(),
            blocks: self.blocks.iter().map(|b| b * factor).collect(),
            meta: None,
        }
    }

    pub fn add(&self, other: &Assemblage) -> Result<Self> {
        self.check_compatible(other)?;
        Self::new(self.scenario.clone(), self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Assemblage) -> Result<Self> {
        self.check_compatible(other)?;
        Self::new(self.scenario.clone(), self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b).collect())
    }

    /// Largest entrywise deviation over all blocks.
    pub fn max_deviation(&self, other: &Assemblage) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
    }

    /// The extreme LHS assemblage `L ⊗ ρ`.
    pub fn deterministic(scenario: &Scenario, l: &DeterministicBox, state: &Hermitian) -> Result<Self> {
        let zero = Hermitian::zeros(scenario.trusted_dim());
        Self::from_fn(scenario.clone(), |p| if l.prob(p) > 0.0 { state.clone() } else { zero.clone() })
    }

    /// Quantum realization: `σ_{a|x} = Tr_{A_1…A_n}((M_{a_1|x_1} ⊗ … ⊗ M_{a_n|x_n} ⊗ 1) ρ)`.
    pub fn from_quantum(state: &Hermitian, m: &MeasurementSet) -> Result<Self> {
        let dims = m.party_dims();
        let untrusted: usize = dims.iter().product();
        if !state.dim().is_multiple_of(untrusted) || state.dim() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "state dimension {} is not a multiple of the untrusted dimension {untrusted}",
                state.dim()
            )));
        }
        let trusted_dim = state.dim() / untrusted;
        check_density(state)?;
        let scenario = m.scenario(trusted_dim)?;
        let mut blocks = Vec::with_capacity(scenario.num_positions());
        for pos in scenario.positions() {
            // contract the parties one at a time, leading factor first
            let mut rest: usize = state.dim();
            let mut current: CMatrix = state.matrix().clone();
            for (i, (&x, &a)) in pos.settings.iter().zip(&pos.outcomes).enumerate() {
                rest /= dims[i];
                current = contract_first(m.element(i, x, a).matrix(), &current, rest)?;
            }
            blocks.push(Hermitian::symmetrized(current));
        }
        Self::new(scenario, blocks)
    }

    /// `σ_{a|x} = Σ_j q_j Π_i p_j^{(i)}(a_i|x_i) ρ_j`.
    pub fn from_lhs(model: &LhsModel, s: &Scenario) -> Result<Self> {
        model.check(s)?;
        let d = s.trusted_dim();
        Self::from_fn(s.clone(), |pos| {
            let mut acc = Hermitian::zeros(d);
            for t in &model.terms {
                let w = t.weight * t.prob(pos);
                if w != 0.0 {
                    acc += &(&t.state * w);
                }
            }
            acc
        })
    }

    /// `Σ_a σ_{a|x}` for the setting tuple with index `xi`.
    pub fn setting_sum(&self, xi: usize) -> Hermitian {
        let na = self.scenario.num_outcome_tuples();
        let mut acc = Hermitian::zeros(self.scenario.trusted_dim());
        for b in &self.blocks[xi * na..(xi + 1) * na] {
            acc += b;
        }
        acc
    }

    /// Reduced state `ρ_B` (computed from the first setting tuple).
    pub fn reduced_state(&self) -> Hermitian {
        self.setting_sum(0)
    }

    /// `Σ_{a|x} Tr σ_{a|x}`, equal to `Π 𝒳_i` for a normalized assemblage.
    pub fn total_trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    pub fn validate(&self, tol: &Tolerances) -> ValidationReport {
        let s = &self.scenario;
        let mut violations = Vec::new();

        for (i, b) in self.blocks.iter().enumerate() {
            let min = eigh(b).min();
            if min < -tol.psd {
                violations.push(Violation {
                    kind: ViolationKind::Psd,
                    position: s.position_label(&s.position_at(i)),
                    magnitude: -min,
                });
            }
        }

        let star_label = |a: &[Option<usize>], x: &[usize]| {
            let a: String = a.iter().map(|v| v.map_or("*".to_string(), |d| d.to_string())).collect();
            let x: String = x.iter().map(|d| d.to_string()).collect();
            format!("{a}|{x}")
        };
        let nstar = vec![None; s.parties()];

        let rho_b = self.setting_sum(0);
        for xi in 0..s.num_setting_tuples() {
            let sum = self.setting_sum(xi);
            let dev = sum.max_abs_diff(&rho_b).max((sum.trace() - 1.0).abs());
            if dev > tol.ns {
                violations.push(Violation {
                    kind: ViolationKind::Normalization,
                    position: star_label(&nstar, &s.setting_tuple(xi)),
                    magnitude: dev,
                });
            }
        }

        let n = s.parties();
        for mask in 1..(1usize << n) - 1 {
            let kept: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            for xi in 0..s.num_setting_tuples() {
                let x = s.setting_tuple(xi);
                let mut x_ref = x.clone();
                for i in (0..n).filter(|i| mask & (1 << i) == 0) {
                    x_ref[i] = 0;
                }
                if x_ref == x {
                    continue;
                }
                for (a_kept, m) in self.marginal_blocks(&kept, &x) {
                    let m_ref = self.marginal_block(&kept, &a_kept, &x_ref);
                    let dev = m.max_abs_diff(&m_ref);
                    if dev > tol.ns {
                        let mut labels = vec![None; n];
                        for (k, &i) in kept.iter().enumerate() {
                            labels[i] = Some(a_kept[k]);
                        }
                        violations.push(Violation {
                            kind: ViolationKind::NoSignaling,
                            position: star_label(&labels, &x),
                            magnitude: dev,
                        });
                    }
                }
            }
        }

        let ok = |k| !violations.iter().any(|v| v.kind == k);
        ValidationReport {
            psd_ok: ok(ViolationKind::Psd),
            normalization_ok: ok(ViolationKind::Normalization),
            no_signaling_ok: ok(ViolationKind::NoSignaling),
            worst_violation: violations.iter().map(|v| v.magnitude).fold(0.0, f64::max),
            violations,
        }
    }

    /// `Σ_{a_j, j ∉ kept} σ_{a|x}` for fixed kept outcomes.
    fn marginal_block(&self, kept: &[usize], a_kept: &[usize], x: &[usize]) -> Hermitian {
        let s = &self.scenario;
        let xi = s.setting_index(x);
        let na = s.num_outcome_tuples();
        let mut acc = Hermitian::zeros(s.trusted_dim());
        for ai in 0..na {
            let a = s.outcome_tuple(ai);
            if kept.iter().zip(a_kept).all(|(&i, &v)| a[i] == v) {
                acc += &self.blocks[xi * na + ai];
            }
        }
        acc
    }

    fn marginal_blocks(&self, kept: &[usize], x: &[usize]) -> Vec<(Vec<usize>, Hermitian)> {
        let radices: Vec<usize> = kept.iter().map(|&i| self.scenario.outcomes()[i]).collect();
        let count: usize = radices.iter().product();
        (0..count)
            .map(|k| {
                let mut rem = k;
                let mut a_kept = vec![0; kept.len()];
                for j in (0..kept.len()).rev() {
                    a_kept[j] = rem % radices[j];
                    rem /= radices[j];
                }
                let m = self.marginal_block(kept, &a_kept, x);
                (a_kept, m)
            })
            .collect()
    }

    /// Reduced assemblage of the parties in `kept`, obtained by summing out the
    /// others at settings `settings_for_dropped` (one entry per dropped party,
    /// in party order). Fails if another choice of dropped settings changes
    /// the result by more than `ns_tol`.
    pub fn marginal(&self, kept: &[usize], settings_for_dropped: &[usize], ns_tol: f64) -> Result<Self> {
        let s = &self.scenario;
        let n = s.parties();
        let mut kept_sorted = kept.to_vec();
        kept_sorted.sort_unstable();
        kept_sorted.dedup();
        if kept_sorted.is_empty() || kept_sorted.len() >= n || kept_sorted.iter().any(|&i| i >= n) {
            return Err(Error::NoProperSubset);
        }
        let dropped: Vec<usize> = (0..n).filter(|i| !kept_sorted.contains(i)).collect();
        if settings_for_dropped.len() != dropped.len()
            || dropped.iter().zip(settings_for_dropped).any(|(&i, &x)| x >= s.settings()[i])
        {
            return Err(Error::InvalidParams("settings for dropped parties do not match the scenario".into()));
        }
        let reduced = Scenario::new(
            kept_sorted.iter().map(|&i| s.settings()[i]).collect(),
            kept_sorted.iter().map(|&i| s.outcomes()[i]).collect(),
            s.trusted_dim(),
        )?;
        let dropped_space = Scenario::new(
            dropped.iter().map(|&i| s.settings()[i]).collect(),
            dropped.iter().map(|&i| s.outcomes()[i]).collect(),
            1,
        )?;
        let full_x = |x_kept: &[usize], x_dropped: &[usize]| {
            let mut x = vec![0; n];
            for (k, &i) in kept_sorted.iter().enumerate() {
                x[i] = x_kept[k];
            }
            for (k, &i) in dropped.iter().enumerate() {
                x[i] = x_dropped[k];
            }
            x
        };
        let mut worst: f64 = 0.0;
        let mut blocks = Vec::with_capacity(reduced.num_positions());
        for pos in reduced.positions() {
            let chosen = self.marginal_block(&kept_sorted, &pos.outcomes, &full_x(&pos.settings, settings_for_dropped));
            for yi in 0..dropped_space.num_setting_tuples() {
                let other = self.marginal_block(
                    &kept_sorted,
                    &pos.outcomes,
                    &full_x(&pos.settings, &dropped_space.setting_tuple(yi)),
                );
                worst = worst.max(chosen.max_abs_diff(&other));
            }
            blocks.push(chosen);
        }
        if worst > ns_tol {
            return Err(Error::SignalingDetected { deviation: worst });
        }
        Self::new(reduced, blocks)
    }
}

pub(crate) fn check_density(state: &Hermitian) -> Result<()> {
    let tr = state.trace();
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!("trace is {tr}")));
    }
    let min = eigh(state).min();
    if min < -1e-9 {
        return Err(Error::InvalidState(format!("not PSD (min eigenvalue {min:e})")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::{real_vector, CVector};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn example1_validates_and_has_total_trace_four() {
        let a = fixtures::example1_assemblage();
        let r = a.validate(&tol());
        assert!(r.is_valid(), "{r:?}");
        assert!((a.total_trace() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn negated_block_fails_psd_only_there() {
        let a = fixtures::example1_assemblage();
        let mut blocks = a.clone().into_blocks();
        blocks[5] = -blocks[5].clone();
        let bad = Assemblage::new(a.scenario().clone(), blocks).unwrap();
        let r = bad.validate(&tol());
        assert!(!r.psd_ok);
        let psd: Vec<_> = r.violations.iter().filter(|v| v.kind == ViolationKind::Psd).collect();
        assert_eq!(psd.len(), 1);
        assert_eq!(psd[0].position, a.scenario().position_label(&a.scenario().position_at(5)));
    }

    #[test]
    fn swapped_blocks_signal() {
        let a = fixtures::example1_assemblage();
        let s = a.scenario().clone();
        let i = s.index_of(&s.parse_position("00|00").unwrap());
        let j = s.index_of(&s.parse_position("01|00").unwrap());
        let mut blocks = a.clone().into_blocks();
        blocks.swap(i, j);
        let bad = Assemblage::new(s.clone(), blocks).unwrap();
        let r = bad.validate(&tol());
        assert!(!r.no_signaling_ok);
        assert!(r.psd_ok);
        // oracle: recompute the B-marginal sums σ_{a0|00}+… directly
        let b = |l: &str| bad.block_by_label(l).unwrap().clone();
        let col_x0 = b("00|00") + b("10|00");
        let col_x1 = b("00|10") + b("10|10");
        assert!(col_x0.max_abs_diff(&col_x1) > 1e-3);
    }

    #[test]
    fn product_state_gives_lhs_product() {
        let ket0 = real_vector(&[1.0, 0.0]);
        let state = Hermitian::outer(&ket0).kron(&Hermitian::outer(&ket0)).kron(&Hermitian::outer(&ket0));
        let m = fixtures::example1_measurements();
        let a = Assemblage::from_quantum(&state, &m).unwrap();
        for pos in a.scenario().positions() {
            let pa = m.element(0, pos.settings[0], pos.outcomes[0]).expectation(&ket0);
            let pb = m.element(1, pos.settings[1], pos.outcomes[1]).expectation(&ket0);
            let expected = Hermitian::outer(&ket0) * (pa * pb);
            assert!(a.block(&pos).max_abs_diff(&expected) < 1e-14);
        }
    }

    #[test]
    fn from_quantum_rejects_bad_input() {
        let m = fixtures::example1_measurements();
        let st = Hermitian::identity(8).scaled(0.5);
        assert!(matches!(Assemblage::from_quantum(&st, &m), Err(Error::InvalidState(_))));
        let st = Hermitian::identity(6).scaled(1.0 / 6.0);
        assert!(matches!(Assemblage::from_quantum(&st, &m), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn lhs_single_deterministic_term() {
        let s = Scenario::binary_bipartite(2);
        let l = s.box_at(6);
        let p0 = Hermitian::outer(&real_vector(&[1.0, 0.0]));
        let model = LhsModel { terms: vec![LhsTerm::deterministic(1.0, &s, &l, p0.clone())] };
        let a = Assemblage::from_lhs(&model, &s).unwrap();
        let direct = Assemblage::deterministic(&s, &l, &p0).unwrap();
        assert!(a.max_deviation(&direct) < 1e-15);
        assert!(a.validate(&tol()).is_valid());
    }

    #[test]
    fn uniform_box_mixture_matches_literal_sum() {
        let s = Scenario::binary_bipartite(2);
        let half = Hermitian::identity(2).scaled(0.5);
        let terms: Vec<LhsTerm> = (0..16)
            .map(|k| LhsTerm::deterministic(1.0 / 16.0, &s, &s.box_at(k), half.clone()))
            .collect();
        let a = Assemblage::from_lhs(&LhsModel { terms }, &s).unwrap();
        // literal triple loop over (box, position)
        for pos in s.positions() {
            let mut acc = Hermitian::zeros(2);
            for k in 0..16 {
                acc += &(&half * (s.box_at(k).prob(&pos) / 16.0));
            }
            assert!(a.block(&pos).max_abs_diff(&acc) < 1e-15);
            assert!(a.block(&pos).max_abs_diff(&Hermitian::identity(2).scaled(0.125)) < 1e-15);
        }
    }

    #[test]
    fn factorized_conditionals_equal_box_expansion() {
        let s = Scenario::binary_bipartite(2);
        let rho = Hermitian::from_real_diagonal(&[0.3, 0.7]);
        let pa = vec![vec![0.2, 0.8], vec![0.6, 0.4]];
        let pb = vec![vec![0.5, 0.5], vec![0.9, 0.1]];
        let direct = LhsModel {
            terms: vec![LhsTerm { weight: 1.0, conditionals: vec![pa.clone(), pb.clone()], state: rho.clone() }],
        };
        // re-express as a mixture over the 16 deterministic boxes
        let terms = (0..16)
            .map(|k| {
                let l = s.box_at(k);
                let w = pa[0][l.responses[0][0]]
                    * pa[1][l.responses[0][1]]
                    * pb[0][l.responses[1][0]]
                    * pb[1][l.responses[1][1]];
                LhsTerm::deterministic(w, &s, &l, rho.clone())
            })
            .collect();
        let a = Assemblage::from_lhs(&direct, &s).unwrap();
        let b = Assemblage::from_lhs(&LhsModel { terms }, &s).unwrap();
        assert!(a.max_deviation(&b) < 1e-14);
    }

    #[test]
    fn invalid_lhs_model() {
        let s = Scenario::binary_bipartite(2);
        let l = s.box_at(0);
        let model = LhsModel { terms: vec![LhsTerm::deterministic(0.5, &s, &l, Hermitian::identity(2).scaled(0.5))] };
        assert!(matches!(Assemblage::from_lhs(&model, &s), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn example1_marginal_of_a() {
        let a = fixtures::example1_assemblage();
        let m = a.marginal(&[0], &[0], 1e-8).unwrap();
        let half_rho_b = a.reduced_state().scaled(0.5);
        // direct row sums of the printed box
        let b = |l: &str| a.block_by_label(l).unwrap().clone();
        for (label, l1, l2) in [("0|0", "00|00", "01|00"), ("1|0", "10|00", "11|00"), ("0|1", "00|10", "01|10"), ("1|1", "10|10", "11|10")] {
            let expected = b(l1) + b(l2);
            assert!(m.block_by_label(label).unwrap().max_abs_diff(&expected) < 1e-14);
            assert!(m.block_by_label(label).unwrap().max_abs_diff(&half_rho_b) < 1e-14);
        }
        let m1 = a.marginal(&[0], &[1], 1e-8).unwrap();
        assert!(m.max_deviation(&m1) < 1e-14);
    }

    #[test]
    fn marginal_needs_proper_subset() {
        let s = Scenario::new(vec![2], vec![2], 2).unwrap();
        let a = Assemblage::from_fn(s, |_| Hermitian::identity(2).scaled(0.25)).unwrap();
        assert!(matches!(a.marginal(&[0], &[], 1e-8), Err(Error::NoProperSubset)));
        let e = fixtures::example1_assemblage();
        assert!(matches!(e.marginal(&[0, 1], &[], 1e-8), Err(Error::NoProperSubset)));
    }

    #[test]
    fn marginal_detects_signaling() {
        let a = fixtures::example1_assemblage();
        let s = a.scenario().clone();
        let mut blocks = a.into_blocks();
        let i = s.index_of(&s.parse_position("00|00").unwrap());
        let j = s.index_of(&s.parse_position("01|00").unwrap());
        blocks.swap(i, j);
        let bad = Assemblage::new(s, blocks).unwrap();
        assert!(matches!(bad.marginal(&[1], &[0], 1e-8), Err(Error::SignalingDetected { .. })));
    }

    #[test]
    fn lhs_marginal_is_marginal_model() {
        let s = Scenario::binary_bipartite(2);
        let rho1 = Hermitian::from_real_diagonal(&[0.3, 0.7]);
        let rho2 = Hermitian::ket_projector(&CVector::from_vec(vec![
            crate::linalg::c(0.6, 0.0),
            crate::linalg::c(0.0, 0.8),
        ]));
        let pa1 = vec![vec![0.2, 0.8], vec![0.6, 0.4]];
        let pb1 = vec![vec![0.5, 0.5], vec![0.9, 0.1]];
        let pa2 = vec![vec![1.0, 0.0], vec![0.3, 0.7]];
        let pb2 = vec![vec![0.1, 0.9], vec![0.0, 1.0]];
        let full = LhsModel {
            terms: vec![
                LhsTerm { weight: 0.4, conditionals: vec![pa1.clone(), pb1], state: rho1.clone() },
                LhsTerm { weight: 0.6, conditionals: vec![pa2.clone(), pb2], state: rho2.clone() },
            ],
        };
        let reduced_s = Scenario::new(vec![2], vec![2], 2).unwrap();
        let reduced = LhsModel {
            terms: vec![
                LhsTerm { weight: 0.4, conditionals: vec![pa1], state: rho1 },
                LhsTerm { weight: 0.6, conditionals: vec![pa2], state: rho2 },
            ],
        };
        let lhs = Assemblage::from_lhs(&reduced, &reduced_s).unwrap();
        let m = Assemblage::from_lhs(&full, &s).unwrap().marginal(&[0], &[1], 1e-8).unwrap();
        assert!(m.max_deviation(&lhs) < 1e-14);
    }

    #[test]
    fn total_trace_single_party() {
        let s = Scenario::new(vec![3], vec![2], 2).unwrap();
        let a = Assemblage::from_fn(s, |_| Hermitian::identity(2).scaled(0.25)).unwrap();
        assert!((a.total_trace() - 3.0).abs() < 1e-14);
    }
}
