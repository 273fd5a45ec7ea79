//! Scenario descriptors, positions `a|x`, and local deterministic boxes.
//!
//! Positions are stored in a canonical order: setting tuples `x` vary
//! slowest (lexicographically), outcome tuples `a` fastest. All blocks
//! belonging to one setting tuple are therefore contiguous.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default upper bound on the number of enumerated deterministic boxes.
pub const DEFAULT_BOX_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ScenarioRepr", into = "ScenarioRepr")]
pub struct Scenario {
    settings: Vec<usize>,
    outcomes: Vec<usize>,
    trusted_dim: usize,
}

#[derive(Serialize, Deserialize)]
struct ScenarioRepr {
    n: usize,
    settings: Vec<usize>,
    outcomes: Vec<usize>,
    d: usize,
}

impl TryFrom<ScenarioRepr> for Scenario {
    type Error = Error;
    fn try_from(r: ScenarioRepr) -> Result<Self> {
        if r.n != r.settings.len() {
            return Err(Error::InvalidScenario(format!(
                "n = {} but {} setting counts given",
                r.n,
                r.settings.len()
            )));
        }
        Scenario::new(r.settings, r.outcomes, r.d)
    }
}

impl From<Scenario> for ScenarioRepr {
    fn from(s: Scenario) -> Self {
        ScenarioRepr { n: s.parties(), settings: s.settings, outcomes: s.outcomes, d: s.trusted_dim }
    }
}

/// An index `a|x = a_1…a_n | x_1…x_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position {
    pub outcomes: Vec<usize>,
    pub settings: Vec<usize>,
}

impl Position {
    pub fn new(outcomes: Vec<usize>, settings: Vec<usize>) -> Self {
        Self { outcomes, settings }
    }
}

/// Local deterministic box: party `i` answers `responses[i][x_i]` to setting `x_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicBox {
    pub responses: Vec<Vec<usize>>,
}

impl DeterministicBox {
    /// `p_L(a|x) ∈ {0, 1}`.
    pub fn prob(&self, pos: &Position) -> f64 {
        let hit = self
            .responses
            .iter()
            .zip(pos.settings.iter().zip(&pos.outcomes))
            .all(|(f, (&x, &a))| f[x] == a);
        if hit {
            1.0
        } else {
            0.0
        }
    }

    /// Outcome tuple selected for a given setting tuple.
    pub fn answer(&self, settings: &[usize]) -> Vec<usize> {
        self.responses.iter().zip(settings).map(|(f, &x)| f[x]).collect()
    }
}

fn mixed_radix_digits(mut index: usize, radices: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; radices.len()];
    for k in (0..radices.len()).rev() {
        digits[k] = index % radices[k];
        index /= radices[k];
    }
    digits
}

fn mixed_radix_index(digits: &[usize], radices: &[usize]) -> usize {
    digits.iter().zip(radices).fold(0, |acc, (&d, &r)| acc * r + d)
}

impl Scenario {
    pub fn new(settings: Vec<usize>, outcomes: Vec<usize>, trusted_dim: usize) -> Result<Self> {
        if settings.is_empty() {
            return Err(Error::InvalidScenario("at least one untrusted party required".into()));
        }
        if settings.len() != outcomes.len() {
            return Err(Error::InvalidScenario(format!(
                "{} setting counts but {} outcome counts",
                settings.len(),
                outcomes.len()
            )));
        }
        if settings.iter().chain(&outcomes).any(|&c| c == 0) || trusted_dim == 0 {
            return Err(Error::InvalidScenario("all counts and d must be positive".into()));
        }
        Ok(Self { settings, outcomes, trusted_dim })
    }

    /// Two untrusted parties with binary settings and outcomes.
    pub fn binary_bipartite(trusted_dim: usize) -> Self {
        Self { settings: vec![2, 2], outcomes: vec![2, 2], trusted_dim }
    }

    pub fn parties(&self) -> usize {
        self.settings.len()
    }

    pub fn settings(&self) -> &[usize] {
        &self.settings
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    pub fn trusted_dim(&self) -> usize {
        self.trusted_dim
    }

    /// Same parties, different trusted dimension.
    pub fn with_trusted_dim(&self, d: usize) -> Self {
        Self { trusted_dim: d, ..self.clone() }
    }

    /// `Π 𝒳_i`, which is also `|I_L|` for every deterministic box.
    pub fn num_setting_tuples(&self) -> usize {
        self.settings.iter().product()
    }

    pub fn num_outcome_tuples(&self) -> usize {
        self.outcomes.iter().product()
    }

    pub fn num_positions(&self) -> usize {
        self.num_setting_tuples() * self.num_outcome_tuples()
    }

    pub fn setting_tuple(&self, index: usize) -> Vec<usize> {
        mixed_radix_digits(index, &self.settings)
    }

    pub fn outcome_tuple(&self, index: usize) -> Vec<usize> {
        mixed_radix_digits(index, &self.outcomes)
    }

    pub fn setting_index(&self, x: &[usize]) -> usize {
        mixed_radix_index(x, &self.settings)
    }

    pub fn outcome_index(&self, a: &[usize]) -> usize {
        mixed_radix_index(a, &self.outcomes)
    }

    pub fn position_at(&self, index: usize) -> Position {
        let na = self.num_outcome_tuples();
        Position { outcomes: self.outcome_tuple(index % na), settings: self.setting_tuple(index / na) }
    }

    pub fn index_of(&self, pos: &Position) -> usize {
        self.setting_index(&pos.settings) * self.num_outcome_tuples() + self.outcome_index(&pos.outcomes)
    }

    pub fn contains(&self, pos: &Position) -> bool {
        pos.outcomes.len() == self.parties()
            && pos.settings.len() == self.parties()
            && pos.outcomes.iter().zip(&self.outcomes).all(|(a, n)| a < n)
            && pos.settings.iter().zip(&self.settings).all(|(x, n)| x < n)
    }

    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        (0..self.num_positions()).map(move |i| self.position_at(i))
    }

    fn compact_labels(&self) -> bool {
        self.settings.iter().chain(&self.outcomes).all(|&c| c <= 10)
    }

    /// `"a1a2|x1x2"` when every count is at most 10, `"a1,a2|x1,x2"` otherwise.
    pub fn position_label(&self, pos: &Position) -> String {
        let join = |v: &[usize]| {
            if self.compact_labels() {
                v.iter().map(|d| d.to_string()).collect::<String>()
            } else {
                v.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
            }
        };
        format!("{}|{}", join(&pos.outcomes), join(&pos.settings))
    }

    pub fn parse_position(&self, label: &str) -> Result<Position> {
        let bad = || Error::InvalidPosition(label.to_string());
        let (a, x) = label.split_once('|').ok_or_else(bad)?;
        let parse_group = |g: &str| -> Result<Vec<usize>> {
            if g.contains(',') || !self.compact_labels() {
                g.split(',').map(|t| t.trim().parse::<usize>().map_err(|_| bad())).collect()
            } else {
                g.chars().map(|ch| ch.to_digit(10).map(|d| d as usize).ok_or_else(bad)).collect()
            }
        };
        let pos = Position { outcomes: parse_group(a)?, settings: parse_group(x)? };
        if !self.contains(&pos) {
            return Err(bad());
        }
        Ok(pos)
    }

    /// `Π_i 𝒜_i^{𝒳_i}`, saturating at `u128::MAX`.
    pub fn num_deterministic_boxes(&self) -> u128 {
        self.settings.iter().zip(&self.outcomes).fold(1u128, |acc, (&x, &a)| {
            (0..x).fold(acc, |acc, _| acc.saturating_mul(a as u128))
        })
    }

    fn box_radices(&self) -> Vec<usize> {
        self.settings
            .iter()
            .zip(&self.outcomes)
            .flat_map(|(&x, &a)| std::iter::repeat_n(a, x))
            .collect()
    }

    /// Box with canonical index `index`.
    pub fn box_at(&self, index: usize) -> DeterministicBox {
        let digits = mixed_radix_digits(index, &self.box_radices());
        let mut responses = Vec::with_capacity(self.parties());
        let mut offset = 0;
        for &x in &self.settings {
            responses.push(digits[offset..offset + x].to_vec());
            offset += x;
        }
        DeterministicBox { responses }
    }

    pub fn box_index(&self, b: &DeterministicBox) -> usize {
        let digits: Vec<usize> = b.responses.iter().flatten().copied().collect();
        mixed_radix_index(&digits, &self.box_radices())
    }

    pub fn is_box_consistent(&self, b: &DeterministicBox) -> bool {
        b.responses.len() == self.parties()
            && b.responses.iter().zip(self.settings.iter().zip(&self.outcomes)).all(|(f, (&x, &a))| {
                f.len() == x && f.iter().all(|&v| v < a)
            })
    }

    /// Index set `I_L`, ordered by setting tuple.
    pub fn support_set(&self, b: &DeterministicBox) -> Vec<Position> {
        (0..self.num_setting_tuples())
            .map(|xi| {
                let x = self.setting_tuple(xi);
                Position { outcomes: b.answer(&x), settings: x }
            })
            .collect()
    }

    /// Block indices of `I_L`, ordered by setting tuple.
    pub fn support_indices(&self, b: &DeterministicBox) -> Vec<usize> {
        let na = self.num_outcome_tuples();
        (0..self.num_setting_tuples())
            .map(|xi| xi * na + self.outcome_index(&b.answer(&self.setting_tuple(xi))))
            .collect()
    }

    /// Disjoint cover of all positions by supports of the constant boxes
    /// `f_i ≡ c_i`, one per outcome tuple `c`.
    pub fn rectangle_partition(&self) -> Vec<Vec<Position>> {
        (0..self.num_outcome_tuples())
            .map(|ai| {
                let a = self.outcome_tuple(ai);
                let b = DeterministicBox {
                    responses: a.iter().zip(&self.settings).map(|(&c, &x)| vec![c; x]).collect(),
                };
                self.support_set(&b)
            })
            .collect()
    }
}

pub fn enumerate_deterministic_boxes(s: &Scenario) -> Result<Vec<DeterministicBox>> {
    enumerate_deterministic_boxes_capped(s, DEFAULT_BOX_CAP)
}

/// All local deterministic boxes in lexicographic order of their concatenated
/// response tables.
pub fn enumerate_deterministic_boxes_capped(s: &Scenario, cap: usize) -> Result<Vec<DeterministicBox>> {
    let count = s.num_deterministic_boxes();
    if count > cap as u128 {
        return Err(Error::CombinatorialOverflow { count, cap });
    }
    Ok((0..count as usize).map(|i| s.box_at(i)).collect())
}
