//! Built-in reference objects.
//!
//! The two-qubit-steering example: three qubits `A B C`, the rank-two state
//! `ρ = ½|φ₁⟩⟨φ₁| + ½|φ₂⟩⟨φ₂|` with `φ₁ = |0⟩(|00⟩+|11⟩)/√2`,
//! `φ₂ = |1⟩(|00⟩-|11⟩)/√2`, and the measurements `{|0⟩,|1⟩}` (setting 0) and
//! `{|+⟩,|-⟩}` (setting 1) on both `A` and `B`. The blocks and the `Z`
//! operator are written out entry by entry rather than computed.

use crate::assemblage::{Assemblage, MeasurementSet};
use crate::error::Result;
use crate::linalg::{real_vector, CVector, Hermitian};
use crate::scenario::Scenario;
use crate::witness::WitnessBlock;
use std::f64::consts::FRAC_1_SQRT_2 as H;

pub const FIXTURE_NAMES: &[&str] = &["example1", "example1-sigma-p", "pr-box-d1", "ghz"];

fn ket(v: &[f64]) -> Hermitian {
    Hermitian::ket_projector(&real_vector(v))
}

fn k0() -> Hermitian {
    ket(&[1.0, 0.0])
}
fn k1() -> Hermitian {
    ket(&[0.0, 1.0])
}
fn kp() -> Hermitian {
    ket(&[H, H])
}
fn km() -> Hermitian {
    ket(&[H, -H])
}

pub fn example1_state() -> Hermitian {
    let mut phi1 = vec![0.0; 8];
    phi1[0b000] = H;
    phi1[0b011] = H;
    let mut phi2 = vec![0.0; 8];
    phi2[0b100] = H;
    phi2[0b111] = -H;
    ket(&phi1) * 0.5 + ket(&phi2) * 0.5
}

fn example1_pvms() -> Vec<Vec<Hermitian>> {
    vec![vec![k0(), k1()], vec![kp(), km()]]
}

pub fn example1_measurements() -> MeasurementSet {
    MeasurementSet::new(vec![example1_pvms(), example1_pvms()]).expect("valid PVMs")
}

/// Rows indexed by `(a, x)` in the order `00, 10, 01, 11`, columns by `(b, y)`
/// in the same order; entries are multiplied by 1/8.
fn table_to_assemblage(rows: [[Hermitian; 4]; 4]) -> Assemblage {
    let s = Scenario::binary_bipartite(2);
    let slot = |o: usize, x: usize| o + 2 * x;
    Assemblage::from_fn(s, |p| {
        rows[slot(p.outcomes[0], p.settings[0])][slot(p.outcomes[1], p.settings[1])].clone() * 0.125
    })
    .expect("16 qubit blocks")
}

/// The assemblage of the reference state, as printed.
pub fn example1_assemblage() -> Assemblage {
    let i = Hermitian::identity(2);
    let two = |h: Hermitian| h * 2.0;
    table_to_assemblage([
        [two(k0()), two(k1()), two(kp()), two(km())],
        [two(k0()), two(k1()), two(km()), two(kp())],
        [two(k0()), two(k1()), i.clone(), i.clone()],
        [two(k0()), two(k1()), i.clone(), i],
    ])
}

/// `Z = 1 - R` for the reference assemblage, as printed.
pub fn example1_z() -> WitnessBlock {
    let o = Hermitian::zeros(2);
    let rows = [
        [k1(), k0(), km(), kp()],
        [k1(), k0(), kp(), km()],
        [k1(), k0(), o.clone(), o.clone()],
        [k1(), k0(), o.clone(), o],
    ];
    let s = Scenario::binary_bipartite(2);
    let slot = |o: usize, x: usize| o + 2 * x;
    let blocks = s
        .positions()
        .map(|p| rows[slot(p.outcomes[0], p.settings[0])][slot(p.outcomes[1], p.settings[1])].clone())
        .collect();
    WitnessBlock::new(s, blocks).expect("16 qubit blocks")
}

/// Reference assemblage with the `a=1, x=1` row moved onto `a=0, x=1`.
pub fn example1_sigma1() -> Assemblage {
    let i = Hermitian::identity(2);
    let o = Hermitian::zeros(2);
    let two = |h: Hermitian| h * 2.0;
    table_to_assemblage([
        [two(k0()), two(k1()), two(kp()), two(km())],
        [two(k0()), two(k1()), two(km()), two(kp())],
        [two(k0()) * 2.0, two(k1()) * 2.0, i.clone() * 2.0, i * 2.0],
        [o.clone(), o.clone(), o.clone(), o],
    ])
}

/// Reference assemblage with the `a=0, x=1` row moved onto `a=1, x=1`.
pub fn example1_sigma2() -> Assemblage {
    let i = Hermitian::identity(2);
    let o = Hermitian::zeros(2);
    let two = |h: Hermitian| h * 2.0;
    table_to_assemblage([
        [two(k0()), two(k1()), two(kp()), two(km())],
        [two(k0()), two(k1()), two(km()), two(kp())],
        [o.clone(), o.clone(), o.clone(), o],
        [two(k0()) * 2.0, two(k1()) * 2.0, i.clone() * 2.0, i * 2.0],
    ])
}

/// `p·Σ₁ + (1 - p)·Σ₂`.
pub fn example1_sigma_p(p: f64) -> Result<Assemblage> {
    example1_sigma1().mix(&example1_sigma2(), p)
}

/// PR box `p(ab|xy) = ½[a ⊕ b = xy]` as a `d = 1` assemblage.
pub fn pr_box_d1() -> Assemblage {
    let s = Scenario::binary_bipartite(1);
    Assemblage::from_fn(s, |p| {
        let hit = (p.outcomes[0] ^ p.outcomes[1]) == (p.settings[0] & p.settings[1]);
        Hermitian::identity(1) * if hit { 0.5 } else { 0.0 }
    })
    .expect("16 scalar blocks")
}

/// `(|000⟩ + |111⟩)/√2`.
pub fn ghz_vector() -> CVector {
    let mut v = vec![0.0; 8];
    v[0] = H;
    v[7] = H;
    real_vector(&v)
}

/// `|0⟩ ⊗ (|00⟩ + |11⟩)/√2`.
pub fn product_bell_vector() -> CVector {
    let mut v = vec![0.0; 8];
    v[0b000] = H;
    v[0b011] = H;
    real_vector(&v)
}
