//! Inputs shared by the benchmarks.

use nsedge::realization::random::{random_mixed_state, random_pvm_qubit};
use nsedge::{Assemblage, MeasurementSet, RandomSource};

/// Rank-`rank` state on `parties` qubits plus a qubit trusted system, measured
/// with random projective measurements (two settings per party).
pub fn random_quantum_assemblage(parties: usize, rank: usize, seed: u64) -> Assemblage {
    let mut rng = RandomSource::new(seed).stream(0);
    let dim = 1 << (parties + 1);
    let rho = random_mixed_state(dim, rank, &mut rng).expect("rank fits");
    let m = (0..parties).map(|_| vec![random_pvm_qubit(&mut rng), random_pvm_qubit(&mut rng)]).collect();
    Assemblage::from_quantum(&rho, &MeasurementSet::new(m).expect("valid PVMs")).expect("dimensions match")
}
