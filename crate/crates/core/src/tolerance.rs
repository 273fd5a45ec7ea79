use crate::linalg::{RankTolerance, INTERSECTION_TOL, PSD_TOL};
use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by the analysis pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rank: RankTolerance,
    /// Normalization and no-signaling constraints.
    pub ns: f64,
    /// Kernel extraction in common-image computations.
    pub intersection: f64,
    /// Most negative eigenvalue still accepted as PSD.
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rank: RankTolerance::default(), ns: 1e-8, intersection: INTERSECTION_TOL, psd: PSD_TOL }
    }
}

/// Blocks with trace below this are treated as exactly zero.
pub const ZERO_BLOCK_TRACE: f64 = 1e-12;
