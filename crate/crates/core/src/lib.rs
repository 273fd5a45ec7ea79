//! Edge detection, LHS subtraction and witnesses for multipartite
//! no-signaling assemblages with a trusted party.
//!
//! An assemblage `{σ_{a|x}}` is on the edge of the no-signaling set when no
//! nonzero LHS part can be split off. The test used here: for every local
//! deterministic box `L`, the images of the blocks on its support `I_L`
//! must intersect trivially.

pub mod assemblage;
pub mod edge;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod linalg;
pub mod realization;
pub mod scenario;
pub mod tolerance;
pub mod witness;

pub use assemblage::{Assemblage, LhsModel, LhsTerm, MeasurementSet, Povm, ValidationReport, Violation, ViolationKind};
pub use edge::{
    diagnostics, is_on_edge, max_subtraction, subtract, BoxEdgeInfo, CorollaryBound, EdgeDiagnostics, EdgeReport,
    SubtractionResult,
};
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, Hermitian, LinalgError, RankTolerance, C64};
pub use realization::{RandomSource, RealizationRecipe};
pub use scenario::{DeterministicBox, Position, Scenario};
pub use tolerance::Tolerances;
pub use witness::{certify, evaluate, WitnessBlock, WitnessCertificate};
