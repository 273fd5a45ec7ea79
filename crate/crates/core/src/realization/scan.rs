use super::random::{haar_unitary, pvm_from_basis, random_mixed_state, random_povm, random_pvm_qubit, RandomSource};
use super::random::mix_columns;
use crate::assemblage::{Assemblage, MeasurementSet, Povm};
use crate::edge::{corollary_bound, is_on_edge, max_subtraction, rank_screen};
use crate::error::{Error, Result};
use crate::linalg::{eigh, CMatrix, CVector, Hermitian};
use crate::tolerance::Tolerances;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementKind {
    Pvm,
    Povm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StateFamily {
    /// `U diag(p) U†` with Haar `U`.
    Generic,
    /// Eigenvectors inside `span{|u_a⟩|v_b⟩|φ_ab⟩}`, with the setting-0
    /// measurements in the bases `{u_a}`, `{v_b}`: all setting-`(0,0)` blocks
    /// have rank one, which keeps the rank screens silent far more often.
    Structured,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanConfig {
    pub samples: usize,
    pub rank: usize,
    pub kind: MeasurementKind,
    pub family: StateFamily,
    pub seed: u64,
    /// Stream offset, so several scans can share a seed without overlapping.
    pub first_stream: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitCheck {
    pub alpha: f64,
    pub beta: f64,
    /// Smallest eigenvalue over the blocks of `σ - αβ·σ̃`.
    pub junk_min_eigenvalue: f64,
    pub pvm_part_on_edge: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleRecord {
    pub index: usize,
    pub edge: bool,
    pub subtracting_box: Option<usize>,
    pub epsilon: Option<f64>,
    pub reconstruction_error: Option<f64>,
    pub min_margin: f64,
    pub rank_screen_box: Option<usize>,
    pub corollary_satisfied: bool,
    pub split: Option<SplitCheck>,
    pub resamples: usize,
}

impl SampleRecord {
    fn ok(&self) -> bool {
        !self.edge
            && self.epsilon.is_some_and(|e| e > 0.0)
            && self.reconstruction_error.is_some_and(|e| e <= 1e-9)
            && self.split.as_ref().is_none_or(|s| s.junk_min_eigenvalue >= -1e-9 && !s.pvm_part_on_edge)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub config: ScanConfig,
    pub rng: RandomSource,
    pub samples: Vec<SampleRecord>,
    pub edge_verdicts: usize,
    /// Samples without a valid subtraction certificate or failing the split check.
    pub failures: usize,
    pub screen_silent: usize,
    pub discarded_borderline: usize,
}

impl ScanReport {
    pub fn passed(&self) -> bool {
        self.edge_verdicts == 0 && self.failures == 0
    }
}

/// Random rank-`rank` three-qubit state of the structured family, with the
/// setting-0 bases of `A` and `B` it is aligned to.
pub fn structured_state<R: Rng + ?Sized>(rank: usize, rng: &mut R) -> Result<(Hermitian, CMatrix, CMatrix)> {
    if !(1..=4).contains(&rank) {
        return Err(Error::InvalidParams(format!("structured family supports rank 1..=4, got {rank}")));
    }
    let ua = haar_unitary(2, rng);
    let ub = haar_unitary(2, rng);
    let frame: Vec<CVector> = (0..4)
        .map(|ab| {
            let phi = haar_unitary(2, rng).column(0).into_owned();
            ua.column(ab >> 1).into_owned().kronecker(&ub.column(ab & 1).into_owned()).kronecker(&phi)
        })
        .collect();
    let frame = CMatrix::from_columns(&frame);
    let coeffs = haar_unitary(4, rng);
    let eigvecs = &frame * coeffs;
    let w: Vec<f64> = (0..rank).map(|_| 0.1 + rng.random::<f64>()).collect();
    let sum: f64 = w.iter().sum();
    let p: Vec<f64> = w.iter().map(|x| x / sum).collect();
    Ok((mix_columns(&eigvecs, &p), ua, ub))
}

#[derive(Debug, Clone)]
pub struct PvmSplit {
    pub alpha: f64,
    /// `P_{a|x}`: projector onto the eigenvector of `M_{0|x}`'s largest
    /// eigenvalue for `a = 0`, its complement for `a = 1`.
    pub pvms: Vec<Povm>,
    /// `M̃_{a|x} = M_{a|x} - α·P_{a|x}`, all PSD.
    pub remainders: Vec<Povm>,
}

/// Writes each binary qubit POVM as `M_{a|x} = α·P_{a|x} + M̃_{a|x}` with
/// `α = min_x min(m_{0|x}, 1 - m_{1|x})`, where `m_{0|x} ≥ m_{1|x}` are the
/// eigenvalues of `M_{0|x}`.
pub fn povm_pvm_split(settings: &[Povm]) -> Result<PvmSplit> {
    if settings.is_empty() || settings.iter().any(|p| p.len() != 2 || p[0].dim() != 2) {
        return Err(Error::InvalidParams("expected binary qubit POVMs".into()));
    }
    let mut alpha = f64::INFINITY;
    let mut pvms = Vec::with_capacity(settings.len());
    for povm in settings {
        let e = eigh(&povm[0]);
        let (m1, m0) = (e.values[0], e.values[1]);
        if m0 <= 1e-12 || m1 >= 1.0 - 1e-12 {
            return Err(Error::TrivialPovm);
        }
        alpha = alpha.min(m0.min(1.0 - m1));
        let p0 = Hermitian::ket_projector(&e.vectors[1]);
        pvms.push(vec![p0.clone(), Hermitian::identity(2) - p0]);
    }
    let remainders = settings
        .iter()
        .zip(&pvms)
        .map(|(m, p)| m.iter().zip(p).map(|(ma, pa)| ma - &(pa * alpha)).collect())
        .collect();
    Ok(PvmSplit { alpha, pvms, remainders })
}

fn draw_measurements<R: Rng + ?Sized>(
    kind: MeasurementKind,
    bases: Option<(&CMatrix, &CMatrix)>,
    rng: &mut R,
) -> Result<MeasurementSet> {
    let party = |basis: Option<&CMatrix>, rng: &mut R| -> Result<Vec<Povm>> {
        match kind {
            MeasurementKind::Pvm => Ok(vec![
                basis.map_or_else(|| random_pvm_qubit(rng), pvm_from_basis),
                random_pvm_qubit(rng),
            ]),
            MeasurementKind::Povm => Ok(vec![random_povm(2, 2, rng)?, random_povm(2, 2, rng)?]),
        }
    };
    let a = party(bases.map(|b| b.0), rng)?;
    let b = party(bases.map(|b| b.1), rng)?;
    MeasurementSet::new(vec![a, b])
}

fn split_check(state: &Hermitian, m: &MeasurementSet, sigma: &Assemblage, tol: &Tolerances) -> Result<Option<SplitCheck>> {
    let (sa, sb) = match (povm_pvm_split(m.party(0)), povm_pvm_split(m.party(1))) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(Error::TrivialPovm), _) | (_, Err(Error::TrivialPovm)) => return Ok(None),
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let pvm_part = Assemblage::from_quantum(state, &MeasurementSet::new(vec![sa.pvms, sb.pvms])?)?;
    let junk = sigma.sub(&pvm_part.scaled(sa.alpha * sb.alpha))?;
    let junk_min = junk.blocks().iter().map(|b| eigh(b).min()).fold(f64::INFINITY, f64::min);
    Ok(Some(SplitCheck {
        alpha: sa.alpha,
        beta: sb.alpha,
        junk_min_eigenvalue: junk_min,
        pvm_part_on_edge: is_on_edge(&pvm_part, tol)?.on_edge,
    }))
}

fn run_sample(cfg: &ScanConfig, src: &RandomSource, index: usize, tol: &Tolerances) -> Result<SampleRecord> {
    let mut rng = src.stream(cfg.first_stream + index as u64);
    let mut resamples = 0;
    loop {
        let (state, bases) = match cfg.family {
            StateFamily::Generic => (random_mixed_state(8, cfg.rank, &mut rng)?, None),
            StateFamily::Structured => {
                let (s, ua, ub) = structured_state(cfg.rank, &mut rng)?;
                (s, Some((ua, ub)))
            }
        };
        let m = draw_measurements(cfg.kind, bases.as_ref().map(|(a, b)| (a, b)), &mut rng)?;
        let sigma = Assemblage::from_quantum(&state, &m)?;
        let report = is_on_edge(&sigma, tol)?;
        if report.marginal {
            resamples += 1;
            continue;
        }
        let mut rec = SampleRecord {
            index,
            edge: report.on_edge,
            subtracting_box: report.witness_box,
            epsilon: None,
            reconstruction_error: None,
            min_margin: report.min_margin(),
            rank_screen_box: rank_screen(&sigma, tol)?.map(|(k, _)| k),
            corollary_satisfied: corollary_bound(&sigma, tol).satisfied,
            split: None,
            resamples,
        };
        if let (Some(k), Some(v)) = (report.witness_box, report.witness_vector.as_ref()) {
            let sub = max_subtraction(&sigma, &sigma.scenario().box_at(k), v, tol)?;
            rec.epsilon = Some(sub.epsilon);
            rec.reconstruction_error = Some(sub.reconstruct()?.max_deviation(&sigma));
        }
        if cfg.kind == MeasurementKind::Povm {
            rec.split = split_check(&state, &m, &sigma, tol)?;
        }
        return Ok(rec);
    }
}

/// Samples three-qubit states of rank `cfg.rank ≥ 3` with random
/// measurements and records, for each, the edge verdict and an explicit LHS
/// subtraction. Any edge verdict is a falsification alarm.
pub fn theorem3_scan(cfg: &ScanConfig, tol: &Tolerances) -> Result<ScanReport> {
    if cfg.rank < 3 || cfg.rank > 8 {
        return Err(Error::InvalidParams(format!("rank must be between 3 and 8, got {}", cfg.rank)));
    }
    if cfg.family == StateFamily::Structured && cfg.rank > 4 {
        return Err(Error::InvalidParams("structured family supports rank 3 or 4".into()));
    }
    let src = RandomSource::new(cfg.seed);
    let samples: Vec<SampleRecord> =
        (0..cfg.samples).into_par_iter().map(|i| run_sample(cfg, &src, i, tol)).collect::<Result<_>>()?;
    Ok(ScanReport {
        config: cfg.clone(),
        rng: src,
        edge_verdicts: samples.iter().filter(|s| s.edge).count(),
        failures: samples.iter().filter(|s| !s.ok()).count(),
        screen_silent: samples.iter().filter(|s| s.rank_screen_box.is_none() && s.corollary_satisfied).count(),
        discarded_borderline: samples.iter().map(|s| s.resamples).sum(),
        samples,
    })
}
