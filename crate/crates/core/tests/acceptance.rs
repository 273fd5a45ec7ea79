//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines are always shown.

mod common;

use nsedge::edge::{
    corollary_bound, det_criteria, max_subtraction, qubit_rectangle_criterion, rank_screen, subtractable_along,
};
use nsedge::linalg::{eigh, robust_rank, CVector, Hermitian};
use nsedge::realization::lemmas::{check_forbidden_forms, check_rank_three_conditionals, check_rank_two_conditionals};
use nsedge::realization::random::{
    haar_unitary, random_lhs_assemblage, random_mixed_state, random_povm, random_pure_state, random_pvm_qubit,
};
use nsedge::realization::{
    random_rank_two_instance, schmidt_check, theorem2_construct, theorem3_scan, theorem4_construct, Construction,
    MeasurementKind, ScanConfig, StateFamily, DEFAULT_MAX_TRIES,
};
use nsedge::witness::{build_witness, canonical_z, lhs_floor};
use nsedge::{
    certify, evaluate, fixtures, is_on_edge, Assemblage, MeasurementSet, RandomSource, Scenario,
    Tolerances, WitnessCertificate,
};
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn golden() -> f64 {
    (3.0 - 5f64.sqrt()) / 2.0
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

/// Instances gathered by criteria 3–5 for the screen soundness check.
#[derive(Default)]
struct Pool {
    assemblages: Vec<Assemblage>,
    /// (screen fired, corollary violated, on edge) from scan records.
    scan_records: Vec<(bool, bool, bool)>,
}

fn criterion1() -> Outcome {
    let t = tol();
    let a = Assemblage::from_quantum(&fixtures::example1_state(), &fixtures::example1_measurements()).map_err(e)?;
    let dev = a.max_deviation(&fixtures::example1_assemblage());
    ensure!(dev <= 1e-12, "blocks deviate by {dev:e}");
    ensure!(is_on_edge(&a, &t).map_err(e)?.on_edge, "example assemblage not on the edge");
    let z = canonical_z(&a, &t).map_err(e)?;
    let zdev = z.max_deviation(&fixtures::example1_z());
    ensure!(zdev <= 1e-12, "Z deviates by {zdev:e}");
    let floor = lhs_floor(&z).map_err(e)?;
    ensure!((floor.epsilon - golden()).abs() <= 1e-9, "floor {} != (3-√5)/2", floor.epsilon);
    let w = build_witness(&z, floor.epsilon).map_err(e)?;
    let shift = Hermitian::identity(2) * (golden() / 4.0);
    let wdev = (0..16).map(|k| (z.block_at(k) - &shift).max_abs_diff(w.block_at(k))).fold(0.0, f64::max);
    ensure!(wdev <= 1e-12, "W deviates from Z - (3-√5)/8·1 by {wdev:e}");
    let mut worst = 0.0f64;
    for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let sp = fixtures::example1_sigma_p(p).map_err(e)?;
        ensure!(is_on_edge(&sp, &t).map_err(e)?.on_edge, "Σ_p not on edge at p = {p}");
        let v = evaluate(&w, &sp).map_err(e)?;
        worst = worst.max((v + golden()).abs());
    }
    ensure!(worst <= 1e-8, "Tr(W Σ_p) off by {worst:e}");
    Ok(format!("ε = {:.12}, max |Tr(WΣ_p) + ε| = {worst:.1e}", floor.epsilon))
}

fn check_certificate(cert: &WitnessCertificate, seed: u64, draws: usize) -> Result<(f64, f64), String> {
    let src = RandomSource::new(seed);
    let mut min = f64::INFINITY;
    for i in 0..draws {
        let lhs = random_lhs_assemblage(cert.scenario(), &mut src.stream(i as u64)).map_err(e)?;
        min = min.min(evaluate(&cert.w, &lhs).map_err(e)?);
    }
    let at_extreme = evaluate(&cert.w, &cert.extreme_point().map_err(e)?).map_err(e)?;
    Ok((min, at_extreme))
}

fn criterion2() -> Outcome {
    let t = tol();
    let src = RandomSource::new(2);
    let mut certs = vec![certify(&fixtures::example1_assemblage(), None, &t).map_err(e)?];
    let mut recipes = Vec::new();
    recipes.push(theorem2_construct(&fixtures::ghz_vector(), &mut src.stream(0), DEFAULT_MAX_TRIES, &t).map_err(e)?);
    for i in 1..5u64 {
        let mut rng = src.stream(i);
        let psi = if i % 2 == 0 { random_product_a(&mut rng) } else { random_pure_state(&[2, 2, 2], &mut rng) };
        recipes.push(theorem2_construct(&psi, &mut rng, DEFAULT_MAX_TRIES, &t).map_err(e)?);
    }
    for i in 5..10u64 {
        let mut rng = src.stream(i);
        let (rho, povms) = random_rank_two_instance(2, &mut rng);
        recipes.push(theorem4_construct(&rho, &povms, &mut rng, DEFAULT_MAX_TRIES, &t).map_err(e)?);
    }
    for r in &recipes {
        certs.push(certify(&r.assemblage().map_err(e)?, None, &t).map_err(e)?);
    }
    ensure!(certs.len() == 11, "only {} certificates available", certs.len());
    let mut worst_min = f64::INFINITY;
    let mut worst_ext = 0.0f64;
    for (k, cert) in certs.iter().enumerate() {
        let (min, ext) = check_certificate(cert, 200 + k as u64, 1000)?;
        ensure!(min >= -1e-9, "certificate {k}: LHS evaluation {min:e}");
        ensure!(ext.abs() <= 1e-8, "certificate {k}: extreme point gives {ext:e}");
        worst_min = worst_min.min(min);
        worst_ext = worst_ext.max(ext.abs());
    }
    Ok(format!("11 certificates × 1000 LHS draws, min Tr(Wσ) = {worst_min:.3e}, max |extreme| = {worst_ext:.1e}"))
}

fn conjugated(a: &Assemblage, u: &nsedge::CMatrix) -> Assemblage {
    Assemblage::new(a.scenario().clone(), a.blocks().iter().map(|b| b.conjugate_by(u)).collect()).unwrap()
}

enum Agreement {
    Borderline,
    Agree(bool),
    Disagree(String),
}

fn three_way(a: &Assemblage, t: &Tolerances) -> Result<Agreement, String> {
    if a.blocks().iter().any(|b| b.trace() >= 1e-12 && robust_rank(b, &t.rank).is_none()) {
        return Ok(Agreement::Borderline);
    }
    let report = is_on_edge(a, t).map_err(e)?;
    let dets = det_criteria(a, t).map_err(e)?;
    if report.marginal || dets.iter().any(|&d| d > 1e-10 && d < 1e-6) {
        return Ok(Agreement::Borderline);
    }
    let kernel = report.on_edge;
    let rectangle = !qubit_rectangle_criterion(a, t).map_err(e)?;
    let det = dets.iter().all(|&d| d >= 1e-6);
    Ok(if kernel == rectangle && kernel == det {
        Agreement::Agree(kernel)
    } else {
        Agreement::Disagree(format!("kernel {kernel}, rectangle {rectangle}, determinant {det}"))
    })
}

fn criterion3(pool: &mut Pool) -> Outcome {
    let t = tol();
    let src = RandomSource::new(3);
    let s = Scenario::binary_bipartite(2);
    let mut resampled = 0;
    let mut on_edge = 0;
    for i in 0..500u64 {
        let mut attempt = 0u64;
        loop {
            let mut rng = src.stream(i * 1000 + attempt);
            let a = match i {
                0..200 => {
                    let rho = random_mixed_state(8, 8, &mut rng).map_err(e)?;
                    let parties: Vec<Vec<_>> = (0..2)
                        .map(|_| {
                            (0..2)
                                .map(|_| if i % 2 == 0 { random_pvm_qubit(&mut rng) } else { random_povm(2, 2, &mut rng).unwrap() })
                                .collect()
                        })
                        .collect();
                    Assemblage::from_quantum(&rho, &MeasurementSet::new(parties).map_err(e)?).map_err(e)?
                }
                200..400 => random_lhs_assemblage(&s, &mut rng).map_err(e)?,
                400..450 => {
                    use rand::Rng;
                    let p: f64 = rng.random();
                    conjugated(&fixtures::example1_sigma_p(p).map_err(e)?, &haar_unitary(2, &mut rng))
                }
                _ => {
                    use rand::Rng;
                    let (rho, a_povms) = random_rank_two_instance(2, &mut rng);
                    let edge = theorem4_construct(&rho, &a_povms, &mut rng, DEFAULT_MAX_TRIES, &t)
                        .map_err(e)?
                        .assemblage()
                        .map_err(e)?;
                    let w: f64 = rng.random_range(0.05..0.95);
                    edge.mix(&random_lhs_assemblage(&s, &mut rng).map_err(e)?, w).map_err(e)?
                }
            };
            match three_way(&a, &t)? {
                Agreement::Borderline => {
                    resampled += 1;
                    attempt += 1;
                    ensure!(attempt < 100, "instance {i}: too many borderline draws");
                }
                Agreement::Disagree(msg) => return Err(format!("instance {i}: {msg}")),
                Agreement::Agree(edge) => {
                    if edge {
                        on_edge += 1;
                    }
                    if (400..450).contains(&i) {
                        ensure!(edge, "instance {i}: rotated mixture left the edge");
                    }
                    pool.assemblages.push(a);
                    break;
                }
            }
        }
    }
    Ok(format!("500 instances agree ({on_edge} on edge), {resampled} borderline resampled"))
}

fn scan_part(
    rank: usize,
    samples: usize,
    kind: MeasurementKind,
    family: StateFamily,
    first_stream: u64,
    pool: &mut Pool,
) -> Result<(usize, usize), String> {
    let cfg = ScanConfig { samples, rank, kind, family, seed: 4, first_stream };
    let report = theorem3_scan(&cfg, &tol()).map_err(e)?;
    ensure!(report.edge_verdicts == 0, "rank {rank} {kind:?} {family:?}: {} edge verdicts", report.edge_verdicts);
    ensure!(report.failures == 0, "rank {rank} {kind:?} {family:?}: {} samples without certificate", report.failures);
    for r in &report.samples {
        ensure!(r.reconstruction_error.is_some_and(|x| x <= 1e-9), "sample {} reconstruction", r.index);
        pool.scan_records.push((r.rank_screen_box.is_some(), !r.corollary_satisfied, r.edge));
    }
    Ok((report.samples.len(), report.discarded_borderline))
}

fn criterion4(pool: &mut Pool) -> Outcome {
    use MeasurementKind::*;
    use StateFamily::*;
    let parts = [
        (3, 250, Pvm, Generic, 0),
        (3, 250, Pvm, Structured, 10_000),
        (4, 100, Pvm, Generic, 20_000),
        (4, 100, Pvm, Structured, 30_000),
        (3, 100, Povm, Generic, 40_000),
        (3, 100, Povm, Structured, 50_000),
    ];
    let (mut total, mut discarded) = (0, 0);
    for (rank, n, kind, family, stream) in parts {
        let (s, d) = scan_part(rank, n, kind, family, stream, pool)?;
        total += s;
        discarded += d;
    }
    Ok(format!("{total} samples, 0 edge verdicts, every sample certified, {discarded} borderline redrawn"))
}

fn random_product_a<R: rand::Rng>(rng: &mut R) -> CVector {
    loop {
        let a = random_pure_state(&[2], rng);
        let bc = random_pure_state(&[2, 2], rng);
        if schmidt_check(&bc, &[2, 2], &[0], &Default::default()).rank == 2 {
            return a.kronecker(&bc);
        }
    }
}

fn criterion5(pool: &mut Pool) -> Outcome {
    let t = tol();
    let src = RandomSource::new(5);
    let mut recipes = Vec::new();
    let mut max_tries = 0;
    for i in 0..50u64 {
        let mut rng = src.stream(i);
        let psi = random_product_a(&mut rng);
        let r = theorem2_construct(&psi, &mut rng, DEFAULT_MAX_TRIES, &t).map_err(e)?;
        ensure!(r.provenance == Construction::ProductA.label(), "product input {i} took {}", r.provenance);
        recipes.push(r);
    }
    let mut entangled = vec![fixtures::ghz_vector()];
    for i in 0..20u64 {
        entangled.push(random_pure_state(&[2, 2, 2], &mut src.stream(100 + i)));
    }
    for (i, psi) in entangled.iter().enumerate() {
        let r = theorem2_construct(psi, &mut src.stream(200 + i as u64), DEFAULT_MAX_TRIES, &t)
            .map_err(|err| format!("entangled input {i}: {err}"))?;
        max_tries = max_tries.max(r.tries);
        recipes.push(r);
    }
    let a_povms = fixtures::example1_measurements().party(0).to_vec();
    recipes.push(
        theorem4_construct(&fixtures::example1_state(), &a_povms, &mut src.stream(300), DEFAULT_MAX_TRIES, &t)
            .map_err(|err| format!("example state: {err}"))?,
    );
    for i in 0..20u64 {
        let mut rng = src.stream(400 + i);
        let (rho, povms) = random_rank_two_instance(2, &mut rng);
        recipes.push(
            theorem4_construct(&rho, &povms, &mut rng, DEFAULT_MAX_TRIES, &t)
                .map_err(|err| format!("rank-two input {i}: {err}"))?,
        );
    }
    for (k, r) in recipes.iter().enumerate() {
        let a = r.assemblage().map_err(e)?;
        ensure!(is_on_edge(&a, &t).map_err(e)?.on_edge, "recipe {k} not on edge");
        pool.assemblages.push(a);
    }
    Ok(format!("{} recipes verified on the edge, search needed at most {max_tries} tries", recipes.len()))
}

fn criterion6(pool: &Pool) -> Outcome {
    let t = tol();
    let mut silent_not_edge = 0;
    let mut fired = 0;
    for (k, a) in pool.assemblages.iter().enumerate() {
        let edge = is_on_edge(a, &t).map_err(e)?.on_edge;
        let screen = rank_screen(a, &t).map_err(e)?.is_some();
        let corollary_violated = !corollary_bound(a, &t).satisfied;
        ensure!(!(screen && edge), "instance {k}: rank screen fired on an edge assemblage");
        ensure!(!(corollary_violated && edge), "instance {k}: rank bound violated on an edge assemblage");
        fired += usize::from(screen || corollary_violated);
        silent_not_edge += usize::from(!screen && !corollary_violated && !edge);
    }
    for (k, &(screen, violated, edge)) in pool.scan_records.iter().enumerate() {
        ensure!(!((screen || violated) && edge), "scan sample {k}: screen fired on an edge verdict");
        fired += usize::from(screen || violated);
        silent_not_edge += usize::from(!screen && !violated && !edge);
    }
    ensure!(silent_not_edge > 0, "no instance with silent screens off the edge");
    let total = pool.assemblages.len() + pool.scan_records.len();
    Ok(format!("{total} instances, screens fired {fired} times, {silent_not_edge} silent but off the edge"))
}

fn criterion7() -> Outcome {
    let t = tol();
    let src = RandomSource::new(7);
    let mut worst = 0.0f64;
    let mut done = 0;
    let mut attempt = 0u64;
    while done < 200 {
        attempt += 1;
        ensure!(attempt < 2000, "too few usable instances");
        let mut rng = src.stream(attempt);
        let d = if attempt.is_multiple_of(3) { 3 } else { 2 };
        let s = Scenario::binary_bipartite(d);
        let lhs = random_lhs_assemblage(&s, &mut rng).map_err(e)?;
        let a = if d == 2 && attempt.is_multiple_of(2) {
            use rand::Rng;
            let w: f64 = rng.random_range(0.05..0.95);
            fixtures::example1_assemblage().mix(&lhs, w).map_err(e)?
        } else {
            lhs
        };
        let report = is_on_edge(&a, &t).map_err(e)?;
        ensure!(!report.on_edge, "instance {attempt} unexpectedly on the edge");
        if report.marginal {
            continue;
        }
        let l = s.box_at(report.witness_box.expect("off-edge verdict names a box"));
        let Some(psi) = subtractable_along(&a, &l, &t).map_err(e)? else { continue };
        let res = max_subtraction(&a, &l, &psi, &t).map_err(e)?;
        let oracle = common::bisection_epsilon(&a, &l.responses, &res.vector);
        let diff = (oracle - res.epsilon).abs();
        ensure!(diff <= 1e-7, "instance {attempt}: ε {} vs oracle {oracle}", res.epsilon);
        let zero = s
            .support_indices(&l)
            .into_iter()
            .map(|i| eigh(res.residual.block_at(i)).min().abs())
            .fold(f64::INFINITY, f64::min);
        ensure!(zero <= 1e-8, "instance {attempt}: residual has no zero eigenvalue on the support ({zero:e})");
        worst = worst.max(diff);
        done += 1;
    }
    Ok(format!("200 instances, max |ε - bisection| = {worst:.1e}"))
}

fn criterion8() -> Outcome {
    let t = tol();
    let pr = fixtures::pr_box_d1();
    ensure!(is_on_edge(&pr, &t).map_err(e)?.on_edge, "PR box not on edge");
    ensure!(common::scalar_rectangle_oracle(&pr), "oracle disagrees on the PR box");
    let s = Scenario::binary_bipartite(1);
    for k in 0..16 {
        let a = Assemblage::deterministic(&s, &s.box_at(k), &Hermitian::identity(1)).map_err(e)?;
        ensure!(!is_on_edge(&a, &t).map_err(e)?.on_edge, "deterministic box {k} on edge");
        ensure!(!common::scalar_rectangle_oracle(&a), "oracle says box {k} on edge");
        let mix = pr.mix(&a, 0.5).map_err(e)?;
        ensure!(
            is_on_edge(&mix, &t).map_err(e)?.on_edge == common::scalar_rectangle_oracle(&mix),
            "verdicts differ on PR/box {k} mixture"
        );
    }
    Ok("PR box on edge, 16 deterministic boxes off, oracle agrees on 33 assemblages".into())
}

fn criterion9() -> Outcome {
    let t = tol();
    let reports = [
        check_rank_three_conditionals(1000, 91, &t).map_err(e)?,
        check_rank_two_conditionals(1000, 92, &t).map_err(e)?,
        check_forbidden_forms(1000, 93, &t).map_err(e)?,
    ];
    let mut parts = Vec::new();
    for r in &reports {
        ensure!(r.violations == 0, "{}: {} violations", r.name, r.violations);
        ensure!(r.premise_hits > 0, "{}: premise never exercised", r.name);
        parts.push(format!("{} hits/{} resampled", r.premise_hits, r.borderline_resampled));
    }
    Ok(format!("3 × 1000 draws, 0 violations ({})", parts.join(", ")))
}

fn report(id: usize, title: &str, limit: Duration, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = run();
    let elapsed = start.elapsed();
    let (ok, detail) = match outcome {
        Ok(d) if elapsed <= limit => (true, d),
        Ok(d) => (false, format!("{d}; took {elapsed:.1?}, limit {limit:?}")),
        Err(d) => (false, d),
    };
    println!("{} criterion {id}: {title}: {detail} [{elapsed:.2?}]", if ok { "PASS" } else { "FAIL" });
    ok
}

fn main() {
    let mut pool = Pool::default();
    let secs = Duration::from_secs;
    let mut ok = true;
    ok &= report(1, "example reproduction", secs(1), criterion1);
    ok &= report(2, "witness soundness", secs(30), criterion2);
    ok &= report(3, "three-way edge agreement", secs(60), || criterion3(&mut pool));
    ok &= report(4, "rank ≥ 3 no-go scan", secs(300), || criterion4(&mut pool));
    ok &= report(5, "edge constructions", secs(300), || criterion5(&mut pool));
    ok &= report(6, "screens sound, not complete", secs(60), || criterion6(&pool));
    ok &= report(7, "subtraction maximality", secs(60), criterion7);
    ok &= report(8, "scalar trusted system", secs(1), criterion8);
    ok &= report(9, "rank-pattern checks", secs(120), criterion9);
    if !ok {
        std::process::exit(1);
    }
}
