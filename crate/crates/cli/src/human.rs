//! Plain-text rendering. Numbers carry 6 significant digits; `--json`
//! output keeps full precision.

use nsedge::edge::EdgeDiagnostics;
use nsedge::realization::ScanReport;
use nsedge::{
    Assemblage, CMatrix, CVector, DeterministicBox, EdgeReport, RealizationRecipe, Scenario, SubtractionResult,
    ValidationReport, WitnessBlock, WitnessCertificate, C64,
};
use serde_json::Value;
use std::fmt::Write;

/// `x` with 6 significant digits, switching to exponent form for very small
/// or large magnitudes.
pub fn sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn complex(z: C64) -> String {
    if z.im.abs() < 1e-15 {
        sig(z.re)
    } else if z.re.abs() < 1e-15 {
        format!("{}i", sig(z.im))
    } else {
        let sign = if z.im < 0.0 { '-' } else { '+' };
        format!("{}{sign}{}i", sig(z.re), sig(z.im.abs()))
    }
}

fn matrix(m: &CMatrix, indent: &str) -> String {
    let cells: Vec<Vec<String>> =
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| complex(m[(i, j)])).collect()).collect();
    let width = cells.iter().flatten().map(|c| c.len()).max().unwrap_or(1);
    let mut out = String::new();
    for row in cells {
        let line: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
        let _ = writeln!(out, "{indent}[ {} ]", line.join("  "));
    }
    out
}

fn vector(v: &CVector) -> String {
    format!("({})", v.iter().map(|&z| complex(z)).collect::<Vec<_>>().join(", "))
}

fn blocks(s: &Scenario, items: &[nsedge::Hermitian]) -> String {
    let mut out = String::new();
    for (pos, b) in s.positions().zip(items) {
        let _ = writeln!(out, "  {}:", s.position_label(&pos));
        out.push_str(&matrix(b.matrix(), "    "));
    }
    out
}

fn responses(l: &DeterministicBox) -> String {
    l.responses
        .iter()
        .map(|f| f.iter().map(|a| a.to_string()).collect::<String>())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn validation(r: &ValidationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", if r.is_valid() { "VALID" } else { "INVALID" });
    let _ = writeln!(
        out,
        "  positivity {}, normalization {}, no-signaling {}; worst violation {}",
        ok(r.psd_ok),
        ok(r.normalization_ok),
        ok(r.no_signaling_ok),
        sig(r.worst_violation)
    );
    for v in &r.violations {
        let _ = writeln!(out, "  {:?} at {}: {}", v.kind, v.position, sig(v.magnitude));
    }
    out
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "violated"
    }
}

pub fn edge(r: &EdgeReport, epsilon: Option<f64>, diag: Option<&EdgeDiagnostics>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "on_edge: {}", r.on_edge);
    if r.marginal {
        let _ = writeln!(out, "  warning: some box margin lies within 10x the intersection tolerance");
    }
    let _ = writeln!(out, "  boxes: {}, smallest margin {}", r.per_box.len(), sig(r.min_margin()));
    if let Some(k) = r.witness_box {
        let _ = writeln!(out, "  subtractable along box {k}");
    }
    if let Some(v) = &r.witness_vector {
        let _ = writeln!(out, "  vector {}", vector(v));
    }
    if let Some(e) = epsilon {
        let _ = writeln!(out, "  epsilon {}", sig(e));
    }
    if let Some(d) = diag {
        let _ = writeln!(out, "diagnostics:");
        let _ = writeln!(out, "  min |det(prod R - 1)| over boxes: {}", sig(d.min_det));
        match d.rank_screen_box {
            Some(k) => {
                let _ = writeln!(out, "  rank screen: box {k} has too much rank to be blocked");
            }
            None => {
                let _ = writeln!(out, "  rank screen: silent");
            }
        }
        let _ = writeln!(
            out,
            "  total rank {} vs bound {} ({})",
            d.corollary.lhs_sum,
            d.corollary.bound,
            if d.corollary.satisfied { "satisfied" } else { "violated: not on edge" }
        );
        if let Some(q) = d.qubit_rectangle {
            let _ = writeln!(out, "  qubit rectangle rule: {}", if q { "subtractable" } else { "blocked" });
        }
    }
    out
}

pub fn subtraction(a: &Assemblage, r: &SubtractionResult) -> String {
    let s = a.scenario();
    let mut out = String::new();
    let _ = writeln!(out, "box {} (responses {})", r.box_index, responses(&r.lhs_box));
    let _ = writeln!(out, "epsilon {}", sig(r.epsilon));
    let _ = writeln!(out, "vector {}", vector(&r.vector));
    let _ = writeln!(out, "tight at {}", s.position_label(&s.position_at(r.tight_position)));
    let _ = writeln!(out, "residual:");
    out.push_str(&blocks(s, r.residual.blocks()));
    out
}

fn witness_blocks(w: &WitnessBlock) -> String {
    blocks(w.scenario(), w.blocks())
}

pub fn witness(c: &WitnessCertificate, check: Option<&Value>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "epsilon {} (floor {})", sig(c.epsilon), sig(c.floor));
    let _ = writeln!(out, "argmin box {} (responses {})", c.argmin_index, responses(&c.argmin_box));
    let _ = writeln!(out, "extreme vector {}", vector(&c.extreme_vector));
    let _ = writeln!(out, "Z:");
    out.push_str(&witness_blocks(&c.z));
    let _ = writeln!(out, "W:");
    out.push_str(&witness_blocks(&c.w));
    if let Some(v) = check {
        let min = v["min"].as_f64().unwrap_or(f64::NAN);
        let _ = writeln!(out, "LHS check: {} samples, min Tr(W σ) = {}", v["samples"], sig(min));
    }
    out
}

pub fn recipe(r: &RealizationRecipe) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "construction {} after {} tries", r.provenance, r.tries);
    for i in 0..r.measurements.parties() {
        for (x, povm) in r.measurements.party(i).iter().enumerate() {
            let _ = writeln!(out, "party {i} setting {x}:");
            for (a, e) in povm.iter().enumerate() {
                let _ = writeln!(out, "  outcome {a}:");
                out.push_str(&matrix(e.matrix(), "    "));
            }
        }
    }
    out
}

pub fn scan(r: &ScanReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}: {} samples, rank {}, {:?} measurements, {:?} states, seed {}",
        if r.passed() { "PASS" } else { "ALARM" },
        r.samples.len(),
        r.config.rank,
        r.config.kind,
        r.config.family,
        r.config.seed
    );
    let _ = writeln!(out, "  edge verdicts {}, uncertified samples {}", r.edge_verdicts, r.failures);
    let _ = writeln!(out, "  rank screens silent on {}, borderline redrawn {}", r.screen_silent, r.discarded_borderline);
    let eps = r.samples.iter().filter_map(|s| s.epsilon).fold(f64::INFINITY, f64::min);
    if eps.is_finite() {
        let _ = writeln!(out, "  smallest subtracted epsilon {}", sig(eps));
    }
    out
}

pub fn boxes(s: &Scenario, list: &[DeterministicBox]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} deterministic boxes (settings {:?}, outcomes {:?})", list.len(), s.settings(), s.outcomes());
    for (k, l) in list.iter().enumerate() {
        let _ = writeln!(out, "  {k:>4}: {}", responses(l));
    }
    out
}
