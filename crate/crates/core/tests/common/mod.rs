//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nsedge::linalg::{eigh, kron_all, min_eigenvalue, CMatrix, CVector, Hermitian, C64};
use nsedge::{Assemblage, Scenario, WitnessBlock};

/// Blocks by explicit Kronecker products and an index-level partial trace
/// over every factor but the last.
pub fn naive_blocks(rho: &Hermitian, parties: &[Vec<Vec<Hermitian>>]) -> Vec<CMatrix> {
    let dims: Vec<usize> = parties.iter().map(|p| p[0][0].dim()).collect();
    let du: usize = dims.iter().product();
    let d = rho.dim() / du;
    let settings: Vec<usize> = parties.iter().map(|p| p.len()).collect();
    let outcomes: Vec<usize> = parties.iter().map(|p| p[0].len()).collect();
    let s = Scenario::new(settings, outcomes, d).unwrap();
    s.positions()
        .map(|pos| {
            let mut factors: Vec<CMatrix> = (0..parties.len())
                .map(|i| parties[i][pos.settings[i]][pos.outcomes[i]].matrix().clone())
                .collect();
            factors.push(CMatrix::identity(d, d));
            let full = kron_all(factors.iter()) * rho.matrix();
            let mut out = CMatrix::zeros(d, d);
            for k in 0..du {
                for i in 0..d {
                    for j in 0..d {
                        out[(i, j)] += full[(k * d + i, k * d + j)];
                    }
                }
            }
            out
        })
        .collect()
}

/// All response tables `f_i: settings -> outcomes`, built by counting in
/// mixed radix rather than through the library's box indexing.
pub fn all_response_tables(s: &Scenario) -> Vec<Vec<Vec<usize>>> {
    let radix: Vec<usize> =
        s.settings().iter().zip(s.outcomes()).flat_map(|(&x, &a)| std::iter::repeat_n(a, x)).collect();
    let total: usize = radix.iter().product();
    (0..total)
        .map(|mut k| {
            let mut flat = vec![0; radix.len()];
            for j in (0..radix.len()).rev() {
                flat[j] = k % radix[j];
                k /= radix[j];
            }
            let mut tables = Vec::new();
            let mut it = flat.into_iter();
            for &x in s.settings() {
                tables.push((0..x).map(|_| it.next().unwrap()).collect());
            }
            tables
        })
        .collect()
}

fn in_support(tables: &[Vec<usize>], outcomes: &[usize], settings: &[usize]) -> bool {
    tables.iter().zip(outcomes.iter().zip(settings)).all(|(f, (&a, &x))| f[x] == a)
}

/// `min_L λ_min(Σ_{a|x: a = f(x)} Z_{a|x})` by direct enumeration.
pub fn brute_floor(z: &WitnessBlock) -> f64 {
    let s = z.scenario();
    all_response_tables(s)
        .iter()
        .map(|t| {
            let mut sum = Hermitian::zeros(s.trusted_dim());
            for (k, pos) in s.positions().enumerate() {
                if in_support(t, &pos.outcomes, &pos.settings) {
                    sum += z.block_at(k);
                }
            }
            min_eigenvalue(&sum)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `d = 1` edge test: on the edge iff every response table meets a zero entry.
pub fn scalar_rectangle_oracle(a: &Assemblage) -> bool {
    let s = a.scenario();
    all_response_tables(s).iter().all(|t| {
        s.positions()
            .enumerate()
            .any(|(k, pos)| in_support(t, &pos.outcomes, &pos.settings) && a.block_at(k).trace() <= 1e-12)
    })
}

/// Largest `ε` keeping `σ - ε·p_L ⊗ |ψ⟩⟨ψ|` positive, by bisection on the
/// smallest eigenvalue.
pub fn bisection_epsilon(a: &Assemblage, tables: &[Vec<usize>], psi: &CVector) -> f64 {
    let s = a.scenario();
    let proj = Hermitian::ket_projector(psi);
    let ok = |eps: f64| {
        s.positions().enumerate().all(|(k, pos)| {
            if !in_support(tables, &pos.outcomes, &pos.settings) {
                return true;
            }
            let m = a.block_at(k) - &(&proj * eps);
            eigh(&m).min() >= -1e-13
        })
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    if ok(hi) {
        return hi;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn max_entry_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z: &C64| z.norm()).fold(0.0, f64::max)
}
