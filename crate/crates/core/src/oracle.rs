//! Slow, independent reference computations used by the test suites and by
//! exact-mode certification. Each uses a different route from the code it
//! checks: Jacobi rotations instead of power iteration, full subset
//! enumeration instead of sorted prefixes, numeric search instead of
//! line crossings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cutalg::IndexSet;
use crate::error::{Error, Result};
use crate::graphreg::{CompressedGraph, Graph};
use crate::matcore::{frobenius_norm, Matrix};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub max_evaluations: u64,
    pub max_dim: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_evaluations: 10_000_000,
            max_dim: 14,
        }
    }
}

pub const JACOBI_SWEEPS: usize = 100;

/// All singular values, descending, from cyclic Jacobi on the smaller Gram matrix.
pub fn exact_singular_values(a: &Matrix) -> Result<Vec<f64>> {
    let small = a.rows().min(a.cols());
    if small > 16 {
        return Err(Error::budget("exact_singular_values", small, 16));
    }
    let (m, n) = a.shape();
    let mut g = vec![vec![0.0; small]; small];
    for p in 0..small {
        for q in 0..small {
            g[p][q] = if m <= n {
                (0..n).map(|k| a[(p, k)] * a[(q, k)]).sum()
            } else {
                (0..m).map(|k| a[(k, p)] * a[(k, q)]).sum()
            };
        }
    }
    let fro2 = frobenius_norm(a).powi(2);
    let mut converged = false;
    for _ in 0..JACOBI_SWEEPS {
        let off: f64 = (0..small)
            .flat_map(|p| (0..small).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| g[p][q] * g[p][q])
            .sum();
        if off.sqrt() <= 1e-15 * fro2.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        for p in 0..small {
            for q in p + 1..small {
                if g[p][q] == 0.0 {
                    continue;
                }
                let theta = (g[q][q] - g[p][p]) / (2.0 * g[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..small {
                    let (gkp, gkq) = (g[k][p], g[k][q]);
                    g[k][p] = c * gkp - s * gkq;
                    g[k][q] = s * gkp + c * gkq;
                }
                for k in 0..small {
                    let (gpk, gqk) = (g[p][k], g[q][k]);
                    g[p][k] = c * gpk - s * gqk;
                    g[q][k] = s * gpk + c * gqk;
                }
            }
        }
    }
    if !converged {
        return Err(Error::JacobiConvergence {
            sweeps: JACOBI_SWEEPS,
        });
    }
    let mut sv: Vec<f64> = (0..small).map(|i| g[i][i].max(0.0).sqrt()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    let mass: f64 = sv.iter().map(|s| s * s).sum();
    if (mass - fro2).abs() > 1e-9 * fro2.max(f64::MIN_POSITIVE) {
        return Err(Error::Domain(format!(
            "singular values lose Frobenius mass: {mass} vs {fro2}"
        )));
    }
    Ok(sv)
}

/// `max |Σ_{i∈s} w_i| / √|s|` over every nonempty subset.
pub fn exhaustive_best_subset_ratio(w: &[f64]) -> Result<(f64, IndexSet)> {
    if w.is_empty() || w.len() > 14 {
        return Err(Error::budget(
            "exhaustive_best_subset_ratio",
            w.len(),
            "1..=14",
        ));
    }
    let mut best = (f64::NEG_INFINITY, 0u64);
    for mask in 1u64..(1 << w.len()) {
        let sum: f64 = (0..w.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| w[i])
            .sum();
        let v = sum.abs() / (mask.count_ones() as f64).sqrt();
        if v > best.0 + 1e-12 {
            best = (v, mask);
        }
    }
    Ok((best.0, IndexSet::from_mask(best.1)))
}

/// `‖A‖_■[1]` and `‖A‖_□` by visiting every pair of nonempty index subsets.
pub fn exhaustive_cut_norms(a: &Matrix, budget: &OracleBudget) -> Result<(f64, f64)> {
    let (m, n) = a.shape();
    if m > 20 || n > 20 {
        return Err(Error::budget(
            "exhaustive_cut_norms",
            format!("{m}x{n}"),
            "20 per side",
        ));
    }
    let pairs = ((1u64 << m) - 1) * ((1u64 << n) - 1);
    if pairs > budget.max_evaluations {
        return Err(Error::budget(
            "exhaustive_cut_norms",
            pairs,
            budget.max_evaluations,
        ));
    }
    let mut normalized = 0.0f64;
    let mut classical = 0.0f64;
    for s in 1u64..(1 << m) {
        let rows = s.count_ones() as f64;
        let w: Vec<f64> = (0..n)
            .map(|j| (0..m).filter(|i| s >> i & 1 == 1).map(|i| a[(i, j)]).sum())
            .collect();
        let mut sum = 0.0;
        let mut t = 0u64;
        for g in 1u64..(1 << n) {
            let bit = g.trailing_zeros() as usize;
            t ^= 1 << bit;
            if t >> bit & 1 == 1 {
                sum += w[bit];
            } else {
                sum -= w[bit];
            }
            let cols = t.count_ones() as f64;
            normalized = normalized.max(sum.abs() / (rows * cols).sqrt());
            classical = classical.max(sum.abs());
        }
    }
    Ok((normalized, classical))
}

fn block(g: &Graph, vi: &IndexSet, vj: &IndexSet) -> Vec<Vec<f64>> {
    vi.as_slice()
        .iter()
        .map(|&u| {
            vj.as_slice()
                .iter()
                .map(|&v| g.adjacency()[(u, v)])
                .collect()
        })
        .collect()
}

/// `min_c max_{S,T} |e(S,T) − c|S||T||` by full enumeration of `(S, T)` and
/// a numeric search over `c`.
pub fn exhaustive_discrepancy(g: &Graph, vi: &IndexSet, vj: &IndexSet) -> Result<f64> {
    if vi.len() + vj.len() > 20 {
        return Err(Error::budget(
            "exhaustive_discrepancy",
            vi.len() + vj.len(),
            20,
        ));
    }
    let b = block(g, vi, vj);
    let (ra, cb) = (vi.len(), vj.len());
    // p = |S||T| ↦ (min e, max e)
    let mut range: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for s in 1u64..(1 << ra) {
        let w: Vec<f64> = (0..cb)
            .map(|j| (0..ra).filter(|i| s >> i & 1 == 1).map(|i| b[i][j]).sum())
            .collect();
        let mut e = 0.0;
        let mut t = 0u64;
        for gi in 1u64..(1 << cb) {
            let bit = gi.trailing_zeros() as usize;
            t ^= 1 << bit;
            e += if t >> bit & 1 == 1 { w[bit] } else { -w[bit] };
            let p = s.count_ones() as u64 * t.count_ones() as u64;
            let r = range.entry(p).or_insert((e, e));
            r.0 = r.0.min(e);
            r.1 = r.1.max(e);
        }
    }
    if range.is_empty() {
        return Ok(0.0);
    }
    let lines: Vec<(f64, f64, f64)> = range
        .iter()
        .map(|(&p, &(lo, hi))| (p as f64, lo, hi))
        .collect();
    let phi = |c: f64| {
        lines
            .iter()
            .map(|&(p, lo, hi)| (hi - c * p).max(c * p - lo))
            .fold(0.0, f64::max)
    };
    let mut lo = lines
        .iter()
        .map(|&(p, l, _)| l / p)
        .fold(f64::INFINITY, f64::min);
    let mut hi = lines
        .iter()
        .map(|&(p, _, h)| h / p)
        .fold(f64::NEG_INFINITY, f64::max);
    // dense grid, three refinements
    for _ in 0..3 {
        const STEPS: usize = 200;
        let step = (hi - lo) / STEPS as f64;
        if step <= 0.0 {
            break;
        }
        let best = (0..=STEPS)
            .map(|k| (k, phi(lo + step * k as f64)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap()
            .0;
        let centre = lo + step * best as f64;
        lo = centre - step;
        hi = centre + step;
    }
    // golden-section on the bracket
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut bnd) = (lo, hi);
    for _ in 0..200 {
        let c1 = bnd - inv_phi * (bnd - a);
        let c2 = a + inv_phi * (bnd - a);
        if phi(c1) <= phi(c2) {
            bnd = c2;
        } else {
            a = c1;
        }
        if bnd - a <= f64::EPSILON * (1.0 + a.abs()) {
            break;
        }
    }
    let c_star = 0.5 * (a + bnd);
    // exact crossing of the two lines active at c*
    let down = lines
        .iter()
        .max_by(|x, y| (x.2 - c_star * x.0).total_cmp(&(y.2 - c_star * y.0)))
        .unwrap();
    let up = lines
        .iter()
        .max_by(|x, y| (c_star * x.0 - x.1).total_cmp(&(c_star * y.0 - y.1)))
        .unwrap();
    let crossing = (down.2 + up.1) / (down.0 + up.0);
    Ok(phi(c_star).min(phi(crossing)))
}

/// `max_{S,T ⊆ V} |e(S,T) − ê(S,T)|` over all `4^n` pairs.
pub fn exhaustive_compression_error(g: &Graph, cg: &CompressedGraph) -> Result<f64> {
    let n = g.n();
    if n > 12 {
        return Err(Error::budget("exhaustive_compression_error", n, 12));
    }
    if cg.partition.n() != n {
        return Err(Error::Dimension(
            "compression is for a different node count".into(),
        ));
    }
    let part = cg.partition.part_of();
    // d[i][j] = A_ij − c(part i, part j)
    let d: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| g.adjacency()[(i, j)] - cg.c[part[i]][part[j]])
                .collect()
        })
        .collect();
    let mut worst = 0.0f64;
    let mut row = vec![0.0; n];
    let mut s = 0u64;
    for gs in 0u64..(1 << n) {
        if gs > 0 {
            let bit = gs.trailing_zeros() as usize;
            s ^= 1 << bit;
            let sign = if s >> bit & 1 == 1 { 1.0 } else { -1.0 };
            row.iter_mut()
                .zip(&d[bit])
                .for_each(|(r, x)| *r += sign * x);
        }
        let mut sum = 0.0;
        let mut t = 0u64;
        for gt in 1u64..(1 << n) {
            let bit = gt.trailing_zeros() as usize;
            t ^= 1 << bit;
            sum += if t >> bit & 1 == 1 {
                row[bit]
            } else {
                -row[bit]
            };
            worst = worst.max(sum.abs());
        }
    }
    Ok(worst)
}
