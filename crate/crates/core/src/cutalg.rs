//! Cut matrices and the norms built from them.
//!
//! A cut atom is a coefficient times the indicator of a `rows × cols` block.
//! Exact searches enumerate row subsets as bitmasks in Gray-code order and
//! choose the column subset in closed form: for a fixed row set with column
//! sums `w`, the best column set for `|Σ_{j∈T} w_j| / √|T|` is a prefix of
//! the columns sorted by `w` (descending for the positive sign, ascending
//! for the negative one).

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{frobenius_norm, Matrix, SpanProjector};
use crate::mix_seed;
use crate::oracle::OracleBudget;

/// Objectives within this distance count as tied.
pub const TIE_TOL: f64 = 1e-12;
pub const DEFAULT_RESTARTS: usize = 32;

/// Sorted, duplicate-free set of row or column indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new(mut idx: Vec<usize>) -> Self {
        idx.sort_unstable();
        idx.dedup();
        IndexSet(idx)
    }

    pub fn full(n: usize) -> Self {
        IndexSet((0..n).collect())
    }

    pub fn from_mask(mask: u64) -> Self {
        IndexSet((0..64).filter(|b| mask >> b & 1 == 1).collect())
    }

    /// Bitmask form; `None` when an index does not fit in 64 bits.
    pub fn mask(&self) -> Option<u64> {
        self.0
            .iter()
            .try_fold(0u64, |m, &i| (i < 64).then(|| m | 1 << i))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn largest(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn indicator(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for &i in &self.0 {
            v[i] = 1.0;
        }
        v
    }
}

impl From<Vec<usize>> for IndexSet {
    fn from(v: Vec<usize>) -> Self {
        IndexSet::new(v)
    }
}

impl<const N: usize> From<[usize; N]> for IndexSet {
    fn from(v: [usize; N]) -> Self {
        IndexSet::new(v.to_vec())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutAtom {
    pub rows: IndexSet,
    pub cols: IndexSet,
    pub coeff: f64,
}

impl CutAtom {
    pub fn new(rows: impl Into<IndexSet>, cols: impl Into<IndexSet>, coeff: f64) -> Result<Self> {
        let (rows, cols) = (rows.into(), cols.into());
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::Domain(
                "cut atom needs nonempty row and column sets".into(),
            ));
        }
        if !coeff.is_finite() {
            return Err(Error::Domain("cut atom coefficient must be finite".into()));
        }
        Ok(Self { rows, cols, coeff })
    }

    /// Unit-coefficient indicator of the atom's block.
    pub fn indicator(&self, rows: usize, cols: usize) -> Matrix {
        block_indicator(&self.rows, &self.cols, rows, cols)
    }
}

pub(crate) fn block_indicator(r: &IndexSet, c: &IndexSet, rows: usize, cols: usize) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for &i in r.as_slice() {
        for &j in c.as_slice() {
            m[(i, j)] = 1.0;
        }
    }
    m
}

/// Ordered sum of cut atoms over a fixed shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutDecomposition {
    pub rows: usize,
    pub cols: usize,
    pub atoms: Vec<CutAtom>,
}

impl CutDecomposition {
    pub fn new(rows: usize, cols: usize, atoms: Vec<CutAtom>) -> Result<Self> {
        let d = Self {
            rows,
            cols,
            atoms: Vec::new(),
        };
        let mut d = d;
        for a in atoms {
            d.push(a)?;
        }
        Ok(d)
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            atoms: Vec::new(),
        }
    }

    pub fn push(&mut self, atom: CutAtom) -> Result<()> {
        if atom.rows.largest().is_some_and(|i| i >= self.rows)
            || atom.cols.largest().is_some_and(|j| j >= self.cols)
        {
            return Err(Error::Dimension(format!(
                "cut atom exceeds {}x{} shape",
                self.rows, self.cols
            )));
        }
        if atom.rows.is_empty() || atom.cols.is_empty() {
            return Err(Error::Domain(
                "cut atom needs nonempty row and column sets".into(),
            ));
        }
        self.atoms.push(atom);
        Ok(())
    }

    /// Upper bound on the cutrank of the represented matrix.
    pub fn cutrank_witness(&self) -> usize {
        self.atoms.len()
    }

    /// Dense matrix `Σ coeff · 1_rows 1_colsᵀ`, summed in atom order.
    pub fn realize(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows, self.cols);
        for a in &self.atoms {
            for &i in a.rows.as_slice() {
                for &j in a.cols.as_slice() {
                    m[(i, j)] += a.coeff;
                }
            }
        }
        m
    }
}

/// A normalized-cut value and the block attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct CutWitness {
    pub value: f64,
    pub rows: IndexSet,
    pub cols: IndexSet,
}

fn mask_to_set(mask: u32) -> IndexSet {
    IndexSet::from_mask(mask as u64)
}

fn check_dims(a: &Matrix, budget: &OracleBudget, what: &'static str) -> Result<()> {
    let d = a.rows().max(a.cols());
    if d > budget.max_dim {
        return Err(Error::budget(
            what,
            format!("{}x{}", a.rows(), a.cols()),
            format!("{} per side (use cut_norm_heuristic)", budget.max_dim),
        ));
    }
    Ok(())
}

/// Column sums over the rows in `mask`.
fn masked_col_sums(a: &Matrix, mask: u32) -> Vec<f64> {
    let mut w = vec![0.0; a.cols()];
    for i in 0..a.rows() {
        if mask >> i & 1 == 1 {
            w.iter_mut().zip(a.row(i)).for_each(|(x, y)| *x += y);
        }
    }
    w
}

/// Visits every nonempty row mask of an `m`-row matrix with its column-sum
/// vector, splitting Gray-code order into chunks evaluated in parallel.
fn gray_map<T: Send>(a: &Matrix, f: impl Fn(u32, &[f64]) -> T + Sync) -> Vec<(u32, T)> {
    let m = a.rows() as u32;
    let total: u64 = 1 << m;
    let chunk: u64 = 1 << m.min(8);
    let chunks = total.div_ceil(chunk);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let start = c * chunk;
            let end = (start + chunk).min(total);
            let mut out = Vec::with_capacity((end - start) as usize);
            let mut mask = (start ^ (start >> 1)) as u32;
            let mut w = masked_col_sums(a, mask);
            for g in start..end {
                if g > start {
                    let bit = g.trailing_zeros() as usize;
                    mask ^= 1 << bit;
                    let sign = if mask >> bit & 1 == 1 { 1.0 } else { -1.0 };
                    w.iter_mut()
                        .zip(a.row(bit))
                        .for_each(|(x, y)| *x += sign * y);
                }
                if mask != 0 {
                    out.push((mask, f(mask, &w)));
                }
            }
            out
        })
        .collect()
}

/// Sorted-prefix candidates for `max_T |Σ_{j∈T} w_j| / √|T|`: for each size
/// and sign, the lexicographically smallest optimal set of that size.
fn prefix_candidates(w: &[f64], mut visit: impl FnMut(f64, u32)) {
    let mut order: Vec<usize> = (0..w.len()).collect();
    for sign in [1.0, -1.0] {
        order.sort_by(|&x, &y| {
            (sign * w[y])
                .partial_cmp(&(sign * w[x]))
                .unwrap_or(Ordering::Equal)
                .then(x.cmp(&y))
        });
        let mut sum = 0.0;
        let mut mask = 0u32;
        for (k, &j) in order.iter().enumerate() {
            sum += sign * w[j];
            mask |= 1 << j;
            visit(sum / ((k + 1) as f64).sqrt(), mask);
        }
    }
}

fn best_prefix_value(w: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    prefix_candidates(w, |v, _| best = best.max(v));
    best
}

/// Exact `‖A‖_■[1]` with the lexicographically smallest maximizing block.
pub fn cut_norm_exact(a: &Matrix) -> Result<CutWitness> {
    cut_norm_exact_with(a, &OracleBudget::default())
}

pub fn cut_norm_exact_with(a: &Matrix, budget: &OracleBudget) -> Result<CutWitness> {
    check_dims(a, budget, "cut_norm_exact")?;
    let per_row = gray_map(a, |mask, w| {
        best_prefix_value(w) / (mask.count_ones() as f64).sqrt()
    });
    let top = per_row
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    if top <= 0.0 {
        return Ok(CutWitness {
            value: 0.0,
            rows: IndexSet::from_mask(1),
            cols: IndexSet::from_mask(1),
        });
    }
    let threshold = top - TIE_TOL;
    let row_mask = per_row
        .iter()
        .filter(|&&(_, v)| v >= threshold)
        .map(|&(m, _)| m)
        .min()
        .expect("maximizer exists");
    let w = masked_col_sums(a, row_mask);
    let scale = (row_mask.count_ones() as f64).sqrt();
    let mut best_direct = f64::NEG_INFINITY;
    prefix_candidates(&w, |v, _| best_direct = best_direct.max(v / scale));
    let cut = threshold.min(best_direct);
    let mut col_mask = u32::MAX;
    prefix_candidates(&w, |v, m| {
        if v / scale >= cut && m < col_mask {
            col_mask = m;
        }
    });
    Ok(CutWitness {
        value: top,
        rows: mask_to_set(row_mask),
        cols: mask_to_set(col_mask),
    })
}

/// Best `|Σ_{i∈s} w_i| / √|s|` over nonempty `s` via sorted prefixes,
/// returning the value and the chosen indices.
pub fn best_subset_ratio(w: &[f64]) -> (f64, IndexSet) {
    let mut order: Vec<usize> = (0..w.len()).collect();
    let mut best = (f64::NEG_INFINITY, 0, 1.0);
    for sign in [1.0, -1.0] {
        order.sort_by(|&x, &y| {
            (sign * w[y])
                .partial_cmp(&(sign * w[x]))
                .unwrap_or(Ordering::Equal)
                .then(x.cmp(&y))
        });
        let mut sum = 0.0;
        for (k, &j) in order.iter().enumerate() {
            sum += sign * w[j];
            let v = sum / ((k + 1) as f64).sqrt();
            if v > best.0 {
                best = (v, k + 1, sign);
            }
        }
    }
    let (value, len, sign) = best;
    order.sort_by(|&x, &y| {
        (sign * w[y])
            .partial_cmp(&(sign * w[x]))
            .unwrap_or(Ordering::Equal)
            .then(x.cmp(&y))
    });
    (value, IndexSet::new(order[..len].to_vec()))
}

fn normalized_cut_value(a: &Matrix, rows: &IndexSet, cols: &IndexSet) -> f64 {
    let s = rows.indicator(a.rows());
    let t = cols.indicator(a.cols());
    a.bilinear(&s, &t).abs() / ((rows.len() * cols.len()) as f64).sqrt()
}

/// Lower bound on `‖A‖_■[1]` by alternating exact maximization of one side
/// with the other fixed, best over `restarts` seeded starts.
pub fn cut_norm_heuristic(a: &Matrix, restarts: usize, seed: u64) -> Result<CutWitness> {
    if restarts == 0 {
        return Err(Error::InvalidParameter(
            "restarts must be at least 1".into(),
        ));
    }
    let at = a.transpose();
    let scale = frobenius_norm(a).max(f64::MIN_POSITIVE);
    let mut best: Option<CutWitness> = None;
    for r in 0..restarts {
        let mut cols = if r == 0 {
            IndexSet::full(a.cols())
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, r as u64));
            let mut c: Vec<usize> = (0..a.cols()).filter(|_| rng.gen_bool(0.5)).collect();
            if c.is_empty() {
                c.push(rng.gen_range(0..a.cols()));
            }
            IndexSet::new(c)
        };
        let mut current = f64::NEG_INFINITY;
        let mut rows = IndexSet::full(a.rows());
        for _ in 0..200 {
            let w = a.mul_vec(&cols.indicator(a.cols()));
            let (_, new_rows) = best_subset_ratio(&w);
            let w = at.mul_vec(&new_rows.indicator(a.rows()));
            let (_, new_cols) = best_subset_ratio(&w);
            let value = normalized_cut_value(a, &new_rows, &new_cols);
            if value <= current + 1e-15 * scale {
                break;
            }
            current = value;
            rows = new_rows;
            cols = new_cols;
        }
        let value = normalized_cut_value(a, &rows, &cols);
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(CutWitness { value, rows, cols });
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Orthogonal projection of `r` onto the span of the given block indicators.
pub fn project_onto_cut_span(r: &Matrix, blocks: &[(IndexSet, IndexSet)]) -> Result<(Matrix, f64)> {
    if blocks.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one block is required".into(),
        ));
    }
    let mut proj = SpanProjector::new(r.rows() * r.cols());
    for (rs, cs) in blocks {
        if rs.is_empty() || cs.is_empty() {
            return Err(Error::Domain("cut blocks must be nonempty".into()));
        }
        if rs.largest().unwrap() >= r.rows() || cs.largest().unwrap() >= r.cols() {
            return Err(Error::Dimension("cut block exceeds matrix shape".into()));
        }
        proj.push(block_indicator(rs, cs, r.rows(), r.cols()).as_slice());
    }
    let (q, _) = proj.project(r.as_slice());
    let q = crate::matcore::from_flat(r.rows(), r.cols(), q);
    let mag = frobenius_norm(&q);
    Ok((q, mag))
}

/// Exact `‖A‖_□ = max |sᵀ A t|` over nonempty cut vectors.
pub fn classical_cut_norm(a: &Matrix) -> Result<f64> {
    classical_cut_norm_with(a, &OracleBudget::default())
}

pub fn classical_cut_norm_with(a: &Matrix, budget: &OracleBudget) -> Result<f64> {
    check_dims(a, budget, "classical_cut_norm")?;
    let vals = gray_map(a, |_, w| {
        let pos: f64 = w.iter().filter(|x| **x > 0.0).sum();
        let neg: f64 = w.iter().filter(|x| **x < 0.0).sum();
        let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
        let pos = if hi > 0.0 { pos } else { hi };
        let neg = if lo < 0.0 { -neg } else { -lo };
        pos.max(neg)
    });
    Ok(vals.into_iter().map(|(_, v)| v).fold(0.0, f64::max))
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(x) => x / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

struct BlockAtom {
    rows: u32,
    cols: u32,
    area: f64,
    sum: f64,
}

fn enumerate_blocks(a: &Matrix) -> Vec<BlockAtom> {
    let (m, n) = (a.rows() as u32, a.cols() as u32);
    let mut out = Vec::with_capacity(((1usize << m) - 1) * ((1usize << n) - 1));
    for rm in 1u32..(1 << m) {
        let w = masked_col_sums(a, rm);
        for cm in 1u32..(1 << n) {
            let sum: f64 = (0..n)
                .filter(|j| cm >> j & 1 == 1)
                .map(|j| w[j as usize])
                .sum();
            out.push(BlockAtom {
                rows: rm,
                cols: cm,
                area: (rm.count_ones() * cm.count_ones()) as f64,
                sum,
            });
        }
    }
    out
}

fn overlap(x: &BlockAtom, y: &BlockAtom) -> f64 {
    ((x.rows & y.rows).count_ones() * (x.cols & y.cols).count_ones()) as f64
}

/// `bᵀ G⁺ b` for a small Gram system, dropping pivots below the relative
/// tolerance (dependent blocks).
fn gram_quadratic(gram: &[Vec<f64>], b: &[f64]) -> f64 {
    let k = b.len();
    let max_diag = (0..k).map(|i| gram[i][i]).fold(0.0, f64::max);
    let tol = crate::matcore::SPAN_DROP_TOL * max_diag;
    // LDLᵀ with dropped pivots
    let mut l = vec![vec![0.0; k]; k];
    let mut d = vec![0.0; k];
    let mut kept = vec![false; k];
    for j in 0..k {
        let mut dj = gram[j][j];
        for p in 0..j {
            if kept[p] {
                dj -= l[j][p] * l[j][p] * d[p];
            }
        }
        if dj <= tol {
            continue;
        }
        kept[j] = true;
        d[j] = dj;
        l[j][j] = 1.0;
        for i in j + 1..k {
            let mut s = gram[i][j];
            for p in 0..j {
                if kept[p] {
                    s -= l[i][p] * l[j][p] * d[p];
                }
            }
            l[i][j] = s / dj;
        }
    }
    let mut y = vec![0.0; k];
    let mut total = 0.0;
    for j in 0..k {
        if !kept[j] {
            continue;
        }
        let mut s = b[j];
        for p in 0..j {
            if kept[p] {
                s -= l[j][p] * y[p];
            }
        }
        y[j] = s;
        total += s * s / d[j];
    }
    total
}

/// Exact `‖A‖_■[k]` by enumerating every `k`-subset of cut blocks and
/// projecting onto its span. For `k = 1` this is `cut_norm_exact`.
pub fn black_square_norm_exact(a: &Matrix, k: usize) -> Result<f64> {
    black_square_norm_exact_with(a, k, &OracleBudget::default())
}

pub fn black_square_norm_exact_with(a: &Matrix, k: usize, budget: &OracleBudget) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let (m, n) = a.shape();
    let full_span = k >= m * n;
    if m.max(n) > budget.max_dim.min(16) {
        if full_span {
            return Ok(frobenius_norm(a));
        }
        return Err(Error::budget(
            "black_square_norm_exact",
            format!("{m}x{n}"),
            format!("{} per side", budget.max_dim.min(16)),
        ));
    }
    let atoms_n = ((1u128 << m) - 1) * ((1u128 << n) - 1);
    let k_eff = (k as u128).min(atoms_n);
    let evals = binomial(atoms_n, k_eff);
    if evals > budget.max_evaluations as u128 {
        if full_span {
            return Ok(frobenius_norm(a));
        }
        return Err(Error::budget(
            "black_square_norm_exact",
            format!("{evals} span evaluations"),
            budget.max_evaluations,
        ));
    }
    let blocks = enumerate_blocks(a);
    let best_sq = match k_eff {
        1 => blocks
            .iter()
            .map(|b| b.sum * b.sum / b.area)
            .fold(0.0, f64::max),
        2 => pair_max(a),
        _ => combination_max(&blocks, k_eff as usize),
    };
    Ok(best_sq.max(0.0).sqrt())
}

/// First block plus the second block's row mask, for the pair objective
/// `bᵀ G⁻¹ b = num / det`.
struct PairRow {
    xs: f64,
    xa: f64,
    ro: f64,
    ry: f64,
}

impl PairRow {
    #[inline(always)]
    fn eval(&self, ys: f64, co: f64, cs: f64) -> (f64, f64) {
        let o = self.ro * co;
        let ya = self.ry * cs;
        // distinct blocks are linearly independent, so det > 0
        let det = self.xa * ya - o * o;
        let num = ya * self.xs * self.xs - 2.0 * o * self.xs * ys + self.xa * ys * ys;
        (num, det)
    }

    /// `max (num − best·det)` over a slice of column masks, expanded so
    /// each term is one product with a per-row constant; positive (up to
    /// rounding) iff some pair beats `best`. Four lanes so it vectorizes.
    #[inline(always)]
    fn gain(&self, cols: &ColSlices<'_>, best: f64) -> f64 {
        let k_cs = self.ry * self.xs * self.xs - best * self.xa * self.ry;
        let k_co2 = best * self.ro * self.ro;
        let k_coys = 2.0 * self.ro * self.xs;
        let xa = self.xa;
        let term = |cs: f64, co2: f64, coys: f64, ys2: f64| {
            k_cs * cs + k_co2 * co2 - k_coys * coys + xa * ys2
        };
        let mut acc = [f64::NEG_INFINITY; 4];
        let len = cols.ys.len();
        let (ys, ys2, co, co2, cs) = (
            &cols.ys[..len],
            &cols.ys2[..len],
            &cols.co[..len],
            &cols.co2[..len],
            &cols.cs[..len],
        );
        let body = len / 4 * 4;
        for j in (0..body).step_by(4) {
            let (ys, ys2, co, co2, cs) = (
                &ys[j..j + 4],
                &ys2[j..j + 4],
                &co[j..j + 4],
                &co2[j..j + 4],
                &cs[j..j + 4],
            );
            for k in 0..4 {
                let g = term(cs[k], co2[k], co[k] * ys[k], ys2[k]);
                acc[k] = if g > acc[k] { g } else { acc[k] };
            }
        }
        for i in body..len {
            acc[0] = acc[0].max(term(cs[i], co2[i], co[i] * ys[i], ys2[i]));
        }
        acc[0].max(acc[1]).max(acc[2].max(acc[3]))
    }
}

/// Per-column-mask arrays for one row of second blocks.
struct ColSlices<'a> {
    ys: &'a [f64],
    ys2: &'a [f64],
    co: &'a [f64],
    co2: &'a [f64],
    cs: &'a [f64],
}

/// Best pair of blocks. Blocks are laid out row-mask major, so for a fixed
/// first block and second row mask the row overlap is a constant and the
/// inner loop over column masks is straight-line arithmetic on slices.
fn pair_max(a: &Matrix) -> f64 {
    let (m, n) = a.shape();
    let nc = (1usize << n) - 1;
    let mut sums = Vec::with_capacity(((1 << m) - 1) * nc);
    for rm in 1u32..(1 << m) {
        let w = masked_col_sums(a, rm);
        sums.extend((1u32..(1 << n)).map(|cm| {
            (0..n)
                .filter(|&j| cm >> j & 1 == 1)
                .map(|j| w[j])
                .sum::<f64>()
        }));
    }
    let col_size: Vec<f64> = (1u32..(1 << n))
        .map(|cm| f64::from(cm.count_ones()))
        .collect();
    // any pair containing the best single block already reaches ■[1]²
    let floor = sums
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            s * s
                / f64::from(((i / nc + 1) as u32).count_ones() * ((i % nc + 1) as u32).count_ones())
        })
        .fold(0.0, f64::max);
    let sums_sq: Vec<f64> = sums.iter().map(|s| s * s).collect();
    let grid = PairGrid {
        m,
        n,
        sums: &sums,
        sums_sq: &sums_sq,
        col_size: &col_size,
        floor,
    };
    (0..sums.len())
        .into_par_iter()
        .map(|i| grid.best_partner_dispatch(i))
        .reduce(|| floor, f64::max)
}

struct PairGrid<'a> {
    m: usize,
    n: usize,
    sums: &'a [f64],
    sums_sq: &'a [f64],
    col_size: &'a [f64],
    floor: f64,
}

impl PairGrid<'_> {
    fn best_partner_dispatch(&self, i: usize) -> f64 {
        #[cfg(target_arch = "x86_64")]
        {
            if std::arch::is_x86_feature_detected!("avx2") {
                // SAFETY: the required CPU feature was detected at runtime
                return unsafe { self.best_partner_avx2(i) };
            }
        }
        self.best_partner(i)
    }

    /// Same arithmetic as `best_partner` (no fused operations), only wider.
    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn best_partner_avx2(&self, i: usize) -> f64 {
        self.best_partner(i)
    }

    /// Largest objective over blocks that follow block `i`.
    #[inline(always)]
    fn best_partner(&self, i: usize) -> f64 {
        let (m, n) = (self.m, self.n);
        let nc = (1usize << n) - 1;
        let (xr, xc) = ((i / nc + 1) as u32, (i % nc + 1) as u32);
        let xs = self.sums[i];
        let xa = f64::from(xr.count_ones() * xc.count_ones());
        let col_overlap: Vec<f64> = (1u32..(1 << n))
            .map(|cm| f64::from((cm & xc).count_ones()))
            .collect();
        let col_overlap_sq: Vec<f64> = col_overlap.iter().map(|c| c * c).collect();
        let mut best = self.floor;
        for yr in xr..(1 << m) {
            let ro = f64::from((xr & yr).count_ones());
            let ry = f64::from(yr.count_ones());
            let start = if yr == xr { xc as usize } else { 0 };
            let base = (yr as usize - 1) * nc;
            let ys = &self.sums[base + start..base + nc];
            let co = &col_overlap[start..];
            let cs = &self.col_size[start..];
            let pair = PairRow { xs, xa, ro, ry };
            let cols = ColSlices {
                ys,
                ys2: &self.sums_sq[base + start..base + nc],
                co,
                co2: &col_overlap_sq[start..],
                cs,
            };
            if pair.gain(&cols, best) > 0.0 {
                for ((&ys, &co), &cs) in ys.iter().zip(co).zip(cs) {
                    let (num, det) = pair.eval(ys, co, cs);
                    if num > best * det {
                        best = num / det;
                    }
                }
            }
        }
        best
    }
}

fn combination_max(blocks: &[BlockAtom], k: usize) -> f64 {
    let n = blocks.len();
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best = 0.0f64;
    let mut gram = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    loop {
        for (p, &i) in idx.iter().enumerate() {
            b[p] = blocks[i].sum;
            for (q, &j) in idx.iter().enumerate().take(p + 1) {
                let o = overlap(&blocks[i], &blocks[j]);
                gram[p][q] = o;
                gram[q][p] = o;
            }
        }
        best = best.max(gram_quadratic(&gram, &b));
        // next combination in lexicographic order
        let mut p = k;
        loop {
            if p == 0 {
                return best;
            }
            p -= 1;
            if idx[p] < n - k + p {
                break;
            }
        }
        idx[p] += 1;
        for q in p + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}
