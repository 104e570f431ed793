//! Graph-level regularity: common refinements of cut decompositions,
//! Frieze–Kannan compression, exact discrepancy, and the checks behind the
//! discrepancy, irregularity and exceptional-set phrasings of Szemerédi's
//! lemma.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cutalg::{CutDecomposition, IndexSet};
use crate::engine::{
    self, f_iterate, Bound, DecompositionTrace, GrowthFunction, RegularityResult, SearchMode,
};
use crate::error::{Error, Result};
use crate::matcore::Matrix;

/// Largest part side for which discrepancies are computed exactly.
pub const DEFAULT_MAX_SIDE: usize = 12;

/// Simple undirected graph backed by its adjacency matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    adj: Matrix,
}

impl Graph {
    pub fn new(adj: Matrix) -> Result<Self> {
        let n = adj.rows();
        if adj.cols() != n {
            return Err(Error::Domain("adjacency matrix must be square".into()));
        }
        for i in 0..n {
            if adj[(i, i)] != 0.0 {
                return Err(Error::Domain(format!("self-loop at node {i}")));
            }
            for j in 0..n {
                let x = adj[(i, j)];
                if x != 0.0 && x != 1.0 {
                    return Err(Error::Domain(format!("entry ({i}, {j}) is not 0/1")));
                }
                if x != adj[(j, i)] {
                    return Err(Error::Domain(format!("asymmetric entry ({i}, {j})")));
                }
            }
        }
        Ok(Self { adj })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            adj: Matrix::zeros(n, n),
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("graph needs at least one node".into()));
        }
        let mut adj = Matrix::zeros(n, n);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Domain(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(Error::Domain(format!("self-loop at node {u}")));
            }
            if adj[(u, v)] != 0.0 {
                return Err(Error::Domain(format!("duplicate edge ({u}, {v})")));
            }
            adj[(u, v)] = 1.0;
            adj[(v, u)] = 1.0;
        }
        Ok(Self { adj })
    }

    /// Erdős–Rényi `G(n, p)`; pairs `u < v` are drawn in lexicographic order.
    pub fn gnp(n: usize, p: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        Self::from_edges(n, &edges).expect("generated edges are simple")
    }

    /// `K_{a,b}` with sides `0..a` and `a..a+b`.
    pub fn complete_bipartite(a: usize, b: usize) -> Self {
        let edges: Vec<_> = (0..a)
            .flat_map(|u| (a..a + b).map(move |v| (u, v)))
            .collect();
        Self::from_edges(a + b, &edges).expect("bipartite edges are simple")
    }

    /// Nodes split round-robin into `parts` groups; edges inside a group with
    /// probability `p_in`, across groups with `p_out`.
    pub fn planted_partition(n: usize, parts: usize, p_in: f64, p_out: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                let p = if u % parts == v % parts { p_in } else { p_out };
                if rng.gen::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        Self::from_edges(n, &edges).expect("generated edges are simple")
    }

    pub fn n(&self) -> usize {
        self.adj.rows()
    }

    pub fn adjacency(&self) -> &Matrix {
        &self.adj
    }

    /// Edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| self.adj[(u, v)] == 1.0)
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    fn check_set(&self, s: &IndexSet) -> Result<()> {
        match s.largest() {
            Some(m) if m >= self.n() => Err(Error::Domain(format!(
                "node {m} out of range for n = {}",
                self.n()
            ))),
            _ => Ok(()),
        }
    }
}

/// Edge-list text: `n m`, then `m` lines `u v`.
impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges = self.edges();
        writeln!(f, "{} {}", self.n(), edges.len())?;
        for (u, v) in edges {
            writeln!(f, "{u} {v}")?;
        }
        Ok(())
    }
}

impl FromStr for Graph {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut rows = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let toks = l
                    .split_whitespace()
                    .map(|t| t.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::Parse {
                        line: i + 1,
                        msg: e.to_string(),
                    })?;
                match toks[..] {
                    [a, b] => Ok((i + 1, a, b)),
                    _ => Err(Error::Parse {
                        line: i + 1,
                        msg: "expected two integers".into(),
                    }),
                }
            });
        let (hl, n, m) = rows.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })??;
        let mut edges = Vec::with_capacity(m);
        let mut adj_seen = std::collections::HashSet::new();
        for row in rows {
            let (line, u, v) = row?;
            if edges.len() == m {
                return Err(Error::Parse {
                    line,
                    msg: format!("more than {m} edges"),
                });
            }
            let problem = if u >= n || v >= n {
                Some("endpoint out of range")
            } else if u == v {
                Some("self-loop")
            } else if !adj_seen.insert((u.min(v), u.max(v))) {
                Some("duplicate edge")
            } else {
                None
            };
            if let Some(msg) = problem {
                return Err(Error::Parse {
                    line,
                    msg: format!("{msg} ({u}, {v})"),
                });
            }
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: hl,
                msg: format!("header promises {m} edges, found {}", edges.len()),
            });
        }
        Graph::from_edges(n, &edges).map_err(|e| Error::Parse {
            line: hl,
            msg: e.to_string(),
        })
    }
}

/// Assignment of nodes to parts, with an optional exceptional part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    part_of: Vec<usize>,
    num_parts: usize,
    exceptional: Option<usize>,
}

impl Partition {
    pub fn new(part_of: Vec<usize>, num_parts: usize, exceptional: Option<usize>) -> Result<Self> {
        let mut sizes = vec![0usize; num_parts];
        for (v, &p) in part_of.iter().enumerate() {
            if p >= num_parts {
                return Err(Error::Domain(format!(
                    "node {v} assigned to missing part {p}"
                )));
            }
            sizes[p] += 1;
        }
        if let Some(x) = exceptional {
            if x >= num_parts {
                return Err(Error::Domain(format!(
                    "exceptional part {x} does not exist"
                )));
            }
        }
        if let Some(p) = (0..num_parts).find(|&p| sizes[p] == 0 && Some(p) != exceptional) {
            return Err(Error::Domain(format!("part {p} is empty")));
        }
        Ok(Self {
            part_of,
            num_parts,
            exceptional,
        })
    }

    pub fn single(n: usize) -> Self {
        Self {
            part_of: vec![0; n],
            num_parts: 1,
            exceptional: None,
        }
    }

    pub fn n(&self) -> usize {
        self.part_of.len()
    }

    pub fn num_parts(&self) -> usize {
        self.num_parts
    }

    pub fn part_of(&self) -> &[usize] {
        &self.part_of
    }

    pub fn exceptional(&self) -> Option<usize> {
        self.exceptional
    }

    /// Node lists per part, each sorted.
    pub fn parts(&self) -> Vec<IndexSet> {
        let mut parts = vec![Vec::new(); self.num_parts];
        for (v, &p) in self.part_of.iter().enumerate() {
            parts[p].push(v);
        }
        parts.into_iter().map(IndexSet::new).collect()
    }

    /// Indices of the ordinary (non-exceptional) parts.
    pub fn regular_parts(&self) -> Vec<usize> {
        (0..self.num_parts)
            .filter(|&p| Some(p) != self.exceptional)
            .collect()
    }
}

/// A partition plus one density value per ordered pair of parts.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressedGraph {
    pub partition: Partition,
    pub c: Vec<Vec<f64>>,
}

/// Coarsest partition in which co-located nodes agree on membership in
/// every row set and every column set of the decomposition's atoms. Parts
/// are numbered by their smallest node.
pub fn common_refinement(d: &CutDecomposition, n: usize) -> Result<Partition> {
    if d.rows != n || d.cols != n {
        return Err(Error::Dimension(format!(
            "decomposition is {}x{}, expected {n}x{n}",
            d.rows, d.cols
        )));
    }
    let mut ids: HashMap<Vec<bool>, usize> = HashMap::new();
    let mut part_of = Vec::with_capacity(n);
    for v in 0..n {
        let sig: Vec<bool> = d
            .atoms
            .iter()
            .flat_map(|a| [a.rows.contains(v), a.cols.contains(v)])
            .collect();
        let next = ids.len();
        part_of.push(*ids.entry(sig).or_insert(next));
    }
    let k = ids.len();
    Partition::new(part_of, k, None)
}

/// Density table of a matrix that is constant on every block of `p`.
/// Fails if some block is not exactly constant.
pub fn block_constants(a_hat: &Matrix, p: &Partition) -> Result<Vec<Vec<f64>>> {
    let parts = p.parts();
    let k = parts.len();
    let mut c = vec![vec![0.0; k]; k];
    for (i, vi) in parts.iter().enumerate() {
        for (j, vj) in parts.iter().enumerate() {
            let (Some(&u0), Some(&v0)) = (vi.as_slice().first(), vj.as_slice().first()) else {
                continue;
            };
            let val = a_hat[(u0, v0)];
            for &u in vi.as_slice() {
                for &v in vj.as_slice() {
                    if a_hat[(u, v)] != val {
                        return Err(Error::Domain(format!(
                            "approximation not constant on block ({i}, {j})"
                        )));
                    }
                }
            }
            c[i][j] = val;
        }
    }
    Ok(c)
}

/// Frieze–Kannan compression from a weak cut decomposition of the adjacency.
pub fn compress(
    g: &Graph,
    eps: f64,
    mode: SearchMode,
    seed: u64,
) -> Result<(CompressedGraph, RegularityResult)> {
    let run = engine::weak_decompose_cut(g.adjacency(), eps, mode, seed)?;
    let d = run.cut_decomposition().expect("cut run");
    let partition = common_refinement(d, g.n())?;
    let c = block_constants(&run.a_hat, &partition)?;
    Ok((CompressedGraph { partition, c }, run))
}

/// `ê(S,T) = Σ c_ij |V_i ∩ S| |V_j ∩ T|`.
pub fn estimate_cut(cg: &CompressedGraph, s: &IndexSet, t: &IndexSet) -> Result<f64> {
    let n = cg.partition.n();
    let k = cg.partition.num_parts();
    let counts = |x: &IndexSet| -> Result<Vec<f64>> {
        let mut c = vec![0.0; k];
        for &v in x.as_slice() {
            if v >= n {
                return Err(Error::Domain(format!("node {v} out of range for n = {n}")));
            }
            c[cg.partition.part_of()[v]] += 1.0;
        }
        Ok(c)
    };
    let (cs, ct) = (counts(s)?, counts(t)?);
    let mut total = 0.0;
    for i in 0..k {
        for j in 0..k {
            total += cg.c[i][j] * cs[i] * ct[j];
        }
    }
    Ok(total)
}

/// `e(S,T) = sᵀ A t` (ordered endpoint pairs).
pub fn exact_cut_count(g: &Graph, s: &IndexSet, t: &IndexSet) -> Result<u64> {
    g.check_set(s)?;
    g.check_set(t)?;
    let mut count = 0u64;
    for &u in s.as_slice() {
        for &v in t.as_slice() {
            count += g.adj[(u, v)] as u64;
        }
    }
    Ok(count)
}

/// How the density guess `c` is chosen in a discrepancy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityMode {
    /// Minimized over all real `c`.
    Free,
    /// Fixed to the edge density of the pair.
    Fixed,
}

/// For each `(|S|, |T|)`, the extreme values of `e(S, T)` over `S ⊆ rows`,
/// `T ⊆ cols` of the block. Column sets come from sorted prefixes of the
/// column sums, so only row sets are enumerated.
fn extreme_cut_table(block: &[Vec<f64>], cols: usize) -> Vec<(f64, f64, f64)> {
    let rows = block.len();
    let mut table: HashMap<u64, (f64, f64)> = HashMap::new();
    let mut w = vec![0.0; cols];
    let mut mask = 0u64;
    let mut sorted = vec![0.0; cols];
    for g in 1u64..(1 << rows) {
        let bit = g.trailing_zeros() as usize;
        mask ^= 1 << bit;
        let sign = if mask >> bit & 1 == 1 { 1.0 } else { -1.0 };
        w.iter_mut()
            .zip(&block[bit])
            .for_each(|(x, y)| *x += sign * y);
        let size = mask.count_ones() as u64;
        sorted.copy_from_slice(&w);
        sorted.sort_by(|x, y| y.total_cmp(x));
        let (mut hi, mut lo) = (0.0, 0.0);
        for q in 1..=cols {
            hi += sorted[q - 1];
            lo += sorted[cols - q];
            let entry = table.entry(size * q as u64).or_insert((lo, hi));
            entry.0 = entry.0.min(lo);
            entry.1 = entry.1.max(hi);
        }
    }
    let mut lines: Vec<(f64, f64, f64)> = table
        .into_iter()
        .map(|(p, (lo, hi))| (p as f64, lo, hi))
        .collect();
    lines.sort_by(|x, y| x.0.total_cmp(&y.0));
    lines
}

/// `max_{S,T} |e(S,T) − c|S||T||` given the extreme-cut lines.
fn worst_error(lines: &[(f64, f64, f64)], c: f64) -> f64 {
    lines
        .iter()
        .map(|&(p, lo, hi)| (hi - c * p).max(c * p - lo))
        .fold(0.0, f64::max)
}

pub fn discrepancy_exact(
    g: &Graph,
    vi: &IndexSet,
    vj: &IndexSet,
    mode: DensityMode,
) -> Result<f64> {
    discrepancy_exact_with(g, vi, vj, mode, DEFAULT_MAX_SIDE)
}

/// `disc(V_i, V_j) = min_c max_{S⊆V_i, T⊆V_j} |e(S,T) − c|S||T||`.
///
/// The objective in `c` is the upper envelope of the lines `e_max(p) − c·p`
/// and `c·p − e_min(p)`, one pair per product `p = |S||T|`; its minimum lies
/// where a falling line meets a rising one, so every such crossing (and each
/// line's zero) is evaluated. `V_i = V_j` is accepted for diagonal blocks;
/// partially overlapping sets are rejected.
pub fn discrepancy_exact_with(
    g: &Graph,
    vi: &IndexSet,
    vj: &IndexSet,
    mode: DensityMode,
    max_side: usize,
) -> Result<f64> {
    g.check_set(vi)?;
    g.check_set(vj)?;
    if vi != vj && vi.as_slice().iter().any(|&v| vj.contains(v)) {
        return Err(Error::Domain(
            "discrepancy needs disjoint (or identical) node sets".into(),
        ));
    }
    if vi.len() > max_side || vj.len() > max_side {
        return Err(Error::budget(
            "discrepancy_exact",
            format!("{}x{} block", vi.len(), vj.len()),
            format!("{max_side} per side"),
        ));
    }
    if vi.is_empty() || vj.is_empty() {
        return Ok(0.0);
    }
    let block: Vec<Vec<f64>> = vi
        .as_slice()
        .iter()
        .map(|&u| vj.as_slice().iter().map(|&v| g.adj[(u, v)]).collect())
        .collect();
    let lines = extreme_cut_table(&block, vj.len());
    match mode {
        DensityMode::Fixed => {
            let total: f64 = block.iter().flatten().sum();
            let c = total / (vi.len() * vj.len()) as f64;
            Ok(worst_error(&lines, c))
        }
        DensityMode::Free => {
            let mut best = f64::INFINITY;
            for &(pd, _, hid) in &lines {
                best = best.min(worst_error(&lines, hid / pd));
                for &(pu, lou, _) in &lines {
                    best = best.min(worst_error(&lines, (hid + lou) / (pd + pu)));
                }
            }
            for &(p, lo, _) in &lines {
                best = best.min(worst_error(&lines, lo / p));
            }
            Ok(best.max(0.0))
        }
    }
}

/// A measured quantity against the bound it must respect.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// `None` when the bound overflowed (treated as +∞).
    pub bound: Option<f64>,
    pub relation: Relation,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = "<=")]
    LessEq,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        measured: f64,
        bound: Option<f64>,
        relation: Relation,
    ) -> Self {
        let passed = match (bound, relation) {
            (None, _) => true,
            (Some(b), Relation::Less) => measured < b,
            (Some(b), Relation::LessEq) => measured <= b,
        };
        Self {
            name: name.into(),
            measured,
            bound,
            relation,
            passed,
        }
    }
}

fn bound_f64(b: Bound) -> Option<f64> {
    match b {
        Bound::Finite(x) => Some(x as f64),
        Bound::Saturated => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairDiscrepancy {
    pub i: usize,
    pub j: usize,
    pub size_i: usize,
    pub size_j: usize,
    pub disc: f64,
    pub irregular: bool,
}

/// Outcome of one of the graph-regularity verifiers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub epsilon: f64,
    pub per_pair: Vec<PairDiscrepancy>,
    pub irregular_pairs: Vec<(usize, usize)>,
    pub sum_disc: f64,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub partition: Partition,
    #[serde(skip)]
    pub trace: DecompositionTrace,
    #[serde(skip)]
    pub f_bound: Bound,
}

impl DiscrepancyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Verifier knobs; defaults match the module constants.
#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub max_side: usize,
    pub engine: engine::EngineOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            max_side: DEFAULT_MAX_SIDE,
            engine: engine::EngineOptions::default(),
        }
    }
}

fn pairwise(
    g: &Graph,
    parts: &[IndexSet],
    which: &[usize],
    irregular_eps: Option<f64>,
    max_side: usize,
) -> Result<Vec<PairDiscrepancy>> {
    let mut out = Vec::with_capacity(which.len() * which.len());
    let mut cache: HashMap<(usize, usize), f64> = HashMap::new();
    for &i in which {
        for &j in which {
            let key = (i.min(j), i.max(j));
            let disc = match cache.get(&key) {
                Some(&d) => d,
                None => {
                    let d = discrepancy_exact_with(
                        g,
                        &parts[i],
                        &parts[j],
                        DensityMode::Free,
                        max_side,
                    )?;
                    cache.insert(key, d);
                    d
                }
            };
            let (si, sj) = (parts[i].len(), parts[j].len());
            let irregular = irregular_eps.is_some_and(|e| disc > e * (si * sj) as f64);
            out.push(PairDiscrepancy {
                i,
                j,
                size_i: si,
                size_j: sj,
                disc,
                irregular,
            });
        }
    }
    Ok(out)
}

fn disc_pipeline(
    g: &Graph,
    eps: f64,
    f: GrowthFunction,
    mode: SearchMode,
    seed: u64,
    opts: &VerifyOptions,
) -> Result<(RegularityResult, Partition)> {
    let run = engine::strong_decompose_cut_with(g.adjacency(), eps, f, mode, seed, &opts.engine)?;
    let partition = common_refinement(run.cut_decomposition().expect("cut run"), g.n())?;
    Ok((run, partition))
}

fn engine_checks(
    run: &RegularityResult,
    f: GrowthFunction,
    eps: f64,
    parts: usize,
) -> (Vec<Check>, Bound) {
    let rounds = run.rounds() as u64;
    let f_bound = f_iterate(f, rounds);
    let kw = run.k_witness as f64;
    let size_bound = 4f64.powf(kw);
    let checks = vec![
        Check::new(
            "rounds < eps^-2",
            rounds as f64,
            Some(1.0 / (eps * eps)),
            Relation::Less,
        ),
        Check::new(
            "k_witness <= f_iterate(f, rounds)",
            kw,
            bound_f64(f_bound),
            Relation::LessEq,
        ),
        Check::new(
            "parts <= 4^k_witness",
            parts as f64,
            size_bound.is_finite().then_some(size_bound),
            Relation::LessEq,
        ),
    ];
    (checks, f_bound)
}

/// Number of random `(S, T)` pairs drawn when the graph is too large for an
/// exact worst-case cut error.
pub const WEAK_GRAPH_SAMPLES: usize = 10_000;

/// Compression check: worst `|e(S,T) − ê(S,T)|` against `ε n²`, and the part
/// count against `4^⌈ε^{-2}⌉`. The worst error is the classical cut norm of
/// `A − Â`, exact up to the budget dimension; larger graphs are sampled.
pub fn verify_weak_graph(
    g: &Graph,
    eps: f64,
    mode: SearchMode,
    seed: u64,
) -> Result<(CompressedGraph, DiscrepancyReport)> {
    verify_weak_graph_with(g, eps, mode, seed, &VerifyOptions::default())
}

pub fn verify_weak_graph_with(
    g: &Graph,
    eps: f64,
    mode: SearchMode,
    seed: u64,
    opts: &VerifyOptions,
) -> Result<(CompressedGraph, DiscrepancyReport)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    let n = g.n();
    // f ≡ 1 is the weak decomposition; the `_with` form carries the options
    let run = engine::strong_decompose_cut_with(
        g.adjacency(),
        eps,
        GrowthFunction::constant(1),
        mode,
        seed,
        &opts.engine,
    )?;
    let partition = common_refinement(run.cut_decomposition().expect("cut run"), n)?;
    let c = block_constants(&run.a_hat, &partition)?;
    let cg = CompressedGraph {
        partition: partition.clone(),
        c,
    };
    let diff = run.residual(g.adjacency());
    let (max_error, name) = if n <= opts.engine.budget.max_dim {
        (
            crate::cutalg::classical_cut_norm_with(&diff, &opts.engine.budget)?,
            "max_error < eps*n^2",
        )
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::mix_seed(seed, 0x5a5a));
        let mut worst = 0.0f64;
        for _ in 0..WEAK_GRAPH_SAMPLES {
            let s: Vec<f64> = (0..n).map(|_| f64::from(rng.gen::<bool>() as u8)).collect();
            let t: Vec<f64> = (0..n).map(|_| f64::from(rng.gen::<bool>() as u8)).collect();
            worst = worst.max(diff.bilinear(&s, &t).abs());
        }
        (worst, "sampled_max_error < eps*n^2")
    };
    let k = partition.num_parts();
    let exp = (1.0 / (eps * eps)).ceil();
    let size_bound = 4f64.powf(exp);
    let checks = vec![
        Check::new(name, max_error, Some(eps * (n * n) as f64), Relation::Less),
        Check::new(
            "parts <= 4^ceil(eps^-2)",
            k as f64,
            size_bound.is_finite().then_some(size_bound),
            Relation::LessEq,
        ),
        Check::new(
            "rounds < eps^-2",
            run.rounds() as f64,
            Some(1.0 / (eps * eps)),
            Relation::Less,
        ),
    ];
    let report = DiscrepancyReport {
        epsilon: eps,
        per_pair: Vec::new(),
        irregular_pairs: Vec::new(),
        sum_disc: 0.0,
        checks,
        partition,
        trace: run.trace,
        f_bound: Bound::Finite(1),
    };
    Ok((cg, report))
}

/// Strong decomposition with `f(n) = 16^n`, common refinement, and exact
/// pairwise discrepancies; checks `Σ disc ≤ ε n²`.
pub fn verify_szemeredi_disc(
    g: &Graph,
    eps: f64,
    mode: SearchMode,
    seed: u64,
) -> Result<DiscrepancyReport> {
    verify_szemeredi_disc_with(g, eps, mode, seed, &VerifyOptions::default())
}

pub fn verify_szemeredi_disc_with(
    g: &Graph,
    eps: f64,
    mode: SearchMode,
    seed: u64,
    opts: &VerifyOptions,
) -> Result<DiscrepancyReport> {
    let f = GrowthFunction::exponential(16)?;
    let (run, partition) = disc_pipeline(g, eps, f, mode, seed, opts)?;
    let parts = partition.parts();
    let all: Vec<usize> = (0..parts.len()).collect();
    let per_pair = pairwise(g, &parts, &all, None, opts.max_side)?;
    let sum_disc: f64 = per_pair.iter().map(|p| p.disc).sum();
    let n2 = (g.n() * g.n()) as f64;
    let (mut checks, f_bound) = engine_checks(&run, f, eps, parts.len());
    checks.insert(
        0,
        Check::new(
            "sum_disc <= eps*n^2",
            sum_disc,
            Some(eps * n2),
            Relation::LessEq,
        ),
    );
    Ok(DiscrepancyReport {
        epsilon: eps,
        per_pair,
        irregular_pairs: Vec::new(),
        sum_disc,
        checks,
        partition,
        trace: run.trace,
        f_bound,
    })
}

/// Runs the discrepancy pipeline at `ε²` and checks that irregular pairs
/// (`disc > ε|V_i||V_j|`) cover less than `ε n²` node pairs.
pub fn verify_irregularity(
    g: &Graph,
    eps: f64,
    mode: SearchMode,
    seed: u64,
) -> Result<DiscrepancyReport> {
    verify_irregularity_with(g, eps, mode, seed, &VerifyOptions::default())
}

pub fn verify_irregularity_with(
    g: &Graph,
    eps: f64,
    mode: SearchMode,
    seed: u64,
    opts: &VerifyOptions,
) -> Result<DiscrepancyReport> {
    let mut report = verify_szemeredi_disc_with(g, eps * eps, mode, seed, opts)?;
    report.epsilon = eps;
    let mut mass = 0usize;
    for p in &mut report.per_pair {
        p.irregular = p.disc > eps * (p.size_i * p.size_j) as f64;
        if p.irregular {
            mass += p.size_i * p.size_j;
            report.irregular_pairs.push((p.i, p.j));
        }
    }
    let n2 = (g.n() * g.n()) as f64;
    report.checks.push(Check::new(
        "irregular_mass < eps*n^2",
        mass as f64,
        Some(eps * n2),
        Relation::Less,
    ));
    Ok(report)
}

/// Exceptional-set phrasing: strong decomposition at `ε²` with
/// `f(n) = ⌈ε^{-2}⌉·16^n`, refinement, then every refinement part is cut
/// into chunks of `q = max(1, ⌊εn/k''⌋)` nodes with remainders moved to the
/// exceptional part (always part 0 of the returned partition).
pub fn verify_exceptional(
    g: &Graph,
    eps: f64,
    mode: SearchMode,
    seed: u64,
) -> Result<(Partition, DiscrepancyReport)> {
    verify_exceptional_with(g, eps, mode, seed, &VerifyOptions::default())
}

pub fn verify_exceptional_with(
    g: &Graph,
    eps: f64,
    mode: SearchMode,
    seed: u64,
    opts: &VerifyOptions,
) -> Result<(Partition, DiscrepancyReport)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    let n = g.n();
    let scale = (1.0 / (eps * eps)).ceil() as u64;
    let f = GrowthFunction::scaled_exponential(scale, 16)?;
    let (run, refinement) = disc_pipeline(g, eps * eps, f, mode, seed, opts)?;
    let k2 = refinement.num_parts();
    let q = ((eps * n as f64 / k2 as f64).floor() as usize).max(1);

    let mut part_of = vec![0usize; n];
    let mut next = 1;
    for part in refinement.parts() {
        let nodes = part.as_slice();
        let full = nodes.len() / q * q;
        for chunk in nodes[..full].chunks(q) {
            for &v in chunk {
                part_of[v] = next;
            }
            next += 1;
        }
        // remainder stays in part 0
    }
    let partition = Partition::new(part_of, next, Some(0))?;
    let parts = partition.parts();
    let regular = partition.regular_parts();
    let per_pair = pairwise(g, &parts, &regular, Some(eps), opts.max_side)?;
    let irregular_pairs: Vec<(usize, usize)> = per_pair
        .iter()
        .filter(|p| p.irregular)
        .map(|p| (p.i, p.j))
        .collect();
    let sum_disc = per_pair.iter().map(|p| p.disc).sum();
    let k = regular.len() as f64;
    let sizes: Vec<usize> = regular.iter().map(|&p| parts[p].len()).collect();
    let spread = match (sizes.iter().max(), sizes.iter().min()) {
        (Some(hi), Some(lo)) => (hi - lo) as f64,
        _ => 0.0,
    };

    let (mut checks, f_bound) = engine_checks(&run, f, eps * eps, k2);
    checks.insert(
        0,
        Check::new(
            "|V0| < eps*n",
            parts[0].len() as f64,
            Some(eps * n as f64),
            Relation::Less,
        ),
    );
    checks.insert(
        1,
        Check::new("part size spread", spread, Some(0.0), Relation::LessEq),
    );
    checks.insert(
        2,
        Check::new(
            "irregular_pairs <= eps*k^2",
            irregular_pairs.len() as f64,
            Some(eps * k * k),
            Relation::LessEq,
        ),
    );
    let report = DiscrepancyReport {
        epsilon: eps,
        per_pair,
        irregular_pairs,
        sum_disc,
        checks,
        partition: partition.clone(),
        trace: run.trace,
        f_bound,
    };
    Ok((partition, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutalg::CutAtom;

    #[test]
    fn refinement_examples() {
        let p = common_refinement(&CutDecomposition::empty(5, 5), 5).unwrap();
        assert_eq!(p.num_parts(), 1);

        let d =
            CutDecomposition::new(4, 4, vec![CutAtom::new([0, 1], [1, 2], 1.0).unwrap()]).unwrap();
        let p = common_refinement(&d, 4).unwrap();
        assert_eq!(p.num_parts(), 4);
        assert_eq!(p.part_of(), &[0, 1, 2, 3]);

        assert!(common_refinement(&CutDecomposition::empty(3, 4), 3).is_err());
    }

    #[test]
    fn refinement_groups_equal_signatures() {
        let d = CutDecomposition::new(
            6,
            6,
            vec![
                CutAtom::new([0, 1, 2], [0, 1, 2], 0.5).unwrap(),
                CutAtom::new([3, 4], [0, 1, 2], -1.0).unwrap(),
            ],
        )
        .unwrap();
        let p = common_refinement(&d, 6).unwrap();
        assert_eq!(p.part_of(), &[0, 0, 0, 1, 1, 2]);
        let c = block_constants(&d.realize(), &p).unwrap();
        assert_eq!(c[0][0], 0.5);
        assert_eq!(c[1][0], -1.0);
        assert_eq!(c[2][2], 0.0);
    }

    #[test]
    fn estimate_examples() {
        let cg = CompressedGraph {
            partition: Partition::single(5),
            c: vec![vec![0.3]],
        };
        assert_eq!(
            estimate_cut(&cg, &IndexSet::default(), &IndexSet::from([1, 2])).unwrap(),
            0.0
        );
        let e = estimate_cut(&cg, &IndexSet::from([0, 1]), &IndexSet::from([1, 2, 4])).unwrap();
        assert!((e - 0.3 * 6.0).abs() < 1e-15);
        assert!(estimate_cut(&cg, &IndexSet::from([7]), &IndexSet::from([1])).is_err());
    }

    #[test]
    fn cut_count_examples() {
        let g = Graph::complete_bipartite(2, 3);
        let s = IndexSet::from([0, 1]);
        let t = IndexSet::from([2, 3, 4]);
        assert_eq!(exact_cut_count(&g, &s, &t).unwrap(), 6);
        assert_eq!(exact_cut_count(&Graph::empty(4), &s, &s).unwrap(), 0);
        // an edge inside S ∩ T counts once per orientation
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let both = IndexSet::from([0, 1]);
        assert_eq!(exact_cut_count(&g, &both, &both).unwrap(), 2);
    }

    #[test]
    fn discrepancy_examples() {
        let k = Graph::complete_bipartite(3, 4);
        let (a, b) = (IndexSet::from([0, 1, 2]), IndexSet::from([3, 4, 5, 6]));
        assert_eq!(
            discrepancy_exact(&k, &a, &b, DensityMode::Free).unwrap(),
            0.0
        );
        let e = Graph::empty(6);
        assert_eq!(
            discrepancy_exact(&e, &a, &IndexSet::from([3, 4]), DensityMode::Free).unwrap(),
            0.0
        );

        let g = Graph::from_edges(4, &[(0, 2)]).unwrap();
        let d = discrepancy_exact(
            &g,
            &IndexSet::from([0, 1]),
            &IndexSet::from([2, 3]),
            DensityMode::Free,
        )
        .unwrap();
        assert!((d - 2.0 / 3.0).abs() < 1e-15);
        // density 1/4: the full single-edge block is off by 3/4
        let d = discrepancy_exact(
            &g,
            &IndexSet::from([0, 1]),
            &IndexSet::from([2, 3]),
            DensityMode::Fixed,
        )
        .unwrap();
        assert!((d - 0.75).abs() < 1e-15);
    }

    #[test]
    fn discrepancy_errors() {
        let g = Graph::gnp(30, 0.5, 1);
        let big = IndexSet::new((0..13).collect());
        let other = IndexSet::new((13..20).collect());
        assert!(matches!(
            discrepancy_exact(&g, &big, &other, DensityMode::Free),
            Err(Error::BudgetExceeded { .. })
        ));
        let x = IndexSet::from([0, 1, 2]);
        let y = IndexSet::from([2, 3]);
        assert!(matches!(
            discrepancy_exact(&g, &x, &y, DensityMode::Free),
            Err(Error::Domain(_))
        ));
        assert!(discrepancy_exact(&g, &x, &x, DensityMode::Free).is_ok());
    }

    #[test]
    fn edge_list_round_trip_and_errors() {
        let g = Graph::gnp(9, 0.4, 2);
        assert_eq!(g.to_string().parse::<Graph>().unwrap(), g);
        assert_eq!(Graph::gnp(10, 0.0, 1).to_string(), "10 0\n");
        assert_eq!(Graph::complete_bipartite(3, 4).edge_count(), 12);

        for (text, line) in [
            ("3 2\n0 1\n1 1\n", 3),
            ("3 2\n0 1\n1 0\n", 3),
            ("3 1\n0 5\n", 2),
            ("3 1\n0 1 2\n", 2),
            ("3 2\n0 1\n", 1),
        ] {
            match text.parse::<Graph>() {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn graph_validation() {
        assert!(Graph::new(Matrix::identity(3)).is_err());
        assert!(Graph::new(Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap()).is_err());
        assert!(Graph::new(Matrix::from_rows(&[[0.0, 0.5], [0.5, 0.0]]).unwrap()).is_err());
        assert!(Graph::from_edges(3, &[(0, 0)]).is_err());
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![0, 2], 3, None).is_err());
        assert!(Partition::new(vec![1, 1], 2, Some(0)).is_ok());
        assert!(Partition::new(vec![0, 3], 2, None).is_err());
    }

    #[test]
    fn empty_graph_verifiers() {
        let g = Graph::empty(8);
        let r = verify_szemeredi_disc(&g, 0.5, SearchMode::Exact, 0).unwrap();
        assert!(r.passed());
        assert_eq!(r.sum_disc, 0.0);
        let r = verify_irregularity(&g, 0.5, SearchMode::Exact, 0).unwrap();
        assert!(r.irregular_pairs.is_empty() && r.passed());
        let (p, r) = verify_exceptional(&g, 0.5, SearchMode::Exact, 0).unwrap();
        assert!(p.parts()[0].is_empty());
        assert!(r.irregular_pairs.is_empty() && r.passed());
    }
}
