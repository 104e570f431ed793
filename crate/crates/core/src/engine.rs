//! The greedy regularity engine.
//!
//! One loop serves every variant: starting from `Â = 0`, each round builds a
//! projection `Q` of the residual `A − Â` onto the span of up to
//! `f(k)` atoms, where `k` is the current rank (or cutrank) witness of `Â`,
//! and applies it while `‖Q‖_F > ε‖A‖_F`. Atoms inside a round are chosen
//! one at a time as the best single atom for what the round's span has not
//! yet explained. Weak variants are the strong ones with `f ≡ 1`.
//!
//! Every applied `Q` is an orthogonal projection of the residual, so the
//! potential `‖A − Â‖_F²` drops by exactly `‖Q‖_F² > ε²‖A‖_F²` per round
//! and the loop ends within `ε^{-2}` rounds.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cutalg::{self, CutAtom, CutDecomposition, IndexSet};
use crate::error::{Error, Result};
use crate::matcore::{self, frobenius_norm, Matrix, SpanProjector};
use crate::oracle::OracleBudget;

/// Values are exact up to this; anything larger is reported as saturated.
pub const SATURATION: u64 = u64::MAX;

/// `f^{(i)}`-style counts that may overflow 64 bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bound {
    Finite(u64),
    Saturated,
}

impl Bound {
    pub fn admits(self, k: u64) -> bool {
        match self {
            Bound::Finite(b) => k <= b,
            Bound::Saturated => true,
        }
    }

    pub fn is_saturated(self) -> bool {
        matches!(self, Bound::Saturated)
    }

    fn from_u128(x: u128) -> Self {
        u64::try_from(x)
            .ok()
            .filter(|&v| v != SATURATION)
            .map_or(Bound::Saturated, Bound::Finite)
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(v) => write!(f, "{v}"),
            Bound::Saturated => write!(f, "saturated"),
        }
    }
}

/// Nondecreasing growth function `f : ℕ → ℕ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrowthFunction {
    Constant(u64),
    /// `base^n`
    Exponential(u64),
    /// `scale · base^n`
    ScaledExponential(u64, u64),
}

impl GrowthFunction {
    pub fn constant(c: u64) -> Self {
        GrowthFunction::Constant(c)
    }

    pub fn exponential(base: u64) -> Result<Self> {
        Self::ScaledExponential(1, base).validate()?;
        Ok(GrowthFunction::Exponential(base))
    }

    pub fn scaled_exponential(scale: u64, base: u64) -> Result<Self> {
        let f = GrowthFunction::ScaledExponential(scale, base);
        f.validate()?;
        Ok(f)
    }

    fn validate(self) -> Result<()> {
        let mut prev = Bound::Finite(0);
        for n in 0..64 {
            let v = self.eval(Bound::Finite(n));
            if v < prev {
                return Err(Error::InvalidParameter(format!(
                    "growth function {self} is not nondecreasing (f({n}) < f({}))",
                    n - 1
                )));
            }
            prev = v;
        }
        Ok(())
    }

    pub fn eval(self, n: Bound) -> Bound {
        let pow = |base: u64| -> Bound {
            match n {
                Bound::Finite(e) => match base {
                    0 => Bound::Finite(u64::from(e == 0)),
                    1 => Bound::Finite(1),
                    b => u32::try_from(e)
                        .ok()
                        .and_then(|e| (b as u128).checked_pow(e))
                        .map_or(Bound::Saturated, Bound::from_u128),
                },
                Bound::Saturated => match base {
                    0 => Bound::Finite(0),
                    1 => Bound::Finite(1),
                    _ => Bound::Saturated,
                },
            }
        };
        match self {
            GrowthFunction::Constant(c) => Bound::Finite(c),
            GrowthFunction::Exponential(b) => pow(b),
            GrowthFunction::ScaledExponential(a, b) => match (a, pow(b)) {
                (0, _) | (_, Bound::Finite(0)) => Bound::Finite(0),
                (_, Bound::Saturated) => Bound::Saturated,
                (a, Bound::Finite(p)) => Bound::from_u128(a as u128 * p as u128),
            },
        }
    }
}

impl fmt::Display for GrowthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthFunction::Constant(c) => write!(f, "const:{c}"),
            GrowthFunction::Exponential(b) => write!(f, "exp:{b}"),
            GrowthFunction::ScaledExponential(a, b) => write!(f, "scaledexp:{a}:{b}"),
        }
    }
}

impl FromStr for GrowthFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad growth function `{s}`"));
        let num = |t: &str| t.parse::<u64>().map_err(|_| bad());
        let parts: Vec<&str> = s.split(':').collect();
        match parts[..] {
            ["const", c] => Ok(Self::constant(num(c)?)),
            ["exp", b] => Self::exponential(num(b)?),
            ["scaledexp", a, b] => Self::scaled_exponential(num(a)?, num(b)?),
            _ => Err(bad()),
        }
    }
}

/// `f^{(0)} = 0`, `f^{(i)} = f^{(i−1)} + f(f^{(i−1)})`.
pub fn f_iterate(f: GrowthFunction, i: u64) -> Bound {
    let mut acc = Bound::Finite(0);
    for _ in 0..i {
        acc = match (acc, f.eval(acc)) {
            (Bound::Finite(x), Bound::Finite(y)) => Bound::from_u128(x as u128 + y as u128),
            _ => return Bound::Saturated,
        };
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub potential_before: f64,
    pub potential_after: f64,
    pub atoms_added: usize,
    pub rank_after: usize,
    pub q_magnitude: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HaltingCertificate {
    /// Single-atom search was exact (power iteration or exhaustive cut search).
    Exact,
    /// Single-atom search was a heuristic; halting only means it found nothing.
    Greedy,
}

/// Serialized trace; field order is the wire order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTrace {
    pub mode: String,
    pub epsilon: f64,
    pub f_spec: String,
    pub rounds: Vec<RoundRecord>,
    pub k_witness: usize,
    pub halting_certificate: HaltingCertificate,
}

impl DecompositionTrace {
    pub fn to_json(&self) -> String {
        crate::report::to_json_string(self)
    }
}

/// Rank-one term `coeff · left rightᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct RankOneAtom {
    pub coeff: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decomposition {
    Rank(Vec<RankOneAtom>),
    Cut(CutDecomposition),
}

#[derive(Clone, Debug)]
pub struct RegularityResult {
    pub a_hat: Matrix,
    pub decomposition: Decomposition,
    pub k_witness: usize,
    pub trace: DecompositionTrace,
    pub halting_certificate: HaltingCertificate,
}

impl RegularityResult {
    pub fn rounds(&self) -> usize {
        self.trace.rounds.len()
    }

    pub fn residual(&self, a: &Matrix) -> Matrix {
        a.sub(&self.a_hat).expect("same shape")
    }

    pub fn cut_decomposition(&self) -> Option<&CutDecomposition> {
        match &self.decomposition {
            Decomposition::Cut(d) => Some(d),
            Decomposition::Rank(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exact,
    Heuristic,
}

impl FromStr for SearchMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SearchMode::Exact),
            "heuristic" => Ok(SearchMode::Heuristic),
            _ => Err(Error::InvalidParameter(format!("unknown mode `{s}`"))),
        }
    }
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchMode::Exact => "exact",
            SearchMode::Heuristic => "heuristic",
        })
    }
}

/// Tunables shared by all engine entry points.
#[derive(Clone, Debug)]
pub struct EngineOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub budget: OracleBudget,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            tol: matcore::DEFAULT_TOL,
            max_iters: matcore::DEFAULT_MAX_ITERS,
            restarts: cutalg::DEFAULT_RESTARTS,
            budget: OracleBudget::default(),
        }
    }
}

/// A family of atoms the engine can search over.
pub trait AtomFamily {
    type Atom: Clone;

    fn mode_name(&self) -> String;
    fn certificate(&self) -> HaltingCertificate;

    /// Best single atom for `residual` (maximizing the magnitude of the
    /// projection onto it), or `None` when the residual is zero.
    fn best_atom(&self, residual: &Matrix, seed: u64) -> Result<Option<(Self::Atom, f64)>>;

    /// The atom as an (unnormalized) matrix.
    fn atom_matrix(&self, atom: &Self::Atom, rows: usize, cols: usize) -> Matrix;

    /// Largest number of independent atoms a single round can use.
    fn span_cap(&self, rows: usize, cols: usize) -> usize;
}

pub struct RankAtoms {
    pub tol: f64,
    pub max_iters: usize,
}

impl AtomFamily for RankAtoms {
    type Atom = (Vec<f64>, Vec<f64>);

    fn mode_name(&self) -> String {
        "rank".into()
    }

    fn certificate(&self) -> HaltingCertificate {
        HaltingCertificate::Exact
    }

    fn best_atom(&self, residual: &Matrix, seed: u64) -> Result<Option<(Self::Atom, f64)>> {
        match matcore::top_singular_triple(residual, self.tol, self.max_iters, seed) {
            Ok(t) => Ok(Some(((t.left, t.right), t.sigma))),
            Err(Error::ZeroMatrix) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn atom_matrix(&self, (u, v): &Self::Atom, _: usize, _: usize) -> Matrix {
        Matrix::outer(u, v).expect("finite singular vectors")
    }

    fn span_cap(&self, rows: usize, cols: usize) -> usize {
        rows.min(cols)
    }
}

pub struct CutAtoms {
    pub mode: SearchMode,
    pub restarts: usize,
    pub budget: OracleBudget,
}

impl AtomFamily for CutAtoms {
    type Atom = (IndexSet, IndexSet);

    fn mode_name(&self) -> String {
        format!("cut-{}", self.mode)
    }

    fn certificate(&self) -> HaltingCertificate {
        match self.mode {
            SearchMode::Exact => HaltingCertificate::Exact,
            SearchMode::Heuristic => HaltingCertificate::Greedy,
        }
    }

    fn best_atom(&self, residual: &Matrix, seed: u64) -> Result<Option<(Self::Atom, f64)>> {
        if residual.is_zero() {
            return Ok(None);
        }
        let w = match self.mode {
            SearchMode::Exact => cutalg::cut_norm_exact_with(residual, &self.budget)?,
            SearchMode::Heuristic => cutalg::cut_norm_heuristic(residual, self.restarts, seed)?,
        };
        Ok(Some(((w.rows, w.cols), w.value)))
    }

    fn atom_matrix(&self, (r, c): &Self::Atom, rows: usize, cols: usize) -> Matrix {
        cutalg::block_indicator(r, c, rows, cols)
    }

    fn span_cap(&self, rows: usize, cols: usize) -> usize {
        rows * cols
    }
}

/// Intra-round atoms whose best projection falls below this fraction of
/// `‖A‖_F` are numerically zero and end the round's gathering.
const GATHER_FLOOR: f64 = 1e-12;

/// Runs the greedy loop for an arbitrary atom family.
pub fn decompose<F: AtomFamily>(
    family: &F,
    a: &Matrix,
    eps: f64,
    f: GrowthFunction,
    seed: u64,
) -> Result<(Matrix, Vec<Vec<(F::Atom, f64)>>, DecompositionTrace)> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    let (rows, cols) = a.shape();
    let norm_a = frobenius_norm(a);
    let threshold = eps * norm_a;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = DecompositionTrace {
        mode: family.mode_name(),
        epsilon: eps,
        f_spec: f.to_string(),
        rounds: Vec::new(),
        k_witness: 0,
        halting_certificate: family.certificate(),
    };
    let mut a_hat = Matrix::zeros(rows, cols);
    let mut residual = a.clone();
    let mut rounds: Vec<Vec<(F::Atom, f64)>> = Vec::new();
    let mut potential = norm_a * norm_a;
    // the potential argument gives < ε^{-2}; the guard only catches bugs
    let guard = (1.0 / (eps * eps)).ceil() as usize + 2;

    loop {
        let want = match f.eval(Bound::Finite(trace.k_witness as u64)) {
            Bound::Finite(x) => x.min(usize::MAX as u64) as usize,
            Bound::Saturated => usize::MAX,
        }
        .min(family.span_cap(rows, cols));

        let mut projector = SpanProjector::new(rows * cols);
        let mut chosen: Vec<F::Atom> = Vec::new();
        let mut inner = residual.clone();
        let mut q = vec![0.0; rows * cols];
        let mut coeffs: Vec<f64> = Vec::new();
        while chosen.len() < want {
            let found = family
                .best_atom(&inner, rng.next_u64())
                .map_err(|e| Error::Aborted {
                    trace: Box::new(trace.clone()),
                    source: Box::new(e),
                })?;
            let Some((atom, mag)) = found else { break };
            if mag <= GATHER_FLOOR * norm_a {
                break;
            }
            if !projector.push(family.atom_matrix(&atom, rows, cols).as_slice()) {
                break;
            }
            chosen.push(atom);
            (q, coeffs) = projector.project(residual.as_slice());
            let data = residual
                .as_slice()
                .iter()
                .zip(&q)
                .map(|(r, x)| r - x)
                .collect();
            inner = matcore::from_flat(rows, cols, data);
        }
        let q = matcore::from_flat(rows, cols, q);
        let q_mag = frobenius_norm(&q);
        if !(q_mag > threshold) {
            break;
        }
        if trace.rounds.len() >= guard {
            return Err(Error::Aborted {
                trace: Box::new(trace),
                source: Box::new(Error::Domain(
                    "round count exceeded the potential bound".into(),
                )),
            });
        }

        let atoms: Vec<(F::Atom, f64)> = chosen
            .into_iter()
            .zip(coeffs)
            .enumerate()
            .filter(|(i, _)| projector.is_kept(*i))
            .map(|(_, x)| x)
            .collect();
        a_hat = a_hat.add(&q).expect("same shape");
        residual = a.sub(&a_hat).expect("same shape");
        let before = potential;
        potential = frobenius_norm(&residual).powi(2);
        trace.k_witness += atoms.len();
        trace.rounds.push(RoundRecord {
            potential_before: before,
            potential_after: potential,
            atoms_added: atoms.len(),
            rank_after: trace.k_witness,
            q_magnitude: q_mag,
        });
        rounds.push(atoms);
    }
    Ok((a_hat, rounds, trace))
}

fn rank_result(
    a: &Matrix,
    eps: f64,
    f: GrowthFunction,
    seed: u64,
    opts: &EngineOptions,
) -> Result<RegularityResult> {
    let family = RankAtoms {
        tol: opts.tol,
        max_iters: opts.max_iters,
    };
    let (a_hat, rounds, trace) = decompose(&family, a, eps, f, seed)?;
    let atoms = rounds
        .into_iter()
        .flatten()
        .map(|((left, right), coeff)| RankOneAtom { coeff, left, right })
        .collect();
    Ok(RegularityResult {
        a_hat,
        decomposition: Decomposition::Rank(atoms),
        k_witness: trace.k_witness,
        halting_certificate: trace.halting_certificate,
        trace,
    })
}

fn cut_result(
    a: &Matrix,
    eps: f64,
    f: GrowthFunction,
    mode: SearchMode,
    seed: u64,
    opts: &EngineOptions,
) -> Result<RegularityResult> {
    let family = CutAtoms {
        mode,
        restarts: opts.restarts,
        budget: opts.budget.clone(),
    };
    if mode == SearchMode::Exact {
        let d = a.rows().max(a.cols());
        if d > opts.budget.max_dim {
            return Err(Error::budget(
                "exact cut decomposition",
                format!("{}x{}", a.rows(), a.cols()),
                format!("{} per side", opts.budget.max_dim),
            ));
        }
    }
    let (_, rounds, trace) = decompose(&family, a, eps, f, seed)?;
    let mut dec = CutDecomposition::empty(a.rows(), a.cols());
    for ((rs, cs), coeff) in rounds.into_iter().flatten() {
        dec.push(CutAtom::new(rs, cs, coeff)?)?;
    }
    // realize() sums atoms in a fixed order, so Â is exactly constant on
    // every block of the atoms' common refinement
    let a_hat = dec.realize();
    Ok(RegularityResult {
        a_hat,
        decomposition: Decomposition::Cut(dec),
        k_witness: trace.k_witness,
        halting_certificate: trace.halting_certificate,
        trace,
    })
}

/// Greedy rank-1 approximation: rank `< ε^{-2}`, residual `F[1] ≤ ε‖A‖_F`.
pub fn weak_decompose_rank(a: &Matrix, eps: f64, seed: u64) -> Result<RegularityResult> {
    strong_decompose_rank(a, eps, GrowthFunction::constant(1), seed)
}

pub fn strong_decompose_rank(
    a: &Matrix,
    eps: f64,
    f: GrowthFunction,
    seed: u64,
) -> Result<RegularityResult> {
    rank_result(a, eps, f, seed, &EngineOptions::default())
}

pub fn strong_decompose_rank_with(
    a: &Matrix,
    eps: f64,
    f: GrowthFunction,
    seed: u64,
    opts: &EngineOptions,
) -> Result<RegularityResult> {
    rank_result(a, eps, f, seed, opts)
}

/// Greedy cut decomposition: cutrank `< ε^{-2}`; in exact mode the residual
/// satisfies `■[1] ≤ ε‖A‖_F`.
pub fn weak_decompose_cut(
    a: &Matrix,
    eps: f64,
    mode: SearchMode,
    seed: u64,
) -> Result<RegularityResult> {
    strong_decompose_cut(a, eps, GrowthFunction::constant(1), mode, seed)
}

pub fn strong_decompose_cut(
    a: &Matrix,
    eps: f64,
    f: GrowthFunction,
    mode: SearchMode,
    seed: u64,
) -> Result<RegularityResult> {
    cut_result(a, eps, f, mode, seed, &EngineOptions::default())
}

pub fn strong_decompose_cut_with(
    a: &Matrix,
    eps: f64,
    f: GrowthFunction,
    mode: SearchMode,
    seed: u64,
    opts: &EngineOptions,
) -> Result<RegularityResult> {
    cut_result(a, eps, f, mode, seed, opts)
}
