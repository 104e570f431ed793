//! Dense real matrices, Frobenius geometry, rank-1 projections and the
//! top-k singular-value norms computed by deflated power iteration.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mix_seed;

/// Relative tolerance used by the power iteration unless a caller overrides it.
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 10_000;
/// Fresh-seed restarts attempted after a stagnating power iteration.
pub const POWER_RESTARTS: usize = 3;
/// Relative drop tolerance for dependent directions in span projections.
pub const SPAN_DROP_TOL: f64 = 1e-12;

/// Dense row-major real matrix with finite entries and positive dimensions.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("{rows}x{cols} has an empty side")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix sides must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut data = vec![0.0; n * n];
        for (i, &v) in values.iter().enumerate() {
            data[i * n + i] = v;
        }
        Self::new(n, n, data)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|x| x.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != c {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {c}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(r, c, data)
    }

    /// Outer product `u vᵀ`.
    pub fn outer(u: &[f64], v: &[f64]) -> Result<Self> {
        let mut data = Vec::with_capacity(u.len() * v.len());
        for &ui in u {
            data.extend(v.iter().map(|&vj| ui * vj));
        }
        Self::new(u.len(), v.len(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            data.extend((0..self.rows).map(|i| self.data[i * self.cols + j]));
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    fn check_same_shape(&self, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Matrix { data, ..*self })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Matrix { data, ..*self })
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix {
            data: self.data.iter().map(|x| x * factor).collect(),
            ..*self
        }
    }

    /// `self += factor * u vᵀ`
    pub fn add_outer(&mut self, factor: f64, u: &[f64], v: &[f64]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for (i, &ui) in u.iter().enumerate() {
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (x, &vj) in row.iter_mut().zip(v) {
                *x += factor * ui * vj;
            }
        }
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ y`
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    /// `sᵀ A t`
    pub fn bilinear(&self, s: &[f64], t: &[f64]) -> f64 {
        dot(s, &self.mul_vec(t))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Text format: a `rows cols` header, then one line per row of
/// space-separated decimal entries.
impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|x| format!("{x}")).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for Matrix {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: hline + 1,
                msg: format!("bad header: {e}"),
            })?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse {
                line: hline + 1,
                msg: "header must be `rows cols`".into(),
            });
        };
        let mut data = Vec::with_capacity(rows * cols);
        let mut seen = 0;
        for (idx, line) in lines {
            if seen == rows {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("more than {rows} rows"),
                });
            }
            let before = data.len();
            for tok in line.split_whitespace() {
                let x: f64 = tok.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("`{tok}` is not a number"),
                })?;
                if !x.is_finite() {
                    return Err(Error::Parse {
                        line: idx + 1,
                        msg: format!("non-finite entry `{tok}`"),
                    });
                }
                data.push(x);
            }
            if data.len() - before != cols {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected {cols} entries, found {}", data.len() - before),
                });
            }
            seen += 1;
        }
        if seen != rows {
            return Err(Error::Parse {
                line: hline + 1 + seen,
                msg: format!("expected {rows} rows, found {seen}"),
            });
        }
        Matrix::new(rows, cols, data).map_err(|e| Error::Parse {
            line: hline + 1,
            msg: e.to_string(),
        })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn frobenius_norm(a: &Matrix) -> f64 {
    norm2(&a.data)
}

pub fn frobenius_inner(a: &Matrix, b: &Matrix) -> Result<f64> {
    a.check_same_shape(b)?;
    Ok(dot(&a.data, &b.data))
}

/// Projection of `r` onto the line spanned by `u vᵀ`, with its Frobenius magnitude.
pub fn project_onto_rank1(r: &Matrix, u: &[f64], v: &[f64]) -> Result<(Matrix, f64)> {
    if u.len() != r.rows || v.len() != r.cols {
        return Err(Error::Dimension(format!(
            "direction lengths ({}, {}) for a {}x{} matrix",
            u.len(),
            v.len(),
            r.rows,
            r.cols
        )));
    }
    let (uu, vv) = (dot(u, u), dot(v, v));
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::DegenerateDirection(
            "zero vector in rank-1 direction",
        ));
    }
    let (nu, nv) = (uu.sqrt(), vv.sqrt());
    let inner = r.bilinear(u, v);
    let coeff = inner / (uu * vv);
    let mut q = Matrix::zeros(r.rows, r.cols);
    q.add_outer(coeff, u, v);
    Ok((q, inner.abs() / (nu * nv)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingularTriple {
    pub sigma: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// Largest singular triple by power iteration on `AᵀA`.
///
/// Converged once the eigen-residual `‖AᵀA v − λ v‖` drops below
/// `tol·‖A‖_F·√λ`, which bounds the error in sigma by about `tol·‖A‖_F / 2`.
/// A run that stalls for `max_iters` steps is restarted from a fresh seed up
/// to [`POWER_RESTARTS`] times before giving up with the best iterate.
pub fn top_singular_triple(
    a: &Matrix,
    tol: f64,
    max_iters: usize,
    seed: u64,
) -> Result<SingularTriple> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tol must be positive, got {tol}"
        )));
    }
    let fro = frobenius_norm(a);
    if fro == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let n = a.cols;
    let mut best: Option<SingularTriple> = None;
    let mut total_iters = 0;

    'attempt: for attempt in 0..=POWER_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, attempt as u64));
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nv = norm2(&v);
        if nv == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= nv);

        for _ in 0..max_iters {
            total_iters += 1;
            let x = a.mul_vec(&v);
            let y = a.tr_mul_vec(&x);
            let lambda = dot(&v, &y);
            let sigma = norm2(&x);
            if best.as_ref().is_none_or(|b| sigma > b.sigma) && sigma > 0.0 {
                best = Some(SingularTriple {
                    sigma,
                    left: x.iter().map(|xi| xi / sigma).collect(),
                    right: v.clone(),
                });
            }
            let residual = y
                .iter()
                .zip(&v)
                .map(|(yi, vi)| (yi - lambda * vi).powi(2))
                .sum::<f64>()
                .sqrt();
            if sigma > 0.0 && residual <= tol * fro * sigma {
                return Ok(SingularTriple {
                    sigma,
                    left: x.iter().map(|xi| xi / sigma).collect(),
                    right: v,
                });
            }
            let ny = norm2(&y);
            if ny == 0.0 {
                // started inside the null space
                continue 'attempt;
            }
            v = y.into_iter().map(|yi| yi / ny).collect();
        }
    }
    let best = best.unwrap_or(SingularTriple {
        sigma: 0.0,
        left: vec![0.0; a.rows],
        right: vec![0.0; n],
    });
    Err(Error::Convergence {
        iterations: total_iters,
        best: Box::new(best),
    })
}

/// `‖A‖_{F[k]}`: root of the summed squares of the top `k` singular values.
pub fn f_top_k_norm(a: &Matrix, k: usize, tol: f64, seed: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let fro = frobenius_norm(a);
    if k >= a.rows.min(a.cols) {
        return Ok(fro);
    }
    let mut residual = a.clone();
    let mut mass = 0.0;
    for i in 0..k {
        if frobenius_norm(&residual) <= 1e-13 * fro {
            break;
        }
        match top_singular_triple(
            &residual,
            tol,
            DEFAULT_MAX_ITERS,
            mix_seed(seed, 1000 + i as u64),
        ) {
            Ok(t) => {
                mass += t.sigma * t.sigma;
                residual.add_outer(-t.sigma, &t.left, &t.right);
            }
            Err(Error::ZeroMatrix) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(mass.sqrt().min(fro))
}

/// Incremental orthogonal projector onto the span of a growing list of
/// matrices (flattened row-major). Gram–Schmidt with one reorthogonalization
/// pass; a direction whose remainder has squared norm at most
/// `SPAN_DROP_TOL · max‖atom‖²` is treated as dependent and gets coefficient 0.
#[derive(Clone, Debug)]
pub struct SpanProjector {
    len: usize,
    basis: Vec<Vec<f64>>,
    // column j: coordinates of kept atom j in the orthonormal basis
    tri: Vec<Vec<f64>>,
    kept: Vec<bool>,
    max_norm_sq: f64,
    // first kept direction as given; a one-dimensional projection is done
    // directly so integer data gives exact coefficients
    first: Option<Vec<f64>>,
}

impl SpanProjector {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            basis: Vec::new(),
            tri: Vec::new(),
            kept: Vec::new(),
            max_norm_sq: 0.0,
            first: None,
        }
    }

    /// Adds a direction. Returns false when it was dropped as dependent.
    pub fn push(&mut self, atom: &[f64]) -> bool {
        assert_eq!(atom.len(), self.len);
        let norm_sq = dot(atom, atom);
        self.max_norm_sq = self.max_norm_sq.max(norm_sq);
        let mut rem = atom.to_vec();
        let mut coords = vec![0.0; self.basis.len()];
        for _ in 0..2 {
            for (c, e) in coords.iter_mut().zip(&self.basis) {
                let h = dot(e, &rem);
                *c += h;
                rem.iter_mut().zip(e).for_each(|(r, ei)| *r -= h * ei);
            }
        }
        let rem_sq = dot(&rem, &rem);
        if rem_sq <= SPAN_DROP_TOL * self.max_norm_sq || rem_sq == 0.0 {
            self.kept.push(false);
            return false;
        }
        if self.first.is_none() {
            self.first = Some(atom.to_vec());
        }
        let rn = rem_sq.sqrt();
        rem.iter_mut().for_each(|r| *r /= rn);
        coords.push(rn);
        self.basis.push(rem);
        self.tri.push(coords);
        self.kept.push(true);
        true
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_kept(&self, idx: usize) -> bool {
        self.kept[idx]
    }

    /// Orthogonal projection of `r` and the coefficients expressing it in the
    /// pushed directions (zero for dropped ones).
    pub fn project(&self, r: &[f64]) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(r.len(), self.len);
        if let (1, Some(first)) = (self.basis.len(), &self.first) {
            let c = dot(first, r) / dot(first, first);
            let q = first.iter().map(|x| c * x).collect();
            let coeffs = self.kept.iter().map(|&k| if k { c } else { 0.0 }).collect();
            return (q, coeffs);
        }
        let b: Vec<f64> = self.basis.iter().map(|e| dot(e, r)).collect();
        let mut q = vec![0.0; self.len];
        for (bi, e) in b.iter().zip(&self.basis) {
            q.iter_mut().zip(e).for_each(|(qi, ei)| *qi += bi * ei);
        }
        // back-substitution on the upper-triangular factor
        let d = self.basis.len();
        let mut x = vec![0.0; d];
        for j in (0..d).rev() {
            let mut s = b[j];
            for (l, xl) in x.iter().enumerate().take(d).skip(j + 1) {
                s -= self.tri[l][j] * xl;
            }
            x[j] = s / self.tri[j][j];
        }
        let mut coeffs = Vec::with_capacity(self.kept.len());
        let mut it = x.into_iter();
        for &k in &self.kept {
            coeffs.push(if k { it.next().unwrap() } else { 0.0 });
        }
        (q, coeffs)
    }
}

/// Projection of `r` onto the span of `atoms` (all with `r`'s shape).
pub fn project_onto_span(r: &Matrix, atoms: &[Matrix]) -> Result<(Matrix, Vec<f64>)> {
    let mut proj = SpanProjector::new(r.data.len());
    for a in atoms {
        r.check_same_shape(a)?;
        proj.push(&a.data);
    }
    let (q, coeffs) = proj.project(&r.data);
    Ok((Matrix { data: q, ..*r }, coeffs))
}

pub(crate) fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Matrix {
    debug_assert_eq!(data.len(), rows * cols);
    Matrix { rows, cols, data }
}
