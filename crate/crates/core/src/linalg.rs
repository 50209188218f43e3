//! Dense complex linear algebra shared by every other module.
//!
//! Storage is `nalgebra`'s dynamically sized matrices over `Complex64`. Composite
//! indices always follow the row-major pair convention `(i, e) -> i * dim_e + e`,
//! which is also what [`tensor`] produces.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Default tolerance for structural checks (unitarity, PVM axioms).
pub const DEFAULT_TOL: f64 = 1e-10;

/// Residual norm below which a Gram-Schmidt candidate is rejected.
pub const COMPLETION_REJECT: f64 = 1e-8;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Builds a complex matrix from real row-major rows.
pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let r = rows.len();
    let cols = rows.first().map_or(0, |row| row.len());
    CMatrix::from_fn(r, cols, |i, j| c(rows[i][j], 0.0))
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

/// `e_i` in dimension `n`.
pub fn basis_vector(n: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = ONE;
    v
}

/// The configuration projector `P_i = e_i e_i^†`.
pub fn configuration_projector(n: usize, i: usize) -> CMatrix {
    let mut p = CMatrix::zeros(n, n);
    p[(i, i)] = ONE;
    p
}

/// 2x2 rotation `[[cos a, -sin a], [sin a, cos a]]`.
pub fn rotation(angle: f64) -> CMatrix {
    let (s, co) = angle.sin_cos();
    from_real_rows(&[&[co, -s], &[s, co]])
}

/// Permutation unitary with `perm[j]` the image of basis vector `j`.
pub fn permutation_matrix(perm: &[usize]) -> CMatrix {
    let n = perm.len();
    let mut m = CMatrix::zeros(n, n);
    for (j, &i) in perm.iter().enumerate() {
        m[(i, j)] = ONE;
    }
    m
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff shape mismatch");
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn max_abs_diff_real(a: &RMatrix, b: &RMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff_real shape mismatch");
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Entrywise `|M_ij|^2`.
pub fn modulus_squared(m: &CMatrix) -> RMatrix {
    m.map(|z| z.norm_sqr())
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_square(m: &CMatrix, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "{what} must be square and non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

pub fn ensure_same_shape(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "expected matching shapes, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Entrywise (Schur-Hadamard) product.
pub fn schur_hadamard(x: &CMatrix, y: &CMatrix) -> Result<CMatrix> {
    ensure_same_shape(x, y)?;
    Ok(x.component_mul(y))
}

/// Kronecker product; row `(i, e)` of the result is `i * y.nrows() + e`.
pub fn tensor(x: &CMatrix, y: &CMatrix) -> CMatrix {
    x.kronecker(y)
}

/// Tensor product of an ordered list of factors.
pub fn tensor_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(identity(1), |acc, f| tensor(&acc, f))
}

/// Which factor of a bipartite space survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Traces out one factor of a square matrix on a `dims.0 * dims.1` space.
pub fn partial_trace(m: &CMatrix, dims: (usize, usize), keep: Keep) -> Result<CMatrix> {
    let (da, db) = dims;
    let side = ensure_square(m, "partial_trace input")?;
    if da == 0 || db == 0 || da * db != side {
        return Err(Error::Dimension(format!(
            "partial_trace: side {side} does not factor as {da}x{db}"
        )));
    }
    let out = match keep {
        Keep::First => CMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|e| m[(i * db + e, j * db + e)]).sum()
        }),
        Keep::Second => CMatrix::from_fn(db, db, |e, f| {
            (0..da).map(|i| m[(i * db + e, i * db + f)]).sum()
        }),
    };
    Ok(out)
}

/// `max |M^† M - I|`; infinite for non-square input.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    max_abs_diff(&(m.adjoint() * m), &identity(n))
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    unitarity_residual(m) <= tol
}

pub fn ensure_unitary(m: &CMatrix, tol: f64) -> Result<()> {
    ensure_square(m, "unitary")?;
    let residual = unitarity_residual(m);
    if residual > tol {
        return Err(Error::NotUnitary { residual });
    }
    Ok(())
}

/// `max |M - M^†|`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    max_abs_diff(m, &m.adjoint())
}

pub fn ensure_self_adjoint(m: &CMatrix, tol: f64) -> Result<()> {
    ensure_square(m, "self-adjoint matrix")?;
    let residual = hermiticity_residual(m);
    if residual > tol {
        return Err(Error::NotSelfAdjoint { residual });
    }
    Ok(())
}

pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Extends a matrix with orthonormal columns to a square unitary.
///
/// The first `n` columns are `v`'s own. The rest come from scanning canonical basis
/// vectors in index order, projecting out the span built so far (modified
/// Gram-Schmidt, two passes) and keeping residuals with norm above
/// [`COMPLETION_REJECT`].
pub fn complete_isometry(v: &CMatrix) -> Result<CMatrix> {
    let (m, n) = v.shape();
    if n == 0 || n > m {
        return Err(Error::Dimension(format!(
            "complete_isometry needs a tall m x n matrix, got {m}x{n}"
        )));
    }
    let gram_residual = max_abs_diff(&(v.adjoint() * v), &identity(n));
    if gram_residual > DEFAULT_TOL {
        return Err(Error::Precondition(format!(
            "columns are not orthonormal (residual {gram_residual:.3e})"
        )));
    }

    let mut columns: Vec<CVector> = (0..n).map(|j| v.column(j).into_owned()).collect();
    for k in 0..m {
        if columns.len() == m {
            break;
        }
        let mut r = basis_vector(m, k);
        for _ in 0..2 {
            for q in &columns {
                let overlap = q.dotc(&r);
                if overlap != ZERO {
                    r -= q * overlap;
                }
            }
        }
        let norm = r.norm();
        if norm > COMPLETION_REJECT {
            columns.push(r.unscale(norm));
        }
    }
    if columns.len() != m {
        return Err(Error::Internal(format!(
            "Gram-Schmidt completion produced {} of {m} columns",
            columns.len()
        )));
    }
    Ok(CMatrix::from_columns(&columns))
}

/// A projection-valued measure: orthogonal projectors that are mutually exclusive
/// and sum to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Pvm {
    dim: usize,
    projectors: Vec<CMatrix>,
}

impl Pvm {
    pub fn new(projectors: Vec<CMatrix>, tol: f64) -> Result<Self> {
        let first = projectors
            .first()
            .ok_or_else(|| Error::Precondition("a PVM needs at least one projector".into()))?;
        let dim = ensure_square(first, "projector")?;
        let mut total = CMatrix::zeros(dim, dim);
        for (a, p) in projectors.iter().enumerate() {
            if p.shape() != (dim, dim) {
                return Err(Error::Dimension(format!("projector {a} is not {dim}x{dim}")));
            }
            if hermiticity_residual(p) > tol {
                return Err(Error::Precondition(format!("projector {a} is not self-adjoint")));
            }
            for (b, q) in projectors.iter().enumerate() {
                let expected = if a == b { p.clone() } else { CMatrix::zeros(dim, dim) };
                if max_abs_diff(&(p * q), &expected) > tol {
                    return Err(Error::Precondition(format!(
                        "projectors {a} and {b} violate mutual exclusivity"
                    )));
                }
            }
            total += p;
        }
        if max_abs_diff(&total, &identity(dim)) > tol {
            return Err(Error::Precondition("projectors do not sum to the identity".into()));
        }
        Ok(Self { dim, projectors })
    }

    /// The configuration PVM `{P_1, ..., P_n}`.
    pub fn configuration(n: usize) -> Self {
        Self {
            dim: n,
            projectors: (0..n).map(|i| configuration_projector(n, i)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn projector(&self, a: usize) -> Result<&CMatrix> {
        self.projectors.get(a).ok_or(Error::OutOfRange {
            index: a,
            dim: self.projectors.len(),
        })
    }
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in ascending order.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let columns: Vec<CVector> = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();
    (values, CMatrix::from_columns(&columns))
}

/// `exp(-i * scale * H)` for Hermitian `H`.
pub fn exp_i_hermitian(h: &CMatrix, scale: f64) -> CMatrix {
    let (values, vectors) = eigh(h);
    let phases = CVector::from_iterator(
        values.len(),
        values.iter().map(|&lam| Complex64::from_polar(1.0, -scale * lam)),
    );
    &vectors * CMatrix::from_diagonal(&phases) * vectors.adjoint()
}

/// Hermitian `G` with `exp(i G) = W` for unitary `W`, eigenphases in `(-pi, pi]`.
///
/// The Hermitian and anti-Hermitian parts of a unitary commute, so a generic real
/// combination of them shares its eigenvectors.
pub fn log_unitary(w: &CMatrix) -> Result<CMatrix> {
    ensure_unitary(w, 1e-8)?;
    let n = w.nrows();
    let herm = (w + w.adjoint()).scale(0.5);
    let anti = (w - w.adjoint()) * c(0.0, -0.5);
    let mut best = f64::INFINITY;
    for mix in [0.618_033_988_749_894_9, 0.414_213_562_373_095_1, 1.732_050_807_568_877_2] {
        let (_, vectors) = eigh(&(&herm + &anti * c(mix, 0.0)));
        let diag = vectors.adjoint() * w * &vectors;
        let phases =
            CVector::from_iterator(n, (0..n).map(|k| c(diag[(k, k)].arg(), 0.0)));
        let g = &vectors * CMatrix::from_diagonal(&phases) * vectors.adjoint();
        let residual = max_abs_diff(&exp_i_hermitian(&g, -1.0), w);
        if residual < 1e-10 {
            return Ok(symmetrize(&g));
        }
        best = best.min(residual);
    }
    Err(Error::Internal(format!(
        "unitary logarithm failed to converge (residual {best:.3e})"
    )))
}

fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.16e}{}{:.16e}j", z.re, sign, z.im.abs())
}

fn parse_complex(token: &str) -> Option<Complex64> {
    let body = token.strip_suffix('j').or_else(|| token.strip_suffix('i'));
    let Some(body) = body else {
        return token.parse::<f64>().ok().map(|re| c(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| {
        (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E')
    });
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().ok()?;
            let im = body[k..].parse::<f64>().ok()?;
            Some(c(re, im))
        }
        None => body.parse::<f64>().ok().map(|im| c(0.0, im)),
    }
}

/// Serializes a matrix in the fixture text format: a `rows cols` header followed by
/// one line per row of `re+imj` entries at 17 significant digits.
pub fn format_matrix(m: &CMatrix) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_complex(m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parses one matrix in the fixture text format.
pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    let mut all = parse_matrices(text)?;
    match all.len() {
        1 => Ok(all.remove(0)),
        k => Err(Error::Parse {
            line: 1,
            message: format!("expected exactly one matrix, found {k}"),
        }),
    }
}

/// Parses a sequence of concatenated fixture matrices (e.g. a Kraus set).
/// Lines starting with `#` are comments.
pub fn parse_matrices(text: &str) -> Result<Vec<CMatrix>> {
    let tokens: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, line)| !line.trim_start().starts_with('#'))
        .flat_map(|(k, line)| line.split_whitespace().map(move |tok| (k + 1, tok)))
        .collect();
    let mut pos = 0;
    let mut out = Vec::new();
    let parse_dim = |pos: usize| -> Result<usize> {
        let (line, tok) = tokens[pos];
        tok.parse::<usize>()
            .ok()
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::Parse {
                line,
                message: format!("expected a positive dimension, found {tok:?}"),
            })
    };
    while pos < tokens.len() {
        if pos + 1 >= tokens.len() {
            return Err(Error::Parse {
                line: tokens[pos].0,
                message: "truncated header".into(),
            });
        }
        let rows = parse_dim(pos)?;
        let cols = parse_dim(pos + 1)?;
        pos += 2;
        let count = rows * cols;
        if pos + count > tokens.len() {
            let line = tokens.last().map_or(1, |t| t.0);
            return Err(Error::Parse {
                line,
                message: format!("expected {count} entries for a {rows}x{cols} matrix"),
            });
        }
        let mut entries = Vec::with_capacity(count);
        for &(line, tok) in &tokens[pos..pos + count] {
            let z = parse_complex(tok)
                .filter(|z| z.re.is_finite() && z.im.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("invalid complex entry {tok:?}"),
                })?;
            entries.push(z);
        }
        pos += count;
        out.push(CMatrix::from_row_slice(rows, cols, &entries));
    }
    if out.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no matrix found".into(),
        });
    }
    Ok(out)
}
