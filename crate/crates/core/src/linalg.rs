//! Dense complex matrices and the handful of factorizations the rest of the
//! crate needs.
//!
//! Storage is row-major. Vectorization is column-stacking everywhere:
//! `vec(|i⟩⟨j|) = e_j ⊗ e_i`, so entry `(i, j)` of a `rows × cols` matrix
//! lands at index `j * rows + i`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;
pub type CVector = Vec<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Asymmetry above which `hermitian_eig` logs a warning before symmetrizing.
pub const HERMITIAN_WARN_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },
    #[error("dimension overflow in {op}")]
    Overflow { op: &'static str },
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("singular matrix: smallest singular value {min_sv:e} vs largest {max_sv:e}")]
    Singular { min_sv: f64, max_sv: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("invalid dimension profile: {0}")]
    InvalidProfile(String),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

fn mismatch(op: &'static str, detail: impl Into<String>) -> LinalgError {
    LinalgError::DimensionMismatch {
        op,
        detail: detail.into(),
    }
}

/// Ordered list of tensor-factor dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct DimProfile(Vec<usize>);

impl DimProfile {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(LinalgError::InvalidProfile("empty profile".into()));
        }
        if dims.contains(&0) {
            return Err(LinalgError::InvalidProfile(format!(
                "zero dimension in {dims:?}"
            )));
        }
        checked_product(&dims).ok_or(LinalgError::Overflow { op: "DimProfile" })?;
        Ok(Self(dims))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().product()
    }
}

impl TryFrom<Vec<usize>> for DimProfile {
    type Error = LinalgError;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DimProfile> for Vec<usize> {
    fn from(p: DimProfile) -> Self {
        p.0
    }
}

pub fn checked_product(dims: &[usize]) -> Option<usize> {
    dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d))
}

/// Mixed-radix decomposition of `index` over `dims`, most significant first.
pub fn multi_index(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in dims.iter().enumerate().rev() {
        out[slot] = index % d;
        index /= d;
    }
    out
}

/// Inverse of [`multi_index`].
pub fn flat_index(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&i, &d)| acc * d + i)
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl TryFrom<MatrixRepr> for ComplexMatrix {
    type Error = LinalgError;
    fn try_from(r: MatrixRepr) -> Result<Self> {
        let data = r.data.iter().map(|&[re, im]| C64::new(re, im)).collect();
        Self::from_vec(r.rows, r.cols, data)
    }
}

impl From<ComplexMatrix> for MatrixRepr {
    fn from(m: ComplexMatrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major data, rejecting bad shapes and NaN/Inf.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(mismatch("from_vec", format!("empty shape {rows}x{cols}")));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or(LinalgError::Overflow { op: "from_vec" })?;
        if data.len() != len {
            return Err(mismatch(
                "from_vec",
                format!("{} entries for a {rows}x{cols} matrix", data.len()),
            ));
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: k / cols,
                col: k % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Real matrix from nested rows. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let cols = rows[0].len();
        Self::from_fn(rows.len(), cols, |r, c| {
            assert_eq!(rows[r].len(), cols, "ragged rows");
            C64::new(rows[r][c], 0.0)
        })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(mismatch("from_rows", "ragged rows"));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn diag_real(entries: &[f64]) -> Self {
        Self::diag(&entries.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())
    }

    /// `|i⟩⟨j|` in an `n × n` space.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = ONE;
        m
    }

    pub fn from_columns(cols: &[CVector]) -> Result<Self> {
        let rows = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != rows) {
            return Err(mismatch("from_columns", "columns of unequal length"));
        }
        if rows == 0 || cols.is_empty() {
            return Err(mismatch("from_columns", "empty column set"));
        }
        let mut m = Self::zeros(rows, cols.len());
        for (c, col) in cols.iter().enumerate() {
            for (r, &z) in col.iter().enumerate() {
                m[(r, c)] = z;
            }
        }
        Ok(m)
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |r, c| u[r] * v[c].conj())
    }

    pub fn column_vector(v: &[C64]) -> Self {
        Self::from_fn(v.len(), 1, |r, _| v[r])
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> CVector {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn columns(&self) -> Vec<CVector> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Entrywise max distance; `f64::INFINITY` when the shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.shape() != other.shape() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    /// Largest deviation from Hermiticity.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(0.5)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(mismatch(
                "matmul",
                format!("{:?} times {:?}", self.shape(), other.shape()),
            ));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[C64]) -> Result<CVector> {
        if v.len() != self.cols {
            return Err(mismatch(
                "matvec",
                format!("{:?} times vector of length {}", self.shape(), v.len()),
            ));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(mismatch("add", format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&-other)
    }

    /// Column-stacking vectorization.
    pub fn vec_col(&self) -> CVector {
        let mut v = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                v.push(self[(r, c)]);
            }
        }
        v
    }

    /// Inverse of [`ComplexMatrix::vec_col`].
    pub fn unvec(v: &[C64], rows: usize, cols: usize) -> Result<Self> {
        if v.len() != rows * cols {
            return Err(mismatch(
                "unvec",
                format!("length {} for {rows}x{cols}", v.len()),
            ));
        }
        Ok(Self::from_fn(rows, cols, |r, c| v[c * rows + r]))
    }

    /// Rectangular block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |r, c| self[(r0 + r, c0 + c)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for r in 0..b.rows {
            for c in 0..b.cols {
                self[(r0 + r, c0 + c)] = b[(r, c)];
            }
        }
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
    }

    /// Whether every entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

// The operator impls panic on shape mismatch; fallible callers use the
// `checked_*` and `matmul` methods.
impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        self.checked_add(rhs).expect("matrix add")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        self.checked_add(&-rhs).expect("matrix sub")
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.map(|z| -z)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product")
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a
        .rows
        .checked_mul(b.rows)
        .ok_or(LinalgError::Overflow { op: "kron" })?;
    let cols = a
        .cols
        .checked_mul(b.cols)
        .ok_or(LinalgError::Overflow { op: "kron" })?;
    rows.checked_mul(cols)
        .ok_or(LinalgError::Overflow { op: "kron" })?;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let s = a[(ar, ac)];
            if s == ZERO {
                continue;
            }
            for br in 0..b.rows {
                for bc in 0..b.cols {
                    out[(ar * b.rows + br, ac * b.cols + bc)] = s * b[(br, bc)];
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of a list; the empty list gives the 1×1 identity.
pub fn kron_all<'a>(ms: impl IntoIterator<Item = &'a ComplexMatrix>) -> Result<ComplexMatrix> {
    ms.into_iter()
        .try_fold(ComplexMatrix::identity(1), |acc, m| kron(&acc, m))
}

pub fn kron_vec(a: &[C64], b: &[C64]) -> CVector {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

pub fn kron_vecs(vs: &[CVector]) -> CVector {
    vs.iter().fold(vec![ONE], |acc, v| kron_vec(&acc, v))
}

/// Trace over factor `traced` of an operator on `⊗ profile`.
pub fn partial_trace(m: &ComplexMatrix, profile: &DimProfile, traced: usize) -> Result<ComplexMatrix> {
    let dims = profile.dims();
    if traced >= dims.len() {
        return Err(mismatch(
            "partial_trace",
            format!("factor {traced} of a {}-factor profile", dims.len()),
        ));
    }
    if !m.is_square() || m.rows != profile.total() {
        return Err(mismatch(
            "partial_trace",
            format!("{:?} against profile {:?}", m.shape(), dims),
        ));
    }
    let left: usize = dims[..traced].iter().product();
    let mid = dims[traced];
    let right: usize = dims[traced + 1..].iter().product();
    let side = left * right;
    let mut out = ComplexMatrix::zeros(side, side);
    for a in 0..left {
        for c in 0..right {
            for a2 in 0..left {
                for c2 in 0..right {
                    let mut s = ZERO;
                    for b in 0..mid {
                        s += m[((a * mid + b) * right + c, (a2 * mid + b) * right + c2)];
                    }
                    out[(a * right + c, a2 * right + c2)] = s;
                }
            }
        }
    }
    Ok(out)
}

/// Permutation operator `P` with `P(x₀⊗…⊗x_{n−1}) = x_{perm[0]}⊗…⊗x_{perm[n−1]}`.
pub fn factor_permutation(dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    if !is_permutation(perm) || perm.len() != dims.len() {
        return Err(mismatch("factor_permutation", format!("{perm:?} on {dims:?}")));
    }
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let total = checked_product(dims).ok_or(LinalgError::Overflow { op: "factor_permutation" })?;
    let mut p = ComplexMatrix::zeros(total, total);
    for src in 0..total {
        let idx = multi_index(src, dims);
        let out_idx: Vec<usize> = perm.iter().map(|&q| idx[q]).collect();
        p[(flat_index(&out_idx, &out_dims), src)] = ONE;
    }
    Ok(p)
}

pub fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &x in p {
        if x >= p.len() || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    true
}

/// Inner product, linear in the first argument: `⟨x, y⟩ = Σ x_k · conj(y_k)`.
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_max_diff(x: &[C64], y: &[C64]) -> f64 {
    if x.len() != y.len() {
        return f64::INFINITY;
    }
    x.iter().zip(y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

pub fn basis_vector(n: usize, i: usize) -> CVector {
    let mut v = vec![ZERO; n];
    v[i] = ONE;
    v
}

#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Descending.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

/// Eigendecomposition of the Hermitian part of `m`.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEig> {
    if !m.is_square() {
        return Err(LinalgError::NonSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let defect = m.hermitian_defect();
    if defect > HERMITIAN_WARN_TOL {
        log::warn!("hermitian_eig: input asymmetry {defect:e} exceeds {HERMITIAN_WARN_TOL:e}; symmetrizing");
    }
    let h = m.hermitian_part();
    let eig = nalgebra::SymmetricEigen::new(h.to_nalgebra());
    let mut order: Vec<usize> = (0..h.rows).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(h.rows, h.rows, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEig { values, vectors })
}

/// Orthonormal basis of the span, dropping vectors whose residual after
/// projection falls below `rank_tol`. Two projection passes per vector.
pub fn gram_schmidt(vectors: &[CVector], rank_tol: f64) -> Result<Vec<CVector>> {
    let Some(first) = vectors.first() else {
        return Ok(Vec::new());
    };
    let n = first.len();
    if vectors.iter().any(|v| v.len() != n) {
        return Err(mismatch("gram_schmidt", "vectors of unequal length"));
    }
    let mut basis: Vec<CVector> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = inner(&w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let norm = vec_norm(&w);
        if norm >= rank_tol && norm > 0.0 {
            basis.push(w.into_iter().map(|z| z / norm).collect());
        }
    }
    Ok(basis)
}

pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = m.to_nalgebra().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Largest singular value.
pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(LinalgError::NonSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    Ok(singular_values(m).iter().sum())
}

/// Number of singular values above `rel_tol` times the largest.
pub fn numerical_rank(m: &ComplexMatrix, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    /// Square system; rejects numerically singular matrices.
    Exact,
    /// Minimum-norm least-squares solution.
    LeastSquares,
}

/// Relative singular-value cutoff for `SolveMode::Exact`.
pub const SINGULAR_REL_TOL: f64 = 1e-12;

pub fn solve_linear(a: &ComplexMatrix, b: &[C64], mode: SolveMode) -> Result<CVector> {
    if b.len() != a.rows {
        return Err(mismatch(
            "solve_linear",
            format!("{:?} against right-hand side of length {}", a.shape(), b.len()),
        ));
    }
    let rhs = ComplexMatrix::column_vector(b);
    Ok(solve_matrix(a, &rhs, mode)?.column(0))
}

/// Solves `a · X = b` column by column.
pub fn solve_matrix(a: &ComplexMatrix, b: &ComplexMatrix, mode: SolveMode) -> Result<ComplexMatrix> {
    if b.rows != a.rows {
        return Err(mismatch(
            "solve_matrix",
            format!("{:?} against {:?}", a.shape(), b.shape()),
        ));
    }
    let svd = a.to_nalgebra().svd(true, true);
    let max_sv = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let min_sv = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    let eps = match mode {
        SolveMode::Exact => {
            if !a.is_square() {
                return Err(LinalgError::NonSquare {
                    rows: a.rows,
                    cols: a.cols,
                });
            }
            if max_sv == 0.0 || min_sv < SINGULAR_REL_TOL * max_sv {
                return Err(LinalgError::Singular { min_sv, max_sv });
            }
            0.0
        }
        SolveMode::LeastSquares => SINGULAR_REL_TOL * max_sv.max(f64::MIN_POSITIVE),
    };
    let x = svd
        .solve(&b.to_nalgebra(), eps)
        .map_err(|e| mismatch("solve_matrix", e))?;
    Ok(ComplexMatrix::from_nalgebra(&x))
}

/// Moore–Penrose pseudo-inverse with relative cutoff.
pub fn pseudo_inverse(m: &ComplexMatrix, rel_tol: f64) -> ComplexMatrix {
    let svd = m.to_nalgebra().svd(true, true);
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = (rel_tol * top).max(f64::MIN_POSITIVE);
    let pinv = svd.pseudo_inverse(eps).expect("svd computed with both factors");
    ComplexMatrix::from_nalgebra(&pinv)
}

/// Thin SVD `m = U diag(s) V†` with singular values descending.
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v_t: ComplexMatrix,
}

pub fn svd(m: &ComplexMatrix) -> Svd {
    let s = m.to_nalgebra().svd(true, true);
    let k = s.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s.singular_values[b].total_cmp(&s.singular_values[a]));
    let u = s.u.as_ref().expect("u requested");
    let vt = s.v_t.as_ref().expect("v_t requested");
    Svd {
        u: ComplexMatrix::from_fn(m.rows, k, |r, c| u[(r, order[c])]),
        singular_values: order.iter().map(|&i| s.singular_values[i]).collect(),
        v_t: ComplexMatrix::from_fn(k, m.cols, |r, c| vt[(order[r], c)]),
    }
}
