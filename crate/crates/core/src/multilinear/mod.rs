//! Multilinear maps on finite-dimensional Hilbert spaces and their dagger
//! adjoints.
//!
//! A map `Φ: H₁ × … × Hₙ → K` is stored as the `m × (d₁⋯dₙ)` matrix acting on
//! `x₁ ⊗ … ⊗ xₙ`. Dual spaces never get their own storage: a functional `f` is
//! kept as its Riesz vector `v_f` with `f(x) = ⟨x, v_f⟩ = Σ x_k · conj(v_f,k)`.
//!
//! The adjoint `Φ†` takes `(f, g₁, …, g_{n−1})` to the functional
//! `x ↦ f(Φ(R g₁, …, R g_{n−1}, x))` on `Hₙ`. Its matrix has input profile
//! `(m, d₁, …, d_{n−1})`, output `dₙ`, and entries
//!
//! ```text
//! A[j, (k, i₁, …, i_{n−1})] = conj(M[k, (i₁, …, i_{n−1}, j)])
//! ```
//!
//! acting on Riesz vectors. Because `R` is conjugate-linear, the slots after
//! the first are fed `conj(v_g)` when a functional is applied; see
//! [`eval_adjoint`]. For `n = 1` this is the ordinary conjugate transpose.

mod feedback;

pub use feedback::{FeedbackProblem, FeedbackSolution, PICARD_STEPS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    self, flat_index, inner, kron_vecs, multi_index, spectral_norm, CVector,
    ComplexMatrix, DimProfile, LinalgError, C64,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MultilinearError {
    #[error("profile mismatch: {0}")]
    ProfileMismatch(String),
    #[error("real-field map has complex entry at ({row}, {col})")]
    ComplexEntryInRealMap { row: usize, col: usize },
    #[error("ill-posed feedback: smallest singular value of (I - L) is {min_sv:e}")]
    IllPosedFeedback { min_sv: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, MultilinearError>;

fn profile_mismatch(msg: impl Into<String>) -> MultilinearError {
    MultilinearError::ProfileMismatch(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    pub fn join(self, other: Field) -> Field {
        if self == Field::Real && other == Field::Real {
            Field::Real
        } else {
            Field::Complex
        }
    }
}

/// A multilinear map stored on the Kronecker basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapRepr", into = "MapRepr")]
pub struct MultilinearVectorMap {
    input_dims: DimProfile,
    output_dim: usize,
    field: Field,
    matrix: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct MapRepr {
    input_dims: DimProfile,
    output_dim: usize,
    field: Field,
    matrix: ComplexMatrix,
}

impl TryFrom<MapRepr> for MultilinearVectorMap {
    type Error = MultilinearError;
    fn try_from(r: MapRepr) -> Result<Self> {
        Self::new(r.input_dims, r.output_dim, r.field, r.matrix)
    }
}

impl From<MultilinearVectorMap> for MapRepr {
    fn from(m: MultilinearVectorMap) -> Self {
        MapRepr {
            input_dims: m.input_dims,
            output_dim: m.output_dim,
            field: m.field,
            matrix: m.matrix,
        }
    }
}

impl MultilinearVectorMap {
    pub fn new(input_dims: DimProfile, output_dim: usize, field: Field, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.shape() != (output_dim, input_dims.total()) {
            return Err(profile_mismatch(format!(
                "matrix {:?} for inputs {:?} and output {output_dim}",
                matrix.shape(),
                input_dims.dims()
            )));
        }
        if field == Field::Real {
            if let Some(k) = matrix.data().iter().position(|z| z.im != 0.0) {
                return Err(MultilinearError::ComplexEntryInRealMap {
                    row: k / matrix.cols(),
                    col: k % matrix.cols(),
                });
            }
        }
        Ok(Self {
            input_dims,
            output_dim,
            field,
            matrix,
        })
    }

    /// Builds the map from its values on standard basis tuples.
    pub fn from_fn(input_dims: &[usize], output_dim: usize, field: Field, f: impl Fn(&[usize]) -> CVector) -> Result<Self> {
        let profile = DimProfile::new(input_dims.to_vec())?;
        let mut m = ComplexMatrix::zeros(output_dim, profile.total());
        for col in 0..profile.total() {
            let out = f(&multi_index(col, input_dims));
            if out.len() != output_dim {
                return Err(profile_mismatch("basis value has wrong length"));
            }
            for (r, z) in out.into_iter().enumerate() {
                m[(r, col)] = z;
            }
        }
        Self::new(profile, output_dim, field, m)
    }

    pub fn identity(d: usize, field: Field) -> Result<Self> {
        Self::new(DimProfile::new(vec![d])?, d, field, ComplexMatrix::identity(d))
    }

    pub fn input_dims(&self) -> &[usize] {
        self.input_dims.dims()
    }

    pub fn profile(&self) -> &DimProfile {
        &self.input_dims
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn arity(&self) -> usize {
        self.input_dims.len()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `M · (x₁ ⊗ … ⊗ xₙ)`.
    pub fn apply(&self, inputs: &[CVector]) -> Result<CVector> {
        if inputs.len() != self.arity() {
            return Err(profile_mismatch(format!(
                "{} inputs for arity {}",
                inputs.len(),
                self.arity()
            )));
        }
        for (slot, (x, &d)) in inputs.iter().zip(self.input_dims()).enumerate() {
            if x.len() != d {
                return Err(profile_mismatch(format!(
                    "slot {slot} has length {} but dimension {d}",
                    x.len()
                )));
            }
        }
        Ok(self.matrix.matvec(&kron_vecs(inputs))?)
    }

    /// Spectral norm of the stored matrix.
    ///
    /// This bounds the multilinear operator norm `sup ‖Φ(x…)‖ / ∏‖xᵢ‖` from
    /// above and is submultiplicative under [`compose`].
    pub fn operator_norm(&self) -> f64 {
        spectral_norm(&self.matrix)
    }
}

/// A linear functional held by its Riesz vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    riesz: CVector,
}

impl Functional {
    pub fn from_riesz(v: CVector) -> Self {
        Self { riesz: v }
    }

    /// Functional `x ↦ Σ c_k x_k`.
    pub fn from_coefficients(c: &[C64]) -> Self {
        Self {
            riesz: c.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn riesz(&self) -> &[C64] {
        &self.riesz
    }

    pub fn dim(&self) -> usize {
        self.riesz.len()
    }

    pub fn eval(&self, x: &[C64]) -> C64 {
        inner(x, &self.riesz)
    }
}

/// The dagger adjoint; see the module docs for the index layout.
pub fn adjoint(phi: &MultilinearVectorMap) -> MultilinearVectorMap {
    let dims = phi.input_dims();
    let n = dims.len();
    let dn = dims[n - 1];
    let p: usize = dims[..n - 1].iter().product();
    let m = phi.output_dim;
    let mut a = ComplexMatrix::zeros(dn, m * p);
    for j in 0..dn {
        for k in 0..m {
            for i in 0..p {
                a[(j, k * p + i)] = phi.matrix[(k, i * dn + j)].conj();
            }
        }
    }
    let mut in_dims = vec![m];
    in_dims.extend_from_slice(&dims[..n - 1]);
    MultilinearVectorMap {
        input_dims: DimProfile::new(in_dims).expect("dims come from a valid profile"),
        output_dim: dn,
        field: phi.field,
        matrix: a,
    }
}

/// Evaluates an adjoint matrix on functionals, returning the output functional.
///
/// Slot 0 takes `v_f` as is; the remaining slots take `conj(v_g)`, which is
/// where the conjugate-linearity of the Riesz map enters.
pub fn eval_adjoint(phi_dag: &MultilinearVectorMap, f: &Functional, gs: &[Functional]) -> Result<Functional> {
    let mut args = vec![f.riesz.clone()];
    args.extend(gs.iter().map(|g| g.riesz.iter().map(|z| z.conj()).collect()));
    Ok(Functional::from_riesz(phi_dag.apply(&args)?))
}

/// Reads `(Φ†)†` back in the slot order of `Φ`.
///
/// `(Φ†)†` has inputs `(xₙ, f, x₁, …, x_{n−2})` and output in `H_{n−1}`, with
/// matrix `B[i_{n−1}, (j, k, i₁, …, i_{n−2})]`. Under `ι: H → H††` the output
/// slot becomes input `n−1`, the first input becomes input `n`, and the
/// functional slot becomes the output. The realigned matrix is
/// `R[k, (i₁, …, i_{n−1}, j)] = B[i_{n−1}, (j, k, i₁, …, i_{n−2})]`.
/// For `n = 1` no realignment is needed.
pub fn realign_double_adjoint(phi_dd: &MultilinearVectorMap, original_dims: &[usize], original_output: usize) -> Result<ComplexMatrix> {
    let n = original_dims.len();
    if n == 1 {
        if phi_dd.matrix.shape() != (original_output, original_dims[0]) {
            return Err(profile_mismatch("double adjoint shape"));
        }
        return Ok(phi_dd.matrix.clone());
    }
    let mut expect_in = vec![original_dims[n - 1], original_output];
    expect_in.extend_from_slice(&original_dims[..n - 2]);
    if phi_dd.input_dims() != expect_in.as_slice() || phi_dd.output_dim != original_dims[n - 2] {
        return Err(profile_mismatch("double adjoint profile"));
    }
    let total: usize = original_dims.iter().product();
    let mut r = ComplexMatrix::zeros(original_output, total);
    for k in 0..original_output {
        for col in 0..total {
            let idx = multi_index(col, original_dims);
            let j = idx[n - 1];
            let i_last = idx[n - 2];
            let mut b_idx = vec![j, k];
            b_idx.extend_from_slice(&idx[..n - 2]);
            r[(k, col)] = phi_dd.matrix[(i_last, flat_index(&b_idx, &expect_in))];
        }
    }
    Ok(r)
}

/// `‖realign((Φ†)†) − Φ‖` in the entrywise max norm.
pub fn double_adjoint_residual(phi: &MultilinearVectorMap) -> f64 {
    let dd = adjoint(&adjoint(phi));
    match realign_double_adjoint(&dd, phi.input_dims(), phi.output_dim) {
        Ok(r) => r.max_abs_diff(&phi.matrix),
        Err(_) => f64::INFINITY,
    }
}

/// Residual of the defining identity `[Φ†(f, g…)](x) = f(Φ(R g…, x))`
/// over all standard-basis functionals and vectors.
pub fn adjoint_identity_residual(phi: &MultilinearVectorMap) -> Result<f64> {
    let dag = adjoint(phi);
    let dims = phi.input_dims();
    let n = dims.len();
    let m = phi.output_dim;
    let mut worst: f64 = 0.0;
    for k in 0..m {
        let f = Functional::from_riesz(linalg::basis_vector(m, k));
        for col in 0..phi.input_dims.total() {
            let idx = multi_index(col, dims);
            let gs: Vec<Functional> = (0..n - 1)
                .map(|s| Functional::from_riesz(linalg::basis_vector(dims[s], idx[s])))
                .collect();
            let x = linalg::basis_vector(dims[n - 1], idx[n - 1]);
            let lhs = eval_adjoint(&dag, &f, &gs)?.eval(&x);
            let mut args: Vec<CVector> = gs.iter().map(|g| g.riesz.clone()).collect();
            args.push(x);
            let rhs = f.eval(&phi.apply(&args)?);
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(worst)
}

/// `Ψ ∘ (Φ₁, …, Φ_m)` with matrix `M_Ψ · (M_Φ₁ ⊗ … ⊗ M_Φm)`.
pub fn compose(psi: &MultilinearVectorMap, parts: &[MultilinearVectorMap]) -> Result<MultilinearVectorMap> {
    check_composable(psi.input_dims(), parts.iter().map(|p| p.output_dim))?;
    let inner = linalg::kron_all(parts.iter().map(|p| &p.matrix))?;
    let matrix = psi.matrix.matmul(&inner)?;
    let dims: Vec<usize> = parts.iter().flat_map(|p| p.input_dims().iter().copied()).collect();
    let field = parts.iter().fold(psi.field, |f, p| f.join(p.field));
    MultilinearVectorMap::new(DimProfile::new(dims)?, psi.output_dim, field, matrix)
}

fn check_composable(psi_dims: &[usize], outs: impl ExactSizeIterator<Item = usize>) -> Result<()> {
    if psi_dims.len() != outs.len() {
        return Err(profile_mismatch(format!(
            "outer arity {} with {} parts",
            psi_dims.len(),
            outs.len()
        )));
    }
    for (slot, (&d, o)) in psi_dims.iter().zip(outs).enumerate() {
        if d != o {
            return Err(profile_mismatch(format!(
                "part {slot} outputs dimension {o} into a slot of dimension {d}"
            )));
        }
    }
    Ok(())
}

/// Tuple routing used by both contravariance checks.
///
/// `Θ = Ψ∘(Φ₁…Φ_m)` has functional slots `(f, h₁, …)` where the `h`s run
/// through every input of `Φ₁, …, Φ_{m−1}` and all but the last input of
/// `Φ_m`; the remaining input `x` of `Φ_m` is the argument of `Θ†(…)`.
/// The right-hand side evaluates `yᵢ = Φᵢ(R h…)` for `i < m`, forms
/// `β = Ψ†(f, ŷ₁, …, ŷ_{m−1})` with `R ŷᵢ = yᵢ`, and returns
/// `[Φ_m†(β, h…)](x)`.
fn contravariant_sides(
    theta_dag: &MultilinearVectorMap,
    psi_dag: &MultilinearVectorMap,
    parts: &[MultilinearVectorMap],
    part_dags: &[MultilinearVectorMap],
    f: &Functional,
    hs: &[Functional],
    x: &[C64],
) -> Result<(C64, C64)> {
    let lhs = eval_adjoint(theta_dag, f, hs)?.eval(x);
    let m = parts.len();
    let mut cursor = 0;
    let mut ys = Vec::with_capacity(m - 1);
    for p in &parts[..m - 1] {
        let args: Vec<CVector> = hs[cursor..cursor + p.arity()].iter().map(|h| h.riesz.clone()).collect();
        cursor += p.arity();
        ys.push(Functional::from_riesz(p.apply(&args)?));
    }
    let beta = eval_adjoint(psi_dag, f, &ys)?;
    let rhs = eval_adjoint(&part_dags[m - 1], &beta, &hs[cursor..])?.eval(x);
    Ok((lhs, rhs))
}

/// Max gap between `[Ψ∘(Φ…)]†` and the composite of the individual adjoints,
/// over all standard-basis tuples. On the complex field each tuple is also
/// tried with a distinct phase per slot so the Riesz conjugation is exercised.
pub fn contravariant_residual(psi: &MultilinearVectorMap, parts: &[MultilinearVectorMap]) -> Result<f64> {
    let theta = compose(psi, parts)?;
    let theta_dag = adjoint(&theta);
    let psi_dag = adjoint(psi);
    let part_dags: Vec<_> = parts.iter().map(adjoint).collect();
    let dims = theta.input_dims().to_vec();
    let n = dims.len();
    let l = psi.output_dim;
    let phases: Vec<Vec<C64>> = match theta.field {
        Field::Real => vec![vec![linalg::ONE; n + 1]],
        Field::Complex => vec![
            vec![linalg::ONE; n + 1],
            (0..=n)
                .map(|s| C64::from_polar(1.0, 0.7 + 1.3 * s as f64))
                .collect(),
        ],
    };
    let mut worst: f64 = 0.0;
    for ph in &phases {
        for k in 0..l {
            let f = Functional::from_riesz(scaled_basis(l, k, ph[0]));
            for col in 0..theta.input_dims.total() {
                let idx = multi_index(col, &dims);
                let hs: Vec<Functional> = (0..n - 1)
                    .map(|s| Functional::from_riesz(scaled_basis(dims[s], idx[s], ph[s + 1])))
                    .collect();
                let x = scaled_basis(dims[n - 1], idx[n - 1], ph[n]);
                let (lhs, rhs) = contravariant_sides(&theta_dag, &psi_dag, parts, &part_dags, &f, &hs, &x)?;
                worst = worst.max((lhs - rhs).norm());
            }
        }
    }
    Ok(worst)
}

fn scaled_basis(n: usize, i: usize, s: C64) -> CVector {
    let mut v = linalg::basis_vector(n, i);
    v[i] = s;
    v
}

/// Pointwise view of a map with several vector inputs.
///
/// Lets the contravariance routing run on maps that are only given by a
/// formula, such as the affine examples `(u, v) ↦ u + v`.
pub trait MultiMap {
    fn input_dims(&self) -> Vec<usize>;
    fn output_dim(&self) -> usize;
    fn eval(&self, inputs: &[CVector]) -> CVector;
}

impl MultiMap for MultilinearVectorMap {
    fn input_dims(&self) -> Vec<usize> {
        MultilinearVectorMap::input_dims(self).to_vec()
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn eval(&self, inputs: &[CVector]) -> CVector {
        self.apply(inputs).expect("inputs match the declared profile")
    }
}

type PointFn = dyn Fn(&[CVector]) -> CVector + Send + Sync;

/// A map given by a closure.
pub struct FnMap {
    dims: Vec<usize>,
    out: usize,
    f: Box<PointFn>,
}

impl FnMap {
    pub fn new(dims: Vec<usize>, out: usize, f: impl Fn(&[CVector]) -> CVector + Send + Sync + 'static) -> Self {
        Self {
            dims,
            out,
            f: Box::new(f),
        }
    }
}

impl MultiMap for FnMap {
    fn input_dims(&self) -> Vec<usize> {
        self.dims.clone()
    }

    fn output_dim(&self) -> usize {
        self.out
    }

    fn eval(&self, inputs: &[CVector]) -> CVector {
        (self.f)(inputs)
    }
}

/// Pointwise composite `Ψ(Φ₁(…), …, Φ_m(…))`.
pub struct ComposedMap<'a> {
    pub psi: &'a dyn MultiMap,
    pub parts: Vec<&'a dyn MultiMap>,
}

impl<'a> ComposedMap<'a> {
    pub fn new(psi: &'a dyn MultiMap, parts: Vec<&'a dyn MultiMap>) -> Result<Self> {
        check_composable(&psi.input_dims(), parts.iter().map(|p| p.output_dim()))?;
        Ok(Self { psi, parts })
    }

    fn part_values(&self, inputs: &[CVector]) -> Vec<CVector> {
        let mut cursor = 0;
        self.parts
            .iter()
            .map(|p| {
                let a = p.input_dims().len();
                let v = p.eval(&inputs[cursor..cursor + a]);
                cursor += a;
                v
            })
            .collect()
    }
}

impl MultiMap for ComposedMap<'_> {
    fn input_dims(&self) -> Vec<usize> {
        self.parts.iter().flat_map(|p| p.input_dims()).collect()
    }

    fn output_dim(&self) -> usize {
        self.psi.output_dim()
    }

    fn eval(&self, inputs: &[CVector]) -> CVector {
        self.psi.eval(&self.part_values(inputs))
    }
}

/// Both sides of the contravariance identity at one tuple, with the
/// intermediate values of the right-hand routing.
#[derive(Debug, Clone, PartialEq)]
pub struct ContravariantTrace {
    pub lhs: C64,
    pub rhs: C64,
    /// `Φᵢ` evaluated on its Riesz inputs; the last entry includes `x`.
    pub part_values: Vec<CVector>,
    /// `Ψ` applied to `part_values`.
    pub psi_value: CVector,
}

/// Pointwise contravariance check following the same routing as
/// [`contravariant_residual`], for maps that need not be multilinear.
pub fn contravariant_trace(psi: &dyn MultiMap, parts: &[&dyn MultiMap], f: &Functional, hs: &[Functional], x: &[C64]) -> Result<ContravariantTrace> {
    let theta = ComposedMap::new(psi, parts.to_vec())?;
    let theta_dims = theta.input_dims();
    if hs.len() + 1 != theta_dims.len() {
        return Err(profile_mismatch("functional count"));
    }
    let mut vs: Vec<CVector> = hs.iter().map(|h| h.riesz.clone()).collect();
    vs.push(x.to_vec());
    for (slot, (v, d)) in vs.iter().zip(&theta_dims).enumerate() {
        if v.len() != *d {
            return Err(profile_mismatch(format!("slot {slot} dimension")));
        }
    }
    let lhs = f.eval(&theta.eval(&vs));

    let part_values = theta.part_values(&vs);
    let m = parts.len();
    let ys = &part_values[..m - 1];
    // β(k) = f(Ψ(y₁, …, y_{m−1}, k)); Φ_m†(β, h…) evaluated at x is β(Φ_m(R h…, x)).
    let beta = |k: &CVector| {
        let mut args = ys.to_vec();
        args.push(k.clone());
        f.eval(&psi.eval(&args))
    };
    let rhs = beta(&part_values[m - 1]);
    let psi_value = psi.eval(&part_values);
    Ok(ContravariantTrace {
        lhs,
        rhs,
        part_values,
        psi_value,
    })
}
