//! Multilinear maps between matrix spaces, acting on vectorized operators.

use serde::{Deserialize, Serialize};

use super::{ChannelError, Result};
use crate::linalg::{
    factor_permutation, is_permutation, kron, kron_all, kron_vecs, multi_index, ComplexMatrix,
    DimProfile, C64,
};
use crate::multilinear::{Field, MultilinearVectorMap};

/// `Φ: M_{d₁} × … × M_{dₙ} → M_m` stored as an `m² × ∏dᵢ²` matrix on
/// `vec(a₁) ⊗ … ⊗ vec(aₙ)`. Arity zero is allowed and stores a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorMultiMap {
    input_dims: Vec<usize>,
    output_dim: usize,
    action: ComplexMatrix,
}

/// Matrix unit `E_{ij}` whose column-stacked index is `v = j·d + i`.
pub fn unit_from_vec_index(d: usize, v: usize) -> ComplexMatrix {
    ComplexMatrix::unit(d, v % d, v / d)
}

impl OperatorMultiMap {
    pub fn new(input_dims: Vec<usize>, output_dim: usize, action: ComplexMatrix) -> Result<Self> {
        let cols = input_dims.iter().map(|d| d * d).product::<usize>();
        if input_dims.contains(&0) || output_dim == 0 || action.shape() != (output_dim * output_dim, cols) {
            return Err(ChannelError::DimensionMismatch(format!(
                "action {:?} for inputs {input_dims:?} and output {output_dim}",
                action.shape()
            )));
        }
        Ok(Self {
            input_dims,
            output_dim,
            action,
        })
    }

    /// Builds the map from its values on matrix-unit tuples; `f` must be
    /// multilinear for the result to agree with it elsewhere.
    pub fn from_fn(input_dims: &[usize], output_dim: usize, mut f: impl FnMut(&[ComplexMatrix]) -> ComplexMatrix) -> Result<Self> {
        let sq: Vec<usize> = input_dims.iter().map(|d| d * d).collect();
        let cols: usize = sq.iter().product();
        let mut action = ComplexMatrix::zeros(output_dim * output_dim, cols);
        for col in 0..cols {
            let idx = multi_index(col, &sq);
            let units: Vec<ComplexMatrix> = idx
                .iter()
                .zip(input_dims)
                .map(|(&v, &d)| unit_from_vec_index(d, v))
                .collect();
            let out = f(&units);
            if out.shape() != (output_dim, output_dim) {
                return Err(ChannelError::DimensionMismatch(format!(
                    "value {:?} for output dimension {output_dim}",
                    out.shape()
                )));
            }
            for (r, z) in out.vec_col().into_iter().enumerate() {
                action[(r, col)] = z;
            }
        }
        Self::new(input_dims.to_vec(), output_dim, action)
    }

    pub fn identity(d: usize) -> Self {
        Self {
            input_dims: vec![d],
            output_dim: d,
            action: ComplexMatrix::identity(d * d),
        }
    }

    /// Superoperator `Σ conj(K) ⊗ K`, since `vec(K X K†) = (conj(K) ⊗ K) vec(X)`.
    pub fn from_kraus(ks: &[ComplexMatrix]) -> Result<Self> {
        let first = ks
            .first()
            .ok_or_else(|| ChannelError::DimensionMismatch("empty Kraus set".into()))?;
        let (out, inp) = first.shape();
        let mut s = ComplexMatrix::zeros(out * out, inp * inp);
        for k in ks {
            if k.shape() != (out, inp) {
                return Err(ChannelError::DimensionMismatch("Kraus operators of mixed shape".into()));
            }
            s = &s + &kron(&k.conj(), k)?;
        }
        Self::new(vec![inp], out, s)
    }

    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn arity(&self) -> usize {
        self.input_dims.len()
    }

    pub fn action(&self) -> &ComplexMatrix {
        &self.action
    }

    pub fn apply(&self, inputs: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        if inputs.len() != self.arity() {
            return Err(ChannelError::DimensionMismatch(format!(
                "{} inputs for arity {}",
                inputs.len(),
                self.arity()
            )));
        }
        for (slot, (a, &d)) in inputs.iter().zip(&self.input_dims).enumerate() {
            if a.shape() != (d, d) {
                return Err(ChannelError::DimensionMismatch(format!(
                    "slot {slot} expects {d}x{d}, got {:?}",
                    a.shape()
                )));
            }
        }
        let v = kron_vecs(&inputs.iter().map(ComplexMatrix::vec_col).collect::<Vec<_>>());
        let out = self.action.matvec(&v)?;
        Ok(ComplexMatrix::unvec(&out, self.output_dim, self.output_dim)?)
    }

    /// `outer ∘ (parts…)`: action `A_outer · (A₁ ⊗ … ⊗ A_k)`.
    pub fn compose(outer: &Self, parts: &[Self]) -> Result<Self> {
        if parts.len() != outer.arity() {
            return Err(ChannelError::DimensionMismatch(format!(
                "outer arity {} with {} parts",
                outer.arity(),
                parts.len()
            )));
        }
        for (slot, (p, &d)) in parts.iter().zip(&outer.input_dims).enumerate() {
            if p.output_dim != d {
                return Err(ChannelError::DimensionMismatch(format!(
                    "part {slot} outputs {} into slot of dimension {d}",
                    p.output_dim
                )));
            }
        }
        let inner = kron_all(parts.iter().map(|p| &p.action))?;
        let action = outer.action.matmul(&inner)?;
        let dims = parts.iter().flat_map(|p| p.input_dims.iter().copied()).collect();
        Self::new(dims, outer.output_dim, action)
    }

    /// `ψ(X₀, …, X_{n−1}) = φ(X_{σ⁻¹(0)}, …, X_{σ⁻¹(n−1)})`.
    pub fn permute_inputs(&self, sigma: &[usize]) -> Result<Self> {
        let n = self.arity();
        if sigma.len() != n || !is_permutation(sigma) {
            return Err(ChannelError::DimensionMismatch(format!("bad permutation {sigma:?}")));
        }
        let mut inv = vec![0; n];
        for (i, &s) in sigma.iter().enumerate() {
            inv[s] = i;
        }
        // ψ's slot i carries φ's slot σ(i)
        let dims: Vec<usize> = (0..n).map(|i| self.input_dims[sigma[i]]).collect();
        if n == 0 {
            return Ok(self.clone());
        }
        let sq: Vec<usize> = dims.iter().map(|d| d * d).collect();
        let p = factor_permutation(&sq, &inv)?;
        Self::new(dims, self.output_dim, self.action.matmul(&p)?)
    }

    /// Fixes every slot except `slot`, leaving a superoperator.
    pub fn partial_evaluation(&self, slot: usize, others: &[ComplexMatrix]) -> Result<Self> {
        if slot >= self.arity() || others.len() + 1 != self.arity() {
            return Err(ChannelError::DimensionMismatch("partial evaluation arity".into()));
        }
        let d = self.input_dims[slot];
        let mut probe_err = None;
        let map = Self::from_fn(&[d], self.output_dim, |x| {
            let mut args = others.to_vec();
            args.insert(slot, x[0].clone());
            match self.apply(&args) {
                Ok(v) => v,
                Err(e) => {
                    probe_err = Some(e);
                    ComplexMatrix::zeros(self.output_dim, self.output_dim)
                }
            }
        });
        if let Some(e) = probe_err {
            return Err(e);
        }
        map
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        if self.input_dims != other.input_dims || self.output_dim != other.output_dim {
            return Err(ChannelError::DimensionMismatch("adding maps of different type".into()));
        }
        Self::new(self.input_dims.clone(), self.output_dim, self.action.checked_add(&other.action)?)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            input_dims: self.input_dims.clone(),
            output_dim: self.output_dim,
            action: self.action.scale(s),
        }
    }

    /// The same data as a multilinear map on the vectorized spaces.
    pub fn as_vector_map(&self) -> Result<MultilinearVectorMap> {
        let dims = self.input_dims.iter().map(|d| d * d).collect();
        Ok(MultilinearVectorMap::new(
            DimProfile::new(dims)?,
            self.output_dim * self.output_dim,
            Field::Complex,
            self.action.clone(),
        )?)
    }

    pub fn from_vector_map(map: &MultilinearVectorMap) -> Result<Self> {
        let root = |n: usize| {
            let r = (n as f64).sqrt().round() as usize;
            (r * r == n).then_some(r).ok_or_else(|| {
                ChannelError::DimensionMismatch(format!("{n} is not a square dimension"))
            })
        };
        let dims = map.input_dims().iter().map(|&n| root(n)).collect::<Result<Vec<_>>>()?;
        Self::new(dims, root(map.output_dim())?, map.matrix().clone())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.input_dims != other.input_dims || self.output_dim != other.output_dim {
            return f64::INFINITY;
        }
        self.action.max_abs_diff(&other.action)
    }
}
