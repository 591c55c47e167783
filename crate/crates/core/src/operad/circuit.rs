//! The symmetric monoidal category of circuits generated by an operad.
//!
//! A circuit with `n` input wires and `m` output wires is a tuple of `m`
//! trees whose leaves together use every input wire exactly once. Keeping
//! that form at all times makes sequential composition substitution and
//! parallel composition concatenation, so the monoidal laws hold on the nose.

use serde::{Deserialize, Serialize};

use crate::channels::OperatorMultiMap;
use crate::linalg::{factor_permutation, is_permutation};

use super::{canonical_form, Interpretation, OperadError, OperadTerm, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitTerm {
    inputs: Vec<usize>,
    outputs: Vec<OperadTerm>,
    output_dims: Vec<usize>,
}

impl CircuitTerm {
    /// `outputs[i]` produces a wire of dimension `output_dims[i]`; leaf `k`
    /// reads input wire `k`.
    pub fn new(inputs: Vec<usize>, outputs: Vec<OperadTerm>, output_dims: Vec<usize>) -> Result<Self> {
        if outputs.len() != output_dims.len() {
            return Err(OperadError::WireMismatch(format!(
                "{} output trees but {} output dimensions",
                outputs.len(),
                output_dims.len()
            )));
        }
        let outputs = outputs.iter().map(canonical_form).collect::<Result<Vec<_>>>()?;
        let leaves: Vec<usize> = outputs.iter().flat_map(OperadTerm::leaves).collect();
        if leaves.len() != inputs.len() || !is_permutation(&leaves) {
            return Err(OperadError::BadLeaves(leaves));
        }
        for (t, &d) in outputs.iter().zip(&output_dims) {
            if let OperadTerm::Leaf { slot } = t {
                if inputs[*slot] != d {
                    return Err(OperadError::WireMismatch(format!(
                        "wire {slot} of dimension {} passed through as dimension {d}",
                        inputs[*slot]
                    )));
                }
            }
        }
        Ok(Self {
            inputs,
            outputs,
            output_dims,
        })
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self {
            inputs: dims.to_vec(),
            outputs: (0..dims.len()).map(OperadTerm::leaf).collect(),
            output_dims: dims.to_vec(),
        }
    }

    /// Output wire `i` carries input wire `perm[i]`.
    pub fn symmetry(perm: &[usize], dims: &[usize]) -> Result<Self> {
        if perm.len() != dims.len() || !is_permutation(perm) {
            return Err(OperadError::BadPermutation(perm.to_vec()));
        }
        Ok(Self {
            inputs: dims.to_vec(),
            outputs: perm.iter().map(|&p| OperadTerm::leaf(p)).collect(),
            output_dims: perm.iter().map(|&p| dims[p]).collect(),
        })
    }

    /// A single operation box.
    pub fn generator(op: &str, inputs: &[usize], output: usize) -> Self {
        Self {
            inputs: inputs.to_vec(),
            outputs: vec![OperadTerm::generator(op, inputs.len())],
            output_dims: vec![output],
        }
    }

    /// A one-output circuit from an operad term.
    pub fn from_term(t: &OperadTerm, inputs: &[usize], output: usize) -> Result<Self> {
        Self::new(inputs.to_vec(), vec![t.clone()], vec![output])
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[OperadTerm] {
        &self.outputs
    }

    pub fn output_dims(&self) -> &[usize] {
        &self.output_dims
    }

    /// `second ∘ first`.
    pub fn then(&self, second: &Self) -> Result<Self> {
        if self.output_dims != second.inputs {
            return Err(OperadError::WireMismatch(format!(
                "outputs {:?} feed inputs {:?}",
                self.output_dims, second.inputs
            )));
        }
        let outputs = second
            .outputs
            .iter()
            .map(|t| substitute(t, &self.outputs))
            .collect();
        Ok(Self {
            inputs: self.inputs.clone(),
            outputs,
            output_dims: second.output_dims.clone(),
        })
    }

    /// `self ⊗ other`, wires of `self` first.
    pub fn parallel(&self, other: &Self) -> Self {
        let shift = self.inputs.len();
        let mut outputs = self.outputs.clone();
        outputs.extend(other.outputs.iter().map(|t| shift_leaves(t, shift)));
        let mut inputs = self.inputs.clone();
        inputs.extend_from_slice(&other.inputs);
        let mut output_dims = self.output_dims.clone();
        output_dims.extend_from_slice(&other.output_dims);
        Self {
            inputs,
            outputs,
            output_dims,
        }
    }

    /// The multilinear map from the input wires to the tensor product of
    /// the output wires.
    pub fn interpret(&self, interp: &Interpretation) -> Result<OperatorMultiMap> {
        let mut parts = Vec::with_capacity(self.outputs.len());
        let mut labels = Vec::new();
        for (t, &d) in self.outputs.iter().zip(&self.output_dims) {
            parts.push(interp.interpret_dfs(t, Some(d))?);
            labels.extend(t.leaves());
        }
        let mut dfs_dims = Vec::new();
        for (p, &l) in parts.iter().flat_map(|m| m.input_dims().iter()).zip(&labels) {
            if *p != self.inputs[l] {
                return Err(OperadError::WireMismatch(format!(
                    "wire {l} has dimension {} but is read as {p}",
                    self.inputs[l]
                )));
            }
            dfs_dims.push(*p);
        }
        let joint = crate::linalg::kron_all(parts.iter().map(OperatorMultiMap::action))
            .map_err(crate::channels::ChannelError::from)?;
        let reorder = vec_product_reorder(&self.output_dims)?;
        let action = reorder.matmul(&joint).map_err(crate::channels::ChannelError::from)?;
        let out: usize = self.output_dims.iter().product();
        let dfs = OperatorMultiMap::new(dfs_dims, out, action)?;
        let mut sigma = vec![0; labels.len()];
        for (p, &l) in labels.iter().enumerate() {
            sigma[l] = p;
        }
        Ok(dfs.permute_inputs(&sigma)?)
    }
}

/// The permutation taking `vec(Y₀) ⊗ … ⊗ vec(Y_{k−1})` to `vec(Y₀ ⊗ … ⊗ Y_{k−1})`.
pub fn vec_product_reorder(dims: &[usize]) -> Result<crate::linalg::ComplexMatrix> {
    let k = dims.len();
    let factors: Vec<usize> = dims.iter().flat_map(|&d| [d, d]).collect();
    let perm: Vec<usize> = (0..k).map(|i| 2 * i).chain((0..k).map(|i| 2 * i + 1)).collect();
    factor_permutation(&factors, &perm).map_err(|e| crate::channels::ChannelError::from(e).into())
}

fn substitute(t: &OperadTerm, parts: &[OperadTerm]) -> OperadTerm {
    match t {
        OperadTerm::Leaf { slot } => parts[*slot].clone(),
        OperadTerm::Apply { op, args } => OperadTerm::Apply {
            op: op.clone(),
            args: args.iter().map(|a| substitute(a, parts)).collect(),
        },
        OperadTerm::Permuted { .. } => unreachable!("circuit trees are canonical"),
    }
}

fn shift_leaves(t: &OperadTerm, by: usize) -> OperadTerm {
    match t {
        OperadTerm::Leaf { slot } => OperadTerm::leaf(slot + by),
        OperadTerm::Apply { op, args } => OperadTerm::Apply {
            op: op.clone(),
            args: args.iter().map(|a| shift_leaves(a, by)).collect(),
        },
        OperadTerm::Permuted { .. } => unreachable!("circuit trees are canonical"),
    }
}
