//! Finite-dimensional C*-algebras `M_{n₁} ⊕ … ⊕ M_{n_k}` as block-diagonal matrices.

use serde::{Deserialize, Serialize};

use super::channel::{is_cp, CpReport, QuantumChannel};
use super::opmap::OperatorMultiMap;
use super::{ChannelError, Result};
use crate::linalg::{ComplexMatrix, C64};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FdCStarAlgebra {
    block_dims: Vec<usize>,
}

impl FdCStarAlgebra {
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() || block_dims.contains(&0) {
            return Err(ChannelError::BlockMismatch {
                expected: block_dims,
                detail: "blocks must be nonempty and positive".into(),
            });
        }
        Ok(Self { block_dims })
    }

    pub fn simple(d: usize) -> Result<Self> {
        Self::new(vec![d])
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    /// `N = Σ nᵢ`, the side of the block-diagonal matrices.
    pub fn total_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    pub fn is_simple(&self) -> bool {
        self.block_dims.len() == 1
    }

    pub fn unit(&self) -> ComplexMatrix {
        ComplexMatrix::identity(self.total_dim())
    }

    fn offsets(&self) -> Vec<usize> {
        self.block_dims
            .iter()
            .scan(0, |acc, &n| {
                let at = *acc;
                *acc += n;
                Some(at)
            })
            .collect()
    }

    pub fn direct_sum(&self, blocks: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        if blocks.len() != self.block_dims.len()
            || blocks.iter().zip(&self.block_dims).any(|(b, &n)| b.shape() != (n, n))
        {
            return Err(ChannelError::BlockMismatch {
                expected: self.block_dims.clone(),
                detail: format!("got blocks {:?}", blocks.iter().map(ComplexMatrix::shape).collect::<Vec<_>>()),
            });
        }
        let n = self.total_dim();
        let mut m = ComplexMatrix::zeros(n, n);
        for (b, at) in blocks.iter().zip(self.offsets()) {
            m.set_block(at, at, b);
        }
        Ok(m)
    }

    /// Splits an element into its blocks; off-block entries must vanish within `tol`.
    pub fn blocks(&self, element: &ComplexMatrix, tol: f64) -> Result<Vec<ComplexMatrix>> {
        let n = self.total_dim();
        if element.shape() != (n, n) {
            return Err(ChannelError::BlockMismatch {
                expected: self.block_dims.clone(),
                detail: format!("element of shape {:?}", element.shape()),
            });
        }
        let blocks: Vec<ComplexMatrix> = self
            .block_dims
            .iter()
            .zip(self.offsets())
            .map(|(&d, at)| element.block(at, at, d, d))
            .collect();
        let rebuilt = self.direct_sum(&blocks)?;
        let off = element.max_abs_diff(&rebuilt);
        if off > tol {
            return Err(ChannelError::BlockMismatch {
                expected: self.block_dims.clone(),
                detail: format!("off-block entry of size {off:e}"),
            });
        }
        Ok(blocks)
    }

    /// Blocks `M_{nᵢ} ⊗ M_{mⱼ}` in lexicographic order.
    pub fn tensor(&self, other: &Self) -> Self {
        let block_dims = self
            .block_dims
            .iter()
            .flat_map(|&a| other.block_dims.iter().map(move |&b| a * b))
            .collect();
        Self { block_dims }
    }
}

/// `τ(⊕ aᵢ) = Σ tr(aᵢ) / N`, so `τ(1) = 1` for every block profile.
pub fn normalized_trace(alg: &FdCStarAlgebra, element: &ComplexMatrix) -> Result<C64> {
    let blocks = alg.blocks(element, 0.0)?;
    let n = alg.total_dim() as f64;
    Ok(blocks.iter().map(ComplexMatrix::trace).sum::<C64>() / n)
}

/// Restricts a superoperator on `M_N` to each block summand and certifies each piece.
pub fn blockwise_cp(alg: &FdCStarAlgebra, map: &OperatorMultiMap, tol: f64) -> Result<Vec<CpReport>> {
    let n = alg.total_dim();
    if map.arity() != 1 || map.input_dims()[0] != n {
        return Err(ChannelError::BlockMismatch {
            expected: alg.block_dims.clone(),
            detail: format!("superoperator with inputs {:?}", map.input_dims()),
        });
    }
    alg.block_dims
        .iter()
        .zip(alg.offsets())
        .map(|(&d, at)| {
            let ch = QuantumChannel::from_fn(d, map.output_dim(), |x| {
                let mut big = ComplexMatrix::zeros(n, n);
                big.set_block(at, at, x);
                map.apply(&[big]).expect("shape checked")
            })?;
            Ok(is_cp(&ch, tol))
        })
        .collect()
}

/// `H = C^d ↦ B(H) = M_d`.
pub fn hilb_to_cstar(h_dim: usize) -> Result<FdCStarAlgebra> {
    FdCStarAlgebra::simple(h_dim)
}

/// Inverse of [`hilb_to_cstar`]; direct sums have no single Hilbert space.
pub fn cstar_to_hilb(alg: &FdCStarAlgebra) -> Result<usize> {
    if alg.is_simple() {
        Ok(alg.block_dims[0])
    } else {
        Err(ChannelError::NonSimpleAlgebra(alg.block_dims.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{ginibre, rng_from_seed};
    use proptest::prelude::*;

    #[test]
    fn unit_of_direct_sum_has_trace_one() {
        let a = FdCStarAlgebra::new(vec![2, 3]).unwrap();
        assert_eq!(normalized_trace(&a, &a.unit()).unwrap(), C64::new(1.0, 0.0));
    }

    #[test]
    fn single_block_is_trace_over_dimension() {
        let mut rng = rng_from_seed(100);
        let a = FdCStarAlgebra::simple(3).unwrap();
        let x = ginibre(3, 3, &mut rng);
        assert!((normalized_trace(&a, &x).unwrap() - x.trace() / 3.0).norm() < 1e-15);
    }

    #[test]
    fn blockwise_oracle() {
        let mut rng = rng_from_seed(101);
        let a = FdCStarAlgebra::new(vec![1, 2, 3]).unwrap();
        let bs: Vec<ComplexMatrix> = [1, 2, 3].iter().map(|&d| ginibre(d, d, &mut rng)).collect();
        let x = a.direct_sum(&bs).unwrap();
        let mut want = C64::new(0.0, 0.0);
        for b in &bs {
            for i in 0..b.rows() {
                want += b[(i, i)];
            }
        }
        assert!((normalized_trace(&a, &x).unwrap() - want / 6.0).norm() < 1e-14);
        let mut bad = x.clone();
        bad[(0, 5)] = C64::new(1.0, 0.0);
        assert!(matches!(normalized_trace(&a, &bad), Err(ChannelError::BlockMismatch { .. })));
    }

    #[test]
    fn hilb_conversion() {
        let a = hilb_to_cstar(2).unwrap();
        assert_eq!(cstar_to_hilb(&a).unwrap(), 2);
        let b = hilb_to_cstar(3).unwrap();
        assert_eq!(cstar_to_hilb(&a.tensor(&b)).unwrap(), 6);
        let err = cstar_to_hilb(&FdCStarAlgebra::new(vec![2, 2]).unwrap()).unwrap_err();
        assert!(err.to_string().contains("not simple"));
        let ch = QuantumChannel::transpose_map(2);
        let d = cstar_to_hilb(&hilb_to_cstar(ch.in_dim()).unwrap()).unwrap();
        let same = QuantumChannel::from_choi(d, d, ch.choi().clone()).unwrap();
        assert_eq!(same.choi(), ch.choi());
    }

    #[test]
    fn blockwise_cp_sees_each_summand() {
        let a = FdCStarAlgebra::new(vec![2, 2]).unwrap();
        // transpose on the second block only
        let map = OperatorMultiMap::from_fn(&[4], 4, |x| {
            let mut out = x[0].clone();
            let t = x[0].block(2, 2, 2, 2).transpose();
            out.set_block(2, 2, &t);
            out
        })
        .unwrap();
        let r = blockwise_cp(&a, &map, 1e-10).unwrap();
        assert!(r[0].cp);
        assert!(!r[1].cp);
    }

    proptest! {
        #[test]
        fn unit_trace_is_exactly_one(dims in proptest::collection::vec(1usize..6, 1..5)) {
            let a = FdCStarAlgebra::new(dims).unwrap();
            prop_assert_eq!(normalized_trace(&a, &a.unit()).unwrap(), C64::new(1.0, 0.0));
        }
    }
}
