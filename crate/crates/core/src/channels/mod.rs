//! Completely positive maps: Choi matrices, Kraus sets, Stinespring and
//! multilinear dilations, minimal dilations and their intertwiners, and the
//! Kraus/tensor decomposition with its explicit adjoint.
//!
//! Two dilation shapes live here. [`ChannelDilation`] is the Schrödinger
//! picture `Φ(ρ) = Tr_env(VρV†)`; [`MultilinearDilation`] is the Heisenberg
//! picture `Φ(a₁, …, aₙ) = V†π₁(a₁)⋯πₙ(aₙ)V`.
//! [`ChannelDilation::heisenberg_dilation`] moves between them.

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::multilinear::MultilinearError;

pub mod algebra;
pub mod channel;
pub mod decompose;
pub mod dilation;
pub mod json;
pub mod opmap;

pub use algebra::{cstar_to_hilb, hilb_to_cstar, normalized_trace, FdCStarAlgebra};
pub use channel::{
    channel_distance_bound, choi_layout_bridge, heisenberg_dual, is_cp, is_tp, kraus_from_choi,
    mcp_check, multilinear_choi, stinespring_from_kraus, ChannelDilation, CpReport, KrausSet,
    McpReport, McpWitness, QuantumChannel, TpReport, CERT_TOL,
};
pub use decompose::{kraus_tensor_decompose, n_adjoint, zigzag_check, KrausTensorDecomposition, ZigzagReport};
pub use dilation::{
    dilation_reconstruct, intertwiner, minimal_dilation, IntertwinerReport, MultilinearDilation,
    StarRepresentation,
};
pub use opmap::OperatorMultiMap;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("map is not completely positive: Choi eigenvalue {min_eig:e}")]
    NotCp { min_eig: f64 },
    #[error("dilations realize different maps (max deviation {residual:e})")]
    InconsistentDilations { residual: f64 },
    #[error("element does not match block structure {expected:?}: {detail}")]
    BlockMismatch { expected: Vec<usize>, detail: String },
    #[error("algebra with blocks {0:?} is not simple; handle the summands blockwise")]
    NonSimpleAlgebra(Vec<usize>),
    #[error("invalid *-representation: {0}")]
    InvalidRepresentation(String),
    #[error("malformed channel data: {0}")]
    Format(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Multilinear(#[from] MultilinearError),
}

pub type Result<T> = std::result::Result<T, ChannelError>;
