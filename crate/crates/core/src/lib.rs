//! Finite-dimensional toolkit for multilinear quantum processes: dagger
//! adjoints of multilinear maps, Choi/Kraus/Stinespring machinery with
//! minimal dilations, free symmetric operads and their synergy monad, and
//! operadic ideals with no-cloning and no-broadcasting witnesses.

pub mod channels;
pub mod ideals;
pub mod linalg;
pub mod monad;
pub mod multilinear;
pub mod operad;
pub mod random;

pub use linalg::{ComplexMatrix, DimProfile, C64};
