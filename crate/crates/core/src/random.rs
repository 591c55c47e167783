//! Seeded random generators for matrices, states and channels.
//!
//! Everything draws from `ChaCha8Rng` so a seed pins every value bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{gram_schmidt, hermitian_eig, CVector, ComplexMatrix, C64};

pub type OpRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> OpRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child seed for trial `index`, so trials are independent of iteration order.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut r = ChaCha8Rng::seed_from_u64(root ^ 0x9e37_79b9_7f4a_7c15);
    r.set_stream(index);
    r.random()
}

pub fn normal(rng: &mut OpRng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn complex_normal(rng: &mut OpRng) -> C64 {
    C64::new(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre(rows: usize, cols: usize, rng: &mut OpRng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn real_gaussian(rows: usize, cols: usize, rng: &mut OpRng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(normal(rng), 0.0))
}

pub fn random_vector(n: usize, rng: &mut OpRng) -> CVector {
    (0..n).map(|_| complex_normal(rng)).collect()
}

pub fn random_hermitian(n: usize, rng: &mut OpRng) -> ComplexMatrix {
    ginibre(n, n, rng).hermitian_part()
}

/// Haar-distributed isometry `rows × cols` (`cols ≤ rows`).
pub fn random_isometry(rows: usize, cols: usize, rng: &mut OpRng) -> ComplexMatrix {
    assert!(cols <= rows, "isometry needs cols <= rows");
    loop {
        let g = ginibre(rows, cols, rng);
        let q = gram_schmidt(&g.columns(), 1e-8).expect("equal-length columns");
        if q.len() == cols {
            return ComplexMatrix::from_columns(&q).expect("nonempty");
        }
    }
}

pub fn random_unitary(n: usize, rng: &mut OpRng) -> ComplexMatrix {
    random_isometry(n, n, rng)
}

/// Density matrix `W W† / tr(W W†)` for Ginibre `W`.
pub fn random_density(n: usize, rng: &mut OpRng) -> ComplexMatrix {
    let w = ginibre(n, n, rng);
    let p = &w * &w.adjoint();
    let t = p.trace().re;
    p.scale_real(1.0 / t).hermitian_part()
}

pub fn random_pure_state(n: usize, rng: &mut OpRng) -> CVector {
    let v = random_vector(n, rng);
    let norm = crate::linalg::vec_norm(&v);
    v.into_iter().map(|z| z / norm).collect()
}

/// Kraus operators of a random trace-preserving map with `rank` operators.
/// Needs `rank · d_out ≥ d_in`.
pub fn random_cptp_kraus(d_in: usize, d_out: usize, rank: usize, rng: &mut OpRng) -> Vec<ComplexMatrix> {
    assert!(rank * d_out >= d_in, "{rank} operators into dimension {d_out} cannot preserve trace on {d_in}");
    let gs: Vec<ComplexMatrix> = (0..rank).map(|_| ginibre(d_out, d_in, rng)).collect();
    let mut s = ComplexMatrix::zeros(d_in, d_in);
    for g in &gs {
        s = &s + &(&g.adjoint() * g);
    }
    let e = hermitian_eig(&s).expect("square");
    let inv_sqrt = ComplexMatrix::diag_real(&e.values.iter().map(|l| 1.0 / l.sqrt()).collect::<Vec<_>>());
    let s_inv_sqrt = &(&e.vectors * &inv_sqrt) * &e.vectors.adjoint();
    gs.iter().map(|g| g * &s_inv_sqrt).collect()
}

/// Uniform random permutation of `0..n`.
pub fn random_permutation(n: usize, rng: &mut OpRng) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}
