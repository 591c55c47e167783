//! Numerical no-go witnesses: least-squares search for a linear broadcaster
//! or cloner over a spanning set of pure states, the mixture gap of the
//! cloning specification, and pattern matching of interpreted terms against
//! `ψ ↦ ψ⊗ψ`.

use serde::Serialize;

use crate::channels::{ChannelError, OperatorMultiMap, QuantumChannel};
use crate::linalg::{hermitian_eig, kron, solve_linear, vec_norm, ComplexMatrix, CVector, SolveMode, C64};
use crate::operad::{Interpretation, OperadError, OperadTerm};
use crate::random::{random_pure_state, rng_from_seed};

use super::{IdealError, Result};

/// Agreement needed for a clone match.
pub const CLONE_MATCH_TOL: f64 = 1e-8;
/// Residual above which a broadcast search certifies non-embeddability.
pub const CERTIFY_TOL: f64 = 1e-8;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Basis states, `(|i⟩+|j⟩)/√2` and `(|i⟩+i|j⟩)/√2` for `i<j`, the uniform
/// superposition and the Fourier state `Σ ωᵏ|k⟩/√d`: `d² + 2` states whose
/// projectors span `M_d`.
pub fn pure_frame(d: usize) -> Vec<CVector> {
    let mut out = Vec::with_capacity(d * d + 2);
    for i in 0..d {
        let mut v = vec![c(0.0, 0.0); d];
        v[i] = c(1.0, 0.0);
        out.push(v);
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in i + 1..d {
            let mut v = vec![c(0.0, 0.0); d];
            v[i] = c(h, 0.0);
            v[j] = c(h, 0.0);
            out.push(v.clone());
            v[j] = c(0.0, h);
            out.push(v);
        }
    }
    let s = 1.0 / (d as f64).sqrt();
    out.push(vec![c(s, 0.0); d]);
    out.push(
        (0..d)
            .map(|k| C64::from_polar(s, 2.0 * std::f64::consts::PI * k as f64 / d as f64))
            .collect(),
    );
    out
}

fn states(d: usize, extra: usize, seed: u64) -> Vec<CVector> {
    let mut out = pure_frame(d);
    let mut rng = rng_from_seed(seed);
    out.extend((0..extra).map(|_| random_pure_state(d, &mut rng)));
    out
}

fn projector(psi: &[C64]) -> ComplexMatrix {
    ComplexMatrix::outer(psi, psi)
}

/// `vec(σ) ↦ vec(Tr_k σ)` for `σ` on `d⊗d`; `keep = 0` keeps the first factor.
fn marginal_matrix(d: usize, keep: usize) -> ComplexMatrix {
    let d2 = d * d;
    let mut t = ComplexMatrix::zeros(d2, d2 * d2);
    for i in 0..d {
        for j in 0..d {
            for b in 0..d {
                let (row, col) = if keep == 0 { (i * d + b, j * d + b) } else { (b * d + i, b * d + j) };
                t[(j * d + i, col * d2 + row)] = c(1.0, 0.0);
            }
        }
    }
    t
}

/// `(rᵀ ⊗ T)`, so that `T·L·r = (rᵀ⊗T)·vec(L)`.
fn row_block(r: &[C64], t: &ComplexMatrix) -> ComplexMatrix {
    let (tr, tc) = t.shape();
    let mut out = ComplexMatrix::zeros(tr, tc * r.len());
    for (k, rk) in r.iter().enumerate() {
        if *rk == c(0.0, 0.0) {
            continue;
        }
        for i in 0..tr {
            for j in 0..tc {
                let z = t[(i, j)];
                if z != c(0.0, 0.0) {
                    out[(i, k * tc + j)] = *rk * z;
                }
            }
        }
    }
    out
}

struct LeastSquares {
    residual: f64,
    solution: CVector,
}

fn stack_and_solve(blocks: Vec<(ComplexMatrix, CVector)>) -> Result<LeastSquares> {
    let rows: usize = blocks.iter().map(|(a, _)| a.rows()).sum();
    let cols = blocks[0].0.cols();
    let mut a = ComplexMatrix::zeros(rows, cols);
    let mut b = Vec::with_capacity(rows);
    let mut r0 = 0;
    for (blk, rhs) in &blocks {
        a.set_block(r0, 0, blk);
        r0 += blk.rows();
        b.extend_from_slice(rhs);
    }
    let x = solve_linear(&a, &b, SolveMode::LeastSquares).map_err(ChannelError::from)?;
    let ax = a.matvec(&x).map_err(ChannelError::from)?;
    let diff: CVector = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
    Ok(LeastSquares {
        residual: vec_norm(&diff),
        solution: x,
    })
}

fn clone_system(d: usize, sts: &[CVector]) -> Result<LeastSquares> {
    let id = ComplexMatrix::identity(d.pow(4));
    let blocks = sts
        .iter()
        .map(|psi| {
            let p = projector(psi);
            let target = kron(&p, &p).map_err(ChannelError::from)?.vec_col();
            Ok((row_block(&p.vec_col(), &id), target))
        })
        .collect::<Result<Vec<_>>>()?;
    stack_and_solve(blocks)
}

/// Mixture gap of the cloning specification `ρ ↦ ρ⊗ρ` at weights `α, 1−α`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureGap {
    pub alpha: f64,
    /// `C(αρ₁+βρ₂) − αC(ρ₁) − βC(ρ₂)`.
    pub gap: ComplexMatrix,
    pub gap_norm: f64,
    /// `‖ρ₁⊗ρ₂ + ρ₂⊗ρ₁ − ρ₁⊗ρ₁ − ρ₂⊗ρ₂‖_F`.
    pub cross_norm: f64,
    /// Distance between the gap and `αβ(ρ₁⊗ρ₂ + ρ₂⊗ρ₁ − ρ₁⊗ρ₁ − ρ₂⊗ρ₂)`.
    pub cross_term_residual: f64,
    pub bound: f64,
    /// `gap_norm > bound`, compared without tolerance.
    pub exceeds_bound: bool,
}

pub fn mixture_gap(rho1: &ComplexMatrix, rho2: &ComplexMatrix, alpha: f64) -> Result<MixtureGap> {
    let beta = 1.0 - alpha;
    let k = |a: &ComplexMatrix, b: &ComplexMatrix| kron(a, b).map_err(|e| IdealError::Channel(e.into()));
    let mix = &rho1.scale_real(alpha) + &rho2.scale_real(beta);
    let gap = &(&k(&mix, &mix)? - &k(rho1, rho1)?.scale_real(alpha)) - &k(rho2, rho2)?.scale_real(beta);
    let cross = &(&(&k(rho1, rho2)? + &k(rho2, rho1)?) - &k(rho1, rho1)?) - &k(rho2, rho2)?;
    let cross_norm = cross.norm_fro();
    let gap_norm = gap.norm_fro();
    let bound = 0.25 * cross_norm;
    Ok(MixtureGap {
        alpha,
        cross_term_residual: (&gap - &cross.scale_real(alpha * beta)).norm_fro(),
        gap,
        gap_norm,
        cross_norm,
        bound,
        exceeds_bound: gap_norm > bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BroadcastReport {
    pub dim: usize,
    pub states: usize,
    pub unknowns: usize,
    pub equations: usize,
    /// `‖A·vec(L) − b‖₂` at the least-squares optimum of both marginal constraints.
    pub min_residual: f64,
    pub certified: bool,
    /// Superoperator of the minimum-norm optimum, `d⁴ × d²`.
    pub best_linear_map: ComplexMatrix,
    pub best_map_min_choi_eig: f64,
    /// Least-squares residual of `L(ψψ†) = ψψ†⊗ψψ†` on the same states.
    pub clone_residual: f64,
    /// The same on the deterministic frame alone.
    pub frame_clone_residual: f64,
    pub mixture: MixtureGap,
    pub verdict: String,
}

/// Searches for a linear `L: M_d → M_d⊗M_d` with both marginals of
/// `L(ψψ†)` equal to `ψψ†` over the frame and `state_sample` random states.
///
/// The search is exact for linear maps, so a residual at rounding level
/// means a linear map meeting every pure-state constraint exists and nothing
/// is certified; `best_map_min_choi_eig` then shows whether it is CP.
pub fn broadcast_witness(d: usize, state_sample: usize, seed: u64) -> Result<BroadcastReport> {
    if d < 2 {
        return Err(IdealError::TrivialDimension(d));
    }
    let sts = states(d, state_sample, seed);
    let (t1, t2) = (marginal_matrix(d, 0), marginal_matrix(d, 1));
    let mut blocks = Vec::with_capacity(2 * sts.len());
    for psi in &sts {
        let r = projector(psi).vec_col();
        blocks.push((row_block(&r, &t1), r.clone()));
        blocks.push((row_block(&r, &t2), r));
    }
    let equations = blocks.iter().map(|(a, _)| a.rows()).sum();
    let ls = stack_and_solve(blocks)?;
    let d2 = d * d;
    let best = ComplexMatrix::unvec(&ls.solution, d2 * d2, d2).map_err(ChannelError::from)?;
    let ch = QuantumChannel::from_superoperator(&OperatorMultiMap::new(vec![d], d2, best.clone())?)?;
    let eig = hermitian_eig(&ch.choi().hermitian_part()).map_err(ChannelError::from)?;
    let min_eig = eig.values.last().copied().unwrap_or(0.0);

    let clone_residual = clone_system(d, &sts)?.residual;
    let frame_clone_residual = clone_system(d, &pure_frame(d))?.residual;
    let mixture = mixture_gap(&ComplexMatrix::unit(d, 0, 0), &ComplexMatrix::unit(d, 1, 1), 0.5)?;

    let certified = ls.residual > CERTIFY_TOL;
    let verdict = if certified {
        format!("no linear map broadcasts every sampled state (residual {:e})", ls.residual)
    } else {
        format!(
            "not certified: a linear map meets both marginal constraints on every sampled state \
             (residual {:e}); its Choi matrix has minimum eigenvalue {:.6}",
            ls.residual, min_eig
        )
    };
    Ok(BroadcastReport {
        dim: d,
        states: sts.len(),
        unknowns: d2 * d2 * d2,
        equations,
        min_residual: ls.residual,
        certified,
        best_linear_map: best,
        best_map_min_choi_eig: min_eig,
        clone_residual,
        frame_clone_residual,
        mixture,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CloneMatchReport {
    pub matched: bool,
    pub checked: usize,
    pub max_deviation: f64,
    /// First state on which the map differs from `ψψ†⊗ψψ†`.
    pub witness: Option<CVector>,
    pub witness_deviation: Option<f64>,
}

pub(crate) fn clones_on_frame(m: &OperatorMultiMap, d: usize, trials: usize, seed: u64) -> Result<CloneMatchReport> {
    if m.input_dims() != [d] || m.output_dim() != d * d {
        return Err(IdealError::SignatureMismatch(format!(
            "clone candidate must be {d} -> {}, got {:?} -> {}",
            d * d,
            m.input_dims(),
            m.output_dim()
        )));
    }
    let sts = states(d, trials, seed);
    let mut report = CloneMatchReport {
        matched: true,
        checked: sts.len(),
        max_deviation: 0.0,
        witness: None,
        witness_deviation: None,
    };
    for psi in sts {
        let p = projector(&psi);
        let out = m.apply(std::slice::from_ref(&p))?;
        let dev = out.max_abs_diff(&kron(&p, &p).map_err(ChannelError::from)?);
        report.max_deviation = report.max_deviation.max(dev);
        if dev > CLONE_MATCH_TOL && report.witness.is_none() {
            report.matched = false;
            report.witness = Some(psi);
            report.witness_deviation = Some(dev);
        }
    }
    Ok(report)
}

/// Whether the interpretation of `t` acts as `ψψ† ↦ ψψ†⊗ψψ†`. Terms with a
/// formal generator are refused with the non-linear-generator error.
pub fn clone_pattern_match(t: &OperadTerm, interp: &Interpretation, d: usize, trials: usize, seed: u64) -> Result<CloneMatchReport> {
    let m = interp.interpret(t).map_err(|e| match e {
        OperadError::NonLinearGenerator(s) => IdealError::Operad(OperadError::NonLinearGenerator(s)),
        other => other.into(),
    })?;
    clones_on_frame(&m, d, trials, seed)
}
