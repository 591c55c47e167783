//! Channels through their Choi matrices, Kraus sets and Stinespring isometries.

use serde::Serialize;

use super::dilation::{MultilinearDilation, StarRepresentation};
use super::opmap::OperatorMultiMap;
use super::{ChannelError, Result};
use crate::linalg::{
    hermitian_eig, kron, multi_index, partial_trace, trace_norm, ComplexMatrix, DimProfile, C64,
    ONE, ZERO,
};
use crate::random::{random_density, OpRng};

/// Default eigenvalue floor for CP and TP certification.
pub const CERT_TOL: f64 = 1e-10;

/// A linear map `M_in → M_out` held as `C = Σ E_ij ⊗ Φ(E_ij)` with factor
/// order (input ⊗ output).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    in_dim: usize,
    out_dim: usize,
    choi: ComplexMatrix,
}

impl QuantumChannel {
    pub fn from_choi(in_dim: usize, out_dim: usize, choi: ComplexMatrix) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 || choi.shape() != (in_dim * out_dim, in_dim * out_dim) {
            return Err(ChannelError::DimensionMismatch(format!(
                "Choi matrix {:?} for {in_dim} -> {out_dim}",
                choi.shape()
            )));
        }
        Ok(Self {
            in_dim,
            out_dim,
            choi,
        })
    }

    /// Evaluates `f` on matrix units; `f` is taken to be linear.
    pub fn from_fn(in_dim: usize, out_dim: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Result<Self> {
        let mut choi = ComplexMatrix::zeros(in_dim * out_dim, in_dim * out_dim);
        for i in 0..in_dim {
            for j in 0..in_dim {
                let out = f(&ComplexMatrix::unit(in_dim, i, j));
                if out.shape() != (out_dim, out_dim) {
                    return Err(ChannelError::DimensionMismatch("map output shape".into()));
                }
                choi.set_block(i * out_dim, j * out_dim, &out);
            }
        }
        Self::from_choi(in_dim, out_dim, choi)
    }

    pub fn from_kraus(ks: &KrausSet) -> Result<Self> {
        Self::from_fn(ks.in_dim, ks.out_dim, |x| ks.apply(x).expect("shape checked"))
    }

    pub fn from_superoperator(map: &OperatorMultiMap) -> Result<Self> {
        if map.arity() != 1 {
            return Err(ChannelError::DimensionMismatch("superoperator must have one input".into()));
        }
        Self::from_fn(map.input_dims()[0], map.output_dim(), |x| {
            map.apply(std::slice::from_ref(x)).expect("shape checked")
        })
    }

    pub fn identity(d: usize) -> Self {
        Self::from_fn(d, d, Clone::clone).expect("square")
    }

    pub fn transpose_map(d: usize) -> Self {
        Self::from_fn(d, d, ComplexMatrix::transpose).expect("square")
    }

    /// `ρ ↦ tr(ρ) I / d_out`.
    pub fn completely_depolarizing(d_in: usize, d_out: usize) -> Self {
        let mixed = ComplexMatrix::identity(d_out).scale_real(1.0 / d_out as f64);
        Self::from_fn(d_in, d_out, |x| mixed.scale(x.trace())).expect("square")
    }

    pub fn unitary(u: &ComplexMatrix) -> Result<Self> {
        Self::from_kraus(&KrausSet::new(vec![u.clone()])?)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    /// `Φ(ρ) = Σ_ij ρ_ij Φ(E_ij)`, reading `Φ(E_ij)` off the Choi blocks.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.shape() != (self.in_dim, self.in_dim) {
            return Err(ChannelError::DimensionMismatch(format!(
                "input {:?} for a channel on dimension {}",
                rho.shape(),
                self.in_dim
            )));
        }
        let o = self.out_dim;
        let mut out = ComplexMatrix::zeros(o, o);
        for i in 0..self.in_dim {
            for j in 0..self.in_dim {
                let c = rho[(i, j)];
                if c == ZERO {
                    continue;
                }
                for r in 0..o {
                    for s in 0..o {
                        out[(r, s)] += c * self.choi[(i * o + r, j * o + s)];
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn superoperator(&self) -> OperatorMultiMap {
        OperatorMultiMap::from_fn(&[self.in_dim], self.out_dim, |x| self.apply(&x[0]).expect("shape checked"))
            .expect("shape checked")
    }

    /// `self` after `first`.
    pub fn after(&self, first: &Self) -> Result<Self> {
        if first.out_dim != self.in_dim {
            return Err(ChannelError::DimensionMismatch("sequential composition".into()));
        }
        Self::from_fn(first.in_dim, self.out_dim, |x| {
            self.apply(&first.apply(x).expect("shape")).expect("shape")
        })
    }

    /// `Φ ⊗ Ψ` on `M_{a} ⊗ M_{b}`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let (a, b) = (self.in_dim, other.in_dim);
        Self::from_fn(a * b, self.out_dim * other.out_dim, |x| {
            let mut acc = ComplexMatrix::zeros(self.out_dim * other.out_dim, self.out_dim * other.out_dim);
            for r in 0..a * b {
                for c in 0..a * b {
                    let z = x[(r, c)];
                    if z == ZERO {
                        continue;
                    }
                    let left = self.apply(&ComplexMatrix::unit(a, r / b, c / b)).expect("shape");
                    let right = other.apply(&ComplexMatrix::unit(b, r % b, c % b)).expect("shape");
                    acc = &acc + &kron(&left, &right).expect("small").scale(z);
                }
            }
            acc
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            choi: self.choi.scale_real(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CpReport {
    pub cp: bool,
    pub min_eig: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TpReport {
    pub tp: bool,
    pub defect: f64,
}

/// Choi criterion: CP iff every Choi eigenvalue is at least `−tol`.
pub fn is_cp(ch: &QuantumChannel, tol: f64) -> CpReport {
    let e = hermitian_eig(&ch.choi).expect("Choi matrices are square");
    let min_eig = *e.values.last().expect("nonempty");
    CpReport {
        cp: min_eig >= -tol && ch.choi.hermitian_defect() <= tol.max(CERT_TOL),
        min_eig,
    }
}

/// TP iff `Tr_out(C) = I_in`.
pub fn is_tp(ch: &QuantumChannel, tol: f64) -> TpReport {
    let profile = DimProfile::new(vec![ch.in_dim, ch.out_dim]).expect("positive dims");
    let reduced = partial_trace(&ch.choi, &profile, 1).expect("shape checked");
    let defect = reduced.max_abs_diff(&ComplexMatrix::identity(ch.in_dim));
    TpReport {
        tp: defect <= tol,
        defect,
    }
}

/// `‖C_a − C_b‖₁`, an upper bound on the diamond distance up to a factor of `in_dim`.
pub fn channel_distance_bound(a: &QuantumChannel, b: &QuantumChannel) -> Result<f64> {
    if a.in_dim != b.in_dim || a.out_dim != b.out_dim {
        return Err(ChannelError::DimensionMismatch("channel distance between different types".into()));
    }
    Ok(trace_norm(&a.choi.checked_sub(&b.choi)?)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    in_dim: usize,
    out_dim: usize,
    operators: Vec<ComplexMatrix>,
}

impl KrausSet {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| ChannelError::DimensionMismatch("empty Kraus set".into()))?;
        let (out_dim, in_dim) = first.shape();
        if operators.iter().any(|k| k.shape() != (out_dim, in_dim)) {
            return Err(ChannelError::DimensionMismatch("Kraus operators of mixed shape".into()));
        }
        Ok(Self {
            in_dim,
            out_dim,
            operators,
        })
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut out = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.operators {
            out = &out + &(&k.matmul(rho)? * &k.adjoint());
        }
        Ok(out)
    }

    /// `Σ K†K`.
    pub fn completeness(&self) -> ComplexMatrix {
        let mut s = ComplexMatrix::zeros(self.in_dim, self.in_dim);
        for k in &self.operators {
            s = &s + &(&k.adjoint() * k);
        }
        s
    }

    /// Mixes the operators by a unitary `W`: `K'_α = Σ_β W_αβ K_β`.
    pub fn mix(&self, w: &ComplexMatrix) -> Result<Self> {
        if w.shape() != (self.len(), self.len()) {
            return Err(ChannelError::DimensionMismatch("mixing unitary size".into()));
        }
        let ops = (0..self.len())
            .map(|a| {
                let mut acc = ComplexMatrix::zeros(self.out_dim, self.in_dim);
                for (b, k) in self.operators.iter().enumerate() {
                    acc = &acc + &k.scale(w[(a, b)]);
                }
                acc
            })
            .collect();
        Self::new(ops)
    }
}

/// Kraus operators from the Choi spectrum: `K_α[o, i] = √λ_α v_α[i·out + o]`.
///
/// Eigenvalues at or below `rank_tol` times the largest are dropped. Each
/// eigenvector is rotated so its largest entry is real and positive.
pub fn kraus_from_choi(ch: &QuantumChannel, rank_tol: f64) -> Result<KrausSet> {
    let e = hermitian_eig(&ch.choi)?;
    let top = e.values[0].max(0.0);
    let min = *e.values.last().expect("nonempty");
    if min < -rank_tol * top.max(1.0) {
        return Err(ChannelError::NotCp { min_eig: min });
    }
    let (din, dout) = (ch.in_dim, ch.out_dim);
    let mut ops = Vec::new();
    for (k, &lam) in e.values.iter().enumerate() {
        if lam <= rank_tol * top || lam <= 0.0 {
            continue;
        }
        let v = e.vectors.column(k);
        let pivot = v
            .iter()
            .copied()
            .fold(ZERO, |best, z| if z.norm() > best.norm() + 1e-12 { z } else { best });
        let phase = if pivot == ZERO { ONE } else { pivot.conj() / pivot.norm() };
        let s = lam.sqrt();
        ops.push(ComplexMatrix::from_fn(dout, din, |o, i| v[i * dout + o] * phase * s));
    }
    if ops.is_empty() {
        ops.push(ComplexMatrix::zeros(dout, din));
    }
    KrausSet::new(ops)
}

/// `V: C^in → C^out ⊗ C^env` with `Φ(ρ) = Tr_env(V ρ V†)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDilation {
    pub in_dim: usize,
    pub out_dim: usize,
    pub env_dim: usize,
    pub isometry: ComplexMatrix,
}

/// `V = Σ_α K_α ⊗ e_α`, so `V x = Σ_α K_α x ⊗ e_α` and `V†V = Σ K†K`.
pub fn stinespring_from_kraus(ks: &KrausSet) -> ChannelDilation {
    let env = ks.len();
    let (din, dout) = (ks.in_dim, ks.out_dim);
    let mut v = ComplexMatrix::zeros(dout * env, din);
    for (a, k) in ks.operators.iter().enumerate() {
        for o in 0..dout {
            for i in 0..din {
                v[(o * env + a, i)] = k[(o, i)];
            }
        }
    }
    ChannelDilation {
        in_dim: din,
        out_dim: dout,
        env_dim: env,
        isometry: v,
    }
}

impl ChannelDilation {
    /// `‖V†V − I‖` entrywise; zero for trace-preserving channels.
    pub fn isometry_defect(&self) -> f64 {
        (&self.isometry.adjoint() * &self.isometry).max_abs_diff(&ComplexMatrix::identity(self.in_dim))
    }

    pub fn is_isometry(&self, tol: f64) -> bool {
        self.isometry_defect() <= tol
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let big = &self.isometry.matmul(rho)? * &self.isometry.adjoint();
        let profile = DimProfile::new(vec![self.out_dim, self.env_dim])?;
        Ok(partial_trace(&big, &profile, 1)?)
    }

    pub fn to_channel(&self) -> Result<QuantumChannel> {
        QuantumChannel::from_fn(self.in_dim, self.out_dim, |x| self.apply(x).expect("shape"))
    }

    /// The same isometry read in the Heisenberg direction: with
    /// `π(a) = a ⊗ I_env` on `C^out ⊗ C^env`, `V†π(a)V = Φ*(a)` where `Φ*` is
    /// the dual of the channel. Carrier dimension `out·env`.
    pub fn heisenberg_dilation(&self) -> Result<MultilinearDilation> {
        let rep = StarRepresentation::standard(self.out_dim, self.env_dim);
        MultilinearDilation::from_factor_reps(vec![rep], self.isometry.clone())
    }
}

/// Heisenberg dual `Φ*` with `tr(Φ*(a) ρ) = tr(a Φ(ρ))`.
pub fn heisenberg_dual(ch: &QuantumChannel) -> Result<OperatorMultiMap> {
    let (din, dout) = (ch.in_dim, ch.out_dim);
    // Φ*(a)_{ji} = tr(a Φ(E_ij))
    OperatorMultiMap::from_fn(&[dout], din, |a| {
        ComplexMatrix::from_fn(din, din, |j, i| {
            let phi = ch.apply(&ComplexMatrix::unit(din, i, j)).expect("shape");
            a[0].matmul(&phi).expect("shape").trace()
        })
    })
}

/// The multilinear Choi matrix `Σ Φ(E¹…Eⁿ) ⊗ E¹ ⊗ … ⊗ Eⁿ` with factor order
/// (output ⊗ inputs), summed over all matrix-unit tuples. The dual basis
/// element of `E_kl` is represented by `E_kl` itself.
///
/// For `n = 1` this is `S · choi_of(Φ) · S` with `S` the swap of the input
/// and output factors; see [`choi_layout_bridge`].
pub fn multilinear_choi(phi: &OperatorMultiMap) -> Result<ComplexMatrix> {
    let dims = phi.input_dims();
    let sq: Vec<usize> = dims.iter().map(|d| d * d).collect();
    let total_in: usize = dims.iter().product();
    let m = phi.output_dim();
    let mut c = ComplexMatrix::zeros(m * total_in, m * total_in);
    for col in 0..sq.iter().product::<usize>() {
        let idx = multi_index(col, &sq);
        let units: Vec<ComplexMatrix> = idx
            .iter()
            .zip(dims)
            .map(|(&v, &d)| super::opmap::unit_from_vec_index(d, v))
            .collect();
        let value = phi.apply(&units)?;
        let mut term = value;
        for u in &units {
            term = kron(&term, u)?;
        }
        c = &c + &term;
    }
    Ok(c)
}

/// Moves a multilinear Choi matrix of a unary map into the (input ⊗ output)
/// layout used by [`QuantumChannel`].
pub fn choi_layout_bridge(multi: &ComplexMatrix, in_dim: usize, out_dim: usize) -> Result<ComplexMatrix> {
    let s = crate::linalg::factor_permutation(&[out_dim, in_dim], &[1, 0])?;
    Ok(&(&s * multi) * &s.adjoint())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McpWitness {
    pub slot: usize,
    pub states: Vec<ComplexMatrix>,
    pub min_eig: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McpReport {
    pub pass: bool,
    pub evaluations: usize,
    pub min_eig: f64,
    pub witness: Option<McpWitness>,
}

/// Deterministic state list for one slot: `I/d` and every `E_kk`.
fn extreme_states(d: usize) -> Vec<ComplexMatrix> {
    let mut v = vec![ComplexMatrix::identity(d).scale_real(1.0 / d as f64)];
    v.extend((0..d).map(|k| ComplexMatrix::unit(d, k, k)));
    v
}

/// Certifies every partial evaluation `Φ(ρ₁, …, ·, …, ρₙ)` as CP.
///
/// The fixed slots run over the full product of deterministic extreme states
/// when that product has at most 256 entries (diagonally otherwise), then over
/// `sample_count` random density-matrix tuples.
pub fn mcp_check(phi: &OperatorMultiMap, sample_count: usize, rng: &mut OpRng, tol: f64) -> Result<McpReport> {
    let n = phi.arity();
    let mut report = McpReport {
        pass: true,
        evaluations: 0,
        min_eig: f64::INFINITY,
        witness: None,
    };
    let record = |slot: usize, states: Vec<ComplexMatrix>, report: &mut McpReport| -> Result<()> {
        let pe = if n == 1 {
            phi.clone()
        } else {
            phi.partial_evaluation(slot, &states)?
        };
        let ch = QuantumChannel::from_superoperator(&pe)?;
        let cp = is_cp(&ch, tol);
        report.evaluations += 1;
        report.min_eig = report.min_eig.min(cp.min_eig);
        if !cp.cp && report.witness.is_none() {
            report.pass = false;
            report.witness = Some(McpWitness {
                slot,
                states,
                min_eig: cp.min_eig,
            });
        }
        Ok(())
    };
    if n == 1 {
        record(0, Vec::new(), &mut report)?;
        return Ok(report);
    }
    for slot in 0..n {
        let others: Vec<usize> = (0..n).filter(|&s| s != slot).collect();
        let lists: Vec<Vec<ComplexMatrix>> = others.iter().map(|&s| extreme_states(phi.input_dims()[s])).collect();
        let sizes: Vec<usize> = lists.iter().map(Vec::len).collect();
        let product: usize = sizes.iter().product();
        if product <= 256 {
            for t in 0..product {
                let idx = multi_index(t, &sizes);
                let states = idx.iter().zip(&lists).map(|(&i, l)| l[i].clone()).collect();
                record(slot, states, &mut report)?;
            }
        } else {
            let longest = *sizes.iter().max().expect("n >= 2");
            for t in 0..longest {
                let states = lists.iter().map(|l| l[t % l.len()].clone()).collect();
                record(slot, states, &mut report)?;
            }
        }
        for _ in 0..sample_count {
            let states = others.iter().map(|&s| random_density(phi.input_dims()[s], rng)).collect();
            record(slot, states, &mut report)?;
        }
    }
    Ok(report)
}

/// Identity-channel Choi matrix `Σ E_ij ⊗ E_ij`.
pub fn maximally_entangled_choi(d: usize) -> ComplexMatrix {
    let mut c = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            c[(i * d + i, j * d + j)] = C64::new(1.0, 0.0);
        }
    }
    c
}
