//! Finite Kraus/tensor expansion of a dilated map and its explicit adjoint.
//!
//! For a dilation with `n` slots, `Φ(x₁, …, xₙ) = V†π₁(x₁)⋯π_{n−1}(x_{n−1})·πₙ(xₙ)V`.
//! The last factor `πₙ(xₙ)V` lies in the finite-dimensional space
//! `W = span{πₙ(E_kl)V}` of carrier-by-source matrices. Expanding it in an
//! orthonormal basis `{E_α}` of `W` (Hilbert–Schmidt inner product) gives
//!
//! `Φ = Σ_α T_α(x₁, …, x_{n−1}) · ℓ_α(xₙ)` with
//! `T_α(x…) = V†π₁(x₁)⋯π_{n−1}(x_{n−1})E_α` and `ℓ_α(xₙ) = tr(E_α† πₙ(xₙ) V)`.
//!
//! So the last-slot embedding is `xₙ ↦ vec(πₙ(xₙ)V)` and `ℓ_α` is the
//! coordinate functional of `E_α` on it.

use serde::Serialize;

use super::dilation::MultilinearDilation;
use super::opmap::OperatorMultiMap;
use super::{ChannelError, Result};
use crate::linalg::{gram_schmidt, multi_index, svd, vec_norm, ComplexMatrix, CVector, ZERO};
use crate::multilinear::{Field, Functional, MultilinearVectorMap};

/// Terms `T_α` (arity `n − 1`) paired with functionals `ℓ_α` on `vec(M_{dₙ})`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausTensorDecomposition {
    terms: Vec<OperatorMultiMap>,
    functionals: Vec<Functional>,
    last_dim: usize,
}

impl KrausTensorDecomposition {
    pub fn new(terms: Vec<OperatorMultiMap>, functionals: Vec<Functional>, last_dim: usize) -> Result<Self> {
        if terms.is_empty() || terms.len() != functionals.len() {
            return Err(ChannelError::DimensionMismatch(format!(
                "{} terms against {} functionals",
                terms.len(),
                functionals.len()
            )));
        }
        let (dims, out) = (terms[0].input_dims().to_vec(), terms[0].output_dim());
        if terms.iter().any(|t| t.input_dims() != dims.as_slice() || t.output_dim() != out)
            || functionals.iter().any(|f| f.dim() != last_dim * last_dim)
        {
            return Err(ChannelError::DimensionMismatch("inconsistent decomposition terms".into()));
        }
        Ok(Self {
            terms,
            functionals,
            last_dim,
        })
    }

    pub fn terms(&self) -> &[OperatorMultiMap] {
        &self.terms
    }

    pub fn functionals(&self) -> &[Functional] {
        &self.functionals
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn input_dims(&self) -> Vec<usize> {
        let mut d = self.terms[0].input_dims().to_vec();
        d.push(self.last_dim);
        d
    }

    pub fn output_dim(&self) -> usize {
        self.terms[0].output_dim()
    }

    /// `Σ_α T_α(x₁, …, x_{n−1}) ℓ_α(xₙ)`.
    pub fn apply(&self, inputs: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        let n = inputs.len();
        if n == 0 || n != self.terms[0].arity() + 1 {
            return Err(ChannelError::DimensionMismatch("decomposition arity".into()));
        }
        let xn = inputs[n - 1].vec_col();
        let m = self.output_dim();
        let mut acc = ComplexMatrix::zeros(m, m);
        for (t, l) in self.terms.iter().zip(&self.functionals) {
            let c = l.eval(&xn);
            if c != ZERO {
                acc = &acc + &t.apply(&inputs[..n - 1])?.scale(c);
            }
        }
        Ok(acc)
    }

    /// Action matrix of `Σ_α T_α ⊗ ℓ_α`, in the layout of [`OperatorMultiMap`].
    pub fn action(&self) -> ComplexMatrix {
        let m2 = self.output_dim() * self.output_dim();
        let p = self.terms[0].action().cols();
        let dn = self.last_dim * self.last_dim;
        let mut a = ComplexMatrix::zeros(m2, p * dn);
        for (t, l) in self.terms.iter().zip(&self.functionals) {
            // ℓ(x) = Σ_j conj(r_j) x_j
            let coeff: CVector = l.riesz().iter().map(|z| z.conj()).collect();
            let ta = t.action();
            for k in 0..m2 {
                for i in 0..p {
                    let tv = ta[(k, i)];
                    if tv == ZERO {
                        continue;
                    }
                    for (j, c) in coeff.iter().enumerate() {
                        a[(k, i * dn + j)] += tv * c;
                    }
                }
            }
        }
        a
    }

    pub fn to_operator_map(&self) -> Result<OperatorMultiMap> {
        OperatorMultiMap::new(self.input_dims(), self.output_dim(), self.action())
    }

    /// Shortest expansion of the same map.
    ///
    /// Reads the action as a matrix from `vec(M_{dₙ})` into the space of
    /// `T`-actions and keeps its singular directions above `rel_tol` times the
    /// largest. The term count is then the rank of that matrix.
    pub fn compress(&self, rel_tol: f64) -> Result<Self> {
        let m2 = self.output_dim() * self.output_dim();
        let p = self.terms[0].action().cols();
        let dn = self.last_dim * self.last_dim;
        let a = self.action();
        // M[(k, i), j] = A[k, i·dn + j]
        let reshaped = ComplexMatrix::from_fn(m2 * p, dn, |r, j| a[(r / p, (r % p) * dn + j)]);
        let s = svd(&reshaped);
        let top = s.singular_values.first().copied().unwrap_or(0.0);
        let keep = s.singular_values.iter().filter(|&&x| x > rel_tol * top && x > 0.0).count().max(1);
        let dims = self.terms[0].input_dims().to_vec();
        let mut terms = Vec::with_capacity(keep);
        let mut functionals = Vec::with_capacity(keep);
        for (a_idx, &sigma) in s.singular_values.iter().take(keep).enumerate() {
            let t = ComplexMatrix::from_fn(m2, p, |k, i| s.u[(k * p + i, a_idx)] * sigma);
            terms.push(OperatorMultiMap::new(dims.clone(), self.output_dim(), t)?);
            functionals.push(Functional::from_coefficients(s.v_t.row(a_idx)));
        }
        Self::new(terms, functionals, self.last_dim)
    }
}

/// Expands a dilated map in an orthonormal basis of `span{πₙ(E_kl)V}`.
///
/// Works for any dilation; minimality only keeps the basis small. For
/// `n = 1` every `T_α` has arity zero and holds the constant `V†E_α`.
pub fn kraus_tensor_decompose(d: &MultilinearDilation, rank_tol: f64) -> Result<KrausTensorDecomposition> {
    let n = d.arity();
    if n == 0 {
        return Err(ChannelError::DimensionMismatch("decomposition needs at least one slot".into()));
    }
    let last = &d.reps()[n - 1];
    let dn = last.alg_dim();
    let v = d.isometry();
    let (k, h) = (d.carrier_dim(), d.source_dim());

    // vec of πₙ(E)V for E running over matrix units in column-stacked order
    let spans: Vec<ComplexMatrix> = (0..dn * dn)
        .map(|u| last.image(u % dn, u / dn) * v)
        .collect();
    let vecs: Vec<CVector> = spans.iter().map(ComplexMatrix::vec_col).collect();
    let scale = vecs.iter().map(|x| vec_norm(x)).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(ChannelError::DimensionMismatch("last slot acts as zero".into()));
    }
    let basis = gram_schmidt(&vecs, rank_tol * scale)?;

    let va = v.adjoint();
    let dims = d.input_dims()[..n - 1].to_vec();
    let mut terms = Vec::with_capacity(basis.len());
    let mut functionals = Vec::with_capacity(basis.len());
    for b in &basis {
        let e_alpha = ComplexMatrix::unvec(b, k, h)?;
        let rest = d.reps()[..n - 1].to_vec();
        let t = OperatorMultiMap::from_fn(&dims, h, |xs| {
            let mut p = va.clone();
            for (r, x) in rest.iter().zip(xs) {
                p = &p * &r.apply(x).expect("unit input");
            }
            &p * &e_alpha
        })?;
        terms.push(t);
        // ℓ_α(E) = ⟨vec(πₙ(E)V), b⟩ on each unit
        let coeff: CVector = vecs.iter().map(|w| crate::linalg::inner(w, b)).collect();
        functionals.push(Functional::from_coefficients(&coeff));
    }
    KrausTensorDecomposition::new(terms, functionals, dn)
}

/// The adjoint of the decomposed map as a vector multimap on vectorized spaces.
///
/// With `M[k, (i, j)] = Σ_α T_α[k, i] c_α[j]`, where `c_α` are the
/// coefficients of `ℓ_α`, the adjoint matrix is
/// `A[j, (k, i)] = Σ_α conj(T_α[k, i]) conj(c_α[j])`. Its inputs are
/// `(output, x₁, …, x_{n−1})` and its output is the last slot.
pub fn n_adjoint(decomp: &KrausTensorDecomposition) -> Result<MultilinearVectorMap> {
    let m2 = decomp.output_dim() * decomp.output_dim();
    let t_dims: Vec<usize> = decomp.terms[0].input_dims().iter().map(|d| d * d).collect();
    let p: usize = t_dims.iter().product();
    let dn = decomp.last_dim * decomp.last_dim;
    let mut a = ComplexMatrix::zeros(dn, m2 * p);
    for (t, l) in decomp.terms.iter().zip(&decomp.functionals) {
        let ta = t.action();
        // conj(c_j) is the Riesz entry itself
        let r = l.riesz();
        for j in 0..dn {
            if r[j] == ZERO {
                continue;
            }
            for k in 0..m2 {
                for i in 0..p {
                    a[(j, k * p + i)] += ta[(k, i)].conj() * r[j];
                }
            }
        }
    }
    let mut in_dims = vec![m2];
    in_dims.extend(t_dims);
    Ok(MultilinearVectorMap::new(
        crate::linalg::DimProfile::new(in_dims)?,
        dn,
        Field::Complex,
        a,
    )?)
}

/// Worst violation of `g(Φ(R f₁, …, R f_{n−1}, xₙ)) = [Φ†(g, f…)](xₙ)` over
/// standard-basis `g`, `f_i` and `xₙ`.
pub fn pairing_residual(phi: &OperatorMultiMap, adj: &MultilinearVectorMap) -> Result<f64> {
    use crate::linalg::basis_vector;
    use crate::multilinear::eval_adjoint;
    let vm = phi.as_vector_map()?;
    let dims = vm.input_dims().to_vec();
    let n = dims.len();
    let m = vm.output_dim();
    let total: usize = dims.iter().product();
    let mut worst: f64 = 0.0;
    for k in 0..m {
        let g = Functional::from_riesz(basis_vector(m, k));
        for col in 0..total {
            let idx = multi_index(col, &dims);
            let fs: Vec<Functional> = (0..n - 1)
                .map(|s| Functional::from_riesz(basis_vector(dims[s], idx[s])))
                .collect();
            let x = basis_vector(dims[n - 1], idx[n - 1]);
            let mut args: Vec<CVector> = fs.iter().map(|f| f.riesz().to_vec()).collect();
            args.push(x.clone());
            let lhs = g.eval(&vm.apply(&args)?);
            let rhs = eval_adjoint(adj, &g, &fs)?.eval(&x);
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZigzagReport {
    /// `max |ε∘η − id| = max |V†V − I|`.
    pub first: f64,
    /// `max |ε∘η∘ε − ε| = max |V†VV† − V†|`.
    pub second: f64,
    pub residual: f64,
    pub flagged: bool,
}

/// Unit `η(x) = Vx` and counit `ε(k) = V†k`; both zig-zag composites must be identities.
pub fn zigzag_check(d: &MultilinearDilation, tol: f64) -> ZigzagReport {
    let v = d.isometry();
    let va = v.adjoint();
    let vv = &va * v;
    let first = vv.max_abs_diff(&ComplexMatrix::identity(d.source_dim()));
    let second = (&vv * &va).max_abs_diff(&va);
    ZigzagReport {
        first,
        second,
        residual: first,
        flagged: first > tol || second > tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::channel::{kraus_from_choi, stinespring_from_kraus, KrausSet, QuantumChannel};
    use crate::channels::dilation::{minimal_dilation, StarRepresentation};
    use crate::multilinear::{adjoint, realign_double_adjoint};
    use crate::random::{ginibre, random_cptp_kraus, random_isometry, rng_from_seed, OpRng};

    /// `Φ(a, b) = K a K† · tr(L b L†)` through a product dilation.
    fn separable(d1: usize, d2: usize, out: usize, r1: usize, r2: usize, rng: &mut OpRng) -> MultilinearDilation {
        let k1 = KrausSet::new(random_cptp_kraus(out, d1, r1, rng)).unwrap();
        let k2 = KrausSet::new(random_cptp_kraus(1, d2, r2, rng)).unwrap();
        // Heisenberg duals: V₁: C^out → C^{d1}⊗C^{r1}, V₂: C → C^{d2}⊗C^{r2}
        let v1 = stinespring_from_kraus(&k1).isometry;
        let v2 = stinespring_from_kraus(&k2).isometry;
        let v = crate::linalg::kron(&v1, &v2).unwrap();
        let reps = vec![StarRepresentation::standard(d1, r1), StarRepresentation::standard(d2, r2)];
        MultilinearDilation::from_factor_reps(reps, v).unwrap()
    }

    #[test]
    fn separable_reconstruction_on_units() {
        let mut rng = rng_from_seed(90);
        for _ in 0..5 {
            let d = minimal_dilation(&separable(2, 2, 2, 2, 2, &mut rng), 1e-9).unwrap();
            let phi = d.as_operator_map().unwrap();
            let dec = kraus_tensor_decompose(&d, 1e-9).unwrap();
            assert!(dec.to_operator_map().unwrap().max_abs_diff(&phi) < 1e-10);
            let x = [ginibre(2, 2, &mut rng), ginibre(2, 2, &mut rng)];
            assert!(dec.apply(&x).unwrap().approx_eq(&phi.apply(&x).unwrap(), 1e-10));
        }
    }

    #[test]
    fn kraus_rank_one_product_compresses_to_one_term() {
        let mut rng = rng_from_seed(91);
        // Φ(a, b) = K† a K · tr(b) with a single operator K
        let k = ginibre(2, 3, &mut rng);
        let phi = OperatorMultiMap::from_fn(&[2, 3], 3, |x| (&(&k.adjoint() * &x[0]) * &k).scale(x[1].trace())).unwrap();
        // V h = Σ_p K h ⊗ e_p ⊗ e_p, π₁(a) = a ⊗ I₉, π₂(b) = I₂ ⊗ b ⊗ I₃
        let mut w = ComplexMatrix::zeros(2 * 9, 3);
        for h in 0..3 {
            for o in 0..2 {
                for p in 0..3 {
                    w[((o * 3 + p) * 3 + p, h)] = k[(o, h)];
                }
            }
        }
        let d = MultilinearDilation::from_factor_reps(
            vec![StarRepresentation::standard(2, 1), StarRepresentation::standard(3, 3)],
            w,
        )
        .unwrap();
        assert!(d.as_operator_map().unwrap().max_abs_diff(&phi) < 1e-12);
        let dec = kraus_tensor_decompose(&minimal_dilation(&d, 1e-9).unwrap(), 1e-9).unwrap();
        assert!(dec.len() > 1);
        let c = dec.compress(1e-9).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c.to_operator_map().unwrap().max_abs_diff(&phi) < 1e-10);
    }

    #[test]
    fn alpha_count_is_dimension_of_last_slot_span() {
        let mut rng = rng_from_seed(92);
        let d = minimal_dilation(&separable(2, 3, 2, 1, 2, &mut rng), 1e-9).unwrap();
        let dec = kraus_tensor_decompose(&d, 1e-9).unwrap();
        let last = &d.reps()[1];
        let cols: Vec<CVector> = last.images().iter().map(|e| (e * d.isometry()).vec_col()).collect();
        let rank = crate::linalg::numerical_rank(&ComplexMatrix::from_columns(&cols).unwrap(), 1e-9);
        assert_eq!(dec.len(), rank);
        assert!(dec.len() <= d.carrier_dim() * d.source_dim());
    }

    #[test]
    fn n_adjoint_matches_generic_adjoint_and_pairs() {
        let mut rng = rng_from_seed(93);
        for _ in 0..5 {
            let d = minimal_dilation(&separable(2, 2, 2, 2, 1, &mut rng), 1e-9).unwrap();
            let phi = d.as_operator_map().unwrap();
            let dec = kraus_tensor_decompose(&d, 1e-9).unwrap();
            let adj = n_adjoint(&dec).unwrap();
            let generic = adjoint(&phi.as_vector_map().unwrap());
            assert!(adj.matrix().max_abs_diff(generic.matrix()) < 1e-10);
            assert!(pairing_residual(&phi, &adj).unwrap() < 1e-10);
            // adjoint of the adjoint lands back on Φ
            let dd = adjoint(&adj);
            let back = realign_double_adjoint(&dd, phi.as_vector_map().unwrap().input_dims(), 4).unwrap();
            assert!(back.max_abs_diff(phi.action()) < 1e-10);
        }
    }

    #[test]
    fn n_adjoint_of_identity_channel_is_identity() {
        let ch = QuantumChannel::identity(2);
        let d = stinespring_from_kraus(&kraus_from_choi(&ch, 1e-10).unwrap()).heisenberg_dilation().unwrap();
        let dec = kraus_tensor_decompose(&d, 1e-9).unwrap();
        assert_eq!(dec.terms()[0].arity(), 0);
        let adj = n_adjoint(&dec).unwrap();
        assert!(adj.matrix().approx_eq(&ComplexMatrix::identity(4), 1e-12));
    }

    #[test]
    fn zigzag_on_isometries_and_scaled() {
        let ch = QuantumChannel::identity(2);
        let d = stinespring_from_kraus(&kraus_from_choi(&ch, 1e-10).unwrap()).heisenberg_dilation().unwrap();
        let z = zigzag_check(&d, 1e-9);
        assert!(z.residual <= 1e-15);
        assert!(!z.flagged);
        let mut rng = rng_from_seed(94);
        for _ in 0..5 {
            let ks = KrausSet::new(random_cptp_kraus(2, 2, 3, &mut rng)).unwrap();
            let d = stinespring_from_kraus(&ks).heisenberg_dilation().unwrap();
            assert!(zigzag_check(&minimal_dilation(&d, 1e-9).unwrap(), 1e-9).residual <= 1e-9);
        }
        let s = 1.3;
        let v = random_isometry(4, 2, &mut rng).scale_real(s);
        let scaled = MultilinearDilation::from_factor_reps(vec![StarRepresentation::standard(2, 2)], v).unwrap();
        let z = zigzag_check(&scaled, 1e-9);
        assert!((z.residual - (s * s - 1.0)).abs() < 1e-12);
        assert!(z.flagged);
    }
}
