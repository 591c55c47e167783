//! Heisenberg-picture dilations `Φ(a₁, …, aₙ) = V†π₁(a₁)⋯πₙ(aₙ)V`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::opmap::OperatorMultiMap;
use super::{ChannelError, Result};
use crate::linalg::{gram_schmidt, kron, multi_index, pseudo_inverse, vec_norm, ComplexMatrix, CVector, ZERO};
use crate::random::{random_pure_state, OpRng};

/// Invariant tolerance for representations and isometries.
pub const DILATION_TOL: f64 = 1e-9;

/// A *-representation of `M_d` on `C^carrier`, stored by the images of the
/// matrix units. Index `k·d + l` holds `π(E_kl)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StarRepresentation {
    alg_dim: usize,
    carrier_dim: usize,
    images: Vec<ComplexMatrix>,
}

impl StarRepresentation {
    pub fn new(alg_dim: usize, images: Vec<ComplexMatrix>) -> Result<Self> {
        if alg_dim == 0 || images.len() != alg_dim * alg_dim {
            return Err(ChannelError::InvalidRepresentation(format!(
                "{} unit images for M_{alg_dim}",
                images.len()
            )));
        }
        let carrier_dim = images[0].rows();
        if images.iter().any(|m| m.shape() != (carrier_dim, carrier_dim)) {
            return Err(ChannelError::InvalidRepresentation("unit images of mixed shape".into()));
        }
        Ok(Self {
            alg_dim,
            carrier_dim,
            images,
        })
    }

    /// `π(a) = a ⊗ I_mult` on `C^d ⊗ C^mult`.
    pub fn standard(d: usize, mult: usize) -> Self {
        let id = ComplexMatrix::identity(mult);
        let images = (0..d * d)
            .map(|u| kron(&ComplexMatrix::unit(d, u / d, u % d), &id).expect("small"))
            .collect();
        Self {
            alg_dim: d,
            carrier_dim: d * mult,
            images,
        }
    }

    pub fn alg_dim(&self) -> usize {
        self.alg_dim
    }

    pub fn carrier_dim(&self) -> usize {
        self.carrier_dim
    }

    pub fn image(&self, k: usize, l: usize) -> &ComplexMatrix {
        &self.images[k * self.alg_dim + l]
    }

    pub fn images(&self) -> &[ComplexMatrix] {
        &self.images
    }

    pub fn apply(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.alg_dim;
        if a.shape() != (d, d) {
            return Err(ChannelError::DimensionMismatch(format!(
                "{:?} into a representation of M_{d}",
                a.shape()
            )));
        }
        let mut out = ComplexMatrix::zeros(self.carrier_dim, self.carrier_dim);
        for k in 0..d {
            for l in 0..d {
                let c = a[(k, l)];
                if c != ZERO {
                    out = &out + &self.image(k, l).scale(c);
                }
            }
        }
        Ok(out)
    }

    /// Worst residual of `π(E_kl)π(E_pq) = δ_lp π(E_kq)` and `π(E_kl)† = π(E_lk)`.
    pub fn defect(&self) -> f64 {
        let d = self.alg_dim;
        let zero = ComplexMatrix::zeros(self.carrier_dim, self.carrier_dim);
        let mut worst: f64 = 0.0;
        for k in 0..d {
            for l in 0..d {
                let a = self.image(k, l);
                worst = worst.max(a.adjoint().max_abs_diff(self.image(l, k)));
                for p in 0..d {
                    for q in 0..d {
                        let want = if l == p { self.image(k, q) } else { &zero };
                        worst = worst.max((a * self.image(p, q)).max_abs_diff(want));
                    }
                }
            }
        }
        worst
    }

    /// `W π(·) W†` for `W` an isometry out of the carrier.
    pub fn conjugate(&self, w: &ComplexMatrix) -> Result<Self> {
        let wa = w.adjoint();
        let images = self
            .images
            .iter()
            .map(|m| Ok((&w.matmul(m)?) * &wa))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.alg_dim, images)
    }

    /// `Q† π(·) Q` for `Q` with orthonormal columns spanning an invariant subspace.
    pub fn compress(&self, q: &ComplexMatrix) -> Result<Self> {
        let qa = q.adjoint();
        let images = self
            .images
            .iter()
            .map(|m| Ok((&qa.matmul(m)?) * q))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.alg_dim, images)
    }

    /// `I_left ⊗ π(·) ⊗ I_right`.
    pub fn ampliate(&self, left: usize, right: usize) -> Self {
        let (l, r) = (ComplexMatrix::identity(left), ComplexMatrix::identity(right));
        let images = self
            .images
            .iter()
            .map(|m| kron(&kron(&l, m).expect("small"), &r).expect("small"))
            .collect();
        Self {
            alg_dim: self.alg_dim,
            carrier_dim: left * self.carrier_dim * right,
            images,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RepJson {
    alg_dim: usize,
    units: BTreeMap<String, ComplexMatrix>,
}

impl Serialize for StarRepresentation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.alg_dim;
        let units = (0..d * d)
            .map(|u| (format!("{},{}", u / d, u % d), self.images[u].clone()))
            .collect();
        RepJson { alg_dim: d, units }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for StarRepresentation {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let raw = RepJson::deserialize(de)?;
        let d = raw.alg_dim;
        let mut images = vec![None; d * d];
        for (key, m) in raw.units {
            let (k, l) = key
                .split_once(',')
                .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)))
                .ok_or_else(|| D::Error::custom(format!("bad unit key {key:?}")))?;
            if k >= d || l >= d {
                return Err(D::Error::custom(format!("unit key {key:?} out of range")));
            }
            images[k * d + l] = Some(m);
        }
        let images = images
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| D::Error::custom("missing matrix-unit images"))?;
        Self::new(d, images).map_err(D::Error::custom)
    }
}

/// `(K₁, …, K_r; π₁, …, πₙ; V)` with every `π_j` acting on the whole carrier
/// `K₁ ⊗ … ⊗ K_r` and the `π_j` mutually commuting.
///
/// `factor_dims` records the tensor shape of the carrier. It has one entry
/// per slot when the dilation is built from factor representations, gains an
/// entry per padding, and collapses to `[dim K_min]` after minimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DilationParts")]
pub struct MultilinearDilation {
    #[serde(rename = "factors")]
    factor_dims: Vec<usize>,
    reps: Vec<StarRepresentation>,
    isometry: ComplexMatrix,
}

#[derive(Deserialize)]
struct DilationParts {
    factors: Vec<usize>,
    reps: Vec<StarRepresentation>,
    isometry: ComplexMatrix,
}

impl TryFrom<DilationParts> for MultilinearDilation {
    type Error = ChannelError;

    fn try_from(p: DilationParts) -> Result<Self> {
        Self::new(p.factors, p.reps, p.isometry)
    }
}

impl MultilinearDilation {
    pub fn new(factor_dims: Vec<usize>, reps: Vec<StarRepresentation>, isometry: ComplexMatrix) -> Result<Self> {
        let carrier: usize = factor_dims.iter().product();
        if factor_dims.contains(&0) || isometry.rows() != carrier || isometry.cols() == 0 {
            return Err(ChannelError::DimensionMismatch(format!(
                "isometry {:?} into carrier {factor_dims:?}",
                isometry.shape()
            )));
        }
        if let Some(r) = reps.iter().find(|r| r.carrier_dim != carrier) {
            return Err(ChannelError::DimensionMismatch(format!(
                "representation on {} for carrier {carrier}",
                r.carrier_dim
            )));
        }
        Ok(Self {
            factor_dims,
            reps,
            isometry,
        })
    }

    /// `π_j` given on `K_j` alone; each is ampliated to `K₁ ⊗ … ⊗ Kₙ`.
    pub fn from_factor_reps(reps: Vec<StarRepresentation>, isometry: ComplexMatrix) -> Result<Self> {
        let dims: Vec<usize> = reps.iter().map(|r| r.carrier_dim).collect();
        let full = reps
            .iter()
            .enumerate()
            .map(|(j, r)| {
                let left: usize = dims[..j].iter().product();
                let right: usize = dims[j + 1..].iter().product();
                r.ampliate(left, right)
            })
            .collect();
        Self::new(dims, full, isometry)
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn reps(&self) -> &[StarRepresentation] {
        &self.reps
    }

    pub fn isometry(&self) -> &ComplexMatrix {
        &self.isometry
    }

    pub fn arity(&self) -> usize {
        self.reps.len()
    }

    pub fn input_dims(&self) -> Vec<usize> {
        self.reps.iter().map(|r| r.alg_dim).collect()
    }

    /// Dimension of the space `V` maps out of; the dilated map lands in its matrices.
    pub fn source_dim(&self) -> usize {
        self.isometry.cols()
    }

    pub fn carrier_dim(&self) -> usize {
        self.isometry.rows()
    }

    /// `max |V†V − I|`.
    pub fn isometry_defect(&self) -> f64 {
        (&self.isometry.adjoint() * &self.isometry).max_abs_diff(&ComplexMatrix::identity(self.source_dim()))
    }

    /// Worst of the representation defects and the commutation residuals.
    pub fn representation_defect(&self) -> f64 {
        let mut worst = self.reps.iter().map(StarRepresentation::defect).fold(0.0, f64::max);
        for (i, a) in self.reps.iter().enumerate() {
            for b in &self.reps[i + 1..] {
                for x in &a.images {
                    for y in &b.images {
                        worst = worst.max((x * y).max_abs_diff(&(y * x)));
                    }
                }
            }
        }
        worst
    }

    /// `π₁(a₁)⋯πₙ(aₙ)`.
    fn product(&self, inputs: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        if inputs.len() != self.arity() {
            return Err(ChannelError::DimensionMismatch(format!(
                "{} inputs for a dilation of arity {}",
                inputs.len(),
                self.arity()
            )));
        }
        let mut p = ComplexMatrix::identity(self.carrier_dim());
        for (r, a) in self.reps.iter().zip(inputs) {
            p = p.matmul(&r.apply(a)?)?;
        }
        Ok(p)
    }

    /// Same as [`product`](Self::product) on matrix units, by index.
    fn unit_product(&self, units: &[(usize, usize)]) -> ComplexMatrix {
        let mut p = ComplexMatrix::identity(self.carrier_dim());
        for (r, &(k, l)) in self.reps.iter().zip(units) {
            p = &p * r.image(k, l);
        }
        p
    }

    pub fn reconstruct(&self, inputs: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        let p = self.product(inputs)?;
        Ok(&(&self.isometry.adjoint() * &p) * &self.isometry)
    }

    /// The dilated map as an [`OperatorMultiMap`].
    pub fn as_operator_map(&self) -> Result<OperatorMultiMap> {
        let va = self.isometry.adjoint();
        let dims = self.input_dims();
        OperatorMultiMap::from_fn(&dims, self.source_dim(), |units| {
            let idx: Vec<(usize, usize)> = units.iter().map(unit_position).collect();
            &(&va * &self.unit_product(&idx)) * &self.isometry
        })
    }

    /// Columns `π₁(E₁)⋯πₙ(Eₙ) V e_h` over every matrix-unit tuple and source basis vector.
    fn generators(&self) -> Vec<CVector> {
        let sq: Vec<usize> = self.reps.iter().map(|r| r.alg_dim * r.alg_dim).collect();
        let tuples: usize = sq.iter().product();
        let mut out = Vec::with_capacity(tuples * self.source_dim());
        for t in 0..tuples {
            let idx: Vec<(usize, usize)> = multi_index(t, &sq)
                .iter()
                .zip(&self.reps)
                .map(|(&u, r)| (u / r.alg_dim, u % r.alg_dim))
                .collect();
            let pv = &self.unit_product(&idx) * &self.isometry;
            out.extend(pv.columns());
        }
        out
    }

    /// `(W K; WπW†; WV)` for `W` unitary on the carrier.
    pub fn conjugate(&self, w: &ComplexMatrix) -> Result<Self> {
        if w.shape() != (self.carrier_dim(), self.carrier_dim()) {
            return Err(ChannelError::DimensionMismatch("conjugating unitary size".into()));
        }
        let reps = self.reps.iter().map(|r| r.conjugate(w)).collect::<Result<Vec<_>>>()?;
        Self::new(self.factor_dims.clone(), reps, w.matmul(&self.isometry)?)
    }

    /// Appends a `p`-dimensional factor the representations ignore:
    /// `V' = V ⊗ ψ` for a random unit vector `ψ` and `π'_j = π_j ⊗ I_p`.
    pub fn pad(&self, p: usize, rng: &mut OpRng) -> Result<Self> {
        let psi = ComplexMatrix::column_vector(&random_pure_state(p, rng));
        let reps = self.reps.iter().map(|r| r.ampliate(1, p)).collect();
        let mut dims = self.factor_dims.clone();
        dims.push(p);
        Self::new(dims, reps, kron(&self.isometry, &psi)?)
    }
}

/// Position `(k, l)` of a matrix unit.
fn unit_position(e: &ComplexMatrix) -> (usize, usize) {
    let d = e.rows();
    let at = e.data().iter().position(|z| *z != ZERO).expect("matrix unit");
    (at / d, at % d)
}

pub fn dilation_reconstruct(d: &MultilinearDilation, inputs: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    d.reconstruct(inputs)
}

/// Compresses to the cyclic subspace `K_min = span{π₁(E)⋯πₙ(E) V h}`.
///
/// The generators run over every matrix-unit tuple and every source basis
/// vector. Vectors are kept when their Gram–Schmidt residual exceeds
/// `rank_tol` times the largest generator norm.
pub fn minimal_dilation(d: &MultilinearDilation, rank_tol: f64) -> Result<MultilinearDilation> {
    let gens = d.generators();
    let scale = gens.iter().map(|g| vec_norm(g)).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(ChannelError::DimensionMismatch("dilation of the zero map has no cyclic subspace".into()));
    }
    let basis = gram_schmidt(&gens, rank_tol * scale)?;
    let q = ComplexMatrix::from_columns(&basis)?;
    log::debug!("minimal dilation: carrier {} -> {}", d.carrier_dim(), basis.len());
    let reps = d.reps.iter().map(|r| r.compress(&q)).collect::<Result<Vec<_>>>()?;
    MultilinearDilation::new(vec![basis.len()], reps, q.adjoint().matmul(&d.isometry)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntertwinerReport {
    /// `‖U†U − I‖_F` on `K_min`.
    pub isometry_residual: f64,
    /// `‖UU† − I‖_F` on the other carrier; small only when both are minimal.
    pub coisometry_residual: f64,
    /// `‖U V_min − V‖_F`.
    pub v_residual: f64,
    /// `max ‖U π^min_j(E_kl) − π_j(E_kl) U‖_F`.
    pub intertwining_residual: f64,
    /// Deviation between the two dilated maps on matrix-unit tuples.
    pub map_residual: f64,
    pub unitary: bool,
}

/// The partial isometry `U: K_min → K` with `U π^min(a) V_min h = π(a) V h`.
///
/// Writing `G_min` and `G` for the generator matrices of the two dilations,
/// `U = G · G_min⁺`. Equal Gram matrices make this well defined and
/// isometric; `G_min` has full row rank when `d_min` is cyclic.
pub fn intertwiner(d_min: &MultilinearDilation, d_other: &MultilinearDilation, tol: f64) -> Result<(ComplexMatrix, IntertwinerReport)> {
    if d_min.input_dims() != d_other.input_dims() || d_min.source_dim() != d_other.source_dim() {
        return Err(ChannelError::DimensionMismatch("dilations of maps with different types".into()));
    }
    let map_residual = d_min.as_operator_map()?.max_abs_diff(&d_other.as_operator_map()?);
    if map_residual > tol {
        return Err(ChannelError::InconsistentDilations { residual: map_residual });
    }
    let g_min = ComplexMatrix::from_columns(&d_min.generators())?;
    let g_other = ComplexMatrix::from_columns(&d_other.generators())?;
    let u = g_other.matmul(&pseudo_inverse(&g_min, 1e-10))?;

    let (kmin, k) = (d_min.carrier_dim(), d_other.carrier_dim());
    let isometry_residual = (&u.adjoint() * &u).checked_sub(&ComplexMatrix::identity(kmin))?.norm_fro();
    let coisometry_residual = (&u * &u.adjoint()).checked_sub(&ComplexMatrix::identity(k))?.norm_fro();
    let v_residual = (&u * &d_min.isometry).checked_sub(&d_other.isometry)?.norm_fro();
    let mut intertwining_residual: f64 = 0.0;
    for (rm, ro) in d_min.reps.iter().zip(&d_other.reps) {
        for (pm, po) in rm.images.iter().zip(&ro.images) {
            let r = (&u * pm).checked_sub(&(po * &u))?.norm_fro();
            intertwining_residual = intertwining_residual.max(r);
        }
    }
    let unitary = kmin == k && isometry_residual <= tol.max(1e-8) && coisometry_residual <= tol.max(1e-8);
    Ok((
        u,
        IntertwinerReport {
            isometry_residual,
            coisometry_residual,
            v_residual,
            intertwining_residual,
            map_residual,
            unitary,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::channel::{kraus_from_choi, stinespring_from_kraus, KrausSet, QuantumChannel};
    use crate::linalg::C64;
    use crate::random::{ginibre, random_cptp_kraus, random_unitary, rng_from_seed};

    fn channel_dilation(din: usize, dout: usize, rank: usize, rng: &mut OpRng) -> (QuantumChannel, MultilinearDilation) {
        let ch = QuantumChannel::from_kraus(&KrausSet::new(random_cptp_kraus(din, dout, rank, rng)).unwrap()).unwrap();
        let d = stinespring_from_kraus(&kraus_from_choi(&ch, 1e-10).unwrap())
            .heisenberg_dilation()
            .unwrap();
        (ch, d)
    }

    fn bilinear_dilation(rng: &mut OpRng) -> MultilinearDilation {
        // π₁ = a ⊗ I on C²⊗C², π₂ = b ⊗ I on C³⊗C¹, V a random isometry C² → C¹²
        let v = crate::random::random_isometry(12, 2, rng);
        MultilinearDilation::from_factor_reps(
            vec![StarRepresentation::standard(2, 2), StarRepresentation::standard(3, 1)],
            v,
        )
        .unwrap()
    }

    #[test]
    fn standard_representation_is_star() {
        let r = StarRepresentation::standard(3, 2);
        assert_eq!(r.defect(), 0.0);
        let mut rng = rng_from_seed(80);
        let w = random_unitary(6, &mut rng);
        assert!(r.conjugate(&w).unwrap().defect() < 1e-12);
        let a = ginibre(3, 3, &mut rng);
        assert!(r.apply(&a).unwrap().approx_eq(&kron(&a, &ComplexMatrix::identity(2)).unwrap(), 0.0));
    }

    #[test]
    fn representation_json_roundtrip() {
        let r = StarRepresentation::standard(2, 2);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"1,0\""));
        let back: StarRepresentation = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        let bad = s.replace("\"1,0\"", "\"2,0\"");
        assert!(serde_json::from_str::<StarRepresentation>(&bad).is_err());
    }

    #[test]
    fn reconstruction_identities() {
        let mut rng = rng_from_seed(81);
        let d = bilinear_dilation(&mut rng);
        assert!(d.representation_defect() < 1e-12);
        let id = d.reconstruct(&[ComplexMatrix::identity(2), ComplexMatrix::identity(3)]).unwrap();
        assert!(id.approx_eq(&ComplexMatrix::identity(2), 1e-12));
        // matrix units reproduce the stored map
        let phi = d.as_operator_map().unwrap();
        for (k, l, p, q) in [(0, 1, 2, 0), (1, 1, 0, 0), (1, 0, 1, 2)] {
            let xs = [ComplexMatrix::unit(2, k, l), ComplexMatrix::unit(3, p, q)];
            assert!(d.reconstruct(&xs).unwrap().approx_eq(&phi.apply(&xs).unwrap(), 1e-13));
        }
        // linear in slot 0
        let (a, a2, b) = (ginibre(2, 2, &mut rng), ginibre(2, 2, &mut rng), ginibre(3, 3, &mut rng));
        let s = C64::new(0.3, -1.1);
        let lhs = d.reconstruct(&[&a + &a2.scale(s), b.clone()]).unwrap();
        let rhs = &d.reconstruct(&[a, b.clone()]).unwrap() + &d.reconstruct(&[a2, b]).unwrap().scale(s);
        assert!(lhs.approx_eq(&rhs, 1e-12));
        assert!(d.reconstruct(&[ComplexMatrix::identity(2)]).is_err());
    }

    #[test]
    fn minimal_keeps_kraus_rank_carrier() {
        let mut rng = rng_from_seed(82);
        for r in 1..=3 {
            let (_, d) = channel_dilation(2, 3, r, &mut rng);
            assert_eq!(d.carrier_dim(), 3 * r);
            let m = minimal_dilation(&d, 1e-9).unwrap();
            assert_eq!(m.carrier_dim(), 3 * r);
            assert!(m.as_operator_map().unwrap().max_abs_diff(&d.as_operator_map().unwrap()) < 1e-8);
            assert_eq!(minimal_dilation(&m, 1e-9).unwrap().carrier_dim(), m.carrier_dim());
        }
    }

    #[test]
    fn identity_channel_minimal_is_output_space() {
        let ch = QuantumChannel::identity(3);
        let d = stinespring_from_kraus(&kraus_from_choi(&ch, 1e-10).unwrap()).heisenberg_dilation().unwrap();
        let mut rng = rng_from_seed(83);
        let padded = d.pad(4, &mut rng).unwrap();
        assert_eq!(padded.carrier_dim(), 12);
        assert_eq!(minimal_dilation(&padded, 1e-9).unwrap().carrier_dim(), 3);
    }

    #[test]
    fn padding_is_removed() {
        let mut rng = rng_from_seed(84);
        let d = bilinear_dilation(&mut rng);
        let m = minimal_dilation(&d, 1e-9).unwrap();
        let padded = m.pad(3, &mut rng).unwrap();
        assert_eq!(padded.factor_dims(), &[m.carrier_dim(), 3]);
        assert!(padded.isometry_defect() < 1e-12);
        let again = minimal_dilation(&padded, 1e-9).unwrap();
        assert_eq!(again.carrier_dim(), m.carrier_dim());
        assert!(m.carrier_dim() <= d.carrier_dim());
    }

    #[test]
    fn intertwiner_self_is_identity() {
        let mut rng = rng_from_seed(85);
        let (_, d) = channel_dilation(2, 2, 2, &mut rng);
        let m = minimal_dilation(&d, 1e-9).unwrap();
        let (u, rep) = intertwiner(&m, &m, 1e-8).unwrap();
        assert!(u.approx_eq(&ComplexMatrix::identity(m.carrier_dim()), 1e-9));
        assert!(rep.unitary);
    }

    #[test]
    fn intertwiner_recovers_conjugating_unitary() {
        let mut rng = rng_from_seed(86);
        let (_, d) = channel_dilation(2, 3, 2, &mut rng);
        let m = minimal_dilation(&d, 1e-9).unwrap();
        let w = random_unitary(m.carrier_dim(), &mut rng);
        let other = m.conjugate(&w).unwrap();
        let (u, rep) = intertwiner(&m, &other, 1e-8).unwrap();
        assert!(u.approx_eq(&w, 1e-8), "{rep:?}");
        assert!(rep.unitary);
        assert!(rep.v_residual < 1e-8 && rep.intertwining_residual < 1e-8);
    }

    #[test]
    fn intertwiner_into_padded_is_partial_isometry() {
        let mut rng = rng_from_seed(87);
        let d = bilinear_dilation(&mut rng);
        let m = minimal_dilation(&d, 1e-9).unwrap();
        let padded = m.pad(2, &mut rng).unwrap();
        let (_, rep) = intertwiner(&m, &padded, 1e-8).unwrap();
        assert!(rep.isometry_residual < 1e-8);
        assert!(rep.coisometry_residual > 0.5);
        assert!(!rep.unitary);
        assert!(rep.v_residual < 1e-8 && rep.intertwining_residual < 1e-8);
    }

    #[test]
    fn intertwiner_rejects_different_maps() {
        let mut rng = rng_from_seed(88);
        let (_, a) = channel_dilation(2, 2, 1, &mut rng);
        let (_, b) = channel_dilation(2, 2, 1, &mut rng);
        assert!(matches!(
            intertwiner(&a, &b, 1e-8),
            Err(ChannelError::InconsistentDilations { .. })
        ));
    }

    #[test]
    fn dilation_json_roundtrip() {
        let mut rng = rng_from_seed(89);
        let d = bilinear_dilation(&mut rng);
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.starts_with("{\"factors\":[4,3]"));
        let back: MultilinearDilation = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }
}
