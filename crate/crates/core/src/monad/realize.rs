//! Realizing a CPTP map as a three-box circuit: prepare an ancilla, apply a
//! unitary extending its Stinespring isometry, trace out the environment.

use crate::channels::{channel_distance_bound, is_cp, is_tp, kraus_from_choi, OperatorMultiMap, QuantumChannel};
use crate::linalg::{basis_vector, gram_schmidt, ComplexMatrix, CVector, C64};
use crate::operad::{CircuitTerm, Interpretation, OperadSpec, OperadSymbol, OperadTerm};

use super::{MonadError, Result};

pub const PREP: &str = "prep_anc";
pub const UNITARY: &str = "dilation_unitary";
pub const TRACE: &str = "trace_env";

#[derive(Debug, Clone)]
pub struct StinespringCircuit {
    pub circuit: CircuitTerm,
    pub interpretation: Interpretation,
    pub ancilla_dim: usize,
    pub env_dim: usize,
    pub unitary: ComplexMatrix,
}

impl StinespringCircuit {
    pub fn channel(&self) -> Result<QuantumChannel> {
        let m = self.circuit.interpret(&self.interpretation)?;
        Ok(QuantumChannel::from_superoperator(&m)?)
    }

    /// Trace-norm distance between the realized and the original Choi matrix.
    pub fn choi_distance(&self, phi: &QuantumChannel) -> Result<f64> {
        Ok(channel_distance_bound(&self.channel()?, phi)?)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `trace_env(dilation_unitary(x₀, prep_anc()))`.
///
/// With Kraus rank `r`, the joint dimension `N` is the least common multiple
/// of the input and output dimensions scaled up until `N ≥ out·r`. The
/// ancilla has dimension `N/in` and the environment `N/out`. Interpreting
/// the unitary box stores an `N² × N²` action, so cost grows as `N⁴`.
pub fn stinespring_circuit(phi: &QuantumChannel) -> Result<StinespringCircuit> {
    let cp = is_cp(phi, 1e-9);
    let tp = is_tp(phi, 1e-9);
    if !cp.cp || !tp.tp {
        return Err(MonadError::NotCptp(format!(
            "min Choi eigenvalue {:e}, trace defect {:e}",
            cp.min_eig, tp.defect
        )));
    }
    let ks = kraus_from_choi(phi, 1e-13)?;
    let (din, dout, r) = (phi.in_dim(), phi.out_dim(), ks.len());
    let l = din / gcd(din, dout) * dout;
    let n = l * (dout * r).div_ceil(l);
    let (anc, env) = (n / din, n / dout);

    // W x = Σ_α K_α x ⊗ e_α, rows ordered output-major
    let mut cols: Vec<CVector> = (0..din)
        .map(|i| {
            let mut c = vec![C64::new(0.0, 0.0); n];
            for (alpha, k) in ks.operators().iter().enumerate() {
                for o in 0..dout {
                    c[o * env + alpha] = k[(o, i)];
                }
            }
            c
        })
        .collect();
    cols.extend((0..n).map(|j| basis_vector(n, j)));
    let basis = gram_schmidt(&cols, 1e-8).map_err(crate::channels::ChannelError::from)?;
    if basis.len() != n {
        return Err(MonadError::NotCptp("dilation is not an isometry".into()));
    }
    // U(e_i ⊗ |0⟩) = W e_i; the remaining columns complete the basis
    let mut u = ComplexMatrix::zeros(n, n);
    let mut extra = basis[din..].iter();
    for col in 0..n {
        let v = if col % anc == 0 { &basis[col / anc] } else { extra.next().expect("counted") };
        for (row, z) in v.iter().enumerate() {
            u[(row, col)] = *z;
        }
    }

    let spec = OperadSpec::new(vec![
        OperadSymbol::typed(PREP, vec![], anc),
        OperadSymbol::typed(UNITARY, vec![din, anc], n),
        OperadSymbol::typed(TRACE, vec![n], dout),
    ])?;
    let mut interp = Interpretation::new(spec, din);

    let mut prep = ComplexMatrix::zeros(anc * anc, 1);
    prep[(0, 0)] = C64::new(1.0, 0.0);
    interp.assign(PREP, OperatorMultiMap::new(vec![], anc, prep)?)?;

    // column for E_{i₁j₁} ⊗ E_{i₂j₂} is vec(u_p u_q†), p = i₁·anc+i₂, q = j₁·anc+j₂
    let mut act = ComplexMatrix::zeros(n * n, n * n);
    for x in 0..din * din {
        let (i1, j1) = (x % din, x / din);
        for y in 0..anc * anc {
            let (i2, j2) = (y % anc, y / anc);
            let (p, q) = (i1 * anc + i2, j1 * anc + j2);
            let c = x * anc * anc + y;
            for s in 0..n {
                let uq = u[(s, q)].conj();
                for rr in 0..n {
                    act[(s * n + rr, c)] = u[(rr, p)] * uq;
                }
            }
        }
    }
    interp.assign(UNITARY, OperatorMultiMap::new(vec![din, anc], n, act)?)?;

    // Tr_env E_{(o₁α₁),(o₂α₂)} = δ_{α₁α₂} E_{o₁o₂}
    let mut tr = ComplexMatrix::zeros(dout * dout, n * n);
    for o1 in 0..dout {
        for o2 in 0..dout {
            for a in 0..env {
                let (p, q) = (o1 * env + a, o2 * env + a);
                tr[(o2 * dout + o1, q * n + p)] = C64::new(1.0, 0.0);
            }
        }
    }
    interp.assign(TRACE, OperatorMultiMap::new(vec![n], dout, tr)?)?;

    let term = OperadTerm::apply(
        TRACE,
        vec![OperadTerm::apply(UNITARY, vec![OperadTerm::leaf(0), OperadTerm::apply(PREP, vec![])])],
    );
    let circuit = CircuitTerm::from_term(&term, &[din], dout)?;
    Ok(StinespringCircuit {
        circuit,
        interpretation: interp,
        ancilla_dim: anc,
        env_dim: env,
        unitary: u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::KrausSet;
    use crate::random::{random_cptp_kraus, rng_from_seed};

    #[test]
    fn identity_is_trivial() {
        let phi = QuantumChannel::identity(2);
        let s = stinespring_circuit(&phi).unwrap();
        assert_eq!(s.ancilla_dim, 1);
        assert_eq!(s.env_dim, 1);
        assert!(s.unitary.approx_eq(&ComplexMatrix::identity(2), 1e-12));
        assert!(s.choi_distance(&phi).unwrap() <= 1e-12);
    }

    #[test]
    fn depolarizing_needs_four_environment_levels() {
        let phi = QuantumChannel::completely_depolarizing(2, 2);
        let s = stinespring_circuit(&phi).unwrap();
        assert_eq!(s.env_dim, 4);
        assert!(s.choi_distance(&phi).unwrap() <= 1e-9);
        let uu = s.unitary.adjoint().matmul(&s.unitary).unwrap();
        assert!(uu.approx_eq(&ComplexMatrix::identity(8), 1e-10));
    }

    #[test]
    fn random_roundtrips() {
        let mut rng = rng_from_seed(77);
        for (din, dout, r) in [(3, 3, 9), (2, 3, 2), (3, 2, 2), (1, 2, 1), (2, 1, 2)] {
            let ks = KrausSet::new(random_cptp_kraus(din, dout, r, &mut rng)).unwrap();
            let phi = QuantumChannel::from_kraus(&ks).unwrap();
            let s = stinespring_circuit(&phi).unwrap();
            assert!(s.choi_distance(&phi).unwrap() <= 1e-9, "{din} {dout} {r}");
        }
    }

    #[test]
    fn rejects_non_cptp() {
        assert!(matches!(
            stinespring_circuit(&QuantumChannel::transpose_map(2)),
            Err(MonadError::NotCptp(_))
        ));
        assert!(matches!(
            stinespring_circuit(&QuantumChannel::identity(2).scale(0.5)),
            Err(MonadError::NotCptp(_))
        ));
    }
}
