//! Algebras of the monad built from interpretations, the representation of a
//! channel as such an algebra, and the checks built on top of it.

use rand::Rng;
use serde::Serialize;

use crate::channels::{OperatorMultiMap, QuantumChannel};
use crate::linalg::{kron, ComplexMatrix, C64};
use crate::operad::circuit::vec_product_reorder;
use crate::operad::{random_term, Interpretation, OperadSpec, OperadSymbol, OperadTerm};
use crate::random::{derive_seed, ginibre, random_density, rng_from_seed, OpRng};

use super::{mu, random_element, unit, MonadArg, MonadElement, MonadError, Result};

/// `α([s; a⃗]) = Φ(I(s)(a⃗))`, extended linearly. Without `Φ` this is the
/// algebra of the interpretation itself.
#[derive(Debug, Clone)]
pub struct AlgebraMap {
    interp: Interpretation,
    post: Option<QuantumChannel>,
}

impl AlgebraMap {
    pub fn new(interp: Interpretation) -> Self {
        Self { interp, post: None }
    }

    pub fn interpretation(&self) -> &Interpretation {
        &self.interp
    }

    pub fn post(&self) -> Option<&QuantumChannel> {
        self.post.as_ref()
    }

    pub fn input_dim(&self) -> usize {
        self.interp.carrier()
    }

    pub fn output_dim(&self) -> usize {
        self.post.as_ref().map_or(self.interp.carrier(), QuantumChannel::out_dim)
    }

    /// `α([s; a⃗])` for one generator.
    pub fn eval_generator(&self, sym: &OperadTerm, args: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        let v = self.interp.evaluate(sym, args)?;
        match &self.post {
            Some(phi) => Ok(phi.apply(&v)?),
            None => Ok(v),
        }
    }

    /// `Σ c·α([s; a⃗])`. Nested arguments are rejected.
    pub fn eval(&self, x: &MonadElement) -> Result<ComplexMatrix> {
        let d = self.output_dim();
        let mut acc: Option<ComplexMatrix> = None;
        for t in x.terms() {
            let args = t
                .args()
                .iter()
                .map(|a| match a {
                    MonadArg::Base(m) => Ok(m.clone()),
                    MonadArg::Nested(_) => Err(MonadError::MalformedNesting(
                        "evaluation needs base arguments; flatten first".into(),
                    )),
                })
                .collect::<Result<Vec<_>>>()?;
            let v = self.eval_generator(t.sym(), &args)?;
            let v = if t.coeff() == C64::new(1.0, 0.0) { v } else { v.scale(t.coeff()) };
            acc = Some(match acc {
                None => v,
                Some(a) => a.checked_add(&v).map_err(crate::channels::ChannelError::from)?,
            });
        }
        Ok(acc.unwrap_or_else(|| ComplexMatrix::zeros(d, d)))
    }

    /// `T(α)`: evaluates every nested argument.
    pub fn eval_inner(&self, x: &MonadElement) -> Result<MonadElement> {
        x.map_args(|a| match a {
            MonadArg::Nested(e) => Ok(MonadArg::Base(self.eval(e)?)),
            MonadArg::Base(_) => Err(MonadError::MalformedNesting("T(α) expects nested arguments".into())),
        })
    }

    /// `(a₁, …, aₙ) ↦ α([s; a₁, …, aₙ])` as one multilinear map.
    pub fn cptp_family(&self, sym: &OperadTerm) -> Result<OperatorMultiMap> {
        let m = self.interp.interpret(sym)?;
        match &self.post {
            Some(phi) => Ok(OperatorMultiMap::compose(&phi.superoperator(), &[m])?),
            None => Ok(m),
        }
    }
}

pub fn algebra_eval(alg: &AlgebraMap, x: &MonadElement) -> Result<ComplexMatrix> {
    alg.eval(x)
}

/// `α_Φ([s; a⃗]) = Φ(I(s)(a⃗))`.
pub fn representation_of(phi: &QuantumChannel, interp: &Interpretation) -> Result<AlgebraMap> {
    if phi.in_dim() != interp.carrier() {
        return Err(MonadError::DimensionMismatch(format!(
            "channel input {} against carrier {}",
            phi.in_dim(),
            interp.carrier()
        )));
    }
    Ok(AlgebraMap {
        interp: interp.clone(),
        post: Some(phi.clone()),
    })
}

/// Generators the algebra can evaluate: the identity and every assigned
/// symbol, as `s(x₀, …)`.
fn assigned_generators(interp: &Interpretation, max_arity: usize) -> Vec<(OperadTerm, Vec<usize>)> {
    let mut out = vec![(OperadTerm::id(), vec![interp.carrier()])];
    for (name, m) in interp.maps() {
        if m.arity() <= max_arity {
            out.push((OperadTerm::generator(name, m.arity()), m.input_dims().to_vec()));
        }
    }
    out
}

fn assigned_spec(interp: &Interpretation) -> OperadSpec {
    let gens = interp
        .maps()
        .iter()
        .map(|(name, m)| OperadSymbol::new(name, m.arity()))
        .collect();
    OperadSpec::new(gens).expect("names come from a map")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgebraLawReport {
    pub pass: bool,
    pub trials: usize,
    pub unit_residual: f64,
    pub multiplication_residual: f64,
}

/// `α∘η = id` (compared exactly) and `α∘μ = α∘T(α)` on random depth-two
/// elements.
pub fn algebra_law_suite(alg: &AlgebraMap, trials: usize, seed: u64, tol: f64) -> Result<AlgebraLawReport> {
    let spec = assigned_spec(&alg.interp);
    let d = alg.input_dim();
    let mut unit_residual: f64 = 0.0;
    let mut mult: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = rng_from_seed(derive_seed(seed, trial as u64));
        let a = ginibre(d, d, &mut rng);
        let back = alg.eval(&unit(a.clone()))?;
        unit_residual = unit_residual.max(back.max_abs_diff(&a));
        let x = random_element(&spec, 2, d, &mut rng);
        let lhs = alg.eval(&mu(&x)?)?;
        let rhs = alg.eval(&alg.eval_inner(&x)?)?;
        mult = mult.max(lhs.max_abs_diff(&rhs));
    }
    Ok(AlgebraLawReport {
        pass: unit_residual == 0.0 && mult <= tol,
        trials,
        unit_residual,
        multiplication_residual: mult,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorWitness {
    pub term: OperadTerm,
    pub args: Vec<ComplexMatrix>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomomorphismReport {
    pub pass: bool,
    pub trials: usize,
    pub max_residual: f64,
    pub witness: Option<GeneratorWitness>,
}

pub type LinearMap<'a> = &'a dyn Fn(&ComplexMatrix) -> Result<ComplexMatrix>;

/// `f∘α_A = α_B∘T(f)` on random generators.
pub fn homomorphism_check(
    f: LinearMap,
    alg_a: &AlgebraMap,
    alg_b: &AlgebraMap,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<HomomorphismReport> {
    homomorphism_check_pair(f, f, alg_a, alg_b, trials, seed, tol)
}

/// `g(α_A([s; a⃗])) = α_B([s; f(a⃗)])`, for maps `f` on the input carrier and
/// `g` on the output carrier.
pub fn homomorphism_check_pair(
    f: LinearMap,
    g: LinearMap,
    alg_a: &AlgebraMap,
    alg_b: &AlgebraMap,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<HomomorphismReport> {
    let gens = assigned_generators(&alg_a.interp, usize::MAX);
    let mut report = HomomorphismReport {
        pass: true,
        trials,
        max_residual: 0.0,
        witness: None,
    };
    for trial in 0..trials {
        let mut rng = rng_from_seed(derive_seed(seed, trial as u64));
        let (sym, dims) = &gens[rng.random_range(0..gens.len())];
        let args: Vec<ComplexMatrix> = dims.iter().map(|&d| ginibre(d, d, &mut rng)).collect();
        let lhs = g(&alg_a.eval_generator(sym, &args)?)?;
        let fa = args.iter().map(f).collect::<Result<Vec<_>>>()?;
        let rhs = alg_b.eval_generator(sym, &fa)?;
        if lhs.shape() != rhs.shape() {
            return Err(MonadError::DimensionMismatch(format!(
                "{:?} against {:?}",
                lhs.shape(),
                rhs.shape()
            )));
        }
        let r = lhs.max_abs_diff(&rhs);
        if r > report.max_residual {
            report.max_residual = r;
            if r > tol {
                report.pass = false;
                report.witness = Some(GeneratorWitness {
                    term: sym.clone(),
                    args,
                    residual: r,
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    /// What was compared; agreement is relative to this sweep.
    pub sweep: String,
    pub checks: usize,
    pub max_residual: f64,
    pub witness: Option<GeneratorWitness>,
}

fn all_unit_tuples(dims: &[usize]) -> Vec<Vec<ComplexMatrix>> {
    let mut out = vec![Vec::new()];
    for &d in dims {
        let mut next = Vec::with_capacity(out.len() * d * d);
        for prefix in &out {
            for v in 0..d * d {
                let mut t = prefix.clone();
                t.push(crate::channels::opmap::unit_from_vec_index(d, v));
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Compares `α_Φ` and `α_Ψ` on the identity and every assigned generator of
/// arity at most two over all matrix-unit inputs, then on `term_trials`
/// random composite terms fed random states.
pub fn operational_equivalence(
    phi_a: &QuantumChannel,
    phi_b: &QuantumChannel,
    interp: &Interpretation,
    term_trials: usize,
    seed: u64,
    tol: f64,
) -> Result<EquivalenceReport> {
    if phi_a.in_dim() != phi_b.in_dim() || phi_a.out_dim() != phi_b.out_dim() {
        return Err(MonadError::DimensionMismatch("channels of different type".into()));
    }
    let alg_a = representation_of(phi_a, interp)?;
    let alg_b = representation_of(phi_b, interp)?;
    let mut checks = 0;
    let mut max_residual: f64 = 0.0;
    let mut witness: Option<GeneratorWitness> = None;
    let mut compare = |sym: &OperadTerm, args: Vec<ComplexMatrix>| -> Result<()> {
        let r = alg_a.eval_generator(sym, &args)?.max_abs_diff(&alg_b.eval_generator(sym, &args)?);
        checks += 1;
        max_residual = max_residual.max(r);
        if r > tol && witness.as_ref().is_none_or(|w| r > w.residual) {
            witness = Some(GeneratorWitness {
                term: sym.clone(),
                args,
                residual: r,
            });
        }
        Ok(())
    };
    let gens = assigned_generators(interp, 2);
    for (sym, dims) in &gens {
        if interp.interpret(sym)?.output_dim() != phi_a.in_dim() {
            continue;
        }
        for args in all_unit_tuples(dims) {
            compare(sym, args)?;
        }
    }
    let spec = assigned_spec(interp);
    let mut rng: OpRng = rng_from_seed(seed);
    for _ in 0..term_trials {
        let t = random_term(&spec, 2, &mut rng);
        if t.arity() > 4 {
            continue;
        }
        let Ok(m) = interp.interpret(&t) else { continue };
        if m.output_dim() != phi_a.in_dim() {
            continue;
        }
        let args: Vec<ComplexMatrix> = m.input_dims().iter().map(|&d| random_density(d, &mut rng)).collect();
        compare(&t, args)?;
    }
    Ok(EquivalenceReport {
        equivalent: witness.is_none(),
        sweep: format!(
            "identity and {} generator(s) of arity <= 2 on all matrix-unit inputs, plus {term_trials} random composite terms",
            gens.len() - 1
        ),
        checks,
        max_residual,
        witness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonoidalReport {
    pub pass: bool,
    pub trials: usize,
    pub max_residual: f64,
    /// Slot order used by the strength.
    pub strength: String,
}

/// `α_{Φ₁⊗Φ₂}∘st = α_{Φ₁}⊗α_{Φ₂}` on random product generators.
///
/// The strength sends `[s; a⃗]⊗[t; b⃗]` to `[s⊗t; a⃗, b⃗]`: all slots of the
/// first factor, then all slots of the second. `s⊗t` is interpreted as
/// `(a⃗, b⃗) ↦ I₁(s)(a⃗)⊗I₂(t)(b⃗)`.
pub fn monoidal_compat_check(
    phi1: &QuantumChannel,
    phi2: &QuantumChannel,
    i1: &Interpretation,
    i2: &Interpretation,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<MonoidalReport> {
    let a1 = representation_of(phi1, i1)?;
    let a2 = representation_of(phi2, i2)?;
    let joint = phi1.tensor(phi2)?;
    let g1 = assigned_generators(i1, 2);
    let g2 = assigned_generators(i2, 2);
    let mut max_residual: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = rng_from_seed(derive_seed(seed, trial as u64));
        let (s, ds) = &g1[rng.random_range(0..g1.len())];
        let (t, dt) = &g2[rng.random_range(0..g2.len())];
        let ms = i1.interpret(s)?;
        let mt = i2.interpret(t)?;
        let reorder = vec_product_reorder(&[ms.output_dim(), mt.output_dim()])?;
        let action = reorder
            .matmul(&kron(ms.action(), mt.action()).map_err(crate::channels::ChannelError::from)?)
            .map_err(crate::channels::ChannelError::from)?;
        let mut dims = ms.input_dims().to_vec();
        dims.extend_from_slice(mt.input_dims());
        let prod = OperatorMultiMap::new(dims, ms.output_dim() * mt.output_dim(), action)?;
        let mut spec = OperadSpec::default();
        spec.push(OperadSymbol::new("st", prod.arity()))?;
        let mut ip = Interpretation::new(spec, i1.carrier() * i2.carrier());
        ip.assign("st", prod.clone())?;
        let ap = representation_of(&joint, &ip)?;

        let a: Vec<ComplexMatrix> = ds.iter().map(|&d| random_density(d, &mut rng)).collect();
        let b: Vec<ComplexMatrix> = dt.iter().map(|&d| random_density(d, &mut rng)).collect();
        let mut ab = a.clone();
        ab.extend(b.iter().cloned());
        let lhs = ap.eval_generator(&OperadTerm::generator("st", prod.arity()), &ab)?;
        let rhs = kron(&a1.eval_generator(s, &a)?, &a2.eval_generator(t, &b)?)
            .map_err(crate::channels::ChannelError::from)?;
        max_residual = max_residual.max(lhs.max_abs_diff(&rhs));
    }
    Ok(MonoidalReport {
        pass: max_residual <= tol,
        trials,
        max_residual,
        strength: "slots of the first factor, then slots of the second".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::KrausSet;
    use crate::random::{random_cptp_kraus, random_unitary};

    fn qubit_interp(seed: u64) -> Interpretation {
        let mut rng = rng_from_seed(seed);
        let spec = OperadSpec::with_arities(&[1, 2, 1]);
        let mut i = Interpretation::new(spec, 2);
        let ch = QuantumChannel::from_kraus(&KrausSet::new(random_cptp_kraus(2, 2, 2, &mut rng)).unwrap()).unwrap();
        i.assign_channel("g0", &ch).unwrap();
        let k = KrausSet::new(random_cptp_kraus(4, 2, 3, &mut rng)).unwrap();
        let joint = QuantumChannel::from_kraus(&k).unwrap();
        let g1 = OperatorMultiMap::from_fn(&[2, 2], 2, |xs| joint.apply(&kron(&xs[0], &xs[1]).unwrap()).unwrap()).unwrap();
        i.assign("g1", g1).unwrap();
        let u = QuantumChannel::unitary(&random_unitary(2, &mut rng)).unwrap();
        i.assign_channel("g2", &u).unwrap();
        i
    }

    #[test]
    fn algebra_laws() {
        for seed in 0..3 {
            let alg = AlgebraMap::new(qubit_interp(seed));
            let r = algebra_law_suite(&alg, 30, seed, 1e-10).unwrap();
            assert!(r.pass, "{r:?}");
            assert_eq!(r.unit_residual, 0.0);
        }
    }

    #[test]
    fn depolarizing_generator_value() {
        let mut spec = OperadSpec::default();
        spec.push(OperadSymbol::new("dep", 1)).unwrap();
        let mut i = Interpretation::new(spec, 2);
        i.assign_channel("dep", &QuantumChannel::completely_depolarizing(2, 2)).unwrap();
        let alg = AlgebraMap::new(i);
        let x = MonadElement::generator(
            C64::new(1.0, 0.0),
            &OperadTerm::generator("dep", 1),
            vec![MonadArg::Base(ComplexMatrix::unit(2, 0, 0))],
        )
        .unwrap();
        let v = alg.eval(&x).unwrap();
        assert!(v.approx_eq(&ComplexMatrix::identity(2).scale_real(0.5), 1e-14));
    }

    #[test]
    fn cptp_family_cases() {
        let mut rng = rng_from_seed(3);
        let u = random_unitary(2, &mut rng);
        let mut spec = OperadSpec::default();
        spec.push(OperadSymbol::new("u", 1)).unwrap();
        let mut i = Interpretation::new(spec, 2);
        i.assign_channel("u", &QuantumChannel::unitary(&u).unwrap()).unwrap();
        let alg = AlgebraMap::new(i);
        let idm = alg.cptp_family(&OperadTerm::id()).unwrap();
        assert_eq!(idm, OperatorMultiMap::identity(2));
        let fam = alg.cptp_family(&OperadTerm::generator("u", 1)).unwrap();
        for v in 0..4 {
            let e = crate::channels::opmap::unit_from_vec_index(2, v);
            let want = u.matmul(&e).unwrap().matmul(&u.adjoint()).unwrap();
            assert!(fam.apply(&[e]).unwrap().approx_eq(&want, 1e-12));
        }
        let i2 = qubit_interp(5);
        let alg2 = AlgebraMap::new(i2.clone());
        let fam = alg2.cptp_family(&OperadTerm::generator("g1", 2)).unwrap();
        assert!(fam.max_abs_diff(i2.get("g1").unwrap()) <= 1e-12);
    }

    #[test]
    fn homomorphisms() {
        let i = qubit_interp(7);
        let alg = AlgebraMap::new(i.clone());
        let idf = |a: &ComplexMatrix| Ok(a.clone());
        assert!(homomorphism_check(&idf, &alg, &alg, 50, 1, 1e-10).unwrap().pass);

        // conjugation by Z commutes with diagonal unitaries and dephasing
        let mut spec = OperadSpec::default();
        spec.push(OperadSymbol::new("phase", 1)).unwrap();
        spec.push(OperadSymbol::new("dephase", 1)).unwrap();
        let mut j = Interpretation::new(spec, 2);
        let ph = ComplexMatrix::diag(&[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        j.assign_channel("phase", &QuantumChannel::unitary(&ph).unwrap()).unwrap();
        let deph = KrausSet::new(vec![ComplexMatrix::unit(2, 0, 0), ComplexMatrix::unit(2, 1, 1)]).unwrap();
        j.assign_channel("dephase", &QuantumChannel::from_kraus(&deph).unwrap()).unwrap();
        let algj = AlgebraMap::new(j.clone());
        let z = ComplexMatrix::diag_real(&[1.0, -1.0]);
        let zc = |a: &ComplexMatrix| Ok(z.matmul(a).unwrap().matmul(&z).unwrap());
        assert!(homomorphism_check(&zc, &algj, &algj, 50, 2, 1e-10).unwrap().pass);

        let tr = |a: &ComplexMatrix| Ok(a.transpose());
        let r = homomorphism_check(&tr, &algj, &algj, 50, 2, 1e-10).unwrap();
        assert!(!r.pass);
        assert!(r.witness.is_some());
    }

    #[test]
    fn representation_pairs() {
        let i = qubit_interp(8);
        let mut rng = rng_from_seed(9);
        let phi = QuantumChannel::from_kraus(&KrausSet::new(random_cptp_kraus(2, 2, 2, &mut rng)).unwrap()).unwrap();
        let ident = representation_of(&QuantumChannel::identity(2), &i).unwrap();
        let plain = AlgebraMap::new(i.clone());
        let x = random_element(&assigned_spec(&i), 1, 2, &mut rng);
        assert!(ident.eval(&x).unwrap().approx_eq(&plain.eval(&x).unwrap(), 1e-12));

        // Ψ = g∘Φ with f = id is intertwined by (id, g)
        let w = random_unitary(2, &mut rng);
        let gch = QuantumChannel::unitary(&w).unwrap();
        let psi = gch.after(&phi).unwrap();
        let a_phi = representation_of(&phi, &i).unwrap();
        let a_psi = representation_of(&psi, &i).unwrap();
        let idf = |a: &ComplexMatrix| Ok(a.clone());
        let g = |a: &ComplexMatrix| Ok(gch.apply(a)?);
        assert!(homomorphism_check_pair(&idf, &g, &a_phi, &a_psi, 40, 3, 1e-10).unwrap().pass);
        assert!(!homomorphism_check_pair(&idf, &idf, &a_phi, &a_psi, 40, 3, 1e-10).unwrap().pass);
    }

    #[test]
    fn operational_equivalence_cases() {
        let i = qubit_interp(10);
        let mut rng = rng_from_seed(11);
        let ks = KrausSet::new(random_cptp_kraus(2, 2, 3, &mut rng)).unwrap();
        let phi = QuantumChannel::from_kraus(&ks).unwrap();
        let mixed = QuantumChannel::from_kraus(&ks.mix(&random_unitary(3, &mut rng)).unwrap()).unwrap();
        let r = operational_equivalence(&phi, &mixed, &i, 20, 1, 1e-10).unwrap();
        assert!(r.equivalent, "{r:?}");
        assert!(operational_equivalence(&phi, &phi, &i, 20, 1, 1e-10).unwrap().equivalent);

        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let flip = QuantumChannel::unitary(&x).unwrap();
        let r = operational_equivalence(&QuantumChannel::identity(2), &flip, &i, 20, 1, 1e-10).unwrap();
        assert!(!r.equivalent);
        let w = r.witness.unwrap();
        assert!(w.residual > 0.1);
    }

    #[test]
    fn monoidal_compatibility() {
        let i = qubit_interp(12);
        let id2 = QuantumChannel::identity(2);
        let r = monoidal_compat_check(&id2, &id2, &i, &i, 20, 1, 1e-14).unwrap();
        assert!(r.pass, "{r:?}");
        let mut rng = rng_from_seed(13);
        let u = QuantumChannel::unitary(&random_unitary(2, &mut rng)).unwrap();
        let v = QuantumChannel::unitary(&random_unitary(2, &mut rng)).unwrap();
        assert!(monoidal_compat_check(&u, &v, &i, &i, 20, 2, 1e-12).unwrap().pass);
        let p = QuantumChannel::from_kraus(&KrausSet::new(random_cptp_kraus(2, 2, 2, &mut rng)).unwrap()).unwrap();
        let q = QuantumChannel::from_kraus(&KrausSet::new(random_cptp_kraus(2, 2, 3, &mut rng)).unwrap()).unwrap();
        assert!(monoidal_compat_check(&p, &q, &i, &i, 20, 3, 1e-10).unwrap().pass);
    }
}
