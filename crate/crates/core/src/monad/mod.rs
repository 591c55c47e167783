//! The free-algebra monad of an operad: formal complex combinations
//! `Σ c·[s; v₁, …, vₙ]` with unit `v ↦ [id; v]` and multiplication by grafting.
//!
//! A generator `[s; v⃗]` is stored in its coinvariant form: `[σ·s; v⃗]` and
//! `[s; σ*v⃗]` denote the same generator, and the stored representative has
//! leaves numbered in depth-first order with the arguments reordered to
//! match. Evaluating the representative gives the same value as any member of
//! its orbit.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::channels::ChannelError;
use crate::linalg::{ComplexMatrix, C64};
use crate::operad::{canonical_form, gamma, random_term, GraftFn, OperadError, OperadSpec, OperadTerm};
use crate::random::{derive_seed, ginibre, rng_from_seed, OpRng};

pub mod algebra;
pub mod realize;

pub use algebra::{
    algebra_law_suite, homomorphism_check, homomorphism_check_pair, monoidal_compat_check,
    operational_equivalence, representation_of, AlgebraLawReport, AlgebraMap, EquivalenceReport,
    HomomorphismReport, MonoidalReport,
};
pub use realize::{stinespring_circuit, StinespringCircuit};

/// Entrywise tolerance for merging base values.
pub const MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonadError {
    #[error("malformed nesting: {0}")]
    MalformedNesting(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not a CPTP map: {0}")]
    NotCptp(String),
    #[error(transparent)]
    Operad(#[from] OperadError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

pub type Result<T> = std::result::Result<T, MonadError>;

#[derive(Debug, Clone, PartialEq)]
pub enum MonadArg {
    Base(ComplexMatrix),
    Nested(MonadElement),
}

impl MonadArg {
    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        match (self, other) {
            (MonadArg::Base(a), MonadArg::Base(b)) => a.shape() == b.shape() && a.max_abs_diff(b) <= tol,
            (MonadArg::Nested(a), MonadArg::Nested(b)) => a.approx_eq(b, tol),
            _ => false,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            MonadArg::Base(_) => 0,
            MonadArg::Nested(e) => e.depth(),
        }
    }
}

/// One generator `c·[s; v⃗]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonadTerm {
    coeff: C64,
    sym: OperadTerm,
    args: Vec<MonadArg>,
}

impl MonadTerm {
    /// `args[k]` feeds the leaf of `sym` labelled `k`.
    pub fn new(coeff: C64, sym: &OperadTerm, args: Vec<MonadArg>) -> Result<Self> {
        sym.validate(None)?;
        let sym = canonical_form(sym)?;
        if sym.arity() != args.len() {
            return Err(OperadError::ArityMismatch(format!(
                "term of arity {} with {} arguments",
                sym.arity(),
                args.len()
            ))
            .into());
        }
        let labels = sym.leaves();
        let mut slots: Vec<Option<MonadArg>> = args.into_iter().map(Some).collect();
        let args = labels.iter().map(|&l| slots[l].take().expect("leaves are a permutation")).collect();
        let mut next = 0;
        let sym = number_dfs(&sym, &mut next);
        Ok(Self { coeff, sym, args })
    }

    pub fn coeff(&self) -> C64 {
        self.coeff
    }

    pub fn sym(&self) -> &OperadTerm {
        &self.sym
    }

    pub fn args(&self) -> &[MonadArg] {
        &self.args
    }

    fn same_generator(&self, other: &Self, tol: f64) -> bool {
        self.sym == other.sym
            && self.args.len() == other.args.len()
            && self.args.iter().zip(&other.args).all(|(a, b)| a.approx_eq(b, tol))
    }
}

fn number_dfs(t: &OperadTerm, next: &mut usize) -> OperadTerm {
    match t {
        OperadTerm::Leaf { .. } => {
            let l = OperadTerm::leaf(*next);
            *next += 1;
            l
        }
        OperadTerm::Apply { op, args } => OperadTerm::Apply {
            op: op.clone(),
            args: args.iter().map(|a| number_dfs(a, next)).collect(),
        },
        OperadTerm::Permuted { .. } => unreachable!("numbering a canonical term"),
    }
}

/// A finite formal combination of generators.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MonadElement {
    terms: Vec<MonadTerm>,
}

impl MonadElement {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Merges like generators and drops zero coefficients.
    pub fn from_terms(terms: Vec<MonadTerm>) -> Self {
        let mut out: Vec<MonadTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            match out.iter_mut().find(|o| o.same_generator(&t, MERGE_TOL)) {
                Some(o) => o.coeff += t.coeff,
                None => out.push(t),
            }
        }
        out.retain(|t| t.coeff != C64::new(0.0, 0.0));
        Self { terms: out }
    }

    pub fn generator(coeff: C64, sym: &OperadTerm, args: Vec<MonadArg>) -> Result<Self> {
        Ok(Self::from_terms(vec![MonadTerm::new(coeff, sym, args)?]))
    }

    pub fn terms(&self) -> &[MonadTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Nesting depth: 1 for combinations of base values. A combination of
    /// nullary generators has depth 1 as well.
    pub fn depth(&self) -> usize {
        1 + self
            .terms
            .iter()
            .flat_map(|t| t.args.iter().map(MonadArg::depth))
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::from_terms(terms)
    }

    pub fn scale(&self, c: C64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| MonadTerm {
                coeff: t.coeff * c,
                ..t.clone()
            })
            .collect();
        Self::from_terms(terms)
    }

    /// Equal as formal combinations: same generators up to order, symbols
    /// exact, base values and coefficients within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.terms.len() != other.terms.len() {
            return false;
        }
        let mut used = vec![false; other.terms.len()];
        'outer: for t in &self.terms {
            for (j, o) in other.terms.iter().enumerate() {
                if !used[j] && (t.coeff - o.coeff).norm() <= tol && t.same_generator(o, tol) {
                    used[j] = true;
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }

    /// Replaces every argument of every generator.
    pub fn map_args(&self, mut f: impl FnMut(&MonadArg) -> Result<MonadArg>) -> Result<Self> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let args = t.args.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
            terms.push(MonadTerm {
                coeff: t.coeff,
                sym: t.sym.clone(),
                args,
            });
        }
        Ok(Self::from_terms(terms))
    }
}

/// `η(v) = [id; v]`.
pub fn unit(v: ComplexMatrix) -> MonadElement {
    MonadElement {
        terms: vec![MonadTerm {
            coeff: C64::new(1.0, 0.0),
            sym: OperadTerm::id(),
            args: vec![MonadArg::Base(v)],
        }],
    }
}

/// `η` at the next level: `x ↦ [id; x]`.
pub fn unit_nested(x: MonadElement) -> MonadElement {
    MonadElement {
        terms: vec![MonadTerm {
            coeff: C64::new(1.0, 0.0),
            sym: OperadTerm::id(),
            args: vec![MonadArg::Nested(x)],
        }],
    }
}

pub fn mu(nested: &MonadElement) -> Result<MonadElement> {
    mu_with(nested, gamma)
}

/// Multiplication with a chosen grafting, so law suites can be fault tested.
pub fn mu_with(nested: &MonadElement, graft: GraftFn) -> Result<MonadElement> {
    let mut out = Vec::new();
    for t in &nested.terms {
        let inner: Vec<&MonadElement> = t
            .args
            .iter()
            .map(|a| match a {
                MonadArg::Nested(e) => Ok(e),
                MonadArg::Base(_) => Err(MonadError::MalformedNesting(
                    "multiplication needs every outer argument to be a combination".into(),
                )),
            })
            .collect::<Result<_>>()?;
        // multilinear expansion over one term from each argument
        let mut choice = vec![0usize; inner.len()];
        if inner.iter().any(|e| e.is_empty()) {
            continue;
        }
        'expand: loop {
            let picked: Vec<&MonadTerm> = choice.iter().zip(&inner).map(|(&c, e)| &e.terms[c]).collect();
            let coeff = picked.iter().fold(t.coeff, |acc, p| acc * p.coeff);
            let parts: Vec<OperadTerm> = picked.iter().map(|p| p.sym.clone()).collect();
            let sym = graft(&t.sym, &parts)?;
            let args: Vec<MonadArg> = picked.iter().flat_map(|p| p.args.iter().cloned()).collect();
            out.push(MonadTerm::new(coeff, &sym, args)?);
            let mut k = inner.len();
            loop {
                if k == 0 {
                    break 'expand;
                }
                k -= 1;
                choice[k] += 1;
                if choice[k] < inner[k].len() {
                    break;
                }
                choice[k] = 0;
            }
        }
    }
    Ok(MonadElement::from_terms(out))
}

/// `T(f)`: applies `f` to every base value, at any depth.
pub fn t_map(f: &dyn Fn(&ComplexMatrix) -> Result<ComplexMatrix>, x: &MonadElement) -> Result<MonadElement> {
    x.map_args(|a| match a {
        MonadArg::Base(v) => Ok(MonadArg::Base(f(v)?)),
        MonadArg::Nested(e) => Ok(MonadArg::Nested(t_map(f, e)?)),
    })
}

/// `T(η)`: wraps every base value of a depth-one element as `[id; v]`.
pub fn t_unit(x: &MonadElement) -> Result<MonadElement> {
    x.map_args(|a| match a {
        MonadArg::Base(v) => Ok(MonadArg::Nested(unit(v.clone()))),
        MonadArg::Nested(_) => Err(MonadError::MalformedNesting("T(η) expects base arguments".into())),
    })
}

/// `T(μ)`: multiplies inside every argument.
pub fn t_mu_with(x: &MonadElement, graft: GraftFn) -> Result<MonadElement> {
    x.map_args(|a| match a {
        MonadArg::Nested(e) => Ok(MonadArg::Nested(mu_with(e, graft)?)),
        MonadArg::Base(_) => Err(MonadError::MalformedNesting("T(μ) expects nested arguments".into())),
    })
}

/// A random element of the given depth over `spec`, base values `d × d`.
pub fn random_element(spec: &OperadSpec, depth: usize, d: usize, rng: &mut OpRng) -> MonadElement {
    use rand::Rng;
    let count = rng.random_range(1..=2);
    let mut terms = Vec::with_capacity(count);
    for _ in 0..count {
        let sym = random_term(spec, 1, rng);
        let args = (0..sym.arity())
            .map(|_| {
                if depth <= 1 {
                    MonadArg::Base(ginibre(d, d, rng))
                } else {
                    MonadArg::Nested(random_element(spec, depth - 1, d, rng))
                }
            })
            .collect();
        let coeff = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        terms.push(MonadTerm::new(coeff, &sym, args).expect("random terms are well formed"));
    }
    MonadElement::from_terms(terms)
}

#[derive(Debug, Clone, Serialize)]
pub struct MonadLawViolation {
    pub law: String,
    pub trial: usize,
    pub element: MonadElement,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonadLawReport {
    pub pass: bool,
    pub trials: usize,
    pub violations: usize,
    pub counterexample: Option<MonadLawViolation>,
}

pub fn monad_law_suite(spec: &OperadSpec, trials: usize, seed: u64) -> MonadLawReport {
    monad_law_suite_with(spec, trials, seed, gamma)
}

/// `μ∘η_T = id`, `μ∘T(η) = id` and `μ∘T(μ) = μ∘μ_T` on random elements.
pub fn monad_law_suite_with(spec: &OperadSpec, trials: usize, seed: u64, graft: GraftFn) -> MonadLawReport {
    let mut report = MonadLawReport {
        pass: true,
        trials,
        violations: 0,
        counterexample: None,
    };
    let mut fail = |law: &str, trial: usize, element: &MonadElement| {
        report.pass = false;
        report.violations += 1;
        if report.counterexample.is_none() {
            report.counterexample = Some(MonadLawViolation {
                law: law.to_string(),
                trial,
                element: element.clone(),
            });
        }
    };
    for trial in 0..trials {
        let mut rng = rng_from_seed(derive_seed(seed, trial as u64));
        let x = random_element(spec, 1, 2, &mut rng);
        let left = mu_with(&unit_nested(x.clone()), graft);
        if !matches!(&left, Ok(y) if y.approx_eq(&x, MERGE_TOL)) {
            fail("left unit", trial, &x);
        }
        let right = t_unit(&x).and_then(|y| mu_with(&y, graft));
        if !matches!(&right, Ok(y) if y.approx_eq(&x, MERGE_TOL)) {
            fail("right unit", trial, &x);
        }
        let z = random_element(spec, 3, 2, &mut rng);
        let a = t_mu_with(&z, graft).and_then(|y| mu_with(&y, graft));
        let b = mu_with(&z, graft).and_then(|y| mu_with(&y, graft));
        let ok = matches!((&a, &b), (Ok(p), Ok(q)) if p.approx_eq(q, MERGE_TOL));
        if !ok {
            fail("associativity", trial, &z);
        }
    }
    report
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SymRepr {
    Name(String),
    Term(OperadTerm),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ArgRepr {
    Nested(MonadElement),
    Base(ComplexMatrix),
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    coeff: C64,
    sym: SymRepr,
    args: Vec<ArgRepr>,
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    terms: Vec<TermRepr>,
}

fn sym_repr(t: &OperadTerm) -> SymRepr {
    if *t == OperadTerm::id() {
        return SymRepr::Name("id".into());
    }
    if let OperadTerm::Apply { op, args } = t {
        if args.iter().enumerate().all(|(i, a)| *a == OperadTerm::leaf(i)) {
            return SymRepr::Name(op.clone());
        }
    }
    SymRepr::Term(t.clone())
}

impl Serialize for MonadElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = ElementRepr {
            terms: self
                .terms
                .iter()
                .map(|t| TermRepr {
                    coeff: t.coeff,
                    sym: sym_repr(&t.sym),
                    args: t
                        .args
                        .iter()
                        .map(|a| match a {
                            MonadArg::Base(m) => ArgRepr::Base(m.clone()),
                            MonadArg::Nested(e) => ArgRepr::Nested(e.clone()),
                        })
                        .collect(),
                })
                .collect(),
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MonadElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ElementRepr::deserialize(d)?;
        let mut terms = Vec::with_capacity(repr.terms.len());
        for t in repr.terms {
            let sym = match t.sym {
                SymRepr::Name(n) if n == "id" => OperadTerm::id(),
                SymRepr::Name(n) => OperadTerm::generator(&n, t.args.len()),
                SymRepr::Term(term) => term,
            };
            let args = t
                .args
                .into_iter()
                .map(|a| match a {
                    ArgRepr::Base(m) => MonadArg::Base(m),
                    ArgRepr::Nested(e) => MonadArg::Nested(e),
                })
                .collect();
            terms.push(MonadTerm::new(t.coeff, &sym, args).map_err(serde::de::Error::custom)?);
        }
        Ok(MonadElement::from_terms(terms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec3() -> OperadSpec {
        OperadSpec::with_arities(&[2, 1, 3])
    }

    fn m(x: f64) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[x, 0.0], &[0.0, -x]])
    }

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn coinvariant_representative() {
        let swapped = OperadTerm::apply("g0", vec![OperadTerm::leaf(1), OperadTerm::leaf(0)]);
        let a = MonadElement::generator(one(), &swapped, vec![MonadArg::Base(m(1.0)), MonadArg::Base(m(2.0))]).unwrap();
        let b = MonadElement::generator(
            one(),
            &OperadTerm::generator("g0", 2),
            vec![MonadArg::Base(m(2.0)), MonadArg::Base(m(1.0))],
        )
        .unwrap();
        assert_eq!(a, b);
        let sum = a.add(&b);
        assert_eq!(sum.len(), 1);
        assert_eq!(sum.terms()[0].coeff(), C64::new(2.0, 0.0));
        assert!(a.add(&a.scale(C64::new(-1.0, 0.0))).is_empty());
    }

    #[test]
    fn mu_examples() {
        let inner = MonadElement::generator(one(), &OperadTerm::generator("g0", 2), vec![MonadArg::Base(m(1.0)), MonadArg::Base(m(2.0))]).unwrap();
        assert_eq!(mu(&unit_nested(inner.clone())).unwrap(), inner);

        let t1 = MonadElement::generator(C64::new(2.0, 0.0), &OperadTerm::generator("g1", 1), vec![MonadArg::Base(m(3.0))]).unwrap();
        let outer = MonadElement::generator(
            C64::new(0.0, 1.0),
            &OperadTerm::generator("g0", 2),
            vec![MonadArg::Nested(inner.clone()), MonadArg::Nested(t1)],
        )
        .unwrap();
        let flat = mu(&outer).unwrap();
        let want_sym = gamma(
            &OperadTerm::generator("g0", 2),
            &[OperadTerm::generator("g0", 2), OperadTerm::generator("g1", 1)],
        )
        .unwrap();
        let want = MonadElement::generator(
            C64::new(0.0, 2.0),
            &want_sym,
            vec![MonadArg::Base(m(1.0)), MonadArg::Base(m(2.0)), MonadArg::Base(m(3.0))],
        )
        .unwrap();
        assert_eq!(flat, want);
        assert!(matches!(mu(&inner), Err(MonadError::MalformedNesting(_))));
    }

    #[test]
    fn mu_expands_bilinearly() {
        let two = MonadElement::from_terms(vec![
            MonadTerm::new(one(), &OperadTerm::id(), vec![MonadArg::Base(m(1.0))]).unwrap(),
            MonadTerm::new(one(), &OperadTerm::generator("g1", 1), vec![MonadArg::Base(m(2.0))]).unwrap(),
        ]);
        let outer = MonadElement::generator(
            one(),
            &OperadTerm::generator("g0", 2),
            vec![MonadArg::Nested(two.clone()), MonadArg::Nested(two)],
        )
        .unwrap();
        assert_eq!(mu(&outer).unwrap().len(), 4);
    }

    #[test]
    fn t_map_functoriality() {
        let mut rng = rng_from_seed(9);
        let x = random_element(&spec3(), 2, 2, &mut rng);
        let idm = |a: &ComplexMatrix| Ok(a.clone());
        assert_eq!(t_map(&idm, &x).unwrap(), x);
        let f = |a: &ComplexMatrix| Ok(a.scale(C64::new(0.0, 2.0)));
        let g = |a: &ComplexMatrix| Ok(a.transpose());
        let fg = |a: &ComplexMatrix| f(&g(a)?);
        let lhs = t_map(&f, &t_map(&g, &x).unwrap()).unwrap();
        assert!(lhs.approx_eq(&t_map(&fg, &x).unwrap(), 1e-12));
        let v = m(1.5);
        assert_eq!(t_map(&f, &unit(v.clone())).unwrap(), unit(f(&v).unwrap()));
    }

    #[test]
    fn json_roundtrip() {
        let mut rng = rng_from_seed(4);
        let x = random_element(&spec3(), 2, 2, &mut rng);
        let s = serde_json::to_string(&x).unwrap();
        let back: MonadElement = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);
        let text = r#"{"terms":[{"coeff":[1,0],"sym":"id","args":[{"rows":1,"cols":1,"data":[[2,0]]}]}]}"#;
        let e: MonadElement = serde_json::from_str(text).unwrap();
        assert_eq!(e, unit(ComplexMatrix::from_real_rows(&[&[2.0]])));
    }

    #[test]
    fn law_suite_passes() {
        let r = monad_law_suite(&spec3(), 100, 11);
        assert!(r.pass, "{:?}", r.counterexample.map(|c| c.law));
        assert!(monad_law_suite(&OperadSpec::default(), 20, 1).pass);
    }

    fn reversed_leaves_graft(f: &OperadTerm, parts: &[OperadTerm]) -> crate::operad::Result<OperadTerm> {
        let t = gamma(f, parts)?;
        let n = t.arity();
        let rev: Vec<usize> = (0..n).rev().collect();
        crate::operad::sigma_act(&rev, &t)
    }

    #[test]
    fn law_suite_catches_corrupted_grafting() {
        let r = monad_law_suite_with(&spec3(), 100, 11, reversed_leaves_graft);
        assert!(!r.pass);
        assert!(r.counterexample.is_some());
    }
}
