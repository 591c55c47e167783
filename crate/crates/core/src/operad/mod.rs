//! Free symmetric operads on declared generators, the circuit category they
//! generate, and interpretation of both into multilinear operator maps.
//!
//! A term is a tree whose leaves carry input slots. Every slot `0..n` appears
//! on exactly one leaf. The symmetric action reroutes leaves:
//! `⟨σ·t⟩(X₀, …, X_{n−1}) = ⟨t⟩(X_{σ⁻¹(0)}, …, X_{σ⁻¹(n−1)})`, so `σ·t` is `t`
//! with leaf `k` relabelled `σ⁻¹(k)`. Because the operad is free, a tree with
//! its leaf labels is already a complete invariant and no sorting is needed.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::ChannelError;
use crate::linalg::is_permutation;
use crate::random::{derive_seed, random_permutation, rng_from_seed, OpRng};

pub mod circuit;
pub mod interpret;

pub use circuit::CircuitTerm;
pub use interpret::{AssignmentJson, Interpretation, InterpretationJson};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperadError {
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("symbol `{0}` has no interpretation")]
    UnassignedSymbol(String),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("`{0}` is a formal non-linear generator and has no linear interpretation")]
    NonLinearGenerator(String),
    #[error("invalid permutation {0:?}")]
    BadPermutation(Vec<usize>),
    #[error("leaf slots {0:?} are not a permutation of 0..n")]
    BadLeaves(Vec<usize>),
    #[error("wire mismatch: {0}")]
    WireMismatch(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

pub type Result<T> = std::result::Result<T, OperadError>;

/// Input operator dimensions and output operator dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub inputs: Vec<usize>,
    pub output: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperadSymbol {
    pub name: String,
    pub arity: usize,
    #[serde(default, rename = "sig", skip_serializing_if = "Option::is_none")]
    pub signature: Option<Signature>,
    /// Syntax-only generators, such as a formal cloning operation.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub formal: bool,
}

impl OperadSymbol {
    pub fn new(name: &str, arity: usize) -> Self {
        Self {
            name: name.to_string(),
            arity,
            signature: None,
            formal: false,
        }
    }

    pub fn typed(name: &str, inputs: Vec<usize>, output: usize) -> Self {
        Self {
            name: name.to_string(),
            arity: inputs.len(),
            signature: Some(Signature { inputs, output }),
            formal: false,
        }
    }
}

/// Generators of a free symmetric operad. The identity is the bare leaf and
/// is never declared.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "SpecParts")]
pub struct OperadSpec {
    generators: Vec<OperadSymbol>,
}

#[derive(Deserialize)]
struct SpecParts {
    generators: Vec<OperadSymbol>,
}

impl TryFrom<SpecParts> for OperadSpec {
    type Error = OperadError;

    fn try_from(p: SpecParts) -> Result<Self> {
        Self::new(p.generators)
    }
}

impl OperadSpec {
    pub fn new(generators: Vec<OperadSymbol>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for g in &generators {
            if g.name == "id" || !seen.insert(g.name.clone()) {
                return Err(OperadError::DuplicateSymbol(g.name.clone()));
            }
            if let Some(sig) = &g.signature {
                if sig.inputs.len() != g.arity {
                    return Err(OperadError::SignatureMismatch(format!(
                        "`{}` has arity {} but {} typed inputs",
                        g.name,
                        g.arity,
                        sig.inputs.len()
                    )));
                }
            }
        }
        Ok(Self { generators })
    }

    /// Generators named `g0, g1, …` with the given arities.
    pub fn with_arities(arities: &[usize]) -> Self {
        let generators = arities
            .iter()
            .enumerate()
            .map(|(i, &a)| OperadSymbol::new(&format!("g{i}"), a))
            .collect();
        Self { generators }
    }

    pub fn generators(&self) -> &[OperadSymbol] {
        &self.generators
    }

    pub fn get(&self, name: &str) -> Option<&OperadSymbol> {
        self.generators.iter().find(|g| g.name == name)
    }

    pub fn push(&mut self, sym: OperadSymbol) -> Result<()> {
        if sym.name == "id" || self.get(&sym.name).is_some() {
            return Err(OperadError::DuplicateSymbol(sym.name));
        }
        self.generators.push(sym);
        Ok(())
    }
}

/// `{"slot":k}`, `{"op":name,"args":[…]}` or `{"perm":[…],"of":…}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperadTerm {
    Leaf {
        slot: usize,
    },
    Apply {
        op: String,
        #[serde(default)]
        args: Vec<OperadTerm>,
    },
    Permuted {
        perm: Vec<usize>,
        of: Box<OperadTerm>,
    },
}

impl fmt::Display for OperadTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperadTerm::Leaf { slot } => write!(f, "x{slot}"),
            OperadTerm::Apply { op, args } => {
                write!(f, "{op}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            OperadTerm::Permuted { perm, of } => write!(f, "{perm:?}·{of}"),
        }
    }
}

fn inverse(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &x) in p.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

impl OperadTerm {
    pub fn leaf(slot: usize) -> Self {
        OperadTerm::Leaf { slot }
    }

    /// The operadic unit.
    pub fn id() -> Self {
        Self::leaf(0)
    }

    pub fn apply(op: &str, args: Vec<OperadTerm>) -> Self {
        OperadTerm::Apply {
            op: op.to_string(),
            args,
        }
    }

    /// `op(x₀, …, x_{n−1})`.
    pub fn generator(op: &str, arity: usize) -> Self {
        Self::apply(op, (0..arity).map(Self::leaf).collect())
    }

    /// Leaf slots in depth-first, left-to-right order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            OperadTerm::Leaf { slot } => out.push(*slot),
            OperadTerm::Apply { args, .. } => args.iter().for_each(|a| a.collect_leaves(out)),
            OperadTerm::Permuted { of, .. } => match canonical_form(self) {
                Ok(c) => c.collect_leaves(out),
                Err(_) => of.collect_leaves(out),
            },
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            OperadTerm::Leaf { .. } => 1,
            OperadTerm::Apply { args, .. } => args.iter().map(Self::arity).sum(),
            OperadTerm::Permuted { of, .. } => of.arity(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            OperadTerm::Leaf { .. } => 0,
            OperadTerm::Apply { args, .. } => 1 + args.iter().map(Self::depth).max().unwrap_or(0),
            OperadTerm::Permuted { of, .. } => of.depth(),
        }
    }

    /// Every operation name occurring in the term.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        match self {
            OperadTerm::Leaf { .. } => {}
            OperadTerm::Apply { op, args } => {
                out.insert(op.clone());
                args.iter().for_each(|a| a.collect_symbols(out));
            }
            OperadTerm::Permuted { of, .. } => of.collect_symbols(out),
        }
    }

    /// Checks leaf slots and, when `spec` is given, symbol arities.
    pub fn validate(&self, spec: Option<&OperadSpec>) -> Result<()> {
        self.check_nodes(spec)?;
        let leaves = canonical_form(self)?.leaves();
        if !is_permutation(&leaves) {
            return Err(OperadError::BadLeaves(leaves));
        }
        Ok(())
    }

    fn check_nodes(&self, spec: Option<&OperadSpec>) -> Result<()> {
        match self {
            OperadTerm::Leaf { .. } => Ok(()),
            OperadTerm::Apply { op, args } => {
                if let Some(spec) = spec {
                    let sym = spec.get(op).ok_or_else(|| OperadError::UnknownSymbol(op.clone()))?;
                    if sym.arity != args.len() {
                        return Err(OperadError::ArityMismatch(format!(
                            "`{op}` has arity {} but {} children",
                            sym.arity,
                            args.len()
                        )));
                    }
                }
                args.iter().try_for_each(|a| a.check_nodes(spec))
            }
            OperadTerm::Permuted { perm, of } => {
                if perm.len() != of.arity() || !is_permutation(perm) {
                    return Err(OperadError::BadPermutation(perm.clone()));
                }
                of.check_nodes(spec)
            }
        }
    }

    fn relabel(&self, f: &impl Fn(usize) -> usize) -> Self {
        match self {
            OperadTerm::Leaf { slot } => Self::leaf(f(*slot)),
            OperadTerm::Apply { op, args } => OperadTerm::Apply {
                op: op.clone(),
                args: args.iter().map(|a| a.relabel(f)).collect(),
            },
            OperadTerm::Permuted { perm, of } => OperadTerm::Permuted {
                perm: perm.clone(),
                of: Box::new(of.relabel(f)),
            },
        }
    }

    fn substitute(&self, parts: &[OperadTerm]) -> Self {
        match self {
            OperadTerm::Leaf { slot } => parts[*slot].clone(),
            OperadTerm::Apply { op, args } => OperadTerm::Apply {
                op: op.clone(),
                args: args.iter().map(|a| a.substitute(parts)).collect(),
            },
            OperadTerm::Permuted { .. } => unreachable!("substitution runs on canonical terms"),
        }
    }

    fn contains_permuted(&self) -> bool {
        match self {
            OperadTerm::Leaf { .. } => false,
            OperadTerm::Apply { args, .. } => args.iter().any(Self::contains_permuted),
            OperadTerm::Permuted { .. } => true,
        }
    }

    pub fn is_canonical(&self) -> bool {
        !self.contains_permuted()
    }
}

/// Pushes every `permuted` node into leaf labels. Idempotent.
pub fn canonical_form(t: &OperadTerm) -> Result<OperadTerm> {
    match t {
        OperadTerm::Leaf { .. } => Ok(t.clone()),
        OperadTerm::Apply { op, args } => Ok(OperadTerm::Apply {
            op: op.clone(),
            args: args.iter().map(canonical_form).collect::<Result<_>>()?,
        }),
        OperadTerm::Permuted { perm, of } => sigma_act(perm, of),
    }
}

/// `σ·t`: leaf `k` becomes leaf `σ⁻¹(k)`.
pub fn sigma_act(perm: &[usize], t: &OperadTerm) -> Result<OperadTerm> {
    let base = canonical_form(t)?;
    if perm.len() != base.arity() || !is_permutation(perm) {
        return Err(OperadError::BadPermutation(perm.to_vec()));
    }
    let inv = inverse(perm);
    Ok(base.relabel(&|k| inv[k]))
}

/// `γ(f; g₀, …, g_{m−1})`: slot `i` of `f` receives `gᵢ`, whose slots are
/// shifted past those of `g₀, …, g_{i−1}`.
pub fn gamma(f: &OperadTerm, parts: &[OperadTerm]) -> Result<OperadTerm> {
    let f = canonical_form(f)?;
    if parts.len() != f.arity() {
        return Err(OperadError::ArityMismatch(format!(
            "grafting {} parts into a term of arity {}",
            parts.len(),
            f.arity()
        )));
    }
    let mut shifted = Vec::with_capacity(parts.len());
    let mut offset = 0;
    for p in parts {
        let p = canonical_form(p)?;
        let n = p.arity();
        shifted.push(p.relabel(&|k| k + offset));
        offset += n;
    }
    Ok(f.substitute(&shifted))
}

/// Block sum `τ₀ ⊕ … ⊕ τ_{m−1}`.
pub fn block_sum(taus: &[Vec<usize>]) -> Vec<usize> {
    let mut out = Vec::new();
    for t in taus {
        let off = out.len();
        out.extend(t.iter().map(|&x| x + off));
    }
    out
}

/// The block permutation `σ⟨n₀, …, n_{m−1}⟩` moving block `j` (size `n_j`)
/// to block position `σ(j)`.
pub fn block_permutation(sigma: &[usize], sizes: &[usize]) -> Vec<usize> {
    let m = sigma.len();
    let inv = inverse(sigma);
    // new layout: position i holds old block inv[i]
    let mut new_off = vec![0; m];
    let mut acc = 0;
    for i in 0..m {
        new_off[inv[i]] = acc;
        acc += sizes[inv[i]];
    }
    let mut out = Vec::with_capacity(acc);
    for j in 0..m {
        out.extend((0..sizes[j]).map(|k| new_off[j] + k));
    }
    out
}

fn compose_perm(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&x| a[x]).collect()
}

/// The permutation `ρ` with
/// `γ(σ·f; τ₀·g₀, …) = ρ·γ(f; g_{σ⁻¹(0)}, …, g_{σ⁻¹(m−1)})`.
///
/// `ρ = σ⟨n_{…}⟩ ∘ (τ₀ ⊕ … ⊕ τ_{m−1})`, where the block permutation moves the
/// blocks laid out in the order of the `gᵢ`.
pub fn equivariance_permutation(sigma: &[usize], taus: &[Vec<usize>]) -> Vec<usize> {
    let sizes: Vec<usize> = taus.iter().map(Vec::len).collect();
    compose_perm(&block_permutation(sigma, &sizes), &block_sum(taus))
}

/// A random well-formed term over `spec` of depth at most `max_depth`, with a
/// random assignment of slots to leaves.
pub fn random_term(spec: &OperadSpec, max_depth: usize, rng: &mut OpRng) -> OperadTerm {
    fn shape(spec: &OperadSpec, depth: usize, rng: &mut OpRng) -> OperadTerm {
        let gens = spec.generators();
        if depth == 0 || gens.is_empty() || rng.random_bool(0.25) {
            let nullary: Vec<&OperadSymbol> = gens.iter().filter(|g| g.arity == 0).collect();
            if !nullary.is_empty() && rng.random_bool(0.2) {
                return OperadTerm::apply(&nullary[rng.random_range(0..nullary.len())].name, vec![]);
            }
            return OperadTerm::leaf(0);
        }
        let g = &gens[rng.random_range(0..gens.len())];
        let args = (0..g.arity).map(|_| shape(spec, depth - 1, rng)).collect();
        OperadTerm::apply(&g.name, args)
    }
    let t = shape(spec, max_depth, rng);
    let n = t.arity();
    let labels = random_permutation(n, rng);
    let mut next = 0;
    fn label(t: &OperadTerm, labels: &[usize], next: &mut usize) -> OperadTerm {
        match t {
            OperadTerm::Leaf { .. } => {
                let l = labels[*next];
                *next += 1;
                OperadTerm::leaf(l)
            }
            OperadTerm::Apply { op, args } => OperadTerm::Apply {
                op: op.clone(),
                args: args.iter().map(|a| label(a, labels, next)).collect(),
            },
            OperadTerm::Permuted { .. } => unreachable!(),
        }
    }
    label(&t, &labels, &mut next)
}

/// Which grafting the axiom suite exercises; tests substitute corrupted ones.
pub type GraftFn = fn(&OperadTerm, &[OperadTerm]) -> Result<OperadTerm>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomViolation {
    pub law: String,
    pub trial: usize,
    pub lhs: OperadTerm,
    pub rhs: OperadTerm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub pass: bool,
    pub trials: usize,
    pub checks: usize,
    pub violations: usize,
    pub counterexample: Option<AxiomViolation>,
}

pub fn operad_axiom_suite(spec: &OperadSpec, trials: usize, seed: u64) -> AxiomReport {
    operad_axiom_suite_with(spec, trials, seed, gamma)
}

/// Associativity, both unit laws and equivariance on random instances.
pub fn operad_axiom_suite_with(spec: &OperadSpec, trials: usize, seed: u64, graft: GraftFn) -> AxiomReport {
    let mut report = AxiomReport {
        pass: true,
        trials,
        checks: 0,
        violations: 0,
        counterexample: None,
    };
    let mut record = |law: &str, trial: usize, lhs: Result<OperadTerm>, rhs: Result<OperadTerm>| {
        report.checks += 1;
        let ok = matches!((&lhs, &rhs), (Ok(a), Ok(b)) if a == b);
        if !ok {
            report.pass = false;
            report.violations += 1;
            if report.counterexample.is_none() {
                let leaf = OperadTerm::leaf(usize::MAX);
                report.counterexample = Some(AxiomViolation {
                    law: law.to_string(),
                    trial,
                    lhs: lhs.unwrap_or_else(|_| leaf.clone()),
                    rhs: rhs.unwrap_or(leaf),
                });
            }
        }
    };
    for trial in 0..trials {
        let mut rng = rng_from_seed(derive_seed(seed, trial as u64));
        let f = random_term(spec, 2, &mut rng);
        let gs: Vec<OperadTerm> = (0..f.arity()).map(|_| random_term(spec, 2, &mut rng)).collect();
        let hs: Vec<Vec<OperadTerm>> = gs
            .iter()
            .map(|g| (0..g.arity()).map(|_| random_term(spec, 1, &mut rng)).collect())
            .collect();

        // γ(γ(f; g⃗); h⃗) = γ(f; γ(g₀; h⃗₀), …)
        let flat_h: Vec<OperadTerm> = hs.iter().flatten().cloned().collect();
        let lhs = graft(&f, &gs).and_then(|fg| graft(&fg, &flat_h));
        let rhs = gs
            .iter()
            .zip(&hs)
            .map(|(g, h)| graft(g, h))
            .collect::<Result<Vec<_>>>()
            .and_then(|inner| graft(&f, &inner));
        record("associativity", trial, lhs, rhs);

        record("left unit", trial, graft(&OperadTerm::id(), std::slice::from_ref(&f)), Ok(f.clone()));
        let ids = vec![OperadTerm::id(); f.arity()];
        record("right unit", trial, graft(&f, &ids), Ok(f.clone()));

        let sigma = random_permutation(f.arity(), &mut rng);
        let taus: Vec<Vec<usize>> = gs.iter().map(|g| random_permutation(g.arity(), &mut rng)).collect();
        let lhs = sigma_act(&sigma, &f).and_then(|sf| {
            let tg = gs
                .iter()
                .zip(&taus)
                .map(|(g, t)| sigma_act(t, g))
                .collect::<Result<Vec<_>>>()?;
            graft(&sf, &tg)
        });
        let inv = inverse(&sigma);
        let reordered: Vec<OperadTerm> = inv.iter().map(|&j| gs[j].clone()).collect();
        let rho = equivariance_permutation(&sigma, &taus);
        let rhs = graft(&f, &reordered).and_then(|t| sigma_act(&rho, &t));
        record("equivariance", trial, lhs, rhs);
    }
    report
}
