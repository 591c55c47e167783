//! Ideals of channel operations: membership predicates and certificate
//! lists, closure checking by sampling, the quotient collapsing members to a
//! typed `⊥`, adjunction of formal non-linear generators, and numerical
//! no-go witnesses for cloning and broadcasting.
//!
//! Maximal ideals are never computed. Every closure report is a sampled
//! check, and says so.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::{
    is_cp, json::ChannelJson, kraus_from_choi, ChannelError, OperatorMultiMap, QuantumChannel,
};
use crate::linalg::{factor_permutation, hermitian_eig, ComplexMatrix};
use crate::operad::circuit::vec_product_reorder;
use crate::operad::{Interpretation, OperadError, OperadSpec, OperadSymbol, OperadTerm};
use crate::random::{derive_seed, random_permutation, rng_from_seed};

pub mod nogo;

pub use nogo::{broadcast_witness, clone_pattern_match, BroadcastReport, CloneMatchReport};

/// Isometry tolerance of the non-isometric predicate.
pub const ISOMETRY_TOL: f64 = 1e-9;
/// Relative eigenvalue cutoff for the Kraus rank.
pub const RANK_TOL: f64 = 1e-9;
/// Choi agreement needed to match a certificate.
pub const CERTIFICATE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IdealError {
    #[error("operation is not completely positive (Choi eigenvalue {min_eig:e})")]
    NotCp { min_eig: f64 },
    #[error("dimension {0} is rejected: a one-dimensional system broadcasts its only state linearly")]
    TrivialDimension(usize),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("membership undecidable: {0}")]
    Undecidable(String),
    #[error("name `{0}` is already taken")]
    NameCollision(String),
    #[error("inconsistent certificates: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Operad(#[from] OperadError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

pub type Result<T> = std::result::Result<T, IdealError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Predicate {
    /// Kraus rank above one, or rank one with `V†V ≠ I`.
    NonIsometric,
    /// Membership by Choi match against the listed members.
    Certificates,
    /// Agrees with `ρ ↦ ρ⊗ρ` on pure states.
    CloningContext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub channel: ChannelJson,
}

impl Certificate {
    pub fn new(name: &str, ch: &QuantumChannel) -> Self {
        Self {
            name: name.to_string(),
            channel: ChannelJson::from_choi(ch),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealSpec {
    pub name: String,
    pub predicate: Predicate,
    #[serde(default)]
    pub members: Vec<Certificate>,
    #[serde(default)]
    pub non_members: Vec<Certificate>,
}

impl IdealSpec {
    pub fn non_isometric() -> Self {
        Self {
            name: "non-isometric".into(),
            predicate: Predicate::NonIsometric,
            members: Vec::new(),
            non_members: Vec::new(),
        }
    }

    pub fn certificates(name: &str, members: Vec<Certificate>, non_members: Vec<Certificate>) -> Self {
        Self {
            name: name.into(),
            predicate: Predicate::Certificates,
            members,
            non_members,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    pub kraus_rank: usize,
    /// `‖V†V − I‖_F` for rank one, absent otherwise.
    pub isometry_defect: Option<f64>,
    /// Which certificate matched, for certificate lists.
    pub certificate: Option<String>,
}

fn matches_certificate(ch: &QuantumChannel, certs: &[Certificate]) -> Result<Option<String>> {
    for c in certs {
        let other = c.channel.to_channel()?;
        if other.in_dim() == ch.in_dim()
            && other.out_dim() == ch.out_dim()
            && other.choi().max_abs_diff(ch.choi()) <= CERTIFICATE_TOL
        {
            return Ok(Some(c.name.clone()));
        }
    }
    Ok(None)
}

/// Decides membership of a CP operation.
pub fn is_member(spec: &IdealSpec, op: &QuantumChannel) -> Result<Membership> {
    let cp = is_cp(op, RANK_TOL);
    if !cp.cp {
        return Err(IdealError::NotCp { min_eig: cp.min_eig });
    }
    let eig = hermitian_eig(op.choi()).map_err(ChannelError::from)?;
    let top = eig.values[0].max(0.0);
    let kraus_rank = eig.values.iter().filter(|&&v| v > RANK_TOL * top.max(1e-300)).count();
    let isometry_defect = if kraus_rank == 1 {
        let ks = kraus_from_choi(op, RANK_TOL)?;
        let k = &ks.operators()[0];
        let kk = k.adjoint().matmul(k).map_err(ChannelError::from)?;
        Some((&kk - &ComplexMatrix::identity(op.in_dim())).norm_fro())
    } else {
        None
    };
    let (member, certificate) = match spec.predicate {
        Predicate::NonIsometric => (kraus_rank != 1 || isometry_defect.is_some_and(|d| d > ISOMETRY_TOL), None),
        Predicate::Certificates => {
            let yes = matches_certificate(op, &spec.members)?;
            let no = matches_certificate(op, &spec.non_members)?;
            if let (Some(a), Some(b)) = (&yes, &no) {
                return Err(IdealError::Inconsistent(format!("`{a}` is listed as member and `{b}` as non-member")));
            }
            (yes.is_some(), yes.or(no))
        }
        Predicate::CloningContext => {
            let d = op.in_dim();
            if op.out_dim() != d * d {
                (false, None)
            } else {
                let m = op.superoperator();
                (nogo::clones_on_frame(&m, d, 0, 0)?.witness.is_none(), None)
            }
        }
    };
    Ok(Membership {
        member,
        kraus_rank,
        isometry_defect,
        certificate,
    })
}

/// A multilinear map read as one channel on the tensor product of its inputs.
pub fn multimap_as_channel(m: &OperatorMultiMap) -> Result<QuantumChannel> {
    let p = vec_product_reorder(m.input_dims())?;
    let action = m.action().matmul(&p.adjoint()).map_err(ChannelError::from)?;
    let din: usize = m.input_dims().iter().product();
    let single = OperatorMultiMap::new(vec![din], m.output_dim(), action)?;
    Ok(QuantumChannel::from_superoperator(&single)?)
}

/// An operation of the ambient pool: a channel from `d^arity` to `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolOp {
    pub name: String,
    pub arity: usize,
    pub channel: ChannelJson,
}

#[derive(Debug, Clone)]
struct Op {
    name: String,
    arity: usize,
    ch: QuantumChannel,
}

#[derive(Debug, Clone)]
pub struct Pool {
    d: usize,
    ops: Vec<Op>,
}

impl Pool {
    pub fn new(d: usize) -> Self {
        Self { d, ops: Vec::new() }
    }

    pub fn push(&mut self, name: &str, arity: usize, ch: QuantumChannel) -> Result<()> {
        if ch.in_dim() != self.d.pow(arity as u32) || ch.out_dim() != self.d {
            return Err(IdealError::SignatureMismatch(format!(
                "`{name}` is {} -> {}, expected {} -> {}",
                ch.in_dim(),
                ch.out_dim(),
                self.d.pow(arity as u32),
                self.d
            )));
        }
        self.ops.push(Op {
            name: name.to_string(),
            arity,
            ch,
        });
        Ok(())
    }

    pub fn from_json(d: usize, ops: &[PoolOp]) -> Result<Self> {
        let mut pool = Self::new(d);
        for op in ops {
            pool.push(&op.name, op.arity, op.channel.to_channel()?)?;
        }
        Ok(pool)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.ops.iter().map(|o| o.name.as_str()).collect()
    }

    pub fn channel(&self, i: usize) -> &QuantumChannel {
        &self.ops[i].ch
    }
}

/// Largest total arity of a sampled composite.
const MAX_ARITY: usize = 4;

fn graft(f: &Op, parts: &[&Op]) -> Result<Op> {
    let mut joint: Option<QuantumChannel> = None;
    for p in parts {
        joint = Some(match joint {
            None => p.ch.clone(),
            Some(j) => j.tensor(&p.ch)?,
        });
    }
    let ch = match joint {
        Some(j) => f.ch.after(&j)?,
        None => f.ch.clone(),
    };
    let names: Vec<&str> = parts.iter().map(|p| p.name.as_str()).collect();
    Ok(Op {
        name: format!("{}({})", f.name, names.join(", ")),
        arity: parts.iter().map(|p| p.arity).sum(),
        ch,
    })
}

fn permuted(f: &Op, d: usize, sigma: &[usize]) -> Result<Op> {
    // inputs rerouted so that slot k reads slot σ⁻¹(k)
    let dims = vec![d; f.arity];
    let p = factor_permutation(&dims, sigma).map_err(ChannelError::from)?;
    let ch = f.ch.after(&QuantumChannel::unitary(&p)?)?;
    Ok(Op {
        name: format!("{sigma:?}·{}", f.name),
        arity: f.arity,
        ch,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureWitness {
    pub clause: String,
    pub composite: String,
    pub kraus_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureReport {
    pub pass: bool,
    pub trials: usize,
    pub checks: usize,
    pub violations: usize,
    pub members_in_pool: usize,
    pub witness: Option<ClosureWitness>,
    pub note: String,
}

/// Samples `trials` instances of each clause: `γ(f; g⃗)` with `f` a member,
/// `γ(h; …, f, …)` with a member in one argument, and `σ·f`. Every composite
/// must be a member.
pub fn closure_check(spec: &IdealSpec, pool: &Pool, trials: usize, seed: u64) -> Result<ClosureReport> {
    let mut members = Vec::new();
    for (i, op) in pool.ops.iter().enumerate() {
        if is_member(spec, &op.ch)?.member {
            members.push(i);
        }
    }
    let mut report = ClosureReport {
        pass: true,
        trials,
        checks: 0,
        violations: 0,
        members_in_pool: members.len(),
        witness: None,
        note: "sampled closure check; ideal maximality is not decided".into(),
    };
    if members.is_empty() {
        return Ok(report);
    }
    let unary: Vec<usize> = (0..pool.len()).filter(|&i| pool.ops[i].arity == 1).collect();
    for trial in 0..trials {
        let mut rng = rng_from_seed(derive_seed(seed, trial as u64));
        let f = &pool.ops[members[rng.random_range(0..members.len())]];
        let pick_part = |rng: &mut crate::random::OpRng, budget: usize| -> Option<&Op> {
            let fits: Vec<&Op> = pool.ops.iter().filter(|o| o.arity <= budget).collect();
            (!fits.is_empty()).then(|| fits[rng.random_range(0..fits.len())])
        };

        let mut composites: Vec<(&str, Op)> = Vec::new();
        // member on the outside
        let mut budget = MAX_ARITY.saturating_sub(f.arity.saturating_sub(1));
        let mut parts = Vec::new();
        for _ in 0..f.arity {
            let slots_left = f.arity - parts.len() - 1;
            match pick_part(&mut rng, budget.saturating_sub(slots_left).max(1)) {
                Some(p) => {
                    budget -= p.arity.min(budget);
                    parts.push(p);
                }
                None => break,
            }
        }
        if parts.len() == f.arity {
            composites.push(("composition", graft(f, &parts)?));
        }
        // member inside one argument
        if !unary.is_empty() {
            let hs: Vec<&Op> = pool.ops.iter().filter(|o| o.arity >= 1 && o.arity + f.arity <= MAX_ARITY + 1).collect();
            if !hs.is_empty() {
                let h = hs[rng.random_range(0..hs.len())];
                let slot = rng.random_range(0..h.arity);
                let parts: Vec<&Op> = (0..h.arity)
                    .map(|k| if k == slot { f } else { &pool.ops[unary[rng.random_range(0..unary.len())]] })
                    .collect();
                composites.push(("pre-composition", graft(h, &parts)?));
            }
        }
        if f.arity >= 2 {
            let sigma = random_permutation(f.arity, &mut rng);
            composites.push(("symmetric action", permuted(f, pool.d, &sigma)?));
        }
        for (clause, c) in composites {
            report.checks += 1;
            let m = is_member(spec, &c.ch)?;
            if !m.member {
                report.pass = false;
                report.violations += 1;
                if report.witness.is_none() {
                    report.witness = Some(ClosureWitness {
                        clause: clause.into(),
                        composite: c.name.clone(),
                        kraus_rank: m.kraus_rank,
                    });
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionReport {
    pub pass: bool,
    pub checked: usize,
    pub inner_members: usize,
    pub violations: usize,
    pub witness: Option<String>,
}

/// Every pool operation in `inner` must lie in `outer`, and so must
/// `trials` sampled composites of pool operations.
pub fn ideal_inclusion_check(inner: &IdealSpec, outer: &IdealSpec, pool: &Pool, trials: usize, seed: u64) -> Result<InclusionReport> {
    let mut candidates: Vec<Op> = pool.ops.clone();
    let unary: Vec<&Op> = pool.ops.iter().filter(|o| o.arity == 1).collect();
    if !unary.is_empty() {
        let mut rng = rng_from_seed(seed);
        for _ in 0..trials {
            let a = unary[rng.random_range(0..unary.len())];
            let b = unary[rng.random_range(0..unary.len())];
            candidates.push(graft(a, &[b])?);
        }
    }
    let mut report = InclusionReport {
        pass: true,
        checked: candidates.len(),
        inner_members: 0,
        violations: 0,
        witness: None,
    };
    for c in &candidates {
        if is_member(inner, &c.ch)?.member {
            report.inner_members += 1;
            if !is_member(outer, &c.ch)?.member {
                report.pass = false;
                report.violations += 1;
                report.witness.get_or_insert_with(|| c.name.clone());
            }
        }
    }
    Ok(report)
}

/// A formal generator with no linear interpretation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormalGenerator {
    /// `ψ ↦ ψ⊗ψ` on pure states of dimension `d`.
    Clone(usize),
    /// Both marginals reproduce every pure input state.
    Broadcast(usize),
}

impl FormalGenerator {
    pub fn name(&self) -> &'static str {
        match self {
            FormalGenerator::Clone(_) => "Clone_H",
            FormalGenerator::Broadcast(_) => "Broadcast_H",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FormalGenerator::Clone(d) | FormalGenerator::Broadcast(d) => *d,
        }
    }

    pub fn symbol(&self) -> OperadSymbol {
        let d = self.dim();
        let mut s = OperadSymbol::typed(self.name(), vec![d], d * d);
        s.formal = true;
        s
    }
}

/// Extends `spec` by a syntax-only generator of signature `(H; H⊗H)`.
pub fn adjoin_formal(spec: &OperadSpec, gen: FormalGenerator) -> Result<OperadSpec> {
    let mut out = spec.clone();
    out.push(gen.symbol()).map_err(|e| match e {
        OperadError::DuplicateSymbol(n) => IdealError::NameCollision(n),
        other => other.into(),
    })?;
    Ok(out)
}

/// Input and output dimensions of a collapsed subterm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BottomSig {
    /// Input slots absorbed by the collapse, in depth-first order.
    pub slots: Vec<usize>,
    pub inputs: Vec<usize>,
    pub output: usize,
}

/// An operad term in which ideal members are collapsed to `⊥`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QuotientTerm {
    Bottom {
        bottom: BottomSig,
    },
    Leaf {
        slot: usize,
    },
    Apply {
        op: String,
        #[serde(default)]
        args: Vec<QuotientTerm>,
    },
}

impl QuotientTerm {
    pub fn from_term(t: &OperadTerm) -> Result<Self> {
        let t = crate::operad::canonical_form(t)?;
        Ok(Self::lift(&t))
    }

    fn lift(t: &OperadTerm) -> Self {
        match t {
            OperadTerm::Leaf { slot } => QuotientTerm::Leaf { slot: *slot },
            OperadTerm::Apply { op, args } => QuotientTerm::Apply {
                op: op.clone(),
                args: args.iter().map(Self::lift).collect(),
            },
            OperadTerm::Permuted { .. } => unreachable!("lifting a canonical term"),
        }
    }

    /// The plain term, when no `⊥` occurs.
    pub fn to_term(&self) -> Option<OperadTerm> {
        match self {
            QuotientTerm::Bottom { .. } => None,
            QuotientTerm::Leaf { slot } => Some(OperadTerm::leaf(*slot)),
            QuotientTerm::Apply { op, args } => Some(OperadTerm::Apply {
                op: op.clone(),
                args: args.iter().map(Self::to_term).collect::<Option<Vec<_>>>()?,
            }),
        }
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, QuotientTerm::Bottom { .. })
    }

    pub fn contains_bottom(&self) -> bool {
        match self {
            QuotientTerm::Bottom { .. } => true,
            QuotientTerm::Leaf { .. } => false,
            QuotientTerm::Apply { args, .. } => args.iter().any(Self::contains_bottom),
        }
    }

    fn slots(&self, out: &mut Vec<usize>) {
        match self {
            QuotientTerm::Bottom { bottom } => out.extend_from_slice(&bottom.slots),
            QuotientTerm::Leaf { slot } => out.push(*slot),
            QuotientTerm::Apply { args, .. } => args.iter().for_each(|a| a.slots(out)),
        }
    }

    /// Grafting on quotient terms, followed by collapse.
    pub fn gamma(&self, parts: &[QuotientTerm], spec: &IdealSpec, interp: &Interpretation) -> Result<Self> {
        let mut all = Vec::new();
        self.slots(&mut all);
        if all.len() != parts.len() {
            return Err(OperadError::ArityMismatch(format!("{} parts for arity {}", parts.len(), all.len())).into());
        }
        let mut offsets = Vec::with_capacity(parts.len());
        let mut acc = 0;
        for p in parts {
            let mut s = Vec::new();
            p.slots(&mut s);
            offsets.push(acc);
            acc += s.len();
        }
        let shifted: Vec<QuotientTerm> = parts.iter().zip(&offsets).map(|(p, &o)| p.shift(o)).collect();
        let grafted = self.substitute(&shifted, interp)?;
        collapse(&grafted, spec, interp, None)
    }

    fn shift(&self, by: usize) -> Self {
        match self {
            QuotientTerm::Bottom { bottom } => QuotientTerm::Bottom {
                bottom: BottomSig {
                    slots: bottom.slots.iter().map(|s| s + by).collect(),
                    ..bottom.clone()
                },
            },
            QuotientTerm::Leaf { slot } => QuotientTerm::Leaf { slot: slot + by },
            QuotientTerm::Apply { op, args } => QuotientTerm::Apply {
                op: op.clone(),
                args: args.iter().map(|a| a.shift(by)).collect(),
            },
        }
    }

    fn substitute(&self, parts: &[QuotientTerm], interp: &Interpretation) -> Result<Self> {
        Ok(match self {
            QuotientTerm::Leaf { slot } => parts[*slot].clone(),
            QuotientTerm::Apply { op, args } => QuotientTerm::Apply {
                op: op.clone(),
                args: args.iter().map(|a| a.substitute(parts, interp)).collect::<Result<_>>()?,
            },
            QuotientTerm::Bottom { bottom } => {
                // ⊥ absorbs whatever is grafted into it
                let mut slots = Vec::new();
                let mut inputs = Vec::new();
                for (&s, &d) in bottom.slots.iter().zip(&bottom.inputs) {
                    let (ps, pd) = signature(&parts[s], interp, Some(d))?;
                    slots.extend(ps);
                    inputs.extend(pd.0);
                }
                QuotientTerm::Bottom {
                    bottom: BottomSig {
                        slots,
                        inputs,
                        output: bottom.output,
                    },
                }
            }
        })
    }
}

/// Dimension data of an operation node: input dims and output dim.
fn op_dims(op: &str, interp: &Interpretation) -> Result<(Vec<usize>, usize)> {
    if let Some(m) = interp.get(op) {
        return Ok((m.input_dims().to_vec(), m.output_dim()));
    }
    match interp.spec().get(op).and_then(|s| s.signature.clone()) {
        Some(sig) => Ok((sig.inputs, sig.output)),
        None => Err(IdealError::Undecidable(format!("`{op}` has neither an interpretation nor a signature"))),
    }
}

type Dims = (Vec<usize>, usize);

/// Slots in depth-first order with their dimensions, and the output dim.
fn signature(q: &QuotientTerm, interp: &Interpretation, expected: Option<usize>) -> Result<(Vec<usize>, Dims)> {
    match q {
        QuotientTerm::Leaf { slot } => {
            let d = expected.unwrap_or(interp.carrier());
            Ok((vec![*slot], (vec![d], d)))
        }
        QuotientTerm::Bottom { bottom } => Ok((bottom.slots.clone(), (bottom.inputs.clone(), bottom.output))),
        QuotientTerm::Apply { op, args } => {
            let (ins, out) = op_dims(op, interp)?;
            if ins.len() != args.len() {
                return Err(OperadError::ArityMismatch(format!("`{op}` with {} children", args.len())).into());
            }
            let mut slots = Vec::new();
            let mut dims = Vec::new();
            for (a, &d) in args.iter().zip(&ins) {
                let (s, (ds, _)) = signature(a, interp, Some(d))?;
                slots.extend(s);
                dims.extend(ds);
            }
            Ok((slots, (dims, out)))
        }
    }
}

fn is_formal(op: &str, interp: &Interpretation) -> bool {
    interp.spec().get(op).is_some_and(|s| s.formal)
}

fn relabel_dfs(t: &OperadTerm, next: &mut usize) -> OperadTerm {
    match t {
        OperadTerm::Leaf { .. } => {
            let l = OperadTerm::leaf(*next);
            *next += 1;
            l
        }
        OperadTerm::Apply { op, args } => OperadTerm::Apply {
            op: op.clone(),
            args: args.iter().map(|a| relabel_dfs(a, next)).collect(),
        },
        OperadTerm::Permuted { .. } => unreachable!(),
    }
}

fn collapse(q: &QuotientTerm, spec: &IdealSpec, interp: &Interpretation, expected: Option<usize>) -> Result<QuotientTerm> {
    let QuotientTerm::Apply { op, args } = q else {
        return Ok(q.clone());
    };
    let (ins, out) = op_dims(op, interp)?;
    let children = args
        .iter()
        .zip(&ins)
        .map(|(a, &d)| collapse(a, spec, interp, Some(d)))
        .collect::<Result<Vec<_>>>()?;
    let node = QuotientTerm::Apply {
        op: op.clone(),
        args: children,
    };
    if let Some(e) = expected {
        if e != out {
            return Err(IdealError::SignatureMismatch(format!("`{op}` outputs {out} where {e} is expected")));
        }
    }
    let bottom = |node: &QuotientTerm| -> Result<QuotientTerm> {
        let (slots, (inputs, output)) = signature(node, interp, expected)?;
        Ok(QuotientTerm::Bottom {
            bottom: BottomSig { slots, inputs, output },
        })
    };
    if is_formal(op, interp) {
        return Ok(node);
    }
    let QuotientTerm::Apply { args: children, .. } = &node else { unreachable!() };
    if children.iter().any(QuotientTerm::is_bottom) {
        return bottom(&node);
    }
    let Some(term) = node.to_term() else {
        // ⊥ sits below a formal generator, which blocks absorption
        return Ok(node);
    };
    let mut next = 0;
    let local = relabel_dfs(&term, &mut next);
    let m = match interp.interpret(&local) {
        Ok(m) => m,
        Err(OperadError::NonLinearGenerator(_)) => return Ok(node),
        Err(OperadError::UnassignedSymbol(s)) | Err(OperadError::UnknownSymbol(s)) => {
            return Err(IdealError::Undecidable(format!("no interpretation for `{s}`")))
        }
        Err(e) => return Err(e.into()),
    };
    if is_member(spec, &multimap_as_channel(&m)?)?.member {
        bottom(&node)
    } else {
        Ok(node)
    }
}

/// Collapses member subterms to `⊥`. An operation with a collapsed argument
/// is itself collapsed, except formal generators, which have no place in the
/// ideal and keep their arguments. Idempotent.
pub fn quotient(t: &OperadTerm, spec: &IdealSpec, interp: &Interpretation) -> Result<QuotientTerm> {
    quotient_term(&QuotientTerm::from_term(t)?, spec, interp)
}

pub fn quotient_term(q: &QuotientTerm, spec: &IdealSpec, interp: &Interpretation) -> Result<QuotientTerm> {
    collapse(q, spec, interp, None)
}

/// Standard curated qubit pool: unitaries, dephasing, depolarizing,
/// amplitude damping, a replacement channel and two-input operations.
pub fn standard_pool(seed: u64) -> Result<Pool> {
    use crate::channels::KrausSet;
    use crate::random::{random_cptp_kraus, random_unitary};
    let mut rng = rng_from_seed(seed);
    let mut pool = Pool::new(2);
    for k in 0..2 {
        pool.push(&format!("unitary{k}"), 1, QuantumChannel::unitary(&random_unitary(2, &mut rng))?)?;
    }
    let deph = KrausSet::new(vec![ComplexMatrix::unit(2, 0, 0), ComplexMatrix::unit(2, 1, 1)])?;
    pool.push("dephase", 1, QuantumChannel::from_kraus(&deph)?)?;
    pool.push("depolarize", 1, QuantumChannel::completely_depolarizing(2, 2))?;
    let g = 0.3f64;
    let amp = KrausSet::new(vec![
        ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, (1.0 - g).sqrt()]]),
        ComplexMatrix::from_real_rows(&[&[0.0, g.sqrt()], &[0.0, 0.0]]),
    ])?;
    pool.push("amp_damp", 1, QuantumChannel::from_kraus(&amp)?)?;
    pool.push("random1", 1, QuantumChannel::from_kraus(&KrausSet::new(random_cptp_kraus(2, 2, 2, &mut rng))?)?)?;
    // tr_B: keep the first qubit
    let trb = QuantumChannel::from_fn(4, 2, |x| {
        crate::linalg::partial_trace(x, &crate::linalg::DimProfile::new(vec![2, 2]).expect("valid"), 1)
            .expect("dimensions fixed")
    })?;
    pool.push("trace_b", 2, trb)?;
    pool.push("random2", 2, QuantumChannel::from_kraus(&KrausSet::new(random_cptp_kraus(4, 2, 3, &mut rng))?)?)?;
    Ok(pool)
}

/// Certificate lists for the inclusion chain no-clone ⊆ no-broadcast over a
/// pool: the no-clone list holds the non-isometric operations, the
/// no-broadcast list holds every operation of the pool.
pub fn curated_chain(pool: &Pool) -> Result<(IdealSpec, IdealSpec)> {
    let ni = IdealSpec::non_isometric();
    let mut noclone = Vec::new();
    let mut nobroadcast = Vec::new();
    for op in &pool.ops {
        let cert = Certificate::new(&op.name, &op.ch);
        if is_member(&ni, &op.ch)?.member {
            noclone.push(cert.clone());
        }
        nobroadcast.push(cert);
    }
    Ok((
        IdealSpec::certificates("no-clone", noclone, vec![]),
        IdealSpec::certificates("no-broadcast", nobroadcast, vec![]),
    ))
}
