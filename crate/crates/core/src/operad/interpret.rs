use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channels::{json::ChannelJson, OperatorMultiMap, QuantumChannel};
use crate::linalg::ComplexMatrix;

use super::circuit::vec_product_reorder;
use super::{canonical_form, OperadError, OperadSpec, OperadSymbol, OperadTerm, Result};

/// Assigns a multilinear map to each generator. Leaves are the identity and
/// are evaluated by copying, so unit laws hold exactly.
#[derive(Debug, Clone)]
pub struct Interpretation {
    spec: OperadSpec,
    carrier: usize,
    maps: BTreeMap<String, OperatorMultiMap>,
}

impl Interpretation {
    /// `carrier` is the operator dimension a bare top-level leaf acts on.
    pub fn new(spec: OperadSpec, carrier: usize) -> Self {
        Self {
            spec,
            carrier,
            maps: BTreeMap::new(),
        }
    }

    pub fn spec(&self) -> &OperadSpec {
        &self.spec
    }

    pub fn carrier(&self) -> usize {
        self.carrier
    }

    pub fn get(&self, name: &str) -> Option<&OperatorMultiMap> {
        self.maps.get(name)
    }

    pub fn maps(&self) -> &BTreeMap<String, OperatorMultiMap> {
        &self.maps
    }

    pub fn assign(&mut self, name: &str, map: OperatorMultiMap) -> Result<()> {
        let sym = self
            .spec
            .get(name)
            .ok_or_else(|| OperadError::UnknownSymbol(name.to_string()))?;
        if sym.formal {
            return Err(OperadError::NonLinearGenerator(name.to_string()));
        }
        if sym.arity != map.arity() {
            return Err(OperadError::ArityMismatch(format!(
                "`{name}` has arity {} but the map takes {} inputs",
                sym.arity,
                map.arity()
            )));
        }
        if let Some(sig) = &sym.signature {
            if sig.inputs != map.input_dims() || sig.output != map.output_dim() {
                return Err(OperadError::SignatureMismatch(format!(
                    "`{name}` declared {:?} -> {} but the map is {:?} -> {}",
                    sig.inputs,
                    sig.output,
                    map.input_dims(),
                    map.output_dim()
                )));
            }
        }
        self.maps.insert(name.to_string(), map);
        Ok(())
    }

    pub fn assign_channel(&mut self, name: &str, ch: &QuantumChannel) -> Result<()> {
        self.assign(name, ch.superoperator())
    }

    /// Assigns a channel on `⊗ inputs` as a map with one slot per factor.
    pub fn assign_joint_channel(&mut self, name: &str, ch: &QuantumChannel, inputs: &[usize]) -> Result<()> {
        if inputs.iter().product::<usize>() != ch.in_dim() {
            return Err(OperadError::SignatureMismatch(format!(
                "`{name}`: factors {inputs:?} for a channel on dimension {}",
                ch.in_dim()
            )));
        }
        let p = vec_product_reorder(inputs)?;
        let action = ch.superoperator().action().matmul(&p).map_err(crate::channels::ChannelError::from)?;
        self.assign(name, OperatorMultiMap::new(inputs.to_vec(), ch.out_dim(), action)?)
    }

    fn lookup(&self, op: &str) -> Result<&OperatorMultiMap> {
        if let Some(m) = self.maps.get(op) {
            return Ok(m);
        }
        match self.spec.get(op) {
            Some(sym) if sym.formal => Err(OperadError::NonLinearGenerator(op.to_string())),
            Some(_) => Err(OperadError::UnassignedSymbol(op.to_string())),
            None => Err(OperadError::UnknownSymbol(op.to_string())),
        }
    }

    /// The multilinear map of `t`, slot `k` reading the leaf labelled `k`.
    pub fn interpret(&self, t: &OperadTerm) -> Result<OperatorMultiMap> {
        self.interpret_with_output(t, None)
    }

    pub(crate) fn interpret_with_output(&self, t: &OperadTerm, output: Option<usize>) -> Result<OperatorMultiMap> {
        t.validate(None)?;
        let t = canonical_form(t)?;
        let dfs = self.interpret_dfs(&t, output)?;
        let labels = t.leaves();
        let mut sigma = vec![0; labels.len()];
        for (p, &l) in labels.iter().enumerate() {
            sigma[l] = p;
        }
        Ok(dfs.permute_inputs(&sigma)?)
    }

    /// The map of a canonical term with slots in depth-first leaf order.
    pub(crate) fn interpret_dfs(&self, t: &OperadTerm, output: Option<usize>) -> Result<OperatorMultiMap> {
        match t {
            OperadTerm::Leaf { .. } => Ok(OperatorMultiMap::identity(output.unwrap_or(self.carrier))),
            OperadTerm::Apply { op, args } => {
                let m = self.lookup(op)?;
                if m.arity() != args.len() {
                    return Err(OperadError::ArityMismatch(format!(
                        "`{op}` takes {} inputs, term gives {}",
                        m.arity(),
                        args.len()
                    )));
                }
                if let Some(e) = output {
                    if m.output_dim() != e {
                        return Err(OperadError::SignatureMismatch(format!(
                            "`{op}` outputs dimension {} where {e} is expected",
                            m.output_dim()
                        )));
                    }
                }
                let parts = args
                    .iter()
                    .zip(m.input_dims())
                    .map(|(a, &d)| self.interpret_dfs(a, Some(d)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(OperatorMultiMap::compose(m, &parts)?)
            }
            OperadTerm::Permuted { .. } => unreachable!("interpreting a canonical term"),
        }
    }

    /// Evaluates `t` on concrete operators without building its action
    /// matrix. `args[k]` feeds the leaf labelled `k`.
    pub fn evaluate(&self, t: &OperadTerm, args: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        t.validate(None)?;
        let t = canonical_form(t)?;
        if args.len() != t.arity() {
            return Err(OperadError::ArityMismatch(format!(
                "{} arguments for a term of arity {}",
                args.len(),
                t.arity()
            )));
        }
        self.eval_rec(&t, args)
    }

    fn eval_rec(&self, t: &OperadTerm, args: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        match t {
            OperadTerm::Leaf { slot } => Ok(args[*slot].clone()),
            OperadTerm::Apply { op, args: children } => {
                let m = self.lookup(op)?;
                let vals = children
                    .iter()
                    .map(|c| self.eval_rec(c, args))
                    .collect::<Result<Vec<_>>>()?;
                Ok(m.apply(&vals)?)
            }
            OperadTerm::Permuted { .. } => unreachable!("evaluating a canonical term"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentJson {
    pub name: String,
    /// Factor dimensions of the input; defaults to the channel's input dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<usize>>,
    pub channel: ChannelJson,
}

/// `{"carrier", "spec"?, "maps": [{"name", "inputs"?, "channel"}]}`. Without
/// a spec every assignment declares a typed symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationJson {
    pub carrier: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<OperadSpec>,
    #[serde(default)]
    pub maps: Vec<AssignmentJson>,
}

impl InterpretationJson {
    pub fn build(&self) -> Result<Interpretation> {
        let mut channels = Vec::with_capacity(self.maps.len());
        for a in &self.maps {
            let ch = a.channel.to_channel()?;
            let inputs = a.inputs.clone().unwrap_or_else(|| vec![ch.in_dim()]);
            channels.push((a.name.as_str(), ch, inputs));
        }
        let spec = match &self.spec {
            Some(s) => s.clone(),
            None => OperadSpec::new(
                channels
                    .iter()
                    .map(|(n, ch, ins)| OperadSymbol::typed(n, ins.clone(), ch.out_dim()))
                    .collect(),
            )?,
        };
        let mut interp = Interpretation::new(spec, self.carrier);
        for (name, ch, inputs) in &channels {
            interp.assign_joint_channel(name, ch, inputs)?;
        }
        Ok(interp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::KrausSet;
    use crate::operad::{gamma, random_term, sigma_act, OperadSymbol};
    use crate::random::{random_cptp_kraus, random_density, random_permutation, rng_from_seed};

    fn setup(seed: u64) -> Interpretation {
        let mut rng = rng_from_seed(seed);
        let spec = OperadSpec::with_arities(&[2, 1, 3]);
        let mut interp = Interpretation::new(spec, 2);
        for (name, arity) in [("g0", 2usize), ("g1", 1), ("g2", 3)] {
            let din = 2usize.pow(arity as u32);
            let ks = random_cptp_kraus(din, 2, din.max(2), &mut rng);
            let ks = KrausSet::new(ks).unwrap();
            let action = QuantumChannel::from_kraus(&ks).unwrap().superoperator();
            let dims = vec![2; arity];
            // the channel on the tensor product, read as a multilinear map
            let m = OperatorMultiMap::from_fn(&dims, 2, |xs| {
                let joint = crate::linalg::kron_all(xs.iter()).unwrap();
                let v = action.action().matvec(&joint.vec_col()).unwrap();
                ComplexMatrix::unvec(&v, 2, 2).unwrap()
            })
            .unwrap();
            interp.assign(name, m).unwrap();
        }
        interp
    }

    #[test]
    fn identity_is_exact() {
        let interp = setup(1);
        let mut rng = rng_from_seed(2);
        let x = random_density(2, &mut rng);
        let y = interp.evaluate(&OperadTerm::id(), std::slice::from_ref(&x)).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn assignment_checks() {
        let mut spec = OperadSpec::with_arities(&[1]);
        spec.push(OperadSymbol::typed("t", vec![2], 3)).unwrap();
        let mut formal = OperadSymbol::new("clone", 1);
        formal.formal = true;
        spec.push(formal).unwrap();
        let mut interp = Interpretation::new(spec, 2);
        assert!(matches!(
            interp.assign("g0", OperatorMultiMap::from_kraus(&[ComplexMatrix::identity(2)]).unwrap().permute_inputs(&[0]).unwrap()),
            Ok(())
        ));
        assert!(matches!(
            interp.assign("t", OperatorMultiMap::identity(2)),
            Err(OperadError::SignatureMismatch(_))
        ));
        assert!(matches!(
            interp.assign("clone", OperatorMultiMap::identity(2)),
            Err(OperadError::NonLinearGenerator(_))
        ));
        assert!(matches!(
            interp.interpret(&OperadTerm::generator("clone", 1)),
            Err(OperadError::NonLinearGenerator(_))
        ));
        assert!(matches!(
            interp.interpret(&OperadTerm::generator("t", 1)),
            Err(OperadError::UnassignedSymbol(_))
        ));
    }

    #[test]
    fn interpretation_matches_evaluation_and_respects_structure() {
        let interp = setup(3);
        let mut rng = rng_from_seed(4);
        for _ in 0..30 {
            let f = random_term(interp.spec(), 2, &mut rng);
            let gs: Vec<OperadTerm> = (0..f.arity()).map(|_| random_term(interp.spec(), 1, &mut rng)).collect();
            let t = gamma(&f, &gs).unwrap();
            let n = t.arity();
            if n > 5 {
                continue;
            }
            let xs: Vec<ComplexMatrix> = (0..n).map(|_| random_density(2, &mut rng)).collect();
            let direct = interp.evaluate(&t, &xs).unwrap();
            let via_map = interp.interpret(&t).unwrap().apply(&xs).unwrap();
            assert!(direct.approx_eq(&via_map, 1e-12));

            // compositional: ⟨γ(f; g⃗)⟩ = ⟨f⟩ ∘ (⟨g₀⟩, …)
            let fm = interp.interpret(&f).unwrap();
            let parts: Vec<OperatorMultiMap> = gs.iter().map(|g| interp.interpret(g).unwrap()).collect();
            let composed = OperatorMultiMap::compose(&fm, &parts).unwrap();
            assert!(composed.max_abs_diff(&interp.interpret(&t).unwrap()) < 1e-12);

            // σ·t reroutes inputs
            let s = random_permutation(n, &mut rng);
            let st = sigma_act(&s, &t).unwrap();
            let rerouted = interp.interpret(&t).unwrap().permute_inputs(&s).unwrap();
            assert!(rerouted.max_abs_diff(&interp.interpret(&st).unwrap()) < 1e-12);
        }
    }
}
