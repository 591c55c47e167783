use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{json, Value};

use operaq::channels::decompose::pairing_residual;
use operaq::channels::json::ChannelJson;
use operaq::channels::{
    channel_distance_bound, intertwiner, is_cp, is_tp, kraus_from_choi, kraus_tensor_decompose, minimal_dilation,
    n_adjoint, stinespring_from_kraus, zigzag_check, KrausSet, MultilinearDilation, QuantumChannel,
};
use operaq::ideals::{
    adjoin_formal, broadcast_witness, clone_pattern_match, closure_check, ideal_inclusion_check, is_member, quotient,
    standard_pool, FormalGenerator, IdealError, IdealSpec, Pool, PoolOp,
};
use operaq::linalg::ComplexMatrix;
use operaq::monad::{
    algebra_law_suite, homomorphism_check, monad_law_suite, operational_equivalence, representation_of,
    stinespring_circuit, AlgebraMap,
};
use operaq::multilinear::{adjoint, adjoint_identity_residual, double_adjoint_residual, FeedbackProblem, MultilinearError, MultilinearVectorMap};
use operaq::operad::{operad_axiom_suite, Interpretation, InterpretationJson, OperadError, OperadSpec, OperadTerm};

use crate::io::{core, from_value, load, load_value, CliError};
use crate::{Cli, Command, Outcome};

const TOLERANCES: &[(&str, f64)] = &[
    ("cp", 1e-9),
    ("tp", 1e-9),
    ("rank", 1e-10),
    ("reconstruct", 1e-9),
    ("involution", 1e-12),
    ("intertwine", 1e-8),
    ("pairing", 1e-8),
    ("zigzag", 1e-9),
    ("picard", 1e-8),
    ("algebra", 1e-10),
    ("hom", 1e-9),
    ("equiv", 1e-9),
    ("realize", 1e-9),
];

struct Ctx<'a> {
    cli: &'a Cli,
    tol: BTreeMap<String, f64>,
    params: BTreeMap<String, u64>,
}

impl Ctx<'_> {
    fn tol(&self, key: &str) -> f64 {
        self.tol[key]
    }

    fn param(&self, key: &str, default: u64) -> u64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn input(&self, i: usize, what: &str) -> Result<&Path, CliError> {
        self.cli
            .inputs
            .get(i)
            .map(PathBuf::as_path)
            .ok_or_else(|| CliError::Usage(format!("{} needs input {} ({what})", self.cli.command.name(), i + 1)))
    }

    fn optional(&self, i: usize) -> Option<&Path> {
        self.cli.inputs.get(i).map(PathBuf::as_path)
    }

    fn channel(&self, i: usize) -> Result<QuantumChannel, CliError> {
        load::<ChannelJson>(self.input(i, "channel")?)?.to_channel().map_err(core)
    }

    fn interpretation(&self, i: usize) -> Result<Interpretation, CliError> {
        load::<InterpretationJson>(self.input(i, "interpretation")?)?.build().map_err(core)
    }

    /// A multilinear dilation, or a channel read through its Heisenberg dilation.
    fn dilation(&self, i: usize) -> Result<MultilinearDilation, CliError> {
        let path = self.input(i, "dilation or channel")?;
        let v = load_value(path)?;
        if v.get("factors").is_some() {
            return from_value(path, v);
        }
        let cj: ChannelJson = from_value(path, v)?;
        let ks = kraus_of(&cj)?;
        stinespring_from_kraus(&ks).heisenberg_dilation().map_err(core)
    }
}

fn kraus_of(cj: &ChannelJson) -> Result<KrausSet, CliError> {
    match cj.to_kraus() {
        Ok(ks) => Ok(ks),
        Err(_) => kraus_from_choi(&cj.to_channel().map_err(core)?, 1e-10).map_err(core),
    }
}

fn to_json<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

#[derive(Deserialize)]
struct TermInput {
    term: OperadTerm,
    #[serde(default)]
    args: Vec<ComplexMatrix>,
    #[serde(default)]
    adjoin: Vec<FormalGenerator>,
}

#[derive(Deserialize)]
struct PoolJson {
    dim: usize,
    ops: Vec<PoolOp>,
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let mut tol: BTreeMap<String, f64> = TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in &cli.tol {
        match tol.get_mut(k) {
            Some(slot) => *slot = *v,
            None => {
                let known: Vec<&str> = TOLERANCES.iter().map(|(k, _)| *k).collect();
                return Err(CliError::Usage(format!("unknown tolerance `{k}`; known: {}", known.join(", "))));
            }
        }
    }
    let ctx = Ctx {
        cli,
        tol,
        params: cli.params.iter().cloned().collect(),
    };
    let seed = cli.seed;
    log::info!("running {}", cli.command.name());
    match cli.command {
        Command::CheckCp => {
            let r = is_cp(&ctx.channel(0)?, ctx.tol("cp"));
            Ok(Outcome { pass: r.cp, report: to_json(&r) })
        }
        Command::CheckTp => {
            let r = is_tp(&ctx.channel(0)?, ctx.tol("tp"));
            Ok(Outcome { pass: r.tp, report: to_json(&r) })
        }
        Command::Choi => {
            let ch = ctx.channel(0)?;
            Ok(Outcome {
                pass: true,
                report: json!({"in_dim": ch.in_dim(), "out_dim": ch.out_dim(), "choi": ch.choi()}),
            })
        }
        Command::Kraus => {
            let ch = ctx.channel(0)?;
            let ks = kraus_from_choi(&ch, ctx.tol("rank")).map_err(core)?;
            let err = channel_distance_bound(&QuantumChannel::from_kraus(&ks).map_err(core)?, &ch).map_err(core)?;
            Ok(Outcome {
                pass: err <= ctx.tol("reconstruct"),
                report: json!({"kraus_rank": ks.len(), "channel": ChannelJson::from_kraus(&ks), "choi_error": err}),
            })
        }
        Command::Dilate => {
            let cj: ChannelJson = load(ctx.input(0, "channel")?)?;
            let ch = cj.to_channel().map_err(core)?;
            let d = stinespring_from_kraus(&kraus_of(&cj)?);
            let err = channel_distance_bound(&d.to_channel().map_err(core)?, &ch).map_err(core)?;
            Ok(Outcome {
                pass: err <= ctx.tol("reconstruct"),
                report: json!({
                    "in_dim": d.in_dim,
                    "out_dim": d.out_dim,
                    "env_dim": d.env_dim,
                    "isometry": d.isometry,
                    "isometry_defect": d.isometry_defect(),
                    "choi_error": err,
                }),
            })
        }
        Command::Minimal => {
            let d = ctx.dilation(0)?;
            let m = minimal_dilation(&d, ctx.tol("rank")).map_err(core)?;
            let r = m
                .as_operator_map()
                .map_err(core)?
                .max_abs_diff(&d.as_operator_map().map_err(core)?);
            Ok(Outcome {
                pass: r <= ctx.tol("reconstruct"),
                report: json!({
                    "carrier_before": d.carrier_dim(),
                    "carrier_after": m.carrier_dim(),
                    "map_residual": r,
                    "dilation": m,
                }),
            })
        }
        Command::Intertwine => {
            let a = ctx.dilation(0)?;
            let b = ctx.dilation(1)?;
            let (u, r) = intertwiner(&a, &b, ctx.tol("intertwine")).map_err(core)?;
            Ok(Outcome {
                pass: r.unitary && r.intertwining_residual <= ctx.tol("intertwine"),
                report: json!({"intertwiner": u, "checks": r}),
            })
        }
        Command::Adjoint => {
            let phi: MultilinearVectorMap = load(ctx.input(0, "multilinear map")?)?;
            let r = double_adjoint_residual(&phi);
            let id = adjoint_identity_residual(&phi).map_err(core)?;
            Ok(Outcome {
                pass: r <= ctx.tol("involution") && id <= ctx.tol("involution"),
                report: json!({"adjoint": adjoint(&phi), "double_adjoint_residual": r, "defining_identity_residual": id}),
            })
        }
        Command::Nadjoint => {
            let d = ctx.dilation(0)?;
            let dec = kraus_tensor_decompose(&d, ctx.tol("rank")).map_err(core)?;
            let adj = n_adjoint(&dec).map_err(core)?;
            let phi = d.as_operator_map().map_err(core)?;
            let pairing = pairing_residual(&phi, &adj).map_err(core)?;
            let recon = dec.to_operator_map().map_err(core)?.max_abs_diff(&phi);
            Ok(Outcome {
                pass: pairing <= ctx.tol("pairing") && recon <= ctx.tol("pairing"),
                report: json!({
                    "terms": dec.len(),
                    "reconstruction_residual": recon,
                    "pairing_residual": pairing,
                    "n_adjoint": adj,
                }),
            })
        }
        Command::Zigzag => {
            let r = zigzag_check(&ctx.dilation(0)?, ctx.tol("zigzag"));
            Ok(Outcome { pass: !r.flagged, report: to_json(&r) })
        }
        Command::Feedback => {
            let path = ctx.input(0, "feedback problem")?;
            let p: FeedbackProblem = load(path)?;
            p.validate().map_err(core)?;
            match p.solve() {
                Ok(sol) => {
                    let closed = p.closed_loop(&sol).map_err(core)?;
                    Ok(Outcome {
                        pass: sol.picard_gap.is_none_or(|g| g <= ctx.tol("picard")),
                        report: json!({
                            "well_posed": true,
                            "loop_gain": sol.loop_gain,
                            "contractive": sol.contractive,
                            "min_singular_value": sol.min_singular_value,
                            "picard_gap": sol.picard_gap,
                            "fixed_point_residual": sol.fixed_point_residual,
                            "loop_signal": sol.loop_signal,
                            "closed_loop": closed,
                        }),
                    })
                }
                Err(MultilinearError::IllPosedFeedback { min_sv }) => Ok(Outcome {
                    pass: false,
                    report: json!({"well_posed": false, "min_singular_value": min_sv}),
                }),
                Err(e) => Err(core(e)),
            }
        }
        Command::TermEval => {
            let interp = ctx.interpretation(0)?;
            let t: TermInput = load(ctx.input(1, "term")?)?;
            let value = interp.evaluate(&t.term, &t.args).map_err(core)?;
            Ok(Outcome {
                pass: true,
                report: json!({"arity": t.term.arity(), "value": value}),
            })
        }
        Command::OperadLaws => {
            let spec = optional_spec(&ctx)?;
            let r = operad_axiom_suite(&spec, ctx.param("trials", 500) as usize, seed);
            Ok(Outcome { pass: r.pass, report: to_json(&r) })
        }
        Command::MonadLaws => {
            let spec = optional_spec(&ctx)?;
            let r = monad_law_suite(&spec, ctx.param("trials", 500) as usize, seed);
            Ok(Outcome { pass: r.pass, report: to_json(&r) })
        }
        Command::AlgebraLaws => {
            let interp = ctx.interpretation(0)?;
            let alg = match ctx.optional(1) {
                Some(_) => representation_of(&ctx.channel(1)?, &interp).map_err(core)?,
                None => AlgebraMap::new(interp),
            };
            let r = algebra_law_suite(&alg, ctx.param("trials", 100) as usize, seed, ctx.tol("algebra")).map_err(core)?;
            Ok(Outcome { pass: r.pass, report: to_json(&r) })
        }
        Command::Homcheck => {
            let a = AlgebraMap::new(ctx.interpretation(0)?);
            let b = AlgebraMap::new(ctx.interpretation(1)?);
            let f = ctx.channel(2)?;
            let apply = |x: &ComplexMatrix| f.apply(x).map_err(operaq::monad::MonadError::from);
            let r = homomorphism_check(&apply, &a, &b, ctx.param("trials", 100) as usize, seed, ctx.tol("hom"))
                .map_err(core)?;
            Ok(Outcome { pass: r.pass, report: to_json(&r) })
        }
        Command::Opequiv => {
            let a = ctx.channel(0)?;
            let b = ctx.channel(1)?;
            let interp = ctx.interpretation(2)?;
            let r = operational_equivalence(&a, &b, &interp, ctx.param("trials", 20) as usize, seed, ctx.tol("equiv"))
                .map_err(core)?;
            Ok(Outcome { pass: r.equivalent, report: to_json(&r) })
        }
        Command::CircuitRealize => {
            let ch = ctx.channel(0)?;
            let s = stinespring_circuit(&ch).map_err(core)?;
            let dist = s.choi_distance(&ch).map_err(core)?;
            Ok(Outcome {
                pass: dist <= ctx.tol("realize"),
                report: json!({
                    "circuit": s.circuit,
                    "ancilla_dim": s.ancilla_dim,
                    "env_dim": s.env_dim,
                    "unitary": s.unitary,
                    "choi_distance": dist,
                }),
            })
        }
        Command::IdealMember => {
            let spec: IdealSpec = load(ctx.input(0, "ideal")?)?;
            let m = is_member(&spec, &ctx.channel(1)?).map_err(core)?;
            Ok(Outcome { pass: m.member, report: to_json(&m) })
        }
        Command::IdealClosure => {
            let spec: IdealSpec = load(ctx.input(0, "ideal")?)?;
            let pool = match ctx.optional(1) {
                Some(p) => {
                    let pj: PoolJson = load(p)?;
                    Pool::from_json(pj.dim, &pj.ops).map_err(core)?
                }
                None => standard_pool(seed).map_err(core)?,
            };
            let trials = ctx.param("trials", 1000) as usize;
            let r = closure_check(&spec, &pool, trials, seed).map_err(core)?;
            let mut pass = r.pass;
            let mut report = json!({"pool": pool.names(), "closure": r});
            if let Some(p) = ctx.optional(2) {
                let outer: IdealSpec = load(p)?;
                let inc = ideal_inclusion_check(&spec, &outer, &pool, trials.min(100), seed).map_err(core)?;
                pass &= inc.pass;
                report["inclusion"] = to_json(&inc);
            }
            Ok(Outcome { pass, report })
        }
        Command::Quotient => {
            let interp = ctx.interpretation(0)?;
            let spec: IdealSpec = load(ctx.input(1, "ideal")?)?;
            let t: TermInput = load(ctx.input(2, "term")?)?;
            let interp = with_formal(interp, &t.adjoin)?;
            let q = quotient(&t.term, &spec, &interp).map_err(core)?;
            Ok(Outcome {
                pass: true,
                report: json!({"collapsed": q.contains_bottom(), "quotient": q}),
            })
        }
        Command::NogoBroadcast => {
            let d = ctx.param("d", 2) as usize;
            let r = broadcast_witness(d, ctx.param("states", 4) as usize, seed).map_err(core)?;
            Ok(Outcome { pass: r.certified, report: to_json(&r) })
        }
        Command::CloneMatch => {
            let interp = ctx.interpretation(0)?;
            let t: TermInput = load(ctx.input(1, "term")?)?;
            let interp = with_formal(interp, &t.adjoin)?;
            let d = ctx.param("d", interp.carrier() as u64) as usize;
            match clone_pattern_match(&t.term, &interp, d, ctx.param("trials", 20) as usize, seed) {
                Ok(r) => Ok(Outcome { pass: !r.matched, report: to_json(&r) }),
                Err(IdealError::Operad(OperadError::NonLinearGenerator(s))) => Ok(Outcome {
                    pass: true,
                    report: json!({"uninterpretable": true, "formal_generator": s}),
                }),
                Err(e) => Err(core(e)),
            }
        }
    }
}

fn optional_spec(ctx: &Ctx) -> Result<OperadSpec, CliError> {
    match ctx.optional(0) {
        Some(p) => load(p),
        None => Ok(OperadSpec::with_arities(&[1, 2, 3])),
    }
}

fn with_formal(interp: Interpretation, gens: &[FormalGenerator]) -> Result<Interpretation, CliError> {
    if gens.is_empty() {
        return Ok(interp);
    }
    let mut spec = interp.spec().clone();
    for g in gens {
        spec = adjoin_formal(&spec, *g).map_err(core)?;
    }
    let mut out = Interpretation::new(spec, interp.carrier());
    for (name, m) in interp.maps() {
        out.assign(name, m.clone()).map_err(core)?;
    }
    Ok(out)
}
