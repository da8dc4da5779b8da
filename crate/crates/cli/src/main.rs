//! Single binary exposing the graph and model queries over JSON files.
//!
//! Results are written as single-line JSON on standard output; diagnostics
//! go to standard error. Exit code 0 covers both positive and negative
//! answers (a FAIL from the identification algorithm is an answer), 2 means
//! malformed input, 3 an internal error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use cyclid_core::adjustment::{
    check_general_adjustment_report, check_partial_external_report,
    check_selection_without_external_report, check_special_case, find_adjustment_sets,
    AdjustmentSpec, PartialExternalSpec, SpecialCase,
};
use cyclid_core::calculus::{check_rule, Rule, RuleQuery};
use cyclid_core::dmg::{Dmg, NodeId, NodeSet};
use cyclid_core::identify::{id, IdQuery};
use cyclid_core::scm::{DiscreteScm, LinearScm};
use cyclid_core::separation::{oracle_witness, separated, Notion, SeparationQuery};
use serde::Deserialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

const GRAPH_FORMAT_VERSION: &str = "1";

#[derive(Parser)]
#[command(name = "cyclid", version = concat!(env!("CARGO_PKG_VERSION"), " (graph-format 1)"))]
#[command(about = "Separation, causal calculus, adjustment, and identification on cyclic directed mixed graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum NotionArg {
    Sigma,
    D,
}

#[derive(Subcommand)]
enum Command {
    /// Decide sigma- or d-separation of node sets
    Sep {
        #[arg(long, value_enum, default_value = "sigma")]
        notion: NotionArg,
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        c: Vec<String>,
        /// Also emit a connecting walk (walk-oracle path, small graphs only)
        #[arg(long)]
        witness: bool,
        graph: PathBuf,
    },
    /// Latent projection onto the remaining nodes
    Marginalize {
        #[arg(long, value_delimiter = ',', required = true)]
        w: Vec<String>,
        graph: PathBuf,
    },
    /// Collapse strongly connected components into an ADMG
    Acyclify { graph: PathBuf },
    /// Attach an indicator input to every output node
    Extend { graph: PathBuf },
    /// Merge the graph with its do(w) mutilation on shared non-descendants
    Twin {
        #[arg(long, value_delimiter = ',', required = true)]
        w: Vec<String>,
        graph: PathBuf,
    },
    /// Check one rule of causal calculus
    Calculus {
        #[arg(long)]
        rule: u8,
        #[arg(long, value_delimiter = ',')]
        x: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        y: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        z: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        w: Vec<String>,
        #[arg(long)]
        condition_on_inputs: bool,
        graph: PathBuf,
    },
    /// Check or search adjustment criteria
    Adjust {
        #[command(subcommand)]
        action: AdjustAction,
    },
    /// Identify a causal effect; FAIL is an answer, not an error
    Id {
        #[arg(long, value_delimiter = ',', required = true)]
        y: Vec<String>,
        #[arg(long = "do", value_delimiter = ',')]
        do_set: Vec<String>,
        graph: PathBuf,
    },
    /// Evaluate model laws, draw samples, or enumerate discrete joints
    Simulate {
        #[command(subcommand)]
        action: SimulateAction,
    },
    /// Validate a graph or model file
    Validate { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    General,
    Backdoor,
    ExtendedBackdoor,
    SelectionBackdoor,
    GeneralSelectionBackdoor,
    NoExternal,
    PartialExternal,
}

#[derive(Subcommand)]
enum AdjustAction {
    /// Check a role assignment against a criterion
    Check(AdjustArgs),
    /// Exhaustively search role assignments over the unclaimed outputs
    Find {
        #[arg(long)]
        roles: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_size: usize,
        graph: PathBuf,
    },
}

#[derive(Args)]
struct AdjustArgs {
    #[arg(long)]
    roles: PathBuf,
    #[arg(long, value_enum, default_value = "general")]
    case: CaseArg,
    graph: PathBuf,
}

#[derive(Subcommand)]
enum SimulateAction {
    /// Closed-form observational law of a linear model
    Law {
        /// Input values as a JSON object, e.g. '{"j":0.5}'
        #[arg(long, default_value = "{}")]
        inputs: String,
        model: PathBuf,
    },
    /// Draw i.i.d. samples from a model
    Sample {
        #[arg(long, default_value = "{}")]
        inputs: String,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        model: PathBuf,
    },
    /// Enumerate the exact joint tables of a discrete model
    Joint { model: PathBuf },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum ModelFile {
    Linear(LinearScm),
    Discrete(DiscreteScm),
}

enum CliError {
    Input(String),
    Internal(String),
}

impl From<cyclid_core::Error> for CliError {
    fn from(e: cyclid_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn nodes(v: &[String]) -> NodeSet {
    v.iter().map(NodeId::new).collect()
}

fn read_file(path: &PathBuf) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_graph(path: &PathBuf) -> CliResult<(Dmg, String)> {
    let text = read_file(path)?;
    let g = Dmg::from_json(&text)?;
    let digest = hex_digest(&g.to_json());
    Ok((g, digest))
}

fn load_model(path: &PathBuf) -> CliResult<(ModelFile, String)> {
    let text = read_file(path)?;
    let m: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("cannot parse model {}: {e}", path.display())))?;
    let canon = match &m {
        ModelFile::Linear(l) => serde_json::to_string(l).expect("model serializes"),
        ModelFile::Discrete(d) => serde_json::to_string(d).expect("model serializes"),
    };
    Ok((m, hex_digest(&canon)))
}

fn hex_digest(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    let out = h.finalize();
    out.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn emit(mut payload: Value, input_digest: &str) {
    let obj = payload.as_object_mut().expect("payload is an object");
    obj.insert("status".into(), json!("ok"));
    obj.insert(
        "provenance".into(),
        json!({
            "input_sha256": input_digest,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "graph_format": GRAPH_FORMAT_VERSION,
        }),
    );
    println!("{}", serde_json::to_string(&payload).expect("payload serializes"));
}

fn graph_value(g: &Dmg) -> Value {
    serde_json::to_value(g).expect("graph serializes")
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Sep {
            notion,
            a,
            b,
            c,
            witness,
            graph,
        } => {
            let (g, digest) = load_graph(&graph)?;
            let q = SeparationQuery::new(
                nodes(&a),
                nodes(&b),
                nodes(&c),
                match notion {
                    NotionArg::Sigma => Notion::Sigma,
                    NotionArg::D => Notion::D,
                },
            );
            let sep = separated(&g, &q)?;
            let walk: Option<Vec<String>> = if witness && !sep {
                oracle_witness(&g, &q)?.map(|w| w.iter().map(|v| v.to_string()).collect())
            } else {
                None
            };
            emit(json!({ "separated": sep, "witness_walk": walk }), &digest);
        }
        Command::Marginalize { w, graph } => {
            let (g, digest) = load_graph(&graph)?;
            emit(
                json!({ "graph": graph_value(&g.marginalize(&nodes(&w))?) }),
                &digest,
            );
        }
        Command::Acyclify { graph } => {
            let (g, digest) = load_graph(&graph)?;
            emit(json!({ "graph": graph_value(&g.acyclify()) }), &digest);
        }
        Command::Extend { graph } => {
            let (g, digest) = load_graph(&graph)?;
            emit(json!({ "graph": graph_value(&g.extend()?) }), &digest);
        }
        Command::Twin { w, graph } => {
            let (g, digest) = load_graph(&graph)?;
            let (twin, map) = g.twin_graph_with_map(&nodes(&w))?;
            let map: BTreeMap<String, String> = map
                .into_iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect();
            emit(
                json!({ "graph": graph_value(&twin), "interventional_copy": map }),
                &digest,
            );
        }
        Command::Calculus {
            rule,
            x,
            y,
            z,
            w,
            condition_on_inputs,
            graph,
        } => {
            let (g, digest) = load_graph(&graph)?;
            let q = RuleQuery {
                rule: Rule::from_number(rule)?,
                x: nodes(&x),
                y: nodes(&y),
                z: nodes(&z),
                w: nodes(&w),
                condition_on_inputs,
            };
            let verdict = check_rule(&g, &q)?;
            emit(
                json!({
                    "applicable": verdict.applicable,
                    "conclusion": verdict.conclusion,
                    "separation_checked": serde_json::to_value(&verdict.separation_checked).unwrap(),
                }),
                &digest,
            );
        }
        Command::Adjust { action } => run_adjust(action)?,
        Command::Id { y, do_set, graph } => {
            let (g, digest) = load_graph(&graph)?;
            let q = IdQuery {
                y: nodes(&y),
                w: nodes(&do_set),
            };
            let estimand = id(&g, &q)?;
            let identifiable = !estimand.is_fail();
            emit(
                json!({
                    "identifiable": identifiable,
                    "estimand": identifiable.then(|| estimand.render()),
                    "tree": identifiable.then(|| serde_json::to_value(&estimand).unwrap()),
                }),
                &digest,
            );
        }
        Command::Simulate { action } => run_simulate(action)?,
        Command::Validate { file } => run_validate(&file)?,
    }
    Ok(())
}

fn load_roles<T: for<'de> Deserialize<'de>>(path: &PathBuf) -> CliResult<T> {
    let text = read_file(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("cannot parse roles {}: {e}", path.display())))
}

fn run_adjust(action: AdjustAction) -> CliResult<()> {
    match action {
        AdjustAction::Check(args) => {
            let (g, digest) = load_graph(&args.graph)?;
            let report = match args.case {
                CaseArg::General => {
                    check_general_adjustment_report(&g, &load_roles::<AdjustmentSpec>(&args.roles)?)?
                }
                CaseArg::NoExternal => check_selection_without_external_report(
                    &g,
                    &load_roles::<AdjustmentSpec>(&args.roles)?,
                )?,
                CaseArg::PartialExternal => check_partial_external_report(
                    &g,
                    &load_roles::<PartialExternalSpec>(&args.roles)?,
                )?,
                special => {
                    let case = match special {
                        CaseArg::Backdoor => SpecialCase::Backdoor,
                        CaseArg::ExtendedBackdoor => SpecialCase::ExtendedBackdoor,
                        CaseArg::SelectionBackdoor => SpecialCase::SelectionBackdoor,
                        _ => SpecialCase::GeneralSelectionBackdoor,
                    };
                    let spec = load_roles::<AdjustmentSpec>(&args.roles)?;
                    let (applicable, formula) = check_special_case(&g, &spec, case)?;
                    emit(
                        json!({
                            "applicable": applicable,
                            "formula": formula.as_ref().map(|f| f.text.clone()),
                        }),
                        &digest,
                    );
                    return Ok(());
                }
            };
            emit(
                json!({
                    "applicable": report.applicable,
                    "conditions": report
                        .conditions
                        .iter()
                        .map(|(name, ok)| json!({ "condition": name, "holds": ok }))
                        .collect::<Vec<_>>(),
                    "formula": report.formula.as_ref().map(|f| f.text.clone()),
                }),
                &digest,
            );
        }
        AdjustAction::Find {
            roles,
            max_size,
            graph,
        } => {
            #[derive(Deserialize)]
            struct FindRoles {
                y: NodeSet,
                x: NodeSet,
                #[serde(default)]
                c: NodeSet,
                #[serde(default)]
                s: NodeSet,
                #[serde(default)]
                w: NodeSet,
            }
            let (g, digest) = load_graph(&graph)?;
            let r: FindRoles = load_roles(&roles)?;
            let found = find_adjustment_sets(&g, &r.y, &r.x, &r.c, &r.s, &r.w, max_size)?;
            emit(
                json!({
                    "assignments": found
                        .iter()
                        .map(|a| json!({ "z0": a.z0, "zplus": a.zplus, "l": a.l }))
                        .collect::<Vec<_>>(),
                }),
                &digest,
            );
        }
    }
    Ok(())
}

fn parse_input_values<T: for<'de> Deserialize<'de>>(inputs: &str) -> CliResult<T> {
    serde_json::from_str(inputs)
        .map_err(|e| CliError::Input(format!("cannot parse --inputs: {e}")))
}

fn run_simulate(action: SimulateAction) -> CliResult<()> {
    match action {
        SimulateAction::Law { inputs, model } => {
            let (m, digest) = load_model(&model)?;
            let ModelFile::Linear(l) = m else {
                return Err(CliError::Input(
                    "simulate law expects a linear model".into(),
                ));
            };
            let xj: BTreeMap<NodeId, f64> = parse_input_values(&inputs)?;
            let (mean, cov) = l.observational_law(&xj)?;
            let order: Vec<String> = l.outputs().iter().map(|v| v.to_string()).collect();
            let cov_rows: Vec<Vec<f64>> = (0..cov.nrows())
                .map(|r| (0..cov.ncols()).map(|c| cov[(r, c)]).collect())
                .collect();
            emit(
                json!({
                    "order": order,
                    "mean": mean.iter().copied().collect::<Vec<f64>>(),
                    "cov": cov_rows,
                }),
                &digest,
            );
        }
        SimulateAction::Sample {
            inputs,
            n,
            seed,
            model,
        } => {
            let (m, digest) = load_model(&model)?;
            match m {
                ModelFile::Linear(l) => {
                    let xj: BTreeMap<NodeId, f64> = parse_input_values(&inputs)?;
                    let rows = l.sample(&xj, n, seed)?;
                    let columns: Vec<String> = l.outputs().iter().map(|v| v.to_string()).collect();
                    emit(json!({ "columns": columns, "rows": rows }), &digest);
                }
                ModelFile::Discrete(d) => {
                    let xj: BTreeMap<NodeId, usize> = parse_input_values(&inputs)?;
                    let rows = d.sample(&xj, n, seed)?;
                    let columns: Vec<String> =
                        d.outputs().iter().map(|(v, _)| v.to_string()).collect();
                    emit(json!({ "columns": columns, "rows": rows }), &digest);
                }
            }
        }
        SimulateAction::Joint { model } => {
            let (m, digest) = load_model(&model)?;
            let ModelFile::Discrete(d) = m else {
                return Err(CliError::Input(
                    "simulate joint expects a discrete model".into(),
                ));
            };
            let joint = d.enumerate_joint()?;
            let tables: Vec<Value> = joint
                .tables
                .iter()
                .map(|(key, table)| {
                    let assignment: BTreeMap<String, usize> = joint
                        .inputs
                        .iter()
                        .zip(key)
                        .map(|((j, _), &v)| (j.to_string(), v))
                        .collect();
                    json!({ "inputs": assignment, "probs": table.values() })
                })
                .collect();
            emit(
                json!({
                    "outputs": joint
                        .outputs
                        .iter()
                        .map(|(v, k)| json!({ "id": v, "domain": k }))
                        .collect::<Vec<_>>(),
                    "tables": tables,
                }),
                &digest,
            );
        }
    }
    Ok(())
}

fn run_validate(file: &PathBuf) -> CliResult<()> {
    let text = read_file(file)?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("not JSON: {e}")))?;
    let is_model = value.get("type").is_some();
    if is_model {
        match serde_json::from_value::<ModelFile>(value) {
            Ok(ModelFile::Linear(l)) => {
                let digest = hex_digest(&serde_json::to_string(&l).unwrap());
                emit(json!({ "valid": true, "kind": "linear", "violations": [] }), &digest);
            }
            Ok(ModelFile::Discrete(d)) => {
                let digest = hex_digest(&serde_json::to_string(&d).unwrap());
                let violations = d.validate_compatibility()?;
                emit(
                    json!({
                        "valid": violations.is_empty(),
                        "kind": "discrete",
                        "violations": serde_json::to_value(&violations).unwrap(),
                    }),
                    &digest,
                );
            }
            Err(e) => {
                emit(json!({ "valid": false, "violations": [e.to_string()] }), "");
            }
        }
    } else {
        match serde_json::from_value::<Dmg>(value) {
            Ok(g) => {
                let digest = hex_digest(&g.to_json());
                emit(
                    json!({
                        "valid": true,
                        "kind": "graph",
                        "violations": [],
                        "warnings": g.latent_redundancy_warnings(),
                    }),
                    &digest,
                );
            }
            Err(e) => {
                emit(json!({ "valid": false, "kind": "graph", "violations": [e.to_string()] }), "");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(cli)))
        .unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            Err(CliError::Internal(msg))
        });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            println!("{}", json!({ "status": "error", "error": msg }));
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            println!("{}", json!({ "status": "error", "error": msg }));
            ExitCode::from(3)
        }
    }
}
