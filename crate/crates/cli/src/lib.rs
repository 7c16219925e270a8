//! Command-line front end for `dirform`.
//!
//! Every subcommand prints one JSON report
//! `{"command", "inputs", "result", "status", "certificates"}` and exits with
//! 0 on success, 1 on a negative verdict, 2 on bad input and 3 when a solver
//! fails.

use std::ffi::OsString;
use std::fs;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use dirform::decomposition::{
    counterexample_suite, ideal_check, is_extension, is_silverstein_extension, killing_part,
    main_part, plateau_cutoff, reflected_energy, FiniteForm,
};
use dirform::forms::{
    apply_contraction, approximating_form_minimizer, bilinear, energy, energy_phi, jump_energy,
    killing_energy, laplacian, laplacian_at, laplacian_on_defined, NormalContraction, PhiMode,
};
use dirform::harmonic::{
    classify_exhaustion, conservation_defect, is_excessive, recurrence_meta_check, weak_residual,
    ClassifyConfig, ConservationConfig, ConservationVerdict, ExhaustionVerdict,
};
use dirform::potentials::{
    capacity, check_transient, extended_potential, extended_resolvent, minimality_check,
    reduite_with, resolvent, restricted_potential, LimitConfig, ObstacleConfig, PotentialResult,
};
use dirform::structure::{
    classify_finite, components_within, is_invariant, is_irreducible, Verdict,
};
use dirform::{
    generate_with, Exhaustion, Family, Functional, Graph, Vertex, VertexFunction, VertexSet,
};

const GENERATOR_HELP: &str = "\
Generator specs (--generate) use `family:key=val,...`:
  path:n=N             path 0 - 1 - ... - (N-1)
  cycle:n=N            ring on N >= 3 vertices
  tree:b=B,d=D         rooted B-ary tree of depth D (also branching=, depth=)
  ray:n=N,beta=X       path with b(k,k+1) = X^k (also growth=)
Every family accepts m=X (uniform measure) and c=X (uniform killing).

Functions are JSON maps {\"id\": value} (unlisted vertices are 0); vertex
sets are JSON arrays of ids.";

/// Library operation ↦ the subcommand (or global input flag) that reaches it.
pub const COVERAGE: &[(&str, &str)] = &[
    ("graph::generate", "--generate"),
    ("graph::generate_with", "--generate"),
    ("graph::Graph::from_json", "--graph"),
    ("graph::Graph::ball", "--probe-radius"),
    ("forms::jump_energy", "energy"),
    ("forms::killing_energy", "energy"),
    ("forms::energy", "energy"),
    ("forms::apply_contraction", "energy"),
    ("forms::bilinear", "bilinear"),
    ("forms::laplacian_at", "lap"),
    ("forms::laplacian", "lap"),
    ("forms::laplacian_on_defined", "lap"),
    ("forms::energy_phi", "decompose"),
    ("forms::approximating_form", "approx-form"),
    ("forms::approximating_form_minimizer", "approx-form"),
    ("structure::components", "classify"),
    ("structure::components_within", "classify"),
    ("structure::is_invariant", "classify"),
    ("structure::is_irreducible", "classify"),
    ("structure::kernel_basis", "classify"),
    ("structure::classify_finite", "classify"),
    ("potentials::check_transient", "potential"),
    ("potentials::restricted_potential", "potential"),
    ("potentials::extended_potential", "potential"),
    ("potentials::minimality_check", "potential"),
    ("potentials::resolvent", "resolvent"),
    ("potentials::extended_resolvent", "resolvent"),
    ("potentials::reduite", "reduite"),
    ("potentials::reduite_with", "reduite"),
    ("potentials::capacity", "capacity"),
    ("decomposition::plateau_cutoff", "decompose"),
    ("decomposition::main_part", "decompose"),
    ("decomposition::killing_part", "decompose"),
    ("decomposition::reflected_energy", "decompose"),
    ("decomposition::ideal_check", "ideal-check"),
    ("decomposition::is_extension", "ideal-check"),
    ("decomposition::is_silverstein_extension", "ideal-check"),
    (
        "decomposition::strictly_larger_silverstein_extensions",
        "counterexamples",
    ),
    ("decomposition::two_point_forms", "counterexamples"),
    ("decomposition::periodic_forms", "counterexamples"),
    ("decomposition::counterexample_suite", "counterexamples"),
    ("harmonic::weak_residual", "lap"),
    ("harmonic::is_excessive", "excessive"),
    ("harmonic::classify_exhaustion", "classify-inf"),
    ("harmonic::conservation_defect", "conserve"),
    ("harmonic::recurrence_meta_check", "classify"),
];

#[derive(Parser, Debug)]
#[command(name = "dirform", version, about = "Energy forms on weighted graphs with killing", after_help = GENERATOR_HELP)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Graph document to load
    #[arg(long, global = true, value_name = "PATH")]
    pub graph: Option<String>,
    /// Generate a fixture instead of loading one
    #[arg(long, global = true, value_name = "SPEC")]
    pub generate: Option<String>,
    /// Root vertex id (defaults to the first vertex)
    #[arg(long, global = true, value_name = "ID")]
    pub root: Option<String>,
    #[arg(long, global = true, value_name = "X", default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, global = true, value_name = "X", default_value_t = 1e-8)]
    pub tol: f64,
    /// Number of exhaustion levels (balls of radius 0..N-1 around the root)
    #[arg(long, global = true, value_name = "N", default_value_t = 64)]
    pub levels: usize,
    /// Probe set is the ball of this radius around the root
    #[arg(long, global = true, value_name = "R", default_value_t = 2)]
    pub probe_radius: usize,
    /// Vertex set, a JSON array of ids
    #[arg(long, global = true, value_name = "JSON")]
    pub set: Option<String>,
    /// Vertex function, a JSON map of id to value
    #[arg(long = "fn", global = true, value_name = "JSON")]
    pub function: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Definition,
    Formula,
}

#[derive(Args, Debug, Clone)]
pub struct ObstacleArgs {
    /// Constraint set U, a JSON array of ids
    #[arg(long, value_name = "JSON")]
    pub window: String,
    /// Obstacle function (defaults to the indicator of U)
    #[arg(long, value_name = "JSON")]
    pub obstacle: Option<String>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Energy of --fn, optionally after a normal contraction
    Energy {
        /// unit_cutoff, abs, positive_part, clamp(N), eps_cutoff(E), shrink(A)
        #[arg(long)]
        contraction: Option<String>,
    },
    /// Bilinear form of --fn and --fn2
    Bilinear {
        #[arg(long = "fn2", value_name = "JSON")]
        other: String,
    },
    /// Formal Laplacian of --fn
    Lap {
        #[arg(long, value_name = "JSON")]
        window: Option<String>,
        /// Vertices where --fn is defined
        #[arg(long, value_name = "JSON")]
        defined: Option<String>,
        /// Report the value at a single vertex
        #[arg(long, value_name = "ID")]
        at: Option<String>,
        /// Right-hand side functional; reports the weak residual
        #[arg(long, value_name = "JSON")]
        rhs: Option<String>,
    },
    /// Resolvent G_α f on --set, or along the exhaustion when --set is absent
    Resolvent,
    /// Potential G ℓ on --set or along the exhaustion; minimality of --fn
    Potential {
        /// Functional coefficients (defaults to the delta at the root)
        #[arg(long, value_name = "JSON")]
        ell: Option<String>,
        /// Check --fn against G^N ℓ instead of solving
        #[arg(long)]
        supersolution: bool,
    },
    /// Capacity of the obstacle problem on --set
    Capacity(ObstacleArgs),
    /// Réduite of the obstacle on --set
    Reduite {
        #[command(flatten)]
        obstacle: ObstacleArgs,
        #[arg(long, default_value_t = 1.5)]
        omega: f64,
        #[arg(long, default_value_t = 100_000)]
        max_sweeps: usize,
    },
    /// Components, kernel and recurrent/transient split of a finite graph
    Classify {
        /// Also run the superharmonic characterization with this many probes
        #[arg(long, value_name = "SAMPLES")]
        meta: Option<usize>,
    },
    /// Recurrence along the ball exhaustion around --root
    ClassifyInf {
        #[arg(long, default_value_t = 0.6)]
        ratio: f64,
        #[arg(long, default_value_t = 10.0)]
        separation: f64,
    },
    /// Conservation defect 1 − αG_α1 − G_αk on the probe set
    Conserve {
        #[arg(long, default_value_t = 10.0)]
        separation: f64,
    },
    /// Main part, killing part and reflected energy of --fn
    Decompose {
        /// Cutoff φ for E_φ(f)
        #[arg(long, value_name = "JSON")]
        phi: Option<String>,
        #[arg(long, value_enum, default_value_t = Mode::Formula)]
        mode: Mode,
    },
    /// Ideal and extension checks between two finite forms
    IdealCheck {
        #[arg(long, value_name = "PATH")]
        form_a: String,
        #[arg(long, value_name = "PATH")]
        form_b: String,
    },
    /// Whether --fn is excessive on the window
    Excessive {
        #[arg(long, value_name = "JSON")]
        window: Option<String>,
    },
    /// Two-point forms without a maximal Silverstein extension
    Counterexamples,
    /// Approximating form E^(α)_U(f)
    ApproxForm {
        #[arg(long, value_name = "JSON")]
        window: Option<String>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Energy { .. } => "energy",
            Command::Bilinear { .. } => "bilinear",
            Command::Lap { .. } => "lap",
            Command::Resolvent => "resolvent",
            Command::Potential { .. } => "potential",
            Command::Capacity(_) => "capacity",
            Command::Reduite { .. } => "reduite",
            Command::Classify { .. } => "classify",
            Command::ClassifyInf { .. } => "classify-inf",
            Command::Conserve { .. } => "conserve",
            Command::Decompose { .. } => "decompose",
            Command::IdealCheck { .. } => "ideal-check",
            Command::Excessive { .. } => "excessive",
            Command::Counterexamples => "counterexamples",
            Command::ApproxForm { .. } => "approx-form",
        }
    }
}

/// Names of all subcommands and global flags, as clap sees them.
pub fn entry_points() -> (Vec<String>, Vec<String>) {
    let cmd = Cli::command();
    let subcommands = cmd
        .get_subcommands()
        .map(|s| s.get_name().to_string())
        .collect();
    let flags = cmd
        .get_arguments()
        .filter(|a| a.is_global_set())
        .filter_map(|a| a.get_long().map(|l| format!("--{l}")))
        .collect();
    (subcommands, flags)
}

#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

enum Failure {
    Input(String),
    Library(dirform::Error),
}

impl From<dirform::Error> for Failure {
    fn from(e: dirform::Error) -> Self {
        Failure::Library(e)
    }
}

type Run<T> = std::result::Result<T, Failure>;

fn input<T>(msg: impl Into<String>) -> Run<T> {
    Err(Failure::Input(msg.into()))
}

struct Report {
    inputs: Value,
    result: Value,
    negative: bool,
    certificates: Value,
}

pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let name = cli.command.name();
    match dispatch(&cli) {
        Ok(report) => {
            let doc = json!({
                "command": name,
                "inputs": report.inputs,
                "result": report.result,
                "status": if report.negative { "negative" } else { "ok" },
                "certificates": report.certificates,
            });
            let mut stdout = serde_json::to_string_pretty(&doc).expect("reports serialize");
            stdout.push('\n');
            Outcome {
                code: i32::from(report.negative),
                stdout,
                stderr: String::new(),
            }
        }
        Err(Failure::Input(msg)) => Outcome {
            code: 2,
            stdout: String::new(),
            stderr: format!("dirform {name}: {msg}\n"),
        },
        Err(Failure::Library(e)) => Outcome {
            code: if e.is_solver_failure() { 3 } else { 2 },
            stdout: String::new(),
            stderr: format!("dirform {name}: {e}\n"),
        },
    }
}

fn parse_generator(spec: &str) -> Run<Graph> {
    let (family, params) = spec.split_once(':').unwrap_or((spec, ""));
    let mut values: Vec<(String, f64)> = Vec::new();
    for pair in params.split(',').filter(|p| !p.is_empty()) {
        let Some((k, v)) = pair.split_once('=') else {
            return input(format!("generator parameter `{pair}` is not key=value"));
        };
        let Ok(v) = v.trim().parse::<f64>() else {
            return input(format!("generator parameter `{k}` is not a number"));
        };
        values.push((k.trim().to_string(), v));
    }
    let take = |keys: &[&str]| {
        values
            .iter()
            .find(|(k, _)| keys.contains(&k.as_str()))
            .map(|(_, v)| *v)
    };
    let count = |keys: &[&str]| -> Run<usize> {
        match take(keys) {
            Some(v) if v >= 0.0 && v.fract() == 0.0 => Ok(v as usize),
            Some(_) => input(format!("`{}` must be a nonnegative integer", keys[0])),
            None => input(format!("generator `{family}` needs `{}`", keys[0])),
        }
    };
    let known: &[&str] = match family {
        "path" | "cycle" => &["n", "m", "c"],
        "tree" => &["b", "branching", "d", "depth", "m", "c"],
        "ray" => &["n", "beta", "growth", "m", "c"],
        _ => return input(format!("unknown generator family `{family}`")),
    };
    if let Some((k, _)) = values.iter().find(|(k, _)| !known.contains(&k.as_str())) {
        return input(format!("generator `{family}` has no parameter `{k}`"));
    }
    let fam = match family {
        "path" => Family::Path { n: count(&["n"])? },
        "cycle" => Family::Cycle { n: count(&["n"])? },
        "tree" => Family::Tree {
            branching: count(&["b", "branching"])?,
            depth: count(&["d", "depth"])?,
        },
        _ => Family::Ray {
            n: count(&["n"])?,
            growth: take(&["beta", "growth"]).unwrap_or(1.0),
        },
    };
    Ok(generate_with(
        fam,
        take(&["m"]).unwrap_or(1.0),
        take(&["c"]).unwrap_or(0.0),
    )?)
}

fn load_graph(common: &Common) -> Run<Graph> {
    match (&common.graph, &common.generate) {
        (Some(_), Some(_)) => input("pass only one of --graph and --generate"),
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Input(format!("cannot read {path}: {e}")))?;
            Ok(Graph::from_json(&text)?)
        }
        (None, Some(spec)) => parse_generator(spec),
        (None, None) => input("a graph is required (--graph PATH or --generate SPEC)"),
    }
}

fn parse_json(what: &str, text: &str) -> Run<Value> {
    serde_json::from_str(text).map_err(|e| Failure::Input(format!("{what} is not valid JSON: {e}")))
}

fn id_of(v: &Value) -> Run<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => input(format!("vertex id must be a string, got {v}")),
    }
}

fn parse_set(g: &Graph, what: &str, text: &str) -> Run<VertexSet> {
    let Value::Array(items) = parse_json(what, text)? else {
        return input(format!("{what} must be a JSON array of vertex ids"));
    };
    let ids = items.iter().map(id_of).collect::<Run<Vec<_>>>()?;
    Ok(g.set_from_ids(ids.iter().map(String::as_str))?)
}

fn parse_function(g: &Graph, what: &str, text: &str) -> Run<VertexFunction> {
    let Value::Object(map) = parse_json(what, text)? else {
        return input(format!("{what} must be a JSON map of vertex id to value"));
    };
    let mut pairs = Vec::with_capacity(map.len());
    for (id, v) in &map {
        let Some(x) = v.as_f64() else {
            return input(format!("{what}: value at `{id}` is not a number"));
        };
        pairs.push((id.as_str(), x));
    }
    Ok(g.function_from_pairs(pairs)?)
}

fn required_fn(g: &Graph, common: &Common) -> Run<VertexFunction> {
    match &common.function {
        Some(text) => parse_function(g, "--fn", text),
        None => input("--fn is required"),
    }
}

fn set_or_all(g: &Graph, what: &str, text: &Option<String>) -> Run<VertexSet> {
    match text {
        Some(t) => parse_set(g, what, t),
        None => Ok(g.all()),
    }
}

fn root_of(g: &Graph, common: &Common) -> Run<Vertex> {
    match &common.root {
        Some(id) => Ok(g.vertex(id)?),
        None if g.is_empty() => input("graph has no vertices"),
        None => Ok(0),
    }
}

fn exhaustion(g: &Graph, common: &Common, root: Vertex) -> Run<Exhaustion> {
    Ok(Exhaustion::balls(g, root, common.levels - 1)?)
}

fn fn_json(g: &Graph, f: &VertexFunction) -> Value {
    let mut map = Map::new();
    for x in 0..g.len() {
        map.insert(g.id(x).to_string(), json!(f[x]));
    }
    Value::Object(map)
}

fn set_json(g: &Graph, s: &VertexSet) -> Value {
    Value::Array(s.iter().map(|x| json!(g.id(x))).collect())
}

fn status_json(status: &impl serde::Serialize) -> Value {
    serde_json::to_value(status).expect("status serializes")
}

fn potential_json(g: &Graph, r: &PotentialResult) -> (Value, Value) {
    (
        json!({ "u": fn_json(g, &r.u), "status": status_json(&r.status) }),
        json!({ "monotonicity_witness": r.monotonicity_witness, "probe_history": r.probe_history }),
    )
}

fn validate(common: &Common) -> Run<()> {
    if common.tol.is_nan() || common.tol <= 0.0 {
        return input("--tol must be positive");
    }
    if common.levels == 0 {
        return input("--levels must be at least 1");
    }
    Ok(())
}

fn graph_inputs(g: &Graph, common: &Common) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert(
        "graph".into(),
        match (&common.graph, &common.generate) {
            (Some(p), _) => json!({ "path": p }),
            (_, Some(s)) => json!({ "generate": s }),
            _ => Value::Null,
        },
    );
    m.insert("vertices".into(), json!(g.len()));
    m.insert("edges".into(), json!(g.edges().len()));
    m
}

fn dispatch(cli: &Cli) -> Run<Report> {
    let common = &cli.common;
    validate(common)?;
    if let Command::Counterexamples = cli.command {
        return counterexamples();
    }
    if let Command::IdealCheck { form_a, form_b } = &cli.command {
        return ideal(form_a, form_b);
    }
    let g = load_graph(common)?;
    let mut inputs = graph_inputs(&g, common);
    let mut put = |k: &str, v: Value| {
        inputs.insert(k.to_string(), v);
    };
    let mut negative = false;
    let (result, certificates) = match &cli.command {
        Command::Energy { contraction } => {
            let f = required_fn(&g, common)?;
            put("fn", fn_json(&g, &f));
            let e = energy(&g, &f);
            let mut result = json!({
                "energy": e,
                "jump_energy": jump_energy(&g, &f),
                "killing_energy": killing_energy(&g, &f),
            });
            let mut certs = json!({});
            if let Some(spec) = contraction {
                let c = NormalContraction::parse(spec)?;
                put("contraction", json!(c.to_string()));
                let cf = apply_contraction(&c, &f);
                let ec = energy(&g, &cf);
                result["contracted"] = fn_json(&g, &cf);
                result["contracted_energy"] = json!(ec);
                certs["contraction_inequality"] = json!(ec <= e + 1e-9);
            }
            (result, certs)
        }
        Command::Bilinear { other } => {
            let f = required_fn(&g, common)?;
            let h = parse_function(&g, "--fn2", other)?;
            put("fn", fn_json(&g, &f));
            put("fn2", fn_json(&g, &h));
            let value = bilinear(&g, &f, &h);
            let lap = laplacian(&g, &f, &g.all());
            let duality = lap.dot(&h);
            (
                json!({ "value": value }),
                json!({
                    "symmetry_gap": (value - bilinear(&g, &h, &f)).abs(),
                    "duality_gap": (value - duality).abs(),
                }),
            )
        }
        Command::Lap {
            window,
            defined,
            at,
            rhs,
        } => {
            let f = required_fn(&g, common)?;
            let window = set_or_all(&g, "--window", window)?;
            put("fn", fn_json(&g, &f));
            put("window", set_json(&g, &window));
            let lap = match defined {
                Some(d) => {
                    let d = parse_set(&g, "--defined", d)?;
                    put("defined", set_json(&g, &d));
                    laplacian_on_defined(&g, &f, &d, &window)?
                }
                None => laplacian(&g, &f, &window),
            };
            let mut result = json!({ "laplacian": fn_json(&g, &lap.restrict(&window)) });
            if let Some(id) = at {
                let x = g.vertex(id)?;
                result["at"] = json!({ "vertex": id, "value": laplacian_at(&g, &f, x) });
            }
            let mut certs = json!({});
            if let Some(r) = rhs {
                let rhs = Functional::new(parse_function(&g, "--rhs", r)?.into_vec());
                let residual = weak_residual(&g, &f, &rhs, &window);
                result["weak_solution"] = json!(residual <= common.tol);
                certs["weak_residual"] = json!(residual);
            }
            (result, certs)
        }
        Command::Resolvent => {
            let f = required_fn(&g, common)?;
            put("fn", fn_json(&g, &f));
            put("alpha", json!(common.alpha));
            match &common.set {
                Some(s) => {
                    let n = parse_set(&g, "--set", s)?;
                    put("set", set_json(&g, &n));
                    let u = resolvent(&g, &n, common.alpha, &f)?;
                    let shifted = g.with_killing_shift(common.alpha);
                    let residual =
                        weak_residual(&shifted, &u, &Functional::from_m_density(&g, &f), &n);
                    (
                        json!({ "u": fn_json(&g, &u) }),
                        json!({ "residual": residual }),
                    )
                }
                None => {
                    let root = root_of(&g, common)?;
                    let ex = exhaustion(&g, common, root)?;
                    let probe = g.ball(root, common.probe_radius)?;
                    put("root", json!(g.id(root)));
                    put("levels", json!(ex.len()));
                    put("probe", set_json(&g, &probe));
                    let r = extended_resolvent(
                        &g,
                        &ex,
                        common.alpha,
                        &f,
                        &LimitConfig::new(common.tol),
                        &probe,
                    )?;
                    potential_json(&g, &r)
                }
            }
        }
        Command::Potential { ell, supersolution } => {
            let root = root_of(&g, common)?;
            let ell = match ell {
                Some(t) => Functional::new(parse_function(&g, "--ell", t)?.into_vec()),
                None => Functional::delta(g.len(), root),
            };
            put(
                "ell",
                fn_json(&g, &VertexFunction::from_vec(ell.coeffs().to_vec())),
            );
            if *supersolution {
                let u = required_fn(&g, common)?;
                let n = set_or_all(&g, "--set", &common.set)?;
                put("fn", fn_json(&g, &u));
                put("set", set_json(&g, &n));
                let minimal = minimality_check(&g, &n, &ell, &u)?;
                negative = !minimal;
                (json!({ "dominates_potential": minimal }), json!({}))
            } else if let Some(s) = &common.set {
                let n = parse_set(&g, "--set", s)?;
                put("set", set_json(&g, &n));
                check_transient(&g, &n)?;
                let u = restricted_potential(&g, &n, &ell)?;
                let residual = weak_residual(&g, &u, &ell, &n);
                (
                    json!({ "u": fn_json(&g, &u) }),
                    json!({ "residual": residual }),
                )
            } else {
                let ex = exhaustion(&g, common, root)?;
                let probe = g.ball(root, common.probe_radius)?;
                put("root", json!(g.id(root)));
                put("levels", json!(ex.len()));
                put("probe", set_json(&g, &probe));
                let r = extended_potential(&g, &ex, &ell, &LimitConfig::new(common.tol), &probe)?;
                potential_json(&g, &r)
            }
        }
        Command::Capacity(args) => {
            let (n, u, obstacle) = obstacle_inputs(&g, common, args, &mut put)?;
            (
                json!({ "capacity": capacity(&g, &n, &u, &obstacle)? }),
                json!({}),
            )
        }
        Command::Reduite {
            obstacle: args,
            omega,
            max_sweeps,
        } => {
            let (n, u, obstacle) = obstacle_inputs(&g, common, args, &mut put)?;
            let config = ObstacleConfig {
                omega: *omega,
                max_sweeps: *max_sweeps,
                ..ObstacleConfig::default()
            };
            let r = reduite_with(&g, &n, &u, &obstacle, &config)?;
            (
                json!({ "h": fn_json(&g, &r.h), "capacity": r.capacity }),
                json!({
                    "kkt": status_json(&r.kkt),
                    "dual_capacity": r.dual_capacity,
                    "sweeps": r.sweeps,
                    "polish_iterations": r.polish_iterations,
                    "dominated_by_obstacle": r.dominated_by_obstacle,
                }),
            )
        }
        Command::Classify { meta } => {
            let c = classify_finite(&g);
            let verdict = match c.verdict() {
                Some(v) => status_json(&v),
                None if c.verdicts.iter().all(|&v| v == Verdict::Recurrent) => json!("recurrent"),
                None if c.verdicts.iter().all(|&v| v == Verdict::Transient) => json!("transient"),
                None => json!("mixed"),
            };
            let mut result = json!({
                "verdict": verdict,
                "kernel_dim": c.kernel_dim(),
                "irreducible": is_irreducible(&g),
                "components": c.components.iter().map(|s| set_json(&g, s)).collect::<Vec<_>>(),
                "verdicts": status_json(&c.verdicts),
                "recurrent_part": set_json(&g, &c.recurrent_part),
                "kernel_basis": c.kernel_basis.iter().map(|f| fn_json(&g, f)).collect::<Vec<_>>(),
            });
            let mut certs = json!({});
            if let Some(s) = &common.set {
                let a = parse_set(&g, "--set", s)?;
                put("set", set_json(&g, &a));
                result["invariant"] = json!(is_invariant(&g, &a));
                result["components_within"] = json!(components_within(&g, &a)
                    .iter()
                    .map(|s| set_json(&g, s))
                    .collect::<Vec<_>>());
            }
            if let Some(samples) = meta {
                put("meta_samples", json!(samples));
                let m = recurrence_meta_check(&g, *samples)?;
                certs["meta"] = json!({
                    "recurrent": m.recurrent,
                    "max_spread": m.max_spread,
                    "probes": m.probes,
                    "probe_spread": m.probe_spread,
                    "witness": m.witness.as_ref().map(|h| fn_json(&g, h)),
                    "agrees": m.recurrent == (verdict == json!("recurrent")),
                });
            }
            (result, certs)
        }
        Command::ClassifyInf { ratio, separation } => {
            let root = root_of(&g, common)?;
            let ex = exhaustion(&g, common, root)?;
            put("root", json!(g.id(root)));
            put("levels", json!(ex.len()));
            let config = ClassifyConfig {
                decay_ratio: *ratio,
                separation: *separation,
                ..ClassifyConfig::new(common.tol)
            };
            let c = classify_exhaustion(&g, &ex, root, &config)?;
            negative = matches!(c.verdict, ExhaustionVerdict::Undetermined { .. });
            let mut result = status_json(&c.verdict);
            result["capacities"] = json!(c.capacities);
            (result, json!({}))
        }
        Command::Conserve { separation } => {
            let root = root_of(&g, common)?;
            let ex = exhaustion(&g, common, root)?;
            let probe = g.ball(root, common.probe_radius)?;
            put("root", json!(g.id(root)));
            put("alpha", json!(common.alpha));
            put("levels", json!(ex.len()));
            put("probe", set_json(&g, &probe));
            let config = ConservationConfig {
                separation: *separation,
                ..ConservationConfig::new(common.tol)
            };
            let r = conservation_defect(&g, &ex, common.alpha, &probe, &config)?;
            negative = r.verdict != ConservationVerdict::CompleteAtInfinity;
            let mut result = status_json(&r.verdict);
            result["defect"] = Value::Object(
                r.defect
                    .iter()
                    .map(|(id, w)| (id.clone(), json!(w)))
                    .collect(),
            );
            result["max_defect"] = json!(r.max_defect());
            result["status"] = status_json(&r.status);
            (
                result,
                json!({
                    "history": r.history,
                    "final_level": r.final_level,
                    "monotonicity_witness": r.monotonicity_witness,
                }),
            )
        }
        Command::Decompose { phi, mode } => {
            let f = required_fn(&g, common)?;
            let root = root_of(&g, common)?;
            let ex = exhaustion(&g, common, root)?;
            put("fn", fn_json(&g, &f));
            put("root", json!(g.id(root)));
            put("levels", json!(ex.len()));
            let main = main_part(&g, &ex, &f, common.tol)?;
            let killing = killing_part(&g, &f);
            let total = energy(&g, &f);
            let mut result = json!({
                "main_part": main.value,
                "killing_part": killing,
                "reflected_energy": reflected_energy(&g, &f)?,
                "energy": total,
                "status": status_json(&main.status),
            });
            let last = plateau_cutoff(&g, &ex, main.history.len() - 1);
            let mut certs = json!({
                "sum_gap": (main.value + killing - total).abs(),
                "history": main.history,
                "final_cutoff": fn_json(&g, &last),
            });
            if let Some(p) = phi {
                let phi = parse_function(&g, "--phi", p)?;
                let mode = match mode {
                    Mode::Definition => PhiMode::ByDefinition,
                    Mode::Formula => PhiMode::ByFormula,
                };
                put("phi", fn_json(&g, &phi));
                let value = energy_phi(&g, &phi, &f, mode)?;
                let other = match mode {
                    PhiMode::ByDefinition => PhiMode::ByFormula,
                    PhiMode::ByFormula => PhiMode::ByDefinition,
                };
                result["energy_phi"] = json!(value);
                certs["energy_phi_mode_gap"] =
                    json!((value - energy_phi(&g, &phi, &f, other)?).abs());
            }
            (result, certs)
        }
        Command::Excessive { window } => {
            let h = required_fn(&g, common)?;
            let window = set_or_all(&g, "--window", window)?;
            put("fn", fn_json(&g, &h));
            put("window", set_json(&g, &window));
            let check = is_excessive(&g, &h, &window, common.tol)?;
            negative = !check.excessive;
            (
                json!({
                    "excessive": check.excessive,
                    "violation": check.violation.map(|(id, v)| json!({ "vertex": id, "laplacian": v })),
                }),
                json!({
                    "cutoff_samples": check.cutoff_samples,
                    "cutoff_consistent": check.cutoff_consistent,
                }),
            )
        }
        Command::ApproxForm { window } => {
            let f = required_fn(&g, common)?;
            let window = set_or_all(&g, "--window", window)?;
            put("fn", fn_json(&g, &f));
            put("window", set_json(&g, &window));
            put("alpha", json!(common.alpha));
            let a = approximating_form_minimizer(&g, common.alpha, &window, &f)?;
            let e = energy(&g, &f);
            (
                json!({ "value": a.value, "minimizer": fn_json(&g, &a.minimizer), "energy": e }),
                json!({ "gap": e - a.value }),
            )
        }
        Command::Counterexamples | Command::IdealCheck { .. } => unreachable!("handled above"),
    };
    Ok(Report {
        inputs: Value::Object(inputs),
        result,
        negative,
        certificates,
    })
}

fn obstacle_inputs(
    g: &Graph,
    common: &Common,
    args: &ObstacleArgs,
    put: &mut impl FnMut(&str, Value),
) -> Run<(VertexSet, VertexSet, VertexFunction)> {
    let n = set_or_all(g, "--set", &common.set)?;
    let u = parse_set(g, "--window", &args.window)?;
    let obstacle = match &args.obstacle {
        Some(t) => parse_function(g, "--obstacle", t)?,
        None => VertexFunction::indicator(g.len(), &u),
    };
    put("set", set_json(g, &n));
    put("window", set_json(g, &u));
    put("obstacle", fn_json(g, &obstacle));
    Ok((n, u, obstacle))
}

/// A form file: `{"graph": <graph document>, "domain": "full" | [<function>, ...]}`.
fn load_form(path: &str) -> Run<FiniteForm> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {path}: {e}")))?;
    let doc = parse_json(path, &text)?;
    let Some(graph) = doc.get("graph") else {
        return input(format!("{path}: missing `graph`"));
    };
    let g = Graph::from_json(&graph.to_string())?;
    match doc.get("domain") {
        None => Ok(FiniteForm::full(g)),
        Some(Value::String(s)) if s == "full" => Ok(FiniteForm::full(g)),
        Some(Value::Array(items)) => {
            let basis = items
                .iter()
                .map(|f| parse_function(&g, "domain element", &f.to_string()))
                .collect::<Run<Vec<_>>>()?;
            Ok(FiniteForm::new(g, basis)?)
        }
        Some(_) => input(format!(
            "{path}: `domain` must be \"full\" or an array of functions"
        )),
    }
}

fn ideal(form_a: &str, form_b: &str) -> Run<Report> {
    let a = load_form(form_a)?;
    let b = load_form(form_b)?;
    let check = ideal_check(&a, &b)?;
    let extends = is_extension(&a, &b)?;
    let silverstein = is_silverstein_extension(&a, &b)?;
    let g = a.graph();
    let witness = check.witness.as_ref().map(
        |(f, h, p)| json!({ "f": fn_json(g, f), "g": fn_json(g, h), "product": fn_json(g, p) }),
    );
    Ok(Report {
        inputs: json!({ "form_a": form_a, "form_b": form_b, "dim_a": a.dim(), "dim_b": b.dim() }),
        result: json!({
            "ideal": check.holds,
            "extension": extends,
            "silverstein_extension": silverstein,
            "witness": witness,
        }),
        negative: !(check.holds && extends),
        certificates: json!({}),
    })
}

fn counterexamples() -> Run<Report> {
    let r = counterexample_suite()?;
    let certified = r.certified();
    let mut result = serde_json::to_value(&r).expect("reports serialize");
    result["no_maximal_silverstein_extension"] = json!(r.maximal_extension_excluded);
    Ok(Report {
        inputs: json!({}),
        result,
        negative: !certified,
        certificates: json!({
            "certified": certified,
            "E(1_a)": r.e_indicator_a,
            "E1(1)": r.e1_one,
            "E2(1_a - 1)": r.e2_indicator_a_minus_one,
        }),
    })
}
