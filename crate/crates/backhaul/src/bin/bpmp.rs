//! Command-line front end: generate instances, build and emit models, solve
//! with the builtin or an external backend, run the heuristic and the
//! exhaustive search, validate solutions, and print bounds and model sizes.
//!
//! Machine-readable output (JSON reports, model text, plain numbers) goes to
//! stdout or `-o`; diagnostics go to stderr. Exit codes: 0 success, 1
//! infeasible instance or invalid solution, 2 usage error, 3 backend
//! failure.

use backhaul::analysis::{check_diversion_ordering, validate_solution};
use backhaul::datagen::generate_instance;
use backhaul::formulations::{build, build_node_arc_with, BuiltModel, FormulationKind};
use backhaul::heuristic::{run_heuristic, HeuristicError};
use backhaul::instance::{profit_upper_bound, validate_instance, BigMMode, Instance, Parameters};
use backhaul::mip::{emit_lp, emit_mps, model_stats};
use backhaul::oracle::{solve_exact, BpmpSolution, OracleError, OracleLimits};
use backhaul::solver::{
    solve_external, solve_milp, BackendConfig, Builtin, MilpOptions, MilpResult, MilpStatus,
    ModelFormat, SolverError,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "bpmp", about = "Backhaul profit maximization toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InstanceArg {
    /// Instance JSON file.
    #[arg(short = 'i', long = "instance")]
    instance: PathBuf,
}

#[derive(Args)]
struct OutputArg {
    /// Output file; stdout when omitted.
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random instance.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Revenue rate in dollars per mile per ton.
        #[arg(long)]
        p: Option<f64>,
        /// Cost rate in dollars per mile per ton.
        #[arg(long)]
        c: Option<f64>,
        /// Empty vehicle weight in tons.
        #[arg(long)]
        v: Option<f64>,
        /// Capacity in tons.
        #[arg(long, short = 'q')]
        capacity: Option<f64>,
        /// Distance limit in miles.
        #[arg(long, short = 'd')]
        distance: Option<f64>,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Build a formulation and emit it as LP or MPS text.
    Build {
        #[arg(long)]
        formulation: String,
        #[arg(long, default_value = "lp")]
        format: String,
        #[arg(long = "big-m", default_value = "data-independent")]
        big_m: String,
        #[command(flatten)]
        instance: InstanceArg,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Solve a formulation with the builtin solver or an external backend.
    Solve {
        #[arg(long)]
        formulation: String,
        #[arg(long, default_value = "builtin")]
        backend: String,
        /// External command template with {model} and {solution}
        /// placeholders; BPMP_BACKEND_CMD supplies a default.
        #[arg(long = "backend-cmd")]
        backend_cmd: Option<String>,
        #[arg(long = "backend-format", default_value = "lp")]
        backend_format: String,
        #[arg(long = "big-m", default_value = "data-independent")]
        big_m: String,
        #[arg(long = "node-limit")]
        node_limit: Option<u64>,
        /// Time limit in seconds.
        #[arg(long = "time-limit")]
        time_limit: Option<f64>,
        /// Absolute optimality gap.
        #[arg(long)]
        gap: Option<f64>,
        /// Re-check the decoded solution against the route-order and
        /// acyclicity guarantees and fail loudly on violation.
        #[arg(long)]
        check: bool,
        #[command(flatten)]
        instance: InstanceArg,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Run the restricted-diversion heuristic.
    Heuristic {
        #[arg(long = "node-limit")]
        node_limit: Option<u64>,
        #[arg(long = "time-limit")]
        time_limit: Option<f64>,
        #[command(flatten)]
        instance: InstanceArg,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Solve exactly by exhaustive search (small instances).
    Oracle {
        /// Maximum number of interior nodes to attempt.
        #[arg(long = "max-interior", default_value_t = 6)]
        max_interior: usize,
        #[command(flatten)]
        instance: InstanceArg,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Validate a solution report against an instance.
    Validate {
        #[command(flatten)]
        instance: InstanceArg,
        /// Solution or report JSON (a report's `solution` field is used).
        #[arg(short = 's', long = "solution")]
        solution: PathBuf,
    },
    /// Print the closed-form profit upper bound.
    Bound {
        #[command(flatten)]
        instance: InstanceArg,
    },
    /// Print exact model size counts for a formulation.
    Stats {
        #[arg(long)]
        formulation: String,
        #[command(flatten)]
        instance: InstanceArg,
    },
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    instance_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    formulation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    backend: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<f64>,
    wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    solution: Option<BpmpSolution>,
    violations: Vec<String>,
}

fn fnv1a64(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    format!("{hash:016x}")
}

enum CliError {
    Usage(String),
    Infeasible(String),
    Backend(String),
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 1,
            CliError::Backend(_) => 3,
            CliError::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Infeasible(m) | CliError::Backend(m) | CliError::Other(m) => m,
        }
    }
}

fn load_instance(path: &PathBuf) -> Result<(Instance, String), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let (inst, diags) = Instance::from_json(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    for d in diags {
        eprintln!("note: {d}");
    }
    let report = validate_instance(&inst);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok((inst, fnv1a64(text.as_bytes())))
}

fn parse_formulation(text: &str) -> Result<FormulationKind, CliError> {
    FormulationKind::parse(text).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown formulation {text:?}; expected node-arc, enhanced-node-arc, triples or enhanced-triples"
        ))
    })
}

fn parse_big_m(text: &str) -> Result<BigMMode, CliError> {
    match text {
        "data-independent" => Ok(BigMMode::DataIndependent),
        "knapsack" => Ok(BigMMode::Knapsack),
        other => Err(CliError::Usage(format!(
            "unknown big-m mode {other:?}; expected data-independent or knapsack"
        ))),
    }
}

fn build_with_mode(
    inst: &Instance,
    kind: FormulationKind,
    big_m: BigMMode,
) -> Result<BuiltModel, CliError> {
    let built = if kind == FormulationKind::NodeArc {
        build_node_arc_with(inst, big_m)
    } else {
        build(inst, kind)
    };
    built.map_err(|e| CliError::Usage(e.to_string()))
}

fn write_output(output: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Other(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_report(output: &Option<PathBuf>, report: &RunReport) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    write_output(output, &text)
}

fn milp_options(node_limit: Option<u64>, time_limit: Option<f64>, gap: Option<f64>) -> MilpOptions {
    let mut opts = MilpOptions::default();
    opts.node_limit = node_limit;
    opts.time_limit = time_limit.map(std::time::Duration::from_secs_f64);
    if let Some(g) = gap {
        opts.gap_tolerance = g;
    }
    opts
}

fn run() -> Result<u8, CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate { n, seed, p, c, v, capacity, distance, output } => {
            let mut params = Parameters::standard();
            if let Some(x) = p {
                params.revenue_rate = x;
            }
            if let Some(x) = c {
                params.cost_rate = x;
            }
            if let Some(x) = v {
                params.vehicle_weight = x;
            }
            if let Some(x) = capacity {
                params.capacity = x;
            }
            if let Some(x) = distance {
                params.distance_limit = x;
            }
            let inst = generate_instance(n, seed, Some(params))
                .map_err(|e| CliError::Usage(e.to_string()))?;
            write_output(&output.output, &inst.to_json())?;
            Ok(0)
        }
        Command::Build { formulation, format, big_m, instance, output } => {
            let (inst, _) = load_instance(&instance.instance)?;
            let kind = parse_formulation(&formulation)?;
            let built = build_with_mode(&inst, kind, parse_big_m(&big_m)?)?;
            let text = match ModelFormat::parse(&format) {
                Some(ModelFormat::Lp) => emit_lp(&built.model),
                Some(ModelFormat::Mps) => emit_mps(&built.model),
                None => {
                    return Err(CliError::Usage(format!(
                        "unknown format {format:?}; expected lp or mps"
                    )))
                }
            };
            write_output(&output.output, &text)?;
            Ok(0)
        }
        Command::Solve {
            formulation,
            backend,
            backend_cmd,
            backend_format,
            big_m,
            node_limit,
            time_limit,
            gap,
            check,
            instance,
            output,
        } => {
            let started = Instant::now();
            let (inst, digest) = load_instance(&instance.instance)?;
            let kind = parse_formulation(&formulation)?;
            let built = build_with_mode(&inst, kind, parse_big_m(&big_m)?)?;
            let result: MilpResult = match backend.as_str() {
                "builtin" => {
                    let opts = milp_options(node_limit, time_limit, gap);
                    solve_milp(&built.model, &opts)
                        .map_err(|e| CliError::Other(e.to_string()))?
                }
                "external" => {
                    let template = backend_cmd
                        .or_else(|| std::env::var("BPMP_BACKEND_CMD").ok())
                        .ok_or_else(|| {
                            CliError::Usage(
                                "external backend needs --backend-cmd or BPMP_BACKEND_CMD".into(),
                            )
                        })?;
                    let format = ModelFormat::parse(&backend_format).ok_or_else(|| {
                        CliError::Usage(format!("unknown backend format {backend_format:?}"))
                    })?;
                    let cfg = BackendConfig { command: template, format };
                    let workdir = std::env::temp_dir().join(format!("bpmp-run-{digest}"));
                    solve_external(&built.model, &cfg, &workdir).map_err(|e| match e {
                        SolverError::BackendTemplate => CliError::Usage(e.to_string()),
                        other => CliError::Backend(other.to_string()),
                    })?
                }
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown backend {other:?}; expected builtin or external"
                    )))
                }
            };
            if result.status == MilpStatus::Infeasible {
                return Err(CliError::Infeasible("no feasible route and selection".into()));
            }
            let Some(incumbent) = result.incumbent.as_ref() else {
                return Err(CliError::Other(format!(
                    "solver stopped with status {:?} and no incumbent",
                    result.status
                )));
            };
            let solution = backhaul::analysis::decode_solution(&inst, &built, incumbent)
                .map_err(|e| CliError::Other(format!("cannot decode solver output: {e}")))?;
            let mut violations: Vec<String> = validate_solution(&inst, &solution)
                .errors
                .into_iter()
                .collect();
            if check {
                if let Some(u) = &solution.diversions {
                    violations.extend(check_diversion_ordering(&solution.route, u, 1e-6));
                    let digraph = backhaul::analysis::build_diversion_digraph(u);
                    if let Err(cycle) = backhaul::analysis::check_acyclic(&digraph) {
                        violations.push(format!("diversion digraph has a cycle: {cycle:?}"));
                    }
                }
            }
            let objective = solution.profit;
            let bound = result.best_bound;
            let report = RunReport {
                command: "solve".into(),
                instance_digest: digest,
                formulation: Some(kind.name().into()),
                backend: Some(backend),
                objective: Some(objective),
                bound: Some(bound),
                gap: Some((bound - objective) / objective.abs().max(1.0)),
                wall_time_s: started.elapsed().as_secs_f64(),
                solution: Some(solution),
                violations: violations.clone(),
            };
            emit_report(&output.output, &report)?;
            if !violations.is_empty() {
                eprintln!("error: solution failed {} check(s)", violations.len());
                for v in &violations {
                    eprintln!("  {v}");
                }
                return Ok(1);
            }
            Ok(0)
        }
        Command::Heuristic { node_limit, time_limit, instance, output } => {
            let started = Instant::now();
            let (inst, digest) = load_instance(&instance.instance)?;
            let opts = milp_options(node_limit, time_limit, None);
            let solution = run_heuristic(&inst, &Builtin(opts)).map_err(|e| match e {
                HeuristicError::Infeasible => CliError::Infeasible(e.to_string()),
                other => CliError::Other(other.to_string()),
            })?;
            let violations: Vec<String> =
                validate_solution(&inst, &solution).errors.into_iter().collect();
            let report = RunReport {
                command: "heuristic".into(),
                instance_digest: digest,
                formulation: Some("enhanced-triples".into()),
                backend: Some("builtin".into()),
                objective: Some(solution.profit),
                bound: None,
                gap: None,
                wall_time_s: started.elapsed().as_secs_f64(),
                solution: Some(solution),
                violations: violations.clone(),
            };
            emit_report(&output.output, &report)?;
            Ok(u8::from(!violations.is_empty()))
        }
        Command::Oracle { max_interior, instance, output } => {
            let started = Instant::now();
            let (inst, digest) = load_instance(&instance.instance)?;
            let solution = solve_exact(&inst, OracleLimits { max_interior }).map_err(|e| match e {
                OracleError::Infeasible => CliError::Infeasible(e.to_string()),
                other => CliError::Usage(other.to_string()),
            })?;
            let report = RunReport {
                command: "oracle".into(),
                instance_digest: digest,
                formulation: None,
                backend: Some("exhaustive".into()),
                objective: Some(solution.profit),
                bound: Some(solution.profit),
                gap: Some(0.0),
                wall_time_s: started.elapsed().as_secs_f64(),
                solution: Some(solution),
                violations: vec![],
            };
            emit_report(&output.output, &report)?;
            Ok(0)
        }
        Command::Validate { instance, solution } => {
            let (inst, _) = load_instance(&instance.instance)?;
            let text = std::fs::read_to_string(&solution)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", solution.display())))?;
            let parsed: BpmpSolution = match serde_json::from_str::<serde_json::Value>(&text) {
                Ok(value) => {
                    let payload = value.get("solution").cloned().unwrap_or(value);
                    serde_json::from_value(payload)
                        .map_err(|e| CliError::Usage(format!("not a solution payload: {e}")))?
                }
                Err(e) => return Err(CliError::Usage(format!("invalid JSON: {e}"))),
            };
            let report = validate_solution(&inst, &parsed);
            let body = serde_json::json!({
                "valid": report.is_valid(),
                "violations": report.errors,
            });
            println!("{}", serde_json::to_string_pretty(&body).expect("serializes"));
            Ok(u8::from(!report.is_valid()))
        }
        Command::Bound { instance } => {
            let (inst, _) = load_instance(&instance.instance)?;
            if !inst.satisfies_triangle() {
                eprintln!("warning: distances violate the triangle inequality; the bound may not hold");
            }
            println!("{}", profit_upper_bound(&inst.params));
            Ok(0)
        }
        Command::Stats { formulation, instance } => {
            let (inst, _) = load_instance(&instance.instance)?;
            let kind = parse_formulation(&formulation)?;
            let built = build_with_mode(&inst, kind, BigMMode::DataIndependent)?;
            let stats = model_stats(&built.model);
            println!("{}", serde_json::to_string_pretty(&stats).expect("serializes"));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
