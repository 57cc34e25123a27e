mod experiment;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use wardrop_signal::equilibrium::{solve_wardrop, verify_wardrop, EquilibriumReport, SolveOptions};
use wardrop_signal::error::Error;
use wardrop_signal::gen::GeneratorSpec;
use wardrop_signal::io::json::{instance_from_json, instance_to_json, InstanceDto};
use wardrop_signal::model::{make_belief, Instance};
use wardrop_signal::signaling::{
    evaluate_scheme, full_revelation_scheme, grid_envelope, no_signal_scheme, optimal_scheme_lp,
    optimal_scheme_two_state, prune_scheme, SchemeView,
};
use wardrop_signal::sp::{braess_witness, full_revelation_guarantee, is_series_parallel};
use wardrop_signal::support::{
    cost_profile, enumerate_supports_parallel, enumerate_supports_two_state, is_concave, profile_svg, EnumOptions,
};

/// Residual bound for `solve` and the scheme checks.
const VERIFY_TOL: f64 = 1e-6;
/// Posterior grid for games outside the linear-program class.
const ORACLE_GRID: usize = 10_000;

#[derive(Parser, Debug)]
#[command(name = "wardrop-signal", version, about = "Wardrop equilibria and optimal public signaling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated instance as JSON.
    Gen {
        #[arg(long = "gen", value_name = "SPEC")]
        spec: String,
        #[command(flatten)]
        common: Common,
    },
    /// Equilibrium at one belief.
    Solve {
        #[command(flatten)]
        source: Source,
        /// Comma-separated belief over the states.
        #[arg(long)]
        belief: String,
        #[command(flatten)]
        common: Common,
    },
    /// Cost profile C(alpha) over two-state beliefs.
    Profile {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
    },
    /// Equilibrium supports realized by some belief.
    Enum {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
    },
    /// Full revelation, no signal and the optimal scheme at a prior.
    Scheme {
        #[command(flatten)]
        source: Source,
        /// Comma-separated prior; defaults to the instance's own.
        #[arg(long)]
        prior: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Series-parallel test and, if it fails, a Braess witness.
    Spcheck {
        #[command(flatten)]
        source: Source,
        /// Source vertex name; defaults to the first commodity's.
        #[arg(long = "source", id = "source_vertex")]
        source_vertex: Option<String>,
        /// Target vertex name; defaults to the first commodity's.
        #[arg(long)]
        target: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Support-count histogram on randomized Sioux Falls networks.
    Experiment(experiment::ExperimentArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Source {
    /// Instance JSON file.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Generator spec such as `nested_braess:j=2,eps=1e-6`.
    #[arg(long = "gen", value_name = "SPEC")]
    spec: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Target relative Frank-Wolfe gap.
    #[arg(long)]
    pub tol_gap: Option<f64>,
    /// Relative tolerance for active edges.
    #[arg(long)]
    pub tol_support: Option<f64>,
    /// Replacement for zero slopes in the exact solvers.
    #[arg(long)]
    pub eps_slope: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

pub enum Failure {
    Usage(String),
    Verification(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        use Error::*;
        let msg = e.to_string();
        match e {
            NotADistribution(_) | Malformed(_) | Parse { .. } | MissingField(_) | NoPath { .. } | NotParallelLinks
            | RequiresTwoStates | RequiresOffsetsOnly | BadTerminals(_) | BadParameter(_) | UnsupportedJ(_)
            | Io(_) => Failure::Usage(msg),
            _ => Failure::Solver(msg),
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Verification(_) => 2,
            Failure::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Verification(m) | Failure::Solver(m) => m,
        }
    }
}

type Outcome = Result<(), Failure>;

impl Common {
    pub fn solve_options(&self) -> SolveOptions {
        let d = SolveOptions::default();
        SolveOptions {
            fw_gap_tol: self.tol_gap.unwrap_or(d.fw_gap_tol),
            support_eps: self.tol_support.unwrap_or(d.support_eps),
            eps_slope: self.eps_slope.unwrap_or(d.eps_slope),
            ..d
        }
    }

    fn enum_options(&self) -> EnumOptions {
        EnumOptions { solve: self.solve_options(), seed: self.seed, ..EnumOptions::default() }
    }

    /// The requested format, checked against what the command can write.
    pub fn format(&self, default: Format, allowed: &[Format]) -> Result<Format, Failure> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(Failure::Usage(format!("format {f:?} is not available for this command")))
        }
    }

    pub fn emit(&self, text: &str) -> Outcome {
        match &self.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
            None => {
                use std::io::Write;
                let mut stdout = std::io::stdout().lock();
                let newline = if text.ends_with('\n') { "" } else { "\n" };
                match write!(stdout, "{text}{newline}").and_then(|_| stdout.flush()) {
                    // a closed pipe (e.g. `| head`) is not an error of ours
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                        Err(Failure::Usage(format!("cannot write to stdout: {e}")))
                    }
                    _ => Ok(()),
                }
            }
        }
    }
}

fn to_json(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("output serializes")
}

fn parse_weights(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|w| w.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("`{w}` is not a number"))))
        .collect()
}

/// Sioux generator specs take the run seed from `--seed` unless they name one.
fn build_spec(spec: &str, seed: u64) -> Result<Instance<f64>, Failure> {
    let spec = if spec.starts_with("sioux") && !spec.contains("seed=") {
        let sep = if spec.contains(':') { "," } else { ":" };
        format!("{spec}{sep}seed={seed}")
    } else {
        spec.to_string()
    };
    let parsed: GeneratorSpec = spec.parse()?;
    Ok(parsed.build()?)
}

fn load(source: &Source, common: &Common) -> Result<Instance<f64>, Failure> {
    match (&source.instance, &source.spec) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            Ok(instance_from_json(&text)?)
        }
        (None, Some(spec)) => build_spec(spec, common.seed),
        _ => Err(Failure::Usage("give exactly one of --instance and --gen".into())),
    }
}

fn cmd_gen(spec: &str, common: &Common) -> Outcome {
    common.format(Format::Json, &[Format::Json])?;
    let inst = build_spec(spec, common.seed)?;
    common.emit(&instance_to_json(&inst))
}

fn cmd_solve(source: &Source, belief: &str, common: &Common) -> Outcome {
    common.format(Format::Json, &[Format::Json])?;
    let inst = load(source, common)?;
    let belief = make_belief(&parse_weights(belief)?)?;
    if belief.len() != inst.n_states() {
        return Err(Failure::Usage(format!(
            "belief has {} entries for {} states",
            belief.len(),
            inst.n_states()
        )));
    }
    let r = solve_wardrop(&inst, &belief, &common.solve_options())?;
    let report = verify_wardrop(&inst, &belief, &r.flow, VERIFY_TOL);
    common.emit(&to_json(&EquilibriumReport::new(&inst, &belief, &r)))?;
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Verification(format!("KKT residual {:e} above {VERIFY_TOL:e}", report.max_residual)))
    }
}

fn cmd_profile(source: &Source, common: &Common) -> Outcome {
    let format = common.format(Format::Csv, &[Format::Json, Format::Csv, Format::Svg])?;
    let inst = load(source, common)?;
    let atlas = enumerate_supports_two_state(&inst, &common.enum_options())?;
    let profile = cost_profile(&atlas)?;
    let concave = is_concave(&profile, 1e-9);
    eprintln!("concave: {concave}");
    let text = match format {
        Format::Csv => atlas.to_csv(&inst),
        Format::Svg => profile_svg(&profile),
        Format::Json => to_json(&json!({
            "concave": concave,
            "breakpoints": atlas.breakpoints(),
            "knots": profile.knots,
            "values": profile.values,
            "regions": atlas.view(&inst).regions,
        })),
    };
    common.emit(&text)
}

fn cmd_enum(source: &Source, common: &Common) -> Outcome {
    let format = common.format(Format::Json, &[Format::Json, Format::Csv])?;
    let inst = load(source, common)?;
    if inst.n_states() == 2 {
        let atlas = enumerate_supports_two_state(&inst, &common.enum_options())?;
        let text = match format {
            Format::Csv => atlas.to_csv(&inst),
            _ => {
                let view = atlas.view(&inst);
                to_json(&json!({
                    "supports": view.regions.len(),
                    "regions": view.regions,
                    "breakpoints": view.breakpoints,
                    "lp_solves": view.lp_solves,
                }))
            }
        };
        return common.emit(&text);
    }
    let supports = enumerate_supports_parallel(&inst)?;
    let text = match format {
        Format::Csv => supports.iter().map(|s| format!("\"{}\"\n", s.label(&inst))).collect(),
        _ => to_json(&json!({
            "supports": supports.len(),
            "candidates": supports.iter().map(|s| s.label(&inst)).collect::<Vec<_>>(),
        })),
    };
    common.emit(&text)
}

fn cmd_scheme(source: &Source, prior: Option<&str>, common: &Common) -> Outcome {
    common.format(Format::Json, &[Format::Json])?;
    let mut inst = load(source, common)?;
    if let Some(p) = prior {
        inst = inst.with_prior(&parse_weights(p)?)?;
    }
    let opts = common.solve_options();
    let prior = inst.prior_belief()?;
    let full = evaluate_scheme(&inst, &full_revelation_scheme(&prior), &opts)?.total;
    let none = evaluate_scheme(&inst, &no_signal_scheme(&prior), &opts)?.total;

    let (method, scheme, optimal, verified) = if inst.offsets_only() && inst.n_states() == 2 {
        let best = optimal_scheme_two_state(&inst, &prior, &common.enum_options())?;
        let verified = best.lp.verified();
        ("lp", best.scheme.scheme, best.cost, verified)
    } else if inst.offsets_only() {
        let candidates = enumerate_supports_parallel(&inst)?;
        let lp = optimal_scheme_lp(&inst, &candidates)?;
        let verified = lp.verified();
        let pruned = prune_scheme(&inst, &lp.scheme, &candidates, &opts)?;
        ("lp", pruned.scheme, pruned.total, verified)
    } else if inst.n_states() == 2 {
        let split = grid_envelope(&inst, ORACLE_GRID, &opts)?;
        ("oracle", split.scheme(), split.cost, true)
    } else {
        return Err(Failure::Usage(
            "state-dependent slopes are supported only with two states".into(),
        ));
    };
    let eval = evaluate_scheme(&inst, &scheme, &opts)?;
    let out = json!({
        "method": method,
        "prior": prior.weights(),
        "full": full,
        "none": none,
        "optimal": optimal,
        "scheme": SchemeView::new(&scheme, &eval),
    });
    common.emit(&to_json(&out))?;
    let bound = full.min(none) + VERIFY_TOL * (1.0 + full.abs().max(none.abs()));
    if !verified {
        Err(Failure::Verification("a recovered equilibrium fails verification".into()))
    } else if optimal > bound {
        Err(Failure::Verification(format!("optimum {optimal} exceeds baseline {}", full.min(none))))
    } else {
        Ok(())
    }
}

fn vertex(inst: &Instance<f64>, name: Option<&String>, default: usize) -> Result<usize, Failure> {
    match name {
        None => Ok(default),
        Some(n) => inst
            .vertices
            .iter()
            .position(|v| v == n)
            .ok_or_else(|| Failure::Usage(format!("unknown vertex `{n}`"))),
    }
}

fn cmd_spcheck(source: &Source, s: Option<&String>, t: Option<&String>, common: &Common) -> Outcome {
    common.format(Format::Json, &[Format::Json])?;
    let inst = load(source, common)?;
    let first = inst
        .commodities
        .first()
        .ok_or_else(|| Failure::Usage("instance has no commodities".into()))?;
    let s = vertex(&inst, s, first.source)?;
    let t = vertex(&inst, t, first.target)?;
    let check = is_series_parallel(&inst, s, t)?;
    let witness = if check.is_sp() {
        serde_json::Value::Null
    } else {
        match braess_witness(&inst, s, t) {
            Ok(w) => {
                let prior = w.instance.prior_belief()?;
                let opts = common.solve_options();
                let full = evaluate_scheme(&w.instance, &full_revelation_scheme(&prior), &opts)?.total;
                let best = optimal_scheme_two_state(&w.instance, &prior, &common.enum_options())?;
                json!({
                    "bridge": w.bridge,
                    "linear": w.linear,
                    "constant": w.constant,
                    "full": full,
                    "optimal": best.cost,
                    "gap": full - best.cost,
                    "instance": InstanceDto::from_instance(&w.instance),
                })
            }
            Err(e) => json!({ "error": e.to_string() }),
        }
    };
    let out = json!({
        "series_parallel": check.is_sp(),
        "check": check,
        "guarantee": full_revelation_guarantee(&inst),
        "witness": witness,
    });
    common.emit(&to_json(&out))
}

fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Gen { spec, common } => cmd_gen(spec, common),
        Command::Solve { source, belief, common } => cmd_solve(source, belief, common),
        Command::Profile { source, common } => cmd_profile(source, common),
        Command::Enum { source, common } => cmd_enum(source, common),
        Command::Scheme { source, prior, common } => cmd_scheme(source, prior.as_deref(), common),
        Command::Spcheck { source, source_vertex, target, common } => {
            cmd_spcheck(source, source_vertex.as_ref(), target.as_ref(), common)
        }
        Command::Experiment(args) => experiment::run(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
