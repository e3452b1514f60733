//! The `linkforge` command line.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 when a run ends
//! without a feasible design or a design fails validation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bb::BbConfig;
use crate::geometry::{Aabb, Vec2};
use crate::job::{run_request, Budget, RunEvent, SolverKind, SynthesisRequest, TargetInput};
use crate::kinematics::{trace, trajectory_svg, CurveMode, Linkage, Trajectory};
use crate::model::{
    build_exact, build_micp_relaxation, build_minlp, build_topological, export, linkage_values,
    validate_with_tol, BoxConstraint, ExportFormat, ExportOptions, MotorKind, NodeClass,
    SynthesisConfig,
};
use crate::service::{serve, ServiceConfig, WORKERS_ENV};
use crate::solution::{Provenance, Solution};

#[derive(Parser, Debug)]
#[command(name = "linkforge", version, about = "Planar linkage synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for a linkage whose end-effector follows a target curve.
    Synth(SynthArgs),
    /// Simulate a linkage and write its trajectory.
    Trace(TraceArgs),
    /// Check a solution against one of the optimization models.
    Validate(ValidateArgs),
    /// Write an optimization model to a file.
    Export(ExportArgs),
    /// Run the HTTP job service.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Target curve: `{"points": [[x, y], ...], "mode": "fixed"}` or a bare point list.
    #[arg(long)]
    target: PathBuf,
    #[arg(long, value_enum, default_value_t = Solver::Sa)]
    solver: Solver,
    /// Maximal node count.
    #[arg(long = "K", default_value_t = 7)]
    k: usize,
    /// Target samples.
    #[arg(long = "T", default_value_t = 20)]
    t: usize,
    /// Relaxation resolution.
    #[arg(long = "S", default_value_t = 8)]
    s: usize,
    #[arg(long)]
    lambda: Option<f64>,
    /// Workspace side; derived from the target when absent.
    #[arg(long)]
    box_side: Option<f64>,
    /// Workspace centre `x,y`; the target centroid when absent.
    #[arg(long, value_parser = parse_point)]
    center: Option<Vec2>,
    /// Box `x0,y0,x1,y1` that non-end-effector nodes must stay in; repeatable.
    #[arg(long = "box", value_parser = parse_box)]
    boxes: Vec<Aabb>,
    #[arg(long)]
    arbitrary_order: bool,
    #[arg(long)]
    linear_motor: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = humantime::parse_duration, default_value = "5m")]
    time_limit: Duration,
    #[arg(long)]
    node_limit: Option<usize>,
    /// Annealing iterations.
    #[arg(long)]
    iterations: Option<usize>,
    /// Branch-and-bound worker threads; defaults to $LINKFORGE_WORKERS or 1.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Solver {
    Sa,
    Bb,
}

#[derive(Args, Debug)]
struct TraceArgs {
    /// Linkage JSON, or a solution whose linkage is traced.
    #[arg(long)]
    linkage: PathBuf,
    #[arg(long, default_value_t = 64)]
    samples: usize,
    /// Trajectory JSON; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelChoice {
    Exact,
    Micp,
    Minlp,
    Topological,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelChoice::Exact)]
    model: ModelChoice,
    /// Relaxation resolution when the solution does not carry one.
    #[arg(long = "S", default_value_t = 8)]
    s: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args, Debug)]
struct ExportArgs {
    /// Synthesis configuration JSON; overrides the size flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Target curve added to the configuration.
    #[arg(long)]
    target: Option<PathBuf>,
    #[arg(long = "K", default_value_t = 7)]
    k: usize,
    #[arg(long = "T", default_value_t = 20)]
    t: usize,
    #[arg(long = "S", default_value_t = 8)]
    s: usize,
    #[arg(long, default_value_t = 1.0)]
    box_side: f64,
    #[arg(long, value_enum, default_value_t = ModelChoice::Exact)]
    model: ModelChoice,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write SOS sets as their binary encodings.
    #[arg(long)]
    inline_sos: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Lp,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Job workers; $LINKFORGE_WORKERS takes precedence.
    #[arg(long, default_value_t = 2)]
    workers: usize,
    /// Queued jobs accepted before submissions are refused.
    #[arg(long, default_value_t = 16)]
    queue: usize,
}

/// A failure with its exit code.
struct Failure(u8, String);

fn usage(msg: impl Into<String>) -> Failure {
    Failure(1, msg.into())
}

fn numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

fn parse_point(s: &str) -> Result<Vec2, String> {
    let [x, y] = numbers(s)?[..] else {
        return Err(format!("expected x,y, got {s:?}"));
    };
    Ok(Vec2::new(x, y))
}

fn parse_box(s: &str) -> Result<Aabb, String> {
    let v = numbers(s)?;
    let [x0, y0, x1, y1] = v[..] else {
        return Err(format!("expected x0,y0,x1,y1, got {s:?}"));
    };
    if !(x0 < x1 && y0 < y1) {
        return Err(format!("box {s:?} is empty"));
    }
    Ok(Aabb {
        min: Vec2::new(x0, y0),
        max: Vec2::new(x1, y1),
    })
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_target(path: &Path) -> Result<TargetInput, Failure> {
    let text = read(path)?;
    if text.trim_start().starts_with('[') {
        let points: Vec<Vec2> = parse(path, &text)?;
        return Ok(TargetInput {
            points,
            mode: CurveMode::Fixed,
        });
    }
    parse(path, &text)
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Trace(a) => trace_cmd(a),
        Command::Validate(a) => validate_cmd(a),
        Command::Export(a) => export_cmd(a),
        Command::Serve(a) => serve_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn synth(a: SynthArgs) -> Result<(), Failure> {
    let mut target = read_target(&a.target)?;
    if a.arbitrary_order {
        target.mode = CurveMode::Arbitrary;
    }
    let solver = match a.solver {
        Solver::Sa => SolverKind::Sa,
        Solver::Bb => SolverKind::Bb,
    };
    let req = SynthesisRequest {
        k: a.k,
        t: a.t,
        s: a.s,
        lambda: a.lambda,
        box_side: a.box_side,
        center: a.center,
        boxes: a
            .boxes
            .into_iter()
            .map(|region| BoxConstraint {
                region,
                applies_to: NodeClass::All,
            })
            .collect(),
        motor: if a.linear_motor {
            MotorKind::Linear
        } else {
            MotorKind::Rotary
        },
        seed: a.seed,
        budget: Budget {
            time_limit: Some(a.time_limit),
            iterations: a.iterations,
            node_limit: a.node_limit,
        },
        ..SynthesisRequest::new(target, solver)
    };
    req.synthesis_config().map_err(|e| usage(e.0))?;
    let workers = a
        .workers
        .or_else(|| {
            std::env::var(WORKERS_ENV)
                .ok()
                .and_then(|v| v.trim().parse().ok())
        })
        .unwrap_or(1);
    let started = std::time::Instant::now();
    let out = run_request(&req, None, workers, |e| {
        if let RunEvent::Incumbent { objective, linkage } = e {
            log::info!(
                "{:>8.2}s  objective {objective:.6e}  nodes {}",
                started.elapsed().as_secs_f64(),
                linkage.len()
            );
        }
    })
    .map_err(|e| usage(e.to_string()))?;
    let Some(solution) = out.solution else {
        return Err(Failure(
            2,
            format!("no feasible design found ({:?})", out.stop),
        ));
    };
    println!(
        "objective {:.6e} (tracking {:.6e}) with {} nodes, {:?} after {:.1}s",
        solution.objective.total,
        solution.objective.tracking,
        solution.linkage.len(),
        out.stop,
        started.elapsed().as_secs_f64()
    );
    if let Some(path) = &a.out {
        write(
            path,
            serde_json::to_string_pretty(&solution).expect("solutions serialize"),
        )?;
    }
    if let Some(path) = &a.svg {
        write(
            path,
            trajectory_svg(&solution.trajectory, Some(&solution.target)),
        )?;
    }
    Ok(())
}

fn trace_cmd(a: TraceArgs) -> Result<(), Failure> {
    let text = read(&a.linkage)?;
    let linkage = match serde_json::from_str::<Solution>(&text) {
        Ok(s) => s.linkage,
        Err(_) => parse::<Linkage>(&a.linkage, &text)?,
    };
    if a.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    let tr: Trajectory = trace(&linkage, a.samples).map_err(|e| Failure(2, e.to_string()))?;
    let json = serde_json::to_string_pretty(&tr).expect("trajectories serialize");
    match &a.out {
        Some(path) => write(path, json)?,
        None => println!("{json}"),
    }
    if let Some(path) = &a.svg {
        write(path, trajectory_svg(&tr, None))?;
    }
    Ok(())
}

/// The configuration a solution was produced under, as far as it can be
/// recovered.
fn solution_config(sol: &Solution, s: usize) -> SynthesisConfig {
    let mut cfg = match &sol.provenance {
        Provenance::Bb(BbConfig { synthesis, .. }) => return synthesis.clone(),
        Provenance::Sa(sa) => {
            let mut c = SynthesisConfig::new(sa.max_nodes, sol.target.len(), s, sa.box_side);
            c.center = sa.center;
            c
        }
    };
    cfg.k = cfg.k.max(sol.linkage.len()).max(2);
    cfg.lambda = sol.lambda;
    cfg.mode = sol.mode;
    cfg.target = Some(sol.target.clone());
    cfg
}

fn build(choice: ModelChoice, cfg: &SynthesisConfig) -> crate::model::ModelIR {
    match choice {
        ModelChoice::Exact => build_exact(cfg),
        ModelChoice::Micp => build_micp_relaxation(cfg),
        ModelChoice::Minlp => build_minlp(cfg),
        ModelChoice::Topological => build_topological(cfg),
    }
}

fn validate_cmd(a: ValidateArgs) -> Result<(), Failure> {
    let text = read(&a.solution)?;
    let sol: Solution = parse(&a.solution, &text)?;
    sol.check(a.tol)
        .map_err(|e| Failure(2, format!("stored data is inconsistent: {e}")))?;
    let cfg = solution_config(&sol, a.s);
    let model = build(a.model, &cfg);
    let x = linkage_values(&model, &cfg, &sol.linkage).map_err(|e| Failure(2, e.to_string()))?;
    let v = validate_with_tol(&model, &x, a.tol).map_err(|e| Failure(2, e.to_string()))?;
    if v.is_satisfied() {
        println!(
            "Satisfied ({:?} model, tolerance {:e})",
            model.metadata.kind, a.tol
        );
        return Ok(());
    }
    for r in v.violations().iter().take(20) {
        println!(
            "{:?} {} violated by {:e} (scaled {:e})",
            r.kind, r.name, r.raw, r.residual
        );
    }
    Err(Failure(
        2,
        format!(
            "{} rows violated, worst {:e}",
            v.violations().len(),
            v.worst()
        ),
    ))
}

fn export_cmd(a: ExportArgs) -> Result<(), Failure> {
    let mut cfg = match &a.config {
        Some(path) => parse::<SynthesisConfig>(path, &read(path)?)?,
        None => SynthesisConfig::new(a.k, a.t, a.s, a.box_side),
    };
    if let Some(path) = &a.target {
        let curve = read_target(path)?.curve(cfg.t).map_err(usage)?;
        cfg.mode = curve.mode();
        cfg.target = Some(curve.samples().to_vec());
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let format = match a.format {
        Format::Json => ExportFormat::Json,
        Format::Lp => ExportFormat::Lp,
    };
    let bytes = export(
        &build(a.model, &cfg),
        format,
        ExportOptions {
            inline_sos: a.inline_sos,
        },
    )
    .map_err(|e| Failure(2, e.to_string()))?;
    match &a.out {
        Some(path) => write(path, bytes),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| usage(e.to_string()))
        }
    }
}

fn serve_cmd(a: ServeArgs) -> Result<(), Failure> {
    let cfg = ServiceConfig {
        workers: a.workers,
        queue_capacity: a.queue,
    }
    .with_env();
    let rt = tokio::runtime::Runtime::new().map_err(|e| usage(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port))
            .await
            .map_err(|e| usage(format!("cannot bind {}:{}: {e}", a.host, a.port)))?;
        println!(
            "listening on http://{}",
            listener.local_addr().map_err(|e| usage(e.to_string()))?
        );
        serve(listener, cfg).await.map_err(|e| usage(e.to_string()))
    })
}
