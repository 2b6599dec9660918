//! `refraction`: solve, simulate, verify and tabulate refraction dividend
//! strategies under exponential Parisian ruin.
//!
//! Exit codes: 0 success, 1 failed check or runtime error, 2 invalid
//! configuration.

mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use refraction::levy_model::ControlParams;
use refraction::parisian_control::ParisianProblem;
use refraction::scale_functions::ScaleSet;
use refraction::simulator::{
    estimate_identity, simulate_value, verify_appendix_identity, ClockMode, Identity, SimConfig,
};
use refraction::verification::{verify_all, DEFAULT_POINTS};

use config::RunConfig;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("checks failed: {0}")]
    CheckFailed(String),
}

impl From<refraction::Error> for CliError {
    fn from(e: refraction::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::CheckFailed(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "refraction", version, about = "Optimal refraction dividends under Parisian ruin")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Output file for the tabular or JSON artifact.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepParam {
    P,
    #[value(name = "K")]
    K,
    Q,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal level b*, p_min and the value function on the grid.
    Solve,
    /// Monte Carlo estimate of V_b(x) or of a first-passage identity.
    Simulate {
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        /// Refraction or barrier level; b* when omitted.
        #[arg(long)]
        b: Option<f64>,
        /// up_classical, up_parisian, down_before_up, down_ever or appendix.
        #[arg(long)]
        identity: Option<String>,
        #[arg(long, value_enum)]
        clock: Option<ClockArg>,
    },
    /// Generator, HJB, concavity and smoothness checks of the optimal V.
    Verify {
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
    },
    /// b* across a range of one rate.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        /// Geometric instead of linear spacing.
        #[arg(long)]
        log: bool,
    },
    /// W, W', Z, Z_{q,p} and Z_{q,p}' on the grid.
    DumpScale,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClockArg {
    PerExcursion,
    PoissonInspection,
}

impl From<ClockArg> for ClockMode {
    fn from(c: ClockArg) -> Self {
        match c {
            ClockArg::PerExcursion => ClockMode::PerExcursion,
            ClockArg::PoissonInspection => ClockMode::PoissonInspection,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("refraction: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let cfg = RunConfig::load(path)?;
    match &cli.command {
        Command::Solve => solve(cli, &cfg),
        Command::Simulate { paths, seed, horizon, step, x, b, identity, clock } => {
            let mut cfg = cfg;
            if let Some(n) = paths {
                cfg.sim.paths = *n;
            }
            if let Some(s) = seed {
                cfg.sim.seed = *s;
            }
            if horizon.is_some() {
                cfg.sim.horizon = *horizon;
            }
            if let Some(h) = step {
                cfg.sim.step = *h;
            }
            if let Some(c) = clock {
                cfg.sim.clock = (*c).into();
            }
            cfg.validate()?;
            simulate(cli, &cfg, *x, *b, identity.as_deref())
        }
        Command::Verify { points } => verify(cli, &cfg, *points),
        Command::Sweep { param, from, to, steps, log } => sweep(cli, &cfg, *param, *from, *to, *steps, *log),
        Command::DumpScale => dump_scale(cli, &cfg),
    }
}

fn header(cfg: &RunConfig, command: &str) -> String {
    format!(
        "# refraction {VERSION}\n# command: {command}\n# config: {}\n",
        serde_json::to_string(cfg).expect("config serializes")
    )
}

fn write_artifact(path: &str, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Runtime(format!("cannot write {path}: {e}")))
}

/// CSV goes to `--out` when given, otherwise to stdout.
fn emit_csv(cli: &Cli, contents: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => write_artifact(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(cli: &Cli, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("result serializes");
    if let Some(path) = &cli.out {
        write_artifact(path, &(text.clone() + "\n"))?;
    }
    if cli.json || cli.out.is_none() {
        println!("{text}");
    }
    Ok(())
}

fn problem(cfg: &RunConfig) -> Result<ParisianProblem, CliError> {
    let model = cfg.levy_model()?;
    Ok(ParisianProblem::new(&model, &cfg.control)?)
}

fn solve(cli: &Cli, cfg: &RunConfig) -> Result<(), CliError> {
    let pr = problem(cfg)?;
    let sol = pr.solve_b_star()?;
    let v = pr.value_function(&sol)?;

    if let Some(path) = &cli.out {
        let mut csv = header(cfg, "solve");
        csv.push_str(&format!("# b_star: {}\nx,V,Vprime\n", sol.b_star));
        for x in cfg.grid.points() {
            csv.push_str(&format!("{},{},{}\n", x, v.eval(x), v.derivative(x)));
        }
        write_artifact(path, &csv)?;
    }

    let summary = json!({
        "version": VERSION,
        "config": cfg,
        "b_star": sol.b_star,
        "p_min": sol.p_min,
        "condition": sol.condition,
        "h_at_b_star": sol.h_at_b_star,
        "branch": sol.branch,
        "slope_condition": sol.slope_condition,
        "case_rule_agrees": sol.case_rule_agrees,
        "at_p_min_boundary": sol.at_p_min_boundary,
        "c_star": sol.c_star,
    });
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    } else {
        println!("b_star={}", sol.b_star);
        println!("p_min={}", sol.p_min);
        println!("condition={}", sol.condition);
        println!("h_at_b_star={}", sol.h_at_b_star);
        println!("branch={}", serde_json::to_value(sol.branch).expect("enum").as_str().unwrap_or(""));
        println!("slope_condition={}", sol.slope_condition);
        println!("case_rule_agrees={}", sol.case_rule_agrees);
    }
    Ok(())
}

fn sim_config(cfg: &RunConfig, x: f64, b: f64) -> SimConfig {
    let mut sc = SimConfig::new(cfg.sim.paths, cfg.sim.seed, x, b);
    sc.time_horizon = cfg.sim.horizon;
    sc.euler_step = Some(cfg.sim.step);
    sc.clock = cfg.sim.clock;
    sc
}

fn simulate(cli: &Cli, cfg: &RunConfig, x: f64, b: Option<f64>, identity: Option<&str>) -> Result<(), CliError> {
    let model = cfg.levy_model()?;
    let params: ControlParams = cfg.control;
    let pr = ParisianProblem::new(&model, &params)?;
    let b = match b {
        Some(b) => b,
        None => pr.solve_b_star()?.b_star,
    };
    let sc = sim_config(cfg, x, b);
    let (name, estimate, analytic, extra) = match identity {
        None | Some("value") => {
            let est = simulate_value(&model, &params, &sc)?;
            let v = pr.performance_general_b(b)?.eval(x);
            ("value".to_string(), est, v, serde_json::Value::Null)
        }
        Some("appendix") => {
            let rep = verify_appendix_identity(&model, &params, &sc, b, x)?;
            let extra = json!({
                "rhs_quadrature": rep.rhs_quadrature,
                "second_term_closed": rep.second_term_closed,
                "second_term_quadrature": rep.second_term_quadrature,
            });
            ("appendix".to_string(), rep.lhs, rep.rhs_symbolic, extra)
        }
        Some(other) => {
            let id = Identity::from_name(other).ok_or_else(|| {
                CliError::Config(format!(
                    "--identity must be value, appendix, up_classical, up_parisian, down_before_up or down_ever, got {other}"
                ))
            })?;
            let est = estimate_identity(&model, &params, &sc, id)?;
            let set = ScaleSet::new(&model, &params)?;
            (other.to_string(), est, id.analytic(&set, x, b)?, serde_json::Value::Null)
        }
    };
    let z = estimate.z_score(analytic);
    let out = json!({
        "version": VERSION,
        "config": cfg,
        "target": name,
        "x": x,
        "b": b,
        "estimate": estimate,
        "analytic": analytic,
        "z_score": z,
        "details": extra,
    });
    if cli.json || cli.out.is_some() {
        emit_json(cli, &out)?;
    }
    if !cli.json {
        println!(
            "{name} x={x} b={b}: estimate {:.6} ± {:.6} (95% CI [{:.6}, {:.6}]), analytic {:.6}, z {:.2}",
            estimate.mean, estimate.std_error, estimate.ci95.0, estimate.ci95.1, analytic, z
        );
    }
    Ok(())
}

fn verify(cli: &Cli, cfg: &RunConfig, points: usize) -> Result<(), CliError> {
    if points == 0 {
        return Err(CliError::Config("--points must be positive".into()));
    }
    let pr = problem(cfg)?;
    let sol = pr.solve_b_star()?;
    let v = pr.value_function(&sol)?;
    let reports = verify_all(&pr, &v, points)?;
    let failed: Vec<String> = reports.iter().filter(|r| !r.pass).map(|r| r.name.clone()).collect();

    if cli.json || cli.out.is_some() {
        emit_json(
            cli,
            &json!({ "version": VERSION, "config": cfg, "b_star": sol.b_star, "reports": reports }),
        )?;
    }
    if !cli.json {
        println!("b_star={}", sol.b_star);
        println!("{:<40} {:>6} {:>12} {:>12}", "check", "result", "worst", "tolerance");
        for r in &reports {
            let status = if r.skipped { "skip" } else if r.pass { "pass" } else { "FAIL" };
            // one-sided checks only penalize positive residuals
            let worst = if r.one_sided && !r.skipped { r.max_signed() } else { r.max_abs };
            println!("{:<40} {:>6} {:>12.3e} {:>12.3e}", r.name, status, worst, r.tolerance);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(failed.join(", ")))
    }
}

fn sweep(
    cli: &Cli,
    cfg: &RunConfig,
    param: SweepParam,
    from: f64,
    to: f64,
    steps: usize,
    log: bool,
) -> Result<(), CliError> {
    if steps < 2 {
        return Err(CliError::Config("--steps must be at least 2".into()));
    }
    if !(from > 0.0 && to > from) {
        return Err(CliError::Config(format!("--from/--to need 0 < from < to, got {from}, {to}")));
    }
    let model = cfg.levy_model()?;
    let name = match param {
        SweepParam::P => "p",
        SweepParam::K => "K",
        SweepParam::Q => "q",
    };
    let mut csv = header(cfg, &format!("sweep --param {name} --from {from} --to {to} --steps {steps}"));
    csv.push_str(&format!("{name},p_min,condition,b_star,branch,case_rule_agrees\n"));
    for i in 0..steps {
        let t = i as f64 / (steps - 1) as f64;
        let value = if log { from * (to / from).powf(t) } else { from + (to - from) * t };
        let mut params = cfg.control;
        match param {
            SweepParam::P => params.p = value,
            SweepParam::K => params.k = value,
            SweepParam::Q => params.q = value,
        }
        params
            .validate(&model)
            .map_err(|e| CliError::Config(format!("sweep value {name}={value}: {e}")))?;
        let sol = ParisianProblem::new(&model, &params)?.solve_b_star()?;
        let branch = serde_json::to_value(sol.branch).expect("enum");
        csv.push_str(&format!(
            "{value},{},{},{},{},{}\n",
            sol.p_min,
            sol.condition,
            sol.b_star,
            branch.as_str().unwrap_or(""),
            sol.case_rule_agrees
        ));
    }
    emit_csv(cli, &csv)
}

fn dump_scale(cli: &Cli, cfg: &RunConfig) -> Result<(), CliError> {
    let model = cfg.levy_model()?;
    let set = ScaleSet::new(&model, &cfg.control)?;
    let s = &set.x;
    let mut csv = header(cfg, "dump-scale");
    csv.push_str("x,W,Wprime,Z,Zqp,Zqp_prime\n");
    for x in cfg.grid.points() {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            x,
            s.w(x),
            s.w_prime(x),
            s.z_q(x),
            s.z_qp(x),
            s.z_qp_prime(x)
        ));
    }
    emit_csv(cli, &csv)
}
