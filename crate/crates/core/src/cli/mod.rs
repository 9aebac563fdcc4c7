//! Command-line runner: config ingestion, routing, result files and plots.
//!
//! Every command computes all of its outputs in memory first and writes
//! them afterwards, so a failed run leaves the output directory untouched.

mod config;
pub mod plot;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use config::{Command, ConfigError, RunConfig};

use crate::asymptotics;
use crate::error::Error;
use crate::exact;
use crate::geometry::{triangulate, Curve, Domain};
use crate::isoperimetric::{
    eigenset_search, geometric_quotient, hole_placement_bound, EigensetResult, Part, Piece,
    Representation, SearchParams, SubsetRegion,
};
use crate::plaplace::{self, SolverParams};
use crate::shape::{self, PerturbationField};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "bvtrace", version, about = "Best constant of the BV trace embedding")]
pub struct Args {
    /// Run configuration (key=value lines, optional [command] sections).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub quiet: bool,
}

/// Everything persisted for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub version: String,
    pub command: Command,
    /// Seed actually used (config value unless overridden on the command line).
    pub seed: u64,
    pub config: RunConfig,
    pub payload: Value,
    /// Left empty in files so that reruns are byte-identical.
    pub wall_time: Option<f64>,
    /// `SOURCE_DATE_EPOCH` when set.
    pub timestamp: Option<String>,
}

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidDomain(_)
            | Error::InvalidInput(_)
            | Error::Unsupported(_)
            | Error::NoClosedForm(_)
            | Error::MeshTooCoarse { .. }
            | Error::NotGoodPoint(_) => RunError::Config(e.to_string()),
            _ => RunError::Numerical(e.to_string()),
        }
    }
}

/// Files produced by a run, in write order.
#[derive(Debug)]
pub struct Outputs {
    pub record: ResultRecord,
    pub files: Vec<(String, String)>,
    pub summary: String,
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    RunConfig::parse(text)
}

/// Executes the configured command with `seed` and returns the files to write.
pub fn run(config: &RunConfig, seed: u64) -> Result<Outputs, RunError> {
    let (payload, mut files, summary) = match config.command {
        Command::Exact => run_exact(config)?,
        Command::Asymptotics => run_asymptotics(config)?,
        Command::SolveP => run_solve(config, seed)?,
        Command::SweepP => run_sweep(config, seed)?,
        Command::EigensetSearch => run_eigenset(config, seed)?,
        Command::HoleSearch => run_hole_search(config, seed)?,
        Command::ShapeDerivative | Command::FdCheck => run_shape(config)?,
    };
    let record = ResultRecord {
        version: crate::VERSION.to_string(),
        command: config.command,
        seed,
        config: config.clone(),
        payload,
        wall_time: None,
        timestamp: std::env::var("SOURCE_DATE_EPOCH").ok(),
    };
    let json = serde_json::to_string_pretty(&record)
        .map_err(|e| RunError::Numerical(format!("serializing result: {e}")))?;
    files.insert(0, ("result.json".to_string(), json + "\n"));
    Ok(Outputs { record, files, summary })
}

/// SVG files for a record, or `None` when there is nothing to draw.
pub fn emit_plots(record: &ResultRecord) -> Option<Vec<(String, String)>> {
    let domain = record.config.domain().ok()?;
    match record.command {
        Command::SolveP => {
            let hole = hole_region(&record.config, &domain).ok()?;
            Some(vec![("domain.svg".into(), plot::domain_svg(&domain, None, hole.as_ref())?)])
        }
        Command::SweepP => {
            let lambdas: Vec<(f64, f64)> =
                serde_json::from_value(record.payload.get("lambdas")?.clone()).ok()?;
            let x = record.payload.get("extrapolated_lambda1")?.as_f64()?;
            Some(vec![("sweep.svg".into(), plot::sweep_svg(&lambdas, x)?)])
        }
        Command::EigensetSearch | Command::HoleSearch => {
            let key = if record.command == Command::HoleSearch { "trapped_search" } else { "eigenset" };
            let region: SubsetRegion =
                serde_json::from_value(record.payload.get(key)?.get("region")?.clone()).ok()?;
            let hole = hole_region(&record.config, &domain).ok()?;
            Some(vec![(
                "eigenset.svg".into(),
                plot::domain_svg(&domain, Some(&region), hole.as_ref())?,
            )])
        }
        _ => None,
    }
}

/// Writes `outputs` into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, outputs: &Outputs) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in &outputs.files {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}

type Routed = (Value, Vec<(String, String)>, String);

fn to_value<T: Serialize>(v: &T) -> Result<Value, RunError> {
    serde_json::to_value(v).map_err(|e| RunError::Numerical(format!("serializing result: {e}")))
}

fn run_exact(c: &RunConfig) -> Result<Routed, RunError> {
    let domain = c.domain()?;
    let r = exact::lambda1_closed_form(&domain)?;
    let summary = format!("lambda1 = {}", r.lambda1);
    Ok((to_value(&r)?, vec![], summary))
}

fn run_asymptotics(c: &RunConfig) -> Result<Routed, RunError> {
    let Domain::BoundaryPatch(patch) = c.domain()? else {
        return Err(RunError::Config("asymptotics needs domain=patch".into()));
    };
    let eps = c.list("eps")?.unwrap_or_default();
    let rows = asymptotics::table(&patch, &eps)?;
    let mut csv = String::from("eps,grad_exp,grad_oracle,vol_exp,vol_oracle,bdry_exp,bdry_oracle,quotient\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.eps,
            r.expansion.grad,
            r.oracle.grad,
            r.expansion.vol,
            r.oracle.vol,
            r.expansion.bdry,
            r.oracle.bdry,
            r.quotient
        ));
    }
    let orders = if eps.len() >= 2 {
        Some(asymptotics::convergence_order_check(&patch, &eps)?)
    } else {
        None
    };
    let payload = json!({
        "kappa": patch.kappa,
        "quotient_constant": asymptotics::quotient_constant(&patch.kappa),
        "rows": to_value(&rows)?,
        "orders": to_value(&orders)?,
    });
    let summary = format!("{} rows", rows.len());
    Ok((payload, vec![("asymptotics.csv".into(), csv)], summary))
}

fn mesh_size(c: &RunConfig, domain: &Domain) -> Result<f64, RunError> {
    Ok(c.get("h")?.unwrap_or(domain.diameter() / 50.0))
}

fn solver_params(c: &RunConfig, p: f64, seed: u64) -> Result<SolverParams, RunError> {
    let d = SolverParams::new(p);
    Ok(SolverParams {
        tau: c.get("tau")?,
        max_iterations: c.get_or("max_iterations", d.max_iterations)?,
        tolerance: c.get_or("tolerance", d.tolerance)?,
        window: c.get_or("window", d.window)?,
        memory: c.get_or("memory", d.memory)?,
        seed,
        ..d
    })
}

/// Disk hole from `hole_radius` and `hole_center` (default origin).
fn hole_region(c: &RunConfig, domain: &Domain) -> Result<Option<SubsetRegion>, RunError> {
    let Some(r) = c.get::<f64>("hole_radius")? else { return Ok(None) };
    if c.command == Command::HoleSearch {
        return Ok(None);
    }
    let center = c.point("hole_center")?.unwrap_or([0.0, 0.0]);
    let circle = Curve::circle(center, r, true);
    if !(0..64).all(|k| domain.contains_interior(circle.point(k as f64 / 64.0), 0.0)) {
        return Err(RunError::Config("hole must lie inside the domain".into()));
    }
    Ok(Some(SubsetRegion::from_pieces(
        Representation::Curves,
        vec![Piece { curve: circle, part: Part::Interior }],
    )?))
}

fn run_solve(c: &RunConfig, seed: u64) -> Result<Routed, RunError> {
    let domain = c.domain()?;
    let p: f64 = c.require("p")?;
    let mesh = Arc::new(triangulate(&domain, mesh_size(c, &domain)?)?);
    let hole = hole_region(c, &domain)?;
    let params = solver_params(c, p, seed)?;
    let mut r = plaplace::solve_lambda_p(&mesh, &params, hole.as_ref())?;
    r.diagnostics = plaplace::sigma_diagnostics(&r, p);
    let payload = json!({
        "mesh": {"h": mesh.h(), "vertices": mesh.num_vertices(), "triangles": mesh.num_triangles()},
        "result": to_value(&r)?,
    });
    let summary = format!("lambda_{p} = {} ({} iterations)", r.lambda, r.iterations);
    Ok((payload, vec![], summary))
}

fn run_sweep(c: &RunConfig, seed: u64) -> Result<Routed, RunError> {
    let domain = c.domain()?;
    let schedule = c.list("schedule")?.unwrap_or_default();
    let mesh = Arc::new(triangulate(&domain, mesh_size(c, &domain)?)?);
    let params = solver_params(c, schedule[0], seed)?;
    let r = plaplace::continuation_to_one(&mesh, &schedule, &params)?;
    let mut csv = String::from("p,lambda_p,iterations\n");
    for (s, &(p, l)) in r.stages.iter().zip(&r.lambdas) {
        csv.push_str(&format!("{p},{l},{}\n", s.iterations));
    }
    let summary = format!("extrapolated lambda1 = {}", r.extrapolated_lambda1);
    Ok((to_value(&r)?, vec![("sweep.csv".into(), csv)], summary))
}

fn search_params(c: &RunConfig, seed: u64) -> Result<SearchParams, RunError> {
    let d = SearchParams::default();
    Ok(SearchParams {
        family: c.family()?,
        t_start: c.get_or("t_start", d.t_start)?,
        t_end: c.get_or("t_end", d.t_end)?,
        iterations: c.get_or("iterations", d.iterations)?,
        chains: c.get("chains")?,
        seed,
        mesh_h: c.get("h")?,
        cap_directions: c.get_or("cap_directions", d.cap_directions)?,
        cap_levels: c.get_or("cap_levels", d.cap_levels)?,
    })
}

/// Search summary for JSON; the trace goes to its own CSV file.
fn eigenset_payload(r: &EigensetResult) -> Result<Value, RunError> {
    let mut v = to_value(r)?;
    if let Some(m) = v.as_object_mut() {
        m.remove("trace");
    }
    Ok(v)
}

fn trace_csv(r: &EigensetResult) -> String {
    let mut s = String::from("iteration,quotient,accepted\n");
    for t in &r.trace {
        s.push_str(&format!("{},{},{}\n", t.iteration, t.quotient, t.accepted));
    }
    s
}

fn vertex_list(r: &SubsetRegion) -> String {
    let mut s = String::new();
    for (i, l) in r.outline(std::f64::consts::PI / 90.0).iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        for p in l {
            s.push_str(&format!("{} {}\n", p[0], p[1]));
        }
    }
    s
}

fn run_eigenset(c: &RunConfig, seed: u64) -> Result<Routed, RunError> {
    let domain = c.domain()?;
    let params = search_params(c, seed)?;
    let hole = hole_region(c, &domain)?;
    let r = eigenset_search(&domain, &params, hole.as_ref(), c.get("trapped_volume")?)?;
    let payload = json!({ "eigenset": eigenset_payload(&r)? });
    let files = vec![
        ("trace.csv".into(), trace_csv(&r)),
        ("eigenset.txt".into(), vertex_list(&r.region)),
    ];
    let summary = format!("quotient = {} ({})", r.quotient, r.origin);
    Ok((payload, files, summary))
}

fn run_hole_search(c: &RunConfig, seed: u64) -> Result<Routed, RunError> {
    let domain = c.domain()?;
    let (vol, _) = domain.measures()?;
    let x = c.point("good_point")?.unwrap_or_default();
    let r: f64 = c.require("hole_radius")?;
    let alpha = match c.get::<f64>("alpha")? {
        Some(a) => a,
        None => c.require::<f64>("alpha_fraction")? * vol,
    };
    let bound = hole_placement_bound(&domain, x, r, alpha)?;
    let params = search_params(c, seed)?;
    let search = eigenset_search(&domain, &params, None, Some(alpha))?;
    let payload = json!({
        "alpha": alpha,
        "bound": bound,
        "trapped_search": eigenset_payload(&search)?,
        "gap": bound - search.quotient,
    });
    let files = vec![
        ("trace.csv".into(), trace_csv(&search)),
        ("eigenset.txt".into(), vertex_list(&search.region)),
    ];
    let summary = format!("bound = {bound}, trapped search = {}", search.quotient);
    Ok((payload, files, summary))
}

fn field(c: &RunConfig) -> Result<PerturbationField, RunError> {
    let name = c.field_name()?;
    Ok(match name.as_str() {
        "translation" => match c.point("translation")? {
            Some(v) => PerturbationField::translation(v.to_vec())?,
            None => PerturbationField::builtin("translation", 2)?,
        },
        "polynomial" => {
            let terms = |key: &str| -> Result<Vec<(u32, u32, f64)>, RunError> {
                let rows = c.rows(key, 3)?.unwrap_or_default();
                rows.iter()
                    .map(|r| {
                        if r[0] < 0.0 || r[1] < 0.0 || r[0].fract() != 0.0 || r[1].fract() != 0.0 {
                            return Err(RunError::Config(format!("{key}: exponents must be non-negative integers")));
                        }
                        Ok((r[0] as u32, r[1] as u32, r[2]))
                    })
                    .collect()
            };
            PerturbationField::polynomial([terms("poly_x")?, terms("poly_y")?], "polynomial")?
        }
        other => PerturbationField::builtin(other, 2)?,
    })
}

fn run_shape(c: &RunConfig) -> Result<Routed, RunError> {
    let domain = c.domain()?;
    let set = match c.get_or("set", "whole".to_string())?.as_str() {
        "cap" => {
            let d = c.point("cap_direction")?.unwrap_or_default();
            SubsetRegion::cap(&domain, d, c.require("cap_offset")?)?
        }
        _ => SubsetRegion::whole(&domain)?,
    };
    let lambda1 = match c.get::<f64>("lambda1")? {
        Some(l) => l,
        None => geometric_quotient(&set, &domain)?,
    };
    let f = field(c)?;
    let delta = c.get_or("fd_delta", 1e-3)?;
    let sd = shape::shape_derivative(&set, lambda1, &f)?;
    let fd = shape::finite_difference_check(&domain, &set, lambda1, &f, delta)?;
    let payload = if c.command == Command::ShapeDerivative {
        json!({
            "value": sd.value,
            "terms": {"interior": sd.interior, "trace": sd.trace, "transport": sd.transport},
            "convention": sd.convention,
            "lambda1": lambda1,
            "fd_check": {"delta": fd.delta, "central_diff": fd.central_diff, "gap": fd.gap},
        })
    } else {
        let mut v = to_value(&fd)?;
        v["lambda1"] = json!(lambda1);
        v
    };
    let summary = format!("formula = {}, central difference = {}", sd.value, fd.central_diff);
    Ok((payload, vec![], summary))
}

/// Entry point for the binary; returns the process exit code.
pub fn main() -> i32 {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    run_args(&args)
}

/// Runs with parsed arguments; shared with tests.
pub fn run_args(args: &Args) -> i32 {
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", args.config.display());
            return EXIT_CONFIG;
        }
    };
    let config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    let seed = args.seed.unwrap_or(config.seed);
    let dir = args
        .out
        .clone()
        .or_else(|| config.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("bvtrace-out"));
    let start = Instant::now();
    let mut outputs = match run(&config, seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    match emit_plots(&outputs.record) {
        Some(svgs) => outputs.files.extend(svgs),
        None if !args.quiet => eprintln!("notice: nothing to plot for {}", config.command),
        None => {}
    }
    if let Err(e) = write_outputs(&dir, &outputs) {
        eprintln!("numerical failure: writing {}: {e}", dir.display());
        return EXIT_NUMERICAL;
    }
    if !args.quiet {
        println!("{}: {}", config.command, outputs.summary);
        for (name, _) in &outputs.files {
            println!("wrote {}", dir.join(name).display());
        }
        eprintln!("wall time {:.3} s", start.elapsed().as_secs_f64());
    }
    EXIT_OK
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> RunConfig {
        parse_config(text).unwrap()
    }

    #[test]
    fn exact_routes_to_closed_form() {
        let out = run(&cfg("command=exact\ndomain=ball\nN=2\nR=1"), 0).unwrap();
        assert_eq!(out.record.payload["lambda1"], json!(0.5));
        assert!(emit_plots(&out.record).is_none());
    }

    #[test]
    fn record_round_trips() {
        let out = run(&cfg("command=exact\ndomain=annulus\nr=1\nR=4\nseed=7"), 7).unwrap();
        let json = &out.files[0].1;
        let back: ResultRecord = serde_json::from_str(json).unwrap();
        assert_eq!(back, out.record);
        assert_eq!(back.payload["has_extremal"], json!(false));
    }

    #[test]
    fn shape_derivative_payload() {
        let out = run(&cfg("command=shape-derivative\ndomain=disk\nR=1\nfield=dilation"), 0).unwrap();
        let p = &out.record.payload;
        assert!((p["value"].as_f64().unwrap() - 0.5).abs() < 1e-8);
        assert!(p["fd_check"]["gap"].as_f64().unwrap() < 1e-6);
        assert!(p["terms"]["interior"].is_number());
    }

    #[test]
    fn eigenset_plot_on_disk() {
        let out = run(
            &cfg("command=eigenset-search\ndomain=disk\nR=1\nfamily=boundary_caps\ncap_directions=8\ncap_levels=8"),
            0,
        )
        .unwrap();
        let svgs = emit_plots(&out.record).unwrap();
        assert!(svgs[0].1.contains("fill-opacity"));
    }

    #[test]
    fn library_input_errors_are_config_errors() {
        let e = run(&cfg("command=solve-p\ndomain=disk\nR=1\np=2\nhole_radius=2"), 0).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_CONFIG);
    }
}
