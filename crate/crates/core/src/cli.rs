//! Experiment runner behind the `thinobs` binary.
//!
//! A run reads a JSON config, solves, evaluates the radial functionals and
//! the free boundary, and writes CSV/JSON artifacts. Everything except
//! `timing.json` is a deterministic function of the config and seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::coefficients::{CoefficientSpec, ProblemDescription, ProblemSpec, ScalarSpec};
use crate::error::{Error, Result};
use crate::freeboundary::{analyze, blowup, classify, FreeBoundaryOptions, PointClass};
use crate::functionals::{frequency_profile, identity_checks, oscillation_decay, ProfileOptions};
use crate::grid::{build_grid, Grid};
use crate::operator::{assemble_energy, SymmetricForm};
use crate::oracle::{profile_ode, OracleKind};
use crate::solver::{
    complementarity_report, solve_penalized_with, solve_psor_with, suggested_omega, PenaltyOptions, PsorOptions,
    SolutionField,
};

pub const SCHEMA: &str = "thin-obstacle/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Psor,
    Penalized,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Relaxation factor; derived from the grid when absent.
    #[serde(default)]
    pub omega: Option<f64>,
    /// Penalty ladder, solved in order with warm starts.
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    200_000
}

fn default_epsilons() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Psor,
            tol: default_tol(),
            max_iter: default_max_iter(),
            omega: None,
            epsilons: default_epsilons(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Dotted path of a config field, or `h` for both spacings.
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    pub n: usize,
    pub a: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub hx: f64,
    pub hy: f64,
    #[serde(default)]
    pub coefficients: CoefficientSpec,
    #[serde(default)]
    pub obstacle: ScalarSpec,
    #[serde(default)]
    pub source: ScalarSpec,
    #[serde(default)]
    pub boundary: ScalarSpec,
    #[serde(default)]
    pub source_independent_of_y: bool,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub profile: ProfileOptions,
    #[serde(default)]
    pub free_boundary: FreeBoundaryOptions,
    /// Thin point for `classify`, `blowup` and the decay diagnostics; origin by default.
    #[serde(default)]
    pub point: Option<Vec<f64>>,
    #[serde(default = "default_blowup_radii")]
    pub blowup_radii: Vec<f64>,
    #[serde(default = "default_oracle_steps")]
    pub oracle_steps: usize,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Interior nodes sampled for the residual spot check.
    #[serde(default = "default_spot_checks")]
    pub spot_checks: usize,
}

fn default_blowup_radii() -> Vec<f64> {
    vec![0.5, 0.25, 0.125]
}

fn default_oracle_steps() -> usize {
    crate::oracle::DEFAULT_PROFILE_STEPS
}

fn default_spot_checks() -> usize {
    256
}

/// `"oracle:<kind>"` and bare numbers are accepted for the scalar fields.
fn expand_shorthand(v: &mut Value) -> Result<()> {
    for key in ["obstacle", "source", "boundary"] {
        let Some(field) = v.get_mut(key) else { continue };
        match field {
            Value::String(s) => {
                let Some(kind) = s.strip_prefix("oracle:") else {
                    return Err(Error::config(key, format!("unrecognized shorthand `{s}`")));
                };
                let kind: OracleKind = kind.parse()?;
                *field = serde_json::to_value(ScalarSpec::oracle(kind))?;
            }
            Value::Number(n) => {
                let c = n.as_f64().unwrap_or(f64::NAN);
                *field = serde_json::to_value(ScalarSpec::constant(c))?;
            }
            _ => {}
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_value(mut v: Value) -> Result<Self> {
        expand_shorthand(&mut v)?;
        let cfg: Self = serde_json::from_value(v).map_err(|e| Error::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        Self::from_value(v)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::config("schema", format!("expected `{SCHEMA}`, got `{}`", self.schema)));
        }
        if !(self.n == 1 || self.n == 2) {
            return Err(Error::config("n", format!("must be 1 or 2, got {}", self.n)));
        }
        if !(self.a.is_finite() && (0.0..1.0).contains(&self.a)) {
            return Err(Error::config("a", format!("must lie in [0, 1), got {}", self.a)));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::config("R", format!("must be positive, got {}", self.radius)));
        }
        for (name, h) in [("hx", self.hx), ("hy", self.hy)] {
            if !(h.is_finite() && h > 0.0 && h <= self.radius) {
                return Err(Error::config(name, format!("must lie in (0, R], got {h}")));
            }
        }
        let s = &self.solver;
        if !(s.tol.is_finite() && s.tol > 0.0) {
            return Err(Error::config("solver.tol", format!("must be positive, got {}", s.tol)));
        }
        if let Some(w) = s.omega {
            if !(w > 0.0 && w < 2.0) {
                return Err(Error::config("solver.omega", format!("must lie in (0, 2), got {w}")));
            }
        }
        if s.method == Method::Penalized && s.epsilons.is_empty() {
            return Err(Error::config("solver.epsilons", "empty penalty ladder"));
        }
        if s.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::config("solver.epsilons", "entries must be positive"));
        }
        if let Some(p) = &self.point {
            if p.len() != self.n || p.iter().any(|v| !v.is_finite()) {
                return Err(Error::config("point", format!("needs {} finite coordinates", self.n)));
            }
        }
        if self.blowup_radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::config("blowup_radii", "entries must be positive"));
        }
        Ok(())
    }

    pub fn point(&self) -> Vec<f64> {
        self.point.clone().unwrap_or_else(|| vec![0.0; self.n])
    }

    pub fn description(&self) -> ProblemDescription {
        ProblemDescription {
            coefficients: self.coefficients.clone(),
            obstacle: self.obstacle.clone(),
            source: self.source.clone(),
            boundary: self.boundary.clone(),
            source_independent_of_y: self.source_independent_of_y,
        }
    }

    /// Copy with one field replaced, addressed by a dotted path (or `h`).
    pub fn with_parameter(&self, parameter: &str, value: f64) -> Result<Self> {
        let mut v = serde_json::to_value(self)?;
        let paths: Vec<&str> = if parameter == "h" { vec!["hx", "hy"] } else { vec![parameter] };
        for path in paths {
            let mut slot = &mut v;
            for part in path.split('.') {
                slot = slot
                    .get_mut(part)
                    .ok_or_else(|| Error::config("sweep.parameter", format!("unknown field `{parameter}`")))?;
            }
            *slot = match slot {
                Value::Number(_) | Value::Null => {
                    if path == "n" {
                        json!(value as usize)
                    } else {
                        json!(value)
                    }
                }
                _ => return Err(Error::config("sweep.parameter", format!("`{parameter}` is not numeric"))),
            };
        }
        Self::from_value(v)
    }
}

/// Grid, problem and assembled form of a config.
pub struct Setup {
    pub grid: Grid,
    pub problem: ProblemSpec,
    pub form: SymmetricForm,
}

pub fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let grid = build_grid(cfg.n, cfg.radius, cfg.hx, cfg.hy, cfg.a)?;
    let problem = ProblemSpec::build(&grid, cfg.a, &cfg.description())?;
    let form = assemble_energy(&grid, &problem)?;
    Ok(Setup { grid, problem, form })
}

fn psor(cfg: &ExperimentConfig, s: &Setup) -> Result<SolutionField> {
    let opts = PsorOptions {
        omega: cfg.solver.omega.unwrap_or_else(|| suggested_omega(&s.grid)),
        tol: cfg.solver.tol,
        max_iter: cfg.solver.max_iter,
        ..Default::default()
    };
    solve_psor_with(&s.form, &s.problem, &opts)
}

/// Solves with the configured method; the penalty ladder also records the
/// distance to the projected SOR solution.
pub fn solve(cfg: &ExperimentConfig, s: &Setup) -> Result<(SolutionField, Value)> {
    let reference = psor(cfg, s)?;
    match cfg.solver.method {
        Method::Psor => {
            let info = json!({
                "method": "psor",
                "iterations": reference.iterations,
                "final_residual": reference.final_residual,
            });
            Ok((reference, info))
        }
        Method::Penalized => {
            let mut rows = Vec::new();
            let mut initial = None;
            let mut last = None;
            for &eps in &cfg.solver.epsilons {
                let opts = PenaltyOptions {
                    initial,
                    ..Default::default()
                };
                let sol = solve_penalized_with(&s.form, &s.problem, eps, cfg.solver.tol, &opts)?;
                let diff = sol
                    .values
                    .iter()
                    .zip(&reference.values)
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                rows.push(json!({"epsilon": eps, "iterations": sol.iterations, "linf_to_psor": diff}));
                initial = Some(sol.values.clone());
                last = Some(sol);
            }
            let info = json!({
                "method": "penalized",
                "psor_iterations": reference.iterations,
                "ladder": rows,
            });
            Ok((last.expect("nonempty ladder"), info))
        }
    }
}

/// Residual `|(K U + load)_i| / W_i` at interior nodes drawn with the seed.
fn spot_check(cfg: &ExperimentConfig, s: &Setup, sol: &SolutionField) -> Value {
    let interior: Vec<usize> = (0..s.grid.node_count())
        .filter(|&i| !s.grid.is_thin(i) && !s.grid.is_boundary(i))
        .collect();
    let count = cfg.spot_checks.min(interior.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut picked: Vec<usize> = sample(&mut rng, interior.len(), count).into_iter().map(|k| interior[k]).collect();
    picked.sort_unstable();
    let res: Vec<f64> = picked
        .iter()
        .map(|&i| ((s.form.row_dot(i, &sol.values) + s.form.load[i]) / s.form.row_weight[i]).abs())
        .collect();
    let max = res.iter().fold(0.0f64, |m, v| m.max(*v));
    let mean = if res.is_empty() { 0.0 } else { res.iter().sum::<f64>() / res.len() as f64 };
    json!({"seed": cfg.seed, "samples": count, "max_abs": max, "mean_abs": mean})
}

fn coords_header(n: usize) -> &'static str {
    if n == 1 {
        "x1"
    } else {
        "x1,x2"
    }
}

fn coords(grid: &Grid, i: usize) -> String {
    let p = grid.node_point(i);
    if grid.n == 1 {
        format!("{}", p.x[0])
    } else {
        format!("{},{}", p.x[0], p.x[1])
    }
}

pub fn solution_csv(sol: &SolutionField) -> String {
    let g = &sol.grid;
    let mut out = format!("{},y,U\n", coords_header(g.n));
    for i in 0..g.node_count() {
        let _ = writeln!(out, "{},{},{}", coords(g, i), g.node_point(i).y, sol.values[i]);
    }
    out
}

pub fn thin_csv(sol: &SolutionField, problem: &ProblemSpec) -> String {
    let g = &sol.grid;
    let mut out = format!("{},U,psi,trace,active\n", coords_header(g.n));
    for i in 0..g.thin_node_count() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            coords(g, i),
            sol.values[i],
            problem.psi[i],
            sol.trace[i],
            sol.active[i] as u8
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Verb {
    /// Solve and write the field, thin traces and complementarity report.
    Solve,
    /// Solve, then radial functionals, identities and free boundary.
    Diagnose,
    /// Solve and classify the configured point.
    Classify,
    /// Solve and write blow-ups at the configured point.
    Blowup,
    /// Tabulate the angular profile for the configured exponent.
    Oracle,
    /// Rerun `diagnose` for each value of one config field.
    Sweep,
}

impl Verb {
    fn name(self) -> &'static str {
        match self {
            Verb::Solve => "solve",
            Verb::Diagnose => "diagnose",
            Verb::Classify => "classify",
            Verb::Blowup => "blowup",
            Verb::Oracle => "oracle",
            Verb::Sweep => "sweep",
        }
    }
}

/// Numbers a sweep row reports.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunSummary {
    pub iterations: Option<usize>,
    pub ntilde: Option<f64>,
    pub class: Option<PointClass>,
    pub decay_slope: Option<f64>,
    pub h_slope: Option<f64>,
    pub phi_margin: Option<f64>,
    pub weiss_margin: Option<f64>,
    pub k_prime: Option<f64>,
    pub c_weiss: Option<f64>,
}

struct Artifacts<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Artifacts<'_> {
    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        fs::write(self.dir.join(name), content)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }
}

/// Executes one verb (other than `sweep`) into `out`.
pub fn run(cfg: &ExperimentConfig, verb: Verb, out: &Path) -> Result<RunSummary> {
    fs::create_dir_all(out)?;
    let started = Instant::now();
    let mut art = Artifacts { dir: out, files: Vec::new() };
    let mut summary = RunSummary::default();
    let mut results = serde_json::Map::new();

    if verb == Verb::Oracle {
        let kappa = (3.0 - cfg.a) / 2.0;
        let prof = profile_ode(cfg.a, kappa, cfg.oracle_steps).map_err(|e| e.in_stage("oracle"))?;
        art.write("oracle_profile.csv", &prof.to_csv())?;
        results.insert(
            "oracle".into(),
            json!({
                "a": prof.a,
                "kappa": prof.kappa,
                "residual": prof.residual,
                "neumann_defect": prof.neumann_defect,
                "dirichlet_value": prof.dirichlet_value(),
            }),
        );
    } else {
        let s = setup(cfg).map_err(|e| e.in_stage("setup"))?;
        let (sol, info) = solve(cfg, &s).map_err(|e| e.in_stage("solve"))?;
        summary.iterations = Some(sol.iterations);
        results.insert("solver".into(), info);
        results.insert("complementarity".into(), serde_json::to_value(complementarity_report(&sol, &s.problem))?);
        results.insert("spot_check".into(), spot_check(cfg, &s, &sol));
        art.write("solution.csv", &solution_csv(&sol))?;
        art.write("thin.csv", &thin_csv(&sol, &s.problem))?;
        let x0 = cfg.point();

        if matches!(verb, Verb::Diagnose | Verb::Sweep) {
            let prof = frequency_profile(&sol, &s.problem, &cfg.profile).map_err(|e| e.in_stage("functionals"))?;
            art.write("profile.csv", &prof.to_csv())?;
            results.insert("profile".into(), prof.summary());
            summary.phi_margin = prof.phi_monotonicity.map(|m| m.violation / m.range.max(f64::MIN_POSITIVE));
            summary.weiss_margin = prof.weiss_monotonicity.map(|m| m.violation / m.range.max(f64::MIN_POSITIVE));
            summary.k_prime = prof.k_prime;
            summary.c_weiss = prof.c_weiss;

            let lo = (4.0 * s.grid.max_spacing()).max(0.15 * cfg.radius);
            let r = crate::functionals::geometric(lo, 0.85 * cfg.radius, 30);
            let ids = identity_checks(&sol, &s.problem, &r, 0.2 * cfg.radius, 0.8 * cfg.radius)
                .map_err(|e| e.in_stage("identities"))?;
            art.json("identities.json", &ids)?;

            match oscillation_decay(&sol, &x0, None) {
                Ok(d) => results.insert("oscillation_decay".into(), json!({"slope": d.slope, "target": d.target})),
                Err(e) => results.insert("oscillation_decay".into(), json!({"error": e.to_string()})),
            };

            let fb = analyze(&sol, &s.problem, &cfg.free_boundary).map_err(|e| e.in_stage("freeboundary"))?;
            art.write("free_boundary.json", &(fb.to_json()? + "\n"))?;
            art.write("free_boundary.csv", &fb.to_csv())?;
            if let Some(g) = &fb.graph {
                art.write("graph.csv", &g.to_csv())?;
            }
            results.insert(
                "free_boundary".into(),
                json!({
                    "contact_nodes": fb.contact_nodes,
                    "gamma_nodes": fb.gamma_nodes,
                    "gamma_star_nodes": fb.gamma_star_nodes,
                    "gamma_outside_star": fb.gamma_outside_star,
                    "disagreements": fb.disagreements,
                }),
            );
        }

        if matches!(verb, Verb::Diagnose | Verb::Classify | Verb::Sweep) {
            match classify(&sol, &s.problem, &x0, &cfg.free_boundary.classify) {
                Ok(c) => {
                    summary.ntilde = Some(c.ntilde);
                    summary.class = Some(c.class);
                    summary.decay_slope = c.decay_slope;
                    results.insert("classification".into(), serde_json::to_value(&c)?);
                }
                Err(e) => {
                    results.insert("classification".into(), json!({"error": e.to_string()}));
                }
            }
            match crate::freeboundary::decay_fit(&sol, &s.problem, &x0, None) {
                Ok(d) => {
                    summary.h_slope = Some(d.h_slope);
                    art.json("decay.json", &d)?;
                }
                Err(e) => {
                    results.insert("decay_error".into(), json!(e.to_string()));
                }
            }
        }

        if verb == Verb::Blowup {
            let mut rows = Vec::new();
            for (k, &r) in cfg.blowup_radii.iter().enumerate() {
                let b = blowup(&sol, &s.problem, &x0, r, None).map_err(|e| e.in_stage("blowup"))?;
                art.write(&format!("blowup_{k}.csv"), &solution_csv(&b.field))?;
                rows.push(json!({"r": r, "d_r": b.d_r, "height_at_one": b.height_at_one}));
            }
            results.insert("blowups".into(), json!(rows));
        }
    }

    let manifest = json!({
        "schema": SCHEMA,
        "verb": verb.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "results": results,
        "files": art.files,
    });
    art.json("manifest.json", &manifest)?;
    let timing = json!({"wall_seconds": started.elapsed().as_secs_f64()});
    fs::write(out.join("timing.json"), serde_json::to_string_pretty(&timing)? + "\n")?;
    Ok(summary)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Runs `diagnose` for every value and writes `sweep.csv`; failures become
/// rows with an error message.
pub fn sweep(cfg: &ExperimentConfig, parameter: &str, values: &[f64], out: &Path) -> Result<String> {
    fs::create_dir_all(out)?;
    let mut table = String::from(
        "value,status,iterations,ntilde,class,decay_slope,h_slope,phi_margin,weiss_margin,k_prime,c_weiss,error\n",
    );
    for (k, &value) in values.iter().enumerate() {
        let dir = out.join(format!("run_{k:03}"));
        let outcome = cfg.with_parameter(parameter, value).and_then(|c| run(&c, Verb::Sweep, &dir));
        match outcome {
            Ok(s) => {
                let class = s.class.map(|c| format!("{c:?}").to_lowercase()).unwrap_or_default();
                let _ = writeln!(
                    table,
                    "{value},ok,{},{},{class},{},{},{},{},{},{},",
                    s.iterations.map(|i| i.to_string()).unwrap_or_default(),
                    opt(s.ntilde),
                    opt(s.decay_slope),
                    opt(s.h_slope),
                    opt(s.phi_margin),
                    opt(s.weiss_margin),
                    opt(s.k_prime),
                    opt(s.c_weiss)
                );
            }
            Err(e) => {
                let msg = e.to_string().replace([',', '\n'], ";");
                let _ = writeln!(table, "{value},failed,,,,,,,,,,{msg}");
            }
        }
    }
    fs::write(out.join("sweep.csv"), &table)?;
    Ok(table)
}

#[derive(Debug, Parser)]
#[command(name = "thinobs", version, about = "Thin obstacle solver and free boundary diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
    /// JSON experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for sampled checks (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub quiet: bool,
}

/// Exit status for an error: 2 invalid config, 3 nonconvergence, 4 oracle
/// failure, 1 anything else.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::InvalidConfiguration { .. }
        | Error::InvalidParameter { .. }
        | Error::InvalidCoefficient { .. }
        | Error::UnsupportedKind(_)
        | Error::UnsupportedRadius { .. }
        | Error::OutOfDomain { .. }
        | Error::Json(_) => 2,
        Error::NonConverged { .. } => 3,
        Error::OracleFailure(_) => 4,
        _ => 1,
    }
}

fn execute(cli: &Cli) -> Result<String> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::config("--config", "a config file is required"))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    if cli.verb == Verb::Sweep {
        let sw = cfg
            .sweep
            .clone()
            .ok_or_else(|| Error::config("sweep", "the sweep verb needs a `sweep` section"))?;
        let table = sweep(&cfg, &sw.parameter, &sw.values, &out)?;
        return Ok(table);
    }
    let summary = run(&cfg, cli.verb, &out)?;
    Ok(serde_json::to_string_pretty(&summary)? + "\n")
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(text) => {
            if !cli.quiet {
                print!("{text}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
