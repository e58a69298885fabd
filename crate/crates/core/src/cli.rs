//! Experiment runner: config parsing, pipelines and artifact emission.
//!
//! Every pipeline writes `manifest.json`, `report.json` and `series.csv` into
//! the output directory, plus `events.jsonl` when event logging is enabled.
//! Wall-clock time goes to a separate `timing.json` so that the other
//! artifacts are byte-identical across repeated runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{
    self, comparison_audit, invariant_probe, mean_oracle, mean_violation, moment_bound, moment_curve, site_means,
    w1_ordered, AnalysisError,
};
use crate::configuration::{dense_distance, dense_norm, Configuration};
use crate::lattice::{Graph, GraphSpec, Site, WeightSpec, Weights};
use crate::model::presets::{catalog, Preset};
use crate::model::{admissibility_check, subcriticality_margin, AdmissibilityReport, ModelSpec};
use crate::noise::NoiseFabric;
use crate::simulator::{coupled_ensemble, SimParams, Simulator, Trajectory};
use crate::spread;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ADMISSIBILITY: i32 = 3;
pub const EXIT_REFUSED: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("admissibility failure: {0}")]
    Admissibility(String),
    #[error("analysis refused: {0}")]
    Refused(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Admissibility(_) => EXIT_ADMISSIBILITY,
            CliError::Refused(_) => EXIT_REFUSED,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::NotSubcritical(_) => CliError::Refused(e.to_string()),
            AnalysisError::Model(crate::model::ModelError::Nonlinear(_)) => CliError::Refused(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn config_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Admit,
    Simulate,
    Couple,
    Contract,
    Invariant,
    Spread,
    Heatkernel,
    Oracle,
}

/// Graph as written in a config: a `GraphSpec` or an edge-list file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphConfig {
    Spec(GraphSpec),
    File(EdgeFile),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeFile {
    pub edge_file: PathBuf,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig::Spec(GraphSpec::Zd { dim: 1, radius: 10 })
    }
}

/// Initial configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Mass at one site, given by coordinates or id (origin when neither is set).
    Point {
        #[serde(default)]
        coords: Option<Vec<i64>>,
        #[serde(default)]
        site: Option<Site>,
        #[serde(default = "one")]
        mass: f64,
    },
    /// Equal mass on every site within `radius` of the origin.
    Ball { radius: usize, mass: f64 },
    /// Explicit `{site_id: mass}` map.
    Sites { masses: Configuration },
}

fn one() -> f64 {
    1.0
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Point { coords: None, site: None, mass: 1.0 }
    }
}

impl InitialSpec {
    pub fn build(&self, graph: &Graph) -> Result<Vec<f64>, CliError> {
        let n = graph.site_count();
        let mut eta = vec![0.0; n];
        match self {
            InitialSpec::Point { coords, site, mass } => {
                let x = match (coords, site) {
                    (Some(c), _) => graph
                        .site_at(c)
                        .ok_or_else(|| CliError::Config(format!("initial coords {c:?} outside the graph")))?,
                    (None, Some(s)) if *s < n => *s,
                    (None, Some(s)) => return Err(CliError::Config(format!("initial site {s} outside the graph"))),
                    (None, None) => graph.origin(),
                };
                eta[x] = *mass;
            }
            InitialSpec::Ball { radius, mass } => {
                for x in graph.ball(graph.origin(), *radius).map_err(config_err)? {
                    eta[x] = *mass;
                }
            }
            InitialSpec::Sites { masses } => {
                for (x, m) in masses.iter() {
                    if x >= n {
                        return Err(CliError::Config(format!("initial site {x} outside the graph")));
                    }
                    eta[x] = m;
                }
            }
        }
        if eta.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(CliError::Config("initial masses must be finite and nonnegative".into()));
        }
        Ok(eta)
    }
}

/// Knobs of the analysis pipelines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisParams {
    /// Lower start `xi_0 = lower_scale * eta_0` for coupled pipelines.
    pub lower_scale: f64,
    /// Record times checked by `oracle`; empty means all.
    pub times: Vec<f64>,
    pub burn_in: f64,
    /// Mass per site of the large start in `invariant`.
    pub large_mass: f64,
    pub eps: f64,
    /// Fit window for the front; defaults to `[T/4, T]`.
    pub fit_window: Option<(f64, f64)>,
    pub containment_factor: f64,
    pub containment_times: Vec<f64>,
    /// Time of the sup-moment profile; defaults to `T`.
    pub profile_time: Option<f64>,
    pub walkers: usize,
    pub walk_rate: f64,
    pub walk_range: usize,
    pub walk_times: Vec<f64>,
    /// Replicas written to `series.csv` by `simulate`.
    pub csv_replicas: usize,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            lower_scale: 0.5,
            times: Vec::new(),
            burn_in: 5.0,
            large_mass: 5.0,
            eps: 0.01,
            fit_window: None,
            containment_factor: 1.5,
            containment_times: Vec::new(),
            profile_time: None,
            walkers: 100_000,
            walk_rate: 1.0,
            walk_range: 1,
            walk_times: vec![0.5, 1.0, 2.0],
            csv_replicas: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pipeline: Pipeline,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: Option<Preset>,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub weight: Option<WeightSpec>,
    #[serde(default)]
    pub sim: SimParams,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub analysis: AnalysisParams,
}

impl ExperimentConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(config_err)
        } else {
            toml::from_str(text).map_err(config_err)
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let GraphConfig::File(f) = &mut cfg.graph {
            if f.edge_file.is_relative() {
                if let Some(dir) = path.parent() {
                    f.edge_file = dir.join(&f.edge_file);
                }
            }
        }
        Ok(cfg)
    }
}

#[derive(Parser, Debug, Clone)]
#[command(name = "cspin", version, about = "Continuous-spin particle system experiments")]
pub struct Args {
    /// Experiment config (TOML or JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed, overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: logical cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Replica count, overrides the config.
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Print the preset catalog and exit.
    #[arg(long)]
    pub list_presets: bool,
}

/// Outcome of a pipeline: the report, a CSV body and optional event lines.
pub struct Artifacts {
    pub report: serde_json::Value,
    pub series: String,
    pub events: Option<String>,
    /// Set when the run completed but a check failed with a dedicated exit code.
    pub failure: Option<CliError>,
}

struct Context {
    graph: Graph,
    weights: Weights,
    model: Option<ModelSpec>,
    eta0: Vec<f64>,
    fabric: NoiseFabric,
}

fn build_context(cfg: &ExperimentConfig) -> Result<Context, CliError> {
    let graph = match &cfg.graph {
        GraphConfig::Spec(spec) => spec.build().map_err(config_err)?,
        GraphConfig::File(f) => {
            let text = fs::read_to_string(&f.edge_file)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", f.edge_file.display())))?;
            Graph::parse_edge_list(&text).map_err(config_err)?
        }
    };
    let weight = cfg
        .weight
        .clone()
        .or_else(|| cfg.model.as_ref().map(Preset::default_weight))
        .unwrap_or(WeightSpec::Exponential { delta: 1.0 });
    let weights = Weights::new(&weight, &graph).map_err(config_err)?;
    let model = cfg.model.as_ref().map(|p| p.build(&graph)).transpose().map_err(config_err)?;
    cfg.sim.validate().map_err(config_err)?;
    let eta0 = cfg.initial.build(&graph)?;
    Ok(Context { graph, weights, model, eta0, fabric: NoiseFabric::new(cfg.seed) })
}

fn require_model(ctx: &Context) -> Result<&ModelSpec, CliError> {
    ctx.model.as_ref().ok_or_else(|| CliError::Config("this pipeline needs a [model] section".into()))
}

fn admit(ctx: &Context) -> Result<AdmissibilityReport, CliError> {
    let model = require_model(ctx)?;
    admissibility_check(model, &ctx.graph, &ctx.weights).map_err(config_err)
}

fn require_admissible(ctx: &Context) -> Result<AdmissibilityReport, CliError> {
    let report = admit(ctx)?;
    if let Some(f) = report.first_failure() {
        return Err(CliError::Admissibility(format!("({}) violated: {}", f.name, f.detail)));
    }
    Ok(report)
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn series_csv(times: &[f64], values: &[f64], stderr: &[f64], bound: Option<&[f64]>) -> String {
    let mut out = String::from("t,value,stderr,bound\n");
    for k in 0..times.len() {
        let b = bound.map(|b| b[k].to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", times[k], values[k], stderr[k], b);
    }
    out
}

fn stop_counts(trajs: &[Trajectory]) -> serde_json::Value {
    let aborted = trajs.iter().filter(|t| t.aborted()).count();
    json!({ "horizon": trajs.len() - aborted, "tau_m": aborted })
}

fn run_simulate(cfg: &ExperimentConfig, ctx: &Context) -> Result<Artifacts, CliError> {
    let report = require_admissible(ctx)?;
    let model = require_model(ctx)?;
    let sim = Simulator::new(model, &ctx.weights, &cfg.sim).map_err(config_err)?;
    let trajs = sim.run_ensemble(&ctx.eta0, &ctx.fabric, cfg.sim.replicas).map_err(runtime)?;
    let curve = moment_curve(&trajs, &ctx.weights)?;
    let initial_norm = dense_norm(&ctx.eta0, &ctx.weights);
    let bound = moment_bound(&curve.times, initial_norm, report.moment_constant);
    let bound_holds = curve.values.iter().zip(&bound).all(|(v, b)| v <= b);
    let mut totals = [0u64; 3];
    for t in &trajs {
        totals[0] += t.counts.branching;
        totals[1] += t.counts.immigration;
        totals[2] += t.counts.rejected_large;
    }
    let mut series = String::from("replica,t,site,mass,sup_mass\n");
    for t in trajs.iter().take(cfg.analysis.csv_replicas) {
        for (k, &time) in t.times.iter().enumerate() {
            for x in 0..t.states[k].len() {
                let _ = writeln!(series, "{},{},{},{},{}", t.replica, time, x, t.states[k][x], t.sups[k][x]);
            }
        }
    }
    let events = cfg.sim.log_events.then(|| {
        let mut lines = String::new();
        for t in &trajs {
            for e in &t.events {
                let _ = writeln!(lines, "{}", serde_json::to_string(&json!({"replica": t.replica, "step": e.step, "site": e.site, "kind": e.kind, "u": e.u, "size": e.size, "target": e.target})).unwrap());
            }
        }
        lines
    });
    Ok(Artifacts {
        report: json!({
            "admissibility": to_value(&report),
            "moment_curve": to_value(&curve),
            "moment_bound": bound,
            "moment_bound_holds": bound_holds,
            "stop_reasons": stop_counts(&trajs),
            "events": { "branching": totals[0], "immigration": totals[1], "rejected_large": totals[2] },
            "dropped_variance": sim.dropped_variance(),
        }),
        series,
        events,
        failure: None,
    })
}

fn coupled_pairs(cfg: &ExperimentConfig, ctx: &Context) -> Result<(Vec<f64>, Vec<(Trajectory, Trajectory)>), CliError> {
    let model = require_model(ctx)?;
    let sim = Simulator::new(model, &ctx.weights, &cfg.sim).map_err(config_err)?;
    let lower: Vec<f64> = ctx.eta0.iter().map(|v| v * cfg.analysis.lower_scale).collect();
    if !(0.0..=1.0).contains(&cfg.analysis.lower_scale) {
        return Err(CliError::Config("analysis.lower_scale must lie in [0, 1]".into()));
    }
    let pairs = coupled_ensemble(&sim, &sim, &ctx.eta0, &lower, &ctx.fabric, cfg.sim.replicas).map_err(runtime)?;
    Ok((lower, pairs))
}

fn run_couple(cfg: &ExperimentConfig, ctx: &Context) -> Result<Artifacts, CliError> {
    require_admissible(ctx)?;
    let (_, pairs) = coupled_pairs(cfg, ctx)?;
    let mean = mean_violation(&pairs, &ctx.weights)?;
    let worst = pairs
        .iter()
        .map(|(u, l)| comparison_audit(l, u, &ctx.weights).map(|a| a.max))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let zeros = vec![0.0; mean.times.len()];
    Ok(Artifacts {
        series: series_csv(&mean.times, &mean.values, &zeros, None),
        report: json!({
            "mean_violation": to_value(&mean),
            "max_violation_any_replica": worst,
            "ordered_everywhere": worst == 0.0,
        }),
        events: None,
        failure: None,
    })
}

fn run_contract(cfg: &ExperimentConfig, ctx: &Context) -> Result<Artifacts, CliError> {
    require_admissible(ctx)?;
    let model = require_model(ctx)?;
    let margin = subcriticality_margin(model, &ctx.weights).map_err(|e| CliError::Refused(e.to_string()))?;
    if !(margin > 0.0) {
        return Err(CliError::Refused(format!("not subcritical (A = {margin})")));
    }
    let (lower, pairs) = coupled_pairs(cfg, ctx)?;
    let times = pairs.first().map(|p| p.0.times.clone()).unwrap_or_default();
    let upper_mean = mean_oracle(model, &ctx.eta0, &times)?;
    let lower_mean = mean_oracle(model, &lower, &times)?;
    let oracle: Vec<f64> =
        upper_mean.iter().zip(&lower_mean).map(|(a, b)| dense_distance(a, b, &ctx.weights)).collect();
    let report = w1_ordered(&pairs, &ctx.weights, margin, Some(&oracle))?;
    Ok(Artifacts {
        series: series_csv(&report.times, &report.series, &report.stderr, Some(&report.bound)),
        failure: None,
        events: None,
        report: to_value(&report),
    })
}

fn run_invariant(cfg: &ExperimentConfig, ctx: &Context) -> Result<Artifacts, CliError> {
    require_admissible(ctx)?;
    let model = require_model(ctx)?;
    let large = vec![cfg.analysis.large_mass; ctx.graph.site_count()];
    let report = invariant_probe(model, &ctx.weights, &cfg.sim, &ctx.fabric, cfg.analysis.burn_in, &large)?;
    Ok(Artifacts {
        series: series_csv(&report.gap.times, &report.gap.values, &report.gap.stderr, None),
        report: to_value(&report),
        events: None,
        failure: None,
    })
}

fn run_spread(cfg: &ExperimentConfig, ctx: &Context) -> Result<Artifacts, CliError> {
    require_admissible(ctx)?;
    let model = require_model(ctx)?;
    let sim = Simulator::new(model, &ctx.weights, &cfg.sim).map_err(config_err)?;
    let x0 = ctx
        .eta0
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(x, _)| x)
        .unwrap_or(ctx.graph.origin());
    let trajs = sim.run_ensemble(&ctx.eta0, &ctx.fabric, cfg.sim.replicas).map_err(runtime)?;
    let horizon = cfg.sim.steps() as f64 * cfg.sim.dt;
    let window = cfg.analysis.fit_window.unwrap_or((horizon / 4.0, horizon));
    let eps = cfg.analysis.eps;
    let front = spread::front_speed(&trajs, &ctx.graph, x0, eps, window)?;
    let speed = cfg.analysis.containment_factor * front.slope;
    let check_times: Vec<f64> = if cfg.analysis.containment_times.is_empty() {
        vec![horizon]
    } else {
        cfg.analysis.containment_times.clone()
    };
    let violations = spread::containment_violations(&trajs, &ctx.graph, x0, eps, speed, &check_times)?;
    let profile_time = cfg.analysis.profile_time.unwrap_or(horizon);
    let profile = spread::sup_moment_profile(&trajs, &ctx.graph, x0, profile_time)?;
    let max_d = profile.distances.last().copied().unwrap_or(0);
    let lo = (front.slope * profile_time).ceil() as usize + 2;
    let fit = spread::fit_profile(&profile, lo, max_d.saturating_sub(2));
    Ok(Artifacts {
        series: series_csv(&front.times, &front.mean_radius, &front.radius_se, None),
        report: json!({
            "front": to_value(&front),
            "containment_speed": speed,
            "containment_violations": violations,
            "profile": to_value(&profile),
            "profile_window": [lo, max_d.saturating_sub(2)],
            "profile_fit": fit.map(|f| to_value(&f)),
            "profile_decay": fit.map(|f| -f.slope),
            "stop_reasons": stop_counts(&trajs),
        }),
        events: None,
        failure: None,
    })
}

fn run_heatkernel(cfg: &ExperimentConfig, ctx: &Context) -> Result<Artifacts, CliError> {
    let a = &cfg.analysis;
    if !(a.walk_rate > 0.0) || a.walk_range == 0 || a.walkers == 0 {
        return Err(CliError::Config("heatkernel needs walk_rate > 0, walk_range >= 1 and walkers >= 1".into()));
    }
    let mut times = a.walk_times.clone();
    times.sort_by(f64::total_cmp);
    let hat = ctx.graph.auxiliary_graph(a.walk_range).map_err(config_err)?;
    let x0 = hat.origin();
    let est = spread::ctrw_simulate(&hat, a.walk_rate, x0, &times, &ctx.fabric, a.walkers);
    let window = spread::interior_sites(&hat);
    let m = a.walk_rate * window.iter().map(|&x| hat.degree(x)).min().unwrap_or(1) as f64;
    let audit = spread::kernel_bound_audit(&est, &hat, m, &window).map_err(runtime)?;
    let mut series = String::from("t,site,dhat,estimate,stderr,bound\n");
    for r in &audit.rows {
        let _ = writeln!(series, "{},{},{},{},{},{}", r.t, r.site, r.dhat, r.estimate, r.stderr, r.bound);
    }
    Ok(Artifacts {
        report: json!({
            "walkers": est.walkers,
            "m": audit.m,
            "checked": audit.rows.len(),
            "vacuous": audit.vacuous,
            "violations": audit.violations,
            "pass": audit.violations == 0,
        }),
        series,
        events: None,
        failure: None,
    })
}

fn run_oracle(cfg: &ExperimentConfig, ctx: &Context) -> Result<Artifacts, CliError> {
    require_admissible(ctx)?;
    let model = require_model(ctx)?;
    if !model.is_affine() {
        return Err(CliError::Refused(format!("oracle needs an affine model (lambda = {})", model.lambda)));
    }
    let sim = Simulator::new(model, &ctx.weights, &cfg.sim).map_err(config_err)?;
    let trajs = sim.run_ensemble(&ctx.eta0, &ctx.fabric, cfg.sim.replicas).map_err(runtime)?;
    let (means, ses) = site_means(&trajs)?;
    let grid = analysis::completed(&trajs)[0].times.clone();
    let picked: Vec<usize> = if cfg.analysis.times.is_empty() {
        (0..grid.len()).collect()
    } else {
        cfg.analysis
            .times
            .iter()
            .map(|&t| trajs[0].index_of(t).ok_or(AnalysisError::OffGrid(t)))
            .collect::<Result<_, _>>()?
    };
    let times: Vec<f64> = picked.iter().map(|&k| grid[k]).collect();
    let oracle = mean_oracle(model, &ctx.eta0, &times)?;
    let mut series = String::from("t,site,mean,stderr,oracle\n");
    let mut worst = 0.0f64;
    for (i, &k) in picked.iter().enumerate() {
        for x in 0..ctx.graph.site_count() {
            let (m, s, o) = (means[k][x], ses[k][x], oracle[i][x]);
            let _ = writeln!(series, "{},{},{},{},{}", grid[k], x, m, s, o);
            let z = if s > 0.0 { (m - o).abs() / s } else if (m - o).abs() <= 1e-12 { 0.0 } else { f64::INFINITY };
            worst = worst.max(z);
        }
    }
    Ok(Artifacts {
        report: json!({
            "times": times,
            "max_standardized_error": worst,
            "within_3_se": worst <= 3.0,
            "stop_reasons": stop_counts(&trajs),
        }),
        series,
        events: None,
        failure: None,
    })
}

fn run_admit(ctx: &Context) -> Result<Artifacts, CliError> {
    let report = admit(ctx)?;
    let mut series = String::from("name,value\n");
    for (name, v) in [
        ("C1", report.c1),
        ("C1_uniform", report.c1_uniform),
        ("C4", report.c4),
        ("C5", report.c5),
        ("C6", report.c6),
        ("moment_constant", report.moment_constant),
        ("stability_rate", report.stability_rate),
    ] {
        let _ = writeln!(series, "{name},{v}");
    }
    let failure = report
        .first_failure()
        .map(|f| CliError::Admissibility(format!("({}) violated: {}", f.name, f.detail)));
    Ok(Artifacts { report: to_value(&report), series, events: None, failure })
}

/// Runs the configured pipeline.
pub fn execute(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let ctx = build_context(cfg)?;
    match cfg.pipeline {
        Pipeline::Admit => run_admit(&ctx),
        Pipeline::Simulate => run_simulate(cfg, &ctx),
        Pipeline::Couple => run_couple(cfg, &ctx),
        Pipeline::Contract => run_contract(cfg, &ctx),
        Pipeline::Invariant => run_invariant(cfg, &ctx),
        Pipeline::Spread => run_spread(cfg, &ctx),
        Pipeline::Heatkernel => run_heatkernel(cfg, &ctx),
        Pipeline::Oracle => run_oracle(cfg, &ctx),
    }
}

fn write(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Executes and writes all artifacts into `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let artifacts = execute(cfg)?;
    fs::create_dir_all(out).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out.display())))?;
    let mut files = vec!["manifest.json", "report.json", "series.csv"];
    write(&out.join("report.json"), &serde_json::to_string_pretty(&artifacts.report).map_err(runtime)?)?;
    write(&out.join("series.csv"), &artifacts.series)?;
    if let Some(events) = &artifacts.events {
        write(&out.join("events.jsonl"), events)?;
        files.push("events.jsonl");
    }
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "pipeline": cfg.pipeline,
        "seed": cfg.seed,
        "replicas": cfg.sim.replicas,
        "artifacts": files,
        "config": to_value(cfg),
    });
    write(&out.join("manifest.json"), &serde_json::to_string_pretty(&manifest).map_err(runtime)?)?;
    let timing = json!({
        "wall_seconds": started.elapsed().as_secs_f64(),
        "threads": rayon::current_num_threads(),
    });
    write(&out.join("timing.json"), &timing.to_string())?;
    match artifacts.failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

/// Preset catalog as JSON.
pub fn list_presets() -> serde_json::Value {
    let entries: BTreeMap<&str, serde_json::Value> = catalog()
        .into_iter()
        .map(|info| (info.name, json!({ "example": info.example, "defaults": to_value(&info.defaults) })))
        .collect();
    to_value(&entries)
}

/// Entry point shared by the binary; returns the process exit code.
pub fn main_with_args(args: Args) -> i32 {
    if args.list_presets {
        println!("{}", serde_json::to_string_pretty(&list_presets()).expect("catalog serializes"));
        return EXIT_OK;
    }
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cspin: cannot configure {n} threads: {e}");
            return EXIT_CONFIG;
        }
    }
    let Some(path) = args.config.as_deref() else {
        eprintln!("cspin: --config is required");
        return EXIT_CONFIG;
    };
    let outcome = ExperimentConfig::load(path).and_then(|mut cfg| {
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        if let Some(r) = args.replicas {
            cfg.sim.replicas = r;
        }
        run(&cfg, &args.out)
    });
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("cspin: {e}");
            e.exit_code()
        }
    }
}
