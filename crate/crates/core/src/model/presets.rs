//! Named coefficient families.

use serde::{Deserialize, Serialize};

use super::{KernelSpec, LevyMeasure, ModelError, ModelSpec};
use crate::lattice::{Graph, WeightSpec};

/// Preset selection as written in a config file: `preset = "<name>"` plus parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case")]
pub enum Preset {
    Cbi(CbiParams),
    StableCompetition(StableCompetitionParams),
    NearestNeighbor(NearestNeighborParams),
    BranchingRw(BranchingRwParams),
}

/// Affine branching with immigration: neighbor coupling within range `R`,
/// own-site atom jumps and immigration atoms with rate `rho = phi eta + psi z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CbiParams {
    pub b: f64,
    pub a: f64,
    #[serde(rename = "R")]
    pub range: usize,
    pub a_self: f64,
    pub m: f64,
    pub c: f64,
    pub g: f64,
    pub jump_size: f64,
    pub jump_rate: f64,
    pub phi: f64,
    pub psi: f64,
    pub sigma_size: f64,
    pub sigma_rate: f64,
}

impl Default for CbiParams {
    fn default() -> Self {
        CbiParams {
            b: 0.5,
            a: 0.25,
            range: 1,
            a_self: -1.5,
            m: 0.0,
            c: 0.5,
            g: 0.5,
            jump_size: 0.5,
            jump_rate: 1.0,
            phi: 0.0,
            psi: 1.0,
            sigma_size: 0.5,
            sigma_rate: 1.0,
        }
    }
}

/// Local branching with stable own-site jumps and competition `-m eta^lambda`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StableCompetitionParams {
    pub b: f64,
    pub a: f64,
    pub m: f64,
    pub lambda: f64,
    pub c: f64,
    pub g: f64,
    pub alpha: f64,
    pub rho: f64,
    pub sigma_size: f64,
    pub sigma_rate: f64,
}

impl Default for StableCompetitionParams {
    fn default() -> Self {
        StableCompetitionParams {
            b: 0.1,
            a: 0.5,
            m: 1.0,
            lambda: 2.0,
            c: 0.5,
            g: 1.0,
            alpha: 1.5,
            rho: 1.0,
            sigma_size: 0.5,
            sigma_rate: 1.0,
        }
    }
}

/// Nearest-neighbor branching with unit jumps: `B(x, eta) = a sum_{|y-x|=1} eta(y) - m eta(x)^lambda`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NearestNeighborParams {
    pub b: f64,
    pub a: f64,
    pub m: f64,
    pub lambda: f64,
    pub c: f64,
    pub g: f64,
}

impl Default for NearestNeighborParams {
    fn default() -> Self {
        NearestNeighborParams { b: 0.0, a: 1.0, m: 0.0, lambda: 1.0, c: 1.0, g: 1.0 }
    }
}

/// Integer-valued branching random walk: unit births in place at rate `beta`
/// and unit offspring to each neighbor at rate `kappa`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BranchingRwParams {
    pub beta: f64,
    pub kappa: f64,
}

impl Default for BranchingRwParams {
    fn default() -> Self {
        BranchingRwParams { beta: 0.5, kappa: 0.25 }
    }
}

/// One catalog entry.
#[derive(Clone, Debug, Serialize)]
pub struct PresetInfo {
    pub name: &'static str,
    pub example: &'static str,
    pub defaults: Preset,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Cbi(_) => "cbi",
            Preset::StableCompetition(_) => "stable-competition",
            Preset::NearestNeighbor(_) => "nearest-neighbor",
            Preset::BranchingRw(_) => "branching-rw",
        }
    }

    /// Weight used when a config does not name one.
    pub fn default_weight(&self) -> WeightSpec {
        WeightSpec::Exponential { delta: 1.0 }
    }

    pub fn build(&self, graph: &Graph) -> Result<ModelSpec, ModelError> {
        let n = graph.site_count();
        let mut spec = ModelSpec::zero(n);
        match self {
            Preset::Cbi(p) => {
                let kernel = KernelSpec::Cutoff { c: p.a, range: p.range }.rows(graph)?;
                for x in graph.sites() {
                    spec.b[x] = p.b;
                    spec.a[x] = kernel[x].clone();
                    if p.a_self != 0.0 {
                        spec.a[x].push((x, p.a_self));
                    }
                    spec.m[x] = p.m;
                    spec.c[x] = p.c;
                    spec.g[x] = p.g;
                    if p.jump_rate > 0.0 {
                        spec.branching[x].push((x, LevyMeasure::atom(p.jump_size, p.jump_rate)));
                    }
                    if p.phi != 0.0 {
                        spec.phi[x].push((x, p.phi));
                    }
                    spec.psi[x] = p.psi;
                    if p.sigma_rate > 0.0 {
                        spec.sigma[x] = LevyMeasure::atom(p.sigma_size, p.sigma_rate);
                    }
                }
            }
            Preset::StableCompetition(p) => {
                let kernel = KernelSpec::Cutoff { c: p.a, range: 1 }.rows(graph)?;
                let jumps = LevyMeasure::StablePositive { alpha: p.alpha };
                jumps.validate()?;
                spec.lambda = p.lambda;
                for x in graph.sites() {
                    spec.b[x] = p.b;
                    spec.a[x] = kernel[x].clone();
                    spec.m[x] = p.m;
                    spec.c[x] = p.c;
                    spec.g[x] = p.g;
                    spec.branching[x].push((x, jumps.clone()));
                    spec.rho0[x] = p.rho;
                    if p.sigma_rate > 0.0 {
                        spec.sigma[x] = LevyMeasure::atom(p.sigma_size, p.sigma_rate);
                    }
                }
            }
            Preset::NearestNeighbor(p) => {
                spec.lambda = p.lambda;
                for x in graph.sites() {
                    spec.b[x] = p.b;
                    spec.a[x] = graph.neighbors(x).iter().map(|&y| (y, p.a)).collect();
                    spec.m[x] = p.m;
                    spec.c[x] = p.c;
                    spec.g[x] = p.g;
                    spec.branching[x] =
                        graph.neighbors(x).iter().map(|&y| (y, LevyMeasure::atom(1.0, 1.0))).collect();
                }
            }
            Preset::BranchingRw(p) => {
                for x in graph.sites() {
                    spec.g[x] = 1.0;
                    if p.beta > 0.0 {
                        spec.a[x].push((x, p.beta));
                        spec.branching[x].push((x, LevyMeasure::atom(1.0, p.beta)));
                    }
                    if p.kappa > 0.0 {
                        for &y in graph.neighbors(x) {
                            spec.branching[x].push((y, LevyMeasure::atom(1.0, p.kappa)));
                        }
                    }
                }
            }
        }
        spec.validate(graph)?;
        Ok(spec)
    }
}

/// The four presets with their defaults.
pub fn catalog() -> Vec<PresetInfo> {
    vec![
        PresetInfo {
            name: "cbi",
            example: "infinite-type continuous-state branching process with immigration",
            defaults: Preset::Cbi(CbiParams::default()),
        },
        PresetInfo {
            name: "stable-competition",
            example: "local branching process with local competition",
            defaults: Preset::StableCompetition(StableCompetitionParams::default()),
        },
        PresetInfo {
            name: "nearest-neighbor",
            example: "nearest-neighbor continuous-state branching process with unit jumps",
            defaults: Preset::NearestNeighbor(NearestNeighborParams::default()),
        },
        PresetInfo {
            name: "branching-rw",
            example: "continuous-time discrete-space branching random walk",
            defaults: Preset::BranchingRw(BranchingRwParams::default()),
        },
    ]
}
