//! Splitting integrator on a finite truncation: drift, diffusion, jumps, clamp.
//!
//! The diffusion substep uses Euler for masses well above the per-step noise
//! scale `c dt` and the exact Feller cluster representation below it: `N`
//! Poisson points of unit rate below `eta / (c dt)` from the cluster stream,
//! each contributing an exponential mass of mean `c dt`. Both branches read
//! shared noise, so coupled runs stay ordered except where the two processes
//! sit on different sides of the switch.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configuration::{Configuration, FLUSH_THRESHOLD};
use crate::lattice::{Site, Weights};
use crate::model::{ModelError, ModelSpec, RetainedMeasure, SparseRow};
use crate::noise::{NoiseFabric, StreamKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation parameters: {0}")]
    Params(String),
    #[error("initial state has {found} sites, model has {expected}")]
    SiteCount { expected: usize, found: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub dt: f64,
    pub horizon: f64,
    pub replicas: usize,
    /// Record every `record_stride` steps (and the final step).
    pub record_stride: usize,
    /// Jump sizes above this cap are rejected.
    pub jump_cap: f64,
    /// Stable jumps below this size are dropped.
    pub small_jump_cut: f64,
    /// Weighted mass at which a replica is stopped.
    pub guard: f64,
    /// Masses below `diffusion_switch * c * dt` use the exact cluster step.
    pub diffusion_switch: f64,
    /// Keep a per-event log (replica diagnostics).
    pub log_events: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            dt: 1e-3,
            horizon: 1.0,
            replicas: 100,
            record_stride: 100,
            jump_cap: 1e6,
            small_jump_cut: 1e-3,
            guard: 1e12,
            diffusion_switch: 64.0,
            log_events: false,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::Params(msg.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return bad("horizon must be nonnegative");
        }
        if !(self.guard > 0.0) {
            return bad("guard must be positive");
        }
        if !(self.small_jump_cut > 0.0 && self.small_jump_cut < self.jump_cap) {
            return bad("need 0 < small_jump_cut < jump_cap");
        }
        if self.record_stride == 0 {
            return bad("record_stride must be at least 1");
        }
        if !(self.diffusion_switch >= 0.0) {
            return bad("diffusion_switch must be nonnegative");
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        (self.horizon / self.dt).round() as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Horizon,
    TauM,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EventCounts {
    pub branching: u64,
    pub immigration: u64,
    pub rejected_large: u64,
    /// Branching jumps that landed outside a restricted volume.
    pub escaped: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EventRecord {
    pub step: u64,
    pub site: Site,
    pub kind: StreamKind,
    pub u: f64,
    pub size: f64,
    pub target: Site,
}

/// Recorded path of one replica.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub replica: u64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `sup_{r <= t} eta_r(x)` over every step up to each record time.
    pub sups: Vec<Vec<f64>>,
    pub counts: EventCounts,
    pub stop: StopReason,
    pub stop_time: f64,
    pub events: Vec<EventRecord>,
}

impl Trajectory {
    pub fn aborted(&self) -> bool {
        self.stop == StopReason::TauM
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Index of the record at time `t`, if on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * (1.0 + t.abs());
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }
}

struct SourceBranch {
    targets: Vec<(Site, RetainedMeasure)>,
    cumulative: Vec<f64>,
    total: f64,
    own_compensator: f64,
}

struct ImmigrationSite {
    measure: RetainedMeasure,
    total: f64,
    zmax: f64,
}

/// A model compiled for stepping.
pub struct Simulator {
    n: usize,
    b: Vec<f64>,
    a_off: Vec<SparseRow>,
    own_linear: Vec<f64>,
    m: Vec<f64>,
    lambda: f64,
    c: Vec<f64>,
    g: Vec<f64>,
    branch: Vec<SourceBranch>,
    phi: Vec<SparseRow>,
    psi: Vec<f64>,
    rho0: Vec<f64>,
    immigration: Vec<ImmigrationSite>,
    weights: Vec<f64>,
    keep: Vec<bool>,
    params: SimParams,
    dropped_variance: f64,
}

struct Scratch {
    next: Vec<f64>,
    pre: Vec<f64>,
}

impl Simulator {
    pub fn new(model: &ModelSpec, weights: &Weights, params: &SimParams) -> Result<Self, SimError> {
        params.validate()?;
        let n = model.site_count();
        if weights.len() != n {
            return Err(SimError::SiteCount { expected: n, found: weights.len() });
        }
        let cut = params.small_jump_cut;
        let cap = params.jump_cap;
        let mut a_off = Vec::with_capacity(n);
        let mut own_linear = vec![0.0; n];
        for x in 0..n {
            let mut row = SparseRow::new();
            for &(y, v) in &model.a[x] {
                if y == x {
                    own_linear[x] += v;
                } else if v != 0.0 {
                    row.push((y, v));
                }
            }
            a_off.push(row);
        }
        let mut dropped_variance = 0.0;
        let mut branch = Vec::with_capacity(n);
        for x in 0..n {
            let mut targets = Vec::new();
            let mut cumulative = Vec::new();
            let mut total = 0.0;
            let mut own_compensator = 0.0;
            for (y, mu) in &model.branching[x] {
                mu.validate()?;
                dropped_variance += mu.dropped_variance(cut);
                let kept = mu.retained(cut);
                let mass = kept.total_mass();
                if mass <= 0.0 {
                    continue;
                }
                if *y == x {
                    own_compensator += kept.capped_first_moment(cap);
                }
                total += mass;
                cumulative.push(total);
                targets.push((*y, kept));
            }
            branch.push(SourceBranch { targets, cumulative, total, own_compensator });
        }
        let immigration = model
            .sigma
            .iter()
            .map(|s| {
                let measure = s.retained(cut);
                let total = measure.total_mass();
                let zmax = measure.max_size(cap);
                ImmigrationSite { measure, total, zmax }
            })
            .collect();
        Ok(Simulator {
            n,
            b: model.b.clone(),
            a_off,
            own_linear,
            m: model.m.clone(),
            lambda: model.lambda,
            c: model.c.clone(),
            g: model.g.clone(),
            branch,
            phi: model.phi.clone(),
            psi: model.psi.clone(),
            rho0: model.rho0.clone(),
            immigration,
            weights: weights.as_slice().to_vec(),
            keep: vec![true; n],
            params: params.clone(),
            dropped_variance,
        })
    }

    /// The model with every coefficient outside `inside` switched off.
    /// Branching keeps its full target lists so that target selection reads
    /// the same marks as the unrestricted run; mass landing outside is lost.
    pub fn restricted(
        model: &ModelSpec,
        weights: &Weights,
        params: &SimParams,
        inside: &[bool],
    ) -> Result<Self, SimError> {
        if inside.len() != model.site_count() {
            return Err(SimError::SiteCount { expected: model.site_count(), found: inside.len() });
        }
        let mut local = model.restrict(inside);
        local.branching = model.branching.clone();
        let mut sim = Simulator::new(&local, weights, params)?;
        sim.keep = inside.to_vec();
        Ok(sim)
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn site_count(&self) -> usize {
        self.n
    }

    /// `sum int_{(0, cut)} z^2 mu(dz)` over all branching measures.
    pub fn dropped_variance(&self) -> f64 {
        self.dropped_variance
    }

    fn check_state(&self, eta: &[f64]) -> Result<(), SimError> {
        if eta.len() != self.n {
            return Err(SimError::SiteCount { expected: self.n, found: eta.len() });
        }
        if eta.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(SimError::Params("initial masses must be finite and nonnegative".into()));
        }
        Ok(())
    }

    fn advance(
        &self,
        state: &mut [f64],
        fabric: &NoiseFabric,
        step: u64,
        scratch: &mut Scratch,
        counts: &mut EventCounts,
        mut log: Option<&mut Vec<EventRecord>>,
    ) {
        let dt = self.params.dt;
        let cap = self.params.jump_cap;
        let next = &mut scratch.next;
        let pre = &mut scratch.pre;

        for x in 0..self.n {
            let s = state[x];
            let mut rate = self.b[x];
            for &(y, v) in &self.a_off[x] {
                rate += v * state[y];
            }
            if s > 0.0 {
                rate += self.own_linear[x] * s;
                if self.m[x] != 0.0 {
                    let p = if self.lambda == 1.0 { s } else { s.powf(self.lambda) };
                    rate -= self.m[x] * p;
                }
                rate -= self.g[x] * s * self.branch[x].own_compensator;
            }
            next[x] = s + dt * rate;
        }

        for x in 0..self.n {
            let v = next[x];
            if self.c[x] == 0.0 || v <= 0.0 {
                continue;
            }
            let theta = self.c[x] * dt;
            next[x] = if v >= self.params.diffusion_switch * theta {
                v + (2.0 * self.c[x] * v).sqrt() * fabric.brownian_increment(x, step, dt)
            } else {
                let mut points = fabric.events(StreamKind::Cluster, x, step, 1.0);
                let level = v / theta;
                let mut total = 0.0;
                while points.next_u() <= level {
                    total -= points.marks().0.ln();
                }
                theta * total
            };
        }

        for x in 0..self.n {
            if !(next[x] > 0.0) {
                next[x] = 0.0;
            }
        }
        pre.copy_from_slice(next);

        for y in 0..self.n {
            let src = &self.branch[y];
            if pre[y] <= 0.0 || self.g[y] == 0.0 || src.total == 0.0 {
                continue;
            }
            let threshold = self.g[y] * pre[y] * src.total;
            let mut points = fabric.events(StreamKind::Branch, y, step, dt);
            loop {
                let u = points.next_u();
                if u > threshold {
                    break;
                }
                let (td, sd) = points.marks();
                let i = src.cumulative.partition_point(|&c| c < td * src.total).min(src.targets.len() - 1);
                let (target, measure) = &src.targets[i];
                let size = measure.sample(sd);
                if size > cap {
                    counts.rejected_large += 1;
                    continue;
                }
                if !self.keep[*target] {
                    counts.escaped += 1;
                    continue;
                }
                next[*target] += size;
                counts.branching += 1;
                if let Some(log) = log.as_deref_mut() {
                    log.push(EventRecord { step, site: y, kind: StreamKind::Branch, u, size, target: *target });
                }
            }
        }

        for w in 0..self.n {
            let imm = &self.immigration[w];
            if imm.total == 0.0 {
                continue;
            }
            let mut base = self.rho0[w];
            for &(y, v) in &self.phi[w] {
                base += v * pre[y];
            }
            let ceiling = (base + self.psi[w] * imm.zmax) * imm.total;
            if !(ceiling > 0.0) {
                continue;
            }
            let mut points = fabric.events(StreamKind::Immigration, w, step, dt);
            loop {
                let u = points.next_u();
                if u > ceiling {
                    break;
                }
                let (_, sd) = points.marks();
                let z = imm.measure.sample(sd);
                if u > (base + self.psi[w] * z) * imm.total {
                    continue;
                }
                if z > cap {
                    counts.rejected_large += 1;
                    continue;
                }
                next[w] += z;
                counts.immigration += 1;
                if let Some(log) = log.as_deref_mut() {
                    log.push(EventRecord { step, site: w, kind: StreamKind::Immigration, u, size: z, target: w });
                }
            }
        }

        for x in 0..self.n {
            let v = next[x];
            state[x] = if v < FLUSH_THRESHOLD { 0.0 } else { v };
        }
    }

    fn scratch(&self) -> Scratch {
        Scratch { next: vec![0.0; self.n], pre: vec![0.0; self.n] }
    }

    /// One step from a sparse configuration.
    pub fn step(&self, eta: &Configuration, fabric: &NoiseFabric, step: u64) -> Result<Configuration, SimError> {
        let mut state = eta.to_dense(self.n);
        self.check_state(&state)?;
        let mut scratch = self.scratch();
        let mut counts = EventCounts::default();
        self.advance(&mut state, fabric, step, &mut scratch, &mut counts, None);
        Ok(Configuration::from_dense(&state).expect("states stay nonnegative"))
    }

    fn norm(&self, state: &[f64]) -> f64 {
        state.iter().zip(&self.weights).map(|(a, v)| a * v).sum()
    }

    /// Runs one replica on `fabric` (already specialized to the replica).
    pub fn run(&self, eta0: &[f64], fabric: &NoiseFabric, replica: u64) -> Result<Trajectory, SimError> {
        self.check_state(eta0)?;
        let steps = self.params.steps();
        let stride = self.params.record_stride as u64;
        let dt = self.params.dt;
        let mut state = eta0.to_vec();
        let mut sup = eta0.to_vec();
        let mut scratch = self.scratch();
        let mut counts = EventCounts::default();
        let mut events = Vec::new();
        let mut traj = Trajectory {
            replica,
            times: vec![0.0],
            states: vec![state.clone()],
            sups: vec![sup.clone()],
            counts,
            stop: StopReason::Horizon,
            stop_time: steps as f64 * dt,
            events: Vec::new(),
        };
        for k in 0..steps {
            let log = if self.params.log_events { Some(&mut events) } else { None };
            self.advance(&mut state, fabric, k, &mut scratch, &mut counts, log);
            for (s, &v) in sup.iter_mut().zip(&state) {
                if v > *s {
                    *s = v;
                }
            }
            let done = k + 1;
            let aborted = self.norm(&state) > self.params.guard;
            if aborted || done % stride == 0 || done == steps {
                traj.times.push(done as f64 * dt);
                traj.states.push(state.clone());
                traj.sups.push(sup.clone());
            }
            if aborted {
                traj.stop = StopReason::TauM;
                traj.stop_time = done as f64 * dt;
                break;
            }
        }
        traj.counts = counts;
        traj.events = events;
        Ok(traj)
    }

    /// Independent replicas `0..replicas`, ordered by replica id.
    pub fn run_ensemble(&self, eta0: &[f64], master: &NoiseFabric, replicas: usize) -> Result<Vec<Trajectory>, SimError> {
        self.check_state(eta0)?;
        (0..replicas as u64)
            .into_par_iter()
            .map(|r| self.run(eta0, &master.replica(r), r))
            .collect()
    }
}

/// Two processes on the identical noise realization.
pub fn simulate_coupled(
    a: &Simulator,
    b: &Simulator,
    eta0: &[f64],
    xi0: &[f64],
    fabric: &NoiseFabric,
    replica: u64,
) -> Result<(Trajectory, Trajectory), SimError> {
    Ok((a.run(eta0, fabric, replica)?, b.run(xi0, fabric, replica)?))
}

/// Coupled replicas `0..replicas`, ordered by replica id.
pub fn coupled_ensemble(
    a: &Simulator,
    b: &Simulator,
    eta0: &[f64],
    xi0: &[f64],
    master: &NoiseFabric,
    replicas: usize,
) -> Result<Vec<(Trajectory, Trajectory)>, SimError> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| simulate_coupled(a, b, eta0, xi0, &master.replica(r), r))
        .collect()
}

/// Runs the model restricted to each volume on the same fabric. Initial
/// masses outside a volume are dropped.
pub fn finite_volume_refine(
    model: &ModelSpec,
    weights: &Weights,
    params: &SimParams,
    eta0: &[f64],
    fabric: &NoiseFabric,
    replica: u64,
    volumes: &[Vec<bool>],
) -> Result<Vec<Trajectory>, SimError> {
    volumes
        .iter()
        .map(|inside| {
            let sim = Simulator::restricted(model, weights, params, inside)?;
            let start: Vec<f64> = eta0.iter().zip(inside).map(|(&v, &i)| if i { v } else { 0.0 }).collect();
            sim.run(&start, fabric, replica)
        })
        .collect()
}
