//! Front propagation and heat-kernel estimates.

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{linear_fit, mean_se, AnalysisError, LinearFit};
use crate::lattice::{Graph, LatticeError, Site};
use crate::noise::{NoiseFabric, StreamKind};
use crate::simulator::Trajectory;

/// Empirical transition probabilities `K(t, x0, .)` at each requested time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelEstimate {
    pub origin: Site,
    pub walkers: usize,
    pub times: Vec<f64>,
    pub probs: Vec<Vec<f64>>,
}

impl KernelEstimate {
    pub fn stderr(&self, i: usize, x: Site) -> f64 {
        let p = self.probs[i][x];
        (p * (1.0 - p) / self.walkers as f64).sqrt()
    }
}

/// Walkers jumping at rate `rate` along each edge of `graph`, started at `x0`.
/// `times` must be sorted ascending.
pub fn ctrw_simulate(
    graph: &Graph,
    rate: f64,
    x0: Site,
    times: &[f64],
    fabric: &NoiseFabric,
    walkers: usize,
) -> KernelEstimate {
    let n = graph.site_count();
    let chunk = 4096;
    let chunks = walkers.div_ceil(chunk);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![vec![0u64; n]; times.len()];
            for walker in c * chunk..((c + 1) * chunk).min(walkers) {
                let mut x = x0;
                let mut t = 0.0;
                let mut k = 0u64;
                let mut next_time = 0;
                while next_time < times.len() {
                    let deg = graph.degree(x);
                    let hold = if deg == 0 {
                        f64::INFINITY
                    } else {
                        -fabric.uniform(StreamKind::Walk, walker, k, 0).ln() / (rate * deg as f64)
                    };
                    while next_time < times.len() && times[next_time] < t + hold {
                        counts[next_time][x] += 1;
                        next_time += 1;
                    }
                    if deg > 0 {
                        let pick = (fabric.uniform(StreamKind::Walk, walker, k, 1) * deg as f64) as usize;
                        x = graph.neighbors(x)[pick.min(deg - 1)];
                    }
                    t += hold;
                    k += 1;
                }
            }
            counts
        })
        .reduce(
            || vec![vec![0u64; n]; times.len()],
            |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(b) {
                    for (x, y) in ra.iter_mut().zip(rb) {
                        *x += y;
                    }
                }
                a
            },
        );
    let probs = counts
        .into_iter()
        .map(|row| row.into_iter().map(|c| c as f64 / walkers as f64).collect())
        .collect();
    KernelEstimate { origin: x0, walkers, times: times.to_vec(), probs }
}

/// `(1/m) exp[-d ln(2 d / (e t))]`, with `0 ln 0 = 0`.
pub fn heat_kernel_bound(m: f64, dhat: usize, t: f64) -> f64 {
    if dhat == 0 {
        return 1.0 / m;
    }
    let d = dhat as f64;
    (-d * (2.0 * d / (std::f64::consts::E * t)).ln()).exp() / m
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub t: f64,
    pub site: Site,
    pub dhat: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelAudit {
    pub m: f64,
    pub rows: Vec<AuditRow>,
    pub vacuous: usize,
    pub violations: usize,
}

/// Compares `K^` with the bound at every `(t, v)` with `v` in `window` and a
/// bound at most 1; vacuous entries are only counted.
pub fn kernel_bound_audit(
    est: &KernelEstimate,
    graph: &Graph,
    m: f64,
    window: &[Site],
) -> Result<KernelAudit, LatticeError> {
    let dist = graph.distances_from(est.origin)?;
    let mut rows = Vec::new();
    let mut vacuous = 0;
    for (i, &t) in est.times.iter().enumerate() {
        for &v in window {
            let bound = heat_kernel_bound(m, dist[v], t);
            if bound > 1.0 || !bound.is_finite() {
                vacuous += 1;
                continue;
            }
            let estimate = est.probs[i][v];
            let stderr = est.stderr(i, v);
            rows.push(AuditRow {
                t,
                site: v,
                dhat: dist[v],
                estimate,
                stderr,
                bound,
                violation: estimate > bound + 3.0 * stderr,
            });
        }
    }
    let violations = rows.iter().filter(|r| r.violation).count();
    Ok(KernelAudit { m, rows, vacuous, violations })
}

/// Sites with full degree; boundary sites of a truncation are dropped.
pub fn interior_sites(graph: &Graph) -> Vec<Site> {
    let d = graph.max_degree();
    graph.sites().filter(|&x| graph.degree(x) == d).collect()
}

/// `{z : sup_{r <= t} eta_r(z) >= eps}`.
pub fn occupied_set(traj: &Trajectory, eps: f64, t: f64) -> Result<Vec<Site>, AnalysisError> {
    let k = traj.index_of(t).ok_or(AnalysisError::OffGrid(t))?;
    Ok(traj.sups[k].iter().enumerate().filter(|&(_, &s)| s >= eps).map(|(x, _)| x).collect())
}

/// Largest distance from `x0` in the occupied set; 0 when empty.
pub fn radius(traj: &Trajectory, k: usize, eps: f64, dist: &[usize]) -> usize {
    traj.sups[k]
        .iter()
        .zip(dist)
        .filter(|&(&s, _)| s >= eps)
        .map(|(_, &d)| d)
        .max()
        .unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrontFit {
    pub times: Vec<f64>,
    pub mean_radius: Vec<f64>,
    pub radius_se: Vec<f64>,
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub r2: f64,
    /// True when no replica's front ever moved.
    pub zero_speed: bool,
}

/// Linear fit of the replica-mean radius against `t` over `window`.
pub fn front_speed(
    trajs: &[Trajectory],
    graph: &Graph,
    x0: Site,
    eps: f64,
    window: (f64, f64),
) -> Result<FrontFit, AnalysisError> {
    let done: Vec<&Trajectory> = trajs.iter().filter(|t| !t.aborted()).collect();
    if done.len() < 2 {
        return Err(AnalysisError::TooFewReplicas(done.len()));
    }
    let times = done[0].times.clone();
    if done.iter().any(|t| t.times != times) {
        return Err(AnalysisError::GridMismatch);
    }
    let dist = graph.distances_from(x0).map_err(crate::model::ModelError::from)?;
    let mut mean_radius = Vec::with_capacity(times.len());
    let mut radius_se = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let r: Vec<f64> = done.iter().map(|t| radius(t, k, eps, &dist) as f64).collect();
        let (m, s) = mean_se(&r);
        mean_radius.push(m);
        radius_se.push(s);
    }
    let zero_speed = mean_radius.iter().all(|&r| r == mean_radius[0]);
    let (x, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(&mean_radius)
        .filter(|&(&t, _)| t >= window.0 - 1e-9 && t <= window.1 + 1e-9)
        .map(|(&t, &r)| (t, r))
        .unzip();
    let fit = if zero_speed { None } else { linear_fit(&x, &y) };
    let (slope, slope_ci, r2) = match fit {
        Some(f) => (f.slope, f.slope_ci(0.95), f.r2),
        None => (0.0, (0.0, 0.0), 1.0),
    };
    Ok(FrontFit { times, mean_radius, radius_se, slope, slope_ci, r2, zero_speed })
}

/// `(replica, t, radius)` for every replica whose occupied set leaves
/// `B(x0, speed t)` at one of `times`.
pub fn containment_violations(
    trajs: &[Trajectory],
    graph: &Graph,
    x0: Site,
    eps: f64,
    speed: f64,
    times: &[f64],
) -> Result<Vec<(u64, f64, usize)>, AnalysisError> {
    let dist = graph.distances_from(x0).map_err(crate::model::ModelError::from)?;
    let mut out = Vec::new();
    for traj in trajs.iter().filter(|t| !t.aborted()) {
        for &t in times {
            let k = traj.index_of(t).ok_or(AnalysisError::OffGrid(t))?;
            let r = radius(traj, k, eps, &dist);
            if r as f64 > speed * t {
                out.push((traj.replica, t, r));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupProfile {
    pub t: f64,
    pub distances: Vec<usize>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// `E[sup_{r <= t} eta_r(x)]` averaged over sites at each distance from `x0`.
pub fn sup_moment_profile(
    trajs: &[Trajectory],
    graph: &Graph,
    x0: Site,
    t: f64,
) -> Result<SupProfile, AnalysisError> {
    let done: Vec<&Trajectory> = trajs.iter().filter(|t| !t.aborted()).collect();
    if done.len() < 2 {
        return Err(AnalysisError::TooFewReplicas(done.len()));
    }
    let dist = graph.distances_from(x0).map_err(crate::model::ModelError::from)?;
    let max_d = dist.iter().copied().max().unwrap_or(0);
    let mut shells: Vec<Vec<Site>> = vec![Vec::new(); max_d + 1];
    for (x, &d) in dist.iter().enumerate() {
        shells[d].push(x);
    }
    let mut mean = Vec::with_capacity(max_d + 1);
    let mut stderr = Vec::with_capacity(max_d + 1);
    for shell in &shells {
        let per: Vec<f64> = done
            .iter()
            .map(|traj| {
                let k = traj.index_of(t).ok_or(AnalysisError::OffGrid(t))?;
                Ok(shell.iter().map(|&x| traj.sups[k][x]).sum::<f64>() / shell.len() as f64)
            })
            .collect::<Result<_, AnalysisError>>()?;
        let (m, s) = mean_se(&per);
        mean.push(m);
        stderr.push(s);
    }
    Ok(SupProfile { t, distances: (0..=max_d).collect(), mean, stderr })
}

/// Fit of `ln E[sup]` against `d ln d` on `[lo, hi]`; entries at the Monte
/// Carlo floor (zero mean) are skipped. The decay constant is `-slope`.
pub fn fit_profile(profile: &SupProfile, lo: usize, hi: usize) -> Option<LinearFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = profile
        .distances
        .iter()
        .zip(&profile.mean)
        .filter(|&(&d, &m)| d >= lo.max(1) && d <= hi && m > 0.0)
        .map(|(&d, &m)| (d as f64 * (d as f64).ln(), m.ln()))
        .unzip();
    linear_fit(&x, &y)
}
