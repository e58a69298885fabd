//! Ensemble statistics: moment curves, comparison audits, ordered contraction
//! and invariant-measure probes.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::configuration::{dense_distance, dense_norm, dense_positive_part_distance};
use crate::lattice::Weights;
use crate::model::{mean_field_matrix, subcriticality_margin, ModelError, ModelSpec};
use crate::noise::NoiseFabric;
use crate::simulator::{coupled_ensemble, SimError, SimParams, Simulator, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("trajectories do not share a time grid")]
    GridMismatch,
    #[error("not subcritical (A = {0})")]
    NotSubcritical(f64),
    #[error("need at least 2 completed replicas, got {0}")]
    TooFewReplicas(usize),
    #[error("time {0} is not on the record grid")]
    OffGrid(f64),
    #[error("second-moment oracle limited to {max} sites, model has {found}")]
    TooManySites { max: usize, found: usize },
    #[error("second moments are infinite")]
    InfiniteVariance,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// A time series with standard errors and an optional reference curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Series {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub bound: Option<Vec<f64>>,
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub r2: f64,
    pub n: usize,
}

impl LinearFit {
    /// Two-sided confidence interval for the slope.
    pub fn slope_ci(&self, level: f64) -> (f64, f64) {
        if self.n < 3 || !self.slope_se.is_finite() {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        let t = StudentsT::new(0.0, 1.0, (self.n - 2) as f64)
            .map(|d| d.inverse_cdf(0.5 + level / 2.0))
            .unwrap_or(f64::INFINITY);
        (self.slope - t * self.slope_se, self.slope + t * self.slope_se)
    }
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_se = if n > 2 { (sse / (n - 2) as f64 / sxx).sqrt() } else { f64::NAN };
    Some(LinearFit { slope, intercept, slope_se, r2, n })
}

/// Replicas that reached the horizon.
pub fn completed(trajs: &[Trajectory]) -> Vec<&Trajectory> {
    trajs.iter().filter(|t| !t.aborted()).collect()
}

fn common_grid<'a>(trajs: &[&'a Trajectory]) -> Result<&'a [f64], AnalysisError> {
    let first = trajs.first().ok_or(AnalysisError::TooFewReplicas(0))?;
    if trajs.iter().any(|t| t.times != first.times) {
        return Err(AnalysisError::GridMismatch);
    }
    Ok(&first.times)
}

/// `E ||eta_t||` with standard errors over completed replicas.
pub fn moment_curve(trajs: &[Trajectory], w: &Weights) -> Result<Series, AnalysisError> {
    let done = completed(trajs);
    if done.len() < 2 {
        return Err(AnalysisError::TooFewReplicas(done.len()));
    }
    let times = common_grid(&done)?.to_vec();
    let mut values = Vec::with_capacity(times.len());
    let mut stderr = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let norms: Vec<f64> = done.iter().map(|t| dense_norm(&t.states[k], w)).collect();
        let (m, s) = mean_se(&norms);
        values.push(m);
        stderr.push(s);
    }
    Ok(Series { times, values, stderr, bound: None })
}

/// `(1 + E||eta_0||) e^{C t}` on the given grid.
pub fn moment_bound(times: &[f64], initial_norm: f64, c: f64) -> Vec<f64> {
    times.iter().map(|&t| (1.0 + initial_norm) * (c * t).exp()).collect()
}

/// Per-record, per-site replica means and standard errors.
pub fn site_means(trajs: &[Trajectory]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), AnalysisError> {
    let done = completed(trajs);
    if done.len() < 2 {
        return Err(AnalysisError::TooFewReplicas(done.len()));
    }
    let times = common_grid(&done)?;
    let n = done[0].states[0].len();
    let mut means = Vec::with_capacity(times.len());
    let mut ses = Vec::with_capacity(times.len());
    let mut column = vec![0.0; done.len()];
    for k in 0..times.len() {
        let mut m = vec![0.0; n];
        let mut s = vec![0.0; n];
        for x in 0..n {
            for (slot, t) in column.iter_mut().zip(&done) {
                *slot = t.states[k][x];
            }
            (m[x], s[x]) = mean_se(&column);
        }
        means.push(m);
        ses.push(s);
    }
    Ok((means, ses))
}

/// `E[eta_t]` for an affine model, from the exponential of the augmented
/// matrix `[[A, b], [0, 0]]`.
pub fn mean_oracle(model: &ModelSpec, eta0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>, AnalysisError> {
    let (a, b) = mean_field_matrix(model)?;
    let n = a.nrows();
    let mut aug = DMatrix::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(&a);
    aug.view_mut((0, n), (n, 1)).copy_from(&b);
    let mut start = DVector::zeros(n + 1);
    for (i, &v) in eta0.iter().enumerate() {
        start[i] = v;
    }
    start[n] = 1.0;
    Ok(times
        .iter()
        .map(|&t| {
            let m = (&aug * t).exp() * &start;
            m.rows(0, n).iter().copied().collect()
        })
        .collect())
}

/// Largest truncation accepted by [`variance_oracle`].
pub const VARIANCE_ORACLE_MAX_SITES: usize = 48;

/// `Var eta_t(x)` for an affine model started from the deterministic `eta0`.
///
/// `M = E[eta eta^T]` solves `M' = A~ M + M A~^T + b~ mu^T + mu b~^T + diag q(mu)`
/// with `q_x` the quadratic-variation rate at `x`, which is affine in the
/// state because every event moves mass to one site. The system for
/// `(vec M, mu, 1)` is solved by one matrix exponential per time.
pub fn variance_oracle(model: &ModelSpec, eta0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>, AnalysisError> {
    let (a, b) = mean_field_matrix(model)?;
    let n = a.nrows();
    if n > VARIANCE_ORACLE_MAX_SITES {
        return Err(AnalysisError::TooManySites { max: VARIANCE_ORACLE_MAX_SITES, found: n });
    }
    // q(eta)_x = q0[x] + sum_y q1[x][y] eta(y)
    let mut q0 = vec![0.0; n];
    let mut q1 = DMatrix::<f64>::zeros(n, n);
    for x in 0..n {
        q1[(x, x)] += 2.0 * model.c[x];
        let s2 = model.sigma[x].second_moment();
        if model.rho0[x] != 0.0 {
            q0[x] += model.rho0[x] * s2;
        }
        if model.psi[x] != 0.0 {
            q0[x] += model.psi[x] * model.sigma[x].third_moment();
        }
        for &(y, v) in &model.phi[x] {
            if v != 0.0 {
                q1[(x, y)] += v * s2;
            }
        }
    }
    for y in 0..n {
        if model.g[y] == 0.0 {
            continue;
        }
        for (x, mu) in &model.branching[y] {
            q1[(*x, y)] += model.g[y] * mu.second_moment();
        }
    }
    if q0.iter().chain(q1.iter()).any(|v| !v.is_finite()) {
        return Err(AnalysisError::InfiniteVariance);
    }

    let dim = n * n + n + 1;
    let mu0 = n * n;
    let one = n * n + n;
    let idx = |x: usize, z: usize| x * n + z;
    let mut gen = DMatrix::<f64>::zeros(dim, dim);
    for x in 0..n {
        for z in 0..n {
            let row = idx(x, z);
            for y in 0..n {
                gen[(row, idx(y, z))] += a[(x, y)];
                gen[(row, idx(x, y))] += a[(z, y)];
            }
            gen[(row, mu0 + x)] += b[z];
            gen[(row, mu0 + z)] += b[x];
        }
        let diag = idx(x, x);
        for y in 0..n {
            gen[(diag, mu0 + y)] += q1[(x, y)];
        }
        gen[(diag, one)] += q0[x];
        for y in 0..n {
            gen[(mu0 + x, mu0 + y)] = a[(x, y)];
        }
        gen[(mu0 + x, one)] = b[x];
    }
    let mut start = DVector::<f64>::zeros(dim);
    for x in 0..n {
        for z in 0..n {
            start[idx(x, z)] = eta0[x] * eta0[z];
        }
        start[mu0 + x] = eta0[x];
    }
    start[one] = 1.0;
    Ok(times
        .iter()
        .map(|&t| {
            let s = (&gen * t).exp() * &start;
            (0..n).map(|x| (s[idx(x, x)] - s[mu0 + x] * s[mu0 + x]).max(0.0)).collect()
        })
        .collect())
}

/// `-A~^{-1} b~`.
pub fn stationary_mean(model: &ModelSpec) -> Result<Vec<f64>, AnalysisError> {
    let (a, b) = mean_field_matrix(model)?;
    let lu = a.lu();
    let sol = lu.solve(&(-b)).ok_or(AnalysisError::NotSubcritical(0.0))?;
    Ok(sol.iter().copied().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViolationSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub max: f64,
    /// Trapezoid integral over the grid.
    pub integral: f64,
}

impl ViolationSeries {
    fn from_values(times: Vec<f64>, values: Vec<f64>) -> Self {
        let max = values.iter().copied().fold(0.0, f64::max);
        let integral = times
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum();
        ViolationSeries { times, values, max, integral }
    }
}

/// `sum_x v(x) (lower_t(x) - upper_t(x))^+` at every record.
pub fn comparison_audit(lower: &Trajectory, upper: &Trajectory, w: &Weights) -> Result<ViolationSeries, AnalysisError> {
    if lower.times != upper.times {
        return Err(AnalysisError::GridMismatch);
    }
    let values = lower
        .states
        .iter()
        .zip(&upper.states)
        .map(|(l, u)| dense_positive_part_distance(l, u, w))
        .collect();
    Ok(ViolationSeries::from_values(lower.times.clone(), values))
}

/// Replica mean of the audit over coupled `(upper, lower)` pairs.
pub fn mean_violation(pairs: &[(Trajectory, Trajectory)], w: &Weights) -> Result<ViolationSeries, AnalysisError> {
    let first = pairs.first().ok_or(AnalysisError::TooFewReplicas(0))?;
    let times = first.0.times.clone();
    let mut acc = vec![0.0; times.len()];
    for (upper, lower) in pairs {
        let audit = comparison_audit(lower, upper, w)?;
        if audit.times != times {
            return Err(AnalysisError::GridMismatch);
        }
        for (a, v) in acc.iter_mut().zip(&audit.values) {
            *a += v;
        }
    }
    let n = pairs.len() as f64;
    Ok(ViolationSeries::from_values(times, acc.into_iter().map(|a| a / n).collect()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionReport {
    pub times: Vec<f64>,
    pub series: Vec<f64>,
    pub stderr: Vec<f64>,
    pub margin: f64,
    /// `e^{-A t} E||eta_0 - xi_0||`.
    pub bound: Vec<f64>,
    pub fitted_rate: f64,
    pub rate_ci: (f64, f64),
    pub oracle: Option<Vec<f64>>,
    pub oracle_within: Option<bool>,
    pub pass: bool,
}

impl ContractionReport {
    /// Re-evaluates the pass flag against another margin.
    pub fn passes_with(&self, margin: f64) -> bool {
        bound_holds(&self.times, &self.series, &self.stderr, margin)
    }
}

fn bound_holds(times: &[f64], series: &[f64], stderr: &[f64], margin: f64) -> bool {
    let start = series.first().copied().unwrap_or(0.0);
    times
        .iter()
        .zip(series.iter().zip(stderr))
        .all(|(&t, (&s, &se))| s <= (-margin * t).exp() * start + 3.0 * se.max(0.0) + 1e-12 * start)
}

/// Least-squares decay rate of `ln y` over `t in [T/4, T]`, skipping nonpositive values.
pub fn fit_decay_rate(times: &[f64], values: &[f64]) -> Option<LinearFit> {
    let horizon = times.last().copied().unwrap_or(0.0);
    let (x, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|&(&t, &v)| t >= horizon / 4.0 && v > 0.0)
        .map(|(&t, &v)| (t, v.ln()))
        .unzip();
    linear_fit(&x, &y).map(|f| LinearFit { slope: -f.slope, ..f })
}

/// Contraction check for coupled ordered pairs `(upper, lower)`:
/// `E||eta_t - xi_t||` against `e^{-A t}` and, when given, the affine oracle.
pub fn w1_ordered(
    pairs: &[(Trajectory, Trajectory)],
    w: &Weights,
    margin: f64,
    oracle: Option<&[f64]>,
) -> Result<ContractionReport, AnalysisError> {
    if !(margin > 0.0) {
        return Err(AnalysisError::NotSubcritical(margin));
    }
    let done: Vec<&(Trajectory, Trajectory)> =
        pairs.iter().filter(|(a, b)| !a.aborted() && !b.aborted()).collect();
    if done.len() < 2 {
        return Err(AnalysisError::TooFewReplicas(done.len()));
    }
    let times = done[0].0.times.clone();
    if done.iter().any(|(a, b)| a.times != times || b.times != times) {
        return Err(AnalysisError::GridMismatch);
    }
    let mut series = Vec::with_capacity(times.len());
    let mut stderr = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let d: Vec<f64> = done.iter().map(|(a, b)| dense_distance(&a.states[k], &b.states[k], w)).collect();
        let (m, s) = mean_se(&d);
        series.push(m);
        stderr.push(s);
    }
    let start = series[0];
    let bound = times.iter().map(|&t| (-margin * t).exp() * start).collect();
    let fit = fit_decay_rate(&times, &series);
    let (fitted_rate, rate_ci) = match fit {
        Some(f) => (f.slope, f.slope_ci(0.95)),
        None => (f64::NAN, (f64::NAN, f64::NAN)),
    };
    let oracle_within = oracle.map(|o| {
        o.len() == series.len()
            && o.iter().zip(series.iter().zip(&stderr)).all(|(&r, (&s, &se))| (s - r).abs() <= 3.0 * se + 1e-9 * r.abs())
    });
    let pass = bound_holds(&times, &series, &stderr, margin) && oracle_within.unwrap_or(true);
    Ok(ContractionReport {
        times,
        series,
        stderr,
        margin,
        bound,
        fitted_rate,
        rate_ci,
        oracle: oracle.map(<[f64]>::to_vec),
        oracle_within,
        pass,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    if a.is_empty() || b.is_empty() {
        return (0.0, 1.0);
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_q(lambda))
}

/// `Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantReport {
    pub margin: f64,
    pub burn_in: f64,
    pub stationary: Vec<f64>,
    pub lower_mean: Vec<f64>,
    pub lower_se: Vec<f64>,
    pub upper_mean: Vec<f64>,
    pub upper_se: Vec<f64>,
    /// Both long-run means within 3 standard errors of the stationary mean at every site.
    pub means_match: bool,
    /// `||m^upper_t - m^lower_t||` on the record grid.
    pub gap: Series,
    pub gap_rate: f64,
    pub ks_site: usize,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    pub ks_pass: bool,
}

/// Runs coupled ensembles from the empty state and from `large`, then compares
/// long-run means with `-A~^{-1} b~` and the two marginals with each other.
pub fn invariant_probe(
    model: &ModelSpec,
    w: &Weights,
    params: &SimParams,
    fabric: &NoiseFabric,
    burn_in: f64,
    large: &[f64],
) -> Result<InvariantReport, AnalysisError> {
    let margin = subcriticality_margin(model, w)?;
    if !(margin > 0.0) {
        return Err(AnalysisError::NotSubcritical(margin));
    }
    let stationary = stationary_mean(model)?;
    let sim = Simulator::new(model, w, params)?;
    let empty = vec![0.0; model.site_count()];
    let pairs = coupled_ensemble(&sim, &sim, large, &empty, fabric, params.replicas)?;
    let pairs: Vec<(Trajectory, Trajectory)> =
        pairs.into_iter().filter(|(a, b)| !a.aborted() && !b.aborted()).collect();
    if pairs.len() < 2 {
        return Err(AnalysisError::TooFewReplicas(pairs.len()));
    }
    let times = pairs[0].0.times.clone();
    let late: Vec<usize> = (0..times.len()).filter(|&k| times[k] >= burn_in).collect();
    if late.is_empty() {
        return Err(AnalysisError::OffGrid(burn_in));
    }
    let n = model.site_count();
    let long_run = |pick: fn(&(Trajectory, Trajectory)) -> &Trajectory| {
        let mut mean = vec![0.0; n];
        let mut se = vec![0.0; n];
        for x in 0..n {
            let per: Vec<f64> = pairs
                .iter()
                .map(|p| late.iter().map(|&k| pick(p).states[k][x]).sum::<f64>() / late.len() as f64)
                .collect();
            (mean[x], se[x]) = mean_se(&per);
        }
        (mean, se)
    };
    let (upper_mean, upper_se) = long_run(|p| &p.0);
    let (lower_mean, lower_se) = long_run(|p| &p.1);
    let means_match = (0..n).all(|x| {
        (upper_mean[x] - stationary[x]).abs() <= 3.0 * upper_se[x]
            && (lower_mean[x] - stationary[x]).abs() <= 3.0 * lower_se[x]
    });

    let mut gap_values = Vec::with_capacity(times.len());
    let mut gap_se = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let d: Vec<f64> = pairs.iter().map(|(a, b)| dense_distance(&a.states[k], &b.states[k], w)).collect();
        let (m, s) = mean_se(&d);
        gap_values.push(m);
        gap_se.push(s);
    }
    let pre_burn: Vec<usize> = (0..times.len()).filter(|&k| times[k] <= burn_in).collect();
    let fit_t: Vec<f64> = pre_burn.iter().map(|&k| times[k]).collect();
    let fit_v: Vec<f64> = pre_burn.iter().map(|&k| gap_values[k]).collect();
    let gap_rate = fit_decay_rate(&fit_t, &fit_v).map(|f| f.slope).unwrap_or(f64::NAN);

    let ks_site = (0..n)
        .max_by(|&a, &b| stationary[a].total_cmp(&stationary[b]))
        .unwrap_or(0);
    let last = times.len() - 1;
    let a: Vec<f64> = pairs.iter().map(|p| p.0.states[last][ks_site]).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.1.states[last][ks_site]).collect();
    let (ks_statistic, ks_p_value) = ks_two_sample(&a, &b);

    Ok(InvariantReport {
        margin,
        burn_in,
        stationary,
        lower_mean,
        lower_se,
        upper_mean,
        upper_se,
        means_match,
        gap: Series { times, values: gap_values, stderr: gap_se, bound: None },
        gap_rate,
        ks_site,
        ks_statistic,
        ks_p_value,
        ks_pass: ks_p_value >= 1e-3,
    })
}
