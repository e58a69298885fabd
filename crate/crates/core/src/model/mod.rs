//! Coefficient families in parametric form, the admissibility constants,
//! effective drift and subcriticality.
//!
//! The drift is `B(x, eta) = b(x) + sum_y a(x,y) eta(y) - m(x) eta(x)^lambda`,
//! split into the monotone part `B0` and the self-dependent part `B1`.
//! Branching and immigration measures are cylindrical: an event moves mass
//! `z` to a single site.

pub mod levy;
pub mod presets;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{Graph, LatticeError, Site, Weights};
pub use levy::{stable_normalization, LevyMeasure, RetainedMeasure};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("stable index must lie strictly inside (1, 2), got {0}")]
    StableIndex(f64),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),
    #[error("coefficient arrays have {found} sites, graph has {expected}")]
    SiteCount { expected: usize, found: usize },
    #[error("analysis needs an affine model (lambda = 1), got lambda = {0}")]
    Nonlinear(f64),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Row of a sparse kernel: `(column, value)` pairs.
pub type SparseRow = Vec<(Site, f64)>;

/// Off-diagonal interaction kernels as functions of graph distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `c exp(-eps dist)`.
    Exponential { c: f64, eps: f64 },
    /// `c 1{dist <= range}`.
    Cutoff { c: f64, range: usize },
    /// `c / (1 + dist^eps)`.
    Polynomial { c: f64, eps: f64 },
}

impl KernelSpec {
    pub fn value(&self, d: usize) -> f64 {
        match *self {
            KernelSpec::Exponential { c, eps } => c * (-eps * d as f64).exp(),
            KernelSpec::Cutoff { c, range } => {
                if d <= range {
                    c
                } else {
                    0.0
                }
            }
            KernelSpec::Polynomial { c, eps } => c / (1.0 + (d as f64).powf(eps)),
        }
    }

    /// Off-diagonal rows on `graph`, zeros omitted.
    pub fn rows(&self, graph: &Graph) -> Result<Vec<SparseRow>, ModelError> {
        let mut rows = Vec::with_capacity(graph.site_count());
        for x in graph.sites() {
            let dist = graph.distances_from(x)?;
            let row: SparseRow = dist
                .iter()
                .enumerate()
                .filter(|&(y, _)| y != x)
                .map(|(y, &d)| (y, self.value(d)))
                .filter(|&(_, v)| v != 0.0)
                .collect();
            rows.push(row);
        }
        Ok(rows)
    }
}

/// Coefficients of the system on a finite truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    /// Immigration base `b(x) >= 0`.
    pub b: Vec<f64>,
    /// Interaction kernel rows `a(x, .)`, off-diagonal entries nonnegative.
    pub a: Vec<SparseRow>,
    /// Killing strength `m(x) >= 0`.
    pub m: Vec<f64>,
    /// Exponent of the killing term.
    pub lambda: f64,
    /// Diffusion scale, `c(x, t) = c(x) t`.
    pub c: Vec<f64>,
    /// Branching rate, `g(x, t) = g(x) t`.
    pub g: Vec<f64>,
    /// `branching[x]` lists `(y, mu_{x,y})`: jumps placed at `y` by events at source `x`.
    pub branching: Vec<Vec<(Site, LevyMeasure)>>,
    /// Immigration response rows `phi(x, .)`.
    pub phi: Vec<SparseRow>,
    /// `psi(x, x)`; off-diagonal entries never enter for cylindrical `H2`.
    pub psi: Vec<f64>,
    /// Constant part of the immigration rate.
    pub rho0: Vec<f64>,
    /// Immigration measures `sigma_x`.
    pub sigma: Vec<LevyMeasure>,
}

impl ModelSpec {
    /// All-zero model on `n` sites.
    pub fn zero(n: usize) -> Self {
        ModelSpec {
            b: vec![0.0; n],
            a: vec![Vec::new(); n],
            m: vec![0.0; n],
            lambda: 1.0,
            c: vec![0.0; n],
            g: vec![0.0; n],
            branching: vec![Vec::new(); n],
            phi: vec![Vec::new(); n],
            psi: vec![0.0; n],
            rho0: vec![0.0; n],
            sigma: vec![LevyMeasure::Empty; n],
        }
    }

    pub fn site_count(&self) -> usize {
        self.b.len()
    }

    /// Shape checks and finiteness; sign conditions are reported by admissibility.
    pub fn validate(&self, graph: &Graph) -> Result<(), ModelError> {
        let n = graph.site_count();
        let lens = [
            self.b.len(),
            self.a.len(),
            self.m.len(),
            self.c.len(),
            self.g.len(),
            self.branching.len(),
            self.phi.len(),
            self.psi.len(),
            self.rho0.len(),
            self.sigma.len(),
        ];
        if let Some(&found) = lens.iter().find(|&&l| l != n) {
            return Err(ModelError::SiteCount { expected: n, found });
        }
        let rows = self.a.iter().chain(&self.phi).flatten();
        for &(y, v) in rows {
            if y >= n || !v.is_finite() {
                return Err(ModelError::InvalidCoefficient(format!("kernel entry ({y}, {v})")));
            }
        }
        for list in &self.branching {
            for (y, mu) in list {
                if *y >= n {
                    return Err(ModelError::InvalidCoefficient(format!("branching target {y}")));
                }
                mu.validate()?;
            }
        }
        for mu in &self.sigma {
            mu.validate()?;
        }
        let scalars = self.b.iter().chain(&self.m).chain(&self.c).chain(&self.g);
        for &v in scalars.chain(&self.psi).chain(&self.rho0) {
            if !v.is_finite() {
                return Err(ModelError::InvalidCoefficient(format!("non-finite value {v}")));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(ModelError::InvalidCoefficient(format!("lambda = {}", self.lambda)));
        }
        Ok(())
    }

    pub fn kernel(&self, x: Site, y: Site) -> f64 {
        self.a[x].iter().filter(|&&(j, _)| j == y).map(|&(_, v)| v).sum()
    }

    fn diag(&self, x: Site) -> f64 {
        self.kernel(x, x)
    }

    /// `B0(x, eta) = b(x) + sum_{y != x} a(x,y) eta(y) + 1{a(x,x) >= 0} a(x,x) eta(x)`.
    pub fn b0(&self, x: Site, eta: &[f64]) -> f64 {
        let mut acc = self.b[x];
        for &(y, v) in &self.a[x] {
            if y != x || v >= 0.0 {
                acc += v * eta[y];
            }
        }
        acc
    }

    /// `B1(x, t) = 1{a(x,x) < 0} |a(x,x)| t + m(x) t^lambda`.
    pub fn b1(&self, x: Site, t: f64) -> f64 {
        let t = t.max(0.0);
        let own = self.diag(x);
        let linear = if own < 0.0 { -own * t } else { 0.0 };
        let power = if t > 0.0 { self.m[x] * t.powf(self.lambda) } else { 0.0 };
        linear + power
    }

    /// `B(x, eta) = B0(x, eta) - B1(x, eta(x))`.
    pub fn drift(&self, x: Site, eta: &[f64]) -> f64 {
        self.b0(x, eta) - self.b1(x, eta[x])
    }

    /// Immigration rate `rho(x, eta, z 1_x)`.
    pub fn rho(&self, x: Site, eta: &[f64], z: f64) -> f64 {
        let mut acc = self.rho0[x] + self.psi[x] * z;
        for &(y, v) in &self.phi[x] {
            acc += v * eta[y].max(0.0);
        }
        acc
    }

    /// True when the killing term is linear (or absent).
    pub fn is_affine(&self) -> bool {
        self.lambda == 1.0 || self.m.iter().all(|&v| v == 0.0)
    }

    /// `b~(x) = b(x) + psi(x,x) int z^2 sigma_x + rho0(x) int z sigma_x`.
    pub fn effective_immigration(&self, x: Site) -> f64 {
        let mut acc = self.b[x];
        if self.psi[x] != 0.0 {
            acc += self.psi[x] * self.sigma[x].second_moment();
        }
        if self.rho0[x] != 0.0 {
            acc += self.rho0[x] * self.sigma[x].first_moment();
        }
        acc
    }

    /// Linear part of the effective drift, `a~(x, y)`, with `-m` on the diagonal when affine.
    pub fn effective_kernel(&self) -> Vec<SparseRow> {
        let n = self.site_count();
        let mut rows: Vec<BTreeMap<Site, f64>> = vec![BTreeMap::new(); n];
        for x in 0..n {
            for &(y, v) in &self.a[x] {
                *rows[x].entry(y).or_default() += v;
            }
            let s1 = self.sigma[x].first_moment();
            for &(y, v) in &self.phi[x] {
                if v != 0.0 {
                    *rows[x].entry(y).or_default() += v * s1;
                }
            }
            if self.lambda == 1.0 && self.m[x] != 0.0 {
                *rows[x].entry(x).or_default() -= self.m[x];
            }
        }
        for y in 0..n {
            if self.g[y] == 0.0 {
                continue;
            }
            for (x, mu) in &self.branching[y] {
                if *x != y {
                    let mean = mu.first_moment();
                    if mean != 0.0 {
                        *rows[*x].entry(y).or_default() += self.g[y] * mean;
                    }
                }
            }
        }
        rows.into_iter().map(|r| r.into_iter().collect()).collect()
    }

    /// Effective drift `B~(x, eta)`: the drift plus the means of every
    /// uncompensated jump term.
    pub fn effective_drift(&self, x: Site, eta: &[f64]) -> f64 {
        let mut acc = self.drift(x, eta);
        for y in 0..self.site_count() {
            if y == x || self.g[y] == 0.0 {
                continue;
            }
            for (t, mu) in &self.branching[y] {
                if *t == x {
                    acc += self.g[y] * eta[y].max(0.0) * mu.first_moment();
                }
            }
        }
        let s1 = self.sigma[x].first_moment();
        for &(y, v) in &self.phi[x] {
            if v != 0.0 {
                acc += v * eta[y].max(0.0) * s1;
            }
        }
        acc + self.effective_immigration(x) - self.b[x]
    }

    /// Smallest `R` such that `a(x,y) = 0` and `mu_{x,y}` is null for `dist(x,y) > R`.
    pub fn range(&self, graph: &Graph) -> Result<usize, ModelError> {
        let mut r = 0;
        for x in graph.sites() {
            for &(y, v) in &self.a[x] {
                if v != 0.0 {
                    r = r.max(graph.dist(x, y)?);
                }
            }
            for (y, mu) in &self.branching[x] {
                if !mu.is_null() {
                    r = r.max(graph.dist(x, *y)?);
                }
            }
        }
        Ok(r)
    }

    /// Coefficients `B`, `g`, `rho` multiplied by `1{x in V'}`; jumps landing
    /// outside `V'` are removed so the restricted process lives on `V'`.
    pub fn restrict(&self, inside: &[bool]) -> ModelSpec {
        let mut out = self.clone();
        for x in 0..self.site_count() {
            if !inside[x] {
                out.b[x] = 0.0;
                out.a[x].clear();
                out.m[x] = 0.0;
                out.g[x] = 0.0;
                out.phi[x].clear();
                out.psi[x] = 0.0;
                out.rho0[x] = 0.0;
            }
            out.branching[x].retain(|(y, _)| inside[*y]);
        }
        out
    }
}

/// Pass/fail for one of the conditions (A1)..(A6).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Constants of the admissibility conditions, certified on the truncation only.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    /// `max_x (sum_{y != x} v(y) a(x,y) + a(x,x)^+ v(x)) / v(x)`.
    pub c1: f64,
    /// Translation-uniform bound using `v(y)/v(x) <= exp(kappa(dist(x,y)))`.
    pub c1_uniform: f64,
    pub c2: Vec<f64>,
    pub c3: Vec<f64>,
    pub c2_weighted_sum: f64,
    pub small_jump_sum: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    /// `C` in `E||eta_t|| <= (1 + E||eta_0||) e^{Ct}`, equal to `4 C6 + C4`.
    pub moment_constant: f64,
    /// Exponent `C1 + 2 C4 + C5` of the stability estimate.
    pub stability_rate: f64,
    pub subcriticality_margin: Option<f64>,
    pub subcritical: bool,
    pub conditions: Vec<ConditionCheck>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&ConditionCheck> {
        self.conditions.iter().find(|c| !c.pass)
    }
}

fn check(name: &str, pass: bool, detail: String) -> ConditionCheck {
    ConditionCheck { name: name.to_string(), pass, detail }
}

/// `exp(kappa(d))` for every distance `d`, where `kappa(d)` is the largest
/// log-ratio `ln v(y) - ln v(x)` over pairs with `dist(x, y) <= d`.
fn growth_table(graph: &Graph, w: &Weights) -> Result<(Vec<Vec<usize>>, Vec<f64>), ModelError> {
    let mut dists = Vec::with_capacity(graph.site_count());
    let mut best: Vec<f64> = Vec::new();
    for x in graph.sites() {
        let d = graph.distances_from(x)?;
        for (y, &k) in d.iter().enumerate() {
            if best.len() <= k {
                best.resize(k + 1, f64::NEG_INFINITY);
            }
            let ratio = match *w.spec() {
                crate::lattice::WeightSpec::Exponential { delta } => {
                    delta * (graph.depth(x) as i64 - graph.depth(y) as i64) as f64
                }
                _ => w.get(y).ln() - w.get(x).ln(),
            };
            best[k] = best[k].max(ratio);
        }
        dists.push(d);
    }
    let mut running = f64::NEG_INFINITY;
    let table = best
        .into_iter()
        .map(|v| {
            running = running.max(v);
            running.exp()
        })
        .collect();
    Ok((dists, table))
}

/// Evaluates the admissibility constants on the truncation.
pub fn admissibility_check(
    model: &ModelSpec,
    graph: &Graph,
    w: &Weights,
) -> Result<AdmissibilityReport, ModelError> {
    model.validate(graph)?;
    let n = graph.site_count();
    let v = w.as_slice();

    let mut a1_issues = Vec::new();
    for x in 0..n {
        for &(y, val) in &model.a[x] {
            if y != x && val < 0.0 {
                a1_issues.push(format!("a({x},{y}) = {val} < 0"));
            }
        }
        if model.b[x] < 0.0 {
            a1_issues.push(format!("b({x}) = {} < 0", model.b[x]));
        }
        if model.m[x] < 0.0 {
            a1_issues.push(format!("m({x}) = {} < 0", model.m[x]));
        }
    }
    if model.lambda == 0.0 && model.m.iter().any(|&m| m > 0.0) {
        a1_issues.push("lambda = 0 with m > 0 makes B1 discontinuous at 0".into());
    }

    let (dists, growth) = growth_table(graph, w)?;
    let mut c1 = 0.0f64;
    let mut c1_uniform = 0.0f64;
    for x in 0..n {
        let mut exact = 0.0;
        let mut uniform = 0.0;
        for &(y, val) in &model.a[x] {
            if y == x {
                if val >= 0.0 {
                    exact += val * v[x];
                    uniform += val;
                }
            } else {
                exact += val * v[y];
                uniform += val * growth[dists[x][y]];
            }
        }
        c1 = c1.max(exact / v[x]);
        c1_uniform = c1_uniform.max(uniform);
    }
    let b_norm: f64 = (0..n).map(|x| v[x] * model.b[x]).sum();

    let c2 = model.c.clone();
    let c2_weighted_sum: f64 = (0..n).map(|x| v[x] * model.c[x]).sum();
    let a2_ok = model.c.iter().all(|&c| c >= 0.0) && c2_weighted_sum.is_finite();

    let c3 = model.g.clone();
    let a3_ok = model.g.iter().all(|&g| g >= 0.0);

    let mut small_jump_sum = 0.0;
    let mut c4 = 0.0f64;
    for x in 0..n {
        let gx = model.g[x];
        if gx == 0.0 {
            continue;
        }
        let mut cross = 0.0;
        for (y, mu) in &model.branching[x] {
            if *y == x {
                small_jump_sum += v[x] * gx * mu.small_second_moment();
                c4 = c4.max(gx * mu.large_first_moment());
            } else {
                cross += v[*y] * mu.first_moment();
            }
        }
        c4 = c4.max(gx / v[x] * cross);
    }
    let a4_ok = small_jump_sum.is_finite() && c4.is_finite();

    let mut a5_issues = Vec::new();
    let mut column = vec![0.0f64; n];
    for x in 0..n {
        let s1 = model.sigma[x].first_moment();
        for &(y, val) in &model.phi[x] {
            if val < 0.0 {
                a5_issues.push(format!("phi({x},{y}) = {val} < 0"));
            } else if val > 0.0 {
                column[y] += v[x] * val * s1;
            }
        }
        if model.psi[x] < 0.0 {
            a5_issues.push(format!("psi({x},{x}) = {} < 0", model.psi[x]));
        }
        if model.rho0[x] < 0.0 {
            a5_issues.push(format!("rho0({x}) = {} < 0", model.rho0[x]));
        }
    }
    let c5 = (0..n).map(|y| column[y] / v[y]).fold(0.0, f64::max);
    let a5_ok = a5_issues.is_empty() && c5.is_finite();

    let mut immigration_const = 0.0;
    for x in 0..n {
        if model.psi[x] > 0.0 {
            immigration_const += v[x] * model.psi[x] * model.sigma[x].second_moment();
        }
        if model.rho0[x] > 0.0 {
            immigration_const += v[x] * model.rho0[x] * model.sigma[x].first_moment();
        }
    }
    let c6 = b_norm.max(c1).max(c5).max(immigration_const);
    let a6_ok = c6.is_finite();

    let subcriticality = if model.is_affine() {
        Some(subcriticality_margin(model, w)?)
    } else {
        None
    };

    let conditions = vec![
        check(
            "A1",
            a1_issues.is_empty() && c1.is_finite(),
            if a1_issues.is_empty() { format!("C1 = {c1}") } else { a1_issues.join("; ") },
        ),
        check("A2", a2_ok, format!("sum v C2 = {c2_weighted_sum}")),
        check("A3", a3_ok, "C3(x) = g(x)".into()),
        check("A4", a4_ok, format!("sum v g int z^2 = {small_jump_sum}, C4 = {c4}")),
        check(
            "A5",
            a5_ok,
            if a5_issues.is_empty() { format!("C5 = {c5}") } else { a5_issues.join("; ") },
        ),
        check("A6", a6_ok, format!("C6 = {c6}")),
    ];

    Ok(AdmissibilityReport {
        c1,
        c1_uniform,
        c2,
        c3,
        c2_weighted_sum,
        small_jump_sum,
        c4,
        c5,
        c6,
        moment_constant: 4.0 * c6 + c4,
        stability_rate: c1 + 2.0 * c4 + c5,
        subcriticality_margin: subcriticality,
        subcritical: subcriticality.is_some_and(|a| a > 0.0),
        conditions,
    })
}

/// `A = min_y -(sum_x v(x) a~(x,y)) / v(y)`; positive values certify contraction.
pub fn subcriticality_margin(model: &ModelSpec, w: &Weights) -> Result<f64, ModelError> {
    if !model.is_affine() {
        return Err(ModelError::Nonlinear(model.lambda));
    }
    let n = model.site_count();
    let mut column = vec![0.0f64; n];
    for (x, row) in model.effective_kernel().iter().enumerate() {
        for &(y, val) in row {
            column[y] += w.get(x) * val;
        }
    }
    Ok((0..n).map(|y| -column[y] / w.get(y)).fold(f64::INFINITY, f64::min))
}

/// `(A~, b~)` with `d/dt E[eta_t] = b~ + A~ E[eta_t]` for affine models.
pub fn mean_field_matrix(model: &ModelSpec) -> Result<(DMatrix<f64>, DVector<f64>), ModelError> {
    if !model.is_affine() {
        return Err(ModelError::Nonlinear(model.lambda));
    }
    let n = model.site_count();
    let mut a = DMatrix::zeros(n, n);
    for (x, row) in model.effective_kernel().iter().enumerate() {
        for &(y, val) in row {
            a[(x, y)] += val;
        }
    }
    let b = DVector::from_iterator(n, (0..n).map(|x| model.effective_immigration(x)));
    Ok((a, b))
}

/// True iff no interaction or mean offspring reaches beyond distance `r`.
pub fn check_finite_range(model: &ModelSpec, graph: &Graph, r: usize) -> Result<bool, ModelError> {
    for x in graph.sites() {
        for &(y, val) in &model.a[x] {
            if val != 0.0 && graph.dist(x, y)? > r {
                return Ok(false);
            }
        }
        if model.g[x] > 0.0 {
            for (y, mu) in &model.branching[x] {
                if mu.first_moment() != 0.0 && graph.dist(x, *y)? > r {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::WeightSpec;
    use crate::model::presets::{NearestNeighborParams, Preset};

    fn nn(graph: &Graph, g: f64, m: f64) -> ModelSpec {
        Preset::NearestNeighbor(NearestNeighborParams { g, m, ..Default::default() })
            .build(graph)
            .unwrap()
    }

    #[test]
    fn nearest_neighbor_preset_is_admissible() {
        let graph = Graph::zd(1, 10).unwrap();
        let w = Weights::new(&WeightSpec::Exponential { delta: 1.0 }, &graph).unwrap();
        let model = nn(&graph, 1.0, 0.0);
        let r = admissibility_check(&model, &graph, &w).unwrap();
        assert!(r.passed(), "{:?}", r.first_failure());
        assert!(r.c3.iter().all(|&c| c == 1.0));
        // Hand evaluation: interior row sum of a(x,y) v(y)/v(x) is e + 1/e.
        let e = 1.0f64.exp();
        assert!((r.c1 - (e + 1.0 / e)).abs() < 1e-12);
        // Cross-site offspring: g/v(x) * sum_{|y-x|=1} v(y) has the same maximum.
        assert!((r.c4 - (e + 1.0 / e)).abs() < 1e-12);
        assert_eq!(r.c5, 0.0);
        assert_eq!(r.c6, r.c1);
    }

    #[test]
    fn zero_model_has_zero_constants() {
        let graph = Graph::zd(1, 3).unwrap();
        let w = Weights::new(&WeightSpec::Constant, &graph).unwrap();
        let r = admissibility_check(&ModelSpec::zero(graph.site_count()), &graph, &w).unwrap();
        assert!(r.passed());
        assert_eq!((r.c1, r.c4, r.c5, r.c6, r.moment_constant), (0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn negative_off_diagonal_fails_a1() {
        let graph = Graph::zd(1, 2).unwrap();
        let w = Weights::new(&WeightSpec::Constant, &graph).unwrap();
        let mut model = ModelSpec::zero(graph.site_count());
        model.a[0].push((1, -0.5));
        let r = admissibility_check(&model, &graph, &w).unwrap();
        assert_eq!(r.first_failure().unwrap().name, "A1");
    }

    #[test]
    fn remark_exponential_kernel_bound() {
        let graph = Graph::zd(1, 60).unwrap();
        let w = Weights::new(&WeightSpec::Exponential { delta: 0.5 }, &graph).unwrap();
        let mut model = ModelSpec::zero(graph.site_count());
        model.a = KernelSpec::Exponential { c: 1.0, eps: 1.0 }.rows(&graph).unwrap();
        let r = admissibility_check(&model, &graph, &w).unwrap();
        let q = (-0.5f64).exp();
        let closed = 2.0 * q / (1.0 - q);
        assert!((closed - 3.0830).abs() < 1e-4);
        assert!((r.c1_uniform - closed).abs() < 1e-9);
        assert!(r.c1 <= r.c1_uniform);
    }

    #[test]
    fn effective_drift_examples() {
        let graph = Graph::zd(1, 5).unwrap();
        let model = nn(&graph, 1.0, 0.0);
        let x = graph.origin();
        let mut eta = vec![0.0; graph.site_count()];
        for &y in graph.neighbors(x) {
            eta[y] = 1.0;
        }
        assert_eq!(model.effective_drift(x, &eta), 4.0);
        assert_eq!(model.effective_drift(x, &vec![0.0; graph.site_count()]), 0.0);
    }

    #[test]
    fn margin_examples() {
        let graph = Graph::zd(1, 10).unwrap();
        let w = Weights::new(&WeightSpec::Exponential { delta: 0.5 }, &graph).unwrap();
        let a = subcriticality_margin(&nn(&graph, 1.0, 5.0), &w).unwrap();
        let closed = 5.0 - 2.0 * (0.5f64.exp() + (-0.5f64).exp());
        assert!((a - closed).abs() < 1e-12);
        assert!((a - 0.48950).abs() < 1e-5);
        assert!(subcriticality_margin(&nn(&graph, 1.0, 0.0), &w).unwrap() < 0.0);
        let mut pure = ModelSpec::zero(graph.site_count());
        pure.m = vec![1.0; graph.site_count()];
        assert_eq!(subcriticality_margin(&pure, &w).unwrap(), 1.0);
    }

    #[test]
    fn nonlinear_models_are_refused() {
        let graph = Graph::zd(1, 2).unwrap();
        let w = Weights::new(&WeightSpec::Constant, &graph).unwrap();
        let mut model = ModelSpec::zero(graph.site_count());
        model.m = vec![1.0; graph.site_count()];
        model.lambda = 2.0;
        assert_eq!(subcriticality_margin(&model, &w), Err(ModelError::Nonlinear(2.0)));
        assert!(mean_field_matrix(&model).is_err());
    }

    #[test]
    fn mean_field_for_nearest_neighbor() {
        let graph = Graph::zd(1, 2).unwrap();
        let (a, b) = mean_field_matrix(&nn(&graph, 1.0, 0.0)).unwrap();
        for x in graph.sites() {
            for y in graph.sites() {
                let adjacent = graph.dist(x, y).unwrap() == 1;
                assert_eq!(a[(x, y)], if adjacent { 2.0 } else { 0.0 });
            }
        }
        assert!(b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn finite_range_checks() {
        let graph = Graph::zd(1, 8).unwrap();
        let model = nn(&graph, 1.0, 0.0);
        assert!(check_finite_range(&model, &graph, 1).unwrap());
        assert!(!check_finite_range(&model, &graph, 0).unwrap());
        let mut cut = ModelSpec::zero(graph.site_count());
        cut.a = KernelSpec::Cutoff { c: 1.0, range: 3 }.rows(&graph).unwrap();
        assert!(check_finite_range(&cut, &graph, 3).unwrap());
        assert!(!check_finite_range(&cut, &graph, 2).unwrap());
        assert_eq!(cut.range(&graph).unwrap(), 3);
    }

    #[test]
    fn restriction_clears_outside_sites() {
        let graph = Graph::zd(1, 3).unwrap();
        let model = nn(&graph, 1.0, 0.0);
        let inside: Vec<bool> = graph.sites().map(|x| graph.depth(x) <= 1).collect();
        let r = model.restrict(&inside);
        for x in graph.sites() {
            if !inside[x] {
                assert!(r.a[x].is_empty());
                assert_eq!(r.g[x], 0.0);
            }
            assert!(r.branching[x].iter().all(|(y, _)| inside[*y]));
        }
    }
}
