//! Graphs, graph distance, balls, weight functions and the R-fattened
//! auxiliary graph.
//!
//! Sites are dense ids `0..n`. A `Zd` truncation keeps the bijection to
//! integer coordinates with `|x|_1 <= L`; sites outside the box do not exist.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense site id.
pub type Site = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("unknown site id {0}")]
    UnknownSite(Site),
    #[error("graph has no sites")]
    Empty,
    #[error("graph is not connected")]
    Disconnected,
    #[error("edge ({0}, {1}) references a missing site or is a self-loop")]
    InvalidEdge(Site, Site),
    #[error("edge list line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("weight growth ratio is unbounded")]
    UnboundedGrowth,
}

/// Declarative graph description, as written in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSpec {
    /// Integer lattice of dimension `dim`, truncated to `|x|_1 <= radius`.
    Zd { dim: usize, radius: usize },
    /// Undirected graph on `n` sites given by an edge list.
    Adjacency { n: usize, edges: Vec<(Site, Site)> },
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph, LatticeError> {
        match self {
            GraphSpec::Zd { dim, radius } => Graph::zd(*dim, *radius),
            GraphSpec::Adjacency { n, edges } => Graph::from_edges(*n, edges),
        }
    }
}

/// A connected finite graph with cached adjacency and depth from the origin.
#[derive(Clone, Debug)]
pub struct Graph {
    adjacency: Vec<Vec<Site>>,
    depth: Vec<usize>,
    origin: Site,
    coords: Option<Vec<Vec<i64>>>,
    index: HashMap<Vec<i64>, Site>,
    l1_metric: bool,
    dim: Option<usize>,
}

impl Graph {
    /// Truncated lattice `{x in Z^dim : |x|_1 <= radius}` with nearest-neighbour edges.
    pub fn zd(dim: usize, radius: usize) -> Result<Self, LatticeError> {
        if dim == 0 {
            return Err(LatticeError::Empty);
        }
        let r = radius as i64;
        let mut coords = Vec::new();
        let mut current = vec![0i64; dim];
        enumerate_box(&mut coords, &mut current, 0, r);
        let index: HashMap<Vec<i64>, Site> =
            coords.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        let mut adjacency = vec![Vec::new(); coords.len()];
        for (i, c) in coords.iter().enumerate() {
            for axis in 0..dim {
                for step in [-1i64, 1] {
                    let mut nb = c.clone();
                    nb[axis] += step;
                    if let Some(&j) = index.get(&nb) {
                        adjacency[i].push(j);
                    }
                }
            }
            adjacency[i].sort_unstable();
        }
        let depth = coords.iter().map(|c| l1(c)).collect();
        let origin = index[&vec![0i64; dim]];
        Ok(Graph {
            adjacency,
            depth,
            origin,
            coords: Some(coords),
            index,
            l1_metric: true,
            dim: Some(dim),
        })
    }

    /// Graph on `n` sites from an undirected edge list; site 0 is the origin.
    pub fn from_edges(n: usize, edges: &[(Site, Site)]) -> Result<Self, LatticeError> {
        if n == 0 {
            return Err(LatticeError::Empty);
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n || u == v {
                return Err(LatticeError::InvalidEdge(u, v));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
        }
        let depth = bfs(&adjacency, 0);
        if depth.contains(&usize::MAX) {
            return Err(LatticeError::Disconnected);
        }
        Ok(Graph {
            adjacency,
            depth,
            origin: 0,
            coords: None,
            index: HashMap::new(),
            l1_metric: false,
            dim: None,
        })
    }

    /// Parses the `u v` per line edge-list format (0-based ids, `#` comments).
    pub fn parse_edge_list(text: &str) -> Result<Self, LatticeError> {
        let mut edges = Vec::new();
        let mut n = 0;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(LatticeError::Parse {
                    line: lineno + 1,
                    msg: format!("expected two site ids, found {}", parts.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<Site>().map_err(|e| LatticeError::Parse {
                    line: lineno + 1,
                    msg: format!("bad site id {s:?}: {e}"),
                })
            };
            let (u, v) = (parse(parts[0])?, parse(parts[1])?);
            n = n.max(u + 1).max(v + 1);
            edges.push((u, v));
        }
        Graph::from_edges(n, &edges)
    }

    pub fn site_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn sites(&self) -> std::ops::Range<Site> {
        0..self.site_count()
    }

    pub fn origin(&self) -> Site {
        self.origin
    }

    /// Lattice dimension for `Zd` truncations.
    pub fn dimension(&self) -> Option<usize> {
        self.dim
    }

    pub fn neighbors(&self, x: Site) -> &[Site] {
        &self.adjacency[x]
    }

    pub fn degree(&self, x: Site) -> usize {
        self.adjacency[x].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// Degree `d` used in the ball bound; at least 2 as for any infinite connected graph.
    pub fn degree_bound(&self) -> usize {
        self.max_degree().max(2)
    }

    /// Distance from the origin, `|x|_1` on lattices.
    pub fn depth(&self, x: Site) -> usize {
        self.depth[x]
    }

    pub fn coords(&self, x: Site) -> Option<&[i64]> {
        self.coords.as_ref().map(|c| c[x].as_slice())
    }

    pub fn site_at(&self, coords: &[i64]) -> Option<Site> {
        self.index.get(coords).copied()
    }

    fn check(&self, x: Site) -> Result<(), LatticeError> {
        if x < self.site_count() {
            Ok(())
        } else {
            Err(LatticeError::UnknownSite(x))
        }
    }

    /// Shortest-path edge count.
    pub fn dist(&self, x: Site, y: Site) -> Result<usize, LatticeError> {
        self.check(x)?;
        self.check(y)?;
        if self.l1_metric {
            let (cx, cy) = (self.coords(x).unwrap(), self.coords(y).unwrap());
            return Ok(cx.iter().zip(cy).map(|(a, b)| (a - b).unsigned_abs() as usize).sum());
        }
        Ok(bfs(&self.adjacency, x)[y])
    }

    /// Distances from `x` to every site.
    pub fn distances_from(&self, x: Site) -> Result<Vec<usize>, LatticeError> {
        self.check(x)?;
        if self.l1_metric {
            return self.sites().map(|y| self.dist(x, y)).collect();
        }
        Ok(bfs(&self.adjacency, x))
    }

    /// `{z : dist(z, x) <= r}` in ascending id order.
    pub fn ball(&self, x: Site, r: usize) -> Result<Vec<Site>, LatticeError> {
        self.check(x)?;
        let mut seen = vec![false; self.site_count()];
        let mut queue = VecDeque::from([(x, 0usize)]);
        seen[x] = true;
        let mut out = vec![x];
        while let Some((u, d)) = queue.pop_front() {
            if d == r {
                continue;
            }
            for &w in &self.adjacency[u] {
                if !seen[w] {
                    seen[w] = true;
                    out.push(w);
                    queue.push_back((w, d + 1));
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// The graph with an edge between `u` and `v` iff `1 <= dist(u, v) <= R`.
    /// Depths and coordinates of the base graph are kept.
    pub fn auxiliary_graph(&self, range: usize) -> Result<Graph, LatticeError> {
        if range == 0 {
            return Err(LatticeError::InvalidWeight("auxiliary range must be >= 1".into()));
        }
        let mut adjacency = Vec::with_capacity(self.site_count());
        for x in self.sites() {
            let mut nbrs = self.ball(x, range)?;
            nbrs.retain(|&y| y != x);
            adjacency.push(nbrs);
        }
        Ok(Graph {
            adjacency,
            depth: self.depth.clone(),
            origin: self.origin,
            coords: self.coords.clone(),
            index: self.index.clone(),
            l1_metric: false,
            dim: self.dim,
        })
    }
}

fn l1(c: &[i64]) -> usize {
    c.iter().map(|v| v.unsigned_abs() as usize).sum()
}

fn enumerate_box(out: &mut Vec<Vec<i64>>, current: &mut Vec<i64>, axis: usize, budget: i64) {
    if axis == current.len() {
        out.push(current.clone());
        return;
    }
    for v in -budget..=budget {
        current[axis] = v;
        enumerate_box(out, current, axis + 1, budget - v.abs());
    }
    current[axis] = 0;
}

fn bfs(adjacency: &[Vec<Site>], source: Site) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adjacency.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &w in &adjacency[u] {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Weight families on the 1-norm (or origin distance) of a site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightSpec {
    /// `v(x) = exp(-delta |x|)`.
    Exponential { delta: f64 },
    /// `v(x) = 1 / (1 + |x|^delta)`, requires `delta > dim`.
    Polynomial { delta: f64 },
    /// `v = 1`.
    Constant,
}

impl WeightSpec {
    pub fn validate(&self, graph: &Graph) -> Result<(), LatticeError> {
        match *self {
            WeightSpec::Exponential { delta } if !(delta > 0.0 && delta.is_finite()) => Err(
                LatticeError::InvalidWeight(format!("exponential delta must be positive, got {delta}")),
            ),
            WeightSpec::Polynomial { delta } => {
                let dim = graph.dimension().unwrap_or(1) as f64;
                if delta > dim && delta.is_finite() {
                    Ok(())
                } else {
                    Err(LatticeError::InvalidWeight(format!(
                        "polynomial delta must exceed the dimension {dim}, got {delta}"
                    )))
                }
            }
            _ => Ok(()),
        }
    }

    /// `ln v` at origin distance `r`.
    pub fn ln_at_depth(&self, r: usize) -> f64 {
        match *self {
            WeightSpec::Exponential { delta } => -delta * r as f64,
            WeightSpec::Polynomial { delta } => -(1.0 + (r as f64).powf(delta)).ln(),
            WeightSpec::Constant => 0.0,
        }
    }

    pub fn at_depth(&self, r: usize) -> f64 {
        match *self {
            WeightSpec::Exponential { delta } => (-delta * r as f64).exp(),
            WeightSpec::Polynomial { delta } => 1.0 / (1.0 + (r as f64).powf(delta)),
            WeightSpec::Constant => 1.0,
        }
    }
}

/// `v(x)` for a site of `graph`.
pub fn weight(w: &WeightSpec, graph: &Graph, x: Site) -> Result<f64, LatticeError> {
    graph.check(x)?;
    Ok(w.at_depth(graph.depth(x)))
}

/// Weight values evaluated once on every site of a truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    spec: WeightSpec,
    values: Vec<f64>,
}

impl Weights {
    pub fn new(spec: &WeightSpec, graph: &Graph) -> Result<Self, LatticeError> {
        spec.validate(graph)?;
        let values = graph.sites().map(|x| spec.at_depth(graph.depth(x))).collect();
        Ok(Weights { spec: spec.clone(), values })
    }

    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    pub fn get(&self, x: Site) -> f64 {
        self.values[x]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `ln sup_{dist(x,y) <= R} v(y) / v(x)`, scanned over the truncation.
pub fn weight_growth_kappa(w: &WeightSpec, graph: &Graph, range: usize) -> Result<f64, LatticeError> {
    if range == 0 {
        return Err(LatticeError::InvalidWeight("range must be >= 1".into()));
    }
    w.validate(graph)?;
    let mut best = 0.0f64;
    for x in graph.sites() {
        let dx = graph.depth(x);
        for y in graph.ball(x, range)? {
            let dy = graph.depth(y);
            let ratio = match *w {
                WeightSpec::Exponential { delta } => delta * (dx as i64 - dy as i64) as f64,
                _ => w.ln_at_depth(dy) - w.ln_at_depth(dx),
            };
            if !ratio.is_finite() {
                return Err(LatticeError::UnboundedGrowth);
            }
            best = best.max(ratio);
        }
    }
    Ok(best)
}
