//! Tempered configurations: sparse nonnegative masses, the weighted norm and
//! the componentwise order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{Site, Weights};

/// Masses below this are stored as exact zeros.
pub const FLUSH_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigurationError {
    #[error("mass at site {site} must be finite and nonnegative, got {mass}")]
    InvalidMass { site: Site, mass: f64 },
}

/// Sparse map site -> mass. Serializes as a JSON object `{site_id: mass}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration {
    masses: BTreeMap<Site, f64>,
}

impl Configuration {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn point(site: Site, mass: f64) -> Result<Self, ConfigurationError> {
        let mut c = Self::empty();
        c.set(site, mass)?;
        Ok(c)
    }

    pub fn from_pairs<I: IntoIterator<Item = (Site, f64)>>(pairs: I) -> Result<Self, ConfigurationError> {
        let mut c = Self::empty();
        for (s, m) in pairs {
            c.set(s, m)?;
        }
        Ok(c)
    }

    /// Builds from a dense vector; negative entries are rejected.
    pub fn from_dense(values: &[f64]) -> Result<Self, ConfigurationError> {
        Self::from_pairs(values.iter().copied().enumerate())
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (&s, &m) in &self.masses {
            if s < n {
                out[s] = m;
            }
        }
        out
    }

    pub fn set(&mut self, site: Site, mass: f64) -> Result<(), ConfigurationError> {
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(ConfigurationError::InvalidMass { site, mass });
        }
        if mass < FLUSH_THRESHOLD {
            self.masses.remove(&site);
        } else {
            self.masses.insert(site, mass);
        }
        Ok(())
    }

    pub fn get(&self, site: Site) -> f64 {
        self.masses.get(&site).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Site, f64)> + '_ {
        self.masses.iter().map(|(&s, &m)| (s, m))
    }

    pub fn support(&self) -> impl Iterator<Item = Site> + '_ {
        self.masses.keys().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Multiplies every mass by `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = Self::empty();
        for (s, m) in self.iter() {
            let _ = out.set(s, m * factor);
        }
        out
    }

    /// `sum_x v(x) eta(x)`.
    pub fn norm(&self, w: &Weights) -> f64 {
        self.iter().map(|(s, m)| w.get(s) * m).sum()
    }

    /// True iff `other(x) <= self(x)` at every site.
    pub fn dominates(&self, other: &Configuration) -> bool {
        other.iter().all(|(s, m)| m <= self.get(s))
    }

    /// Componentwise minimum.
    pub fn meet(&self, other: &Configuration) -> Configuration {
        let mut out = Self::empty();
        for (s, m) in self.iter() {
            let _ = out.set(s, m.min(other.get(s)));
        }
        out
    }

    /// `sum_x v(x) max(self(x) - other(x), 0)`.
    pub fn positive_part_distance(&self, other: &Configuration, w: &Weights) -> f64 {
        self.iter()
            .map(|(s, m)| w.get(s) * (m - other.get(s)).max(0.0))
            .sum()
    }

    /// `||self - other||`.
    pub fn distance(&self, other: &Configuration, w: &Weights) -> f64 {
        let mut total = 0.0;
        for (s, m) in self.iter() {
            total += w.get(s) * (m - other.get(s)).abs();
        }
        for (s, m) in other.iter() {
            if !self.masses.contains_key(&s) {
                total += w.get(s) * m;
            }
        }
        total
    }
}

/// `sum_x v(x) max(a(x) - b(x), 0)` on dense states.
pub fn dense_positive_part_distance(a: &[f64], b: &[f64], w: &Weights) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(s, (x, y))| w.get(s) * (x - y).max(0.0))
        .sum()
}

/// `sum_x v(x) |a(x) - b(x)|` on dense states.
pub fn dense_distance(a: &[f64], b: &[f64], w: &Weights) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(s, (x, y))| w.get(s) * (x - y).abs())
        .sum()
}

/// `sum_x v(x) a(x)` on dense states.
pub fn dense_norm(a: &[f64], w: &Weights) -> f64 {
    a.iter().zip(w.as_slice()).map(|(x, v)| x * v).sum()
}
