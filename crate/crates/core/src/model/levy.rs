//! One-dimensional Lévy measures on `(0, inf)` with closed-form moments.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::ModelError;

/// Jump-size measure `mu_{x,y}` or `sigma_x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LevyMeasure {
    /// Finitely many atoms `(size, rate)`.
    FiniteAtoms { atoms: Vec<(f64, f64)> },
    /// Density `f(alpha) z^{-1-alpha}` on `(0, inf)`, `alpha in (1, 2)`.
    StablePositive { alpha: f64 },
    #[default]
    Empty,
}

/// `Gamma(2 - alpha) / (alpha (alpha - 1))` for `alpha in (1, 2)`.
pub fn stable_normalization(alpha: f64) -> Result<f64, ModelError> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(ModelError::StableIndex(alpha));
    }
    Ok(gamma(2.0 - alpha) / (alpha * (alpha - 1.0)))
}

impl LevyMeasure {
    pub fn atom(size: f64, rate: f64) -> Self {
        LevyMeasure::FiniteAtoms { atoms: vec![(size, rate)] }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            LevyMeasure::FiniteAtoms { atoms } => {
                for &(z, r) in atoms {
                    if !(z > 0.0 && z.is_finite() && r >= 0.0 && r.is_finite()) {
                        return Err(ModelError::InvalidMeasure(format!(
                            "atom (size {z}, rate {r}) needs size > 0 and rate >= 0"
                        )));
                    }
                }
                Ok(())
            }
            LevyMeasure::StablePositive { alpha } => stable_normalization(*alpha).map(|_| ()),
            LevyMeasure::Empty => Ok(()),
        }
    }

    /// True when the measure puts no mass anywhere.
    pub fn is_null(&self) -> bool {
        match self {
            LevyMeasure::FiniteAtoms { atoms } => atoms.iter().all(|&(_, r)| r == 0.0),
            LevyMeasure::StablePositive { .. } => false,
            LevyMeasure::Empty => true,
        }
    }

    fn stable_f(alpha: f64) -> f64 {
        stable_normalization(alpha).unwrap_or(f64::NAN)
    }

    /// `int z mu(dz)`.
    pub fn first_moment(&self) -> f64 {
        match self {
            LevyMeasure::FiniteAtoms { atoms } => atoms.iter().map(|&(z, r)| z * r).sum(),
            LevyMeasure::StablePositive { .. } => f64::INFINITY,
            LevyMeasure::Empty => 0.0,
        }
    }

    /// `int z^2 mu(dz)`.
    pub fn second_moment(&self) -> f64 {
        match self {
            LevyMeasure::FiniteAtoms { atoms } => atoms.iter().map(|&(z, r)| z * z * r).sum(),
            LevyMeasure::StablePositive { .. } => f64::INFINITY,
            LevyMeasure::Empty => 0.0,
        }
    }

    /// `int z^3 mu(dz)`.
    pub fn third_moment(&self) -> f64 {
        match self {
            LevyMeasure::FiniteAtoms { atoms } => atoms.iter().map(|&(z, r)| z * z * z * r).sum(),
            LevyMeasure::StablePositive { .. } => f64::INFINITY,
            LevyMeasure::Empty => 0.0,
        }
    }

    /// `int_{(0,1]} z^2 mu(dz)`; `f / (2 - alpha)` for the stable law.
    pub fn small_second_moment(&self) -> f64 {
        match self {
            LevyMeasure::FiniteAtoms { atoms } => atoms
                .iter()
                .filter(|&&(z, _)| z <= 1.0)
                .map(|&(z, r)| z * z * r)
                .sum(),
            LevyMeasure::StablePositive { alpha } => Self::stable_f(*alpha) / (2.0 - alpha),
            LevyMeasure::Empty => 0.0,
        }
    }

    /// `int_{(1,inf)} z mu(dz)`; `f / (alpha - 1)` for the stable law.
    pub fn large_first_moment(&self) -> f64 {
        match self {
            LevyMeasure::FiniteAtoms { atoms } => atoms
                .iter()
                .filter(|&&(z, _)| z > 1.0)
                .map(|&(z, r)| z * r)
                .sum(),
            LevyMeasure::StablePositive { alpha } => Self::stable_f(*alpha) / (alpha - 1.0),
            LevyMeasure::Empty => 0.0,
        }
    }

    /// `int_{(0,cut)} z^2 mu(dz)`, the variance dropped by small-jump truncation.
    pub fn dropped_variance(&self, cut: f64) -> f64 {
        match self {
            LevyMeasure::StablePositive { alpha } => {
                Self::stable_f(*alpha) * cut.powf(2.0 - alpha) / (2.0 - alpha)
            }
            _ => 0.0,
        }
    }

    /// The part kept by the simulator: atoms as given, stable jumps `>= cut`.
    pub fn retained(&self, cut: f64) -> RetainedMeasure {
        match self {
            LevyMeasure::FiniteAtoms { atoms } => {
                let kept: Vec<(f64, f64)> = atoms.iter().copied().filter(|&(_, r)| r > 0.0).collect();
                let mut cumulative = Vec::with_capacity(kept.len());
                let mut total = 0.0;
                for &(_, r) in &kept {
                    total += r;
                    cumulative.push(total);
                }
                RetainedMeasure::Atoms { atoms: kept, cumulative, total }
            }
            LevyMeasure::StablePositive { alpha } => {
                let f = Self::stable_f(*alpha);
                RetainedMeasure::Pareto {
                    alpha: *alpha,
                    f,
                    cut,
                    total: f * cut.powf(-alpha) / alpha,
                }
            }
            LevyMeasure::Empty => RetainedMeasure::Null,
        }
    }
}

/// Finite-mass measure actually sampled during simulation.
#[derive(Clone, Debug, PartialEq)]
pub enum RetainedMeasure {
    Atoms { atoms: Vec<(f64, f64)>, cumulative: Vec<f64>, total: f64 },
    Pareto { alpha: f64, f: f64, cut: f64, total: f64 },
    Null,
}

impl RetainedMeasure {
    pub fn total_mass(&self) -> f64 {
        match self {
            RetainedMeasure::Atoms { total, .. } | RetainedMeasure::Pareto { total, .. } => *total,
            RetainedMeasure::Null => 0.0,
        }
    }

    /// Draws a size from the normalized measure by inverse CDF, `u in (0, 1)`.
    pub fn sample(&self, u: f64) -> f64 {
        match self {
            RetainedMeasure::Atoms { atoms, cumulative, total } => {
                let target = u * total;
                let i = cumulative.partition_point(|&c| c < target).min(atoms.len() - 1);
                atoms[i].0
            }
            RetainedMeasure::Pareto { alpha, cut, .. } => cut * u.powf(-1.0 / alpha),
            RetainedMeasure::Null => 0.0,
        }
    }

    /// `int z 1{z <= cap}` against the retained measure.
    pub fn capped_first_moment(&self, cap: f64) -> f64 {
        match self {
            RetainedMeasure::Atoms { atoms, .. } => {
                atoms.iter().filter(|&&(z, _)| z <= cap).map(|&(z, r)| z * r).sum()
            }
            RetainedMeasure::Pareto { alpha, f, cut, .. } => {
                if cap <= *cut {
                    0.0
                } else {
                    f / (alpha - 1.0) * (cut.powf(1.0 - alpha) - cap.powf(1.0 - alpha))
                }
            }
            RetainedMeasure::Null => 0.0,
        }
    }

    /// Largest size `<= cap` that can be drawn.
    pub fn max_size(&self, cap: f64) -> f64 {
        match self {
            RetainedMeasure::Atoms { atoms, .. } => atoms
                .iter()
                .map(|&(z, _)| z)
                .filter(|&z| z <= cap)
                .fold(0.0, f64::max),
            RetainedMeasure::Pareto { .. } => cap,
            RetainedMeasure::Null => 0.0,
        }
    }
}
