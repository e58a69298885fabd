//! Stateless keyed noise. Every variate is a pure function of
//! `(seed, kind, site, step, index)`, so two processes reading the same keys
//! see the same Brownian increments and the same Poisson points.

use serde::Serialize;

use crate::lattice::Site;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const TWO_PI: f64 = std::f64::consts::TAU;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn to_open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Independent stream families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamKind {
    Brownian = 1,
    Branch = 2,
    Immigration = 3,
    /// Poisson clusters used by the exact small-mass diffusion step.
    Cluster = 4,
    /// Random-walk jumps for heat-kernel estimates.
    Walk = 5,
}

/// A realization of all noise, indexed by key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseFabric {
    seed: u64,
}

/// One Poisson point: its `u`-coordinate and two marks for target and size selection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Event {
    pub u: f64,
    pub target_draw: f64,
    pub size_draw: f64,
}

impl NoiseFabric {
    pub fn new(seed: u64) -> Self {
        NoiseFabric { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent fabric for replica `r`.
    pub fn replica(&self, r: u64) -> NoiseFabric {
        NoiseFabric { seed: mix(mix(self.seed ^ 0x5eed) ^ r.wrapping_mul(GOLDEN)) }
    }

    #[inline]
    fn base(&self, kind: StreamKind, site: Site, step: u64) -> u64 {
        let h = mix(self.seed ^ (kind as u64).wrapping_mul(GOLDEN));
        let h = mix(h ^ (site as u64).wrapping_mul(0xd6e8_feb8_6659_fd93));
        mix(h ^ step.wrapping_mul(0xa076_1d64_78bd_642f))
    }

    #[inline]
    fn lane(base: u64, index: u64) -> u64 {
        mix(base.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform(&self, kind: StreamKind, site: Site, step: u64, index: u64) -> f64 {
        to_open_unit(Self::lane(self.base(kind, site, step), index))
    }

    /// Standard normal by Box-Muller on two lanes.
    pub fn normal(&self, kind: StreamKind, site: Site, step: u64, index: u64) -> f64 {
        let base = self.base(kind, site, step);
        let u1 = to_open_unit(Self::lane(base, 2 * index));
        let u2 = to_open_unit(Self::lane(base, 2 * index + 1));
        (-2.0 * u1.ln()).sqrt() * (TWO_PI * u2).cos()
    }

    /// `W_{(step+1) dt}(x) - W_{step dt}(x)`.
    pub fn brownian_increment(&self, x: Site, step: u64, dt: f64) -> f64 {
        dt.sqrt() * self.normal(StreamKind::Brownian, x, step, 0)
    }

    /// Points of a Poisson measure on `[0, dt) x (0, inf)` in increasing `u`,
    /// with intensity one per unit of time and of `u`.
    pub fn events(&self, kind: StreamKind, site: Site, step: u64, dt: f64) -> EventStream {
        EventStream { base: self.base(kind, site, step), inv_dt: 1.0 / dt, k: 0, u: 0.0 }
    }

    /// Branching points for source `y` with `u <= majorant`. A consumer with
    /// threshold `theta <= majorant` accepts exactly the prefix with `u <= theta`.
    pub fn branching_events(&self, y: Site, step: u64, dt: f64, majorant: f64) -> Vec<Event> {
        self.events(StreamKind::Branch, y, step, dt).take_while(|e| e.u <= majorant).collect()
    }

    /// Immigration points at site `x` with `u <= majorant`.
    pub fn immigration_events(&self, x: Site, step: u64, dt: f64, majorant: f64) -> Vec<Event> {
        self.events(StreamKind::Immigration, x, step, dt).take_while(|e| e.u <= majorant).collect()
    }
}

/// Lazy, infinite iterator over Poisson points in increasing `u`.
#[derive(Clone, Debug)]
pub struct EventStream {
    base: u64,
    inv_dt: f64,
    k: u64,
    u: f64,
}

impl EventStream {
    /// Next point without its marks; cheaper when only counting.
    #[inline]
    pub fn next_u(&mut self) -> f64 {
        let gap = -to_open_unit(NoiseFabric::lane(self.base, 3 * self.k)).ln();
        self.u += gap * self.inv_dt;
        self.k += 1;
        self.u
    }

    /// Marks of the most recent point.
    #[inline]
    pub fn marks(&self) -> (f64, f64) {
        let k = self.k - 1;
        (
            to_open_unit(NoiseFabric::lane(self.base, 3 * k + 1)),
            to_open_unit(NoiseFabric::lane(self.base, 3 * k + 2)),
        )
    }
}

impl Iterator for EventStream {
    type Item = Event;

    fn next(&mut self) -> Option<Event> {
        let u = self.next_u();
        let (target_draw, size_draw) = self.marks();
        Some(Event { u, target_draw, size_draw })
    }
}
