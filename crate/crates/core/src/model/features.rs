use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Index of the controlled hero, which is also the attention query.
pub const MAIN_HERO: usize = 0;

/// Per-unit raw features for one state, plus the global-info vector.
///
/// Row 0 is always the controlled hero. Positions and health are kept
/// beside the feature matrix because the control layer needs them in
/// arena units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitFeatureSet {
    /// `n × d_in` row-major.
    pub raw: Vec<f64>,
    pub n: usize,
    pub d_in: usize,
    pub positions: Vec<[f64; 2]>,
    pub health: Vec<f64>,
    pub alive: Vec<bool>,
    pub global: Vec<f64>,
    /// Arena side length; positions lie in `[0, side]²`.
    pub side: f64,
}

impl UnitFeatureSet {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("feature set has no units".into()));
        }
        if self.raw.len() != self.n * self.d_in
            || self.positions.len() != self.n
            || self.health.len() != self.n
            || self.alive.len() != self.n
        {
            return Err(Error::InvalidInput("feature set field lengths disagree with n".into()));
        }
        if !self.alive[MAIN_HERO] {
            return Err(Error::InvalidInput("controlled hero is dead".into()));
        }
        if self.raw.iter().chain(&self.global).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature".into()));
        }
        if self.health.iter().any(|h| !(0.0..=1.0).contains(h)) {
            return Err(Error::InvalidInput("health outside [0, 1]".into()));
        }
        let inside = |v: f64| (0.0..=self.side).contains(&v);
        if self.positions.iter().any(|p| !inside(p[0]) || !inside(p[1])) {
            return Err(Error::InvalidInput("unit position outside the arena".into()));
        }
        Ok(())
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.raw[i * self.d_in..(i + 1) * self.d_in]
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (self.positions[a], self.positions[b]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
    }

    /// Minimal feature set for tests: `n` units with the given raw rows,
    /// all alive, at the arena centre.
    pub fn from_rows(rows: Vec<Vec<f64>>, global: Vec<f64>) -> Self {
        let n = rows.len();
        let d_in = rows.first().map_or(0, |r| r.len());
        UnitFeatureSet {
            raw: rows.into_iter().flatten().collect(),
            n,
            d_in,
            positions: vec![[0.5, 0.5]; n],
            health: vec![1.0; n],
            alive: vec![true; n],
            global,
            side: 1.0,
        }
    }
}
