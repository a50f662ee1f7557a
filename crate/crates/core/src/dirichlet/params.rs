use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Concentrations at or below this value are treated as exactly zero.
pub const DEFAULT_ALPHA_FLOOR: f64 = 1e-6;

/// Default number of uniform boosters `B` in the shape augmentation.
pub const DEFAULT_SHAPE_AUGMENTATION: u32 = 4;

/// Dirichlet concentration vector with an explicit (possibly reduced)
/// support.
///
/// Coordinates with `alpha <= alpha_floor` are stored as `0.0` and are
/// excluded from sampling, densities, KL terms and gradients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    alpha: Vec<f64>,
    support: Vec<usize>,
    alpha_floor: f64,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>, alpha_floor: f64) -> Result<Self> {
        if !(alpha_floor > 0.0) || !alpha_floor.is_finite() {
            return Err(Error::InvalidInput(format!("alpha_floor must be positive, got {alpha_floor}")));
        }
        if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidInput("concentrations must be finite and >= 0".into()));
        }
        let alpha: Vec<f64> = alpha
            .into_iter()
            .map(|a| if a > alpha_floor { a } else { 0.0 })
            .collect();
        let support: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] > 0.0).collect();
        if support.is_empty() {
            return Err(Error::InvalidInput("Dirichlet support is empty".into()));
        }
        Ok(DirichletParams { alpha, support, alpha_floor })
    }

    pub fn with_default_floor(alpha: Vec<f64>) -> Result<Self> {
        Self::new(alpha, DEFAULT_ALPHA_FLOOR)
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn alpha_floor(&self) -> f64 {
        self.alpha_floor
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn in_support(&self, i: usize) -> bool {
        self.alpha.get(i).is_some_and(|a| *a > 0.0)
    }

    /// Sum of the concentrations.
    pub fn total(&self) -> f64 {
        self.support.iter().map(|&i| self.alpha[i]).sum()
    }
}

/// Raises both parameter vectors to the union of their supports by setting
/// missing coordinates to `fill`. Returns the new pair and how many
/// coordinates were raised in total.
pub fn union_floor(
    q: &DirichletParams,
    p: &DirichletParams,
    fill: f64,
) -> Result<(DirichletParams, DirichletParams, usize)> {
    if q.len() != p.len() {
        return Err(Error::InvalidInput("union_floor length mismatch".into()));
    }
    if !(fill > q.alpha_floor && fill > p.alpha_floor) {
        return Err(Error::InvalidInput(format!(
            "union fill {fill} must exceed both alpha floors"
        )));
    }
    let mut raised = 0;
    let mut qa = q.alpha.clone();
    let mut pa = p.alpha.clone();
    for i in 0..qa.len() {
        let (qi, pi) = (qa[i] > 0.0, pa[i] > 0.0);
        if pi && !qi {
            qa[i] = fill;
            raised += 1;
        } else if qi && !pi {
            pa[i] = fill;
            raised += 1;
        }
    }
    Ok((
        DirichletParams::new(qa, q.alpha_floor)?,
        DirichletParams::new(pa, p.alpha_floor)?,
        raised,
    ))
}
