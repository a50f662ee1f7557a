use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of quantized move directions; index 0 is +x, counter-clockwise.
pub const MOVE_DIRECTIONS: usize = 8;

/// Level-1 action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level1 {
    Idle,
    Move,
    Attack,
}

impl Level1 {
    pub const ALL: [Level1; 3] = [Level1::Idle, Level1::Move, Level1::Attack];

    pub fn index(self) -> usize {
        match self {
            Level1::Idle => 0,
            Level1::Move => 1,
            Level1::Attack => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Level1> {
        Self::ALL.get(i).copied()
    }
}

/// Hierarchical label: level-1 action, the matching level-2 sublabel and
/// the intention cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionLabel {
    pub level1: Level1,
    /// Direction index, present iff `level1 == Move`.
    pub move_dir: Option<usize>,
    /// Target unit, present iff `level1 == Attack`.
    pub target: Option<usize>,
    pub intention: usize,
}

impl ActionLabel {
    pub fn idle(intention: usize) -> Self {
        ActionLabel { level1: Level1::Idle, move_dir: None, target: None, intention }
    }

    pub fn movement(dir: usize, intention: usize) -> Self {
        ActionLabel { level1: Level1::Move, move_dir: Some(dir), target: None, intention }
    }

    pub fn attack(target: usize, intention: usize) -> Self {
        ActionLabel { level1: Level1::Attack, move_dir: None, target: Some(target), intention }
    }

    pub fn validate(&self, n_units: usize, cells: usize) -> Result<()> {
        let ok = match self.level1 {
            Level1::Idle => self.move_dir.is_none() && self.target.is_none(),
            Level1::Move => self.target.is_none() && self.move_dir.is_some_and(|d| d < MOVE_DIRECTIONS),
            Level1::Attack => self.move_dir.is_none() && self.target.is_some_and(|t| t < n_units),
        };
        if !ok {
            return Err(Error::InvalidInput(format!("inconsistent or out-of-range label {self:?}")));
        }
        if self.intention >= cells {
            return Err(Error::InvalidInput(format!(
                "intention cell {} outside 0..{cells}",
                self.intention
            )));
        }
        Ok(())
    }
}

/// Logits of the four heads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionDistribution {
    pub level1: Vec<f64>,
    pub moves: Vec<f64>,
    pub targets: Vec<f64>,
    pub intention: Vec<f64>,
}

impl ActionDistribution {
    pub fn zeros_like(&self) -> Self {
        ActionDistribution {
            level1: vec![0.0; self.level1.len()],
            moves: vec![0.0; self.moves.len()],
            targets: vec![0.0; self.targets.len()],
            intention: vec![0.0; self.intention.len()],
        }
    }

    /// Greedy decode of every head.
    pub fn argmax_label(&self) -> ActionLabel {
        let level1 = Level1::from_index(argmax(&self.level1)).unwrap_or(Level1::Idle);
        let intention = argmax(&self.intention);
        match level1 {
            Level1::Idle => ActionLabel::idle(intention),
            Level1::Move => ActionLabel::movement(argmax(&self.moves), intention),
            Level1::Attack => ActionLabel::attack(argmax(&self.targets), intention),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.level1
            .iter()
            .chain(&self.moves)
            .chain(&self.targets)
            .chain(&self.intention)
            .all(|v| v.is_finite())
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    logits.iter().map(|x| x - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// Cross-entropy and its gradient wrt the logits.
fn xent(logits: &[f64], label: usize, weight: f64, grad: &mut [f64]) -> f64 {
    let lp = log_softmax(logits);
    for (g, l) in grad.iter_mut().zip(&lp) {
        *g += weight * l.exp();
    }
    grad[label] -= weight;
    -weight * lp[label]
}

/// Summed masked cross-entropies: level-1, the level-2 head matching the
/// label, and `lambda_int` times the intention head.
pub fn policy_loss(dist: &ActionDistribution, label: &ActionLabel, lambda_int: f64) -> Result<f64> {
    policy_loss_grad(dist, label, lambda_int).map(|(l, _)| l)
}

/// [`policy_loss`] together with its gradient wrt every logit.
pub fn policy_loss_grad(
    dist: &ActionDistribution,
    label: &ActionLabel,
    lambda_int: f64,
) -> Result<(f64, ActionDistribution)> {
    label.validate(dist.targets.len(), dist.intention.len())?;
    let mut grad = dist.zeros_like();
    let mut loss = xent(&dist.level1, label.level1.index(), 1.0, &mut grad.level1);
    if let Some(d) = label.move_dir {
        loss += xent(&dist.moves, d, 1.0, &mut grad.moves);
    }
    if let Some(t) = label.target {
        loss += xent(&dist.targets, t, 1.0, &mut grad.targets);
    }
    loss += xent(&dist.intention, label.intention, lambda_int, &mut grad.intention);
    Ok((loss, grad))
}
