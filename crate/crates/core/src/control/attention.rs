use serde::{Deserialize, Serialize};

use super::command::Command;
use crate::dirichlet::{dirichlet_sample, DirichletParams};
use crate::model::{AlignmentWeights, AttentionMode, Hyper, UnitFeatureSet, MAIN_HERO};
use crate::numerics::{sparsemax, RngStream, EXCLUDED};
use crate::{Error, Result};

/// Units a command lets the agent look at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionSet {
    /// Sorted unit indices.
    pub members: Vec<usize>,
    pub radius: f64,
    pub target: usize,
    /// Total unit count of the state this set was built for.
    pub n: usize,
}

impl AttentionSet {
    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    /// Membership as a mask over all units.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.n];
        for &i in &self.members {
            m[i] = true;
        }
        m
    }
}

/// `{hero, target}` plus every living unit strictly closer than `radius`
/// to the hero or to the target.
pub fn build_attention_set(state: &UnitFeatureSet, target: usize, radius: f64) -> Result<AttentionSet> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("attention radius must be positive, got {radius}")));
    }
    if target >= state.n {
        return Err(Error::InvalidTarget(format!("unit {target} does not exist")));
    }
    if !state.alive[target] {
        return Err(Error::InvalidTarget(format!("unit {target} is dead")));
    }
    let members = (0..state.n)
        .filter(|&i| {
            i == MAIN_HERO
                || i == target
                || (state.alive[i] && (state.distance(i, MAIN_HERO) < radius || state.distance(i, target) < radius))
        })
        .collect();
    Ok(AttentionSet { members, radius, target, n: state.n })
}

/// Alignment weights with every unit outside `s_att` excluded.
///
/// The deterministic branch is `sparsemax` of the masked scores. The
/// stochastic branch uses `α = c_conc · sparsemax(masked)` floored at
/// `alpha_floor` and averages `n_avg` Dirichlet draws. Both give exact
/// zeros outside the set.
pub fn sample_masked_z(t: &[f64], s_att: &AttentionSet, mode: AttentionMode, hyper: &Hyper, rng: &mut RngStream) -> Result<AlignmentWeights> {
    if t.len() != s_att.n {
        return Err(Error::InvalidInput(format!("{} scores for an attention set over {} units", t.len(), s_att.n)));
    }
    let mut masked = vec![EXCLUDED; t.len()];
    for &i in &s_att.members {
        masked[i] = t[i];
    }
    let p = sparsemax(&masked)?;
    let z = match mode {
        AttentionMode::Deterministic => p,
        AttentionMode::Stochastic => {
            let alpha = DirichletParams::new(p.values().iter().map(|v| hyper.c_conc * v).collect(), hyper.alpha_floor)
                .map_err(|e| Error::Degenerate(format!("masked concentration support is empty: {e}")))?;
            dirichlet_sample(&alpha, hyper.shape_aug, hyper.n_avg, rng)?.mean
        }
    };
    Ok(AlignmentWeights { z, mode })
}

/// True iff the cell containing the command target is among the `k_intent`
/// highest intention logits (ties toward the lower cell index).
pub fn should_execute(command: &Command, state: &UnitFeatureSet, intention_logits: &[f64], k_intent: usize) -> bool {
    let cells = intention_logits.len();
    let grid = (cells as f64).sqrt().round() as usize;
    if command.target_unit >= state.n || grid * grid != cells || cells == 0 {
        return false;
    }
    let cell = crate::arena::cell_index(state.positions[command.target_unit], state.side, grid);
    cell_in_top_k(intention_logits, cell, k_intent)
}

pub(crate) fn cell_in_top_k(logits: &[f64], cell: usize, k: usize) -> bool {
    let mut order: Vec<usize> = (0..logits.len()).collect();
    order.sort_by(|&a, &b| logits[b].total_cmp(&logits[a]).then(a.cmp(&b)));
    order.iter().take(k).any(|&c| c == cell)
}
