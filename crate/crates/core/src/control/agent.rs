use super::attention::{sample_masked_z, AttentionSet};
use crate::model::{
    attention_scores, embed_units, fuse, masked_scores, predict, ActionLabel, AlignmentWeights, AttentionMode,
    ParameterStore, UnitFeatureSet, MAIN_HERO,
};
use crate::numerics::RngStream;
use crate::{Error, Result};

/// One decision of an agent.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentOutput {
    pub label: ActionLabel,
    /// Intention-head logits, one per coarse cell.
    pub intention: Vec<f64>,
    pub weights: Option<AlignmentWeights>,
}

/// Anything that can act in the arena, optionally under an attention
/// restriction.
pub trait Agent: Sync {
    fn forward(&self, state: &UnitFeatureSet, attention: Option<&AttentionSet>, rng: &mut RngStream) -> Result<AgentOutput>;
}

/// A trained (or untrained) network decoded greedily.
#[derive(Clone, Debug)]
pub struct ModelAgent {
    pub store: ParameterStore,
    pub mode: AttentionMode,
}

impl ModelAgent {
    pub fn new(store: ParameterStore, mode: AttentionMode) -> Self {
        ModelAgent { store, mode }
    }
}

impl Agent for ModelAgent {
    fn forward(&self, state: &UnitFeatureSet, attention: Option<&AttentionSet>, rng: &mut RngStream) -> Result<AgentOutput> {
        let h = &self.store.hyper;
        if state.d_in != h.d_in || state.global.len() != h.global_dim {
            return Err(Error::Config(format!(
                "agent expects {} unit features and {} global features, state has {} and {}",
                h.d_in,
                h.global_dim,
                state.d_in,
                state.global.len()
            )));
        }
        let x = embed_units(state, &self.store)?;
        let scores = masked_scores(&attention_scores(&x), state, None);
        let full;
        let set = match attention {
            Some(s) => s,
            None => {
                full = AttentionSet { members: (0..state.n).collect(), radius: f64::INFINITY, target: MAIN_HERO, n: state.n };
                &full
            }
        };
        let w = sample_masked_z(&scores, set, self.mode, h, rng)?;
        let c = fuse(&x, w.z.values())?;
        let dist = predict(&c, &state.global, &x, &self.store)?;
        Ok(AgentOutput { label: dist.argmax_label(), intention: dist.intention, weights: Some(w) })
    }
}

/// Hand-written reference agents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScriptedAgent {
    /// Walks straight at the command target; idles without a command.
    StraightLine { cells: usize },
    /// Always idles.
    Idle { cells: usize },
}

impl Agent for ScriptedAgent {
    fn forward(&self, _state: &UnitFeatureSet, attention: Option<&AttentionSet>, _rng: &mut RngStream) -> Result<AgentOutput> {
        let (label, cells) = match *self {
            ScriptedAgent::Idle { cells } => (ActionLabel::idle(0), cells),
            ScriptedAgent::StraightLine { cells } => match attention {
                Some(s) => (ActionLabel::attack(s.target, 0), cells),
                None => (ActionLabel::idle(0), cells),
            },
        };
        Ok(AgentOutput { label, intention: vec![0.0; cells], weights: None })
    }
}
