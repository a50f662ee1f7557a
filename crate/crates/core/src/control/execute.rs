use serde::{Deserialize, Serialize};

use super::agent::Agent;
use super::attention::{build_attention_set, should_execute};
use super::command::Command;
use crate::arena::ArenaState;
use crate::model::{ActionLabel, MAIN_HERO};
use crate::numerics::RngStream;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlConfig {
    /// Attention radius around the hero and the target, arena units.
    pub radius: f64,
    pub max_frames: usize,
    /// Distance at which a command counts as reached.
    pub d_success: f64,
    /// Lingering window in frames.
    pub window: usize,
    /// Minimum net progress over the window.
    pub p_min: f64,
    pub k_intent: usize,
    /// Apply the execution gate at issue and after every frame.
    pub gate: bool,
}

impl Default for ControlConfig {
    fn default() -> Self {
        ControlConfig { radius: 5.0, max_frames: 60, d_success: 1.0, window: 20, p_min: 1.0, k_intent: 3, gate: true }
    }
}

impl ControlConfig {
    pub fn validate(&self, cells: usize) -> Result<()> {
        if !(self.radius > 0.0) || !(self.d_success >= 0.0) || !(self.p_min >= 0.0) {
            return Err(Error::Config("control.radius must be positive; d_success and p_min non-negative".into()));
        }
        if self.max_frames == 0 || self.window == 0 {
            return Err(Error::Config("control.max_frames and control.window must be positive".into()));
        }
        if self.k_intent == 0 || self.k_intent > cells {
            return Err(Error::Config(format!("control.k_intent must lie in [1, {cells}]")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Abnormal,
    NormalEnd,
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceFrame {
    pub position: [f64; 2],
    pub action: ActionLabel,
    /// Hero-to-target distance after the action.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandTrace {
    pub command: Command,
    pub gated: bool,
    pub start_distance: f64,
    /// Stopped early by the gate or because the hero or target died.
    pub aborted: bool,
    pub frames: Vec<TraceFrame>,
    pub outcome: Outcome,
}

/// Success if the last distance is within `d_success`; abnormal if the
/// budget ran out with less than `p_min` net progress over the last
/// `window` frames; otherwise a normal end.
pub fn classify_outcome(trace: &CommandTrace, cfg: &ControlConfig) -> Outcome {
    if !trace.gated {
        return Outcome::Rejected;
    }
    let Some(last) = trace.frames.last() else { return Outcome::NormalEnd };
    if last.distance <= cfg.d_success {
        return Outcome::Success;
    }
    if trace.aborted || trace.frames.len() < trace.command.max_frames {
        return Outcome::NormalEnd;
    }
    let len = trace.frames.len();
    let earlier = if len > cfg.window { trace.frames[len - 1 - cfg.window].distance } else { trace.start_distance };
    if earlier - last.distance < cfg.p_min {
        Outcome::Abnormal
    } else {
        Outcome::NormalEnd
    }
}

fn gate_open(agent: &dyn Agent, arena: &ArenaState, command: &Command, cfg: &ControlConfig, rng: &mut RngStream) -> Result<bool> {
    let fs = arena.features();
    let out = agent.forward(&fs, None, rng)?;
    Ok(should_execute(command, &fs, &out.intention, cfg.k_intent))
}

/// Executes one command in `arena`, which is advanced in place.
///
/// Each frame rebuilds the attention set from the current state, lets the
/// agent act under it and steps the arena. The run stops on success, when
/// the budget is spent, when the hero or the target dies, or when the
/// re-checked gate closes.
pub fn run_command(agent: &dyn Agent, arena: &mut ArenaState, command: &Command, cfg: &ControlConfig, rng: &mut RngStream) -> Result<CommandTrace> {
    command.validate(arena)?;
    let t = command.target_unit;
    let mut trace = CommandTrace {
        command: command.clone(),
        gated: true,
        start_distance: arena.dist(MAIN_HERO, t),
        aborted: false,
        frames: Vec::new(),
        outcome: Outcome::NormalEnd,
    };
    if cfg.gate && !gate_open(agent, arena, command, cfg, rng)? {
        trace.gated = false;
        trace.outcome = classify_outcome(&trace, cfg);
        return Ok(trace);
    }
    for f in 0..command.max_frames {
        if f > 0 && cfg.gate && !gate_open(agent, arena, command, cfg, rng)? {
            trace.aborted = true;
            break;
        }
        let fs = arena.features();
        let set = build_attention_set(&fs, t, cfg.radius)?;
        let out = agent.forward(&fs, Some(&set), rng)?;
        arena.step(&out.label)?;
        let distance = arena.dist(MAIN_HERO, t);
        trace.frames.push(TraceFrame { position: arena.hero().pos, action: out.label, distance });
        if distance <= cfg.d_success {
            break;
        }
        if !arena.hero().alive || !arena.units[t].alive {
            trace.aborted = true;
            break;
        }
    }
    trace.outcome = classify_outcome(&trace, cfg);
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::{new_arena, ArenaConfig, Team};
    use crate::control::{CommandKind, ScriptedAgent};

    fn frames(ds: &[f64]) -> Vec<TraceFrame> {
        ds.iter().map(|&d| TraceFrame { position: [0.0, 0.0], action: ActionLabel::idle(0), distance: d }).collect()
    }

    fn trace(start: f64, ds: &[f64], max_frames: usize) -> CommandTrace {
        CommandTrace {
            command: Command { kind: CommandKind::Attack, target_unit: 2, issue_frame: 0, max_frames },
            gated: true,
            start_distance: start,
            aborted: false,
            frames: frames(ds),
            outcome: Outcome::NormalEnd,
        }
    }

    #[test]
    fn classification_examples() {
        let cfg = ControlConfig { d_success: 0.5, ..ControlConfig::default() };
        assert_eq!(classify_outcome(&trace(3.0, &[2.0, 0.1], 60), &cfg), Outcome::Success);
        let flat = vec![7.0; 40];
        assert_eq!(classify_outcome(&trace(7.0, &flat, 40), &cfg), Outcome::Abnormal);
        let approach: Vec<f64> = (0..40).map(|k| 50.0 - 0.15 * k as f64).collect();
        assert_eq!(classify_outcome(&trace(50.0, &approach, 40), &cfg), Outcome::NormalEnd);
        let mut stopped = trace(7.0, &flat[..10], 40);
        stopped.aborted = true;
        assert_eq!(classify_outcome(&stopped, &cfg), Outcome::NormalEnd);
        let mut rejected = trace(7.0, &[], 40);
        rejected.gated = false;
        assert_eq!(classify_outcome(&rejected, &cfg), Outcome::Rejected);
    }

    fn quiet_arena() -> ArenaState {
        let c = ArenaConfig { npc_heroes_move: false, ..ArenaConfig::default() };
        let mut a = new_arena(&c, 3).unwrap();
        for i in 2 * c.heroes_per_side..a.n() {
            if a.units[i].kind != crate::arena::UnitKind::Base {
                a.units[i].alive = false;
            }
        }
        a.units[0].health = 1.0;
        a.units[0].pos = [10.0, 10.0];
        a.units[1].pos = [15.0, 10.0];
        a
    }

    #[test]
    fn straight_line_agent_reaches_target() {
        let mut a = quiet_arena();
        let cfg = ControlConfig { gate: false, ..ControlConfig::default() };
        let cmd = Command { kind: CommandKind::Assemble, target_unit: 1, issue_frame: 0, max_frames: 60 };
        let tr = run_command(&ScriptedAgent::StraightLine { cells: 36 }, &mut a, &cmd, &cfg, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(tr.outcome, Outcome::Success);
        assert!(tr.frames.len() <= 5);
    }

    #[test]
    fn idle_agent_lingers() {
        let mut a = quiet_arena();
        let cfg = ControlConfig { gate: false, ..ControlConfig::default() };
        let base = a.base_of(Team::Friend);
        let cmd = Command { kind: CommandKind::Retreat, target_unit: base, issue_frame: 0, max_frames: 60 };
        let tr = run_command(&ScriptedAgent::Idle { cells: 36 }, &mut a, &cmd, &cfg, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(tr.frames.len(), 60);
        assert_eq!(tr.outcome, Outcome::Abnormal);
    }

    #[test]
    fn closed_gate_rejects_without_frames() {
        let mut a = quiet_arena();
        let before = a.clone();
        // uniform logits: only cells 0..3 pass with k = 3, the friendly hero's cell is not among them
        let cmd = Command { kind: CommandKind::Assemble, target_unit: 1, issue_frame: 0, max_frames: 60 };
        let tr = run_command(&ScriptedAgent::StraightLine { cells: 36 }, &mut a, &cmd, &ControlConfig::default(), &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(tr.outcome, Outcome::Rejected);
        assert!(tr.frames.is_empty());
        assert_eq!(a, before);
    }
}
