use serde::{Deserialize, Serialize};

use super::expert::{attackable, expert_action};
use super::state::{new_arena_from, ArenaConfig, ArenaState, Team, UnitKind};
use crate::control::{run_command, Agent, Command, CommandKind, CommandTrace, ControlConfig};
use crate::model::MAIN_HERO;
use crate::numerics::RngStream;
use crate::par::{try_map_range, Exec};
use crate::{Error, Result};

/// Scripted command issuing: at the start of every `window` frames one
/// draw decides between attack, retreat, assemble and nothing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandRules {
    pub window: usize,
    pub p_attack: f64,
    pub p_retreat: f64,
    pub p_assemble: f64,
    pub max_frames: usize,
}

impl Default for CommandRules {
    fn default() -> Self {
        CommandRules { window: 80, p_attack: 1.0 / 3.0, p_retreat: 1.0 / 3.0, p_assemble: 1.0 / 3.0, max_frames: 60 }
    }
}

impl CommandRules {
    pub fn validate(&self) -> Result<()> {
        let ps = [self.p_attack, self.p_retreat, self.p_assemble];
        if ps.iter().any(|p| !(0.0..=1.0).contains(p)) || ps.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::Config("command probabilities must be in [0, 1] and sum to at most 1".into()));
        }
        if self.max_frames == 0 || self.window < self.max_frames {
            return Err(Error::Config("command window must be at least max_frames (and max_frames positive)".into()));
        }
        Ok(())
    }
}

/// Command schedule over a recorded sequence of arena frames. Targets are
/// drawn among units alive in the frame at the window start: attack picks
/// a living enemy hero, soldier or tower, assemble a living friendly hero,
/// retreat the own base.
pub fn generate_commands(frames: &[ArenaState], rules: &CommandRules, rng: &mut RngStream) -> Result<Vec<Command>> {
    rules.validate()?;
    let mut out = Vec::new();
    for state in frames.iter().filter(|s| s.frame % rules.window == 0) {
        let u = rng.uniform();
        let pick = rng.uniform();
        let kind = if u < rules.p_attack {
            CommandKind::Attack
        } else if u < rules.p_attack + rules.p_retreat {
            CommandKind::Retreat
        } else if u < rules.p_attack + rules.p_retreat + rules.p_assemble {
            CommandKind::Assemble
        } else {
            continue;
        };
        let candidates: Vec<usize> = match kind {
            CommandKind::Attack => (0..state.n())
                .filter(|&i| state.units[i].alive && state.units[i].team == Team::Enemy && attackable(state.units[i].kind))
                .collect(),
            CommandKind::Assemble => (0..state.n())
                .filter(|&i| i != MAIN_HERO && state.units[i].alive && state.units[i].team == Team::Friend && state.units[i].kind == UnitKind::Hero)
                .collect(),
            CommandKind::Retreat => vec![state.base_of(Team::Friend)],
        };
        if candidates.is_empty() {
            continue;
        }
        let k = ((pick * candidates.len() as f64) as usize).min(candidates.len() - 1);
        out.push(Command { kind, target_unit: candidates[k], issue_frame: state.frame, max_frames: rules.max_frames });
    }
    Ok(out)
}

/// Free-play summary of one rollout.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub frames: usize,
    pub free_frames: usize,
    pub damage_dealt: f64,
    pub distance_travelled: f64,
    /// Commands whose target was no longer valid when they came due.
    pub skipped_commands: usize,
    pub hero_died: bool,
}

/// Plays the arena up to frame `t_end`. Commands start at their issue
/// frame and are driven by [`run_command`]; all other frames are free play
/// from the agent's unmasked forward pass.
pub fn rollout(
    agent: &dyn Agent,
    arena: &mut ArenaState,
    commands: &[Command],
    t_end: usize,
    control: &ControlConfig,
    rng: &mut RngStream,
) -> Result<(Vec<CommandTrace>, EpisodeStats)> {
    let mut pending: Vec<&Command> = commands.iter().collect();
    pending.sort_by_key(|c| c.issue_frame);
    let mut pending = pending.into_iter().peekable();
    let mut traces = Vec::new();
    let mut stats = EpisodeStats::default();
    let start = arena.frame;
    while arena.frame < t_end && arena.hero().alive {
        while pending.peek().is_some_and(|c| c.issue_frame < arena.frame) {
            pending.next();
            stats.skipped_commands += 1;
        }
        if let Some(cmd) = pending.next_if(|c| c.issue_frame == arena.frame) {
            if cmd.validate(arena).is_ok() {
                traces.push(run_command(agent, arena, cmd, control, rng)?);
                continue;
            }
            stats.skipped_commands += 1;
        }
        let out = agent.forward(&arena.features(), None, rng)?;
        let info = arena.step(&out.label)?;
        stats.free_frames += 1;
        stats.damage_dealt += info.damage_dealt;
        stats.distance_travelled += info.distance_moved;
    }
    stats.skipped_commands += pending.count();
    stats.frames = arena.frame - start;
    stats.hero_died = !arena.hero().alive;
    Ok((traces, stats))
}

/// Expert free play from `arena`, returning every visited state.
pub fn expert_frames(arena: &ArenaState, t_end: usize) -> Result<Vec<ArenaState>> {
    let mut a = arena.clone();
    let mut out = Vec::new();
    while a.frame < t_end && a.hero().alive {
        out.push(a.clone());
        let (label, _) = expert_action(&a);
        a.step(&label)?;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult {
    pub commands: Vec<Command>,
    pub traces: Vec<CommandTrace>,
    pub stats: EpisodeStats,
}

/// Runs `n_episodes` independent command episodes. Episode `e` starts
/// from the layout of stream `("sim.episode", e)`, takes its command
/// schedule from the expert's free play on that layout and gives the agent
/// stream `("sim.agent", e)`. Any agent run with the same arguments sees
/// the same layouts and schedules.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    agent: &dyn Agent,
    arena: &ArenaConfig,
    control: &ControlConfig,
    rules: &CommandRules,
    n_episodes: usize,
    t_end: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<EpisodeResult>> {
    rules.validate()?;
    control.validate(arena.grid * arena.grid)?;
    try_map_range(exec, n_episodes, |e| {
        let e = e as u64;
        let start = new_arena_from(arena, &mut RngStream::named(seed, "sim.episode", e))?;
        let reference = expert_frames(&start, t_end)?;
        let commands = generate_commands(&reference, rules, &mut RngStream::named(seed, "sim.commands", e))?;
        let mut a = start;
        let (traces, stats) = rollout(agent, &mut a, &commands, t_end, control, &mut RngStream::named(seed, "sim.agent", e))?;
        Ok(EpisodeResult { commands, traces, stats })
    })
}
