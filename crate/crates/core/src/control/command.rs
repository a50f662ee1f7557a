use serde::{Deserialize, Serialize};

use crate::arena::{ArenaState, Team};
use crate::model::MAIN_HERO;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Attack,
    Retreat,
    Assemble,
}

impl CommandKind {
    pub const ALL: [CommandKind; 3] = [CommandKind::Attack, CommandKind::Retreat, CommandKind::Assemble];

    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Attack => "attack",
            CommandKind::Retreat => "retreat",
            CommandKind::Assemble => "assemble",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Command {
    pub kind: CommandKind,
    pub target_unit: usize,
    pub issue_frame: usize,
    pub max_frames: usize,
}

impl Command {
    /// Checks the target against the arena at issue time: it must exist,
    /// be alive and fit the kind (attack an enemy, assemble at a friendly
    /// unit, retreat to the own base).
    pub fn validate(&self, arena: &ArenaState) -> Result<()> {
        if self.max_frames == 0 {
            return Err(Error::InvalidInput("command budget must be at least one frame".into()));
        }
        let t = self.target_unit;
        let unit = arena
            .units
            .get(t)
            .ok_or_else(|| Error::InvalidTarget(format!("unit {t} does not exist")))?;
        if !unit.alive {
            return Err(Error::InvalidTarget(format!("unit {t} is dead")));
        }
        let ok = match self.kind {
            CommandKind::Attack => unit.team == Team::Enemy,
            CommandKind::Assemble => unit.team == Team::Friend && t != MAIN_HERO,
            CommandKind::Retreat => t == arena.base_of(Team::Friend),
        };
        if !ok {
            return Err(Error::InvalidTarget(format!("unit {t} is not a valid {} target", self.kind.name())));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::{new_arena, ArenaConfig};

    #[test]
    fn kind_target_compatibility() {
        let a = new_arena(&ArenaConfig::default(), 0).unwrap();
        let cmd = |kind, t| Command { kind, target_unit: t, issue_frame: 0, max_frames: 10 };
        let base = a.base_of(Team::Friend);
        assert!(cmd(CommandKind::Attack, 2).validate(&a).is_ok());
        assert!(cmd(CommandKind::Attack, 1).validate(&a).is_err());
        assert!(cmd(CommandKind::Assemble, 1).validate(&a).is_ok());
        assert!(cmd(CommandKind::Assemble, 0).validate(&a).is_err());
        assert!(cmd(CommandKind::Retreat, base).validate(&a).is_ok());
        assert!(cmd(CommandKind::Retreat, 1).validate(&a).is_err());
        assert!(cmd(CommandKind::Attack, 999).validate(&a).is_err());
        let mut dead = a.clone();
        dead.units[2].alive = false;
        assert!(matches!(cmd(CommandKind::Attack, 2).validate(&dead), Err(Error::InvalidTarget(_))));
        assert!(Command { max_frames: 0, ..cmd(CommandKind::Attack, 2) }.validate(&a).is_err());
    }
}
