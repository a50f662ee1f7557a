use super::expert::{attackable, expert_for};
use super::state::{ArenaState, Team, UnitKind};
use crate::model::{ActionLabel, Level1, MAIN_HERO};
use crate::{Error, Result};

/// What the controlled hero achieved in one frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepInfo {
    pub damage_dealt: f64,
    pub distance_moved: f64,
}

impl ArenaState {
    /// Applies a hero action: moves go one step in the given direction;
    /// attacks damage a living enemy in range and otherwise walk toward
    /// the target, stopping just inside attack range.
    fn apply_hero_action(&mut self, h: usize, action: &ActionLabel) -> f64 {
        let c = self.config.clone();
        match action.level1 {
            Level1::Idle => 0.0,
            Level1::Move => {
                self.step_direction(h, action.move_dir.unwrap_or(0), c.speed);
                0.0
            }
            Level1::Attack => {
                let t = match action.target {
                    Some(t) if t < self.n() && t != h && self.units[t].alive => t,
                    _ => return 0.0,
                };
                let d = self.dist(h, t);
                let hostile = Some(self.units[t].team) == self.units[h].team.opponent() && attackable(self.units[t].kind);
                if hostile && d <= c.hero_range {
                    self.units[t].health -= c.hero_damage;
                    c.hero_damage
                } else {
                    let step = (d - 0.9 * c.hero_range).clamp(0.0, c.speed);
                    let to = self.units[t].pos;
                    self.step_toward(h, to, step);
                    0.0
                }
            }
        }
    }

    fn nearest(&self, i: usize, range: f64, pred: impl Fn(&super::state::Unit) -> bool) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (j, u) in self.units.iter().enumerate() {
            if j == i || !u.alive || !pred(u) {
                continue;
            }
            let d = self.dist(i, j);
            if d <= range && best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, j));
            }
        }
        best.map(|(_, j)| j)
    }

    /// Advances one frame with `action` for the controlled hero. Other
    /// heroes follow the expert rules from their own side (when enabled);
    /// soldiers march and fight, towers and monsters hit the nearest
    /// eligible unit, bases heal nearby friendly heroes.
    pub fn step(&mut self, action: &ActionLabel) -> Result<StepInfo> {
        if !self.hero().alive {
            return Err(Error::InvalidInput("controlled hero is dead".into()));
        }
        action.validate(self.n(), self.config.grid * self.config.grid)?;
        let c = self.config.clone();
        let before = self.hero().pos;

        let npc: Vec<(usize, ActionLabel)> = if c.npc_heroes_move {
            (0..self.n())
                .filter(|&i| i != MAIN_HERO && self.units[i].alive && self.units[i].kind == UnitKind::Hero)
                .map(|i| (i, expert_for(self, i).0))
                .collect()
        } else {
            Vec::new()
        };

        let damage_dealt = self.apply_hero_action(MAIN_HERO, action);
        for (i, a) in &npc {
            self.apply_hero_action(*i, a);
        }

        for i in 0..self.n() {
            let u = &self.units[i];
            if !u.alive || u.kind != UnitKind::Soldier {
                continue;
            }
            let Some(enemy) = u.team.opponent() else { continue };
            if let Some(t) = self.nearest(i, c.soldier_range, |v| v.team == enemy && attackable(v.kind)) {
                self.units[t].health -= c.soldier_damage;
            } else {
                let goal = self.units[self.base_of(enemy)].pos;
                let step = (self.units[i].pos_dist(goal) - c.soldier_range).clamp(0.0, c.soldier_speed);
                self.step_toward(i, goal, step);
            }
        }
        for i in 0..self.n() {
            let u = &self.units[i];
            if !u.alive {
                continue;
            }
            let target = match u.kind {
                UnitKind::Organ => {
                    let enemy = u.team.opponent();
                    self.nearest(i, c.tower_range, |v| Some(v.team) == enemy && matches!(v.kind, UnitKind::Hero | UnitKind::Soldier))
                        .map(|t| (t, c.tower_damage))
                }
                UnitKind::Monster => self.nearest(i, c.monster_range, |v| v.kind == UnitKind::Hero).map(|t| (t, c.monster_damage)),
                _ => None,
            };
            if let Some((t, dmg)) = target {
                self.units[t].health -= dmg;
            }
        }
        for team in [Team::Friend, Team::Enemy] {
            let b = self.base_of(team);
            for i in 0..self.n() {
                let u = &self.units[i];
                if u.alive && u.team == team && u.kind == UnitKind::Hero && self.dist(i, b) <= c.base_heal_range {
                    self.units[i].health = (self.units[i].health + c.base_heal).min(1.0);
                }
            }
        }

        self.frame += 1;
        let wave = c.wave_period > 0 && self.frame % c.wave_period == 0;
        for i in 0..self.n() {
            if self.units[i].alive && self.units[i].health <= 0.0 {
                self.units[i].alive = false;
                self.units[i].health = 0.0;
            }
            let u = &self.units[i];
            let respawn = !u.alive
                && ((u.kind == UnitKind::Hero && i != MAIN_HERO) || (u.kind == UnitKind::Soldier && wave));
            if respawn {
                let home = self.units[self.base_of(u.team)].pos;
                let u = &mut self.units[i];
                u.alive = true;
                u.health = 1.0;
                u.pos = home;
            }
        }
        let after = self.hero().pos;
        Ok(StepInfo { damage_dealt, distance_moved: super::state::distance(before, after) })
    }
}

impl super::state::Unit {
    fn pos_dist(&self, p: [f64; 2]) -> f64 {
        super::state::distance(self.pos, p)
    }
}
