use serde::{Deserialize, Serialize};

use crate::model::{UnitFeatureSet, MAIN_HERO};
use crate::numerics::RngStream;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Hero,
    Soldier,
    Organ,
    Monster,
    Base,
}

impl UnitKind {
    pub const ALL: [UnitKind; 5] = [UnitKind::Hero, UnitKind::Soldier, UnitKind::Organ, UnitKind::Monster, UnitKind::Base];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Team {
    Friend,
    Enemy,
    Neutral,
}

impl Team {
    pub const ALL: [Team; 3] = [Team::Friend, Team::Enemy, Team::Neutral];

    /// Opposing side; neutral has none.
    pub fn opponent(self) -> Option<Team> {
        match self {
            Team::Friend => Some(Team::Enemy),
            Team::Enemy => Some(Team::Friend),
            Team::Neutral => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub kind: UnitKind,
    pub team: Team,
    pub pos: [f64; 2],
    pub health: f64,
    pub alive: bool,
}

/// Layout, combat and feature constants of the arena.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArenaConfig {
    pub side: f64,
    /// Hero move distance per frame.
    pub speed: f64,
    pub heroes_per_side: usize,
    pub soldiers_per_side: usize,
    pub towers_per_side: usize,
    pub monsters: usize,
    pub hero_range: f64,
    pub hero_damage: f64,
    pub tower_range: f64,
    pub tower_damage: f64,
    pub soldier_speed: f64,
    pub soldier_range: f64,
    pub soldier_damage: f64,
    pub monster_range: f64,
    pub monster_damage: f64,
    pub base_heal_range: f64,
    pub base_heal: f64,
    /// Health below which the expert retreats.
    pub retreat_health: f64,
    /// Whether heroes other than the controlled one act.
    pub npc_heroes_move: bool,
    /// Frames between soldier waves (dead soldiers respawn at their base).
    pub wave_period: usize,
    /// Distance scale of the distance-to-hero feature.
    pub feature_distance_scale: f64,
    /// Frame count that maps to a clock feature of 1.
    pub clock_scale: f64,
    /// Side of the coarse intention grid.
    pub grid: usize,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        ArenaConfig {
            side: 20.0,
            speed: 1.0,
            heroes_per_side: 2,
            soldiers_per_side: 6,
            towers_per_side: 2,
            monsters: 3,
            hero_range: 1.0,
            hero_damage: 0.1,
            tower_range: 3.0,
            tower_damage: 0.05,
            soldier_speed: 0.5,
            soldier_range: 1.0,
            soldier_damage: 0.02,
            monster_range: 1.0,
            monster_damage: 0.03,
            base_heal_range: 2.0,
            base_heal: 0.05,
            retreat_health: 0.3,
            npc_heroes_move: true,
            wave_period: 40,
            feature_distance_scale: 5.0,
            clock_scale: 1000.0,
            grid: 6,
        }
    }
}

/// Per-unit feature width: relative position (2), health, team one-hot (3),
/// kind one-hot (5), scaled distance to the hero.
pub const UNIT_FEATURES: usize = 12;
/// Global features: clock, tower score, hero position (2), hero health.
pub const GLOBAL_FEATURES: usize = 5;

impl ArenaConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("side", self.side),
            ("speed", self.speed),
            ("hero_range", self.hero_range),
            ("tower_range", self.tower_range),
            ("soldier_range", self.soldier_range),
            ("monster_range", self.monster_range),
            ("base_heal_range", self.base_heal_range),
            ("feature_distance_scale", self.feature_distance_scale),
            ("clock_scale", self.clock_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("arena.{name} must be positive, got {v}")));
            }
        }
        let rates = [
            ("hero_damage", self.hero_damage),
            ("tower_damage", self.tower_damage),
            ("soldier_damage", self.soldier_damage),
            ("monster_damage", self.monster_damage),
            ("base_heal", self.base_heal),
            ("soldier_speed", self.soldier_speed),
        ];
        for (name, v) in rates {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("arena.{name} must be non-negative, got {v}")));
            }
        }
        if self.heroes_per_side == 0 {
            return Err(Error::Config("arena.heroes_per_side must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.retreat_health) {
            return Err(Error::Config("arena.retreat_health must lie in [0, 1]".into()));
        }
        if self.grid == 0 {
            return Err(Error::Config("arena.grid must be positive".into()));
        }
        if self.side < 4.0 {
            return Err(Error::Config("arena.side must be at least 4".into()));
        }
        Ok(())
    }

    /// Unit count for this census.
    pub fn unit_count(&self) -> usize {
        2 * (self.heroes_per_side + self.soldiers_per_side + self.towers_per_side + 1) + self.monsters
    }

    pub fn base_position(&self, team: Team) -> [f64; 2] {
        match team {
            Team::Enemy => [self.side - 1.0, self.side - 1.0],
            _ => [1.0, 1.0],
        }
    }

    fn tower_position(&self, team: Team, k: usize) -> [f64; 2] {
        let t = self.towers_per_side;
        let frac = if t == 1 { 0.3 } else { 0.25 + 0.15 * k as f64 / (t - 1) as f64 };
        let v = frac * self.side;
        match team {
            Team::Enemy => [self.side - v, self.side - v],
            _ => [v, v],
        }
    }
}

/// Complete arena state. Unit order is fixed for a configuration:
/// friendly heroes (the controlled hero first), enemy heroes, friendly
/// soldiers, enemy soldiers, friendly towers, enemy towers, friendly base,
/// enemy base, monsters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArenaState {
    pub frame: usize,
    pub units: Vec<Unit>,
    pub config: ArenaConfig,
}

/// Seeded initial layout.
pub fn new_arena(config: &ArenaConfig, seed: u64) -> Result<ArenaState> {
    new_arena_from(config, &mut RngStream::named(seed, "arena.layout", 0))
}

pub(crate) fn new_arena_from(config: &ArenaConfig, rng: &mut RngStream) -> Result<ArenaState> {
    config.validate()?;
    let c = config;
    let side = c.side;
    let mut units = Vec::with_capacity(c.unit_count());
    let anywhere = |rng: &mut RngStream| [rng.range(0.5, side - 0.5), rng.range(0.5, side - 0.5)];
    for team in [Team::Friend, Team::Enemy] {
        for k in 0..c.heroes_per_side {
            let health = if team == Team::Friend && k == 0 { rng.range(0.15, 1.0) } else { rng.range(0.4, 1.0) };
            units.push(Unit { kind: UnitKind::Hero, team, pos: anywhere(rng), health, alive: true });
        }
    }
    for team in [Team::Friend, Team::Enemy] {
        for _ in 0..c.soldiers_per_side {
            units.push(Unit { kind: UnitKind::Soldier, team, pos: anywhere(rng), health: rng.range(0.3, 1.0), alive: true });
        }
    }
    for team in [Team::Friend, Team::Enemy] {
        for k in 0..c.towers_per_side {
            let pos = c.tower_position(team, k);
            units.push(Unit { kind: UnitKind::Organ, team, pos, health: rng.range(0.3, 1.0), alive: true });
        }
    }
    for team in [Team::Friend, Team::Enemy] {
        units.push(Unit { kind: UnitKind::Base, team, pos: c.base_position(team), health: 1.0, alive: true });
    }
    for _ in 0..c.monsters {
        units.push(Unit { kind: UnitKind::Monster, team: Team::Neutral, pos: anywhere(rng), health: 1.0, alive: true });
    }
    Ok(ArenaState { frame: 0, units, config: config.clone() })
}

pub(crate) fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Unit vector of an 8-way move direction (0 = +x, counter-clockwise).
pub fn direction_vector(dir: usize) -> [f64; 2] {
    let a = dir as f64 * std::f64::consts::FRAC_PI_4;
    [a.cos(), a.sin()]
}

/// Quantizes the bearing from `from` to `to` into one of 8 directions.
pub fn quantize_bearing(from: [f64; 2], to: [f64; 2]) -> usize {
    let a = (to[1] - from[1]).atan2(to[0] - from[0]);
    ((a / std::f64::consts::FRAC_PI_4).round() as i64).rem_euclid(8) as usize
}

impl ArenaState {
    pub fn n(&self) -> usize {
        self.units.len()
    }

    pub fn hero(&self) -> &Unit {
        &self.units[MAIN_HERO]
    }

    pub fn dist(&self, a: usize, b: usize) -> f64 {
        distance(self.units[a].pos, self.units[b].pos)
    }

    /// Index of a team's base.
    pub fn base_of(&self, team: Team) -> usize {
        let c = &self.config;
        let first = 2 * (c.heroes_per_side + c.soldiers_per_side + c.towers_per_side);
        match team {
            Team::Enemy => first + 1,
            _ => first,
        }
    }

    /// Coarse intention cell (row-major over a `grid × grid` partition).
    pub fn cell_of(&self, pos: [f64; 2]) -> usize {
        cell_index(pos, self.config.side, self.config.grid)
    }

    pub(crate) fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        let s = self.config.side;
        [p[0].clamp(0.0, s), p[1].clamp(0.0, s)]
    }

    /// Moves unit `i` up to `step` toward `to`, never overshooting.
    pub(crate) fn step_toward(&mut self, i: usize, to: [f64; 2], step: f64) {
        let p = self.units[i].pos;
        let d = distance(p, to);
        if d <= step {
            self.units[i].pos = self.clamp(to);
        } else {
            let k = step / d;
            self.units[i].pos = self.clamp([p[0] + (to[0] - p[0]) * k, p[1] + (to[1] - p[1]) * k]);
        }
    }

    pub(crate) fn step_direction(&mut self, i: usize, dir: usize, step: f64) {
        let v = direction_vector(dir);
        let p = self.units[i].pos;
        self.units[i].pos = self.clamp([p[0] + v[0] * step, p[1] + v[1] * step]);
    }

    /// Tower score from the controlled side: enemy towers down minus own
    /// towers down, over the tower count.
    fn tower_score(&self) -> f64 {
        let mut s = 0.0;
        for u in &self.units {
            if u.kind == UnitKind::Organ && !u.alive {
                s += if u.team == Team::Enemy { 1.0 } else { -1.0 };
            }
        }
        s / self.config.towers_per_side.max(1) as f64
    }

    /// Feature view from the controlled hero.
    pub fn features(&self) -> UnitFeatureSet {
        let c = &self.config;
        let hero = self.hero().pos;
        let n = self.n();
        let mut raw = Vec::with_capacity(n * UNIT_FEATURES);
        for u in &self.units {
            let d = distance(u.pos, hero);
            raw.push((u.pos[0] - hero[0]) / c.side);
            raw.push((u.pos[1] - hero[1]) / c.side);
            raw.push(u.health);
            for t in Team::ALL {
                raw.push((u.team == t) as u8 as f64);
            }
            for k in UnitKind::ALL {
                raw.push((u.kind == k) as u8 as f64);
            }
            raw.push((d / c.feature_distance_scale).min(1.0));
        }
        let global = vec![
            (self.frame as f64 / c.clock_scale).min(1.0),
            self.tower_score(),
            hero[0] / c.side,
            hero[1] / c.side,
            self.hero().health,
        ];
        UnitFeatureSet {
            raw,
            n,
            d_in: UNIT_FEATURES,
            positions: self.units.iter().map(|u| u.pos).collect(),
            health: self.units.iter().map(|u| u.health).collect(),
            alive: self.units.iter().map(|u| u.alive).collect(),
            global,
            side: c.side,
        }
    }

    /// Rebuilds the decision-relevant part of a state from its feature
    /// view: kinds, teams, positions, health and liveness.
    pub fn from_features(fs: &UnitFeatureSet, config: &ArenaConfig) -> Result<ArenaState> {
        if fs.d_in != UNIT_FEATURES || fs.n != config.unit_count() {
            return Err(Error::Data("feature set does not match the arena census".into()));
        }
        let mut units = Vec::with_capacity(fs.n);
        for i in 0..fs.n {
            let row = fs.row(i);
            let team = Team::ALL[(0..3).find(|&k| row[3 + k] == 1.0).ok_or_else(|| Error::Data(format!("unit {i}: no team")))?];
            let kind = UnitKind::ALL[(0..5).find(|&k| row[6 + k] == 1.0).ok_or_else(|| Error::Data(format!("unit {i}: no kind")))?];
            units.push(Unit { kind, team, pos: fs.positions[i], health: fs.health[i], alive: fs.alive[i] });
        }
        let frame = (fs.global.first().copied().unwrap_or(0.0) * config.clock_scale).round() as usize;
        Ok(ArenaState { frame, units, config: config.clone() })
    }
}

pub fn cell_index(pos: [f64; 2], side: f64, grid: usize) -> usize {
    let q = |v: f64| ((v / side * grid as f64).floor() as i64).clamp(0, grid as i64 - 1) as usize;
    q(pos[1]) * grid + q(pos[0])
}
