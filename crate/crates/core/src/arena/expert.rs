use super::state::{quantize_bearing, ArenaState, Team, UnitKind};
use crate::model::{ActionLabel, MAIN_HERO};

/// Attention budget of the expert: no rule consults more than this many
/// units for the default census.
pub const DEFAULT_M_TRUE: usize = 3;

/// Whether a unit of this kind can be damaged by a hero attack.
pub(crate) fn attackable(kind: UnitKind) -> bool {
    matches!(kind, UnitKind::Hero | UnitKind::Soldier | UnitKind::Organ)
}

/// Scripted expert for the controlled hero. Returns the action and the
/// units the fired rule consulted.
///
/// Rules in priority order:
/// 1. health below the retreat threshold: walk to the own base (idle once
///    within attack range of it);
/// 2. attack the nearest attackable enemy within attack range;
/// 3. walk toward the lowest-health living enemy tower;
/// 4. walk toward the enemy base (idle once there).
///
/// The intention cell is the cell of the unit the action is directed at.
pub fn expert_action(state: &ArenaState) -> (ActionLabel, Vec<usize>) {
    expert_for(state, MAIN_HERO)
}

/// The same rules played from hero `h`'s side.
pub(crate) fn expert_for(state: &ArenaState, h: usize) -> (ActionLabel, Vec<usize>) {
    let c = &state.config;
    let me = &state.units[h];
    let team = me.team;
    let enemy = team.opponent().unwrap_or(Team::Enemy);
    let intent = |i: usize| state.cell_of(state.units[i].pos);
    let walk_to = |i: usize| -> ActionLabel {
        if state.dist(h, i) > c.hero_range {
            ActionLabel::movement(quantize_bearing(me.pos, state.units[i].pos), intent(i))
        } else {
            ActionLabel::idle(intent(i))
        }
    };

    if me.health < c.retreat_health {
        let base = state.base_of(team);
        return (walk_to(base), vec![h, base]);
    }

    let mut best: Option<(f64, usize)> = None;
    for (i, u) in state.units.iter().enumerate() {
        if i == h || !u.alive || u.team != enemy || !attackable(u.kind) {
            continue;
        }
        let d = state.dist(h, i);
        if d <= c.hero_range && best.map_or(true, |(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    if let Some((_, t)) = best {
        return (ActionLabel::attack(t, intent(t)), vec![h, t]);
    }

    let towers: Vec<usize> = (0..state.n())
        .filter(|&i| {
            let u = &state.units[i];
            u.alive && u.team == enemy && u.kind == UnitKind::Organ
        })
        .collect();
    if let Some(&t) = towers.iter().min_by(|&&a, &&b| {
        state.units[a].health.total_cmp(&state.units[b].health).then(a.cmp(&b))
    }) {
        let mut att = vec![h];
        att.extend(&towers);
        let label = ActionLabel::movement(quantize_bearing(me.pos, state.units[t].pos), intent(t));
        return (label, att);
    }

    let base = state.base_of(enemy);
    (walk_to(base), vec![h, base])
}
