//! The view function: egocentric field of view with occlusion, and the three
//! text serializers models consume.
//!
//! Egocentric coordinates are `(ahead, lateral)`: `ahead` counts steps in the
//! facing direction starting at 0 for the agent's own row, `lateral` is
//! negative to the left. Labels read `ahead 3, L2` / `ahead 0, 0` / `R4`.

mod grid;
mod memory;
mod symbolic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grid::{serialize_grid, world_map};
pub use memory::{event_sentence, serialize_memory};
pub use symbolic::serialize_symbolic;

use crate::world::{
    Cell, Color, DoorState, ObjectKind, Pos, Pose, StepEvent, TileOverlay, World, WorldObject,
};

/// Field-of-view shape. `width` must be odd; the agent sits on the middle
/// column of the nearest row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewConfig {
    pub depth: usize,
    pub width: usize,
    pub see_through_walls: bool,
}

impl Default for ViewConfig {
    fn default() -> Self {
        Self {
            depth: 7,
            width: 7,
            see_through_walls: false,
        }
    }
}

impl ViewConfig {
    pub fn square(size: usize) -> Self {
        Self {
            depth: size,
            width: size,
            see_through_walls: false,
        }
    }

    pub fn half(&self) -> i64 {
        (self.width / 2) as i64
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ViewError {
    #[error("memory serialization needs at least one observation")]
    EmptyHistory,
}

/// Which serializer renders observations for a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Serializer {
    Symbolic,
    Grid,
    Memory,
}

impl Serializer {
    pub const ALL: [Serializer; 3] = [Self::Symbolic, Self::Grid, Self::Memory];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Symbolic => "symbolic",
            Self::Grid => "grid",
            Self::Memory => "memory",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.as_str() == s)
    }

    /// Render the last observation of `history` (or the whole history for
    /// [`Serializer::Memory`]).
    pub fn render(self, history: &[Observation]) -> Result<String, ViewError> {
        let last = history.last().ok_or(ViewError::EmptyHistory)?;
        Ok(match self {
            Self::Symbolic => serialize_symbolic(last),
            Self::Grid => serialize_grid(last),
            Self::Memory => serialize_memory(history)?,
        })
    }
}

impl std::fmt::Display for Serializer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A cell the agent can currently see.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeenCell {
    pub pos: Pos,
    pub cell: Cell,
}

/// Text from a notice board (always visible) or an in-view signpost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Testimony {
    pub kind: ObjectKind,
    pub color: Color,
    pub pos: Pos,
    /// Egocentric position when the source is inside the field of view.
    pub ego: Option<(i64, i64)>,
    pub text: String,
    pub accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub level_id: String,
    pub segment: usize,
    pub step: u64,
    pub pose: Pose,
    pub config: ViewConfig,
    /// `depth * width` entries, nearest row first, left to right; `None`
    /// marks an occluded or out-of-range cell.
    pub cells: Vec<Option<SeenCell>>,
    pub carrying: Option<WorldObject>,
    pub testimony: Vec<Testimony>,
    pub last_event: Option<StepEvent>,
}

impl Observation {
    pub fn with_segment(mut self, segment: usize) -> Self {
        self.segment = segment;
        self
    }

    pub fn get(&self, ahead: i64, lateral: i64) -> Option<&SeenCell> {
        let i = lateral + self.config.half();
        if ahead < 0 || ahead >= self.config.depth as i64 || i < 0 || i >= self.config.width as i64
        {
            return None;
        }
        self.cells[ahead as usize * self.config.width + i as usize].as_ref()
    }

    /// Visible cells in row-major egocentric order.
    pub fn visible(&self) -> impl Iterator<Item = (i64, i64, &SeenCell)> + '_ {
        let w = self.config.width;
        let half = self.config.half();
        self.cells.iter().enumerate().filter_map(move |(i, c)| {
            c.as_ref()
                .map(|c| ((i / w) as i64, (i % w) as i64 - half, c))
        })
    }

    /// Objects in view, excluding whatever shares the agent's own cell.
    pub fn visible_objects(&self) -> impl Iterator<Item = (i64, i64, Pos, &WorldObject)> + '_ {
        self.visible()
            .filter(|(a, l, _)| (*a, *l) != (0, 0))
            .filter_map(|(a, l, c)| c.cell.object.as_ref().map(|o| (a, l, c.pos, o)))
    }

    pub fn sees(&self, pos: Pos) -> bool {
        let (a, l) = self.pose.abs_to_ego(pos);
        self.get(a, l).is_some()
    }

    pub fn seen_positions(&self) -> impl Iterator<Item = Pos> + '_ {
        self.visible().map(|(_, _, c)| c.pos)
    }
}

fn opaque(cell: Option<&Cell>, see_through_walls: bool) -> bool {
    let Some(cell) = cell else {
        return !see_through_walls;
    };
    if cell.is_dark() {
        return true;
    }
    if see_through_walls {
        return false;
    }
    cell.is_wall()
        || cell.object.as_ref().is_some_and(|o| {
            o.kind == ObjectKind::Door
                && matches!(o.door_state, Some(DoorState::Closed | DoorState::Locked))
        })
}

/// Extract the egocentric field of view. Visibility spreads from the agent
/// row by row, sideways and diagonally forward, and stops at opaque cells
/// (which are themselves visible). Dark cells are opaque and never shown.
pub fn observe(world: &World, cfg: ViewConfig) -> Observation {
    let pose = world.agent();
    let (depth, width, half) = (cfg.depth, cfg.width, cfg.half());
    let abs = |a: usize, i: usize| {
        pose.ego_to_abs(a as i64, i as i64 - half)
            .filter(|p| world.in_bounds(*p))
    };
    let blocks = |a: usize, i: usize| {
        if (a, i as i64) == (0, half) {
            return false;
        }
        opaque(abs(a, i).and_then(|p| world.cell(p)), cfg.see_through_walls)
    };

    let mut mask = vec![false; depth * width];
    if depth > 0 && width > 0 {
        mask[half as usize] = true;
    }
    for a in 0..depth {
        for i in 0..width.saturating_sub(1) {
            if mask[a * width + i] && !blocks(a, i) {
                mask[a * width + i + 1] = true;
            }
        }
        for i in (1..width).rev() {
            if mask[a * width + i] && !blocks(a, i) {
                mask[a * width + i - 1] = true;
            }
        }
        if a + 1 == depth {
            continue;
        }
        for i in 0..width {
            if !mask[a * width + i] || blocks(a, i) {
                continue;
            }
            let next = (a + 1) * width;
            mask[next + i] = true;
            if i > 0 {
                mask[next + i - 1] = true;
            }
            if i + 1 < width {
                mask[next + i + 1] = true;
            }
        }
    }

    let mut cells = Vec::with_capacity(depth * width);
    for a in 0..depth {
        for i in 0..width {
            let own = (a, i as i64) == (0, half);
            let seen = abs(a, i)
                .filter(|_| mask[a * width + i])
                .and_then(|p| world.cell(p).map(|c| (p, c)))
                .filter(|(_, c)| own || !c.is_dark())
                .map(|(pos, cell)| SeenCell {
                    pos,
                    cell: cell.clone(),
                });
            cells.push(seen);
        }
    }

    let mut obs = Observation {
        level_id: world.level_id().to_string(),
        segment: 0,
        step: world.step_count(),
        pose,
        config: cfg,
        cells,
        carrying: world.inventory().cloned(),
        testimony: Vec::new(),
        last_event: world.last_event().cloned(),
    };
    let mut testimony: Vec<Testimony> = world
        .notice_boards()
        .map(|(pos, o)| testimony_of(&obs, pos, o))
        .collect();
    testimony.extend(
        obs.visible_objects()
            .filter(|(_, _, _, o)| o.kind == ObjectKind::Signpost)
            .map(|(_, _, pos, o)| testimony_of(&obs, pos, o)),
    );
    obs.testimony = testimony;
    obs
}

fn testimony_of(obs: &Observation, pos: Pos, o: &WorldObject) -> Testimony {
    Testimony {
        kind: o.kind,
        color: o.color,
        pos,
        ego: obs.sees(pos).then(|| obs.pose.abs_to_ego(pos)),
        text: o.text.clone().unwrap_or_default(),
        accuracy: o.stated_accuracy,
    }
}

/// `L3`, `0`, `R2`.
pub fn lateral_label(lateral: i64) -> String {
    match lateral {
        0 => "0".into(),
        l if l < 0 => format!("L{}", -l),
        l => format!("R{l}"),
    }
}

/// `(ahead 1, R4)`
pub fn ego_label(ahead: i64, lateral: i64) -> String {
    format!("(ahead {ahead}, {})", lateral_label(lateral))
}

/// Shared first line of the symbolic and grid serializations.
pub(crate) fn header(obs: &Observation) -> String {
    format!(
        "Step {} | Level {} | Facing {} | View {} ahead x {} wide",
        obs.step, obs.level_id, obs.pose.facing, obs.config.depth, obs.config.width
    )
}

/// Object name with its state token, e.g. `red door (locked)`,
/// `blue ball (wet, 2 turns)`.
pub fn describe_with_state(o: &WorldObject) -> String {
    let mut s = o.describe();
    if let Some(state) = o.door_state {
        s.push_str(&format!(" ({})", state.as_str()));
    } else if o.is_wet() {
        s.push_str(&format!(
            " ({}, {} turns)",
            o.condition.as_str(),
            o.wet_turns_remaining
        ));
    }
    s
}

pub fn describe_overlay(o: &TileOverlay) -> String {
    match o {
        TileOverlay::River { direction, speed } => {
            format!("river flowing {direction} (speed {speed})")
        }
        TileOverlay::Fire { active: true } => "fire".into(),
        TileOverlay::Fire { active: false } => "extinguished fire".into(),
        TileOverlay::Flood {
            active: true,
            spent: false,
            ..
        } => "flood water".into(),
        TileOverlay::Flood {
            active: true,
            spent: true,
            ..
        } => "shallow water".into(),
        TileOverlay::Flood { active: false, .. } => "dry flood channel".into(),
        TileOverlay::PressurePlate { effect, fired, .. } => {
            if *fired {
                format!("pressure plate ({}, fired)", effect.as_str())
            } else {
                format!("pressure plate ({})", effect.as_str())
            }
        }
        TileOverlay::DarkZone => "darkness".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Direction;

    fn room() -> World {
        World::empty(9, 9, Pose::new(Pos::new(4, 7), Direction::North))
    }

    #[test]
    fn agent_facing_wall_sees_nothing_beyond() {
        let mut w = room();
        for c in 1..8 {
            w.set_wall(Pos::new(c, 6)).unwrap();
        }
        w.place_object(
            Pos::new(4, 3),
            WorldObject::new(ObjectKind::Ball, Color::Blue),
        )
        .unwrap();
        let obs = observe(&w, ViewConfig::default());
        for a in 2..7 {
            for l in -3..=3 {
                assert!(obs.get(a, l).is_none(), "({a},{l}) should be hidden");
            }
        }
        assert!(obs.get(1, 0).unwrap().cell.is_wall());
        assert_eq!(obs.visible_objects().count(), 0);
    }

    #[test]
    fn see_through_walls_reveals_the_ball() {
        let mut w = room();
        for c in 1..8 {
            w.set_wall(Pos::new(c, 6)).unwrap();
        }
        w.place_object(
            Pos::new(4, 3),
            WorldObject::new(ObjectKind::Ball, Color::Blue),
        )
        .unwrap();
        let cfg = ViewConfig {
            see_through_walls: true,
            ..ViewConfig::default()
        };
        let obs = observe(&w, cfg);
        assert_eq!(obs.visible_objects().count(), 1);
    }

    #[test]
    fn dark_cells_are_unknown_and_occlude() {
        let mut w = room();
        w.add_overlay(Pos::new(4, 6), TileOverlay::DarkZone)
            .unwrap();
        let obs = observe(&w, ViewConfig::default());
        assert!(obs.get(1, 0).is_none());
        assert!(obs.get(1, 1).is_some());
    }

    #[test]
    fn closed_door_occludes_open_door_does_not() {
        let mut w = room();
        for c in 1..8 {
            w.set_wall(Pos::new(c, 5)).unwrap();
        }
        w.set_floor(Pos::new(4, 5)).unwrap();
        w.place_object(
            Pos::new(4, 5),
            WorldObject::door(Color::Red, DoorState::Closed),
        )
        .unwrap();
        let closed = observe(&w, ViewConfig::default());
        assert!(closed.get(3, 0).is_none());
        let mut open = w.clone();
        open.cell_mut(Pos::new(4, 5)).unwrap().object =
            Some(WorldObject::door(Color::Red, DoorState::Open));
        assert!(observe(&open, ViewConfig::default()).get(3, 0).is_some());
    }

    #[test]
    fn notice_board_is_testimony_even_out_of_view() {
        let mut w = room();
        w.place_object(
            Pos::new(1, 7),
            WorldObject::testimony(ObjectKind::NoticeBoard, Color::Grey, "the key is red"),
        )
        .unwrap();
        w.set_agent(Pose::new(Pos::new(4, 7), Direction::East));
        let obs = observe(&w, ViewConfig::default());
        assert_eq!(obs.testimony.len(), 1);
        assert_eq!(obs.testimony[0].ego, None);
    }

    #[test]
    fn labels() {
        assert_eq!(ego_label(1, 4), "(ahead 1, R4)");
        assert_eq!(ego_label(0, 0), "(ahead 0, 0)");
        assert_eq!(lateral_label(-6), "L6");
    }
}
