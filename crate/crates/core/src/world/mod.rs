//! The reference world: grid state, action history, and the step function
//! that realizes the transition rules.
//!
//! A [`World`] is a plain value. Cloning it is how forward simulation for
//! causal ground truths works, and two worlds built from the same level,
//! seed and action script compare equal field for field.

mod step;
mod types;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use types::*;

use crate::view::ViewConfig;

/// Default number of steps an object stays wet after leaving a river.
pub const DEFAULT_SOAK_DURATION: u32 = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("cell {0} is outside the grid")]
    OutOfBounds(Pos),
    #[error("cell {0} is a wall")]
    Wall(Pos),
    #[error("cell {0} is already occupied")]
    Occupied(Pos),
    #[error("cell {0} already has a {1} overlay")]
    DuplicateOverlay(Pos, &'static str),
    #[error("plate at {plate} links to {door}, which is not a door")]
    DanglingLink { plate: Pos, door: Pos },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct World {
    level_id: String,
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    agent: Pose,
    inventory: Option<WorldObject>,
    step_count: u64,
    seed: u64,
    history: Vec<Action>,
    soak_duration: u32,
    max_steps: u64,
    view: ViewConfig,
    /// State each plate-linked door returns to when no plate holds it open.
    #[serde(with = "pos_map")]
    door_rest: BTreeMap<Pos, DoorState>,
    last_event: Option<StepEvent>,
}

/// JSON object keys must be strings, so position-keyed maps travel as
/// pair lists.
mod pos_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serializer};

    use super::{DoorState, Pos};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<Pos, DoorState>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<Pos, DoorState>, D::Error> {
        Ok(Vec::<(Pos, DoorState)>::deserialize(d)?
            .into_iter()
            .collect())
    }
}

impl World {
    /// An empty room: floor inside, walls on the perimeter.
    pub fn empty(width: usize, height: usize, agent: Pose) -> Self {
        let mut cells = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                let border = row == 0 || col == 0 || row + 1 == height || col + 1 == width;
                cells.push(if border { Cell::wall() } else { Cell::floor() });
            }
        }
        Self {
            level_id: String::new(),
            width,
            height,
            cells,
            agent,
            inventory: None,
            step_count: 0,
            seed: 0,
            history: Vec::new(),
            soak_duration: DEFAULT_SOAK_DURATION,
            max_steps: 0,
            view: ViewConfig::default(),
            door_rest: BTreeMap::new(),
            last_event: None,
        }
    }

    pub fn with_level_id(mut self, id: impl Into<String>) -> Self {
        self.level_id = id.into();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_soak_duration(mut self, soak: u32) -> Self {
        self.soak_duration = soak;
        self
    }

    pub fn with_max_steps(mut self, max_steps: u64) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_view(mut self, view: ViewConfig) -> Self {
        self.view = view;
        self
    }

    pub fn set_wall(&mut self, pos: Pos) -> Result<(), BuildError> {
        let cell = self.cell_mut(pos).ok_or(BuildError::OutOfBounds(pos))?;
        if cell.object.is_some() {
            return Err(BuildError::Occupied(pos));
        }
        cell.terrain = Terrain::Wall;
        cell.overlays.clear();
        Ok(())
    }

    pub fn set_floor(&mut self, pos: Pos) -> Result<(), BuildError> {
        let cell = self.cell_mut(pos).ok_or(BuildError::OutOfBounds(pos))?;
        cell.terrain = Terrain::Floor;
        Ok(())
    }

    pub fn place_object(&mut self, pos: Pos, obj: WorldObject) -> Result<(), BuildError> {
        let agent = self.agent.pos();
        let cell = self.cell_mut(pos).ok_or(BuildError::OutOfBounds(pos))?;
        if cell.is_wall() {
            return Err(BuildError::Wall(pos));
        }
        if cell.object.is_some() || agent == pos {
            return Err(BuildError::Occupied(pos));
        }
        cell.object = Some(obj);
        Ok(())
    }

    pub fn add_overlay(&mut self, pos: Pos, overlay: TileOverlay) -> Result<(), BuildError> {
        let cell = self.cell_mut(pos).ok_or(BuildError::OutOfBounds(pos))?;
        if cell.is_wall() {
            return Err(BuildError::Wall(pos));
        }
        if cell.overlays.iter().any(|o| o.rank() == overlay.rank()) {
            return Err(BuildError::DuplicateOverlay(pos, overlay.name()));
        }
        cell.overlays.push(overlay);
        cell.overlays.sort_by_key(TileOverlay::rank);
        Ok(())
    }

    pub fn set_inventory(&mut self, obj: Option<WorldObject>) {
        self.inventory = obj;
    }

    pub fn set_agent(&mut self, pose: Pose) {
        self.agent = pose;
    }

    /// Resolve derived state (flood activation, plate links) so a freshly
    /// built world is consistent before its first step.
    pub fn finish(mut self) -> Result<Self, BuildError> {
        let mut rest_states = BTreeMap::new();
        for (pos, cell) in self.cells_iter() {
            if let Some((_, link, _)) = cell.plate() {
                let door = self.cell(link).and_then(|c| c.object.as_ref());
                match door {
                    Some(d) if d.kind == ObjectKind::Door => {
                        let rest = match d.door_state {
                            Some(DoorState::Locked) => DoorState::Locked,
                            _ => DoorState::Closed,
                        };
                        rest_states.insert(link, rest);
                    }
                    _ => {
                        return Err(BuildError::DanglingLink {
                            plate: pos,
                            door: link,
                        })
                    }
                }
            }
        }
        self.door_rest = rest_states;
        self.activate_floods();
        self.extinguish_fires();
        self.resolve_plates();
        Ok(self)
    }

    pub fn level_id(&self) -> &str {
        &self.level_id
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn agent(&self) -> Pose {
        self.agent
    }

    pub fn inventory(&self) -> Option<&WorldObject> {
        self.inventory.as_ref()
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn history(&self) -> &[Action] {
        &self.history
    }

    pub fn soak_duration(&self) -> u32 {
        self.soak_duration
    }

    pub fn max_steps(&self) -> u64 {
        self.max_steps
    }

    pub fn view_config(&self) -> ViewConfig {
        self.view
    }

    pub fn last_event(&self) -> Option<&StepEvent> {
        self.last_event.as_ref()
    }

    pub fn in_bounds(&self, pos: Pos) -> bool {
        pos.col < self.width && pos.row < self.height
    }

    pub fn cell(&self, pos: Pos) -> Option<&Cell> {
        self.in_bounds(pos)
            .then(|| &self.cells[pos.row * self.width + pos.col])
    }

    pub(crate) fn cell_mut(&mut self, pos: Pos) -> Option<&mut Cell> {
        if self.in_bounds(pos) {
            Some(&mut self.cells[pos.row * self.width + pos.col])
        } else {
            None
        }
    }

    /// Cells in row-major order with their positions.
    pub fn cells_iter(&self) -> impl Iterator<Item = (Pos, &Cell)> + '_ {
        let w = self.width;
        self.cells
            .iter()
            .enumerate()
            .map(move |(i, c)| (Pos::new(i % w, i / w), c))
    }

    pub fn object_at(&self, pos: Pos) -> Option<&WorldObject> {
        self.cell(pos).and_then(|c| c.object.as_ref())
    }

    /// All placed objects in row-major order (inventory excluded).
    pub fn objects(&self) -> impl Iterator<Item = (Pos, &WorldObject)> + '_ {
        self.cells_iter()
            .filter_map(|(p, c)| c.object.as_ref().map(|o| (p, o)))
    }

    /// Placed objects plus the carried one.
    pub fn object_count(&self) -> usize {
        self.objects().count() + usize::from(self.inventory.is_some())
    }

    pub fn notice_boards(&self) -> impl Iterator<Item = (Pos, &WorldObject)> + '_ {
        self.objects()
            .filter(|(_, o)| o.kind == ObjectKind::NoticeBoard)
    }

    /// Whether the agent could stand on `pos` right now.
    pub fn passable(&self, pos: Pos) -> bool {
        let Some(cell) = self.cell(pos) else {
            return false;
        };
        if cell.is_wall() || cell.fire_active() || cell.flooded() || cell.river().is_some() {
            return false;
        }
        cell.object.as_ref().is_none_or(|o| !o.blocks_passage())
    }

    /// Mutates the named overlay state directly; used by the editor to toggle
    /// hidden tile state.
    pub fn overlays_mut(&mut self, pos: Pos) -> Option<&mut Vec<TileOverlay>> {
        self.cell_mut(pos).map(|c| &mut c.overlays)
    }

    /// Pure forward simulation on a copy.
    pub fn simulate(&self, script: &[Action]) -> World {
        let mut copy = self.clone();
        for &a in script {
            copy.step(a);
        }
        copy
    }

    /// Hex SHA-256 over a canonical JSON dump of the full state.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("world serializes");
        let hash = Sha256::digest(&json);
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks the structural invariants. Returns the first violation found.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.step_count as usize != self.history.len() {
            return Err(format!(
                "step_count {} != history length {}",
                self.step_count,
                self.history.len()
            ));
        }
        let agent = self.agent.pos();
        let Some(agent_cell) = self.cell(agent) else {
            return Err(format!("agent at {agent} is out of bounds"));
        };
        if agent_cell.is_wall() {
            return Err(format!("agent at {agent} is inside a wall"));
        }
        if agent_cell
            .object
            .as_ref()
            .is_some_and(WorldObject::blocks_passage)
        {
            return Err(format!(
                "agent at {agent} shares a cell with a solid object"
            ));
        }
        for (pos, cell) in self.cells_iter() {
            let border = pos.row == 0
                || pos.col == 0
                || pos.row + 1 == self.height
                || pos.col + 1 == self.width;
            if border && !cell.is_wall() {
                return Err(format!("perimeter cell {pos} is not a wall"));
            }
            for o in &cell.overlays {
                if let TileOverlay::Flood {
                    rise_step, active, ..
                } = o
                {
                    if *active != (self.step_count >= *rise_step) {
                        return Err(format!(
                            "flood at {pos} active={active} at step {}",
                            self.step_count
                        ));
                    }
                }
            }
            if let Some(obj) = &cell.object {
                check_object(obj).map_err(|e| format!("object at {pos}: {e}"))?;
            }
        }
        if let Some(obj) = &self.inventory {
            check_object(obj).map_err(|e| format!("inventory: {e}"))?;
        }
        Ok(())
    }
}

fn check_object(obj: &WorldObject) -> Result<(), String> {
    let wet = matches!(obj.condition, Condition::Wet | Condition::Soaked);
    if (obj.wet_turns_remaining > 0) != wet {
        return Err(format!(
            "condition {} with wet_turns_remaining {}",
            obj.condition.as_str(),
            obj.wet_turns_remaining
        ));
    }
    if obj.kind.is_testimony() != obj.text.as_deref().is_some_and(|t| !t.is_empty()) {
        return Err("testimony text present iff notice board or signpost".into());
    }
    Ok(())
}
