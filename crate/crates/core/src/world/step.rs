//! Transition rules. One call to [`World::step`] applies, in this order:
//! agent action, river drift, wetness update, flood activation, fire
//! extinguishing, plate/door resolution.

use std::collections::{BTreeMap, BTreeSet};

use super::*;

impl World {
    /// Apply one action and tick the mechanics. Total: impossible moves are
    /// no-ops reported through the returned event.
    pub fn step(&mut self, action: Action) -> StepEvent {
        let event = self.apply_action(action);
        // Mechanics below observe the post-increment step index, so a flood
        // with rise_step = k is active from the k-th completed step on.
        self.step_count += 1;
        self.history.push(action);
        self.drift_rivers();
        self.update_wetness();
        self.activate_floods();
        self.extinguish_fires();
        self.resolve_plates();
        self.last_event = Some(event.clone());
        event
    }

    /// Successor world, leaving `self` untouched.
    pub fn stepped(&self, action: Action) -> World {
        let mut next = self.clone();
        next.step(action);
        next
    }

    fn ahead(&self) -> Option<Pos> {
        self.agent
            .pos()
            .step(self.agent.facing)
            .filter(|p| self.in_bounds(*p))
    }

    /// Whether `obj` may come to rest on `pos`.
    fn can_hold(&self, pos: Pos, obj: &WorldObject) -> bool {
        let Some(cell) = self.cell(pos) else {
            return false;
        };
        if cell.is_wall() || cell.object.is_some() || self.agent.pos() == pos || cell.flooded() {
            return false;
        }
        !cell.fire_active() || obj.is_wet()
    }

    /// Put an object on a cell that passed `can_hold`. A wet object landing
    /// on a burning cell puts the fire out.
    fn land(&mut self, pos: Pos, obj: WorldObject) {
        let wet = obj.is_wet();
        let cell = self.cell_mut(pos).expect("checked by can_hold");
        if wet {
            for o in cell.overlays.iter_mut() {
                if let TileOverlay::Fire { active } = o {
                    *active = false;
                }
            }
        }
        cell.object = Some(obj);
    }

    fn apply_action(&mut self, action: Action) -> StepEvent {
        match action {
            Action::TurnLeft => {
                self.agent.facing = self.agent.facing.turn_left();
                StepEvent::Turned {
                    left: true,
                    facing: self.agent.facing,
                }
            }
            Action::TurnRight => {
                self.agent.facing = self.agent.facing.turn_right();
                StepEvent::Turned {
                    left: false,
                    facing: self.agent.facing,
                }
            }
            Action::Forward => self.forward(),
            Action::Pickup => self.pickup(),
            Action::Drop => self.drop_carried(),
            Action::Toggle => self.toggle(),
            Action::Wait => StepEvent::Waited,
        }
    }

    fn forward(&mut self) -> StepEvent {
        let Some(target) = self.ahead() else {
            return StepEvent::Blocked { by: None };
        };
        let boulder = self
            .object_at(target)
            .filter(|o| o.kind == ObjectKind::Boulder)
            .cloned();
        if let Some(boulder) = boulder {
            let desc = boulder.desc();
            let beyond = target.step(self.agent.facing);
            match beyond {
                Some(b) if self.can_hold(b, &boulder) => {
                    self.cell_mut(target).expect("in bounds").object = None;
                    self.land(b, boulder);
                    if self.passable(target) {
                        self.agent.col = target.col;
                        self.agent.row = target.row;
                    }
                    return StepEvent::Pushed { object: desc };
                }
                _ => return StepEvent::PushBlocked { object: desc },
            }
        }
        if self.passable(target) {
            self.agent.col = target.col;
            self.agent.row = target.row;
            StepEvent::Moved
        } else {
            StepEvent::Blocked {
                by: self.blocker_name(target),
            }
        }
    }

    fn blocker_name(&self, pos: Pos) -> Option<String> {
        let cell = self.cell(pos)?;
        if cell.is_wall() {
            return Some("wall".into());
        }
        if let Some(o) = &cell.object {
            return Some(match o.door_state {
                Some(s) => format!("{} {}", s.as_str(), o.describe()),
                None => o.describe(),
            });
        }
        if cell.fire_active() {
            return Some("fire".into());
        }
        if cell.flooded() {
            return Some("flood water".into());
        }
        if cell.river().is_some() {
            return Some("river".into());
        }
        None
    }

    fn pickup(&mut self) -> StepEvent {
        if self.inventory.is_some() {
            return StepEvent::PickupFailed;
        }
        let Some(target) = self.ahead() else {
            return StepEvent::PickupFailed;
        };
        let cell = self.cell_mut(target).expect("in bounds");
        match cell.object.take_if(|o| o.kind.is_portable()) {
            Some(obj) => {
                let desc = obj.desc();
                self.inventory = Some(obj);
                StepEvent::PickedUp { object: desc }
            }
            None => StepEvent::PickupFailed,
        }
    }

    fn drop_carried(&mut self) -> StepEvent {
        let Some(target) = self.ahead() else {
            return StepEvent::DropFailed;
        };
        let Some(obj) = self.inventory.take() else {
            return StepEvent::DropFailed;
        };
        if self.can_hold(target, &obj) {
            let desc = obj.desc();
            self.land(target, obj);
            StepEvent::Dropped { object: desc }
        } else {
            self.inventory = Some(obj);
            StepEvent::DropFailed
        }
    }

    fn toggle(&mut self) -> StepEvent {
        let Some(target) = self.ahead() else {
            return StepEvent::ToggleFailed { object: None };
        };
        let gated = self.door_rest.contains_key(&target);
        let key_color = self
            .inventory
            .as_ref()
            .filter(|o| o.kind == ObjectKind::Key)
            .map(|o| o.color);
        let Some(obj) = self.cell_mut(target).and_then(|c| c.object.as_mut()) else {
            return StepEvent::ToggleFailed { object: None };
        };
        let desc = obj.desc();
        if obj.kind != ObjectKind::Door || gated {
            return StepEvent::ToggleFailed { object: Some(desc) };
        }
        let next = match obj.door_state {
            Some(DoorState::Open) => DoorState::Closed,
            Some(DoorState::Closed) => DoorState::Open,
            Some(DoorState::Locked) if key_color == Some(obj.color) => DoorState::Open,
            _ => return StepEvent::ToggleFailed { object: Some(desc) },
        };
        obj.door_state = Some(next);
        StepEvent::Toggled {
            object: desc,
            state: next,
        }
    }

    /// Carry resting objects along river tiles, front-most first so a line
    /// of objects moves together.
    fn drift_rivers(&mut self) {
        let mut movers: Vec<(Pos, Direction, u32)> = self
            .cells_iter()
            .filter_map(|(pos, cell)| {
                let (dir, speed) = cell.river()?;
                let obj = cell.object.as_ref()?;
                (obj.kind.drifts() && speed > 0).then_some((pos, dir, speed))
            })
            .collect();
        movers.sort_by_key(|&(pos, dir, _)| {
            let (dc, dr) = dir.delta();
            let along = pos.col as i64 * dc + pos.row as i64 * dr;
            (std::cmp::Reverse(along), pos.row, pos.col)
        });
        let mut arrived: BTreeSet<Pos> = BTreeSet::new();
        for (start, _, speed) in movers {
            if arrived.contains(&start) {
                continue;
            }
            let mut pos = start;
            let obj = self
                .cell_mut(pos)
                .and_then(|c| c.object.take())
                .expect("mover present");
            for _ in 0..speed {
                let Some((dir, _)) = self.cell(pos).and_then(Cell::river) else {
                    break;
                };
                match pos.step(dir) {
                    Some(next) if self.can_hold(next, &obj) => pos = next,
                    _ => break,
                }
            }
            if pos != start {
                arrived.insert(pos);
            }
            self.land(pos, obj);
        }
    }

    fn update_wetness(&mut self) {
        let soak = self.soak_duration;
        for cell in self.cells.iter_mut() {
            let on_river = cell.river().is_some();
            if let Some(obj) = cell.object.as_mut() {
                soak_or_dry(obj, on_river, soak);
            }
        }
        if let Some(obj) = self.inventory.as_mut() {
            soak_or_dry(obj, false, soak);
        }
    }

    pub(super) fn activate_floods(&mut self) {
        let now = self.step_count;
        for cell in self.cells.iter_mut() {
            for o in cell.overlays.iter_mut() {
                if let TileOverlay::Flood {
                    rise_step, active, ..
                } = o
                {
                    if !*active && now >= *rise_step {
                        *active = true;
                    }
                }
            }
        }
    }

    pub(super) fn extinguish_fires(&mut self) {
        for cell in self.cells.iter_mut() {
            if !cell.fire_active() {
                continue;
            }
            let flood_fresh = cell.overlays.iter().any(|o| {
                matches!(
                    o,
                    TileOverlay::Flood {
                        active: true,
                        spent: false,
                        ..
                    }
                )
            });
            let wet_object = cell.object.as_ref().is_some_and(WorldObject::is_wet);
            if !(flood_fresh || wet_object) {
                continue;
            }
            for o in cell.overlays.iter_mut() {
                match o {
                    TileOverlay::Fire { active } => *active = false,
                    TileOverlay::Flood {
                        active: true,
                        spent,
                        ..
                    } if flood_fresh => *spent = true,
                    _ => {}
                }
            }
        }
    }

    pub(super) fn resolve_plates(&mut self) {
        let agent = self.agent.pos();
        let mut demand: BTreeMap<Pos, bool> = self.door_rest.keys().map(|p| (*p, false)).collect();
        for i in 0..self.cells.len() {
            let pos = Pos::new(i % self.width, i / self.width);
            let cell = &mut self.cells[i];
            let weighted = agent == pos || cell.object.is_some();
            for o in cell.overlays.iter_mut() {
                if let TileOverlay::PressurePlate {
                    effect,
                    link,
                    fired,
                } = o
                {
                    if *effect == PlateEffect::Trigger && weighted {
                        *fired = true;
                    }
                    let open = match effect {
                        PlateEffect::Continuous => weighted,
                        PlateEffect::Trigger => *fired,
                    };
                    if open {
                        demand.insert(*link, true);
                    }
                }
            }
        }
        for (door, open) in demand {
            let rest = self.door_rest[&door];
            if !open && agent == door {
                // The doorway is occupied; the gate cannot shut on the agent.
                continue;
            }
            if let Some(obj) = self.cell_mut(door).and_then(|c| c.object.as_mut()) {
                obj.door_state = Some(if open { DoorState::Open } else { rest });
            }
        }
    }
}

fn soak_or_dry(obj: &mut WorldObject, on_river: bool, soak: u32) {
    if on_river {
        if obj.condition != Condition::Soaked {
            obj.condition = Condition::Wet;
        }
        obj.wet_turns_remaining = soak;
    } else if obj.wet_turns_remaining > 0 {
        obj.wet_turns_remaining -= 1;
        if obj.wet_turns_remaining == 0 {
            obj.condition = Condition::Dry;
        }
    }
}
