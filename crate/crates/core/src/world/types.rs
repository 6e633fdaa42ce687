use std::fmt;

use serde::{Deserialize, Serialize};

/// Absolute cell coordinate, 0-based, column first.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct Pos {
    pub col: usize,
    pub row: usize,
}

impl Pos {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }

    /// Offset by a signed delta. `None` when the result would be negative.
    pub fn offset(self, dcol: i64, drow: i64) -> Option<Pos> {
        let col = self.col as i64 + dcol;
        let row = self.row as i64 + drow;
        if col < 0 || row < 0 {
            return None;
        }
        Some(Pos::new(col as usize, row as usize))
    }

    pub fn step(self, dir: Direction) -> Option<Pos> {
        let (dc, dr) = dir.delta();
        self.offset(dc, dr)
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.col, self.row)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Self::North, Self::East, Self::South, Self::West];

    /// (dcol, drow) of one step in this direction. North is decreasing row.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Self::North => (0, -1),
            Self::East => (1, 0),
            Self::South => (0, 1),
            Self::West => (-1, 0),
        }
    }

    pub fn turn_left(self) -> Self {
        match self {
            Self::North => Self::West,
            Self::West => Self::South,
            Self::South => Self::East,
            Self::East => Self::North,
        }
    }

    pub fn turn_right(self) -> Self {
        match self {
            Self::North => Self::East,
            Self::East => Self::South,
            Self::South => Self::West,
            Self::West => Self::North,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::North => "north",
            Self::East => "east",
            Self::South => "south",
            Self::West => "west",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "north" => Some(Self::North),
            "east" => Some(Self::East),
            "south" => Some(Self::South),
            "west" => Some(Self::West),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Agent position and heading.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pose {
    pub col: usize,
    pub row: usize,
    pub facing: Direction,
}

impl Pose {
    pub fn new(pos: Pos, facing: Direction) -> Self {
        Self {
            col: pos.col,
            row: pos.row,
            facing,
        }
    }

    pub fn pos(&self) -> Pos {
        Pos::new(self.col, self.row)
    }

    /// Absolute cell for an egocentric offset; `lateral` is negative to the left.
    pub fn ego_to_abs(&self, ahead: i64, lateral: i64) -> Option<Pos> {
        let (fc, fr) = self.facing.delta();
        let (rc, rr) = self.facing.turn_right().delta();
        self.pos()
            .offset(fc * ahead + rc * lateral, fr * ahead + rr * lateral)
    }

    /// Egocentric (ahead, lateral) of an absolute cell. Cells behind the
    /// agent get a negative `ahead`.
    pub fn abs_to_ego(&self, pos: Pos) -> (i64, i64) {
        let dc = pos.col as i64 - self.col as i64;
        let dr = pos.row as i64 - self.row as i64;
        let (fc, fr) = self.facing.delta();
        let (rc, rr) = self.facing.turn_right().delta();
        (dc * fc + dr * fr, dc * rc + dr * rr)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Red,
    Green,
    Blue,
    Yellow,
    Purple,
    Grey,
}

impl Color {
    pub const ALL: [Color; 6] = [
        Self::Red,
        Self::Green,
        Self::Blue,
        Self::Yellow,
        Self::Purple,
        Self::Grey,
    ];

    pub fn code(self) -> char {
        match self {
            Self::Red => 'r',
            Self::Green => 'g',
            Self::Blue => 'b',
            Self::Yellow => 'y',
            Self::Purple => 'p',
            Self::Grey => 'e',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == c)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Red => "red",
            Self::Green => "green",
            Self::Blue => "blue",
            Self::Yellow => "yellow",
            Self::Purple => "purple",
            Self::Grey => "grey",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "gray" => Some(Self::Grey),
            _ => Self::ALL.into_iter().find(|k| k.name() == s),
        }
    }
}

/// Objects that can occupy a cell. Walls and floor are terrain, not objects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Door,
    Key,
    Ball,
    Box,
    Boulder,
    Goal,
    NoticeBoard,
    Signpost,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 8] = [
        Self::Door,
        Self::Key,
        Self::Ball,
        Self::Box,
        Self::Boulder,
        Self::Goal,
        Self::NoticeBoard,
        Self::Signpost,
    ];

    pub fn code(self) -> char {
        match self {
            Self::Door => 'D',
            Self::Key => 'K',
            Self::Ball => 'B',
            Self::Box => 'X',
            Self::Boulder => 'O',
            Self::Goal => 'G',
            Self::NoticeBoard => 'N',
            Self::Signpost => 'S',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == c)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Door => "door",
            Self::Key => "key",
            Self::Ball => "ball",
            Self::Box => "box",
            Self::Boulder => "boulder",
            Self::Goal => "goal",
            Self::NoticeBoard => "notice board",
            Self::Signpost => "signpost",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        let s = s.trim_end_matches('s');
        match s {
            "notice board" | "notice_board" | "noticeboard" => Some(Self::NoticeBoard),
            "boxe" => Some(Self::Box),
            _ => Self::ALL.into_iter().find(|k| k.name() == s),
        }
    }

    /// Can be carried in the inventory.
    pub fn is_portable(self) -> bool {
        matches!(self, Self::Key | Self::Ball | Self::Box)
    }

    /// Carried along by river tiles.
    pub fn drifts(self) -> bool {
        matches!(self, Self::Key | Self::Ball | Self::Box | Self::Boulder)
    }

    pub fn is_testimony(self) -> bool {
        matches!(self, Self::NoticeBoard | Self::Signpost)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoorState {
    Open,
    Closed,
    Locked,
}

impl DoorState {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Open => "open",
            Self::Closed => "closed",
            Self::Locked => "locked",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "open" => Some(Self::Open),
            "closed" => Some(Self::Closed),
            "locked" => Some(Self::Locked),
            _ => None,
        }
    }
}

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    #[default]
    Dry,
    Wet,
    Soaked,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Dry => "dry",
            Self::Wet => "wet",
            Self::Soaked => "soaked",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dry" => Some(Self::Dry),
            "wet" => Some(Self::Wet),
            "soaked" => Some(Self::Soaked),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldObject {
    pub kind: ObjectKind,
    pub color: Color,
    pub door_state: Option<DoorState>,
    pub condition: Condition,
    pub wet_turns_remaining: u32,
    pub text: Option<String>,
    pub stated_accuracy: Option<f64>,
}

impl WorldObject {
    pub fn new(kind: ObjectKind, color: Color) -> Self {
        Self {
            kind,
            color,
            door_state: (kind == ObjectKind::Door).then_some(DoorState::Closed),
            condition: Condition::Dry,
            wet_turns_remaining: 0,
            text: None,
            stated_accuracy: None,
        }
    }

    pub fn door(color: Color, state: DoorState) -> Self {
        Self {
            door_state: Some(state),
            ..Self::new(ObjectKind::Door, color)
        }
    }

    pub fn testimony(kind: ObjectKind, color: Color, text: impl Into<String>) -> Self {
        Self {
            text: Some(text.into()),
            ..Self::new(kind, color)
        }
    }

    /// Two-character cell code, color then kind (`bB` is a blue ball).
    pub fn code(&self) -> String {
        let mut s = String::with_capacity(2);
        s.push(self.color.code());
        s.push(self.kind.code());
        s
    }

    /// "blue ball"
    pub fn describe(&self) -> String {
        format!("{} {}", self.color.name(), self.kind.name())
    }

    pub fn desc(&self) -> ObjectDesc {
        ObjectDesc {
            kind: self.kind,
            color: self.color,
        }
    }

    pub fn is_wet(&self) -> bool {
        self.wet_turns_remaining > 0
    }

    /// Door is closed or locked.
    pub fn blocks_passage(&self) -> bool {
        match self.kind {
            ObjectKind::Door => self.door_state != Some(DoorState::Open),
            ObjectKind::Goal => false,
            _ => true,
        }
    }
}

/// Kind and color only; enough to name an object in prose.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectDesc {
    pub kind: ObjectKind,
    pub color: Color,
}

impl fmt::Display for ObjectDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.color.name(), self.kind.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlateEffect {
    /// Linked door open exactly while the plate is weighted.
    Continuous,
    /// First weighting opens the linked door for good.
    Trigger,
}

impl PlateEffect {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Continuous => "continuous",
            Self::Trigger => "trigger",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "continuous" => Some(Self::Continuous),
            "trigger" => Some(Self::Trigger),
            _ => None,
        }
    }
}

/// Mechanic attached to a floor cell. A cell carries at most one overlay of
/// each variant; fire and flood may share a cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TileOverlay {
    River {
        direction: Direction,
        speed: u32,
    },
    Fire {
        active: bool,
    },
    /// `spent` marks a flood that quenched a fire on its own cell; the water
    /// is used up and the cell stays passable.
    Flood {
        rise_step: u64,
        active: bool,
        spent: bool,
    },
    PressurePlate {
        effect: PlateEffect,
        link: Pos,
        fired: bool,
    },
    DarkZone,
}

impl TileOverlay {
    pub fn rank(&self) -> u8 {
        match self {
            Self::River { .. } => 0,
            Self::Fire { .. } => 1,
            Self::Flood { .. } => 2,
            Self::PressurePlate { .. } => 3,
            Self::DarkZone => 4,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::River { .. } => "river",
            Self::Fire { .. } => "fire",
            Self::Flood { .. } => "flood",
            Self::PressurePlate { .. } => "plate",
            Self::DarkZone => "dark",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terrain {
    Floor,
    Wall,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub terrain: Terrain,
    pub object: Option<WorldObject>,
    pub overlays: Vec<TileOverlay>,
}

impl Cell {
    pub fn floor() -> Self {
        Self {
            terrain: Terrain::Floor,
            object: None,
            overlays: Vec::new(),
        }
    }

    pub fn wall() -> Self {
        Self {
            terrain: Terrain::Wall,
            object: None,
            overlays: Vec::new(),
        }
    }

    pub fn is_wall(&self) -> bool {
        self.terrain == Terrain::Wall
    }

    pub fn river(&self) -> Option<(Direction, u32)> {
        self.overlays.iter().find_map(|o| match o {
            TileOverlay::River { direction, speed } => Some((*direction, *speed)),
            _ => None,
        })
    }

    pub fn fire_active(&self) -> bool {
        self.overlays
            .iter()
            .any(|o| matches!(o, TileOverlay::Fire { active: true }))
    }

    /// Active flood water that blocks movement.
    pub fn flooded(&self) -> bool {
        self.overlays.iter().any(|o| {
            matches!(
                o,
                TileOverlay::Flood {
                    active: true,
                    spent: false,
                    ..
                }
            )
        })
    }

    pub fn is_dark(&self) -> bool {
        self.overlays
            .iter()
            .any(|o| matches!(o, TileOverlay::DarkZone))
    }

    pub fn plate(&self) -> Option<(PlateEffect, Pos, bool)> {
        self.overlays.iter().find_map(|o| match o {
            TileOverlay::PressurePlate {
                effect,
                link,
                fired,
            } => Some((*effect, *link, *fired)),
            _ => None,
        })
    }

    pub fn has_overlay(&self, name: &str) -> bool {
        self.overlays.iter().any(|o| o.name() == name)
    }
}

/// Agent action, MiniGrid integer encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    TurnLeft = 0,
    TurnRight = 1,
    Forward = 2,
    Pickup = 3,
    Drop = 4,
    Toggle = 5,
    Wait = 6,
}

impl Action {
    pub const ALL: [Action; 7] = [
        Self::TurnLeft,
        Self::TurnRight,
        Self::Forward,
        Self::Pickup,
        Self::Drop,
        Self::Toggle,
        Self::Wait,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u64) -> Option<Self> {
        Self::ALL.get(usize::try_from(code).ok()?).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::TurnLeft => "turn_left",
            Self::TurnRight => "turn_right",
            Self::Forward => "forward",
            Self::Pickup => "pickup",
            Self::Drop => "drop",
            Self::Toggle => "toggle",
            Self::Wait => "wait",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Action {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let code = u64::deserialize(d)?;
        Action::from_code(code).ok_or_else(|| {
            serde::de::Error::custom(format!("action code {code} out of range 0..=6"))
        })
    }
}

/// What the agent's own action did during a step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum StepEvent {
    Turned {
        left: bool,
        facing: Direction,
    },
    Moved,
    Blocked {
        by: Option<String>,
    },
    Pushed {
        object: ObjectDesc,
    },
    PushBlocked {
        object: ObjectDesc,
    },
    PickedUp {
        object: ObjectDesc,
    },
    PickupFailed,
    Dropped {
        object: ObjectDesc,
    },
    DropFailed,
    Toggled {
        object: ObjectDesc,
        state: DoorState,
    },
    ToggleFailed {
        object: Option<ObjectDesc>,
    },
    Waited,
}
