//! Plain-text level format: parsing, canonical emission, validation, and
//! instantiation into a [`World`].
//!
//! ```text
//! [META]
//! agent_dir=north
//! agent_start=1,1
//! id=tiny
//! max_steps=100
//! see_through_walls=false
//! soak_duration=3
//! view_size=7
//!
//! [GRID]
//! ## ## ##
//! ## @. ##
//! ## ## ##
//!
//! [OVERLAYS]
//!
//! [TEXTS]
//! ```
//!
//! Grid rows are space-separated two-character codes: color then kind
//! (`bB` blue ball), or `##` wall, `..` floor, `@.` agent start. Comments are
//! lines starting with `# ` (or a lone `#`); a grid row beginning with `##`
//! is never a comment.

mod emit;
mod parse;

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use emit::{emit_level, meta_pairs, overlay_text, random_set_text};
pub use parse::{parse_level, parse_overlay_line, OverlayItem, META_KEYS};

use crate::view::ViewConfig;
use crate::world::{
    Color, Condition, Direction, DoorState, ObjectKind, PlateEffect, Pos, Pose, TileOverlay, World,
    WorldObject, DEFAULT_SOAK_DURATION,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellCode {
    Wall,
    Floor,
    Agent,
    Object(ObjectKind, Color),
}

impl CellCode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "##" => Some(Self::Wall),
            ".." => Some(Self::Floor),
            "@." => Some(Self::Agent),
            _ => {
                let mut chars = s.chars();
                let (c, k) = (chars.next()?, chars.next()?);
                if chars.next().is_some() {
                    return None;
                }
                Some(Self::Object(
                    ObjectKind::from_code(k)?,
                    Color::from_code(c)?,
                ))
            }
        }
    }

    pub fn as_str(&self) -> String {
        match self {
            Self::Wall => "##".into(),
            Self::Floor => "..".into(),
            Self::Agent => "@.".into(),
            Self::Object(k, c) => format!("{}{}", c.code(), k.code()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AgentDir {
    Fixed(Direction),
    /// Drawn from the seeded generator at world init.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ViewSize {
    pub depth: usize,
    pub width: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelMeta {
    pub agent_dir: AgentDir,
    pub view: ViewSize,
    pub see_through_walls: bool,
    pub max_steps: u64,
    pub soak_duration: u32,
}

impl Default for LevelMeta {
    fn default() -> Self {
        Self {
            agent_dir: AgentDir::Fixed(Direction::North),
            view: ViewSize { depth: 7, width: 7 },
            see_through_walls: false,
            max_steps: 100,
            soak_duration: DEFAULT_SOAK_DURATION,
        }
    }
}

/// Tile mechanics as authored; runtime flags start cleared.
#[derive(Clone, Debug, PartialEq)]
pub enum TileSpec {
    River { direction: Direction, speed: u32 },
    Fire { active: bool },
    Flood { rise_step: u64 },
    Plate { effect: PlateEffect, link: Pos },
    Dark,
}

impl TileSpec {
    fn rank(&self) -> u8 {
        self.to_overlay().rank()
    }

    pub fn to_overlay(&self) -> TileOverlay {
        match *self {
            Self::River { direction, speed } => TileOverlay::River { direction, speed },
            Self::Fire { active } => TileOverlay::Fire { active },
            Self::Flood { rise_step } => TileOverlay::Flood {
                rise_step,
                active: false,
                spent: false,
            },
            Self::Plate { effect, link } => TileOverlay::PressurePlate {
                effect,
                link,
                fired: false,
            },
            Self::Dark => TileOverlay::DarkZone,
        }
    }

    pub fn name(&self) -> &'static str {
        self.to_overlay().name()
    }
}

/// One line of the `[OVERLAYS]` section.
#[derive(Clone, Debug, PartialEq)]
pub enum OverlayLine {
    Tile {
        pos: Pos,
        tile: TileSpec,
    },
    Door {
        pos: Pos,
        state: DoorState,
    },
    Wet {
        pos: Pos,
        condition: Condition,
        turns: u32,
    },
}

impl OverlayLine {
    pub fn pos(&self) -> Pos {
        match self {
            Self::Tile { pos, .. } | Self::Door { pos, .. } | Self::Wet { pos, .. } => *pos,
        }
    }

    fn sort_key(&self) -> (usize, usize, u8) {
        let p = self.pos();
        let rank = match self {
            Self::Tile { tile, .. } => tile.rank(),
            Self::Door { .. } => 10,
            Self::Wet { .. } => 11,
        };
        (p.row, p.col, rank)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TextEntry {
    pub pos: Pos,
    pub text: String,
    /// Stated accuracy, signposts only.
    pub accuracy: Option<f64>,
}

/// Seeded object pool: every floor cell in the inclusive rectangle gets
/// `fill`, then `absent` cells are cleared and each swap replaces that many
/// further cells with another code.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomSet {
    pub from: Pos,
    pub to: Pos,
    pub fill: (ObjectKind, Color),
    pub absent: u32,
    pub swaps: Vec<((ObjectKind, Color), u32)>,
}

impl RandomSet {
    pub fn violations(&self) -> u32 {
        self.absent + self.swaps.iter().map(|(_, n)| n).sum::<u32>()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelSpec {
    pub id: String,
    pub meta: LevelMeta,
    pub grid: Vec<Vec<CellCode>>,
    pub overlays: Vec<OverlayLine>,
    pub texts: Vec<TextEntry>,
    pub randomized_sets: Vec<RandomSet>,
}

/// Where a violation sits inside a level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Site {
    Level,
    Meta(&'static str),
    Row(usize),
    Cell(Pos),
    Overlay(usize),
    Text(usize),
    Random(usize),
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Level => f.write_str("level"),
            Self::Meta(k) => write!(f, "meta key {k}"),
            Self::Row(r) => write!(f, "grid row {r}"),
            Self::Cell(p) => write!(f, "cell {p}"),
            Self::Overlay(i) => write!(f, "overlay #{i}"),
            Self::Text(i) => write!(f, "text #{i}"),
            Self::Random(i) => write!(f, "random set #{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum LevelErrorKind {
    #[error("unknown section {0:?}")]
    UnknownSection(String),
    #[error("content before the first section")]
    NoSection,
    #[error("unknown meta key {0:?}")]
    UnknownMetaKey(String),
    #[error("invalid value {value:?} for {key}")]
    BadValue { key: String, value: String },
    #[error("malformed line: {0}")]
    Malformed(String),
    #[error("cell code {0:?} is not two characters")]
    BadCellWidth(String),
    #[error("unknown cell code {0:?}")]
    UnknownCode(String),
    #[error("grid row has {found} cells, expected {expected}")]
    Ragged { expected: usize, found: usize },
    #[error("grid is empty")]
    EmptyGrid,
    #[error("no agent start (@.) in grid")]
    MissingAgent,
    #[error("more than one agent start in grid")]
    MultipleAgents,
    #[error("agent_start {declared} does not match grid agent {grid}")]
    AgentMismatch { declared: Pos, grid: Pos },
    #[error("perimeter cell is not a wall")]
    PerimeterNotWall,
    #[error("position ({col}, {row}) is outside the {width}x{height} grid")]
    OutOfBounds {
        col: usize,
        row: usize,
        width: usize,
        height: usize,
    },
    #[error("overlay placed on a wall")]
    OnWall,
    #[error("duplicate {0} overlay on one cell")]
    DuplicateOverlay(&'static str),
    #[error("plate links to {0}, which is not a door")]
    DanglingLink(Pos),
    #[error("{expected} line targets a cell without one")]
    NoSuchObject { expected: &'static str },
    #[error("testimony object has no text")]
    MissingText,
    #[error("text attached to a cell that is not a notice board or signpost")]
    StrayText,
    #[error("more than one text for one cell")]
    DuplicateText,
    #[error("stated accuracy belongs to signposts and must lie in [0, 1]")]
    BadAccuracy,
    #[error("random set needs {needed} floor cells but its region has {available}")]
    PoolTooSmall { needed: u32, available: usize },
    #[error("random set fill must be a key, ball, box or boulder")]
    BadFill,
    #[error("wet state is inconsistent: condition {condition} with {turns} turns")]
    BadWetState { condition: &'static str, turns: u32 },
}

/// A constraint violation located in a [`LevelSpec`].
#[derive(Clone, Debug, PartialEq, Error)]
#[error("{site}: {kind}")]
pub struct Violation {
    pub site: Site,
    pub kind: LevelErrorKind,
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("invalid level: {}", .violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

/// Parse failure with a 1-based source position.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct LevelError {
    pub line: usize,
    pub column: usize,
    pub kind: LevelErrorKind,
}

impl LevelSpec {
    /// A bordered empty room with the agent in the top-left interior cell.
    pub fn blank(id: impl Into<String>, width: usize, height: usize) -> Self {
        let mut grid = vec![vec![CellCode::Floor; width]; height];
        for (r, row) in grid.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                if r == 0 || c == 0 || r + 1 == height || c + 1 == width {
                    *cell = CellCode::Wall;
                }
            }
        }
        if width > 2 && height > 2 {
            grid[1][1] = CellCode::Agent;
        }
        Self {
            id: id.into(),
            meta: LevelMeta::default(),
            grid,
            overlays: Vec::new(),
            texts: Vec::new(),
            randomized_sets: Vec::new(),
        }
    }

    /// Apply one `[META]` assignment in file syntax. `agent_start` moves
    /// the agent to a floor cell. Only the key itself is checked here.
    pub fn set_meta(&mut self, key: &str, value: &str) -> Result<(), LevelErrorKind> {
        parse::apply_meta(self, key.trim(), value.trim())
    }

    pub fn width(&self) -> usize {
        self.grid.first().map_or(0, Vec::len)
    }

    pub fn height(&self) -> usize {
        self.grid.len()
    }

    pub fn code_at(&self, pos: Pos) -> Option<CellCode> {
        self.grid.get(pos.row)?.get(pos.col).copied()
    }

    pub fn agent_start(&self) -> Option<Pos> {
        self.cells()
            .find(|(_, c)| *c == CellCode::Agent)
            .map(|(p, _)| p)
    }

    pub fn cells(&self) -> impl Iterator<Item = (Pos, CellCode)> + '_ {
        self.grid.iter().enumerate().flat_map(|(r, row)| {
            row.iter()
                .enumerate()
                .map(move |(c, code)| (Pos::new(c, r), *code))
        })
    }

    pub fn view_config(&self) -> ViewConfig {
        ViewConfig {
            depth: self.meta.view.depth,
            width: self.meta.view.width,
            see_through_walls: self.meta.see_through_walls,
        }
    }

    /// Sort overlays, texts and random sets into emission order.
    pub fn canonicalize(&mut self) {
        self.overlays.sort_by_key(OverlayLine::sort_key);
        self.texts.sort_by_key(|t| (t.pos.row, t.pos.col));
        self.randomized_sets
            .sort_by_key(|s| (s.from.row, s.from.col, s.to.row, s.to.col));
    }

    pub fn canonicalized(mut self) -> Self {
        self.canonicalize();
        self
    }

    /// Every violated constraint, in a stable order.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut v = |site: Site, kind: LevelErrorKind| out.push(Violation { site, kind });
        let meta = &self.meta;
        if meta.view.width.is_multiple_of(2) || meta.view.width == 0 {
            v(
                Site::Meta("view_size"),
                LevelErrorKind::BadValue {
                    key: "view_size".into(),
                    value: format!("width {} must be odd", meta.view.width),
                },
            );
        }
        if meta.view.depth == 0 {
            v(
                Site::Meta("view_size"),
                LevelErrorKind::BadValue {
                    key: "view_size".into(),
                    value: "depth 0".into(),
                },
            );
        }
        if meta.soak_duration == 0 {
            v(
                Site::Meta("soak_duration"),
                LevelErrorKind::BadValue {
                    key: "soak_duration".into(),
                    value: "0".into(),
                },
            );
        }
        let height = self.height();
        let width = self.width();
        if height == 0 || width == 0 {
            v(Site::Level, LevelErrorKind::EmptyGrid);
            return out;
        }
        let mut ragged = false;
        for (r, row) in self.grid.iter().enumerate() {
            if row.len() != width {
                v(
                    Site::Row(r),
                    LevelErrorKind::Ragged {
                        expected: width,
                        found: row.len(),
                    },
                );
                ragged = true;
            }
        }
        if ragged {
            return out;
        }
        let agents: Vec<Pos> = self
            .cells()
            .filter(|(_, c)| *c == CellCode::Agent)
            .map(|(p, _)| p)
            .collect();
        match agents.len() {
            0 => v(Site::Level, LevelErrorKind::MissingAgent),
            1 => {}
            _ => v(Site::Cell(agents[1]), LevelErrorKind::MultipleAgents),
        }
        for (pos, code) in self.cells() {
            let border =
                pos.row == 0 || pos.col == 0 || pos.row + 1 == height || pos.col + 1 == width;
            if border && code != CellCode::Wall {
                v(Site::Cell(pos), LevelErrorKind::PerimeterNotWall);
            }
        }
        let oob = |p: Pos| LevelErrorKind::OutOfBounds {
            col: p.col,
            row: p.row,
            width,
            height,
        };
        let in_bounds = |p: Pos| p.col < width && p.row < height;

        let mut seen: Vec<(Pos, u8)> = Vec::new();
        for (i, line) in self.overlays.iter().enumerate() {
            let pos = line.pos();
            if !in_bounds(pos) {
                v(Site::Overlay(i), oob(pos));
                continue;
            }
            let code = self.grid[pos.row][pos.col];
            match line {
                OverlayLine::Tile { tile, .. } => {
                    if code == CellCode::Wall {
                        v(Site::Overlay(i), LevelErrorKind::OnWall);
                    }
                    let key = (pos, tile.rank());
                    if seen.contains(&key) {
                        v(
                            Site::Overlay(i),
                            LevelErrorKind::DuplicateOverlay(tile.name()),
                        );
                    }
                    seen.push(key);
                    match tile {
                        TileSpec::Plate { link, .. } => {
                            let is_door = in_bounds(*link)
                                && matches!(
                                    self.grid[link.row][link.col],
                                    CellCode::Object(ObjectKind::Door, _)
                                );
                            if !is_door {
                                v(Site::Overlay(i), LevelErrorKind::DanglingLink(*link));
                            }
                        }
                        TileSpec::River { speed: 0, .. } => v(
                            Site::Overlay(i),
                            LevelErrorKind::BadValue {
                                key: "speed".into(),
                                value: "0".into(),
                            },
                        ),
                        _ => {}
                    }
                }
                OverlayLine::Door { .. } => {
                    let key = (pos, 10);
                    if seen.contains(&key) {
                        v(Site::Overlay(i), LevelErrorKind::DuplicateOverlay("door"));
                    }
                    seen.push(key);
                    if !matches!(code, CellCode::Object(ObjectKind::Door, _)) {
                        v(
                            Site::Overlay(i),
                            LevelErrorKind::NoSuchObject { expected: "door" },
                        );
                    }
                }
                OverlayLine::Wet {
                    condition, turns, ..
                } => {
                    let key = (pos, 11);
                    if seen.contains(&key) {
                        v(Site::Overlay(i), LevelErrorKind::DuplicateOverlay("wet"));
                    }
                    seen.push(key);
                    if !matches!(code, CellCode::Object(k, _) if k.drifts()) {
                        v(
                            Site::Overlay(i),
                            LevelErrorKind::NoSuchObject { expected: "wet" },
                        );
                    }
                    if (*condition == Condition::Dry) != (*turns == 0) {
                        v(
                            Site::Overlay(i),
                            LevelErrorKind::BadWetState {
                                condition: condition.as_str(),
                                turns: *turns,
                            },
                        );
                    }
                }
            }
        }

        let mut text_cells: Vec<Pos> = Vec::new();
        for (i, t) in self.texts.iter().enumerate() {
            if !in_bounds(t.pos) {
                v(Site::Text(i), oob(t.pos));
                continue;
            }
            let kind = match self.grid[t.pos.row][t.pos.col] {
                CellCode::Object(k, _) if k.is_testimony() => k,
                _ => {
                    v(Site::Text(i), LevelErrorKind::StrayText);
                    continue;
                }
            };
            if text_cells.contains(&t.pos) {
                v(Site::Text(i), LevelErrorKind::DuplicateText);
            }
            text_cells.push(t.pos);
            if t.text.is_empty() {
                v(Site::Text(i), LevelErrorKind::MissingText);
            }
            match t.accuracy {
                Some(a) if kind != ObjectKind::Signpost || !(0.0..=1.0).contains(&a) => {
                    v(Site::Text(i), LevelErrorKind::BadAccuracy)
                }
                _ => {}
            }
        }
        for (pos, code) in self.cells() {
            if matches!(code, CellCode::Object(k, _) if k.is_testimony())
                && !text_cells.contains(&pos)
            {
                v(Site::Cell(pos), LevelErrorKind::MissingText);
            }
        }

        for (i, set) in self.randomized_sets.iter().enumerate() {
            if !in_bounds(set.from) || !in_bounds(set.to) {
                let p = if in_bounds(set.from) {
                    set.to
                } else {
                    set.from
                };
                v(Site::Random(i), oob(p));
                continue;
            }
            if set.from.col > set.to.col || set.from.row > set.to.row {
                v(
                    Site::Random(i),
                    LevelErrorKind::BadValue {
                        key: "region".into(),
                        value: format!("{} .. {}", set.from, set.to),
                    },
                );
                continue;
            }
            let fills = std::iter::once(set.fill.0).chain(set.swaps.iter().map(|((k, _), _)| *k));
            if fills.into_iter().any(|k| !k.drifts()) {
                v(Site::Random(i), LevelErrorKind::BadFill);
            }
            let available = pool_cells(self, set).len();
            if set.violations() as usize > available {
                v(
                    Site::Random(i),
                    LevelErrorKind::PoolTooSmall {
                        needed: set.violations(),
                        available,
                    },
                );
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let violations = self.violations();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ValidationError { violations })
        }
    }
}

fn pool_cells(level: &LevelSpec, set: &RandomSet) -> Vec<Pos> {
    let mut cells = Vec::new();
    for row in set.from.row..=set.to.row {
        for col in set.from.col..=set.to.col {
            if level.grid[row][col] == CellCode::Floor {
                cells.push(Pos::new(col, row));
            }
        }
    }
    cells
}

/// Build the initial world. The seed drives the random agent heading and
/// random object pools; levels without either ignore it.
pub fn init_world(level: &LevelSpec, seed: u64) -> Result<World, ValidationError> {
    level.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = level.agent_start().expect("validated");
    let facing = match level.meta.agent_dir {
        AgentDir::Fixed(d) => d,
        AgentDir::Random => Direction::ALL[rng.random_range(0..4)],
    };
    let mut world = World::empty(level.width(), level.height(), Pose::new(start, facing))
        .with_level_id(level.id.clone())
        .with_seed(seed)
        .with_soak_duration(level.meta.soak_duration)
        .with_max_steps(level.meta.max_steps)
        .with_view(level.view_config());

    let fail = |site: Site, e: crate::world::BuildError| ValidationError {
        violations: vec![Violation {
            site,
            kind: LevelErrorKind::Malformed(e.to_string()),
        }],
    };

    for (pos, code) in level.cells() {
        let result = match code {
            CellCode::Wall => world.set_wall(pos),
            CellCode::Floor | CellCode::Agent => world.set_floor(pos),
            CellCode::Object(kind, color) => {
                let mut obj = WorldObject::new(kind, color);
                if let Some(t) = level.texts.iter().find(|t| t.pos == pos) {
                    obj.text = Some(t.text.clone());
                    obj.stated_accuracy = t.accuracy;
                }
                world
                    .set_floor(pos)
                    .and_then(|_| world.place_object(pos, obj))
            }
        };
        result.map_err(|e| fail(Site::Cell(pos), e))?;
    }

    for set in &level.randomized_sets {
        let mut cells = pool_cells(level, set);
        for &pos in &cells {
            world
                .place_object(pos, WorldObject::new(set.fill.0, set.fill.1))
                .map_err(|e| fail(Site::Cell(pos), e))?;
        }
        cells.shuffle(&mut rng);
        let mut picks = cells.into_iter();
        for _ in 0..set.absent {
            let pos = picks.next().expect("validated pool size");
            world.cell_mut(pos).expect("in bounds").object = None;
        }
        for &((kind, color), n) in &set.swaps {
            for _ in 0..n {
                let pos = picks.next().expect("validated pool size");
                world.cell_mut(pos).expect("in bounds").object =
                    Some(WorldObject::new(kind, color));
            }
        }
    }

    for (i, line) in level.overlays.iter().enumerate() {
        match line {
            OverlayLine::Tile { pos, tile } => world
                .add_overlay(*pos, tile.to_overlay())
                .map_err(|e| fail(Site::Overlay(i), e))?,
            OverlayLine::Door { pos, state } => {
                if let Some(obj) = world.cell_mut(*pos).and_then(|c| c.object.as_mut()) {
                    obj.door_state = Some(*state);
                }
            }
            OverlayLine::Wet {
                pos,
                condition,
                turns,
            } => {
                if let Some(obj) = world.cell_mut(*pos).and_then(|c| c.object.as_mut()) {
                    obj.condition = *condition;
                    obj.wet_turns_remaining = *turns;
                }
            }
        }
    }
    world.finish().map_err(|e| fail(Site::Level, e))
}
