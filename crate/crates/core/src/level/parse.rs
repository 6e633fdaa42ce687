use std::collections::HashMap;

use super::*;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Meta,
    Grid,
    Overlays,
    Texts,
}

/// Source positions of everything a [`Site`] can point at.
#[derive(Default)]
struct SourceMap {
    grid_header: usize,
    meta: HashMap<&'static str, usize>,
    rows: Vec<(usize, Vec<usize>)>,
    overlays: Vec<usize>,
    texts: Vec<usize>,
    random: Vec<usize>,
}

impl SourceMap {
    fn locate(&self, site: &Site) -> (usize, usize) {
        match site {
            Site::Level => (self.grid_header.max(1), 1),
            Site::Meta(k) => (self.meta.get(k).copied().unwrap_or(1), 1),
            Site::Row(r) => self.rows.get(*r).map_or((1, 1), |(l, _)| (*l, 1)),
            Site::Cell(p) => self.rows.get(p.row).map_or((1, 1), |(l, cols)| {
                (*l, cols.get(p.col).copied().unwrap_or(1))
            }),
            Site::Overlay(i) => (self.overlays.get(*i).copied().unwrap_or(1), 1),
            Site::Text(i) => (self.texts.get(*i).copied().unwrap_or(1), 1),
            Site::Random(i) => (self.random.get(*i).copied().unwrap_or(1), 1),
        }
    }
}

fn err(line: usize, column: usize, kind: LevelErrorKind) -> LevelError {
    LevelError { line, column, kind }
}

/// Whitespace-separated tokens with their 1-based starting columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out.into_iter()
        .map(|(byte, tok)| (line[..byte].chars().count() + 1, tok))
        .collect()
}

fn is_comment(line: &str) -> bool {
    let t = line.trim_start();
    t == "#" || t.starts_with("# ")
}

fn bad(key: &str, value: &str) -> LevelErrorKind {
    LevelErrorKind::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, LevelErrorKind> {
    value.parse().map_err(|_| bad(key, value))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, LevelErrorKind> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(key, value)),
    }
}

fn parse_pair(key: &str, value: &str) -> Result<Pos, LevelErrorKind> {
    let (c, r) = value.split_once(',').ok_or_else(|| bad(key, value))?;
    Ok(Pos::new(
        parse_num(key, c.trim())?,
        parse_num(key, r.trim())?,
    ))
}

fn parse_object_code(key: &str, value: &str) -> Result<(ObjectKind, Color), LevelErrorKind> {
    match CellCode::parse(value) {
        Some(CellCode::Object(k, c)) => Ok((k, c)),
        _ => Err(bad(key, value)),
    }
}

fn parse_view(value: &str) -> Result<ViewSize, LevelErrorKind> {
    if let Some((d, w)) = value.split_once('x') {
        Ok(ViewSize {
            depth: parse_num("view_size", d)?,
            width: parse_num("view_size", w)?,
        })
    } else {
        let n = parse_num("view_size", value)?;
        Ok(ViewSize { depth: n, width: n })
    }
}

/// Parse `key=value` tokens after the kind and coordinates.
fn params<'a>(
    toks: &[(usize, &'a str)],
    line_no: usize,
) -> Result<Vec<(&'a str, &'a str, usize)>, LevelError> {
    toks.iter()
        .map(|&(col, t)| {
            t.split_once('=').map(|(k, v)| (k, v, col)).ok_or_else(|| {
                err(
                    line_no,
                    col,
                    LevelErrorKind::Malformed(format!("expected key=value, got {t:?}")),
                )
            })
        })
        .collect()
}

fn coords(toks: &[(usize, &str)], line_no: usize, what: &str) -> Result<Pos, LevelError> {
    let get = |i: usize| -> Result<usize, LevelError> {
        let (col, t) = toks.get(i).copied().ok_or_else(|| {
            err(
                line_no,
                1,
                LevelErrorKind::Malformed(format!("{what} needs a column and a row")),
            )
        })?;
        t.parse()
            .map_err(|_| err(line_no, col, bad("coordinate", t)))
    };
    Ok(Pos::new(get(0)?, get(1)?))
}

/// One parsed `[OVERLAYS]` line.
#[derive(Clone, Debug, PartialEq)]
pub enum OverlayItem {
    Line(OverlayLine),
    Random(RandomSet),
}

/// Parse a single `[OVERLAYS]` line on its own, as the editor receives
/// them. Positions in errors refer to line 1.
pub fn parse_overlay_line(line: &str) -> Result<OverlayItem, LevelError> {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return Err(err(
            1,
            1,
            LevelErrorKind::Malformed("empty overlay line".into()),
        ));
    }
    parse_overlay(trimmed, 1)
}

fn parse_overlay(line: &str, line_no: usize) -> Result<OverlayItem, LevelError> {
    let toks = tokens(line);
    let (kcol, kind) = toks[0];
    if kind == "random" {
        let from = coords(&toks[1..], line_no, kind)?;
        let to = coords(&toks[3..], line_no, kind)?;
        let mut fill = None;
        let mut absent = 0;
        let mut swaps = Vec::new();
        for (k, v, col) in params(&toks[5..], line_no)? {
            let at = |e| err(line_no, col, e);
            match k {
                "fill" => fill = Some(parse_object_code(k, v).map_err(at)?),
                "absent" => absent = parse_num(k, v).map_err(at)?,
                "swap" => {
                    for part in v.split(',') {
                        let (code, n) = part.split_once(':').ok_or_else(|| at(bad(k, v)))?;
                        swaps.push((
                            parse_object_code(k, code).map_err(at)?,
                            parse_num(k, n).map_err(at)?,
                        ));
                    }
                }
                _ => return Err(at(LevelErrorKind::UnknownMetaKey(k.to_string()))),
            }
        }
        let fill = fill.ok_or_else(|| {
            err(
                line_no,
                kcol,
                LevelErrorKind::Malformed("random set needs fill=".into()),
            )
        })?;
        return Ok(OverlayItem::Random(RandomSet {
            from,
            to,
            fill,
            absent,
            swaps,
        }));
    }
    let pos = coords(&toks[1..], line_no, kind)?;
    let ps = params(toks.get(3..).unwrap_or(&[]), line_no)?;
    let lookup = |key: &str| {
        ps.iter()
            .find(|(k, _, _)| *k == key)
            .map(|&(_, v, c)| (v, c))
    };
    let required = |key: &str| {
        lookup(key).ok_or_else(|| {
            err(
                line_no,
                kcol,
                LevelErrorKind::Malformed(format!("{kind} needs {key}=")),
            )
        })
    };
    let allowed: &[&str] = match kind {
        "river" => &["direction", "speed"],
        "fire" => &["active"],
        "flood" => &["rise_step"],
        "plate" => &["effect", "link"],
        "dark" => &[],
        "door" => &["state"],
        "wet" => &["condition", "turns"],
        _ => {
            return Err(err(
                line_no,
                kcol,
                LevelErrorKind::Malformed(format!("unknown overlay kind {kind:?}")),
            ))
        }
    };
    if let Some(&(k, _, col)) = ps.iter().find(|(k, _, _)| !allowed.contains(k)) {
        return Err(err(
            line_no,
            col,
            LevelErrorKind::UnknownMetaKey(k.to_string()),
        ));
    }
    let value = |key: &str| -> Result<(&str, usize), LevelError> { required(key) };
    let line = match kind {
        "river" => {
            let (d, dc) = value("direction")?;
            let (s, sc) = value("speed")?;
            OverlayLine::Tile {
                pos,
                tile: TileSpec::River {
                    direction: Direction::parse(d)
                        .ok_or_else(|| err(line_no, dc, bad("direction", d)))?,
                    speed: parse_num("speed", s).map_err(|e| err(line_no, sc, e))?,
                },
            }
        }
        "fire" => {
            let active = match lookup("active") {
                Some((v, c)) => parse_bool("active", v).map_err(|e| err(line_no, c, e))?,
                None => true,
            };
            OverlayLine::Tile {
                pos,
                tile: TileSpec::Fire { active },
            }
        }
        "flood" => {
            let (v, c) = value("rise_step")?;
            OverlayLine::Tile {
                pos,
                tile: TileSpec::Flood {
                    rise_step: parse_num("rise_step", v).map_err(|e| err(line_no, c, e))?,
                },
            }
        }
        "plate" => {
            let (e, ec) = value("effect")?;
            let (l, lc) = value("link")?;
            OverlayLine::Tile {
                pos,
                tile: TileSpec::Plate {
                    effect: PlateEffect::parse(e)
                        .ok_or_else(|| err(line_no, ec, bad("effect", e)))?,
                    link: parse_pair("link", l).map_err(|e| err(line_no, lc, e))?,
                },
            }
        }
        "dark" => OverlayLine::Tile {
            pos,
            tile: TileSpec::Dark,
        },
        "door" => {
            let (s, c) = value("state")?;
            OverlayLine::Door {
                pos,
                state: DoorState::parse(s).ok_or_else(|| err(line_no, c, bad("state", s)))?,
            }
        }
        "wet" => {
            let (s, c) = value("condition")?;
            let (t, tc) = value("turns")?;
            OverlayLine::Wet {
                pos,
                condition: Condition::parse(s)
                    .ok_or_else(|| err(line_no, c, bad("condition", s)))?,
                turns: parse_num("turns", t).map_err(|e| err(line_no, tc, e))?,
            }
        }
        _ => unreachable!("kind checked above"),
    };
    Ok(OverlayItem::Line(line))
}

fn parse_text(line: &str, line_no: usize) -> Result<TextEntry, LevelError> {
    let quote = line.find('"').ok_or_else(|| {
        err(
            line_no,
            1,
            LevelErrorKind::Malformed("text entry needs a quoted string".into()),
        )
    })?;
    let head = &line[..quote];
    let qcol = line[..quote].chars().count() + 1;
    let text: String = serde_json::from_str(line[quote..].trim_end()).map_err(|e| {
        err(
            line_no,
            qcol,
            LevelErrorKind::Malformed(format!("bad string literal: {e}")),
        )
    })?;
    let toks = tokens(head);
    let pos = coords(&toks, line_no, "text")?;
    let mut accuracy = None;
    for (k, v, col) in params(&toks[2..], line_no)? {
        match k {
            "accuracy" => {
                accuracy = Some(parse_num("accuracy", v).map_err(|e| err(line_no, col, e))?)
            }
            _ => {
                return Err(err(
                    line_no,
                    col,
                    LevelErrorKind::UnknownMetaKey(k.to_string()),
                ))
            }
        }
    }
    Ok(TextEntry {
        pos,
        text,
        accuracy,
    })
}

pub const META_KEYS: [&str; 7] = [
    "agent_dir",
    "agent_start",
    "id",
    "max_steps",
    "see_through_walls",
    "soak_duration",
    "view_size",
];

/// Set one meta key other than `agent_start`, which lives in the grid.
pub(super) fn apply_meta(spec: &mut LevelSpec, key: &str, v: &str) -> Result<(), LevelErrorKind> {
    match key {
        "id" => spec.id = v.to_string(),
        "agent_dir" => {
            spec.meta.agent_dir = if v == "random" {
                AgentDir::Random
            } else {
                AgentDir::Fixed(Direction::parse(v).ok_or_else(|| bad(key, v))?)
            }
        }
        "agent_start" => {
            let to = parse_pair(key, v)?;
            let from = spec.agent_start();
            if spec.code_at(to) != Some(CellCode::Floor) && from != Some(to) {
                return Err(bad(key, v));
            }
            if let Some(f) = from {
                spec.grid[f.row][f.col] = CellCode::Floor;
            }
            spec.grid[to.row][to.col] = CellCode::Agent;
        }
        "max_steps" => spec.meta.max_steps = parse_num(key, v)?,
        "see_through_walls" => spec.meta.see_through_walls = parse_bool(key, v)?,
        "soak_duration" => spec.meta.soak_duration = parse_num(key, v)?,
        "view_size" => spec.meta.view = parse_view(v)?,
        _ => return Err(LevelErrorKind::UnknownMetaKey(key.to_string())),
    }
    Ok(())
}

/// Parse level text. Structural problems and constraint violations both
/// come back as a [`LevelError`] carrying the offending line and column.
pub fn parse_level(text: &str) -> Result<LevelSpec, LevelError> {
    let mut spec = LevelSpec {
        id: String::new(),
        meta: LevelMeta::default(),
        grid: Vec::new(),
        overlays: Vec::new(),
        texts: Vec::new(),
        randomized_sets: Vec::new(),
    };
    let mut map = SourceMap::default();
    let mut section: Option<Section> = None;
    let mut declared_start: Option<(Pos, usize)> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() || is_comment(line) {
            continue;
        }
        let trimmed = line.trim_start();
        if trimmed.starts_with('[') {
            section = Some(match trimmed {
                "[META]" => Section::Meta,
                "[GRID]" => {
                    map.grid_header = line_no;
                    Section::Grid
                }
                "[OVERLAYS]" => Section::Overlays,
                "[TEXTS]" => Section::Texts,
                other => {
                    return Err(err(
                        line_no,
                        1,
                        LevelErrorKind::UnknownSection(other.to_string()),
                    ))
                }
            });
            continue;
        }
        let indent = line.len() - trimmed.len() + 1;
        match section {
            None => return Err(err(line_no, indent, LevelErrorKind::NoSection)),
            Some(Section::Meta) => {
                let (k, v) = trimmed.split_once('=').ok_or_else(|| {
                    err(
                        line_no,
                        indent,
                        LevelErrorKind::Malformed(format!("expected key=value, got {trimmed:?}")),
                    )
                })?;
                let (k, v) = (k.trim(), v.trim());
                let key = META_KEYS.into_iter().find(|m| *m == k).ok_or_else(|| {
                    err(
                        line_no,
                        indent,
                        LevelErrorKind::UnknownMetaKey(k.to_string()),
                    )
                })?;
                map.meta.insert(key, line_no);
                let vcol = line.find('=').map_or(indent, |i| i + 2);
                let at = |e| err(line_no, vcol, e);
                match key {
                    "agent_start" => {
                        declared_start = Some((parse_pair(k, v).map_err(at)?, line_no))
                    }
                    _ => apply_meta(&mut spec, key, v).map_err(at)?,
                }
            }
            Some(Section::Grid) => {
                let toks = tokens(line);
                let mut row = Vec::with_capacity(toks.len());
                let mut cols = Vec::with_capacity(toks.len());
                for (col, tok) in toks {
                    if tok.chars().count() != 2 {
                        return Err(err(
                            line_no,
                            col,
                            LevelErrorKind::BadCellWidth(tok.to_string()),
                        ));
                    }
                    let code = CellCode::parse(tok).ok_or_else(|| {
                        err(line_no, col, LevelErrorKind::UnknownCode(tok.to_string()))
                    })?;
                    row.push(code);
                    cols.push(col);
                }
                if let Some(first) = spec.grid.first() {
                    if row.len() != first.len() {
                        return Err(err(
                            line_no,
                            cols.get(first.len())
                                .copied()
                                .unwrap_or(line.chars().count() + 1),
                            LevelErrorKind::Ragged {
                                expected: first.len(),
                                found: row.len(),
                            },
                        ));
                    }
                }
                spec.grid.push(row);
                map.rows.push((line_no, cols));
            }
            Some(Section::Overlays) => {
                match parse_overlay(trimmed, line_no).map_err(|e| shift(e, indent))? {
                    OverlayItem::Line(o) => {
                        spec.overlays.push(o);
                        map.overlays.push(line_no);
                    }
                    OverlayItem::Random(r) => {
                        spec.randomized_sets.push(r);
                        map.random.push(line_no);
                    }
                }
            }
            Some(Section::Texts) => {
                spec.texts
                    .push(parse_text(trimmed, line_no).map_err(|e| shift(e, indent))?);
                map.texts.push(line_no);
            }
        }
    }

    if let Some(v) = spec.violations().into_iter().next() {
        let (line, column) = map.locate(&v.site);
        return Err(err(line, column, v.kind));
    }
    if let Some((declared, line_no)) = declared_start {
        let grid = spec.agent_start().expect("validated");
        if declared != grid {
            return Err(err(
                line_no,
                1,
                LevelErrorKind::AgentMismatch { declared, grid },
            ));
        }
    }
    spec.canonicalize();
    Ok(spec)
}

fn shift(mut e: LevelError, indent: usize) -> LevelError {
    e.column += indent - 1;
    e
}
