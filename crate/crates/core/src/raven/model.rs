//! Attribute domains, layouts, entities and panels.
//!
//! | attribute        | domain                                   | relations            |
//! |------------------|------------------------------------------|----------------------|
//! | `shape`          | triangle < square < pentagon < hexagon < circle (sides 3..=7) | constant, progression |
//! | `size`           | levels 0..=5                              | constant, progression |
//! | `color`          | gray levels 0..=9 (0 white, 9 darkest)    | constant, progression, arithmetic |
//! | `angle`          | -135, -90, ..., 180 degrees (8 values)    | constant, progression |
//! | `number`         | 1..=slots of the arrangement              | constant, progression, arithmetic |
//! | `position`       | non-empty occupancy mask                  | constant, progression, arithmetic |
//! | `row`, `column`  | non-empty mask of occupied rows / columns | constant |
//! | `inside_outside` | 1 if every inner shape equals the outer shape, else 0 | constant |
//!
//! Entity attributes (`shape`, `size`, `color`, `angle`) address the main
//! group of a panel: every entity for `center` and grid layouts, the outer
//! entity for out-in layouts. Arrangement attributes (`number`, `position`,
//! `row`, `column`) address the grid part: the whole panel for grid layouts,
//! the inner 2×2 grid for `out_in_grid`.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Attribute values are small integers; masks use one bit per slot.
pub type Value = i32;

pub const SIZE_LEVELS: u8 = 6;
pub const COLOR_LEVELS: u8 = 10;
pub const ANGLE_LEVELS: u8 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Triangle,
    Square,
    Pentagon,
    Hexagon,
    Circle,
}

impl Shape {
    pub const ALL: [Shape; 5] = [
        Shape::Triangle,
        Shape::Square,
        Shape::Pentagon,
        Shape::Hexagon,
        Shape::Circle,
    ];

    /// Side count used for ordering; circles count as 7.
    pub fn sides(self) -> u8 {
        self.level() + 3
    }

    pub fn level(self) -> u8 {
        self as u8
    }

    pub fn from_level(level: Value) -> Option<Shape> {
        usize::try_from(level).ok().and_then(|i| Shape::ALL.get(i).copied())
    }
}

/// Rotation, stored as an index into `-135, -90, ..., 180` degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Angle(u8);

impl Angle {
    pub fn from_index(index: u8) -> Option<Angle> {
        (index < ANGLE_LEVELS).then_some(Angle(index))
    }

    pub fn from_degrees(degrees: i32) -> Option<Angle> {
        let offset = degrees + 135;
        if offset < 0 || offset % 45 != 0 {
            return None;
        }
        u8::try_from(offset / 45).ok().and_then(Angle::from_index)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn degrees(self) -> i32 {
        -135 + 45 * i32::from(self.0)
    }
}

impl Default for Angle {
    fn default() -> Self {
        Angle(3)
    }
}

impl Serialize for Angle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i32(self.degrees())
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let degrees = i32::deserialize(d)?;
        Angle::from_degrees(degrees).ok_or_else(|| {
            serde::de::Error::custom(format!(
                "angle {degrees} is not one of -135, -90, -45, 0, 45, 90, 135, 180"
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Entity {
    pub slot: u8,
    pub shape: Shape,
    pub size: u8,
    pub color: u8,
    pub angle: Angle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LayoutKind {
    #[serde(rename = "center")]
    Center,
    #[serde(rename = "grid_2x2")]
    Grid2x2,
    #[serde(rename = "grid_3x3")]
    Grid3x3,
    #[serde(rename = "out_in_center")]
    OutInCenter,
    #[serde(rename = "out_in_grid")]
    OutInGrid,
}

/// Grid part of a layout: slots `first_slot .. first_slot + dim * dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrangement {
    pub first_slot: u8,
    pub dim: u8,
}

impl Arrangement {
    pub fn len(self) -> u8 {
        self.dim * self.dim
    }

    pub fn is_empty(self) -> bool {
        self.dim == 0
    }

    pub fn full_mask(self) -> Value {
        (1 << self.len()) - 1
    }

    pub fn rows_of(self, mask: Value) -> Value {
        (0..self.len())
            .filter(|i| mask & (1 << i) != 0)
            .fold(0, |acc, i| acc | 1 << (i / self.dim))
    }

    pub fn columns_of(self, mask: Value) -> Value {
        (0..self.len())
            .filter(|i| mask & (1 << i) != 0)
            .fold(0, |acc, i| acc | 1 << (i % self.dim))
    }
}

impl LayoutKind {
    pub const ALL: [LayoutKind; 5] = [
        LayoutKind::Center,
        LayoutKind::Grid2x2,
        LayoutKind::Grid3x3,
        LayoutKind::OutInCenter,
        LayoutKind::OutInGrid,
    ];

    pub fn slot_count(self) -> u8 {
        match self {
            LayoutKind::Center => 1,
            LayoutKind::Grid2x2 => 4,
            LayoutKind::Grid3x3 => 9,
            LayoutKind::OutInCenter => 2,
            LayoutKind::OutInGrid => 5,
        }
    }

    /// Out-in layouts keep an outer entity in slot 0.
    pub fn has_outer(self) -> bool {
        matches!(self, LayoutKind::OutInCenter | LayoutKind::OutInGrid)
    }

    pub fn arrangement(self) -> Option<Arrangement> {
        match self {
            LayoutKind::Grid2x2 => Some(Arrangement { first_slot: 0, dim: 2 }),
            LayoutKind::Grid3x3 => Some(Arrangement { first_slot: 0, dim: 3 }),
            LayoutKind::OutInGrid => Some(Arrangement { first_slot: 1, dim: 2 }),
            LayoutKind::Center | LayoutKind::OutInCenter => None,
        }
    }

    /// Attributes defined on panels of this layout, in canonical order.
    pub fn attributes(self) -> Vec<Attribute> {
        Attribute::ALL
            .into_iter()
            .filter(|a| a.applies_to(self))
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            LayoutKind::Center => "center",
            LayoutKind::Grid2x2 => "grid_2x2",
            LayoutKind::Grid3x3 => "grid_3x3",
            LayoutKind::OutInCenter => "out_in_center",
            LayoutKind::OutInGrid => "out_in_grid",
        }
    }

    pub fn from_name(name: &str) -> Option<LayoutKind> {
        let normalized = name.replace('-', "_").to_ascii_lowercase();
        LayoutKind::ALL.into_iter().find(|l| l.name() == normalized)
    }
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Shape,
    Size,
    Color,
    Angle,
    Number,
    Position,
    Row,
    Column,
    InsideOutside,
}

/// Attributes that read the same underlying coordinate change together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coordinate {
    Shape,
    Size,
    Color,
    Angle,
    Occupancy,
    InnerShape,
}

impl Attribute {
    pub const ALL: [Attribute; 9] = [
        Attribute::Shape,
        Attribute::Size,
        Attribute::Color,
        Attribute::Angle,
        Attribute::Number,
        Attribute::Position,
        Attribute::Row,
        Attribute::Column,
        Attribute::InsideOutside,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Shape => "shape",
            Attribute::Size => "size",
            Attribute::Color => "color",
            Attribute::Angle => "angle",
            Attribute::Number => "number",
            Attribute::Position => "position",
            Attribute::Row => "row",
            Attribute::Column => "column",
            Attribute::InsideOutside => "inside_outside",
        }
    }

    pub fn from_name(name: &str) -> Option<Attribute> {
        let normalized = name.replace('-', "_").to_ascii_lowercase();
        Attribute::ALL.into_iter().find(|a| a.name() == normalized)
    }

    pub fn is_entity_attribute(self) -> bool {
        matches!(
            self,
            Attribute::Shape | Attribute::Size | Attribute::Color | Attribute::Angle
        )
    }

    pub fn is_arrangement_attribute(self) -> bool {
        matches!(
            self,
            Attribute::Number | Attribute::Position | Attribute::Row | Attribute::Column
        )
    }

    pub fn coordinate(self) -> Coordinate {
        match self {
            Attribute::Shape => Coordinate::Shape,
            Attribute::Size => Coordinate::Size,
            Attribute::Color => Coordinate::Color,
            Attribute::Angle => Coordinate::Angle,
            Attribute::Number | Attribute::Position | Attribute::Row | Attribute::Column => {
                Coordinate::Occupancy
            }
            Attribute::InsideOutside => Coordinate::InnerShape,
        }
    }

    pub fn applies_to(self, layout: LayoutKind) -> bool {
        if self.is_entity_attribute() {
            true
        } else if self.is_arrangement_attribute() {
            layout.arrangement().is_some()
        } else {
            layout.has_outer()
        }
    }

    /// Whether `relation` can be bound to this attribute at all.
    pub fn supports(self, relation: super::rules::Relation) -> bool {
        use super::rules::Relation;
        match relation {
            Relation::Constant => true,
            Relation::Progression => !matches!(
                self,
                Attribute::Row | Attribute::Column | Attribute::InsideOutside
            ),
            Relation::Arithmetic => matches!(
                self,
                Attribute::Number | Attribute::Color | Attribute::Position
            ),
        }
    }

    /// Every value the attribute can take on `layout`, ascending.
    pub fn domain(self, layout: LayoutKind) -> Vec<Value> {
        if !self.applies_to(layout) {
            return Vec::new();
        }
        match self {
            Attribute::Shape => (0..Shape::ALL.len() as Value).collect(),
            Attribute::Size => (0..Value::from(SIZE_LEVELS)).collect(),
            Attribute::Color => (0..Value::from(COLOR_LEVELS)).collect(),
            Attribute::Angle => (0..Value::from(ANGLE_LEVELS)).collect(),
            Attribute::InsideOutside => vec![0, 1],
            Attribute::Number => {
                let arr = layout.arrangement().expect("checked by applies_to");
                (1..=Value::from(arr.len())).collect()
            }
            Attribute::Position => {
                let arr = layout.arrangement().expect("checked by applies_to");
                (1..=arr.full_mask()).collect()
            }
            Attribute::Row | Attribute::Column => {
                let arr = layout.arrangement().expect("checked by applies_to");
                (1..(1 << arr.dim)).collect()
            }
        }
    }

    pub fn in_domain(self, layout: LayoutKind, value: Value) -> bool {
        if !self.applies_to(layout) {
            return false;
        }
        match self {
            Attribute::Shape => (0..5).contains(&value),
            Attribute::Size => (0..Value::from(SIZE_LEVELS)).contains(&value),
            Attribute::Color => (0..Value::from(COLOR_LEVELS)).contains(&value),
            Attribute::Angle => (0..Value::from(ANGLE_LEVELS)).contains(&value),
            Attribute::InsideOutside => value == 0 || value == 1,
            _ => {
                let arr = layout.arrangement().expect("checked by applies_to");
                match self {
                    Attribute::Number => (1..=Value::from(arr.len())).contains(&value),
                    Attribute::Position => (1..=arr.full_mask()).contains(&value),
                    _ => (1..(1 << arr.dim)).contains(&value),
                }
            }
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PanelError {
    #[error("panel has no entities")]
    Empty,
    #[error("slot {slot} does not exist in layout {layout}")]
    SlotOutOfRange { slot: u8, layout: LayoutKind },
    #[error("slot {0} is occupied twice")]
    DuplicateSlot(u8),
    #[error("out-in panel is missing its outer entity")]
    MissingOuter,
    #[error("out-in panel has no inner entity")]
    MissingInner,
    #[error("{attribute} level {value} is out of range")]
    LevelOutOfRange { attribute: Attribute, value: u8 },
}

/// One matrix cell: entities sorted by slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Panel {
    layout: LayoutKind,
    entities: Vec<Entity>,
}

impl Panel {
    pub fn new(layout: LayoutKind, mut entities: Vec<Entity>) -> Result<Panel, PanelError> {
        entities.sort_by_key(|e| e.slot);
        if entities.is_empty() {
            return Err(PanelError::Empty);
        }
        for pair in entities.windows(2) {
            if pair[0].slot == pair[1].slot {
                return Err(PanelError::DuplicateSlot(pair[0].slot));
            }
        }
        for e in &entities {
            if e.slot >= layout.slot_count() {
                return Err(PanelError::SlotOutOfRange { slot: e.slot, layout });
            }
            if e.size >= SIZE_LEVELS {
                return Err(PanelError::LevelOutOfRange { attribute: Attribute::Size, value: e.size });
            }
            if e.color >= COLOR_LEVELS {
                return Err(PanelError::LevelOutOfRange { attribute: Attribute::Color, value: e.color });
            }
        }
        if layout.has_outer() {
            if entities[0].slot != 0 {
                return Err(PanelError::MissingOuter);
            }
            if entities.len() < 2 {
                return Err(PanelError::MissingInner);
            }
        }
        Ok(Panel { layout, entities })
    }

    pub fn layout(&self) -> LayoutKind {
        self.layout
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn entity_at(&self, slot: u8) -> Option<&Entity> {
        self.entities.iter().find(|e| e.slot == slot)
    }

    /// Entities addressed by entity attributes.
    pub fn main_group(&self) -> &[Entity] {
        if self.layout.has_outer() {
            &self.entities[..1]
        } else {
            &self.entities
        }
    }

    /// Inner entities of out-in layouts; empty otherwise.
    pub fn inner_group(&self) -> &[Entity] {
        if self.layout.has_outer() {
            &self.entities[1..]
        } else {
            &[]
        }
    }

    /// Occupancy mask of the arrangement, bit `i` for arrangement cell `i`.
    pub fn occupancy(&self) -> Option<Value> {
        let arr = self.layout.arrangement()?;
        Some(
            self.entities
                .iter()
                .filter(|e| e.slot >= arr.first_slot)
                .fold(0, |acc, e| acc | 1 << (e.slot - arr.first_slot)),
        )
    }

    /// Panel-level value of `attribute`, `None` when undefined (attribute not
    /// applicable, or entity attribute not uniform across the main group).
    pub fn value(&self, attribute: Attribute) -> Option<Value> {
        if !attribute.applies_to(self.layout) {
            return None;
        }
        let uniform = |f: fn(&Entity) -> Value| -> Option<Value> {
            let group = self.main_group();
            let first = f(&group[0]);
            group.iter().all(|e| f(e) == first).then_some(first)
        };
        match attribute {
            Attribute::Shape => uniform(|e| Value::from(e.shape.level())),
            Attribute::Size => uniform(|e| Value::from(e.size)),
            Attribute::Color => uniform(|e| Value::from(e.color)),
            Attribute::Angle => uniform(|e| Value::from(e.angle.index())),
            Attribute::InsideOutside => {
                let outer = self.entities[0].shape;
                Some(Value::from(self.inner_group().iter().all(|e| e.shape == outer)))
            }
            Attribute::Number => self.occupancy().map(|m| m.count_ones() as Value),
            Attribute::Position => self.occupancy(),
            Attribute::Row => {
                let arr = self.layout.arrangement()?;
                self.occupancy().map(|m| arr.rows_of(m))
            }
            Attribute::Column => {
                let arr = self.layout.arrangement()?;
                self.occupancy().map(|m| arr.columns_of(m))
            }
        }
    }
}
