//! Panel construction and single-attribute edits.

use rand::seq::SliceRandom;
use rand::Rng;

use super::model::{Angle, Arrangement, Attribute, Entity, LayoutKind, Panel, Shape, Value};

/// Visual attributes shared by a group of entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Look {
    pub shape: Shape,
    pub size: u8,
    pub color: u8,
    pub angle: Angle,
}

impl Look {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Look {
        Look {
            shape: *Shape::ALL.choose(rng).expect("non-empty"),
            size: rng.gen_range(0..super::model::SIZE_LEVELS),
            color: rng.gen_range(0..super::model::COLOR_LEVELS),
            angle: Angle::from_index(rng.gen_range(0..super::model::ANGLE_LEVELS)).expect("in range"),
        }
    }

    fn of(e: &Entity) -> Look {
        Look { shape: e.shape, size: e.size, color: e.color, angle: e.angle }
    }

    fn at(self, slot: u8) -> Entity {
        Entity { slot, shape: self.shape, size: self.size, color: self.color, angle: self.angle }
    }
}

/// Builds a panel from a main look, an occupancy mask (grid layouts and
/// `out_in_grid`) and an inner look (out-in layouts).
pub fn build_panel(layout: LayoutKind, main: Look, mask: Option<Value>, inner: Option<Look>) -> Panel {
    let mut entities = Vec::new();
    let arrangement_look = if layout.has_outer() {
        entities.push(main.at(0));
        inner.unwrap_or(main)
    } else {
        main
    };
    match layout.arrangement() {
        Some(arr) => {
            let mask = mask.unwrap_or(1);
            for i in 0..arr.len() {
                if mask & (1 << i) != 0 {
                    entities.push(arrangement_look.at(arr.first_slot + i));
                }
            }
        }
        None if layout.has_outer() => entities.push(arrangement_look.at(1)),
        None => entities.push(main.at(0)),
    }
    Panel::new(layout, entities).expect("build_panel produces valid panels")
}

/// Uniformly random count, then a uniformly random subset of that size.
pub fn random_mask<R: Rng + ?Sized>(arr: Arrangement, rng: &mut R) -> Value {
    let count = rng.gen_range(1..=arr.len());
    mask_with_count(arr, count, rng)
}

pub fn mask_with_count<R: Rng + ?Sized>(arr: Arrangement, count: u8, rng: &mut R) -> Value {
    let mut cells: Vec<u8> = (0..arr.len()).collect();
    cells.shuffle(rng);
    cells[..usize::from(count)].iter().fold(0, |m, &i| m | 1 << i)
}

fn with_mask(panel: &Panel, mask: Value) -> Panel {
    let layout = panel.layout();
    let arr = layout.arrangement().expect("caller checks arrangement");
    let template = panel
        .entities()
        .iter()
        .find(|e| e.slot >= arr.first_slot && (!layout.has_outer() || e.slot > 0))
        .map(Look::of)
        .expect("arrangement group is never empty");
    let mut entities: Vec<Entity> = panel
        .entities()
        .iter()
        .filter(|e| layout.has_outer() && e.slot == 0)
        .copied()
        .collect();
    for i in 0..arr.len() {
        if mask & (1 << i) != 0 {
            let slot = arr.first_slot + i;
            let e = panel.entity_at(slot).copied().unwrap_or_else(|| template.at(slot));
            entities.push(e);
        }
    }
    Panel::new(layout, entities).expect("mask is non-empty")
}

fn map_entities(panel: &Panel, f: impl Fn(&mut Entity, bool)) -> Panel {
    let outer = panel.layout().has_outer();
    let entities = panel
        .entities()
        .iter()
        .map(|e| {
            let mut e = *e;
            let main = !outer || e.slot == 0;
            f(&mut e, main);
            e
        })
        .collect();
    Panel::new(panel.layout(), entities).expect("edits keep slots")
}

/// Returns `panel` with `attribute` set to `target`, or `None` when no such
/// panel exists. Setting the outer shape keeps `inside_outside` unchanged.
pub fn set_attribute<R: Rng + ?Sized>(
    panel: &Panel,
    attribute: Attribute,
    target: Value,
    rng: &mut R,
) -> Option<Panel> {
    let layout = panel.layout();
    if !attribute.in_domain(layout, target) {
        return None;
    }
    let level = u8::try_from(target).ok();
    let edited = match attribute {
        Attribute::Shape => {
            let shape = Shape::from_level(target)?;
            let io = panel.value(Attribute::InsideOutside);
            let replacement = *Shape::ALL
                .iter()
                .filter(|&&s| s != shape)
                .copied()
                .collect::<Vec<_>>()
                .choose(rng)?;
            map_entities(panel, |e, main| {
                if main || io == Some(1) {
                    e.shape = shape;
                } else if e.shape == shape {
                    e.shape = replacement;
                }
            })
        }
        Attribute::Size => map_entities(panel, |e, main| {
            if main {
                e.size = level.expect("in domain");
            }
        }),
        Attribute::Color => map_entities(panel, |e, main| {
            if main {
                e.color = level.expect("in domain");
            }
        }),
        Attribute::Angle => {
            let angle = Angle::from_index(level?)?;
            map_entities(panel, |e, main| {
                if main {
                    e.angle = angle;
                }
            })
        }
        Attribute::InsideOutside => {
            let outer = panel.entities()[0].shape;
            let other = *Shape::ALL
                .iter()
                .filter(|&&s| s != outer)
                .copied()
                .collect::<Vec<_>>()
                .choose(rng)?;
            let inner = if target == 1 { outer } else { other };
            map_entities(panel, |e, main| {
                if !main {
                    e.shape = inner;
                }
            })
        }
        Attribute::Number => {
            let arr = layout.arrangement()?;
            let current = panel.occupancy()?;
            let mask = mask_with_count(arr, level?, rng);
            if mask == current {
                return None;
            }
            with_mask(panel, mask)
        }
        Attribute::Position => with_mask(panel, target),
        Attribute::Row | Attribute::Column => {
            let arr = layout.arrangement()?;
            let count = panel.occupancy()?.count_ones() as u8;
            let project = |m: Value| {
                if attribute == Attribute::Row {
                    arr.rows_of(m)
                } else {
                    arr.columns_of(m)
                }
            };
            // Prefer keeping the entity count.
            let mask = (0..64)
                .map(|i| {
                    if i < 32 {
                        mask_with_count(arr, count, rng)
                    } else {
                        random_mask(arr, rng)
                    }
                })
                .find(|&m| project(m) == target)?;
            with_mask(panel, mask)
        }
    };
    (edited.value(attribute) == Some(target)).then_some(edited)
}

/// Changes `attribute` to a different in-domain value while every attribute
/// in `preserve` that reads another coordinate keeps its value.
pub fn perturb<R: Rng + ?Sized>(
    panel: &Panel,
    attribute: Attribute,
    preserve: &[Attribute],
    rng: &mut R,
) -> Option<Panel> {
    let current = panel.value(attribute)?;
    let targets: Vec<Value> = attribute
        .domain(panel.layout())
        .into_iter()
        .filter(|&v| v != current)
        .collect();
    for _ in 0..32 {
        let &target = targets.choose(rng)?;
        if let Some(edited) = set_attribute(panel, attribute, target, rng) {
            if keeps_others(panel, &edited, attribute, preserve) {
                return Some(edited);
            }
        }
    }
    None
}

pub(crate) fn keeps_others(before: &Panel, after: &Panel, changed: Attribute, preserve: &[Attribute]) -> bool {
    preserve
        .iter()
        .filter(|a| a.coordinate() != changed.coordinate())
        .all(|&a| before.value(a) == after.value(a))
}
