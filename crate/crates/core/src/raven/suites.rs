//! Default concept suites.
//!
//! The probe suites vary one concept across layouts and attribute
//! combinations: 21 sameness specs and 8 progression specs, ten problems
//! each by default. The IID suite mixes all three relation families over
//! every layout with random background rules, in the manner of the original
//! RAVEN distribution; it feeds the train/val/test splits.

use super::answers::Strategy;
use super::generator::{Background, ConceptSpec, Family};
use super::model::Attribute::{self, *};
use super::model::LayoutKind::{self, *};

pub const PROBE_INSTANCES: usize = 10;

fn spec(family: Family, attrs: &[Attribute], layout: LayoutKind, background: Background) -> ConceptSpec {
    ConceptSpec::new(family, attrs, layout).with_background(background)
}

pub fn sameness_specs() -> Vec<ConceptSpec> {
    let combos: [(LayoutKind, &[Attribute]); 21] = [
        (Center, &[Shape, Size, Color, Angle]),
        (Center, &[Color]),
        (Center, &[Shape, Size]),
        (Center, &[Size, Color]),
        (Center, &[Shape, Color]),
        (Center, &[Angle, Size]),
        (Grid2x2, &[Number, Shape]),
        (Grid2x2, &[Color]),
        (Grid2x2, &[Position]),
        (Grid2x2, &[Shape, Size, Color]),
        (Grid3x3, &[Number, Shape]),
        (Grid3x3, &[Position]),
        (Grid3x3, &[Row, Color]),
        (Grid3x3, &[Column, Size]),
        (Grid3x3, &[Color]),
        (OutInCenter, &[InsideOutside, Color]),
        (OutInCenter, &[InsideOutside, Size]),
        (OutInCenter, &[Shape, Size, Color]),
        (OutInGrid, &[InsideOutside, Number]),
        (OutInGrid, &[Number, Color]),
        (OutInGrid, &[Position, Shape]),
    ];
    combos
        .iter()
        .map(|(layout, attrs)| spec(Family::Sameness, attrs, *layout, Background::Free))
        .collect()
}

pub fn progression_specs() -> Vec<ConceptSpec> {
    let combos: [(LayoutKind, Attribute); 8] = [
        (Center, Shape),
        (Grid2x2, Shape),
        (OutInCenter, Size),
        (Grid3x3, Number),
        (Center, Size),
        (Center, Color),
        (Grid3x3, Position),
        (OutInGrid, Number),
    ];
    combos
        .iter()
        .map(|(layout, attr)| spec(Family::Progression, &[*attr], *layout, Background::Constant))
        .collect()
}

/// Sameness specs followed by progression specs.
pub fn probe_specs() -> Vec<ConceptSpec> {
    let mut out = sameness_specs();
    out.extend(progression_specs());
    out
}

/// RAVEN-style mix over all layouts and relation families.
pub fn iid_specs(strategy: Strategy) -> Vec<ConceptSpec> {
    let mut out = Vec::new();
    for layout in LayoutKind::ALL {
        out.push(spec(Family::Sameness, &[Shape], layout, Background::Random));
        out.push(spec(Family::Progression, &[Size], layout, Background::Random));
        out.push(spec(Family::Arithmetic, &[Color], layout, Background::Random));
        if layout.arrangement().is_some() {
            out.push(spec(Family::Progression, &[Number], layout, Background::Random));
            out.push(spec(Family::Arithmetic, &[Position], layout, Background::Random));
        }
    }
    out.into_iter().map(|s| s.with_answers(strategy)).collect()
}
