//! Integer-only rasterization of panels and problem sheets.
//!
//! Conventions:
//!
//! - Coordinates are Q8 fixed point (1/256 pixel); pixels are sampled at
//!   their centers, no anti-aliasing.
//! - Trigonometry reads a Q16 sine table at whole degrees.
//! - Each slot owns a square cell. `center` uses the whole panel; grids split
//!   it evenly; the inner entity of `out_in_center` gets a centered cell of
//!   2/5 of the side; the inner 2×2 grid of `out_in_grid` fills the central
//!   half of the panel.
//! - Circumscribed diameter = cell × (20 + 14 × size) / 100, i.e. 0.2 to 0.9
//!   of the cell.
//! - Fill gray = 255 − color × 255 / 9; a 1-pixel black outline is drawn on
//!   shape pixels with a 4-neighbor outside the shape; background is white.
//! - Polygon vertex 0 sits at −90° (triangle, pentagon), −45° (square) or 0°
//!   (hexagon) before rotation by the entity angle; y grows downwards.

use super::generator::Problem;
use super::model::{Entity, LayoutKind, Panel, Shape};

pub const MIN_SIDE: u32 = 32;
pub const MAX_SIDE: u32 = 2048;

/// Outer margin of a sheet.
pub const OUTER: u32 = 8;
/// Gap between neighbouring panels of a sheet.
pub const CELL_GAP: u32 = 4;
/// Gap between the context block and the candidate block.
pub const SECTION_GAP: u32 = 24;
pub const SHEET_BACKGROUND: u8 = 224;

const WHITE: u8 = 255;
const BLACK: u8 = 0;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("side {0} px is outside {MIN_SIDE}..={MAX_SIDE}")]
    UnsupportedSize(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bitmap {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Bitmap {
    pub fn filled(width: u32, height: u32, gray: u8) -> Bitmap {
        Bitmap { width, height, pixels: vec![gray; (width * height) as usize] }
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[(y * self.width + x) as usize]
    }

    fn set(&mut self, x: u32, y: u32, v: u8) {
        self.pixels[(y * self.width + x) as usize] = v;
    }

    pub fn blit(&mut self, src: &Bitmap, x0: u32, y0: u32) {
        for y in 0..src.height {
            let dst = ((y0 + y) * self.width + x0) as usize;
            let from = (y * src.width) as usize;
            self.pixels[dst..dst + src.width as usize].copy_from_slice(&src.pixels[from..from + src.width as usize]);
        }
    }

    pub fn crop(&self, x0: u32, y0: u32, width: u32, height: u32) -> Bitmap {
        let mut out = Bitmap::filled(width, height, 0);
        for y in 0..height {
            let from = ((y0 + y) * self.width + x0) as usize;
            let to = (y * width) as usize;
            out.pixels[to..to + width as usize].copy_from_slice(&self.pixels[from..from + width as usize]);
        }
        out
    }

    /// Binary PGM (P5), 8-bit.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

const SIN_Q16: [i64; 91] = [
    0, 1144, 2287, 3430, 4572, 5712, 6850, 7987, 9121, 10252, 11380, 12505, 13626, 14742, 15855, 16962, 18064,
    19161, 20252, 21336, 22415, 23486, 24550, 25607, 26656, 27697, 28729, 29753, 30767, 31772, 32768, 33754,
    34729, 35693, 36647, 37590, 38521, 39441, 40348, 41243, 42126, 42995, 43852, 44695, 45525, 46341, 47143,
    47930, 48703, 49461, 50203, 50931, 51643, 52339, 53020, 53684, 54332, 54963, 55578, 56175, 56756, 57319,
    57865, 58393, 58903, 59396, 59870, 60326, 60764, 61183, 61584, 61966, 62328, 62672, 62997, 63303, 63589,
    63856, 64104, 64332, 64540, 64729, 64898, 65048, 65177, 65287, 65376, 65446, 65496, 65526, 65536,
];

fn sin_q16(degrees: i32) -> i64 {
    let d = degrees.rem_euclid(360) as usize;
    match d {
        0..=90 => SIN_Q16[d],
        91..=180 => SIN_Q16[180 - d],
        181..=270 => -SIN_Q16[d - 180],
        _ => -SIN_Q16[360 - d],
    }
}

fn cos_q16(degrees: i32) -> i64 {
    sin_q16(degrees + 90)
}

/// Cell of one slot: center and side, Q8.
#[derive(Debug, Clone, Copy)]
struct Cell {
    cx: i64,
    cy: i64,
    side: i64,
}

fn grid_cell(origin_x: i64, origin_y: i64, cell: i64, dim: i64, index: i64) -> Cell {
    let (row, col) = (index / dim, index % dim);
    Cell { cx: origin_x + col * cell + cell / 2, cy: origin_y + row * cell + cell / 2, side: cell }
}

fn slot_cell(layout: LayoutKind, slot: u8, side: u32) -> Cell {
    let s = i64::from(side) * 256;
    let whole = Cell { cx: s / 2, cy: s / 2, side: s };
    let slot = i64::from(slot);
    match layout {
        LayoutKind::Center => whole,
        LayoutKind::Grid2x2 | LayoutKind::Grid3x3 => {
            let dim = if layout == LayoutKind::Grid2x2 { 2 } else { 3 };
            let cell = i64::from(side) / dim * 256;
            let origin = (s - dim * cell) / 2;
            grid_cell(origin, origin, cell, dim, slot)
        }
        LayoutKind::OutInCenter => {
            if slot == 0 {
                whole
            } else {
                Cell { cx: s / 2, cy: s / 2, side: i64::from(side) * 2 / 5 * 256 }
            }
        }
        LayoutKind::OutInGrid => {
            if slot == 0 {
                whole
            } else {
                let cell = i64::from(side) / 4 * 256;
                let origin = (s - 2 * cell) / 2;
                grid_cell(origin, origin, cell, 2, slot - 1)
            }
        }
    }
}

fn base_angle(shape: Shape) -> i32 {
    match shape {
        Shape::Triangle | Shape::Pentagon => -90,
        Shape::Square => -45,
        Shape::Hexagon | Shape::Circle => 0,
    }
}

/// Pixels covered by `entity`, row-major.
fn entity_mask(entity: &Entity, cell: Cell, side: u32) -> Vec<bool> {
    let n = side as usize;
    let mut mask = vec![false; n * n];
    let radius = cell.side * (20 + 14 * i64::from(entity.size)) / 200;
    let center = |p: usize| p as i64 * 256 + 128;
    if entity.shape == Shape::Circle {
        let r2 = radius * radius;
        for y in 0..n {
            for x in 0..n {
                let (dx, dy) = (center(x) - cell.cx, center(y) - cell.cy);
                mask[y * n + x] = dx * dx + dy * dy <= r2;
            }
        }
        return mask;
    }
    let sides = i32::from(entity.shape.sides());
    let step = 360 / sides;
    let start = base_angle(entity.shape) + entity.angle.degrees();
    let vertices: Vec<(i64, i64)> = (0..sides)
        .map(|k| {
            let theta = start + k * step;
            (
                cell.cx + (radius * cos_q16(theta)).div_euclid(1 << 16),
                cell.cy + (radius * sin_q16(theta)).div_euclid(1 << 16),
            )
        })
        .collect();
    let mut xs: Vec<i64> = Vec::with_capacity(vertices.len());
    for y in 0..n {
        let yc = center(y);
        xs.clear();
        for k in 0..vertices.len() {
            let (x0, y0) = vertices[k];
            let (x1, y1) = vertices[(k + 1) % vertices.len()];
            if (y0 <= yc && yc < y1) || (y1 <= yc && yc < y0) {
                xs.push(x0 + ((yc - y0) * (x1 - x0)).div_euclid(y1 - y0));
            }
        }
        xs.sort_unstable();
        for pair in xs.chunks_exact(2) {
            for x in 0..n {
                let xc = center(x);
                if pair[0] <= xc && xc < pair[1] {
                    mask[y * n + x] = true;
                }
            }
        }
    }
    mask
}

pub fn fill_gray(color: u8) -> u8 {
    (255 - u32::from(color) * 255 / 9) as u8
}

fn check_side(side: u32) -> Result<(), RenderError> {
    if (MIN_SIDE..=MAX_SIDE).contains(&side) {
        Ok(())
    } else {
        Err(RenderError::UnsupportedSize(side))
    }
}

/// Square bitmap of `side` pixels; entities are drawn in slot order.
pub fn render_panel(panel: &Panel, side: u32) -> Result<Bitmap, RenderError> {
    render_entities(panel.layout(), panel.entities(), side)
}

/// As [`render_panel`] for a raw entity list (an empty list gives a white
/// bitmap).
pub fn render_entities(layout: LayoutKind, entities: &[Entity], side: u32) -> Result<Bitmap, RenderError> {
    check_side(side)?;
    let mut bmp = Bitmap::filled(side, side, WHITE);
    let n = side as usize;
    for e in entities {
        let mask = entity_mask(e, slot_cell(layout, e.slot, side), side);
        let gray = fill_gray(e.color);
        for y in 0..n {
            for x in 0..n {
                if !mask[y * n + x] {
                    continue;
                }
                let inside = |xx: usize, yy: usize| mask[yy * n + xx];
                let edge = x == 0
                    || y == 0
                    || x + 1 == n
                    || y + 1 == n
                    || !inside(x - 1, y)
                    || !inside(x + 1, y)
                    || !inside(x, y - 1)
                    || !inside(x, y + 1);
                bmp.set(x as u32, y as u32, if edge { BLACK } else { gray });
            }
        }
    }
    Ok(bmp)
}

const QUESTION_MARK: [&str; 7] = [".###.", "#...#", "....#", "...#.", "..#..", ".....", "..#.."];

fn missing_cell(side: u32) -> Bitmap {
    let mut bmp = Bitmap::filled(side, side, WHITE);
    let scale = (side / 16).max(2);
    let (w, h) = (5 * scale, 7 * scale);
    let (x0, y0) = ((side - w) / 2, (side - h) / 2);
    for (r, line) in QUESTION_MARK.iter().enumerate() {
        for (c, ch) in line.bytes().enumerate() {
            if ch != b'#' {
                continue;
            }
            for dy in 0..scale {
                for dx in 0..scale {
                    bmp.set(x0 + c as u32 * scale + dx, y0 + r as u32 * scale + dy, BLACK);
                }
            }
        }
    }
    bmp
}

/// Placement of panels on a problem sheet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SheetLayout {
    pub side: u32,
}

impl SheetLayout {
    pub fn width(&self) -> u32 {
        2 * OUTER + 7 * self.side + 5 * CELL_GAP + SECTION_GAP
    }

    pub fn height(&self) -> u32 {
        2 * OUTER + 3 * self.side + 2 * CELL_GAP
    }

    /// Top-left corner of context cell `i` (0..9, cell 8 is the missing one).
    pub fn context_origin(&self, i: usize) -> (u32, u32) {
        let pitch = self.side + CELL_GAP;
        (OUTER + (i % 3) as u32 * pitch, OUTER + (i / 3) as u32 * pitch)
    }

    /// Top-left corner of candidate `k` (0..8), two rows of four, centered
    /// vertically next to the matrix.
    pub fn candidate_origin(&self, k: usize) -> (u32, u32) {
        let pitch = self.side + CELL_GAP;
        let x0 = OUTER + 3 * self.side + 2 * CELL_GAP + SECTION_GAP;
        let y0 = OUTER + pitch / 2;
        (x0 + (k % 4) as u32 * pitch, y0 + (k / 4) as u32 * pitch)
    }
}

/// The 3×3 context (missing cell marked "?") left, the 8 candidates right.
pub fn render_problem(problem: &Problem, side: u32) -> Result<Bitmap, RenderError> {
    check_side(side)?;
    let layout = SheetLayout { side };
    let mut sheet = Bitmap::filled(layout.width(), layout.height(), SHEET_BACKGROUND);
    for (i, panel) in problem.matrix.context.iter().enumerate() {
        let (x, y) = layout.context_origin(i);
        sheet.blit(&render_panel(panel, side)?, x, y);
    }
    let (x, y) = layout.context_origin(8);
    sheet.blit(&missing_cell(side), x, y);
    for (k, panel) in problem.answers.iter().enumerate() {
        let (x, y) = layout.candidate_origin(k);
        sheet.blit(&render_panel(panel, side)?, x, y);
    }
    Ok(sheet)
}
