//! Concept families for the top/bottom and boundary concepts.
//!
//! Every family has a scene contract, a reference transform (its oracle) and
//! a generator. Background is color 0; objects are 8-connected components.
//!
//! | family | scene | output |
//! |---|---|---|
//! | `top-stripe-color` | 2+ full-width one-color rows, nothing else | 1×1 grid of the topmost stripe's color |
//! | `extract-topmost-object` | objects with disjoint bounding boxes, a unique topmost one | bounding-box crop of the topmost object |
//! | `move-object-below-stripe` | one stripe, one object above it with a gap | object moved so its top row is just below the stripe |
//! | `move-to-colored-boundary` | one full red (2) row or column, objects not touching it, lanes disjoint per side | objects slid into contact with the red line |
//! | `stripe-reaching-boundary` | one full blue (1) column, horizontal 1-row segments, exactly one touching the column | 1×n crop of that segment |
//! | `move-to-closest-vertical-boundary` | two full columns of one color, objects strictly between, row lanes disjoint | each object slid to the nearer column (ties: left) |

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{ArcGrid, ArcPair, ArcTask};
use super::ops::{components, Connectivity, Direction, GridObject, BACKGROUND};
use crate::seed;

pub const RED: u8 = 2;
pub const BLUE: u8 = 1;
const TASK_ATTEMPTS: usize = 200;
const SCENE_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyId {
    TopStripeColor,
    ExtractTopmostObject,
    MoveObjectBelowStripe,
    MoveToColoredBoundary,
    StripeReachingBoundary,
    MoveToClosestVerticalBoundary,
}

impl FamilyId {
    pub const ALL: [FamilyId; 6] = [
        FamilyId::TopStripeColor,
        FamilyId::ExtractTopmostObject,
        FamilyId::MoveObjectBelowStripe,
        FamilyId::MoveToColoredBoundary,
        FamilyId::StripeReachingBoundary,
        FamilyId::MoveToClosestVerticalBoundary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyId::TopStripeColor => "top-stripe-color",
            FamilyId::ExtractTopmostObject => "extract-topmost-object",
            FamilyId::MoveObjectBelowStripe => "move-object-below-stripe",
            FamilyId::MoveToColoredBoundary => "move-to-colored-boundary",
            FamilyId::StripeReachingBoundary => "stripe-reaching-boundary",
            FamilyId::MoveToClosestVerticalBoundary => "move-to-closest-vertical-boundary",
        }
    }

    pub fn from_name(name: &str) -> Option<FamilyId> {
        FamilyId::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Concept group: `top-bottom` or `boundary`.
    pub fn group(self) -> &'static str {
        match self {
            FamilyId::TopStripeColor | FamilyId::ExtractTopmostObject | FamilyId::MoveObjectBelowStripe => {
                "top-bottom"
            }
            _ => "boundary",
        }
    }

    /// Families whose output is a crop or summary rather than the moved scene.
    pub fn is_extraction(self) -> bool {
        matches!(
            self,
            FamilyId::TopStripeColor | FamilyId::ExtractTopmostObject | FamilyId::StripeReachingBoundary
        )
    }

    /// Smallest grid (height, width) the generator can fill.
    fn min_size(self) -> (usize, usize) {
        match self {
            FamilyId::TopStripeColor => (5, 3),
            FamilyId::ExtractTopmostObject => (5, 5),
            FamilyId::MoveObjectBelowStripe => (7, 4),
            FamilyId::MoveToColoredBoundary => (7, 7),
            FamilyId::StripeReachingBoundary => (4, 7),
            FamilyId::MoveToClosestVerticalBoundary => (4, 9),
        }
    }

    pub fn default_params(self) -> FamilyParams {
        let mut p = FamilyParams { height: (6, 12), width: (6, 12), demos: 3, tests: 1, objects: (2, 4) };
        match self {
            FamilyId::TopStripeColor => p.objects = (2, 4),
            FamilyId::ExtractTopmostObject => p.height = (7, 12),
            FamilyId::MoveObjectBelowStripe => {
                p.height = (8, 12);
                p.width = (4, 10);
                p.objects = (1, 1);
            }
            FamilyId::MoveToColoredBoundary => {
                p.height = (8, 12);
                p.width = (8, 12);
                p.objects = (1, 3);
            }
            FamilyId::StripeReachingBoundary => p.width = (7, 12),
            FamilyId::MoveToClosestVerticalBoundary => {
                p.width = (10, 16);
                p.objects = (1, 3);
            }
        }
        p
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Generator parameters; ranges are inclusive. `objects` counts stripes,
/// objects or segments depending on the family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FamilyParams {
    pub height: (usize, usize),
    pub width: (usize, usize),
    pub demos: usize,
    pub tests: usize,
    pub objects: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConceptError {
    #[error("{family}: scene contract violated: {reason}")]
    SceneContractViolation { family: FamilyId, reason: String },
    #[error("{family}: invalid parameters: {reason}")]
    InvalidParams { family: FamilyId, reason: String },
    #[error("{family}: no valid task after {attempts} attempts")]
    GenerationExhausted { family: FamilyId, attempts: usize },
}

impl FamilyParams {
    pub fn validate(&self, family: FamilyId) -> Result<(), ConceptError> {
        let bad = |reason: String| Err(ConceptError::InvalidParams { family, reason });
        let (min_h, min_w) = family.min_size();
        let range_ok = |(lo, hi): (usize, usize), min: usize| lo >= min && lo <= hi && hi <= super::grid::MAX_DIM;
        if !range_ok(self.height, min_h) {
            return bad(format!("height range {:?} must lie in {min_h}..=30", self.height));
        }
        if !range_ok(self.width, min_w) {
            return bad(format!("width range {:?} must lie in {min_w}..=30", self.width));
        }
        if !(2..=5).contains(&self.demos) {
            return bad(format!("{} demonstrations, expected 2..=5", self.demos));
        }
        if self.tests == 0 {
            return bad("at least one test pair".into());
        }
        if self.objects.0 == 0 || self.objects.0 > self.objects.1 || self.objects.1 > 6 {
            return bad(format!("object range {:?} must lie in 1..=6", self.objects));
        }
        Ok(())
    }
}

fn violation(family: FamilyId, reason: impl Into<String>) -> ConceptError {
    ConceptError::SceneContractViolation { family, reason: reason.into() }
}

/// Maximal run of full-width rows of one non-background color.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Stripe {
    top: usize,
    bottom: usize,
    color: u8,
}

fn uniform_row(grid: &ArcGrid, r: usize) -> Option<u8> {
    let c = grid.get(r, 0);
    (c != BACKGROUND && (0..grid.width()).all(|x| grid.get(r, x) == c)).then_some(c)
}

fn uniform_column(grid: &ArcGrid, c: usize) -> Option<u8> {
    let v = grid.get(0, c);
    (v != BACKGROUND && (0..grid.height()).all(|y| grid.get(y, c) == v)).then_some(v)
}

fn stripes(grid: &ArcGrid) -> Vec<Stripe> {
    let mut out: Vec<Stripe> = Vec::new();
    for r in 0..grid.height() {
        let Some(color) = uniform_row(grid, r) else { continue };
        match out.last_mut() {
            Some(s) if s.bottom + 1 == r && s.color == color => s.bottom = r,
            _ => out.push(Stripe { top: r, bottom: r, color }),
        }
    }
    out
}

fn objects(grid: &ArcGrid) -> Vec<GridObject> {
    components(grid, Connectivity::Eight, BACKGROUND)
}

fn count_color(grid: &ArcGrid, color: u8) -> usize {
    grid.cells().iter().filter(|&&c| c == color).count()
}

fn ranges_disjoint(ranges: &[(usize, usize)]) -> bool {
    ranges
        .iter()
        .enumerate()
        .all(|(i, a)| ranges[i + 1..].iter().all(|b| a.1 < b.0 || b.1 < a.0))
}

fn apply_moves(grid: &ArcGrid, moves: &[(GridObject, Direction, usize)]) -> ArcGrid {
    let mut out = grid.clone();
    for (o, _, _) in moves {
        for &(r, c) in &o.cells {
            out.set(r, c, BACKGROUND);
        }
    }
    for (o, d, k) in moves {
        let (dy, dx) = d.delta();
        let k = *k as isize;
        for &(r, c) in &o.cells {
            out.set((r as isize + dy * k) as usize, (c as isize + dx * k) as usize, o.color);
        }
    }
    out
}

/// The family's oracle; fails when `input` breaks the scene contract.
pub fn reference_transform(family: FamilyId, input: &ArcGrid) -> Result<ArcGrid, ConceptError> {
    let err = |reason: &str| Err(violation(family, reason));
    match family {
        FamilyId::TopStripeColor => {
            let s = stripes(input);
            let Some(top) = s.first() else { return err("no stripe") };
            let striped: usize = s.iter().map(|s| (s.bottom - s.top + 1) * input.width()).sum();
            if striped != input.cells().iter().filter(|&&c| c != BACKGROUND).count() {
                return err("cells outside stripes");
            }
            Ok(ArcGrid::new(1, 1, top.color))
        }
        FamilyId::ExtractTopmostObject => {
            let objs = objects(input);
            if objs.is_empty() {
                return err("no object");
            }
            let boxes: Vec<_> = objs.iter().map(GridObject::bbox).collect();
            for (i, a) in boxes.iter().enumerate() {
                for b in &boxes[i + 1..] {
                    let overlap = a.top <= b.bottom && b.top <= a.bottom && a.left <= b.right && b.left <= a.right;
                    if overlap {
                        return err("object bounding boxes overlap");
                    }
                }
            }
            let top = boxes.iter().map(|b| b.top).min().expect("non-empty");
            let mut topmost = objs.iter().zip(&boxes).filter(|(_, b)| b.top == top);
            let (obj, _) = topmost.next().expect("non-empty");
            if topmost.next().is_some() {
                return err("topmost object is not unique");
            }
            Ok(obj.crop(BACKGROUND))
        }
        FamilyId::MoveObjectBelowStripe => {
            let s = stripes(input);
            let [stripe] = s.as_slice() else { return err("expected exactly one stripe") };
            let others: Vec<GridObject> = objects(input)
                .into_iter()
                .filter(|o| o.cells.iter().any(|&(r, _)| r < stripe.top || r > stripe.bottom))
                .collect();
            let [obj] = others.as_slice() else { return err("expected exactly one object") };
            let b = obj.bbox();
            if b.bottom + 1 >= stripe.top {
                return err("object must lie above the stripe with a gap");
            }
            if stripe.bottom + b.height() >= input.height() {
                return err("object does not fit below the stripe");
            }
            let k = stripe.bottom + 1 - b.top;
            Ok(apply_moves(input, &[(obj.clone(), Direction::Down, k)]))
        }
        FamilyId::MoveToColoredBoundary => {
            let rows: Vec<usize> = (0..input.height()).filter(|&r| uniform_row(input, r) == Some(RED)).collect();
            let cols: Vec<usize> = (0..input.width()).filter(|&c| uniform_column(input, c) == Some(RED)).collect();
            let horizontal = match (rows.as_slice(), cols.as_slice()) {
                ([r], []) => Some(*r),
                ([], [_]) => None,
                _ => return err("expected exactly one red line"),
            };
            let line_len = if horizontal.is_some() { input.width() } else { input.height() };
            if count_color(input, RED) != line_len {
                return err("red cells outside the boundary line");
            }
            let line = horizontal.unwrap_or_else(|| cols[0]);
            let mut moves = Vec::new();
            let mut lanes: [Vec<(usize, usize)>; 2] = [Vec::new(), Vec::new()];
            for o in objects(input).into_iter().filter(|o| o.color != RED) {
                let b = o.bbox();
                let (lo, hi, lane) = if horizontal.is_some() {
                    (b.top, b.bottom, (b.left, b.right))
                } else {
                    (b.left, b.right, (b.top, b.bottom))
                };
                let (dir, gap, side) = if hi < line {
                    let d = if horizontal.is_some() { Direction::Down } else { Direction::Right };
                    (d, line - hi - 1, 0)
                } else {
                    let d = if horizontal.is_some() { Direction::Up } else { Direction::Left };
                    (d, lo - line - 1, 1)
                };
                if gap == 0 {
                    return err("object already touches the boundary");
                }
                lanes[side].push(lane);
                moves.push((o, dir, gap));
            }
            if moves.is_empty() {
                return err("no object");
            }
            if !lanes.iter().all(|l| ranges_disjoint(l)) {
                return err("object lanes overlap");
            }
            Ok(apply_moves(input, &moves))
        }
        FamilyId::StripeReachingBoundary => {
            let cols: Vec<usize> = (0..input.width()).filter(|&c| uniform_column(input, c) == Some(BLUE)).collect();
            let [b] = cols.as_slice() else { return err("expected exactly one blue column") };
            if count_color(input, BLUE) != input.height() {
                return err("blue cells outside the boundary");
            }
            let segments: Vec<GridObject> = components(input, Connectivity::Four, BACKGROUND)
                .into_iter()
                .filter(|o| o.color != BLUE)
                .collect();
            if segments.iter().any(|s| s.bbox().height() != 1) {
                return err("segments must be one row tall");
            }
            let touching: Vec<&GridObject> = segments
                .iter()
                .filter(|s| {
                    let bb = s.bbox();
                    bb.right + 1 == *b || bb.left == b + 1
                })
                .collect();
            let [seg] = touching.as_slice() else { return err("expected exactly one segment touching the boundary") };
            Ok(seg.crop(BACKGROUND))
        }
        FamilyId::MoveToClosestVerticalBoundary => {
            let cols: Vec<(usize, u8)> = (0..input.width())
                .filter_map(|c| uniform_column(input, c).map(|v| (c, v)))
                .collect();
            let [(left, lc), (right, rc)] = cols.as_slice() else {
                return err("expected exactly two full columns");
            };
            if lc != rc || right - left < 4 {
                return err("boundary columns must share a color and be apart");
            }
            if count_color(input, *lc) != 2 * input.height() {
                return err("boundary color used outside the boundaries");
            }
            let mut moves = Vec::new();
            let mut lanes = Vec::new();
            for o in objects(input).into_iter().filter(|o| o.color != *lc) {
                let bb = o.bbox();
                if bb.left <= left + 1 || bb.right + 1 >= *right {
                    return err("object outside or touching the boundaries");
                }
                let (gl, gr) = (bb.left - left - 1, right - bb.right - 1);
                lanes.push((bb.top, bb.bottom));
                moves.push(if gl <= gr { (o, Direction::Left, gl) } else { (o, Direction::Right, gr) });
            }
            if moves.is_empty() {
                return err("no object");
            }
            if !ranges_disjoint(&lanes) {
                return err("object lanes overlap");
            }
            Ok(apply_moves(input, &moves))
        }
    }
}

/// True iff every pair satisfies the contract and matches the reference.
pub fn validate_task(task: &ArcTask, family: FamilyId) -> bool {
    task.train
        .iter()
        .chain(&task.test)
        .all(|p| reference_transform(family, &p.input).is_ok_and(|o| o == p.output))
}

/// Families whose reference transform reproduces every demonstration.
pub fn consistent_families(task: &ArcTask) -> Vec<FamilyId> {
    FamilyId::ALL
        .into_iter()
        .filter(|&f| {
            task.train
                .iter()
                .all(|p| reference_transform(f, &p.input).is_ok_and(|o| o == p.output))
        })
        .collect()
}

/// Up to three distinct guesses per test input from the consistent families.
pub fn reference_solve(task: &ArcTask) -> Vec<Vec<ArcGrid>> {
    let families = consistent_families(task);
    task.test
        .iter()
        .map(|p| {
            let mut guesses: Vec<ArcGrid> = Vec::new();
            for &f in &families {
                if let Ok(g) = reference_transform(f, &p.input) {
                    if !guesses.contains(&g) && guesses.len() < super::grid::MAX_GUESSES {
                        guesses.push(g);
                    }
                }
            }
            guesses
        })
        .collect()
}

/// Grid under construction; placed objects reserve their 8-neighborhood.
struct Canvas {
    grid: ArcGrid,
    reserved: Vec<bool>,
}

impl Canvas {
    fn new(height: usize, width: usize) -> Canvas {
        Canvas { grid: ArcGrid::new(height, width, BACKGROUND), reserved: vec![false; height * width] }
    }

    fn fits(&self, cells: &[(usize, usize)], r0: usize, c0: usize) -> bool {
        cells.iter().all(|&(r, c)| {
            let (r, c) = (r + r0, c + c0);
            r < self.grid.height() && c < self.grid.width() && !self.reserved[r * self.grid.width() + c]
        })
    }

    fn place(&mut self, cells: &[(usize, usize)], r0: usize, c0: usize, color: u8) {
        let (h, w) = (self.grid.height() as isize, self.grid.width() as isize);
        for &(r, c) in cells {
            let (r, c) = (r + r0, c + c0);
            self.grid.set(r, c, color);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (y, x) = (r as isize + dy, c as isize + dx);
                    if y >= 0 && x >= 0 && y < h && x < w {
                        self.reserved[(y * w + x) as usize] = true;
                    }
                }
            }
        }
    }

    fn reserve_row(&mut self, r: usize) {
        let w = self.grid.width();
        self.reserved[r * w..(r + 1) * w].fill(true);
    }
}

/// Random 4-connected shape inside a box of at most `max_h` × `max_w`,
/// normalized to its bounding box.
fn random_shape<R: Rng + ?Sized>(rng: &mut R, max_h: usize, max_w: usize) -> Vec<(usize, usize)> {
    let h = rng.gen_range(1..=max_h);
    let w = rng.gen_range(1..=max_w);
    let target = rng.gen_range(1..=h * w);
    let mut cells = vec![(rng.gen_range(0..h), rng.gen_range(0..w))];
    while cells.len() < target {
        let mut frontier: Vec<(usize, usize)> = Vec::new();
        for &(r, c) in &cells {
            let around = [(r.wrapping_sub(1), c), (r + 1, c), (r, c.wrapping_sub(1)), (r, c + 1)];
            for n in around {
                if n.0 < h && n.1 < w && !cells.contains(&n) && !frontier.contains(&n) {
                    frontier.push(n);
                }
            }
        }
        let Some(&next) = frontier.choose(rng) else { break };
        cells.push(next);
    }
    let top = cells.iter().map(|c| c.0).min().expect("non-empty");
    let left = cells.iter().map(|c| c.1).min().expect("non-empty");
    let mut cells: Vec<(usize, usize)> = cells.into_iter().map(|(r, c)| (r - top, c - left)).collect();
    cells.sort_unstable();
    cells
}

fn shape_size(cells: &[(usize, usize)]) -> (usize, usize) {
    (
        cells.iter().map(|c| c.0).max().expect("non-empty") + 1,
        cells.iter().map(|c| c.1).max().expect("non-empty") + 1,
    )
}

fn distinct_colors<R: Rng + ?Sized>(rng: &mut R, n: usize, exclude: &[u8]) -> Vec<u8> {
    let mut pool: Vec<u8> = (1..10).filter(|c| !exclude.contains(c)).collect();
    pool.shuffle(rng);
    pool.truncate(n);
    pool
}

fn transpose(grid: &ArcGrid) -> ArcGrid {
    let mut out = ArcGrid::new(grid.width(), grid.height(), BACKGROUND);
    for r in 0..grid.height() {
        for c in 0..grid.width() {
            out.set(c, r, grid.get(r, c));
        }
    }
    out
}

fn sample_scene<R: Rng + ?Sized>(family: FamilyId, p: &FamilyParams, rng: &mut R) -> Option<ArcGrid> {
    let height = rng.gen_range(p.height.0..=p.height.1);
    let width = rng.gen_range(p.width.0..=p.width.1);
    let count = rng.gen_range(p.objects.0..=p.objects.1);
    match family {
        FamilyId::TopStripeColor => {
            let n = count.max(2).min(height.div_ceil(2));
            let mut rows: Vec<usize> = (0..height).collect();
            rows.shuffle(rng);
            let mut chosen: Vec<usize> = Vec::new();
            for r in rows {
                if chosen.len() < n && chosen.iter().all(|&c| c.abs_diff(r) >= 2) {
                    chosen.push(r);
                }
            }
            let colors = distinct_colors(rng, chosen.len(), &[]);
            let mut g = ArcGrid::new(height, width, BACKGROUND);
            for (&r, &color) in chosen.iter().zip(&colors) {
                for c in 0..width {
                    g.set(r, c, color);
                }
            }
            Some(g)
        }
        FamilyId::ExtractTopmostObject => {
            let n = count.max(2);
            let colors = distinct_colors(rng, n, &[]);
            let mut canvas = Canvas::new(height, width);
            let mut tops = Vec::new();
            for &color in &colors {
                let shape = random_shape(rng, 3, 3);
                let (sh, sw) = shape_size(&shape);
                let spot = (0..SCENE_ATTEMPTS)
                    .map(|_| (rng.gen_range(0..=height - sh), rng.gen_range(0..=width - sw)))
                    .find(|&(r, c)| canvas.fits(&shape, r, c) && fits_box_apart(&canvas, &shape, r, c))?;
                canvas.place(&shape, spot.0, spot.1, color);
                tops.push(spot.0);
            }
            let min = *tops.iter().min()?;
            (tops.iter().filter(|&&t| t == min).count() == 1).then_some(canvas.grid)
        }
        FamilyId::MoveObjectBelowStripe => {
            let shape = random_shape(rng, 3, 3);
            let (sh, sw) = shape_size(&shape);
            let stripe_h = rng.gen_range(1..=2);
            // Object rows 0..sh above with a gap, room for sh rows below.
            let lo = sh + 1;
            let hi = height.checked_sub(stripe_h + sh)?;
            if lo > hi || sw > width {
                return None;
            }
            let s = rng.gen_range(lo..=hi);
            let colors = distinct_colors(rng, 2, &[]);
            let mut g = ArcGrid::new(height, width, BACKGROUND);
            for r in s..s + stripe_h {
                for c in 0..width {
                    g.set(r, c, colors[0]);
                }
            }
            let r0 = rng.gen_range(0..=s - 1 - sh);
            let c0 = rng.gen_range(0..=width - sw);
            for &(r, c) in &shape {
                g.set(r0 + r, c0 + c, colors[1]);
            }
            Some(g)
        }
        FamilyId::MoveToColoredBoundary => {
            // Built with a horizontal line, transposed half of the time.
            let vertical = rng.gen_bool(0.5);
            let (h, w) = if vertical { (width, height) } else { (height, width) };
            let line = rng.gen_range(3..=h - 4);
            let mut canvas = Canvas::new(h, w);
            for r in line.saturating_sub(1)..=(line + 1).min(h - 1) {
                canvas.reserve_row(r);
            }
            let colors = distinct_colors(rng, count, &[RED]);
            let mut lanes: Vec<(usize, usize)> = Vec::new();
            for &color in &colors {
                let shape = random_shape(rng, 3, 3);
                let (sh, sw) = shape_size(&shape);
                let spot = (0..SCENE_ATTEMPTS)
                    .filter_map(|_| {
                        let above = rng.gen_bool(0.5);
                        let r = if above {
                            rng.gen_range(0..=line.checked_sub(sh + 1)?)
                        } else {
                            let top = line + 2;
                            if top + sh > h {
                                return None;
                            }
                            rng.gen_range(top..=h - sh)
                        };
                        Some((r, rng.gen_range(0..=w - sw)))
                    })
                    .find(|&(r, c)| {
                        canvas.fits(&shape, r, c) && lanes.iter().all(|&(a, b)| c + sw <= a || b < c)
                    })?;
                canvas.place(&shape, spot.0, spot.1, color);
                lanes.push((spot.1, spot.1 + sw));
            }
            let mut g = canvas.grid;
            for c in 0..w {
                g.set(line, c, RED);
            }
            Some(if vertical { transpose(&g) } else { g })
        }
        FamilyId::StripeReachingBoundary => {
            let b = rng.gen_range(2..=width - 3);
            let n = count.max(2).min(height);
            let mut rows: Vec<usize> = (0..height).collect();
            rows.shuffle(rng);
            let colors = distinct_colors(rng, n, &[BLUE]);
            let mut g = ArcGrid::new(height, width, BACKGROUND);
            for r in 0..height {
                g.set(r, b, BLUE);
            }
            for (i, (&r, &color)) in rows.iter().zip(&colors).enumerate() {
                let left_side = rng.gen_bool(0.5);
                let (start, end) = match (i == 0, left_side) {
                    (true, true) => (rng.gen_range(0..b), b - 1),
                    (true, false) => (b + 1, rng.gen_range(b + 1..width)),
                    (false, true) => {
                        let s = rng.gen_range(0..=b - 2);
                        (s, rng.gen_range(s..=b - 2))
                    }
                    (false, false) => {
                        let s = rng.gen_range(b + 2..width);
                        (s, rng.gen_range(s..width))
                    }
                };
                for c in start..=end {
                    g.set(r, c, color);
                }
            }
            Some(g)
        }
        FamilyId::MoveToClosestVerticalBoundary => {
            let left = rng.gen_range(0..=1);
            let right = width - 1 - rng.gen_range(0..=1);
            let boundary = *distinct_colors(rng, 1, &[]).first()?;
            let colors = distinct_colors(rng, count, &[boundary]);
            let mut canvas = Canvas::new(height, width);
            let mut lanes: Vec<(usize, usize)> = Vec::new();
            for &color in &colors {
                let shape = random_shape(rng, 3, 3);
                let (sh, sw) = shape_size(&shape);
                if left + 2 + sw > right - 1 {
                    return None;
                }
                let spot = (0..SCENE_ATTEMPTS)
                    .map(|_| (rng.gen_range(0..=height - sh), rng.gen_range(left + 2..=right - 1 - sw)))
                    .find(|&(r, c)| {
                        let (gl, gr) = (c - left - 1, right - (c + sw - 1) - 1);
                        gl != gr && canvas.fits(&shape, r, c) && lanes.iter().all(|&(a, b)| r + sh <= a || b < r)
                    })?;
                canvas.place(&shape, spot.0, spot.1, color);
                lanes.push((spot.0, spot.0 + sh));
            }
            let mut g = canvas.grid;
            for r in 0..height {
                g.set(r, left, boundary);
                g.set(r, right, boundary);
            }
            Some(g)
        }
    }
}

/// Keeps bounding boxes of extraction objects apart from placed objects.
fn fits_box_apart(canvas: &Canvas, shape: &[(usize, usize)], r0: usize, c0: usize) -> bool {
    let (sh, sw) = shape_size(shape);
    (r0..r0 + sh).all(|r| (c0..c0 + sw).all(|c| !canvas.reserved[r * canvas.grid.width() + c]))
}

fn colors_of(grid: &ArcGrid) -> BTreeSet<u8> {
    grid.cells().iter().copied().filter(|&c| c != BACKGROUND).collect()
}

fn occupied(grid: &ArcGrid) -> (usize, usize, Vec<usize>) {
    let cells = grid
        .cells()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != BACKGROUND)
        .map(|(i, _)| i)
        .collect();
    (grid.height(), grid.width(), cells)
}

/// Pairwise different color sets and occupied positions across inputs;
/// extraction families also need pairwise different outputs.
pub fn is_diverse(pairs: &[ArcPair], family: FamilyId) -> bool {
    pairs.iter().enumerate().all(|(i, a)| {
        pairs[i + 1..].iter().all(|b| {
            colors_of(&a.input) != colors_of(&b.input)
                && occupied(&a.input) != occupied(&b.input)
                && (!family.is_extraction() || a.output != b.output)
        })
    })
}

pub fn task_id(family: FamilyId, seed: u64) -> String {
    format!("{}-{seed:016x}", family.name())
}

/// Deterministic in `(family, params, seed)`.
pub fn generate_task(family: FamilyId, params: &FamilyParams, seed: u64) -> Result<ArcTask, ConceptError> {
    params.validate(family)?;
    let mut rng = seed::rng(seed);
    let total = params.demos + params.tests;
    for _ in 0..TASK_ATTEMPTS {
        let mut pairs = Vec::with_capacity(total);
        for _ in 0..total {
            let pair = (0..SCENE_ATTEMPTS).find_map(|_| {
                let input = sample_scene(family, params, &mut rng)?;
                let output = reference_transform(family, &input).ok()?;
                (output != input).then_some(ArcPair { input, output })
            });
            match pair {
                Some(p) => pairs.push(p),
                None => break,
            }
        }
        if pairs.len() != total || !is_diverse(&pairs, family) {
            continue;
        }
        let test = pairs.split_off(params.demos);
        return Ok(ArcTask {
            id: task_id(family, seed),
            train: pairs,
            test,
            concept_tag: Some(family.name().to_string()),
        });
    }
    Err(ConceptError::GenerationExhausted { family, attempts: TASK_ATTEMPTS })
}

pub const TOP_BOTTOM_SUITE: [(FamilyId, usize); 3] = [
    (FamilyId::TopStripeColor, 5),
    (FamilyId::ExtractTopmostObject, 5),
    (FamilyId::MoveObjectBelowStripe, 4),
];

pub const BOUNDARY_SUITE: [(FamilyId, usize); 3] = [
    (FamilyId::MoveToColoredBoundary, 4),
    (FamilyId::StripeReachingBoundary, 4),
    (FamilyId::MoveToClosestVerticalBoundary, 4),
];

/// Generates `count` tasks per family with default parameters; task `i` of
/// the family at position `f` of [`FamilyId::ALL`] uses
/// `derive_seed(master, [f, i])`.
pub fn family_suite(plan: &[(FamilyId, usize)], master: u64) -> Result<Vec<ArcTask>, ConceptError> {
    let jobs: Vec<(FamilyId, usize)> = plan
        .iter()
        .flat_map(|&(f, n)| (0..n).map(move |i| (f, i)))
        .collect();
    jobs.par_iter()
        .map(|&(f, i)| {
            let index = FamilyId::ALL.iter().position(|&x| x == f).expect("listed") as u64;
            generate_task(f, &f.default_params(), seed::derive_seed(master, &[index, i as u64]))
        })
        .collect()
}

/// The 14 top/bottom tasks followed by the 12 boundary tasks.
pub fn probe_suite(master: u64) -> Result<Vec<ArcTask>, ConceptError> {
    let mut plan = TOP_BOTTOM_SUITE.to_vec();
    plan.extend(BOUNDARY_SUITE);
    family_suite(&plan, master)
}
