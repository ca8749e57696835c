//! Connected components and translation primitives.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::grid::ArcGrid;

pub const BACKGROUND: u8 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
            Connectivity::Eight => &[(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)],
        }
    }
}

/// Inclusive bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BBox {
    pub top: usize,
    pub left: usize,
    pub bottom: usize,
    pub right: usize,
}

impl BBox {
    pub fn height(&self) -> usize {
        self.bottom - self.top + 1
    }

    pub fn width(&self) -> usize {
        self.right - self.left + 1
    }
}

/// Same-colored connected cells, sorted row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridObject {
    pub color: u8,
    pub cells: Vec<(usize, usize)>,
}

impl GridObject {
    pub fn new(color: u8, mut cells: Vec<(usize, usize)>) -> GridObject {
        assert!(!cells.is_empty(), "objects have at least one cell");
        cells.sort_unstable();
        cells.dedup();
        GridObject { color, cells }
    }

    pub fn bbox(&self) -> BBox {
        let top = self.cells.iter().map(|c| c.0).min().expect("non-empty");
        let bottom = self.cells.iter().map(|c| c.0).max().expect("non-empty");
        let left = self.cells.iter().map(|c| c.1).min().expect("non-empty");
        let right = self.cells.iter().map(|c| c.1).max().expect("non-empty");
        BBox { top, left, bottom, right }
    }

    /// The object alone on a background grid of its bounding-box size.
    pub fn crop(&self, background: u8) -> ArcGrid {
        let b = self.bbox();
        let mut g = ArcGrid::new(b.height(), b.width(), background);
        for &(r, c) in &self.cells {
            g.set(r - b.top, c - b.left, self.color);
        }
        g
    }
}

/// Maximal same-color components of non-background cells, ordered by their
/// first cell in row-major order.
pub fn components(grid: &ArcGrid, connectivity: Connectivity, background: u8) -> Vec<GridObject> {
    let (h, w) = (grid.height(), grid.width());
    let mut seen = vec![false; h * w];
    let mut out = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let color = grid.get(r, c);
            if color == background || seen[r * w + c] {
                continue;
            }
            let mut cells = Vec::new();
            let mut queue = VecDeque::from([(r, c)]);
            seen[r * w + c] = true;
            while let Some((y, x)) = queue.pop_front() {
                cells.push((y, x));
                for &(dy, dx) in connectivity.offsets() {
                    let (ny, nx) = (y as isize + dy, x as isize + dx);
                    if !grid.in_bounds(ny, nx) {
                        continue;
                    }
                    let (ny, nx) = (ny as usize, nx as usize);
                    if !seen[ny * w + nx] && grid.get(ny, nx) == color {
                        seen[ny * w + nx] = true;
                        queue.push_back((ny, nx));
                    }
                }
            }
            out.push(GridObject::new(color, cells));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::Up => (-1, 0),
            Direction::Down => (1, 0),
            Direction::Left => (0, -1),
            Direction::Right => (0, 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OpError {
    #[error("object cell ({0}, {1}) does not hold the object's color")]
    ObjectNotInGrid(usize, usize),
}

/// Result of a translation; `blocked` means the object was already in
/// contact and the grid is returned unchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Translation {
    pub grid: ArcGrid,
    pub object: GridObject,
    pub steps: usize,
    pub blocked: bool,
}

fn check_present(grid: &ArcGrid, object: &GridObject) -> Result<(), OpError> {
    for &(r, c) in &object.cells {
        if r >= grid.height() || c >= grid.width() || grid.get(r, c) != object.color {
            return Err(OpError::ObjectNotInGrid(r, c));
        }
    }
    Ok(())
}

/// Number of free steps before the object touches a non-background cell
/// outside itself or the grid edge.
pub fn free_distance(grid: &ArcGrid, object: &GridObject, direction: Direction, background: u8) -> usize {
    let own: BTreeSet<(usize, usize)> = object.cells.iter().copied().collect();
    let (dy, dx) = direction.delta();
    let mut steps = 0;
    loop {
        let k = steps as isize + 1;
        let free = object.cells.iter().all(|&(r, c)| {
            let (nr, nc) = (r as isize + dy * k, c as isize + dx * k);
            if !grid.in_bounds(nr, nc) {
                return false;
            }
            let (nr, nc) = (nr as usize, nc as usize);
            own.contains(&(nr, nc)) || grid.get(nr, nc) == background
        });
        if !free {
            return steps;
        }
        steps += 1;
    }
}

/// Moves `object` by `steps` cells; the caller guarantees the path is free.
pub fn shift(grid: &ArcGrid, object: &GridObject, direction: Direction, steps: usize, background: u8) -> (ArcGrid, GridObject) {
    let (dy, dx) = direction.delta();
    let k = steps as isize;
    let mut out = grid.clone();
    for &(r, c) in &object.cells {
        out.set(r, c, background);
    }
    let cells: Vec<(usize, usize)> = object
        .cells
        .iter()
        .map(|&(r, c)| ((r as isize + dy * k) as usize, (c as isize + dx * k) as usize))
        .collect();
    for &(r, c) in &cells {
        out.set(r, c, object.color);
    }
    (out, GridObject::new(object.color, cells))
}

/// Slides `object` along `direction` until it is adjacent to an obstacle
/// (any other non-background cell) or the grid edge.
pub fn translate_until_contact(
    grid: &ArcGrid,
    object: &GridObject,
    direction: Direction,
    background: u8,
) -> Result<Translation, OpError> {
    check_present(grid, object)?;
    let steps = free_distance(grid, object, direction, background);
    if steps == 0 {
        return Ok(Translation { grid: grid.clone(), object: object.clone(), steps: 0, blocked: true });
    }
    let (grid, object) = shift(grid, object, direction, steps, background);
    Ok(Translation { grid, object, steps, blocked: false })
}

/// Moves every object in `direction` until nothing can move. At each step
/// the object with the smallest positive free distance moves first (ties:
/// earlier in `objects`).
pub fn settle(
    grid: &ArcGrid,
    objects: &[GridObject],
    direction: Direction,
    background: u8,
) -> Result<ArcGrid, OpError> {
    for o in objects {
        check_present(grid, o)?;
    }
    let mut grid = grid.clone();
    let mut objects = objects.to_vec();
    loop {
        let next = objects
            .iter()
            .enumerate()
            .map(|(i, o)| (free_distance(&grid, o, direction, background), i))
            .filter(|&(d, _)| d > 0)
            .min();
        let Some((d, i)) = next else { return Ok(grid) };
        let (g, moved) = shift(&grid, &objects[i], direction, d, background);
        grid = g;
        objects[i] = moved;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[&str]) -> ArcGrid {
        let rows: Vec<Vec<u8>> = rows.iter().map(|r| r.bytes().map(|b| b - b'0').collect()).collect();
        ArcGrid::from_rows(&rows).unwrap()
    }

    #[test]
    fn diagonal_cells_depend_on_connectivity() {
        let g = grid(&["30", "03"]);
        assert_eq!(components(&g, Connectivity::Four, 0).len(), 2);
        assert_eq!(components(&g, Connectivity::Eight, 0).len(), 1);
        assert!(components(&grid(&["00", "00"]), Connectivity::Four, 0).is_empty());
    }

    #[test]
    fn single_cell_falls_to_the_bottom() {
        let g = grid(&["4", "0", "0", "0", "0"]);
        let o = GridObject::new(4, vec![(0, 0)]);
        let t = translate_until_contact(&g, &o, Direction::Down, 0).unwrap();
        assert_eq!(t.grid, grid(&["0", "0", "0", "0", "4"]));
        assert_eq!(t.steps, 4);
        assert!(!t.blocked);
    }

    #[test]
    fn touching_object_is_blocked() {
        let g = grid(&["04", "02"]);
        let o = GridObject::new(4, vec![(0, 1)]);
        let t = translate_until_contact(&g, &o, Direction::Down, 0).unwrap();
        assert!(t.blocked);
        assert_eq!(t.grid, g);
        let missing = GridObject::new(5, vec![(0, 0)]);
        assert!(translate_until_contact(&g, &missing, Direction::Down, 0).is_err());
    }

    #[test]
    fn stacked_objects_settle() {
        let g = grid(&["1", "0", "2", "0", "0"]);
        let objs = components(&g, Connectivity::Four, 0);
        assert_eq!(settle(&g, &objs, Direction::Down, 0).unwrap(), grid(&["0", "0", "0", "1", "2"]));
    }
}
