//! Grid geometry: cells, blocked edges and explored-cell masks.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

/// A grid cell addressed by 0-based `(a, b)` indices.
///
/// `a` runs along the width of the area and `b` along its height. Cells are
/// ordered lexicographically by `(a, b)`, which is also the row-major order
/// used everywhere a canonical cell ordering is needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub a: u16,
    pub b: u16,
}

impl Cell {
    pub const fn new(a: u16, b: u16) -> Self {
        Self { a, b }
    }

    /// Coordinate deltas `(da, db)` from `self` to `other`.
    pub fn delta(self, other: Cell) -> (i32, i32) {
        (other.a as i32 - self.a as i32, other.b as i32 - self.b as i32)
    }

    /// True when `other` is `self` or one of its eight neighbours.
    pub fn is_adjacent_or_same(self, other: Cell) -> bool {
        let (da, db) = self.delta(other);
        da.abs() <= 1 && db.abs() <= 1
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.a, self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid cell `{0}`: expected `a,b` with non-negative integers")]
pub struct ParseCellError(pub String);

impl FromStr for Cell {
    type Err = ParseCellError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseCellError(s.to_string());
        let (a, b) = s.split_once(',').ok_or_else(err)?;
        let a = a.trim().parse().map_err(|_| err())?;
        let b = b.trim().parse().map_err(|_| err())?;
        Ok(Cell::new(a, b))
    }
}

/// Unordered pair of cells, stored with the smaller cell first.
pub type Edge = (Cell, Cell);

pub fn normalize_edge(p: Cell, q: Cell) -> Edge {
    if p <= q {
        (p, q)
    } else {
        (q, p)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid dimensions must be positive (width {width_m} m, height {height_m} m, cell {cell_m} m)")]
    NonPositive { width_m: f64, height_m: f64, cell_m: f64 },
    #[error("{dimension} of {value} m is not an integer multiple of the cell side {cell_m} m")]
    NotMultiple { dimension: &'static str, value: f64, cell_m: f64 },
    #[error("grid of {cols}x{rows} cells exceeds the supported 65535 cells per side")]
    TooLarge { cols: usize, rows: usize },
    #[error("blocked edge {0}-{1} references a cell outside the grid")]
    EdgeOutside(Cell, Cell),
    #[error("blocked edge {0}-{1} does not join two distinct adjacent or diagonal cells")]
    EdgeNotAdjacent(Cell, Cell),
    #[error("cell {0} is unreachable: blocked edges disconnect the grid")]
    Unreachable(Cell),
}

/// Rectangular exploration area split into square cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width_m: f64,
    height_m: f64,
    cell_m: f64,
    cols: usize,
    rows: usize,
    blocked: BTreeSet<Edge>,
}

fn cell_count_along(dimension: &'static str, value: f64, cell_m: f64) -> Result<usize, GridError> {
    let ratio = value / cell_m;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * ratio.max(1.0) {
        return Err(GridError::NotMultiple { dimension, value, cell_m });
    }
    Ok(rounded as usize)
}

impl GridMap {
    /// Builds and validates a grid, including the connectivity of the
    /// unblocked adjacency graph.
    pub fn new(
        width_m: f64,
        height_m: f64,
        cell_m: f64,
        blocked_edges: impl IntoIterator<Item = Edge>,
    ) -> Result<Self, GridError> {
        if !(width_m > 0.0 && height_m > 0.0 && cell_m > 0.0) || !width_m.is_finite() || !height_m.is_finite() {
            return Err(GridError::NonPositive { width_m, height_m, cell_m });
        }
        let cols = cell_count_along("width", width_m, cell_m)?;
        let rows = cell_count_along("height", height_m, cell_m)?;
        if cols > u16::MAX as usize || rows > u16::MAX as usize {
            return Err(GridError::TooLarge { cols, rows });
        }
        let mut grid = GridMap { width_m, height_m, cell_m, cols, rows, blocked: BTreeSet::new() };
        for (p, q) in blocked_edges {
            if !grid.contains(p) || !grid.contains(q) {
                return Err(GridError::EdgeOutside(p, q));
            }
            if p == q || !p.is_adjacent_or_same(q) {
                return Err(GridError::EdgeNotAdjacent(p, q));
            }
            grid.blocked.insert(normalize_edge(p, q));
        }
        if let Some(cell) = grid.first_unreachable() {
            return Err(GridError::Unreachable(cell));
        }
        Ok(grid)
    }

    pub fn width_m(&self) -> f64 {
        self.width_m
    }

    pub fn height_m(&self) -> f64 {
        self.height_m
    }

    pub fn cell_m(&self) -> f64 {
        self.cell_m
    }

    /// Number of cells along the width (`a` axis).
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of cells along the height (`b` axis).
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cell_count(&self) -> usize {
        self.cols * self.rows
    }

    pub fn blocked_edges(&self) -> &BTreeSet<Edge> {
        &self.blocked
    }

    pub fn contains(&self, cell: Cell) -> bool {
        (cell.a as usize) < self.cols && (cell.b as usize) < self.rows
    }

    /// Row-major index of a cell inside the grid.
    pub fn index(&self, cell: Cell) -> usize {
        debug_assert!(self.contains(cell));
        cell.a as usize * self.rows + cell.b as usize
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new((index / self.rows) as u16, (index % self.rows) as u16)
    }

    /// All cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cell_count()).map(|i| self.cell_at(i))
    }

    pub fn is_blocked(&self, p: Cell, q: Cell) -> bool {
        self.blocked.contains(&normalize_edge(p, q))
    }

    /// The cell itself and every in-grid neighbour reachable through an
    /// unblocked edge, in row-major order.
    pub fn moves_from(&self, from: Cell) -> Vec<Cell> {
        let mut out = Vec::with_capacity(9);
        for da in -1i32..=1 {
            for db in -1i32..=1 {
                let a = from.a as i32 + da;
                let b = from.b as i32 + db;
                if a < 0 || b < 0 {
                    continue;
                }
                let to = Cell::new(a as u16, b as u16);
                if !self.contains(to) {
                    continue;
                }
                if to != from && self.is_blocked(from, to) {
                    continue;
                }
                out.push(to);
            }
        }
        out
    }

    /// Center of a cell in metres, measured from the grid origin corner.
    pub fn center(&self, cell: Cell) -> (f64, f64) {
        ((cell.a as f64 + 0.5) * self.cell_m, (cell.b as f64 + 0.5) * self.cell_m)
    }

    fn first_unreachable(&self) -> Option<Cell> {
        let n = self.cell_count();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([Cell::new(0, 0)]);
        seen[0] = true;
        while let Some(cell) = queue.pop_front() {
            for next in self.moves_from(cell) {
                let i = self.index(next);
                if !seen[i] {
                    seen[i] = true;
                    queue.push_back(next);
                }
            }
        }
        seen.iter().position(|s| !s).map(|i| self.cell_at(i))
    }

    /// Shortest unblocked path lengths (in moves) from `target` to every cell.
    pub fn hop_distances(&self, target: Cell) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.cell_count()];
        let mut queue = VecDeque::from([target]);
        dist[self.index(target)] = 0;
        while let Some(cell) = queue.pop_front() {
            let d = dist[self.index(cell)];
            for next in self.moves_from(cell) {
                let i = self.index(next);
                if dist[i] == usize::MAX {
                    dist[i] = d + 1;
                    queue.push_back(next);
                }
            }
        }
        dist
    }
}

/// Set of explored cells, indexed by row-major cell index.
///
/// Backed by a 128-bit word; simulation and search are limited to grids of
/// at most [`CellMask::CAPACITY`] cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellMask(pub u128);

impl CellMask {
    pub const CAPACITY: usize = 128;

    pub fn empty() -> Self {
        Self(0)
    }

    pub fn single(index: usize) -> Self {
        Self(1u128 << index)
    }

    pub fn contains(self, index: usize) -> bool {
        self.0 >> index & 1 == 1
    }

    pub fn insert(&mut self, index: usize) {
        self.0 |= 1u128 << index;
    }

    pub fn with(self, index: usize) -> Self {
        Self(self.0 | 1u128 << index)
    }

    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_superset(self, other: CellMask) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(i)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid4() -> GridMap {
        GridMap::new(40.0, 40.0, 10.0, []).unwrap()
    }

    #[test]
    fn dimensions_and_indexing() {
        let g = grid4();
        assert_eq!((g.cols(), g.rows(), g.cell_count()), (4, 4, 16));
        for (i, c) in g.cells().enumerate() {
            assert_eq!(g.index(c), i);
        }
        assert_eq!(g.cell_at(5), Cell::new(1, 1));
    }

    #[test]
    fn rejects_non_multiple_dimensions() {
        assert!(matches!(GridMap::new(45.0, 40.0, 10.0, []), Err(GridError::NotMultiple { .. })));
        assert!(matches!(GridMap::new(0.0, 40.0, 10.0, []), Err(GridError::NonPositive { .. })));
    }

    #[test]
    fn corner_moves() {
        let g = grid4();
        let moves = g.moves_from(Cell::new(0, 0));
        assert_eq!(moves, vec![Cell::new(0, 0), Cell::new(0, 1), Cell::new(1, 0), Cell::new(1, 1)]);
        assert_eq!(g.moves_from(Cell::new(1, 1)).len(), 9);
    }

    #[test]
    fn isolating_a_corner_is_rejected() {
        let corner = Cell::new(3, 3);
        let edges = [
            (corner, Cell::new(2, 3)),
            (corner, Cell::new(3, 2)),
            (corner, Cell::new(2, 2)),
        ];
        assert_eq!(GridMap::new(40.0, 40.0, 10.0, edges), Err(GridError::Unreachable(corner)));
    }

    #[test]
    fn rejects_non_adjacent_edge() {
        let err = GridMap::new(40.0, 40.0, 10.0, [(Cell::new(0, 0), Cell::new(0, 2))]).unwrap_err();
        assert!(matches!(err, GridError::EdgeNotAdjacent(..)));
    }

    #[test]
    fn hop_distances_respect_blocks() {
        let g = GridMap::new(20.0, 10.0, 10.0, [(Cell::new(0, 0), Cell::new(1, 0))]);
        // a 2x1 grid with its only edge blocked is disconnected
        assert!(g.is_err());
        let g = grid4();
        let d = g.hop_distances(Cell::new(0, 0));
        assert_eq!(d[g.index(Cell::new(3, 3))], 3);
    }

    #[test]
    fn mask_ops() {
        let mut m = CellMask::single(3);
        m.insert(100);
        assert!(m.contains(3) && m.contains(100) && !m.contains(4));
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![3, 100]);
        assert!(m.is_superset(CellMask::single(100)));
    }

    #[test]
    fn cell_parse_roundtrip() {
        let c: Cell = " 3, 12".parse().unwrap();
        assert_eq!(c, Cell::new(3, 12));
        assert_eq!(c.to_string().parse::<Cell>().unwrap(), c);
        assert!("3;4".parse::<Cell>().is_err());
    }
}
