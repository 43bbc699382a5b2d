use serde::Serialize;

use super::CodecError;
use crate::geometry::Container;

/// Coordinates closer than this are treated as equal.
pub const COORD_TOLERANCE: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Separator {
    Row(usize),
    Col(usize),
}

/// Placement of every global site on a `height × width` lattice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridMap {
    /// Columns.
    pub width: usize,
    /// Rows.
    pub height: usize,
    /// `(row, col)` per global site id.
    pub placement: Vec<(usize, usize)>,
    pub dummy_separator: Option<Separator>,
    /// Inverse of `placement`, row-major.
    cell_site: Vec<Option<usize>>,
}

impl GridMap {
    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    pub fn cell_of(&self, site: usize) -> (usize, usize) {
        self.placement[site]
    }

    /// Row-major flat cell index of a site.
    pub fn flat_cell(&self, site: usize) -> usize {
        let (r, c) = self.placement[site];
        r * self.width + c
    }

    pub fn site_at(&self, row: usize, col: usize) -> Option<usize> {
        self.cell_site[row * self.width + col]
    }
}

/// Rank of each value among the distinct values, where sorted neighbours
/// closer than [`COORD_TOLERANCE`] are merged into one class.
fn coordinate_ranks(values: &[f64]) -> (Vec<usize>, usize) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0; values.len()];
    let mut rank = 0;
    for (k, &i) in order.iter().enumerate() {
        if k > 0 && values[i] - values[order[k - 1]] >= COORD_TOLERANCE {
            rank += 1;
        }
        ranks[i] = rank;
    }
    let distinct = if values.is_empty() { 0 } else { rank + 1 };
    (ranks, distinct)
}

/// Lays out containers on one grid: the main board by coordinate rank, then a
/// dummy separator line, then one extra row (or column) per further container.
pub fn build_grid(containers: &[Container]) -> Result<GridMap, CodecError> {
    let board = containers.first().ok_or(CodecError::NoContainers)?;
    let xs: Vec<f64> = board.sites.iter().map(|s| s.x).collect();
    let ys: Vec<f64> = board.sites.iter().map(|s| s.y).collect();
    let (cols, width) = coordinate_ranks(&xs);
    let (rows, height) = coordinate_ranks(&ys);
    let mut placement: Vec<(usize, usize)> = rows.into_iter().zip(cols).collect();
    {
        let mut seen = std::collections::HashSet::new();
        for (i, cell) in placement.iter().enumerate() {
            if !seen.insert(*cell) {
                return Err(CodecError::Collision { site: i, row: cell.0, col: cell.1 });
            }
        }
    }

    let extras = &containers[1..];
    if extras.is_empty() {
        return Ok(finish(width, height, placement, None));
    }
    let longest = extras.iter().map(Container::len).max().unwrap_or(0);
    let lines = extras.len() + 1;
    let as_rows = (longest <= width).then_some(lines * width);
    let as_cols = (longest <= height).then_some(lines * height);
    let use_rows = match (as_rows, as_cols) {
        (Some(r), Some(c)) => r <= c,
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (None, None) => {
            return Err(CodecError::UnsupportedLayout {
                capacity: longest,
                limit: width.max(height),
            })
        }
    };
    let (w, h, sep) = if use_rows {
        (width, height + lines, Separator::Row(height))
    } else {
        (width + lines, height, Separator::Col(width))
    };
    for (k, c) in extras.iter().enumerate() {
        let line = k + 1 + if use_rows { height } else { width };
        for i in 0..c.len() {
            placement.push(if use_rows { (line, i) } else { (i, line) });
        }
    }
    Ok(finish(w, h, placement, Some(sep)))
}

fn finish(
    width: usize,
    height: usize,
    placement: Vec<(usize, usize)>,
    dummy_separator: Option<Separator>,
) -> GridMap {
    let mut cell_site = vec![None; width * height];
    for (site, &(r, c)) in placement.iter().enumerate() {
        cell_site[r * width + c] = Some(site);
    }
    GridMap {
        width,
        height,
        placement,
        dummy_separator,
        cell_site,
    }
}
