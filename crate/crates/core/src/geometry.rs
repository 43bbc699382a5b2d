//! Board graphs and auxiliary containers.
//!
//! Every site carries a physical position in `[0, 1]²` (the kind of coordinate
//! a GUI would draw from) plus integer lattice coordinates used by the rules
//! engine to walk directions. Tensor placement only ever looks at the
//! physical coordinates.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::player::Player;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tiling {
    Square,
    HexRhombus,
    HexHex,
    Hand,
    /// Explicit points with no adjacency; used for layout fixtures.
    Custom,
}

impl Tiling {
    pub fn is_hex(self) -> bool {
        matches!(self, Tiling::HexRhombus | Tiling::HexHex)
    }

    /// Step directions available on this tiling, orthogonal classes first.
    pub fn directions(self) -> &'static [Direction] {
        match self {
            Tiling::Square => &SQUARE_DIRECTIONS,
            Tiling::HexRhombus | Tiling::HexHex => &HEX_DIRECTIONS,
            Tiling::Hand | Tiling::Custom => &[],
        }
    }

    /// One representative per line axis.
    pub fn line_axes(self) -> &'static [(i32, i32)] {
        match self {
            Tiling::Square => &[(0, 1), (1, 0), (1, 1), (1, -1)],
            Tiling::HexRhombus | Tiling::HexHex => &[(0, 1), (1, 0), (1, -1)],
            Tiling::Hand | Tiling::Custom => &[],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Adjacency {
    Orthogonal,
    Diagonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Direction {
    pub dr: i32,
    pub dc: i32,
    pub class: Adjacency,
}

const fn dir(dr: i32, dc: i32, class: Adjacency) -> Direction {
    Direction { dr, dc, class }
}

static SQUARE_DIRECTIONS: [Direction; 8] = [
    dir(1, 0, Adjacency::Orthogonal),
    dir(0, 1, Adjacency::Orthogonal),
    dir(-1, 0, Adjacency::Orthogonal),
    dir(0, -1, Adjacency::Orthogonal),
    dir(1, 1, Adjacency::Diagonal),
    dir(1, -1, Adjacency::Diagonal),
    dir(-1, 1, Adjacency::Diagonal),
    dir(-1, -1, Adjacency::Diagonal),
];

// Axial neighbours; hex cells only have one adjacency class.
static HEX_DIRECTIONS: [Direction; 6] = [
    dir(1, 0, Adjacency::Orthogonal),
    dir(0, 1, Adjacency::Orthogonal),
    dir(-1, 0, Adjacency::Orthogonal),
    dir(0, -1, Adjacency::Orthogonal),
    dir(1, -1, Adjacency::Orthogonal),
    dir(-1, 1, Adjacency::Orthogonal),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Site {
    /// Container-local index.
    pub id: usize,
    pub x: f64,
    pub y: f64,
    /// Lattice row/column, non-negative.
    pub row: i32,
    pub col: i32,
    pub orthogonal_neighbors: Vec<usize>,
    pub diagonal_neighbors: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContainerKind {
    MainBoard,
    Hand,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Container {
    pub name: String,
    pub kind: ContainerKind,
    pub owner: Option<Player>,
    pub tiling: Tiling,
    pub sites: Vec<Site>,
    /// `steps[site * n_dirs + d]` is the neighbour of `site` along direction `d`.
    steps: Vec<Option<usize>>,
}

impl Container {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn directions(&self) -> &'static [Direction] {
        self.tiling.directions()
    }

    /// Neighbour of `site` along direction index `d` of [`Container::directions`].
    pub fn step(&self, site: usize, d: usize) -> Option<usize> {
        let n = self.directions().len();
        self.steps[site * n + d]
    }

    /// Neighbour of `site` along an arbitrary lattice offset that is one of
    /// this tiling's directions.
    pub fn step_by(&self, site: usize, dr: i32, dc: i32) -> Option<usize> {
        let d = self
            .directions()
            .iter()
            .position(|d| d.dr == dr && d.dc == dc)?;
        self.step(site, d)
    }

    pub fn adjacency_edges(&self) -> usize {
        self.sites
            .iter()
            .map(|s| s.orthogonal_neighbors.len() + s.diagonal_neighbors.len())
            .sum::<usize>()
            / 2
    }

    fn from_lattice(
        name: &str,
        kind: ContainerKind,
        owner: Option<Player>,
        tiling: Tiling,
        cells: Vec<(i32, i32, f64, f64)>,
    ) -> Container {
        let index: HashMap<(i32, i32), usize> = cells
            .iter()
            .enumerate()
            .map(|(i, &(r, c, _, _))| ((r, c), i))
            .collect();
        let dirs = tiling.directions();
        let mut steps = Vec::with_capacity(cells.len() * dirs.len());
        let mut sites = Vec::with_capacity(cells.len());
        for (id, &(row, col, x, y)) in cells.iter().enumerate() {
            let mut orthogonal_neighbors = Vec::new();
            let mut diagonal_neighbors = Vec::new();
            for d in dirs {
                let n = index.get(&(row + d.dr, col + d.dc)).copied();
                steps.push(n);
                if let Some(n) = n {
                    match d.class {
                        Adjacency::Orthogonal => orthogonal_neighbors.push(n),
                        Adjacency::Diagonal => diagonal_neighbors.push(n),
                    }
                }
            }
            orthogonal_neighbors.sort_unstable();
            diagonal_neighbors.sort_unstable();
            sites.push(Site {
                id,
                x,
                y,
                row,
                col,
                orthogonal_neighbors,
                diagonal_neighbors,
            });
        }
        Container {
            name: name.to_string(),
            kind,
            owner,
            tiling,
            sites,
            steps,
        }
    }

    /// A container of isolated points, for layout fixtures and tests.
    pub fn custom(name: &str, kind: ContainerKind, points: &[(f64, f64)]) -> Container {
        let cells = points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (0, i as i32, x.clamp(0.0, 1.0), y.clamp(0.0, 1.0)))
            .collect();
        Container::from_lattice(name, kind, None, Tiling::Custom, cells)
    }
}

fn unit(value: usize, extent: usize) -> f64 {
    value as f64 / extent.saturating_sub(1).max(1) as f64
}

/// Shifts raw coordinates to start at zero and scales each axis by its maximum.
fn normalize(raw: &mut [(i32, i32, f64, f64)]) {
    let (min_x, max_x) = extent(raw.iter().map(|c| c.2));
    let (min_y, max_y) = extent(raw.iter().map(|c| c.3));
    for c in raw.iter_mut() {
        c.2 = scale(c.2 - min_x, max_x - min_x);
        c.3 = scale(c.3 - min_y, max_y - min_y);
    }
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

fn scale(v: f64, span: f64) -> f64 {
    if span > 0.0 {
        (v / span).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// `rows × cols` square board, row-major site ids.
pub fn generate_square(rows: usize, cols: usize) -> Container {
    let mut cells = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            cells.push((r as i32, c as i32, unit(c, cols), unit(r, rows)));
        }
    }
    Container::from_lattice("board", ContainerKind::MainBoard, None, Tiling::Square, cells)
}

/// `size × size` rhombus of hexagons with staggered rows.
pub fn generate_hex_rhombus(size: usize) -> Container {
    let half_sqrt3 = 3f64.sqrt() / 2.0;
    let mut cells = Vec::with_capacity(size * size);
    for r in 0..size {
        for c in 0..size {
            let x = c as f64 + 0.5 * r as f64;
            let y = r as f64 * half_sqrt3;
            cells.push((r as i32, c as i32, x, y));
        }
    }
    normalize(&mut cells);
    Container::from_lattice(
        "board",
        ContainerKind::MainBoard,
        None,
        Tiling::HexRhombus,
        cells,
    )
}

/// Hexagon of hexagons with `side` cells per edge.
pub fn generate_hex_hex(side: usize) -> Container {
    let half_sqrt3 = 3f64.sqrt() / 2.0;
    let n = side as i32 - 1;
    let mut cells = Vec::new();
    for r in -n..=n {
        for q in -n..=n {
            if (q + r).abs() > n {
                continue;
            }
            let x = q as f64 + 0.5 * r as f64;
            let y = r as f64 * half_sqrt3;
            cells.push((r + n, q + n, x, y));
        }
    }
    normalize(&mut cells);
    Container::from_lattice("board", ContainerKind::MainBoard, None, Tiling::HexHex, cells)
}

/// A hand of `capacity` unconnected slots laid out along the x axis.
pub fn make_hand(capacity: usize, owner: Player) -> Container {
    let cells = (0..capacity)
        .map(|i| (0, i as i32, unit(i, capacity), 0.0))
        .collect();
    Container::from_lattice(
        &format!("hand{}", owner.number()),
        ContainerKind::Hand,
        Some(owner),
        Tiling::Hand,
        cells,
    )
}
