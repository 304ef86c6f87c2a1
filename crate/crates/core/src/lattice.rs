//! Square lattices built from designs, bond configurations and cluster labeling.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design::{Design, Lambda};
use crate::dsu::DisjointSet;
use crate::error::{Error, Result};

pub(crate) const LEFT: u8 = 1;
pub(crate) const RIGHT: u8 = 2;
pub(crate) const TOP: u8 = 4;
pub(crate) const BOTTOM: u8 = 8;

/// Which pair of opposite boundaries a cluster must touch to count as spanning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Touches the left and right columns.
    Horizontal,
    /// Touches the top and bottom rows.
    Vertical,
    #[default]
    Either,
}

impl Direction {
    #[inline]
    pub(crate) fn spans(self, mask: u8) -> bool {
        let h = mask & (LEFT | RIGHT) == LEFT | RIGHT;
        let v = mask & (TOP | BOTTOM) == TOP | BOTTOM;
        match self {
            Direction::Horizontal => h,
            Direction::Vertical => v,
            Direction::Either => h || v,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Horizontal => "horizontal",
            Direction::Vertical => "vertical",
            Direction::Either => "either",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "horizontal" => Ok(Direction::Horizontal),
            "vertical" => Ok(Direction::Vertical),
            "either" => Ok(Direction::Either),
            other => Err(Error::validation(
                "direction",
                format!("expected horizontal, vertical or either, got `{other}`"),
            )),
        }
    }
}

/// Row/column position of a lattice cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

/// An edge between two occupied vertices (vertex `i` houses notion `i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
}

/// An `rows x cols` lattice with `occupied.len()` vertices filled row-major.
///
/// Vertex `i` sits at `occupied[i]` and houses notion `i`. Vacant cells (the
/// tail of the row-major order when `rows * cols` exceeds the vertex count)
/// carry no vertex and no edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeSpec {
    rows: usize,
    cols: usize,
    occupied: Vec<Cell>,
    edges: Vec<Edge>,
    cell_vertex: Vec<Option<usize>>,
    boundary: Vec<u8>,
}

impl LatticeSpec {
    /// Lattice of `rows x cols` with the first `count` cells (row-major) occupied.
    pub fn with_occupancy(rows: usize, cols: usize, count: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::validation(
                "lattice",
                "rows and cols must be positive",
            ));
        }
        if count == 0 {
            return Err(Error::EmptyDesign);
        }
        if count > rows * cols {
            return Err(Error::validation(
                "lattice",
                format!("{count} vertices do not fit in {rows}x{cols}"),
            ));
        }
        let occupied: Vec<Cell> = (0..count)
            .map(|i| Cell {
                row: i / cols,
                col: i % cols,
            })
            .collect();
        let mut cell_vertex = vec![None; rows * cols];
        for (v, slot) in cell_vertex.iter_mut().enumerate().take(count) {
            *slot = Some(v);
        }
        let mut edges = Vec::new();
        for (v, cell) in occupied.iter().enumerate() {
            if cell.col + 1 < cols {
                if let Some(w) = cell_vertex[cell.row * cols + cell.col + 1] {
                    edges.push(Edge { a: v, b: w });
                }
            }
            if cell.row + 1 < rows {
                if let Some(w) = cell_vertex[(cell.row + 1) * cols + cell.col] {
                    edges.push(Edge { a: v, b: w });
                }
            }
        }
        let boundary = occupied
            .iter()
            .map(|c| {
                let mut m = 0;
                if c.col == 0 {
                    m |= LEFT;
                }
                if c.col + 1 == cols {
                    m |= RIGHT;
                }
                if c.row == 0 {
                    m |= TOP;
                }
                if c.row + 1 == rows {
                    m |= BOTTOM;
                }
                m
            })
            .collect();
        Ok(LatticeSpec {
            rows,
            cols,
            occupied,
            edges,
            cell_vertex,
            boundary,
        })
    }

    /// Fully occupied `rows x cols` lattice.
    pub fn full(rows: usize, cols: usize) -> Result<Self> {
        Self::with_occupancy(rows, cols, rows.saturating_mul(cols))
    }

    /// Squarest lattice for `l` vertices: `m = ceil(sqrt(l))`, `n = ceil(l / m)`.
    pub fn for_count(l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::EmptyDesign);
        }
        let (m, n) = shape_for(l);
        Self::with_occupancy(m, n, l)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn vertex_count(&self) -> usize {
        self.occupied.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn occupied(&self) -> &[Cell] {
        &self.occupied
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Cells joined by edge `k`.
    pub fn edge_cells(&self, k: usize) -> (Cell, Cell) {
        let e = self.edges[k];
        (self.occupied[e.a], self.occupied[e.b])
    }

    /// Notion index housed at `cell`, if the cell is occupied.
    pub fn notion_at(&self, cell: Cell) -> Option<usize> {
        if cell.row >= self.rows || cell.col >= self.cols {
            return None;
        }
        self.cell_vertex[cell.row * self.cols + cell.col]
    }

    #[inline]
    pub(crate) fn boundary_mask(&self, v: usize) -> u8 {
        self.boundary[v]
    }
}

/// `(rows, cols)` chosen for `l` notions.
pub fn shape_for(l: usize) -> (usize, usize) {
    let mut m = (l as f64).sqrt().ceil() as usize;
    // guard against floating rounding on perfect squares
    while m > 1 && (m - 1) * (m - 1) >= l {
        m -= 1;
    }
    while m * m < l {
        m += 1;
    }
    let n = l.div_ceil(m);
    (m, n)
}

/// Builds the edgeless lattice housing a design's notions, in file order.
pub fn place_notions(design: &Design) -> Result<LatticeSpec> {
    LatticeSpec::for_count(design.notion_count())
}

/// Per-edge open probability, looked up from the notions housed at each end.
pub fn edge_probabilities(design: &Design, lattice: &LatticeSpec) -> Result<Vec<f64>> {
    if design.notion_count() != lattice.vertex_count() {
        return Err(Error::LengthMismatch {
            what: "design notions vs lattice vertices",
            expected: lattice.vertex_count(),
            actual: design.notion_count(),
        });
    }
    design.lambda().validate(design.notion_count())?;
    Ok(match design.lambda() {
        Lambda::Scalar(p) => vec![*p; lattice.edge_count()],
        Lambda::Matrix(m) => lattice.edges().iter().map(|e| m[e.a][e.b]).collect(),
    })
}

/// One realized open/closed assignment over the edges of a lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BondConfiguration<'a> {
    lattice: &'a LatticeSpec,
    open: Vec<bool>,
}

impl<'a> BondConfiguration<'a> {
    pub fn new(lattice: &'a LatticeSpec, open: Vec<bool>) -> Result<Self> {
        if open.len() != lattice.edge_count() {
            return Err(Error::LengthMismatch {
                what: "open flags",
                expected: lattice.edge_count(),
                actual: open.len(),
            });
        }
        Ok(BondConfiguration { lattice, open })
    }

    pub fn all_open(lattice: &'a LatticeSpec) -> Self {
        BondConfiguration {
            lattice,
            open: vec![true; lattice.edge_count()],
        }
    }

    pub fn all_closed(lattice: &'a LatticeSpec) -> Self {
        BondConfiguration {
            lattice,
            open: vec![false; lattice.edge_count()],
        }
    }

    /// Configuration whose open edges are the set bits of `bits` (edge `k` = bit `k`).
    pub fn from_bits(lattice: &'a LatticeSpec, bits: u64) -> Self {
        let open = (0..lattice.edge_count())
            .map(|k| bits >> k & 1 == 1)
            .collect();
        BondConfiguration { lattice, open }
    }

    pub fn lattice(&self) -> &'a LatticeSpec {
        self.lattice
    }

    pub fn open(&self) -> &[bool] {
        &self.open
    }

    pub fn is_open(&self, k: usize) -> bool {
        self.open[k]
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }
}

/// Edge `k` is open iff `uniforms[k] < probs[k]`.
pub fn sample_configuration<'a>(
    lattice: &'a LatticeSpec,
    probs: &[f64],
    uniforms: &[f64],
) -> Result<BondConfiguration<'a>> {
    let e = lattice.edge_count();
    if probs.len() != e {
        return Err(Error::LengthMismatch {
            what: "edge probabilities",
            expected: e,
            actual: probs.len(),
        });
    }
    if uniforms.len() != e {
        return Err(Error::LengthMismatch {
            what: "uniforms",
            expected: e,
            actual: uniforms.len(),
        });
    }
    let open = uniforms.iter().zip(probs).map(|(u, p)| u < p).collect();
    Ok(BondConfiguration { lattice, open })
}

/// Size and boundary contacts of one cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClusterInfo {
    pub size: usize,
    pub touches_left: bool,
    pub touches_right: bool,
    pub touches_top: bool,
    pub touches_bottom: bool,
}

impl ClusterInfo {
    fn mask(&self) -> u8 {
        let mut m = 0;
        if self.touches_left {
            m |= LEFT;
        }
        if self.touches_right {
            m |= RIGHT;
        }
        if self.touches_top {
            m |= TOP;
        }
        if self.touches_bottom {
            m |= BOTTOM;
        }
        m
    }

    pub fn spans(&self, direction: Direction) -> bool {
        direction.spans(self.mask())
    }
}

/// Partition of the occupied vertices into open-edge clusters.
///
/// Cluster ids are assigned in order of each cluster's lowest vertex index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabeling {
    cluster_of: Vec<usize>,
    clusters: Vec<ClusterInfo>,
}

impl ClusterLabeling {
    pub fn cluster_of(&self, v: usize) -> usize {
        self.cluster_of[v]
    }

    pub fn assignments(&self) -> &[usize] {
        &self.cluster_of
    }

    pub fn clusters(&self) -> &[ClusterInfo] {
        &self.clusters
    }

    pub fn is_spanning(&self, cluster: usize, direction: Direction) -> bool {
        self.clusters[cluster].spans(direction)
    }
}

pub fn label_clusters(config: &BondConfiguration<'_>) -> ClusterLabeling {
    let lattice = config.lattice;
    let n = lattice.vertex_count();
    let mut dsu = DisjointSet::new(n);
    for (k, e) in lattice.edges.iter().enumerate() {
        if config.open[k] {
            dsu.union(e.a, e.b);
        }
    }
    let mut id_of_root = vec![usize::MAX; n];
    let mut cluster_of = Vec::with_capacity(n);
    let mut masks: Vec<u8> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    for v in 0..n {
        let r = dsu.find(v);
        if id_of_root[r] == usize::MAX {
            id_of_root[r] = masks.len();
            masks.push(0);
            sizes.push(0);
        }
        let id = id_of_root[r];
        masks[id] |= lattice.boundary[v];
        sizes[id] += 1;
        cluster_of.push(id);
    }
    let clusters = masks
        .iter()
        .zip(&sizes)
        .map(|(&m, &size)| ClusterInfo {
            size,
            touches_left: m & LEFT != 0,
            touches_right: m & RIGHT != 0,
            touches_top: m & TOP != 0,
            touches_bottom: m & BOTTOM != 0,
        })
        .collect();
    ClusterLabeling {
        cluster_of,
        clusters,
    }
}

pub fn count_spanning_clusters(labeling: &ClusterLabeling, direction: Direction) -> usize {
    labeling
        .clusters
        .iter()
        .filter(|c| c.spans(direction))
        .count()
}
