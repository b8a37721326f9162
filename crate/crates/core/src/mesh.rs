//! Structured triangulations of rectangular Stokes regions.
//!
//! A region is the rectangle `(0, L) x (-H/2, H/2)`. Each grid cell is cut
//! along the diagonal from its lower-left to its upper-right corner, and every
//! boundary edge inherits the tag of the side it lies on.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Rectangle `(0, length) x (-height/2, height/2)`, lengths in cm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectDomain {
    pub length: f64,
    pub height: f64,
}

impl RectDomain {
    pub fn new(length: f64, height: f64) -> Result<Self> {
        if !(length > 0.0 && height > 0.0) || !length.is_finite() || !height.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "rectangle sides must be positive, got L={length}, H={height}"
            )));
        }
        Ok(Self { length, height })
    }

    pub fn area(&self) -> f64 {
        self.length * self.height
    }
}

/// Label `(l, m, k)` of the k-th connection between Stokes region `l` and
/// circuit `m`. Labels are 1-based, as in `S_{lm,k}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InterfaceId {
    pub domain: usize,
    pub circuit: usize,
    pub k: usize,
}

impl InterfaceId {
    pub const fn new(domain: usize, circuit: usize, k: usize) -> Self {
        Self { domain, circuit, k }
    }

    /// Compact label used in column headers, e.g. `11_1`.
    pub fn label(&self) -> String {
        format!("{}{}_{}", self.domain, self.circuit, self.k)
    }
}

impl fmt::Display for InterfaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}{},{}", self.domain, self.circuit, self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    /// No-slip wall, `v = 0`.
    DirichletWall,
    /// External pressure traction.
    NeumannExternal,
    /// Resistive connection to a lumped circuit.
    Interface(InterfaceId),
}

impl BoundaryTag {
    pub fn interface_id(&self) -> Option<InterfaceId> {
        match self {
            BoundaryTag::Interface(id) => Some(*id),
            _ => None,
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryTag::DirichletWall => write!(f, "wall"),
            BoundaryTag::NeumannExternal => write!(f, "neumann"),
            BoundaryTag::Interface(id) => {
                write!(f, "interface {} {} {}", id.domain, id.circuit, id.k)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    pub fn outward_normal(self) -> Point {
        match self {
            Side::Bottom => [0.0, -1.0],
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// Tag assignment for the four sides of a rectangle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryLayout {
    tags: [Option<BoundaryTag>; 4],
}

impl BoundaryLayout {
    pub fn new() -> Self {
        Self::default()
    }

    /// Walls on top and bottom, the given tags on the left and right sides.
    pub fn channel(left: BoundaryTag, right: BoundaryTag) -> Self {
        Self::new()
            .with(Side::Bottom, BoundaryTag::DirichletWall)
            .with(Side::Top, BoundaryTag::DirichletWall)
            .with(Side::Left, left)
            .with(Side::Right, right)
    }

    pub fn with(mut self, side: Side, tag: BoundaryTag) -> Self {
        self.tags[side.slot()] = Some(tag);
        self
    }

    pub fn tag(&self, side: Side) -> Option<BoundaryTag> {
        self.tags[side.slot()]
    }

    fn validate(&self) -> Result<[BoundaryTag; 4]> {
        let mut out = [BoundaryTag::DirichletWall; 4];
        for side in Side::ALL {
            out[side.slot()] = self.tags[side.slot()]
                .ok_or_else(|| Error::InvalidMesh(format!("{side:?} side has no boundary tag")))?;
        }
        let mut seen = Vec::new();
        for tag in out.iter().filter_map(BoundaryTag::interface_id) {
            if seen.contains(&tag) {
                return Err(Error::InvalidMesh(format!(
                    "interface {tag} assigned to more than one side"
                )));
            }
            seen.push(tag);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub side: Side,
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub boundary: Option<BoundaryEdge>,
}

#[derive(Debug, Clone)]
pub struct TriangleMesh {
    domain: RectDomain,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    /// Edge indices of each triangle, ordered (v0,v1), (v1,v2), (v2,v0).
    triangle_edges: Vec<[usize; 3]>,
}

/// Build a uniform `nx x ny` grid on `domain`, split every cell along its
/// rising diagonal and tag boundary edges by side.
pub fn build_rect_mesh(
    domain: RectDomain,
    nx: usize,
    ny: usize,
    layout: &BoundaryLayout,
) -> Result<TriangleMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidMesh(format!(
            "subdivision counts must be positive, got nx={nx}, ny={ny}"
        )));
    }
    let tags = layout.validate()?;

    let hx = domain.length / nx as f64;
    let hy = domain.height / ny as f64;
    let vid = |i: usize, j: usize| j * (nx + 1) + i;

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // Pin the far sides exactly to avoid round-off in x = nx * hx.
            let x = if i == nx { domain.length } else { i as f64 * hx };
            let y = if j == ny {
                0.5 * domain.height
            } else {
                -0.5 * domain.height + j as f64 * hy
            };
            vertices.push([x, y]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }

    let side_of = |a: usize, b: usize| -> Option<Side> {
        let (ia, ja) = (a % (nx + 1), a / (nx + 1));
        let (ib, jb) = (b % (nx + 1), b / (nx + 1));
        if ja == 0 && jb == 0 {
            Some(Side::Bottom)
        } else if ja == ny && jb == ny {
            Some(Side::Top)
        } else if ia == 0 && ib == 0 {
            Some(Side::Left)
        } else if ia == nx && ib == nx {
            Some(Side::Right)
        } else {
            None
        }
    };

    let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut triangle_edges = Vec::with_capacity(triangles.len());
    for tri in &triangles {
        let mut local = [0usize; 3];
        for (slot, (a, b)) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])]
            .into_iter()
            .enumerate()
        {
            let key = (a.min(b), a.max(b));
            let idx = *lookup.entry(key).or_insert_with(|| {
                let boundary = side_of(key.0, key.1).map(|side| BoundaryEdge {
                    side,
                    tag: tags[side.slot()],
                });
                edges.push(Edge {
                    vertices: [key.0, key.1],
                    boundary,
                });
                edges.len() - 1
            });
            local[slot] = idx;
        }
        triangle_edges.push(local);
    }

    Ok(TriangleMesh {
        domain,
        vertices,
        triangles,
        edges,
        triangle_edges,
    })
}

impl TriangleMesh {
    pub fn domain(&self) -> RectDomain {
        self.domain
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Vertices plus edge midpoints: the node count of a quadratic space.
    pub fn num_quadratic_nodes(&self) -> usize {
        self.vertices.len() + self.edges.len()
    }

    pub fn edge_midpoint(&self, edge: usize) -> Point {
        let [a, b] = self.edges[edge].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    /// Coordinates of quadratic node `node` (vertex or edge midpoint).
    pub fn node_coords(&self, node: usize) -> Point {
        let nv = self.vertices.len();
        if node < nv {
            self.vertices[node]
        } else {
            self.edge_midpoint(node - nv)
        }
    }

    pub fn signed_area(&self, tri: usize) -> f64 {
        let [a, b, c] = self.triangles[tri];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = (usize, &BoundaryEdge)> {
        self.edges
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.boundary.as_ref().map(|b| (i, b)))
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [a, b] = self.edges[edge].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        (pb[0] - pa[0]).hypot(pb[1] - pa[1])
    }

    /// Distinct interface labels present on the boundary, sorted.
    pub fn interface_ids(&self) -> Vec<InterfaceId> {
        let mut ids: Vec<_> = self
            .boundary_edges()
            .filter_map(|(_, b)| b.tag.interface_id())
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }

    pub fn has_tag(&self, tag: BoundaryTag) -> bool {
        self.boundary_edges().any(|(_, b)| b.tag == tag)
    }

    /// Write the plain-text dump: `VERTICES`, `TRIANGLES` and `BOUNDARY`
    /// sections, one record per line.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "VERTICES {}", self.vertices.len())?;
        for (i, p) in self.vertices.iter().enumerate() {
            writeln!(out, "{i} {:.17e} {:.17e}", p[0], p[1])?;
        }
        writeln!(out, "TRIANGLES {}", self.triangles.len())?;
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        let boundary: Vec<_> = self.boundary_edges().collect();
        writeln!(out, "BOUNDARY {}", boundary.len())?;
        for (e, b) in boundary {
            let [a, c] = self.edges[e].vertices;
            writeln!(out, "{a} {c} {}", b.tag)?;
        }
        Ok(())
    }
}
