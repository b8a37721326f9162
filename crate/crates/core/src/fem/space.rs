use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Point, TriangleMesh};

/// Taylor–Hood degrees of freedom on a triangle mesh.
///
/// Scalar quadratic nodes are the mesh vertices followed by the edge
/// midpoints. Velocity dofs are blocked by component: dof `c * nodes + i` is
/// component `c` at node `i`. Pressure dofs are the vertices.
#[derive(Debug, Clone)]
pub struct StokesSpace {
    num_vertices: usize,
    num_nodes: usize,
    /// Local node order: the three vertices, then the midpoints of edges
    /// (0,1), (1,2), (2,0).
    element_nodes: Vec<[usize; 6]>,
    constrained: Vec<bool>,
    constrained_dofs: Vec<usize>,
}

pub fn build_space(mesh: &TriangleMesh) -> Result<StokesSpace> {
    let nv = mesh.num_vertices();
    let num_nodes = mesh.num_quadratic_nodes();
    if mesh.num_triangles() == 0 {
        return Err(Error::InvalidMesh("mesh has no triangles".into()));
    }
    let mut element_nodes = Vec::with_capacity(mesh.num_triangles());
    for (tri, edges) in mesh.triangles().iter().zip(mesh.triangle_edges()) {
        element_nodes.push([
            tri[0],
            tri[1],
            tri[2],
            nv + edges[0],
            nv + edges[1],
            nv + edges[2],
        ]);
    }

    let mut on_wall = vec![false; num_nodes];
    for (e, b) in mesh.boundary_edges() {
        if b.tag == BoundaryTag::DirichletWall {
            let [a, c] = mesh.edges()[e].vertices;
            on_wall[a] = true;
            on_wall[c] = true;
            on_wall[nv + e] = true;
        }
    }
    let mut constrained = vec![false; 2 * num_nodes];
    for c in 0..2 {
        for (i, &w) in on_wall.iter().enumerate() {
            constrained[c * num_nodes + i] = w;
        }
    }
    let constrained_dofs = (0..2 * num_nodes).filter(|&d| constrained[d]).collect();
    Ok(StokesSpace {
        num_vertices: nv,
        num_nodes,
        element_nodes,
        constrained,
        constrained_dofs,
    })
}

impl StokesSpace {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn velocity_dofs(&self) -> usize {
        2 * self.num_nodes
    }

    pub fn pressure_dofs(&self) -> usize {
        self.num_vertices
    }

    pub fn velocity_dof(&self, component: usize, node: usize) -> usize {
        component * self.num_nodes + node
    }

    pub fn element_nodes(&self) -> &[[usize; 6]] {
        &self.element_nodes
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    /// Sorted list of velocity dofs fixed by the no-slip condition.
    pub fn constrained_dofs(&self) -> &[usize] {
        &self.constrained_dofs
    }

    /// Nodal interpolant of a vector field.
    pub fn interpolate_velocity(
        &self,
        mesh: &TriangleMesh,
        field: impl Fn(Point) -> [f64; 2],
    ) -> Vec<f64> {
        let mut u = vec![0.0; self.velocity_dofs()];
        for node in 0..self.num_nodes {
            let v = field(mesh.node_coords(node));
            u[node] = v[0];
            u[self.num_nodes + node] = v[1];
        }
        u
    }

    /// Nodal interpolant of a scalar field at the vertices.
    pub fn interpolate_pressure(&self, mesh: &TriangleMesh, field: impl Fn(Point) -> f64) -> Vec<f64> {
        mesh.vertices().iter().map(|&x| field(x)).collect()
    }

    pub(crate) fn check_velocity(&self, what: &'static str, u: &[f64]) -> Result<()> {
        if u.len() != self.velocity_dofs() {
            return Err(Error::SizeMismatch {
                what,
                expected: self.velocity_dofs(),
                found: u.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_pressure(&self, what: &'static str, p: &[f64]) -> Result<()> {
        if p.len() != self.pressure_dofs() {
            return Err(Error::SizeMismatch {
                what,
                expected: self.pressure_dofs(),
                found: p.len(),
            });
        }
        Ok(())
    }
}
