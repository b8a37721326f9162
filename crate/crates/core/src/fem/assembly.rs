use super::quadrature::{gauss3_unit, TriangleRule};
use super::space::StokesSpace;
use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, InterfaceId, Point, TriangleMesh};
use crate::sparse::{CompressedMatrix, TripletMatrix};

/// Geometry of one triangle: vertex coordinates, area and the constant
/// gradients of the barycentric coordinates.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ElementGeometry {
    pub vertices: [Point; 3],
    pub area: f64,
    pub grad_lambda: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(mesh: &TriangleMesh, tri: usize) -> Self {
        let [a, b, c] = mesh.triangles()[tri];
        let p = [mesh.vertices()[a], mesh.vertices()[b], mesh.vertices()[c]];
        let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let grad_lambda = [
            [(p[1][1] - p[2][1]) / det, (p[2][0] - p[1][0]) / det],
            [(p[2][1] - p[0][1]) / det, (p[0][0] - p[2][0]) / det],
            [(p[0][1] - p[1][1]) / det, (p[1][0] - p[0][0]) / det],
        ];
        Self {
            vertices: p,
            area: 0.5 * det,
            grad_lambda,
        }
    }

    pub fn point(&self, lambda: &[f64; 3]) -> Point {
        let mut x = [0.0; 2];
        for (l, v) in lambda.iter().zip(&self.vertices) {
            x[0] += l * v[0];
            x[1] += l * v[1];
        }
        x
    }

    /// Gradients of the six quadratic basis functions at `lambda`.
    pub fn p2_gradients(&self, lambda: &[f64; 3]) -> [[f64; 2]; 6] {
        let g = &self.grad_lambda;
        let mut out = [[0.0; 2]; 6];
        for i in 0..3 {
            let s = 4.0 * lambda[i] - 1.0;
            out[i] = [s * g[i][0], s * g[i][1]];
        }
        for (k, (i, j)) in EDGE_PAIRS.iter().enumerate() {
            out[3 + k] = [
                4.0 * (lambda[*i] * g[*j][0] + lambda[*j] * g[*i][0]),
                4.0 * (lambda[*i] * g[*j][1] + lambda[*j] * g[*i][1]),
            ];
        }
        out
    }
}

const EDGE_PAIRS: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// Values of the six quadratic basis functions at barycentric `lambda`.
pub(crate) fn p2_values(lambda: &[f64; 3]) -> [f64; 6] {
    [
        lambda[0] * (2.0 * lambda[0] - 1.0),
        lambda[1] * (2.0 * lambda[1] - 1.0),
        lambda[2] * (2.0 * lambda[2] - 1.0),
        4.0 * lambda[0] * lambda[1],
        4.0 * lambda[1] * lambda[2],
        4.0 * lambda[2] * lambda[0],
    ]
}

/// Sparse Stokes operators and boundary load vectors of one domain.
///
/// `mass` and `stiffness` act on the blocked velocity vector, `divergence`
/// maps velocity to pressure test functions, `pressure_mass` is the linear
/// mass matrix used for pressure norms.
#[derive(Debug, Clone)]
pub struct AssembledOperators {
    pub mass: CompressedMatrix,
    pub stiffness: CompressedMatrix,
    pub divergence: CompressedMatrix,
    pub pressure_mass: CompressedMatrix,
    boundary_loads: Vec<(BoundaryTag, Vec<f64>)>,
}

impl AssembledOperators {
    /// Entries `∫_S φ_i · n` over all edges carrying `tag`.
    pub fn boundary_load(&self, tag: BoundaryTag) -> Option<&[f64]> {
        self.boundary_loads
            .iter()
            .find(|(t, _)| *t == tag)
            .map(|(_, v)| v.as_slice())
    }

    pub fn flux_vector(&self, id: InterfaceId) -> Option<&[f64]> {
        self.boundary_load(BoundaryTag::Interface(id))
    }

    pub fn boundary_tags(&self) -> impl Iterator<Item = BoundaryTag> + '_ {
        self.boundary_loads.iter().map(|(t, _)| *t)
    }
}

pub fn assemble_operators(space: &StokesSpace, mesh: &TriangleMesh) -> AssembledOperators {
    let n = space.num_nodes();
    let nv = space.pressure_dofs();
    let rule = TriangleRule::degree4();
    let ne = mesh.num_triangles();
    let mut mass = TripletMatrix::with_capacity(2 * n, 2 * n, 72 * ne);
    let mut stiffness = TripletMatrix::with_capacity(2 * n, 2 * n, 72 * ne);
    let mut divergence = TripletMatrix::with_capacity(nv, 2 * n, 36 * ne);
    let mut pressure_mass = TripletMatrix::with_capacity(nv, nv, 9 * ne);

    for (tri, nodes) in space.element_nodes().iter().enumerate() {
        let geo = ElementGeometry::new(mesh, tri);
        let mut m_loc = [[0.0; 6]; 6];
        let mut k_loc = [[0.0; 6]; 6];
        let mut d_loc = [[[0.0; 6]; 2]; 3];
        let mut mp_loc = [[0.0; 3]; 3];
        for (lambda, &w) in rule.points.iter().zip(&rule.weights) {
            let wa = w * geo.area;
            let phi = p2_values(lambda);
            let grad = geo.p2_gradients(lambda);
            for i in 0..6 {
                for j in 0..6 {
                    m_loc[i][j] += wa * phi[i] * phi[j];
                    k_loc[i][j] += wa * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]);
                }
            }
            for q in 0..3 {
                for c in 0..2 {
                    for j in 0..6 {
                        d_loc[q][c][j] += wa * lambda[q] * grad[j][c];
                    }
                }
                for r in 0..3 {
                    mp_loc[q][r] += wa * lambda[q] * lambda[r];
                }
            }
        }
        for c in 0..2 {
            for i in 0..6 {
                let gi = space.velocity_dof(c, nodes[i]);
                for j in 0..6 {
                    let gj = space.velocity_dof(c, nodes[j]);
                    mass.push(gi, gj, m_loc[i][j]);
                    stiffness.push(gi, gj, k_loc[i][j]);
                }
            }
        }
        for q in 0..3 {
            for c in 0..2 {
                for j in 0..6 {
                    divergence.push(nodes[q], space.velocity_dof(c, nodes[j]), d_loc[q][c][j]);
                }
            }
            for r in 0..3 {
                pressure_mass.push(nodes[q], nodes[r], mp_loc[q][r]);
            }
        }
    }

    let mut boundary_loads: Vec<(BoundaryTag, Vec<f64>)> = Vec::new();
    for (e, b) in mesh.boundary_edges() {
        let slot = match boundary_loads.iter().position(|(t, _)| *t == b.tag) {
            Some(s) => s,
            None => {
                boundary_loads.push((b.tag, vec![0.0; 2 * n]));
                boundary_loads.len() - 1
            }
        };
        let load = &mut boundary_loads[slot].1;
        let [a, c] = mesh.edges()[e].vertices;
        let mid = nv + e;
        let len = mesh.edge_length(e);
        let normal = b.side.outward_normal();
        for (s, w) in gauss3_unit() {
            let phi = [(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)];
            for (node, value) in [a, c, mid].into_iter().zip(phi) {
                for (comp, nc) in normal.iter().enumerate() {
                    load[space.velocity_dof(comp, node)] += w * len * value * nc;
                }
            }
        }
    }

    AssembledOperators {
        mass: mass.compress().expect("assembly indices in range"),
        stiffness: stiffness.compress().expect("assembly indices in range"),
        divergence: divergence.compress().expect("assembly indices in range"),
        pressure_mass: pressure_mass.compress().expect("assembly indices in range"),
        boundary_loads,
    }
}

/// Load vector `∫_Ω f(x, t) · φ_i` with a degree-6 rule.
pub fn assemble_body_force(
    space: &StokesSpace,
    mesh: &TriangleMesh,
    f: impl Fn(Point, f64) -> [f64; 2],
    t: f64,
) -> Vec<f64> {
    assemble_body_force_with(space, mesh, &TriangleRule::degree6(), |x| f(x, t))
}

pub(crate) fn assemble_body_force_with(
    space: &StokesSpace,
    mesh: &TriangleMesh,
    rule: &TriangleRule,
    f: impl Fn(Point) -> [f64; 2],
) -> Vec<f64> {
    let mut load = vec![0.0; space.velocity_dofs()];
    for (tri, nodes) in space.element_nodes().iter().enumerate() {
        let geo = ElementGeometry::new(mesh, tri);
        for (lambda, &w) in rule.points.iter().zip(&rule.weights) {
            let fx = f(geo.point(lambda));
            let phi = p2_values(lambda);
            let wa = w * geo.area;
            for (i, &node) in nodes.iter().enumerate() {
                load[space.velocity_dof(0, node)] += wa * fx[0] * phi[i];
                load[space.velocity_dof(1, node)] += wa * fx[1] * phi[i];
            }
        }
    }
    load
}

/// `(‖v‖, ‖∇v‖, ‖p‖)` in L² for discrete velocity and pressure coefficients.
pub fn l2_norms(ops: &AssembledOperators, space: &StokesSpace, u: &[f64], p: &[f64]) -> Result<(f64, f64, f64)> {
    space.check_velocity("velocity coefficients", u)?;
    space.check_pressure("pressure coefficients", p)?;
    let v2 = ops.mass.form(u, u).max(0.0);
    let g2 = ops.stiffness.form(u, u).max(0.0);
    let p2 = ops.pressure_mass.form(p, p).max(0.0);
    Ok((v2.sqrt(), g2.sqrt(), p2.sqrt()))
}

/// Squared L² distance between two velocity coefficient vectors.
pub fn velocity_distance_sq(ops: &AssembledOperators, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            what: "velocity coefficients",
            expected: a.len(),
            found: b.len(),
        });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    Ok(ops.mass.form(&d, &d).max(0.0))
}

/// Squared L² distance between two pressure coefficient vectors.
pub fn pressure_distance_sq(ops: &AssembledOperators, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            what: "pressure coefficients",
            expected: a.len(),
            found: b.len(),
        });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    Ok(ops.pressure_mass.form(&d, &d).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_space;
    use crate::mesh::{build_rect_mesh, BoundaryLayout, RectDomain};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const OUTLET: InterfaceId = InterfaceId::new(1, 1, 1);

    fn setup(l: f64, h: f64, nx: usize, ny: usize) -> (TriangleMesh, StokesSpace, AssembledOperators) {
        let layout = BoundaryLayout::channel(BoundaryTag::NeumannExternal, BoundaryTag::Interface(OUTLET));
        let mesh = build_rect_mesh(RectDomain::new(l, h).unwrap(), nx, ny, &layout).unwrap();
        let space = build_space(&mesh).unwrap();
        let ops = assemble_operators(&space, &mesh);
        (mesh, space, ops)
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn constant_flux_through_interface() {
        let (mesh, space, ops) = setup(10.0, 2.0, 10, 4);
        let u = space.interpolate_velocity(&mesh, |_| [1.0, 0.0]);
        let phi = ops.flux_vector(OUTLET).unwrap();
        let q: f64 = phi.iter().zip(&u).map(|(a, b)| a * b).sum();
        assert!((q - 2.0).abs() < 1e-13);
    }

    #[test]
    fn divergence_of_constant_field_vanishes() {
        let (mesh, space, ops) = setup(3.0, 1.0, 6, 3);
        let u = space.interpolate_velocity(&mesh, |_| [0.7, -1.3]);
        let du = ops.divergence.matvec(&u);
        assert!(du.iter().all(|d| d.abs() < 1e-14));
    }

    #[test]
    fn discrete_divergence_theorem() {
        let (_, space, ops) = setup(1.0, 1.0, 1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let u = random_vec(&mut rng, space.velocity_dofs());
            let lhs: f64 = ops.divergence.matvec(&u).iter().sum();
            let rhs: f64 = ops
                .boundary_tags()
                .map(|t| {
                    ops.boundary_load(t)
                        .unwrap()
                        .iter()
                        .zip(&u)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                })
                .sum();
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn operators_are_symmetric() {
        let (_, _, ops) = setup(10.0, 2.0, 20, 6);
        for m in [&ops.mass, &ops.stiffness, &ops.pressure_mass] {
            assert!(m.asymmetry() <= 1e-14 * m.max_abs());
        }
    }

    #[test]
    fn mass_positive_stiffness_nonnegative() {
        let (_, space, ops) = setup(10.0, 2.0, 10, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let u = random_vec(&mut rng, space.velocity_dofs());
            assert!(ops.mass.form(&u, &u) > 0.0);
            assert!(ops.stiffness.form(&u, &u) >= -1e-12);
        }
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let (mesh, space, ops) = setup(2.0, 1.0, 4, 2);
        let u = space.interpolate_velocity(&mesh, |_| [1.0, 2.0]);
        assert!(ops.stiffness.matvec(&u).iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn zero_and_unit_body_force() {
        let (mesh, space, _) = setup(10.0, 2.0, 10, 4);
        let zero = assemble_body_force(&space, &mesh, |_, _| [0.0, 0.0], 0.0);
        assert!(zero.iter().all(|&v| v == 0.0));
        let unit = assemble_body_force(&space, &mesh, |_, _| [1.0, 0.0], 0.0);
        let n = space.num_nodes();
        let first: f64 = unit[..n].iter().sum();
        assert!((first - 20.0).abs() < 1e-12);
        assert!(unit[n..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn norms_of_simple_fields() {
        let (mesh, space, ops) = setup(10.0, 2.0, 10, 4);
        let zero = l2_norms(&ops, &space, &vec![0.0; space.velocity_dofs()], &vec![0.0; space.pressure_dofs()]).unwrap();
        assert_eq!(zero, (0.0, 0.0, 0.0));
        let u = space.interpolate_velocity(&mesh, |_| [1.0, 0.0]);
        let p = space.interpolate_pressure(&mesh, |x| x[0]);
        let (v, g, pn) = l2_norms(&ops, &space, &u, &p).unwrap();
        assert!((v - 20f64.sqrt()).abs() < 1e-12);
        assert!(g.abs() < 1e-6);
        // ∫ x² over (0,10) x (-1,1) = 2000/3.
        assert!((pn * pn - 2000.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn quadratic_velocity_is_reproduced() {
        // v = (y², 0) on (0,10) x (-1,1): ∫|∇v|² = ∫ 4y² = 80/3.
        let (mesh, space, ops) = setup(10.0, 2.0, 5, 4);
        let u = space.interpolate_velocity(&mesh, |x| [x[1] * x[1], 0.0]);
        let (v, g, _) = l2_norms(&ops, &space, &u, &vec![0.0; space.pressure_dofs()]).unwrap();
        assert!((g * g - 80.0 / 3.0).abs() < 1e-10);
        // ∫ y⁴ = 10 * 2/5 = 4.
        assert!((v * v - 4.0).abs() < 1e-10);
    }

    #[test]
    fn size_mismatch_is_reported() {
        let (_, space, ops) = setup(1.0, 1.0, 1, 1);
        assert!(l2_norms(&ops, &space, &[0.0], &[0.0; 4]).is_err());
    }
}
