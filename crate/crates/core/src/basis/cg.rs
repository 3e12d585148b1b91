use std::collections::HashMap;

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;

use super::{OrthonormalBasis, Tabulation};
use crate::mesh::Mesh;
use crate::{Point, Result, C64};

/// Nodal basis of `P_r` on the reference tetrahedron with equispaced nodes
/// `(a, b, c) / r`, `a + b + c ≤ r`.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    degree: usize,
    nodes: Vec<[usize; 3]>,
    modal: OrthonormalBasis,
    /// Lagrange function `i` is `Σ_j coeffs[i * n + j] ψ_j`.
    coeffs: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(degree: usize) -> Result<Self> {
        let modal = OrthonormalBasis::tetrahedron(degree)?;
        let mut nodes = Vec::new();
        for c in 0..=degree {
            for b in 0..=degree - c {
                for a in 0..=degree - b - c {
                    nodes.push([a, b, c]);
                }
            }
        }
        let n = nodes.len();
        debug_assert_eq!(n, modal.dim());
        let r = degree.max(1) as f64;
        let vander = Mat::<f64>::from_fn(n, n, |i, j| {
            let x = nodes[i].map(|v| v as f64 / r);
            modal.values_at(x)[j]
        });
        // V[i][j] = ψ_j(x_i); the Lagrange coefficients are the columns of V⁻¹
        let inv = vander.partial_piv_lu().inverse();
        let mut coeffs = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                coeffs[i * n + j] = inv[(j, i)];
            }
        }
        Ok(Self {
            degree,
            nodes,
            modal,
            coeffs,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Reference coordinates of local node `i`.
    pub fn node(&self, i: usize) -> [f64; 3] {
        let r = self.degree.max(1) as f64;
        self.nodes[i].map(|v| v as f64 / r)
    }

    /// Whether local node `i` lies on the local face opposite vertex `f`.
    pub fn node_on_face(&self, i: usize, f: usize) -> bool {
        let [a, b, c] = self.nodes[i];
        match f {
            0 => a + b + c == self.degree,
            1 => a == 0,
            2 => b == 0,
            3 => c == 0,
            _ => false,
        }
    }

    pub fn tabulate(&self, points: &[[f64; 3]]) -> Tabulation {
        let modal = Tabulation::of_modal(&self.modal, points);
        let n = self.dim();
        let mut values = vec![0.0; points.len() * n];
        let mut gradients = vec![[0.0; 3]; points.len() * n];
        for p in 0..points.len() {
            for i in 0..n {
                let c = &self.coeffs[i * n..(i + 1) * n];
                let mut v = 0.0;
                let mut g = [0.0; 3];
                for j in 0..n {
                    v += c[j] * modal.value(p, j);
                    let mg = modal.gradient(p, j);
                    for d in 0..3 {
                        g[d] += c[j] * mg[d];
                    }
                }
                values[p * n + i] = v;
                gradients[p * n + i] = g;
            }
        }
        Tabulation {
            num_points: points.len(),
            dim: n,
            values,
            gradients,
        }
    }
}

/// Globally continuous piecewise `P_r` space with homogeneous Dirichlet
/// nodes on the boundary.
#[derive(Debug, Clone)]
pub struct CgSpace {
    pub basis: LagrangeBasis,
    node_coords: Vec<Point>,
    element_dofs: Vec<usize>,
    boundary: Vec<bool>,
    /// Index among interior nodes, `usize::MAX` on the boundary.
    free_index: Vec<usize>,
    num_free: usize,
}

fn node_key(x: Point) -> [i64; 3] {
    x.map(|c| (c * 1e9).round() as i64)
}

impl CgSpace {
    pub fn new(mesh: &Mesh, degree: usize) -> Result<Self> {
        let basis = LagrangeBasis::new(degree)?;
        let nloc = basis.dim();
        let mut lookup: HashMap<[i64; 3], usize> = HashMap::new();
        let mut node_coords = Vec::new();
        let mut boundary = Vec::new();
        let mut element_dofs = Vec::with_capacity(nloc * mesh.num_elements());
        for e in 0..mesh.num_elements() {
            let geo = mesh.element_geometry(e);
            let faces = mesh.element_faces(e);
            for i in 0..nloc {
                let x = geo.to_physical(basis.node(i));
                let id = *lookup.entry(node_key(x)).or_insert_with(|| {
                    node_coords.push(x);
                    boundary.push(false);
                    node_coords.len() - 1
                });
                for (f, &face) in faces.iter().enumerate() {
                    if mesh.is_boundary_face(face) && basis.node_on_face(i, f) {
                        boundary[id] = true;
                    }
                }
                element_dofs.push(id);
            }
        }
        let mut free_index = vec![usize::MAX; node_coords.len()];
        let mut num_free = 0;
        for (i, &b) in boundary.iter().enumerate() {
            if !b {
                free_index[i] = num_free;
                num_free += 1;
            }
        }
        Ok(Self {
            basis,
            node_coords,
            element_dofs,
            boundary,
            free_index,
            num_free,
        })
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn num_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn num_interior(&self) -> usize {
        self.num_free
    }

    pub fn local_dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn node_coords(&self) -> &[Point] {
        &self.node_coords
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        self.boundary[node]
    }

    /// Interior numbering of a node, `None` on the boundary.
    pub fn interior_index(&self, node: usize) -> Option<usize> {
        let i = self.free_index[node];
        (i != usize::MAX).then_some(i)
    }

    pub fn element_dofs(&self, elem: usize) -> &[usize] {
        let n = self.local_dim();
        &self.element_dofs[elem * n..(elem + 1) * n]
    }

    pub fn interpolate(&self, f: impl Fn(Point) -> C64) -> Vec<C64> {
        self.node_coords.iter().map(|&x| f(x)).collect()
    }

    /// Values with boundary nodes zeroed, as in the Dirichlet-constrained space.
    pub fn interpolate_zero_boundary(&self, f: impl Fn(Point) -> C64) -> Vec<C64> {
        self.node_coords
            .iter()
            .zip(&self.boundary)
            .map(|(&x, &b)| if b { C64::new(0.0, 0.0) } else { f(x) })
            .collect()
    }

    /// Expands interior-only coefficients to all nodes.
    pub fn expand_interior(&self, interior: &[C64]) -> Vec<C64> {
        self.free_index
            .iter()
            .map(|&i| if i == usize::MAX { C64::new(0.0, 0.0) } else { interior[i] })
            .collect()
    }

    /// Evaluates a CG function and its physical gradient at a reference point of an element.
    pub fn eval_in_element(&self, mesh: &Mesh, elem: usize, coeffs: &[C64], xi: [f64; 3]) -> (C64, [C64; 3]) {
        let geo = mesh.element_geometry(elem);
        let tab = self.basis.tabulate(&[xi]);
        let dofs = self.element_dofs(elem);
        let mut v = C64::new(0.0, 0.0);
        let mut g = [C64::new(0.0, 0.0); 3];
        for (i, &dof) in dofs.iter().enumerate() {
            v += coeffs[dof] * tab.value(0, i);
            let pg = geo.push_gradient(tab.gradient(0, i));
            for d in 0..3 {
                g[d] += coeffs[dof] * pg[d];
            }
        }
        (v, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::tri_rule;

    #[test]
    fn lagrange_is_nodal() {
        for r in 1..=4 {
            let b = LagrangeBasis::new(r).unwrap();
            let pts: Vec<_> = (0..b.dim()).map(|i| b.node(i)).collect();
            let tab = b.tabulate(&pts);
            for p in 0..b.dim() {
                for i in 0..b.dim() {
                    let want = if p == i { 1.0 } else { 0.0 };
                    assert!((tab.value(p, i) - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_and_linear_reproduction() {
        let mesh = Mesh::build_structured_cube(2).unwrap();
        let space = CgSpace::new(&mesh, 2).unwrap();
        let ones = space.interpolate(|_| C64::new(1.0, 0.0));
        let lin = space.interpolate(|x| C64::new(x[0] + 2.0 * x[1] + 3.0 * x[2], 0.0));
        for e in [0, 13, 47] {
            for xi in [[0.1, 0.2, 0.3], [0.25, 0.25, 0.25], [0.6, 0.1, 0.05]] {
                let (v, g) = space.eval_in_element(&mesh, e, &ones, xi);
                assert!((v - 1.0).norm() < 1e-12);
                assert!(g.iter().all(|c| c.norm() < 1e-11));
                let (_, g) = space.eval_in_element(&mesh, e, &lin, xi);
                for d in 0..3 {
                    assert!((g[d] - (d + 1) as f64).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn quadratic_node_counts_on_single_cube() {
        let mesh = Mesh::build_structured_cube(1).unwrap();
        let space = CgSpace::new(&mesh, 2).unwrap();
        // Kuhn split of one cube: 8 vertices and 19 edges
        assert_eq!(space.num_nodes(), 8 + 19);
        // brute force: nodes strictly inside the cube
        let inside = space
            .node_coords()
            .iter()
            .filter(|x| x.iter().all(|&c| c > 1e-12 && c < 1.0 - 1e-12))
            .count();
        assert_eq!(space.num_interior(), inside);
        assert_eq!(inside, 1);
    }

    #[test]
    fn boundary_nodes_are_exactly_on_the_surface() {
        for (n, r) in [(2, 2), (2, 3), (3, 4)] {
            let mesh = Mesh::build_structured_cube(n).unwrap();
            let space = CgSpace::new(&mesh, r).unwrap();
            for (i, x) in space.node_coords().iter().enumerate() {
                let on = x.iter().any(|&c| c.abs() < 1e-12 || (c - 1.0).abs() < 1e-12);
                assert_eq!(on, space.is_boundary_node(i));
            }
            let expected = (n * r - 1).pow(3);
            assert_eq!(space.num_interior(), expected);
        }
    }

    #[test]
    fn continuity_across_faces() {
        let mesh = Mesh::build_structured_cube(2).unwrap();
        let space = CgSpace::new(&mesh, 3).unwrap();
        let f = space.interpolate(|x| C64::new((3.0 * x[0]).sin() * x[1], x[2].exp()));
        let rule = tri_rule(4).unwrap();
        for face in mesh.faces().iter().filter(|f| !f.is_boundary()).take(40) {
            let nb = face.neighbor.unwrap();
            let tri = face.vertices.map(|v| mesh.vertices()[v]);
            let geo = crate::geometry::TriangleGeometry::new(tri).unwrap();
            for p in &rule.points {
                let x = geo.to_physical([p[0], p[1]]);
                let a = space.eval_in_element(&mesh, face.owner, &f, mesh.element_geometry(face.owner).to_reference(x)).0;
                let b = space.eval_in_element(&mesh, nb, &f, mesh.element_geometry(nb).to_reference(x)).0;
                assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
