use crate::basis::{CgSpace, ElementBasis, FaceBasis, Tabulation};
use crate::mesh::Mesh;
use crate::quadrature::{tet_rule, tri_rule, QuadratureRule};
use crate::{Error, Result};

/// Reference-tetrahedron vertices.
const REF_VERTS: [[f64; 3]; 4] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Degrees-of-freedom layout and cached reference tabulations for the four
/// discrete spaces: `q ∈ [P_m]³`, `u ∈ [P_k]³`, tangential `û ∈ [P_k(F)]²`
/// and continuous `p ∈ P_{k+1}`.
#[derive(Debug, Clone)]
pub struct DiscreteSpace {
    pub k: usize,
    pub m: usize,
    pub q_basis: ElementBasis,
    pub u_basis: ElementBasis,
    pub face_basis: FaceBasis,
    pub cg: CgSpace,
    pub vol_rule: QuadratureRule,
    pub face_rule: QuadratureRule,
    pub q_vol: Tabulation,
    pub u_vol: Tabulation,
    pub p_vol: Tabulation,
    /// Face scalar basis at the face rule points.
    pub face_tab: Tabulation,
    /// `(q, u)` tabulations at face points, keyed by the local vertex triple
    /// `l0·16 + l1·4 + l2` that the face's sorted vertices occupy.
    face_elem_tabs: Vec<Option<(Tabulation, Tabulation)>>,
}

/// Reference-tetrahedron coordinates of face-parameter points for a face whose
/// (sorted) vertices are the local vertices `l`.
pub fn face_points_in_element(l: [usize; 3], points: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let (a, b, c) = (REF_VERTS[l[0]], REF_VERTS[l[1]], REF_VERTS[l[2]]);
    points
        .iter()
        .map(|p| {
            let mut x = [0.0; 3];
            for d in 0..3 {
                x[d] = a[d] + p[0] * (b[d] - a[d]) + p[1] * (c[d] - a[d]);
            }
            x
        })
        .collect()
}

impl DiscreteSpace {
    /// Spaces with `q` of degree `m ∈ {k−1, k}`, default quadrature degrees.
    pub fn new(mesh: &Mesh, k: usize, m: usize) -> Result<Self> {
        Self::with_quadrature(mesh, k, m, 2 * (k + 1) + 2, 2 * k + 2)
    }

    pub fn with_quadrature(mesh: &Mesh, k: usize, m: usize, vol_degree: usize, face_degree: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("polynomial degree k must be at least 1".into()));
        }
        if !(m == k || m + 1 == k) {
            return Err(Error::InvalidInput(format!("q-degree must be k or k-1, got m = {m} for k = {k}")));
        }
        let q_basis = ElementBasis::new(m)?;
        let u_basis = ElementBasis::new(k)?;
        let face_basis = FaceBasis::new(k)?;
        let cg = CgSpace::new(mesh, k + 1)?;
        let vol_rule = tet_rule(vol_degree)?;
        let face_rule = tri_rule(face_degree)?;
        let q_vol = Tabulation::of_modal(&q_basis.scalar, &vol_rule.points);
        let u_vol = Tabulation::of_modal(&u_basis.scalar, &vol_rule.points);
        let p_vol = cg.basis.tabulate(&vol_rule.points);
        let face_tab = Tabulation::of_modal(&face_basis.scalar, &face_rule.points);
        let mut face_elem_tabs = vec![None; 64];
        for l0 in 0..4 {
            for l1 in 0..4 {
                for l2 in 0..4 {
                    if l0 == l1 || l1 == l2 || l0 == l2 {
                        continue;
                    }
                    let pts = face_points_in_element([l0, l1, l2], &face_rule.points);
                    face_elem_tabs[l0 * 16 + l1 * 4 + l2] = Some((
                        Tabulation::of_modal(&q_basis.scalar, &pts),
                        Tabulation::of_modal(&u_basis.scalar, &pts),
                    ));
                }
            }
        }
        Ok(Self {
            k,
            m,
            q_basis,
            u_basis,
            face_basis,
            cg,
            vol_rule,
            face_rule,
            q_vol,
            u_vol,
            p_vol,
            face_tab,
            face_elem_tabs,
        })
    }

    /// Scalar dimensions `(dim P_m, dim P_k)`.
    pub fn scalar_dims(&self) -> (usize, usize) {
        (self.q_basis.scalar_dim(), self.u_basis.scalar_dim())
    }

    pub fn nq(&self) -> usize {
        self.q_basis.dim()
    }

    pub fn nu(&self) -> usize {
        self.u_basis.dim()
    }

    /// Trace unknowns per face, `(k+1)(k+2)`.
    pub fn nfb(&self) -> usize {
        self.face_basis.dim()
    }

    /// Local CG unknowns per element.
    pub fn np(&self) -> usize {
        self.cg.local_dim()
    }

    /// Local vertex positions of the sorted vertices of local face `f` of `elem`.
    pub fn local_face_vertices(mesh: &Mesh, elem: usize, f: usize) -> [usize; 3] {
        let tet = mesh.elements()[elem];
        let face = &mesh.faces()[mesh.element_faces(elem)[f]];
        face.vertices.map(|g| tet.iter().position(|&v| v == g).expect("face vertex in element"))
    }

    /// Cached `(q, u)` tabulations on local face `f` of `elem`.
    pub fn face_element_tabs(&self, mesh: &Mesh, elem: usize, f: usize) -> &(Tabulation, Tabulation) {
        let l = Self::local_face_vertices(mesh, elem, f);
        self.face_elem_tabs[l[0] * 16 + l[1] * 4 + l[2]]
            .as_ref()
            .expect("tabulation for every vertex triple")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degrees_are_validated() {
        let mesh = Mesh::build_structured_cube(1).unwrap();
        assert!(DiscreteSpace::new(&mesh, 0, 0).is_err());
        assert!(DiscreteSpace::new(&mesh, 2, 0).is_err());
        assert!(DiscreteSpace::new(&mesh, 2, 3).is_err());
        let s = DiscreteSpace::new(&mesh, 2, 1).unwrap();
        assert_eq!((s.nq(), s.nu(), s.nfb(), s.np()), (12, 30, 12, 20));
        assert_eq!(s.vol_rule.degree, 8);
        assert_eq!(s.face_rule.degree, 6);
    }

    #[test]
    fn face_points_land_on_the_face() {
        let corners = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.3, 0.2, 0.0]];
        let mapped = face_points_in_element([3, 1, 2], &corners);
        assert_eq!(mapped[0], REF_VERTS[3]);
        assert_eq!(mapped[1], REF_VERTS[1]);
        assert_eq!(mapped[2], REF_VERTS[2]);
        // the face opposite vertex 0 is x + y + z = 1
        assert!((mapped[3].iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn every_element_face_has_a_tabulation() {
        let mesh = Mesh::build_structured_cube(2).unwrap();
        let s = DiscreteSpace::new(&mesh, 1, 1).unwrap();
        for e in 0..mesh.num_elements() {
            for f in 0..4 {
                let (tq, tu) = s.face_element_tabs(&mesh, e, f);
                assert_eq!(tq.num_points, s.face_rule.len());
                assert_eq!(tu.dim, s.u_basis.scalar_dim());
            }
        }
    }
}
