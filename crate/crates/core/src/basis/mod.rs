//! Polynomial bases for the element fields `(q, u)`, the face traces `û` and
//! the continuous multiplier `p`.
//!
//! Vector element spaces are three Cartesian copies of an orthonormal scalar
//! modal basis; function `d·N + j` is `e_d ψ_j`. Face traces use the face
//! frame `(t1, t2)`; function `a·N_F + i` is `t_a φ_i`.

mod cg;
mod modal;

pub use cg::{CgSpace, LagrangeBasis};
pub use modal::{poly_dim, OrthonormalBasis, MAX_MODAL_DEGREE};

use crate::geometry::{TetGeometry, TriangleGeometry};
use crate::mesh::FaceFrame;
use crate::vec3::cross;
use crate::{Point, Result};

/// Scalar basis values and reference gradients at a fixed set of reference
/// points, stored point-major: entry `p * dim + j`.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub num_points: usize,
    pub dim: usize,
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 3]>,
}

impl Tabulation {
    pub fn of_modal(basis: &OrthonormalBasis, points: &[[f64; 3]]) -> Self {
        let dim = basis.dim();
        let mut values = vec![0.0; points.len() * dim];
        let mut gradients = vec![[0.0; 3]; points.len() * dim];
        for (p, x) in points.iter().enumerate() {
            basis.eval(*x, &mut values[p * dim..(p + 1) * dim]);
            basis.eval_gradients(*x, &mut gradients[p * dim..(p + 1) * dim]);
        }
        Self {
            num_points: points.len(),
            dim,
            values,
            gradients,
        }
    }

    #[inline]
    pub fn value(&self, point: usize, j: usize) -> f64 {
        self.values[point * self.dim + j]
    }

    #[inline]
    pub fn gradient(&self, point: usize, j: usize) -> [f64; 3] {
        self.gradients[point * self.dim + j]
    }

    /// Values at one point as a slice.
    #[inline]
    pub fn values_at(&self, point: usize) -> &[f64] {
        &self.values[point * self.dim..(point + 1) * self.dim]
    }
}

/// Vector basis `[P_p(K)]³` on an element.
#[derive(Debug, Clone)]
pub struct ElementBasis {
    pub scalar: OrthonormalBasis,
}

impl ElementBasis {
    pub fn new(degree: usize) -> Result<Self> {
        Ok(Self {
            scalar: OrthonormalBasis::tetrahedron(degree)?,
        })
    }

    pub fn degree(&self) -> usize {
        self.scalar.degree()
    }

    pub fn scalar_dim(&self) -> usize {
        self.scalar.dim()
    }

    /// Number of vector basis functions, `3·dim P_p`.
    pub fn dim(&self) -> usize {
        3 * self.scalar.dim()
    }
}

/// Values and curls of the vector basis `e_d ψ_j` at physical points of an
/// element, indexed `[basis][point]`.
pub fn eval_element_vector_basis(
    degree: usize,
    geo: &TetGeometry,
    points: &[Point],
) -> Result<(Vec<Vec<[f64; 3]>>, Vec<Vec<[f64; 3]>>)> {
    let basis = OrthonormalBasis::tetrahedron(degree)?;
    let n = basis.dim();
    let mut values = vec![Vec::with_capacity(points.len()); 3 * n];
    let mut curls = vec![Vec::with_capacity(points.len()); 3 * n];
    let mut v = vec![0.0; n];
    let mut g = vec![[0.0; 3]; n];
    for &x in points {
        let xi = geo.to_reference(x);
        basis.eval(xi, &mut v);
        basis.eval_gradients(xi, &mut g);
        for d in 0..3 {
            let mut e = [0.0; 3];
            e[d] = 1.0;
            for j in 0..n {
                let mut val = [0.0; 3];
                val[d] = v[j];
                values[d * n + j].push(val);
                curls[d * n + j].push(cross(geo.push_gradient(g[j]), e));
            }
        }
    }
    Ok((values, curls))
}

/// Tangential trace basis on a face.
#[derive(Debug, Clone)]
pub struct FaceBasis {
    pub scalar: OrthonormalBasis,
}

impl FaceBasis {
    pub fn new(degree: usize) -> Result<Self> {
        Ok(Self {
            scalar: OrthonormalBasis::triangle(degree)?,
        })
    }

    pub fn scalar_dim(&self) -> usize {
        self.scalar.dim()
    }

    /// `(k+1)(k+2)` tangential functions per face.
    pub fn dim(&self) -> usize {
        2 * self.scalar.dim()
    }
}

/// Tangential basis vectors `t_a φ_i` at physical points of a face, indexed
/// `[a·N_F + i][point]`. The scalar modes use the face's sorted-vertex
/// parametrization, so both neighbours see the same functions.
pub fn eval_face_tangential_basis(
    degree: usize,
    geo: &TriangleGeometry,
    frame: &FaceFrame,
    points: &[Point],
) -> Result<Vec<Vec<[f64; 3]>>> {
    let basis = OrthonormalBasis::triangle(degree)?;
    let n = basis.dim();
    let mut out = vec![Vec::with_capacity(points.len()); 2 * n];
    let mut v = vec![0.0; n];
    for &x in points {
        let st = geo.to_reference(x);
        basis.eval([st[0], st[1], 0.0], &mut v);
        for (a, t) in [frame.t1, frame.t2].iter().enumerate() {
            for i in 0..n {
                out[a * n + i].push([t[0] * v[i], t[1] * v[i], t[2] * v[i]]);
            }
        }
    }
    Ok(out)
}
