//! Affine simplex maps from the reference tetrahedron and triangle.

use crate::vec3::{cross, dot, norm, sub};
use crate::{Error, Point, Result};

/// Affine map `x = v0 + J ξ` from the reference tetrahedron
/// `{ξ ≥ 0, ξ₁+ξ₂+ξ₃ ≤ 1}` onto a physical tetrahedron.
#[derive(Debug, Clone)]
pub struct TetGeometry {
    pub vertices: [Point; 4],
    /// `jacobian[r][c] = (v_{c+1} - v0)[r]`
    pub jacobian: [[f64; 3]; 3],
    pub inverse: [[f64; 3]; 3],
    pub det: f64,
}

impl TetGeometry {
    pub fn new(vertices: [Point; 4]) -> Result<Self> {
        let e = [
            sub(vertices[1], vertices[0]),
            sub(vertices[2], vertices[0]),
            sub(vertices[3], vertices[0]),
        ];
        let mut jacobian = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                jacobian[r][c] = e[c][r];
            }
        }
        let det = dot(e[0], cross(e[1], e[2]));
        let size = e.iter().map(|v| norm(*v)).fold(0.0, f64::max);
        if !(det.abs() > 1e-14 * size * size * size) {
            return Err(Error::Geometry(format!(
                "tetrahedron with |det J| = {:.3e} is degenerate",
                det.abs()
            )));
        }
        // rows of J⁻¹ are the cross products of the columns divided by det
        let rows = [cross(e[1], e[2]), cross(e[2], e[0]), cross(e[0], e[1])];
        let mut inverse = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                inverse[r][c] = rows[r][c] / det;
            }
        }
        Ok(Self {
            vertices,
            jacobian,
            inverse,
            det,
        })
    }

    pub fn volume(&self) -> f64 {
        self.det.abs() / 6.0
    }

    pub fn to_physical(&self, xi: [f64; 3]) -> Point {
        let mut x = self.vertices[0];
        for r in 0..3 {
            for c in 0..3 {
                x[r] += self.jacobian[r][c] * xi[c];
            }
        }
        x
    }

    pub fn to_reference(&self, x: Point) -> [f64; 3] {
        let d = sub(x, self.vertices[0]);
        let mut xi = [0.0; 3];
        for r in 0..3 {
            xi[r] = dot(self.inverse[r], d);
        }
        xi
    }

    /// Maps a reference gradient to the physical one, `J⁻ᵀ ∇_ξ`.
    #[inline]
    pub fn push_gradient(&self, g: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.inverse[0][c] * g[0] + self.inverse[1][c] * g[1] + self.inverse[2][c] * g[2];
        }
        out
    }

    /// Longest edge, which is the diameter of a tetrahedron.
    pub fn diameter(&self) -> f64 {
        let mut h: f64 = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                h = h.max(norm(sub(self.vertices[i], self.vertices[j])));
            }
        }
        h
    }
}

/// Affine map `x = v0 + s (v1 - v0) + t (v2 - v0)` from the reference
/// triangle `{s, t ≥ 0, s + t ≤ 1}`.
#[derive(Debug, Clone)]
pub struct TriangleGeometry {
    pub vertices: [Point; 3],
    pub edges: [Point; 2],
    /// `|e1 × e2|`, twice the area
    pub jacobian_measure: f64,
}

impl TriangleGeometry {
    pub fn new(vertices: [Point; 3]) -> Result<Self> {
        let edges = [sub(vertices[1], vertices[0]), sub(vertices[2], vertices[0])];
        let jacobian_measure = norm(cross(edges[0], edges[1]));
        let size = norm(edges[0]).max(norm(edges[1]));
        if !(jacobian_measure > 1e-14 * size * size) {
            return Err(Error::Geometry(format!(
                "triangle with area {:.3e} is degenerate",
                0.5 * jacobian_measure
            )));
        }
        Ok(Self {
            vertices,
            edges,
            jacobian_measure,
        })
    }

    pub fn area(&self) -> f64 {
        0.5 * self.jacobian_measure
    }

    pub fn to_physical(&self, st: [f64; 2]) -> Point {
        let mut x = self.vertices[0];
        for r in 0..3 {
            x[r] += self.edges[0][r] * st[0] + self.edges[1][r] * st[1];
        }
        x
    }

    /// Least-squares inverse of the affine map; exact for points on the plane.
    pub fn to_reference(&self, x: Point) -> [f64; 2] {
        let d = sub(x, self.vertices[0]);
        let (a, b, c) = (
            dot(self.edges[0], self.edges[0]),
            dot(self.edges[0], self.edges[1]),
            dot(self.edges[1], self.edges[1]),
        );
        let (r0, r1) = (dot(self.edges[0], d), dot(self.edges[1], d));
        let det = a * c - b * b;
        [(c * r0 - b * r1) / det, (a * r1 - b * r0) / det]
    }
}
