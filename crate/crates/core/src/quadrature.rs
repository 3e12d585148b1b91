//! Quadrature on the reference tetrahedron and triangle.
//!
//! Rules are tensor products of Gauss–Jacobi rules pulled back through the
//! collapsed (Duffy) coordinates, so every weight is positive and any degree
//! is available without tables.

use faer::{Mat, Side};

use crate::geometry::{TetGeometry, TriangleGeometry};
use crate::{Error, Point, Result};

/// Highest exactness degree offered.
pub const MAX_DEGREE: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Simplex {
    /// `{x, y, z ≥ 0, x + y + z ≤ 1}`, measure 1/6.
    Tetrahedron,
    /// `{x, y ≥ 0, x + y ≤ 1}`, measure 1/2. Points carry a trailing 0.
    Triangle,
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
    pub simplex: Simplex,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Physical points and weights on a tetrahedron; weights absorb `|det J|`.
    pub fn map_to_tet(&self, geo: &TetGeometry) -> Result<(Vec<Point>, Vec<f64>)> {
        if self.simplex != Simplex::Tetrahedron {
            return Err(Error::InvalidInput("triangle rule mapped onto a tetrahedron".into()));
        }
        let jac = geo.det.abs();
        Ok((
            self.points.iter().map(|&p| geo.to_physical(p)).collect(),
            self.weights.iter().map(|w| w * jac).collect(),
        ))
    }

    /// Physical points and weights on a triangle; weights absorb `2·area`.
    pub fn map_to_triangle(&self, geo: &TriangleGeometry) -> Result<(Vec<Point>, Vec<f64>)> {
        if self.simplex != Simplex::Triangle {
            return Err(Error::InvalidInput("tetrahedron rule mapped onto a triangle".into()));
        }
        let jac = geo.jacobian_measure;
        Ok((
            self.points.iter().map(|&p| geo.to_physical([p[0], p[1]])).collect(),
            self.weights.iter().map(|w| w * jac).collect(),
        ))
    }
}

/// Gauss–Jacobi rule with `q` points for `∫₀¹ (1-t)^α g(t) dt`.
pub fn gauss_jacobi_unit(q: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1);
    // Golub–Welsch on the Jacobi matrix of the weight (1-x)^α on [-1, 1].
    let ab = alpha;
    let mut jac = Mat::<f64>::zeros(q, q);
    for n in 0..q {
        let nf = n as f64;
        let s = 2.0 * nf + ab;
        jac[(n, n)] = if n == 0 {
            -alpha / (ab + 2.0)
        } else {
            -alpha * alpha / (s * (s + 2.0))
        };
        if n + 1 < q {
            let m = nf + 1.0;
            let s = 2.0 * m + ab;
            let b = (4.0 * m * (m + alpha) * m * (m + ab) / (s * s * (s + 1.0) * (s - 1.0))).sqrt();
            jac[(n, n + 1)] = b;
            jac[(n + 1, n)] = b;
        }
    }
    let mu0 = 2f64.powf(ab + 1.0) / (ab + 1.0);
    let evd = jac
        .self_adjoint_eigen(Side::Lower)
        .expect("tridiagonal Jacobi matrix eigen-decomposition");
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut nodes = Vec::with_capacity(q);
    let mut weights = Vec::with_capacity(q);
    let scale = 2f64.powf(alpha + 1.0);
    for i in 0..q {
        nodes.push(0.5 * (1.0 + s[i]));
        weights.push(mu0 * u[(0, i)] * u[(0, i)] / scale);
    }
    (nodes, weights)
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_DEGREE {
        return Err(Error::UnsupportedDegree {
            degree,
            max: MAX_DEGREE,
        });
    }
    Ok(())
}

/// Rule on the reference tetrahedron exact for polynomials of total degree `degree`.
pub fn tet_rule(degree: usize) -> Result<QuadratureRule> {
    check_degree(degree)?;
    let q = degree / 2 + 1;
    let (x1, w1) = gauss_jacobi_unit(q, 0.0);
    let (x2, w2) = gauss_jacobi_unit(q, 1.0);
    let (x3, w3) = gauss_jacobi_unit(q, 2.0);
    let mut points = Vec::with_capacity(q * q * q);
    let mut weights = Vec::with_capacity(q * q * q);
    for k in 0..q {
        for j in 0..q {
            for i in 0..q {
                let z = x3[k];
                let y = x2[j] * (1.0 - z);
                let x = x1[i] * (1.0 - x2[j]) * (1.0 - z);
                points.push([x, y, z]);
                weights.push(w1[i] * w2[j] * w3[k]);
            }
        }
    }
    assert!(weights.iter().all(|&w| w > 0.0));
    Ok(QuadratureRule {
        points,
        weights,
        degree,
        simplex: Simplex::Tetrahedron,
    })
}

/// Rule on the reference triangle exact for polynomials of total degree `degree`.
pub fn tri_rule(degree: usize) -> Result<QuadratureRule> {
    check_degree(degree)?;
    let q = degree / 2 + 1;
    let (x1, w1) = gauss_jacobi_unit(q, 0.0);
    let (x2, w2) = gauss_jacobi_unit(q, 1.0);
    let mut points = Vec::with_capacity(q * q);
    let mut weights = Vec::with_capacity(q * q);
    for j in 0..q {
        for i in 0..q {
            let y = x2[j];
            let x = x1[i] * (1.0 - y);
            points.push([x, y, 0.0]);
            weights.push(w1[i] * w2[j]);
        }
    }
    assert!(weights.iter().all(|&w| w > 0.0));
    Ok(QuadratureRule {
        points,
        weights,
        degree,
        simplex: Simplex::Triangle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fact(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    fn tet_monomial(a: usize, b: usize, c: usize) -> f64 {
        fact(a) * fact(b) * fact(c) / fact(a + b + c + 3)
    }

    fn tri_monomial(a: usize, b: usize) -> f64 {
        fact(a) * fact(b) / fact(a + b + 2)
    }

    fn integrate(rule: &QuadratureRule, f: impl Fn([f64; 3]) -> f64) -> f64 {
        rule.points.iter().zip(&rule.weights).map(|(p, w)| w * f(*p)).sum()
    }

    #[test]
    fn tet_examples() {
        assert!((integrate(&tet_rule(0).unwrap(), |_| 1.0) - 1.0 / 6.0).abs() < 1e-15);
        assert!((integrate(&tet_rule(1).unwrap(), |p| p[0]) - 1.0 / 24.0).abs() < 1e-15);
        assert!((integrate(&tet_rule(3).unwrap(), |p| p[0] * p[0] * p[1]) - 1.0 / 360.0).abs() < 1e-15);
    }

    #[test]
    fn tri_examples() {
        assert!((integrate(&tri_rule(0).unwrap(), |_| 1.0) - 0.5).abs() < 1e-15);
        assert!((integrate(&tri_rule(1).unwrap(), |p| p[0]) - 1.0 / 6.0).abs() < 1e-15);
        let r = tri_rule(4).unwrap();
        assert!((integrate(&r, |p| p[0] * p[0] * p[1] * p[1]) - 1.0 / 180.0).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_measure() {
        for d in 0..=MAX_DEGREE {
            let t: f64 = tet_rule(d).unwrap().weights.iter().sum();
            let s: f64 = tri_rule(d).unwrap().weights.iter().sum();
            assert!((t - 1.0 / 6.0).abs() < 1e-14);
            assert!((s - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_to_full_degree() {
        for d in 0..=MAX_DEGREE {
            let tet = tet_rule(d).unwrap();
            let tri = tri_rule(d).unwrap();
            for a in 0..=d {
                for b in 0..=d - a {
                    let got = integrate(&tri, |p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    let want = tri_monomial(a, b);
                    assert!(((got - want) / want).abs() < 1e-12, "tri {a} {b}");
                    for c in 0..=d - a - b {
                        let got = integrate(&tet, |p| {
                            p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32)
                        });
                        let want = tet_monomial(a, b, c);
                        assert!(((got - want) / want).abs() < 1e-12, "tet {a} {b} {c}");
                    }
                }
            }
        }
    }

    #[test]
    fn degree_above_range_is_rejected() {
        assert!(matches!(tet_rule(15), Err(Error::UnsupportedDegree { degree: 15, .. })));
        assert!(matches!(tri_rule(99), Err(Error::UnsupportedDegree { .. })));
    }

    #[test]
    fn points_inside_reference() {
        let r = tet_rule(MAX_DEGREE).unwrap();
        for p in &r.points {
            assert!(p.iter().all(|&x| x > 0.0) && p[0] + p[1] + p[2] < 1.0);
        }
    }

    #[test]
    fn identity_map_and_scaling() {
        let rule = tet_rule(4).unwrap();
        let reference = TetGeometry::new([[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let (pts, w) = rule.map_to_tet(&reference).unwrap();
        assert_eq!(pts, rule.points);
        assert_eq!(w, rule.weights);
        let doubled = TetGeometry::new([[0.0; 3], [2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]]).unwrap();
        let (_, w2) = rule.map_to_tet(&doubled).unwrap();
        for (a, b) in w.iter().zip(&w2) {
            assert!((8.0 * a - b).abs() < 1e-15);
        }
        assert!(rule.map_to_triangle(&TriangleGeometry::new([[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap()).is_err());
    }

    #[test]
    fn kuhn_tets_integrate_their_volume() {
        let mesh = crate::mesh::Mesh::build_structured_cube(2).unwrap();
        let rule = tet_rule(2).unwrap();
        for e in 0..mesh.num_elements() {
            let v = mesh.elements()[e].map(|i| mesh.vertices()[i]);
            let a = crate::vec3::sub(v[1], v[0]);
            let b = crate::vec3::sub(v[2], v[0]);
            let c = crate::vec3::sub(v[3], v[0]);
            let vol = crate::vec3::dot(a, crate::vec3::cross(b, c)) / 6.0;
            let (_, w) = rule.map_to_tet(&mesh.element_geometry(e)).unwrap();
            assert!((w.iter().sum::<f64>() - vol).abs() < 1e-15);
        }
    }

    #[test]
    fn triangle_map_integrates_area() {
        let tri = TriangleGeometry::new([[0.1, 0.2, 0.3], [1.0, 0.5, 0.2], [0.4, 1.1, 0.9]]).unwrap();
        let (_, w) = tri_rule(3).unwrap().map_to_triangle(&tri).unwrap();
        assert!((w.iter().sum::<f64>() - tri.area()).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn random_affine_tet_integrates_linear_exactly(
            coords in proptest::collection::vec(-1.0f64..1.0, 12),
            g in proptest::array::uniform3(-2.0f64..2.0),
        ) {
            let v = [
                [coords[0], coords[1], coords[2]],
                [coords[3] + 1.5, coords[4], coords[5]],
                [coords[6], coords[7] + 1.5, coords[8]],
                [coords[9], coords[10], coords[11] + 1.5],
            ];
            if let Ok(geo) = TetGeometry::new(v) {
                prop_assume!(geo.volume() > 1e-3);
                let (pts, w) = tet_rule(1).unwrap().map_to_tet(&geo).unwrap();
                let got: f64 = pts.iter().zip(&w).map(|(p, w)| w * (g[0] * p[0] + g[1] * p[1] + g[2] * p[2])).sum();
                // the integral of a linear function is its centroid value times the volume
                let mut c = [0.0; 3];
                for p in &v { for d in 0..3 { c[d] += 0.25 * p[d]; } }
                let want = geo.volume() * (g[0] * c[0] + g[1] * c[1] + g[2] * c[2]);
                prop_assert!((got - want).abs() < 1e-12 * (1.0 + want.abs()));
            }
        }
    }
}
