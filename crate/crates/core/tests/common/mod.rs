#![allow(dead_code)]

use std::sync::Arc;

use hdg_maxwell::assembly::{self, DiscreteSpace, SolutionFields, SolveOptions};
use hdg_maxwell::mesh::Mesh;
use hdg_maxwell::problem::{CoefficientField, ConstraintRhs, ExactSolution, ProblemSpec};
use hdg_maxwell::{Point, C64};

pub type Vector = fn(Point) -> [f64; 3];
pub type Scalar = fn(Point) -> f64;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Real polynomial fields describing a manufactured solution for constant coefficients.
pub struct Manufactured {
    pub u: Vector,
    pub curl_u: Vector,
    pub curl_curl_u: Vector,
    pub p: Scalar,
    pub grad_p: Vector,
}

/// Builds the problem whose exact solution is `m` with constant `μ`, `ε`.
pub fn manufactured_spec(kappa: f64, mu: C64, eps: C64, m: Manufactured) -> ProblemSpec {
    let Manufactured { u, curl_u, curl_curl_u, p, grad_p } = m;
    let cplx = |v: [f64; 3]| v.map(|x| c(x, 0.0));
    let source = move |x: Point| {
        let (cc, uu, gp) = (curl_curl_u(x), u(x), grad_p(x));
        [0, 1, 2].map(|d| cc[d] / mu - kappa * kappa * eps * uu[d] + eps.conj() * gp[d])
    };
    ProblemSpec::custom(kappa, CoefficientField::constant(mu), CoefficientField::constant(eps), source)
        .unwrap()
        .with_constraint(ConstraintRhs::Flux(Arc::new(move |x| u(x).map(|v| eps * v))))
        .with_exact(ExactSolution {
            u: Arc::new(move |x| cplx(u(x))),
            q: Arc::new(move |x| curl_u(x).map(|v| v / mu)),
            p: Arc::new(move |x| c(p(x), 0.0)),
            grad_p: Arc::new(move |x| cplx(grad_p(x))),
        })
}

/// The reference tetrahedron as a one-element mesh.
pub fn reference_tet() -> Mesh {
    Mesh::from_tets(
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        vec![[0, 1, 2, 3]],
    )
    .unwrap()
}

/// Two tetrahedra sharing the face opposite the origin of the reference element.
pub fn two_tets() -> Mesh {
    Mesh::from_tets(
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]],
        vec![[0, 1, 2, 3], [1, 2, 3, 4]],
    )
    .unwrap()
}

pub fn cube(n: usize, k: usize, m: usize) -> (Mesh, DiscreteSpace) {
    let mesh = Mesh::build_structured_cube(n).unwrap();
    let space = DiscreteSpace::new(&mesh, k, m).unwrap();
    (mesh, space)
}

pub fn solve(spec: &ProblemSpec, mesh: &Mesh, space: &DiscreteSpace) -> SolutionFields {
    assembly::solve(spec, mesh, space, &SolveOptions::default()).unwrap()
}

pub fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}
