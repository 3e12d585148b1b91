//! HDG-CG finite elements for the indefinite time-harmonic Maxwell system
//!
//! The electric field `u`, the scaled magnetic field `q = μ_r⁻¹ ∇×u` and the
//! Lagrange multiplier `p` enforcing `∇·(ε_r u) = 0` are discretized with
//! elementwise discontinuous polynomials for `(q, u)`, tangential face traces
//! `û` and a globally continuous `p`. The element unknowns are eliminated by
//! static condensation; the global system lives on `(û, p)` only.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: structured Kuhn meshes of the unit cube with oriented faces
//! - [`quadrature`]: collapsed-coordinate Gauss–Jacobi rules on simplices
//! - [`basis`]: orthonormal modal bases, face tangential bases, Lagrange CG space
//! - [`problem`]: coefficients, sources and manufactured solutions
//! - [`assembly`]: local blocks, static condensation, global systems
//! - [`linsolve`]: sparse complex direct solver and Matrix Market I/O
//! - [`postproc`]: errors, rates, triple norm, Helmholtz decomposition
//! - [`cli`]: the `hdg-sweep` convergence harness
//!
//! ```no_run
//! use hdg_maxwell::{assembly, mesh::Mesh, postproc, problem};
//!
//! let spec = problem::example1(1.0);
//! let mesh = Mesh::build_structured_cube(4).unwrap();
//! let space = assembly::DiscreteSpace::new(&mesh, 1, 1).unwrap();
//! let fields = assembly::solve(&spec, &mesh, &space, &assembly::SolveOptions::default()).unwrap();
//! let errors = postproc::l2_errors(&spec, &mesh, &space, &fields).unwrap();
//! println!("u error {:.3e}", errors.err_u_rel);
//! ```

pub mod assembly;
pub mod basis;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod linsolve;
pub mod mesh;
pub mod postproc;
pub mod problem;
pub mod quadrature;

pub(crate) mod vec3;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// A point in physical space.
pub type Point = [f64; 3];
