mod common;

use common::{c, cube, max_abs, max_abs_diff, two_tets};
use hdg_maxwell::assembly::{self, assemble_full, DiscreteSpace, DofGroup, FullOptions, LocalOptions, SolveOptions};
use hdg_maxwell::mesh::Mesh;
use hdg_maxwell::problem::{self, CoefficientField, ProblemSpec};
use hdg_maxwell::{postproc, C64};
use proptest::prelude::*;

fn zero_source_problem() -> ProblemSpec {
    ProblemSpec::custom(
        1.0,
        CoefficientField::constant(c(0.2, -0.4)),
        CoefficientField::split(0, 0.5, c(1.0, 2.0), c(2.0, 2.0)),
        |_| [C64::new(0.0, 0.0); 3],
    )
    .unwrap()
}

#[test]
fn zero_load_gives_zero_fields() {
    let (mesh, space) = cube(2, 2, 2);
    let f = common::solve(&zero_source_problem(), &mesh, &space);
    for v in [&f.q, &f.u, &f.uhat, &f.p] {
        assert_eq!(max_abs(v), 0.0);
    }
}

#[test]
fn global_dofs_on_one_cell() {
    let spec = problem::example1(1.0);
    for (k, expected) in [(1, 37), (2, 80)] {
        let (mesh, space) = cube(1, k, k);
        let f = common::solve(&spec, &mesh, &space);
        assert_eq!(f.diagnostics.unwrap().global_dofs, expected, "k = {k}");
    }
}

#[test]
fn interface_plane_is_a_union_of_faces() {
    let mesh = Mesh::build_structured_cube(4).unwrap();
    let faces = mesh.faces_on_plane(0, 0.5, 1e-12);
    assert_eq!(faces.len(), 2 * 4 * 4);
    assert!(faces.iter().all(|&f| !mesh.is_boundary_face(f)));
}

#[test]
fn worker_count_does_not_change_the_solution() {
    let spec = problem::example3();
    let (mesh, space) = cube(2, 2, 1);
    let run = |w| {
        let opts = SolveOptions {
            workers: Some(w),
            ..SolveOptions::default()
        };
        assembly::solve(&spec, &mesh, &space, &opts).unwrap()
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.q, b.q);
    assert_eq!(a.u, b.u);
    assert_eq!(a.uhat, b.uhat);
    assert_eq!(a.p, b.p);
}

#[test]
fn residual_reported_below_tolerance() {
    let spec = problem::example2();
    let (mesh, space) = cube(2, 1, 1);
    let f = common::solve(&spec, &mesh, &space);
    let d = f.diagnostics.unwrap();
    assert!(d.relative_residual <= SolveOptions::default().tol, "{}", d.relative_residual);
}

#[test]
fn adjoint_pairing_on_interface_coefficients() {
    // the sign flip on q and p turns the adjoint-coefficient matrix into the conjugate transpose
    let spec = problem::example3();
    let mesh = two_tets();
    let space = DiscreteSpace::new(&mesh, 1, 0).unwrap();
    let full = |adjoint| {
        let opts = FullOptions {
            local: LocalOptions {
                adjoint_coefficients: adjoint,
                ..LocalOptions::default()
            },
            include_boundary: true,
        };
        assemble_full(&spec, &mesh, &space, &opts).unwrap()
    };
    let (a, b) = (full(false), full(true));
    let d: Vec<f64> = a.groups.iter().map(|g| if matches!(g, DofGroup::Q | DofGroup::P) { -1.0 } else { 1.0 }).collect();
    let (a, b) = (a.matrix.to_dense(), b.matrix.to_dense());
    for i in 0..d.len() {
        for j in 0..d.len() {
            let lhs = d[i] * a[(i, j)];
            let rhs = (d[j] * b[(j, i)]).conj();
            assert!((lhs - rhs).norm() < 1e-12, "({i}, {j}): {lhs} vs {rhs}");
        }
    }
}

#[test]
fn real_part_of_shifted_form_ignores_p() {
    let spec = problem::example1(1.0);
    let (mesh, space) = cube(1, 1, 1);
    let opts = FullOptions {
        local: LocalOptions {
            mass_shift: 2.0,
            ..LocalOptions::default()
        },
        include_boundary: true,
    };
    let sys = assemble_full(&spec, &mesh, &space, &opts).unwrap();
    let form = |x: &[C64]| -> C64 { x.iter().zip(sys.matrix.matvec(x)).map(|(a, b)| a.conj() * b).sum() };
    proptest!(ProptestConfig::with_cases(20), |(seed in any::<u64>(), scale in 0.1f64..10.0)| {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<C64> = (0..sys.len()).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let mut y = x.clone();
        for (v, g) in y.iter_mut().zip(&sys.groups) {
            if *g == DofGroup::P {
                *v *= scale;
            }
        }
        let (fx, fy) = (form(&x), form(&y));
        prop_assert!(fx.re > 0.0);
        prop_assert!((fx.re - fy.re).abs() <= 1e-10 * fx.re, "{} vs {}", fx.re, fy.re);
    });
}

#[test]
fn first_level_errors_are_modest() {
    // k=1 on two cells per axis already resolves the plane wave to tens of percent
    let spec = problem::example1(1.0);
    let (mesh, space) = cube(2, 1, 0);
    let f = common::solve(&spec, &mesh, &space);
    let e = postproc::l2_errors(&spec, &mesh, &space, &f).unwrap();
    assert!(e.err_u_rel < 0.5 && e.err_q_rel < 0.5, "{e:?}");
    assert!(e.err_gradp < 1e-8);
}

#[test]
fn scaling_the_load_scales_the_solution() {
    let base = problem::example2();
    let s = c(0.0, 3.0);
    let src = base.source.clone();
    let mut scaled = base.clone();
    scaled.source = std::sync::Arc::new(move |x| src(x).map(|v| v * s));
    scaled.exact = None;
    scaled.constraint = problem::ConstraintRhs::Zero;
    let mut plain = scaled.clone();
    plain.source = base.source.clone();
    let (mesh, space) = cube(2, 1, 1);
    let a = common::solve(&plain, &mesh, &space);
    let b = common::solve(&scaled, &mesh, &space);
    let a = a.scaled(s);
    let tol = 1e-9 * max_abs(&b.u);
    assert!(max_abs_diff(&a.u, &b.u) < tol);
    assert!(max_abs_diff(&a.q, &b.q) < 1e-9 * max_abs(&b.q));
}
