//! A user-defined medium: a lossy slab in vacuum driven by a localized current.
//! No exact solution is known, so the run reports `‖u_h‖` and the discrete
//! transmission residual instead of errors.

use hdg_maxwell::assembly::{self, DiscreteSpace, SolveOptions};
use hdg_maxwell::mesh::Mesh;
use hdg_maxwell::problem::{CoefficientField, CoefficientValue, ProblemSpec, Region, Side};
use hdg_maxwell::{postproc, C64};

fn main() -> hdg_maxwell::Result<()> {
    let one = C64::new(1.0, 0.0);
    let eps = CoefficientField::from_pieces(vec![
        (Region::HalfSpace { axis: 2, at: 0.5, side: Side::Below }, CoefficientValue::Constant(C64::new(4.0, 1.0))),
        (Region::HalfSpace { axis: 2, at: 0.5, side: Side::Above }, CoefficientValue::Constant(one)),
    ])?;
    let mu = CoefficientField::constant(one);
    let source = |x: [f64; 3]| {
        let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2) + (x[2] - 0.75).powi(2);
        let j = (-40.0 * r2).exp();
        [C64::new(0.0, 0.0), C64::new(j, 0.0), C64::new(0.0, 0.0)]
    };
    let spec = ProblemSpec::custom(3.0, mu, eps, source)?;
    spec.validate()?;

    for n in [2, 4, 8] {
        let mesh = Mesh::build_structured_cube(n)?;
        let space = DiscreteSpace::new(&mesh, 2, 2)?;
        let opts = SolveOptions::default();
        let fields = assembly::solve(&spec, &mesh, &space, &opts)?;
        // the modal basis is orthonormal on the reference element, so the
        // element mass matrix is |det J| times the identity
        let u_norm = (0..mesh.num_elements())
            .map(|e| mesh.element_geometry(e).det.abs() * fields.u_elem(e).iter().map(|c| c.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        let residual = postproc::transmission_residual(&spec, &mesh, &space, &fields, opts.stabilization_scale)?;
        let d = fields.diagnostics.as_ref().expect("solve fills diagnostics");
        println!(
            "n={n:<2} dofs={:<7} |u_h|={u_norm:.5e} transmission residual={residual:.1e} solve residual={:.1e}",
            d.global_dofs, d.relative_residual
        );
    }
    Ok(())
}
