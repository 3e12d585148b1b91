//! Splits a discrete field into an ε-weighted discretely divergence-free part
//! and a gradient of a continuous potential, then checks both properties.

use hdg_maxwell::assembly::{self, DiscreteSpace, SolveOptions};
use hdg_maxwell::mesh::Mesh;
use hdg_maxwell::{postproc, problem};

fn main() -> hdg_maxwell::Result<()> {
    let spec = problem::example2();
    let mesh = Mesh::build_structured_cube(4)?;
    let space = DiscreteSpace::new(&mesh, 2, 2)?;
    let fields = assembly::solve(&spec, &mesh, &space, &SolveOptions::default())?;

    // u_h itself plus a gradient, so the potential part is not small
    let bump = space.cg.interpolate_zero_boundary(|x| (x[0] * x[1] * x[2]).into());
    let grad = postproc::gradient_in_u_basis(&mesh, &space, &bump);
    let v: Vec<_> = fields.u.iter().zip(&grad).map(|(a, b)| a + 50.0 * b).collect();

    let d = postproc::helmholtz_decompose(&spec, &mesh, &space, &v, 1e-12)?;
    let orth = postproc::gradient_orthogonality_residual(&spec, &mesh, &space, &d.z)?;
    let again = postproc::helmholtz_decompose(&spec, &mesh, &space, &d.z, 1e-12)?;
    let drift = d.z.iter().zip(&again.z).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let max_xi = d.xi.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let recovered = d.xi.iter().zip(&bump).map(|(a, b)| (a - 50.0 * b).norm()).fold(0.0, f64::max);

    println!("potential: max |xi| = {max_xi:.4e}, distance from the added 50*bump = {recovered:.4e}");
    println!("orthogonality residual of z: {orth:.1e}");
    println!("second decomposition moves z by {drift:.1e}");
    Ok(())
}
