//! Compares the monolithic solve with the two-stage solve that first computes
//! the multiplier from a continuous Poisson problem.
//!
//! ```text
//! cargo run --release --example decoupled_solve -- 8
//! ```

use std::time::Instant;

use hdg_maxwell::assembly::{self, DiscreteSpace, Mode, SolveOptions};
use hdg_maxwell::mesh::Mesh;
use hdg_maxwell::{postproc, problem};

fn main() -> hdg_maxwell::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(6, |s| s.parse().expect("cells per axis"));
    let spec = problem::example3();
    let mesh = Mesh::build_structured_cube(n)?;
    let space = DiscreteSpace::new(&mesh, 1, 0)?;

    let mut runs = Vec::new();
    for mode in [Mode::Monolithic, Mode::Decoupled] {
        let opts = SolveOptions { mode, ..SolveOptions::default() };
        let t = Instant::now();
        let f = assembly::solve(&spec, &mesh, &space, &opts)?;
        let dt = t.elapsed();
        let e = postproc::l2_errors(&spec, &mesh, &space, &f)?;
        let d = f.diagnostics.as_ref().expect("diagnostics");
        println!(
            "{mode:?}: {} global dofs, largest front {}, {:.2} s, u error {:.4e}, constraint residual {:.1e}",
            d.global_dofs,
            d.max_front,
            dt.as_secs_f64(),
            e.err_u_rel,
            postproc::constraint_residual(&spec, &mesh, &space, &f)?
        );
        runs.push(f);
    }
    let dp = runs[0].p.iter().zip(&runs[1].p).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let du = runs[0].u.iter().zip(&runs[1].u).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    println!("max difference: p {dp:.1e}, u coefficients {du:.1e}");
    Ok(())
}
