//! Error table for the interface example on a sequence of meshes.
//!
//! ```text
//! cargo run --release --example convergence_sweep -- 3 1
//! ```
//! Arguments: example id (default 2), degree k (default 1).

use hdg_maxwell::assembly::{self, DiscreteSpace, SolveOptions};
use hdg_maxwell::mesh::Mesh;
use hdg_maxwell::{postproc, problem};

fn main() -> hdg_maxwell::Result<()> {
    let mut args = std::env::args().skip(1);
    let id: u32 = args.next().map_or(2, |s| s.parse().expect("example id"));
    let k: usize = args.next().map_or(1, |s| s.parse().expect("degree"));
    let spec = problem::by_id(id, 1.0)?;

    let mut reports = Vec::new();
    for n in [2, 4, 8] {
        let mesh = Mesh::build_structured_cube(n)?;
        // q one degree below u, as in the published tables
        let space = DiscreteSpace::new(&mesh, k, k - 1)?;
        let fields = assembly::solve(&spec, &mesh, &space, &SolveOptions::default())?;
        reports.push(postproc::l2_errors(&spec, &mesh, &space, &fields)?);
    }
    postproc::fill_rates(&mut reports);

    println!("{} k={k}", spec.name);
    println!("{:>4} {:>10} {:>6} {:>10} {:>6} {:>8}", "n", "q error", "rate", "u error", "rate", "dofs");
    let r = |x: Option<f64>| x.map_or("-".into(), |v| format!("{v:.2}"));
    for e in &reports {
        println!(
            "{:>4} {:>10.3e} {:>6} {:>10.3e} {:>6} {:>8}",
            e.n.unwrap_or(0),
            e.err_q_rel,
            r(e.rate_q),
            e.err_u_rel,
            r(e.rate_u),
            e.global_dofs
        );
    }
    Ok(())
}
