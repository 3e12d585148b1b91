//! Exports the condensed global matrix in Matrix Market format, reads it
//! back and solves with the round-tripped copy.
//!
//! ```text
//! cargo run --release --example matrix_market -- global.mtx
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter};

use hdg_maxwell::assembly::{self, DiscreteSpace, SolveOptions};
use hdg_maxwell::linsolve::{self, mmio};
use hdg_maxwell::mesh::Mesh;
use hdg_maxwell::problem;

fn main() -> hdg_maxwell::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("hdg_global.mtx").display().to_string());
    let spec = problem::example3();
    let mesh = Mesh::build_structured_cube(2)?;
    let space = DiscreteSpace::new(&mesh, 2, 2)?;
    let system = assembly::assemble_global(&spec, &mesh, &space, &SolveOptions::default())?;
    let a = &system.matrix;
    println!("global matrix {}x{} with {} stored entries", a.nrows(), a.ncols(), a.nnz());

    mmio::write(a, BufWriter::new(File::create(&path)?))?;
    let back = mmio::read(BufReader::new(File::open(&path)?))?;
    let same = a.nnz() == back.nnz() && a.values().iter().zip(back.values()).all(|(x, y)| x == y);
    println!("wrote {path}; round trip exact: {same}");

    let (x, report) = linsolve::solve(&back, &system.rhs, 1e-12)?;
    println!(
        "solved {} unknowns: relative residual {:.1e}, {} refinement steps, largest front {}",
        x.len(),
        report.relative_residual,
        report.refinement_steps,
        report.max_front
    );
    Ok(())
}
