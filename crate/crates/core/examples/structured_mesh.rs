//! Builds the Kuhn triangulation of the unit cube and prints its statistics.
//!
//! ```text
//! cargo run --release --example structured_mesh -- 4 mesh.txt
//! ```

use hdg_maxwell::mesh::Mesh;

fn main() -> hdg_maxwell::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(4, |s| s.parse().expect("cells per axis"));
    let mesh = Mesh::build_structured_cube(n)?;

    let boundary = (0..mesh.num_faces()).filter(|&f| mesh.is_boundary_face(f)).count();
    println!("cells per axis   {n}");
    println!("vertices         {}", mesh.vertices().len());
    println!("tetrahedra       {}", mesh.num_elements());
    println!("faces            {} ({} on the boundary)", mesh.num_faces(), boundary);
    println!("max diameter     {:.6}", mesh.max_diameter());
    println!("total volume     {:.15}", mesh.total_volume());
    if n.is_multiple_of(2) {
        println!("faces on x = 0.5 {}", mesh.faces_on_plane(0, 0.5, 1e-12).len());
    }

    if let Some(path) = args.next() {
        let file = std::fs::File::create(&path)?;
        mesh.write_text(std::io::BufWriter::new(file))?;
        println!("wrote {path}");
    }
    Ok(())
}
