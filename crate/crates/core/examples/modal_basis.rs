//! Mass matrices of the orthonormal modal bases on the reference simplices.

use hdg_maxwell::basis::OrthonormalBasis;
use hdg_maxwell::quadrature::{tet_rule, tri_rule, QuadratureRule};

fn mass_defect(basis: &OrthonormalBasis, rule: &QuadratureRule) -> f64 {
    let n = basis.dim();
    let mut m = vec![0.0; n * n];
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let v = basis.values_at(*p);
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] += w * v[i] * v[j];
            }
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m[i * n + j] - id).abs());
        }
    }
    worst
}

fn main() -> hdg_maxwell::Result<()> {
    println!("{:>6} {:>8} {:>12} {:>8} {:>12}", "degree", "tet dim", "|M - I|", "tri dim", "|M - I|");
    for p in 0..=4 {
        let tet = OrthonormalBasis::tetrahedron(p)?;
        let tri = OrthonormalBasis::triangle(p)?;
        let dt = mass_defect(&tet, &tet_rule(2 * p)?);
        let df = mass_defect(&tri, &tri_rule(2 * p)?);
        println!("{p:>6} {:>8} {dt:>12.2e} {:>8} {df:>12.2e}", tet.dim(), tri.dim());
    }
    Ok(())
}
