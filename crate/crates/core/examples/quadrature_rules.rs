//! Collapsed Gauss-Jacobi rules on the reference tetrahedron and triangle,
//! checked against `a! b! c! / (a+b+c+3)!`.

use hdg_maxwell::quadrature::{tet_rule, tri_rule};

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn main() -> hdg_maxwell::Result<()> {
    println!("{:>6} {:>8} {:>8} {:>12}", "degree", "tet pts", "tri pts", "worst error");
    for degree in [2, 4, 6, 8, 10, 14] {
        let tet = tet_rule(degree)?;
        let tri = tri_rule(degree)?;
        let mut worst: f64 = 0.0;
        for a in 0..=degree as u32 {
            for b in 0..=degree as u32 - a {
                let c = degree as u32 - a - b;
                let exact = factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3);
                let approx: f64 = tet
                    .points
                    .iter()
                    .zip(&tet.weights)
                    .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
                    .sum();
                worst = worst.max((approx - exact).abs() / exact);
            }
        }
        println!("{degree:>6} {:>8} {:>8} {worst:>12.2e}", tet.len(), tri.len());
    }
    Ok(())
}
