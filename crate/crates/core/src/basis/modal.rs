use crate::quadrature::{tet_rule, tri_rule};
use crate::{Error, Result};

/// Highest polynomial degree for which the monomial Gram–Schmidt basis is
/// offered; beyond it conditioning degrades quickly.
pub const MAX_MODAL_DEGREE: usize = 6;

/// Scalar polynomial basis on a reference simplex, orthonormal in `L²`.
///
/// Each function is a combination of monomials shifted to the reference
/// centroid, orthonormalized by two passes of modified Gram–Schmidt under an
/// exactly integrated inner product.
#[derive(Debug, Clone)]
pub struct OrthonormalBasis {
    dim: usize,
    degree: usize,
    exponents: Vec<[usize; 3]>,
    centroid: [f64; 3],
    /// `coeffs[j * n + m]`: weight of monomial `m` in basis function `j`.
    coeffs: Vec<f64>,
}

/// Number of polynomials of total degree `≤ p` in `dim` variables.
pub fn poly_dim(dim: usize, p: usize) -> usize {
    match dim {
        2 => (p + 1) * (p + 2) / 2,
        3 => (p + 1) * (p + 2) * (p + 3) / 6,
        _ => panic!("unsupported dimension {dim}"),
    }
}

fn exponents(dim: usize, p: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(poly_dim(dim, p));
    for total in 0..=p {
        if dim == 2 {
            for b in 0..=total {
                out.push([total - b, b, 0]);
            }
        } else {
            for c in 0..=total {
                for b in 0..=total - c {
                    out.push([total - b - c, b, c]);
                }
            }
        }
    }
    out
}

impl OrthonormalBasis {
    pub fn tetrahedron(degree: usize) -> Result<Self> {
        Self::build(3, degree)
    }

    pub fn triangle(degree: usize) -> Result<Self> {
        Self::build(2, degree)
    }

    fn build(dim: usize, degree: usize) -> Result<Self> {
        if degree > MAX_MODAL_DEGREE {
            return Err(Error::UnsupportedDegree {
                degree,
                max: MAX_MODAL_DEGREE,
            });
        }
        let exps = exponents(dim, degree);
        let n = exps.len();
        let centroid = if dim == 3 { [0.25; 3] } else { [1.0 / 3.0, 1.0 / 3.0, 0.0] };
        let rule = if dim == 3 { tet_rule(2 * degree)? } else { tri_rule(2 * degree)? };
        let mut raw = Self {
            dim,
            degree,
            exponents: exps,
            centroid,
            coeffs: Vec::new(),
        };
        // Gram matrix of the shifted monomials
        let mut gram = vec![0.0; n * n];
        let mut vals = vec![0.0; n];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            raw.monomials(*p, &mut vals);
            for a in 0..n {
                for b in 0..n {
                    gram[a * n + b] += w * vals[a] * vals[b];
                }
            }
        }
        let inner = |x: &[f64], y: &[f64]| -> f64 {
            let mut s = 0.0;
            for a in 0..n {
                let mut t = 0.0;
                for b in 0..n {
                    t += gram[a * n + b] * y[b];
                }
                s += x[a] * t;
            }
            s
        };
        let mut coeffs = vec![0.0; n * n];
        for j in 0..n {
            let mut v = vec![0.0; n];
            v[j] = 1.0;
            for _pass in 0..2 {
                for i in 0..j {
                    let prev = &coeffs[i * n..(i + 1) * n];
                    let proj = inner(&v, prev);
                    for m in 0..n {
                        v[m] -= proj * prev[m];
                    }
                }
            }
            let nrm = inner(&v, &v).sqrt();
            for m in 0..n {
                coeffs[j * n + m] = v[m] / nrm;
            }
        }
        raw.coeffs = coeffs;
        Ok(raw)
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn spatial_dim(&self) -> usize {
        self.dim
    }

    fn monomials(&self, p: [f64; 3], out: &mut [f64]) {
        let x = [p[0] - self.centroid[0], p[1] - self.centroid[1], p[2] - self.centroid[2]];
        for (m, e) in self.exponents.iter().enumerate() {
            out[m] = x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32);
        }
    }

    fn monomial_gradients(&self, p: [f64; 3], out: &mut [[f64; 3]]) {
        let x = [p[0] - self.centroid[0], p[1] - self.centroid[1], p[2] - self.centroid[2]];
        let pw = |v: f64, e: usize| if e == 0 { 1.0 } else { v.powi(e as i32) };
        for (m, e) in self.exponents.iter().enumerate() {
            let mut g = [0.0; 3];
            for d in 0..3 {
                if e[d] == 0 {
                    continue;
                }
                let mut t = e[d] as f64 * pw(x[d], e[d] - 1);
                for o in 0..3 {
                    if o != d {
                        t *= pw(x[o], e[o]);
                    }
                }
                g[d] = t;
            }
            out[m] = g;
        }
    }

    /// Values of all basis functions at a reference point.
    pub fn eval(&self, p: [f64; 3], out: &mut [f64]) {
        let n = self.dim();
        let mut mono = vec![0.0; n];
        self.monomials(p, &mut mono);
        for j in 0..n {
            let c = &self.coeffs[j * n..(j + 1) * n];
            out[j] = c.iter().zip(&mono).map(|(a, b)| a * b).sum();
        }
    }

    /// Reference gradients of all basis functions at a reference point.
    pub fn eval_gradients(&self, p: [f64; 3], out: &mut [[f64; 3]]) {
        let n = self.dim();
        let mut mono = vec![[0.0; 3]; n];
        self.monomial_gradients(p, &mut mono);
        for j in 0..n {
            let c = &self.coeffs[j * n..(j + 1) * n];
            let mut g = [0.0; 3];
            for (a, mg) in c.iter().zip(&mono) {
                for d in 0..3 {
                    g[d] += a * mg[d];
                }
            }
            out[j] = g;
        }
    }

    pub fn values_at(&self, p: [f64; 3]) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        self.eval(p, &mut v);
        v
    }

    pub fn gradients_at(&self, p: [f64; 3]) -> Vec<[f64; 3]> {
        let mut v = vec![[0.0; 3]; self.dim()];
        self.eval_gradients(p, &mut v);
        v
    }
}
