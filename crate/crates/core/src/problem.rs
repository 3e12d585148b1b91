//! PDE data: wave number, coefficients, sources and manufactured solutions.
//!
//! The system solved is
//!
//! ```text
//! ∇×(μ⁻¹ ∇×u) − κ² ε u + ε̄ ∇p = f,   ∇·(ε u) = −ρ   in Ω,
//! n×u = n×u_D,  p = 0                                on ∂Ω,
//! ```
//!
//! with the constraint tested against continuous `χ` as `(ε u, ∇χ) = g(χ)`.

use std::fmt;
use std::sync::Arc;

use crate::{Error, Point, Result, C64};

pub type ScalarFn = Arc<dyn Fn(Point) -> C64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> [C64; 3] + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Side {
    /// `x[axis] < at`
    Below,
    /// `x[axis] ≥ at`
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Everywhere,
    HalfSpace { axis: usize, at: f64, side: Side },
}

impl Region {
    pub fn contains(&self, x: Point) -> bool {
        match *self {
            Region::Everywhere => true,
            Region::HalfSpace { axis, at, side } => match side {
                Side::Below => x[axis] < at,
                Side::Above => x[axis] >= at,
            },
        }
    }
}

#[derive(Clone)]
pub enum CoefficientValue {
    Constant(C64),
    Smooth(ScalarFn),
}

impl fmt::Debug for CoefficientValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientValue::Constant(c) => write!(f, "Constant({c})"),
            CoefficientValue::Smooth(_) => write!(f, "Smooth(..)"),
        }
    }
}

/// Piecewise coefficient; the first piece whose region contains the point wins.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pieces: Vec<(Region, CoefficientValue)>,
}

impl CoefficientField {
    pub fn constant(value: C64) -> Self {
        Self {
            pieces: vec![(Region::Everywhere, CoefficientValue::Constant(value))],
        }
    }

    pub fn smooth(f: impl Fn(Point) -> C64 + Send + Sync + 'static) -> Self {
        Self {
            pieces: vec![(Region::Everywhere, CoefficientValue::Smooth(Arc::new(f)))],
        }
    }

    /// `below` on `x[axis] < at`, `above` elsewhere.
    pub fn split(axis: usize, at: f64, below: C64, above: C64) -> Self {
        Self {
            pieces: vec![
                (
                    Region::HalfSpace { axis, at, side: Side::Below },
                    CoefficientValue::Constant(below),
                ),
                (Region::Everywhere, CoefficientValue::Constant(above)),
            ],
        }
    }

    pub fn from_pieces(pieces: Vec<(Region, CoefficientValue)>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidInput("coefficient field without pieces".into()));
        }
        Ok(Self { pieces })
    }

    pub fn pieces(&self) -> &[(Region, CoefficientValue)] {
        &self.pieces
    }

    pub fn eval(&self, x: Point) -> C64 {
        for (region, value) in &self.pieces {
            if region.contains(x) {
                return match value {
                    CoefficientValue::Constant(c) => *c,
                    CoefficientValue::Smooth(f) => f(x),
                };
            }
        }
        // unreachable for fields built through the constructors, which end with
        // a catch-all piece; otherwise fall back to the last piece
        match &self.pieces.last().expect("non-empty").1 {
            CoefficientValue::Constant(c) => *c,
            CoefficientValue::Smooth(f) => f(x),
        }
    }

    /// Pointwise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|(r, v)| {
                    let v = match v {
                        CoefficientValue::Constant(c) => CoefficientValue::Constant(c.conj()),
                        CoefficientValue::Smooth(f) => {
                            let f = f.clone();
                            CoefficientValue::Smooth(Arc::new(move |x| f(x).conj()))
                        }
                    };
                    (*r, v)
                })
                .collect(),
        }
    }

    /// Smallest real part over a uniform `m³` grid of cell centres in the unit cube.
    pub fn min_real_part(&self, m: usize) -> f64 {
        let mut lo = f64::INFINITY;
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    let x = [i, j, k].map(|c| (c as f64 + 0.5) / m as f64);
                    lo = lo.min(self.eval(x).re);
                }
            }
        }
        lo
    }
}

#[derive(Clone)]
pub struct ExactSolution {
    pub u: VectorFn,
    /// `μ⁻¹ ∇×u`
    pub q: VectorFn,
    pub p: ScalarFn,
    pub grad_p: VectorFn,
}

/// Right-hand side of the divergence constraint.
#[derive(Clone)]
pub enum ConstraintRhs {
    Zero,
    /// `g(χ) = ∫ w · ∇χ`
    Flux(VectorFn),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    U,
    Q,
    P,
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub kappa: f64,
    pub mu: CoefficientField,
    pub eps: CoefficientField,
    pub source: VectorFn,
    pub constraint: ConstraintRhs,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("kappa", &self.kappa)
            .field("mu", &self.mu)
            .field("eps", &self.eps)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

impl ProblemSpec {
    /// User problem with zero constraint data, homogeneous boundary data and no exact solution.
    pub fn custom(
        kappa: f64,
        mu: CoefficientField,
        eps: CoefficientField,
        source: impl Fn(Point) -> [C64; 3] + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidInput(format!("wave number must be finite and non-negative, got {kappa}")));
        }
        Ok(Self {
            name: "custom".into(),
            kappa,
            mu,
            eps,
            source: Arc::new(source),
            constraint: ConstraintRhs::Zero,
            exact: None,
        })
    }

    /// Attaches a manufactured solution and derives the boundary data from it.
    pub fn with_exact(mut self, exact: ExactSolution) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn with_constraint(mut self, constraint: ConstraintRhs) -> Self {
        self.constraint = constraint;
        self
    }

    /// Tangential boundary data: the exact `u` when one is attached, zero otherwise.
    pub fn boundary_field(&self) -> Option<&VectorFn> {
        self.exact.as_ref().map(|e| &e.u)
    }

    /// Checks `Re μ > 0` and `Re ε > 0` on a sample grid.
    pub fn validate(&self) -> Result<()> {
        let mu = self.mu.min_real_part(10);
        let eps = self.eps.min_real_part(10);
        if !(mu > 0.0 && eps > 0.0) {
            return Err(Error::InvalidInput(format!(
                "coefficients need positive real parts (min Re μ = {mu}, min Re ε = {eps})"
            )));
        }
        Ok(())
    }
}

/// Plane wave with constant coefficients. For `κ = 0` the exponent keeps
/// wave number 1 so the solution stays non-polynomial.
pub fn example1(kappa: f64) -> ProblemSpec {
    let eps = c(1.0, 2.0);
    let mu = c(0.2, -0.4);
    let s3 = 3f64.sqrt();
    let a = [1.0, 2.0 * s3, 2.0];
    let d = [0.0, -0.5, 0.5 * s3];
    let k0 = kappa.max(1.0);
    let phase = move |x: Point| (I * k0 * (x[0] * d[0] + x[1] * d[1] + x[2] * d[2])).exp();
    let dxa = crate::vec3::cross(d, a);
    let fcoef = k0 * k0 / mu - kappa * kappa * eps;
    let qcoef = I * k0 / mu;
    ProblemSpec {
        name: "example1".into(),
        kappa,
        mu: CoefficientField::constant(mu),
        eps: CoefficientField::constant(eps),
        source: Arc::new(move |x| {
            let e = phase(x);
            a.map(|ai| fcoef * ai * e)
        }),
        constraint: ConstraintRhs::Zero,
        exact: Some(ExactSolution {
            u: Arc::new(move |x| {
                let e = phase(x);
                a.map(|ai| ai * e)
            }),
            q: Arc::new(move |x| {
                let e = phase(x);
                dxa.map(|v| qcoef * v * e)
            }),
            p: Arc::new(|_| ZERO),
            grad_p: Arc::new(|_| [ZERO; 3]),
        }),
    }
}

fn interface_example(name: &str, jump_u1: bool) -> ProblemSpec {
    let kappa = 1.0;
    let mu = CoefficientField::split(0, 0.5, c(0.2, -0.4), c(0.25, -0.25));
    let eps = CoefficientField::split(0, 0.5, c(1.0, 2.0), c(2.0, 2.0));
    let u = move |x: Point| -> [C64; 3] {
        let s = (x[0] - 0.5) * (x[0] - 0.5);
        let u1 = if jump_u1 && x[0] < 0.5 { 2.0 } else { 1.0 };
        [c(u1, 0.0), c(s * x[2], 0.0), c(s * x[1], 0.0)]
    };
    let (mu_s, eps_s) = (mu.clone(), eps.clone());
    let source = move |x: Point| -> [C64; 3] {
        let m = mu_s.eval(x);
        let e = eps_s.eval(x);
        let uv = u(x);
        let curlcurl = [ZERO, c(-2.0 * x[2], 0.0), c(-2.0 * x[1], 0.0)];
        [0, 1, 2].map(|d| curlcurl[d] / m - kappa * kappa * e * uv[d])
    };
    let mu_q = mu.clone();
    let q = move |x: Point| -> [C64; 3] {
        let m = mu_q.eval(x);
        let w = [0.0, -2.0 * (x[0] - 0.5) * x[1], 2.0 * (x[0] - 0.5) * x[2]];
        w.map(|v| v / m)
    };
    let eps_w = eps.clone();
    let flux = move |x: Point| -> [C64; 3] {
        let e = eps_w.eval(x);
        u(x).map(|v| e * v)
    };
    ProblemSpec {
        name: name.into(),
        kappa,
        mu,
        eps,
        source: Arc::new(source),
        constraint: ConstraintRhs::Flux(Arc::new(flux)),
        exact: Some(ExactSolution {
            u: Arc::new(u),
            q: Arc::new(q),
            p: Arc::new(|_| ZERO),
            grad_p: Arc::new(|_| [ZERO; 3]),
        }),
    }
}

/// Coefficients jumping across `x = 0.5`, smooth exact field.
pub fn example2() -> ProblemSpec {
    interface_example("example2", false)
}

/// As [`example2`] with the first field component jumping from 2 to 1 at `x = 0.5`.
pub fn example3() -> ProblemSpec {
    interface_example("example3", true)
}

/// Scalar problem identifier used by the command line.
pub fn by_id(id: u32, kappa: f64) -> Result<ProblemSpec> {
    match id {
        1 => Ok(example1(kappa)),
        2 => Ok(example2()),
        3 => Ok(example3()),
        _ => Err(Error::InvalidInput(format!("unknown example {id}"))),
    }
}

/// Evaluates an exact field at the given points; `P` values are returned in the first component.
pub fn evaluate_exact(spec: &ProblemSpec, field: Field, points: &[Point]) -> Result<Vec<[C64; 3]>> {
    let exact = spec
        .exact
        .as_ref()
        .ok_or_else(|| Error::NoExactSolution(spec.name.clone()))?;
    Ok(points
        .iter()
        .map(|&x| match field {
            Field::U => (exact.u)(x),
            Field::Q => (exact.q)(x),
            Field::P => [(exact.p)(x), ZERO, ZERO],
        })
        .collect())
}
