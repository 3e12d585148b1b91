//! Errors, convergence rates, the discrete energy norm and two structural
//! checks of a computed solution.

use rayon::prelude::*;

use crate::assembly::{
    assemble_cg_gradient_system, assemble_local, with_workers, Diagnostics, DiscreteSpace, LocalOptions,
    SolutionFields,
};
use crate::basis::Tabulation;
use crate::linsolve;
use crate::mesh::Mesh;
use crate::problem::{ConstraintRhs, ProblemSpec, VectorFn};
use crate::quadrature::{tet_rule, QuadratureRule, MAX_DEGREE};
use crate::{Error, Point, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct ErrorReport {
    /// Cells per axis, when the mesh is structured.
    pub n: Option<usize>,
    pub h: f64,
    pub global_dofs: usize,
    pub err_q_rel: f64,
    pub err_u_rel: f64,
    /// `‖∇(p − p_h)‖`, absolute.
    pub err_gradp: f64,
    /// Energy norm of `(q − q_h, u − u_h, u|_F − û_h, p − p_h)`.
    pub triple: f64,
    pub rate_q: Option<f64>,
    pub rate_u: Option<f64>,
    pub rate_gradp: Option<f64>,
    pub diagnostics: Option<Diagnostics>,
}

/// Order-independent-of-threads sum.
fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn norm2(v: [C64; 3]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

fn error_rule(space: &DiscreteSpace) -> Result<QuadratureRule> {
    tet_rule((space.vol_rule.degree + 4).min(MAX_DEGREE))
}

/// Per-point values of a discrete element field `Σ_d Σ_j c[d·N+j] φ_j e_d`.
fn vector_value(tab: &Tabulation, ip: usize, c: &[C64]) -> [C64; 3] {
    let n = tab.dim;
    let phi = tab.values_at(ip);
    let mut v = [ZERO; 3];
    for d in 0..3 {
        for j in 0..n {
            v[d] += c[d * n + j] * phi[j];
        }
    }
    v
}

/// Squared element contributions to the energy norm, without the face term.
struct VolumeTerms {
    q: f64,
    u: f64,
    curl: f64,
    gradp: f64,
}

/// Volume part of the norm for element `e`, optionally of the error against the exact solution.
fn volume_terms(
    spec: &ProblemSpec,
    mesh: &Mesh,
    space: &DiscreteSpace,
    fields: &SolutionFields,
    e: usize,
    rule: &QuadratureRule,
    tabs: &(Tabulation, Tabulation, Tabulation),
    exact: bool,
    weighted: bool,
) -> VolumeTerms {
    let (tq, tu, tp) = tabs;
    let geo = mesh.element_geometry(e);
    let det = geo.det.abs();
    let qc = fields.q_elem(e);
    let uc = fields.u_elem(e);
    let pdofs = space.cg.element_dofs(e);
    let nk = tu.dim;
    let mut out = VolumeTerms {
        q: 0.0,
        u: 0.0,
        curl: 0.0,
        gradp: 0.0,
    };
    for (ip, (xr, wr)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let x = geo.to_physical(*xr);
        let w = wr * det;
        let mut q = vector_value(tq, ip, qc);
        let mut u = vector_value(tu, ip, uc);
        let mut curl = [ZERO; 3];
        for d in 0..3 {
            for j in 0..nk {
                let g = geo.push_gradient(tu.gradient(ip, j));
                // ∇×(φ e_d) = ∇φ × e_d
                let c = uc[d * nk + j];
                match d {
                    0 => {
                        curl[1] += c * g[2];
                        curl[2] -= c * g[1];
                    }
                    1 => {
                        curl[0] -= c * g[2];
                        curl[2] += c * g[0];
                    }
                    _ => {
                        curl[0] += c * g[1];
                        curl[1] -= c * g[0];
                    }
                }
            }
        }
        let mut gp = [ZERO; 3];
        for (i, &node) in pdofs.iter().enumerate() {
            let g = geo.push_gradient(tp.gradient(ip, i));
            for d in 0..3 {
                gp[d] += fields.p[node] * g[d];
            }
        }
        let mu = spec.mu.eval(x);
        if exact {
            let ex = spec.exact.as_ref().expect("checked by caller");
            let (qe, ue, ge) = ((ex.q)(x), (ex.u)(x), (ex.grad_p)(x));
            for d in 0..3 {
                q[d] = qe[d] - q[d];
                u[d] = ue[d] - u[d];
                gp[d] = ge[d] - gp[d];
                // ∇×u = μ q for the exact solution
                curl[d] = mu * qe[d] - curl[d];
            }
        }
        let (wm, we) = if weighted {
            (mu.re, spec.eps.eval(x).re)
        } else {
            (1.0, 1.0)
        };
        out.q += w * wm * norm2(q);
        out.u += w * we * norm2(u);
        out.curl += w * norm2(curl);
        out.gradp += w * we * norm2(gp);
    }
    out
}

/// `Σ_F h_K⁻¹ ‖n×(u_h − û_h)‖²_F` over the faces of `e`.
fn jump_term(mesh: &Mesh, space: &DiscreteSpace, fields: &SolutionFields, e: usize) -> Result<f64> {
    let h = mesh.element_diameter(e)?;
    let uc = fields.u_elem(e);
    let nf = space.face_basis.scalar_dim();
    let mut s = 0.0;
    for lf in 0..4 {
        let fid = mesh.element_faces(e)[lf];
        let face = &mesh.faces()[fid];
        let jac = mesh.face_geometry(fid).jacobian_measure;
        let (_, tu) = space.face_element_tabs(mesh, e, lf);
        let uh = fields.uhat_face(fid);
        let n = face.frame.normal;
        let ts = [face.frame.t1, face.frame.t2];
        for (ip, wr) in space.face_rule.weights.iter().enumerate() {
            let u = vector_value(tu, ip, uc);
            let eta = space.face_tab.values_at(ip);
            let mut d = u;
            let un = u[0] * n[0] + u[1] * n[1] + u[2] * n[2];
            for c in 0..3 {
                d[c] -= un * n[c];
            }
            for (a, t) in ts.iter().enumerate() {
                let mut v = ZERO;
                for i in 0..nf {
                    v += uh[a * nf + i] * eta[i];
                }
                for c in 0..3 {
                    d[c] -= v * t[c];
                }
            }
            s += wr * jac * norm2(d);
        }
    }
    Ok(s / h)
}

fn tabulations(space: &DiscreteSpace, rule: &QuadratureRule) -> (Tabulation, Tabulation, Tabulation) {
    (
        Tabulation::of_modal(&space.q_basis.scalar, &rule.points),
        Tabulation::of_modal(&space.u_basis.scalar, &rule.points),
        space.cg.basis.tabulate(&rule.points),
    )
}

fn check_fields(mesh: &Mesh, space: &DiscreteSpace, fields: &SolutionFields) -> Result<()> {
    let ok = fields.k == space.k
        && fields.m == space.m
        && fields.q.len() == mesh.num_elements() * space.nq()
        && fields.u.len() == mesh.num_elements() * space.nu()
        && fields.uhat.len() == mesh.num_faces() * space.nfb()
        && fields.p.len() == space.cg.num_nodes();
    if ok {
        Ok(())
    } else {
        Err(Error::DimensionMismatch("fields do not match the mesh and space".into()))
    }
}

/// Relative `L²` errors of `q`, `u`, the absolute error of `∇p` and the
/// energy norm of the error. Rates are left empty; see [`fill_rates`].
pub fn l2_errors(spec: &ProblemSpec, mesh: &Mesh, space: &DiscreteSpace, fields: &SolutionFields) -> Result<ErrorReport> {
    let ex = spec.exact.as_ref().ok_or_else(|| Error::NoExactSolution(spec.name.clone()))?;
    check_fields(mesh, space, fields)?;
    let rule = error_rule(space)?;
    let tabs = tabulations(space, &rule);
    let per: Vec<Result<[f64; 7]>> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let err = volume_terms(spec, mesh, space, fields, e, &rule, &tabs, true, false);
            let wtd = volume_terms(spec, mesh, space, fields, e, &rule, &tabs, true, true);
            let jump = jump_term(mesh, space, fields, e)?;
            let geo = mesh.element_geometry(e);
            let det = geo.det.abs();
            let (mut nq, mut nu) = (0.0, 0.0);
            for (xr, wr) in rule.points.iter().zip(&rule.weights) {
                let x = geo.to_physical(*xr);
                nq += wr * det * norm2((ex.q)(x));
                nu += wr * det * norm2((ex.u)(x));
            }
            Ok([err.q, err.u, err.gradp, nq, nu, wtd.q + wtd.u + wtd.curl + wtd.gradp, jump])
        })
        .collect();
    let mut cols: [Vec<f64>; 7] = Default::default();
    for r in per {
        let r = r?;
        for (c, v) in cols.iter_mut().zip(r) {
            c.push(v);
        }
    }
    let s: Vec<f64> = cols.iter().map(|c| pairwise_sum(c)).collect();
    let rel = |e: f64, n: f64| if n > 0.0 { (e / n).sqrt() } else { e.sqrt() };
    Ok(ErrorReport {
        n: mesh.level(),
        h: mesh.max_diameter(),
        global_dofs: fields.diagnostics.as_ref().map_or(0, |d| d.global_dofs),
        err_q_rel: rel(s[0], s[3]),
        err_u_rel: rel(s[1], s[4]),
        err_gradp: s[2].sqrt(),
        triple: (s[5] + s[6]).sqrt(),
        rate_q: None,
        rate_u: None,
        rate_gradp: None,
        diagnostics: fields.diagnostics.clone(),
    })
}

/// `log₂(e_coarse / e_fine)`.
pub fn rate(coarse: f64, fine: f64) -> Option<f64> {
    (coarse > 0.0 && fine > 0.0).then(|| (coarse / fine).log2())
}

/// Fills rates between consecutive reports whose `n` doubles.
pub fn fill_rates(reports: &mut [ErrorReport]) {
    for i in 1..reports.len() {
        let (a, b) = reports.split_at_mut(i);
        let (prev, cur) = (&a[i - 1], &mut b[0]);
        let doubles = matches!((prev.n, cur.n), (Some(p), Some(c)) if c == 2 * p);
        if doubles {
            cur.rate_q = rate(prev.err_q_rel, cur.err_q_rel);
            cur.rate_u = rate(prev.err_u_rel, cur.err_u_rel);
            cur.rate_gradp = rate(prev.err_gradp, cur.err_gradp);
        } else {
            cur.rate_q = None;
            cur.rate_u = None;
            cur.rate_gradp = None;
        }
    }
}

/// `(‖√Re μ q‖² + ‖√Re ε u‖² + ‖∇×u‖²_h + ‖h^{-1/2} n×(u − û)‖²_∂ + ‖√Re ε ∇p‖²)^{1/2}`.
pub fn triple_norm(spec: &ProblemSpec, mesh: &Mesh, space: &DiscreteSpace, fields: &SolutionFields) -> Result<f64> {
    check_fields(mesh, space, fields)?;
    let rule = error_rule(space)?;
    let tabs = tabulations(space, &rule);
    let per: Vec<Result<f64>> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let v = volume_terms(spec, mesh, space, fields, e, &rule, &tabs, false, true);
            Ok(v.q + v.u + v.curl + v.gradp + jump_term(mesh, space, fields, e)?)
        })
        .collect();
    let per = per.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&per).sqrt())
}

/// Result of splitting a discrete field into an `ε`-weighted discrete
/// divergence-free part and a gradient.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// `z_h` in the layout of [`SolutionFields::u`].
    pub z: Vec<C64>,
    /// `ξ_h` at all CG nodes, zero on the boundary.
    pub xi: Vec<C64>,
}

fn eval_field_at_vol(space: &DiscreteSpace, v: &[C64], e: usize, iq: usize) -> [C64; 3] {
    let nu = space.nu();
    vector_value(&space.u_vol, iq, &v[e * nu..(e + 1) * nu])
}

/// Coefficients of `∇ξ_h` in the discontinuous `[P_k]³` basis; exact because
/// the gradient of a `P_{k+1}` function is in `[P_k]³`.
pub fn gradient_in_u_basis(mesh: &Mesh, space: &DiscreteSpace, xi: &[C64]) -> Vec<C64> {
    let nk = space.u_basis.scalar_dim();
    let nu = space.nu();
    let mut out = vec![ZERO; mesh.num_elements() * nu];
    for (e, chunk) in out.chunks_mut(nu).enumerate() {
        let geo = mesh.element_geometry(e);
        let dofs = space.cg.element_dofs(e);
        for (iq, wr) in space.vol_rule.weights.iter().enumerate() {
            let mut g = [ZERO; 3];
            for (i, &node) in dofs.iter().enumerate() {
                let gi = geo.push_gradient(space.p_vol.gradient(iq, i));
                for d in 0..3 {
                    g[d] += xi[node] * gi[d];
                }
            }
            let phi = space.u_vol.values_at(iq);
            // the modes are orthonormal on the reference element
            for d in 0..3 {
                for j in 0..nk {
                    chunk[d * nk + j] += g[d] * (wr * phi[j]);
                }
            }
        }
    }
    out
}

/// Solves `(ε ∇ξ_h, ∇χ_h) = (ε v_h, ∇χ_h)` for all `χ_h` vanishing on the
/// boundary and returns `z_h = v_h − ∇ξ_h`.
pub fn helmholtz_decompose(
    spec: &ProblemSpec,
    mesh: &Mesh,
    space: &DiscreteSpace,
    v: &[C64],
    tol: f64,
) -> Result<Decomposition> {
    if v.len() != mesh.num_elements() * space.nu() {
        return Err(Error::DimensionMismatch(format!(
            "field of length {} for {} elements",
            v.len(),
            mesh.num_elements()
        )));
    }
    let coef = |x: Point| spec.eps.eval(x);
    let load = |e: usize, iq: usize, x: Point| {
        let eps = spec.eps.eval(x);
        eval_field_at_vol(space, v, e, iq).map(|c| c * eps)
    };
    let (a, b) = assemble_cg_gradient_system(mesh, space, &coef, &load, None)?;
    let xi = if a.nrows() == 0 {
        vec![ZERO; space.cg.num_nodes()]
    } else {
        let (x, _) = linsolve::solve(&a, &b, tol)?;
        space.cg.expand_interior(&x)
    };
    let g = gradient_in_u_basis(mesh, space, &xi);
    let z = v.iter().zip(&g).map(|(a, b)| a - b).collect();
    Ok(Decomposition { z, xi })
}

/// `max_i |(ε z_h, ∇χ_i)|` over interior CG basis functions, divided by
/// `max_i Σ |contributions|` so that it is scale free.
pub fn gradient_orthogonality_residual(spec: &ProblemSpec, mesh: &Mesh, space: &DiscreteSpace, z: &[C64]) -> Result<f64> {
    weighted_gradient_residual(spec, mesh, space, z, None)
}

/// Relative residual of the discrete constraint `(ε u_h, ∇χ) = g(χ)` over
/// all continuous `χ` vanishing on the boundary.
pub fn constraint_residual(spec: &ProblemSpec, mesh: &Mesh, space: &DiscreteSpace, fields: &SolutionFields) -> Result<f64> {
    check_fields(mesh, space, fields)?;
    let flux = match &spec.constraint {
        ConstraintRhs::Zero => None,
        ConstraintRhs::Flux(w) => Some(w),
    };
    weighted_gradient_residual(spec, mesh, space, &fields.u, flux)
}

/// `max_i |(ε v − w, ∇φ_i)| / ‖∇φ_i‖` over interior nodal functions, divided
/// by `‖ε v‖ + ‖w‖`; at most 1 by Cauchy–Schwarz.
fn weighted_gradient_residual(
    spec: &ProblemSpec,
    mesh: &Mesh,
    space: &DiscreteSpace,
    v: &[C64],
    flux: Option<&VectorFn>,
) -> Result<f64> {
    let one = |_: Point| C64::new(1.0, 0.0);
    let w = |x: Point| flux.map_or([ZERO; 3], |f| f(x));
    let load = |e: usize, iq: usize, x: Point| {
        let eps = spec.eps.eval(x);
        let vv = eval_field_at_vol(space, v, e, iq);
        let wx = w(x);
        [0, 1, 2].map(|d| eps * vv[d] - wx[d])
    };
    let (stiff, b) = assemble_cg_gradient_system(mesh, space, &one, &load, None)?;
    let num = b
        .iter()
        .enumerate()
        .map(|(i, c)| c.norm() / stiff.get(i, i).re.sqrt())
        .fold(0.0, f64::max);
    let (mut ev, mut ww) = (0.0, 0.0);
    for e in 0..mesh.num_elements() {
        let geo = mesh.element_geometry(e);
        let det = geo.det.abs();
        for (iq, (xr, wr)) in space.vol_rule.points.iter().zip(&space.vol_rule.weights).enumerate() {
            let x = geo.to_physical(*xr);
            let eps = spec.eps.eval(x);
            ev += wr * det * norm2(eval_field_at_vol(space, v, e, iq).map(|c| c * eps));
            ww += wr * det * norm2(w(x));
        }
    }
    let den = ev.sqrt() + ww.sqrt();
    Ok(if den > 0.0 { num / den } else { num })
}

/// Largest flux-jump functional over interior faces, relative to the largest
/// one-sided contribution. It is zero up to rounding for a solution of the
/// global system.
pub fn transmission_residual(
    spec: &ProblemSpec,
    mesh: &Mesh,
    space: &DiscreteSpace,
    fields: &SolutionFields,
    stabilization_scale: f64,
) -> Result<f64> {
    check_fields(mesh, space, fields)?;
    let nfb = space.nfb();
    let opts = LocalOptions {
        stabilization_scale,
        ..Default::default()
    };
    let per: Vec<Result<Vec<C64>>> = with_workers(None, || {
        (0..mesh.num_elements())
            .into_par_iter()
            .map(|e| {
                let local = assemble_local(spec, mesh, space, e, &opts)?;
                let lay = local.layout;
                let mut x = Vec::with_capacity(lay.len());
                x.extend_from_slice(fields.q_elem(e));
                x.extend_from_slice(fields.u_elem(e));
                for &f in mesh.element_faces(e) {
                    x.extend_from_slice(fields.uhat_face(f));
                }
                x.extend(space.cg.element_dofs(e).iter().map(|&n| fields.p[n]));
                let mut r = vec![ZERO; 4 * nfb];
                for (i, ri) in r.iter_mut().enumerate() {
                    let row = lay.uhat0(0) + i;
                    let mut s = -local.f[row];
                    for (j, xj) in x.iter().enumerate() {
                        s += local.a[(row, j)] * xj;
                    }
                    *ri = s;
                }
                Ok(r)
            })
            .collect()
    })?;
    let mut sum = vec![ZERO; mesh.num_faces() * nfb];
    let mut side = 0.0f64;
    for (e, r) in per.into_iter().enumerate() {
        let r = r?;
        for (lf, &f) in mesh.element_faces(e).iter().enumerate() {
            if mesh.is_boundary_face(f) {
                continue;
            }
            for s in 0..nfb {
                let v = r[lf * nfb + s];
                side = side.max(v.norm());
                sum[f * nfb + s] += v;
            }
        }
    }
    let num = sum.iter().map(|c| c.norm()).fold(0.0, f64::max);
    Ok(if side > 0.0 { num / side } else { num })
}
