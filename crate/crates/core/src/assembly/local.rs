use faer::linalg::solvers::Solve;
use faer::Mat;

use super::space::DiscreteSpace;
use crate::mesh::Mesh;
use crate::problem::{ConstraintRhs, ProblemSpec};
use crate::vec3::cross;
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Offsets of the unknown groups inside a local system:
/// `[q | u | û on faces 0..4 | p]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalLayout {
    pub nq: usize,
    pub nu: usize,
    pub nfb: usize,
    pub np: usize,
}

impl LocalLayout {
    pub fn of(space: &DiscreteSpace) -> Self {
        Self {
            nq: space.nq(),
            nu: space.nu(),
            nfb: space.nfb(),
            np: space.np(),
        }
    }

    pub fn q0(&self) -> usize {
        0
    }

    pub fn u0(&self) -> usize {
        self.nq
    }

    pub fn uhat0(&self, face: usize) -> usize {
        self.nq + self.nu + face * self.nfb
    }

    pub fn p0(&self) -> usize {
        self.nq + self.nu + 4 * self.nfb
    }

    /// Interior unknowns `(q, u)`.
    pub fn ni(&self) -> usize {
        self.nq + self.nu
    }

    pub fn len(&self) -> usize {
        self.p0() + self.np
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Variants of the element form used by tests and diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct LocalOptions {
    /// Multiplies the `h_K⁻¹` stabilization.
    pub stabilization_scale: f64,
    /// Adds `shift·(ε u, v)`; `κ² + 1` turns `B⁻` into `B⁺`.
    pub mass_shift: f64,
    /// Uses `conj(μ)` and, in the `κ²` term only, `conj(ε)`: the coefficients of the formal adjoint.
    pub adjoint_coefficients: bool,
}

impl Default for LocalOptions {
    fn default() -> Self {
        Self {
            stabilization_scale: 1.0,
            mass_shift: 0.0,
            adjoint_coefficients: false,
        }
    }
}

/// Element matrix of the discrete form, rows = test functions, columns =
/// trial functions, with its load vector.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    pub elem: usize,
    pub layout: LocalLayout,
    pub a: Mat<C64>,
    pub f: Vec<C64>,
}

/// Schur complement on the trace unknowns.
#[derive(Debug, Clone)]
pub struct Condensed {
    pub s: Mat<C64>,
    pub g: Vec<C64>,
}

pub fn assemble_local(
    spec: &ProblemSpec,
    mesh: &Mesh,
    space: &DiscreteSpace,
    elem: usize,
    opts: &LocalOptions,
) -> Result<LocalSystem> {
    let lay = LocalLayout::of(space);
    let n = lay.len();
    let (nm, nk) = space.scalar_dims();
    let np = lay.np;
    let mut a = Mat::<C64>::zeros(n, n);
    let mut f = vec![ZERO; n];
    let geo = mesh.element_geometry(elem);
    let det = geo.det.abs();
    let kappa2 = spec.kappa * spec.kappa;
    let h = mesh.element_diameter(elem)?;
    let tau = opts.stabilization_scale / h;

    // volume terms
    let rule = &space.vol_rule;
    let mut m_mu = vec![ZERO; nm * nm];
    let mut m_k = vec![ZERO; nk * nk];
    // curl coupling C[(e, i), (d, j)] = ∫ φ_i (∇ψ_j × e_d)_e, real
    let mut curl = vec![0.0; 3 * nk * 3 * nm];
    let mut up = vec![ZERO; 3 * nk * np];
    let mut pu = vec![ZERO; np * 3 * nk];
    let mut gq = vec![[0.0; 3]; nm];
    let mut gp = vec![[0.0; 3]; np];
    for (iq, (xr, wr)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let x = geo.to_physical(*xr);
        let w = wr * det;
        let mut mu = spec.mu.eval(x);
        let eps = spec.eps.eval(x);
        let mut eps_k = eps;
        if opts.adjoint_coefficients {
            mu = mu.conj();
            eps_k = eps.conj();
        }
        let psi = space.q_vol.values_at(iq);
        let phi = space.u_vol.values_at(iq);
        for j in 0..nm {
            gq[j] = geo.push_gradient(space.q_vol.gradient(iq, j));
        }
        for j in 0..np {
            gp[j] = geo.push_gradient(space.p_vol.gradient(iq, j));
        }
        let wmu = mu * w;
        for i in 0..nm {
            let s = wmu * psi[i];
            for j in 0..nm {
                m_mu[i * nm + j] += s * psi[j];
            }
        }
        let wk = (eps_k * (-kappa2) + eps * opts.mass_shift) * w;
        for i in 0..nk {
            let s = wk * phi[i];
            for j in 0..nk {
                m_k[i * nk + j] += s * phi[j];
            }
        }
        for d in 0..3 {
            let mut ed = [0.0; 3];
            ed[d] = 1.0;
            for j in 0..nm {
                let c = cross(gq[j], ed);
                for e in 0..3 {
                    if c[e] == 0.0 {
                        continue;
                    }
                    let s = w * c[e];
                    for i in 0..nk {
                        curl[(e * nk + i) * 3 * nm + d * nm + j] += s * phi[i];
                    }
                }
            }
        }
        let wc = eps.conj() * w;
        let we = eps * w;
        for e in 0..3 {
            for i in 0..nk {
                for j in 0..np {
                    up[(e * nk + i) * np + j] += wc * (gp[j][e] * phi[i]);
                    pu[j * 3 * nk + e * nk + i] -= we * (gp[j][e] * phi[i]);
                }
            }
        }
        let fx = (spec.source)(x);
        for e in 0..3 {
            for i in 0..nk {
                f[lay.u0() + e * nk + i] += fx[e] * (w * phi[i]);
            }
        }
        if let ConstraintRhs::Flux(wf) = &spec.constraint {
            let wx = wf(x);
            for j in 0..np {
                let g = wx[0] * gp[j][0] + wx[1] * gp[j][1] + wx[2] * gp[j][2];
                f[lay.p0() + j] -= g * w;
            }
        }
    }
    for d in 0..3 {
        for i in 0..nm {
            for j in 0..nm {
                a[(d * nm + i, d * nm + j)] = m_mu[i * nm + j];
            }
        }
        for i in 0..nk {
            for j in 0..nk {
                a[(lay.u0() + d * nk + i, lay.u0() + d * nk + j)] = m_k[i * nk + j];
            }
        }
    }
    for r in 0..3 * nk {
        for c in 0..3 * nm {
            let v = curl[r * 3 * nm + c];
            a[(lay.u0() + r, c)] = C64::new(v, 0.0);
            a[(c, lay.u0() + r)] = C64::new(-v, 0.0);
        }
        for j in 0..np {
            a[(lay.u0() + r, lay.p0() + j)] = up[r * np + j];
            a[(lay.p0() + j, lay.u0() + r)] = pu[j * 3 * nk + r];
        }
    }

    // face terms
    let frule = &space.face_rule;
    let nf = space.face_basis.scalar_dim();
    for lf in 0..4 {
        let face_id = mesh.element_faces(elem)[lf];
        let face = &mesh.faces()[face_id];
        let sign = mesh.face_orientation(elem, lf);
        let fr = face.frame;
        let nrm = fr.normal.map(|c| sign * c);
        let ts = [fr.t1, fr.t2];
        let nts = [cross(nrm, ts[0]), cross(nrm, ts[1])];
        let jac = mesh.face_geometry(face_id).jacobian_measure;
        let (qt, ut) = space.face_element_tabs(mesh, elem, lf);
        let uh0 = lay.uhat0(lf);
        for (ip, wr) in frule.weights.iter().enumerate() {
            let w = wr * jac;
            let psi = qt.values_at(ip);
            let phi = ut.values_at(ip);
            let eta = space.face_tab.values_at(ip);
            // q-û coupling
            for a_ in 0..2 {
                for d in 0..3 {
                    let c = nts[a_][d];
                    if c == 0.0 {
                        continue;
                    }
                    for l in 0..nf {
                        let s = w * c * eta[l];
                        for i in 0..nm {
                            let v = s * psi[i];
                            a[(d * nm + i, uh0 + a_ * nf + l)] -= v;
                            a[(uh0 + a_ * nf + l, d * nm + i)] += v;
                        }
                    }
                }
            }
            let wt = w * tau;
            // u-u tangential stabilization
            for d in 0..3 {
                for e in 0..3 {
                    let proj = if d == e { 1.0 } else { 0.0 } - nrm[d] * nrm[e];
                    if proj == 0.0 {
                        continue;
                    }
                    for i in 0..nk {
                        let s = wt * proj * phi[i];
                        for j in 0..nk {
                            a[(lay.u0() + d * nk + i, lay.u0() + e * nk + j)] += s * phi[j];
                        }
                    }
                }
            }
            for a_ in 0..2 {
                for e in 0..3 {
                    let c = ts[a_][e];
                    if c == 0.0 {
                        continue;
                    }
                    for i in 0..nk {
                        let s = wt * c * phi[i];
                        for l in 0..nf {
                            let v = s * eta[l];
                            a[(lay.u0() + e * nk + i, uh0 + a_ * nf + l)] -= v;
                            a[(uh0 + a_ * nf + l, lay.u0() + e * nk + i)] -= v;
                        }
                    }
                }
                for l in 0..nf {
                    let s = wt * eta[l];
                    for l2 in 0..nf {
                        a[(uh0 + a_ * nf + l, uh0 + a_ * nf + l2)] += s * eta[l2];
                    }
                }
            }
        }
    }
    Ok(LocalSystem {
        elem,
        layout: lay,
        a,
        f,
    })
}

/// Singularity threshold on `σ_min / σ_max` of the interior block.
pub const SINGULAR_RATIO: f64 = 1e-12;

impl LocalSystem {
    /// Trace columns: all `û`, plus `p` unless it is supplied as known data.
    fn trace_range(&self, with_p: bool) -> std::ops::Range<usize> {
        let lay = &self.layout;
        lay.ni()..if with_p { lay.len() } else { lay.p0() }
    }

    /// LU of the interior `(q, u)` block, with the singularity check.
    fn interior_lu(&self) -> Result<faer::linalg::solvers::PartialPivLu<C64>> {
        let ni = self.layout.ni();
        let aii = self.a.as_ref().submatrix(0, 0, ni, ni);
        let lu = aii.partial_piv_lu();
        let u = lu.U();
        let mut dmin = f64::INFINITY;
        let mut dmax: f64 = 0.0;
        for i in 0..ni {
            let d = u[(i, i)].norm();
            dmin = dmin.min(d);
            dmax = dmax.max(d);
        }
        if !(dmin > 1e-8 * dmax) {
            let sv = aii
                .singular_values()
                .map_err(|_| Error::SolverFailure(format!("SVD failed on element {}", self.elem)))?;
            let ratio = sv.last().copied().unwrap_or(0.0) / sv[0];
            if !(ratio >= SINGULAR_RATIO) {
                return Err(Error::SingularLocalBlock {
                    element: self.elem,
                    ratio,
                });
            }
        }
        Ok(lu)
    }

    /// Right-hand side of the interior block with any known `p` moved over.
    fn interior_load(&self, p_known: Option<&[C64]>) -> Vec<C64> {
        let lay = &self.layout;
        let mut fi: Vec<C64> = self.f[..lay.ni()].to_vec();
        if let Some(p) = p_known {
            for (r, fr) in fi.iter_mut().enumerate() {
                for (j, pj) in p.iter().enumerate() {
                    *fr -= self.a[(r, lay.p0() + j)] * pj;
                }
            }
        }
        fi
    }

    /// Eliminates `(q, u)`. With `p_known = Some(p)` the `p` unknowns are data and
    /// the trace is `û` only; otherwise the trace is `(û, p)`.
    pub fn condense(&self, p_known: Option<&[C64]>) -> Result<Condensed> {
        let lay = self.layout;
        let ni = lay.ni();
        let tr = self.trace_range(p_known.is_none());
        let nt = tr.len();
        let lu = self.interior_lu()?;
        let mut rhs = Mat::<C64>::zeros(ni, nt + 1);
        for c in 0..nt {
            for r in 0..ni {
                rhs[(r, c)] = self.a[(r, tr.start + c)];
            }
        }
        let fi = self.interior_load(p_known);
        for r in 0..ni {
            rhs[(r, nt)] = fi[r];
        }
        let x = lu.solve(&rhs);
        let ati = self.a.as_ref().submatrix(tr.start, 0, nt, ni);
        let prod = ati * &x;
        let mut s = Mat::<C64>::zeros(nt, nt);
        let mut g = vec![ZERO; nt];
        for r in 0..nt {
            for c in 0..nt {
                s[(r, c)] = self.a[(tr.start + r, tr.start + c)] - prod[(r, c)];
            }
            let mut fr = self.f[tr.start + r];
            if let Some(p) = p_known {
                for (j, pj) in p.iter().enumerate() {
                    fr -= self.a[(tr.start + r, lay.p0() + j)] * pj;
                }
            }
            g[r] = fr - prod[(r, nt)];
        }
        Ok(Condensed { s, g })
    }

    /// Interior unknowns `(q, u)` from the trace values (`û`, and `p` unless known).
    pub fn recover(&self, trace: &[C64], p_known: Option<&[C64]>) -> Result<Vec<C64>> {
        let ni = self.layout.ni();
        let tr = self.trace_range(p_known.is_none());
        if trace.len() != tr.len() {
            return Err(Error::DimensionMismatch(format!(
                "trace vector of length {} for {} trace unknowns",
                trace.len(),
                tr.len()
            )));
        }
        let lu = self.interior_lu()?;
        let fi = self.interior_load(p_known);
        let mut rhs = Mat::<C64>::from_fn(ni, 1, |r, _| fi[r]);
        for (c, t) in trace.iter().enumerate() {
            for r in 0..ni {
                rhs[(r, 0)] -= self.a[(r, tr.start + c)] * t;
            }
        }
        let x = lu.solve(&rhs);
        Ok((0..ni).map(|r| x[(r, 0)]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::eval_element_vector_basis;
    use crate::problem::{example1, example3};
    use crate::quadrature::{tet_rule, tri_rule};

    fn one_cell(k: usize, m: usize) -> (Mesh, DiscreteSpace) {
        let mesh = Mesh::build_structured_cube(1).unwrap();
        let space = DiscreteSpace::new(&mesh, k, m).unwrap();
        (mesh, space)
    }

    #[test]
    fn q_mass_is_scaled_identity() {
        let spec = example1(1.0);
        let (mesh, space) = one_cell(2, 2);
        let sys = assemble_local(&spec, &mesh, &space, 3, &LocalOptions::default()).unwrap();
        let det = mesh.element_geometry(3).det.abs();
        let mu = spec.mu.eval([0.0; 3]);
        let nq = sys.layout.nq;
        for i in 0..nq {
            for j in 0..nq {
                let want = if i == j { mu * det } else { ZERO };
                assert!((sys.a[(i, j)] - want).norm() < 1e-13, "({i}, {j})");
            }
        }
    }

    #[test]
    fn compact_curl_term_matches_integrated_by_parts_form() {
        // (∇×q, v) = (q, ∇×v) + Σ_F ⟨n×q, v⟩, evaluated independently
        let spec = example3();
        for (k, m) in [(1, 0), (2, 2), (3, 2)] {
            let (mesh, space) = one_cell(k, m);
            let e = 2;
            let sys = assemble_local(&spec, &mesh, &space, e, &LocalOptions::default()).unwrap();
            let lay = sys.layout;
            let geo = mesh.element_geometry(e);
            let mut b = vec![0.0; lay.nu * lay.nq];
            let vol = tet_rule(2 * k + 1).unwrap();
            let (pts, wts) = vol.map_to_tet(&geo).unwrap();
            let (qv, _) = eval_element_vector_basis(m, &geo, &pts).unwrap();
            let (_, uc) = eval_element_vector_basis(k, &geo, &pts).unwrap();
            let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
            for r in 0..lay.nu {
                for c in 0..lay.nq {
                    b[r * lay.nq + c] = (0..pts.len()).map(|ip| wts[ip] * dot(qv[c][ip], uc[r][ip])).sum();
                }
            }
            let fr = tri_rule(2 * k + 1).unwrap();
            for lf in 0..4 {
                let f = mesh.element_faces(e)[lf];
                let n = mesh.faces()[f].frame.normal.map(|x| x * mesh.face_orientation(e, lf));
                let (fp, fw) = fr.map_to_triangle(&mesh.face_geometry(f)).unwrap();
                let (qf, _) = eval_element_vector_basis(m, &geo, &fp).unwrap();
                let (uf, _) = eval_element_vector_basis(k, &geo, &fp).unwrap();
                for r in 0..lay.nu {
                    for c in 0..lay.nq {
                        b[r * lay.nq + c] += (0..fp.len()).map(|ip| fw[ip] * dot(cross(n, qf[c][ip]), uf[r][ip])).sum::<f64>();
                    }
                }
            }
            for r in 0..lay.nu {
                for c in 0..lay.nq {
                    let got = sys.a[(lay.u0() + r, lay.q0() + c)];
                    assert!((got - b[r * lay.nq + c]).norm() < 1e-12, "k={k} ({r}, {c}): {got} vs {}", b[r * lay.nq + c]);
                }
            }
        }
    }

    #[test]
    fn condense_then_recover_solves_the_local_system() {
        let spec = example3();
        let (mesh, space) = one_cell(2, 1);
        let sys = assemble_local(&spec, &mesh, &space, 0, &LocalOptions::default()).unwrap();
        let lay = sys.layout;
        let ni = lay.ni();
        let trace: Vec<C64> = (0..lay.len() - ni).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.7).cos())).collect();
        let x_int = sys.recover(&trace, None).unwrap();
        let mut x = x_int.clone();
        x.extend_from_slice(&trace);
        // interior rows are satisfied exactly
        for r in 0..ni {
            let ax: C64 = (0..lay.len()).map(|c| sys.a[(r, c)] * x[c]).sum();
            assert!((ax - sys.f[r]).norm() < 1e-10 * (1.0 + sys.f[r].norm()), "row {r}");
        }
        // trace rows reproduce the Schur complement
        let cond = sys.condense(None).unwrap();
        for r in 0..trace.len() {
            let ax: C64 = (0..lay.len()).map(|c| sys.a[(ni + r, c)] * x[c]).sum();
            let s: C64 = (0..trace.len()).map(|c| cond.s[(r, c)] * trace[c]).sum();
            assert!(((ax - sys.f[ni + r]) - (s - cond.g[r])).norm() < 1e-9, "row {r}");
        }
    }

    #[test]
    fn known_multiplier_equals_eliminating_it_last() {
        let spec = example1(2.0);
        let (mesh, space) = one_cell(1, 1);
        let sys = assemble_local(&spec, &mesh, &space, 5, &LocalOptions::default()).unwrap();
        let lay = sys.layout;
        let p: Vec<C64> = (0..lay.np).map(|j| C64::new(0.3 * j as f64, -0.1)).collect();
        let uhat: Vec<C64> = (0..4 * lay.nfb).map(|i| C64::new(1.0 / (1.0 + i as f64), 0.2)).collect();
        let a = sys.recover(&uhat, Some(&p)).unwrap();
        let mut trace = uhat.clone();
        trace.extend_from_slice(&p);
        let b = sys.recover(&trace, None).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-11);
        }
    }

    #[test]
    fn wrong_trace_length_is_rejected() {
        let (mesh, space) = one_cell(1, 1);
        let sys = assemble_local(&example1(1.0), &mesh, &space, 0, &LocalOptions::default()).unwrap();
        assert!(matches!(sys.recover(&[ZERO; 3], None), Err(Error::DimensionMismatch(_))));
    }
}
