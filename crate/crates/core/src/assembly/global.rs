use std::time::{Duration, Instant};

use faer::Mat;
use rayon::prelude::*;

use super::local::{assemble_local, LocalLayout, LocalOptions, LocalSystem};
use super::space::DiscreteSpace;
use crate::linsolve::{self, SolveReport, SparseComplexMatrix};
use crate::mesh::Mesh;
use crate::problem::{ConstraintRhs, ProblemSpec};
use crate::quadrature::tri_rule;
use crate::{Error, Point, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const NONE: usize = usize::MAX;
/// Elements per parallel work unit; results are merged in element order.
const CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// One condensed system in `(û, p)`.
    Monolithic,
    /// A continuous system for `p` first, then a condensed system in `û` alone.
    Decoupled,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub mode: Mode,
    /// Relative residual required from every linear solve.
    pub tol: f64,
    /// Assembly threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    pub stabilization_scale: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            mode: Mode::Monolithic,
            tol: 1e-10,
            workers: None,
            stabilization_scale: 1.0,
        }
    }
}

impl SolveOptions {
    fn local(&self) -> LocalOptions {
        LocalOptions {
            stabilization_scale: self.stabilization_scale,
            ..Default::default()
        }
    }
}

/// Global numbering of the free trace unknowns: `û` on interior faces
/// (face-major), then `p` on interior CG nodes when present.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub nfb: usize,
    face_offset: Vec<usize>,
    pub num_uhat: usize,
    pub num_p: usize,
    pub with_p: bool,
}

impl DofMap {
    pub fn new(mesh: &Mesh, space: &DiscreteSpace, with_p: bool) -> Self {
        let nfb = space.nfb();
        let mut face_offset = vec![NONE; mesh.num_faces()];
        let mut next = 0;
        for (f, face) in mesh.faces().iter().enumerate() {
            if !face.is_boundary() {
                face_offset[f] = next;
                next += nfb;
            }
        }
        Self {
            nfb,
            face_offset,
            num_uhat: next,
            num_p: if with_p { space.cg.num_interior() } else { 0 },
            with_p,
        }
    }

    pub fn total(&self) -> usize {
        self.num_uhat + self.num_p
    }

    /// First global index of the trace unknowns of a face, `None` on the boundary.
    pub fn face_dofs(&self, face: usize) -> Option<usize> {
        let o = self.face_offset[face];
        (o != NONE).then_some(o)
    }

    pub fn p_dof(&self, space: &DiscreteSpace, node: usize) -> Option<usize> {
        if !self.with_p {
            return None;
        }
        space.cg.interior_index(node).map(|i| self.num_uhat + i)
    }

    /// Per local trace slot of an element: global index, or `NONE` for known data.
    fn element_slots(&self, mesh: &Mesh, space: &DiscreteSpace, elem: usize) -> Vec<usize> {
        let mut slots = Vec::with_capacity(4 * self.nfb + space.np());
        for &f in mesh.element_faces(elem) {
            match self.face_dofs(f) {
                Some(o) => slots.extend(o..o + self.nfb),
                None => slots.extend(std::iter::repeat_n(NONE, self.nfb)),
            }
        }
        if self.with_p {
            for &node in space.cg.element_dofs(elem) {
                slots.push(self.p_dof(space, node).unwrap_or(NONE));
            }
        }
        slots
    }

    /// Location of every global unknown, for the fill-reducing ordering.
    fn coordinates(&self, mesh: &Mesh, space: &DiscreteSpace) -> Vec<Point> {
        let mut coords = vec![[0.0; 3]; self.total()];
        for f in 0..mesh.num_faces() {
            if let Some(o) = self.face_dofs(f) {
                let c = mesh.face_centroid(f);
                coords[o..o + self.nfb].fill(c);
            }
        }
        if self.with_p {
            for (node, x) in space.cg.node_coords().iter().enumerate() {
                if let Some(i) = self.p_dof(space, node) {
                    coords[i] = *x;
                }
            }
        }
        coords
    }
}

/// `L²` projection of the tangential trace of the boundary data onto the face
/// basis, for every boundary face (zero elsewhere), laid out `face·nfb + a·N_F + i`.
pub fn boundary_trace_values(spec: &ProblemSpec, mesh: &Mesh, space: &DiscreteSpace) -> Result<Vec<C64>> {
    let nfb = space.nfb();
    let mut out = vec![ZERO; mesh.num_faces() * nfb];
    let Some(u) = spec.boundary_field() else {
        return Ok(out);
    };
    let rule = tri_rule((space.face_rule.degree + 4).min(crate::quadrature::MAX_DEGREE))?;
    let basis = &space.face_basis.scalar;
    let nf = basis.dim();
    let tab = crate::basis::Tabulation::of_modal(basis, &rule.points);
    for (f, face) in mesh.faces().iter().enumerate() {
        if !face.is_boundary() {
            continue;
        }
        let geo = mesh.face_geometry(f);
        let ts = [face.frame.t1, face.frame.t2];
        for (ip, p) in rule.points.iter().enumerate() {
            let x = geo.to_physical([p[0], p[1]]);
            let ux = u(x);
            let w = rule.weights[ip] * geo.jacobian_measure;
            for (a, t) in ts.iter().enumerate() {
                let ut = ux[0] * t[0] + ux[1] * t[1] + ux[2] * t[2];
                for i in 0..nf {
                    out[f * nfb + a * nf + i] += ut * (w * tab.value(ip, i));
                }
            }
        }
        // the face modes are orthonormal on the reference triangle: mass = 2|F| I
        let scale = 1.0 / geo.jacobian_measure;
        for v in &mut out[f * nfb..(f + 1) * nfb] {
            *v *= scale;
        }
    }
    Ok(out)
}

/// Runs `f` on a pool with the requested number of threads.
pub(crate) fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// CSR pattern of the union of dense element blocks over free dofs.
fn block_pattern(ndofs: usize, element_dofs: &[Vec<usize>]) -> (Vec<usize>, Vec<usize>) {
    let mut count = vec![0usize; ndofs + 1];
    for dofs in element_dofs {
        for &d in dofs {
            if d != NONE {
                count[d + 1] += 1;
            }
        }
    }
    for i in 0..ndofs {
        count[i + 1] += count[i];
    }
    let mut incid = vec![0usize; count[ndofs]];
    let mut fill = count.clone();
    for (e, dofs) in element_dofs.iter().enumerate() {
        for &d in dofs {
            if d != NONE {
                incid[fill[d]] = e;
                fill[d] += 1;
            }
        }
    }
    let mut mark = vec![NONE; ndofs];
    let mut row_ptr = vec![0usize; ndofs + 1];
    let mut col_idx = Vec::new();
    let mut row = Vec::new();
    for r in 0..ndofs {
        row.clear();
        for &e in &incid[count[r]..count[r + 1]] {
            for &c in &element_dofs[e] {
                if c != NONE && mark[c] != r {
                    mark[c] = r;
                    row.push(c);
                }
            }
        }
        row.sort_unstable();
        col_idx.extend_from_slice(&row);
        row_ptr[r + 1] = col_idx.len();
    }
    (row_ptr, col_idx)
}

fn scatter(row_ptr: &[usize], col_idx: &[usize], values: &mut [C64], slots: &[usize], block: &Mat<C64>) {
    for (r, &gr) in slots.iter().enumerate() {
        if gr == NONE {
            continue;
        }
        let cols = &col_idx[row_ptr[gr]..row_ptr[gr + 1]];
        for (c, &gc) in slots.iter().enumerate() {
            if gc == NONE {
                continue;
            }
            let k = cols.binary_search(&gc).expect("entry in pattern");
            values[row_ptr[gr] + k] += block[(r, c)];
        }
    }
}

/// Continuous multiplier computed ahead of the trace system.
#[derive(Debug, Clone)]
pub struct PressureSolution {
    /// Values at all CG nodes, zero on the boundary.
    pub values: Vec<C64>,
    pub report: SolveReport,
    pub dofs: usize,
}

#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub mode: Mode,
    pub dofmap: DofMap,
    pub matrix: SparseComplexMatrix,
    pub rhs: Vec<C64>,
    /// Known `û` coefficients on boundary faces (layout of [`boundary_trace_values`]).
    pub boundary_values: Vec<C64>,
    pub pressure: Option<PressureSolution>,
    pub assembly_time: Duration,
}

/// Assembles `(c ∇φ_j, ∇φ_i)` over interior CG nodes, with load `∫ w·∇φ_i`
/// where `w(elem, quadrature point, x)` is supplied per volume quadrature point.
pub fn assemble_cg_gradient_system(
    mesh: &Mesh,
    space: &DiscreteSpace,
    coef: &(dyn Fn(Point) -> C64 + Sync),
    load: &(dyn Fn(usize, usize, Point) -> [C64; 3] + Sync),
    workers: Option<usize>,
) -> Result<(SparseComplexMatrix, Vec<C64>)> {
    let cg = &space.cg;
    let n = cg.num_interior();
    let np = cg.local_dim();
    let slots: Vec<Vec<usize>> = (0..mesh.num_elements())
        .map(|e| {
            cg.element_dofs(e)
                .iter()
                .map(|&node| cg.interior_index(node).unwrap_or(NONE))
                .collect()
        })
        .collect();
    let (row_ptr, col_idx) = block_pattern(n, &slots);
    let mut values = vec![ZERO; col_idx.len()];
    let mut rhs = vec![ZERO; n];
    let local = |e: usize| -> (Mat<C64>, Vec<C64>) {
        let geo = mesh.element_geometry(e);
        let det = geo.det.abs();
        let mut k = Mat::<C64>::zeros(np, np);
        let mut b = vec![ZERO; np];
        let mut g = vec![[0.0; 3]; np];
        for (iq, (xr, wr)) in space.vol_rule.points.iter().zip(&space.vol_rule.weights).enumerate() {
            let x = geo.to_physical(*xr);
            let w = wr * det;
            for j in 0..np {
                g[j] = geo.push_gradient(space.p_vol.gradient(iq, j));
            }
            let cw = coef(x) * w;
            for i in 0..np {
                for j in 0..np {
                    k[(i, j)] += cw * (g[i][0] * g[j][0] + g[i][1] * g[j][1] + g[i][2] * g[j][2]);
                }
            }
            let lw = load(e, iq, x);
            for i in 0..np {
                b[i] += (lw[0] * g[i][0] + lw[1] * g[i][1] + lw[2] * g[i][2]) * w;
            }
        }
        (k, b)
    };
    with_workers(workers, || {
        let elems: Vec<usize> = (0..mesh.num_elements()).collect();
        for chunk in elems.chunks(CHUNK) {
            let blocks: Vec<_> = chunk.par_iter().map(|&e| local(e)).collect();
            for (&e, (k, b)) in chunk.iter().zip(blocks) {
                scatter(&row_ptr, &col_idx, &mut values, &slots[e], &k);
                for (r, &gr) in slots[e].iter().enumerate() {
                    if gr != NONE {
                        rhs[gr] += b[r];
                    }
                }
            }
        }
    })?;
    let coords: Vec<Point> = (0..cg.num_nodes())
        .filter(|&i| !cg.is_boundary_node(i))
        .map(|i| cg.node_coords()[i])
        .collect();
    let mut matrix = SparseComplexMatrix::from_csr(n, n, row_ptr, col_idx, values)?.with_coordinates(coords)?;
    matrix.prune_zeros();
    Ok((matrix, rhs))
}

/// Solves `(ε̄ ∇p, ∇χ) = (f, ∇χ) + κ² g(χ)` for the continuous multiplier.
pub fn solve_pressure(
    spec: &ProblemSpec,
    mesh: &Mesh,
    space: &DiscreteSpace,
    tol: f64,
    workers: Option<usize>,
) -> Result<PressureSolution> {
    let kappa2 = spec.kappa * spec.kappa;
    let load = |_: usize, _: usize, x: Point| -> [C64; 3] {
        let f = (spec.source)(x);
        match &spec.constraint {
            ConstraintRhs::Zero => f,
            ConstraintRhs::Flux(w) => {
                let wx = w(x);
                [0, 1, 2].map(|d| f[d] + wx[d] * kappa2)
            }
        }
    };
    let coef = |x: Point| spec.eps.eval(x).conj();
    let (a, b) = assemble_cg_gradient_system(mesh, space, &coef, &load, workers)?;
    let (x, report) = linsolve::hermitian_positive_solve(&a, &b, tol)?;
    Ok(PressureSolution {
        values: space.cg.expand_interior(&x),
        report,
        dofs: a.nrows(),
    })
}

fn local_p_values(space: &DiscreteSpace, p: &[C64], elem: usize) -> Vec<C64> {
    space.cg.element_dofs(elem).iter().map(|&n| p[n]).collect()
}

/// Trace values of an element (all slots), from the global vector and known
/// data; free slots are zero when `x` is `None`.
fn element_trace(
    dofmap: &DofMap,
    slots: &[usize],
    mesh: &Mesh,
    elem: usize,
    boundary: &[C64],
    x: Option<&[C64]>,
) -> Vec<C64> {
    let nfb = dofmap.nfb;
    let faces = mesh.element_faces(elem);
    slots
        .iter()
        .enumerate()
        .map(|(s, &g)| {
            if g != NONE {
                x.map_or(ZERO, |x| x[g])
            } else if s < 4 * nfb {
                boundary[faces[s / nfb] * nfb + s % nfb]
            } else {
                ZERO
            }
        })
        .collect()
}

pub fn assemble_global(
    spec: &ProblemSpec,
    mesh: &Mesh,
    space: &DiscreteSpace,
    opts: &SolveOptions,
) -> Result<GlobalSystem> {
    let start = Instant::now();
    let pressure = match opts.mode {
        Mode::Monolithic => None,
        Mode::Decoupled => {
            if spec.kappa <= 0.0 {
                return Err(Error::InvalidInput(
                    "decoupled mode needs κ > 0: at κ = 0 the trace system without the constraint is singular".into(),
                ));
            }
            Some(solve_pressure(spec, mesh, space, opts.tol, opts.workers)?)
        }
    };
    let dofmap = DofMap::new(mesh, space, pressure.is_none());
    let boundary = boundary_trace_values(spec, mesh, space)?;
    let slots: Vec<Vec<usize>> = (0..mesh.num_elements())
        .map(|e| dofmap.element_slots(mesh, space, e))
        .collect();
    let n = dofmap.total();
    let (row_ptr, col_idx) = block_pattern(n, &slots);
    let mut values = vec![ZERO; col_idx.len()];
    let mut rhs = vec![ZERO; n];
    let lopts = opts.local();
    let condense = |e: usize| -> Result<(Mat<C64>, Vec<C64>)> {
        let local = assemble_local(spec, mesh, space, e, &lopts)?;
        let p = pressure.as_ref().map(|p| local_p_values(space, &p.values, e));
        let c = local.condense(p.as_deref())?;
        Ok((c.s, c.g))
    };
    with_workers(opts.workers, || -> Result<()> {
        let elems: Vec<usize> = (0..mesh.num_elements()).collect();
        for chunk in elems.chunks(CHUNK) {
            let blocks: Vec<Result<(Mat<C64>, Vec<C64>)>> = chunk.par_iter().map(|&e| condense(e)).collect();
            for (&e, block) in chunk.iter().zip(blocks) {
                let (s, g) = block?;
                let sl = &slots[e];
                scatter(&row_ptr, &col_idx, &mut values, sl, &s);
                let known = element_trace(&dofmap, sl, mesh, e, &boundary, None);
                for (r, &gr) in sl.iter().enumerate() {
                    if gr == NONE {
                        continue;
                    }
                    let mut v = g[r];
                    for (c, &gc) in sl.iter().enumerate() {
                        if gc == NONE && known[c] != ZERO {
                            v -= s[(r, c)] * known[c];
                        }
                    }
                    rhs[gr] += v;
                }
            }
        }
        Ok(())
    })??;
    let coords = dofmap.coordinates(mesh, space);
    let mut matrix = SparseComplexMatrix::from_csr(n, n, row_ptr, col_idx, values)?.with_coordinates(coords)?;
    matrix.prune_zeros();
    Ok(GlobalSystem {
        mode: opts.mode,
        dofmap,
        matrix,
        rhs,
        boundary_values: boundary,
        pressure,
        assembly_time: start.elapsed(),
    })
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub mode: Mode,
    /// Size of the condensed global system.
    pub global_dofs: usize,
    pub relative_residual: f64,
    pub assembly_time: Duration,
    pub solve_time: Duration,
    pub factor_entries: usize,
    pub max_front: usize,
    pub pressure_dofs: usize,
    pub pressure_residual: Option<f64>,
}

/// Coefficient vectors of the discrete solution.
#[derive(Debug, Clone)]
pub struct SolutionFields {
    pub k: usize,
    pub m: usize,
    /// `[elem][3·dim P_m]`, flattened.
    pub q: Vec<C64>,
    /// `[elem][3·dim P_k]`, flattened.
    pub u: Vec<C64>,
    /// `[face][(k+1)(k+2)]`, flattened, boundary faces included.
    pub uhat: Vec<C64>,
    /// Values at all CG nodes.
    pub p: Vec<C64>,
    pub diagnostics: Option<Diagnostics>,
}

impl SolutionFields {
    pub fn zeros(mesh: &Mesh, space: &DiscreteSpace) -> Self {
        Self {
            k: space.k,
            m: space.m,
            q: vec![ZERO; mesh.num_elements() * space.nq()],
            u: vec![ZERO; mesh.num_elements() * space.nu()],
            uhat: vec![ZERO; mesh.num_faces() * space.nfb()],
            p: vec![ZERO; space.cg.num_nodes()],
            diagnostics: None,
        }
    }

    pub fn q_elem(&self, elem: usize) -> &[C64] {
        let n = 3 * crate::basis::poly_dim(3, self.m);
        &self.q[elem * n..(elem + 1) * n]
    }

    pub fn u_elem(&self, elem: usize) -> &[C64] {
        let n = 3 * crate::basis::poly_dim(3, self.k);
        &self.u[elem * n..(elem + 1) * n]
    }

    pub fn uhat_face(&self, face: usize) -> &[C64] {
        let n = (self.k + 1) * (self.k + 2);
        &self.uhat[face * n..(face + 1) * n]
    }

    /// Multiplies every field by `c`.
    pub fn scaled(&self, c: C64) -> Self {
        let mut out = self.clone();
        for v in out.q.iter_mut().chain(out.u.iter_mut()).chain(out.uhat.iter_mut()).chain(out.p.iter_mut()) {
            *v *= c;
        }
        out
    }
}

/// Back-substitutes the element unknowns from a solution of `global`.
pub fn recover_fields(
    spec: &ProblemSpec,
    mesh: &Mesh,
    space: &DiscreteSpace,
    global: &GlobalSystem,
    x: &[C64],
    opts: &SolveOptions,
) -> Result<SolutionFields> {
    if x.len() != global.dofmap.total() {
        return Err(Error::DimensionMismatch(format!(
            "solution of length {} for {} unknowns",
            x.len(),
            global.dofmap.total()
        )));
    }
    let dm = &global.dofmap;
    let mut fields = SolutionFields::zeros(mesh, space);
    let nfb = dm.nfb;
    for f in 0..mesh.num_faces() {
        let dst = &mut fields.uhat[f * nfb..(f + 1) * nfb];
        match dm.face_dofs(f) {
            Some(o) => dst.copy_from_slice(&x[o..o + nfb]),
            None => dst.copy_from_slice(&global.boundary_values[f * nfb..(f + 1) * nfb]),
        }
    }
    match &global.pressure {
        Some(p) => fields.p.clone_from(&p.values),
        None => {
            for node in 0..space.cg.num_nodes() {
                if let Some(i) = dm.p_dof(space, node) {
                    fields.p[node] = x[i];
                }
            }
        }
    }
    let lay = LocalLayout::of(space);
    let lopts = opts.local();
    let solve_one = |e: usize| -> Result<Vec<C64>> {
        let local: LocalSystem = assemble_local(spec, mesh, space, e, &lopts)?;
        let slots = dm.element_slots(mesh, space, e);
        let trace = element_trace(dm, &slots, mesh, e, &global.boundary_values, Some(x));
        match &global.pressure {
            Some(p) => {
                let pl = local_p_values(space, &p.values, e);
                local.recover(&trace[..4 * nfb], Some(&pl))
            }
            None => local.recover(&trace, None),
        }
    };
    let interiors = with_workers(opts.workers, || -> Result<Vec<Vec<C64>>> {
        let elems: Vec<usize> = (0..mesh.num_elements()).collect();
        let mut all = Vec::with_capacity(elems.len());
        for chunk in elems.chunks(CHUNK) {
            let part: Vec<Result<Vec<C64>>> = chunk.par_iter().map(|&e| solve_one(e)).collect();
            for r in part {
                all.push(r?);
            }
        }
        Ok(all)
    })??;
    for (e, xi) in interiors.iter().enumerate() {
        fields.q[e * lay.nq..(e + 1) * lay.nq].copy_from_slice(&xi[..lay.nq]);
        fields.u[e * lay.nu..(e + 1) * lay.nu].copy_from_slice(&xi[lay.nq..]);
    }
    Ok(fields)
}

/// Assembles, solves and recovers all fields.
pub fn solve(spec: &ProblemSpec, mesh: &Mesh, space: &DiscreteSpace, opts: &SolveOptions) -> Result<SolutionFields> {
    let global = assemble_global(spec, mesh, space, opts)?;
    let (x, report) = linsolve::solve(&global.matrix, &global.rhs, opts.tol)?;
    let mut fields = recover_fields(spec, mesh, space, &global, &x, opts)?;
    fields.diagnostics = Some(Diagnostics {
        mode: opts.mode,
        global_dofs: global.dofmap.total(),
        relative_residual: report.relative_residual,
        assembly_time: global.assembly_time,
        solve_time: report.wall_time,
        factor_entries: report.factor_entries,
        max_front: report.max_front,
        pressure_dofs: global.pressure.as_ref().map_or(0, |p| p.dofs),
        pressure_residual: global.pressure.as_ref().map(|p| p.report.relative_residual),
    });
    Ok(fields)
}
