//! Multifrontal LU for sparse complex matrices with a symmetric pattern.
//!
//! Each assembly-tree node owns a dense front `[[F11, F12], [F21, F22]]` over
//! its own variables `D` and the later variables `U` it touches. `F11` is
//! factored with partial pivoting, `W = F11⁻¹ F12` and the Schur complement
//! `F22 − F21 W` is passed to the parent. Dense kernels come from faer.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::sync::Mutex;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::lu::partial_pivoting::{factor::lu_in_place, factor::lu_in_place_scratch, solve};
use faer::linalg::matmul::matmul;
use faer::perm::PermRef;
use faer::{Accum, Conj, Mat, MatRef, Par};

use super::ordering::{nested_dissection, Graph, Ordering, OrderingParams};
use super::SparseComplexMatrix;
use crate::{Error, Result, C64};

const NONE: usize = usize::MAX;

/// Symbolic part of a front, always kept in memory.
struct FrontMeta {
    vars: Vec<usize>,
    update: Vec<usize>,
    perm_fwd: Vec<usize>,
    perm_bwd: Vec<usize>,
}

/// Numeric part of a front: the LU of `F11`, `F21` and `W = F11⁻¹ F12`.
struct FrontData {
    lu: Mat<C64>,
    f21: Mat<C64>,
    w: Mat<C64>,
}

/// Where the numeric factors live.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FactorStorage {
    Memory,
    /// An anonymous temporary file; triangular solves stream it back.
    Disk,
    /// Memory unless the factors would exceed this many bytes.
    Auto { memory_budget: usize },
}

impl Default for FactorStorage {
    fn default() -> Self {
        FactorStorage::Auto {
            memory_budget: 2 << 30,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FactorOptions {
    pub ordering: OrderingParams,
    pub storage: FactorStorage,
}

enum Store {
    Memory(Vec<FrontData>),
    Disk {
        file: Mutex<File>,
        /// Byte offset of each front's `[lu | f21 | w]` record.
        offsets: Vec<u64>,
    },
}

const ENTRY_BYTES: usize = 16;

fn write_mat<W: Write>(out: &mut W, m: MatRef<'_, C64>) -> std::io::Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            out.write_all(&v.re.to_le_bytes())?;
            out.write_all(&v.im.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_mat<R: Read>(input: &mut R, nrows: usize, ncols: usize) -> std::io::Result<Mat<C64>> {
    let mut col = vec![0u8; nrows * ENTRY_BYTES];
    let mut m = Mat::<C64>::zeros(nrows, ncols);
    for j in 0..ncols {
        input.read_exact(&mut col)?;
        for (i, b) in col.chunks_exact(ENTRY_BYTES).enumerate() {
            let re = f64::from_le_bytes(b[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(b[8..].try_into().expect("8 bytes"));
            m[(i, j)] = C64::new(re, im);
        }
    }
    Ok(m)
}

fn io_error(e: std::io::Error) -> Error {
    Error::SolverFailure(format!("factor storage: {e}"))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FactorStats {
    /// Stored complex entries of all factors.
    pub factor_entries: usize,
    pub num_fronts: usize,
    /// Largest front dimension `|D| + |U|`.
    pub max_front: usize,
    /// Smallest `|u_ii| / max |u_jj|` over all fronts.
    pub min_pivot_ratio: f64,
    pub on_disk: bool,
}

pub struct Factorization {
    n: usize,
    meta: Vec<FrontMeta>,
    store: Store,
    pub stats: FactorStats,
}

/// Sorted-by-position update sets of every tree node.
fn symbolic(graph: &Graph, ord: &Ordering) -> Vec<Vec<usize>> {
    let mut mark = vec![NONE; graph.len()];
    let mut updates: Vec<Vec<usize>> = Vec::with_capacity(ord.nodes.len());
    for (t, node) in ord.nodes.iter().enumerate() {
        let end = node
            .vars
            .iter()
            .map(|&v| ord.position[v] + 1)
            .max()
            .unwrap_or_else(|| first_position_after_children(ord, t));
        let mut list = Vec::new();
        for &v in &node.vars {
            mark[v] = t;
        }
        for &v in &node.vars {
            for &w in graph.neighbors(v) {
                if ord.position[w] >= end && mark[w] != t {
                    mark[w] = t;
                    list.push(w);
                }
            }
        }
        for &c in &node.children {
            for &w in &updates[c] {
                if ord.position[w] >= end && mark[w] != t {
                    mark[w] = t;
                    list.push(w);
                }
            }
        }
        list.sort_unstable_by_key(|&w| ord.position[w]);
        updates.push(list);
    }
    updates
}

/// Elimination position following a node with no variables of its own.
fn first_position_after_children(ord: &Ordering, t: usize) -> usize {
    let mut best = 0;
    let mut stack = vec![t];
    while let Some(s) = stack.pop() {
        for &v in &ord.nodes[s].vars {
            best = best.max(ord.position[v] + 1);
        }
        stack.extend(ord.nodes[s].children.iter().copied());
    }
    best
}

impl Factorization {
    pub fn new(a: &SparseComplexMatrix) -> Result<Self> {
        Self::with_options(a, FactorOptions::default())
    }

    pub fn with_params(a: &SparseComplexMatrix, params: OrderingParams) -> Result<Self> {
        Self::with_options(
            a,
            FactorOptions {
                ordering: params,
                ..Default::default()
            },
        )
    }

    pub fn with_options(a: &SparseComplexMatrix, opts: FactorOptions) -> Result<Self> {
        let params = opts.ordering;
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!("matrix is {}x{}", n, a.ncols())));
        }
        let graph = Graph::symmetrized(n, a.row_ptr(), a.col_idx());
        let ord = nested_dissection(&graph, a.coordinates(), params);
        let updates = symbolic(&graph, &ord);
        drop(graph);
        let predicted: usize = ord
            .nodes
            .iter()
            .zip(&updates)
            .map(|(node, u)| node.vars.len() * (node.vars.len() + 2 * u.len()))
            .sum();
        let on_disk = match opts.storage {
            FactorStorage::Memory => false,
            FactorStorage::Disk => true,
            FactorStorage::Auto { memory_budget } => predicted.saturating_mul(ENTRY_BYTES) > memory_budget,
        };
        let mut writer = if on_disk {
            Some(BufWriter::with_capacity(1 << 20, tempfile::tempfile().map_err(io_error)?))
        } else {
            None
        };
        let mut offsets = Vec::new();
        let mut written: u64 = 0;
        let mut data = Vec::new();

        let mut loc = vec![NONE; n];
        let mut pending: Vec<Option<Mat<C64>>> = (0..ord.nodes.len()).map(|_| None).collect();
        let mut meta = Vec::with_capacity(ord.nodes.len());
        let mut stats = FactorStats {
            min_pivot_ratio: f64::INFINITY,
            num_fronts: ord.nodes.len(),
            on_disk,
            ..Default::default()
        };
        let mut mem = MemBuffer::new(lu_in_place_scratch::<usize, C64>(1, 1, Par::Seq, Default::default()));

        for (t, node) in ord.nodes.iter().enumerate() {
            let vars = &node.vars;
            let update = &updates[t];
            let (nd, nu) = (vars.len(), update.len());
            let nf = nd + nu;
            stats.max_front = stats.max_front.max(nf);
            for (i, &v) in vars.iter().chain(update.iter()).enumerate() {
                loc[v] = i;
            }
            // the four blocks are separate allocations so that the Schur
            // complement and the factors can be moved out without copies
            let mut f11 = Mat::<C64>::zeros(nd, nd);
            let mut f12 = Mat::<C64>::zeros(nd, nu);
            let mut f21 = Mat::<C64>::zeros(nu, nd);
            let mut f22 = Mat::<C64>::zeros(nu, nu);
            // rows of own variables, all columns inside the front
            for (i, &v) in vars.iter().enumerate() {
                let (cols, vals) = a.row(v);
                for (&w, &x) in cols.iter().zip(vals) {
                    let j = loc[w];
                    if j == NONE {
                        continue;
                    }
                    if j < nd {
                        f11[(i, j)] += x;
                    } else {
                        f12[(i, j - nd)] += x;
                    }
                }
            }
            // rows of update variables, columns among own variables
            for (ii, &w) in update.iter().enumerate() {
                let (cols, vals) = a.row(w);
                for (&v, &x) in cols.iter().zip(vals) {
                    let j = loc[v];
                    if j != NONE && j < nd {
                        f21[(ii, j)] += x;
                    }
                }
            }
            for &c in &node.children {
                let child = pending[c].take().expect("child update present");
                let cu = &updates[c];
                for (b, &wb) in cu.iter().enumerate() {
                    let lb = loc[wb];
                    for (r, &wa) in cu.iter().enumerate() {
                        let la = loc[wa];
                        let x = child[(r, b)];
                        match (la < nd, lb < nd) {
                            (true, true) => f11[(la, lb)] += x,
                            (true, false) => f12[(la, lb - nd)] += x,
                            (false, true) => f21[(la - nd, lb)] += x,
                            (false, false) => f22[(la - nd, lb - nd)] += x,
                        }
                    }
                }
            }
            for &v in vars.iter().chain(update.iter()) {
                loc[v] = NONE;
            }

            let mut perm_fwd = vec![0usize; nd];
            let mut perm_bwd = vec![0usize; nd];
            if nd > 0 {
                let req = lu_in_place_scratch::<usize, C64>(nd, nd, Par::Seq, Default::default())
                    .or(solve::solve_in_place_scratch::<usize, C64>(nd, nu.max(1), Par::Seq));
                if mem.len() < req.unaligned_bytes_required() + 64 {
                    mem = MemBuffer::new(req);
                }
                lu_in_place(f11.as_mut(), &mut perm_fwd, &mut perm_bwd, Par::Seq, MemStack::new(&mut mem), Default::default());
                let mut umax: f64 = 0.0;
                let mut umin = f64::INFINITY;
                for i in 0..nd {
                    let d = f11[(i, i)].norm();
                    umax = umax.max(d);
                    umin = umin.min(d);
                }
                if !(umin > 0.0 && umax.is_finite()) {
                    return Err(Error::SolverFailure(format!(
                        "zero pivot in front {t} of size {nf}: matrix is singular to working precision"
                    )));
                }
                stats.min_pivot_ratio = stats.min_pivot_ratio.min(umin / umax);
                if nu > 0 {
                    let perm = PermRef::new_checked(&perm_fwd, &perm_bwd, nd);
                    solve::solve_in_place_with_conj(f11.as_ref(), f11.as_ref(), perm, Conj::No, f12.as_mut(), Par::Seq, MemStack::new(&mut mem));
                    matmul(f22.as_mut(), Accum::Add, f21.as_ref(), f12.as_ref(), C64::new(-1.0, 0.0), Par::Seq);
                }
            }
            if node.parent.is_some() {
                pending[t] = Some(f22);
            } else {
                drop(f22);
            }
            stats.factor_entries += nd * nd + 2 * nd * nu;
            match writer.as_mut() {
                Some(out) => {
                    offsets.push(written);
                    write_mat(out, f11.as_ref()).map_err(io_error)?;
                    write_mat(out, f21.as_ref()).map_err(io_error)?;
                    write_mat(out, f12.as_ref()).map_err(io_error)?;
                    written += ((nd * nd + 2 * nd * nu) * ENTRY_BYTES) as u64;
                }
                None => data.push(FrontData { lu: f11, f21, w: f12 }),
            }
            meta.push(FrontMeta {
                vars: vars.clone(),
                update: update.clone(),
                perm_fwd,
                perm_bwd,
            });
        }
        if stats.min_pivot_ratio == f64::INFINITY {
            stats.min_pivot_ratio = 1.0;
        }
        let store = match writer {
            Some(w) => Store::Disk {
                file: Mutex::new(w.into_inner().map_err(|e| io_error(e.into_error()))?),
                offsets,
            },
            None => Store::Memory(data),
        };
        Ok(Self { n, meta, store, stats })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Applies the inverse of the factored matrix to `b` in place.
    pub fn solve_in_place(&self, b: &mut [C64]) -> Result<()> {
        assert_eq!(b.len(), self.n);
        match &self.store {
            Store::Memory(data) => {
                for (f, d) in self.meta.iter().zip(data) {
                    forward(f, &d.lu, &d.f21, b);
                }
                for (f, d) in self.meta.iter().zip(data).rev() {
                    backward(f, &d.w, b);
                }
            }
            Store::Disk { file, offsets } => {
                let mut file = file.lock().map_err(|_| Error::SolverFailure("factor file lock poisoned".into()))?;
                file.seek(SeekFrom::Start(0)).map_err(io_error)?;
                let mut input = BufReader::with_capacity(1 << 20, &mut *file);
                for f in &self.meta {
                    let (nd, nu) = (f.vars.len(), f.update.len());
                    let lu = read_mat(&mut input, nd, nd).map_err(io_error)?;
                    let f21 = read_mat(&mut input, nu, nd).map_err(io_error)?;
                    input.seek_relative((nd * nu * ENTRY_BYTES) as i64).map_err(io_error)?;
                    forward(f, &lu, &f21, b);
                }
                drop(input);
                for (f, &off) in self.meta.iter().zip(offsets).rev() {
                    let (nd, nu) = (f.vars.len(), f.update.len());
                    if nd == 0 || nu == 0 {
                        continue;
                    }
                    file.seek(SeekFrom::Start(off + ((nd * nd + nu * nd) * ENTRY_BYTES) as u64))
                        .map_err(io_error)?;
                    let w = read_mat(&mut BufReader::with_capacity(1 << 20, &mut *file), nd, nu).map_err(io_error)?;
                    backward(f, &w, b);
                }
            }
        }
        Ok(())
    }
}

fn forward(f: &FrontMeta, lu: &Mat<C64>, f21: &Mat<C64>, b: &mut [C64]) {
    let nd = f.vars.len();
    if nd == 0 {
        return;
    }
    let mut z = Mat::<C64>::from_fn(nd, 1, |i, _| b[f.vars[i]]);
    let mut mem = MemBuffer::new(solve::solve_in_place_scratch::<usize, C64>(nd, 1, Par::Seq));
    let perm = PermRef::new_checked(&f.perm_fwd, &f.perm_bwd, nd);
    solve::solve_in_place_with_conj(lu.as_ref(), lu.as_ref(), perm, Conj::No, z.as_mut(), Par::Seq, MemStack::new(&mut mem));
    for i in 0..nd {
        b[f.vars[i]] = z[(i, 0)];
    }
    if !f.update.is_empty() {
        let mut t = Mat::<C64>::zeros(f.update.len(), 1);
        matmul(t.as_mut(), Accum::Replace, f21.as_ref(), z.as_ref(), C64::new(1.0, 0.0), Par::Seq);
        for (ii, &w) in f.update.iter().enumerate() {
            b[w] -= t[(ii, 0)];
        }
    }
}

fn backward(f: &FrontMeta, w: &Mat<C64>, b: &mut [C64]) {
    let nd = f.vars.len();
    if nd == 0 || f.update.is_empty() {
        return;
    }
    let xu = Mat::<C64>::from_fn(f.update.len(), 1, |i, _| b[f.update[i]]);
    let mut t = Mat::<C64>::zeros(nd, 1);
    matmul(t.as_mut(), Accum::Replace, w.as_ref(), xu.as_ref(), C64::new(1.0, 0.0), Par::Seq);
    for i in 0..nd {
        b[f.vars[i]] -= t[(i, 0)];
    }
}
